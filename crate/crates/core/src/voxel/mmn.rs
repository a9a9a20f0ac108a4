//! Minimum manufacturable neighborhoods (the structuring element).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Frame, VoxelGrid};
use crate::error::{Error, Result};

/// Largest accepted size parameter, in voxels.
const MAX_SIZE: u32 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum MmnShape {
    /// Euclidean ball: voxel centers within `radius` of the center voxel.
    Sphere { radius: u32 },
    /// Axis-aligned box with per-axis half extents (0 gives a single layer).
    Cube { half_extents: [u32; 3] },
    /// L1 ball.
    Diamond { radius: u32 },
    Ellipsoid { semi_axes: [u32; 3] },
    /// Disk of `radius` in xy extruded `height` voxels along z.
    Cylinder { radius: u32, height: u32 },
}

/// Shape of the deposit plus whether it lives in a single z = 0 layer
/// (the 2D element used for layer-by-layer analysis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmnSpec {
    #[serde(flatten)]
    pub shape: MmnShape,
    #[serde(default)]
    pub planar: bool,
}

impl MmnSpec {
    pub fn new(shape: MmnShape) -> Self {
        MmnSpec { shape, planar: false }
    }

    pub fn planar(shape: MmnShape) -> Self {
        MmnSpec { shape, planar: true }
    }

    fn validate(&self) -> Result<()> {
        let sizes: Vec<u32> = match self.shape {
            MmnShape::Sphere { radius } | MmnShape::Diamond { radius } => vec![radius],
            MmnShape::Cube { half_extents } => half_extents.to_vec(),
            MmnShape::Ellipsoid { semi_axes } => semi_axes.to_vec(),
            MmnShape::Cylinder { radius, height } => {
                if height == 0 {
                    return Err(Error::InvalidMmn("cylinder height must be at least 1".into()));
                }
                vec![radius, height]
            }
        };
        if let Some(s) = sizes.iter().find(|&&s| s > MAX_SIZE) {
            return Err(Error::InvalidMmn(format!("size {s} exceeds {MAX_SIZE} voxels")));
        }
        Ok(())
    }

    fn half_extents(&self) -> [u32; 3] {
        let h = match self.shape {
            MmnShape::Sphere { radius } | MmnShape::Diamond { radius } => [radius; 3],
            MmnShape::Cube { half_extents } => half_extents,
            MmnShape::Ellipsoid { semi_axes } => semi_axes,
            MmnShape::Cylinder { radius, height } => [radius, radius, height / 2],
        };
        if self.planar {
            [h[0], h[1], 0]
        } else {
            h
        }
    }

    fn grid_dims(&self) -> [usize; 3] {
        let h = self.half_extents();
        let mut dims = h.map(|e| 2 * e as usize + 1);
        if let (MmnShape::Cylinder { height, .. }, false) = (self.shape, self.planar) {
            dims[2] = height as usize;
        }
        dims
    }

    /// Membership of offset `d` from the center voxel.
    fn contains(&self, d: [i64; 3]) -> bool {
        if self.planar && d[2] != 0 {
            return false;
        }
        let sq = |v: i64| v * v;
        match self.shape {
            MmnShape::Sphere { radius } => {
                sq(d[0]) + sq(d[1]) + sq(d[2]) <= sq(radius as i64)
            }
            MmnShape::Cube { half_extents } => {
                (0..3).all(|a| d[a].abs() <= half_extents[a] as i64)
            }
            MmnShape::Diamond { radius } => d.iter().map(|v| v.abs()).sum::<i64>() <= radius as i64,
            MmnShape::Ellipsoid { semi_axes } => {
                // Σ (d_a / s_a)² ≤ 1, cleared of denominators; a zero semi-axis
                // forces the offset along it to zero.
                if (0..3).any(|a| semi_axes[a] == 0 && d[a] != 0) {
                    return false;
                }
                let s = semi_axes.map(|v| v.max(1) as i128);
                let prod = s[0] * s[0] * s[1] * s[1] * s[2] * s[2];
                let lhs: i128 = (0..3)
                    .map(|a| {
                        let others = prod / (s[a] * s[a]);
                        (d[a] as i128) * (d[a] as i128) * others
                    })
                    .sum();
                lhs <= prod
            }
            MmnShape::Cylinder { radius, .. } => sq(d[0]) + sq(d[1]) <= sq(radius as i64),
        }
    }

    /// Generates the element. The center voxel sits at `dims / 2`.
    pub fn build(&self) -> Result<VoxelGrid> {
        self.validate()?;
        let dims = self.grid_dims();
        let c = dims.map(|d| (d / 2) as i64);
        let g = VoxelGrid::from_fn(Frame::unit(dims), |p| {
            self.contains([p[0] as i64 - c[0], p[1] as i64 - c[1], p[2] as i64 - c[2]])
        });
        if g.is_empty() {
            return Err(Error::InvalidMmn(format!("{self} generates no voxels")));
        }
        Ok(g)
    }
}

/// Center voxel of a structuring-element grid.
pub fn mmn_center(mmn: &VoxelGrid) -> [usize; 3] {
    mmn.dims().map(|d| d / 2)
}

/// Largest Euclidean distance from the center voxel to an occupied voxel.
pub fn mmn_circumradius(mmn: &VoxelGrid) -> f64 {
    let c = mmn_center(mmn);
    mmn.occupied_coords()
        .map(|p| {
            (0..3)
                .map(|a| {
                    let d = p[a] as f64 - c[a] as f64;
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

impl fmt::Display for MmnSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: [u32; 3]| format!("{},{},{}", v[0], v[1], v[2]);
        match self.shape {
            MmnShape::Sphere { radius } => write!(f, "sphere:{radius}"),
            MmnShape::Cube { half_extents } => write!(f, "cube:{}", join(half_extents)),
            MmnShape::Diamond { radius } => write!(f, "diamond:{radius}"),
            MmnShape::Ellipsoid { semi_axes } => write!(f, "ellipsoid:{}", join(semi_axes)),
            MmnShape::Cylinder { radius, height } => write!(f, "cylinder:{radius},{height}"),
        }?;
        if self.planar {
            write!(f, " (planar)")?;
        }
        Ok(())
    }
}

impl FromStr for MmnSpec {
    type Err = Error;

    /// `sphere:R`, `cube:H` or `cube:HX,HY,HZ`, `diamond:R`,
    /// `ellipsoid:A,B,C`, `cylinder:R,H`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidMmn(format!("`{s}`: {why}"));
        let (name, args) = s.trim().split_once(':').ok_or_else(|| bad("expected NAME:ARGS"))?;
        let nums = args
            .split(',')
            .map(|v| v.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("sizes must be non-negative integers"))?;
        let shape = match (name.trim().to_ascii_lowercase().as_str(), nums.as_slice()) {
            ("sphere" | "ball" | "disk", &[r]) => MmnShape::Sphere { radius: r },
            ("cube" | "box" | "square", &[h]) => MmnShape::Cube { half_extents: [h; 3] },
            ("cube" | "box", &[x, y, z]) => MmnShape::Cube { half_extents: [x, y, z] },
            ("diamond", &[r]) => MmnShape::Diamond { radius: r },
            ("ellipsoid", &[a, b, c]) => MmnShape::Ellipsoid { semi_axes: [a, b, c] },
            ("cylinder", &[r, h]) => MmnShape::Cylinder { radius: r, height: h },
            _ => return Err(bad("unknown shape or wrong number of sizes")),
        };
        let spec = MmnSpec::new(shape);
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(spec: &str) -> usize {
        spec.parse::<MmnSpec>().unwrap().build().unwrap().count()
    }

    /// Independent enumeration of integer points in a ball of the given norm.
    fn lattice_ball(r: i64, norm: impl Fn(i64, i64, i64) -> i64, bound: i64) -> usize {
        let mut n = 0;
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    if norm(x, y, z) <= bound {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    #[test]
    fn sizes_by_enumeration() {
        assert_eq!(count("cube:0"), 1);
        assert_eq!(count("cube:1"), 27);
        assert_eq!(count("diamond:1"), 7);
        assert_eq!(count("diamond:2"), lattice_ball(2, |x, y, z| x.abs() + y.abs() + z.abs(), 2));
        assert_eq!(count("sphere:2"), lattice_ball(2, |x, y, z| x * x + y * y + z * z, 4));
        assert_eq!(count("sphere:2"), 33);
        assert_eq!(count("sphere:5"), lattice_ball(5, |x, y, z| x * x + y * y + z * z, 25));
        assert_eq!(count("ellipsoid:2,2,2"), count("sphere:2"));
        assert_eq!(count("cylinder:1,3"), 5 * 3);
    }

    #[test]
    fn planar_elements_are_single_layer() {
        let mut s: MmnSpec = "sphere:2".parse().unwrap();
        s.planar = true;
        let g = s.build().unwrap();
        assert_eq!(g.dims(), [5, 5, 1]);
        assert_eq!(g.count(), 13);
    }

    #[test]
    fn symmetric_shapes_are_reflection_invariant() {
        for spec in ["sphere:3", "cube:1,2,0", "diamond:2", "ellipsoid:3,1,2", "cylinder:2,5"] {
            let g = spec.parse::<MmnSpec>().unwrap().build().unwrap();
            assert_eq!(g.reflect(), g, "{spec}");
        }
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!("cylinder:2,0".parse::<MmnSpec>().is_err());
        assert!("sphere:9999".parse::<MmnSpec>().is_err());
        assert!("torus:1".parse::<MmnSpec>().is_err());
        assert!("cube:1,2".parse::<MmnSpec>().is_err());
        assert!("sphere".parse::<MmnSpec>().is_err());
    }

    #[test]
    fn display_parses_back() {
        for spec in ["sphere:3", "cube:1,2,0", "diamond:2", "ellipsoid:3,1,2", "cylinder:2,5"] {
            let s: MmnSpec = spec.parse().unwrap();
            assert_eq!(s.to_string().parse::<MmnSpec>().unwrap(), s);
        }
    }

    #[test]
    fn circumradius() {
        let g = "cube:1".parse::<MmnSpec>().unwrap().build().unwrap();
        assert!((mmn_circumradius(&g) - 3f64.sqrt()).abs() < 1e-12);
        let g = "diamond:2".parse::<MmnSpec>().unwrap().build().unwrap();
        assert_eq!(mmn_circumradius(&g), 2.0);
    }
}
