//! Layer-by-layer decomposition along a build direction.

use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::{Frame, VoxelGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two in-plane axes, in order.
    pub fn plane(self) -> [usize; 2] {
        match self {
            Axis::X => [1, 2],
            Axis::Y => [0, 2],
            Axis::Z => [0, 1],
        }
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidGrid(format!("unknown axis `{other}`"))),
        }
    }
}

/// One layer of a grid: a 2D occupancy image.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub dims: [usize; 2],
    pub spacing: f64,
    pub origin: [f64; 2],
    /// Physical coordinate of the layer's lower face along the slicing axis.
    pub level: f64,
    pub occupancy: FixedBitSet,
}

impl Slice {
    #[inline]
    pub fn get(&self, [u, v]: [usize; 2]) -> bool {
        self.occupancy.contains(u + self.dims[0] * v)
    }

    pub fn count(&self) -> usize {
        self.occupancy.count_ones(..)
    }

    /// The slice as a single-layer grid (`nz == 1`).
    pub fn to_grid(&self) -> VoxelGrid {
        let frame = Frame::new(
            [self.dims[0], self.dims[1], 1],
            self.spacing,
            [self.origin[0], self.origin[1], self.level],
        )
        .expect("slice dims come from a valid grid");
        VoxelGrid::from_bits(frame, self.occupancy.clone()).expect("slice length matches dims")
    }

    pub fn from_grid(g: &VoxelGrid) -> Result<Slice> {
        let f = g.frame();
        if f.dims[2] != 1 {
            return Err(Error::InvalidGrid(format!("{:?} is not a single layer", f.dims)));
        }
        Ok(Slice {
            dims: [f.dims[0], f.dims[1]],
            spacing: f.spacing,
            origin: [f.origin[0], f.origin[1]],
            level: f.origin[2],
            occupancy: g.bits().clone(),
        })
    }
}

/// One slice per layer along `axis`, ordered by layer index.
pub fn extract_slices(g: &VoxelGrid, axis: Axis) -> Vec<Slice> {
    let f = g.frame();
    let a = axis.index();
    let [u, v] = axis.plane();
    let dims = [f.dims[u], f.dims[v]];
    (0..f.dims[a])
        .map(|layer| {
            let mut occ = FixedBitSet::with_capacity(dims[0] * dims[1]);
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let mut p = [0; 3];
                    p[a] = layer;
                    p[u] = i;
                    p[v] = j;
                    if g.get(p) {
                        occ.insert(i + dims[0] * j);
                    }
                }
            }
            Slice {
                dims,
                spacing: f.spacing,
                origin: [f.origin[u], f.origin[v]],
                level: f.origin[a] + layer as f64 * f.spacing,
                occupancy: occ,
            }
        })
        .collect()
}

/// Inverse of [`extract_slices`].
pub fn stack_slices(slices: &[Slice], axis: Axis) -> Result<VoxelGrid> {
    let first = slices
        .first()
        .ok_or_else(|| Error::InvalidGrid("no slices to stack".into()))?;
    if slices.iter().any(|s| s.dims != first.dims || s.spacing != first.spacing) {
        return Err(Error::FrameMismatch("slices have differing dims or spacing".into()));
    }
    let a = axis.index();
    let [u, v] = axis.plane();
    let mut dims = [0; 3];
    dims[a] = slices.len();
    dims[u] = first.dims[0];
    dims[v] = first.dims[1];
    let mut origin = [0.0; 3];
    origin[a] = first.level;
    origin[u] = first.origin[0];
    origin[v] = first.origin[1];
    let mut g = VoxelGrid::empty(Frame::new(dims, first.spacing, origin)?);
    for (layer, s) in slices.iter().enumerate() {
        for idx in s.occupancy.ones() {
            let mut p = [0; 3];
            p[a] = layer;
            p[u] = idx % s.dims[0];
            p[v] = idx / s.dims[0];
            g.set(p, true);
        }
    }
    Ok(g)
}
