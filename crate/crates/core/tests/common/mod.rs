//! Scenes and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxcta::voxel::{mmn_center, MmnSpec};
use voxcta::{Frame, VoxelGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn grid(dims: [usize; 3], f: impl FnMut([usize; 3]) -> bool) -> VoxelGrid {
    VoxelGrid::from_fn(Frame::unit(dims), f)
}

pub fn noise(r: &mut ChaCha8Rng, dims: [usize; 3], density: f64) -> VoxelGrid {
    grid(dims, |_| r.gen_bool(density))
}

/// Union of random balls.
pub fn blobs(r: &mut ChaCha8Rng, dims: [usize; 3], count: usize, radius: std::ops::Range<f64>) -> VoxelGrid {
    let balls: Vec<([f64; 3], f64)> = (0..count)
        .map(|_| {
            let c = dims.map(|n| r.gen_range(0.0..n as f64));
            (c, r.gen_range(radius.clone()))
        })
        .collect();
    grid(dims, |p| {
        balls.iter().any(|(c, rad)| (0..3).map(|a| (p[a] as f64 - c[a]).powi(2)).sum::<f64>() <= rad * rad)
    })
}

pub fn mmn(spec: &str) -> VoxelGrid {
    spec.parse::<MmnSpec>().unwrap().build().unwrap()
}

fn offsets(b: &VoxelGrid) -> Vec<[i64; 3]> {
    let c = mmn_center(b).map(|v| v as i64);
    b.occupied_coords().map(|k| [0, 1, 2].map(|a| k[a] as i64 - c[a])).collect()
}

/// Translations whose placed element lies inside `d`.
pub fn erosion(d: &VoxelGrid, b: &VoxelGrid) -> VoxelGrid {
    let offs = offsets(b);
    VoxelGrid::from_fn(*d.frame(), |t| offs.iter().all(|o| d.get_signed([0, 1, 2].map(|a| t[a] as i64 + o[a]))))
}

/// Translations whose placed element touches `d`.
pub fn touching(d: &VoxelGrid, b: &VoxelGrid) -> VoxelGrid {
    let offs = offsets(b);
    VoxelGrid::from_fn(*d.frame(), |t| offs.iter().any(|o| d.get_signed([0, 1, 2].map(|a| t[a] as i64 + o[a]))))
}

/// Union of the element placed at every motion, cropped to the frame.
pub fn scatter(motions: &VoxelGrid, b: &VoxelGrid) -> VoxelGrid {
    let offs = offsets(b);
    let f = *motions.frame();
    let mut out = VoxelGrid::empty(f);
    for t in motions.occupied_coords() {
        for o in &offs {
            if let Some(i) = f.checked_index([0, 1, 2].map(|a| t[a] as i64 + o[a])) {
                out.set_index(i, true);
            }
        }
    }
    out
}

/// Plain nested-loop overlap count, written without the library's helpers.
pub fn overlap_by_hand(d: &VoxelGrid, b: &VoxelGrid) -> Vec<u32> {
    let offs = offsets(b);
    let f = *d.frame();
    (0..f.len())
        .map(|i| {
            let t = f.coords(i);
            offs.iter().filter(|o| d.get_signed([0, 1, 2].map(|a| t[a] as i64 + o[a]))).count() as u32
        })
        .collect()
}

/// Overlap count for a single translation.
pub fn overlap_at(d: &VoxelGrid, b: &VoxelGrid, t: [usize; 3]) -> u32 {
    offsets(b).iter().filter(|o| d.get_signed([0, 1, 2].map(|a| t[a] as i64 + o[a]))).count() as u32
}

/// Toggles each voxel with probability `p`.
pub fn perturb(r: &mut ChaCha8Rng, g: &VoxelGrid, p: f64) -> VoxelGrid {
    VoxelGrid::from_fn(*g.frame(), |q| g.get(q) ^ r.gen_bool(p))
}

type Cell = ([i64; 3], u8);

/// Every face of every occupied closed cube, enumerated per voxel.
fn closure_cells(g: &VoxelGrid) -> BTreeSet<Cell> {
    let mut cells = BTreeSet::new();
    for v in g.occupied_coords() {
        for e in 0u8..8 {
            for d in 0u8..8 {
                // Faces along spanned axes start at the voxel corner.
                if d & e != 0 {
                    continue;
                }
                let corner = [0, 1, 2].map(|a| v[a] as i64 + (d >> a & 1) as i64);
                cells.insert((corner, e));
            }
        }
    }
    cells
}

/// Euler characteristic from an explicit per-voxel cell enumeration.
pub fn euler_by_cells(g: &VoxelGrid) -> i64 {
    closure_cells(g).iter().map(|c| if c.1.count_ones() % 2 == 0 { 1 } else { -1 }).sum()
}

fn gf2_rank(columns: Vec<Vec<u64>>) -> usize {
    let mut pivots: HashMap<usize, Vec<u64>> = HashMap::new();
    let mut rank = 0;
    for mut col in columns {
        loop {
            let Some(top) = col.iter().enumerate().rev().find(|(_, w)| **w != 0).map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
            else {
                break;
            };
            match pivots.get(&top) {
                Some(p) => {
                    for (a, b) in col.iter_mut().zip(p) {
                        *a ^= b;
                    }
                }
                None => {
                    pivots.insert(top, col);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

/// Betti numbers `[β₀, β₁, β₂]` of the closed voxel set from boundary
/// matrix ranks over GF(2). Intended for grids of a few hundred voxels.
pub fn homology_betti(g: &VoxelGrid) -> [usize; 3] {
    let cells = closure_cells(g);
    let mut by_dim: [Vec<Cell>; 4] = Default::default();
    for c in &cells {
        by_dim[c.1.count_ones() as usize].push(*c);
    }
    let index: [HashMap<Cell, usize>; 4] = std::array::from_fn(|k| by_dim[k].iter().enumerate().map(|(i, c)| (*c, i)).collect());
    let rank = |k: usize| -> usize {
        if k == 0 || k > 3 {
            return 0;
        }
        let rows = by_dim[k - 1].len();
        let columns = by_dim[k]
            .iter()
            .map(|&(corner, e)| {
                let mut col = vec![0u64; rows.div_ceil(64)];
                for a in 0..3 {
                    if e >> a & 1 == 0 {
                        continue;
                    }
                    let f = e & !(1 << a);
                    let mut far = corner;
                    far[a] += 1;
                    for c in [corner, far] {
                        let r = index[k - 1][&(c, f)];
                        col[r / 64] ^= 1 << (r % 64);
                    }
                }
                col
            })
            .collect();
        gf2_rank(columns)
    };
    let r: Vec<usize> = (0..=4).map(rank).collect();
    [0, 1, 2].map(|k| by_dim[k].len() - r[k] - r[k + 1])
}

/// A 3×3 beam along x whose top row is missing over two voxels.
pub fn notched_beam() -> VoxelGrid {
    grid([20, 5, 5], |[x, y, z]| {
        (1..19).contains(&x) && (1..4).contains(&y) && (1..4).contains(&z) && !(z == 3 && (9..11).contains(&x))
    })
}

/// A one-voxel-thick plate filling its frame except a hole just below the
/// top edge.
pub fn edge_hole_plate() -> VoxelGrid {
    grid([7, 1, 5], |[x, _, z]| !(x == 3 && z == 3))
}

/// Plate lattice: 5 × 4 cells of pitch 8 with 3-wide beams, 3 layers thick,
/// plus a pendant block. Most holes are 5×5; `small` cells get a 1×1 hole
/// instead, and `thin` lists horizontal beams `(column, row)` thinned to one
/// voxel. The pendant hangs off the right edge on a one-voxel link.
pub struct Lattice {
    pub grid: VoxelGrid,
    pub holes: usize,
}

pub fn lattice() -> Lattice {
    let (cols, rows, pitch, beam) = (5usize, 4usize, 8usize, 3usize);
    let small = [(1usize, 1usize), (3, 2), (0, 3)];
    let thin = [(2usize, 1usize), (4, 2)];
    let margin = 2usize;
    let w = cols * pitch + beam;
    let h = rows * pitch + beam;
    let dims = [w + 2 * margin + 7, h + 2 * margin, 3 + 2 * margin];
    let g = grid(dims, |[x, y, z]| {
        if !(margin..margin + 3).contains(&z) || y < margin || y >= margin + h {
            return false;
        }
        let yy = y - margin;
        if x < margin {
            return false;
        }
        let xx = x - margin;
        if xx >= w {
            // Pendant: a one-voxel link to a 4×4 block.
            let (px, py) = (xx - w, yy);
            let link = px < 3 && py == 9;
            let block = (3..7).contains(&px) && (7..11).contains(&py);
            return link || block;
        }
        let (cx, ox) = (xx / pitch, xx % pitch);
        let (cy, oy) = (yy / pitch, yy % pitch);
        if cx >= cols || cy >= rows || ox < beam || oy < beam {
            // Beams, including the thinned horizontal ones.
            if cx < cols && cy >= 1 && cy <= rows && oy < beam && ox >= beam {
                let thinned = thin.contains(&(cx, cy - 1)) && cy < rows;
                if thinned {
                    return oy == 1;
                }
            }
            return true;
        }
        if small.contains(&(cx, cy)) {
            // Solid cell with a 1×1 hole in its middle.
            return !(ox == beam + 2 && oy == beam + 2);
        }
        false
    });
    Lattice { grid: g, holes: cols * rows }
}
