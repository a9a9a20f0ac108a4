//! Connected-component labeling with union-find.

use serde::{Deserialize, Serialize};

use crate::voxel::{Frame, VoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Connectivity {
    /// Voxels sharing a face, edge or vertex are adjacent.
    Vertex26,
    /// Only face-sharing voxels are adjacent.
    Face6,
}

impl Connectivity {
    /// Neighbors that precede a voxel in raster order.
    fn backward_offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for dz in -1..=0i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let before = dz < 0 || (dz == 0 && (dy < 0 || (dy == 0 && dx < 0)));
                    if !before {
                        continue;
                    }
                    let nonzero = [dx, dy, dz].iter().filter(|&&v| v != 0).count();
                    if self == Connectivity::Vertex26 || nonzero == 1 {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Component labels per voxel: 0 for background, `1..=count` otherwise.
/// Labels ascend with each component's minimal voxel index.
#[derive(Debug, Clone)]
pub struct Labeling {
    pub frame: Frame,
    pub labels: Vec<u32>,
    pub count: usize,
}

impl Labeling {
    /// Voxel indices of every component, in ascending index order. Entry `i`
    /// belongs to label `i + 1`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut sizes = vec![0usize; self.count];
        for &l in &self.labels {
            if l != 0 {
                sizes[l as usize - 1] += 1;
            }
        }
        let mut out: Vec<Vec<usize>> = sizes.into_iter().map(Vec::with_capacity).collect();
        for (i, &l) in self.labels.iter().enumerate() {
            if l != 0 {
                out[l as usize - 1].push(i);
            }
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.count];
        for &l in &self.labels {
            if l != 0 {
                sizes[l as usize - 1] += 1;
            }
        }
        sizes
    }
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        let p = parent[i as usize];
        parent[i as usize] = parent[p as usize];
        i = p;
    }
    i
}

/// Labels the occupied voxels of `g` under the given adjacency.
pub fn label_components(g: &VoxelGrid, connectivity: Connectivity) -> Labeling {
    let frame = *g.frame();
    let n = frame.len();
    assert!(n < u32::MAX as usize, "grid too large for 32-bit labels");
    let [nx, ny, nz] = frame.dims.map(|d| d as i64);
    let offsets: Vec<([i64; 3], i64)> = connectivity
        .backward_offsets()
        .into_iter()
        .map(|o| (o, o[0] + nx * (o[1] + ny * o[2])))
        .collect();

    // Roots are always the smallest index in their set.
    let mut parent: Vec<u32> = (0..n as u32).collect();
    for i in g.occupied() {
        let [x, y, z] = frame.coords(i).map(|v| v as i64);
        for &(o, delta) in &offsets {
            let (qx, qy, qz) = (x + o[0], y + o[1], z + o[2]);
            if qx < 0 || qy < 0 || qz < 0 || qx >= nx || qy >= ny || qz >= nz {
                continue;
            }
            let j = (i as i64 + delta) as usize;
            if !g.get_index(j) {
                continue;
            }
            let ri = find(&mut parent, i as u32);
            let rj = find(&mut parent, j as u32);
            if ri != rj {
                let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                parent[hi as usize] = lo;
            }
        }
    }

    let mut labels = vec![0u32; n];
    let mut count = 0u32;
    for i in g.occupied() {
        let r = find(&mut parent, i as u32) as usize;
        if r == i {
            count += 1;
            labels[i] = count;
        } else {
            labels[i] = labels[r];
        }
    }
    Labeling { frame, labels, count: count as usize }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    use rand::{Rng, SeedableRng};

    /// Breadth-first flood fill, written independently of the union-find pass.
    fn flood_fill_count(g: &VoxelGrid, full: bool) -> (usize, Vec<u32>) {
        let f = g.frame();
        let mut labels = vec![0u32; f.len()];
        let mut count = 0;
        for start in g.occupied() {
            if labels[start] != 0 {
                continue;
            }
            count += 1;
            labels[start] = count;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                let p = f.coords(i).map(|v| v as i64);
                for dz in -1..=1i64 {
                    for dy in -1..=1i64 {
                        for dx in -1..=1i64 {
                            let manhattan = dx.abs() + dy.abs() + dz.abs();
                            if manhattan == 0 || (!full && manhattan != 1) {
                                continue;
                            }
                            if let Some(j) = f.checked_index([p[0] + dx, p[1] + dy, p[2] + dz]) {
                                if g.get_index(j) && labels[j] == 0 {
                                    labels[j] = count;
                                    queue.push_back(j);
                                }
                            }
                        }
                    }
                }
            }
        }
        (count as usize, labels)
    }

    #[test]
    fn empty_grid() {
        let l = label_components(&VoxelGrid::empty(Frame::unit([4, 4, 4])), Connectivity::Vertex26);
        assert_eq!(l.count, 0);
    }

    #[test]
    fn corner_contact() {
        let g = VoxelGrid::from_fn(Frame::unit([2, 2, 2]), |p| p == [0, 0, 0] || p == [1, 1, 1]);
        assert_eq!(label_components(&g, Connectivity::Vertex26).count, 1);
        assert_eq!(label_components(&g, Connectivity::Face6).count, 2);
    }

    #[test]
    fn matches_flood_fill_on_random_grids() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for density in [0.1, 0.25, 0.4] {
            let g = VoxelGrid::from_fn(Frame::unit([16, 16, 16]), |_| rng.gen_bool(density));
            for (conn, full) in [(Connectivity::Vertex26, true), (Connectivity::Face6, false)] {
                let l = label_components(&g, conn);
                let (count, oracle) = flood_fill_count(&g, full);
                assert_eq!(l.count, count);
                // Flood fill also visits seeds in raster order, so labels coincide.
                assert_eq!(l.labels, oracle);
            }
        }
    }

    #[test]
    fn members_partition_occupancy() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = VoxelGrid::from_fn(Frame::unit([9, 7, 5]), |_| rng.gen_bool(0.3));
        let l = label_components(&g, Connectivity::Vertex26);
        let members = l.members();
        assert_eq!(members.iter().map(Vec::len).sum::<usize>(), g.count());
        for w in members.windows(2) {
            assert!(w[0][0] < w[1][0]);
        }
        assert_eq!(l.sizes(), members.iter().map(Vec::len).collect::<Vec<_>>());
    }
}
