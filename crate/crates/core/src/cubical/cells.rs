//! Cell bookkeeping around lattice vertices.
//!
//! Every cell of the closed-cube complex is identified by its minimal corner
//! `p` (a lattice vertex) and an extent mask `e` (bit `a` set when the cell
//! spans axis `a`). The voxels incident to vertex `p` are `p − 1 + δ` for
//! `δ ∈ {0,1}^k`; their occupancy forms a `2^k`-bit neighborhood mask with bit
//! `δx + 2δy + 4δz`. The cell `(p, e)` is a face of voxel `p − 1 + δ` exactly
//! when `δ_a = 1` on every spanned axis, so membership in a closure depends
//! only on the neighborhood mask. All counting goes through lookup tables over
//! those masks.

use std::sync::LazyLock;

/// Lookup tables for a lattice with `k` axes.
pub(crate) struct VertexTables {
    pub k: usize,
    /// `incident[e]`: neighborhood bits of the voxels having cell `e` as a face.
    pub incident: Vec<u16>,
    /// Cells with minimal corner at the vertex, by dimension, for each mask.
    pub counts: Vec<[u8; 4]>,
    /// Euler contribution of those cells.
    pub chi: Vec<i8>,
    /// Euler contribution of cells present in both closures, indexed by
    /// `mask_a << 2^k | mask_b`.
    pub chi_both: Vec<i8>,
    /// Cell dimension count per dimension present in both closures.
    pub counts_both: Vec<[u8; 4]>,
}

impl VertexTables {
    fn build(k: usize) -> Self {
        let cells = 1usize << k;
        let masks = 1usize << cells;
        let incident: Vec<u16> = (0..cells)
            .map(|e| {
                (0..cells)
                    .filter(|&d| (0..k).all(|a| e >> a & 1 == 0 || d >> a & 1 == 1))
                    .fold(0u16, |acc, d| acc | 1 << d)
            })
            .collect();
        let dim = |e: usize| e.count_ones() as usize;
        let sign = |e: usize| if dim(e) % 2 == 0 { 1i8 } else { -1 };

        let mut counts = vec![[0u8; 4]; masks];
        let mut chi = vec![0i8; masks];
        for m in 0..masks {
            for e in 0..cells {
                if m as u16 & incident[e] != 0 {
                    counts[m][dim(e)] += 1;
                    chi[m] += sign(e);
                }
            }
        }
        let mut chi_both = vec![0i8; masks * masks];
        let mut counts_both = vec![[0u8; 4]; masks * masks];
        for a in 0..masks {
            for b in 0..masks {
                for e in 0..cells {
                    if a as u16 & incident[e] != 0 && b as u16 & incident[e] != 0 {
                        chi_both[a << cells | b] += sign(e);
                        counts_both[a << cells | b][dim(e)] += 1;
                    }
                }
            }
        }
        VertexTables { k, incident, counts, chi, chi_both, counts_both }
    }

    #[inline]
    pub fn both_index(&self, a: u16, b: u16) -> usize {
        (a as usize) << (1usize << self.k) | b as usize
    }
}

pub(crate) static SOLID: LazyLock<VertexTables> = LazyLock::new(|| VertexTables::build(3));
pub(crate) static PLANAR: LazyLock<VertexTables> = LazyLock::new(|| VertexTables::build(2));

/// Neighborhood offsets `δ − 1` in mask-bit order.
pub(crate) const NEIGHBOR_OFFSETS: [[i64; 3]; 8] = [
    [-1, -1, -1],
    [0, -1, -1],
    [-1, 0, -1],
    [0, 0, -1],
    [-1, -1, 0],
    [0, -1, 0],
    [-1, 0, 0],
    [0, 0, 0],
];

/// Neighborhood mask of vertex `p` for an occupancy predicate on signed voxel
/// coordinates. With `k == 2` only the `z = 0` layer is consulted.
#[inline]
pub(crate) fn vertex_mask(k: usize, p: [i64; 3], occupied: impl Fn([i64; 3]) -> bool) -> u16 {
    let mut m = 0u16;
    if k == 3 {
        for (bit, o) in NEIGHBOR_OFFSETS.iter().enumerate() {
            if occupied([p[0] + o[0], p[1] + o[1], p[2] + o[2]]) {
                m |= 1 << bit;
            }
        }
    } else {
        for (bit, o) in NEIGHBOR_OFFSETS[4..].iter().enumerate() {
            if occupied([p[0] + o[0], p[1] + o[1], 0]) {
                m |= 1 << bit;
            }
        }
    }
    m
}

/// Neighborhood bit that voxel `v` occupies in the mask of its vertex `v + d`,
/// `d ∈ {0,1}^k` given as bit pattern.
#[inline]
pub(crate) fn self_bit(d: usize) -> usize {
    // The voxel sits at δ = 1 − d relative to the vertex.
    (!d) & 0b111
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_voxel_tables() {
        // A lone voxel contributes its whole closure through its 8 vertices.
        let t = &*SOLID;
        let mut total = [0usize; 4];
        for d in 0..8 {
            let m = 1u16 << self_bit(d);
            for (i, c) in t.counts[m as usize].iter().enumerate() {
                total[i] += *c as usize;
            }
        }
        assert_eq!(total, [8, 12, 6, 1]);
        assert_eq!(t.chi[0xff], 1 - 3 + 3 - 1);
        assert_eq!(t.chi[0], 0);
    }

    #[test]
    fn planar_tables() {
        let t = &*PLANAR;
        let mut total = [0usize; 4];
        for d in 0..4 {
            let m = 1u16 << (self_bit(d) & 0b11);
            for (i, c) in t.counts[m as usize].iter().enumerate() {
                total[i] += *c as usize;
            }
        }
        assert_eq!(total, [4, 4, 1, 0]);
    }
}
