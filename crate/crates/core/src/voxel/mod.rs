//! Binary voxel solids.
//!
//! A [`VoxelGrid`] denotes the union of the closed unit cubes of its occupied
//! voxels. Under that reading the regularized boolean operations reduce to
//! voxelwise logic, so [`VoxelGrid::intersect_reg`] and
//! [`VoxelGrid::subtract_reg`] are plain AND / AND-NOT.

mod io;
mod mmn;
mod slice;

pub use io::{load_grid, save_grid, write_vtk_cells, Format};
pub use mmn::{mmn_center, mmn_circumradius, MmnShape, MmnSpec};
pub use slice::{extract_slices, stack_slices, Axis, Slice};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice extents plus the physical placement of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub dims: [usize; 3],
    /// Edge length of one voxel.
    pub spacing: f64,
    /// Physical coordinate of the minimal corner of voxel (0, 0, 0).
    pub origin: [f64; 3],
}

impl Frame {
    pub fn new(dims: [usize; 3], spacing: f64, origin: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGrid(format!("dims {dims:?} must all be at least 1")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing {spacing} must be positive")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid(format!("origin {origin:?} is not finite")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidGrid(format!("dims {dims:?} overflow")))?;
        Ok(Frame { dims, spacing, origin })
    }

    /// Unit spacing at the origin.
    pub fn unit(dims: [usize; 3]) -> Self {
        Frame::new(dims, 1.0, [0.0; 3]).expect("unit frame dims must be nonzero")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index, x fastest then y then z.
    #[inline]
    pub fn index(&self, [x, y, z]: [usize; 3]) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.dims[0];
        let r = idx / self.dims[0];
        [x, r % self.dims[1], r / self.dims[1]]
    }

    /// Index of a signed coordinate, or `None` outside the lattice.
    #[inline]
    pub fn checked_index(&self, p: [i64; 3]) -> Option<usize> {
        for a in 0..3 {
            if p[a] < 0 || p[a] >= self.dims[a] as i64 {
                return None;
            }
        }
        Some(self.index([p[0] as usize, p[1] as usize, p[2] as usize]))
    }

    pub fn is_planar(&self) -> bool {
        self.dims[2] == 1
    }

    /// Same dims, with spacing and origin equal up to float round-off from
    /// file round trips.
    pub fn same_placement(&self, other: &Frame) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        self.dims == other.dims
            && close(self.spacing, other.spacing)
            && (0..3).all(|i| close(self.origin[i], other.origin[i]))
    }

    pub(crate) fn ensure_same(&self, other: &Frame) -> Result<()> {
        if self.same_placement(other) {
            Ok(())
        } else {
            Err(Error::FrameMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Dense binary occupancy over a [`Frame`].
#[derive(Clone, PartialEq)]
pub struct VoxelGrid {
    frame: Frame,
    occ: FixedBitSet,
}

impl std::fmt::Debug for VoxelGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VoxelGrid")
            .field("frame", &self.frame)
            .field("occupied", &self.count())
            .finish()
    }
}

impl VoxelGrid {
    pub fn empty(frame: Frame) -> Self {
        VoxelGrid { occ: FixedBitSet::with_capacity(frame.len()), frame }
    }

    pub fn full(frame: Frame) -> Self {
        let mut g = Self::empty(frame);
        g.occ.insert_range(..);
        g
    }

    pub fn from_fn(frame: Frame, mut f: impl FnMut([usize; 3]) -> bool) -> Self {
        let mut g = Self::empty(frame);
        let [nx, ny, nz] = frame.dims;
        let mut idx = 0;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if f([x, y, z]) {
                        g.occ.insert(idx);
                    }
                    idx += 1;
                }
            }
        }
        g
    }

    /// Builds a grid from a bit set whose length must equal the frame size.
    pub fn from_bits(frame: Frame, occ: FixedBitSet) -> Result<Self> {
        if occ.len() != frame.len() {
            return Err(Error::InvalidGrid(format!(
                "occupancy has {} bits but the frame holds {}",
                occ.len(),
                frame.len()
            )));
        }
        Ok(VoxelGrid { frame, occ })
    }

    pub fn from_indices(frame: Frame, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut g = Self::empty(frame);
        for i in indices {
            g.occ.insert(i);
        }
        g
    }

    #[inline]
    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.frame.dims
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.occ
    }

    #[inline]
    pub fn get(&self, p: [usize; 3]) -> bool {
        self.occ.contains(self.frame.index(p))
    }

    #[inline]
    pub fn get_index(&self, idx: usize) -> bool {
        self.occ.contains(idx)
    }

    /// Out-of-lattice coordinates read as empty.
    #[inline]
    pub fn get_signed(&self, p: [i64; 3]) -> bool {
        self.frame.checked_index(p).is_some_and(|i| self.occ.contains(i))
    }

    pub fn set(&mut self, p: [usize; 3], value: bool) {
        let i = self.frame.index(p);
        self.occ.set(i, value);
    }

    pub fn set_index(&mut self, idx: usize, value: bool) {
        self.occ.set(idx, value);
    }

    /// Occupied voxel count, i.e. volume in voxels.
    pub fn count(&self) -> usize {
        self.occ.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_clear()
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.occ.ones()
    }

    pub fn occupied_coords(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.occ.ones().map(|i| self.frame.coords(i))
    }

    pub fn is_subset(&self, other: &VoxelGrid) -> bool {
        self.frame == other.frame && self.occ.is_subset(&other.occ)
    }

    /// Regularized intersection `a ∩* b`.
    pub fn intersect_reg(&self, other: &VoxelGrid) -> Result<VoxelGrid> {
        self.frame.ensure_same(&other.frame)?;
        let mut occ = self.occ.clone();
        occ.intersect_with(&other.occ);
        Ok(VoxelGrid { frame: self.frame, occ })
    }

    /// Regularized difference `a −* b`.
    pub fn subtract_reg(&self, other: &VoxelGrid) -> Result<VoxelGrid> {
        self.frame.ensure_same(&other.frame)?;
        let mut occ = self.occ.clone();
        occ.difference_with(&other.occ);
        Ok(VoxelGrid { frame: self.frame, occ })
    }

    pub fn union_set(&self, other: &VoxelGrid) -> Result<VoxelGrid> {
        self.frame.ensure_same(&other.frame)?;
        let mut occ = self.occ.clone();
        occ.union_with(&other.occ);
        Ok(VoxelGrid { frame: self.frame, occ })
    }

    /// Complement within the frame.
    pub fn complement(&self) -> VoxelGrid {
        let mut occ = self.occ.clone();
        occ.toggle_range(..);
        VoxelGrid { frame: self.frame, occ }
    }

    /// Voxel count of the symmetric difference.
    pub fn symmetric_difference_count(&self, other: &VoxelGrid) -> Result<usize> {
        self.frame.ensure_same(&other.frame)?;
        Ok(self.occ.symmetric_difference_count(&other.occ))
    }

    /// Point reflection about the grid center.
    pub fn reflect(&self) -> VoxelGrid {
        let [nx, ny, nz] = self.frame.dims;
        let mut out = Self::empty(self.frame);
        for [x, y, z] in self.occupied_coords() {
            out.set([nx - 1 - x, ny - 1 - y, nz - 1 - z], true);
        }
        out
    }

    /// Inclusive bounding box of the occupied voxels.
    pub fn bounding_box(&self) -> Option<([usize; 3], [usize; 3])> {
        let mut it = self.occupied_coords();
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for p in it {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Some((lo, hi))
    }

    /// Same occupancy placed in a different frame of identical dims.
    pub fn with_frame(&self, frame: Frame) -> Result<VoxelGrid> {
        if frame.dims != self.frame.dims {
            return Err(Error::FrameMismatch(format!(
                "cannot move dims {:?} into {:?}",
                self.frame.dims, frame.dims
            )));
        }
        Ok(VoxelGrid { frame, occ: self.occ.clone() })
    }
}
