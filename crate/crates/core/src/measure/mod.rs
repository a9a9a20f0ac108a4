//! Overlap-measure fields.
//!
//! For a design `D` and a structuring element `B` with center voxel `c`, the
//! overlap at lattice translation `t` is
//!
//! ```text
//! OM(t) = |D ∩ (B + t − c)| = Σ_b B(b) · D(t + b − c)
//! ```
//!
//! evaluated for every `t` in the design frame. The transform path rounds to
//! integers and audits the rounding; the direct path counts explicitly.

mod fft;

pub use fft::DEVIATION_LIMIT;
pub(crate) use fft::correlate_fft;

use std::path::Path;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::voxel::{mmn_center, write_vtk_cells, Frame, VoxelGrid};

/// Default limit on voxel visits for [`overlap_field_direct`].
pub const DEFAULT_WORK_BOUND: u128 = 1 << 31;

/// Integer overlap counts over the translation lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapField {
    pub frame: Frame,
    pub values: Vec<u32>,
    /// `|B|` in voxels.
    pub mmn_measure: u32,
    /// Largest distance of a transform output from its rounded integer;
    /// zero for the direct path.
    pub max_deviation: f64,
}

impl OverlapField {
    pub fn get(&self, p: [usize; 3]) -> u32 {
        self.values[self.frame.index(p)]
    }

    pub fn max_value(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn write_vtk(&self, path: impl AsRef<Path>) -> Result<()> {
        write_vtk_cells(path, &self.frame, "overlap", &self.values)
    }
}

fn check_mmn(mmn: &VoxelGrid) -> Result<u32> {
    if mmn.is_empty() {
        return Err(Error::InvalidMmn("structuring element has no voxels".into()));
    }
    u32::try_from(mmn.count()).map_err(|_| Error::InvalidMmn("structuring element too large".into()))
}

/// Overlap field through FFT correlation.
pub fn overlap_field_fft(design: &VoxelGrid, mmn: &VoxelGrid) -> Result<OverlapField> {
    let measure = check_mmn(mmn)?;
    let c = fft::correlate_fft(design, mmn, mmn_center(mmn))?;
    Ok(OverlapField { frame: *design.frame(), values: c.values, mmn_measure: measure, max_deviation: c.max_deviation })
}

/// Overlap field by explicit displacement and counting, refusing inputs that
/// need more than [`DEFAULT_WORK_BOUND`] voxel visits.
pub fn overlap_field_direct(design: &VoxelGrid, mmn: &VoxelGrid) -> Result<OverlapField> {
    overlap_field_direct_bounded(design, mmn, DEFAULT_WORK_BOUND)
}

pub fn overlap_field_direct_bounded(design: &VoxelGrid, mmn: &VoxelGrid, bound: u128) -> Result<OverlapField> {
    let measure = check_mmn(mmn)?;
    let work = design.frame().len() as u128 * measure as u128;
    if work > bound {
        return Err(Error::WorkBoundExceeded { work, bound });
    }
    let values = fft::correlate_direct(design, mmn, mmn_center(mmn));
    Ok(OverlapField { frame: *design.frame(), values, mmn_measure: measure, max_deviation: 0.0 })
}

/// Overlap ratios `OM(t) / |B|` as reduced fractions.
pub fn omr(field: &OverlapField) -> Vec<Ratio<u32>> {
    assert!(field.mmn_measure > 0, "overlap ratio needs a nonempty structuring element");
    field.values.iter().map(|&v| Ratio::new(v, field.mmn_measure)).collect()
}
