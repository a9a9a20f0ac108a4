//! Local correction of the deposition threshold.
//!
//! Each round manufactures the design under the current threshold field,
//! runs the ledger, and places one bump per non-simple feature: a negative
//! one at under-deposition centroids (admit more placements nearby) and a
//! positive one at over-deposition centroids. The design itself is never
//! edited.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::cta::{ledger, CtaReport, FeatureKind};
use crate::error::{Error, Result};
use crate::lambda::{coefficient_serde, Coefficient, Lambda};
use crate::measure::overlap_field_fft;
use crate::morphology::{motion_set_nonuniform, sweep, OmrtField};
use crate::voxel::{mmn_circumradius, VoxelGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectionConfig {
    pub lambda0: Lambda,
    #[serde(with = "coefficient_serde")]
    pub step: Coefficient,
    pub max_iters: usize,
    pub radius: BumpRadius,
    /// Largest allowed growth of `|M △ D|` over the first round, as a
    /// fraction of the design volume.
    pub budget: f64,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig {
            lambda0: Lambda::ZERO,
            step: Coefficient::new(1, 16),
            max_iters: 20,
            radius: BumpRadius::FeaturePlusMmn,
            budget: 0.05,
        }
    }
}

impl CorrectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step <= Coefficient::new(0, 1) {
            return Err(Error::InvalidLambda(format!("correction step {} must be positive", self.step)));
        }
        if let BumpRadius::Fixed { radius } = self.radius {
            if !(radius > 0.0) {
                return Err(Error::InvalidLambda(format!("bump radius {radius} must be positive")));
            }
        }
        if !(self.budget >= 0.0) {
            return Err(Error::InvalidLambda(format!("deviation budget {} must be non-negative", self.budget)));
        }
        Ok(())
    }
}

/// Support radius of the bump placed for a feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum BumpRadius {
    /// Feature bounding radius plus the MMN circumradius, at least one voxel.
    FeaturePlusMmn,
    /// The same radius, in voxels, for every feature.
    Fixed { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Clean,
    IterCap,
    Budget,
    Oscillation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Threshold field the shape of this round was manufactured with.
    pub omrt: OmrtField,
    pub non_simple_ud: usize,
    pub non_simple_od: usize,
    pub delta_chi: i64,
    pub ud_volume_fraction: f64,
    pub od_volume_fraction: f64,
    pub symmetric_difference: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTrace {
    pub iterations: Vec<IterationRecord>,
    pub terminated_by: Termination,
}

impl CorrectionTrace {
    pub fn last(&self) -> &IterationRecord {
        self.iterations.last().expect("a trace records at least one round")
    }
}

/// Adds one bump per non-simple feature of `report`, sized by `cfg.radius`.
pub fn adjust_omrt(omrt: &OmrtField, report: &CtaReport, cfg: &CorrectionConfig, mmn_radius: f64) -> OmrtField {
    let mut next = omrt.clone();
    for f in report.non_simple() {
        let center = f.centroid.map(|c| c.round() as i64);
        let radius = match cfg.radius {
            BumpRadius::FeaturePlusMmn => (f.bounding_radius + mmn_radius).max(1.0),
            BumpRadius::Fixed { radius } => radius,
        };
        let coeff = match f.kind {
            FeatureKind::Under => -cfg.step,
            FeatureKind::Over => cfg.step,
        };
        next.add_bump(center, radius, coeff);
    }
    next
}

fn signature(report: &CtaReport) -> u64 {
    let mut h = DefaultHasher::new();
    for f in report.non_simple() {
        (f.kind, f.ecc, &f.voxels).hash(&mut h);
    }
    h.finish()
}

/// Iterates manufacture, ledger and adjustment until no non-simple feature
/// remains or a stop condition fires. Oscillation means the set of
/// non-simple features returns to one seen before a different set came in
/// between; a set persisting across consecutive rounds is still making
/// progress through the accumulating bumps.
pub fn correct_loop(design: &VoxelGrid, mmn: &VoxelGrid, cfg: &CorrectionConfig) -> Result<(VoxelGrid, CorrectionTrace)> {
    cfg.validate()?;
    let field = overlap_field_fft(design, mmn)?;
    let mmn_radius = mmn_circumradius(mmn);
    let design_volume = design.count().max(1) as f64;

    let mut omrt = OmrtField::uniform(cfg.lambda0);
    let mut iterations = Vec::new();
    let mut seen: Vec<u64> = Vec::new();
    let mut baseline = None;
    loop {
        let shape = sweep(&motion_set_nonuniform(&field, &omrt), mmn)?;
        let report = ledger(design, &shape)?;
        let sym = report.ud.volume + report.od.volume;
        iterations.push(IterationRecord {
            iteration: iterations.len(),
            omrt: omrt.clone(),
            non_simple_ud: report.ud.non_simple,
            non_simple_od: report.od.non_simple,
            delta_chi: report.delta_chi(),
            ud_volume_fraction: report.ud.volume_fraction,
            od_volume_fraction: report.od.volume_fraction,
            symmetric_difference: sym,
        });
        let base = *baseline.get_or_insert(sym);

        let stop = if report.non_simple().next().is_none() {
            Some(Termination::Clean)
        } else if (sym as f64 - base as f64) / design_volume > cfg.budget {
            Some(Termination::Budget)
        } else {
            let sig = signature(&report);
            let revisit = seen.len() >= 2 && seen[..seen.len() - 1].contains(&sig) && seen.last() != Some(&sig);
            seen.push(sig);
            if revisit {
                Some(Termination::Oscillation)
            } else if iterations.len() > cfg.max_iters {
                Some(Termination::IterCap)
            } else {
                None
            }
        };
        if let Some(terminated_by) = stop {
            return Ok((shape, CorrectionTrace { iterations, terminated_by }));
        }
        omrt = adjust_omrt(&omrt, &report, cfg, mmn_radius);
    }
}
