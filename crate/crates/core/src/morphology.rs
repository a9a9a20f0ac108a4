//! Motion sets, sweeps and the as-manufactured family.
//!
//! A motion set keeps every translation whose overlap exceeds the threshold,
//! `OM(t) > λ·|B|`. Sweeping the structuring element along it gives the
//! as-manufactured shape. As λ rises the shapes shrink, bounded by the
//! morphological opening (only fully contained placements) and the double
//! dilation (any touching placement). Translations are restricted to the
//! design frame, so material that would be deposited from outside the frame
//! is not modeled.

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{coefficient_serde, coefficient_to_f64, Coefficient, Lambda};
use crate::measure::{correlate_fft, overlap_field_fft, OverlapField};
use crate::voxel::{mmn_center, VoxelGrid};

/// Upper clamp margin of threshold fields: values stay at or below `1 − 2⁻²⁰`.
pub const LAMBDA_EPSILON: f64 = 1.0 / (1u64 << 20) as f64;

/// Compactly supported radial term `coeff · max(0, 1 − ‖t − center‖/radius)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [i64; 3],
    pub radius: f64,
    #[serde(with = "coefficient_serde")]
    pub coeff: Coefficient,
}

impl Bump {
    pub fn basis(&self, p: [i64; 3]) -> f64 {
        let d2: i64 = (0..3).map(|a| (p[a] - self.center[a]).pow(2)).sum();
        let s = 1.0 - (d2 as f64).sqrt() / self.radius;
        if s > 0.0 {
            s * s
        } else {
            0.0
        }
    }
}

/// Spatially varying threshold `λ*(t) = λ₀ + Σ λ_j φ_j(t)`, clamped to
/// `[0, 1 − ε]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmrtField {
    pub lambda0: Lambda,
    pub bumps: Vec<Bump>,
}

impl OmrtField {
    pub fn uniform(lambda0: Lambda) -> Self {
        OmrtField { lambda0, bumps: Vec::new() }
    }

    pub fn with_bump(mut self, center: [i64; 3], radius: f64, coeff: Coefficient) -> Self {
        self.add_bump(center, radius, coeff);
        self
    }

    /// Adds a bump; a bump already centered at `center` absorbs the
    /// coefficient and keeps the larger radius.
    pub fn add_bump(&mut self, center: [i64; 3], radius: f64, coeff: Coefficient) {
        assert!(radius > 0.0, "bump radius must be positive");
        match self.bumps.iter_mut().find(|b| b.center == center) {
            Some(b) => {
                b.coeff += coeff;
                b.radius = b.radius.max(radius);
            }
            None => self.bumps.push(Bump { center, radius, coeff }),
        }
    }

    fn active(&self, p: [i64; 3]) -> impl Iterator<Item = (f64, &Bump)> {
        self.bumps
            .iter()
            .filter(|b| !b.coeff.is_zero())
            .map(move |b| (b.basis(p), b))
            .filter(|(phi, _)| *phi > 0.0)
    }

    /// Clamped threshold at lattice point `p`.
    pub fn eval(&self, p: [i64; 3]) -> f64 {
        let raw = self.lambda0.to_f64() + self.active(p).map(|(phi, b)| phi * coefficient_to_f64(&b.coeff)).sum::<f64>();
        raw.clamp(0.0, 1.0 - LAMBDA_EPSILON)
    }

    /// `overlap > λ*(p) · measure`. Outside every bump's support this is the
    /// exact rational test against `λ₀`.
    pub fn admits(&self, overlap: u32, measure: u32, p: [i64; 3]) -> bool {
        if self.active(p).next().is_none() {
            return self.lambda0.admits(overlap as u64, measure as u64);
        }
        overlap as f64 > self.eval(p) * measure as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Threshold {
    Uniform(Lambda),
    Field(OmrtField),
}

/// Translations of the structuring element admitted by a threshold.
#[derive(Debug, Clone)]
pub struct MotionSet {
    pub grid: VoxelGrid,
    pub threshold: Threshold,
}

pub fn motion_set(field: &OverlapField, lambda: Lambda) -> MotionSet {
    let m = field.mmn_measure as u64;
    let keep: Vec<usize> = field
        .values
        .par_iter()
        .enumerate()
        .filter(|(_, &v)| lambda.admits(v as u64, m))
        .map(|(i, _)| i)
        .collect();
    MotionSet { grid: VoxelGrid::from_indices(field.frame, keep), threshold: Threshold::Uniform(lambda) }
}

pub fn motion_set_nonuniform(field: &OverlapField, omrt: &OmrtField) -> MotionSet {
    let f = field.frame;
    let keep: Vec<usize> = field
        .values
        .par_iter()
        .enumerate()
        .filter(|(i, &v)| omrt.admits(v, field.mmn_measure, f.coords(*i).map(|c| c as i64)))
        .map(|(i, _)| i)
        .collect();
    MotionSet { grid: VoxelGrid::from_indices(f, keep), threshold: Threshold::Field(omrt.clone()) }
}

/// Union of the element placed at every motion, cropped to the frame.
pub fn sweep(motion: &MotionSet, mmn: &VoxelGrid) -> Result<VoxelGrid> {
    sweep_grid(&motion.grid, mmn)
}

pub(crate) fn sweep_grid(motions: &VoxelGrid, mmn: &VoxelGrid) -> Result<VoxelGrid> {
    if motions.is_empty() || mmn.is_empty() {
        return Ok(VoxelGrid::empty(*motions.frame()));
    }
    // x is covered iff Σ_b T(x − b + c) > 0: a correlation with the reflected
    // element anchored at the reflected center.
    let c = mmn_center(mmn);
    let anchor = [0, 1, 2].map(|a| mmn.dims()[a] - 1 - c[a]);
    let cover = correlate_fft(motions, &mmn.reflect(), anchor)?;
    Ok(VoxelGrid::from_indices(
        *motions.frame(),
        cover.values.iter().enumerate().filter(|(_, &v)| v > 0).map(|(i, _)| i),
    ))
}

pub fn as_manufactured(design: &VoxelGrid, mmn: &VoxelGrid, lambda: Lambda) -> Result<VoxelGrid> {
    let field = overlap_field_fft(design, mmn)?;
    sweep(&motion_set(&field, lambda), mmn)
}

pub fn as_manufactured_nonuniform(design: &VoxelGrid, mmn: &VoxelGrid, omrt: &OmrtField) -> Result<VoxelGrid> {
    let field = overlap_field_fft(design, mmn)?;
    sweep(&motion_set_nonuniform(&field, omrt), mmn)
}

/// As-manufactured shapes for strictly ascending thresholds, sharing one
/// overlap field.
pub fn family(design: &VoxelGrid, mmn: &VoxelGrid, lambdas: &[Lambda]) -> Result<Vec<(Lambda, VoxelGrid)>> {
    if let Some(i) = lambdas.windows(2).position(|w| w[0] >= w[1]) {
        return Err(Error::UnsortedLambdas(i + 1));
    }
    let field = overlap_field_fft(design, mmn)?;
    lambdas
        .par_iter()
        .map(|&l| Ok((l, sweep(&motion_set(&field, l), mmn)?)))
        .collect()
}

/// Opening of the design by the element: only fully contained placements.
pub fn extreme_min_ud(design: &VoxelGrid, mmn: &VoxelGrid) -> Result<VoxelGrid> {
    as_manufactured(design, mmn, Lambda::full_containment(mmn.count().max(1) as u64))
}

/// Double dilation: every placement touching the design.
pub fn extreme_max_od(design: &VoxelGrid, mmn: &VoxelGrid) -> Result<VoxelGrid> {
    as_manufactured(design, mmn, Lambda::ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::overlap_field_direct;
    use crate::voxel::{Frame, MmnShape, MmnSpec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn lam(n: u64, d: u64) -> Lambda {
        Lambda::new(n, d).unwrap()
    }

    /// Placements of `b` (center `c`) at every motion, by explicit scattering.
    fn scatter(motions: &VoxelGrid, b: &VoxelGrid) -> VoxelGrid {
        let c = mmn_center(b).map(|v| v as i64);
        let f = *motions.frame();
        let mut out = VoxelGrid::empty(f);
        for t in motions.occupied_coords() {
            for k in b.occupied_coords() {
                let p = [0, 1, 2].map(|a| t[a] as i64 + k[a] as i64 - c[a]);
                if let Some(i) = f.checked_index(p) {
                    out.set_index(i, true);
                }
            }
        }
        out
    }

    /// Placements fully inside `d`, and placements touching `d`.
    fn erosion_dilation(d: &VoxelGrid, b: &VoxelGrid) -> (VoxelGrid, VoxelGrid) {
        let c = mmn_center(b).map(|v| v as i64);
        let offsets: Vec<[i64; 3]> = b.occupied_coords().map(|k| [0, 1, 2].map(|a| k[a] as i64 - c[a])).collect();
        let f = *d.frame();
        let at = |t: [usize; 3], o: &[i64; 3]| d.get_signed([0, 1, 2].map(|a| t[a] as i64 + o[a]));
        let inside = VoxelGrid::from_fn(f, |t| offsets.iter().all(|o| at(t, o)));
        let touching = VoxelGrid::from_fn(f, |t| offsets.iter().any(|o| at(t, o)));
        (inside, touching)
    }

    #[test]
    fn motion_set_examples() {
        let b = VoxelGrid::full(Frame::unit([2, 1, 1]));
        let d = VoxelGrid::from_fn(Frame::unit([4, 1, 1]), |[x, _, _]| x == 1 || x == 2);
        let f = overlap_field_fft(&d, &b).unwrap();
        assert_eq!(f.values, vec![0, 1, 2, 1]);
        let half = motion_set(&f, lam(1, 2));
        assert_eq!(half.grid.occupied().collect::<Vec<_>>(), vec![2]);
        let zero = motion_set(&f, Lambda::ZERO);
        assert_eq!(zero.grid.occupied().collect::<Vec<_>>(), vec![1, 2, 3]);
        let full = motion_set(&f, Lambda::full_containment(2));
        assert_eq!(full.grid.occupied().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn strict_threshold_at_integer_product() {
        // 2 > (2/3)·3 is false.
        let b = VoxelGrid::full(Frame::unit([3, 1, 1]));
        let d = VoxelGrid::from_fn(Frame::unit([3, 1, 1]), |[x, _, _]| x < 2);
        let f = overlap_field_fft(&d, &b).unwrap();
        assert_eq!(f.values, vec![2, 2, 1]);
        assert!(motion_set(&f, lam(2, 3)).grid.is_empty());
        assert_eq!(motion_set(&f, lam(1, 2)).grid.count(), 2);
    }

    #[test]
    fn sweep_examples() {
        let f = Frame::unit([5, 5, 5]);
        let b = MmnSpec::new(MmnShape::Diamond { radius: 1 }).build().unwrap();
        let single = VoxelGrid::from_indices(f, [f.index([2, 2, 2])]);
        let out = sweep_grid(&single, &b).unwrap();
        assert_eq!(out.count(), 7);
        assert!(out.get([1, 2, 2]) && out.get([2, 2, 3]) && !out.get([1, 1, 2]));
        assert!(sweep_grid(&VoxelGrid::empty(f), &b).unwrap().is_empty());
        let dot = VoxelGrid::full(Frame::unit([1, 1, 1]));
        let pair = VoxelGrid::from_indices(f, [f.index([0, 0, 0]), f.index([1, 0, 0])]);
        assert_eq!(sweep_grid(&pair, &dot).unwrap(), pair);
    }

    #[test]
    fn extremes_examples() {
        let cube = MmnSpec::new(MmnShape::Cube { half_extents: [1, 1, 1] }).build().unwrap();
        assert_eq!(extreme_min_ud(&cube, &cube).unwrap(), cube);

        let diamond = MmnSpec::new(MmnShape::Diamond { radius: 1 }).build().unwrap();
        let f = Frame::unit([7, 7, 7]);
        let single = VoxelGrid::from_indices(f, [f.index([3, 3, 3])]);
        let od = extreme_max_od(&single, &diamond).unwrap();
        let expected = VoxelGrid::from_fn(f, |p| p.iter().map(|&v| (v as i64 - 3).abs()).sum::<i64>() <= 2);
        assert_eq!(od, expected);
        assert_eq!(od.count(), 25);

        // A one-voxel bridge between two 3³ blocks cannot host a 3³ element.
        let g = Frame::unit([9, 3, 3]);
        let d = VoxelGrid::from_fn(g, |[x, y, z]| x < 3 || x > 5 || (y == 1 && z == 1));
        let opened = extreme_min_ud(&d, &cube).unwrap();
        let blocks = VoxelGrid::from_fn(g, |[x, _, _]| x < 3 || x > 5);
        assert_eq!(opened, blocks);
    }

    #[test]
    fn l_shape_opening_matches_oracle() {
        let f = Frame::unit([7, 7, 1]);
        // An L of width 2 with a one-voxel spur on the horizontal arm.
        let d = VoxelGrid::from_fn(f, |[x, y, _]| (x < 2 && y < 6) || (y < 2 && x < 6) || (x == 4 && y < 5));
        let b = VoxelGrid::full(Frame::unit([2, 2, 1]));
        let (inside, _) = erosion_dilation(&d, &b);
        let expected = scatter(&inside, &b);
        assert_eq!(extreme_min_ud(&d, &b).unwrap(), expected);
        assert!(!expected.get([4, 3, 0]) && expected.get([4, 1, 0]));
        assert!(expected.is_subset(&d));
    }

    #[test]
    fn nonuniform_reductions() {
        let mut r = rng(5);
        let d = VoxelGrid::from_fn(Frame::unit([10, 9, 8]), |_| r.gen_bool(0.6));
        let b = MmnSpec::new(MmnShape::Sphere { radius: 1 }).build().unwrap();
        let field = overlap_field_fft(&d, &b).unwrap();
        let l = lam(3, 7);
        let base = motion_set(&field, l).grid;
        let plain = OmrtField::uniform(l);
        assert_eq!(motion_set_nonuniform(&field, &plain).grid, base);
        let zero = plain.clone().with_bump([4, 4, 4], 3.0, Coefficient::zero());
        assert_eq!(motion_set_nonuniform(&field, &zero).grid, base);
        // −λ₀ over a radius far beyond the frame leaves λ* below 1/|B|.
        let cancel = plain.with_bump([0, 0, 0], 1e9, -Coefficient::new(3, 7));
        assert!((0..field.values.len()).all(|i| cancel.eval(field.frame.coords(i).map(|v| v as i64)) * 7.0 < 1.0));
        assert_eq!(motion_set_nonuniform(&field, &cancel).grid, motion_set(&field, Lambda::ZERO).grid);
    }

    #[test]
    fn field_clamps_and_accumulates() {
        let mut f = OmrtField::uniform(lam(1, 2)).with_bump([0, 0, 0], 4.0, Coefficient::new(5, 1));
        assert_eq!(f.eval([0, 0, 0]), 1.0 - LAMBDA_EPSILON);
        f.add_bump([0, 0, 0], 2.0, Coefficient::new(-10, 1));
        assert_eq!(f.bumps.len(), 1);
        assert_eq!(f.bumps[0].radius, 4.0);
        assert_eq!(f.eval([0, 0, 0]), 0.0);
        assert_eq!(f.eval([9, 0, 0]), 0.5);
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"-5/1\""), "{json}");
        assert_eq!(serde_json::from_str::<OmrtField>(&json).unwrap(), f);
    }

    #[test]
    fn family_rejects_unsorted() {
        let b = VoxelGrid::full(Frame::unit([1, 1, 1]));
        let d = VoxelGrid::full(Frame::unit([2, 2, 2]));
        assert!(matches!(family(&d, &b, &[lam(1, 2), lam(1, 2)]), Err(Error::UnsortedLambdas(1))));
        assert!(matches!(family(&d, &b, &[lam(1, 2), lam(1, 3)]), Err(Error::UnsortedLambdas(1))));
        let one = family(&d, &b, &[lam(1, 3)]).unwrap();
        assert_eq!(one[0].1, as_manufactured(&d, &b, lam(1, 3)).unwrap());
    }

    fn scene(max: usize) -> impl Strategy<Value = (VoxelGrid, VoxelGrid)> {
        (2..=max, 2..=max, 1..=max, 0u32..2, 0u32..2, 0u32..2, 0.3f64..0.8, any::<u64>()).prop_map(
            |(x, y, z, hx, hy, hz, density, seed)| {
                let mut r = rng(seed);
                let d = VoxelGrid::from_fn(Frame::unit([x, y, z]), |_| r.gen_bool(density));
                let mut b = VoxelGrid::from_fn(Frame::unit([2 * hx as usize + 1, 2 * hy as usize + 1, 2 * hz as usize + 1]), |_| r.gen_bool(0.7));
                b.set(mmn_center(&b), true);
                (d, b)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn sweep_equals_scatter((d, b) in scene(12)) {
            prop_assert_eq!(sweep_grid(&d, &b).unwrap(), scatter(&d, &b));
        }

        #[test]
        fn extremes_match_oracles((d, b) in scene(10)) {
            let (inside, touching) = erosion_dilation(&d, &b);
            let min_ud = extreme_min_ud(&d, &b).unwrap();
            let max_od = extreme_max_od(&d, &b).unwrap();
            prop_assert_eq!(&min_ud, &scatter(&inside, &b));
            prop_assert_eq!(&max_od, &scatter(&touching, &b));
            prop_assert!(min_ud.is_subset(&d) && d.is_subset(&max_od));
            prop_assert_eq!(extreme_min_ud(&min_ud, &b).unwrap(), min_ud);
        }

        #[test]
        fn family_is_nested((d, b) in scene(10)) {
            let m = b.count() as u64;
            let lambdas: Vec<Lambda> = (0..m).map(|k| lam(k, m)).collect();
            let fam = family(&d, &b, &lambdas).unwrap();
            let field = overlap_field_direct(&d, &b).unwrap();
            let lo = extreme_min_ud(&d, &b).unwrap();
            let hi = extreme_max_od(&d, &b).unwrap();
            for w in fam.windows(2) {
                prop_assert!(w[1].1.is_subset(&w[0].1));
                let ta = motion_set(&field, w[0].0).grid;
                let tb = motion_set(&field, w[1].0).grid;
                prop_assert!(tb.is_subset(&ta));
            }
            for (_, g) in &fam {
                prop_assert!(lo.is_subset(g) && g.is_subset(&hi));
            }
        }

        #[test]
        fn lowering_threshold_locally_grows_motions((d, b) in scene(10), cx in 0i64..10, cy in 0i64..10, r in 1.0f64..6.0) {
            let field = overlap_field_fft(&d, &b).unwrap();
            let base = OmrtField::uniform(lam(1, 2));
            let lowered = base.clone().with_bump([cx, cy, 0], r, Coefficient::new(-1, 4));
            let t0 = motion_set_nonuniform(&field, &base).grid;
            let t1 = motion_set_nonuniform(&field, &lowered).grid;
            prop_assert!(t0.is_subset(&t1));
        }
    }
}
