//! Comparative topological analysis of a design against a manufactured shape.
//!
//! The common region `C = D ∩ M`, the under-deposition `U = D − M` and the
//! over-deposition `O = M − D` partition both shapes. Each vertex-26
//! component `F` of `U` or `O` is a deviation feature. Its Euler
//! characteristic contribution is `χ[F] − χ[∂_C F]`, where the cut boundary
//! `∂_C F` is the set of cells shared by the closures of `F` and `C`. Distinct
//! components share no cells, so
//!
//! ```text
//! χ[M] − χ[D] = Σ_O ecc − Σ_U ecc
//! ```
//!
//! holds exactly. Features with zero contribution are simple.
//!
//! Per-feature counts never build a cell list: every lattice vertex touched by
//! `F` is visited once, by the voxel of `F` that holds the lowest bit of its
//! neighborhood mask, and the vertex tables supply the Euler contributions of
//! the cells cornered there.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cubical::cells::{self_bit, vertex_mask};
use crate::cubical::{
    betti_in, complex_with_cells, euler_of, intersect_complexes, label_components, Connectivity, CubicalComplex,
    Embedding, TopologySummary,
};
use crate::error::{Error, Result};
use crate::voxel::{Frame, VoxelGrid};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    /// Designed material that is missing.
    #[serde(rename = "UD")]
    Under,
    /// Deposited material that was not designed.
    #[serde(rename = "OD")]
    Over,
}

impl FeatureKind {
    /// Sign of the feature's contribution to `χ[M] − χ[D]`.
    pub fn sign(self) -> i64 {
        match self {
            FeatureKind::Under => -1,
            FeatureKind::Over => 1,
        }
    }
}

/// One connected component of the under- or over-deposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationFeature {
    pub kind: FeatureKind,
    /// Component label within its kind, ascending with the minimal voxel index.
    pub id: usize,
    /// Linear voxel indices of the feature, ascending.
    #[serde(skip)]
    pub voxels: Vec<usize>,
    pub voxel_count: usize,
    pub chi_solid: i64,
    pub chi_cut: i64,
    /// Cell counts of the cut boundary; no 3-cells ever occur.
    pub cut_boundary: CubicalComplex,
    pub ecc: i64,
    pub simple: bool,
    pub centroid: [f64; 3],
    /// Largest distance from the centroid to a voxel center.
    pub bounding_radius: f64,
    pub bbox_min: [usize; 3],
    pub bbox_max: [usize; 3],
}

impl DeviationFeature {
    /// `+ecc` for over-deposition, `−ecc` for under-deposition.
    pub fn signed_contribution(&self) -> i64 {
        self.kind.sign() * self.ecc
    }

    pub fn solid(&self, frame: Frame) -> VoxelGrid {
        VoxelGrid::from_indices(frame, self.voxels.iter().copied())
    }
}

/// Aggregates over the features of one kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub volume: usize,
    /// Volume divided by the design volume (0 for an empty design).
    pub volume_fraction: f64,
    pub components: usize,
    pub simple: usize,
    pub non_simple: usize,
    pub sum_ecc: i64,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub decompose: f64,
    pub ud: f64,
    pub od: f64,
    pub global: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtaReport {
    pub schema_version: u32,
    pub embedding: Embedding,
    pub frame: Frame,
    pub chi_design: i64,
    pub chi_manufactured: i64,
    pub design: TopologySummary,
    pub manufactured: TopologySummary,
    pub design_volume: usize,
    /// Sorted by `(|ecc|` descending, size descending, id ascending, kind`)`.
    pub features: Vec<DeviationFeature>,
    pub sum_signed_ecc: i64,
    pub identity_ok: bool,
    pub ud: KindSummary,
    pub od: KindSummary,
    pub timing: Timing,
}

impl CtaReport {
    pub fn delta_chi(&self) -> i64 {
        self.chi_manufactured - self.chi_design
    }

    pub fn non_simple(&self) -> impl Iterator<Item = &DeviationFeature> {
        self.features.iter().filter(|f| !f.simple)
    }

    /// Per-voxel ECC of the feature covering it, 0 elsewhere.
    pub fn ecc_field(&self) -> Vec<i64> {
        let mut out = vec![0i64; self.frame.len()];
        for f in &self.features {
            for &i in &f.voxels {
                out[i] = f.ecc;
            }
        }
        out
    }

    /// Per-voxel feature rank (1-based position in `features`), positive for
    /// over-deposition and negative for under-deposition.
    pub fn feature_labels(&self) -> Vec<i64> {
        let mut out = vec![0i64; self.frame.len()];
        for (rank, f) in self.features.iter().enumerate() {
            for &i in &f.voxels {
                out[i] = f.kind.sign() * (rank as i64 + 1);
            }
        }
        out
    }
}

/// Common region, under-deposition and over-deposition.
pub fn decompose(design: &VoxelGrid, manufactured: &VoxelGrid) -> Result<(VoxelGrid, VoxelGrid, VoxelGrid)> {
    let c = design.intersect_reg(manufactured)?;
    let u = design.subtract_reg(manufactured)?;
    let o = manufactured.subtract_reg(design)?;
    Ok((c, u, o))
}

/// `closure(F) ∩ closure(C)` as an explicit complex.
pub fn cut_boundary(feature: &VoxelGrid, c: &VoxelGrid) -> Result<CubicalComplex> {
    cut_boundary_in(feature, c, Embedding::Solid)
}

pub fn cut_boundary_in(feature: &VoxelGrid, c: &VoxelGrid, embedding: Embedding) -> Result<CubicalComplex> {
    if !feature.intersect_reg(c)?.is_empty() {
        return Err(Error::Internal("feature overlaps the common region".into()));
    }
    let cut = intersect_complexes(&complex_with_cells(feature, embedding)?, &complex_with_cells(c, embedding)?)?;
    if cut.counts[3] != 0 {
        return Err(Error::Internal("cut boundary contains a 3-cell".into()));
    }
    Ok(cut)
}

struct Counts {
    chi_solid: i64,
    chi_cut: i64,
    cut: [usize; 4],
}

/// χ of the feature's closure and of its cut boundary, by vertex ownership.
fn feature_counts(voxels: &[usize], member: impl Fn(usize) -> bool, c: &VoxelGrid, embedding: Embedding) -> Counts {
    let t = embedding.tables();
    let f = c.frame();
    let in_f = |p: [i64; 3]| f.checked_index(p).is_some_and(&member);
    let corners = 1usize << t.k;
    let mut out = Counts { chi_solid: 0, chi_cut: 0, cut: [0; 4] };
    for &v in voxels {
        let [x, y, z] = f.coords(v).map(|q| q as i64);
        for d in 0..corners {
            let p = [x + (d & 1) as i64, y + (d >> 1 & 1) as i64, z + (d >> 2 & 1) as i64];
            let mf = vertex_mask(t.k, p, in_f);
            if mf.trailing_zeros() as usize != self_bit(d) & (corners - 1) {
                continue;
            }
            let mc = vertex_mask(t.k, p, |q| c.get_signed(q));
            out.chi_solid += t.chi[mf as usize] as i64;
            let both = t.both_index(mf, mc);
            out.chi_cut += t.chi_both[both] as i64;
            for (a, n) in out.cut.iter_mut().zip(t.counts_both[both]) {
                *a += n as usize;
            }
        }
    }
    out
}

fn describe(kind: FeatureKind, id: usize, voxels: Vec<usize>, counts: Counts, frame: &Frame) -> DeviationFeature {
    let n = voxels.len() as f64;
    let mut sum = [0.0f64; 3];
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for &v in &voxels {
        let p = frame.coords(v);
        for a in 0..3 {
            sum[a] += p[a] as f64;
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let centroid = sum.map(|s| s / n);
    let bounding_radius = voxels
        .iter()
        .map(|&v| {
            let p = frame.coords(v);
            (0..3).map(|a| (p[a] as f64 - centroid[a]).powi(2)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    let ecc = counts.chi_solid - counts.chi_cut;
    DeviationFeature {
        kind,
        id,
        voxel_count: voxels.len(),
        voxels,
        chi_solid: counts.chi_solid,
        chi_cut: counts.chi_cut,
        cut_boundary: CubicalComplex::from_counts(counts.cut),
        ecc,
        simple: ecc == 0,
        centroid,
        bounding_radius,
        bbox_min: lo,
        bbox_max: hi,
    }
}

fn sort_features(features: &mut [DeviationFeature]) {
    features.sort_by(|a, b| {
        b.ecc
            .abs()
            .cmp(&a.ecc.abs())
            .then(b.voxel_count.cmp(&a.voxel_count))
            .then(a.id.cmp(&b.id))
            .then(a.kind.cmp(&b.kind))
    });
}

/// One feature per vertex-26 component of `region`, ranked by significance.
pub fn extract_features(region: &VoxelGrid, kind: FeatureKind, c: &VoxelGrid) -> Result<Vec<DeviationFeature>> {
    extract_features_in(region, kind, c, Embedding::Solid)
}

pub fn extract_features_in(
    region: &VoxelGrid,
    kind: FeatureKind,
    c: &VoxelGrid,
    embedding: Embedding,
) -> Result<Vec<DeviationFeature>> {
    region.frame().ensure_same(c.frame())?;
    embedding.check(region)?;
    let labels = label_components(region, Connectivity::Vertex26);
    let frame = *region.frame();
    let mut features: Vec<DeviationFeature> = labels
        .members()
        .into_par_iter()
        .enumerate()
        .map(|(i, voxels)| {
            let id = i + 1;
            let counts = feature_counts(&voxels, |q| labels.labels[q] == id as u32, c, embedding);
            describe(kind, id, voxels, counts, &frame)
        })
        .collect();
    sort_features(&mut features);
    Ok(features)
}

fn summarize(features: &[DeviationFeature], kind: FeatureKind, design_volume: usize) -> KindSummary {
    let mut s = KindSummary::default();
    for f in features.iter().filter(|f| f.kind == kind) {
        s.volume += f.voxel_count;
        s.components += 1;
        if f.simple {
            s.simple += 1;
        } else {
            s.non_simple += 1;
        }
        s.sum_ecc += f.ecc;
    }
    s.volume_fraction = if design_volume == 0 { 0.0 } else { s.volume as f64 / design_volume as f64 };
    s
}

/// Full comparison of a design and a manufactured shape.
pub fn ledger(design: &VoxelGrid, manufactured: &VoxelGrid) -> Result<CtaReport> {
    ledger_in(design, manufactured, Embedding::Solid)
}

pub fn ledger_in(design: &VoxelGrid, manufactured: &VoxelGrid, embedding: Embedding) -> Result<CtaReport> {
    let start = Instant::now();
    embedding.check(design)?;
    let (c, u, o) = decompose(design, manufactured)?;
    let t_decompose = start.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let mut features = extract_features_in(&u, FeatureKind::Under, &c, embedding)?;
    let t_ud = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    features.extend(extract_features_in(&o, FeatureKind::Over, &c, embedding)?);
    let t_od = t0.elapsed().as_secs_f64();
    sort_features(&mut features);

    let t0 = Instant::now();
    let (design_topo, manufactured_topo) = rayon::join(|| betti_in(design, embedding), || betti_in(manufactured, embedding));
    let (design_topo, manufactured_topo) = (design_topo?, manufactured_topo?);
    let t_global = t0.elapsed().as_secs_f64();

    let sum_signed_ecc: i64 = features.iter().map(DeviationFeature::signed_contribution).sum();
    let delta = manufactured_topo.chi - design_topo.chi;
    if delta != sum_signed_ecc {
        return Err(Error::Internal(identity_diagnostic(delta, sum_signed_ecc, &features, &c, embedding)));
    }
    let design_volume = design.count();
    Ok(CtaReport {
        schema_version: SCHEMA_VERSION,
        embedding,
        frame: *design.frame(),
        chi_design: design_topo.chi,
        chi_manufactured: manufactured_topo.chi,
        design: design_topo,
        manufactured: manufactured_topo,
        design_volume,
        ud: summarize(&features, FeatureKind::Under, design_volume),
        od: summarize(&features, FeatureKind::Over, design_volume),
        features,
        sum_signed_ecc,
        identity_ok: true,
        timing: Timing { decompose: t_decompose, ud: t_ud, od: t_od, global: t_global, total: start.elapsed().as_secs_f64() },
    })
}

/// Recomputes every feature from explicit cell lists and names the ones whose
/// table-driven entries disagree.
fn identity_diagnostic(
    delta: i64,
    sum: i64,
    features: &[DeviationFeature],
    c: &VoxelGrid,
    embedding: Embedding,
) -> String {
    let mut msg = format!("χ[M] − χ[D] = {delta} but the signed contribution sum is {sum}");
    for f in features {
        let solid = f.solid(*c.frame());
        let chi = euler_of(&solid, embedding).ok();
        let cut = cut_boundary_in(&solid, c, embedding).ok().map(|k| k.euler());
        if chi != Some(f.chi_solid) || cut != Some(f.chi_cut) {
            msg.push_str(&format!(
                "; {:?} #{} ({} voxels, bbox {:?}..{:?}): recorded χ={} cut={}, recomputed χ={:?} cut={:?}",
                f.kind, f.id, f.voxel_count, f.bbox_min, f.bbox_max, f.chi_solid, f.chi_cut, chi, cut
            ));
        }
    }
    msg
}
