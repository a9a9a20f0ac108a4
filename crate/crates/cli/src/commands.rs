use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use voxcta::correct::{correct_loop, CorrectionConfig, Termination};
use voxcta::cta::{ledger, ledger_in, CtaReport};
use voxcta::cubical::{betti, Embedding, TopologySummary};
use voxcta::measure::overlap_field_fft;
use voxcta::morphology::{motion_set, sweep};
use voxcta::voxel::{extract_slices, load_grid, save_grid, write_vtk_cells, Axis, Format, MmnSpec};
use voxcta::{Error, Lambda, Result, VoxelGrid, SCHEMA_VERSION};

use crate::manifest::{create_dir, write_json, RunManifest};

/// Added to every aggregate slice report.
pub const SLICE_CAVEAT: &str = "Topology preserved in every slice does not imply topology preserved in 3D: \
     connections and cavities spanning several layers are invisible to per-slice analysis.";

fn format_of(path: &Path) -> Result<Format> {
    Format::from_path(path).ok_or_else(|| Error::Io {
        path: path.into(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "unknown extension (expected .binvox or .raw)"),
    })
}

fn load(path: &Path, manifest: &mut RunManifest) -> Result<VoxelGrid> {
    let format = format_of(path)?;
    let g = manifest.time("load", || load_grid(path, format))?;
    manifest.add_input(path)?;
    Ok(g)
}

pub fn parse_lambdas(list: &str) -> Result<Vec<Lambda>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

#[derive(Serialize)]
struct Member {
    index: usize,
    lambda: Lambda,
    volume: usize,
    topology: TopologySummary,
    file: String,
}

pub fn family(design: &Path, mmn: &MmnSpec, lambdas: &[Lambda], out: &Path, vtk: bool, format: Format) -> Result<()> {
    let mut manifest = RunManifest::new("family");
    let d = load(design, &mut manifest)?;
    let b = mmn.build()?;
    manifest.mmn = Some(mmn.to_string());
    manifest.threshold = Some(json!(lambdas));
    create_dir(out)?;
    let members = manifest.time("as_manufactured", || voxcta::morphology::family(&d, &b, lambdas))?;
    let topo: Vec<TopologySummary> = manifest.time("topology", || members.par_iter().map(|(_, g)| betti(g)).collect());
    let design_topo = betti(&d);

    let mut table = Vec::new();
    for (k, ((l, g), t)) in members.iter().zip(topo).enumerate() {
        let path = out.join(format!("member_{k:03}.{}", format.extension()));
        manifest.time("write", || save_grid(g, &path, format))?;
        manifest.output(&path);
        if vtk {
            let vpath = out.join(format!("member_{k:03}.vtk"));
            manifest.time("write", || save_grid(g, &vpath, Format::Vtk))?;
            manifest.output(&vpath);
        }
        table.push(Member { index: k, lambda: *l, volume: g.count(), topology: t, file: path.display().to_string() });
    }
    manifest.details = json!({
        "mmn_measure": b.count(),
        "design": { "volume": d.count(), "topology": design_topo },
        "members": table,
    });
    manifest.finish(out.join("manifest.json"))
}

pub fn cta(design: &Path, manufactured: &Path, out: &Path, vtk: Option<&Path>) -> Result<()> {
    let mut manifest = RunManifest::new("cta");
    let d = load(design, &mut manifest)?;
    let m = load(manufactured, &mut manifest)?;
    let report = manifest.time("ledger", || ledger(&d, &m))?;
    write_report(&report, out, vtk, &mut manifest)?;
    manifest.details = json!({
        "delta_chi": report.delta_chi(),
        "features": report.features.len(),
        "non_simple": report.non_simple().count(),
        "identity_ok": report.identity_ok,
    });
    manifest.finish(sibling(out, "manifest.json"))
}

fn write_report(report: &CtaReport, out: &Path, vtk: Option<&Path>, manifest: &mut RunManifest) -> Result<()> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_json(out, report)?;
    manifest.output(out);
    if let Some(dir) = vtk {
        create_dir(dir)?;
        let ecc = dir.join("ecc.vtk");
        write_vtk_cells(&ecc, &report.frame, "ecc", &report.ecc_field())?;
        let labels = dir.join("features.vtk");
        write_vtk_cells(&labels, &report.frame, "feature", &report.feature_labels())?;
        manifest.output(&ecc);
        manifest.output(&labels);
    }
    Ok(())
}

/// `<dir of out>/<stem of out>.<suffix>`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// Returns whether the loop terminated clean.
pub fn correct(design: &Path, mmn: &MmnSpec, lambda: Option<Lambda>, config: Option<&Path>, out: &Path) -> Result<bool> {
    let mut manifest = RunManifest::new("correct");
    let d = load(design, &mut manifest)?;
    let mut cfg = match config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Io { path: p.into(), source: e })?;
            manifest.add_input(p)?;
            serde_json::from_str::<CorrectionConfig>(&text).map_err(|e| Error::Io {
                path: p.into(),
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            })?
        }
        None => CorrectionConfig::default(),
    };
    if let Some(l) = lambda {
        cfg.lambda0 = l;
    }
    let b = mmn.build()?;
    manifest.mmn = Some(mmn.to_string());
    create_dir(out)?;
    let (shape, trace) = manifest.time("correct", || correct_loop(&d, &b, &cfg))?;
    manifest.threshold = Some(json!(trace.last().omrt));

    let grid = out.join("final.binvox");
    save_grid(&shape, &grid, Format::Binvox)?;
    manifest.output(&grid);
    let trace_path = out.join("trace.json");
    write_json(&trace_path, &json!({ "schema_version": SCHEMA_VERSION, "config": cfg, "trace": trace }))?;
    manifest.output(&trace_path);
    let clean = trace.terminated_by == Termination::Clean;
    manifest.details = json!({
        "terminated_by": trace.terminated_by,
        "iterations": trace.iterations.len(),
        "final_delta_chi": trace.last().delta_chi,
    });
    manifest.finish(out.join("manifest.json"))?;
    Ok(clean)
}

#[derive(Serialize)]
struct SliceEntry {
    index: usize,
    level: f64,
    design_volume: usize,
    manufactured_volume: usize,
    chi_design: i64,
    chi_manufactured: i64,
    features: usize,
    non_simple_ud: usize,
    non_simple_od: usize,
    identity_ok: bool,
    report: String,
}

pub fn slice(design: &Path, axis: Axis, mmn: &MmnSpec, lambda: Lambda, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("slice");
    let d = load(design, &mut manifest)?;
    let spec = MmnSpec::planar(mmn.shape);
    let b = spec.build()?;
    manifest.mmn = Some(spec.to_string());
    manifest.threshold = Some(json!(lambda));
    create_dir(out)?;

    let slices = extract_slices(&d, axis);
    let reports: Vec<(VoxelGrid, CtaReport)> = manifest.time("slices", || {
        slices
            .par_iter()
            .map(|s| {
                let g = s.to_grid();
                let field = overlap_field_fft(&g, &b)?;
                let m = sweep(&motion_set(&field, lambda), &b)?;
                let r = ledger_in(&g, &m, Embedding::Planar)?;
                Ok((m, r))
            })
            .collect::<Result<_>>()
    })?;

    let mut entries = Vec::new();
    for (k, ((m, r), s)) in reports.iter().zip(&slices).enumerate() {
        let path = out.join(format!("slice_{k:04}.json"));
        write_json(&path, r)?;
        manifest.output(&path);
        entries.push(SliceEntry {
            index: k,
            level: s.level,
            design_volume: s.count(),
            manufactured_volume: m.count(),
            chi_design: r.chi_design,
            chi_manufactured: r.chi_manufactured,
            features: r.features.len(),
            non_simple_ud: r.ud.non_simple,
            non_simple_od: r.od.non_simple,
            identity_ok: r.identity_ok,
            report: path.display().to_string(),
        });
    }
    let changed = entries.iter().filter(|e| e.non_simple_ud + e.non_simple_od > 0).count();
    let aggregate = json!({
        "schema_version": SCHEMA_VERSION,
        "axis": format!("{axis:?}").to_lowercase(),
        "mmn": spec.to_string(),
        "lambda": lambda,
        "slices": entries,
        "slices_with_non_simple_features": changed,
        "caveat": SLICE_CAVEAT,
    });
    let agg = out.join("aggregate.json");
    write_json(&agg, &aggregate)?;
    manifest.output(&agg);
    manifest.finish(out.join("manifest.json"))
}
