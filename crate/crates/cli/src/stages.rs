//! One function per pipeline stage. Each reads its inputs from disk, writes
//! its artifacts plus manifests, and removes partial outputs on failure.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use pushresp::cleaning::{clean, CleaningConfig};
use pushresp::decomposition::{
    decompose, heatmap_rows, summarize, write_heatmap_csv, write_summary_csv, BootstrapConfig, LocalIndex,
};
use pushresp::ingest::{
    build_mid_series, consolidate_nbbo, filter_eligible, nbbo_from_book_rows, read_nbbo_rows, read_quotes,
    split_by_venue, QualityReport, RthCalendar, VenuePriority,
};
use pushresp::lags::{write_moments_csv, LagSelection};
use pushresp::prms;
use pushresp::surface::{build_surface, read_surface_csv, write_surface_csv, BinGrid, BinGridSpec, SurfaceMeta};
use pushresp::synthetic::{generate_series, SyntheticSpec};
use pushresp::MidSeries;
use serde_json::{json, Value};

use crate::config::InputSource;
use crate::error::{CliError, Result};
use crate::manifest::{self, fingerprint, input_ref, is_current, output_ref, Manifest};
use crate::render::{render_figure, Artifacts, FigureSpec};

/// Shared settings of a stage run.
#[derive(Debug, Clone, Default)]
pub struct StageCtx {
    /// Omit wall-clock fields from manifests.
    pub deterministic: bool,
    /// Skip stages whose outputs are current.
    pub resume: bool,
    pub pipeline_config: Option<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    Skipped,
}

fn remove_outputs(outputs: &[PathBuf]) {
    for o in outputs {
        let _ = fs::remove_file(o);
        let _ = fs::remove_file(manifest::manifest_path(o));
    }
}

/// Runs `body` under the manifest and resume protocol.
fn run_stage(
    ctx: &StageCtx,
    stage: &str,
    config: Value,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    body: impl FnOnce() -> Result<Value>,
) -> Result<Outcome> {
    for o in outputs {
        if inputs.contains(o) {
            return Err(CliError::invalid(format!(
                "{stage}: output {} is also an input",
                o.display()
            )));
        }
    }
    let input_refs = inputs.iter().map(|p| input_ref(p)).collect::<Result<Vec<_>>>()?;
    let fp = fingerprint(stage, &config, &input_refs);
    if ctx.resume && is_current(&outputs[0], &fp) {
        log::info!("{stage}: up to date, skipping");
        return Ok(Outcome::Skipped);
    }
    for o in outputs {
        if let Some(dir) = o.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    log::info!("{stage}: running");
    let details = match body() {
        Ok(d) => d,
        Err(e) => {
            remove_outputs(outputs);
            return Err(e);
        }
    };
    let written = (|| {
        let m = Manifest {
            stage: stage.to_string(),
            tool: manifest::TOOL.to_string(),
            fingerprint: fp,
            config,
            pipeline_config: ctx.pipeline_config.clone(),
            inputs: input_refs,
            outputs: outputs.iter().map(|o| output_ref(o)).collect::<Result<Vec<_>>>()?,
            details,
            created_unix: manifest::now_unix(ctx.deterministic),
        };
        outputs.iter().try_for_each(|o| manifest::write_manifest(o, &m))
    })();
    if let Err(e) = written {
        remove_outputs(outputs);
        return Err(e);
    }
    Ok(Outcome::Ran)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<fs::File>) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn load_series(path: &Path) -> Result<MidSeries> {
    prms::load(path).map_err(|e| match e {
        prms::PrmsError::Io(io) => CliError::io(path, io),
        other => CliError::stage("load", format!("{}: {other}", path.display())),
    })
}

fn save_series(path: &Path, series: &MidSeries) -> Result<()> {
    prms::save(path, series).map_err(|e| CliError::io(path, e))
}

fn series_details(series: &MidSeries) -> Value {
    json!({
        "n_sessions": series.sessions.len(),
        "n_events": series.len(),
        "sessions": series.sessions.iter().map(|s| json!({"day": s.day, "events": s.len()})).collect::<Vec<_>>(),
    })
}

/// Input files of a quote source: the file itself, or the sorted `.csv`
/// files of a directory.
fn quote_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.exists() {
        return Err(CliError::MissingArtifact(path.to_path_buf()));
    }
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| CliError::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

/// Quotes or pre-consolidated NBBO to a mid series.
pub fn ingest(ctx: &StageCtx, source: &InputSource, out: &Path) -> Result<Outcome> {
    let (path, tz, strict) = match source {
        InputSource::Quotes { path, tz, strict, .. } | InputSource::Nbbo { path, tz, strict } => (path, tz, *strict),
        _ => return Err(CliError::invalid("ingest needs a quotes or nbbo source")),
    };
    let calendar = RthCalendar::from_name(tz).map_err(|e| CliError::invalid(e.to_string()))?;
    let config = serde_json::to_value(source).expect("source serializes");
    let out = out.to_path_buf();
    run_stage(ctx, "ingest", config, &[path.clone()], &[out.clone()], || {
        let mut report = QualityReport::default();
        let failed = |e: pushresp::ingest::IngestError| CliError::stage("ingest", e);
        let nbbo = match source {
            InputSource::Quotes { venue_priority, .. } => {
                let mut quotes = Vec::new();
                for f in quote_files(path)? {
                    quotes.extend(read_quotes(open(&f)?, strict, &mut report).map_err(failed)?);
                }
                let eligible = filter_eligible(quotes, &calendar, &mut report);
                let priority = venue_priority.clone().map(VenuePriority::new).unwrap_or_default();
                consolidate_nbbo(&split_by_venue(eligible), &priority, &calendar, &mut report).map_err(failed)?
            }
            _ => {
                let rows = read_nbbo_rows(open(path)?, strict, &mut report).map_err(failed)?;
                nbbo_from_book_rows(&rows, &calendar, &mut report).map_err(failed)?
            }
        };
        let series = build_mid_series(&nbbo);
        save_series(&out, &series)?;
        let mut d = series_details(&series);
        d["quality"] = serde_json::to_value(report).expect("report serializes");
        Ok(d)
    })
}

pub fn synth(ctx: &StageCtx, spec: &SyntheticSpec, out: &Path) -> Result<Outcome> {
    spec.validate().map_err(|e| CliError::invalid(e.to_string()))?;
    let config = json!({ "spec": spec });
    let out = out.to_path_buf();
    run_stage(ctx, "synth", config, &[], &[out.clone()], || {
        let series = generate_series(spec).map_err(|e| CliError::stage("synth", e))?;
        save_series(&out, &series)?;
        let mut d = series_details(&series);
        d["spec"] = serde_json::to_value(spec).expect("spec serializes");
        Ok(d)
    })
}

pub fn clean_stage(
    ctx: &StageCtx,
    cfg: &CleaningConfig,
    input: &Path,
    out: &Path,
    report_out: &Path,
) -> Result<Outcome> {
    cfg.validate().map_err(|e| CliError::invalid(e.to_string()))?;
    let config = json!({ "cleaning": cfg });
    let outputs = [out.to_path_buf(), report_out.to_path_buf()];
    run_stage(ctx, "clean", config, &[input.to_path_buf()], &outputs, || {
        let series = load_series(input)?;
        let (series, report) = clean(series, cfg).map_err(|e| CliError::stage("clean", e))?;
        save_series(out, &series)?;
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        fs::write(report_out, text).map_err(|e| CliError::io(report_out, e))?;
        let mut d = series_details(&series);
        d["report"] = serde_json::to_value(report).expect("report serializes");
        Ok(d)
    })
}

/// Hash of the config recorded in an upstream manifest, if there is one.
fn upstream_config_hash(input: &Path) -> Option<String> {
    let m = manifest::read_manifest(&manifest::manifest_path(input)).ok()?;
    Some(manifest::sha256_bytes(m.config.to_string().as_bytes()))
}

pub fn surface_stage(
    ctx: &StageCtx,
    lags: &LagSelection,
    grid: &BinGridSpec,
    input: &Path,
    out: &Path,
    moments_out: &Path,
) -> Result<Outcome> {
    let grid = BinGrid::new(*grid).map_err(|e| CliError::invalid(e.to_string()))?;
    let lag_list = lags.lags().map_err(|e| CliError::invalid(e.to_string()))?;
    let config = json!({ "lags": lags, "grid": grid.spec() });
    let outputs = [out.to_path_buf(), moments_out.to_path_buf()];
    run_stage(ctx, "surface", config, &[input.to_path_buf()], &outputs, || {
        let series = load_series(input)?;
        let surface = build_surface(&series, &lag_list, &grid).map_err(|e| CliError::stage("surface", e))?;
        drop(series);
        let w = create(out)?;
        let mut w = w;
        write_surface_csv(&mut w, &surface).map_err(|e| CliError::stage("surface", e))?;
        finish(out, w)?;
        let moments: Vec<_> = surface.rows.iter().filter_map(|r| r.moments).collect();
        let mut w = create(moments_out)?;
        write_moments_csv(&mut w, &moments).map_err(|e| CliError::stage("surface", e))?;
        finish(moments_out, w)?;
        Ok(json!({
            "meta": surface.meta(),
            "lag_family": lags,
            "cleaning_config_hash": upstream_config_hash(input),
        }))
    })
}

/// Surface metadata stored in the manifest next to a surface CSV.
pub fn surface_meta(surface_csv: &Path) -> Option<SurfaceMeta> {
    let m = manifest::read_manifest(&manifest::manifest_path(surface_csv)).ok()?;
    serde_json::from_value(m.details.get("meta")?.clone()).ok()
}

pub fn decompose_stage(
    ctx: &StageCtx,
    bootstrap: &BootstrapConfig,
    local_index: LocalIndex,
    surface_in: &Path,
    heat_out: &Path,
    summary_out: &Path,
) -> Result<Outcome> {
    if bootstrap.replicates == 0 {
        return Err(CliError::invalid("bootstrap replicates must be positive"));
    }
    let config = json!({ "bootstrap": bootstrap, "local_index": local_index });
    let outputs = [heat_out.to_path_buf(), summary_out.to_path_buf()];
    run_stage(ctx, "decompose", config, &[surface_in.to_path_buf()], &outputs, || {
        let meta = surface_meta(surface_in);
        if meta.is_none() {
            log::warn!(
                "no surface manifest next to {}; assuming the default grid",
                surface_in.display()
            );
        }
        let surface =
            read_surface_csv(open(surface_in)?, meta.as_ref()).map_err(|e| CliError::stage("decompose", e))?;
        let table = decompose(&surface).map_err(|e| CliError::stage("decompose", e))?;
        let summaries = summarize(&table, bootstrap).map_err(|e| CliError::stage("decompose", e))?;
        let mut w = create(heat_out)?;
        write_heatmap_csv(&mut w, &heatmap_rows(&table)).map_err(|e| CliError::stage("decompose", e))?;
        finish(heat_out, w)?;
        let mut w = create(summary_out)?;
        write_summary_csv(&mut w, &summaries).map_err(|e| CliError::stage("decompose", e))?;
        finish(summary_out, w)?;
        Ok(json!({
            "n_lags": table.len(),
            "n_lags_supported": summaries.len(),
            "n_pairs": table.iter().map(|t| t.pairs.len()).sum::<usize>(),
        }))
    })
}

pub fn render_stage(ctx: &StageCtx, spec: &FigureSpec, artifacts: &Artifacts) -> Result<Outcome> {
    let input = artifacts.input_for(spec.kind)?.to_path_buf();
    let config = serde_json::to_value(spec).expect("figure spec serializes");
    run_stage(ctx, "render", config, &[input], &[spec.out.clone()], || {
        render_figure(spec, artifacts)?;
        Ok(json!({ "kind": spec.kind }))
    })
}
