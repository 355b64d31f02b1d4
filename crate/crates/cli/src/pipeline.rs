//! End-to-end pipeline run.

use pushresp::lags::LagSelection;

use crate::config::{validate, InputSource, PipelineConfig};
use crate::error::{CliError, Result};
use crate::render::{Artifacts, FigureSpec};
use crate::stages::{self, Outcome, StageCtx};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineReport {
    pub stages: Vec<(String, Outcome)>,
}

impl PipelineReport {
    pub fn ran(&self) -> usize {
        self.stages.iter().filter(|(_, o)| *o == Outcome::Ran).count()
    }

    pub fn skipped(&self) -> usize {
        self.stages.len() - self.ran()
    }
}

/// Validates `cfg`, then runs every stage in order. Stages whose outputs are
/// current are skipped; a failing stage leaves no partial outputs behind.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    validate(cfg).into_result()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::stage("pipeline", e))?
            .install(|| run_stages(cfg)),
        None => run_stages(cfg),
    }
}

fn run_stages(cfg: &PipelineConfig) -> Result<PipelineReport> {
    let ctx = StageCtx {
        deterministic: cfg.deterministic,
        resume: true,
        pipeline_config: Some(cfg.to_json()),
    };
    let paths = cfg.paths();
    let mut report = PipelineReport::default();
    let mut record = |name: &str, r: Result<Outcome>| -> Result<()> {
        let o = r.map_err(|e| e.in_stage(name))?;
        report.stages.push((name.to_string(), o));
        Ok(())
    };

    match &cfg.input {
        InputSource::Synth { spec } => record("synth", stages::synth(&ctx, spec, &paths.mids))?,
        InputSource::Prms { path } => {
            if !path.is_file() {
                return Err(CliError::stage("ingest", format!("missing input {}", path.display())));
            }
        }
        source => record("ingest", stages::ingest(&ctx, source, &paths.mids))?,
    }
    record(
        "clean",
        stages::clean_stage(&ctx, &cfg.cleaning, &paths.mids, &paths.clean, &paths.clean_report),
    )?;
    record(
        "surface",
        stages::surface_stage(&ctx, &cfg.lags, &cfg.grid, &paths.clean, &paths.surface, &paths.moments),
    )?;
    record(
        "decompose",
        stages::decompose_stage(
            &ctx,
            &cfg.bootstrap,
            cfg.local_index,
            &paths.surface,
            &paths.heatmap,
            &paths.summary,
        ),
    )?;
    let artifacts = Artifacts {
        surface: Some(paths.surface.clone()),
        heatmap: Some(paths.heatmap.clone()),
        summary: Some(paths.summary.clone()),
    };
    let family = match cfg.lags {
        LagSelection::Short => Some("short".to_string()),
        LagSelection::Long => Some("long".to_string()),
        LagSelection::Custom(_) => None,
    };
    for &kind in &cfg.figures {
        let spec = FigureSpec {
            lag_family: family.clone(),
            local_index: cfg.local_index,
            ..FigureSpec::new(kind, paths.figure(kind))
        };
        record(
            &format!("render:{}", kind.name()),
            stages::render_stage(&ctx, &spec, &artifacts),
        )?;
    }
    Ok(report)
}
