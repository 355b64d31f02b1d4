//! Pipeline configuration: one JSON document, overridable from the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pushresp::cleaning::CleaningConfig;
use pushresp::decomposition::{BootstrapConfig, LocalIndex};
use pushresp::ingest::{RthCalendar, Venue};
use pushresp::lags::{parse_lag_list, validate_lags, LagSelection};
use pushresp::surface::{BinGrid, BinGridSpec};
use pushresp::synthetic::SyntheticSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::render::FigureKind;

fn default_tz() -> String {
    "America/New_York".to_string()
}

/// Where the mid series comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSource {
    /// Generated series.
    Synth { spec: SyntheticSpec },
    /// Venue quote CSV file, or a directory of them.
    Quotes {
        path: PathBuf,
        #[serde(default = "default_tz")]
        tz: String,
        #[serde(default)]
        strict: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        venue_priority: Option<Vec<Venue>>,
    },
    /// Pre-consolidated top-of-book CSV.
    Nbbo {
        path: PathBuf,
        #[serde(default = "default_tz")]
        tz: String,
        #[serde(default)]
        strict: bool,
    },
    /// Existing mid-series file.
    Prms { path: PathBuf },
}

/// Optional per-artifact path overrides; unset paths live under `out_dir`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathOverrides {
    pub mids: Option<PathBuf>,
    pub clean: Option<PathBuf>,
    pub clean_report: Option<PathBuf>,
    pub moments: Option<PathBuf>,
    pub surface: Option<PathBuf>,
    pub heatmap: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub figures_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagePaths {
    pub mids: PathBuf,
    pub clean: PathBuf,
    pub clean_report: PathBuf,
    pub moments: PathBuf,
    pub surface: PathBuf,
    pub heatmap: PathBuf,
    pub summary: PathBuf,
    pub figures_dir: PathBuf,
}

impl StagePaths {
    pub fn figure(&self, kind: FigureKind) -> PathBuf {
        self.figures_dir.join(format!("{}.svg", kind.name()))
    }
}

fn default_lags() -> LagSelection {
    LagSelection::Short
}

fn default_figures() -> Vec<FigureKind> {
    FigureKind::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputSource,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub paths: PathOverrides,
    #[serde(default)]
    pub cleaning: CleaningConfig,
    #[serde(default = "default_lags")]
    pub lags: LagSelection,
    #[serde(default)]
    pub grid: BinGridSpec,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub local_index: LocalIndex,
    #[serde(default = "default_figures")]
    pub figures: Vec<FigureKind>,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl PipelineConfig {
    pub fn new(input: InputSource, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            input,
            out_dir: out_dir.into(),
            paths: PathOverrides::default(),
            cleaning: CleaningConfig::default(),
            lags: default_lags(),
            grid: BinGridSpec::default(),
            bootstrap: BootstrapConfig::default(),
            local_index: LocalIndex::default(),
            figures: default_figures(),
            deterministic: false,
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn paths(&self) -> StagePaths {
        let d = &self.out_dir;
        let p = &self.paths;
        let pick = |o: &Option<PathBuf>, name: &str| o.clone().unwrap_or_else(|| d.join(name));
        let mids = match &self.input {
            InputSource::Prms { path } => path.clone(),
            _ => pick(&p.mids, "mids.prms"),
        };
        StagePaths {
            mids,
            clean: pick(&p.clean, "clean.prms"),
            clean_report: pick(&p.clean_report, "clean.json"),
            moments: pick(&p.moments, "moments.csv"),
            surface: pick(&p.surface, "surface.csv"),
            heatmap: pick(&p.heatmap, "heat.csv"),
            summary: pick(&p.summary, "lags.csv"),
            figures_dir: pick(&p.figures_dir, "figures"),
        }
    }
}

/// Parses `short`, `long`, `file:<path>` or an inline comma-separated list.
pub fn parse_lag_arg(arg: &str) -> Result<LagSelection> {
    if let Some(path) = arg.strip_prefix("file:") {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let lags = parse_lag_list(&text).map_err(|e| CliError::invalid(e.to_string()))?;
        validate_lags(&lags).map_err(|e| CliError::invalid(e.to_string()))?;
        return Ok(LagSelection::Custom(lags));
    }
    LagSelection::parse(arg).map_err(|e| CliError::invalid(e.to_string()))
}

/// Result of the static checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n_bins: Option<usize>,
    pub n_lags: Option<usize>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<ValidationReport> {
        if self.is_ok() {
            Ok(self)
        } else {
            Err(CliError::Validation(self.errors))
        }
    }
}

/// Checks the config without touching any data.
pub fn validate(cfg: &PipelineConfig) -> ValidationReport {
    let mut rep = ValidationReport::default();
    match BinGrid::new(cfg.grid) {
        Ok(g) => {
            rep.n_bins = Some(g.n_bins());
            if !g.is_symmetric() {
                rep.errors
                    .push("grid must be symmetric about zero with an even bin count".into());
            }
        }
        Err(e) => rep.errors.push(format!("grid: {e}")),
    }
    if let Err(e) = cfg.cleaning.validate() {
        rep.errors.push(format!("cleaning: {e}"));
    }
    match cfg.lags.lags() {
        Ok(l) => rep.n_lags = Some(l.len()),
        Err(e) => rep.errors.push(format!("lags: {e}")),
    }
    let b = &cfg.bootstrap;
    if b.replicates == 0 {
        rep.errors.push("bootstrap: replicates must be positive".into());
    }
    let (lo, hi) = b.quantiles;
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        rep.errors
            .push(format!("bootstrap: quantiles must satisfy 0 < {lo} < {hi} < 1"));
    }
    if b.replicates > 0 && b.replicates < 100 {
        rep.warnings
            .push(format!("bootstrap: only {} replicates", b.replicates));
    }
    if cfg.threads == Some(0) {
        rep.errors.push("threads must be positive".into());
    }
    if let InputSource::Synth { spec } = &cfg.input {
        if let Err(e) = spec.validate() {
            rep.errors.push(format!("synth: {e}"));
        }
    }
    if let InputSource::Quotes { tz, .. } | InputSource::Nbbo { tz, .. } = &cfg.input {
        if RthCalendar::from_name(tz).is_err() {
            rep.errors.push(format!("unknown time zone {tz:?}"));
        }
    }
    let paths = cfg.paths();
    let mut seen: BTreeMap<PathBuf, &str> = BTreeMap::new();
    let mut all = vec![
        ("mids", paths.mids.clone()),
        ("clean", paths.clean.clone()),
        ("clean_report", paths.clean_report.clone()),
        ("moments", paths.moments.clone()),
        ("surface", paths.surface.clone()),
        ("heatmap", paths.heatmap.clone()),
        ("summary", paths.summary.clone()),
    ];
    all.extend(cfg.figures.iter().map(|k| (k.name(), paths.figure(*k))));
    if let InputSource::Quotes { path, .. } | InputSource::Nbbo { path, .. } = &cfg.input {
        all.push(("input", path.clone()));
    }
    for (name, p) in all {
        if let Some(prev) = seen.insert(p.clone(), name) {
            rep.errors
                .push(format!("paths of {prev} and {name} coincide: {}", p.display()));
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> PipelineConfig {
        PipelineConfig::new(
            InputSource::Synth {
                spec: SyntheticSpec::null_walk(10_000, 2, 1),
            },
            "out",
        )
    }

    #[test]
    fn default_config_is_valid() {
        let rep = validate(&base());
        assert!(rep.is_ok(), "{rep:?}");
        assert_eq!(rep.n_bins, Some(320));
        assert_eq!(rep.n_lags, Some(101));
    }

    #[test]
    fn bad_step_is_rejected() {
        let mut c = base();
        c.grid.step = 0.03;
        let rep = validate(&c);
        assert!(!rep.is_ok());
        assert!(rep.errors[0].starts_with("grid"));
    }

    #[test]
    fn unordered_quantiles_are_rejected() {
        let mut c = base();
        c.cleaning.lower_q = 0.6;
        c.cleaning.upper_q = 0.5;
        assert!(matches!(validate(&c).into_result(), Err(CliError::Validation(_))));
    }

    #[test]
    fn nonpositive_lags_are_rejected() {
        let mut c = base();
        c.lags = LagSelection::Custom(vec![0, 5]);
        assert!(!validate(&c).is_ok());
    }

    #[test]
    fn colliding_paths_are_rejected() {
        let mut c = base();
        c.paths.heatmap = Some(PathBuf::from("out/lags.csv"));
        let rep = validate(&c);
        assert_eq!(rep.errors.len(), 1, "{rep:?}");
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let c = base();
        let back = PipelineConfig::from_json(&c.to_json().to_string()).unwrap();
        assert_eq!(back, c);
        let minimal = r#"{"input": {"kind": "prms", "path": "m.prms"}, "out_dir": "o"}"#;
        let c = PipelineConfig::from_json(minimal).unwrap();
        assert_eq!(c.lags, LagSelection::Short);
        assert_eq!(c.paths().mids, PathBuf::from("m.prms"));
        assert!(
            PipelineConfig::from_json(r#"{"input": {"kind": "prms", "path": "m"}, "out_dir": "o", "bogus": 1}"#)
                .is_err()
        );
    }

    #[test]
    fn lag_arguments() {
        assert_eq!(parse_lag_arg("short").unwrap(), LagSelection::Short);
        assert_eq!(parse_lag_arg("1,5,9").unwrap(), LagSelection::Custom(vec![1, 5, 9]));
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("lags.txt");
        std::fs::write(&f, "10\n20\n30\n").unwrap();
        assert_eq!(
            parse_lag_arg(&format!("file:{}", f.display())).unwrap(),
            LagSelection::Custom(vec![10, 20, 30])
        );
        assert!(parse_lag_arg("5,3").is_err());
    }
}
