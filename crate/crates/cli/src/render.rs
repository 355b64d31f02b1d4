//! SVG figures drawn from the CSV artifacts alone.
//!
//! All coordinates are printed with fixed precision, so identical CSV input
//! yields byte-identical SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pushresp::decomposition::{read_heatmap_csv, read_summary_csv, HeatmapRow, LagSummary, LocalIndex};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    SurfaceTop,
    SurfaceSide,
    DominanceHeatmap,
    MagnitudeCurve,
    RhoCurve,
}

impl FigureKind {
    pub const ALL: [FigureKind; 5] = [
        FigureKind::SurfaceTop,
        FigureKind::SurfaceSide,
        FigureKind::DominanceHeatmap,
        FigureKind::MagnitudeCurve,
        FigureKind::RhoCurve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureKind::SurfaceTop => "surface_top",
            FigureKind::SurfaceSide => "surface_side",
            FigureKind::DominanceHeatmap => "dominance_heatmap",
            FigureKind::MagnitudeCurve => "magnitude_curve",
            FigureKind::RhoCurve => "rho_curve",
        }
    }
}

impl std::str::FromStr for FigureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        FigureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown figure {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub kind: FigureKind,
    /// Label of the lag family shown in the title.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag_family: Option<String>,
    /// Color scale `(min, max)`; symmetric about zero from the data when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color_bounds: Option<(f64, f64)>,
    #[serde(default)]
    pub local_index: LocalIndex,
    pub out: PathBuf,
}

impl FigureSpec {
    pub fn new(kind: FigureKind, out: impl Into<PathBuf>) -> Self {
        Self {
            kind,
            lag_family: None,
            color_bounds: None,
            local_index: LocalIndex::default(),
            out: out.into(),
        }
    }
}

/// CSV inputs available to the renderer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub surface: Option<PathBuf>,
    pub heatmap: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl Artifacts {
    fn need<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
        match p {
            Some(p) if p.is_file() => Ok(p),
            Some(p) => Err(CliError::MissingArtifact(p.clone())),
            None => Err(CliError::MissingArtifact(PathBuf::from(what))),
        }
    }

    /// Input path a figure of `kind` reads.
    pub fn input_for(&self, kind: FigureKind) -> Result<&Path> {
        match kind {
            FigureKind::SurfaceTop | FigureKind::SurfaceSide => Self::need(&self.surface, "surface.csv"),
            FigureKind::DominanceHeatmap => Self::need(&self.heatmap, "heat.csv"),
            FigureKind::MagnitudeCurve | FigureKind::RhoCurve => Self::need(&self.summary, "lags.csv"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct SurfaceRow {
    lag: usize,
    #[allow(dead_code)]
    bin: usize,
    center: f64,
    #[allow(dead_code)]
    count: u64,
    #[allow(dead_code)]
    mean_zp: Option<f64>,
    mean_zr: Option<f64>,
    #[allow(dead_code)]
    mean_r_raw: Option<f64>,
    valid: bool,
}

fn read_csv_file<T>(path: &Path, read: impl FnOnce(fs::File) -> std::result::Result<T, String>) -> Result<T> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read(f).map_err(|e| CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
}

fn read_surface_rows(path: &Path) -> Result<Vec<SurfaceRow>> {
    read_csv_file(path, |f| {
        csv::Reader::from_reader(f)
            .deserialize()
            .collect::<std::result::Result<Vec<SurfaceRow>, _>>()
            .map_err(|e| e.to_string())
    })
}

/// Renders one figure and writes it to `spec.out`.
pub fn render_figure(spec: &FigureSpec, artifacts: &Artifacts) -> Result<()> {
    let svg = render_svg(spec, artifacts)?;
    if let Some(dir) = spec.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(&spec.out, svg).map_err(|e| CliError::io(&spec.out, e))
}

pub fn render_svg(spec: &FigureSpec, artifacts: &Artifacts) -> Result<String> {
    let input = artifacts.input_for(spec.kind)?;
    let family = spec
        .lag_family
        .as_deref()
        .map(|f| format!(" ({f} lags)"))
        .unwrap_or_default();
    Ok(match spec.kind {
        FigureKind::SurfaceTop => surface_top(&read_surface_rows(input)?, spec.color_bounds, &family),
        FigureKind::SurfaceSide => surface_side(&read_surface_rows(input)?, spec.color_bounds, &family),
        FigureKind::DominanceHeatmap => {
            let rows = read_csv_file(input, |f| read_heatmap_csv(f).map_err(|e| e.to_string()))?;
            dominance_heatmap(&rows, spec.local_index, spec.color_bounds, &family)
        }
        FigureKind::MagnitudeCurve => {
            let rows = read_csv_file(input, |f| read_summary_csv(f).map_err(|e| e.to_string()))?;
            magnitude_curve(&rows, &family)
        }
        FigureKind::RhoCurve => {
            let rows = read_csv_file(input, |f| read_summary_csv(f).map_err(|e| e.to_string()))?;
            rho_curve(&rows, &family)
        }
    })
}

const W: f64 = 820.0;
const H: f64 = 560.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const PW: f64 = W - LEFT - RIGHT;
const PH: f64 = H - TOP - BOTTOM;

/// Linear map from a data interval onto a pixel interval.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, p0: f64, p1: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Axis { lo, hi, p0, p1 }
    }

    fn at(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }
}

struct Svg {
    out: String,
}

impl Svg {
    fn new(title: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        Svg { out }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.out,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, extra: &str) {
        let _ = writeln!(
            self.out,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"{extra}/>"#
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, extra: &str) {
        if pts.is_empty() {
            return;
        }
        let mut p = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            if i > 0 {
                p.push(' ');
            }
            let _ = write!(p, "{x:.2},{y:.2}");
        }
        let _ = writeln!(
            self.out,
            r#"<polyline points="{p}" fill="none" stroke="{stroke}"{extra}/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    }

    fn vtext(&mut self, x: f64, y: f64, s: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"#,
            escape(s)
        );
    }

    fn frame(&mut self, x_label: &str, y_label: &str) {
        let _ = writeln!(
            self.out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{PW}" height="{PH}" fill="none" stroke="black"/>"#
        );
        self.text(LEFT + PW / 2.0, H - 18.0, "middle", x_label);
        self.vtext(22.0, TOP + PH / 2.0, y_label);
    }

    fn x_ticks(&mut self, ax: &Axis, ticks: &[f64]) {
        for &t in ticks {
            let x = ax.at(t);
            self.line(x, TOP + PH, x, TOP + PH + 5.0, "black", "");
            self.text(x, TOP + PH + 18.0, "middle", &fmt_tick(t));
        }
    }

    fn y_ticks(&mut self, ax: &Axis, ticks: &[f64]) {
        for &t in ticks {
            let y = ax.at(t);
            self.line(LEFT - 5.0, y, LEFT, y, "black", "");
            self.text(LEFT - 8.0, y + 4.0, "end", &fmt_tick(t));
        }
    }

    fn no_data(&mut self) {
        self.text(LEFT + PW / 2.0, TOP + PH / 2.0, "middle", "no data");
    }

    fn colorbar(&mut self, lo: f64, hi: f64) {
        let x = W - RIGHT + 25.0;
        let steps = 40;
        let h = PH / steps as f64;
        for i in 0..steps {
            let t = 1.0 - (i as f64 + 0.5) / steps as f64;
            self.rect(x, TOP + i as f64 * h, 18.0, h + 0.01, &diverging(2.0 * t - 1.0));
        }
        let _ = writeln!(
            self.out,
            r#"<rect x="{x:.2}" y="{TOP}" width="18" height="{PH}" fill="none" stroke="black"/>"#
        );
        self.text(x + 22.0, TOP + 4.0, "start", &fmt_tick(hi));
        self.text(x + 22.0, TOP + PH / 2.0 + 4.0, "start", &fmt_tick(0.5 * (lo + hi)));
        self.text(x + 22.0, TOP + PH + 4.0, "start", &fmt_tick(lo));
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    if v.abs() >= 1000.0 || v == v.round() {
        format!("{v:.0}")
    } else if v.abs() >= 0.1 {
        format!("{v:.2}")
    } else {
        format!("{v:.3}")
    }
}

/// Blue through white to red for `t` in `[-1, 1]`.
fn diverging(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (end, s) = if t < 0.0 {
        ((33.0, 102.0, 172.0), -t)
    } else {
        ((178.0, 24.0, 43.0), t)
    };
    let mix = |c: f64| (255.0 + (c - 255.0) * s).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(end.0), mix(end.1), mix(end.2))
}

/// Dark blue to yellow for `t` in `[0, 1]`.
fn sequential(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (a, b) = ((68.0, 1.0, 84.0), (220.0, 190.0, 30.0));
    let mix = |x: f64, y: f64| (x + (y - x) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn scale_of(t: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        2.0 * (t - lo) / (hi - lo) - 1.0
    } else {
        0.0
    }
}

fn symmetric_bounds(values: impl Iterator<Item = f64>, given: Option<(f64, f64)>) -> (f64, f64) {
    if let Some(b) = given {
        return b;
    }
    let m = values.filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    let m = if m > 0.0 { m } else { 1.0 };
    (-m, m)
}

fn distinct_lags(lags: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = lags.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// A few representative lags for the y axis of a raster.
fn lag_ticks(lags: &[usize]) -> Vec<(usize, usize)> {
    let n = lags.len();
    let k = n.min(6);
    let mut idx: Vec<usize> = (0..k).map(|i| if k == 1 { 0 } else { i * (n - 1) / (k - 1) }).collect();
    idx.dedup();
    idx.into_iter().map(|i| (i, lags[i])).collect()
}

/// Half the spacing between adjacent centers.
fn half_step(centers: &[f64]) -> f64 {
    let mut c: Vec<f64> = centers.to_vec();
    c.sort_by(f64::total_cmp);
    c.dedup();
    let step = c.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if step.is_finite() {
        step / 2.0
    } else {
        0.0125
    }
}

fn raster(
    svg: &mut Svg,
    lags: &[usize],
    x: &Axis,
    x_half: f64,
    cells: impl Iterator<Item = (usize, f64, f64)>,
    lo: f64,
    hi: f64,
) {
    let rh = PH / lags.len() as f64;
    for (lag, center, v) in cells {
        let Ok(i) = lags.binary_search(&lag) else { continue };
        let x0 = x.at(center - x_half);
        let x1 = x.at(center + x_half);
        // first lag at the bottom
        let y0 = TOP + PH - (i + 1) as f64 * rh;
        svg.rect(x0, y0, x1 - x0, rh, &diverging(scale_of(v, lo, hi)));
    }
    let ticks = lag_ticks(lags);
    for (i, lag) in ticks {
        let y = TOP + PH - (i as f64 + 0.5) * rh;
        svg.line(LEFT - 5.0, y, LEFT, y, "black", "");
        svg.text(LEFT - 8.0, y + 4.0, "end", &lag.to_string());
    }
}

fn surface_top(rows: &[SurfaceRow], bounds: Option<(f64, f64)>, family: &str) -> String {
    let mut svg = Svg::new(&format!("Conditional response surface{family}"));
    let valid: Vec<&SurfaceRow> = rows.iter().filter(|r| r.valid && r.mean_zr.is_some()).collect();
    let (lo, hi) = symmetric_bounds(valid.iter().filter_map(|r| r.mean_zr), bounds);
    svg.frame("standardized push z_p", "lag L (events)");
    svg.colorbar(lo, hi);
    if valid.is_empty() {
        svg.no_data();
        return svg.finish();
    }
    let centers: Vec<f64> = rows.iter().map(|r| r.center).collect();
    let half = half_step(&centers);
    let zmin = centers.iter().copied().fold(f64::INFINITY, f64::min) - half;
    let zmax = centers.iter().copied().fold(f64::NEG_INFINITY, f64::max) + half;
    let x = Axis::new(zmin, zmax, LEFT, LEFT + PW);
    let lags = distinct_lags(rows.iter().map(|r| r.lag));
    raster(
        &mut svg,
        &lags,
        &x,
        half,
        valid.iter().map(|r| (r.lag, r.center, r.mean_zr.unwrap_or(0.0))),
        lo,
        hi,
    );
    svg.x_ticks(&x, &nice_ticks(zmin, zmax));
    svg.finish()
}

fn surface_side(rows: &[SurfaceRow], bounds: Option<(f64, f64)>, family: &str) -> String {
    let mut svg = Svg::new(&format!("Conditional response by lag{family}"));
    let valid: Vec<&SurfaceRow> = rows.iter().filter(|r| r.valid && r.mean_zr.is_some()).collect();
    let (lo, hi) = symmetric_bounds(valid.iter().filter_map(|r| r.mean_zr), bounds);
    svg.frame("standardized push z_p", "mean standardized response");
    if valid.is_empty() {
        svg.no_data();
        return svg.finish();
    }
    let zmin = valid.iter().map(|r| r.center).fold(f64::INFINITY, f64::min);
    let zmax = valid.iter().map(|r| r.center).fold(f64::NEG_INFINITY, f64::max);
    let x = Axis::new(zmin, zmax, LEFT, LEFT + PW);
    let y = Axis::new(lo, hi, TOP + PH, TOP);
    svg.line(
        LEFT,
        y.at(0.0),
        LEFT + PW,
        y.at(0.0),
        "#999999",
        r#" stroke-dasharray="4 3""#,
    );
    let lags = distinct_lags(valid.iter().map(|r| r.lag));
    let half = half_step(&valid.iter().map(|r| r.center).collect::<Vec<_>>());
    for (i, &lag) in lags.iter().enumerate() {
        let color = sequential(if lags.len() > 1 {
            i as f64 / (lags.len() - 1) as f64
        } else {
            0.0
        });
        let mut pts: Vec<(f64, f64)> = Vec::new();
        let mut last: Option<f64> = None;
        for r in valid.iter().filter(|r| r.lag == lag) {
            // break the line across unsupported bins
            if last.is_some_and(|c| r.center - c > 3.0 * half) {
                svg.polyline(&pts, &color, r#" stroke-width="1""#);
                pts.clear();
            }
            let v = r.mean_zr.unwrap_or(0.0).clamp(lo, hi);
            pts.push((x.at(r.center), y.at(v)));
            last = Some(r.center);
        }
        svg.polyline(&pts, &color, r#" stroke-width="1""#);
    }
    svg.x_ticks(&x, &nice_ticks(zmin, zmax));
    svg.y_ticks(&y, &nice_ticks(lo, hi));
    if let (Some(first), Some(last)) = (lags.first(), lags.last()) {
        svg.text(W - RIGHT + 10.0, TOP + 14.0, "start", &format!("L = {first}"));
        svg.text(W - RIGHT + 10.0, TOP + 30.0, "start", &format!("to {last}"));
    }
    svg.finish()
}

fn dominance_heatmap(rows: &[HeatmapRow], index: LocalIndex, bounds: Option<(f64, f64)>, family: &str) -> String {
    let mut svg = Svg::new(&format!("Dominance by lag and push size{family}"));
    let (lo, hi) = bounds.unwrap_or((-1.0, 1.0));
    svg.frame("|z_p|", "lag L (events)");
    svg.colorbar(lo, hi);
    if rows.is_empty() {
        svg.no_data();
        return svg.finish();
    }
    // step from any row: center = (a - 1/2) * step
    let r0 = &rows[0];
    let step = r0.abs_center / (r0.abs_index as f64 - 0.5);
    let a_max = rows.iter().map(|r| r.abs_index).max().unwrap_or(1);
    let zmax = a_max as f64 * step;
    let x = Axis::new(0.0, zmax, LEFT, LEFT + PW);
    let lags = distinct_lags(rows.iter().map(|r| r.lag));
    raster(
        &mut svg,
        &lags,
        &x,
        step / 2.0,
        rows.iter().map(|r| (r.lag, r.abs_center, r.index(index))),
        lo,
        hi,
    );
    svg.x_ticks(&x, &nice_ticks(0.0, zmax));
    svg.finish()
}

fn curve_frame(svg: &mut Svg, rows: &[LagSummary], lo: f64, hi: f64, y_label: &str) -> (Axis, Axis) {
    svg.frame("lag L (events)", y_label);
    let lmin = rows.iter().map(|r| r.lag).min().unwrap_or(0) as f64;
    let lmax = rows.iter().map(|r| r.lag).max().unwrap_or(1) as f64;
    let x = Axis::new(lmin, lmax, LEFT, LEFT + PW);
    let y = Axis::new(lo, hi, TOP + PH, TOP);
    svg.x_ticks(&x, &nice_ticks(x.lo, x.hi));
    svg.y_ticks(&y, &nice_ticks(y.lo, y.hi));
    (x, y)
}

fn magnitude_curve(rows: &[LagSummary], family: &str) -> String {
    let mut svg = Svg::new(&format!("Response magnitude by lag{family}"));
    if rows.is_empty() {
        svg.frame("lag L (events)", "M(L)");
        svg.no_data();
        return svg.finish();
    }
    let hi = rows
        .iter()
        .map(|r| r.m)
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let (x, y) = curve_frame(&mut svg, rows, 0.0, if hi > 0.0 { hi * 1.05 } else { 1.0 }, "M(L)");
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (x.at(r.lag as f64), y.at(r.m))).collect();
    svg.polyline(&pts, "#1f4e9a", r#" stroke-width="1.5""#);
    svg.finish()
}

fn rho_curve(rows: &[LagSummary], family: &str) -> String {
    let mut svg = Svg::new(&format!("Lag dominance with bootstrap band{family}"));
    if rows.is_empty() {
        svg.frame("lag L (events)", "rho(L)");
        svg.no_data();
        return svg.finish();
    }
    let (x, y) = curve_frame(&mut svg, rows, -1.0, 1.0, "rho(L)");
    svg.line(
        LEFT,
        y.at(0.0),
        LEFT + PW,
        y.at(0.0),
        "#999999",
        r#" stroke-dasharray="4 3""#,
    );
    let line = |f: fn(&LagSummary) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (x.at(r.lag as f64), y.at(f(r)))).collect()
    };
    svg.polyline(
        &line(|r| r.ci_low),
        "#b2182b",
        r#" stroke-width="1" stroke-dasharray="3 2""#,
    );
    svg.polyline(
        &line(|r| r.ci_high),
        "#b2182b",
        r#" stroke-width="1" stroke-dasharray="3 2""#,
    );
    svg.polyline(&line(|r| r.rho), "#1f1f1f", r#" stroke-width="1.5""#);
    svg.finish()
}

/// About five round tick values covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat(lag: usize, a: usize, rho: f64) -> HeatmapRow {
        HeatmapRow {
            lag,
            abs_index: a,
            abs_center: (a as f64 - 0.5) * 0.025,
            n_pos: 300,
            n_neg: 300,
            weight: 1.0,
            s: 0.0,
            a: rho,
            rho_signed: rho,
            rho_absratio: rho,
        }
    }

    fn count_cells(svg: &str) -> usize {
        // background, colorbar steps and frames are not data cells
        svg.lines()
            .filter(|l| l.starts_with("<rect") && !l.contains("fill=\"white\"") && !l.contains("fill=\"none\""))
            .count()
            - 40
    }

    #[test]
    fn heatmap_with_one_pair_has_one_cell() {
        let svg = dominance_heatmap(&[heat(50, 3, 0.5)], LocalIndex::Signed, None, "");
        assert_eq!(count_cells(&svg), 1);
        let empty = dominance_heatmap(&[], LocalIndex::Signed, None, "");
        assert_eq!(count_cells(&empty), 0);
        assert!(empty.contains("no data"));
    }

    #[test]
    fn rho_curve_has_three_polylines() {
        let rows: Vec<LagSummary> = (1..=4)
            .map(|i| LagSummary {
                lag: 50 * i,
                n_supported_pairs: 10,
                rho: 0.1,
                degenerate: false,
                ci_low: -0.1,
                ci_high: 0.2,
                m: 0.01,
                m_raw: 0.0,
            })
            .collect();
        let svg = rho_curve(&rows, "");
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg, rho_curve(&rows, ""));
        assert_eq!(magnitude_curve(&rows, "").matches("<polyline").count(), 1);
    }

    #[test]
    fn colors() {
        assert_eq!(diverging(0.0), "#ffffff");
        assert_eq!(diverging(1.0), "#b2182b");
        assert_eq!(diverging(-1.0), "#2166ac");
        assert_eq!(diverging(7.0), diverging(1.0));
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(-4.0, 4.0), vec![-4.0, -2.0, 0.0, 2.0, 4.0]);
        assert_eq!(
            nice_ticks(0.0, 5000.0),
            vec![0.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0]
        );
    }

    #[test]
    fn missing_artifact() {
        let spec = FigureSpec::new(FigureKind::RhoCurve, "x.svg");
        let err = render_svg(&spec, &Artifacts::default()).unwrap_err();
        assert!(matches!(err, CliError::MissingArtifact(_)));
    }
}
