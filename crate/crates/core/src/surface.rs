//! Binning of standardized pushes and per-(lag, bin) conditional means.
//!
//! Every lag shares one fixed grid over the standardized push. A cell is
//! valid only when its count reaches the minimum support; invalid cells keep
//! their count but carry no means, and nothing is interpolated into them.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lags::{self, LagError, LagMoments};
use crate::series::MidSeries;
use crate::stats::NeumaierSum;

#[derive(Debug, thiserror::Error)]
pub enum SurfaceError {
    #[error("invalid bin grid: {0}")]
    InvalidGrid(String),
    #[error("bin index {0} outside 1..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("no moments supplied for lag {0}")]
    MissingMoments(usize),
    #[error("lag error: {0}")]
    Lag(#[from] LagError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed surface file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinGridSpec {
    pub z_min: f64,
    pub z_max: f64,
    pub step: f64,
    pub n_min: u64,
}

impl Default for BinGridSpec {
    fn default() -> Self {
        Self {
            z_min: -4.0,
            z_max: 4.0,
            step: 0.025,
            n_min: 200,
        }
    }
}

/// Equal-width grid over the standardized push, bins numbered `1..=n_bins`.
///
/// Bin `j` covers `[edge(j-1), edge(j))`. Each edge is the smallest double
/// not below the exact edge, so [`BinGrid::bin_index`] matches
/// `1 + floor((z - z_min) / step)` in exact arithmetic:
/// `edge(j-1) <= z < edge(j)` if and only if `bin_index(z) == Some(j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BinGridSpec", into = "BinGridSpec")]
pub struct BinGrid {
    spec: BinGridSpec,
    n_bins: usize,
    edges: Vec<f64>,
}

impl Default for BinGrid {
    fn default() -> Self {
        BinGrid::new(BinGridSpec::default()).expect("default grid is valid")
    }
}

impl TryFrom<BinGridSpec> for BinGrid {
    type Error = SurfaceError;

    fn try_from(spec: BinGridSpec) -> Result<Self, SurfaceError> {
        BinGrid::new(spec)
    }
}

impl From<BinGrid> for BinGridSpec {
    fn from(g: BinGrid) -> Self {
        g.spec
    }
}

/// Number of bins implied by a range and step, if it is an integer.
pub fn bin_count(z_min: f64, z_max: f64, step: f64) -> Result<usize, SurfaceError> {
    if !(z_min.is_finite() && z_max.is_finite() && z_max > z_min) {
        return Err(SurfaceError::InvalidGrid(format!("range [{z_min}, {z_max}) is empty")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(SurfaceError::InvalidGrid(format!("step {step} must be positive")));
    }
    let n = (z_max - z_min) / step;
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-9 * r.max(1.0) {
        return Err(SurfaceError::InvalidGrid(format!(
            "range {} / step {step} = {n} is not an integer bin count",
            z_max - z_min
        )));
    }
    Ok(r as usize)
}

/// Smallest `f64` not below the exact edge `(z_min (n - k) + z_max k) / n`,
/// so that `z >= edge` agrees with exact arithmetic for every `f64` `z`.
fn upper_edge(z_min: f64, z_max: f64, n: usize, k: usize) -> f64 {
    let rational = |x: f64| BigRational::from_float(x).expect("finite grid bound");
    let (nb, kb) = (BigInt::from(n), BigInt::from(k));
    let exact = (rational(z_min) * BigRational::from_integer(&nb - &kb)
        + rational(z_max) * BigRational::from_integer(kb))
        / BigRational::from_integer(nb);
    let nf = n as f64;
    let mut e = (z_min * (nf - k as f64) + z_max * k as f64) / nf;
    while rational(e) < exact {
        e = e.next_up();
    }
    while rational(e.next_down()) >= exact {
        e = e.next_down();
    }
    e
}

impl BinGrid {
    pub fn new(spec: BinGridSpec) -> Result<Self, SurfaceError> {
        let n = bin_count(spec.z_min, spec.z_max, spec.step)?;
        let edges = (0..=n).map(|k| upper_edge(spec.z_min, spec.z_max, n, k)).collect();
        Ok(Self { spec, n_bins: n, edges })
    }

    pub fn with_min_support(mut self, n_min: u64) -> Self {
        self.spec.n_min = n_min;
        self
    }

    pub fn spec(&self) -> BinGridSpec {
        self.spec
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_min(&self) -> u64 {
        self.spec.n_min
    }

    pub fn z_min(&self) -> f64 {
        self.spec.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.spec.z_max
    }

    pub fn step(&self) -> f64 {
        self.spec.step
    }

    /// `edge(0) = z_min`, `edge(n_bins) = z_max`; interior edges are rounded up.
    pub fn edge(&self, k: usize) -> f64 {
        self.edges[k]
    }

    /// Lower and upper edge of bin `j` (1-based).
    pub fn bin_edges(&self, j: usize) -> Result<(f64, f64), SurfaceError> {
        self.check(j)?;
        Ok((self.edges[j - 1], self.edges[j]))
    }

    fn check(&self, j: usize) -> Result<(), SurfaceError> {
        if j == 0 || j > self.n_bins {
            Err(SurfaceError::IndexOutOfRange(j, self.n_bins))
        } else {
            Ok(())
        }
    }

    /// `1 + floor((z - z_min) / step)` for `z_min <= z < z_max`, else `None`.
    #[inline]
    pub fn bin_index(&self, z: f64) -> Option<usize> {
        let n = self.n_bins;
        if !(z >= self.edges[0] && z < self.edges[n]) {
            return None;
        }
        let guess = ((z - self.spec.z_min) * (n as f64 / (self.spec.z_max - self.spec.z_min))).floor();
        let mut k = if guess < 0.0 { 0 } else { (guess as usize).min(n - 1) };
        while z < self.edges[k] {
            k -= 1;
        }
        while z >= self.edges[k + 1] {
            k += 1;
        }
        Some(k + 1)
    }

    /// `z_min + (j - 1/2) * step`.
    pub fn bin_center(&self, j: usize) -> Result<f64, SurfaceError> {
        self.check(j)?;
        let n2 = 2.0 * self.n_bins as f64;
        let a = 2.0 * j as f64 - 1.0;
        Ok((self.spec.z_min * (n2 - a) + self.spec.z_max * a) / n2)
    }

    /// Grid with `z_min = -z_max` and an even bin count, so bins pair up.
    pub fn is_symmetric(&self) -> bool {
        self.spec.z_min == -self.spec.z_max && self.n_bins % 2 == 0
    }

    /// The bin whose center is the negation of bin `j`'s: `n_bins + 1 - j`.
    pub fn mirror_index(&self, j: usize) -> Result<usize, SurfaceError> {
        self.check(j)?;
        Ok(self.n_bins + 1 - j)
    }
}

pub fn bin_index(z: f64, grid: &BinGrid) -> Option<usize> {
    grid.bin_index(z)
}

pub fn bin_center(j: usize, grid: &BinGrid) -> Result<f64, SurfaceError> {
    grid.bin_center(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMeans {
    pub mean_zp: f64,
    pub mean_zr: f64,
    pub mean_r_raw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub bin: usize,
    pub count: u64,
    /// Present only on valid cells.
    pub means: Option<CellMeans>,
}

impl SurfaceCell {
    pub fn is_valid(&self) -> bool {
        self.means.is_some()
    }

    pub fn mean_zr(&self) -> Option<f64> {
        self.means.map(|m| m.mean_zr)
    }
}

/// Why a lag row has no cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagStatus {
    Ok,
    InsufficientSupport,
    ZeroVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagRow {
    pub lag: usize,
    pub status: LagStatus,
    pub n_pairs: u64,
    pub out_of_grid: u64,
    pub moments: Option<LagMoments>,
    pub cells: Vec<SurfaceCell>,
}

impl LagRow {
    fn empty(lag: usize, n_bins: usize, status: LagStatus, n_pairs: u64, moments: Option<LagMoments>) -> Self {
        LagRow {
            lag,
            status,
            n_pairs,
            out_of_grid: 0,
            moments,
            cells: (1..=n_bins)
                .map(|bin| SurfaceCell {
                    bin,
                    count: 0,
                    means: None,
                })
                .collect(),
        }
    }

    pub fn cell(&self, j: usize) -> &SurfaceCell {
        &self.cells[j - 1]
    }

    pub fn binned(&self) -> u64 {
        self.cells.iter().map(|c| c.count).sum()
    }
}

/// Dense lag x bin surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub grid: BinGrid,
    pub rows: Vec<LagRow>,
}

impl Surface {
    pub fn row(&self, lag: usize) -> Option<&LagRow> {
        self.rows.iter().find(|r| r.lag == lag)
    }

    pub fn lags(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.lag).collect()
    }

    /// Re-thresholds at a higher minimum support. Lowering is impossible
    /// since invalid cells keep no means; a lower value is ignored.
    pub fn with_min_support(mut self, n_min: u64) -> Self {
        if n_min <= self.grid.n_min() {
            return self;
        }
        self.grid = self.grid.with_min_support(n_min);
        for row in &mut self.rows {
            for c in &mut row.cells {
                if c.count < n_min {
                    c.means = None;
                }
            }
        }
        self
    }
}

/// Per-bin counts and compensated sums; partial tables merge field-wise.
#[derive(Debug, Clone)]
pub struct BinTable {
    count: Vec<u64>,
    zp: Vec<NeumaierSum>,
    zr: Vec<NeumaierSum>,
    r: Vec<NeumaierSum>,
    out_of_grid: u64,
}

impl BinTable {
    pub fn new(n_bins: usize) -> Self {
        Self {
            count: vec![0; n_bins],
            zp: vec![NeumaierSum::new(); n_bins],
            zr: vec![NeumaierSum::new(); n_bins],
            r: vec![NeumaierSum::new(); n_bins],
            out_of_grid: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, grid: &BinGrid, z_p: f64, z_r: f64, r_raw: f64) {
        match grid.bin_index(z_p) {
            Some(j) => {
                let k = j - 1;
                self.count[k] += 1;
                self.zp[k].add(z_p);
                self.zr[k].add(z_r);
                self.r[k].add(r_raw);
            }
            None => self.out_of_grid += 1,
        }
    }

    pub fn merge(&mut self, other: &BinTable) {
        for k in 0..self.count.len() {
            self.count[k] += other.count[k];
            self.zp[k].merge(&other.zp[k]);
            self.zr[k].merge(&other.zr[k]);
            self.r[k].merge(&other.r[k]);
        }
        self.out_of_grid += other.out_of_grid;
    }

    fn into_row(self, grid: &BinGrid, moments: LagMoments) -> LagRow {
        let n_min = grid.n_min();
        let cells = (0..self.count.len())
            .map(|k| {
                let n = self.count[k];
                let means = (n > 0 && n >= n_min).then(|| {
                    let nf = n as f64;
                    CellMeans {
                        mean_zp: self.zp[k].value() / nf,
                        mean_zr: self.zr[k].value() / nf,
                        mean_r_raw: self.r[k].value() / nf,
                    }
                });
                SurfaceCell {
                    bin: k + 1,
                    count: n,
                    means,
                }
            })
            .collect();
        LagRow {
            lag: moments.lag,
            status: LagStatus::Ok,
            n_pairs: moments.n_pairs,
            out_of_grid: self.out_of_grid,
            moments: Some(moments),
            cells,
        }
    }
}

fn accumulate_lag(series: &MidSeries, moments: LagMoments, grid: &BinGrid) -> LagRow {
    let lag = moments.lag;
    let partials: Vec<BinTable> = series
        .sessions
        .par_iter()
        .map(|s| {
            let mut t = BinTable::new(grid.n_bins());
            for pair in lags::session_pairs(series, s, lag) {
                let z = moments.standardize(&pair);
                t.add(grid, z.z_p, z.z_r, pair.response);
            }
            t
        })
        .collect();
    let mut table = BinTable::new(grid.n_bins());
    for p in &partials {
        table.merge(p);
    }
    table.into_row(grid, moments)
}

/// Single pass per lag over admissible anchors, binned with the given moments.
///
/// Lags are processed in parallel; within a lag, per-session partial tables
/// are merged in session order, so output does not depend on thread count.
pub fn accumulate_surface(series: &MidSeries, moments: &[LagMoments], grid: &BinGrid) -> Result<Surface, SurfaceError> {
    for m in moments {
        if !m.is_usable() {
            return Err(SurfaceError::MissingMoments(m.lag));
        }
    }
    let rows = moments.par_iter().map(|m| accumulate_lag(series, *m, grid)).collect();
    Ok(Surface {
        grid: grid.clone(),
        rows,
    })
}

/// Moments then binning for each lag. Lags without usable moments yield an
/// empty row with the reason recorded rather than an error.
pub fn build_surface(series: &MidSeries, lag_list: &[usize], grid: &BinGrid) -> Result<Surface, SurfaceError> {
    lags::validate_lags(lag_list)?;
    let rows = lag_list
        .par_iter()
        .map(|&lag| match lags::compute_moments(series, lag) {
            Ok(m) => accumulate_lag(series, m, grid),
            Err(LagError::ZeroVariance { .. }) => {
                let m = lags::moments_unchecked(series, lag);
                LagRow::empty(lag, grid.n_bins(), LagStatus::ZeroVariance, m.n_pairs, Some(m))
            }
            Err(_) => {
                let n = lags::n_admissible(series, lag);
                LagRow::empty(lag, grid.n_bins(), LagStatus::InsufficientSupport, n, None)
            }
        })
        .collect();
    Ok(Surface {
        grid: grid.clone(),
        rows,
    })
}

pub const SURFACE_HEADER: [&str; 8] = [
    "lag",
    "bin",
    "center",
    "count",
    "mean_zp",
    "mean_zr",
    "mean_r_raw",
    "valid",
];

/// Per-lag metadata that does not fit the cell CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMeta {
    pub grid: BinGrid,
    pub lags: Vec<LagMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagMeta {
    pub lag: usize,
    pub status: LagStatus,
    pub n_pairs: u64,
    pub out_of_grid: u64,
    pub moments: Option<LagMoments>,
}

impl Surface {
    pub fn meta(&self) -> SurfaceMeta {
        SurfaceMeta {
            grid: self.grid.clone(),
            lags: self
                .rows
                .iter()
                .map(|r| LagMeta {
                    lag: r.lag,
                    status: r.status,
                    n_pairs: r.n_pairs,
                    out_of_grid: r.out_of_grid,
                    moments: r.moments,
                })
                .collect(),
        }
    }
}

/// Writes one row per non-empty cell. Invalid cells have blank means.
pub fn write_surface_csv<W: Write>(w: W, surface: &Surface) -> Result<(), SurfaceError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SURFACE_HEADER)?;
    for row in &surface.rows {
        for c in row.cells.iter().filter(|c| c.count > 0) {
            let center = surface.grid.bin_center(c.bin)?;
            let (zp, zr, rr) = match c.means {
                Some(m) => (m.mean_zp.to_string(), m.mean_zr.to_string(), m.mean_r_raw.to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            wr.write_record([
                row.lag.to_string(),
                c.bin.to_string(),
                center.to_string(),
                c.count.to_string(),
                zp,
                zr,
                rr,
                c.is_valid().to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Reads the cell CSV. With `meta`, grid and per-lag details are restored
/// exactly; without it the default grid is assumed and lag rows are built
/// from whatever lags appear in the file.
pub fn read_surface_csv<R: Read>(r: R, meta: Option<&SurfaceMeta>) -> Result<Surface, SurfaceError> {
    let grid = meta.map(|m| m.grid.clone()).unwrap_or_default();
    let n_bins = grid.n_bins();
    let mut rows: BTreeMap<usize, LagRow> = BTreeMap::new();
    if let Some(meta) = meta {
        for lm in &meta.lags {
            let mut row = LagRow::empty(lm.lag, n_bins, lm.status, lm.n_pairs, lm.moments);
            row.out_of_grid = lm.out_of_grid;
            rows.insert(lm.lag, row);
        }
    }

    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.iter().ne(SURFACE_HEADER.iter().copied()) {
        return Err(SurfaceError::Malformed(format!("unexpected header {headers:?}")));
    }
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| SurfaceError::Malformed(format!("row {}: bad {what}", i + 2));
        let lag: usize = rec[0].parse().map_err(|_| bad("lag"))?;
        let bin: usize = rec[1].parse().map_err(|_| bad("bin"))?;
        let count: u64 = rec[3].parse().map_err(|_| bad("count"))?;
        let valid: bool = rec[7].parse().map_err(|_| bad("valid"))?;
        if bin == 0 || bin > n_bins {
            return Err(bad("bin"));
        }
        let means = if valid {
            Some(CellMeans {
                mean_zp: rec[4].parse().map_err(|_| bad("mean_zp"))?,
                mean_zr: rec[5].parse().map_err(|_| bad("mean_zr"))?,
                mean_r_raw: rec[6].parse().map_err(|_| bad("mean_r_raw"))?,
            })
        } else {
            None
        };
        let row = rows.entry(lag).or_insert_with(|| {
            let mut row = LagRow::empty(lag, n_bins, LagStatus::Ok, 0, None);
            row.status = LagStatus::Ok;
            row
        });
        row.cells[bin - 1] = SurfaceCell { bin, count, means };
        if meta.is_none() {
            row.n_pairs += count;
        }
    }
    Ok(Surface {
        grid,
        rows: rows.into_values().collect(),
    })
}
