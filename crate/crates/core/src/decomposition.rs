//! Symmetric / antisymmetric decomposition of a surface, dominance
//! statistics and bootstrap bands.
//!
//! For a lag and an absolute bin index `a` in `1..=n/2`, the positive cell is
//! bin `n/2 + a` and its mirror bin `n/2 + 1 - a`; their centers are exact
//! negatives. With `z+` and `z-` the two conditional response means,
//!
//! ```text
//! S = (z+ + z-) / 2        A = (z+ - z-) / 2
//! ```
//!
//! so `S + A = z+` and `S - A = z-`. A pair exists only when both cells meet
//! the support rule; resampling draws from these pairs and never invents any.

use std::io::{Read, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cleaning::nearest_rank;
use crate::surface::{Surface, SurfaceCell, SurfaceError};

/// Stabilizer in the local dominance index.
pub const EPSILON: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum DecompError {
    #[error("grid is not symmetric about zero with an even bin count")]
    AsymmetricGrid,
    #[error("lag {0} has no supported mirror pairs")]
    NoSupportedPairs(usize),
    #[error("bootstrap needs at least one replicate")]
    NoReplicates,
    #[error("surface error: {0}")]
    Surface(#[from] SurfaceError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed table: {0}")]
    Malformed(String),
}

/// Which local dominance index to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalIndex {
    /// `A / (|A| + |S| + eps)`.
    #[default]
    Signed,
    /// `(|A| - |S|) / (|A| + |S| + eps)`: +1 for pure sign dependence, -1 for
    /// pure magnitude dependence.
    AbsRatio,
}

impl std::str::FromStr for LocalIndex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "signed" => Ok(LocalIndex::Signed),
            "absratio" => Ok(LocalIndex::AbsRatio),
            _ => Err(format!("unknown local index {s:?} (signed|absratio)")),
        }
    }
}

pub fn rho_local(s: f64, a: f64) -> f64 {
    a / (a.abs() + s.abs() + EPSILON)
}

pub fn rho_absratio(s: f64, a: f64) -> f64 {
    (a.abs() - s.abs()) / (a.abs() + s.abs() + EPSILON)
}

impl LocalIndex {
    pub fn eval(self, s: f64, a: f64) -> f64 {
        match self {
            LocalIndex::Signed => rho_local(s, a),
            LocalIndex::AbsRatio => rho_absratio(s, a),
        }
    }
}

/// Mirror-bin index: `n_bins + 1 - j`.
pub fn mirror_index(j: usize, n_bins: usize) -> Result<usize, DecompError> {
    if j == 0 || j > n_bins {
        return Err(SurfaceError::IndexOutOfRange(j, n_bins).into());
    }
    Ok(n_bins + 1 - j)
}

/// One supported pair of opposite bins at one lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorPair {
    pub lag: usize,
    pub abs_index: usize,
    pub abs_center: f64,
    pub cell_pos: SurfaceCell,
    pub cell_neg: SurfaceCell,
    pub s: f64,
    pub a: f64,
    pub weight: f64,
}

impl MirrorPair {
    pub fn from_means(
        lag: usize,
        abs_index: usize,
        abs_center: f64,
        pos: SurfaceCell,
        neg: SurfaceCell,
    ) -> Option<Self> {
        let zp = pos.mean_zr()?;
        let zn = neg.mean_zr()?;
        Some(MirrorPair {
            lag,
            abs_index,
            abs_center,
            cell_pos: pos,
            cell_neg: neg,
            s: 0.5 * (zp + zn),
            a: 0.5 * (zp - zn),
            weight: f64::NAN,
        })
    }

    pub fn support(&self) -> u64 {
        self.cell_pos.count + self.cell_neg.count
    }

    pub fn rho_local(&self) -> f64 {
        rho_local(self.s, self.a)
    }

    pub fn rho_absratio(&self) -> f64 {
        rho_absratio(self.s, self.a)
    }

    fn raw_means(&self) -> (f64, f64) {
        let p = self.cell_pos.means.map_or(f64::NAN, |m| m.mean_r_raw);
        let n = self.cell_neg.means.map_or(f64::NAN, |m| m.mean_r_raw);
        (p, n)
    }
}

/// Supported pairs of one lag, ordered by `abs_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagPairs {
    pub lag: usize,
    pub pairs: Vec<MirrorPair>,
}

/// Splits every lag of `surface` into supported mirror pairs, with weights
/// filled in. Lags with no supported pair appear with an empty list.
pub fn decompose(surface: &Surface) -> Result<Vec<LagPairs>, DecompError> {
    let grid = &surface.grid;
    if !grid.is_symmetric() {
        return Err(DecompError::AsymmetricGrid);
    }
    let half = grid.n_bins() / 2;
    let mut out = Vec::with_capacity(surface.rows.len());
    for row in &surface.rows {
        let mut pairs = Vec::new();
        for a in 1..=half {
            let pos = *row.cell(half + a);
            let neg = *row.cell(half + 1 - a);
            let center = grid.bin_center(half + a)?;
            if let Some(p) = MirrorPair::from_means(row.lag, a, center, pos, neg) {
                pairs.push(p);
            }
        }
        if let Ok(w) = lag_weights(&pairs) {
            for (p, w) in pairs.iter_mut().zip(w) {
                p.weight = w;
            }
        }
        out.push(LagPairs { lag: row.lag, pairs });
    }
    Ok(out)
}

/// `w = (n+ + n-) / sum over pairs of (n+ + n-)`.
pub fn lag_weights(pairs: &[MirrorPair]) -> Result<Vec<f64>, DecompError> {
    let Some(first) = pairs.first() else {
        return Err(DecompError::NoSupportedPairs(0));
    };
    let total: u64 = pairs.iter().map(MirrorPair::support).sum();
    if total == 0 {
        return Err(DecompError::NoSupportedPairs(first.lag));
    }
    Ok(pairs.iter().map(|p| p.support() as f64 / total as f64).collect())
}

/// Lag-level dominance; `degenerate` is set when every `S` and `A` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoLag {
    pub value: f64,
    pub degenerate: bool,
}

fn rho_from_sums(sum_a: f64, sum_s: f64) -> RhoLag {
    let den = sum_a + sum_s;
    if den == 0.0 {
        RhoLag {
            value: 0.0,
            degenerate: true,
        }
    } else {
        RhoLag {
            value: (sum_a - sum_s) / den,
            degenerate: false,
        }
    }
}

/// `(sum w|A| - sum w|S|) / (sum w|A| + sum w|S|)`.
pub fn rho_lag(pairs: &[MirrorPair], weights: &[f64]) -> RhoLag {
    let (sa, ss) = pairs
        .iter()
        .zip(weights)
        .fold((0.0, 0.0), |(sa, ss), (p, w)| (sa + w * p.a.abs(), ss + w * p.s.abs()));
    rho_from_sums(sa, ss)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Standardized,
    Raw,
}

/// Support-weighted mean absolute response of the two mirror cells.
pub fn magnitude(pairs: &[MirrorPair], weights: &[f64], scale: Scale) -> f64 {
    pairs
        .iter()
        .zip(weights)
        .map(|(p, w)| {
            let (a, b) = match scale {
                Scale::Standardized => (p.s + p.a, p.s - p.a),
                Scale::Raw => p.raw_means(),
            };
            w * 0.5 * (a.abs() + b.abs())
        })
        .sum()
}

/// How drawn pairs are weighted when recomputing the lag statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecomputeWeights {
    /// Each draw counts once; selection already carries the weights.
    #[default]
    Equal,
    /// Each draw keeps its pair weight.
    Retain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub quantiles: (f64, f64),
    #[serde(default)]
    pub recompute: RecomputeWeights,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            seed: 42,
            quantiles: (0.025, 0.975),
            recompute: RecomputeWeights::Equal,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `b` at `lag`. Replicate `b` draws from
/// `ChaCha8Rng::seed_from_u64(replicate_seed(seed, lag, b))`, which makes every
/// replicate independent of scheduling.
pub fn replicate_seed(seed: u64, lag: usize, b: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ lag as u64) ^ b as u64)
}

/// Bootstrap replicates of the lag statistic.
///
/// Each replicate draws `K = pairs.len()` pairs with replacement, with
/// probability proportional to pair support, and recomputes the statistic on
/// the drawn multiset.
pub fn bootstrap_replicates(pairs: &[MirrorPair], cfg: &BootstrapConfig) -> Result<Vec<f64>, DecompError> {
    if cfg.replicates == 0 {
        return Err(DecompError::NoReplicates);
    }
    let lag = pairs.first().map(|p| p.lag).ok_or(DecompError::NoSupportedPairs(0))?;
    let supports: Vec<u64> = pairs.iter().map(MirrorPair::support).collect();
    let dist = WeightedIndex::new(&supports).map_err(|_| DecompError::NoSupportedPairs(lag))?;
    let total: u64 = supports.iter().sum();
    let k = pairs.len();
    Ok((0..cfg.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(cfg.seed, lag, b));
            let (mut sa, mut ss) = (0.0, 0.0);
            for _ in 0..k {
                let i = dist.sample(&mut rng);
                let w = match cfg.recompute {
                    RecomputeWeights::Equal => 1.0,
                    RecomputeWeights::Retain => supports[i] as f64 / total as f64,
                };
                sa += w * pairs[i].a.abs();
                ss += w * pairs[i].s.abs();
            }
            rho_from_sums(sa, ss).value
        })
        .collect())
}

/// Nearest-rank quantiles of the bootstrap replicates.
pub fn bootstrap_rho(pairs: &[MirrorPair], cfg: &BootstrapConfig) -> Result<(f64, f64), DecompError> {
    let mut reps = bootstrap_replicates(pairs, cfg)?;
    reps.sort_by(f64::total_cmp);
    let n = reps.len();
    let lo = reps[nearest_rank(cfg.quantiles.0, n) - 1];
    let hi = reps[nearest_rank(cfg.quantiles.1, n) - 1];
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagSummary {
    pub lag: usize,
    pub n_supported_pairs: usize,
    pub rho: f64,
    pub degenerate: bool,
    pub ci_low: f64,
    pub ci_high: f64,
    pub m: f64,
    pub m_raw: f64,
}

/// Lag summaries for every lag with at least one supported pair.
pub fn summarize(table: &[LagPairs], cfg: &BootstrapConfig) -> Result<Vec<LagSummary>, DecompError> {
    table
        .par_iter()
        .filter(|lp| !lp.pairs.is_empty())
        .map(|lp| {
            let w = lag_weights(&lp.pairs)?;
            let rho = rho_lag(&lp.pairs, &w);
            let (ci_low, ci_high) = bootstrap_rho(&lp.pairs, cfg)?;
            Ok(LagSummary {
                lag: lp.lag,
                n_supported_pairs: lp.pairs.len(),
                rho: rho.value,
                degenerate: rho.degenerate,
                ci_low,
                ci_high,
                m: magnitude(&lp.pairs, &w, Scale::Standardized),
                m_raw: magnitude(&lp.pairs, &w, Scale::Raw),
            })
        })
        .collect()
}

pub const HEATMAP_HEADER: [&str; 10] = [
    "lag",
    "abs_index",
    "abs_center",
    "n_pos",
    "n_neg",
    "weight",
    "s",
    "a",
    "rho_signed",
    "rho_absratio",
];

pub const SUMMARY_HEADER: [&str; 8] = [
    "lag",
    "n_supported_pairs",
    "rho",
    "ci_low",
    "ci_high",
    "m",
    "m_raw",
    "degenerate",
];

/// One row of the heatmap table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub lag: usize,
    pub abs_index: usize,
    pub abs_center: f64,
    pub n_pos: u64,
    pub n_neg: u64,
    pub weight: f64,
    pub s: f64,
    pub a: f64,
    pub rho_signed: f64,
    pub rho_absratio: f64,
}

impl HeatmapRow {
    pub fn index(&self, which: LocalIndex) -> f64 {
        match which {
            LocalIndex::Signed => self.rho_signed,
            LocalIndex::AbsRatio => self.rho_absratio,
        }
    }
}

pub fn heatmap_rows(table: &[LagPairs]) -> Vec<HeatmapRow> {
    table
        .iter()
        .flat_map(|lp| lp.pairs.iter())
        .map(|p| HeatmapRow {
            lag: p.lag,
            abs_index: p.abs_index,
            abs_center: p.abs_center,
            n_pos: p.cell_pos.count,
            n_neg: p.cell_neg.count,
            weight: p.weight,
            s: p.s,
            a: p.a,
            rho_signed: p.rho_local(),
            rho_absratio: p.rho_absratio(),
        })
        .collect()
}

fn write_rows<W: Write, T: Serialize>(w: W, header: &[&str], rows: &[T]) -> Result<(), DecompError> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(header)?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn read_rows<R: Read, T: serde::de::DeserializeOwned>(r: R, header: &[&str]) -> Result<Vec<T>, DecompError> {
    let mut rd = csv::Reader::from_reader(r);
    let h = rd.headers()?.clone();
    if h.iter().ne(header.iter().copied()) {
        return Err(DecompError::Malformed(format!("unexpected header {h:?}")));
    }
    rd.deserialize().map(|r| r.map_err(DecompError::from)).collect()
}

pub fn write_heatmap_csv<W: Write>(w: W, rows: &[HeatmapRow]) -> Result<(), DecompError> {
    write_rows(w, &HEATMAP_HEADER, rows)
}

pub fn read_heatmap_csv<R: Read>(r: R) -> Result<Vec<HeatmapRow>, DecompError> {
    read_rows(r, &HEATMAP_HEADER)
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[LagSummary]) -> Result<(), DecompError> {
    #[derive(Serialize)]
    struct Row {
        lag: usize,
        n_supported_pairs: usize,
        rho: f64,
        ci_low: f64,
        ci_high: f64,
        m: f64,
        m_raw: f64,
        degenerate: bool,
    }
    let rows: Vec<Row> = rows
        .iter()
        .map(|s| Row {
            lag: s.lag,
            n_supported_pairs: s.n_supported_pairs,
            rho: s.rho,
            ci_low: s.ci_low,
            ci_high: s.ci_high,
            m: s.m,
            m_raw: s.m_raw,
            degenerate: s.degenerate,
        })
        .collect();
    write_rows(w, &SUMMARY_HEADER, &rows)
}

pub fn read_summary_csv<R: Read>(r: R) -> Result<Vec<LagSummary>, DecompError> {
    read_rows(r, &SUMMARY_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::CellMeans;

    fn cell(bin: usize, count: u64, zr: f64) -> SurfaceCell {
        SurfaceCell {
            bin,
            count,
            means: Some(CellMeans {
                mean_zp: 0.0,
                mean_zr: zr,
                mean_r_raw: zr * 0.01,
            }),
        }
    }

    fn pair(a_idx: usize, n_pos: u64, n_neg: u64, zp: f64, zn: f64) -> MirrorPair {
        MirrorPair::from_means(
            5,
            a_idx,
            0.0,
            cell(160 + a_idx, n_pos, zp),
            cell(161 - a_idx, n_neg, zn),
        )
        .unwrap()
    }

    #[test]
    fn s_and_a_examples() {
        let p = pair(1, 300, 300, 0.4, -0.4);
        assert_eq!((p.s, p.a), (0.0, 0.4));
        let p = pair(1, 300, 300, 0.3, 0.3);
        assert_eq!((p.s, p.a), (0.3, 0.0));
        let p = pair(1, 300, 300, 0.5, 0.1);
        assert!((p.s - 0.3).abs() < 1e-16 && (p.a - 0.2).abs() < 1e-16);
        assert!((p.s + p.a - 0.5).abs() <= 1e-15 * 0.5);
        assert!((p.s - p.a - 0.1).abs() <= 1e-15 * 0.1 * 2.0);
    }

    #[test]
    fn local_index_examples() {
        assert!((rho_local(0.0, 0.4) - 1.0).abs() < 1e-11);
        assert_eq!(rho_local(0.3, 0.0), 0.0);
        assert!((rho_local(0.2, -0.2) + 0.5).abs() < 1e-11);
        assert!((rho_absratio(0.3, 0.0) + 1.0).abs() < 1e-11);
        assert!((rho_absratio(0.0, -0.3) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn mirror_examples() {
        assert_eq!(mirror_index(1, 320).unwrap(), 320);
        assert_eq!(mirror_index(161, 320).unwrap(), 160);
        assert!(mirror_index(0, 320).is_err());
        assert!(mirror_index(321, 320).is_err());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(lag_weights(&[pair(1, 300, 300, 0.1, 0.2)]).unwrap(), vec![1.0]);
        let w = lag_weights(&[pair(1, 300, 300, 0.1, 0.2), pair(2, 600, 600, 0.1, 0.2)]).unwrap();
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-16 && (w[1] - 2.0 / 3.0).abs() < 1e-16);
        assert!(matches!(lag_weights(&[]), Err(DecompError::NoSupportedPairs(_))));
    }

    #[test]
    fn rho_lag_examples() {
        let anti = vec![pair(1, 200, 200, 0.3, -0.3), pair(2, 250, 200, 0.5, -0.5)];
        let w = lag_weights(&anti).unwrap();
        assert_eq!(rho_lag(&anti, &w).value, 1.0);
        let sym = vec![pair(1, 200, 200, 0.3, 0.3), pair(2, 250, 200, -0.5, -0.5)];
        assert_eq!(rho_lag(&sym, &lag_weights(&sym).unwrap()).value, -1.0);
        // (|A|, |S|) = (0.2, 0.1) and (0.1, 0.2)
        let mixed = vec![pair(1, 200, 200, 0.3, -0.1), pair(2, 200, 200, 0.3, 0.1)];
        let r = rho_lag(&mixed, &lag_weights(&mixed).unwrap());
        assert!(r.value.abs() < 1e-15);
        let zero = vec![pair(1, 200, 200, 0.0, 0.0)];
        let r = rho_lag(&zero, &[1.0]);
        assert_eq!(
            r,
            RhoLag {
                value: 0.0,
                degenerate: true
            }
        );
    }

    #[test]
    fn magnitude_examples() {
        let zero = vec![pair(1, 200, 200, 0.0, 0.0), pair(2, 300, 200, 0.0, 0.0)];
        assert_eq!(magnitude(&zero, &lag_weights(&zero).unwrap(), Scale::Standardized), 0.0);
        let one = vec![pair(1, 200, 200, 0.4, -0.4)];
        assert!((magnitude(&one, &[1.0], Scale::Standardized) - 0.4).abs() < 1e-16);
        assert!((magnitude(&one, &[1.0], Scale::Raw) - 0.004).abs() < 1e-16);
        // hand computed: weights 400/1400, 600/1400, 400/1400
        let three = vec![
            pair(1, 200, 200, 0.2, -0.1),
            pair(2, 300, 300, -0.3, 0.5),
            pair(3, 100, 300, 0.0, 0.6),
        ];
        let expect = (400.0 * 0.15 + 600.0 * 0.4 + 400.0 * 0.3) / 1400.0;
        let got = magnitude(&three, &lag_weights(&three).unwrap(), Scale::Standardized);
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_degenerate_cases() {
        let cfg = BootstrapConfig {
            replicates: 200,
            ..Default::default()
        };
        let single = vec![pair(1, 300, 300, 0.5, 0.1)];
        let point = rho_lag(&single, &[1.0]).value;
        assert_eq!(bootstrap_rho(&single, &cfg).unwrap(), (point, point));
        let anti = vec![
            pair(1, 200, 200, 0.3, -0.3),
            pair(2, 250, 200, 0.5, -0.5),
            pair(3, 250, 900, 0.1, -0.1),
        ];
        assert_eq!(bootstrap_rho(&anti, &cfg).unwrap(), (1.0, 1.0));
        let none = BootstrapConfig {
            replicates: 0,
            ..Default::default()
        };
        assert!(matches!(bootstrap_rho(&anti, &none), Err(DecompError::NoReplicates)));
    }

    #[test]
    fn bootstrap_is_seed_deterministic() {
        let pairs: Vec<MirrorPair> = (1..=8)
            .map(|i| pair(i, 200 + 37 * i as u64, 210, 0.05 * i as f64, -0.03 * i as f64 + 0.02))
            .collect();
        let cfg = BootstrapConfig {
            replicates: 500,
            seed: 9,
            ..Default::default()
        };
        let a = bootstrap_replicates(&pairs, &cfg).unwrap();
        let b = bootstrap_replicates(&pairs, &cfg).unwrap();
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        let c = bootstrap_replicates(&pairs, &BootstrapConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a, c);
        let retain = BootstrapConfig {
            recompute: RecomputeWeights::Retain,
            ..cfg
        };
        assert!(bootstrap_replicates(&pairs, &retain)
            .unwrap()
            .iter()
            .all(|r| r.abs() <= 1.0));
    }

    #[test]
    fn csv_round_trips() {
        let table = vec![LagPairs {
            lag: 5,
            pairs: vec![pair(1, 300, 250, 0.25, -0.125)],
        }];
        let rows = heatmap_rows(&table);
        let mut buf = Vec::new();
        write_heatmap_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with(&HEATMAP_HEADER.join(",")));
        let back = read_heatmap_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].s.to_bits(), rows[0].s.to_bits());
        assert!(back[0].weight.is_nan());

        let sums = vec![LagSummary {
            lag: 5,
            n_supported_pairs: 1,
            rho: 0.1,
            degenerate: false,
            ci_low: -0.2,
            ci_high: 0.3,
            m: 1.0 / 3.0,
            m_raw: 1e-5,
        }];
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &sums).unwrap();
        assert_eq!(read_summary_csv(&buf[..]).unwrap(), sums);

        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), SUMMARY_HEADER.join(",") + "\n");
    }
}
