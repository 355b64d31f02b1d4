//! Seeded synthetic event-time series with known lag structure.
//!
//! Increments follow `x_t = e_t + phi * e_{t-L0}` (plus, for the asymmetric
//! kind, `asym_gain * |e_{t-L0}|` whenever `e_{t-L0} < 0`) with `e` i.i.d.
//! Each session draws `L0` burn-in innovations first so the lagged term is
//! defined from the first increment, and each session has its own seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lags::{session_pairs, LagMoments};
use crate::series::{MidSeries, Session};
use crate::stats::NeumaierSum;
use crate::surface::BinGrid;

/// First session day of generated series (2019-01-02).
pub const FIRST_DAY: u32 = 17_898;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    NullWalk,
    Momentum,
    Reversal,
    Asymmetric,
}

impl SyntheticKind {
    pub fn is_injected(self) -> bool {
        self != SyntheticKind::NullWalk
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "null_walk" | "null" => Ok(SyntheticKind::NullWalk),
            "momentum" => Ok(SyntheticKind::Momentum),
            "reversal" => Ok(SyntheticKind::Reversal),
            "asymmetric" => Ok(SyntheticKind::Asymmetric),
            _ => Err(format!("unknown kind {s:?}")),
        }
    }
}

/// Innovation law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    /// Normal with standard deviation `tick`.
    #[default]
    Gaussian,
    /// `+tick` or `-tick` with equal probability.
    Coin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n_events: usize,
    pub n_sessions: usize,
    pub tick: f64,
    pub inject_lag: usize,
    pub phi: f64,
    pub asym_gain: f64,
    pub seed: u64,
    #[serde(default)]
    pub innovation: Innovation,
    /// Round every price to a multiple of `tick`.
    #[serde(default)]
    pub quantize: bool,
    #[serde(default = "default_start_price")]
    pub start_price: f64,
}

fn default_start_price() -> f64 {
    100.0
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            kind: SyntheticKind::NullWalk,
            n_events: 100_000,
            n_sessions: 1,
            tick: 0.01,
            inject_lag: 50,
            phi: 0.0,
            asym_gain: 0.0,
            seed: 0,
            innovation: Innovation::Gaussian,
            quantize: false,
            start_price: default_start_price(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SyntheticError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

fn invalid(msg: impl Into<String>) -> SyntheticError {
    SyntheticError::InvalidSpec(msg.into())
}

impl SyntheticSpec {
    pub fn momentum(n_events: usize, n_sessions: usize, inject_lag: usize, phi: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::Momentum,
            n_events,
            n_sessions,
            inject_lag,
            phi,
            seed,
            ..Self::default()
        }
    }

    pub fn null_walk(n_events: usize, n_sessions: usize, seed: u64) -> Self {
        Self {
            n_events,
            n_sessions,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.n_sessions == 0 {
            return Err(invalid("n_sessions must be positive"));
        }
        if self.n_events < 2 * self.n_sessions {
            return Err(invalid("need at least two events per session"));
        }
        if !(self.tick.is_finite() && self.tick > 0.0) {
            return Err(invalid("tick must be positive"));
        }
        if !(self.start_price.is_finite() && self.start_price > 0.0) {
            return Err(invalid("start_price must be positive"));
        }
        if !self.kind.is_injected() {
            return Ok(());
        }
        if self.inject_lag == 0 {
            return Err(invalid("inject_lag must be positive"));
        }
        if !(self.phi > -1.0 && self.phi < 1.0) {
            return Err(invalid("phi must lie in (-1, 1)"));
        }
        if !(self.asym_gain.is_finite() && self.asym_gain >= 0.0) {
            return Err(invalid("asym_gain must be non-negative"));
        }
        if self.n_events < 2 * (self.inject_lag + 1) * self.n_sessions {
            return Err(invalid("n_events must be at least 2*(L0+1)*n_sessions"));
        }
        match self.kind {
            SyntheticKind::Momentum if self.phi <= 0.0 => Err(invalid("momentum needs phi > 0")),
            SyntheticKind::Reversal if self.phi >= 0.0 => Err(invalid("reversal needs phi < 0")),
            _ => Ok(()),
        }
    }

    /// Event counts per session: equal split, remainder to the first sessions.
    pub fn session_lengths(&self) -> Vec<usize> {
        let base = self.n_events / self.n_sessions;
        let extra = self.n_events % self.n_sessions;
        (0..self.n_sessions).map(|s| base + usize::from(s < extra)).collect()
    }

    fn session_seed(&self, s: usize) -> u64 {
        let mut z = self.seed ^ (s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

fn draw(rng: &mut ChaCha8Rng, spec: &SyntheticSpec) -> f64 {
    match spec.innovation {
        Innovation::Gaussian => spec.tick * rng.sample::<f64, _>(StandardNormal),
        Innovation::Coin => {
            if rng.random::<bool>() {
                spec.tick
            } else {
                -spec.tick
            }
        }
    }
}

fn fill_session(spec: &SyntheticSpec, s: usize, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.session_seed(s));
    let lag = if spec.kind.is_injected() { spec.inject_lag } else { 0 };
    // ring buffer of the last `lag` innovations
    let mut ring: Vec<f64> = (0..lag).map(|_| draw(&mut rng, spec)).collect();
    let mut head = 0;
    let mut price = spec.start_price;
    let emit = |p: f64| {
        if spec.quantize {
            (p / spec.tick).round() * spec.tick
        } else {
            p
        }
    };
    out[0] = emit(price);
    for slot in out.iter_mut().skip(1) {
        let e = draw(&mut rng, spec);
        let mut x = e;
        if lag > 0 {
            let old = ring[head];
            x += spec.phi * old;
            if spec.kind == SyntheticKind::Asymmetric && old < 0.0 {
                x += spec.asym_gain * old.abs();
            }
            ring[head] = e;
            head = (head + 1) % lag;
        }
        price += x;
        *slot = emit(price);
    }
}

fn generate(spec: &SyntheticSpec) -> MidSeries {
    let lengths = spec.session_lengths();
    let mut mids = vec![0.0; spec.n_events];
    let mut sessions = Vec::with_capacity(lengths.len());
    let mut chunks = Vec::with_capacity(lengths.len());
    let mut rest = mids.as_mut_slice();
    let mut start = 0;
    for (s, &len) in lengths.iter().enumerate() {
        let (head, tail) = rest.split_at_mut(len);
        chunks.push((s, head));
        rest = tail;
        sessions.push(Session {
            day: FIRST_DAY + s as u32,
            start,
            end: start + len,
        });
        start += len;
    }
    chunks
        .into_par_iter()
        .for_each(|(s, chunk)| fill_session(spec, s, chunk));
    MidSeries { sessions, mids }
}

pub fn gen_null_walk(spec: &SyntheticSpec) -> Result<MidSeries, SyntheticError> {
    if spec.kind != SyntheticKind::NullWalk {
        return Err(invalid("gen_null_walk needs kind null_walk"));
    }
    spec.validate()?;
    Ok(generate(spec))
}

pub fn gen_injected(spec: &SyntheticSpec) -> Result<MidSeries, SyntheticError> {
    if !spec.kind.is_injected() {
        return Err(invalid("gen_injected needs an injected kind"));
    }
    spec.validate()?;
    Ok(generate(spec))
}

/// Dispatches on `spec.kind`.
pub fn generate_series(spec: &SyntheticSpec) -> Result<MidSeries, SyntheticError> {
    if spec.kind.is_injected() {
        gen_injected(spec)
    } else {
        gen_null_walk(spec)
    }
}

/// Brute-force reference cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCell {
    pub count: u64,
    pub mean_zr: Option<f64>,
}

/// Reference conditional response means at `lag`, computed by materializing
/// every pair of `series`, standardizing with two-pass moments and averaging
/// per bin. Cells below the grid's support threshold carry no mean.
pub fn response_oracle(series: &MidSeries, lag: usize, grid: &BinGrid) -> (LagMoments, Vec<OracleCell>) {
    let pairs: Vec<_> = series
        .sessions
        .iter()
        .flat_map(|s| session_pairs(series, s, lag))
        .collect();
    let n = pairs.len() as f64;
    let mean = |f: &dyn Fn(usize) -> f64| {
        let mut s = NeumaierSum::new();
        (0..pairs.len()).for_each(|i| s.add(f(i)));
        s.value() / n
    };
    let mu_p = mean(&|i| pairs[i].push);
    let mu_r = mean(&|i| pairs[i].response);
    let sigma_p = mean(&|i| (pairs[i].push - mu_p).powi(2)).sqrt();
    let sigma_r = mean(&|i| (pairs[i].response - mu_r).powi(2)).sqrt();
    let moments = LagMoments {
        lag,
        n_pairs: pairs.len() as u64,
        mu_p,
        sigma_p,
        mu_r,
        sigma_r,
    };
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); grid.n_bins()];
    for p in &pairs {
        if let Some(j) = grid.bin_index((p.push - mu_p) / sigma_p) {
            groups[j - 1].push((p.response - mu_r) / sigma_r);
        }
    }
    let cells = groups
        .iter()
        .map(|g| {
            let count = g.len() as u64;
            let mean_zr = (count >= grid.n_min() && count > 0).then(|| {
                let mut s = NeumaierSum::new();
                g.iter().for_each(|&z| s.add(z));
                s.value() / count as f64
            });
            OracleCell { count, mean_zr }
        })
        .collect();
    (moments, cells)
}

/// [`response_oracle`] on a freshly generated series.
pub fn expected_response_oracle(
    spec: &SyntheticSpec,
    lag: usize,
    grid: &BinGrid,
) -> Result<Vec<OracleCell>, SyntheticError> {
    let series = generate_series(spec)?;
    Ok(response_oracle(&series, lag, grid).1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn increments(s: &MidSeries) -> Vec<f64> {
        s.sessions
            .iter()
            .flat_map(|sess| s.mids[sess.range()].windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>())
            .collect()
    }

    fn corr(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    fn push_response_corr(s: &MidSeries, lag: usize) -> f64 {
        let pairs: Vec<_> = s.sessions.iter().flat_map(|x| session_pairs(s, x, lag)).collect();
        let p: Vec<f64> = pairs.iter().map(|q| q.push).collect();
        let r: Vec<f64> = pairs.iter().map(|q| q.response).collect();
        corr(&p, &r)
    }

    #[test]
    fn coin_walk_is_reproducible() {
        let spec = SyntheticSpec {
            n_events: 4,
            innovation: Innovation::Coin,
            seed: 11,
            ..SyntheticSpec::default()
        };
        let a = gen_null_walk(&spec).unwrap();
        let b = gen_null_walk(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        for d in increments(&a) {
            assert!((d.abs() - 0.01).abs() < 1e-9);
        }
        let c = gen_null_walk(&SyntheticSpec {
            seed: 12,
            n_events: 64,
            ..spec
        })
        .unwrap();
        let d = gen_null_walk(&SyntheticSpec { n_events: 64, ..spec }).unwrap();
        assert_ne!(c.mids, d.mids);
    }

    #[test]
    fn sessions_split_equally() {
        let spec = SyntheticSpec::null_walk(10, 3, 1);
        let s = gen_null_walk(&spec).unwrap();
        s.validate().unwrap();
        let lens: Vec<usize> = s.sessions.iter().map(Session::len).collect();
        assert_eq!(lens, vec![4, 3, 3]);
        assert_eq!(s.sessions[0].day, FIRST_DAY);
    }

    #[test]
    fn null_increments_are_uncorrelated() {
        let n = 200_000;
        let s = gen_null_walk(&SyntheticSpec::null_walk(n, 1, 3)).unwrap();
        let x = increments(&s);
        let bound = 4.0 / (x.len() as f64).sqrt();
        let sd = 0.01;
        assert!((x.iter().sum::<f64>() / x.len() as f64 / sd).abs() < bound);
        for lag in [1, 2, 5, 50, 100] {
            let r = corr(&x[..x.len() - lag], &x[lag..]);
            assert!(r.abs() < bound, "lag {lag}: {r}");
        }
    }

    #[test]
    fn momentum_and_reversal_signs() {
        let m = gen_injected(&SyntheticSpec::momentum(400_000, 4, 50, 0.3, 5)).unwrap();
        assert!(push_response_corr(&m, 50) > 0.05);
        assert!(push_response_corr(&m, 1).abs() < 0.02);
        let r = gen_injected(&SyntheticSpec {
            kind: SyntheticKind::Reversal,
            phi: -0.3,
            ..SyntheticSpec::momentum(400_000, 4, 50, 0.3, 5)
        })
        .unwrap();
        assert!(push_response_corr(&r, 50) < -0.05);
    }

    #[test]
    fn zero_phi_matches_null_law() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::Asymmetric,
            phi: 0.0,
            asym_gain: 0.0,
            ..SyntheticSpec::momentum(100_000, 1, 10, 0.3, 4)
        };
        let x = increments(&gen_injected(&spec).unwrap());
        let r = corr(&x[..x.len() - 10], &x[10..]);
        assert!(r.abs() < 4.0 / (x.len() as f64).sqrt());
    }

    #[test]
    fn validation() {
        let good = SyntheticSpec::momentum(1000, 2, 10, 0.3, 0);
        good.validate().unwrap();
        let bad = [
            SyntheticSpec { n_events: 43, ..good },
            SyntheticSpec { phi: 1.0, ..good },
            SyntheticSpec { phi: -0.2, ..good },
            SyntheticSpec { inject_lag: 0, ..good },
            SyntheticSpec { tick: 0.0, ..good },
            SyntheticSpec { n_sessions: 0, ..good },
            SyntheticSpec {
                kind: SyntheticKind::Asymmetric,
                asym_gain: -1.0,
                ..good
            },
        ];
        for b in bad {
            assert!(b.validate().is_err(), "{b:?}");
        }
        assert!(gen_null_walk(&good).is_err());
        assert!(gen_injected(&SyntheticSpec::null_walk(10, 1, 0)).is_err());
        SyntheticSpec { n_events: 44, ..good }.validate().unwrap();
    }

    #[test]
    fn quantized_prices_sit_on_ticks() {
        let spec = SyntheticSpec {
            quantize: true,
            ..SyntheticSpec::null_walk(1000, 2, 8)
        };
        let s = gen_null_walk(&spec).unwrap();
        for &m in &s.mids {
            let k = m / 0.01;
            assert!((k - k.round()).abs() < 1e-6);
        }
    }

    #[test]
    fn oracle_null_walk_is_flat() {
        let spec = SyntheticSpec::null_walk(200_000, 2, 21);
        let grid = BinGrid::default();
        let cells = expected_response_oracle(&spec, 10, &grid).unwrap();
        let valid: Vec<_> = cells.iter().filter(|c| c.mean_zr.is_some()).collect();
        assert!(!valid.is_empty());
        let extreme = valid
            .iter()
            .filter(|c| c.mean_zr.unwrap().abs() > 4.0 / (c.count as f64).sqrt())
            .count();
        assert!(extreme <= 1);
    }

    #[test]
    fn oracle_momentum_slope_and_asymmetry() {
        let grid = BinGrid::default();
        let spec = SyntheticSpec::momentum(400_000, 2, 20, 0.3, 2);
        let cells = expected_response_oracle(&spec, 20, &grid).unwrap();
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (j, c) in cells.iter().enumerate() {
            if let Some(m) = c.mean_zr {
                let z = grid.bin_center(j + 1).unwrap();
                sxy += z * m;
                sxx += z * z;
            }
        }
        assert!(sxy / sxx > 0.1);

        let asym = SyntheticSpec {
            kind: SyntheticKind::Asymmetric,
            phi: 0.0,
            asym_gain: 0.5,
            ..spec
        };
        let cells = expected_response_oracle(&asym, 20, &grid).unwrap();
        let half = grid.n_bins() / 2;
        let mut checked = 0;
        for a in 1..=half {
            let (p, n) = (cells[half + a - 1].mean_zr, cells[half - a].mean_zr);
            if let (Some(p), Some(n)) = (p, n) {
                if grid.bin_center(half + a).unwrap() >= 2.0 {
                    assert!(p + n > 0.0, "a={a}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }
}
