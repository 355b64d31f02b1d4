//! Lag families, admissible anchors, per-lag moments and standardization.
//!
//! For a lag `L` and anchor `t`, the push is `m[t] - m[t-L]` and the response
//! `m[t+L] - m[t]`. An anchor is admissible only when `t-L`, `t` and `t+L`
//! all lie inside one session, so no pair ever straddles an open or close.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::series::{MidSeries, Session};
use crate::stats::MomentAccumulator;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LagError {
    #[error("invalid lag grid: {0}")]
    InvalidGrid(String),
    #[error("lag {lag}: {n_pairs} admissible anchors, need at least 2")]
    InsufficientSupport { lag: usize, n_pairs: u64 },
    #[error("lag {lag}: zero variance in {which}")]
    ZeroVariance { lag: usize, which: &'static str },
}

/// Which family (or custom list) of lags to analyze.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagSelection {
    Short,
    Long,
    Custom(Vec<usize>),
}

/// The two lag families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagGrid {
    pub short_family: Vec<usize>,
    pub long_family: Vec<usize>,
}

impl Default for LagGrid {
    fn default() -> Self {
        let short_family = std::iter::once(1).chain((50..=5000).step_by(50)).collect();
        let long_family = (1000..=500_000).step_by(1000).collect();
        Self {
            short_family,
            long_family,
        }
    }
}

/// Checks a custom lag list: non-empty, positive, strictly increasing.
pub fn validate_lags(lags: &[usize]) -> Result<(), LagError> {
    if lags.is_empty() {
        return Err(LagError::InvalidGrid("empty lag list".into()));
    }
    if let Some(&l) = lags.iter().find(|&&l| l == 0) {
        return Err(LagError::InvalidGrid(format!("lag {l} is not positive")));
    }
    if let Some(w) = lags.windows(2).find(|w| w[1] <= w[0]) {
        return Err(LagError::InvalidGrid(format!(
            "lags not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

impl LagSelection {
    /// Resolves the selection to a concrete lag list.
    pub fn lags(&self) -> Result<Vec<usize>, LagError> {
        let grid = LagGrid::default();
        let lags = match self {
            LagSelection::Short => grid.short_family,
            LagSelection::Long => grid.long_family,
            LagSelection::Custom(v) => v.clone(),
        };
        validate_lags(&lags)?;
        Ok(lags)
    }

    /// Parses `short`, `long`, or a comma-separated list such as `10,20,30`.
    pub fn parse(s: &str) -> Result<Self, LagError> {
        match s.trim() {
            "short" => Ok(LagSelection::Short),
            "long" => Ok(LagSelection::Long),
            other => {
                let lags = parse_lag_list(other)?;
                validate_lags(&lags)?;
                Ok(LagSelection::Custom(lags))
            }
        }
    }
}

/// Parses lags separated by commas, whitespace or newlines.
pub fn parse_lag_list(text: &str) -> Result<Vec<usize>, LagError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| LagError::InvalidGrid(format!("not a lag: {t:?}")))
        })
        .collect()
}

/// Builds the default grid, or a grid whose families are the given custom lists.
pub fn build_lag_grid(short: Option<Vec<usize>>, long: Option<Vec<usize>>) -> Result<LagGrid, LagError> {
    let default = LagGrid::default();
    let short_family = short.unwrap_or(default.short_family);
    let long_family = long.unwrap_or(default.long_family);
    validate_lags(&short_family)?;
    validate_lags(&long_family)?;
    Ok(LagGrid {
        short_family,
        long_family,
    })
}

/// Admissible anchors of `session` at lag `lag`: `start+L ..= end-1-L`,
/// returned half-open. Empty when the session holds `2L` events or fewer.
pub fn admissible_anchors(session: &Session, lag: usize) -> Range<usize> {
    let lo = session.start + lag;
    let hi = session.end.saturating_sub(lag);
    if lo < hi {
        lo..hi
    } else {
        lo..lo
    }
}

pub fn n_admissible(series: &MidSeries, lag: usize) -> u64 {
    series
        .sessions
        .iter()
        .map(|s| admissible_anchors(s, lag).len() as u64)
        .sum()
}

/// Push and response at one anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushResponsePair {
    pub anchor: usize,
    pub push: f64,
    pub response: f64,
}

/// Iterates all admissible pairs of one session at `lag`.
pub fn session_pairs<'a>(
    series: &'a MidSeries,
    session: &Session,
    lag: usize,
) -> impl Iterator<Item = PushResponsePair> + 'a {
    let m = &series.mids;
    admissible_anchors(session, lag).map(move |t| PushResponsePair {
        anchor: t,
        push: m[t] - m[t - lag],
        response: m[t + lag] - m[t],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagMoments {
    pub lag: usize,
    pub n_pairs: u64,
    pub mu_p: f64,
    pub sigma_p: f64,
    pub mu_r: f64,
    pub sigma_r: f64,
}

/// Standardized push and response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardizedPair {
    pub z_p: f64,
    pub z_r: f64,
}

impl LagMoments {
    #[inline]
    pub fn standardize(&self, pair: &PushResponsePair) -> StandardizedPair {
        StandardizedPair {
            z_p: (pair.push - self.mu_p) / self.sigma_p,
            z_r: (pair.response - self.mu_r) / self.sigma_r,
        }
    }

    pub fn is_usable(&self) -> bool {
        self.sigma_p > 0.0 && self.sigma_r > 0.0 && self.n_pairs >= 2
    }
}

pub fn standardize(pair: &PushResponsePair, m: &LagMoments) -> StandardizedPair {
    m.standardize(pair)
}

/// Raw moments of one lag, before any usability check.
pub fn moments_unchecked(series: &MidSeries, lag: usize) -> LagMoments {
    // Shift by the first admissible pair to keep the variance well conditioned.
    let first = series
        .sessions
        .iter()
        .find_map(|s| session_pairs(series, s, lag).next());
    let (sp, sr) = first.map(|p| (p.push, p.response)).unwrap_or((0.0, 0.0));
    let partials: Vec<(MomentAccumulator, MomentAccumulator)> = series
        .sessions
        .par_iter()
        .map(|s| {
            let mut p = MomentAccumulator::new(sp);
            let mut r = MomentAccumulator::new(sr);
            for pair in session_pairs(series, s, lag) {
                p.push(pair.push);
                r.push(pair.response);
            }
            (p, r)
        })
        .collect();
    // Merge in session order so the result is independent of scheduling.
    let mut push = MomentAccumulator::new(sp);
    let mut resp = MomentAccumulator::new(sr);
    for (p, r) in &partials {
        push.merge(p);
        resp.merge(r);
    }
    LagMoments {
        lag,
        n_pairs: push.count(),
        mu_p: push.mean(),
        sigma_p: push.std_dev(),
        mu_r: resp.mean(),
        sigma_r: resp.std_dev(),
    }
}

/// Mean and population standard deviation of pushes and responses over every
/// admissible anchor of `lag`, pooled across sessions.
pub fn compute_moments(series: &MidSeries, lag: usize) -> Result<LagMoments, LagError> {
    if lag == 0 {
        return Err(LagError::InvalidGrid("lag must be >= 1".into()));
    }
    let m = moments_unchecked(series, lag);
    if m.n_pairs < 2 {
        return Err(LagError::InsufficientSupport {
            lag,
            n_pairs: m.n_pairs,
        });
    }
    if !(m.sigma_p > 0.0) {
        return Err(LagError::ZeroVariance { lag, which: "push" });
    }
    if !(m.sigma_r > 0.0) {
        return Err(LagError::ZeroVariance { lag, which: "response" });
    }
    Ok(m)
}

pub const MOMENTS_HEADER: &str = "lag,n_pairs,mu_p,sigma_p,mu_r,sigma_r";

pub fn write_moments_csv<W: std::io::Write>(w: W, moments: &[LagMoments]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(MOMENTS_HEADER.split(','))?;
    for m in moments {
        wr.write_record([
            m.lag.to_string(),
            m.n_pairs.to_string(),
            m.mu_p.to_string(),
            m.sigma_p.to_string(),
            m.mu_r.to_string(),
            m.sigma_r.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_moments_csv<R: std::io::Read>(r: R) -> Result<Vec<LagMoments>, csv::Error> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("").to_string();
        let bad = |what: &str| {
            csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("bad {what} in moments csv"),
            ))
        };
        out.push(LagMoments {
            lag: f(0).parse().map_err(|_| bad("lag"))?,
            n_pairs: f(1).parse().map_err(|_| bad("n_pairs"))?,
            mu_p: f(2).parse().map_err(|_| bad("mu_p"))?,
            sigma_p: f(3).parse().map_err(|_| bad("sigma_p"))?,
            mu_r: f(4).parse().map_err(|_| bad("mu_r"))?,
            sigma_r: f(5).parse().map_err(|_| bad("sigma_r"))?,
        });
    }
    Ok(out)
}
