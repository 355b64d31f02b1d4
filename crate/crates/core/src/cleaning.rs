//! Outlier controls on the mid-price series: quantile winsorization of
//! one-event increments followed by a single-pass jump filter.

use serde::{Deserialize, Serialize};

use crate::series::MidSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleaningConfig {
    pub lower_q: f64,
    pub upper_q: f64,
    /// Absolute price change (USD) above which both endpoints are dropped.
    pub jump_threshold: f64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            lower_q: 0.00001,
            upper_q: 0.99999,
            jump_threshold: 1.50,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CleaningError {
    #[error("empirical quantile of an empty sample")]
    EmptyInput,
    #[error("quantile level {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("quantile levels must satisfy lower < upper, got {lower} >= {upper}")]
    UnorderedQuantiles { lower: f64, upper: f64 },
    #[error("jump threshold must be positive, got {0}")]
    InvalidThreshold(f64),
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<(), CleaningError> {
        for p in [self.lower_q, self.upper_q] {
            if !(p > 0.0 && p < 1.0) {
                return Err(CleaningError::InvalidProbability(p));
            }
        }
        if self.lower_q >= self.upper_q {
            return Err(CleaningError::UnorderedQuantiles {
                lower: self.lower_q,
                upper: self.upper_q,
            });
        }
        if !(self.jump_threshold > 0.0) {
            return Err(CleaningError::InvalidThreshold(self.jump_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub n_input: u64,
    pub n_output: u64,
    pub n_increments: u64,
    pub n_winsorized_low: u64,
    pub n_winsorized_high: u64,
    pub n_jump_pairs: u64,
    pub n_jump_events_removed: u64,
    pub n_sessions_dropped: u64,
    pub q_low: Option<f64>,
    pub q_high: Option<f64>,
    /// Set when every increment was equal and winsorization was skipped.
    pub degenerate: bool,
    pub retention_ratio: f64,
}

impl CleaningReport {
    fn finish(&mut self) {
        self.retention_ratio = if self.n_input == 0 {
            1.0
        } else {
            self.n_output as f64 / self.n_input as f64
        };
    }
}

/// 1-based nearest rank `k = ceil(p * n)` clamped to `[1, n]`.
pub fn nearest_rank(p: f64, n: usize) -> usize {
    ((p * n as f64).ceil() as usize).clamp(1, n.max(1))
}

/// Nearest-rank (type 1) empirical quantile. Reorders `values` in place.
pub fn empirical_quantile_in_place(values: &mut [f64], p: f64) -> Result<f64, CleaningError> {
    if values.is_empty() {
        return Err(CleaningError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(CleaningError::InvalidProbability(p));
    }
    let k = nearest_rank(p, values.len());
    let (_, v, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*v)
}

pub fn empirical_quantile(values: &[f64], p: f64) -> Result<f64, CleaningError> {
    let mut buf = values.to_vec();
    empirical_quantile_in_place(&mut buf, p)
}

fn pooled_increments(series: &MidSeries) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    for s in &series.sessions {
        out.extend(series.session_prices(s).windows(2).map(|w| w[1] - w[0]));
    }
    out
}

/// Clamp bounds `(q_lower, q_upper)` from the pooled increment distribution,
/// or `None` when the series has no increments.
pub fn winsor_bounds(series: &MidSeries, cfg: &CleaningConfig) -> Result<Option<(f64, f64)>, CleaningError> {
    cfg.validate()?;
    let mut inc = pooled_increments(series);
    if inc.is_empty() {
        return Ok(None);
    }
    let n = inc.len();
    let k_lo = nearest_rank(cfg.lower_q, n);
    let k_hi = nearest_rank(cfg.upper_q, n);
    let (_, hi, _) = inc.select_nth_unstable_by(k_hi - 1, f64::total_cmp);
    let hi = *hi;
    // After the first selection every element left of k_hi is <= hi.
    let (_, lo, _) = inc[..k_hi].select_nth_unstable_by(k_lo - 1, f64::total_cmp);
    Ok(Some((*lo, hi)))
}

/// Clamps increments to `[lo, hi]` and rebuilds each session by cumulative
/// sum from its first mid.
///
/// Prices before the first clamp in a session are untouched. After a clamp,
/// each step reapplies the (possibly clamped) increment; the recomputed
/// float difference is nudged by ulps if rounding pushed it outside the band
/// so the clamp bound holds exactly on the output.
pub fn apply_winsor_bounds(series: &mut MidSeries, lo: f64, hi: f64, report: &mut CleaningReport) {
    let sessions = series.sessions.clone();
    for s in sessions {
        let prices = &mut series.mids[s.range()];
        let mut prev_orig = match prices.first() {
            Some(&p) => p,
            None => continue,
        };
        let mut shifted = false;
        for i in 1..prices.len() {
            let orig = prices[i];
            let r = orig - prev_orig;
            prev_orig = orig;
            let clamped = if r < lo {
                report.n_winsorized_low += 1;
                lo
            } else if r > hi {
                report.n_winsorized_high += 1;
                hi
            } else {
                r
            };
            report.n_increments += 1;
            if clamped != r {
                shifted = true;
            }
            if !shifted {
                continue;
            }
            let base = prices[i - 1];
            let mut m = base + clamped;
            while m - base > hi {
                m = m.next_down();
            }
            while m - base < lo {
                m = m.next_up();
            }
            prices[i] = m;
        }
    }
}

/// Winsorizes one-event increments at the pooled nearest-rank quantiles.
pub fn winsorize_returns(
    mut series: MidSeries,
    cfg: &CleaningConfig,
) -> Result<(MidSeries, CleaningReport), CleaningError> {
    let mut report = CleaningReport {
        n_input: series.len() as u64,
        ..Default::default()
    };
    if let Some((lo, hi)) = winsor_bounds(&series, cfg)? {
        report.q_low = Some(lo);
        report.q_high = Some(hi);
        if lo == hi {
            log::warn!("all increments equal ({lo}); winsorization skipped");
            report.degenerate = true;
        } else {
            apply_winsor_bounds(&mut series, lo, hi, &mut report);
        }
    }
    report.n_output = series.len() as u64;
    report.finish();
    Ok((series, report))
}

/// Drops both events of every consecutive pair with `|m_t - m_{t-1}| > threshold`.
///
/// Pairs are judged on the input adjacency in one pass; pairs that become
/// adjacent only after compaction are not re-examined. Sessions left empty
/// are dropped.
pub fn remove_jumps(series: MidSeries, cfg: &CleaningConfig) -> Result<(MidSeries, CleaningReport), CleaningError> {
    cfg.validate()?;
    let mut report = CleaningReport {
        n_input: series.len() as u64,
        ..Default::default()
    };
    let MidSeries { sessions, mut mids } = series;
    let mut remove = vec![false; mids.len()];
    for s in &sessions {
        for t in (s.start + 1)..s.end {
            if (mids[t] - mids[t - 1]).abs() > cfg.jump_threshold {
                remove[t] = true;
                remove[t - 1] = true;
                report.n_jump_pairs += 1;
            }
        }
    }

    let mut out_sessions = Vec::with_capacity(sessions.len());
    let mut write = 0;
    for s in &sessions {
        let start = write;
        for t in s.range() {
            if !remove[t] {
                mids[write] = mids[t];
                write += 1;
            }
        }
        if write > start {
            out_sessions.push(crate::series::Session {
                day: s.day,
                start,
                end: write,
            });
        } else {
            report.n_sessions_dropped += 1;
        }
    }
    mids.truncate(write);
    report.n_jump_events_removed = remove.iter().filter(|&&r| r).count() as u64;
    report.n_output = write as u64;
    report.finish();
    Ok((
        MidSeries {
            sessions: out_sessions,
            mids,
        },
        report,
    ))
}

/// Winsorization then the jump filter, with a merged report.
pub fn clean(series: MidSeries, cfg: &CleaningConfig) -> Result<(MidSeries, CleaningReport), CleaningError> {
    let (w, wrep) = winsorize_returns(series, cfg)?;
    let (j, jrep) = remove_jumps(w, cfg)?;
    let mut report = CleaningReport {
        n_input: wrep.n_input,
        n_output: jrep.n_output,
        n_increments: wrep.n_increments,
        n_winsorized_low: wrep.n_winsorized_low,
        n_winsorized_high: wrep.n_winsorized_high,
        n_jump_pairs: jrep.n_jump_pairs,
        n_jump_events_removed: jrep.n_jump_events_removed,
        n_sessions_dropped: jrep.n_sessions_dropped,
        q_low: wrep.q_low,
        q_high: wrep.q_high,
        degenerate: wrep.degenerate,
        retention_ratio: 0.0,
    };
    report.finish();
    Ok((j, report))
}
