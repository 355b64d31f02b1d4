//! Event-time mid-price series split into regular trading sessions.

use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// One regular trading session: a contiguous run of event indices.
///
/// `start..end` is half-open. Indices are global positions in the owning
/// [`MidSeries::mids`] array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    /// Calendar day as days since 1970-01-01.
    pub day: u32,
    pub start: usize,
    pub end: usize,
}

impl Session {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn date(&self) -> Option<NaiveDate> {
        day_to_date(self.day)
    }
}

pub fn date_to_day(date: NaiveDate) -> u32 {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
    (date - epoch).num_days() as u32
}

pub fn day_to_date(day: u32) -> Option<NaiveDate> {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1)?;
    epoch.checked_add_days(chrono::Days::new(u64::from(day)))
}

/// Ordered sessions over a single flat array of mid prices.
///
/// Every index of `mids` belongs to exactly one session; sessions are ordered
/// and do not overlap. No lag computation ever pairs events across a session
/// boundary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MidSeries {
    pub sessions: Vec<Session>,
    pub mids: Vec<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SeriesError {
    #[error("session {index} does not start where the previous one ended")]
    NonContiguous { index: usize },
    #[error("session {index} has end before start")]
    Inverted { index: usize },
    #[error("sessions cover {covered} events but the series holds {len}")]
    CoverageMismatch { covered: usize, len: usize },
    #[error("session days are not strictly increasing at session {index}")]
    UnorderedDays { index: usize },
}

impl MidSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a series from per-session price vectors, in order.
    ///
    /// Empty sessions are skipped.
    pub fn from_sessions<I>(sessions: I) -> Self
    where
        I: IntoIterator<Item = (u32, Vec<f64>)>,
    {
        let mut out = MidSeries::new();
        for (day, prices) in sessions {
            out.push_session(day, &prices);
        }
        out
    }

    pub fn push_session(&mut self, day: u32, prices: &[f64]) {
        if prices.is_empty() {
            return;
        }
        let start = self.mids.len();
        self.mids.extend_from_slice(prices);
        self.sessions.push(Session {
            day,
            start,
            end: self.mids.len(),
        });
    }

    pub fn len(&self) -> usize {
        self.mids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mids.is_empty()
    }

    pub fn session_prices(&self, session: &Session) -> &[f64] {
        &self.mids[session.range()]
    }

    /// Checks the structural invariants: contiguous, ordered, full coverage.
    pub fn validate(&self) -> Result<(), SeriesError> {
        let mut cursor = 0;
        let mut last_day: Option<u32> = None;
        for (index, s) in self.sessions.iter().enumerate() {
            if s.end < s.start {
                return Err(SeriesError::Inverted { index });
            }
            if s.start != cursor {
                return Err(SeriesError::NonContiguous { index });
            }
            if last_day.is_some_and(|d| d >= s.day) {
                return Err(SeriesError::UnorderedDays { index });
            }
            last_day = Some(s.day);
            cursor = s.end;
        }
        if cursor != self.mids.len() {
            return Err(SeriesError::CoverageMismatch {
                covered: cursor,
                len: self.mids.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_sessions_skips_empty_and_keeps_bounds() {
        let s = MidSeries::from_sessions(vec![(1, vec![1.0, 2.0]), (2, vec![]), (3, vec![5.0])]);
        assert_eq!(s.sessions.len(), 2);
        assert_eq!(
            s.sessions[1],
            Session {
                day: 3,
                start: 2,
                end: 3
            }
        );
        s.validate().unwrap();
    }

    #[test]
    fn validate_rejects_gaps() {
        let s = MidSeries {
            sessions: vec![Session {
                day: 1,
                start: 1,
                end: 2,
            }],
            mids: vec![1.0, 2.0],
        };
        assert_eq!(s.validate(), Err(SeriesError::NonContiguous { index: 0 }));
    }

    #[test]
    fn day_round_trip() {
        let d = NaiveDate::from_ymd_opt(2019, 1, 2).unwrap();
        assert_eq!(day_to_date(date_to_day(d)), Some(d));
        assert_eq!(date_to_day(d), 17898);
    }
}
