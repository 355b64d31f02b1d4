//! Quote ingestion: per-venue top-of-book records to a consolidated,
//! deduplicated NBBO and a per-session mid-price series.
//!
//! The stages are kept separate so each can be checked on its own:
//!
//! 1. [`parse_quote_record`] / [`read_quotes`] turn CSV lines into [`QuoteEvent`]s.
//! 2. [`filter_eligible`] keeps regular (`R`) quotes inside regular trading hours.
//! 3. [`consolidate_nbbo`] merges the venue streams into [`NbboEvent`]s.
//! 4. [`build_mid_series`] lays the mids out per session.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::{DateTime, NaiveTime, Timelike};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::series::{date_to_day, MidSeries};

/// Price in integer micro-dollars. Ordering and equality are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Price(pub i64);

impl Price {
    pub const SCALE: i64 = 1_000_000;

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }
}

impl FromStr for Price {
    type Err = ();

    /// Parses a plain decimal with at most six fractional digits.
    fn from_str(s: &str) -> Result<Self, ()> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(());
        }
        if frac_part.len() > 6
            || !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(());
        }
        let int: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| ())?
        };
        let mut frac: i64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| ())?
        };
        for _ in frac_part.len()..6 {
            frac *= 10;
        }
        let v = int
            .checked_mul(Self::SCALE)
            .and_then(|v| v.checked_add(frac))
            .ok_or(())?;
        Ok(Price(if neg { -v } else { v }))
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:06}", a / 1_000_000, a % 1_000_000)
    }
}

/// The seven exchanges whose top of book forms the NBBO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Venue {
    Nyse,
    Nasdaq,
    Arca,
    Bzx,
    Byx,
    Edgx,
    Edga,
}

impl Venue {
    pub const ALL: [Venue; 7] = [
        Venue::Nyse,
        Venue::Nasdaq,
        Venue::Arca,
        Venue::Bzx,
        Venue::Byx,
        Venue::Edgx,
        Venue::Edga,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Venue::Nyse => "NYSE",
            Venue::Nasdaq => "NASDAQ",
            Venue::Arca => "ARCA",
            Venue::Bzx => "BZX",
            Venue::Byx => "BYX",
            Venue::Edgx => "EDGX",
            Venue::Edga => "EDGA",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl FromStr for Venue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let up = s.trim().to_ascii_uppercase();
        Venue::ALL
            .into_iter()
            .find(|v| v.code() == up)
            .ok_or_else(|| format!("unknown venue {s:?}"))
    }
}

impl fmt::Display for Venue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One venue-level top-of-book update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoteEvent {
    pub timestamp: i64,
    pub venue: Venue,
    pub bid_price: Price,
    pub bid_size: u64,
    pub ask_price: Price,
    pub ask_size: u64,
    pub condition: char,
}

/// One consolidated book state change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbboEvent {
    pub event_index: usize,
    pub timestamp: i64,
    /// Session day (days since epoch, exchange-local calendar).
    pub day: u32,
    pub best_bid: Price,
    pub best_ask: Price,
    pub mid: f64,
}

impl NbboEvent {
    pub fn mid_of(bid: Price, ask: Price) -> f64 {
        // Integer sum is exact; the single division rounds once.
        (bid.0 + ask.0) as f64 / (2 * Price::SCALE) as f64
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("malformed record at line {line}: field `{field}`")]
    MalformedRecord { line: u64, field: &'static str },
    #[error("missing or wrong header: expected `{expected}`")]
    BadHeader { expected: &'static str },
    #[error("timestamps decrease within the {venue} feed at {timestamp}")]
    UnorderedFeed { venue: Venue, timestamp: i64 },
    #[error("unknown time zone {0:?}")]
    UnknownTimeZone(String),
    #[error("csv error: {0}")]
    Csv(String),
}

pub const QUOTE_HEADER: [&str; 7] = [
    "timestamp_ns",
    "venue",
    "bid_price",
    "bid_size",
    "ask_price",
    "ask_size",
    "condition",
];

pub const NBBO_HEADER: [&str; 3] = ["timestamp_ns", "bid_price", "ask_price"];

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, name: &'static str, line: u64) -> Result<&'a str, IngestError> {
    rec.get(idx)
        .map(str::trim)
        .ok_or(IngestError::MalformedRecord { line, field: name })
}

fn positive_price(s: &str, line: u64, name: &'static str) -> Result<Price, IngestError> {
    match s.parse::<Price>() {
        Ok(p) if p.0 > 0 => Ok(p),
        _ => Err(IngestError::MalformedRecord { line, field: name }),
    }
}

/// Parses one data record of the quote schema
/// `timestamp_ns,venue,bid_price,bid_size,ask_price,ask_size,condition`.
pub fn parse_quote_record(rec: &csv::StringRecord, line: u64) -> Result<QuoteEvent, IngestError> {
    let bad = |field| IngestError::MalformedRecord { line, field };
    if rec.len() != QUOTE_HEADER.len() {
        return Err(bad("record"));
    }
    let timestamp = field(rec, 0, "timestamp_ns", line)?
        .parse::<i64>()
        .map_err(|_| bad("timestamp_ns"))?;
    let venue = field(rec, 1, "venue", line)?
        .parse::<Venue>()
        .map_err(|_| bad("venue"))?;
    let bid_price = positive_price(field(rec, 2, "bid_price", line)?, line, "bid_price")?;
    let bid_size = field(rec, 3, "bid_size", line)?
        .parse::<u64>()
        .map_err(|_| bad("bid_size"))?;
    let ask_price = positive_price(field(rec, 4, "ask_price", line)?, line, "ask_price")?;
    let ask_size = field(rec, 5, "ask_size", line)?
        .parse::<u64>()
        .map_err(|_| bad("ask_size"))?;
    let cond_str = field(rec, 6, "condition", line)?;
    let mut chars = cond_str.chars();
    let condition = match (chars.next(), chars.next()) {
        (Some(c), None) => c,
        _ => return Err(bad("condition")),
    };
    Ok(QuoteEvent {
        timestamp,
        venue,
        bid_price,
        bid_size,
        ask_price,
        ask_size,
        condition,
    })
}

/// Parses a single CSV line (no header) of the quote schema.
pub fn parse_quote_line(line: &str, line_no: u64) -> Result<QuoteEvent, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(line.as_bytes());
    let rec = rdr
        .records()
        .next()
        .ok_or(IngestError::MalformedRecord {
            line: line_no,
            field: "record",
        })?
        .map_err(|_| IngestError::MalformedRecord {
            line: line_no,
            field: "record",
        })?;
    parse_quote_record(&rec, line_no)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityReport {
    pub records_read: u64,
    pub malformed_skipped: u64,
    pub dropped_condition: u64,
    pub dropped_outside_rth: u64,
    pub incomplete_book: u64,
    pub unchanged_suppressed: u64,
    pub crossed_withheld: u64,
    pub locked_kept: u64,
    pub nbbo_events: u64,
}

impl QualityReport {
    pub fn absorb(&mut self, other: &QualityReport) {
        self.records_read += other.records_read;
        self.malformed_skipped += other.malformed_skipped;
        self.dropped_condition += other.dropped_condition;
        self.dropped_outside_rth += other.dropped_outside_rth;
        self.incomplete_book += other.incomplete_book;
        self.unchanged_suppressed += other.unchanged_suppressed;
        self.crossed_withheld += other.crossed_withheld;
        self.locked_kept += other.locked_kept;
        self.nbbo_events += other.nbbo_events;
    }
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str], label: &'static str) -> Result<(), IngestError> {
    let headers = rdr.headers().map_err(|_| IngestError::BadHeader { expected: label })?;
    let ok = headers.len() == expected.len() && headers.iter().zip(expected).all(|(h, e)| h.trim() == *e);
    if ok {
        Ok(())
    } else {
        Err(IngestError::BadHeader { expected: label })
    }
}

/// Reads a quote CSV (header required). In lenient mode malformed records are
/// skipped and counted; in strict mode the first one is returned as an error.
pub fn read_quotes<R: Read>(
    reader: R,
    strict: bool,
    report: &mut QualityReport,
) -> Result<Vec<QuoteEvent>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    check_header(
        &mut rdr,
        &QUOTE_HEADER,
        "timestamp_ns,venue,bid_price,bid_size,ask_price,ask_size,condition",
    )?;
    let mut out = Vec::new();
    let mut rec = csv::StringRecord::new();
    let mut line = 1u64;
    loop {
        line += 1;
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                if strict {
                    return Err(IngestError::Csv(e.to_string()));
                }
                report.records_read += 1;
                report.malformed_skipped += 1;
                continue;
            }
        }
        report.records_read += 1;
        match parse_quote_record(&rec, line) {
            Ok(q) => out.push(q),
            Err(e) if strict => return Err(e),
            Err(e) => {
                log::debug!("skipping {e}");
                report.malformed_skipped += 1;
            }
        }
    }
    Ok(out)
}

/// Maps nanosecond timestamps to exchange-local regular trading sessions.
///
/// The window is half-open: 09:30:00 inclusive, 16:00:00 exclusive, evaluated
/// in the configured zone so daylight-saving transitions are honoured.
#[derive(Debug, Clone, Copy)]
pub struct RthCalendar {
    tz: Tz,
    open: NaiveTime,
    close: NaiveTime,
}

impl RthCalendar {
    pub fn new(tz: Tz) -> Self {
        Self {
            tz,
            open: NaiveTime::from_hms_opt(9, 30, 0).expect("valid time"),
            close: NaiveTime::from_hms_opt(16, 0, 0).expect("valid time"),
        }
    }

    pub fn from_name(name: &str) -> Result<Self, IngestError> {
        name.parse::<Tz>()
            .map(Self::new)
            .map_err(|_| IngestError::UnknownTimeZone(name.to_string()))
    }

    pub fn new_york() -> Self {
        Self::new(chrono_tz::America::New_York)
    }

    pub fn tz(&self) -> Tz {
        self.tz
    }

    /// Session day of `timestamp` if it falls inside regular hours.
    pub fn session_day(&self, timestamp: i64) -> Option<u32> {
        let local = DateTime::from_timestamp_nanos(timestamp).with_timezone(&self.tz);
        let t = local.time();
        let t = NaiveTime::from_hms_nano_opt(t.hour(), t.minute(), t.second(), t.nanosecond())?;
        (t >= self.open && t < self.close).then(|| date_to_day(local.date_naive()))
    }
}

/// Keeps only `R`-condition quotes inside regular trading hours.
pub fn filter_eligible<I>(events: I, calendar: &RthCalendar, report: &mut QualityReport) -> Vec<QuoteEvent>
where
    I: IntoIterator<Item = QuoteEvent>,
{
    let mut out = Vec::new();
    for q in events {
        if q.condition != 'R' {
            report.dropped_condition += 1;
        } else if calendar.session_day(q.timestamp).is_none() {
            report.dropped_outside_rth += 1;
        } else {
            out.push(q);
        }
    }
    out
}

/// Emits book states with deduplication and crossed-market withholding.
///
/// Dedup compares against the last *emitted* state, so a crossed excursion
/// that returns to the prior book produces no duplicate.
#[derive(Debug, Default)]
struct NbboEmitter {
    out: Vec<NbboEvent>,
    last: Option<(u32, Price, Price)>,
}

impl NbboEmitter {
    fn offer(&mut self, timestamp: i64, day: u32, bid: Price, ask: Price, report: &mut QualityReport) {
        if bid > ask {
            report.crossed_withheld += 1;
            return;
        }
        if self.last == Some((day, bid, ask)) {
            report.unchanged_suppressed += 1;
            return;
        }
        if bid == ask {
            report.locked_kept += 1;
        }
        self.last = Some((day, bid, ask));
        self.out.push(NbboEvent {
            event_index: self.out.len(),
            timestamp,
            day,
            best_bid: bid,
            best_ask: ask,
            mid: NbboEvent::mid_of(bid, ask),
        });
        report.nbbo_events += 1;
    }
}

/// Tie-break rank of each venue when several update at the same nanosecond.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VenuePriority(Vec<Venue>);

impl Default for VenuePriority {
    fn default() -> Self {
        VenuePriority(Venue::ALL.to_vec())
    }
}

impl VenuePriority {
    /// Venues missing from `order` rank after the listed ones, in default order.
    pub fn new(order: Vec<Venue>) -> Self {
        let mut v: Vec<Venue> = Vec::new();
        for x in order.into_iter().chain(Venue::ALL) {
            if !v.contains(&x) {
                v.push(x);
            }
        }
        VenuePriority(v)
    }

    pub fn rank(&self, venue: Venue) -> usize {
        self.0.iter().position(|v| *v == venue).unwrap_or(usize::MAX)
    }

    pub fn order(&self) -> &[Venue] {
        &self.0
    }
}

/// Splits a mixed stream into per-venue streams (stable within each venue).
pub fn split_by_venue(events: impl IntoIterator<Item = QuoteEvent>) -> Vec<Vec<QuoteEvent>> {
    let mut streams: Vec<Vec<QuoteEvent>> = vec![Vec::new(); Venue::ALL.len()];
    for q in events {
        streams[q.venue.slot()].push(q);
    }
    streams
}

/// K-way merge of per-venue streams into the consolidated NBBO.
///
/// After each venue update the best bid is the max of every venue's current
/// bid and the best ask the min of current asks. Venue state resets at each
/// new session day so no stale quote survives the close.
pub fn consolidate_nbbo(
    per_venue: &[Vec<QuoteEvent>],
    priority: &VenuePriority,
    calendar: &RthCalendar,
    report: &mut QualityReport,
) -> Result<Vec<NbboEvent>, IngestError> {
    for stream in per_venue {
        for w in stream.windows(2) {
            if w[1].timestamp < w[0].timestamp {
                return Err(IngestError::UnorderedFeed {
                    venue: w[1].venue,
                    timestamp: w[1].timestamp,
                });
            }
        }
    }

    // Heap key: (timestamp, venue rank, stream, position).
    let mut heap = BinaryHeap::new();
    for (s, stream) in per_venue.iter().enumerate() {
        if let Some(q) = stream.first() {
            heap.push(Reverse((q.timestamp, priority.rank(q.venue), s, 0usize)));
        }
    }

    let mut book: [Option<(Price, Price)>; 7] = [None; 7];
    let mut current_day: Option<u32> = None;
    let mut emitter = NbboEmitter::default();

    while let Some(Reverse((_, _, s, pos))) = heap.pop() {
        let stream = &per_venue[s];
        let q = stream[pos];
        if let Some(next) = stream.get(pos + 1) {
            heap.push(Reverse((next.timestamp, priority.rank(next.venue), s, pos + 1)));
        }
        let Some(day) = calendar.session_day(q.timestamp) else {
            report.dropped_outside_rth += 1;
            continue;
        };
        if current_day != Some(day) {
            book = [None; 7];
            current_day = Some(day);
        }
        book[q.venue.slot()] = Some((q.bid_price, q.ask_price));

        let mut best: Option<(Price, Price)> = None;
        for (b, a) in book.iter().flatten() {
            best = Some(match best {
                None => (*b, *a),
                Some((bb, ba)) => (bb.max(*b), ba.min(*a)),
            });
        }
        match best {
            Some((bid, ask)) => emitter.offer(q.timestamp, day, bid, ask, report),
            None => report.incomplete_book += 1,
        }
    }
    Ok(emitter.out)
}

/// A pre-consolidated top-of-book row (`timestamp_ns,bid_price,ask_price`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BookRow {
    pub timestamp: i64,
    pub bid: Price,
    pub ask: Price,
}

pub fn read_nbbo_rows<R: Read>(
    reader: R,
    strict: bool,
    report: &mut QualityReport,
) -> Result<Vec<BookRow>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    check_header(&mut rdr, &NBBO_HEADER, "timestamp_ns,bid_price,ask_price")?;
    let mut out = Vec::new();
    let mut line = 1u64;
    for rec in rdr.records() {
        line += 1;
        report.records_read += 1;
        let parsed = rec
            .map_err(|_| IngestError::MalformedRecord { line, field: "record" })
            .and_then(|rec| {
                if rec.len() != 3 {
                    return Err(IngestError::MalformedRecord { line, field: "record" });
                }
                let timestamp = rec[0].trim().parse::<i64>().map_err(|_| IngestError::MalformedRecord {
                    line,
                    field: "timestamp_ns",
                })?;
                let bid = positive_price(&rec[1], line, "bid_price")?;
                let ask = positive_price(&rec[2], line, "ask_price")?;
                Ok(BookRow { timestamp, bid, ask })
            });
        match parsed {
            Ok(r) => out.push(r),
            Err(e) if strict => return Err(e),
            Err(_) => report.malformed_skipped += 1,
        }
    }
    Ok(out)
}

/// NBBO from an already consolidated feed: RTH filter, dedup and crossed
/// handling are applied, the venue merge is skipped.
pub fn nbbo_from_book_rows(
    rows: &[BookRow],
    calendar: &RthCalendar,
    report: &mut QualityReport,
) -> Result<Vec<NbboEvent>, IngestError> {
    let mut emitter = NbboEmitter::default();
    let mut last_ts = i64::MIN;
    for r in rows {
        if r.timestamp < last_ts {
            return Err(IngestError::Csv(format!(
                "timestamps decrease in consolidated feed at {}",
                r.timestamp
            )));
        }
        last_ts = r.timestamp;
        match calendar.session_day(r.timestamp) {
            Some(day) => emitter.offer(r.timestamp, day, r.bid, r.ask, report),
            None => report.dropped_outside_rth += 1,
        }
    }
    Ok(emitter.out)
}

/// Lays consolidated mids out per session day. Event indices stay global;
/// sessions only record their bounds.
pub fn build_mid_series(nbbo: &[NbboEvent]) -> MidSeries {
    let mut series = MidSeries::new();
    if nbbo.is_empty() {
        log::warn!("no eligible NBBO events; mid series is empty");
        return series;
    }
    let mut start = 0;
    for i in 1..=nbbo.len() {
        if i == nbbo.len() || nbbo[i].day != nbbo[start].day {
            let prices: Vec<f64> = nbbo[start..i].iter().map(|e| e.mid).collect();
            series.push_session(nbbo[start].day, &prices);
            start = i;
        }
    }
    series
}
