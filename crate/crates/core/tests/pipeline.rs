use pushresp::cleaning::{clean, CleaningConfig};
use pushresp::decomposition::{
    decompose, heatmap_rows, read_heatmap_csv, read_summary_csv, summarize, write_heatmap_csv, write_summary_csv,
    BootstrapConfig,
};
use pushresp::ingest::{
    build_mid_series, consolidate_nbbo, filter_eligible, nbbo_from_book_rows, read_nbbo_rows, read_quotes,
    split_by_venue, QualityReport, RthCalendar, VenuePriority,
};
use pushresp::lags::LagSelection;
use pushresp::prms;
use pushresp::surface::{build_surface, read_surface_csv, write_surface_csv, BinGrid};
use pushresp::synthetic::{generate_series, SyntheticSpec};

// 2024-03-04 09:30:00 America/New_York (EST)
const OPEN: i64 = 1_709_562_600_000_000_000;
const SEC: i64 = 1_000_000_000;

fn quotes_csv() -> String {
    let mut s = String::from("timestamp_ns,venue,bid_price,bid_size,ask_price,ask_size,condition\n");
    let rows = [
        (-60, "NYSE", "100.00", "100.02", 'R'), // pre-open
        (0, "NYSE", "100.00", "100.02", 'R'),
        (1, "ARCA", "100.01", "100.03", 'R'),
        (2, "ARCA", "100.01", "100.03", 'R'), // unchanged
        (3, "NYSE", "100.00", "100.02", 'X'), // not eligible
        (4, "NASDAQ", "100.03", "100.04", 'R'),
        (5, "NASDAQ", "100.04", "100.04", 'R'), // crossed against NYSE
        (6, "NYSE", "100.03", "100.05", 'R'),
        (7, "NASDAQ", "100.02", "100.06", 'R'), // locked
    ];
    for (t, v, b, a, c) in rows {
        s.push_str(&format!("{},{v},{b},100,{a},100,{c}\n", OPEN + t * SEC));
    }
    s
}

#[test]
fn quotes_to_mid_series() {
    let cal = RthCalendar::new_york();
    let mut report = QualityReport::default();
    let quotes = read_quotes(quotes_csv().as_bytes(), true, &mut report).unwrap();
    let eligible = filter_eligible(quotes, &cal, &mut report);
    let nbbo = consolidate_nbbo(&split_by_venue(eligible), &VenuePriority::default(), &cal, &mut report).unwrap();
    assert_eq!(report.records_read, 9);
    assert_eq!(report.dropped_condition, 1);
    assert_eq!(report.dropped_outside_rth, 1);
    assert!(report.crossed_withheld >= 1);

    let series = build_mid_series(&nbbo);
    assert_eq!(series.sessions.len(), 1);
    assert_eq!(series.mids.first(), Some(&100.01));
    for w in nbbo.windows(2) {
        assert!(w[0].timestamp <= w[1].timestamp);
        assert!((w[0].best_bid, w[0].best_ask) != (w[1].best_bid, w[1].best_ask));
    }
    assert!(nbbo.iter().all(|e| e.best_bid <= e.best_ask));
}

#[test]
fn book_rows_outside_hours_are_dropped() {
    let text = format!(
        "timestamp_ns,bid_price,ask_price\n{},10.00,10.02\n{},10.00,10.02\n{},10.01,10.02\n{},10.01,10.03\n",
        OPEN - SEC,
        OPEN,
        OPEN + SEC,
        OPEN + 6 * 3600 * SEC + 1800 * SEC
    );
    let cal = RthCalendar::new_york();
    let mut report = QualityReport::default();
    let rows = read_nbbo_rows(text.as_bytes(), true, &mut report).unwrap();
    let nbbo = nbbo_from_book_rows(&rows, &cal, &mut report).unwrap();
    assert_eq!(nbbo.len(), 2);
    assert_eq!(report.dropped_outside_rth, 2);
    assert_eq!(build_mid_series(&nbbo).mids, vec![10.01, 10.015]);
}

#[test]
fn synthetic_series_through_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec::momentum(400_000, 4, 20, 0.3, 11);
    let series = generate_series(&spec).unwrap();
    let path = dir.path().join("mids.prms");
    prms::save(&path, &series).unwrap();
    let series = prms::load(&path).unwrap();

    let (series, report) = clean(series, &CleaningConfig::default()).unwrap();
    assert_eq!(report.n_input, 400_000);
    assert_eq!(report.n_output + report.n_jump_events_removed, report.n_input);

    let lags = LagSelection::Custom(vec![1, 5, 20, 80]).lags().unwrap();
    let grid = BinGrid::default();
    let surface = build_surface(&series, &lags, &grid).unwrap();
    let mut csv = Vec::new();
    write_surface_csv(&mut csv, &surface).unwrap();
    let back = read_surface_csv(csv.as_slice(), Some(&surface.meta())).unwrap();
    assert_eq!(back, surface);

    let table = decompose(&surface).unwrap();
    let cfg = BootstrapConfig {
        replicates: 200,
        ..BootstrapConfig::default()
    };
    let summary = summarize(&table, &cfg).unwrap();
    assert_eq!(summary.iter().map(|s| s.lag).collect::<Vec<_>>(), lags);
    let at_l0 = summary.iter().find(|s| s.lag == 20).unwrap();
    assert!(at_l0.ci_low > 0.0, "{at_l0:?}");

    let rows = heatmap_rows(&table);
    let mut buf = Vec::new();
    write_heatmap_csv(&mut buf, &rows).unwrap();
    assert_eq!(read_heatmap_csv(buf.as_slice()).unwrap(), rows);
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &summary).unwrap();
    assert_eq!(read_summary_csv(buf.as_slice()).unwrap(), summary);
}
