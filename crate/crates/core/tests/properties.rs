use proptest::prelude::*;

use pushresp::cleaning::{apply_winsor_bounds, clean, winsor_bounds, CleaningConfig, CleaningReport};
use pushresp::decomposition::{decompose, lag_weights, magnitude, rho_lag, summarize, BootstrapConfig, Scale};
use pushresp::prms;
use pushresp::surface::{build_surface, BinGrid, BinGridSpec, Surface};
use pushresp::synthetic::{generate_series, response_oracle, SyntheticKind, SyntheticSpec};
use pushresp::MidSeries;

fn series_strategy() -> impl Strategy<Value = MidSeries> {
    prop::collection::vec(prop::collection::vec(-3i32..=3, 2..300), 1..4).prop_map(|sessions| {
        MidSeries::from_sessions(sessions.into_iter().enumerate().map(|(d, steps)| {
            let mut p = 50.0;
            let v = steps
                .into_iter()
                .map(|s| {
                    p += 0.01 * s as f64;
                    p
                })
                .collect();
            (17_898 + d as u32, v)
        }))
    })
}

fn small_grid() -> BinGrid {
    BinGrid::new(BinGridSpec {
        n_min: 3,
        ..BinGridSpec::default()
    })
    .unwrap()
}

fn negate_responses(surface: &Surface) -> Surface {
    let mut out = surface.clone();
    for row in &mut out.rows {
        for c in &mut row.cells {
            if let Some(m) = c.means.as_mut() {
                m.mean_zr = -m.mean_zr;
                m.mean_r_raw = -m.mean_r_raw;
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn streaming_surface_matches_materialized_pairs(series in series_strategy(), lag in 1usize..12) {
        let grid = small_grid();
        let Ok(surface) = build_surface(&series, &[lag], &grid) else { return Ok(()) };
        let row = &surface.rows[0];
        prop_assert_eq!(row.binned() + row.out_of_grid, row.n_pairs);
        if row.moments.is_none() {
            return Ok(());
        }
        let (_, cells) = response_oracle(&series, lag, &grid);
        for (c, o) in row.cells.iter().zip(&cells) {
            prop_assert_eq!(c.count, o.count);
            if let (Some(m), Some(want)) = (c.means, o.mean_zr) {
                prop_assert!((m.mean_zr - want).abs() <= 1e-10 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn negating_responses_flips_a_and_s_only(series in series_strategy(), lag in 1usize..8) {
        let grid = small_grid();
        let Ok(surface) = build_surface(&series, &[lag], &grid) else { return Ok(()) };
        let flipped = negate_responses(&surface);
        let (a, b) = (decompose(&surface).unwrap(), decompose(&flipped).unwrap());
        for (p, q) in a[0].pairs.iter().zip(&b[0].pairs) {
            prop_assert_eq!(p.s, -q.s);
            prop_assert_eq!(p.a, -q.a);
            prop_assert_eq!(p.rho_local(), -q.rho_local());
            prop_assert!((-1.0..=1.0).contains(&p.rho_local()));
        }
        if let Ok(w) = lag_weights(&a[0].pairs) {
            let (r, s) = (rho_lag(&a[0].pairs, &w), rho_lag(&b[0].pairs, &w));
            prop_assert_eq!(r.value, s.value);
            prop_assert!((-1.0..=1.0).contains(&r.value));
            prop_assert!(magnitude(&a[0].pairs, &w, Scale::Standardized) >= 0.0);
            prop_assert!(magnitude(&a[0].pairs, &w, Scale::Raw) >= 0.0);
        }
    }

    #[test]
    fn raising_min_support_never_adds_cells(series in series_strategy(), n_min in 1u64..40) {
        let grid = small_grid();
        let Ok(surface) = build_surface(&series, &[1, 2], &grid) else { return Ok(()) };
        let stricter = surface.clone().with_min_support(n_min.max(grid.n_min()));
        for (a, b) in surface.rows.iter().zip(&stricter.rows) {
            for (x, y) in a.cells.iter().zip(&b.cells) {
                prop_assert_eq!(x.count, y.count);
                prop_assert!(!y.is_valid() || x.is_valid());
                if y.is_valid() {
                    prop_assert_eq!(x.means, y.means);
                }
            }
        }
    }

    #[test]
    fn winsorized_increments_lie_in_bounds(series in series_strategy(), lo in 0.001f64..0.2, hi in 0.8f64..0.999) {
        let cfg = CleaningConfig { lower_q: lo, upper_q: hi, ..CleaningConfig::default() };
        let Some((a, b)) = winsor_bounds(&series, &cfg).unwrap() else { return Ok(()) };
        let mut out = series.clone();
        apply_winsor_bounds(&mut out, a, b, &mut CleaningReport::default());
        for s in &out.sessions {
            for w in out.mids[s.range()].windows(2) {
                prop_assert!((a..=b).contains(&(w[1] - w[0])));
            }
        }
        prop_assert_eq!(&out.sessions, &series.sessions);
    }

    #[test]
    fn cleaning_accounts_for_every_event(series in series_strategy()) {
        let cfg = CleaningConfig { jump_threshold: 0.025, ..CleaningConfig::default() };
        let (out, rep) = clean(series.clone(), &cfg).unwrap();
        prop_assert_eq!(rep.n_input, series.len() as u64);
        prop_assert_eq!(rep.n_output, out.len() as u64);
        prop_assert_eq!(rep.n_output + rep.n_jump_events_removed, rep.n_input);
        prop_assert!(rep.n_jump_events_removed <= 2 * rep.n_jump_pairs);
        out.validate().unwrap();
    }

    #[test]
    fn prms_round_trips(series in series_strategy()) {
        let mut buf = Vec::new();
        prms::write_series(&mut buf, &series).unwrap();
        prop_assert_eq!(prms::read_series(buf.as_slice()).unwrap(), series);
    }
}

fn seeded(seed: u64) -> Vec<u8> {
    let spec = SyntheticSpec {
        kind: SyntheticKind::Asymmetric,
        phi: 0.2,
        asym_gain: 0.5,
        ..SyntheticSpec::momentum(50_000, 3, 10, 0.2, seed)
    };
    let mut buf = Vec::new();
    prms::write_series(&mut buf, &generate_series(&spec).unwrap()).unwrap();
    buf
}

#[test]
fn generation_is_seeded() {
    assert_eq!(seeded(9), seeded(9));
    assert_ne!(seeded(9), seeded(10));
}

#[test]
fn generation_does_not_depend_on_thread_count() {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    assert_eq!(one.install(|| seeded(4)), three.install(|| seeded(4)));
}

#[test]
fn bootstrap_bands_do_not_depend_on_thread_count() {
    let series = generate_series(&SyntheticSpec::momentum(200_000, 2, 5, 0.3, 1)).unwrap();
    let surface = build_surface(&series, &[1, 5, 9], &BinGrid::default()).unwrap();
    let table = decompose(&surface).unwrap();
    let cfg = BootstrapConfig {
        replicates: 300,
        ..BootstrapConfig::default()
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| summarize(&table, &cfg).unwrap());
    let b = three.install(|| summarize(&table, &cfg).unwrap());
    assert_eq!(a, b);
    let other = summarize(&table, &BootstrapConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a, other);
}
