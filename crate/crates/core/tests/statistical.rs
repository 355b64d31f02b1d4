//! Large-sample statistical properties of the synthetic generator as seen
//! through the surface and decomposition.

use pushresp::cleaning::{clean, CleaningConfig};
use pushresp::decomposition::{decompose, lag_weights, rho_lag, LagPairs};
use pushresp::surface::{build_surface, BinGrid};
use pushresp::synthetic::{generate_series, SyntheticKind, SyntheticSpec};

fn table(spec: &SyntheticSpec, lags: &[usize]) -> Vec<LagPairs> {
    let (series, _) = clean(generate_series(spec).unwrap(), &CleaningConfig::default()).unwrap();
    decompose(&build_surface(&series, lags, &BinGrid::default()).unwrap()).unwrap()
}

fn abs_rho(t: &LagPairs) -> f64 {
    rho_lag(&t.pairs, &lag_weights(&t.pairs).unwrap()).value.abs()
}

fn mean_abs_a(t: &LagPairs) -> f64 {
    t.pairs.iter().map(|p| p.a.abs()).sum::<f64>() / t.pairs.len() as f64
}

fn locality(kind: SyntheticKind, phi: f64) -> Vec<String> {
    let spec = SyntheticSpec {
        kind,
        phi,
        ..SyntheticSpec::momentum(10_000_000, 20, 50, 0.3, 21)
    };
    let t = table(&spec, &[50, 151, 300, 1000]);
    let (r0, a0) = (abs_rho(&t[0]), mean_abs_a(&t[0]));
    let mut failures = Vec::new();
    for row in &t[1..] {
        let (r, a) = (abs_rho(row), mean_abs_a(row));
        println!(
            "{kind:?} L={}: |rho| {r:.4} vs {r0:.4}, mean |A| {a:.4} vs {a0:.4}",
            row.lag
        );
        if r0 < 5.0 * r || a0 < 5.0 * a {
            failures.push(format!(
                "L={}: |rho| ratio {:.2}, |A| ratio {:.2}",
                row.lag,
                r0 / r,
                a0 / a
            ));
        }
    }
    failures
}

#[test]
#[ignore = "fails by construction: the MA injection leaves push-response correlation phi*L0/((1+phi^2)L) at every L >= L0, and rho_lag saturates near 1 whenever |A| dominates noise, so the factor of 5 is not reached just beyond 3*L0"]
fn injection_is_local_to_its_lag() {
    let mut failures = locality(SyntheticKind::Momentum, 0.3);
    failures.extend(locality(SyntheticKind::Reversal, -0.3));
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
#[ignore = "fails by construction: overlapping anchors make the pairs in a cell dependent, so cell means exceed 4/sqrt(n) far more often than 0.1% on long lags"]
fn null_walk_cells_are_fair_over_the_full_grid() {
    let spec = SyntheticSpec::null_walk(10_000_000, 20, 22);
    let lags = pushresp::lags::LagSelection::Long.lags().unwrap();
    let (series, _) = clean(generate_series(&spec).unwrap(), &CleaningConfig::default()).unwrap();
    let surface = build_surface(&series, &lags, &BinGrid::default()).unwrap();
    let (mut valid, mut extreme) = (0u64, 0u64);
    for c in surface.rows.iter().flat_map(|r| &r.cells) {
        if let Some(m) = c.means {
            valid += 1;
            extreme += u64::from(m.mean_zr.abs() > 4.0 / (c.count as f64).sqrt());
        }
    }
    let frac = extreme as f64 / valid as f64;
    println!("{extreme}/{valid} valid cells beyond 4/sqrt(n) = {frac:.4}");
    assert!(frac < 1e-3);
}

#[test]
fn short_lags_of_a_null_walk_are_fair() {
    // below the horizon where anchor overlap dominates, the iid bound holds
    let spec = SyntheticSpec::null_walk(2_000_000, 4, 23);
    let t0 = std::time::Instant::now();
    let (series, _) = clean(generate_series(&spec).unwrap(), &CleaningConfig::default()).unwrap();
    let surface = build_surface(&series, &[1, 2, 5, 10], &BinGrid::default()).unwrap();
    let (mut valid, mut extreme) = (0u64, 0u64);
    for c in surface.rows.iter().flat_map(|r| &r.cells) {
        if let Some(m) = c.means {
            valid += 1;
            extreme += u64::from(m.mean_zr.abs() > 4.0 / (c.count as f64).sqrt());
        }
    }
    assert!(valid > 500, "{valid}");
    assert!(
        (extreme as f64) < 1e-3 * valid as f64 + 1.0,
        "{extreme}/{valid} in {:?}",
        t0.elapsed()
    );
}
