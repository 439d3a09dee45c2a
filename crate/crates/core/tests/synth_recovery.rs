use gridhedonic::econ::{estimate, ModelSpec, Treatment};
use gridhedonic::synth::{
    generate_market, recovery_report, DgpConfig, FeScales, Gamma, SynthError,
};

fn exports(config: &DgpConfig) -> Vec<Vec<u8>> {
    let m = generate_market(config).unwrap();
    let mut out = vec![Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    m.write_transactions(&mut out[0]).unwrap();
    m.write_waves(&mut out[1]).unwrap();
    m.write_rates(&mut out[2]).unwrap();
    m.write_truth(&mut out[3]).unwrap();
    out
}

fn small(mut c: DgpConfig) -> DgpConfig {
    c.transactions_per_group = 300;
    c.background_transactions = 50;
    c
}

#[test]
fn same_seed_same_bytes() {
    let c = small(DgpConfig::default());
    assert_eq!(exports(&c), exports(&c));
    let other = DgpConfig {
        seed: c.seed + 1,
        ..c.clone()
    };
    assert_ne!(exports(&c)[0], exports(&other)[0]);
}

#[test]
fn degenerate_market_is_flat() {
    let c = small(DgpConfig::degenerate());
    let m = generate_market(&c).unwrap();
    assert!(m.log_prices.iter().all(|&y| y == c.intercept));
    let panel = m.panel(&m.panel_options()).unwrap();
    assert_eq!(
        panel.samples.len(),
        c.transactions_per_group * c.n_groups as usize
    );
    for s in &panel.samples {
        assert!((s.log_price - c.intercept).abs() < 1e-12);
    }
}

#[test]
fn panel_keeps_every_window_sale() {
    let c = small(DgpConfig::default());
    let m = generate_market(&c).unwrap();
    let panel = m.panel(&m.panel_options()).unwrap();
    assert_eq!(
        panel.samples.len(),
        c.transactions_per_group * c.n_groups as usize
    );
    let multi = m
        .groups
        .iter()
        .filter(|g| c.analysis_groups().contains(&g.group_id) && g.multi)
        .count();
    assert!(multi >= c.min_multi_groups as usize);
    for s in &panel.samples {
        assert!(s.event_day.abs() <= c.window_days as i64);
        assert!(c.analysis_groups().contains(&s.group_id));
    }
}

#[test]
fn crowded_map_reports_capacity() {
    let c = DgpConfig {
        map_size: 60,
        ..DgpConfig::default()
    };
    assert!(matches!(generate_market(&c), Err(SynthError::Capacity(_))));
}

#[test]
fn zero_noise_recovers_exactly() {
    let mut c = small(DgpConfig::default());
    c.noise_sigma = 0.0;
    let m = generate_market(&c).unwrap();
    let mut options = m.panel_options();
    options.winsor = None;
    let panel = m.panel(&options).unwrap();
    let fit = estimate(&panel.samples, &ModelSpec::triple(Treatment::DiscreteNear)).unwrap();
    for (term, truth) in [
        ("near", c.true_betas.near),
        ("post_x_near", c.true_betas.post_near),
        ("post_x_near_x_multi", c.true_betas.post_near_multi),
        ("log_lot_size", c.gamma.log_lot_size),
        ("premium", c.gamma.premium),
        ("paid_sand", c.gamma.paid_sand),
        ("paid_weth", c.gamma.paid_weth),
    ] {
        let est = fit.estimate(term).unwrap();
        assert!((est - truth).abs() < 1e-8, "{term}: {est} vs {truth}");
    }
}

fn within_three_se(config: &DgpConfig, spec: &ModelSpec, term: &str, truth: f64) {
    let m = generate_market(config).unwrap();
    let panel = m.panel(&m.panel_options()).unwrap();
    let fit = estimate(&panel.samples, spec).unwrap();
    let c = fit.coefficient(term).unwrap();
    assert!(
        (c.estimate - truth).abs() <= 3.0 * c.std_error,
        "{term}: {} (se {}) vs {truth}",
        c.estimate,
        c.std_error
    );
}

#[test]
fn planted_did_recovered() {
    within_three_se(
        &DgpConfig::did(),
        &ModelSpec::full(Treatment::DiscreteNear),
        "post_x_near",
        0.084,
    );
}

#[test]
fn planted_continuous_did_recovered() {
    within_three_se(
        &DgpConfig::continuous(),
        &ModelSpec::full(Treatment::ContinuousLogDistance),
        "post_x_log_distance",
        -0.034,
    );
}

#[test]
fn planted_triple_difference_recovered() {
    within_three_se(
        &DgpConfig::triple(),
        &ModelSpec::triple(Treatment::DiscreteNear),
        "post_x_near_x_multi",
        -0.173,
    );
}

#[test]
fn monte_carlo_is_centred() {
    let c = small(DgpConfig::did());
    let report = recovery_report(&c, &ModelSpec::full(Treatment::DiscreteNear), 24, None).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert_eq!(report.unidentified, ["post"]);
    let row = report.row("post_x_near").unwrap();
    assert_eq!(row.n_success, 24);
    // mean of 24 draws: 4 Monte Carlo standard errors
    assert!(
        row.bias.abs() < 4.0 * row.empirical_sd / 24f64.sqrt(),
        "{row:?}"
    );
    assert!(row.coverage >= 0.75, "{row:?}");
    let again = recovery_report(&c, &ModelSpec::full(Treatment::DiscreteNear), 24, None).unwrap();
    assert_eq!(report.rows, again.rows);
}

#[test]
fn mismatched_treatment_rejected() {
    let r = recovery_report(
        &DgpConfig::did(),
        &ModelSpec::full(Treatment::ContinuousLogDistance),
        2,
        None,
    );
    assert!(matches!(r, Err(SynthError::InvalidConfig(_))));
}

#[test]
fn spread_shrinks_with_sample_size() {
    let base = DgpConfig {
        gamma: Gamma::zero(),
        fe_scales: FeScales {
            day: 0.0,
            mint_wave: 0.0,
        },
        ..DgpConfig::did()
    };
    let spec = ModelSpec::saturated(Treatment::DiscreteNear);
    let spread: Vec<(f64, f64)> = [50, 200, 1000]
        .into_iter()
        .map(|per_group| {
            let c = DgpConfig {
                transactions_per_group: per_group,
                ..base.clone()
            };
            let report = recovery_report(&c, &spec, 80, None).unwrap();
            assert!(report.failures.is_empty());
            let row = report.row("post_x_near").unwrap();
            assert!(
                row.bias.abs() < 4.0 * row.empirical_sd / 80f64.sqrt(),
                "{row:?}"
            );
            (row.empirical_sd, row.mean_std_error)
        })
        .collect();
    // n grows by 4 then 5: reported SEs scale as 1/sqrt(n) closely, the
    // empirical SD of 80 draws only to within its own sampling error
    let (sd, se): (Vec<f64>, Vec<f64>) = spread.into_iter().unzip();
    assert!((se[0] / se[1] / 2.0 - 1.0).abs() < 0.1, "{se:?}");
    assert!((se[1] / se[2] / 5f64.sqrt() - 1.0).abs() < 0.1, "{se:?}");
    assert!((3.3..6.0).contains(&(sd[0] / sd[2])), "{sd:?}");
}
