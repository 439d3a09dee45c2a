use std::collections::BTreeMap;
use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::DgpConfig;
use super::market::generate_market;
use super::SynthError;
use crate::econ::{estimate, Control, ModelSpec};
use crate::ledger::WinsorBounds;

/// `(estimate, std_error)` by term for one replication.
pub type Estimates = BTreeMap<String, (f64, f64)>;

/// Monte Carlo summary for one planted parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub parameter: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub empirical_sd: f64,
    pub mean_std_error: f64,
    /// Share of replications whose 95% normal interval covers the truth.
    pub coverage: f64,
    pub n_success: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub replications: usize,
    pub rows: Vec<RecoveryRow>,
    /// Planted parameters no replication estimated, such as terms absorbed
    /// by fixed effects.
    pub unidentified: Vec<String>,
    /// `(seed, message)` for replications that failed to generate or fit.
    pub failures: Vec<(u64, String)>,
    /// Per-replication `(seed, estimates)` for the successful runs.
    #[serde(skip)]
    pub draws: Vec<(u64, Estimates)>,
}

impl RecoveryReport {
    pub fn row(&self, parameter: &str) -> Option<&RecoveryRow> {
        self.rows.iter().find(|r| r.parameter == parameter)
    }
}

/// Planted values for the coefficients `spec` estimates.
fn planted(config: &DgpConfig, spec: &ModelSpec) -> Result<BTreeMap<String, f64>, SynthError> {
    let mut truth = BTreeMap::new();
    let b = config.true_betas;
    if let Some(t) = spec.treatment {
        if t != config.treatment {
            return Err(SynthError::InvalidConfig(format!(
                "specification treatment {} differs from the planted {}",
                t.term(),
                config.treatment.term()
            )));
        }
        truth.insert("post".to_string(), b.post);
        truth.insert(t.term().to_string(), b.near);
        truth.insert(format!("post_x_{}", t.term()), b.post_near);
        if spec.include_multi_interactions {
            truth.insert("multi".to_string(), b.multi);
            truth.insert("post_x_multi".to_string(), b.post_multi);
            truth.insert(format!("post_x_{}_x_multi", t.term()), b.post_near_multi);
            if spec.include_treat_multi {
                truth.insert(format!("{}_x_multi", t.term()), 0.0);
            }
        }
    }
    let g = config.gamma;
    for c in &spec.controls {
        let v = match c {
            Control::LogLotSize => g.log_lot_size,
            Control::Premium => g.premium,
            Control::LogBtc => g.log_btc,
            Control::PaidSand => g.paid_sand,
            Control::PaidWeth => g.paid_weth,
        };
        truth.insert(c.name().to_string(), v);
    }
    Ok(truth)
}

fn replicate(
    config: &DgpConfig,
    spec: &ModelSpec,
    winsor: Option<WinsorBounds>,
) -> Result<Estimates, SynthError> {
    let market = generate_market(config)?;
    let mut options = market.panel_options();
    options.winsor = winsor;
    let panel = market.panel(&options)?;
    let fit = estimate(&panel.samples, spec)?;
    Ok(fit
        .coefficients
        .iter()
        .map(|c| (c.term.clone(), (c.estimate, c.std_error)))
        .collect())
}

/// Generates `replications` markets from `config` (seeds drawn from its
/// master seed), estimates `spec` on each and compares with the planted
/// values. Failed replications are listed, not dropped silently.
pub fn recovery_report(
    config: &DgpConfig,
    spec: &ModelSpec,
    replications: usize,
    winsor: Option<WinsorBounds>,
) -> Result<RecoveryReport, SynthError> {
    config.validate()?;
    spec.validate()?;
    if replications == 0 {
        return Err(SynthError::InvalidConfig(
            "replications must be positive".into(),
        ));
    }
    let truth = planted(config, spec)?;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..replications).map(|_| master.next_u64()).collect();
    let outcomes: Vec<(u64, Result<Estimates, SynthError>)> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = DgpConfig {
                seed,
                ..config.clone()
            };
            (seed, replicate(&cfg, spec, winsor))
        })
        .collect();

    let mut draws = Vec::new();
    let mut failures = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(est) => draws.push((seed, est)),
            Err(e) => failures.push((seed, e.to_string())),
        }
    }

    let mut unidentified = Vec::new();
    let mut rows = Vec::new();
    for (parameter, &truth) in &truth {
        let hits: Vec<(f64, f64)> = draws
            .iter()
            .filter_map(|(_, d)| d.get(parameter).copied())
            .collect();
        let n = hits.len();
        if n == 0 {
            unidentified.push(parameter.clone());
            continue;
        }
        let mean = |f: fn(&(f64, f64)) -> f64| hits.iter().map(f).sum::<f64>() / n as f64;
        let mean_estimate = mean(|h| h.0);
        let empirical_sd = if n > 1 {
            (hits
                .iter()
                .map(|h| (h.0 - mean_estimate).powi(2))
                .sum::<f64>()
                / (n - 1) as f64)
                .sqrt()
        } else {
            f64::NAN
        };
        let covered = hits
            .iter()
            .filter(|h| (h.0 - truth).abs() <= 1.96 * h.1)
            .count();
        rows.push(RecoveryRow {
            parameter: parameter.clone(),
            truth,
            mean_estimate,
            bias: mean_estimate - truth,
            empirical_sd,
            mean_std_error: mean(|h| h.1),
            coverage: covered as f64 / n as f64,
            n_success: n,
        });
    }
    Ok(RecoveryReport {
        replications,
        rows,
        unidentified,
        failures,
        draws,
    })
}

/// One CSV row per parameter.
pub fn write_recovery_csv<W: Write>(writer: W, report: &RecoveryReport) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
