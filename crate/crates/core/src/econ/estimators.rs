use chrono::NaiveDate;
use nalgebra::DVector;

use super::absorb::{absorb_fixed_effects, AbsorbOptions, Demeaner};
use super::design::{build_design, Design};
use super::ols::{ols_fit, FeEstimate, FitResult, OlsOptions};
use super::spec::{ModelSpec, SeType, Treatment};
use super::EconError;
use crate::ledger::EventSample;

/// Partition date for the pre/post rename split.
pub fn default_meta_cut() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 10, 28).expect("valid date")
}

/// Absorbs the design's fixed effects, fits by least squares and recovers
/// the fixed-effect levels from the fitted slopes.
///
/// Absorbed parameters are charged as the total level count less one per
/// dimension after the first.
pub fn fit_design(design: &Design, se_type: SeType) -> Result<FitResult, EconError> {
    if design.factors.is_empty() {
        return ols_fit(
            &design.response,
            &design.regressors,
            &design.names,
            &OlsOptions {
                se_type,
                ..Default::default()
            },
        );
    }
    let options = AbsorbOptions::default();
    let absorbed = absorb_fixed_effects(
        &design.response,
        &design.regressors,
        &design.factors,
        &options,
    )?;
    let levels: usize = design.factors.iter().map(|f| f.n_levels()).sum();
    let absorbed_params = levels + 1 - design.factors.len();
    let mut fit = ols_fit(
        &absorbed.response,
        &absorbed.regressors,
        &design.names,
        &OlsOptions {
            se_type,
            absorbed_params,
            original_response: Some(design.response.clone()),
            original_regressors: Some(design.regressors.clone()),
        },
    )?;
    fit.fe_dimensions = design.factors.iter().map(|f| f.name.clone()).collect();
    fit.fe_estimates = recover_effects(design, &fit, options)?;
    Ok(fit)
}

/// Solves for the fixed-effect levels given the slopes. All dimensions after
/// the first are centred (observation-weighted) and the first carries the
/// grand mean.
fn recover_effects(
    design: &Design,
    fit: &FitResult,
    options: AbsorbOptions,
) -> Result<Vec<FeEstimate>, EconError> {
    let n = design.n_obs();
    let mut fitted = DVector::zeros(n);
    for c in &fit.coefficients {
        let j = design
            .names
            .iter()
            .position(|name| *name == c.term)
            .expect("known term");
        fitted.axpy(c.estimate, &design.regressors.column(j), 1.0);
    }
    let mut partial: Vec<f64> = (&design.response - fitted).iter().copied().collect();
    let mut effects: Vec<Vec<f64>> = design
        .factors
        .iter()
        .map(|f| vec![0.0; f.n_levels()])
        .collect();
    Demeaner::new(&design.factors, options).demean(&mut partial, Some(&mut effects))?;
    for d in 1..effects.len() {
        let factor = &design.factors[d];
        let shift = factor.codes.iter().map(|&g| effects[d][g]).sum::<f64>() / n as f64;
        effects[d].iter_mut().for_each(|v| *v -= shift);
        effects[0].iter_mut().for_each(|v| *v += shift);
    }
    Ok(design
        .factors
        .iter()
        .zip(effects)
        .map(|(f, vals)| FeEstimate {
            dimension: f.name.clone(),
            levels: f.levels.iter().copied().zip(vals).collect(),
        })
        .collect())
}

fn check_cells(samples: &[EventSample], treatment: Treatment) -> Result<(), EconError> {
    if samples.is_empty() {
        return Err(EconError::InsufficientData("no samples".into()));
    }
    match treatment {
        Treatment::DiscreteNear => {
            for near in [false, true] {
                for post in [false, true] {
                    if !samples.iter().any(|s| s.near == near && s.post == post) {
                        return Err(EconError::DegenerateDesign(format!(
                            "empty cell near={}, post={}",
                            near as u8, post as u8
                        )));
                    }
                }
            }
        }
        Treatment::ContinuousLogDistance => {
            for post in [false, true] {
                if !samples.iter().any(|s| s.post == post) {
                    return Err(EconError::DegenerateDesign(format!(
                        "no samples with post={}",
                        post as u8
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Difference-in-differences fit; the coefficient of interest is
/// `post_x_near` or `post_x_log_distance`.
pub fn estimate_did(samples: &[EventSample], spec: &ModelSpec) -> Result<FitResult, EconError> {
    let treatment = spec
        .treatment
        .ok_or_else(|| EconError::InvalidSpec("DiD needs a treatment".into()))?;
    if spec.include_multi_interactions {
        return Err(EconError::InvalidSpec(
            "use estimate_triple_diff for multi interactions".into(),
        ));
    }
    check_cells(samples, treatment)?;
    fit_design(&build_design(samples, spec)?, spec.se_type)
}

/// Triple-difference fit adding the Multi stratum.
pub fn estimate_triple_diff(
    samples: &[EventSample],
    spec: &ModelSpec,
) -> Result<FitResult, EconError> {
    let treatment = spec
        .treatment
        .ok_or_else(|| EconError::InvalidSpec("triple difference needs a treatment".into()))?;
    if !spec.include_multi_interactions {
        return Err(EconError::InvalidSpec(
            "triple difference needs multi interactions".into(),
        ));
    }
    check_cells(samples, treatment)?;
    if let Some(first) = samples.first() {
        if samples.iter().all(|s| s.multi == first.multi) {
            return Err(EconError::DegenerateDesign(format!(
                "every sample has multi={}",
                first.multi as u8
            )));
        }
    }
    fit_design(&build_design(samples, spec)?, spec.se_type)
}

/// Dispatches on the specification: hedonic, DiD or triple difference.
pub fn estimate(samples: &[EventSample], spec: &ModelSpec) -> Result<FitResult, EconError> {
    match spec.treatment {
        None => fit_design(&build_design(samples, spec)?, spec.se_type),
        Some(_) if spec.include_multi_interactions => estimate_triple_diff(samples, spec),
        Some(_) => estimate_did(samples, spec),
    }
}

/// Splits samples by whether their group was announced before `cut`.
pub fn partition_meta(
    samples: &[EventSample],
    cut: NaiveDate,
) -> (Vec<EventSample>, Vec<EventSample>) {
    let (pre, post): (Vec<_>, Vec<_>) = samples
        .iter()
        .cloned()
        .partition(|s| s.announce_date() < cut);
    if pre.is_empty() {
        log::warn!("no groups announced before {cut}");
    }
    if post.is_empty() {
        log::warn!("no groups announced on or after {cut}");
    }
    (pre, post)
}
