use std::fmt;

use serde::Serialize;

use super::design::build_design;
use super::estimators::fit_design;
use super::spec::{Control, FeDim, ModelSpec, SeType};
use super::EconError;
use crate::ledger::EventSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Near,
    Far,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Near => "near",
            Arm::Far => "far",
        })
    }
}

/// Mean residual for one event day and arm; `None` when the cell is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub event_day: i64,
    pub group: Arm,
    pub mean_residual: Option<f64>,
    pub n: usize,
}

/// Averages `residuals` by event day in `-window..=window` for the near and
/// far arms.
pub fn average_by_event_day(
    samples: &[EventSample],
    residuals: &[f64],
    window_days: u32,
) -> Vec<TrendRow> {
    let w = window_days as i64;
    let mut rows = Vec::with_capacity(2 * (2 * w as usize + 1));
    for event_day in -w..=w {
        for arm in [Arm::Near, Arm::Far] {
            let cell: Vec<f64> = samples
                .iter()
                .zip(residuals)
                .filter(|(s, _)| s.event_day == event_day && s.near == (arm == Arm::Near))
                .map(|(_, &e)| e)
                .collect();
            let mean_residual =
                (!cell.is_empty()).then(|| cell.iter().sum::<f64>() / cell.len() as f64);
            rows.push(TrendRow {
                event_day,
                group: arm,
                mean_residual,
                n: cell.len(),
            });
        }
    }
    rows
}

/// Residuals from log price on `controls` and weekly effects, with no
/// treatment or period terms, averaged by event day for each arm.
pub fn residual_trend_series(
    samples: &[EventSample],
    controls: &[Control],
    window_days: u32,
) -> Result<Vec<TrendRow>, EconError> {
    if !samples.iter().any(|s| s.post) || samples.iter().all(|s| s.post) {
        return Err(EconError::DegenerateDesign(
            "trend series needs both pre and post days".into(),
        ));
    }
    let spec = ModelSpec::hedonic(FeDim::Week, controls);
    let fit = fit_design(&build_design(samples, &spec)?, SeType::Classical)?;
    Ok(average_by_event_day(samples, &fit.residuals, window_days))
}
