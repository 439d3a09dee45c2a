use chrono::Datelike;
use nalgebra::{DMatrix, DVector};

use super::absorb::Factor;
use super::spec::{Control, FeDim, ModelSpec, Treatment};
use super::EconError;
use crate::ledger::EventSample;

/// Response, named regressor columns and fixed-effect labels.
#[derive(Debug, Clone)]
pub struct Design {
    pub response: DVector<f64>,
    pub regressors: DMatrix<f64>,
    pub names: Vec<String>,
    pub factors: Vec<Factor>,
}

impl Design {
    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.regressors.column(j).iter().copied().collect())
    }
}

fn dummy(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn control_value(s: &EventSample, c: Control) -> f64 {
    match c {
        Control::LogLotSize => s.log_lot_size,
        Control::Premium => dummy(s.premium),
        Control::LogBtc => s.log_btc,
        Control::PaidSand => dummy(s.paid_sand),
        Control::PaidWeth => dummy(s.paid_weth),
    }
}

/// Label used for a fixed-effect dimension.
pub(crate) fn fe_label(s: &EventSample, dim: FeDim) -> i64 {
    match dim {
        FeDim::Day => s.day.num_days_from_ce() as i64,
        FeDim::Week => s.week as i64,
        FeDim::MintWave => s.mint_wave_id as i64,
    }
}

/// Builds the regression design for `spec`.
///
/// Column order: intercept (only without fixed effects), Post, Treat,
/// Post×Treat, then Multi, Post×Multi, Post×Treat×Multi (and Treat×Multi
/// if requested), then controls in the order listed. Later columns are the
/// first to go under collinearity, so the treatment terms survive.
pub fn build_design(samples: &[EventSample], spec: &ModelSpec) -> Result<Design, EconError> {
    spec.validate()?;
    if samples.is_empty() {
        return Err(EconError::InsufficientData("no samples".into()));
    }
    let n = samples.len();
    let mut names: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut push = |name: String, col: Vec<f64>| {
        names.push(name);
        cols.push(col);
    };

    if spec.fe_dimensions.is_empty() {
        push("intercept".into(), vec![1.0; n]);
    }
    if let Some(t) = spec.treatment {
        let treat: Vec<f64> = samples
            .iter()
            .map(|s| match t {
                Treatment::DiscreteNear => dummy(s.near),
                Treatment::ContinuousLogDistance => s.log_distance,
            })
            .collect();
        if treat.iter().all(|v| *v == treat[0]) {
            return Err(EconError::DegenerateDesign(format!(
                "treatment column {} is constant",
                t.term()
            )));
        }
        let post: Vec<f64> = samples.iter().map(|s| dummy(s.post)).collect();
        let multi: Vec<f64> = samples.iter().map(|s| dummy(s.multi)).collect();
        let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>();
        let name = t.term();
        let post_treat = prod(&post, &treat);
        push("post".into(), post.clone());
        push(name.into(), treat.clone());
        push(format!("post_x_{name}"), post_treat.clone());
        if spec.include_multi_interactions {
            push("multi".into(), multi.clone());
            push("post_x_multi".into(), prod(&post, &multi));
            push(format!("post_x_{name}_x_multi"), prod(&post_treat, &multi));
            if spec.include_treat_multi {
                push(format!("{name}_x_multi"), prod(&treat, &multi));
            }
        }
    }
    for &c in &spec.controls {
        push(
            c.name().into(),
            samples.iter().map(|s| control_value(s, c)).collect(),
        );
    }

    let factors = spec
        .fe_dimensions
        .iter()
        .map(|&d| {
            let labels: Vec<i64> = samples.iter().map(|s| fe_label(s, d)).collect();
            Factor::from_labels(d.name(), &labels)
        })
        .collect();
    let k = cols.len();
    Ok(Design {
        response: DVector::from_iterator(n, samples.iter().map(|s| s.log_price)),
        regressors: DMatrix::from_fn(n, k, |i, j| cols[j][i]),
        names,
        factors,
    })
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;

    pub(crate) fn sample(near: bool, post: bool, multi: bool, y: f64) -> EventSample {
        EventSample {
            tx_id: String::new(),
            group_id: 8,
            price_usd: y.exp(),
            log_price: y,
            distance: if near { 2.0 } else { 9.0 },
            log_distance: if near { 2f64.ln() } else { 9f64.ln() },
            near,
            post,
            multi,
            lot_size: 1,
            log_lot_size: 0.0,
            premium: false,
            paid_sand: false,
            paid_weth: true,
            log_btc: 10.5,
            mint_wave_id: 3,
            day: NaiveDate::from_ymd_opt(2021, 3, if post { 2 } else { 1 }).unwrap(),
            week: 202109,
            event_day: if post { 1 } else { 0 },
        }
    }

    #[test]
    fn full_spec_columns_in_table_order() {
        let s = vec![
            sample(true, false, false, 1.0),
            sample(false, true, false, 2.0),
        ];
        let d = build_design(&s, &ModelSpec::full(Treatment::DiscreteNear)).unwrap();
        assert_eq!(
            d.names,
            [
                "post",
                "near",
                "post_x_near",
                "log_lot_size",
                "premium",
                "paid_sand",
                "paid_weth"
            ]
        );
        assert_eq!(d.factors.len(), 2);
        let t = build_design(&s, &ModelSpec::triple(Treatment::DiscreteNear)).unwrap();
        assert_eq!(
            &t.names[3..6],
            ["multi", "post_x_multi", "post_x_near_x_multi"]
        );
    }

    #[test]
    fn interactions_are_products() {
        let s = vec![
            sample(true, true, true, 1.0),
            sample(true, false, true, 1.0),
            sample(false, true, false, 1.0),
        ];
        let d = build_design(
            &s,
            &ModelSpec::saturated(Treatment::DiscreteNear).with_multi(),
        )
        .unwrap();
        assert_eq!(d.column("intercept").unwrap(), vec![1.0; 3]);
        assert_eq!(d.column("post_x_near").unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(d.column("post_x_multi").unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(
            d.column("post_x_near_x_multi").unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        let c = build_design(&s, &ModelSpec::saturated(Treatment::ContinuousLogDistance)).unwrap();
        assert_eq!(c.column("log_distance").unwrap()[2], 9f64.ln());
    }

    #[test]
    fn one_sample_intercept_only() {
        let d = build_design(&[sample(true, true, false, 4.2)], &ModelSpec::new(None)).unwrap();
        assert_eq!(d.names, ["intercept"]);
        assert_eq!(d.regressors.as_slice(), &[1.0]);
        assert_eq!(d.response.as_slice(), &[4.2]);
    }

    #[test]
    fn constant_treatment_is_degenerate() {
        let s = vec![
            sample(true, false, false, 1.0),
            sample(true, true, false, 2.0),
        ];
        assert!(matches!(
            build_design(&s, &ModelSpec::saturated(Treatment::DiscreteNear)),
            Err(EconError::DegenerateDesign(_))
        ));
    }
}
