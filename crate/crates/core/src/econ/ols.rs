use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::spec::SeType;
use super::EconError;
use crate::stats;

/// Pivot threshold relative to the largest column norm.
const RANK_TOLERANCE: f64 = 1e-10;
/// A column whose demeaned norm falls below this fraction of its raw norm is
/// treated as spanned by the fixed effects.
const ABSORBED_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub stars: String,
}

/// Recovered effects for one absorbed dimension, as `(label, value)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeEstimate {
    pub dimension: String,
    pub levels: Vec<(i64, f64)>,
}

impl FeEstimate {
    pub fn get(&self, label: i64) -> Option<f64> {
        self.levels
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Vec<Coefficient>,
    pub n_obs: usize,
    /// Retained regressors plus absorbed fixed-effect parameters.
    pub k_total: usize,
    /// Residual degrees of freedom, `n_obs - k_total`.
    pub dof: usize,
    pub r2: f64,
    pub adj_r2: f64,
    pub sigma: f64,
    pub residuals: Vec<f64>,
    pub fe_estimates: Vec<FeEstimate>,
    pub dropped_columns: Vec<String>,
    pub se_type: SeType,
    pub fe_dimensions: Vec<String>,
    /// Covariance of the retained coefficients, in `coefficients` order.
    pub covariance: DMatrix<f64>,
}

impl FitResult {
    pub fn coefficient(&self, term: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.term == term)
    }

    pub fn estimate(&self, term: &str) -> Option<f64> {
        self.coefficient(term).map(|c| c.estimate)
    }
}

#[derive(Debug, Clone, Default)]
pub struct OlsOptions {
    pub se_type: SeType,
    /// Parameters already spent on absorbed fixed effects.
    pub absorbed_params: usize,
    /// Response before demeaning, for the total sum of squares.
    pub original_response: Option<DVector<f64>>,
    /// Regressors before demeaning, for detecting absorbed columns.
    pub original_regressors: Option<DMatrix<f64>>,
}

/// Indices of columns kept by sequential screening. Each column is
/// orthogonalised against the ones already kept; it is dropped when the
/// remainder is negligible, so later columns give way to earlier ones.
fn screen_columns(x: &DMatrix<f64>, original: Option<&DMatrix<f64>>) -> Vec<usize> {
    let lead = x.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let threshold = RANK_TOLERANCE * lead;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        if let Some(raw) = original {
            let raw_norm = raw.column(j).norm();
            if raw_norm > 0.0 && col.norm() <= ABSORBED_TOLERANCE * raw_norm {
                continue;
            }
        }
        let mut v = col;
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let r = v.norm();
        if lead > 0.0 && r > threshold {
            basis.push(v / r);
            kept.push(j);
        }
    }
    kept
}

/// Least squares by QR with classical or HC1 standard errors.
///
/// Collinear columns are dropped (later ones first) and listed in
/// `dropped_columns`. When the inputs are already demeaned, pass the raw
/// response and the absorbed parameter count through `options` so that
/// R² and the degrees of freedom refer to the full model.
pub fn ols_fit(
    response: &DVector<f64>,
    regressors: &DMatrix<f64>,
    names: &[String],
    options: &OlsOptions,
) -> Result<FitResult, EconError> {
    let n = response.len();
    if regressors.nrows() != n || regressors.ncols() != names.len() {
        return Err(EconError::InvalidSpec(format!(
            "design is {}x{} with {} names for {n} observations",
            regressors.nrows(),
            regressors.ncols(),
            names.len()
        )));
    }
    let kept = screen_columns(regressors, options.original_regressors.as_ref());
    let dropped_columns: Vec<String> = (0..names.len())
        .filter(|j| !kept.contains(j))
        .map(|j| names[j].clone())
        .collect();
    let k = kept.len();
    let k_total = k + options.absorbed_params;
    if n <= k_total {
        return Err(EconError::InsufficientData(format!(
            "{n} observations for {k_total} parameters"
        )));
    }
    let x = regressors.select_columns(&kept);

    let (beta, xtx_inv) = if k == 0 {
        (DVector::zeros(0), DMatrix::zeros(0, 0))
    } else {
        let qr = x.clone().qr();
        let r = qr.r();
        let mut qty = response.clone();
        qr.q_tr_mul(&mut qty);
        let rhs = qty.rows(0, k).into_owned();
        let beta = r
            .solve_upper_triangular(&rhs)
            .ok_or_else(|| EconError::DegenerateDesign("singular triangular factor".into()))?;
        let r_inv = r
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .ok_or_else(|| EconError::DegenerateDesign("singular triangular factor".into()))?;
        (beta, &r_inv * r_inv.transpose())
    };

    let residuals = response - &x * &beta;
    let rss = residuals.norm_squared();
    let dof = n - k_total;
    let sigma2 = rss / dof as f64;
    let covariance = match options.se_type {
        SeType::Classical => &xtx_inv * sigma2,
        SeType::Hc1 => {
            let mut weighted = x.clone();
            for (i, mut row) in weighted.row_iter_mut().enumerate() {
                row *= residuals[i];
            }
            let meat = weighted.transpose() * &weighted;
            (&xtx_inv * meat * &xtx_inv) * (n as f64 / dof as f64)
        }
    };

    let y_total = options.original_response.as_ref().unwrap_or(response);
    let y_mean = y_total.mean();
    let tss: f64 = y_total.iter().map(|v| (v - y_mean).powi(2)).sum();
    let r2 = 1.0 - rss / tss;
    let adj_r2 = 1.0 - (rss / dof as f64) / (tss / (n as f64 - 1.0));

    let coefficients = kept
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let estimate = beta[i];
            let std_error = covariance[(i, i)].max(0.0).sqrt();
            let t_stat = estimate / std_error;
            let p_value = stats::two_sided_p_value(t_stat, n, dof as f64);
            Coefficient {
                term: names[j].clone(),
                estimate,
                std_error,
                t_stat,
                p_value,
                stars: stats::stars(p_value).to_string(),
            }
        })
        .collect();

    Ok(FitResult {
        coefficients,
        n_obs: n,
        k_total,
        dof,
        r2,
        adj_r2,
        sigma: sigma2.sqrt(),
        residuals: residuals.iter().copied().collect(),
        fe_estimates: Vec::new(),
        dropped_columns,
        se_type: options.se_type,
        fe_dimensions: Vec::new(),
        covariance,
    })
}
