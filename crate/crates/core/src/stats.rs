//! Small statistical helpers shared across modules.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Sample size above which significance uses the normal approximation.
pub const NORMAL_APPROX_MIN_N: usize = 100;

/// Quantile of an already sorted slice, linear interpolation between order
/// statistics (`h = (n - 1) q`).
///
/// Returns `None` for an empty slice or `q` outside `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Median with linear interpolation. `None` when `values` is empty.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.5)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Sample standard deviation (n - 1 denominator); zero for a single value.
pub fn std_dev(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    if values.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

/// Two-sided p-value for a t statistic.
///
/// Uses the standard normal when `n_obs > 100`, otherwise Student's t with
/// `dof` degrees of freedom.
pub fn two_sided_p_value(t_stat: f64, n_obs: usize, dof: f64) -> f64 {
    if !t_stat.is_finite() {
        return f64::NAN;
    }
    let tail = if n_obs > NORMAL_APPROX_MIN_N || dof <= 0.0 {
        Normal::standard().cdf(-t_stat.abs())
    } else {
        match StudentsT::new(0.0, 1.0, dof) {
            Ok(t) => t.cdf(-t_stat.abs()),
            Err(_) => Normal::standard().cdf(-t_stat.abs()),
        }
    };
    2.0 * tail
}

/// Two-sided critical value at confidence `level` (e.g. 0.95), with the same
/// normal/t switch as [`two_sided_p_value`].
pub fn critical_value(level: f64, n_obs: usize, dof: f64) -> f64 {
    let p = 0.5 + level / 2.0;
    if n_obs > NORMAL_APPROX_MIN_N || dof <= 0.0 {
        Normal::standard().inverse_cdf(p)
    } else {
        match StudentsT::new(0.0, 1.0, dof) {
            Ok(t) => t.inverse_cdf(p),
            Err(_) => Normal::standard().inverse_cdf(p),
        }
    }
}

/// Significance stars: `*` 10%, `**` 5%, `***` 1%.
pub fn stars(p_value: f64) -> &'static str {
    if !p_value.is_finite() {
        ""
    } else if p_value < 0.01 {
        "***"
    } else if p_value < 0.05 {
        "**"
    } else if p_value < 0.10 {
        "*"
    } else {
        ""
    }
}
