use super::LedgerError;
use crate::stats::quantile_sorted;

/// Quantile cut-offs for winsorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinsorBounds {
    pub lower_q: f64,
    pub upper_q: f64,
}

impl Default for WinsorBounds {
    fn default() -> Self {
        Self {
            lower_q: 0.001,
            upper_q: 0.999,
        }
    }
}

/// Clips values to the `[lower_q, upper_q]` interpolated quantiles, keeping
/// length and index order.
pub fn winsorize(values: &[f64], lower_q: f64, upper_q: f64) -> Result<Vec<f64>, LedgerError> {
    if values.is_empty() {
        return Err(LedgerError::InvalidInput(
            "cannot winsorize an empty list".into(),
        ));
    }
    if !(0.0..=1.0).contains(&lower_q) || !(0.0..=1.0).contains(&upper_q) || lower_q > upper_q {
        return Err(LedgerError::InvalidInput(format!(
            "winsor quantiles must satisfy 0 <= {lower_q} <= {upper_q} <= 1"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LedgerError::InvalidInput("non-finite value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&sorted, lower_q).expect("non-empty");
    let hi = quantile_sorted(&sorted, upper_q).expect("non-empty");
    Ok(values.iter().map(|v| v.clamp(lo, hi)).collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, LogNormal};

    use super::*;

    /// Sort-based oracle: index the interpolated order statistics directly.
    fn oracle(values: &[f64], lq: f64, uq: f64) -> Vec<f64> {
        let mut s = values.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| {
            let pos = p * (s.len() as f64 - 1.0);
            let i = pos as usize;
            if i + 1 >= s.len() {
                s[s.len() - 1]
            } else {
                s[i] * (1.0 - (pos - i as f64)) + s[i + 1] * (pos - i as f64)
            }
        };
        let (lo, hi) = (q(lq), q(uq));
        values
            .iter()
            .map(|&v| {
                if v < lo {
                    lo
                } else if v > hi {
                    hi
                } else {
                    v
                }
            })
            .collect()
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn constant_input_unchanged() {
        let v = vec![7.5; 20];
        assert_eq!(winsorize(&v, 0.001, 0.999).unwrap(), v);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(
            winsorize(&[], 0.001, 0.999),
            Err(LedgerError::InvalidInput(_))
        ));
    }

    #[test]
    fn idempotent_when_cuts_fall_on_order_statistics() {
        // n = 11 with q = 0.1 / 0.9 puts both cuts exactly on order statistics
        let v = [5.0, 1.0, 9.0, 2.0, 100.0, 3.0, 4.0, 6.0, 7.0, 8.0, -50.0];
        let once = winsorize(&v, 0.1, 0.9).unwrap();
        assert_eq!(once[4], 9.0);
        assert_eq!(once[10], 1.0);
        assert_eq!(winsorize(&once, 0.1, 0.9).unwrap(), once);
    }

    #[test]
    fn lognormal_draws_match_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(20211028);
        let dist = LogNormal::new(7.0, 1.2).unwrap();
        let v: Vec<f64> = (0..10_000).map(|_| dist.sample(&mut rng)).collect();
        let got = winsorize(&v, 0.001, 0.999).unwrap();
        let want = oracle(&v, 0.001, 0.999);
        assert_close(&got, &want);
        let clipped: Vec<usize> = (0..v.len()).filter(|&i| v[i] != got[i]).collect();
        let oracle_clipped: Vec<usize> = (0..v.len()).filter(|&i| v[i] != want[i]).collect();
        assert_eq!(clipped, oracle_clipped);
        // 10 order statistics sit strictly beyond each interpolated cut
        assert_eq!(clipped.len(), 20);
    }

    proptest! {
        #[test]
        fn monotone_and_interior_preserving(v in prop::collection::vec(0.01f64..1e6, 1..300)) {
            let w = winsorize(&v, 0.001, 0.999).unwrap();
            prop_assert_eq!(w.len(), v.len());
            let mut s = v.clone();
            s.sort_by(f64::total_cmp);
            let lo = quantile_sorted(&s, 0.001).unwrap();
            let hi = quantile_sorted(&s, 0.999).unwrap();
            for i in 0..v.len() {
                if v[i] > lo && v[i] < hi {
                    prop_assert_eq!(w[i], v[i]);
                }
                for j in 0..v.len() {
                    if v[i] <= v[j] {
                        prop_assert!(w[i] <= w[j]);
                    }
                }
            }
            let o = oracle(&v, 0.001, 0.999);
            for (x, y) in w.iter().zip(&o) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }
}
