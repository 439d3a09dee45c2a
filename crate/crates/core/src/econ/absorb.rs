use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::EconError;

/// One fixed-effect dimension: a level code per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: String,
    /// Index into `levels` for each observation.
    pub codes: Vec<usize>,
    /// Sorted distinct labels.
    pub levels: Vec<i64>,
}

impl Factor {
    pub fn from_labels(name: impl Into<String>, labels: &[i64]) -> Self {
        let index: BTreeMap<i64, usize> = {
            let mut distinct: Vec<i64> = labels.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            distinct
                .into_iter()
                .enumerate()
                .map(|(i, l)| (l, i))
                .collect()
        };
        Self {
            name: name.into(),
            codes: labels.iter().map(|l| index[l]).collect(),
            levels: index.into_keys().collect(),
        }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbOptions {
    /// Stop once no cell moves by more than this in a sweep.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for AbsorbOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Absorbed {
    pub response: DVector<f64>,
    pub regressors: DMatrix<f64>,
    /// Largest sweep count over all columns.
    pub sweeps: usize,
}

/// Group means of `values` under `factor`, using the first member of each
/// group as a pivot so constant groups come out exact.
fn group_means(values: &[f64], factor: &Factor, counts: &[f64]) -> Vec<f64> {
    let k = factor.n_levels();
    let mut pivot = vec![f64::NAN; k];
    let mut sum = vec![0.0; k];
    for (&v, &g) in values.iter().zip(&factor.codes) {
        if pivot[g].is_nan() {
            pivot[g] = v;
        }
        sum[g] += v - pivot[g];
    }
    (0..k)
        .map(|g| {
            if counts[g] > 0.0 {
                pivot[g] + sum[g] / counts[g]
            } else {
                0.0
            }
        })
        .collect()
}

pub(crate) struct Demeaner<'a> {
    factors: &'a [Factor],
    counts: Vec<Vec<f64>>,
    options: AbsorbOptions,
}

impl<'a> Demeaner<'a> {
    pub(crate) fn new(factors: &'a [Factor], options: AbsorbOptions) -> Self {
        let counts = factors
            .iter()
            .map(|f| {
                let mut c = vec![0.0; f.n_levels()];
                for &g in &f.codes {
                    c[g] += 1.0;
                }
                c
            })
            .collect();
        Self {
            factors,
            counts,
            options,
        }
    }

    /// Demeans `col` in place. When `effects` is given, the subtracted group
    /// means are accumulated into it per dimension and level.
    pub(crate) fn demean(
        &self,
        col: &mut [f64],
        mut effects: Option<&mut Vec<Vec<f64>>>,
    ) -> Result<usize, EconError> {
        if self.factors.is_empty() {
            return Ok(0);
        }
        let single = self.factors.len() == 1;
        let mut before = vec![0.0; col.len()];
        let mut change = f64::INFINITY;
        for sweep in 1..=self.options.max_sweeps {
            before.copy_from_slice(col);
            for (d, factor) in self.factors.iter().enumerate() {
                let means = group_means(col, factor, &self.counts[d]);
                for (v, &g) in col.iter_mut().zip(&factor.codes) {
                    *v -= means[g];
                }
                if let Some(eff) = effects.as_deref_mut() {
                    for (e, m) in eff[d].iter_mut().zip(&means) {
                        *e += m;
                    }
                }
            }
            if single {
                return Ok(1);
            }
            change = col
                .iter()
                .zip(&before)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if change < self.options.tolerance {
                return Ok(sweep);
            }
        }
        Err(EconError::NonConvergence {
            sweeps: self.options.max_sweeps,
            change,
        })
    }
}

/// Removes all fixed effects in `factors` from the response and every
/// regressor column by alternating projections.
///
/// A single dimension is one exact projection. With several dimensions the
/// sweeps repeat until no cell moves by more than `options.tolerance`.
pub fn absorb_fixed_effects(
    response: &DVector<f64>,
    regressors: &DMatrix<f64>,
    factors: &[Factor],
    options: &AbsorbOptions,
) -> Result<Absorbed, EconError> {
    let n = response.len();
    if regressors.nrows() != n {
        return Err(EconError::InvalidSpec(format!(
            "response has {n} rows but regressors have {}",
            regressors.nrows()
        )));
    }
    for f in factors {
        if f.len() != n {
            return Err(EconError::InvalidSpec(format!(
                "fixed effect {} labels {} of {n} observations",
                f.name,
                f.len()
            )));
        }
        if n > 0 && f.n_levels() == 0 {
            return Err(EconError::InvalidSpec(format!(
                "fixed effect {} has no groups",
                f.name
            )));
        }
    }
    let demeaner = Demeaner::new(factors, *options);
    let mut columns: Vec<Vec<f64>> = std::iter::once(response.as_slice().to_vec())
        .chain(
            regressors
                .column_iter()
                .map(|c| c.iter().copied().collect()),
        )
        .collect();
    let sweeps: Vec<usize> = columns
        .par_iter_mut()
        .map(|c| demeaner.demean(c, None))
        .collect::<Result<_, _>>()?;
    let k = regressors.ncols();
    let y = DVector::from_vec(columns.remove(0));
    let x = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
    Ok(Absorbed {
        response: y,
        regressors: x,
        sweeps: sweeps.into_iter().max().unwrap_or(0),
    })
}
