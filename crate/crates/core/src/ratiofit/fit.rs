//! Iteratively reweighted nonlinear least squares for the ratio model.
//!
//! The outer loop re-estimates heteroskedasticity weights from the current
//! fitted ratios; the inner loop is a Marquardt-scaled damped Gauss-Newton
//! iteration on the weighted sum of squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::RationalModel;
use super::series::RatioSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Number of weighting passes; the first uses unit weights.
    pub passes: usize,
    pub max_inner_iterations: usize,
    pub initial_damping: f64,
    /// Stop when the relative decrease of the weighted SSE falls below this.
    pub sse_rtol: f64,
    /// Stop when the largest coefficient step falls below this.
    pub step_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            passes: 3,
            max_inner_iterations: 200,
            initial_damping: 1e-3,
            sse_rtol: 1e-10,
            step_tol: 1e-8,
        }
    }
}

const MAX_DAMPING: f64 = 1e16;
const MIN_DAMPING: f64 = 1e-15;
/// Smallest admissible eigenvalue of the column-equilibrated normal matrix.
const RANK_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: RationalModel,
    /// Coefficient covariance, `σ̂² (J_wᵀ J_w)⁻¹`, in parameter-vector order.
    pub cov: DMatrix<f64>,
    /// Unweighted residuals `r_j − fitted_j`.
    pub residuals: Vec<f64>,
    /// Weights used in the final pass.
    pub weights: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub weighted_sse: f64,
    /// Weighted residual mean square.
    pub sigma2: f64,
    pub warnings: Vec<String>,
}

/// Fits the `(p, q)` rational model with the default options.
pub fn fit_wnls(series: &RatioSeries, p: usize, q: usize) -> Result<FitResult> {
    fit_wnls_with(series, p, q, &FitOptions::default())
}

pub fn fit_wnls_with(
    series: &RatioSeries,
    p: usize,
    q: usize,
    opts: &FitOptions,
) -> Result<FitResult> {
    let Optimized {
        params,
        weights,
        converged,
        iterations,
    } = optimize(series, p, q, opts)?;
    let n_params = p + q + 1;
    let js = series.js();
    let ratios = series.ratios();

    let model = RationalModel::from_params(p, q, &params);
    for j in series.j_min()..=series.j_max() + 1 {
        if model.denominator(j as f64) <= 0.0 {
            return Err(Error::DenominatorViolation(j));
        }
    }

    let problem = Problem {
        js: &js,
        ratios: &ratios,
        weights: &weights,
        p,
        q,
    };
    let (jac, residuals) = problem.jacobian_and_residuals(&params)?;
    let weighted_sse = problem.sse(&params);
    let normal = weighted_normal_matrix(&jac, &weights);

    let mut warnings = Vec::new();
    let dof = js.len() - n_params;
    let sigma2 = if dof > 0 {
        weighted_sse / dof as f64
    } else {
        warnings.push("zero residual degrees of freedom; σ̂² set to the weighted SSE".into());
        weighted_sse
    };
    let mut cov = equilibrated_inverse(&normal).ok_or(Error::RankDeficient)? * sigma2;
    cov = (&cov + cov.transpose()) * 0.5;

    Ok(FitResult {
        model,
        cov,
        residuals: residuals.iter().copied().collect(),
        weights,
        converged,
        iterations,
        weighted_sse,
        sigma2,
        warnings,
    })
}

struct Optimized {
    params: Vec<f64>,
    weights: Vec<f64>,
    converged: bool,
    iterations: usize,
}

/// The weighting passes and inner minimisation, without any post-fit checks.
fn optimize(series: &RatioSeries, p: usize, q: usize, opts: &FitOptions) -> Result<Optimized> {
    let n_params = p + q + 1;
    if series.len() < n_params + 1 {
        return Err(Error::TooFewPoints {
            p,
            q,
            available: series.len(),
            required: n_params + 1,
        });
    }
    let js = series.js();
    let ratios = series.ratios();

    let mut params = initial_params(&js, &ratios, p, q)?;
    let mut weights = vec![1.0; js.len()];
    let mut converged = false;
    let mut iterations = 0;
    for pass in 0..opts.passes.max(1) {
        if pass > 0 {
            weights = reweight(series, &RationalModel::from_params(p, q, &params));
        }
        let problem = Problem {
            js: &js,
            ratios: &ratios,
            weights: &weights,
            p,
            q,
        };
        let out = problem.minimize(params, opts);
        params = out.params;
        converged = out.converged;
        iterations += out.iterations;
    }
    Ok(Optimized {
        params,
        weights,
        converged,
        iterations,
    })
}

/// Final weighted SSE and residual degrees of freedom of a `(p, q)` fit.
///
/// Unlike [`fit_wnls`] this succeeds for fits whose coefficients are not
/// identifiable or whose denominator fails the positivity check, which makes
/// it usable for comparing model sizes.
pub fn fit_sse(series: &RatioSeries, p: usize, q: usize) -> Result<(f64, usize)> {
    let opt = optimize(series, p, q, &FitOptions::default())?;
    let (js, ratios) = (series.js(), series.ratios());
    let problem = Problem {
        js: &js,
        ratios: &ratios,
        weights: &opt.weights,
        p,
        q,
    };
    Ok((problem.sse(&opt.params), js.len() - (p + q + 1)))
}

/// Weights `1 / [r̂_j² (1/f_{j+1} + 1/f_j)]` from the current fitted ratios.
/// A non-positive fitted ratio falls back to the observed ratio.
fn reweight(series: &RatioSeries, model: &RationalModel) -> Vec<f64> {
    series
        .points()
        .iter()
        .map(|pt| {
            let fitted = model
                .eval(pt.j as f64)
                .ok()
                .filter(|r| r.is_finite() && *r > 0.0)
                .unwrap_or(pt.ratio);
            1.0 / (fitted * fitted * pt.count_variance_factor())
        })
        .collect()
}

/// Ordinary polynomial least squares of the ratios on `j` for β, with α = 0.
fn initial_params(js: &[f64], ratios: &[f64], p: usize, q: usize) -> Result<Vec<f64>> {
    let vander = DMatrix::from_fn(js.len(), p + 1, |i, k| js[i].powi(k as i32));
    let y = DVector::from_column_slice(ratios);
    let beta = vander
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|_| Error::RankDeficient)?;
    let mut params: Vec<f64> = beta.iter().copied().collect();
    params.extend(std::iter::repeat_n(0.0, q));
    Ok(params)
}

fn weighted_normal_matrix(jac: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let k = jac.ncols();
    DMatrix::from_fn(k, k, |a, b| {
        (0..jac.nrows())
            .map(|i| weights[i] * jac[(i, a)] * jac[(i, b)])
            .sum()
    })
}

/// Inverse of a symmetric positive semi-definite matrix after scaling it to
/// unit diagonal; `None` when the scaled matrix is numerically singular.
fn equilibrated_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = a.nrows();
    if (0..k).any(|i| !a[(i, i)].is_finite() || a[(i, i)] <= 0.0) {
        return None;
    }
    let scale = DVector::from_fn(k, |i, _| 1.0 / a[(i, i)].sqrt());
    let scaled = DMatrix::from_fn(k, k, |i, j| a[(i, j)] * scale[i] * scale[j]);
    let eig = scaled.clone().symmetric_eigen();
    if eig.eigenvalues.min() <= RANK_TOL {
        return None;
    }
    let inv = scaled.cholesky()?.inverse();
    Some(DMatrix::from_fn(k, k, |i, j| {
        inv[(i, j)] * scale[i] * scale[j]
    }))
}

struct Problem<'a> {
    js: &'a [f64],
    ratios: &'a [f64],
    weights: &'a [f64],
    p: usize,
    q: usize,
}

struct InnerOutcome {
    params: Vec<f64>,
    converged: bool,
    iterations: usize,
}

impl Problem<'_> {
    fn model(&self, params: &[f64]) -> RationalModel {
        RationalModel::from_params(self.p, self.q, params)
    }

    /// Weighted SSE, or infinity where the model is singular at a data point.
    fn sse(&self, params: &[f64]) -> f64 {
        let model = self.model(params);
        let mut total = 0.0;
        for ((&j, &r), &w) in self.js.iter().zip(self.ratios).zip(self.weights) {
            match model.eval(j) {
                Ok(fitted) if fitted.is_finite() => total += w * (r - fitted).powi(2),
                _ => return f64::INFINITY,
            }
        }
        if total.is_finite() {
            total
        } else {
            f64::INFINITY
        }
    }

    fn jacobian_and_residuals(&self, params: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let model = self.model(params);
        let n = self.js.len();
        let mut jac = DMatrix::zeros(n, params.len());
        let mut res = DVector::zeros(n);
        for (i, &j) in self.js.iter().enumerate() {
            let grad = model.gradient(j)?;
            for (k, g) in grad.into_iter().enumerate() {
                jac[(i, k)] = g;
            }
            res[i] = self.ratios[i] - model.eval(j)?;
        }
        Ok((jac, res))
    }

    fn minimize(&self, start: Vec<f64>, opts: &FitOptions) -> InnerOutcome {
        let mut params = start;
        let mut sse = self.sse(&params);
        let mut damping = opts.initial_damping;
        let k = params.len();

        if !sse.is_finite() {
            return InnerOutcome {
                params,
                converged: false,
                iterations: 0,
            };
        }

        for iteration in 1..=opts.max_inner_iterations {
            if sse == 0.0 {
                return InnerOutcome {
                    params,
                    converged: true,
                    iterations: iteration - 1,
                };
            }
            let Ok((jac, res)) = self.jacobian_and_residuals(&params) else {
                return InnerOutcome {
                    params,
                    converged: false,
                    iterations: iteration,
                };
            };
            let normal = weighted_normal_matrix(&jac, self.weights);
            let wres = DVector::from_fn(res.len(), |i, _| self.weights[i] * res[i]);
            let gradient = jac.transpose() * wres;
            let max_diag = (0..k).map(|i| normal[(i, i)]).fold(0.0, f64::max);
            let diag_floor = (max_diag * 1e-12).max(f64::MIN_POSITIVE);

            // Inner damping loop: grow the damping until the step does not
            // increase the SSE.
            let accepted = loop {
                if damping > MAX_DAMPING {
                    break None;
                }
                let mut damped = normal.clone();
                for i in 0..k {
                    damped[(i, i)] += damping * normal[(i, i)].max(diag_floor);
                }
                let Some(chol) = damped.cholesky() else {
                    damping *= 10.0;
                    continue;
                };
                let step = chol.solve(&gradient);
                let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let trial_sse = self.sse(&trial);
                if trial_sse.is_finite() && trial_sse <= sse {
                    break Some((trial, trial_sse, step.amax()));
                }
                damping *= 10.0;
            };

            let Some((trial, trial_sse, step_norm)) = accepted else {
                // No step reduces the SSE: the current point is stationary to
                // working precision.
                return InnerOutcome {
                    params,
                    converged: true,
                    iterations: iteration,
                };
            };
            let rel_change = (sse - trial_sse) / sse;
            params = trial;
            sse = trial_sse;
            damping = (damping / 10.0).max(MIN_DAMPING);
            if rel_change < opts.sse_rtol || step_norm < opts.step_tol {
                return InnerOutcome {
                    params,
                    converged: true,
                    iterations: iteration,
                };
            }
        }
        InnerOutcome {
            params,
            converged: false,
            iterations: opts.max_inner_iterations,
        }
    }
}
