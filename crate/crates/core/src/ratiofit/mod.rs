//! Frequency-ratio regression: the rational model, its dataset, and the
//! weighted least-squares fit.

mod fit;
mod model;
mod series;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use fit::{fit_sse, fit_wnls, fit_wnls_with, FitOptions, FitResult};
pub use model::RationalModel;
pub use series::{build_ratio_series, contiguous_ratios, RatioPoint, RatioSeries};

use crate::error::{Error, Result};

/// Quantities the standard-error calculation needs from a fit.
///
/// `b = Σ β_i / (1 + Σ α_k)` is the fitted ratio at `j = 1`, i.e. the
/// predicted `f_2 / f_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub beta0: f64,
    pub b: f64,
    pub var_beta0: f64,
    pub var_b: f64,
    pub cov_b_beta0: f64,
}

/// Derived quantities of a converged fit.
pub fn derived_quantities(fit: &FitResult) -> Result<DerivedQuantities> {
    if !fit.converged {
        return Err(Error::InvalidConfig(
            "derived quantities need a converged fit".into(),
        ));
    }
    derived_from_parts(&fit.model, &fit.cov)
}

/// First-order propagation of the coefficient covariance to `b`.
pub fn derived_from_parts(model: &RationalModel, cov: &DMatrix<f64>) -> Result<DerivedQuantities> {
    let k = model.n_params();
    assert_eq!(cov.shape(), (k, k), "covariance does not match the model");
    let den = 1.0 + model.alpha.iter().sum::<f64>();
    if den == 0.0 {
        return Err(Error::Singularity(1.0));
    }
    let b = model.beta.iter().sum::<f64>() / den;
    // ∂b/∂β_i = 1/den, ∂b/∂α_k = −b/den
    let grad: Vec<f64> = (0..k)
        .map(|i| {
            if i < model.beta.len() {
                1.0 / den
            } else {
                -b / den
            }
        })
        .collect();
    let var_b = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| grad[i] * cov[(i, j)] * grad[j])
        .sum();
    let cov_b_beta0 = (0..k).map(|j| cov[(0, j)] * grad[j]).sum();
    Ok(DerivedQuantities {
        beta0: model.beta[0],
        b,
        var_beta0: cov[(0, 0)],
        var_b,
        cov_b_beta0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_covariance() {
        let m = RationalModel::new(vec![0.5, 0.0], vec![]);
        let d = derived_from_parts(&m, &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(d.b, 0.5);
        assert_eq!((d.var_beta0, d.var_b, d.cov_b_beta0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn identity_covariance_linear_model() {
        let m = RationalModel::new(vec![0.2, 0.3], vec![]);
        let d = derived_from_parts(&m, &DMatrix::identity(2, 2)).unwrap();
        assert!((d.b - 0.5).abs() < 1e-15);
        assert!((d.var_b - 2.0).abs() < 1e-15);
        assert!((d.cov_b_beta0 - 1.0).abs() < 1e-15);
        assert_eq!(d.var_beta0, 1.0);
    }

    #[test]
    fn rational_b() {
        let m = RationalModel::new(vec![0.2, 0.2], vec![1.0]);
        let d = derived_from_parts(&m, &DMatrix::zeros(3, 3)).unwrap();
        assert!((d.b - 0.2).abs() < 1e-15);
    }

    #[test]
    fn singular_b() {
        let m = RationalModel::new(vec![0.2], vec![-1.0]);
        assert_eq!(
            derived_from_parts(&m, &DMatrix::zeros(2, 2)),
            Err(Error::Singularity(1.0))
        );
    }

    #[test]
    fn propagation_matches_finite_differences() {
        // Var(b) = gᵀ Σ g with g from central differences of b(θ).
        let m = RationalModel::new(vec![0.9, -0.1, 0.01], vec![0.3]);
        let cov = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.04, 0.01, 0.0, 0.002, //
                0.01, 0.03, 0.001, 0.0, //
                0.0, 0.001, 0.02, 0.0, //
                0.002, 0.0, 0.0, 0.05,
            ],
        );
        let b_of = |params: &[f64]| {
            let mm = RationalModel::from_params(2, 1, params);
            mm.beta.iter().sum::<f64>() / (1.0 + mm.alpha.iter().sum::<f64>())
        };
        let base = m.params();
        let h = 1e-6;
        let g: Vec<f64> = (0..4)
            .map(|i| {
                let mut up = base.clone();
                let mut dn = base.clone();
                up[i] += h;
                dn[i] -= h;
                (b_of(&up) - b_of(&dn)) / (2.0 * h)
            })
            .collect();
        let var_b: f64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| g[i] * cov[(i, j)] * g[j])
            .sum();
        let d = derived_from_parts(&m, &cov).unwrap();
        assert!((d.var_b - var_b).abs() < 1e-8, "{} vs {}", d.var_b, var_b);
    }
}
