//! Delta-method standard errors under a multinomial model for the counts.

use serde::{Deserialize, Serialize};

use crate::ratiofit::DerivedQuantities;

/// Entries of the covariance matrix of `(f̂_0, f̂_1, n)` with `n = Σ_{j≥2} f_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nof1Covariance {
    pub var_f0: f64,
    pub cov_f0_f1: f64,
    pub var_f1: f64,
    pub var_n: f64,
    pub cov_f0_n: f64,
    pub cov_f1_n: f64,
}

impl Nof1Covariance {
    /// Plug-in estimates of every entry.
    ///
    /// `f2` is the observed doubleton count, `n` the observed non-singleton
    /// richness, and `f0_hat`, `f1_hat` the predicted unobserved and singleton
    /// counts. Coefficient uncertainty enters through `d`.
    pub fn plug_in(d: &DerivedQuantities, f2: f64, n: f64, f0_hat: f64, f1_hat: f64) -> Self {
        let c_hat = f0_hat + f1_hat + n;
        let (b0, b) = (d.beta0, d.b);
        let multinomial = f2 * (c_hat - f2) / c_hat;
        let f2sq = f2 * f2;

        let var_f0 = multinomial / (b0 * b0 * b * b)
            + f2sq * d.var_beta0 / (b0.powi(4) * b * b)
            + 2.0 * f2sq * d.cov_b_beta0 / (b0.powi(3) * b.powi(3))
            + f2sq * d.var_b / (b0 * b0 * b.powi(4));
        let cov_f0_f1 = multinomial / (b0 * b * b)
            + f2sq * d.cov_b_beta0 / (b0 * b0 * b.powi(3))
            + f2sq * d.var_b / (b0 * b.powi(4));
        let var_f1 = multinomial / (b * b) + f2sq * d.var_b / b.powi(4);

        Self {
            var_f0,
            cov_f0_f1,
            var_f1,
            var_n: n * (f0_hat + f1_hat) / c_hat,
            cov_f0_n: -f0_hat * n / c_hat,
            cov_f1_n: -f1_hat * n / c_hat,
        }
    }

    /// `Var(Ĉ) = 1ᵀ Σ 1`, the sum of all nine entries.
    pub fn total_variance(&self) -> f64 {
        self.var_f0
            + self.var_f1
            + self.var_n
            + 2.0 * (self.cov_f0_f1 + self.cov_f0_n + self.cov_f1_n)
    }
}

/// Variance of `Ĉ = f̂_0 + n'` with `f̂_0 = f_1 / β̂_0` and `n' = Σ_{j≥1} f_j`,
/// built the same way with `f_1` observed.
pub fn breakaway_variance(f1: f64, beta0: f64, var_beta0: f64, n_obs: f64) -> f64 {
    let f0_hat = f1 / beta0;
    let c_hat = f0_hat + n_obs;
    let var_f0 = f1 * (c_hat - f1) / (c_hat * beta0 * beta0) + f1 * f1 * var_beta0 / beta0.powi(4);
    let cov_f0_n = -f0_hat * n_obs / c_hat;
    let var_n = n_obs * f0_hat / c_hat;
    var_f0 + 2.0 * cov_f0_n + var_n
}

/// A variance turned into a standard error; negative estimates are clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardError {
    pub se: f64,
    pub warning: Option<String>,
}

impl StandardError {
    pub fn from_variance(var: f64) -> Self {
        if var < 0.0 {
            Self {
                se: 0.0,
                warning: Some(format!("negative variance estimate clamped ({var:.6e})")),
            }
        } else if var.is_nan() {
            Self {
                se: f64::NAN,
                warning: Some("variance estimate is not a number".into()),
            }
        } else {
            Self {
                se: var.sqrt(),
                warning: None,
            }
        }
    }
}
