use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rational function of `j`:
///
/// ```text
///   (β_0 + β_1 j + … + β_p j^p) / (1 + α_1 j + … + α_q j^q)
/// ```
///
/// Coefficients are stored as one parameter vector `(β_0, …, β_p, α_1, …, α_q)`
/// when handed to the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalModel {
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl RationalModel {
    pub fn new(beta: Vec<f64>, alpha: Vec<f64>) -> Self {
        assert!(!beta.is_empty(), "a rational model needs at least β_0");
        Self { beta, alpha }
    }

    /// All-zero model of the given degrees.
    pub fn zeros(p: usize, q: usize) -> Self {
        Self::new(vec![0.0; p + 1], vec![0.0; q])
    }

    pub fn from_params(p: usize, q: usize, params: &[f64]) -> Self {
        debug_assert_eq!(params.len(), p + q + 1);
        Self::new(params[..=p].to_vec(), params[p + 1..].to_vec())
    }

    pub fn p(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn q(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_params(&self) -> usize {
        self.beta.len() + self.alpha.len()
    }

    pub fn params(&self) -> Vec<f64> {
        self.beta.iter().chain(&self.alpha).copied().collect()
    }

    pub fn numerator(&self, j: f64) -> f64 {
        horner(&self.beta, j)
    }

    pub fn denominator(&self, j: f64) -> f64 {
        // 1 + α_1 j + … = horner over (1, α_1, …, α_q)
        self.alpha.iter().rev().fold(0.0, |acc, &a| (acc + a) * j) + 1.0
    }

    /// Fitted ratio at `j`.
    pub fn eval(&self, j: f64) -> Result<f64> {
        let den = self.denominator(j);
        if den == 0.0 {
            return Err(Error::Singularity(j));
        }
        Ok(self.numerator(j) / den)
    }

    /// Partial derivatives of [`eval`](Self::eval) with respect to every
    /// coefficient, in parameter-vector order.
    pub fn gradient(&self, j: f64) -> Result<Vec<f64>> {
        let den = self.denominator(j);
        if den == 0.0 {
            return Err(Error::Singularity(j));
        }
        let value = self.numerator(j) / den;
        let mut grad = Vec::with_capacity(self.n_params());
        let mut pow = 1.0;
        for _ in 0..self.beta.len() {
            grad.push(pow / den);
            pow *= j;
        }
        let mut pow = j;
        for _ in 0..self.alpha.len() {
            grad.push(-value * pow / den);
            pow *= j;
        }
        Ok(grad)
    }
}

impl fmt::Display for RationalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p(), self.q())
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}
