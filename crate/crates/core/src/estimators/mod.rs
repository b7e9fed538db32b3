//! Richness estimators: `breakaway` (singletons observed), `nof1` (singletons
//! predicted from the non-singleton counts) and the Chao1 comparator.

mod selection;
mod variance;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use selection::{
    select_from_ladder, select_model, Admissibility, FitOutcome, SelectionTrace, TrialRecord,
    MODEL_LADDER,
};
pub use variance::{breakaway_variance, Nof1Covariance, StandardError};

use crate::error::{Error, Result};
use crate::freqtab::FrequencyCountTable;
use crate::ratiofit::{build_ratio_series, derived_quantities, FitResult, RationalModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Nof1,
    Breakaway,
    Chao1,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [Self::Nof1, Self::Breakaway, Self::Chao1];

    pub fn name(self) -> &'static str {
        match self {
            Self::Nof1 => "nof1",
            Self::Breakaway => "breakaway",
            Self::Chao1 => "chao1",
        }
    }

    pub fn estimate(self, table: &FrequencyCountTable) -> Result<RichnessEstimate> {
        match self {
            Self::Nof1 => breakaway_nof1(table),
            Self::Breakaway => breakaway(table),
            Self::Chao1 => Ok(chao1(table)),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nof1" | "breakaway_nof1" => Ok(Self::Nof1),
            "breakaway" => Ok(Self::Breakaway),
            "chao1" => Ok(Self::Chao1),
            other => Err(Error::InvalidConfig(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichnessEstimate {
    pub estimator: EstimatorKind,
    pub c_hat: f64,
    pub f0_hat: f64,
    /// Predicted singleton count (`nof1` only).
    pub f1_hat: Option<f64>,
    pub se: f64,
    pub model: Option<RationalModel>,
    pub trace: Option<SelectionTrace>,
    pub warnings: Vec<String>,
}

impl RichnessEstimate {
    pub fn degrees(&self) -> Option<(usize, usize)> {
        self.model.as_ref().map(|m| (m.p(), m.q()))
    }
}

/// Ratio-model estimate using the observed singletons: `f̂_0 = f_1 / β̂_0`.
pub fn breakaway(table: &FrequencyCountTable) -> Result<RichnessEstimate> {
    let f1 = table.get(1);
    if f1 == 0 {
        return Err(Error::MissingSingletons);
    }
    let series = build_ratio_series(table, 1)?;
    let (fit, trace) = select_model(&series, Admissibility::Unobserved)?;
    let beta0 = fit.model.beta[0];
    let n_obs = table.observed_richness() as f64;
    let f0_hat = f1 as f64 / beta0;
    let c_hat = f0_hat + n_obs;

    let mut warnings = fit.warnings.clone();
    let se =
        StandardError::from_variance(breakaway_variance(f1 as f64, beta0, fit.cov[(0, 0)], n_obs));
    warnings.extend(se.warning);

    Ok(RichnessEstimate {
        estimator: EstimatorKind::Breakaway,
        c_hat,
        f0_hat,
        f1_hat: None,
        se: se.se,
        model: Some(fit.model),
        trace: Some(trace),
        warnings,
    })
}

/// Ratio-model estimate that ignores `f_1`: the model is fitted on `j >= 2`,
/// then `f̂_1 = f_2 / b̂` and `f̂_0 = f̂_1 / β̂_0`.
pub fn breakaway_nof1(table: &FrequencyCountTable) -> Result<RichnessEstimate> {
    let series = build_ratio_series(table, 2)?;
    let (fit, trace) = select_model(&series, Admissibility::UnobservedAndSingletons)?;
    let d = derived_quantities(&fit)?;
    let f2 = table.get(2) as f64;
    let n = table.sum_from(2) as f64;
    let f1_hat = f2 / d.b;
    let f0_hat = f1_hat / d.beta0;
    let c_hat = f0_hat + f1_hat + n;

    let mut warnings = fit.warnings.clone();
    let se = nof1_standard_error(&fit, table, f0_hat, f1_hat)?;
    warnings.extend(se.warning);

    Ok(RichnessEstimate {
        estimator: EstimatorKind::Nof1,
        c_hat,
        f0_hat,
        f1_hat: Some(f1_hat),
        se: se.se,
        model: Some(fit.model),
        trace: Some(trace),
        warnings,
    })
}

/// Delta-method standard error of the `nof1` richness estimate.
pub fn nof1_standard_error(
    fit: &FitResult,
    table: &FrequencyCountTable,
    f0_hat: f64,
    f1_hat: f64,
) -> Result<StandardError> {
    let d = derived_quantities(fit)?;
    let f2 = table.get(2) as f64;
    let n = table.sum_from(2) as f64;
    let cov = Nof1Covariance::plug_in(&d, f2, n, f0_hat, f1_hat);
    Ok(StandardError::from_variance(cov.total_variance()))
}

/// Chao1 lower-bound estimator, bias-corrected when `f_2 = 0`.
pub fn chao1(table: &FrequencyCountTable) -> RichnessEstimate {
    let c = table.observed_richness() as f64;
    let f1 = table.get(1) as f64;
    let f2 = table.get(2) as f64;

    let (f0_hat, var) = if f2 > 0.0 {
        let r = f1 / f2;
        (
            f1 * f1 / (2.0 * f2),
            f2 * (r.powi(4) / 4.0 + r.powi(3) + r * r / 2.0),
        )
    } else {
        let f0 = f1 * (f1 - 1.0) / 2.0;
        let c_hat = c + f0;
        let var = f0 + f1 * (2.0 * f1 - 1.0).powi(2) / 4.0 - f1.powi(4) / (4.0 * c_hat);
        (f0, var)
    };
    let se = StandardError::from_variance(var);

    RichnessEstimate {
        estimator: EstimatorKind::Chao1,
        c_hat: c + f0_hat,
        f0_hat,
        f1_hat: None,
        se: se.se,
        model: None,
        trace: None,
        warnings: se.warning.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(pairs: &[(u64, u64)]) -> FrequencyCountTable {
        FrequencyCountTable::from_pairs(pairs.iter().copied()).unwrap()
    }

    const HALVING: [(u64, u64); 5] = [(2, 64), (3, 32), (4, 16), (5, 8), (6, 4)];

    #[test]
    fn nof1_on_exact_halving_counts() {
        let est = breakaway_nof1(&table(&HALVING)).unwrap();
        assert!((est.f1_hat.unwrap() - 128.0).abs() < 1e-6);
        assert!((est.f0_hat - 256.0).abs() < 1e-6);
        assert!((est.c_hat - 508.0).abs() < 1e-6);
        assert_eq!(est.degrees(), Some((1, 0)));
        assert!(est.se >= 0.0);
    }

    #[test]
    fn nof1_ignores_singletons() {
        let with_f1: Vec<_> = std::iter::once((1, 999)).chain(HALVING).collect();
        let a = breakaway_nof1(&table(&HALVING)).unwrap();
        let b = breakaway_nof1(&table(&with_f1)).unwrap();
        assert_eq!(a.c_hat, b.c_hat);
        assert_eq!(a.se, b.se);
    }

    #[test]
    fn breakaway_on_exact_halving_counts() {
        let t = table(&[(1, 128), (2, 64), (3, 32), (4, 16), (5, 8)]);
        let est = breakaway(&t).unwrap();
        assert!((est.f0_hat - 256.0).abs() < 1e-6);
        assert!((est.c_hat - 504.0).abs() < 1e-6);
        assert_eq!(est.f1_hat, None);
    }

    #[test]
    fn breakaway_scales_with_counts() {
        let t = table(&[(1, 131), (2, 60), (3, 35), (4, 15), (5, 9), (6, 3)]);
        let base = breakaway(&t).unwrap();
        let scaled = breakaway(&t.scaled(10).unwrap()).unwrap();
        assert!((scaled.f0_hat - 10.0 * base.f0_hat).abs() < 1e-6 * scaled.f0_hat);
        let excess =
            |e: &RichnessEstimate, t: &FrequencyCountTable| e.c_hat - t.observed_richness() as f64;
        assert!(
            (excess(&scaled, &t.scaled(10).unwrap()) - 10.0 * excess(&base, &t)).abs()
                < 1e-6 * scaled.c_hat
        );
    }

    #[test]
    fn breakaway_needs_singletons() {
        assert_eq!(breakaway(&table(&HALVING)), Err(Error::MissingSingletons));
    }

    #[test]
    fn nof1_standard_error_hand_case() {
        let fit = FitResult {
            model: RationalModel::new(vec![0.5, 0.0], vec![]),
            cov: nalgebra::DMatrix::zeros(2, 2),
            residuals: vec![],
            weights: vec![],
            converged: true,
            iterations: 0,
            weighted_sse: 0.0,
            sigma2: 0.0,
            warnings: vec![],
        };
        let t = table(&[(2, 100), (3, 500)]);
        let se = nof1_standard_error(&fit, &t, 400.0, 200.0).unwrap();
        assert!((se.se - 3000f64.sqrt()).abs() < 1e-9);
        assert!(se.warning.is_none());
    }

    #[test]
    fn chao1_formula() {
        let est = chao1(&table(&[(1, 10), (2, 5), (3, 2)]));
        assert_eq!(est.c_hat, 27.0);
        // r = 2: 5 (4 + 8 + 2) = 70
        assert!((est.se - 70f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn chao1_without_singletons() {
        let est = chao1(&table(&[(2, 5), (3, 2)]));
        assert_eq!(est.c_hat, 7.0);
        assert_eq!(est.se, 0.0);
    }

    #[test]
    fn chao1_bias_corrected_branch() {
        let est = chao1(&table(&[(1, 4)]));
        assert_eq!(est.c_hat, 10.0);
        let est = chao1(&table(&[(1, 6), (3, 2), (4, 1)]));
        assert_eq!(est.c_hat, 9.0 + 15.0);
    }

    #[test]
    fn estimator_names_roundtrip() {
        for kind in EstimatorKind::ALL {
            assert_eq!(kind.name().parse::<EstimatorKind>().unwrap(), kind);
        }
        assert!("catchall".parse::<EstimatorKind>().is_err());
    }
}
