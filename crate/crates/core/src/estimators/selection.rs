use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::ratiofit::{fit_sse, fit_wnls, FitResult, RatioSeries};

/// Candidate `(p, q)` degrees, tried in order.
pub const MODEL_LADDER: [(usize, usize); 5] = [(1, 0), (1, 1), (2, 1), (3, 2), (4, 3)];

/// Significance level of the F-test against the next rung.
pub const LACK_OF_FIT_LEVEL: f64 = 0.01;

/// Which predicted counts must be positive for a fit to be admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Admissibility {
    /// Singletons observed: only `f̂_0 = f_1 / β̂_0 > 0` is required.
    Unobserved,
    /// Singletons predicted: `f̂_1 = f_2 / b̂ > 0` and `f̂_0 = f̂_1 / β̂_0 > 0`.
    UnobservedAndSingletons,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitOutcome {
    Accepted,
    NegativeF0,
    NegativeF1,
    DenominatorViolation,
    NoConvergence,
    InsufficientDof,
    RankDeficient,
    /// Admissible, but the next rung fits significantly better.
    LackOfFit,
}

impl fmt::Display for FitOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitOutcome::Accepted => "accepted",
            FitOutcome::NegativeF0 => "negative-f0",
            FitOutcome::NegativeF1 => "negative-f1",
            FitOutcome::DenominatorViolation => "denominator-violation",
            FitOutcome::NoConvergence => "no-convergence",
            FitOutcome::InsufficientDof => "insufficient-dof",
            FitOutcome::RankDeficient => "rank-deficient",
            FitOutcome::LackOfFit => "lack-of-fit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub p: usize,
    pub q: usize,
    pub outcome: FitOutcome,
}

/// Every rung attempted during selection, in ladder order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub tried: Vec<TrialRecord>,
}

impl SelectionTrace {
    pub fn accepted(&self) -> Option<(usize, usize)> {
        self.tried
            .iter()
            .find(|t| t.outcome == FitOutcome::Accepted)
            .map(|t| (t.p, t.q))
    }

    /// `"(1,0):negative-f0 (2,1):accepted"`.
    pub fn summary(&self) -> String {
        self.tried
            .iter()
            .map(|t| format!("({},{}):{}", t.p, t.q, t.outcome))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn classify(fit: &FitResult, mode: Admissibility) -> FitOutcome {
    if !fit.converged {
        return FitOutcome::NoConvergence;
    }
    let beta0 = fit.model.beta[0];
    if mode == Admissibility::UnobservedAndSingletons {
        let den = 1.0 + fit.model.alpha.iter().sum::<f64>();
        let b = fit.model.beta.iter().sum::<f64>() / den;
        if !(b.is_finite() && b > 0.0) {
            return FitOutcome::NegativeF1;
        }
    }
    if !(beta0.is_finite() && beta0 > 0.0) {
        return FitOutcome::NegativeF0;
    }
    FitOutcome::Accepted
}

/// Extra-sum-of-squares F-test of a fit against the larger `(p, q)` model.
/// Depends on the SSEs only through their ratio, so it is unchanged when every
/// frequency count is multiplied by a constant.
fn larger_model_fits_better(fit: &FitResult, series: &RatioSeries, p: usize, q: usize) -> bool {
    let Ok((sse_full, dof_full)) = fit_sse(series, p, q) else {
        return false;
    };
    let dof_reduced = fit.residuals.len() - fit.model.n_params();
    let sse_reduced = fit.weighted_sse;
    if dof_full == 0 || dof_reduced <= dof_full || !sse_full.is_finite() {
        return false;
    }
    if sse_full == 0.0 {
        return sse_reduced > 0.0;
    }
    let df1 = (dof_reduced - dof_full) as f64;
    let df2 = dof_full as f64;
    let f = ((sse_reduced - sse_full) / df1) / (sse_full / df2);
    if f.is_nan() || f <= 0.0 {
        return false;
    }
    let dist = FisherSnedecor::new(df1, df2).expect("positive degrees of freedom");
    dist.sf(f) < LACK_OF_FIT_LEVEL
}

/// Walks [`MODEL_LADDER`] and returns the first admissible fit that the next
/// rung does not improve on significantly. If every admissible fit is
/// improved on, the first of them is returned with a warning.
pub fn select_model(
    series: &RatioSeries,
    mode: Admissibility,
) -> Result<(FitResult, SelectionTrace)> {
    select_from_ladder(series, mode, &MODEL_LADDER)
}

pub fn select_from_ladder(
    series: &RatioSeries,
    mode: Admissibility,
    ladder: &[(usize, usize)],
) -> Result<(FitResult, SelectionTrace)> {
    let mut trace = SelectionTrace::default();
    let mut fallback: Option<(usize, FitResult)> = None;
    for (i, &(p, q)) in ladder.iter().enumerate() {
        let outcome = match fit_wnls(series, p, q) {
            Ok(fit) => {
                let mut outcome = classify(&fit, mode);
                if outcome == FitOutcome::Accepted {
                    if let Some(&(np, nq)) = ladder.get(i + 1) {
                        if larger_model_fits_better(&fit, series, np, nq) {
                            outcome = FitOutcome::LackOfFit;
                        }
                    }
                }
                if outcome == FitOutcome::Accepted {
                    trace.tried.push(TrialRecord { p, q, outcome });
                    return Ok((fit, trace));
                }
                if outcome == FitOutcome::LackOfFit && fallback.is_none() {
                    fallback = Some((trace.tried.len(), fit));
                }
                outcome
            }
            Err(Error::TooFewPoints { .. }) => FitOutcome::InsufficientDof,
            Err(Error::DenominatorViolation(_)) => FitOutcome::DenominatorViolation,
            Err(Error::RankDeficient) => FitOutcome::RankDeficient,
            Err(Error::Singularity(_)) => FitOutcome::DenominatorViolation,
            Err(e) => return Err(e),
        };
        trace.tried.push(TrialRecord { p, q, outcome });
    }
    match fallback {
        Some((index, mut fit)) => {
            trace.tried[index].outcome = FitOutcome::Accepted;
            let (p, q) = (trace.tried[index].p, trace.tried[index].q);
            fit.warnings.push(format!(
                "every admissible model is improved on by the next rung; using the first admissible model ({p},{q})"
            ));
            Ok((fit, trace))
        }
        None => Err(Error::NoAdmissibleModel(trace)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_ratios_accept_linear_model() {
        let s = RatioSeries::from_ratios((2..7).map(|j| (j, 0.5)));
        let (fit, trace) = select_model(&s, Admissibility::UnobservedAndSingletons).unwrap();
        assert_eq!(trace.accepted(), Some((1, 0)));
        assert_eq!(trace.tried.len(), 1);
        assert!((fit.model.beta[0] - 0.5).abs() < 1e-12);
        assert!(fit.model.beta[1].abs() < 1e-12);
    }

    #[test]
    fn negative_intercept_advances_ladder() {
        // Exactly linear: intercept −0.35 under any weighting.
        let s = RatioSeries::from_ratios([(2, 0.05), (3, 0.25), (4, 0.45), (5, 0.65)]);
        let result = select_model(&s, Admissibility::Unobserved);
        let trace = match &result {
            Ok((_, trace)) => trace.clone(),
            Err(Error::NoAdmissibleModel(trace)) => trace.clone(),
            Err(e) => panic!("{e}"),
        };
        assert_eq!(
            trace.tried[0],
            TrialRecord {
                p: 1,
                q: 0,
                outcome: FitOutcome::NegativeF0
            }
        );
        assert!(trace.tried.len() > 1);
    }

    #[test]
    fn linear_intercept_is_ordinary_least_squares() {
        let s = RatioSeries::from_ratios([(2, 0.05), (3, 0.25), (4, 0.45), (5, 0.65)]);
        let fit = fit_wnls(&s, 1, 0).unwrap();
        assert!((fit.model.beta[0] + 0.35).abs() < 1e-12);
    }

    #[test]
    fn three_points_only_allow_first_rung() {
        // Decreasing ratios with an intercept below zero force a full walk.
        let s = RatioSeries::from_ratios([(2, 0.1), (3, 0.3), (4, 0.5)]);
        let err = select_model(&s, Admissibility::Unobserved).unwrap_err();
        let Error::NoAdmissibleModel(trace) = err else {
            panic!("expected no admissible model")
        };
        let outcomes: Vec<_> = trace.tried.iter().map(|t| t.outcome).collect();
        assert_eq!(
            outcomes,
            vec![
                FitOutcome::NegativeF0,
                FitOutcome::InsufficientDof,
                FitOutcome::InsufficientDof,
                FitOutcome::InsufficientDof,
                FitOutcome::InsufficientDof
            ]
        );
    }

    fn kemp_table() -> crate::freqtab::FrequencyCountTable {
        // f_{j+1}/f_j = 6/(j+1) exactly, with large counts.
        let mut f = 1_000_000.0f64;
        let pairs: Vec<(u64, u64)> = (1..=12u64)
            .map(|j| {
                let out = (j, f.round() as u64);
                f *= 6.0 / (j as f64 + 1.0);
                out
            })
            .collect();
        crate::freqtab::FrequencyCountTable::from_pairs(pairs).unwrap()
    }

    #[test]
    fn curved_ratios_reject_linear_model_for_lack_of_fit() {
        let s = crate::ratiofit::build_ratio_series(&kemp_table(), 2).unwrap();
        let (fit, trace) = select_model(&s, Admissibility::UnobservedAndSingletons).unwrap();
        assert_eq!(trace.tried[0].outcome, FitOutcome::LackOfFit);
        assert_eq!(trace.accepted(), Some((1, 1)));
        assert!(fit.warnings.is_empty(), "{:?}", fit.warnings);
        assert!((fit.model.beta[0] - 6.0).abs() < 1e-3, "{:?}", fit.model);
    }

    #[test]
    fn lack_of_fit_everywhere_falls_back_to_first_admissible() {
        // Exactly (−1 + 3j)/(1 + j/2): the (1,1) fit is perfect but has β̂0 < 0.
        let s = RatioSeries::from_ratios((2..8).map(|j| {
            let j = j as f64;
            (j as u64, (-1.0 + 3.0 * j) / (1.0 + 0.5 * j))
        }));
        let (fit, trace) = select_from_ladder(
            &s,
            Admissibility::UnobservedAndSingletons,
            &[(1, 0), (1, 1)],
        )
        .unwrap();
        assert_eq!(trace.tried[1].outcome, FitOutcome::NegativeF0);
        assert_eq!(trace.accepted(), Some((1, 0)));
        assert!(fit.warnings.iter().any(|w| w.contains("improved on")));
    }

    #[test]
    fn selection_is_deterministic() {
        let s = RatioSeries::from_ratios([
            (2, 1.6),
            (3, 1.3),
            (4, 0.95),
            (5, 0.84),
            (6, 0.7),
            (7, 0.66),
        ]);
        let a = select_model(&s, Admissibility::UnobservedAndSingletons);
        let b = select_model(&s, Admissibility::UnobservedAndSingletons);
        assert_eq!(a, b);
    }
}
