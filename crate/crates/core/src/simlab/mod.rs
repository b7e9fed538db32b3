//! Simulation laboratory: negative-binomial populations, conditional singleton
//! inflation, replicated estimation and summary statistics.

mod negbin;
mod report;
pub mod rng;
pub mod stats;
mod subsample;

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use negbin::NegativeBinomial;
pub use report::{EstimatorSummary, RuntimeStats, SimulationReport, REPORT_CSV_HEADER};
pub use rng::{replicate_rng, SimRng};
pub use stats::{error_stats, se_calibration_from, ErrorStats, SeCalibration};
pub use subsample::{curve_csv, subsample_curve, CurveRow, CURVE_CSV_HEADER};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::freqtab::FrequencyCountTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// True richness `C`.
    pub true_richness: u64,
    /// Negative binomial size `n`.
    pub size: u64,
    /// Negative binomial probability `p`.
    pub prob: f64,
    /// Percentage change applied to the observed singleton count.
    pub chimeric_rate: f64,
    pub reps: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub trim: f64,
}

impl SimulationConfig {
    pub fn new(true_richness: u64, size: u64, prob: f64) -> Self {
        Self {
            true_richness,
            size,
            prob,
            chimeric_rate: 0.0,
            reps: 1000,
            seed: 0,
            estimators: EstimatorKind::ALL.to_vec(),
            trim: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.true_richness == 0 {
            return bad("true richness must be positive".into());
        }
        if self.size == 0 {
            return bad("size must be positive".into());
        }
        if !(self.prob > 0.0 && self.prob < 1.0) {
            return bad(format!(
                "prob must lie strictly inside (0, 1), got {}",
                self.prob
            ));
        }
        if !self.chimeric_rate.is_finite() {
            return bad("chimeric rate must be finite".into());
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !(0.0..0.5).contains(&self.trim) {
            return bad(format!("trim must lie in [0, 0.5), got {}", self.trim));
        }
        if self.estimators.is_empty() {
            return bad("at least one estimator is required".into());
        }
        Ok(())
    }
}

/// `C` independent negative-binomial abundances, zeros included.
pub fn sample_nb_counts<R: Rng + ?Sized>(
    true_richness: u64,
    size: u64,
    prob: f64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let nb = NegativeBinomial::new(size, prob)?;
    Ok(draw(&nb, true_richness, rng))
}

fn draw<R: Rng + ?Sized>(nb: &NegativeBinomial, count: u64, rng: &mut R) -> Vec<u64> {
    (0..count).map(|_| nb.sample(rng)).collect()
}

/// Drops the unobserved (zero) taxa and tabulates the rest.
pub fn truncate_to_observed(counts: &[u64]) -> Result<FrequencyCountTable> {
    let observed: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    if observed.is_empty() {
        return Err(Error::DegenerateSample);
    }
    FrequencyCountTable::from_abundances(&observed)
}

/// Multiplies the realised singleton count by `1 + rate/100`, rounding half
/// away from zero and flooring at zero. Other counts are untouched.
pub fn apply_chimeric_inflation(
    table: &FrequencyCountTable,
    rate_percent: f64,
) -> Result<FrequencyCountTable> {
    let f1 = table.get(1) as f64;
    let inflated = (f1 * (1.0 + rate_percent / 100.0)).round().max(0.0) as u64;
    match table.with_frequency(1, inflated) {
        Err(Error::Empty) => Err(Error::DegenerateSample),
        other => other,
    }
}

/// One replicate's outcome for one estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateEstimate {
    /// `(Ĉ, se)`, or `None` when the estimator failed.
    pub value: Option<(f64, f64)>,
    pub seconds: f64,
}

/// All estimator outcomes for one replicate, in `cfg.estimators` order.
pub type Replicate = Vec<ReplicateEstimate>;

/// Simulates replicate `index`: sample, truncate, inflate, estimate.
pub fn run_replicate(cfg: &SimulationConfig, nb: &NegativeBinomial, index: u64) -> Replicate {
    let mut rng = replicate_rng(cfg.seed, index);
    let counts = draw(nb, cfg.true_richness, &mut rng);
    let table =
        truncate_to_observed(&counts).and_then(|t| apply_chimeric_inflation(&t, cfg.chimeric_rate));
    cfg.estimators
        .iter()
        .map(|&kind| match &table {
            Ok(t) => {
                let start = Instant::now();
                let est = kind.estimate(t);
                let seconds = start.elapsed().as_secs_f64();
                ReplicateEstimate {
                    value: est
                        .ok()
                        .filter(|e| e.c_hat.is_finite())
                        .map(|e| (e.c_hat, e.se)),
                    seconds,
                }
            }
            Err(_) => ReplicateEstimate {
                value: None,
                seconds: 0.0,
            },
        })
        .collect()
}

/// How replicates are scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

pub fn simulate_replicates(cfg: &SimulationConfig, execution: Execution) -> Result<Vec<Replicate>> {
    cfg.validate()?;
    let nb = NegativeBinomial::new(cfg.size, cfg.prob)?;
    let reps = cfg.reps as u64;
    Ok(match execution {
        Execution::Serial => (0..reps).map(|i| run_replicate(cfg, &nb, i)).collect(),
        Execution::Parallel => (0..reps)
            .into_par_iter()
            .map(|i| run_replicate(cfg, &nb, i))
            .collect(),
    })
}

pub fn run_replications(cfg: &SimulationConfig) -> Result<SimulationReport> {
    run_replications_with(cfg, Execution::default())
}

pub fn run_replications_with(
    cfg: &SimulationConfig,
    execution: Execution,
) -> Result<SimulationReport> {
    let replicates = simulate_replicates(cfg, execution)?;
    Ok(SimulationReport::from_replicates(cfg, &replicates))
}

/// SE calibration for a configuration that requests exactly one estimator.
pub fn se_calibration(cfg: &SimulationConfig) -> Result<SeCalibration> {
    if cfg.estimators.len() != 1 {
        return Err(Error::InvalidConfig(
            "SE calibration needs exactly one estimator".into(),
        ));
    }
    let replicates = simulate_replicates(cfg, Execution::default())?;
    let (estimates, ses): (Vec<f64>, Vec<f64>) =
        replicates.iter().filter_map(|r| r[0].value).unzip();
    se_calibration_from(&estimates, &ses)
}

/// Wall-clock seconds of each estimator call (sampling excluded).
pub fn runtime_report(cfg: &SimulationConfig) -> Result<Vec<(EstimatorKind, RuntimeStats)>> {
    let replicates = simulate_replicates(cfg, Execution::Serial)?;
    Ok(cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let secs: Vec<f64> = replicates.iter().map(|r| r[k].seconds).collect();
            (kind, RuntimeStats::from_seconds(&secs, cfg.trim))
        })
        .collect())
}

/// Times `reps` calls of `f` and summarises them like [`runtime_report`].
pub fn time_calls<F: FnMut()>(reps: usize, trim: f64, mut f: F) -> RuntimeStats {
    let secs: Vec<f64> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64()
        })
        .collect();
    RuntimeStats::from_seconds(&secs, trim)
}
