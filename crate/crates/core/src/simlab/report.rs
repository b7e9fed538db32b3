use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::stats::{self, ErrorStats, SeCalibration};
use super::{Replicate, SimulationConfig};
use crate::estimators::EstimatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub trimmed_mean: f64,
    pub mean: f64,
    pub median: f64,
}

impl RuntimeStats {
    pub fn from_seconds(secs: &[f64], trim: f64) -> Self {
        Self {
            trimmed_mean: stats::trimmed_mean(secs, trim).unwrap_or(0.0),
            mean: stats::mean(secs).unwrap_or(0.0),
            median: stats::median(secs).unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    pub successes: usize,
    pub failures: usize,
    /// `None` when every replicate failed.
    pub errors: Option<ErrorStats>,
    pub calibration: Option<SeCalibration>,
    /// Wall-clock timings vary run to run and are kept out of serialised reports.
    #[serde(skip)]
    pub runtime: RuntimeStats,
}

impl EstimatorSummary {
    /// Named statistics in their fixed report order.
    pub fn statistics(&self) -> Vec<(&'static str, Option<f64>)> {
        let e = self.errors;
        let c = self.calibration;
        vec![
            ("trimmed_rmse", e.map(|e| e.trimmed_rmse)),
            ("root_mean_sq_error", e.map(|e| e.rmse())),
            ("root_median_sq_error", e.map(|e| e.root_median_sq())),
            ("mean_sq_error", e.map(|e| e.mean_sq)),
            ("median_sq_error", e.map(|e| e.median_sq)),
            ("median_se", c.map(|c| c.median_se)),
            ("mad_of_estimates", c.map(|c| c.mad)),
            (
                "se_relative_error_percent",
                c.and_then(|c| c.relative_error_percent),
            ),
            ("successes", Some(self.successes as f64)),
        ]
    }

    pub fn statistic(&self, name: &str) -> Option<f64> {
        self.statistics()
            .into_iter()
            .find(|(n, _)| *n == name)
            .and_then(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub estimators: Vec<EstimatorSummary>,
}

pub const REPORT_CSV_HEADER: [&str; 6] = [
    "estimator",
    "statistic",
    "value",
    "failures",
    "reps",
    "seed",
];

impl SimulationReport {
    /// Aggregates replicate outcomes. Statistics are computed from the full
    /// collected vectors, so the result does not depend on scheduling.
    pub fn from_replicates(cfg: &SimulationConfig, replicates: &[Replicate]) -> Self {
        let estimators = cfg
            .estimators
            .iter()
            .enumerate()
            .map(|(k, &kind)| {
                let (estimates, ses): (Vec<f64>, Vec<f64>) =
                    replicates.iter().filter_map(|r| r[k].value).unzip();
                let secs: Vec<f64> = replicates.iter().map(|r| r[k].seconds).collect();
                let errors =
                    stats::error_stats(&estimates, cfg.true_richness as f64, cfg.trim).ok();
                let finite_ses: Vec<f64> = ses.iter().copied().filter(|s| s.is_finite()).collect();
                let calibration = if finite_ses.is_empty() {
                    None
                } else {
                    stats::se_calibration_from(&estimates, &finite_ses).ok()
                };
                EstimatorSummary {
                    estimator: kind,
                    successes: estimates.len(),
                    failures: replicates.len() - estimates.len(),
                    errors,
                    calibration,
                    runtime: RuntimeStats::from_seconds(&secs, cfg.trim),
                }
            })
            .collect();
        Self {
            config: cfg.clone(),
            estimators,
        }
    }

    pub fn summary(&self, kind: EstimatorKind) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|s| s.estimator == kind)
    }

    /// One row per estimator × statistic; values rounded to `precision` decimals.
    pub fn to_csv(&self, precision: usize) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_CSV_HEADER).expect("in-memory write");
        for s in &self.estimators {
            for (name, value) in s.statistics() {
                let value = value.map_or_else(|| "NA".to_string(), |v| format!("{v:.precision$}"));
                w.write_record([
                    s.estimator.name(),
                    name,
                    &value,
                    &s.failures.to_string(),
                    &self.config.reps.to_string(),
                    &self.config.seed.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Nested by estimator, full precision.
    pub fn to_json(&self) -> Value {
        let mut by_estimator = Map::new();
        for s in &self.estimators {
            let statistics: Map<String, Value> = s
                .statistics()
                .into_iter()
                .map(|(n, v)| (n.to_string(), v.map_or(Value::Null, Value::from)))
                .collect();
            by_estimator.insert(
                s.estimator.name().to_string(),
                json!({
                    "failures": s.failures,
                    "reps": self.config.reps,
                    "seed": self.config.seed,
                    "statistics": statistics,
                }),
            );
        }
        json!({
            "config": self.config,
            "estimators": by_estimator,
        })
    }

    /// Per-estimator timing rows: `estimator,statistic,seconds`.
    pub fn runtime_csv(&self) -> String {
        let mut out = String::from("estimator,statistic,seconds\n");
        for s in &self.estimators {
            for (name, v) in [
                ("t-mean", s.runtime.trimmed_mean),
                ("mean", s.runtime.mean),
                ("median", s.runtime.median),
            ] {
                out.push_str(&format!("{},{},{:.6}\n", s.estimator, name, v));
            }
        }
        out
    }
}
