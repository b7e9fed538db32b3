use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::replicate_rng;
use super::stats;
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::freqtab::FrequencyCountTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub fraction: f64,
    pub estimator: EstimatorKind,
    /// `None` when no subsample produced a usable estimate.
    pub mean_c_hat: Option<f64>,
    pub sd_c_hat: Option<f64>,
    pub failures: usize,
}

pub const CURVE_CSV_HEADER: &str = "fraction,estimator,mean_C_hat,sd_C_hat,failures";

/// Draws `m` reads with replacement from the pooled reads, i.e. a multinomial
/// sample with cell probabilities proportional to `abundances`.
fn multinomial_subsample<R: Rng + ?Sized>(cumulative: &[u64], m: u64, rng: &mut R) -> Vec<u64> {
    let total = *cumulative.last().expect("non-empty");
    let mut counts = vec![0u64; cumulative.len()];
    for _ in 0..m {
        let read = rng.gen_range(0..total);
        let taxon = cumulative.partition_point(|&c| c <= read);
        counts[taxon] += 1;
    }
    counts
}

/// Estimates under repeated subsampling at each fraction of the total reads.
///
/// `fractions` must be ascending and inside `(0, 1]`. A fraction of exactly 1
/// uses the full sample once.
pub fn subsample_curve(
    abundances: &[u64],
    fractions: &[f64],
    reps: usize,
    estimators: &[EstimatorKind],
    seed: u64,
) -> Result<Vec<CurveRow>> {
    let full = FrequencyCountTable::from_abundances(abundances)?;
    if fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::InvalidConfig("fractions must lie in (0, 1]".into()));
    }
    if fractions.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig(
            "fractions must be sorted ascending".into(),
        ));
    }
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be at least 1".into()));
    }
    let cumulative: Vec<u64> = abundances
        .iter()
        .scan(0u64, |acc, &a| {
            *acc += a;
            Some(*acc)
        })
        .collect();
    let total_reads = *cumulative.last().expect("non-empty");

    let mut rows = Vec::new();
    for (fi, &fraction) in fractions.iter().enumerate() {
        let tables: Vec<Option<FrequencyCountTable>> = if fraction == 1.0 {
            vec![Some(full.clone())]
        } else {
            let m = (fraction * total_reads as f64).round() as u64;
            (0..reps as u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replicate_rng(seed, ((fi as u64) << 32) | r);
                    let counts = multinomial_subsample(&cumulative, m, &mut rng);
                    super::truncate_to_observed(&counts).ok()
                })
                .collect()
        };
        for &kind in estimators {
            let values: Vec<f64> = tables
                .iter()
                .map(|t| {
                    t.as_ref()
                        .and_then(|t| kind.estimate(t).ok())
                        .map(|e| e.c_hat)
                })
                .filter_map(|c| c.filter(|c| c.is_finite()))
                .collect();
            rows.push(CurveRow {
                fraction,
                estimator: kind,
                mean_c_hat: stats::mean(&values),
                sd_c_hat: stats::sample_sd(&values),
                failures: tables.len() - values.len(),
            });
        }
    }
    Ok(rows)
}

pub fn curve_csv(rows: &[CurveRow], precision: usize) -> String {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.precision$}"));
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.fraction,
            r.estimator,
            fmt(r.mean_c_hat),
            fmt(r.sd_c_hat),
            r.failures
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric_abundances() -> Vec<u64> {
        // f_j = 2^(11 − j) taxa with abundance j, j = 1..10
        (1..=10u64)
            .flat_map(|j| std::iter::repeat_n(j, 1 << (11 - j)))
            .collect()
    }

    #[test]
    fn full_fraction_matches_full_data() {
        let v = geometric_abundances();
        let rows = subsample_curve(&v, &[1.0], 10, &[EstimatorKind::Chao1], 1).unwrap();
        assert_eq!(rows.len(), 1);
        let full = EstimatorKind::Chao1
            .estimate(&FrequencyCountTable::from_abundances(&v).unwrap())
            .unwrap();
        assert_eq!(rows[0].mean_c_hat, Some(full.c_hat));
        assert_eq!(rows[0].sd_c_hat, Some(0.0));
    }

    #[test]
    fn rows_follow_fraction_order() {
        let v = geometric_abundances();
        let rows = subsample_curve(&v, &[0.5, 1.0], 5, &EstimatorKind::ALL, 1).unwrap();
        let fr: Vec<f64> = rows.iter().map(|r| r.fraction).collect();
        assert_eq!(fr, vec![0.5, 0.5, 0.5, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn rejects_unsorted_or_out_of_range() {
        let v = geometric_abundances();
        assert!(subsample_curve(&v, &[1.0, 0.5], 5, &[EstimatorKind::Chao1], 1).is_err());
        assert!(subsample_curve(&v, &[0.0], 5, &[EstimatorKind::Chao1], 1).is_err());
        assert!(subsample_curve(&v, &[1.5], 5, &[EstimatorKind::Chao1], 1).is_err());
    }

    #[test]
    fn subsample_preserves_read_total() {
        let cumulative = [3, 4, 10];
        let counts = multinomial_subsample(&cumulative, 25, &mut replicate_rng(5, 0));
        assert_eq!(counts.iter().sum::<u64>(), 25);
    }

    #[test]
    fn half_sample_estimates_fall_below_full_data() {
        let v = geometric_abundances();
        let full = EstimatorKind::Chao1
            .estimate(&FrequencyCountTable::from_abundances(&v).unwrap())
            .unwrap();
        let rows = subsample_curve(&v, &[0.5], 200, &[EstimatorKind::Chao1], 42).unwrap();
        assert!(rows[0].mean_c_hat.unwrap() < full.c_hat);
    }
}
