use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freqtab::{tail_cutoff, FrequencyCountTable};

/// One regression observation `r_j = f_{j+1} / f_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub j: u64,
    pub ratio: f64,
    pub weight: f64,
    /// `f_j`, the denominator count backing the ratio.
    pub f_j: u64,
    /// `f_{j+1}`, the numerator count.
    pub f_next: u64,
}

impl RatioPoint {
    /// First-order variance factor of a ratio of counts, `1/f_{j+1} + 1/f_j`.
    pub fn count_variance_factor(&self) -> f64 {
        1.0 / self.f_next as f64 + 1.0 / self.f_j as f64
    }
}

/// Frequency-ratio dataset over a contiguous run of `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    points: Vec<RatioPoint>,
}

impl RatioSeries {
    /// Builds a series directly from `(j, ratio)` pairs with unit weights.
    ///
    /// The backing counts are unknown here; they are recorded as 1 so that the
    /// reweighting rule degenerates to a function of the fitted ratio alone.
    pub fn from_ratios<I>(points: I) -> Self
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        let points: Vec<_> = points
            .into_iter()
            .map(|(j, ratio)| RatioPoint {
                j,
                ratio,
                weight: 1.0,
                f_j: 1,
                f_next: 1,
            })
            .collect();
        debug_assert!(points.windows(2).all(|w| w[0].j < w[1].j));
        debug_assert!(points.iter().all(|p| p.ratio > 0.0));
        Self { points }
    }

    pub fn points(&self) -> &[RatioPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn j_min(&self) -> u64 {
        self.points.first().map(|p| p.j).unwrap_or(0)
    }

    /// Last `j` with a ratio (the cutoff `J`).
    pub fn j_max(&self) -> u64 {
        self.points.last().map(|p| p.j).unwrap_or(0)
    }

    pub fn js(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.j as f64).collect()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ratio).collect()
    }
}

/// Ratios `f_{j+1}/f_j` for every `j` in `[j_min, J]`, `J` from [`tail_cutoff`].
pub fn build_ratio_series(table: &FrequencyCountTable, j_min: u64) -> Result<RatioSeries> {
    let cutoff = tail_cutoff(table, j_min)?;
    Ok(ratios_between(table, j_min, cutoff))
}

/// Every ratio on the contiguous run starting at `j_min`, without the
/// minimum-length requirement of [`build_ratio_series`].
pub fn contiguous_ratios(table: &FrequencyCountTable, j_min: u64) -> Result<RatioSeries> {
    if !table.contains(j_min) {
        return Err(Error::MissingCount(j_min));
    }
    let mut last = j_min;
    while table.contains(last + 1) {
        last += 1;
    }
    if last == j_min {
        return Err(Error::InsufficientData {
            available: 0,
            required: 1,
        });
    }
    Ok(ratios_between(table, j_min, last - 1))
}

fn ratios_between(table: &FrequencyCountTable, j_min: u64, cutoff: u64) -> RatioSeries {
    let points = (j_min..=cutoff)
        .map(|j| {
            let f_j = table.get(j);
            let f_next = table.get(j + 1);
            RatioPoint {
                j,
                ratio: f_next as f64 / f_j as f64,
                weight: 1.0,
                f_j,
                f_next,
            }
        })
        .collect();
    RatioSeries { points }
}
