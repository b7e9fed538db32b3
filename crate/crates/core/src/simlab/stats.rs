//! Error and spread summaries for replicated estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normal-consistency constant for the median absolute deviation.
pub const MAD_SCALE: f64 = 1.4826;

/// Sorts a copy, NaNs last.
fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let v = sorted(values);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Mean after dropping `floor(trim · n)` observations from each end.
pub fn trimmed_mean(values: &[f64], trim: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let v = sorted(values);
    let cut = (trim * v.len() as f64).floor() as usize;
    let kept = &v[cut..v.len() - cut];
    if kept.is_empty() {
        // trim = 0.5 on an even count; fall back to the median.
        return median(values);
    }
    mean(kept)
}

/// Median absolute deviation about the median, scaled by [`MAD_SCALE`].
pub fn scaled_mad(values: &[f64]) -> Option<f64> {
    let m = median(values)?;
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&dev).map(|d| d * MAD_SCALE)
}

/// Sample standard deviation (`n − 1` denominator); zero for a single value.
pub fn sample_sd(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    if values.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

/// Squared-error summary of replicated estimates against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub trimmed_rmse: f64,
    pub mean_sq: f64,
    pub median_sq: f64,
}

impl ErrorStats {
    pub fn rmse(&self) -> f64 {
        self.mean_sq.sqrt()
    }

    pub fn root_median_sq(&self) -> f64 {
        self.median_sq.sqrt()
    }
}

pub fn error_stats(estimates: &[f64], true_c: f64, trim: f64) -> Result<ErrorStats> {
    if estimates.is_empty() {
        return Err(Error::NoData);
    }
    if !(0.0..0.5).contains(&trim) {
        return Err(Error::InvalidConfig(format!(
            "trim must lie in [0, 0.5), got {trim}"
        )));
    }
    let sq: Vec<f64> = estimates.iter().map(|c| (c - true_c).powi(2)).collect();
    Ok(ErrorStats {
        trimmed_rmse: trimmed_mean(&sq, trim).expect("non-empty").sqrt(),
        mean_sq: mean(&sq).expect("non-empty"),
        median_sq: median(&sq).expect("non-empty"),
    })
}

/// Reported standard errors against the realised spread of the estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeCalibration {
    pub median_se: f64,
    pub mad: f64,
    /// `100 (median_se − mad) / mad`; `None` when `mad` is zero.
    pub relative_error_percent: Option<f64>,
}

pub fn se_calibration_from(estimates: &[f64], standard_errors: &[f64]) -> Result<SeCalibration> {
    let median_se = median(standard_errors).ok_or(Error::NoData)?;
    let mad = scaled_mad(estimates).ok_or(Error::NoData)?;
    let relative_error_percent = (mad > 0.0).then(|| 100.0 * (median_se - mad) / mad);
    Ok(SeCalibration {
        median_se,
        mad,
        relative_error_percent,
    })
}
