//! Completion-quality metrics.

use crate::error::{domain, Result};
use crate::tensor::DenseTensor;

fn check(truth: &DenseTensor, estimate: &DenseTensor) -> Result<()> {
    if truth.dims() != estimate.dims() {
        return Err(domain!(
            "dims differ: {:?} vs {:?}",
            truth.dims(),
            estimate.dims()
        ));
    }
    Ok(())
}

fn squared_error(truth: &DenseTensor, estimate: &DenseTensor) -> f64 {
    truth
        .data()
        .iter()
        .zip(estimate.data())
        .map(|(t, e)| (t - e).powi(2))
        .sum()
}

/// Relative standard error `||truth - estimate||_F / ||truth||_F`.
pub fn rse(truth: &DenseTensor, estimate: &DenseTensor) -> Result<f64> {
    check(truth, estimate)?;
    let norm = truth.frobenius_norm();
    if norm == 0.0 {
        return Err(domain!("RSE is undefined for an all-zero reference"));
    }
    Ok(squared_error(truth, estimate).sqrt() / norm)
}

/// Mean squared error over all entries.
pub fn mse(truth: &DenseTensor, estimate: &DenseTensor) -> Result<f64> {
    check(truth, estimate)?;
    Ok(squared_error(truth, estimate) / truth.len() as f64)
}

/// PSNR from a mean squared error: `20 log10(max) - 10 log10(mse)`.
/// Infinite when `mse == 0`.
pub fn psnr_from_mse(mse: f64, max_value: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * max_value.log10() - 10.0 * mse.log10()
    }
}

/// Peak signal-to-noise ratio in dB; `+inf` for a perfect estimate.
pub fn psnr(truth: &DenseTensor, estimate: &DenseTensor, max_value: f64) -> Result<f64> {
    if !(max_value > 0.0) {
        return Err(domain!("peak value must be positive, got {max_value}"));
    }
    Ok(psnr_from_mse(mse(truth, estimate)?, max_value))
}
