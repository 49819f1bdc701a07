//! Initial tensor trains for the ALS sweeps.
//!
//! The interpolation initializer fills missing entries of image-like data by
//! box-averaging the observed entries onto a grid `h` times coarser along
//! the spatial modes, upsampling back with cubic convolution, and
//! compressing the result with a rank-truncated TT-SVD.

use nalgebra::DMatrix;

use crate::error::{domain, Result};
use crate::sampling::ObservationSet;
use crate::tensor::{mode_product, offset0, DenseTensor};
use crate::tt::{tt_svd, TensorTrain};

/// Cubic convolution kernel with `a = -0.5`.
pub fn keys_kernel(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Box size giving about one observation per coarse cell:
/// `max(2, round(sqrt(1 / p)))` for observed fraction `p`.
pub fn default_box_size(observed_fraction: f64) -> usize {
    if observed_fraction <= 0.0 {
        return 2;
    }
    ((1.0 / observed_fraction).sqrt().round() as usize).max(2)
}

fn check_modes(dims: &[usize], resized: &[usize]) -> Result<()> {
    for &k in resized {
        if k == 0 || k > dims.len() {
            return Err(domain!("resized mode {k} out of range 1..={}", dims.len()));
        }
    }
    Ok(())
}

fn coarse_dims(dims: &[usize], resized: &[usize], h: usize) -> Result<Vec<usize>> {
    if h == 0 {
        return Err(domain!("box size must be at least 1"));
    }
    check_modes(dims, resized)?;
    dims.iter()
        .enumerate()
        .map(|(k, &n)| {
            if !resized.contains(&(k + 1)) {
                return Ok(n);
            }
            let c = n / h;
            if c < 2 {
                Err(domain!(
                    "mode {} of size {n} shrinks to {c} < 2 with box size {h}",
                    k + 1
                ))
            } else {
                Ok(c)
            }
        })
        .collect()
}

/// Averages observed entries over `h`-wide boxes along the resized modes
/// (1-based). Trailing remainders fold into the last box. Boxes without any
/// observation take the global observed mean.
pub fn box_downscale(obs: &ObservationSet, resized: &[usize], h: usize) -> Result<DenseTensor> {
    let dims = obs.dims();
    let coarse = coarse_dims(dims, resized, h)?;
    let n: usize = coarse.iter().product();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    let mut cell = vec![0usize; dims.len()];
    for l in 0..obs.len() {
        for (k, &i) in obs.idx0(l).iter().enumerate() {
            cell[k] = if coarse[k] == dims[k] {
                i
            } else {
                (i / h).min(coarse[k] - 1)
            };
        }
        let c = offset0(&cell, &coarse);
        sum[c] += obs.values()[l];
        count[c] += 1;
    }
    let mean = if obs.is_empty() {
        0.0
    } else {
        obs.values().iter().sum::<f64>() / obs.len() as f64
    };
    let data = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { mean })
        .collect();
    DenseTensor::new(coarse, data)
}

/// `n_out x n_in` cubic-convolution resampling matrix with edge clamping,
/// using pixel-center alignment.
pub fn cubic_resize_matrix(n_in: usize, n_out: usize) -> DMatrix<f64> {
    let scale = n_out as f64 / n_in as f64;
    let mut m = DMatrix::zeros(n_out, n_in);
    for i in 0..n_out {
        let u = (i as f64 + 0.5) / scale - 0.5;
        let base = u.floor();
        let t = u - base;
        for tap in -1..=2i64 {
            let w = keys_kernel(t - tap as f64);
            if w == 0.0 {
                continue;
            }
            let j = (base as i64 + tap).clamp(0, n_in as i64 - 1) as usize;
            m[(i, j)] += w;
        }
    }
    m
}

/// Dense fill of the missing entries: box downscale then cubic upscale back
/// to the original dims. Non-resized modes are left untouched.
pub fn interp_fill(obs: &ObservationSet, resized: &[usize], h: usize) -> Result<DenseTensor> {
    let mut t = box_downscale(obs, resized, h)?;
    for &k in resized {
        let target = obs.dims()[k - 1];
        let cur = t.dims()[k - 1];
        if cur != target {
            t = mode_product(&t, &cubic_resize_matrix(cur, target), k)?;
        }
    }
    Ok(t)
}

/// Interpolation-based initial tensor train over `factored_dims`, a
/// refinement of the observation dims with the same linear ordering.
/// The result is canonical at the last core.
pub fn interp_init(
    obs: &ObservationSet,
    resized: &[usize],
    h: usize,
    factored_dims: &[usize],
    ranks: &[usize],
) -> Result<TensorTrain> {
    let filled = interp_fill(obs, resized, h)?;
    tt_svd(&filled.into_reshaped(factored_dims.to_vec())?, ranks)
}

/// Tensor train of the observed entries with zeros elsewhere.
pub fn zero_fill_init(obs: &ObservationSet, factored_dims: &[usize], ranks: &[usize]) -> Result<TensorTrain> {
    let mut t = DenseTensor::zeros(factored_dims.to_vec())?;
    if t.len() != obs.dims().iter().product::<usize>() {
        return Err(domain!(
            "factored dims {factored_dims:?} do not match observation dims {:?}",
            obs.dims()
        ));
    }
    for (l, &v) in obs.values().iter().enumerate() {
        t.data_mut()[obs.offset(l)] = v;
    }
    tt_svd(&t, ranks)
}

/// Scatters observations into a dense tensor with `fill` elsewhere.
pub fn scatter(obs: &ObservationSet, fill: f64) -> DenseTensor {
    let mut t = DenseTensor::zeros(obs.dims().to_vec()).expect("validated dims");
    t.data_mut().iter_mut().for_each(|x| *x = fill);
    for (l, &v) in obs.values().iter().enumerate() {
        t.data_mut()[obs.offset(l)] = v;
    }
    t
}
