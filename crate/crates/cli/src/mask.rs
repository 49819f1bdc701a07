//! Sampling masks as sorted 1-based linear indices.

use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// Positions over every mode but the last (channels) drawn without
    /// replacement; all channels of a position are kept.
    Iid,
    /// One spatial mask over the first two modes, replicated over the rest.
    Sensor,
}

/// Observed entries for a tensor of `dims`. `fraction` is the share of
/// sampled positions and must lie in (0, 1].
pub fn make_mask(dims: &[usize], fraction: f64, mode: MaskMode, seed: u64) -> Result<Vec<usize>> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(config_err!("mask dims must have at least two positive modes, got {dims:?}"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(config_err!("observed fraction must lie in (0, 1], got {fraction}"));
    }
    let sampled_modes = match mode {
        MaskMode::Iid if dims.len() > 2 => dims.len() - 1,
        MaskMode::Iid => 2,
        MaskMode::Sensor => 2,
    };
    let positions: usize = dims[..sampled_modes].iter().product();
    let replicas: usize = dims[sampled_modes..].iter().product();
    let count = (fraction * positions as f64).round() as usize;
    if count == 0 {
        return Err(config_err!("fraction {fraction} of {positions} positions observes nothing"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, positions, count).into_vec();
    let mut linear: Vec<usize> = (0..replicas)
        .flat_map(|r| picks.iter().map(move |&p| p + positions * r + 1))
        .collect();
    linear.sort_unstable();
    Ok(linear)
}

pub fn write_mask(path: &Path, indices: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index"])?;
    for i in indices {
        w.write_record([i.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a mask CSV (header `index`, one 1-based linear index per row).
pub fn read_mask(path: &Path, total: usize) -> Result<Vec<usize>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| config_err!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = rec.get(0).unwrap_or("").trim();
        let i: usize = field
            .parse()
            .map_err(|_| config_err!("{}: bad index {field:?}", path.display()))?;
        if i == 0 || i > total {
            return Err(config_err!("{}: index {i} outside 1..={total}", path.display()));
        }
        out.push(i);
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(config_err!("{}: mask is empty", path.display()));
    }
    Ok(out)
}
