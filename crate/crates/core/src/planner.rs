//! Dimension factorization, TT-rank schedules and cross-validated rank
//! selection.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::sampling::{holdout_split, remap_observations, ObservationSet};
use crate::solver::{complete, CompletionProblem};
use crate::tt::clamp_ranks;

pub const DEFAULT_MAX_FACTOR: usize = 10;
pub const DEFAULT_PROBLEM_CAP: usize = 4000;

/// Prime factors in increasing order; `1` has none.
pub fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            out.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Per-mode factor lists plus anything worth telling the user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimFactorization {
    pub layout: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl DimFactorization {
    pub fn factored_dims(&self) -> Vec<usize> {
        self.layout.iter().flatten().copied().collect()
    }
}

/// Splits one dim into factors `<= max_factor` by merging its primes,
/// largest first, into the first group they fit. Primes above
/// `max_factor` stay alone.
pub fn factorize_dim(n: usize, max_factor: usize) -> Vec<usize> {
    let mut primes = prime_factors(n);
    if primes.is_empty() {
        return vec![n.max(1)];
    }
    primes.reverse();
    let mut groups: Vec<usize> = Vec::new();
    for p in primes {
        match groups.iter_mut().find(|g| **g * p <= max_factor) {
            Some(g) => *g *= p,
            None => groups.push(p),
        }
    }
    groups
}

/// Factorizes every dim; warns about primes larger than `max_factor`
/// (padding the tensor with zeros would avoid them).
pub fn factorize_dims(dims: &[usize], max_factor: usize) -> Result<DimFactorization> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(domain!("dims must be non-empty and positive, got {dims:?}"));
    }
    if max_factor < 2 {
        return Err(domain!("max factor must be at least 2"));
    }
    let mut warnings = Vec::new();
    let layout = dims
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let f = factorize_dim(n, max_factor);
            for &p in f.iter().filter(|&&p| p > max_factor) {
                warnings.push(format!(
                    "mode {} (size {n}) has prime factor {p} > {max_factor}; its core stays large unless the mode is zero-padded",
                    k + 1
                ));
            }
            f
        })
        .collect();
    Ok(DimFactorization { layout, warnings })
}

/// `R_2..R_d` from `R_2`, a plateau `R_mid` reached through
/// `R_{k+1} = min(R_k I_k, R_mid)`, and optional overrides of `R_{d-1}`
/// and `R_d`. The result is clamped to the feasible chain.
pub fn rank_schedule(
    factored_dims: &[usize],
    r2: usize,
    rmid: usize,
    r_dm1: Option<usize>,
    r_d: Option<usize>,
) -> Result<Vec<usize>> {
    let d = factored_dims.len();
    if d < 2 {
        return Ok(Vec::new());
    }
    if r2 == 0 || rmid == 0 || r_dm1 == Some(0) || r_d == Some(0) {
        return Err(domain!("TT-ranks must be positive"));
    }
    // full chain R_1..R_{d+1}, 1-based positions
    let mut r = vec![1usize; d + 2];
    r[2] = r2;
    for k in 2..d {
        r[k + 1] = (r[k] * factored_dims[k - 1]).min(rmid);
    }
    if let (Some(v), true) = (r_dm1, d >= 3) {
        r[d - 1] = v;
    }
    if let Some(v) = r_d {
        r[d] = v;
    }
    clamp_ranks(factored_dims, &r[2..=d])
}

/// Worst core-local system size `R_k I_k R_{k+1}`.
pub fn max_problem_size(factored_dims: &[usize], ranks: &[usize]) -> usize {
    let mut chain = vec![1];
    chain.extend_from_slice(ranks);
    chain.push(1);
    factored_dims
        .iter()
        .enumerate()
        .map(|(k, &n)| chain[k] * n * chain[k + 1])
        .max()
        .unwrap_or(0)
}

/// A candidate rank choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RankSpec {
    Schedule {
        r2: usize,
        rmid: usize,
        r_dm1: Option<usize>,
        r_d: Option<usize>,
    },
    Explicit(Vec<usize>),
}

impl RankSpec {
    pub fn resolve(&self, factored_dims: &[usize]) -> Result<Vec<usize>> {
        match self {
            RankSpec::Schedule { r2, rmid, r_dm1, r_d } => rank_schedule(factored_dims, *r2, *rmid, *r_dm1, *r_d),
            RankSpec::Explicit(r) => clamp_ranks(factored_dims, r),
        }
    }
}

/// Number of TT parameters for a rank chain.
pub fn param_count(factored_dims: &[usize], ranks: &[usize]) -> usize {
    let mut chain = vec![1];
    chain.extend_from_slice(ranks);
    chain.push(1);
    factored_dims
        .iter()
        .enumerate()
        .map(|(k, &n)| chain[k] * n * chain[k + 1])
        .sum()
}

/// Cross-validation outcome of one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CvScore {
    pub spec: RankSpec,
    pub ranks: Vec<usize>,
    pub params: usize,
    pub trial_rse: Vec<f64>,
    pub mean_rse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// One entry per candidate, in input order.
    pub scores: Vec<CvScore>,
    /// Index of the chosen candidate.
    pub best: usize,
}

impl CvReport {
    pub fn chosen(&self) -> &CvScore {
        &self.scores[self.best]
    }

    /// Candidate indices by increasing score (ties toward fewer parameters).
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| {
            let (sa, sb) = (&self.scores[a], &self.scores[b]);
            sa.mean_rse
                .total_cmp(&sb.mean_rse)
                .then(sa.params.cmp(&sb.params))
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Held-out RSE of each candidate averaged over `trials` random splits.
///
/// `template` supplies the layout, regularization, sweeps and init; its
/// observations are the pool that gets split and its ranks are replaced by
/// each candidate. Trial `t` uses seed `seed + t` for every candidate.
pub fn cross_validate(
    template: &CompletionProblem,
    candidates: &[RankSpec],
    trials: usize,
    holdout: f64,
    seed: u64,
) -> Result<CvReport> {
    if candidates.is_empty() {
        return Err(domain!("no candidate rank schedules"));
    }
    if trials == 0 {
        return Err(domain!("at least one trial is needed"));
    }
    let dims = template.factored_dims();
    let resolved: Vec<Vec<usize>> = candidates.iter().map(|c| c.resolve(&dims)).collect::<Result<_>>()?;
    let splits: Vec<(ObservationSet, ObservationSet)> = (0..trials)
        .map(|t| holdout_split(&template.observations, holdout, seed.wrapping_add(t as u64)))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let results: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let (train, validate) = &splits[t];
            let mut problem = template.clone();
            problem.observations = train.clone();
            problem.ranks = resolved[c].clone();
            let (tt, _) = complete(&problem)?;
            let held = remap_observations(validate, &template.layout)?;
            let (mut num, mut den) = (0.0, 0.0);
            for (m, y) in held.iter() {
                num += (tt.entry(&m)? - y).powi(2);
                den += y * y;
            }
            Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
        })
        .collect::<Result<_>>()?;

    let scores: Vec<CvScore> = candidates
        .iter()
        .enumerate()
        .map(|(c, spec)| {
            let trial_rse = results[c * trials..(c + 1) * trials].to_vec();
            let mean_rse = trial_rse.iter().sum::<f64>() / trials as f64;
            CvScore {
                spec: spec.clone(),
                ranks: resolved[c].clone(),
                params: param_count(&dims, &resolved[c]),
                trial_rse,
                mean_rse,
            }
        })
        .collect();
    let mut report = CvReport { scores, best: 0 };
    report.best = report.ranking()[0];
    Ok(report)
}
