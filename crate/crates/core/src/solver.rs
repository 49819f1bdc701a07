//! Alternating least squares over the TT-cores.
//!
//! A sweep updates cores `d, d-1, .., 2` with left shifts of the canonical
//! site, then `1, .., d-1` with right shifts. Each update solves the normal
//! equations of the core-local least-squares problem, optionally with the
//! TV Gram terms and a Tikhonov ridge added.
//!
//! Row `l` of the local matrix is `a_{>k,l}^T ⊗ e_{i_k(l)}^T ⊗ a_{<k,l}^T`, so
//! `B^T B` is block diagonal over the physical index of the core. Without
//! TV terms every block is solved on its own.

use std::time::Instant;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::init::{default_box_size, interp_fill, scatter};
use crate::regularizers::{adapt_lambda, TVOperator, TvEnvironments};
use crate::sampling::{remap_observations, ObservationSet};
use crate::tensor::{check_dims, offset0, unravel0, DenseTensor};
use crate::tt::{clamp_ranks, tt_svd, TensorTrain};

/// Relative size of the ridge always added to the normal equations.
pub const RIDGE: f64 = 1e-10;
/// Pivot ratio of the Cholesky factor above which an unregularized block is
/// re-solved by SVD least squares.
pub const PIVOT_RATIO_LIMIT: f64 = 1e8;

/// How the first tensor train is obtained.
#[derive(Debug, Clone)]
pub enum InitMode {
    /// Box-average then cubic upsampling along the 1-based `resized` modes.
    /// `h = None` picks [`default_box_size`] from the observed fraction.
    Interp { h: Option<usize>, resized: Vec<usize> },
    /// Missing entries set to zero.
    Zero,
    /// Start from this train (over the factored dims).
    Given(TensorTrain),
}

/// Everything a completion run needs.
#[derive(Debug, Clone)]
pub struct CompletionProblem {
    /// Factors of each original mode; cores follow this order.
    pub layout: Vec<Vec<usize>>,
    /// Observations on the original dims.
    pub observations: ObservationSet,
    /// Internal TT-ranks `R_2..R_d` of the factored chain.
    pub ranks: Vec<usize>,
    /// Original modes (1-based) carrying a TV term.
    pub tv_modes: Vec<usize>,
    /// Initial TV weight per entry of `tv_modes`.
    pub lambda: Vec<f64>,
    pub gamma: f64,
    pub max_sweeps: usize,
    /// Stop once the relative training residual changes by less than this
    /// fraction over one sweep.
    pub tolerance: f64,
    pub init: InitMode,
    pub adapt_lambda: bool,
    /// Record the penalized objective after every core update.
    pub track_objective: bool,
}

impl CompletionProblem {
    pub fn new(observations: ObservationSet, layout: Vec<Vec<usize>>, ranks: Vec<usize>) -> Self {
        CompletionProblem {
            layout,
            observations,
            ranks,
            tv_modes: Vec::new(),
            lambda: Vec::new(),
            gamma: 0.0,
            max_sweeps: 10,
            tolerance: 1e-6,
            init: InitMode::Zero,
            adapt_lambda: true,
            track_objective: false,
        }
    }

    /// One TV term per listed mode, all starting at weight `lambda`.
    pub fn with_tv(mut self, modes: &[usize], lambda: f64) -> Self {
        self.tv_modes = modes.to_vec();
        self.lambda = vec![lambda; modes.len()];
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_sweeps(mut self, max_sweeps: usize, tolerance: f64) -> Self {
        self.max_sweeps = max_sweeps;
        self.tolerance = tolerance;
        self
    }

    pub fn with_init(mut self, init: InitMode) -> Self {
        self.init = init;
        self
    }

    pub fn with_adaptation(mut self, on: bool) -> Self {
        self.adapt_lambda = on;
        self
    }

    pub fn with_objective_tracking(mut self, on: bool) -> Self {
        self.track_objective = on;
        self
    }

    /// Dims of the TT modes, the flattened layout.
    pub fn factored_dims(&self) -> Vec<usize> {
        self.layout.iter().flatten().copied().collect()
    }

    fn validate(&self, modes: usize) -> Result<()> {
        if self.observations.is_empty() {
            return Err(domain!("no observations"));
        }
        if self.layout.len() != modes {
            return Err(domain!(
                "layout covers {} modes, expected {modes}",
                self.layout.len()
            ));
        }
        for (k, f) in self.layout.iter().enumerate() {
            let n = self.observations.dims()[k];
            if f.is_empty() || f.contains(&0) || f.iter().product::<usize>() != n {
                return Err(domain!("factors {f:?} of mode {} do not multiply to {n}", k + 1));
            }
        }
        if self.tv_modes.len() != self.lambda.len() {
            return Err(domain!(
                "{} TV modes but {} weights",
                self.tv_modes.len(),
                self.lambda.len()
            ));
        }
        for &m in &self.tv_modes {
            if m == 0 || m > modes {
                return Err(domain!("TV mode {m} out of range 1..={modes}"));
            }
        }
        if self.lambda.iter().any(|l| !(*l >= 0.0)) || !(self.gamma >= 0.0) {
            return Err(domain!("regularization weights must be non-negative"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(domain!("tolerance must be non-negative"));
        }
        if let InitMode::Interp { h: Some(0), .. } = self.init {
            return Err(domain!("box size must be at least 1"));
        }
        Ok(())
    }
}

/// Which half of a sweep a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    Backward,
    Forward,
}

impl Half {
    pub fn as_str(self) -> &'static str {
        match self {
            Half::Backward => "backward",
            Half::Forward => "forward",
        }
    }
}

/// Residual after one half-sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSweepRecord {
    /// 1-based sweep number.
    pub sweep: usize,
    pub half: Half,
    /// `||S^T vec(A) - y||_2`.
    pub residual: f64,
    /// `residual / ||y||_2`.
    pub relative_residual: f64,
    /// TV weights in effect.
    pub lambda: Vec<f64>,
    /// Wall time of this half-sweep.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub records: Vec<HalfSweepRecord>,
    /// Absolute training residual after each core update.
    pub update_residuals: Vec<f64>,
    /// Penalized objective after each core update, when tracked.
    pub objective: Vec<f64>,
    /// TV weights used during each sweep.
    pub lambda_history: Vec<Vec<f64>>,
    pub sweep_seconds: Vec<f64>,
    /// Relative training residual of the initial train.
    pub initial_residual: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Core updates skipped because the local system was singular.
    pub skipped_updates: usize,
    /// Blocks re-solved by SVD least squares after a bad pivot ratio.
    pub lstsq_fallbacks: usize,
    /// Fewer observations than the smallest local system has unknowns.
    pub underdetermined: bool,
}

impl Diagnostics {
    /// Relative training residual at the end of the run.
    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(self.initial_residual, |r| r.relative_residual)
    }
}

/// Tensor train plus the cached interface vectors of every observation.
///
/// `left[k]` holds `a_{<k,l}` (length `R_k`) and `right[k]` holds `a_{>k,l}`
/// (length `R_{k+1}`) for 0-based core `k`, row-major over observations.
/// Left entries are valid for `k <= site`, right entries for `k >= site`.
#[derive(Debug, Clone)]
pub struct SweepState {
    pub tt: TensorTrain,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

fn left_step(prev: &[f64], core: &DenseTensor, obs: &ObservationSet, k: usize) -> Vec<f64> {
    let [r0, n, r1] = <[usize; 3]>::try_from(core.dims()).unwrap();
    let data = core.data();
    let mut out = vec![0.0; obs.len() * r1];
    out.par_chunks_mut(r1).enumerate().for_each(|(l, row)| {
        let i = obs.idx0(l)[k];
        let v = &prev[l * r0..(l + 1) * r0];
        for (b, o) in row.iter_mut().enumerate() {
            let base = r0 * (i + n * b);
            *o = v.iter().zip(&data[base..base + r0]).map(|(x, y)| x * y).sum();
        }
    });
    out
}

fn right_step(next: &[f64], core: &DenseTensor, obs: &ObservationSet, k: usize) -> Vec<f64> {
    let [r0, n, r1] = <[usize; 3]>::try_from(core.dims()).unwrap();
    let data = core.data();
    let mut out = vec![0.0; obs.len() * r0];
    out.par_chunks_mut(r0).enumerate().for_each(|(l, row)| {
        let i = obs.idx0(l)[k];
        let v = &next[l * r1..(l + 1) * r1];
        for (b, &w) in v.iter().enumerate() {
            let base = r0 * (i + n * b);
            for (o, &c) in row.iter_mut().zip(&data[base..base + r0]) {
                *o += c * w;
            }
        }
    });
    out
}

impl SweepState {
    /// Interfaces of `tt` against `obs`, computed from scratch. `tt` must
    /// carry a canonical site.
    pub fn new(tt: TensorTrain, obs: &ObservationSet) -> Result<Self> {
        if tt.dims() != obs.dims() {
            return Err(domain!(
                "train dims {:?} do not match observation dims {:?}",
                tt.dims(),
                obs.dims()
            ));
        }
        if tt.site0().is_none() {
            return Err(domain!("sweep state needs a canonical train"));
        }
        let d = tt.order();
        let n = obs.len();
        let mut left = vec![Vec::new(); d];
        let mut right = vec![Vec::new(); d];
        left[0] = vec![1.0; n];
        for k in 0..d - 1 {
            left[k + 1] = left_step(&left[k], tt.core0(k), obs, k);
        }
        right[d - 1] = vec![1.0; n];
        for k in (1..d).rev() {
            right[k - 1] = right_step(&right[k], tt.core0(k), obs, k);
        }
        Ok(SweepState { tt, left, right })
    }

    /// `a_{<k,l}` for 1-based core `k`.
    pub fn left_interface(&self, k: usize, l: usize) -> &[f64] {
        let r = self.tt.ranks()[k - 1];
        &self.left[k - 1][l * r..(l + 1) * r]
    }

    /// `a_{>k,l}` for 1-based core `k`.
    pub fn right_interface(&self, k: usize, l: usize) -> &[f64] {
        let r = self.tt.ranks()[k];
        &self.right[k - 1][l * r..(l + 1) * r]
    }

    /// Largest deviation of the cached interfaces that are valid at the
    /// current site from a fresh computation.
    pub fn interface_defect(&self, obs: &ObservationSet) -> Result<f64> {
        let site = self.tt.site0().ok_or_else(|| domain!("no canonical site"))?;
        let fresh = SweepState::new(self.tt.clone(), obs)?;
        let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for k in 0..=site {
            worst = worst.max(dev(&self.left[k], &fresh.left[k]));
        }
        for k in site..self.tt.order() {
            worst = worst.max(dev(&self.right[k], &fresh.right[k]));
        }
        Ok(worst)
    }

    /// Row `l` of the local matrix with the physical index dropped:
    /// `u[a + R_k b] = a_{<k,l}[a] * a_{>k,l}[b]`.
    fn local_row(&self, k0: usize, l: usize, ra: usize, rb: usize, out: &mut [f64]) {
        let lv = &self.left[k0][l * ra..(l + 1) * ra];
        let rv = &self.right[k0][l * rb..(l + 1) * rb];
        for (b, &w) in rv.iter().enumerate() {
            for (a, &v) in lv.iter().enumerate() {
                out[a + ra * b] = v * w;
            }
        }
    }

    /// Model values at the observations using the cached interfaces around
    /// core `k0`.
    fn predictions(&self, k0: usize, obs: &ObservationSet) -> Vec<f64> {
        let core = self.tt.core0(k0);
        let [ra, n, rb] = <[usize; 3]>::try_from(core.dims()).unwrap();
        let data = core.data();
        (0..obs.len())
            .into_par_iter()
            .map(|l| {
                let i = obs.idx0(l)[k0];
                let lv = &self.left[k0][l * ra..(l + 1) * ra];
                let rv = &self.right[k0][l * rb..(l + 1) * rb];
                rv.iter()
                    .enumerate()
                    .map(|(b, &w)| {
                        let base = ra * (i + n * b);
                        w * lv.iter().zip(&data[base..base + ra]).map(|(x, y)| x * y).sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }
}

/// Dense local matrix `B` (`N x R_k I_k R_{k+1}`) of 1-based core `k`,
/// columns ordered like `vec(core)`.
pub fn build_local_matrix(state: &SweepState, obs: &ObservationSet, k: usize) -> Result<DMatrix<f64>> {
    let d = state.tt.order();
    if k == 0 || k > d {
        return Err(domain!("core {k} out of range 1..={d}"));
    }
    if state.tt.site0() != Some(k - 1) {
        return Err(domain!("local matrix of core {k} needs the train canonical there"));
    }
    let k0 = k - 1;
    let [ra, n, rb] = <[usize; 3]>::try_from(state.tt.core0(k0).dims()).unwrap();
    let mut b = DMatrix::zeros(obs.len(), ra * n * rb);
    let mut u = vec![0.0; ra * rb];
    for l in 0..obs.len() {
        state.local_row(k0, l, ra, rb, &mut u);
        let i = obs.idx0(l)[k0];
        for bb in 0..rb {
            for a in 0..ra {
                b[(l, a + ra * (i + n * bb))] = u[a + ra * bb];
            }
        }
    }
    Ok(b)
}

/// Cholesky solve of `(m + ridge I) x = rhs`. Returns the solution and the
/// squared ratio of extreme pivots, or `None` when not positive definite.
/// With `refine`, one step of iterative refinement against `m` itself
/// removes the bias of the ridge.
fn cholesky_solve(m: DMatrix<f64>, rhs: &DMatrix<f64>, ridge: f64, refine: bool) -> Option<(DMatrix<f64>, f64)> {
    let mut shifted = m.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += ridge;
    }
    let chol = shifted.cholesky()?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let ratio = if lo > 0.0 { (hi / lo).powi(2) } else { f64::INFINITY };
    let mut x = chol.solve(rhs);
    if refine && ridge > 0.0 {
        let r = rhs - &m * &x;
        x += chol.solve(&r);
    }
    x.iter().all(|v| v.is_finite()).then_some((x, ratio))
}

/// Minimum-norm least squares `min ||a x - y||` via SVD.
fn lstsq(a: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (u, s, vt) = crate::linalg::svd(a)?;
    let cut = s.first().copied().unwrap_or(0.0) * f64::EPSILON * a.nrows().max(a.ncols()) as f64;
    let mut uty = u.transpose() * y;
    for (i, mut row) in uty.row_iter_mut().enumerate() {
        if s[i] > cut {
            row /= s[i];
        } else {
            row.fill(0.0);
        }
    }
    Ok(vt.transpose() * uty)
}

/// Solves `(B^T B + sum_p lambda_p G_p + gamma I + eps I) x = B^T y` with
/// `eps = 1e-10 trace(B^T B) / size`. When no penalty is active the ridge
/// bias is removed by one refinement step, and if the Cholesky pivots
/// spread by more than `1e8` the system is re-solved by SVD least squares.
pub fn solve_core(
    b: &DMatrix<f64>,
    y: &DVector<f64>,
    grams: &[DMatrix<f64>],
    lambda: &[f64],
    gamma: f64,
) -> Result<DVector<f64>> {
    let size = b.ncols();
    if b.nrows() != y.len() {
        return Err(domain!("B has {} rows, y has {}", b.nrows(), y.len()));
    }
    if grams.len() != lambda.len() || grams.iter().any(|g| g.shape() != (size, size)) {
        return Err(domain!("Gram terms do not match the local system"));
    }
    let mut m = b.transpose() * b;
    let eps = RIDGE * m.trace() / size as f64;
    for (g, &l) in grams.iter().zip(lambda) {
        if l != 0.0 {
            m += g * l;
        }
    }
    let rhs = DMatrix::from_column_slice(size, 1, (b.transpose() * y).as_slice());
    let plain = gamma == 0.0 && lambda.iter().all(|&l| l == 0.0);
    match cholesky_solve(m, &rhs, gamma + eps, plain) {
        Some((x, ratio)) if !(plain && ratio > PIVOT_RATIO_LIMIT) => Ok(x.column(0).into_owned()),
        Some(_) => Ok(lstsq(b, &DMatrix::from_column_slice(y.len(), 1, y.as_slice()))?
            .column(0)
            .into_owned()),
        None if plain => Ok(lstsq(b, &DMatrix::from_column_slice(y.len(), 1, y.as_slice()))?
            .column(0)
            .into_owned()),
        None => Err(Error::Numerical("local system is singular".into())),
    }
}

/// Observations regrouped for a train whose first core also indexes the
/// grouped trailing modes.
#[derive(Debug, Clone)]
struct Grouping {
    groups: usize,
    /// Physical size of the first core without the groups.
    first: usize,
}

/// The iterative solver. Holds the sweep state, the TV environments and the
/// diagnostics of one run.
pub struct Solver {
    obs: ObservationSet,
    /// `buckets[k][i]`: observations whose `k`-th index is `i`.
    buckets: Vec<Vec<Vec<usize>>>,
    y_norm: f64,
    grouping: Option<Grouping>,
    tv: Vec<TvEnvironments>,
    lambda: Vec<f64>,
    gamma: f64,
    adapt: bool,
    track_objective: bool,
    state: SweepState,
    diag: Diagnostics,
    residual: f64,
}

fn buckets_of(obs: &ObservationSet) -> Vec<Vec<Vec<usize>>> {
    obs.dims()
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let mut b = vec![Vec::new(); n];
            for l in 0..obs.len() {
                b[obs.idx0(l)[k]].push(l);
            }
            b
        })
        .collect()
}

impl Solver {
    fn build(
        obs: ObservationSet,
        mut tt: TensorTrain,
        grouping: Option<Grouping>,
        tv: Vec<TvEnvironments>,
        problem: &CompletionProblem,
    ) -> Result<Self> {
        let d = tt.order();
        if tt.site0() != Some(d - 1) {
            tt.orthogonalize(d)?;
        }
        let state = SweepState::new(tt, &obs)?;
        let y_norm = obs.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        let sizes = state.tt.cores().iter().map(DenseTensor::len);
        let smallest = match &grouping {
            Some(g) => sizes
                .enumerate()
                .map(|(k, s)| if k == 0 { s / g.groups } else { s })
                .min(),
            None => sizes.min(),
        }
        .unwrap_or(0);
        let spatial = obs.len() / grouping.as_ref().map_or(1, |g| g.groups);
        let mut solver = Solver {
            buckets: buckets_of(&obs),
            obs,
            y_norm,
            grouping,
            tv,
            lambda: problem.lambda.clone(),
            gamma: problem.gamma,
            adapt: problem.adapt_lambda,
            track_objective: problem.track_objective,
            state,
            diag: Diagnostics {
                underdetermined: spatial < smallest,
                ..Default::default()
            },
            residual: 0.0,
        };
        let d0 = solver.state.tt.order() - 1;
        solver.residual = solver.residual_at(d0);
        solver.diag.initial_residual = solver.relative(solver.residual);
        if solver.diag.underdetermined {
            warn!(
                "{spatial} observations for local systems of at least {smallest} unknowns; relying on regularization"
            );
        }
        Ok(solver)
    }

    /// Solver for `problem` over the factored layout.
    pub fn new(problem: &CompletionProblem) -> Result<Self> {
        let modes = problem.observations.order();
        problem.validate(modes)?;
        let dims = problem.factored_dims();
        let ranks = clamp_ranks(&dims, &problem.ranks)?;
        let obs = remap_observations(&problem.observations, &problem.layout)?;
        let tt = match &problem.init {
            InitMode::Given(tt) => {
                if tt.dims() != dims {
                    return Err(domain!("initial train dims {:?} differ from {:?}", tt.dims(), dims));
                }
                tt.clone()
            }
            _ => tt_svd(&initial_dense(problem)?.into_reshaped(dims.clone())?, &ranks)?,
        };
        let d = dims.len();
        let tv = problem
            .tv_modes
            .iter()
            .map(|&m| TvEnvironments::new(&TVOperator::for_mode(&problem.layout, m, 1.0)?, d))
            .collect::<Result<_>>()?;
        Solver::build(obs, tt, None, tv, problem)
    }

    /// Solver for the grouped formulation: the trailing `grouped_modes`
    /// original modes become extra columns of the first core. `layout`
    /// covers the leading (spatial) modes only.
    pub fn new_grouped(problem: &CompletionProblem, grouped_modes: usize) -> Result<Self> {
        let all = problem.observations.dims().to_vec();
        if grouped_modes == 0 || grouped_modes >= all.len() {
            return Err(domain!(
                "cannot group {grouped_modes} of {} modes",
                all.len()
            ));
        }
        let spatial_modes = all.len() - grouped_modes;
        problem.validate(spatial_modes)?;
        let groups: usize = all[spatial_modes..].iter().product();
        let spatial_dims = &all[..spatial_modes];
        let (positions, ymat) = group_observations(&problem.observations, spatial_modes)?;
        let factored = problem.factored_dims();
        let first = factored[0];
        let mut dims = factored.clone();
        dims[0] = first * groups;
        let ranks = clamp_ranks(&dims, &problem.ranks)?;

        // virtual observation l * G + g sits at (i_1 + I_1 g, i_2, ..)
        let spatial_total: usize = spatial_dims.iter().product();
        let mut offsets = Vec::with_capacity(positions.len() * groups);
        let mut values = Vec::with_capacity(positions.len() * groups);
        let mut idx = vec![0usize; factored.len()];
        for (l, &pos) in positions.iter().enumerate() {
            debug_assert!(pos < spatial_total);
            unravel0(pos, &factored, &mut idx);
            for g in 0..groups {
                let mut v = idx.clone();
                v[0] += first * g;
                offsets.push(offset0(&v, &dims));
                values.push(ymat[(l, g)]);
            }
        }
        let obs = ObservationSet::from_offsets(dims.clone(), &offsets, values)?;

        let tt = match &problem.init {
            InitMode::Given(tt) => {
                if tt.dims() != dims {
                    return Err(domain!("initial train dims {:?} differ from {:?}", tt.dims(), dims));
                }
                tt.clone()
            }
            _ => {
                let full = initial_dense(problem)?;
                tt_svd(&dense_to_grouped(&full, &factored, groups)?, &ranks)?
            }
        };
        let d = dims.len();
        let tv = problem
            .tv_modes
            .iter()
            .map(|&m| TvEnvironments::new_grouped(&TVOperator::for_mode(&problem.layout, m, 1.0)?, d, groups, first))
            .collect::<Result<_>>()?;
        Solver::build(obs, tt, Some(Grouping { groups, first }), tv, problem)
    }

    pub fn state(&self) -> &SweepState {
        &self.state
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diag
    }

    /// Observations as seen by the train (factored, possibly grouped).
    pub fn observations(&self) -> &ObservationSet {
        &self.obs
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Current relative training residual.
    pub fn relative_residual(&self) -> f64 {
        self.relative(self.residual)
    }

    pub fn into_parts(self) -> (TensorTrain, Diagnostics) {
        (self.state.tt, self.diag)
    }

    fn relative(&self, r: f64) -> f64 {
        if self.y_norm > 0.0 {
            r / self.y_norm
        } else {
            r
        }
    }

    fn residual_at(&self, k0: usize) -> f64 {
        let pred = self.state.predictions(k0, &self.obs);
        pred.iter()
            .zip(self.obs.values())
            .map(|(p, y)| (p - y).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Penalized objective of the current train (canonical at `k0`).
    fn objective_at(&self, k0: usize) -> f64 {
        let mut obj = self.residual.powi(2);
        for (env, &l) in self.tv.iter().zip(&self.lambda) {
            obj += l * env.value(&self.state.tt);
        }
        obj + self.gamma * self.state.tt.core0(k0).frobenius_norm().powi(2)
    }

    /// Updates core `k0`, which must be the canonical site.
    fn update_core(&mut self, k0: usize) -> Result<()> {
        let tt = &self.state.tt;
        let [ra, n, rb] = <[usize; 3]>::try_from(tt.core0(k0).dims()).unwrap();
        let (phys, ncols) = match &self.grouping {
            Some(g) if k0 == 0 => (g.first, g.groups),
            _ => (n, 1),
        };
        let rr = ra * rb;
        let size = rr * phys;
        let buckets = &self.buckets[k0];
        let values = self.obs.values();
        let state = &self.state;
        let core = state.tt.core0(k0);

        // per physical index: B_i^T B_i and B_i^T Y_i
        let blocks: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..phys)
            .into_par_iter()
            .map(|i| {
                let mut m = DMatrix::zeros(rr, rr);
                let mut rhs = DMatrix::zeros(rr, ncols);
                let mut u = vec![0.0; rr];
                for (row, &l) in buckets[i].iter().enumerate() {
                    state.local_row(k0, l, ra, rb, &mut u);
                    let uv = DVector::from_column_slice(&u);
                    m.syger(1.0, &uv, &uv, 1.0);
                    for c in 0..ncols {
                        let lc = buckets[i + phys * c][row];
                        rhs.column_mut(c).axpy(values[lc], &uv, 1.0);
                    }
                }
                m.fill_upper_triangle_with_lower_triangle();
                (m, rhs)
            })
            .collect();
        let trace: f64 = blocks.iter().map(|(m, _)| m.trace()).sum();
        let eps = RIDGE * trace / size as f64;
        let active: Vec<usize> = (0..self.tv.len()).filter(|&p| self.lambda[p] > 0.0).collect();
        let plain = self.gamma == 0.0 && active.is_empty();

        // solution as (a + ra b) + rr i rows, one column per group
        let solution: Option<DMatrix<f64>> = if active.is_empty() {
            let solved: Vec<Option<(DMatrix<f64>, bool)>> = blocks
                .into_par_iter()
                .enumerate()
                .map(|(i, (m, rhs))| match cholesky_solve(m, &rhs, self.gamma + eps, plain) {
                    Some((x, ratio)) if !(plain && ratio > PIVOT_RATIO_LIMIT) => Some((x, false)),
                    res if plain => {
                        let mut rows = DMatrix::zeros(buckets[i].len(), rr);
                        let mut ys = DMatrix::zeros(buckets[i].len(), ncols);
                        let mut u = vec![0.0; rr];
                        for (row, &l) in buckets[i].iter().enumerate() {
                            state.local_row(k0, l, ra, rb, &mut u);
                            rows.row_mut(row).copy_from_slice(&u);
                            for c in 0..ncols {
                                ys[(row, c)] = values[buckets[i + phys * c][row]];
                            }
                        }
                        // correction to the current core, so directions
                        // below the SVD cutoff keep their values
                        let old = DMatrix::from_fn(rr, ncols, |r, c| {
                            core.data()[r % ra + ra * (i + phys * c + n * (r / ra))]
                        });
                        let resid = &ys - &rows * &old;
                        match lstsq(&rows, &resid) {
                            Ok(dx) => Some((old + dx, true)),
                            Err(_) => res.map(|(x, _)| (x, false)),
                        }
                    }
                    _ => None,
                })
                .collect();
            if solved.iter().any(Option::is_none) {
                None
            } else {
                let mut x = DMatrix::zeros(size, ncols);
                for (i, s) in solved.into_iter().enumerate() {
                    let (xi, fallback) = s.unwrap();
                    self.diag.lstsq_fallbacks += fallback as usize;
                    x.rows_mut(rr * i, rr).copy_from(&xi);
                }
                Some(x)
            }
        } else {
            // natural vec(core) order a + ra (i + phys b)
            let nat = |a: usize, i: usize, b: usize| a + ra * (i + phys * b);
            let mut m = DMatrix::zeros(size, size);
            let mut rhs = DMatrix::zeros(size, ncols);
            for (i, (bm, br)) in blocks.iter().enumerate() {
                for b2 in 0..rb {
                    for a2 in 0..ra {
                        let col = nat(a2, i, b2);
                        for b in 0..rb {
                            for a in 0..ra {
                                m[(nat(a, i, b), col)] = bm[(a + ra * b, a2 + ra * b2)];
                            }
                        }
                        rhs.row_mut(col).copy_from(&br.row(a2 + ra * b2));
                    }
                }
            }
            for &p in &active {
                let g = self.tv[p].gram(&self.state.tt, k0)?;
                m += g * self.lambda[p];
            }
            cholesky_solve(m, &rhs, self.gamma + eps, false).map(|(x, _)| {
                let mut out = DMatrix::zeros(size, ncols);
                for b in 0..rb {
                    for i in 0..phys {
                        for a in 0..ra {
                            out.row_mut(a + ra * b + rr * i).copy_from(&x.row(nat(a, i, b)));
                        }
                    }
                }
                out
            })
        };

        let Some(x) = solution else {
            warn!("singular local system at core {}; keeping the previous core", k0 + 1);
            self.diag.skipped_updates += 1;
            return Ok(());
        };
        let mut data = vec![0.0; ra * n * rb];
        for c in 0..ncols {
            for i in 0..phys {
                for b in 0..rb {
                    for a in 0..ra {
                        data[a + ra * ((i + phys * c) + n * b)] = x[(a + ra * b + rr * i, c)];
                    }
                }
            }
        }
        self.state.tt.replace_site_core(k0, &data);
        for env in &mut self.tv {
            env.invalidate(k0);
        }
        Ok(())
    }

    fn after_update(&mut self, k0: usize) {
        self.residual = self.residual_at(k0);
        self.diag.update_residuals.push(self.residual);
        if self.track_objective {
            let obj = self.objective_at(k0);
            self.diag.objective.push(obj);
        }
    }

    fn shift_left(&mut self, k0: usize) -> Result<()> {
        self.state.tt.shift_left()?;
        for env in &mut self.tv {
            env.invalidate(k0);
            env.invalidate(k0 - 1);
        }
        self.state.right[k0 - 1] = right_step(&self.state.right[k0], self.state.tt.core0(k0), &self.obs, k0);
        Ok(())
    }

    fn shift_right(&mut self, k0: usize) -> Result<()> {
        self.state.tt.shift_right()?;
        for env in &mut self.tv {
            env.invalidate(k0);
            env.invalidate(k0 + 1);
        }
        self.state.left[k0 + 1] = left_step(&self.state.left[k0], self.state.tt.core0(k0), &self.obs, k0);
        Ok(())
    }

    fn record(&mut self, half: Half, start: Instant) {
        let rec = HalfSweepRecord {
            sweep: self.diag.sweeps + 1,
            half,
            residual: self.residual,
            relative_residual: self.relative(self.residual),
            lambda: self.lambda.clone(),
            seconds: start.elapsed().as_secs_f64(),
        };
        self.diag.records.push(rec);
    }

    /// One backward and one forward half-sweep. The train must be canonical
    /// at its last core and ends there again.
    pub fn sweep(&mut self) -> Result<()> {
        let d = self.state.tt.order();
        if self.state.tt.site0() != Some(d - 1) {
            return Err(domain!("a sweep starts from the last core"));
        }
        let started = Instant::now();
        self.diag.lambda_history.push(self.lambda.clone());
        let t = Instant::now();
        for k0 in (1..d).rev() {
            self.update_core(k0)?;
            self.after_update(k0);
            self.shift_left(k0)?;
        }
        if d == 1 {
            self.update_core(0)?;
            self.after_update(0);
        }
        self.record(Half::Backward, t);
        let t = Instant::now();
        for k0 in 0..d - 1 {
            self.update_core(k0)?;
            self.after_update(k0);
            self.shift_right(k0)?;
        }
        self.record(Half::Forward, t);
        self.diag.sweep_seconds.push(started.elapsed().as_secs_f64());
        self.diag.sweeps += 1;
        if self.adapt && !self.lambda.is_empty() {
            let rel = self.relative(self.residual);
            self.lambda = adapt_lambda(&self.lambda, rel);
        }
        Ok(())
    }

    /// Sweeps until `max_sweeps` or until the relative residual changes by
    /// less than `tolerance` (relative) over one sweep.
    pub fn run(&mut self, max_sweeps: usize, tolerance: f64) -> Result<()> {
        let mut prev = self.relative(self.residual);
        for _ in 0..max_sweeps {
            self.sweep()?;
            let cur = self.relative(self.residual);
            if cur == 0.0 || (prev - cur).abs() <= tolerance * prev {
                self.diag.converged = true;
                break;
            }
            prev = cur;
        }
        Ok(())
    }
}

/// Dense starting tensor on the original dims.
fn initial_dense(problem: &CompletionProblem) -> Result<DenseTensor> {
    let obs = &problem.observations;
    match &problem.init {
        InitMode::Zero => Ok(scatter(obs, 0.0)),
        InitMode::Interp { h, resized } => {
            let total: usize = obs.dims().iter().product();
            let h = h.unwrap_or_else(|| default_box_size(obs.len() as f64 / total as f64));
            interp_fill(obs, resized, h)
        }
        InitMode::Given(_) => Err(domain!("a given train has no dense form")),
    }
}

/// Splits observations over (spatial, grouped) modes into the distinct
/// spatial positions (0-based offsets, increasing) and the `positions x G`
/// value matrix. Every position must be observed in every group.
pub fn group_observations(obs: &ObservationSet, spatial_modes: usize) -> Result<(Vec<usize>, DMatrix<f64>)> {
    let dims = obs.dims();
    let spatial_total: usize = dims[..spatial_modes].iter().product();
    let groups: usize = dims[spatial_modes..].iter().product();
    let mut table: Vec<Option<Vec<Option<f64>>>> = vec![None; spatial_total];
    for l in 0..obs.len() {
        let off = obs.offset(l);
        let (pos, g) = (off % spatial_total, off / spatial_total);
        table[pos].get_or_insert_with(|| vec![None; groups])[g] = Some(obs.values()[l]);
    }
    let positions: Vec<usize> = (0..spatial_total).filter(|&p| table[p].is_some()).collect();
    let mut y = DMatrix::zeros(positions.len(), groups);
    for (row, &p) in positions.iter().enumerate() {
        for (g, v) in table[p].as_ref().unwrap().iter().enumerate() {
            y[(row, g)] = v.ok_or_else(|| {
                domain!("spatial position {} is not observed in every group", p + 1)
            })?;
        }
    }
    Ok((positions, y))
}

/// Rearranges a dense tensor on (spatial.., grouped..) dims into the
/// grouped train layout `(f_1 G, f_2, ..)`.
pub fn dense_to_grouped(t: &DenseTensor, factored: &[usize], groups: usize) -> Result<DenseTensor> {
    let spatial: usize = factored.iter().product();
    if spatial * groups != t.len() {
        return Err(domain!("tensor of {} entries does not split as {spatial} x {groups}", t.len()));
    }
    // (f1, f2.., G) -> (f1, G, f2..)
    let mut dims = factored.to_vec();
    dims.push(groups);
    let m = factored.len();
    let mut perm: Vec<usize> = vec![0, m];
    perm.extend(1..m);
    let p = t.reshape(dims)?.permute(&perm)?;
    let mut out = factored.to_vec();
    out[0] *= groups;
    p.into_reshaped(out)
}

/// Dense tensor on `original` dims (spatial then grouped) from a grouped
/// train over `(f_1 G, f_2, ..)`.
pub fn grouped_to_dense(tt: &TensorTrain, factored: &[usize], original: &[usize]) -> Result<DenseTensor> {
    let total = check_dims(original)?;
    let spatial: usize = factored.iter().product();
    if total % spatial != 0 {
        return Err(domain!("spatial size {spatial} does not divide {total}"));
    }
    let groups = total / spatial;
    let mut dims = vec![factored[0], groups];
    dims.extend_from_slice(&factored[1..]);
    let m = factored.len();
    // (f1, G, f2..) -> (f1, f2.., G)
    let mut perm = vec![0];
    perm.extend(2..=m);
    perm.push(1);
    tt.contract_full()
        .into_reshaped(dims)?
        .permute(&perm)?
        .into_reshaped(original.to_vec())
}

/// Runs the plain or regularized completion of `problem`. The returned
/// train lives on the factored dims; reshape its contraction to the
/// original dims for the completed tensor.
pub fn complete(problem: &CompletionProblem) -> Result<(TensorTrain, Diagnostics)> {
    let mut solver = Solver::new(problem)?;
    solver.run(problem.max_sweeps, problem.tolerance)?;
    Ok(solver.into_parts())
}

/// Completion with the trailing `grouped_modes` modes folded into the first
/// core (see [`Solver::new_grouped`]).
pub fn complete_grouped(problem: &CompletionProblem, grouped_modes: usize) -> Result<(TensorTrain, Diagnostics)> {
    let mut solver = Solver::new_grouped(problem, grouped_modes)?;
    solver.run(problem.max_sweeps, problem.tolerance)?;
    Ok(solver.into_parts())
}
