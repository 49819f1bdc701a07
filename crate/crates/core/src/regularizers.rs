//! Quadratic total-variation penalties in TT form.
//!
//! The penalty for mode `p` is `||A x_p D_p||_F^2` with `D_p` the forward
//! difference matrix. Once a mode is split over several cores, `D_p` is
//! stored as a TT-matrix over those cores and every other core carries the
//! identity. The core-local Gram matrix `W_p^T W_p` is contracted from left
//! and right environments without forming `W_p`.

use std::borrow::Cow;

use nalgebra::DMatrix;

use crate::error::{domain, Result};
use crate::tensor::DenseTensor;
use crate::tt::{op_core_product, TTMatrix, TensorTrain};

/// Truncation tolerance for the TT-matrix form of `D_p`.
pub const TTM_TOL: f64 = 1e-12;

/// Square first-difference matrix: ones on the diagonal, `-1` on the
/// superdiagonal, last row zero.
pub fn difference_matrix(n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        d[(i, i)] = 1.0;
        d[(i, i + 1)] = -1.0;
    }
    d
}

/// Total-variation operator for one mode of the original tensor.
#[derive(Debug, Clone)]
pub struct TVOperator {
    mode: usize,
    first_core: usize,
    dense: DMatrix<f64>,
    ttm: TTMatrix,
    pub weight: f64,
}

/// Difference operator for a mode of size `mode_dim` split into `factors`.
/// Placed on mode 1 starting at core 1 with weight 1; see
/// [`TVOperator::for_mode`] for placement inside a larger layout.
pub fn build_tv(mode_dim: usize, factors: &[usize]) -> Result<TVOperator> {
    if mode_dim == 0 {
        return Err(domain!("mode dimension must be positive"));
    }
    if factors.is_empty() || factors.iter().product::<usize>() != mode_dim {
        return Err(domain!("factors {factors:?} do not multiply to {mode_dim}"));
    }
    let dense = difference_matrix(mode_dim);
    let ttm = TTMatrix::from_matrix(&dense, factors, factors, TTM_TOL)?;
    Ok(TVOperator {
        mode: 1,
        first_core: 1,
        dense,
        ttm,
        weight: 1.0,
    })
}

impl TVOperator {
    /// Operator for original mode `mode` (1-based) of a tensor whose modes
    /// are split per `layout`.
    pub fn for_mode(layout: &[Vec<usize>], mode: usize, weight: f64) -> Result<TVOperator> {
        if mode == 0 || mode > layout.len() {
            return Err(domain!("TV mode {mode} out of range 1..={}", layout.len()));
        }
        if !(weight >= 0.0) {
            return Err(domain!("TV weight must be non-negative, got {weight}"));
        }
        let factors = &layout[mode - 1];
        let mut op = build_tv(factors.iter().product(), factors)?;
        op.mode = mode;
        op.first_core = 1 + layout[..mode - 1].iter().map(Vec::len).sum::<usize>();
        op.weight = weight;
        Ok(op)
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    /// 1-based index of the first core this operator acts on.
    pub fn first_core(&self) -> usize {
        self.first_core
    }

    pub fn num_cores(&self) -> usize {
        self.ttm.order()
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    pub fn ttm(&self) -> &TTMatrix {
        &self.ttm
    }

    /// Internal TT-matrix ranks.
    pub fn ranks(&self) -> Vec<usize> {
        let r = self.ttm.ranks();
        r[1..r.len() - 1].to_vec()
    }

    /// Per-core operator chain of a `d`-core train; `None` is the identity.
    pub(crate) fn chain(&self, d: usize) -> Result<Vec<Option<DenseTensor>>> {
        let start = self.first_core - 1;
        let end = start + self.num_cores();
        if end > d {
            return Err(domain!(
                "TV operator on cores {}..={} does not fit {d} cores",
                self.first_core,
                end
            ));
        }
        Ok((0..d)
            .map(|k| (start..end).contains(&k).then(|| self.ttm.cores()[k - start].clone()))
            .collect())
    }
}

/// Block-diagonal extension of a TT-matrix core `(m0, J, I, m1)` over `g`
/// groups appended to the physical index: `(m0, J*g, I*g, m1)`.
pub(crate) fn extend_over_groups(w: &DenseTensor, g: usize) -> DenseTensor {
    let [m0, jn, in_, m1] = <[usize; 4]>::try_from(w.dims()).unwrap();
    let (je, ie) = (jn * g, in_ * g);
    let mut out = vec![0.0; m0 * je * ie * m1];
    for n in 0..m1 {
        for i in 0..in_ {
            for j in 0..jn {
                for m in 0..m0 {
                    let v = w.data()[m + m0 * (j + jn * (i + in_ * n))];
                    for q in 0..g {
                        out[m + m0 * ((j + jn * q) + je * ((i + in_ * q) + ie * n))] = v;
                    }
                }
            }
        }
    }
    DenseTensor::new(vec![m0, je, ie, m1], out).expect("extended dims")
}

/// Contracted environment of the doubled network on one side of a core.
/// Indexed by `(a, m)` pairs as `a + R * m`, `R` the TT bond and `m` the
/// operator bond.
#[derive(Debug, Clone)]
pub(crate) enum Env {
    Identity(usize),
    Dense(DMatrix<f64>),
}

impl Env {
    fn dim(&self) -> usize {
        match self {
            Env::Identity(n) => *n,
            Env::Dense(m) => m.nrows(),
        }
    }

    fn to_dense(&self) -> Cow<'_, DMatrix<f64>> {
        match self {
            Env::Identity(n) => Cow::Owned(DMatrix::identity(*n, *n)),
            Env::Dense(m) => Cow::Borrowed(m),
        }
    }
}

fn product<'a>(op: Option<&DenseTensor>, a: &'a DenseTensor) -> Cow<'a, DenseTensor> {
    match op {
        Some(w) => Cow::Owned(op_core_product(w, a)),
        None => Cow::Borrowed(a),
    }
}

fn slice(t: &DenseTensor, j: usize) -> DMatrix<f64> {
    let [r0, n, r1] = <[usize; 3]>::try_from(t.dims()).unwrap();
    DMatrix::from_fn(r0, r1, |a, b| t.data()[a + r0 * (j + n * b)])
}

/// `sum_j T_j^T L T_j`.
fn extend_left(env: &Env, t: &DenseTensor) -> DMatrix<f64> {
    let [r0, n, r1] = <[usize; 3]>::try_from(t.dims()).unwrap();
    debug_assert_eq!(env.dim(), r0);
    let mut out = DMatrix::zeros(r1, r1);
    for j in 0..n {
        let tj = slice(t, j);
        match env {
            Env::Identity(_) => out += tj.transpose() * &tj,
            Env::Dense(l) => out += tj.transpose() * (l * &tj),
        }
    }
    out
}

/// `sum_j T_j R T_j^T`.
fn extend_right(env: &Env, t: &DenseTensor) -> DMatrix<f64> {
    let [r0, n, r1] = <[usize; 3]>::try_from(t.dims()).unwrap();
    debug_assert_eq!(env.dim(), r1);
    let mut out = DMatrix::zeros(r0, r0);
    for j in 0..n {
        let tj = slice(t, j);
        match env {
            Env::Identity(_) => out += &tj * tj.transpose(),
            Env::Dense(r) => out += &tj * (r * tj.transpose()),
        }
    }
    out
}

/// Gram matrix over `vec(core)` (index `a + ra * (i + phys * b)`) from the
/// two environments and the operator core at the site.
fn assemble(
    left: &Env,
    ra: usize,
    op: Option<&DenseTensor>,
    phys: usize,
    right: &Env,
    rb: usize,
) -> Result<DMatrix<f64>> {
    let (m0, m1) = (left.dim() / ra, right.dim() / rb);
    let identity_op;
    let w = match op {
        Some(w) => w,
        None => {
            let mut data = vec![0.0; phys * phys];
            for i in 0..phys {
                data[i + phys * i] = 1.0;
            }
            identity_op = DenseTensor::new(vec![1, phys, phys, 1], data)?;
            &identity_op
        }
    };
    let [w0, jn, in_, w1] = <[usize; 4]>::try_from(w.dims()).unwrap();
    if w0 != m0 || w1 != m1 || in_ != phys {
        return Err(domain!(
            "operator core {:?} does not match environments ({m0}, {m1}) and dim {phys}",
            w.dims()
        ));
    }
    let l = left.to_dense();
    let r = right.to_dense();
    let wd = w.data();
    let at = |m: usize, j: usize, i: usize, n: usize| wd[m + m0 * (j + jn * (i + in_ * n))];
    let hs = ra * phys;
    let size = hs * rb;
    let mut g = DMatrix::<f64>::zeros(size, size);
    let mut k = DMatrix::<f64>::zeros(phys, phys);
    let mut h = DMatrix::<f64>::zeros(hs, hs);
    for n in 0..m1 {
        for n2 in 0..m1 {
            let rblock = r.view((rb * n, rb * n2), (rb, rb));
            if rblock.iter().all(|&x| x == 0.0) {
                continue;
            }
            h.fill(0.0);
            for m in 0..m0 {
                for m2 in 0..m0 {
                    let lblock = l.view((ra * m, ra * m2), (ra, ra));
                    if lblock.iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    for i2 in 0..phys {
                        for i in 0..phys {
                            k[(i, i2)] = (0..jn).map(|j| at(m, j, i, n) * at(m2, j, i2, n2)).sum();
                        }
                    }
                    for i2 in 0..phys {
                        for i in 0..phys {
                            let kv = k[(i, i2)];
                            if kv == 0.0 {
                                continue;
                            }
                            for a2 in 0..ra {
                                for a in 0..ra {
                                    h[(a + ra * i, a2 + ra * i2)] += kv * lblock[(a, a2)];
                                }
                            }
                        }
                    }
                }
            }
            for b2 in 0..rb {
                for b in 0..rb {
                    let rv = rblock[(b, b2)];
                    if rv == 0.0 {
                        continue;
                    }
                    let mut target = g.view_mut((hs * b, hs * b2), (hs, hs));
                    target += &h * rv;
                }
            }
        }
    }
    Ok(g)
}

/// Cached environments of one TV term along a sweep.
///
/// `left[j]` contracts cores `1..j` and `right[j]` cores `j+2..d` (0-based
/// `j`). Entries are cleared by [`TvEnvironments::invalidate`] whenever a
/// core they depend on changes.
#[derive(Debug, Clone)]
pub struct TvEnvironments {
    chain: Vec<Option<DenseTensor>>,
    /// Grouped mode: the unextended operator core of core 1 and its
    /// physical size.
    local_first: Option<(Option<DenseTensor>, usize)>,
    first_op: Option<usize>,
    last_op: Option<usize>,
    left: Vec<Option<Env>>,
    right: Vec<Option<Env>>,
}

impl TvEnvironments {
    pub fn new(op: &TVOperator, d: usize) -> Result<Self> {
        Ok(Self::from_chain(op.chain(d)?, None))
    }

    /// Environments for a train whose first core carries `groups` extra
    /// columns appended to its physical index (`i_1 + first * g`).
    pub(crate) fn new_grouped(op: &TVOperator, d: usize, groups: usize, first: usize) -> Result<Self> {
        let mut chain = op.chain(d)?;
        let base = chain[0].clone();
        if let Some(w) = chain[0].as_mut() {
            *w = extend_over_groups(w, groups);
        }
        Ok(Self::from_chain(chain, Some((base, first))))
    }

    fn from_chain(chain: Vec<Option<DenseTensor>>, local_first: Option<(Option<DenseTensor>, usize)>) -> Self {
        let d = chain.len();
        let first_op = chain.iter().position(Option::is_some);
        let last_op = chain.iter().rposition(Option::is_some);
        TvEnvironments {
            chain,
            local_first,
            first_op,
            last_op,
            left: vec![None; d],
            right: vec![None; d],
        }
    }

    /// Marks core `k0` (0-based) as changed.
    pub fn invalidate(&mut self, k0: usize) {
        for e in &mut self.left[k0 + 1..] {
            *e = None;
        }
        for e in &mut self.right[..k0] {
            *e = None;
        }
    }

    fn left_env(&mut self, tt: &TensorTrain, j: usize) -> Env {
        if self.first_op.is_none_or(|f| j <= f) {
            return Env::Identity(tt.ranks()[j]);
        }
        if let Some(e) = &self.left[j] {
            return e.clone();
        }
        let prev = self.left_env(tt, j - 1);
        let t = product(self.chain[j - 1].as_ref(), tt.core0(j - 1));
        let e = Env::Dense(extend_left(&prev, &t));
        self.left[j] = Some(e.clone());
        e
    }

    fn right_env(&mut self, tt: &TensorTrain, j: usize) -> Env {
        if self.last_op.is_none_or(|l| j >= l) {
            return Env::Identity(tt.ranks()[j + 1]);
        }
        if let Some(e) = &self.right[j] {
            return e.clone();
        }
        let next = self.right_env(tt, j + 1);
        let t = product(self.chain[j + 1].as_ref(), tt.core0(j + 1));
        let e = Env::Dense(extend_right(&next, &t));
        self.right[j] = Some(e.clone());
        e
    }

    /// `W_p^T W_p` restricted to core `k0` (0-based) of a train canonical
    /// at `k0`. In grouped mode the first core's Gram is the per-group block.
    pub fn gram(&mut self, tt: &TensorTrain, k0: usize) -> Result<DMatrix<f64>> {
        if tt.order() != self.chain.len() {
            return Err(domain!(
                "environments built for {} cores, train has {}",
                self.chain.len(),
                tt.order()
            ));
        }
        if tt.site0() != Some(k0) {
            return Err(domain!(
                "Gram term at core {} needs the train canonical there (site {:?})",
                k0 + 1,
                tt.canonical_site()
            ));
        }
        let ranks = tt.ranks();
        let left = self.left_env(tt, k0);
        let right = self.right_env(tt, k0);
        let phys = tt.dims()[k0];
        match (&self.local_first, k0) {
            (Some((base, first)), 0) => assemble(&left, ranks[0], base.as_ref(), *first, &right, ranks[1]),
            _ => assemble(&left, ranks[k0], self.chain[k0].as_ref(), phys, &right, ranks[k0 + 1]),
        }
    }

    /// `||W vec(A)||^2` by a full left-to-right contraction.
    pub(crate) fn value(&self, tt: &TensorTrain) -> f64 {
        let mut env = Env::Identity(1);
        for (k, op) in self.chain.iter().enumerate() {
            let t = product(op.as_ref(), tt.core0(k));
            env = Env::Dense(extend_left(&env, &t));
        }
        env.to_dense()[(0, 0)]
    }
}

/// Core-local `W_p^T W_p` at core `k` (1-based), computed from scratch.
pub fn gram_term(tt: &TensorTrain, op: &TVOperator, k: usize) -> Result<DMatrix<f64>> {
    let d = tt.order();
    if k == 0 || k > d {
        return Err(domain!("core {k} out of range 1..={d}"));
    }
    TvEnvironments::new(op, d)?.gram(tt, k - 1)
}

/// `||A x_p D_p||_F^2` evaluated in TT form.
pub fn tv_value(tt: &TensorTrain, op: &TVOperator) -> Result<f64> {
    Ok(TvEnvironments::new(op, tt.order())?.value(tt))
}

/// Scales every weight by the current relative residual on the observed
/// entries.
pub fn adapt_lambda(lambda: &[f64], relative_observed_error: f64) -> Vec<f64> {
    lambda.iter().map(|l| l * relative_observed_error).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::mode_product;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense `J = W_p * dA/dvec(core_k)`, one column per core entry.
    fn dense_jacobian(tt: &TensorTrain, dims: &[usize], mode: usize, k: usize) -> DMatrix<f64> {
        let core = tt.core(k).clone();
        let size = core.len();
        let total: usize = dims.iter().product();
        let d = difference_matrix(dims[mode - 1]);
        let mut j = DMatrix::zeros(total, size);
        for c in 0..size {
            let mut unit = DenseTensor::zeros(core.dims().to_vec()).unwrap();
            unit.data_mut()[c] = 1.0;
            let mut probe = tt.clone();
            probe.set_core(k, unit).unwrap();
            let full = probe.contract_full().into_reshaped(dims.to_vec()).unwrap();
            let wa = mode_product(&full, &d, mode).unwrap();
            j.set_column(c, &nalgebra::DVector::from_column_slice(wa.data()));
        }
        j
    }

    fn random_tt(dims: &[usize], ranks: &[usize], seed: u64) -> TensorTrain {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TensorTrain::random(dims, ranks, &mut rng).unwrap()
    }

    #[test]
    fn difference_matrix_of_three() {
        let d = difference_matrix(3);
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0]);
        assert_eq!(d, expect);
        let op = build_tv(3, &[3]).unwrap();
        assert_eq!(op.dense(), &expect);
        assert!((op.ttm().to_dense() - expect).amax() < 1e-12);
    }

    #[test]
    fn difference_of_constant_vanishes() {
        let op = build_tv(12, &[3, 4]).unwrap();
        let ones = nalgebra::DVector::from_element(12, 2.5);
        assert!((op.ttm().to_dense() * ones).amax() < 1e-12);
    }

    #[test]
    fn ttm_ranks_are_three() {
        for (n, f) in [
            (16, vec![2, 2, 2, 2]),
            (81, vec![3, 3, 3, 3]),
            (1024, vec![4, 4, 4, 4, 4]),
            (324, vec![9, 6, 6]),
        ] {
            let op = build_tv(n, &f).unwrap();
            assert!(op.ranks().iter().all(|&r| r == 3), "{n}: {:?}", op.ranks());
            let v = nalgebra::DVector::from_fn(n, |i, _| ((i * 7) % 11) as f64);
            let err = (op.ttm().to_dense() * &v - op.dense() * &v).norm() / (op.dense() * &v).norm();
            assert!(err < 1e-10, "{n}: {err}");
        }
    }

    #[test]
    fn gram_matches_dense_oracle() {
        let cases: Vec<(Vec<usize>, Vec<Vec<usize>>, Vec<usize>)> = vec![
            (vec![4, 5, 3], vec![vec![4], vec![5], vec![3]], vec![3, 3]),
            (vec![8, 6, 4], vec![vec![2, 4], vec![3, 2], vec![4]], vec![2, 3, 3, 2]),
            (vec![2, 2, 2], vec![vec![2], vec![2], vec![2]], vec![2, 2]),
        ];
        for (seed, (dims, layout, ranks)) in cases.into_iter().enumerate() {
            let factored: Vec<usize> = layout.iter().flatten().copied().collect();
            let base = random_tt(&factored, &ranks, seed as u64);
            for mode in 1..=2 {
                let op = TVOperator::for_mode(&layout, mode, 1.0).unwrap();
                for k in 1..=factored.len() {
                    let mut tt = base.clone();
                    tt.orthogonalize(k).unwrap();
                    let g = gram_term(&tt, &op, k).unwrap();
                    let j = dense_jacobian(&tt, &dims, mode, k);
                    let oracle = j.transpose() * &j;
                    let err = (&g - &oracle).amax() / oracle.amax().max(1.0);
                    assert!(err < 1e-10, "dims {dims:?} mode {mode} core {k}: {err}");
                    let sym = (&g - g.transpose()).amax();
                    assert!(sym < 1e-12);
                    let min_eig = g.clone().symmetric_eigenvalues().min();
                    assert!(min_eig >= -1e-10 * g.amax().max(1.0));
                }
            }
        }
    }

    #[test]
    fn identity_operator_gives_identity_gram() {
        let mut tt = random_tt(&[3, 4, 3], &[3, 3], 9);
        tt.orthogonalize(2).unwrap();
        let mut env = TvEnvironments::from_chain(vec![None, None, None], None);
        let g = env.gram(&tt, 1).unwrap();
        assert!((g.clone() - DMatrix::identity(g.nrows(), g.nrows())).amax() < 1e-12);
    }

    #[test]
    fn gram_requires_canonical_site() {
        let mut tt = random_tt(&[3, 4, 3], &[2, 2], 3);
        tt.orthogonalize(1).unwrap();
        let op = TVOperator::for_mode(&[vec![3], vec![4], vec![3]], 2, 1.0).unwrap();
        assert!(gram_term(&tt, &op, 2).is_err());
        assert!(gram_term(&tt, &op, 1).is_ok());
    }

    #[test]
    fn zero_cores_zero_gram() {
        let mut tt = random_tt(&[3, 4, 3], &[2, 2], 4);
        tt.orthogonalize(1).unwrap();
        let mut cores = tt.cores().to_vec();
        cores[2].data_mut().iter_mut().for_each(|x| *x = 0.0);
        let mut zeroed = TensorTrain::new(cores).unwrap();
        zeroed.set_site0(0);
        let op = TVOperator::for_mode(&[vec![3], vec![4], vec![3]], 3, 1.0).unwrap();
        assert_eq!(gram_term(&zeroed, &op, 1).unwrap().amax(), 0.0);
    }

    #[test]
    fn tv_value_examples() {
        let layout = vec![vec![3], vec![3], vec![3]];
        let ones = TensorTrain::ones(&[3, 3, 3]).unwrap();
        let op = TVOperator::for_mode(&layout, 1, 1.0).unwrap();
        assert!(tv_value(&ones, &op).unwrap().abs() < 1e-14);

        // ramp along mode 2 with step 0.5 over a 4x5x2 tensor
        let ramp = DenseTensor::from_fn(vec![4, 5, 2], |m| 0.5 * m[1] as f64).unwrap();
        let tt = crate::tt::tt_svd(&ramp, &[4, 2]).unwrap();
        let op = TVOperator::for_mode(&[vec![4], vec![5], vec![2]], 2, 1.0).unwrap();
        let expect = (5.0 - 1.0) * 0.25 * (4.0 * 2.0);
        assert!((tv_value(&tt, &op).unwrap() - expect).abs() < 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = DenseTensor::from_fn(vec![3, 3, 3], |_| rng.gen_range(-1.0..1.0)).unwrap();
        let tt = crate::tt::tt_svd(&t, &[3, 3]).unwrap();
        for mode in 1..=3 {
            let op = TVOperator::for_mode(&layout, mode, 1.0).unwrap();
            let dense = mode_product(&t, &difference_matrix(3), mode).unwrap().frobenius_norm().powi(2);
            assert!((tv_value(&tt, &op).unwrap() - dense).abs() < 1e-8 * dense.max(1.0));
        }
    }

    #[test]
    fn cached_environments_match_fresh() {
        let layout = vec![vec![2, 3], vec![2, 2], vec![3]];
        let factored: Vec<usize> = layout.iter().flatten().copied().collect();
        let mut tt = random_tt(&factored, &[2, 3, 3, 3], 5);
        tt.orthogonalize(5).unwrap();
        let op = TVOperator::for_mode(&layout, 2, 1.0).unwrap();
        let mut env = TvEnvironments::new(&op, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for k0 in (0..5).rev().chain(0..5) {
            while tt.site0().unwrap() > k0 {
                let s = tt.site0().unwrap();
                tt.shift_left().unwrap();
                env.invalidate(s);
                env.invalidate(s - 1);
            }
            while tt.site0().unwrap() < k0 {
                let s = tt.site0().unwrap();
                tt.shift_right().unwrap();
                env.invalidate(s);
                env.invalidate(s + 1);
            }
            let cached = env.gram(&tt, k0).unwrap();
            let fresh = gram_term(&tt, &op, k0 + 1).unwrap();
            assert!((cached - fresh).amax() < 1e-12);
            // perturb the site core like a solver update
            let data: Vec<f64> = tt.core0(k0).data().iter().map(|x| x + rng.gen_range(-0.1..0.1)).collect();
            tt.replace_site_core(k0, &data);
            env.invalidate(k0);
        }
    }

    #[test]
    fn grouped_extension_is_block_diagonal() {
        let op = build_tv(4, &[4]).unwrap();
        let w = &op.ttm().cores()[0];
        let e = extend_over_groups(w, 3);
        let m = DMatrix::from_column_slice(12, 12, e.data());
        let d = difference_matrix(4);
        for q in 0..3 {
            assert!((m.view((4 * q, 4 * q), (4, 4)) - &d).amax() < 1e-12);
        }
        assert!((m.view((0, 4), (4, 4))).amax() == 0.0);
    }

    #[test]
    fn lambda_adaptation() {
        assert_eq!(adapt_lambda(&[1.0, 2.0], 1.0), vec![1.0, 2.0]);
        assert_eq!(adapt_lambda(&[1.0, 2.0], 0.0), vec![0.0, 0.0]);
        assert_eq!(adapt_lambda(&[1.0], 0.25), vec![0.25]);
    }
}
