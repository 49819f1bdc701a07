//! Tensor trains and TT-matrices.
//!
//! A tensor train of a d-way tensor stores one 3-way core per mode with dims
//! `(R_k, I_k, R_{k+1})` and `R_1 = R_{d+1} = 1`. Entry `A(i_1, .., i_d)` is
//! the matrix product `A1(:, i_1, :) * A2(:, i_2, :) * ... * Ad(:, i_d, :)`.
//!
//! The canonical site is tracked metadata: when it is `Some(k)`, cores left
//! of `k` are left-orthogonal and cores right of `k` are right-orthogonal,
//! so the Frobenius norm of the whole tensor equals that of core `k`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::tensor::{check_dims, offset0, unravel0, DenseTensor, MultiIndex};

/// Direction of a one-step canonical-site shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

/// Largest feasible internal ranks `R_2..R_d` not exceeding `requested`.
///
/// Enforces `R_{k+1} <= R_k * I_k` and `R_k <= I_k * R_{k+1}`, which also
/// bounds every rank by the products of dims on either side of its bond.
pub fn clamp_ranks(dims: &[usize], requested: &[usize]) -> Result<Vec<usize>> {
    let d = dims.len();
    check_dims(dims)?;
    if requested.len() + 1 != d {
        return Err(domain!(
            "expected {} internal ranks for {} cores, got {}",
            d - 1,
            d,
            requested.len()
        ));
    }
    if requested.contains(&0) {
        return Err(domain!("TT-ranks must be positive, got {requested:?}"));
    }
    // full chain R_1..R_{d+1}
    let mut r = Vec::with_capacity(d + 1);
    r.push(1usize);
    r.extend_from_slice(requested);
    r.push(1);
    for k in 0..d {
        r[k + 1] = r[k + 1].min(r[k].saturating_mul(dims[k]));
    }
    for k in (0..d).rev() {
        r[k] = r[k].min(r[k + 1].saturating_mul(dims[k]));
    }
    Ok(r[1..d].to_vec())
}

/// Thin SVD with singular values sorted in decreasing order.
pub(crate) fn sorted_svd(m: DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    crate::linalg::svd(&m)
}

fn thin_qr(m: DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if m.nrows() < m.ncols() {
        return Err(domain!(
            "thin QR needs a tall matrix, got {}x{} (infeasible TT-ranks)",
            m.nrows(),
            m.ncols()
        ));
    }
    let qr = m.qr();
    Ok((qr.q(), qr.r()))
}

/// How a TT-SVD picks the rank of each truncated SVD.
#[derive(Debug, Clone)]
pub(crate) enum RankRule<'a> {
    Fixed(&'a [usize]),
    /// Keep singular values above `tol * sigma_max`.
    Relative(f64),
}

fn tt_svd_impl(t: &DenseTensor, rule: RankRule<'_>) -> Result<TensorTrain> {
    let dims = t.dims().to_vec();
    let d = dims.len();
    if t.is_empty() {
        return Err(domain!("cannot decompose an empty tensor"));
    }
    let fixed = match rule {
        RankRule::Fixed(r) => Some(clamp_ranks(&dims, r)?),
        RankRule::Relative(_) => None,
    };
    let mut cores = Vec::with_capacity(d);
    let mut rest = t.data().to_vec();
    let mut r_prev = 1usize;
    for k in 0..d - 1 {
        let rows = r_prev * dims[k];
        let cols = rest.len() / rows;
        let mat = DMatrix::from_column_slice(rows, cols, &rest);
        let (u, s, vt) = sorted_svd(mat)?;
        let avail = s.len();
        let r = match (&fixed, &rule) {
            (Some(f), _) => f[k].min(avail),
            (None, RankRule::Relative(tol)) => {
                let cut = tol * s.first().copied().unwrap_or(0.0);
                s.iter().filter(|&&x| x > cut).count().max(1)
            }
            _ => unreachable!(),
        };
        let u = u.columns(0, r).into_owned();
        cores.push(DenseTensor::new(vec![r_prev, dims[k], r], u.as_slice().to_vec())?);
        let mut sv = vt.rows(0, r).into_owned();
        for (i, mut row) in sv.row_iter_mut().enumerate() {
            row *= s[i];
        }
        rest = sv.as_slice().to_vec();
        r_prev = r;
    }
    cores.push(DenseTensor::new(vec![r_prev, dims[d - 1], 1], rest)?);
    let mut tt = TensorTrain::new(cores)?;
    tt.site = Some(d - 1);
    Ok(tt)
}

/// TT-SVD truncated to the prescribed internal ranks `R_2..R_d`.
///
/// Requested ranks are clamped to the feasible chain (see [`clamp_ranks`]);
/// the returned train's [`TensorTrain::ranks`] records what was used. The
/// result is canonical at site `d`.
pub fn tt_svd(t: &DenseTensor, ranks: &[usize]) -> Result<TensorTrain> {
    tt_svd_impl(t, RankRule::Fixed(ranks))
}

/// TT-SVD keeping singular values above `tol` relative to the largest one
/// in each unfolding.
pub fn tt_svd_tol(t: &DenseTensor, tol: f64) -> Result<TensorTrain> {
    tt_svd_impl(t, RankRule::Relative(tol))
}

/// A tensor in tensor-train format.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTrain {
    cores: Vec<DenseTensor>,
    /// 0-based internally.
    site: Option<usize>,
}

impl TensorTrain {
    /// Wraps 3-way cores. No canonical site is assumed.
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(domain!("a tensor train needs at least one core"));
        }
        let d = cores.len();
        for (k, c) in cores.iter().enumerate() {
            if c.order() != 3 {
                return Err(domain!("core {} is {}-way, expected 3-way", k + 1, c.order()));
            }
        }
        if cores[0].dims()[0] != 1 || cores[d - 1].dims()[2] != 1 {
            return Err(domain!("boundary ranks must be 1"));
        }
        for k in 0..d - 1 {
            if cores[k].dims()[2] != cores[k + 1].dims()[0] {
                return Err(domain!(
                    "rank mismatch between cores {} and {}: {} vs {}",
                    k + 1,
                    k + 2,
                    cores[k].dims()[2],
                    cores[k + 1].dims()[0]
                ));
            }
        }
        Ok(TensorTrain { cores, site: None })
    }

    /// Rank-1 train of all ones.
    pub fn ones(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let cores = dims
            .iter()
            .map(|&n| DenseTensor::new(vec![1, n, 1], vec![1.0; n]))
            .collect::<Result<_>>()?;
        TensorTrain::new(cores)
    }

    /// Train with uniform(-1, 1) core entries and clamped internal ranks.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], ranks: &[usize], rng: &mut R) -> Result<Self> {
        let ranks = clamp_ranks(dims, ranks)?;
        let mut chain = vec![1];
        chain.extend(ranks);
        chain.push(1);
        let cores = dims
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let len = chain[k] * n * chain[k + 1];
                DenseTensor::new(
                    vec![chain[k], n, chain[k + 1]],
                    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                )
            })
            .collect::<Result<_>>()?;
        TensorTrain::new(cores)
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    /// Mode sizes `I_1..I_d`.
    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// Full rank chain `R_1..R_{d+1}`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.dims()[0]).collect();
        r.push(1);
        r
    }

    /// Internal ranks `R_2..R_d`.
    pub fn internal_ranks(&self) -> Vec<usize> {
        let r = self.ranks();
        r[1..r.len() - 1].to_vec()
    }

    pub fn num_params(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    /// Core `k` (1-based).
    pub fn core(&self, k: usize) -> &DenseTensor {
        &self.cores[k - 1]
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    /// Replaces core `k` (1-based). Invalidates the canonical site.
    pub fn set_core(&mut self, k: usize, core: DenseTensor) -> Result<()> {
        let old = &self.cores[k - 1];
        if core.dims() != old.dims() {
            return Err(domain!(
                "core {k} has dims {:?}, replacement has {:?}",
                old.dims(),
                core.dims()
            ));
        }
        self.cores[k - 1] = core;
        self.site = None;
        Ok(())
    }

    /// Overwrites the data of core `k` (0-based) keeping the canonical site.
    /// Only valid for the core at the site itself.
    pub(crate) fn replace_site_core(&mut self, k: usize, data: &[f64]) {
        debug_assert_eq!(self.site, Some(k));
        self.cores[k].data_mut().copy_from_slice(data);
    }

    pub(crate) fn core0(&self, k: usize) -> &DenseTensor {
        &self.cores[k]
    }

    /// Canonical site (1-based), if known.
    pub fn canonical_site(&self) -> Option<usize> {
        self.site.map(|k| k + 1)
    }

    #[cfg(test)]
    pub(crate) fn set_site0(&mut self, k: usize) {
        self.site = Some(k);
    }

    pub(crate) fn site0(&self) -> Option<usize> {
        self.site
    }

    /// Brings the train into site-`k` mixed-canonical form (1-based) with QR
    /// sweeps from both ends.
    pub fn orthogonalize(&mut self, k: usize) -> Result<()> {
        let d = self.order();
        if k == 0 || k > d {
            return Err(domain!("site {k} out of range 1..={d}"));
        }
        for j in 0..k - 1 {
            self.site = Some(j);
            self.shift_right()?;
        }
        for j in (k..d).rev() {
            self.site = Some(j);
            self.shift_left()?;
        }
        self.site = Some(k - 1);
        Ok(())
    }

    /// Moves the canonical site one core to the right.
    pub fn shift_right(&mut self) -> Result<()> {
        let k = self.site.ok_or_else(|| domain!("canonical site is not set"))?;
        if k + 1 >= self.order() {
            return Err(domain!("cannot shift right past the last core"));
        }
        let [r0, n, r1] = <[usize; 3]>::try_from(self.cores[k].dims()).unwrap();
        let (q, r) = thin_qr(self.cores[k].to_matrix(r0 * n)?)?;
        self.cores[k] = DenseTensor::new(vec![r0, n, r1], q.as_slice().to_vec())?;
        let next = &self.cores[k + 1];
        let nd = next.dims().to_vec();
        let m = r * next.to_matrix(nd[0])?;
        self.cores[k + 1] = DenseTensor::new(nd, m.as_slice().to_vec())?;
        self.site = Some(k + 1);
        Ok(())
    }

    /// Moves the canonical site one core to the left.
    pub fn shift_left(&mut self) -> Result<()> {
        let k = self.site.ok_or_else(|| domain!("canonical site is not set"))?;
        if k == 0 {
            return Err(domain!("cannot shift left past the first core"));
        }
        let [r0, n, r1] = <[usize; 3]>::try_from(self.cores[k].dims()).unwrap();
        let (q, r) = thin_qr(self.cores[k].to_matrix(r0)?.transpose())?;
        self.cores[k] = DenseTensor::new(vec![r0, n, r1], q.transpose().as_slice().to_vec())?;
        let prev = &self.cores[k - 1];
        let pd = prev.dims().to_vec();
        let m = prev.to_matrix(pd[0] * pd[1])? * r.transpose();
        self.cores[k - 1] = DenseTensor::new(pd, m.as_slice().to_vec())?;
        self.site = Some(k - 1);
        Ok(())
    }

    /// Returns a copy with the canonical site moved one step.
    pub fn shift_canonical(&self, direction: Direction) -> Result<TensorTrain> {
        let mut out = self.clone();
        match direction {
            Direction::Left => out.shift_left()?,
            Direction::Right => out.shift_right()?,
        }
        Ok(out)
    }

    /// Contracts all cores into the dense tensor.
    pub fn contract_full(&self) -> DenseTensor {
        // running matrix: (I_1..I_k combined, R_{k+1})
        let first = &self.cores[0];
        let mut acc = first.to_matrix(first.dims()[1]).expect("core shape");
        let mut rows = first.dims()[1];
        for core in &self.cores[1..] {
            let [r0, n, r1] = <[usize; 3]>::try_from(core.dims()).unwrap();
            let prod = &acc * core.to_matrix(r0).expect("core shape");
            // prod is rows x (n * r1); reorder to (rows * n) x r1, which is
            // already the column-major layout of prod
            acc = DMatrix::from_column_slice(rows * n, r1, prod.as_slice());
            rows *= n;
        }
        DenseTensor::new(self.dims(), acc.as_slice().to_vec()).expect("dims match")
    }

    /// Entry at a 1-based multi-index by sliced core products.
    pub fn entry(&self, m: &MultiIndex) -> Result<f64> {
        let dims = self.dims();
        crate::tensor::linear_index(m, &dims)?;
        let idx: Vec<usize> = m.as_slice().iter().map(|i| i - 1).collect();
        Ok(self.entry0(&idx))
    }

    pub(crate) fn entry0(&self, idx: &[usize]) -> f64 {
        let mut v = vec![1.0];
        let mut next = Vec::new();
        for (core, &i) in self.cores.iter().zip(idx) {
            let [r0, n, r1] = <[usize; 3]>::try_from(core.dims()).unwrap();
            let data = core.data();
            next.clear();
            next.resize(r1, 0.0);
            for (b, out) in next.iter_mut().enumerate() {
                let base = (b * n + i) * r0;
                *out = v.iter().zip(&data[base..base + r0]).map(|(x, y)| x * y).sum();
            }
            std::mem::swap(&mut v, &mut next);
        }
        v[0]
    }

    /// Frobenius norm read off the core at the canonical site.
    pub fn norm(&self) -> Result<f64> {
        let k = self
            .site
            .ok_or_else(|| domain!("norm requires a canonical site"))?;
        Ok(self.cores[k].frobenius_norm())
    }

    /// `A^T A` for core `k` (1-based) unfolded as `(R_k I_k) x R_{k+1}`.
    pub fn left_gram(&self, k: usize) -> DMatrix<f64> {
        let c = &self.cores[k - 1];
        let m = c.to_matrix(c.dims()[0] * c.dims()[1]).expect("core shape");
        m.transpose() * m
    }

    /// `A A^T` for core `k` (1-based) unfolded as `R_k x (I_k R_{k+1})`.
    pub fn right_gram(&self, k: usize) -> DMatrix<f64> {
        let c = &self.cores[k - 1];
        let m = c.to_matrix(c.dims()[0]).expect("core shape");
        &m * m.transpose()
    }

    /// Largest deviation of the orthogonality Gram matrices from identity
    /// over all cores on either side of the canonical site.
    pub fn canonical_defect(&self) -> Result<f64> {
        let k = self
            .site
            .ok_or_else(|| domain!("canonical site is not set"))?;
        let dev = |g: DMatrix<f64>| {
            let n = g.nrows();
            (g - DMatrix::identity(n, n)).amax()
        };
        let mut worst: f64 = 0.0;
        for j in 0..k {
            worst = worst.max(dev(self.left_gram(j + 1)));
        }
        for j in k + 1..self.order() {
            worst = worst.max(dev(self.right_gram(j + 1)));
        }
        Ok(worst)
    }

    const MAGIC: [u8; 4] = *b"TTC\0";
    const VERSION: u32 = 1;

    /// Serializes to a little-endian container: magic, version, order, dims,
    /// rank chain, canonical site (0 = none), then core data column-major.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&(self.order() as u64).to_le_bytes())?;
        for n in self.dims() {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for r in self.ranks() {
            w.write_all(&(r as u64).to_le_bytes())?;
        }
        w.write_all(&(self.site.map_or(0, |k| k + 1) as u64).to_le_bytes())?;
        for c in &self.cores {
            for x in c.data() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<TensorTrain> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != Self::MAGIC {
            return Err(Error::Parse("not a tensor-train file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != Self::VERSION {
            return Err(Error::Parse(format!("unsupported tensor-train version {version}")));
        }
        let read_u64 = |r: &mut R| -> Result<usize> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::Parse("size overflow".into()))
        };
        let d = read_u64(&mut r)?;
        if d == 0 || d > 4096 {
            return Err(Error::Parse(format!("implausible core count {d}")));
        }
        let dims = (0..d).map(|_| read_u64(&mut r)).collect::<Result<Vec<_>>>()?;
        let ranks = (0..=d).map(|_| read_u64(&mut r)).collect::<Result<Vec<_>>>()?;
        let site = read_u64(&mut r)?;
        let mut cores = Vec::with_capacity(d);
        for k in 0..d {
            let cd = vec![ranks[k], dims[k], ranks[k + 1]];
            let len = check_dims(&cd).map_err(|e| Error::Parse(e.to_string()))?;
            let mut data = vec![0.0; len];
            let mut b = [0u8; 8];
            for x in &mut data {
                r.read_exact(&mut b)?;
                *x = f64::from_le_bytes(b);
            }
            cores.push(DenseTensor::new(cd, data)?);
        }
        let mut tt = TensorTrain::new(cores).map_err(|e| Error::Parse(e.to_string()))?;
        if site > d {
            return Err(Error::Parse(format!("canonical site {site} out of range")));
        }
        tt.site = site.checked_sub(1);
        Ok(tt)
    }
}

/// A matrix in TT format with 4-way cores `(R_k, J_k, I_k, R_{k+1})`,
/// `J_k` indexing rows and `I_k` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TTMatrix {
    cores: Vec<DenseTensor>,
}

impl TTMatrix {
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(domain!("a TT-matrix needs at least one core"));
        }
        let d = cores.len();
        if cores.iter().any(|c| c.order() != 4) {
            return Err(domain!("TT-matrix cores must be 4-way"));
        }
        if cores[0].dims()[0] != 1 || cores[d - 1].dims()[3] != 1 {
            return Err(domain!("boundary ranks must be 1"));
        }
        if (0..d - 1).any(|k| cores[k].dims()[3] != cores[k + 1].dims()[0]) {
            return Err(domain!("inconsistent TT-matrix rank chain"));
        }
        Ok(TTMatrix { cores })
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let cores = dims
            .iter()
            .map(|&n| {
                let mut data = vec![0.0; n * n];
                for i in 0..n {
                    data[i + n * i] = 1.0;
                }
                DenseTensor::new(vec![1, n, n, 1], data)
            })
            .collect::<Result<_>>()?;
        TTMatrix::new(cores)
    }

    /// TT-SVD of `m` after pairing row and column sub-indices per core.
    /// Singular values below `tol` relative to the largest in each unfolding
    /// are discarded.
    pub fn from_matrix(
        m: &DMatrix<f64>,
        row_dims: &[usize],
        col_dims: &[usize],
        tol: f64,
    ) -> Result<TTMatrix> {
        let rows = check_dims(row_dims)?;
        let cols = check_dims(col_dims)?;
        if row_dims.len() != col_dims.len() {
            return Err(domain!("row and column splits need the same number of cores"));
        }
        if rows != m.nrows() || cols != m.ncols() {
            return Err(domain!(
                "splits {row_dims:?} x {col_dims:?} do not match a {}x{} matrix",
                m.nrows(),
                m.ncols()
            ));
        }
        let d = row_dims.len();
        let paired: Vec<usize> = row_dims.iter().zip(col_dims).map(|(j, i)| j * i).collect();
        let mut data = vec![0.0; rows * cols];
        let mut jdx = vec![0usize; d];
        let mut idx = vec![0usize; d];
        let mut pidx = vec![0usize; d];
        for c in 0..cols {
            unravel0(c, col_dims, &mut idx);
            for r in 0..rows {
                unravel0(r, row_dims, &mut jdx);
                for k in 0..d {
                    pidx[k] = jdx[k] + row_dims[k] * idx[k];
                }
                data[offset0(&pidx, &paired)] = m[(r, c)];
            }
        }
        let tt = tt_svd_tol(&DenseTensor::new(paired, data)?, tol)?;
        let cores = tt
            .cores
            .into_iter()
            .zip(row_dims.iter().zip(col_dims))
            .map(|(c, (&j, &i))| {
                let [r0, _, r1] = <[usize; 3]>::try_from(c.dims()).unwrap();
                c.into_reshaped(vec![r0, j, i, r1])
            })
            .collect::<Result<_>>()?;
        TTMatrix::new(cores)
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn row_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    pub fn col_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[2]).collect()
    }

    /// Full rank chain `R_1..R_{d+1}`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.dims()[0]).collect();
        r.push(1);
        r
    }

    /// Dense matrix of size `prod(J) x prod(I)`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let rd = self.row_dims();
        let cd = self.col_dims();
        let rows: usize = rd.iter().product();
        let cols: usize = cd.iter().product();
        let d = self.order();
        let mut jdx = vec![0usize; d];
        let mut idx = vec![0usize; d];
        DMatrix::from_fn(rows, cols, |r, c| {
            unravel0(r, &rd, &mut jdx);
            unravel0(c, &cd, &mut idx);
            let mut v = DVector::from_element(1, 1.0);
            for (k, core) in self.cores.iter().enumerate() {
                let [r0, jn, in_, r1] = <[usize; 4]>::try_from(core.dims()).unwrap();
                let slice = DMatrix::from_fn(r0, r1, |a, b| {
                    core.data()[a + r0 * (jdx[k] + jn * (idx[k] + in_ * b))]
                });
                v = slice.transpose() * v;
            }
            v[0]
        })
    }

    /// Applies the TT-matrix to a tensor train core by core. The result's
    /// ranks are the products of the two rank chains.
    pub fn apply(&self, tt: &TensorTrain) -> Result<TensorTrain> {
        if self.col_dims() != tt.dims() {
            return Err(domain!(
                "TT-matrix columns {:?} do not match tensor dims {:?}",
                self.col_dims(),
                tt.dims()
            ));
        }
        let cores = self
            .cores
            .iter()
            .zip(&tt.cores)
            .map(|(w, a)| op_core_product(w, a))
            .collect();
        TensorTrain::new(cores)
    }
}

/// Core of `W x` from a TT-matrix core `w` `(m0, J, I, m1)` and a TT core
/// `a` `(a0, I, a1)`. Combined rank indices are `a + a0 * m`.
pub(crate) fn op_core_product(w: &DenseTensor, a: &DenseTensor) -> DenseTensor {
    let [m0, jn, in_, m1] = <[usize; 4]>::try_from(w.dims()).unwrap();
    let [a0, ai, a1] = <[usize; 3]>::try_from(a.dims()).unwrap();
    debug_assert_eq!(ai, in_);
    let (wd, ad) = (w.data(), a.data());
    let (r0, r1) = (a0 * m0, a1 * m1);
    let mut out = vec![0.0; r0 * jn * r1];
    for n in 0..m1 {
        for b in 0..a1 {
            for i in 0..in_ {
                let acol = &ad[a0 * (i + in_ * b)..a0 * (i + in_ * b + 1)];
                for j in 0..jn {
                    for m in 0..m0 {
                        let wv = wd[m + m0 * (j + jn * (i + in_ * n))];
                        if wv == 0.0 {
                            continue;
                        }
                        let base = a0 * m + r0 * (j + jn * (b + a1 * n));
                        for (o, &av) in out[base..base + a0].iter_mut().zip(acol) {
                            *o += wv * av;
                        }
                    }
                }
            }
        }
    }
    DenseTensor::new(vec![r0, jn, r1], out).expect("product core dims")
}
