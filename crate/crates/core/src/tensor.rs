//! Dense d-way tensors stored in column-major order (first index fastest).
//!
//! Multi-indices at the public surface are 1-based. A multi-index
//! `[i_1, ..., i_d]` maps to the linear index
//! `i_1 + sum_{k>=2} (i_k - 1) * I_1 * ... * I_{k-1}`, which is also the
//! position of the entry in `vec(A)`.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{domain, Result};

/// A 1-based multi-index into a tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(indices: Vec<usize>) -> Self {
        MultiIndex(indices)
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

pub(crate) fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(domain!("tensor must have at least one mode"));
    }
    if let Some(k) = dims.iter().position(|&n| n == 0) {
        return Err(domain!("mode {} has zero size", k + 1));
    }
    dims.iter().try_fold(1usize, |acc, &n| {
        acc.checked_mul(n)
            .ok_or_else(|| domain!("tensor size overflows usize"))
    })
}

/// Column-major linear index of a 1-based multi-index (result is 1-based).
pub fn linear_index(m: &MultiIndex, dims: &[usize]) -> Result<usize> {
    if m.order() != dims.len() {
        return Err(domain!(
            "multi-index {m} has order {} but tensor has {} modes",
            m.order(),
            dims.len()
        ));
    }
    let mut stride = 1usize;
    let mut lin = 0usize;
    for (k, (&i, &n)) in m.0.iter().zip(dims).enumerate() {
        if i == 0 || i > n {
            return Err(domain!(
                "index {i} out of range 1..={n} in mode {}",
                k + 1
            ));
        }
        lin += (i - 1) * stride;
        stride *= n;
    }
    Ok(lin + 1)
}

/// Inverse of [`linear_index`].
pub fn multi_index(i: usize, dims: &[usize]) -> Result<MultiIndex> {
    let total = check_dims(dims)?;
    if i == 0 || i > total {
        return Err(domain!("linear index {i} out of range 1..={total}"));
    }
    let mut rem = i - 1;
    let idx = dims
        .iter()
        .map(|&n| {
            let r = rem % n;
            rem /= n;
            r + 1
        })
        .collect();
    Ok(MultiIndex(idx))
}

/// 0-based offset of a 0-based multi-index. No bounds checks.
#[inline]
pub(crate) fn offset0(idx: &[usize], dims: &[usize]) -> usize {
    let mut stride = 1;
    let mut off = 0;
    for (&i, &n) in idx.iter().zip(dims) {
        off += i * stride;
        stride *= n;
    }
    off
}

/// Writes the 0-based multi-index of `off` into `out`.
#[inline]
pub(crate) fn unravel0(mut off: usize, dims: &[usize], out: &mut [usize]) {
    for (o, &n) in out.iter_mut().zip(dims) {
        *o = off % n;
        off /= n;
    }
}

/// A dense real tensor with column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n = check_dims(&dims)?;
        if n != data.len() {
            return Err(domain!(
                "data length {} does not match product of dims {:?} = {n}",
                data.len(),
                dims
            ));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let n = check_dims(&dims)?;
        Ok(DenseTensor {
            dims,
            data: vec![0.0; n],
        })
    }

    /// Builds a tensor by evaluating `f` at every 1-based multi-index.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n = check_dims(&dims)?;
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(n);
        for off in 0..n {
            unravel0(off, &dims, &mut idx);
            idx.iter_mut().for_each(|i| *i += 1);
            data.push(f(&idx));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flat data in column-major order, i.e. `vec(A)`.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, m: &MultiIndex) -> Result<f64> {
        Ok(self.data[linear_index(m, &self.dims)? - 1])
    }

    pub fn set(&mut self, m: &MultiIndex, value: f64) -> Result<()> {
        let i = linear_index(m, &self.dims)? - 1;
        self.data[i] = value;
        Ok(())
    }

    pub(crate) fn at0(&self, idx: &[usize]) -> f64 {
        self.data[offset0(idx, &self.dims)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Reinterprets the data with new dims; the flat vector is untouched.
    pub fn reshape(&self, new_dims: Vec<usize>) -> Result<DenseTensor> {
        self.clone().into_reshaped(new_dims)
    }

    pub fn into_reshaped(self, new_dims: Vec<usize>) -> Result<DenseTensor> {
        let n = check_dims(&new_dims)?;
        if n != self.data.len() {
            return Err(domain!(
                "cannot reshape {:?} ({} entries) into {:?} ({n} entries)",
                self.dims,
                self.data.len(),
                new_dims
            ));
        }
        Ok(DenseTensor {
            dims: new_dims,
            data: self.data,
        })
    }

    /// Views the tensor as a `rows x (len/rows)` column-major matrix.
    pub fn to_matrix(&self, rows: usize) -> Result<DMatrix<f64>> {
        if rows == 0 || !self.data.len().is_multiple_of(rows) {
            return Err(domain!(
                "cannot view {} entries as a matrix with {rows} rows",
                self.data.len()
            ));
        }
        Ok(DMatrix::from_column_slice(
            rows,
            self.data.len() / rows,
            &self.data,
        ))
    }

    /// Reorders modes so that result mode `j` is input mode `perm[j]` (0-based).
    pub fn permute(&self, perm: &[usize]) -> Result<DenseTensor> {
        let d = self.order();
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
            return Err(domain!("{perm:?} is not a permutation of {d} modes"));
        }
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut src = vec![0usize; d];
        let mut dst = vec![0usize; d];
        let mut data = vec![0.0; self.data.len()];
        for (off, out) in data.iter_mut().enumerate() {
            unravel0(off, &new_dims, &mut dst);
            for (j, &p) in perm.iter().enumerate() {
                src[p] = dst[j];
            }
            *out = self.at0(&src);
        }
        Ok(DenseTensor {
            dims: new_dims,
            data,
        })
    }
}

/// k-mode product `t x_k U` for `U` of shape `J x I_k` (k is 1-based).
pub fn mode_product(t: &DenseTensor, u: &DMatrix<f64>, k: usize) -> Result<DenseTensor> {
    let d = t.order();
    if k == 0 || k > d {
        return Err(domain!("mode {k} out of range 1..={d}"));
    }
    let dims = t.dims();
    let ik = dims[k - 1];
    if u.ncols() != ik {
        return Err(domain!(
            "matrix has {} columns but mode {k} has size {ik}",
            u.ncols()
        ));
    }
    let left: usize = dims[..k - 1].iter().product();
    let right: usize = dims[k..].iter().product();
    let j = u.nrows();
    let mut out = vec![0.0; left * j * right];
    for r in 0..right {
        for i in 0..ik {
            let src = &t.data[(r * ik + i) * left..(r * ik + i + 1) * left];
            for jj in 0..j {
                let w = u[(jj, i)];
                if w == 0.0 {
                    continue;
                }
                let dst = &mut out[(r * j + jj) * left..(r * j + jj + 1) * left];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
    }
    let mut new_dims = dims.to_vec();
    new_dims[k - 1] = j;
    DenseTensor::new(new_dims, out)
}

/// Kronecker product `A ⊗ C`.
pub fn kron(a: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(c)
}

/// Column-wise Kronecker (Khatri-Rao) product of two matrices with equal
/// column counts.
pub fn khatri_rao(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != c.ncols() {
        return Err(domain!(
            "Khatri-Rao product needs equal column counts, got {} and {}",
            a.ncols(),
            c.ncols()
        ));
    }
    let (n1, n2) = (a.nrows(), c.nrows());
    Ok(DMatrix::from_fn(n1 * n2, a.ncols(), |row, m| {
        a[(row / n2, m)] * c[(row % n2, m)]
    }))
}
