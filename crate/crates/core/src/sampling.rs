//! Observed entries and their factored selection matrices.
//!
//! The selection matrix `S` that gathers the observed entries from
//! `vec(A)` is the Khatri-Rao product `S^(d) ⊙ ... ⊙ S^(1)`, where column
//! `n` of `S^(k)` is the basis vector picking observation `n`'s k-th index.
//! Only the row positions of those basis vectors are stored.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::tensor::{check_dims, offset0, unravel0, DenseTensor, MultiIndex};

/// Known tensor entries: multi-indices and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    dims: Vec<usize>,
    /// 0-based multi-indices, `d` per observation.
    idx: Vec<usize>,
    values: Vec<f64>,
}

impl ObservationSet {
    /// Validates every multi-index against `dims` and rejects duplicates.
    pub fn new(dims: Vec<usize>, entries: Vec<(MultiIndex, f64)>) -> Result<Self> {
        check_dims(&dims)?;
        let d = dims.len();
        let mut idx = Vec::with_capacity(entries.len() * d);
        let mut values = Vec::with_capacity(entries.len());
        let mut seen = HashSet::with_capacity(entries.len());
        for (m, v) in entries {
            let lin = crate::tensor::linear_index(&m, &dims)?;
            if !seen.insert(lin) {
                return Err(domain!("duplicate observation at {m}"));
            }
            idx.extend(m.as_slice().iter().map(|i| i - 1));
            values.push(v);
        }
        Ok(ObservationSet { dims, idx, values })
    }

    /// Builds observations from 0-based linear positions into `vec(A)`.
    pub(crate) fn from_offsets(dims: Vec<usize>, offsets: &[usize], values: Vec<f64>) -> Result<Self> {
        let total = check_dims(&dims)?;
        let d = dims.len();
        let mut seen = HashSet::with_capacity(offsets.len());
        let mut idx = vec![0usize; offsets.len() * d];
        for (l, &off) in offsets.iter().enumerate() {
            if off >= total {
                return Err(domain!("linear position {} out of range", off + 1));
            }
            if !seen.insert(off) {
                return Err(domain!("duplicate observation at linear index {}", off + 1));
            }
            unravel0(off, &dims, &mut idx[l * d..(l + 1) * d]);
        }
        Ok(ObservationSet { dims, idx, values })
    }

    /// Observes every entry of `t` at the given 1-based linear indices.
    pub fn from_tensor(t: &DenseTensor, linear: &[usize]) -> Result<Self> {
        let offsets: Vec<usize> = linear
            .iter()
            .map(|&i| i.checked_sub(1).ok_or_else(|| domain!("linear index 0 is invalid")))
            .collect::<Result<_>>()?;
        let values = offsets
            .iter()
            .map(|&o| t.data().get(o).copied().ok_or_else(|| domain!("linear index {} out of range", o + 1)))
            .collect::<Result<_>>()?;
        Self::from_offsets(t.dims().to_vec(), &offsets, values)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 1-based multi-index of observation `l` (0-based position in the set).
    pub fn index(&self, l: usize) -> MultiIndex {
        MultiIndex(self.idx0(l).iter().map(|i| i + 1).collect())
    }

    pub(crate) fn idx0(&self, l: usize) -> &[usize] {
        let d = self.dims.len();
        &self.idx[l * d..(l + 1) * d]
    }

    /// 0-based position of observation `l` in `vec(A)`.
    pub(crate) fn offset(&self, l: usize) -> usize {
        offset0(self.idx0(l), &self.dims)
    }

    /// 1-based linear indices of all observations.
    pub fn linear_indices(&self) -> Vec<usize> {
        (0..self.len()).map(|l| self.offset(l) + 1).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        (0..self.len()).map(move |l| (self.index(l), self.values[l]))
    }

    /// Reads the entries of `t` at the observed positions.
    pub fn gather(&self, t: &DenseTensor) -> Result<Vec<f64>> {
        if t.len() != self.dims.iter().product::<usize>() {
            return Err(domain!(
                "tensor with dims {:?} does not match observation dims {:?}",
                t.dims(),
                self.dims
            ));
        }
        Ok((0..self.len()).map(|l| t.data()[self.offset(l)]).collect())
    }

    /// Same positions, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(domain!("expected {} values, got {}", self.len(), values.len()));
        }
        Ok(ObservationSet {
            dims: self.dims.clone(),
            idx: self.idx.clone(),
            values,
        })
    }

    /// Observations at the given positions of this set, in that order.
    pub fn subset(&self, picks: &[usize]) -> ObservationSet {
        let d = self.dims.len();
        let mut idx = Vec::with_capacity(picks.len() * d);
        let mut values = Vec::with_capacity(picks.len());
        for &l in picks {
            idx.extend_from_slice(self.idx0(l));
            values.push(self.values[l]);
        }
        ObservationSet {
            dims: self.dims.clone(),
            idx,
            values,
        }
    }

    /// Re-expresses every observation over `new_dims` with the same
    /// column-major linear index.
    pub fn reindex(&self, new_dims: Vec<usize>) -> Result<ObservationSet> {
        let total = check_dims(&new_dims)?;
        if total != self.dims.iter().product::<usize>() {
            return Err(domain!(
                "cannot reindex dims {:?} as {:?}: sizes differ",
                self.dims,
                new_dims
            ));
        }
        let offsets: Vec<usize> = (0..self.len()).map(|l| self.offset(l)).collect();
        Self::from_offsets(new_dims, &offsets, self.values.clone())
    }
}

/// The d factor matrices of the selection matrix, stored as row positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredSelection {
    dims: Vec<usize>,
    /// `rows[k][n]` is the 0-based row of the single 1 in column n of S^(k+1).
    rows: Vec<Vec<usize>>,
}

impl FactoredSelection {
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn num_observations(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Row (1-based) of the nonzero in column `n` (0-based) of factor `k`
    /// (1-based).
    pub fn row_of(&self, k: usize, n: usize) -> usize {
        self.rows[k - 1][n] + 1
    }

    /// Dense binary `I_k x N` factor `S^(k)` (k is 1-based).
    pub fn factor_dense(&self, k: usize) -> DMatrix<f64> {
        let rows = &self.rows[k - 1];
        let mut m = DMatrix::zeros(self.dims[k - 1], rows.len());
        for (n, &r) in rows.iter().enumerate() {
            m[(r, n)] = 1.0;
        }
        m
    }

    /// `S^T vec(A)` evaluated through the factors without forming `S`.
    pub fn apply(&self, vec_a: &[f64]) -> Result<Vec<f64>> {
        let total: usize = self.dims.iter().product();
        if vec_a.len() != total {
            return Err(domain!("vector of length {} does not match {total}", vec_a.len()));
        }
        Ok((0..self.num_observations())
            .map(|n| {
                let mut stride = 1;
                let mut pos = 0;
                for (rows, &dim) in self.rows.iter().zip(&self.dims) {
                    pos += rows[n] * stride;
                    stride *= dim;
                }
                vec_a[pos]
            })
            .collect())
    }
}

/// Builds the factored selection matrices for an observation set.
pub fn build_selection(obs: &ObservationSet) -> FactoredSelection {
    let d = obs.order();
    let rows = (0..d)
        .map(|k| (0..obs.len()).map(|l| obs.idx0(l)[k]).collect())
        .collect();
    FactoredSelection {
        dims: obs.dims().to_vec(),
        rows,
    }
}

/// Maps observations on the original dims onto a mode-by-mode refinement
/// `factored[k]` of each original dim `k`.
pub fn remap_observations(obs: &ObservationSet, factored: &[Vec<usize>]) -> Result<ObservationSet> {
    if factored.len() != obs.order() {
        return Err(domain!(
            "factorization has {} modes, observations have {}",
            factored.len(),
            obs.order()
        ));
    }
    for (k, (f, &n)) in factored.iter().zip(obs.dims()).enumerate() {
        if f.is_empty() || f.iter().product::<usize>() != n {
            return Err(domain!("factors {f:?} of mode {} do not multiply to {n}", k + 1));
        }
    }
    obs.reindex(factored.iter().flatten().copied().collect())
}

/// Deterministic random split holding out `round(fraction * N)` entries.
pub fn holdout_split(obs: &ObservationSet, fraction: f64, seed: u64) -> Result<(ObservationSet, ObservationSet)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(domain!("holdout fraction must lie in (0, 1), got {fraction}"));
    }
    let n = obs.len();
    let m = (fraction * n as f64).round() as usize;
    if m == 0 || m == n {
        return Err(domain!(
            "holdout of {fraction} on {n} observations leaves an empty side"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut held = vec![false; n];
    for i in index::sample(&mut rng, n, m) {
        held[i] = true;
    }
    let (val, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| held[i]);
    Ok((obs.subset(&train), obs.subset(&val)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::khatri_rao;
    use rand::Rng;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn selection_reproduces_worked_example() {
        let obs = ObservationSet::new(
            vec![3, 4, 2],
            vec![(mi(&[2, 1, 2]), 1.0), (mi(&[1, 3, 1]), 2.0), (mi(&[3, 4, 2]), 3.0)],
        )
        .unwrap();
        let s = build_selection(&obs);
        let rows = |k| (0..3).map(|n| s.row_of(k, n)).collect::<Vec<_>>();
        assert_eq!(rows(1), vec![2, 1, 3]);
        assert_eq!(rows(2), vec![1, 3, 4]);
        assert_eq!(rows(3), vec![2, 1, 2]);
        assert_eq!(s.factor_dense(1).shape(), (3, 3));
        assert_eq!(s.factor_dense(2).shape(), (4, 3));
        assert_eq!(s.factor_dense(3).shape(), (2, 3));
    }

    #[test]
    fn single_corner_observation() {
        let obs = ObservationSet::new(vec![2, 3, 4], vec![(mi(&[1, 1, 1]), 5.0)]).unwrap();
        let s = build_selection(&obs);
        for k in 1..=3 {
            assert_eq!(s.row_of(k, 0), 1);
        }
    }

    #[test]
    fn khatri_rao_selection_gathers_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dims = vec![2, 3, 2];
        let a = DenseTensor::from_fn(dims.clone(), |_| rng.gen_range(-1.0..1.0)).unwrap();
        let linear: Vec<usize> = index::sample(&mut rng, 12, 7).into_iter().map(|i| i + 1).collect();
        let obs = ObservationSet::from_tensor(&a, &linear).unwrap();
        let s = build_selection(&obs);
        let big = khatri_rao(&khatri_rao(&s.factor_dense(3), &s.factor_dense(2)).unwrap(), &s.factor_dense(1)).unwrap();
        let gathered = big.transpose() * nalgebra::DVector::from_column_slice(a.data());
        assert_eq!(gathered.as_slice(), obs.values());
        assert_eq!(s.apply(a.data()).unwrap(), obs.values());
    }

    #[test]
    fn duplicates_and_bad_indices_rejected() {
        let dup = ObservationSet::new(vec![2, 2], vec![(mi(&[1, 2]), 1.0), (mi(&[1, 2]), 2.0)]);
        assert!(dup.is_err());
        assert!(ObservationSet::new(vec![2, 2], vec![(mi(&[3, 1]), 1.0)]).is_err());
    }

    #[test]
    fn remap_examples() {
        let obs = ObservationSet::new(vec![3, 4], vec![(mi(&[2, 3], ), 1.0)]).unwrap();
        let same = remap_observations(&obs, &[vec![3], vec![4]]).unwrap();
        assert_eq!(same, obs);

        let v = ObservationSet::new(vec![4], vec![(mi(&[3]), 7.0)]).unwrap();
        let r = remap_observations(&v, &[vec![2, 2]]).unwrap();
        assert_eq!(r.index(0).0, vec![1, 2]);
        assert_eq!(r.values(), &[7.0]);

        let big = ObservationSet::new(
            vec![6, 10],
            vec![(mi(&[5, 7]), 1.0), (mi(&[1, 10]), 2.0), (mi(&[6, 1]), 3.0)],
        )
        .unwrap();
        let fine = remap_observations(&big, &[vec![3, 2], vec![5, 2]]).unwrap();
        assert_eq!(fine.linear_indices(), big.linear_indices());
        let back = fine.reindex(vec![6, 10]).unwrap();
        assert_eq!(back, big);

        assert!(remap_observations(&big, &[vec![4, 2], vec![5, 2]]).is_err());
    }

    #[test]
    fn holdout_examples() {
        let t = DenseTensor::from_fn(vec![10], |m| m[0] as f64).unwrap();
        let obs = ObservationSet::from_tensor(&t, &(1..=10).collect::<Vec<_>>()).unwrap();
        assert!(holdout_split(&obs, 0.0, 1).is_err());
        assert!(holdout_split(&obs, 1.0, 1).is_err());
        let (train, val) = holdout_split(&obs, 0.1, 42).unwrap();
        assert_eq!(val.len(), 1);
        assert_eq!(train.len(), 9);
        let (train2, val2) = holdout_split(&obs, 0.1, 42).unwrap();
        assert_eq!((train.clone(), val.clone()), (train2, val2));
        let mut all: Vec<usize> = train.linear_indices();
        all.extend(val.linear_indices());
        all.sort();
        assert_eq!(all, (1..=10).collect::<Vec<_>>());
    }
}
