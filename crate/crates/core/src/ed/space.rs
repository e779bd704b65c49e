//! Occupation-number basis and sparse real operators on it.
//!
//! A basis state is a list of boson occupations plus a bitmask of occupied
//! fermion orbitals. The index is `mask * boson_dim + boson_index`, with the
//! boson index in mixed radix and mode 0 most significant. Fermion orbitals
//! are ordered site-major, spin-minor, and the Jordan-Wigner string of orbital
//! j counts the occupied orbitals below j.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    orbitals: usize,
    strides: Vec<usize>,
    boson_dim: usize,
}

impl FockSpace {
    /// `cutoffs[k]` is the highest allowed occupation of boson mode k.
    pub fn new(cutoffs: Vec<usize>, orbitals: usize) -> Result<Self> {
        if orbitals > 24 {
            return Err(Error::Domain(format!("{orbitals} fermion orbitals is too many")));
        }
        let mut strides = vec![1; cutoffs.len()];
        let mut boson_dim: usize = 1;
        for k in (0..cutoffs.len()).rev() {
            strides[k] = boson_dim;
            boson_dim = boson_dim
                .checked_mul(cutoffs[k] + 1)
                .ok_or_else(|| Error::Domain("boson space dimension overflows".into()))?;
        }
        Ok(FockSpace {
            cutoffs,
            orbitals,
            strides,
            boson_dim,
        })
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    pub fn boson_dim(&self) -> usize {
        self.boson_dim
    }

    pub fn dimension(&self) -> usize {
        self.boson_dim << self.orbitals
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index % self.boson_dim) / self.strides[mode] % (self.cutoffs[mode] + 1)
    }

    pub fn mask(&self, index: usize) -> u32 {
        (index / self.boson_dim) as u32
    }

    pub fn index_of(&self, occupations: &[usize], mask: u32) -> usize {
        let b: usize = occupations
            .iter()
            .zip(&self.strides)
            .map(|(n, s)| n * s)
            .sum();
        mask as usize * self.boson_dim + b
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.modes() {
            Ok(())
        } else {
            Err(Error::Domain(format!("boson mode {mode} outside 0..{}", self.modes())))
        }
    }

    fn check_orbital(&self, orbital: usize) -> Result<()> {
        if orbital < self.orbitals {
            Ok(())
        } else {
            Err(Error::Domain(format!("orbital {orbital} outside 0..{}", self.orbitals)))
        }
    }

    pub fn identity(&self) -> SparseOperator {
        let d = self.dimension();
        SparseOperator::from_triplets(d, (0..d).map(|i| (i, i, 1.0)))
    }

    /// b†b of one mode.
    pub fn number(&self, mode: usize) -> Result<SparseOperator> {
        self.check_mode(mode)?;
        let d = self.dimension();
        Ok(SparseOperator::from_triplets(
            d,
            (0..d).map(|i| (i, i, self.occupation(i, mode) as f64)),
        ))
    }

    /// Projector onto occupation `level` of one mode.
    pub fn level_projector(&self, mode: usize, level: usize) -> Result<SparseOperator> {
        self.check_mode(mode)?;
        let d = self.dimension();
        Ok(SparseOperator::from_triplets(
            d,
            (0..d)
                .filter(|&i| self.occupation(i, mode) == level)
                .map(|i| (i, i, 1.0)),
        ))
    }

    /// b + b† of one mode.
    pub fn quadrature(&self, mode: usize) -> Result<SparseOperator> {
        self.check_mode(mode)?;
        let d = self.dimension();
        let stride = self.strides[mode];
        let mut t = Vec::new();
        for i in 0..d {
            let n = self.occupation(i, mode);
            if n < self.cutoffs[mode] {
                let amp = ((n + 1) as f64).sqrt();
                let j = i + stride;
                t.push((j, i, amp));
                t.push((i, j, amp));
            }
        }
        Ok(SparseOperator::from_triplets(d, t))
    }

    /// c_j with its Jordan-Wigner sign.
    pub fn annihilator(&self, orbital: usize) -> Result<SparseOperator> {
        self.check_orbital(orbital)?;
        let d = self.dimension();
        let bit = 1u32 << orbital;
        let mut t = Vec::new();
        for i in 0..d {
            let mask = self.mask(i);
            if mask & bit != 0 {
                let sign = jw_sign(mask, orbital);
                let j = i - (bit as usize) * self.boson_dim;
                t.push((j, i, sign));
            }
        }
        Ok(SparseOperator::from_triplets(d, t))
    }

    /// c_i† c_j + c_j† c_i.
    pub fn hopping(&self, i_orb: usize, j_orb: usize) -> Result<SparseOperator> {
        let ci = self.annihilator(i_orb)?;
        let cj = self.annihilator(j_orb)?;
        let forward = ci.transpose().mul(&cj)?;
        forward.add(&forward.transpose())
    }

    /// n_j = c_j† c_j.
    pub fn density(&self, orbital: usize) -> Result<SparseOperator> {
        self.check_orbital(orbital)?;
        let d = self.dimension();
        let bit = 1u32 << orbital;
        Ok(SparseOperator::from_triplets(
            d,
            (0..d)
                .filter(|&i| self.mask(i) & bit != 0)
                .map(|i| (i, i, 1.0)),
        ))
    }
}

fn jw_sign(mask: u32, orbital: usize) -> f64 {
    if (mask & ((1u32 << orbital) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Real sparse matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseOperator {
    /// Duplicate entries are summed; explicit zeros are dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            *rows[r].entry(c).or_insert(0.0) += v;
        }
        let mut row_start = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for row in rows {
            for (c, v) in row {
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        SparseOperator {
            dim,
            row_start,
            cols,
            vals,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, std::iter::empty())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_start[r]..self.row_start[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn transpose(&self) -> SparseOperator {
        SparseOperator::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v)))
    }

    fn check_dim(&self, other: &SparseOperator) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "operator dimensions differ: {} vs {}",
                self.dim, other.dim
            )))
        }
    }

    pub fn scale(&self, factor: f64) -> SparseOperator {
        SparseOperator {
            dim: self.dim,
            row_start: self.row_start.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(|v| v * factor).collect(),
        }
        .pruned()
    }

    fn pruned(self) -> SparseOperator {
        if self.vals.iter().all(|v| *v != 0.0) {
            self
        } else {
            SparseOperator::from_triplets(self.dim, self.triplets().collect::<Vec<_>>())
        }
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other)?;
        Ok(SparseOperator::from_triplets(
            self.dim,
            self.triplets().chain(other.triplets()),
        ))
    }

    pub fn mul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other)?;
        let mut t = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        Ok(SparseOperator::from_triplets(self.dim, t))
    }

    /// max |A_ij − A_ji|.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }
}
