//! Block diagonalization, thermal weights and Lehmann sums.

use std::collections::BTreeMap;
use std::io::Write;

use faer::{Mat, Side};
use num_complex::Complex64;

use super::space::SparseOperator;
use crate::error::{Error, Result};
use crate::grid::{CorrelatorSeries, MatsubaraGrid, Statistics};

/// Largest tolerated |H_ij − H_ji|.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Eigenstates whose Gibbs weight falls below this fraction of Z are treated
/// as unoccupied: they only enter Lehmann sums paired with occupied states.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-18;

#[derive(Clone, Debug)]
pub struct Block {
    /// Basis indices spanned by this block.
    pub states: Vec<usize>,
    pub energies: Vec<f64>,
    /// Columns are eigenvectors over `states`.
    pub vectors: Mat<f64>,
}

/// ⟨k|A|s⟩ and ⟨s|A|k⟩ for every eigenstate k and every occupied eigenstate s.
#[derive(Clone, Debug)]
pub struct OperatorElements {
    ket: Mat<f64>,
    bra: Option<Mat<f64>>,
}

impl OperatorElements {
    /// ⟨k|A|s⟩, s occupied.
    pub fn ket(&self, k: usize, s: usize) -> f64 {
        self.ket[(k, s)]
    }

    /// ⟨s|A|k⟩, s occupied.
    pub fn bra(&self, k: usize, s: usize) -> f64 {
        match &self.bra {
            Some(b) => b[(k, s)],
            None => self.ket[(k, s)],
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.bra.is_none()
    }
}

/// Full spectrum of a Hamiltonian at fixed β, with cached matrix elements.
#[derive(Clone, Debug)]
pub struct SpectralData {
    beta: f64,
    blocks: Vec<Block>,
    /// (block, local index) of each eigenstate, ascending in energy.
    order: Vec<(usize, usize)>,
    energies: Vec<f64>,
    /// e^{−β(E − E₀)}.
    weights: Vec<f64>,
    weight_sum: f64,
    occupied: usize,
    elements: BTreeMap<String, OperatorElements>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups basis states into the connected components of H.
fn blocks_of(h: &SparseOperator) -> Vec<Vec<usize>> {
    let mut uf = UnionFind((0..h.dim()).collect());
    for (r, c, _) in h.triplets() {
        uf.union(r, c);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..h.dim() {
        let root = uf.find(i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Exact eigendecomposition of a real symmetric sparse Hamiltonian.
pub fn diagonalize(h: &SparseOperator, beta: f64) -> Result<SpectralData> {
    diagonalize_with_floor(h, beta, DEFAULT_WEIGHT_FLOOR)
}

/// As [`diagonalize`]; `weight_floor = 0` keeps every state occupied.
pub fn diagonalize_with_floor(h: &SparseOperator, beta: f64, weight_floor: f64) -> Result<SpectralData> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be finite and >= 0, got {beta}")));
    }
    if h.dim() == 0 {
        return Err(Error::Domain("empty Hamiltonian".into()));
    }
    let asymmetry = h.asymmetry();
    if asymmetry > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { asymmetry });
    }
    let mut blocks = Vec::new();
    for states in blocks_of(h) {
        let n = states.len();
        let local: BTreeMap<usize, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let mut m = Mat::<f64>::zeros(n, n);
        for (i, &s) in states.iter().enumerate() {
            for (c, v) in h.row(s) {
                m[(i, local[&c])] = v;
            }
        }
        let eig = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Convergence(format!("eigensolver failed: {e:?}")))?;
        let s = eig.S().column_vector();
        let energies = (0..n).map(|i| s[i]).collect();
        blocks.push(Block {
            states,
            energies,
            vectors: eig.U().to_owned(),
        });
    }
    Ok(SpectralData::from_blocks(blocks, beta, weight_floor))
}

impl SpectralData {
    fn from_blocks(blocks: Vec<Block>, beta: f64, weight_floor: f64) -> Self {
        let mut order: Vec<(usize, usize)> = blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| (0..blk.energies.len()).map(move |i| (b, i)))
            .collect();
        order.sort_by(|x, y| {
            let ex = blocks[x.0].energies[x.1];
            let ey = blocks[y.0].energies[y.1];
            ex.total_cmp(&ey).then(x.cmp(y))
        });
        let energies: Vec<f64> = order.iter().map(|&(b, i)| blocks[b].energies[i]).collect();
        let e0 = energies[0];
        let weights: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
        let weight_sum: f64 = weights.iter().sum();
        let occupied = weights
            .iter()
            .take_while(|w| **w >= weight_floor * weight_sum)
            .count()
            .max(1);
        SpectralData {
            beta,
            blocks,
            order,
            energies,
            weights,
            weight_sum,
            occupied,
            elements: BTreeMap::new(),
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Eigenvalues, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Z = Σ e^{−βE_m}.
    pub fn partition_function(&self) -> f64 {
        self.weight_sum * (-self.beta * self.ground_energy()).exp()
    }

    /// Gibbs probability of eigenstate k.
    pub fn probability(&self, k: usize) -> f64 {
        self.weights[k] / self.weight_sum
    }

    /// Number of eigenstates treated as occupied.
    pub fn occupied(&self) -> usize {
        self.occupied
    }

    /// Eigenvector of state k over the full basis.
    pub fn eigenvector(&self, k: usize, dim: usize) -> Vec<f64> {
        let (b, i) = self.order[k];
        let blk = &self.blocks[b];
        let mut v = vec![0.0; dim];
        for (r, &s) in blk.states.iter().enumerate() {
            v[s] = blk.vectors[(r, i)];
        }
        v
    }

    /// Thermal expectation of a diagonal-in-basis observable.
    pub fn diagonal_expectation(&self, diag: impl Fn(usize) -> f64) -> f64 {
        (0..self.occupied)
            .map(|k| {
                let (b, i) = self.order[k];
                let blk = &self.blocks[b];
                let amp: f64 = blk
                    .states
                    .iter()
                    .enumerate()
                    .map(|(r, &s)| blk.vectors[(r, i)].powi(2) * diag(s))
                    .sum();
                self.weights[k] * amp
            })
            .sum::<f64>()
            / self.weight_sum
    }

    fn project(&self, op: &SparseOperator) -> Mat<f64> {
        let dim = self.dimension();
        let mut out = Mat::<f64>::zeros(dim, self.occupied);
        // position of each global eigenstate, per block
        let mut global = vec![Vec::new(); self.blocks.len()];
        for (k, &(b, i)) in self.order.iter().enumerate() {
            if global[b].len() <= i {
                global[b].resize(i + 1, 0);
            }
            global[b][i] = k;
        }
        let mut by_block: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for s in 0..self.occupied {
            by_block.entry(self.order[s].0).or_default().push(s);
        }
        for sig in by_block.into_values() {
            // A·v_s over the full basis, one column per occupied state in block q
            let mut applied = Mat::<f64>::zeros(dim, sig.len());
            for (col, &s) in sig.iter().enumerate() {
                let v = self.eigenvector(s, dim);
                let av = op.apply(&v);
                for (r, x) in av.into_iter().enumerate() {
                    applied[(r, col)] = x;
                }
            }
            for (p, bp) in self.blocks.iter().enumerate() {
                let rows = Mat::<f64>::from_fn(bp.states.len(), sig.len(), |r, c| applied[(bp.states[r], c)]);
                if (0..rows.nrows()).all(|r| (0..rows.ncols()).all(|c| rows[(r, c)] == 0.0)) {
                    continue;
                }
                let proj: Mat<f64> = bp.vectors.as_ref().transpose() * rows.as_ref();
                for i in 0..proj.nrows() {
                    let k = global[p][i];
                    for c in 0..sig.len() {
                        out[(k, sig[c])] = proj[(i, c)];
                    }
                }
            }
        }
        out
    }

    /// Caches the matrix elements of `op` under `name`.
    pub fn register(&mut self, name: &str, op: &SparseOperator) -> Result<()> {
        if op.dim() != self.dimension() {
            return Err(Error::Domain(format!(
                "operator dimension {} does not match spectrum dimension {}",
                op.dim(),
                self.dimension()
            )));
        }
        let ket = self.project(op);
        let bra = if op.asymmetry() == 0.0 {
            None
        } else {
            Some(self.project(&op.transpose()))
        };
        self.elements.insert(name.to_string(), OperatorElements { ket, bra });
        Ok(())
    }

    pub fn elements(&self, name: &str) -> Result<&OperatorElements> {
        self.elements
            .get(name)
            .ok_or_else(|| Error::Domain(format!("operator `{name}` is not registered")))
    }

    /// ⟨A⟩ in the Gibbs state.
    pub fn thermal_mean(&self, name: &str) -> Result<f64> {
        let el = self.elements(name)?;
        Ok((0..self.occupied)
            .map(|s| self.weights[s] * el.ket(s, s))
            .sum::<f64>()
            / self.weight_sum)
    }

    /// Full matrix ⟨k|A|k′⟩ in the eigenbasis; needs every state occupied.
    pub fn dense_elements(&self, name: &str) -> Result<Mat<f64>> {
        if self.occupied != self.dimension() {
            return Err(Error::Unsupported(
                "dense matrix elements need a spectrum diagonalized without a weight floor".into(),
            ));
        }
        Ok(self.elements(name)?.ket.clone())
    }

    /// Lehmann sum for −∫₀^β e^{iωₙτ}⟨T A(τ)B⟩ with A → A − a, B → B − b.
    pub fn lehmann_correlator(
        &self,
        a_name: &str,
        b_name: &str,
        shifts: (f64, f64),
        grid: &MatsubaraGrid,
    ) -> Result<CorrelatorSeries> {
        let a = self.elements(a_name)?;
        let b = self.elements(b_name)?;
        let hermitian_pair = a_name == b_name && shifts.0 == shifts.1 && a.is_symmetric();
        let xi = grid.statistics().sign();
        let beta = self.beta;
        if grid.beta().to_bits() != beta.to_bits() {
            return Err(Error::Domain(format!(
                "grid beta {} differs from spectrum beta {beta}",
                grid.beta()
            )));
        }
        let bosonic = grid.statistics() == Statistics::Bosonic;
        let dim = self.dimension();
        let occ = self.occupied;
        // ordered pairs (m, m′) with at least one occupied state
        let mut terms: Vec<(f64, f64, f64, f64)> = Vec::new(); // (amp, w_m, w_m′, Δ)
        for m in 0..occ {
            for mp in 0..dim {
                let mut am = a.bra(mp, m);
                let mut bm = b.ket(mp, m);
                if mp == m {
                    am -= shifts.0;
                    bm -= shifts.1;
                }
                let amp = am * bm;
                if amp != 0.0 {
                    terms.push((amp, self.weights[m], self.weights[mp], self.energies[mp] - self.energies[m]));
                }
            }
        }
        for m in occ..dim {
            for mp in 0..occ {
                let amp = a.ket(m, mp) * b.bra(m, mp);
                if amp != 0.0 {
                    terms.push((amp, self.weights[m], self.weights[mp], self.energies[mp] - self.energies[m]));
                }
            }
        }
        let z = self.weight_sum;
        let value = |nu: f64| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(amp, wm, wmp, delta) in &terms {
                if bosonic && nu == 0.0 && (beta * delta).abs() < 1.0 {
                    // (w_m − w_m′)/(−Δ) = w_m·expm1(−βΔ)/Δ → −β w_m
                    let ratio = if delta == 0.0 {
                        -beta
                    } else {
                        (-beta * delta).exp_m1() / delta
                    };
                    acc += amp * wm * ratio;
                } else {
                    acc += amp * (wm - xi * wmp) / Complex64::new(-delta, nu);
                }
            }
            acc / z
        };
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        if hermitian_pair {
            for p in grid.positive_positions().collect::<Vec<_>>() {
                let v = value(grid.frequency(p));
                values[p] = v;
                values[grid.mirror(p)] = v.conj();
            }
            if bosonic {
                let p0 = grid.position(0).expect("bosonic grid has n = 0");
                values[p0] = Complex64::from(value(0.0).re);
            }
        } else {
            for (p, v) in values.iter_mut().enumerate() {
                *v = value(grid.frequency(p));
            }
        }
        CorrelatorSeries::new(*grid, values, format!("<{a_name};{b_name}>"))
    }

    /// Connected autocorrelator of a registered Hermitian operator.
    pub fn lehmann_autocorrelator(&self, name: &str, grid: &MatsubaraGrid) -> Result<CorrelatorSeries> {
        let mean = self.thermal_mean(name)?;
        self.lehmann_correlator(name, name, (mean, mean), grid)
    }

    /// Writes `index,block,energy,probability` rows.
    pub fn write_energies_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "block", "energy", "probability"])?;
        for (k, &(b, _)) in self.order.iter().enumerate() {
            w.write_record([
                k.to_string(),
                b.to_string(),
                format!("{:.17e}", self.energies[k]),
                format!("{:.17e}", self.probability(k)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `k,s,value` rows for nonzero ⟨k|A|s⟩ with s occupied.
    pub fn write_elements_csv<W: Write>(&self, name: &str, writer: W) -> Result<()> {
        let el = self.elements(name)?;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "s", "value"])?;
        for s in 0..self.occupied {
            for k in 0..self.dimension() {
                let v = el.ket(k, s);
                if v.abs() > 1e-14 {
                    w.write_record([k.to_string(), s.to_string(), format!("{v:.17e}")])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}
