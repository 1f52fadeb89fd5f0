//! Density matrices, tuples, channels, POVMs and seeded random generators.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, diag_real, frobenius, identity, kron, outer, ComplexMatrix, HermitianMatrix};

/// Tolerance for PSD and unit-trace checks on density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Tolerance for probability vectors summing to one.
pub const PROB_TOL: f64 = 1e-12;

/// Seeded generator used for every random object in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for `index` under `base` (splitmix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: HermitianMatrix,
    sqrt: OnceLock<HermitianMatrix>,
}

impl PartialEq for DensityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

impl DensityMatrix {
    /// Validates PSD (min eigenvalue ≥ −1e−10) and unit trace (±1e−10).
    pub fn new(mat: HermitianMatrix) -> Result<Self> {
        let tr = mat.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::invariant("unit trace", format!("trace is {tr}")));
        }
        let min = mat.min_eigenvalue()?;
        if min < -STATE_TOL {
            return Err(Error::invariant("positive semidefinite", format!("minimum eigenvalue {min:e}")));
        }
        Ok(Self { mat, sqrt: OnceLock::new() })
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// Clamps negative eigenvalues to zero and renormalizes the trace, provided
    /// the input is within `tol` of a state.
    pub fn repaired(mat: HermitianMatrix, tol: f64) -> Result<Self> {
        let e = mat.eig()?;
        if e.min() < -tol {
            return Err(Error::invariant("positive semidefinite", format!("minimum eigenvalue {:e}", e.min())));
        }
        let tr = mat.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::invariant("unit trace", format!("trace is {tr}")));
        }
        let clamped = e.reconstruct_with(|x| x.max(0.0));
        let t: f64 = clamped.diagonal().iter().map(|z| z.re).sum();
        if t <= 0.0 {
            return Err(Error::invariant("unit trace", "matrix has no positive part"));
        }
        Self::from_matrix(clamped / c64(t, 0.0))
    }

    /// Renormalizes an operator that is PSD up to rounding (e.g. a channel output).
    pub(crate) fn normalized_from(m: ComplexMatrix) -> Result<Self> {
        let h = HermitianMatrix::new(m)?;
        let tr = h.trace();
        if !(tr > 0.0) {
            return Err(Error::invariant("unit trace", format!("trace is {tr}")));
        }
        Self::new(h.scale(1.0 / tr))
    }

    /// `|ψ><ψ|/<ψ|ψ>`
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("state vector must be nonzero and finite".into()));
        }
        Self::from_matrix(outer(psi, psi) / c64(n, 0.0))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::diagonal(&vec![1.0 / d as f64; d]).expect("maximally mixed state is valid")
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::from_matrix(diag_real(probs))
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.mat
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.mat.matrix()
    }

    /// Cached `ρ^{1/2}`.
    pub fn sqrt(&self) -> Result<&HermitianMatrix> {
        if let Some(s) = self.sqrt.get() {
            return Ok(s);
        }
        let s = self.mat.sqrt()?;
        let _ = self.sqrt.set(s);
        Ok(self.sqrt.get().expect("sqrt cache filled"))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.mat.eigenvalues()
    }

    pub fn purity(&self) -> f64 {
        self.mat.trace_product(&self.mat)
    }

    pub fn rank(&self, tol: f64) -> Result<usize> {
        Ok(self.eigenvalues()?.iter().filter(|&&x| x > tol).count())
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        Self::normalized_from(kron(self.matrix(), other.matrix())?)
    }

    /// `(1−t)ρ + tσ`
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::dims(format!("mixing dimension {} with {}", self.dim(), other.dim())));
        }
        Self::normalized_from(self.matrix() * c64(1.0 - t, 0.0) + other.matrix() * c64(t, 0.0))
    }
}

/// Ordered tuple of `r ≥ 2` density matrices of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTuple {
    states: Vec<DensityMatrix>,
}

impl StateTuple {
    pub fn new(states: Vec<DensityMatrix>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::InvalidArgument(format!("a tuple needs at least 2 states, got {}", states.len())));
        }
        let d = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != d) {
            return Err(Error::dims(format!("states of dimension {d} and {}", bad.dim())));
        }
        Ok(Self { states })
    }

    pub fn from_pure(vectors: &[Vec<Complex64>]) -> Result<Self> {
        Self::new(vectors.iter().map(|v| DensityMatrix::pure(v)).collect::<Result<_>>()?)
    }

    pub fn r(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn get(&self, i: usize) -> &DensityMatrix {
        &self.states[i]
    }

    pub fn into_states(self) -> Vec<DensityMatrix> {
        self.states
    }

    pub fn operators(&self) -> Vec<HermitianMatrix> {
        self.states.iter().map(|s| s.hermitian().clone()).collect()
    }

    /// Tuple of `ρ_i^{⊗n}`.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("tensor power must be at least 1".into()));
        }
        let states = self
            .states
            .iter()
            .map(|s| {
                let mut acc = s.clone();
                for _ in 1..n {
                    acc = acc.kron(s)?;
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        Self::new(states)
    }

    /// Reorders states so that entry `i` is the old state `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.r()];
        for &p in perm {
            if p >= self.r() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
            }
        }
        if perm.len() != self.r() {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
        }
        Self::new(perm.iter().map(|&p| self.states[p].clone()).collect())
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.states[i].clone()).collect())
    }

    pub fn apply_channel(&self, ch: &QuantumChannel) -> Result<Self> {
        Self::new(self.states.iter().map(|s| ch.apply(s)).collect::<Result<_>>()?)
    }

    pub fn extended(&self, more: &[DensityMatrix]) -> Result<Self> {
        let mut states = self.states.clone();
        states.extend_from_slice(more);
        Self::new(states)
    }
}

/// Nonnegative vector summing to one within 1e−12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    probs: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty probability vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::invariant("nonnegative probabilities", format!("entry {p}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > PROB_TOL {
            return Err(Error::invariant("probabilities sum to one", format!("sum is {s}")));
        }
        Ok(Self { probs })
    }

    /// Clamps tiny negatives and divides by the sum.
    pub fn normalized(mut probs: Vec<f64>) -> Result<Self> {
        for p in probs.iter_mut() {
            if *p < 0.0 && *p > -1e-9 {
                *p = 0.0;
            }
        }
        let s: f64 = probs.iter().sum();
        if !(s > 0.0) {
            return Err(Error::invariant("probabilities sum to one", format!("sum is {s}")));
        }
        Self::new(probs.into_iter().map(|p| p / s).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(n: usize, i: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// CPTP map in Kraus form, `d_in → d_out`.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    kraus: Vec<ComplexMatrix>,
    d_in: usize,
    d_out: usize,
}

impl QuantumChannel {
    /// Checks `Σ K† K = I` within 1e−10.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidArgument("no Kraus operators".into()))?;
        let (d_out, d_in) = first.shape();
        if kraus.iter().any(|k| k.shape() != (d_out, d_in)) {
            return Err(Error::dims("Kraus operators of different shapes"));
        }
        let mut sum = ComplexMatrix::zeros(d_in, d_in);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let defect = crate::linalg::max_abs(&(sum - identity(d_in)));
        if defect > STATE_TOL {
            return Err(Error::invariant("Kraus completeness", format!("max deviation {defect:e}")));
        }
        Ok(Self { kraus, d_in, d_out })
    }

    pub fn identity(d: usize) -> Self {
        Self { kraus: vec![identity(d)], d_in: d, d_out: d }
    }

    /// `ρ ↦ Tr[ρ] I/d`
    pub fn completely_depolarizing(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let mut kraus = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut k = ComplexMatrix::zeros(d, d);
                k[(i, j)] = c64(s, 0.0);
                kraus.push(k);
            }
        }
        Self { kraus, d_in: d, d_out: d }
    }

    /// Full dephasing in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        let kraus = (0..d)
            .map(|i| {
                let mut k = ComplexMatrix::zeros(d, d);
                k[(i, i)] = c64(1.0, 0.0);
                k
            })
            .collect();
        Self { kraus, d_in: d, d_out: d }
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// Applies the map to any operator of matching input dimension.
    pub fn apply_operator(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if m.nrows() != self.d_in || m.ncols() != self.d_in {
            return Err(Error::dims(format!("channel input {} vs operator {}x{}", self.d_in, m.nrows(), m.ncols())));
        }
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::normalized_from(self.apply_operator(rho.matrix())?)
    }
}

/// Positive operator-valued measure.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
}

impl Povm {
    /// Checks each element PSD (−1e−10) and the sum equal to identity (1e−10).
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::InvalidArgument("empty POVM".into()))?;
        let d = first.dim();
        let mut sum = ComplexMatrix::zeros(d, d);
        for e in &elements {
            if e.dim() != d {
                return Err(Error::dims("POVM elements of different dimension"));
            }
            let min = e.min_eigenvalue()?;
            if min < -STATE_TOL {
                return Err(Error::invariant(
                    "POVM element positive semidefinite",
                    format!("minimum eigenvalue {min:e}"),
                ));
            }
            sum += e.matrix();
        }
        let defect = crate::linalg::max_abs(&(sum - identity(d)));
        if defect > STATE_TOL {
            return Err(Error::invariant("POVM completeness", format!("max deviation {defect:e}")));
        }
        Ok(Self { elements })
    }

    pub fn computational_basis(d: usize) -> Self {
        let elements = (0..d)
            .map(|i| {
                let mut v = vec![0.0; d];
                v[i] = 1.0;
                HermitianMatrix::from_hermitian_unchecked(diag_real(&v))
            })
            .collect();
        Self { elements }
    }

    /// Projective measurement onto the columns of a unitary.
    pub fn from_basis(u: &ComplexMatrix) -> Result<Self> {
        let elements = (0..u.ncols())
            .map(|j| {
                let col: Vec<Complex64> = u.column(j).iter().copied().collect();
                HermitianMatrix::new(outer(&col, &col))
            })
            .collect::<Result<_>>()?;
        Self::new(elements)
    }

    /// Naimark construction: rows of the `(d·n) × d` isometry `v` split into `n`
    /// blocks `B_y`, with elements `B_y† B_y`.
    pub fn from_isometry(v: &ComplexMatrix, n_outcomes: usize) -> Result<Self> {
        let d = v.ncols();
        if v.nrows() != d * n_outcomes {
            return Err(Error::dims(format!(
                "isometry of {} rows for {n_outcomes} outcomes of dimension {d}",
                v.nrows()
            )));
        }
        let elements = (0..n_outcomes)
            .map(|y| {
                let b = v.rows(y * d, d);
                HermitianMatrix::from_hermitian_unchecked(b.adjoint() * b)
            })
            .collect();
        Self::new(elements)
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Raw outcome weights `Tr[Λ_y ρ]` (not renormalized).
    pub fn outcome_weights(&self, rho: &HermitianMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::dims(format!("POVM dimension {} vs state {}", self.dim(), rho.dim())));
        }
        Ok(self.elements.iter().map(|e| e.trace_product(rho).max(0.0)).collect())
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<ProbabilityVector> {
        ProbabilityVector::normalized(self.outcome_weights(rho.hermitian())?)
    }
}

/// `(√ρ ⊗ I)|Γ>` with `|Γ> = Σ_i |ii>`; component `(a, b)` sits at `a·d + b`.
pub fn canonical_purification(rho: &DensityMatrix) -> Result<Vec<Complex64>> {
    let s = rho.sqrt()?.matrix();
    let d = rho.dim();
    Ok((0..d * d).map(|k| s[(k / d, k % d)]).collect())
}

/// Diagonal states with the given spectra.
pub fn commuting_tuple_from_probs(dists: &[ProbabilityVector]) -> Result<StateTuple> {
    let n = dists.first().map(|p| p.len()).unwrap_or(0);
    if dists.iter().any(|p| p.len() != n) {
        return Err(Error::dims("probability vectors of different lengths"));
    }
    StateTuple::new(dists.iter().map(|p| DensityMatrix::diagonal(p.probs())).collect::<Result<_>>()?)
}

/// `Σ_x p(x) |x><x| ⊗ ρ_x`, classical register first.
pub fn cq_state(weights: &ProbabilityVector, states: &[DensityMatrix]) -> Result<DensityMatrix> {
    if weights.len() != states.len() {
        return Err(Error::dims(format!("{} weights for {} states", weights.len(), states.len())));
    }
    let d = states.first().map(|s| s.dim()).unwrap_or(0);
    if states.iter().any(|s| s.dim() != d) {
        return Err(Error::dims("cq blocks of different dimension"));
    }
    let n = states.len();
    let mut m = ComplexMatrix::zeros(n * d, n * d);
    for (x, (p, s)) in weights.probs().iter().zip(states).enumerate() {
        m.view_mut((x * d, x * d), (d, d)).copy_from(&(s.matrix() * c64(*p, 0.0)));
    }
    DensityMatrix::normalized_from(m)
}

fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c64(re, im)
}

/// Complex Ginibre matrix with standard normal real and imaginary parts.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = gaussian_complex(rng);
        }
    }
    m
}

/// Haar-random unit vector.
pub fn random_pure_vector(d: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..d).map(|_| gaussian_complex(rng)).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Haar-random isometry `rows × cols` (`rows ≥ cols`) via QR with phase correction.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> Result<ComplexMatrix> {
    if rows < cols {
        return Err(Error::InvalidArgument(format!("isometry {rows}x{cols} needs rows >= cols")));
    }
    let g = ginibre(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    Ok(q)
}

pub fn random_unitary(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    random_isometry(d, d, rng).expect("square isometry")
}

/// Ginibre-induced state `G G† / Tr` with `G` of size `d × rank`.
pub fn random_density_with(d: usize, rank: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    if rank == 0 || rank > d {
        return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={d}")));
    }
    let g = ginibre(d, rank, rng);
    DensityMatrix::normalized_from(&g * g.adjoint())
}

pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(d, rank, &mut rng_from_seed(seed))
}

/// Stinespring channel: a random isometry `d_in → d_out ⊗ env` followed by
/// tracing out the environment.
pub fn random_channel_with(d_in: usize, d_out: usize, env_dim: usize, rng: &mut impl Rng) -> Result<QuantumChannel> {
    if d_in == 0 || d_out == 0 || env_dim == 0 {
        return Err(Error::InvalidArgument("channel dimensions must be positive".into()));
    }
    if d_out * env_dim < d_in {
        return Err(Error::InvalidArgument(format!(
            "output {d_out} times environment {env_dim} is smaller than input {d_in}"
        )));
    }
    let v = random_isometry(d_out * env_dim, d_in, rng)?;
    let kraus = (0..env_dim).map(|k| DMatrix::from_fn(d_out, d_in, |o, j| v[(o * env_dim + k, j)])).collect();
    QuantumChannel::new(kraus)
}

pub fn random_channel(d_in: usize, d_out: usize, env_dim: usize, seed: u64) -> Result<QuantumChannel> {
    random_channel_with(d_in, d_out, env_dim, &mut rng_from_seed(seed))
}

/// Uniform (flat Dirichlet) probability vector.
pub fn random_probability_vector(n: usize, rng: &mut impl Rng) -> ProbabilityVector {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    ProbabilityVector::normalized(w).expect("exponential weights are positive")
}

/// Like [`random_probability_vector`] but each entry is zeroed with probability
/// `zero_prob` (at least one entry survives).
pub fn random_sparse_probability_vector(n: usize, zero_prob: f64, rng: &mut impl Rng) -> ProbabilityVector {
    let keep = rng.random_range(0..n);
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let x: f64 = Exp1.sample(rng);
            if i != keep && rng.random::<f64>() < zero_prob {
                0.0
            } else {
                x
            }
        })
        .collect();
    ProbabilityVector::normalized(w).expect("at least one positive weight")
}

pub fn random_povm(d: usize, n_outcomes: usize, rng: &mut impl Rng) -> Result<Povm> {
    Povm::from_isometry(&random_isometry(d * n_outcomes, d, rng)?, n_outcomes)
}

/// `‖[A, B]‖_F`
pub fn commutator_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    frobenius(&(a * b - b * a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, partial_trace, Keep};

    #[test]
    fn purification_examples() {
        let zero = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let v = canonical_purification(&zero).unwrap();
        assert!((v[0] - c64(1.0, 0.0)).norm() < 1e-14);
        assert!(v[1..].iter().all(|z| z.norm() < 1e-14));

        let mixed = DensityMatrix::maximally_mixed(2);
        let v = canonical_purification(&mixed).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let expect = [h, 0.0, 0.0, h];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - c64(b, 0.0)).norm() < 1e-14);
        }

        for seed in 0..20 {
            let rho = random_density(3, 1 + (seed as usize % 3), seed).unwrap();
            let v = canonical_purification(&rho).unwrap();
            let joint = HermitianMatrix::new(outer(&v, &v)).unwrap();
            let red = partial_trace(&joint, (3, 3), Keep::A).unwrap();
            assert!(frobenius(&(red.matrix() - rho.matrix())) < 1e-9);
        }
    }

    #[test]
    fn random_density_examples() {
        let pure = random_density(4, 1, 11).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-10);
        let full = random_density(4, 4, 12).unwrap();
        assert!(full.eigenvalues().unwrap()[0] > 0.0);
        let a = random_density(3, 2, 99).unwrap();
        let b = random_density(3, 2, 99).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(random_density(3, 2, 5).unwrap().rank(1e-9).unwrap(), 2);
        assert!(random_density(3, 4, 1).is_err());
    }

    #[test]
    fn generator_invariants_hold_for_many_draws() {
        let mut rng = rng_from_seed(2024);
        for i in 0..10_000 {
            let d = 2 + i % 3;
            let rank = 1 + (i / 3) % d;
            let rho = random_density_with(d, rank, &mut rng).unwrap();
            assert!((rho.hermitian().trace() - 1.0).abs() <= STATE_TOL);
            assert!(rho.eigenvalues().unwrap()[0] >= -STATE_TOL);
            let p = random_sparse_probability_vector(d + 1, 0.3, &mut rng);
            assert!(ProbabilityVector::new(p.probs().to_vec()).is_ok());
        }
    }

    #[test]
    fn unitary_channel_preserves_spectrum() {
        let ch = random_channel(3, 3, 1, 7).unwrap();
        let rho = random_density(3, 3, 8).unwrap();
        let out = ch.apply(&rho).unwrap();
        for (a, b) in rho.eigenvalues().unwrap().iter().zip(out.eigenvalues().unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_examples() {
        let ch = random_channel(3, 2, 4, 1).unwrap();
        let out = ch.apply(&DensityMatrix::maximally_mixed(3)).unwrap();
        assert_eq!(out.dim(), 2);
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            let rho = random_density_with(3, 2, &mut rng).unwrap();
            let raw = ch.apply_operator(rho.matrix()).unwrap();
            let tr: f64 = raw.diagonal().iter().map(|z| z.re).sum();
            assert!((tr - 1.0).abs() < 1e-10);
            assert!(HermitianMatrix::new(raw).unwrap().min_eigenvalue().unwrap() >= -1e-9);
        }
        assert!(random_channel(4, 1, 2, 0).is_err());

        let rho = random_density(3, 3, 4).unwrap();
        let id = QuantumChannel::identity(3).apply(&rho).unwrap();
        assert!(max_abs(&(id.matrix() - rho.matrix())) < 1e-15);
        let dep = QuantumChannel::completely_depolarizing(3).apply(&rho).unwrap();
        assert!(max_abs(&(dep.matrix() - DensityMatrix::maximally_mixed(3).matrix())) < 1e-15);
        let q = random_density(2, 2, 5).unwrap();
        let dph = QuantumChannel::dephasing(2).apply(&q).unwrap();
        assert!((dph.matrix()[(0, 0)] - q.matrix()[(0, 0)]).norm() < 1e-15);
        assert!((dph.matrix()[(1, 1)] - q.matrix()[(1, 1)]).norm() < 1e-15);
        assert_eq!(dph.matrix()[(0, 1)], c64(0.0, 0.0));
    }

    #[test]
    fn povm_examples() {
        let rho = DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let p = Povm::computational_basis(3).apply(&rho).unwrap();
        assert_eq!(p.probs(), &[0.2, 0.3, 0.5]);
        let trivial = Povm::new(vec![HermitianMatrix::identity(3)]).unwrap();
        assert_eq!(trivial.apply(&rho).unwrap().probs(), &[1.0]);

        let mut rng = rng_from_seed(17);
        let povm = random_povm(2, 4, &mut rng).unwrap();
        let sigma = random_density(2, 2, 18).unwrap();
        let p = povm.apply(&sigma).unwrap();
        for (e, &py) in povm.elements().iter().zip(p.probs()) {
            let mut direct = c64(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    direct += e.matrix()[(i, j)] * sigma.matrix()[(j, i)];
                }
            }
            assert!((direct.re - py).abs() < 1e-12);
        }
    }

    #[test]
    fn commuting_tuple_examples() {
        let t = commuting_tuple_from_probs(&[
            ProbabilityVector::new(vec![1.0, 0.0]).unwrap(),
            ProbabilityVector::new(vec![0.5, 0.5]).unwrap(),
        ])
        .unwrap();
        assert_eq!(t.get(0).matrix(), &diag_real(&[1.0, 0.0]));
        let p = |v: Vec<f64>| ProbabilityVector::new(v).unwrap();
        let t = commuting_tuple_from_probs(&[p(vec![0.0, 0.5, 0.5]), p(vec![0.5, 0.0, 0.5]), p(vec![0.5, 0.5, 0.0])])
            .unwrap();
        assert_eq!(t.r(), 3);
        assert_eq!(t.dim(), 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(commutator_norm(t.get(i).matrix(), t.get(j).matrix()), 0.0);
            }
        }
    }

    #[test]
    fn cq_state_examples() {
        let rho = random_density(2, 2, 1).unwrap();
        let single = cq_state(&ProbabilityVector::uniform(1), std::slice::from_ref(&rho)).unwrap();
        assert!(max_abs(&(single.matrix() - rho.matrix())) < 1e-15);

        let a = DensityMatrix::pure(&[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
        let b = DensityMatrix::pure(&[c64(0.0, 0.0), c64(1.0, 0.0)]).unwrap();
        let cq = cq_state(&ProbabilityVector::uniform(2), &[a, b]).unwrap();
        assert!((cq.hermitian().trace() - 1.0).abs() < 1e-15);

        let w = ProbabilityVector::new(vec![0.25, 0.75]).unwrap();
        let s1 = random_density(2, 2, 2).unwrap();
        let s2 = random_density(2, 1, 3).unwrap();
        let cq = cq_state(&w, &[s1.clone(), s2.clone()]).unwrap();
        let red = partial_trace(cq.hermitian(), (2, 2), Keep::B).unwrap();
        let expect = s1.matrix() * c64(0.25, 0.0) + s2.matrix() * c64(0.75, 0.0);
        assert!(frobenius(&(red.matrix() - expect)) < 1e-14);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(DensityMatrix::from_matrix(diag_real(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::from_matrix(diag_real(&[1.5, -0.5])).is_err());
        assert!(StateTuple::new(vec![DensityMatrix::maximally_mixed(2)]).is_err());
        assert!(StateTuple::new(vec![DensityMatrix::maximally_mixed(2), DensityMatrix::maximally_mixed(3)]).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.4]).is_err());
    }
}
