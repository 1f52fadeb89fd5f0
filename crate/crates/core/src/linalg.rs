//! Dense complex linear algebra on small Hermitian matrices.
//!
//! Everything downstream (fidelities, SDP builders, random ensembles) acts on
//! Hermitian arguments, so matrix functions are evaluated exclusively through
//! the spectral decomposition computed by a cyclic Jacobi eigensolver.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row/column indexed.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Eigenvalues in `[-CLAMP_TOL, 0)` are treated as zero before fractional powers.
pub const CLAMP_TOL: f64 = 1e-10;
/// Relative magnitude below which eigenvalues are zeroed before fractional powers.
pub const NOISE_FLOOR: f64 = 1e-14;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-13;
const RECONSTRUCTION_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entrywise modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c64(values[i], 0.0) } else { c64(0.0, 0.0) })
}

/// `|u><v|`
pub fn outer(u: &[Complex64], v: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
}

pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Spectral decomposition `M = V diag(values) V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    /// Rebuild `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= w);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Cyclic Jacobi eigensolver for a complex Hermitian matrix.
///
/// The input is symmetrized first. Fails with `NumericalFailure` when the
/// off-diagonal mass does not fall below `1e-13 ‖M‖_F` within 100 sweeps or the
/// reconstruction residual exceeds `1e-10 (1 + ‖M‖_F)`.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Eigh> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::dims(format!("eigendecomposition of {}x{} matrix", n, m.ncols())));
    }
    if !is_finite(m) {
        return Err(Error::invariant("finite entries", "matrix contains NaN or Inf"));
    }
    let mut a = (m + m.adjoint()) * c64(0.5, 0.0);
    let mut v = ComplexMatrix::identity(n, n);
    let fro = frobenius(&a);
    if n == 0 || fro == 0.0 {
        return Ok(Eigh { values: vec![0.0; n], vectors: v });
    }
    let tol = JACOBI_OFF_TOL * fro;

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let zeta = (aqq - app) / (2.0 * g);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                let e = apq / g;
                let ebar = e.conj();
                // G = [[c, s], [-ē s, ē c]] acting on columns p, q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * cs - akq * ebar * sn;
                    a[(k, q)] = akp * sn + akq * ebar * cs;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * cs - e * sn * aqk;
                    a[(q, k)] = apk * sn + e * cs * aqk;
                }
                a[(p, q)] = c64(0.0, 0.0);
                a[(q, p)] = c64(0.0, 0.0);
                a[(p, p)] = c64(app - t * g, 0.0);
                a[(q, q)] = c64(aqq + t * g, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * cs - vkq * ebar * sn;
                    v[(k, q)] = vkp * sn + vkq * ebar * cs;
                }
            }
        }
    }
    if !converged {
        let off = off_norm(&a);
        if off > tol {
            return Err(Error::NumericalFailure {
                what: "Jacobi eigensolver did not converge".into(),
                residual: off / fro,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    let eigh = Eigh { values, vectors };

    let sym = (m + m.adjoint()) * c64(0.5, 0.0);
    let residual = frobenius(&(&sym - eigh.reconstruct_with(|x| x)));
    if residual > RECONSTRUCTION_TOL * (1.0 + fro) {
        return Err(Error::NumericalFailure { what: "eigendecomposition reconstruction".into(), residual });
    }
    Ok(eigh)
}

/// Dense complex Hermitian matrix with a lazily filled eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    mat: ComplexMatrix,
    eig: OnceLock<Eigh>,
}

impl PartialEq for HermitianMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

impl HermitianMatrix {
    /// Symmetrizes `M ← (M + M†)/2`. Rejects non-square or non-finite input.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::dims(format!("Hermitian matrix must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("Hermitian matrix must have positive dimension".into()));
        }
        if !is_finite(&m) {
            return Err(Error::invariant("finite entries", "matrix contains NaN or Inf"));
        }
        let mat = (&m + m.adjoint()) * c64(0.5, 0.0);
        Ok(Self { mat, eig: OnceLock::new() })
    }

    /// Wraps a matrix already known to be Hermitian up to rounding.
    pub(crate) fn from_hermitian_unchecked(m: ComplexMatrix) -> Self {
        let mat = (&m + m.adjoint()) * c64(0.5, 0.0);
        Self { mat, eig: OnceLock::new() }
    }

    pub fn from_real_diagonal(values: &[f64]) -> Result<Self> {
        Self::new(diag_real(values))
    }

    pub fn identity(d: usize) -> Self {
        Self::from_hermitian_unchecked(identity(d))
    }

    pub fn zeros(d: usize) -> Self {
        Self::from_hermitian_unchecked(ComplexMatrix::zeros(d, d))
    }

    /// Builds from row-major real and imaginary grids.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let d = re.len();
        if im.len() != d || re.iter().chain(im).any(|row| row.len() != d) {
            return Err(Error::dims("real and imaginary grids must both be d x d"));
        }
        Self::new(ComplexMatrix::from_fn(d, d, |i, j| c64(re[i][j], im[i][j])))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn eig(&self) -> Result<&Eigh> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = eig_hermitian(&self.mat)?;
        let _ = self.eig.set(e);
        Ok(self.eig.get().expect("eigendecomposition cache filled"))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eig()?.values.clone())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.min())
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    /// `max |M_ij - conj(M_ji)|`
    pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
        max_abs(&(m - m.adjoint()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_hermitian_unchecked(&self.mat * c64(factor, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_hermitian_unchecked(&self.mat + &other.mat))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_hermitian_unchecked(&self.mat - &other.mat))
    }

    /// `M + shift·I`
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.mat.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += c64(shift, 0.0);
        }
        Self::from_hermitian_unchecked(m)
    }

    /// `U M U†` for any (rectangular) `U`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.ncols() != self.dim() {
            return Err(Error::dims(format!("conjugation by {}x{} of dimension {}", u.nrows(), u.ncols(), self.dim())));
        }
        Ok(Self::from_hermitian_unchecked(u * &self.mat * u.adjoint()))
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        Ok(Self::from_hermitian_unchecked(kron(&self.mat, &other.mat)?))
    }

    /// `Re Tr[A B]` (exact for Hermitian arguments).
    pub fn trace_product(&self, other: &Self) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self.mat[(i, j)] * other.mat[(j, i)]).re;
            }
        }
        s
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::dims(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(())
    }

    /// Fractional or integer power. Eigenvalues in `[-1e-10, 0)` are clamped to
    /// zero for `p > 0`; negative powers require a positive definite matrix.
    pub fn powf(&self, p: f64) -> Result<Self> {
        if p > 0.0 {
            let floor = self.noise_floor()?;
            matrix_function(self, "power", |x| clamp_nonneg(x).map(|x| if x <= floor { 0.0 } else { x.powf(p) }), 0.0)
        } else {
            matrix_function(self, "negative power", |x| (x > 0.0).then(|| x.powf(p)), 0.0)
        }
    }

    pub fn sqrt(&self) -> Result<Self> {
        let floor = self.noise_floor()?;
        matrix_function(self, "sqrt", |x| clamp_nonneg(x).map(|x| if x <= floor { 0.0 } else { x.sqrt() }), 0.0)
    }

    /// Eigenvalues this close to zero are rounding noise; fractional powers
    /// would amplify them (`(1e-16)^{1/8} = 1e-2`), so they are zeroed first.
    fn noise_floor(&self) -> Result<f64> {
        let e = self.eig()?;
        Ok(NOISE_FLOOR * e.min().abs().max(e.max().abs()))
    }

    pub fn log(&self) -> Result<Self> {
        matrix_function(self, "log", |x| (x > 0.0).then(|| x.ln()), 0.0)
    }

    pub fn exp(&self) -> Result<Self> {
        matrix_function(self, "exp", |x| Some(x.exp()), 0.0)
    }

    /// Orthogonal projection onto eigenvectors with eigenvalue above `tol`.
    pub fn support_projection(&self, tol: f64) -> Result<Self> {
        let e = self.eig()?;
        Ok(Self::from_hermitian_unchecked(e.reconstruct_with(|x| if x > tol { 1.0 } else { 0.0 })))
    }
}

fn clamp_nonneg(x: f64) -> Option<f64> {
    if x >= 0.0 {
        Some(x)
    } else if x >= -CLAMP_TOL {
        Some(0.0)
    } else {
        None
    }
}

/// `V f(Λ + shift) V†`. `f` returns `None` outside its domain, which is
/// reported as a `Domain` error carrying the offending shifted eigenvalue.
pub fn matrix_function(
    m: &HermitianMatrix,
    name: &'static str,
    f: impl Fn(f64) -> Option<f64>,
    domain_shift: f64,
) -> Result<HermitianMatrix> {
    let e = m.eig()?;
    let mut mapped = Vec::with_capacity(e.values.len());
    for &lambda in &e.values {
        let x = lambda + domain_shift;
        match f(x) {
            Some(y) if y.is_finite() => mapped.push(y),
            _ => return Err(Error::Domain { function: name, eigenvalue: x }),
        }
    }
    let eigh = Eigh { values: mapped, vectors: e.vectors.clone() };
    let out = HermitianMatrix::from_hermitian_unchecked(eigh.reconstruct_with(|x| x));
    Ok(out)
}

/// Singular values of an arbitrary complex matrix, descending.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !is_finite(m) {
        return Err(Error::invariant("finite entries", "matrix contains NaN or Inf"));
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure { what: "SVD did not converge".into(), residual: f64::NAN })?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims("trace norm expects a square matrix"));
    }
    Ok(singular_values(m)?.iter().sum())
}

/// `(Σ s_k^p)^{1/p}` for `p ≥ 1`.
pub fn schatten_norm(m: &ComplexMatrix, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("Schatten index must be >= 1, got {p}")));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::dims("Schatten norm expects a square matrix"));
    }
    let s = singular_values(m)?;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0.0);
    }
    // scale to avoid overflow for large p
    let sum: f64 = s.iter().map(|x| (x / smax).powf(p)).sum();
    Ok(smax * sum.powf(1.0 / p))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r.checked_mul(c).is_some_and(|n| n <= 1 << 28) => Ok(a.kronecker(b)),
        _ => Err(Error::InvalidArgument("Kronecker product too large".into())),
    }
}

/// Which factor of a bipartite system survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace of an operator on `C^dA ⊗ C^dB`.
pub fn partial_trace(m: &HermitianMatrix, dims: (usize, usize), keep: Keep) -> Result<HermitianMatrix> {
    Ok(HermitianMatrix::from_hermitian_unchecked(partial_trace_matrix(m.matrix(), dims, keep)?))
}

pub(crate) fn partial_trace_matrix(m: &ComplexMatrix, (da, db): (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(Error::dims(format!("partial trace of {}x{} over {}x{}", m.nrows(), m.ncols(), da, db)));
    }
    Ok(match keep {
        Keep::A => ComplexMatrix::from_fn(da, da, |a, a2| (0..db).map(|b| m[(a * db + b, a2 * db + b)]).sum()),
        Keep::B => ComplexMatrix::from_fn(db, db, |b, b2| (0..da).map(|a| m[(a * db + b, a * db + b2)]).sum()),
    })
}

/// Assembles an `r x r` grid of `d x d` blocks; block `(i, j)` lands at `(i d, j d)`.
pub fn block_matrix(blocks: &[Vec<ComplexMatrix>]) -> Result<ComplexMatrix> {
    let r = blocks.len();
    if r == 0 {
        return Err(Error::InvalidArgument("empty block grid".into()));
    }
    let d = blocks[0].first().map(|b| b.nrows()).unwrap_or(0);
    for row in blocks {
        if row.len() != r {
            return Err(Error::dims("block grid must be square"));
        }
        if row.iter().any(|b| b.nrows() != d || b.ncols() != d) {
            return Err(Error::dims("ragged blocks"));
        }
    }
    let mut out = ComplexMatrix::zeros(r * d, r * d);
    for (i, row) in blocks.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            out.view_mut((i * d, j * d), (d, d)).copy_from(b);
        }
    }
    Ok(out)
}

/// Block-diagonal assembly of square blocks of possibly different sizes.
pub fn block_diagonal(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}
