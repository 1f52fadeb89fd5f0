//! Complex Hermitian SDPs and their real symmetric embedding.
//!
//! A Hermitian `H = A + iB` maps to `[[A, −B], [B, A]]`, which is PSD iff `H`
//! is and carries every eigenvalue twice. Costs and constraint matrices are
//! halved after embedding so that objective values and right-hand sides are
//! unchanged.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix};

use super::solver::{self, Constraint, IterateRecord, SdpProblem, SdpSolution, Sense, SolverOptions, Status};

/// Hermitian constraint `Re Tr[A K] = b`, with `A` given by upper-triangle
/// entries `(block, p, q, a_pq)`, `p ≤ q`; `a_qp = conj(a_pq)` is implied and
/// diagonal entries must be real.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexConstraint {
    pub entries: Vec<(usize, usize, usize, Complex64)>,
    pub b: f64,
}

impl ComplexConstraint {
    /// `Re K_pq = b` (or `K_pp = b`).
    pub fn re_entry(block: usize, p: usize, q: usize, b: f64) -> Self {
        let (p, q) = (p.min(q), p.max(q));
        let v = if p == q { c64(1.0, 0.0) } else { c64(0.5, 0.0) };
        ComplexConstraint { entries: vec![(block, p, q, v)], b }
    }

    /// `Im K_pq = b` for `p < q`.
    pub fn im_entry(block: usize, p: usize, q: usize, b: f64) -> Self {
        debug_assert!(p < q);
        ComplexConstraint { entries: vec![(block, p, q, c64(0.0, 0.5))], b }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSdp {
    pub blocks: Vec<usize>,
    /// Dense Hermitian cost per block; the objective is `Re Tr[C K]`.
    pub c: Vec<ComplexMatrix>,
    pub constraints: Vec<ComplexConstraint>,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSolution {
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub x: Vec<ComplexMatrix>,
    pub y: Vec<f64>,
    pub status: Status,
    pub iterations: usize,
    pub trace: Vec<IterateRecord>,
}

impl ComplexSolution {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.primal_value + self.dual_value)
    }
}

/// `[[Re H, −Im H], [Im H, Re H]]`
pub fn complex_to_real(h: &ComplexMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    let m = h.ncols();
    DMatrix::from_fn(2 * n, 2 * m, |i, j| {
        let z = h[(i % n, j % m)];
        match (i < n, j < m) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`complex_to_real`], averaging the two copies.
pub fn real_to_complex(x: &DMatrix<f64>) -> ComplexMatrix {
    let n = x.nrows() / 2;
    ComplexMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(n + i, n + j)]);
        let im = 0.5 * (x[(n + i, j)] - x[(i, n + j)]);
        c64(re, im)
    })
}

fn embed_constraint(c: &ComplexConstraint, blocks: &[usize]) -> Result<Constraint> {
    let mut entries = Vec::with_capacity(4 * c.entries.len());
    for &(b, p, q, z) in &c.entries {
        let n = *blocks.get(b).ok_or_else(|| Error::InvalidArgument(format!("constraint references block {b}")))?;
        if p > q || q >= n {
            return Err(Error::InvalidArgument(format!("bad Hermitian entry ({b}, {p}, {q})")));
        }
        if p == q {
            if z.im != 0.0 {
                return Err(Error::invariant("Hermitian constraint", "diagonal entry with imaginary part"));
            }
            entries.push((b, p, p, 0.5 * z.re));
            entries.push((b, n + p, n + p, 0.5 * z.re));
        } else {
            if z.re != 0.0 {
                entries.push((b, p, q, 0.5 * z.re));
                entries.push((b, n + p, n + q, 0.5 * z.re));
            }
            if z.im != 0.0 {
                // [p][n+q] = −Im, [n+p][q] = Im (stored as its transpose [q][n+p])
                entries.push((b, p, n + q, -0.5 * z.im));
                entries.push((b, q, n + p, 0.5 * z.im));
            }
        }
    }
    Ok(Constraint { entries, b: c.b })
}

impl ComplexSdp {
    pub fn to_real(&self) -> Result<SdpProblem> {
        if self.c.len() != self.blocks.len() {
            return Err(Error::dims("one cost matrix per block"));
        }
        Ok(SdpProblem {
            blocks: self.blocks.iter().map(|n| 2 * n).collect(),
            c: self.c.iter().map(|c| complex_to_real(c) * 0.5).collect(),
            constraints: self.constraints.iter().map(|c| embed_constraint(c, &self.blocks)).collect::<Result<_>>()?,
            sense: self.sense,
        })
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<ComplexSolution> {
        let real = self.to_real()?;
        let sol: SdpSolution = solver::solve(&real, opts)?;
        Ok(ComplexSolution {
            primal_value: sol.primal_value,
            dual_value: sol.dual_value,
            gap: sol.gap,
            x: sol.x.iter().map(real_to_complex).collect(),
            y: sol.y,
            status: sol.status,
            iterations: sol.iterations,
            trace: sol.trace,
        })
    }

    /// Equality constraints fixing a Hermitian sub-block of `K` (rows/cols
    /// starting at `offset`) to `target`.
    pub fn fix_block(&mut self, block: usize, offset: usize, target: &ComplexMatrix) {
        let d = target.nrows();
        for p in 0..d {
            for q in p..d {
                let t = target[(p, q)];
                self.constraints.push(ComplexConstraint::re_entry(block, offset + p, offset + q, t.re));
                if p != q {
                    self.constraints.push(ComplexConstraint::im_entry(block, offset + p, offset + q, t.im));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, identity};

    #[test]
    fn real_matrix_embeds_as_two_copies() {
        let h = ComplexMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0)]);
        let r = complex_to_real(&h);
        assert_eq!(r.view((0, 0), (2, 2)).clone_owned(), r.view((2, 2), (2, 2)).clone_owned());
        assert!(r.view((0, 2), (2, 2)).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pauli_y_spectrum_duplicated() {
        // i·Y is anti-Hermitian; use Y itself, whose embedding is real symmetric
        let y = ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)]);
        let r = complex_to_real(&y);
        let mut ev: Vec<f64> = r.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn random_spectrum_duplicated() {
        let g = ComplexMatrix::from_fn(4, 4, |i, j| {
            c64((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i * 2 + j * 5) as f64 % 3.0 - 1.0)
        });
        let h = &g + g.adjoint();
        let orig = eig_hermitian(&h).unwrap().values;
        let mut ev: Vec<f64> = complex_to_real(&h).symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (k, v) in orig.iter().enumerate() {
            assert!((ev[2 * k] - v).abs() < 1e-10 && (ev[2 * k + 1] - v).abs() < 1e-10);
        }
        assert_eq!(real_to_complex(&complex_to_real(&h)), h);
    }

    #[test]
    fn embedded_constraints_evaluate_complex_entries() {
        let k = ComplexMatrix::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(0.3, -0.7), c64(0.3, 0.7), c64(5.0, 0.0)]);
        let real = complex_to_real(&k);
        let eval = |c: &ComplexConstraint| {
            let e = embed_constraint(c, &[2]).unwrap();
            e.entries
                .iter()
                .map(|&(_, i, j, v)| if i == j { v * real[(i, j)] } else { 2.0 * v * real[(i, j)] })
                .sum::<f64>()
        };
        assert!((eval(&ComplexConstraint::re_entry(0, 0, 0, 0.0)) - 2.0).abs() < 1e-15);
        assert!((eval(&ComplexConstraint::re_entry(0, 0, 1, 0.0)) - 0.3).abs() < 1e-15);
        assert!((eval(&ComplexConstraint::im_entry(0, 0, 1, 0.0)) + 0.7).abs() < 1e-15);
    }

    #[test]
    fn complex_trace_minimization() {
        // min Re Tr[C K] s.t. K = I on a 2x2 block, C Hermitian: value Tr C
        let c = ComplexMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0), c64(2.0, 0.0)]);
        let mut sdp = ComplexSdp { blocks: vec![2], c: vec![c], constraints: vec![], sense: Sense::Min };
        sdp.fix_block(0, 0, &identity(2));
        let sol = sdp.solve(&SolverOptions::default()).unwrap();
        assert!((sol.midpoint() - 3.0).abs() < 1e-8);
    }
}
