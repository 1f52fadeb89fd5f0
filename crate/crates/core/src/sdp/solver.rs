//! Dense primal-dual interior-point method for real symmetric block SDPs.
//!
//! Primal: `min ⟨C, X⟩  s.t. ⟨A_k, X⟩ = b_k, X ⪰ 0`
//! Dual:   `max bᵀy     s.t. S = C − Σ y_k A_k ⪰ 0`
//!
//! Search directions use Nesterov–Todd scaling with a Mehrotra
//! predictor-corrector and a dense Cholesky factorization of the Schur
//! complement.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Min,
    Max,
}

/// Symmetric constraint matrix given by its upper-triangle entries
/// `(block, i, j, v)` with `i ≤ j`; `(j, i)` carries the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub entries: Vec<(usize, usize, usize, f64)>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    /// Dense symmetric cost, one matrix per block.
    pub c: Vec<DMatrix<f64>>,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    MaxIter,
    /// The scaling or Schur factorization broke down before convergence;
    /// the best iterate seen is returned.
    Stalled,
    InfeasibleSuspect,
}

/// One line of the optional iterate log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iteration: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// `⟨C, X⟩` in the problem's own sense.
    pub primal_value: f64,
    /// `bᵀy` in the problem's own sense.
    pub dual_value: f64,
    /// `primal_value − dual_value`.
    pub gap: f64,
    pub x: Vec<DMatrix<f64>>,
    pub y: Vec<f64>,
    pub s: Vec<DMatrix<f64>>,
    pub status: Status,
    pub iterations: usize,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub trace: Vec<IterateRecord>,
}

impl SdpSolution {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.primal_value + self.dual_value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { gap_tol: 1e-8, feas_tol: 1e-9, max_iter: 200, step_fraction: 0.98, record_trace: false }
    }
}

impl SolverOptions {
    pub fn with_gap_tol(gap_tol: f64) -> Self {
        SolverOptions { gap_tol, ..Self::default() }
    }
}

type Blocks = Vec<DMatrix<f64>>;

/// Constraint entries with the symmetric counterpart expanded.
struct FullConstraint {
    entries: Vec<(usize, usize, usize, f64)>,
}

impl SdpProblem {
    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Shape checks plus linear independence of the constraint matrices via a
    /// Cholesky factorization of their Gram matrix (relative pivot ≥ 1e−10).
    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::InvalidArgument("block sizes must be positive".into()));
        }
        if self.c.len() != self.blocks.len() {
            return Err(Error::dims(format!("{} cost blocks for {} blocks", self.c.len(), self.blocks.len())));
        }
        for (b, (c, &n)) in self.c.iter().zip(&self.blocks).enumerate() {
            if c.shape() != (n, n) {
                return Err(Error::dims(format!("cost block {b} is {:?}, expected {n}x{n}", c.shape())));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::invariant("finite entries", "cost contains NaN or Inf"));
            }
        }
        let mut by_key: HashMap<(usize, usize, usize), Vec<(usize, f64)>> = HashMap::new();
        for (k, con) in self.constraints.iter().enumerate() {
            if !con.b.is_finite() {
                return Err(Error::invariant("finite entries", format!("constraint {k} has non-finite rhs")));
            }
            for &(b, i, j, v) in &con.entries {
                if b >= self.blocks.len() || i > j || j >= self.blocks[b] || !v.is_finite() {
                    return Err(Error::InvalidArgument(format!("constraint {k} has bad entry ({b}, {i}, {j}, {v})")));
                }
                by_key.entry((b, i, j)).or_default().push((k, v));
            }
        }
        let m = self.constraints.len();
        let mut gram = DMatrix::<f64>::zeros(m, m);
        for ((_, i, j), occ) in &by_key {
            let mult = if i == j { 1.0 } else { 2.0 };
            for &(k, u) in occ {
                for &(l, v) in occ {
                    gram[(k, l)] += mult * u * v;
                }
            }
        }
        if m > 0 && !gram_is_definite(gram) {
            return Err(Error::invariant("linearly independent constraints", "constraint Gram matrix is singular"));
        }
        Ok(())
    }

    fn full_constraints(&self) -> Vec<FullConstraint> {
        self.constraints
            .iter()
            .map(|c| {
                let mut entries = Vec::with_capacity(2 * c.entries.len());
                for &(b, i, j, v) in &c.entries {
                    entries.push((b, i, j, v));
                    if i != j {
                        entries.push((b, j, i, v));
                    }
                }
                entries.sort_by_key(|e| e.0);
                FullConstraint { entries }
            })
            .collect()
    }
}

fn gram_is_definite(mut g: DMatrix<f64>) -> bool {
    let n = g.nrows();
    let scale = (0..n).map(|i| g[(i, i)]).fold(0.0, f64::max);
    if scale <= 0.0 {
        return false;
    }
    for k in 0..n {
        let pivot = g[(k, k)];
        if pivot <= 1e-10 * scale {
            return false;
        }
        for i in k + 1..n {
            let l = g[(i, k)] / pivot;
            if l == 0.0 {
                continue;
            }
            for j in k + 1..n {
                g[(i, j)] -= l * g[(k, j)];
            }
        }
    }
    true
}

fn inner(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn fro(a: &Blocks) -> f64 {
    inner(a, a).sqrt()
}

fn apply_a(cons: &[FullConstraint], x: &Blocks) -> DVector<f64> {
    DVector::from_iterator(
        cons.len(),
        cons.iter().map(|c| c.entries.iter().map(|&(b, i, j, v)| v * x[b][(i, j)]).sum::<f64>()),
    )
}

fn apply_at(cons: &[FullConstraint], y: &DVector<f64>, blocks: &[usize]) -> Blocks {
    let mut out: Blocks = blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for (c, &yk) in cons.iter().zip(y.iter()) {
        if yk == 0.0 {
            continue;
        }
        for &(b, i, j, v) in &c.entries {
            out[b][(i, j)] += yk * v;
        }
    }
    out
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Largest `α` with `X + αΔ ⪰ 0` given `X = L Lᵀ` (∞ if unbounded).
fn max_step(l: &DMatrix<f64>, delta: &DMatrix<f64>) -> f64 {
    let linv_delta = l.solve_lower_triangular(delta).expect("Cholesky factor is invertible");
    let mut m = l.solve_lower_triangular(&linv_delta.transpose()).expect("Cholesky factor is invertible");
    symmetrize(&mut m);
    let lmin = m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

/// NT scaling data for one block.
struct Scaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    d: Vec<f64>,
    lx: DMatrix<f64>,
    ls: DMatrix<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Scaling> {
    let lx = Cholesky::new(x.clone())?.l();
    let ls = Cholesky::new(s.clone())?.l();
    let svd = (ls.transpose() * &lx).try_svd(true, true, f64::EPSILON, 10_000)?;
    let v = svd.v_t?.transpose();
    let d: Vec<f64> = svd.singular_values.iter().copied().collect();
    if d.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let n = d.len();
    let mut g = &lx * &v;
    for j in 0..n {
        let f = 1.0 / d[j].sqrt();
        g.column_mut(j).iter_mut().for_each(|z| *z *= f);
    }
    // G⁻¹ = D^{1/2} Vᵀ L_X⁻¹
    let lx_inv_t = lx.solve_lower_triangular(&DMatrix::identity(n, n))?.transpose();
    let mut g_inv = (lx_inv_t * &v).transpose();
    for i in 0..n {
        let f = d[i].sqrt();
        g_inv.row_mut(i).iter_mut().for_each(|z| *z *= f);
    }
    let mut w = &g * g.transpose();
    symmetrize(&mut w);
    Some(Scaling { g, g_inv, w, d, lx, ls })
}

/// `M_kl = ⟨A_k, W A_l W⟩`
fn schur(cons: &[FullConstraint], sc: &[Scaling]) -> DMatrix<f64> {
    let m = cons.len();
    let mut out = DMatrix::zeros(m, m);
    for k in 0..m {
        for l in k..m {
            let mut s = 0.0;
            for &(b, p, q, u) in &cons[k].entries {
                let w = &sc[b].w;
                for &(b2, i, j, v) in &cons[l].entries {
                    if b2 != b {
                        continue;
                    }
                    s += u * v * w[(q, i)] * w[(j, p)];
                }
            }
            out[(k, l)] = s;
            out[(l, k)] = s;
        }
    }
    out
}

/// Cholesky of the Schur complement, adding a growing diagonal shift when it
/// has lost definiteness to rounding near a degenerate optimum.
fn factor_schur(m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut shift = 1e-14 * scale;
    while shift <= 1e-8 * scale {
        let mut shifted = m.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += shift;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Some(c);
        }
        shift *= 100.0;
    }
    None
}

struct Direction {
    dx: Blocks,
    dy: DVector<f64>,
    ds: Blocks,
}

#[allow(clippy::too_many_arguments)]
fn solve_direction(
    z: &Blocks,
    sc: &[Scaling],
    chol: &Cholesky<f64, Dyn>,
    cons: &[FullConstraint],
    blocks: &[usize],
    rp: &DVector<f64>,
    rd: &Blocks,
) -> Direction {
    let t: Blocks = z.iter().zip(sc).map(|(z, s)| &s.g * z * s.g.transpose()).collect();
    let wrw: Blocks = rd.iter().zip(sc).map(|(r, s)| &s.w * r * &s.w).collect();
    let rhs = rp - apply_a(cons, &t) + apply_a(cons, &wrw);
    let dy = chol.solve(&rhs);
    let aty = apply_at(cons, &dy, blocks);
    let ds: Blocks = rd
        .iter()
        .zip(&aty)
        .map(|(r, a)| {
            let mut m = r - a;
            symmetrize(&mut m);
            m
        })
        .collect();
    let dx: Blocks = t
        .iter()
        .zip(&ds)
        .zip(sc)
        .map(|((t, ds), s)| {
            let mut m = t - &s.w * ds * &s.w;
            symmetrize(&mut m);
            m
        })
        .collect();
    Direction { dx, dy, ds }
}

fn step_lengths(sc: &[Scaling], dir: &Direction) -> (f64, f64) {
    let ap = sc.iter().zip(&dir.dx).map(|(s, d)| max_step(&s.lx, d)).fold(f64::INFINITY, f64::min);
    let ad = sc.iter().zip(&dir.ds).map(|(s, d)| max_step(&s.ls, d)).fold(f64::INFINITY, f64::min);
    (ap, ad)
}

struct Snapshot {
    x: Blocks,
    y: DVector<f64>,
    s: Blocks,
    pobj: f64,
    dobj: f64,
    pinf: f64,
    dinf: f64,
    score: f64,
    iteration: usize,
}

/// Solves the problem to `|primal − dual| ≤ gap_tol (1 + |primal|)` with primal
/// and dual infeasibility below `feas_tol`.
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let blocks = problem.blocks.clone();
    let sign = match problem.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let c: Blocks = problem
        .c
        .iter()
        .map(|m| {
            let mut m = m * sign;
            symmetrize(&mut m);
            m
        })
        .collect();
    let cons = problem.full_constraints();
    let b = DVector::from_iterator(cons.len(), problem.constraints.iter().map(|c| c.b));
    let n_total: usize = blocks.iter().sum();
    let norm_b = b.norm();
    let norm_c = fro(&c);

    let mut x: Blocks = blocks.iter().map(|&n| DMatrix::identity(n, n)).collect();
    let mut s: Blocks = x.clone();
    let mut y = DVector::zeros(cons.len());
    let mut trace = Vec::new();
    let mut best: Option<Snapshot> = None;
    let mut status = Status::MaxIter;
    let (mut last_ap, mut last_ad) = (0.0, 0.0);

    for iter in 0..=opts.max_iter {
        let rp = &b - apply_a(&cons, &x);
        let aty = apply_at(&cons, &y, &blocks);
        let rd: Blocks = c.iter().zip(&s).zip(&aty).map(|((c, s), a)| c - s - a).collect();
        let pobj = inner(&c, &x);
        let dobj = b.dot(&y);
        let mu = inner(&x, &s) / n_total as f64;
        let pinf = rp.norm() / (1.0 + norm_b);
        let dinf = fro(&rd) / (1.0 + norm_c);
        let gap = pobj - dobj;
        let rel_gap = gap.abs() / (1.0 + pobj.abs());
        if opts.record_trace {
            trace.push(IterateRecord {
                iteration: iter,
                primal_obj: sign * pobj,
                dual_obj: sign * dobj,
                gap: sign * gap,
                primal_infeas: pinf,
                dual_infeas: dinf,
                mu,
                step_primal: last_ap,
                step_dual: last_ad,
            });
        }
        let score = (rel_gap / opts.gap_tol).max(pinf / opts.feas_tol).max(dinf / opts.feas_tol);
        if best.as_ref().is_none_or(|bst| score < bst.score) {
            best = Some(Snapshot {
                x: x.clone(),
                y: y.clone(),
                s: s.clone(),
                pobj,
                dobj,
                pinf,
                dinf,
                score,
                iteration: iter,
            });
        }
        if rel_gap <= opts.gap_tol && pinf <= opts.feas_tol && dinf <= opts.feas_tol {
            status = Status::Optimal;
            break;
        }
        if fro(&x) > 1e12 || y.amax() > 1e12 || fro(&s) > 1e14 {
            status = Status::InfeasibleSuspect;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let sc: Option<Vec<Scaling>> = x.iter().zip(&s).map(|(x, s)| nt_scaling(x, s)).collect();
        let Some(sc) = sc else {
            status = Status::Stalled;
            break;
        };
        let Some(chol) = factor_schur(schur(&cons, &sc)) else {
            status = Status::Stalled;
            break;
        };

        // predictor: Z = −D, so G Z Gᵀ = −X
        let z_pred: Blocks = sc
            .iter()
            .map(|s| DMatrix::from_diagonal(&DVector::from_iterator(s.d.len(), s.d.iter().map(|d| -d))))
            .collect();
        let pred = solve_direction(&z_pred, &sc, &chol, &cons, &blocks, &rp, &rd);
        let (ap, ad) = step_lengths(&sc, &pred);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let x_aff: Blocks = x.iter().zip(&pred.dx).map(|(x, d)| x + d * ap).collect();
        let s_aff: Blocks = s.iter().zip(&pred.ds).map(|(s, d)| s + d * ad).collect();
        let mu_aff = inner(&x_aff, &s_aff) / n_total as f64;
        let expo = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = if mu > 0.0 { (mu_aff / mu).max(0.0).powf(expo).min(1.0) } else { 0.0 };

        // corrector: R = σμI − D² − sym(ΔX̃ ΔS̃), Z_ij = 2 R_ij / (d_i + d_j)
        let z_corr: Blocks = sc
            .iter()
            .zip(pred.dx.iter().zip(&pred.ds))
            .map(|(s, (dx, ds))| {
                let dxt = &s.g_inv * dx * s.g_inv.transpose();
                let dst = s.g.transpose() * ds * &s.g;
                let mut prod = &dxt * &dst;
                symmetrize(&mut prod);
                let n = s.d.len();
                DMatrix::from_fn(n, n, |i, j| {
                    let mut r = -prod[(i, j)];
                    if i == j {
                        r += sigma * mu - s.d[i] * s.d[i];
                    }
                    2.0 * r / (s.d[i] + s.d[j])
                })
            })
            .collect();
        let dir = solve_direction(&z_corr, &sc, &chol, &cons, &blocks, &rp, &rd);
        let (ap, ad) = step_lengths(&sc, &dir);
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);
        last_ap = ap;
        last_ad = ad;
        for (xb, d) in x.iter_mut().zip(&dir.dx) {
            *xb += d * ap;
            symmetrize(xb);
        }
        for (sb, d) in s.iter_mut().zip(&dir.ds) {
            *sb += d * ad;
            symmetrize(sb);
        }
        y += &dir.dy * ad;
    }

    let snap = best.expect("at least one iterate is evaluated");
    if status != Status::Optimal && status != Status::InfeasibleSuspect {
        // numerical breakdown far from any certificate
        if snap.score > 1e4 && status == Status::Stalled {
            return Err(Error::NumericalFailure {
                what: "SDP interior-point iteration broke down".into(),
                residual: snap.score,
            });
        }
    }
    let (pobj, dobj) = (sign * snap.pobj, sign * snap.dobj);
    Ok(SdpSolution {
        primal_value: pobj,
        dual_value: dobj,
        gap: pobj - dobj,
        x: snap.x,
        y: snap.y.iter().copied().collect(),
        s: snap.s,
        status,
        iterations: snap.iteration,
        primal_infeas: snap.pinf,
        dual_infeas: snap.dinf,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_minimization() {
        // min Tr X s.t. Tr X = 1
        let p = SdpProblem {
            blocks: vec![2],
            c: vec![DMatrix::identity(2, 2)],
            constraints: vec![Constraint { entries: vec![(0, 0, 0, 1.0), (0, 1, 1, 1.0)], b: 1.0 }],
            sense: Sense::Min,
        };
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.primal_value - 1.0).abs() < 1e-8);
        assert!((sol.dual_value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn max_eigenvalue_as_sdp() {
        // max ⟨C, X⟩ s.t. Tr X = 1 gives λ_max(C)
        let cm = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, -1.0]);
        let lmax = cm.symmetric_eigenvalues().max();
        let p = SdpProblem {
            blocks: vec![3],
            c: vec![cm],
            constraints: vec![Constraint { entries: (0..3).map(|i| (0, i, i, 1.0)).collect(), b: 1.0 }],
            sense: Sense::Max,
        };
        let sol = solve(&p, &SolverOptions::with_gap_tol(1e-10)).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.midpoint() - lmax).abs() < 1e-8, "{} vs {lmax}", sol.midpoint());
        let xmin = sol.x[0].symmetric_eigenvalues().min();
        assert!(xmin >= -1e-9);
    }

    #[test]
    fn multi_block_problem() {
        // min x1 + 2 x2 over 1x1 blocks with x1 + x2 = 1
        let p = SdpProblem {
            blocks: vec![1, 1],
            c: vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 2.0)],
            constraints: vec![Constraint { entries: vec![(0, 0, 0, 1.0), (1, 0, 0, 1.0)], b: 1.0 }],
            sense: Sense::Min,
        };
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert!((sol.midpoint() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn dependent_constraints_rejected() {
        let con = Constraint { entries: vec![(0, 0, 0, 1.0)], b: 1.0 };
        let p = SdpProblem {
            blocks: vec![2],
            c: vec![DMatrix::identity(2, 2)],
            constraints: vec![con.clone(), con],
            sense: Sense::Min,
        };
        assert!(matches!(solve(&p, &SolverOptions::default()), Err(Error::Invariant { .. })));
    }

    #[test]
    fn trace_records_iterations() {
        let p = SdpProblem {
            blocks: vec![2],
            c: vec![DMatrix::identity(2, 2)],
            constraints: vec![Constraint { entries: vec![(0, 0, 0, 1.0), (0, 1, 1, 1.0)], b: 1.0 }],
            sense: Sense::Min,
        };
        let sol = solve(&p, &SolverOptions { record_trace: true, ..Default::default() }).unwrap();
        assert!(!sol.trace.is_empty());
        assert_eq!(sol.trace[0].iteration, 0);
    }
}
