//! Upper bounds on the measured average pairwise fidelity by optimizing over
//! POVMs with a restarted Nelder–Mead search.

use crate::error::{Error, Result};
use crate::linalg::{c64, eig_hermitian, ComplexMatrix, HermitianMatrix};
use crate::states::{ginibre, rng_from_seed, StateTuple};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredOptions {
    /// Number of POVM outcomes; `None` means `d²`.
    pub n_outcomes: Option<usize>,
    /// Objective evaluations allowed per Nelder–Mead run.
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for MeasuredOptions {
    fn default() -> Self {
        MeasuredOptions { n_outcomes: None, budget: 20_000, restarts: 8, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredResult {
    pub value: f64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
    pub n_outcomes: usize,
    /// Value of the best structured starting point (eigenbases, Fuchs–Caves bases).
    pub best_seed_value: f64,
}

/// Isometry `V = Z (Z†Z)^{-1/2}` stacked as `n` blocks of `d × d`.
fn lowdin(z: &ComplexMatrix) -> Option<ComplexMatrix> {
    let gram = z.adjoint() * z;
    let e = eig_hermitian(&gram).ok()?;
    if e.min() <= 1e-14 * e.max().max(f64::MIN_POSITIVE) {
        return None;
    }
    Some(z * e.reconstruct_with(|x| 1.0 / x.sqrt()))
}

struct Objective<'a> {
    states: Vec<&'a ComplexMatrix>,
    d: usize,
    n: usize,
}

impl Objective<'_> {
    fn params_to_z(&self, x: &[f64]) -> ComplexMatrix {
        let rows = self.d * self.n;
        ComplexMatrix::from_fn(rows, self.d, |i, j| {
            let k = 2 * (i * self.d + j);
            c64(x[k], x[k + 1])
        })
    }

    fn z_to_params(&self, z: &ComplexMatrix) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * z.len());
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                x.push(z[(i, j)].re);
                x.push(z[(i, j)].im);
            }
        }
        x
    }

    /// Average pairwise Bhattacharyya overlap of the outcome distributions.
    fn eval_isometry(&self, v: &ComplexMatrix) -> f64 {
        let r = self.states.len();
        let d = self.d;
        let mut probs = vec![vec![0.0; self.n]; r];
        for y in 0..self.n {
            let b = v.rows(y * d, d);
            let lambda = b.adjoint() * b;
            for (i, rho) in self.states.iter().enumerate() {
                let mut t = 0.0;
                for p in 0..d {
                    for q in 0..d {
                        t += (lambda[(p, q)] * rho[(q, p)]).re;
                    }
                }
                probs[i][y] = t.max(0.0);
            }
        }
        let mut s = 0.0;
        for i in 0..r {
            for j in i + 1..r {
                s += probs[i].iter().zip(&probs[j]).map(|(a, b)| (a * b).sqrt()).sum::<f64>();
            }
        }
        2.0 * s / (r * (r - 1)) as f64
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match lowdin(&self.params_to_z(x)) {
            Some(v) => self.eval_isometry(&v),
            None => f64::INFINITY,
        }
    }

    /// Projective measurement onto the columns of `u`, padded with zero blocks.
    fn basis_start(&self, u: &ComplexMatrix) -> Vec<f64> {
        let d = self.d;
        let mut z = ComplexMatrix::zeros(d * self.n, d);
        for k in 0..d {
            for j in 0..d {
                z[(k * d, j)] = u[(j, k)].conj();
            }
        }
        // keep the padding blocks slightly alive so the simplex can use them
        for y in d..self.n {
            for j in 0..d {
                z[(y * d, j)] = c64(1e-3, 0.0);
            }
        }
        self.z_to_params(&z)
    }
}

/// Adaptive Nelder–Mead; returns `(best_x, best_f, evaluations, converged)`.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, budget: usize) -> (Vec<f64>, f64, usize, bool) {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = n + 1;
    let mut converged = false;
    while evals < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if (values[n] - values[0]).abs() < 1e-13 {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for x in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(alpha);
        let fr = f(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = along(alpha * beta);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(alpha * gamma);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-gamma);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                let best = simplex[0].clone();
                for k in 1..=n {
                    simplex[k] = best.iter().zip(&simplex[k]).map(|(b, x)| b + delta * (x - b)).collect();
                    values[k] = f(&simplex[k]);
                }
                evals += n;
            }
        }
    }
    let (i, &fbest) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty simplex");
    (simplex[i].clone(), fbest, evals, converged)
}

/// Eigenbasis of `ρ_i^{-1/2} (ρ_i^{1/2} ρ_j ρ_i^{1/2})^{1/2} ρ_i^{-1/2}`, which
/// attains the Uhlmann fidelity of the pair as a classical overlap.
fn fuchs_caves_basis(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> Result<ComplexMatrix> {
    let reg = rho.shifted(1e-12);
    let half = reg.sqrt()?;
    let neg_half = reg.powf(-0.5)?;
    let mid = sigma.conjugate_by(half.matrix())?.sqrt()?;
    let op = mid.conjugate_by(neg_half.matrix())?;
    Ok(op.eig()?.vectors.clone())
}

/// Heuristic upper bound on `inf_Λ (2/r(r−1)) Σ_{i<j} F(Λ(ρ_i), Λ(ρ_j))`.
pub fn measured_upper_bound(t: &StateTuple, opts: &MeasuredOptions) -> Result<MeasuredResult> {
    let d = t.dim();
    let n = opts.n_outcomes.unwrap_or(d * d);
    if n < d {
        return Err(Error::InvalidArgument(format!("need at least d = {d} outcomes, got {n}")));
    }
    if opts.restarts == 0 || opts.budget == 0 {
        return Err(Error::InvalidArgument("restarts and budget must be positive".into()));
    }
    let obj = Objective { states: t.states().iter().map(|s| s.matrix()).collect(), d, n };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    for s in t.states() {
        starts.push(obj.basis_start(&s.hermitian().eig()?.vectors));
    }
    for i in 0..t.r() {
        for j in 0..t.r() {
            if i != j {
                starts.push(obj.basis_start(&fuchs_caves_basis(t.get(i).hermitian(), t.get(j).hermitian())?));
            }
        }
    }
    let mut scored: Vec<(f64, Vec<f64>)> = starts.into_iter().map(|x| (obj.eval(&x), x)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best_seed_value = scored[0].0;
    let mut best = best_seed_value;
    let mut evaluations = scored.len();

    let mut rng = rng_from_seed(opts.seed);
    let n_seeded = scored.len().min(opts.restarts.div_ceil(2));
    let mut runs: Vec<Vec<f64>> = scored.into_iter().take(n_seeded).map(|(_, x)| x).collect();
    while runs.len() < opts.restarts {
        let z = ginibre(d * n, d, &mut rng);
        runs.push(obj.z_to_params(&z));
    }

    let mut budget_exhausted = false;
    let f = |x: &[f64]| obj.eval(x);
    for (k, x0) in runs.iter().enumerate() {
        let step = if k < n_seeded { 0.05 } else { 0.3 };
        let (_, fx, used, converged) = nelder_mead(&f, x0, step, opts.budget);
        evaluations += used;
        if !converged && k + 1 == runs.len() {
            budget_exhausted = true;
        }
        best = best.min(fx);
    }
    Ok(MeasuredResult { value: best.clamp(0.0, 1.0), evaluations, budget_exhausted, n_outcomes: n, best_seed_value })
}

/// Classical overlap average for an explicit POVM given by its isometry.
pub fn measured_value_for_isometry(t: &StateTuple, v: &ComplexMatrix, n_outcomes: usize) -> f64 {
    let obj = Objective { states: t.states().iter().map(|s| s.matrix()).collect(), d: t.dim(), n: n_outcomes };
    obj.eval_isometry(v)
}
