//! Problem builders for the fidelity SDPs.
//!
//! Every builder takes PSD operators (normally density matrices; unnormalized
//! inputs are allowed so that scaling properties can be tested) and produces a
//! single-block [`ComplexSdp`]. Block `i` of the `r·d` variable occupies rows
//! and columns `i·d .. (i+1)·d`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c64, identity, ComplexMatrix, HermitianMatrix};

use super::embed::{ComplexConstraint, ComplexSdp};
use super::solver::Sense;

fn common_dim(ops: &[HermitianMatrix]) -> Result<(usize, usize)> {
    let r = ops.len();
    if r < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 operators, got {r}")));
    }
    let d = ops[0].dim();
    if ops.iter().any(|o| o.dim() != d) {
        return Err(Error::dims("operators of different dimension"));
    }
    Ok((r, d))
}

fn pair_weight(r: usize) -> f64 {
    1.0 / (r * (r - 1)) as f64
}

fn place(m: &mut ComplexMatrix, i: usize, j: usize, block: &ComplexMatrix) {
    let d = block.nrows();
    m.view_mut((i * d, j * d), (d, d)).copy_from(block);
}

/// Fixes every entry of the (generally non-Hermitian) off-diagonal block
/// `(i, j)`, `i < j`, of a single-block variable.
fn fix_offdiag_block(sdp: &mut ComplexSdp, d: usize, i: usize, j: usize, target: &ComplexMatrix) {
    debug_assert!(i < j);
    for p in 0..d {
        for q in 0..d {
            let (a, b) = (i * d + p, j * d + q);
            let t = target[(p, q)];
            sdp.constraints.push(ComplexConstraint::re_entry(0, a, b, t.re));
            sdp.constraints.push(ComplexConstraint::im_entry(0, a, b, t.im));
        }
    }
}

/// Dual (sup) form: `max (2/r(r−1)) Σ_{i<j} Re Tr X_ij` over block matrices
/// with diagonal blocks `ρ_i`.
pub fn build_fsdp_dual(ops: &[HermitianMatrix]) -> Result<ComplexSdp> {
    let (r, d) = common_dim(ops)?;
    let w = pair_weight(r);
    let mut c = ComplexMatrix::zeros(r * d, r * d);
    for i in 0..r {
        for j in 0..r {
            if i != j {
                place(&mut c, i, j, &(identity(d) * c64(w, 0.0)));
            }
        }
    }
    let mut sdp = ComplexSdp { blocks: vec![r * d], c: vec![c], constraints: Vec::new(), sense: Sense::Max };
    for (i, rho) in ops.iter().enumerate() {
        sdp.fix_block(0, i * d, rho.matrix());
    }
    Ok(sdp)
}

/// Primal (inf) form: `min (1/r(r−1)) Σ Tr[Y_i ρ_i]` over
/// `Z = Σ|i⟩⟨i|⊗Y_i − Σ_{i≠j}|i⟩⟨j|⊗I ⪰ 0`.
pub fn build_fsdp_primal(ops: &[HermitianMatrix]) -> Result<ComplexSdp> {
    let (r, d) = common_dim(ops)?;
    let w = pair_weight(r);
    let mut c = ComplexMatrix::zeros(r * d, r * d);
    for (i, rho) in ops.iter().enumerate() {
        place(&mut c, i, i, &(rho.matrix() * c64(w, 0.0)));
    }
    let mut sdp = ComplexSdp { blocks: vec![r * d], c: vec![c], constraints: Vec::new(), sense: Sense::Min };
    let minus_id = -identity(d);
    for i in 0..r {
        for j in i + 1..r {
            fix_offdiag_block(&mut sdp, d, i, j, &minus_id);
        }
    }
    Ok(sdp)
}

/// Conditioned form `max (2/r(r−1)) Σ_{i<j} Re Tr[√ρ_i K_ij √ρ_j]` over
/// `K ⪰ 0` with `K_ii = I`. Both it and its dual are strictly feasible for any
/// PSD inputs.
pub fn build_kstar(ops: &[HermitianMatrix]) -> Result<ComplexSdp> {
    let (r, d) = common_dim(ops)?;
    let w = pair_weight(r);
    let roots = ops.iter().map(|o| o.sqrt()).collect::<Result<Vec<_>>>()?;
    let mut c = ComplexMatrix::zeros(r * d, r * d);
    for i in 0..r {
        for j in 0..r {
            if i != j {
                place(&mut c, i, j, &(roots[i].matrix() * roots[j].matrix() * c64(w, 0.0)));
            }
        }
    }
    let mut sdp = ComplexSdp { blocks: vec![r * d], c: vec![c], constraints: Vec::new(), sense: Sense::Max };
    for i in 0..r {
        sdp.fix_block(0, i * d, &identity(d));
    }
    Ok(sdp)
}

/// Pure-state form over `r × r` PSD `k` with unit diagonal:
/// `max (2/r(r−1)) Σ_{i<j} Re[k_ij ⟨ψ_i|ψ_j⟩]`.
pub fn build_kstar_pure(vectors: &[Vec<Complex64>]) -> Result<ComplexSdp> {
    let r = vectors.len();
    if r < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 vectors, got {r}")));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::dims("vectors of different dimension"));
    }
    for v in vectors {
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::invariant("unit vectors", format!("squared norm {n}")));
        }
    }
    let w = pair_weight(r);
    let c = ComplexMatrix::from_fn(r, r, |a, b| {
        if a == b {
            c64(0.0, 0.0)
        } else {
            crate::linalg::inner(&vectors[b], &vectors[a]) * w
        }
    });
    let constraints = (0..r).map(|a| ComplexConstraint::re_entry(0, a, a, 1.0)).collect();
    Ok(ComplexSdp { blocks: vec![r], c: vec![c], constraints, sense: Sense::Max })
}

/// Sup form of the secrecy measure: block 0 is a free state `σ`, blocks
/// `1..=r` are fixed to `ρ_i`, objective `(1/r) Σ_i Re Tr X_{i0}`.
pub fn build_secrecy_sup(ops: &[HermitianMatrix]) -> Result<ComplexSdp> {
    let (r, d) = common_dim(ops)?;
    let n = (r + 1) * d;
    let mut c = ComplexMatrix::zeros(n, n);
    let half = identity(d) * c64(0.5 / r as f64, 0.0);
    for i in 1..=r {
        place(&mut c, 0, i, &half);
        place(&mut c, i, 0, &half);
    }
    let mut sdp = ComplexSdp { blocks: vec![n], c: vec![c], constraints: Vec::new(), sense: Sense::Max };
    sdp.constraints.push(ComplexConstraint { entries: (0..d).map(|p| (0, p, p, c64(1.0, 0.0))).collect(), b: 1.0 });
    for (i, rho) in ops.iter().enumerate() {
        sdp.fix_block(0, (i + 1) * d, rho.matrix());
    }
    Ok(sdp)
}

/// Inf form of the secrecy measure: `min (1/2r)(μ + Σ Tr[Y_i ρ_i])` over
/// `diag(μI, Y_1, …, Y_r) − Σ_i (|i⟩⟨0| + |0⟩⟨i|)⊗I ⪰ 0`.
pub fn build_secrecy_inf(ops: &[HermitianMatrix]) -> Result<ComplexSdp> {
    let (r, d) = common_dim(ops)?;
    let n = (r + 1) * d;
    let scale = 0.5 / r as f64;
    let mut c = ComplexMatrix::zeros(n, n);
    place(&mut c, 0, 0, &(identity(d) * c64(scale / d as f64, 0.0)));
    for (i, rho) in ops.iter().enumerate() {
        place(&mut c, i + 1, i + 1, &(rho.matrix() * c64(scale, 0.0)));
    }
    let mut sdp = ComplexSdp { blocks: vec![n], c: vec![c], constraints: Vec::new(), sense: Sense::Min };
    // block 0 is a multiple of the identity
    for p in 0..d {
        for q in p + 1..d {
            sdp.constraints.push(ComplexConstraint::re_entry(0, p, q, 0.0));
            sdp.constraints.push(ComplexConstraint::im_entry(0, p, q, 0.0));
        }
    }
    for p in 1..d {
        sdp.constraints
            .push(ComplexConstraint { entries: vec![(0, p, p, c64(1.0, 0.0)), (0, 0, 0, c64(-1.0, 0.0))], b: 0.0 });
    }
    let minus_id = -identity(d);
    let zero = ComplexMatrix::zeros(d, d);
    for i in 0..=r {
        for j in i + 1..=r {
            fix_offdiag_block(&mut sdp, d, i, j, if i == 0 { &minus_id } else { &zero });
        }
    }
    Ok(sdp)
}

/// Conditioned secrecy form: `max (1/r) Σ_i Re Tr[√ρ_i K_{i0}]` over `K ⪰ 0`
/// with `Tr K_00 = 1` and `K_ii = I` for `i ≥ 1`.
pub fn build_secrecy_kform(ops: &[HermitianMatrix]) -> Result<ComplexSdp> {
    let (r, d) = common_dim(ops)?;
    let n = (r + 1) * d;
    let mut c = ComplexMatrix::zeros(n, n);
    for (i, rho) in ops.iter().enumerate() {
        let block = rho.sqrt()?.matrix() * c64(0.5 / r as f64, 0.0);
        place(&mut c, 0, i + 1, &block);
        place(&mut c, i + 1, 0, &block);
    }
    let mut sdp = ComplexSdp { blocks: vec![n], c: vec![c], constraints: Vec::new(), sense: Sense::Max };
    sdp.constraints.push(ComplexConstraint { entries: (0..d).map(|p| (0, p, p, c64(1.0, 0.0))).collect(), b: 1.0 });
    for i in 1..=r {
        sdp.fix_block(0, i * d, &identity(d));
    }
    Ok(sdp)
}

/// Dual form of the SDP fidelity with the extra requirement that every
/// off-diagonal block `X_ij` be Hermitian.
pub fn build_geometric_multi_sdp(ops: &[HermitianMatrix]) -> Result<ComplexSdp> {
    let (r, d) = common_dim(ops)?;
    let mut sdp = build_fsdp_dual(ops)?;
    for i in 0..r {
        for j in i + 1..r {
            for p in 0..d {
                let a = (i * d + p, j * d + p);
                sdp.constraints.push(ComplexConstraint { entries: vec![(0, a.0, a.1, c64(0.0, 0.5))], b: 0.0 });
                for q in p + 1..d {
                    let pq = (i * d + p, j * d + q);
                    let qp = (i * d + q, j * d + p);
                    sdp.constraints.push(ComplexConstraint {
                        entries: vec![(0, pq.0, pq.1, c64(0.5, 0.0)), (0, qp.0, qp.1, c64(-0.5, 0.0))],
                        b: 0.0,
                    });
                    sdp.constraints.push(ComplexConstraint {
                        entries: vec![(0, pq.0, pq.1, c64(0.0, 0.5)), (0, qp.0, qp.1, c64(0.0, 0.5))],
                        b: 0.0,
                    });
                }
            }
        }
    }
    Ok(sdp)
}
