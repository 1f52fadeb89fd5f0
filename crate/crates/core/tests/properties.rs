//! Property tests over seeded random inputs.

use multifid::bivariate::{fid_z, holevo, uhlmann, EpsSchedule, ZParam};
use multifid::classical::{apply_stochastic, avg_kwise_classical, avg_pairwise_classical, matusita, ClassicalTuple};
use multifid::harness::{random_classical, random_stochastic, random_tuple, TupleShape};
use multifid::linalg::{c64, frobenius, identity, partial_trace, trace_norm, HermitianMatrix, Keep};
use multifid::multivariate::{
    f_log_euclidean, f_sdp, f_sdp_operators, f_secrecy, regularized_tuple, SdpForm, SecrecyForm,
};
use multifid::sdp::SolverOptions;
use multifid::states::{
    canonical_purification, cq_state, random_channel_with, random_density_with, random_probability_vector,
    random_unitary, rng_from_seed, DensityMatrix, ProbabilityVector, StateTuple,
};
use multifid::ComplexMatrix;
use proptest::prelude::*;

fn opts() -> SolverOptions {
    SolverOptions::with_gap_tol(1e-9)
}

fn state(d: usize, rank: usize, seed: u64) -> DensityMatrix {
    random_density_with(d, rank, &mut rng_from_seed(seed)).unwrap()
}

fn dim_rank() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=4).prop_flat_map(|d| (Just(d), 1..=d))
}

fn reversed_tuple(t: &StateTuple) -> StateTuple {
    let perm: Vec<usize> = (0..t.r()).rev().collect();
    t.permuted(&perm).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed: u64, (d, rank) in dim_rank()) {
        let rho = state(d, rank, seed);
        let e = rho.hermitian().eig().unwrap();
        let rebuilt = e.reconstruct_with(|x| x);
        prop_assert!(frobenius(&(rebuilt - rho.matrix())) <= 1e-10 * frobenius(rho.matrix()));
    }

    #[test]
    fn sqrt_then_square_and_log_then_exp_compose(seed: u64, d in 2usize..=4) {
        let h = state(d, d, seed).hermitian().shifted(0.05);
        let sq = h.sqrt().unwrap();
        prop_assert!(frobenius(&(sq.matrix() * sq.matrix() - h.matrix())) < 1e-9);
        let back = h.log().unwrap().exp().unwrap();
        prop_assert!(frobenius(&(back.matrix() - h.matrix())) < 1e-9);
    }

    #[test]
    fn trace_norm_is_unitarily_invariant(seed: u64, d in 2usize..=4) {
        let mut rng = rng_from_seed(seed);
        let m = multifid::states::ginibre(d, d, &mut rng);
        let (u, v) = (random_unitary(d, &mut rng), random_unitary(d, &mut rng));
        let a = trace_norm(&m).unwrap();
        prop_assert!((trace_norm(&(&u * &m * &v)).unwrap() - a).abs() < 1e-9 * (1.0 + a));
    }

    #[test]
    fn partial_trace_preserves_trace(seed: u64, da in 2usize..=3, db in 2usize..=3) {
        let rho = state(da * db, da * db, seed);
        for keep in [Keep::A, Keep::B] {
            let red = partial_trace(rho.hermitian(), (da, db), keep).unwrap();
            prop_assert!((red.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generated_states_satisfy_invariants(seed: u64, (d, rank) in dim_rank()) {
        let rho = state(d, rank, seed);
        prop_assert!(DensityMatrix::new(rho.hermitian().clone()).is_ok());
        prop_assert_eq!(rho.rank(1e-9).unwrap(), rank);
    }

    #[test]
    fn generated_channels_are_trace_preserving(seed: u64, d_in in 2usize..=3, d_out in 2usize..=3, env in 2usize..=3) {
        let mut rng = rng_from_seed(seed);
        let ch = random_channel_with(d_in, d_out, env, &mut rng).unwrap();
        let sum = ch.kraus().iter().fold(ComplexMatrix::zeros(d_in, d_in), |acc, k| acc + k.adjoint() * k);
        prop_assert!(frobenius(&(sum - identity(d_in))) < 1e-10);
        let rho = random_density_with(d_in, 1 + (seed as usize % d_in), &mut rng).unwrap();
        let out = ch.apply(&rho).unwrap();
        prop_assert!((out.hermitian().trace() - 1.0).abs() < 1e-10);
        prop_assert!(out.hermitian().min_eigenvalue().unwrap() >= -1e-9);
    }

    #[test]
    fn purification_reduces_to_state(seed: u64, (d, rank) in dim_rank()) {
        let rho = state(d, rank, seed);
        let psi = canonical_purification(&rho).unwrap();
        let pure = DensityMatrix::pure(&psi).unwrap();
        let red = partial_trace(pure.hermitian(), (d, d), Keep::A).unwrap();
        prop_assert!(frobenius(&(red.matrix() - rho.matrix())) < 1e-9);
    }

    #[test]
    fn fid_z_is_nonincreasing_in_z(seed: u64, (d, rank) in dim_rank()) {
        let (a, b) = (state(d, rank, seed), state(d, d, seed ^ 0x5555));
        let grid = [0.5, 0.75, 1.0, 2.0, 4.0, 16.0, 64.0];
        let vals: Vec<f64> = grid.iter().map(|&z| fid_z(&a, &b, ZParam::new(z).unwrap()).unwrap()).collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{vals:?}");
        }
    }

    #[test]
    fn fid_z_obeys_data_processing(seed: u64, d in 2usize..=3, d_out in 2usize..=3) {
        let mut rng = rng_from_seed(seed);
        let a = random_density_with(d, d, &mut rng).unwrap();
        let b = random_density_with(d, 1, &mut rng).unwrap();
        let ch = random_channel_with(d, d_out, 2, &mut rng).unwrap();
        let (ca, cb) = (ch.apply(&a).unwrap(), ch.apply(&b).unwrap());
        for z in [ZParam::UHLMANN, ZParam::HOLEVO] {
            prop_assert!(fid_z(&a, &b, z).unwrap() <= fid_z(&ca, &cb, z).unwrap() + 1e-8);
        }
    }

    #[test]
    fn uhlmann_basic_properties(seed: u64, (d, rank) in dim_rank()) {
        let (a, b) = (state(d, rank, seed), state(d, d, seed.wrapping_add(1)));
        let (a2, b2) = (state(2, 2, seed.wrapping_add(2)), state(2, 1, seed.wrapping_add(3)));
        let f = uhlmann(&a, &b).unwrap();
        prop_assert_eq!(f, uhlmann(&b, &a).unwrap());
        prop_assert!((uhlmann(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        let prod = uhlmann(&a.kron(&a2).unwrap(), &b.kron(&b2).unwrap()).unwrap();
        prop_assert!((prod - f * uhlmann(&a2, &b2).unwrap()).abs() < 1e-9);
        prop_assert!(f <= holevo(&a, &b).unwrap().sqrt() + 1e-9);
    }

    #[test]
    fn uhlmann_is_jointly_concave(seed: u64, d in 2usize..=3, t in 0.0f64..1.0) {
        let s: Vec<DensityMatrix> = (0..4).map(|k| state(d, 1 + k % d, seed.wrapping_add(k as u64))).collect();
        let mixed = uhlmann(&s[0].mix(&s[1], t).unwrap(), &s[2].mix(&s[3], t).unwrap()).unwrap();
        let avg = (1.0 - t) * uhlmann(&s[0], &s[2]).unwrap() + t * uhlmann(&s[1], &s[3]).unwrap();
        prop_assert!(mixed >= avg - 1e-8);
    }

    #[test]
    fn uhlmann_direct_sum(seed: u64, d in 2usize..=3, n in 2usize..=3) {
        let mut rng = rng_from_seed(seed);
        let w = random_probability_vector(n, &mut rng);
        let rhos: Vec<DensityMatrix> = (0..n).map(|_| random_density_with(d, d, &mut rng).unwrap()).collect();
        let sigmas: Vec<DensityMatrix> = (0..n).map(|_| random_density_with(d, 1, &mut rng).unwrap()).collect();
        let lhs = uhlmann(&cq_state(&w, &rhos).unwrap(), &cq_state(&w, &sigmas).unwrap()).unwrap();
        let rhs: f64 = (0..n).map(|x| w.probs()[x] * uhlmann(&rhos[x], &sigmas[x]).unwrap()).sum();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }
}

fn classical_tuple(seed: u64, r: usize, n: usize) -> ClassicalTuple {
    random_classical(&mut rng_from_seed(seed), r, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn classical_kwise_descends_and_bounds_matusita(seed: u64, r in 3usize..=5, n in 2usize..=5) {
        let t = classical_tuple(seed, r, n);
        let chain: Vec<f64> = (2..=r).map(|k| avg_kwise_classical(&t, k).unwrap()).collect();
        for w in chain.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{chain:?}");
        }
        prop_assert!((chain[0] - avg_pairwise_classical(&t)).abs() < 1e-12);
        prop_assert!((chain[r - 2] - matusita(&t)).abs() < 1e-12);
        prop_assert!(matusita(&t) <= avg_pairwise_classical(&t) + 1e-12);
    }

    #[test]
    fn classical_data_processing(seed: u64, r in 2usize..=4, n in 2usize..=4, m in 2usize..=4) {
        let t = classical_tuple(seed, r, n);
        let w = random_stochastic(&mut rng_from_seed(seed ^ 0xabc), m, n);
        let out = t.apply_stochastic(&w).unwrap();
        prop_assert!(matusita(&out) >= matusita(&t) - 1e-10);
        prop_assert!(avg_pairwise_classical(&out) >= avg_pairwise_classical(&t) - 1e-10);
        for k in 2..=r {
            prop_assert!(avg_kwise_classical(&out, k).unwrap() >= avg_kwise_classical(&t, k).unwrap() - 1e-10);
        }
        let single = apply_stochastic(&w, &t.dists()[0]).unwrap();
        prop_assert!((single.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_permutation_invariance(seed: u64, r in 2usize..=5, n in 2usize..=4) {
        let t = classical_tuple(seed, r, n);
        let rev = ClassicalTuple::new(t.dists().iter().rev().cloned().collect()).unwrap();
        prop_assert_eq!(matusita(&t), matusita(&rev));
        prop_assert_eq!(avg_pairwise_classical(&t), avg_pairwise_classical(&rev));
        for k in 2..=r {
            prop_assert_eq!(avg_kwise_classical(&t, k).unwrap(), avg_kwise_classical(&rev, k).unwrap());
        }
    }

    #[test]
    fn classical_direct_sum(seed: u64, r in 2usize..=4, n in 2usize..=3, blocks in 2usize..=3) {
        let mut rng = rng_from_seed(seed);
        let w = random_probability_vector(blocks, &mut rng);
        let parts: Vec<ClassicalTuple> = (0..blocks).map(|_| random_classical(&mut rng, r, n).unwrap()).collect();
        let joined = ClassicalTuple::new(
            (0..r)
                .map(|i| {
                    let v = parts.iter().zip(w.probs()).flat_map(|(p, &wx)| p.dists()[i].probs().iter().map(move |q| wx * q));
                    ProbabilityVector::normalized(v.collect()).unwrap()
                })
                .collect(),
        )
        .unwrap();
        let avg = |f: &dyn Fn(&ClassicalTuple) -> f64| parts.iter().zip(w.probs()).map(|(p, wx)| wx * f(p)).sum::<f64>();
        prop_assert!((matusita(&joined) - avg(&|p| matusita(p))).abs() < 1e-12);
        prop_assert!((avg_pairwise_classical(&joined) - avg(&|p| avg_pairwise_classical(p))).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kstar_agrees_with_primal_on_invertible_states(seed: u64, r in 2usize..=3, d in 2usize..=3) {
        let t = random_tuple(&mut rng_from_seed(seed), r, d, TupleShape::FullRank).unwrap();
        let k = f_sdp(&t, SdpForm::Kstar, &opts()).unwrap().value;
        let p = f_sdp(&t, SdpForm::Primal, &opts()).unwrap().value;
        prop_assert!((k - p).abs() < 1e-6, "{k} vs {p}");
    }

    #[test]
    fn sdp_fidelity_scales_linearly(seed: u64, r in 2usize..=3, d in 2usize..=3, c in 0.1f64..5.0) {
        let t = random_tuple(&mut rng_from_seed(seed), r, d, TupleShape::MixedRank).unwrap();
        let ops = t.operators();
        let base = f_sdp_operators(&ops, &opts()).unwrap();
        let scaled: Vec<HermitianMatrix> = ops.iter().map(|h| h.scale(c)).collect();
        let v = f_sdp_operators(&scaled, &opts()).unwrap();
        prop_assert!((v - c * base).abs() <= 1e-8 * c.max(1.0), "{v} vs {}", c * base);
    }

    #[test]
    fn regularized_sdp_fidelity_is_monotone_in_epsilon(seed: u64, r in 2usize..=3, d in 2usize..=3) {
        let t = random_tuple(&mut rng_from_seed(seed), r, d, TupleShape::MixedRank).unwrap();
        let vals: Vec<f64> = [0.0, 1e-3, 1e-2]
            .iter()
            .map(|&e| (1.0 + e) * f_sdp(&regularized_tuple(&t, e).unwrap(), SdpForm::Kstar, &opts()).unwrap().value)
            .collect();
        prop_assert!(vals[0] <= vals[1] + 1e-7 && vals[1] <= vals[2] + 1e-7, "{vals:?}");
    }

    #[test]
    fn multivariate_fidelities_are_permutation_invariant(seed: u64, r in 2usize..=4, d in 2usize..=3) {
        let t = random_tuple(&mut rng_from_seed(seed), r, d, TupleShape::MixedRank).unwrap();
        let rev = reversed_tuple(&t);
        let sdp = |t: &StateTuple| f_sdp(t, SdpForm::Kstar, &opts()).unwrap().value;
        let sec = |t: &StateTuple| f_secrecy(t, SecrecyForm::Kform, &opts()).unwrap().value;
        let le = |t: &StateTuple| f_log_euclidean(t, &EpsSchedule::default()).unwrap().value;
        prop_assert!((sdp(&t) - sdp(&rev)).abs() < 1e-8);
        prop_assert!((sec(&t) - sec(&rev)).abs() < 1e-8);
        prop_assert!((le(&t) - le(&rev)).abs() < 1e-10);
    }

    #[test]
    fn commuting_sdp_reduces_to_classical(seed: u64, r in 2usize..=4, n in 2usize..=4) {
        let ct = classical_tuple(seed, r, n);
        let t = multifid::states::commuting_tuple_from_probs(ct.dists()).unwrap();
        let v = f_sdp(&t, SdpForm::Kstar, &opts()).unwrap().value;
        prop_assert!((v - avg_pairwise_classical(&ct)).abs() < 1e-6);
        let le = f_log_euclidean(&t, &EpsSchedule::default()).unwrap().value;
        prop_assert!((le - matusita(&ct)).abs() < 1e-6);
    }
}

#[test]
fn diagonal_qubit_example() {
    let a = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
    let b = DensityMatrix::diagonal(&[0.25, 0.75]).unwrap();
    let oracle = 0.125f64.sqrt() + 0.375f64.sqrt();
    assert!((uhlmann(&a, &b).unwrap() - oracle).abs() < 1e-12);
    assert!((holevo(&a, &b).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn orthogonal_pure_states_have_zero_fidelity() {
    let zero = DensityMatrix::pure(&[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
    let one = DensityMatrix::pure(&[c64(0.0, 0.0), c64(1.0, 0.0)]).unwrap();
    assert!(uhlmann(&zero, &one).unwrap().abs() < 1e-12);
    let t = StateTuple::new(vec![zero, one]).unwrap();
    assert!(f_secrecy(&t, SecrecyForm::Kform, &opts()).unwrap().value.abs() < 1e-7);
}
