use rand::seq::SliceRandom;
use rand::Rng;

use crate::bivariate::{bures_distance, hellinger_distance_q, uhlmann, EpsSchedule, ZParam};
use crate::classical::{avg_kwise_classical, avg_pairwise_classical, hellinger_distance, matusita, ClassicalTuple};
use crate::error::Result;
use crate::io::StateTupleFile;
use crate::measured::MeasuredOptions;
use crate::multivariate::{
    avg_kwise_log_euclidean, avg_pairwise_z, default_sdp_options, f_log_euclidean, f_measured, f_sdp, f_sdp_pure,
    f_secrecy, min_d_half_closed_form, oveloh, regularized_tuple, sdp_lower_bound_perm, SdpForm, SecrecyForm,
};
use crate::states::{
    commuting_tuple_from_probs, cq_state, random_channel_with, random_density_with, random_pure_vector, rng_from_seed,
    ProbabilityVector, SeededRng, StateTuple,
};

use super::generators::{random_classical, random_stochastic, random_tuple, TupleShape};
use super::{Check, Suite, Trial};

const CLOSED: f64 = 1e-9;
const SINGLE_SDP: f64 = 1e-7;
const NESTED: f64 = 1e-5;

pub(crate) static SUITES: &[Suite] = &[
    Suite {
        id: "inequality-chain",
        properties: &[
            ("chain.holevo-le-secrecy", SINGLE_SDP),
            ("chain.secrecy-le-sdp", SINGLE_SDP),
            ("chain.sdp-le-uhlmann", SINGLE_SDP),
            ("chain.uhlmann-le-sqrt-holevo", SINGLE_SDP),
        ],
        run: inequality_chain,
    },
    Suite {
        id: "classical-reduction",
        properties: &[
            ("reduction.sdp", 0.0),
            ("reduction.secrecy", 0.0),
            ("reduction.log-euclidean-matusita", 0.0),
            ("reduction.z-independence", 0.0),
        ],
        run: classical_reduction,
    },
    Suite {
        id: "duality",
        properties: &[("duality.primal-dual", 0.0), ("duality.kstar-pure", 0.0), ("duality.kstar-primal", 0.0)],
        run: duality,
    },
    Suite {
        id: "dpi-all",
        properties: &[
            ("dpi.uhlmann", SINGLE_SDP),
            ("dpi.holevo", SINGLE_SDP),
            ("dpi.sdp", SINGLE_SDP),
            ("dpi.secrecy", SINGLE_SDP),
            ("dpi.log-euclidean", SINGLE_SDP),
        ],
        run: dpi_all,
    },
    Suite {
        id: "continuity",
        properties: &[
            ("continuity.matusita", CLOSED),
            ("continuity.uhlmann", CLOSED),
            ("continuity.holevo", CLOSED),
            ("continuity.sdp", SINGLE_SDP),
            ("continuity.secrecy", SINGLE_SDP),
        ],
        run: continuity,
    },
    Suite {
        id: "kwise-ordering-classical",
        properties: &[
            ("kwise.classical-descending", CLOSED),
            ("kwise.classical-am-gm", CLOSED),
            ("kwise.classical-dpi", 1e-10),
        ],
        run: kwise_classical,
    },
    Suite {
        id: "kwise-ordering-log-euclidean",
        properties: &[("kwise.log-euclidean-descending", 1e-6), ("log-euclidean.pairwise-upper-bound", 1e-6)],
        run: kwise_log_euclidean,
    },
    Suite {
        id: "oveloh",
        properties: &[("oveloh.identity", 0.0), ("oveloh.holevo-inequality", SINGLE_SDP), ("oveloh.descent", NESTED)],
        run: oveloh_suite,
    },
    Suite {
        id: "supermult-pairwise",
        properties: &[("supermult.uhlmann", 1e-8), ("supermult.holevo", 1e-8)],
        run: supermult_pairwise,
    },
    Suite {
        id: "coarse-graining",
        properties: &[
            ("coarse.uhlmann", CLOSED),
            ("coarse.holevo", CLOSED),
            ("coarse.sdp", SINGLE_SDP),
            ("coarse.secrecy", SINGLE_SDP),
        ],
        run: coarse_graining,
    },
    Suite {
        id: "permutation-invariance",
        properties: &[("permutation.sdp", 0.0), ("permutation.secrecy", 0.0), ("permutation.log-euclidean", 0.0)],
        run: permutation_invariance,
    },
    Suite {
        id: "direct-sum",
        properties: &[
            ("direct-sum.uhlmann", 0.0),
            ("direct-sum.holevo", 0.0),
            ("direct-sum.sdp", 0.0),
            ("direct-sum.secrecy", 0.0),
        ],
        run: direct_sum,
    },
    Suite {
        id: "sdp-bounds",
        properties: &[
            ("sdp.permutation-lower-bound", SINGLE_SDP),
            ("sdp.epsilon-monotonicity", SINGLE_SDP),
            ("sdp.scaling", 0.0),
        ],
        run: sdp_bounds,
    },
    Suite { id: "measured-vs-uhlmann", properties: &[("measured.ge-uhlmann", 1e-6)], run: measured_vs_uhlmann },
];

fn describe(t: &StateTuple, extra: &str) -> String {
    format!("r={} d={}{}", t.r(), t.dim(), extra)
}

fn pick(rng: &mut SeededRng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

fn mixed_tuple(rng: &mut SeededRng, r: (usize, usize), d: (usize, usize)) -> Result<StateTuple> {
    let (r, d) = (pick(rng, r.0, r.1), pick(rng, d.0, d.1));
    random_tuple(rng, r, d, TupleShape::MixedRank)
}

fn trial(t: &StateTuple, extra: &str, checks: Vec<Check>) -> Trial {
    Trial { descriptor: describe(t, extra), tuple: Some(StateTupleFile::from_tuple(t, None)), checks }
}

fn inequality_chain(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let t = mixed_tuple(&mut rng, (2, 5), (2, 4))?;
    let o = default_sdp_options();
    let fh = avg_pairwise_z(&t, ZParam::HOLEVO)?.value;
    let fu = avg_pairwise_z(&t, ZParam::UHLMANN)?.value;
    let fs = f_secrecy(&t, SecrecyForm::Kform, &o)?.value;
    let fsdp = f_sdp(&t, SdpForm::Kstar, &o)?.value;
    Ok(trial(
        &t,
        "",
        vec![
            Check::new("chain.holevo-le-secrecy", fs - fh),
            Check::new("chain.secrecy-le-sdp", fsdp - fs),
            Check::new("chain.sdp-le-uhlmann", fu - fsdp),
            Check::new("chain.uhlmann-le-sqrt-holevo", fh.sqrt() - fu),
        ],
    ))
}

fn classical_reduction(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let (r, n) = (pick(&mut rng, 2, 5), pick(&mut rng, 2, 4));
    let c = random_classical(&mut rng, r, n)?;
    let t = commuting_tuple_from_probs(c.dists())?;
    let o = default_sdp_options();
    let avg = avg_pairwise_classical(&c);
    let zs: Vec<f64> =
        [0.5, 1.0, 4.0].iter().map(|&z| Ok(avg_pairwise_z(&t, ZParam::Finite(z))?.value)).collect::<Result<_>>()?;
    let spread = zs.iter().map(|z| (z - avg).abs()).fold(0.0, f64::max);
    Ok(trial(
        &t,
        " commuting",
        vec![
            Check::close("reduction.sdp", f_sdp(&t, SdpForm::Kstar, &o)?.value, avg, 1e-6),
            Check::close("reduction.secrecy", f_secrecy(&t, SecrecyForm::Kform, &o)?.value, avg, 1e-6),
            Check::close(
                "reduction.log-euclidean-matusita",
                f_log_euclidean(&t, &EpsSchedule::default())?.value,
                matusita(&c),
                1e-6,
            ),
            Check::new("reduction.z-independence", 1e-8 - spread),
        ],
    ))
}

fn duality(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let (r, d) = (pick(&mut rng, 2, 4), pick(&mut rng, 2, 4));
    let t = random_tuple(&mut rng, r, d, TupleShape::FullRank)?;
    let o = default_sdp_options();
    let primal = f_sdp(&t, SdpForm::Primal, &o)?.value;
    let dual = f_sdp(&t, SdpForm::Dual, &o)?.value;
    let kstar = f_sdp(&t, SdpForm::Kstar, &o)?.value;

    let vs: Vec<_> = (0..pick(&mut rng, 2, 4)).map(|_| random_pure_vector(d, &mut rng)).collect();
    let pure_gram = f_sdp_pure(&vs, &o)?.value;
    let pure_full = f_sdp(&StateTuple::from_pure(&vs)?, SdpForm::Kstar, &o)?.value;
    Ok(trial(
        &t,
        " full-rank",
        vec![
            Check::close("duality.primal-dual", primal, dual, 2e-8 * (1.0 + primal.abs())),
            Check::close("duality.kstar-pure", pure_gram, pure_full, 1e-6),
            Check::close("duality.kstar-primal", kstar, primal, 1e-6),
        ],
    ))
}

fn dpi_all(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let t = mixed_tuple(&mut rng, (2, 4), (2, 3))?;
    let d_out = pick(&mut rng, 2, 4);
    let env = pick(&mut rng, t.dim().div_ceil(d_out).max(1), 3.max(t.dim().div_ceil(d_out)));
    let ch = random_channel_with(t.dim(), d_out, env, &mut rng)?;
    let out = t.apply_channel(&ch)?;
    let o = default_sdp_options();
    let sch = EpsSchedule::default();
    let delta = |f: &dyn Fn(&StateTuple) -> Result<f64>| -> Result<f64> { Ok(f(&out)? - f(&t)?) };
    Ok(trial(
        &t,
        &format!(" channel {}->{} env {}", t.dim(), d_out, env),
        vec![
            Check::new("dpi.uhlmann", delta(&|x| Ok(avg_pairwise_z(x, ZParam::UHLMANN)?.value))?),
            Check::new("dpi.holevo", delta(&|x| Ok(avg_pairwise_z(x, ZParam::HOLEVO)?.value))?),
            Check::new("dpi.sdp", delta(&|x| Ok(f_sdp(x, SdpForm::Kstar, &o)?.value))?),
            Check::new("dpi.secrecy", delta(&|x| Ok(f_secrecy(x, SecrecyForm::Kform, &o)?.value))?),
            Check::new("dpi.log-euclidean", delta(&|x| Ok(f_log_euclidean(x, &sch)?.value))?),
        ],
    ))
}

/// `(1 − w) ρ_i + w τ_i` with random states `τ_i` and a per-trial weight.
fn perturbed(rng: &mut SeededRng, t: &StateTuple) -> Result<StateTuple> {
    let w: f64 = 0.3 * rng.random::<f64>().powi(2);
    let states = t
        .states()
        .iter()
        .map(|s| {
            let tau = random_density_with(t.dim(), pick(rng, 1, t.dim()), rng)?;
            s.mix(&tau, w)
        })
        .collect::<Result<Vec<_>>>()?;
    StateTuple::new(states)
}

fn continuity(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let t = mixed_tuple(&mut rng, (2, 4), (2, 3))?;
    let s = perturbed(&mut rng, &t)?;
    let r = t.r() as f64;
    let ratio = r / (r - 1.0);
    let o = default_sdp_options();
    let mean = |f: &dyn Fn(usize) -> Result<f64>| -> Result<f64> { Ok((0..t.r()).map(f).sum::<Result<f64>>()? / r) };

    let eps_b = mean(&|i| bures_distance(t.get(i), s.get(i)))?;
    let eps_h = mean(&|i| hellinger_distance_q(t.get(i), s.get(i)))?;
    let eps_f = 1.0 - mean(&|i| uhlmann(t.get(i), s.get(i)))?;
    let du = (avg_pairwise_z(&t, ZParam::UHLMANN)?.value - avg_pairwise_z(&s, ZParam::UHLMANN)?.value).abs();
    let dh = (avg_pairwise_z(&t, ZParam::HOLEVO)?.value - avg_pairwise_z(&s, ZParam::HOLEVO)?.value).abs();
    let dsdp = (f_sdp(&t, SdpForm::Kstar, &o)?.value - f_sdp(&s, SdpForm::Kstar, &o)?.value).abs();
    let dsec = (f_secrecy(&t, SecrecyForm::Kform, &o)?.value - f_secrecy(&s, SecrecyForm::Kform, &o)?.value).abs();
    let sqrt2 = std::f64::consts::SQRT_2;

    // classical companion: perturb a random commuting tuple
    let n = pick(&mut rng, 2, 4);
    let p = random_classical(&mut rng, t.r(), n)?;
    let w: f64 = 0.3 * rng.random::<f64>().powi(2);
    let q = ClassicalTuple::new(
        p.dists()
            .iter()
            .map(|pi| {
                let noise = crate::states::random_probability_vector(n, &mut rng);
                ProbabilityVector::normalized(
                    pi.probs().iter().zip(noise.probs()).map(|(a, b)| (1.0 - w) * a + w * b).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let eps_c =
        (0..t.r()).map(|i| Ok(hellinger_distance(&p.dists()[i], &q.dists()[i])?.powi(2))).sum::<Result<f64>>()? / r;
    let dm = (matusita(&p) - matusita(&q)).abs();

    let mut checks = vec![
        Check::new("continuity.matusita", r * eps_c.powf(1.0 / r) - dm),
        Check::new("continuity.uhlmann", 2.0 * sqrt2 * eps_b - du),
        Check::new("continuity.holevo", 2.0 * sqrt2 * eps_h - dh),
        Check::new("continuity.sdp", ratio * (eps_f.max(0.0) * (2.0 - eps_f)).sqrt() - dsdp),
    ];
    if eps_b <= 1.0 {
        checks.push(Check::new("continuity.secrecy", 2.0 * sqrt2 * ratio * eps_b - dsec));
    }
    Ok(trial(&t, &format!(" perturbation bures {eps_b:.3e}"), checks))
}

fn kwise_classical(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let (r, n) = (pick(&mut rng, 3, 5), pick(&mut rng, 2, 5));
    let c = random_classical(&mut rng, r, n)?;
    let vals = (2..=r).map(|k| avg_kwise_classical(&c, k)).collect::<Result<Vec<_>>>()?;
    let desc = vals.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    let m = pick(&mut rng, 2, 5);
    let w = random_stochastic(&mut rng, m, n);
    let pushed = c.apply_stochastic(&w)?;
    let dpi = [matusita(&pushed) - matusita(&c), avg_pairwise_classical(&pushed) - avg_pairwise_classical(&c)]
        .into_iter()
        .chain((2..=r).map(|k| avg_kwise_classical(&pushed, k).unwrap_or(f64::NAN) - vals[k - 2]))
        .fold(f64::INFINITY, f64::min);
    let t = commuting_tuple_from_probs(c.dists())?;
    Ok(trial(
        &t,
        " commuting",
        vec![
            Check::new("kwise.classical-descending", desc),
            Check::new("kwise.classical-am-gm", avg_pairwise_classical(&c) - matusita(&c)),
            Check::new("kwise.classical-dpi", dpi),
        ],
    ))
}

fn kwise_log_euclidean(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    // generic rank-deficient tuples mostly have trivial common support, where every value is 0
    let shape = if rng.random_bool(2.0 / 3.0) { TupleShape::FullRank } else { TupleShape::MixedRank };
    let (r, d) = (pick(&mut rng, 3, 5), pick(&mut rng, 2, 3));
    let t = random_tuple(&mut rng, r, d, shape)?;
    let sch = EpsSchedule::default();
    let vals = (2..=t.r()).map(|k| Ok(avg_kwise_log_euclidean(&t, k, &sch)?.value)).collect::<Result<Vec<_>>>()?;
    let desc = vals.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    let upper = avg_pairwise_z(&t, ZParam::Flat)?.value - f_log_euclidean(&t, &sch)?.value;
    Ok(trial(
        &t,
        "",
        vec![
            Check::new("kwise.log-euclidean-descending", desc),
            Check::new("log-euclidean.pairwise-upper-bound", upper),
        ],
    ))
}

fn oveloh_suite(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let (r, d) = (pick(&mut rng, 2, 5), pick(&mut rng, 2, 4));
    let t = random_tuple(&mut rng, r, d, TupleShape::FullRank)?;
    let sch = EpsSchedule::default();
    let ov = oveloh(&t, &sch)?;
    let o = ov.divergence.value;
    let fl = f_log_euclidean(&t, &sch)?.value;
    let rf = r as f64;
    let bound = 1.0 / rf + (rf - 1.0) / rf * (-o).exp();
    Ok(trial(
        &t,
        " full-rank",
        vec![
            Check::close("oveloh.identity", (-o).exp(), fl, 1e-8),
            Check::new("oveloh.holevo-inequality", min_d_half_closed_form(&t)? - bound),
            Check::new("oveloh.descent", ov.divergence.certificate.descent_margin.unwrap_or(f64::NAN)),
        ],
    ))
}

fn supermult_pairwise(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let t = mixed_tuple(&mut rng, (2, 3), (2, 3))?;
    let t2 = t.tensor_power(2)?;
    let gap = |z: ZParam| -> Result<f64> { Ok(avg_pairwise_z(&t2, z)?.value - avg_pairwise_z(&t, z)?.value.powi(2)) };
    Ok(trial(
        &t,
        "",
        vec![
            Check::new("supermult.uhlmann", gap(ZParam::UHLMANN)?),
            Check::new("supermult.holevo", gap(ZParam::HOLEVO)?),
        ],
    ))
}

fn coarse_graining(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let big = mixed_tuple(&mut rng, (3, 5), (2, 3))?;
    let r = pick(&mut rng, 2, big.r() - 1);
    let m = big.r() - r;
    let small = big.subset(&(0..r).collect::<Vec<_>>())?;
    let factor = ((r + m) * (r + m - 1)) as f64 / (r * (r - 1)) as f64;
    let additive = m as f64 / (r * (r - 1)) as f64;
    let o = default_sdp_options();
    let pair =
        |z: ZParam| -> Result<f64> { Ok(factor * avg_pairwise_z(&big, z)?.value - avg_pairwise_z(&small, z)?.value) };
    let sdp = factor * f_sdp(&big, SdpForm::Kstar, &o)?.value - f_sdp(&small, SdpForm::Kstar, &o)?.value;
    let sec = factor * f_secrecy(&big, SecrecyForm::Kform, &o)?.value + additive
        - f_secrecy(&small, SecrecyForm::Kform, &o)?.value;
    Ok(trial(
        &big,
        &format!(" keep {r}"),
        vec![
            Check::new("coarse.uhlmann", pair(ZParam::UHLMANN)?),
            Check::new("coarse.holevo", pair(ZParam::HOLEVO)?),
            Check::new("coarse.sdp", sdp),
            Check::new("coarse.secrecy", sec),
        ],
    ))
}

fn permutation_invariance(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let t = mixed_tuple(&mut rng, (3, 4), (2, 3))?;
    let mut perm: Vec<usize> = (0..t.r()).collect();
    perm.shuffle(&mut rng);
    let p = t.permuted(&perm)?;
    let o = default_sdp_options();
    let sch = EpsSchedule::default();
    Ok(trial(
        &t,
        &format!(" perm {perm:?}"),
        vec![
            Check::close(
                "permutation.sdp",
                f_sdp(&t, SdpForm::Kstar, &o)?.value,
                f_sdp(&p, SdpForm::Kstar, &o)?.value,
                1e-8,
            ),
            Check::close(
                "permutation.secrecy",
                f_secrecy(&t, SecrecyForm::Kform, &o)?.value,
                f_secrecy(&p, SecrecyForm::Kform, &o)?.value,
                1e-8,
            ),
            Check::close(
                "permutation.log-euclidean",
                f_log_euclidean(&t, &sch)?.value,
                f_log_euclidean(&p, &sch)?.value,
                1e-10,
            ),
        ],
    ))
}

fn direct_sum(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let (r, d, nx) = (pick(&mut rng, 2, 3), 2, pick(&mut rng, 2, 3));
    let blocks: Vec<StateTuple> =
        (0..nx).map(|_| random_tuple(&mut rng, r, d, TupleShape::MixedRank)).collect::<Result<_>>()?;
    let p = crate::states::random_probability_vector(nx, &mut rng);
    let cq = StateTuple::new(
        (0..r)
            .map(|i| cq_state(&p, &blocks.iter().map(|b| b.get(i).clone()).collect::<Vec<_>>()))
            .collect::<Result<_>>()?,
    )?;
    let o = default_sdp_options();
    let check = |id: &'static str, f: &dyn Fn(&StateTuple) -> Result<f64>| -> Result<Check> {
        let avg: f64 = blocks.iter().zip(p.probs()).map(|(b, w)| Ok(w * f(b)?)).sum::<Result<f64>>()?;
        Ok(Check::close(id, f(&cq)?, avg, 1e-7))
    };
    Ok(trial(
        &cq,
        &format!(" cq blocks {nx}"),
        vec![
            check("direct-sum.uhlmann", &|x| Ok(avg_pairwise_z(x, ZParam::UHLMANN)?.value))?,
            check("direct-sum.holevo", &|x| Ok(avg_pairwise_z(x, ZParam::HOLEVO)?.value))?,
            check("direct-sum.sdp", &|x| Ok(f_sdp(x, SdpForm::Kstar, &o)?.value))?,
            check("direct-sum.secrecy", &|x| Ok(f_secrecy(x, SecrecyForm::Kform, &o)?.value))?,
        ],
    ))
}

fn sdp_bounds(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let t = mixed_tuple(&mut rng, (2, 5), (2, 3))?;
    let o = default_sdp_options();
    let f0 = f_sdp(&t, SdpForm::Kstar, &o)?.value;
    let lb = sdp_lower_bound_perm(&t)?;
    let scaled: Vec<f64> = [0.0, 1e-3, 1e-2]
        .iter()
        .map(|&e| Ok((1.0 + e) * f_sdp(&regularized_tuple(&t, e)?, SdpForm::Kstar, &o)?.value))
        .collect::<Result<_>>()?;
    let mono = scaled.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let c = 0.1 + 3.0 * rng.random::<f64>();
    let ops: Vec<_> = t.operators().iter().map(|h| h.scale(c)).collect();
    let fc = crate::multivariate::f_sdp_operators(&ops, &o)?;
    Ok(trial(
        &t,
        &format!(" scale {c:.3}"),
        vec![
            Check::new("sdp.permutation-lower-bound", f0 - lb),
            Check::new("sdp.epsilon-monotonicity", mono),
            Check::close("sdp.scaling", fc, c * f0, 1e-8 * c.max(1.0)),
        ],
    ))
}

fn measured_vs_uhlmann(seed: u64) -> Result<Trial> {
    let mut rng = rng_from_seed(seed);
    let t = mixed_tuple(&mut rng, (2, 3), (2, 2))?;
    let fu = avg_pairwise_z(&t, ZParam::UHLMANN)?.value;
    let opts = MeasuredOptions { budget: 3000, restarts: 3, seed, ..Default::default() };
    let fm = f_measured(&t, &opts)?.value;
    Ok(trial(&t, "", vec![Check::new("measured.ge-uhlmann", fm - fu)]))
}
