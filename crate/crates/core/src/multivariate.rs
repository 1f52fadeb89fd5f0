//! Multivariate fidelities and divergences of state tuples.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::bivariate::{fid_z, log_euclidean_operator, log_euclidean_trace, uhlmann, EpsSchedule, ZParam};
use crate::classical::combinations;
use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix, HermitianMatrix};
use crate::measured::{measured_upper_bound, MeasuredOptions};
use crate::sdp::{
    build_fsdp_dual, build_fsdp_primal, build_geometric_multi_sdp, build_kstar, build_kstar_pure, build_secrecy_inf,
    build_secrecy_kform, build_secrecy_sup, ComplexSdp, ComplexSolution, SolverOptions, Status,
};
use crate::states::{random_density_with, rng_from_seed, DensityMatrix, ProbabilityVector, StateTuple};

/// Slack allowed outside `[0, 1]` before a fidelity is reported as broken.
pub const RANGE_TOL: f64 = 1e-8;

/// Side length (complex) beyond which an SDP is flagged as expensive.
pub const LARGE_SDP_SIDE: usize = 27;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    AvgPairwise(ZParam),
    SdpKstar,
    SdpPrimal,
    SdpDual,
    SdpBoth,
    SdpPure,
    SecrecyKform,
    SecrecySup,
    SecrecyInf,
    SecrecyBoth,
    GeometricSdp,
    LogEuclidean,
    LogEuclideanDivergence,
    Oveloh,
    KwiseLogEuclidean(usize),
    Measured,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::AvgPairwise(z) => write!(f, "avg_pairwise_z[{z}]"),
            Method::SdpKstar => write!(f, "sdp_kstar"),
            Method::SdpPrimal => write!(f, "sdp_primal"),
            Method::SdpDual => write!(f, "sdp_dual"),
            Method::SdpBoth => write!(f, "sdp_both"),
            Method::SdpPure => write!(f, "sdp_pure"),
            Method::SecrecyKform => write!(f, "secrecy_kform"),
            Method::SecrecySup => write!(f, "secrecy_sup"),
            Method::SecrecyInf => write!(f, "secrecy_inf"),
            Method::SecrecyBoth => write!(f, "secrecy_both"),
            Method::GeometricSdp => write!(f, "geometric_sdp"),
            Method::LogEuclidean => write!(f, "log_euclidean"),
            Method::LogEuclideanDivergence => write!(f, "log_euclidean_divergence"),
            Method::Oveloh => write!(f, "oveloh"),
            Method::KwiseLogEuclidean(k) => write!(f, "kwise_log_euclidean[{k}]"),
            Method::Measured => write!(f, "measured"),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Certificate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primal_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smallest_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_exhausted: Option<bool>,
    /// Unclamped value when it differs from the reported one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_value: Option<f64>,
    /// The secrecy measure `S` behind an `F_S` value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secrecy_measure: Option<f64>,
    /// Best direct-descent objective minus the reported divergence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descent_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityValue {
    /// Fidelity in `[0, 1]`, or a nonnegative divergence (possibly `+∞`).
    pub value: f64,
    pub method: Method,
    pub certificate: Certificate,
}

impl FidelityValue {
    fn fidelity(raw: f64, method: Method, mut certificate: Certificate) -> Result<Self> {
        if !raw.is_finite() || !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&raw) {
            return Err(Error::invariant("fidelity range", format!("{method} produced {raw}")));
        }
        let value = raw.clamp(0.0, 1.0);
        if value != raw {
            certificate.raw_value = Some(raw);
        }
        Ok(FidelityValue { value, method, certificate })
    }

    fn divergence(raw: f64, method: Method, mut certificate: Certificate) -> Result<Self> {
        if raw.is_nan() || raw < -RANGE_TOL {
            return Err(Error::invariant("divergence range", format!("{method} produced {raw}")));
        }
        let value = raw.max(0.0);
        if value != raw {
            certificate.raw_value = Some(raw);
        }
        Ok(FidelityValue { value, method, certificate })
    }
}

/// Solver settings used when the caller does not supply any.
pub fn default_sdp_options() -> SolverOptions {
    SolverOptions::with_gap_tol(1e-9)
}

fn pair_average(r: usize, mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<f64> {
    let mut s = 0.0;
    for i in 0..r {
        for j in i + 1..r {
            s += f(i, j)?;
        }
    }
    Ok(2.0 * s / (r * (r - 1)) as f64)
}

/// `(2/r(r−1)) Σ_{i<j} F_z(ρ_i, ρ_j)`; `z = ½` is the Uhlmann and `z = 1` the
/// Holevo average.
pub fn avg_pairwise_z(t: &StateTuple, z: ZParam) -> Result<FidelityValue> {
    let raw = pair_average(t.r(), |i, j| fid_z(t.get(i), t.get(j), z))?;
    FidelityValue::fidelity(raw, Method::AvgPairwise(z), Certificate::default())
}

/// Which SDP formulation to solve for `F_SDP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SdpForm {
    /// Conditioned form over `K` with identity diagonal blocks.
    #[default]
    Kstar,
    Primal,
    Dual,
    /// Primal and dual forms separately; the value is their midpoint.
    Both,
}

impl std::str::FromStr for SdpForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kstar" => Ok(SdpForm::Kstar),
            "primal" => Ok(SdpForm::Primal),
            "dual" => Ok(SdpForm::Dual),
            "both" => Ok(SdpForm::Both),
            _ => Err(Error::Unknown { kind: "sdp form", name: s.to_string() }),
        }
    }
}

fn size_warning(side: usize) -> Option<String> {
    (side > LARGE_SDP_SIDE).then(|| format!("SDP of side {side} exceeds {LARGE_SDP_SIDE}; expect long solve times"))
}

fn status_warning(status: Status, gap: f64) -> Option<String> {
    (status != Status::Optimal)
        .then(|| format!("solver status {status:?} before reaching the gap tolerance; best iterate has gap {gap:.2e}"))
}

fn solve_certified(sdp: &ComplexSdp, opts: &SolverOptions) -> Result<(ComplexSolution, Certificate)> {
    let sol = sdp.solve(opts)?;
    let cert = Certificate {
        gap: Some(sol.gap.abs()),
        primal_value: Some(sol.primal_value),
        dual_value: Some(sol.dual_value),
        status: Some(sol.status),
        iterations: Some(sol.iterations),
        warning: status_warning(sol.status, sol.gap.abs()).or_else(|| size_warning(sdp.blocks[0])),
        ..Default::default()
    };
    Ok((sol, cert))
}

/// Raw `F_SDP` of arbitrary PSD operators (no range check), via the
/// conditioned form.
pub fn f_sdp_operators(ops: &[HermitianMatrix], opts: &SolverOptions) -> Result<f64> {
    Ok(build_kstar(ops)?.solve(opts)?.midpoint())
}

/// Multivariate SDP fidelity.
pub fn f_sdp(t: &StateTuple, form: SdpForm, opts: &SolverOptions) -> Result<FidelityValue> {
    let ops = t.operators();
    let (raw, cert, method) = match form {
        SdpForm::Kstar => {
            let (sol, cert) = solve_certified(&build_kstar(&ops)?, opts)?;
            (sol.midpoint(), cert, Method::SdpKstar)
        }
        SdpForm::Primal => {
            let (sol, cert) = solve_certified(&build_fsdp_primal(&ops)?, opts)?;
            (sol.midpoint(), cert, Method::SdpPrimal)
        }
        SdpForm::Dual => {
            let (sol, cert) = solve_certified(&build_fsdp_dual(&ops)?, opts)?;
            (sol.midpoint(), cert, Method::SdpDual)
        }
        SdpForm::Both => {
            let (p, pc) = solve_certified(&build_fsdp_primal(&ops)?, opts)?;
            let (d, dc) = solve_certified(&build_fsdp_dual(&ops)?, opts)?;
            let (pv, dv) = (p.midpoint(), d.midpoint());
            let worst = if p.status != Status::Optimal { p.status } else { d.status };
            let cert = Certificate {
                gap: Some((pv - dv).abs().max(pc.gap.unwrap_or(0.0)).max(dc.gap.unwrap_or(0.0))),
                primal_value: Some(pv),
                dual_value: Some(dv),
                status: Some(worst),
                iterations: Some(p.iterations + d.iterations),
                warning: pc.warning.or(dc.warning),
                ..Default::default()
            };
            (0.5 * (pv + dv), cert, Method::SdpBoth)
        }
    };
    FidelityValue::fidelity(raw, method, cert)
}

/// `F_SDP` of pure states given as unit vectors, via the `r × r` Gram form.
pub fn f_sdp_pure(vectors: &[Vec<num_complex::Complex64>], opts: &SolverOptions) -> Result<FidelityValue> {
    let (sol, cert) = solve_certified(&build_kstar_pure(vectors)?, opts)?;
    FidelityValue::fidelity(sol.midpoint(), Method::SdpPure, cert)
}

/// Which SDP formulation to solve for the secrecy measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecrecyForm {
    #[default]
    Kform,
    Sup,
    Inf,
    Both,
}

impl std::str::FromStr for SecrecyForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kform" => Ok(SecrecyForm::Kform),
            "sup" | "dual" => Ok(SecrecyForm::Sup),
            "inf" | "primal" => Ok(SecrecyForm::Inf),
            "both" => Ok(SecrecyForm::Both),
            _ => Err(Error::Unknown { kind: "secrecy form", name: s.to_string() }),
        }
    }
}

/// `S = sup_σ (1/r) Σ_i F(ρ_i, σ)` with its certificate.
pub fn secrecy_measure(t: &StateTuple, form: SecrecyForm, opts: &SolverOptions) -> Result<(f64, Certificate, Method)> {
    let ops = t.operators();
    let one = |sdp: ComplexSdp| -> Result<(f64, Certificate)> {
        let (sol, cert) = solve_certified(&sdp, opts)?;
        Ok((sol.midpoint(), cert))
    };
    Ok(match form {
        SecrecyForm::Kform => {
            let (v, c) = one(build_secrecy_kform(&ops)?)?;
            (v, c, Method::SecrecyKform)
        }
        SecrecyForm::Sup => {
            let (v, c) = one(build_secrecy_sup(&ops)?)?;
            (v, c, Method::SecrecySup)
        }
        SecrecyForm::Inf => {
            let (v, c) = one(build_secrecy_inf(&ops)?)?;
            (v, c, Method::SecrecyInf)
        }
        SecrecyForm::Both => {
            let (s, sc) = one(build_secrecy_sup(&ops)?)?;
            let (i, ic) = one(build_secrecy_inf(&ops)?)?;
            let cert = Certificate {
                gap: Some((s - i).abs().max(sc.gap.unwrap_or(0.0)).max(ic.gap.unwrap_or(0.0))),
                primal_value: Some(i),
                dual_value: Some(s),
                status: if sc.status != Some(Status::Optimal) { sc.status } else { ic.status },
                iterations: Some(sc.iterations.unwrap_or(0) + ic.iterations.unwrap_or(0)),
                warning: sc.warning,
                ..Default::default()
            };
            (0.5 * (s + i), cert, Method::SecrecyBoth)
        }
    })
}

/// Secrecy-based multivariate fidelity `F_S = (r S² − 1)/(r − 1)`, clamped at 0.
pub fn f_secrecy(t: &StateTuple, form: SecrecyForm, opts: &SolverOptions) -> Result<FidelityValue> {
    let (s, mut cert, method) = secrecy_measure(t, form, opts)?;
    cert.secrecy_measure = Some(s);
    let r = t.r() as f64;
    let raw = (r * s * s - 1.0) / (r - 1.0);
    if raw > 1.0 + RANGE_TOL || !raw.is_finite() {
        return Err(Error::invariant("fidelity range", format!("{method} produced {raw}")));
    }
    let value = raw.clamp(0.0, 1.0);
    if value != raw {
        cert.raw_value = Some(raw);
    }
    Ok(FidelityValue { value, method, certificate: cert })
}

/// Multivariate fidelity from the dual `F_SDP` form with Hermitian off-diagonal blocks.
pub fn f_geometric_sdp(t: &StateTuple, opts: &SolverOptions) -> Result<FidelityValue> {
    let (sol, cert) = solve_certified(&build_geometric_multi_sdp(&t.operators())?, opts)?;
    FidelityValue::fidelity(sol.midpoint(), Method::GeometricSdp, cert)
}

fn weighted_log_euclidean(t: &StateTuple, weights: &[f64], schedule: &EpsSchedule) -> Result<(f64, Certificate)> {
    let ops: Vec<&HermitianMatrix> = t.states().iter().map(|s| s.hermitian()).collect();
    let est = log_euclidean_trace(&ops, weights, schedule)?;
    let cert = Certificate {
        smallest_eps: Some(est.smallest_eps),
        schedule_min: Some(est.schedule_min),
        ..Default::default()
    };
    Ok((est.value, cert))
}

/// `F^♭_r = lim_ε Tr exp((1/r) Σ ln ρ_i(ε))`.
pub fn f_log_euclidean(t: &StateTuple, schedule: &EpsSchedule) -> Result<FidelityValue> {
    let w = vec![1.0 / t.r() as f64; t.r()];
    let (v, cert) = weighted_log_euclidean(t, &w, schedule)?;
    FidelityValue::fidelity(v, Method::LogEuclidean, cert)
}

/// `H_s = −ln lim_ε Tr exp(Σ s_i ln ρ_i(ε))`; `+∞` when the limit vanishes.
pub fn log_euclidean_divergence(
    t: &StateTuple,
    s: &ProbabilityVector,
    schedule: &EpsSchedule,
) -> Result<FidelityValue> {
    if s.len() != t.r() {
        return Err(Error::dims(format!("{} weights for {} states", s.len(), t.r())));
    }
    let (v, cert) = weighted_log_euclidean(t, s.probs(), schedule)?;
    let h = if v > 0.0 { -v.ln() } else { f64::INFINITY };
    FidelityValue::divergence(h, Method::LogEuclideanDivergence, cert)
}

/// Average of `F^♭` over all `k`-subsets.
pub fn avg_kwise_log_euclidean(t: &StateTuple, k: usize, schedule: &EpsSchedule) -> Result<FidelityValue> {
    if k < 2 || k > t.r() {
        return Err(Error::InvalidArgument(format!("k = {k} outside 2..={}", t.r())));
    }
    let subsets = combinations(t.r(), k);
    let w = vec![1.0 / k as f64; k];
    let mut total = 0.0;
    let mut smallest = f64::INFINITY;
    for idx in &subsets {
        let (v, c) = weighted_log_euclidean(&t.subset(idx)?, &w, schedule)?;
        total += v;
        smallest = smallest.min(c.smallest_eps.unwrap_or(f64::INFINITY));
    }
    let cert = Certificate { smallest_eps: Some(smallest), ..Default::default() };
    FidelityValue::fidelity(total / subsets.len() as f64, Method::KwiseLogEuclidean(k), cert)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvelohResult {
    pub divergence: FidelityValue,
    /// Minimizing state `exp((1/r) Σ ln ρ_i) / Tr[·]`; `None` when the supports
    /// have trivial intersection.
    pub optimizer: Option<DensityMatrix>,
}

/// `(1/r) Σ_i D(σ‖ρ_i)` for full-rank `ρ_i`, given `L = (1/r) Σ ln ρ_i`.
fn oveloh_objective(sigma: &HermitianMatrix, mean_log: &HermitianMatrix) -> Result<f64> {
    let e = sigma.eig()?;
    let entropy_term: f64 = e.values.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum();
    Ok(entropy_term - sigma.trace_product(mean_log))
}

/// Lowest objective found by mirror descent from the maximally mixed state and
/// by random mixtures around `ω*`.
fn descent_search(omega: &HermitianMatrix, mean_log: &HermitianMatrix, seed: u64) -> Result<f64> {
    let d = omega.dim();
    let mut best = f64::INFINITY;
    let mut log_sigma = HermitianMatrix::from_real_diagonal(&vec![-(d as f64).ln(); d])?;
    for _ in 0..200 {
        let next = log_sigma.scale(0.7).add(&mean_log.scale(0.3))?;
        let unnorm = next.exp()?;
        let z = unnorm.trace();
        let sigma = unnorm.scale(1.0 / z);
        best = best.min(oveloh_objective(&sigma, mean_log)?);
        log_sigma = next.shifted(-z.ln());
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..20 {
        let tau = random_density_with(d, d, &mut rng)?;
        for w in [0.1, 0.01, 0.001] {
            let sigma = omega.scale(1.0 - w).add(&tau.hermitian().scale(w))?;
            best = best.min(oveloh_objective(&sigma, mean_log)?);
        }
    }
    Ok(best)
}

/// Oveloh information `inf_σ (1/r) Σ D(σ‖ρ_i) = −ln F^♭_r` with its optimizer.
/// For full-rank tuples the certificate's `descent_margin` is the gap between
/// the best direct-descent objective and the reported value.
pub fn oveloh(t: &StateTuple, schedule: &EpsSchedule) -> Result<OvelohResult> {
    let fl = f_log_euclidean(t, schedule)?;
    let raw = fl.certificate.raw_value.unwrap_or(fl.value);
    let div = if raw > 0.0 { -raw.ln() } else { f64::INFINITY };
    let w = vec![1.0 / t.r() as f64; t.r()];
    let ops: Vec<&HermitianMatrix> = t.states().iter().map(|s| s.hermitian()).collect();
    let optimizer = match log_euclidean_operator(&ops, &w)? {
        Some(m) => Some(DensityMatrix::repaired(m.scale(1.0 / m.trace()), 1e-8)?),
        None => None,
    };
    let mut cert = fl.certificate.clone();
    cert.raw_value = None;
    let full_rank = t.states().iter().map(|s| s.hermitian().min_eigenvalue()).collect::<Result<Vec<_>>>()?;
    if let (Some(omega), true) = (&optimizer, full_rank.iter().all(|&m| m > 1e-12)) {
        let mut mean_log = ComplexMatrix::zeros(t.dim(), t.dim());
        for s in t.states() {
            mean_log += s.hermitian().log()?.matrix() * c64(1.0 / t.r() as f64, 0.0);
        }
        let mean_log = HermitianMatrix::new(mean_log)?;
        cert.descent_margin = Some(descent_search(omega.hermitian(), &mean_log, 0)? - div);
    }
    Ok(OvelohResult { divergence: FidelityValue::divergence(div, Method::Oveloh, cert)?, optimizer })
}

/// `Tr[((1/r) Σ √ρ_i)²] = 1/r + ((r−1)/r)·(average pairwise Holevo fidelity)`.
pub fn min_d_half_closed_form(t: &StateTuple) -> Result<f64> {
    let d = t.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for s in t.states() {
        acc += s.sqrt()?.matrix();
    }
    acc /= c64(t.r() as f64, 0.0);
    Ok((0..d).map(|i| (0..d).map(|k| (acc[(i, k)] * acc[(k, i)]).re).sum::<f64>()).sum())
}

fn best_matching(f: &[Vec<f64>], free: &mut Vec<usize>, pairs_left: usize) -> f64 {
    if pairs_left == 0 {
        return 0.0;
    }
    let mut best = f64::NEG_INFINITY;
    // pair the first free index with a partner, or leave it unmatched when spares remain
    let first = free.remove(0);
    for k in 0..free.len() {
        let partner = free.remove(k);
        best = best.max(f[first][partner] + best_matching(f, free, pairs_left - 1));
        free.insert(k, partner);
    }
    if free.len() >= 2 * pairs_left {
        best = best.max(best_matching(f, free, pairs_left));
    }
    free.insert(0, first);
    best
}

/// `(2/r(r−1)) · max_π Σ_{i ≤ ⌊r/2⌋} F(ρ_π(i), ρ_π(i+⌊r/2⌋))`, a lower bound on `F_SDP`.
/// The maximum over permutations is taken over the equivalent set of matchings
/// with `⌊r/2⌋` pairs.
pub fn sdp_lower_bound_perm(t: &StateTuple) -> Result<f64> {
    let r = t.r();
    if r > 12 {
        return Err(Error::InvalidArgument(format!("exhaustive search limited to r ≤ 12, got {r}")));
    }
    let mut f = vec![vec![0.0; r]; r];
    for i in 0..r {
        for j in i + 1..r {
            let v = uhlmann(t.get(i), t.get(j))?;
            f[i][j] = v;
            f[j][i] = v;
        }
    }
    let best = best_matching(&f, &mut (0..r).collect(), r / 2);
    Ok(2.0 * best / (r * (r - 1)) as f64)
}

/// Heuristic upper bound on the measured average pairwise fidelity.
pub fn f_measured(t: &StateTuple, opts: &MeasuredOptions) -> Result<FidelityValue> {
    let res = measured_upper_bound(t, opts)?;
    let cert = Certificate {
        evaluations: Some(res.evaluations),
        budget_exhausted: Some(res.budget_exhausted),
        ..Default::default()
    };
    FidelityValue::fidelity(res.value, Method::Measured, cert)
}

/// `ρ ↦ (ρ + εI/d)/(1 + ε)` applied to every state.
pub fn regularized_tuple(t: &StateTuple, eps: f64) -> Result<StateTuple> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be nonnegative, got {eps}")));
    }
    let d = t.dim() as f64;
    let states = t
        .states()
        .iter()
        .map(|s| DensityMatrix::new(s.hermitian().shifted(eps / d).scale(1.0 / (1.0 + eps))))
        .collect::<Result<Vec<_>>>()?;
    StateTuple::new(states)
}
