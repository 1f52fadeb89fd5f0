//! Two-state fidelities and distances.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, eig_hermitian, trace_norm, ComplexMatrix, HermitianMatrix};
use crate::states::DensityMatrix;

/// Relative eigenvalue threshold separating a state's support from its kernel.
pub const SUPPORT_TOL: f64 = 1e-13;
const INTERSECTION_TOL: f64 = 1e-8;

/// Order parameter of the z-fidelity family; `Flat` is the `z → ∞` limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ZParam {
    Finite(f64),
    Flat,
}

impl ZParam {
    pub fn new(z: f64) -> Result<Self> {
        if z.is_infinite() && z > 0.0 {
            return Ok(ZParam::Flat);
        }
        if !(z >= 0.5) {
            return Err(Error::InvalidArgument(format!("z must be >= 1/2, got {z}")));
        }
        Ok(ZParam::Finite(z))
    }

    pub const UHLMANN: ZParam = ZParam::Finite(0.5);
    pub const HOLEVO: ZParam = ZParam::Finite(1.0);
}

impl fmt::Display for ZParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZParam::Finite(z) => write!(f, "{z}"),
            ZParam::Flat => f.write_str("flat"),
        }
    }
}

impl FromStr for ZParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flat" | "inf" | "infinity" => Ok(ZParam::Flat),
            other => {
                let z: f64 = other.parse().map_err(|_| Error::InvalidArgument(format!("cannot parse z = '{s}'")))?;
                ZParam::new(z)
            }
        }
    }
}

/// Regularization offsets `ε` used for `ρ + εI` limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSchedule(Vec<f64>);

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule(vec![1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8])
    }
}

impl EpsSchedule {
    pub fn new(mut eps: Vec<f64>) -> Result<Self> {
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidArgument("epsilon schedule must be nonempty and positive".into()));
        }
        eps.sort_by(|a, b| b.total_cmp(a));
        eps.dedup();
        Ok(EpsSchedule(eps))
    }

    /// Comma-separated list, e.g. `1e-3,1e-5,1e-7`.
    pub fn parse(s: &str) -> Result<Self> {
        let eps = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad epsilon '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(eps)
    }

    /// Descending.
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn smallest(&self) -> f64 {
        *self.0.last().expect("nonempty schedule")
    }
}

/// Value of a `ρ + εI` limit together with the schedule diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub value: f64,
    /// Minimum over the schedule (an upper estimate of the infimum).
    pub schedule_min: f64,
    pub smallest_eps: f64,
    /// Quadratic extrapolation in `√ε` through the last three schedule points.
    pub extrapolated: f64,
    /// True when `value` is the exact limit rather than a schedule estimate.
    pub exact: bool,
}

/// Quadratic through `(√ε_k, v_k)` for the three smallest `ε`, evaluated at 0.
fn extrapolate(eps: &[f64], vals: &[f64]) -> f64 {
    let n = vals.len();
    if n < 3 {
        return *vals.last().unwrap_or(&f64::NAN);
    }
    let h: Vec<f64> = eps[n - 3..].iter().map(|e| e.sqrt()).collect();
    let v = &vals[n - 3..];
    let mut out = 0.0;
    for k in 0..3 {
        let mut w = 1.0;
        for m in 0..3 {
            if m != k {
                w *= (0.0 - h[m]) / (h[k] - h[m]);
            }
        }
        out += w * v[k];
    }
    out
}

/// `Tr[(σ^{1/4z} ρ^{1/2z} σ^{1/4z})^z]` on PSD operators.
pub(crate) fn fid_z_op(rho: &HermitianMatrix, sigma: &HermitianMatrix, z: f64) -> Result<f64> {
    check_dims(rho, sigma)?;
    let a = sigma.powf(1.0 / (4.0 * z))?;
    let b = rho.powf(1.0 / (2.0 * z))?;
    let inner = HermitianMatrix::from_hermitian_unchecked(a.matrix() * b.matrix() * a.matrix());
    let e = eig_hermitian(inner.matrix())?;
    Ok(e.values.iter().map(|&x| x.max(0.0).powf(z)).sum())
}

fn check_dims(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::dims(format!("states of dimension {} and {}", a.dim(), b.dim())));
    }
    Ok(())
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Orders a pair by a fixed total order on entries so symmetric measures
/// return bitwise identical values for swapped arguments.
fn canonical_pair<'a>(a: &'a DensityMatrix, b: &'a DensityMatrix) -> (&'a DensityMatrix, &'a DensityMatrix) {
    let key = |z: &num_complex::Complex64| (z.re, z.im);
    let ord = a
        .matrix()
        .iter()
        .zip(b.matrix().iter())
        .map(|(x, y)| {
            let ((xr, xi), (yr, yi)) = (key(x), key(y));
            xr.total_cmp(&yr).then(xi.total_cmp(&yi))
        })
        .find(|o| o.is_ne());
    if ord == Some(std::cmp::Ordering::Greater) {
        (b, a)
    } else {
        (a, b)
    }
}

/// The z-fidelity; `Flat` delegates to [`log_euclidean_fid`] with the default schedule.
pub fn fid_z(rho: &DensityMatrix, sigma: &DensityMatrix, z: ZParam) -> Result<f64> {
    let (rho, sigma) = canonical_pair(rho, sigma);
    match z {
        ZParam::Finite(0.5) => uhlmann(rho, sigma),
        ZParam::Finite(1.0) => holevo(rho, sigma),
        ZParam::Finite(z) => Ok(clamp01(fid_z_op(rho.hermitian(), sigma.hermitian(), z)?)),
        ZParam::Flat => Ok(log_euclidean_fid(rho, sigma, &EpsSchedule::default())?.value),
    }
}

pub(crate) fn uhlmann_op(a_sqrt: &HermitianMatrix, b_sqrt: &HermitianMatrix) -> Result<f64> {
    check_dims(a_sqrt, b_sqrt)?;
    trace_norm(&(a_sqrt.matrix() * b_sqrt.matrix()))
}

/// `‖√ρ √σ‖_1`
pub fn uhlmann(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let (rho, sigma) = canonical_pair(rho, sigma);
    Ok(clamp01(uhlmann_op(rho.sqrt()?, sigma.sqrt()?)?))
}

/// `Tr[√ρ √σ]`
pub fn holevo(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.hermitian(), sigma.hermitian())?;
    let (rho, sigma) = canonical_pair(rho, sigma);
    Ok(clamp01(rho.sqrt()?.trace_product(sigma.sqrt()?)))
}

/// `√(2(1 − F))` with the Uhlmann fidelity.
pub fn bures_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok((2.0 * (1.0 - uhlmann(rho, sigma)?)).max(0.0).sqrt())
}

/// `√(2(1 − F_H))` with the Holevo fidelity.
pub fn hellinger_distance_q(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok((2.0 * (1.0 - holevo(rho, sigma)?)).max(0.0).sqrt())
}

/// `ln` on the support of a PSD operator (zero on its kernel) and the support
/// projection.
fn support_log(op: &HermitianMatrix) -> Result<(ComplexMatrix, ComplexMatrix, bool)> {
    let e = op.eig()?;
    let cut = SUPPORT_TOL * e.max().max(f64::MIN_POSITIVE);
    let full = e.min() > cut;
    let log = e.reconstruct_with(|x| if x > cut { x.ln() } else { 0.0 });
    let proj = e.reconstruct_with(|x| if x > cut { 1.0 } else { 0.0 });
    Ok((log, proj, full))
}

/// The limit operator `V0 exp(V0† (Σ s_i ln⁺A_i) V0) V0†`, where `V0` spans the
/// intersection of supports; `None` if the intersection is trivial.
fn limit_matrix(active: &[(&HermitianMatrix, f64)], d: usize) -> Result<Option<HermitianMatrix>> {
    let mut total_log = ComplexMatrix::zeros(d, d);
    let mut defect = ComplexMatrix::zeros(d, d);
    let mut all_full = true;
    for (op, w) in active {
        let (log, proj, full) = support_log(op)?;
        total_log += log * c64(*w, 0.0);
        defect += ComplexMatrix::identity(d, d) - proj;
        all_full &= full;
    }
    if all_full {
        return Ok(Some(HermitianMatrix::new(total_log)?.exp()?));
    }
    let e = eig_hermitian(&defect)?;
    let k = e.values.iter().filter(|&&x| x < INTERSECTION_TOL).count();
    if k == 0 {
        return Ok(None);
    }
    let v0 = e.vectors.columns(0, k).clone_owned();
    let inner = HermitianMatrix::new(v0.adjoint() * total_log * &v0)?.exp()?;
    Ok(Some(HermitianMatrix::new(&v0 * inner.matrix() * v0.adjoint())?))
}

/// Limit operator of [`log_euclidean_trace`] before taking the trace.
pub fn log_euclidean_operator(ops: &[&HermitianMatrix], weights: &[f64]) -> Result<Option<HermitianMatrix>> {
    if ops.len() != weights.len() || ops.is_empty() {
        return Err(Error::dims(format!("{} operators with {} weights", ops.len(), weights.len())));
    }
    let d = ops[0].dim();
    if ops.iter().any(|o| o.dim() != d) {
        return Err(Error::dims("operators of different dimension"));
    }
    let active: Vec<(&HermitianMatrix, f64)> =
        ops.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(o, w)| (*o, *w)).collect();
    limit_matrix(&active, d)
}

/// `lim_{ε→0} Tr exp(Σ_i s_i ln(A_i + εI))` for PSD operators `A_i` and weights
/// `s_i ≥ 0`, evaluated exactly by compressing `Σ s_i ln A_i` to the
/// intersection of supports. Operators with zero weight are ignored.
pub fn log_euclidean_trace(ops: &[&HermitianMatrix], weights: &[f64], schedule: &EpsSchedule) -> Result<LimitEstimate> {
    if ops.len() != weights.len() || ops.is_empty() {
        return Err(Error::dims(format!("{} operators with {} weights", ops.len(), weights.len())));
    }
    let d = ops[0].dim();
    if ops.iter().any(|o| o.dim() != d) {
        return Err(Error::dims("operators of different dimension"));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be nonnegative".into()));
    }
    let active: Vec<(&HermitianMatrix, f64)> =
        ops.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(o, w)| (*o, *w)).collect();

    let value = limit_matrix(&active, d)?.map_or(0.0, |m| m.trace());
    let mut vals = Vec::with_capacity(schedule.values().len());
    for &eps in schedule.values() {
        let mut acc = ComplexMatrix::zeros(d, d);
        for (op, w) in &active {
            acc += op.shifted(eps).log()?.matrix() * c64(*w, 0.0);
        }
        vals.push(HermitianMatrix::new(acc)?.exp()?.trace());
    }
    Ok(LimitEstimate {
        value,
        schedule_min: vals.iter().copied().fold(f64::INFINITY, f64::min),
        smallest_eps: schedule.smallest(),
        extrapolated: extrapolate(schedule.values(), &vals),
        exact: true,
    })
}

/// `lim_{ε→0} Tr exp(½(ln ρ(ε) + ln σ(ε)))`
pub fn log_euclidean_fid(rho: &DensityMatrix, sigma: &DensityMatrix, schedule: &EpsSchedule) -> Result<LimitEstimate> {
    check_dims(rho.hermitian(), sigma.hermitian())?;
    let mut est = log_euclidean_trace(&[rho.hermitian(), sigma.hermitian()], &[0.5, 0.5], schedule)?;
    est.value = clamp01(est.value);
    Ok(est)
}

/// `A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}` for positive definite `A`.
pub fn geometric_mean(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_dims(a, b)?;
    let a_half = a.sqrt()?;
    let a_neg_half = a.powf(-0.5)?;
    let inner = b.conjugate_by(a_neg_half.matrix())?.sqrt()?;
    inner.conjugate_by(a_half.matrix())
}

fn is_definite(a: &HermitianMatrix) -> Result<bool> {
    let e = a.eig()?;
    Ok(e.min() > SUPPORT_TOL * e.max().max(f64::MIN_POSITIVE))
}

/// `inf_ε Tr[ρ(ε) # σ(ε)]`. Exact when either state is positive definite;
/// otherwise the value is the √ε extrapolation clipped to `[0, schedule_min]`.
pub fn geometric_fid(rho: &DensityMatrix, sigma: &DensityMatrix, schedule: &EpsSchedule) -> Result<LimitEstimate> {
    let (a, b) = (rho.hermitian(), sigma.hermitian());
    check_dims(a, b)?;
    let mut vals = Vec::new();
    for &eps in schedule.values() {
        vals.push(geometric_mean(&a.shifted(eps), &b.shifted(eps))?.trace());
    }
    let schedule_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let extrapolated = extrapolate(schedule.values(), &vals);
    let exact = if is_definite(a)? {
        Some(geometric_mean(a, b)?.trace())
    } else if is_definite(b)? {
        Some(geometric_mean(b, a)?.trace())
    } else {
        None
    };
    let (value, is_exact) = match exact {
        Some(v) => (v, true),
        None => (extrapolated.clamp(0.0, schedule_min), false),
    };
    Ok(LimitEstimate {
        value: clamp01(value),
        schedule_min,
        smallest_eps: schedule.smallest(),
        extrapolated,
        exact: is_exact,
    })
}
