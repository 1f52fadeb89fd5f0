use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;

use crate::bivariate::ZParam;
use crate::classical::{bhattacharyya, matusita, ClassicalTuple};
use crate::error::{Error, Result};
use crate::io::StateTupleFile;
use crate::linalg::{c64, ComplexMatrix};
use crate::measured::MeasuredOptions;
use crate::multivariate::{avg_pairwise_z, default_sdp_options, f_measured, f_sdp, SdpForm};
use crate::states::{DensityMatrix, StateTuple};

use super::{Accumulator, PropertyReport, TrialInput};

/// Published value of `F_SDP(ρ1, ρ2, ρ3)²` for [`supermult_vectors`].
pub const SUPERMULT_SQUARED: f64 = 0.4075;
/// Published value of `F_SDP(ρ1⊗², ρ2⊗², ρ3⊗²)` for [`supermult_vectors`].
pub const SUPERMULT_TENSOR_SQUARE: f64 = 0.3820;
const PUBLISHED_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reproduction {
    Supermult,
    MeasuredGap,
    MatusitaZero,
    All,
}

impl FromStr for Reproduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supermult" => Ok(Reproduction::Supermult),
            "measured-gap" => Ok(Reproduction::MeasuredGap),
            "matusita-zero" => Ok(Reproduction::MatusitaZero),
            "all" => Ok(Reproduction::All),
            _ => Err(Error::Unknown { kind: "reproduction", name: s.to_string() }),
        }
    }
}

/// Three pure qutrit states, as printed to four decimals (the third is not
/// exactly normalized and is rescaled on use).
pub fn supermult_vectors() -> Vec<Vec<Complex64>> {
    vec![
        vec![c64(-0.8954, 0.2791), c64(0.2061, -0.0805), c64(0.2418, 0.1135)],
        vec![c64(-0.2422, 0.2315), c64(0.4386, -0.4318), c64(-0.6928, -0.1704)],
        vec![c64(0.2560, 0.5837), c64(0.4811, -0.3057), c64(-0.5175, -0.314)],
    ]
}

fn qubit(a: f64, b: Complex64, c: f64) -> Result<DensityMatrix> {
    DensityMatrix::from_matrix(ComplexMatrix::from_row_slice(2, 2, &[c64(a, 0.0), b, b.conj(), c64(c, 0.0)]))
}

/// Qubit triple whose average pairwise Uhlmann fidelity strictly exceeds its SDP fidelity.
pub fn measured_gap_states() -> Result<StateTuple> {
    StateTuple::new(vec![
        qubit(0.3465, c64(-0.2036, 0.2643), 0.6535)?,
        qubit(0.6546, c64(-0.3308, -0.2297), 0.3454)?,
        qubit(0.6169, c64(0.0327, -0.0321), 0.3831)?,
    ])
}

/// Three distributions with zero Matusita fidelity but pairwise overlapping supports.
pub fn matusita_zero_distributions() -> Result<ClassicalTuple> {
    ClassicalTuple::from_vecs(vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]])
}

/// Named reference tuples, for the CLI and the Python bindings.
pub fn known_instances() -> Result<Vec<(&'static str, StateTuple)>> {
    Ok(vec![
        ("supermult", StateTuple::from_pure(&supermult_vectors())?),
        ("measured-gap", measured_gap_states()?),
        ("matusita-zero", crate::states::commuting_tuple_from_probs(matusita_zero_distributions()?.dists())?),
    ])
}

fn single(
    id: &str,
    slack: f64,
    margin: f64,
    note: String,
    descriptor: &str,
    tuple: Option<&StateTuple>,
    start: Instant,
) -> PropertyReport {
    let mut acc = Accumulator::new(id, slack);
    acc.record(margin, || TrialInput {
        trial: 0,
        seed: 0,
        descriptor: descriptor.to_string(),
        tuple: tuple.map(|t| StateTupleFile::from_tuple(t, None)),
    });
    acc.report.note = Some(note);
    acc.report.elapsed = start.elapsed().as_secs_f64();
    acc.report
}

fn supermult() -> Result<Vec<PropertyReport>> {
    let start = Instant::now();
    let t = StateTuple::from_pure(&supermult_vectors())?;
    let o = default_sdp_options();
    let f1 = f_sdp(&t, SdpForm::Kstar, &o)?.value;
    let t2 = t.tensor_power(2)?;
    let f2 = f_sdp(&t2, SdpForm::Kstar, &o)?.value;
    let fu = avg_pairwise_z(&t, ZParam::UHLMANN)?.value;
    let sq = f1 * f1;
    let desc = "pure qutrit triple";
    Ok(vec![
        single(
            "reproduce.supermult.squared",
            0.0,
            PUBLISHED_TOL - (sq - SUPERMULT_SQUARED).abs(),
            format!("F_SDP^2 = {sq:.6} (published {SUPERMULT_SQUARED}); F_SDP = {f1:.6} <= F_U = {fu:.6}"),
            desc,
            Some(&t),
            start,
        ),
        single(
            "reproduce.supermult.tensor-square",
            0.0,
            PUBLISHED_TOL - (f2 - SUPERMULT_TENSOR_SQUARE).abs(),
            format!("F_SDP(tensor square) = {f2:.6} (published {SUPERMULT_TENSOR_SQUARE})"),
            desc,
            Some(&t),
            start,
        ),
        single(
            "reproduce.supermult.direction",
            0.0,
            sq - f2,
            format!("F_SDP^2 - F_SDP(tensor square) = {:.6}; a violation needs a positive value", sq - f2),
            desc,
            Some(&t),
            start,
        ),
    ])
}

fn measured_gap() -> Result<Vec<PropertyReport>> {
    let start = Instant::now();
    let t = measured_gap_states()?;
    let o = default_sdp_options();
    let fu = avg_pairwise_z(&t, ZParam::UHLMANN)?.value;
    let fs = f_sdp(&t, SdpForm::Kstar, &o)?.value;
    let fm = f_measured(&t, &MeasuredOptions::default())?.value;
    let desc = "qubit triple";
    Ok(vec![
        single(
            "reproduce.measured-gap.uhlmann-exceeds-sdp",
            0.0,
            fu - fs - 1e-3,
            format!("F_U = {fu:.6}, F_SDP = {fs:.6}, gap {:.6} (required > 1e-3)", fu - fs),
            desc,
            Some(&t),
            start,
        ),
        single(
            "reproduce.measured-gap.measured-ge-uhlmann",
            1e-6,
            fm - fu,
            format!("F_M upper estimate = {fm:.6}, F_U = {fu:.6}"),
            desc,
            Some(&t),
            start,
        ),
    ])
}

fn matusita_zero() -> Result<Vec<PropertyReport>> {
    let start = Instant::now();
    let c = matusita_zero_distributions()?;
    let f3 = matusita(&c);
    let mut worst_overlap: f64 = 0.0;
    let mut disjoint = false;
    for i in 0..3 {
        for j in i + 1..3 {
            let b = bhattacharyya(&c.dists()[i], &c.dists()[j])?;
            worst_overlap = worst_overlap.max((b - 0.5).abs());
            disjoint |= b == 0.0;
        }
    }
    let t = crate::states::commuting_tuple_from_probs(c.dists())?;
    let desc = "three distributions on three letters";
    Ok(vec![
        single("reproduce.matusita-zero.value", 0.0, -f3.abs(), format!("F_3 = {f3}"), desc, Some(&t), start),
        single(
            "reproduce.matusita-zero.pairwise-overlap",
            0.0,
            1e-15 - worst_overlap,
            format!("every pairwise Bhattacharyya overlap is 1/2 (max deviation {worst_overlap:e}); no two supports are disjoint: {}", !disjoint),
            desc,
            Some(&t),
            start,
        ),
    ])
}

/// Recomputes the known concrete examples and checks the published direction
/// of each inequality.
pub fn reproduce_counterexamples(which: Reproduction) -> Result<Vec<PropertyReport>> {
    Ok(match which {
        Reproduction::Supermult => supermult()?,
        Reproduction::MeasuredGap => measured_gap()?,
        Reproduction::MatusitaZero => matusita_zero()?,
        Reproduction::All => {
            let mut v = supermult()?;
            v.extend(measured_gap()?);
            v.extend(matusita_zero()?);
            v
        }
    })
}
