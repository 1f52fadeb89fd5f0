use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bivariate::ZParam;
use crate::error::{Error, Result};
use crate::io::StateTupleFile;
use crate::linalg::kron;
use crate::linalg::ComplexMatrix;
use crate::multivariate::{avg_pairwise_z, default_sdp_options, f_sdp, f_sdp_pure, f_secrecy, SdpForm, SecrecyForm};
use crate::states::{derive_seed, random_pure_vector, rng_from_seed, StateTuple};

use super::generators::{random_tuple, TupleShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchTarget {
    /// `F_SDP(t)² > F_SDP(t⊗²)` on pure states.
    SupermultFsdp,
    /// `F_U − F_SDP > 0`.
    FuVsFsdpStrict,
    /// Any link of `F_H ≤ F_S ≤ F_SDP ≤ F_U ≤ √F_H` broken.
    Chain,
}

impl FromStr for SearchTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supermult-fsdp" => Ok(SearchTarget::SupermultFsdp),
            "fu-vs-fsdp-strict" => Ok(SearchTarget::FuVsFsdpStrict),
            "chain" => Ok(SearchTarget::Chain),
            _ => Err(Error::Unknown { kind: "search target", name: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub target: SearchTarget,
    pub r_range: (usize, usize),
    pub d_range: (usize, usize),
    pub trials: usize,
    pub seed: u64,
    pub report_top_k: usize,
}

impl SearchConfig {
    pub fn new(target: SearchTarget) -> Self {
        let (r_range, d_range) = match target {
            SearchTarget::SupermultFsdp => ((3, 3), (3, 3)),
            _ => ((3, 4), (2, 3)),
        };
        SearchConfig { target, r_range, d_range, trials: 1000, seed: 0, report_top_k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub target: SearchTarget,
    /// Positive for a violation (or a strict gap); larger is better.
    pub score: f64,
    /// Raw margin of the inequality being probed.
    pub margin: f64,
    pub r: usize,
    pub d: usize,
    pub trial: usize,
    pub seed: u64,
    pub values: Vec<(String, f64)>,
    pub tuple: StateTupleFile,
}

fn tensor_square(v: &[Complex64]) -> Vec<Complex64> {
    let m = ComplexMatrix::from_column_slice(v.len(), 1, v);
    kron(&m, &m).expect("small vectors").iter().copied().collect()
}

fn evaluate(cfg: &SearchConfig, trial: usize, seed: u64) -> Result<Candidate> {
    let mut rng = rng_from_seed(seed);
    let r = rng.random_range(cfg.r_range.0..=cfg.r_range.1);
    let d = rng.random_range(cfg.d_range.0..=cfg.d_range.1);
    let o = default_sdp_options();
    let (t, margin, score, values) = match cfg.target {
        SearchTarget::SupermultFsdp => {
            let vs: Vec<_> = (0..r).map(|_| random_pure_vector(d, &mut rng)).collect();
            let f1 = f_sdp_pure(&vs, &o)?.value;
            let f2 = f_sdp_pure(&vs.iter().map(|v| tensor_square(v)).collect::<Vec<_>>(), &o)?.value;
            let m = f1 * f1 - f2;
            (StateTuple::from_pure(&vs)?, m, m, vec![("fsdp".into(), f1), ("fsdp_tensor_square".into(), f2)])
        }
        SearchTarget::FuVsFsdpStrict => {
            let t = random_tuple(&mut rng, r, d, TupleShape::MixedRank)?;
            let fu = avg_pairwise_z(&t, ZParam::UHLMANN)?.value;
            let fs = f_sdp(&t, SdpForm::Kstar, &o)?.value;
            (t, fu - fs, fu - fs, vec![("uhlmann".into(), fu), ("fsdp".into(), fs)])
        }
        SearchTarget::Chain => {
            let t = random_tuple(&mut rng, r, d, TupleShape::MixedRank)?;
            let fh = avg_pairwise_z(&t, ZParam::HOLEVO)?.value;
            let fu = avg_pairwise_z(&t, ZParam::UHLMANN)?.value;
            let fs = f_secrecy(&t, SecrecyForm::Kform, &o)?.value;
            let fsdp = f_sdp(&t, SdpForm::Kstar, &o)?.value;
            let m = (fs - fh).min(fsdp - fs).min(fu - fsdp).min(fh.sqrt() - fu);
            let vals =
                vec![("holevo".into(), fh), ("secrecy".into(), fs), ("fsdp".into(), fsdp), ("uhlmann".into(), fu)];
            (t, m, -m, vals)
        }
    };
    Ok(Candidate {
        target: cfg.target,
        score,
        margin,
        r,
        d,
        trial,
        seed,
        values,
        tuple: StateTupleFile::from_tuple(&t, None),
    })
}

/// Top `report_top_k` trials ranked by score; ties go to smaller `d`, then
/// smaller `r`, then the earlier trial.
pub fn search_counterexamples(cfg: &SearchConfig) -> Result<Vec<Candidate>> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if cfg.r_range.0 < 2 || cfg.r_range.0 > cfg.r_range.1 || cfg.d_range.0 < 1 || cfg.d_range.0 > cfg.d_range.1 {
        return Err(Error::InvalidArgument(format!("bad ranges r {:?} d {:?}", cfg.r_range, cfg.d_range)));
    }
    let mut all = (0..cfg.trials)
        .into_par_iter()
        .map(|k| evaluate(cfg, k, derive_seed(cfg.seed, k as u64)))
        .collect::<Result<Vec<_>>>()?;
    all.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.d.cmp(&b.d)).then(a.r.cmp(&b.r)).then(a.trial.cmp(&b.trial)));
    all.truncate(cfg.report_top_k);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_is_deterministic() {
        let cfg = SearchConfig { trials: 30, ..SearchConfig::new(SearchTarget::FuVsFsdpStrict) };
        let a = search_counterexamples(&cfg).unwrap();
        let b = search_counterexamples(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].score >= w[1].score));
        assert!(a[0].score > 0.0);
    }

    #[test]
    fn chain_has_no_violations() {
        let cfg = SearchConfig { trials: 20, ..SearchConfig::new(SearchTarget::Chain) };
        for c in search_counterexamples(&cfg).unwrap() {
            assert!(c.margin > -1e-7, "{c:?}");
        }
    }
}
