//! `multifid`: compute multivariate fidelities of state-tuple files, run the
//! property suites, reproduce the reference examples and search for
//! counterexamples.
//!
//! Exit codes: 0 ok, 2 parse or usage error, 3 invariant violation (including
//! failed properties), 4 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multifid::bivariate::{EpsSchedule, ZParam};
use multifid::harness::{
    report_digest, reproduce_counterexamples, run_property_suite, search_counterexamples, PropertyReport, Reproduction,
    SearchConfig, SearchTarget,
};
use multifid::io::{read_tuple, to_record_line, Strictness};
use multifid::measured::MeasuredOptions;
use multifid::multivariate::{self as mv, FidelityValue, SdpForm, SecrecyForm};
use multifid::sdp::SolverOptions;
use multifid::{Error, StateTuple};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "multifid", version, about = "Multivariate quantum fidelities with certified numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Print human-readable progress to stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one measure on a state-tuple file.
    Compute(ComputeArgs),
    /// Run a property suite (or check the inequality chain on one file).
    Verify(VerifyArgs),
    /// Recompute the reference examples.
    Reproduce(ReproduceArgs),
    /// Randomized search for violations or strict gaps.
    Search(SearchArgs),
}

#[derive(Args)]
struct ComputeArgs {
    #[arg(long)]
    input: PathBuf,
    /// avg-pairwise, uhlmann, holevo, fsdp, fsdp-primal, fsdp-dual, fsdp-both,
    /// fsecrecy, fsecrecy-sup, fsecrecy-inf, fsecrecy-both, secrecy-measure,
    /// log-euclidean, oveloh, kwise-log-euclidean, measured, geometric-sdp,
    /// min-d-half, sdp-lower-bound
    #[arg(long)]
    measure: String,
    /// z parameter for avg-pairwise (a number ≥ 1/2, or "flat").
    #[arg(long, default_value = "0.5")]
    z: String,
    /// Subset size for kwise-log-euclidean.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 1e-9)]
    gap_tol: f64,
    /// Comma-separated ε values, largest first.
    #[arg(long)]
    eps_schedule: Option<String>,
    /// Number of POVM outcomes for the measured fidelity (default d²).
    #[arg(long)]
    outcomes: Option<usize>,
    /// Objective evaluations per optimizer restart (measured fidelity).
    #[arg(long, default_value_t = 20_000)]
    budget: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, env = "MULTIFID_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "inequality-chain")]
    suite: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, env = "MULTIFID_SEED", default_value_t = 0)]
    seed: u64,
    /// Check the inequality chain on this file instead of random tuples.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 1e-9)]
    gap_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// supermult, measured-gap, matusita-zero or all
    #[arg(default_value = "all")]
    which: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// supermult-fsdp, fu-vs-fsdp-strict or chain
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, env = "MULTIFID_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long)]
    r_min: Option<usize>,
    #[arg(long)]
    r_max: Option<usize>,
    #[arg(long)]
    d_min: Option<usize>,
    #[arg(long)]
    d_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Lib(Error),
    Io(String),
    Properties(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(Error::Parse { .. } | Error::Unknown { .. }) | Failure::Io(_) => 2,
            Failure::Lib(Error::NumericalFailure { .. }) => 4,
            Failure::Lib(_) | Failure::Properties(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Io(m) => m.clone(),
            Failure::Properties(ids) => format!("invariant violated: failed properties: {}", ids.join(", ")),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Writes records to stdout and, when requested, to `out`.
struct Sink {
    file: Option<fs::File>,
}

impl Sink {
    fn new(out: Option<&Path>) -> Result<Self, Failure> {
        let file = match out {
            Some(p) => {
                Some(fs::File::create(p).map_err(|e| Failure::Io(format!("cannot create {}: {e}", p.display())))?)
            }
            None => None,
        };
        Ok(Sink { file })
    }

    fn emit(&mut self, record: &impl serde::Serialize) -> CmdResult {
        let line = to_record_line(record);
        print!("{line}");
        if let Some(f) = &mut self.file {
            f.write_all(line.as_bytes()).map_err(|e| Failure::Io(format!("write failed: {e}")))?;
        }
        Ok(())
    }
}

fn load(path: &Path, strict: bool) -> Result<StateTuple, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    let mode = if strict { Strictness::Strict } else { Strictness::Repair };
    Ok(read_tuple(&text, mode)?)
}

fn solver_options(gap_tol: f64) -> Result<SolverOptions, Failure> {
    if !(gap_tol > 0.0) {
        return Err(Failure::Lib(Error::InvalidArgument(format!("--gap-tol must be positive, got {gap_tol}"))));
    }
    Ok(SolverOptions::with_gap_tol(gap_tol))
}

fn scalar(value: f64, method: &str) -> Value {
    json!({ "value": value, "method": method, "certificate": {} })
}

fn evaluate(t: &StateTuple, a: &ComputeArgs) -> Result<Value, Failure> {
    let opts = solver_options(a.gap_tol)?;
    let schedule = match &a.eps_schedule {
        Some(s) => EpsSchedule::parse(s)?,
        None => EpsSchedule::default(),
    };
    let fv = |v: FidelityValue| serde_json::to_value(v).expect("serializable");
    Ok(match a.measure.as_str() {
        "avg-pairwise" => fv(mv::avg_pairwise_z(t, a.z.parse::<ZParam>()?)?),
        "uhlmann" => fv(mv::avg_pairwise_z(t, ZParam::UHLMANN)?),
        "holevo" => fv(mv::avg_pairwise_z(t, ZParam::HOLEVO)?),
        "fsdp" => fv(mv::f_sdp(t, SdpForm::Kstar, &opts)?),
        "fsdp-primal" => fv(mv::f_sdp(t, SdpForm::Primal, &opts)?),
        "fsdp-dual" => fv(mv::f_sdp(t, SdpForm::Dual, &opts)?),
        "fsdp-both" => fv(mv::f_sdp(t, SdpForm::Both, &opts)?),
        "fsecrecy" => fv(mv::f_secrecy(t, SecrecyForm::Kform, &opts)?),
        "fsecrecy-sup" => fv(mv::f_secrecy(t, SecrecyForm::Sup, &opts)?),
        "fsecrecy-inf" => fv(mv::f_secrecy(t, SecrecyForm::Inf, &opts)?),
        "fsecrecy-both" => fv(mv::f_secrecy(t, SecrecyForm::Both, &opts)?),
        "secrecy-measure" => {
            let (s, cert, method) = mv::secrecy_measure(t, SecrecyForm::Kform, &opts)?;
            json!({ "value": s, "method": method.to_string(), "certificate": cert })
        }
        "geometric-sdp" => fv(mv::f_geometric_sdp(t, &opts)?),
        "log-euclidean" => fv(mv::f_log_euclidean(t, &schedule)?),
        "oveloh" => {
            let res = mv::oveloh(t, &schedule)?;
            let mut v = fv(res.divergence);
            if let Some(omega) = res.optimizer {
                let m = omega.matrix();
                let rows = 0..m.nrows();
                let re: Vec<Vec<f64>> = rows.clone().map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect();
                let im: Vec<Vec<f64>> = rows.map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect();
                v["optimizer"] = json!({ "re": re, "im": im });
            }
            v
        }
        "kwise-log-euclidean" => fv(mv::avg_kwise_log_euclidean(t, a.k, &schedule)?),
        "measured" => {
            let mo = MeasuredOptions { n_outcomes: a.outcomes, budget: a.budget, restarts: a.restarts, seed: a.seed };
            fv(mv::f_measured(t, &mo)?)
        }
        "min-d-half" => scalar(mv::min_d_half_closed_form(t)?, "min_d_half_closed_form"),
        "sdp-lower-bound" => scalar(mv::sdp_lower_bound_perm(t)?, "sdp_lower_bound_perm"),
        other => return Err(Error::Unknown { kind: "measure", name: other.to_string() }.into()),
    })
}

fn compute(a: &ComputeArgs, verbose: bool) -> CmdResult {
    let t = load(&a.input, a.strict)?;
    if verbose {
        eprintln!("loaded {} states of dimension {} from {}", t.r(), t.dim(), a.input.display());
    }
    let mut record = evaluate(&t, a)?;
    if let Some(w) = record["certificate"]["warning"].as_str() {
        eprintln!("warning: {w}");
    }
    let obj = record.as_object_mut().expect("object record");
    obj.insert("command".into(), json!("compute"));
    obj.insert("measure".into(), json!(a.measure));
    obj.insert("input".into(), json!(a.input.display().to_string()));
    obj.insert("r".into(), json!(t.r()));
    obj.insert("d".into(), json!(t.dim()));
    if verbose {
        eprintln!("{} = {}", a.measure, record["value"]);
    }
    Sink::new(a.out.as_deref())?.emit(&record)
}

fn finish_reports(reports: &[PropertyReport], sink: &mut Sink, command: &str, verbose: bool) -> CmdResult {
    for r in reports {
        if verbose {
            let status = if r.passed() { "PASS" } else { "FAIL" };
            eprintln!("{status} {} ({} trials, worst margin {:e})", r.property_id, r.trials, r.worst_margin);
            if let Some(n) = &r.note {
                eprintln!("     {n}");
            }
        }
        sink.emit(r)?;
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed()).map(|r| r.property_id.clone()).collect();
    sink.emit(&json!({
        "command": command,
        "summary": true,
        "properties": reports.len(),
        "failed": failed,
        "digest": report_digest(reports),
    }))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Properties(failed))
    }
}

fn verify(a: &VerifyArgs, verbose: bool) -> CmdResult {
    let reports = match &a.input {
        Some(path) => chain_on_file(&load(path, a.strict)?, &solver_options(a.gap_tol)?, path)?,
        None => run_property_suite(&a.suite, a.trials, a.seed)?,
    };
    let mut sink = Sink::new(a.out.as_deref())?;
    finish_reports(&reports, &mut sink, "verify", verbose)
}

fn chain_on_file(t: &StateTuple, opts: &SolverOptions, path: &Path) -> Result<Vec<PropertyReport>, Failure> {
    let fh = mv::avg_pairwise_z(t, ZParam::HOLEVO)?.value;
    let fu = mv::avg_pairwise_z(t, ZParam::UHLMANN)?.value;
    let fs = mv::f_secrecy(t, SecrecyForm::Kform, opts)?.value;
    let fsdp = mv::f_sdp(t, SdpForm::Kstar, opts)?.value;
    let links = [
        ("chain.holevo-le-secrecy", fs - fh),
        ("chain.secrecy-le-sdp", fsdp - fs),
        ("chain.sdp-le-uhlmann", fu - fsdp),
        ("chain.uhlmann-le-sqrt-holevo", fh.sqrt() - fu),
    ];
    Ok(links
        .iter()
        .map(|(id, m)| PropertyReport {
            property_id: id.to_string(),
            trials: 1,
            failures: usize::from(*m < -1e-7),
            slack: 1e-7,
            worst_margin: *m,
            worst_input: None,
            failing_inputs: Vec::new(),
            note: Some(format!("input {}", path.display())),
            elapsed: 0.0,
        })
        .collect())
}

fn reproduce(a: &ReproduceArgs, verbose: bool) -> CmdResult {
    let which: Reproduction = a.which.parse()?;
    let reports = reproduce_counterexamples(which)?;
    let mut sink = Sink::new(a.out.as_deref())?;
    finish_reports(&reports, &mut sink, "reproduce", verbose)
}

fn search(a: &SearchArgs, verbose: bool) -> CmdResult {
    let target: SearchTarget = a.target.parse()?;
    let base = SearchConfig::new(target);
    let cfg = SearchConfig {
        r_range: (a.r_min.unwrap_or(base.r_range.0), a.r_max.unwrap_or(base.r_range.1)),
        d_range: (a.d_min.unwrap_or(base.d_range.0), a.d_max.unwrap_or(base.d_range.1)),
        trials: a.trials,
        seed: a.seed,
        report_top_k: a.top_k,
        ..base
    };
    let found = search_counterexamples(&cfg)?;
    let mut sink = Sink::new(a.out.as_deref())?;
    for (rank, c) in found.iter().enumerate() {
        if verbose {
            eprintln!("#{} score {:+.6e} r={} d={} trial {}", rank + 1, c.score, c.r, c.d, c.trial);
        }
        let mut v = serde_json::to_value(c).expect("serializable");
        v["rank"] = json!(rank + 1);
        sink.emit(&v)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compute(a) => compute(a, cli.verbose),
        Command::Verify(a) => verify(a, cli.verbose),
        Command::Reproduce(a) => reproduce(a, cli.verbose),
        Command::Search(a) => search(a, cli.verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
