//! Command dispatch and output files.
//!
//! | command      | files written                                          |
//! |--------------|--------------------------------------------------------|
//! | `iterate`    | `iterate_trace.csv`, `iterate_summary.json`            |
//! | `flow`       | `flow_trace.csv`, `flow_summary.json`                  |
//! | `oracle`     | `oracle.json`                                          |
//! | `compare`    | `compare.json`, `iterate_trace.csv`, `flow_trace.csv`  |
//! | `properties` | `properties.txt`                                       |

use std::path::{Path, PathBuf};

use nlrq::oracle::{direct_rayleigh_min, OracleMethod, OracleOptions, OracleResult};
use nlrq::{
    check_decay, check_monotonicity, inverse_iteration, minimizing_movements, FlowSummary, FlowTrace,
    IterationTrace, ProblemInstance, RunFailure, RunSummary,
};
use serde::Serialize;

use crate::config::{Command, ConfigError, RunConfig};
use crate::properties::run_suites;
use crate::report::{write_flow_csv, write_iteration_csv, write_json};

/// Relative gap to the oracle tolerated by `compare` for each scheme.
pub const ITERATE_GAP: f64 = 1e-4;
pub const FLOW_GAP: f64 = 1e-3;

/// How a run ended; `code` maps it to the process exit status.
#[derive(Debug)]
pub enum Outcome {
    Success,
    /// Requested checks ran and at least one failed.
    ChecksFailed(String),
    /// A scheme or solver failed; partial traces are on disk.
    NumericFailure(String),
    Config(ConfigError),
}

impl Outcome {
    pub fn code(&self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ChecksFailed(_) | Outcome::NumericFailure(_) => 1,
            Outcome::Config(_) => 2,
        }
    }
}

#[derive(Serialize)]
struct InstanceInfo {
    kind: &'static str,
    p: f64,
    q: f64,
    dim: usize,
    spacing: f64,
    epsilon: f64,
}

impl InstanceInfo {
    fn of(problem: &ProblemInstance) -> Self {
        let e = problem.exponent();
        Self {
            kind: problem.kind().name(),
            p: e.p(),
            q: e.q(),
            dim: problem.dim(),
            spacing: problem.spacing(),
            epsilon: problem.epsilon(),
        }
    }
}

#[derive(Serialize)]
struct IterateJson {
    command: &'static str,
    instance: InstanceInfo,
    lambda_hat: f64,
    mu_hat: f64,
    iters: usize,
    converged: bool,
    stop_reason: &'static str,
    final_ratio: f64,
    monotonicity_violations: usize,
    limit_vec: Vec<f64>,
    error: Option<String>,
}

impl IterateJson {
    fn new(problem: &ProblemInstance, trace: &IterationTrace, error: Option<String>) -> Self {
        let base = Self {
            command: "iterate",
            instance: InstanceInfo::of(problem),
            lambda_hat: f64::NAN,
            mu_hat: f64::NAN,
            iters: 0,
            converged: false,
            stop_reason: "failed",
            final_ratio: f64::NAN,
            monotonicity_violations: 0,
            limit_vec: Vec::new(),
            error,
        };
        if trace.rows.is_empty() {
            return base;
        }
        let summary = RunSummary::from_trace(trace);
        Self {
            lambda_hat: summary.lambda_hat,
            mu_hat: summary.mu_hat,
            iters: summary.iters,
            converged: summary.converged && base.error.is_none(),
            stop_reason: if base.error.is_some() { "failed" } else { summary.stop_reason.name() },
            final_ratio: trace.rows.last().map_or(f64::NAN, |r| r.ratio),
            monotonicity_violations: check_monotonicity(trace, None).len(),
            limit_vec: summary.limit_vec.into_vec(),
            ..base
        }
    }
}

#[derive(Serialize)]
struct FlowJson {
    command: &'static str,
    instance: InstanceInfo,
    tau: f64,
    t_final: f64,
    lambda_hat: f64,
    mu_hat: f64,
    steps: usize,
    converged: bool,
    stop_reason: &'static str,
    decay_violations: usize,
    max_energy_residual: f64,
    limit_vec: Vec<f64>,
    error: Option<String>,
}

impl FlowJson {
    fn new(problem: &ProblemInstance, trace: &FlowTrace, error: Option<String>) -> Self {
        let base = Self {
            command: "flow",
            instance: InstanceInfo::of(problem),
            tau: trace.tau,
            t_final: f64::NAN,
            lambda_hat: f64::NAN,
            mu_hat: f64::NAN,
            steps: 0,
            converged: false,
            stop_reason: "failed",
            decay_violations: 0,
            max_energy_residual: f64::NAN,
            limit_vec: Vec::new(),
            error,
        };
        if trace.rows.is_empty() {
            return base;
        }
        let summary = FlowSummary::from_trace(trace);
        Self {
            t_final: trace.rows.last().map_or(f64::NAN, |r| r.t),
            lambda_hat: summary.lambda_hat,
            mu_hat: summary.mu_hat,
            steps: summary.steps,
            converged: summary.converged && base.error.is_none(),
            stop_reason: if base.error.is_some() { "failed" } else { summary.stop_reason.name() },
            decay_violations: if summary.mu_hat.is_finite() { check_decay(trace, None).len() } else { 0 },
            max_energy_residual: trace.rows[1..].iter().map(|r| r.energy_residual).fold(f64::NAN, f64::max),
            limit_vec: summary.limit_vec.into_vec(),
            ..base
        }
    }
}

#[derive(Serialize)]
struct OracleJson {
    command: &'static str,
    instance: InstanceInfo,
    seed: u64,
    lambda_star: f64,
    mu_star: f64,
    method: &'static str,
    certificate: f64,
    minimizer: Vec<f64>,
}

fn method_name(m: OracleMethod) -> &'static str {
    match m {
        OracleMethod::ClosedForm => "closed_form",
        OracleMethod::ProjectedGradient => "projected_gradient",
    }
}

impl OracleJson {
    fn new(problem: &ProblemInstance, seed: u64, r: &OracleResult) -> Self {
        Self {
            command: "oracle",
            instance: InstanceInfo::of(problem),
            seed,
            lambda_star: r.lambda,
            mu_star: nlrq::mu_from_lambda(r.lambda, problem.exponent()).unwrap_or(f64::NAN),
            method: method_name(r.method),
            certificate: r.certificate,
            minimizer: r.minimizer.to_vec(),
        }
    }
}

#[derive(Serialize)]
struct CompareJson {
    command: &'static str,
    instance: InstanceInfo,
    seed: u64,
    lambda_iterate: f64,
    lambda_flow: f64,
    lambda_oracle: f64,
    gap_iterate_oracle: f64,
    gap_flow_oracle: f64,
    gap_iterate_flow: f64,
    iterate_stop: &'static str,
    flow_stop: &'static str,
    flow_tau: f64,
    oracle_method: &'static str,
    oracle_certificate: f64,
    agree: bool,
}

fn gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Where the files for `config` go: the command line wins over the file,
/// which wins over the working directory.
pub fn output_dir(config: &RunConfig, cli_out: Option<&Path>) -> PathBuf {
    cli_out.map(Path::to_path_buf).or_else(|| config.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."))
}

/// Executes `config`, writing into `out`. Progress lines go to stdout unless
/// `quiet`.
pub fn run(config: &RunConfig, out: &Path, quiet: bool) -> Outcome {
    if let Err(e) = std::fs::create_dir_all(out) {
        return Outcome::Config(ConfigError { key: "out".into(), reason: format!("{}: {e}", out.display()) });
    }
    let say = |line: String| {
        if !quiet {
            println!("{line}");
        }
    };
    let io = |e: std::io::Error| Outcome::NumericFailure(format!("writing output: {e}"));
    let seed = config.seed();
    let problem = match &config.instance {
        Some(inst) => match inst.build() {
            Ok(p) => Some(p),
            Err(e) => return Outcome::Config(e),
        },
        None => None,
    };

    match config.command {
        Command::Iterate => {
            let problem = problem.expect("validated");
            let result = inverse_iteration(&problem, &config.initial(&problem), &config.iteration_options());
            let (trace, error) = split(result);
            if let Err(e) = write_iteration_csv(&out.join("iterate_trace.csv"), &problem, &trace) {
                return io(e);
            }
            let json = IterateJson::new(&problem, &trace, error.clone());
            if let Err(e) = write_json(&out.join("iterate_summary.json"), &json) {
                return io(e);
            }
            match error {
                Some(e) => Outcome::NumericFailure(e),
                None => {
                    say(format!("iterate: lambda_hat = {:.12e} ({}, {} iterations)", json.lambda_hat, json.stop_reason, json.iters));
                    Outcome::Success
                }
            }
        }
        Command::Flow => {
            let problem = problem.expect("validated");
            let result = minimizing_movements(&problem, &config.initial(&problem), &config.flow_options());
            let (trace, error) = split(result);
            if let Err(e) = write_flow_csv(&out.join("flow_trace.csv"), &trace) {
                return io(e);
            }
            let json = FlowJson::new(&problem, &trace, error.clone());
            if let Err(e) = write_json(&out.join("flow_summary.json"), &json) {
                return io(e);
            }
            match error {
                Some(e) => Outcome::NumericFailure(e),
                None => {
                    say(format!("flow: lambda_hat = {:.12e} ({}, {} steps, tau = {:e})", json.lambda_hat, json.stop_reason, json.steps, json.tau));
                    Outcome::Success
                }
            }
        }
        Command::Oracle => {
            let problem = problem.expect("validated");
            match direct_rayleigh_min(&problem, &OracleOptions { seed, ..OracleOptions::default() }) {
                Ok(r) => {
                    if let Err(e) = write_json(&out.join("oracle.json"), &OracleJson::new(&problem, seed, &r)) {
                        return io(e);
                    }
                    say(format!("oracle: lambda_star = {:.12e} (certificate {:.1e})", r.lambda, r.certificate));
                    Outcome::Success
                }
                Err(e) => Outcome::NumericFailure(e.to_string()),
            }
        }
        Command::Compare => compare(config, &problem.expect("validated"), out, seed, &say),
        Command::Properties => {
            let report = run_suites(problem.as_ref(), seed);
            let tap = report.to_tap();
            if let Err(e) = std::fs::write(out.join("properties.txt"), &tap) {
                return io(e);
            }
            if !quiet {
                print!("{tap}");
            }
            if report.passed() {
                Outcome::Success
            } else {
                Outcome::ChecksFailed(format!("{} of {} checks failed", report.failures(), report.checks.len()))
            }
        }
    }
}

fn split<T: std::fmt::Debug>(r: Result<T, RunFailure<T>>) -> (T, Option<String>) {
    match r {
        Ok(t) => (t, None),
        Err(f) => (f.trace, Some(f.error.to_string())),
    }
}

fn compare(config: &RunConfig, problem: &ProblemInstance, out: &Path, seed: u64, say: &dyn Fn(String)) -> Outcome {
    let u0 = config.initial(problem);
    let (iterate, flow, oracle) = std::thread::scope(|s| {
        let it = s.spawn(|| inverse_iteration(problem, &u0, &config.iteration_options()));
        let fl = s.spawn(|| minimizing_movements(problem, &u0, &config.flow_options()));
        let or = s.spawn(|| direct_rayleigh_min(problem, &OracleOptions { seed, ..OracleOptions::default() }));
        (it.join().expect("iterate thread"), fl.join().expect("flow thread"), or.join().expect("oracle thread"))
    });
    let (it_trace, it_err) = split(iterate);
    let (fl_trace, fl_err) = split(flow);
    let written = write_iteration_csv(&out.join("iterate_trace.csv"), problem, &it_trace)
        .and_then(|_| write_flow_csv(&out.join("flow_trace.csv"), &fl_trace));
    if let Err(e) = written {
        return Outcome::NumericFailure(format!("writing output: {e}"));
    }
    if let Some(e) = it_err.or(fl_err) {
        return Outcome::NumericFailure(e);
    }
    let oracle = match oracle {
        Ok(o) => o,
        Err(e) => return Outcome::NumericFailure(e.to_string()),
    };
    let (li, lf, lo) = (it_trace.lambda_hat(), fl_trace.lambda_hat(), oracle.lambda);
    let json = CompareJson {
        command: "compare",
        instance: InstanceInfo::of(problem),
        seed,
        lambda_iterate: li,
        lambda_flow: lf,
        lambda_oracle: lo,
        gap_iterate_oracle: gap(li, lo),
        gap_flow_oracle: gap(lf, lo),
        gap_iterate_flow: gap(li, lf),
        iterate_stop: it_trace.stop.map_or("failed", |s| s.name()),
        flow_stop: fl_trace.stop.map_or("failed", |s| s.name()),
        flow_tau: fl_trace.tau,
        oracle_method: method_name(oracle.method),
        oracle_certificate: oracle.certificate,
        agree: gap(li, lo) <= ITERATE_GAP && gap(lf, lo) <= FLOW_GAP,
    };
    if let Err(e) = write_json(&out.join("compare.json"), &json) {
        return Outcome::NumericFailure(format!("writing output: {e}"));
    }
    say(format!("compare: iterate {li:.12e}, flow {lf:.12e}, oracle {lo:.12e}"));
    if json.agree {
        Outcome::Success
    } else {
        Outcome::ChecksFailed(format!(
            "schemes disagree with the oracle: gaps {:.2e} (iterate), {:.2e} (flow)",
            json.gap_iterate_oracle, json.gap_flow_oracle
        ))
    }
}
