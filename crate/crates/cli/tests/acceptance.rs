//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nlrq::flow::rough_mu;
use nlrq::oracle::{direct_rayleigh_min, eigen_residual, hilbert_closed_form, HilbertPoint, OracleOptions, OracleResult};
use nlrq::{
    check_decay, check_monotonicity, duality_map, dual_norm, inverse_iteration, limit_vec, minimizing_movements, norm,
    pairing, CoeffVec, Exponent, FlowOptions, FlowTrace, IterationOptions, IterationTrace, ProblemInstance,
    ProblemKind, ProblemSpec, SpaceDescriptor, StopReason,
};
use nlrq_cli::properties::gradient_fd_error;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

type Verdict = Result<String, String>;

fn diag(d: &[f64]) -> ProblemInstance {
    let n = d.len();
    let rows = (0..n).map(|i| (0..n).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect();
    ProblemSpec::matrix(rows).build().unwrap()
}

fn ones(n: usize) -> CoeffVec {
    CoeffVec::new(vec![1.0; n]).unwrap()
}

/// Every instance kind at every exponent the criteria name.
fn instance_matrix() -> Vec<ProblemInstance> {
    let mut out = Vec::new();
    for kind in ProblemKind::ALL {
        let ps: &[f64] = if kind == ProblemKind::MatrixQuadratic { &[2.0] } else { &[1.5, 2.0, 3.0] };
        for &p in ps {
            out.push(ProblemSpec::standard(kind, p).build().unwrap());
        }
    }
    out
}

fn tag(problem: &ProblemInstance) -> String {
    format!("{} p={}", problem.kind(), problem.exponent().p())
}

struct MatrixRun {
    problem: ProblemInstance,
    oracle: OracleResult,
    iterate: Result<IterationTrace, String>,
    flow: Result<FlowTrace, String>,
}

fn run_matrix() -> (Vec<MatrixRun>, Duration) {
    let start = Instant::now();
    let runs = instance_matrix()
        .into_iter()
        .map(|problem| {
            let u0 = problem.default_initial();
            let oracle = direct_rayleigh_min(&problem, &OracleOptions::default()).unwrap();
            let iterate = inverse_iteration(&problem, &u0, &IterationOptions::default()).map_err(|f| f.error.to_string());
            let flow = rough_mu(&problem, &u0).map_err(|e| e.to_string()).and_then(|mu| {
                let opts = FlowOptions { tau: Some(1e-3 / mu), ..FlowOptions::default() };
                minimizing_movements(&problem, &u0, &opts).map_err(|f| f.error.to_string())
            });
            MatrixRun { problem, oracle, iterate, flow }
        })
        .collect();
    (runs, start.elapsed())
}

fn criterion_1() -> Verdict {
    let sigmas = [1.0, 2.0, 5.0];
    let problem = diag(&sigmas);
    let start = Instant::now();
    let trace = inverse_iteration(&problem, &ones(3), &IterationOptions::default()).map_err(|f| f.error.to_string())?;
    let elapsed = start.elapsed();
    let iters = trace.last_k();
    let lambda_err = (trace.lambda_hat() - 1.0).abs();
    let mut closed = 0.0_f64;
    for k in 0..=iters {
        let exact = hilbert_closed_form(&sigmas, &[1.0, 1.0, 1.0], HilbertPoint::Step(k as u32)).unwrap();
        let u = trace.iterate(k);
        closed = closed.max(u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let lim = limit_vec(&trace);
    let target = CoeffVec::new(vec![1.0, 0.0, 0.0]).unwrap();
    let deviation = norm(problem.space(), &lim.add_scaled(-1.0, &target)).unwrap();
    let detail = format!(
        "|λ̂−1| = {lambda_err:.1e} after {iters} iterations in {elapsed:.2?}; closed-form gap {closed:.1e}; limit deviation {deviation:.1e}"
    );
    let ok = lambda_err <= 1e-10 && iters <= 60 && elapsed < Duration::from_secs(1) && closed <= 1e-9 && deviation <= 1e-8;
    if ok { Ok(detail) } else { Err(detail) }
}

fn criterion_2() -> Verdict {
    let problem = diag(&[1.0, 2.0, 5.0]);
    // the true ground-state level comes from the independent eigensolver
    let lambda = direct_rayleigh_min(&problem, &OracleOptions::default()).unwrap().lambda;
    let mu = lambda;
    let opts = IterationOptions { reference_lambda: Some(lambda), ..IterationOptions::default() };
    let u0 = CoeffVec::new(vec![0.0, 1.0, 0.0]).unwrap();
    let trace = inverse_iteration(&problem, &u0, &opts).map_err(|f| f.error.to_string())?;
    let n0 = trace.rows[0].norm;
    let worst = trace
        .rows
        .iter()
        .map(|r| (mu.powi(r.k as i32) * r.norm - 0.5f64.powi(r.k as i32) * n0).abs())
        .fold(0.0, f64::max);
    let detail = format!("stop {:?} after {} steps; max |μ^k‖u_k‖ − 2^(−k)‖u_0‖| = {worst:.1e}", trace.stop, trace.last_k());
    if trace.stop == Some(StopReason::CollapsedToZero) && worst <= 1e-10 { Ok(detail) } else { Err(detail) }
}

fn criterion_3(runs: &[MatrixRun], elapsed: Duration) -> Verdict {
    let mut failures = Vec::new();
    let (mut worst_it, mut worst_fl) = (0.0_f64, 0.0_f64);
    for r in runs {
        let l = r.oracle.lambda;
        match &r.iterate {
            Ok(t) => {
                let g = (t.lambda_hat() - l).abs() / l;
                worst_it = worst_it.max(g);
                if g > 1e-4 {
                    failures.push(format!("{} iterate gap {g:.1e}", tag(&r.problem)));
                }
            }
            Err(e) => failures.push(format!("{} iterate failed: {e}", tag(&r.problem))),
        }
        match &r.flow {
            Ok(t) => {
                let g = (t.lambda_hat() - l).abs() / l;
                worst_fl = worst_fl.max(g);
                if g > 1e-3 {
                    failures.push(format!("{} flow gap {g:.1e}", tag(&r.problem)));
                }
            }
            Err(e) => failures.push(format!("{} flow failed: {e}", tag(&r.problem))),
        }
    }
    let detail = format!(
        "{} runs in {elapsed:.1?}; worst gaps {worst_it:.1e} (iterate), {worst_fl:.1e} (flow)",
        runs.len()
    );
    if failures.is_empty() && elapsed < Duration::from_secs(600) {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn criterion_4(runs: &[MatrixRun]) -> Verdict {
    let mut violations = Vec::new();
    for r in runs {
        if let Ok(t) = &r.iterate {
            let v = check_monotonicity(t, None);
            if !v.is_empty() {
                violations.push(format!("{}: {} iteration violations, first {:?}", tag(&r.problem), v.len(), v[0]));
            }
        }
        if let Ok(t) = &r.flow {
            let p = t.exponent.p();
            for w in t.rows.windows(2) {
                if w[1].rq > w[0].rq * (1.0 + 1e-6) {
                    violations.push(format!("{}: Rayleigh increase at step {}", tag(&r.problem), w[1].n));
                }
                let moved = t.tau * w[1].speed.powf(p) / p;
                if w[1].phi + moved > w[0].phi * (1.0 + 1e-9) {
                    violations.push(format!("{}: energy descent fails at step {}", tag(&r.problem), w[1].n));
                }
            }
        }
    }
    let detail = format!("{} violations across {} instance/exponent pairs", violations.len(), runs.len());
    if violations.is_empty() { Ok(detail) } else { Err(format!("{detail}: {}", violations.join("; "))) }
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut rng = SplitMix64::seed_from_u64(0x5EED);
    let dim = 16;
    let (mut duality, mut euler) = (0.0_f64, 0.0_f64);
    for p in [1.5, 2.0, 3.0, 4.0] {
        let e = Exponent::new(p).unwrap();
        let spaces = [
            SpaceDescriptor::weighted_lp(dim, 0.1, e).unwrap(),
            SpaceDescriptor::quotient_lp(dim, 0.1, e).unwrap(),
            SpaceDescriptor::sup(dim, e).unwrap(),
            SpaceDescriptor::trace_boundary(dim, 0.1, vec![0, dim - 1], 1.0, e).unwrap(),
        ];
        for sp in &spaces {
            for _ in 0..1000 {
                let u = CoeffVec::new((0..dim).map(|_| rng.random_range(-10.0..10.0)).collect()).unwrap();
                let xi = duality_map(sp, &u).unwrap();
                let up = norm(sp, &u).unwrap().powf(p);
                let scale = up.max(1.0);
                let a = (pairing(sp, &xi, &u).unwrap() - up).abs() / scale;
                let b = (dual_norm(sp, &xi).unwrap().powf(e.q()) - up).abs() / scale;
                duality = duality.max(a).max(b);
            }
        }
        // one instance per space kind and every instance kind, unsmoothed
        for kind in ProblemKind::ALL {
            if kind == ProblemKind::MatrixQuadratic && p != 2.0 {
                continue;
            }
            let spec = match kind {
                ProblemKind::MatrixQuadratic => ProblemSpec::standard(kind, p),
                ProblemKind::PDirichlet2D => ProblemSpec::new(kind, p, 4),
                _ => ProblemSpec::new(kind, p, 16),
            };
            let problem = spec.with_epsilon(0.0).build().unwrap();
            for _ in 0..1000 {
                let u = CoeffVec::new((0..problem.dim()).map(|_| rng.random_range(-10.0..10.0)).collect()).unwrap();
                euler = euler.max(problem.euler_identity_residual(&u).unwrap());
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("duality residual {duality:.1e}, Euler residual {euler:.1e}, {elapsed:.2?}");
    if duality <= 1e-10 && euler <= 1e-9 && elapsed < Duration::from_secs(10) { Ok(detail) } else { Err(detail) }
}

fn criterion_6() -> Verdict {
    let problem = diag(&[1.0, 2.0, 5.0]);
    let run = |tau: f64, t_end: Option<f64>| {
        let opts = FlowOptions { tau: Some(tau), t_end, ..FlowOptions::default() };
        minimizing_movements(&problem, &ones(3), &opts).map_err(|f| f.error.to_string())
    };
    let converged = run(1e-3, None)?;
    let decay = check_decay(&converged, None);
    let max_residual = |t: &FlowTrace| t.rows[1..].iter().map(|r| r.energy_residual).fold(0.0, f64::max);
    let coarse = max_residual(&run(1e-3, Some(1.0))?);
    let fine = max_residual(&run(5e-4, Some(1.0))?);
    let factor = coarse / fine;
    let detail = format!(
        "{} decay violations over {} steps (μ̂ = {:.10}); residual shrinks by {factor:.3} when τ is halved",
        decay.len(),
        converged.rows.len() - 1,
        converged.mu_hat()
    );
    if decay.is_empty() && factor >= 1.5 { Ok(detail) } else { Err(detail) }
}

/// Per-step deviation of the unit directions of `states` from that of `w`,
/// and of the norms from `norm(w)·factor^k`.
fn ray_deviation(problem: &ProblemInstance, w: &CoeffVec, states: &[CoeffVec], factor: f64) -> (f64, f64) {
    let sp = problem.space();
    let wn = norm(sp, w).unwrap();
    let unit_w = w.scaled(1.0 / wn);
    let (mut dir, mut scale) = (0.0_f64, 0.0_f64);
    for (k, s) in states.iter().enumerate() {
        let sn = norm(sp, s).unwrap();
        dir = dir.max(norm(sp, &s.scaled(1.0 / sn).add_scaled(-1.0, &unit_w)).unwrap());
        scale = scale.max((sn / (wn * factor.powi(k as i32)) - 1.0).abs());
    }
    (dir, scale)
}

fn criterion_7() -> Verdict {
    let mut worst = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut failures = Vec::new();
    for kind in ProblemKind::ALL {
        let ps: &[f64] = if kind == ProblemKind::MatrixQuadratic { &[2.0] } else { &[1.5, 3.0] };
        for &p in ps {
            let problem = ProblemSpec::standard(kind, p).build().unwrap();
            let first = inverse_iteration(&problem, &problem.default_initial(), &IterationOptions::default())
                .map_err(|f| format!("{}: {}", tag(&problem), f.error))?;
            let w = limit_vec(&first);
            let mu = first.mu_hat();

            // a run from a fixed point stops at once, so chain ten single steps
            let one = IterationOptions { max_iters: 1, ..IterationOptions::default() };
            let mut states = vec![w.clone()];
            for _ in 0..10 {
                let it = inverse_iteration(&problem, states.last().unwrap(), &one)
                    .map_err(|f| format!("{}: {}", tag(&problem), f.error))?;
                states.push(it.iterate(1));
            }
            let (dir_it, scale_it) = ray_deviation(&problem, &w, &states, 1.0 / mu);

            let tau = 1e-2 / mu;
            let opts = FlowOptions { tau: Some(tau), t_end: Some(10.0 * tau), ..FlowOptions::default() };
            let fl = minimizing_movements(&problem, &w, &opts).map_err(|f| format!("{}: {}", tag(&problem), f.error))?;
            let states: Vec<_> = (0..fl.rows.len()).map(|n| fl.state(n)).collect();
            // a movement step maps a·w to a/(1 + μτ)·w
            let (dir_fl, scale_fl) = ray_deviation(&problem, &w, &states, 1.0 / (1.0 + mu * tau));
            let rq0 = fl.rows[0].rq;
            let rq_drift = fl.rows.iter().map(|r| (r.rq / rq0 - 1.0).abs()).fold(0.0, f64::max);

            if fl.rows.len() != 11 {
                failures.push(format!("{}: {} flow steps", tag(&problem), fl.rows.len() - 1));
            }
            for (name, v) in [("iterate direction", dir_it), ("iterate scale", scale_it), ("flow direction", dir_fl), ("flow scale", scale_fl), ("flow rq", rq_drift)] {
                if v > 1e-6 {
                    failures.push(format!("{} {name} {v:.1e}", tag(&problem)));
                }
            }
            worst = (worst.0.max(dir_it), worst.1.max(scale_it), worst.2.max(dir_fl), worst.3.max(scale_fl), worst.4.max(rq_drift));
        }
    }
    let detail = format!(
        "worst deviations: iterate direction {:.1e}, scale {:.1e}; flow direction {:.1e}, scale {:.1e}, rq {:.1e}",
        worst.0, worst.1, worst.2, worst.3, worst.4
    );
    if failures.is_empty() { Ok(detail) } else { Err(format!("{detail}; {}", failures.join("; "))) }
}

fn criterion_8(runs: &[MatrixRun]) -> Verdict {
    let mut failures = Vec::new();
    let problem = diag(&[1.0, 2.0, 5.0]);
    let trace = inverse_iteration(&problem, &ones(3), &IterationOptions::default()).map_err(|f| f.error.to_string())?;
    let mut worst = eigen_residual(&problem, &limit_vec(&trace), trace.lambda_hat()).map_err(|e| e.to_string())?;
    if worst > 1e-6 {
        failures.push(format!("matrix diag(1,2,5) residual {worst:.1e}"));
    }
    let mut checked = 1;
    for r in runs {
        if r.problem.exponent().p() == 2.0 {
            continue;
        }
        for (scheme, limit, lambda) in [
            ("iterate", r.iterate.as_ref().ok().map(limit_vec), r.iterate.as_ref().ok().map(|t| t.lambda_hat())),
            ("flow", r.flow.as_ref().ok().map(nlrq::flow_limit), r.flow.as_ref().ok().map(|t| t.lambda_hat())),
        ] {
            let (Some(w), Some(l)) = (limit, lambda) else {
                failures.push(format!("{} {scheme}: no converged run", tag(&r.problem)));
                continue;
            };
            let res = eigen_residual(&r.problem, &w, l).map_err(|e| e.to_string())?;
            worst = worst.max(res);
            checked += 1;
            if res > 1e-6 {
                failures.push(format!("{} {scheme} residual {res:.1e}", tag(&r.problem)));
            }
        }
    }
    let detail = format!("{checked} limit vectors, worst relative residual {worst:.1e}");
    if failures.is_empty() { Ok(detail) } else { Err(format!("{detail}; {}", failures.join("; "))) }
}

fn criterion_9() -> Verdict {
    let mut rng = SplitMix64::seed_from_u64(0x5EED);
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    for problem in instance_matrix() {
        let e = gradient_fd_error(&problem, &mut rng, 50);
        worst = worst.max(e);
        if e > 1e-5 {
            failures.push(format!("{} error {e:.1e}", tag(&problem)));
        }
    }
    let detail = format!("worst relative error {worst:.1e} over 50 points per instance");
    if failures.is_empty() { Ok(detail) } else { Err(format!("{detail}; {}", failures.join("; "))) }
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Verdict {
    let root = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let config = root.path().join("compare.toml");
    std::fs::write(
        &config,
        "command = \"compare\"\nseed = 99\n[instance]\nkind = \"fractional1d\"\np = 3.0\nn = 15\ns = 0.4\n",
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = root.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_nlrq"))
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .arg("--quiet")
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("compare run {run} exited with {status}"));
        }
        outputs.push(read_dir_bytes(&out));
    }
    let names: Vec<_> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
    let detail = format!("files {}", names.join(", "));
    if outputs[0] == outputs[1] && !outputs[0].is_empty() {
        Ok(format!("{detail} byte-identical"))
    } else {
        Err(format!("{detail} differ"))
    }
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful for this target
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    results.push((1, "matrix ground truth", criterion_1()));
    results.push((2, "collapse case", criterion_2()));
    let (runs, elapsed) = run_matrix();
    results.push((3, "scheme agreement", criterion_3(&runs, elapsed)));
    results.push((4, "monotonicity suites", criterion_4(&runs)));
    results.push((5, "duality and Euler identities", criterion_5()));
    results.push((6, "flow decay", criterion_6()));
    results.push((7, "separation-of-variables fixed points", criterion_7()));
    results.push((8, "eigen-relation certificate", criterion_8(&runs)));
    results.push((9, "gradient checks", criterion_9()));
    results.push((10, "reproducibility", criterion_10()));

    let mut failed = 0;
    for (n, name, verdict) in &results {
        match verdict {
            Ok(d) => println!("criterion {n:>2} PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
