//! Invariant suites behind the `properties` command.
//!
//! Each check samples from a SplitMix64 stream seeded by the run seed, so
//! reports are reproducible. The report is TAP-like: one `ok`/`not ok` line
//! per check followed by its worst observed value.

use nlrq::oracle::{direct_rayleigh_min, OracleOptions};
use nlrq::{
    check_monotonicity, dual_norm, duality_map, inverse_iteration, minimizing_movements, norm, optimal_shift, pairing,
    ray_projection_alpha, solve_movement, solve_tilted, CoeffVec, DualVec, Exponent, FlowOptions, InitialGuess,
    IterationOptions, ProblemInstance, ProblemKind, ProblemSpec, RunSummary, SolverOptions, SpaceDescriptor, SpaceKind,
};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    fn record(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    /// Records a check whose worst value must not exceed `limit`.
    fn bound(&mut self, name: impl Into<String>, worst: f64, limit: f64) {
        self.record(name, worst <= limit, format!("worst {worst:.3e}, limit {limit:.0e}"));
    }

    pub fn to_tap(&self) -> String {
        let mut out = format!("TAP version 13\n1..{}\n", self.checks.len());
        for (i, c) in self.checks.iter().enumerate() {
            let status = if c.passed { "ok" } else { "not ok" };
            out.push_str(&format!("{status} {} - {} # {}\n", i + 1, c.name, c.detail));
        }
        out
    }
}

/// Instances exercised when the configuration names none: every kind at
/// `p ∈ {1.5, 2, 3}` on small grids.
pub fn default_instances() -> Vec<ProblemInstance> {
    let mut out = Vec::new();
    for kind in ProblemKind::ALL {
        let ps: &[f64] = if kind == ProblemKind::MatrixQuadratic { &[2.0] } else { &[1.5, 2.0, 3.0] };
        for &p in ps {
            let spec = match kind {
                ProblemKind::MatrixQuadratic => ProblemSpec::standard(kind, p),
                ProblemKind::PDirichlet2D => ProblemSpec::new(kind, p, 4),
                _ => ProblemSpec::new(kind, p, 11),
            };
            out.push(spec.build().expect("valid built-in instance"));
        }
    }
    out
}

fn random_vec(rng: &mut SplitMix64, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
}

fn label(problem: &ProblemInstance) -> String {
    format!("{} p={} dim={}", problem.kind(), problem.exponent().p(), problem.dim())
}

fn space_of(kind: SpaceKind, dim: usize, p: f64) -> SpaceDescriptor {
    let e = Exponent::new(p).expect("p > 1");
    match kind {
        SpaceKind::WeightedLp => SpaceDescriptor::weighted_lp(dim, 0.1, e),
        SpaceKind::QuotientLp => SpaceDescriptor::quotient_lp(dim, 0.1, e),
        SpaceKind::Sup => SpaceDescriptor::sup(dim, e),
        SpaceKind::TraceBoundary => SpaceDescriptor::trace_boundary(dim, 0.1, vec![0, dim - 1], 1.0, e),
    }
    .expect("valid space")
}

/// Duality, Hölder, homogeneity and projection identities on every space kind.
pub fn space_suite(report: &mut Report, rng: &mut SplitMix64) {
    const DIM: usize = 10;
    const SAMPLES: usize = 1000;
    for kind in [SpaceKind::WeightedLp, SpaceKind::QuotientLp, SpaceKind::Sup, SpaceKind::TraceBoundary] {
        for p in [1.5, 2.0, 3.0, 4.0] {
            let sp = space_of(kind, DIM, p);
            let q = sp.exponent().q();
            let tag = format!("{kind:?} p={p}");
            let (mut dual, mut holder, mut homog, mut shift) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
            for _ in 0..SAMPLES {
                let u = CoeffVec::new(random_vec(rng, DIM, 10.0)).expect("finite");
                let xi = duality_map(&sp, &u).expect("dimension");
                let up = norm(&sp, &u).expect("dimension").powf(p);
                let scale = up.max(1.0);
                let pair = pairing(&sp, &xi, &u).expect("dimension");
                let dn = dual_norm(&sp, &xi).expect("dimension").powf(q);
                dual = dual.max((pair - up).abs() / scale).max((dn - up).abs() / scale);

                let mut x = random_vec(rng, DIM, 10.0);
                match kind {
                    SpaceKind::QuotientLp => {
                        let m = x.iter().sum::<f64>() / DIM as f64;
                        x.iter_mut().for_each(|v| *v -= m);
                    }
                    // only boundary-carried functionals are bounded by the trace seminorm
                    SpaceKind::TraceBoundary => x[1..DIM - 1].iter_mut().for_each(|v| *v = 0.0),
                    _ => {}
                }
                let x = DualVec::new(x).expect("finite");
                let lhs = pairing(&sp, &x, &u).expect("dimension").abs();
                let rhs = dual_norm(&sp, &x).expect("dimension") * norm(&sp, &u).expect("dimension");
                holder = holder.max((lhs - rhs) / rhs.max(f64::MIN_POSITIVE));

                let t = rng.random_range(0.01..100.0);
                let a = norm(&sp, &u.scaled(t)).expect("dimension");
                let b = t * norm(&sp, &u).expect("dimension");
                homog = homog.max((a - b).abs() / b.max(f64::MIN_POSITIVE));

                if kind == SpaceKind::QuotientLp {
                    let c = rng.random_range(-50.0..50.0);
                    let a = norm(&sp, &u.add_constant(c)).expect("dimension");
                    let b = norm(&sp, &u).expect("dimension");
                    shift = shift.max((a - b).abs() / b);
                }
            }
            report.bound(format!("core/duality_identity {tag}"), dual, 1e-10);
            report.bound(format!("core/holder {tag}"), holder, 1e-12);
            report.bound(format!("core/norm_homogeneity {tag}"), homog, 1e-12);
            if kind == SpaceKind::QuotientLp {
                report.bound(format!("core/quotient_shift_invariance {tag}"), shift, 1e-12);
                let mut res = 0.0_f64;
                for _ in 0..100 {
                    let u = CoeffVec::new(random_vec(rng, DIM, 10.0)).expect("finite");
                    let c = optimal_shift(&u, &sp).expect("quotient space");
                    let (mut r, mut mass) = (0.0, 0.0);
                    for &v in u.iter() {
                        let s = v + c;
                        r += 0.1 * s.abs().powf(p - 2.0) * s;
                        mass += 0.1 * s.abs().powf(p - 1.0);
                    }
                    res = res.max(r.abs() / mass);
                }
                report.bound(format!("core/optimal_shift_residual {tag}"), res, 1e-12);
            }
            let mut alpha = 0.0_f64;
            for _ in 0..50 {
                let w = CoeffVec::new(random_vec(rng, DIM, 1.0)).expect("finite");
                if norm(&sp, &w).expect("dimension") < 1e-3 {
                    continue;
                }
                let u = CoeffVec::new(random_vec(rng, DIM, 1.0)).expect("finite");
                let s = rng.random_range(0.1..10.0);
                let a = ray_projection_alpha(&sp, &w, &u.scaled(s)).expect("nonzero w");
                let b = s * ray_projection_alpha(&sp, &w, &u).expect("nonzero w");
                alpha = alpha.max((a - b).abs() / (1.0 + b));
            }
            report.bound(format!("core/ray_projection_homogeneity {tag}"), alpha, 1e-8);
        }
    }
}

/// Energy identities on one instance.
pub fn problem_suite(report: &mut Report, rng: &mut SplitMix64, problem: &ProblemInstance) {
    const SAMPLES: usize = 200;
    let tag = label(problem);
    let dim = problem.dim();
    let p = problem.exponent().p();
    // the identities below are exact only for the unsmoothed energy
    let exact = ProblemSpec { epsilon: Some(0.0), ..problem.spec().clone() }.build().expect("valid instance");
    let phi = |u: &CoeffVec| exact.phi_value(u).expect("dimension");
    let (mut homog, mut convex, mut euler, mut cs, mut cs_eq, mut shift) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..SAMPLES {
        let u = CoeffVec::new(random_vec(rng, dim, 1.0)).expect("finite");
        let v = CoeffVec::new(random_vec(rng, dim, 1.0)).expect("finite");
        let base = phi(&u);
        for t in [0.5, 2.0, 10.0] {
            let scaled = phi(&u.scaled(t));
            homog = homog.max((scaled - t.powf(p) * base).abs() / scaled.max(f64::MIN_POSITIVE));
        }
        let mid = phi(&u.scaled(0.5).add_scaled(0.5, &v));
        convex = convex.max(mid - 0.5 * base - 0.5 * phi(&v));
        euler = euler.max(exact.euler_identity_residual(&u).expect("dimension"));

        let g = exact.phi_gradient(&u).expect("dimension");
        let pu = p * base;
        let bound = |w: &CoeffVec| pu.powf(1.0 - 1.0 / p) * (p * phi(w)).powf(1.0 / p);
        let lhs = pairing(exact.space(), &g, &v).expect("dimension");
        cs = cs.max(lhs - bound(&v));
        let tu = u.scaled(rng.random_range(0.1..10.0));
        let lhs = pairing(exact.space(), &g, &tu).expect("dimension");
        let rhs = bound(&tu);
        cs_eq = cs_eq.max((lhs - rhs).abs() / (1.0 + rhs));

        if problem.kind() == ProblemKind::NeumannPLaplacian1D {
            let c = rng.random_range(-5.0..5.0);
            shift = shift.max((phi(&u.add_constant(c)) - base).abs() / (1.0 + base));
        }
    }
    report.bound(format!("problems/homogeneity {tag}"), homog, 1e-10);
    report.bound(format!("problems/convexity {tag}"), convex, 1e-12);
    report.bound(format!("problems/euler_identity {tag}"), euler, 1e-9);
    report.bound(format!("problems/cauchy_schwarz {tag}"), cs, 1e-9);
    report.bound(format!("problems/cauchy_schwarz_equality {tag}"), cs_eq, 1e-8);
    if problem.kind() == ProblemKind::NeumannPLaplacian1D {
        report.bound(format!("problems/shift_invariance {tag}"), shift, 1e-12);
    }

    for eps in [0.0, 1e-8] {
        let smoothed = ProblemSpec { epsilon: Some(eps), ..problem.spec().clone() }.build().expect("valid instance");
        report.bound(format!("problems/gradient_fd eps={eps:e} {tag}"), gradient_fd_error(&smoothed, rng, 50), 1e-5);
    }
}

/// Worst relative deviation between the analytic gradient and
/// Richardson-extrapolated central differences (steps `1e-6` and `5e-7`) over
/// `points` random points. Plain central differences lose accuracy for
/// `p < 2` when neighbouring entries nearly coincide.
pub fn gradient_fd_error(problem: &ProblemInstance, rng: &mut SplitMix64, points: usize) -> f64 {
    let dim = problem.dim();
    let step = 1e-6;
    let mut worst = 0.0_f64;
    for _ in 0..points {
        let u = CoeffVec::new(random_vec(rng, dim, 1.0)).expect("finite");
        let g = problem.phi_gradient(&u).expect("dimension");
        let (mut err, mut scale) = (0.0_f64, 0.0_f64);
        let mut e = vec![0.0; dim];
        for i in 0..dim {
            e[i] = 1.0;
            let ei = CoeffVec::new(e.clone()).expect("finite");
            e[i] = 0.0;
            let central = |h: f64| {
                (problem.phi_value(&u.add_scaled(h, &ei)).expect("dimension")
                    - problem.phi_value(&u.add_scaled(-h, &ei)).expect("dimension"))
                    / (2.0 * h)
            };
            let fd = (4.0 * central(0.5 * step) - central(step)) / 3.0;
            let an = pairing(problem.space(), &g, &ei).expect("dimension");
            err = err.max((fd - an).abs());
            scale = scale.max(an.abs());
        }
        worst = worst.max(err / scale.max(1.0));
    }
    worst
}

/// Inner solver, both schemes and the oracle on one instance.
pub fn scheme_suite(report: &mut Report, rng: &mut SplitMix64, problem: &ProblemInstance, seed: u64) {
    let tag = label(problem);
    let dim = problem.dim();
    let p = problem.exponent().p();
    let kind = problem.kind();

    // inner solves from two different starts
    let solver = SolverOptions::default();
    let warm = SolverOptions { init: InitialGuess::Warm(CoeffVec::new(random_vec(rng, dim, 1.0)).expect("finite")), ..solver.clone() };
    let mut xi = random_vec(rng, dim, 1.0);
    if kind == ProblemKind::NeumannPLaplacian1D {
        let m = xi.iter().sum::<f64>() / dim as f64;
        xi.iter_mut().for_each(|v| *v -= m);
    }
    let xi = DualVec::new(xi).expect("finite");
    let g = CoeffVec::new(random_vec(rng, dim, 1.0)).expect("finite");
    let tol = 10.0 * solver.grad_tol;
    let by_value = matches!(kind, ProblemKind::SteklovTrace1D | ProblemKind::SupDirichlet1D | ProblemKind::NeumannPLaplacian1D);
    let agree = |a: &nlrq::SolveReport, b: &nlrq::SolveReport, compare_values: bool| -> f64 {
        if compare_values {
            (a.objective - b.objective).abs() / a.objective.abs().max(1.0)
        } else {
            let d = norm(problem.space(), &a.minimizer.add_scaled(-1.0, &b.minimizer)).unwrap_or(f64::INFINITY);
            d / norm(problem.space(), &a.minimizer).unwrap_or(1.0).max(1.0)
        }
    };
    let tilted = match (solve_tilted(problem, &xi, &solver), solve_tilted(problem, &xi, &warm)) {
        (Ok(a), Ok(b)) if a.converged && b.converged => agree(&a, &b, by_value),
        _ => f64::INFINITY,
    };
    report.bound(format!("inner_solver/tilted_uniqueness {tag}"), tilted, tol);
    let by_value = matches!(kind, ProblemKind::SteklovTrace1D | ProblemKind::SupDirichlet1D);
    let movement = match (solve_movement(problem, &g, 0.05, &solver), solve_movement(problem, &g, 0.05, &warm)) {
        (Ok(a), Ok(b)) if a.converged && b.converged => agree(&a, &b, by_value),
        _ => f64::INFINITY,
    };
    report.bound(format!("inner_solver/movement_uniqueness {tag}"), movement, tol);

    let oracle = direct_rayleigh_min(problem, &OracleOptions { seed, ..OracleOptions::default() });
    let oracle = match oracle {
        Ok(o) => o,
        Err(e) => {
            report.record(format!("oracle/run {tag}"), false, e.to_string());
            return;
        }
    };
    report.bound(format!("oracle/certificate {tag}"), oracle.certificate, 1e-6);
    let mut poincare = 0.0_f64;
    for _ in 0..1000 {
        let u = CoeffVec::new(random_vec(rng, dim, 1.0)).expect("finite");
        let un = norm(problem.space(), &u).expect("dimension");
        if un > 0.0 {
            let rhs = p * problem.phi_value(&u).expect("dimension");
            poincare = poincare.max(oracle.lambda * un.powf(p) / rhs - 1.0);
        }
    }
    report.bound(format!("oracle/poincare {tag}"), poincare, 1e-6);

    let u0 = problem.default_initial();
    let trace = match inverse_iteration(problem, &u0, &IterationOptions::default()) {
        Ok(t) => t,
        Err(f) => {
            report.record(format!("inverse_iteration/run {tag}"), false, f.error.to_string());
            return;
        }
    };
    let summary = RunSummary::from_trace(&trace);
    report.record(format!("inverse_iteration/converged {tag}"), summary.converged, summary.stop_reason.name());
    let violations = check_monotonicity(&trace, None);
    report.record(format!("inverse_iteration/monotonicity {tag}"), violations.is_empty(), format!("{} violations", violations.len()));
    let ratio = trace.rows.last().map_or(f64::NAN, |r| r.ratio);
    report.bound(format!("inverse_iteration/ratio_estimator {tag}"), (summary.mu_hat - ratio).abs() / summary.mu_hat, 1e-6);
    report.bound(
        format!("inverse_iteration/above_oracle {tag}"),
        (oracle.lambda - summary.lambda_hat) / oracle.lambda,
        1e-6,
    );
    report.bound(
        format!("oracle/agrees_with_iteration {tag}"),
        (summary.lambda_hat - oracle.lambda).abs() / oracle.lambda,
        1e-4,
    );
    let scaled = inverse_iteration(problem, &u0.scaled(rng.random_range(0.01..100.0)), &IterationOptions::default());
    let equivariance = match scaled {
        Ok(b) if b.rows.len() == trace.rows.len() => trace
            .directions
            .iter()
            .zip(&b.directions)
            .map(|(x, y)| {
                // unit directions compared in the space's own norm, so quotient
                // representatives that differ by a constant coincide
                let sp = problem.space();
                let ux = x.scaled(1.0 / norm(sp, x).expect("dimension"));
                let uy = y.scaled(1.0 / norm(sp, y).expect("dimension"));
                norm(sp, &ux.add_scaled(-1.0, &uy)).expect("dimension")
            })
            .fold((b.lambda_hat() - summary.lambda_hat).abs() / summary.lambda_hat, f64::max),
        _ => f64::INFINITY,
    };
    report.bound(format!("inverse_iteration/scale_equivariance {tag}"), equivariance, 1e-10);

    let flow = match minimizing_movements(problem, &u0, &FlowOptions::default()) {
        Ok(t) => t,
        Err(f) => {
            report.record(format!("flow/run {tag}"), false, f.error.to_string());
            return;
        }
    };
    let (mut descent, mut rq) = (0.0_f64, 0.0_f64);
    for w in flow.rows.windows(2) {
        let moved = flow.tau * w[1].speed.powf(p) / p;
        descent = descent.max((w[1].phi + moved - w[0].phi) / w[0].phi);
        rq = rq.max(w[1].rq / w[0].rq - 1.0);
    }
    report.bound(format!("flow/energy_descent {tag}"), descent, 1e-8);
    report.bound(format!("flow/rayleigh_monotonicity {tag}"), rq, 1e-6);
    report.bound(
        format!("flow/agrees_with_iteration {tag}"),
        (flow.lambda_hat() - summary.lambda_hat).abs() / summary.lambda_hat,
        1e-4,
    );
}

/// First-order decay of the energy-identity residual on a quadratic instance.
pub fn flow_order_suite(report: &mut Report) {
    let problem = ProblemSpec::matrix(vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 5.0]])
        .build()
        .expect("valid matrix");
    let v0 = CoeffVec::new(vec![1.0, 1.0, 1.0]).expect("finite");
    let worst = |tau: f64| -> f64 {
        let opts = FlowOptions { tau: Some(tau), t_end: Some(1.0), ..FlowOptions::default() };
        match minimizing_movements(&problem, &v0, &opts) {
            Ok(t) => t.rows[1..].iter().map(|r| r.energy_residual).fold(0.0, f64::max),
            Err(_) => f64::NAN,
        }
    };
    let (coarse, fine) = (worst(2e-3), worst(1e-3));
    let factor = coarse / fine;
    report.record(
        "flow/energy_residual_first_order matrix diag(1,2,5)",
        factor >= 1.5,
        format!("halving tau shrinks the residual by {factor:.3}"),
    );
}

/// Runs every suite. With `instance` set, the per-instance suites use only it.
pub fn run_suites(instance: Option<&ProblemInstance>, seed: u64) -> Report {
    let mut report = Report::default();
    let mut rng = SplitMix64::seed_from_u64(seed);
    space_suite(&mut report, &mut rng);
    let instances = match instance {
        Some(p) => vec![p.clone()],
        None => default_instances(),
    };
    for problem in &instances {
        problem_suite(&mut report, &mut rng, problem);
        scheme_suite(&mut report, &mut rng, problem, seed);
    }
    flow_order_suite(&mut report);
    report
}
