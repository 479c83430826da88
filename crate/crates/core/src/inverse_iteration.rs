//! Nonlinear inverse iteration `∇Φ(u_k) = J_p(u_{k−1})`.
//!
//! Both sides are `(p−1)`-homogeneous, so the loop runs on the max-abs
//! normalized direction and carries the scale separately in log space. The
//! actual iterate is `u_k = exp(log_scale_k)·v_k`.

use crate::error::{Error, Result, RunFailure};
use crate::problems::ProblemInstance;
use crate::solver::{solve_tilted, SolverOptions};
use crate::space::{duality_map, mu_from_lambda, norm, CoeffVec, Exponent};

#[derive(Debug, Clone, PartialEq)]
pub struct IterationOptions {
    pub max_iters: usize,
    /// Relative change of the Rayleigh quotient regarded as stable.
    pub rtol: f64,
    /// Change of the unit direction regarded as stable.
    pub dtol: f64,
    /// Consecutive steps of stable Rayleigh quotient that end a run whose
    /// direction keeps moving.
    pub stall_window: usize,
    /// Known least Rayleigh quotient. A run that settles strictly above it is
    /// classified as collapsed: its ground-state component vanishes.
    pub reference_lambda: Option<f64>,
    pub solver: SolverOptions,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            rtol: 1e-10,
            dtol: 1e-8,
            stall_window: 20,
            reference_lambda: None,
            solver: SolverOptions::default(),
        }
    }
}

impl IterationOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::config("max_iters", "must be at least 1"));
        }
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(Error::config("rtol", "must be positive"));
        }
        if !(self.dtol > 0.0 && self.dtol.is_finite()) {
            return Err(Error::config("dtol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    DirectionStable,
    RQStable,
    MaxIters,
    CollapsedToZero,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::DirectionStable => "direction_stable",
            StopReason::RQStable => "rq_stable",
            StopReason::MaxIters => "max_iters",
            StopReason::CollapsedToZero => "collapsed_to_zero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRow {
    pub k: usize,
    pub norm: f64,
    pub phi: f64,
    pub rq: f64,
    /// `‖u_{k−1}‖ / ‖u_k‖`; NaN at `k = 0`.
    pub ratio: f64,
    pub inner_iters: usize,
    /// Dual-norm residual reported by the inner solve.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub exponent: Exponent,
    pub rows: Vec<IterationRow>,
    /// Max-abs normalized iterates `v_k`.
    pub directions: Vec<CoeffVec>,
    /// `ln` of the scale with `u_k = exp(log_scales[k])·v_k`.
    pub log_scales: Vec<f64>,
    pub stop: Option<StopReason>,
}

impl IterationTrace {
    fn new(exponent: Exponent) -> Self {
        Self { exponent, rows: Vec::new(), directions: Vec::new(), log_scales: Vec::new(), stop: None }
    }

    /// The iterate `u_k`. Entries underflow to zero once `‖u_k‖` leaves the
    /// range of `f64`.
    pub fn iterate(&self, k: usize) -> CoeffVec {
        self.directions[k].scaled(self.log_scales[k].exp())
    }

    pub fn last_k(&self) -> usize {
        self.rows.len() - 1
    }

    /// Terminal Rayleigh quotient.
    pub fn lambda_hat(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.rq)
    }

    pub fn mu_hat(&self) -> f64 {
        mu_from_lambda(self.lambda_hat(), self.exponent).unwrap_or(f64::NAN)
    }

    /// Terminal direction, sign-normalized.
    pub fn direction(&self) -> CoeffVec {
        self.directions.last().expect("non-empty trace").sign_normalized()
    }
}

/// Runs inverse iteration from `u0`.
pub fn inverse_iteration(
    problem: &ProblemInstance,
    u0: &CoeffVec,
    opts: &IterationOptions,
) -> std::result::Result<IterationTrace, RunFailure<IterationTrace>> {
    let p = problem.exponent().p();
    let mut trace = IterationTrace::new(problem.exponent());
    let fail = |trace: IterationTrace, error: Error| RunFailure { trace, error };
    if let Err(e) = opts.validate() {
        return Err(fail(trace, e));
    }
    let space = problem.space();
    let n0 = match norm(space, u0) {
        Ok(v) => v,
        Err(e) => return Err(fail(trace, e)),
    };
    if n0 == 0.0 {
        return Err(fail(trace, Error::Degenerate("initial vector has zero norm")));
    }

    let m0 = u0.max_abs();
    let mut v = u0.scaled(1.0 / m0);
    let mut log_scale = m0.ln();
    let vn = norm(space, &v).expect("dimension checked");
    let mut log_norm = log_scale + vn.ln();
    let phi_v = problem.value_raw(&v);
    trace.rows.push(IterationRow {
        k: 0,
        norm: n0,
        phi: (p * log_scale).exp() * phi_v,
        rq: p * phi_v / vn.powf(p),
        ratio: f64::NAN,
        inner_iters: 0,
        residual: 0.0,
    });
    trace.directions.push(v.clone());
    trace.log_scales.push(log_scale);

    let mut unit_prev = v.scaled(1.0 / vn).sign_normalized();
    let mut stable_run = 0;
    let log_floor = 1e-300_f64.ln();

    for k in 1..=opts.max_iters {
        let xi = duality_map(space, &v).expect("dimension checked");
        let solver = opts.solver.clone().warm(v.clone());
        let report = match solve_tilted(problem, &xi, &solver) {
            Ok(r) => r,
            Err(e) => return Err(fail(trace, e)),
        };
        if !report.converged {
            let error = Error::InnerSolve { step: k, residual: report.grad_dual_norm, iters: report.iters };
            return Err(fail(trace, error));
        }
        let w = report.minimizer;
        let wn = norm(space, &w).expect("dimension checked");
        let m = w.max_abs();
        if wn == 0.0 || m == 0.0 {
            trace.stop = Some(StopReason::CollapsedToZero);
            return Ok(trace);
        }
        v = w.scaled(1.0 / m);
        log_scale += m.ln();
        let vn = norm(space, &v).expect("dimension checked");
        let prev_log_norm = log_norm;
        log_norm = log_scale + vn.ln();
        let phi_v = problem.value_raw(&v);
        let rq = p * phi_v / vn.powf(p);
        let prev_rq = trace.rows.last().expect("row 0 present").rq;
        trace.rows.push(IterationRow {
            k,
            norm: log_norm.exp(),
            phi: (p * log_scale).exp() * phi_v,
            rq,
            ratio: (prev_log_norm - log_norm).exp(),
            inner_iters: report.iters,
            residual: report.grad_dual_norm,
        });
        trace.directions.push(v.clone());
        trace.log_scales.push(log_scale);

        if log_norm < log_floor {
            trace.stop = Some(StopReason::CollapsedToZero);
            return Ok(trace);
        }

        let unit = v.scaled(1.0 / vn).sign_normalized();
        let drift = norm(space, &unit.add_scaled(-1.0, &unit_prev)).expect("dimension checked");
        unit_prev = unit;
        let rq_stable = (rq - prev_rq).abs() <= opts.rtol * rq;
        stable_run = if rq_stable { stable_run + 1 } else { 0 };

        let stop = if rq_stable && drift <= opts.dtol {
            Some(StopReason::DirectionStable)
        } else if stable_run >= opts.stall_window {
            Some(StopReason::RQStable)
        } else if k == opts.max_iters {
            Some(StopReason::MaxIters)
        } else {
            None
        };
        if let Some(mut reason) = stop {
            if let Some(reference) = opts.reference_lambda {
                if reason != StopReason::MaxIters && rq > reference * (1.0 + 1e-6) {
                    reason = StopReason::CollapsedToZero;
                }
            }
            trace.stop = Some(reason);
            return Ok(trace);
        }
    }
    unreachable!("loop returns at max_iters")
}

/// `μ̂^K u_K`, evaluated in log space.
pub fn limit_vec(trace: &IterationTrace) -> CoeffVec {
    let k = trace.last_k();
    let log = k as f64 * trace.mu_hat().ln() + trace.log_scales[k];
    trace.directions[k].scaled(log.exp())
}

/// Terminal estimates of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub lambda_hat: f64,
    pub mu_hat: f64,
    /// `μ̂^K u_K`, sign-normalized.
    pub limit_vec: CoeffVec,
    pub iters: usize,
    /// The run settled on a nonzero limit.
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl RunSummary {
    pub fn from_trace(trace: &IterationTrace) -> Self {
        let stop_reason = trace.stop.unwrap_or(StopReason::MaxIters);
        Self {
            lambda_hat: trace.lambda_hat(),
            mu_hat: trace.mu_hat(),
            limit_vec: limit_vec(trace).sign_normalized(),
            iters: trace.last_k(),
            converged: matches!(stop_reason, StopReason::DirectionStable | StopReason::RQStable),
            stop_reason,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneQuantity {
    /// `‖u_k‖ ≤ ‖u_{k−1}‖ / μ`.
    ScaledNorm,
    /// Rayleigh quotient nonincreasing.
    Rayleigh,
    /// `‖u_{k−1}‖ / ‖u_k‖` nonincreasing.
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub k: usize,
    pub quantity: MonotoneQuantity,
    /// Relative excess over the allowed value.
    pub magnitude: f64,
}

const MONOTONE_SLACK: f64 = 1e-8;

/// Checks the three monotonicity properties of an inverse-iteration trace.
/// `mu` defaults to the terminal estimate `μ̂`.
pub fn check_monotonicity(trace: &IterationTrace, mu: Option<f64>) -> Vec<Violation> {
    let mu = mu.unwrap_or_else(|| trace.mu_hat());
    let mut out = Vec::new();
    for pair in trace.rows.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let k = cur.k;
        // ratio ≥ μ is the scaled-norm bound
        let excess = mu / cur.ratio - 1.0;
        if excess > MONOTONE_SLACK {
            out.push(Violation { k, quantity: MonotoneQuantity::ScaledNorm, magnitude: excess });
        }
        let excess = cur.rq / prev.rq - 1.0;
        if excess > MONOTONE_SLACK {
            out.push(Violation { k, quantity: MonotoneQuantity::Rayleigh, magnitude: excess });
        }
        if prev.ratio.is_finite() {
            let excess = cur.ratio / prev.ratio - 1.0;
            if excess > MONOTONE_SLACK {
                out.push(Violation { k, quantity: MonotoneQuantity::Ratio, magnitude: excess });
            }
        }
    }
    out
}
