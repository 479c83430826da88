//! Discrete curve of maximal slope by minimizing movements:
//! `v_{n+1} = argmin Φ(v) + ‖v − v_n‖^p / (p τ^{p−1})`.
//!
//! The movement commutes with scaling, so steps run on the max-abs
//! normalized state and the scale is tracked in log space.

use crate::error::{Error, Result, RunFailure};
use crate::inverse_iteration::{inverse_iteration, IterationOptions, StopReason};
use crate::problems::ProblemInstance;
use crate::solver::{solve_movement, SolverOptions};
use crate::space::{dual_norm, mu_from_lambda, norm, CoeffVec, Exponent};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    /// Step size; `None` selects `0.01 / μ̂` from a short inverse iteration.
    pub tau: Option<f64>,
    /// Final time; `None` runs until the direction settles or `max_steps`.
    pub t_end: Option<f64>,
    pub max_steps: usize,
    /// Relative Rayleigh change per unit of `μ̂·t` regarded as stable.
    pub rtol: f64,
    /// Direction change per unit of `μ̂·t` regarded as stable.
    pub dtol: f64,
    /// Span of `μ̂·t` with stable Rayleigh quotient that ends a run whose
    /// direction keeps moving.
    pub stall_window: usize,
    pub solver: SolverOptions,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tau: None,
            t_end: None,
            max_steps: 200_000,
            rtol: 1e-10,
            dtol: 1e-8,
            stall_window: 20,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRow {
    pub n: usize,
    pub t: f64,
    pub phi: f64,
    pub norm: f64,
    pub rq: f64,
    /// `‖v_n − v_{n−1}‖ / τ`; NaN at `n = 0`.
    pub speed: f64,
    /// `‖∇Φ(v_n)‖_*`.
    pub slope: f64,
    /// `|(Φ_{n−1} − Φ_n)/τ − speed_n^p/p − slope_n^q/q|`; NaN at `n = 0`.
    pub energy_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub exponent: Exponent,
    pub tau: f64,
    pub rows: Vec<FlowRow>,
    /// Max-abs normalized states.
    pub directions: Vec<CoeffVec>,
    pub log_scales: Vec<f64>,
    pub stop: Option<StopReason>,
}

impl FlowTrace {
    pub fn state(&self, n: usize) -> CoeffVec {
        self.directions[n].scaled(self.log_scales[n].exp())
    }

    pub fn lambda_hat(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.rq)
    }

    pub fn mu_hat(&self) -> f64 {
        mu_from_lambda(self.lambda_hat(), self.exponent).unwrap_or(f64::NAN)
    }
}

/// `μ̂` after five inverse-iteration steps from `u0`.
pub fn rough_mu(problem: &ProblemInstance, u0: &CoeffVec) -> Result<f64> {
    let opts = IterationOptions { max_iters: 5, ..IterationOptions::default() };
    let trace = inverse_iteration(problem, u0, &opts).map_err(|f| f.error)?;
    let mu = trace.mu_hat();
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Degenerate("could not estimate the step-size scale"));
    }
    Ok(mu)
}

/// Runs minimizing movements from `v0`.
pub fn minimizing_movements(
    problem: &ProblemInstance,
    v0: &CoeffVec,
    opts: &FlowOptions,
) -> std::result::Result<FlowTrace, RunFailure<FlowTrace>> {
    let exponent = problem.exponent();
    let (p, q) = (exponent.p(), exponent.q());
    let space = problem.space();
    let mut trace = FlowTrace {
        exponent,
        tau: f64::NAN,
        rows: Vec::new(),
        directions: Vec::new(),
        log_scales: Vec::new(),
        stop: None,
    };
    let fail = |trace: FlowTrace, error: Error| RunFailure { trace, error };

    let n0 = match norm(space, v0) {
        Ok(v) => v,
        Err(e) => return Err(fail(trace, e)),
    };
    if v0.is_zero() {
        return Ok(zero_trajectory(trace, v0.len(), opts));
    }
    if n0 == 0.0 {
        return Err(fail(trace, Error::Degenerate("initial vector has zero norm")));
    }
    let tau = match opts.tau {
        Some(t) if t.is_finite() && t > 0.0 => t,
        Some(t) => return Err(fail(trace, Error::config("tau", format!("must be positive, got {t}")))),
        None => match rough_mu(problem, v0) {
            Ok(mu) => 0.01 / mu,
            Err(e) => return Err(fail(trace, e)),
        },
    };
    if let Some(t) = opts.t_end {
        if !(t.is_finite() && t > 0.0) {
            return Err(fail(trace, Error::config("t_end", format!("must be positive, got {t}"))));
        }
    }
    if !(opts.rtol > 0.0 && opts.dtol > 0.0) {
        return Err(fail(trace, Error::config("rtol", "tolerances must be positive")));
    }
    trace.tau = tau;

    let measure = |v: &CoeffVec| -> (f64, f64, f64) {
        let vn = norm(space, v).expect("dimension checked");
        let phi = problem.value_raw(v);
        let slope = dual_norm(space, &problem.phi_gradient(v).expect("dimension checked")).expect("dimension checked");
        (vn, phi, slope)
    };

    let m0 = v0.max_abs();
    let mut g = v0.scaled(1.0 / m0);
    let mut log_scale = m0.ln();
    let (vn, phi_g, slope_g) = measure(&g);
    let mut phi_prev = (p * log_scale).exp() * phi_g;
    trace.rows.push(FlowRow {
        n: 0,
        t: 0.0,
        phi: phi_prev,
        norm: n0,
        rq: p * phi_g / vn.powf(p),
        speed: f64::NAN,
        slope: (log_scale * (p - 1.0)).exp() * slope_g,
        energy_residual: f64::NAN,
    });
    trace.directions.push(g.clone());
    trace.log_scales.push(log_scale);

    let mut unit_prev = g.scaled(1.0 / vn).sign_normalized();
    let mut stable_run = 0;
    let log_floor = 1e-300_f64.ln();

    for step in 1..=opts.max_steps {
        let report = match solve_movement(problem, &g, tau, &opts.solver) {
            Ok(r) => r,
            Err(e) => return Err(fail(trace, e)),
        };
        if !report.converged {
            let error = Error::InnerSolve { step, residual: report.grad_dual_norm, iters: report.iters };
            return Err(fail(trace, error));
        }
        let w = report.minimizer;
        let scale = log_scale.exp();
        let speed = scale * norm(space, &w.add_scaled(-1.0, &g)).expect("dimension checked") / tau;
        let m = w.max_abs();
        let t = step as f64 * tau;
        if m == 0.0 {
            trace.stop = Some(StopReason::CollapsedToZero);
            return Ok(trace);
        }
        g = w.scaled(1.0 / m);
        log_scale += m.ln();
        let (vn, phi_g, slope_g) = measure(&g);
        let phi = (p * log_scale).exp() * phi_g;
        let slope = (log_scale * (p - 1.0)).exp() * slope_g;
        let rq = p * phi_g / vn.powf(p);
        let prev_rq = trace.rows.last().expect("row 0 present").rq;
        let energy_residual = ((phi_prev - phi) / tau - speed.powf(p) / p - slope.powf(q) / q).abs();
        phi_prev = phi;
        let log_norm = log_scale + vn.ln();
        trace.rows.push(FlowRow {
            n: step,
            t,
            phi,
            norm: log_norm.exp(),
            rq,
            speed,
            slope,
            energy_residual,
        });
        trace.directions.push(g.clone());
        trace.log_scales.push(log_scale);

        if log_norm < log_floor {
            trace.stop = Some(StopReason::CollapsedToZero);
            return Ok(trace);
        }
        let unit = g.scaled(1.0 / vn).sign_normalized();
        let drift = norm(space, &unit.add_scaled(-1.0, &unit_prev)).expect("dimension checked");
        unit_prev = unit;
        // tolerances are per unit of μ̂·t so the stopping point does not move with τ
        let rate = mu_from_lambda(rq, trace.exponent).map_or(1.0, |mu| (mu * tau).min(1.0));
        let rq_stable = (rq - prev_rq).abs() <= opts.rtol * rq * rate;
        stable_run = if rq_stable { stable_run + 1 } else { 0 };

        let reached_end = opts.t_end.is_some_and(|te| t >= te * (1.0 - 1e-12));
        let stall_steps = (opts.stall_window as f64 / rate).ceil() as usize;
        let stop = if opts.t_end.is_none() && rq_stable && drift <= opts.dtol * rate {
            Some(StopReason::DirectionStable)
        } else if opts.t_end.is_none() && stable_run >= stall_steps {
            Some(StopReason::RQStable)
        } else if reached_end || step == opts.max_steps {
            Some(StopReason::MaxIters)
        } else {
            None
        };
        if stop.is_some() {
            trace.stop = stop;
            return Ok(trace);
        }
    }
    trace.stop = Some(StopReason::MaxIters);
    Ok(trace)
}

/// `0` is a fixed point of every movement step. Steps are recorded only when
/// both `tau` and `t_end` are given.
fn zero_trajectory(mut trace: FlowTrace, dim: usize, opts: &FlowOptions) -> FlowTrace {
    trace.tau = opts.tau.unwrap_or(f64::NAN);
    let steps = match (opts.tau, opts.t_end) {
        (Some(tau), Some(t_end)) if tau > 0.0 && t_end > 0.0 => {
            ((t_end / tau).round() as usize).clamp(1, opts.max_steps.max(1))
        }
        _ => 0,
    };
    for n in 0..=steps {
        let moving = if n == 0 { f64::NAN } else { 0.0 };
        trace.rows.push(FlowRow {
            n,
            t: n as f64 * trace.tau,
            phi: 0.0,
            norm: 0.0,
            rq: f64::NAN,
            speed: moving,
            slope: 0.0,
            energy_residual: moving,
        });
        trace.directions.push(CoeffVec::zeros(dim));
        trace.log_scales.push(f64::NEG_INFINITY);
    }
    trace.stop = Some(StopReason::CollapsedToZero);
    trace
}

/// `e^{μ̂ t_N} v_N`, evaluated in log space.
pub fn flow_limit(trace: &FlowTrace) -> CoeffVec {
    let n = trace.rows.len() - 1;
    if trace.directions[n].is_zero() {
        return trace.directions[n].clone();
    }
    let log = trace.mu_hat() * trace.rows[n].t + trace.log_scales[n];
    trace.directions[n].scaled(log.exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSummary {
    pub lambda_hat: f64,
    pub mu_hat: f64,
    /// `e^{μ̂ t_N} v_N`, sign-normalized.
    pub limit_vec: CoeffVec,
    pub steps: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl FlowSummary {
    pub fn from_trace(trace: &FlowTrace) -> Self {
        let stop_reason = trace.stop.unwrap_or(StopReason::MaxIters);
        Self {
            lambda_hat: trace.lambda_hat(),
            mu_hat: trace.mu_hat(),
            limit_vec: flow_limit(trace).sign_normalized(),
            steps: trace.rows.len() - 1,
            converged: matches!(stop_reason, StopReason::DirectionStable | StopReason::RQStable),
            stop_reason,
        }
    }
}

/// `|∂Φ|(u) = ‖∇Φ(u)‖_*`; the discrete energies are differentiable, so the
/// subgradient is unique.
pub fn local_slope(problem: &ProblemInstance, u: &CoeffVec) -> Result<f64> {
    dual_norm(problem.space(), &problem.phi_gradient(u)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayViolation {
    pub n: usize,
    pub t: f64,
    pub phi: f64,
    pub bound: f64,
}

/// Steps where `Φ(v_n)` exceeds `e^{−pμ t_n} Φ(v_0)`. The implicit scheme
/// contracts by `(1 + μτ)^{−p}` per step on a ground-state ray, which exceeds
/// the exponential by at most `exp(pμ²τ t/2)`; that factor is allowed.
/// `mu` defaults to the terminal estimate `μ̂`.
pub fn check_decay(trace: &FlowTrace, mu: Option<f64>) -> Vec<DecayViolation> {
    let mu = mu.unwrap_or_else(|| trace.mu_hat());
    let p = trace.exponent.p();
    let phi0 = trace.rows[0].phi;
    trace
        .rows
        .iter()
        .filter_map(|r| {
            let discrete = (p * mu * mu * trace.tau * r.t / 2.0).exp();
            let bound = (-p * mu * r.t).exp() * phi0 * discrete * (1.0 + 1e-9);
            (r.phi > bound).then_some(DecayViolation { n: r.n, t: r.t, phi: r.phi, bound })
        })
        .collect()
}
