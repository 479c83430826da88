//! Reference values computed without the iterative schemes.
//!
//! * [`symmetric_eigs`]: cyclic Jacobi for small dense symmetric matrices.
//! * [`hilbert_closed_form`]: iterates and flows of `½ uᵀAu` in its eigenbasis.
//! * [`direct_rayleigh_min`]: global minimization of the Rayleigh quotient on
//!   the unit sphere by spectral projected gradient with random restarts, or
//!   an exact formula where one is available.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::problems::{ProblemInstance, ProblemKind};
use crate::space::{dual_norm, duality_map, norm, optimal_shift, CoeffVec, SpaceKind};

/// Largest matrix accepted by [`symmetric_eigs`].
pub const MAX_EIG_DIM: usize = 512;

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Eigen-decomposition of the row-major symmetric `n × n` matrix `a`.
pub fn symmetric_eigs(a: &[f64], n: usize) -> Result<Eigen> {
    if n == 0 || n > MAX_EIG_DIM {
        return Err(Error::Usage(format!("matrix dimension must be in 1..={MAX_EIG_DIM}, got {n}")));
    }
    Error::check_dim(n * n, a.len())?;
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * scale {
                return Err(Error::Usage("matrix is not symmetric".into()));
            }
        }
    }
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i * n + j].powi(2)).sum();
        if off <= (f64::EPSILON * scale).powi(2) * 1e-4 {
            break;
        }
        for pi in 0..n {
            for qi in pi + 1..n {
                let apq = m[pi * n + qi];
                if apq == 0.0 {
                    continue;
                }
                let app = m[pi * n + pi];
                let aqq = m[qi * n + qi];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + pi];
                    let mkq = m[k * n + qi];
                    m[k * n + pi] = c * mkp - s * mkq;
                    m[k * n + qi] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[pi * n + k];
                    let mqk = m[qi * n + k];
                    m[pi * n + k] = c * mpk - s * mqk;
                    m[qi * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + pi];
                    let vkq = v[k * n + qi];
                    v[k * n + pi] = c * vkp - s * vkq;
                    v[k * n + qi] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order.iter().map(|&j| (0..n).map(|k| v[k * n + j]).collect()).collect();
    Ok(Eigen { values, vectors })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HilbertPoint {
    /// Inverse-iteration step `k`: coefficients `a_j σ_j^{−k}`.
    Step(u32),
    /// Flow time `t`: coefficients `a_j e^{−σ_j t}`.
    Time(f64),
}

/// Eigen-coefficients of the exact iterate or flow state for `½ uᵀAu`.
pub fn hilbert_closed_form(sigmas: &[f64], coeffs: &[f64], at: HilbertPoint) -> Result<Vec<f64>> {
    Error::check_dim(sigmas.len(), coeffs.len())?;
    if sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::Domain("eigenvalues must be positive".into()));
    }
    Ok(sigmas
        .iter()
        .zip(coeffs)
        .map(|(&s, &a)| match at {
            HilbertPoint::Step(k) => a * s.powi(-(k as i32)),
            HilbertPoint::Time(t) => a * (-s * t).exp(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    /// Exact formula or dense eigensolver.
    ClosedForm,
    /// Spectral projected gradient on the unit sphere.
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub lambda: f64,
    /// Unit-norm minimizer with its largest entry positive.
    pub minimizer: CoeffVec,
    /// `‖∇Φ(u) − λ J_p(u)‖_* / ‖∇Φ(u)‖_*` at the minimizer.
    pub certificate: f64,
    pub method: OracleMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    /// Target for the certificate.
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { seed: 0x5EED, restarts: 16, max_iters: 20_000, tol: 1e-10 }
    }
}

/// Relative residual of the eigen-relation `∇Φ(u) = λ J_p(u)`.
pub fn eigen_residual(problem: &ProblemInstance, u: &CoeffVec, lambda: f64) -> Result<f64> {
    let space = problem.space();
    let g = problem.phi_gradient(u)?;
    let j = duality_map(space, u)?;
    let gn = dual_norm(space, &g)?;
    if gn == 0.0 {
        return Err(Error::Degenerate("gradient vanishes"));
    }
    Ok(dual_norm(space, &g.add_scaled(-lambda, &j))? / gn)
}

/// Least Rayleigh quotient of `problem`, computed independently of the
/// inverse iteration and the flow.
pub fn direct_rayleigh_min(problem: &ProblemInstance, opts: &OracleOptions) -> Result<OracleResult> {
    match problem.kind() {
        ProblemKind::MatrixQuadratic => matrix_min(problem),
        ProblemKind::SupDirichlet1D => sup_tent_min(problem),
        _ => spg_min(problem, opts),
    }
}

fn matrix_min(problem: &ProblemInstance) -> Result<OracleResult> {
    let a = problem.matrix().expect("matrix kind");
    let eig = symmetric_eigs(a, problem.dim())?;
    let u = CoeffVec::new(eig.vectors[0].clone())?.sign_normalized();
    let lambda = eig.values[0];
    let certificate = eigen_residual(problem, &u, lambda)?;
    Ok(OracleResult { lambda, minimizer: u, certificate, method: OracleMethod::ClosedForm })
}

/// For the clamped chain in the sup norm, every competitor with peak at
/// node `j` is dominated by the linear tent through `(j, 1)`, whose quotient
/// is `h^{1−p}(j^{1−p} + (n+1−j)^{1−p})`.
fn sup_tent_min(problem: &ProblemInstance) -> Result<OracleResult> {
    let n = problem.dim();
    let p = problem.exponent().p();
    let h = problem.spacing();
    let value = |j: usize| h.powf(1.0 - p) * ((j as f64).powf(1.0 - p) + ((n + 1 - j) as f64).powf(1.0 - p));
    let best = (1..=n).min_by(|&a, &b| value(a).total_cmp(&value(b))).expect("n ≥ 1");
    let tent: Vec<f64> = (1..=n)
        .map(|i| if i <= best { i as f64 / best as f64 } else { (n + 1 - i) as f64 / (n + 1 - best) as f64 })
        .collect();
    Ok(OracleResult {
        lambda: value(best),
        minimizer: CoeffVec::new(tent)?,
        certificate: 0.0,
        method: OracleMethod::ClosedForm,
    })
}

/// Rescales `u` to unit norm; in the quotient case also moves it to its
/// optimal shift.
fn normalize(problem: &ProblemInstance, u: &CoeffVec) -> Option<CoeffVec> {
    let space = problem.space();
    let u = if space.kind() == SpaceKind::QuotientLp {
        u.add_constant(optimal_shift(u, space).ok()?)
    } else {
        u.clone()
    };
    let n = norm(space, &u).ok()?;
    (n > 0.0 && n.is_finite()).then(|| u.scaled(1.0 / n))
}

/// Rayleigh quotient at a unit vector and its coefficient gradient on the
/// sphere, `p·ω·(∇Φ − R J_p)`.
fn quotient_and_gradient(problem: &ProblemInstance, u: &CoeffVec) -> (f64, Vec<f64>) {
    let space = problem.space();
    let p = problem.exponent().p();
    let mut g = vec![0.0; u.len()];
    let r = p * problem.gradient_raw(u, &mut g);
    let j = duality_map(space, u).expect("dimension checked");
    let w = space.pairing_weight();
    for (gi, ji) in g.iter_mut().zip(j.iter()) {
        *gi = p * (*gi - r * w * ji);
    }
    (r, g)
}

fn spg_run(problem: &ProblemInstance, start: CoeffVec, opts: &OracleOptions) -> Option<(f64, CoeffVec)> {
    const MEMORY: usize = 10;
    let mut x = normalize(problem, &start)?;
    let (mut r, mut g) = quotient_and_gradient(problem, &x);
    let mut history = vec![r];
    let mut step = 1.0 / g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    for _ in 0..opts.max_iters {
        if eigen_residual(problem, &x, r).is_ok_and(|c| c <= opts.tol) {
            break;
        }
        let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = x.add_scaled(-alpha, &CoeffVec::from_vec(g.clone()));
            if let Some(xt) = normalize(problem, &trial) {
                let (rt, gt) = quotient_and_gradient(problem, &xt);
                if rt.is_finite() && rt <= reference - 1e-4 * alpha * gg {
                    accepted = Some((xt, rt, gt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xt, rt, gt)) = accepted else { break };
        // Barzilai–Borwein step from the secant pair
        let s: Vec<f64> = xt.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (alpha * 2.0).min(1e12) };
        x = xt;
        r = rt;
        g = gt;
        history.push(r);
        if history.len() > MEMORY {
            history.remove(0);
        }
    }
    Some((r, x))
}

fn spg_min(problem: &ProblemInstance, opts: &OracleOptions) -> Result<OracleResult> {
    let n = problem.dim();
    let mut rng = SplitMix64::seed_from_u64(opts.seed);
    let mut starts = vec![CoeffVec::from_vec(vec![1.0; n])];
    for _ in 0..opts.restarts {
        starts.push(CoeffVec::from_vec((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()));
    }
    let mut best: Option<(f64, CoeffVec)> = None;
    for start in starts {
        if let Some((r, x)) = spg_run(problem, start, opts) {
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, x));
            }
        }
    }
    let (lambda, x) = best.ok_or(Error::Degenerate("no admissible starting vector"))?;
    let minimizer = x.sign_normalized();
    let certificate = eigen_residual(problem, &minimizer, lambda)?;
    Ok(OracleResult { lambda, minimizer, certificate, method: OracleMethod::ProjectedGradient })
}
