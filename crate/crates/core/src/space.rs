//! Finite-dimensional normed spaces and their duals.
//!
//! Primal elements are coefficient arrays ([`CoeffVec`]); dual elements are
//! coefficient arrays ([`DualVec`]) acting through the pairing of the space:
//! `Σ h·ξ_i·u_i` for the Lebesgue-type kinds and the plain sum `Σ ξ_i·u_i`
//! for the sup and boundary-trace kinds. With that convention every duality
//! map below has a closed form.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::problems::ProblemInstance;

/// Homogeneity degree `p > 1` together with its Hölder conjugate `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    p: f64,
    q: f64,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::config("p", format!("must satisfy 1 < p < inf, got {p}")));
        }
        Ok(Self { p, q: p / (p - 1.0) })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }
}

/// `|x|^e · sign(x)`, with the value at zero taken to be zero.
#[inline]
pub(crate) fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

macro_rules! coeff_array {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(Vec<f64>);

        impl $name {
            /// Wraps `values`, rejecting non-finite entries.
            pub fn new(values: Vec<f64>) -> Result<Self> {
                if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { index });
                }
                Ok(Self(values))
            }

            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim])
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.0
            }

            pub fn scaled(&self, t: f64) -> Self {
                Self(self.0.iter().map(|v| t * v).collect())
            }

            pub fn max_abs(&self) -> f64 {
                self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }

            pub fn is_zero(&self) -> bool {
                self.0.iter().all(|&v| v == 0.0)
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl TryFrom<Vec<f64>> for $name {
            type Error = Error;

            fn try_from(values: Vec<f64>) -> Result<Self> {
                Self::new(values)
            }
        }
    };
}

coeff_array!(
    /// Coefficients of a primal element.
    CoeffVec
);
coeff_array!(
    /// Coefficients of a dual element, interpreted through the space pairing.
    DualVec
);

impl CoeffVec {
    /// `self + t·other`.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn add_scaled(&self, t: f64, other: &CoeffVec) -> CoeffVec {
        debug_assert_eq!(self.len(), other.len());
        CoeffVec(self.0.iter().zip(other.iter()).map(|(a, b)| a + t * b).collect())
    }

    pub fn add_constant(&self, c: f64) -> CoeffVec {
        CoeffVec(self.0.iter().map(|v| v + c).collect())
    }

    /// Flips the sign so that the entry of largest magnitude (lowest index on
    /// ties) is positive.
    pub fn sign_normalized(&self) -> CoeffVec {
        let mut best = 0.0_f64;
        let mut sign = 1.0;
        for &v in &self.0 {
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
        self.scaled(sign)
    }
}

impl DualVec {
    pub fn sub(&self, other: &DualVec) -> DualVec {
        debug_assert_eq!(self.len(), other.len());
        DualVec(self.0.iter().zip(other.iter()).map(|(a, b)| a - b).collect())
    }

    pub fn add_scaled(&self, t: f64, other: &DualVec) -> DualVec {
        debug_assert_eq!(self.len(), other.len());
        DualVec(self.0.iter().zip(other.iter()).map(|(a, b)| a + t * b).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// `(Σ h|u_i|^p)^{1/p}`.
    WeightedLp,
    /// Weighted `ℓ^p` modulo constants.
    QuotientLp,
    /// `max_i |u_i|`.
    Sup,
    /// `(Σ_{i∈∂} w|u_i|^p)^{1/p}` over a set of boundary indices.
    TraceBoundary,
}

/// A concrete normed space of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceDescriptor {
    kind: SpaceKind,
    dim: usize,
    weight: f64,
    exponent: Exponent,
    boundary: Vec<usize>,
    boundary_weight: f64,
}

impl SpaceDescriptor {
    fn build(kind: SpaceKind, dim: usize, weight: f64, exponent: Exponent) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("n", "space dimension must be at least 1"));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::config("weight", format!("must be positive, got {weight}")));
        }
        Ok(Self { kind, dim, weight, exponent, boundary: Vec::new(), boundary_weight: 1.0 })
    }

    pub fn weighted_lp(dim: usize, h: f64, exponent: Exponent) -> Result<Self> {
        Self::build(SpaceKind::WeightedLp, dim, h, exponent)
    }

    pub fn quotient_lp(dim: usize, h: f64, exponent: Exponent) -> Result<Self> {
        Self::build(SpaceKind::QuotientLp, dim, h, exponent)
    }

    pub fn sup(dim: usize, exponent: Exponent) -> Result<Self> {
        Self::build(SpaceKind::Sup, dim, 1.0, exponent)
    }

    /// Boundary-trace seminorm on the indices in `boundary`. Dual elements
    /// with interior support are measured against the ambient norm with cell
    /// measure `interior_weight`, which keeps solver residuals finite.
    pub fn trace_boundary(
        dim: usize,
        interior_weight: f64,
        boundary: Vec<usize>,
        boundary_weight: f64,
        exponent: Exponent,
    ) -> Result<Self> {
        let mut space = Self::build(SpaceKind::TraceBoundary, dim, interior_weight, exponent)?;
        if boundary.is_empty() || boundary.iter().any(|&i| i >= dim) {
            return Err(Error::config("boundary", "boundary indices must be non-empty and in range"));
        }
        if !(boundary_weight.is_finite() && boundary_weight > 0.0) {
            return Err(Error::config("boundary_weight", "must be positive"));
        }
        space.boundary = boundary;
        space.boundary_weight = boundary_weight;
        Ok(space)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn boundary_weight(&self) -> f64 {
        self.boundary_weight
    }

    /// Weight `ω_i` of the pairing `⟨ξ,u⟩ = Σ ω_i ξ_i u_i`.
    #[inline]
    pub fn pairing_weight(&self) -> f64 {
        match self.kind {
            SpaceKind::WeightedLp | SpaceKind::QuotientLp => self.weight,
            SpaceKind::Sup | SpaceKind::TraceBoundary => 1.0,
        }
    }

    pub(crate) fn check(&self, v: &[f64]) -> Result<()> {
        Error::check_dim(self.dim, v.len())
    }

    fn is_boundary(&self, i: usize) -> bool {
        self.boundary.contains(&i)
    }

    /// Per-index measure used by the (ambient) dual norm of the trace kind.
    fn trace_measure(&self, i: usize) -> f64 {
        if self.is_boundary(i) {
            self.boundary_weight
        } else {
            self.weight
        }
    }

    /// Dual norm of the coefficient array without the zero-mean projection of
    /// the quotient kind. Solvers posed on representatives use this.
    pub(crate) fn ambient_dual_norm(&self, xi: &[f64]) -> f64 {
        let q = self.exponent.q();
        match self.kind {
            SpaceKind::WeightedLp | SpaceKind::QuotientLp => weighted_pnorm(xi, self.weight, q),
            SpaceKind::Sup => xi.iter().map(|v| v.abs()).sum(),
            SpaceKind::TraceBoundary => {
                let m = max_abs(xi);
                if m == 0.0 {
                    return 0.0;
                }
                let s: f64 = xi
                    .iter()
                    .enumerate()
                    .map(|(i, v)| self.trace_measure(i).powf(1.0 - q) * (v.abs() / m).powf(q))
                    .sum();
                m * s.powf(1.0 / q)
            }
        }
    }

    /// Weighted mean `Σ h ξ_i / Σ h`.
    pub(crate) fn weighted_mean(&self, xi: &[f64]) -> f64 {
        xi.iter().sum::<f64>() / xi.len() as f64
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `(Σ w|v_i|^e)^{1/e}`, evaluated with max-abs scaling.
pub(crate) fn weighted_pnorm(v: &[f64], w: f64, e: f64) -> f64 {
    let m = max_abs(v);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(e)).sum();
    m * (w * s).powf(1.0 / e)
}

/// Norm of `u` in `space`.
pub fn norm(space: &SpaceDescriptor, u: &CoeffVec) -> Result<f64> {
    space.check(u)?;
    let p = space.exponent.p();
    Ok(match space.kind {
        SpaceKind::WeightedLp => weighted_pnorm(u, space.weight, p),
        SpaceKind::QuotientLp => {
            let c = optimal_shift(u, space)?;
            let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
            weighted_pnorm(&shifted, space.weight, p)
        }
        SpaceKind::Sup => max_abs(u),
        SpaceKind::TraceBoundary => {
            let b: Vec<f64> = space.boundary.iter().map(|&i| u[i]).collect();
            weighted_pnorm(&b, space.boundary_weight, p)
        }
    })
}

/// Dual norm `sup{⟨ξ,u⟩ : ‖u‖ ≤ 1}` in closed form.
pub fn dual_norm(space: &SpaceDescriptor, xi: &DualVec) -> Result<f64> {
    space.check(xi)?;
    Ok(match space.kind {
        SpaceKind::QuotientLp => {
            let mean = space.weighted_mean(xi);
            let centered: Vec<f64> = xi.iter().map(|v| v - mean).collect();
            weighted_pnorm(&centered, space.weight, space.exponent.q())
        }
        _ => space.ambient_dual_norm(xi),
    })
}

/// The pairing `⟨ξ,u⟩`.
pub fn pairing(space: &SpaceDescriptor, xi: &DualVec, u: &CoeffVec) -> Result<f64> {
    space.check(xi)?;
    space.check(u)?;
    let dot: f64 = xi.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
    Ok(space.pairing_weight() * dot)
}

/// One element of `J_p(u)`: `⟨ξ,u⟩ = ‖u‖^p = ‖ξ‖_*^q`.
///
/// For the sup kind the selection is the point mass at the lowest index
/// attaining `max |u_i|`.
pub fn duality_map(space: &SpaceDescriptor, u: &CoeffVec) -> Result<DualVec> {
    space.check(u)?;
    let e = space.exponent.p() - 1.0;
    let values = match space.kind {
        SpaceKind::WeightedLp => u.iter().map(|&v| signed_pow(v, e)).collect(),
        SpaceKind::QuotientLp => {
            let c = optimal_shift(u, space)?;
            u.iter().map(|&v| signed_pow(v + c, e)).collect()
        }
        SpaceKind::Sup => {
            let mut out = vec![0.0; u.len()];
            let mut best = 0.0_f64;
            let mut arg = None;
            for (i, &v) in u.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    arg = Some(i);
                }
            }
            if let Some(i) = arg {
                out[i] = signed_pow(u[i], e);
            }
            out
        }
        SpaceKind::TraceBoundary => {
            let mut out = vec![0.0; u.len()];
            for &i in &space.boundary {
                out[i] = space.boundary_weight * signed_pow(u[i], e);
            }
            out
        }
    };
    DualVec::new(values)
}

/// `pΦ(u)/‖u‖^p`.
pub fn rayleigh_quotient(problem: &ProblemInstance, u: &CoeffVec) -> Result<f64> {
    let n = norm(problem.space(), u)?;
    if n == 0.0 {
        return Err(Error::Degenerate("Rayleigh quotient of a zero-norm vector"));
    }
    // Homogeneity lets us evaluate on u/‖u‖, which avoids overflow in ‖u‖^p.
    let unit = u.scaled(1.0 / n);
    Ok(problem.exponent().p() * problem.phi_value(&unit)?)
}

/// `μ = λ^{1/(p-1)}`.
pub fn mu_from_lambda(lambda: f64, exponent: Exponent) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(lambda.powf(1.0 / (exponent.p() - 1.0)))
}

/// The unique `c` minimizing `Σ h|u_i + c|^p`, i.e. the root of
/// `Σ h|u_i + c|^{p-2}(u_i + c)`.
pub fn optimal_shift(u: &CoeffVec, space: &SpaceDescriptor) -> Result<f64> {
    if space.kind != SpaceKind::QuotientLp {
        return Err(Error::Usage("optimal_shift requires a quotient space".into()));
    }
    space.check(u)?;
    if u.is_empty() {
        return Ok(0.0);
    }
    let (min, max) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (mut lo, mut hi) = (-max, -min);
    if lo == hi {
        // constant vector (including zero): the shift cancels it exactly
        return Ok(lo);
    }
    let p = space.exponent.p();
    let residual = |c: f64| {
        let mut r = 0.0;
        let mut dr = 0.0;
        let mut mass = 0.0;
        for &v in u.iter() {
            let t = v + c;
            let a = t.abs();
            if a > 0.0 {
                let ap = a.powf(p - 2.0);
                r += ap * t;
                dr += ap;
                mass += ap * a;
            } else if p < 2.0 {
                dr = f64::INFINITY;
            }
        }
        (r, (p - 1.0) * dr, mass)
    };

    let mean = u.iter().sum::<f64>() / u.len() as f64;
    let mut c = (-mean).clamp(lo, hi);
    let mut width = hi - lo;
    for _ in 0..400 {
        let (r, dr, mass) = residual(c);
        if r.abs() <= 1e-15 * mass {
            return Ok(c);
        }
        if r > 0.0 {
            hi = c;
        } else {
            lo = c;
        }
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            return Ok(0.5 * (lo + hi));
        }
        let newton = c - r / dr;
        let step_ok = dr.is_finite() && dr > 0.0 && newton > lo && newton < hi && (newton - c).abs() < 0.5 * width;
        width = hi - lo;
        c = if step_ok { newton } else { 0.5 * (lo + hi) };
    }
    Ok(c)
}

/// Smallest `α ≥ 0` with `α·w` a nearest point to `u` on the ray through `w`.
pub fn ray_projection_alpha(space: &SpaceDescriptor, w: &CoeffVec, u: &CoeffVec) -> Result<f64> {
    let nw = norm(space, w)?;
    if nw == 0.0 {
        return Err(Error::Degenerate("ray direction has zero norm"));
    }
    let nu = norm(space, u)?;
    if nu == 0.0 {
        return Ok(0.0);
    }
    let dist = |beta: f64| norm(space, &u.add_scaled(-beta, w));
    let upper = 2.0 * nu / nw;

    // golden-section search for a minimizer of β ↦ ‖u − βw‖ on [0, upper]
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, upper);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = dist(x1)?;
    let mut f2 = dist(x2)?;
    while b - a > 1e-10 * (1.0 + upper) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = dist(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = dist(x2)?;
        }
    }
    let mut alpha = 0.5 * (a + b);
    if dist(0.0)? <= dist(alpha)? {
        return Ok(0.0);
    }

    match space.kind {
        // Smooth strictly convex norms: the slope β ↦ -⟨J_p(u − βw), w⟩ is
        // monotone, so bisect its sign change around the golden estimate.
        SpaceKind::WeightedLp | SpaceKind::QuotientLp | SpaceKind::TraceBoundary => {
            let slope = |beta: f64| -> Result<f64> {
                let r = u.add_scaled(-beta, w);
                let xi = duality_map(space, &r)?;
                Ok(-pairing(space, &xi, w)?)
            };
            let mut lo = (alpha - 1e-6 * (1.0 + upper)).max(0.0);
            let mut hi = (alpha + 1e-6 * (1.0 + upper)).min(upper);
            if slope(lo)? < 0.0 && slope(hi)? >= 0.0 {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if slope(mid)? < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                alpha = hi;
            }
        }
        // Piecewise-linear distance: walk to the left edge of the flat set.
        SpaceKind::Sup => {
            let best = dist(alpha)?;
            let tol = 8.0 * f64::EPSILON * best.max(nu);
            let (mut lo, mut hi) = (0.0, alpha);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if dist(mid)? <= best + tol {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            alpha = hi;
        }
    }
    Ok(alpha)
}
