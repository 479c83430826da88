//! Concrete p-homogeneous energies paired with a normed space.
//!
//! Apart from the quadratic matrix kind, each energy is assembled as a sum of
//! terms `(c/p)·ψ_ε(|D u|)` with `ψ_ε(r) = (r² + ε²)^{p/2} − ε^p`, where `D`
//! has one or two rows with at most two nonzero entries each. `ε = 0` gives
//! the exact energy. `ε > 0` smooths the kink at zero gradient for `p < 2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::space::{CoeffVec, DualVec, Exponent, SpaceDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    MatrixQuadratic,
    PDirichlet1D,
    PDirichlet2D,
    FractionalSeminorm1D,
    RobinPLaplacian1D,
    NeumannPLaplacian1D,
    SupDirichlet1D,
    SteklovTrace1D,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 8] = [
        ProblemKind::MatrixQuadratic,
        ProblemKind::PDirichlet1D,
        ProblemKind::PDirichlet2D,
        ProblemKind::FractionalSeminorm1D,
        ProblemKind::RobinPLaplacian1D,
        ProblemKind::NeumannPLaplacian1D,
        ProblemKind::SupDirichlet1D,
        ProblemKind::SteklovTrace1D,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::MatrixQuadratic => "matrix",
            ProblemKind::PDirichlet1D => "pdirichlet1d",
            ProblemKind::PDirichlet2D => "pdirichlet2d",
            ProblemKind::FractionalSeminorm1D => "fractional1d",
            ProblemKind::RobinPLaplacian1D => "robin1d",
            ProblemKind::NeumannPLaplacian1D => "neumann1d",
            ProblemKind::SupDirichlet1D => "supdirichlet1d",
            ProblemKind::SteklovTrace1D => "steklov1d",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Construction parameters. Fields irrelevant to a kind are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub p: f64,
    /// Grid size per axis, or the matrix dimension.
    pub n: usize,
    pub length: f64,
    /// Fractional order in `(0, 1)`.
    pub s: f64,
    /// Robin coefficient, `> 0`.
    pub beta: f64,
    /// Smoothing parameter; `None` selects `1e-10` for `p < 2` and `0` otherwise.
    pub epsilon: Option<f64>,
    /// Row-major symmetric positive definite matrix for the quadratic kind.
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, p: f64, n: usize) -> Self {
        Self { kind, p, n, length: 1.0, s: 0.5, beta: 1.0, epsilon: None, matrix: None }
    }

    pub fn matrix(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        Self { matrix: Some(rows), ..Self::new(ProblemKind::MatrixQuadratic, 2.0, n) }
    }

    /// Representative desk-scale instance of `kind`, at most 64 unknowns.
    /// The quadratic kind ignores `p` and uses a fixed tridiagonal matrix.
    pub fn standard(kind: ProblemKind, p: f64) -> Self {
        match kind {
            ProblemKind::MatrixQuadratic => {
                Self::matrix(vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]])
            }
            ProblemKind::PDirichlet2D => Self::new(kind, p, 7),
            ProblemKind::RobinPLaplacian1D | ProblemKind::NeumannPLaplacian1D | ProblemKind::SteklovTrace1D => {
                Self::new(kind, p, 32)
            }
            _ => Self::new(kind, p, 31),
        }
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        ProblemInstance::new(self)
    }
}

/// Linear functional with at most two nonzero coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Stencil {
    idx: [usize; 2],
    val: [f64; 2],
    len: u8,
}

impl Stencil {
    fn point(i: usize) -> Self {
        Self { idx: [i, 0], val: [1.0, 0.0], len: 1 }
    }

    /// `u_j - u_i`, with `None` standing for a clamped zero value.
    fn diff(j: Option<usize>, i: Option<usize>) -> Option<Self> {
        match (j, i) {
            (Some(j), Some(i)) => Some(Self { idx: [j, i], val: [1.0, -1.0], len: 2 }),
            (Some(j), None) => Some(Self::point(j)),
            (None, Some(i)) => Some(Self { idx: [i, 0], val: [-1.0, 0.0], len: 1 }),
            (None, None) => None,
        }
    }

    #[inline]
    fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len as usize).map(|k| (self.idx[k], self.val[k]))
    }

    #[inline]
    fn apply(&self, u: &[f64]) -> f64 {
        self.entries().map(|(i, v)| v * u[i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Term {
    coeff: f64,
    rows: [Stencil; 2],
    nrows: u8,
}

impl Term {
    fn single(coeff: f64, row: Stencil) -> Self {
        Self { coeff, rows: [row, row], nrows: 1 }
    }

    fn pair(coeff: f64, a: Stencil, b: Stencil) -> Self {
        Self { coeff, rows: [a, b], nrows: 2 }
    }

    #[inline]
    fn rows(&self) -> &[Stencil] {
        &self.rows[..self.nrows as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Energy {
    /// `½ uᵀ A u`, row-major dense.
    Quadratic { a: Vec<f64> },
    Terms { terms: Vec<Term>, eps: f64 },
}

/// An energy `Φ` together with its space; immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    spec: ProblemSpec,
    space: SpaceDescriptor,
    energy: Energy,
    bandwidth: usize,
    spacing: f64,
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

impl ProblemInstance {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        let exponent = Exponent::new(spec.p)?;
        let p = spec.p;
        positive("length", spec.length)?;
        let eps = spec.epsilon.unwrap_or(if p < 2.0 { 1e-10 } else { 0.0 });
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::config("epsilon", format!("must be non-negative, got {eps}")));
        }
        let min_n = match spec.kind {
            ProblemKind::RobinPLaplacian1D | ProblemKind::NeumannPLaplacian1D | ProblemKind::SteklovTrace1D => 2,
            _ => 1,
        };
        if spec.kind != ProblemKind::MatrixQuadratic && spec.n < min_n {
            return Err(Error::config("n", format!("must be at least {min_n}")));
        }
        let n = spec.n;
        let len = spec.length;

        let (space, energy, bandwidth, spacing) = match spec.kind {
            ProblemKind::MatrixQuadratic => {
                if p != 2.0 {
                    return Err(Error::config("p", "the matrix kind requires p = 2"));
                }
                let rows = spec.matrix.as_ref().ok_or_else(|| Error::config("matrix", "missing"))?;
                let a = validate_matrix(rows)?;
                let dim = rows.len();
                (SpaceDescriptor::weighted_lp(dim, 1.0, exponent)?, Energy::Quadratic { a }, dim - 1, 1.0)
            }
            ProblemKind::PDirichlet1D | ProblemKind::SupDirichlet1D => {
                let h = len / (n + 1) as f64;
                let terms = chain_terms(n, h.powf(1.0 - p), true);
                let space = if spec.kind == ProblemKind::SupDirichlet1D {
                    SpaceDescriptor::sup(n, exponent)?
                } else {
                    SpaceDescriptor::weighted_lp(n, h, exponent)?
                };
                (space, Energy::Terms { terms, eps }, 1, h)
            }
            ProblemKind::PDirichlet2D => {
                let h = len / (n + 1) as f64;
                let c = h.powf(2.0 - p);
                // padded node (a, b) in 0..=n+1; interior index (a-1) + n(b-1)
                let node = |a: usize, b: usize| {
                    (a >= 1 && a <= n && b >= 1 && b <= n).then(|| (a - 1) + n * (b - 1))
                };
                let mut terms = Vec::with_capacity((n + 1) * (n + 1));
                for b in 0..=n {
                    for a in 0..=n {
                        let here = node(a, b);
                        let dx = Stencil::diff(node(a + 1, b), here);
                        let dy = Stencil::diff(node(a, b + 1), here);
                        match (dx, dy) {
                            (Some(x), Some(y)) => terms.push(Term::pair(c, x, y)),
                            (Some(x), None) | (None, Some(x)) => terms.push(Term::single(c, x)),
                            (None, None) => {}
                        }
                    }
                }
                (SpaceDescriptor::weighted_lp(n * n, h * h, exponent)?, Energy::Terms { terms, eps }, n, h)
            }
            ProblemKind::FractionalSeminorm1D => {
                let s = spec.s;
                if !(s > 0.0 && s < 1.0) {
                    return Err(Error::config("s", format!("must lie in (0, 1), got {s}")));
                }
                let h = len / (n + 1) as f64;
                let kernel = |d: usize| 2.0 * h * h * (d as f64 * h).powf(-(1.0 + p * s));
                let mut terms = Vec::with_capacity(n * (n + 1) / 2);
                for i in 0..n {
                    for j in i + 1..n {
                        terms.push(Term::single(kernel(j - i), Stencil::diff(Some(j), Some(i)).unwrap()));
                    }
                }
                // exterior collar: n zero nodes on each side of the interval
                let ni = n as i64;
                for i in 0..n {
                    let xi = i as i64 + 1;
                    let mut c = 0.0;
                    for xj in (-ni + 1..=0).chain(ni + 1..=2 * ni) {
                        c += kernel((xi - xj).unsigned_abs() as usize);
                    }
                    terms.push(Term::single(c, Stencil::point(i)));
                }
                (SpaceDescriptor::weighted_lp(n, h, exponent)?, Energy::Terms { terms, eps }, n - 1, h)
            }
            ProblemKind::RobinPLaplacian1D => {
                positive("beta", spec.beta)?;
                let h = len / (n - 1) as f64;
                let mut terms = chain_terms(n, h.powf(1.0 - p), false);
                terms.push(Term::single(spec.beta, Stencil::point(0)));
                terms.push(Term::single(spec.beta, Stencil::point(n - 1)));
                (SpaceDescriptor::weighted_lp(n, h, exponent)?, Energy::Terms { terms, eps }, 1, h)
            }
            ProblemKind::NeumannPLaplacian1D => {
                let h = len / (n - 1) as f64;
                let terms = chain_terms(n, h.powf(1.0 - p), false);
                (SpaceDescriptor::quotient_lp(n, h, exponent)?, Energy::Terms { terms, eps }, 1, h)
            }
            ProblemKind::SteklovTrace1D => {
                let h = len / (n - 1) as f64;
                let mut terms = chain_terms(n, h.powf(1.0 - p), false);
                terms.extend((0..n).map(|i| Term::single(h, Stencil::point(i))));
                let space = SpaceDescriptor::trace_boundary(n, h, vec![0, n - 1], 1.0, exponent)?;
                (space, Energy::Terms { terms, eps }, 1, h)
            }
        };

        Ok(Self { spec: spec.clone(), space, energy, bandwidth, spacing })
    }

    pub fn kind(&self) -> ProblemKind {
        self.spec.kind
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn exponent(&self) -> Exponent {
        self.space.exponent()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Grid spacing (1 for the matrix kind).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn epsilon(&self) -> f64 {
        match &self.energy {
            Energy::Quadratic { .. } => 0.0,
            Energy::Terms { eps, .. } => *eps,
        }
    }

    /// Half-bandwidth of the Hessian in coefficient order.
    pub(crate) fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Dense row-major matrix of the quadratic kind.
    pub fn matrix(&self) -> Option<&[f64]> {
        match &self.energy {
            Energy::Quadratic { a } => Some(a),
            Energy::Terms { .. } => None,
        }
    }

    /// Default starting vector: a positive bump for the Dirichlet-type kinds,
    /// `x − L/2` for the Neumann kind and all ones otherwise.
    pub fn default_initial(&self) -> CoeffVec {
        let n = self.spec.n;
        let len = self.spec.length;
        let h = self.spacing;
        let bump = |i: usize| (PI * (i + 1) as f64 * h / len).sin();
        let v = match self.spec.kind {
            ProblemKind::PDirichlet1D | ProblemKind::SupDirichlet1D | ProblemKind::FractionalSeminorm1D => {
                (0..n).map(bump).collect()
            }
            ProblemKind::PDirichlet2D => {
                (0..n * n).map(|k| bump(k % n) * bump(k / n)).collect()
            }
            ProblemKind::NeumannPLaplacian1D => (0..n).map(|i| i as f64 * h - len / 2.0).collect(),
            _ => vec![1.0; self.dim()],
        };
        CoeffVec::from_vec(v)
    }

    /// `Φ(u)`.
    pub fn phi_value(&self, u: &CoeffVec) -> Result<f64> {
        self.space.check(u)?;
        Ok(self.value_raw(u))
    }

    /// `∇Φ(u)` as a dual element, so that `⟨∇Φ(u), v⟩` is the directional
    /// derivative along `v`.
    pub fn phi_gradient(&self, u: &CoeffVec) -> Result<DualVec> {
        self.space.check(u)?;
        let mut g = vec![0.0; u.len()];
        self.gradient_raw(u, &mut g);
        let w = self.space.pairing_weight();
        for v in &mut g {
            *v /= w;
        }
        DualVec::new(g)
    }

    /// `|pΦ(u) − ⟨∇Φ(u), u⟩| / max(1, pΦ(u))`. Zero up to rounding when the
    /// energy is unsmoothed, since Φ is `p`-homogeneous.
    pub fn euler_identity_residual(&self, u: &CoeffVec) -> Result<f64> {
        let p_phi = self.exponent().p() * self.phi_value(u)?;
        let g = self.phi_gradient(u)?;
        let pair = crate::space::pairing(&self.space, &g, u)?;
        Ok((p_phi - pair).abs() / p_phi.max(1.0))
    }

    pub(crate) fn value_raw(&self, u: &[f64]) -> f64 {
        let p = self.exponent().p();
        match &self.energy {
            Energy::Quadratic { a } => 0.5 * quad_form(a, u),
            Energy::Terms { terms, eps } => {
                let e2 = eps * eps;
                let ep = eps.powf(p);
                let mut total = 0.0;
                for t in terms {
                    let r2 = t.rows().iter().map(|r| r.apply(u).powi(2)).sum::<f64>();
                    total += t.coeff * ((r2 + e2).powf(0.5 * p) - ep);
                }
                total / p
            }
        }
    }

    /// Partial derivatives `∂Φ/∂u_i` into `g`; returns `Φ(u)`.
    pub(crate) fn gradient_raw(&self, u: &[f64], g: &mut [f64]) -> f64 {
        g.fill(0.0);
        let p = self.exponent().p();
        match &self.energy {
            Energy::Quadratic { a } => {
                let n = u.len();
                for i in 0..n {
                    g[i] = (0..n).map(|j| a[i * n + j] * u[j]).sum();
                }
                0.5 * g.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
            }
            Energy::Terms { terms, eps } => {
                let e2 = eps * eps;
                let ep = eps.powf(p);
                let mut total = 0.0;
                for t in terms {
                    let rows = t.rows();
                    let d = [rows[0].apply(u), rows.get(1).map_or(0.0, |r| r.apply(u))];
                    let s = d[0] * d[0] + d[1] * d[1] + e2;
                    if s == 0.0 {
                        continue;
                    }
                    let sp = s.powf(0.5 * p - 1.0);
                    total += t.coeff * (sp * s - ep);
                    for (r, dr) in rows.iter().zip(d) {
                        let f = t.coeff * sp * dr;
                        for (i, v) in r.entries() {
                            g[i] += f * v;
                        }
                    }
                }
                total / p
            }
        }
    }

    /// Adds the Hessian of `Φ` at `u` into `hess`. Curvature weights
    /// `s^{(p-2)/2}` are evaluated with `s ≥ floor` so the result stays finite.
    pub(crate) fn hessian_raw(&self, u: &[f64], floor: f64, hess: &mut BandMatrix) {
        let p = self.exponent().p();
        match &self.energy {
            Energy::Quadratic { a } => {
                let n = u.len();
                for i in 0..n {
                    for j in 0..=i {
                        hess.add(i, j, a[i * n + j]);
                    }
                }
            }
            Energy::Terms { terms, eps } => {
                let e2 = eps * eps;
                for t in terms {
                    let rows = t.rows();
                    let d = [rows[0].apply(u), rows.get(1).map_or(0.0, |r| r.apply(u))];
                    let s = (d[0] * d[0] + d[1] * d[1] + e2).max(floor);
                    let a = t.coeff * s.powf(0.5 * p - 1.0);
                    let b = t.coeff * (p - 2.0) * s.powf(0.5 * p - 2.0);
                    // a·Σ_r ∇d_r ∇d_rᵀ + b·(Σ d_r ∇d_r)(Σ d_r ∇d_r)ᵀ
                    for (ra, &da) in rows.iter().zip(&d) {
                        for (rb, &db) in rows.iter().zip(&d) {
                            let same = std::ptr::eq(ra, rb);
                            let w = b * da * db + if same { a } else { 0.0 };
                            if w == 0.0 {
                                continue;
                            }
                            for (i, vi) in ra.entries() {
                                for (j, vj) in rb.entries() {
                                    if i >= j {
                                        hess.add(i, j, w * vi * vj);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Differences of a chain of `n` nodes. With `clamped`, the chain is padded
/// by a zero node on each side.
fn chain_terms(n: usize, coeff: f64, clamped: bool) -> Vec<Term> {
    let mut terms = Vec::with_capacity(n + 1);
    if clamped {
        for k in 0..=n {
            let right = (k < n).then_some(k);
            let left = k.checked_sub(1);
            terms.push(Term::single(coeff, Stencil::diff(right, left).unwrap()));
        }
    } else {
        for k in 1..n {
            terms.push(Term::single(coeff, Stencil::diff(Some(k), Some(k - 1)).unwrap()));
        }
    }
    terms
}

fn quad_form(a: &[f64], u: &[f64]) -> f64 {
    let n = u.len();
    (0..n).map(|i| u[i] * (0..n).map(|j| a[i * n + j] * u[j]).sum::<f64>()).sum()
}

fn validate_matrix(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::config("matrix", "must be non-empty"));
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::config("matrix", "must be square"));
    }
    let a: Vec<f64> = rows.iter().flatten().copied().collect();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("matrix", "entries must be finite"));
    }
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * scale {
                return Err(Error::config("matrix", "must be symmetric"));
            }
        }
    }
    let mut band = BandMatrix::zeros(n, n - 1);
    for i in 0..n {
        for j in 0..=i {
            band.add(i, j, a[i * n + j]);
        }
    }
    if band.cholesky().is_none() {
        return Err(Error::config("matrix", "must be positive definite"));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{norm, pairing, rayleigh_quotient, SpaceKind};
    use approx::assert_relative_eq;

    fn cv(v: &[f64]) -> CoeffVec {
        CoeffVec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn matrix_energy_and_gradient() {
        let prob = ProblemSpec::matrix(vec![vec![2.0, 0.0], vec![0.0, 3.0]]).build().unwrap();
        let u = cv(&[1.0, 1.0]);
        assert_eq!(prob.phi_value(&u).unwrap(), 2.5);
        assert_eq!(prob.phi_gradient(&u).unwrap().as_slice(), &[2.0, 3.0]);
        assert_relative_eq!(rayleigh_quotient(&prob, &u).unwrap(), 2.5, max_relative = 1e-15);
    }

    #[test]
    fn matrix_validation() {
        let asym = ProblemSpec::matrix(vec![vec![2.0, 1.0], vec![0.0, 3.0]]).build();
        assert!(matches!(asym, Err(Error::Config { ref key, .. }) if key == "matrix"));
        let indef = ProblemSpec::matrix(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).build();
        assert!(matches!(indef, Err(Error::Config { .. })));
        let mut spec = ProblemSpec::matrix(vec![vec![1.0]]);
        spec.p = 3.0;
        assert!(matches!(spec.build(), Err(Error::Config { ref key, .. }) if key == "p"));
    }

    #[test]
    fn parameter_validation_names_the_key() {
        let bad_s = ProblemSpec::new(ProblemKind::FractionalSeminorm1D, 2.0, 8).with_s(1.0).build();
        assert!(matches!(bad_s, Err(Error::Config { ref key, .. }) if key == "s"));
        let bad_beta = ProblemSpec::new(ProblemKind::RobinPLaplacian1D, 2.0, 8).with_beta(0.0).build();
        assert!(matches!(bad_beta, Err(Error::Config { ref key, .. }) if key == "beta"));
        let bad_p = ProblemSpec::new(ProblemKind::PDirichlet1D, 1.0, 8).build();
        assert!(matches!(bad_p, Err(Error::Config { ref key, .. }) if key == "p"));
    }

    #[test]
    fn dirichlet_sine_rayleigh_quotient() {
        // For p = 2 the sine grid function is the discrete ground state.
        let n = 31;
        let prob = ProblemSpec::new(ProblemKind::PDirichlet1D, 2.0, n).build().unwrap();
        let h = 1.0 / (n + 1) as f64;
        let expected = 2.0 / (h * h) * (1.0 - (PI * h).cos());
        let rq = rayleigh_quotient(&prob, &prob.default_initial()).unwrap();
        assert_relative_eq!(rq, expected, max_relative = 1e-13);
        assert!((rq - PI * PI).abs() / (PI * PI) < 1e-2);
    }

    #[test]
    fn dirichlet_2d_sine_rayleigh_quotient() {
        let n = 9;
        let prob = ProblemSpec::new(ProblemKind::PDirichlet2D, 2.0, n).build().unwrap();
        let h = 1.0 / (n + 1) as f64;
        let one_d = 2.0 / (h * h) * (1.0 - (PI * h).cos());
        let rq = rayleigh_quotient(&prob, &prob.default_initial()).unwrap();
        assert_relative_eq!(rq, 2.0 * one_d, max_relative = 1e-13);
    }

    #[test]
    fn euler_identity_holds_for_every_kind() {
        for kind in ProblemKind::ALL {
            let p = if kind == ProblemKind::MatrixQuadratic { 2.0 } else { 3.0 };
            let spec = if kind == ProblemKind::MatrixQuadratic {
                ProblemSpec::matrix(vec![vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]])
            } else {
                ProblemSpec::new(kind, p, 5)
            };
            let prob = spec.build().unwrap();
            let u = CoeffVec::new((0..prob.dim()).map(|i| (1.3 * i as f64).cos() + 0.2).collect()).unwrap();
            let g = prob.phi_gradient(&u).unwrap();
            let lhs = p * prob.phi_value(&u).unwrap();
            let rhs = pairing(prob.space(), &g, &u).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn kinds_use_the_expected_spaces() {
        let k = |kind| ProblemSpec::new(kind, 2.0, 4).build().unwrap().space().kind();
        assert_eq!(k(ProblemKind::NeumannPLaplacian1D), SpaceKind::QuotientLp);
        assert_eq!(k(ProblemKind::SupDirichlet1D), SpaceKind::Sup);
        assert_eq!(k(ProblemKind::SteklovTrace1D), SpaceKind::TraceBoundary);
        assert_eq!(k(ProblemKind::PDirichlet1D), SpaceKind::WeightedLp);
    }

    #[test]
    fn neumann_energy_is_shift_invariant() {
        let prob = ProblemSpec::new(ProblemKind::NeumannPLaplacian1D, 1.5, 6).build().unwrap();
        let u = cv(&[0.1, 0.5, -0.3, 0.9, 0.0, 0.2]);
        let a = prob.phi_value(&u).unwrap();
        let b = prob.phi_value(&u.add_constant(3.0)).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-9);
        assert_eq!(norm(prob.space(), &CoeffVec::from_vec(vec![2.0; 6])).unwrap(), 0.0);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        for kind in [ProblemKind::PDirichlet2D, ProblemKind::FractionalSeminorm1D, ProblemKind::SteklovTrace1D] {
            let prob = ProblemSpec::new(kind, 3.0, 4).build().unwrap();
            let n = prob.dim();
            let u: Vec<f64> = (0..n).map(|i| (0.7 * i as f64).sin() + 0.1).collect();
            let mut hess = BandMatrix::zeros(n, prob.bandwidth());
            prob.hessian_raw(&u, 0.0, &mut hess);
            let mut gp = vec![0.0; n];
            let mut gm = vec![0.0; n];
            let step = 1e-6;
            for j in 0..n {
                let mut up = u.clone();
                let mut um = u.clone();
                up[j] += step;
                um[j] -= step;
                prob.gradient_raw(&up, &mut gp);
                prob.gradient_raw(&um, &mut gm);
                for i in 0..n {
                    let fd = (gp[i] - gm[i]) / (2.0 * step);
                    let scale = hess.max_abs_diagonal();
                    assert!((fd - hess.get(i, j)).abs() <= 1e-6 * scale, "{kind}: ({i},{j}) fd {fd} vs {}", hess.get(i, j));
                }
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ProblemKind::ALL {
            assert_eq!(ProblemKind::from_name(k.name()), Some(k));
        }
        assert_eq!(ProblemKind::from_name("nope"), None);
    }
}
