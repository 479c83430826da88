//! Reference values computed independently of the library: closed forms,
//! dense linear algebra and hand evaluation.

use approx::assert_relative_eq;
use nlrq::flow::local_slope;
use nlrq::oracle::{direct_rayleigh_min, symmetric_eigs, OracleMethod, OracleOptions};
use nlrq::{
    dual_norm, rayleigh_quotient, solve_tilted, CoeffVec, DualVec, Exponent, ProblemKind, ProblemSpec,
    SolverOptions, SpaceDescriptor,
};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

#[test]
fn weighted_dual_norm_at_p3() {
    // (0.5·(4^1.5 + 1))^{2/3} = 4.5^{2/3}
    let sp = SpaceDescriptor::weighted_lp(2, 0.5, Exponent::new(3.0).unwrap()).unwrap();
    let xi = DualVec::new(vec![4.0, -1.0]).unwrap();
    assert_relative_eq!(dual_norm(&sp, &xi).unwrap(), 2.7256808892482094, max_relative = 1e-14);
}

#[test]
fn jacobi_reproduces_discrete_laplacian_spectrum() {
    // (2/h²)(1 − cos πh) with h = 1/4
    let h2 = 1.0 / 16.0;
    let a = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0].map(|v| v / h2);
    let eig = symmetric_eigs(&a, 3).unwrap();
    assert_relative_eq!(eig.values[0], 9.372583002030478, max_relative = 1e-9);
}

#[test]
fn tilted_dirichlet_solve_matches_gaussian_elimination() {
    // h² K⁻¹ (1, 2, 3) with K = tridiag(−1, 2, −1), h = 1/4
    let prob = ProblemSpec::new(ProblemKind::PDirichlet1D, 2.0, 3).build().unwrap();
    let xi = DualVec::new(vec![1.0, 2.0, 3.0]).unwrap();
    let report = solve_tilted(&prob, &xi, &SolverOptions::default()).unwrap();
    assert!(report.converged);
    for (v, e) in report.minimizer.iter().zip([0.15625, 0.25, 0.21875]) {
        assert!((v - e).abs() <= 1e-8);
    }
}

#[test]
fn scalar_tilted_solution() {
    // one interior node, h = 1/2: Φ(v) = 2^p|v|^p/p, so 2^p|v|^{p−2}v = c
    for p in [1.5, 2.0, 3.0] {
        let prob = ProblemSpec::new(ProblemKind::SupDirichlet1D, p, 1).with_epsilon(0.0).build().unwrap();
        let q = prob.exponent().q();
        for c in [-3.0, 0.5, 7.0_f64] {
            let report = solve_tilted(&prob, &DualVec::new(vec![c]).unwrap(), &SolverOptions::default()).unwrap();
            let exact = c.signum() * (c.abs() / 2f64.powf(p)).powf(q - 1.0);
            assert_relative_eq!(report.minimizer[0], exact, max_relative = 1e-9);
        }
    }
}

#[test]
fn local_slope_of_small_dirichlet_problem() {
    // g = K u / h² = (0, 64, −64), slope = (h Σ g²)^{1/2}
    let prob = ProblemSpec::new(ProblemKind::PDirichlet1D, 2.0, 3).build().unwrap();
    let u = CoeffVec::new(vec![1.0, 2.0, -1.0]).unwrap();
    assert_relative_eq!(local_slope(&prob, &u).unwrap(), 45.254833995939045, max_relative = 1e-13);
}

#[test]
fn small_dirichlet_gradient() {
    // n = 2, h = 1/3: g = K u / h² = (18, −9)
    let prob = ProblemSpec::new(ProblemKind::PDirichlet1D, 2.0, 2).build().unwrap();
    let g = prob.phi_gradient(&CoeffVec::new(vec![1.0, 0.0]).unwrap()).unwrap();
    assert_relative_eq!(g[0], 18.0, max_relative = 1e-13);
    assert_relative_eq!(g[1], -9.0, max_relative = 1e-13);
}

#[test]
fn oracle_on_diagonal_matrix() {
    let prob = ProblemSpec::matrix(vec![vec![2.0, 0.0], vec![0.0, 3.0]]).build().unwrap();
    let res = direct_rayleigh_min(&prob, &OracleOptions::default()).unwrap();
    assert_eq!(res.method, OracleMethod::ClosedForm);
    assert_relative_eq!(res.lambda, 2.0, max_relative = 1e-14);
    assert!((res.minimizer[0].abs() - 1.0).abs() < 1e-12 && res.minimizer[1].abs() < 1e-12);
}

#[test]
fn sup_oracle_minimizer_is_the_tent_profile() {
    // n = 1, p = 4: the profile a(r^{(p−n)/(p−1)} − |x − x₀|^{(p−n)/(p−1)}) is a tent
    let n = 128;
    let prob = ProblemSpec::new(ProblemKind::SupDirichlet1D, 4.0, n).build().unwrap();
    let res = direct_rayleigh_min(&prob, &OracleOptions::default()).unwrap();
    let m = res.minimizer.max_abs();
    let h = prob.spacing();
    let worst = (0..n)
        .map(|i| {
            let x = (i + 1) as f64 * h;
            (res.minimizer[i].abs() / m - (1.0 - 2.0 * (x - 0.5).abs())).abs()
        })
        .fold(0.0_f64, f64::max);
    assert!(worst <= 0.02, "{worst}");
}

#[test]
fn oracle_is_below_every_sampled_quotient_and_satisfies_poincare() {
    let mut rng = SplitMix64::seed_from_u64(7);
    for kind in ProblemKind::ALL {
        for p in [1.5, 2.0, 3.0] {
            let prob = ProblemSpec::standard(kind, p).build().unwrap();
            let oracle = direct_rayleigh_min(&prob, &OracleOptions::default()).unwrap();
            assert!(oracle.certificate <= 1e-6, "{kind} p={p}: certificate {}", oracle.certificate);
            let p = prob.exponent().p();
            for _ in 0..1000 {
                let u = CoeffVec::new((0..prob.dim()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
                let un = nlrq::norm(prob.space(), &u).unwrap();
                if un == 0.0 {
                    continue;
                }
                let lhs = oracle.lambda * un.powf(p);
                let rhs = p * prob.phi_value(&u).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-6), "{kind} p={p}");
                assert!(oracle.lambda <= rayleigh_quotient(&prob, &u).unwrap() * (1.0 + 1e-6));
            }
        }
    }
}
