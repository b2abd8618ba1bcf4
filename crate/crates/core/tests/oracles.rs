//! Analytic oracles on the disk and structural facts on cuspidal domains.

use cuspsteklov::assembly::{FemSpace, Problem};
use cuspsteklov::geometry::{Domain, DomainSpec, WeightMode};
use cuspsteklov::linear_eigen::{steklov_spectrum, SteklovSolver};
use cuspsteklov::mesh::ladder_mesh;
use cuspsteklov::p_solver::{constant_start, default_outer_tol, inverse_iteration, InnerSolveConfig};

/// I₁(1)/I₀(1) from the power series Σ (1/2)^{2k+ν} / (k!(k+ν)!).
const BESSEL_QUOTIENT: f64 = 0.446389965896535;

fn bessel_quotient_series() -> f64 {
    let term = |nu: i32, k: i32| {
        let mut t = 0.5f64.powi(2 * k + nu);
        for j in 1..=k {
            t /= j as f64;
        }
        for j in 1..=(k + nu) {
            t /= j as f64;
        }
        t
    };
    let i0: f64 = (0..30).map(|k| term(0, k)).sum();
    let i1: f64 = (0..30).map(|k| term(1, k)).sum();
    i1 / i0
}

fn disk(radius: f64, h: f64, level: usize) -> FemSpace {
    let domain = Domain::Disk { radius };
    FemSpace::new(ladder_mesh(&domain, h, level).unwrap(), domain, WeightMode::Unweighted).unwrap()
}

fn cusp(alpha: f64, h: f64, mode: WeightMode) -> FemSpace {
    let domain = Domain::Cusp(DomainSpec::power(alpha).unwrap());
    FemSpace::new(ladder_mesh(&domain, h, 0).unwrap(), domain, mode).unwrap()
}

#[test]
fn frozen_bessel_quotient_matches_series() {
    assert!((bessel_quotient_series() - BESSEL_QUOTIENT).abs() < 1e-15);
}

#[test]
fn disk_steklov_eigenvalues_scale_with_radius() {
    for radius in [1.0, 2.0] {
        let s = disk(radius, 0.2 * radius, 1);
        let res = steklov_spectrum(&s, Problem::Harmonic, 7, false).unwrap();
        let ev = res.eigenvalues();
        assert!(ev[0].abs() < 1e-10);
        for (k, &l) in ev.iter().enumerate().skip(1) {
            let exact = k.div_ceil(2) as f64 / radius;
            assert!((l - exact).abs() / exact < 0.02, "radius {radius}: λ{k} = {l}, expected {exact}");
        }
    }
}

#[test]
fn disk_schrodinger_ground_state_matches_bessel_quotient() {
    let s = disk(1.0, 0.2, 1);
    let res = steklov_spectrum(&s, Problem::Schrodinger, 2, false).unwrap();
    let l0 = res.pairs[0].lambda;
    assert!((l0 - BESSEL_QUOTIENT).abs() / BESSEL_QUOTIENT < 0.01, "λ₀ = {l0}");
    // radial up to discretization error, and of one sign
    let tr = &res.pairs[0].trace;
    let (lo, hi) = tr.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(lo > 0.0 && (hi - lo) / hi < 5e-3, "{lo} {hi}");
}

#[test]
fn inverse_iteration_reproduces_the_bessel_quotient() {
    let s = disk(1.0, 0.25, 1);
    let cfg = InnerSolveConfig::default();
    let trace = inverse_iteration(&s, 2.0, &constant_start(&s), &cfg, default_outer_tol(2.0), 200).unwrap();
    assert!(trace.converged);
    assert!((trace.mu - BESSEL_QUOTIENT).abs() / BESSEL_QUOTIENT < 0.01, "μ = {}", trace.mu);
}

#[test]
fn harmonic_ground_state_is_constant_on_cusps() {
    for alpha in [1.5, 2.0, 3.0] {
        let s = cusp(alpha, 0.3, WeightMode::Profile);
        let res = steklov_spectrum(&s, Problem::Harmonic, 3, false).unwrap();
        let ev = res.eigenvalues();
        assert!(ev[0] <= 1e-9 * ev[1], "α = {alpha}: {ev:?}");
        let v = &res.pairs[0].volume;
        assert!(v.iter().all(|x| (x - v[0]).abs() <= 1e-12 * v[0].abs()));
        assert!(res.pairs[0].rayleigh.abs() <= 1e-9 * ev[1]);
    }
}

#[test]
fn constrained_spectra_are_positive() {
    let s = cusp(2.0, 0.3, WeightMode::Profile);
    for problem in [Problem::Harmonic, Problem::Schrodinger] {
        let res = steklov_spectrum(&s, problem, 4, true).unwrap();
        assert!(res.eigenvalues().iter().all(|&l| l > 0.0), "{problem:?}");
    }
}

#[test]
fn unweighted_cusp_has_smaller_first_eigenvalue() {
    let domain = Domain::Cusp(DomainSpec::power(3.0).unwrap());
    let mesh = ladder_mesh(&domain, 0.3, 0).unwrap();
    let base = FemSpace::new(mesh.clone(), domain.clone(), WeightMode::Profile).unwrap();
    let solver = SteklovSolver::new(&base, Problem::Harmonic).unwrap();
    let weighted = solver.solve(2, false).unwrap().eigenvalues()[1];
    let un = FemSpace::new(mesh, domain, WeightMode::Unweighted).unwrap();
    let bw = un.boundary_weighted_mass();
    let unweighted = solver.solve_with(&bw, WeightMode::Unweighted, 2, false).unwrap().eigenvalues()[1];
    // the weight vanishes at the tip, so tip modes cost more boundary energy
    assert!(weighted > 100.0 * unweighted, "{weighted} vs {unweighted}");
}

#[test]
fn eigenpairs_have_small_residuals() {
    let s = cusp(3.0, 0.3, WeightMode::Profile);
    let res = steklov_spectrum(&s, Problem::Schrodinger, 5, false).unwrap();
    for p in &res.pairs {
        assert!(p.residual < 1e-10, "residual {}", p.residual);
        assert!((p.rayleigh - p.lambda).abs() <= 1e-9 * p.lambda, "{} vs {}", p.rayleigh, p.lambda);
    }
}
