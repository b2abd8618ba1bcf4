//! Principal p-Steklov eigenpair by nonlinear inverse iteration, with the
//! convex inner solve A(u) = B(f) and a posteriori certificates.

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{FemSpace, Problem};
use crate::error::{Error, Result};
use crate::numerics::{chol_factor_with, dot, norm_inf, rcm_ordering, CholeskyFactor, SparseSym};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InnerSolveConfig {
    pub epsilon: f64,
    pub grad_tol: f64,
    pub max_newton: usize,
    pub armijo_c1: f64,
    pub backtrack: f64,
}

impl Default for InnerSolveConfig {
    fn default() -> Self {
        InnerSolveConfig { epsilon: 1e-8, grad_tol: 1e-9, max_newton: 100, armijo_c1: 1e-4, backtrack: 0.5 }
    }
}

impl InnerSolveConfig {
    pub fn check(&self) -> Result<()> {
        let ok = self.epsilon > 0.0
            && self.grad_tol > 0.0
            && self.max_newton > 0
            && self.armijo_c1 > 0.0
            && self.armijo_c1 < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid inner solver configuration {self:?}")))
        }
    }
}

/// J(u) = (1/p)·‖u‖^p_{W^{1,p}} − ⟨B(f), u⟩.
pub fn energy_j(space: &FemSpace, f: &[f64], u: &[f64], p: f64) -> Result<f64> {
    let bf = space.apply_b(f, p)?;
    Ok(space.sobolev_pnorm(u, p)? / p - dot(&bf, u))
}

#[derive(Clone, Debug, Serialize)]
pub struct InnerSolution {
    pub u: Vec<f64>,
    pub iterations: usize,
    /// ‖A(u) − B(f)‖_∞ / ‖B(f)‖_∞.
    pub residual: f64,
    /// Rounding level of that residual at u; the solve also stops there.
    pub floor: f64,
    /// The right-hand side vanished, so u = 0.
    pub zero_rhs: bool,
    /// J at every accepted iterate, starting guess first.
    pub energies: Vec<f64>,
    pub picard_steps: usize,
}

/// Accepted trial: (u, J(u), A(u) − b, relative residual, step length).
type Step = (Vec<f64>, f64, Vec<f64>, f64, f64);

/// Reusable inner solver for one space and exponent: keeps the fill-reducing
/// ordering and the factor of K + M.
pub struct InnerSolver<'a> {
    space: &'a FemSpace,
    p: f64,
    cfg: InnerSolveConfig,
    perm: Vec<usize>,
    linear: CholeskyFactor,
}

impl<'a> InnerSolver<'a> {
    pub fn new(space: &'a FemSpace, p: f64, cfg: InnerSolveConfig) -> Result<Self> {
        cfg.check()?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Parameter(format!("p must satisfy 1 < p < ∞, got {p}")));
        }
        let linear_matrix = space.system_matrix(Problem::Schrodinger);
        let perm = rcm_ordering(&linear_matrix);
        let linear = chol_factor_with(&linear_matrix, perm.clone())?;
        Ok(InnerSolver { space, p, cfg, perm, linear })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn energy(&self, b: &[f64], u: &[f64]) -> Result<f64> {
        Ok(self.space.sobolev_pnorm(u, self.p)? / self.p - dot(b, u))
    }

    fn gradient(&self, b: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.space.apply_a(u, self.p)?;
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
        Ok(r)
    }

    /// Minimizer of J along the ray {c·v : c > 0}.
    fn ray_scale(&self, b: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let s = self.space.sobolev_pnorm(v, self.p)?;
        let bv = dot(b, v);
        if !(s > 0.0) || !(bv > 0.0) {
            return Ok(v.to_vec());
        }
        let c = (bv / s).powf(1.0 / (self.p - 1.0));
        Ok(v.iter().map(|x| c * x).collect())
    }

    /// Solves A(u) = B(f) from `start`, or from a scaled linear solve.
    pub fn solve(&self, f: &[f64], start: Option<&[f64]>) -> Result<InnerSolution> {
        let p = self.p;
        let b = self.space.apply_b(f, p)?;
        let b_norm = norm_inf(&b);
        let n = b.len();
        if b_norm == 0.0 {
            return Ok(InnerSolution { u: vec![0.0; n], iterations: 0, residual: 0.0, floor: 0.0, zero_rhs: true, energies: vec![0.0], picard_steps: 0 });
        }
        if p == 2.0 {
            // a single solve with the fixed factor: the computed factor is an
            // exactly symmetric operator, so the outer iteration stays monotone
            let u = self.linear.solve(&b);
            let residual = norm_inf(&self.gradient(&b, &u)?) / b_norm;
            let energies = vec![0.0, self.energy(&b, &u)?];
            return Ok(InnerSolution { u, iterations: 1, residual, floor: 0.0, zero_rhs: false, energies, picard_steps: 0 });
        }
        let guess = match start {
            Some(s) => s.to_vec(),
            None => self.linear.solve(&b),
        };
        let mut u = self.ray_scale(&b, &guess)?;
        let mut j = self.energy(&b, &u)?;
        let mut energies = vec![j];
        let mut r = self.gradient(&b, &u)?;
        let mut res = norm_inf(&r) / b_norm;
        let mut picard_steps = 0;
        let mut converged_at = None;
        let mut floor = 0.0;
        for it in 1..=self.cfg.max_newton {
            if res <= self.cfg.grad_tol && converged_at.is_none() {
                converged_at = Some(it - 1);
            }
            // a few extra steps past the tolerance, kept only while they help
            if let Some(c) = converged_at {
                if it > c + 3 {
                    break;
                }
            }
            let h = self.space.tangent(&u, p, self.cfg.epsilon)?;
            floor = rounding_floor(&h, &u) / b_norm;
            if converged_at.is_none() && res <= floor {
                converged_at = Some(it - 1);
            }
            let mut d: Vec<f64> = self.factor(&h)?.solve(&r);
            d.iter_mut().for_each(|x| *x = -*x);
            let newton = self.line_search(&b, &u, j, &r, &d, res)?;
            // an undamped Newton step that halves the residual is kept; otherwise
            // a frozen-coefficient step is tried too and the lower energy wins
            let step = match newton {
                Some((_, _, _, r_new, t)) if t == 1.0 && r_new <= 0.5 * res => newton,
                _ if converged_at.is_some() => newton,
                _ => {
                    let sec = self.space.secant(&u, p, self.cfg.epsilon)?;
                    let target = self.factor(&sec)?.solve(&b);
                    let d: Vec<f64> = target.iter().zip(&u).map(|(t, x)| t - x).collect();
                    let picard = self.line_search(&b, &u, j, &r, &d, res)?;
                    match (newton, picard) {
                        (Some(a), Some(c)) => Some(if self.better(&c, &a, j) {
                            picard_steps += 1;
                            c
                        } else {
                            a
                        }),
                        (None, Some(c)) => {
                            picard_steps += 1;
                            Some(c)
                        }
                        (a, None) => a,
                    }
                }
            };
            let Some((u_new, j_new, r_new, res_new, _)) = step else {
                if converged_at.is_some() || res <= floor {
                    break;
                }
                return Err(Error::NonConvergence { iterations: it, residual: res });
            };
            if converged_at.is_some() && res_new >= res {
                break;
            }
            u = u_new;
            j = j_new;
            r = r_new;
            res = res_new;
            energies.push(j);
            debug!("newton {it}: J = {j:.16e}, residual {res:.3e}");
        }
        if res > self.cfg.grad_tol.max(floor) {
            return Err(Error::NonConvergence { iterations: self.cfg.max_newton, residual: res });
        }
        let iterations = energies.len() - 1;
        Ok(InnerSolution { u, iterations, residual: res, floor, zero_rhs: false, energies, picard_steps })
    }

    /// Cholesky of an SPD tangent. Sliver elements at the cusp tip can push a
    /// pivot below zero by rounding; then a small multiple of the diagonal is
    /// added, which keeps a descent direction.
    fn factor(&self, h: &SparseSym) -> Result<CholeskyFactor> {
        match chol_factor_with(h, self.perm.clone()) {
            Ok(f) => Ok(f),
            Err(Error::NotSpd { .. }) => {
                let diag = SparseSym::from_diagonal(&h.diagonal());
                let mut tau = 1e-14;
                loop {
                    match chol_factor_with(&h.add_scaled(&diag, tau), self.perm.clone()) {
                        Ok(f) => {
                            debug!("tangent shifted by {tau:e} of its diagonal");
                            return Ok(f);
                        }
                        Err(e @ Error::NotSpd { .. }) if tau >= 1e-4 => return Err(e),
                        Err(Error::NotSpd { .. }) => tau *= 10.0,
                        Err(e) => return Err(e),
                    }
                }
            }
            Err(e) => Err(e),
        }
    }

    /// Lower energy, or lower residual once energies agree to rounding.
    fn better(&self, x: &Step, y: &Step, j: f64) -> bool {
        if (x.1 - y.1).abs() <= 1e-13 * j.abs().max(1.0) {
            x.3 < y.3
        } else {
            x.1 < y.1
        }
    }

    /// Armijo backtracking on J. Once J changes drop below its rounding
    /// level, a step is accepted if it shrinks the residual instead.
    fn line_search(
        &self,
        b: &[f64],
        u: &[f64],
        j: f64,
        r: &[f64],
        d: &[f64],
        res: f64,
    ) -> Result<Option<Step>> {
        let slope = dot(r, d);
        if !(slope < 0.0) {
            return Ok(None);
        }
        let b_norm = norm_inf(b);
        let noise = 1e-13 * (j.abs() + dot(b, u).abs());
        let mut t = 1.0;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(d).map(|(x, y)| x + t * y).collect();
            let jt = self.energy(b, &trial)?;
            if (jt - j).abs() <= noise {
                let rt = self.gradient(b, &trial)?;
                let rest = norm_inf(&rt) / b_norm;
                if rest < res {
                    return Ok(Some((trial, jt, rt, rest, t)));
                }
            } else if jt <= j + self.cfg.armijo_c1 * t * slope {
                let rt = self.gradient(b, &trial)?;
                let rest = norm_inf(&rt) / b_norm;
                return Ok(Some((trial, jt, rt, rest, t)));
            }
            t *= self.cfg.backtrack;
        }
        Ok(None)
    }
}

/// Absolute rounding level of the residual near u: 64·eps·‖ |H|·|u| ‖_∞.
fn rounding_floor(h: &SparseSym, u: &[f64]) -> f64 {
    let mut acc = vec![0.0; u.len()];
    for (i, j, v) in h.entries() {
        acc[i] += v.abs() * u[j].abs();
        if i != j {
            acc[j] += v.abs() * u[i].abs();
        }
    }
    64.0 * f64::EPSILON * norm_inf(&acc)
}

pub fn solve_a_eq_bf(space: &FemSpace, f: &[f64], p: f64, cfg: &InnerSolveConfig) -> Result<InnerSolution> {
    InnerSolver::new(space, p, *cfg)?.solve(f, None)
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationStep {
    pub n: usize,
    pub mu: f64,
    /// ‖w_{n+1}‖^p in W^{1,p}.
    pub sobolev_p: f64,
    /// ‖w_{n+1}‖^p in the weighted boundary norm; 1 up to rounding.
    pub boundary_norm_check: f64,
    /// ⟨A(w_{n+1}), w_{n+1}⟩.
    pub a_pair: f64,
    /// ⟨B(w_n), w_{n+1}⟩.
    pub b_pair: f64,
    pub step_diff: f64,
    pub inner_iters: usize,
    pub inner_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationTrace {
    pub p: f64,
    pub outer_tol: f64,
    pub steps: Vec<IterationStep>,
    pub mu: f64,
    pub w_limit: Vec<f64>,
    pub converged: bool,
    /// Eigen-residual of (μ, w_limit); absent when no step completed.
    pub residual: Option<f64>,
    /// Inner-solve failure that ended the run early.
    pub failure: Option<String>,
}

pub fn default_outer_tol(p: f64) -> f64 {
    if p == 2.0 {
        1e-8
    } else {
        1e-6
    }
}

/// w₀ ≡ 1 (normalized inside [`inverse_iteration`]).
pub fn constant_start(space: &FemSpace) -> Vec<f64> {
    vec![1.0; space.dim()]
}

fn boundary_norm(space: &FemSpace, u: &[f64], p: f64) -> Result<f64> {
    Ok(space.boundary_weighted_pnorm(u, p)?.powf(1.0 / p))
}

pub fn inverse_iteration(
    space: &FemSpace,
    p: f64,
    w0: &[f64],
    cfg: &InnerSolveConfig,
    outer_tol: f64,
    max_outer: usize,
) -> Result<IterationTrace> {
    if !(outer_tol > 0.0) || max_outer == 0 {
        return Err(Error::Parameter("outer_tol must be positive and max_outer at least 1".into()));
    }
    let solver = InnerSolver::new(space, p, *cfg)?;
    inverse_iteration_with(&solver, w0, outer_tol, max_outer)
}

pub fn inverse_iteration_with(solver: &InnerSolver, w0: &[f64], outer_tol: f64, max_outer: usize) -> Result<IterationTrace> {
    let space = solver.space;
    let p = solver.p;
    let norm0 = boundary_norm(space, w0, p)?;
    if !(norm0 > 0.0) {
        return Err(Error::QuotientUndefined);
    }
    let mut w: Vec<f64> = w0.iter().map(|x| x / norm0).collect();
    let mut trace =
        IterationTrace { p, outer_tol, steps: Vec::new(), mu: f64::NAN, w_limit: w.clone(), converged: false, residual: None, failure: None };
    let mut u_prev: Option<Vec<f64>> = None;
    for n in 0..max_outer {
        let inner = match solver.solve(&w, u_prev.as_deref()) {
            Ok(s) => s,
            Err(e) => {
                trace.failure = Some(format!("inner solve failed at step {n}: {e}"));
                break;
            }
        };
        if inner.zero_rhs {
            trace.failure = Some(format!("iterate {n} has zero boundary trace"));
            break;
        }
        let norm = boundary_norm(space, &inner.u, p)?;
        let mu = norm.powf(1.0 - p);
        let mut next: Vec<f64> = inner.u.iter().map(|x| x / norm).collect();
        let bw = space.apply_b(&w, p)?;
        let mut b_pair = dot(&bw, &next);
        if b_pair < 0.0 {
            next.iter_mut().for_each(|x| *x = -*x);
            b_pair = -b_pair;
        }
        let diff: Vec<f64> = next.iter().zip(&w).map(|(a, b)| a - b).collect();
        let sum: Vec<f64> = next.iter().zip(&w).map(|(a, b)| a + b).collect();
        let step_diff = boundary_norm(space, &diff, p)?.min(boundary_norm(space, &sum, p)?);
        let a_pair = dot(&space.apply_a(&next, p)?, &next);
        let step = IterationStep {
            n,
            mu,
            sobolev_p: space.sobolev_pnorm(&next, p)?,
            boundary_norm_check: space.boundary_weighted_pnorm(&next, p)?,
            a_pair,
            b_pair,
            step_diff,
            inner_iters: inner.iterations,
            inner_residual: inner.residual,
        };
        info!("step {n}: mu = {mu:.15e}, step diff {step_diff:.3e}, {} inner iterations", inner.iterations);
        let done = trace.steps.last().is_some_and(|prev| (mu - prev.mu).abs() <= outer_tol * mu) && step_diff <= outer_tol;
        trace.steps.push(step);
        trace.mu = mu;
        u_prev = Some(next.iter().map(|x| x * mu.powf(-1.0 / (p - 1.0))).collect());
        w = next;
        trace.w_limit = w.clone();
        if done {
            trace.converged = true;
            break;
        }
    }
    if !trace.steps.is_empty() {
        trace.residual = Some(eigen_residual(space, trace.mu, &trace.w_limit, p)?);
    }
    Ok(trace)
}

/// ‖A(u) − λB(u)‖_∞ / ‖A(u)‖_∞.
pub fn eigen_residual(space: &FemSpace, lambda: f64, u: &[f64], p: f64) -> Result<f64> {
    let a = space.apply_a(u, p)?;
    let b = space.apply_b(u, p)?;
    let scale = norm_inf(&a);
    if scale == 0.0 {
        return Err(Error::QuotientUndefined);
    }
    let r: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - lambda * y).collect();
    Ok(norm_inf(&r) / scale)
}

/// Random P1 function of one of three kinds, cycled by `kind`: rough nodal
/// noise, smooth random cubic polynomials, and positive noise.
pub fn random_fem_function(space: &FemSpace, rng: &mut ChaCha8Rng, kind: usize) -> Vec<f64> {
    let verts = &space.mesh().vertices;
    match kind % 3 {
        0 => verts.iter().map(|_| rng.gen_range(-1.0..1.0)).collect(),
        1 => {
            let c: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            verts
                .iter()
                .map(|&[x, y]| {
                    let m = [1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y];
                    m.iter().zip(&c).map(|(a, b)| a * b).sum()
                })
                .collect()
        }
        _ => verts.iter().map(|_| rng.gen_range(0.0..1.0)).collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizeReport {
    pub mu: f64,
    /// |R(w_limit) − μ| / μ.
    pub self_error: f64,
    pub constant_quotient: f64,
    pub min_perturbed: f64,
    pub min_random: f64,
    /// max(0, μ − smallest quotient seen); must stay ≤ 1e-8.
    pub max_excess: f64,
    /// For p = 2: [R(w+δr) − R(w)] at δ = 1e-2 and 1e-3 and the observed order.
    pub stationarity: Option<[f64; 3]>,
    pub passed: bool,
}

pub fn rayleigh_minimize_check(space: &FemSpace, trace: &IterationTrace, trials: usize, seed: u64) -> Result<MinimizeReport> {
    if !trace.converged {
        return Err(Error::Parameter("rayleigh check needs a converged trace".into()));
    }
    let p = trace.p;
    let mu = trace.mu;
    let w = &trace.w_limit;
    let q = |u: &[f64]| space.rayleigh_quotient(u, p, Problem::Schrodinger);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_self = q(w)?;
    let constant_quotient = q(&constant_start(space))?;
    let mut min_perturbed = f64::INFINITY;
    let mut min_random = f64::INFINITY;
    let deltas = [1e-1, 1e-2, 1e-3];
    for i in 0..trials {
        let r = random_fem_function(space, &mut rng, i);
        let scale = norm_inf(w) / norm_inf(&r).max(f64::MIN_POSITIVE);
        let d = deltas[i % 3] * scale;
        let pert: Vec<f64> = w.iter().zip(&r).map(|(a, b)| a + d * b).collect();
        min_perturbed = min_perturbed.min(q(&pert)?);
        let fresh = random_fem_function(space, &mut rng, i + 1);
        if let Ok(v) = q(&fresh) {
            min_random = min_random.min(v);
        }
    }
    let stationarity = if p == 2.0 {
        let r = random_fem_function(space, &mut rng, 1);
        let scale = norm_inf(w) / norm_inf(&r).max(f64::MIN_POSITIVE);
        let e = |d: f64| -> Result<f64> {
            let v: Vec<f64> = w.iter().zip(&r).map(|(a, b)| a + d * scale * b).collect();
            Ok(q(&v)? - q_self)
        };
        let (e1, e2) = (e(1e-2)?, e(1e-3)?);
        Some([e1, e2, (e1 / e2).abs().log10()])
    } else {
        None
    };
    let lowest = q_self.min(constant_quotient).min(min_perturbed).min(min_random);
    let max_excess = (mu - lowest).max(0.0);
    let self_error = (q_self - mu).abs() / mu;
    Ok(MinimizeReport {
        mu,
        self_error,
        constant_quotient,
        min_perturbed,
        min_random,
        max_excess,
        stationarity,
        passed: max_excess <= 1e-8 && self_error <= 1e-8,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceConstantReport {
    pub s: f64,
    pub p: f64,
    /// max over samples of S^{1/p}‖u‖_{L^p_w(∂Ω)} / ‖u‖_{W^{1,p}}.
    pub max_ratio: f64,
    pub limit_ratio: f64,
    pub constant_ratio: f64,
    pub samples: usize,
    pub holds: bool,
}

pub fn trace_constant(space: &FemSpace, trace: &IterationTrace, samples: usize, seed: u64) -> Result<TraceConstantReport> {
    if !trace.converged {
        return Err(Error::Parameter("trace constant needs a converged trace".into()));
    }
    let p = trace.p;
    let s = trace.mu;
    let ratio = |u: &[f64]| -> Result<f64> {
        let b = space.boundary_weighted_pnorm(u, p)?.powf(1.0 / p);
        let w = space.sobolev_pnorm(u, p)?.powf(1.0 / p);
        Ok(s.powf(1.0 / p) * b / w)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    for i in 0..samples {
        max_ratio = max_ratio.max(ratio(&random_fem_function(space, &mut rng, i))?);
    }
    let limit_ratio = ratio(&trace.w_limit)?;
    let constant_ratio = ratio(&constant_start(space))?;
    let holds = max_ratio <= 1.0 + 1e-8 && constant_ratio <= 1.0 + 1e-8 && (limit_ratio - 1.0).abs() <= 1e-8;
    Ok(TraceConstantReport { s, p, max_ratio, limit_ratio, constant_ratio, samples, holds })
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    /// Worst observed violation in the check's own normalization.
    pub worst: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn max_rel_vec(a: &[f64], b: &[f64]) -> f64 {
    let s = norm_inf(a).max(norm_inf(b));
    if s == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / s
}

/// Homogeneity, Hölder-type bounds, equality cases and monotonicity of the
/// discrete operators A and B over `pairs` seeded random function pairs.
pub fn operator_properties(space: &FemSpace, p: f64, pairs: usize, seed: u64) -> Result<Vec<PropertyCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 7];
    // powers of two keep t·f exact, so only the operator itself is tested
    let ts: [f64; 3] = [-2.0, 0.25, 4.0];
    for i in 0..pairs {
        let f = random_fem_function(space, &mut rng, i);
        let v = random_fem_function(space, &mut rng, i + 1);
        let af = space.apply_a(&f, p)?;
        let bf = space.apply_b(&f, p)?;
        let t = ts[i % 3];
        let c = t.abs().powf(p - 2.0) * t;
        let tf: Vec<f64> = f.iter().map(|x| t * x).collect();
        let scaled = |r: &[f64]| r.iter().map(|x| c * x).collect::<Vec<f64>>();
        worst[0] = worst[0].max(max_rel_vec(&space.apply_a(&tf, p)?, &scaled(&af)));
        worst[1] = worst[1].max(max_rel_vec(&space.apply_b(&tf, p)?, &scaled(&bf)));

        let (sf, sv) = (space.sobolev_pnorm(&f, p)?, space.sobolev_pnorm(&v, p)?);
        let bound = sf.powf((p - 1.0) / p) * sv.powf(1.0 / p);
        worst[2] = worst[2].max((dot(&af, &v) - bound) / bound.max(1.0));
        let (nf, nv) = (space.boundary_weighted_pnorm(&f, p)?, space.boundary_weighted_pnorm(&v, p)?);
        let bound = nf.powf((p - 1.0) / p) * nv.powf(1.0 / p);
        worst[3] = worst[3].max((dot(&bf, &v) - bound) / bound.max(1.0));

        let s = 0.5 + (i % 4) as f64;
        let sf_vec: Vec<f64> = f.iter().map(|x| s * x).collect();
        worst[4] = worst[4].max(rel(dot(&af, &sf_vec), sf.powf((p - 1.0) / p) * (s.powf(p) * sf).powf(1.0 / p)));
        worst[5] = worst[5].max(rel(dot(&bf, &sf_vec), nf.powf((p - 1.0) / p) * (s.powf(p) * nf).powf(1.0 / p)));

        let av = space.apply_a(&v, p)?;
        let da: Vec<f64> = af.iter().zip(&av).map(|(a, b)| a - b).collect();
        let du: Vec<f64> = f.iter().zip(&v).map(|(a, b)| a - b).collect();
        let (rf, rv) = (sf.powf(1.0 / p), sv.powf(1.0 / p));
        let lower = (rf.powf(p - 1.0) - rv.powf(p - 1.0)) * (rf - rv);
        let scale = dot(&af, &f).abs() + dot(&av, &v).abs();
        worst[6] = worst[6].max((lower - dot(&da, &du)) / scale.max(1.0));
    }
    let spec = [
        ("A homogeneity", 1e-13),
        ("B homogeneity", 1e-13),
        ("A Hölder bound", 1e-10),
        ("B Hölder bound", 1e-10),
        ("A Hölder equality", 1e-10),
        ("B Hölder equality", 1e-10),
        ("A monotonicity", 1e-10),
    ];
    Ok(spec
        .iter()
        .zip(worst)
        .map(|(&(name, threshold), w)| PropertyCheck { name: name.to_string(), worst: w, threshold, passed: w <= threshold })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, DomainSpec, WeightMode};
    use crate::linear_eigen::steklov_spectrum;
    use crate::mesh::{generate, SizeField};
    use crate::numerics::{chol_factor, chol_solve};

    fn space(alpha: f64, h: f64) -> FemSpace {
        let domain = Domain::Cusp(DomainSpec::power(alpha).unwrap());
        let mesh = generate(&domain, &SizeField::new(h)).unwrap();
        FemSpace::new(mesh, domain, WeightMode::Profile).unwrap()
    }

    #[test]
    fn energy_basics() {
        let s = space(2.0, 0.4);
        let n = s.dim();
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
        assert_eq!(energy_j(&s, &f, &vec![0.0; n], 3.0).unwrap(), 0.0);
        let km = s.system_matrix(Problem::Schrodinger);
        let bw = s.boundary_weighted_mass();
        let quad = 0.5 * km.quad_form(&u) - bw.bilinear(&u, &f);
        assert!((energy_j(&s, &f, &u, 2.0).unwrap() - quad).abs() < 1e-12 * quad.abs().max(1.0));
    }

    #[test]
    fn linear_inner_solve_matches_cholesky() {
        let s = space(2.0, 0.3);
        let f = vec![1.0; s.dim()];
        let sol = solve_a_eq_bf(&s, &f, 2.0, &InnerSolveConfig::default()).unwrap();
        let factor = chol_factor(&s.system_matrix(Problem::Schrodinger)).unwrap();
        let direct = chol_solve(&factor, &s.boundary_weighted_mass().matvec(&f));
        let km = s.system_matrix(Problem::Schrodinger);
        let diff: Vec<f64> = sol.u.iter().zip(&direct).map(|(a, b)| a - b).collect();
        assert!((km.quad_form(&diff) / km.quad_form(&direct)).sqrt() < 1e-9);
        assert!(max_rel_vec(&sol.u, &direct) < 1e-8);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn nonlinear_inner_solve() {
        let s = space(2.0, 0.3);
        let cfg = InnerSolveConfig::default();
        let f: Vec<f64> = s.mesh().vertices.iter().map(|v| 1.0 + 0.3 * v[0]).collect();
        for p in [1.5, 3.0] {
            let sol = solve_a_eq_bf(&s, &f, p, &cfg).unwrap();
            assert!(sol.residual <= cfg.grad_tol.max(sol.floor), "{} {}", sol.residual, sol.floor);
            for w in sol.energies.windows(2) {
                assert!(w[1] <= w[0] + 1e-13 * w[0].abs());
            }
            let tf: Vec<f64> = f.iter().map(|x| 2.5 * x).collect();
            let scaled = solve_a_eq_bf(&s, &tf, p, &cfg).unwrap();
            let expect: Vec<f64> = sol.u.iter().map(|x| 2.5 * x).collect();
            assert!(max_rel_vec(&scaled.u, &expect) < 1e-8);
            let solver = InnerSolver::new(&s, p, cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for k in 0..3 {
                let start = random_fem_function(&s, &mut rng, k);
                let other = solver.solve(&f, Some(&start)).unwrap();
                assert!(max_rel_vec(&other.u, &sol.u) < 1e-7);
            }
        }
    }

    #[test]
    fn zero_trace_rhs() {
        let s = space(2.0, 0.4);
        let mut f = vec![0.0; s.dim()];
        for v in s.interior_vertices() {
            f[v] = 1.0;
        }
        let sol = solve_a_eq_bf(&s, &f, 3.0, &InnerSolveConfig::default()).unwrap();
        assert!(sol.zero_rhs && sol.u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn p2_matches_pencil() {
        let s = space(2.0, 0.3);
        let lam = steklov_spectrum(&s, Problem::Schrodinger, 1, false).unwrap().pairs[0].lambda;
        let tr = inverse_iteration(&s, 2.0, &constant_start(&s), &InnerSolveConfig::default(), 1e-10, 200).unwrap();
        assert!(tr.converged);
        assert!((tr.mu - lam).abs() <= 1e-8 * lam, "{} vs {lam}", tr.mu);
    }

    #[test]
    fn monotone_trace_and_chain() {
        let s = space(2.0, 0.3);
        for p in [1.5, 3.0] {
            let tr = inverse_iteration(&s, p, &constant_start(&s), &InnerSolveConfig::default(), 1e-8, 200).unwrap();
            assert!(tr.converged, "p = {p}: {:?}", tr.failure);
            for w in tr.steps.windows(2) {
                assert!(w[1].mu <= w[0].mu + 1e-12);
            }
            for st in &tr.steps {
                assert!(st.sobolev_p <= st.mu * (1.0 + 1e-9));
                assert!(st.sobolev_p >= tr.mu * (1.0 - 1e-9));
                assert!((st.boundary_norm_check - 1.0).abs() < 1e-12);
                assert!(rel(st.a_pair, st.sobolev_p) < 1e-12);
                assert!(rel(st.a_pair, st.mu * st.b_pair) < 1e-9);
            }
            let res = tr.residual.unwrap();
            assert!(res <= 10.0 * tr.outer_tol, "residual {res}");
            assert!(eigen_residual(&s, tr.mu + 1.0, &tr.w_limit, p).unwrap() > 1e-3);
            let rep = rayleigh_minimize_check(&s, &tr, 30, 3).unwrap();
            assert!(rep.passed, "{rep:?}");
            let tc = trace_constant(&s, &tr, 100, 4).unwrap();
            assert!(tc.holds, "{tc:?}");
        }
    }

    #[test]
    fn properties_pass_and_fault_is_detected() {
        let s = space(2.0, 0.4);
        for p in [1.5, 2.0, 3.0] {
            for c in operator_properties(&s, p, 60, 9).unwrap() {
                assert!(c.passed, "p = {p}: {c:?}");
            }
        }
        let bad = s.clone().with_perturbed_weight();
        let checks = operator_properties(&bad, 3.0, 30, 9).unwrap();
        assert!(checks.iter().any(|c| !c.passed));
    }

    #[test]
    fn unconverged_trace_rejected() {
        let s = space(2.0, 0.4);
        let tr = inverse_iteration(&s, 2.0, &constant_start(&s), &InnerSolveConfig::default(), 1e-12, 1).unwrap();
        assert!(!tr.converged);
        assert!(trace_constant(&s, &tr, 10, 0).is_err());
        assert!(rayleigh_minimize_check(&s, &tr, 10, 0).is_err());
    }
}
