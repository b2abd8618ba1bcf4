//! Linear (p = 2) Steklov and Schrödinger–Steklov eigenproblems by
//! Dirichlet-to-Neumann reduction onto the boundary degrees of freedom.

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{FemSpace, Problem};
use crate::error::{Error, Result};
use crate::geometry::{Domain, WeightMode};
use crate::mesh::{generate, refine_uniform, SizeField, TriMesh};
use crate::numerics::{
    dd_dot, dd_vec, f64_vec, jacobi_sym_eigen, norm2, rcm_ordering, Dd, DdCholesky, DdDense, DdDenseCholesky, DdSparse, DenseSym,
    SparseSym,
};

/// Boundary Schur complement S = A_ΓΓ − A_ΓI·A_II⁻¹·A_IΓ with what is
/// needed to extend boundary data back into the interior. The reduction runs
/// in double-double: near a cusp tip S has entries ~1/γ and eigenvalues many
/// orders smaller, which double precision cannot separate from rounding.
#[derive(Clone, Debug)]
pub struct DtnReduction {
    pub boundary: Vec<usize>,
    pub interior: Vec<usize>,
    /// S rounded to double.
    pub s: DenseSym,
    s_dd: DdDense,
    factor: Option<DdCholesky>,
    /// For each boundary DOF: (interior position, A entry).
    coupling: Vec<Vec<(usize, Dd)>>,
    n: usize,
}

pub fn dtn_reduce(system: &DdSparse, mesh: &TriMesh) -> Result<DtnReduction> {
    let n = system.dim();
    if n != mesh.vertices.len() {
        return Err(Error::Parameter("system matrix and mesh sizes differ".into()));
    }
    let boundary: Vec<usize> = (0..n).filter(|&v| mesh.boundary_flags[v]).collect();
    let interior: Vec<usize> = (0..n).filter(|&v| !mesh.boundary_flags[v]).collect();
    let mut pos = vec![(false, 0usize); n];
    for (k, &v) in boundary.iter().enumerate() {
        pos[v] = (true, k);
    }
    for (k, &v) in interior.iter().enumerate() {
        pos[v] = (false, k);
    }
    let nb = boundary.len();
    let mut s = DdDense::zeros(nb);
    let mut coupling = vec![Vec::new(); nb];
    for (a, &v) in boundary.iter().enumerate() {
        for &(j, val) in system.row(v) {
            match pos[j] {
                (true, b) => {
                    if b >= a {
                        s.set(a, b, val);
                    }
                }
                (false, b) => coupling[a].push((b, val)),
            }
        }
    }
    let factor = if interior.is_empty() {
        None
    } else {
        let a_ii = system.submatrix(&interior);
        let perm = rcm_ordering(&a_ii.to_f64());
        Some(DdCholesky::factor(&a_ii, perm).map_err(|e| Error::Mesh(format!("interior block not positive definite: {e}")))?)
    };
    if let Some(f) = &factor {
        let ni = interior.len();
        let mut cols: Vec<Vec<Dd>> = Vec::with_capacity(nb);
        for j in 0..nb {
            let mut rhs = vec![Dd::ZERO; ni];
            for &(k, v) in &coupling[j] {
                rhs[k] += v;
            }
            cols.push(if coupling[j].is_empty() { rhs } else { f.solve(&rhs) });
        }
        for i in 0..nb {
            for j in i..nb {
                let mut a = Dd::ZERO;
                for &(k, v) in &coupling[i] {
                    a += v * cols[j][k];
                }
                let mut b = Dd::ZERO;
                for &(k, v) in &coupling[j] {
                    b += v * cols[i][k];
                }
                s.set(i, j, s.get(i, j) - (a + b).mul_f64(0.5));
            }
        }
    }
    Ok(DtnReduction { boundary, interior, s: s.to_f64(), s_dd: s, factor, coupling, n })
}

impl DtnReduction {
    /// Full nodal vector from boundary values: u_I = −A_II⁻¹·A_IΓ·g.
    pub fn extend(&self, g: &[f64]) -> Vec<f64> {
        f64_vec(&self.extend_dd(&dd_vec(g)))
    }

    fn extend_dd(&self, g: &[Dd]) -> Vec<Dd> {
        let mut u = vec![Dd::ZERO; self.n];
        for (k, &v) in self.boundary.iter().enumerate() {
            u[v] = g[k];
        }
        if let Some(f) = &self.factor {
            let mut rhs = vec![Dd::ZERO; self.interior.len()];
            for (j, col) in self.coupling.iter().enumerate() {
                for &(k, v) in col {
                    rhs[k] -= v * g[j];
                }
            }
            let x = f.solve(&rhs);
            for (k, &v) in self.interior.iter().enumerate() {
                u[v] = x[k];
            }
        }
        u
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenPair {
    pub lambda: f64,
    /// Boundary values, ordered as the ascending boundary vertex list.
    pub trace: Vec<f64>,
    /// Nodal values on the whole mesh.
    pub volume: Vec<f64>,
    pub residual: f64,
    pub rayleigh: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumResult {
    pub problem: Problem,
    pub constrained: bool,
    pub weight_mode: WeightMode,
    pub boundary: Vec<usize>,
    pub pairs: Vec<EigenPair>,
}

impl SpectrumResult {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }
}

/// Householder reflector H = I − τvvᵀ with H·m ∥ e₀.
struct Reflector {
    v: Vec<Dd>,
    tau: Dd,
}

impl Reflector {
    fn new(m: &[Dd]) -> Reflector {
        let norm = dd_dot(m, m).sqrt();
        let mut v = m.to_vec();
        v[0] += if m[0].hi >= 0.0 { norm } else { -norm };
        let vv = dd_dot(&v, &v);
        Reflector { v, tau: Dd::new(2.0) / vv }
    }

    /// H·A·H with the first row and column dropped.
    fn reduce(&self, a: &DdDense) -> DdDense {
        let n = a.dim();
        let p: Vec<Dd> = a.matvec(&self.v).into_iter().map(|x| self.tau * x).collect();
        let k = (self.tau * dd_dot(&self.v, &p)).mul_f64(0.5);
        let w: Vec<Dd> = p.iter().zip(&self.v).map(|(&pi, &vi)| pi - k * vi).collect();
        let mut out = DdDense::zeros(n - 1);
        for i in 1..n {
            for j in i..n {
                out.set(i - 1, j - 1, a.get(i, j) - self.v[i] * w[j] - w[i] * self.v[j]);
            }
        }
        out
    }

    /// H·[0; y].
    fn expand(&self, y: &[Dd]) -> Vec<Dd> {
        let mut x = Vec::with_capacity(y.len() + 1);
        x.push(Dd::ZERO);
        x.extend_from_slice(y);
        let d = self.tau * dd_dot(&self.v, &x);
        for (xi, &vi) in x.iter_mut().zip(&self.v) {
            *xi -= d * vi;
        }
        x
    }
}

fn sign_normalize(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Boundary-restricted mass matrix M_Γ.
pub fn boundary_mass_block(bw: &SparseSym, boundary: &[usize]) -> DenseSym {
    let sub = bw.submatrix(boundary);
    let mut m = DenseSym::zeros(boundary.len());
    for (i, j, v) in sub.entries() {
        m.set(i, j, v);
    }
    m
}

fn check_edge_weights(space: &FemSpace, bw: &SparseSym) -> Result<()> {
    for e in &space.mesh().boundary_edges {
        let [a, b] = e.vertices;
        let total = bw.get(a, a) + 2.0 * bw.get(a, b) + bw.get(b, b);
        if !(total > 0.0) {
            return Err(Error::Weight(format!("boundary weight vanishes on the whole edge ({a}, {b})")));
        }
    }
    Ok(())
}

/// Pencil S·g = λ·M_Γ·g on boundary DOFs. Returns ascending (λ, g) with
/// gᵀM_Γg = 1. `deflate` restricts to {g : (M_Γ𝟙)ᵀg = 0}.
fn boundary_pencil(s: &DdDense, m: &DenseSym, k: usize, deflate: bool) -> Result<Vec<(f64, Vec<f64>)>> {
    let nb = s.dim();
    let m = DdDense::from_f64(m);
    let (s_red, m_red, refl) = if deflate {
        let refl = Reflector::new(&m.matvec(&vec![Dd::new(1.0); nb]));
        (refl.reduce(s), refl.reduce(&m), Some(refl))
    } else {
        (s.clone(), m, None)
    };
    if s_red.dim() == 0 {
        return Ok(Vec::new());
    }
    // M_Γ is nearly singular near the cusp tip, so solve M_Γ·g = θ·S·g with
    // S = L·Lᵀ and invert θ: the wanted small λ are the large θ of L⁻¹·M_Γ·L⁻ᵀ.
    let chol = DdDenseCholesky::factor(&s_red).map_err(|e| Error::Weight(format!("reduced boundary operator is not definite: {e}")))?;
    let c = chol.congruence_inverse(&m_red);
    let eig = jacobi_sym_eigen(&c)?;
    let mut out = Vec::new();
    for idx in (0..eig.values.len()).rev() {
        if out.len() == k {
            break;
        }
        let theta = eig.values[idx];
        if !(theta > 0.0) {
            break;
        }
        let y = chol.solve_upper(&dd_vec(&eig.vectors[idx]));
        let y: Vec<Dd> = y.into_iter().map(|x| x.mul_f64(1.0 / theta.sqrt())).collect();
        let g = match &refl {
            Some(r) => r.expand(&y),
            None => y,
        };
        let mut g = f64_vec(&g);
        sign_normalize(&mut g);
        out.push((1.0 / theta, g));
    }
    Ok(out)
}

/// Solver for one mesh and problem; the Schur complement is computed once and
/// reused across weight modes and constraint choices.
pub struct SteklovSolver<'a> {
    space: &'a FemSpace,
    problem: Problem,
    system: SparseSym,
    exact: DdSparse,
    dtn: DtnReduction,
}

impl<'a> SteklovSolver<'a> {
    pub fn new(space: &'a FemSpace, problem: Problem) -> Result<Self> {
        let exact = space.system_matrix_dd(problem);
        let system = exact.to_f64();
        let dtn = dtn_reduce(&exact, space.mesh())?;
        Ok(SteklovSolver { space, problem, system, exact, dtn })
    }

    pub fn system(&self) -> &SparseSym {
        &self.system
    }

    /// The system matrix in double-double.
    pub fn exact_system(&self) -> &DdSparse {
        &self.exact
    }

    pub fn dtn(&self) -> &DtnReduction {
        &self.dtn
    }

    /// k smallest eigenpairs against the boundary mass `bw` (a full-size matrix).
    pub fn solve_with(&self, bw: &SparseSym, weight_mode: WeightMode, k: usize, constrained: bool) -> Result<SpectrumResult> {
        let nb = self.dtn.boundary.len();
        if k == 0 || k > nb {
            return Err(Error::Parameter(format!("k must lie in 1..={nb}, got {k}")));
        }
        let m = boundary_mass_block(bw, &self.dtn.boundary);
        let harmonic = self.problem == Problem::Harmonic;
        let mut raw: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut exact_zero = false;
        if harmonic && !constrained {
            let ones = vec![1.0; nb];
            let scale = m.quad_form(&ones).sqrt();
            raw.push((0.0, ones.iter().map(|x| x / scale).collect()));
            exact_zero = true;
        }
        let need = k - raw.len();
        if need > 0 {
            raw.extend(boundary_pencil(&self.dtn.s_dd, &m, need, harmonic || constrained)?);
        }
        let a_norm = self.system.norm_inf();
        let b_norm = bw.norm_inf();
        let pairs = raw
            .into_iter()
            .enumerate()
            .map(|(idx, (lambda, trace))| {
                let volume = self.dtn.extend(&trace);
                let au = self.system.matvec(&volume);
                let bu = bw.matvec(&volume);
                let res: Vec<f64> = au.iter().zip(&bu).map(|(a, b)| a - lambda * b).collect();
                let residual = norm2(&res) / (norm2(&volume) * (a_norm + lambda.abs() * b_norm));
                let ud = dd_vec(&volume);
                let uau = dd_dot(&ud, &self.exact.matvec(&ud)).to_f64();
                let ubu: f64 = volume.iter().zip(&bu).map(|(a, b)| a * b).sum();
                let rayleigh = if idx == 0 && exact_zero { uau.max(0.0) / ubu } else { uau / ubu };
                EigenPair { lambda, trace, volume, residual, rayleigh }
            })
            .collect();
        Ok(SpectrumResult { problem: self.problem, constrained, weight_mode, boundary: self.dtn.boundary.clone(), pairs })
    }

    pub fn solve(&self, k: usize, constrained: bool) -> Result<SpectrumResult> {
        let bw = self.space.boundary_weighted_mass();
        check_edge_weights(self.space, &bw)?;
        self.solve_with(&bw, self.space.weight_mode(), k, constrained)
    }
}

pub fn steklov_spectrum(space: &FemSpace, problem: Problem, k: usize, constrained: bool) -> Result<SpectrumResult> {
    SteklovSolver::new(space, problem)?.solve(k, constrained)
}

#[derive(Clone, Debug, Serialize)]
pub struct MinMaxReport {
    /// max over n and samples of R(u) − λ_n for u ∈ span{v_0..v_n}.
    pub max_violation: f64,
    /// max over n of |R(v_n) − λ_n| / max(1, |λ_n|).
    pub max_self_error: f64,
    pub samples: usize,
}

/// Samples the discrete max-min characterization λ_n = max over M_n of R.
/// Gram matrices are formed in double-double, so the quotients are not
/// limited by rounding of the large tip entries of A.
pub fn minmax_check(result: &SpectrumResult, system: &DdSparse, bw: &SparseSym, trials: usize, seed: u64) -> MinMaxReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vs: Vec<Vec<Dd>> = result.pairs.iter().map(|p| dd_vec(&p.volume)).collect();
    let bw = DdSparse::from_triplets(bw.dim(), bw.entries().map(|(i, j, v)| (i, j, Dd::new(v))).collect());
    let n = vs.len();
    let gram = |m: &DdSparse| -> Vec<Vec<f64>> {
        let mv: Vec<Vec<Dd>> = vs.iter().map(|v| m.matvec(v)).collect();
        (0..n).map(|i| (0..n).map(|j| dd_dot(&vs[i], &mv[j]).to_f64()).collect()).collect()
    };
    let ga = gram(system);
    let gb = gram(&bw);
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_self_error: f64 = 0.0;
    let mut samples = 0;
    for top in 0..n {
        let lambda = result.pairs[top].lambda;
        let self_q = ga[top][top] / gb[top][top];
        max_self_error = max_self_error.max((self_q - lambda).abs() / lambda.abs().max(1.0));
        for _ in 0..trials {
            let c: Vec<f64> = (0..=top).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let quad = |g: &Vec<Vec<f64>>| -> f64 {
                (0..=top).map(|i| (0..=top).map(|j| c[i] * c[j] * g[i][j]).sum::<f64>()).sum()
            };
            let r = quad(&ga) / quad(&gb);
            max_violation = max_violation.max(r - lambda);
            samples += 1;
        }
    }
    MinMaxReport { max_violation, max_self_error, samples }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelRow {
    pub level: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub boundary_dofs: usize,
    pub h_max: f64,
    pub eigenvalues: Vec<f64>,
    /// |λ_j(level) − λ_j(level−1)| / λ_j(level); empty on level 0.
    pub rel_change: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub problem: Problem,
    pub weight_mode: WeightMode,
    pub constrained: bool,
    pub rows: Vec<LevelRow>,
    /// Richardson-extrapolated limits from the last three levels (two when
    /// only two exist, assuming second order).
    pub extrapolated: Vec<f64>,
    pub observed_order: Vec<Option<f64>>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceOptions {
    pub problem: Problem,
    pub k: usize,
    pub levels: usize,
    pub h_max: f64,
    pub constrained: bool,
}

/// Runs the pencil on a ladder of uniformly refined meshes, one table per weight mode.
pub fn convergence_study(domain: &Domain, opts: &ConvergenceOptions, modes: &[WeightMode]) -> Result<Vec<ConvergenceTable>> {
    if opts.levels < 2 {
        return Err(Error::Parameter(format!("a convergence study needs at least 2 levels, got {}", opts.levels)));
    }
    let mut mesh = generate(domain, &SizeField::new(opts.h_max))?;
    let mut per_mode: Vec<Vec<LevelRow>> = vec![Vec::new(); modes.len()];
    for level in 0..opts.levels {
        if level > 0 {
            mesh = refine_uniform(&mesh, domain)?;
        }
        let h = opts.h_max / (1u64 << level) as f64;
        let base = FemSpace::new(mesh.clone(), domain.clone(), WeightMode::Profile)?;
        let solver = SteklovSolver::new(&base, opts.problem)?;
        for (mi, &mode) in modes.iter().enumerate() {
            let space = FemSpace::new(mesh.clone(), domain.clone(), mode)?;
            let bw = space.boundary_weighted_mass();
            check_edge_weights(&space, &bw)?;
            let res = solver.solve_with(&bw, mode, opts.k, opts.constrained)?;
            let eigenvalues = res.eigenvalues();
            let rel_change = match per_mode[mi].last() {
                Some(prev) => eigenvalues
                    .iter()
                    .zip(&prev.eigenvalues)
                    .map(|(a, b)| if *a == 0.0 { 0.0 } else { (a - b).abs() / a.abs() })
                    .collect(),
                None => Vec::new(),
            };
            info!("level {level} {mode:?}: {} boundary DOFs, eigenvalues {eigenvalues:?}", res.boundary.len());
            per_mode[mi].push(LevelRow {
                level,
                vertices: mesh.vertices.len(),
                triangles: mesh.triangles.len(),
                boundary_dofs: res.boundary.len(),
                h_max: h,
                eigenvalues,
                rel_change,
            });
        }
    }
    Ok(modes
        .iter()
        .zip(per_mode)
        .map(|(&mode, rows)| {
            let (extrapolated, observed_order) = richardson(&rows);
            ConvergenceTable { problem: opts.problem, weight_mode: mode, constrained: opts.constrained, rows, extrapolated, observed_order }
        })
        .collect())
}

fn richardson(rows: &[LevelRow]) -> (Vec<f64>, Vec<Option<f64>>) {
    let n = rows.len();
    let k = rows[n - 1].eigenvalues.len();
    let mut ext = Vec::with_capacity(k);
    let mut orders = Vec::with_capacity(k);
    for j in 0..k {
        let l2 = rows[n - 1].eigenvalues[j];
        let l1 = rows[n - 2].eigenvalues[j];
        let order = if n >= 3 {
            let l0 = rows[n - 3].eigenvalues[j];
            let ratio = (l1 - l0) / (l2 - l1);
            (ratio.is_finite() && ratio > 1.0).then(|| ratio.log2())
        } else {
            None
        };
        let q = order.unwrap_or(2.0);
        let d = 2f64.powf(q) - 1.0;
        ext.push(if l2 == l1 { l2 } else { l2 + (l2 - l1) / d });
        orders.push(order);
    }
    (ext, orders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::mesh::disk_mesh;

    fn disk_space(h: f64, levels: usize) -> FemSpace {
        let domain = Domain::Disk { radius: 1.0 };
        let mut mesh = disk_mesh(1.0, h).unwrap();
        for _ in 0..levels {
            mesh = refine_uniform(&mesh, &domain).unwrap();
        }
        FemSpace::new(mesh, domain, WeightMode::Unweighted).unwrap()
    }

    fn cusp_space(alpha: f64, h: f64) -> FemSpace {
        let domain = Domain::Cusp(DomainSpec::power(alpha).unwrap());
        let mesh = generate(&domain, &SizeField::new(h)).unwrap();
        FemSpace::new(mesh, domain, WeightMode::Profile).unwrap()
    }

    #[test]
    fn schur_complement_properties() {
        let s = disk_space(0.5, 0);
        let dtn = dtn_reduce(&s.system_matrix_dd(Problem::Harmonic), s.mesh()).unwrap();
        let ones = vec![1.0; dtn.boundary.len()];
        assert!(dtn.s.matvec(&ones).iter().all(|v| v.abs() < 1e-10));
        let ext = dtn.extend(&ones);
        assert!(ext.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let dtn = dtn_reduce(&s.system_matrix_dd(Problem::Schrodinger), s.mesh()).unwrap();
        assert!(crate::numerics::dense_cholesky(&dtn.s).is_ok());
    }

    #[test]
    fn no_interior_vertices_gives_boundary_block() {
        let mesh = crate::mesh::generate_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], &SizeField::new(5.0)).unwrap();
        let s = FemSpace::new(mesh, Domain::Polygon, WeightMode::Profile).unwrap();
        let k = s.stiffness();
        let dtn = dtn_reduce(&s.system_matrix_dd(Problem::Harmonic), s.mesh()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((dtn.s.get(i, j) - k.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn disk_harmonic_spectrum() {
        let s = disk_space(0.3, 1);
        let r = steklov_spectrum(&s, Problem::Harmonic, 7, false).unwrap();
        let lam = r.eigenvalues();
        assert!(lam[0].abs() <= 1e-9 * lam[1]);
        for (got, want) in lam.iter().zip([0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).skip(1) {
            assert!((got - want).abs() / want < 0.05, "{lam:?}");
        }
        for p in &r.pairs[1..] {
            assert!(p.residual < 1e-8, "residual {}", p.residual);
            assert!((p.rayleigh - p.lambda).abs() < 1e-10 * p.lambda);
        }
        let c = steklov_spectrum(&s, Problem::Harmonic, 6, true).unwrap();
        assert!((c.pairs[0].lambda - lam[1]).abs() < 1e-8 * lam[1]);
    }

    #[test]
    fn orthonormal_and_interlacing() {
        let s = cusp_space(2.0, 0.3);
        let bw = s.boundary_weighted_mass();
        let unc = steklov_spectrum(&s, Problem::Schrodinger, 6, false).unwrap();
        let con = steklov_spectrum(&s, Problem::Schrodinger, 5, true).unwrap();
        for (i, a) in unc.pairs.iter().enumerate() {
            for (j, b) in unc.pairs.iter().enumerate() {
                let d = bw.bilinear(&a.volume, &b.volume);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
        for j in 0..5 {
            let (u0, c, u1) = (unc.pairs[j].lambda, con.pairs[j].lambda, unc.pairs[j + 1].lambda);
            assert!(u0 <= c + 1e-9 && c <= u1 + 1e-9, "j {j}: {u0} {c} {u1}");
        }
        assert!(con.pairs.iter().all(|p| p.lambda > 0.0));
    }

    #[test]
    fn weight_scaling_and_renumbering() {
        let s = cusp_space(2.0, 0.4);
        let solver = SteklovSolver::new(&s, Problem::Harmonic).unwrap();
        let bw = s.boundary_weighted_mass();
        let a = solver.solve_with(&bw, WeightMode::Profile, 5, false).unwrap();
        let b = solver.solve_with(&bw.scaled(2.0), WeightMode::Profile, 5, false).unwrap();
        for (x, y) in a.pairs.iter().zip(&b.pairs).skip(1) {
            assert!((x.lambda - 2.0 * y.lambda).abs() <= 1e-12 * x.lambda);
        }
        let n = s.dim();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        assert!(!n.is_multiple_of(7));
        let permuted = FemSpace::new(s.mesh().renumbered(&perm), s.domain().clone(), WeightMode::Profile).unwrap();
        let c = steklov_spectrum(&permuted, Problem::Harmonic, 5, false).unwrap();
        for (x, y) in a.pairs.iter().zip(&c.pairs).skip(1) {
            assert!((x.lambda - y.lambda).abs() <= 1e-12 * x.lambda);
        }
    }

    #[test]
    fn minmax_holds() {
        let s = cusp_space(2.0, 0.3);
        let r = steklov_spectrum(&s, Problem::Harmonic, 5, false).unwrap();
        let rep = minmax_check(&r, &s.system_matrix_dd(Problem::Harmonic), &s.boundary_weighted_mass(), 50, 1);
        assert!(rep.max_violation <= 1e-9 && rep.max_self_error <= 1e-10, "{rep:?}");
    }

    #[test]
    fn k_out_of_range() {
        let s = disk_space(0.5, 0);
        assert!(steklov_spectrum(&s, Problem::Harmonic, 0, false).is_err());
        assert!(steklov_spectrum(&s, Problem::Harmonic, 10_000, false).is_err());
    }

    #[test]
    fn richardson_second_order() {
        let row = |e: f64| LevelRow { level: 0, vertices: 0, triangles: 0, boundary_dofs: 0, h_max: 0.0, eigenvalues: vec![e], rel_change: vec![] };
        // λ(h) = 1 + h² at h = 1, 1/2, 1/4
        let (ext, ord) = richardson(&[row(2.0), row(1.25), row(1.0625)]);
        assert!((ext[0] - 1.0).abs() < 1e-14);
        assert!((ord[0].unwrap() - 2.0).abs() < 1e-14);
    }
}
