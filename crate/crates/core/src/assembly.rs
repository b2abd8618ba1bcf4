//! P1 finite-element forms: stiffness, mass, weighted boundary mass, and the
//! nonlinear operators A and B with their norms and quotients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, WeightMode};
use crate::mesh::TriMesh;
use crate::numerics::{Dd, DdSparse, SparseSym, TripletBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    /// −Δu = 0 in Ω.
    Harmonic,
    /// −Δu + u = 0 in Ω (p-Laplacian analogue for p ≠ 2).
    Schrodinger,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Harmonic => "harmonic",
            Problem::Schrodinger => "schrodinger",
        }
    }
}

/// Nodes and weights of the 4-point Gauss rule on [0, 1].
fn gauss4() -> [(f64, f64); 4] {
    let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let wa = (18.0 + 30f64.sqrt()) / 36.0;
    let wb = (18.0 - 30f64.sqrt()) / 36.0;
    [
        (0.5 * (1.0 - b), 0.5 * wb),
        (0.5 * (1.0 - a), 0.5 * wa),
        (0.5 * (1.0 + a), 0.5 * wa),
        (0.5 * (1.0 + b), 0.5 * wb),
    ]
}

#[derive(Clone, Debug)]
struct EdgeQuadrature {
    vertices: [usize; 2],
    /// (φ at the first vertex, quadrature weight × w × edge length).
    nodes: [(f64, f64); 4],
}

/// `|x|^(p−2)·x`, extended by 0 at the origin.
#[inline]
pub fn signed_pow(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(p - 1.0).copysign(x)
    }
}

#[inline]
fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("p must satisfy 1 < p < ∞, got {p}")))
    }
}

/// Discrete P1 space on a mesh, with per-element data precomputed.
#[derive(Clone, Debug)]
pub struct FemSpace {
    mesh: TriMesh,
    domain: Domain,
    weight_mode: WeightMode,
    areas: Vec<f64>,
    grads: Vec<[[f64; 2]; 3]>,
    edges: Vec<EdgeQuadrature>,
    /// Fault injection: one boundary quadrature weight scaled by 1.1 in `apply_b` only.
    perturbed: Option<(usize, usize)>,
}

impl FemSpace {
    pub fn new(mesh: TriMesh, domain: Domain, weight_mode: WeightMode) -> Result<FemSpace> {
        mesh.validate()?;
        let mut areas = Vec::with_capacity(mesh.triangles.len());
        let mut grads = Vec::with_capacity(mesh.triangles.len());
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.tri_points(t);
            let two_area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            areas.push(0.5 * two_area);
            grads.push([
                [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
                [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
                [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
            ]);
        }
        let rule = gauss4();
        let edges = mesh
            .boundary_edges
            .iter()
            .map(|e| {
                let (pa, pb): (Point, Point) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
                let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
                let nodes = rule.map(|(s, wq)| {
                    let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                    (1.0 - s, wq * len * domain.weight(x, weight_mode))
                });
                EdgeQuadrature { vertices: e.vertices, nodes }
            })
            .collect();
        Ok(FemSpace { mesh, domain, weight_mode, areas, grads, edges, perturbed: None })
    }

    /// Scales the largest boundary quadrature weight by 1.1 inside `apply_b`
    /// only, breaking the consistency between B and the boundary norm.
    pub fn with_perturbed_weight(mut self) -> Self {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (e, q) in self.edges.iter().enumerate() {
            for (k, &(_, w)) in q.nodes.iter().enumerate() {
                if w > best.2 {
                    best = (e, k, w);
                }
            }
        }
        self.perturbed = Some((best.0, best.1));
        self
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.weight_mode
    }

    pub fn dim(&self) -> usize {
        self.mesh.vertices.len()
    }

    /// Boundary vertex indices in ascending order.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&v| self.mesh.boundary_flags[v]).collect()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&v| !self.mesh.boundary_flags[v]).collect()
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::Parameter(format!("FEM function has length {}, mesh has {} vertices", u.len(), self.dim())))
        }
    }

    fn grad(&self, t: usize, u: &[f64]) -> [f64; 2] {
        let tri = self.mesh.triangles[t];
        let g = &self.grads[t];
        // differences first: Σ∇φ_k = 0, and this keeps slivers accurate
        let d1 = u[tri[1]] - u[tri[0]];
        let d2 = u[tri[2]] - u[tri[0]];
        [d1 * g[1][0] + d2 * g[2][0], d1 * g[1][1] + d2 * g[2][1]]
    }

    pub fn stiffness(&self) -> SparseSym {
        let mut b = TripletBuilder::with_capacity(self.dim(), 6 * self.mesh.triangles.len());
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let g = &self.grads[t];
            for i in 0..3 {
                for j in i..3 {
                    b.add(tri[i], tri[j], self.areas[t] * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
                }
            }
        }
        b.build()
    }

    pub fn mass(&self) -> SparseSym {
        let mut b = TripletBuilder::with_capacity(self.dim(), 6 * self.mesh.triangles.len());
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let a = self.areas[t] / 12.0;
            for i in 0..3 {
                for j in i..3 {
                    b.add(tri[i], tri[j], if i == j { 2.0 * a } else { a });
                }
            }
        }
        b.build()
    }

    /// ∫_∂Ω φ_i φ_j w ds with the 4-point edge rule.
    pub fn boundary_weighted_mass(&self) -> SparseSym {
        let mut b = TripletBuilder::with_capacity(self.dim(), 3 * self.edges.len());
        for e in &self.edges {
            let [i, j] = e.vertices;
            let (mut ii, mut ij, mut jj) = (0.0, 0.0, 0.0);
            for &(phi, w) in &e.nodes {
                ii += w * phi * phi;
                ij += w * phi * (1.0 - phi);
                jj += w * (1.0 - phi) * (1.0 - phi);
            }
            b.add(i, i, ii);
            b.add(i, j, ij);
            b.add(j, j, jj);
        }
        b.build()
    }

    /// System matrix of the linear problem: K or K + M.
    pub fn system_matrix(&self, problem: Problem) -> SparseSym {
        match problem {
            Problem::Harmonic => self.stiffness(),
            Problem::Schrodinger => self.stiffness().add_scaled(&self.mass(), 1.0),
        }
    }

    /// System matrix in double-double, from exact coordinate differences.
    /// Near a cusp tip the f64 matrix loses its small eigenvalues to rounding
    /// of entries of size ~1/γ.
    pub fn system_matrix_dd(&self, problem: Problem) -> DdSparse {
        let mut trip = Vec::with_capacity(6 * self.mesh.triangles.len());
        for t in 0..self.mesh.triangles.len() {
            let tri = self.mesh.triangles[t];
            let p = self.mesh.tri_points(t);
            let edge = |i: usize, j: usize| [Dd::sum(p[j][0], -p[i][0]), Dd::sum(p[j][1], -p[i][1])];
            // Edge opposite each vertex, oriented cyclically.
            let e = [edge(1, 2), edge(2, 0), edge(0, 1)];
            // (b − a) × (c − a) with c − a = −e[1].
            let two_area = e[2][1] * e[1][0] - e[2][0] * e[1][1];
            let denom = two_area + two_area;
            let mass = two_area / Dd::new(24.0);
            for i in 0..3 {
                for j in i..3 {
                    let mut v = (e[i][0] * e[j][0] + e[i][1] * e[j][1]) / denom;
                    if problem == Problem::Schrodinger {
                        v += if i == j { mass + mass } else { mass };
                    }
                    trip.push((tri[i], tri[j], v));
                }
            }
        }
        DdSparse::from_triplets(self.dim(), trip)
    }

    /// ∫|∇u|^p dx (exact per triangle).
    pub fn gradient_pnorm(&self, u: &[f64], p: f64) -> Result<f64> {
        check_p(p)?;
        self.check_len(u)?;
        Ok((0..self.mesh.triangles.len())
            .map(|t| {
                let g = self.grad(t, u);
                self.areas[t] * g[0].hypot(g[1]).powf(p)
            })
            .sum())
    }

    /// ∫|u|^p dx with the edge-midpoint rule.
    pub fn value_pnorm(&self, u: &[f64], p: f64) -> Result<f64> {
        check_p(p)?;
        self.check_len(u)?;
        Ok(self
            .mesh
            .triangles
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let s: f64 = (0..3).map(|k| (0.5 * (u[tri[k]] + u[tri[(k + 1) % 3]])).abs().powf(p)).sum();
                self.areas[t] / 3.0 * s
            })
            .sum())
    }

    /// ∫(|∇u|^p + |u|^p) dx, the p-th power of the W^{1,p} norm.
    pub fn sobolev_pnorm(&self, u: &[f64], p: f64) -> Result<f64> {
        Ok(self.gradient_pnorm(u, p)? + self.value_pnorm(u, p)?)
    }

    /// ∫_∂Ω |u|^p w ds, the p-th power of the weighted boundary norm.
    pub fn boundary_weighted_pnorm(&self, u: &[f64], p: f64) -> Result<f64> {
        check_p(p)?;
        self.check_len(u)?;
        Ok(self
            .edges
            .iter()
            .map(|e| {
                let [i, j] = e.vertices;
                e.nodes.iter().map(|&(phi, w)| w * (phi * u[i] + (1.0 - phi) * u[j]).abs().powf(p)).sum::<f64>()
            })
            .sum())
    }

    /// ∫_∂Ω w ds.
    pub fn weighted_perimeter(&self) -> f64 {
        self.edges.iter().flat_map(|e| e.nodes.iter().map(|&(_, w)| w)).sum()
    }

    pub fn rayleigh_quotient(&self, u: &[f64], p: f64, problem: Problem) -> Result<f64> {
        let denom = self.boundary_weighted_pnorm(u, p)?;
        if !(denom > 0.0) {
            return Err(Error::QuotientUndefined);
        }
        let numer = match problem {
            Problem::Harmonic => {
                if p != 2.0 {
                    return Err(Error::Parameter("the harmonic quotient is defined for p = 2 only".into()));
                }
                self.gradient_pnorm(u, 2.0)?
            }
            Problem::Schrodinger => self.sobolev_pnorm(u, p)?,
        };
        Ok(numer / denom)
    }

    /// r_j = ⟨A(u), φ_j⟩ = ∫|∇u|^{p−2}∇u·∇φ_j + ∫|u|^{p−2}u φ_j.
    pub fn apply_a(&self, u: &[f64], p: f64) -> Result<Vec<f64>> {
        check_p(p)?;
        self.check_len(u)?;
        let mut r = vec![0.0; self.dim()];
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let g = self.grad(t, u);
            let norm = g[0].hypot(g[1]);
            let scale = if norm == 0.0 { 0.0 } else { self.areas[t] * norm.powf(p - 2.0) };
            let gr = &self.grads[t];
            for k in 0..3 {
                r[tri[k]] += scale * (g[0] * gr[k][0] + g[1] * gr[k][1]);
            }
            let w = self.areas[t] / 3.0;
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let v = w * 0.5 * signed_pow(0.5 * (u[a] + u[b]), p);
                r[a] += v;
                r[b] += v;
            }
        }
        Ok(r)
    }

    /// ⟨B(f), φ_j⟩ = ∫_∂Ω |f|^{p−2} f φ_j w ds; zero at interior vertices.
    pub fn apply_b(&self, f: &[f64], p: f64) -> Result<Vec<f64>> {
        check_p(p)?;
        self.check_len(f)?;
        let mut r = vec![0.0; self.dim()];
        for (e_idx, e) in self.edges.iter().enumerate() {
            let [i, j] = e.vertices;
            for (k, &(phi, w)) in e.nodes.iter().enumerate() {
                let w = if self.perturbed == Some((e_idx, k)) { 1.1 * w } else { w };
                let v = w * signed_pow(phi * f[i] + (1.0 - phi) * f[j], p);
                r[i] += v * phi;
                r[j] += v * (1.0 - phi);
            }
        }
        Ok(r)
    }

    /// ∫_∂Ω |u|^{p−2} u w ds.
    pub fn orthogonality_functional(&self, u: &[f64], p: f64) -> Result<f64> {
        Ok(self.apply_b(u, p)?.iter().sum())
    }

    /// Regularized second derivative of (1/p)·sobolev_pnorm at u:
    /// (|∇u|²+ε²)^{(p−2)/2}[I + (p−2)∇u∇uᵀ/(|∇u|²+ε²)] on gradients and
    /// (p−1)(|u|²+ε²)^{(p−2)/2} on values. Equals K + M for p = 2.
    pub fn tangent(&self, u: &[f64], p: f64, eps: f64) -> Result<SparseSym> {
        self.linearization(u, p, eps, true)
    }

    /// Frozen-coefficient operator (|∇u|²+ε²)^{(p−2)/2} on gradients and
    /// (|u|²+ε²)^{(p−2)/2} on values, used for fixed-point steps.
    pub fn secant(&self, u: &[f64], p: f64, eps: f64) -> Result<SparseSym> {
        self.linearization(u, p, eps, false)
    }

    fn linearization(&self, u: &[f64], p: f64, eps: f64, full: bool) -> Result<SparseSym> {
        check_p(p)?;
        self.check_len(u)?;
        let mut b = TripletBuilder::with_capacity(self.dim(), 12 * self.mesh.triangles.len());
        let e2 = eps * eps;
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let g = self.grad(t, u);
            let s2 = g[0] * g[0] + g[1] * g[1] + e2;
            let (c, d) = if p == 2.0 {
                (1.0, 0.0)
            } else {
                (s2.powf(0.5 * (p - 2.0)), if full { (p - 2.0) / s2 } else { 0.0 })
            };
            let gr = &self.grads[t];
            let a = self.areas[t];
            for i in 0..3 {
                for j in i..3 {
                    let dot = gr[i][0] * gr[j][0] + gr[i][1] * gr[j][1];
                    let proj = (g[0] * gr[i][0] + g[1] * gr[i][1]) * (g[0] * gr[j][0] + g[1] * gr[j][1]);
                    b.add(tri[i], tri[j], a * c * (dot + d * proj));
                }
            }
            let w = a / 3.0;
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                let m = 0.5 * (u[i] + u[j]);
                let h = if p == 2.0 {
                    1.0
                } else {
                    let f = (m * m + e2).powf(0.5 * (p - 2.0));
                    if full { (p - 1.0) * f } else { f }
                };
                let v = w * h * 0.25;
                b.add(i, i, v);
                b.add(i, j, v);
                b.add(j, j, v);
            }
        }
        Ok(b.build())
    }

    /// Mesh area ∫_Ω 1 dx.
    pub fn area(&self) -> f64 {
        self.areas.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, Segment};
    use crate::mesh::{generate, generate_polygon, BoundaryEdge, SizeField};

    fn reference() -> FemSpace {
        let mut mesh = TriMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![
                BoundaryEdge { vertices: [0, 1], segment: Segment::Straight, params: [0.0, 1.0] },
                BoundaryEdge { vertices: [1, 2], segment: Segment::Straight, params: [1.0, 2.0] },
                BoundaryEdge { vertices: [2, 0], segment: Segment::Straight, params: [2.0, 3.0] },
            ],
            boundary_flags: vec![],
        };
        mesh.boundary_flags = vec![true; 3];
        FemSpace::new(mesh, Domain::Polygon, WeightMode::Profile).unwrap()
    }

    fn square(h: f64) -> FemSpace {
        let mesh = generate_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], &SizeField::new(h)).unwrap();
        FemSpace::new(mesh, Domain::Polygon, WeightMode::Profile).unwrap()
    }

    fn cusp(alpha: f64, h: f64) -> FemSpace {
        let domain = Domain::Cusp(DomainSpec::power(alpha).unwrap());
        let mesh = generate(&domain, &SizeField::new(h)).unwrap();
        FemSpace::new(mesh, domain, WeightMode::Profile).unwrap()
    }

    #[test]
    fn reference_element_matrices() {
        let s = reference();
        let k = s.stiffness();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        let m = s.mass();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(i, j) - expect[i][j]).abs() < 1e-15);
                let me = if i == j { 2.0 } else { 1.0 } * 0.5 / 12.0;
                assert!((m.get(i, j) - me).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn straight_edge_boundary_mass() {
        let s = reference();
        let b = s.boundary_weighted_mass();
        // edge 0–1 of length 1 with w ≡ 1 contributes 1/6·[[2,1],[1,2]]
        assert!((b.get(0, 1) - 1.0 / 6.0).abs() < 1e-15);
        let l2 = 2f64.sqrt();
        assert!((b.get(1, 1) - (2.0 + 2.0 * l2) / 6.0).abs() < 1e-15);
        assert!((b.quad_form(&[1.0; 3]) - (2.0 + l2)).abs() < 1e-14);
    }

    #[test]
    fn stiffness_kernel_and_linear_energy() {
        let s = square(0.3);
        let k = s.stiffness();
        let ones = vec![1.0; s.dim()];
        assert!(k.matvec(&ones).iter().all(|v| v.abs() < 1e-13));
        let x: Vec<f64> = s.mesh().vertices.iter().map(|p| p[0]).collect();
        assert!((k.quad_form(&x) - 1.0).abs() < 1e-13);
        assert!((s.mass().quad_form(&ones) - 1.0).abs() < 1e-14);
        assert!((s.weighted_perimeter() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn extended_precision_matrix_matches() {
        let s = cusp(2.0, 0.3);
        for problem in [Problem::Harmonic, Problem::Schrodinger] {
            let a = s.system_matrix(problem);
            let d = s.system_matrix_dd(problem).to_f64();
            for (i, j, v) in a.entries() {
                assert!((d.get(i, j) - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn p2_norms_match_matrices() {
        let s = cusp(2.0, 0.3);
        let u: Vec<f64> = s.mesh().vertices.iter().map(|p| (p[0] * 3.0).sin() + p[1] * p[1]).collect();
        let kq = s.stiffness().quad_form(&u);
        let mq = s.mass().quad_form(&u);
        let bq = s.boundary_weighted_mass().quad_form(&u);
        assert!((s.gradient_pnorm(&u, 2.0).unwrap() - kq).abs() < 1e-12 * kq);
        assert!((s.value_pnorm(&u, 2.0).unwrap() - mq).abs() < 1e-12 * mq);
        assert!((s.boundary_weighted_pnorm(&u, 2.0).unwrap() - bq).abs() < 1e-12 * bq);
        let a = s.apply_a(&u, 2.0).unwrap();
        let km = s.system_matrix(Problem::Schrodinger).matvec(&u);
        for (x, y) in a.iter().zip(&km) {
            assert!((x - y).abs() < 1e-12);
        }
        let t = s.tangent(&u, 2.0, 1e-8).unwrap();
        let sys = s.system_matrix(Problem::Schrodinger);
        let scale = sys.max_abs();
        assert!(t.entries().all(|(i, j, v)| (v - sys.get(i, j)).abs() < 1e-14 * scale));
    }

    #[test]
    fn constant_functions() {
        let s = cusp(2.0, 0.3);
        let c = vec![2.0; s.dim()];
        let area = s.area();
        assert!((s.sobolev_pnorm(&c, 3.0).unwrap() - 8.0 * area).abs() < 1e-12 * area);
        assert!(s.rayleigh_quotient(&c, 2.0, Problem::Harmonic).unwrap().abs() < 1e-25);
        let rq = s.rayleigh_quotient(&c, 2.0, Problem::Schrodinger).unwrap();
        assert!((rq - area / s.weighted_perimeter()).abs() < 1e-12);
        let minus = vec![-1.0; s.dim()];
        assert!((s.orthogonality_functional(&minus, 3.0).unwrap() + s.weighted_perimeter()).abs() < 1e-12);
    }

    #[test]
    fn tip_edges_have_small_positive_weight() {
        let s = cusp(3.0, 0.3);
        let b = s.boundary_weighted_mass();
        let tip = s.mesh().vertices.iter().position(|p| *p == [0.0, 0.0]).unwrap();
        let d = b.get(tip, tip);
        assert!(d > 0.0 && d < 1e-12, "tip diagonal {d}");
    }

    #[test]
    fn zero_boundary_norm_is_signalled() {
        let s = square(0.3);
        let u: Vec<f64> = (0..s.dim()).map(|v| if s.mesh().boundary_flags[v] { 0.0 } else { 1.0 }).collect();
        assert!(matches!(s.rayleigh_quotient(&u, 2.0, Problem::Schrodinger), Err(Error::QuotientUndefined)));
        assert_eq!(s.boundary_weighted_pnorm(&u, 3.0).unwrap(), 0.0);
        assert!(s.sobolev_pnorm(&u, 1.0).is_err());
    }

    #[test]
    fn tangent_matches_finite_difference() {
        let s = square(0.4);
        let u: Vec<f64> = s.mesh().vertices.iter().map(|p| 1.0 + p[0] * p[0] - 0.5 * p[1]).collect();
        for p in [1.5, 3.0] {
            let t = s.tangent(&u, p, 0.0).unwrap();
            let dir: Vec<f64> = (0..s.dim()).map(|i| ((i * 37) % 11) as f64 / 11.0 - 0.5).collect();
            let h = 1e-6;
            let up: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
            let um: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
            let (ap, am) = (s.apply_a(&up, p).unwrap(), s.apply_a(&um, p).unwrap());
            let td = t.matvec(&dir);
            for i in 0..s.dim() {
                let fd = (ap[i] - am[i]) / (2.0 * h);
                assert!((fd - td[i]).abs() < 1e-6 * (1.0 + td[i].abs()), "p {p} i {i}: {fd} vs {}", td[i]);
            }
        }
    }
}
