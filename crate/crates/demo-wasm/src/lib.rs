//! Browser bindings: mesh a cuspidal domain, compute linear Steklov modes,
//! and run the p-Steklov inverse iteration. Results cross the boundary as
//! JSON strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use cuspsteklov::assembly::{FemSpace, Problem};
use cuspsteklov::geometry::{Domain, DomainSpec, WeightMode};
use cuspsteklov::linear_eigen::SteklovSolver;
use cuspsteklov::mesh::{ladder_mesh, mesh_quality, QualityReport, TriMesh};
use cuspsteklov::p_solver::{constant_start, default_outer_tol, inverse_iteration, InnerSolveConfig};

/// Smallest mesh size accepted from the page, to keep solves interactive.
const MIN_HMAX: f64 = 0.08;

#[derive(Serialize)]
pub struct MeshView {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<usize>,
    pub quality: QualityReport,
}

impl MeshView {
    fn new(mesh: &TriMesh) -> MeshView {
        MeshView {
            vertices: mesh.vertices.clone(),
            triangles: mesh.triangles.clone(),
            boundary: mesh.boundary_loop(),
            quality: mesh_quality(mesh),
        }
    }
}

#[derive(Serialize)]
pub struct ModesView {
    pub mesh: MeshView,
    pub eigenvalues: Vec<f64>,
    /// Nodal values of each eigenfunction.
    pub modes: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct PrincipalView {
    pub mesh: MeshView,
    pub p: f64,
    pub mu: f64,
    pub history: Vec<f64>,
    pub converged: bool,
    pub w: Vec<f64>,
}

fn domain(alpha: f64) -> Result<Domain, String> {
    Ok(Domain::Cusp(DomainSpec::power(alpha).map_err(|e| e.to_string())?))
}

fn mesh(alpha: f64, hmax: f64) -> Result<(Domain, TriMesh), String> {
    if !(MIN_HMAX..=1.0).contains(&hmax) {
        return Err(format!("mesh size must lie in [{MIN_HMAX}, 1], got {hmax}"));
    }
    let d = domain(alpha)?;
    let m = ladder_mesh(&d, hmax, 0).map_err(|e| e.to_string())?;
    Ok((d, m))
}

pub fn mesh_view(alpha: f64, hmax: f64) -> Result<MeshView, String> {
    Ok(MeshView::new(&mesh(alpha, hmax)?.1))
}

pub fn modes_view(alpha: f64, hmax: f64, k: usize, weighted: bool, schrodinger: bool) -> Result<ModesView, String> {
    let (d, m) = mesh(alpha, hmax)?;
    let mode = if weighted { WeightMode::Profile } else { WeightMode::Unweighted };
    let space = FemSpace::new(m, d, mode).map_err(|e| e.to_string())?;
    let problem = if schrodinger { Problem::Schrodinger } else { Problem::Harmonic };
    let res = SteklovSolver::new(&space, problem).and_then(|s| s.solve(k.clamp(1, 12), false)).map_err(|e| e.to_string())?;
    Ok(ModesView {
        mesh: MeshView::new(space.mesh()),
        eigenvalues: res.eigenvalues(),
        modes: res.pairs.into_iter().map(|p| p.volume).collect(),
    })
}

pub fn principal_view(alpha: f64, hmax: f64, p: f64) -> Result<PrincipalView, String> {
    if !(1.1..=6.0).contains(&p) {
        return Err(format!("p must lie in [1.1, 6], got {p}"));
    }
    let (d, m) = mesh(alpha, hmax)?;
    let space = FemSpace::new(m, d, WeightMode::Profile).map_err(|e| e.to_string())?;
    let trace = inverse_iteration(&space, p, &constant_start(&space), &InnerSolveConfig::default(), default_outer_tol(p), 300)
        .map_err(|e| e.to_string())?;
    Ok(PrincipalView {
        mesh: MeshView::new(space.mesh()),
        p,
        mu: trace.mu,
        history: trace.steps.iter().map(|s| s.mu).collect(),
        converged: trace.converged,
        w: trace.w_limit,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Mesh of the domain with γ(t) = t^α as JSON.
#[wasm_bindgen]
pub fn mesh_domain(alpha: f64, hmax: f64) -> Result<String, JsError> {
    to_js(mesh_view(alpha, hmax))
}

/// The k smallest linear Steklov eigenpairs as JSON.
#[wasm_bindgen]
pub fn steklov_modes(alpha: f64, hmax: f64, k: usize, weighted: bool, schrodinger: bool) -> Result<String, JsError> {
    to_js(modes_view(alpha, hmax, k, weighted, schrodinger))
}

/// Principal p-Steklov eigenpair by inverse iteration as JSON.
#[wasm_bindgen]
pub fn principal_p(alpha: f64, hmax: f64, p: f64) -> Result<String, JsError> {
    to_js(principal_view(alpha, hmax, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn views_are_consistent() {
        let m = mesh_view(2.0, 0.3).unwrap();
        assert!(m.triangles.iter().flatten().all(|&v| v < m.vertices.len()));
        let modes = modes_view(2.0, 0.3, 3, true, false).unwrap();
        assert_eq!(modes.eigenvalues.len(), 3);
        assert!(modes.eigenvalues[0].abs() < 1e-9);
        assert_eq!(modes.modes[1].len(), modes.mesh.vertices.len());
        let pr = principal_view(2.0, 0.3, 3.0).unwrap();
        assert!(pr.converged);
        assert!(pr.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        assert!(mesh_view(0.5, 0.3).is_err());
        assert!(mesh_view(2.0, 0.01).is_err());
        assert!(principal_view(2.0, 0.3, 8.0).is_err());
    }
}
