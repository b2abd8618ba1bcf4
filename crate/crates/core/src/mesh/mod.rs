//! Conforming triangulations of the cuspidal domain and of oracle disks.

mod io;
mod mesher;
mod refine;

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{orient, Domain, DomainSpec, Point, Segment, DEFAULT_TIP_GRADING};

pub use io::{read_mesh, write_mesh, parse_mesh, format_mesh};
pub use mesher::{disk_mesh, generate, generate_polygon, Generated, MeshGenerator};
pub use refine::{ladder_mesh, refine_uniform};

/// Boundary edge oriented along the counter-clockwise boundary loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub segment: Segment,
    /// Curve parameter at each endpoint (x₂ on walls, polar angle on arcs).
    pub params: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub boundary_flags: Vec<bool>,
}

/// Target element sizing for [`generate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SizeField {
    pub h_max: f64,
    /// Ratio of consecutive wall heights near the cusp tip.
    pub tip_grading: f64,
    pub min_angle_target: f64,
}

impl SizeField {
    pub fn new(h_max: f64) -> Self {
        SizeField { h_max, tip_grading: DEFAULT_TIP_GRADING, min_angle_target: 25.0 }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.h_max > 0.0 && self.h_max.is_finite()) {
            return Err(Error::Parameter(format!("h_max must be > 0, got {}", self.h_max)));
        }
        if !(self.tip_grading > 0.0 && self.tip_grading < 1.0) {
            return Err(Error::Parameter(format!(
                "tip_grading must lie in (0, 1), got {}",
                self.tip_grading
            )));
        }
        if !(20.0..=30.0).contains(&self.min_angle_target) {
            return Err(Error::Parameter(format!(
                "min_angle_target must lie in [20, 30] degrees, got {}",
                self.min_angle_target
            )));
        }
        Ok(())
    }

    /// Local target size: h_max outside the cusp slab, graded by γ inside it.
    pub fn target(&self, domain: &Domain, x: Point) -> f64 {
        match domain {
            Domain::Cusp(spec) if x[1] <= 1.0 => {
                let g = spec.gamma.value(x[1]).max(spec.tip_cutoff);
                self.h_max.min(2.0 * g)
            }
            _ => self.h_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    /// Degrees.
    pub min_angle: f64,
    /// Longest edge over twice the inradius (√3 for an equilateral triangle).
    pub max_aspect: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub vertices: usize,
    pub triangles: usize,
    pub boundary_edges: usize,
    pub area: f64,
}

pub(crate) fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * orient(a, b, c)
}

fn edge_len(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Interior angles in degrees, at vertices a, b, c.
pub(crate) fn angles_deg(a: Point, b: Point, c: Point) -> [f64; 3] {
    let angle = |p: Point, q: Point, r: Point| {
        let u = [q[0] - p[0], q[1] - p[1]];
        let v = [r[0] - p[0], r[1] - p[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        cross.abs().atan2(dot).to_degrees()
    };
    [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
}

pub fn triangle_quality(a: Point, b: Point, c: Point) -> (f64, f64) {
    let angles = angles_deg(a, b, c);
    let min_angle = angles.iter().cloned().fold(f64::INFINITY, f64::min);
    let (la, lb, lc) = (edge_len(b, c), edge_len(c, a), edge_len(a, b));
    let area = triangle_area(a, b, c).abs();
    let inradius = 2.0 * area / (la + lb + lc);
    let aspect = la.max(lb).max(lc) / (2.0 * inradius);
    (min_angle, aspect)
}

impl TriMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn tri_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.tri_points(t);
                triangle_area(a, b, c)
            })
            .sum()
    }

    /// Undirected edges with the number of incident triangles.
    pub fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for t in &self.triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn num_edges(&self) -> usize {
        self.edge_counts().len()
    }

    /// Checks every structural invariant: positive areas, edge-manifoldness,
    /// boundary edges equal to the one-triangle edges, consistent flags.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::Validation(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Validation(format!("triangle {t} repeats a vertex")));
            }
            let [a, b, c] = self.tri_points(t);
            if !(triangle_area(a, b, c) > 0.0) {
                return Err(Error::Validation(format!("triangle {t} has non-positive area")));
            }
        }
        let counts = self.edge_counts();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for i in 0..3 {
                *directed.entry((tri[i], tri[(i + 1) % 3])).or_insert(0) += 1;
            }
        }
        if let Some((e, _)) = directed.iter().find(|(_, &c)| c > 1) {
            return Err(Error::Validation(format!("directed edge {e:?} used twice (orientation clash)")));
        }
        if let Some((e, c)) = counts.iter().find(|(_, &c)| c > 2) {
            return Err(Error::Validation(format!("edge {e:?} shared by {c} triangles")));
        }
        let boundary_count = counts.values().filter(|&&c| c == 1).count();
        if boundary_count != self.boundary_edges.len() {
            return Err(Error::Validation(format!(
                "{} one-triangle edges but {} boundary edges listed",
                boundary_count,
                self.boundary_edges.len()
            )));
        }
        let mut flags = vec![false; n];
        for e in &self.boundary_edges {
            let [a, b] = e.vertices;
            if a >= n || b >= n {
                return Err(Error::Validation("boundary edge references a missing vertex".into()));
            }
            if directed.get(&(a, b)) != Some(&1) || counts.get(&(a.min(b), a.max(b))) != Some(&1) {
                return Err(Error::Validation(format!(
                    "boundary edge ({a}, {b}) is not a counter-clockwise one-triangle edge"
                )));
            }
            flags[a] = true;
            flags[b] = true;
        }
        if flags != self.boundary_flags {
            return Err(Error::Validation("boundary flags disagree with boundary edges".into()));
        }
        Ok(())
    }

    pub(crate) fn rebuild_flags(&mut self) {
        let mut flags = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            flags[e.vertices[0]] = true;
            flags[e.vertices[1]] = true;
        }
        self.boundary_flags = flags;
    }

    /// Largest distance of a boundary vertex from its tagged curve.
    pub fn boundary_snap_error(&self, domain: &Domain) -> f64 {
        let mut worst: f64 = 0.0;
        for e in &self.boundary_edges {
            for k in 0..2 {
                if let Some(p) = domain.curve_point(e.segment, e.params[k]) {
                    worst = worst.max(edge_len(p, self.vertices[e.vertices[k]]));
                }
            }
        }
        worst
    }

    /// Applies a vertex permutation: new index of old vertex `v` is `perm[v]`.
    pub fn renumbered(&self, perm: &[usize]) -> TriMesh {
        let mut vertices = vec![[0.0; 2]; self.vertices.len()];
        for (old, &new) in perm.iter().enumerate() {
            vertices[new] = self.vertices[old];
        }
        let mut mesh = TriMesh {
            vertices,
            triangles: self.triangles.iter().map(|t| t.map(|v| perm[v])).collect(),
            boundary_edges: self
                .boundary_edges
                .iter()
                .map(|e| BoundaryEdge { vertices: e.vertices.map(|v| perm[v]), ..*e })
                .collect(),
            boundary_flags: Vec::new(),
        };
        mesh.rebuild_flags();
        mesh
    }

    /// Boundary vertices ordered along the boundary loop, starting from the
    /// first listed boundary edge.
    pub fn boundary_loop(&self) -> Vec<usize> {
        if self.boundary_edges.is_empty() {
            return Vec::new();
        }
        let next: HashMap<usize, usize> =
            self.boundary_edges.iter().map(|e| (e.vertices[0], e.vertices[1])).collect();
        let start = self.boundary_edges[0].vertices[0];
        let mut order = vec![start];
        let mut v = next[&start];
        while v != start && order.len() <= self.boundary_edges.len() {
            order.push(v);
            v = next[&v];
        }
        order
    }
}

/// Pure diagnostic over all triangles.
pub fn mesh_quality(mesh: &TriMesh) -> QualityReport {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    let mut h_max: f64 = 0.0;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.tri_points(t);
        let (angle, aspect) = triangle_quality(a, b, c);
        min_angle = min_angle.min(angle);
        max_aspect = max_aspect.max(aspect);
        for (p, q) in [(a, b), (b, c), (c, a)] {
            let l = edge_len(p, q);
            h_min = h_min.min(l);
            h_max = h_max.max(l);
        }
    }
    QualityReport {
        min_angle,
        max_aspect,
        h_min,
        h_max,
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        boundary_edges: mesh.boundary_edges.len(),
        area: mesh.area(),
    }
}

/// Whether the angle guarantee is waived for a triangle: it touches the
/// cusp tip or lies in the part of the cusp channel narrower than the
/// geometric wall spacing.
pub fn quality_exempt(domain: &Domain, size: &SizeField, tri: [Point; 3]) -> bool {
    let Some(spec) = domain.cusp() else {
        return false;
    };
    if tri.iter().any(|p| p[0] == 0.0 && p[1] == 0.0) {
        return true;
    }
    in_narrow_channel(narrow_height(spec, size), centroid(tri))
}

pub(crate) fn narrow_height(spec: &DomainSpec, size: &SizeField) -> f64 {
    spec.narrow_channel_height(size.tip_grading)
}

pub(crate) fn in_narrow_channel(height: f64, x: Point) -> bool {
    height > 0.0 && x[1] <= height
}

pub(crate) fn centroid(tri: [Point; 3]) -> Point {
    [
        (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0,
        (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilateral_and_right_triangle_quality() {
        let s3 = 3f64.sqrt();
        let (angle, aspect) = triangle_quality([0.0, 0.0], [1.0, 0.0], [0.5, s3 / 2.0]);
        assert!((angle - 60.0).abs() < 1e-12);
        assert!((aspect - s3).abs() < 1e-12);
        let (angle, _) = triangle_quality([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert!((angle - 45.0).abs() < 1e-12);
    }

    #[test]
    fn size_field_checks() {
        assert!(SizeField::new(0.1).check().is_ok());
        assert!(SizeField { min_angle_target: 35.0, ..SizeField::new(0.1) }.check().is_err());
        assert!(SizeField::new(0.0).check().is_err());
        assert!(SizeField { tip_grading: 1.0, ..SizeField::new(0.1) }.check().is_err());
    }
}
