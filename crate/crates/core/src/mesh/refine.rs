use std::collections::HashMap;

use super::{triangle_area, BoundaryEdge, TriMesh};
use crate::error::{Error, Result};
use crate::geometry::Domain;

/// Base mesh at `h_max` refined uniformly `level` times.
pub fn ladder_mesh(domain: &Domain, h_max: f64, level: usize) -> Result<TriMesh> {
    let mut mesh = super::generate(domain, &super::SizeField::new(h_max))?;
    for _ in 0..level {
        mesh = refine_uniform(&mesh, domain)?;
    }
    Ok(mesh)
}

/// Red refinement: every triangle is split into four by its edge midpoints.
/// Midpoints of boundary edges are moved onto the boundary curve.
pub fn refine_uniform(mesh: &TriMesh, domain: &Domain) -> Result<TriMesh> {
    mesh.validate()?;
    let mut vertices = mesh.vertices.clone();
    let mut boundary_mid: HashMap<(usize, usize), (usize, f64)> = HashMap::new();
    let mut chord_mid: HashMap<usize, [f64; 2]> = HashMap::new();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();

    for e in &mesh.boundary_edges {
        let [a, b] = e.vertices;
        let param = 0.5 * (e.params[0] + e.params[1]);
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let chord = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        vertices.push(domain.curve_point(e.segment, param).unwrap_or(chord));
        let v = vertices.len() - 1;
        chord_mid.insert(v, chord);
        boundary_mid.insert((a, b), (v, param));
        mid.insert((a.min(b), a.max(b)), v);
    }

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for tri in &mesh.triangles {
        let mut m = [0usize; 3];
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            m[i] = *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                vertices.len() - 1
            });
        }
        let [a, b, c] = *tri;
        triangles.push([a, m[0], m[2]]);
        triangles.push([m[0], b, m[1]]);
        triangles.push([m[2], m[1], c]);
        triangles.push([m[0], m[1], m[2]]);
    }

    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let [a, b] = e.vertices;
        let (v, param) = boundary_mid[&(a, b)];
        boundary_edges.push(BoundaryEdge { vertices: [a, v], segment: e.segment, params: [e.params[0], param] });
        boundary_edges.push(BoundaryEdge { vertices: [v, b], segment: e.segment, params: [param, e.params[1]] });
    }

    // Where the curve is closer to its chord than the geometric tolerance
    // (the last micro-segments at the cusp tip), an inverted child is
    // repaired by keeping the chord midpoint.
    let tolerance = match domain {
        Domain::Cusp(spec) => spec.tolerance(),
        _ => 0.0,
    };
    let inverted = |vertices: &[[f64; 2]]| -> Vec<usize> {
        (0..triangles.len())
            .filter(|&t| {
                let [a, b, c] = triangles[t].map(|v| vertices[v]);
                !(triangle_area(a, b, c) > 0.0)
            })
            .collect()
    };
    for t in inverted(&vertices) {
        for v in triangles[t] {
            if let Some(&chord) = chord_mid.get(&v) {
                let p = vertices[v];
                if (p[0] - chord[0]).hypot(p[1] - chord[1]) <= tolerance {
                    vertices[v] = chord;
                }
            }
        }
    }
    if let Some(&t) = inverted(&vertices).first() {
        return Err(Error::Mesh(format!(
            "boundary snapping inverted child triangle {t}; the input mesh is too coarse for the curve"
        )));
    }

    let mut out = TriMesh { vertices, triangles, boundary_edges, boundary_flags: Vec::new() };
    out.rebuild_flags();
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::mesh::{disk_mesh, generate, SizeField};

    #[test]
    fn quadruples_triangles_and_keeps_vertices() {
        let mesh = disk_mesh(1.0, 0.4).unwrap();
        let fine = refine_uniform(&mesh, &Domain::Disk { radius: 1.0 }).unwrap();
        assert_eq!(fine.triangles.len(), 4 * mesh.triangles.len());
        assert_eq!(&fine.vertices[..mesh.vertices.len()], &mesh.vertices[..]);
        for e in &fine.boundary_edges {
            for v in e.vertices {
                let p = fine.vertices[v];
                assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(fine.vertices.len() + fine.triangles.len() - fine.num_edges(), 1);
    }

    #[test]
    fn cusp_ladder_stays_valid_and_snapped() {
        let domain = Domain::Cusp(DomainSpec::power(3.0).unwrap());
        let mut mesh = generate(&domain, &SizeField::new(0.25)).unwrap();
        for _ in 0..2 {
            mesh = refine_uniform(&mesh, &domain).unwrap();
            assert!(mesh.boundary_snap_error(&domain) <= domain.cusp().unwrap().tolerance());
        }
        let exact_area = {
            // cusp part below the wall exit plus the disk minus its lower cap
            let spec = domain.cusp().unwrap();
            let n = 200_000;
            let exit = spec.wall_exit();
            let cusp: f64 = (0..n)
                .map(|i| {
                    let t = exit * (i as f64 + 0.5) / n as f64;
                    2.0 * spec.gamma.value(t)
                })
                .sum::<f64>()
                * exit
                / n as f64;
            let r = crate::geometry::DISK_RADIUS;
            let d = 2.0 - exit;
            let cap = r * r * (d / r).acos() - d * (r * r - d * d).sqrt();
            cusp + std::f64::consts::PI * r * r - cap
        };
        assert!((mesh.area() - exact_area).abs() < 5e-3, "{} vs {}", mesh.area(), exact_area);
    }
}
