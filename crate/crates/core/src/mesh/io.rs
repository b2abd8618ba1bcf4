use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use super::{triangle_area, BoundaryEdge, TriMesh};
use crate::error::{Error, Result};
use crate::geometry::Segment;

const HEADER: &str = "trimesh 1";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Text form of a mesh; coordinates carry 17 significant digits, enough to
/// round-trip every double exactly.
pub fn format_mesh(mesh: &TriMesh) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "V {}", mesh.vertices.len()).unwrap();
    for p in &mesh.vertices {
        writeln!(s, "{} {}", num(p[0]), num(p[1])).unwrap();
    }
    writeln!(s, "T {}", mesh.triangles.len()).unwrap();
    for t in &mesh.triangles {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "B {}", mesh.boundary_edges.len()).unwrap();
    for e in &mesh.boundary_edges {
        writeln!(
            s,
            "{} {} {} {} {}",
            e.vertices[0],
            e.vertices[1],
            e.segment.name(),
            num(e.params[0]),
            num(e.params[1])
        )
        .unwrap();
    }
    s
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.iter.by_ref() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok((i + 1, fields));
            }
        }
        Err(Error::Parse { line: 0, msg: "unexpected end of file".into() })
    }
}

fn parse_field<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, msg: format!("invalid {what} '{s}'") })
}

fn count_line(lines: &mut Lines, tag: &str) -> Result<usize> {
    let (line, f) = lines.next()?;
    if f.len() != 2 || f[0] != tag {
        return Err(Error::Parse { line, msg: format!("expected '{tag} <count>'") });
    }
    parse_field(line, f[1], "count")
}

/// Parses the text form. Clockwise triangles are reoriented with a warning;
/// the result is validated.
pub fn parse_mesh(text: &str) -> Result<TriMesh> {
    let mut lines = Lines { iter: text.lines().enumerate() };
    let (line, header) = lines.next()?;
    if header.join(" ") != HEADER {
        return Err(Error::Parse { line, msg: format!("expected header '{HEADER}'") });
    }
    let nv = count_line(&mut lines, "V")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, f) = lines.next()?;
        if f.len() != 2 {
            return Err(Error::Parse { line, msg: "vertex line needs 2 coordinates".into() });
        }
        let p = [parse_field(line, f[0], "coordinate")?, parse_field(line, f[1], "coordinate")?];
        if !(p[0] as f64).is_finite() || !(p[1] as f64).is_finite() {
            return Err(Error::Parse { line, msg: "non-finite coordinate".into() });
        }
        vertices.push(p);
    }
    let nt = count_line(&mut lines, "T")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut flipped = 0usize;
    for _ in 0..nt {
        let (line, f) = lines.next()?;
        if f.len() != 3 {
            return Err(Error::Parse { line, msg: "triangle line needs 3 indices".into() });
        }
        let mut t = [0usize; 3];
        for k in 0..3 {
            t[k] = parse_field(line, f[k], "vertex index")?;
            if t[k] >= nv {
                return Err(Error::Parse {
                    line,
                    msg: format!("vertex index {} out of range (V = {nv})", t[k]),
                });
            }
        }
        let [a, b, c] = t.map(|v| vertices[v]);
        if triangle_area(a, b, c) < 0.0 {
            t.swap(1, 2);
            flipped += 1;
        }
        triangles.push(t);
    }
    if flipped > 0 {
        warn!("reoriented {flipped} clockwise triangle(s) to counter-clockwise");
    }
    let nb = count_line(&mut lines, "B")?;
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, f) = lines.next()?;
        if f.len() != 5 {
            return Err(Error::Parse { line, msg: "boundary line needs 'i j tag p_i p_j'".into() });
        }
        let a: usize = parse_field(line, f[0], "vertex index")?;
        let b: usize = parse_field(line, f[1], "vertex index")?;
        if a >= nv || b >= nv {
            return Err(Error::Parse { line, msg: "boundary vertex index out of range".into() });
        }
        let segment = Segment::from_name(f[2])
            .ok_or_else(|| Error::Parse { line, msg: format!("unknown segment tag '{}'", f[2]) })?;
        let params = [parse_field(line, f[3], "parameter")?, parse_field(line, f[4], "parameter")?];
        boundary_edges.push(BoundaryEdge { vertices: [a, b], segment, params });
    }
    let mut mesh = TriMesh { vertices, triangles, boundary_edges, boundary_flags: Vec::new() };
    if flipped > 0 {
        // boundary edges follow the triangles' orientation
        let directed: std::collections::HashSet<(usize, usize)> = mesh
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |i| (t[i], t[(i + 1) % 3])))
            .collect();
        for e in &mut mesh.boundary_edges {
            if !directed.contains(&(e.vertices[0], e.vertices[1])) {
                e.vertices.swap(0, 1);
                e.params.swap(0, 1);
            }
        }
    }
    mesh.rebuild_flags();
    mesh.validate()?;
    Ok(mesh)
}

pub fn write_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_polygon, SizeField};

    fn square() -> TriMesh {
        generate_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], &SizeField::new(5.0)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let mut mesh = square();
        mesh.vertices[2] = [1.0 + f64::EPSILON, 0.1 + 0.2];
        let text = format_mesh(&mesh);
        assert_eq!(parse_mesh(&text).unwrap(), mesh);
    }

    #[test]
    fn out_of_range_index_is_a_parse_error() {
        let text = "trimesh 1\nV 3\n0 0\n1 0\n0 1\nT 1\n0 1 7\nB 0\n";
        match parse_mesh(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clockwise_triangle_is_reoriented() {
        let text = "trimesh 1\nV 3\n0 0\n1 0\n0 1\nT 1\n0 2 1\nB 3\n0 2 straight 0 1\n2 1 straight 1 2\n1 0 straight 2 3\n";
        let mesh = parse_mesh(text).unwrap();
        assert_eq!(mesh.triangles[0], [0, 1, 2]);
        assert!(mesh.area() > 0.0);
    }

    #[test]
    fn bad_header() {
        assert!(matches!(parse_mesh("mesh 2\n"), Err(Error::Parse { line: 1, .. })));
    }
}
