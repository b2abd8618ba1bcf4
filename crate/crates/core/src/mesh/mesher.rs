//! Constrained Delaunay triangulation of a simple polygon followed by
//! Ruppert-style refinement.
//!
//! The polygon is ear-clipped and legalised with Lawson flips; Steiner points
//! are then inserted one at a time (edge split for encroached boundary
//! segments, circumcenter for poor or oversized triangles), each insertion
//! followed by flips that respect the constrained segments. Everything is
//! sequential and index-ordered, so identical input gives an identical mesh.

use std::collections::{HashMap, HashSet, VecDeque};

use log::debug;

use super::{
    angles_deg, centroid, in_narrow_channel, narrow_height, BoundaryEdge, SizeField, TriMesh,
};
use crate::error::{Error, Result};
use crate::geometry::{check_simple_ccw, orient, Domain, Point, Segment};

const NONE: usize = usize::MAX;
const DEFAULT_BUDGET: usize = 400_000;

#[derive(Clone, Copy, Debug)]
struct SegInfo {
    /// Directed along the counter-clockwise boundary.
    from: usize,
    to: usize,
    segment: Segment,
    params: [f64; 2],
    exempt: bool,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

/// Scale-aware strict in-circle test.
fn strictly_inside(a: Point, b: Point, c: Point, d: Point) -> bool {
    let det = incircle(a, b, c, d);
    let l2 = |p: Point, q: Point| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    let scale = l2(a, d).max(l2(b, d)).max(l2(c, d));
    det > 1e-12 * scale * orient(a, b, c).abs().max(1e-300)
}

fn circumcenter(a: Point, b: Point, c: Point) -> Point {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    [a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d]
}

fn len2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

enum Location {
    Inside(usize),
    OnEdge(usize, usize),
    Blocked(usize, usize),
}

struct Cdt {
    pts: Vec<Point>,
    tris: Vec<[usize; 3]>,
    /// `nbr[t][i]` lies across the edge opposite vertex `i`.
    nbr: Vec<[usize; 3]>,
    vtri: Vec<usize>,
    segs: HashMap<(usize, usize), SegInfo>,
    touched: Vec<usize>,
}

impl Cdt {
    fn edge(&self, t: usize, i: usize) -> (usize, usize) {
        let tri = self.tris[t];
        (tri[(i + 1) % 3], tri[(i + 2) % 3])
    }

    fn is_constrained(&self, t: usize, i: usize) -> bool {
        let (a, b) = self.edge(t, i);
        self.segs.contains_key(&key(a, b))
    }

    fn set_tri(&mut self, t: usize, tri: [usize; 3], nbr: [usize; 3]) {
        if t == self.tris.len() {
            self.tris.push(tri);
            self.nbr.push(nbr);
        } else {
            self.tris[t] = tri;
            self.nbr[t] = nbr;
        }
        for v in tri {
            self.vtri[v] = t;
        }
        self.touched.push(t);
    }

    fn replace_nbr(&mut self, t: usize, old: usize, new: usize) {
        if t == NONE {
            return;
        }
        for k in 0..3 {
            if self.nbr[t][k] == old {
                self.nbr[t][k] = new;
                return;
            }
        }
    }

    fn index_of(&self, t: usize, v: usize) -> usize {
        self.tris[t].iter().position(|&x| x == v).expect("vertex in triangle")
    }

    /// Ear clipping of a counter-clockwise simple polygon.
    fn from_polygon(pts: Vec<Point>, segs: Vec<SegInfo>) -> Result<Cdt> {
        let n = pts.len();
        let mut ring: Vec<usize> = (0..n).collect();
        let mut tris: Vec<[usize; 3]> = Vec::with_capacity(n.saturating_sub(2));
        let mut cursor = 0;
        while ring.len() > 3 {
            let m = ring.len();
            let mut found = None;
            // best ear among the convex, empty candidates: largest minimum angle
            let mut best_quality = -1.0;
            for step in 0..m {
                let k = (cursor + step) % m;
                let (ip, ic, inx) = (ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]);
                let (a, b, c) = (pts[ip], pts[ic], pts[inx]);
                let area = orient(a, b, c);
                let scale = len2(a, b).max(len2(b, c)).max(len2(c, a));
                if area <= 1e-14 * scale {
                    continue;
                }
                let blocked = ring.iter().any(|&v| {
                    if v == ip || v == ic || v == inx {
                        return false;
                    }
                    let p = pts[v];
                    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
                });
                if blocked {
                    continue;
                }
                let q = angles_deg(a, b, c).iter().cloned().fold(f64::INFINITY, f64::min);
                if q > best_quality {
                    best_quality = q;
                    found = Some(k);
                }
            }
            let Some(k) = found else {
                return Err(Error::Mesh("ear clipping failed: polygon not simple".into()));
            };
            let m = ring.len();
            tris.push([ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]]);
            ring.remove(k);
            cursor = k % ring.len();
        }
        let (a, b, c) = (pts[ring[0]], pts[ring[1]], pts[ring[2]]);
        if orient(a, b, c) <= 0.0 {
            return Err(Error::Mesh("ear clipping left a degenerate triangle".into()));
        }
        tris.push([ring[0], ring[1], ring[2]]);

        let mut edge_map: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in tris.iter().enumerate() {
            for i in 0..3 {
                edge_map.insert((tri[(i + 1) % 3], tri[(i + 2) % 3]), (t, i));
            }
        }
        let mut nbr = vec![[NONE; 3]; tris.len()];
        for (t, tri) in tris.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                if let Some(&(u, _)) = edge_map.get(&(b, a)) {
                    nbr[t][i] = u;
                }
            }
        }
        let mut vtri = vec![NONE; n];
        for (t, tri) in tris.iter().enumerate() {
            for &v in tri {
                vtri[v] = t;
            }
        }
        let segs = segs.into_iter().map(|s| (key(s.from, s.to), s)).collect();
        let mut cdt = Cdt { pts, tris, nbr, vtri, segs, touched: Vec::new() };
        cdt.legalize_all();
        Ok(cdt)
    }

    /// Flips the edge opposite vertex `i` of `t`. Returns the two new triangles.
    fn flip(&mut self, t: usize, i: usize) -> (usize, usize) {
        let u = self.nbr[t][i];
        let tri = self.tris[t];
        let (a, b, c) = (tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]);
        let n_ca = self.nbr[t][(i + 1) % 3];
        let n_ab = self.nbr[t][(i + 2) % 3];
        let ib = self.index_of(u, b);
        let ic = self.index_of(u, c);
        let id = 3 - ib - ic;
        let d = self.tris[u][id];
        let n_bd = self.nbr[u][ic];
        let n_dc = self.nbr[u][ib];
        self.set_tri(t, [a, b, d], [n_bd, u, n_ab]);
        self.set_tri(u, [a, d, c], [n_dc, n_ca, t]);
        self.replace_nbr(n_bd, u, t);
        self.replace_nbr(n_ca, t, u);
        (t, u)
    }

    fn flip_is_valid(&self, t: usize, i: usize) -> bool {
        let u = self.nbr[t][i];
        if u == NONE || self.is_constrained(t, i) {
            return false;
        }
        let tri = self.tris[t];
        let (a, b, c) = (tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]);
        let d = self.tris[u].iter().copied().find(|&v| v != b && v != c).unwrap();
        let (pa, pb, pc, pd) = (self.pts[a], self.pts[b], self.pts[c], self.pts[d]);
        orient(pa, pb, pd) > 0.0 && orient(pa, pd, pc) > 0.0 && strictly_inside(pa, pb, pc, pd)
    }

    fn legalize_all(&mut self) {
        let mut stack: Vec<(usize, usize)> =
            (0..self.tris.len()).flat_map(|t| (0..3).map(move |i| (t, i))).collect();
        stack.reverse();
        let mut guard = 0usize;
        while let Some((t, i)) = stack.pop() {
            guard += 1;
            if guard > 50_000_000 {
                break;
            }
            if !self.flip_is_valid(t, i) {
                continue;
            }
            let (t1, t2) = self.flip(t, i);
            for tt in [t1, t2] {
                for k in 0..3 {
                    stack.push((tt, k));
                }
            }
        }
    }

    /// Restores local Delaunayhood around a freshly inserted vertex `p`.
    fn legalize_around(&mut self, p: usize, mut stack: Vec<usize>) {
        while let Some(t) = stack.pop() {
            let Some(ip) = self.tris[t].iter().position(|&v| v == p) else {
                continue;
            };
            if self.flip_is_valid(t, ip) {
                let (t1, t2) = self.flip(t, ip);
                stack.push(t1);
                stack.push(t2);
            }
        }
    }

    fn add_point(&mut self, p: Point) -> usize {
        self.pts.push(p);
        self.vtri.push(NONE);
        self.pts.len() - 1
    }

    fn insert_in_triangle(&mut self, t: usize, p: Point) -> usize {
        let v = self.add_point(p);
        let [a, b, c] = self.tris[t];
        let [n_bc, n_ca, n_ab] = self.nbr[t];
        let t1 = self.tris.len();
        let t2 = t1 + 1;
        self.set_tri(t, [a, b, v], [t1, t2, n_ab]);
        self.set_tri(t1, [b, c, v], [t2, t, n_bc]);
        self.set_tri(t2, [c, a, v], [t, t1, n_ca]);
        self.replace_nbr(n_bc, t, t1);
        self.replace_nbr(n_ca, t, t2);
        self.legalize_around(v, vec![t, t1, t2]);
        v
    }

    /// Splits the edge opposite vertex `i` of `t` at `p`. A constrained edge
    /// is replaced by its two halves with the given midpoint parameter.
    fn insert_on_edge(&mut self, t: usize, i: usize, p: Point, mid_param: Option<f64>) -> usize {
        let v = self.add_point(p);
        let tri = self.tris[t];
        let (a, b, c) = (tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]);
        let n_ca = self.nbr[t][(i + 1) % 3];
        let n_ab = self.nbr[t][(i + 2) % 3];
        let u = self.nbr[t][i];
        let t1 = self.tris.len();
        let mut created = vec![t, t1];
        if u == NONE {
            self.set_tri(t, [a, b, v], [NONE, t1, n_ab]);
            self.set_tri(t1, [a, v, c], [NONE, n_ca, t]);
            self.replace_nbr(n_ca, t, t1);
        } else {
            let u1 = t1 + 1;
            let ib = self.index_of(u, b);
            let ic = self.index_of(u, c);
            let d = self.tris[u][3 - ib - ic];
            let n_dc = self.nbr[u][ib];
            let n_bd = self.nbr[u][ic];
            self.set_tri(t, [a, b, v], [u1, t1, n_ab]);
            self.set_tri(t1, [a, v, c], [u, n_ca, t]);
            self.set_tri(u, [c, v, d], [u1, n_dc, t1]);
            self.set_tri(u1, [v, b, d], [n_bd, u, t]);
            self.replace_nbr(n_ca, t, t1);
            self.replace_nbr(n_bd, u, u1);
            created.extend([u, u1]);
        }
        if let Some(seg) = self.segs.remove(&key(b, c)) {
            let mid = mid_param.unwrap_or(0.5 * (seg.params[0] + seg.params[1]));
            let (s, e) = (seg.from, seg.to);
            self.segs.insert(
                key(s, v),
                SegInfo { from: s, to: v, params: [seg.params[0], mid], ..seg },
            );
            self.segs.insert(
                key(v, e),
                SegInfo { from: v, to: e, params: [mid, seg.params[1]], ..seg },
            );
        }
        self.legalize_around(v, created);
        v
    }

    /// Triangle and local index such that the edge opposite that index is a→b.
    fn find_directed_edge(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        let check = |t: usize| -> Option<(usize, usize)> {
            let tri = self.tris[t];
            (0..3).find(|&i| tri[(i + 1) % 3] == a && tri[(i + 2) % 3] == b).map(|i| (t, i))
        };
        let start = self.vtri[a];
        if start != NONE && self.tris[start].contains(&a) {
            // rotate around a in both directions
            let mut t = start;
            for _ in 0..64 {
                if let Some(hit) = check(t) {
                    return Some(hit);
                }
                let ia = self.index_of(t, a);
                let next = self.nbr[t][(ia + 1) % 3];
                if next == NONE || next == start {
                    break;
                }
                t = next;
            }
            let mut t = start;
            for _ in 0..64 {
                if let Some(hit) = check(t) {
                    return Some(hit);
                }
                let ia = self.index_of(t, a);
                let next = self.nbr[t][(ia + 2) % 3];
                if next == NONE || next == start {
                    break;
                }
                t = next;
            }
        }
        (0..self.tris.len()).find_map(check)
    }

    fn locate(&self, start: usize, p: Point) -> Location {
        let mut t = start;
        for rotate in 0..(4 * self.tris.len() + 16) {
            let tri = self.tris[t];
            let mut moved = false;
            let mut zero_edge = None;
            for s in 0..3 {
                let i = (s + rotate) % 3;
                let (a, b) = (self.pts[tri[(i + 1) % 3]], self.pts[tri[(i + 2) % 3]]);
                let o = orient(a, b, p);
                let scale = len2(a, b);
                if o < -1e-13 * scale {
                    if self.nbr[t][i] == NONE || self.is_constrained(t, i) {
                        return Location::Blocked(t, i);
                    }
                    t = self.nbr[t][i];
                    moved = true;
                    break;
                } else if o <= 1e-13 * scale {
                    zero_edge = Some(i);
                }
            }
            if !moved {
                return match zero_edge {
                    Some(i) => Location::OnEdge(t, i),
                    None => Location::Inside(t),
                };
            }
        }
        // walking cycled; fall back to a scan
        for t in 0..self.tris.len() {
            let tri = self.tris[t];
            let p3 = tri.map(|v| self.pts[v]);
            if orient(p3[0], p3[1], p) >= 0.0 && orient(p3[1], p3[2], p) >= 0.0 && orient(p3[2], p3[0], p) >= 0.0 {
                return Location::Inside(t);
            }
        }
        Location::Blocked(start, 0)
    }

    /// Constrained edges bounding the Bowyer–Watson cavity of `p`.
    fn cavity_segments(&self, start: usize, p: Point) -> Vec<(usize, usize)> {
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        let mut out = Vec::new();
        while let Some(t) = queue.pop_front() {
            for i in 0..3 {
                let (a, b) = self.edge(t, i);
                if self.segs.contains_key(&key(a, b)) {
                    out.push(key(a, b));
                    continue;
                }
                let u = self.nbr[t][i];
                if u == NONE || seen.contains(&u) {
                    continue;
                }
                let [x, y, z] = self.tris[u].map(|v| self.pts[v]);
                if strictly_inside(x, y, z, p) {
                    seen.insert(u);
                    queue.push_back(u);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn encroaches(a: Point, b: Point, p: Point) -> bool {
    (a[0] - p[0]) * (b[0] - p[0]) + (a[1] - p[1]) * (b[1] - p[1]) < 0.0
}

/// Output of a generator run: the mesh plus the constrained edges, which
/// are exempt from the Delaunay property.
#[derive(Clone, Debug)]
pub struct Generated {
    pub mesh: TriMesh,
    pub constrained: HashSet<(usize, usize)>,
    pub given_up: usize,
}

/// Polygon mesher with refinement rules.
pub struct MeshGenerator<'a> {
    pub domain: &'a Domain,
    pub size: SizeField,
    pub budget: usize,
    protected: Vec<usize>,
}

impl<'a> MeshGenerator<'a> {
    pub fn new(domain: &'a Domain, size: SizeField) -> Self {
        MeshGenerator { domain, size, budget: DEFAULT_BUDGET, protected: Vec::new() }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    fn segment_exempt(&self, cdt: &Cdt, seg: &SegInfo) -> bool {
        if seg.exempt || self.protected.contains(&seg.from) || self.protected.contains(&seg.to) {
            return true;
        }
        let (a, b) = (cdt.pts[seg.from], cdt.pts[seg.to]);
        let diam = self.domain.diameter();
        len2(a, b) < (1e-9 * diam).powi(2)
    }

    fn triangle_exempt(&self, cdt: &Cdt, t: usize, narrow: f64) -> bool {
        let tri = cdt.tris[t];
        if tri.iter().any(|v| self.protected.contains(v)) {
            return true;
        }
        self.domain.cusp().is_some() && in_narrow_channel(narrow, centroid(tri.map(|v| cdt.pts[v])))
    }

    fn is_bad(&self, cdt: &Cdt, t: usize) -> bool {
        let [a, b, c] = cdt.tris[t].map(|v| cdt.pts[v]);
        let min_angle = angles_deg(a, b, c).iter().cloned().fold(f64::INFINITY, f64::min);
        if min_angle < self.size.min_angle_target {
            return true;
        }
        let longest = len2(a, b).max(len2(b, c)).max(len2(c, a)).sqrt();
        longest > self.size.target(self.domain, centroid([a, b, c]))
    }

    fn split_segment(&self, cdt: &mut Cdt, seg: SegInfo) -> Result<bool> {
        let Some((t, i)) = cdt.find_directed_edge(seg.from, seg.to) else {
            return Err(Error::Mesh(format!("segment ({}, {}) lost", seg.from, seg.to)));
        };
        let mid = 0.5 * (seg.params[0] + seg.params[1]);
        let (a, b) = (cdt.pts[seg.from], cdt.pts[seg.to]);
        let chord = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let mut p = self.domain.curve_point(seg.segment, mid).unwrap_or(chord);
        let opposite = cdt.pts[cdt.tris[t][i]];
        if !(orient(a, p, opposite) > 0.0 && orient(p, b, opposite) > 0.0) {
            // curved midpoint would invert the adjacent triangle
            p = chord;
            if !(orient(a, p, opposite) > 0.0 && orient(p, b, opposite) > 0.0) {
                return Ok(false);
            }
        }
        cdt.insert_on_edge(t, i, p, Some(mid));
        Ok(true)
    }

    fn run(&mut self, points: Vec<Point>, edges: Vec<(Segment, [f64; 2])>) -> Result<Generated> {
        self.size.check()?;
        check_simple_ccw(&points)?;
        let n = points.len();
        let narrow = match self.domain.cusp() {
            Some(spec) => narrow_height(spec, &self.size),
            None => 0.0,
        };
        let mut segs = Vec::with_capacity(n);
        for (i, &(segment, params)) in edges.iter().enumerate() {
            let exempt = match self.domain.cusp() {
                Some(_) if segment.is_wall() => params[0].max(params[1]) <= narrow,
                _ => false,
            };
            segs.push(SegInfo { from: i, to: (i + 1) % n, segment, params, exempt });
        }
        self.protected = points
            .iter()
            .enumerate()
            .filter(|(_, p)| self.domain.cusp().is_some() && p[0] == 0.0 && p[1] == 0.0)
            .map(|(i, _)| i)
            .collect();

        let mut cdt = Cdt::from_polygon(points, segs)?;
        let mut given_up: HashSet<[usize; 3]> = HashSet::new();
        let sorted = |tri: [usize; 3]| {
            let mut s = tri;
            s.sort_unstable();
            s
        };

        let mut queue: VecDeque<usize> = (0..cdt.tris.len()).collect();
        loop {
            while let Some(t) = queue.pop_front() {
                if cdt.pts.len() > self.budget {
                    return Err(Error::Budget {
                        budget: self.budget,
                        vertices: cdt.pts.len(),
                        triangles: cdt.tris.len(),
                        pending: queue.len(),
                    });
                }
                cdt.touched.clear();
                // encroached segments first
                let mut split = false;
                for i in 0..3 {
                    let (a, b) = cdt.edge(t, i);
                    let Some(&seg) = cdt.segs.get(&key(a, b)) else { continue };
                    if self.segment_exempt(&cdt, &seg) {
                        continue;
                    }
                    let apex = cdt.pts[cdt.tris[t][i]];
                    if encroaches(cdt.pts[a], cdt.pts[b], apex) {
                        if self.split_segment(&mut cdt, seg)? {
                            split = true;
                        } else {
                            cdt.segs.get_mut(&key(a, b)).unwrap().exempt = true;
                        }
                        break;
                    }
                }
                if split {
                    queue.extend(cdt.touched.drain(..));
                    continue;
                }
                if self.triangle_exempt(&cdt, t, narrow)
                    || !self.is_bad(&cdt, t)
                    || given_up.contains(&sorted(cdt.tris[t]))
                {
                    continue;
                }
                let [a, b, c] = cdt.tris[t].map(|v| cdt.pts[v]);
                let center = circumcenter(a, b, c);
                let give_up = match cdt.locate(t, center) {
                    Location::Blocked(bt, bi) => {
                        let (x, y) = cdt.edge(bt, bi);
                        match cdt.segs.get(&key(x, y)).copied() {
                            Some(seg) if !self.segment_exempt(&cdt, &seg) => {
                                !self.split_segment(&mut cdt, seg)?
                            }
                            _ => true,
                        }
                    }
                    loc @ (Location::Inside(_) | Location::OnEdge(..)) => {
                        let host = match loc {
                            Location::Inside(h) | Location::OnEdge(h, _) => h,
                            Location::Blocked(..) => unreachable!(),
                        };
                        let encroached: Vec<SegInfo> = cdt
                            .cavity_segments(host, center)
                            .into_iter()
                            .map(|k| cdt.segs[&k])
                            .filter(|s| encroaches(cdt.pts[s.from], cdt.pts[s.to], center))
                            .collect();
                        let splittable: Vec<SegInfo> = encroached
                            .iter()
                            .copied()
                            .filter(|s| !self.segment_exempt(&cdt, s))
                            .collect();
                        if !splittable.is_empty() {
                            let mut any = false;
                            for seg in splittable {
                                if cdt.segs.contains_key(&key(seg.from, seg.to)) {
                                    any |= self.split_segment(&mut cdt, seg)?;
                                }
                            }
                            !any
                        } else if !encroached.is_empty() {
                            true
                        } else {
                            let tri = cdt.tris[host];
                            let too_close = tri.iter().any(|&v| {
                                len2(cdt.pts[v], center) < (1e-9 * self.domain.diameter()).powi(2)
                            });
                            if too_close {
                                true
                            } else {
                                match loc {
                                    Location::OnEdge(h, i) if !cdt.is_constrained(h, i) => {
                                        cdt.insert_on_edge(h, i, center, None);
                                    }
                                    Location::OnEdge(..) => {}
                                    _ => {
                                        cdt.insert_in_triangle(host, center);
                                    }
                                }
                                false
                            }
                        }
                    }
                };
                if give_up {
                    given_up.insert(sorted(cdt.tris[t]));
                }
                queue.extend(cdt.touched.drain(..));
                queue.push_back(t);
            }
            // full sweep to catch anything the local queue missed
            for t in 0..cdt.tris.len() {
                let needs = (0..3).any(|i| {
                    let (a, b) = cdt.edge(t, i);
                    cdt.segs.get(&key(a, b)).is_some_and(|seg| {
                        !self.segment_exempt(&cdt, seg)
                            && encroaches(cdt.pts[a], cdt.pts[b], cdt.pts[cdt.tris[t][i]])
                    })
                }) || (!self.triangle_exempt(&cdt, t, narrow)
                    && self.is_bad(&cdt, t)
                    && !given_up.contains(&sorted(cdt.tris[t])));
                if needs {
                    queue.push_back(t);
                }
            }
            if queue.is_empty() {
                break;
            }
        }
        debug!(
            "mesher: {} vertices, {} triangles, {} triangles given up",
            cdt.pts.len(),
            cdt.tris.len(),
            given_up.len()
        );

        let boundary_edges: Vec<BoundaryEdge> = {
            let mut list: Vec<&SegInfo> = cdt.segs.values().collect();
            list.sort_by_key(|s| (s.from, s.to));
            list.into_iter()
                .map(|s| BoundaryEdge { vertices: [s.from, s.to], segment: s.segment, params: s.params })
                .collect()
        };
        let constrained = cdt.segs.keys().copied().collect();
        let mut mesh = TriMesh {
            vertices: cdt.pts,
            triangles: cdt.tris,
            boundary_edges,
            boundary_flags: Vec::new(),
        };
        mesh.boundary_edges = order_boundary(&mesh.boundary_edges);
        mesh.rebuild_flags();
        mesh.validate()?;
        Ok(Generated { mesh, constrained, given_up: given_up.len() })
    }

    /// Meshes the boundary loop of the domain (cusp or disk).
    pub fn generate(&mut self) -> Result<Generated> {
        self.size.check()?;
        match self.domain {
            Domain::Cusp(spec) => {
                let bl = spec.boundary_loop(self.size.h_max, self.size.tip_grading)?;
                let points = bl.samples.iter().map(|s| s.position).collect();
                let edges = bl.edges.iter().map(|e| (e.segment, e.params)).collect();
                self.run(points, edges)
            }
            Domain::Disk { radius } => {
                let r = *radius;
                let n = ((2.0 * std::f64::consts::PI * r / self.size.h_max).ceil() as usize).max(4);
                let angles: Vec<f64> =
                    (0..n).map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64).collect();
                let points = angles.iter().map(|&t| [r * t.cos(), r * t.sin()]).collect();
                let edges = (0..n)
                    .map(|i| {
                        let end = if i + 1 == n { 2.0 * std::f64::consts::PI } else { angles[i + 1] };
                        (Segment::Arc, [angles[i], end])
                    })
                    .collect();
                self.run(points, edges)
            }
            Domain::Polygon => Err(Error::Parameter(
                "polygon domains are meshed with generate_polygon".into(),
            )),
        }
    }

    pub fn generate_polygon(&mut self, points: &[Point]) -> Result<Generated> {
        let edges = points
            .iter()
            .enumerate()
            .map(|(i, _)| (Segment::Straight, [i as f64, (i + 1) as f64]))
            .collect();
        self.run(points.to_vec(), edges)
    }
}

/// Sorts boundary edges into loop order starting from the lowest vertex index.
fn order_boundary(edges: &[BoundaryEdge]) -> Vec<BoundaryEdge> {
    if edges.is_empty() {
        return Vec::new();
    }
    let by_from: HashMap<usize, &BoundaryEdge> = edges.iter().map(|e| (e.vertices[0], e)).collect();
    let start = edges.iter().map(|e| e.vertices[0]).min().unwrap();
    let mut out = Vec::with_capacity(edges.len());
    let mut v = start;
    while let Some(e) = by_from.get(&v) {
        out.push(**e);
        v = e.vertices[1];
        if v == start || out.len() > edges.len() {
            break;
        }
    }
    if out.len() != edges.len() {
        // not a single loop; keep the original order
        return edges.to_vec();
    }
    out
}

/// Delaunay-refinement mesh of the cuspidal domain or oracle disk.
pub fn generate(domain: &Domain, size: &SizeField) -> Result<TriMesh> {
    Ok(MeshGenerator::new(domain, *size).generate()?.mesh)
}

/// Mesh of a plain counter-clockwise polygon with straight edges.
pub fn generate_polygon(points: &[Point], size: &SizeField) -> Result<TriMesh> {
    Ok(MeshGenerator::new(&Domain::Polygon, *size).generate_polygon(points)?.mesh)
}

/// Quasi-uniform mesh of the disk of the given radius centred at the origin.
pub fn disk_mesh(radius: f64, h: f64) -> Result<TriMesh> {
    if !(radius > 0.0) || !(h > 0.0 && h < radius) {
        return Err(Error::Parameter(format!("disk mesh needs radius > 0 and 0 < h < radius, got {radius}, {h}")));
    }
    generate(&Domain::Disk { radius }, &SizeField::new(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::mesh::{mesh_quality, quality_exempt};

    fn check_delaunay(g: &Generated) {
        let mesh = &g.mesh;
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for i in 0..3 {
                owner.insert((tri[(i + 1) % 3], tri[(i + 2) % 3]), t);
            }
        }
        for tri in &mesh.triangles {
            for i in 0..3 {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                if g.constrained.contains(&key(a, b)) {
                    continue;
                }
                let Some(&u) = owner.get(&(b, a)) else { continue };
                let d = mesh.triangles[u].iter().copied().find(|&v| v != a && v != b).unwrap();
                let p = tri.map(|v| mesh.vertices[v]);
                assert!(
                    !strictly_inside(p[0], p[1], p[2], mesh.vertices[d]),
                    "edge ({a}, {b}) not locally Delaunay"
                );
            }
        }
    }

    #[test]
    fn unit_square_two_triangles() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let mesh = generate_polygon(&square, &SizeField::new(10.0)).unwrap();
        assert_eq!(mesh.triangles.len(), 2);
        mesh.validate().unwrap();
        assert!((mesh.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_refined_meets_angle_and_size() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let size = SizeField::new(0.2);
        let g = MeshGenerator::new(&Domain::Polygon, size).generate_polygon(&square).unwrap();
        let q = mesh_quality(&g.mesh);
        assert!(q.min_angle >= size.min_angle_target - 1e-9, "{q:?}");
        assert!(q.h_max <= 0.2 + 1e-12);
        check_delaunay(&g);
        let m = &g.mesh;
        assert_eq!(m.vertices.len() as i64 - m.num_edges() as i64 + m.triangles.len() as i64, 1);
    }

    #[test]
    fn disk_mesh_properties() {
        let mesh = disk_mesh(1.0, 0.5).unwrap();
        assert!(mesh.vertices.len() >= 4);
        for e in &mesh.boundary_edges {
            assert_eq!(e.segment, Segment::Arc);
            for v in e.vertices {
                let p = mesh.vertices[v];
                assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            }
        }
        for h in [0.2, 0.1] {
            let mesh = disk_mesh(1.0, h).unwrap();
            let area_gap = std::f64::consts::PI - mesh.area();
            assert!(area_gap > 0.0 && area_gap < 2.0 * h * h, "h {h}: gap {area_gap}");
            let perimeter: f64 = mesh
                .boundary_edges
                .iter()
                .map(|e| {
                    let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
                    (a[0] - b[0]).hypot(a[1] - b[1])
                })
                .sum();
            let gap = 2.0 * std::f64::consts::PI - perimeter;
            assert!(gap > 0.0 && gap < 2.0 * h * h, "h {h}: perimeter gap {gap}");
        }
        assert!(disk_mesh(1.0, 1.5).is_err());
    }

    #[test]
    fn cusp_meshes_are_valid_and_graded() {
        for alpha in [1.5, 2.0, 3.0] {
            let domain = Domain::Cusp(DomainSpec::power(alpha).unwrap());
            let size = SizeField::new(0.2);
            let g = MeshGenerator::new(&domain, size).generate().unwrap();
            let mesh = &g.mesh;
            mesh.validate().unwrap();
            check_delaunay(&g);
            let v = mesh.vertices.len() as i64;
            assert_eq!(v - mesh.num_edges() as i64 + mesh.triangles.len() as i64, 1);
            for t in 0..mesh.triangles.len() {
                let tri = mesh.tri_points(t);
                if quality_exempt(&domain, &size, tri) {
                    continue;
                }
                let (angle, _) = crate::mesh::triangle_quality(tri[0], tri[1], tri[2]);
                assert!(angle >= size.min_angle_target - 1e-9, "alpha {alpha}: angle {angle} at {tri:?}");
            }
            let tags: HashSet<Segment> = mesh.boundary_edges.iter().map(|e| e.segment).collect();
            assert_eq!(tags, HashSet::from([Segment::WallLeft, Segment::WallRight, Segment::Arc]));
            assert!(mesh.boundary_snap_error(&domain) < 1e-12);
            assert!(mesh.vertices.len() < 2000, "alpha {alpha}: {} vertices", mesh.vertices.len());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let domain = Domain::Cusp(DomainSpec::power(2.0).unwrap());
        let a = generate(&domain, &SizeField::new(0.15)).unwrap();
        let b = generate(&domain, &SizeField::new(0.15)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_exceeded_is_reported() {
        let domain = Domain::Disk { radius: 1.0 };
        let err = MeshGenerator::new(&domain, SizeField::new(0.01)).with_budget(500).generate();
        assert!(matches!(err, Err(Error::Budget { .. })));
    }
}
