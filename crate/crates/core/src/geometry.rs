//! Cusp profiles, the cuspidal domain (cusp region glued to a disk), the
//! boundary weight and boundary polyline extraction.
//!
//! The domain is
//!
//! ```text
//! Ω_γ = { (x₁, x₂) : 0 < x₂ ≤ 1, |x₁| < γ(x₂) }  ∪  B((0, 2), √2)
//! ```
//!
//! The disk boundary passes through the top corners (±1, 1) of the cusp
//! region. For every admissible γ the cusp wall enters the disk slightly
//! below x₂ = 1, so the boundary consists of two wall pieces running from
//! the tip up to their exit point and one circular arc joining them over the
//! top.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

pub const DISK_CENTER: Point = [0.0, 2.0];
pub const DISK_RADIUS: f64 = SQRT_2;

/// Relative tolerance for on-boundary tests, scaled by the domain diameter.
pub const GEOMETRIC_TOLERANCE: f64 = 1e-10;

pub const DEFAULT_TIP_CUTOFF: f64 = 1e-4;
pub const DEFAULT_TIP_GRADING: f64 = 0.5;

/// Cusp profile γ: [0, 1] → [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CuspFunction {
    /// γ(t) = t^α with α > 1.
    Power { alpha: f64 },
    /// Piecewise-linear interpolation of (t, γ(t)) knots covering [0, 1].
    Tabulated { samples: Vec<[f64; 2]> },
}

/// First violated admissibility condition found by [`CuspFunction::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum GammaViolation {
    Endpoint { t: f64, value: f64, expected: f64 },
    NotIncreasing { t0: f64, t1: f64 },
    SlopesNotIncreasing { t: f64, left: f64, right: f64 },
}

impl std::fmt::Display for GammaViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GammaViolation::Endpoint { t, value, expected } => {
                write!(f, "γ({t}) = {value}, expected {expected}")
            }
            GammaViolation::NotIncreasing { t0, t1 } => {
                write!(f, "γ not strictly increasing between t = {t0} and t = {t1}")
            }
            GammaViolation::SlopesNotIncreasing { t, left, right } => write!(
                f,
                "difference quotients not increasing at t = {t} ({left} then {right})"
            ),
        }
    }
}

impl CuspFunction {
    pub fn power(alpha: f64) -> Result<Self> {
        let gamma = CuspFunction::Power { alpha };
        gamma.check_admissible()?;
        Ok(gamma)
    }

    pub fn tabulated(samples: Vec<[f64; 2]>) -> Result<Self> {
        let gamma = CuspFunction::Tabulated { samples };
        gamma.check_admissible()?;
        Ok(gamma)
    }

    /// Construction-level checks: α > 1, or a well-formed knot table that
    /// starts at (0, 0) and ends at (1, 1).
    pub fn check_admissible(&self) -> Result<()> {
        match self {
            CuspFunction::Power { alpha } => {
                if !alpha.is_finite() || *alpha <= 1.0 {
                    return Err(Error::Domain(format!(
                        "cusp exponent must satisfy 1 < alpha < inf, got {alpha}"
                    )));
                }
            }
            CuspFunction::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(Error::Domain("tabulated profile needs at least 2 knots".into()));
                }
                if samples.iter().any(|s| !s[0].is_finite() || !s[1].is_finite()) {
                    return Err(Error::Domain("tabulated profile has non-finite knots".into()));
                }
                let first = samples[0];
                let last = samples[samples.len() - 1];
                if first != [0.0, 0.0] || last != [1.0, 1.0] {
                    return Err(Error::Domain(
                        "tabulated profile must start at (0, 0) and end at (1, 1)".into(),
                    ));
                }
                for w in samples.windows(2) {
                    if w[1][0] <= w[0][0] {
                        return Err(Error::Domain(format!(
                            "tabulated knots must have strictly increasing t (t = {} then {})",
                            w[0][0], w[1][0]
                        )));
                    }
                    if w[1][1] < w[0][1] {
                        return Err(Error::Domain(format!(
                            "tabulated profile decreases between t = {} and t = {}",
                            w[0][0], w[1][0]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// γ(t) for t ∈ [0, 1].
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("gamma evaluated at t = {t} outside [0, 1]")));
        }
        Ok(self.value(t))
    }

    /// γ(t) with t clamped to [0, 1].
    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            CuspFunction::Power { alpha } => t.powf(*alpha),
            CuspFunction::Tabulated { samples } => {
                let k = samples.partition_point(|s| s[0] <= t);
                if k == 0 {
                    return samples[0][1];
                }
                if k == samples.len() {
                    return samples[k - 1][1];
                }
                let [t0, g0] = samples[k - 1];
                let [t1, g1] = samples[k];
                g0 + (g1 - g0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// γ′(t); right derivative at the knots of a tabulated profile.
    pub fn slope(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            CuspFunction::Power { alpha } => alpha * t.powf(alpha - 1.0),
            CuspFunction::Tabulated { samples } => {
                let k = samples.partition_point(|s| s[0] <= t).clamp(1, samples.len() - 1);
                let [t0, g0] = samples[k - 1];
                let [t1, g1] = samples[k];
                (g1 - g0) / (t1 - t0)
            }
        }
    }

    /// Samples endpoint values, strict monotonicity and increasing difference
    /// quotients. Tabulated profiles are checked on their own knots first.
    pub fn validate(&self, n_samples: usize) -> std::result::Result<(), GammaViolation> {
        let n = n_samples.max(3);
        for (t, expected) in [(0.0, 0.0), (1.0, 1.0)] {
            let value = self.value(t);
            if (value - expected).abs() > 1e-14 {
                return Err(GammaViolation::Endpoint { t, value, expected });
            }
        }
        let mut grid: Vec<[f64; 2]> = match self {
            CuspFunction::Tabulated { samples } => samples.clone(),
            CuspFunction::Power { .. } => Vec::new(),
        };
        if grid.is_empty() {
            grid = (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    [t, self.value(t)]
                })
                .collect();
        }
        check_grid(&grid)
    }

    /// Largest x₂ ≤ `limit` at which the channel width 2γ(x₂) does not exceed
    /// `ratio`·x₂, found by bisection on the increasing ratio γ(t)/t.
    pub(crate) fn narrow_channel_end(&self, ratio: f64, limit: f64) -> f64 {
        let f = |t: f64| 2.0 * self.value(t) - ratio * t;
        if f(limit) <= 0.0 {
            return limit;
        }
        let (mut lo, mut hi) = (0.0, limit);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

fn check_grid(grid: &[[f64; 2]]) -> std::result::Result<(), GammaViolation> {
    for w in grid.windows(2) {
        if w[1][1] <= w[0][1] {
            return Err(GammaViolation::NotIncreasing { t0: w[0][0], t1: w[1][0] });
        }
    }
    for w in grid.windows(3) {
        let left = (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]);
        let right = (w[2][1] - w[1][1]) / (w[2][0] - w[1][0]);
        // Relative slack absorbs rounding of the quotients themselves.
        if right < left * (1.0 - 1e-12) {
            return Err(GammaViolation::SlopesNotIncreasing { t: w[1][0], left, right });
        }
    }
    Ok(())
}

/// The cuspidal domain. Disk center and radius are fixed by the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub gamma: CuspFunction,
    #[serde(default = "default_tip_cutoff")]
    pub tip_cutoff: f64,
}

fn default_tip_cutoff() -> f64 {
    DEFAULT_TIP_CUTOFF
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    WallLeft,
    WallRight,
    Arc,
    Tip,
    /// Straight edge of a plain polygon (no curve to snap to).
    Straight,
}

impl Segment {
    pub fn is_wall(self) -> bool {
        matches!(self, Segment::WallLeft | Segment::WallRight)
    }

    pub fn name(self) -> &'static str {
        match self {
            Segment::WallLeft => "wall_left",
            Segment::WallRight => "wall_right",
            Segment::Arc => "arc",
            Segment::Tip => "tip",
            Segment::Straight => "straight",
        }
    }

    pub fn from_name(name: &str) -> Option<Segment> {
        Some(match name {
            "wall_left" => Segment::WallLeft,
            "wall_right" => Segment::WallRight,
            "arc" => Segment::Arc,
            "tip" => Segment::Tip,
            "straight" => Segment::Straight,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundarySample {
    pub position: Point,
    pub segment: Segment,
    /// x₂ on the walls and at the tip, polar angle about the disk center on the arc.
    pub param: f64,
    pub weight: f64,
}

/// Closed boundary loop with per-edge curve information. Edge `i` joins
/// sample `i` to sample `i + 1` (cyclically).
#[derive(Clone, Debug)]
pub(crate) struct BoundaryLoop {
    pub samples: Vec<BoundarySample>,
    pub edges: Vec<LoopEdge>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct LoopEdge {
    pub segment: Segment,
    pub params: [f64; 2],
}

impl DomainSpec {
    pub fn new(gamma: CuspFunction) -> Result<Self> {
        let spec = DomainSpec { gamma, tip_cutoff: DEFAULT_TIP_CUTOFF };
        spec.check()?;
        Ok(spec)
    }

    pub fn power(alpha: f64) -> Result<Self> {
        DomainSpec::new(CuspFunction::power(alpha)?)
    }

    pub fn check(&self) -> Result<()> {
        self.gamma.check_admissible()?;
        if !(self.tip_cutoff > 0.0 && self.tip_cutoff < 0.5) {
            return Err(Error::Domain(format!(
                "tip_cutoff must lie in (0, 0.5), got {}",
                self.tip_cutoff
            )));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: DomainSpec = serde_json::from_str(text)?;
        spec.check()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        DomainSpec::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.gamma {
            CuspFunction::Power { alpha } => Some(alpha),
            CuspFunction::Tabulated { .. } => None,
        }
    }

    /// Distance from the tip (0, 0) to the top of the disk.
    pub fn diameter(&self) -> f64 {
        DISK_CENTER[1] + DISK_RADIUS
    }

    pub fn tolerance(&self) -> f64 {
        GEOMETRIC_TOLERANCE * self.diameter()
    }

    /// Boundary weight as a function of height: γ(x₂) below x₂ = 1, 1 above.
    pub fn weight_at_height(&self, x2: f64) -> f64 {
        if x2 >= 1.0 {
            1.0
        } else {
            self.gamma.value(x2)
        }
    }

    /// Height at which the right wall x₁ = γ(x₂) enters the closed disk.
    /// Below it the wall is part of ∂Ω_γ.
    pub fn wall_exit(&self) -> f64 {
        let f = |t: f64| {
            let g = self.gamma.value(t);
            g * g + (t - DISK_CENTER[1]).powi(2) - DISK_RADIUS * DISK_RADIUS
        };
        const SCAN: usize = 4000;
        let top = 1.0 - 1e-9;
        let mut prev_t = 0.0;
        for i in 1..=SCAN {
            let t = top * i as f64 / SCAN as f64;
            if f(t) <= 0.0 {
                let (mut lo, mut hi) = (prev_t, t);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if f(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
            prev_t = t;
        }
        1.0
    }

    fn in_cusp_region_open(&self, x: Point) -> bool {
        x[1] > 0.0 && x[1] <= 1.0 && x[0].abs() < self.gamma.value(x[1])
    }

    fn in_disk_open(&self, x: Point) -> bool {
        dist(x, DISK_CENTER) < DISK_RADIUS
    }

    /// True iff `x` lies in the open cusp region or the open disk.
    pub fn contains(&self, x: Point) -> bool {
        self.in_cusp_region_open(x) || self.in_disk_open(x)
    }

    /// Weight of a boundary sample; errors when the sample is not on ∂Ω_γ.
    pub fn weight_eval(&self, sample: &BoundarySample) -> Result<f64> {
        self.check_on_boundary(sample)?;
        Ok(self.weight_at_height(sample.position[1]))
    }

    fn check_on_boundary(&self, sample: &BoundarySample) -> Result<()> {
        let tol = self.tolerance();
        let [x1, x2] = sample.position;
        let off = |what: &str| {
            Err(Error::Geometry(format!(
                "sample ({x1}, {x2}) tagged {} is not on the {what}",
                sample.segment.name()
            )))
        };
        match sample.segment {
            Segment::Tip => {
                if x1.abs() > tol || x2.abs() > tol {
                    return off("tip");
                }
            }
            Segment::WallLeft | Segment::WallRight => {
                let side = if sample.segment == Segment::WallRight { 1.0 } else { -1.0 };
                if !(-tol..=1.0 + tol).contains(&x2)
                    || (side * x1 - self.gamma.value(x2)).abs() > tol
                {
                    return off("cusp wall");
                }
                if dist(sample.position, DISK_CENTER) < DISK_RADIUS - tol {
                    return off("boundary (wall point inside the disk)");
                }
            }
            Segment::Arc => {
                if (dist(sample.position, DISK_CENTER) - DISK_RADIUS).abs() > tol {
                    return off("disk arc");
                }
                if x2 > 0.0 && x2 <= 1.0 && x1.abs() < self.gamma.value(x2) - tol {
                    return off("boundary (arc point inside the cusp region)");
                }
            }
            Segment::Straight => return off("cuspidal boundary"),
        }
        Ok(())
    }

    /// Point on a boundary curve at the given parameter.
    pub fn curve_point(&self, segment: Segment, param: f64) -> Point {
        match segment {
            Segment::WallRight => [self.gamma.value(param), param],
            Segment::WallLeft => [-self.gamma.value(param), param],
            Segment::Tip => [0.0, 0.0],
            Segment::Arc => [
                DISK_CENTER[0] + DISK_RADIUS * param.cos(),
                DISK_CENTER[1] + DISK_RADIUS * param.sin(),
            ],
            Segment::Straight => [f64::NAN, f64::NAN],
        }
    }

    /// Wall heights from the exit point down to the tip (exclusive), uniform
    /// at spacing ≈ `resolution` above 2·resolution, geometric with ratio
    /// `grading` below, floored at `tip_cutoff`.
    fn wall_heights(&self, resolution: f64, grading: f64) -> Vec<f64> {
        let exit = self.wall_exit();
        let switch = (2.0 * resolution).min(exit);
        let mut heights = Vec::new();
        if exit > switch {
            let stretch = (1.0 + self.gamma.slope(exit).powi(2)).sqrt();
            let n = (((exit - switch) * stretch) / resolution).ceil().max(1.0) as usize;
            for i in 0..n {
                heights.push(exit - (exit - switch) * i as f64 / n as f64);
            }
        }
        let mut h = switch;
        while h > self.tip_cutoff * (1.0 + 1e-12) {
            heights.push(h);
            h *= self.wall_ratio(h, grading);
        }
        match heights.last() {
            Some(&last) if last <= self.tip_cutoff * (1.0 + 1e-9) => {}
            _ => heights.push(self.tip_cutoff.min(exit)),
        }
        heights
    }

    /// Smallest ratio r ≥ `grading` for which the wall chord from r·h to h
    /// stays within a quarter of the half-width γ(r·h) of the curve.
    fn wall_ratio(&self, h: f64, grading: f64) -> f64 {
        let fits = |r: f64| {
            let lo = r * h;
            let chord = 0.5 * (self.gamma.value(lo) + self.gamma.value(h));
            chord - self.gamma.value(0.5 * (lo + h)) <= 0.25 * self.gamma.value(lo)
        };
        if fits(grading) {
            return grading;
        }
        let (mut a, mut b) = (grading, 0.99);
        if !fits(b) {
            return b;
        }
        for _ in 0..40 {
            let m = 0.5 * (a + b);
            if fits(m) {
                b = m;
            } else {
                a = m;
            }
        }
        b
    }

    pub(crate) fn boundary_loop(&self, resolution: f64, grading: f64) -> Result<BoundaryLoop> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::Parameter(format!("resolution must be > 0, got {resolution}")));
        }
        if !(grading > 0.0 && grading < 1.0) {
            return Err(Error::Parameter(format!("tip grading must lie in (0, 1), got {grading}")));
        }
        let exit = self.wall_exit();
        let descending = self.wall_heights(resolution, grading);

        let mut samples: Vec<BoundarySample> = Vec::new();
        let mut edges: Vec<LoopEdge> = Vec::new();
        let push = |samples: &mut Vec<BoundarySample>, position: Point, segment: Segment, param: f64| {
            samples.push(BoundarySample {
                position,
                segment,
                param,
                weight: self.weight_at_height(position[1]),
            });
        };

        push(&mut samples, [0.0, 0.0], Segment::Tip, 0.0);
        // right wall, upward; heights[0] is the exit point
        let mut prev = 0.0;
        for &h in descending.iter().rev() {
            push(&mut samples, self.curve_point(Segment::WallRight, h), Segment::WallRight, h);
            edges.push(LoopEdge { segment: Segment::WallRight, params: [prev, h] });
            prev = h;
        }

        // arc from the right exit point counter-clockwise to the left one
        let right_exit = self.curve_point(Segment::WallRight, exit);
        let theta_r = (right_exit[1] - DISK_CENTER[1]).atan2(right_exit[0] - DISK_CENTER[0]);
        let theta_l = PI - theta_r;
        let junctions = [-FRAC_PI_4, PI + FRAC_PI_4];
        let mut angles: Vec<(f64, Segment)> = Vec::new();
        let n_arc = ((theta_l - theta_r) * DISK_RADIUS / resolution).ceil().max(2.0) as usize;
        for i in 1..n_arc {
            let theta = theta_r + (theta_l - theta_r) * i as f64 / n_arc as f64;
            angles.push((theta, Segment::Arc));
        }
        let min_gap = 0.25 * resolution / DISK_RADIUS;
        for (theta, tag) in junctions.into_iter().zip([Segment::WallRight, Segment::WallLeft]) {
            if theta - theta_r > 1e-12 && theta_l - theta > 1e-12 {
                angles.retain(|(a, _)| (a - theta).abs() > min_gap);
                angles.push((theta, tag));
            }
        }
        angles.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut prev_theta = theta_r;
        for &(theta, tag) in &angles {
            let position = if tag == Segment::Arc {
                self.curve_point(Segment::Arc, theta)
            } else if tag == Segment::WallRight {
                [1.0, 1.0]
            } else {
                [-1.0, 1.0]
            };
            let param = if tag == Segment::Arc { theta } else { 1.0 };
            push(&mut samples, position, tag, param);
            edges.push(LoopEdge { segment: Segment::Arc, params: [prev_theta, theta] });
            prev_theta = theta;
        }
        // left exit point, then left wall downward
        push(&mut samples, self.curve_point(Segment::WallLeft, exit), Segment::WallLeft, exit);
        edges.push(LoopEdge { segment: Segment::Arc, params: [prev_theta, theta_l] });
        let mut prev = exit;
        for &h in descending.iter().skip(1) {
            push(&mut samples, self.curve_point(Segment::WallLeft, h), Segment::WallLeft, h);
            edges.push(LoopEdge { segment: Segment::WallLeft, params: [prev, h] });
            prev = h;
        }
        edges.push(LoopEdge { segment: Segment::WallLeft, params: [prev, 0.0] });
        debug_assert_eq!(samples.len(), edges.len());

        let positions: Vec<Point> = samples.iter().map(|s| s.position).collect();
        check_simple_ccw(&positions)?;
        Ok(BoundaryLoop { samples, edges })
    }

    /// Closed counter-clockwise polyline approximating ∂Ω_γ, starting at the tip.
    pub fn boundary_polyline(&self, resolution: f64) -> Result<Vec<BoundarySample>> {
        Ok(self.boundary_loop(resolution, DEFAULT_TIP_GRADING)?.samples)
    }

    /// Height below which the cusp channel is narrower than the geometric
    /// wall spacing for the given grading. Zero when no such region exists.
    pub fn narrow_channel_height(&self, grading: f64) -> f64 {
        let exit = self.wall_exit();
        let h = self.gamma.narrow_channel_end(1.0 - grading, exit);
        if h < 2.0 * self.tip_cutoff {
            0.0
        } else {
            h
        }
    }
}

/// Weighting of the boundary mass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    #[default]
    Profile,
    Unweighted,
}

/// Any domain the mesher and the solvers understand.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Cusp(DomainSpec),
    /// Disk of the given radius centred at the origin.
    Disk { radius: f64 },
    /// Straight-edged polygon; no boundary curve, unit weight.
    Polygon,
}

impl Domain {
    pub fn curve_point(&self, segment: Segment, param: f64) -> Option<Point> {
        match (self, segment) {
            (_, Segment::Straight) | (Domain::Polygon, _) => None,
            (Domain::Cusp(spec), s) => Some(spec.curve_point(s, param)),
            (Domain::Disk { radius }, Segment::Arc) => {
                Some([radius * param.cos(), radius * param.sin()])
            }
            (Domain::Disk { .. }, _) => None,
        }
    }

    pub fn weight(&self, x: Point, mode: WeightMode) -> f64 {
        match (self, mode) {
            (Domain::Cusp(spec), WeightMode::Profile) => spec.weight_at_height(x[1]),
            _ => 1.0,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Cusp(spec) => spec.diameter(),
            Domain::Disk { radius } => 2.0 * radius,
            Domain::Polygon => 1.0,
        }
    }

    pub fn cusp(&self) -> Option<&DomainSpec> {
        match self {
            Domain::Cusp(spec) => Some(spec),
            _ => None,
        }
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

pub(crate) fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        * 0.5
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (bx0, bx1) = (a[0].min(b[0]), a[0].max(b[0]));
    let (by0, by1) = (a[1].min(b[1]), a[1].max(b[1]));
    if c[0].max(d[0]) < bx0 || c[0].min(d[0]) > bx1 || c[1].max(d[1]) < by0 || c[1].min(d[1]) > by1 {
        return false;
    }
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// Errors unless the closed polyline is simple and counter-clockwise.
pub fn check_simple_ccw(poly: &[Point]) -> Result<()> {
    let n = poly.len();
    if n < 3 {
        return Err(Error::Geometry(format!("polyline has only {n} vertices")));
    }
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a == b {
            return Err(Error::Geometry(format!("repeated vertex at index {i}")));
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(a, b, poly[j], poly[(j + 1) % n]) {
                return Err(Error::Geometry(format!(
                    "polyline self-intersects (edges {i} and {j}); resolution too coarse"
                )));
            }
        }
    }
    if signed_area(poly) <= 0.0 {
        return Err(Error::Geometry("polyline is not counter-clockwise".into()));
    }
    Ok(())
}
