//! Planar circle and annulus geometry.
//!
//! Covers the pieces needed by the three-circle lemma: annulus membership,
//! circumcenters, the rectangle that contains the intersection of two equal
//! annuli, and the bound on the region `W` of circle parameters `(x, b)` whose
//! circles pass within `a` of three fixed points.

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Constant in the three-circle bound `diam W <= K a / c^2`.
pub const THREE_CIRCLE_CONSTANT: f64 = 324.0;

/// Relative tolerance for the collinearity test: a triangle is degenerate when
/// `|cross(B - A, C - A)| < DEGENERACY_TOLERANCE * diam({A, B, C})^2`.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate triangle (collinear points)")]
    DegenerateTriangle,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn from_polar(center: Point2, radius: f64, angle: f64) -> Self {
        Self::new(center.x1 + radius * angle.cos(), center.x2 + radius * angle.sin())
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x1 * other.x2 - self.x2 * other.x1
    }

    pub fn norm(self) -> f64 {
        (self.x1 * self.x1 + self.x2 * self.x2).sqrt()
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise rotation by a quarter turn.
    pub fn perp(self) -> Self {
        Self::new(-self.x2, self.x1)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x1 * rhs, self.x2 * rhs)
    }
}

/// A circle `S(x, r)`, equivalently a point `(x, r)` of the parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleParam {
    pub center: Point2,
    pub radius: f64,
}

impl CircleParam {
    pub fn new(center: Point2, radius: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() || !radius.is_finite() || radius <= 0.0 {
            return Err(GeometryError::HypothesisViolated(format!(
                "circle needs finite center and positive radius, got {center:?}, r = {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    /// Membership in the reference box: `|x| <= 1/4` and `1/2 <= r <= 2`.
    pub fn in_reference_box(&self) -> bool {
        self.center.norm() <= 0.25 && (0.5..=2.0).contains(&self.radius)
    }

    pub fn to_coords(&self) -> [f64; 3] {
        [self.center.x1, self.center.x2, self.radius]
    }

    pub fn from_coords(c: [f64; 3]) -> Result<Self, GeometryError> {
        Self::new(Point2::new(c[0], c[1]), c[2])
    }

    pub fn point_at(&self, angle: f64) -> Point2 {
        Point2::from_polar(self.center, self.radius, angle)
    }
}

/// Closed annulus `{p : r - a <= |p - x| <= r + a}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub circle: CircleParam,
    pub halfwidth: f64,
}

impl Annulus {
    pub fn new(circle: CircleParam, halfwidth: f64) -> Result<Self, GeometryError> {
        if !(halfwidth > 0.0 && halfwidth < circle.radius) {
            return Err(GeometryError::HypothesisViolated(format!(
                "annulus halfwidth {halfwidth} must lie in (0, {})",
                circle.radius
            )));
        }
        Ok(Self { circle, halfwidth })
    }

    pub fn contains(&self, p: Point2) -> bool {
        annulus_contains(self, p)
    }
}

pub fn annulus_contains(ann: &Annulus, p: Point2) -> bool {
    let d = p.dist(ann.circle.center);
    ann.circle.radius - ann.halfwidth <= d && d <= ann.circle.radius + ann.halfwidth
}

fn degenerate(a: Point2, b: Point2, c: Point2) -> bool {
    let diam = a.dist(b).max(a.dist(c)).max(b.dist(c));
    (b - a).cross(c - a).abs() < DEGENERACY_TOLERANCE * diam * diam
}

/// Circumcenter `M` and circumradius `h` of the triangle `ABC`.
pub fn circumcenter(a: Point2, b: Point2, c: Point2) -> Result<(Point2, f64), GeometryError> {
    if degenerate(a, b, c) {
        return Err(GeometryError::DegenerateTriangle);
    }
    // Solve relative to A for numerical stability.
    let u = b - a;
    let v = c - a;
    let d = 2.0 * u.cross(v);
    let uu = u.dot(u);
    let vv = v.dot(v);
    let m = Point2::new((v.x2 * uu - u.x2 * vv) / d, (u.x1 * vv - v.x1 * uu) / d);
    Ok((a + m, m.norm()))
}

/// Three points with a separation scale `c`: `min |P - Q| >= 2c`, `0 < c < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleFrame {
    pub a: Point2,
    pub b: Point2,
    pub c: Point2,
    pub sep_scale: f64,
    pub degenerate: bool,
}

impl TriangleFrame {
    pub fn new(a: Point2, b: Point2, c: Point2, sep_scale: f64) -> Result<Self, GeometryError> {
        if !(sep_scale > 0.0 && sep_scale < 1.0) {
            return Err(GeometryError::HypothesisViolated(format!(
                "separation scale {sep_scale} outside (0, 1)"
            )));
        }
        if ![a, b, c].iter().all(|p| p.is_finite()) {
            return Err(GeometryError::HypothesisViolated("non-finite vertex".into()));
        }
        let min_sep = a.dist(b).min(a.dist(c)).min(b.dist(c));
        if min_sep < 2.0 * sep_scale * (1.0 - 1e-12) {
            return Err(GeometryError::HypothesisViolated(format!(
                "minimum pairwise distance {min_sep} below 2c = {}",
                2.0 * sep_scale
            )));
        }
        Ok(Self { a, b, c, sep_scale, degenerate: degenerate(a, b, c) })
    }

    pub fn vertices(&self) -> [Point2; 3] {
        [self.a, self.b, self.c]
    }
}

/// Rectangle centered at the midpoint of `AB`, with half-width `9a/(2c)`
/// along `AB` and half-length 3 along the perpendicular bisector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatedRectangle {
    pub center: Point2,
    pub short_half: f64,
    pub long_half: f64,
    pub short_axis: Point2,
    pub long_axis: Point2,
}

impl SeparatedRectangle {
    pub fn contains(&self, p: Point2) -> bool {
        let d = p - self.center;
        d.dot(self.short_axis).abs() <= self.short_half && d.dot(self.long_axis).abs() <= self.long_half
    }
}

fn check_width(a: f64, c: f64) -> Result<(), GeometryError> {
    if !(c > 0.0 && c < 1.0) {
        return Err(GeometryError::HypothesisViolated(format!("c = {c} outside (0, 1)")));
    }
    if !(a > 0.0 && a < c * c / 20.0) {
        return Err(GeometryError::HypothesisViolated(format!(
            "a = {a} outside (0, c^2/20 = {})",
            c * c / 20.0
        )));
    }
    Ok(())
}

pub fn pairwise_rectangle(a: Point2, b: Point2, width: f64, c: f64) -> Result<SeparatedRectangle, GeometryError> {
    check_width(width, c)?;
    let ab = b - a;
    let len = ab.norm();
    if !(len >= 2.0 * c) {
        return Err(GeometryError::HypothesisViolated(format!("|A - B| = {len} below 2c = {}", 2.0 * c)));
    }
    let short_axis = ab * (1.0 / len);
    Ok(SeparatedRectangle {
        center: (a + b) * 0.5,
        short_half: 4.5 * width / c,
        long_half: 3.0,
        short_axis,
        long_axis: short_axis.perp(),
    })
}

/// Closed interval of reals; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WRegionBound {
    pub circumcenter: Point2,
    pub circumradius: f64,
    pub diam_bound: f64,
    pub radius_interval: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionBound {
    /// Collinear frame: `W(b)` is empty for every `b`.
    Empty,
    Bounded(WRegionBound),
}

pub fn three_circle_bound(frame: &TriangleFrame, a: f64) -> Result<RegionBound, GeometryError> {
    let c = frame.sep_scale;
    check_width(a, c)?;
    if frame.degenerate {
        return Ok(RegionBound::Empty);
    }
    let (m, h) = circumcenter(frame.a, frame.b, frame.c)?;
    let spread = THREE_CIRCLE_CONSTANT * a / (c * c);
    Ok(RegionBound::Bounded(WRegionBound {
        circumcenter: m,
        circumradius: h,
        diam_bound: spread,
        radius_interval: Interval { lo: (h - spread).max(0.5), hi: (h + spread).min(2.0) },
    }))
}

pub fn w_region_membership(frame: &TriangleFrame, a: f64, b: f64, x: Point2) -> bool {
    frame.vertices().iter().all(|&v| {
        let d = x.dist(v);
        b - a <= d && d <= b + a
    })
}

/// Grid sample of `W`: lattice `gridStep * Z^2` in `x`, `gridStep * Z` in `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct WRegionSample {
    pub members: u64,
    pub diameter: f64,
    /// Smallest and largest sampled `b`, when any member exists.
    pub b_range: Option<Interval>,
    /// Largest planar distance from a member `x` to the circumcenter.
    pub max_center_offset: Option<f64>,
}

/// Enumerates the lattice members of `W` and measures their diameter in R^3.
///
/// The enumeration floods the lattice through the set where the three
/// distances agree to within `2a` (plus a few lattice steps of slack), seeded
/// at the circumcenter. For degenerate frames the seeds are taken along the
/// three perpendicular bisectors instead.
pub fn sample_w_region(frame: &TriangleFrame, a: f64, grid_step: f64) -> Result<WRegionSample, GeometryError> {
    check_width(a, frame.sep_scale)?;
    if !(grid_step > 0.0 && grid_step <= a / 4.0) {
        return Err(GeometryError::HypothesisViolated(format!(
            "grid step {grid_step} must lie in (0, a/4 = {}]",
            a / 4.0
        )));
    }
    let sampler = LatticeSampler { frame, a, step: grid_step, slack: 4.0 * grid_step };
    let seeds = sampler.seeds();
    Ok(sampler.flood(seeds))
}

pub fn w_region_sample_diameter(frame: &TriangleFrame, a: f64, grid_step: f64) -> Result<f64, GeometryError> {
    sample_w_region(frame, a, grid_step).map(|s| s.diameter)
}

struct LatticeSampler<'a> {
    frame: &'a TriangleFrame,
    a: f64,
    step: f64,
    slack: f64,
}

impl LatticeSampler<'_> {
    fn point(&self, i: i64, j: i64) -> Point2 {
        Point2::new(i as f64 * self.step, j as f64 * self.step)
    }

    fn distances(&self, x: Point2) -> [f64; 3] {
        let [p, q, r] = self.frame.vertices();
        [x.dist(p), x.dist(q), x.dist(r)]
    }

    /// Lattice points that may carry members, padded so the set stays connected.
    fn candidate(&self, i: i64, j: i64) -> bool {
        let d = self.distances(self.point(i, j));
        let hi = d[0].max(d[1]).max(d[2]);
        let lo = d[0].min(d[1]).min(d[2]);
        hi - lo <= 2.0 * self.a + self.slack && hi <= 2.0 + self.a + self.slack
    }

    /// Range of lattice indices `k` with `(x, k * step)` in `W`.
    fn member_b(&self, i: i64, j: i64) -> Option<(i64, i64)> {
        let x = self.point(i, j);
        let d = self.distances(x);
        let lo = (d[0].max(d[1]).max(d[2]) - self.a).max(0.5);
        let hi = (d[0].min(d[1]).min(d[2]) + self.a).min(2.0);
        if lo > hi + self.step {
            return None;
        }
        let member = |k: i64| {
            let b = k as f64 * self.step;
            (0.5..=2.0).contains(&b) && w_region_membership(self.frame, self.a, b, x)
        };
        let mut k_lo = (lo / self.step).ceil() as i64 - 1;
        let mut k_hi = (hi / self.step).floor() as i64 + 1;
        while k_lo <= k_hi && !member(k_lo) {
            k_lo += 1;
            if k_lo as f64 * self.step > hi + self.step {
                return None;
            }
        }
        while k_hi >= k_lo && !member(k_hi) {
            k_hi -= 1;
        }
        (k_lo <= k_hi).then_some((k_lo, k_hi))
    }

    fn lattice_near(&self, p: Point2) -> (i64, i64) {
        ((p.x1 / self.step).round() as i64, (p.x2 / self.step).round() as i64)
    }

    fn seeds(&self) -> Vec<(i64, i64)> {
        let mut seeds = Vec::new();
        if !self.frame.degenerate {
            if let Ok((m, _)) = circumcenter(self.frame.a, self.frame.b, self.frame.c) {
                let (i0, j0) = self.lattice_near(m);
                for di in -1..=1 {
                    for dj in -1..=1 {
                        seeds.push((i0 + di, j0 + dj));
                    }
                }
            }
            return seeds;
        }
        let [p, q, r] = self.frame.vertices();
        let reach = 2.0 + self.a + self.slack;
        for (u, v) in [(p, q), (p, r), (q, r)] {
            let mid = (u + v) * 0.5;
            let dir = (v - u).perp() * (1.0 / u.dist(v));
            let n = (reach / self.step).ceil() as i64;
            for t in -n..=n {
                let (i, j) = self.lattice_near(mid + dir * (t as f64 * self.step));
                if self.candidate(i, j) {
                    seeds.push((i, j));
                }
            }
        }
        seeds
    }

    fn flood(&self, seeds: Vec<(i64, i64)>) -> WRegionSample {
        let mut spans: HashMap<i64, Vec<(i64, i64)>> = HashMap::new();
        let mut stack = seeds;
        let mut hull_points: Vec<[f64; 3]> = Vec::new();
        let mut members = 0u64;
        let mut b_range: Option<(i64, i64)> = None;
        let mut max_offset: Option<f64> = None;
        let center = if self.frame.degenerate {
            None
        } else {
            circumcenter(self.frame.a, self.frame.b, self.frame.c).ok().map(|(m, _)| m)
        };

        while let Some((i, j)) = stack.pop() {
            let row = spans.entry(j).or_default();
            if row.iter().any(|&(l, r)| l <= i && i <= r) || !self.candidate(i, j) {
                continue;
            }
            let mut l = i;
            while self.candidate(l - 1, j) {
                l -= 1;
            }
            let mut r = i;
            while self.candidate(r + 1, j) {
                r += 1;
            }
            spans.entry(j).or_default().push((l, r));

            let mut row_pts: Vec<(f64, f64)> = Vec::new();
            for ii in l..=r {
                if let Some((k_lo, k_hi)) = self.member_b(ii, j) {
                    members += (k_hi - k_lo + 1) as u64;
                    b_range = Some(match b_range {
                        None => (k_lo, k_hi),
                        Some((lo, hi)) => (lo.min(k_lo), hi.max(k_hi)),
                    });
                    let x1 = ii as f64 * self.step;
                    row_pts.push((x1, k_lo as f64 * self.step));
                    row_pts.push((x1, k_hi as f64 * self.step));
                    if let Some(m) = center {
                        let off = self.point(ii, j).dist(m);
                        max_offset = Some(max_offset.map_or(off, |o: f64| o.max(off)));
                    }
                }
            }
            let x2 = j as f64 * self.step;
            hull_points.extend(convex_hull_2d(&mut row_pts).into_iter().map(|(x1, b)| [x1, x2, b]));

            for jj in [j - 1, j + 1] {
                let mut ii = l - 1;
                while ii <= r + 1 {
                    if self.candidate(ii, jj) {
                        stack.push((ii, jj));
                        while ii <= r + 1 && self.candidate(ii, jj) {
                            ii += 1;
                        }
                    }
                    ii += 1;
                }
            }
        }

        WRegionSample {
            members,
            diameter: if members <= 1 { 0.0 } else { max_pairwise_distance(&hull_points) },
            b_range: b_range.map(|(lo, hi)| Interval { lo: lo as f64 * self.step, hi: hi as f64 * self.step }),
            max_center_offset: max_offset,
        }
    }
}

/// Andrew's monotone chain; returns hull vertices (all points if fewer than 3).
fn convex_hull_2d(pts: &mut [(f64, f64)]) -> Vec<(f64, f64)> {
    pts.sort_by(|p, q| p.partial_cmp(q).expect("finite hull input"));
    if pts.len() < 3 {
        return pts.to_vec();
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn dist3(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    let dz = p[2] - q[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Exact diameter of a finite point set in R^3 (planar sets use `z = 0`).
///
/// Small inputs are brute forced. Larger inputs are bucketed on a coarse grid;
/// bucket pairs are visited in decreasing order of their box-to-box upper
/// bound and the scan stops once that bound cannot beat the best pair found.
pub fn max_pairwise_distance(points: &[[f64; 3]]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    if n <= 1024 {
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(dist3(&points[i], &points[j]));
            }
        }
        return best;
    }

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for ax in 0..3 {
            lo[ax] = lo[ax].min(p[ax]);
            hi[ax] = hi[ax].max(p[ax]);
        }
    }
    let extent: Vec<f64> = (0..3).map(|ax| hi[ax] - lo[ax]).collect();
    let active = extent.iter().filter(|&&e| e > 0.0).count().max(1);
    let per_axis = ((n as f64 / 16.0).powf(1.0 / active as f64).ceil() as usize).clamp(2, 48);
    let dims: Vec<usize> = extent.iter().map(|&e| if e > 0.0 { per_axis } else { 1 }).collect();
    let bucket_of = |p: &[f64; 3]| -> usize {
        let mut idx = 0;
        for ax in 0..3 {
            let k = if dims[ax] == 1 {
                0
            } else {
                (((p[ax] - lo[ax]) / extent[ax] * dims[ax] as f64) as usize).min(dims[ax] - 1)
            };
            idx = idx * dims[ax] + k;
        }
        idx
    };

    let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        members.entry(bucket_of(p)).or_default().push(i);
    }
    let buckets: Vec<(Vec<usize>, [f64; 3], [f64; 3])> = {
        let mut keys: Vec<usize> = members.keys().copied().collect();
        keys.sort_unstable();
        keys.into_iter()
            .map(|k| {
                let idx = members.remove(&k).unwrap_or_default();
                let mut blo = [f64::INFINITY; 3];
                let mut bhi = [f64::NEG_INFINITY; 3];
                for &i in &idx {
                    for ax in 0..3 {
                        blo[ax] = blo[ax].min(points[i][ax]);
                        bhi[ax] = bhi[ax].max(points[i][ax]);
                    }
                }
                (idx, blo, bhi)
            })
            .collect()
    };

    // Double sweep for a starting lower bound.
    let far_from = |p: &[f64; 3]| {
        points
            .iter()
            .enumerate()
            .map(|(i, q)| (dist3(p, q), i))
            .fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
    };
    let (_, i1) = far_from(&points[0]);
    let (mut best, _) = far_from(&points[i1]);

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..buckets.len() {
        for j in i..buckets.len() {
            let (_, alo, ahi) = &buckets[i];
            let (_, blo, bhi) = &buckets[j];
            let mut s = 0.0;
            for ax in 0..3 {
                let d = (ahi[ax] - blo[ax]).abs().max((bhi[ax] - alo[ax]).abs());
                s += d * d;
            }
            let ub = s.sqrt();
            if ub > best {
                pairs.push((ub, i, j));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("finite bounds"));
    for (ub, i, j) in pairs {
        if ub <= best {
            break;
        }
        for &p in &buckets[i].0 {
            for &q in &buckets[j].0 {
                best = best.max(dist3(&points[p], &points[q]));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_annulus() -> Annulus {
        Annulus::new(CircleParam::new(Point2::ORIGIN, 1.0).unwrap(), 0.1).unwrap()
    }

    fn equilateral() -> TriangleFrame {
        let h = 3f64.sqrt() / 2.0;
        TriangleFrame::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, h), 0.5).unwrap()
    }

    #[test]
    fn annulus_membership_is_closed() {
        let ann = unit_annulus();
        assert!(annulus_contains(&ann, Point2::new(1.0, 0.0)));
        assert!(!annulus_contains(&ann, Point2::ORIGIN));
        assert!(annulus_contains(&ann, Point2::new(1.1, 0.0)));
        assert!(!annulus_contains(&ann, Point2::new(1.1000001, 0.0)));
    }

    #[test]
    fn annulus_rejects_halfwidth_at_least_radius() {
        let circle = CircleParam::new(Point2::ORIGIN, 1.0).unwrap();
        assert!(Annulus::new(circle, 1.0).is_err());
        assert!(Annulus::new(circle, 0.0).is_err());
        assert!(CircleParam::new(Point2::ORIGIN, -1.0).is_err());
    }

    #[test]
    fn circumcenter_symmetric_points() {
        let (m, h) = circumcenter(Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0), Point2::new(0.0, 1.0)).unwrap();
        assert!(m.norm() < 1e-15);
        assert!((h - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circumcenter_collinear_is_degenerate() {
        let r = circumcenter(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0));
        assert_eq!(r, Err(GeometryError::DegenerateTriangle));
    }

    #[test]
    fn circumcenter_matches_linear_solve() {
        // Perpendicular bisectors of AB and AC: 2(B-A).M = |B|^2 - |A|^2, same for C.
        let (a, b, c) = (Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.3, 0.9));
        let (a11, a12, r1) = (2.0 * (b.x1 - a.x1), 2.0 * (b.x2 - a.x2), b.dot(b) - a.dot(a));
        let (a21, a22, r2) = (2.0 * (c.x1 - a.x1), 2.0 * (c.x2 - a.x2), c.dot(c) - a.dot(a));
        let det = a11 * a22 - a12 * a21;
        let oracle = Point2::new((r1 * a22 - a12 * r2) / det, (a11 * r2 - r1 * a21) / det);
        let (m, h) = circumcenter(a, b, c).unwrap();
        assert!(m.dist(oracle) <= 1e-9 * h);
        assert!((h - oracle.dist(a)).abs() <= 1e-9 * h);
        assert!((m.x1 - 0.5).abs() < 1e-12 && (m.x2 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rectangle_for_horizontal_pair() {
        let rect = pairwise_rectangle(Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0), 0.005, 0.5).unwrap();
        assert_eq!(rect.center, Point2::ORIGIN);
        assert!((rect.short_half - 0.045).abs() < 1e-15);
        assert_eq!(rect.long_half, 3.0);
        assert!(rect.long_axis.x1.abs() < 1e-15 && (rect.long_axis.x2.abs() - 1.0).abs() < 1e-15);
        let witness = Point2::new(0.0, (1.5f64 * 1.5 - 1.0).sqrt());
        for centre in [Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)] {
            let ann = Annulus::new(CircleParam::new(centre, 1.5).unwrap(), 0.005).unwrap();
            assert!(ann.contains(witness));
        }
        assert!(rect.contains(witness));
    }

    #[test]
    fn rectangle_rejects_bad_hypotheses() {
        let (a, b) = (Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0));
        assert!(pairwise_rectangle(a, b, 0.02, 0.5).is_err());
        assert!(pairwise_rectangle(a, b, 0.001, 1.5).is_err());
        assert!(pairwise_rectangle(a, Point2::new(-0.5, 0.0), 0.001, 0.5).is_err());
    }

    #[test]
    fn equilateral_bound() {
        let frame = equilateral();
        let RegionBound::Bounded(bound) = three_circle_bound(&frame, 0.01).unwrap() else {
            panic!("equilateral frame is not degenerate");
        };
        let centroid = Point2::new(0.5, 3f64.sqrt() / 6.0);
        assert!(bound.circumcenter.dist(centroid) < 1e-12);
        assert!((bound.circumradius - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((bound.diam_bound - 12.96).abs() < 1e-12);
        assert_eq!(bound.radius_interval, Interval { lo: 0.5, hi: 2.0 });
    }

    #[test]
    fn collinear_frame_is_empty() {
        let frame = TriangleFrame::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), 0.5).unwrap();
        assert!(frame.degenerate);
        assert_eq!(three_circle_bound(&frame, 0.01).unwrap(), RegionBound::Empty);
        assert_eq!(w_region_sample_diameter(&frame, 0.01, 0.001).unwrap(), 0.0);
    }

    #[test]
    fn frame_hypotheses() {
        let (a, b, c) = (Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, 0.8));
        assert!(TriangleFrame::new(a, b, c, 0.6).is_err());
        assert!(TriangleFrame::new(a, b, c, 1.0).is_err());
        assert!(TriangleFrame::new(a, b, c, 0.0).is_err());
        let frame = TriangleFrame::new(a, b, c, 0.4).unwrap();
        assert!(three_circle_bound(&frame, 0.01).is_err());
    }

    #[test]
    fn membership_at_concurrence_point() {
        let frame = equilateral();
        let (m, h) = circumcenter(frame.a, frame.b, frame.c).unwrap();
        assert!(w_region_membership(&frame, 0.001, h, m));
        // Shift by 10 a / c^2 = 0.04: distances become 0.577 +- up to 0.04, far beyond a.
        let shifted = m + Point2::new(10.0 * 0.001 / 0.25, 0.0);
        let d: Vec<f64> = frame.vertices().iter().map(|v| shifted.dist(*v)).collect();
        let oracle = d.iter().all(|&x| (x - h).abs() <= 0.001);
        assert_eq!(w_region_membership(&frame, 0.001, h, shifted), oracle);
        assert!(!oracle);
    }

    #[test]
    fn equilateral_sample_within_bound() {
        let frame = equilateral();
        let sample = sample_w_region(&frame, 0.01, 0.001).unwrap();
        assert!(sample.members > 1);
        assert!(sample.diameter <= 12.96);
        assert!(sample.diameter <= 0.5, "measured {}", sample.diameter);
    }

    #[test]
    fn isoceles_sample_is_deterministic() {
        let frame = TriangleFrame::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, 0.8), 0.2).unwrap();
        let first = sample_w_region(&frame, 0.002, 0.0002).unwrap();
        let second = sample_w_region(&frame, 0.002, 0.0002).unwrap();
        assert_eq!(first.diameter.to_bits(), second.diameter.to_bits());
        assert_eq!(first.members, second.members);
        assert!(first.diameter <= THREE_CIRCLE_CONSTANT * 0.002 / 0.04);
    }

    #[test]
    fn hull_and_diameter_agree_with_brute_force() {
        let mut pts = Vec::new();
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..3000 {
            pts.push([next(), next() * 0.5, next() * 0.1]);
        }
        let mut brute = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                brute = brute.max(dist3(&pts[i], &pts[j]));
            }
        }
        assert_eq!(max_pairwise_distance(&pts), brute);
    }
}
