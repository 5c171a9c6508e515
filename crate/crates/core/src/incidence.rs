//! Box counts, arc trisection, triple indices and multiplicity fields.

use std::collections::{BTreeSet, HashSet};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fractal::{DiscreteMeasure, PointCloud, mass_distribution_unit};
use crate::geometry::{CircleParam, Point2};

/// Area constant `|S^δ(x, r)| <= c₀ δ` over the reference box.
pub const ANNULUS_AREA_CONSTANT: f64 = 15.0;
/// Fixed-point scale for multiplicity weights.
pub const WEIGHT_SCALE_BITS: i32 = 96;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IncidenceError {
    #[error("need at least 3 scales, got {0}")]
    TooFewScales(usize),
    #[error("all scales equal; slope undefined")]
    DegenerateFit,
    #[error("zero count at scale {0}")]
    EmptyScale(u32),
    #[error("insufficient content: {0}")]
    InsufficientContent(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Index of the half-open dyadic square `[i, i+1) × [j, j+1) · 2^{-k}`.
pub type Cell = (i64, i64);

pub fn cell_of(x: f64, y: f64, k: u32) -> Cell {
    let scale = 2f64.powi(k as i32);
    ((x * scale).floor() as i64, (y * scale).floor() as i64)
}

pub fn cell_center(cell: Cell, k: u32) -> Point2 {
    let side = 2f64.powi(-(k as i32));
    Point2::new((cell.0 as f64 + 0.5) * side, (cell.1 as f64 + 0.5) * side)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverGrid {
    pub k: u32,
    pub occupied: BTreeSet<Cell>,
}

impl CoverGrid {
    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn contains(&self, cell: &Cell) -> bool {
        self.occupied.contains(cell)
    }
}

/// Dyadic cells of side `2^{-k}` holding at least one point of a planar cloud.
pub fn box_count(cloud: &PointCloud, k: u32) -> CoverGrid {
    let occupied = cloud.points().iter().map(|p| cell_of(p[0], p[1], k)).collect();
    CoverGrid { k, occupied }
}

/// Occupancy at a fine scale, stored as a bitmap over a bounding box with a
/// hashed overflow for points outside it. Coarser counts come from merging
/// cells, so no point is visited twice.
#[derive(Debug, Clone)]
pub struct OccupancyCounter {
    k: u32,
    x0: i64,
    y0: i64,
    width: i64,
    height: i64,
    row_words: usize,
    bits: Vec<u64>,
    overflow: HashSet<Cell>,
}

impl OccupancyCounter {
    /// Bitmaps larger than this many bits fall back to hashing.
    const MAX_BITS: i64 = 1 << 33;

    pub fn new(k: u32, lo: Point2, hi: Point2) -> Self {
        let a = cell_of(lo.x1, lo.x2, k);
        let b = cell_of(hi.x1, hi.x2, k);
        let (width, height) = ((b.0 - a.0 + 1).max(0), (b.1 - a.1 + 1).max(0));
        let (width, height) = if width.saturating_mul(height) > Self::MAX_BITS { (0, 0) } else { (width, height) };
        let row_words = (width as usize).div_ceil(64);
        Self {
            k,
            x0: a.0,
            y0: a.1,
            width,
            height,
            row_words,
            bits: vec![0; row_words * height as usize],
            overflow: HashSet::new(),
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn insert(&mut self, p: Point2) {
        self.insert_cell(cell_of(p.x1, p.x2, self.k));
    }

    fn insert_cell(&mut self, c: Cell) {
        let (i, j) = (c.0 - self.x0, c.1 - self.y0);
        if (0..self.width).contains(&i) && (0..self.height).contains(&j) {
            self.bits[j as usize * self.row_words + (i as usize >> 6)] |= 1u64 << (i & 63);
        } else {
            self.overflow.insert(c);
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum::<usize>() + self.overflow.len()
    }

    fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let bitmap = self.bits.chunks(self.row_words.max(1)).enumerate().flat_map(move |(j, row)| {
            row.iter().enumerate().flat_map(move |(w, &word)| {
                let mut rest = word;
                std::iter::from_fn(move || {
                    if rest == 0 {
                        return None;
                    }
                    let b = rest.trailing_zeros() as i64;
                    rest &= rest - 1;
                    Some((self.x0 + (w as i64) * 64 + b, self.y0 + j as i64))
                })
            })
        });
        bitmap.chain(self.overflow.iter().copied())
    }

    /// Occupancy one scale coarser.
    pub fn coarsen(&self) -> Self {
        let k = self.k.saturating_sub(1);
        let (x0, y0) = (self.x0 >> 1, self.y0 >> 1);
        let (x1, y1) = ((self.x0 + self.width - 1) >> 1, (self.y0 + self.height - 1) >> 1);
        let (width, height) = if self.width == 0 { (0, 0) } else { (x1 - x0 + 1, y1 - y0 + 1) };
        let row_words = (width as usize).div_ceil(64);
        let mut out = Self {
            k,
            x0,
            y0,
            width,
            height,
            row_words,
            bits: vec![0; row_words * height as usize],
            overflow: HashSet::new(),
        };
        for c in self.cells() {
            out.insert_cell((c.0 >> 1, c.1 >> 1));
        }
        out
    }

    /// `(k, N)` for every scale from `k_min` up to the counter's scale.
    pub fn counts_down_to(&self, k_min: u32) -> Vec<(u32, usize)> {
        let mut out = vec![(self.k, self.count())];
        let mut level = self.clone();
        while level.k > k_min {
            level = level.coarsen();
            out.push((level.k, level.count()));
        }
        out.reverse();
        out
    }
}

/// `(k, N)` for each `k` in `k_min..=k_max`.
pub fn box_counts(cloud: &PointCloud, k_min: u32, k_max: u32) -> Vec<(u32, usize)> {
    let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in cloud.points() {
        lo = Point2::new(lo.x1.min(p[0]), lo.x2.min(p[1]));
        hi = Point2::new(hi.x1.max(p[0]), hi.x2.max(p[1]));
    }
    if cloud.is_empty() {
        return (k_min..=k_max).map(|k| (k, 0)).collect();
    }
    let mut counter = OccupancyCounter::new(k_max, lo, hi);
    for p in cloud.points() {
        counter.insert(Point2::new(p[0], p[1]));
    }
    counter.counts_down_to(k_min)
}

/// Least-squares slope of `log₂ N` against `k`.
pub fn dimension_slope(counts: &[(u32, usize)]) -> Result<f64, IncidenceError> {
    if counts.len() >= 2 && counts.iter().all(|c| c.0 == counts[0].0) {
        return Err(IncidenceError::DegenerateFit);
    }
    if counts.len() < 3 {
        return Err(IncidenceError::TooFewScales(counts.len()));
    }
    if let Some(&(k, _)) = counts.iter().find(|c| c.1 == 0) {
        return Err(IncidenceError::EmptyScale(k));
    }
    let n = counts.len() as f64;
    let mx = counts.iter().map(|c| c.0 as f64).sum::<f64>() / n;
    let my = counts.iter().map(|c| (c.1 as f64).log2()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(k, count) in counts {
        let dx = k as f64 - mx;
        sxy += dx * ((count as f64).log2() - my);
        sxx += dx * dx;
    }
    Ok(sxy / sxx)
}

/// `max{t/3 + s, (2s - 1)t + s}`.
pub fn dimension_bound(s: f64, t: f64) -> f64 {
    (t / 3.0 + s).max((2.0 * s - 1.0) * t + s)
}

/// Angular interval `[start, end)` in radians, `0 <= start < end <= 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularInterval {
    pub start: f64,
    pub end: f64,
}

impl AngularInterval {
    pub fn contains(&self, angle: f64) -> bool {
        self.start <= angle && angle < self.end
    }

    /// Circular gap from the end of `self` to the start of `other` and back,
    /// whichever is shorter.
    pub fn gap_to(&self, other: &AngularInterval) -> f64 {
        let forward = (other.start - self.end).rem_euclid(2.0 * PI);
        let backward = (self.start - other.end).rem_euclid(2.0 * PI);
        forward.min(backward)
    }
}

/// Three separated arcs of one circle with their estimated contents.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcTriple {
    pub z: CircleParam,
    /// `h⁺, h⁻, h^×` in scan order.
    pub arcs: [AngularInterval; 3],
    pub gamma: f64,
    pub tau: f64,
    pub eta: f64,
    pub contents: [f64; 3],
    /// Cloud points of the circle lying on each arc.
    pub points: [Vec<Point2>; 3],
}

impl ArcTriple {
    /// Smallest chord distance between two of the arcs.
    pub fn separation(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            gap = gap.min(self.arcs[i].gap_to(&self.arcs[j]));
        }
        2.0 * self.z.radius * (gap.min(PI) / 2.0).sin()
    }

    pub fn content_bracket(&self) -> (f64, f64) {
        (self.eta / 8.0, 3.0 * self.eta / 16.0)
    }
}

/// Arc length `γ = (η/16)^{1/s'}` of the trisection.
pub fn arc_length(eta: f64, s: f64) -> f64 {
    (eta / 16.0).powf(1.0 / s)
}

/// `η = (log₂ 1/δ)^{-2} = k₁^{-2}`.
pub fn default_eta(k1: u32) -> f64 {
    1.0 / (k1 as f64 * k1 as f64)
}

/// `τ(δ) = π⁻¹ (1/16)^{1/s'} k₁^{-2/s'}`, the separation when `η = k₁^{-2}`.
pub fn tau_for(k1: u32, s: f64) -> f64 {
    arc_length(default_eta(k1), s) / PI
}

fn angle_on(z: &CircleParam, p: Point2) -> f64 {
    let a = (p.x2 - z.center.x2).atan2(p.x1 - z.center.x1).rem_euclid(2.0 * PI);
    if a >= 2.0 * PI { 0.0 } else { a }
}

/// Picks consecutive arcs from the first nonempty arc at or after `first`
/// until their weights reach `target`, using at least two arcs. Returns the
/// range of arcs used.
fn scan_arcs(weights: &[f64], first: usize, target: f64) -> Option<(usize, usize, f64)> {
    let first = first + weights.get(first..)?.iter().position(|&w| w > 0.0)?;
    let mut sum = 0.0;
    for (l, &w) in weights.iter().enumerate().skip(first) {
        sum += w;
        if l + 1 - first >= 2 && sum >= target {
            return Some((first, l + 1, sum));
        }
    }
    None
}

/// Splits the circle into arcs of length `γ` and scans for three arcs of
/// content at least `η/8`, each followed by one skipped arc. Empty arcs at the
/// start of a scan are passed over.
///
/// Arc contents are `min(n_l · unit, γ^{s'})` with `unit` the per-point
/// mass-distribution share of the circle's cloud, so each completed scan
/// lands in `[η/8, 3η/16)`.
pub fn extract_three_arcs(
    z: &CircleParam,
    circle: &PointCloud,
    s: f64,
    eta: f64,
) -> Result<ArcTriple, IncidenceError> {
    if !(s > 0.0 && s <= 1.0) || !(eta > 0.0 && eta <= 1.0) {
        return Err(IncidenceError::InvalidParams(format!("need 0 < s' <= 1 and 0 < η <= 1, got {s}, {eta}")));
    }
    if circle.is_empty() {
        return Err(IncidenceError::InsufficientContent("empty circle cloud".into()));
    }
    let unit = mass_distribution_unit(circle, s, circle.delta());
    let lower = unit * circle.len() as f64;
    if lower < eta {
        return Err(IncidenceError::InsufficientContent(format!("content {lower:.3e} below η = {eta:.3e}")));
    }
    let gamma = arc_length(eta, s);
    let step = gamma / z.radius;
    let n = (2.0 * PI / step).ceil() as usize;
    let mut counts = vec![0usize; n];
    let mut angles = Vec::with_capacity(circle.len());
    for p in circle.points() {
        let a = angle_on(z, Point2::new(p[0], p[1]));
        counts[((a / step) as usize).min(n - 1)] += 1;
        angles.push(a);
    }
    let cap = gamma.powf(s);
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64 * unit).min(cap)).collect();
    let target = eta / 8.0;
    let mut bounds = [(0usize, 0usize); 3];
    let mut contents = [0.0; 3];
    let mut first = 0;
    for i in 0..3 {
        let (start, end, sum) = scan_arcs(&weights, first, target)
            .ok_or_else(|| IncidenceError::InsufficientContent(format!("scan exhausted {n} arcs at arc {}", i + 1)))?;
        bounds[i] = (start, end);
        contents[i] = sum;
        first = end + 1;
    }
    // The wrap-around gap needs one full-length arc; only the last may be short.
    if bounds[2].1 + 2 > n && bounds[0].0 == 0 {
        return Err(IncidenceError::InsufficientContent("no full arc left before wrapping".into()));
    }
    let arcs = bounds.map(|(a, b)| AngularInterval { start: a as f64 * step, end: (b as f64 * step).min(2.0 * PI) });
    let mut points: [Vec<Point2>; 3] = Default::default();
    for (p, &a) in circle.points().iter().zip(&angles) {
        let l = ((a / step) as usize).min(n - 1);
        if let Some(i) = bounds.iter().position(|&(lo, hi)| (lo..hi).contains(&l)) {
            points[i].push(Point2::new(p[0], p[1]));
        }
    }
    Ok(ArcTriple { z: *z, arcs, gamma, tau: gamma / PI, eta, contents, points })
}

/// Per-circle cells met by each of the three arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleRow {
    pub z_index: usize,
    pub cells: [Vec<Cell>; 3],
}

impl TripleRow {
    pub fn count(&self) -> u128 {
        self.cells.iter().map(|c| c.len() as u128).product()
    }
}

/// Quadruples `(i₊, i₋, i_×, z)`, stored as one product of three cell lists per circle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleIndex {
    pub k: u32,
    pub rows: Vec<TripleRow>,
}

impl TripleIndex {
    pub fn count(&self) -> u128 {
        self.rows.iter().map(TripleRow::count).sum()
    }

    pub fn contains(&self, entry: &(Cell, Cell, Cell, usize)) -> bool {
        self.rows
            .binary_search_by_key(&entry.3, |r| r.z_index)
            .is_ok_and(|i| {
                let c = &self.rows[i].cells;
                c[0].binary_search(&entry.0).is_ok()
                    && c[1].binary_search(&entry.1).is_ok()
                    && c[2].binary_search(&entry.2).is_ok()
            })
    }

    pub fn entries(&self) -> impl Iterator<Item = (Cell, Cell, Cell, usize)> + '_ {
        self.rows.iter().flat_map(|row| {
            let [a, b, c] = &row.cells;
            a.iter().flat_map(move |&x| {
                b.iter().flat_map(move |&y| c.iter().map(move |&w| (x, y, w, row.z_index)))
            })
        })
    }
}

/// Cells of `grid` met by the cloud points of each arc. `arcs[i]` pairs a
/// circle index with its triple; circles without a triple are skipped.
pub fn build_triple_index(arcs: &[(usize, ArcTriple)], grid: &CoverGrid) -> TripleIndex {
    let mut rows: Vec<TripleRow> = arcs
        .par_iter()
        .map(|(z_index, triple)| {
            let cells = std::array::from_fn(|i| {
                let set: BTreeSet<Cell> = triple.points[i]
                    .iter()
                    .map(|p| cell_of(p.x1, p.x2, grid.k))
                    .filter(|c| grid.contains(c))
                    .collect();
                set.into_iter().collect()
            });
            TripleRow { z_index: *z_index, cells }
        })
        .collect();
    rows.sort_by_key(|r| r.z_index);
    TripleIndex { k: grid.k, rows }
}

/// `#𝒯 τ⁶ / (#cells)³`.
pub fn triple_upper_ratio(index: &TripleIndex, grid: &CoverGrid, tau: f64) -> f64 {
    let count = index.count();
    if count == 0 {
        return 0.0;
    }
    count as f64 * tau.powi(6) / (grid.len() as f64).powi(3)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcCoverCounts {
    pub z_index: usize,
    pub counts: [usize; 3],
}

pub fn per_arc_cover_counts(index: &TripleIndex) -> Vec<ArcCoverCounts> {
    index
        .rows
        .iter()
        .map(|r| ArcCoverCounts { z_index: r.z_index, counts: r.cells.each_ref().map(Vec::len) })
        .collect()
}

/// Comparison value `δ^{-s'} (log₂ 1/δ)^{-2}` for per-arc cell counts.
pub fn arc_count_reference(k1: u32, s: f64) -> f64 {
    2f64.powf(k1 as f64 * s) / (k1 as f64 * k1 as f64)
}

/// Weight in fixed point with `2^{-96}` resolution.
pub fn fixed_weight(w: f64) -> i128 {
    (w * 2f64.powi(WEIGHT_SCALE_BITS)).round() as i128
}

pub fn from_fixed(v: i128) -> f64 {
    v as f64 * 2f64.powi(-WEIGHT_SCALE_BITS)
}

/// `|‖w − x‖ − r| <= δ`.
pub fn in_annulus(w: Point2, x: Point2, r: f64, delta: f64) -> bool {
    let (dx, dy) = (w.x1 - x.x1, w.x2 - x.x2);
    ((dx * dx + dy * dy).sqrt() - r).abs() <= delta
}

/// Multiplicity `m(w)` at the centers of the cells of side `2^{-k}` over a
/// bounding box of all annuli. Values are sums of fixed-point weights, so
/// they do not depend on summation order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityField {
    pub delta: f64,
    pub grid_k: u32,
    pub x0: i64,
    pub y0: i64,
    pub width: usize,
    pub height: usize,
    pub values: Vec<i128>,
}

impl MultiplicityField {
    pub fn get(&self, cell: Cell) -> i128 {
        let (i, j) = (cell.0 - self.x0, cell.1 - self.y0);
        if i < 0 || j < 0 || i as usize >= self.width || j as usize >= self.height {
            return 0;
        }
        self.values[j as usize * self.width + i as usize]
    }

    pub fn m(&self, cell: Cell) -> f64 {
        from_fixed(self.get(cell))
    }

    pub fn total(&self) -> i128 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> i128 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// Nonzero cells in row-major order.
    pub fn nonzero(&self) -> impl Iterator<Item = (Cell, i128)> + '_ {
        self.values.iter().enumerate().filter(|v| *v.1 != 0).map(|(idx, &v)| {
            ((self.x0 + (idx % self.width) as i64, self.y0 + (idx / self.width) as i64), v)
        })
    }
}

fn cell_range(lo: f64, hi: f64, side: f64) -> (i64, i64) {
    ((lo / side).floor() as i64 - 1, (hi / side).floor() as i64 + 1)
}

/// Columns of one row whose centers may lie in the annulus, from the outer
/// and inner disc bounds with a one-cell margin.
fn row_candidates(x: Point2, r: f64, delta: f64, yc: f64, side: f64) -> Vec<(i64, i64)> {
    let dy = yc - x.x2;
    let outer = (r + delta) * (r + delta) - dy * dy;
    if outer < -2.0 * side * (r + delta) {
        return Vec::new();
    }
    let ro = outer.max(0.0).sqrt();
    let inner = (r - delta).max(0.0).powi(2) - dy * dy;
    let ri = inner.max(0.0).sqrt();
    let (a, b) = cell_range(x.x1 - ro, x.x1 - ri, side);
    let (c, d) = cell_range(x.x1 + ri, x.x1 + ro, side);
    if b >= c { vec![(a, d)] } else { vec![(a, b), (c, d)] }
}

fn for_each_annulus_cell_in_row(x: Point2, r: f64, delta: f64, k: u32, row: i64, mut f: impl FnMut(i64)) {
    let side = 2f64.powi(-(k as i32));
    let yc = (row as f64 + 0.5) * side;
    for (a, b) in row_candidates(x, r, delta, yc, side) {
        for i in a..=b {
            if in_annulus(Point2::new((i as f64 + 0.5) * side, yc), x, r, delta) {
                f(i);
            }
        }
    }
}

/// Cells at scale `2^{-k}` whose centers lie in `S^δ(z)`.
pub fn annulus_cells(z: &CircleParam, delta: f64, k: u32) -> Vec<Cell> {
    let side = 2f64.powi(-(k as i32));
    let (r0, r1) = cell_range(z.center.x2 - z.radius - delta, z.center.x2 + z.radius + delta, side);
    let mut out = Vec::new();
    for j in r0..=r1 {
        for_each_annulus_cell_in_row(z.center, z.radius, delta, k, j, |i| out.push((i, j)));
    }
    out
}

pub fn multiplicity_field(mu: &DiscreteMeasure, delta: f64, grid_k: u32) -> MultiplicityField {
    let side = 2f64.powi(-(grid_k as i32));
    let atoms: Vec<(Point2, f64, i128)> = mu
        .atoms
        .iter()
        .map(|&(p, w)| (Point2::new(p[0], p[1]), p[2], fixed_weight(w)))
        .collect();
    if atoms.is_empty() {
        return MultiplicityField { delta, grid_k, x0: 0, y0: 0, width: 0, height: 0, values: Vec::new() };
    }
    let (mut xl, mut xh, mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, r, _) in &atoms {
        xl = xl.min(x.x1 - r - delta);
        xh = xh.max(x.x1 + r + delta);
        yl = yl.min(x.x2 - r - delta);
        yh = yh.max(x.x2 + r + delta);
    }
    let (x0, x1) = cell_range(xl, xh, side);
    let (y0, y1) = cell_range(yl, yh, side);
    let (width, height) = ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
    let mut values = vec![0i128; width * height];
    values.par_chunks_mut(width).enumerate().for_each(|(j, row)| {
        let row_index = y0 + j as i64;
        for &(x, r, w) in &atoms {
            for_each_annulus_cell_in_row(x, r, delta, grid_k, row_index, |i| {
                row[(i - x0) as usize] += w;
            });
        }
    });
    MultiplicityField { delta, grid_k, x0, y0, width, height, values }
}

/// Both sides of `Σ_w m(w) = Σ_z μ({z}) · #annulus cells(z)` in fixed point.
pub fn fubini_sides(mu: &DiscreteMeasure, field: &MultiplicityField) -> (i128, i128) {
    let rhs = mu
        .atoms
        .par_iter()
        .map(|&(p, w)| {
            let z = CircleParam { center: Point2::new(p[0], p[1]), radius: p[2] };
            fixed_weight(w) * annulus_cells(&z, field.delta, field.grid_k).len() as i128
        })
        .sum();
    (field.total(), rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub eta: f64,
    pub a: f64,
    pub lambda: f64,
    pub threshold: f64,
}

impl ThresholdParams {
    /// `η = min{ε/2t', (2s'-1)/2}`, `A = C δ^{-η}`,
    /// `λ = (2 c₀ 4^{s'} k₁²)^{-1} δ^{1-s'}` and threshold `A^{t'} λ^{-2t'} δ^{t'}`.
    pub fn new(epsilon: f64, s: f64, t: f64, k1: u32, c: f64, c0: f64) -> Result<Self, IncidenceError> {
        if !(s > 0.5 && s <= 1.0) || !(t > 0.0 && t <= 1.0) || epsilon <= 0.0 || c < 1.0 || c0 <= 0.0 || k1 == 0 {
            return Err(IncidenceError::InvalidParams(format!(
                "need 1/2 < s' <= 1, 0 < t' <= 1, ε > 0, C >= 1, c₀ > 0; got s' = {s}, t' = {t}, ε = {epsilon}, C = {c}, c₀ = {c0}"
            )));
        }
        let delta = 2f64.powi(-(k1 as i32));
        let eta = (epsilon / (2.0 * t)).min((2.0 * s - 1.0) / 2.0);
        let a = c * delta.powf(-eta);
        let lambda = delta.powf(1.0 - s) / (2.0 * c0 * 4f64.powf(s) * (k1 as f64).powi(2));
        let threshold = a.powf(t) * lambda.powf(-2.0 * t) * delta.powf(t);
        if !(lambda > 0.0 && lambda <= 1.0 && threshold > 0.0 && threshold.is_finite()) {
            return Err(IncidenceError::InvalidParams(format!("λ = {lambda}, threshold = {threshold}")));
        }
        Ok(Self { eta, a, lambda, threshold })
    }
}

/// `δ^{2-s'} / (4^{s'} k₁²)`.
pub fn neighborhood_area_bound(k1: u32, s: f64) -> f64 {
    2f64.powi(-(k1 as i32)).powf(2.0 - s) / (4f64.powf(s) * (k1 as f64).powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowMultiplicity {
    /// Cells whose centers are within δ of the circle's cloud points.
    pub s1: Vec<Cell>,
    /// Those among `s1` with `m < threshold`.
    pub s2: Vec<Cell>,
    pub area_s1: f64,
    pub area_s2: f64,
    pub ratio: f64,
    /// Lower bound `δ^{2-s'}/(4^{s'} k₁²)` on the neighborhood area.
    pub area_bound: f64,
}

pub fn low_multiplicity_subset(
    circle_points: &[Point2],
    field: &MultiplicityField,
    threshold: f64,
    s: f64,
    k1: u32,
) -> LowMultiplicity {
    let k = field.grid_k;
    let side = 2f64.powi(-(k as i32));
    let delta = field.delta;
    let mut s1 = BTreeSet::new();
    for p in circle_points {
        let (i0, i1) = cell_range(p.x1 - delta, p.x1 + delta, side);
        let (j0, j1) = cell_range(p.x2 - delta, p.x2 + delta, side);
        for j in j0..=j1 {
            for i in i0..=i1 {
                if cell_center((i, j), k).dist(*p) <= delta {
                    s1.insert((i, j));
                }
            }
        }
    }
    let s1: Vec<Cell> = s1.into_iter().collect();
    let s2: Vec<Cell> = s1.iter().copied().filter(|&c| field.m(c) < threshold).collect();
    let cell_area = side * side;
    let ratio = if s1.is_empty() { 0.0 } else { s2.len() as f64 / s1.len() as f64 };
    LowMultiplicity {
        area_s1: s1.len() as f64 * cell_area,
        area_s2: s2.len() as f64 * cell_area,
        ratio,
        area_bound: neighborhood_area_bound(k1, s),
        s1,
        s2,
    }
}
