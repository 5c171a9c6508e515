//! Discrete carriers: point clouds at a dyadic resolution, (δ,q)-sets,
//! uniform Frostman measures and Hausdorff-content estimates.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::max_pairwise_distance;
use crate::spatial::{Buckets, Key, cell_key, dist2};

/// Regression guard on the measured non-concentration constant of extracted sets.
pub const NON_CONCENTRATION_PIN: f64 = 16.0;
/// Pinned factor in `β̂ δ^{-q} / 64 <= #P <= 64 δ^{-q}`.
pub const CARDINALITY_PIN: f64 = 64.0;

const AUDIT_SEED: u64 = 0x5eed_a0d1;

#[derive(Debug, Error)]
pub enum FractalError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid cloud: {0}")]
    InvalidCloud(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Finite point set in R^2 or R^3 at resolution `δ = 2^{-k}`.
///
/// Planar points carry `0.0` in the third slot. Construction removes points
/// that fall into an already occupied cell of side `δ/4` (first one wins).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    k: u32,
    points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(dim: usize, k: u32, points: Vec<[f64; 3]>) -> Result<Self, FractalError> {
        if dim != 2 && dim != 3 {
            return Err(FractalError::InvalidCloud(format!("dimension {dim} not in {{2, 3}}")));
        }
        if k == 0 || k > 40 {
            return Err(FractalError::InvalidCloud(format!("scale exponent {k} outside [1, 40]")));
        }
        if let Some(p) = points.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(FractalError::InvalidCloud(format!("non-finite point {p:?}")));
        }
        let side = 2f64.powi(-(k as i32)) / 4.0;
        let mut seen: HashSet<Key> = HashSet::with_capacity(points.len());
        let points = points
            .into_iter()
            .map(|mut p| {
                if dim == 2 {
                    p[2] = 0.0;
                }
                p
            })
            .filter(|p| seen.insert(cell_key(p, side, dim)))
            .collect();
        Ok(Self { dim, k, points })
    }

    pub fn planar(k: u32, points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, FractalError> {
        Self::new(2, k, points.into_iter().map(|(x, y)| [x, y, 0.0]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn delta(&self) -> f64 {
        2f64.powi(-(self.k as i32))
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        max_pairwise_distance(&self.points)
    }

    /// Same points reinterpreted at another resolution.
    pub fn with_k(&self, k: u32) -> Result<Self, FractalError> {
        Self::new(self.dim, k, self.points.clone())
    }

    /// CSV: a first line `dim,k`, then one comma-separated point per line.
    /// Coordinates use the shortest representation that parses back to the
    /// same bits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 40);
        let _ = writeln!(out, "{},{}", self.dim, self.k);
        for p in &self.points {
            if self.dim == 2 {
                let _ = writeln!(out, "{},{}", p[0], p[1]);
            } else {
                let _ = writeln!(out, "{},{},{}", p[0], p[1], p[2]);
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, FractalError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(FractalError::EmptyInput)?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        let parse_err = |line: usize, msg: String| FractalError::Parse { line: line + 1, msg };
        if fields.len() != 2 {
            return Err(parse_err(0, format!("expected header `dim,k`, got {header:?}")));
        }
        let dim: usize = fields[0].parse().map_err(|e| parse_err(0, format!("dim: {e}")))?;
        let k: u32 = fields[1].parse().map_err(|e| parse_err(0, format!("k: {e}")))?;
        let mut points = Vec::new();
        for (n, line) in lines {
            let coords: Vec<&str> = line.split(',').map(str::trim).collect();
            if coords.len() != dim {
                return Err(parse_err(n, format!("expected {dim} coordinates, got {}", coords.len())));
            }
            let mut p = [0.0; 3];
            for (ax, c) in coords.iter().enumerate() {
                p[ax] = c.parse().map_err(|e| parse_err(n, format!("{c:?}: {e}")))?;
            }
            points.push(p);
        }
        Self::new(dim, k, points)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), FractalError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, FractalError> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        bbox(&self.points)
    }
}

fn bbox(points: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for ax in 0..3 {
            lo[ax] = lo[ax].min(p[ax]);
            hi[ax] = hi[ax].max(p[ax]);
        }
    }
    (lo, hi)
}

/// δ-separated set with a measured non-concentration constant at exponent `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaQSet {
    pub cloud: PointCloud,
    pub q: f64,
    pub conc_measured: f64,
}

impl DeltaQSet {
    /// Wraps a cloud, auditing separation and non-concentration.
    pub fn audited(cloud: PointCloud, q: f64, trials: usize) -> Result<Self, FractalError> {
        if cloud.is_empty() {
            return Err(FractalError::EmptyInput);
        }
        if !(q > 0.0 && q <= cloud.dim() as f64) {
            return Err(FractalError::InvalidCloud(format!("exponent q = {q} outside (0, {}]", cloud.dim())));
        }
        let sep = min_separation(&cloud);
        if sep < cloud.delta() {
            return Err(FractalError::InvalidCloud(format!(
                "minimum separation {sep} below delta {}",
                cloud.delta()
            )));
        }
        let conc_measured = non_concentration_ratio(&cloud, q, trials);
        Ok(Self { cloud, q, conc_measured })
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }
}

/// Smallest pairwise distance (infinite for fewer than two points).
pub fn min_separation(cloud: &PointCloud) -> f64 {
    let pts = cloud.points();
    let delta = cloud.delta();
    let buckets = Buckets::new(pts, cloud.dim(), delta);
    let best = pts
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut m = f64::INFINITY;
            buckets.for_each_in_ball(pts, p, 2.0 * delta, |j| {
                if j as usize != i {
                    m = m.min(dist2(p, &pts[j as usize]));
                }
            });
            m
        })
        .reduce(|| f64::INFINITY, f64::min);
    if best.is_finite() {
        best.sqrt()
    } else if pts.len() < 2 {
        f64::INFINITY
    } else {
        // Nothing within 2δ of anything: separation exceeds 2δ.
        2.0 * delta
    }
}

/// Largest audited value of `#(P ∩ B(x, r)) / (r/δ)^q`.
///
/// Centers: data points (all of them, or `trials` evenly strided ones) plus
/// `trials` seeded random points in the bounding box. Radii: `δ 2^j`, `j >= 1`,
/// up to the first one exceeding the bounding-box diagonal.
pub fn non_concentration_ratio(cloud: &PointCloud, q: f64, trials: usize) -> f64 {
    let pts = cloud.points();
    if pts.is_empty() {
        return 0.0;
    }
    let delta = cloud.delta();
    let trials = trials.max(1);
    let (lo, hi) = cloud.bbox();
    let diag = dist2(&lo, &hi).sqrt();

    let mut centers: Vec<[f64; 3]> = if pts.len() <= trials {
        pts.to_vec()
    } else {
        let stride = pts.len() as f64 / trials as f64;
        (0..trials).map(|i| pts[(i as f64 * stride) as usize]).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
    for _ in 0..trials {
        let mut c = [0.0; 3];
        for ax in 0..cloud.dim() {
            c[ax] = if hi[ax] > lo[ax] { rng.random_range(lo[ax]..=hi[ax]) } else { lo[ax] };
        }
        centers.push(c);
    }

    let mut ratio = 0.0f64;
    let mut r = 2.0 * delta;
    loop {
        let buckets = Buckets::new(pts, cloud.dim(), r);
        let scale = (r / delta).powf(q);
        let level = centers
            .par_iter()
            .map(|c| buckets.count_in_ball(pts, c, r) as f64 / scale)
            .reduce(|| 0.0, f64::max);
        ratio = ratio.max(level);
        if r > diag {
            break;
        }
        r *= 2.0;
    }
    ratio
}

pub fn verify_non_concentration(set: &DeltaQSet, trials: usize) -> f64 {
    non_concentration_ratio(&set.cloud, set.q, trials)
}

/// Dyadic top-down selection of a (δ,q)-subset of `source`, `δ = 2^{-k}`.
///
/// Each dyadic cube of side `2^{-l}` keeps at most `⌈2^{q(k-l)}⌉` retained
/// δ-cubes below it; children with the most surviving δ-cubes are served
/// first. One point is kept per retained δ-cube, and a final pass drops points
/// closer than δ to an already kept point.
pub fn extract_delta_q_set(source: &PointCloud, k: u32, q: f64) -> Result<DeltaQSet, FractalError> {
    if source.is_empty() {
        return Err(FractalError::EmptyInput);
    }
    let dim = source.dim();
    if !(q > 0.0 && q <= dim as f64) {
        return Err(FractalError::InvalidCloud(format!("exponent q = {q} outside (0, {dim}]")));
    }
    let delta = 2f64.powi(-(k as i32));
    let (lo, hi) = source.bbox();
    let extent = (0..dim).map(|ax| hi[ax] - lo[ax]).fold(0.0, f64::max);
    // Root cube side 2^{-root} must strictly exceed the extent.
    let mut root = k as i32;
    while 2f64.powi(-root) <= extent {
        root -= 1;
    }

    // Representative per occupied δ-cube: lexicographically smallest point.
    let mut leaves: BTreeMap<[u64; 3], [f64; 3]> = BTreeMap::new();
    for p in source.points() {
        let mut key = [0u64; 3];
        for ax in 0..dim {
            key[ax] = ((p[ax] - lo[ax]) / delta).floor() as u64;
        }
        leaves
            .entry(key)
            .and_modify(|rep| {
                if p.partial_cmp(rep) == Some(Ordering::Less) {
                    *rep = *p;
                }
            })
            .or_insert(*p);
    }
    let keys: Vec<[u64; 3]> = leaves.keys().copied().collect();
    let quota = |level: i32| -> usize {
        let v = (q * f64::from(k as i32 - level)).exp2().ceil();
        if v >= usize::MAX as f64 { usize::MAX } else { v as usize }
    };

    let mut selected: Vec<[u64; 3]> = Vec::new();
    let budget = quota(root).min(keys.len());
    distribute(&keys, root, k as i32, budget, &quota, &mut selected);
    selected.sort_unstable();

    // Enforce δ-separation among representatives of neighbouring cubes.
    let mut kept: Vec<[f64; 3]> = Vec::with_capacity(selected.len());
    let mut grid: std::collections::HashMap<Key, Vec<usize>> = std::collections::HashMap::new();
    let d2 = delta * delta;
    for key in &selected {
        let p = leaves[key];
        let ck = cell_key(&p, delta, dim);
        let mut clash = false;
        'scan: for di in -1..=1i64 {
            for dj in -1..=1i64 {
                for dk in if dim == 3 { -1..=1i64 } else { 0..=0 } {
                    if let Some(ids) = grid.get(&[ck[0] + di, ck[1] + dj, ck[2] + dk]) {
                        if ids.iter().any(|&i| dist2(&kept[i], &p) < d2) {
                            clash = true;
                            break 'scan;
                        }
                    }
                }
            }
        }
        if !clash {
            grid.entry(ck).or_default().push(kept.len());
            kept.push(p);
        }
    }
    let cloud = PointCloud::new(dim, k, kept)?;
    let conc_measured = non_concentration_ratio(&cloud, q, 256);
    Ok(DeltaQSet { cloud, q, conc_measured })
}

fn distribute(
    leaves: &[[u64; 3]],
    level: i32,
    k: i32,
    budget: usize,
    quota: &dyn Fn(i32) -> usize,
    out: &mut Vec<[u64; 3]>,
) {
    if budget == 0 || leaves.is_empty() {
        return;
    }
    if level == k {
        out.push(leaves[0]);
        return;
    }
    let shift = (k - level - 1) as u32;
    let mut children: BTreeMap<[u64; 3], Vec<[u64; 3]>> = BTreeMap::new();
    for leaf in leaves {
        let child = leaf.map(|c| if shift >= 64 { 0 } else { c >> shift });
        children.entry(child).or_default().push(*leaf);
    }
    let mut order: Vec<(&[u64; 3], &Vec<[u64; 3]>)> = children.iter().collect();
    order.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
    let cap = quota(level + 1);
    let mut remaining = budget;
    for (_, members) in order {
        if remaining == 0 {
            break;
        }
        let share = cap.min(members.len()).min(remaining);
        distribute(members, level + 1, k, share, quota, out);
        remaining -= share;
    }
}

/// Atomic measure on R^2 or R^3.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub dim: usize,
    pub atoms: Vec<([f64; 3], f64)>,
}

impl DiscreteMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Mass of the closed ball `B(center, r)`.
    pub fn measure_ball(&self, center: &[f64; 3], r: f64) -> f64 {
        let r2 = r * r;
        self.atoms.iter().filter(|(p, _)| dist2(p, center) <= r2).map(|a| a.1).sum()
    }

    /// Every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { dim: self.dim, atoms: self.atoms.iter().map(|&(p, w)| (p, w * factor)).collect() }
    }
}

/// Uniform probability measure `(1/#P) Σ Δ_p`.
pub fn frostman_measure(cloud: &PointCloud) -> Result<DiscreteMeasure, FractalError> {
    if cloud.is_empty() {
        return Err(FractalError::EmptyInput);
    }
    let w = 1.0 / cloud.len() as f64;
    Ok(DiscreteMeasure { dim: cloud.dim(), atoms: cloud.points().iter().map(|&p| (p, w)).collect() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentEstimate {
    /// `Σ (2 r_i)^s` of the recorded cover.
    pub upper: f64,
    /// Mass-distribution lower bound.
    pub lower: f64,
    pub cover: Vec<([f64; 3], f64)>,
}

impl ContentEstimate {
    /// Cost of the recorded cover at another exponent.
    pub fn cover_cost(&self, s: f64) -> f64 {
        self.cover.iter().map(|&(_, r)| (2.0 * r).powf(s)).sum()
    }
}

/// Ratio between consecutive radii of the mass-distribution ladder.
const LADDER: f64 = 1.189_207_115_002_721; // 2^{1/4}

/// Per-point share of the mass-distribution lower bound on `H^s_∞`.
///
/// Gives every point mass 1. A cover element of diameter `d ∈ [ρ/λ, ρ)` lies in
/// the ball of radius `ρ` around any of its points, so it carries at most
/// `maxcount(ρ)` points while costing at least `(ρ/λ)^s`. Elements of diameter
/// at least `diam P` cost at least `(diam P)^s` and carry at most `#P`. The
/// content of any subset `E` is then at least `#E * unit`. Covers are
/// restricted to elements of diameter at least `r_min`, which is the content of
/// the `r_min`-fattened set up to constants.
pub fn mass_distribution_unit(cloud: &PointCloud, s: f64, r_min: f64) -> f64 {
    let pts = cloud.points();
    let n = pts.len();
    if n == 0 {
        return 0.0;
    }
    let diam = cloud.diameter();
    let mut unit = if n == 1 { f64::INFINITY } else { diam.powf(s) / n as f64 };
    let mut rho = r_min * LADDER;
    loop {
        let count = max_ball_count(pts, cloud.dim(), rho).min(n);
        unit = unit.min((rho / LADDER).powf(s) / count as f64);
        if rho >= diam {
            break;
        }
        rho *= LADDER;
    }
    unit
}

/// `max_p #(P ∩ B(p, ρ))` over data points `p`, or an upper bound on it when
/// exact counting would be expensive.
///
/// Points are binned in cells of side `ρ/g`. Each cell gets an upper bound on
/// the count of any ball centered inside it from row prefix sums; cells are
/// then counted exactly in decreasing order of bound until no remaining cell
/// can beat the best exact count, or the work budget runs out.
fn max_ball_count(pts: &[[f64; 3]], dim: usize, rho: f64) -> usize {
    const WORK_BUDGET: usize = 2_000_000;
    let g = if dim == 2 { 8.0 } else { 4.0 };
    let side = rho / g;
    // Cells sorted row-major with the first axis fastest.
    let mut order: Vec<(Key, u32)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let k = cell_key(p, side, dim);
            ([k[2], k[1], k[0]], i as u32)
        })
        .collect();
    order.sort_unstable();
    let mut cells: Vec<(Key, usize, usize)> = Vec::new();
    for (n, (key, _)) in order.iter().enumerate() {
        match cells.last_mut() {
            Some(last) if last.0 == *key => last.2 = n + 1,
            _ => cells.push((*key, n, n + 1)),
        }
    }
    let mut rows: Vec<([i64; 2], usize, usize)> = Vec::new();
    for (c, (key, _, _)) in cells.iter().enumerate() {
        match rows.last_mut() {
            Some(last) if last.0 == [key[0], key[1]] => last.2 = c + 1,
            _ => rows.push(([key[0], key[1]], c, c + 1)),
        }
    }
    let reach = g as i64 + 1;
    let gap = |d: i64| (d.abs() - 1).max(0) as f64 * side;
    let span = |ax: usize| if ax < dim { -reach..=reach } else { 0..=0 };
    let mut row_offsets: Vec<(i64, i64, i64)> = Vec::new();
    for dk in span(2) {
        for dj in span(1) {
            let used = gap(dj).powi(2) + gap(dk).powi(2);
            if used <= rho * rho {
                let w = (((rho * rho - used).sqrt() / side).floor() as i64 + 1).min(reach);
                row_offsets.push((dk, dj, w));
            }
        }
    }
    // Range of cells (indices into `cells`) in one offset row around `key`.
    let cell_range = |key: &Key, &(dk, dj, w): &(i64, i64, i64)| -> Option<(usize, usize)> {
        let target = [key[0] + dk, key[1] + dj];
        let r = rows.binary_search_by(|row| row.0.cmp(&target)).ok()?;
        let (_, a, b) = rows[r];
        let row = &cells[a..b];
        let lo = a + row.partition_point(|c| c.0[2] < key[2] - w);
        let hi = a + row.partition_point(|c| c.0[2] <= key[2] + w);
        (lo < hi).then_some((lo, hi))
    };
    let mut bounds: Vec<(usize, usize)> = (0..cells.len())
        .map(|c| {
            let key = &cells[c].0;
            let b = row_offsets
                .iter()
                .filter_map(|o| cell_range(key, o))
                .map(|(lo, hi)| cells[hi - 1].2 - cells[lo].1)
                .sum::<usize>();
            (b, c)
        })
        .collect();
    bounds.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let rho2 = rho * rho;
    let mut best = 0;
    let mut work = 0usize;
    for (bound, c) in bounds {
        if bound <= best {
            break;
        }
        let (key, start, end) = cells[c];
        work += (end - start) * bound;
        if work > WORK_BUDGET {
            return bound;
        }
        let ranges: Vec<(usize, usize)> = row_offsets.iter().filter_map(|o| cell_range(&key, o)).collect();
        for &(_, i) in &order[start..end] {
            let p = &pts[i as usize];
            let count: usize = ranges
                .iter()
                .map(|&(lo, hi)| {
                    order[cells[lo].1..cells[hi - 1].2]
                        .iter()
                        .filter(|(_, j)| dist2(p, &pts[*j as usize]) <= rho2)
                        .count()
                })
                .sum();
            best = best.max(count);
        }
    }
    best
}

pub fn content_lower(cloud: &PointCloud, s: f64, r_min: f64) -> f64 {
    cloud.len() as f64 * mass_distribution_unit(cloud, s, r_min)
}

#[derive(Debug, PartialEq)]
struct Candidate {
    ratio: f64,
    id: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ratio.total_cmp(&other.ratio).then_with(|| other.id.cmp(&self.id))
    }
}

/// Greedy cover (upper) and mass-distribution bound (lower) for `H^s_∞`.
///
/// Candidate balls: for each radius `ρ = r_min 2^j`, one ball of radius `ρ` at
/// the center of every occupied grid cell of side `ρ`, plus one ball around
/// the bounding-box center holding the whole set. The greedy step picks the
/// ball with the most uncovered points per unit cost `(2ρ)^s`, using lazy
/// re-evaluation.
pub fn content_greedy(cloud: &PointCloud, s: f64, r_min: f64) -> ContentEstimate {
    let pts = cloud.points();
    let n = pts.len();
    let lower = content_lower(cloud, s, r_min);
    if n == 0 {
        return ContentEstimate { upper: 0.0, lower: 0.0, cover: Vec::new() };
    }
    let dim = cloud.dim();
    let (lo, hi) = cloud.bbox();
    let mut mid = [0.0; 3];
    for ax in 0..dim {
        mid[ax] = 0.5 * (lo[ax] + hi[ax]);
    }
    let global_r = pts.iter().map(|p| dist2(p, &mid)).fold(0.0, f64::max).sqrt().max(r_min);

    let mut balls: Vec<([f64; 3], f64, usize)> = vec![(mid, global_r, usize::MAX)];
    let mut levels: Vec<Buckets> = Vec::new();
    let mut rho = r_min;
    loop {
        let b = Buckets::new(pts, dim, rho);
        let mut keys: Vec<&Key> = b.cells.keys().collect();
        keys.sort_unstable();
        for key in keys {
            let mut c = [0.0; 3];
            for ax in 0..dim {
                c[ax] = (key[ax] as f64 + 0.5) * rho;
            }
            balls.push((c, rho, levels.len()));
        }
        let single = b.cells.len() == 1;
        levels.push(b);
        if single || rho >= global_r {
            break;
        }
        rho *= 2.0;
    }

    let mut covered = vec![false; n];
    let gain = |ball: &([f64; 3], f64, usize), covered: &[bool]| -> usize {
        let (c, r, level) = ball;
        if *level == usize::MAX {
            return covered.iter().filter(|&&x| !x).count();
        }
        let mut g = 0;
        levels[*level].for_each_in_ball(pts, c, *r, |i| {
            if !covered[i as usize] {
                g += 1;
            }
        });
        g
    };
    let cost = |r: f64| (2.0 * r).powf(s);

    let mut heap: BinaryHeap<Candidate> = balls
        .iter()
        .enumerate()
        .map(|(id, b)| Candidate { ratio: gain(b, &covered) as f64 / cost(b.1), id })
        .collect();
    let mut remaining = n;
    let mut cover = Vec::new();
    let mut upper = 0.0;
    while remaining > 0 {
        let Some(top) = heap.pop() else { break };
        let ball = &balls[top.id];
        let g = gain(ball, &covered);
        if g == 0 {
            continue;
        }
        let ratio = g as f64 / cost(ball.1);
        if heap.peek().is_some_and(|next| next.ratio > ratio) {
            heap.push(Candidate { ratio, id: top.id });
            continue;
        }
        let (c, r, level) = *ball;
        if level == usize::MAX {
            covered.iter_mut().for_each(|x| *x = true);
        } else {
            levels[level].for_each_in_ball(pts, &c, r, |i| covered[i as usize] = true);
        }
        remaining -= g;
        upper += cost(r);
        cover.push((c, r));
    }
    ContentEstimate { upper, lower: lower.min(upper), cover }
}
