//! Randomized suites and end-to-end experiment runs shared by the CLI and the
//! acceptance tests.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::fractal::{DiscreteMeasure, PointCloud, frostman_measure};
use crate::generators::DiscretizedFurstenbergSet;
use crate::geometry::{
    GeometryError, Point2, THREE_CIRCLE_CONSTANT, TriangleFrame, pairwise_rectangle, sample_w_region,
    three_circle_bound, RegionBound,
};
use crate::incidence::{
    ArcTriple, CoverGrid, IncidenceError, LowMultiplicity, MultiplicityField, ThresholdParams, TripleIndex, box_count,
    build_triple_index, extract_three_arcs, fubini_sides, low_multiplicity_subset, multiplicity_field,
    triple_upper_ratio,
};

/// Allowed ratio `diam W / (a/c²)` in the three-circle suite.
pub const W_DIAMETER_ALLOWANCE: f64 = 2.0 * THREE_CIRCLE_CONSTANT;
/// Fraction of circles allowed to fail arc extraction before a run counts as degenerate.
pub const MAX_ARC_FAILURE_RATE: f64 = 0.1;

fn uniform_point(rng: &mut ChaCha8Rng, half: f64) -> Point2 {
    Point2::new(rng.random_range(-half..=half), rng.random_range(-half..=half))
}

/// Frame with min pairwise distance at least `2c`. Half the draws put the
/// vertices on a circle with center in the reference box and radius in
/// `[1/2, 2]`, the rest anywhere in `[-2, 2]²`.
pub fn random_frame(rng: &mut ChaCha8Rng, c: f64) -> TriangleFrame {
    loop {
        let pts = if rng.random_bool(0.5) {
            let m = uniform_point(rng, 0.25);
            let h = rng.random_range(0.5..=2.0);
            [(); 3].map(|_| Point2::from_polar(m, h, rng.random_range(0.0..2.0 * PI)))
        } else {
            [(); 3].map(|_| uniform_point(rng, 2.0))
        };
        if let Ok(frame) = TriangleFrame::new(pts[0], pts[1], pts[2], c) {
            return frame;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma3cReport {
    pub trials: usize,
    pub seed: u64,
    /// Largest `diam W / (a/c²)` over all frames.
    pub max_ratio: f64,
    pub violations: usize,
    pub empty_regions: usize,
    pub collinear_injected: usize,
    pub collinear_nonempty: usize,
    pub rejected_inputs: usize,
    pub allowance: f64,
}

impl Lemma3cReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.collinear_nonempty == 0
    }
}

/// Randomized three-circle suite with lattice step `a/10`. Every tenth
/// trial also injects a collinear frame, and one hypothesis-violating input
/// per trial is checked for rejection.
pub fn lemma3c_suite(trials: usize, seed: u64) -> Lemma3cReport {
    struct Trial {
        ratio: f64,
        violation: bool,
        empty: bool,
        collinear: Option<bool>,
        rejected: bool,
    }
    let results: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let c = rng.random_range(0.05..=0.5);
            let limit = c * c / 20.0;
            let a = loop {
                let a = rng.random_range(0.0..limit);
                if a > 0.0 {
                    break a;
                }
            };
            let frame = random_frame(&mut rng, c);
            let sample = sample_w_region(&frame, a, a / 10.0).expect("hypotheses hold by construction");
            let ratio = sample.diameter / (a / (c * c));
            let collinear = (i % 10 == 0).then(|| {
                let p = uniform_point(&mut rng, 1.0);
                let dir = Point2::from_polar(Point2::ORIGIN, 1.0, rng.random_range(0.0..PI));
                let frame = TriangleFrame::new(p, p + dir * (2.0 * c), p + dir * (4.0 * c), c).expect("separated");
                let empty_bound = matches!(three_circle_bound(&frame, a), Ok(RegionBound::Empty));
                let sample = sample_w_region(&frame, a, a / 10.0).expect("hypotheses hold");
                empty_bound && sample.members == 0
            });
            let too_wide = sample_w_region(&frame, limit * 1.5, limit / 10.0);
            Trial {
                ratio,
                violation: ratio > W_DIAMETER_ALLOWANCE,
                empty: sample.members == 0,
                collinear,
                rejected: matches!(too_wide, Err(GeometryError::HypothesisViolated(_))),
            }
        })
        .collect();
    Lemma3cReport {
        trials,
        seed,
        max_ratio: results.iter().map(|t| t.ratio).fold(0.0, f64::max),
        violations: results.iter().filter(|t| t.violation).count(),
        empty_regions: results.iter().filter(|t| t.empty).count(),
        collinear_injected: results.iter().filter(|t| t.collinear.is_some()).count(),
        collinear_nonempty: results.iter().filter(|t| t.collinear == Some(false)).count(),
        rejected_inputs: results.iter().filter(|t| t.rejected).count(),
        allowance: W_DIAMETER_ALLOWANCE,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectangleReport {
    pub cases: usize,
    pub samples: usize,
    pub attempts: usize,
    pub outside: usize,
}

/// Samples points of `S^a(A, b) ∩ S^a(B, b)` by drawing `b` and two radii in
/// `[b - a, b + a]` and intersecting the circles, then checks rectangle
/// membership.
pub fn rectangle_suite(cases: usize, samples_per_case: usize, seed: u64) -> RectangleReport {
    let per_case: Vec<(usize, usize, usize)> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64).wrapping_mul(0xd134_2543_de82_ef95));
            let c = rng.random_range(0.05..=0.5);
            let a = rng.random_range(0.0..c * c / 20.0f64).max(f64::MIN_POSITIVE);
            let (pa, pb) = loop {
                let (p, q) = (uniform_point(&mut rng, 2.0), uniform_point(&mut rng, 2.0));
                if p.dist(q) >= 2.0 * c && p.dist(q) <= 3.5 {
                    break (p, q);
                }
            };
            let rect = pairwise_rectangle(pa, pb, a, c).expect("hypotheses hold by construction");
            let (mut got, mut attempts, mut outside) = (0, 0, 0);
            while got < samples_per_case && attempts < 1000 * samples_per_case {
                attempts += 1;
                let b = rng.random_range(0.5..=2.0);
                let ra = rng.random_range(b - a..=b + a);
                let rb = rng.random_range(b - a..=b + a);
                let Some(pts) = circle_intersection(pa, ra, pb, rb) else { continue };
                let p = pts[rng.random_range(0..2)];
                got += 1;
                if !rect.contains(p) {
                    outside += 1;
                }
            }
            (got, attempts, outside)
        })
        .collect();
    RectangleReport {
        cases,
        samples: per_case.iter().map(|c| c.0).sum(),
        attempts: per_case.iter().map(|c| c.1).sum(),
        outside: per_case.iter().map(|c| c.2).sum(),
    }
}

/// Intersection points of `S(p, r)` and `S(q, s)`, if the circles meet.
pub fn circle_intersection(p: Point2, r: f64, q: Point2, s: f64) -> Option<[Point2; 2]> {
    let d = p.dist(q);
    if d == 0.0 || d > r + s || d < (r - s).abs() {
        return None;
    }
    let u = (q - p) * (1.0 / d);
    let along = (d * d + r * r - s * s) / (2.0 * d);
    let h = (r * r - along * along).max(0.0).sqrt();
    let foot = p + u * along;
    Some([foot + u.perp() * h, foot - u.perp() * h])
}

/// Planar cloud of one circle of an assembled set.
pub fn circle_cloud(set: &DiscretizedFurstenbergSet, index: usize) -> PointCloud {
    let pts = set.circle_points(index).into_iter().map(|p| [p.x1, p.x2, 0.0]).collect();
    PointCloud::new(2, set.config.k1, pts).expect("circle points are finite")
}

#[derive(Debug, Clone)]
pub struct TripleRun {
    pub arcs: Vec<(usize, Result<ArcTriple, IncidenceError>)>,
    pub grid: CoverGrid,
    pub index: TripleIndex,
    pub tau: f64,
    pub ratio: f64,
}

impl TripleRun {
    pub fn failures(&self) -> usize {
        self.arcs.iter().filter(|a| a.1.is_err()).count()
    }

    pub fn failure_rate(&self) -> f64 {
        if self.arcs.is_empty() { 0.0 } else { self.failures() as f64 / self.arcs.len() as f64 }
    }
}

/// Arc trisection of every circle, the triple index at scale `δ` and its ratio.
pub fn run_triples(set: &DiscretizedFurstenbergSet, s: f64, eta: f64) -> TripleRun {
    let arcs: Vec<(usize, Result<ArcTriple, IncidenceError>)> = (0..set.circles().len())
        .into_par_iter()
        .map(|i| (i, extract_three_arcs(&set.circles()[i], &circle_cloud(set, i), s, eta)))
        .collect();
    let grid = box_count(&set.cloud, set.config.k1);
    let ok: Vec<(usize, ArcTriple)> = arcs.iter().filter_map(|(i, a)| a.as_ref().ok().map(|t| (*i, t.clone()))).collect();
    let index = build_triple_index(&ok, &grid);
    let tau = crate::incidence::arc_length(eta, s) / PI;
    let ratio = triple_upper_ratio(&index, &grid, tau);
    TripleRun { arcs, grid, index, tau, ratio }
}

#[derive(Debug, Clone)]
pub struct MultiplicityRun {
    pub measure: DiscreteMeasure,
    pub field: MultiplicityField,
    pub params: ThresholdParams,
    pub low: Vec<LowMultiplicity>,
    pub fubini: (i128, i128),
}

impl MultiplicityRun {
    /// Fraction of circles whose low-multiplicity share is at least one half.
    pub fn half_share(&self) -> f64 {
        if self.low.is_empty() {
            return 0.0;
        }
        self.low.iter().filter(|l| l.ratio >= 0.5).count() as f64 / self.low.len() as f64
    }
}

/// Field of `μ_V / k₁²` at scale `δ` with the low-multiplicity statistics of
/// every circle.
pub fn run_multiplicity(
    set: &DiscretizedFurstenbergSet,
    s: f64,
    t: f64,
    epsilon: f64,
    constant: f64,
    c0: f64,
) -> Result<MultiplicityRun, IncidenceError> {
    let k1 = set.config.k1;
    let params = ThresholdParams::new(epsilon, s, t, k1, constant, c0)?;
    let measure = frostman_measure(&set.family.set.cloud)
        .map_err(|e| IncidenceError::InvalidParams(e.to_string()))?
        .scaled(1.0 / (k1 as f64 * k1 as f64));
    let field = multiplicity_field(&measure, set.config.delta(), k1);
    let low = (0..set.circles().len())
        .into_par_iter()
        .map(|i| low_multiplicity_subset(&set.circle_points(i), &field, params.threshold, s, k1))
        .collect();
    let fubini = fubini_sides(&measure, &field);
    Ok(MultiplicityRun { measure, field, params, low, fubini })
}
