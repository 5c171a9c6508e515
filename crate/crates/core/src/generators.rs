//! Constructions of discretized circular Furstenberg sets and of the planar
//! sets used alongside them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fractal::{DeltaQSet, FractalError, PointCloud};
use crate::geometry::{CircleParam, Point2};

/// Smallest allowed `k1`; coarser grids (δ >= 2^{-5}) are rejected.
pub const MIN_K1: u32 = 6;
pub const MAX_K1: u32 = 24;
/// Cardinality window `[1/64, 64] δ^{-s}` for angular sets.
pub const ANGULAR_CARDINALITY_PIN: f64 = 64.0;
/// Largest shortfall allowed between requested and realized Cantor dimension.
pub const DIMENSION_SLACK: f64 = 0.02;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("delta too coarse: k1 = {0} (need k1 >= {MIN_K1})")]
    DeltaTooCoarse(u32),
    #[error("inversion undefined at the origin")]
    OriginInput,
    #[error("point {0:?} outside the annulus 1 <= |p| <= 4")]
    OutOfAnnulus([f64; 2]),
    #[error(transparent)]
    Fractal(#[from] FractalError),
}

/// Self-similar Cantor set: subdivide into `m` pieces, keep those in `pattern`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub m: u32,
    pub pattern: Vec<u32>,
    pub levels: u32,
}

impl CantorSpec {
    pub fn new(m: u32, pattern: Vec<u32>, levels: u32) -> Result<Self, GeneratorError> {
        if m < 2 {
            return Err(GeneratorError::ConfigInvalid(format!("cantor subdivision m = {m} < 2")));
        }
        if pattern.is_empty() || pattern.len() > m as usize {
            return Err(GeneratorError::ConfigInvalid(format!("cantor pattern {pattern:?} must keep 1..=m pieces")));
        }
        if pattern.windows(2).any(|w| w[0] >= w[1]) || pattern.iter().any(|&i| i >= m) {
            return Err(GeneratorError::ConfigInvalid(format!(
                "cantor pattern {pattern:?} must be strictly increasing indices below m = {m}"
            )));
        }
        Ok(Self { m, pattern, levels })
    }

    pub fn keep(&self) -> u32 {
        self.pattern.len() as u32
    }

    pub fn dimension(&self) -> f64 {
        (self.keep() as f64).ln() / (self.m as f64).ln()
    }

    pub fn keeps_all(&self) -> bool {
        self.keep() == self.m
    }

    pub fn cardinality(&self) -> u64 {
        (self.keep() as u64).pow(self.levels)
    }
}

/// Subdivision and pattern without a depth, as written in configs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorPattern {
    pub m: u32,
    pub pattern: Vec<u32>,
}

impl CantorPattern {
    pub fn with_levels(&self, levels: u32) -> Result<CantorSpec, GeneratorError> {
        CantorSpec::new(self.m, self.pattern.clone(), levels)
    }

    pub fn dimension(&self) -> f64 {
        (self.pattern.len() as f64).ln() / (self.m as f64).ln()
    }
}

/// Picks `(m, pattern)` whose dimension `log n / log m` is closest to `s`
/// among those at least `s - 0.02`, preferring `m <= 8` and falling back to
/// `m <= 64` when no small subdivision comes within 0.05. Kept indices are
/// spread evenly over `0..m`.
pub fn cantor_for_dimension(s: f64) -> CantorPattern {
    let search = |max_m: u32| {
        let mut best: Option<(f64, u32, u32)> = None;
        for m in 2..=max_m {
            for n in 1..=m {
                let d = (n as f64).ln() / (m as f64).ln();
                if d < s - DIMENSION_SLACK {
                    continue;
                }
                let err = (d - s).abs();
                if best.is_none_or(|(e, _, _)| err < e - 1e-12) {
                    best = Some((err, m, n));
                }
            }
        }
        best
    };
    let (err, m, n) = search(8).expect("n = m always qualifies");
    let (_, m, n) = if err > 0.05 { search(64).expect("n = m always qualifies") } else { (err, m, n) };
    let pattern = if n == 1 {
        vec![0]
    } else {
        (0..n).map(|i| ((i as f64) * (m - 1) as f64 / (n - 1) as f64).round() as u32).collect()
    };
    CantorPattern { m, pattern }
}

/// Largest `L` with `length / m^L >= spacing`.
pub fn levels_for(length: f64, spacing: f64, m: u32) -> u32 {
    let mut levels = 0;
    let mut width = length;
    while width / m as f64 >= spacing {
        width /= m as f64;
        levels += 1;
    }
    levels
}

/// Left endpoints of the retained level-`k` intervals, mapped affinely onto
/// `[lo, hi]`, in increasing order.
pub fn cantor_points(spec: &CantorSpec, lo: f64, hi: f64) -> Vec<f64> {
    let mut unit = vec![0.0f64];
    let mut width = 1.0f64;
    for _ in 0..spec.levels {
        width /= spec.m as f64;
        unit = unit
            .iter()
            .flat_map(|&x| spec.pattern.iter().map(move |&d| x + d as f64 * width))
            .collect();
    }
    unit.into_iter().map(|x| lo + (hi - lo) * x).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Centers at the origin, radii a Cantor set in `[1/2, 2]`.
    Concentric,
    /// Radius 1, centers a Cantor set on `{(u, 0) : |u| <= 1/4}`.
    CenterSegment,
    /// Centers `(p - 1/4, 0)`, radius `1/2 + p`, `p` a Cantor set in `[0, 1/2]`.
    RadiusGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FurstenbergConfig {
    pub s: f64,
    pub t: f64,
    pub k1: u32,
    pub preset: Preset,
    pub seed: u64,
    /// Pattern for the parameter set; chosen from `t` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cantor: Option<CantorPattern>,
}

impl FurstenbergConfig {
    pub fn new(s: f64, t: f64, k1: u32, preset: Preset, seed: u64) -> Self {
        Self { s, t, k1, preset, seed, cantor: None }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(GeneratorError::ConfigInvalid(format!("s = {} outside (0, 1]", self.s)));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(GeneratorError::ConfigInvalid(format!("t = {} outside (0, 1]", self.t)));
        }
        if self.k1 < MIN_K1 {
            return Err(GeneratorError::DeltaTooCoarse(self.k1));
        }
        if self.k1 > MAX_K1 {
            return Err(GeneratorError::ConfigInvalid(format!("k1 = {} above {MAX_K1}", self.k1)));
        }
        if let Some(c) = &self.cantor {
            c.with_levels(0)?;
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        2f64.powi(-(self.k1 as i32))
    }

    pub fn parameter_pattern(&self) -> CantorPattern {
        self.cantor.clone().unwrap_or_else(|| cantor_for_dimension(self.t))
    }

    pub fn angular_pattern(&self) -> CantorPattern {
        cantor_for_dimension(self.s)
    }
}

/// The circle family `V` together with the Cantor data that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterFamily {
    pub set: DeltaQSet,
    /// Same circles as `set`, sorted lexicographically by `(x1, x2, r)`.
    pub circles: Vec<CircleParam>,
    pub cantor: CantorSpec,
}

impl ParameterFamily {
    pub fn realized_t(&self) -> f64 {
        self.cantor.dimension()
    }
}

fn parameter_circles(config: &FurstenbergConfig) -> Result<(Vec<CircleParam>, CantorSpec), GeneratorError> {
    config.validate()?;
    let delta = config.delta();
    let pattern = config.parameter_pattern();
    let (lo, hi) = match config.preset {
        Preset::Concentric => (0.5, 2.0),
        Preset::CenterSegment => (-0.25, 0.25),
        Preset::RadiusGraph => (0.0, 0.5),
    };
    let spec = pattern.with_levels(levels_for(hi - lo, delta, pattern.m))?;
    let mut circles: Vec<CircleParam> = cantor_points(&spec, lo, hi)
        .into_iter()
        .map(|u| match config.preset {
            Preset::Concentric => CircleParam { center: Point2::ORIGIN, radius: u },
            Preset::CenterSegment => CircleParam { center: Point2::new(u, 0.0), radius: 1.0 },
            Preset::RadiusGraph => CircleParam { center: Point2::new(u - 0.25, 0.0), radius: 0.5 + u },
        })
        .collect();
    circles.sort_by(|a, b| a.to_coords().partial_cmp(&b.to_coords()).expect("finite parameters"));
    Ok((circles, spec))
}

pub fn generate_parameter_set(config: &FurstenbergConfig) -> Result<ParameterFamily, GeneratorError> {
    let (circles, cantor) = parameter_circles(config)?;
    let cloud = PointCloud::new(3, config.k1, circles.iter().map(CircleParam::to_coords).collect())?;
    let q = if cantor.dimension() > 0.0 { cantor.dimension() } else { config.t };
    let set = DeltaQSet::audited(cloud, q, 256)?;
    Ok(ParameterFamily { set, circles, cantor })
}


/// Rotation applied to an angular set generated with `seed`.
pub fn angular_offset(seed: u64) -> f64 {
    ChaCha8Rng::seed_from_u64(seed).random_range(0.0..2.0 * PI)
}

/// Unrotated angular set in `[0, 2π)` and the Cantor data behind it.
pub fn angular_template(radius: f64, s: f64, delta: f64) -> (Vec<f64>, CantorSpec) {
    let pattern = cantor_for_dimension(s);
    let slots = 2.0 * PI * radius / delta;
    if pattern.pattern.len() == pattern.m as usize {
        // Full (δ/r)-grid.
        let count = (slots * (1.0 - 1e-12)).floor().max(1.0) as usize;
        let spec = CantorSpec { m: 2, pattern: vec![0, 1], levels: 0 };
        return ((0..count).map(|i| 2.0 * PI * i as f64 / count as f64).collect(), spec);
    }
    let spec = pattern
        .with_levels(levels_for(2.0 * PI, delta / radius * (1.0 + 1e-12), pattern.m))
        .expect("pattern from cantor_for_dimension is valid");
    (cantor_points(&spec, 0.0, 2.0 * PI), spec)
}

/// Cantor-type angular set of dimension about `s` on the circle `z`, rotated
/// by a seed-dependent offset. Angles are `(δ/r)`-separated on the circle.
pub fn generate_angular_set(z: &CircleParam, s: f64, delta: f64, seed: u64) -> Vec<f64> {
    let (template, _) = angular_template(z.radius, s, delta);
    let offset = angular_offset(seed);
    let mut angles: Vec<f64> = template
        .into_iter()
        .map(|a| {
            let r = (a + offset).rem_euclid(2.0 * PI);
            if r >= 2.0 * PI { 0.0 } else { r }
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Smallest circular gap between consecutive angles (`2π` for a single angle).
pub fn min_circular_gap(sorted: &[f64]) -> f64 {
    if sorted.len() < 2 {
        return 2.0 * PI;
    }
    let wrap = sorted[0] + 2.0 * PI - sorted[sorted.len() - 1];
    sorted.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min)
}

/// Parameter family, per-circle angular sets and the planar union.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedFurstenbergSet {
    pub config: FurstenbergConfig,
    pub family: ParameterFamily,
    /// `angular[i]` belongs to `family.circles[i]`.
    pub angular: Vec<Vec<f64>>,
    pub angular_spec: CantorSpec,
    pub cloud: PointCloud,
}

impl DiscretizedFurstenbergSet {
    pub fn circles(&self) -> &[CircleParam] {
        &self.family.circles
    }

    pub fn circle_points(&self, index: usize) -> Vec<Point2> {
        let z = self.family.circles[index];
        self.angular[index].iter().map(|&a| z.point_at(a)).collect()
    }

    pub fn realized_s(&self) -> f64 {
        self.angular_spec.dimension()
    }

    pub fn realized_t(&self) -> f64 {
        self.family.realized_t()
    }
}

pub fn assemble_furstenberg(config: &FurstenbergConfig) -> Result<DiscretizedFurstenbergSet, GeneratorError> {
    let family = generate_parameter_set(config)?;
    let delta = config.delta();
    let angular: Vec<Vec<f64>> = family
        .circles
        .par_iter()
        .map(|z| generate_angular_set(z, config.s, delta, config.seed))
        .collect();
    let angular_spec = angular_template(1.0, config.s, delta).1;
    let points: Vec<[f64; 3]> = family
        .circles
        .iter()
        .zip(&angular)
        .flat_map(|(z, angles)| {
            angles.iter().map(move |&a| {
                let p = z.point_at(a);
                [p.x1, p.x2, 0.0]
            })
        })
        .collect();
    let cloud = PointCloud::new(2, config.k1, points)?;
    Ok(DiscretizedFurstenbergSet { config: config.clone(), family, angular, angular_spec, cloud })
}

/// Visits every circle point of the configured set without materializing the
/// cloud. Points arrive per circle in sorted circle order; no deduplication.
pub fn for_each_circle_point(
    config: &FurstenbergConfig,
    mut visit: impl FnMut(usize, Point2),
) -> Result<(), GeneratorError> {
    let (circles, _) = parameter_circles(config)?;
    let delta = config.delta();
    for (i, z) in circles.iter().enumerate() {
        for a in generate_angular_set(z, config.s, delta, config.seed) {
            visit(i, z.point_at(a));
        }
    }
    Ok(())
}

/// Complex reciprocal `z ↦ 1/z`.
pub fn inversion_map(p: Point2) -> Result<Point2, GeneratorError> {
    let r2 = p.x1 * p.x1 + p.x2 * p.x2;
    if r2 == 0.0 {
        return Err(GeneratorError::OriginInput);
    }
    Ok(Point2::new(p.x1 / r2, -p.x2 / r2))
}

/// Pointwise inversion of a cloud supported in `1 <= |p| <= 4`.
pub fn invert_set(cloud: &PointCloud) -> Result<PointCloud, GeneratorError> {
    if cloud.dim() != 2 {
        return Err(GeneratorError::ConfigInvalid("inversion needs a planar cloud".into()));
    }
    let mut out = Vec::with_capacity(cloud.len());
    for p in cloud.points() {
        let q = Point2::new(p[0], p[1]);
        let n = q.norm();
        if !(1.0..=4.0).contains(&n) {
            return Err(GeneratorError::OutOfAnnulus([p[0], p[1]]));
        }
        let w = inversion_map(q)?;
        out.push([w.x1, w.x2, 0.0]);
    }
    Ok(PointCloud::new(2, cloud.k(), out)?)
}

/// Union of lines through `1 <= |p| <= 4`, one per direction of a maximal
/// δ-separated set of directions in `[0, π)`, each carrying a Cantor set of
/// dimension about `s`.
pub fn linear_furstenberg(s: f64, k1: u32, seed: u64) -> Result<PointCloud, GeneratorError> {
    let directions = (PI * 2f64.powi(k1 as i32)).floor() as usize;
    linear_furstenberg_with_directions(s, k1, seed, directions)
}

pub fn linear_furstenberg_with_directions(
    s: f64,
    k1: u32,
    seed: u64,
    directions: usize,
) -> Result<PointCloud, GeneratorError> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(GeneratorError::ConfigInvalid(format!("s = {s} outside (0, 1]")));
    }
    if k1 == 0 || k1 > MAX_K1 {
        return Err(GeneratorError::ConfigInvalid(format!("k1 = {k1} outside [1, {MAX_K1}]")));
    }
    let delta = 2f64.powi(-(k1 as i32));
    let pattern = cantor_for_dimension(s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    for j in 0..directions {
        let theta = PI * j as f64 / directions as f64;
        let normal = Point2::new(theta.cos(), theta.sin());
        let along = normal.perp();
        let offset: f64 = 1.5 + rng.random_range(0.0..1.0);
        let half = (16.0 - offset * offset).sqrt();
        let us: Vec<f64> = if pattern.pattern.len() == pattern.m as usize {
            let count = (2.0 * half / delta).floor() as usize;
            (0..count).map(|i| -half + 2.0 * half * i as f64 / count as f64).collect()
        } else {
            let spec = pattern.with_levels(levels_for(2.0 * half, delta, pattern.m))?;
            cantor_points(&spec, -half, half)
        };
        for u in us {
            let p = normal * offset + along * u;
            if (1.0..=4.0).contains(&p.x1.hypot(p.x2)) && (1.0..=4.0).contains(&p.norm()) {
                points.push([p.x1, p.x2, 0.0]);
            }
        }
    }
    Ok(PointCloud::new(2, k1, points)?)
}
