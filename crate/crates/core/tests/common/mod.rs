//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use flab::experiments::TripleRun;
use flab::fractal::{DiscreteMeasure, PointCloud, frostman_measure};
use flab::generators::{DiscretizedFurstenbergSet, FurstenbergConfig, Preset, assemble_furstenberg};
use flab::incidence::{Cell, box_count, box_counts, fixed_weight, fubini_sides, multiplicity_field};

/// Twenty seeded sets across presets and exponents, each under 10^5 points.
pub fn oracle_instances() -> Vec<(String, DiscretizedFurstenbergSet)> {
    let presets = [Preset::Concentric, Preset::CenterSegment, Preset::RadiusGraph];
    let ss = [1.0, 0.5, 0.8, 0.6];
    let ts = [1.0, 0.5, 0.7, 0.9, 0.6];
    (0..20)
        .map(|idx| {
            let preset = presets[idx % 3];
            let (s, t) = (ss[idx % 4], ts[idx % 5]);
            let mut k1 = 6 + ((idx / 3) % 2) as u32;
            let mut set = assemble_furstenberg(&FurstenbergConfig::new(s, t, k1, preset, idx as u64)).unwrap();
            if set.cloud.len() > 100_000 {
                k1 = 6;
                set = assemble_furstenberg(&FurstenbergConfig::new(s, t, k1, preset, idx as u64)).unwrap();
            }
            (format!("#{idx} {preset:?} s={s} t={t} k1={k1}"), set)
        })
        .collect()
}

/// Cell of `x` found by stepping until `i·side <= x < (i+1)·side`.
fn naive_index(x: f64, side: f64) -> i64 {
    let mut i = (x / side) as i64;
    while i as f64 * side > x {
        i -= 1;
    }
    while (i + 1) as f64 * side <= x {
        i += 1;
    }
    i
}

pub fn in_cell(p: (f64, f64), cell: Cell, k: u32) -> bool {
    let side = 2f64.powi(-(k as i32));
    let (x0, y0) = (cell.0 as f64 * side, cell.1 as f64 * side);
    x0 <= p.0 && p.0 < x0 + side && y0 <= p.1 && p.1 < y0 + side
}

pub fn naive_cells(cloud: &PointCloud, k: u32) -> BTreeSet<Cell> {
    let side = 2f64.powi(-(k as i32));
    cloud.points().iter().map(|p| (naive_index(p[0], side), naive_index(p[1], side))).collect()
}

pub fn check_box_counts(cloud: &PointCloud, ks: RangeInclusive<u32>) -> Vec<String> {
    let mut issues = Vec::new();
    let pyramid = box_counts(cloud, *ks.start(), *ks.end());
    for (k, n) in pyramid {
        let naive = naive_cells(cloud, k);
        let grid = box_count(cloud, k);
        if grid.occupied != naive || n != naive.len() {
            issues.push(format!("box count at k={k}: grid {} pyramid {n} oracle {}", grid.len(), naive.len()));
        }
    }
    issues
}

/// Rebuilds every circle's quadruples by testing each occupied cell against
/// each arc point, and compares with the index.
pub fn check_triples(run: &TripleRun) -> Option<String> {
    let k = run.grid.k;
    let mut oracle = BTreeSet::new();
    for (z, arc) in &run.arcs {
        let Ok(triple) = arc else { continue };
        let per_arc: Vec<Vec<Cell>> = triple
            .points
            .iter()
            .map(|pts| {
                let (xl, xh) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.x1), a.1.max(p.x1)));
                let (yl, yh) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.x2), a.1.max(p.x2)));
                let side = 2f64.powi(-(k as i32));
                run.grid
                    .occupied
                    .iter()
                    .copied()
                    .filter(|c| {
                        let (x0, y0) = (c.0 as f64 * side, c.1 as f64 * side);
                        x0 + side > xl && x0 <= xh && y0 + side > yl && y0 <= yh
                    })
                    .filter(|&c| pts.iter().any(|p| in_cell((p.x1, p.x2), c, k)))
                    .collect()
            })
            .collect();
        for &a in &per_arc[0] {
            for &b in &per_arc[1] {
                for &c in &per_arc[2] {
                    oracle.insert((a, b, c, *z));
                }
            }
        }
    }
    let index: BTreeSet<_> = run.index.entries().collect();
    if index != oracle || run.index.count() != oracle.len() as u128 {
        return Some(format!("triple index {} entries vs oracle {}", run.index.count(), oracle.len()));
    }
    None
}

pub fn uniform_measure(set: &DiscretizedFurstenbergSet) -> DiscreteMeasure {
    let k1 = set.config.k1 as f64;
    frostman_measure(&set.family.set.cloud).unwrap().scaled(1.0 / (k1 * k1))
}

/// Field against a double loop over cells and atoms; also returns both sides
/// of the Fubini identity.
pub fn check_multiplicity(set: &DiscretizedFurstenbergSet) -> (Option<String>, (i128, i128)) {
    let mu = uniform_measure(set);
    let k = set.config.k1;
    let delta = set.config.delta();
    let field = multiplicity_field(&mu, delta, k);
    let side = 2f64.powi(-(k as i32));
    let reach = (2.0 + 0.25 + 2.0 * delta) / side;
    let span = reach.ceil() as i64 + 2;
    let mut diffs = 0usize;
    let mut total = 0i128;
    for j in -span..=span {
        for i in -span..=span {
            let (cx, cy) = ((i as f64 + 0.5) * side, (j as f64 + 0.5) * side);
            let mut m = 0i128;
            for &(p, w) in &mu.atoms {
                let d = ((cx - p[0]).powi(2) + (cy - p[1]).powi(2)).sqrt();
                if (d - p[2]).abs() <= delta {
                    m += fixed_weight(w);
                }
            }
            total += m;
            if m != field.get((i, j)) {
                diffs += 1;
            }
        }
    }
    let issue = (diffs > 0 || total != field.total()).then(|| format!("multiplicity field differs at {diffs} cells"));
    (issue, fubini_sides(&mu, &field))
}
