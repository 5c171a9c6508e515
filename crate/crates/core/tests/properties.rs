use std::f64::consts::PI;

use proptest::prelude::*;

use flab::experiments::{circle_intersection, random_frame};
use flab::fractal::{PointCloud, content_lower, extract_delta_q_set, frostman_measure, min_separation};
use flab::generators::{FurstenbergConfig, Preset, assemble_furstenberg, inversion_map};
use flab::geometry::{
    CircleParam, Point2, RegionBound, THREE_CIRCLE_CONSTANT, TriangleFrame, circumcenter, pairwise_rectangle,
    sample_w_region, three_circle_bound,
};
use flab::incidence::{
    box_count, box_counts, build_triple_index, extract_three_arcs, fixed_weight, multiplicity_field,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn point(range: f64) -> impl Strategy<Value = Point2> {
    (-range..range, -range..range).prop_map(|(x, y)| Point2::new(x, y))
}

fn planar_cloud(k: u32, max: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..max)
        .prop_map(move |pts| PointCloud::planar(k, pts).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn circumcenter_is_equidistant(a in point(2.0), b in point(2.0), c in point(2.0)) {
        if let Ok((m, h)) = circumcenter(a, b, c) {
            prop_assert!((m.dist(a) - m.dist(c)).abs() <= 1e-9 * h);
            prop_assert!((m.dist(a) - m.dist(b)).abs() <= 1e-9 * h);
        }
    }

    #[test]
    fn lens_points_stay_in_rectangle(
        pa in point(2.0),
        dir in 0.0..2.0 * PI,
        c in 0.05..0.5f64,
        len_frac in 0.0..1.0f64,
        a_frac in 0.001..0.999f64,
        b in 0.5..2.0f64,
        da in -1.0..1.0f64,
        db in -1.0..1.0f64,
    ) {
        let a = a_frac * c * c / 20.0;
        let len = 2.0 * c + len_frac * (3.5 - 2.0 * c);
        let pb = Point2::from_polar(pa, len, dir);
        let rect = pairwise_rectangle(pa, pb, a, c).unwrap();
        prop_assert!(rect.short_half < rect.long_half);
        if let Some(pts) = circle_intersection(pa, b + da * a, pb, b + db * a) {
            for p in pts {
                prop_assert!(rect.contains(p), "{p:?} outside");
            }
        }
    }

    #[test]
    fn inversion_is_an_involution(r in 1.0..4.0f64, theta in 0.0..2.0 * PI) {
        let p = Point2::from_polar(Point2::ORIGIN, r, theta);
        let w = inversion_map(p).unwrap();
        prop_assert!((w.norm() * r - 1.0).abs() <= 1e-12);
        prop_assert!(inversion_map(w).unwrap().dist(p) <= 1e-12 * r);
    }

    #[test]
    fn box_counts_grow_at_most_fourfold(cloud in planar_cloud(10, 400)) {
        let counts = box_counts(&cloud, 1, 10);
        for w in counts.windows(2) {
            prop_assert!(w[0].1 <= w[1].1 && w[1].1 <= 4 * w[0].1, "{counts:?}");
        }
        prop_assert_eq!(counts.last().unwrap().1, box_count(&cloud, 10).len());
    }

    #[test]
    fn extraction_is_delta_separated(cloud in planar_cloud(6, 300), q in 0.3..2.0f64) {
        if let Ok(set) = extract_delta_q_set(&cloud, 6, q) {
            prop_assert!(set.len() == 1 || min_separation(&set.cloud) >= set.cloud.delta());
        }
    }

    #[test]
    fn disjoint_balls_hold_at_most_unit_mass(cloud in planar_cloud(8, 300), r in 0.01..0.3f64) {
        let mu = frostman_measure(&cloud).unwrap();
        let centers = [[-0.5, -0.5, 0.0], [0.5, -0.5, 0.0], [-0.5, 0.5, 0.0], [0.5, 0.5, 0.0]];
        let sum: f64 = centers.iter().map(|c| mu.measure_ball(c, r)).sum();
        prop_assert!(sum <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn w_region_is_small_and_radius_confined(seed in any::<u64>(), a_frac in 0.01..0.999f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = 0.05 + (seed % 1000) as f64 / 1000.0 * 0.45;
        let frame = random_frame(&mut rng, c);
        let a = a_frac * c * c / 20.0;
        let sample = sample_w_region(&frame, a, a / 10.0).unwrap();
        prop_assert!(sample.diameter <= THREE_CIRCLE_CONSTANT * a / (c * c));
        match three_circle_bound(&frame, a).unwrap() {
            RegionBound::Empty => prop_assert_eq!(sample.members, 0),
            RegionBound::Bounded(bound) => {
                if let Some(b) = sample.b_range {
                    let spread = bound.diam_bound;
                    prop_assert!(b.lo >= bound.circumradius - spread && b.hi <= bound.circumradius + spread);
                }
            }
        }
    }

    #[test]
    fn collinear_frames_have_empty_w(p in point(1.0), dir in 0.0..PI, c in 0.05..0.5f64, a_frac in 0.01..0.999f64) {
        let u = Point2::from_polar(Point2::ORIGIN, 1.0, dir);
        let frame = TriangleFrame::new(p, p + u * (2.0 * c), p + u * (4.0 * c), c).unwrap();
        let a = a_frac * c * c / 20.0;
        prop_assert_eq!(sample_w_region(&frame, a, a / 10.0).unwrap().members, 0);
    }

    #[test]
    fn arcs_respect_bracket_and_product_law(
        r in 0.5..2.0f64,
        keep in prop::collection::vec(any::<bool>(), 64),
        s in 0.6..1.0f64,
    ) {
        let k = 8;
        let delta = 2f64.powi(-k);
        let z = CircleParam::new(Point2::new(0.1, -0.05), r).unwrap();
        let n = (2.0 * PI * r / delta).floor() as usize;
        let pts: Vec<[f64; 3]> = (0..n)
            .filter(|i| keep[i * 64 / n])
            .map(|i| {
                let p = z.point_at(2.0 * PI * i as f64 / n as f64);
                [p.x1, p.x2, 0.0]
            })
            .collect();
        prop_assume!(!pts.is_empty());
        let cloud = PointCloud::new(2, k as u32, pts).unwrap();
        let eta = content_lower(&cloud, s, delta).min(1.0 / 64.0);
        let extracted = extract_three_arcs(&z, &cloud, s, eta);
        prop_assert!(extracted.is_ok() || keep.iter().filter(|k| **k).count() < 8);
        if let Ok(t) = extracted {
            let (lo, hi) = t.content_bracket();
            let slack = t.gamma.powf(s);
            prop_assert!(t.contents.iter().all(|&c| c >= lo - slack && c <= hi + slack), "{:?}", t.contents);
            prop_assert!(t.separation() >= t.gamma / PI);
            let grid = box_count(&cloud, k as u32);
            let index = build_triple_index(&[(0, t)], &grid);
            for row in &index.rows {
                let product: u128 = row.cells.iter().map(|c| c.len() as u128).product();
                prop_assert_eq!(row.count(), product);
                prop_assert_eq!(index.entries().filter(|e| e.3 == row.z_index).count() as u128, product);
            }
        }
    }

    #[test]
    fn multiplicity_is_bounded_by_total_mass(cloud in planar_cloud(6, 40)) {
        let pts = cloud.points().iter().map(|p| [p[0] * 0.25, p[1] * 0.25, 1.0]).collect();
        let params = PointCloud::new(3, 6, pts).unwrap();
        let mu = frostman_measure(&params).unwrap();
        let field = multiplicity_field(&mu, params.delta(), 6);
        let total: i128 = mu.atoms.iter().map(|a| fixed_weight(a.1)).sum();
        prop_assert!(field.max() <= total);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn assembly_is_deterministic(seed in any::<u64>(), s in 0.3..1.0f64, t in 0.3..1.0f64, preset in 0..3usize) {
        let preset = [Preset::Concentric, Preset::CenterSegment, Preset::RadiusGraph][preset];
        let config = FurstenbergConfig::new(s, t, 7, preset, seed);
        let a = assemble_furstenberg(&config).unwrap();
        let b = assemble_furstenberg(&config).unwrap();
        prop_assert_eq!(a.cloud.points(), b.cloud.points());
        for z in a.circles() {
            prop_assert!(z.in_reference_box());
        }
    }
}
