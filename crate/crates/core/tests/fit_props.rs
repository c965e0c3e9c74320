mod common;

use common::grid_minimize_s;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use treesense::fit::fit_circle;
use treesense::geometry::Point2;

fn arc_points() -> impl Strategy<Value = Vec<Point2<f64>>> {
    (
        -3.0f64..3.0,
        -3.0f64..3.0,
        0.05f64..1.0,
        0.0f64..6.3,
        0.5f64..6.3,
        prop::collection::vec(-0.05f64..0.05, 5..30),
    )
        .prop_map(|(cx, cy, r, start, span, noise)| {
            let n = noise.len();
            noise
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let t = start + span * i as f64 / (n - 1) as f64;
                    let rr = r * (1.0 + e);
                    Point2::new(cx + rr * t.cos(), cy + rr * t.sin())
                })
                .collect()
        })
}

proptest! {
    #[test]
    fn translation_moves_only_the_center(pts in arc_points(), tx in -64i32..64, ty in -64i32..64) {
        let (tx, ty) = (f64::from(tx) / 8.0, f64::from(ty) / 8.0);
        let f = fit_circle(&pts).unwrap();
        let moved: Vec<_> = pts.iter().map(|p| Point2::new(p.x + tx, p.y + ty)).collect();
        let g = fit_circle(&moved).unwrap();
        prop_assert!((g.a - f.a - tx).abs() < 1e-9);
        prop_assert!((g.b - f.b - ty).abs() < 1e-9);
        prop_assert!((g.r - f.r).abs() < 1e-9);
        prop_assert!((g.s - f.s).abs() < 1e-9 * f.s.max(1e-6));
        prop_assert!((g.cv - f.cv).abs() < 1e-9);
    }

    #[test]
    fn rotation_rotates_the_center(pts in arc_points(), angle in -3.2f64..3.2) {
        let f = fit_circle(&pts).unwrap();
        let turned: Vec<_> = pts.iter().map(|p| p.rotate(angle)).collect();
        let g = fit_circle(&turned).unwrap();
        let c = f.center().rotate(angle);
        prop_assert!((g.a - c.x).abs() < 1e-9 && (g.b - c.y).abs() < 1e-9);
        prop_assert!((g.r - f.r).abs() < 1e-9);
        prop_assert!((g.cv - f.cv).abs() < 1e-9);
    }

    #[test]
    fn scaling_scales_radius_and_keeps_cv(pts in arc_points(), e in -3i32..4) {
        let k = 2f64.powi(e);
        let f = fit_circle(&pts).unwrap();
        let scaled: Vec<_> = pts.iter().map(|&p| p * k).collect();
        let g = fit_circle(&scaled).unwrap();
        prop_assert!((g.r - k * f.r).abs() < 1e-9 * k);
        prop_assert!((g.s - k.powi(4) * f.s).abs() <= 1e-9 * k.powi(4) * f.s.max(1e-6));
        prop_assert!((g.cv - f.cv).abs() < 1e-9);
    }
}

#[test]
fn matches_grid_search_on_small_instances() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..20 {
        let pts = arc_points().new_tree(&mut runner).unwrap().current();
        let f = fit_circle(&pts).unwrap();
        let (a, b, r) = grid_minimize_s(&pts);
        assert!(
            (f.a - a).abs() < 1e-3 && (f.b - b).abs() < 1e-3 && (f.r - r).abs() < 1e-3,
            "{f:?} vs {:?}",
            (a, b, r)
        );
    }
}
