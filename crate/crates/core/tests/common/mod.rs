//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use treesense::fit::residual_sum;
use treesense::geometry::Point2;
use treesense::sim::{TruthTree, WorldConfig};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

pub fn tree(x: f64, y: f64, radius: f64) -> TruthTree {
    TruthTree {
        x,
        y,
        radius,
        labeled: false,
    }
}

pub fn world(trees: Vec<TruthTree>) -> WorldConfig {
    WorldConfig {
        trees,
        ..Default::default()
    }
}

/// Ray–circle distance from the quadratic |o + t·u − c|² = r², solved with
/// the textbook formula (independent of the simulator's projection method).
pub fn quadratic_ray_circle(o: (f64, f64), u: (f64, f64), c: (f64, f64), r: f64) -> Option<f64> {
    let (fx, fy) = (o.0 - c.0, o.1 - c.1);
    let a = u.0 * u.0 + u.1 * u.1;
    let b = 2.0 * (fx * u.0 + fy * u.1);
    let cc = fx * fx + fy * fy - r * r;
    let disc = b * b - 4.0 * a * cc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t1 = (-b - sq) / (2.0 * a);
    let t2 = (-b + sq) / (2.0 * a);
    [t1, t2].into_iter().filter(|t| *t > 0.0).reduce(f64::min)
}

/// Zooming grid search for the minimum of the algebraic residual S over
/// (a, b, r). Starts from a box around the centroid big enough to contain any
/// sensible circle through the points and halves it around the best node.
pub fn grid_minimize_s(points: &[Point2<f64>]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let extent = points
        .iter()
        .map(|p| (p.x - cx).hypot(p.y - cy))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut best = (cx, cy, extent);
    let mut half = 4.0 * extent;
    let steps = 10i32;
    for _ in 0..80 {
        let mut best_s = residual_sum(points, best.0, best.1, best.2);
        let center = best;
        for i in -steps..=steps {
            for j in -steps..=steps {
                for k in -steps..=steps {
                    let h = half / steps as f64;
                    let cand = (
                        center.0 + i as f64 * h,
                        center.1 + j as f64 * h,
                        center.2 + k as f64 * h,
                    );
                    if cand.2 <= 0.0 {
                        continue;
                    }
                    let s = residual_sum(points, cand.0, cand.1, cand.2);
                    if s < best_s {
                        best_s = s;
                        best = cand;
                    }
                }
            }
        }
        // only shrink once the best node is interior to the box
        if best == center {
            half *= 0.5;
        }
        if half < 1e-9 {
            break;
        }
    }
    best
}
