//! Diameter accuracy against ground truth.

use std::fmt::Write as _;

use serde::Serialize;

use crate::db::{TreeDatabase, TreeId};
use crate::sim::WorldConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiameterRow {
    pub tree_id: TreeId,
    pub truth_index: usize,
    pub estimated: f64,
    pub truth: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiameterReport {
    /// Matched pairs, by tree id.
    pub rows: Vec<DiameterRow>,
    pub mean_error: Option<f64>,
    pub max_error: Option<f64>,
    /// Ground-truth trees with no confirmed estimate within the gate.
    pub unmatched_truth: usize,
    /// Confirmed estimates with no ground-truth tree within the gate.
    pub spurious: usize,
}

pub const REPORT_HEADER: &str = "tree_id,truth_index,estimated_diameter,true_diameter,error";

impl DiameterReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6}",
                r.tree_id, r.truth_index, r.estimated, r.truth, r.error
            );
        }
        out
    }
}

/// Pairs confirmed trees with ground truth, globally closest pairs first,
/// counting only pairs whose centers are closer than `gate`.
pub fn diameter_metrics(db: &TreeDatabase<f64>, world: &WorldConfig, min_votes: u32, gate: f64) -> DiameterReport {
    let confirmed = db.confirmed_trees(min_votes);
    let mut pairs = Vec::new();
    for (ci, tree) in confirmed.iter().enumerate() {
        for (ti, truth) in world.trees.iter().enumerate() {
            let d = tree.position().distance(truth.center());
            if d < gate {
                pairs.push((d, ci, ti));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut est_used = vec![false; confirmed.len()];
    let mut truth_used = vec![false; world.trees.len()];
    let mut rows = Vec::new();
    for (_, ci, ti) in pairs {
        if est_used[ci] || truth_used[ti] {
            continue;
        }
        est_used[ci] = true;
        truth_used[ti] = true;
        let estimated = confirmed[ci].diameter();
        let truth = 2.0 * world.trees[ti].radius;
        rows.push(DiameterRow {
            tree_id: confirmed[ci].id,
            truth_index: ti,
            estimated,
            truth,
            error: (estimated - truth).abs(),
        });
    }
    rows.sort_by_key(|r| r.tree_id);

    let n = rows.len();
    let mean_error = (n > 0).then(|| rows.iter().map(|r| r.error).sum::<f64>() / n as f64);
    let max_error = rows.iter().map(|r| r.error).reduce(f64::max);
    DiameterReport {
        rows,
        mean_error,
        max_error,
        unmatched_truth: truth_used.iter().filter(|u| !**u).count(),
        spurious: est_used.iter().filter(|u| !**u).count(),
    }
}
