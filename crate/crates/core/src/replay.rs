//! Offline detection and mapping from a recorded scan log.

use serde::Serialize;

use crate::db::{RobotPose, TreeDatabase};
use crate::fit::{detect_trees, DiscriminationParams};
use crate::record::{parse_log, LogRecord, ObservationRecord, ParseError};
use crate::scan::ScanFilterParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayParams {
    pub filters: ScanFilterParams<f64>,
    pub discrimination: DiscriminationParams<f64>,
    pub thre_dist: f64,
}

impl Default for ReplayParams {
    fn default() -> Self {
        Self {
            filters: ScanFilterParams::default(),
            discrimination: DiscriminationParams::default(),
            thre_dist: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReplayStats {
    pub scans: u64,
    pub observations: u64,
    pub trees: usize,
}

#[derive(Debug, Clone)]
pub struct ReplayOutput {
    pub db: TreeDatabase<f64>,
    pub detections_jsonl: String,
    pub stats: ReplayStats,
}

/// Runs detection and database update over every scan in `text`, each
/// scan placed at the most recent pose record.
pub fn replay(text: &str, params: &ReplayParams) -> Result<ReplayOutput, ParseError> {
    let records = parse_log(text)?;
    let mut db = TreeDatabase::new(params.thre_dist).map_err(|e| ParseError {
        line: 0,
        message: e.to_string(),
    })?;
    let mut pose = RobotPose::new(0.0, 0.0, 0.0, 0.0);
    let mut detections = String::new();
    let mut stats = ReplayStats {
        scans: 0,
        observations: 0,
        trees: 0,
    };
    for rec in records {
        match rec {
            LogRecord::Pose { pose: p, .. } => pose = p,
            LogRecord::Scan { t, scan } => {
                let obs = detect_trees(&scan, &params.filters, &params.discrimination);
                for o in &obs {
                    detections.push_str(&ObservationRecord::new(t, o).to_json());
                    detections.push('\n');
                }
                db.update(&obs, &pose);
                stats.scans += 1;
                stats.observations += obs.len() as u64;
            }
        }
    }
    stats.trees = db.len();
    Ok(ReplayOutput {
        db,
        detections_jsonl: detections,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{format_pose, format_scan};
    use crate::sim::{raycast_scan, SensorConfig, TruthTree, WorldConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_log_gives_empty_outputs() {
        let out = replay("", &ReplayParams::default()).unwrap();
        assert!(out.db.is_empty());
        assert!(out.detections_jsonl.is_empty());
        assert_eq!(out.stats.scans, 0);
    }

    #[test]
    fn scans_are_placed_at_latest_pose() {
        let world = WorldConfig {
            trees: vec![TruthTree {
                x: 5.0,
                y: 1.0,
                radius: 0.15,
                labeled: false,
            }],
            ..Default::default()
        };
        let sensor = SensorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut log = String::new();
        for (k, pose) in [RobotPose::new(2.0, 0.0, 1.5, 0.0), RobotPose::new(3.0, 1.0, 1.5, 0.5)]
            .iter()
            .enumerate()
        {
            let t = k as f64 * 0.025;
            log += &format_pose(t, pose);
            log.push('\n');
            log += &format_scan(t, &raycast_scan(&world, pose, &sensor, &mut rng));
            log.push('\n');
        }
        let out = replay(&log, &ReplayParams::default()).unwrap();
        assert_eq!(out.stats.scans, 2);
        assert_eq!(out.db.len(), 1);
        let tree = &out.db.trees()[0];
        assert_eq!(tree.votes, 2);
        assert!((tree.x - 5.0).abs() < 0.02 && (tree.y - 1.0).abs() < 0.02, "{tree:?}");
    }

    #[test]
    fn parse_errors_propagate() {
        let err = replay("pose 0 0 0 0 0\nscan 0 0 x", &ReplayParams::default()).unwrap_err();
        assert_eq!(err.line, 2);
    }
}
