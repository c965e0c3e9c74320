mod common;

use common::scenario_path;
use treesense::nav::Phase;
use treesense::record::{format_pose, format_scan};
use treesense::replay::{replay, ReplayParams};
use treesense::runner::run_scenario;
use treesense::scenario::Scenario;
use treesense::sim::Simulator;

#[test]
fn bundled_scenarios_parse() {
    let dir = scenario_path("");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 4);
}

#[test]
fn same_seed_same_bytes() {
    let mut sc = Scenario::load(&scenario_path("forest10.toml")).unwrap();
    sc.steps = 3000;
    sc.record_scans = true;
    let a = run_scenario(&sc).unwrap();
    let b = run_scenario(&sc).unwrap();
    assert_eq!(a.artifacts, b.artifacts);
    sc.seed += 1;
    let c = run_scenario(&sc).unwrap();
    assert_ne!(a.artifacts.detections_jsonl, c.artifacts.detections_jsonl);
}

#[test]
fn step_limit_stops_early() {
    let mut sc = Scenario::load(&scenario_path("orbit.toml")).unwrap();
    sc.steps = 50;
    let report = run_scenario(&sc).unwrap();
    assert_eq!(report.summary.steps, 50);
    assert_ne!(report.summary.phase, Phase::Done);
    assert_eq!(report.artifacts.trajectory_csv.lines().count(), 51);
}

#[test]
fn recorded_scans_replay_to_the_same_database() {
    let mut sc = Scenario::load(&scenario_path("single_tree.toml")).unwrap();
    sc.record_scans = true;
    let run = run_scenario(&sc).unwrap();
    let params = ReplayParams {
        filters: sc.filters,
        discrimination: sc.discrimination,
        thre_dist: sc.thre_dist,
    };
    let out = replay(run.artifacts.scans_log.as_deref().unwrap(), &params).unwrap();
    assert_eq!(out.detections_jsonl, run.artifacts.detections_jsonl);
    // the labeled flag is set by the mission only
    let strip = |s: String| s.replace("\"labeled\":true", "\"labeled\":false");
    assert_eq!(strip(out.db.to_json()), strip(run.db.to_json()));
}

#[test]
fn one_synthetic_scan_gives_one_confirmed_tree() {
    let sc = Scenario::load(&scenario_path("orbit.toml")).unwrap();
    let mut sim = Simulator::new(sc.world.clone(), sc.sensor, sc.drift, sc.start, 0);
    let scan = sim.scan();
    let log = format!("{}\n{}\n", format_pose(0.0, &sc.start), format_scan(0.0, &scan));
    let out = replay(&log, &ReplayParams::default()).unwrap();
    assert_eq!(out.db.confirmed_trees(1).len(), 1);
    assert_eq!(out.detections_jsonl.lines().count(), 1);
}
