//! Closed-loop mission simulation.
//!
//! Each control tick: take a scan when one is due, detect trees, merge them
//! into the database using the odometry pose, look for the labeled tree until
//! it is found, then step the mission and integrate the commanded velocity.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::db::{to_world, TreeDatabase, TreeId};
use crate::fit::detect_trees;
use crate::metrics::{diameter_metrics, DiameterReport};
use crate::nav::{MissionEvent, MissionState, NavError, Phase};
use crate::record::{format_pose, format_scan, trajectory_row, ObservationRecord, TRAJECTORY_HEADER};
use crate::scenario::{ConfigError, Scenario};
use crate::sim::{sense_label, Simulator};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("mission aborted at t={t:.4}: {source}")]
    MissionAbort { t: f64, source: NavError },
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Everything a run writes, as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunArtifacts {
    pub trajectory_csv: String,
    pub detections_jsonl: String,
    pub mission_jsonl: String,
    pub db_json: String,
    pub db_csv: String,
    pub report_csv: String,
    pub summary_json: String,
    pub scans_log: Option<String>,
}

impl RunArtifacts {
    pub fn files(&self) -> Vec<(&'static str, &str)> {
        let mut files = vec![
            ("trajectory.csv", self.trajectory_csv.as_str()),
            ("detections.jsonl", self.detections_jsonl.as_str()),
            ("mission.jsonl", self.mission_jsonl.as_str()),
            ("db.json", self.db_json.as_str()),
            ("db.csv", self.db_csv.as_str()),
            ("report.csv", self.report_csv.as_str()),
            ("summary.json", self.summary_json.as_str()),
        ];
        if let Some(scans) = &self.scans_log {
            files.push(("scans.log", scans.as_str()));
        }
        files
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), RunError> {
        let io = |path: &Path, source| RunError::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, body) in self.files() {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    pub steps: usize,
    pub time: f64,
    pub phase: Phase,
    pub labeled: Option<TreeId>,
    pub visited: Vec<TreeId>,
    pub scans: u64,
    pub observations: u64,
    pub trees_in_db: usize,
    pub confirmed_trees: usize,
    pub mean_diameter_error: Option<f64>,
    pub max_diameter_error: Option<f64>,
    pub unmatched_truth: usize,
    pub spurious: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: RunSummary,
    pub db: TreeDatabase<f64>,
    pub diameters: DiameterReport,
    /// True distance to the orbit target on every tick spent orbiting.
    pub orbit_track: Vec<OrbitSample>,
    pub artifacts: RunArtifacts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSample {
    pub t: f64,
    pub target: TreeId,
    /// Ground-truth distance from the robot to the real trunk nearest the
    /// target's estimated center.
    pub distance: f64,
    /// Angle swept so far around this target.
    pub progress: f64,
}

#[derive(Serialize)]
struct Stamped<'a> {
    t: f64,
    #[serde(flatten)]
    event: &'a MissionEvent<f64>,
}

fn log_events(out: &mut String, t: f64, events: &[MissionEvent<f64>]) {
    for event in events {
        let line = serde_json::to_string(&Stamped { t, event }).expect("event serializes");
        out.push_str(&line);
        out.push('\n');
    }
}

/// Runs a scenario to completion or to its step limit.
pub fn run_scenario(sc: &Scenario) -> Result<RunReport, RunError> {
    sc.validate()?;
    if sc.world.labeled_tree().is_none() {
        return Err(ConfigError::Invalid {
            field: "world.trees".into(),
            message: "a mission needs exactly one labeled tree".into(),
        }
        .into());
    }

    let mut sim = Simulator::new(sc.world.clone(), sc.sensor, sc.drift, sc.start, sc.seed);
    let mut db = TreeDatabase::new(sc.thre_dist).expect("validated gate");
    let mut mission = MissionState::new(sc.search_method(), sc.start.position(), sc.min_votes);

    let mut trajectory = String::from(TRAJECTORY_HEADER);
    trajectory.push('\n');
    let mut detections = String::new();
    let mut mission_log = String::new();
    let mut scans_log = sc.record_scans.then(String::new);
    let mut orbit_track = Vec::new();

    let mut scans = 0u64;
    let mut observations = 0u64;
    let mut steps_run = 0;
    for k in 0..sc.steps {
        let t = k as f64 * sc.dt;
        if t + 1e-9 >= scans as f64 * sc.scan_period {
            let scan = sim.scan();
            let odom = sim.state().odom_pose;
            scans += 1;
            if let Some(log) = scans_log.as_mut() {
                let _ = writeln!(log, "{}", format_pose(t, &odom));
                let _ = writeln!(log, "{}", format_scan(t, &scan));
            }
            let obs = detect_trees(&scan, &sc.filters, &sc.discrimination);
            for o in &obs {
                detections.push_str(&ObservationRecord::new(t, o).to_json());
                detections.push('\n');
            }
            db.update(&obs, &odom);
            observations += obs.len() as u64;

            if mission.labeled().is_none() {
                let truth = sim.state().true_pose;
                if let Some(i) = sense_label(&sc.world, &truth, &obs, sc.max_label_range, sc.thre_dist) {
                    let seen = to_world(obs[i].center, &odom);
                    let id = db.nearest_tree(seen).expect("observation was just merged").id;
                    db.mark_labeled(id).expect("tree exists");
                    let events = mission.start(id);
                    log_events(&mut mission_log, t, &events);
                }
            }
        }

        let odom = sim.state().odom_pose;
        let out = mission
            .step(&db, &odom, &sc.controller)
            .map_err(|source| RunError::MissionAbort { t, source })?;
        log_events(&mut mission_log, t, &out.events);
        if mission.phase == Phase::Orbit {
            if let Some(tree) = mission.target.and_then(|id| db.get(id)) {
                let robot = sim.state().true_pose.position();
                let trunk = sc
                    .world
                    .trees
                    .iter()
                    .map(|t| t.center())
                    .min_by(|a, b| a.distance(tree.position()).total_cmp(&b.distance(tree.position())))
                    .unwrap_or(tree.position());
                let d = robot.distance(trunk);
                orbit_track.push(OrbitSample {
                    t,
                    target: tree.id,
                    distance: d,
                    progress: mission.orbit_progress,
                });
            }
        }
        let _ = writeln!(trajectory, "{}", trajectory_row(sim.state(), &out.cmd));
        sim.step(&out.cmd, sc.dt);
        steps_run = k + 1;
        if mission.is_done() {
            break;
        }
    }

    let diameters = diameter_metrics(&db, &sc.world, sc.min_votes, sc.thre_dist);
    let summary = RunSummary {
        name: sc.name.clone(),
        seed: sc.seed,
        steps: steps_run,
        time: sim.state().time,
        phase: mission.phase,
        labeled: mission.labeled(),
        visited: mission.visit_order.clone(),
        scans,
        observations,
        trees_in_db: db.len(),
        confirmed_trees: db.confirmed_trees(sc.min_votes).len(),
        mean_diameter_error: diameters.mean_error,
        max_diameter_error: diameters.max_error,
        unmatched_truth: diameters.unmatched_truth,
        spurious: diameters.spurious,
    };
    let mut summary_json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    summary_json.push('\n');
    let artifacts = RunArtifacts {
        trajectory_csv: trajectory,
        detections_jsonl: detections,
        mission_jsonl: mission_log,
        db_json: db.to_json(),
        db_csv: db.to_csv(),
        report_csv: diameters.to_csv(),
        summary_json,
        scans_log,
    };
    Ok(RunReport {
        summary,
        db,
        diameters,
        orbit_track,
        artifacts,
    })
}
