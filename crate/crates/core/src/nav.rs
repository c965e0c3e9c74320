//! Orbit and approach controllers and the tree-to-tree search mission.
//!
//! Body frame: +x forward, +y left, yaw counterclockwise. During both
//! approach and orbit the robot keeps its +x axis on the target trunk; the
//! orbit itself comes from a constant sideways speed with a matching
//! feedforward yaw rate, which sweeps the robot clockwise around the tree
//! for a positive speed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::db::{RobotPose, Tree, TreeDatabase, TreeId};
use crate::geometry::{normalize_angle, wrap_two_pi, Point2};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NavError {
    #[error("robot is at the tree center")]
    DegenerateGeometry,
    #[error("target tree {0} is not in the database")]
    TargetLost(TreeId),
    #[error("invalid controller parameters: {0}")]
    BadParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams<T> {
    pub k_x: T,
    pub k_z: T,
    pub k_phi: T,
    /// Tangential speed during the orbit.
    pub v: T,
    /// Orbit radius around the trunk center.
    pub d_ref: T,
    pub z_ref: T,
    /// Bound on |vx| and |vy|.
    pub max_speed: T,
    pub max_yaw_rate: T,
    pub arrival_tol: T,
    pub heading_tol: T,
    /// Yaw rate while waiting to spot the labeled tree.
    pub label_search_yaw_rate: T,
}

impl<T: Scalar> Default for ControllerParams<T> {
    fn default() -> Self {
        Self {
            k_x: T::lit(1.0),
            k_z: T::lit(1.0),
            k_phi: T::lit(2.0),
            v: T::lit(0.3),
            d_ref: T::lit(1.1),
            z_ref: T::lit(1.5),
            max_speed: T::lit(1.0),
            max_yaw_rate: T::lit(1.5),
            arrival_tol: T::lit(0.1),
            heading_tol: T::lit(10f64.to_radians()),
            label_search_yaw_rate: T::lit(0.3),
        }
    }
}

impl<T: Scalar> ControllerParams<T> {
    pub fn validate(&self) -> Result<(), NavError> {
        let z = T::zero();
        if !(self.k_x > z && self.k_z > z && self.k_phi > z) {
            return Err(NavError::BadParams("gains must be positive"));
        }
        if !(self.v > z && self.d_ref > z && self.z_ref > z) {
            return Err(NavError::BadParams("v, d_ref and z_ref must be positive"));
        }
        if !(self.max_speed > z && self.max_yaw_rate > z && self.arrival_tol > z && self.heading_tol > z) {
            return Err(NavError::BadParams("limits and tolerances must be positive"));
        }
        if !(self.label_search_yaw_rate >= z) {
            return Err(NavError::BadParams("label search yaw rate must be non-negative"));
        }
        Ok(())
    }
}

/// Body-frame velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand<T> {
    pub vx: T,
    pub vy: T,
    pub vz: T,
    pub vyaw: T,
}

impl<T: Scalar> VelocityCommand<T> {
    pub fn new(vx: T, vy: T, vz: T, vyaw: T) -> Self {
        Self { vx, vy, vz, vyaw }
    }

    pub fn hover() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn clamped(self, p: &ControllerParams<T>) -> Self {
        let clamp = |v: T, m: T| v.max(-m).min(m);
        Self {
            vx: clamp(self.vx, p.max_speed),
            vy: clamp(self.vy, p.max_speed),
            vz: clamp(self.vz, p.max_speed),
            vyaw: clamp(self.vyaw, p.max_yaw_rate),
        }
    }
}

/// Planar distance to `center` and its bearing from the body +x axis.
pub fn range_bearing<T: Scalar>(pose: &RobotPose<T>, center: Point2<T>) -> (T, T) {
    let rel = center - pose.position();
    (rel.norm(), normalize_angle(rel.angle() - pose.yaw))
}

/// Orbit command around a trunk centered at `center`.
///
/// `vy = V`, `vz = K_z (z_ref − z)` and `vyaw = K_φ Δθ − V / d_ref` with `Δθ`
/// the trunk bearing. The radial term is `vx = K_x (d − d_ref)`: the robot
/// faces the trunk, so forward motion closes the range.
pub fn circular_velocity<T: Scalar>(
    pose: &RobotPose<T>,
    center: Point2<T>,
    p: &ControllerParams<T>,
) -> Result<VelocityCommand<T>, NavError> {
    let (d, bearing) = range_bearing(pose, center);
    if d == T::zero() {
        return Err(NavError::DegenerateGeometry);
    }
    Ok(VelocityCommand {
        vx: p.k_x * (d - p.d_ref),
        vy: p.v,
        vz: p.k_z * (p.z_ref - pose.z),
        vyaw: p.k_phi * bearing - p.v / p.d_ref,
    })
}

/// Yaw servo onto the trunk plus a clamped forward closing speed.
pub fn approach_velocity<T: Scalar>(
    pose: &RobotPose<T>,
    center: Point2<T>,
    p: &ControllerParams<T>,
) -> VelocityCommand<T> {
    let (d, bearing) = range_bearing(pose, center);
    let vx = (p.k_x * (d - p.d_ref)).max(-p.max_speed).min(p.max_speed);
    VelocityCommand {
        vx,
        vy: T::zero(),
        vz: p.k_z * (p.z_ref - pose.z),
        vyaw: p.k_phi * bearing,
    }
}

pub fn has_arrived<T: Scalar>(pose: &RobotPose<T>, center: Point2<T>, p: &ControllerParams<T>) -> bool {
    let (d, bearing) = range_bearing(pose, center);
    (d - p.d_ref).abs() < p.arrival_tol && bearing.abs() < p.heading_tol
}

/// Next tree counterclockwise around the labeled tree.
///
/// Candidates are confirmed, unvisited trees other than the labeled one
/// whose center lies within `area_radius` of it. The winner has the smallest
/// counterclockwise angle strictly past `current_angle`; a tree exactly at
/// `current_angle` counts as a full turn away. Ties go to the lower id.
pub fn next_target_narrow<'a, T: Scalar>(
    db: &'a TreeDatabase<T>,
    labeled: &Tree<T>,
    visited: &BTreeSet<TreeId>,
    area_radius: T,
    current_angle: T,
    min_votes: u32,
) -> Option<&'a Tree<T>> {
    let hub = labeled.position();
    let mut best: Option<(&Tree<T>, T)> = None;
    for t in db.confirmed_trees(min_votes) {
        if t.id == labeled.id || visited.contains(&t.id) {
            continue;
        }
        let rel = t.position() - hub;
        if !(rel.norm() < area_radius) {
            continue;
        }
        let mut offset = wrap_two_pi(rel.angle() - current_angle);
        if offset == T::zero() {
            offset = T::TAU();
        }
        if best.is_none_or(|(_, o)| offset < o) {
            best = Some((t, offset));
        }
    }
    best.map(|(t, _)| t)
}

/// Nearest confirmed, unvisited tree that lies strictly farther from
/// `origin` than `prev`. Ties go to the lower id.
pub fn next_target_deep<'a, T: Scalar>(
    db: &'a TreeDatabase<T>,
    prev: &Tree<T>,
    origin: Point2<T>,
    visited: &BTreeSet<TreeId>,
    min_votes: u32,
) -> Option<&'a Tree<T>> {
    let prev_depth = prev.position().distance(origin);
    let mut best: Option<(&Tree<T>, T)> = None;
    for t in db.confirmed_trees(min_votes) {
        if t.id == prev.id || visited.contains(&t.id) {
            continue;
        }
        if !(t.position().distance(origin) > prev_depth) {
            continue;
        }
        let d = t.position().distance(prev.position());
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((t, d));
        }
    }
    best.map(|(t, _)| t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Approach,
    Orbit,
    SelectNext,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SearchMethod<T> {
    /// Counterclockwise sweep of the disc around the labeled tree.
    Narrow { area_radius: T },
    /// Ever deeper trees, measured from the mission origin.
    Deep,
}

/// Mission log entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum MissionEvent<T> {
    Started { labeled: TreeId },
    Phase { from: Phase, to: Phase },
    Target { id: TreeId, reason: &'static str },
    OrbitComplete { id: TreeId, swept: T },
    NoTarget { reason: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<T> {
    pub cmd: VelocityCommand<T>,
    pub events: Vec<MissionEvent<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionState<T> {
    pub phase: Phase,
    pub target: Option<TreeId>,
    /// Angle swept around the current target in the orbit direction.
    pub orbit_progress: T,
    pub visited: BTreeSet<TreeId>,
    /// Targets in visiting order.
    pub visit_order: Vec<TreeId>,
    pub search: SearchMethod<T>,
    pub origin: Point2<T>,
    pub min_votes: u32,
    labeled: Option<TreeId>,
    last_polar: Option<T>,
}

impl<T: Scalar> MissionState<T> {
    /// A mission waiting for its labeled tree; see [`MissionState::start`].
    pub fn new(search: SearchMethod<T>, origin: Point2<T>, min_votes: u32) -> Self {
        Self {
            phase: Phase::Approach,
            target: None,
            orbit_progress: T::zero(),
            visited: BTreeSet::new(),
            visit_order: Vec::new(),
            search,
            origin,
            min_votes,
            labeled: None,
            last_polar: None,
        }
    }

    pub fn labeled(&self) -> Option<TreeId> {
        self.labeled
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    /// Sets the labeled tree as the first target.
    pub fn start(&mut self, labeled: TreeId) -> Vec<MissionEvent<T>> {
        self.labeled = Some(labeled);
        self.target = Some(labeled);
        self.phase = Phase::Approach;
        vec![
            MissionEvent::Started { labeled },
            MissionEvent::Target {
                id: labeled,
                reason: "labeled tree",
            },
        ]
    }

    fn set_phase(&mut self, to: Phase, events: &mut Vec<MissionEvent<T>>) {
        if self.phase != to {
            events.push(MissionEvent::Phase { from: self.phase, to });
            self.phase = to;
        }
    }

    fn target_tree<'a>(&self, db: &'a TreeDatabase<T>, id: TreeId) -> Result<&'a Tree<T>, NavError> {
        db.get(id).ok_or(NavError::TargetLost(id))
    }

    /// One control tick against the current database and pose estimate.
    pub fn step(
        &mut self,
        db: &TreeDatabase<T>,
        pose: &RobotPose<T>,
        params: &ControllerParams<T>,
    ) -> Result<StepOutput<T>, NavError> {
        let mut events = Vec::new();
        let hold_altitude = params.k_z * (params.z_ref - pose.z);
        let cmd = loop {
            match self.phase {
                Phase::Done => break VelocityCommand::hover(),
                Phase::Approach => {
                    let Some(id) = self.target else {
                        break VelocityCommand::new(T::zero(), T::zero(), hold_altitude, params.label_search_yaw_rate);
                    };
                    let center = self.target_tree(db, id)?.position();
                    if has_arrived(pose, center, params) {
                        self.orbit_progress = T::zero();
                        self.last_polar = Some((pose.position() - center).angle());
                        self.set_phase(Phase::Orbit, &mut events);
                        continue;
                    }
                    break approach_velocity(pose, center, params);
                }
                Phase::Orbit => {
                    let id = self.target.expect("orbit has a target");
                    let center = self.target_tree(db, id)?.position();
                    let polar = (pose.position() - center).angle();
                    if let Some(last) = self.last_polar {
                        let delta = normalize_angle(polar - last);
                        // positive tangential speed orbits clockwise
                        let swept = if params.v > T::zero() { -delta } else { delta };
                        self.orbit_progress = self.orbit_progress + swept;
                    }
                    self.last_polar = Some(polar);
                    if self.orbit_progress >= T::TAU() {
                        self.visited.insert(id);
                        self.visit_order.push(id);
                        events.push(MissionEvent::OrbitComplete {
                            id,
                            swept: self.orbit_progress,
                        });
                        self.set_phase(Phase::SelectNext, &mut events);
                        continue;
                    }
                    break circular_velocity(pose, center, params)?;
                }
                Phase::SelectNext => {
                    let prev = self.target.expect("selection follows an orbit");
                    match self.select_next(db, pose, prev)? {
                        Some((id, reason)) => {
                            self.target = Some(id);
                            events.push(MissionEvent::Target { id, reason });
                            self.set_phase(Phase::Approach, &mut events);
                        }
                        None => {
                            self.target = None;
                            events.push(MissionEvent::NoTarget {
                                reason: "no candidate left",
                            });
                            self.set_phase(Phase::Done, &mut events);
                        }
                    }
                }
            }
        };
        Ok(StepOutput {
            cmd: cmd.clamped(params),
            events,
        })
    }

    fn select_next(
        &self,
        db: &TreeDatabase<T>,
        pose: &RobotPose<T>,
        prev: TreeId,
    ) -> Result<Option<(TreeId, &'static str)>, NavError> {
        let prev_tree = self.target_tree(db, prev)?;
        match self.search {
            SearchMethod::Narrow { area_radius } => {
                let labeled_id = self.labeled.unwrap_or(prev);
                let labeled = self.target_tree(db, labeled_id)?;
                // sweep starts at the robot's angle around the labeled tree,
                // then continues from each previous target's angle
                let current_angle = if prev == labeled_id {
                    (pose.position() - labeled.position()).angle()
                } else {
                    (prev_tree.position() - labeled.position()).angle()
                };
                Ok(
                    next_target_narrow(db, labeled, &self.visited, area_radius, current_angle, self.min_votes)
                        .map(|t| (t.id, "next counterclockwise in search area")),
                )
            }
            SearchMethod::Deep => Ok(
                next_target_deep(db, prev_tree, self.origin, &self.visited, self.min_votes)
                    .map(|t| (t.id, "nearest strictly deeper tree")),
            ),
        }
    }
}
