//! Synthetic forest: cylinder trunks and wall segments, a raycast 2D lidar,
//! Euler-integrated velocity-controlled kinematics and drifting odometry.
//!
//! Everything random is drawn from seeded ChaCha streams, so a fixed seed
//! and command sequence reproduce a run bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::db::{to_world, RobotPose};
use crate::fit::TreeObservation;
use crate::geometry::Point2;
use crate::nav::VelocityCommand;
use crate::scan::{LaserScan, Validity};

type P = Point2<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("tree {0}: radius must be positive")]
    BadRadius(usize),
    #[error("trees {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("more than one labeled tree")]
    MultipleLabels,
    #[error("bounds are empty")]
    BadBounds,
    #[error("wall {0} has zero length")]
    DegenerateWall(usize),
    #[error("sensor: {0}")]
    Sensor(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthTree {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    #[serde(default)]
    pub labeled: bool,
}

impl TruthTree {
    pub fn center(&self) -> P {
        P::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn contains(&self, p: P) -> bool {
        self.min_x <= p.x && p.x <= self.max_x && self.min_y <= p.y && p.y <= self.max_y
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            min_x: -50.0,
            min_y: -50.0,
            max_x: 50.0,
            max_y: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldConfig {
    #[serde(default)]
    pub trees: Vec<TruthTree>,
    #[serde(default)]
    pub walls: Vec<Wall>,
    #[serde(default)]
    pub bounds: Bounds,
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        let b = &self.bounds;
        if !(b.min_x < b.max_x && b.min_y < b.max_y) {
            return Err(WorldError::BadBounds);
        }
        for (i, t) in self.trees.iter().enumerate() {
            if !(t.radius > 0.0) || !t.x.is_finite() || !t.y.is_finite() {
                return Err(WorldError::BadRadius(i));
            }
            for (j, u) in self.trees.iter().enumerate().skip(i + 1) {
                if t.center().distance(u.center()) <= t.radius + u.radius {
                    return Err(WorldError::Overlap(i, j));
                }
            }
        }
        if self.trees.iter().filter(|t| t.labeled).count() > 1 {
            return Err(WorldError::MultipleLabels);
        }
        if let Some(i) = self.walls.iter().position(|w| w.a == w.b) {
            return Err(WorldError::DegenerateWall(i));
        }
        Ok(())
    }

    pub fn labeled_tree(&self) -> Option<(usize, &TruthTree)> {
        self.trees.iter().enumerate().find(|(_, t)| t.labeled)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub angle_min: f64,
    pub angle_span: f64,
    pub angle_step: f64,
    pub max_range: f64,
    pub noise_sigma: f64,
    pub dropout_prob: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            angle_min: -135f64.to_radians(),
            angle_span: 270f64.to_radians(),
            angle_step: 0.25f64.to_radians(),
            max_range: 20.0,
            noise_sigma: 0.0,
            dropout_prob: 0.0,
        }
    }
}

impl SensorConfig {
    pub fn beam_count(&self) -> usize {
        (self.angle_span / self.angle_step).round() as usize + 1
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.angle_step > 0.0 && self.angle_span > 0.0) {
            return Err(WorldError::Sensor("angle span and step must be positive"));
        }
        if self.angle_span > std::f64::consts::TAU + 1e-12 {
            return Err(WorldError::Sensor("angle span exceeds a full turn"));
        }
        let beams = self.angle_span / self.angle_step;
        if (beams - beams.round()).abs() > 1e-6 {
            return Err(WorldError::Sensor("angle span is not a whole number of steps"));
        }
        if !(self.max_range > 0.0) {
            return Err(WorldError::Sensor("max range must be positive"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(WorldError::Sensor("noise sigma must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(WorldError::Sensor("dropout probability must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Random-walk odometry drift intensities, per square-root second.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdometryNoise {
    pub sigma_xy: f64,
    pub sigma_yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitObject {
    Tree(usize),
    Wall(usize),
}

/// Nearest positive hit distance of the ray `origin + t·dir` (unit `dir`)
/// with a circle. A ray starting inside the circle hits the far side.
pub fn ray_circle(origin: P, dir: P, center: P, radius: f64) -> Option<f64> {
    let rel = center - origin;
    let along = rel.dot(dir);
    let perp = rel.cross(dir);
    let disc = radius * radius - perp * perp;
    if disc < 0.0 {
        return None;
    }
    let half = disc.sqrt();
    let (near, far) = (along - half, along + half);
    if near > 0.0 {
        Some(near)
    } else if far > 0.0 {
        Some(far)
    } else {
        None
    }
}

pub fn ray_segment(origin: P, dir: P, a: P, b: P) -> Option<f64> {
    let edge = b - a;
    let denom = dir.cross(edge);
    if denom.abs() < 1e-15 {
        return None;
    }
    let to_a = a - origin;
    let t = to_a.cross(edge) / denom;
    let s = to_a.cross(dir) / denom;
    (t > 0.0 && (0.0..=1.0).contains(&s)).then_some(t)
}

/// Closest object along a ray, ignoring hits at or beyond `max_range`.
pub fn cast_ray(world: &WorldConfig, origin: P, dir: P, max_range: f64) -> Option<(f64, HitObject)> {
    let trees = world
        .trees
        .iter()
        .enumerate()
        .filter_map(|(i, t)| ray_circle(origin, dir, t.center(), t.radius).map(|d| (d, HitObject::Tree(i))));
    let walls = world.walls.iter().enumerate().filter_map(|(i, w)| {
        ray_segment(origin, dir, P::new(w.a[0], w.a[1]), P::new(w.b[0], w.b[1])).map(|d| (d, HitObject::Wall(i)))
    });
    trees
        .chain(walls)
        .filter(|(d, _)| *d < max_range)
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Raycasts a scan and also reports which object each beam struck before
/// noise and dropouts were applied.
pub fn raycast_scan_with_hits<R: Rng>(
    world: &WorldConfig,
    pose: &RobotPose<f64>,
    sensor: &SensorConfig,
    rng: &mut R,
) -> (LaserScan<f64>, Vec<Option<HitObject>>) {
    let n = sensor.beam_count();
    let mut ranges = Vec::with_capacity(n);
    let mut validity = Vec::with_capacity(n);
    let mut hits = Vec::with_capacity(n);
    let origin = pose.position();
    for i in 0..n {
        let angle = pose.yaw + sensor.angle_min + i as f64 * sensor.angle_step;
        let dir = P::new(angle.cos(), angle.sin());
        let hit = cast_ray(world, origin, dir, sensor.max_range);
        // draw both numbers for every beam so the stream does not depend on geometry
        let noise: f64 = StandardNormal.sample(rng);
        let dropped = rng.random::<f64>() < sensor.dropout_prob;
        hits.push(hit.map(|(_, h)| h));
        match hit {
            Some(_) if dropped => {
                ranges.push(f64::NAN);
                validity.push(Validity::Invalid);
            }
            Some((d, _)) => {
                let r = d + sensor.noise_sigma * noise;
                if r > 0.0 {
                    ranges.push(r);
                    validity.push(Validity::Valid);
                } else {
                    ranges.push(f64::NAN);
                    validity.push(Validity::Invalid);
                }
            }
            None => {
                ranges.push(sensor.max_range);
                validity.push(Validity::Invalid);
            }
        }
    }
    let scan = LaserScan::with_validity(sensor.angle_min, sensor.angle_step, ranges, validity)
        .expect("sensor config yields a well-formed scan");
    (scan, hits)
}

pub fn raycast_scan<R: Rng>(
    world: &WorldConfig,
    pose: &RobotPose<f64>,
    sensor: &SensorConfig,
    rng: &mut R,
) -> LaserScan<f64> {
    raycast_scan_with_hits(world, pose, sensor, rng).0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub true_pose: RobotPose<f64>,
    pub odom_pose: RobotPose<f64>,
    pub time: f64,
    pub rng_seed: u64,
}

/// Noise-free Euler step of the body-frame velocity command.
pub fn integrate_pose(pose: &RobotPose<f64>, cmd: &VelocityCommand<f64>, dt: f64) -> RobotPose<f64> {
    let v = P::new(cmd.vx, cmd.vy).rotate(pose.yaw);
    RobotPose::new(
        pose.x + v.x * dt,
        pose.y + v.y * dt,
        (pose.z + cmd.vz * dt).max(0.0),
        pose.yaw + cmd.vyaw * dt,
    )
}

/// Advances the true pose by the command and the odometry estimate by the
/// same command plus random-walk drift.
pub fn integrate<R: Rng>(
    state: &SimState,
    cmd: &VelocityCommand<f64>,
    dt: f64,
    drift: &OdometryNoise,
    rng: &mut R,
) -> SimState {
    assert!(dt > 0.0, "time step must be positive");
    let true_pose = integrate_pose(&state.true_pose, cmd, dt);
    let odom = integrate_pose(&state.odom_pose, cmd, dt);
    let scale = dt.sqrt();
    let nx: f64 = StandardNormal.sample(rng);
    let ny: f64 = StandardNormal.sample(rng);
    let nyaw: f64 = StandardNormal.sample(rng);
    let odom_pose = RobotPose::new(
        odom.x + drift.sigma_xy * scale * nx,
        odom.y + drift.sigma_xy * scale * ny,
        odom.z,
        odom.yaw + drift.sigma_yaw * scale * nyaw,
    );
    SimState {
        true_pose,
        odom_pose,
        time: state.time + dt,
        rng_seed: state.rng_seed,
    }
}

/// Beacon stand-in for spotting the labeled tree: returns the index of the
/// observation that matches it, if the tree is close enough and nothing
/// blocks the line of sight to its center.
pub fn sense_label(
    world: &WorldConfig,
    true_pose: &RobotPose<f64>,
    observations: &[TreeObservation<f64>],
    max_label_range: f64,
    thre_dist: f64,
) -> Option<usize> {
    let (idx, tree) = world.labeled_tree()?;
    let center = tree.center();
    let to_tree = center - true_pose.position();
    let dist = to_tree.norm();
    if !(dist < max_label_range) || dist == 0.0 {
        return None;
    }
    let dir = to_tree * dist.recip();
    match cast_ray(world, true_pose.position(), dir, dist) {
        Some((_, HitObject::Tree(i))) if i == idx => {}
        _ => return None,
    }
    observations
        .iter()
        .enumerate()
        .map(|(i, o)| (i, to_world(o.center, true_pose).distance(center)))
        .filter(|(_, d)| *d < thre_dist)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// World, sensor and seeded random streams bundled with the evolving state.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub world: WorldConfig,
    pub sensor: SensorConfig,
    pub drift: OdometryNoise,
    state: SimState,
    sensor_rng: ChaCha8Rng,
    odom_rng: ChaCha8Rng,
}

impl Simulator {
    pub fn new(
        world: WorldConfig,
        sensor: SensorConfig,
        drift: OdometryNoise,
        start: RobotPose<f64>,
        seed: u64,
    ) -> Self {
        let sensor_rng = ChaCha8Rng::seed_from_u64(seed);
        let mut odom_rng = ChaCha8Rng::seed_from_u64(seed);
        odom_rng.set_stream(1);
        Self {
            world,
            sensor,
            drift,
            state: SimState {
                true_pose: start,
                odom_pose: start,
                time: 0.0,
                rng_seed: seed,
            },
            sensor_rng,
            odom_rng,
        }
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn scan(&mut self) -> LaserScan<f64> {
        raycast_scan(&self.world, &self.state.true_pose, &self.sensor, &mut self.sensor_rng)
    }

    pub fn step(&mut self, cmd: &VelocityCommand<f64>, dt: f64) {
        self.state = integrate(&self.state, cmd, dt, &self.drift, &mut self.odom_rng);
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn one_tree(x: f64, y: f64, r: f64) -> WorldConfig {
        WorldConfig {
            trees: vec![TruthTree {
                x,
                y,
                radius: r,
                labeled: true,
            }],
            ..Default::default()
        }
    }

    /// Beam-index lookup for a body-frame angle.
    fn beam_at(sensor: &SensorConfig, angle: f64) -> usize {
        ((angle - sensor.angle_min) / sensor.angle_step).round() as usize
    }

    #[test]
    fn center_line_beam_range() {
        let world = one_tree(2.0, 0.0, 0.5);
        let sensor = SensorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scan = raycast_scan(&world, &RobotPose::default(), &sensor, &mut rng);
        let i = beam_at(&sensor, 0.0);
        assert!(scan.is_valid(i));
        assert!((scan.ranges()[i] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn empty_world_all_invalid_at_max_range() {
        let sensor = SensorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scan = raycast_scan(&WorldConfig::default(), &RobotPose::default(), &sensor, &mut rng);
        assert_eq!(scan.len(), 1081);
        assert_eq!(scan.valid_count(), 0);
        assert!(scan.ranges().iter().all(|&r| r == sensor.max_range));
    }

    #[test]
    fn tangent_beam_misses() {
        let tangent = (0.5f64 / 2.0).asin();
        let c = P::new(2.0, 0.0);
        let dir = |a: f64| P::new(a.cos(), a.sin());
        assert!(ray_circle(P::origin(), dir(tangent + 1e-6), c, 0.5).is_none());
        assert!(ray_circle(P::origin(), dir(tangent - 1e-6), c, 0.5).is_some());
    }

    #[test]
    fn ray_starting_inside_hits_far_side() {
        let d = ray_circle(P::origin(), P::new(1.0, 0.0), P::new(0.2, 0.0), 0.5).unwrap();
        assert!((d - 0.7).abs() < 1e-12);
        assert!(ray_circle(P::origin(), P::new(-1.0, 0.0), P::new(2.0, 0.0), 0.5).is_none());
    }

    #[test]
    fn wall_hits_and_nearest_object() {
        let world = WorldConfig {
            trees: vec![TruthTree {
                x: 3.0,
                y: 0.0,
                radius: 0.2,
                labeled: false,
            }],
            walls: vec![Wall {
                a: [2.0, -1.0],
                b: [2.0, 1.0],
            }],
            ..Default::default()
        };
        let (d, hit) = cast_ray(&world, P::origin(), P::new(1.0, 0.0), 20.0).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        assert_eq!(hit, HitObject::Wall(0));
        assert!(cast_ray(&world, P::origin(), P::new(0.0, 1.0), 20.0).is_none());
        assert!(cast_ray(&world, P::origin(), P::new(1.0, 0.0), 1.5).is_none());
    }

    #[test]
    fn integrate_examples() {
        let s0 = SimState {
            true_pose: RobotPose::default(),
            odom_pose: RobotPose::default(),
            time: 0.0,
            rng_seed: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let quiet = OdometryNoise::default();
        let s = integrate(&s0, &VelocityCommand::new(1.0, 0.0, 0.0, 0.0), 0.1, &quiet, &mut rng);
        assert!((s.true_pose.x - 0.1).abs() < 1e-15);
        assert_eq!(s.odom_pose, s.true_pose);
        assert!((s.time - 0.1).abs() < 1e-15);

        // yaw += π lands on π, not −π
        let s = integrate(&s0, &VelocityCommand::new(0.0, 0.0, 0.0, PI), 1.0, &quiet, &mut rng);
        assert!((s.true_pose.yaw - PI).abs() < 1e-12);
        let s = integrate(&s, &VelocityCommand::new(0.0, 0.0, 0.0, 0.5), 1.0, &quiet, &mut rng);
        assert!((s.true_pose.yaw - (0.5 - PI)).abs() < 1e-12);

        // body +y at yaw π/2 is world −x
        let facing_north = SimState {
            true_pose: RobotPose::new(0.0, 0.0, 0.0, FRAC_PI_2),
            ..s0
        };
        let s = integrate(
            &facing_north,
            &VelocityCommand::new(0.0, 1.0, 0.0, 0.0),
            0.1,
            &quiet,
            &mut rng,
        );
        assert!((s.true_pose.x + 0.1).abs() < 1e-15);
        assert!(s.true_pose.y.abs() < 1e-15);
    }

    #[test]
    fn odometry_drifts_with_noise() {
        let mut sim = Simulator::new(
            WorldConfig::default(),
            SensorConfig::default(),
            OdometryNoise {
                sigma_xy: 0.05,
                sigma_yaw: 0.01,
            },
            RobotPose::default(),
            3,
        );
        for _ in 0..100 {
            sim.step(&VelocityCommand::new(0.5, 0.0, 0.0, 0.0), 0.02);
        }
        let s = sim.state();
        assert!((s.true_pose.x - 1.0).abs() < 1e-12);
        assert_ne!(s.odom_pose, s.true_pose);
    }

    #[test]
    fn world_validation() {
        let mut w = one_tree(0.0, 0.0, 0.2);
        assert!(w.validate().is_ok());
        w.trees.push(TruthTree {
            x: 0.3,
            y: 0.0,
            radius: 0.2,
            labeled: false,
        });
        assert_eq!(w.validate(), Err(WorldError::Overlap(0, 1)));
        w.trees[1].x = 1.0;
        w.trees[1].labeled = true;
        assert_eq!(w.validate(), Err(WorldError::MultipleLabels));
        let bad = one_tree(0.0, 0.0, 0.0);
        assert_eq!(bad.validate(), Err(WorldError::BadRadius(0)));
    }

    #[test]
    fn sensor_validation() {
        assert!(SensorConfig::default().validate().is_ok());
        let odd = SensorConfig {
            angle_step: 0.7f64.to_radians(),
            ..Default::default()
        };
        assert!(odd.validate().is_err());
        let drop = SensorConfig {
            dropout_prob: 1.0,
            ..Default::default()
        };
        assert!(drop.validate().is_err());
    }

    fn observation_at(x: f64, y: f64) -> TreeObservation<f64> {
        TreeObservation {
            center: P::new(x, y),
            radius: 0.15,
            cv: 0.0,
            view_angle_gap: 0.0,
        }
    }

    #[test]
    fn label_in_clear_view() {
        let world = one_tree(2.0, 0.0, 0.15);
        let obs = [observation_at(0.0, 3.0), observation_at(2.02, 0.01)];
        assert_eq!(sense_label(&world, &RobotPose::default(), &obs, 5.0, 0.5), Some(1));
        assert_eq!(sense_label(&world, &RobotPose::default(), &obs, 1.5, 0.5), None);
    }

    #[test]
    fn no_label_in_world() {
        let mut world = one_tree(2.0, 0.0, 0.15);
        world.trees[0].labeled = false;
        let obs = [observation_at(2.0, 0.0)];
        assert_eq!(sense_label(&world, &RobotPose::default(), &obs, 5.0, 0.5), None);
    }

    #[test]
    fn occluded_label_is_not_sensed() {
        let mut world = one_tree(4.0, 0.0, 0.15);
        world.trees.push(TruthTree {
            x: 2.0,
            y: 0.0,
            radius: 0.2,
            labeled: false,
        });
        let obs = [observation_at(4.0, 0.0)];
        // the nearer trunk's shadow covers the center ray: half-angle asin(0.2/2) ≫ 0
        assert_eq!(sense_label(&world, &RobotPose::default(), &obs, 5.0, 0.5), None);
        // step sideways until the center ray clears the occluder
        let side = RobotPose::new(0.0, 1.0, 0.0, 0.0);
        let obs_side = [observation_at(4.0, -1.0)];
        assert_eq!(sense_label(&world, &side, &obs_side, 5.0, 0.5), Some(0));
    }
}
