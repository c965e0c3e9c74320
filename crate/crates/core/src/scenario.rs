//! Scenario files.
//!
//! A scenario is a TOML document. Every table is optional except `world`;
//! omitted keys take the defaults shown below. Angles in the file are in
//! degrees (`*_deg` keys), everything else is SI.
//!
//! ```toml
//! name = "single tree"
//! seed = 7
//! steps = 4000            # control ticks
//! dt = 0.02               # s
//! scan_period = 0.025     # s
//! record_scans = false    # also write scans.log for replay
//!
//! [start]
//! x = -3.0
//! y = 0.0
//! z = 1.5
//! yaw_deg = 0.0
//!
//! [world]
//! bounds = { min_x = -50.0, min_y = -50.0, max_x = 50.0, max_y = 50.0 }
//! trees = [ { x = 0.0, y = 0.0, radius = 0.1495, labeled = true } ]
//! walls = [ { a = [3.0, -1.0], b = [3.0, 1.0] } ]
//!
//! [sensor]
//! angle_min_deg = -135.0
//! angle_span_deg = 270.0
//! angle_step_deg = 0.25
//! max_range = 20.0
//! noise_sigma = 0.0
//! dropout_prob = 0.0
//!
//! [odometry]              # random-walk drift, per sqrt(s)
//! sigma_xy = 0.0
//! sigma_yaw = 0.0
//!
//! [filters]
//! thre_l = 0.06
//! thre_h = 20.0
//! theta_min_deg = 10.0
//! theta_max_deg = 170.0
//! min_cluster_size = 5
//!
//! [discrimination]
//! thre_cv = 0.05
//! thre_theta_view_deg = 10.0
//! r_min = 0.05
//! r_max = 0.5
//!
//! [controller]
//! k_x = 1.0
//! k_z = 1.0
//! k_phi = 2.0
//! v = 0.3
//! d_ref = 1.1
//! z_ref = 1.5
//! max_speed = 1.0
//! max_yaw_rate = 1.5
//! arrival_tol = 0.1
//! heading_tol_deg = 10.0
//! label_search_yaw_rate = 0.3
//!
//! [search]
//! method = "narrow"       # or "deep"
//! area_radius = 8.0       # narrow only
//!
//! [database]
//! thre_dist = 0.5
//! min_votes = 5
//!
//! [label]
//! max_range = 5.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::db::RobotPose;
use crate::fit::DiscriminationParams;
use crate::nav::{ControllerParams, SearchMethod};
use crate::scan::ScanFilterParams;
use crate::sim::{OdometryNoise, SensorConfig, WorldConfig, WorldError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    Narrow,
    Deep,
}

impl std::str::FromStr for SearchKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "narrow" => Ok(Self::Narrow),
            "deep" => Ok(Self::Deep),
            other => Err(format!("unknown search method '{other}' (narrow|deep)")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StartSection {
    x: f64,
    y: f64,
    z: f64,
    yaw_deg: f64,
}

impl Default for StartSection {
    fn default() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 1.5,
            yaw_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SensorSection {
    angle_min_deg: f64,
    angle_span_deg: f64,
    angle_step_deg: f64,
    max_range: f64,
    noise_sigma: f64,
    dropout_prob: f64,
}

impl Default for SensorSection {
    fn default() -> Self {
        let s = SensorConfig::default();
        Self {
            angle_min_deg: s.angle_min.to_degrees(),
            angle_span_deg: s.angle_span.to_degrees(),
            angle_step_deg: s.angle_step.to_degrees(),
            max_range: s.max_range,
            noise_sigma: s.noise_sigma,
            dropout_prob: s.dropout_prob,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FilterSection {
    thre_l: f64,
    thre_h: f64,
    theta_min_deg: f64,
    theta_max_deg: f64,
    min_cluster_size: usize,
}

impl Default for FilterSection {
    fn default() -> Self {
        let f = ScanFilterParams::<f64>::default();
        Self {
            thre_l: f.thre_l,
            thre_h: f.thre_h,
            theta_min_deg: f.theta_min.to_degrees(),
            theta_max_deg: f.theta_max.to_degrees(),
            min_cluster_size: f.min_cluster_size,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DiscriminationSection {
    thre_cv: f64,
    thre_theta_view_deg: f64,
    r_min: f64,
    r_max: f64,
}

impl Default for DiscriminationSection {
    fn default() -> Self {
        let d = DiscriminationParams::<f64>::default();
        Self {
            thre_cv: d.thre_cv,
            thre_theta_view_deg: d.thre_theta_view.to_degrees(),
            r_min: d.r_min,
            r_max: d.r_max,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ControllerSection {
    k_x: f64,
    k_z: f64,
    k_phi: f64,
    v: f64,
    d_ref: f64,
    z_ref: f64,
    max_speed: f64,
    max_yaw_rate: f64,
    arrival_tol: f64,
    heading_tol_deg: f64,
    label_search_yaw_rate: f64,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerParams::<f64>::default();
        Self {
            k_x: c.k_x,
            k_z: c.k_z,
            k_phi: c.k_phi,
            v: c.v,
            d_ref: c.d_ref,
            z_ref: c.z_ref,
            max_speed: c.max_speed,
            max_yaw_rate: c.max_yaw_rate,
            arrival_tol: c.arrival_tol,
            heading_tol_deg: c.heading_tol.to_degrees(),
            label_search_yaw_rate: c.label_search_yaw_rate,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SearchSection {
    method: SearchKind,
    area_radius: f64,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            method: SearchKind::Narrow,
            area_radius: 8.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DatabaseSection {
    thre_dist: f64,
    min_votes: u32,
}

impl Default for DatabaseSection {
    fn default() -> Self {
        Self {
            thre_dist: 0.5,
            min_votes: 5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LabelSection {
    max_range: f64,
}

impl Default for LabelSection {
    fn default() -> Self {
        Self { max_range: 5.0 }
    }
}

fn default_steps() -> usize {
    20_000
}
fn default_dt() -> f64 {
    0.02
}
fn default_scan_period() -> f64 {
    0.025
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    name: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_steps")]
    steps: usize,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_scan_period")]
    scan_period: f64,
    #[serde(default)]
    record_scans: bool,
    #[serde(default)]
    start: StartSection,
    world: WorldConfig,
    #[serde(default)]
    sensor: SensorSection,
    #[serde(default)]
    odometry: OdometryNoise,
    #[serde(default)]
    filters: FilterSection,
    #[serde(default)]
    discrimination: DiscriminationSection,
    #[serde(default)]
    controller: ControllerSection,
    #[serde(default)]
    search: SearchSection,
    #[serde(default)]
    database: DatabaseSection,
    #[serde(default)]
    label: LabelSection,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub steps: usize,
    pub dt: f64,
    pub scan_period: f64,
    pub record_scans: bool,
    pub start: RobotPose<f64>,
    pub world: WorldConfig,
    pub sensor: SensorConfig,
    pub drift: OdometryNoise,
    pub filters: ScanFilterParams<f64>,
    pub discrimination: DiscriminationParams<f64>,
    pub controller: ControllerParams<f64>,
    pub search_kind: SearchKind,
    pub area_radius: f64,
    pub thre_dist: f64,
    pub min_votes: u32,
    pub max_label_range: f64,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let s = Self::from_file(file);
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    fn from_file(f: ScenarioFile) -> Self {
        let rad = f64::to_radians;
        Self {
            name: f.name,
            seed: f.seed,
            steps: f.steps,
            dt: f.dt,
            scan_period: f.scan_period,
            record_scans: f.record_scans,
            start: RobotPose::new(f.start.x, f.start.y, f.start.z, rad(f.start.yaw_deg)),
            world: f.world,
            sensor: SensorConfig {
                angle_min: rad(f.sensor.angle_min_deg),
                angle_span: rad(f.sensor.angle_span_deg),
                angle_step: rad(f.sensor.angle_step_deg),
                max_range: f.sensor.max_range,
                noise_sigma: f.sensor.noise_sigma,
                dropout_prob: f.sensor.dropout_prob,
            },
            drift: f.odometry,
            filters: ScanFilterParams {
                thre_l: f.filters.thre_l,
                thre_h: f.filters.thre_h,
                theta_min: rad(f.filters.theta_min_deg),
                theta_max: rad(f.filters.theta_max_deg),
                min_cluster_size: f.filters.min_cluster_size,
            },
            discrimination: DiscriminationParams {
                thre_cv: f.discrimination.thre_cv,
                thre_theta_view: rad(f.discrimination.thre_theta_view_deg),
                r_min: f.discrimination.r_min,
                r_max: f.discrimination.r_max,
            },
            controller: ControllerParams {
                k_x: f.controller.k_x,
                k_z: f.controller.k_z,
                k_phi: f.controller.k_phi,
                v: f.controller.v,
                d_ref: f.controller.d_ref,
                z_ref: f.controller.z_ref,
                max_speed: f.controller.max_speed,
                max_yaw_rate: f.controller.max_yaw_rate,
                arrival_tol: f.controller.arrival_tol,
                heading_tol: rad(f.controller.heading_tol_deg),
                label_search_yaw_rate: f.controller.label_search_yaw_rate,
            },
            search_kind: f.search.method,
            area_radius: f.search.area_radius,
            thre_dist: f.database.thre_dist,
            min_votes: f.database.min_votes,
            max_label_range: f.label.max_range,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.scan_period > 0.0 && self.scan_period.is_finite()) {
            return Err(invalid("scan_period", "must be positive"));
        }
        self.world.validate().map_err(|e| {
            let field = match e {
                WorldError::BadRadius(i) => format!("world.trees[{i}]"),
                WorldError::Overlap(_, j) => format!("world.trees[{j}]"),
                WorldError::MultipleLabels => "world.trees".into(),
                WorldError::BadBounds => "world.bounds".into(),
                WorldError::DegenerateWall(i) => format!("world.walls[{i}]"),
                WorldError::Sensor(_) => "sensor".into(),
            };
            invalid(field, e)
        })?;
        if !self.world.bounds.contains(self.start.position()) {
            return Err(invalid("start", "start position is outside the world bounds"));
        }
        if !(self.start.z >= 0.0) {
            return Err(invalid("start.z", "altitude must be non-negative"));
        }
        self.sensor.validate().map_err(|e| invalid("sensor", e))?;
        if !(self.drift.sigma_xy >= 0.0 && self.drift.sigma_yaw >= 0.0) {
            return Err(invalid("odometry", "drift sigmas must be non-negative"));
        }
        self.filters.validate().map_err(|e| invalid("filters", e))?;
        self.discrimination
            .validate()
            .map_err(|e| invalid("discrimination", e))?;
        self.controller.validate().map_err(|e| invalid("controller", e))?;
        if self.search_kind == SearchKind::Narrow && !(self.area_radius > 0.0) {
            return Err(invalid("search.area_radius", "must be positive"));
        }
        if !(self.thre_dist > 0.0) {
            return Err(invalid("database.thre_dist", "must be positive"));
        }
        if self.min_votes < 1 {
            return Err(invalid("database.min_votes", "must be at least 1"));
        }
        if !(self.max_label_range > 0.0) {
            return Err(invalid("label.max_range", "must be positive"));
        }
        Ok(())
    }

    pub fn search_method(&self) -> SearchMethod<f64> {
        match self.search_kind {
            SearchKind::Narrow => SearchMethod::Narrow {
                area_radius: self.area_radius,
            },
            SearchKind::Deep => SearchMethod::Deep,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [world]
        trees = [ { x = 2.0, y = 0.0, radius = 0.15, labeled = true } ]
    "#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.steps, 20_000);
        assert_eq!(s.dt, 0.02);
        assert_eq!(s.filters, ScanFilterParams::default());
        assert_eq!(s.sensor.beam_count(), 1081);
        assert_eq!(s.controller.d_ref, 1.1);
        assert_eq!(s.search_method(), SearchMethod::Narrow { area_radius: 8.0 });
        assert_eq!(s.thre_dist, 0.5);
    }

    #[test]
    fn errors_carry_field_paths() {
        let overlap = r#"
            [world]
            trees = [ { x = 0.0, y = 0.0, radius = 0.3 }, { x = 0.2, y = 0.0, radius = 0.3 } ]
        "#;
        match Scenario::from_toml_str(overlap) {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "world.trees[1]"),
            other => panic!("{other:?}"),
        }
        let bad_filter = format!("{MINIMAL}\n[filters]\nmin_cluster_size = 2\n");
        match Scenario::from_toml_str(&bad_filter) {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "filters"),
            other => panic!("{other:?}"),
        }
        let unknown = format!("{MINIMAL}\n[filters]\nthre_x = 2\n");
        assert!(matches!(Scenario::from_toml_str(&unknown), Err(ConfigError::Parse(_))));
        assert!(matches!(
            Scenario::from_toml_str("seed = 1"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn deep_search_and_angles_in_degrees() {
        let text = format!(
            "{MINIMAL}\n[search]\nmethod = \"deep\"\n[start]\nyaw_deg = 90.0\n[discrimination]\nthre_theta_view_deg = 3.0\n"
        );
        let s = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(s.search_method(), SearchMethod::Deep);
        assert!((s.start.yaw - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((s.discrimination.thre_theta_view - 3f64.to_radians()).abs() < 1e-15);
    }
}
