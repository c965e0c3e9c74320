//! Forest survey perception and navigation.
//!
//! The crate turns raw 2D laser scans into tree observations, keeps a
//! world-frame tree database with vote counts, and drives an aerial robot
//! around trees with an orbit controller and a visit-ordering search.
//! A deterministic simulator and scenario runner sit on top for offline
//! evaluation.
//!
//! ## Modules
//!
//! - [`scan`]: range and shadow filters, clustering
//! - [`fit`]: least-squares circle fit, view angles, tree discrimination
//! - [`db`]: world-frame tree database with voting
//! - [`nav`]: orbit and approach controllers, search mission
//! - [`sim`]: cylinder forest, lidar raycasting, kinematics, odometry drift
//! - [`scenario`], [`runner`], [`replay`], [`metrics`], [`record`]: scenario
//!   files, the main loop, offline replay, diameter reports and log formats
//!
//! The math modules are generic over [`Scalar`] (`f32` or `f64`); the
//! simulator and runner use `f64`. Aliases for both precisions are below.

// `!(a < b)` is used on purpose: NaN fails every such check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod db;
pub mod fit;
pub mod geometry;
pub mod metrics;
pub mod nav;
pub mod record;
pub mod replay;
pub mod runner;
pub mod scalar;
pub mod scan;
pub mod scenario;
pub mod sim;

pub use scalar::Scalar;

pub type Point2F64 = geometry::Point2<f64>;
pub type Point2F32 = geometry::Point2<f32>;

pub type LaserScanF64 = scan::LaserScan<f64>;
pub type LaserScanF32 = scan::LaserScan<f32>;
pub type ScanFilterParamsF64 = scan::ScanFilterParams<f64>;
pub type ScanFilterParamsF32 = scan::ScanFilterParams<f32>;
pub type PointClusterF64 = scan::PointCluster<f64>;
pub type PointClusterF32 = scan::PointCluster<f32>;

pub type CircleFitF64 = fit::CircleFit<f64>;
pub type CircleFitF32 = fit::CircleFit<f32>;
pub type DiscriminationParamsF64 = fit::DiscriminationParams<f64>;
pub type DiscriminationParamsF32 = fit::DiscriminationParams<f32>;
pub type TreeObservationF64 = fit::TreeObservation<f64>;
pub type TreeObservationF32 = fit::TreeObservation<f32>;

pub type RobotPoseF64 = db::RobotPose<f64>;
pub type RobotPoseF32 = db::RobotPose<f32>;
pub type TreeF64 = db::Tree<f64>;
pub type TreeF32 = db::Tree<f32>;
pub type TreeDatabaseF64 = db::TreeDatabase<f64>;
pub type TreeDatabaseF32 = db::TreeDatabase<f32>;

pub type ControllerParamsF64 = nav::ControllerParams<f64>;
pub type ControllerParamsF32 = nav::ControllerParams<f32>;
pub type VelocityCommandF64 = nav::VelocityCommand<f64>;
pub type VelocityCommandF32 = nav::VelocityCommand<f32>;
pub type MissionStateF64 = nav::MissionState<f64>;
pub type MissionStateF32 = nav::MissionState<f32>;
