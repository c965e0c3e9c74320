//! Line-oriented log formats.
//!
//! Scan log, one record per line:
//!
//! ```text
//! pose <t> <x> <y> <z> <yaw>
//! scan <t> <angle_min> <angle_step> <n> r0 r1 ... rn-1
//! ```
//!
//! Invalid samples are written as `nan`. A scan is interpreted in the frame
//! of the most recent `pose` record (the origin if none came before it).
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::db::RobotPose;
use crate::fit::TreeObservation;
use crate::nav::VelocityCommand;
use crate::scan::LaserScan;
use crate::sim::SimState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LogRecord {
    Pose { t: f64, pose: RobotPose<f64> },
    Scan { t: f64, scan: LaserScan<f64> },
}

pub fn format_pose(t: f64, pose: &RobotPose<f64>) -> String {
    format!("pose {} {} {} {} {}", t, pose.x, pose.y, pose.z, pose.yaw)
}

pub fn format_scan(t: f64, scan: &LaserScan<f64>) -> String {
    let mut line = format!("scan {} {} {} {}", t, scan.angle_min(), scan.angle_step(), scan.len());
    for (r, v) in scan.ranges().iter().zip(scan.validity()) {
        if v.is_valid() {
            let _ = write!(line, " {r}");
        } else {
            line.push_str(" nan");
        }
    }
    line
}

fn number(token: Option<&str>, what: &str) -> Result<f64, String> {
    let token = token.ok_or_else(|| format!("missing {what}"))?;
    token.parse::<f64>().map_err(|_| format!("bad {what} '{token}'"))
}

fn parse_line(line: &str) -> Result<Option<LogRecord>, String> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let mut tokens = line.split_whitespace();
    match tokens.next() {
        Some("pose") => {
            let t = number(tokens.next(), "time")?;
            let x = number(tokens.next(), "x")?;
            let y = number(tokens.next(), "y")?;
            let z = number(tokens.next(), "z")?;
            let yaw = number(tokens.next(), "yaw")?;
            if tokens.next().is_some() {
                return Err("trailing tokens after pose".into());
            }
            if ![t, x, y, z, yaw].iter().all(|v| v.is_finite()) {
                return Err("pose values must be finite".into());
            }
            Ok(Some(LogRecord::Pose {
                t,
                pose: RobotPose::new(x, y, z, yaw),
            }))
        }
        Some("scan") => {
            let t = number(tokens.next(), "time")?;
            let angle_min = number(tokens.next(), "angle_min")?;
            let angle_step = number(tokens.next(), "angle_step")?;
            let n_token = tokens.next().ok_or("missing sample count")?;
            let n: usize = n_token.parse().map_err(|_| format!("bad sample count '{n_token}'"))?;
            let ranges = tokens
                .map(|tok| tok.parse::<f64>().map_err(|_| format!("bad range '{tok}'")))
                .collect::<Result<Vec<_>, _>>()?;
            if ranges.len() != n {
                return Err(format!("expected {n} ranges, found {}", ranges.len()));
            }
            let scan = LaserScan::new(angle_min, angle_step, ranges).map_err(|e| e.to_string())?;
            Ok(Some(LogRecord::Scan { t, scan }))
        }
        Some(other) => Err(format!("unknown record type '{other}'")),
        None => Ok(None),
    }
}

pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(rec)) => out.push(rec),
            Ok(None) => {}
            Err(message) => return Err(ParseError { line: i + 1, message }),
        }
    }
    Ok(out)
}

/// JSON-lines detection record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub cv: f64,
    pub gap: f64,
}

impl ObservationRecord {
    pub fn new(t: f64, obs: &TreeObservation<f64>) -> Self {
        Self {
            t,
            x: obs.center.x,
            y: obs.center.y,
            r: obs.radius,
            cv: obs.cv,
            gap: obs.view_angle_gap,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("observation serializes")
    }
}

pub const TRAJECTORY_HEADER: &str = "t,true_x,true_y,true_yaw,odom_x,odom_y,odom_yaw,cmd_vx,cmd_vy,cmd_vz,cmd_vyaw";

pub fn trajectory_row(state: &SimState, cmd: &VelocityCommand<f64>) -> String {
    let (tp, op) = (&state.true_pose, &state.odom_pose);
    format!(
        "{:.4},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        state.time, tp.x, tp.y, tp.yaw, op.x, op.y, op.yaw, cmd.vx, cmd.vy, cmd.vz, cmd.vyaw
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::Validity;

    #[test]
    fn scan_line_round_trip() {
        let scan = LaserScan::with_validity(
            -1.0,
            0.25f64.to_radians(),
            vec![1.5, 2.0, 20.0, 0.1 + 0.2],
            vec![Validity::Valid, Validity::Valid, Validity::Invalid, Validity::Valid],
        )
        .unwrap();
        let line = format_scan(0.125, &scan);
        assert!(line.starts_with("scan 0.125 -1 0.004363323129985824 4 1.5 2 nan 0.30000000000000004"));
        let recs = parse_log(&line).unwrap();
        let LogRecord::Scan { t, scan: back } = &recs[0] else {
            panic!("expected a scan")
        };
        assert_eq!(*t, 0.125);
        assert_eq!(back.validity(), scan.validity());
        assert_eq!(back.angle_step(), scan.angle_step());
        for i in [0, 1, 3] {
            assert_eq!(back.ranges()[i], scan.ranges()[i]);
        }
    }

    #[test]
    fn pose_line_and_comments() {
        let text = "# header\n\npose 0.5 1 2 1.5 0.25\n";
        let recs = parse_log(text).unwrap();
        assert_eq!(
            recs,
            vec![LogRecord::Pose {
                t: 0.5,
                pose: RobotPose::new(1.0, 2.0, 1.5, 0.25)
            }]
        );
    }

    #[test]
    fn errors_name_the_line() {
        let text = "pose 0 0 0 0 0\nscan 0 0 0.1 3 1 2\n";
        let err = parse_log(text).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("expected 3 ranges"));
        assert_eq!(parse_log("bogus 1 2").unwrap_err().line, 1);
        assert_eq!(parse_log("\n\npose 0 x 0 0 0").unwrap_err().line, 3);
    }

    #[test]
    fn observation_json_shape() {
        let rec = ObservationRecord {
            t: 0.5,
            x: 2.0,
            y: -0.25,
            r: 0.15,
            cv: 0.01,
            gap: 0.002,
        };
        assert_eq!(
            rec.to_json(),
            r#"{"t":0.5,"x":2.0,"y":-0.25,"r":0.15,"cv":0.01,"gap":0.002}"#
        );
    }
}
