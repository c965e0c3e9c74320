//! Laser scan filtering and clustering.
//!
//! A scan goes through the range filter, then the shadow filter, then is cut
//! into clusters of consecutive valid points. Filters only ever clear
//! validity flags; the ranges themselves are never modified.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{vertex_angle, Point2};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Validity {
    Valid,
    Invalid,
}

impl Validity {
    pub fn is_valid(self) -> bool {
        self == Validity::Valid
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("scan needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("ranges ({ranges}) and validity ({validity}) lengths differ")]
    LengthMismatch { ranges: usize, validity: usize },
    #[error("angle step must be positive and finite")]
    BadStep,
    #[error("sweep of {0} rad exceeds a full turn")]
    SweepTooWide(f64),
    #[error("sample {0} is marked valid but its range is not finite and positive")]
    BadValidRange(usize),
}

/// One revolution of polar range samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserScan<T> {
    angle_min: T,
    angle_step: T,
    ranges: Vec<T>,
    validity: Vec<Validity>,
}

impl<T: Scalar> LaserScan<T> {
    /// Builds a scan from raw readings. Non-finite and non-positive readings
    /// (dropouts) start out invalid.
    pub fn new(angle_min: T, angle_step: T, ranges: Vec<T>) -> Result<Self, ScanError> {
        let validity = ranges
            .iter()
            .map(|r| {
                if r.is_finite() && *r > T::zero() {
                    Validity::Valid
                } else {
                    Validity::Invalid
                }
            })
            .collect();
        Self::with_validity(angle_min, angle_step, ranges, validity)
    }

    pub fn with_validity(
        angle_min: T,
        angle_step: T,
        ranges: Vec<T>,
        validity: Vec<Validity>,
    ) -> Result<Self, ScanError> {
        if ranges.len() != validity.len() {
            return Err(ScanError::LengthMismatch {
                ranges: ranges.len(),
                validity: validity.len(),
            });
        }
        if ranges.len() < 2 {
            return Err(ScanError::TooShort(ranges.len()));
        }
        if !(angle_step.is_finite() && angle_step > T::zero()) || !angle_min.is_finite() {
            return Err(ScanError::BadStep);
        }
        let sweep = angle_step * T::from_count(ranges.len() - 1);
        // allow for rounding in a step derived as 2π / (n - 1)
        if sweep > T::TAU() * (T::one() + T::epsilon() * T::lit(16.0)) {
            return Err(ScanError::SweepTooWide(sweep.to_f64_lossy()));
        }
        if let Some(i) = ranges
            .iter()
            .zip(&validity)
            .position(|(r, v)| v.is_valid() && !(r.is_finite() && *r > T::zero()))
        {
            return Err(ScanError::BadValidRange(i));
        }
        Ok(Self {
            angle_min,
            angle_step,
            ranges,
            validity,
        })
    }

    pub fn angle_min(&self) -> T {
        self.angle_min
    }

    pub fn angle_step(&self) -> T {
        self.angle_step
    }

    pub fn ranges(&self) -> &[T] {
        &self.ranges
    }

    pub fn validity(&self) -> &[Validity] {
        &self.validity
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    /// Always false for a constructed scan; present for clippy's sake.
    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.validity[i].is_valid()
    }

    pub fn valid_count(&self) -> usize {
        self.validity.iter().filter(|v| v.is_valid()).count()
    }

    pub fn beam_angle(&self, i: usize) -> T {
        self.angle_min + T::from_count(i) * self.angle_step
    }

    /// Cartesian point of sample `i` in the sensor frame.
    pub fn point(&self, i: usize) -> Point2<T> {
        Point2::from_polar(self.ranges[i], self.beam_angle(i))
    }

    fn with_flags(&self, validity: Vec<Validity>) -> Self {
        Self {
            angle_min: self.angle_min,
            angle_step: self.angle_step,
            ranges: self.ranges.clone(),
            validity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid scan filter parameters: {0}")]
pub struct FilterParamsError(pub &'static str);

/// Range-filter bounds, shadow-filter angle window and the minimum cluster size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanFilterParams<T> {
    pub thre_l: T,
    pub thre_h: T,
    pub theta_min: T,
    pub theta_max: T,
    pub min_cluster_size: usize,
}

impl<T: Scalar> ScanFilterParams<T> {
    pub fn new(
        thre_l: T,
        thre_h: T,
        theta_min: T,
        theta_max: T,
        min_cluster_size: usize,
    ) -> Result<Self, FilterParamsError> {
        let p = Self {
            thre_l,
            thre_h,
            theta_min,
            theta_max,
            min_cluster_size,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FilterParamsError> {
        if !(self.thre_l >= T::zero() && self.thre_l < self.thre_h) {
            return Err(FilterParamsError("need 0 <= thre_l < thre_h"));
        }
        if !(self.theta_min > T::zero() && self.theta_min < self.theta_max && self.theta_max < T::PI()) {
            return Err(FilterParamsError("need 0 < theta_min < theta_max < pi"));
        }
        if self.min_cluster_size < 3 {
            return Err(FilterParamsError("min_cluster_size must be at least 3"));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for ScanFilterParams<T> {
    fn default() -> Self {
        Self {
            thre_l: T::lit(0.06),
            thre_h: T::lit(20.0),
            theta_min: T::lit(10f64.to_radians()),
            theta_max: T::lit(170f64.to_radians()),
            min_cluster_size: 5,
        }
    }
}

/// A maximal run of valid consecutive samples, in the sensor frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCluster<T> {
    pub points: Vec<Point2<T>>,
    pub first_index: usize,
}

impl<T> PointCluster<T> {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    /// Index one past the last source sample.
    pub fn end_index(&self) -> usize {
        self.first_index + self.points.len()
    }
}

/// Keeps samples with `thre_l < range < thre_h`.
pub fn range_filter<T: Scalar>(scan: &LaserScan<T>, params: &ScanFilterParams<T>) -> LaserScan<T> {
    let validity = scan
        .ranges
        .iter()
        .zip(&scan.validity)
        .map(|(&r, &v)| {
            if v.is_valid() && r.is_finite() && params.thre_l < r && r < params.thre_h {
                Validity::Valid
            } else {
                Validity::Invalid
            }
        })
        .collect();
    scan.with_flags(validity)
}

/// Whether the step from `p` to `q` looks like a depth discontinuity seen
/// from the sensor origin.
///
/// The angle at both endpoints of the origin triangle is tested so the
/// outcome does not depend on scan direction.
pub fn is_shadow_pair<T: Scalar>(p: Point2<T>, q: Point2<T>, params: &ScanFilterParams<T>) -> bool {
    let origin = Point2::origin();
    let inside = |angle: Option<T>| match angle {
        Some(a) => params.theta_min < a && a < params.theta_max,
        None => false,
    };
    !(inside(vertex_angle(origin, p, q)) && inside(vertex_angle(origin, q, p)))
}

/// Invalidates both points of every adjacent valid pair that forms a shadow
/// pair. Pairs are judged against the incoming flags in one pass.
pub fn shadow_filter<T: Scalar>(scan: &LaserScan<T>, params: &ScanFilterParams<T>) -> LaserScan<T> {
    let mut validity = scan.validity.clone();
    for i in 0..scan.len() - 1 {
        if !(scan.is_valid(i) && scan.is_valid(i + 1)) {
            continue;
        }
        if is_shadow_pair(scan.point(i), scan.point(i + 1), params) {
            validity[i] = Validity::Invalid;
            validity[i + 1] = Validity::Invalid;
        }
    }
    scan.with_flags(validity)
}

/// Splits the valid samples into runs, dropping runs shorter than
/// `min_cluster_size`.
pub fn cluster<T: Scalar>(scan: &LaserScan<T>, params: &ScanFilterParams<T>) -> Vec<PointCluster<T>> {
    let mut clusters = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=scan.len() {
        let valid = i < scan.len() && scan.is_valid(i);
        match (start, valid) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                if i - s >= params.min_cluster_size {
                    clusters.push(PointCluster {
                        points: (s..i).map(|j| scan.point(j)).collect(),
                        first_index: s,
                    });
                }
                start = None;
            }
            _ => {}
        }
    }
    clusters
}

/// Range filter, shadow filter and clustering in sequence.
pub fn segment<T: Scalar>(scan: &LaserScan<T>, params: &ScanFilterParams<T>) -> Vec<PointCluster<T>> {
    let filtered = shadow_filter(&range_filter(scan, params), params);
    cluster(&filtered, params)
}
