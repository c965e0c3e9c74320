//! Circle fitting and tree discrimination.
//!
//! Each cluster gets an algebraic least-squares circle fit. The fit's
//! coefficient of variation, the gap between the cluster's observed angular
//! width and the width a circle of the fitted size would subtend, and the
//! fitted radius together decide whether the cluster is a trunk.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::scan::{segment, LaserScan, PointCluster, ScanFilterParams};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("circle fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("normal matrix is singular (collinear or duplicate points)")]
    SingularSystem,
    #[error("fitted squared radius is not positive")]
    NegativeRadicand,
    #[error("sensor lies inside the fitted circle")]
    OutsideDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleFit<T> {
    /// Center x.
    pub a: T,
    /// Center y.
    pub b: T,
    pub r: T,
    /// Sum of squared algebraic residuals, m⁴.
    pub s: T,
    /// Coefficient of variation `sqrt(s / (N r⁴))`.
    pub cv: T,
}

impl<T: Scalar> CircleFit<T> {
    pub fn center(&self) -> Point2<T> {
        Point2::new(self.a, self.b)
    }
}

/// Sum over points of `((x−a)² + (y−b)² − r²)²`.
pub fn residual_sum<T: Scalar>(points: &[Point2<T>], a: T, b: T, r: T) -> T {
    points.iter().fold(T::zero(), |acc, p| {
        let e = (p.x - a).powi(2) + (p.y - b).powi(2) - r * r;
        acc + e * e
    })
}

/// Solves `m · x = rhs` by Gaussian elimination with partial pivoting.
///
/// Rejects the system when a pivot falls below `tol` times the largest
/// entry of `m`.
fn solve3<T: Scalar>(mut m: [[T; 3]; 3], mut rhs: [T; 3], tol: T) -> Option<[T; 3]> {
    let scale = m.iter().flatten().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return None;
    }
    let threshold = tol * scale;
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if !(m[pivot_row][col].abs() >= threshold) {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] = m[row][k] - f * m[col][k];
            }
            rhs[row] = rhs[row] - f * rhs[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in row + 1..3 {
            acc = acc - m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

fn singular_tolerance<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(8.0))
}

/// Least-squares circle through `points`.
///
/// Solves the 3×3 normal equations for `x² + y² + A·x + B·y + C = 0`, which
/// minimizes the algebraic residual sum over center and radius. Points are
/// shifted to their centroid before the sums are formed; the answer is the
/// same, but the matrix is far better conditioned for trunks seen from a
/// distance.
pub fn fit_circle<T: Scalar>(points: &[Point2<T>]) -> Result<CircleFit<T>, FitError> {
    let n = points.len();
    if n < 3 {
        return Err(FitError::TooFewPoints(n));
    }
    let nf = T::from_count(n);
    let centroid = points.iter().fold(Point2::origin(), |acc: Point2<T>, p| acc + *p) * nf.recip();

    let zero = T::zero();
    let (mut sxx, mut sxy, mut syy, mut sx, mut sy) = (zero, zero, zero, zero, zero);
    let (mut sxz, mut syz, mut sz) = (zero, zero, zero);
    for p in points {
        let (x, y) = (p.x - centroid.x, p.y - centroid.y);
        let z = x * x + y * y;
        sxx = sxx + x * x;
        sxy = sxy + x * y;
        syy = syy + y * y;
        sx = sx + x;
        sy = sy + y;
        sxz = sxz + x * z;
        syz = syz + y * z;
        sz = sz + z;
    }
    let m = [[sxx, sxy, sx], [sxy, syy, sy], [sx, sy, nf]];
    let rhs = [-sxz, -syz, -sz];
    let [big_a, big_b, big_c] = solve3(m, rhs, singular_tolerance()).ok_or(FitError::SingularSystem)?;

    let a_local = -big_a / T::lit(2.0);
    let b_local = -big_b / T::lit(2.0);
    let radicand = a_local * a_local + b_local * b_local - big_c;
    if !(radicand > zero) {
        return Err(FitError::NegativeRadicand);
    }
    let r = radicand.sqrt();
    let a = a_local + centroid.x;
    let b = b_local + centroid.y;
    let s = residual_sum(points, a, b, r);
    let cv = (s / (nf * r.powi(4))).sqrt();
    Ok(CircleFit { a, b, r, s, cv })
}

/// Observed and expected angular width of a cluster.
///
/// `theta1 = N · angle_step`; `theta2 = 2 · asin(r / d)` with `d` the range
/// to the fitted center.
pub fn view_angles<T: Scalar>(
    cluster: &PointCluster<T>,
    fit: &CircleFit<T>,
    angle_step: T,
) -> Result<(T, T), FitError> {
    view_angles_for_count(cluster.count(), fit, angle_step)
}

pub fn view_angles_for_count<T: Scalar>(count: usize, fit: &CircleFit<T>, angle_step: T) -> Result<(T, T), FitError> {
    let d = fit.center().norm();
    if !(d > fit.r) {
        return Err(FitError::OutsideDomain);
    }
    let theta1 = T::from_count(count) * angle_step;
    let theta2 = T::lit(2.0) * (fit.r / d).asin();
    Ok((theta1, theta2))
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid discrimination parameters: {0}")]
pub struct DiscriminationParamsError(pub &'static str);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationParams<T> {
    pub thre_cv: T,
    pub thre_theta_view: T,
    pub r_min: T,
    pub r_max: T,
}

impl<T: Scalar> DiscriminationParams<T> {
    pub fn new(thre_cv: T, thre_theta_view: T, r_min: T, r_max: T) -> Result<Self, DiscriminationParamsError> {
        let p = Self {
            thre_cv,
            thre_theta_view,
            r_min,
            r_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DiscriminationParamsError> {
        let zero = T::zero();
        if !(self.thre_cv > zero && self.thre_theta_view > zero && self.r_min > zero) {
            return Err(DiscriminationParamsError("thresholds must be positive"));
        }
        if !(self.r_min < self.r_max) {
            return Err(DiscriminationParamsError("need r_min < r_max"));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for DiscriminationParams<T> {
    fn default() -> Self {
        Self {
            thre_cv: T::lit(0.05),
            thre_theta_view: T::lit(10f64.to_radians()),
            r_min: T::lit(0.05),
            r_max: T::lit(0.5),
        }
    }
}

/// Tree test: low CV, matching view angles and a plausible radius.
pub fn discriminate<T: Scalar>(fit: &CircleFit<T>, theta1: T, theta2: T, params: &DiscriminationParams<T>) -> bool {
    fit.cv < params.thre_cv
        && (theta1 - theta2).abs() < params.thre_theta_view
        && params.r_min < fit.r
        && fit.r < params.r_max
}

/// A trunk detected in one scan, sensor frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeObservation<T> {
    pub center: Point2<T>,
    pub radius: T,
    pub cv: T,
    /// `|theta1 − theta2|`
    pub view_angle_gap: T,
}

/// Runs one cluster through fit, view angles and discrimination.
pub fn classify_cluster<T: Scalar>(
    cluster: &PointCluster<T>,
    angle_step: T,
    disc: &DiscriminationParams<T>,
) -> Result<Option<TreeObservation<T>>, FitError> {
    let fit = fit_circle(&cluster.points)?;
    let (theta1, theta2) = view_angles(cluster, &fit, angle_step)?;
    Ok(discriminate(&fit, theta1, theta2, disc).then(|| TreeObservation {
        center: fit.center(),
        radius: fit.r,
        cv: fit.cv,
        view_angle_gap: (theta1 - theta2).abs(),
    }))
}

/// Full per-scan pipeline: filters, clustering, fit and discrimination.
/// Clusters whose fit fails are skipped.
pub fn detect_trees<T: Scalar>(
    scan: &LaserScan<T>,
    filt: &ScanFilterParams<T>,
    disc: &DiscriminationParams<T>,
) -> Vec<TreeObservation<T>> {
    segment(scan, filt)
        .iter()
        .filter_map(|c| classify_cluster(c, scan.angle_step(), disc).ok().flatten())
        .collect()
}
