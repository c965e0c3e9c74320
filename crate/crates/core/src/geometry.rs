//! Planar points and angle helpers.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn from_polar(range: T, angle: T) -> Self {
        Self::new(range * angle.cos(), range * angle.sin())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    /// Polar angle in (−π, π].
    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    /// Counterclockwise rotation about the origin.
    pub fn rotate(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn cast<U: Scalar>(self) -> Point2<U> {
        Point2::new(U::lit(self.x.to_f64_lossy()), U::lit(self.y.to_f64_lossy()))
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> Neg for Point2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle<T: Scalar>(angle: T) -> T {
    let two_pi = T::TAU();
    let mut a = angle % two_pi;
    if a <= -T::PI() {
        a = a + two_pi;
    } else if a > T::PI() {
        a = a - two_pi;
    }
    a
}

/// Wraps an angle into [0, 2π).
pub fn wrap_two_pi<T: Scalar>(angle: T) -> T {
    let two_pi = T::TAU();
    let a = angle % two_pi;
    let a = if a < T::zero() { a + two_pi } else { a };
    // a + 2π can round up to exactly 2π for tiny negative inputs
    if a >= two_pi {
        T::zero()
    } else {
        a
    }
}

/// Interior angle at `vertex` of the triangle (`a`, `vertex`, `b`), in [0, π].
///
/// `None` when either side has zero length.
pub fn vertex_angle<T: Scalar>(a: Point2<T>, vertex: Point2<T>, b: Point2<T>) -> Option<T> {
    let u = a - vertex;
    let v = b - vertex;
    if u.norm() == T::zero() || v.norm() == T::zero() {
        return None;
    }
    Some(u.cross(v).abs().atan2(u.dot(v)))
}
