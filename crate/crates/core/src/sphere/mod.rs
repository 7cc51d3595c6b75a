//! Unit-sphere primitives shared by every other module.
//!
//! Directions and hidden-variable values are [`UnitVector3`]s; angles between
//! them are [`Angle`]s in radians. [`grid`] holds the quasi-equal-area
//! partition used to discretize densities over the sphere.

pub mod grid;

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Neg;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|v|² - 1` for a constructed unit vector.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// A point on the unit sphere: a measurement direction or a hidden-variable value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector3 {
    c: [f64; 3],
}

impl UnitVector3 {
    pub const E1: UnitVector3 = UnitVector3 { c: [1.0, 0.0, 0.0] };
    pub const E2: UnitVector3 = UnitVector3 { c: [0.0, 1.0, 0.0] };
    pub const E3: UnitVector3 = UnitVector3 { c: [0.0, 0.0, 1.0] };

    /// Normalizes `(c1, c2, c3)`. Zero-length or non-finite input is rejected.
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let norm = (c1 * c1 + c2 * c2 + c3 * c3).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidVector(c1, c2, c3));
        }
        let v = Self {
            c: [c1 / norm, c2 / norm, c3 / norm],
        };
        debug_assert!((v.norm_sq() - 1.0).abs() <= UNIT_NORM_TOL);
        Ok(v)
    }

    /// Caller guarantees the components already have unit norm.
    pub(crate) fn from_unit(c: [f64; 3]) -> Self {
        debug_assert!(
            (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] - 1.0).abs() <= UNIT_NORM_TOL,
            "not a unit vector: {c:?}"
        );
        Self { c }
    }

    /// Direction at `angle` radians in the fixed `c1`-`c2` great circle.
    pub fn in_plane(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_unit([c, s, 0.0])
    }

    /// Same as [`UnitVector3::in_plane`] with the angle given in degrees.
    pub fn in_plane_degrees(degrees: f64) -> Self {
        Self::in_plane(degrees.to_radians())
    }

    /// Unit vector from spherical coordinates: polar angle measured from `c3`.
    pub fn from_spherical(polar: f64, azimuth: f64) -> Self {
        let (sp, cp) = polar.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Self::from_unit([sp * ca, sp * sa, cp])
    }

    pub fn components(&self) -> [f64; 3] {
        self.c
    }

    pub fn c1(&self) -> f64 {
        self.c[0]
    }

    pub fn c2(&self) -> f64 {
        self.c[1]
    }

    pub fn c3(&self) -> f64 {
        self.c[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum()
    }

    pub fn dot(&self, other: &UnitVector3) -> f64 {
        dot(*self, *other)
    }

    /// Normalized cross product, or `None` for (anti)parallel inputs.
    pub fn cross(&self, other: &UnitVector3) -> Option<UnitVector3> {
        let [a1, a2, a3] = self.c;
        let [b1, b2, b3] = other.c;
        UnitVector3::new(a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1).ok()
    }
}

impl Neg for UnitVector3 {
    type Output = UnitVector3;

    fn neg(self) -> Self::Output {
        Self {
            c: [-self.c[0], -self.c[1], -self.c[2]],
        }
    }
}

impl From<UnitVector3> for [f64; 3] {
    fn from(v: UnitVector3) -> Self {
        v.c
    }
}

impl TryFrom<[f64; 3]> for UnitVector3 {
    type Error = Error;

    fn try_from(c: [f64; 3]) -> Result<Self> {
        UnitVector3::new(c[0], c[1], c[2])
    }
}

impl fmt::Display for UnitVector3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.c[0], self.c[1], self.c[2])
    }
}

/// An angle in `[0, π]`, stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);
    pub const RIGHT: Angle = Angle(PI / 2.0);
    pub const STRAIGHT: Angle = Angle(PI);

    pub fn new(radians: f64) -> Result<Self> {
        if (0.0..=PI).contains(&radians) {
            Ok(Self(radians))
        } else {
            Err(Error::InvalidAngle(radians))
        }
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        Self::new(degrees.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> Self {
        a.0
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;

    fn try_from(radians: f64) -> Result<Self> {
        Angle::new(radians)
    }
}

pub fn dot(u: UnitVector3, v: UnitVector3) -> f64 {
    u.c[0] * v.c[0] + u.c[1] * v.c[1] + u.c[2] * v.c[2]
}

/// `arccos` of the dot product, clamped so rounding never produces NaN.
pub fn angle_between(u: UnitVector3, v: UnitVector3) -> Angle {
    Angle(dot(u, v).clamp(-1.0, 1.0).acos())
}

/// Sign with the zero convention `sign(0) = +1`.
///
/// Both `0.0` and `-0.0` map to `+1`. The zero set has measure zero under every
/// density in this crate, so the convention only matters for reproducibility.
#[inline]
pub fn sign_pm(t: f64) -> i8 {
    debug_assert!(t.is_finite(), "sign_pm of non-finite value {t}");
    if t >= 0.0 {
        1
    } else {
        -1
    }
}

/// Draws a direction with density `1/(4π)`: `c3` uniform on `[-1, 1]`, azimuth
/// uniform on `[0, 2π)`.
#[inline]
pub fn sample_uniform_sphere<R: Rng + ?Sized>(rng: &mut R) -> UnitVector3 {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let azimuth = TAU * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = azimuth.sin_cos();
    UnitVector3::from_unit([r * c, r * s, z])
}
