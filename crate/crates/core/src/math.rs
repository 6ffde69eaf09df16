//! Small numeric helpers shared by every module.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

pub const TAU: f64 = 2.0 * PI;

/// A point or vector in the horizontal XZ plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub z: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    /// Unit vector at angle `a` measured from +z toward +x.
    #[inline]
    pub fn from_heading(a: f64) -> Self {
        Self::new(libm::sin(a), libm::cos(a))
    }

    /// Heading angle in (-π, π], measured from +z toward +x.
    #[inline]
    pub fn heading(self) -> f64 {
        libm::atan2(self.x, self.z)
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.z * o.z
    }

    /// z-component of the 3D cross product with (x, z) read as (x, y).
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.z - self.z * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.z)
    }

    /// Rotated by +90° counter-clockwise in the (x, z) plane.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.z, self.x)
    }

    #[inline]
    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.z + o.z)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.z += o.z;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.z - o.z)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.z * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.z)
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = libm::remainder(a, TAU);
    if w <= -PI {
        w += TAU;
    }
    w
}

/// Wraps a value into [0, 1).
pub fn wrap_unit(x: f64) -> f64 {
    let w = x - libm::floor(x);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Signed cyclic difference `a - b` on the unit circle, in [-0.5, 0.5).
pub fn cyclic_diff(a: f64, b: f64) -> f64 {
    wrap_unit(a - b + 0.5) - 0.5
}

/// Median of a slice; the mean of the two central values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Child seed for `(seed, index)`; a SplitMix64 finalizer over both words.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Cyclic linear interpolation of `values` at fractional index `pos`.
pub(crate) fn cyclic_lerp(values: &[f64], pos: f64) -> f64 {
    let n = values.len();
    let p = wrap_unit(pos / n as f64) * n as f64;
    let k = libm::floor(p) as usize % n;
    let f = p - libm::floor(p);
    let a = values[k];
    let b = values[(k + 1) % n];
    a + (b - a) * f
}
