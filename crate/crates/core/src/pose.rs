use crate::math::{wrap_angle, Vec2};

/// 3-DoF planar rigid transform mapping pano-2 coordinates into the pano-1
/// frame: `p¹ = R(θ)·p² + t`, with `R` the counter-clockwise rotation of
/// the `(x, z)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPose {
    pub theta: f64,
    pub t: Vec2,
}

impl Default for PlanarPose {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl PlanarPose {
    pub const IDENTITY: PlanarPose = PlanarPose { theta: 0.0, t: Vec2::ZERO };

    /// `theta` is wrapped into (-π, π].
    pub fn new(theta: f64, t: Vec2) -> Self {
        Self { theta: wrap_angle(theta), t }
    }

    #[inline]
    pub fn rotate(&self, p: Vec2) -> Vec2 {
        rotate(self.theta, p)
    }

    #[inline]
    pub fn apply(&self, p: Vec2) -> Vec2 {
        self.rotate(p) + self.t
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &PlanarPose) -> PlanarPose {
        PlanarPose::new(self.theta + other.theta, self.rotate(other.t) + self.t)
    }

    pub fn inverse(&self) -> PlanarPose {
        PlanarPose::new(-self.theta, -rotate(-self.theta, self.t))
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.t.is_finite()
    }
}

#[inline]
pub fn rotate(theta: f64, p: Vec2) -> Vec2 {
    let (s, c) = libm::sincos(theta);
    Vec2::new(c * p.x - s * p.z, s * p.x + c * p.z)
}
