use crate::linalg::max_abs;
use crate::{Mat3, Vec3};

/// An element of O(3) ⋉ ℝ³ acting by `x ↦ R x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidMotion {
    pub rotation: Mat3,
    pub translation: Vec3,
    /// Sign of `det R`: `+1` for proper rotations, `-1` when a reflection is involved.
    pub det_sign: i8,
}

impl RigidMotion {
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        let det_sign = if rotation.determinant() >= 0.0 { 1 } else { -1 };
        Self { rotation, translation, det_sign }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity(), Vec3::zeros())
    }

    pub fn apply_point(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    pub fn apply_vector(&self, w: &Vec3) -> Vec3 {
        self.rotation * w
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &RigidMotion) -> RigidMotion {
        RigidMotion::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    /// Inverse assuming `rotation` is orthogonal.
    pub fn inverse(&self) -> RigidMotion {
        let rt = self.rotation.transpose();
        RigidMotion::new(rt, -(rt * self.translation))
    }

    /// `max |RᵀR − I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        max_abs(&(self.rotation.transpose() * self.rotation - Mat3::identity()))
    }

    /// `|det R − det_sign|`.
    pub fn determinant_defect(&self) -> f64 {
        (self.rotation.determinant() - f64::from(self.det_sign)).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_with_inverse_is_identity() {
        let r = nalgebra::Rotation3::from_euler_angles(0.1, 0.4, -0.7).into_inner();
        let m = RigidMotion::new(r, Vec3::new(1.0, -2.0, 0.5));
        let id = m.compose(&m.inverse());
        assert!(max_abs(&(id.rotation - Mat3::identity())) < 1e-15);
        assert!(id.translation.norm() < 1e-15);
        let x = Vec3::new(0.3, 0.2, 0.1);
        assert!((m.inverse().apply_point(&m.apply_point(&x)) - x).norm() < 1e-15);
        assert_eq!(m.det_sign, 1);
        assert_eq!(RigidMotion::new(-r, Vec3::zeros()).det_sign, -1);
    }
}
