//! Ivory's theorem and the static identities behind the Ivory rigid motion.
//!
//! A [`PointPair`] holds two parameter points `p0, p1` of the `z = 0` member
//! and their Ivory images on the `z` member. The segments
//! `V01 = x_z(p1) − x_0(p0)` and `V10 = x_z(p0) − x_0(p1)` have equal length,
//! and together with the rulings through the four points they span congruent
//! frames. [`build_ivory_motion`] returns the rigid motion realizing that
//! congruence.

use crate::confocal::{ConfocalFamily, ParamPoint, RulingFamily};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, max_abs, reflection, rel};
use crate::motion::RigidMotion;
use crate::{Mat3, Vec3};

/// Frames with a larger condition number are rejected.
pub const FRAME_CONDITION_LIMIT: f64 = 1e8;

#[derive(Clone, Copy, Debug)]
pub struct PointPair {
    pub family: ConfocalFamily,
    pub z: f64,
    pub p0: ParamPoint,
    pub p1: ParamPoint,
    /// `x_0(p0)`.
    pub x00: Vec3,
    /// `x_0(p1)`.
    pub x01: Vec3,
    /// `x_z(p0)`.
    pub xz0: Vec3,
    /// `x_z(p1)`.
    pub xz1: Vec3,
    pub v01: Vec3,
    pub v10: Vec3,
}

impl PointPair {
    pub fn new(family: &ConfocalFamily, z: f64, p0: ParamPoint, p1: ParamPoint) -> Result<Self> {
        family.spectral(z)?;
        let x00 = family.eval(0.0, p0)?.x;
        let x01 = family.eval(0.0, p1)?.x;
        let xz0 = family.ivory_map(z, &x00)?;
        let xz1 = family.ivory_map(z, &x01)?;
        Ok(Self { family: *family, z, p0, p1, x00, x01, xz0, xz1, v01: xz1 - x00, v10: xz0 - x01 })
    }

    /// Largest coordinate magnitude among the four points, plus one.
    pub fn magnitude(&self) -> f64 {
        1.0 + [self.x00, self.x01, self.xz0, self.xz1].iter().map(|x| x.amax()).fold(0.0, f64::max)
    }

    /// Unit ruling of `fam` through `p0` (`which = 0`) or `p1` on the `z = 0` member.
    pub fn ruling0(&self, which: usize, fam: RulingFamily) -> Result<Vec3> {
        let p = if which == 0 { self.p0 } else { self.p1 };
        Ok(self.family.ruling_direction(0.0, p, fam)?.normalize())
    }

    /// Scaled normal `A x + B` of the `z = 0` member at `x00` or `x01`.
    pub fn n_hat0(&self, which: usize) -> Vec3 {
        let x = if which == 0 { self.x00 } else { self.x01 };
        self.family.scaled_normal(0.0, &x)
    }
}

/// Equal length of the two segments, and agreement with the closed form
/// `|x00 + x01 − C(z)|² − 2 x00ᵀ(I + √R) x01 + z c`.
pub fn ivory_length_residual(pair: &PointPair) -> f64 {
    let f = &pair.family;
    let a = pair.v01.norm_squared();
    let b = pair.v10.norm_squared();
    let s = pair.x00 + pair.x01 - f.ivory_offset(pair.z);
    let sqrt_r = f.sqrt_r_diag(pair.z);
    let middle = s.norm_squared() - 2.0 * pair.x00.dot(&(pair.x01 + sqrt_r.component_mul(&pair.x01)))
        + pair.z * f.c_scalar();
    let scale = pair.magnitude().powi(2);
    rel(a - b, scale).max(rel(a - middle, scale)).max(rel(b - middle, scale))
}

/// `|w_z|² − |w_0|²` for the unit ruling of `fam` through `p0`.
pub fn ruling_length_residual(pair: &PointPair, fam: RulingFamily) -> Result<f64> {
    let w0 = pair.ruling0(0, fam)?;
    let wz = pair.family.ivory_ruling(pair.z, &w0);
    Ok((wz.norm_squared() - w0.norm_squared()).abs())
}

/// `|V01ᵀ w00 + V10ᵀ w_z0|` with unit rulings.
pub fn segment_ruling_angle_residual(pair: &PointPair, fam: RulingFamily) -> Result<f64> {
    let w00 = pair.ruling0(0, fam)?;
    let wz0 = pair.family.ivory_ruling(pair.z, &w00);
    Ok(rel(pair.v01.dot(&w00) + pair.v10.dot(&wz0), pair.magnitude()))
}

/// `|w00ᵀ w_z1 − w_z0ᵀ w01|` with unit rulings.
pub fn ruling_angle_residual(pair: &PointPair, fam0: RulingFamily, fam1: RulingFamily) -> Result<f64> {
    let w00 = pair.ruling0(0, fam0)?;
    let w01 = pair.ruling0(1, fam1)?;
    let wz0 = pair.family.ivory_ruling(pair.z, &w00);
    let wz1 = pair.family.ivory_ruling(pair.z, &w01);
    Ok((w00.dot(&wz1) - wz0.dot(&w01)).abs())
}

/// `|V01ᵀ N̂00 − V10ᵀ N̂01|`.
pub fn tangency_symmetry_residual(pair: &PointPair) -> f64 {
    let a = pair.v01.dot(&pair.n_hat0(0));
    let b = pair.v10.dot(&pair.n_hat0(1));
    let scale = pair.magnitude() * (1.0 + pair.n_hat0(0).amax().max(pair.n_hat0(1).amax()));
    rel(a - b, scale)
}

/// The frames `[V01 w00 w_z1]` and `[−V10 w_z0 w01]` (unit rulings).
pub fn ivory_frames(pair: &PointPair, fam0: RulingFamily, fam1: RulingFamily) -> Result<(Mat3, Mat3)> {
    let w00 = pair.ruling0(0, fam0)?;
    let w01 = pair.ruling0(1, fam1)?;
    let wz0 = pair.family.ivory_ruling(pair.z, &w00);
    let wz1 = pair.family.ivory_ruling(pair.z, &w01);
    Ok((Mat3::from_columns(&[pair.v01, w00, wz1]), Mat3::from_columns(&[-pair.v10, wz0, w01])))
}

/// Max entry of the difference of the two Gram matrices.
pub fn gram_residual(pair: &PointPair, fam0: RulingFamily, fam1: RulingFamily) -> Result<f64> {
    let (f1, f2) = ivory_frames(pair, fam0, fam1)?;
    let g1 = f1.transpose() * f1;
    let g2 = f2.transpose() * f2;
    Ok(rel(max_abs(&(g1 - g2)), max_abs(&g1)))
}

/// The orthogonal factor of a QR decomposition, with `diag R > 0`.
fn orthogonal_factor(m: &Mat3) -> Mat3 {
    let qr = m.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..3 {
        if r[(k, k)] < 0.0 {
            let c = -q.column(k);
            q.set_column(k, &c);
        }
    }
    q
}

/// The orthogonal `R` with `R [V01 w00 w_z1] = [−V10 w_z0 w01]`, and
/// `t = x_z0 − R x00`.
///
/// The two frames have equal Gram matrices, so their QR factorizations share
/// the triangular factor and `R = Q2 Q1ᵀ`. This stays accurate on nearly
/// degenerate frames, where `F2 F1⁻¹` loses digits quadratically in the
/// condition number.
///
/// When the pair coincides at `z = 0` the segment vanishes; the frame is then
/// completed by the cross product of the two rulings on both sides.
pub fn build_ivory_motion(pair: &PointPair, fam0: RulingFamily, fam1: RulingFamily) -> Result<RigidMotion> {
    let (mut f1, mut f2) = ivory_frames(pair, fam0, fam1)?;
    let tiny = 1e-12 * pair.magnitude();
    if pair.v01.norm() <= tiny && pair.v10.norm() <= tiny {
        let c1 = f1.column(1).cross(&f1.column(2));
        let c2 = f2.column(1).cross(&f2.column(2));
        f1.set_column(0, &c1);
        f2.set_column(0, &c2);
    }
    let condition = condition_number(&f1);
    if !(condition <= FRAME_CONDITION_LIMIT) {
        return Err(Error::DegenerateFrame { condition, limit: FRAME_CONDITION_LIMIT });
    }
    let rotation = orthogonal_factor(&f2) * orthogonal_factor(&f1).transpose();
    let translation = pair.xz0 - rotation * pair.x00;
    Ok(RigidMotion::new(rotation, translation))
}

/// `R S` with `S` the reflection in the tangent plane at `x00`: the motion for
/// the other partner ruling, predicted from the motion for one of them.
pub fn flipped_motion(pair: &PointPair, motion: &RigidMotion) -> RigidMotion {
    let jet_normal = pair.n_hat0(0).normalize();
    let rotation = motion.rotation * reflection(&jet_normal);
    RigidMotion::new(rotation, pair.xz0 - rotation * pair.x00)
}

/// How well `motion` maps `(x00, x_z1, w00, w_z1)` to `(x_z0, x01, w_z0, w01)`.
pub fn motion_residual(pair: &PointPair, fam0: RulingFamily, fam1: RulingFamily, motion: &RigidMotion) -> Result<f64> {
    let w00 = pair.ruling0(0, fam0)?;
    let w01 = pair.ruling0(1, fam1)?;
    let wz0 = pair.family.ivory_ruling(pair.z, &w00);
    let wz1 = pair.family.ivory_ruling(pair.z, &w01);
    let scale = pair.magnitude();
    let points = (motion.apply_point(&pair.x00) - pair.xz0)
        .norm()
        .max((motion.apply_point(&pair.xz1) - pair.x01).norm());
    let rulings = (motion.apply_vector(&w00) - wz0).norm().max((motion.apply_vector(&wz1) - w01).norm());
    Ok(rel(points, scale).max(rulings))
}
