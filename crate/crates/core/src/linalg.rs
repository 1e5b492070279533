//! Small dense helpers on top of nalgebra.

use crate::{Mat3, Vec3};

/// Residual scaled by `scale`, but never amplified: scales below one are
/// treated as one.
pub fn rel(num: f64, scale: f64) -> f64 {
    num.abs() / scale.abs().max(1.0)
}

/// Ratio with a zero numerator mapped to zero (so `0/0` is a pass).
pub fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num.abs() / den.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Axial vector of the skew-symmetric part of `m`.
pub fn axial(m: &Mat3) -> Vec3 {
    0.5 * Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)])
}

/// Reflection in the plane through the origin with normal `n`.
pub fn reflection(n: &Vec3) -> Mat3 {
    let n2 = n.norm_squared();
    Mat3::identity() - (2.0 / n2) * n * n.transpose()
}

/// Closest orthogonal matrix in the Frobenius norm.
pub fn polar(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    u * v_t
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number(m: &Mat3) -> f64 {
    let s = m.singular_values();
    let (mx, mn) = (s.max(), s.min());
    if mn == 0.0 {
        f64::INFINITY
    } else {
        mx / mn
    }
}

pub fn max_abs(m: &Mat3) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Largest distance of `points` from their best-fit line, relative to the
/// spread of the points along it.
pub fn collinearity(points: &[Vec3]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &l)| if l > best.1 { (i, l) } else { best });
    let dir = eig.eigenvectors.column(k).into_owned();
    let mut spread = 0.0f64;
    let mut worst = 0.0f64;
    for p in points {
        let d = p - centroid;
        let along = d.dot(&dir);
        spread = spread.max(along.abs());
        worst = worst.max((d - along * dir).norm());
    }
    ratio(worst, spread.max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axial_inverts_skew() {
        let a = Vec3::new(0.3, -1.2, 2.0);
        assert!((axial(&skew(&a)) - a).norm() < 1e-15);
        let b = Vec3::new(1.0, 2.0, -0.5);
        assert!((skew(&a) * b - a.cross(&b)).norm() < 1e-15);
    }

    #[test]
    fn reflection_is_an_involution() {
        let n = Vec3::new(0.2, 0.7, -1.1);
        let s = reflection(&n);
        assert!(max_abs(&(s * s - Mat3::identity())) < 1e-14);
        assert!((s * n + n).norm() < 1e-14);
    }

    #[test]
    fn polar_recovers_rotation() {
        let r = nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 1.1).into_inner();
        let noisy = r + Mat3::from_element(1e-9);
        let p = polar(&noisy);
        assert!(max_abs(&(p.transpose() * p - Mat3::identity())) < 1e-14);
        assert!(max_abs(&(p - r)) < 1e-8);
    }

    #[test]
    fn collinear_points_have_zero_residual() {
        let pts: Vec<Vec3> = (0..10).map(|k| Vec3::new(1.0, 2.0, 3.0) + k as f64 * Vec3::new(0.5, -0.1, 0.2)).collect();
        assert!(collinearity(&pts) < 1e-14);
        let mut bent = pts.clone();
        bent[4].z += 0.1;
        assert!(collinearity(&bent) > 1e-3);
    }
}
