//! Rolling a quadric patch over an isometric seed.
//!
//! At every node the rotation is fixed by `R [x0_u x0_v N0] = [x_u x_v εN]`
//! and the translation by `t = x − R x0`, so that `dx = R dx0`. The sign `ε`
//! chooses the side on which the seed is rolled. The connection form
//! `ω0 = N0 × (R⁻¹ dR N0) = P du + Q dv` is tangential, and satisfies
//!
//! ```text
//! Q_u − P_v + P × Q = 0,      P × x0_v − Q × x0_u = 0.
//! ```

use serde::{Deserialize, Serialize};

use crate::confocal::{ConfocalFamily, JetPoint, ParamPoint};
use crate::error::{Error, Result};
use crate::linalg::{axial, max_abs, rel, skew};
use crate::motion::RigidMotion;
use crate::{Mat3, Vec3};

/// Default limit for [`connection_form`]'s reconstruction error.
pub const DEFAULT_RECONSTRUCTION_LIMIT: f64 = 1e-4;
/// First-form mismatch above which two patches are not isometric.
pub const ISOMETRY_LIMIT: f64 = 1e-6;
/// Smallest accepted `|x_u × x_v|`.
pub const IMMERSION_LIMIT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub nu: usize,
    pub nv: usize,
}

impl Grid2D {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64, nu: usize, nv: usize) -> Result<Self> {
        if nu < 3 || nv < 3 {
            return Err(Error::Config(format!("grid needs at least 3×3 nodes (got {nu}×{nv})")));
        }
        if !(u_max > u_min && v_max > v_min) || ![u_min, u_max, v_min, v_max].iter().all(|t| t.is_finite()) {
            return Err(Error::Config("grid ranges must be finite and increasing".into()));
        }
        Ok(Self { u_min, u_max, v_min, v_max, nu, nv })
    }

    /// Same box with the spacing halved.
    pub fn refined(&self) -> Self {
        Self { nu: 2 * self.nu - 1, nv: 2 * self.nv - 1, ..*self }
    }

    pub fn h_u(&self) -> f64 {
        (self.u_max - self.u_min) / (self.nu - 1) as f64
    }

    pub fn h_v(&self) -> f64 {
        (self.v_max - self.v_min) / (self.nv - 1) as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.h_u()
    }

    pub fn v(&self, j: usize) -> f64 {
        self.v_min + j as f64 * self.h_v()
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major in `u`: node `(i, j)` is stored at `i * nv + j`.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nu).flat_map(move |i| (0..self.nv).map(move |j| (i, j)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Quadric,
    Rigid,
    Bent,
    Leaf,
}

#[derive(Clone, Debug)]
pub struct SurfacePatch {
    pub grid: Grid2D,
    pub jets: Vec<JetPoint>,
    pub provenance: Provenance,
}

impl SurfacePatch {
    pub fn new(grid: Grid2D, jets: Vec<JetPoint>, provenance: Provenance) -> Result<Self> {
        if jets.len() != grid.len() {
            return Err(Error::Config(format!("{} jets for {} grid nodes", jets.len(), grid.len())));
        }
        for (node, j) in jets.iter().enumerate() {
            let norm = j.x_u.cross(&j.x_v).norm();
            if !(norm >= IMMERSION_LIMIT) {
                return Err(Error::Immersion { node, norm });
            }
        }
        Ok(Self { grid, jets, provenance })
    }

    /// The `z` member of `family` sampled on `grid`.
    pub fn quadric(family: &ConfocalFamily, z: f64, grid: Grid2D) -> Result<Self> {
        let jets = grid
            .nodes()
            .map(|(i, j)| family.eval(z, ParamPoint::new(grid.u(i), grid.v(j))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, jets, Provenance::Quadric)
    }

    /// `motion` applied to every jet.
    pub fn moved(&self, motion: &RigidMotion) -> Self {
        let jets = self
            .jets
            .iter()
            .map(|j| {
                let r = |a: &Vec3| motion.apply_vector(a);
                let mut out = JetPoint::from_partials(
                    motion.apply_point(&j.x),
                    r(&j.x_u),
                    r(&j.x_v),
                    r(&j.x_uu),
                    r(&j.x_uv),
                    r(&j.x_vv),
                );
                out.n_hat = r(&j.n_hat);
                out
            })
            .collect();
        Self { grid: self.grid, jets, provenance: Provenance::Rigid }
    }

    pub fn jet(&self, i: usize, j: usize) -> &JetPoint {
        &self.jets[self.grid.idx(i, j)]
    }
}

/// Max over nodes and coefficients of the first-form difference, relative to
/// the size of the forms.
pub fn first_form_mismatch(a: &SurfacePatch, b: &SurfacePatch) -> (f64, usize) {
    let mut worst = (0.0, 0);
    for (node, (ja, jb)) in a.jets.iter().zip(&b.jets).enumerate() {
        let (fa, fb) = (ja.first_form(), jb.first_form());
        let scale = fa.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = (0..3).map(|k| rel(fa[k] - fb[k], scale)).fold(0.0, f64::max);
        if err > worst.0 {
            worst = (err, node);
        }
    }
    worst
}

#[derive(Clone, Debug)]
pub struct RollingField {
    pub grid: Grid2D,
    pub motions: Vec<RigidMotion>,
    pub epsilon: i8,
}

impl RollingField {
    pub fn motion(&self, i: usize, j: usize) -> &RigidMotion {
        &self.motions[self.grid.idx(i, j)]
    }

    /// `max |x_a − R x0_a|` over nodes and both directions, relative.
    pub fn differential_residual(&self, quadric: &SurfacePatch, seed: &SurfacePatch) -> f64 {
        let mut worst = 0.0f64;
        for ((m, q), s) in self.motions.iter().zip(&quadric.jets).zip(&seed.jets) {
            let scale = q.x_u.norm().max(q.x_v.norm());
            worst = worst
                .max(rel((s.x_u - m.rotation * q.x_u).norm(), scale))
                .max(rel((s.x_v - m.rotation * q.x_v).norm(), scale));
        }
        worst
    }

    /// `max |N − det(R) R N0|`.
    pub fn normal_residual(&self, quadric: &SurfacePatch, seed: &SurfacePatch) -> f64 {
        self.motions
            .iter()
            .zip(&quadric.jets)
            .zip(&seed.jets)
            .map(|((m, q), s)| (s.n - m.rotation.determinant().signum() * (m.rotation * q.n)).norm())
            .fold(0.0, f64::max)
    }
}

/// Rotation carrying the quadric frame to the seed frame at one node.
pub fn rolling_motion(quadric: &JetPoint, seed: &JetPoint, epsilon: i8) -> Result<RigidMotion> {
    let eps = f64::from(epsilon.signum());
    let target = Mat3::from_columns(&[seed.x_u, seed.x_v, eps * seed.n]);
    let frame = Mat3::from_columns(&[quadric.x_u, quadric.x_v, quadric.n]);
    let inv = frame
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular quadric frame".into()))?;
    let rotation = target * inv;
    Ok(RigidMotion::new(rotation, seed.x - rotation * quadric.x))
}

pub fn rolling_field(quadric: &SurfacePatch, seed: &SurfacePatch, epsilon: i8) -> Result<RollingField> {
    if quadric.grid != seed.grid {
        return Err(Error::Config("quadric and seed patches live on different grids".into()));
    }
    if epsilon != 1 && epsilon != -1 {
        return Err(Error::Config(format!("epsilon must be ±1 (got {epsilon})")));
    }
    let (mismatch, node) = first_form_mismatch(quadric, seed);
    if mismatch > ISOMETRY_LIMIT {
        return Err(Error::NotIsometric { mismatch, node });
    }
    let motions = quadric
        .jets
        .iter()
        .zip(&seed.jets)
        .map(|(q, s)| rolling_motion(q, s, epsilon))
        .collect::<Result<Vec<_>>>()?;
    Ok(RollingField { grid: quadric.grid, motions, epsilon })
}

/// `ω0 = P du0 + Q dv0` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionForm {
    pub grid: Grid2D,
    pub p: Vec<Vec3>,
    pub q: Vec<Vec3>,
}

impl ConnectionForm {
    pub fn zero(grid: Grid2D) -> Self {
        Self { grid, p: vec![Vec3::zeros(); grid.len()], q: vec![Vec3::zeros(); grid.len()] }
    }

    pub fn sample(grid: Grid2D, connection: &dyn Connection) -> Result<Self> {
        let mut p = Vec::with_capacity(grid.len());
        let mut q = Vec::with_capacity(grid.len());
        for (i, j) in grid.nodes() {
            let (a, b) = connection.omega(grid.u(i), grid.v(j))?;
            p.push(a);
            q.push(b);
        }
        Ok(Self { grid, p, q })
    }

    /// Largest normal component `|N0ᵀP|, |N0ᵀQ|`.
    pub fn normal_component(&self, quadric: &SurfacePatch) -> f64 {
        self.p
            .iter()
            .zip(&self.q)
            .zip(&quadric.jets)
            .map(|((p, q), j)| j.n.dot(p).abs().max(j.n.dot(q).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.p.iter().chain(&self.q).map(|w| w.norm()).fold(0.0, f64::max)
    }
}

/// Second-order difference quotient along one axis, one-sided at the ends.
fn derivative<T>(values: &[T], k: usize, h: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = values.len();
    if k == 0 {
        (values[1] * 4.0 - values[0] * 3.0 - values[2]) * (0.5 / h)
    } else if k == n - 1 {
        (values[n - 1] * 3.0 - values[n - 2] * 4.0 + values[n - 3]) * (0.5 / h)
    } else {
        (values[k + 1] - values[k - 1]) * (0.5 / h)
    }
}

/// Finite-difference connection form and its reconstruction error
/// `max |R⁻¹ ∂R − [ω]×|`, relative to `max |ω|`.
pub fn connection_form_with_error(field: &RollingField, quadric: &SurfacePatch) -> (ConnectionForm, f64) {
    let g = field.grid;
    let mut p = vec![Vec3::zeros(); g.len()];
    let mut q = vec![Vec3::zeros(); g.len()];
    let mut err = 0.0f64;
    let mut size = 0.0f64;
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        let row: Vec<Mat3> = (0..g.nu).map(|ii| field.motion(ii, j).rotation).collect();
        let col: Vec<Mat3> = (0..g.nv).map(|jj| field.motion(i, jj).rotation).collect();
        let r = field.motions[k].rotation;
        let r_inv = r.try_inverse().unwrap_or_else(|| r.transpose());
        let n0 = quadric.jets[k].n;
        for (d, out) in [(derivative(&row, i, g.h_u()), &mut p[k]), (derivative(&col, j, g.h_v()), &mut q[k])] {
            let lie = r_inv * d;
            let w = n0.cross(&(lie * n0));
            err = err.max(max_abs(&(lie - skew(&w))));
            size = size.max(w.norm());
            *out = w;
        }
    }
    (ConnectionForm { grid: g, p, q }, rel(err, size))
}

pub fn connection_form(field: &RollingField, quadric: &SurfacePatch) -> Result<ConnectionForm> {
    connection_form_checked(field, quadric, DEFAULT_RECONSTRUCTION_LIMIT)
}

pub fn connection_form_checked(field: &RollingField, quadric: &SurfacePatch, limit: f64) -> Result<ConnectionForm> {
    let (form, error) = connection_form_with_error(field, quadric);
    if error > limit {
        return Err(Error::GridTooCoarse { error, limit });
    }
    Ok(form)
}

/// Axial vector of `R⁻¹ ∂R` without projecting to the tangent plane.
pub fn lie_axial(r: &Mat3, dr: &Mat3) -> Vec3 {
    axial(&(r.transpose() * dr))
}

/// Cell-wise residuals of the two structure equations, max over cells.
///
/// `d∧ω` is the corner-averaged circulation around each cell divided by its
/// area; the algebraic terms are averaged over the four corners.
pub fn flatness_residual(omega: &ConnectionForm, quadric: &SurfacePatch) -> (f64, f64) {
    let g = omega.grid;
    let (hu, hv) = (g.h_u(), g.h_v());
    let mut curvature = 0.0f64;
    let mut torsion = 0.0f64;
    for i in 0..g.nu - 1 {
        for j in 0..g.nv - 1 {
            let c = [g.idx(i, j), g.idx(i + 1, j), g.idx(i + 1, j + 1), g.idx(i, j + 1)];
            let circulation = 0.5 * hu * (omega.p[c[0]] + omega.p[c[1]]) + 0.5 * hv * (omega.q[c[1]] + omega.q[c[2]])
                - 0.5 * hu * (omega.p[c[2]] + omega.p[c[3]])
                - 0.5 * hv * (omega.q[c[3]] + omega.q[c[0]]);
            let mut pq = Vec3::zeros();
            let mut wedge = Vec3::zeros();
            for &k in &c {
                let jet = &quadric.jets[k];
                pq += omega.p[k].cross(&omega.q[k]);
                wedge += omega.p[k].cross(&jet.x_v) - omega.q[k].cross(&jet.x_u);
            }
            curvature = curvature.max((circulation / (hu * hv) + 0.25 * pq).norm());
            torsion = torsion.max((0.25 * wedge).norm());
        }
    }
    (curvature, torsion)
}

/// `du∧dv` coefficients of `aᵀω ∧ bᵀω` and `½ (a×b)ᵀ ω×∧ω` for `ω = P du + Q dv`.
pub fn wedge_sides(a: &Vec3, b: &Vec3, p: &Vec3, q: &Vec3) -> (f64, f64) {
    (a.dot(p) * b.dot(q) - a.dot(q) * b.dot(p), a.cross(b).dot(&p.cross(q)))
}

pub fn wedge_identity_residual(a: &Vec3, b: &Vec3, p: &Vec3, q: &Vec3) -> f64 {
    let (l, r) = wedge_sides(a, b, p, q);
    rel(l - r, a.norm() * b.norm() * p.norm() * q.norm())
}

/// An analytic (or interpolated) connection form, evaluable off the grid.
pub trait Connection: Send + Sync {
    /// `(P, Q)` at `(u0, v0)`.
    fn omega(&self, u: f64, v: f64) -> Result<(Vec3, Vec3)>;

    /// `true` when `ω ≡ 0`.
    fn is_zero(&self) -> bool {
        false
    }
}

/// The connection of a rigid (or trivial) seed.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroConnection;

impl Connection for ZeroConnection {
    fn omega(&self, _u: f64, _v: f64) -> Result<(Vec3, Vec3)> {
        Ok((Vec3::zeros(), Vec3::zeros()))
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `(N_u, N_v)` of the unit normal, from the jet.
pub fn normal_derivatives(jet: &JetPoint) -> (Vec3, Vec3) {
    let c = jet.x_u.cross(&jet.x_v);
    let norm = c.norm();
    let n = c / norm;
    let d = |dc: Vec3| (dc - n * n.dot(&dc)) / norm;
    (
        d(jet.x_uu.cross(&jet.x_v) + jet.x_u.cross(&jet.x_uv)),
        d(jet.x_uv.cross(&jet.x_v) + jet.x_u.cross(&jet.x_vv)),
    )
}

/// Connection after flipping the rolling side: with `R' = R (I − 2 N0 N0ᵀ)`
/// the tangential form becomes `ω' = −ω + 2 dN0 × N0`.
pub struct Reflected<C> {
    pub inner: C,
    pub family: ConfocalFamily,
}

impl<C: Connection> Connection for Reflected<C> {
    fn omega(&self, u: f64, v: f64) -> Result<(Vec3, Vec3)> {
        let (p, q) = self.inner.omega(u, v)?;
        let jet = self.family.eval(0.0, ParamPoint::new(u, v))?;
        let (nu, nv) = normal_derivatives(&jet);
        Ok((-p + 2.0 * nu.cross(&jet.n), -q + 2.0 * nv.cross(&jet.n)))
    }
}

/// Piecewise-cubic interpolation of a sampled connection form.
pub struct GridConnection {
    pub form: ConnectionForm,
}

/// Cubic Lagrange weights on four consecutive nodes starting at `start`.
fn cubic_stencil(t: f64, n: usize) -> (usize, [f64; 4]) {
    let start = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let s = t - start as f64;
    let nodes = [0.0, 1.0, 2.0, 3.0];
    let mut w = [0.0; 4];
    for (k, wk) in w.iter_mut().enumerate() {
        *wk = nodes
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != k)
            .map(|(_, &xm)| (s - xm) / (nodes[k] - xm))
            .product();
    }
    (start, w)
}

impl Connection for GridConnection {
    fn omega(&self, u: f64, v: f64) -> Result<(Vec3, Vec3)> {
        let g = self.form.grid;
        if g.nu < 4 || g.nv < 4 {
            return Err(Error::Config("cubic interpolation needs at least 4×4 nodes".into()));
        }
        let tu = (u - g.u_min) / g.h_u();
        let tv = (v - g.v_min) / g.h_v();
        let slack = 1e-9;
        if tu < -slack || tv < -slack || tu > (g.nu - 1) as f64 + slack || tv > (g.nv - 1) as f64 + slack {
            return Err(Error::Domain(format!("({u}, {v}) outside the connection grid")));
        }
        let (iu, wu) = cubic_stencil(tu, g.nu);
        let (iv, wv) = cubic_stencil(tv, g.nv);
        let mut p = Vec3::zeros();
        let mut q = Vec3::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let k = g.idx(iu + a, iv + b);
                let w = wu[a] * wv[b];
                p += w * self.form.p[k];
                q += w * self.form.q[k];
            }
        }
        Ok((p, q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::Rng;

    fn hyp() -> ConfocalFamily {
        ConfocalFamily::hyperboloid(4.0, -1.0, 1.0).unwrap()
    }

    fn grid() -> Grid2D {
        Grid2D::new(0.8, 1.6, -0.6, 0.2, 9, 9).unwrap()
    }

    #[test]
    fn seed_equal_to_quadric_rolls_trivially() {
        let q = SurfacePatch::quadric(&hyp(), 0.0, grid()).unwrap();
        let field = rolling_field(&q, &q, 1).unwrap();
        for m in &field.motions {
            assert!(max_abs(&(m.rotation - Mat3::identity())) < 1e-12);
            assert!(m.translation.norm() < 1e-12);
        }
        let w = connection_form(&field, &q).unwrap();
        assert!(w.max_norm() < 1e-10);
    }

    #[test]
    fn rigid_seed_gives_constant_field() {
        let q = SurfacePatch::quadric(&hyp(), 0.0, grid()).unwrap();
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.7, 1.1).into_inner();
        let motion = RigidMotion::new(rot, Vec3::new(1.0, -2.0, 0.5));
        let seed = q.moved(&motion);
        let field = rolling_field(&q, &seed, 1).unwrap();
        for m in &field.motions {
            assert!(max_abs(&(m.rotation - rot)) < 1e-12);
            assert!((m.translation - motion.translation).norm() < 1e-12);
        }
        assert!(field.differential_residual(&q, &seed) < 1e-12);
        assert!(field.normal_residual(&q, &seed) < 1e-12);
        let (w, err) = connection_form_with_error(&field, &q);
        assert!(w.max_norm() < 1e-10 && err < 1e-10);
        assert_eq!(flatness_residual(&ConnectionForm::zero(q.grid), &q), (0.0, 0.0));
    }

    #[test]
    fn non_isometric_seed_is_rejected() {
        let q = SurfacePatch::quadric(&hyp(), 0.0, grid()).unwrap();
        let other = SurfacePatch::quadric(&hyp(), 0.5, grid()).unwrap();
        assert!(matches!(rolling_field(&q, &other, 1), Err(Error::NotIsometric { .. })));
        assert!(Grid2D::new(0.0, 1.0, 0.0, 1.0, 2, 5).is_err());
    }

    #[test]
    fn corrupted_connection_breaks_torsion_equation() {
        let q = SurfacePatch::quadric(&hyp(), 0.0, grid()).unwrap();
        let mut w = ConnectionForm::zero(q.grid);
        for p in &mut w.p {
            *p += Vec3::new(0.3, -0.2, 0.1);
        }
        let (_, torsion) = flatness_residual(&w, &q);
        assert!(torsion >= 1e-2);
    }

    #[test]
    fn wedge_examples() {
        let (l, r) = wedge_sides(&Vec3::x(), &Vec3::y(), &Vec3::x(), &Vec3::y());
        assert_eq!((l, r), (1.0, 1.0));
        let a = Vec3::new(0.3, 1.0, -2.0);
        assert_eq!(wedge_sides(&a, &a, &Vec3::x(), &Vec3::z()), (0.0, 0.0));
        let mut rng = sampling::rng(2);
        for _ in 0..1000 {
            let mut v = || Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let (a, b, p, q) = (v(), v(), v(), v());
            assert!(wedge_identity_residual(&a, &b, &p, &q) <= 1e-13);
        }
    }

    #[test]
    fn normal_derivatives_match_differences() {
        let f = hyp();
        let jet = f.eval(0.0, ParamPoint::new(1.2, -0.3)).unwrap();
        let (nu, nv) = normal_derivatives(&jet);
        let h = 1e-5;
        let n = |u: f64, v: f64| f.eval(0.0, ParamPoint::new(u, v)).unwrap().n;
        assert!((nu - (n(1.2 + h, -0.3) - n(1.2 - h, -0.3)) / (2.0 * h)).norm() < 1e-8);
        assert!((nv - (n(1.2, -0.3 + h) - n(1.2, -0.3 - h)) / (2.0 * h)).norm() < 1e-8);
    }

    #[test]
    fn grid_connection_reproduces_cubics() {
        let g = Grid2D::new(0.0, 1.0, -1.0, 1.0, 6, 7).unwrap();
        let poly = |u: f64, v: f64| Vec3::new(u * u * u - v, u * v * v, 2.0 + v * v * v);
        let mut form = ConnectionForm::zero(g);
        for (i, j) in g.nodes() {
            let k = g.idx(i, j);
            form.p[k] = poly(g.u(i), g.v(j));
            form.q[k] = -poly(g.u(i), g.v(j));
        }
        let c = GridConnection { form };
        let (p, q) = c.omega(0.37, 0.41).unwrap();
        assert!((p - poly(0.37, 0.41)).norm() < 1e-12);
        assert!((q + poly(0.37, 0.41)).norm() < 1e-12);
        assert!(c.omega(1.5, 0.0).is_err());
    }
}
