//! Confocal families of real doubly ruled quadrics.
//!
//! Two families are supported, both parametrized by their rulings:
//!
//! * the one-sheeted hyperboloid
//!   `x_z(u,v) = (√(a1−z)(1−uv), √(z−a2)(1+uv), √(a3−z)(u+v)) / (u−v)`,
//! * the hyperbolic paraboloid
//!   `x_z(u,v) = (√(a1−z)(u+v), √(z−a2)(u−v), 2uv + z/2)`.
//!
//! Along `v = const` the point moves on a straight line (a ruling of the
//! "u-family"), and symmetrically for `u = const`. The Ivory affinity
//! `x_z = √R_z x_0 + C(z)` with `R_z = I − zA` relates members of a family
//! point by point; all partial derivatives below are closed form.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// Guard on `|u − v|` for the finite hyperboloid chart.
pub const DEFAULT_EPS_DOM: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadricKind {
    #[serde(alias = "hyperboloid")]
    HyperboloidOneSheet,
    #[serde(alias = "paraboloid")]
    HyperbolicParaboloid,
}

/// Which ruling family: `U` is the line swept by `u` at fixed `v`
/// (tangent `x_u`), `V` the line swept by `v` at fixed `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RulingFamily {
    U,
    V,
}

impl RulingFamily {
    pub fn other(self) -> Self {
        match self {
            RulingFamily::U => RulingFamily::V,
            RulingFamily::V => RulingFamily::U,
        }
    }
}

/// A point of the parameter domain. The hyperboloid also admits the limit
/// `u → ∞`, handled in the chart `û = 1/u` at `û = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamPoint {
    Finite { u: f64, v: f64 },
    UInfinity { v: f64 },
}

impl ParamPoint {
    pub fn new(u: f64, v: f64) -> Self {
        ParamPoint::Finite { u, v }
    }
}

/// Spectral parameter validated against a family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParam(f64);

impl SpectralParam {
    pub fn value(self) -> f64 {
        self.0
    }

    /// `z = 0` is the identity member of the family.
    pub fn is_trivial(self) -> bool {
        self.0 == 0.0
    }
}

/// Second-order jet of a parametrized surface at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JetPoint {
    pub x: Vec3,
    pub x_u: Vec3,
    pub x_v: Vec3,
    pub x_uu: Vec3,
    pub x_uv: Vec3,
    pub x_vv: Vec3,
    /// Unit normal `x_u × x_v / |x_u × x_v|`.
    pub n: Vec3,
    /// Scaled normal. For quadric jets this is `−2 ∂_z x_z`; for other
    /// surfaces it equals `n`.
    pub n_hat: Vec3,
}

impl JetPoint {
    /// Jet of a generic surface: the unit normal is derived from the tangents.
    pub fn from_partials(x: Vec3, x_u: Vec3, x_v: Vec3, x_uu: Vec3, x_uv: Vec3, x_vv: Vec3) -> Self {
        let n = x_u.cross(&x_v).normalize();
        Self { x, x_u, x_v, x_uu, x_uv, x_vv, n, n_hat: n }
    }

    /// `(E, F, G)`.
    pub fn first_form(&self) -> [f64; 3] {
        [self.x_u.dot(&self.x_u), self.x_u.dot(&self.x_v), self.x_v.dot(&self.x_v)]
    }

    /// `(e, f, g)` with respect to `n`.
    pub fn second_form(&self) -> [f64; 3] {
        [self.n.dot(&self.x_uu), self.n.dot(&self.x_uv), self.n.dot(&self.x_vv)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfocalFamily {
    kind: QuadricKind,
    a1: f64,
    a2: f64,
    a3: f64,
    eps_dom: f64,
}

impl ConfocalFamily {
    /// One-sheeted hyperboloids; requires `a2 < 0 < a1, a3`.
    pub fn hyperboloid(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        if !(a1.is_finite() && a2.is_finite() && a3.is_finite()) {
            return Err(Error::Domain("semiaxis constants must be finite".into()));
        }
        if !(a2 < 0.0 && a1 > 0.0 && a3 > 0.0) {
            return Err(Error::Domain(format!(
                "hyperboloid needs a2 < 0 < a1, a3 (got a1={a1}, a2={a2}, a3={a3})"
            )));
        }
        Ok(Self { kind: QuadricKind::HyperboloidOneSheet, a1, a2, a3, eps_dom: DEFAULT_EPS_DOM })
    }

    /// Hyperbolic paraboloids; requires `a2 < 0 < a1`.
    pub fn paraboloid(a1: f64, a2: f64) -> Result<Self> {
        if !(a1.is_finite() && a2.is_finite()) {
            return Err(Error::Domain("semiaxis constants must be finite".into()));
        }
        if !(a2 < 0.0 && a1 > 0.0) {
            return Err(Error::Domain(format!("paraboloid needs a2 < 0 < a1 (got a1={a1}, a2={a2})")));
        }
        Ok(Self { kind: QuadricKind::HyperbolicParaboloid, a1, a2, a3: 0.0, eps_dom: DEFAULT_EPS_DOM })
    }

    pub fn with_domain_guard(mut self, eps_dom: f64) -> Self {
        self.eps_dom = eps_dom;
        self
    }

    pub fn kind(&self) -> QuadricKind {
        self.kind
    }

    pub fn is_hyperboloid(&self) -> bool {
        self.kind == QuadricKind::HyperboloidOneSheet
    }

    /// `(a1, a2, a3)`; `a3` is `None` for the paraboloid.
    pub fn semiaxes(&self) -> (f64, f64, Option<f64>) {
        (self.a1, self.a2, self.is_hyperboloid().then_some(self.a3))
    }

    pub fn eps_dom(&self) -> f64 {
        self.eps_dom
    }

    /// The open interval of admissible `z`.
    pub fn z_range(&self) -> (f64, f64) {
        match self.kind {
            QuadricKind::HyperboloidOneSheet => (self.a2, self.a1.min(self.a3)),
            QuadricKind::HyperbolicParaboloid => (self.a2, self.a1),
        }
    }

    pub fn spectral(&self, z: f64) -> Result<SpectralParam> {
        let (lo, hi) = self.z_range();
        if z.is_finite() && lo < z && z < hi {
            Ok(SpectralParam(z))
        } else {
            Err(Error::Domain(format!("z = {z} outside the admissible interval ({lo}, {hi})")))
        }
    }

    fn check_z(&self, z: f64) -> Result<()> {
        self.spectral(z).map(|_| ())
    }

    pub fn a_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&self.a_diag())
    }

    fn a_diag(&self) -> Vec3 {
        match self.kind {
            QuadricKind::HyperboloidOneSheet => Vec3::new(1.0 / self.a1, 1.0 / self.a2, 1.0 / self.a3),
            QuadricKind::HyperbolicParaboloid => Vec3::new(1.0 / self.a1, 1.0 / self.a2, 0.0),
        }
    }

    pub fn b_vector(&self) -> Vec3 {
        match self.kind {
            QuadricKind::HyperboloidOneSheet => Vec3::zeros(),
            QuadricKind::HyperbolicParaboloid => -Vec3::z(),
        }
    }

    pub fn c_scalar(&self) -> f64 {
        match self.kind {
            QuadricKind::HyperboloidOneSheet => -1.0,
            QuadricKind::HyperbolicParaboloid => 0.0,
        }
    }

    /// Diagonal of `R_z = I − zA`.
    pub fn r_diag(&self, z: f64) -> Vec3 {
        Vec3::repeat(1.0) - z * self.a_diag()
    }

    /// Diagonal of `√R_z`, taken entrywise.
    pub fn sqrt_r_diag(&self, z: f64) -> Vec3 {
        self.r_diag(z).map(f64::sqrt)
    }

    /// `C(z)`: zero for the hyperboloid, `(z/2) e₃` for the paraboloid.
    pub fn ivory_offset(&self, z: f64) -> Vec3 {
        match self.kind {
            QuadricKind::HyperboloidOneSheet => Vec3::zeros(),
            QuadricKind::HyperbolicParaboloid => Vec3::new(0.0, 0.0, 0.5 * z),
        }
    }

    /// `(√(a1−z), √(z−a2), √(a3−z))`; the third entry is zero for the paraboloid.
    pub(crate) fn scales(&self, z: f64) -> Vec3 {
        let k3 = if self.is_hyperboloid() { (self.a3 - z).sqrt() } else { 0.0 };
        Vec3::new((self.a1 - z).sqrt(), (z - self.a2).sqrt(), k3)
    }

    /// `−2 d/dz` of the scales: `(1/k1, −1/k2, 1/k3)`.
    fn normal_weights(&self, z: f64) -> Vec3 {
        let k = self.scales(z);
        let w3 = if self.is_hyperboloid() { 1.0 / k.z } else { 0.0 };
        Vec3::new(1.0 / k.x, -1.0 / k.y, w3)
    }

    /// Scaled ruling of `family` as a polynomial `c0 + c1 t + c2 t²` in the
    /// other parameter: `ℬ x_u` as a function of `v`, or `ℬ x_v` of `u`.
    pub fn ruling_polynomial(&self, z: f64, family: RulingFamily) -> [Vec3; 3] {
        let k = self.scales(z);
        match (self.kind, family) {
            (QuadricKind::HyperboloidOneSheet, RulingFamily::U) => [
                Vec3::new(-k.x, -k.y, 0.0),
                Vec3::new(0.0, 0.0, -2.0 * k.z),
                Vec3::new(k.x, -k.y, 0.0),
            ],
            (QuadricKind::HyperboloidOneSheet, RulingFamily::V) => [
                Vec3::new(k.x, k.y, 0.0),
                Vec3::new(0.0, 0.0, 2.0 * k.z),
                Vec3::new(-k.x, k.y, 0.0),
            ],
            (QuadricKind::HyperbolicParaboloid, RulingFamily::U) => {
                [Vec3::new(k.x, k.y, 0.0), Vec3::new(0.0, 0.0, 2.0), Vec3::zeros()]
            }
            (QuadricKind::HyperbolicParaboloid, RulingFamily::V) => {
                [Vec3::new(k.x, -k.y, 0.0), Vec3::new(0.0, 0.0, 2.0), Vec3::zeros()]
            }
        }
    }

    /// `ℬ x_u` at parameter `v` (or `ℬ x_v` at `u`) and its derivative.
    pub(crate) fn scaled_ruling(&self, z: f64, family: RulingFamily, t: f64) -> (Vec3, Vec3) {
        let [c0, c1, c2] = self.ruling_polynomial(z, family);
        (c0 + t * c1 + t * t * c2, c1 + 2.0 * t * c2)
    }

    fn check_chart(&self, u: f64, v: f64) -> Result<()> {
        if !(u.is_finite() && v.is_finite()) {
            return Err(Error::Domain(format!("non-finite parameters ({u}, {v})")));
        }
        if self.is_hyperboloid() && (u - v).abs() < self.eps_dom {
            return Err(Error::Domain(format!("|u − v| = {:.3e} below the chart guard", (u - v).abs())));
        }
        Ok(())
    }

    /// Position only, on the finite chart.
    pub fn point(&self, z: f64, u: f64, v: f64) -> Result<Vec3> {
        self.check_z(z)?;
        self.check_chart(u, v)?;
        Ok(self.point_unchecked(z, u, v))
    }

    pub(crate) fn point_unchecked(&self, z: f64, u: f64, v: f64) -> Vec3 {
        let k = self.scales(z);
        match self.kind {
            QuadricKind::HyperboloidOneSheet => {
                let s = u - v;
                Vec3::new(k.x * (1.0 - u * v), k.y * (1.0 + u * v), k.z * (u + v)) / s
            }
            QuadricKind::HyperbolicParaboloid => {
                Vec3::new(k.x * (u + v), k.y * (u - v), 2.0 * u * v + 0.5 * z)
            }
        }
    }

    /// Closed-form jet at `p`. For `UInfinity` the partials refer to the chart
    /// `(û, v)` with `û = 1/u`.
    pub fn eval(&self, z: f64, p: ParamPoint) -> Result<JetPoint> {
        self.check_z(z)?;
        let k = self.scales(z);
        let (x, x_u, x_v, x_uu, x_uv, x_vv) = match (self.kind, p) {
            (QuadricKind::HyperboloidOneSheet, ParamPoint::Finite { u, v }) => {
                self.check_chart(u, v)?;
                let s = u - v;
                let (wu, wu_v) = self.scaled_ruling(z, RulingFamily::U, v);
                let (wv, _) = self.scaled_ruling(z, RulingFamily::V, u);
                let x = self.point_unchecked(z, u, v);
                let s2 = s * s;
                let s3 = s2 * s;
                (x, wu / s2, wv / s2, -2.0 * wu / s3, wu_v / s2 + 2.0 * wu / s3, 2.0 * wv / s3)
            }
            (QuadricKind::HyperboloidOneSheet, ParamPoint::UInfinity { v }) => {
                if !v.is_finite() {
                    return Err(Error::Domain("non-finite v".into()));
                }
                // x(û, v) = (P1(v) + û P0(v)) / (1 − û v)
                let p0 = Vec3::new(k.x, k.y, k.z * v);
                let p1 = Vec3::new(-k.x * v, k.y * v, k.z);
                let x_hat = p0 + v * p1;
                (
                    p1,
                    x_hat,
                    Vec3::new(-k.x, k.y, 0.0),
                    2.0 * v * x_hat,
                    Vec3::new(-2.0 * k.x * v, 2.0 * k.y * v, 2.0 * k.z),
                    Vec3::zeros(),
                )
            }
            (QuadricKind::HyperbolicParaboloid, ParamPoint::Finite { u, v }) => {
                self.check_chart(u, v)?;
                (
                    self.point_unchecked(z, u, v),
                    Vec3::new(k.x, k.y, 2.0 * v),
                    Vec3::new(k.x, -k.y, 2.0 * u),
                    Vec3::zeros(),
                    Vec3::new(0.0, 0.0, 2.0),
                    Vec3::zeros(),
                )
            }
            (QuadricKind::HyperbolicParaboloid, ParamPoint::UInfinity { .. }) => {
                return Err(Error::Kind("the paraboloid has no u = ∞ chart".into()))
            }
        };
        let cross = x_u.cross(&x_v);
        let norm = cross.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain("degenerate tangent plane".into()));
        }
        Ok(JetPoint { x, x_u, x_v, x_uu, x_uv, x_vv, n: cross / norm, n_hat: self.scaled_normal(z, &x) })
    }

    /// `N̂_z = −2 ∂_z x_z` written in terms of the point itself.
    pub fn scaled_normal(&self, z: f64, x: &Vec3) -> Vec3 {
        let k = self.scales(z);
        let w = self.normal_weights(z);
        match self.kind {
            QuadricKind::HyperboloidOneSheet => {
                Vec3::new(w.x * x.x / k.x, w.y * x.y / k.y, w.z * x.z / k.z)
            }
            QuadricKind::HyperbolicParaboloid => Vec3::new(w.x * x.x / k.x, w.y * x.y / k.y, -1.0),
        }
    }

    /// `lim_{u→∞} x_z(u, v)` on the hyperboloid.
    pub fn eval_at_infinity(&self, z: f64, v: f64) -> Result<Vec3> {
        if !self.is_hyperboloid() {
            return Err(Error::Kind("eval_at_infinity is only defined for the hyperboloid".into()));
        }
        self.check_z(z)?;
        let k = self.scales(z);
        Ok(Vec3::new(-k.x * v, k.y * v, k.z))
    }

    /// `lim_{v→∞} x_z(u, v) = −lim_{u→∞} x_z(u, ·)|_{v=u}` on the hyperboloid.
    pub(crate) fn point_at_v_infinity(&self, z: f64, u: f64) -> Vec3 {
        let k = self.scales(z);
        Vec3::new(k.x * u, -k.y * u, -k.z)
    }

    /// `√R_z x0 + C(z)`.
    pub fn ivory_map(&self, z: f64, x0: &Vec3) -> Result<Vec3> {
        self.check_z(z)?;
        Ok(self.sqrt_r_diag(z).component_mul(x0) + self.ivory_offset(z))
    }

    pub fn inverse_ivory_map(&self, z: f64, xz: &Vec3) -> Result<Vec3> {
        self.check_z(z)?;
        Ok((xz - self.ivory_offset(z)).component_div(&self.sqrt_r_diag(z)))
    }

    /// `w_z = √R_z w0`.
    pub fn ivory_ruling(&self, z: f64, w0: &Vec3) -> Vec3 {
        self.sqrt_r_diag(z).component_mul(w0)
    }

    /// `A_z := A R_z⁻¹`, the quadratic part of the implicit form at `z`.
    pub fn a_z(&self, z: f64) -> Mat3 {
        Mat3::from_diagonal(&self.a_diag().component_div(&self.r_diag(z)))
    }

    /// Bordered matrix `[[A R⁻¹, R⁻¹ B], [Bᵀ R⁻¹, C + z Bᵀ R⁻¹ B]]`.
    pub fn implicit_matrix(&self, z: f64) -> Matrix4<f64> {
        let r_inv = self.r_diag(z).map(|r| 1.0 / r);
        let a_r = self.a_diag().component_mul(&r_inv);
        let rb = self.b_vector().component_mul(&r_inv);
        let corner = self.c_scalar() + z * self.b_vector().dot(&rb);
        let mut m = Matrix4::zeros();
        for i in 0..3 {
            m[(i, i)] = a_r[i];
            m[(i, 3)] = rb[i];
            m[(3, i)] = rb[i];
        }
        m[(3, 3)] = corner;
        m
    }

    /// `[x; 1]ᵀ M(z) [x; 1]`.
    pub fn implicit_residual(&self, z: f64, x: &Vec3) -> f64 {
        let m = self.implicit_matrix(z);
        let h = nalgebra::Vector4::new(x.x, x.y, x.z, 1.0);
        h.dot(&(m * h))
    }

    /// Gradient of the implicit form with respect to `x`.
    pub fn implicit_gradient(&self, z: f64, x: &Vec3) -> Vec3 {
        let m = self.implicit_matrix(z);
        let h = nalgebra::Vector4::new(x.x, x.y, x.z, 1.0);
        let g = m * h;
        2.0 * Vec3::new(g[0], g[1], g[2])
    }

    /// Scaled ruling `ℬ x_{z,u}` (or `ℬ x_{z,v}`) at `p`; `ℬ = (u−v)²` on the
    /// hyperboloid and `1` on the paraboloid.
    pub fn ruling_direction(&self, z: f64, p: ParamPoint, family: RulingFamily) -> Result<Vec3> {
        self.check_z(z)?;
        match (p, family) {
            (ParamPoint::Finite { u, v }, RulingFamily::U) => {
                self.check_chart(u, v)?;
                Ok(self.scaled_ruling(z, family, v).0)
            }
            (ParamPoint::Finite { u, v }, RulingFamily::V) => {
                self.check_chart(u, v)?;
                Ok(self.scaled_ruling(z, family, u).0)
            }
            (ParamPoint::UInfinity { v }, RulingFamily::U) => {
                if !self.is_hyperboloid() {
                    return Err(Error::Kind("the paraboloid has no u = ∞ chart".into()));
                }
                Ok(self.scaled_ruling(z, family, v).0)
            }
            (ParamPoint::UInfinity { .. }, RulingFamily::V) => {
                // ℬ is infinite there; return the chart tangent instead.
                if !self.is_hyperboloid() {
                    return Err(Error::Kind("the paraboloid has no u = ∞ chart".into()));
                }
                let k = self.scales(z);
                Ok(Vec3::new(-k.x, k.y, 0.0))
            }
        }
    }
}
