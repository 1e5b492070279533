//! The tangency configuration `x_z(u1,v1) ∈ T x_0(u0,v0)` and the identities
//! that hold on it.
//!
//! Multiplied by `(u0−v0)(u1−v1)` on the hyperboloid, the constraint
//! `(x_z(u1,v1) − x_0(u0,v0))ᵀ N̂_0 = 0` is affine in each of the four
//! parameters separately. It is solved here for `u1` given `v1`, or mirrored
//! for `v1` given `u1`; on the hyperboloid the solution may sit at infinity.
//!
//! The m-fields `m = ℬ1 x_{z,u1} × V01` and `m' = ℬ1 x_{z,v1} × V01` are
//! normals of the rolled facet distributions. `m` does not depend on `u1`
//! because moving `u1` slides `x_z` along the ruling `ℬ1 x_{z,u1}`; the same
//! holds for `m'` and `v1`.

use serde::{Deserialize, Serialize};

use crate::confocal::{ConfocalFamily, ParamPoint, RulingFamily};
use crate::error::{Error, Result};
use crate::linalg::{ratio, reflection};
use crate::Vec3;

/// `|u1|` beyond this is treated as the point at infinity.
pub const INFINITY_THRESHOLD: f64 = 1e12;
/// Relative size below which both coefficients count as zero.
pub const WHOLE_RULING_TOL: f64 = 1e-11;

/// A parameter value on the projective line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coord {
    Finite(f64),
    Infinite,
}

impl Coord {
    pub fn finite(self) -> Option<f64> {
        match self {
            Coord::Finite(t) => Some(t),
            Coord::Infinite => None,
        }
    }
}

/// A point of the `z = 0` member and a point of the `z` member, cached with
/// the data entering the tangency identities.
#[derive(Clone, Copy, Debug)]
pub struct TangencyConfig {
    pub family: ConfocalFamily,
    pub z: f64,
    pub u0: f64,
    pub v0: f64,
    pub u1: Coord,
    pub v1: Coord,
    /// Base point; equals `x_0(u0,v0)` unless displaced on purpose.
    pub x0: Vec3,
    /// Unit normal of the `z = 0` member at `(u0,v0)`.
    pub n0: Vec3,
    /// Scaled normal `A x_0 + B` at `(u0,v0)`.
    pub n_hat0: Vec3,
    /// `x_z(u1,v1)`.
    pub xz1: Vec3,
    /// `V01 = x_z(u1,v1) − x0`.
    pub v01: Vec3,
    /// `(u1−v1)²` on the hyperboloid, `1` on the paraboloid, `None` at infinity.
    pub b1: Option<f64>,
}

/// Outcome of a tangency solve.
#[derive(Clone, Copy, Debug)]
pub enum TangencySolve {
    Config(TangencyConfig),
    /// Every point of the ruling solves the constraint (the ruling lies in
    /// the tangent plane).
    WholeRuling,
}

impl TangencySolve {
    pub fn config(self) -> Option<TangencyConfig> {
        match self {
            TangencySolve::Config(c) => Some(c),
            TangencySolve::WholeRuling => None,
        }
    }
}

/// Point of the `z` member at projective parameters.
fn partner_point(family: &ConfocalFamily, z: f64, u1: Coord, v1: Coord) -> Result<Vec3> {
    match (u1, v1) {
        (Coord::Finite(u), Coord::Finite(v)) => family.point(z, u, v),
        (Coord::Infinite, Coord::Finite(v)) => family.eval_at_infinity(z, v),
        (Coord::Finite(u), Coord::Infinite) => {
            family.eval_at_infinity(z, 0.0)?;
            Ok(family.point_at_v_infinity(z, u))
        }
        (Coord::Infinite, Coord::Infinite) => Err(Error::Domain("u1 = v1 = ∞ is not a point".into())),
    }
}

impl TangencyConfig {
    /// Configuration without imposing tangency.
    pub fn free(family: &ConfocalFamily, z: f64, u0: f64, v0: f64, u1: Coord, v1: Coord) -> Result<Self> {
        family.spectral(z)?;
        let jet = family.eval(0.0, ParamPoint::new(u0, v0))?;
        let xz1 = partner_point(family, z, u1, v1)?;
        let b1 = match (family.is_hyperboloid(), u1, v1) {
            (false, _, _) => Some(1.0),
            (true, Coord::Finite(u), Coord::Finite(v)) => Some((u - v) * (u - v)),
            _ => None,
        };
        Ok(Self {
            family: *family,
            z,
            u0,
            v0,
            u1,
            v1,
            x0: jet.x,
            n0: jet.n,
            n_hat0: jet.n_hat,
            xz1,
            v01: xz1 - jet.x,
            b1,
        })
    }

    /// Moves the base point by `delta` along the unit normal, keeping the
    /// normals. Used to break the identities on purpose.
    pub fn with_displaced_base(mut self, delta: f64) -> Self {
        self.x0 += delta * self.n0;
        self.v01 = self.xz1 - self.x0;
        self
    }

    /// Same base, `u1` shifted by `du` (tangency generally lost).
    pub fn with_u1_shift(&self, du: f64) -> Result<Self> {
        let u1 = match self.u1 {
            Coord::Finite(u) => Coord::Finite(u + du),
            Coord::Infinite => Coord::Finite(1.0 / du),
        };
        Self::free(&self.family, self.z, self.u0, self.v0, u1, self.v1)
    }

    /// The partner parameter point, when it has a chart in [`ParamPoint`].
    pub fn p1(&self) -> Option<ParamPoint> {
        match (self.u1, self.v1) {
            (Coord::Finite(u), Coord::Finite(v)) => Some(ParamPoint::new(u, v)),
            (Coord::Infinite, Coord::Finite(v)) => Some(ParamPoint::UInfinity { v }),
            _ => None,
        }
    }

    /// `|V01ᵀ N̂0| / (|V01| |N̂0|)`.
    pub fn tangency_residual(&self) -> f64 {
        ratio(self.v01.dot(&self.n_hat0), self.v01.norm() * self.n_hat0.norm())
    }

    /// Direction of the u-ruling at the partner: `ℬ1 x_{z,u1}` when `v1` is
    /// finite, its limit direction otherwise.
    pub fn u_ruling(&self) -> Vec3 {
        match self.v1 {
            Coord::Finite(v) => self.family.scaled_ruling(self.z, RulingFamily::U, v).0,
            Coord::Infinite => {
                let [_, _, c2] = self.family.ruling_polynomial(self.z, RulingFamily::U);
                c2
            }
        }
    }

    /// Direction of the v-ruling at the partner, as [`Self::u_ruling`].
    pub fn v_ruling(&self) -> Vec3 {
        match self.u1 {
            Coord::Finite(u) => self.family.scaled_ruling(self.z, RulingFamily::V, u).0,
            Coord::Infinite => {
                let [_, _, c2] = self.family.ruling_polynomial(self.z, RulingFamily::V);
                c2
            }
        }
    }
}

/// Coefficients `(a, b)` of `a t + b = 0` in the unknown `t` (`u1` when
/// `solve_for = U`, else `v1`), with the other partner parameter `s` fixed.
fn tangency_coefficients(
    family: &ConfocalFamily,
    z: f64,
    x0: &Vec3,
    n_hat: &Vec3,
    solve_for: RulingFamily,
    s: f64,
) -> (f64, f64, f64) {
    // On the hyperboloid the equation is first multiplied by `u1 − v1`.
    if family.is_hyperboloid() {
        let kk = family.scales(z);
        let (a_vec, b_vec) = match solve_for {
            RulingFamily::U => {
                let p0 = Vec3::new(kk.x, kk.y, kk.z * s);
                let p1 = Vec3::new(-kk.x * s, kk.y * s, kk.z);
                (p1 - x0, p0 + s * x0)
            }
            RulingFamily::V => {
                let q0 = Vec3::new(kk.x, kk.y, kk.z * s);
                let q1 = Vec3::new(-kk.x * s, kk.y * s, kk.z);
                (q1 + x0, q0 - s * x0)
            }
        };
        let scale = n_hat.norm() * (a_vec.norm() + b_vec.norm());
        (a_vec.dot(n_hat), b_vec.dot(n_hat), scale)
    } else {
        let (dir, base) = match solve_for {
            RulingFamily::U => (
                family.scaled_ruling(z, RulingFamily::U, s).0,
                family.point_unchecked(z, 0.0, s),
            ),
            RulingFamily::V => (
                family.scaled_ruling(z, RulingFamily::V, s).0,
                family.point_unchecked(z, s, 0.0),
            ),
        };
        let b_vec = base - x0;
        let scale = n_hat.norm() * (dir.norm() + b_vec.norm());
        (dir.dot(n_hat), b_vec.dot(n_hat), scale)
    }
}

fn solve_affine(
    family: &ConfocalFamily,
    a: f64,
    b: f64,
    scale: f64,
) -> Result<Option<Coord>> {
    let tol = WHOLE_RULING_TOL * scale.max(f64::MIN_POSITIVE);
    if a.abs() <= tol && b.abs() <= tol {
        return Ok(None);
    }
    if b.abs() >= INFINITY_THRESHOLD * a.abs() {
        if family.is_hyperboloid() {
            return Ok(Some(Coord::Infinite));
        }
        return Err(Error::NoSolution(format!("constant tangency equation ({b:.3e} ≠ 0)")));
    }
    Ok(Some(Coord::Finite(-b / a)))
}

/// Solves the tangency constraint for `u1` given `(u0, v0, v1)`.
pub fn solve_tangency(family: &ConfocalFamily, z: f64, u0: f64, v0: f64, v1: f64) -> Result<TangencySolve> {
    family.spectral(z)?;
    if !v1.is_finite() {
        return Err(Error::Domain("v1 must be finite".into()));
    }
    let jet = family.eval(0.0, ParamPoint::new(u0, v0))?;
    let (a, b, scale) = tangency_coefficients(family, z, &jet.x, &jet.n_hat, RulingFamily::U, v1);
    match solve_affine(family, a, b, scale)? {
        None => Ok(TangencySolve::WholeRuling),
        Some(Coord::Finite(u1)) if family.is_hyperboloid() && (u1 - v1).abs() < family.eps_dom() => {
            Err(Error::Degenerate(format!("tangency solution u1 = {u1} meets v1 (partner off the chart)")))
        }
        Some(u1) => TangencyConfig::free(family, z, u0, v0, u1, Coord::Finite(v1)).map(TangencySolve::Config),
    }
}

/// Mirrored solve: `v1` given `(u0, v0, u1)`.
pub fn solve_tangency_v1(family: &ConfocalFamily, z: f64, u0: f64, v0: f64, u1: f64) -> Result<TangencySolve> {
    family.spectral(z)?;
    if !u1.is_finite() {
        return Err(Error::Domain("u1 must be finite".into()));
    }
    let jet = family.eval(0.0, ParamPoint::new(u0, v0))?;
    let (a, b, scale) = tangency_coefficients(family, z, &jet.x, &jet.n_hat, RulingFamily::V, u1);
    match solve_affine(family, a, b, scale)? {
        None => Ok(TangencySolve::WholeRuling),
        Some(Coord::Finite(v1)) if family.is_hyperboloid() && (u1 - v1).abs() < family.eps_dom() => {
            Err(Error::Degenerate(format!("tangency solution v1 = {v1} meets u1 (partner off the chart)")))
        }
        Some(v1) => TangencyConfig::free(family, z, u0, v0, Coord::Finite(u1), v1).map(TangencySolve::Config),
    }
}

/// The tangency constraint cleared of denominators:
/// `(u0−v0)(u1−v1)(x_z(u1,v1) − x_0(u0,v0))ᵀ N̂_0` on the hyperboloid, the
/// plain constraint on the paraboloid. Affine in each argument.
pub fn tangency_polynomial(family: &ConfocalFamily, z: f64, u0: f64, v0: f64, u1: f64, v1: f64) -> f64 {
    if family.is_hyperboloid() {
        let num = |zz: f64, u: f64, v: f64| family.point_unchecked(zz, u, v) * (u - v);
        let n0 = family.a_matrix() * num(0.0, u0, v0);
        num(z, u1, v1).dot(&n0) - (u0 - v0) * (u1 - v1)
    } else {
        let x0 = family.point_unchecked(0.0, u0, v0);
        let n = family.scaled_normal(0.0, &x0);
        (family.point_unchecked(z, u1, v1) - x0).dot(&n)
    }
}

/// Which m-field: `M` uses the u-ruling at the partner, `MPrime` the v-ruling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MFamily {
    M,
    MPrime,
}

impl MFamily {
    pub fn ruling(self) -> RulingFamily {
        match self {
            MFamily::M => RulingFamily::U,
            MFamily::MPrime => RulingFamily::V,
        }
    }

    pub fn from_ruling(fam: RulingFamily) -> Self {
        match fam {
            RulingFamily::U => MFamily::M,
            RulingFamily::V => MFamily::MPrime,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MField {
    pub family: MFamily,
    pub m: Vec3,
    /// Derivative in the state variable (`v1` for `M`, `u1` for `MPrime`).
    pub m_s: Vec3,
}

/// m-field at the base point `x0` as a function of the state parameter `s`.
///
/// Evaluated at a reference point of the partner ruling (`u1 = ∞` or `v1 = ∞`
/// on the hyperboloid, `0` on the paraboloid), which is legitimate because the
/// field does not depend on the position along that ruling.
pub fn m_field_at(family: &ConfocalFamily, z: f64, x0: &Vec3, which: MFamily, s: f64) -> MField {
    let (w, w_s) = family.scaled_ruling(z, which.ruling(), s);
    let hyp = family.is_hyperboloid();
    let k = family.scales(z);
    let (reference, reference_s) = match (which, hyp) {
        (MFamily::M, true) => (Vec3::new(-k.x * s, k.y * s, k.z), Vec3::new(-k.x, k.y, 0.0)),
        (MFamily::MPrime, true) => (Vec3::new(k.x * s, -k.y * s, -k.z), Vec3::new(k.x, -k.y, 0.0)),
        (MFamily::M, false) => (family.point_unchecked(z, 0.0, s), family.scaled_ruling(z, RulingFamily::V, 0.0).0),
        (MFamily::MPrime, false) => (family.point_unchecked(z, s, 0.0), family.scaled_ruling(z, RulingFamily::U, 0.0).0),
    };
    let v = reference - x0;
    MField { family: which, m: w.cross(&v), m_s: w_s.cross(&v) + w.cross(&reference_s) }
}

/// m-field of a configuration; errors when the state parameter is infinite.
pub fn m_field(config: &TangencyConfig, which: MFamily) -> Result<MField> {
    let s = match which {
        MFamily::M => config.v1,
        MFamily::MPrime => config.u1,
    }
    .finite()
    .ok_or_else(|| Error::Domain("m-field state parameter at infinity".into()))?;
    Ok(m_field_at(&config.family, config.z, &config.x0, which, s))
}

/// Unit tangent of the ruling opposite to the m-field's (`x_{z,v1}` for `M`).
fn opposite_ruling(config: &TangencyConfig, which: MFamily) -> Vec3 {
    match which {
        MFamily::M => config.v_ruling(),
        MFamily::MPrime => config.u_ruling(),
    }
}

/// `x_{z,v1}ᵀ (I − 2 N Nᵀ) m`, normalized (and symmetrically for `m'`).
pub fn reflection_residual_for(config: &TangencyConfig, which: MFamily) -> Result<f64> {
    let m = m_field(config, which)?.m;
    let t = opposite_ruling(config, which);
    let s = reflection(&config.n0);
    Ok(ratio(t.dot(&(s * m)), t.norm() * m.norm()))
}

pub fn reflection_residual(config: &TangencyConfig) -> Result<f64> {
    reflection_residual_for(config, MFamily::M)
}

/// Both sides of `4 (ℬ1 x_{z,u1})ᵀ N Nᵀ x_{z,v1} = −4z`.
pub fn factorization_sides(config: &TangencyConfig) -> (f64, f64) {
    let n = config.n0;
    let wu = config.u_ruling().dot(&n);
    let wv = config.v_ruling().dot(&n);
    // With both parameters finite `wu·wv/ℬ` is the product of the true
    // partials times ℬ; at infinity the limit directions already carry it.
    let lhs = match config.b1 {
        Some(b) if config.family.is_hyperboloid() => 4.0 * wu * wv / b,
        _ => 4.0 * wu * wv,
    };
    (lhs, -4.0 * config.z)
}

pub fn factorization_residual(config: &TangencyConfig) -> f64 {
    let (lhs, rhs) = factorization_sides(config);
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

/// `Nᵀ(2z m + m × m_s)`, normalized by the sizes of the two terms.
pub fn integrability_residual_at(family: &ConfocalFamily, z: f64, x0: &Vec3, n: &Vec3, which: MFamily, s: f64) -> f64 {
    let f = m_field_at(family, z, x0, which, s);
    let lhs = n.dot(&(2.0 * z * f.m + f.m.cross(&f.m_s)));
    ratio(lhs, n.norm() * (2.0 * z.abs() * f.m.norm() + f.m.norm() * f.m_s.norm()).max(1.0))
}

pub fn integrability_residual(config: &TangencyConfig, which: MFamily) -> Result<f64> {
    let s = match which {
        MFamily::M => config.v1,
        MFamily::MPrime => config.u1,
    }
    .finite()
    .ok_or_else(|| Error::Domain("m-field state parameter at infinity".into()))?;
    Ok(integrability_residual_at(&config.family, config.z, &config.x0, &config.n0, which, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confocal::QuadricKind;
    use crate::sampling;
    use rand::Rng;

    fn hyp() -> ConfocalFamily {
        ConfocalFamily::hyperboloid(4.0, -1.0, 1.0).unwrap()
    }
    fn par() -> ConfocalFamily {
        ConfocalFamily::paraboloid(1.0, -1.0).unwrap()
    }

    /// Bisection on the raw constraint: an oracle independent of the
    /// coefficient formulas.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        assert!(f(lo) * f(hi) <= 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn solve_examples() {
        let f = hyp();
        let c = solve_tangency(&f, 0.5, 1.0, 0.0, 2.0).unwrap().config().unwrap();
        assert!(c.tangency_residual() <= 1e-12);
        let u1 = c.u1.finite().unwrap();
        let x0 = f.point(0.0, 1.0, 0.0).unwrap();
        let n = f.scaled_normal(0.0, &x0);
        let g = |u: f64| (f.point(0.5, u, 2.0).unwrap() - x0).dot(&n) * (u - 2.0);
        let root = bisect(g, u1 - 1.0, u1 + 1.0);
        assert!((root - u1).abs() < 1e-10 * (1.0 + u1.abs()));

        let p = par();
        let c = solve_tangency(&p, 0.25, 0.0, 0.0, 1.0).unwrap().config().unwrap();
        assert!(c.tangency_residual() <= 1e-12);
        let u1 = c.u1.finite().unwrap();
        let x0 = p.point(0.0, 0.0, 0.0).unwrap();
        let n = p.scaled_normal(0.0, &x0);
        let g = |u: f64| (p.point(0.25, u, 1.0).unwrap() - x0).dot(&n);
        let root = bisect(g, u1 - 1.0, u1 + 1.0);
        assert!((root - u1).abs() < 1e-10 * (1.0 + u1.abs()));

        assert!(matches!(solve_tangency(&f, 0.0, 1.0, 0.0, 0.0).unwrap(), TangencySolve::WholeRuling));
        assert!(matches!(solve_tangency(&p, 0.0, 0.5, -1.0, -1.0).unwrap(), TangencySolve::WholeRuling));
    }

    #[test]
    fn mirrored_solve_matches_forward_solve() {
        let f = hyp();
        let c = solve_tangency(&f, 0.3, 0.7, -0.4, 1.8).unwrap().config().unwrap();
        let u1 = c.u1.finite().unwrap();
        let d = solve_tangency_v1(&f, 0.3, 0.7, -0.4, u1).unwrap().config().unwrap();
        assert!((d.v1.finite().unwrap() - 1.8).abs() < 1e-10);
    }

    #[test]
    fn infinite_partner_is_routed_to_the_limit_chart() {
        // Choose v1 so that the u1-coefficient vanishes: (x_z(∞,v1) − x0)ᵀN̂ = 0
        // is linear in v1 for the hyperboloid.
        let f = hyp();
        let (z, u0, v0) = (0.4, 1.3, -0.2);
        let x0 = f.point(0.0, u0, v0).unwrap();
        let n = f.scaled_normal(0.0, &x0);
        let a = |v: f64| (f.eval_at_infinity(z, v).unwrap() - x0).dot(&n);
        let v1 = -a(0.0) / (a(1.0) - a(0.0));
        let c = solve_tangency(&f, z, u0, v0, v1).unwrap().config().unwrap();
        assert_eq!(c.u1, Coord::Infinite);
        assert!(c.tangency_residual() <= 1e-10);
        assert!(factorization_residual(&c) <= 1e-9);
        assert!(reflection_residual(&c).unwrap() <= 1e-9);
    }

    #[test]
    fn constraint_is_separately_affine() {
        let mut rng = sampling::rng(3);
        for kind in [QuadricKind::HyperboloidOneSheet, QuadricKind::HyperbolicParaboloid] {
            for _ in 0..200 {
                let f = sampling::family(&mut rng, kind);
                let z = sampling::spectral(&mut rng, &f);
                let mut q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
                for slot in 0..4 {
                    let g = |q: &[f64; 4]| tangency_polynomial(&f, z, q[0], q[1], q[2], q[3]);
                    let h = 0.37;
                    let c = q[slot];
                    let mut at = |t: f64| {
                        q[slot] = t;
                        g(&q)
                    };
                    let (a, b, d) = (at(c - h), at(c), at(c + h));
                    q[slot] = c;
                    let scale = a.abs().max(b.abs()).max(d.abs()).max(1.0);
                    assert!((a - 2.0 * b + d).abs() <= 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn m_field_structure() {
        let f = hyp();
        let (z, u0, v0) = (0.35, 1.1, -0.6);
        let c = solve_tangency(&f, z, u0, v0, 0.9).unwrap().config().unwrap();
        let m = m_field(&c, MFamily::M).unwrap();
        // u1-independence against the defining product at a shifted u1.
        let shifted = c.with_u1_shift(1.0).unwrap();
        let u1 = shifted.u1.finite().unwrap();
        let jet = f.eval(z, ParamPoint::new(u1, 0.9)).unwrap();
        let direct = (u1 - 0.9).powi(2) * jet.x_u.cross(&shifted.v01);
        assert!((direct - m.m).norm() <= 1e-12 * (1.0 + m.m.norm()));
        assert!(m.m.dot(&jet.x_u).abs() <= 1e-12 * m.m.norm() * jet.x_u.norm());
        assert!(m.m.dot(&shifted.v01).abs() <= 1e-12 * m.m.norm() * shifted.v01.norm());
        // Quadratic in v1: four samples predict a fifth.
        let at = |s: f64| m_field_at(&f, z, &c.x0, MFamily::M, s).m;
        let nodes = [-1.0, 0.2, 0.9, 2.0];
        let t = 3.1;
        let mut interp = Vec3::zeros();
        for (i, &vi) in nodes.iter().enumerate() {
            let l: f64 = nodes.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &vk)| (t - vk) / (vi - vk)).product();
            interp += l * at(vi);
        }
        assert!((interp - at(t)).norm() <= 1e-10 * (1.0 + at(t).norm()));
        // Analytic derivative against central differences.
        let h = 1e-5;
        let fd = (at(0.9 + h) - at(0.9 - h)) / (2.0 * h);
        assert!((fd - m.m_s).norm() <= 1e-7 * (1.0 + m.m_s.norm()));
        // V01 = 0 gives m = 0 (up to rounding, since m is evaluated at a reference
        // point of the ruling).
        let same = TangencyConfig::free(&f, 0.0, u0, v0, Coord::Finite(u0), Coord::Finite(v0)).unwrap();
        assert!(same.v01.norm() == 0.0);
        assert!(m_field(&same, MFamily::M).unwrap().m.norm() <= 1e-14);
        assert!(integrability_residual(&same, MFamily::M).unwrap() <= 1e-14);
    }

    #[test]
    fn conditional_identities_hold_and_fail_without_tangency() {
        let mut rng = sampling::rng(19);
        for kind in [QuadricKind::HyperboloidOneSheet, QuadricKind::HyperbolicParaboloid] {
            let mut n = 0;
            while n < 300 {
                let f = sampling::family(&mut rng, kind);
                let z = sampling::spectral(&mut rng, &f);
                let ParamPoint::Finite { u: u0, v: v0 } = sampling::param_point(&mut rng, &f) else { unreachable!() };
                let v1 = rng.random_range(-3.0..3.0);
                let Ok(TangencySolve::Config(c)) = solve_tangency(&f, z, u0, v0, v1) else { continue };
                if c.u1.finite().is_none_or(|u| u.abs() > 50.0 || (u - v1).abs() < 0.1) {
                    continue;
                }
                n += 1;
                assert!(c.tangency_residual() <= 1e-10);
                assert!(reflection_residual(&c).unwrap() <= 1e-9);
                assert!(reflection_residual_for(&c, MFamily::MPrime).unwrap() <= 1e-9);
                assert!(factorization_residual(&c) <= 1e-9);
                let (lhs, _) = factorization_sides(&c);
                if z > 0.0 {
                    assert!(lhs < 0.0);
                }
                for w in [MFamily::M, MFamily::MPrime] {
                    assert!(integrability_residual(&c, w).unwrap() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn negative_controls_on_a_fixed_config() {
        for f in [hyp(), par()] {
            let c = solve_tangency(&f, 0.5, 1.0, 0.0, 2.0).unwrap().config().unwrap();
            let off = c.with_u1_shift(0.1).unwrap();
            assert!(reflection_residual(&off).unwrap() >= 1e-3);
            assert!(factorization_residual(&off) >= 1e-3);
            let lifted = c.with_displaced_base(0.1);
            assert!(integrability_residual(&lifted, MFamily::M).unwrap() >= 1e-3);
            assert!(integrability_residual(&lifted, MFamily::MPrime).unwrap() >= 1e-3);
        }
    }

    #[test]
    fn reflection_is_an_involution_on_partner_tangents() {
        let c = solve_tangency(&hyp(), 0.5, 1.0, 0.0, 2.0).unwrap().config().unwrap();
        let s = reflection(&c.n0);
        let t = c.v_ruling();
        assert!((s * (s * t) - t).norm() <= 1e-14 * t.norm());
    }

    #[test]
    fn zero_spectral_parameter_reduces_integrability() {
        let f = hyp();
        let c = TangencyConfig::free(&f, 0.0, 1.0, 0.0, Coord::Finite(3.0), Coord::Finite(2.0)).unwrap();
        let m = m_field(&c, MFamily::M).unwrap();
        assert!(m.m.norm() > 0.1);
        assert!(integrability_residual(&c, MFamily::M).unwrap() <= 1e-9);
    }
}
