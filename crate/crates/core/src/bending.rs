//! Isometric bending of the `z = 0` quadric as a ruled surface.
//!
//! Write the patch as `x0(u,v) = c(v) + λ(u,v) w(v)` with unit ruling
//! direction `w`, directrix `c(v) = x0(u_ref, v)` and `λ = (x0 − c)ᵀw`. With
//! `s = |w'|`, `t = w'/s`, `b = w × t` the spherical frame of `w` obeys
//!
//! ```text
//! w' = s t,   t' = −s w + s κ b,   b' = −s κ t,
//! ```
//!
//! where `κ` is the geodesic curvature of the spherical image of `w`. Any
//! other `κ̃` produces a frame `(w̃, t̃, b̃)` with the same speed `s`; setting
//! `c̃' = α w̃ + β t̃ + σ γ b̃` with `α, β, γ` the frame components of `c'`
//! gives `x̃ = c̃ + λ w̃`, which has the same first fundamental form.
//!
//! The rotation `R(v) = F̃ diag(1,1,σ) Fᵀ` carries the tangents of `x0` to
//! those of `x̃`. Its connection form is `P = 0`, `Q = s (σκ̃ − κ) w`, known in
//! closed form; only the frame and the directrix are integrated.

use serde::{Deserialize, Serialize};

use crate::confocal::{ConfocalFamily, JetPoint, ParamPoint, RulingFamily};
use crate::error::{Error, Result};
use crate::motion::RigidMotion;
use crate::rolling::{first_form_mismatch, Connection, Grid2D, Provenance, SurfacePatch};
use crate::{Mat3, Vec3};

/// Largest RK4 step used along `v`.
pub const MAX_FRAME_STEP: f64 = 2e-3;

/// `amp · sin(freq · v + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amp: f64,
    pub freq: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Closed-form perturbation `δ(v) = Σ poly[k] v^k + Σ trig`, added to the base
/// geodesic curvature.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaExpr {
    #[serde(default)]
    pub poly: Vec<f64>,
    #[serde(default)]
    pub trig: Vec<TrigTerm>,
}

impl KappaExpr {
    pub fn constant(c: f64) -> Self {
        Self { poly: vec![c], trig: vec![] }
    }

    pub fn eval(&self, v: f64) -> f64 {
        let poly = self.poly.iter().rev().fold(0.0, |acc, c| acc * v + c);
        poly + self.trig.iter().map(|t| t.amp * (t.freq * v + t.phase).sin()).sum::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.poly.iter().all(|c| *c == 0.0) && self.trig.iter().all(|t| t.amp == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuledBendingSpec {
    pub family: ConfocalFamily,
    /// Parameter of the directrix `c(v) = x0(u_ref, v)`.
    pub u_ref: f64,
    /// `κ̃ − κ` as a function of `v`.
    pub kappa: KappaExpr,
    /// Branch sign `σ` of the binormal component of `c̃'`.
    pub sigma: i8,
}

/// Frame data of the base ruled surface at one `v`.
#[derive(Clone, Copy, Debug)]
pub struct BaseInvariants {
    pub frame: Mat3,
    pub speed: f64,
    pub kappa: f64,
    /// Components `(α, β, γ)` of `c'` in the frame.
    pub directrix: Vec3,
}

impl RuledBendingSpec {
    fn ruling(&self, v: f64) -> [Vec3; 3] {
        let (w, w1) = self.family.scaled_ruling(0.0, RulingFamily::U, v);
        let [_, _, c2] = self.family.ruling_polynomial(0.0, RulingFamily::U);
        [w, w1, 2.0 * c2]
    }

    /// `w, s, κ` of the base, all closed form.
    pub fn spherical(&self, v: f64) -> (Mat3, f64, f64) {
        let [w, w1, w2] = self.ruling(v);
        let wn = w.norm();
        let cross = w.cross(&w1);
        let cn = cross.norm();
        let speed = cn / (wn * wn);
        let kappa = w.dot(&w1.cross(&w2)) * wn.powi(3) / cn.powi(3);
        let e1 = w / wn;
        // w' = (W' − (e1·W') e1)/|W|, so t is the normalized tangential part of W'.
        let e2 = (w1 - e1 * e1.dot(&w1)).normalize();
        (Mat3::from_columns(&[e1, e2, e1.cross(&e2)]), speed, kappa)
    }

    pub fn base(&self, v: f64) -> Result<BaseInvariants> {
        let (frame, speed, kappa) = self.spherical(v);
        let c1 = self.family.eval(0.0, ParamPoint::new(self.u_ref, v))?.x_v;
        let directrix = frame.transpose() * c1;
        let invariant = c1.norm_squared() - directrix.x.powi(2) - directrix.y.powi(2);
        if invariant < -1e-12 * c1.norm_squared().max(1.0) || !invariant.is_finite() {
            return Err(Error::Validity(format!("binormal component of the directrix is not real at v = {v}")));
        }
        Ok(BaseInvariants { frame, speed, kappa, directrix })
    }

    pub fn kappa_tilde(&self, v: f64) -> f64 {
        self.spherical(v).2 + self.kappa.eval(v)
    }

    fn sign(&self) -> f64 {
        f64::from(self.sigma.signum())
    }

    /// Right-hand side for the state `(w̃, t̃, b̃, c̃)`.
    fn rhs(&self, v: f64, frame: &Mat3) -> Result<(Mat3, Vec3)> {
        let base = self.base(v)?;
        let kt = base.kappa + self.kappa.eval(v);
        let s = base.speed;
        let (w, t, b) = (frame.column(0), frame.column(1), frame.column(2));
        let d = Mat3::from_columns(&[s * t, -s * w + s * kt * b, -s * kt * t]);
        let [alpha, beta, gamma] = [base.directrix.x, base.directrix.y, base.directrix.z];
        let dc = alpha * w + beta * t + self.sign() * gamma * b;
        Ok((d, dc))
    }
}

/// Gram–Schmidt on the columns, keeping the orientation.
fn reorthonormalize(f: &Mat3) -> Mat3 {
    let e1 = f.column(0).normalize();
    let t = f.column(1) - e1 * e1.dot(&f.column(1));
    let e2 = t.normalize();
    Mat3::from_columns(&[e1, e2, e1.cross(&e2)])
}

/// A bent seed: the integrated frame and directrix at the grid's `v` nodes.
#[derive(Clone, Debug)]
pub struct BentSeed {
    pub spec: RuledBendingSpec,
    pub grid: Grid2D,
    pub frames: Vec<Mat3>,
    pub directrix: Vec<Vec3>,
    /// Largest `|F̃ᵀF̃ − I|` seen before re-orthonormalization.
    pub frame_drift: f64,
    pub patch: SurfacePatch,
}

impl BentSeed {
    /// The natural rotation `F̃ diag(1,1,σ) Fᵀ` at grid column `j`.
    pub fn rotation(&self, j: usize) -> Result<Mat3> {
        let base = self.spec.base(self.grid.v(j))?;
        let d = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, self.spec.sign()));
        Ok(self.frames[j] * d * base.frame.transpose())
    }

    /// Orientation for which the rolling rotation is the natural one.
    pub fn natural_epsilon(&self) -> i8 {
        self.spec.sigma.signum()
    }

    pub fn connection(&self) -> BendingConnection {
        BendingConnection { spec: self.spec.clone() }
    }

    /// Rolling motion at node `(i, j)` for orientation `epsilon`.
    pub fn motion(&self, i: usize, j: usize, epsilon: i8) -> Result<RigidMotion> {
        let mut r = self.rotation(j)?;
        if epsilon != self.natural_epsilon() {
            let n0 = self.spec.family.eval(0.0, ParamPoint::new(self.grid.u(i), self.grid.v(j)))?.n;
            r *= crate::linalg::reflection(&n0);
        }
        let x0 = self.spec.family.point(0.0, self.grid.u(i), self.grid.v(j))?;
        Ok(RigidMotion::new(r, self.patch.jet(i, j).x - r * x0))
    }
}

/// Integrates the bent frame and directrix and assembles the seed patch.
pub fn bend(spec: &RuledBendingSpec, grid: Grid2D) -> Result<BentSeed> {
    if spec.sigma != 1 && spec.sigma != -1 {
        return Err(Error::Config(format!("sigma must be ±1 (got {})", spec.sigma)));
    }
    let family = &spec.family;
    let substeps = (grid.h_v() / MAX_FRAME_STEP).ceil().max(1.0) as usize;
    let h = grid.h_v() / substeps as f64;

    let v_start = grid.v(0);
    let mut frame = spec.base(v_start)?.frame;
    let mut c = family.point(0.0, spec.u_ref, v_start)?;
    let mut frames = vec![frame];
    let mut directrix = vec![c];
    let mut drift = 0.0f64;
    for j in 1..grid.nv {
        for k in 0..substeps {
            let v = grid.v(j - 1) + k as f64 * h;
            let (k1f, k1c) = spec.rhs(v, &frame)?;
            let (k2f, k2c) = spec.rhs(v + 0.5 * h, &(frame + 0.5 * h * k1f))?;
            let (k3f, k3c) = spec.rhs(v + 0.5 * h, &(frame + 0.5 * h * k2f))?;
            let (k4f, k4c) = spec.rhs(v + h, &(frame + h * k3f))?;
            frame += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
            c += h / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
            if !(frame.iter().all(|x| x.is_finite()) && c.iter().all(|x| x.is_finite())) {
                return Err(Error::Quadrature(format!("non-finite state at v = {v}")));
            }
            drift = drift.max(crate::linalg::max_abs(&(frame.transpose() * frame - Mat3::identity())));
            frame = reorthonormalize(&frame);
        }
        frames.push(frame);
        directrix.push(c);
    }

    let mut seed = BentSeed {
        spec: spec.clone(),
        grid,
        frames,
        directrix,
        frame_drift: drift,
        patch: SurfacePatch { grid, jets: Vec::new(), provenance: Provenance::Bent },
    };
    let connection = seed.connection();
    let mut jets = Vec::with_capacity(grid.len());
    for (i, j) in grid.nodes() {
        let (u, v) = (grid.u(i), grid.v(j));
        let base = family.eval(0.0, ParamPoint::new(u, v))?;
        let c0 = family.point(0.0, spec.u_ref, v)?;
        let lambda = (base.x - c0).dot(&spec.base(v)?.frame.column(0));
        let r = seed.rotation(j)?;
        let (p, q) = connection.omega(u, v)?;
        let x = seed.directrix[j] + lambda * seed.frames[j].column(0);
        jets.push(JetPoint::from_partials(
            x,
            r * base.x_u,
            r * base.x_v,
            r * (base.x_uu + p.cross(&base.x_u)),
            r * (base.x_uv + q.cross(&base.x_u)),
            r * (base.x_vv + q.cross(&base.x_v)),
        ));
    }
    seed.patch = SurfacePatch::new(grid, jets, Provenance::Bent)?;
    Ok(seed)
}

/// Max first-form difference between two patches on the same grid.
pub fn isometry_residual(base: &SurfacePatch, bent: &SurfacePatch) -> f64 {
    first_form_mismatch(base, bent).0
}

/// Closed-form connection of a ruled bending, natural orientation.
#[derive(Clone, Debug)]
pub struct BendingConnection {
    pub spec: RuledBendingSpec,
}

impl Connection for BendingConnection {
    fn omega(&self, _u: f64, v: f64) -> Result<(Vec3, Vec3)> {
        let (frame, speed, kappa) = self.spec.spherical(v);
        let kt = kappa + self.spec.kappa.eval(v);
        let q = speed * (self.spec.sign() * kt - kappa) * frame.column(0).into_owned();
        Ok((Vec3::zeros(), q))
    }

    fn is_zero(&self) -> bool {
        self.spec.sigma == 1 && self.spec.kappa.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::rolling::{connection_form_with_error, flatness_residual, rolling_field, ConnectionForm};

    fn spec(delta: f64, sigma: i8) -> RuledBendingSpec {
        RuledBendingSpec {
            family: ConfocalFamily::hyperboloid(4.0, -1.0, 1.0).unwrap(),
            u_ref: 1.2,
            kappa: KappaExpr::constant(delta),
            sigma,
        }
    }

    fn grid() -> Grid2D {
        Grid2D::new(0.8, 1.6, -0.6, 0.2, 11, 11).unwrap()
    }

    #[test]
    fn base_invariants_match_differences() {
        let s = spec(0.0, 1);
        let v = -0.2;
        let w = |v: f64| s.spherical(v).0.column(0).into_owned();
        let h = 1e-5;
        let dw = (w(v + h) - w(v - h)) / (2.0 * h);
        let (frame, speed, kappa) = s.spherical(v);
        assert!((dw.norm() - speed).abs() < 1e-8);
        assert!((dw / speed - frame.column(1)).norm() < 1e-8);
        let t = |v: f64| s.spherical(v).0.column(1).into_owned();
        let dt = (t(v + h) - t(v - h)) / (2.0 * h);
        let want = -speed * frame.column(0) + speed * kappa * frame.column(2);
        assert!((dt - want).norm() < 1e-7);
    }

    #[test]
    fn identity_bending_recovers_the_base() {
        let g = grid();
        let base = SurfacePatch::quadric(&spec(0.0, 1).family, 0.0, g).unwrap();
        let seed = bend(&spec(0.0, 1), g).unwrap();
        assert!(isometry_residual(&base, &seed.patch) <= 1e-10);
        for (a, b) in base.jets.iter().zip(&seed.patch.jets) {
            assert!((a.x - b.x).norm() < 1e-10);
        }
        assert!(seed.frame_drift <= 1e-10);
    }

    #[test]
    fn perturbed_bending_is_isometric_and_not_congruent() {
        let g = grid();
        let base = SurfacePatch::quadric(&spec(0.0, 1).family, 0.0, g).unwrap();
        for sigma in [1, -1] {
            let seed = bend(&spec(0.1, sigma), g).unwrap();
            assert!(isometry_residual(&base, &seed.patch) <= 1e-8);
            let diff = base
                .jets
                .iter()
                .zip(&seed.patch.jets)
                .map(|(a, b)| {
                    let (ea, eb) = (a.second_form(), b.second_form());
                    (0..3).map(|k| (ea[k].abs() - eb[k].abs()).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            assert!(diff >= 1e-2, "second forms differ by only {diff}");
        }
    }

    #[test]
    fn first_form_is_u_independent() {
        let g = grid();
        let base = SurfacePatch::quadric(&spec(0.0, 1).family, 0.0, g).unwrap();
        let seed = bend(&spec(0.25, 1), g).unwrap();
        for j in 0..g.nv {
            for i in 0..g.nu {
                let (a, b) = (base.jet(i, j).first_form(), seed.patch.jet(i, j).first_form());
                for k in 0..3 {
                    assert!((a[k] - b[k]).abs() <= 1e-12 * (1.0 + a[k].abs()));
                }
            }
        }
    }

    #[test]
    fn positions_converge_to_analytic_tangents() {
        // Positions come from quadrature and tangents from the frame; central
        // differences of the former approach the latter at second order.
        let s = spec(0.3, -1);
        let err = |n: usize| {
            let g = Grid2D::new(0.8, 1.6, -0.6, 0.2, n, n).unwrap();
            let seed = bend(&s, g).unwrap();
            let (i, j) = (n / 2, n / 2);
            let xu = (seed.patch.jet(i + 1, j).x - seed.patch.jet(i - 1, j).x) / (2.0 * g.h_u());
            let xv = (seed.patch.jet(i, j + 1).x - seed.patch.jet(i, j - 1).x) / (2.0 * g.h_v());
            let jet = seed.patch.jet(i, j);
            (xu - jet.x_u).norm().max((xv - jet.x_v).norm())
        };
        let ratio = err(81) / err(161);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn analytic_connection_matches_rolling() {
        let g = Grid2D::new(0.8, 1.6, -0.6, 0.2, 41, 41).unwrap();
        let s = spec(0.2, 1);
        let seed = bend(&s, g).unwrap();
        let base = SurfacePatch::quadric(&s.family, 0.0, g).unwrap();
        let field = rolling_field(&base, &seed.patch, seed.natural_epsilon()).unwrap();
        for (i, j) in g.nodes() {
            assert!(max_abs(&(field.motion(i, j).rotation - seed.rotation(j).unwrap())) < 1e-9);
        }
        let (fd, _) = connection_form_with_error(&field, &base);
        let exact = ConnectionForm::sample(g, &seed.connection()).unwrap();
        let err = fd.q.iter().zip(&exact.q).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-3 * exact.max_norm());
        let (curv, tors) = flatness_residual(&exact, &base);
        assert!(curv < 1e-3 && tors < 1e-12);
    }

    #[test]
    fn paraboloid_bends_too() {
        let s = RuledBendingSpec {
            family: ConfocalFamily::paraboloid(1.0, -1.0).unwrap(),
            u_ref: 0.0,
            kappa: KappaExpr { poly: vec![0.1, 0.05], trig: vec![TrigTerm { amp: 0.02, freq: 3.0, phase: 0.0 }] },
            sigma: 1,
        };
        let g = Grid2D::new(-0.5, 0.5, -0.5, 0.5, 21, 21).unwrap();
        let base = SurfacePatch::quadric(&s.family, 0.0, g).unwrap();
        let seed = bend(&s, g).unwrap();
        assert!(isometry_residual(&base, &seed.patch) <= 1e-8);
        assert!(s.spherical(0.3).2.abs() < 1e-14);
    }
}
