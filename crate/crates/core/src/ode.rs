//! Adaptive integration of scalar Riccati equations on the projective line.
//!
//! `y' = c0(t) + c1(t) y + c2(t) y²` is stepped with the Dormand–Prince 5(4)
//! pair. When `|y|` grows past [`SWITCH_TO_RECIPROCAL`] the state moves to
//! `ŷ = 1/y`, which obeys `ŷ' = −(c0 ŷ² + c1 ŷ + c2)`, and comes back once
//! `|ŷ| > 1`. Poles of `y` are then ordinary points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SWITCH_TO_RECIPROCAL: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepPolicy {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 0.05, max_steps: 200_000 }
    }
}

/// A point of the real projective line in one of its two affine charts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projective {
    Affine(f64),
    /// `Reciprocal(r)` stands for `1/r`; `r = 0` is the point at infinity.
    Reciprocal(f64),
}

impl Projective {
    pub fn new(y: f64) -> Self {
        Projective::Affine(y).rechart()
    }

    /// The value, `±∞` at the point at infinity.
    pub fn value(self) -> f64 {
        match self {
            Projective::Affine(y) => y,
            Projective::Reciprocal(r) => 1.0 / r,
        }
    }

    /// Applies the chart switching thresholds.
    pub fn rechart(self) -> Self {
        match self {
            Projective::Affine(y) if y.abs() > SWITCH_TO_RECIPROCAL => Projective::Reciprocal(1.0 / y),
            Projective::Reciprocal(r) if r.abs() > 1.0 => Projective::Affine(1.0 / r),
            p => p,
        }
    }

    pub fn raw(self) -> f64 {
        match self {
            Projective::Affine(y) | Projective::Reciprocal(y) => y,
        }
    }

    pub fn is_finite(self) -> bool {
        self.raw().is_finite()
    }

    /// Chordal distance `|a − b| / √((1+a²)(1+b²))`, valid at infinity.
    pub fn chordal(self, other: Projective) -> f64 {
        // Homogeneous coordinates (num, den) of each point.
        let h = |p: Projective| match p {
            Projective::Affine(y) => (y, 1.0),
            Projective::Reciprocal(r) => (1.0, r),
        };
        let (a1, a2) = h(self);
        let (b1, b2) = h(other);
        (a1 * b2 - a2 * b1).abs() / ((a1 * a1 + a2 * a2) * (b1 * b1 + b2 * b2)).sqrt()
    }
}

fn rhs(chart: Projective, c: [f64; 3], y: f64) -> f64 {
    match chart {
        Projective::Affine(_) => c[0] + y * (c[1] + y * c[2]),
        Projective::Reciprocal(_) => -(y * (c[0] * y + c[1]) + c[2]),
    }
}

fn with_raw(chart: Projective, y: f64) -> Projective {
    match chart {
        Projective::Affine(_) => Projective::Affine(y),
        Projective::Reciprocal(_) => Projective::Reciprocal(y),
    }
}

// Dormand–Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One Dormand–Prince step; returns the fifth-order value and the error estimate.
pub fn dopri_step<F>(f: &mut F, t: f64, y: f64, h: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mut k = [0.0; 7];
    for s in 0..7 {
        let yi = y + h * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
        k[s] = f(t + C[s] * h, yi)?;
    }
    let y5 = y + h * (0..7).map(|s| B5[s] * k[s]).sum::<f64>();
    let y4 = y + h * (0..7).map(|s| B4[s] * k[s]).sum::<f64>();
    Ok((y5, (y5 - y4).abs()))
}

/// Integrates the Riccati equation with coefficients `coeffs(t)` from `t0` to
/// `t1`. `h_hint` carries a step size between consecutive calls.
pub fn integrate_riccati<F>(
    mut coeffs: F,
    t0: f64,
    t1: f64,
    start: Projective,
    policy: &StepPolicy,
    h_hint: &mut f64,
) -> Result<Projective>
where
    F: FnMut(f64) -> Result<[f64; 3]>,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = start.rechart();
    if span == 0.0 {
        return Ok(y);
    }
    let mut h = h_hint.abs().min(policy.max_step).min(span);
    if !(h > 0.0) {
        h = span.min(policy.max_step).min(1e-2);
    }
    let min_step = 1e-14 * (1.0 + t0.abs().max(t1.abs()));
    for _ in 0..policy.max_steps {
        let remaining = (t1 - t) * dir;
        if remaining <= min_step {
            return Ok(y);
        }
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let chart = y;
        let mut f = |tt: f64, yy: f64| Ok(rhs(chart, coeffs(tt)?, yy));
        let (y_new, err) = dopri_step(&mut f, t, y.raw(), dir * step)?;
        if !y_new.is_finite() {
            h = 0.25 * step;
            if h < min_step {
                return Err(Error::Quadrature(format!("non-finite Riccati state near t = {t}")));
            }
            continue;
        }
        let scale = policy.abs_tol + policy.rel_tol * y.raw().abs().max(y_new.abs());
        let ratio = err / scale;
        if ratio <= 1.0 {
            t = if last { t1 } else { t + dir * step };
            y = with_raw(chart, y_new).rechart();
            if last {
                return Ok(y);
            }
            *h_hint = step;
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h = (step * factor).min(policy.max_step);
        if h < min_step {
            return Err(Error::Quadrature(format!("step size underflow near t = {t}")));
        }
    }
    Err(Error::Quadrature(format!("more than {} steps between {t0} and {t1}", policy.max_steps)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangent_crosses_its_pole() {
        // y' = 1 + y², y(0) = 0 ⇒ y = tan t, with a pole at π/2.
        let policy = StepPolicy::default();
        let mut h = 0.0;
        let y = integrate_riccati(|_| Ok([1.0, 0.0, 1.0]), 0.0, 2.5, Projective::new(0.0), &policy, &mut h).unwrap();
        assert!((y.value() - 2.5f64.tan()).abs() < 1e-8);
    }

    #[test]
    fn linear_part_is_exponential() {
        let policy = StepPolicy::default();
        let mut h = 0.0;
        let y = integrate_riccati(|_| Ok([0.0, -1.5, 0.0]), 0.0, 2.0, Projective::new(3.0), &policy, &mut h).unwrap();
        assert!((y.value() - 3.0 * (-3.0f64).exp()).abs() < 1e-10);
        let back = integrate_riccati(|_| Ok([0.0, -1.5, 0.0]), 2.0, 0.0, y, &policy, &mut h).unwrap();
        assert!((back.value() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn time_dependent_coefficients() {
        // y' = −y² t starting at 1 ⇒ y = 2 / (2 + t²).
        let policy = StepPolicy::default();
        let mut h = 0.0;
        let y = integrate_riccati(|t| Ok([0.0, 0.0, -t]), 0.0, 3.0, Projective::new(1.0), &policy, &mut h).unwrap();
        assert!((y.value() - 2.0 / 11.0).abs() < 1e-10);
    }

    #[test]
    fn chordal_metric() {
        let inf = Projective::Reciprocal(0.0);
        assert_eq!(inf.chordal(Projective::Reciprocal(-0.0)), 0.0);
        assert!((Projective::new(1e9).chordal(inf) - 1e-9).abs() < 1e-15);
        assert!((Projective::new(0.0).chordal(inf) - 1.0).abs() < 1e-15);
        assert_eq!(Projective::new(2000.0), Projective::Reciprocal(1.0 / 2000.0));
    }
}
