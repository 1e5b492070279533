//! Random admissible configurations for the identity sweeps.
//!
//! Sweeps use `ChaCha8Rng` so that a seed reproduces the same samples on every
//! platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::confocal::{ConfocalFamily, ParamPoint, QuadricKind, RulingFamily};

pub type SweepRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SweepRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parameter box `[-PARAM_BOX, PARAM_BOX]²`.
pub const PARAM_BOX: f64 = 3.0;
/// Minimal `|u − v|` for hyperboloid samples.
pub const MIN_GAP: f64 = 0.1;

/// Random semiaxes with `a2 < 0 < a1, a3`, magnitudes in `[0.5, 5]`.
pub fn family<R: Rng>(rng: &mut R, kind: QuadricKind) -> ConfocalFamily {
    let a1 = rng.random_range(0.5..5.0);
    let a2 = -rng.random_range(0.5..5.0);
    match kind {
        QuadricKind::HyperboloidOneSheet => {
            ConfocalFamily::hyperboloid(a1, a2, rng.random_range(0.5..5.0)).expect("admissible semiaxes")
        }
        QuadricKind::HyperbolicParaboloid => ConfocalFamily::paraboloid(a1, a2).expect("admissible semiaxes"),
    }
}

/// `z` uniform in the middle 80% of the admissible interval.
pub fn spectral<R: Rng>(rng: &mut R, family: &ConfocalFamily) -> f64 {
    let (lo, hi) = family.z_range();
    let pad = 0.1 * (hi - lo);
    rng.random_range(lo + pad..hi - pad)
}

pub fn param_point<R: Rng>(rng: &mut R, family: &ConfocalFamily) -> ParamPoint {
    loop {
        let u = rng.random_range(-PARAM_BOX..PARAM_BOX);
        let v = rng.random_range(-PARAM_BOX..PARAM_BOX);
        if !family.is_hyperboloid() || (u - v).abs() >= MIN_GAP {
            return ParamPoint::new(u, v);
        }
    }
}

pub fn ruling_family<R: Rng>(rng: &mut R) -> RulingFamily {
    if rng.random_bool(0.5) {
        RulingFamily::U
    } else {
        RulingFamily::V
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_admissible_and_reproducible() {
        let mut a = rng(7);
        let mut b = rng(7);
        for kind in [QuadricKind::HyperboloidOneSheet, QuadricKind::HyperbolicParaboloid] {
            for _ in 0..200 {
                let f = family(&mut a, kind);
                let z = spectral(&mut a, &f);
                assert!(f.spectral(z).is_ok());
                let p = param_point(&mut a, &f);
                assert!(f.eval(z, p).is_ok());
                let g = family(&mut b, kind);
                assert_eq!(f, g);
                assert_eq!(z, spectral(&mut b, &g));
                assert_eq!(p, param_point(&mut b, &g));
            }
        }
    }
}
