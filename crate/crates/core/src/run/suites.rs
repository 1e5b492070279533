//! Sweeps and refinement studies shared by the CLI and the test suites.

use rand::Rng;
use serde::Serialize;

use crate::bending::{bend, RuledBendingSpec};
use crate::confocal::{ParamPoint, QuadricKind, RulingFamily};
use crate::ivory::{
    build_ivory_motion, flipped_motion, gram_residual, ivory_length_residual, motion_residual, ruling_angle_residual,
    ruling_length_residual, segment_ruling_angle_residual, tangency_symmetry_residual, PointPair,
};
use crate::linalg::{max_abs, reflection};
use crate::rolling::{connection_form_with_error, flatness_residual, rolling_field, wedge_identity_residual, Grid2D, SurfacePatch};
use crate::sampling;
use crate::tangency::{
    factorization_residual, integrability_residual, reflection_residual_for, solve_tangency, MFamily,
};
use crate::{Result, Vec3};

use RulingFamily::{U, V};

/// Maxima of the static identity residuals over a random sweep.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StaticSweep {
    pub samples: usize,
    pub ivory_length: f64,
    pub ruling_length: f64,
    pub segment_ruling_angle: f64,
    pub ruling_angle: f64,
    pub tangency_symmetry: f64,
    pub gram: f64,
    pub motion: f64,
    pub orthogonality: f64,
    /// Motions skipped because the frames were degenerate.
    pub degenerate_frames: usize,
}

pub fn static_sweep(kind: QuadricKind, samples: usize, rng_seed: u64) -> Result<StaticSweep> {
    let mut rng = sampling::rng(rng_seed);
    let mut out = StaticSweep { samples, ..Default::default() };
    for _ in 0..samples {
        let f = sampling::family(&mut rng, kind);
        let z = sampling::spectral(&mut rng, &f);
        let p0 = sampling::param_point(&mut rng, &f);
        let p1 = sampling::param_point(&mut rng, &f);
        let pair = PointPair::new(&f, z, p0, p1)?;
        out.ivory_length = out.ivory_length.max(ivory_length_residual(&pair));
        out.tangency_symmetry = out.tangency_symmetry.max(tangency_symmetry_residual(&pair));
        for fam0 in [U, V] {
            out.ruling_length = out.ruling_length.max(ruling_length_residual(&pair, fam0)?);
            out.segment_ruling_angle = out.segment_ruling_angle.max(segment_ruling_angle_residual(&pair, fam0)?);
            for fam1 in [U, V] {
                out.ruling_angle = out.ruling_angle.max(ruling_angle_residual(&pair, fam0, fam1)?);
                out.gram = out.gram.max(gram_residual(&pair, fam0, fam1)?);
                match build_ivory_motion(&pair, fam0, fam1) {
                    Ok(m) => {
                        out.motion = out.motion.max(motion_residual(&pair, fam0, fam1, &m)?);
                        out.orthogonality = out.orthogonality.max(m.orthogonality_defect());
                    }
                    Err(_) => out.degenerate_frames += 1,
                }
            }
        }
    }
    Ok(out)
}

/// Tangency-conditional identities, the ruling flip, and negative controls.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TangencySweep {
    pub samples: usize,
    pub tangency: f64,
    pub reflection: f64,
    pub factorization: f64,
    pub integrability: f64,
    /// How well `R S` (with `S` the reflection in the tangent plane) maps the
    /// quadruple of the other partner ruling.
    pub flip_reflection: f64,
    /// Flips where `det R` did not change sign.
    pub flip_det_mismatches: usize,
    /// Entrywise `|R' − R S|`; ill-posed when a frame is nearly rank one.
    pub flip_entrywise: f64,
    /// Residuals on perturbed configurations, which should stay large.
    pub control_reflection: ControlStats,
    pub control_factorization: ControlStats,
    pub control_integrability: ControlStats,
}

/// Distribution summary of negative-control residuals.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ControlStats {
    pub count: usize,
    pub median: f64,
    /// Fraction of controls whose residual fell below the threshold.
    pub fraction_below: f64,
    pub threshold: f64,
}

impl ControlStats {
    pub fn new(mut values: Vec<f64>, threshold: f64) -> Self {
        values.sort_by(f64::total_cmp);
        let count = values.len();
        let median = if count == 0 { f64::NAN } else { values[count / 2] };
        let below = values.iter().filter(|&&v| !(v >= threshold)).count();
        Self { count, median, fraction_below: below as f64 / count.max(1) as f64, threshold }
    }
}

/// Offset applied to `u1` and along the normal in the negative controls.
pub const CONTROL_OFFSET: f64 = 0.1;
/// Controls are expected to leave residuals at least this large.
pub const CONTROL_THRESHOLD: f64 = 1e-3;

pub fn tangency_sweep(kind: QuadricKind, samples: usize, rng_seed: u64) -> Result<TangencySweep> {
    let mut rng = sampling::rng(rng_seed);
    let mut out = TangencySweep { samples, ..Default::default() };
    let (mut ctl_refl, mut ctl_fact, mut ctl_int) = (vec![], vec![], vec![]);
    let mut done = 0;
    while done < samples {
        let f = sampling::family(&mut rng, kind);
        let z = sampling::spectral(&mut rng, &f);
        let ParamPoint::Finite { u: u0, v: v0 } = sampling::param_point(&mut rng, &f) else { continue };
        let v1 = rng.random_range(-sampling::PARAM_BOX..sampling::PARAM_BOX);
        let Ok(Some(c)) = solve_tangency(&f, z, u0, v0, v1).map(|s| s.config()) else { continue };
        done += 1;
        out.tangency = out.tangency.max(c.tangency_residual());
        for which in [MFamily::M, MFamily::MPrime] {
            out.reflection = out.reflection.max(reflection_residual_for(&c, which)?);
            if let Ok(r) = integrability_residual(&c, which) {
                out.integrability = out.integrability.max(r);
            }
            if let Ok(r) = integrability_residual(&c.with_displaced_base(CONTROL_OFFSET), which) {
                ctl_int.push(r);
            }
        }
        out.factorization = out.factorization.max(factorization_residual(&c));
        if let Ok(off) = c.with_u1_shift(CONTROL_OFFSET) {
            ctl_refl.push(reflection_residual_for(&off, MFamily::M)?);
            ctl_fact.push(factorization_residual(&off));
        }
        let Some(p1) = c.p1() else { continue };
        let pair = PointPair::new(&f, z, ParamPoint::new(u0, v0), p1)?;
        let s = reflection(&c.n0);
        for fam0 in [U, V] {
            for fam1 in [U, V] {
                let Ok(a) = build_ivory_motion(&pair, fam0, fam1) else { continue };
                let predicted = flipped_motion(&pair, &a);
                out.flip_reflection = out.flip_reflection.max(motion_residual(&pair, fam0, fam1.other(), &predicted)?);
                if let Ok(b) = build_ivory_motion(&pair, fam0, fam1.other()) {
                    out.flip_entrywise = out.flip_entrywise.max(max_abs(&(b.rotation - a.rotation * s)));
                    if b.det_sign != -a.det_sign {
                        out.flip_det_mismatches += 1;
                    }
                }
            }
        }
    }
    out.control_reflection = ControlStats::new(ctl_refl, CONTROL_THRESHOLD);
    out.control_factorization = ControlStats::new(ctl_fact, CONTROL_THRESHOLD);
    out.control_integrability = ControlStats::new(ctl_int, CONTROL_THRESHOLD);
    Ok(out)
}

/// Max wedge identity residual over random vectors.
pub fn wedge_sweep(samples: usize, rng_seed: u64) -> f64 {
    let mut rng = sampling::rng(rng_seed);
    let mut v = || Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
    (0..samples).map(|_| wedge_identity_residual(&v(), &v(), &v(), &v())).fold(0.0, f64::max)
}

/// Structure-equation residuals of a bent seed's rolling under refinement.
#[derive(Clone, Debug, Serialize)]
pub struct FlatnessStudy {
    pub nodes: Vec<usize>,
    pub curvature: Vec<f64>,
    pub torsion: Vec<f64>,
    pub curvature_ratios: Vec<f64>,
    pub torsion_ratios: Vec<f64>,
}

/// Rolls the quadric over the bending on side `epsilon` for `levels` grids,
/// each the refinement of the previous, and measures both flatness residuals
/// of the finite-difference connection form.
pub fn flatness_study(spec: &RuledBendingSpec, grid: Grid2D, epsilon: i8, levels: usize) -> Result<FlatnessStudy> {
    let mut g = grid;
    let (mut nodes, mut curvature, mut torsion) = (vec![], vec![], vec![]);
    for _ in 0..levels {
        let seed = bend(spec, g)?;
        let base = SurfacePatch::quadric(&spec.family, 0.0, g)?;
        let field = rolling_field(&base, &seed.patch, epsilon)?;
        let (form, _) = connection_form_with_error(&field, &base);
        let (c, t) = flatness_residual(&form, &base);
        nodes.push(g.nu);
        curvature.push(c);
        torsion.push(t);
        g = g.refined();
    }
    let ratios = |e: &[f64]| e.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(FlatnessStudy { curvature_ratios: ratios(&curvature), torsion_ratios: ratios(&torsion), nodes, curvature, torsion })
}
