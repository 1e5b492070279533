//! JSON run configuration.

use serde::{Deserialize, Serialize};

use crate::backlund::{Seed, TransportSpec};
use crate::bending::{KappaExpr, RuledBendingSpec};
use crate::confocal::{ConfocalFamily, QuadricKind, RulingFamily};
use crate::error::{Error, Result};
use crate::motion::RigidMotion;
use crate::ode::StepPolicy;
use crate::rolling::Grid2D;
use crate::tangency::MFamily;
use crate::{Mat3, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadricConfig {
    pub kind: QuadricKind,
    pub a1: f64,
    pub a2: f64,
    /// Required for the hyperboloid, ignored for the paraboloid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a3: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub u0_min: f64,
    pub u0_max: f64,
    pub v0_min: f64,
    pub v0_max: f64,
    pub nu: usize,
    pub nv: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedConfig {
    Trivial,
    Rigid {
        /// Rows of the orthogonal matrix.
        rotation: [[f64; 3]; 3],
        translation: [f64; 3],
    },
    Bent {
        kappa: KappaExpr,
        sigma: i8,
        u_ref: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiccatiConfig {
    /// Initial state at the grid origin (`v1`, or `u1` for the `v` family).
    pub v1_init: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl Default for RiccatiConfig {
    fn default() -> Self {
        let p = StepPolicy::default();
        Self { v1_init: 0.0, rel_tol: p.rel_tol, abs_tol: p.abs_tol, max_step: p.max_step }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub samples: usize,
    pub rng_seed: u64,
    /// Coarsest grid size and number of levels of the flatness study.
    pub flatness_nodes: usize,
    pub flatness_levels: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { samples: 10_000, rng_seed: 20_240_601, flatness_nodes: 11, flatness_levels: 4 }
    }
}

/// Declared tolerances; `--tol-scale` multiplies all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub static_identities: f64,
    pub motion: f64,
    pub tangency_identities: f64,
    pub wedge: f64,
    /// Allowed distance of a convergence ratio from 4.
    pub ratio_band: f64,
    pub path_independence: f64,
    pub leaf_isometry: f64,
    pub congruence: f64,
    pub inversion: f64,
    pub degenerate: f64,
    pub state_variance: f64,
    pub archimedes: f64,
    pub slice: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            static_identities: 1e-10,
            motion: 1e-9,
            tangency_identities: 1e-9,
            wedge: 1e-13,
            ratio_band: 0.5,
            path_independence: 1e-6,
            leaf_isometry: 1e-4,
            congruence: 1e-6,
            inversion: 1e-6,
            degenerate: 1e-8,
            state_variance: 1e-10,
            archimedes: 1e-5,
            slice: 1e-14,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            static_identities: self.static_identities * k,
            motion: self.motion * k,
            tangency_identities: self.tangency_identities * k,
            wedge: self.wedge * k,
            ratio_band: self.ratio_band * k,
            path_independence: self.path_independence * k,
            leaf_isometry: self.leaf_isometry * k,
            congruence: self.congruence * k,
            inversion: self.inversion * k,
            degenerate: self.degenerate * k,
            state_variance: self.state_variance * k,
            archimedes: self.archimedes * k,
            slice: self.slice * k,
        }
    }

    fn all(&self) -> [(&'static str, f64); 13] {
        [
            ("static_identities", self.static_identities),
            ("motion", self.motion),
            ("tangency_identities", self.tangency_identities),
            ("wedge", self.wedge),
            ("ratio_band", self.ratio_band),
            ("path_independence", self.path_independence),
            ("leaf_isometry", self.leaf_isometry),
            ("congruence", self.congruence),
            ("inversion", self.inversion),
            ("degenerate", self.degenerate),
            ("state_variance", self.state_variance),
            ("archimedes", self.archimedes),
            ("slice", self.slice),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchimedesConfig {
    pub n: usize,
}

impl Default for ArchimedesConfig {
    fn default() -> Self {
        Self { n: 1000 }
    }
}

/// File names inside the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Report file; defaults to `<command>_report.json`.
    pub report_path: Option<String>,
    /// Mesh prefix; the transform writes `<prefix>_seed.csv` and `<prefix>_leaf.csv`.
    pub mesh_path: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { report_path: None, mesh_path: "mesh".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub quadric: QuadricConfig,
    pub z: f64,
    pub grid: GridConfig,
    pub seed: SeedConfig,
    #[serde(default = "default_epsilon")]
    pub epsilon: i8,
    #[serde(default = "default_ruling")]
    pub ruling_family: RulingFamily,
    #[serde(default)]
    pub riccati: RiccatiConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub archimedes: ArchimedesConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_epsilon() -> i8 {
    1
}

fn default_ruling() -> RulingFamily {
    RulingFamily::U
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl Default for RunConfig {
    /// A bent hyperboloid patch with a well-behaved leaf.
    fn default() -> Self {
        Self {
            quadric: QuadricConfig { kind: QuadricKind::HyperboloidOneSheet, a1: 4.0, a2: -1.0, a3: Some(1.0) },
            z: 0.4,
            grid: GridConfig { u0_min: 1.0, u0_max: 1.1, v0_min: -0.5, v0_max: -0.4, nu: 41, nv: 41 },
            seed: SeedConfig::Bent { kappa: KappaExpr::constant(0.3), sigma: 1, u_ref: 1.2 },
            epsilon: -1,
            ruling_family: RulingFamily::U,
            riccati: RiccatiConfig { v1_init: -0.3, ..Default::default() },
            sweep: SweepConfig::default(),
            tolerances: Tolerances::default(),
            archimedes: ArchimedesConfig::default(),
            outputs: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn family(&self) -> Result<ConfocalFamily> {
        let q = &self.quadric;
        let built = match q.kind {
            QuadricKind::HyperboloidOneSheet => {
                let a3 = q.a3.ok_or_else(|| invalid("quadric.a3", "required for the hyperboloid"))?;
                ConfocalFamily::hyperboloid(q.a1, q.a2, a3)
            }
            QuadricKind::HyperbolicParaboloid => ConfocalFamily::paraboloid(q.a1, q.a2),
        };
        built.map_err(|e| {
            let field = if !(q.a1 > 0.0) {
                "quadric.a1"
            } else if !(q.a2 < 0.0) {
                "quadric.a2"
            } else {
                "quadric.a3"
            };
            invalid(field, e)
        })
    }

    pub fn grid(&self) -> Result<Grid2D> {
        let g = &self.grid;
        Grid2D::new(g.u0_min, g.u0_max, g.v0_min, g.v0_max, g.nu, g.nv).map_err(|e| invalid("grid", e))
    }

    pub fn policy(&self) -> StepPolicy {
        StepPolicy {
            rel_tol: self.riccati.rel_tol,
            abs_tol: self.riccati.abs_tol,
            max_step: self.riccati.max_step,
            ..StepPolicy::default()
        }
    }

    pub fn transport_spec(&self) -> TransportSpec {
        TransportSpec {
            z: self.z,
            flavor: MFamily::from_ruling(self.ruling_family),
            init: self.riccati.v1_init,
            policy: self.policy(),
        }
    }

    pub fn bending_spec(&self) -> Result<Option<RuledBendingSpec>> {
        match &self.seed {
            SeedConfig::Bent { kappa, sigma, u_ref } => {
                Ok(Some(RuledBendingSpec { family: self.family()?, u_ref: *u_ref, kappa: kappa.clone(), sigma: *sigma }))
            }
            _ => Ok(None),
        }
    }

    pub fn build_seed(&self) -> Result<Seed> {
        let family = self.family()?;
        let grid = self.grid()?;
        match &self.seed {
            SeedConfig::Trivial => Seed::trivial(&family, grid),
            SeedConfig::Rigid { rotation, translation } => {
                let r = Mat3::from_fn(|i, j| rotation[i][j]);
                Seed::rigid(&family, grid, RigidMotion::new(r, Vec3::from(*translation)))
            }
            SeedConfig::Bent { .. } => {
                let spec = self.bending_spec()?.expect("bent seed");
                Seed::bent(&spec, grid, self.epsilon)
            }
        }
    }

    /// Re-checks every numeric constraint; messages name the offending field.
    pub fn validate(&self) -> Result<()> {
        let family = self.family()?;
        if !self.z.is_finite() {
            return Err(invalid("z", "must be finite"));
        }
        family.spectral(self.z).map_err(|e| invalid("z", e))?;
        self.grid()?;
        if self.epsilon != 1 && self.epsilon != -1 {
            return Err(invalid("epsilon", "must be 1 or -1"));
        }
        match &self.seed {
            SeedConfig::Trivial => {}
            SeedConfig::Rigid { rotation, translation } => {
                let r = Mat3::from_fn(|i, j| rotation[i][j]);
                let defect = crate::linalg::max_abs(&(r.transpose() * r - Mat3::identity()));
                if !(defect <= 1e-9) {
                    return Err(invalid("seed.rotation", format!("not orthogonal (defect {defect:.3e})")));
                }
                if translation.iter().any(|t| !t.is_finite()) {
                    return Err(invalid("seed.translation", "must be finite"));
                }
            }
            SeedConfig::Bent { kappa, sigma, u_ref } => {
                if *sigma != 1 && *sigma != -1 {
                    return Err(invalid("seed.sigma", "must be 1 or -1"));
                }
                if !u_ref.is_finite() {
                    return Err(invalid("seed.u_ref", "must be finite"));
                }
                if kappa.poly.iter().any(|c| !c.is_finite())
                    || kappa.trig.iter().any(|t| !(t.amp.is_finite() && t.freq.is_finite() && t.phase.is_finite()))
                {
                    return Err(invalid("seed.kappa", "coefficients must be finite"));
                }
            }
        }
        let r = &self.riccati;
        if !r.v1_init.is_finite() {
            return Err(invalid("riccati.v1_init", "must be finite"));
        }
        for (name, v) in [("riccati.rel_tol", r.rel_tol), ("riccati.abs_tol", r.abs_tol), ("riccati.max_step", r.max_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive"));
            }
        }
        if self.sweep.samples == 0 {
            return Err(invalid("sweep.samples", "must be at least 1"));
        }
        if self.sweep.flatness_nodes < 3 || self.sweep.flatness_levels < 2 {
            return Err(invalid("sweep.flatness_nodes", "need at least 3 nodes and 2 levels"));
        }
        for (name, v) in self.tolerances.all() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(&format!("tolerances.{name}"), "must be a finite non-negative number"));
            }
        }
        if self.archimedes.n < 2 {
            return Err(invalid("archimedes.n", "need at least 2 slices"));
        }
        if self.outputs.mesh_path.is_empty() {
            return Err(invalid("outputs.mesh_path", "must not be empty"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_and_validates() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let mut cfg = RunConfig::default();
        cfg.quadric.a2 = 0.5;
        let text = serde_json::to_string(&cfg).unwrap();
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("quadric.a2"), "{err}");
        let err = RunConfig::from_json(r#"{"quadric": 3}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
