//! Configuration-driven drivers behind the `backlund` binary.
//!
//! Each command returns a [`Report`] and an exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | every check passed |
//! | 1 | invalid configuration or arguments (including `z = 0` for a transform) |
//! | 2 | a tolerance was exceeded, or blowups covered more than 10% of the grid |
//! | 3 | degenerate configuration (frames, immersion, bending validity, ...) |
//!
//! Reports contain no timestamps, so identical configurations give
//! byte-identical files.

pub mod config;
pub mod suites;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::archimedes::{
    balance_moments, convergence_ratio, segment_centroid, segment_centroid_xy, segment_triangle_ratio, BalanceLedger,
};
use crate::backlund::{degenerate_leaf_stats, inversion_check, transport, verify_leaf, LeafPatch, Seed};
use crate::confocal::QuadricKind;
use crate::error::{Error, Result};
use crate::rolling::Grid2D;
use crate::tangency::Coord;
pub use config::RunConfig;
use config::Tolerances;

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "BACKLUND_OUT_DIR";
/// Output directory when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT_DIR: &str = "backlund-out";
/// Blowups on more than this fraction of the grid fail a transform.
pub const MAX_BLOWUP_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub error: Option<String>,
    pub exit_code: i32,
    pub pass: bool,
}

impl Report {
    fn new(command: &str, config_hash: String) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash,
            checks: vec![],
            metrics: BTreeMap::new(),
            notes: vec![],
            error: None,
            exit_code: 0,
            pass: true,
        }
    }

    pub fn at_most(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        let pass = value <= bound;
        self.push(name.into(), value, bound, Relation::AtMost, pass);
    }

    pub fn at_least(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        let pass = value >= bound;
        self.push(name.into(), value, bound, Relation::AtLeast, pass);
    }

    /// `|ratio − 4| ≤ band`.
    pub fn second_order(&mut self, name: impl Into<String>, ratio: f64, band: f64) {
        self.at_most(name, (ratio - 4.0).abs(), band);
    }

    fn push(&mut self, name: String, value: f64, bound: f64, relation: Relation, pass: bool) {
        self.pass &= pass;
        self.checks.push(Check { name, value, bound, relation, pass });
    }

    pub fn metric(&mut self, name: impl Into<String>, value: impl Serialize) {
        self.metrics.insert(name.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Exit code for an error raised after the configuration was accepted.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::SpectralZero | Error::Io(_) | Error::Domain(_) | Error::Kind(_) => 1,
        Error::Blowup { .. } => 2,
        Error::DegenerateFrame { .. }
        | Error::Degenerate(_)
        | Error::Immersion { .. }
        | Error::NotIsometric { .. }
        | Error::GridTooCoarse { .. }
        | Error::Validity(_)
        | Error::NoSolution(_)
        | Error::Quadrature(_) => 3,
    }
}

/// SHA-256 of the effective configuration, hex encoded.
pub fn config_hash(cfg: &RunConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        write!(hex, "{b:02x}").expect("write to string");
    }
    hex
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Identities,
    Transform,
    Archimedes,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Identities => "identities",
            Command::Transform => "transform",
            Command::Archimedes => "archimedes",
        }
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol_scale: Option<f64>,
    /// Slice count for `archimedes`.
    pub n: Option<usize>,
}

/// `--out`, then the environment, then [`DEFAULT_OUT_DIR`].
pub fn output_dir(cli: Option<&Path>) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: Option<Report>,
    pub report_path: Option<PathBuf>,
    /// Human-readable reason for a non-zero code.
    pub message: Option<String>,
}

impl Outcome {
    fn rejected(message: String) -> Self {
        Self { code: 1, report: None, report_path: None, message: Some(message) }
    }
}

/// Loads and validates the configuration with the overrides applied.
pub fn effective_config(opts: &Options) -> Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.sweep.rng_seed = seed;
    }
    if let Some(n) = opts.n {
        cfg.archimedes.n = n;
    }
    if let Some(k) = opts.tol_scale {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::Config(format!("--tol-scale: must be a finite non-negative number, got {k}")));
        }
        cfg.tolerances = cfg.tolerances.scaled(k);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a command end to end: loads the configuration, computes, writes the
/// report (and meshes), and returns the exit code.
pub fn execute(command: Command, opts: &Options) -> Outcome {
    let cfg = match effective_config(opts) {
        Ok(c) => c,
        Err(e) => return Outcome::rejected(e.to_string()),
    };
    let out_dir = output_dir(opts.out.as_deref());
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        return Outcome::rejected(format!("cannot create {}: {e}", out_dir.display()));
    }
    let mut report = Report::new(command.name(), config_hash(&cfg));
    let result = match command {
        Command::Identities => cmd_identities(&cfg, &mut report),
        Command::Transform => cmd_transform(&cfg, &mut report).and_then(|leaf| {
            let (seed_csv, leaf_csv) = leaf.map(|(seed, leaf)| meshes(&seed, &leaf)).unwrap_or_default();
            let prefix = &cfg.outputs.mesh_path;
            std::fs::write(out_dir.join(format!("{prefix}_seed.csv")), seed_csv)?;
            std::fs::write(out_dir.join(format!("{prefix}_leaf.csv")), leaf_csv)?;
            Ok(())
        }),
        Command::Archimedes => cmd_archimedes(&cfg, &mut report),
    };
    let mut message = None;
    report.exit_code = match result {
        Ok(()) if report.pass => 0,
        Ok(()) => {
            let failed: Vec<&str> = report.failed_checks().map(|c| c.name.as_str()).collect();
            message = Some(format!("tolerance exceeded: {}", failed.join(", ")));
            2
        }
        Err(e) => {
            report.pass = false;
            report.error = Some(e.to_string());
            message = Some(e.to_string());
            exit_code(&e)
        }
    };
    let name = cfg.outputs.report_path.clone().unwrap_or_else(|| format!("{}_report.json", command.name()));
    let path = out_dir.join(name);
    if let Err(e) = std::fs::write(&path, report.to_json()) {
        return Outcome { code: 1, report: Some(report), report_path: None, message: Some(e.to_string()) };
    }
    Outcome { code: report.exit_code, report: Some(report), report_path: Some(path), message }
}

const KINDS: [(QuadricKind, &str); 2] =
    [(QuadricKind::HyperboloidOneSheet, "hyperboloid"), (QuadricKind::HyperbolicParaboloid, "paraboloid")];

/// Static, motion, tangency-conditional, wedge and flatness suites.
pub fn cmd_identities(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let tol = &cfg.tolerances;
    let n = cfg.sweep.samples;
    for (k, (kind, name)) in KINDS.iter().enumerate() {
        let seed = cfg.sweep.rng_seed.wrapping_add(2 * k as u64);
        let s = suites::static_sweep(*kind, n, seed)?;
        for (id, v) in [
            ("ivory_length", s.ivory_length),
            ("ruling_length", s.ruling_length),
            ("segment_ruling_angle", s.segment_ruling_angle),
            ("ruling_angle", s.ruling_angle),
            ("tangency_symmetry", s.tangency_symmetry),
            ("gram", s.gram),
        ] {
            report.at_most(format!("{name}.{id}"), v, tol.static_identities);
        }
        report.at_most(format!("{name}.motion"), s.motion, tol.motion);
        report.at_most(format!("{name}.motion_orthogonality"), s.orthogonality, tol.motion);
        report.metric(format!("{name}.static"), &s);

        let t = suites::tangency_sweep(*kind, n, seed + 1)?;
        report.at_most(format!("{name}.tangency"), t.tangency, tol.tangency_identities);
        report.at_most(format!("{name}.reflection"), t.reflection, tol.tangency_identities);
        report.at_most(format!("{name}.factorization"), t.factorization, tol.tangency_identities);
        report.at_most(format!("{name}.integrability"), t.integrability, tol.tangency_identities);
        report.at_most(format!("{name}.flip_reflection"), t.flip_reflection, tol.motion);
        report.at_most(format!("{name}.flip_det_mismatches"), t.flip_det_mismatches as f64, 0.0);
        for (id, c) in [
            ("reflection", &t.control_reflection),
            ("factorization", &t.control_factorization),
            ("integrability", &t.control_integrability),
        ] {
            report.at_least(format!("{name}.control_{id}_median"), c.median, suites::CONTROL_THRESHOLD);
        }
        report.metric(format!("{name}.tangency"), &t);
    }
    let wedge = suites::wedge_sweep(n, cfg.sweep.rng_seed.wrapping_add(7));
    report.at_most("wedge", wedge, tol.wedge);

    let spec = match cfg.bending_spec()? {
        Some(s) => s,
        None => config::RunConfig::default().bending_spec()?.expect("default seed is bent"),
    };
    let g = &cfg.grid;
    let nodes = cfg.sweep.flatness_nodes;
    let coarse = Grid2D::new(g.u0_min, g.u0_max, g.v0_min, g.v0_max, nodes, nodes)?;
    // The natural side rolls with an exactly flat form; the other side is the
    // informative one.
    let eps = -spec.sigma;
    let study = suites::flatness_study(&spec, coarse, eps, cfg.sweep.flatness_levels)?;
    for (k, r) in study.curvature_ratios.iter().enumerate() {
        report.second_order(format!("flatness.curvature_ratio_{k}"), *r, tol.ratio_band);
    }
    for (k, r) in study.torsion_ratios.iter().enumerate() {
        report.second_order(format!("flatness.torsion_ratio_{k}"), *r, tol.ratio_band);
    }
    report.metric("flatness", &study);
    report.metric("samples_per_kind", n);
    report.notes.push(format!(
        "negative controls offset u1 (or the base point along the normal) by {}; their medians must stay above {}",
        suites::CONTROL_OFFSET,
        suites::CONTROL_THRESHOLD
    ));
    Ok(())
}

fn coord(c: Coord) -> f64 {
    c.finite().unwrap_or(f64::INFINITY)
}

/// CSV meshes of the seed and the leaf: `u0,v0,x,y,z,u1,v1`.
pub fn meshes(seed: &Seed, leaf: &LeafPatch) -> (String, String) {
    let header = "u0,v0,x,y,z,u1,v1\n";
    let (mut a, mut b) = (header.to_string(), header.to_string());
    let g = seed.grid;
    for (i, j) in g.nodes() {
        let x = seed.patch.jets[g.idx(i, j)].x;
        let (u1, v1, y) = match leaf.node(i, j) {
            Some(n) => (coord(n.u1()), coord(n.v1()), n.leaf),
            None => (f64::NAN, f64::NAN, crate::Vec3::repeat(f64::NAN)),
        };
        let (u0, v0) = (g.u(i), g.v(j));
        writeln!(a, "{u0},{v0},{},{},{},{u1},{v1}", x[0], x[1], x[2]).expect("write to string");
        writeln!(b, "{u0},{v0},{},{},{},{u1},{v1}", y[0], y[1], y[2]).expect("write to string");
    }
    (a, b)
}

/// Transports the configured seed. Returns the seed and leaf for the meshes.
pub fn cmd_transform(cfg: &RunConfig, report: &mut Report) -> Result<Option<(Seed, LeafPatch)>> {
    if cfg.z == 0.0 {
        return Err(Error::SpectralZero);
    }
    let tol: &Tolerances = &cfg.tolerances;
    let seed = cfg.build_seed()?;
    let spec = cfg.transport_spec();
    let leaf = transport(&seed, &spec)?;
    report.metric("seed_kind", seed.kind);
    report.metric("nodes", seed.grid.len());
    report.metric("blowups", leaf.blowups.len());
    report.metric("blowup_fraction", leaf.blowup_fraction());
    if let Some(b) = leaf.blowups.first() {
        report.metric("first_blowup", b);
    }
    if leaf.blowup_fraction() > MAX_BLOWUP_FRACTION {
        report.notes.push(format!("blowups on {} of {} nodes", leaf.blowups.len(), seed.grid.len()));
        return Err(Error::Blowup { i: leaf.blowups[0].i, j: leaf.blowups[0].j });
    }
    report.at_most("path_independence", leaf.path_difference, tol.path_independence);
    report.at_most("tangency", leaf.max_tangency(), tol.tangency_identities);
    if seed.connection.is_zero() {
        let stats = degenerate_leaf_stats(&seed, &leaf);
        report.at_most("degenerate.state_variance", stats.state_variance, tol.state_variance);
        report.at_most("degenerate.collinearity", stats.collinearity, tol.degenerate);
        report.at_most("degenerate.implicit", stats.implicit, tol.degenerate);
        report.notes.push("degenerate leaf: the seed is congruent to the quadric, so the leaf is a single ruling of the partner quadric".into());
        report.metric("degenerate", stats);
    } else {
        let rep = verify_leaf(&seed, &leaf)?;
        report.at_most("leaf.isometry_fd", rep.isometry_fd, tol.leaf_isometry);
        report.at_most("leaf.weingarten", rep.weingarten, tol.leaf_isometry);
        report.at_most("leaf.isometry_analytic", rep.isometry_analytic, tol.congruence);
        report.at_most("leaf.congruence_seed", rep.congruence_seed, tol.congruence);
        report.at_most("leaf.congruence_leaf", rep.congruence_leaf, tol.congruence);
        report.at_most("leaf.ivory", rep.ivory_leaf, tol.inversion);
        report.at_most("leaf.inversion", inversion_check(&seed, &leaf)?, tol.inversion);
        report.metric("leaf", rep);
    }
    Ok(Some((seed, leaf)))
}

/// Slice counts from which the convergence ratios and the absolute errors are checked.
pub const ASYMPTOTIC_SLICES: usize = 100;
pub const ACCURATE_SLICES: usize = 1000;

/// The balance ledger and the segment quadratures at `n` and `2n` slices.
pub fn cmd_archimedes(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let tol = &cfg.tolerances;
    let n = cfg.archimedes.n;
    if n < 2 {
        return Err(Error::Config(format!("archimedes.n: need at least 2 slices, got {n}")));
    }
    let ledger = BalanceLedger::new(n);
    let (m_left, m_right, area) = balance_moments(n);
    report.at_most("slice_factorization", ledger.max_slice_residual, tol.slice);
    report.at_most("moment_balance", (m_left - m_right).abs(), tol.slice.max(1e-15 * n as f64));
    let ratio = segment_triangle_ratio(n);
    let (cx, cy) = segment_centroid_xy(n);
    report.at_most("centroid_abscissa", cx.abs(), tol.slice);
    let area_ratio = convergence_ratio(|k| balance_moments(k).2, 1.0 / 3.0, n);
    let segment_ratio = convergence_ratio(segment_triangle_ratio, 4.0 / 3.0, n);
    let centroid_ratio = convergence_ratio(segment_centroid, 0.6, n);
    if n >= ASYMPTOTIC_SLICES {
        report.second_order("area_convergence", area_ratio, tol.ratio_band);
        report.second_order("segment_convergence", segment_ratio, tol.ratio_band);
        report.second_order("centroid_convergence", centroid_ratio, tol.ratio_band);
    } else {
        report.notes.push(format!("n = {n} is below {ASYMPTOTIC_SLICES}; convergence ratios are reported but not checked"));
    }
    if n >= ACCURATE_SLICES {
        report.at_most("area_error", (area - 1.0 / 3.0).abs(), tol.archimedes);
        report.at_most("segment_error", (ratio - 4.0 / 3.0).abs(), tol.archimedes);
        report.at_most("centroid_error", (cy - 0.6).abs(), tol.archimedes);
    } else {
        report.notes.push(format!("n = {n} is below {ACCURATE_SLICES}; accuracy is reported but not checked"));
    }
    report.metric(
        "ledger",
        json!({
            "n": n,
            "moment_left": m_left,
            "moment_right": m_right,
            "max_slice_residual": ledger.max_slice_residual,
            "first_slice": ledger.slices.first(),
            "last_slice": ledger.slices.last(),
        }),
    );
    report.metric("area_estimate", area);
    report.metric("segment_triangle_ratio", ratio);
    report.metric("centroid", [cx, cy]);
    report.metric("ratios", json!({ "area": area_ratio, "segment": segment_ratio, "centroid": centroid_ratio }));
    Ok(())
}
