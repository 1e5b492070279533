//! Riccati transport and Bäcklund leaves.
//!
//! A seed is a surface isometric to a patch of the `z = 0` quadric, given by
//! its rolling motions `(R0, t0)` at the grid nodes and a connection form
//! `ω0` evaluable anywhere. For a fixed `z ≠ 0` the state parameter `s`
//! (`v1` for the `m` flavor, `u1` for `m'`) obeys
//!
//! ```text
//! ds = −mᵀω0 / (2z),
//! ```
//!
//! a Riccati equation because `m` is quadratic in `s`. The partner parameter
//! is re-solved from the tangency constraint at every node and the leaf point
//! is `x1 = x0 + R0 V01`.

use serde::Serialize;

use crate::bending::{bend, BentSeed, RuledBendingSpec};
use crate::confocal::{ConfocalFamily, ParamPoint, RulingFamily};
use crate::error::{Error, Result};
use crate::ivory::{build_ivory_motion, PointPair};
use crate::linalg::{collinearity, ratio, rel};
use crate::motion::RigidMotion;
use crate::ode::{integrate_riccati, Projective, StepPolicy};
use crate::rolling::{
    connection_form_checked, rolling_field, Connection, GridConnection, Grid2D, Reflected, SurfacePatch,
    ZeroConnection, DEFAULT_RECONSTRUCTION_LIMIT,
};
use crate::tangency::{m_field_at, solve_tangency, solve_tangency_v1, Coord, MFamily, TangencyConfig, TangencySolve};
use crate::Vec3;

/// States beyond this magnitude at a node count as blowups.
pub const STATE_LIMIT: f64 = 1e12;
/// `|V01| > SEGMENT_LIMIT (1 + |x0|)` counts as a blowup.
pub const SEGMENT_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    Trivial,
    Rigid,
    Bent,
    Sampled,
}

/// A seed surface rolled over the `z = 0` quadric.
pub struct Seed {
    pub kind: SeedKind,
    pub family: ConfocalFamily,
    pub grid: Grid2D,
    /// The `z = 0` quadric on the grid.
    pub quadric: SurfacePatch,
    pub patch: SurfacePatch,
    pub motions: Vec<RigidMotion>,
    pub epsilon: i8,
    pub connection: Box<dyn Connection>,
    /// The bending data, for bent seeds.
    pub bent: Option<BentSeed>,
}

impl Seed {
    /// The quadric itself: identity rolling, `ω0 = 0`.
    pub fn trivial(family: &ConfocalFamily, grid: Grid2D) -> Result<Self> {
        Self::rigid(family, grid, RigidMotion::identity()).map(|s| Self { kind: SeedKind::Trivial, ..s })
    }

    /// A rigidly moved copy of the quadric.
    pub fn rigid(family: &ConfocalFamily, grid: Grid2D, motion: RigidMotion) -> Result<Self> {
        let quadric = SurfacePatch::quadric(family, 0.0, grid)?;
        let patch = quadric.moved(&motion);
        let epsilon = motion.det_sign;
        Ok(Self {
            kind: SeedKind::Rigid,
            family: *family,
            grid,
            quadric,
            patch,
            motions: vec![motion; grid.len()],
            epsilon,
            connection: Box::new(ZeroConnection),
            bent: None,
        })
    }

    /// A ruled bending, rolled on the side `epsilon`.
    pub fn bent(spec: &RuledBendingSpec, grid: Grid2D, epsilon: i8) -> Result<Self> {
        let seed = bend(spec, grid)?;
        let family = spec.family;
        let quadric = SurfacePatch::quadric(&family, 0.0, grid)?;
        let motions = grid.nodes().map(|(i, j)| seed.motion(i, j, epsilon)).collect::<Result<Vec<_>>>()?;
        let connection: Box<dyn Connection> = if epsilon == seed.natural_epsilon() {
            Box::new(seed.connection())
        } else {
            Box::new(Reflected { inner: seed.connection(), family })
        };
        Ok(Self {
            kind: SeedKind::Bent,
            family,
            grid,
            quadric,
            patch: seed.patch.clone(),
            motions,
            epsilon,
            connection,
            bent: Some(seed),
        })
    }

    /// Any isometric patch: the rolling is computed node by node and the
    /// connection form by finite differences, then interpolated.
    pub fn from_surface(family: &ConfocalFamily, patch: SurfacePatch, epsilon: i8) -> Result<Self> {
        let grid = patch.grid;
        let quadric = SurfacePatch::quadric(family, 0.0, grid)?;
        let field = rolling_field(&quadric, &patch, epsilon)?;
        let form = connection_form_checked(&field, &quadric, DEFAULT_RECONSTRUCTION_LIMIT)?;
        Ok(Self {
            kind: SeedKind::Sampled,
            family: *family,
            grid,
            quadric,
            patch,
            motions: field.motions,
            epsilon,
            connection: Box::new(GridConnection { form }),
            bent: None,
        })
    }
}

/// Parameters of one transport run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransportSpec {
    pub z: f64,
    pub flavor: MFamily,
    /// State at the grid origin (`v1` for `m`, `u1` for `m'`).
    pub init: f64,
    pub policy: StepPolicy,
}

/// Coefficients of `m` as a polynomial in the state.
fn m_coefficients(family: &ConfocalFamily, z: f64, x0: &Vec3, flavor: MFamily) -> [Vec3; 3] {
    let at = |s: f64| m_field_at(family, z, x0, flavor, s).m;
    let (m0, mp, mm) = (at(0.0), at(1.0), at(-1.0));
    [m0, 0.5 * (mp - mm), 0.5 * (mp + mm) - m0]
}

/// Riccati coefficients `c_k = −m_kᵀ ω_dir / (2z)` at `(u0, v0)`.
pub fn riccati_coefficients(
    family: &ConfocalFamily,
    z: f64,
    flavor: MFamily,
    connection: &dyn Connection,
    u0: f64,
    v0: f64,
    dir: RulingFamily,
) -> Result<[f64; 3]> {
    if z == 0.0 {
        return Err(Error::SpectralZero);
    }
    let (p, q) = connection.omega(u0, v0)?;
    let w = if dir == RulingFamily::U { p } else { q };
    if w == Vec3::zeros() {
        return Ok([0.0; 3]);
    }
    let x0 = family.point(0.0, u0, v0)?;
    let m = m_coefficients(family, z, &x0, flavor);
    let k = -0.5 / z;
    Ok([k * m[0].dot(&w), k * m[1].dot(&w), k * m[2].dot(&w)])
}

/// `∂s/∂(dir)` at `(u0, v0)` for a finite state `s`.
pub fn riccati_rhs(
    family: &ConfocalFamily,
    z: f64,
    flavor: MFamily,
    connection: &dyn Connection,
    u0: f64,
    v0: f64,
    dir: RulingFamily,
    s: f64,
) -> Result<f64> {
    if z == 0.0 {
        return Err(Error::SpectralZero);
    }
    let (p, q) = connection.omega(u0, v0)?;
    let w = if dir == RulingFamily::U { p } else { q };
    let x0 = family.point(0.0, u0, v0)?;
    Ok(-m_field_at(family, z, &x0, flavor, s).m.dot(&w) / (2.0 * z))
}

/// One node of a leaf.
#[derive(Clone, Copy, Debug)]
pub struct NodeState {
    pub state: Projective,
    pub config: TangencyConfig,
    /// `x1 = x0 + R0 V01`.
    pub leaf: Vec3,
    /// `(∂s/∂u0, ∂s/∂v0)` of the state field that produced the node.
    pub ds: [f64; 2],
}

impl NodeState {
    pub fn u1(&self) -> Coord {
        self.config.u1
    }

    pub fn v1(&self) -> Coord {
        self.config.v1
    }

    /// `(u1, v1)` when both are finite.
    pub fn partner(&self) -> Option<(f64, f64)> {
        Some((self.config.u1.finite()?, self.config.v1.finite()?))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Blowup {
    pub i: usize,
    pub j: usize,
    pub reason: String,
}

/// The transported leaf over the seed grid.
#[derive(Clone, Debug)]
pub struct LeafPatch {
    pub grid: Grid2D,
    pub family: ConfocalFamily,
    pub spec: TransportSpec,
    pub nodes: Vec<Option<NodeState>>,
    pub blowups: Vec<Blowup>,
    /// States reached along the other path order.
    pub alternate: Vec<Option<Projective>>,
    /// Max chordal distance between the two path orders.
    pub path_difference: f64,
}

impl LeafPatch {
    pub fn node(&self, i: usize, j: usize) -> Option<&NodeState> {
        self.nodes[self.grid.idx(i, j)].as_ref()
    }

    pub fn blowup_fraction(&self) -> f64 {
        self.blowups.len() as f64 / self.grid.len() as f64
    }

    /// Largest tangency residual over the assembled nodes.
    pub fn max_tangency(&self) -> f64 {
        self.nodes.iter().flatten().map(|n| n.config.tangency_residual()).fold(0.0, f64::max)
    }
}

type StateGrid = Vec<std::result::Result<Projective, String>>;

/// States along both axis-first orders. `u_first` integrates along `v0 = v_min`
/// first and then up each column.
fn transport_states(seed: &Seed, spec: &TransportSpec, u_first: bool) -> StateGrid {
    let g = seed.grid;
    let family = seed.family;
    let conn = seed.connection.as_ref();
    let mut out: StateGrid = vec![Err("not reached".into()); g.len()];
    let (n_outer, n_inner) = if u_first { (g.nu, g.nv) } else { (g.nv, g.nu) };
    let node = |outer: usize, inner: usize| if u_first { g.idx(outer, inner) } else { g.idx(inner, outer) };
    // Coordinates of the outer axis and the inner axis.
    let outer_t = |k: usize| if u_first { g.u(k) } else { g.v(k) };
    let inner_t = |k: usize| if u_first { g.v(k) } else { g.u(k) };
    let (outer_dir, inner_dir) =
        if u_first { (RulingFamily::U, RulingFamily::V) } else { (RulingFamily::V, RulingFamily::U) };
    let coeffs = |dir: RulingFamily, fixed: f64| {
        move |t: f64| {
            let (u, v) = if dir == RulingFamily::U { (t, fixed) } else { (fixed, t) };
            riccati_coefficients(&family, spec.z, spec.flavor, conn, u, v, dir)
        }
    };

    let mut axis: Vec<std::result::Result<Projective, String>> = Vec::with_capacity(n_outer);
    let mut state = Ok(Projective::new(spec.init));
    let mut h = 0.0;
    for k in 0..n_outer {
        if k > 0 {
            state = state.and_then(|s| {
                integrate_riccati(coeffs(outer_dir, inner_t(0)), outer_t(k - 1), outer_t(k), s, &spec.policy, &mut h)
                    .map_err(|e| e.to_string())
            });
        }
        axis.push(state.clone());
    }
    for (k, start) in axis.into_iter().enumerate() {
        let mut state = start;
        let mut h = 0.0;
        for m in 0..n_inner {
            if m > 0 {
                state = state.and_then(|s| {
                    integrate_riccati(coeffs(inner_dir, outer_t(k)), inner_t(m - 1), inner_t(m), s, &spec.policy, &mut h)
                        .map_err(|e| e.to_string())
                });
            }
            out[node(k, m)] = state.clone();
        }
    }
    out
}

/// Solves the partner, assembles the leaf point and the state derivatives.
fn assemble_node(seed: &Seed, spec: &TransportSpec, i: usize, j: usize, state: Projective) -> Result<NodeState> {
    let g = seed.grid;
    let (u0, v0) = (g.u(i), g.v(j));
    let s = state.value();
    if !(s.abs() <= STATE_LIMIT) {
        return Err(Error::Blowup { i, j });
    }
    let solved = match spec.flavor {
        MFamily::M => solve_tangency(&seed.family, spec.z, u0, v0, s)?,
        MFamily::MPrime => solve_tangency_v1(&seed.family, spec.z, u0, v0, s)?,
    };
    let config = match solved {
        TangencySolve::Config(c) => c,
        TangencySolve::WholeRuling => return Err(Error::Degenerate("whole ruling tangent".into())),
    };
    let k = g.idx(i, j);
    if config.v01.norm() > SEGMENT_LIMIT * (1.0 + config.x0.norm()) {
        return Err(Error::Blowup { i, j });
    }
    let leaf = seed.patch.jets[k].x + seed.motions[k].rotation * config.v01;
    let conn = seed.connection.as_ref();
    let ds = [
        riccati_rhs(&seed.family, spec.z, spec.flavor, conn, u0, v0, RulingFamily::U, s)?,
        riccati_rhs(&seed.family, spec.z, spec.flavor, conn, u0, v0, RulingFamily::V, s)?,
    ];
    Ok(NodeState { state, config, leaf, ds })
}

/// Transports the state from the grid origin along both path orders and
/// assembles the leaf from the `u`-first states.
pub fn transport(seed: &Seed, spec: &TransportSpec) -> Result<LeafPatch> {
    if spec.z == 0.0 {
        return Err(Error::SpectralZero);
    }
    seed.family.spectral(spec.z)?;
    let (primary, alternate) = std::thread::scope(|scope| {
        let a = scope.spawn(|| transport_states(seed, spec, true));
        let b = transport_states(seed, spec, false);
        (a.join().expect("transport thread"), b)
    });
    let g = seed.grid;
    let mut nodes = Vec::with_capacity(g.len());
    let mut blowups = Vec::new();
    let mut path_difference = 0.0f64;
    for (i, j) in g.nodes() {
        let k = g.idx(i, j);
        let assembled = match &primary[k] {
            Ok(s) => assemble_node(seed, spec, i, j, *s).map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        };
        match assembled {
            Ok(n) => {
                if let Ok(alt) = &alternate[k] {
                    path_difference = path_difference.max(n.state.chordal(*alt));
                }
                nodes.push(Some(n));
            }
            Err(reason) => {
                blowups.push(Blowup { i, j, reason });
                nodes.push(None);
            }
        }
    }
    Ok(LeafPatch {
        grid: g,
        family: seed.family,
        spec: *spec,
        nodes,
        blowups,
        alternate: alternate.into_iter().map(|r| r.ok()).collect(),
        path_difference,
    })
}

/// A "leaf" whose state is frozen at its initial value: a negative control
/// that ignores the Riccati equation.
pub fn constant_state_leaf(seed: &Seed, spec: &TransportSpec) -> Result<LeafPatch> {
    let g = seed.grid;
    let mut nodes = Vec::with_capacity(g.len());
    let mut blowups = Vec::new();
    for (i, j) in g.nodes() {
        match assemble_node(seed, spec, i, j, Projective::new(spec.init)) {
            Ok(mut n) => {
                n.ds = [0.0, 0.0];
                nodes.push(Some(n));
            }
            Err(e) => {
                blowups.push(Blowup { i, j, reason: e.to_string() });
                nodes.push(None);
            }
        }
    }
    Ok(LeafPatch {
        grid: g,
        family: seed.family,
        spec: *spec,
        alternate: vec![None; g.len()],
        nodes,
        blowups,
        path_difference: 0.0,
    })
}

/// Analytic first-order data of the leaf at one node.
#[derive(Clone, Copy, Debug)]
pub struct LeafJet {
    /// `(∂u1, ∂v1)` along `u0` and along `v0`.
    pub du1: [f64; 2],
    pub dv1: [f64; 2],
    /// Leaf tangents `x1_u0, x1_v0`.
    pub tangents: [Vec3; 2],
    /// Tangents of `x0 ∘ (u1, v1)` on the `z = 0` quadric.
    pub pullback: [Vec3; 2],
}

/// Differentiates the tangency constraint implicitly to get the partner
/// derivatives, then `x1_a = R0 (∂_a x_z1 + ω_a × V01)`.
pub fn leaf_jet(seed: &Seed, leaf: &LeafPatch, i: usize, j: usize) -> Result<Option<LeafJet>> {
    let Some(node) = leaf.node(i, j) else { return Ok(None) };
    let Some((u1, v1)) = node.partner() else { return Ok(None) };
    let g = seed.grid;
    let family = &seed.family;
    let z = leaf.spec.z;
    let c = &node.config;
    let q0 = seed.quadric.jet(i, j);
    let a = family.a_matrix();
    let xz = family.eval(z, ParamPoint::new(u1, v1))?;
    let g_base = [c.v01.dot(&(a * q0.x_u)), c.v01.dot(&(a * q0.x_v))];
    let g_u1 = xz.x_u.dot(&c.n_hat0);
    let g_v1 = xz.x_v.dot(&c.n_hat0);
    let mut du1 = [0.0; 2];
    let mut dv1 = [0.0; 2];
    for d in 0..2 {
        match leaf.spec.flavor {
            MFamily::M => {
                dv1[d] = node.ds[d];
                du1[d] = -(g_base[d] + g_v1 * dv1[d]) / g_u1;
            }
            MFamily::MPrime => {
                du1[d] = node.ds[d];
                dv1[d] = -(g_base[d] + g_u1 * du1[d]) / g_v1;
            }
        }
    }
    let (p, q) = seed.connection.omega(g.u(i), g.v(j))?;
    let r0 = seed.motions[g.idx(i, j)].rotation;
    let x0_1 = family.eval(0.0, ParamPoint::new(u1, v1))?;
    let omega = [p, q];
    let tangents: [Vec3; 2] =
        std::array::from_fn(|d| r0 * (xz.x_u * du1[d] + xz.x_v * dv1[d] + omega[d].cross(&c.v01)));
    let pullback: [Vec3; 2] = std::array::from_fn(|d| x0_1.x_u * du1[d] + x0_1.x_v * dv1[d]);
    Ok(Some(LeafJet { du1, dv1, tangents, pullback }))
}

/// Residuals of a leaf against the claims of the transformation.
#[derive(Clone, Debug, Default, Serialize)]
pub struct LeafReport {
    /// First form of the leaf vs the pulled-back quadric form, central differences.
    pub isometry_fd: f64,
    /// The same comparison with analytic leaf tangents.
    pub isometry_analytic: f64,
    /// `|N0·V| / |V|` on the seed.
    pub congruence_seed: f64,
    /// `|N1·V| / |V|` on the leaf (analytic tangents).
    pub congruence_leaf: f64,
    /// Proportionality defect of the two second fundamental forms.
    pub weingarten: f64,
    /// Un-rolled leaf point mapped back by the inverse Ivory affinity.
    pub ivory_leaf: f64,
    pub nodes_checked: usize,
    pub interior_checked: usize,
}

fn first_form(a: &Vec3, b: &Vec3) -> [f64; 3] {
    [a.dot(a), a.dot(b), b.dot(b)]
}

fn form_mismatch(x: [f64; 3], y: [f64; 3]) -> f64 {
    let scale = x.iter().chain(&y).fold(0.0f64, |m, t| m.max(t.abs()));
    (0..3).map(|k| rel(x[k] - y[k], scale)).fold(0.0, f64::max)
}

/// Interior nodes whose 3×3 neighbourhood is fully assembled with finite partners.
fn interior_ok(leaf: &LeafPatch, i: usize, j: usize) -> bool {
    let g = leaf.grid;
    if i == 0 || j == 0 || i + 1 >= g.nu || j + 1 >= g.nv {
        return false;
    }
    (i - 1..=i + 1).all(|a| (j - 1..=j + 1).all(|b| leaf.node(a, b).is_some_and(|n| n.partner().is_some())))
}

pub fn verify_leaf(seed: &Seed, leaf: &LeafPatch) -> Result<LeafReport> {
    let g = seed.grid;
    let family = &seed.family;
    let mut rep = LeafReport::default();
    let (hu, hv) = (g.h_u(), g.h_v());
    for (i, j) in g.nodes() {
        let Some(node) = leaf.node(i, j) else { continue };
        let k = g.idx(i, j);
        let v = node.leaf - seed.patch.jets[k].x;
        rep.congruence_seed = rep.congruence_seed.max(ratio(seed.patch.jets[k].n.dot(&v), v.norm()));

        let motion = &seed.motions[k];
        let unrolled = motion.inverse().apply_point(&node.leaf);
        let back = family.inverse_ivory_map(leaf.spec.z, &unrolled)?;
        let on_quadric = match node.config.p1() {
            Some(p) => family.eval(0.0, p)?.x,
            None => continue,
        };
        rep.ivory_leaf = rep.ivory_leaf.max(rel((back - on_quadric).norm(), 1.0 + on_quadric.amax()));

        let Some(jet) = leaf_jet(seed, leaf, i, j)? else { continue };
        rep.nodes_checked += 1;
        let n1 = jet.tangents[0].cross(&jet.tangents[1]).normalize();
        rep.congruence_leaf = rep.congruence_leaf.max(ratio(n1.dot(&v), v.norm()));
        rep.isometry_analytic = rep.isometry_analytic.max(form_mismatch(
            first_form(&jet.tangents[0], &jet.tangents[1]),
            first_form(&jet.pullback[0], &jet.pullback[1]),
        ));

        if !interior_ok(leaf, i, j) {
            continue;
        }
        rep.interior_checked += 1;
        let x = |a: usize, b: usize| leaf.node(a, b).expect("interior").leaf;
        let p = |a: usize, b: usize| leaf.node(a, b).expect("interior").partner().expect("finite");
        let xu = (x(i + 1, j) - x(i - 1, j)) / (2.0 * hu);
        let xv = (x(i, j + 1) - x(i, j - 1)) / (2.0 * hv);
        let (pu_plus, pu_minus, pv_plus, pv_minus) = (p(i + 1, j), p(i - 1, j), p(i, j + 1), p(i, j - 1));
        let ju = ((pu_plus.0 - pu_minus.0) / (2.0 * hu), (pu_plus.1 - pu_minus.1) / (2.0 * hu));
        let jv = ((pv_plus.0 - pv_minus.0) / (2.0 * hv), (pv_plus.1 - pv_minus.1) / (2.0 * hv));
        let (u1, v1) = node.partner().expect("finite");
        let q = family.eval(0.0, ParamPoint::new(u1, v1))?;
        let yu = q.x_u * ju.0 + q.x_v * ju.1;
        let yv = q.x_u * jv.0 + q.x_v * jv.1;
        rep.isometry_fd = rep.isometry_fd.max(form_mismatch(first_form(&xu, &xv), first_form(&yu, &yv)));

        let e1 = (x(i + 1, j) - 2.0 * x(i, j) + x(i - 1, j)) / (hu * hu);
        let f1 = (x(i + 1, j + 1) - x(i + 1, j - 1) - x(i - 1, j + 1) + x(i - 1, j - 1)) / (4.0 * hu * hv);
        let g1 = (x(i, j + 1) - 2.0 * x(i, j) + x(i, j - 1)) / (hv * hv);
        let second1 = Vec3::new(n1.dot(&e1), n1.dot(&f1), n1.dot(&g1));
        let s0 = seed.patch.jets[k].second_form();
        let second0 = Vec3::new(s0[0], s0[1], s0[2]);
        rep.weingarten = rep.weingarten.max(ratio(second0.cross(&second1).norm(), second0.norm() * second1.norm()));
    }
    Ok(rep)
}

/// Rolls the `z = 0` quadric at `(u1, v1)` onto the leaf with `R1 = R0 R01ᵀ`,
/// where `R01` is the Ivory motion of the node's point pair, and checks that
/// it reproduces the leaf tangents; also checks the partner-side tangency.
pub fn inversion_check(seed: &Seed, leaf: &LeafPatch) -> Result<f64> {
    let g = seed.grid;
    let fam = leaf.spec.flavor.ruling();
    let mut worst = 0.0f64;
    for (i, j) in g.nodes() {
        let Some(node) = leaf.node(i, j) else { continue };
        let Some(jet) = leaf_jet(seed, leaf, i, j)? else { continue };
        let Some(p1) = node.config.p1() else { continue };
        let pair = PointPair::new(&seed.family, leaf.spec.z, ParamPoint::new(g.u(i), g.v(j)), p1)?;
        let Ok(r01) = build_ivory_motion(&pair, fam, fam) else { continue };
        let r1 = seed.motions[g.idx(i, j)].rotation * r01.rotation.transpose();
        for d in 0..2 {
            let t = jet.tangents[d];
            worst = worst.max(rel((r1 * jet.pullback[d] - t).norm(), t.norm()));
        }
        let n01 = pair.n_hat0(1);
        worst = worst.max(ratio(pair.v10.dot(&n01), pair.v10.norm() * n01.norm()));
    }
    Ok(worst)
}

/// Statistics of a leaf built on a seed with `ω0 = 0`.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct DegenerateLeaf {
    pub state_variance: f64,
    pub collinearity: f64,
    /// Largest implicit residual of the un-rolled leaf points on the `z` member.
    pub implicit: f64,
}

pub fn degenerate_leaf_stats(seed: &Seed, leaf: &LeafPatch) -> DegenerateLeaf {
    let states: Vec<f64> = leaf.nodes.iter().flatten().map(|n| n.state.value()).collect();
    let n = states.len().max(1) as f64;
    let mean = states.iter().sum::<f64>() / n;
    let state_variance = states.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    let points: Vec<Vec3> = leaf.nodes.iter().flatten().map(|n| n.leaf).collect();
    let implicit = leaf
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(k, n)| n.as_ref().map(|n| (k, n)))
        .map(|(k, n)| {
            let y = seed.motions[k].inverse().apply_point(&n.leaf);
            seed.family.implicit_residual(leaf.spec.z, &y).abs() / (1.0 + y.norm_squared())
        })
        .fold(0.0, f64::max);
    DegenerateLeaf { state_variance, collinearity: collinearity(&points), implicit }
}

/// Max distance between matched leaf points and partner parameters of two leaves.
pub fn leaf_difference(a: &LeafPatch, b: &LeafPatch) -> f64 {
    let mut worst = 0.0f64;
    for (x, y) in a.nodes.iter().zip(&b.nodes) {
        if let (Some(x), Some(y)) = (x, y) {
            worst = worst.max(rel((x.leaf - y.leaf).norm(), 1.0 + x.leaf.amax()));
            if let (Some(p), Some(q)) = (x.partner(), y.partner()) {
                worst = worst.max(rel((p.0 - q.0).abs() + (p.1 - q.1).abs(), 1.0 + p.0.abs().max(p.1.abs())));
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bending::KappaExpr;

    fn hyp() -> ConfocalFamily {
        ConfocalFamily::hyperboloid(4.0, -1.0, 1.0).unwrap()
    }

    fn spec(z: f64, init: f64) -> TransportSpec {
        TransportSpec { z, flavor: MFamily::M, init, policy: StepPolicy::default() }
    }

    fn bent_seed(n: usize, eps: i8) -> Seed {
        let s = RuledBendingSpec { family: hyp(), u_ref: 1.2, kappa: KappaExpr::constant(0.3), sigma: 1 };
        Seed::bent(&s, Grid2D::new(1.0, 1.1, -0.5, -0.4, n, n).unwrap(), eps).unwrap()
    }

    #[test]
    fn zero_connection_keeps_the_state() {
        let seed = Seed::trivial(&hyp(), Grid2D::new(1.0, 1.4, -0.5, -0.1, 9, 9).unwrap()).unwrap();
        let c = riccati_coefficients(&hyp(), 0.3, MFamily::M, seed.connection.as_ref(), 1.2, -0.3, RulingFamily::U)
            .unwrap();
        assert_eq!(c, [0.0; 3]);
        let leaf = transport(&seed, &spec(0.3, 0.7)).unwrap();
        assert!(leaf.blowups.is_empty());
        let stats = degenerate_leaf_stats(&seed, &leaf);
        assert!(stats.state_variance <= 1e-20);
        assert!(stats.collinearity <= 1e-8);
        assert!(stats.implicit <= 1e-8);
        assert!(matches!(transport(&seed, &spec(0.0, 0.7)), Err(Error::SpectralZero)));
    }

    #[test]
    fn rhs_is_quadratic_in_the_state() {
        let seed = bent_seed(9, -1);
        let f = |s: f64| {
            riccati_rhs(&hyp(), 0.4, MFamily::M, seed.connection.as_ref(), 1.2, -0.3, RulingFamily::V, s).unwrap()
        };
        let nodes = [-1.0, 0.0, 0.5, 2.0];
        let t = 1.3;
        let interp: f64 = nodes
            .iter()
            .enumerate()
            .map(|(i, &si)| {
                let l: f64 =
                    nodes.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &sk)| (t - sk) / (si - sk)).product();
                l * f(si)
            })
            .sum();
        assert!((interp - f(t)).abs() <= 1e-9 * (1.0 + f(t).abs()));
        assert!(f(t).abs() > 1e-6);
    }

    #[test]
    fn bent_leaf_is_path_independent_and_verified() {
        let seed = bent_seed(21, -1);
        let leaf = transport(&seed, &spec(0.4, -0.3)).unwrap();
        assert!(leaf.blowups.is_empty(), "{:?}", leaf.blowups.first());
        assert!(leaf.path_difference <= 1e-6, "{}", leaf.path_difference);
        assert!(leaf.max_tangency() <= 1e-9);
        let rep = verify_leaf(&seed, &leaf).unwrap();
        assert!(rep.congruence_seed <= 1e-9 && rep.congruence_leaf <= 1e-6, "{rep:?}");
        assert!(rep.isometry_analytic <= 1e-8, "{rep:?}");
        assert!(rep.ivory_leaf <= 1e-8);
        assert!(rep.isometry_fd <= 1e-3 && rep.weingarten <= 1e-3, "{rep:?}");
        assert!(inversion_check(&seed, &leaf).unwrap() <= 1e-6);
    }

    #[test]
    fn frozen_state_fails_verification() {
        let seed = bent_seed(21, -1);
        let frozen = constant_state_leaf(&seed, &spec(0.4, -0.3)).unwrap();
        let rep = verify_leaf(&seed, &frozen).unwrap();
        let inv = inversion_check(&seed, &frozen).unwrap();
        assert!(rep.weingarten >= 1e-2 && rep.congruence_leaf >= 1e-2 && inv >= 1e-2, "{rep:?} {inv}");
    }

    #[test]
    fn flavor_exchange_gives_the_same_leaf() {
        let leaf = transport(&bent_seed(11, -1), &spec(0.4, -0.3)).unwrap();
        let u1 = leaf.node(0, 0).unwrap().u1().finite().unwrap();
        let other = TransportSpec { flavor: MFamily::MPrime, init: u1, ..spec(0.4, 0.0) };
        let swapped = transport(&bent_seed(11, 1), &other).unwrap();
        assert!(leaf_difference(&leaf, &swapped) <= 1e-8);
    }
}
