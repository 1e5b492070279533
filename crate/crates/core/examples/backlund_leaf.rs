//! A full transform: bend, roll, transport the Riccati state and verify that
//! the leaf is isometric to the partner quadric.

use backlund_quadrics::backlund::{inversion_check, transport, verify_leaf, Seed, TransportSpec};
use backlund_quadrics::bending::{KappaExpr, RuledBendingSpec};
use backlund_quadrics::confocal::ConfocalFamily;
use backlund_quadrics::ode::StepPolicy;
use backlund_quadrics::rolling::Grid2D;
use backlund_quadrics::tangency::MFamily;

fn main() -> backlund_quadrics::Result<()> {
    let spec = RuledBendingSpec {
        family: ConfocalFamily::hyperboloid(4.0, -1.0, 1.0)?,
        u_ref: 1.2,
        kappa: KappaExpr::constant(0.3),
        sigma: 1,
    };
    let grid = Grid2D::new(1.0, 1.1, -0.5, -0.4, 21, 21)?;
    let seed = Seed::bent(&spec, grid, -1)?;
    let leaf = transport(&seed, &TransportSpec { z: 0.4, flavor: MFamily::M, init: -0.3, policy: StepPolicy::default() })?;
    println!("blowups {}, path difference {:.1e}", leaf.blowups.len(), leaf.path_difference);
    let r = verify_leaf(&seed, &leaf)?;
    println!("isometry (differences) {:.2e}", r.isometry_fd);
    println!("isometry (analytic)    {:.2e}", r.isometry_analytic);
    println!("congruence seed/leaf   {:.2e} / {:.2e}", r.congruence_seed, r.congruence_leaf);
    println!("Weingarten             {:.2e}", r.weingarten);
    println!("inversion              {:.2e}", inversion_check(&seed, &leaf)?);
    Ok(())
}
