//! Transforming the quadric itself: the Riccati state never moves and the
//! leaf collapses onto a single ruling of the partner quadric.

use backlund_quadrics::backlund::{degenerate_leaf_stats, transport, Seed, TransportSpec};
use backlund_quadrics::confocal::ConfocalFamily;
use backlund_quadrics::ode::StepPolicy;
use backlund_quadrics::rolling::Grid2D;
use backlund_quadrics::tangency::MFamily;

fn main() -> backlund_quadrics::Result<()> {
    let family = ConfocalFamily::hyperboloid(4.0, -1.0, 1.0)?;
    let grid = Grid2D::new(1.0, 1.4, -0.5, -0.1, 21, 21)?;
    let seed = Seed::trivial(&family, grid)?;
    let leaf = transport(&seed, &TransportSpec { z: 0.4, flavor: MFamily::M, init: 0.7, policy: StepPolicy::default() })?;
    let d = degenerate_leaf_stats(&seed, &leaf);
    println!("state variance {:.1e}", d.state_variance);
    println!("collinearity   {:.1e}", d.collinearity);
    println!("on the partner {:.1e}", d.implicit);
    Ok(())
}
