//! Solving the tangency condition for a partner point and checking the
//! identities that hold on the solution.

use backlund_quadrics::confocal::ConfocalFamily;
use backlund_quadrics::tangency::{factorization_residual, integrability_residual, reflection_residual_for, solve_tangency, MFamily};

fn main() -> backlund_quadrics::Result<()> {
    let f = ConfocalFamily::hyperboloid(4.0, -1.0, 1.0)?;
    let (z, u0, v0) = (0.4, 1.0, -0.5);
    for v1 in [-0.3, 0.2, 1.5] {
        let Some(c) = solve_tangency(&f, z, u0, v0, v1)?.config() else {
            println!("v1 = {v1}: whole ruling tangent");
            continue;
        };
        println!(
            "v1 = {v1:4}: u1 = {:?}  tangency {:.1e}  reflection {:.1e}  factorization {:.1e}  integrability {:.1e}",
            c.u1.finite(),
            c.tangency_residual(),
            reflection_residual_for(&c, MFamily::M)?,
            factorization_residual(&c),
            integrability_residual(&c, MFamily::M)?,
        );
    }
    Ok(())
}
