//! The rigid motion carrying one ruling frame of a point pair to the other.
//! When the pair is in tangency, composing with the reflection in the tangent
//! plane gives the motion for the other ruling.

use backlund_quadrics::confocal::{ConfocalFamily, ParamPoint, RulingFamily};
use backlund_quadrics::ivory::{build_ivory_motion, flipped_motion, ivory_length_residual, motion_residual, PointPair};
use backlund_quadrics::tangency::solve_tangency;

fn main() -> backlund_quadrics::Result<()> {
    let f = ConfocalFamily::paraboloid(1.0, -1.0)?;
    let z = 0.3;
    let generic = PointPair::new(&f, z, ParamPoint::new(0.2, -0.4), ParamPoint::new(-0.7, 1.1))?;
    println!("Ivory length residual: {:.1e}", ivory_length_residual(&generic));
    let m = build_ivory_motion(&generic, RulingFamily::U, RulingFamily::U)?;
    println!("det sign {}, orthogonality defect {:.1e}", m.det_sign, m.orthogonality_defect());
    println!("motion residual: {:.1e}", motion_residual(&generic, RulingFamily::U, RulingFamily::U, &m)?);

    let c = solve_tangency(&f, z, 0.2, -0.4, 1.1)?.config().expect("isolated partner");
    let pair = PointPair::new(&f, z, ParamPoint::new(0.2, -0.4), c.p1().expect("finite partner"))?;
    let m = build_ivory_motion(&pair, RulingFamily::U, RulingFamily::U)?;
    let flipped = flipped_motion(&pair, &m);
    println!(
        "tangent pair, flipped motion on the other ruling: {:.1e}",
        motion_residual(&pair, RulingFamily::U, RulingFamily::V, &flipped)?
    );
    Ok(())
}
