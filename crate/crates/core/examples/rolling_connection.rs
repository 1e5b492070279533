//! Rolling a quadric over an isometric surface and measuring how flat the
//! resulting connection is as the grid refines.

use backlund_quadrics::bending::{KappaExpr, RuledBendingSpec};
use backlund_quadrics::confocal::ConfocalFamily;
use backlund_quadrics::rolling::Grid2D;
use backlund_quadrics::run::suites::flatness_study;

fn main() -> backlund_quadrics::Result<()> {
    let spec = RuledBendingSpec {
        family: ConfocalFamily::hyperboloid(4.0, -1.0, 1.0)?,
        u_ref: 1.2,
        kappa: KappaExpr::constant(0.3),
        sigma: 1,
    };
    let grid = Grid2D::new(1.0, 1.4, -0.5, -0.1, 11, 11)?;
    // Rolling on the side opposite to the bending has a curved connection form
    // only through discretization error, which should fall off like h².
    let study = flatness_study(&spec, grid, -1, 4)?;
    for (k, n) in study.nodes.iter().enumerate() {
        println!("n = {n:3}  curvature {:.3e}  torsion {:.3e}", study.curvature[k], study.torsion[k]);
    }
    println!("curvature ratios {:?}", study.curvature_ratios);
    Ok(())
}
