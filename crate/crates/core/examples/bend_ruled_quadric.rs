//! Bending a ruled quadric along its rulings into a different ruled surface.

use backlund_quadrics::bending::{bend, isometry_residual, KappaExpr, RuledBendingSpec};
use backlund_quadrics::confocal::ConfocalFamily;
use backlund_quadrics::rolling::{Grid2D, SurfacePatch};

fn main() -> backlund_quadrics::Result<()> {
    let family = ConfocalFamily::hyperboloid(4.0, -1.0, 1.0)?;
    let spec = RuledBendingSpec { family, u_ref: 1.2, kappa: KappaExpr::constant(0.3), sigma: 1 };
    for n in [11, 21, 41] {
        let grid = Grid2D::new(1.0, 1.4, -0.5, -0.1, n, n)?;
        let bent = bend(&spec, grid)?;
        let base = SurfacePatch::quadric(&family, 0.0, grid)?;
        println!(
            "n = {n:2}  first form mismatch {:.2e}  frame drift {:.1e}",
            isometry_residual(&base, &bent.patch),
            bent.frame_drift
        );
    }
    Ok(())
}
