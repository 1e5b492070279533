//! Points of a confocal family and their Ivory images.

use backlund_quadrics::confocal::{ConfocalFamily, ParamPoint};

fn main() -> backlund_quadrics::Result<()> {
    let f = ConfocalFamily::hyperboloid(4.0, -1.0, 1.0)?;
    let (lo, hi) = f.z_range();
    println!("admissible z in ({lo}, {hi})");
    for z in [-0.5, 0.0, 0.4] {
        let jet = f.eval(z, ParamPoint::new(1.0, -0.5))?;
        println!(
            "z = {z:5.2}  x = [{:8.4}, {:8.4}, {:8.4}]  implicit residual = {:.1e}",
            jet.x.x,
            jet.x.y,
            jet.x.z,
            f.implicit_residual(z, &jet.x)
        );
    }
    let x0 = f.point(0.0, 1.0, -0.5)?;
    let xz = f.ivory_map(0.4, &x0)?;
    println!("Ivory map agrees with the parametrization: {:.1e}", (xz - f.point(0.4, 1.0, -0.5)?).norm());
    Ok(())
}
