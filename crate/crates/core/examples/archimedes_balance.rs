//! The balance of the parabola by slicing.

use backlund_quadrics::archimedes::{
    balance_moments, convergence_ratio, segment_centroid, segment_triangle_ratio, BalanceLedger,
};

fn main() {
    for n in [10, 100, 1000] {
        let ledger = BalanceLedger::new(n);
        let (left, right, area) = balance_moments(n);
        println!("n = {n:4}  slice residual {:.0e}  moments {left:.9} / {right:.9}  area {area:.9}", ledger.max_slice_residual);
    }
    let n = 1000;
    println!("segment / triangle {:.9} (4/3)", segment_triangle_ratio(n));
    println!("centroid height    {:.9} (3/5)", segment_centroid(n));
    println!("error ratio from n = 100 to 200 {:.4}", convergence_ratio(segment_triangle_ratio, 4.0 / 3.0, 100));
}
