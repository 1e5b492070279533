//! The balance of the parabola, in coordinates.
//!
//! The region under `y = x²` on `[0, 1]` hangs at lever arm 1; the region
//! under `y = x` stays in place. A slice at abscissa `x` has moment `x² · 1`
//! on the left and `x · x` on the right, so the two sides balance slice by
//! slice. Summing the slices gives the area `1/3`.

use serde::Serialize;

/// Moments of the two slices at `x`: `(parabola × far arm, triangle × own abscissa)`.
pub fn slice_factorization(x: f64) -> (f64, f64) {
    let parabola = x * x;
    let triangle = x;
    (parabola * 1.0, triangle * x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Slice {
    pub x: f64,
    pub parabola_length: f64,
    pub triangle_length: f64,
    pub lever_arm: f64,
    pub moment_left: f64,
    pub moment_right: f64,
}

/// Midpoint slicing of the balance with its totals.
#[derive(Clone, Debug, Serialize)]
pub struct BalanceLedger {
    pub n: usize,
    pub slices: Vec<Slice>,
    pub moment_left: f64,
    pub moment_right: f64,
    pub max_slice_residual: f64,
}

impl BalanceLedger {
    pub fn new(n: usize) -> Self {
        let h = 1.0 / n as f64;
        let slices: Vec<Slice> = (0..n)
            .map(|k| {
                let x = (k as f64 + 0.5) * h;
                let (l, r) = slice_factorization(x);
                Slice {
                    x,
                    parabola_length: x * x,
                    triangle_length: x,
                    lever_arm: 1.0,
                    moment_left: l * h,
                    moment_right: r * h,
                }
            })
            .collect();
        let moment_left = slices.iter().map(|s| s.moment_left).sum();
        let moment_right = slices.iter().map(|s| s.moment_right).sum();
        let max_slice_residual = slices.iter().map(|s| (s.moment_left - s.moment_right).abs()).fold(0.0, f64::max);
        Self { n, slices, moment_left, moment_right, max_slice_residual }
    }

    /// The parabola's mass, read off from the balance (lever arm 1).
    pub fn area_estimate(&self) -> f64 {
        self.moment_right
    }
}

/// `(M_left, M_right, area)` for `n` midpoint slices. `n` must be at least 2.
pub fn balance_moments(n: usize) -> (f64, f64, f64) {
    let ledger = BalanceLedger::new(n.max(2));
    (ledger.moment_left, ledger.moment_right, ledger.area_estimate())
}

/// Midpoint rule on `[a, b]`, summed from both ends towards the middle so that
/// symmetric integrands stay symmetric in rounding.
fn midpoint(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let node = |k: usize| a + (k as f64 + 0.5) * h;
    let mut sum = 0.0;
    for k in 0..n / 2 {
        sum += f(node(k)) + f(node(n - 1 - k));
    }
    if n % 2 == 1 {
        sum += f(node(n / 2));
    }
    sum * h
}

/// Area of the segment of `y = x²` below `y = height`, over the area of the
/// inscribed triangle with apex at the vertex.
pub fn segment_triangle_ratio_at(n: usize, height: f64) -> f64 {
    let w = height.sqrt();
    let segment = midpoint(n, -w, w, |x| height - x * x);
    segment / (w * height)
}

pub fn segment_triangle_ratio(n: usize) -> f64 {
    segment_triangle_ratio_at(n, 1.0)
}

/// Centroid `(x̄, ȳ)` of the segment cut by the chord `y = 1`.
pub fn segment_centroid_xy(n: usize) -> (f64, f64) {
    let area = midpoint(n, -1.0, 1.0, |x| 1.0 - x * x);
    let mx = midpoint(n, -1.0, 1.0, |x| x * (1.0 - x * x));
    let my = midpoint(n, -1.0, 1.0, |x| 0.5 * (1.0 - x.powi(4)));
    (mx / area, my / area)
}

/// Centroid height as a fraction of the vertex-to-chord distance.
pub fn segment_centroid(n: usize) -> f64 {
    segment_centroid_xy(n).1
}

/// `|e(n)| / |e(2n)|` for an estimate with known limit.
pub fn convergence_ratio(estimate: impl Fn(usize) -> f64, exact: f64, n: usize) -> f64 {
    (estimate(n) - exact).abs() / (estimate(2 * n) - exact).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_balance() {
        assert_eq!(slice_factorization(0.0), (0.0, 0.0));
        assert_eq!(slice_factorization(0.5), (0.25, 0.25));
        assert_eq!(slice_factorization(1.0), (1.0, 1.0));
        let ledger = BalanceLedger::new(10);
        assert!(ledger.max_slice_residual <= 1e-14);
        assert!((ledger.moment_left - ledger.moment_right).abs() <= 1e-14);
    }

    #[test]
    fn midpoint_error_is_exact() {
        // The midpoint rule underestimates ∫x² on [0, 1] by exactly 1/(12n²).
        for n in [2, 10, 1000] {
            let (_, _, area) = balance_moments(n);
            let expected = 1.0 / 3.0 - 1.0 / (12.0 * (n * n) as f64);
            assert!((area - expected).abs() <= 1e-15);
        }
        let r = convergence_ratio(|n| balance_moments(n).2, 1.0 / 3.0, 1000);
        assert!((r - 4.0).abs() < 1e-6);
    }

    #[test]
    fn segment_quadrature() {
        assert!((segment_triangle_ratio(1000) - 4.0 / 3.0).abs() <= 1e-5);
        for h in [1e-6, 0.25, 9.0] {
            assert!((segment_triangle_ratio_at(1000, h) - segment_triangle_ratio(1000)).abs() <= 1e-12);
        }
        let (cx, cy) = segment_centroid_xy(1000);
        assert!(cx.abs() <= 1e-14);
        assert!((cy - 0.6).abs() <= 1e-5);
        assert!((convergence_ratio(segment_centroid, 0.6, 1000) - 4.0).abs() < 0.5);
    }
}
