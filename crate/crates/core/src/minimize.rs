//! Bounded scalar minimization.

/// 1/φ, φ the golden ratio.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimizer of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `abs_tol`. Returns the best
/// evaluated point among the interior probes and the two bounds, so a
/// minimum sitting on a bound is returned exactly.
pub fn golden_section<F>(f: F, lo: f64, hi: f64, abs_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);

    while b - a > abs_tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }

    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_interior() {
        let x = golden_section(|x| (x - 1.25) * (x - 1.25), -3.0, 5.0, 1e-9);
        assert_close!(x, 1.25, 1e-8);
    }

    #[test]
    fn minimum_on_bounds() {
        assert_eq!(golden_section(|x| x, 2.0, 9.0, 1e-6), 2.0);
        assert_eq!(golden_section(|x| -x, 2.0, 9.0, 1e-6), 9.0);
    }

    #[test]
    fn degenerate_interval() {
        assert_eq!(golden_section(|x| x * x, 3.0, 3.0, 1e-6), 3.0);
    }
}
