//! One-dimensional maximization helpers.

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` over the sorted grid `xs`, then refines by golden section
/// between the neighbours of the best grid point. Returns `(argmax, max)`.
pub fn grid_then_golden<F: Fn(f64) -> f64>(f: F, xs: &[f64], tol: f64) -> (f64, f64) {
    assert!(!xs.is_empty(), "empty grid");
    let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let lo = xs[best.saturating_sub(1)];
    let hi = xs[(best + 1).min(xs.len() - 1)];
    if hi <= lo {
        return (xs[best], values[best]);
    }
    let (x, v) = golden_max(&f, lo, hi, tol);
    if v >= values[best] {
        (x, v)
    } else {
        (xs[best], values[best])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3).powi(2) + 2.0, -1.0, 4.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn grid_refinement_beats_grid() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let (x, _) = grid_then_golden(|x| -(x - 0.537).powi(2), &xs, 1e-12);
        assert!((x - 0.537).abs() < 1e-6);
    }
}
