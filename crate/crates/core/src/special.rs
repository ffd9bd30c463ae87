//! Gamma-function helpers shared by the closed-form moment formulas.

use std::f64::consts::PI;

/// Natural logarithm of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Γ(a) / Γ(b), evaluated in log space so large arguments do not overflow.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    (ln_gamma(a) - ln_gamma(b)).exp()
}

/// Surface area of the unit sphere S^{n-1} ⊂ ℝⁿ, `2π^{n/2} / Γ(n/2)`.
///
/// For n = 1 this is 2, the counting measure of {-1, 1}.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    (std::f64::consts::LN_2 + h * PI.ln() - ln_gamma(h)).exp()
}

/// Upper regularized incomplete gamma Q(a, x).
pub fn gamma_upper_regularized(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(a, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_gamma() {
        // Γ(1/2) = √π, Γ(5/2) = 3√π/4
        assert!((ln_gamma(0.5).exp() - PI.sqrt()).abs() < 1e-14);
        assert!((ln_gamma(2.5).exp() - 0.75 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn ratio_matches_recursion_at_large_arguments() {
        // Γ(x+2)/Γ(x) = x(x+1)
        let x = 5000.0;
        let r = gamma_ratio(x + 2.0, x);
        assert!((r / (x * (x + 1.0)) - 1.0).abs() < 1e-10);
    }
}
