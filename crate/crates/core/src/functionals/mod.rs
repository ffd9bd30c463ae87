//! Modular functionals, Luxemburg norms and the truncation operator.
//!
//! For a radial test function `u` and an N-function `M` the three modulars are
//!
//! ```text
//! K = ∫ M(r·|u(r)|) dμ_n      L = ∫ M(|u(r)|) dμ_n      G = ∫ M(|u'(r)|) dμ_n
//! ```
//!
//! and their n-dimensional analogues integrate `M(|x|·|u|)`, `M(|u|)` and
//! `M(|∇u|)` against the Gaussian measure. Radial integrands are evaluated in
//! log space, so functions such as `exp(0.99·r²/8)` never overflow.

mod field;
mod norm;
mod radial;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use field::{hs_norm, FieldFunction, FieldQuantity};
pub use norm::{luxemburg_norm, luxemburg_norm_nd, luxemburg_norm_radial, LuxemburgSpec, NormEstimate};
pub use radial::{Quantity, RadialFn, RadialTestFunction, RadialValidation, SupportHint};

use crate::nfunc::{NFunction, NfuncError};
use crate::quadrature::{
    combine_directions, directional_integrals, half_line_rule, Envelope, HalfLine, QuadratureError, QuadratureSpec, RadialMeasure,
    SphereDesign,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Nfunc(#[from] NfuncError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{label}: {reason}")]
    Invalid { label: String, reason: String },
    #[error("divergent: {0}")]
    Divergent(String),
    #[error("Luxemburg norm did not converge: modular {modular} at the returned scale")]
    NormNotConverged { modular: f64 },
}

/// One modular integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub value: f64,
    pub err_est: f64,
    /// The integral is infinite under the declared growth of the integrand.
    pub divergent: bool,
}

impl Component {
    fn divergent() -> Self {
        Component { value: f64::INFINITY, err_est: f64::INFINITY, divergent: true }
    }
}

/// The modulars `K`, `L`, `G` with their error estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularTriple {
    #[serde(rename = "K")]
    pub k: Component,
    #[serde(rename = "L")]
    pub l: Component,
    #[serde(rename = "G")]
    pub g: Component,
}

impl ModularTriple {
    /// A triple with exact values (zero error).
    pub fn exact(k: f64, l: f64, g: f64) -> Self {
        let c = |value| Component { value, err_est: 0.0, divergent: false };
        ModularTriple { k: c(k), l: c(l), g: c(g) }
    }

    pub fn any_divergent(&self) -> bool {
        self.k.divergent || self.l.divergent || self.g.divergent
    }

    /// All three values finite and non-negative.
    pub fn is_valid(&self) -> bool {
        [self.k, self.l, self.g].iter().all(|c| !c.divergent && c.value.is_finite() && c.value >= 0.0 && c.err_est.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.k.value == 0.0 && self.l.value == 0.0 && self.g.value == 0.0
    }

    /// Multiplies every component by `factor` (a change of measure normalization).
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |c: Component| Component { value: c.value * factor, err_est: c.err_est * factor, divergent: c.divergent };
        ModularTriple { k: s(self.k), l: s(self.l), g: s(self.g) }
    }
}

/// Truncation and tail policy for `M(profile)·density` given the profile's growth hint.
pub(crate) enum Domain {
    Ready(HalfLine),
    Divergent { rate: f64 },
}

pub(crate) fn modular_domain(hint: SupportHint, nf: &NFunction, n: usize, breakpoints: &[f64]) -> Result<Domain, FunctionalError> {
    let (d, big_d) = nf.exponents()?;
    let opts = match hint {
        SupportHint::Compact { radius } => HalfLine::with_envelope(Envelope::radial(n, 0.0)).support(Some(radius)),
        SupportHint::Decaying { degree, rate } => {
            let e = if rate > 0.0 { d } else { big_d };
            let net = 1.0 + e * rate;
            if net <= 0.0 {
                return Ok(Domain::Divergent { rate: net });
            }
            HalfLine::with_envelope(Envelope::new(e * degree.max(0.0) + n as f64 - 1.0, net))
        }
    };
    Ok(Domain::Ready(opts.breakpoints(breakpoints)))
}

/// `ln M(e^t)`, through the N-function's log form when it has one.
#[inline]
pub(crate) fn ln_m(nf: &NFunction, t: f64) -> f64 {
    match nf.ln_eval_of_ln(t) {
        Some(v) => v,
        None => nf.eval(t.exp()).ln(),
    }
}

/// `r ↦ M(exp(ln_profile(r) − ln_k))·r^{n-1}e^{-r²/2}` evaluated in log space.
pub(crate) fn log_integrand<'a, P>(ln_profile: &'a P, nf: &'a NFunction, measure: RadialMeasure, ln_k: f64) -> impl Fn(f64) -> f64 + 'a
where
    P: Fn(f64) -> f64 + ?Sized,
{
    move |r: f64| {
        let ld = measure.ln_density(r);
        if ld == f64::NEG_INFINITY {
            return 0.0;
        }
        let t = ln_profile(r);
        if t == f64::NEG_INFINITY {
            return 0.0;
        }
        (ln_m(nf, t - ln_k) + ld).exp()
    }
}

/// `∫ M(profile/K) dμ_n` for the selected quantity of `u`, with `K = e^{ln_k}`.
pub fn modular_radial_scaled(
    u: &RadialTestFunction,
    q: Quantity,
    nf: &NFunction,
    n: usize,
    ln_k: f64,
    spec: &QuadratureSpec,
) -> Result<Component, FunctionalError> {
    let measure = RadialMeasure::new(n)?;
    let opts = match modular_domain(u.hint(q), nf, n, u.breakpoints())? {
        Domain::Ready(o) => o,
        Domain::Divergent { .. } => return Ok(Component::divergent()),
    };
    let profile = |r: f64| u.ln_abs(q, r);
    let g = log_integrand(&profile, nf, measure, ln_k);
    let rule = half_line_rule(&g, &opts, spec)?;
    Ok(Component { value: rule.estimate.value, err_est: rule.estimate.err_est, divergent: false })
}

pub fn modular_radial(
    u: &RadialTestFunction,
    q: Quantity,
    nf: &NFunction,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<Component, FunctionalError> {
    modular_radial_scaled(u, q, nf, n, 0.0, spec)
}

/// `K`, `L`, `G` of a radial test function against `μ_n`.
pub fn modular_triple_radial(
    u: &RadialTestFunction,
    nf: &NFunction,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<ModularTriple, FunctionalError> {
    let (k, (l, g)) = rayon::join(
        || modular_radial(u, Quantity::Weighted, nf, n, spec),
        || rayon::join(|| modular_radial(u, Quantity::Value, nf, n, spec), || modular_radial(u, Quantity::Slope, nf, n, spec)),
    );
    Ok(ModularTriple { k: k?, l: l?, g: g? })
}

/// `∫_{ℝⁿ} M(q(x)/K) dγ_n` for a field quantity, with `K = e^{ln_k}`.
pub fn modular_nd_scaled(
    u: &FieldFunction,
    q: FieldQuantity,
    nf: &NFunction,
    ln_k: f64,
    spec: &QuadratureSpec,
) -> Result<(Component, f64), FunctionalError> {
    u.require(q)?;
    let n = u.dim();
    let opts = match modular_domain(u.hint(q), nf, n, &[])? {
        Domain::Ready(o) => o,
        Domain::Divergent { .. } => return Ok((Component::divergent(), f64::INFINITY)),
    };
    spec.validate()?;
    let scale = (-ln_k).exp();
    let g = |x: &[f64]| {
        let v = u.quantity(q, x);
        if v == 0.0 {
            0.0
        } else {
            nf.eval(v * scale)
        }
    };
    let design = SphereDesign::new(n, spec.sphere_nodes, spec.seed)?;
    let per_dir = directional_integrals(&g, &design, &opts, spec)?;
    let est = combine_directions(&design, &per_dir, spec);
    Ok((Component { value: est.value, err_est: est.err_est, divergent: false }, est.angular_se))
}

pub fn modular_nd(u: &FieldFunction, q: FieldQuantity, nf: &NFunction, spec: &QuadratureSpec) -> Result<Component, FunctionalError> {
    modular_nd_scaled(u, q, nf, 0.0, spec).map(|(c, _)| c)
}

/// `K⁽ⁿ⁾`, `L⁽ⁿ⁾`, `G⁽ⁿ⁾` of a field against the Gaussian measure selected by `spec.normalization`.
pub fn modular_triple_nd(u: &FieldFunction, nf: &NFunction, spec: &QuadratureSpec) -> Result<ModularTriple, FunctionalError> {
    u.require(FieldQuantity::Gradient)?;
    let k = modular_nd(u, FieldQuantity::Weighted, nf, spec)?;
    let l = modular_nd(u, FieldQuantity::Value, nf, spec)?;
    let g = modular_nd(u, FieldQuantity::Gradient, nf, spec)?;
    Ok(ModularTriple { k, l, g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{moment, scaled_moment};
    use crate::special::sphere_area;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn zero_function_has_zero_triple() {
        let t = modular_triple_radial(&RadialTestFunction::zero(), &NFunction::power(2.0), 2, &spec()).unwrap();
        assert!(t.is_zero() && t.is_valid());
        let t = modular_triple_nd(&FieldFunction::zero(2), &NFunction::power(3.0), &spec()).unwrap();
        assert!(t.is_zero());
    }

    #[test]
    fn constant_function_moments() {
        let t = modular_triple_radial(&RadialTestFunction::gaussian_power(0.0, 2.0), &NFunction::power(2.0), 2, &spec()).unwrap();
        assert!(rel(t.k.value, 2.0) < 1e-10);
        assert!(rel(t.l.value, 1.0) < 1e-10);
        assert_eq!(t.g.value, 0.0);
    }

    #[test]
    fn growing_extremal_matches_closed_form() {
        // u = e^{0.45 r²/2}, M = r², n = 1: the net rate is 1 − 0.9
        let u = RadialTestFunction::gaussian_power(0.9, 2.0);
        let t = modular_triple_radial(&u, &NFunction::power(2.0), 1, &spec()).unwrap();
        let k = scaled_moment(1, 2.0, 0.1);
        let l = scaled_moment(1, 0.0, 0.1);
        assert!(rel(t.k.value, k) < 1e-8);
        assert!(rel(t.l.value, l) < 1e-8);
        assert!(rel(t.g.value, 0.45f64.powi(2) * k) < 1e-8);
    }

    #[test]
    fn too_fast_growth_is_flagged_divergent() {
        let u = RadialTestFunction::gaussian_power(0.6, 2.0);
        let t = modular_triple_radial(&u, &NFunction::power(4.0), 1, &spec()).unwrap();
        assert!(t.k.divergent && t.l.divergent && t.g.divergent);
        assert!(!t.is_valid());
    }

    #[test]
    fn gaussian_field_reduces_to_moments() {
        // u = e^{-|x|²/4}, M = r², n = 2
        let u = FieldFunction::poly_gauss(2, &[1.0], 0.5, 0).unwrap();
        let t = modular_triple_nd(&u, &NFunction::power(2.0), &spec()).unwrap();
        let area = sphere_area(2);
        let k = area * scaled_moment(2, 2.0, 2.0);
        let l = area * scaled_moment(2, 0.0, 2.0);
        let g = area * 0.25 * scaled_moment(2, 2.0, 2.0);
        assert!(rel(t.k.value, k) < 1e-8, "{} vs {k}", t.k.value);
        assert!(rel(t.l.value, l) < 1e-8);
        assert!(rel(t.g.value, g) < 1e-8);
    }

    #[test]
    fn radial_field_agrees_with_profile() {
        let f = FieldFunction::gauss_bump(3, 0.0, 0.8).unwrap();
        let nf = NFunction::power_log();
        let nd = modular_triple_nd(&f, &nf, &spec()).unwrap();
        let radial = modular_triple_radial(f.radial_profile().unwrap(), &nf, 3, &spec()).unwrap();
        let area = sphere_area(3);
        for (a, b) in [(nd.k, radial.k), (nd.l, radial.l), (nd.g, radial.g)] {
            assert!(rel(a.value, area * b.value) < 1e-9);
        }
    }

    #[test]
    fn compact_support_and_breakpoints() {
        let bump = RadialTestFunction::bump(1.0, 0.5, 1.0).unwrap();
        let c = modular_radial(&bump, Quantity::Slope, &NFunction::power(2.0), 1, &spec()).unwrap();
        // |u'| = 2|r−1|/0.25 on (0.5, 1.5)
        let exact = {
            let f = |r: f64| (8.0 * (r - 1.0)).powi(2) * (-0.5 * r * r).exp();
            let mut s = 0.0;
            let m = 200_000;
            let h = 1.0 / m as f64;
            for i in 0..m {
                let x = 0.5 + (i as f64 + 0.5) * h;
                s += f(x) * h;
            }
            s
        };
        assert!(rel(c.value, exact) < 1e-8, "{} vs {exact}", c.value);
        assert!(moment(1, 0.0) > 0.0);
    }
}
