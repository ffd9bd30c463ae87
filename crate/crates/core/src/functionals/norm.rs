//! Luxemburg norms `inf{K > 0 : ∫ M(|f|/K) dμ ≤ 1}`.
//!
//! Under Δ₂ the modular is continuous and strictly decreasing in `K`, so the
//! norm is the root of `modular(K) = 1`. The solver adapts a quadrature rule
//! once, freezes its nodes and bisects on `ln K` against that cheap rule, then
//! re-checks the root with a fresh adaptive integral and re-adapts if needed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{FieldFunction, FieldQuantity};
use super::radial::{Quantity, RadialTestFunction};
use super::{ln_m, log_integrand, modular_domain, Domain, FunctionalError};
use crate::nfunc::NFunction;
use crate::quadrature::{half_line_rule, HalfLine, QuadratureSpec, RadialMeasure, SphereDesign};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuxemburgSpec {
    /// Accept the root once the modular is within this distance of 1.
    pub rel_tol: f64,
    pub max_rounds: usize,
}

impl Default for LuxemburgSpec {
    fn default() -> Self {
        LuxemburgSpec { rel_tol: 1e-9, max_rounds: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Modular at `value`, from an independent adaptive integral.
    pub modular: f64,
    pub modular_err: f64,
    pub rounds: usize,
}

impl NormEstimate {
    fn zero() -> Self {
        NormEstimate { value: 0.0, modular: 0.0, modular_err: 0.0, rounds: 0 }
    }
}

/// Quadrature nodes with cached log-profile values and log-weights.
struct FrozenRule {
    t: Vec<f64>,
    ln_w: Vec<f64>,
    scale: f64,
}

impl FrozenRule {
    fn modular(&self, nf: &NFunction, ln_k: f64) -> f64 {
        let s: f64 = self
            .t
            .iter()
            .zip(&self.ln_w)
            .map(|(&t, &lw)| if t == f64::NEG_INFINITY || lw == f64::NEG_INFINITY { 0.0 } else { (ln_m(nf, t - ln_k) + lw).exp() })
            .sum();
        self.scale * s
    }

    fn is_zero(&self) -> bool {
        self.t.iter().zip(&self.ln_w).all(|(&t, &w)| t == f64::NEG_INFINITY || w == f64::NEG_INFINITY)
    }
}

const MAX_LN_SCALE: f64 = 60.0 * std::f64::consts::LN_2;

fn solve<B, V>(nf: &NFunction, lux: &LuxemburgSpec, build: B, verify: V) -> Result<NormEstimate, FunctionalError>
where
    B: Fn(f64) -> Result<FrozenRule, FunctionalError>,
    V: Fn(f64) -> Result<(f64, f64), FunctionalError>,
{
    nf.upper()?;
    let mut ln_k = 0.0;
    let mut rule = build(ln_k)?;
    if rule.is_zero() {
        return Ok(NormEstimate::zero());
    }
    let mut last_modular = f64::NAN;
    for round in 1..=lux.max_rounds.max(1) {
        let m = |lk: f64| rule.modular(nf, lk);
        let (mut lo, mut hi) = (ln_k, ln_k);
        if m(ln_k) > 1.0 {
            while m(hi) > 1.0 {
                lo = hi;
                hi += std::f64::consts::LN_2;
                if hi > MAX_LN_SCALE {
                    return Err(FunctionalError::Divergent("no Luxemburg bracket within a 2^60 scaling".into()));
                }
            }
        } else {
            while m(lo) <= 1.0 {
                hi = lo;
                lo -= std::f64::consts::LN_2;
                if lo < -MAX_LN_SCALE {
                    return Err(FunctionalError::Divergent("no Luxemburg bracket within a 2^-60 scaling".into()));
                }
            }
        }
        // m(lo) > 1 ≥ m(hi)
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let v = m(mid);
            if (v - 1.0).abs() <= 1e-14 || hi - lo <= 1e-15 * mid.abs().max(1.0) {
                break;
            }
            if v > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ln_k = mid;
        let (mv, ev) = verify(ln_k)?;
        last_modular = mv;
        if (mv - 1.0).abs() <= lux.rel_tol + ev {
            return Ok(NormEstimate { value: ln_k.exp(), modular: mv, modular_err: ev, rounds: round });
        }
        rule = build(ln_k)?;
    }
    Err(FunctionalError::NormNotConverged { modular: last_modular })
}

fn radial_rule<P>(
    ln_profile: &P,
    nf: &NFunction,
    n: usize,
    opts: &HalfLine,
    spec: &QuadratureSpec,
    ln_k: f64,
) -> Result<FrozenRule, FunctionalError>
where
    P: Fn(f64) -> f64 + Sync,
{
    let measure = RadialMeasure::new(n)?;
    let g = log_integrand(ln_profile, nf, measure, ln_k);
    let rule = half_line_rule(&g, opts, spec)?;
    let nodes = rule.adapted.nodes();
    Ok(FrozenRule {
        t: nodes.iter().map(|&(r, _)| ln_profile(r)).collect(),
        ln_w: nodes.iter().map(|&(r, w)| w.ln() + measure.ln_density(r)).collect(),
        scale: 1.0,
    })
}

fn radial_verify<P>(
    ln_profile: &P,
    nf: &NFunction,
    n: usize,
    opts: &HalfLine,
    spec: &QuadratureSpec,
    ln_k: f64,
) -> Result<(f64, f64), FunctionalError>
where
    P: Fn(f64) -> f64 + Sync,
{
    let measure = RadialMeasure::new(n)?;
    let g = log_integrand(ln_profile, nf, measure, ln_k);
    let est = half_line_rule(&g, opts, spec)?.estimate;
    Ok((est.value, est.err_est))
}

/// Norm of an arbitrary function `f` in `L^M((0, ∞), μ_n)`. `opts` describes
/// the integrand `M(|f|)·r^{n-1}e^{-r²/2}`.
pub fn luxemburg_norm<F>(
    f: F,
    nf: &NFunction,
    n: usize,
    opts: &HalfLine,
    spec: &QuadratureSpec,
    lux: &LuxemburgSpec,
) -> Result<NormEstimate, FunctionalError>
where
    F: Fn(f64) -> f64 + Sync,
{
    let ln_profile = |r: f64| f(r).abs().ln();
    solve(nf, lux, |lk| radial_rule(&ln_profile, nf, n, opts, spec, lk), |lk| radial_verify(&ln_profile, nf, n, opts, spec, lk))
}

/// Norm of `r·|u|`, `|u|` or `|u'|` in `L^M((0, ∞), μ_n)`.
pub fn luxemburg_norm_radial(
    u: &RadialTestFunction,
    q: Quantity,
    nf: &NFunction,
    n: usize,
    spec: &QuadratureSpec,
    lux: &LuxemburgSpec,
) -> Result<NormEstimate, FunctionalError> {
    let opts = match modular_domain(u.hint(q), nf, n, u.breakpoints())? {
        Domain::Ready(o) => o,
        Domain::Divergent { rate } => {
            return Err(FunctionalError::Divergent(format!(
                "{}: modular of {q:?} is infinite for every scale (net rate {rate})",
                u.label()
            )))
        }
    };
    let ln_profile = |r: f64| u.ln_abs(q, r);
    solve(nf, lux, |lk| radial_rule(&ln_profile, nf, n, &opts, spec, lk), |lk| radial_verify(&ln_profile, nf, n, &opts, spec, lk))
}

/// Adapted nodes `(ln value, ln weight)` along one direction, with the modular estimate and its error.
type DirectionProfile = (Vec<(f64, f64)>, f64, f64);

/// Norm of a field quantity in `L^M(ℝⁿ, γ_n)` under `spec.normalization`.
pub fn luxemburg_norm_nd(
    u: &FieldFunction,
    q: FieldQuantity,
    nf: &NFunction,
    spec: &QuadratureSpec,
    lux: &LuxemburgSpec,
) -> Result<NormEstimate, FunctionalError> {
    u.require(q)?;
    spec.validate()?;
    let n = u.dim();
    let opts = match modular_domain(u.hint(q), nf, n, &[])? {
        Domain::Ready(o) => o,
        Domain::Divergent { rate } => {
            return Err(FunctionalError::Divergent(format!("{}: modular of {q:?} is infinite (net rate {rate})", u.label())))
        }
    };
    let design = SphereDesign::new(n, spec.sphere_nodes, spec.seed)?;
    let measure = RadialMeasure::new(n)?;
    let scale = design.area() * spec.normalization.factor(n) / design.directions().len() as f64;

    let per_direction = |lk: f64| -> Result<Vec<DirectionProfile>, FunctionalError> {
        design
            .directions()
            .par_iter()
            .map(|y| {
                let ln_profile = |r: f64| {
                    let mut buf = [0.0; crate::quadrature::sphere::MAX_DIM];
                    for (b, c) in buf.iter_mut().zip(y) {
                        *b = c * r;
                    }
                    u.quantity(q, &buf[..n]).ln()
                };
                let g = log_integrand(&ln_profile, nf, measure, lk);
                let rule = half_line_rule(&g, &opts, spec)?;
                let nodes: Vec<(f64, f64)> =
                    rule.adapted.nodes().into_iter().map(|(r, w)| (ln_profile(r), w.ln() + measure.ln_density(r))).collect();
                Ok((nodes, rule.estimate.value, rule.estimate.err_est))
            })
            .collect()
    };

    let build = |lk: f64| -> Result<FrozenRule, FunctionalError> {
        let dirs = per_direction(lk)?;
        let mut t = Vec::new();
        let mut ln_w = Vec::new();
        for (nodes, _, _) in dirs {
            for (ti, wi) in nodes {
                t.push(ti);
                ln_w.push(wi);
            }
        }
        Ok(FrozenRule { t, ln_w, scale })
    };
    let verify = |lk: f64| -> Result<(f64, f64), FunctionalError> {
        let dirs = per_direction(lk)?;
        let value: f64 = dirs.iter().map(|d| d.1).sum::<f64>() * scale;
        let err: f64 = dirs.iter().map(|d| d.2).sum::<f64>() * scale;
        Ok((value, err))
    };
    solve(nf, lux, build, verify)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{modular_radial, SupportHint};
    use crate::quadrature::Envelope;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn constant_in_quadratic_space() {
        let opts = HalfLine::with_envelope(Envelope::radial(1, 0.0));
        let norm = luxemburg_norm(|_| 1.0, &NFunction::power(2.0), 1, &opts, &spec(), &LuxemburgSpec::default()).unwrap();
        let exact = (std::f64::consts::PI / 2.0).powf(0.25);
        assert!((norm.value - exact).abs() < 1e-9 * exact, "{}", norm.value);
        assert!((exact - 1.119_515_134_920_247_7).abs() < 1e-15);
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let n = luxemburg_norm_radial(
            &RadialTestFunction::zero(),
            Quantity::Value,
            &NFunction::power(3.0),
            2,
            &spec(),
            &LuxemburgSpec::default(),
        )
        .unwrap();
        assert_eq!(n.value, 0.0);
    }

    #[test]
    fn power_norm_is_p_root_of_integral() {
        let u = RadialTestFunction::poly_gauss(&[1.0, -1.0, 0.5], 0.5).unwrap();
        for p in [2.0, 3.0] {
            let nf = NFunction::power(p);
            let norm = luxemburg_norm_radial(&u, Quantity::Weighted, &nf, 2, &spec(), &LuxemburgSpec::default()).unwrap();
            let integral = modular_radial(&u, Quantity::Weighted, &nf, 2, &spec()).unwrap().value;
            assert!((norm.value / integral.powf(1.0 / p) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn homogeneity() {
        let nf = NFunction::power_log();
        let lux = LuxemburgSpec::default();
        let base = RadialTestFunction::bump(1.0, 0.8, 2.0).unwrap();
        let n0 = luxemburg_norm_radial(&base, Quantity::Value, &nf, 2, &spec(), &lux).unwrap().value;
        for c in [0.1, 2.0, 17.0] {
            let b = base.clone();
            let scaled = RadialTestFunction::new("scaled", move |r| c * b.u(r), |_| 0.0, SupportHint::Compact { radius: 1.8 })
                .with_breakpoints(&[0.2, 1.8]);
            let nc = luxemburg_norm_radial(&scaled, Quantity::Value, &nf, 2, &spec(), &lux).unwrap().value;
            assert!((nc / (c * n0) - 1.0).abs() < 1e-8, "c={c}");
        }
    }

    #[test]
    fn divergent_norm_is_an_error() {
        let u = RadialTestFunction::gaussian_power(0.9, 2.0);
        let err = luxemburg_norm_radial(&u, Quantity::Value, &NFunction::power(4.0), 1, &spec(), &LuxemburgSpec::default()).unwrap_err();
        assert!(matches!(err, FunctionalError::Divergent(_)));
    }

    #[test]
    fn nd_radial_norm_matches_radial_norm_with_area() {
        let f = FieldFunction::gauss_bump(2, 0.0, 1.0).unwrap();
        let nf = NFunction::power(2.0);
        let lux = LuxemburgSpec::default();
        let nd = luxemburg_norm_nd(&f, FieldQuantity::Value, &nf, &spec(), &lux).unwrap().value;
        let radial = luxemburg_norm_radial(f.radial_profile().unwrap(), Quantity::Value, &nf, 2, &spec(), &lux).unwrap().value;
        // ‖u‖² = 2π·∫|u|² dμ_2 for M = r²
        assert!((nd / (radial * (2.0 * std::f64::consts::PI).sqrt()) - 1.0).abs() < 1e-8);
    }
}
