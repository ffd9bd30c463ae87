//! Hardy-type inequalities for the radial Gaussian measure and their
//! n-dimensional versions.
//!
//! Every checker compares a left side `K` against a right side built from
//! `L` and `G` (see [`crate::functionals`]) and returns a [`CheckReport`].
//! Error estimates from quadrature are propagated to the right side so that a
//! negative slack inside the error band is reported as indeterminate.

use std::f64::consts::E;

use thiserror::Error;

use crate::functionals::{
    luxemburg_norm_nd, luxemburg_norm_radial, modular_triple_nd, FieldFunction, FieldQuantity, FunctionalError, LuxemburgSpec,
    ModularTriple, Quantity, RadialTestFunction,
};
use crate::nfunc::{certify_convexity, GridSpec, NFunction, NfuncError};
use crate::optimize::golden_max;
use crate::quadrature::QuadratureSpec;
use crate::report::{decide, CheckReport, InequalityId, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HardyError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("D + n = {sum} is below e + 2; use the β/γ trade-off instead")]
    OutOfRegime { sum: f64 },
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Nfunc(#[from] NfuncError),
}

const DIVERGENT_NOTE: &str = "L=∞ outside admissible class";

/// `(D/d)^{D/(D−2)}`, the coefficient of the value-only bound.
pub fn value_only_constant(d: f64, big_d: f64) -> f64 {
    (big_d / d).powf(big_d / (big_d - 2.0))
}

/// `(½D G^{1/D} + (¼D² G^{2/D} + (D+n−2) L^{2/D})^{1/2})^D`.
pub fn mixed_power_rhs(g: f64, l: f64, big_d: f64, n: usize) -> f64 {
    let gd = g.powf(1.0 / big_d);
    let ld = l.powf(2.0 / big_d);
    let half = 0.5 * big_d * gd;
    (half + (half * half + (big_d + n as f64 - 2.0) * ld).sqrt()).powf(big_d)
}

/// Upper perturbation of [`mixed_power_rhs`] when `G` and `L` carry errors.
fn mixed_power_err(t: &ModularTriple, big_d: f64, n: usize) -> f64 {
    let base = mixed_power_rhs(t.g.value, t.l.value, big_d, n);
    mixed_power_rhs(t.g.value + t.g.err_est, t.l.value + t.l.err_est, big_d, n) - base
}

fn check_exponents(d: f64, big_d: f64) -> Result<(), HardyError> {
    if !(d >= 2.0) {
        return Err(HardyError::Precondition(format!("d_M = {d} must be at least 2")));
    }
    if !(big_d > 2.0) {
        return Err(HardyError::Precondition(format!("D_M = {big_d} must exceed 2")));
    }
    if d > big_d {
        return Err(HardyError::Precondition(format!("d_M = {d} exceeds D_M = {big_d}")));
    }
    Ok(())
}

fn mixed_power_report(id: InequalityId, t: &ModularTriple, big_d: f64, n: usize) -> CheckReport {
    let rhs = mixed_power_rhs(t.g.value, t.l.value, big_d, n);
    CheckReport::compare(id, t.k.value, rhs, t.k.err_est + mixed_power_err(t, big_d, n))
        .with_constant("D_M", big_d)
        .with_constant("n", n as f64)
}

/// Result of [`check_alternative`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeOutcome {
    /// The disjunction of the value-only and mixed-power bounds.
    pub alternative: CheckReport,
    /// The mixed-power bound alone, checked when `D + n ≥ e + 2`.
    pub mixed_power_only: Option<CheckReport>,
}

/// `K ≤ (D/d)^{D/(D−2)} L` or `K ≤ (½D G^{1/D} + (¼D²G^{2/D} + (D+n−2)L^{2/D})^{1/2})^D`.
pub fn check_alternative(t: &ModularTriple, d: f64, big_d: f64, n: usize) -> Result<AlternativeOutcome, HardyError> {
    check_exponents(d, big_d)?;
    if t.any_divergent() {
        return Ok(AlternativeOutcome {
            alternative: CheckReport::trivial(InequalityId::Alternative, DIVERGENT_NOTE),
            mixed_power_only: None,
        });
    }
    let c1 = value_only_constant(d, big_d);
    let rhs1 = c1 * t.l.value;
    let err1 = t.k.err_est + c1 * t.l.err_est;
    let rhs2 = mixed_power_rhs(t.g.value, t.l.value, big_d, n);
    let err2 = t.k.err_est + mixed_power_err(t, big_d, n);
    let v1 = decide(t.k.value, rhs1, err1);
    let v2 = decide(t.k.value, rhs2, err2);
    let (rhs, err) = if rhs1 >= rhs2 { (rhs1, err1) } else { (rhs2, err2) };
    let mut report = CheckReport::compare(InequalityId::Alternative, t.k.value, rhs, err)
        .with_constant("value_only_coefficient", c1)
        .with_constant("value_only_rhs", rhs1)
        .with_constant("mixed_power_rhs", rhs2)
        .with_constant("d_M", d)
        .with_constant("D_M", big_d);
    report.verdict = match (v1, v2) {
        (Verdict::Holds, _) | (_, Verdict::Holds) => Verdict::Holds,
        (Verdict::Indeterminate, _) | (_, Verdict::Indeterminate) => Verdict::Indeterminate,
        _ => Verdict::Fails,
    };
    report.branch = Some(
        match (v1 == Verdict::Holds, v2 == Verdict::Holds) {
            (true, true) => "both",
            (true, false) => "value_only",
            (false, true) => "mixed_power",
            (false, false) => "neither",
        }
        .to_string(),
    );
    let mixed_power_only = (big_d + n as f64 >= E + 2.0).then(|| mixed_power_report(InequalityId::MixedPower, t, big_d, n));
    Ok(AlternativeOutcome { alternative: report, mixed_power_only })
}

/// `C₁ = 2^{D−1}(D+n−2)^{D/2}`, `C₂ = 2^{D−1}D^D`, valid for `D + n ≥ e + 2`.
pub fn linear_constants(big_d: f64, n: usize) -> Result<(f64, f64), HardyError> {
    let sum = big_d + n as f64;
    if sum < E + 2.0 {
        return Err(HardyError::OutOfRegime { sum });
    }
    let c1 = 2f64.powf(big_d - 1.0) * (sum - 2.0).powf(big_d / 2.0);
    let c2 = 2f64.powf(big_d - 1.0) * big_d.powf(big_d);
    Ok((c1, c2))
}

/// `K ≤ C₁L + C₂G`.
pub fn check_linear(t: &ModularTriple, c1: f64, c2: f64) -> CheckReport {
    linear_report(InequalityId::Linear, t, c1, c2)
}

fn linear_report(id: InequalityId, t: &ModularTriple, c1: f64, c2: f64) -> CheckReport {
    if t.any_divergent() {
        return CheckReport::trivial(id, DIVERGENT_NOTE).with_constant("C1", c1).with_constant("C2", c2);
    }
    let rhs = c1 * t.l.value + c2 * t.g.value;
    let err = t.k.err_est + c1 * t.l.err_est + c2 * t.g.err_est;
    CheckReport::compare(id, t.k.value, rhs, err).with_constant("C1", c1).with_constant("C2", c2)
}

/// `K ≤ 2nL + 4G` for `M(r) = r²`.
pub fn check_quadratic_exact(t: &ModularTriple, n: usize) -> CheckReport {
    linear_report(InequalityId::QuadraticExact, t, 2.0 * n as f64, 4.0)
}

/// The same inequality read as `¼K ≤ L + (n/2)G`, i.e. `C₁ = 4`, `C₂ = 2n`.
/// This reading is false in general (it fails for `u ≡ 1` once `n > 4`) and is
/// kept only as a diagnostic.
pub fn check_quadratic_literal(t: &ModularTriple, n: usize) -> CheckReport {
    linear_report(InequalityId::QuadraticExact, t, 4.0, 2.0 * n as f64).with_note("literal reading ¼K ≤ L + (n/2)G")
}

/// Upper end of the search interval for β: beyond it `(1 + 1/w²)^D < ρ`, so
/// the objective is negative.
fn beta_search_end(rho: f64, big_d: f64) -> f64 {
    (rho.powf(1.0 / big_d) - 1.0).powf(-0.5)
}

/// Upper end for γ: beyond it `(1 + 1/w)^D < ρ`.
fn gamma_search_end(rho: f64, big_d: f64) -> f64 {
    1.0 / (rho.powf(1.0 / big_d) - 1.0)
}

fn sup_over_w<F: Fn(f64) -> f64>(f: F, w_end: f64) -> f64 {
    // f(0⁺) = 1 for both objectives; scan log w, then refine.
    let lo = (w_end * 1e-12).ln();
    let hi = w_end.ln();
    let steps = 4000;
    let g = |t: f64| f(t.exp());
    let mut best = (lo, g(lo));
    for i in 0..=steps {
        let t = lo + (hi - lo) * i as f64 / steps as f64;
        let v = g(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let h = (hi - lo) / steps as f64;
    let (_, v) = golden_max(g, best.0 - h, (best.0 + h).min(hi), 1e-14);
    v.max(best.1).max(1.0)
}

/// `β(ρ) = sup_w {(w/2 + (w²/4 + 1)^{1/2})^D − ρw^D}` and
/// `γ(ρ) = sup_w {(1/2 + (1/4 + w²)^{1/2})^D − ρw^D}` for `ρ > 1`.
pub fn beta_gamma(rho: f64, big_d: f64) -> Result<(f64, f64), HardyError> {
    if !(rho > 1.0) {
        return Err(HardyError::Precondition(format!("rho = {rho} must exceed 1 (the suprema are infinite otherwise)")));
    }
    if !(big_d > 2.0) {
        return Err(HardyError::Precondition(format!("D_M = {big_d} must exceed 2")));
    }
    let beta = sup_over_w(|w| (0.5 * w + (0.25 * w * w + 1.0).sqrt()).powf(big_d) - rho * w.powf(big_d), beta_search_end(rho, big_d));
    let gamma = sup_over_w(|w| (0.5 + (0.25 + w * w).sqrt()).powf(big_d) - rho * w.powf(big_d), gamma_search_end(rho, big_d));
    Ok((beta, gamma))
}

/// The two linear trade-off forms implied by the mixed-power bound:
/// `K ≤ β(ρ)(D+n−2)^{D/2}L + ρD^D G` and `K ≤ ρ(D+n−2)^{D/2}L + γ(ρ)D^D G`.
pub fn tradeoff_check(t: &ModularTriple, rho: f64, big_d: f64, n: usize) -> Result<(CheckReport, CheckReport), HardyError> {
    let (beta, gamma) = beta_gamma(rho, big_d)?;
    let a = (big_d + n as f64 - 2.0).powf(big_d / 2.0);
    let b = big_d.powf(big_d);
    let mut first = linear_report(InequalityId::Tradeoff, t, beta * a, rho * b).with_constant("rho", rho).with_constant("beta", beta);
    first.branch = Some(format!("beta_form rho={rho}"));
    let mut second = linear_report(InequalityId::Tradeoff, t, rho * a, gamma * b).with_constant("rho", rho).with_constant("gamma", gamma);
    second.branch = Some(format!("gamma_form rho={rho}"));
    if big_d + (n as f64) < E + 2.0 {
        first = first.with_note("D+n < e+2: derived from the mixed-power bound, which need not hold alone");
        second = second.with_note("D+n < e+2: derived from the mixed-power bound, which need not hold alone");
    }
    Ok((first, second))
}

/// Constants of the convex-case modular inequality, obtained by running the
/// proof's estimate with `ε = (4D)^{−1}` and `κ = 2(D+n)^{1/2}`:
///
/// ```text
/// K ≤ κ^D L + 2^D e^{2κ²} κ^{D+n−2}(L + G) + ¼K + ¼K + D(4D)^D G
/// C₁ = 2(κ^D + 2^D e^{2κ²} κ^{D+n−2})
/// C₂ = 2(2^D e^{2κ²} κ^{D+n−2} + D(4D)^D)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexConstants {
    pub c1: f64,
    pub c2: f64,
    pub eps: f64,
    pub kappa: f64,
}

impl ConvexConstants {
    pub fn new(big_d: f64, n: usize) -> Self {
        let nf = n as f64;
        let eps = 1.0 / (4.0 * big_d);
        let kappa = 2.0 * (big_d + nf).sqrt();
        let boundary = 2f64.powf(big_d) * (2.0 * kappa * kappa).exp() * kappa.powf(big_d + nf - 2.0);
        let c1 = 2.0 * (kappa.powf(big_d) + boundary);
        let c2 = 2.0 * (boundary + big_d * (4.0 * big_d).powf(big_d));
        ConvexConstants { c1, c2, eps, kappa }
    }

    /// Constant of the norm form, `C₁ + C₂ + 1`.
    pub fn norm_constant(&self) -> f64 {
        self.c1 + self.c2 + 1.0
    }

    fn annotate(&self, r: CheckReport) -> CheckReport {
        r.with_constant("C1", self.c1).with_constant("C2", self.c2).with_constant("eps", self.eps).with_constant("kappa", self.kappa)
    }
}

/// Grid on which convexity is certified before the convex-case checks.
fn convexity_grid() -> GridSpec {
    GridSpec::log(1e-4, 1e4, 120)
}

fn convex_exponent(nf: &NFunction) -> Result<f64, HardyError> {
    certify_convexity(nf, &convexity_grid()).map_err(|e| HardyError::Precondition(e.to_string()))?;
    let big_d = nf.upper()?;
    if !(big_d >= 1.0) {
        return Err(HardyError::Precondition(format!("a convex doubling function has D_M ≥ 1, got {big_d}")));
    }
    Ok(big_d)
}

/// `K ≤ C₁L + C₂G` for convex doubling `M`, with the proof-derived constants.
pub fn check_convex_case(t: &ModularTriple, nf: &NFunction, n: usize) -> Result<CheckReport, HardyError> {
    let big_d = convex_exponent(nf)?;
    let c = ConvexConstants::new(big_d, n);
    Ok(c.annotate(linear_report(InequalityId::ConvexModular, t, c.c1, c.c2)))
}

fn norm_report(id: InequalityId, weighted: f64, value: f64, slope: f64, c: &ConvexConstants, rel: f64) -> CheckReport {
    let denom = value + slope;
    if denom == 0.0 {
        return c.annotate(CheckReport::trivial(id, "zero denominator"));
    }
    let big_c = c.norm_constant();
    let rhs = big_c * denom;
    let err = rel * (weighted + rhs);
    c.annotate(CheckReport::compare(id, weighted, rhs, err)).with_constant("C", big_c).with_constant("ratio", weighted / denom)
}

/// `‖r·u‖ ≤ C(‖u‖ + ‖u'‖)` in `L^M(μ_n)` with `C = C₁ + C₂ + 1`.
pub fn check_norm_form_radial(
    u: &RadialTestFunction,
    nf: &NFunction,
    n: usize,
    spec: &QuadratureSpec,
    lux: &LuxemburgSpec,
) -> Result<CheckReport, HardyError> {
    let big_d = convex_exponent(nf)?;
    let c = ConvexConstants::new(big_d, n);
    let norm = |q| match luxemburg_norm_radial(u, q, nf, n, spec, lux) {
        Ok(v) => Ok(Some(v)),
        Err(FunctionalError::Divergent(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let (w, v, s) = (norm(Quantity::Weighted)?, norm(Quantity::Value)?, norm(Quantity::Slope)?);
    let (Some(w), Some(v), Some(s)) = (w, v, s) else {
        return Ok(c.annotate(CheckReport::trivial(InequalityId::ConvexNorm, DIVERGENT_NOTE)));
    };
    let rel = lux.rel_tol + [w, v, s].iter().map(|x| x.modular_err).fold(0.0, f64::max);
    Ok(norm_report(InequalityId::ConvexNorm, w.value, v.value, s.value, &c, rel))
}

/// Which n-dimensional inequality [`check_nd`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NdForm {
    /// Convex case, modular form.
    ConvexModular,
    /// Convex case, norm form.
    ConvexNorm,
    /// Mixed-power bound under growth condition exponents.
    MixedPower,
}

impl NdForm {
    pub fn id(self) -> InequalityId {
        match self {
            NdForm::ConvexModular => InequalityId::NdConvexModular,
            NdForm::ConvexNorm => InequalityId::NdConvexNorm,
            NdForm::MixedPower => InequalityId::NdMixedPower,
        }
    }
}

/// n-dimensional inequalities against the Gaussian measure, with the
/// one-dimensional constants.
pub fn check_nd(
    u: &FieldFunction,
    nf: &NFunction,
    form: NdForm,
    spec: &QuadratureSpec,
    lux: &LuxemburgSpec,
) -> Result<CheckReport, HardyError> {
    let n = u.dim();
    u.require(FieldQuantity::Gradient)?;
    let report = match form {
        NdForm::ConvexModular => {
            let big_d = convex_exponent(nf)?;
            let c = ConvexConstants::new(big_d, n);
            let t = modular_triple_nd(u, nf, spec)?;
            c.annotate(linear_report(form.id(), &t, c.c1, c.c2))
        }
        NdForm::ConvexNorm => {
            let big_d = convex_exponent(nf)?;
            let c = ConvexConstants::new(big_d, n);
            let norm = |q| luxemburg_norm_nd(u, q, nf, spec, lux);
            let w = norm(FieldQuantity::Weighted)?;
            let v = norm(FieldQuantity::Value)?;
            let s = norm(FieldQuantity::Gradient)?;
            let rel = lux.rel_tol + [w, v, s].iter().map(|x| x.modular_err).fold(0.0, f64::max);
            norm_report(form.id(), w.value, v.value, s.value, &c, rel)
        }
        NdForm::MixedPower => {
            let (d, big_d) = nf.exponents()?;
            check_exponents(d, big_d)?;
            let floor = 2f64.max(E + 2.0 - n as f64);
            if !(big_d > floor) {
                return Err(HardyError::Precondition(format!("D_M = {big_d} must exceed max(2, e + 2 − n) = {floor}")));
            }
            let t = modular_triple_nd(u, nf, spec)?;
            if t.any_divergent() {
                CheckReport::trivial(form.id(), DIVERGENT_NOTE)
            } else {
                mixed_power_report(form.id(), &t, big_d, n)
            }
        }
    };
    Ok(report.with_subject(u.label(), nf.label(), n).with_constant("normalization_factor", spec.normalization.factor(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::modular_triple_radial;
    use crate::quadrature::moment;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn extremal_triple(alpha: f64, p: f64, n: usize) -> ModularTriple {
        let k = (1.0 - alpha).powf(-(n as f64 + p) / 2.0) * moment(n, p);
        let l = (1.0 - alpha).powf(-(n as f64) / 2.0) * moment(n, 0.0);
        ModularTriple::exact(k, l, (alpha / p).powf(p) * k)
    }

    #[test]
    fn zero_triple_holds_everywhere() {
        let z = ModularTriple::exact(0.0, 0.0, 0.0);
        let out = check_alternative(&z, 3.0, 3.0, 1).unwrap();
        assert_eq!(out.alternative.verdict, Verdict::Holds);
        assert_eq!(out.alternative.slack, 0.0);
        assert_eq!(check_linear(&z, 1.0, 1.0).slack, 0.0);
        assert_eq!(check_convex_case(&z, &NFunction::power(2.0), 1).unwrap().verdict, Verdict::Holds);
        let (a, b) = tradeoff_check(&z, 1.5, 4.0, 3).unwrap();
        assert_eq!((a.verdict, b.verdict), (Verdict::Holds, Verdict::Holds));
    }

    #[test]
    fn extremal_family_satisfies_alternative() {
        for alpha in [0.0, 0.5, 0.9] {
            let out = check_alternative(&extremal_triple(alpha, 3.0, 3), 3.0, 3.0, 3).unwrap();
            assert_eq!(out.alternative.verdict, Verdict::Holds);
            assert!(out.alternative.slack > 0.0);
            let mp = out.mixed_power_only.unwrap();
            assert!(mp.slack > 0.0, "alpha={alpha}");
        }
    }

    #[test]
    fn low_dimension_reports_branch() {
        let out = check_alternative(&extremal_triple(0.5, 3.0, 1), 3.0, 3.0, 1).unwrap();
        assert!(out.mixed_power_only.is_none());
        assert!(out.alternative.branch.is_some());
        assert_eq!(out.alternative.verdict, Verdict::Holds);
    }

    #[test]
    fn rejects_bad_exponents() {
        let t = ModularTriple::exact(1.0, 1.0, 1.0);
        assert!(check_alternative(&t, 1.5, 3.0, 1).is_err());
        assert!(check_alternative(&t, 2.0, 2.0, 1).is_err());
    }

    #[test]
    fn explicit_linear_constants() {
        let (c1, c2) = linear_constants(4.0, 1).unwrap();
        assert!((c1 - 72.0).abs() < 1e-12 && (c2 - 2048.0).abs() < 1e-9);
        let (c1, c2) = linear_constants(3.0, 2).unwrap();
        assert!((c1 - 4.0 * 27f64.sqrt()).abs() < 1e-12);
        assert!((c1 - 20.78).abs() < 0.01);
        assert!((c2 - 108.0).abs() < 1e-12);
        assert!(matches!(linear_constants(2.5, 1), Err(HardyError::OutOfRegime { .. })));
    }

    #[test]
    fn quadratic_slack_identity() {
        // (K − 4G)/L = n(1+α) so slack/L = 2n − n(1+α)
        let n = 2;
        let t = extremal_triple(0.5, 2.0, n);
        let r = check_quadratic_exact(&t, n);
        assert!((r.slack / t.l.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn literal_quadratic_reading_is_false() {
        let u = RadialTestFunction::gaussian_power(0.0, 2.0);
        let t = modular_triple_radial(&u, &NFunction::power(2.0), 5, &spec()).unwrap();
        assert_eq!(check_quadratic_literal(&t, 5).verdict, Verdict::Fails);
        assert_eq!(check_quadratic_exact(&t, 5).verdict, Verdict::Holds);
    }

    #[test]
    fn beta_gamma_against_dense_scan() {
        let (beta, gamma) = beta_gamma(2.0, 4.0).unwrap();
        let scan = |f: &dyn Fn(f64) -> f64| {
            (0..=1_000_000).map(|i| 10f64.powf(-6.0 + 9.0 * i as f64 / 1e6)).map(f).fold(f64::NEG_INFINITY, f64::max)
        };
        let b = scan(&|w: f64| (0.5 * w + (0.25 * w * w + 1.0).sqrt()).powi(4) - 2.0 * w.powi(4));
        let g = scan(&|w: f64| (0.5 + (0.25 + w * w).sqrt()).powi(4) - 2.0 * w.powi(4));
        assert!((beta - b).abs() <= 1e-8 * b.abs().max(1.0), "{beta} vs {b}");
        assert!((gamma - g).abs() <= 1e-8 * g.abs().max(1.0), "{gamma} vs {g}");
        assert!(beta_gamma(1.0, 4.0).is_err());
    }

    #[test]
    fn beta_tends_to_one_for_large_rho() {
        let (b, _) = beta_gamma(1e6, 3.0).unwrap();
        assert!((1.0..1.01).contains(&b));
    }

    #[test]
    fn tradeoff_on_extremal_family() {
        for alpha in [0.0, 0.5, 0.9] {
            let (a, b) = tradeoff_check(&extremal_triple(alpha, 4.0, 3), 1.5, 4.0, 3).unwrap();
            assert_eq!(a.verdict, Verdict::Holds);
            assert_eq!(b.verdict, Verdict::Holds);
        }
    }

    #[test]
    fn convex_constants_formula() {
        let c = ConvexConstants::new(2.0, 1);
        let kappa = 2.0 * 3f64.sqrt();
        assert_eq!(c.kappa, kappa);
        let boundary = 4.0 * (2.0 * kappa * kappa).exp() * kappa;
        assert!((c.c1 / (2.0 * (kappa * kappa + boundary)) - 1.0).abs() < 1e-14);
        assert!((c.c2 / (2.0 * (boundary + 2.0 * 64.0)) - 1.0).abs() < 1e-14);
        assert!(check_convex_case(
            &ModularTriple::exact(0.0, 0.0, 0.0),
            &NFunction::new("sqrt", |r: f64| r.sqrt()).with_exponents(0.5, 0.5),
            1
        )
        .is_err());
    }

    #[test]
    fn norm_form_is_scale_invariant() {
        let nf = NFunction::power(3.0);
        let base = RadialTestFunction::poly_gauss(&[1.0, -1.0, 0.5], 0.5).unwrap();
        let scaled = RadialTestFunction::poly_gauss(&[7.0, -7.0, 3.5], 0.5).unwrap();
        let lux = LuxemburgSpec::default();
        let a = check_norm_form_radial(&base, &nf, 2, &spec(), &lux).unwrap();
        let b = check_norm_form_radial(&scaled, &nf, 2, &spec(), &lux).unwrap();
        assert_eq!(a.verdict, Verdict::Holds);
        let (ra, rb) = (a.constants_used["ratio"], b.constants_used["ratio"]);
        assert!((ra / rb - 1.0).abs() < 1e-8);
        let z = check_norm_form_radial(&RadialTestFunction::zero(), &nf, 2, &spec(), &lux).unwrap();
        assert_eq!(z.verdict, Verdict::Trivial);
    }

    #[test]
    fn nd_radial_slack_matches_radial_slack() {
        let f = FieldFunction::gauss_bump(2, 0.0, 1.0).unwrap();
        let nf = NFunction::power(4.0);
        let r = check_nd(&f, &nf, NdForm::MixedPower, &spec(), &LuxemburgSpec::default()).unwrap();
        let t = modular_triple_radial(f.radial_profile().unwrap(), &nf, 2, &spec()).unwrap();
        let radial = check_alternative(&t, 4.0, 4.0, 2).unwrap().mixed_power_only.unwrap();
        let omega = crate::special::sphere_area(2);
        assert!((r.slack - omega * radial.slack).abs() <= 1e-9 * r.slack.abs());
    }

    #[test]
    fn nd_non_radial_mixed_power() {
        let f = FieldFunction::poly_gauss(2, &[0.0, 1.0], 0.5, 0).unwrap();
        let r = check_nd(&f, &NFunction::power(4.0), NdForm::MixedPower, &spec(), &LuxemburgSpec::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        let err = check_nd(&f, &NFunction::power(2.5), NdForm::MixedPower, &spec(), &LuxemburgSpec::default()).unwrap_err();
        assert!(err.to_string().contains("e + 2"));
    }

    #[test]
    fn beta_gamma_non_increasing_in_rho() {
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for rho in [1.05, 1.2, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0] {
            let (b, g) = beta_gamma(rho, 3.5).unwrap();
            assert!(b <= prev.0 * (1.0 + 1e-10) && g <= prev.1 * (1.0 + 1e-10), "rho={rho}");
            prev = (b, g);
        }
    }

    #[test]
    fn normalization_leaves_verdicts_unchanged() {
        use crate::quadrature::Normalization;
        let f = FieldFunction::gauss_bump(3, 0.0, 0.8).unwrap();
        let nf = NFunction::power(4.0);
        let mut prob = spec();
        prob.normalization = Normalization::Probability;
        let lux = LuxemburgSpec::default();
        for form in [NdForm::MixedPower, NdForm::ConvexModular] {
            let a = check_nd(&f, &nf, form, &spec(), &lux).unwrap();
            let b = check_nd(&f, &nf, form, &prob, &lux).unwrap();
            assert_eq!(a.verdict, b.verdict);
            let factor = Normalization::Probability.factor(3);
            assert!((a.lhs * factor / b.lhs - 1.0).abs() < 1e-9);
        }
    }
}
