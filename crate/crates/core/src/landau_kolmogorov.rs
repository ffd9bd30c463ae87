//! Landau–Kolmogorov-type inequalities for the Gaussian measure:
//!
//! ```text
//! ∫M(|∇u|) ≤ C₁∫M(θ|∇²u|) + C₂∫M(|u|/θ)        (0 < θ ≤ 1)
//! ‖∇u‖ ≤ C̃₁(‖∇²u‖‖u‖)^{1/2} + C̃₂‖u‖
//! ```
//!
//! No explicit constants are known, so they are fitted as envelopes over a
//! declared corpus and every report names the member that fixed them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::{
    luxemburg_norm_nd, modular_nd, modular_nd_scaled, Component, FieldFunction, FieldQuantity, FunctionalError, LuxemburgSpec,
};
use crate::hardy::{check_nd, HardyError, NdForm};
use crate::nfunc::{certify_growth, GridSpec, NFunction, NfuncError};
use crate::quadrature::QuadratureSpec;
use crate::report::{decide, tolerance_for, LkForm, LkReport, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LkError {
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Nfunc(#[from] NfuncError),
    #[error(transparent)]
    Hardy(#[from] HardyError),
}

/// Default candidate grid for fitted constants.
pub fn default_fit_grid() -> Vec<f64> {
    crate::nfunc::logspace(1e-3, 1e4, 141)
}

pub const DEFAULT_THETAS: [f64; 3] = [0.25, 0.5, 1.0];

/// `M(r)/r²` non-decreasing, checked as `d_M ≥ 2`. Pinned exponents are used
/// when present, otherwise the certified estimate on the default grid.
pub fn require_quadratic_growth(nf: &NFunction) -> Result<f64, LkError> {
    let d = match nf.lower_exponent() {
        Some(d) => d,
        None => certify_growth(nf, &GridSpec::default())?.d_est,
    };
    if d < 2.0 - 1e-12 {
        return Err(LkError::Hypothesis(format!("{}: d_M = {d} < 2, so M(r)/r² is not non-decreasing", nf.label())));
    }
    Ok(d)
}

fn base_report(form: LkForm, u: &FieldFunction, nf: &NFunction) -> LkReport {
    LkReport {
        form,
        subject: u.label().to_string(),
        nfunction: nf.label().to_string(),
        dim: u.dim(),
        lhs: 0.0,
        rhs_terms: BTreeMap::new(),
        theta: None,
        constants_used: BTreeMap::new(),
        slack: 0.0,
        tolerance: 0.0,
        err_est: 0.0,
        verdict: Verdict::Holds,
        provenance: Vec::new(),
        notes: Vec::new(),
    }
}

/// The three modulars entering the θ-form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkModulars {
    pub gradient: Component,
    pub hessian: Component,
    pub value: Component,
}

/// `∫M(|∇u|)`, `∫M(θ|∇²u|_HS)` and `∫M(|u|/θ)`.
pub fn lk_modulars(u: &FieldFunction, nf: &NFunction, theta: f64, spec: &QuadratureSpec) -> Result<LkModulars, LkError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(LkError::Precondition(format!("theta = {theta} must lie in (0, 1]")));
    }
    u.require(FieldQuantity::Hessian)?;
    let ln_theta = theta.ln();
    let gradient = modular_nd(u, FieldQuantity::Gradient, nf, spec)?;
    let (hessian, _) = modular_nd_scaled(u, FieldQuantity::Hessian, nf, -ln_theta, spec)?;
    let (value, _) = modular_nd_scaled(u, FieldQuantity::Value, nf, ln_theta, spec)?;
    Ok(LkModulars { gradient, hessian, value })
}

/// Modular-form report for precomputed modulars.
pub fn lk_modular_report(u: &FieldFunction, nf: &NFunction, m: &LkModulars, c1: f64, c2: f64, theta: f64) -> LkReport {
    let form = if theta == 1.0 { LkForm::Modular } else { LkForm::ModularTheta };
    let mut r = base_report(form, u, nf);
    r.theta = Some(theta);
    r.constants_used.insert("C1".into(), c1);
    r.constants_used.insert("C2".into(), c2);
    r.rhs_terms.insert("hessian".into(), m.hessian.value);
    r.rhs_terms.insert("value".into(), m.value.value);
    if m.gradient.divergent || m.hessian.divergent || m.value.divergent {
        r.verdict = Verdict::Trivial;
        r.lhs = m.gradient.value;
        r.slack = f64::NAN;
        r.notes.push("a modular diverges; outside the admissible class".into());
        return r;
    }
    let rhs = c1 * m.hessian.value + c2 * m.value.value;
    r.lhs = m.gradient.value;
    r.slack = rhs - r.lhs;
    r.tolerance = tolerance_for(rhs);
    r.err_est = m.gradient.err_est + c1 * m.hessian.err_est + c2 * m.value.err_est;
    r.verdict = decide(r.lhs, rhs, r.err_est);
    r
}

/// `∫M(|∇u|) ≤ C₁∫M(θ|∇²u|) + C₂∫M(|u|/θ)` against the Gaussian measure.
pub fn check_lk_modular(
    u: &FieldFunction,
    nf: &NFunction,
    c1: f64,
    c2: f64,
    theta: f64,
    spec: &QuadratureSpec,
) -> Result<LkReport, LkError> {
    require_quadratic_growth(nf)?;
    let m = lk_modulars(u, nf, theta, spec)?;
    Ok(lk_modular_report(u, nf, &m, c1, c2, theta))
}

/// `r = ‖∇u‖`, `s = (‖∇²u‖‖u‖)^{1/2}`, `t = ‖u‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LkNorms {
    pub subject: String,
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub rel_err: f64,
}

impl LkNorms {
    pub fn scaled(&self, c: f64) -> Self {
        LkNorms { r: self.r * c.abs(), s: self.s * c.abs(), t: self.t * c.abs(), ..self.clone() }
    }
}

pub fn lk_norms(u: &FieldFunction, nf: &NFunction, spec: &QuadratureSpec, lux: &LuxemburgSpec) -> Result<LkNorms, LkError> {
    require_quadratic_growth(nf)?;
    u.require(FieldQuantity::Hessian)?;
    let norm = |q| luxemburg_norm_nd(u, q, nf, spec, lux);
    let grad = norm(FieldQuantity::Gradient)?;
    let hess = norm(FieldQuantity::Hessian)?;
    let value = norm(FieldQuantity::Value)?;
    let rel_err = lux.rel_tol + [grad.modular_err, hess.modular_err, value.modular_err].iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(LkNorms { subject: u.label().to_string(), r: grad.value, s: (hess.value * value.value).sqrt(), t: value.value, rel_err })
}

/// One data point for a two-constant fit `lhs ≤ C₁a + C₂b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSample {
    pub subject: String,
    pub lhs: f64,
    pub a: f64,
    pub b: f64,
}

/// Fitted constants and the corpus member that fixed each of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LkFit {
    pub c1: f64,
    pub c2: f64,
    pub binding_c1: Option<String>,
    pub binding_c2: Option<String>,
    /// `(C₁, smallest admissible C₂ on the grid)` for each feasible `C₁`.
    pub envelope: Vec<(f64, f64)>,
    pub samples: usize,
}

/// Smallest `C₂` on `grid` with `lhs ≤ c1·a + C₂·b` for every sample, and the
/// sample that needs it.
fn required_c2<'a>(samples: &'a [FitSample], c1: f64, grid: &[f64]) -> Option<(f64, Option<&'a str>)> {
    let mut need = 0.0f64;
    let mut binding = None;
    for s in samples {
        let excess = s.lhs - c1 * s.a;
        if excess <= 0.0 {
            continue;
        }
        if s.b <= 0.0 {
            return None;
        }
        let c2 = excess / s.b;
        if c2 > need {
            need = c2;
            binding = Some(s.subject.as_str());
        }
    }
    grid.iter().copied().find(|&g| g >= need).map(|g| (g, binding))
}

/// Over the candidate `C₁` values in `grid`, picks the pair with the smallest
/// `C₁ + C₂`. The envelope of required `C₂` can only rise when samples are
/// added.
pub fn fit_constants(samples: &[FitSample], grid: &[f64]) -> Result<LkFit, LkError> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) || grid[0] < 0.0 {
        return Err(LkError::Precondition("fit grid must be non-empty, non-negative and strictly increasing".into()));
    }
    let live: Vec<FitSample> = samples.iter().filter(|s| s.lhs > 0.0).cloned().collect();
    let mut envelope = Vec::new();
    let mut best: Option<(f64, f64, Option<String>)> = None;
    for &c1 in grid {
        let Some((c2, binding)) = required_c2(&live, c1, grid) else {
            continue;
        };
        envelope.push((c1, c2));
        if best.as_ref().is_none_or(|(b1, b2, _)| c1 + c2 < b1 + b2) {
            best = Some((c1, c2, binding.map(str::to_string)));
        }
    }
    let (c1, c2, binding_c2) = best.ok_or_else(|| LkError::Precondition("no constant pair on the grid covers the corpus".into()))?;
    // the member that stops C₁ from moving one grid step lower
    let binding_c1 = grid
        .iter()
        .rposition(|&g| g < c1)
        .and_then(|i| {
            live.iter()
                .filter(|s| s.lhs > grid[i] * s.a + c2 * s.b)
                .max_by(|x, y| (x.lhs - grid[i] * x.a - c2 * x.b).total_cmp(&(y.lhs - grid[i] * y.a - c2 * y.b)))
        })
        .map(|s| s.subject.clone());
    Ok(LkFit { c1, c2, binding_c1, binding_c2, envelope, samples: samples.len() })
}

/// Norm-form report for one member against fitted constants.
pub fn lk_norm_report(u: &FieldFunction, nf: &NFunction, norms: &LkNorms, fit: &LkFit) -> LkReport {
    let mut r = base_report(LkForm::Norm, u, nf);
    r.constants_used.insert("C1_tilde".into(), fit.c1);
    r.constants_used.insert("C2_tilde".into(), fit.c2);
    r.rhs_terms.insert("s".into(), norms.s);
    r.rhs_terms.insert("t".into(), norms.t);
    let rhs = fit.c1 * norms.s + fit.c2 * norms.t;
    r.lhs = norms.r;
    r.slack = rhs - norms.r;
    r.tolerance = tolerance_for(rhs);
    r.err_est = norms.rel_err * (norms.r + rhs);
    r.verdict = decide(norms.r, rhs, r.err_est);
    if let Some(b) = &fit.binding_c1 {
        r.provenance.push(format!("C1_tilde bound by {b}"));
    }
    if let Some(b) = &fit.binding_c2 {
        r.provenance.push(format!("C2_tilde bound by {b}"));
    }
    r.provenance.push(format!("fitted over {} corpus members", fit.samples));
    r
}

/// Norms of `u` plus a report against the given fit. With no fit, the member
/// is fitted alone.
pub fn check_lk_norm(
    u: &FieldFunction,
    nf: &NFunction,
    fit: Option<&LkFit>,
    spec: &QuadratureSpec,
    lux: &LuxemburgSpec,
) -> Result<(LkNorms, LkReport), LkError> {
    let norms = lk_norms(u, nf, spec, lux)?;
    let own;
    let fit = match fit {
        Some(f) => f,
        None => {
            own = fit_constants(&[norms_sample(&norms)], &default_fit_grid())?;
            &own
        }
    };
    let report = lk_norm_report(u, nf, &norms, fit);
    Ok((norms, report))
}

pub fn norms_sample(n: &LkNorms) -> FitSample {
    FitSample { subject: n.subject.clone(), lhs: n.r, a: n.s, b: n.t }
}

pub fn modular_sample(subject: &str, m: &LkModulars) -> FitSample {
    FitSample { subject: subject.to_string(), lhs: m.gradient.value, a: m.hessian.value, b: m.value.value }
}

/// Runs the n-dimensional convex-case Hardy check for `u`, and when it holds,
/// the θ = 1 modular check with the given constants.
pub fn additive_lk_from_hardy(u: &FieldFunction, nf: &NFunction, c1: f64, c2: f64, spec: &QuadratureSpec) -> Result<LkReport, LkError> {
    require_quadratic_growth(nf)?;
    let hardy = check_nd(u, nf, NdForm::ConvexModular, spec, &LuxemburgSpec::default())?;
    if !matches!(hardy.verdict, Verdict::Holds | Verdict::Trivial) {
        return Err(LkError::Hypothesis(format!(
            "the Hardy inequality did not hold for {} ({}, slack {})",
            u.label(),
            hardy.verdict,
            hardy.slack
        )));
    }
    let mut report = check_lk_modular(u, nf, c1, c2, 1.0, spec)?;
    report.provenance.push(format!(
        "hardy {} {} slack={:.6e} -> lk_modular theta=1",
        hardy.inequality_id.as_str(),
        hardy.verdict,
        hardy.slack
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec { sphere_nodes: 64, ..QuadratureSpec::default() }
    }

    #[test]
    fn zero_field_is_trivially_fine() {
        let z = FieldFunction::zero(2);
        let r = check_lk_modular(&z, &NFunction::power(4.0), 1.0, 1.0, 1.0, &spec()).unwrap();
        assert_eq!((r.lhs, r.slack, r.verdict), (0.0, 0.0, Verdict::Holds));
    }

    #[test]
    fn sub_quadratic_growth_is_rejected() {
        let f = FieldFunction::gauss_bump(2, 0.0, 1.0).unwrap();
        let nf = NFunction::power(1.5);
        assert!(matches!(check_lk_modular(&f, &nf, 1.0, 1.0, 1.0, &spec()), Err(LkError::Hypothesis(_))));
        assert!(matches!(additive_lk_from_hardy(&f, &nf, 1.0, 1.0, &spec()), Err(LkError::Hypothesis(_))));
    }

    #[test]
    fn theta_bounds() {
        let f = FieldFunction::gauss_bump(2, 0.0, 1.0).unwrap();
        assert!(check_lk_modular(&f, &NFunction::power(2.0), 1.0, 1.0, 0.0, &spec()).is_err());
        assert!(check_lk_modular(&f, &NFunction::power(2.0), 1.0, 1.0, 1.5, &spec()).is_err());
    }

    #[test]
    fn quadratic_case_matches_closed_form() {
        // u = e^{−|x|²/2} in ℝ², M(r) = r², unnormalized Gaussian weight:
        // every modular is a moment of e^{−3r²/2} over the plane
        let f = FieldFunction::gauss_bump(2, 0.0, 1.0).unwrap();
        let m = lk_modulars(&f, &NFunction::power(2.0), 1.0, &spec()).unwrap();
        let omega = 2.0 * std::f64::consts::PI;
        let radial = |k: f64| crate::quadrature::scaled_moment(2, k, 3.0);
        assert!((m.gradient.value / (omega * radial(2.0)) - 1.0).abs() < 1e-9);
        assert!((m.value.value / (omega * radial(0.0)) - 1.0).abs() < 1e-9);
        // |∇²u|² = (2 − 2|x|² + |x|⁴)e^{−|x|²}
        let hess = omega * (2.0 * radial(0.0) - 2.0 * radial(2.0) + radial(4.0));
        assert!((m.hessian.value / hess - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_covers_samples_and_grows_with_corpus() {
        let grid = default_fit_grid();
        let a = FitSample { subject: "a".into(), lhs: 2.0, a: 1.0, b: 1.0 };
        let b = FitSample { subject: "b".into(), lhs: 5.0, a: 0.1, b: 2.0 };
        let fa = fit_constants(std::slice::from_ref(&a), &grid).unwrap();
        let fab = fit_constants(&[a.clone(), b.clone()], &grid).unwrap();
        for f in [&fa, &fab] {
            for s in [&a, &b].iter().take(if std::ptr::eq(f, &fa) { 1 } else { 2 }) {
                assert!(s.lhs <= f.c1 * s.a + f.c2 * s.b * (1.0 + 1e-12));
            }
        }
        assert!(fab.c1 + fab.c2 >= fa.c1 + fa.c2);
        let small: BTreeMap<u64, f64> = fa.envelope.iter().map(|&(c1, c2)| (c1.to_bits(), c2)).collect();
        for (c1, c2) in &fab.envelope {
            assert!(*c2 >= small[&c1.to_bits()]);
        }
        assert_eq!(fab.binding_c2.as_deref(), Some("b"));
    }

    #[test]
    fn norms_scale_with_the_field() {
        let nf = NFunction::power(3.0);
        let f = FieldFunction::gauss_bump(2, 0.0, 1.0).unwrap();
        let scaled = FieldFunction::poly_gauss(2, &[7.0], 1.0, 0).unwrap();
        let lux = LuxemburgSpec::default();
        let a = lk_norms(&f, &nf, &spec(), &lux).unwrap();
        let b = lk_norms(&scaled, &nf, &spec(), &lux).unwrap();
        for (x, y) in [(a.r, b.r), (a.s, b.s), (a.t, b.t)] {
            assert!((y / x - 7.0).abs() < 1e-7, "{x} {y}");
        }
        let fa = fit_constants(&[norms_sample(&a)], &default_fit_grid()).unwrap();
        let fb = fit_constants(&[norms_sample(&b)], &default_fit_grid()).unwrap();
        assert_eq!((fa.c1, fa.c2), (fb.c1, fb.c2));
    }
}
