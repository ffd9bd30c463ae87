//! N-functions, their growth exponents, and the pointwise bounds built on them.
//!
//! An [`NFunction`] is an evaluable Young-type function `M` together with the
//! constants the inequality checkers need: a lower growth exponent `d_M`, an
//! upper growth exponent `D_M` and a Δ₂ constant `C_M`:
//!
//! ```text
//! M(a·r) ≤ a^{D_M} M(r)   for a ≥ 1
//! M(a·r) ≤ a^{d_M} M(r)   for a ∈ (0, 1)
//! M(2r)  ≤ C_M M(r)
//! ```
//!
//! Power functions carry exact exponents. Everything else is certified on a
//! finite [`GridSpec`]; a certificate is a statement about that grid only.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative tolerance used when comparing certified inequalities on a grid.
const CERT_RTOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NfuncError {
    #[error("{label}: M is constant on the grid (an N-function must be nonconstant)")]
    Constant { label: String },
    #[error("{label}: M(0) = {value}, expected 0")]
    NonzeroAtOrigin { label: String, value: f64 },
    #[error("{label}: M({r}) = {value} is not finite and positive")]
    InvalidValue { label: String, r: f64, value: f64 },
    #[error("{label}: M decreases between r = {r_prev} and r = {r}")]
    NonMonotone { label: String, r_prev: f64, r: f64 },
    #[error("{label}: midpoint convexity fails between {x} and {y}")]
    NotConvex { label: String, x: f64, y: f64 },
    #[error("{label}: Δ₂ ratio M(2r)/M(r) = {ratio:e} at r = {r} diverges along the grid")]
    Delta2Divergent { label: String, r: f64, ratio: f64 },
    #[error("{label}: {what} has not been certified")]
    NotCertified { label: String, what: &'static str },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    Log,
    Linear,
}

/// Radii on which growth conditions are certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub scale: GridScale,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { r_min: 1e-6, r_max: 1e6, points: 400, scale: GridScale::Log }
    }
}

impl GridSpec {
    pub fn log(r_min: f64, r_max: f64, points: usize) -> Self {
        GridSpec { r_min, r_max, points, scale: GridScale::Log }
    }

    pub fn validate(&self) -> Result<(), NfuncError> {
        if self.points < 2 {
            return Err(NfuncError::InvalidGrid(format!("need at least 2 points, got {}", self.points)));
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(NfuncError::InvalidGrid(format!("need 0 < r_min < r_max, got [{}, {}]", self.r_min, self.r_max)));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        let k = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / k;
                match self.scale {
                    GridScale::Log => (self.r_min.ln() + t * (self.r_max / self.r_min).ln()).exp(),
                    GridScale::Linear => self.r_min + t * (self.r_max - self.r_min),
                }
            })
            .collect()
    }

    /// Short content hash identifying this grid in certificates and reports.
    pub fn fingerprint(&self) -> String {
        let text = format!("{:?}:{:.17e}:{:.17e}:{}", self.scale, self.r_min, self.r_max, self.points);
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(&digest[..8])
    }
}

/// How an N-function was declared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NFunctionKind {
    /// `M(r) = r^p`
    Power { p: f64 },
    /// `M(r) = r² log(1 + r)`
    PowerLog,
    /// Log-log interpolated table of `(r, M(r))` pairs.
    Table { points: Vec<[f64; 2]> },
    /// Built from a closure.
    Custom,
}

#[derive(Clone)]
pub struct NFunction {
    label: String,
    kind: NFunctionKind,
    eval: ScalarFn,
    deriv: Option<ScalarFn>,
    /// `t ↦ ln M(e^t)`, used where `M` itself would overflow.
    ln_of_ln: Option<ScalarFn>,
    lower_exp: Option<f64>,
    upper_exp: Option<f64>,
    delta2_const: Option<f64>,
}

impl fmt::Debug for NFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NFunction")
            .field("label", &self.label)
            .field("kind", &self.kind)
            .field("d_exp", &self.lower_exp)
            .field("D_exp", &self.upper_exp)
            .field("delta2_const", &self.delta2_const)
            .finish()
    }
}

impl NFunction {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        NFunction {
            label: label.into(),
            kind: NFunctionKind::Custom,
            eval: Arc::new(eval),
            deriv: None,
            ln_of_ln: None,
            lower_exp: None,
            upper_exp: None,
            delta2_const: None,
        }
    }

    /// `M(r) = r^p` with exact exponents `d_M = D_M = p` and `C_M = 2^p`.
    pub fn power(p: f64) -> Self {
        let label = format!("power_{}", p);
        let mut nf = NFunction::new(label, move |r: f64| r.powf(p));
        nf.kind = NFunctionKind::Power { p };
        nf.deriv = Some(Arc::new(move |r: f64| p * r.powf(p - 1.0)));
        nf.ln_of_ln = Some(Arc::new(move |t: f64| p * t));
        nf.lower_exp = Some(p);
        nf.upper_exp = Some(p);
        nf.delta2_const = Some(2f64.powf(p));
        nf
    }

    /// `M(r) = r² log(1 + r)`, with `d_M = 2` and `D_M = 3`.
    ///
    /// `log(1 + a·r) ≤ a·log(1 + r)` for `a ≥ 1` gives the upper exponent and
    /// monotonicity of `log(1 + r)` the lower one.
    pub fn power_log() -> Self {
        let mut nf = NFunction::new("power_log", |r: f64| r * r * r.ln_1p());
        nf.kind = NFunctionKind::PowerLog;
        nf.deriv = Some(Arc::new(|r: f64| 2.0 * r * r.ln_1p() + r * r / (1.0 + r)));
        nf.ln_of_ln = Some(Arc::new(|t: f64| {
            // ln(1 + e^t) without overflow
            let l1p = if t > 30.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
            2.0 * t + l1p.ln()
        }));
        nf.lower_exp = Some(2.0);
        nf.upper_exp = Some(3.0);
        nf
    }

    /// Log-log linear interpolation of strictly positive `(r, M(r))` pairs,
    /// extended by the end slopes and with `M(0) = 0`.
    pub fn table(label: impl Into<String>, points: &[[f64; 2]]) -> Result<Self, NfuncError> {
        if points.len() < 2 {
            return Err(NfuncError::InvalidTable("need at least two points".into()));
        }
        let mut lr = Vec::with_capacity(points.len());
        let mut lm = Vec::with_capacity(points.len());
        for (i, &[r, m]) in points.iter().enumerate() {
            if !(r > 0.0 && m > 0.0 && r.is_finite() && m.is_finite()) {
                return Err(NfuncError::InvalidTable(format!("entry {i} ({r}, {m}) must be positive and finite")));
            }
            if i > 0 {
                let [rp, mp] = points[i - 1];
                if r <= rp {
                    return Err(NfuncError::InvalidTable(format!("radii must increase strictly at entry {i}")));
                }
                if m < mp {
                    return Err(NfuncError::InvalidTable(format!("values must be monotone in r at entry {i}")));
                }
            }
            lr.push(r.ln());
            lm.push(m.ln());
        }
        let lr: Arc<[f64]> = lr.into();
        let lm: Arc<[f64]> = lm.into();
        let slope = {
            let (lr, lm) = (lr.clone(), lm.clone());
            move |k: usize| (lm[k + 1] - lm[k]) / (lr[k + 1] - lr[k])
        };
        let ln_of_ln: ScalarFn = {
            let (lr, lm) = (lr.clone(), lm.clone());
            let slope = slope.clone();
            Arc::new(move |t: f64| {
                let last = lr.len() - 1;
                let k = match lr.iter().position(|&x| x > t) {
                    Some(0) => 0,
                    Some(i) => i - 1,
                    None => last - 1,
                };
                lm[k] + slope(k) * (t - lr[k])
            })
        };
        let eval = {
            let f = ln_of_ln.clone();
            move |r: f64| if r <= 0.0 { 0.0 } else { f(r.ln()).exp() }
        };
        let deriv: ScalarFn = {
            let lr = lr.clone();
            let f = ln_of_ln.clone();
            Arc::new(move |r: f64| {
                if r <= 0.0 {
                    return 0.0;
                }
                let t = r.ln();
                let last = lr.len() - 1;
                let k = match lr.iter().position(|&x| x > t) {
                    Some(0) => 0,
                    Some(i) => i - 1,
                    None => last - 1,
                };
                slope(k) * f(t).exp() / r
            })
        };
        let mut nf = NFunction::new(label, eval);
        nf.kind = NFunctionKind::Table { points: points.to_vec() };
        nf.deriv = Some(deriv);
        nf.ln_of_ln = Some(ln_of_ln);
        Ok(nf)
    }

    pub fn with_derivative(mut self, deriv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    /// Pins growth exponents, e.g. when they are known analytically.
    pub fn with_exponents(mut self, lower: f64, upper: f64) -> Self {
        self.lower_exp = Some(lower);
        self.upper_exp = Some(upper);
        self
    }

    pub fn with_delta2_const(mut self, c: f64) -> Self {
        self.delta2_const = Some(c);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &NFunctionKind {
        &self.kind
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    /// `M'(r)`: analytic when available, otherwise a central difference with
    /// step `max(1e-6, 1e-6·r)` clamped at the origin.
    pub fn deriv(&self, r: f64) -> f64 {
        if let Some(d) = &self.deriv {
            return d(r);
        }
        let h = (1e-6 * r).max(1e-6);
        let lo = (r - h).max(0.0);
        let hi = r + h;
        (self.eval(hi) - self.eval(lo)) / (hi - lo)
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.deriv.is_some()
    }

    /// `ln M(e^t)` if the N-function has an overflow-free log form.
    pub fn ln_eval_of_ln(&self, t: f64) -> Option<f64> {
        self.ln_of_ln.as_ref().map(|f| f(t))
    }

    pub fn has_log_form(&self) -> bool {
        self.ln_of_ln.is_some()
    }

    pub fn lower_exponent(&self) -> Option<f64> {
        self.lower_exp
    }

    pub fn upper_exponent(&self) -> Option<f64> {
        self.upper_exp
    }

    pub fn delta2_const(&self) -> Option<f64> {
        self.delta2_const
    }

    /// `(d_M, D_M)`, or an error naming the missing one.
    pub fn exponents(&self) -> Result<(f64, f64), NfuncError> {
        let d = self.lower_exp.ok_or_else(|| NfuncError::NotCertified { label: self.label.clone(), what: "lower growth exponent d_M" })?;
        let big_d =
            self.upper_exp.ok_or_else(|| NfuncError::NotCertified { label: self.label.clone(), what: "upper growth exponent D_M" })?;
        Ok((d, big_d))
    }

    pub fn upper(&self) -> Result<f64, NfuncError> {
        self.upper_exp.ok_or_else(|| NfuncError::NotCertified { label: self.label.clone(), what: "upper growth exponent D_M" })
    }

    /// `M(r)/r^α` extended continuously to `r = 0`: the value there is 0 for
    /// α = 1 and the limit `lim_{r→0⁺} M(r)/r²` for α = 2.
    pub fn ratio_to_power(&self, r: f64, alpha: u32) -> f64 {
        if r > 0.0 {
            return self.eval(r) / r.powi(alpha as i32);
        }
        match alpha {
            1 => 0.0,
            _ => self.small_r_limit(alpha),
        }
    }

    fn small_r_limit(&self, alpha: u32) -> f64 {
        // q(h) = M(h)/h^α is monotone near 0 when d_M ≥ α; assume q(h) ≈ L + c·h
        // and extrapolate from h and 10h.
        let h = 1e-8;
        let q = |x: f64| self.eval(x) / x.powi(alpha as i32);
        let (q1, q10) = (q(h), q(10.0 * h));
        let lim = q1 - (q10 - q1) / 9.0;
        lim.clamp(0.0, q1.max(0.0))
    }
}

/// One failed pairwise test recorded during certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: String,
    pub r: f64,
    pub a: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub label: String,
    pub d_est: f64,
    pub upper_est: f64,
    /// Failures of the declared exponents, capped at [`MAX_RECORDED`].
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    pub grid_fingerprint: String,
}

pub const MAX_RECORDED: usize = 20;

fn sampled_values(nf: &NFunction, nodes: &[f64]) -> Result<Vec<f64>, NfuncError> {
    let values: Vec<f64> = nodes.iter().map(|&r| nf.eval(r)).collect();
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Err(NfuncError::Constant { label: nf.label.clone() });
    }
    let at0 = nf.eval(0.0);
    if at0 != 0.0 {
        return Err(NfuncError::NonzeroAtOrigin { label: nf.label.clone(), value: at0 });
    }
    for (i, (&r, &v)) in nodes.iter().zip(&values).enumerate() {
        if !(v.is_finite() && v > 0.0) {
            return Err(NfuncError::InvalidValue { label: nf.label.clone(), r, value: v });
        }
        if i > 0 && v < values[i - 1] {
            return Err(NfuncError::NonMonotone { label: nf.label.clone(), r_prev: nodes[i - 1], r });
        }
    }
    Ok(values)
}

/// Estimates `d_M` and `D_M` as the infimum and supremum of
/// `log(M(r₂)/M(r₁)) / log(r₂/r₁)` over grid pairs, and tests any declared
/// exponents on every pair.
pub fn certify_growth(nf: &NFunction, grid: &GridSpec) -> Result<GrowthCertificate, NfuncError> {
    grid.validate()?;
    let nodes = grid.nodes();
    let values = sampled_values(nf, &nodes)?;
    let ln_r: Vec<f64> = nodes.iter().map(|r| r.ln()).collect();
    let ln_m: Vec<f64> = values.iter().map(|m| m.ln()).collect();

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    let mut count = 0;
    let mut record = |v: Violation| {
        count += 1;
        if violations.len() < MAX_RECORDED {
            violations.push(v);
        }
    };

    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let slope = (ln_m[j] - ln_m[i]) / (ln_r[j] - ln_r[i]);
            lo = lo.min(slope);
            hi = hi.max(slope);

            let a_up = nodes[j] / nodes[i];
            if let Some(big_d) = nf.upper_exp {
                // M(a·r) ≤ a^D M(r), a ≥ 1, r = nodes[i]
                let rhs = a_up.powf(big_d) * values[i];
                if values[j] > rhs * (1.0 + CERT_RTOL) {
                    record(Violation { condition: "upper".into(), r: nodes[i], a: a_up, lhs: values[j], rhs });
                }
            }
            if let Some(d) = nf.lower_exp {
                // M(a·r) ≤ a^d M(r), a < 1, r = nodes[j]
                let a = nodes[i] / nodes[j];
                let rhs = a.powf(d) * values[j];
                if values[i] > rhs * (1.0 + CERT_RTOL) {
                    record(Violation { condition: "lower".into(), r: nodes[j], a, lhs: values[i], rhs });
                }
            }
        }
    }

    Ok(GrowthCertificate {
        label: nf.label.clone(),
        d_est: lo,
        upper_est: hi,
        violations,
        violation_count: count,
        grid_fingerprint: grid.fingerprint(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Certificate {
    pub label: String,
    pub c_est: f64,
    pub argmax_r: f64,
    pub violations: Vec<Violation>,
    pub grid_fingerprint: String,
}

/// Ratio above which `M(2r)/M(r)` is treated as unbounded (`2^64`).
pub const DELTA2_CAP: f64 = 18_446_744_073_709_551_616.0;

/// Estimates `C_M = sup M(2r)/M(r)` on the grid.
///
/// The ratio is flagged as divergent if it exceeds [`DELTA2_CAP`], if `M(2r)`
/// overflows, or if it at least doubles across the last decade of the grid.
pub fn certify_delta2(nf: &NFunction, grid: &GridSpec) -> Result<Delta2Certificate, NfuncError> {
    grid.validate()?;
    let nodes = grid.nodes();
    let values = sampled_values(nf, &nodes)?;
    let mut best = (0.0_f64, nodes[0]);
    let mut ratios = Vec::with_capacity(nodes.len());
    let mut violations = Vec::new();
    for (&r, &m) in nodes.iter().zip(&values) {
        let m2 = nf.eval(2.0 * r);
        let ratio = m2 / m;
        if !ratio.is_finite() || ratio > DELTA2_CAP {
            return Err(NfuncError::Delta2Divergent { label: nf.label.clone(), r, ratio });
        }
        if ratio > best.0 {
            best = (ratio, r);
        }
        if let Some(c) = nf.delta2_const {
            if m2 > c * m * (1.0 + CERT_RTOL) && violations.len() < MAX_RECORDED {
                violations.push(Violation { condition: "delta2".into(), r, a: 2.0, lhs: m2, rhs: c * m });
            }
        }
        ratios.push(ratio);
    }
    let r_last = *nodes.last().unwrap();
    if let Some(k) = nodes.iter().position(|&r| r >= r_last / 10.0) {
        if k + 1 < nodes.len() && ratios[nodes.len() - 1] >= 2.0 * ratios[k] {
            return Err(NfuncError::Delta2Divergent { label: nf.label.clone(), r: r_last, ratio: ratios[nodes.len() - 1] });
        }
    }
    Ok(Delta2Certificate { label: nf.label.clone(), c_est: best.0, argmax_r: best.1, violations, grid_fingerprint: grid.fingerprint() })
}

/// Midpoint convexity `M((x+y)/2) ≤ (M(x)+M(y))/2` over all grid pairs, the origin included.
pub fn certify_convexity(nf: &NFunction, grid: &GridSpec) -> Result<(), NfuncError> {
    grid.validate()?;
    let mut nodes = vec![0.0];
    nodes.extend(grid.nodes());
    let values: Vec<f64> = nodes.iter().map(|&r| nf.eval(r)).collect();
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let mid = nf.eval(0.5 * (nodes[i] + nodes[j]));
            let chord = 0.5 * (values[i] + values[j]);
            if mid > chord * (1.0 + 1e-10) + 1e-300 {
                return Err(NfuncError::NotConvex { label: nf.label.clone(), x: nodes[i], y: nodes[j] });
            }
        }
    }
    Ok(())
}

/// Checks the derivative form of Δ₂, `M'(r) ≤ D_M·M(r)/r`, on the grid.
/// Returns the largest observed `r·M'(r)/M(r)`.
pub fn certify_derivative_bound(nf: &NFunction, grid: &GridSpec) -> Result<f64, NfuncError> {
    grid.validate()?;
    let big_d = nf.upper()?;
    let rtol = if nf.has_analytic_derivative() { 1e-10 } else { 1e-5 };
    let mut worst: f64 = 0.0;
    for r in grid.nodes() {
        let m = nf.eval(r);
        let elasticity = r * nf.deriv(r) / m;
        worst = worst.max(elasticity);
        if elasticity > big_d * (1.0 + rtol) {
            return Err(NfuncError::Precondition(format!("{}: r·M'(r)/M(r) = {elasticity} exceeds D_M = {big_d} at r = {r}", nf.label)));
        }
    }
    Ok(worst)
}

/// Two sides of a pointwise inequality and whether it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Additive tolerance `1e-12·max(1, |rhs|)` used by every pointwise comparison.
pub fn comparison_tolerance(rhs: f64) -> f64 {
    1e-12 * rhs.abs().max(1.0)
}

fn outcome(lhs: f64, rhs: f64) -> BoundOutcome {
    BoundOutcome { lhs, rhs, holds: lhs <= rhs + comparison_tolerance(rhs) }
}

/// Splitting estimate for `r^{-α} M(r) · s^α`, α ∈ {1, 2}:
///
/// ```text
/// α = 1:  r⁻¹M(r)·s  ≤ (1 − 1/D)(λD)^{−1/(D−1)} M(r) + λ M(s)
/// α = 2:  r⁻²M(r)·s² ≤ (1 − 2/D)(λD)^{−2/(D−2)} M(r) + 2λ M(s)
/// ```
///
/// valid for `λ ≥ 1/d_M` when `d_M ≥ 2`.
pub fn check_split_bound(nf: &NFunction, r: f64, s: f64, lambda: f64, alpha: u32) -> Result<BoundOutcome, NfuncError> {
    let (d, big_d) = nf.exponents()?;
    if alpha != 1 && alpha != 2 {
        return Err(NfuncError::Precondition(format!("alpha must be 1 or 2, got {alpha}")));
    }
    if d < 2.0 {
        return Err(NfuncError::Precondition(format!("d_M = {d} < 2")));
    }
    let a = alpha as f64;
    if big_d <= a {
        return Err(NfuncError::Precondition(format!("D_M = {big_d} must exceed {alpha}")));
    }
    if lambda < 1.0 / d {
        return Err(NfuncError::Precondition(format!("lambda = {lambda} < 1/d_M = {}", 1.0 / d)));
    }
    if r < 0.0 || s < 0.0 {
        return Err(NfuncError::Precondition("r and s must be non-negative".into()));
    }
    let lhs = nf.ratio_to_power(r, alpha) * s.powi(alpha as i32);
    let coeff = (1.0 - a / big_d) * (lambda * big_d).powf(-a / (big_d - a));
    let rhs = coeff * nf.eval(r) + a * lambda * nf.eval(s);
    Ok(outcome(lhs, rhs))
}

/// `M(a)·b ≤ ε M(a) + ε^{−D_M} M(a·b)` for ε ∈ (0, 1] and convex `M`.
pub fn check_young_bound(nf: &NFunction, a: f64, b: f64, eps: f64) -> Result<BoundOutcome, NfuncError> {
    let big_d = nf.upper()?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(NfuncError::Precondition(format!("eps = {eps} outside (0, 1]")));
    }
    if a < 0.0 || b < 0.0 {
        return Err(NfuncError::Precondition("a and b must be non-negative".into()));
    }
    let ma = nf.eval(a);
    let lhs = ma * b;
    let rhs = eps * ma + eps.powf(-big_d) * nf.eval(a * b);
    Ok(outcome(lhs, rhs))
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    GridSpec::log(lo, hi, n).nodes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_exponents_are_exact() {
        for p in [2.0, 2.5, 3.0, 4.0, 7.0] {
            let c = certify_growth(&NFunction::power(p), &GridSpec::default()).unwrap();
            assert!((c.d_est - p).abs() < 1e-9, "p={p}: {}", c.d_est);
            assert!((c.upper_est - p).abs() < 1e-9);
            assert!(c.violations.is_empty());
        }
    }

    #[test]
    fn power_log_exponents() {
        let c = certify_growth(&NFunction::power_log(), &GridSpec::default()).unwrap();
        assert!((c.upper_est - 3.0).abs() < 1e-6, "{}", c.upper_est);
        // the infimum 2 is only approached as r → ∞ (like 1/log r)
        assert!(c.d_est >= 2.0 && c.d_est < 2.08, "{}", c.d_est);
        assert_eq!(c.violation_count, 0);
    }

    #[test]
    fn constant_is_rejected() {
        let err = certify_growth(&NFunction::new("const", |_| 1.0), &GridSpec::default()).unwrap_err();
        assert!(matches!(err, NfuncError::Constant { .. }));
    }

    #[test]
    fn non_monotone_names_node() {
        let nf = NFunction::new("wiggle", |r: f64| r * r * (2.0 + (10.0 * r).sin()));
        let err = certify_growth(&nf, &GridSpec::log(0.1, 10.0, 200)).unwrap_err();
        assert!(matches!(err, NfuncError::NonMonotone { .. }), "{err}");
    }

    #[test]
    fn wrong_declared_exponent_is_a_violation() {
        let nf = NFunction::power(3.0).with_exponents(3.0, 2.5);
        let c = certify_growth(&nf, &GridSpec::log(1e-2, 1e2, 40)).unwrap();
        assert!(c.violation_count > 0);
        assert_eq!(c.violations[0].condition, "upper");
    }

    #[test]
    fn delta2_constants() {
        let g = GridSpec::default();
        assert!((certify_delta2(&NFunction::power(3.0), &g).unwrap().c_est - 8.0).abs() < 1e-12);
        assert!((certify_delta2(&NFunction::power(2.0), &g).unwrap().c_est - 4.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_is_not_doubling() {
        let nf = NFunction::new("exp", |r: f64| r.exp_m1() - r);
        let err = certify_delta2(&nf, &GridSpec::log(1e-3, 1e2, 200)).unwrap_err();
        assert!(matches!(err, NfuncError::Delta2Divergent { .. }));
    }

    #[test]
    fn split_bound_equality_case() {
        let o = check_split_bound(&NFunction::power(3.0), 1.0, 1.0, 1.0 / 3.0, 2).unwrap();
        assert!((o.lhs - 1.0).abs() < 1e-15);
        assert!((o.rhs - 1.0).abs() < 1e-15);
        assert!(o.holds);
    }

    #[test]
    fn split_bound_zero_s() {
        let o = check_split_bound(&NFunction::power(3.0), 1.0, 0.0, 0.5, 1).unwrap();
        assert_eq!(o.lhs, 0.0);
        assert!(o.rhs > 0.0 && o.holds);
    }

    #[test]
    fn split_bound_quartic() {
        let o = check_split_bound(&NFunction::power(4.0), 2.0, 1.0, 0.25, 1).unwrap();
        assert_eq!(o.lhs, 8.0);
        // (1 − 1/4)·1·16 + 1/4
        assert!((o.rhs - 12.25).abs() < 1e-12);
        assert!(o.holds);
    }

    #[test]
    fn split_bound_origin_uses_continuous_extension() {
        let quad = NFunction::power(2.0).with_exponents(2.0, 2.5);
        let o = check_split_bound(&quad, 0.0, 1.0, 1.0, 2).unwrap();
        assert!((o.lhs - 1.0).abs() < 1e-9);
        let o = check_split_bound(&NFunction::power(3.0), 0.0, 2.0, 1.0, 1).unwrap();
        assert_eq!(o.lhs, 0.0);
    }

    #[test]
    fn split_bound_rejects_small_lambda() {
        let err = check_split_bound(&NFunction::power(3.0), 1.0, 1.0, 0.2, 2).unwrap_err();
        assert!(matches!(err, NfuncError::Precondition(_)));
    }

    #[test]
    fn young_bound_examples() {
        let sq = NFunction::power(2.0);
        let o = check_young_bound(&sq, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((o.lhs, o.rhs), (1.0, 2.0));
        let o = check_young_bound(&sq, 2.0, 0.0, 0.3).unwrap();
        assert_eq!(o.lhs, 0.0);
        assert!((o.rhs - 1.2).abs() < 1e-15);
        let o = check_young_bound(&NFunction::power(3.0), 1.0, 0.5, 0.25).unwrap();
        assert!(o.holds);
        // 0.5 ≤ 0.25 + 64·0.125
        assert!((o.rhs - 8.25).abs() < 1e-12);
        assert!(check_young_bound(&sq, 1.0, 1.0, 0.0).is_err());
        assert!(check_young_bound(&sq, 1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn table_reproduces_power() {
        let pts: Vec<[f64; 2]> = logspace(1e-3, 1e3, 30).into_iter().map(|r| [r, r.powi(3)]).collect();
        let nf = NFunction::table("cubic_table", &pts).unwrap();
        for r in [1e-4, 0.5, 7.0, 1e4] {
            assert!((nf.eval(r) / r.powi(3) - 1.0).abs() < 1e-12);
            assert!((nf.deriv(r) / (3.0 * r * r) - 1.0).abs() < 1e-10);
        }
        assert!(NFunction::table("bad", &[[1.0, 2.0], [0.5, 3.0]]).is_err());
    }

    #[test]
    fn convexity() {
        certify_convexity(&NFunction::power_log(), &GridSpec::log(1e-3, 1e3, 60)).unwrap();
        let concave = NFunction::new("sqrt", |r: f64| r.sqrt());
        assert!(certify_convexity(&concave, &GridSpec::log(1e-3, 1e3, 60)).is_err());
    }

    #[test]
    fn derivative_bound_matches_upper_exponent() {
        let w = certify_derivative_bound(&NFunction::power_log(), &GridSpec::default()).unwrap();
        assert!(w <= 3.0 && w > 2.99);
        // finite differences for a closure-built function
        let nf = NFunction::new("cube", |r: f64| r.powi(3)).with_exponents(3.0, 3.0);
        let w = certify_derivative_bound(&nf, &GridSpec::log(1e-2, 1e2, 50)).unwrap();
        assert!((w - 3.0).abs() < 1e-4);
    }

    #[test]
    fn grid_fingerprint_depends_on_content() {
        assert_eq!(GridSpec::default().fingerprint(), GridSpec::default().fingerprint());
        assert_ne!(GridSpec::default().fingerprint(), GridSpec::log(1e-6, 1e6, 401).fingerprint());
        assert!(GridSpec::log(1.0, 1.0, 3).validate().is_err());
    }
}
