use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::FunctionalError;

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How a test function behaves at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportHint {
    /// Vanishes for `r ≥ radius`.
    Compact { radius: f64 },
    /// `|u(r)| ≲ r^degree · e^{-rate·r²/2}`; a negative rate means Gaussian growth.
    Decaying { degree: f64, rate: f64 },
}

impl SupportHint {
    pub fn radius(&self) -> Option<f64> {
        match *self {
            SupportHint::Compact { radius } => Some(radius),
            SupportHint::Decaying { .. } => None,
        }
    }

    /// Hint for a derivative of order `k` of a function with this hint.
    pub fn differentiated(&self, k: u32) -> SupportHint {
        match *self {
            SupportHint::Compact { radius } => SupportHint::Compact { radius },
            SupportHint::Decaying { degree, rate } => {
                let bump = if rate != 0.0 { k as f64 } else { 0.0 };
                SupportHint::Decaying { degree: degree + bump, rate }
            }
        }
    }
}

/// Which radial profile a modular or norm is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `r·|u(r)|`
    Weighted,
    /// `|u(r)|`
    Value,
    /// `|u'(r)|`
    Slope,
}

/// A continuous, piecewise C¹ function on `[0, ∞)` with its a.e. derivative.
#[derive(Clone)]
pub struct RadialTestFunction {
    label: String,
    u: RadialFn,
    du: RadialFn,
    ln_abs_u: Option<RadialFn>,
    ln_abs_du: Option<RadialFn>,
    breakpoints: Vec<f64>,
    support: SupportHint,
}

impl std::fmt::Debug for RadialTestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialTestFunction")
            .field("label", &self.label)
            .field("breakpoints", &self.breakpoints)
            .field("support", &self.support)
            .finish()
    }
}

/// Outcome of the numerical validators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialValidation {
    pub max_jump: f64,
    pub max_derivative_deviation: f64,
}

impl RadialTestFunction {
    pub fn new(
        label: impl Into<String>,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: SupportHint,
    ) -> Self {
        RadialTestFunction {
            label: label.into(),
            u: Arc::new(u),
            du: Arc::new(du),
            ln_abs_u: None,
            ln_abs_du: None,
            breakpoints: Vec::new(),
            support,
        }
    }

    pub fn with_breakpoints(mut self, bps: &[f64]) -> Self {
        self.breakpoints.extend(bps.iter().copied().filter(|&b| b > 0.0));
        self.breakpoints.sort_by(f64::total_cmp);
        self.breakpoints.dedup();
        self
    }

    /// Supplies `ln|u|` and `ln|u'|` directly, for functions whose values overflow.
    pub fn with_log_forms(
        mut self,
        ln_abs_u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ln_abs_du: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.ln_abs_u = Some(Arc::new(ln_abs_u));
        self.ln_abs_du = Some(Arc::new(ln_abs_du));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn zero() -> Self {
        RadialTestFunction::new("zero", |_| 0.0, |_| 0.0, SupportHint::Compact { radius: 1.0 })
    }

    /// `u(r) = exp(α r² / (2p))`, `u' = (α r / p)·u`.
    pub fn gaussian_power(alpha: f64, p: f64) -> Self {
        let c = alpha / p;
        RadialTestFunction::new(
            format!("gaussian_power_{alpha}_{p}"),
            move |r| (0.5 * c * r * r).exp(),
            move |r| c * r * (0.5 * c * r * r).exp(),
            SupportHint::Decaying { degree: 0.0, rate: -c },
        )
        .with_log_forms(move |r| 0.5 * c * r * r, move |r| (c * r).ln() + 0.5 * c * r * r)
    }

    /// `(1 − ((r − center)/width)²)^degree` on `|r − center| < width`, zero elsewhere.
    pub fn bump(center: f64, width: f64, degree: f64) -> Result<Self, FunctionalError> {
        if !(width > 0.0 && center >= 0.0 && degree >= 1.0) {
            return Err(FunctionalError::Invalid {
                label: "bump".into(),
                reason: format!("need width > 0, center ≥ 0, degree ≥ 1 (got {center}, {width}, {degree})"),
            });
        }
        let z = move |r: f64| (r - center) / width;
        let u = move |r: f64| {
            let t = z(r);
            if t.abs() < 1.0 {
                (1.0 - t * t).powf(degree)
            } else {
                0.0
            }
        };
        let du = move |r: f64| {
            let t = z(r);
            if t.abs() < 1.0 {
                -2.0 * degree * t / width * (1.0 - t * t).powf(degree - 1.0)
            } else {
                0.0
            }
        };
        Ok(RadialTestFunction::new(format!("bump_{center}_{width}_{degree}"), u, du, SupportHint::Compact { radius: center + width })
            .with_breakpoints(&[center - width, center + width]))
    }

    /// `P(r)·e^{-rate·r²/2}` with `P(r) = Σ c_k r^k`.
    pub fn poly_gauss(coefficients: &[f64], rate: f64) -> Result<Self, FunctionalError> {
        if coefficients.is_empty() || !(rate > 0.0) {
            return Err(FunctionalError::Invalid {
                label: "poly_gauss".into(),
                reason: "need at least one coefficient and rate > 0".into(),
            });
        }
        let c: Arc<[f64]> = coefficients.into();
        let degree = (coefficients.len() - 1) as f64;
        let c1 = c.clone();
        let u = move |r: f64| horner(&c1, r) * (-0.5 * rate * r * r).exp();
        let du = move |r: f64| (horner_deriv(&c, r) - rate * r * horner(&c, r)) * (-0.5 * rate * r * r).exp();
        Ok(RadialTestFunction::new("poly_gauss", u, du, SupportHint::Decaying { degree, rate }))
    }

    /// Piecewise linear interpolation of `(r_i, u_i)` with user-supplied slopes,
    /// zero beyond the last radius. `du[i]` is the slope on `[r_i, r_{i+1}]`.
    pub fn table(r: &[f64], u: &[f64], du: &[f64]) -> Result<Self, FunctionalError> {
        let bad = |reason: String| FunctionalError::Invalid { label: "table".into(), reason };
        if r.len() < 2 || u.len() != r.len() || du.len() + 1 != r.len() {
            return Err(bad(format!("need r and u of equal length ≥ 2 and du one shorter (got {}, {}, {})", r.len(), u.len(), du.len())));
        }
        if r[0] != 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("radii must start at 0 and increase strictly".into()));
        }
        let r: Arc<[f64]> = r.into();
        let uv: Arc<[f64]> = u.into();
        let dv: Arc<[f64]> = du.into();
        let last = *r.last().unwrap();
        let seg = {
            let r = r.clone();
            move |x: f64| r.partition_point(|&ri| ri <= x).saturating_sub(1).min(r.len() - 2)
        };
        let (r1, seg1) = (r.clone(), seg.clone());
        let uf = move |x: f64| {
            if x >= last {
                return 0.0;
            }
            let k = seg1(x);
            let t = (x - r1[k]) / (r1[k + 1] - r1[k]);
            uv[k] + t * (uv[k + 1] - uv[k])
        };
        let duf = move |x: f64| if x >= last { 0.0 } else { dv[seg(x)] };
        Ok(RadialTestFunction::new("table", uf, duf, SupportHint::Compact { radius: last }).with_breakpoints(&r[1..]))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> SupportHint {
        self.support
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    #[inline]
    pub fn u(&self, r: f64) -> f64 {
        (self.u)(r)
    }

    #[inline]
    pub fn du(&self, r: f64) -> f64 {
        (self.du)(r)
    }

    /// `ln` of the selected profile at `r` (−∞ where it vanishes).
    pub fn ln_abs(&self, q: Quantity, r: f64) -> f64 {
        match q {
            Quantity::Weighted => r.ln() + self.ln_abs(Quantity::Value, r),
            Quantity::Value => match &self.ln_abs_u {
                Some(f) => f(r),
                None => self.u(r).abs().ln(),
            },
            Quantity::Slope => match &self.ln_abs_du {
                Some(f) => f(r),
                None => self.du(r).abs().ln(),
            },
        }
    }

    /// Value of the selected profile at `r`.
    pub fn abs(&self, q: Quantity, r: f64) -> f64 {
        match q {
            Quantity::Weighted => r * self.u(r).abs(),
            Quantity::Value => self.u(r).abs(),
            Quantity::Slope => self.du(r).abs(),
        }
    }

    /// Growth hint for the selected profile.
    pub fn hint(&self, q: Quantity) -> SupportHint {
        match (q, self.support) {
            (_, SupportHint::Compact { radius }) => SupportHint::Compact { radius },
            (Quantity::Value, h) => h,
            (Quantity::Weighted, SupportHint::Decaying { degree, rate }) => SupportHint::Decaying { degree: degree + 1.0, rate },
            (Quantity::Slope, h) => h.differentiated(1),
        }
    }

    /// Hypothesis class this function belongs to, as reported alongside checks.
    pub fn hypothesis_class(&self) -> &'static str {
        match self.support {
            SupportHint::Compact { .. } if self.breakpoints.is_empty() => "compactly_supported_c1",
            SupportHint::Compact { .. } => "compactly_supported_piecewise_c1",
            SupportHint::Decaying { rate, .. } if rate > 0.0 => "gaussian_decaying_c1",
            SupportHint::Decaying { rate: 0.0, .. } => "polynomially_bounded_c1",
            SupportHint::Decaying { .. } => "gaussian_growing_c1",
        }
    }

    /// `u_N = u` on `[0, N]`, `(2N − r)/N · u` on `[N, 2N]`, zero beyond.
    pub fn truncate(&self, big_n: f64) -> Result<RadialTestFunction, FunctionalError> {
        if !(big_n >= 1.0) {
            return Err(FunctionalError::Precondition(format!("truncation level N = {big_n} < 1")));
        }
        let (u, du) = (self.u.clone(), self.du.clone());
        let taper = move |r: f64| {
            if r <= big_n {
                1.0
            } else if r < 2.0 * big_n {
                (2.0 * big_n - r) / big_n
            } else {
                0.0
            }
        };
        let u1 = u.clone();
        let un = move |r: f64| {
            let t = taper(r);
            if t == 0.0 {
                0.0
            } else {
                t * u1(r)
            }
        };
        let dun = move |r: f64| {
            if r <= big_n {
                du(r)
            } else if r < 2.0 * big_n {
                taper(r) * du(r) - u(r) / big_n
            } else {
                0.0
            }
        };
        let radius = match self.support {
            SupportHint::Compact { radius } => radius.min(2.0 * big_n),
            SupportHint::Decaying { .. } => 2.0 * big_n,
        };
        let mut bps = self.breakpoints.clone();
        bps.retain(|&b| b < 2.0 * big_n);
        Ok(RadialTestFunction::new(format!("{}_trunc_{}", self.label, big_n), un, dun, SupportHint::Compact { radius })
            .with_breakpoints(&bps)
            .with_breakpoints(&[big_n, 2.0 * big_n]))
    }

    /// Radius up to which the validators sample.
    fn sample_radius(&self) -> f64 {
        match self.support {
            SupportHint::Compact { radius } => radius,
            SupportHint::Decaying { .. } => 8.0,
        }
    }

    /// Checks continuity at breakpoints (`±1e-8`) and that `du` matches central
    /// differences of `u` to `1e-6` relative away from breakpoints.
    pub fn validate(&self) -> Result<RadialValidation, FunctionalError> {
        let radius = self.sample_radius();
        let samples: Vec<f64> = (0..=400).map(|i| radius * i as f64 / 400.0).collect();
        let scale_u = samples.iter().map(|&r| self.u(r).abs()).fold(0.0, f64::max).max(1e-300);
        let scale_du = samples.iter().map(|&r| self.du(r).abs()).fold(0.0, f64::max);
        let mut max_jump: f64 = 0.0;
        for &b in &self.breakpoints {
            let jump = (self.u(b + 1e-8) - self.u((b - 1e-8).max(0.0))).abs();
            max_jump = max_jump.max(jump);
            let allowed = 1e-6 * scale_u.max(1.0) + 1e-8 * scale_du * 4.0;
            if jump > allowed {
                return Err(FunctionalError::Invalid {
                    label: self.label.clone(),
                    reason: format!("u jumps by {jump:e} at breakpoint {b}"),
                });
            }
        }
        let mut max_dev: f64 = 0.0;
        let mut worst_at = 0.0;
        for &r in &samples {
            let h = 1e-6 * r.max(1.0);
            if r - h < 0.0 || self.breakpoints.iter().any(|&b| (r - b).abs() < 1e-4 * b.max(1.0)) {
                continue;
            }
            let fd = (self.u(r + h) - self.u(r - h)) / (2.0 * h);
            let d = self.du(r);
            let dev = (fd - d).abs() / d.abs().max(1e-3 * scale_du).max(1e-3 * scale_u);
            if !dev.is_finite() {
                continue;
            }
            if dev > max_dev {
                max_dev = dev;
                worst_at = r;
            }
        }
        if max_dev > 1e-6 {
            return Err(FunctionalError::Invalid {
                label: self.label.clone(),
                reason: format!("du deviates from finite differences of u by {max_dev:e} (relative) at r = {worst_at}"),
            });
        }
        Ok(RadialValidation { max_jump, max_derivative_deviation: max_dev })
    }
}

pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

pub(crate) fn horner_deriv(c: &[f64], x: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &ck)| acc * x + k as f64 * ck)
}

pub(crate) fn horner_second(c: &[f64], x: f64) -> f64 {
    c.iter().enumerate().skip(2).rev().fold(0.0, |acc, (k, &ck)| acc * x + (k * (k - 1)) as f64 * ck)
}
