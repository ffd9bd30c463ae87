//! Integration against the radial Gaussian measure `dμ_n(r) = r^{n-1} e^{-r²/2} dr`
//! on `[0, ∞)` and against the Gaussian measure on ℝⁿ by spherical reduction.
//!
//! The half line is truncated at a radius chosen from a caller-declared
//! envelope `r^degree · e^{-rate·r²/2}` bounding the full integrand (weight
//! included). The finite part is integrated by globally adaptive
//! Gauss–Kronrod panels; declared breakpoints always become panel edges.
//!
//! The Gaussian measure on ℝⁿ is unnormalized (`e^{-|x|²/2} dx`) unless the
//! spec selects [`Normalization::Probability`], which multiplies every
//! n-dimensional result by `(2π)^{-n/2}`.

mod adaptive;
mod kronrod;
pub mod sphere;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::ln_gamma;
pub use sphere::SphereDesign;

pub(crate) use adaptive::{adapt, Adapted, Tolerance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("dimension must be at least 1, got {0}")]
    InvalidDimension(usize),
    #[error("integrand is not finite at r = {at} (value {value})")]
    NonFinite { at: f64, value: f64 },
    #[error("requested accuracy {requested:e} not reached (estimate {achieved:e}) on [0, {radius}]")]
    Accuracy { achieved: f64, requested: f64, radius: f64 },
    #[error("integrand envelope does not decay (net Gaussian rate {rate})")]
    NotDecaying { rate: f64 },
}

/// Which Gaussian measure an n-dimensional integral is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `e^{-|x|²/2} dx`
    #[default]
    Unnormalized,
    /// `(2π)^{-n/2} e^{-|x|²/2} dx`
    Probability,
}

impl Normalization {
    pub fn factor(self, n: usize) -> f64 {
        match self {
            Normalization::Unnormalized => 1.0,
            Normalization::Probability => (2.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusPolicy {
    #[default]
    Automatic,
    Fixed {
        radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub radius_policy: RadiusPolicy,
    /// Number of directions on S^{n-1}; rounded down to an even count of
    /// antithetic pairs.
    pub sphere_nodes: usize,
    pub seed: u64,
    pub normalization: Normalization,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-11,
            abs_tol: 1e-15,
            radius_policy: RadiusPolicy::Automatic,
            sphere_nodes: 256,
            seed: 0x5e_ed0f_0a11,
            normalization: Normalization::Unnormalized,
            max_panels: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(QuadratureError::InvalidSpec(format!("rel_tol must lie in (0, 1e-2], got {}", self.rel_tol)));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(QuadratureError::InvalidSpec("abs_tol must be non-negative".into()));
        }
        if self.sphere_nodes < 1 {
            return Err(QuadratureError::InvalidSpec("sphere_nodes must be at least 1".into()));
        }
        if let RadiusPolicy::Fixed { radius } = self.radius_policy {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(QuadratureError::InvalidSpec(format!("bad fixed radius {radius}")));
            }
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance { rel: self.rel_tol, abs: self.abs_tol, max_panels: self.max_panels }
    }
}

/// `dμ_n(r) = r^{n-1} e^{-r²/2} dr` on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadialMeasure {
    n: usize,
}

impl RadialMeasure {
    pub fn new(n: usize) -> Result<Self, QuadratureError> {
        if n == 0 {
            return Err(QuadratureError::InvalidDimension(n));
        }
        Ok(RadialMeasure { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn density(&self, r: f64) -> f64 {
        self.ln_density(r).exp()
    }

    pub fn ln_density(&self, r: f64) -> f64 {
        if self.n == 1 {
            -0.5 * r * r
        } else {
            (self.n as f64 - 1.0) * r.ln() - 0.5 * r * r
        }
    }

    /// Total mass, `moment(n, 0)`.
    pub fn mass(&self) -> f64 {
        moment(self.n, 0.0)
    }
}

/// `∫_0^∞ r^k dμ_n(r) = 2^{(n+k-2)/2} Γ((n+k)/2)`.
pub fn moment(n: usize, k: f64) -> f64 {
    let s = (n as f64 + k) / 2.0;
    ((s - 1.0) * std::f64::consts::LN_2 + ln_gamma(s)).exp()
}

/// `∫_0^∞ r^k e^{-c r²/2} r^{n-1} dr = c^{-(n+k)/2} · moment(n, k)`.
pub fn scaled_moment(n: usize, k: f64, rate: f64) -> f64 {
    rate.powf(-(n as f64 + k) / 2.0) * moment(n, k)
}

/// Bound `|g(r)| ≲ r^degree · e^{-rate·r²/2}` for a half-line integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub degree: f64,
    pub rate: f64,
}

impl Envelope {
    pub fn new(degree: f64, rate: f64) -> Self {
        Envelope { degree, rate }
    }

    /// Envelope of `f(r)·r^{n-1}e^{-r²/2}` for `f` of polynomial degree `k`.
    pub fn radial(n: usize, k: f64) -> Self {
        Envelope { degree: (n as f64 - 1.0 + k).max(0.0), rate: 1.0 }
    }

    fn ln_at(&self, r: f64) -> f64 {
        self.degree * r.ln() - 0.5 * self.rate * r * r
    }

    fn ln_peak(&self) -> f64 {
        if self.degree > 0.0 {
            self.ln_at((self.degree / self.rate).sqrt())
        } else {
            0.0
        }
    }

    /// Radius beyond which the envelope is below `target` times its peak.
    pub fn truncation_radius(&self, target: f64) -> f64 {
        let ln_target = target.ln() + self.ln_peak().max(0.0);
        let past_peak = 2.0 * (self.degree.max(1.0) / self.rate).sqrt();
        let mut r = (2.0 * (-ln_target).max(1.0) / self.rate).sqrt() + 1.0;
        for _ in 0..50 {
            let next = (2.0 * (self.degree * r.ln() - ln_target).max(1.0) / self.rate).sqrt();
            if (next - r).abs() < 1e-9 * r {
                r = next;
                break;
            }
            r = next;
        }
        r.max(past_peak)
    }

    /// Asymptotic tail `∫_R^∞` of an envelope-shaped integrand with value `g_r` at `R`.
    fn tail_from(&self, radius: f64, g_r: f64) -> f64 {
        let slope = self.rate * radius - self.degree / radius;
        if g_r == 0.0 {
            0.0
        } else if slope > 0.0 {
            g_r.abs() / slope
        } else {
            f64::INFINITY
        }
    }
}

/// Options for a half-line integral whose integrand already includes the weight.
#[derive(Debug, Clone, Default)]
pub struct HalfLine {
    pub envelope: Option<Envelope>,
    /// Radii where the integrand is not smooth.
    pub breakpoints: Vec<f64>,
    /// Integrand vanishes beyond this radius.
    pub support: Option<f64>,
}

impl HalfLine {
    pub fn with_envelope(envelope: Envelope) -> Self {
        HalfLine { envelope: Some(envelope), ..Default::default() }
    }

    pub fn breakpoints(mut self, bps: &[f64]) -> Self {
        self.breakpoints.extend_from_slice(bps);
        self
    }

    pub fn support(mut self, radius: Option<f64>) -> Self {
        self.support = radius;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err_est: f64,
    pub radius: f64,
    pub panels: usize,
    pub evaluations: usize,
}

pub(crate) struct HalfLineRule {
    pub estimate: Estimate,
    pub adapted: Adapted,
}

fn initial_panels(radius: f64, rate: f64) -> usize {
    let width = 1.0 / rate.sqrt();
    ((radius / width).ceil() as usize).clamp(2, 64)
}

pub(crate) fn half_line_rule<G>(g: &G, opts: &HalfLine, spec: &QuadratureSpec) -> Result<HalfLineRule, QuadratureError>
where
    G: Fn(f64) -> f64 + ?Sized,
{
    spec.validate()?;
    let envelope = opts.envelope.unwrap_or(Envelope::new(8.0, 1.0));
    if !(envelope.rate > 0.0) {
        return Err(QuadratureError::NotDecaying { rate: envelope.rate });
    }
    let target_ratio = spec.abs_tol.max(1e-300).min(spec.rel_tol * 1e-3);

    let (mut radius, fixed) = match (opts.support, spec.radius_policy) {
        (Some(s), RadiusPolicy::Fixed { radius }) => (s.min(radius), radius < s),
        (Some(s), RadiusPolicy::Automatic) => (s, false),
        (None, RadiusPolicy::Fixed { radius }) => (radius, true),
        (None, RadiusPolicy::Automatic) => (envelope.truncation_radius(target_ratio), false),
    };
    let compact = opts.support.is_some() && !fixed;

    for attempt in 0..5 {
        let adapted =
            adapt(g, 0.0, radius, &opts.breakpoints, initial_panels(radius, envelope.rate), spec.tolerance()).map_err(|e| match e {
                QuadratureError::Accuracy { achieved, requested, .. } => QuadratureError::Accuracy { achieved, requested, radius },
                other => other,
            })?;
        let tail = if compact {
            0.0
        } else {
            let g_r = g(radius);
            if !g_r.is_finite() {
                return Err(QuadratureError::NonFinite { at: radius, value: g_r });
            }
            envelope.tail_from(radius, g_r)
        };
        let target = spec.abs_tol.max(spec.rel_tol * adapted.value.abs());
        if tail <= target {
            let estimate = Estimate {
                value: adapted.value,
                err_est: adapted.err + tail,
                radius,
                panels: adapted.panels.len(),
                evaluations: adapted.evaluations,
            };
            return Ok(HalfLineRule { estimate, adapted });
        }
        if fixed || attempt == 4 {
            return Err(QuadratureError::Accuracy { achieved: tail, requested: target, radius });
        }
        radius *= 1.5;
    }
    unreachable!("loop returns on its last attempt")
}

/// Integrates `g` over `[0, ∞)`; `g` must already include any weight.
pub fn integrate_half_line<G>(g: G, opts: &HalfLine, spec: &QuadratureSpec) -> Result<Estimate, QuadratureError>
where
    G: Fn(f64) -> f64,
{
    half_line_rule(&g, opts, spec).map(|r| r.estimate)
}

/// Integrates `g` over the finite interval `[a, b]`.
pub fn integrate_interval<G>(g: G, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate, QuadratureError>
where
    G: Fn(f64) -> f64,
{
    spec.validate()?;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(QuadratureError::InvalidSpec(format!("interval [{a}, {b}] is not a finite ordered pair")));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, err_est: 0.0, radius: b, panels: 0, evaluations: 0 });
    }
    let adapted = adapt(&g, a, b, &[], 4, spec.tolerance())?;
    Ok(Estimate { value: adapted.value, err_est: adapted.err, radius: b, panels: adapted.panels.len(), evaluations: adapted.evaluations })
}

/// `∫_0^∞ f(r) dμ_n(r)` with the default envelope `r^{n-1+8} e^{-r²/2}`.
pub fn integrate_radial<F>(f: F, n: usize, spec: &QuadratureSpec) -> Result<Estimate, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    integrate_radial_with(f, n, &HalfLine::with_envelope(Envelope::radial(n, 8.0)), spec)
}

/// `∫_0^∞ f(r) dμ_n(r)` with an explicit envelope and breakpoints.
pub fn integrate_radial_with<F>(f: F, n: usize, opts: &HalfLine, spec: &QuadratureSpec) -> Result<Estimate, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let measure = RadialMeasure::new(n)?;
    let g = |r: f64| {
        let w = measure.density(r);
        if w == 0.0 {
            0.0
        } else {
            f(r) * w
        }
    };
    integrate_half_line(g, opts, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdEstimate {
    pub value: f64,
    pub err_est: f64,
    /// Standard error of the angular average (already included in `err_est`).
    pub angular_se: f64,
    /// Set when the angular standard error exceeds `rel_tol·|value|`.
    pub angular_warning: bool,
    pub directions: usize,
    pub normalization: Normalization,
}

/// Per-direction radial integrals `∫_0^∞ g(r·y) r^{n-1} e^{-r²/2} dr`.
pub(crate) fn directional_integrals<G>(
    g: &G,
    design: &SphereDesign,
    opts: &HalfLine,
    spec: &QuadratureSpec,
) -> Result<Vec<Estimate>, QuadratureError>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let n = design.dim();
    let measure = RadialMeasure::new(n)?;
    design
        .directions()
        .par_iter()
        .map(|y| {
            let h = |r: f64| {
                let w = measure.density(r);
                if w == 0.0 {
                    return 0.0;
                }
                let mut buf = [0.0; sphere::MAX_DIM];
                for (b, c) in buf.iter_mut().zip(y.iter()) {
                    *b = c * r;
                }
                g(&buf[..n]) * w
            };
            half_line_rule(&h, opts, spec).map(|r| r.estimate)
        })
        .collect()
}

/// Combines per-direction radial integrals into an n-dimensional estimate.
pub(crate) fn combine_directions(design: &SphereDesign, per_dir: &[Estimate], spec: &QuadratureSpec) -> NdEstimate {
    let n = design.dim();
    let scale = design.area() * spec.normalization.factor(n);
    let pair_means: Vec<f64> = per_dir.chunks(2).map(|c| c.iter().map(|e| e.value).sum::<f64>() / c.len() as f64).collect();
    let m = pair_means.len() as f64;
    let mean = pair_means.iter().sum::<f64>() / m;
    let se = if pair_means.len() > 1 {
        let var = pair_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    let quad_err = per_dir.iter().map(|e| e.err_est).sum::<f64>() / per_dir.len() as f64;
    let value = scale * mean;
    let angular_se = scale * se;
    NdEstimate {
        value,
        err_est: scale * quad_err + angular_se,
        angular_se,
        angular_warning: angular_se > spec.rel_tol * value.abs(),
        directions: per_dir.len(),
        normalization: spec.normalization,
    }
}

/// `∫_{ℝⁿ} g(x) dγ_n(x)` via an angular average of radial integrals over a
/// seeded antithetic design on S^{n-1}.
pub fn integrate_gaussian_nd<G>(g: G, n: usize, opts: &HalfLine, spec: &QuadratureSpec) -> Result<NdEstimate, QuadratureError>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let design = SphereDesign::new(n, spec.sphere_nodes, spec.seed)?;
    let per_dir = directional_integrals(&g, &design, opts, spec)?;
    Ok(combine_directions(&design, &per_dir, spec))
}
