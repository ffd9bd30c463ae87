use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::radial::{horner, horner_deriv, horner_second, RadialTestFunction, SupportHint};
use super::FunctionalError;
use crate::quadrature::sphere::{SphereDesign, MAX_DIM};

pub type FieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Writes a vector or a row-major `n×n` matrix into the output slice.
pub type FieldJetFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Which pointwise quantity of a field a modular or norm is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldQuantity {
    /// `|x|·|u(x)|`
    Weighted,
    /// `|u(x)|`
    Value,
    /// `|∇u(x)|`
    Gradient,
    /// `|∇²u(x)|_HS`
    Hessian,
}

/// Hilbert–Schmidt norm of a row-major `n×n` matrix. Off-diagonal pairs are
/// summed symmetrically so the result is bitwise invariant under transposition.
pub fn hs_norm(m: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        s += m[i * n + i] * m[i * n + i];
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (m[i * n + j], m[j * n + i]);
            s += a * a + b * b;
        }
    }
    s.sqrt()
}

/// A C¹ (or C²) function on ℝⁿ with analytic gradient and optional Hessian.
#[derive(Clone)]
pub struct FieldFunction {
    label: String,
    n: usize,
    u: FieldFn,
    grad: Option<FieldJetFn>,
    hess: Option<FieldJetFn>,
    support: SupportHint,
    profile: Option<RadialTestFunction>,
}

impl std::fmt::Debug for FieldFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldFunction")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("support", &self.support)
            .field("radial", &self.profile.is_some())
            .finish()
    }
}

fn check_dim(label: &str, n: usize) -> Result<(), FunctionalError> {
    if n == 0 || n > MAX_DIM {
        return Err(FunctionalError::Invalid { label: label.into(), reason: format!("dimension {n} outside 1..={MAX_DIM}") });
    }
    Ok(())
}

impl FieldFunction {
    pub fn new(label: impl Into<String>, n: usize, u: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, support: SupportHint) -> Self {
        FieldFunction { label: label.into(), n, u: Arc::new(u), grad: None, hess: None, support, profile: None }
    }

    pub fn with_gradient(mut self, grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_hessian(mut self, hess: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.hess = Some(Arc::new(hess));
        self
    }

    /// Declares `u(x) = profile(|x|)`.
    pub fn with_radial_profile(mut self, profile: RadialTestFunction) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn zero(n: usize) -> Self {
        FieldFunction::new("zero", n, |_| 0.0, SupportHint::Compact { radius: 1.0 })
            .with_gradient(|_, g| g.fill(0.0))
            .with_hessian(|_, h| h.fill(0.0))
            .with_radial_profile(RadialTestFunction::zero())
    }

    /// `exp(−|x − shift·e₁|² / (2 width²))`.
    pub fn gauss_bump(n: usize, shift: f64, width: f64) -> Result<Self, FunctionalError> {
        check_dim("gauss_bump", n)?;
        if !(width > 0.0) {
            return Err(FunctionalError::Invalid { label: "gauss_bump".into(), reason: "width must be positive".into() });
        }
        let w2 = width * width;
        let centered = move |x: &[f64], i: usize| if i == 0 { x[0] - shift } else { x[i] };
        let value = move |x: &[f64]| {
            let s: f64 = (0..x.len()).map(|i| centered(x, i).powi(2)).sum();
            (-0.5 * s / w2).exp()
        };
        // the shift costs e^{shift·|x|/w²}, absorbed by halving the rate
        let rate = if shift == 0.0 { 1.0 / w2 } else { 0.5 / w2 };
        let mut f = FieldFunction::new("gauss_bump", n, value, SupportHint::Decaying { degree: 0.0, rate })
            .with_gradient(move |x, g| {
                let e = value(x);
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi = -centered(x, i) / w2 * e;
                }
            })
            .with_hessian(move |x, h| {
                let e = value(x);
                let n = x.len();
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i * n + j] = (centered(x, i) * centered(x, j) / (w2 * w2) - delta / w2) * e;
                    }
                }
            });
        if shift == 0.0 {
            f = f.with_radial_profile(RadialTestFunction::poly_gauss(&[1.0], 1.0 / w2)?.with_label("gauss_bump_profile"));
        }
        Ok(f)
    }

    /// `P(x_axis)·e^{−rate|x|²/2}` with `P(t) = Σ c_k t^k`.
    pub fn poly_gauss(n: usize, coefficients: &[f64], rate: f64, axis: usize) -> Result<Self, FunctionalError> {
        check_dim("poly_gauss", n)?;
        if coefficients.is_empty() || !(rate > 0.0) || axis >= n {
            return Err(FunctionalError::Invalid {
                label: "poly_gauss".into(),
                reason: format!("need coefficients, rate > 0 and axis < {n}"),
            });
        }
        let c: Arc<[f64]> = coefficients.into();
        let degree = (coefficients.len() - 1) as f64;
        let a = rate;
        let gauss = move |x: &[f64]| (-0.5 * a * x.iter().map(|v| v * v).sum::<f64>()).exp();
        let (c1, c2, c3) = (c.clone(), c.clone(), c.clone());
        let mut f = FieldFunction::new("poly_gauss", n, move |x| horner(&c1, x[axis]) * gauss(x), SupportHint::Decaying { degree, rate })
            .with_gradient(move |x, g| {
                let e = gauss(x);
                let p = horner(&c2, x[axis]);
                let dp = horner_deriv(&c2, x[axis]);
                for (i, gi) in g.iter_mut().enumerate() {
                    let own = if i == axis { dp } else { 0.0 };
                    *gi = (own - a * x[i] * p) * e;
                }
            })
            .with_hessian(move |x, h| {
                let e = gauss(x);
                let t = x[axis];
                let (p, dp, d2p) = (horner(&c3, t), horner_deriv(&c3, t), horner_second(&c3, t));
                let n = x.len();
                for i in 0..n {
                    for j in 0..n {
                        let (ia, ja) = (i == axis, j == axis);
                        let mut v = a * a * x[i] * x[j] * p;
                        if ia && ja {
                            v += d2p;
                        }
                        if ia {
                            v -= a * x[j] * dp;
                        }
                        if ja {
                            v -= a * x[i] * dp;
                        }
                        if i == j {
                            v -= a * p;
                        }
                        h[i * n + j] = v * e;
                    }
                }
            });
        if coefficients.len() == 1 {
            f = f.with_radial_profile(RadialTestFunction::poly_gauss(coefficients, rate)?.with_label("poly_gauss_profile"));
        }
        Ok(f)
    }

    /// `sin(k·x₁)·e^{−rate|x|²/2}`.
    pub fn sine_gauss(n: usize, k: f64, rate: f64) -> Result<Self, FunctionalError> {
        check_dim("sine_gauss", n)?;
        if !(rate > 0.0) {
            return Err(FunctionalError::Invalid { label: "sine_gauss".into(), reason: "rate must be positive".into() });
        }
        let a = rate;
        let gauss = move |x: &[f64]| (-0.5 * a * x.iter().map(|v| v * v).sum::<f64>()).exp();
        Ok(FieldFunction::new("sine_gauss", n, move |x| (k * x[0]).sin() * gauss(x), SupportHint::Decaying { degree: 0.0, rate })
            .with_gradient(move |x, g| {
                let e = gauss(x);
                let (s, c) = (k * x[0]).sin_cos();
                for (i, gi) in g.iter_mut().enumerate() {
                    let own = if i == 0 { k * c } else { 0.0 };
                    *gi = (own - a * x[i] * s) * e;
                }
            })
            .with_hessian(move |x, h| {
                let e = gauss(x);
                let (s, c) = (k * x[0]).sin_cos();
                let n = x.len();
                for i in 0..n {
                    for j in 0..n {
                        let mut v = a * a * x[i] * x[j] * s;
                        if i == 0 && j == 0 {
                            v -= k * k * s;
                        }
                        if i == 0 {
                            v -= a * k * c * x[j];
                        }
                        if j == 0 {
                            v -= a * k * c * x[i];
                        }
                        if i == j {
                            v -= a * s;
                        }
                        h[i * n + j] = v * e;
                    }
                }
            }))
    }

    /// `x₁·exp(−(|x|/R)^8)`: linear inside radius `R`, smoothly cut off beyond.
    pub fn linear_cutoff(n: usize, radius: f64) -> Result<Self, FunctionalError> {
        check_dim("linear_cutoff", n)?;
        if !(radius > 0.0) {
            return Err(FunctionalError::Invalid { label: "linear_cutoff".into(), reason: "radius must be positive".into() });
        }
        let r8 = radius.powi(8);
        let cut = move |x: &[f64]| {
            let rho2: f64 = x.iter().map(|v| v * v).sum();
            let rho4 = rho2 * rho2;
            let phi = (-(rho4 * rho4) / r8).exp();
            // h = φ'(ρ)/ρ and h'(ρ)/ρ
            let h = -8.0 * rho4 * rho2 / r8 * phi;
            let dh = -8.0 * rho4 / r8 * phi * (6.0 - 8.0 * rho4 * rho4 / r8);
            (phi, h, dh)
        };
        Ok(FieldFunction::new("linear_cutoff", n, move |x| x[0] * cut(x).0, SupportHint::Decaying { degree: 1.0, rate: 0.0 })
            .with_gradient(move |x, g| {
                let (phi, h, _) = cut(x);
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi = x[0] * h * x[i] + if i == 0 { phi } else { 0.0 };
                }
            })
            .with_hessian(move |x, hm| {
                let (_, h, dh) = cut(x);
                let n = x.len();
                for i in 0..n {
                    for j in 0..n {
                        let mut v = x[0] * x[i] * x[j] * dh;
                        if i == 0 {
                            v += h * x[j];
                        }
                        if j == 0 {
                            v += h * x[i];
                        }
                        if i == j {
                            v += x[0] * h;
                        }
                        hm[i * n + j] = v;
                    }
                }
            }))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> SupportHint {
        self.support
    }

    pub fn radial_profile(&self) -> Option<&RadialTestFunction> {
        self.profile.as_ref()
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hess.is_some()
    }

    #[inline]
    pub fn u(&self, x: &[f64]) -> f64 {
        (self.u)(x)
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<(), FunctionalError> {
        let g = self.grad.as_ref().ok_or_else(|| FunctionalError::Precondition(format!("{}: gradient not provided", self.label)))?;
        g(x, out);
        Ok(())
    }

    pub fn hessian(&self, x: &[f64], out: &mut [f64]) -> Result<(), FunctionalError> {
        let h = self.hess.as_ref().ok_or_else(|| FunctionalError::Precondition(format!("{}: Hessian not provided", self.label)))?;
        h(x, out);
        Ok(())
    }

    /// Checks that the requested quantity can be evaluated.
    pub fn require(&self, q: FieldQuantity) -> Result<(), FunctionalError> {
        match q {
            FieldQuantity::Gradient if self.grad.is_none() => {
                Err(FunctionalError::Precondition(format!("{}: gradient not provided", self.label)))
            }
            FieldQuantity::Hessian if self.hess.is_none() => {
                Err(FunctionalError::Precondition(format!("{}: Hessian not provided", self.label)))
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value of the selected quantity. Panics if the required jet is
    /// missing; call [`FieldFunction::require`] first.
    pub fn quantity(&self, q: FieldQuantity, x: &[f64]) -> f64 {
        let n = x.len();
        match q {
            FieldQuantity::Value => self.u(x).abs(),
            FieldQuantity::Weighted => x.iter().map(|v| v * v).sum::<f64>().sqrt() * self.u(x).abs(),
            FieldQuantity::Gradient => {
                let mut g = [0.0; MAX_DIM];
                (self.grad.as_ref().expect("gradient"))(x, &mut g[..n]);
                g[..n].iter().map(|v| v * v).sum::<f64>().sqrt()
            }
            FieldQuantity::Hessian => {
                let mut h = [0.0; MAX_DIM * MAX_DIM];
                (self.hess.as_ref().expect("Hessian"))(x, &mut h[..n * n]);
                hs_norm(&h[..n * n], n)
            }
        }
    }

    pub fn hint(&self, q: FieldQuantity) -> SupportHint {
        match q {
            FieldQuantity::Value => self.support,
            FieldQuantity::Weighted => match self.support {
                SupportHint::Decaying { degree, rate } => SupportHint::Decaying { degree: degree + 1.0, rate },
                h => h,
            },
            FieldQuantity::Gradient => self.support.differentiated(1),
            FieldQuantity::Hessian => self.support.differentiated(2),
        }
    }

    /// Gradient against central differences (step `1e-5`, `1e-4` relative),
    /// Hessian symmetry and Hessian against differences of the gradient.
    pub fn validate(&self) -> Result<(), FunctionalError> {
        check_dim(&self.label, self.n)?;
        let n = self.n;
        let design = SphereDesign::new(n, 8, 17).map_err(|e| FunctionalError::Precondition(e.to_string()))?;
        let mut points = vec![vec![0.0; n]];
        for y in design.directions() {
            for r in [0.3, 0.9, 1.7, 2.6] {
                points.push(y.iter().map(|c| c * r).collect());
            }
        }
        let invalid = |reason: String| FunctionalError::Invalid { label: self.label.clone(), reason };
        let h = 1e-5;
        let mut scale_g: f64 = 0.0;
        let mut grads = Vec::new();
        if let Some(grad) = &self.grad {
            for x in &points {
                let mut g = vec![0.0; n];
                grad(x, &mut g);
                scale_g = g.iter().fold(scale_g, |m, v| m.max(v.abs()));
                grads.push(g);
            }
            for (x, g) in points.iter().zip(&grads) {
                for i in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (self.u(&xp) - self.u(&xm)) / (2.0 * h);
                    let dev = (fd - g[i]).abs() / g[i].abs().max(1e-3 * scale_g).max(1e-12);
                    if dev > 1e-4 {
                        return Err(invalid(format!(
                            "gradient component {i} deviates from finite differences by {dev:e} (relative) at {x:?}"
                        )));
                    }
                }
            }
        }
        if let (Some(hess), Some(grad)) = (&self.hess, &self.grad) {
            let mut scale_h: f64 = 0.0;
            let mut mats = Vec::new();
            for x in &points {
                let mut m = vec![0.0; n * n];
                hess(x, &mut m);
                scale_h = m.iter().fold(scale_h, |a, v| a.max(v.abs()));
                mats.push(m);
            }
            for (x, m) in points.iter().zip(&mats) {
                for i in 0..n {
                    for j in 0..n {
                        if (m[i * n + j] - m[j * n + i]).abs() > 1e-12 * scale_h.max(1.0) {
                            return Err(invalid(format!("Hessian is not symmetric at {x:?}")));
                        }
                    }
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let (mut gp, mut gm) = (vec![0.0; n], vec![0.0; n]);
                    grad(&xp, &mut gp);
                    grad(&xm, &mut gm);
                    for j in 0..n {
                        let fd = (gp[j] - gm[j]) / (2.0 * h);
                        let v = m[j * n + i];
                        let dev = (fd - v).abs() / v.abs().max(1e-3 * scale_h).max(1e-12);
                        if dev > 1e-4 {
                            return Err(invalid(format!("Hessian entry ({j},{i}) deviates from gradient differences by {dev:e} at {x:?}")));
                        }
                    }
                }
            }
        }
        if let Some(p) = &self.profile {
            for x in &points {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (p.u(r) - self.u(x)).abs() > 1e-12 * p.u(r).abs().max(1.0) {
                    return Err(invalid(format!("declared radial profile disagrees at {x:?}")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: usize) -> Vec<FieldFunction> {
        vec![
            FieldFunction::gauss_bump(n, 0.0, 1.0).unwrap(),
            FieldFunction::gauss_bump(n, 1.0, 0.8).unwrap(),
            FieldFunction::poly_gauss(n, &[0.0, 1.0], 0.5, 0).unwrap(),
            FieldFunction::poly_gauss(n, &[1.0, 0.0, -1.0], 1.0, n - 1).unwrap(),
            FieldFunction::sine_gauss(n, 2.0, 0.6).unwrap(),
            FieldFunction::linear_cutoff(n, 2.0).unwrap(),
        ]
    }

    #[test]
    fn analytic_jets_match_differences() {
        for n in 1..=3 {
            for f in corpus(n) {
                f.validate().unwrap_or_else(|e| panic!("n={n}: {e}"));
            }
        }
    }

    #[test]
    fn wrong_gradient_is_rejected() {
        let f = FieldFunction::new("bad", 2, |x| x[0] * x[0], SupportHint::Decaying { degree: 2.0, rate: 0.0 }).with_gradient(|x, g| {
            g[0] = x[0];
            g[1] = 0.0;
        });
        assert!(f.validate().is_err());
    }

    #[test]
    fn hs_norm_is_transpose_invariant() {
        let m = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.5];
        let t = [1.0, 4.0, 7.0, 2.0, 5.0, 8.0, 3.0, 6.0, 9.5];
        assert_eq!(hs_norm(&m, 3), hs_norm(&t, 3));
        assert!((hs_norm(&[3.0, 0.0, 0.0, 4.0], 2) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn quantities() {
        let f = FieldFunction::linear_cutoff(2, 10.0).unwrap();
        let x = [0.5, 0.2];
        assert!((f.quantity(FieldQuantity::Value, &x) - 0.5).abs() < 1e-9);
        assert!((f.quantity(FieldQuantity::Gradient, &x) - 1.0).abs() < 1e-6);
        assert!(f.quantity(FieldQuantity::Hessian, &x) < 1e-5);
        let z = FieldFunction::new("nojet", 1, |_| 0.0, SupportHint::Compact { radius: 1.0 });
        assert!(z.require(FieldQuantity::Hessian).is_err());
    }
}
