//! Weighted Hardy inequalities on a half-line and the constant
//!
//! ```text
//! B = sup_{r>a} μ([r,∞))^{1/q} (∫_a^r (dν/dx)^{−1/(p−1)} dx)^{(p−1)/p}
//! ```
//!
//! which is finite exactly when `(∫|∫_a^x f|^q dμ)^{1/q} ≤ C(∫|f|^p dν)^{1/p}`
//! holds for some `C`.
//!
//! All measure data is handled through logarithms: the Gaussian tails used in
//! the main application underflow long before the objective settles.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nfunc::ScalarFn;
use crate::quadrature::{integrate_interval, moment, QuadratureError, QuadratureSpec};
use crate::report::{CheckReport, InequalityId, Verdict};
use crate::special::gamma_upper_regularized;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MazyaError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid measure pair: {0}")]
    InvalidPair(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Relative size below which the small-x expansion of the inner integral stops.
const SMALL_X_STOP: f64 = 1e-17;
/// The inner integral is declared infinite once its estimate passes this.
pub const INNER_CAP: f64 = 1e12;
/// Number of decades probed towards the left endpoint.
const SMALL_X_DECADES: usize = 60;

/// Where the supremum over `r` is searched, as offsets `r − a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RGrid {
    pub offset_min: f64,
    pub offset_max: f64,
    pub points_per_decade: usize,
}

impl RGrid {
    pub fn offsets(&self) -> Vec<f64> {
        let (lo, hi) = (self.offset_min.log10(), self.offset_max.log10());
        let count = ((hi - lo) * self.points_per_decade as f64).ceil().max(1.0) as usize;
        (0..=count).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / count as f64)).collect()
    }

    pub fn refined(&self, factor: usize) -> Self {
        RGrid { points_per_decade: self.points_per_decade * factor, ..*self }
    }
}

/// A pair `(μ, ν)` on `(a, ∞)`, given through `ln μ([r,∞))`, `ln dμ/dx` and
/// `ln dν/dx` (the absolutely continuous part of `ν`).
#[derive(Clone)]
pub struct MeasurePair {
    pub label: String,
    pub a: f64,
    pub p: f64,
    pub q: f64,
    pub grid: RGrid,
    ln_mu_tail: ScalarFn,
    ln_mu_density: ScalarFn,
    ln_nu_density: ScalarFn,
}

impl std::fmt::Debug for MeasurePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasurePair")
            .field("label", &self.label)
            .field("a", &self.a)
            .field("p", &self.p)
            .field("q", &self.q)
            .finish_non_exhaustive()
    }
}

impl MeasurePair {
    pub fn new(
        label: impl Into<String>,
        a: f64,
        p: f64,
        q: f64,
        ln_mu_tail: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ln_mu_density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ln_nu_density: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, MazyaError> {
        let pair = MeasurePair {
            label: label.into(),
            a,
            p,
            q,
            grid: RGrid { offset_min: 1e-6, offset_max: 1e6, points_per_decade: 20 },
            ln_mu_tail: Arc::new(ln_mu_tail),
            ln_mu_density: Arc::new(ln_mu_density),
            ln_nu_density: Arc::new(ln_nu_density),
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn with_grid(mut self, grid: RGrid) -> Self {
        self.grid = grid;
        self
    }

    fn validate(&self) -> Result<(), MazyaError> {
        if !self.a.is_finite() {
            return Err(MazyaError::InvalidPair(format!("left endpoint {} is not finite", self.a)));
        }
        if !(self.p >= 1.0 && self.q >= self.p && self.q.is_finite()) {
            return Err(MazyaError::InvalidPair(format!("need 1 ≤ p ≤ q < ∞, got p = {}, q = {}", self.p, self.q)));
        }
        Ok(())
    }

    /// `a = 0`, `dμ = x^{−2}dx`, `dν = dx`, `p = q = 2`; the objective is
    /// identically 1.
    pub fn classical() -> Self {
        MeasurePair::new("classical", 0.0, 2.0, 2.0, |r: f64| -r.ln(), |x: f64| -2.0 * x.ln(), |_| 0.0).expect("classical pair is valid")
    }

    /// `dμ = x^p dμ_n`, `dν = dμ_n`, `a = 0`, `q = p`, with
    /// `dμ_n = x^{n−1}e^{−x²/2}dx`.
    pub fn gaussian(p: f64, n: usize) -> Result<Self, MazyaError> {
        if n == 0 {
            return Err(MazyaError::InvalidPair("dimension must be at least 1".into()));
        }
        let nf = n as f64;
        let s = (nf + p) / 2.0;
        let ln_total = moment(n, p).ln();
        let ln_density = move |x: f64| (nf - 1.0) * x.ln() - 0.5 * x * x;
        let ln_tail = move |r: f64| {
            let q = gamma_upper_regularized(s, 0.5 * r * r);
            if q > 1e-250 {
                ln_total + q.ln()
            } else {
                // Q(s, x) ~ x^{s−1}e^{−x}/Γ(s) for large x
                let x = 0.5 * r * r;
                ln_total + (s - 1.0) * x.ln() - x - crate::special::ln_gamma(s) + (1.0 + (s - 1.0) / x).ln()
            }
        };
        // keep e^{r²/(2(p−1))} comfortably finite
        let offset_max = if p > 1.0 { (1200.0 * (p - 1.0)).sqrt().min(20.0) } else { 20.0 };
        Ok(MeasurePair::new(format!("gaussian_p{p}_n{n}"), 0.0, p, p, ln_tail, move |x: f64| p * x.ln() + ln_density(x), ln_density)?
            .with_grid(RGrid { offset_min: 1e-6, offset_max, points_per_decade: 20 }))
    }

    /// Piecewise-linear densities on `x[0] < x[1] < …`; both measures vanish
    /// beyond the last node.
    pub fn table(label: impl Into<String>, p: f64, q: f64, x: &[f64], mu: &[f64], nu: &[f64]) -> Result<Self, MazyaError> {
        if x.len() < 2 || mu.len() != x.len() || nu.len() != x.len() {
            return Err(MazyaError::InvalidPair("table needs at least two nodes and equal-length columns".into()));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(MazyaError::InvalidPair("table nodes must be strictly increasing".into()));
        }
        if mu.iter().chain(nu).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(MazyaError::InvalidPair("densities must be finite and non-negative".into()));
        }
        let xs: Arc<[f64]> = x.into();
        let interp = |ys: &[f64]| {
            let (xs, ys): (Arc<[f64]>, Arc<[f64]>) = (xs.clone(), ys.into());
            move |t: f64| {
                if t < xs[0] || t > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&v| v <= t).clamp(1, xs.len() - 1);
                let w = (t - xs[i - 1]) / (xs[i] - xs[i - 1]);
                ys[i - 1] + w * (ys[i] - ys[i - 1])
            }
        };
        let mu_at = interp(mu);
        let nu_at = interp(nu);
        let (xs_t, mu_t) = (xs.clone(), Arc::<[f64]>::from(mu));
        let mu_at_t = mu_at.clone();
        let tail = move |r: f64| {
            // exact trapezoid integral of the linear interpolant
            let last = xs_t.len() - 1;
            if r >= xs_t[last] {
                return f64::NEG_INFINITY;
            }
            let mut total = 0.0;
            let start = xs_t.partition_point(|&v| v <= r);
            if start > 0 {
                total += 0.5 * (mu_at_t(r) + mu_t[start]) * (xs_t[start] - r);
            }
            for i in start.max(1)..=last {
                if i > start {
                    total += 0.5 * (mu_t[i - 1] + mu_t[i]) * (xs_t[i] - xs_t[i - 1]);
                }
            }
            total.ln()
        };
        let span = x[x.len() - 1] - x[0];
        Ok(MeasurePair::new(label, x[0], p, q, tail, move |t| mu_at(t).ln(), move |t| nu_at(t).ln())?.with_grid(RGrid {
            offset_min: span * 1e-6,
            offset_max: span * (1.0 - 1e-9),
            points_per_decade: 20,
        }))
    }

    pub fn ln_mu_tail(&self, r: f64) -> f64 {
        (self.ln_mu_tail)(r)
    }

    pub fn ln_nu_density(&self, x: f64) -> f64 {
        (self.ln_nu_density)(x)
    }

    pub fn ln_mu_density(&self, x: f64) -> f64 {
        (self.ln_mu_density)(x)
    }

    /// `(dν/dx)^{−1/(p−1)}`, infinite where the density vanishes.
    fn inner_integrand(&self, x: f64) -> f64 {
        (-self.ln_nu_density(x) / (self.p - 1.0)).exp()
    }
}

/// Outcome of [`mazya_b`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MazyaEstimate {
    /// `B`, or `+∞` when divergent.
    #[serde(with = "crate::report::lossless")]
    pub value: f64,
    pub divergent: bool,
    #[serde(with = "crate::report::lossless")]
    pub argmax_r: f64,
}

impl MazyaEstimate {
    fn divergent(at: f64) -> Self {
        MazyaEstimate { value: f64::INFINITY, divergent: true, argmax_r: at }
    }
}

/// `∫_a^{a+δ}` of the inner integrand, summed decade by decade towards `a`.
/// Returns `None` when the contributions stop shrinking geometrically or the
/// total passes [`INNER_CAP`].
fn inner_near_endpoint(pair: &MeasurePair, delta: f64, spec: &QuadratureSpec) -> Result<Option<f64>, MazyaError> {
    let g = |x: f64| pair.inner_integrand(x);
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    let mut ratios = Vec::new();
    let mut hi = delta;
    for _ in 0..SMALL_X_DECADES {
        let lo = hi / 10.0;
        if pair.a + lo <= pair.a + (pair.a.abs() * 1e-13) {
            // the endpoint is no longer resolved in floating point
            break;
        }
        let piece = match integrate_interval(g, pair.a + lo, pair.a + hi, spec) {
            Ok(e) => e.value,
            Err(QuadratureError::NonFinite { .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        total += piece;
        if !total.is_finite() || total > INNER_CAP {
            return Ok(None);
        }
        if let Some(p) = prev {
            ratios.push(if p > 0.0 { piece / p } else { 0.0 });
        }
        prev = Some(piece);
        hi = lo;
        if total > 0.0 && piece <= SMALL_X_STOP * total {
            return Ok(Some(total));
        }
    }
    // Still contributing at the last probed decade: geometric decay
    // extrapolates, anything slower is a non-integrable singularity.
    let rho = ratios.iter().rev().take(3).fold(0.0f64, |m, &r| m.max(r));
    if rho < 0.95 {
        Ok(Some(total + prev.unwrap_or(0.0) * rho / (1.0 - rho)))
    } else {
        Ok(None)
    }
}

/// True when the objective keeps growing at an end of the grid without its
/// increments shrinking.
fn grows_at_boundary(ln_obj: &[f64], per_decade: usize) -> bool {
    let k = per_decade.max(1);
    if ln_obj.len() < 2 * k + 1 {
        return false;
    }
    let check = |v: &[f64]| {
        let n = v.len();
        let last = v[n - 1] - v[n - 1 - k];
        let prev = v[n - 1 - k] - v[n - 1 - 2 * k];
        let monotone = v[n - 1 - k..].windows(2).all(|w| w[1] >= w[0]);
        monotone && last > 1e-6 && last >= 0.5 * prev
    };
    let reversed: Vec<f64> = ln_obj.iter().rev().copied().collect();
    check(ln_obj) || check(&reversed)
}

/// The objective sampled on the pair's grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSeries {
    pub r: Vec<f64>,
    /// `∫_a^r (dν/dx)^{−1/(p−1)} dx`
    pub inner: Vec<f64>,
    pub ln_objective: Vec<f64>,
}

/// Either the sampled objective or the point where the inner integral was
/// found to be infinite.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Sampled(ObjectiveSeries),
    InnerDivergent { at: f64 },
}

fn check_p(pair: &MeasurePair) -> Result<(), MazyaError> {
    if !(pair.p > 1.0) {
        return Err(MazyaError::Precondition(format!("p = {} must exceed 1; the inner factor needs the (p−1)-th root", pair.p)));
    }
    Ok(())
}

fn ln_objective(pair: &MeasurePair, r: f64, inner: f64) -> f64 {
    let (p, q) = (pair.p, pair.q);
    pair.ln_mu_tail(r) / q + (p - 1.0) / p * inner.ln()
}

pub fn objective_series(pair: &MeasurePair, spec: &QuadratureSpec) -> Result<Objective, MazyaError> {
    check_p(pair)?;
    let offsets = pair.grid.offsets();
    let rs: Vec<f64> = offsets.iter().map(|o| pair.a + o).collect();
    let Some(head) = inner_near_endpoint(pair, offsets[0], spec)? else {
        return Ok(Objective::InnerDivergent { at: pair.a });
    };
    let g = |x: f64| pair.inner_integrand(x);
    let mut inner = Vec::with_capacity(rs.len());
    let mut acc = head;
    inner.push(acc);
    for w in rs.windows(2) {
        match integrate_interval(g, w[0], w[1], spec) {
            Ok(e) => acc += e.value,
            Err(QuadratureError::NonFinite { .. }) => return Ok(Objective::InnerDivergent { at: w[1] }),
            Err(e) => return Err(e.into()),
        }
        if !acc.is_finite() {
            return Ok(Objective::InnerDivergent { at: w[1] });
        }
        inner.push(acc);
    }
    let ln_obj = rs.iter().zip(&inner).map(|(&r, &i)| ln_objective(pair, r, i)).collect();
    Ok(Objective::Sampled(ObjectiveSeries { r: rs, inner, ln_objective: ln_obj }))
}

/// Numerical supremum of the characterization objective over the pair's grid,
/// refined by golden section around the best grid point.
pub fn mazya_b(pair: &MeasurePair, spec: &QuadratureSpec) -> Result<MazyaEstimate, MazyaError> {
    let series = match objective_series(pair, spec)? {
        Objective::Sampled(s) => s,
        Objective::InnerDivergent { at } => return Ok(MazyaEstimate::divergent(at)),
    };
    let ObjectiveSeries { r: rs, inner, ln_objective: ln_obj } = series;
    let g = |x: f64| pair.inner_integrand(x);
    let (best, &ln_best) = ln_obj
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| MazyaError::InvalidPair("objective undefined on the whole grid".into()))?;
    if grows_at_boundary(&ln_obj, pair.grid.points_per_decade) || ln_best.exp() > INNER_CAP {
        let at = if best + 1 == rs.len() || best == 0 { rs[best] } else { rs[rs.len() - 1] };
        return Ok(MazyaEstimate::divergent(at));
    }
    // golden-section refinement between the neighbours of the best node
    let lo = best.saturating_sub(1);
    let hi = (best + 1).min(rs.len() - 1);
    let base_inner = inner[lo];
    let base_r = rs[lo];
    let refine = |r: f64| match integrate_interval(g, base_r, r, spec) {
        Ok(e) => ln_objective(pair, r, base_inner + e.value),
        Err(_) => f64::NEG_INFINITY,
    };
    let (r_star, ln_star) = if hi > lo { crate::optimize::golden_max(refine, rs[lo], rs[hi], 1e-10) } else { (rs[best], ln_best) };
    let (argmax_r, ln_value) = if ln_star >= ln_best { (r_star, ln_star) } else { (rs[best], ln_best) };
    Ok(MazyaEstimate { value: ln_value.exp(), divergent: false, argmax_r })
}

/// Whether the Gaussian pair with `q = p` has finite `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finiteness {
    Finite,
    Divergent,
}

pub fn gaussian_hardy_pq(p: f64, n: usize, spec: &QuadratureSpec) -> Result<(Finiteness, MazyaEstimate), MazyaError> {
    let est = mazya_b(&MeasurePair::gaussian(p, n)?, spec)?;
    let verdict = if est.divergent { Finiteness::Divergent } else { Finiteness::Finite };
    Ok((verdict, est))
}

/// `q^{1/q}(q/(q−1))^{(p−1)/p}`: the best constant in the transform inequality
/// is at most `B` times this factor.
pub fn factor_cap(p: f64, q: f64) -> f64 {
    q.powf(1.0 / q) * (q / (q - 1.0)).powf((p - 1.0) / p)
}

/// A function on `[lo, hi]` (zero elsewhere) fed to the transform check.
#[derive(Clone)]
pub struct TransformInput {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub breakpoints: Vec<f64>,
    f: ScalarFn,
}

impl TransformInput {
    pub fn new(label: impl Into<String>, lo: f64, hi: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TransformInput { label: label.into(), lo, hi, breakpoints: Vec::new(), f: Arc::new(f) }
    }

    pub fn with_breakpoints(mut self, bps: &[f64]) -> Self {
        self.breakpoints.extend_from_slice(bps);
        self
    }

    pub fn indicator(lo: f64, hi: f64) -> Self {
        TransformInput::new(format!("indicator_{lo}_{hi}"), lo, hi, |_| 1.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            (self.f)(x)
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        TransformInput { label: format!("{}*{c}", self.label), f: Arc::new(move |x| c * f(x)), ..self.clone() }
    }

    fn cuts(&self, from: f64, to: f64) -> Vec<f64> {
        let mut cuts = vec![from];
        cuts.extend(self.breakpoints.iter().copied().filter(|&b| b > from && b < to));
        cuts.push(to);
        cuts
    }
}

fn integrate_segments<G: Fn(f64) -> f64>(g: G, cuts: &[f64], spec: &QuadratureSpec) -> Result<(f64, f64), QuadratureError> {
    let mut value = 0.0;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let e = integrate_interval(&g, w[0], w[1], spec)?;
        value += e.value;
        err += e.err_est;
    }
    Ok((value, err))
}

/// Both sides of the transform inequality for one `f`. The report's
/// `constants_used` carries `ratio = LHS / (∫|f|^p dν)^{1/p}`.
pub fn check_hardy_transform(f: &TransformInput, pair: &MeasurePair, c: f64, spec: &QuadratureSpec) -> Result<CheckReport, MazyaError> {
    let (p, q) = (pair.p, pair.q);
    let lo = f.lo.max(pair.a);
    let hi = f.hi;
    if !(hi > lo) {
        return Err(MazyaError::Precondition(format!("support [{}, {}] does not meet (a, ∞)", f.lo, f.hi)));
    }
    let primitive = |x: f64| -> f64 { integrate_segments(|t| f.eval(t), &f.cuts(lo, x), spec).map(|(v, _)| v).unwrap_or(f64::NAN) };
    let lhs_inner = integrate_segments(|x| primitive(x).abs().powf(q) * pair.ln_mu_density(x).exp(), &f.cuts(lo, hi), spec)?;
    let total = primitive(hi);
    let tail = total.abs().powf(q) * pair.ln_mu_tail(hi).exp();
    let lhs_q = lhs_inner.0 + tail;
    let rhs_p = integrate_segments(|x| f.eval(x).abs().powf(p) * pair.ln_nu_density(x).exp(), &f.cuts(lo, hi), spec);
    let lhs = lhs_q.powf(1.0 / q);
    let lhs_err = if lhs_q > 0.0 { lhs * lhs_inner.1 / (q * lhs_q) } else { 0.0 };
    let (rhs_p, rhs_p_err) = match rhs_p {
        Ok(v) if v.0.is_finite() => v,
        _ => {
            let mut r = CheckReport::compare(InequalityId::HardyTransform, lhs, f64::INFINITY, f64::INFINITY);
            r.verdict = Verdict::Indeterminate;
            return Ok(r.with_note("right-hand side diverges"));
        }
    };
    if lhs_q == 0.0 && rhs_p == 0.0 {
        return Ok(CheckReport::compare(InequalityId::HardyTransform, 0.0, 0.0, 0.0).with_constant("C", c));
    }
    let rhs0 = rhs_p.powf(1.0 / p);
    let rhs_err = if rhs_p > 0.0 { rhs0 * rhs_p_err / (p * rhs_p) } else { 0.0 };
    Ok(CheckReport::compare(InequalityId::HardyTransform, lhs, c * rhs0, lhs_err + c * rhs_err)
        .with_constant("C", c)
        .with_constant("ratio", lhs / rhs0)
        .with_constant("p", p)
        .with_constant("q", q))
}

/// A measure pair as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairDecl {
    Classical,
    Gaussian {
        p: f64,
        n: usize,
    },
    /// Densities of `μ` and `ν` tabulated on increasing nodes `x`, with `a = x[0]`.
    Table {
        label: String,
        p: f64,
        q: f64,
        x: Vec<f64>,
        mu: Vec<f64>,
        nu: Vec<f64>,
    },
}

impl PairDecl {
    pub fn build(&self) -> Result<MeasurePair, MazyaError> {
        match self {
            PairDecl::Classical => Ok(MeasurePair::classical()),
            PairDecl::Gaussian { p, n } => MeasurePair::gaussian(*p, *n),
            PairDecl::Table { label, p, q, x, mu, nu } => MeasurePair::table(label.clone(), *p, *q, x, mu, nu),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairFile {
    pairs: Vec<PairDecl>,
}

/// Parses a TOML file holding a `[[pairs]]` array.
pub fn parse_pair_config(text: &str) -> Result<Vec<PairDecl>, MazyaError> {
    toml::from_str::<PairFile>(text).map(|f| f.pairs).map_err(|e| MazyaError::InvalidPair(format!("pair config: {e}")))
}
