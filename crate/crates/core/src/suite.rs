//! Corpus-wide runs of every checker. Each function here returns reports in a
//! deterministic order regardless of how the work was scheduled.

use std::collections::BTreeMap;
use std::f64::consts::E;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{CorpusManifest, NfuncEntry};
use crate::functionals::{
    luxemburg_norm_radial, modular_radial, modular_triple_radial, FieldFunction, FunctionalError, LuxemburgSpec, ModularTriple, Quantity,
    RadialTestFunction,
};
use crate::hardy::{
    check_alternative, check_convex_case, check_linear, check_nd, check_norm_form_radial, check_quadratic_exact, linear_constants,
    tradeoff_check, HardyError, NdForm,
};
use crate::landau_kolmogorov::{
    additive_lk_from_hardy, fit_constants, lk_modular_report, lk_modulars, lk_norm_report, lk_norms, modular_sample, norms_sample, LkError,
    LkFit,
};
use crate::mazya::{
    check_hardy_transform, factor_cap, mazya_b, objective_series, Finiteness, MazyaError, MeasurePair, Objective, PairDecl, TransformInput,
};
use crate::nfunc::{check_split_bound, check_young_bound, logspace, NFunction, NFunctionKind};
use crate::quadrature::QuadratureSpec;
use crate::report::{decide, CheckReport, InequalityId, LkReport, RunReport, Verdict};
use crate::sharpness::{
    c1_lower_bound, c2_infeasibility_scan, extremal_function, extremal_moments, stirling_ratio, ExtremalParams, ScanRow,
};

/// Penalties at which the β/γ trade-off is evaluated.
pub const DEFAULT_RHOS: [f64; 2] = [1.5, 4.0];

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub dims: Vec<usize>,
    /// Restrict to these N-function labels.
    pub nfunctions: Option<Vec<String>>,
    /// Restrict to these inequality ids.
    pub forms: Option<Vec<InequalityId>>,
    pub spec: QuadratureSpec,
    pub lux: LuxemburgSpec,
    pub rhos: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub fit_grid: Vec<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            dims: vec![1, 2, 3],
            nfunctions: None,
            forms: None,
            spec: QuadratureSpec::default(),
            lux: LuxemburgSpec::default(),
            rhos: DEFAULT_RHOS.to_vec(),
            theta_grid: crate::landau_kolmogorov::DEFAULT_THETAS.to_vec(),
            fit_grid: crate::landau_kolmogorov::default_fit_grid(),
        }
    }
}

impl SuiteConfig {
    fn wants(&self, id: InequalityId) -> bool {
        self.forms.as_ref().is_none_or(|f| f.contains(&id))
    }

    fn selected<'a>(&self, m: &'a CorpusManifest) -> Vec<&'a NfuncEntry> {
        m.nfunctions
            .iter()
            .filter(|e| self.nfunctions.as_ref().is_none_or(|names| names.iter().any(|n| n == e.nfunction.label())))
            .collect()
    }
}

/// How a failed computation shows up in a report.
fn failure_report(id: InequalityId, reason: String, hypothesis: bool) -> CheckReport {
    if hypothesis {
        CheckReport::trivial(id, format!("not applicable: {reason}"))
    } else {
        let mut r = CheckReport::compare(id, f64::NAN, f64::NAN, f64::INFINITY);
        r.verdict = Verdict::Indeterminate;
        r.with_note(format!("numerical error: {reason}"))
    }
}

fn is_hypothesis_error(e: &HardyError) -> bool {
    matches!(
        e,
        HardyError::Precondition(_)
            | HardyError::OutOfRegime { .. }
            | HardyError::Functional(FunctionalError::Precondition(_))
            | HardyError::Nfunc(_)
    )
}

fn from_hardy(id: InequalityId, r: Result<CheckReport, HardyError>) -> CheckReport {
    match r {
        Ok(r) => r,
        Err(e) => {
            let hyp = is_hypothesis_error(&e);
            failure_report(id, e.to_string(), hyp)
        }
    }
}

fn is_quadratic(nf: &NFunction) -> bool {
    matches!(nf.kind(), NFunctionKind::Power { p } if *p == 2.0)
}

/// Every one-dimensional check for one `(u, M, n)`.
pub fn radial_checks(u: &RadialTestFunction, nf: &NFunction, n: usize, cfg: &SuiteConfig) -> Vec<CheckReport> {
    let mut out = Vec::new();
    let exps = nf.exponents();
    let triple = match modular_triple_radial(u, nf, n, &cfg.spec) {
        Ok(t) => Ok(t),
        Err(e) => Err(e.to_string()),
    };
    let with_triple = |id: InequalityId, out: &mut Vec<CheckReport>, f: &dyn Fn(&ModularTriple) -> Result<Vec<CheckReport>, HardyError>| {
        if !cfg.wants(id) {
            return;
        }
        match &triple {
            Ok(t) => match f(t) {
                Ok(rs) => out.extend(rs),
                Err(e) => out.push(from_hardy(id, Err(e))),
            },
            Err(e) => out.push(failure_report(id, e.clone(), false)),
        }
    };
    if let Ok((d, big_d)) = exps {
        if d >= 2.0 && big_d > 2.0 {
            // the mixed-power-only form is a by-product of the alternative
            let gate = if cfg.wants(InequalityId::Alternative) { InequalityId::Alternative } else { InequalityId::MixedPower };
            with_triple(gate, &mut out, &|t| {
                let o = check_alternative(t, d, big_d, n)?;
                let mut v = vec![o.alternative];
                v.extend(o.mixed_power_only);
                Ok(v)
            });
            for &rho in &cfg.rhos {
                with_triple(InequalityId::Tradeoff, &mut out, &|t| {
                    let (a, b) = tradeoff_check(t, rho, big_d, n)?;
                    Ok(vec![a, b])
                });
            }
        }
        if big_d + n as f64 >= E + 2.0 {
            with_triple(InequalityId::Linear, &mut out, &|t| {
                let (c1, c2) = linear_constants(big_d, n)?;
                Ok(vec![check_linear(t, c1, c2)])
            });
        }
    }
    if is_quadratic(nf) {
        with_triple(InequalityId::QuadraticExact, &mut out, &|t| Ok(vec![check_quadratic_exact(t, n)]));
    }
    with_triple(InequalityId::ConvexModular, &mut out, &|t| Ok(vec![check_convex_case(t, nf, n)?]));
    if cfg.wants(InequalityId::ConvexNorm) {
        out.push(from_hardy(InequalityId::ConvexNorm, check_norm_form_radial(u, nf, n, &cfg.spec, &cfg.lux)));
    }
    let class = u.hypothesis_class().to_string();
    out.into_iter()
        .filter(|r| cfg.wants(r.inequality_id))
        .map(|r| {
            let mut r = r.with_subject(u.label(), nf.label(), n);
            r.hypothesis_class = Some(class.clone());
            r
        })
        .collect()
}

/// Every n-dimensional check for one `(u, M)`.
pub fn field_checks(u: &FieldFunction, nf: &NFunction, cfg: &SuiteConfig) -> Vec<CheckReport> {
    let n = u.dim();
    let mut forms = vec![NdForm::ConvexModular, NdForm::ConvexNorm];
    if let Ok((d, big_d)) = nf.exponents() {
        if d >= 2.0 && big_d > 2f64.max(E + 2.0 - n as f64) {
            forms.push(NdForm::MixedPower);
        }
    }
    forms
        .into_iter()
        .filter(|f| cfg.wants(f.id()))
        .map(|form| from_hardy(form.id(), check_nd(u, nf, form, &cfg.spec, &cfg.lux)).with_subject(u.label(), nf.label(), n))
        .collect()
}

/// The Hardy-type suite over the manifest.
pub fn hardy_suite(m: &CorpusManifest, cfg: &SuiteConfig) -> Vec<CheckReport> {
    let nfs = cfg.selected(m);
    let mut radial_tasks = Vec::new();
    let mut field_tasks = Vec::new();
    for nf in &nfs {
        for &n in &cfg.dims {
            for r in &m.radial_functions {
                radial_tasks.push((&r.function, &nf.nfunction, n));
            }
            for f in &m.field_functions {
                field_tasks.push((f, &nf.nfunction, n));
            }
        }
    }
    let mut reports: Vec<CheckReport> = radial_tasks.par_iter().flat_map_iter(|(u, nf, n)| radial_checks(u, nf, *n, cfg)).collect();
    let field_reports: Vec<CheckReport> = field_tasks
        .par_iter()
        .flat_map_iter(|(f, nf, n)| match f.instantiate(*n) {
            Ok(u) => field_checks(&u, nf, cfg),
            Err(e) => vec![CheckReport::trivial(InequalityId::NdConvexModular, format!("not applicable: {e}")).with_subject(
                f.decl.label(),
                nf.label(),
                *n,
            )],
        })
        .collect();
    reports.extend(field_reports);
    reports.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    reports
}

/// `lhs/rhs` maximized over a pointwise bound's parameter grid.
#[derive(Debug, Clone, Default)]
struct WorstRatioTally {
    checked: usize,
    violations: usize,
    worst_ratio: f64,
    worst_at: String,
}

impl WorstRatioTally {
    fn add(&mut self, lhs: f64, rhs: f64, holds: bool, at: impl FnOnce() -> String) {
        self.checked += 1;
        if !holds {
            self.violations += 1;
        }
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > self.worst_ratio || self.worst_at.is_empty() {
            self.worst_ratio = ratio;
            self.worst_at = at();
        }
    }

    fn report(self, id: InequalityId, nf: &NFunction) -> CheckReport {
        let mut r = CheckReport::compare(id, self.worst_ratio, 1.0, 0.0)
            .with_subject("parameter_grid", nf.label(), 1)
            .with_constant("checked", self.checked as f64)
            .with_constant("violations", self.violations as f64)
            .with_note(format!("largest lhs/rhs at {}", self.worst_at));
        if self.violations > 0 {
            r.verdict = Verdict::Fails;
        }
        r
    }
}

fn pointwise_grid() -> Vec<f64> {
    let mut g = vec![0.0, 1.0];
    g.extend(logspace(1e-3, 1e1, 50));
    g
}

/// Both pointwise bounds over their full grids for one N-function.
pub fn pointwise_checks(nf: &NFunction) -> Vec<CheckReport> {
    let grid = pointwise_grid();
    let mut out = Vec::new();
    if let Ok((d, big_d)) = nf.exponents() {
        if d >= 2.0 {
            let mut tally = WorstRatioTally::default();
            for alpha in [1u32, 2] {
                if big_d <= alpha as f64 {
                    continue;
                }
                for lambda in [1.0 / d, 1.0, 10.0] {
                    for &r in &grid {
                        for &s in &grid {
                            if let Ok(o) = check_split_bound(nf, r, s, lambda, alpha) {
                                tally.add(o.lhs, o.rhs, o.holds, || format!("r={r}, s={s}, lambda={lambda}, alpha={alpha}"));
                            }
                        }
                    }
                }
            }
            if tally.checked > 0 {
                out.push(tally.report(InequalityId::SplitBound, nf));
            }
        }
    }
    if nf.upper().is_ok() {
        let mut tally = WorstRatioTally::default();
        for eps in [1e-3, 0.1, 1.0] {
            for &a in &grid {
                for &b in &grid {
                    if let Ok(o) = check_young_bound(nf, a, b, eps) {
                        tally.add(o.lhs, o.rhs, o.holds, || format!("a={a}, b={b}, eps={eps}"));
                    }
                }
            }
        }
        out.push(tally.report(InequalityId::YoungBound, nf));
    }
    out
}

/// Certification records and pointwise bound checks for the selected N-functions.
pub fn certify_suite(m: &CorpusManifest, cfg: &SuiteConfig) -> (Vec<CheckReport>, Value) {
    let nfs = cfg.selected(m);
    let mut reports: Vec<CheckReport> = nfs.par_iter().flat_map_iter(|e| pointwise_checks(&e.nfunction)).collect();
    reports.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let certs: serde_json::Map<String, Value> = nfs
        .iter()
        .map(|e| {
            let (d, big_d) = e.nfunction.exponents().unwrap_or((f64::NAN, f64::NAN));
            (
                e.nfunction.label().to_string(),
                json!({
                    "fingerprint": e.fingerprint,
                    "d_est": crate::report::lossless::to_value(e.certification.d_est),
                    "upper_est": crate::report::lossless::to_value(e.certification.upper_est),
                    "delta2_est": crate::report::lossless::to_value(e.certification.delta2_est),
                    "convex": e.certification.convex,
                    "violation_count": e.certification.violation_count,
                    "grid_fingerprint": e.certification.grid_fingerprint,
                    "d_used": crate::report::lossless::to_value(d),
                    "upper_used": crate::report::lossless::to_value(big_d),
                }),
            )
        })
        .collect();
    (reports, json!({ "certifications": certs }))
}

/// Rows of one sharpness scan plus the closed-form-versus-quadrature check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SharpnessOutcome {
    pub p: f64,
    pub n: usize,
    pub c1_lower_bound: f64,
    pub stirling_ratio: f64,
    pub rows: Vec<ScanRow>,
    /// Largest relative gap between quadrature and closed-form modulars over the scan.
    pub max_quadrature_rel_err: f64,
}

pub fn sharpness_run(p: f64, n: usize, alphas: &[f64], spec: &QuadratureSpec) -> Result<SharpnessOutcome, FunctionalError> {
    let rows = if p > 2.0 {
        c2_infeasibility_scan(p, n, alphas)?
    } else {
        // the infeasibility scan needs p > 2; the moments are still reported
        alphas
            .iter()
            .map(|&alpha| {
                let t = extremal_moments(ExtremalParams::new(alpha, p, n)?);
                Ok(ScanRow { alpha, k: t.k.value, l: t.l.value, g: t.g.value, c1_req: f64::NAN })
            })
            .collect::<Result<Vec<_>, FunctionalError>>()?
    };
    let nf = NFunction::power(p);
    let mut worst: f64 = 0.0;
    for row in &rows {
        let params = ExtremalParams::new(row.alpha, p, n)?;
        let q = modular_triple_radial(&extremal_function(params)?, &nf, n, spec)?;
        for (a, b) in [(q.k.value, row.k), (q.l.value, row.l), (q.g.value, row.g)] {
            let rel = if b == 0.0 { a.abs() } else { (a / b - 1.0).abs() };
            worst = worst.max(rel);
        }
    }
    Ok(SharpnessOutcome {
        p,
        n,
        c1_lower_bound: c1_lower_bound(p, n),
        stirling_ratio: stirling_ratio(p, n),
        rows,
        max_quadrature_rel_err: worst,
    })
}

/// Row of the Maz'ya objective series CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveRow {
    pub pair: String,
    pub r: f64,
    pub inner: f64,
    pub objective: f64,
}

pub const MAZYA_P_GRID: [f64; 6] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
pub const MAZYA_N_GRID: [usize; 3] = [1, 2, 3];

fn transform_inputs() -> Vec<TransformInput> {
    vec![
        TransformInput::indicator(1.0, 2.0),
        TransformInput::indicator(0.5, 3.0),
        TransformInput::new("tent_0_2", 0.0, 2.0, |t| 1.0 - (t - 1.0).abs()).with_breakpoints(&[1.0]),
        TransformInput::new("decay_0_8", 0.0, 8.0, |t| t * (-t).exp()),
    ]
}

fn criterion_report(pair: &MeasurePair, n: usize, found: Finiteness, b: f64) -> CheckReport {
    let expected = if pair.p > n as f64 { Finiteness::Finite } else { Finiteness::Divergent };
    let mut r = CheckReport::compare(InequalityId::MazyaCriterion, b, b, 0.0)
        .with_subject(&pair.label, &pair.label, n)
        .with_constant("p", pair.p)
        .with_constant("q", pair.q)
        .with_constant("B", b);
    r.slack = 0.0;
    r.verdict = if found == expected { Verdict::Holds } else { Verdict::Fails };
    r.branch = Some(format!("{found:?}").to_lowercase());
    r.with_note(format!("expected {expected:?} from p > n", expected = expected).to_lowercase())
}

fn transform_reports(pair: &MeasurePair, b: f64, dim: usize, spec: &QuadratureSpec) -> Vec<CheckReport> {
    let c = b * factor_cap(pair.p, pair.q);
    transform_inputs()
        .iter()
        .map(|f| match check_hardy_transform(f, pair, c, spec) {
            Ok(r) => r.with_subject(&f.label, &pair.label, dim).with_constant("B", b),
            Err(e) => failure_report(InequalityId::HardyTransform, e.to_string(), matches!(e, MazyaError::Precondition(_))).with_subject(
                &f.label,
                &pair.label,
                dim,
            ),
        })
        .collect()
}

fn series_rows(pair: &MeasurePair, spec: &QuadratureSpec) -> Vec<ObjectiveRow> {
    match objective_series(pair, spec) {
        Ok(Objective::Sampled(s)) => {
            s.r.iter()
                .zip(&s.inner)
                .zip(&s.ln_objective)
                .map(|((&r, &inner), &lo)| ObjectiveRow { pair: pair.label.clone(), r, inner, objective: lo.exp() })
                .collect()
        }
        _ => Vec::new(),
    }
}

/// The Gaussian `(p, n)` grid followed by the classical pair.
pub fn default_pairs() -> Vec<PairDecl> {
    let mut out: Vec<PairDecl> =
        MAZYA_P_GRID.iter().flat_map(|&p| MAZYA_N_GRID.iter().map(move |&n| PairDecl::Gaussian { p, n })).collect();
    out.push(PairDecl::Classical);
    out
}

/// Characterization constants, Gaussian finiteness verdicts and transform checks.
pub fn mazya_suite(pairs: &[PairDecl], spec: &QuadratureSpec) -> Result<(Vec<CheckReport>, Value, Vec<ObjectiveRow>), MazyaError> {
    let outcomes: Vec<_> = pairs
        .par_iter()
        .map(|decl| -> Result<_, MazyaError> {
            let pair = decl.build()?;
            let est = mazya_b(&pair, spec)?;
            let found = if est.divergent { Finiteness::Divergent } else { Finiteness::Finite };
            let dim = match decl {
                PairDecl::Gaussian { n, .. } => *n,
                _ => 1,
            };
            let mut reports = Vec::new();
            if let PairDecl::Gaussian { n, .. } = decl {
                reports.push(criterion_report(&pair, *n, found, est.value));
            }
            if found == Finiteness::Finite {
                reports.extend(transform_reports(&pair, est.value, dim, spec));
            }
            let mut entry = json!({
                "pair": pair.label,
                "declaration": decl,
                "p": pair.p,
                "q": pair.q,
                "finiteness": found,
                "B": crate::report::lossless::to_value(est.value),
                "argmax_r": crate::report::lossless::to_value(est.argmax_r),
            });
            if found == Finiteness::Finite {
                entry["factor_cap"] = json!(factor_cap(pair.p, pair.q));
            }
            Ok((reports, entry, series_rows(&pair, spec)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut reports = Vec::new();
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for (r, e, s) in outcomes {
        reports.extend(r);
        entries.push(e);
        rows.extend(s);
    }
    reports.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok((reports, json!({ "pairs": entries }), rows))
}

/// A fitted pair together with what it was fitted on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LkFitRecord {
    pub form: String,
    pub nfunction: String,
    pub dim: usize,
    pub fit: LkFit,
}

/// One point of the θ-sweep CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaRow {
    pub nfunction: String,
    pub dim: usize,
    pub subject: String,
    pub theta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default)]
pub struct LkOutcome {
    pub reports: Vec<LkReport>,
    pub fits: Vec<LkFitRecord>,
    pub theta_rows: Vec<ThetaRow>,
    /// Hypothesis or numerical failures, by `(nfunction, dim, subject)`.
    pub skipped: Vec<String>,
}

fn lk_for(fields: &[FieldFunction], nf: &NFunction, n: usize, cfg: &SuiteConfig) -> Result<LkOutcome, LkError> {
    crate::landau_kolmogorov::require_quadratic_growth(nf)?;
    let mut out = LkOutcome::default();
    // θ = 1 modulars fix the modular constants
    let base: Vec<_> = fields.par_iter().map(|f| (f, lk_modulars(f, nf, 1.0, &cfg.spec))).collect();
    let mut samples = Vec::new();
    for (f, m) in &base {
        match m {
            Ok(m) if !(m.gradient.divergent || m.hessian.divergent || m.value.divergent) => samples.push(modular_sample(f.label(), m)),
            Ok(_) => out.skipped.push(format!("{} n={n} {}: divergent modular", nf.label(), f.label())),
            Err(e) => out.skipped.push(format!("{} n={n} {}: {e}", nf.label(), f.label())),
        }
    }
    let modular_fit = fit_constants(&samples, &cfg.fit_grid)?;
    let provenance = |fit: &LkFit| {
        let mut p = vec![format!("fitted over {} corpus members at theta=1", fit.samples)];
        if let Some(b) = &fit.binding_c1 {
            p.push(format!("C1 bound by {b}"));
        }
        if let Some(b) = &fit.binding_c2 {
            p.push(format!("C2 bound by {b}"));
        }
        p
    };
    let sweeps: Vec<Vec<Result<LkReport, LkError>>> = fields
        .par_iter()
        .map(|f| {
            cfg.theta_grid
                .iter()
                .map(|&theta| {
                    if theta == 1.0 {
                        additive_lk_from_hardy(f, nf, modular_fit.c1, modular_fit.c2, &cfg.spec)
                    } else {
                        lk_modulars(f, nf, theta, &cfg.spec).map(|m| lk_modular_report(f, nf, &m, modular_fit.c1, modular_fit.c2, theta))
                    }
                })
                .collect()
        })
        .collect();
    for (f, results) in fields.iter().zip(sweeps) {
        for r in results {
            match r {
                Ok(mut r) => {
                    r.provenance.extend(provenance(&modular_fit));
                    out.theta_rows.push(ThetaRow {
                        nfunction: nf.label().to_string(),
                        dim: n,
                        subject: f.label().to_string(),
                        theta: r.theta.unwrap_or(1.0),
                        lhs: r.lhs,
                        rhs: r.lhs + r.slack,
                        slack: r.slack,
                        verdict: r.verdict,
                    });
                    out.reports.push(r);
                }
                Err(e) => out.skipped.push(format!("{} n={n} {}: {e}", nf.label(), f.label())),
            }
        }
    }
    out.fits.push(LkFitRecord { form: "lk_modular".into(), nfunction: nf.label().to_string(), dim: n, fit: modular_fit });

    let norms: Vec<_> = fields.par_iter().map(|f| (f, lk_norms(f, nf, &cfg.spec, &cfg.lux))).collect();
    let mut ok = Vec::new();
    for (f, r) in norms {
        match r {
            Ok(v) => ok.push((f, v)),
            Err(e) => out.skipped.push(format!("{} n={n} {}: {e}", nf.label(), f.label())),
        }
    }
    let samples: Vec<_> = ok.iter().filter(|(_, v)| v.t > 0.0).map(|(_, v)| norms_sample(v)).collect();
    let norm_fit = fit_constants(&samples, &cfg.fit_grid)?;
    for (f, v) in &ok {
        out.reports.push(lk_norm_report(f, nf, v, &norm_fit));
    }
    out.fits.push(LkFitRecord { form: "lk_norm".into(), nfunction: nf.label().to_string(), dim: n, fit: norm_fit });
    Ok(out)
}

/// Fitted Landau–Kolmogorov constants, θ-sweeps and the norm form over the field corpus.
pub fn lk_suite(m: &CorpusManifest, cfg: &SuiteConfig) -> LkOutcome {
    let mut total = LkOutcome::default();
    for e in cfg.selected(m) {
        for &n in &cfg.dims {
            let fields: Vec<FieldFunction> = m.field_functions.iter().filter_map(|f| f.instantiate(n).ok()).collect();
            match lk_for(&fields, &e.nfunction, n, cfg) {
                Ok(o) => {
                    total.reports.extend(o.reports);
                    total.fits.extend(o.fits);
                    total.theta_rows.extend(o.theta_rows);
                    total.skipped.extend(o.skipped);
                }
                Err(err) => total.skipped.push(format!("{} n={n}: {err}", e.nfunction.label())),
            }
        }
    }
    total.reports.sort_by_key(|a| a.sort_key());
    total
}

/// Relative gap of the quantities the norm layer must respect, for one radial
/// member: homogeneity, `‖f‖ ≤ ∫M(|f|) + 1` and saturation `∫M(|f|/‖f‖) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormInvariants {
    pub norm: f64,
    pub modular: f64,
    pub homogeneity_rel_err: f64,
    pub bound_slack: f64,
    pub saturation_err: f64,
}

pub fn norm_invariants(
    u: &RadialTestFunction,
    q: Quantity,
    nf: &NFunction,
    n: usize,
    spec: &QuadratureSpec,
    lux: &LuxemburgSpec,
) -> Result<Option<NormInvariants>, FunctionalError> {
    let est = match luxemburg_norm_radial(u, q, nf, n, spec, lux) {
        Ok(e) => e,
        Err(FunctionalError::Divergent(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let modular = modular_radial(u, q, nf, n, spec)?;
    if modular.divergent {
        return Ok(None);
    }
    let mut homogeneity: f64 = 0.0;
    for c in [0.1, 2.0, 17.0] {
        let (lu, ldu) = (u.clone(), u.clone());
        let scaled = RadialTestFunction::new(format!("{}*{c}", u.label()), move |r| c * lu.u(r), move |r| c * ldu.du(r), u.support())
            .with_breakpoints(u.breakpoints());
        let s = luxemburg_norm_radial(&scaled, q, nf, n, spec, lux)?;
        let expect = c * est.value;
        if expect > 0.0 {
            homogeneity = homogeneity.max((s.value / expect - 1.0).abs());
        } else {
            homogeneity = homogeneity.max(s.value.abs());
        }
    }
    let saturation_err = if est.value > 0.0 { (est.modular - 1.0).abs() } else { 0.0 };
    Ok(Some(NormInvariants {
        norm: est.value,
        modular: modular.value,
        homogeneity_rel_err: homogeneity,
        bound_slack: modular.value + 1.0 - est.value,
        saturation_err,
    }))
}

/// Checks `K ≤ 2nL + 4G` (or its literal reading) over the radial corpus.
pub fn quadratic_case_checks(m: &CorpusManifest, dims: &[usize], literal: bool, spec: &QuadratureSpec) -> Vec<CheckReport> {
    let nf = NFunction::power(2.0);
    let tasks: Vec<_> = dims.iter().flat_map(|&n| m.radial_functions.iter().map(move |r| (n, r))).collect();
    let mut out: Vec<CheckReport> = tasks
        .par_iter()
        .map(|(n, r)| {
            let report = match modular_triple_radial(&r.function, &nf, *n, spec) {
                Ok(t) if literal => crate::hardy::check_quadratic_literal(&t, *n),
                Ok(t) => check_quadratic_exact(&t, *n),
                Err(e) => failure_report(InequalityId::QuadraticExact, e.to_string(), false),
            };
            report.with_subject(r.function.label(), nf.label(), *n)
        })
        .collect();
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out
}

/// Verdict helper shared with callers that build ad-hoc comparisons.
pub fn verdict_of(lhs: f64, rhs: f64, err: f64) -> Verdict {
    decide(lhs, rhs, err)
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Mazya(#[from] MazyaError),
}

/// Series written next to a report.
#[derive(Debug, Clone, Default)]
pub struct RunArtifacts {
    pub sharpness: Vec<SharpnessOutcome>,
    pub theta: Vec<ThetaRow>,
    pub objective: Vec<ObjectiveRow>,
}

/// An empty report for `subcommand`.
pub fn new_run_report(subcommand: &str, manifest_fingerprint: &str, spec: &QuadratureSpec) -> RunReport {
    RunReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: subcommand.to_string(),
        manifest_fingerprint: manifest_fingerprint.to_string(),
        members: BTreeMap::new(),
        quadrature: spec.clone(),
        checks: Vec::new(),
        lk_reports: Vec::new(),
        results: json!({}),
        summary: Default::default(),
        metadata: BTreeMap::new(),
    }
}

/// `kind:label → fingerprint` for the members a run touched.
pub fn used_members(m: &CorpusManifest, cfg: &SuiteConfig, radial: bool, fields: bool) -> BTreeMap<String, String> {
    m.members()
        .into_iter()
        .filter(|(k, _)| match k.split_once(':') {
            Some(("nfunction", label)) => cfg.nfunctions.as_ref().is_none_or(|n| n.iter().any(|x| x == label)),
            Some(("radial", _)) => radial,
            Some(("field", _)) => fields,
            _ => false,
        })
        .collect()
}

pub fn sharpness_value(o: &SharpnessOutcome) -> Value {
    json!({
        "p": o.p,
        "n": o.n,
        "c1_lower_bound": o.c1_lower_bound,
        "stirling_ratio": o.stirling_ratio,
        "max_quadrature_rel_err": o.max_quadrature_rel_err,
        "rows": o.rows.iter().map(|r| json!({
            "alpha": r.alpha,
            "K": r.k,
            "L": r.l,
            "G": r.g,
            "C1_req": crate::report::lossless::to_value(r.c1_req),
        })).collect::<Vec<_>>(),
    })
}

/// Powers scanned by the sharpness part of [`run_all`].
pub const ALL_SHARPNESS_POWERS: [f64; 2] = [3.0, 4.0];

/// Every suite over the manifest, assembled into one finalized report.
pub fn run_all(m: &CorpusManifest, cfg: &SuiteConfig, alphas: &[f64]) -> Result<(RunReport, RunArtifacts), SuiteError> {
    let mut report = new_run_report("all", &m.fingerprint, &cfg.spec);
    let mut artifacts = RunArtifacts::default();

    report.checks = hardy_suite(m, cfg);
    let (bounds, certs) = certify_suite(m, cfg);
    report.checks.extend(bounds);
    let (mazya, mazya_results, objective) = mazya_suite(&default_pairs(), &cfg.spec)?;
    report.checks.extend(mazya);
    artifacts.objective = objective;

    let mut scans = Vec::new();
    for p in ALL_SHARPNESS_POWERS {
        for &n in &cfg.dims {
            let o = sharpness_run(p, n, alphas, &cfg.spec)?;
            scans.push(sharpness_value(&o));
            artifacts.sharpness.push(o);
        }
    }

    let lk = lk_suite(m, cfg);
    report.lk_reports = lk.reports;
    artifacts.theta = lk.theta_rows;

    report.members = used_members(m, cfg, true, true);
    report.results = json!({
        "certify": certs,
        "sharpness": scans,
        "mazya": mazya_results,
        "lk": { "fits": lk.fits, "theta_grid": cfg.theta_grid, "skipped": lk.skipped },
    });
    report.finalize();
    Ok((report, artifacts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_default;
    fn tally(reports: &[CheckReport]) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for r in reports {
            *m.entry(format!("{}:{:?}", r.inequality_id.as_str(), r.verdict)).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn hardy_suite_has_no_failures() {
        let m = load_default().unwrap();
        let cfg = SuiteConfig::default();
        let t = std::time::Instant::now();
        let reports = hardy_suite(&m, &cfg);
        eprintln!("{} reports in {:?}: {:?}", reports.len(), t.elapsed(), tally(&reports));
        for r in reports.iter().filter(|r| r.verdict == Verdict::Fails) {
            eprintln!("{}", serde_json::to_string(r).unwrap());
        }
        assert!(reports.iter().all(|r| r.verdict != Verdict::Fails));
    }

    #[test]
    fn pointwise_grids_hold() {
        let m = load_default().unwrap();
        let t = std::time::Instant::now();
        let (reports, certs) = certify_suite(&m, &SuiteConfig::default());
        eprintln!("{:?} {:?}", t.elapsed(), tally(&reports));
        for r in &reports {
            eprintln!("{}", serde_json::to_string(r).unwrap());
        }
        assert_eq!(certs["certifications"].as_object().unwrap().len(), m.nfunctions.len());
        assert!(reports.iter().all(|r| r.verdict == Verdict::Holds));
    }

    #[test]
    fn mazya_grid_matches_dimension_rule() {
        let t = std::time::Instant::now();
        let (reports, pairs, rows) = mazya_suite(&default_pairs(), &QuadratureSpec::default()).unwrap();
        eprintln!("{:?} {:?} rows={}", t.elapsed(), tally(&reports), rows.len());
        eprintln!("{}", serde_json::to_string_pretty(&pairs).unwrap());
        for r in reports.iter().filter(|r| r.verdict != Verdict::Holds) {
            eprintln!("{}", serde_json::to_string(r).unwrap());
        }
        assert!(reports.iter().all(|r| r.verdict != Verdict::Fails));
    }

    #[test]
    fn lk_suite_runs() {
        let m = load_default().unwrap();
        let t = std::time::Instant::now();
        let out = lk_suite(&m, &SuiteConfig::default());
        eprintln!("{:?} reports={} rows={} skipped={:?}", t.elapsed(), out.reports.len(), out.theta_rows.len(), out.skipped);
        for f in &out.fits {
            eprintln!(
                "{} {} n={} c1={} c2={} {:?} {:?}",
                f.form, f.nfunction, f.dim, f.fit.c1, f.fit.c2, f.fit.binding_c1, f.fit.binding_c2
            );
        }
        let fails: Vec<_> = out.reports.iter().filter(|r| r.verdict == Verdict::Fails).collect();
        eprintln!("fails {}", fails.len());
        for r in fails.iter().take(5) {
            eprintln!("{}", serde_json::to_string(r).unwrap());
        }
    }

    #[test]
    fn sharpness_quadrature_agrees() {
        let spec = QuadratureSpec::default();
        for (p, n) in [(2.0, 1), (3.0, 2), (4.0, 3)] {
            let o = sharpness_run(p, n, &[0.0, 0.5, 0.9], &spec).unwrap();
            assert!(o.max_quadrature_rel_err < 1e-8, "{p} {n} {}", o.max_quadrature_rel_err);
        }
    }
}
