//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a gating criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;

use orlicz_gauss::corpus::{load_default, CorpusManifest};
use orlicz_gauss::functionals::{modular_triple_radial, FieldFunction, LuxemburgSpec, ModularTriple, Quantity};
use orlicz_gauss::hardy::{check_convex_case, check_nd, mixed_power_rhs, NdForm};
use orlicz_gauss::landau_kolmogorov::{default_fit_grid, fit_constants, lk_modulars, modular_sample, FitSample};
use orlicz_gauss::mazya::{gaussian_hardy_pq, mazya_b, Finiteness, MeasurePair};
use orlicz_gauss::nfunc::{check_split_bound, NFunction};
use orlicz_gauss::quadrature::QuadratureSpec;
use orlicz_gauss::report::{CheckReport, InequalityId, Verdict};
use orlicz_gauss::sharpness::{c1_lower_bound, c2_infeasibility_scan, extremal_function, extremal_moments, stirling_ratio, ExtremalParams};
use orlicz_gauss::special::ln_gamma;
use orlicz_gauss::suite::{
    certify_suite, hardy_suite, lk_suite, norm_invariants, quadratic_case_checks, run_all, SuiteConfig, MAZYA_N_GRID, MAZYA_P_GRID,
};

struct Outcome {
    pass: bool,
    /// Whether a failure stops the run. Only criteria whose literal statement
    /// is known to be false are non-gating.
    gating: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, gating: true, detail }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a / b - 1.0).abs()
    }
}

fn count(reports: &[CheckReport], v: Verdict) -> usize {
    reports.iter().filter(|r| r.verdict == v).count()
}

/// Independent Γ-moment: `∫_0^∞ r^{n-1+k} e^{-c r²/2} dr = 2^{(m-2)/2} Γ(m/2) c^{-m/2}`, `m = n + k`.
fn gamma_moment(n: usize, k: f64, c: f64) -> f64 {
    let m = n as f64 + k;
    (0.5 * (m - 2.0) * 2f64.ln() + ln_gamma(0.5 * m) - 0.5 * m * c.ln()).exp()
}

fn criterion_1(spec: &QuadratureSpec) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for alpha in [0.0, 0.5, 0.9] {
        for p in [2.0, 3.0, 4.0] {
            for n in 1..=3 {
                let params = ExtremalParams::new(alpha, p, n).unwrap();
                let q = modular_triple_radial(&extremal_function(params).unwrap(), &NFunction::power(p), n, spec).unwrap();
                // K = ∫ r^p e^{αr²/2} dμ_n, L = ∫ e^{αr²/2} dμ_n, G = (α/p)^p K
                let c = 1.0 - alpha;
                let (k, l) = (gamma_moment(n, p, c), gamma_moment(n, 0.0, c));
                let g = (alpha / p).powf(p) * k;
                let closed = extremal_moments(params);
                for (num, exact, library) in
                    [(q.k.value, k, closed.k.value), (q.l.value, l, closed.l.value), (q.g.value, g, closed.g.value)]
                {
                    worst = worst.max(rel(num, exact)).max(rel(library, exact));
                }
                cases += 1;
            }
        }
    }
    Outcome::new(worst <= 1e-7, format!("closed-form moments: max rel err {worst:.2e} over {cases} cases (tol 1e-7)"))
}

fn criterion_2(m: &CorpusManifest, spec: &QuadratureSpec) -> Outcome {
    let dims: Vec<usize> = (1..=5).collect();
    let literal = quadratic_case_checks(m, &dims, true, spec);
    let corrected = quadratic_case_checks(m, &dims, false, spec);
    let literal_fails: Vec<String> =
        literal.iter().filter(|r| r.verdict == Verdict::Fails).map(|r| format!("{}@n={}", r.subject, r.dim)).collect();
    let corrected_ok = corrected.iter().all(|r| r.verdict != Verdict::Fails);

    let mut identity_err: f64 = 0.0;
    let mut tight_err: f64 = 0.0;
    for n in 1..=5 {
        for alpha in [0.0, 0.5, 0.9, 0.99] {
            let params = ExtremalParams::new(alpha, 2.0, n).unwrap();
            let t = modular_triple_radial(&extremal_function(params).unwrap(), &NFunction::power(2.0), n, spec).unwrap();
            let ratio = (t.k.value - 4.0 * t.g.value) / t.l.value;
            identity_err = identity_err.max(rel(ratio, n as f64 * (1.0 + alpha)));
            if alpha == 0.99 {
                tight_err = tight_err.max((ratio - 1.99 * n as f64).abs());
            }
        }
    }
    let supported = corrected_ok && identity_err <= 1e-8 && tight_err <= 1e-6;
    Outcome {
        pass: literal_fails.is_empty() && supported,
        gating: false,
        detail: format!(
            "quadratic case: literal K/4 <= L + (n/2)G fails on {} of {} corpus cases ({}); \
             the reading K <= 2nL + 4G matching C1=2n, C2=4 fails on {} of {}; \
             identity max rel err {identity_err:.2e} (tol 1e-8); |ratio - 1.99n| at alpha=0.99 max {tight_err:.2e} (tol 1e-6){}",
            literal_fails.len(),
            literal.len(),
            literal_fails.join(", "),
            count(&corrected, Verdict::Fails),
            corrected.len(),
            if supported { "" } else { " [CORRECTED FORM OR IDENTITY FAILED]" },
        ),
    }
}

/// Gate for criterion 2 when the literal form fails: the corrected form and
/// the extremal identity must still hold.
fn criterion_2_supported(o: &Outcome) -> bool {
    !o.detail.contains("[CORRECTED FORM OR IDENTITY FAILED]")
}

fn criterion_3(m: &CorpusManifest, spec: &QuadratureSpec) -> Outcome {
    let cfg = SuiteConfig {
        nfunctions: Some(vec!["r3".into(), "r4".into(), "r2log1p".into()]),
        forms: Some(vec![InequalityId::Linear]),
        spec: spec.clone(),
        ..SuiteConfig::default()
    };
    let reports = hardy_suite(m, &cfg);
    let indet_ok = reports.iter().filter(|r| r.verdict == Verdict::Indeterminate).all(|r| r.slack.abs() <= r.err_est);
    let fails = count(&reports, Verdict::Fails);
    let min_rel_slack =
        reports.iter().filter(|r| r.verdict == Verdict::Holds && r.rhs > 0.0).map(|r| r.slack / r.rhs).fold(f64::INFINITY, f64::min);
    Outcome::new(
        fails == 0 && indet_ok && !reports.is_empty(),
        format!(
            "linear explicit constants: {} checks with D+n >= e+2, fails {fails}, indeterminate {}, min slack/rhs {min_rel_slack:.3e}",
            reports.len(),
            count(&reports, Verdict::Indeterminate)
        ),
    )
}

fn criterion_4(hardy: &[CheckReport]) -> Outcome {
    let alt: Vec<_> = hardy.iter().filter(|r| r.inequality_id == InequalityId::Alternative).collect();
    let mixed: Vec<_> = hardy.iter().filter(|r| r.inequality_id == InequalityId::MixedPower).collect();
    let bad = |v: &[&CheckReport]| v.iter().filter(|r| r.verdict == Verdict::Fails || r.verdict == Verdict::Indeterminate).count();
    let mixed_in_regime =
        mixed.iter().all(|r| r.dim as f64 + r.constants_used.get("D_M").copied().unwrap_or(f64::NAN) >= std::f64::consts::E + 2.0);
    Outcome::new(
        !alt.is_empty() && !mixed.is_empty() && bad(&alt) == 0 && bad(&mixed) == 0 && mixed_in_regime,
        format!(
            "alternative: {} checks, {} not holding; mixed-power-only (D+n >= e+2): {} checks, {} not holding",
            alt.len(),
            bad(&alt),
            mixed.len(),
            bad(&mixed)
        ),
    )
}

fn criterion_5() -> Outcome {
    let rows = c2_infeasibility_scan(4.0, 1, &[0.9, 0.99, 0.999]).unwrap();
    let increasing = rows.windows(2).all(|w| w[1].c1_req > w[0].c1_req);
    let bound = c1_lower_bound(4.0, 1);
    let last = rows[2].c1_req;
    Outcome::new(
        increasing && last > 1e3 * bound,
        format!(
            "C2 = p^p infeasibility (p=4, n=1): C1_req = {:.4e}, {:.4e}, {:.4e}; at alpha=0.999 ratio to lower bound {:.1} (need > 1000)",
            rows[0].c1_req,
            rows[1].c1_req,
            last,
            last / bound
        ),
    )
}

fn criterion_6(spec: &QuadratureSpec) -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [2.0, 2.5, 3.0, 4.0] {
        for n in 1..=3 {
            let u = extremal_function(ExtremalParams::new(0.0, p, n).unwrap()).unwrap();
            let t = modular_triple_radial(&u, &NFunction::power(p), n, spec).unwrap();
            // 2^{p/2} Γ((n+p)/2) / Γ(n/2), computed here from the Γ-moments
            let expected = gamma_moment(n, p, 1.0) / gamma_moment(n, 0.0, 1.0);
            worst = worst.max(rel(t.k.value / t.l.value, expected)).max(rel(c1_lower_bound(p, n), expected));
        }
    }
    let stirling = (stirling_ratio(4.0, 10_000) - 1.0).abs();
    Outcome::new(
        worst <= 1e-8 && stirling <= 5e-4,
        format!("C1 lower bound: max rel err of K/L at alpha=0 {worst:.2e} (tol 1e-8); |stirling_ratio(4, 1e4) - 1| = {stirling:.2e} (tol 5e-4)"),
    )
}

fn criterion_7(spec: &QuadratureSpec) -> Outcome {
    let mut mismatches = Vec::new();
    let mut cases = 0;
    for p in MAZYA_P_GRID {
        for n in MAZYA_N_GRID {
            let (found, _) = gaussian_hardy_pq(p, n, spec).unwrap();
            let expected = if p > n as f64 { Finiteness::Finite } else { Finiteness::Divergent };
            if found != expected {
                mismatches.push(format!("(p={p}, n={n})"));
            }
            cases += 1;
        }
    }
    let b = mazya_b(&MeasurePair::classical(), spec).unwrap();
    let b_err = (b.value - 1.0).abs();
    Outcome::new(
        mismatches.is_empty() && !b.divergent && b_err <= 1e-6,
        format!(
            "Gaussian finiteness matches p > n on {}/{cases} grid points{}; classical B = {:.12} (|B-1| = {b_err:.1e}, tol 1e-6)",
            cases - mismatches.len(),
            if mismatches.is_empty() { String::new() } else { format!(" (mismatch {})", mismatches.join(" ")) },
            b.value
        ),
    )
}

fn criterion_8(m: &CorpusManifest) -> Outcome {
    let (reports, _) = certify_suite(m, &SuiteConfig::default());
    let violations: f64 = reports.iter().map(|r| r.constants_used["violations"]).sum();
    let checked: f64 = reports.iter().map(|r| r.constants_used["checked"]).sum();
    let r3 = NFunction::power(3.0);
    let mut eq_gap: f64 = 0.0;
    let mut eq_holds = true;
    for alpha in [1, 2] {
        let o = check_split_bound(&r3, 1.0, 1.0, 1.0 / 3.0, alpha).unwrap();
        eq_gap = eq_gap.max((o.rhs - o.lhs).abs());
        eq_holds &= o.holds;
    }
    let split = reports.iter().filter(|r| r.inequality_id == InequalityId::SplitBound).count();
    let young = reports.iter().filter(|r| r.inequality_id == InequalityId::YoungBound).count();
    Outcome::new(
        violations == 0.0 && eq_holds && eq_gap <= 1e-12 && split > 0 && young > 0,
        format!(
            "pointwise bounds: {checked} grid points over {split} splitting and {young} Young suites, {violations} violations; \
             equality case r^3, r=s=1, lambda=1/3 gap {eq_gap:.1e}"
        ),
    )
}

fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / ln_gamma(n as f64 / 2.0).exp()
}

fn criterion_9(m: &CorpusManifest, spec: &QuadratureSpec, lux: &LuxemburgSpec) -> Outcome {
    let mut compared = 0;
    let mut worst_excess: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut non_radial = 0;
    let mut non_radial_bad = 0;
    for e in &m.nfunctions {
        let nf = &e.nfunction;
        for n in 1..=3 {
            for f in &m.field_functions {
                let field: FieldFunction = f.instantiate(n).unwrap();
                let mut forms = vec![NdForm::ConvexModular];
                let mixed = matches!(nf.exponents(), Ok((d, big_d)) if d >= 2.0 && big_d > 2f64.max(std::f64::consts::E + 2.0 - n as f64));
                if mixed {
                    forms.push(NdForm::MixedPower);
                }
                for form in forms {
                    let nd = check_nd(&field, nf, form, spec, lux).unwrap();
                    let Some(profile) = field.radial_profile() else {
                        non_radial += 1;
                        non_radial_bad += usize::from(nd.verdict != Verdict::Holds);
                        continue;
                    };
                    let area = sphere_area(n);
                    let t: ModularTriple = modular_triple_radial(profile, nf, n, spec).unwrap().scaled(area);
                    let (rad_slack, rad_err) = match form {
                        NdForm::ConvexModular => {
                            let r = check_convex_case(&t, nf, n).unwrap();
                            (r.slack, r.err_est + r.tolerance)
                        }
                        _ => {
                            let big_d = nf.exponents().unwrap().1;
                            let rhs = mixed_power_rhs(t.g.value, t.l.value, big_d, n);
                            let err = t.k.err_est + rhs * (t.g.err_est / t.g.value.max(1e-300) + t.l.err_est / t.l.value.max(1e-300));
                            (rhs - t.k.value, err + 1e-12 * rhs.max(1.0))
                        }
                    };
                    let excess = (nd.slack - rad_slack).abs() - (nd.err_est + nd.tolerance + rad_err);
                    worst_excess = worst_excess.max(excess);
                    worst_rel = worst_rel.max(rel(nd.slack, rad_slack));
                    compared += 1;
                }
            }
        }
    }
    Outcome::new(
        compared > 0 && worst_excess <= 0.0 && non_radial > 0 && non_radial_bad == 0,
        format!(
            "n-dimensional: {compared} radial comparisons, max |slack_nd - slack_radial| beyond combined tolerance {:.2e} (max rel diff {worst_rel:.2e}); \
             non-radial convex/mixed-power checks {non_radial}, not holding {non_radial_bad}",
            worst_excess.max(0.0)
        ),
    )
}

fn criterion_10(m: &CorpusManifest, spec: &QuadratureSpec) -> Outcome {
    let cfg = SuiteConfig {
        nfunctions: Some(vec!["r2".into(), "r3".into()]),
        dims: vec![1, 2],
        theta_grid: vec![0.25, 0.5, 1.0],
        spec: spec.clone(),
        ..SuiteConfig::default()
    };
    let out = lk_suite(m, &cfg);
    let finite = out.fits.len() == 8 && out.fits.iter().all(|f| f.fit.c1.is_finite() && f.fit.c2.is_finite());
    let provenance = out.fits.iter().all(|f| f.fit.binding_c1.is_some() || f.fit.binding_c2.is_some());
    let theta: Vec<_> = out.reports.iter().filter(|r| r.theta.is_some()).collect();
    let theta_bad = theta.iter().filter(|r| r.verdict != Verdict::Holds).count();
    let norm_bad = out.reports.iter().filter(|r| r.theta.is_none() && r.verdict != Verdict::Holds && r.verdict != Verdict::Trivial).count();

    // enlarging the corpus never lowers the required C2 at any C1
    let grid = default_fit_grid();
    let mut monotone = true;
    for label in ["r2", "r3"] {
        let nf = &m.nfunction(label).unwrap().nfunction;
        for n in [1, 2] {
            let samples: Vec<FitSample> = m
                .field_functions
                .iter()
                .map(|f| {
                    let u = f.instantiate(n).unwrap();
                    modular_sample(u.label(), &lk_modulars(&u, nf, 1.0, spec).unwrap())
                })
                .collect();
            let mut prev: Option<Vec<(f64, f64)>> = None;
            for k in 1..=samples.len() {
                let env = fit_constants(&samples[..k], &grid).unwrap().envelope;
                if let Some(p) = &prev {
                    for (c1, c2) in p {
                        let now = env.iter().find(|(a, _)| a == c1).map(|(_, b)| *b).unwrap_or(f64::INFINITY);
                        monotone &= now >= *c2;
                    }
                    monotone &= env.len() <= p.len();
                }
                prev = Some(env);
            }
        }
    }
    let fits: Vec<String> = out
        .fits
        .iter()
        .filter(|f| f.form == "lk_modular")
        .map(|f| format!("{} n={}: ({:.3}, {:.3})", f.nfunction, f.dim, f.fit.c1, f.fit.c2))
        .collect();
    Outcome::new(
        finite && provenance && theta_bad == 0 && norm_bad == 0 && monotone && out.skipped.is_empty(),
        format!(
            "Landau-Kolmogorov: {} finite fits with binding members; theta-sweep {} checks, {theta_bad} not holding; norm form {norm_bad} not holding; \
             envelope monotone under corpus growth: {monotone}; modular fits {}",
            out.fits.len(),
            theta.len(),
            fits.join("; ")
        ),
    )
}

fn criterion_11(m: &CorpusManifest, spec: &QuadratureSpec, lux: &LuxemburgSpec) -> Outcome {
    let mut cases = 0;
    let mut skipped = 0;
    let (mut hom, mut sat, mut bound) = (0f64, 0f64, f64::INFINITY);
    for e in &m.nfunctions {
        for n in 1..=3 {
            for r in &m.radial_functions {
                for q in [Quantity::Weighted, Quantity::Value, Quantity::Slope] {
                    match norm_invariants(&r.function, q, &e.nfunction, n, spec, lux).unwrap() {
                        Some(inv) => {
                            hom = hom.max(inv.homogeneity_rel_err);
                            sat = sat.max(inv.saturation_err);
                            bound = bound.min(inv.bound_slack);
                            cases += 1;
                        }
                        None => skipped += 1,
                    }
                }
            }
        }
    }
    Outcome::new(
        hom <= 1e-8 && sat <= 1e-8 && bound >= -1e-8,
        format!(
            "norm layer over {cases} cases ({skipped} divergent modulars skipped): homogeneity {hom:.2e}, saturation {sat:.2e}, \
             min (modular + 1 - norm) {bound:.3e} (tol 1e-8)"
        ),
    )
}

fn criterion_12(m: &CorpusManifest, spec: &QuadratureSpec) -> Outcome {
    let cfg = SuiteConfig { spec: QuadratureSpec { seed: 20_240_601, ..spec.clone() }, ..SuiteConfig::default() };
    let alphas = orlicz_gauss::sharpness::DEFAULT_ALPHAS;
    let (a, _) = run_all(m, &cfg, &alphas).unwrap();
    let (b, _) = run_all(m, &cfg, &alphas).unwrap();
    let (ca, cb) = (a.canonical_without_metadata(), b.canonical_without_metadata());
    Outcome::new(
        ca == cb && a.summary.fails == 0,
        format!(
            "determinism: two `all` runs, {} bytes canonical each, identical: {}; summary holds={} fails={} indeterminate={} trivial={}",
            ca.len(),
            ca == cb,
            a.summary.holds,
            a.summary.fails,
            a.summary.indeterminate,
            a.summary.trivial
        ),
    )
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        // `cargo test -- --list` probes every test binary
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let m = load_default().expect("default corpus loads");
    let spec = QuadratureSpec::default();
    let lux = LuxemburgSpec::default();
    let hardy = hardy_suite(&m, &SuiteConfig::default());

    let run: Vec<(u32, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(|| criterion_1(&spec))),
        (2, Box::new(|| criterion_2(&m, &spec))),
        (3, Box::new(|| criterion_3(&m, &spec))),
        (4, Box::new(|| criterion_4(&hardy))),
        (5, Box::new(criterion_5)),
        (6, Box::new(|| criterion_6(&spec))),
        (7, Box::new(|| criterion_7(&spec))),
        (8, Box::new(|| criterion_8(&m))),
        (9, Box::new(|| criterion_9(&m, &spec, &lux))),
        (10, Box::new(|| criterion_10(&m, &spec))),
        (11, Box::new(|| criterion_11(&m, &spec, &lux))),
        (12, Box::new(|| criterion_12(&m, &spec))),
    ];
    let mut blocking = Vec::new();
    for (id, f) in run {
        let t = std::time::Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        let note = if o.pass || o.gating { "" } else { " (non-gating: the stated inequality is false as written)" };
        println!("{status} criterion {id:>2}: {}{note} [{:.1}s]", o.detail, t.elapsed().as_secs_f64());
        let blocked = if o.gating { !o.pass } else { id == 2 && !criterion_2_supported(&o) };
        if blocked {
            blocking.push(id);
        }
    }
    if blocking.is_empty() {
        println!("acceptance: all gating criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: gating criteria failed: {blocking:?}");
        ExitCode::FAILURE
    }
}
