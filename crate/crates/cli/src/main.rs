use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use orlicz_gauss::corpus::{load_default, load_manifest_with, parse_manifest, CertificationCache, CorpusManifest, DEFAULT_MANIFEST};
use orlicz_gauss::landau_kolmogorov::{default_fit_grid, DEFAULT_THETAS};
use orlicz_gauss::mazya::{parse_pair_config, PairDecl};
use orlicz_gauss::nfunc::logspace;
use orlicz_gauss::quadrature::{Normalization, QuadratureSpec};
use orlicz_gauss::report::{InequalityId, RunReport};
use orlicz_gauss::sharpness::DEFAULT_ALPHAS;
use orlicz_gauss::suite::{
    certify_suite, default_pairs, hardy_suite, lk_suite, mazya_suite, new_run_report, run_all as run_all_suites, sharpness_run,
    sharpness_value, used_members, RunArtifacts, SuiteConfig,
};

const SEED_ENV: &str = "ORLICZ_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "orlicz",
    version,
    about = "Numerical checks of Orlicz-type Hardy and Landau-Kolmogorov inequalities for Gaussian measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hardy-type inequalities over the corpus.
    Hardy(HardyArgs),
    /// Extremal-family scan for power N-functions.
    Sharpness(SharpnessArgs),
    /// Maz'ya constants and two-measure Hardy transforms.
    Mazya(MazyaArgs),
    /// Landau-Kolmogorov inequalities with fitted constants.
    Lk(LkArgs),
    /// Growth certification and pointwise bound grids.
    Certify(CommonArgs),
    /// Every suite in one report.
    All(AllArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Corpus manifest (TOML); the built-in corpus when omitted.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Restrict to these N-function labels (repeatable or comma separated).
    #[arg(long = "nfunc", value_delimiter = ',')]
    nfunc: Vec<String>,
    /// Dimension, as `n` or an inclusive range `a..b`.
    #[arg(long, default_value = "1..3", value_parser = parse_dims)]
    dim: DimRange,
    /// Where to write the JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for the JSON report and CSV series.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the sphere designs; `ORLICZ_SEED` overrides it.
    #[arg(long)]
    seed: Option<u64>,
    /// Directions per sphere design.
    #[arg(long)]
    sphere_nodes: Option<usize>,
    #[arg(long, value_enum, default_value_t = NormArg::Unnormalized)]
    normalization: NormArg,
    /// JSON file caching growth certifications between runs.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HardyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Restrict to these inequality ids (repeatable or comma separated).
    #[arg(long = "form", value_delimiter = ',', value_parser = parse_form)]
    form: Vec<InequalityId>,
}

#[derive(Args, Debug)]
struct SharpnessArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 4.0)]
    p: f64,
    /// Dimension of the scan.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct MazyaArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// The Gaussian pair for `--p`, `--n` (the whole grid when both are omitted).
    #[arg(long, conflicts_with_all = ["classical", "pairs"])]
    gaussian: bool,
    /// The classical Hardy pair on the half line.
    #[arg(long, conflicts_with = "pairs")]
    classical: bool,
    /// TOML file with `[[pairs]]` declarations.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long, requires = "gaussian")]
    p: Option<f64>,
    #[arg(long, requires = "gaussian")]
    n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct LkArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Values of θ; the modular constants are fitted at θ = 1.
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    theta_grid: Option<Vec<f64>>,
    /// Candidate constants: a comma list or `log:lo:hi:count`.
    #[arg(long, value_parser = parse_grid)]
    fit_grid: Option<Grid>,
}

#[derive(Args, Debug)]
struct AllArgs {
    #[command(flatten)]
    lk: LkArgs,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    Unnormalized,
    Probability,
}

#[derive(Debug, Clone)]
struct DimRange(Vec<usize>);

#[derive(Debug, Clone)]
struct Grid(Vec<f64>);

fn parse_dims(s: &str) -> Result<DimRange, String> {
    let dims = match s.split_once("..") {
        Some((a, b)) => {
            let a: usize = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
            let b: usize = b.trim_start_matches('=').trim().parse().map_err(|e| format!("{b}: {e}"))?;
            (a..=b).collect::<Vec<_>>()
        }
        None => vec![s.trim().parse().map_err(|e| format!("{s}: {e}"))?],
    };
    if dims.is_empty() || dims.contains(&0) {
        return Err(format!("{s}: dimensions must be a non-empty range of positive integers"));
    }
    Ok(DimRange(dims))
}

fn parse_form(s: &str) -> Result<InequalityId, String> {
    InequalityId::parse(s).ok_or_else(|| {
        let known: Vec<&str> = InequalityId::ALL.iter().map(|i| i.as_str()).collect();
        format!("unknown form {s}; expected one of {}", known.join(", "))
    })
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} must be positive and finite")),
        Err(e) => Err(format!("{s}: {e}")),
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let values = if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(format!("{s}: expected log:lo:hi:count"));
        };
        let (lo, hi) = (parse_positive(lo)?, parse_positive(hi)?);
        let count: usize = count.parse().map_err(|e| format!("{count}: {e}"))?;
        if count < 2 || lo >= hi {
            return Err(format!("{s}: need lo < hi and at least two points"));
        }
        logspace(lo, hi, count)
    } else {
        s.split(',').map(parse_positive).collect::<Result<Vec<_>, _>>()?
    };
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("{s}: grid must be strictly increasing"));
    }
    Ok(Grid(values))
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("{SEED_ENV}={v} is not an unsigned integer"))?)),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{SEED_ENV}: {e}"),
    }
}

struct RunContext {
    manifest: CorpusManifest,
    cfg: SuiteConfig,
}

impl CommonArgs {
    fn spec(&self) -> Result<QuadratureSpec> {
        let mut spec = QuadratureSpec::default();
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(s) = seed_from_env()? {
            spec.seed = s;
        }
        if let Some(k) = self.sphere_nodes {
            spec.sphere_nodes = k;
        }
        spec.normalization = match self.normalization {
            NormArg::Unnormalized => Normalization::Unnormalized,
            NormArg::Probability => Normalization::Probability,
        };
        spec.validate().context("quadrature settings")?;
        Ok(spec)
    }

    fn context(&self) -> Result<RunContext> {
        let cache = match &self.cache {
            Some(p) if p.exists() => CertificationCache::load(p)?,
            _ => CertificationCache::new(),
        };
        let manifest = match &self.corpus {
            Some(p) => load_manifest_with(p, &cache)?,
            None if self.cache.is_some() => parse_manifest(DEFAULT_MANIFEST, "default corpus", &cache)?,
            None => load_default()?,
        };
        if let Some(p) = &self.cache {
            cache.save(p).with_context(|| format!("writing cache {}", p.display()))?;
        }
        for label in &self.nfunc {
            if manifest.nfunction(label).is_none() {
                bail!("unknown N-function {label}");
            }
        }
        let cfg = SuiteConfig {
            dims: self.dim.0.clone(),
            nfunctions: (!self.nfunc.is_empty()).then(|| self.nfunc.clone()),
            spec: self.spec()?,
            ..SuiteConfig::default()
        };
        Ok(RunContext { manifest, cfg })
    }
}

fn run_hardy(args: &HardyArgs) -> Result<(RunReport, RunArtifacts)> {
    let RunContext { manifest, mut cfg } = args.common.context()?;
    if !args.form.is_empty() {
        cfg.forms = Some(args.form.clone());
    }
    let mut report = new_run_report("hardy", &manifest.fingerprint, &cfg.spec);
    report.checks = hardy_suite(&manifest, &cfg);
    report.members = used_members(&manifest, &cfg, true, true);
    report.results = json!({ "dims": cfg.dims });
    Ok((report, RunArtifacts::default()))
}

fn run_sharpness(args: &SharpnessArgs) -> Result<(RunReport, RunArtifacts)> {
    let spec = args.common.spec()?;
    let alphas = args.alphas.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    let outcome = sharpness_run(args.p, args.n, &alphas, &spec)?;
    let mut report = new_run_report("sharpness", "", &spec);
    report.results = sharpness_value(&outcome);
    Ok((report, RunArtifacts { sharpness: vec![outcome], ..Default::default() }))
}

fn mazya_pairs(args: &MazyaArgs) -> Result<Vec<PairDecl>> {
    if let Some(path) = &args.pairs {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(parse_pair_config(&text)?);
    }
    if args.gaussian {
        return Ok(match (args.p, args.n) {
            (Some(p), Some(n)) => vec![PairDecl::Gaussian { p, n }],
            (None, None) => default_pairs().into_iter().filter(|d| matches!(d, PairDecl::Gaussian { .. })).collect(),
            _ => bail!("--gaussian needs both --p and --n, or neither for the whole grid"),
        });
    }
    if args.classical {
        return Ok(vec![PairDecl::Classical]);
    }
    Ok(default_pairs())
}

fn run_mazya(args: &MazyaArgs) -> Result<(RunReport, RunArtifacts)> {
    let spec = args.common.spec()?;
    let pairs = mazya_pairs(args)?;
    let (checks, results, objective) = mazya_suite(&pairs, &spec)?;
    let mut report = new_run_report("mazya", "", &spec);
    report.checks = checks;
    report.results = results;
    Ok((report, RunArtifacts { objective, ..Default::default() }))
}

fn lk_config(args: &LkArgs, cfg: &mut SuiteConfig) {
    cfg.theta_grid = args.theta_grid.clone().unwrap_or_else(|| DEFAULT_THETAS.to_vec());
    cfg.fit_grid = args.fit_grid.clone().map_or_else(default_fit_grid, |g| g.0);
}

fn run_lk(args: &LkArgs) -> Result<(RunReport, RunArtifacts)> {
    let RunContext { manifest, mut cfg } = args.common.context()?;
    lk_config(args, &mut cfg);
    let out = lk_suite(&manifest, &cfg);
    let mut report = new_run_report("lk", &manifest.fingerprint, &cfg.spec);
    report.lk_reports = out.reports;
    report.members = used_members(&manifest, &cfg, false, true);
    report.results = json!({
        "fits": out.fits,
        "theta_grid": cfg.theta_grid,
        "skipped": out.skipped,
    });
    Ok((report, RunArtifacts { theta: out.theta_rows, ..Default::default() }))
}

fn run_certify(args: &CommonArgs) -> Result<(RunReport, RunArtifacts)> {
    let RunContext { manifest, cfg } = args.context()?;
    let (checks, results) = certify_suite(&manifest, &cfg);
    let mut report = new_run_report("certify", &manifest.fingerprint, &cfg.spec);
    report.checks = checks;
    report.members = used_members(&manifest, &cfg, false, false);
    report.results = results;
    Ok((report, RunArtifacts::default()))
}

fn run_all(args: &AllArgs) -> Result<(RunReport, RunArtifacts)> {
    let RunContext { manifest, mut cfg } = args.lk.common.context()?;
    lk_config(&args.lk, &mut cfg);
    let alphas = args.alphas.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    Ok(run_all_suites(&manifest, &cfg, &alphas)?)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SharpnessCsvRow {
    alpha: f64,
    #[serde(rename = "K")]
    k: f64,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "G")]
    g: f64,
    #[serde(rename = "C1_req")]
    c1_req: f64,
}

fn write_artifacts(dir: &Path, a: &RunArtifacts) -> Result<()> {
    for o in &a.sharpness {
        let rows: Vec<_> = o.rows.iter().map(|r| SharpnessCsvRow { alpha: r.alpha, k: r.k, l: r.l, g: r.g, c1_req: r.c1_req }).collect();
        write_csv(&dir.join(format!("sharpness_p{}_n{}.csv", o.p, o.n)), &rows)?;
    }
    if !a.theta.is_empty() {
        write_csv(&dir.join("lk_theta_sweep.csv"), &a.theta)?;
    }
    if !a.objective.is_empty() {
        write_csv(&dir.join("mazya_objective.csv"), &a.objective)?;
    }
    Ok(())
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Hardy(a) => &a.common,
        Command::Sharpness(a) => &a.common,
        Command::Mazya(a) => &a.common,
        Command::Lk(a) => &a.common,
        Command::Certify(a) => a,
        Command::All(a) => &a.lk.common,
    }
}

fn run(cli: Cli) -> Result<bool> {
    let started = Instant::now();
    let (mut report, artifacts) = match &cli.command {
        Command::Hardy(a) => run_hardy(a)?,
        Command::Sharpness(a) => run_sharpness(a)?,
        Command::Mazya(a) => run_mazya(a)?,
        Command::Lk(a) => run_lk(a)?,
        Command::Certify(a) => run_certify(a)?,
        Command::All(a) => run_all(a)?,
    };
    report.finalize();
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    report.metadata.insert("finished_unix".into(), now.to_string());
    report.metadata.insert("elapsed_ms".into(), started.elapsed().as_millis().to_string());

    let args = common(&cli.command);
    let text = report.canonical();
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{}.json", report.subcommand));
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        write_artifacts(dir, &artifacts)?;
    }
    if let Some(path) = &args.report {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    if args.out.is_none() && args.report.is_none() {
        print!("{text}");
    }
    let s = report.summary;
    eprintln!("{}: holds={} fails={} indeterminate={} trivial={}", report.subcommand, s.holds, s.fails, s.indeterminate, s.trivial);
    Ok(s.fails == 0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
