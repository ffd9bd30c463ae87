//! Declarative corpus manifests.
//!
//! A manifest is a TOML document with a `schema_version` and three arrays of
//! tables: `nfunction`, `radial` and `field`. Every member has a `kind` and a
//! unique `label`; the accepted kinds and parameters are listed in
//! `docs/corpus.md`. Loading validates every member and re-certifies the
//! growth exponents of every N-function, so a loaded [`CorpusManifest`] is
//! frozen and can be shared freely between threads.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::functionals::{FieldFunction, FunctionalError, RadialTestFunction};
use crate::nfunc::{certify_convexity, certify_delta2, certify_growth, GridSpec, NFunction, NfuncError};
use crate::report::canonical_json;

pub const SCHEMA_VERSION: u32 = 1;

/// The manifest shipped with the crate.
pub const DEFAULT_MANIFEST: &str = include_str!("../data/default_corpus.toml");

/// Dimensions at which field members are validated on load.
pub const VALIDATION_DIMS: [usize; 3] = [1, 2, 3];

/// Slack allowed between a declared exponent and its certified estimate.
const EXPONENT_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    Schema { found: u32 },
    #[error("member '{member}': {reason}")]
    Member { member: String, reason: String },
}

impl CorpusError {
    fn member(member: &str, reason: impl std::fmt::Display) -> Self {
        CorpusError::Member { member: member.to_string(), reason: reason.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NfuncDecl {
    Power {
        label: String,
        p: f64,
    },
    PowerLog {
        label: String,
    },
    /// Log-log interpolated samples; `exponents = [d, D]` is optional and is
    /// re-certified when given.
    Table {
        label: String,
        points: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exponents: Option<[f64; 2]>,
    },
}

impl NfuncDecl {
    pub fn label(&self) -> &str {
        match self {
            NfuncDecl::Power { label, .. } | NfuncDecl::PowerLog { label } | NfuncDecl::Table { label, .. } => label,
        }
    }

    fn build(&self) -> Result<NFunction, NfuncError> {
        Ok(match self {
            NfuncDecl::Power { label, p } => {
                if !(*p > 1.0 && p.is_finite()) {
                    return Err(NfuncError::Precondition(format!("power p = {p} must exceed 1")));
                }
                NFunction::power(*p).with_label(label.clone())
            }
            NfuncDecl::PowerLog { label } => NFunction::power_log().with_label(label.clone()),
            NfuncDecl::Table { label, points, exponents } => {
                let nf = NFunction::table(label.clone(), points)?;
                match exponents {
                    Some([d, big_d]) => nf.with_exponents(*d, *big_d),
                    None => nf,
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialDecl {
    GaussianPower {
        label: String,
        alpha: f64,
        p: f64,
    },
    Bump {
        label: String,
        center: f64,
        width: f64,
        degree: f64,
    },
    PolyGauss {
        label: String,
        coefficients: Vec<f64>,
        rate: f64,
    },
    /// The linear taper on `[N, 2N]` of an earlier radial member.
    Truncated {
        label: String,
        inner: String,
        #[serde(rename = "N")]
        level: f64,
    },
    /// Piecewise-linear `u` on `r[0] = 0 < r[1] < …`, zero beyond; `du` has one
    /// slope per segment.
    Table {
        label: String,
        r: Vec<f64>,
        u: Vec<f64>,
        du: Vec<f64>,
    },
}

impl RadialDecl {
    pub fn label(&self) -> &str {
        match self {
            RadialDecl::GaussianPower { label, .. }
            | RadialDecl::Bump { label, .. }
            | RadialDecl::PolyGauss { label, .. }
            | RadialDecl::Truncated { label, .. }
            | RadialDecl::Table { label, .. } => label,
        }
    }

    fn build(&self, earlier: &BTreeMap<String, RadialTestFunction>) -> Result<RadialTestFunction, FunctionalError> {
        let f = match self {
            RadialDecl::GaussianPower { alpha, p, .. } => {
                if !(*alpha < 1.0 && *p > 0.0) {
                    return Err(FunctionalError::Precondition(format!("need alpha < 1 and p > 0 (got {alpha}, {p})")));
                }
                RadialTestFunction::gaussian_power(*alpha, *p)
            }
            RadialDecl::Bump { center, width, degree, .. } => RadialTestFunction::bump(*center, *width, *degree)?,
            RadialDecl::PolyGauss { coefficients, rate, .. } => RadialTestFunction::poly_gauss(coefficients, *rate)?,
            RadialDecl::Truncated { inner, level, .. } => earlier
                .get(inner)
                .ok_or_else(|| FunctionalError::Precondition(format!("inner member '{inner}' is not declared before this one")))?
                .truncate(*level)?,
            RadialDecl::Table { r, u, du, .. } => RadialTestFunction::table(r, u, du)?,
        };
        Ok(f.with_label(self.label()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldDecl {
    GaussBump {
        label: String,
        shift: f64,
        width: f64,
    },
    PolyGauss {
        label: String,
        coefficients: Vec<f64>,
        rate: f64,
        #[serde(default)]
        axis: usize,
    },
    SineGauss {
        label: String,
        k: f64,
        rate: f64,
    },
    LinearCutoff {
        label: String,
        radius: f64,
    },
}

impl FieldDecl {
    pub fn label(&self) -> &str {
        match self {
            FieldDecl::GaussBump { label, .. }
            | FieldDecl::PolyGauss { label, .. }
            | FieldDecl::SineGauss { label, .. }
            | FieldDecl::LinearCutoff { label, .. } => label,
        }
    }

    /// The member in dimension `n`.
    pub fn instantiate(&self, n: usize) -> Result<FieldFunction, FunctionalError> {
        let f = match self {
            FieldDecl::GaussBump { shift, width, .. } => FieldFunction::gauss_bump(n, *shift, *width)?,
            FieldDecl::PolyGauss { coefficients, rate, axis, .. } => FieldFunction::poly_gauss(n, coefficients, *rate, *axis)?,
            FieldDecl::SineGauss { k, rate, .. } => FieldFunction::sine_gauss(n, *k, *rate)?,
            FieldDecl::LinearCutoff { radius, .. } => FieldFunction::linear_cutoff(n, *radius)?,
        };
        Ok(f.with_label(self.label()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    schema_version: u32,
    #[serde(default)]
    nfunction: Vec<NfuncDecl>,
    #[serde(default)]
    radial: Vec<RadialDecl>,
    #[serde(default)]
    field: Vec<FieldDecl>,
}

/// What load-time certification established for one N-function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfuncCertification {
    pub d_est: f64,
    pub upper_est: f64,
    pub delta2_est: f64,
    pub convex: bool,
    pub violation_count: usize,
    pub grid_fingerprint: String,
}

#[derive(Debug, Clone)]
pub struct NfuncEntry {
    pub decl: NfuncDecl,
    pub nfunction: NFunction,
    pub fingerprint: String,
    pub certification: NfuncCertification,
}

#[derive(Debug, Clone)]
pub struct RadialEntry {
    pub decl: RadialDecl,
    pub function: RadialTestFunction,
    pub fingerprint: String,
}

#[derive(Debug, Clone)]
pub struct FieldEntry {
    pub decl: FieldDecl,
    pub fingerprint: String,
}

impl FieldEntry {
    pub fn instantiate(&self, n: usize) -> Result<FieldFunction, FunctionalError> {
        self.decl.instantiate(n)
    }
}

/// A loaded, validated and frozen manifest.
#[derive(Debug, Clone)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub nfunctions: Vec<NfuncEntry>,
    pub radial_functions: Vec<RadialEntry>,
    pub field_functions: Vec<FieldEntry>,
    pub fingerprint: String,
    pub grid: GridSpec,
}

impl CorpusManifest {
    pub fn nfunction(&self, label: &str) -> Option<&NfuncEntry> {
        self.nfunctions.iter().find(|e| e.nfunction.label() == label)
    }

    pub fn radial(&self, label: &str) -> Option<&RadialEntry> {
        self.radial_functions.iter().find(|e| e.function.label() == label)
    }

    pub fn field(&self, label: &str) -> Option<&FieldEntry> {
        self.field_functions.iter().find(|e| e.decl.label() == label)
    }

    /// `label → fingerprint` for every member, for embedding in reports.
    pub fn members(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for e in &self.nfunctions {
            out.insert(format!("nfunction:{}", e.decl.label()), e.fingerprint.clone());
        }
        for e in &self.radial_functions {
            out.insert(format!("radial:{}", e.decl.label()), e.fingerprint.clone());
        }
        for e in &self.field_functions {
            out.insert(format!("field:{}", e.decl.label()), e.fingerprint.clone());
        }
        out
    }
}

fn fingerprint_of<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_value(value).expect("declarations serialize");
    let mut h = Sha256::new();
    h.update(canonical_json(&json).as_bytes());
    hex::encode(h.finalize())
}

/// Certification results keyed by `(member fingerprint, grid fingerprint)`.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct CertificationCache {
    entries: Mutex<BTreeMap<String, NfuncCertification>>,
}

impl CertificationCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads a cache written by [`CertificationCache::save`]; a missing file
    /// gives an empty cache.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        match std::fs::read_to_string(path) {
            Ok(text) => {
                let entries: BTreeMap<String, NfuncCertification> = serde_json::from_str(&text)
                    .map_err(|e| CorpusError::Parse { origin: path.display().to_string(), message: e.to_string() })?;
                Ok(CertificationCache { entries: Mutex::new(entries) })
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(source) => Err(CorpusError::Io { path: path.display().to_string(), source }),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let entries = self.entries.lock().expect("cache lock");
        let text = serde_json::to_string_pretty(&*entries).expect("cache serializes");
        std::fs::write(path, text).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(member: &str, grid: &str) -> String {
        format!("{member}:{grid}")
    }

    fn get(&self, member: &str, grid: &str) -> Option<NfuncCertification> {
        self.entries.lock().expect("cache lock").get(&Self::key(member, grid)).cloned()
    }

    fn put(&self, member: &str, grid: &str, cert: NfuncCertification) {
        self.entries.lock().expect("cache lock").insert(Self::key(member, grid), cert);
    }
}

fn certify(nf: &NFunction, grid: &GridSpec) -> Result<NfuncCertification, NfuncError> {
    let growth = certify_growth(nf, grid)?;
    let delta2 = certify_delta2(nf, grid)?;
    let convex = certify_convexity(nf, &GridSpec::log(grid.r_min.max(1e-4), grid.r_max.min(1e4), 120)).is_ok();
    Ok(NfuncCertification {
        d_est: growth.d_est,
        upper_est: growth.upper_est,
        delta2_est: delta2.c_est,
        convex,
        violation_count: growth.violation_count + delta2.violations.len(),
        grid_fingerprint: growth.grid_fingerprint,
    })
}

fn check_unique<'a>(section: &str, labels: impl Iterator<Item = &'a str>) -> Result<(), CorpusError> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if l.is_empty() {
            return Err(CorpusError::member(&format!("{section}:<empty>"), "label must be non-empty"));
        }
        if !seen.insert(l) {
            return Err(CorpusError::member(l, format!("duplicate label in [[{section}]]")));
        }
    }
    Ok(())
}

fn load_nfunction(decl: &NfuncDecl, grid: &GridSpec, cache: &CertificationCache) -> Result<NfuncEntry, CorpusError> {
    let label = decl.label();
    let fingerprint = fingerprint_of(decl);
    let nf = decl.build().map_err(|e| CorpusError::member(label, e))?;
    let grid_fp = grid.fingerprint();
    let certification = match cache.get(&fingerprint, &grid_fp) {
        Some(c) => c,
        None => {
            let c = certify(&nf, grid).map_err(|e| CorpusError::member(label, e))?;
            cache.put(&fingerprint, &grid_fp, c.clone());
            c
        }
    };
    if certification.violation_count > 0 {
        return Err(CorpusError::member(
            label,
            format!("{} certification violations of the declared constants", certification.violation_count),
        ));
    }
    if !certification.convex {
        return Err(CorpusError::member(label, "midpoint convexity fails on the certification grid"));
    }
    // Pinned exponents must be consistent with the sampled log-slopes.
    if let Some(d) = nf.lower_exponent() {
        if certification.d_est < d - EXPONENT_SLACK {
            return Err(CorpusError::member(label, format!("declared d_M = {d} exceeds certified {}", certification.d_est)));
        }
    }
    if let Some(big_d) = nf.upper_exponent() {
        if certification.upper_est > big_d + EXPONENT_SLACK {
            return Err(CorpusError::member(label, format!("declared D_M = {big_d} is below certified {}", certification.upper_est)));
        }
    }
    let nfunction = if nf.lower_exponent().is_none() {
        nf.with_exponents(certification.d_est, certification.upper_est).with_delta2_const(certification.delta2_est)
    } else {
        nf
    };
    Ok(NfuncEntry { decl: decl.clone(), nfunction, fingerprint, certification })
}

/// Parses and validates manifest text. `origin` names the source in errors.
pub fn parse_manifest(text: &str, origin: &str, cache: &CertificationCache) -> Result<CorpusManifest, CorpusError> {
    let file: ManifestFile = toml::from_str(text).map_err(|e| CorpusError::Parse { origin: origin.to_string(), message: e.to_string() })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CorpusError::Schema { found: file.schema_version });
    }
    check_unique("nfunction", file.nfunction.iter().map(|d| d.label()))?;
    check_unique("radial", file.radial.iter().map(|d| d.label()))?;
    check_unique("field", file.field.iter().map(|d| d.label()))?;

    let grid = GridSpec::default();
    let nfunctions = file.nfunction.iter().map(|d| load_nfunction(d, &grid, cache)).collect::<Result<Vec<_>, _>>()?;

    let mut built = BTreeMap::new();
    let mut radial_functions = Vec::with_capacity(file.radial.len());
    for decl in &file.radial {
        let label = decl.label();
        let function = decl.build(&built).map_err(|e| CorpusError::member(label, e))?;
        function.validate().map_err(|e| CorpusError::member(label, e))?;
        built.insert(label.to_string(), function.clone());
        radial_functions.push(RadialEntry { decl: decl.clone(), function, fingerprint: fingerprint_of(decl) });
    }

    let mut field_functions = Vec::with_capacity(file.field.len());
    for decl in &file.field {
        let label = decl.label();
        for n in VALIDATION_DIMS {
            // poly_gauss axes beyond the dimension are legitimately absent
            if let FieldDecl::PolyGauss { axis, .. } = decl {
                if *axis >= n {
                    continue;
                }
            }
            let f = decl.instantiate(n).map_err(|e| CorpusError::member(label, format!("n = {n}: {e}")))?;
            f.validate().map_err(|e| CorpusError::member(label, format!("n = {n}: {e}")))?;
        }
        field_functions.push(FieldEntry { decl: decl.clone(), fingerprint: fingerprint_of(decl) });
    }

    Ok(CorpusManifest {
        schema_version: file.schema_version,
        fingerprint: fingerprint_of(&file),
        nfunctions,
        radial_functions,
        field_functions,
        grid,
    })
}

/// Loads and validates a manifest file.
pub fn load_manifest(path: &Path) -> Result<CorpusManifest, CorpusError> {
    load_manifest_with(path, &CertificationCache::new())
}

pub fn load_manifest_with(path: &Path, cache: &CertificationCache) -> Result<CorpusManifest, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    parse_manifest(&text, &path.display().to_string(), cache)
}

/// The manifest shipped with the crate.
pub fn load_default() -> Result<CorpusManifest, CorpusError> {
    parse_manifest(DEFAULT_MANIFEST, "default corpus", &CertificationCache::new())
}

/// The declarations as a JSON value, in the same shape as the TOML input.
pub fn declarations_json(m: &CorpusManifest) -> Value {
    serde_json::json!({
        "schema_version": m.schema_version,
        "nfunction": m.nfunctions.iter().map(|e| &e.decl).collect::<Vec<_>>(),
        "radial": m.radial_functions.iter().map(|e| &e.decl).collect::<Vec<_>>(),
        "field": m.field_functions.iter().map(|e| &e.decl).collect::<Vec<_>>(),
    })
}
