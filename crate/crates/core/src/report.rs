//! Check outcomes, run reports and canonical JSON.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

/// Floats that may be infinite or NaN are written as strings so that the
/// JSON stays lossless.
pub mod lossless {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&non_finite_name(*v))
        }
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float {other}"))),
            },
        }
    }

    /// A JSON value for `v` using the same encoding as [`serialize`].
    pub fn to_value(v: f64) -> serde_json::Value {
        if v.is_finite() {
            serde_json::json!(v)
        } else {
            serde_json::Value::String(non_finite_name(v))
        }
    }

    pub fn non_finite_name(v: f64) -> String {
        if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    }
}

mod lossless_map {
    use super::*;
    use serde::ser::SerializeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            if v.is_finite() {
                map.serialize_entry(k, v)?;
            } else {
                map.serialize_entry(k, &lossless::non_finite_name(*v))?;
            }
        }
        map.end()
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "lossless")] f64);
        let raw = BTreeMap::<String, W>::deserialize(d)?;
        Ok(raw.into_iter().map(|(k, v)| (k, v.0)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// The slack is negative but within the combined error estimate.
    Indeterminate,
    /// Nothing to check: zero function, zero denominator or an input outside
    /// the hypothesis class.
    Trivial,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Indeterminate => "indeterminate",
            Verdict::Trivial => "trivial",
        };
        f.write_str(s)
    }
}

/// Additive comparison tolerance `1e-12·max(1, |rhs|)`.
pub fn tolerance_for(rhs: f64) -> f64 {
    1e-12 * rhs.abs().max(1.0)
}

/// Verdict for `lhs ≤ rhs` given a combined error estimate.
pub fn decide(lhs: f64, rhs: f64, err_est: f64) -> Verdict {
    let slack = rhs - lhs;
    if slack >= -tolerance_for(rhs) {
        Verdict::Holds
    } else if slack.abs() <= err_est {
        Verdict::Indeterminate
    } else {
        Verdict::Fails
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    /// `K ≤ (D/d)^{D/(D−2)} L`
    ValueOnly,
    /// `K ≤ (½D G^{1/D} + (¼D² G^{2/D} + (D+n−2) L^{2/D})^{1/2})^D`
    MixedPower,
    /// value-only bound or mixed-power bound
    Alternative,
    /// `K ≤ C₁L + C₂G`
    Linear,
    /// convex case, modular form
    ConvexModular,
    /// convex case, norm form
    ConvexNorm,
    /// n-dimensional convex case, modular form
    NdConvexModular,
    /// n-dimensional convex case, norm form
    NdConvexNorm,
    /// n-dimensional mixed-power bound
    NdMixedPower,
    /// `K ≤ 2nL + 4G` for `M(r) = r²`
    QuadraticExact,
    /// linear form with the β/γ trade-off constants
    Tradeoff,
    /// Hardy transform with a measure pair
    HardyTransform,
    /// numerical finiteness of the characterization constant against the analytic criterion
    MazyaCriterion,
    /// pointwise splitting bound over its parameter grid
    SplitBound,
    /// pointwise Young-type bound over its parameter grid
    YoungBound,
}

impl InequalityId {
    pub const ALL: [InequalityId; 15] = [
        InequalityId::ValueOnly,
        InequalityId::MixedPower,
        InequalityId::Alternative,
        InequalityId::Linear,
        InequalityId::ConvexModular,
        InequalityId::ConvexNorm,
        InequalityId::NdConvexModular,
        InequalityId::NdConvexNorm,
        InequalityId::NdMixedPower,
        InequalityId::QuadraticExact,
        InequalityId::Tradeoff,
        InequalityId::HardyTransform,
        InequalityId::MazyaCriterion,
        InequalityId::SplitBound,
        InequalityId::YoungBound,
    ];

    pub fn parse(name: &str) -> Option<InequalityId> {
        InequalityId::ALL.into_iter().find(|id| id.as_str() == name)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            InequalityId::ValueOnly => "value_only",
            InequalityId::MixedPower => "mixed_power",
            InequalityId::Alternative => "alternative",
            InequalityId::Linear => "linear",
            InequalityId::ConvexModular => "convex_modular",
            InequalityId::ConvexNorm => "convex_norm",
            InequalityId::NdConvexModular => "nd_convex_modular",
            InequalityId::NdConvexNorm => "nd_convex_norm",
            InequalityId::NdMixedPower => "nd_mixed_power",
            InequalityId::QuadraticExact => "quadratic_exact",
            InequalityId::Tradeoff => "tradeoff",
            InequalityId::HardyTransform => "hardy_transform",
            InequalityId::MazyaCriterion => "mazya_criterion",
            InequalityId::SplitBound => "split_bound",
            InequalityId::YoungBound => "young_bound",
        }
    }
}

/// Outcome of one inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub inequality_id: InequalityId,
    /// Label of the test function.
    pub subject: String,
    /// Label of the N-function (or measure pair).
    pub nfunction: String,
    pub dim: usize,
    #[serde(with = "lossless")]
    pub lhs: f64,
    #[serde(with = "lossless")]
    pub rhs: f64,
    #[serde(with = "lossless")]
    pub slack: f64,
    #[serde(with = "lossless_map")]
    pub constants_used: BTreeMap<String, f64>,
    #[serde(with = "lossless")]
    pub tolerance: f64,
    /// Combined quadrature error of both sides.
    #[serde(with = "lossless")]
    pub err_est: f64,
    pub verdict: Verdict,
    /// Which disjunct held, for alternative-type checks.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub branch: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hypothesis_class: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl CheckReport {
    /// Builds a report and decides its verdict from `lhs ≤ rhs`.
    pub fn compare(id: InequalityId, lhs: f64, rhs: f64, err_est: f64) -> Self {
        CheckReport {
            inequality_id: id,
            subject: String::new(),
            nfunction: String::new(),
            dim: 0,
            lhs,
            rhs,
            slack: rhs - lhs,
            constants_used: BTreeMap::new(),
            tolerance: tolerance_for(rhs),
            err_est,
            verdict: decide(lhs, rhs, err_est),
            branch: None,
            hypothesis_class: None,
            notes: Vec::new(),
        }
    }

    pub fn trivial(id: InequalityId, note: impl Into<String>) -> Self {
        let mut r = CheckReport::compare(id, 0.0, 0.0, 0.0);
        r.verdict = Verdict::Trivial;
        r.notes.push(note.into());
        r
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants_used.insert(name.to_string(), value);
        self
    }

    pub fn with_subject(mut self, subject: &str, nfunction: &str, dim: usize) -> Self {
        self.subject = subject.to_string();
        self.nfunction = nfunction.to_string();
        self.dim = dim;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Key used to order reports deterministically.
    pub fn sort_key(&self) -> (&'static str, String, String, usize, String) {
        (self.inequality_id.as_str(), self.nfunction.clone(), self.subject.clone(), self.dim, self.branch.clone().unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LkForm {
    /// `∫M(|∇u|) ≤ C₁∫M(|∇²u|) + C₂∫M(|u|)`
    #[serde(rename = "lk_modular")]
    Modular,
    /// `‖∇u‖ ≤ C̃₁ (‖∇²u‖‖u‖)^{1/2} + C̃₂‖u‖`
    #[serde(rename = "lk_norm")]
    Norm,
    /// θ-family of the modular form
    #[serde(rename = "lk_modular_theta")]
    ModularTheta,
}

/// Outcome of a Landau–Kolmogorov-type check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LkReport {
    pub form: LkForm,
    pub subject: String,
    pub nfunction: String,
    pub dim: usize,
    #[serde(with = "lossless")]
    pub lhs: f64,
    #[serde(with = "lossless_map")]
    pub rhs_terms: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<f64>,
    #[serde(with = "lossless_map")]
    pub constants_used: BTreeMap<String, f64>,
    #[serde(with = "lossless")]
    pub slack: f64,
    #[serde(with = "lossless")]
    pub tolerance: f64,
    #[serde(with = "lossless")]
    pub err_est: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub provenance: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl LkReport {
    pub fn sort_key(&self) -> (LkForm, String, String, usize, u64) {
        (self.form, self.nfunction.clone(), self.subject.clone(), self.dim, self.theta.unwrap_or(0.0).to_bits())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub holds: usize,
    pub fails: usize,
    pub indeterminate: usize,
    pub trivial: usize,
}

impl Summary {
    pub fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Holds => self.holds += 1,
            Verdict::Fails => self.fails += 1,
            Verdict::Indeterminate => self.indeterminate += 1,
            Verdict::Trivial => self.trivial += 1,
        }
    }

    pub fn of<'a>(checks: impl IntoIterator<Item = &'a CheckReport>, lk: impl IntoIterator<Item = &'a LkReport>) -> Self {
        let mut s = Summary::default();
        checks.into_iter().for_each(|c| s.add(c.verdict));
        lk.into_iter().for_each(|c| s.add(c.verdict));
        s
    }
}

/// Everything one run produced. `metadata` holds wall-clock data and is
/// excluded from canonical comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub subcommand: String,
    pub manifest_fingerprint: String,
    /// Labels of every corpus member used, mapped to their fingerprints.
    pub members: BTreeMap<String, String>,
    pub quadrature: crate::quadrature::QuadratureSpec,
    pub checks: Vec<CheckReport>,
    pub lk_reports: Vec<LkReport>,
    /// Subcommand-specific results (scans, verdicts, fitted constants).
    pub results: Value,
    pub summary: Summary,
    pub metadata: BTreeMap<String, String>,
}

impl RunReport {
    /// Sorts checks and recomputes the summary.
    pub fn finalize(&mut self) {
        self.checks.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        self.lk_reports.sort_by_key(|a| a.sort_key());
        self.summary = Summary::of(&self.checks, &self.lk_reports);
    }

    /// Canonical JSON with `metadata` removed, for determinism comparisons.
    pub fn canonical_without_metadata(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(m) = &mut v {
            m.remove("metadata");
        }
        canonical_json(&v)
    }

    pub fn canonical(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("report serializes"))
    }
}

/// Sorted keys, two-space indentation and floats as `{:.16e}` (17 significant digits).
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize, out: &mut String| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(depth + 1, out);
                write_value(item, depth + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(depth, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(depth + 1, out);
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push_str(": ");
                write_value(&map[*k], depth + 1, out);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(depth, out);
            out.push('}');
        }
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("\"{}\"", lossless::non_finite_name(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        assert_eq!(decide(1.0, 1.0, 0.0), Verdict::Holds);
        assert_eq!(decide(1.0 + 1e-13, 1.0, 0.0), Verdict::Holds);
        assert_eq!(decide(1.1, 1.0, 0.2), Verdict::Indeterminate);
        assert_eq!(decide(1.5, 1.0, 0.2), Verdict::Fails);
    }

    #[test]
    fn canonical_json_is_sorted_and_fixed_width() {
        let v = serde_json::json!({"b": 0.1, "a": [1, 2.5], "c": {"z": null, "y": "s"}});
        let s = canonical_json(&v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("2.5000000000000000e0"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn non_finite_values_survive() {
        let r = CheckReport::compare(InequalityId::ValueOnly, f64::INFINITY, 1.0, 0.0);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"inf\""));
        let back: CheckReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.lhs, f64::INFINITY);
        assert_eq!(back.verdict, Verdict::Fails);
    }
}
