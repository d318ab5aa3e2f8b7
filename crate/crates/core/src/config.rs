//! JSON problem configuration: schema, loading with JSON-pointer error
//! paths, `key.path=value` overrides, and the built-in example.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::expr::Expression;
use crate::fuzzy::{FuzzyBoxField, FuzzyCoordinate, FuzzyNumber, Interval};
use crate::hypothesis::{ClaimedBounds, SamplingDomain};
use crate::mild::{ProblemSpec, SelectionPolicy, SolverConfig};
use crate::vi::{AffineOperator, FeasibleSet};

/// The built-in example problem.
pub const EXAMPLE_CONFIG: &str = include_str!("example_config.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{}: {message}", display_pointer(pointer))]
    Parse { pointer: String, message: String },
    #[error("{}: {message}", display_pointer(pointer))]
    Invalid { pointer: String, message: String },
    #[error("bad override `{0}`: {1}")]
    Override(String, String),
}

fn display_pointer(p: &str) -> &str {
    if p.is_empty() {
        "(root)"
    } else {
        p
    }
}

impl ConfigError {
    pub fn pointer(&self) -> Option<&str> {
        match self {
            ConfigError::Parse { pointer, .. } | ConfigError::Invalid { pointer, .. } => Some(pointer),
            ConfigError::Override(..) => None,
        }
    }
}

fn invalid(pointer: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        pointer: pointer.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FuzzyKind {
    Triangular,
    Trapezoidal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzyConfig {
    #[serde(rename = "type")]
    pub kind: FuzzyKind,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default = "one")]
    pub scale: String,
    #[serde(default = "zero")]
    pub offset: String,
}

fn one() -> String {
    "1".into()
}

fn zero() -> String {
    "0".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(rename = "M")]
    pub matrix: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// Feasible set; `null` bounds in a box mean unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetConfig {
    Box { lo: Vec<Option<f64>>, hi: Vec<Option<f64>> },
    Orthant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "N", default = "default_intervals")]
    pub intervals: usize,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_max_picard")]
    pub max_picard: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_vi_tol")]
    pub vi_tol: f64,
}

fn default_intervals() -> usize {
    SolverConfig::default().intervals
}
fn default_picard_tol() -> f64 {
    SolverConfig::default().picard_tol
}
fn default_max_picard() -> usize {
    SolverConfig::default().max_picard
}
fn default_damping() -> f64 {
    SolverConfig::default().damping
}
fn default_vi_tol() -> f64 {
    SolverConfig::default().vi_tol
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            intervals: d.intervals,
            picard_tol: d.picard_tol,
            max_picard: d.max_picard,
            damping: d.damping,
            vi_tol: d.vi_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    /// `[lo, hi]` per state coordinate; defaults to `[-10, 10]` each.
    #[serde(default)]
    pub y_box: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_t_samples")]
    pub t_samples: usize,
    #[serde(default = "default_y_samples")]
    pub y_samples: usize,
    #[serde(default = "default_pair_samples")]
    pub pair_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_t_samples() -> usize {
    64
}
fn default_y_samples() -> usize {
    4096
}
fn default_pair_samples() -> usize {
    100_000
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            y_box: None,
            t_samples: default_t_samples(),
            y_samples: default_y_samples(),
            pair_samples: default_pair_samples(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    pub lambda: Vec<f64>,
}

/// Problem configuration as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub q: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub fuzzy: Vec<FuzzyConfig>,
    pub g: Vec<Vec<String>>,
    #[serde(rename = "Q")]
    pub source: Vec<String>,
    #[serde(rename = "S")]
    pub operator: OperatorConfig,
    #[serde(rename = "K")]
    pub set: SetConfig,
    pub c1: Vec<String>,
    pub c2: Vec<String>,
    pub anchor_u0: Vec<f64>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionSection>,
    /// Constants asserted by the problem's author; sampled values above
    /// them are reported as deviations.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub claimed_bounds: BTreeMap<String, f64>,
}

/// Everything needed to run the solver and the verifier.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub solver: SolverConfig,
    pub sampling: SamplingDomain,
    pub policy: SelectionPolicy,
    pub claimed: ClaimedBounds,
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

impl ProblemConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            pointer: pointer_of(e.path()),
            message: e.into_inner().to_string(),
        })
    }

    pub fn from_value(value: Value) -> Result<Self, ConfigError> {
        serde_path_to_error::deserialize(value).map_err(|e| ConfigError::Parse {
            pointer: pointer_of(e.path()),
            message: e.into_inner().to_string(),
        })
    }

    pub fn example() -> Self {
        Self::from_json_str(EXAMPLE_CONFIG).expect("built-in example parses")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates and assembles the solver inputs.
    pub fn build(&self) -> Result<Problem, ConfigError> {
        let (n, m) = (self.n, self.m);
        if !(self.q > 1.0 && self.q <= 2.0) {
            return Err(invalid("/q", format!("q = {} must lie in (1,2]", self.q)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("/T", format!("T = {} must be positive", self.horizon)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("/alpha", format!("alpha = {} must lie in [0,1]", self.alpha)));
        }
        if n == 0 || m == 0 {
            return Err(invalid(if n == 0 { "/n" } else { "/m" }, "dimensions must be positive"));
        }
        let expr = |pointer: String, src: &str| Expression::parse(src, n).map_err(|e| invalid(pointer, e));
        let expect_len = |pointer: &str, found: usize, want: usize| {
            if found == want {
                Ok(())
            } else {
                Err(invalid(pointer, format!("expected {want} entries, found {found}")))
            }
        };

        expect_len("/fuzzy", self.fuzzy.len(), n)?;
        let coords = self
            .fuzzy
            .iter()
            .enumerate()
            .map(|(i, fc)| {
                let base = match (fc.kind, fc.d) {
                    (FuzzyKind::Triangular, None) => FuzzyNumber::triangular(fc.a, fc.b, fc.c),
                    (FuzzyKind::Trapezoidal, Some(d)) => FuzzyNumber::trapezoidal(fc.a, fc.b, fc.c, d),
                    (FuzzyKind::Triangular, Some(_)) => return Err(invalid(format!("/fuzzy/{i}/d"), "triangular numbers take a, b, c only")),
                    (FuzzyKind::Trapezoidal, None) => return Err(invalid(format!("/fuzzy/{i}"), "trapezoidal numbers need d")),
                }
                .map_err(|e| invalid(format!("/fuzzy/{i}"), e))?;
                Ok(FuzzyCoordinate {
                    base,
                    scale: expr(format!("/fuzzy/{i}/scale"), &fc.scale)?,
                    offset: expr(format!("/fuzzy/{i}/offset"), &fc.offset)?,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let field = FuzzyBoxField::new(coords).map_err(|e| invalid("/fuzzy", e))?;

        expect_len("/g", self.g.len(), n)?;
        let gain = self
            .g
            .iter()
            .enumerate()
            .map(|(i, row)| {
                expect_len(&format!("/g/{i}"), row.len(), m)?;
                row.iter().enumerate().map(|(j, s)| expr(format!("/g/{i}/{j}"), s)).collect()
            })
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        let list = |name: &str, items: &[String], want: usize| -> Result<Vec<Expression>, ConfigError> {
            expect_len(&format!("/{name}"), items.len(), want)?;
            items.iter().enumerate().map(|(i, s)| expr(format!("/{name}/{i}"), s)).collect()
        };
        let source = list("Q", &self.source, m)?;
        let left_boundary = list("c1", &self.c1, n)?;
        let right_boundary = list("c2", &self.c2, n)?;

        expect_len("/S/M", self.operator.matrix.len(), m)?;
        for (i, row) in self.operator.matrix.iter().enumerate() {
            expect_len(&format!("/S/M/{i}"), row.len(), m)?;
        }
        expect_len("/S/b", self.operator.b.len(), m)?;
        let operator = AffineOperator::new(self.operator.matrix.clone(), self.operator.b.clone()).map_err(|e| invalid("/S", e))?;

        let feasible = match &self.set {
            SetConfig::Orthant => FeasibleSet::orthant(m),
            SetConfig::Box { lo, hi } => {
                expect_len("/K/lo", lo.len(), m)?;
                expect_len("/K/hi", hi.len(), m)?;
                FeasibleSet::new_box(
                    lo.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect(),
                    hi.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
                )
                .map_err(|e| invalid("/K", e))?
            }
        };
        expect_len("/anchor_u0", self.anchor_u0.len(), m)?;
        if !feasible.contains(&self.anchor_u0) {
            return Err(invalid("/anchor_u0", "anchor is not in K"));
        }

        let spec = ProblemSpec {
            order: self.q,
            horizon: self.horizon,
            field,
            alpha: self.alpha,
            gain,
            source,
            operator,
            feasible,
            left_boundary,
            right_boundary,
            anchor: self.anchor_u0.clone(),
        };
        spec.validate().map_err(|e| invalid("", e))?;

        let s = &self.solver;
        let solver = SolverConfig {
            intervals: s.intervals,
            picard_tol: s.picard_tol,
            max_picard: s.max_picard,
            damping: s.damping,
            vi_tol: s.vi_tol,
        };
        solver.validate().map_err(|e| invalid("/solver", e))?;

        let y_box = match &self.sampling.y_box {
            Some(b) => {
                expect_len("/sampling/y_box", b.len(), n)?;
                b.iter().map(|[lo, hi]| Interval { lo: *lo, hi: *hi }).collect()
            }
            None => vec![Interval { lo: -10.0, hi: 10.0 }; n],
        };
        let sampling = SamplingDomain {
            y_box,
            t_samples: self.sampling.t_samples,
            y_samples: self.sampling.y_samples,
            pair_samples: self.sampling.pair_samples,
            seed: self.sampling.seed,
        };
        sampling.validate(n).map_err(|e| invalid("/sampling", e))?;

        let policy = match &self.selection {
            Some(sel) => {
                expect_len("/selection/lambda", sel.lambda.len(), n)?;
                SelectionPolicy::new(sel.lambda.clone()).map_err(|e| invalid("/selection/lambda", e))?
            }
            None => SelectionPolicy::midpoint(n),
        };

        Ok(Problem {
            spec,
            solver,
            sampling,
            policy,
            claimed: ClaimedBounds(self.claimed_bounds.clone()),
        })
    }
}

/// Applies `a.b.0.c=value` to a JSON document. The value is read as JSON
/// when it parses, otherwise as a string. Missing object keys are created.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let fail = |msg: &str| ConfigError::Override(assignment.to_string(), msg.to_string());
    let (path, raw) = assignment.split_once('=').ok_or_else(|| fail("expected key.path=value"))?;
    if path.is_empty() {
        return Err(fail("empty key path"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        let last = k + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| fail("array segments must be indices"))?;
                let slot = items.get_mut(idx).ok_or_else(|| fail("array index out of range"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(fail("path descends into a scalar")),
        };
    }
    unreachable!("loop returns on the last segment")
}

/// Parses `text`, applies overrides in order, and deserializes.
pub fn load_with_overrides(text: &str, overrides: &[String]) -> Result<ProblemConfig, ConfigError> {
    if overrides.is_empty() {
        return ProblemConfig::from_json_str(text);
    }
    let mut doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        pointer: String::new(),
        message: e.to_string(),
    })?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    ProblemConfig::from_value(doc)
}
