//! Sampling-based estimates of the constants in the existence hypotheses,
//! the contraction constant ρ and the a-priori bound δ.
//!
//! Every estimate is a supremum (or infimum) over samples drawn from a
//! declared box `[0, T] × Y`. Sample `k` of a stream is generated from a
//! fixed position of a ChaCha keystream, so estimates do not depend on
//! thread scheduling and can only grow when the sample count grows.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::Expression;
use crate::fuzzy::{fuzzy_metric, Interval};
use crate::mild::ProblemSpec;
use crate::special::gamma;
use crate::vi::{dot, norm, AffineOperator, FeasibleSet, MONOTONE_SLACK};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypothesisError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("anchor {0:?} is not in the feasible set")]
    AnchorNotFeasible(Vec<f64>),
}

/// Region and budget for sampling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingDomain {
    pub y_box: Vec<Interval>,
    /// Draws of `t` for constants that depend on `t` only.
    pub t_samples: usize,
    /// Draws of `(t, y)` per pointwise supremum, and of directions for coercivity.
    pub y_samples: usize,
    /// Point pairs for the Lipschitz estimate.
    pub pair_samples: usize,
    pub seed: u64,
}

impl SamplingDomain {
    pub fn new(y_box: Vec<Interval>, seed: u64) -> Self {
        SamplingDomain {
            y_box,
            t_samples: 64,
            y_samples: 4096,
            pair_samples: 100_000,
            seed,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), HypothesisError> {
        if self.y_box.len() != n {
            return Err(HypothesisError::Domain(format!("y_box has {} coordinates, expected {n}", self.y_box.len())));
        }
        if let Some(iv) = self.y_box.iter().find(|iv| !(iv.lo < iv.hi && iv.lo.is_finite() && iv.hi.is_finite())) {
            return Err(HypothesisError::Domain(format!("y_box coordinate {iv:?} is degenerate or unbounded")));
        }
        if self.t_samples < 2 || self.y_samples < 2 || self.pair_samples < 2 {
            return Err(HypothesisError::Domain("sample counts must be at least 2".into()));
        }
        Ok(())
    }
}

/// Sample point at which a check failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub t: f64,
    pub y: Vec<f64>,
    pub detail: String,
}

/// Sampled suprema; `NaN` when sampling hit an evaluation failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEstimates {
    #[serde(rename = "L_F")]
    pub lipschitz_f: f64,
    pub p_sup: f64,
    pub eta_g: f64,
    #[serde(rename = "eta_Q")]
    pub eta_q: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    /// First evaluation failure per constant.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub failures: BTreeMap<String, Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityEstimate {
    pub monotone: bool,
    pub mu: f64,
    /// Extrapolated lower limit of `⟨S(u), u - u₀⟩ / ‖u‖²`; `None` when no
    /// sampled point of `K` reaches the radii (bounded `K`, condition vacuous).
    pub liminf: Option<f64>,
    /// Smallest raw quotient over all sampled radii.
    pub quotient_min: Option<f64>,
    pub coercive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// A sampled constant exceeding a value claimed in the problem description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub constant: String,
    pub claimed: f64,
    pub sampled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub sampled_over: String,
    pub domain: SamplingDomain,
    pub constants: ConstantEstimates,
    pub coercivity: CoercivityEstimate,
    #[serde(rename = "eta_S")]
    pub eta_s: f64,
    pub rho: f64,
    pub delta: Option<f64>,
    pub norms: BTreeMap<String, String>,
    pub verdicts: Vec<Verdict>,
    pub deviations: Vec<Deviation>,
    pub passed: bool,
}

/// `2·L_F·T^q / Γ(q+1)`.
pub fn compute_rho(lipschitz_f: f64, t_end: f64, q: f64) -> Result<f64, HypothesisError> {
    if !(lipschitz_f >= 0.0) || !(t_end > 0.0) || !(q > 0.0 && q <= 2.0) {
        return Err(HypothesisError::Domain(format!("rho needs L_F >= 0, T > 0, q in (0, 2]; got {lipschitz_f}, {t_end}, {q}")));
    }
    let g = gamma(q + 1.0).map_err(|e| HypothesisError::Domain(e.to_string()))?;
    Ok(2.0 * lipschitz_f * t_end.powf(q) / g)
}

/// `max(1/μ, ‖u₀‖ + ‖S(u₀)‖/μ)`: every VI solution then satisfies `‖u*‖ ≤ η_S (1 + ‖w‖)`.
pub fn compute_eta_s(op: &AffineOperator, anchor: &[f64], mu: f64) -> Result<f64, HypothesisError> {
    if !(mu > 0.0) {
        return Err(HypothesisError::Domain(format!("eta_S needs mu > 0, got {mu}")));
    }
    if anchor.len() != op.dim() {
        return Err(HypothesisError::Domain(format!("anchor has {} entries, expected {}", anchor.len(), op.dim())));
    }
    Ok((1.0 / mu).max(norm(anchor) + norm(&op.apply(anchor)) / mu))
}

/// Constants entering δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub m0: f64,
    pub eta_g: f64,
    pub eta_s: f64,
    pub eta_q: f64,
    pub m1: f64,
    pub m2: f64,
}

/// `[2(M₀ + η_g η_S (1 + η_Q)) T^q / Γ(q+1) + (M₁ + M₂) T] / (1 - ρ) + 1`.
pub fn compute_delta(c: &BoundConstants, t_end: f64, q: f64, rho: f64) -> Result<f64, HypothesisError> {
    if !(rho < 1.0) {
        return Err(HypothesisError::Domain(format!("delta needs rho < 1, got {rho}")));
    }
    if !(t_end > 0.0) {
        return Err(HypothesisError::Domain(format!("delta needs T > 0, got {t_end}")));
    }
    let g = gamma(q + 1.0).map_err(|e| HypothesisError::Domain(e.to_string()))?;
    let numerator = 2.0 * (c.m0 + c.eta_g * c.eta_s * (1.0 + c.eta_q)) * t_end.powf(q) / g + (c.m1 + c.m2) * t_end;
    Ok(numerator / (1.0 - rho) + 1.0)
}

const STREAM_POINTS: u64 = 0;
const STREAM_PAIRS: u64 = 1;
const STREAM_TIMES: u64 = 2;
const STREAM_DIRECTIONS: u64 = 3;

/// Function evaluations spent climbing from each sample.
const CLIMB_BUDGET: usize = 120;
/// Relative size of the perturbation in local Lipschitz pairs.
const LOCAL_PAIR_SCALE: f64 = 1e-3;
const MIN_PAIR_DISTANCE: f64 = 1e-6;
const COERCIVITY_RADII: [f64; 3] = [1e2, 1e3, 1e4];

fn sample_rng(seed: u64, stream: u64, index: usize, words_per_sample: u128) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(index as u128 * words_per_sample);
    rng
}

fn words_for(values: usize) -> u128 {
    // Two words per f64, with headroom for rejection inside gen_range.
    (4 * values + 16) as u128
}

type Eval<'a> = dyn Fn(f64, &[f64]) -> Result<f64, String> + Sync + 'a;

#[derive(Debug, Clone)]
struct Extremum {
    value: f64,
    index: usize,
}

/// Max over samples with ties broken by index, plus the earliest failure.
fn reduce(results: impl ParallelIterator<Item = (usize, Result<f64, Witness>)>) -> (Option<Extremum>, Option<(usize, Witness)>) {
    results
        .map(|(index, r)| match r {
            Ok(value) => (Some(Extremum { value, index }), None),
            Err(w) => (None, Some((index, w))),
        })
        .reduce(
            || (None, None),
            |(a, fa), (b, fb)| {
                let best = match (a, b) {
                    (Some(a), Some(b)) => Some(if b.value > a.value || (b.value == a.value && b.index < a.index) { b } else { a }),
                    (a, b) => a.or(b),
                };
                let fail = match (fa, fb) {
                    (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
                    (a, b) => a.or(b),
                };
                (best, fail)
            },
        )
}

struct Sampler<'a> {
    t_end: f64,
    dom: &'a SamplingDomain,
}

impl Sampler<'_> {
    fn point(&self, index: usize) -> (f64, Vec<f64>) {
        let n = self.dom.y_box.len();
        let mut rng = sample_rng(self.dom.seed, STREAM_POINTS, index, words_for(n + 1));
        let t = rng.gen_range(0.0..=self.t_end);
        let y = self.dom.y_box.iter().map(|iv| rng.gen_range(iv.lo..=iv.hi)).collect();
        (t, y)
    }

    fn time(&self, index: usize) -> f64 {
        let mut rng = sample_rng(self.dom.seed, STREAM_TIMES, index, words_for(1));
        rng.gen_range(0.0..=self.t_end)
    }

    /// Compass search maximizing `f` over `[0, T] × Y` from `(t, y)`;
    /// `y` stays fixed unless `move_y` is set.
    fn climb(&self, f: &Eval<'_>, t: f64, y: Vec<f64>, move_y: bool) -> Result<f64, Witness> {
        let mut bounds = vec![Interval { lo: 0.0, hi: self.t_end }];
        if move_y {
            bounds.extend(self.dom.y_box.iter().copied());
        }
        let mut x: Vec<f64> = std::iter::once(t).chain(y.iter().copied()).collect();
        let eval = |x: &[f64]| f(x[0], &x[1..]).map_err(|detail| Witness { t: x[0], y: x[1..].to_vec(), detail });
        let mut best = eval(&x)?;
        let mut steps: Vec<f64> = bounds.iter().map(|b| 1e-2 * b.width()).collect();
        let mut spent = 1;
        'outer: while spent < CLIMB_BUDGET {
            let mut improved = false;
            for i in 0..bounds.len() {
                for sign in [1.0, -1.0] {
                    if spent >= CLIMB_BUDGET {
                        break 'outer;
                    }
                    let mut cand = x.clone();
                    cand[i] = bounds[i].clamp(x[i] + sign * steps[i]);
                    if cand[i] == x[i] {
                        continue;
                    }
                    spent += 1;
                    let v = eval(&cand)?;
                    if v > best {
                        best = v;
                        x = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                steps.iter_mut().for_each(|s| *s *= 0.5);
                if steps.iter().zip(&bounds).all(|(s, b)| *s < 1e-13 * b.width().max(1.0)) {
                    break;
                }
            }
        }
        Ok(best)
    }

    /// Sampled supremum of `f` over `[0, T] × Y` with a local climb per sample.
    fn supremum(&self, f: &Eval<'_>) -> Result<f64, Witness> {
        let (best, fail) = reduce((0..self.dom.y_samples).into_par_iter().map(|k| {
            let (t, y) = self.point(k);
            (k, self.climb(f, t, y, true))
        }));
        finish(best, fail)
    }

    /// Sampled supremum over `t` only, with `y` fixed at the origin.
    fn supremum_in_t(&self, f: &Eval<'_>) -> Result<f64, Witness> {
        let zero = vec![0.0; self.dom.y_box.len()];
        let (best, fail) = reduce((0..self.dom.t_samples).into_par_iter().map(|k| (k, self.climb(f, self.time(k), zero.clone(), false))));
        finish(best, fail)
    }
}

fn finish(best: Option<Extremum>, fail: Option<(usize, Witness)>) -> Result<f64, Witness> {
    if let Some((_, w)) = fail {
        return Err(w);
    }
    Ok(best.map_or(0.0, |e| e.value))
}

fn eval_all(list: &[Expression], t: f64, y: &[f64]) -> Result<Vec<f64>, String> {
    list.iter().map(|e| e.eval(t, y).map_err(|err| err.to_string())).collect()
}

/// Samples `L_F`, `p`, `η_g`, `η_Q`, `M₀`, `M₁`, `M₂`.
pub fn estimate_constants(spec: &ProblemSpec, dom: &SamplingDomain) -> Result<ConstantEstimates, HypothesisError> {
    let n = spec.state_dim();
    dom.validate(n)?;
    let sampler = Sampler { t_end: spec.horizon, dom };
    let mut failures = BTreeMap::new();
    let mut record = |name: &str, r: Result<f64, Witness>| match r {
        Ok(v) => v,
        Err(w) => {
            failures.insert(name.to_string(), w);
            f64::NAN
        }
    };

    let fuzzy_norm = |t: f64, y: &[f64]| spec.field.at(t, y).map(|v| v.norm()).map_err(|e| e.to_string());
    let p_sup = record("p", sampler.supremum(&fuzzy_norm));
    let m0 = record("M0", sampler.supremum_in_t(&fuzzy_norm));
    let eta_g = record(
        "eta_g",
        sampler.supremum(&|t: f64, y: &[f64]| {
            let rows = spec.eval_gain(t, y).map_err(|e| e.to_string())?;
            Ok(rows.iter().flatten().map(|v| v.abs()).sum())
        }),
    );
    let eta_q = record(
        "eta_Q",
        sampler.supremum(&|t: f64, y: &[f64]| Ok(eval_all(&spec.source, t, y)?.iter().map(|v| v.abs()).sum())),
    );
    let m1 = record("M1", sampler.supremum(&|t: f64, y: &[f64]| Ok(norm(&eval_all(&spec.left_boundary, t, y)?))));
    let m2 = record("M2", sampler.supremum(&|t: f64, y: &[f64]| Ok(norm(&eval_all(&spec.right_boundary, t, y)?))));
    let lipschitz_f = record("L_F", lipschitz_estimate(spec, dom));

    Ok(ConstantEstimates {
        lipschitz_f,
        p_sup,
        eta_g,
        eta_q,
        m0,
        m1,
        m2,
        failures,
    })
}

fn lipschitz_estimate(spec: &ProblemSpec, dom: &SamplingDomain) -> Result<f64, Witness> {
    let n = dom.y_box.len();
    let (best, fail) = reduce((0..dom.pair_samples).into_par_iter().map(|k| {
        let mut rng = sample_rng(dom.seed, STREAM_PAIRS, k, words_for(2 * n + 1));
        let t = rng.gen_range(0.0..=spec.horizon);
        let y1: Vec<f64> = dom.y_box.iter().map(|iv| rng.gen_range(iv.lo..=iv.hi)).collect();
        // Alternate global pairs with nearby pairs that see the local slope.
        let y2: Vec<f64> = if k % 2 == 0 {
            dom.y_box.iter().map(|iv| rng.gen_range(iv.lo..=iv.hi)).collect()
        } else {
            dom.y_box
                .iter()
                .zip(&y1)
                .map(|(iv, v)| iv.clamp(v + LOCAL_PAIR_SCALE * iv.width() * rng.gen_range(-1.0..=1.0)))
                .collect()
        };
        let dist = y1.iter().zip(&y2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist < MIN_PAIR_DISTANCE {
            return (k, Ok(0.0));
        }
        let quotient = spec
            .field
            .at(t, &y1)
            .and_then(|a| spec.field.at(t, &y2).and_then(|b| fuzzy_metric(&a, &b)))
            .map(|d| d / dist)
            .map_err(|e| Witness {
                t,
                y: y1.clone(),
                detail: format!("{e} (pair partner {y2:?})"),
            });
        (k, quotient)
    }));
    finish(best, fail)
}

/// Monotonicity and coercivity of `S` on `K` relative to the anchor `u₀`.
pub fn check_coercivity(op: &AffineOperator, set: &FeasibleSet, anchor: &[f64], dom: &SamplingDomain) -> Result<CoercivityEstimate, HypothesisError> {
    if anchor.len() != op.dim() || set.dim() != op.dim() {
        return Err(HypothesisError::Domain(format!("operator dimension {} does not match set or anchor", op.dim())));
    }
    if !set.contains(anchor) {
        return Err(HypothesisError::AnchorNotFeasible(anchor.to_vec()));
    }
    let mu = op.mu();
    let monotone = mu >= -MONOTONE_SLACK;
    let m = op.dim();
    let quotient = |u: &[f64]| {
        let diff: Vec<f64> = u.iter().zip(anchor).map(|(a, b)| a - b).collect();
        dot(&op.apply(u), &diff) / dot(u, u)
    };
    let directions = dom.y_samples;
    let per_direction: Vec<Option<(f64, f64)>> = (0..directions)
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(dom.seed, STREAM_DIRECTIONS, k, words_for(m));
            let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let nv = norm(&v);
            if nv == 0.0 {
                return None;
            }
            let mut qs = Vec::with_capacity(COERCIVITY_RADII.len());
            for r in COERCIVITY_RADII {
                let target: Vec<f64> = v.iter().map(|x| r * x / nv).collect();
                let u = set.project(&target).ok()?;
                if norm(&u) < 0.5 * r {
                    return None;
                }
                qs.push(quotient(&u));
            }
            // q(r) = A + B/r + C/r²: remove the 1/r term between the two largest radii.
            let (q2, q3) = (qs[1], qs[2]);
            let limit = q3 + (q3 - q2) / 9.0;
            Some((limit, qs.iter().copied().fold(f64::INFINITY, f64::min)))
        })
        .collect();
    let kept: Vec<(f64, f64)> = per_direction.into_iter().flatten().collect();
    let (liminf, quotient_min) = if kept.is_empty() {
        (None, None)
    } else {
        (
            Some(kept.iter().map(|p| p.0).fold(f64::INFINITY, f64::min)),
            Some(kept.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)),
        )
    };
    let floor = 1e-9 * op.lipschitz().max(1.0);
    let coercive = liminf.is_none_or(|l| l > floor);
    Ok(CoercivityEstimate {
        monotone,
        mu,
        liminf,
        quotient_min,
        coercive,
    })
}

/// Values claimed for the constants by the problem's author, checked against
/// the sampled ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClaimedBounds(pub BTreeMap<String, f64>);

fn norm_conventions() -> BTreeMap<String, String> {
    [
        ("L_F", "fuzzy metric (max-norm Hausdorff, sup over alpha) per Euclidean distance in y"),
        ("p", "Euclidean"),
        ("eta_g", "1-norm (entrywise absolute sum)"),
        ("eta_Q", "1-norm"),
        ("M0", "Euclidean"),
        ("M1", "Euclidean"),
        ("M2", "Euclidean"),
        ("eta_S", "Euclidean"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Full hypothesis check. Failures are verdicts; only malformed inputs are errors.
pub fn verify(spec: &ProblemSpec, dom: &SamplingDomain, claimed: &ClaimedBounds) -> Result<HypothesisReport, HypothesisError> {
    spec.validate().map_err(|e| HypothesisError::Domain(e.to_string()))?;
    let constants = estimate_constants(spec, dom)?;
    let coercivity = match check_coercivity(&spec.operator, &spec.feasible, &spec.anchor, dom) {
        Ok(c) => c,
        Err(e) => return Err(e),
    };

    let finite_check = |name: &str, key: &str, value: f64, label: &str| -> Verdict {
        let witness = constants.failures.get(key).cloned();
        let passed = value.is_finite() && witness.is_none();
        Verdict {
            name: name.into(),
            passed,
            detail: if passed {
                format!("{label} = {value:.6e} (sampled over Y)")
            } else {
                format!("{label} could not be bounded on the samples")
            },
            witness,
        }
    };

    let mut verdicts = vec![finite_check("A1", "L_F", constants.lipschitz_f, "L_F")];
    let first_failure = constants.failures.values().next().cloned();
    verdicts.push(Verdict {
        name: "A2".into(),
        passed: first_failure.is_none(),
        detail: if first_failure.is_none() {
            "all expressions evaluated finite at every sample".into()
        } else {
            "an expression failed to evaluate".into()
        },
        witness: first_failure,
    });
    verdicts.push(finite_check("A3", "p", constants.p_sup, "p"));
    verdicts.push(finite_check("A4", "eta_g", constants.eta_g, "eta_g"));
    verdicts.push(finite_check("A5", "eta_Q", constants.eta_q, "eta_Q"));
    let a6 = coercivity.monotone && coercivity.coercive;
    verdicts.push(Verdict {
        name: "A6".into(),
        passed: a6,
        detail: format!(
            "mu = {:.6e} ({}), coercive liminf = {} ({})",
            coercivity.mu,
            if coercivity.monotone { "monotone" } else { "not monotone" },
            coercivity.liminf.map_or("vacuous (bounded K)".to_string(), |l| format!("{l:.6e}")),
            if coercivity.coercive { "coercive" } else { "not coercive" }
        ),
        witness: None,
    });
    let bounds_ok = [constants.m0, constants.m1, constants.m2].iter().all(|v| v.is_finite());
    verdicts.push(Verdict {
        name: "boundary_bounds".into(),
        passed: bounds_ok,
        detail: format!("M0 = {:.6e}, M1 = {:.6e}, M2 = {:.6e}", constants.m0, constants.m1, constants.m2),
        witness: None,
    });

    let rho = if constants.lipschitz_f.is_finite() {
        compute_rho(constants.lipschitz_f, spec.horizon, spec.order)?
    } else {
        f64::NAN
    };
    verdicts.push(Verdict {
        name: "contraction".into(),
        passed: rho < 1.0,
        detail: format!("rho = 2 L_F T^q / Gamma(q+1) = {rho:.6}"),
        witness: None,
    });

    let eta_s = compute_eta_s(&spec.operator, &spec.anchor, coercivity.mu).unwrap_or(f64::NAN);
    let delta = compute_delta(
        &BoundConstants {
            m0: constants.m0,
            eta_g: constants.eta_g,
            eta_s,
            eta_q: constants.eta_q,
            m1: constants.m1,
            m2: constants.m2,
        },
        spec.horizon,
        spec.order,
        rho,
    )
    .ok()
    .filter(|d| d.is_finite());

    let sampled = [
        ("L_F", constants.lipschitz_f),
        ("p", constants.p_sup),
        ("eta_g", constants.eta_g),
        ("eta_Q", constants.eta_q),
        ("M0", constants.m0),
        ("M1", constants.m1),
        ("M2", constants.m2),
    ];
    let deviations = claimed
        .0
        .iter()
        .filter_map(|(name, &claim)| {
            let (_, value) = sampled.iter().find(|(k, _)| k == name)?;
            (*value > claim * (1.0 + 1e-9) + 1e-12).then(|| Deviation {
                constant: name.clone(),
                claimed: claim,
                sampled: *value,
            })
        })
        .collect();

    let passed = verdicts.iter().all(|v| v.passed);
    Ok(HypothesisReport {
        sampled_over: format!("[0, {}] x {:?}", spec.horizon, dom.y_box.iter().map(|iv| [iv.lo, iv.hi]).collect::<Vec<_>>()),
        domain: dom.clone(),
        constants,
        coercivity,
        eta_s,
        rho,
        delta,
        norms: norm_conventions(),
        verdicts,
        deviations,
        passed,
    })
}
