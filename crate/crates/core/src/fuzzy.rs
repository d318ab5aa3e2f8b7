//! α-level machinery for fuzzy numbers whose levels are axis-aligned boxes.
//!
//! A [`FuzzyBoxField`] describes a fuzzy mapping `F(t, y)` coordinate by
//! coordinate as `d_i(t, y) + e_i(t, y) · w_i`, where `w_i` is a triangular or
//! trapezoidal fuzzy number. Every level set is then a box, which keeps the
//! Hausdorff distance, selection and nearest-point clamping in closed form.
//! Hausdorff distances between boxes use the max-norm.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprError, Expression};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("level α = {0} lies outside [0, 1]")]
    Alpha(f64),
    #[error("selection weight {0} lies outside [-1, 1]")]
    Lambda(f64),
    #[error("fuzzy number parameters must be ordered a <= b <= c (<= d), got {0:?}")]
    Unordered(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Builds an interval from two endpoints in either order.
    pub fn sorted(a: f64, b: f64) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// Largest absolute value over the interval.
    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn hausdorff(&self, other: &Interval) -> f64 {
        (self.lo - other.lo).abs().max((self.hi - other.hi).abs())
    }
}

/// Axis-aligned box: the product of one interval per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    pub coords: Vec<Interval>,
}

impl IntervalBox {
    pub fn new(coords: Vec<Interval>) -> Self {
        IntervalBox { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.coords.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    /// Coordinate-wise inclusion `other ⊆ self`.
    pub fn contains_box(&self, other: &IntervalBox) -> bool {
        self.dim() == other.dim() && self.coords.iter().zip(&other.coords).all(|(a, b)| a.contains_interval(b))
    }

    /// Euclidean norm of the farthest point of the box from the origin.
    pub fn max_norm_point(&self) -> f64 {
        self.coords.iter().map(|iv| iv.magnitude().powi(2)).sum::<f64>().sqrt()
    }
}

/// Hausdorff distance between boxes under the max-norm.
pub fn hausdorff(a: &IntervalBox, b: &IntervalBox) -> Result<f64, FuzzyError> {
    if a.dim() != b.dim() {
        return Err(FuzzyError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.coords.iter().zip(&b.coords).map(|(x, y)| x.hausdorff(y)).fold(0.0, f64::max))
}

/// Point of `b` at relative position `λ_i ∈ [-1, 1]` along each coordinate:
/// `-1` is the lower corner, `0` the midpoint, `+1` the upper corner.
pub fn select(b: &IntervalBox, lambda: &[f64]) -> Result<Vec<f64>, FuzzyError> {
    if lambda.len() != b.dim() {
        return Err(FuzzyError::DimensionMismatch {
            expected: b.dim(),
            found: lambda.len(),
        });
    }
    b.coords
        .iter()
        .zip(lambda)
        .map(|(iv, &l)| {
            if !(-1.0..=1.0).contains(&l) {
                return Err(FuzzyError::Lambda(l));
            }
            // Evaluated from the nearer corner so the extremes are exact.
            let x = if l >= 0.0 {
                iv.hi - 0.5 * (1.0 - l) * iv.width()
            } else {
                iv.lo + 0.5 * (1.0 + l) * iv.width()
            };
            Ok(iv.clamp(x))
        })
        .collect()
}

/// Euclidean-nearest point of `b` to `x`.
pub fn clamp_to_box(x: &[f64], b: &IntervalBox) -> Result<Vec<f64>, FuzzyError> {
    if x.len() != b.dim() {
        return Err(FuzzyError::DimensionMismatch {
            expected: b.dim(),
            found: x.len(),
        });
    }
    Ok(x.iter().zip(&b.coords).map(|(&v, iv)| iv.clamp(v)).collect())
}

fn check_alpha(alpha: f64) -> Result<(), FuzzyError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(FuzzyError::Alpha(alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FuzzyNumber {
    Triangular { a: f64, b: f64, c: f64 },
    Trapezoidal { a: f64, b: f64, c: f64, d: f64 },
}

impl FuzzyNumber {
    pub fn triangular(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        let w = FuzzyNumber::Triangular { a, b, c };
        w.validate()?;
        Ok(w)
    }

    pub fn trapezoidal(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        let w = FuzzyNumber::Trapezoidal { a, b, c, d };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        let params: Vec<f64> = match *self {
            FuzzyNumber::Triangular { a, b, c } => vec![a, b, c],
            FuzzyNumber::Trapezoidal { a, b, c, d } => vec![a, b, c, d],
        };
        let ordered = params.iter().all(|v| v.is_finite()) && params.windows(2).all(|w| w[0] <= w[1]);
        if ordered {
            Ok(())
        } else {
            Err(FuzzyError::Unordered(params))
        }
    }

    /// The α-level set `[w]_α`; α = 0 gives the support.
    pub fn level(&self, alpha: f64) -> Result<Interval, FuzzyError> {
        check_alpha(alpha)?;
        Ok(self.level_unchecked(alpha))
    }

    fn level_unchecked(&self, alpha: f64) -> Interval {
        match *self {
            FuzzyNumber::Triangular { a, b, c } => Interval {
                lo: (a + alpha * (b - a)).min(b),
                hi: (c - alpha * (c - b)).max(b),
            },
            FuzzyNumber::Trapezoidal { a, b, c, d } => Interval {
                lo: (a + alpha * (b - a)).min(b),
                hi: (d - alpha * (d - c)).max(c),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyCoordinate {
    pub base: FuzzyNumber,
    pub scale: Expression,
    pub offset: Expression,
}

/// Fuzzy mapping `(t, y) ↦ F(t, y)` with box-shaped levels.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyBoxField {
    coords: Vec<FuzzyCoordinate>,
}

impl FuzzyBoxField {
    pub fn new(coords: Vec<FuzzyCoordinate>) -> Result<Self, FuzzyError> {
        let n = coords.len();
        for c in &coords {
            c.base.validate()?;
            for e in [&c.scale, &c.offset] {
                if e.dim() != n {
                    return Err(FuzzyError::DimensionMismatch {
                        expected: n,
                        found: e.dim(),
                    });
                }
            }
        }
        Ok(FuzzyBoxField { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[FuzzyCoordinate] {
        &self.coords
    }

    /// Evaluates scales and offsets at `(t, y)`, giving the fuzzy value `F(t, y)`.
    pub fn at(&self, t: f64, y: &[f64]) -> Result<FuzzyBoxValue, FuzzyError> {
        if y.len() != self.dim() {
            return Err(FuzzyError::DimensionMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        let coords = self
            .coords
            .iter()
            .map(|c| {
                Ok(ScaledFuzzy {
                    base: c.base,
                    scale: c.scale.eval(t, y)?,
                    offset: c.offset.eval(t, y)?,
                })
            })
            .collect::<Result<_, FuzzyError>>()?;
        Ok(FuzzyBoxValue { coords })
    }

    /// `[F(t, y)]_α` as a box.
    pub fn level(&self, t: f64, y: &[f64], alpha: f64) -> Result<IntervalBox, FuzzyError> {
        check_alpha(alpha)?;
        Ok(self.at(t, y)?.level_unchecked(alpha))
    }
}

/// `offset + scale · base` for a single coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledFuzzy {
    pub base: FuzzyNumber,
    pub scale: f64,
    pub offset: f64,
}

/// A fuzzy field evaluated at one `(t, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyBoxValue {
    pub coords: Vec<ScaledFuzzy>,
}

impl FuzzyBoxValue {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn level(&self, alpha: f64) -> Result<IntervalBox, FuzzyError> {
        check_alpha(alpha)?;
        Ok(self.level_unchecked(alpha))
    }

    fn level_unchecked(&self, alpha: f64) -> IntervalBox {
        IntervalBox::new(
            self.coords
                .iter()
                .map(|c| {
                    let iv = c.base.level_unchecked(alpha);
                    Interval::sorted(c.offset + c.scale * iv.lo, c.offset + c.scale * iv.hi)
                })
                .collect(),
        )
    }

    /// `‖F‖ = H(F, 0̃)`: largest Euclidean norm over the support.
    pub fn norm(&self) -> f64 {
        self.level_unchecked(0.0).max_norm_point()
    }
}

/// Number of uniformly spaced α-levels used by [`fuzzy_metric`].
pub const ALPHA_GRID: usize = 101;

/// Supremum over the α-grid of the level-wise Hausdorff distance.
pub fn fuzzy_metric(a: &FuzzyBoxValue, b: &FuzzyBoxValue) -> Result<f64, FuzzyError> {
    fuzzy_metric_with_argmax(a, b).map(|(d, _)| d)
}

/// Like [`fuzzy_metric`], also returning the α at which the sup is attained.
pub fn fuzzy_metric_with_argmax(a: &FuzzyBoxValue, b: &FuzzyBoxValue) -> Result<(f64, f64), FuzzyError> {
    if a.dim() != b.dim() {
        return Err(FuzzyError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let mut best = (0.0, 0.0);
    for k in 0..ALPHA_GRID {
        let alpha = k as f64 / (ALPHA_GRID - 1) as f64;
        let d = hausdorff(&a.level_unchecked(alpha), &b.level_unchecked(alpha))?;
        if d > best.0 {
            best = (d, alpha);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example_field() -> FuzzyBoxField {
        FuzzyBoxField::new(vec![FuzzyCoordinate {
            base: FuzzyNumber::triangular(-0.5, 0.0, 0.5).unwrap(),
            scale: Expression::parse("cos(y1)", 1).unwrap(),
            offset: Expression::constant(0.0, 1),
        }])
        .unwrap()
    }

    fn iv(lo: f64, hi: f64) -> IntervalBox {
        IntervalBox::new(vec![Interval { lo, hi }])
    }

    fn random_box(rng: &mut ChaCha8Rng, n: usize) -> IntervalBox {
        IntervalBox::new(
            (0..n)
                .map(|_| Interval::sorted(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)))
                .collect(),
        )
    }

    /// Directed sup-inf distance between two sampled sets under the max-norm.
    fn sampled_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let dist = |x: &Vec<f64>, y: &Vec<f64>| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let directed = |p: &[Vec<f64>], q: &[Vec<f64>]| {
            p.iter()
                .map(|x| q.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        directed(a, b).max(directed(b, a))
    }

    #[test]
    fn triangular_levels() {
        let w = FuzzyNumber::triangular(-0.5, 0.0, 0.5).unwrap();
        assert_eq!(w.level(0.0).unwrap(), Interval { lo: -0.5, hi: 0.5 });
        assert_eq!(w.level(1.0).unwrap(), Interval { lo: 0.0, hi: 0.0 });
        assert_eq!(w.level(0.5).unwrap(), Interval { lo: -0.25, hi: 0.25 });
        assert_eq!(w.level(1.5), Err(FuzzyError::Alpha(1.5)));
        assert_eq!(w.level(-0.1), Err(FuzzyError::Alpha(-0.1)));
    }

    #[test]
    fn trapezoidal_levels_and_validation() {
        let w = FuzzyNumber::trapezoidal(0.0, 1.0, 2.0, 4.0).unwrap();
        assert_eq!(w.level(0.5).unwrap(), Interval { lo: 0.5, hi: 3.0 });
        assert_eq!(w.level(1.0).unwrap(), Interval { lo: 1.0, hi: 2.0 });
        assert!(FuzzyNumber::triangular(1.0, 0.0, 2.0).is_err());
        assert!(FuzzyNumber::trapezoidal(0.0, 1.0, 3.0, 2.0).is_err());
    }

    #[test]
    fn example_field_levels() {
        let f = example_field();
        assert_eq!(f.level(0.0, &[0.0], 0.0).unwrap(), iv(-0.5, 0.5));
        for &(y, alpha) in &[(0.3, 0.2), (2.5, 0.7), (-4.0, 0.0), (1.0, 1.0)] {
            let b = f.level(0.1, &[y], alpha).unwrap();
            let half = 0.5 * (1.0 - alpha) * f64::cos(y).abs();
            assert!((b.coords[0].lo + half).abs() < 1e-15);
            assert!((b.coords[0].hi - half).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_scale_sorts_endpoints() {
        let f = FuzzyBoxField::new(vec![FuzzyCoordinate {
            base: FuzzyNumber::triangular(-0.5, 0.0, 0.5).unwrap(),
            scale: Expression::constant(-1.0, 1),
            offset: Expression::constant(0.0, 1),
        }])
        .unwrap();
        assert_eq!(f.level(0.0, &[0.0], 0.5).unwrap(), iv(-0.25, 0.25));
        let f = FuzzyBoxField::new(vec![FuzzyCoordinate {
            base: FuzzyNumber::triangular(0.0, 1.0, 3.0).unwrap(),
            scale: Expression::constant(-2.0, 1),
            offset: Expression::constant(1.0, 1),
        }])
        .unwrap();
        assert_eq!(f.level(0.0, &[0.0], 0.0).unwrap(), iv(-5.0, 1.0));
    }

    #[test]
    fn zero_scale_is_a_singleton() {
        let f = FuzzyBoxField::new(vec![FuzzyCoordinate {
            base: FuzzyNumber::triangular(-1.0, 0.0, 2.0).unwrap(),
            scale: Expression::constant(0.0, 1),
            offset: Expression::parse("t + 1", 1).unwrap(),
        }])
        .unwrap();
        assert_eq!(f.level(2.0, &[9.0], 0.0).unwrap(), iv(3.0, 3.0));
    }

    #[test]
    fn hausdorff_examples() {
        let a = iv(-0.5, 0.5);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let b = iv(-0.25, 0.25);
        assert_eq!(hausdorff(&a, &b).unwrap(), 0.25);
        let two = IntervalBox::new(vec![Interval { lo: 0.0, hi: 1.0 }; 2]);
        assert!(matches!(hausdorff(&a, &two), Err(FuzzyError::DimensionMismatch { .. })));
    }

    #[test]
    fn hausdorff_matches_dense_sampling_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_box(&mut rng, 1);
            let b = random_box(&mut rng, 1);
            let sample = |bx: &IntervalBox| -> Vec<Vec<f64>> {
                let iv = bx.coords[0];
                (0..=2000).map(|k| vec![iv.lo + iv.width() * k as f64 / 2000.0]).collect()
            };
            let oracle = sampled_hausdorff(&sample(&a), &sample(&b));
            let exact = hausdorff(&a, &b).unwrap();
            assert!((oracle - exact).abs() <= 6.0 / 2000.0, "{oracle} vs {exact}");
        }
        let oracle = sampled_hausdorff(
            &(0..=1000).map(|k| vec![-0.5 + k as f64 / 1000.0]).collect::<Vec<_>>(),
            &(0..=1000).map(|k| vec![-0.25 + 0.5 * k as f64 / 1000.0]).collect::<Vec<_>>(),
        );
        assert!((oracle - 0.25).abs() < 1e-12);
    }

    #[test]
    fn example_hausdorff_closed_form() {
        let f = example_field();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (y1, y2, alpha) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(0.0..1.0));
            let h = hausdorff(&f.level(0.0, &[y1], alpha).unwrap(), &f.level(0.0, &[y2], alpha).unwrap()).unwrap();
            let expected = 0.5 * (1.0 - alpha) * (y1.cos().abs() - y2.cos().abs()).abs();
            assert!((h - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn fuzzy_metric_example_attained_at_zero() {
        let f = example_field();
        let (a, b) = (f.at(0.2, &[0.4]).unwrap(), f.at(0.2, &[1.9]).unwrap());
        let (d, arg) = fuzzy_metric_with_argmax(&a, &b).unwrap();
        let expected = 0.5 * (0.4f64.cos().abs() - 1.9f64.cos().abs()).abs();
        assert!((d - expected).abs() < 1e-15);
        assert_eq!(arg, 0.0);
        assert_eq!(fuzzy_metric(&a, &a).unwrap(), 0.0);
        assert_eq!(fuzzy_metric(&a, &b).unwrap(), fuzzy_metric(&b, &a).unwrap());
    }

    #[test]
    fn example_field_is_half_lipschitz() {
        let f = example_field();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let (y1, y2) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let t = rng.gen_range(0.0..0.7);
            let d = fuzzy_metric(&f.at(t, &[y1]).unwrap(), &f.at(t, &[y2]).unwrap()).unwrap();
            assert!(d <= 0.5 * (y1 - y2).abs() + 1e-15);
        }
    }

    #[test]
    fn selection_rules() {
        let b = IntervalBox::new(vec![Interval { lo: -1.0, hi: 3.0 }, Interval { lo: 2.0, hi: 2.5 }]);
        assert_eq!(select(&b, &[0.0, 0.0]).unwrap(), vec![1.0, 2.25]);
        assert_eq!(select(&b, &[1.0, 1.0]).unwrap(), vec![3.0, 2.5]);
        assert_eq!(select(&b, &[-1.0, -1.0]).unwrap(), vec![-1.0, 2.0]);
        assert_eq!(select(&b, &[1.5, 0.0]), Err(FuzzyError::Lambda(1.5)));
        let f = example_field();
        assert_eq!(select(&f.level(0.0, &[0.0], 0.0).unwrap(), &[-1.0]).unwrap(), vec![-0.5]);
    }

    #[test]
    fn clamp_rules() {
        let b = iv(-0.5, 0.5);
        assert_eq!(clamp_to_box(&[0.2], &b).unwrap(), vec![0.2]);
        assert_eq!(clamp_to_box(&[0.7], &b).unwrap(), vec![0.5]);
        assert!(clamp_to_box(&[0.7, 1.0], &b).is_err());
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let n = rng.gen_range(1..4);
            let (a, b, c) = (random_box(&mut rng, n), random_box(&mut rng, n), random_box(&mut rng, n));
            let ab = hausdorff(&a, &b).unwrap();
            assert!(ab >= 0.0);
            assert_eq!(ab, hausdorff(&b, &a).unwrap());
            assert!(ab <= hausdorff(&a, &c).unwrap() + hausdorff(&c, &b).unwrap() + 1e-12);
            assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        }
    }

    #[test]
    fn clamp_respects_hausdorff_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..4);
            let (a, b) = (random_box(&mut rng, n), random_box(&mut rng, n));
            let lambda: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let x = select(&a, &lambda).unwrap();
            assert!(a.contains(&x));
            let c = clamp_to_box(&x, &b).unwrap();
            assert!(b.contains(&c));
            let moved = x.iter().zip(&c).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(moved <= hausdorff(&a, &b).unwrap() + 1e-15);
        }
    }

    #[test]
    fn levels_are_nested() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let mut p: Vec<f64> = (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect();
            p.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let w = if rng.gen_bool(0.5) {
                FuzzyNumber::triangular(p[0], p[1], p[3]).unwrap()
            } else {
                FuzzyNumber::trapezoidal(p[0], p[1], p[2], p[3]).unwrap()
            };
            let (a1, a2) = (rng.gen_range(0.0..=1.0f64), rng.gen_range(0.0..=1.0f64));
            let (lo, hi) = (a1.min(a2), a1.max(a2));
            assert!(w.level(lo).unwrap().contains_interval(&w.level(hi).unwrap()));
            let top = w.level(1.0).unwrap();
            assert!(top.lo <= top.hi);

            let value = FuzzyBoxValue {
                coords: vec![ScaledFuzzy {
                    base: w,
                    scale: rng.gen_range(-2.0..2.0),
                    offset: rng.gen_range(-1.0..1.0),
                }],
            };
            assert!(value.level(lo).unwrap().contains_box(&value.level(hi).unwrap()));
        }
    }
}
