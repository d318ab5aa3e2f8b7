//! Node-level variational inequality: find `u ∈ K` with
//! `⟨w + S(u), v - u⟩ ≥ 0` for all `v ∈ K`, where `S(u) = M u + b` is monotone.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::fuzzy::Interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ViError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("VI solver did not converge: residual {residual:e} after {iters} iterations")]
    NotConverged { residual: f64, iters: usize },
    #[error("operator is not monotone: smallest eigenvalue of the symmetric part is {mu:e}")]
    NonMonotone { mu: f64 },
    #[error("invalid feasible set: {0}")]
    InvalidSet(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
}

/// Eigenvalue threshold below which an operator counts as non-monotone.
pub const MONOTONE_SLACK: f64 = 1e-10;

pub type ProjectionFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Closed convex feasible set.
#[derive(Clone)]
pub enum FeasibleSet {
    /// Product of intervals; infinite endpoints allowed.
    Box(Vec<Interval>),
    /// User-supplied Euclidean projection.
    Projection { dim: usize, project: Arc<ProjectionFn> },
}

impl fmt::Debug for FeasibleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibleSet::Box(b) => f.debug_tuple("Box").field(b).finish(),
            FeasibleSet::Projection { dim, .. } => f.debug_struct("Projection").field("dim", dim).finish_non_exhaustive(),
        }
    }
}

impl FeasibleSet {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, ViError> {
        if lo.len() != hi.len() {
            return Err(ViError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        let coords = lo
            .into_iter()
            .zip(hi)
            .map(|(l, h)| {
                if l.is_nan() || h.is_nan() || l > h || l == f64::INFINITY || h == f64::NEG_INFINITY {
                    Err(ViError::InvalidSet(format!("bad bounds [{l}, {h}]")))
                } else {
                    Ok(Interval { lo: l, hi: h })
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(FeasibleSet::Box(coords))
    }

    /// The nonnegative orthant of dimension `m`.
    pub fn orthant(m: usize) -> Self {
        FeasibleSet::Box(vec![
            Interval {
                lo: 0.0,
                hi: f64::INFINITY
            };
            m
        ])
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box(b) => b.len(),
            FeasibleSet::Projection { dim, .. } => *dim,
        }
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, ViError> {
        if x.len() != self.dim() {
            return Err(ViError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.project_unchecked(x))
    }

    fn project_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeasibleSet::Box(b) => x.iter().zip(b).map(|(&v, iv)| v.clamp(iv.lo, iv.hi)).collect(),
            FeasibleSet::Projection { project, .. } => project(x),
        }
    }

    fn project_into(&self, x: &mut [f64]) {
        match self {
            FeasibleSet::Box(b) => {
                for (v, iv) in x.iter_mut().zip(b) {
                    *v = v.clamp(iv.lo, iv.hi);
                }
            }
            FeasibleSet::Projection { project, .. } => {
                let p = project(x);
                x.copy_from_slice(&p);
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            FeasibleSet::Box(b) => x.iter().zip(b).all(|(&v, iv)| iv.lo <= v && v <= iv.hi),
            FeasibleSet::Projection { project, .. } => dist(x, &project(x)) <= 1e-12 * (1.0 + norm(x)),
        }
    }

    pub fn is_bounded(&self) -> Option<bool> {
        match self {
            FeasibleSet::Box(b) => Some(b.iter().all(|iv| iv.lo.is_finite() && iv.hi.is_finite())),
            FeasibleSet::Projection { .. } => None,
        }
    }
}

/// Affine operator `S(u) = M u + b` with cached spectral data.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineOperator {
    m: usize,
    /// Row-major `m × m`.
    matrix: Vec<f64>,
    offset: Vec<f64>,
    mu: f64,
    lipschitz: f64,
}

impl AffineOperator {
    pub fn new(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self, ViError> {
        let m = offset.len();
        if matrix.len() != m {
            return Err(ViError::DimensionMismatch {
                expected: m,
                found: matrix.len(),
            });
        }
        let mut flat = Vec::with_capacity(m * m);
        for row in &matrix {
            if row.len() != m {
                return Err(ViError::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        if flat.iter().chain(&offset).any(|v| !v.is_finite()) {
            return Err(ViError::InvalidOperator("entries must be finite".into()));
        }
        let mu = symmetric_part_min_eigenvalue(m, &flat);
        let lipschitz = spectral_norm(m, &flat);
        Ok(AffineOperator {
            m,
            matrix: flat,
            offset,
            mu,
            lipschitz,
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn matrix_row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.m..(i + 1) * self.m]
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Smallest eigenvalue of `(M + Mᵀ)/2`, the monotonicity modulus.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Spectral norm of `M` (power iteration).
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.apply_into(u, &mut out);
        out
    }

    fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.offset[i] + dot(self.matrix_row(i), u);
        }
    }

    fn shifted(&self, eps: f64) -> AffineOperator {
        let mut s = self.clone();
        for i in 0..self.m {
            s.matrix[i * self.m + i] += eps;
        }
        s.mu += eps;
        s.lipschitz += eps;
        s
    }
}

fn symmetric_part_min_eigenvalue(m: usize, a: &[f64]) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let sym = DMatrix::from_fn(m, m, |i, j| 0.5 * (a[i * m + j] + a[j * m + i]));
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest singular value of `A` via 100 power-iteration steps on `AᵀA`.
fn spectral_norm(m: usize, a: &[f64]) -> f64 {
    if m == 0 {
        return 0.0;
    }
    // Fixed, non-symmetric start vector so no eigenvector is missed by symmetry.
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut sigma = 0.0;
    for _ in 0..100 {
        let nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let av: Vec<f64> = (0..m).map(|i| dot(&a[i * m..(i + 1) * m], &v)).collect();
        let atav: Vec<f64> = (0..m).map(|j| (0..m).map(|i| a[i * m + j] * av[i]).sum()).collect();
        sigma = norm(&av);
        v = atav;
    }
    sigma
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// One node's VI: feasible set, constant term `w = Q(t, y(t))`, operator `S`.
#[derive(Debug, Clone)]
pub struct ViInstance<'a> {
    pub set: &'a FeasibleSet,
    pub w: &'a [f64],
    pub op: &'a AffineOperator,
}

impl<'a> ViInstance<'a> {
    pub fn new(set: &'a FeasibleSet, w: &'a [f64], op: &'a AffineOperator) -> Result<Self, ViError> {
        let m = op.dim();
        for found in [set.dim(), w.len()] {
            if found != m {
                return Err(ViError::DimensionMismatch { expected: m, found });
            }
        }
        Ok(ViInstance { set, w, op })
    }
}

#[derive(Debug, Clone)]
pub struct ViOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Tikhonov-regularize when the operator is merely monotone.
    pub regularize: bool,
    /// Starting point; defaults to the projection of 0 onto `K`.
    pub start: Option<Vec<f64>>,
}

impl Default for ViOptions {
    fn default() -> Self {
        ViOptions {
            tol: 1e-10,
            max_iter: 100_000,
            regularize: true,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViSolution {
    pub u: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Natural-map residual `‖u - P_K(u - (w + S(u)))‖`; zero iff `u` solves the VI.
pub fn vi_residual(inst: &ViInstance<'_>, u: &[f64]) -> Result<f64, ViError> {
    if u.len() != inst.op.dim() {
        return Err(ViError::DimensionMismatch {
            expected: inst.op.dim(),
            found: u.len(),
        });
    }
    let mut scratch = vec![0.0; u.len()];
    Ok(residual_with(inst.set, inst.w, inst.op, u, &mut scratch))
}

fn residual_with(set: &FeasibleSet, w: &[f64], op: &AffineOperator, u: &[f64], scratch: &mut [f64]) -> f64 {
    op.apply_into(u, scratch);
    for i in 0..u.len() {
        scratch[i] = u[i] - (w[i] + scratch[i]);
    }
    set.project_into(scratch);
    dist(u, scratch)
}

/// Solves the VI.
///
/// Strongly monotone operators (μ > 0) use the projected fixed-point map
/// `u ← P_K(u - γ(w + S(u)))` with `γ = μ/L²`. Merely monotone operators use
/// extragradient with `γ = 1/(2L)`; with `regularize` set, the solver follows
/// the Tikhonov path `S + εI`, ε ∈ {1e-2, 1e-4, 1e-6}, extrapolates to ε = 0
/// and polishes with extragradient on the original problem.
pub fn solve_vi(inst: &ViInstance<'_>, opts: &ViOptions) -> Result<ViSolution, ViError> {
    let m = inst.op.dim();
    let mu = inst.op.mu();
    if mu < -MONOTONE_SLACK {
        return Err(ViError::NonMonotone { mu });
    }
    let start = match &opts.start {
        Some(s) if s.len() != m => {
            return Err(ViError::DimensionMismatch {
                expected: m,
                found: s.len(),
            })
        }
        Some(s) => inst.set.project_unchecked(s),
        None => inst.set.project_unchecked(&vec![0.0; m]),
    };
    if mu > MONOTONE_SLACK {
        return projection_method(inst.set, inst.w, inst.op, start, opts.tol, opts.max_iter);
    }
    if !opts.regularize {
        return extragradient(inst.set, inst.w, inst.op, start, opts.tol, opts.max_iter);
    }

    let mut u = start;
    let mut path: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut spent = 0;
    let stage_budget = (opts.max_iter / 4).max(1);
    for eps in [1e-2, 1e-4, 1e-6] {
        let shifted = inst.op.shifted(eps);
        // A residual r leaves an error up to (1 + L)·r/ε, so tighten with ε.
        // Stages that stall keep their last iterate; only the final polish must converge.
        let stage_tol = (opts.tol * eps).max(f64::MIN_POSITIVE);
        let (sol, _) = extragradient_run(inst.set, inst.w, &shifted, u.clone(), stage_tol, stage_budget);
        spent += sol.iterations;
        u = sol.u.clone();
        path.push((eps, sol.u));
    }
    // u(ε) = u₀ + O(ε): linear extrapolation through the two smallest ε.
    let (e1, u1) = &path[1];
    let (e2, u2) = &path[2];
    let extrapolated: Vec<f64> = u2.iter().zip(u1).map(|(b, a)| b + (b - a) * e2 / (e1 - e2)).collect();
    let polished = extragradient(
        inst.set,
        inst.w,
        inst.op,
        inst.set.project_unchecked(&extrapolated),
        opts.tol,
        opts.max_iter,
    )?;
    Ok(ViSolution {
        iterations: spent + polished.iterations,
        ..polished
    })
}

fn projection_method(
    set: &FeasibleSet,
    w: &[f64],
    op: &AffineOperator,
    mut u: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<ViSolution, ViError> {
    let gamma = op.mu() / (op.lipschitz() * op.lipschitz());
    let m = u.len();
    let mut s = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    let mut residual = residual_with(set, w, op, &u, &mut scratch);
    for iter in 0..max_iter {
        if residual <= tol {
            return Ok(ViSolution {
                u,
                residual,
                iterations: iter,
            });
        }
        op.apply_into(&u, &mut s);
        for i in 0..m {
            u[i] -= gamma * (w[i] + s[i]);
        }
        set.project_into(&mut u);
        residual = residual_with(set, w, op, &u, &mut scratch);
    }
    if residual <= tol {
        return Ok(ViSolution {
            u,
            residual,
            iterations: max_iter,
        });
    }
    Err(ViError::NotConverged {
        residual,
        iters: max_iter,
    })
}

fn extragradient(
    set: &FeasibleSet,
    w: &[f64],
    op: &AffineOperator,
    u: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<ViSolution, ViError> {
    let (sol, converged) = extragradient_run(set, w, op, u, tol, max_iter);
    if converged {
        Ok(sol)
    } else {
        Err(ViError::NotConverged {
            residual: sol.residual,
            iters: sol.iterations,
        })
    }
}

/// Runs extragradient until the residual drops to `tol` or the budget is
/// spent, returning the last iterate either way.
fn extragradient_run(
    set: &FeasibleSet,
    w: &[f64],
    op: &AffineOperator,
    mut u: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> (ViSolution, bool) {
    // A vanishing operator is constant; any finite step size then works.
    let gamma = if op.lipschitz() > 1e-300 { 0.5 / op.lipschitz() } else { 1.0 };
    let m = u.len();
    let mut s = vec![0.0; m];
    let mut mid = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    let mut residual = residual_with(set, w, op, &u, &mut scratch);
    let mut iterations = 0;
    while residual > tol && iterations < max_iter {
        op.apply_into(&u, &mut s);
        for i in 0..m {
            mid[i] = u[i] - gamma * (w[i] + s[i]);
        }
        set.project_into(&mut mid);
        op.apply_into(&mid, &mut s);
        for i in 0..m {
            u[i] -= gamma * (w[i] + s[i]);
        }
        set.project_into(&mut u);
        residual = residual_with(set, w, op, &u, &mut scratch);
        iterations += 1;
    }
    (
        ViSolution {
            u,
            residual,
            iterations,
        },
        residual <= tol,
    )
}
