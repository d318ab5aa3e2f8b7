//! Mild-solution operator and the damped Picard loop.
//!
//! For a state `y` the operator returns
//!
//! ```text
//! y(t) = I^q r(t) - (t/T)·I^q r(T) + (t/T)·∫₀ᵀ c₂(τ, y) dτ + (1 - t/T)·∫₀ᵀ c₁(τ, y) dτ
//! ```
//!
//! with `r = f + g(t, y)·u`, `f` a selection of `[F(t, y)]_α` and `u(t)` the
//! solution of the node VI with constant term `Q(t, y(t))`. The `f` part is
//! [`MildOperator::phi_part`], everything else [`MildOperator::psi_part`].

use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprError, Expression};
use crate::frac::{caputo_residual, trapezoid_integral, FracError, FracIntegrator, GridFunction, UniformGrid, CAPUTO_MIN_INTERVALS};
use crate::fuzzy::{clamp_to_box, select, FuzzyBoxField, FuzzyError};
use crate::vi::{solve_vi, vi_residual, AffineOperator, FeasibleSet, ViError, ViInstance, ViOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MildError {
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error("VI at node {node} failed: {source}")]
    Control { node: usize, source: ViError },
    #[error("Picard iteration stopped after {} sweeps, last change {:e}", residuals.len(), residuals.last().copied().unwrap_or(f64::NAN))]
    MaxPicardExceeded { residuals: Vec<f64> },
    #[error("non-finite state in sweep {iteration} at node {node}")]
    NonfiniteValue { iteration: usize, node: usize },
}

/// A complete problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    /// Fractional order, in (1, 2].
    pub order: f64,
    /// Right end of the time interval.
    pub horizon: f64,
    pub field: FuzzyBoxField,
    /// α-level used for selections, in [0, 1].
    pub alpha: f64,
    /// `n × m` control gain `g(t, y)`.
    pub gain: Vec<Vec<Expression>>,
    /// `Q(t, y)`, the VI constant term, length `m`.
    pub source: Vec<Expression>,
    pub operator: AffineOperator,
    pub feasible: FeasibleSet,
    /// Integrand of the condition at `t = 0`, length `n`.
    pub left_boundary: Vec<Expression>,
    /// Integrand of the condition at `t = T`, length `n`.
    pub right_boundary: Vec<Expression>,
    /// Reference point `u₀ ∈ K`.
    pub anchor: Vec<f64>,
}

impl ProblemSpec {
    pub fn state_dim(&self) -> usize {
        self.field.dim()
    }

    pub fn control_dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn validate(&self) -> Result<(), MildError> {
        let bad = |msg: String| Err(MildError::InvalidSpec(msg));
        if !(self.order > 1.0 && self.order <= 2.0) {
            return bad(format!("order q = {} must lie in (1, 2]", self.order));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon T = {} must be positive", self.horizon));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha = {} must lie in [0, 1]", self.alpha));
        }
        let (n, m) = (self.state_dim(), self.control_dim());
        if n == 0 || m == 0 {
            return bad("state and control dimensions must be positive".into());
        }
        if self.gain.len() != n || self.gain.iter().any(|row| row.len() != m) {
            return bad(format!("gain must be {n} x {m}"));
        }
        for (name, list) in [
            ("source", &self.source),
            ("left_boundary", &self.left_boundary),
            ("right_boundary", &self.right_boundary),
        ] {
            let want = if name == "source" { m } else { n };
            if list.len() != want {
                return bad(format!("{name} has {} entries, expected {want}", list.len()));
            }
        }
        let all = self
            .gain
            .iter()
            .flatten()
            .chain(&self.source)
            .chain(&self.left_boundary)
            .chain(&self.right_boundary);
        for e in all {
            if e.dim() != n {
                return bad(format!("expression `{e}` is over {} state variables, expected {n}", e.dim()));
            }
        }
        if self.feasible.dim() != m {
            return bad(format!("feasible set has dimension {}, expected {m}", self.feasible.dim()));
        }
        if self.anchor.len() != m {
            return bad(format!("anchor has {} entries, expected {m}", self.anchor.len()));
        }
        if !self.feasible.contains(&self.anchor) {
            return bad(format!("anchor {:?} is not in the feasible set", self.anchor));
        }
        Ok(())
    }

    pub fn eval_source(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.source.iter().map(|e| e.eval(t, y)).collect()
    }

    /// `g(t, y)` as rows.
    pub fn eval_gain(&self, t: f64, y: &[f64]) -> Result<Vec<Vec<f64>>, ExprError> {
        self.gain
            .iter()
            .map(|row| row.iter().map(|e| e.eval(t, y)).collect())
            .collect()
    }
}

/// Constant-in-time selection weights `λ ∈ [-1, 1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionPolicy {
    pub lambda: Vec<f64>,
}

impl SelectionPolicy {
    pub fn new(lambda: Vec<f64>) -> Result<Self, MildError> {
        if let Some(l) = lambda.iter().find(|l| !(-1.0..=1.0).contains(*l)) {
            return Err(MildError::Fuzzy(FuzzyError::Lambda(*l)));
        }
        Ok(SelectionPolicy { lambda })
    }

    pub fn midpoint(n: usize) -> Self {
        SelectionPolicy { lambda: vec![0.0; n] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Number of grid intervals.
    pub intervals: usize,
    pub picard_tol: f64,
    pub max_picard: usize,
    /// Relaxation weight θ in (0, 1].
    pub damping: f64,
    pub vi_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            intervals: 1000,
            picard_tol: 1e-9,
            max_picard: 500,
            damping: 1.0,
            vi_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), MildError> {
        let bad = |msg: String| Err(MildError::InvalidConfig(msg));
        if self.intervals < CAPUTO_MIN_INTERVALS {
            return bad(format!("N = {} must be at least {CAPUTO_MIN_INTERVALS}", self.intervals));
        }
        if !(self.picard_tol > 0.0 && self.vi_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping = {} must lie in (0, 1]", self.damping));
        }
        if self.max_picard == 0 {
            return bad("max_picard must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Sup-norm change of each Picard sweep.
    pub picard_residuals: Vec<f64>,
    pub max_vi_residual: f64,
    /// `|y(0) - ∫ c₁(τ, y) dτ|`, max over components.
    pub boundary_residual: f64,
    /// Discrete Caputo derivative of `y` against `f + g·u`.
    pub caputo_residual: Option<f64>,
    /// `|y'(T) - ∫ c₂(τ, y) dτ|`, reported only.
    pub terminal_slope_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBundle {
    pub alpha: f64,
    pub lambda: Vec<f64>,
    pub y: GridFunction,
    pub u: GridFunction,
    pub f: GridFunction,
    pub diagnostics: Diagnostics,
}

/// The mild-solution operator on a fixed grid.
#[derive(Debug, Clone)]
pub struct MildOperator<'a> {
    spec: &'a ProblemSpec,
    grid: UniformGrid,
    integrator: FracIntegrator,
    vi_opts: ViOptions,
}

impl<'a> MildOperator<'a> {
    pub fn new(spec: &'a ProblemSpec, intervals: usize, vi_tol: f64) -> Result<Self, MildError> {
        spec.validate()?;
        let grid = UniformGrid::new(spec.horizon, intervals)?;
        Ok(MildOperator {
            spec,
            grid,
            integrator: FracIntegrator::new(spec.order, grid)?,
            vi_opts: ViOptions {
                tol: vi_tol,
                start: Some(spec.anchor.clone()),
                ..ViOptions::default()
            },
        })
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    pub fn spec(&self) -> &ProblemSpec {
        self.spec
    }

    fn check(&self, g: &GridFunction, dim: usize) -> Result<(), MildError> {
        if g.grid() != self.grid || g.dim() != dim {
            return Err(MildError::Frac(FracError::Shape(format!(
                "expected a {dim}-dimensional function on the solver grid"
            ))));
        }
        Ok(())
    }

    /// `t ↦ I^q r(t) - (t/T)·I^q r(T)`.
    fn kernel_part(&self, r: &GridFunction) -> Result<GridFunction, MildError> {
        let mut out = self.integrator.apply(r)?;
        let last = self.grid.intervals();
        let end = out.at(last).to_vec();
        for i in 0..self.grid.len() {
            let s = self.grid.node(i) / self.spec.horizon;
            for (v, e) in out.at_mut(i).iter_mut().zip(&end) {
                *v -= s * e;
            }
        }
        Ok(out)
    }

    fn boundary_integrals(&self, y: &GridFunction) -> Result<(Vec<f64>, Vec<f64>), MildError> {
        let eval = |list: &[Expression]| -> Result<Vec<f64>, MildError> {
            let mut values = Vec::with_capacity(self.grid.len() * list.len());
            for i in 0..self.grid.len() {
                let (t, yi) = (self.grid.node(i), y.at(i));
                for e in list {
                    values.push(e.eval(t, yi)?);
                }
            }
            let g = GridFunction::from_values(self.grid, list.len(), values)?;
            Ok(trapezoid_integral(&g))
        };
        Ok((eval(&self.spec.left_boundary)?, eval(&self.spec.right_boundary)?))
    }

    pub fn phi_part(&self, f: &GridFunction) -> Result<GridFunction, MildError> {
        self.check(f, self.spec.state_dim())?;
        self.kernel_part(f)
    }

    pub fn psi_part(&self, y: &GridFunction, h: &GridFunction) -> Result<GridFunction, MildError> {
        self.check(y, self.spec.state_dim())?;
        self.check(h, self.spec.control_dim())?;
        let gh = self.gain_times(y, h)?;
        let mut out = self.kernel_part(&gh)?;
        self.add_boundary_terms(y, &mut out)?;
        Ok(out)
    }

    fn add_boundary_terms(&self, y: &GridFunction, out: &mut GridFunction) -> Result<(), MildError> {
        let (c1, c2) = self.boundary_integrals(y)?;
        for i in 0..self.grid.len() {
            let s = self.grid.node(i) / self.spec.horizon;
            for (k, v) in out.at_mut(i).iter_mut().enumerate() {
                *v += s * c2[k] + (1.0 - s) * c1[k];
            }
        }
        Ok(())
    }

    /// `g(t_i, y_i)·h_i` at every node.
    fn gain_times(&self, y: &GridFunction, h: &GridFunction) -> Result<GridFunction, MildError> {
        let n = self.spec.state_dim();
        let mut values = Vec::with_capacity(self.grid.len() * n);
        for i in 0..self.grid.len() {
            let gm = self.spec.eval_gain(self.grid.node(i), y.at(i))?;
            for row in &gm {
                values.push(row.iter().zip(h.at(i)).map(|(a, b)| a * b).sum());
            }
        }
        Ok(GridFunction::from_values(self.grid, n, values)?)
    }

    /// Node-wise VI solutions. The first node starts from the anchor, later
    /// nodes from the previous node's solution.
    pub fn control_map(&self, y: &GridFunction) -> Result<GridFunction, MildError> {
        self.check(y, self.spec.state_dim())?;
        let m = self.spec.control_dim();
        let mut values = Vec::with_capacity(self.grid.len() * m);
        let mut opts = self.vi_opts.clone();
        for i in 0..self.grid.len() {
            let w = self.spec.eval_source(self.grid.node(i), y.at(i))?;
            let inst = ViInstance::new(&self.spec.feasible, &w, &self.spec.operator).map_err(|source| MildError::Control { node: i, source })?;
            let sol = solve_vi(&inst, &opts).map_err(|source| MildError::Control { node: i, source })?;
            values.extend_from_slice(&sol.u);
            opts.start = Some(sol.u);
        }
        Ok(GridFunction::from_values(self.grid, m, values)?)
    }

    /// Largest natural-map residual of `u` over the nodes.
    pub fn max_vi_residual(&self, y: &GridFunction, u: &GridFunction) -> Result<f64, MildError> {
        let mut worst = 0.0f64;
        for i in 0..self.grid.len() {
            let w = self.spec.eval_source(self.grid.node(i), y.at(i))?;
            let inst = ViInstance::new(&self.spec.feasible, &w, &self.spec.operator).map_err(|source| MildError::Control { node: i, source })?;
            let r = vi_residual(&inst, u.at(i)).map_err(|source| MildError::Control { node: i, source })?;
            worst = worst.max(r);
        }
        Ok(worst)
    }

    pub fn selection_map(&self, y: &GridFunction, policy: &SelectionPolicy) -> Result<GridFunction, MildError> {
        self.check(y, self.spec.state_dim())?;
        let n = self.spec.state_dim();
        let mut values = Vec::with_capacity(self.grid.len() * n);
        for i in 0..self.grid.len() {
            let level = self.spec.field.level(self.grid.node(i), y.at(i), self.spec.alpha)?;
            values.extend(select(&level, &policy.lambda)?);
        }
        Ok(GridFunction::from_values(self.grid, n, values)?)
    }

    /// Clamps `f1` node-wise into the levels of `F(t, y2)`.
    pub fn nearest_selection(&self, f1: &GridFunction, y2: &GridFunction) -> Result<GridFunction, MildError> {
        let n = self.spec.state_dim();
        self.check(f1, n)?;
        self.check(y2, n)?;
        let mut values = Vec::with_capacity(self.grid.len() * n);
        for i in 0..self.grid.len() {
            let level = self.spec.field.level(self.grid.node(i), y2.at(i), self.spec.alpha)?;
            values.extend(clamp_to_box(f1.at(i), &level)?);
        }
        Ok(GridFunction::from_values(self.grid, n, values)?)
    }

    /// One full operator application, returning the image with the `f` and `u` used.
    pub fn apply(&self, y: &GridFunction, policy: &SelectionPolicy) -> Result<(GridFunction, GridFunction, GridFunction), MildError> {
        let f = self.selection_map(y, policy)?;
        let u = self.control_map(y)?;
        let rhs = self.gain_times(y, &u)?.linear_combination(1.0, &f, 1.0);
        let mut image = self.kernel_part(&rhs)?;
        self.add_boundary_terms(y, &mut image)?;
        Ok((image, f, u))
    }

    fn diagnostics(&self, y: &GridFunction, f: &GridFunction, u: &GridFunction, picard_residuals: Vec<f64>) -> Result<Diagnostics, MildError> {
        let rhs = self.gain_times(y, u)?.linear_combination(1.0, f, 1.0);
        let (c1, c2) = self.boundary_integrals(y)?;
        let boundary_residual = y.at(0).iter().zip(&c1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let caputo = caputo_residual(self.spec.order, y, &rhs).ok();

        // y'(T) = I^{q-1} r(T) - I^q r(T)/T + (C₂ - C₁)/T
        let t_end = self.spec.horizon;
        let last = self.grid.intervals();
        let slope_int = FracIntegrator::new(self.spec.order - 1.0, self.grid)?.at(&rhs, last)?;
        let full_int = self.integrator.at(&rhs, last)?;
        let terminal_slope_residual = (0..self.spec.state_dim())
            .map(|k| {
                let slope = slope_int[k] - full_int[k] / t_end + (c2[k] - c1[k]) / t_end;
                (slope - c2[k]).abs()
            })
            .fold(0.0, f64::max);

        Ok(Diagnostics {
            picard_residuals,
            max_vi_residual: self.max_vi_residual(y, u)?,
            boundary_residual,
            caputo_residual: caputo,
            terminal_slope_residual,
        })
    }
}

pub fn phi_part(spec: &ProblemSpec, f: &GridFunction) -> Result<GridFunction, MildError> {
    MildOperator::new(spec, f.grid().intervals(), ViOptions::default().tol)?.phi_part(f)
}

pub fn psi_part(spec: &ProblemSpec, y: &GridFunction, h: &GridFunction) -> Result<GridFunction, MildError> {
    MildOperator::new(spec, y.grid().intervals(), ViOptions::default().tol)?.psi_part(y, h)
}

pub fn control_map(spec: &ProblemSpec, y: &GridFunction, vi_tol: f64) -> Result<GridFunction, MildError> {
    MildOperator::new(spec, y.grid().intervals(), vi_tol)?.control_map(y)
}

pub fn selection_map(spec: &ProblemSpec, y: &GridFunction, policy: &SelectionPolicy) -> Result<GridFunction, MildError> {
    MildOperator::new(spec, y.grid().intervals(), ViOptions::default().tol)?.selection_map(y, policy)
}

pub fn nearest_selection(spec: &ProblemSpec, f1: &GridFunction, y2: &GridFunction) -> Result<GridFunction, MildError> {
    MildOperator::new(spec, f1.grid().intervals(), ViOptions::default().tol)?.nearest_selection(f1, y2)
}

/// Damped Picard iteration from `y ≡ 0` until the sup-norm change of a sweep
/// drops to `picard_tol`.
pub fn picard_solve(spec: &ProblemSpec, cfg: &SolverConfig, policy: &SelectionPolicy) -> Result<SolutionBundle, MildError> {
    cfg.validate()?;
    if policy.lambda.len() != spec.state_dim() {
        return Err(MildError::Fuzzy(FuzzyError::DimensionMismatch {
            expected: spec.state_dim(),
            found: policy.lambda.len(),
        }));
    }
    let op = MildOperator::new(spec, cfg.intervals, cfg.vi_tol)?;
    let mut y = GridFunction::zeros(op.grid(), spec.state_dim());
    let mut residuals = Vec::new();
    for iteration in 1..=cfg.max_picard {
        let (image, _, _) = op.apply(&y, policy)?;
        let next = y.linear_combination(1.0 - cfg.damping, &image, cfg.damping);
        if let Some(pos) = next.values().iter().position(|v| !v.is_finite()) {
            return Err(MildError::NonfiniteValue {
                iteration,
                node: pos / spec.state_dim(),
            });
        }
        let change = next.sup_distance(&y);
        residuals.push(change);
        y = next;
        if change <= cfg.picard_tol {
            let f = op.selection_map(&y, policy)?;
            let u = op.control_map(&y)?;
            let diagnostics = op.diagnostics(&y, &f, &u, residuals)?;
            return Ok(SolutionBundle {
                alpha: spec.alpha,
                lambda: policy.lambda.clone(),
                y,
                u,
                f,
                diagnostics,
            });
        }
    }
    Err(MildError::MaxPicardExceeded { residuals })
}

/// One run of a band sweep.
#[derive(Debug, Clone)]
pub struct BandRun {
    pub alpha: f64,
    pub lambda: Vec<f64>,
    pub result: Result<SolutionBundle, MildError>,
}

/// Solves for every `(α, λ)` pair, α-major. Failures are kept per run.
pub fn solve_band(spec: &ProblemSpec, cfg: &SolverConfig, alphas: &[f64], lambdas: &[Vec<f64>]) -> Vec<BandRun> {
    let mut runs = Vec::with_capacity(alphas.len() * lambdas.len());
    for &alpha in alphas {
        let mut local = spec.clone();
        local.alpha = alpha;
        for lambda in lambdas {
            let result = SelectionPolicy::new(lambda.clone()).and_then(|p| picard_solve(&local, cfg, &p));
            runs.push(BandRun {
                alpha,
                lambda: lambda.clone(),
                result,
            });
        }
    }
    runs
}
