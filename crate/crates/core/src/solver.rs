//! Iteration schemes for potential operator equations `F(u) = 0`:
//! the adaptively damped Newton method, fixed-step damped Newton (which
//! includes the classical scheme at `δ = 1`), and the Kačanov iteration used
//! to compute reference solutions.

use std::fmt;

use thiserror::Error;

use crate::fem::{DiscreteProblem, FemError};
use crate::linalg::{axpy, cg_solve, dot, norm2, sub, LinalgError, SparseMatrix};
use crate::models::StructuralConstants;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("linear solve failed: {0}")]
    Linalg(#[from] LinalgError),
    #[error("no step accepted after {trials} trials (last damping {last_delta})")]
    TrialBudget { trials: usize, last_delta: f64 },
    #[error("Kačanov iteration did not converge in {iterations} iterations (last update {last_update:e})")]
    KacanovNotConverged { iterations: usize, last_update: f64 },
}

/// A nonlinear operator equation `F(u) = 0` in coefficient form, where `F`
/// is the derivative of a potential `H` and the Jacobian is symmetric
/// positive definite.
pub trait OperatorEquation {
    fn dim(&self) -> usize;
    /// Coefficients of `F(u)` tested against the basis.
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError>;
    /// Gateaux derivative `F′(u)`.
    fn jacobian(&self, u: &[f64]) -> Result<SparseMatrix, SolverError>;
    /// Potential `H(u)` with `H′ = F`.
    fn potential(&self, u: &[f64]) -> Result<f64, SolverError>;
    /// Norm of the underlying Hilbert space.
    fn norm(&self, v: &[f64]) -> Result<f64, SolverError>;
    fn constants(&self) -> StructuralConstants;
    /// Reference magnitude for the relative residual stopping test.
    fn residual_scale(&self) -> f64;
}

impl OperatorEquation for DiscreteProblem {
    fn dim(&self) -> usize {
        self.n_dofs()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
        Ok(DiscreteProblem::residual(self, u)?)
    }

    fn jacobian(&self, u: &[f64]) -> Result<SparseMatrix, SolverError> {
        Ok(DiscreteProblem::jacobian(self, u)?)
    }

    fn potential(&self, u: &[f64]) -> Result<f64, SolverError> {
        Ok(DiscreteProblem::potential(self, u)?)
    }

    fn norm(&self, v: &[f64]) -> Result<f64, SolverError> {
        Ok(self.energy_norm(v)?)
    }

    fn constants(&self) -> StructuralConstants {
        *DiscreteProblem::constants(self)
    }

    fn residual_scale(&self) -> f64 {
        norm2(self.load())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Backtracking factor, in `(0, 1)`.
    pub sigma: f64,
    /// Sufficient-decrease parameter, in `(0, 0.5]`.
    pub theta: f64,
    pub max_outer_iter: usize,
    pub max_trials_per_step: usize,
    pub linear_rel_tol: f64,
    pub linear_max_iter: usize,
    pub stop_update_norm: f64,
    pub stop_residual_rel: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sigma: 0.8,
            theta: 0.1,
            max_outer_iter: 100,
            max_trials_per_step: 100,
            linear_rel_tol: 1e-12,
            linear_max_iter: 20_000,
            stop_update_norm: 1e-10,
            stop_residual_rel: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn new(sigma: f64, theta: f64) -> Result<Self, SolverError> {
        let cfg = Self {
            sigma,
            theta,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad(format!("sigma must lie in (0, 1), got {}", self.sigma));
        }
        if !(self.theta > 0.0 && self.theta <= 0.5) {
            return bad(format!("theta must lie in (0, 0.5], got {}", self.theta));
        }
        if !(self.linear_rel_tol > 0.0) {
            return bad(format!("linear tolerance must be positive, got {}", self.linear_rel_tol));
        }
        if !(self.stop_update_norm >= 0.0) || !(self.stop_residual_rel >= 0.0) {
            return bad("stopping tolerances must be non-negative".into());
        }
        if self.max_trials_per_step == 0 || self.linear_max_iter == 0 {
            return bad("iteration budgets must be positive".into());
        }
        Ok(())
    }

    /// Trials needed for `σᵏ` to reach `floor` from 1, plus two.
    pub fn required_trials(&self, floor: f64) -> usize {
        let k = (floor.ln() / self.sigma.ln()).ceil().max(0.0) as usize;
        k + 2
    }

    fn validate_for(&self, constants: &StructuralConstants) -> Result<(), SolverError> {
        self.validate()?;
        let need = self.required_trials(constants.damping_floor);
        if self.max_trials_per_step < need {
            return Err(SolverError::InvalidConfig(format!(
                "max_trials_per_step = {} cannot reach the damping floor {}; need at least {need}",
                self.max_trials_per_step, constants.damping_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationBudget,
    TrialBudget,
    LinearSolveFailure,
    Divergence,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::IterationBudget => "iteration_budget",
            Termination::TrialBudget => "trial_budget",
            Termination::LinearSolveFailure => "linear_solve_failure",
            Termination::Divergence => "divergence",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// State after the `iteration`-th update `uⁿ = uⁿ⁻¹ − δρⁿ⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub iteration: usize,
    pub delta_used: f64,
    pub trial_count: usize,
    /// `H(uⁿ)`
    pub potential_value: f64,
    /// `‖uⁿ − uⁿ⁻¹‖_X`
    pub update_energy_norm: f64,
    /// `‖F(uⁿ)‖₂` in coefficient form
    pub residual_norm: f64,
    /// `‖uⁿ − u_ref‖_X` when a reference is supplied
    pub error_vs_reference: Option<f64>,
}

/// Quantities at the initial guess.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub potential_value: f64,
    pub residual_norm: f64,
    pub error_vs_reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceHistory {
    pub initial: InitialState,
    pub records: Vec<StepRecord>,
    pub terminated: Termination,
    /// Error that ended the run, for the budget and failure terminations.
    pub failure: Option<SolverError>,
    /// Last iterate.
    pub solution: Vec<f64>,
}

impl ConvergenceHistory {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_error(&self) -> Option<f64> {
        match self.records.last() {
            Some(r) => r.error_vs_reference,
            None => self.initial.error_vs_reference,
        }
    }

    /// Potential values `H(u⁰), H(u¹), …`.
    pub fn potentials(&self) -> Vec<f64> {
        std::iter::once(self.initial.potential_value)
            .chain(self.records.iter().map(|r| r.potential_value))
            .collect()
    }

    /// Errors `‖uⁿ − u_ref‖_X` for `n = 0, 1, …`, if a reference was given.
    pub fn errors(&self) -> Option<Vec<f64>> {
        std::iter::once(self.initial.error_vs_reference)
            .chain(self.records.iter().map(|r| r.error_vs_reference))
            .collect()
    }
}

/// Sufficient-decrease test `H(u) − H(u_next) ≥ C_H ‖u − u_next‖²`.
///
/// Both sides are compared in plain double precision. When the decay and the
/// required amount are both within `1e-14·(1 + |H(u)|)` the test passes,
/// since the potential difference is then pure cancellation noise.
pub fn sufficient_decrease(h_old: f64, h_new: f64, step_norm: f64, decay_constant: f64) -> bool {
    let decay = h_old - h_new;
    let required = decay_constant * step_norm * step_norm;
    if decay >= required {
        return true;
    }
    let noise = 1e-14 * (1.0 + h_old.abs());
    decay.abs() <= noise && required <= noise
}

fn solve_direction<P: OperatorEquation + ?Sized>(
    p: &P,
    u: &[f64],
    residual: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>, SolverError> {
    let a = p.jacobian(u)?;
    Ok(cg_solve(&a, residual, cfg.linear_rel_tol, cfg.linear_max_iter)?)
}

/// Undamped Newton update `ρ` solving `F′(u)ρ = F(u)`.
pub fn newton_direction<P: OperatorEquation + ?Sized>(
    p: &P,
    u: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>, SolverError> {
    let r = p.residual(u)?;
    solve_direction(p, u, &r, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedStep {
    pub u_next: Vec<f64>,
    /// Damping parameter that produced `u_next`.
    pub delta_used: f64,
    pub trials: usize,
    /// Every damping parameter tried, in order; the last one was accepted.
    pub trial_deltas: Vec<f64>,
    pub potential_next: f64,
    pub step_norm: f64,
}

/// Backtracking loop of the adaptive scheme: try `δ = 1`, then
/// `δ ← max{σδ, α_F′/L}` until
/// `H(u) − H(u − δρ) ≥ θ·min{α_F′, L}·‖δρ‖²`.
pub fn adaptive_step<P: OperatorEquation + ?Sized>(
    p: &P,
    u: &[f64],
    rho: &[f64],
    cfg: &SolverConfig,
) -> Result<AcceptedStep, SolverError> {
    let h_old = p.potential(u)?;
    adaptive_step_from(p, u, h_old, rho, cfg)
}

fn adaptive_step_from<P: OperatorEquation + ?Sized>(
    p: &P,
    u: &[f64],
    h_old: f64,
    rho: &[f64],
    cfg: &SolverConfig,
) -> Result<AcceptedStep, SolverError> {
    let constants = p.constants();
    let floor = constants.damping_floor;
    let c_h = constants.decay_constant(cfg.theta);
    let rho_norm = p.norm(rho)?;

    let mut delta: f64 = 1.0;
    let mut trial_deltas = Vec::new();
    loop {
        trial_deltas.push(delta);
        let u_next = axpy(-delta, rho, u);
        let h_new = p.potential(&u_next)?;
        let step_norm = delta * rho_norm;
        if sufficient_decrease(h_old, h_new, step_norm, c_h) {
            return Ok(AcceptedStep {
                u_next,
                delta_used: delta,
                trials: trial_deltas.len(),
                trial_deltas,
                potential_next: h_new,
                step_norm,
            });
        }
        // Retrying at the floor would reproduce the same iterate.
        if trial_deltas.len() >= cfg.max_trials_per_step || delta <= floor {
            return Err(SolverError::TrialBudget {
                trials: trial_deltas.len(),
                last_delta: delta,
            });
        }
        delta = (cfg.sigma * delta).max(floor);
    }
}

/// Second-order model `½δ²⟨F′(u)ρ, ρ⟩ − δ⟨F(u), ρ⟩` of `H(u − δρ) − H(u)`.
pub fn predicted_decay<P: OperatorEquation + ?Sized>(
    p: &P,
    u: &[f64],
    rho: &[f64],
    delta: f64,
) -> Result<f64, SolverError> {
    let a = p.jacobian(u)?;
    let r = p.residual(u)?;
    let curvature = a.quadratic_form(rho)?;
    Ok(0.5 * delta * delta * curvature - delta * dot(&r, rho))
}

struct Tracker<'a, P: ?Sized> {
    p: &'a P,
    reference: Option<&'a [f64]>,
}

impl<P: OperatorEquation + ?Sized> Tracker<'_, P> {
    fn error(&self, u: &[f64]) -> Result<Option<f64>, SolverError> {
        self.reference.map(|r| self.p.norm(&sub(u, r))).transpose()
    }
}

fn check_len<P: OperatorEquation + ?Sized>(p: &P, v: &[f64]) -> Result<(), SolverError> {
    if v.len() != p.dim() {
        return Err(FemError::DimensionMismatch {
            expected: p.dim(),
            actual: v.len(),
        }
        .into());
    }
    Ok(())
}

/// Update rule used by the outer Newton loop.
enum Damping {
    Adaptive,
    Fixed(f64),
}

/// Adaptively damped Newton method.
pub fn solve_adaptive<P: OperatorEquation + ?Sized>(
    p: &P,
    u0: &[f64],
    cfg: &SolverConfig,
    reference: Option<&[f64]>,
) -> Result<ConvergenceHistory, SolverError> {
    cfg.validate_for(&p.constants())?;
    newton_loop(p, u0, cfg, reference, Damping::Adaptive)
}

/// Damped Newton method with a constant step `delta`; `delta = 1` is the
/// classical Newton scheme.
pub fn solve_fixed<P: OperatorEquation + ?Sized>(
    p: &P,
    u0: &[f64],
    delta: f64,
    cfg: &SolverConfig,
    reference: Option<&[f64]>,
) -> Result<ConvergenceHistory, SolverError> {
    cfg.validate()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(SolverError::InvalidConfig(format!("fixed damping must be positive, got {delta}")));
    }
    newton_loop(p, u0, cfg, reference, Damping::Fixed(delta))
}

/// Blow-up factor of the update norm, relative to the first update, at which
/// a fixed-step run is declared divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

fn newton_loop<P: OperatorEquation + ?Sized>(
    p: &P,
    u0: &[f64],
    cfg: &SolverConfig,
    reference: Option<&[f64]>,
    damping: Damping,
) -> Result<ConvergenceHistory, SolverError> {
    check_len(p, u0)?;
    if let Some(r) = reference {
        check_len(p, r)?;
    }
    let tracker = Tracker { p, reference };
    let residual_target = cfg.stop_residual_rel * p.residual_scale();

    let mut u = u0.to_vec();
    let mut h = p.potential(&u)?;
    let mut r = p.residual(&u)?;
    let mut r_norm = norm2(&r);
    let initial = InitialState {
        potential_value: h,
        residual_norm: r_norm,
        error_vs_reference: tracker.error(&u)?,
    };
    let mut records = Vec::new();
    let mut first_update = None;
    let mut failure = None;
    let mut terminated = Termination::IterationBudget;

    for iteration in 1..=cfg.max_outer_iter {
        if r_norm <= residual_target {
            terminated = Termination::Converged;
            break;
        }
        let rho = match solve_direction(p, &u, &r, cfg) {
            Ok(rho) => rho,
            Err(e @ SolverError::Linalg(_)) => {
                terminated = Termination::LinearSolveFailure;
                failure = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        let (u_next, h_next, delta_used, trials, step_norm) = match damping {
            Damping::Adaptive => match adaptive_step_from(p, &u, h, &rho, cfg) {
                Ok(s) => (s.u_next, s.potential_next, s.delta_used, s.trials, s.step_norm),
                Err(e @ SolverError::TrialBudget { .. }) => {
                    terminated = Termination::TrialBudget;
                    failure = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            },
            Damping::Fixed(delta) => {
                let u_next = axpy(-delta, &rho, &u);
                let h_next = p.potential(&u_next)?;
                (u_next, h_next, delta, 1, delta * p.norm(&rho)?)
            }
        };
        u = u_next;
        h = h_next;
        r = p.residual(&u)?;
        r_norm = norm2(&r);
        records.push(StepRecord {
            iteration,
            delta_used,
            trial_count: trials,
            potential_value: h,
            update_energy_norm: step_norm,
            residual_norm: r_norm,
            error_vs_reference: tracker.error(&u)?,
        });

        let first = *first_update.get_or_insert(step_norm);
        let blown_up = !step_norm.is_finite()
            || !h.is_finite()
            || !r_norm.is_finite()
            || step_norm > DIVERGENCE_FACTOR * first;
        if matches!(damping, Damping::Fixed(_)) && blown_up {
            terminated = Termination::Divergence;
            break;
        }
        if step_norm <= cfg.stop_update_norm {
            terminated = Termination::Converged;
            break;
        }
    }

    Ok(ConvergenceHistory {
        initial,
        records,
        terminated,
        failure,
        solution: u,
    })
}

/// Kačanov iteration `A(uⁿ)uⁿ⁺¹ = g` with the coefficient frozen at the
/// previous iterate, written in correction form
/// `A(uⁿ)(uⁿ⁺¹ − uⁿ) = −F(uⁿ)` so that linear-solve errors shrink with
/// the update.
pub fn kacanov_history(
    p: &DiscreteProblem,
    u0: &[f64],
    tol: f64,
    max_iter: usize,
    linear_rel_tol: f64,
    reference: Option<&[f64]>,
) -> Result<ConvergenceHistory, SolverError> {
    if !(tol > 0.0) {
        return Err(SolverError::InvalidConfig(format!("Kačanov tolerance must be positive, got {tol}")));
    }
    check_len(p, u0)?;
    if let Some(r) = reference {
        check_len(p, r)?;
    }
    let tracker = Tracker { p, reference };
    let mut u = u0.to_vec();
    let mut r = DiscreteProblem::residual(p, &u)?;
    let initial = InitialState {
        potential_value: DiscreteProblem::potential(p, &u)?,
        residual_norm: norm2(&r),
        error_vs_reference: tracker.error(&u)?,
    };
    let mut records = Vec::new();
    let mut terminated = Termination::IterationBudget;
    let mut failure = None;
    for iteration in 1..=max_iter {
        let a = p.frozen_matrix(&u)?;
        let correction = match cg_solve(&a, &r, linear_rel_tol, 20 * p.n_dofs().max(50)) {
            Ok(c) => c,
            Err(e) => {
                terminated = Termination::LinearSolveFailure;
                failure = Some(e.into());
                break;
            }
        };
        u = sub(&u, &correction);
        r = DiscreteProblem::residual(p, &u)?;
        let update = p.energy_norm(&correction)?;
        records.push(StepRecord {
            iteration,
            delta_used: 1.0,
            trial_count: 1,
            potential_value: DiscreteProblem::potential(p, &u)?,
            update_energy_norm: update,
            residual_norm: norm2(&r),
            error_vs_reference: tracker.error(&u)?,
        });
        if update <= tol {
            terminated = Termination::Converged;
            break;
        }
    }
    if terminated == Termination::IterationBudget {
        failure = Some(SolverError::KacanovNotConverged {
            iterations: max_iter,
            last_update: records.last().map_or(f64::NAN, |r| r.update_energy_norm),
        });
    }
    Ok(ConvergenceHistory {
        initial,
        records,
        terminated,
        failure,
        solution: u,
    })
}

/// Default stopping tolerance of the Kačanov reference solve.
pub const KACANOV_TOL: f64 = 1e-12;
/// Default iteration budget of the Kačanov reference solve.
pub const KACANOV_MAX_ITER: usize = 10_000;

/// Runs the Kačanov iteration to `tol` and returns the last iterate.
pub fn solve_kacanov(p: &DiscreteProblem, u0: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, SolverError> {
    let history = kacanov_history(p, u0, tol, max_iter, SolverConfig::default().linear_rel_tol, None)?;
    match history.terminated {
        Termination::Converged => Ok(history.solution),
        _ => Err(history.failure.expect("non-converged Kačanov run records its failure")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar equation `F(u) = u` for `u ≤ 1` and `1 + c(u − 1)` above, with
    /// potential `H(u) = ½u²` resp. `½ + (u − 1) + ½c(u − 1)²`.
    struct Saturating {
        c: f64,
    }

    impl Saturating {
        fn h(&self, u: f64) -> f64 {
            if u <= 1.0 {
                0.5 * u * u
            } else {
                0.5 + (u - 1.0) + 0.5 * self.c * (u - 1.0) * (u - 1.0)
            }
        }
    }

    impl OperatorEquation for Saturating {
        fn dim(&self) -> usize {
            1
        }
        fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
            let x = u[0];
            Ok(vec![if x <= 1.0 { x } else { 1.0 + self.c * (x - 1.0) }])
        }
        fn jacobian(&self, u: &[f64]) -> Result<SparseMatrix, SolverError> {
            let d = if u[0] <= 1.0 { 1.0 } else { self.c };
            Ok(SparseMatrix::from_triplets(1, &[(0, 0, d)])?)
        }
        fn potential(&self, u: &[f64]) -> Result<f64, SolverError> {
            Ok(self.h(u[0]))
        }
        fn norm(&self, v: &[f64]) -> Result<f64, SolverError> {
            Ok(v[0].abs())
        }
        fn constants(&self) -> StructuralConstants {
            // F′ ∈ [c, 1]: coercivity c, Lipschitz 1.
            StructuralConstants {
                m_mu: self.c,
                big_m_mu: 1.0,
                alpha: self.c,
                beta: 1.0,
                lipschitz: 1.0,
                nu: self.c,
                damping_floor: self.c,
            }
        }
        fn residual_scale(&self) -> f64 {
            1.0
        }
    }

    /// `H(u) = ½u²` on the real line.
    struct Quadratic;

    impl OperatorEquation for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
            Ok(u.to_vec())
        }
        fn jacobian(&self, _u: &[f64]) -> Result<SparseMatrix, SolverError> {
            Ok(SparseMatrix::identity(1))
        }
        fn potential(&self, u: &[f64]) -> Result<f64, SolverError> {
            Ok(0.5 * u[0] * u[0])
        }
        fn norm(&self, v: &[f64]) -> Result<f64, SolverError> {
            Ok(v[0].abs())
        }
        fn constants(&self) -> StructuralConstants {
            StructuralConstants {
                m_mu: 1.0,
                big_m_mu: 1.0,
                alpha: 1.0,
                beta: 1.0,
                lipschitz: 1.0,
                nu: 1.0,
                damping_floor: 1.0,
            }
        }
        fn residual_scale(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn config_ranges() {
        assert!(SolverConfig::new(0.8, 0.1).is_ok());
        assert!(SolverConfig::new(0.8, 0.5).is_ok());
        for (s, t) in [(0.0, 0.1), (1.0, 0.1), (0.8, 0.0), (0.8, 0.51), (f64::NAN, 0.1)] {
            assert!(matches!(SolverConfig::new(s, t), Err(SolverError::InvalidConfig(_))), "{s} {t}");
        }
    }

    #[test]
    fn trial_budget_must_reach_floor() {
        let cfg = SolverConfig::default();
        // 0.8^12 ≈ 0.069 < 1/12, 0.8^11 ≈ 0.086 > 1/12.
        assert_eq!(cfg.required_trials(1.0 / 12.0), 14);
        assert_eq!(cfg.required_trials(1.0), 2);
        let tight = SolverConfig {
            max_trials_per_step: 5,
            ..SolverConfig::default()
        };
        let p = Saturating { c: 0.05 };
        assert!(matches!(
            solve_adaptive(&p, &[3.0], &tight, None),
            Err(SolverError::InvalidConfig(_))
        ));
    }

    #[test]
    fn sufficient_decrease_noise_band() {
        assert!(sufficient_decrease(1.0, 0.5, 1.0, 0.5));
        assert!(!sufficient_decrease(1.0, 0.6, 1.0, 0.5));
        // Cancellation noise on both sides passes.
        assert!(sufficient_decrease(2.0, 2.0 + 1e-15, 1e-8, 0.1));
        // A genuine increase does not.
        assert!(!sufficient_decrease(2.0, 2.0 + 1e-10, 1e-8, 0.1));
        assert!(!sufficient_decrease(2.0, 2.0, 1e-3, 0.1));
    }

    #[test]
    fn quadratic_accepts_full_step() {
        let cfg = SolverConfig::new(0.8, 0.5).unwrap();
        let u = [2.0];
        let rho = newton_direction(&Quadratic, &u, &cfg).unwrap();
        assert_eq!(rho, vec![2.0]);
        let step = adaptive_step(&Quadratic, &u, &rho, &cfg).unwrap();
        assert_eq!((step.delta_used, step.trials), (1.0, 1));
        assert_eq!(step.u_next, vec![0.0]);
        let h = solve_adaptive(&Quadratic, &u, &cfg, Some(&[0.0])).unwrap();
        assert_eq!(h.terminated, Termination::Converged);
        assert_eq!(h.records[0].error_vs_reference, Some(0.0));
    }

    #[test]
    fn forced_backtracking_follows_sigma_powers() {
        let p = Saturating { c: 0.05 };
        let cfg = SolverConfig::new(0.8, 0.5).unwrap();
        let u = 3.0;
        // ρ = F(3)/F′(3) = 1.1/0.05 = 22.
        let rho = newton_direction(&p, &[u], &cfg).unwrap();
        assert!((rho[0] - 22.0).abs() < 1e-12);

        // Oracle: enumerate 1, σ, σ², … clipped at the floor and test the
        // decay condition directly on the closed-form potential.
        let floor = 0.05;
        let c_h = 0.5 * 0.05;
        let mut expected = Vec::new();
        let mut d: f64 = 1.0;
        loop {
            expected.push(d);
            let step = 22.0 * d;
            if p.h(u) - p.h(u - step) >= c_h * step * step {
                break;
            }
            d = (0.8 * d).max(floor);
        }
        assert!(expected.len() > 3);

        let step = adaptive_step(&p, &[u], &rho, &cfg).unwrap();
        assert_eq!(step.trials, expected.len());
        assert_eq!(step.trial_deltas.len(), expected.len());
        for (got, want) in step.trial_deltas.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(step.delta_used, *expected.last().unwrap());
        assert!(step.trial_deltas.windows(2).all(|w| w[1] < w[0]));
        assert!(step.trial_deltas.iter().all(|&d| d >= floor));
        assert!(p.h(u) - p.h(step.u_next[0]) >= c_h * step.step_norm * step.step_norm);
    }

    #[test]
    fn saturating_problem_converges_from_far_away() {
        let p = Saturating { c: 0.05 };
        let cfg = SolverConfig::new(0.8, 0.1).unwrap();
        let h = solve_adaptive(&p, &[40.0], &cfg, Some(&[0.0])).unwrap();
        assert_eq!(h.terminated, Termination::Converged);
        assert!(h.final_error().unwrap() < 1e-10);
        let pots = h.potentials();
        assert!(pots.windows(2).all(|w| w[1] <= w[0]));
        // Classical Newton overshoots: ρ = 2.95/0.05 = 59 lands at u = −19.
        let c = solve_fixed(&p, &[40.0], 1.0, &cfg, Some(&[0.0])).unwrap();
        assert!((c.records[0].error_vs_reference.unwrap() - 19.0).abs() < 1e-9);
        assert!(h.records[0].delta_used < 1.0);
    }

    #[test]
    fn fixed_step_rejects_nonpositive_delta() {
        let cfg = SolverConfig::default();
        for d in [0.0, -1.0, f64::INFINITY] {
            assert!(matches!(solve_fixed(&Quadratic, &[1.0], d, &cfg, None), Err(SolverError::InvalidConfig(_))));
        }
    }

    #[test]
    fn fixed_step_on_quadratic_contracts_linearly() {
        let cfg = SolverConfig {
            max_outer_iter: 10,
            stop_update_norm: 0.0,
            stop_residual_rel: 0.0,
            ..SolverConfig::default()
        };
        let h = solve_fixed(&Quadratic, &[1.0], 0.25, &cfg, Some(&[0.0])).unwrap();
        assert_eq!(h.terminated, Termination::IterationBudget);
        for (k, r) in h.records.iter().enumerate() {
            let want = 0.75f64.powi(k as i32 + 1);
            assert!((r.error_vs_reference.unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = SolverConfig::default();
        assert!(matches!(solve_adaptive(&Quadratic, &[1.0, 2.0], &cfg, None), Err(SolverError::Fem(_))));
        assert!(matches!(solve_fixed(&Quadratic, &[1.0], 1.0, &cfg, Some(&[])), Err(SolverError::Fem(_))));
    }
}
