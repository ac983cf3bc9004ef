//! Fidelity optimization at fixed success probability.
//!
//! For a given cooperativity the free variables are the scattering probability
//! `theta` and the lower cut `x_a`; the upper cut `x_b` is solved so that the
//! acceptance probability equals the target. The error `1 - F` is minimized by
//! a deterministic coarse grid over `(theta, x_a)` followed by simplex
//! refinement from the best grid points.

mod scaling;
pub mod simplex;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::outcome_distributions::{
    p_total, repeated_bound_infidelity, window_masses, AcceptanceWindow, OutcomeModel, PulseConfig,
};

pub use scaling::{
    finesse_requirement, fit_measurement_scaling, fit_scaling_model, unitary_scheme_error,
    BudgetCoefficient, ControlledInteractionRates, FinesseScheme, ModelFit, ScalingFit,
    ScalingModel, UnitaryComparisonParams, UnitaryError,
};
pub use simplex::SimplexSettings;

/// Which fidelity is optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FidelityMode {
    /// Fidelity conditioned on one accepted measurement.
    SingleShot,
    /// Lower bound on the fidelity of the repeat-until-success protocol.
    RepeatedBound,
}

impl FidelityMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FidelityMode::SingleShot => "single_shot",
            FidelityMode::RepeatedBound => "repeated_bound",
        }
    }
}

impl std::fmt::Display for FidelityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FidelityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_shot" => Ok(FidelityMode::SingleShot),
            "repeated_bound" => Ok(FidelityMode::RepeatedBound),
            other => Err(Error::InvalidParameter(format!(
                "unknown fidelity mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationProblem {
    pub cooperativity: f64,
    pub target_success: f64,
    pub mode: FidelityMode,
}

impl OptimizationProblem {
    pub fn new(cooperativity: f64, target_success: f64, mode: FidelityMode) -> Result<Self> {
        if !(cooperativity > 0.0) || !cooperativity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cooperativity must be finite and positive, got {cooperativity}"
            )));
        }
        if !(target_success > 0.0 && target_success < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "target success probability must lie in (0, 1), got {target_success}"
            )));
        }
        Ok(OptimizationProblem {
            cooperativity,
            target_success,
            mode,
        })
    }

    fn model(&self, theta: f64) -> Result<OutcomeModel> {
        Ok(OutcomeModel::two_atom(PulseConfig::new(
            theta,
            self.cooperativity,
        )?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub problem: OptimizationProblem,
    pub theta_opt: f64,
    pub x_a_opt: f64,
    pub x_b_opt: f64,
    /// Achieved `1 - F`.
    pub error: f64,
    /// Achieved acceptance probability.
    pub success: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl OptimizationResult {
    pub fn window(&self) -> AcceptanceWindow {
        AcceptanceWindow {
            x_a: self.x_a_opt,
            x_b: self.x_b_opt,
        }
    }

    pub fn pulse(&self) -> PulseConfig {
        PulseConfig::new(self.theta_opt, self.problem.cooperativity)
            .expect("optimizer only reports valid pulses")
    }
}

/// Grid and local-search settings for [`optimize_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
    /// Lower cuts are scanned over `[x_1 - x_a_span, x_1)`.
    pub x_a_span: f64,
    pub x_a_points: usize,
    pub starts: usize,
    pub simplex: SimplexSettings,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            theta_min: 1e-4,
            theta_max: 3.0,
            theta_points: 32,
            x_a_span: 6.0,
            x_a_points: 30,
            starts: 5,
            simplex: SimplexSettings::default(),
        }
    }
}

const SUCCESS_TOLERANCE: f64 = 1e-12;

/// Upper cut `x_b` such that the window `(x_a, x_b)` is accepted with the
/// problem's target probability.
pub fn solve_upper_cut(x_a: f64, theta: f64, problem: &OptimizationProblem) -> Result<f64> {
    let model = problem.model(theta)?;
    solve_upper_cut_for(x_a, &model, problem.target_success)
}

fn success(x_a: f64, x_b: f64, model: &OutcomeModel) -> Result<f64> {
    if x_b <= x_a {
        return Ok(0.0);
    }
    Ok(window_masses(&AcceptanceWindow::new(x_a, x_b)?, model)?.success())
}

fn solve_upper_cut_for(x_a: f64, model: &OutcomeModel, target: f64) -> Result<f64> {
    if !x_a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lower cut must be finite, got {x_a}"
        )));
    }
    let available = success(x_a, f64::INFINITY, model)?;
    if !(available > target) {
        return Err(Error::InfeasibleConstraint(format!(
            "only {available} of the outcome mass lies above x_a = {x_a}, target {target}"
        )));
    }

    // Bracket: P(lo) < target <= P(hi).
    let mut lo = x_a;
    let mut p_lo = 0.0;
    let mut step = 1.0;
    let mut hi = x_a + step;
    let mut p_hi = success(x_a, hi, model)?;
    while p_hi < target {
        lo = hi;
        p_lo = p_hi;
        step *= 2.0;
        hi = x_a + step;
        if step > 1e6 {
            return Err(Error::InfeasibleConstraint(format!(
                "could not bracket the upper cut for target {target}"
            )));
        }
        p_hi = success(x_a, hi, model)?;
    }

    // Safeguarded Newton on the monotone map x_b -> P_s, derivative P_tot(x_b).
    let mut x = if p_hi - p_lo > 0.0 {
        lo + (hi - lo) * (target - p_lo) / (p_hi - p_lo)
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let p = success(x_a, x, model)?;
        let residual = p - target;
        if residual.abs() <= SUCCESS_TOLERANCE {
            return Ok(x);
        }
        if residual < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            return Ok(x);
        }
        let slope = p_total(x, model)?;
        let newton = x - residual / slope;
        x = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy)]
struct Evaluation {
    error: f64,
    x_b: f64,
    success: f64,
}

fn evaluate(problem: &OptimizationProblem, theta: f64, x_a: f64) -> Result<Evaluation> {
    let model = problem.model(theta)?;
    let x_b = solve_upper_cut_for(x_a, &model, problem.target_success)?;
    let window = AcceptanceWindow::new(x_a, x_b)?;
    let masses = window_masses(&window, &model)?;
    let error = match problem.mode {
        FidelityMode::SingleShot => masses.infidelity()?,
        FidelityMode::RepeatedBound => repeated_bound_infidelity(&window, &model)?,
    };
    Ok(Evaluation {
        error,
        x_b,
        success: masses.success(),
    })
}

/// Minimum `1 - F` at the problem's success probability, with default settings.
pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    optimize_with(problem, &OptimizerSettings::default())
}

pub fn optimize_with(
    problem: &OptimizationProblem,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult> {
    let mut evaluations = 0usize;
    let c = problem.cooperativity;
    let x1 = |theta: f64| 2.0 * (theta * c).sqrt();

    // Coarse grid in (ln theta, x_a - x_1).
    let (ln_lo, ln_hi) = (settings.theta_min.ln(), settings.theta_max.ln());
    let n_theta = settings.theta_points.max(2);
    let n_xa = settings.x_a_points.max(1);
    let d_ln = (ln_hi - ln_lo) / (n_theta - 1) as f64;
    let d_xa = settings.x_a_span / n_xa as f64;
    let mut grid = Vec::with_capacity(n_theta * n_xa);
    for i in 0..n_theta {
        let ln_theta = ln_lo + d_ln * i as f64;
        let theta = ln_theta.exp();
        for j in 0..n_xa {
            let offset = -settings.x_a_span + d_xa * j as f64;
            evaluations += 1;
            if let Ok(e) = evaluate(problem, theta, x1(theta) + offset) {
                if e.error.is_finite() {
                    grid.push((e.error, ln_theta, offset));
                }
            }
        }
    }
    if grid.is_empty() {
        return Err(Error::InfeasibleConstraint(format!(
            "no feasible (theta, x_a) grid point for cooperativity {c} and success {}",
            problem.target_success
        )));
    }
    grid.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });

    let objective = |v: &[f64]| -> f64 {
        let theta = v[0].exp();
        if !(1e-12..=50.0).contains(&theta) {
            return f64::INFINITY;
        }
        match evaluate(problem, theta, x1(theta) + v[1]) {
            Ok(e) => e.error,
            Err(_) => f64::INFINITY,
        }
    };

    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for &(_, ln_theta, offset) in grid.iter().take(settings.starts.max(1)) {
        let run = simplex::minimize(
            objective,
            &[ln_theta, offset],
            &[0.5 * d_ln, 0.5 * d_xa],
            &settings.simplex,
        );
        evaluations += run.evaluations;
        let better = match &best {
            None => true,
            Some((value, _, _)) => run.value < *value,
        };
        if better {
            best = Some((run.value, run.x, run.converged));
        }
    }
    let (_, x, converged) = best.expect("at least one start");
    let theta = x[0].exp();
    let x_a = x1(theta) + x[1];
    let e = evaluate(problem, theta, x_a)?;
    evaluations += 1;
    Ok(OptimizationResult {
        problem: *problem,
        theta_opt: theta,
        x_a_opt: x_a,
        x_b_opt: e.x_b,
        error: e.error,
        success: e.success,
        converged,
        evaluations,
    })
}

/// Optimizes every cooperativity independently (in parallel); results are in
/// input order.
pub fn sweep_curve(
    cooperativities: &[f64],
    target_success: f64,
    mode: FidelityMode,
) -> Result<Vec<OptimizationResult>> {
    sweep_curve_with(
        cooperativities,
        target_success,
        mode,
        &OptimizerSettings::default(),
    )
}

pub fn sweep_curve_with(
    cooperativities: &[f64],
    target_success: f64,
    mode: FidelityMode,
    settings: &OptimizerSettings,
) -> Result<Vec<OptimizationResult>> {
    if cooperativities.is_empty() {
        return Err(Error::InvalidParameter(
            "cooperativity list is empty".into(),
        ));
    }
    if cooperativities.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "cooperativities must be strictly increasing".into(),
        ));
    }
    let problems = cooperativities
        .iter()
        .map(|&c| OptimizationProblem::new(c, target_success, mode))
        .collect::<Result<Vec<_>>>()?;
    problems
        .par_iter()
        .map(|p| optimize_with(p, settings))
        .collect()
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}
