//! Scaling laws: fitted `1 - F ~ A ln(C)/C` for the measurement scheme and the
//! closed-form error budget of controlled-interaction (unitary) gates,
//! `eps_gamma + eps_kappa` with `eps_gamma ~ gamma delta / g^2` and
//! `eps_kappa ~ kappa / delta`.

use crate::error::{Error, Result};

use super::OptimizationResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingModel {
    /// `A ln(C) / C`
    LogOverC,
    /// `B / sqrt(C)`
    InverseSqrt,
}

impl ScalingModel {
    pub fn shape(&self, cooperativity: f64) -> f64 {
        match self {
            ScalingModel::LogOverC => cooperativity.ln() / cooperativity,
            ScalingModel::InverseSqrt => cooperativity.sqrt().recip(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelFit {
    pub model: ScalingModel,
    pub coefficient: f64,
    /// `max |fit / data - 1|` over the fitted points.
    pub max_relative_residual: f64,
}

impl ModelFit {
    pub fn predict(&self, cooperativity: f64) -> f64 {
        self.coefficient * self.model.shape(cooperativity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub measurement: ModelFit,
    pub alternative: ModelFit,
}

impl ScalingFit {
    /// The `ln(C)/C` form stays within a factor-2 band of the data.
    pub fn matches(&self) -> bool {
        self.measurement.max_relative_residual < 1.0
    }

    /// The `ln(C)/C` form describes the data better than `1/sqrt(C)`.
    pub fn preferred(&self) -> bool {
        self.measurement.max_relative_residual < self.alternative.max_relative_residual
    }
}

/// Least-squares fit of the single free coefficient in log space, i.e.
/// minimizing squared relative deviations.
pub fn fit_scaling_model(points: &[(f64, f64)], model: ScalingModel) -> Result<ModelFit> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("no points to fit".into()));
    }
    if points.iter().any(|&(c, e)| !(c > 1.0) || !(e > 0.0)) {
        return Err(Error::InvalidParameter(
            "scaling fit needs cooperativity > 1 and positive errors".into(),
        ));
    }
    let log_coefficient = points
        .iter()
        .map(|&(c, e)| e.ln() - model.shape(c).ln())
        .sum::<f64>()
        / points.len() as f64;
    let coefficient = log_coefficient.exp();
    let max_relative_residual = points
        .iter()
        .map(|&(c, e)| (coefficient * model.shape(c) / e - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ModelFit {
        model,
        coefficient,
        max_relative_residual,
    })
}

/// Fits an optimized curve against `A ln(C)/C` and, for comparison, `B/sqrt(C)`.
pub fn fit_measurement_scaling(curve: &[OptimizationResult]) -> Result<ScalingFit> {
    if let Some(r) = curve.iter().find(|r| !r.converged) {
        return Err(Error::InvalidParameter(format!(
            "curve point at cooperativity {} did not converge",
            r.problem.cooperativity
        )));
    }
    let points: Vec<(f64, f64)> = curve
        .iter()
        .map(|r| (r.problem.cooperativity, r.error))
        .collect();
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(c, _)| {
            (lo.min(c), hi.max(c))
        });
    if !(hi / lo >= 100.0 * (1.0 - 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "scaling fit needs at least two decades of cooperativity, got [{lo}, {hi}]"
        )));
    }
    Ok(ScalingFit {
        measurement: fit_scaling_model(&points, ScalingModel::LogOverC)?,
        alternative: fit_scaling_model(&points, ScalingModel::InverseSqrt)?,
    })
}

/// Common prefactor on both terms of the unitary-gate error budget
/// `c (gamma delta / g^2 + kappa / delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetCoefficient(pub f64);

impl BudgetCoefficient {
    pub const UNIT: BudgetCoefficient = BudgetCoefficient(1.0);
    /// Prefactor 1/2, which puts the balanced budget at `1/sqrt(C)`: an error
    /// of 0.1 (F = 90%) at `g^2/(kappa gamma) = 100`.
    pub const HALF: BudgetCoefficient = BudgetCoefficient(0.5);
}

impl Default for BudgetCoefficient {
    fn default() -> Self {
        BudgetCoefficient::HALF
    }
}

/// Raw rates of a Raman-assisted controlled-interaction gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlledInteractionRates {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    /// Detuning of the Raman transition from the cavity mode.
    pub delta: f64,
    /// Rabi frequency of the classical Raman beam.
    pub rabi: f64,
    /// Detuning of the Raman beam from the excited state.
    pub raman_detuning: f64,
}

impl ControlledInteractionRates {
    pub fn cooperativity(&self) -> f64 {
        self.g * self.g / (self.kappa * self.gamma)
    }

    pub fn g_eff(&self) -> f64 {
        self.g * self.rabi / self.raman_detuning
    }

    pub fn gamma_eff(&self) -> f64 {
        self.gamma * (self.rabi / self.raman_detuning).powi(2)
    }

    /// Cavity-mediated atom-atom coupling.
    pub fn chi(&self) -> f64 {
        self.g_eff().powi(2) / self.delta
    }

    pub fn kappa_eff(&self) -> f64 {
        self.kappa * self.g_eff().powi(2) / (self.delta * self.delta)
    }

    /// Spontaneous-emission probability during a gate of duration `1/chi`.
    pub fn eps_gamma(&self) -> f64 {
        self.gamma_eff() / self.chi()
    }

    /// Cavity-decay probability during a gate of duration `1/chi`.
    pub fn eps_kappa(&self) -> f64 {
        self.kappa_eff() / self.chi()
    }

    /// `g sqrt(kappa/gamma)`, balancing the two budget terms.
    pub fn optimal_delta(&self) -> f64 {
        self.g * (self.kappa / self.gamma).sqrt()
    }

    pub fn budget_error(&self, coefficient: BudgetCoefficient) -> f64 {
        coefficient.0 * (self.eps_gamma() + self.eps_kappa())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryComparisonParams {
    pub cooperativity: f64,
    pub rates: Option<ControlledInteractionRates>,
}

impl UnitaryComparisonParams {
    pub fn new(cooperativity: f64) -> Result<Self> {
        if !(cooperativity > 0.0) || !cooperativity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cooperativity must be finite and positive, got {cooperativity}"
            )));
        }
        Ok(UnitaryComparisonParams {
            cooperativity,
            rates: None,
        })
    }

    pub fn from_rates(rates: ControlledInteractionRates) -> Result<Self> {
        let mut p = UnitaryComparisonParams::new(rates.cooperativity())?;
        p.rates = Some(rates);
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryError {
    /// `min_delta c (gamma delta / g^2 + kappa / delta) = 2 c / sqrt(C)`.
    pub error: f64,
    /// Minimizing detuning, when raw rates are known.
    pub optimal_delta: Option<f64>,
}

pub fn unitary_scheme_error(
    params: &UnitaryComparisonParams,
    coefficient: BudgetCoefficient,
) -> UnitaryError {
    UnitaryError {
        error: 2.0 * coefficient.0 / params.cooperativity.sqrt(),
        optimal_delta: params.rates.map(|r| r.optimal_delta()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FinesseScheme {
    /// Measurement scheme with fitted coefficient `A` of `A ln(C)/C`.
    Measurement {
        coefficient: f64,
    },
    Unitary {
        coefficient: BudgetCoefficient,
    },
}

impl FinesseScheme {
    pub fn error_at(&self, cooperativity: f64) -> f64 {
        match *self {
            FinesseScheme::Measurement { coefficient } => {
                coefficient * ScalingModel::LogOverC.shape(cooperativity)
            }
            FinesseScheme::Unitary { coefficient } => 2.0 * coefficient.0 / cooperativity.sqrt(),
        }
    }
}

/// Cooperativity needed to reach `target_error`.
pub fn finesse_requirement(target_error: f64, scheme: FinesseScheme) -> Result<f64> {
    if !(target_error > 0.0 && target_error < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target error must lie in (0, 1), got {target_error}"
        )));
    }
    match scheme {
        FinesseScheme::Unitary { coefficient } => {
            let c = (2.0 * coefficient.0 / target_error).powi(2);
            if !c.is_finite() || !(c > 0.0) {
                return Err(Error::InfeasibleConstraint(format!(
                    "no finite cooperativity reaches error {target_error}"
                )));
            }
            Ok(c)
        }
        FinesseScheme::Measurement { coefficient } => {
            if !(coefficient > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "scaling coefficient must be positive, got {coefficient}"
                )));
            }
            // Solve A y exp(-y) = target with y = ln C on the decreasing
            // branch y > 1.
            let residual = |y: f64| coefficient.ln() + y.ln() - y - target_error.ln();
            let (mut lo, mut hi) = (1.0, 700.0);
            if residual(lo) <= 0.0 {
                return Err(Error::InfeasibleConstraint(format!(
                    "error {target_error} is above the ln(C)/C maximum {}",
                    coefficient / std::f64::consts::E
                )));
            }
            if residual(hi) > 0.0 {
                return Err(Error::InfeasibleConstraint(format!(
                    "error {target_error} is below the representable floor"
                )));
            }
            let mut y = 0.5 * (lo + hi);
            for _ in 0..200 {
                let r = residual(y);
                if r.abs() < 1e-14 {
                    break;
                }
                if r > 0.0 {
                    lo = y;
                } else {
                    hi = y;
                }
                let newton = y - r / (1.0 / y - 1.0);
                y = if newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
                if hi - lo < 1e-15 * hi {
                    break;
                }
            }
            Ok(y.exp())
        }
    }
}
