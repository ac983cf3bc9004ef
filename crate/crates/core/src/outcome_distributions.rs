//! Homodyne outcome densities for `N` atoms in the coupled state, split into
//! the branch without spontaneous emission and the branch where at least one
//! atom decayed during the probe pulse.
//!
//! The dimensionless quadrature `x` has vacuum variance 1/2. With `N` atoms and
//! no decay the outcome Gaussian sits at `x_N = 2 N sqrt(theta * C)`. A decay
//! at accumulated scattering `t < theta` freezes that atom's contribution at
//! `x_1 * t / theta`, and the decayed atom is lost to the entangled subspace.
//!
//! Window masses are computed as one-dimensional integrals over the decay time
//! of Gaussian interval masses, so only the decay clock is ever integrated
//! numerically.

use crate::error::{Error, Result};
use crate::gaussian;
use crate::quadrature::{integrate_with_breaks, Tolerance};

pub use crate::gaussian::p0;

/// Probe-pulse configuration: per-atom scattering probability and effective
/// cooperativity `g^2/(kappa*gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseConfig {
    theta: f64,
    cooperativity: f64,
}

impl PulseConfig {
    pub fn new(theta: f64, cooperativity: f64) -> Result<Self> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "scattering probability must be finite and nonnegative, got {theta}"
            )));
        }
        if !(cooperativity > 0.0) || !cooperativity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cooperativity must be finite and positive, got {cooperativity}"
            )));
        }
        Ok(PulseConfig {
            theta,
            cooperativity,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn cooperativity(&self) -> f64 {
        self.cooperativity
    }

    /// Center of the no-decay Gaussian for `n` atoms.
    pub fn x_center(&self, n: u32) -> f64 {
        2.0 * f64::from(n) * (self.theta * self.cooperativity).sqrt()
    }

    pub fn x1(&self) -> f64 {
        self.x_center(1)
    }

    /// Displacement accrued per unit of scattering probability, `x_1 / theta`.
    /// Only meaningful for `theta > 0`.
    fn slope(&self) -> f64 {
        2.0 * (self.cooperativity / self.theta).sqrt()
    }
}

/// Homodyne acceptance interval `(x_a, x_b)`. Infinite ends are allowed so
/// that tail masses can be expressed as windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceWindow {
    pub x_a: f64,
    pub x_b: f64,
}

impl AcceptanceWindow {
    pub fn new(x_a: f64, x_b: f64) -> Result<Self> {
        if x_a.is_nan() || x_b.is_nan() || !(x_a < x_b) {
            return Err(Error::InvalidParameter(format!(
                "acceptance window requires x_a < x_b, got ({x_a}, {x_b})"
            )));
        }
        if x_a == f64::INFINITY || x_b == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!(
                "acceptance window ({x_a}, {x_b}) is empty"
            )));
        }
        Ok(AcceptanceWindow { x_a, x_b })
    }

    pub fn unbounded() -> Self {
        AcceptanceWindow {
            x_a: f64::NEG_INFINITY,
            x_b: f64::INFINITY,
        }
    }

    /// Symmetric window `center ± half_width`.
    pub fn around(center: f64, half_width: f64) -> Result<Self> {
        AcceptanceWindow::new(center - half_width, center + half_width)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.x_a < x && x < self.x_b
    }

    pub fn width(&self) -> f64 {
        self.x_b - self.x_a
    }
}

/// Pulse plus prior over the number of atoms in the coupled state.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    pub pulse: PulseConfig,
    prior: Vec<f64>,
}

impl OutcomeModel {
    /// `prior[n]` is the probability of `n` atoms in the coupled state.
    pub fn new(pulse: PulseConfig, prior: Vec<f64>) -> Result<Self> {
        if prior.is_empty() {
            return Err(Error::InvalidParameter("prior must be nonempty".into()));
        }
        if prior.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "prior weights must be finite and nonnegative: {prior:?}"
            )));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "prior weights must sum to 1, got {total}"
            )));
        }
        Ok(OutcomeModel { pulse, prior })
    }

    /// Two atoms prepared in equal superpositions: `(1/4, 1/2, 1/4)`.
    pub fn two_atom(pulse: PulseConfig) -> Self {
        OutcomeModel {
            pulse,
            prior: vec![0.25, 0.5, 0.25],
        }
    }

    /// `m` atoms prepared in equal superpositions: `Binomial(m, 1/2)`.
    pub fn binomial(pulse: PulseConfig, m: u32) -> Self {
        let scale = 0.5f64.powi(m as i32);
        let mut prior = Vec::with_capacity(m as usize + 1);
        let mut c = 1.0;
        for k in 0..=m {
            prior.push(c * scale);
            c = c * f64::from(m - k) / f64::from(k + 1);
        }
        OutcomeModel { pulse, prior }
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    fn components(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.prior
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(n, w)| (n as u32, *w))
    }
}

/// Interior breakpoints in the decay-time variable for features at the given
/// quadrature values.
fn time_breaks(features: &[f64], offset: f64, slope: f64, out: &mut Vec<f64>) {
    for &x in features {
        for shift in [-4.0, 0.0, 4.0] {
            let t = (x + shift - offset) / slope;
            if t.is_finite() {
                out.push(t);
            }
        }
    }
}

/// `exp(-N theta) p0(x - x_N)`.
pub fn p_no_decay(n: u32, x: f64, pulse: &PulseConfig) -> f64 {
    (-f64::from(n) * pulse.theta).exp() * p0(x - pulse.x_center(n))
}

/// Density of outcomes for one atom that decayed before the end of the pulse.
pub fn p_decay_one(x: f64, pulse: &PulseConfig) -> Result<f64> {
    if pulse.theta == 0.0 {
        return Ok(0.0);
    }
    let k = pulse.slope();
    let mut breaks = Vec::with_capacity(3);
    time_breaks(&[x], 0.0, k, &mut breaks);
    let r = integrate_with_breaks(
        |t: f64| (-t).exp() * p0(x - k * t),
        0.0,
        pulse.theta,
        &breaks,
        Tolerance::DENSITY,
    )?;
    Ok(r.value)
}

/// Density of outcomes for two atoms where at least one decayed.
///
/// The first term covers exactly one decay (either atom), the other atom
/// contributing its full `x_1`. The both-decayed double integral over
/// `(t1, t2)` in `[0, theta]^2` is reduced with `s = t1 + t2`, whose measure is
/// `min(s, 2 theta - s) ds`.
pub fn p_decay_two(x: f64, pulse: &PulseConfig) -> Result<f64> {
    let theta = pulse.theta;
    if theta == 0.0 {
        return Ok(0.0);
    }
    let k = pulse.slope();
    let x1 = pulse.x1();

    let mut breaks = Vec::with_capacity(3);
    time_breaks(&[x], x1, k, &mut breaks);
    let one = integrate_with_breaks(
        |t: f64| (-theta - t).exp() * p0(x - x1 - k * t),
        0.0,
        theta,
        &breaks,
        Tolerance::DENSITY,
    )?;

    breaks.clear();
    breaks.push(theta);
    time_breaks(&[x], 0.0, k, &mut breaks);
    let both = integrate_with_breaks(
        |s: f64| s.min(2.0 * theta - s) * (-s).exp() * p0(x - k * s),
        0.0,
        2.0 * theta,
        &breaks,
        Tolerance::DENSITY,
    )?;
    Ok(2.0 * one.value + both.value)
}

/// Decay-branch density for `n` atoms. Only `n <= 2` is modeled.
pub fn p_decay(n: u32, x: f64, pulse: &PulseConfig) -> Result<f64> {
    match n {
        0 => Ok(0.0),
        1 => p_decay_one(x, pulse),
        2 => p_decay_two(x, pulse),
        _ if pulse.theta == 0.0 => Ok(0.0),
        _ => Err(Error::Domain(format!(
            "decay-branch density is only modeled for up to two atoms, got {n}"
        ))),
    }
}

/// Full outcome density `p_N = p_ND,N + p_D,N`.
pub fn p_atoms(n: u32, x: f64, pulse: &PulseConfig) -> Result<f64> {
    Ok(p_no_decay(n, x, pulse) + p_decay(n, x, pulse)?)
}

/// Prior-weighted mixture density of the homodyne outcome.
pub fn p_total(x: f64, model: &OutcomeModel) -> Result<f64> {
    model.components().try_fold(
        0.0,
        |acc, (n, w)| Ok(acc + w * p_atoms(n, x, &model.pulse)?),
    )
}

/// Branch masses of one atom-number component inside a window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentMass {
    pub no_decay: f64,
    pub decay: f64,
}

impl ComponentMass {
    pub fn total(&self) -> f64 {
        self.no_decay + self.decay
    }
}

/// Mass of `p_ND,n` and `p_D,n` inside `window`.
pub fn component_mass(
    n: u32,
    window: &AcceptanceWindow,
    pulse: &PulseConfig,
) -> Result<ComponentMass> {
    let (a, b) = (window.x_a, window.x_b);
    let theta = pulse.theta;
    let xn = pulse.x_center(n);
    let no_decay = (-f64::from(n) * theta).exp() * gaussian::interval_mass(a - xn, b - xn);
    if theta == 0.0 || n == 0 {
        return Ok(ComponentMass {
            no_decay,
            decay: 0.0,
        });
    }
    let k = pulse.slope();
    let x1 = pulse.x1();
    let mut breaks = Vec::with_capacity(7);
    let decay = match n {
        1 => {
            time_breaks(&[a, b], 0.0, k, &mut breaks);
            integrate_with_breaks(
                |t: f64| (-t).exp() * gaussian::interval_mass(a - k * t, b - k * t),
                0.0,
                theta,
                &breaks,
                Tolerance::MASS,
            )?
            .value
        }
        2 => {
            time_breaks(&[a, b], x1, k, &mut breaks);
            let one = integrate_with_breaks(
                |t: f64| {
                    let mu = x1 + k * t;
                    (-theta - t).exp() * gaussian::interval_mass(a - mu, b - mu)
                },
                0.0,
                theta,
                &breaks,
                Tolerance::MASS,
            )?;
            breaks.clear();
            breaks.push(theta);
            time_breaks(&[a, b], 0.0, k, &mut breaks);
            let both = integrate_with_breaks(
                |s: f64| {
                    s.min(2.0 * theta - s)
                        * (-s).exp()
                        * gaussian::interval_mass(a - k * s, b - k * s)
                },
                0.0,
                2.0 * theta,
                &breaks,
                Tolerance::MASS,
            )?;
            2.0 * one.value + both.value
        }
        _ => {
            return Err(Error::Domain(format!(
                "decay-branch mass is only modeled for up to two atoms, got {n}"
            )))
        }
    };
    Ok(ComponentMass { no_decay, decay })
}

/// Per-component masses of the outcome mixture inside one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMasses {
    pub prior: Vec<f64>,
    pub components: Vec<ComponentMass>,
}

impl WindowMasses {
    /// Probability of an outcome inside the window.
    pub fn success(&self) -> f64 {
        self.prior
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.total())
            .sum()
    }

    /// Joint probability of acceptance with one atom coupled and no decay.
    pub fn good(&self) -> f64 {
        match (self.prior.get(1), self.components.get(1)) {
            (Some(w), Some(c)) => w * c.no_decay,
            _ => 0.0,
        }
    }

    /// Joint probability of acceptance with the wrong atom number or a decay.
    pub fn bad(&self) -> f64 {
        self.prior
            .iter()
            .zip(&self.components)
            .enumerate()
            .map(|(n, (w, c))| if n == 1 { w * c.decay } else { w * c.total() })
            .sum()
    }

    pub fn fidelity(&self) -> Result<f64> {
        let s = self.success();
        if !(s > 0.0) {
            return Err(Error::UndefinedConditional);
        }
        Ok(self.good() / s)
    }

    /// `1 - F`, formed from the rejected-state mass directly.
    pub fn infidelity(&self) -> Result<f64> {
        let s = self.success();
        if !(s > 0.0) {
            return Err(Error::UndefinedConditional);
        }
        Ok(self.bad() / s)
    }
}

pub fn window_masses(window: &AcceptanceWindow, model: &OutcomeModel) -> Result<WindowMasses> {
    let components = (0..model.prior.len() as u32)
        .map(|n| {
            if model.prior[n as usize] > 0.0 {
                component_mass(n, window, &model.pulse)
            } else {
                Ok(ComponentMass::default())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowMasses {
        prior: model.prior.clone(),
        components,
    })
}

/// Probability that the homodyne outcome falls inside `window`.
pub fn success_probability(window: &AcceptanceWindow, model: &OutcomeModel) -> Result<f64> {
    Ok(window_masses(window, model)?.success().clamp(0.0, 1.0))
}

/// Mass of the outcome mixture on `(-inf, x]`.
pub fn cdf_total(x: f64, model: &OutcomeModel) -> Result<f64> {
    if x == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let w = AcceptanceWindow::new(f64::NEG_INFINITY, x)?;
    success_probability(&w, model)
}

/// Fidelity with the entangled state conditioned on acceptance: probability of
/// one coupled atom and no decay given an outcome inside `window`.
pub fn fidelity_conditional(window: &AcceptanceWindow, model: &OutcomeModel) -> Result<f64> {
    window_masses(window, model)?.fidelity()
}

/// Lower bound on the fidelity of the repeat-until-success protocol: rejected
/// outcomes below `x_a` are attributed to zero coupled atoms and those above
/// `x_b` to two, both of which can be reset and retried.
///
/// Returns `(numerator, denominator)` of the bound.
fn repeated_bound_parts(
    window: &AcceptanceWindow,
    model: &OutcomeModel,
) -> Result<(f64, f64, f64)> {
    let prior = model.prior();
    if prior.len() != 3 {
        return Err(Error::Domain(format!(
            "repeat-until-success bound is defined for two atoms, prior has {} entries",
            prior.len()
        )));
    }
    let pulse = &model.pulse;
    let theta = pulse.theta;
    let (a, b) = (window.x_a, window.x_b);
    let (x1, x2) = (pulse.x1(), pulse.x_center(2));
    let e1 = (-theta).exp();
    let e2 = (-2.0 * theta).exp();

    let good = prior[1] * e1 * gaussian::interval_mass(a - x1, b - x1);
    let denominator = 1.0 - prior[0] * gaussian::cdf(a) - prior[2] * e2 * gaussian::sf(b - x2);
    // denominator - good, as a sum of nonnegative pieces
    let deficit = prior[0] * gaussian::sf(a)
        + prior[1] * (e1 * (gaussian::cdf(a - x1) + gaussian::sf(b - x1)) - (-theta).exp_m1())
        + prior[2] * (e2 * gaussian::cdf(b - x2) - (-2.0 * theta).exp_m1());
    if !(denominator > 0.0) {
        return Err(Error::Domain(format!(
            "repeated-protocol bound has nonpositive denominator {denominator} for window ({a}, {b})"
        )));
    }
    Ok((good, denominator, deficit))
}

pub fn fidelity_repeated_bound(window: &AcceptanceWindow, model: &OutcomeModel) -> Result<f64> {
    let (good, denominator, _) = repeated_bound_parts(window, model)?;
    Ok(good / denominator)
}

/// `1 - fidelity_repeated_bound`, evaluated without cancellation.
pub fn repeated_bound_infidelity(window: &AcceptanceWindow, model: &OutcomeModel) -> Result<f64> {
    let (_, denominator, deficit) = repeated_bound_parts(window, model)?;
    Ok(deficit / denominator)
}
