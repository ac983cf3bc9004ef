//! Coherent-amplitude response of a driven two-sided cavity containing `N`
//! atoms in the coupled ground state.
//!
//! All rates share one angular-frequency unit; only dimensionless ratios leave
//! this module. Noise operators are dropped: the fields are coherent states and
//! the quadrature noise enters downstream as a fixed variance of 1/2.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Atom-cavity coupling `g`.
    pub g: f64,
    /// Decay through the input mirror.
    pub kappa_a: f64,
    /// Decay through the output (detected) mirror.
    pub kappa_b: f64,
    /// Intracavity loss into all other modes.
    pub kappa_loss: f64,
    /// Excited-state decay rate.
    pub gamma: f64,
    /// Atom-cavity detuning.
    pub delta: f64,
    /// Drive detuning from the cavity resonance.
    pub omega: f64,
    /// Detection efficiency of the transmitted light.
    pub eta: f64,
}

impl CavityParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        g: f64,
        kappa_a: f64,
        kappa_b: f64,
        kappa_loss: f64,
        gamma: f64,
        delta: f64,
        omega: f64,
        eta: f64,
    ) -> Result<Self> {
        let p = CavityParams {
            g,
            kappa_a,
            kappa_b,
            kappa_loss,
            gamma,
            delta,
            omega,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Impedance-matched (`kappa_b = kappa_a + kappa_loss`), lossless, unit
    /// efficiency cavity with the requested `g^2/(kappa*gamma)`, driven on
    /// cavity resonance and detuned by `delta` from the atoms.
    pub fn matched(cooperativity: f64, kappa: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(cooperativity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cooperativity must be positive, got {cooperativity}"
            )));
        }
        let g = (cooperativity * kappa * gamma).sqrt();
        CavityParams::new(g, kappa / 2.0, kappa / 2.0, 0.0, gamma, delta, 0.0, 1.0)
    }

    pub fn kappa_total(&self) -> f64 {
        self.kappa_a + self.kappa_b + self.kappa_loss
    }

    /// Bare `g^2/(kappa*gamma)` without mirror or detector corrections.
    pub fn cooperativity(&self) -> f64 {
        self.g * self.g / (self.kappa_total() * self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.g,
            self.kappa_a,
            self.kappa_b,
            self.kappa_loss,
            self.gamma,
            self.delta,
            self.omega,
            self.eta,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(
                "cavity parameters must be finite".into(),
            ));
        }
        if !(self.g > 0.0) || !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "g and gamma must be positive (g = {}, gamma = {})",
                self.g, self.gamma
            )));
        }
        if self.kappa_a < 0.0 || self.kappa_b < 0.0 || self.kappa_loss < 0.0 {
            return Err(Error::InvalidParameter(
                "cavity decay rates must be nonnegative".into(),
            ));
        }
        if !(self.kappa_a + self.kappa_b > 0.0) {
            return Err(Error::InvalidParameter(
                "kappa_a + kappa_b must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in [0, 1], got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Dimensionless coherent amplitude (or amplitude ratio).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexAmplitude {
    pub re: f64,
    pub im: f64,
}

impl ComplexAmplitude {
    pub fn new(re: f64, im: f64) -> Self {
        ComplexAmplitude { re, im }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }

    /// Phase in `(-pi, pi]`.
    pub fn phase(&self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for ComplexAmplitude {
    fn from(z: Complex64) -> Self {
        ComplexAmplitude { re: z.re, im: z.im }
    }
}

impl From<ComplexAmplitude> for Complex64 {
    fn from(z: ComplexAmplitude) -> Self {
        z.to_complex()
    }
}

fn response_denominator(params: &CavityParams, n_atoms: u32) -> Complex64 {
    let kappa = params.kappa_total();
    let atomic = Complex64::new(params.gamma / 2.0, params.delta - params.omega);
    Complex64::new(kappa / 2.0, -params.omega) + params.g * params.g * f64::from(n_atoms) / atomic
}

fn checked_denominator(params: &CavityParams, n_atoms: u32) -> Result<Complex64> {
    if params.kappa_total() == 0.0 && params.omega == 0.0 && n_atoms == 0 {
        return Err(Error::SingularTransfer);
    }
    params.validate()?;
    let d = response_denominator(params, n_atoms);
    if d.norm_sqr() == 0.0 || !d.is_finite() {
        return Err(Error::SingularTransfer);
    }
    Ok(d)
}

/// Intracavity amplitude per unit input amplitude, `c / a_in`.
pub fn cavity_transfer(params: &CavityParams, n_atoms: u32) -> Result<ComplexAmplitude> {
    let d = checked_denominator(params, n_atoms)?;
    Ok((params.kappa_a.sqrt() / d).into())
}

/// Transmitted amplitude per unit input amplitude, `b_out / a_in`.
pub fn transmission_amplitude(params: &CavityParams, n_atoms: u32) -> Result<ComplexAmplitude> {
    let d = checked_denominator(params, n_atoms)?;
    Ok((-(params.kappa_a * params.kappa_b).sqrt() / d).into())
}

/// `|beta_N - beta_0|^2` for a pulse with per-atom scattering probability
/// `theta_n`: `N^2 g^2 kappa_b / (gamma (kappa^2/4 + omega^2)) * theta_n`.
///
/// The homodyne quadrature is `x = sqrt(2) Re(beta)`, so the outcome center
/// `x_N` satisfies `x_N^2 = 2 |beta_N - beta_0|^2`.
pub fn displacement_sq(params: &CavityParams, n_atoms: u32, theta_n: f64) -> Result<f64> {
    params.validate()?;
    if !(theta_n >= 0.0) || !theta_n.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scattering probability must be finite and nonnegative, got {theta_n}"
        )));
    }
    let kappa = params.kappa_total();
    let n = f64::from(n_atoms);
    let lorentz = kappa * kappa / 4.0 + params.omega * params.omega;
    Ok(n * n * params.g * params.g * params.kappa_b / (params.gamma * lorentz) * theta_n)
}

/// Signal-to-noise figure `|beta_N - beta_0|^2 / theta_N`.
pub fn signal_to_noise(params: &CavityParams, n_atoms: u32) -> Result<f64> {
    displacement_sq(params, n_atoms, 1.0)
}

/// Effective `g^2/(kappa*gamma)` seen by the homodyne measurement, including
/// the output-mirror mismatch factor `2 kappa_b / kappa` and detector efficiency.
pub fn effective_cooperativity(params: &CavityParams) -> Result<f64> {
    params.validate()?;
    let kappa = params.kappa_total();
    Ok(params.cooperativity() * (2.0 * params.kappa_b / kappa) * params.eta)
}
