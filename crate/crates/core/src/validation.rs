//! Comparison of sampled outcomes with the analytic distributions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::outcome_distributions::{
    cdf_total, component_mass, p_atoms, p_total, AcceptanceWindow, OutcomeModel, PulseConfig,
};
use crate::protocol_sim::Histogram;

/// A cumulative distribution tabulated on a uniform grid and evaluated by
/// cubic Hermite interpolation from values and densities. Below the grid the
/// value is 0, above it 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    lo: f64,
    step: f64,
    values: Vec<f64>,
    densities: Vec<f64>,
}

impl TabulatedCdf {
    pub fn new<C, P>(lo: f64, hi: f64, points: usize, cdf: C, pdf: P) -> Result<Self>
    where
        C: Fn(f64) -> Result<f64> + Sync,
        P: Fn(f64) -> Result<f64> + Sync,
    {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || points < 2 {
            return Err(Error::InvalidParameter(
                "table needs finite lo < hi and at least two points".into(),
            ));
        }
        let step = (hi - lo) / (points - 1) as f64;
        let rows: Vec<(f64, f64)> = (0..points)
            .into_par_iter()
            .map(|i| {
                let x = lo + step * i as f64;
                Ok((cdf(x)?, pdf(x)?))
            })
            .collect::<Result<_>>()?;
        let (values, densities) = rows.into_iter().unzip();
        Ok(TabulatedCdf {
            lo,
            step,
            values,
            densities,
        })
    }

    /// Total outcome CDF of `model`, tabulated from 10 noise widths below
    /// the lowest center to 10 above the highest.
    pub fn for_model(model: &OutcomeModel, points: usize) -> Result<Self> {
        let top = model.prior().len().saturating_sub(1) as u32;
        let lo = -10.0;
        let hi = model.pulse.x_center(top) + 10.0;
        Self::new(
            lo,
            hi,
            points,
            |x| cdf_total(x, model),
            |x| p_total(x, model),
        )
    }

    /// CDF of the outcome given `N` atoms in `|f>` (normalized to 1).
    pub fn for_atom_number(n: u32, pulse: &PulseConfig, points: usize) -> Result<Self> {
        let lo = -10.0;
        let hi = pulse.x_center(n) + 10.0;
        Self::new(
            lo,
            hi,
            points,
            |x| {
                Ok(
                    component_mass(n, &AcceptanceWindow::new(f64::NEG_INFINITY, x)?, pulse)?
                        .total(),
                )
            },
            |x| p_atoms(n, x, pulse),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        let t = (x - self.lo) / self.step;
        if t.is_nan() || t < 0.0 {
            return 0.0;
        }
        if t >= last as f64 {
            return 1.0;
        }
        let i = (t.floor() as usize).min(last - 1);
        let s = t - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (
            self.densities[i] * self.step,
            self.densities[i + 1] * self.step,
        );
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        v.clamp(0.0, 1.0)
    }
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` (sorted in place) and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_unstable_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Per-bin agreement of a histogram with exact bin masses.
#[derive(Debug, Clone, PartialEq)]
pub struct BinCheck {
    /// Bins with expected count above the threshold.
    pub checked: usize,
    /// Of those, bins within three standard deviations.
    pub within: usize,
    pub worst_z: f64,
}

impl BinCheck {
    pub fn fraction_within(&self) -> f64 {
        if self.checked == 0 {
            1.0
        } else {
            self.within as f64 / self.checked as f64
        }
    }
}

/// Compares histogram counts with `n * mass(bin)`, using the binomial
/// standard deviation of the expected count. Bins expecting fewer than
/// `min_expected` samples are skipped.
pub fn check_bins<M>(hist: &Histogram, mass: M, min_expected: f64) -> Result<BinCheck>
where
    M: Fn(f64, f64) -> Result<f64> + Sync,
{
    let n = hist.normalization as f64;
    let zs: Vec<Option<f64>> = hist
        .edges
        .par_windows(2)
        .zip(hist.counts.par_iter())
        .map(|(w, &count)| {
            let p = mass(w[0], w[1])?;
            let expected = n * p;
            if expected < min_expected {
                return Ok(None);
            }
            let sd = (n * p * (1.0 - p)).sqrt();
            Ok(Some((count as f64 - expected).abs() / sd))
        })
        .collect::<Result<_>>()?;
    let checked: Vec<f64> = zs.into_iter().flatten().collect();
    Ok(BinCheck {
        checked: checked.len(),
        within: checked.iter().filter(|z| **z <= 3.0).count(),
        worst_z: checked.iter().copied().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian;

    #[test]
    fn hermite_table_reproduces_gaussian_cdf() {
        let t = TabulatedCdf::new(
            -8.0,
            8.0,
            1601,
            |x| Ok(gaussian::cdf(x)),
            |x| Ok(gaussian::p0(x)),
        )
        .unwrap();
        for i in 0..=1000 {
            let x = -9.0 + 0.018 * i as f64;
            assert!((t.eval(x) - gaussian::cdf(x)).abs() < 1e-9, "x = {x}");
        }
        assert!(TabulatedCdf::new(1.0, 1.0, 10, |_| Ok(0.0), |_| Ok(0.0)).is_err());
    }

    #[test]
    fn ks_of_exact_quantiles_is_half_step() {
        // Samples at the midpoints of n equal-probability cells give D = 1/(2n).
        let n = 1000;
        let mut xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn model_table_is_a_cdf() {
        let model = OutcomeModel::two_atom(PulseConfig::new(0.2, 100.0).unwrap());
        let t = TabulatedCdf::for_model(&model, 801).unwrap();
        let mut prev = 0.0;
        for i in 0..=400 {
            let x = -11.0 + 0.1 * i as f64;
            let v = t.eval(x);
            assert!(v + 1e-12 >= prev);
            prev = v;
        }
        assert!(t.eval(-10.5) == 0.0 && t.eval(1e3) == 1.0);
        assert!((t.eval(2.0) - cdf_total(2.0, &model).unwrap()).abs() < 1e-8);
    }
}
