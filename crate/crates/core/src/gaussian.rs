//! The vacuum-noise Gaussian `p0(x) = exp(-x^2)/sqrt(pi)` (variance 1/2) and
//! its tail masses, evaluated without cancellation in either tail.

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Homodyne outcome density for an undisplaced coherent state.
#[inline]
pub fn p0(x: f64) -> f64 {
    (-x * x).exp() * FRAC_1_SQRT_PI
}

/// Mass of `p0` on `(-inf, x]`.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x)
}

/// Mass of `p0` on `[x, inf)`.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x)
}

/// Mass of `p0` on `[lo, hi]`; either bound may be infinite.
#[inline]
pub fn interval_mass(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        sf(lo) - sf(hi)
    } else if hi <= 0.0 {
        cdf(hi) - cdf(lo)
    } else {
        1.0 - cdf(lo) - sf(hi)
    }
}

/// Standard deviation of `p0`.
pub const SIGMA: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_value() {
        assert!((p0(0.0) - 0.564_189_583_5).abs() < 1e-10);
        assert!((p0(0.0) - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn tails_are_complementary() {
        for &x in &[-7.0, -1.3, 0.0, 0.4, 5.5] {
            assert!((cdf(x) + sf(x) - 1.0).abs() < 1e-15);
        }
        // Far tail stays relative-accurate.
        let t = sf(8.0);
        assert!(t > 0.0 && t < 1e-28);
    }

    #[test]
    fn symmetric_interval_is_erf() {
        for &a in &[0.1, 0.7, 2.0, 4.0] {
            assert!((interval_mass(-a, a) - libm::erf(a)).abs() < 1e-15);
        }
        assert_eq!(interval_mass(f64::NEG_INFINITY, f64::INFINITY), 1.0);
        assert_eq!(interval_mass(1.0, 1.0), 0.0);
    }
}
