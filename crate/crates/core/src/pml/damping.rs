//! Per-cell damping factors, stretched coordinates and extended plane waves.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::profile::{AxisProfile, PmlProfile};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Time-harmonic plane wave `e^{i(kappa . x - omega t)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveMode {
    pub omega: f64,
    pub kappa: [Complex64; 2],
}

impl WaveMode {
    pub fn new(omega: f64, kappa: [Complex64; 2]) -> Self {
        Self { omega, kappa }
    }

    pub fn real(omega: f64, kappa: [f64; 2]) -> Self {
        Self::new(omega, [Complex64::new(kappa[0], 0.0), Complex64::new(kappa[1], 0.0)])
    }

    /// Checks `omega != 0` and that each wave number lies in the admissible strip:
    /// `-pi/h < Re kappa <= pi/h`, `Im kappa <= 0`.
    pub fn validate(&self, h: f64) -> Result<()> {
        if !(self.omega.is_finite() && self.omega != 0.0) {
            return Err(Error::Domain(format!("frequency must be finite and nonzero, got {}", self.omega)));
        }
        for k in self.kappa {
            if !in_strip(k, h) {
                return Err(Error::Domain(format!("wave number {k} lies outside the admissible strip")));
            }
        }
        Ok(())
    }
}

fn in_strip(k: Complex64, h: f64) -> bool {
    k.re > -PI / h && k.re <= PI / h && k.im <= 0.0 && k.re.is_finite() && k.im.is_finite()
}

/// Factor `[2 + i(s/w)(1 - e^{-i k h})] / [2 + i(s/w)(1 - e^{i k h})]` by which one
/// layer cell of damping `sigma` rescales the wave.
pub fn damping_factor(sigma: f64, kappa: Complex64, omega: f64, h: f64) -> Result<Complex64> {
    damping_factor_at(sigma, kappa, omega, h, 0)
}

fn damping_factor_at(sigma: f64, kappa: Complex64, omega: f64, h: f64, depth: usize) -> Result<Complex64> {
    if omega == 0.0 {
        return Err(Error::Domain("damping factor needs a nonzero frequency".into()));
    }
    let c = I * (sigma / omega);
    let num = 2.0 + c * (1.0 - (-I * kappa * h).exp());
    let den = 2.0 + c * (1.0 - (I * kappa * h).exp());
    if den.norm() <= 1e-300 {
        return Err(Error::Singular { depth });
    }
    Ok(num / den)
}

/// Cumulative damping factor after `j` layer cells; for negative `j` the product
/// runs over cells `j..0` and is inverted.
pub fn eta(j: i64, profile: &AxisProfile, kappa: Complex64, omega: f64, h: f64) -> Result<Complex64> {
    let mut acc = Complex64::new(1.0, 0.0);
    if j >= 0 {
        for l in 0..j {
            acc *= damping_factor_at(profile.sigma(l), kappa, omega, h, l as usize)?;
        }
    } else {
        for l in j..0 {
            let f = damping_factor_at(profile.sigma(l), kappa, omega, h, l.unsigned_abs() as usize)?;
            if f.norm() <= 1e-300 {
                return Err(Error::Singular { depth: l.unsigned_abs() as usize });
            }
            acc /= f;
        }
    }
    Ok(acc)
}

/// Decay per layer cell of constant damping `sigma0`, for the first wave-number component.
pub fn decay_rate_mu(mode: &WaveMode, sigma0: f64, h: f64) -> Result<Complex64> {
    mode.validate(h)?;
    damping_factor(sigma0, mode.kappa[0], mode.omega, h)
}

/// Complex coordinate `(i + j) h + i (h / omega) sum_{l < j} sigma_l` of the lattice node
/// reached from `i` after `j` layer cells.
#[derive(Debug, Clone)]
pub struct StretchedCoordinate {
    pub h: f64,
    pub omega: f64,
    pub profile: AxisProfile,
}

impl StretchedCoordinate {
    pub fn z(&self, i: i64, j: i64) -> Complex64 {
        Complex64::new((i + j) as f64 * self.h, self.h / self.omega * self.profile.partial_sum(0, j))
    }
}

/// Plane wave continued through the layer: `w(i, j) = prod_a eta_a(j_a) e^{i kappa_a (i_a + j_a) h}`.
#[derive(Debug, Clone)]
pub struct ExtendedMode {
    pub mode: WaveMode,
    pub profile: PmlProfile,
    pub h: f64,
}

impl ExtendedMode {
    pub fn new(mode: WaveMode, profile: PmlProfile, h: f64) -> Result<Self> {
        mode.validate(h)?;
        Ok(Self { mode, profile, h })
    }

    /// One-axis factor `eta(j) e^{i kappa (i + j) h}`.
    pub fn axis_factor(&self, axis: usize, i: i64, j: i64) -> Result<Complex64> {
        let k = self.mode.kappa[axis];
        let e = eta(j, &self.profile.axes[axis], k, self.mode.omega, self.h)?;
        Ok(e * (I * k * ((i + j) as f64 * self.h)).exp())
    }

    pub fn value(&self, i: [i64; 2], j: [i64; 2]) -> Result<Complex64> {
        Ok(self.axis_factor(0, i[0], j[0])? * self.axis_factor(1, i[1], j[1])?)
    }

    pub fn coordinate(&self, axis: usize) -> StretchedCoordinate {
        StretchedCoordinate {
            h: self.h,
            omega: self.mode.omega,
            profile: self.profile.axes[axis].clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn no_damping_gives_unit_factor() {
        let f = damping_factor(0.0, Complex64::new(3.0, -0.2), 5.0, 0.1).unwrap();
        assert_eq!(f, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn optimal_damping_at_normal_incidence_long_waves() {
        // sigma0 h = 2 nearly annihilates long waves; 1 or 4 leave a third per cell.
        let h = 1.0 / 16.0;
        let k = 0.05;
        let m = |s: f64| decay_rate_mu(&WaveMode::real(k, [k, 0.0]), s / h, h).unwrap().norm();
        assert!(m(2.0) < 1e-3);
        assert_relative_eq!(m(1.0), 1.0 / 3.0, max_relative = 1e-3);
        assert_relative_eq!(m(4.0), 1.0 / 3.0, max_relative = 1e-3);
    }

    #[test]
    fn eta_inverse_for_negative_depth() {
        let prof = AxisProfile::new(-3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let k = Complex64::new(2.0, -0.1);
        let a = eta(-3, &prof, k, 1.5, 0.2).unwrap();
        let b = eta(3, &AxisProfile::new(0, vec![1.0, 2.0, 3.0]).unwrap(), k, 1.5, 0.2).unwrap();
        assert_relative_eq!((a * b).re, 1.0, max_relative = 1e-14);
        assert!((a * b).im.abs() < 1e-14);
    }

    #[test]
    fn strip_validation() {
        let h = 0.1;
        assert!(WaveMode::real(1.0, [PI / h, 0.0]).validate(h).is_ok());
        assert!(WaveMode::real(1.0, [-PI / h, 0.0]).validate(h).is_err());
        assert!(WaveMode::new(1.0, [Complex64::new(1.0, 0.1), Complex64::new(0.0, 0.0)]).validate(h).is_err());
        assert!(WaveMode::real(0.0, [1.0, 0.0]).validate(h).is_err());
    }

    proptest! {
        #[test]
        fn outgoing_waves_decay(
            sh in 1e-6f64..10.0,
            w in 0.5f64..100.0,
            sign in prop::bool::ANY,
            kr in 1e-6f64..0.999_999,
            ki in -20.0f64..=0.0,
        ) {
            let h = 1.0 / 16.0;
            let omega = if sign { w } else { -w };
            let kre = omega.signum() * kr * PI / h;
            let mode = WaveMode::new(omega, [Complex64::new(kre, ki), Complex64::new(0.0, 0.0)]);
            let mu = decay_rate_mu(&mode, sh / h, h).unwrap();
            prop_assert!(mu.norm() < 1.0);
            let mu0 = decay_rate_mu(&mode, 0.0, h).unwrap();
            prop_assert_eq!(mu0.norm(), 1.0);
        }
    }
}
