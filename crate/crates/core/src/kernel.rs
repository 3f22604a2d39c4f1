//! Radial interaction kernels and the quadrature weight function.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Profile multiplying the `1/r^(2+2s)` singular factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaBar {
    Heaviside,
    PiecewiseLinear,
    Gaussian,
}

impl GammaBar {
    pub fn name(self) -> &'static str {
        match self {
            GammaBar::Heaviside => "heaviside",
            GammaBar::PiecewiseLinear => "linear",
            GammaBar::Gaussian => "gaussian",
        }
    }

    /// Unnormalised shape on `[0, delta]`.
    fn shape(self, r: f64, delta: f64) -> f64 {
        match self {
            GammaBar::Heaviside => 1.0,
            GammaBar::PiecewiseLinear => 1.0 - r / delta,
            GammaBar::Gaussian => (-(r * r) / (delta * delta)).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// `4/(pi eps^4) exp(-r^2/eps^2)`, truncated where the exponential drops below the cutoff.
    Gaussian { epsilon: f64 },
    /// `C gamma_bar(r) / r^(2+2s)` on the disk of radius `delta`.
    BoundedSingular {
        delta: f64,
        s: f64,
        gamma_bar: GammaBar,
    },
    /// `4/(pi delta^2 r^2)` on the disk of radius `delta`.
    HeavisideOverR2 { delta: f64 },
}

/// A nonnegative radial kernel together with its truncation rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Relative threshold below which the Gaussian is treated as zero. Ignored by
    /// the compactly supported families.
    pub cutoff: f64,
}

pub const DEFAULT_CUTOFF: f64 = 1e-7;

impl KernelSpec {
    pub fn gaussian(epsilon: f64, cutoff: f64) -> Self {
        Self {
            family: KernelFamily::Gaussian { epsilon },
            cutoff,
        }
    }

    /// Gaussian kernel whose truncation radius equals `delta` for the given cutoff.
    pub fn gaussian_with_horizon(delta: f64, cutoff: f64) -> Self {
        let epsilon = delta / (-cutoff.ln()).sqrt();
        Self::gaussian(epsilon, cutoff)
    }

    pub fn heaviside(delta: f64) -> Self {
        Self {
            family: KernelFamily::HeavisideOverR2 { delta },
            cutoff: 0.0,
        }
    }

    pub fn singular(delta: f64, s: f64, gamma_bar: GammaBar) -> Self {
        Self {
            family: KernelFamily::BoundedSingular { delta, s, gamma_bar },
            cutoff: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            KernelFamily::Gaussian { epsilon } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::Config(format!("gaussian epsilon must be positive, got {epsilon}")));
                }
                if !(self.cutoff > 0.0) {
                    return Err(Error::Config(format!(
                        "gaussian cutoff must be positive to give a finite horizon, got {}",
                        self.cutoff
                    )));
                }
            }
            KernelFamily::BoundedSingular { delta, s, .. } => {
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(Error::Config(format!("horizon must be positive, got {delta}")));
                }
                if !(0.0..0.5).contains(&s) {
                    return Err(Error::NonIntegrable(s));
                }
            }
            KernelFamily::HeavisideOverR2 { delta } => {
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(Error::Config(format!("horizon must be positive, got {delta}")));
                }
            }
        }
        Ok(())
    }

    /// Effective horizon: the radius beyond which the kernel vanishes.
    ///
    /// A Gaussian with `cutoff >= 1` is identically zero and reports 0.
    pub fn horizon(&self) -> f64 {
        match self.family {
            KernelFamily::Gaussian { epsilon } => {
                if self.cutoff >= 1.0 {
                    0.0
                } else {
                    epsilon * (-self.cutoff.ln()).sqrt()
                }
            }
            KernelFamily::BoundedSingular { delta, .. } | KernelFamily::HeavisideOverR2 { delta } => delta,
        }
    }

    /// Exponent `s` of the `r^-(2+2s)` singularity; 0 for the smooth kernels and for `1/r^2`.
    pub fn singular_exponent(&self) -> f64 {
        match self.family {
            KernelFamily::BoundedSingular { s, .. } => s,
            _ => 0.0,
        }
    }

    /// Kernel value at distance `r`. Singular families return `+inf` at the origin.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("kernel evaluated at negative distance {r}")));
        }
        Ok(self.eval_unchecked(r))
    }

    pub(crate) fn eval_unchecked(&self, r: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian { epsilon } => {
                let e = (-(r * r) / (epsilon * epsilon)).exp();
                if e < self.cutoff {
                    0.0
                } else {
                    4.0 / (PI * epsilon.powi(4)) * e
                }
            }
            KernelFamily::HeavisideOverR2 { delta } => {
                if r > delta {
                    0.0
                } else {
                    4.0 / (PI * delta * delta * r * r)
                }
            }
            KernelFamily::BoundedSingular { delta, s, gamma_bar } => {
                if r > delta {
                    0.0
                } else {
                    singular_constant(delta, s, gamma_bar) * gamma_bar.shape(r, delta) / r.powf(2.0 + 2.0 * s)
                }
            }
        }
    }

    /// Second moment `int gamma |z|^2 dz`; four times the squared long-wave speed.
    pub fn second_moment(&self) -> f64 {
        let delta = self.horizon();
        if delta == 0.0 {
            return 0.0;
        }
        // r^3 gamma(r) is bounded for every admissible family, so a plain rule suffices
        // after removing the r^(-2s) factor through r = rho^(1/(1-2s)).
        let s = self.singular_exponent();
        let q = 1.0 / (1.0 - 2.0 * s);
        let gl = GaussLegendre::new(64);
        let upper = delta.powf(1.0 / q);
        let mut acc = 0.0;
        let pieces = 16;
        for piece in 0..pieces {
            let a = upper * piece as f64 / pieces as f64;
            let b = upper * (piece + 1) as f64 / pieces as f64;
            acc += gl.integrate(a, b, |rho| {
                let r = rho.powf(q);
                let jac = q * rho.powf(q - 1.0);
                2.0 * PI * r * r * r * self.eval_unchecked(r) * jac
            });
        }
        acc
    }

    pub fn describe(&self) -> String {
        match self.family {
            KernelFamily::Gaussian { epsilon } => format!("gaussian(epsilon={epsilon}, cutoff={})", self.cutoff),
            KernelFamily::HeavisideOverR2 { delta } => format!("heaviside(delta={delta})"),
            KernelFamily::BoundedSingular { delta, s, gamma_bar } => {
                format!("singular(delta={delta}, s={s}, profile={})", gamma_bar.name())
            }
        }
    }
}

/// Normalisation of the bounded singular family: chosen so that the second moment
/// equals 4, i.e. unit long-wave speed, matching the Gaussian and `1/r^2` kernels.
fn singular_constant(delta: f64, s: f64, gamma_bar: GammaBar) -> f64 {
    let e = 2.0 - 2.0 * s;
    let moment = match gamma_bar {
        GammaBar::Heaviside => delta.powf(e) / e,
        GammaBar::PiecewiseLinear => delta.powf(e) / (e * (e + 1.0)),
        GammaBar::Gaussian => {
            // int_0^delta exp(-r^2/delta^2) r^(1-2s) dr with r = delta * y^(1/e)
            let gl = GaussLegendre::new(48);
            let m = gl.integrate(0.0, 1.0, |y| (-(y.powf(2.0 / e))).exp());
            delta.powf(e) * m / e
        }
    };
    4.0 / (2.0 * PI * moment)
}

/// Quadrature weight `|z|^2 / |z|_1`.
pub fn weight(z: [f64; 2]) -> Result<f64> {
    let l1 = z[0].abs() + z[1].abs();
    if l1 == 0.0 {
        return Err(Error::Domain("weight function is undefined at z = 0".into()));
    }
    Ok((z[0] * z[0] + z[1] * z[1]) / l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_peak() {
        let eps = 0.1;
        let k = KernelSpec::gaussian(eps, DEFAULT_CUTOFF);
        assert_relative_eq!(k.eval(0.0).unwrap(), 4.0 / (PI * eps.powi(4)), max_relative = 1e-15);
    }

    #[test]
    fn gaussian_cutoff_gives_quarter_horizon() {
        let k = KernelSpec::gaussian_with_horizon(0.25, 1e-7);
        assert_relative_eq!(k.horizon(), 0.25, max_relative = 1e-14);
        assert_eq!(k.eval(0.2501).unwrap(), 0.0);
        assert!(k.eval(0.2499).unwrap() > 0.0);
    }

    #[test]
    fn heaviside_value_at_eighth() {
        // 4 / (pi * (1/16) * (1/64)) = 4096 / pi
        let k = KernelSpec::heaviside(0.25);
        assert_relative_eq!(k.eval(0.125).unwrap(), 4096.0 / PI, max_relative = 1e-15);
        assert_eq!(k.eval(0.3).unwrap(), 0.0);
    }

    #[test]
    fn negative_distance_rejected() {
        let k = KernelSpec::heaviside(0.25);
        assert!(matches!(k.eval(-1e-3), Err(Error::Domain(_))));
    }

    #[test]
    fn weight_values() {
        assert_eq!(weight([1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(weight([1.0, 1.0]).unwrap(), 1.0);
        assert_relative_eq!(weight([3.0, 4.0]).unwrap(), 25.0 / 7.0, max_relative = 1e-15);
        assert!(weight([0.0, 0.0]).is_err());
    }

    #[test]
    fn singular_exponent_bound() {
        assert!(matches!(
            KernelSpec::singular(0.25, 0.5, GammaBar::Heaviside).validate(),
            Err(Error::NonIntegrable(_))
        ));
        assert!(KernelSpec::singular(0.25, 0.3, GammaBar::Gaussian).validate().is_ok());
    }

    #[test]
    fn unit_wave_speed_normalisation() {
        for k in [
            KernelSpec::gaussian_with_horizon(0.25, 1e-7),
            KernelSpec::heaviside(0.25),
            KernelSpec::singular(0.25, 0.25, GammaBar::Heaviside),
            KernelSpec::singular(0.25, 0.1, GammaBar::PiecewiseLinear),
            KernelSpec::singular(0.25, 0.4, GammaBar::Gaussian),
        ] {
            // Gaussian loses a 1e-6 relative tail to the truncation.
            assert_relative_eq!(k.second_moment(), 4.0, max_relative = 1e-5);
        }
    }

    #[test]
    fn zero_kernel_when_cutoff_above_one() {
        let k = KernelSpec::gaussian(0.1, f64::INFINITY);
        assert_eq!(k.horizon(), 0.0);
        assert_eq!(k.eval(0.0).unwrap(), 0.0);
    }
}
