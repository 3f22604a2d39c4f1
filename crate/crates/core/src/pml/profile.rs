//! Damping profiles along each axis.

use crate::error::{Error, Result};
use crate::grid::{GridConfig, IndexSet};

/// Damping values `sigma_i` at consecutive node indices starting at `lo`; zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisProfile {
    lo: i64,
    values: Vec<f64>,
}

impl AxisProfile {
    pub fn new(lo: i64, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Config(format!("damping values must be finite and nonnegative, got {v}")));
        }
        Ok(Self { lo, values })
    }

    pub fn zero() -> Self {
        Self { lo: 0, values: Vec::new() }
    }

    #[inline]
    pub fn sigma(&self, i: i64) -> f64 {
        let off = i - self.lo;
        if off < 0 {
            return 0.0;
        }
        self.values.get(off as usize).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Indices carrying nonzero damping.
    pub fn active(&self) -> IndexSet {
        IndexSet::from_sorted(
            self.values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(k, _)| self.lo + k as i64)
                .collect(),
        )
    }

    /// `sum_{l = a}^{b - 1} sigma_l` for `a <= b`, and minus the reversed sum otherwise.
    pub fn partial_sum(&self, a: i64, b: i64) -> f64 {
        if a <= b {
            (a..b).map(|l| self.sigma(l)).sum()
        } else {
            -(b..a).map(|l| self.sigma(l)).sum::<f64>()
        }
    }
}

/// Damping along both axes of the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlProfile {
    pub axes: [AxisProfile; 2],
}

impl PmlProfile {
    pub fn zero() -> Self {
        Self {
            axes: [AxisProfile::zero(), AxisProfile::zero()],
        }
    }

    /// Layers on all four sides of the physical square. `layer[m]` is the damping in the
    /// `m`-th cell of the layer counted outward; it sits at node `n + m` on the right and
    /// at node `-n - m - 1` on the left, so the profile is symmetric about `i = -1/2`.
    pub fn mirrored(grid: &GridConfig, layer: &[f64]) -> Result<Self> {
        if layer.len() != grid.n_p {
            return Err(Error::Dimension(format!(
                "layer profile has {} values but the layer is {} nodes thick",
                layer.len(),
                grid.n_p
            )));
        }
        let n = grid.n as i64;
        let np = grid.n_p as i64;
        let lo = -n - np;
        let mut values = vec![0.0; (2 * n + 2 * np) as usize];
        for (m, &s) in layer.iter().enumerate() {
            let m = m as i64;
            values[(n + m - lo) as usize] = s;
            values[(-n - m - 1 - lo) as usize] = s;
        }
        let axis = AxisProfile::new(lo, values)?;
        Ok(Self {
            axes: [axis.clone(), axis],
        })
    }

    /// Constant damping `sigma0` throughout the layer.
    pub fn constant(grid: &GridConfig, sigma0: f64) -> Result<Self> {
        Self::mirrored(grid, &vec![sigma0; grid.n_p])
    }

    pub fn is_zero(&self) -> bool {
        self.axes.iter().all(AxisProfile::is_zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirrored_placement() {
        let g = GridConfig { h: 0.25, n: 4, n_p: 2, p: 1 };
        let prof = PmlProfile::mirrored(&g, &[1.0, 2.0]).unwrap();
        let a = &prof.axes[0];
        assert_eq!((a.sigma(3), a.sigma(4), a.sigma(5), a.sigma(6)), (0.0, 1.0, 2.0, 0.0));
        assert_eq!((a.sigma(-4), a.sigma(-5), a.sigma(-6), a.sigma(-7)), (0.0, 1.0, 2.0, 0.0));
        assert_eq!(a.active().indices(), &[-6, -5, 4, 5]);
        for i in -8..8 {
            assert_eq!(a.sigma(i), a.sigma(-i - 1));
        }
    }

    #[test]
    fn partial_sums() {
        let a = AxisProfile::new(-1, vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(a.partial_sum(0, 2), 6.0);
        assert_eq!(a.partial_sum(2, 0), -6.0);
        assert_eq!(a.partial_sum(-3, 3), 7.0);
    }

    #[test]
    fn rejects_negative_damping() {
        assert!(AxisProfile::new(0, vec![1.0, -0.5]).is_err());
        let g = GridConfig { h: 0.25, n: 4, n_p: 2, p: 1 };
        assert!(PmlProfile::mirrored(&g, &[1.0]).is_err());
    }
}
