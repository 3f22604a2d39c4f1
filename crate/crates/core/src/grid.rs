//! Lattice geometry and sparse rectangular fields.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values a field can hold: real fields for time stepping, complex ones for
/// frequency-domain checks.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self {
        Self::default()
    }
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Uniform lattice `h Z^2` restricted to `[-(n + n_p), n + n_p]^2`.
///
/// `n` nodes per half-axis span the physical square, `n_p` more form the layer,
/// and `p` is the stencil radius in nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub h: f64,
    pub n: usize,
    pub n_p: usize,
    pub p: usize,
}

impl GridConfig {
    /// Grid for the physical half-width `half_width` with `p` chosen from the horizon.
    pub fn for_domain(half_width: f64, h: f64, n_p: usize, horizon: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("mesh size must be positive, got {h}")));
        }
        let n_real = half_width / h;
        let n = n_real.round();
        if (n - n_real).abs() > 1e-9 * n_real.max(1.0) || n < 1.0 {
            return Err(Error::Config(format!(
                "half width {half_width} is not a positive multiple of h = {h}"
            )));
        }
        Ok(Self {
            h,
            n: n as usize,
            n_p,
            p: required_radius(horizon, h),
        })
    }

    /// Outermost node index `N = n + n_p`.
    pub fn outer(&self) -> i64 {
        (self.n + self.n_p) as i64
    }

    /// Number of nodes per axis on the full grid.
    pub fn nodes_per_axis(&self) -> usize {
        2 * (self.n + self.n_p) + 1
    }

    pub fn full_axis(&self) -> IndexSet {
        IndexSet::range(-self.outer(), self.outer())
    }

    pub fn physical_axis(&self) -> IndexSet {
        IndexSet::range(-(self.n as i64), self.n as i64)
    }

    pub fn full_support(&self) -> Arc<Support> {
        Arc::new(Support::new(self.full_axis(), self.full_axis()))
    }

    pub fn physical_support(&self) -> Arc<Support> {
        Arc::new(Support::new(self.physical_axis(), self.physical_axis()))
    }
}

/// Smallest stencil radius covering the horizon. Values within 1e-9 of an
/// integer multiple of h are not rounded up.
pub fn required_radius(horizon: f64, h: f64) -> usize {
    if horizon <= 0.0 {
        return 0;
    }
    let ratio = horizon / h;
    (ratio - 1e-9 * ratio.max(1.0)).ceil().max(1.0) as usize
}

const ABSENT: u32 = u32::MAX;

/// Sorted set of lattice indices along one axis with constant-time lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    indices: Vec<i64>,
    lo: i64,
    slots: Vec<u32>,
}

impl IndexSet {
    pub fn from_sorted(mut indices: Vec<i64>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        let (lo, hi) = match (indices.first(), indices.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0, -1),
        };
        let mut slots = vec![ABSENT; (hi - lo + 1).max(0) as usize];
        for (s, &i) in indices.iter().enumerate() {
            slots[(i - lo) as usize] = s as u32;
        }
        Self { indices, lo, slots }
    }

    /// Contiguous range `lo..=hi`; empty if `hi < lo`.
    pub fn range(lo: i64, hi: i64) -> Self {
        Self::from_sorted((lo..=hi).collect())
    }

    pub fn empty() -> Self {
        Self::from_sorted(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn is_contiguous(&self) -> bool {
        self.indices.len() == self.slots.len()
    }

    #[inline]
    pub fn slot(&self, i: i64) -> Option<usize> {
        let off = i.wrapping_sub(self.lo);
        if off < 0 || off as usize >= self.slots.len() {
            return None;
        }
        let s = self.slots[off as usize];
        (s != ABSENT).then_some(s as usize)
    }

    pub fn contains(&self, i: i64) -> bool {
        self.slot(i).is_some()
    }

    /// Every index within `radius` of a member, clipped to `[lo, hi]`.
    pub fn dilate(&self, radius: i64, lo: i64, hi: i64) -> Self {
        let mut out = Vec::new();
        for &i in &self.indices {
            for j in (i - radius).max(lo)..=(i + radius).min(hi) {
                out.push(j);
            }
        }
        Self::from_sorted(out)
    }
}

/// Product of two index sets: the nodes on which a field is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub axes: [IndexSet; 2],
}

impl Support {
    pub fn new(axis1: IndexSet, axis2: IndexSet) -> Self {
        Self { axes: [axis1, axis2] }
    }

    pub fn len(&self) -> usize {
        self.axes[0].len() * self.axes[1].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn slot(&self, i1: i64, i2: i64) -> Option<usize> {
        let s1 = self.axes[0].slot(i1)?;
        let s2 = self.axes[1].slot(i2)?;
        Some(s1 + self.axes[0].len() * s2)
    }

    /// Nodes in storage order (axis 1 fastest).
    pub fn nodes(&self) -> impl Iterator<Item = [i64; 2]> + '_ {
        self.axes[1]
            .indices()
            .iter()
            .flat_map(move |&i2| self.axes[0].indices().iter().map(move |&i1| [i1, i2]))
    }
}

/// Read access to lattice values; nodes outside the stored region read as zero.
pub trait NodeFn<T> {
    fn at(&self, i1: i64, i2: i64) -> T;

    #[inline]
    fn at_shift(&self, i: [i64; 2], axis: usize, shift: i64) -> T {
        if axis == 0 {
            self.at(i[0] + shift, i[1])
        } else {
            self.at(i[0], i[1] + shift)
        }
    }
}

/// Values on a [`Support`], zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    support: Arc<Support>,
    data: Vec<T>,
}

impl<T: Scalar> Field<T> {
    pub fn zeros(support: Arc<Support>) -> Self {
        let data = vec![T::zero(); support.len()];
        Self { support, data }
    }

    pub fn from_fn(support: Arc<Support>, mut f: impl FnMut(i64, i64) -> T) -> Self {
        let data = support.nodes().map(|[a, b]| f(a, b)).collect();
        Self { support, data }
    }

    pub fn from_data(support: Arc<Support>, data: Vec<T>) -> Result<Self> {
        if data.len() != support.len() {
            return Err(Error::Dimension(format!(
                "field data has {} values but support holds {}",
                data.len(),
                support.len()
            )));
        }
        Ok(Self { support, data })
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, i1: i64, i2: i64) -> T {
        match self.support.slot(i1, i2) {
            Some(s) => self.data[s],
            None => T::zero(),
        }
    }

    /// Writes a value; fails if the node is not stored.
    pub fn set(&mut self, i1: i64, i2: i64, v: T) -> Result<()> {
        match self.support.slot(i1, i2) {
            Some(s) => {
                self.data[s] = v;
                Ok(())
            }
            None => Err(Error::Index(format!("node ({i1}, {i2}) is outside the field support"))),
        }
    }

    pub fn max_modulus(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy onto another support; nodes absent here become zero.
    pub fn restrict(&self, support: Arc<Support>) -> Self {
        Field::from_fn(support, |a, b| self.get(a, b))
    }
}

impl<T: Scalar> NodeFn<T> for Field<T> {
    #[inline]
    fn at(&self, i1: i64, i2: i64) -> T {
        self.get(i1, i2)
    }
}

impl<T, F: Fn(i64, i64) -> T> NodeFn<T> for F {
    #[inline]
    fn at(&self, i1: i64, i2: i64) -> T {
        self(i1, i2)
    }
}
