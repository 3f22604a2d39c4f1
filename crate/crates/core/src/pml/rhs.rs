//! Auxiliary fields and the right-hand sides of the layer system.
//!
//! Each axis carries two families of auxiliary fields, `tilde` (built from forward
//! shifts) and `bar` (backward shifts), indexed by `k = 1..=p`. Corner fields carry a
//! family along each axis and a pair `(k1, k2)`.

use std::sync::Arc;

use super::profile::{AxisProfile, PmlProfile};
use crate::error::{Error, Result};
use crate::grid::{Field, IndexSet, NodeFn, Scalar, Support};
use crate::stencil::{apply_operator_field, Stencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Tilde,
    Bar,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Tilde, Side::Bar];

    pub fn sign(self) -> f64 {
        match self {
            Side::Tilde => 1.0,
            Side::Bar => -1.0,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Corner families. The first letter is the family along axis 2 (it selects which
/// axis-2 field drives the corner), the second the family along axis 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corner {
    TT,
    TB,
    BT,
    BB,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::TT, Corner::TB, Corner::BT, Corner::BB];

    pub fn axis1(self) -> Side {
        match self {
            Corner::TT | Corner::BT => Side::Tilde,
            Corner::TB | Corner::BB => Side::Bar,
        }
    }

    pub fn axis2(self) -> Side {
        match self {
            Corner::TT | Corner::TB => Side::Tilde,
            Corner::BT | Corner::BB => Side::Bar,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// All auxiliary fields of the layer, for `k = 1..=p`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxFields<T> {
    p: usize,
    slabs: [[Vec<Field<T>>; 2]; 2],
    corners: [Vec<Field<T>>; 4],
}

impl<T: Scalar> AuxFields<T> {
    /// Zero fields; `slab_supports[a]` holds the axis-`a` families, `corner_support` the corners.
    pub fn zeros(p: usize, slab_supports: [Arc<Support>; 2], corner_support: Arc<Support>) -> Self {
        let slab = |a: usize| (0..p).map(|_| Field::zeros(slab_supports[a].clone())).collect::<Vec<_>>();
        let corner = || (0..p * p).map(|_| Field::zeros(corner_support.clone())).collect::<Vec<_>>();
        Self {
            p,
            slabs: [[slab(0), slab(1)], [slab(0), slab(1)]],
            corners: [corner(), corner(), corner(), corner()],
        }
    }

    /// Zero fields supported where the damping is active: the axis-`a` families on the
    /// nodes with `sigma_a != 0`, the corners where both are nonzero. Only damped values
    /// of the auxiliary fields enter the system, so nothing is lost by this restriction.
    pub fn for_profile(p: usize, profile: &PmlProfile, full: &IndexSet) -> Self {
        let a1 = intersect(&profile.axes[0].active(), full);
        let a2 = intersect(&profile.axes[1].active(), full);
        Self::zeros(
            p,
            [
                Arc::new(Support::new(a1.clone(), full.clone())),
                Arc::new(Support::new(full.clone(), a2.clone())),
            ],
            Arc::new(Support::new(a1, a2)),
        )
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.p {
            return Err(Error::Index(format!("auxiliary index {k} outside 1..={}", self.p)));
        }
        Ok(())
    }

    pub fn slab(&self, side: Side, axis: usize, k: usize) -> &Field<T> {
        &self.slabs[side.index()][axis][k - 1]
    }

    pub fn slab_mut(&mut self, side: Side, axis: usize, k: usize) -> &mut Field<T> {
        &mut self.slabs[side.index()][axis][k - 1]
    }

    pub fn corner(&self, c: Corner, k1: usize, k2: usize) -> &Field<T> {
        &self.corners[c.index()][(k1 - 1) + self.p * (k2 - 1)]
    }

    pub fn corner_mut(&mut self, c: Corner, k1: usize, k2: usize) -> &mut Field<T> {
        let p = self.p;
        &mut self.corners[c.index()][(k1 - 1) + p * (k2 - 1)]
    }

    pub fn slab_support(&self, axis: usize) -> &Arc<Support> {
        self.slabs[0][axis][0].support()
    }

    pub fn corner_support(&self) -> &Arc<Support> {
        self.corners[0][0].support()
    }

    pub fn all_fields(&self) -> impl Iterator<Item = &Field<T>> {
        self.slabs.iter().flatten().flatten().chain(self.corners.iter().flatten())
    }

    pub fn all_fields_mut(&mut self) -> impl Iterator<Item = &mut Field<T>> {
        self.slabs
            .iter_mut()
            .flatten()
            .flatten()
            .chain(self.corners.iter_mut().flatten())
    }

    pub fn all_finite(&self) -> bool {
        self.all_fields().all(Field::all_finite)
    }

    /// Pointwise `(self + other) / 2`; both must share supports.
    pub fn average(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (o, b) in out.all_fields_mut().zip(other.all_fields()) {
            for (x, &y) in o.data_mut().iter_mut().zip(b.data()) {
                *x = (*x + y) * 0.5;
            }
        }
        out
    }
}

fn intersect(a: &IndexSet, b: &IndexSet) -> IndexSet {
    IndexSet::from_sorted(a.indices().iter().copied().filter(|&i| b.contains(i)).collect())
}

/// `sigma_axis(i_axis) * psi(i)`.
pub struct Damped<'a, T, F> {
    pub psi: &'a F,
    pub sigma: &'a AxisProfile,
    pub axis: usize,
    pub _t: std::marker::PhantomData<T>,
}

impl<'a, T: Scalar, F: NodeFn<T>> NodeFn<T> for Damped<'a, T, F> {
    #[inline]
    fn at(&self, i1: i64, i2: i64) -> T {
        let s = self.sigma.sigma(if self.axis == 0 { i1 } else { i2 });
        if s == 0.0 {
            T::zero()
        } else {
            self.psi.at(i1, i2) * s
        }
    }
}

pub fn damped<'a, T, F>(psi: &'a F, sigma: &'a AxisProfile, axis: usize) -> Damped<'a, T, F> {
    Damped {
        psi,
        sigma,
        axis,
        _t: std::marker::PhantomData,
    }
}

/// Drive of the order-`k` auxiliary equation: a centred difference of `f` shifted by `k` cells.
#[inline]
pub fn drive<T: Scalar>(side: Side, axis: usize, f: &impl NodeFn<T>, i: [i64; 2], k: i64, h: f64) -> T {
    let (a, b) = match side {
        Side::Tilde => (k - 1, k + 1),
        Side::Bar => (-k, -k + 2),
    };
    (f.at_shift(i, axis, a) - f.at_shift(i, axis, b)) * (0.5 / h)
}

/// Neighbour coupled to `i` by the self term: `+1` for tilde, `-1` for bar.
#[inline]
pub fn self_neighbour(side: Side) -> i64 {
    match side {
        Side::Tilde => 1,
        Side::Bar => -1,
    }
}

/// Self-damping term acting on the damped field `g = sigma psi`.
#[inline]
pub fn self_term<T: Scalar>(side: Side, axis: usize, g: &impl NodeFn<T>, i: [i64; 2]) -> T {
    (g.at_shift(i, axis, 0) + g.at_shift(i, axis, self_neighbour(side))) * 0.5
}

/// History term coupling order `k` to the damped lower orders `g(k - l)`, `l = 1..k`.
#[inline]
pub fn history<T: Scalar, G: NodeFn<T>>(
    side: Side,
    axis: usize,
    lower: impl Fn(usize) -> G,
    i: [i64; 2],
    k: usize,
) -> T {
    let s = self_neighbour(side);
    let mut acc = T::zero();
    for l in 1..k {
        let g = lower(k - l);
        let l = l as i64;
        acc += g.at_shift(i, axis, s * (l + 1)) - g.at_shift(i, axis, s * (l - 1));
    }
    acc * 0.5
}

fn slab_rhs<T: Scalar>(
    u: &Field<T>,
    aux: &AuxFields<T>,
    prof: &PmlProfile,
    side: Side,
    axis: usize,
    k: usize,
    h: f64,
) -> Result<Field<T>> {
    aux.check_k(k)?;
    if axis > 1 {
        return Err(Error::Index(format!("axis {axis} outside 0..=1")));
    }
    let sig = &prof.axes[axis];
    let g = damped(aux.slab(side, axis, k), sig, axis);
    let out = Field::from_fn(aux.slab_support(axis).clone(), |a, b| {
        let i = [a, b];
        drive(side, axis, u, i, k as i64, h)
            - self_term(side, axis, &g, i)
            - history(side, axis, |m| damped(aux.slab(side, axis, m), sig, axis), i, k)
    });
    Ok(out)
}

/// Time derivative of the tilde auxiliary field of order `k` along `axis` (0 or 1).
pub fn aux_rhs_tilde<T: Scalar>(
    u: &Field<T>,
    aux: &AuxFields<T>,
    prof: &PmlProfile,
    axis: usize,
    k: usize,
    h: f64,
) -> Result<Field<T>> {
    slab_rhs(u, aux, prof, Side::Tilde, axis, k, h)
}

/// Time derivative of the bar auxiliary field of order `k` along `axis` (0 or 1).
pub fn aux_rhs_bar<T: Scalar>(
    u: &Field<T>,
    aux: &AuxFields<T>,
    prof: &PmlProfile,
    axis: usize,
    k: usize,
    h: f64,
) -> Result<Field<T>> {
    slab_rhs(u, aux, prof, Side::Bar, axis, k, h)
}

/// Time derivative of the corner field `(c, k1, k2)`: the axis-1 operator of family
/// `c.axis1()` applied to the axis-2 field of family `c.axis2()` and order `k2`.
pub fn aux_rhs_corner<T: Scalar>(
    aux: &AuxFields<T>,
    prof: &PmlProfile,
    c: Corner,
    k1: usize,
    k2: usize,
    h: f64,
) -> Result<Field<T>> {
    aux.check_k(k1)?;
    aux.check_k(k2)?;
    let sig = &prof.axes[0];
    let side = c.axis1();
    let f = aux.slab(c.axis2(), 1, k2);
    let g = damped(aux.corner(c, k1, k2), sig, 0);
    Ok(Field::from_fn(aux.corner_support().clone(), |a, b| {
        let i = [a, b];
        drive(side, 0, f, i, k1 as i64, h)
            - self_term(side, 0, &g, i)
            - history(side, 0, |m| damped(aux.corner(c, m, k2), sig, 0), i, k1)
    }))
}

/// `L_h u` plus the layer coupling terms, on the support of `u`.
pub fn main_rhs<T: Scalar>(u: &Field<T>, aux: &AuxFields<T>, st: &Stencil, prof: &PmlProfile) -> Result<Field<T>> {
    if aux.p() != st.radius() {
        return Err(Error::Dimension(format!(
            "auxiliary fields have order {} but the stencil radius is {}",
            aux.p(),
            st.radius()
        )));
    }
    let mut out = apply_operator_field(u, st);
    layer_terms_into(&mut out, aux, st, prof);
    Ok(out)
}

/// Adds the layer coupling terms to `out` at the nodes of its support.
///
/// Nothing is written where the terms vanish identically, so a zero profile leaves
/// `out` untouched bit for bit.
pub fn layer_terms_into<T: Scalar>(out: &mut Field<T>, aux: &AuxFields<T>, st: &Stencil, prof: &PmlProfile) {
    let p = aux.p();
    let h = st.h();
    let pi = p as i64;
    let out_sup = out.support().clone();
    let mut delta_terms: Vec<([i64; 2], T)> = Vec::new();

    // Slab couplings through the one-dimensional sums
    // C_k(i) = sum_{l<k} [g~_{k-l}(i + l e) - g^_{k-l}(i - (l+1) e)].
    for axis in 0..2 {
        let other = 1 - axis;
        let active = &aux.slab_support(axis).axes[axis];
        if active.is_empty() || aux.slab_support(axis).axes[other].is_empty() {
            continue;
        }
        let out_axis = &out_sup.axes[axis];
        let (lo, hi) = bounds(out_axis);
        let region = active.dilate(pi, lo, hi);
        let mut axes = [region.clone(), region.clone()];
        axes[other] = out_sup.axes[other].clone();
        let c_sup = Arc::new(Support::new(axes[0].clone(), axes[1].clone()));
        let sig = &prof.axes[axis];
        let csum: Vec<Field<T>> = (1..=p)
            .map(|k| {
                Field::from_fn(c_sup.clone(), |a, b| {
                    let i = [a, b];
                    let mut acc = T::zero();
                    for l in 0..k {
                        let gt = damped(aux.slab(Side::Tilde, axis, k - l), sig, axis);
                        let gb = damped(aux.slab(Side::Bar, axis, k - l), sig, axis);
                        let l = l as i64;
                        acc += gt.at_shift(i, axis, l) - gb.at_shift(i, axis, -(l + 1));
                    }
                    acc
                })
            })
            .collect();
        for i in out_sup.nodes() {
            if !region.contains(i[axis]) {
                continue;
            }
            let mut acc = T::zero();
            for k in 1..=p {
                let mut off = [0i64; 2];
                off[axis] = k as i64;
                let a = st.coeff(off);
                if a != 0.0 {
                    acc += csum[k - 1].at(i[0], i[1]) * a;
                }
            }
            for ka in 1..=p {
                for kb in 1..=p {
                    let mut off = [0i64; 2];
                    off[axis] = ka as i64;
                    off[other] = kb as i64;
                    let a = st.coeff(off);
                    if a != 0.0 {
                        let c = &csum[ka - 1];
                        acc += (c.at_shift(i, other, kb as i64) + c.at_shift(i, other, -(kb as i64))) * a;
                    }
                }
            }
            delta_terms.push((i, acc * h));
        }
    }

    // Corner couplings.
    let csup = aux.corner_support().clone();
    if !csup.is_empty() {
        let (lo1, hi1) = bounds(&out_sup.axes[0]);
        let (lo2, hi2) = bounds(&out_sup.axes[1]);
        let r1 = csup.axes[0].dilate(pi, lo1, hi1);
        let r2 = csup.axes[1].dilate(pi, lo2, hi2);
        let (s1, s2) = (&prof.axes[0], &prof.axes[1]);
        let weighted = |c: Corner, k1: usize, k2: usize| {
            let f = aux.corner(c, k1, k2);
            move |a: i64, b: i64| -> T {
                let w = s1.sigma(a) * s2.sigma(b);
                if w == 0.0 {
                    T::zero()
                } else {
                    f.get(a, b) * w
                }
            }
        };
        for i in out_sup.nodes() {
            if !(r1.contains(i[0]) && r2.contains(i[1])) {
                continue;
            }
            let mut acc = T::zero();
            for k1 in 1..=p {
                for k2 in 1..=p {
                    let a = st.coeff([k1 as i64, k2 as i64]);
                    if a == 0.0 {
                        continue;
                    }
                    let mut q = T::zero();
                    for c in Corner::ALL {
                        let sign = c.axis1().sign() * c.axis2().sign();
                        let mut part = T::zero();
                        for l in 0..k1 {
                            let o1 = offset(c.axis1(), l as i64);
                            for m in 0..k2 {
                                let o2 = offset(c.axis2(), m as i64);
                                part += weighted(c, k1 - l, k2 - m)(i[0] + o1, i[1] + o2);
                            }
                        }
                        q += part * sign;
                    }
                    acc += q * a;
                }
            }
            delta_terms.push((i, acc * (h * h)));
        }
    }

    for (i, v) in delta_terms {
        let cur = out.get(i[0], i[1]);
        out.set(i[0], i[1], cur + v).expect("node from the output support");
    }
}

#[inline]
fn offset(side: Side, l: i64) -> i64 {
    match side {
        Side::Tilde => l,
        Side::Bar => -l - 1,
    }
}

fn bounds(s: &IndexSet) -> (i64, i64) {
    match (s.indices().first(), s.indices().last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0, -1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridConfig;
    use crate::kernel::KernelSpec;
    use crate::stencil::compute_stencil;

    #[test]
    fn corner_letters() {
        assert_eq!((Corner::TB.axis2(), Corner::TB.axis1()), (Side::Tilde, Side::Bar));
        assert_eq!((Corner::BT.axis2(), Corner::BT.axis1()), (Side::Bar, Side::Tilde));
    }

    #[test]
    fn zero_profile_is_plain_operator() {
        let g = GridConfig { h: 0.125, n: 8, n_p: 2, p: 2 };
        let st = compute_stencil(&KernelSpec::heaviside(0.25), &g, 4).unwrap();
        let prof = PmlProfile::constant(&g, 0.0).unwrap();
        let aux = AuxFields::<f64>::for_profile(2, &prof, &g.full_axis());
        assert!(aux.corner_support().is_empty());
        let u = Field::from_fn(g.full_support(), |a, b| ((a * 7 + b * 3) as f64).sin());
        let lu = crate::stencil::apply_operator_field(&u, &st);
        assert_eq!(main_rhs(&u, &aux, &st, &prof).unwrap(), lu);
    }

    #[test]
    fn bad_order_rejected() {
        let g = GridConfig { h: 0.125, n: 8, n_p: 2, p: 2 };
        let prof = PmlProfile::constant(&g, 1.0).unwrap();
        let aux = AuxFields::<f64>::for_profile(2, &prof, &g.full_axis());
        let u = Field::zeros(g.full_support());
        assert!(matches!(aux_rhs_tilde(&u, &aux, &prof, 0, 3, 0.125), Err(Error::Index(_))));
        assert!(matches!(aux_rhs_bar(&u, &aux, &prof, 0, 0, 0.125), Err(Error::Index(_))));
    }
}
