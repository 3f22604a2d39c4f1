//! Numerical checks of the discrete complex analysis behind the layer: holomorphy of
//! the extended plane wave, the shift identities, and the statement that the extended
//! wave solves the layer system in the frequency domain.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, IndexSet, Support};
use crate::pml::damping::{damping_factor, ExtendedMode, WaveMode};
use crate::pml::profile::{AxisProfile, PmlProfile};
use crate::pml::rhs::{aux_rhs_bar, aux_rhs_corner, aux_rhs_tilde, main_rhs, AuxFields, Corner, Side};
use crate::stencil::{dispersion_symbol, dispersion_symbol_d1, Stencil};

const I: Complex64 = Complex64::new(0.0, 1.0);

type C = Complex64;

/// Closed-form evaluation of `w(i, j)` and its scaled discrete derivatives for an
/// extended mode, with the damping products cached over a range of `j`.
#[derive(Debug, Clone)]
pub struct ModeTable {
    h: f64,
    omega: f64,
    kappa: [C; 2],
    profile: PmlProfile,
    j_lo: i64,
    eta: [Vec<C>; 2],
    s_lo: i64,
    phase: [Vec<C>; 2],
    inv_denom: [Vec<C>; 2],
}

impl ModeTable {
    /// Caches the damping products for `j` in `j_lo..=j_hi` (must contain 0).
    pub fn new(ext: &ExtendedMode, j_lo: i64, j_hi: i64) -> Result<Self> {
        if j_lo > 0 || j_hi < 0 {
            return Err(Error::Dimension(format!("layer range {j_lo}..={j_hi} must contain 0")));
        }
        let h = ext.h;
        let omega = ext.mode.omega;
        let mut eta = [Vec::new(), Vec::new()];
        for (axis, out) in eta.iter_mut().enumerate() {
            let k = ext.mode.kappa[axis];
            let sig = &ext.profile.axes[axis];
            let len = (j_hi - j_lo + 1) as usize;
            let mut v = vec![C::new(0.0, 0.0); len];
            let zero = (-j_lo) as usize;
            v[zero] = C::new(1.0, 0.0);
            for j in 0..j_hi {
                let f = damping_factor(sig.sigma(j), k, omega, h)?;
                v[zero + j as usize + 1] = v[zero + j as usize] * f;
            }
            for j in (j_lo..0).rev() {
                let f = damping_factor(sig.sigma(j), k, omega, h)?;
                if f.norm() <= 1e-300 {
                    return Err(Error::Singular { depth: j.unsigned_abs() as usize });
                }
                v[(j - j_lo) as usize] = v[(j + 1 - j_lo) as usize] / f;
            }
            *out = v;
        }
        // Phases e^{i kappa (i + j) h}, cached for sums of nearby i and j.
        let s_lo = 2 * j_lo - 64;
        let s_hi = 2 * j_hi + 64;
        let phase = [0, 1].map(|axis| {
            (s_lo..=s_hi)
                .map(|s| plane_phase(ext.mode.kappa[axis], s, h))
                .collect()
        });
        let inv_denom = [0, 1].map(|axis| {
            (j_lo..=j_hi + 1)
                .map(|j| {
                    let sigma = ext.profile.axes[axis].sigma(j);
                    1.0 / (I * omega * C::new(2.0 * h, h / omega * sigma))
                })
                .collect()
        });
        Ok(Self {
            h,
            omega,
            kappa: ext.mode.kappa,
            profile: ext.profile.clone(),
            j_lo,
            eta,
            s_lo,
            phase,
            inv_denom,
        })
    }

    fn sigma(&self, axis: usize, j: i64) -> f64 {
        self.profile.axes[axis].sigma(j)
    }

    fn factor(&self, axis: usize, i: i64, j: i64) -> C {
        let e = self.eta[axis][(j - self.j_lo) as usize];
        let s = i + j;
        let cached = usize::try_from(s - self.s_lo)
            .ok()
            .and_then(|n| self.phase[axis].get(n).copied());
        e * cached.unwrap_or_else(|| plane_phase(self.kappa[axis], s, self.h))
    }

    pub fn w(&self, i: [i64; 2], j: [i64; 2]) -> C {
        self.factor(0, i[0], j[0]) * self.factor(1, i[1], j[1])
    }

    /// Stretched coordinate along `axis`.
    pub fn z(&self, axis: usize, i: i64, j: i64) -> C {
        C::new(
            (i + j) as f64 * self.h,
            self.h / self.omega * self.profile.axes[axis].partial_sum(0, j),
        )
    }

    /// Scaled discrete derivative of `f` along `axis`.
    pub fn derivative(&self, axis: usize, f: impl Fn([i64; 2], [i64; 2]) -> C, i: [i64; 2], j: [i64; 2]) -> C {
        let inv = self.inv_denom[axis][(j[axis] - self.j_lo) as usize];
        (f(bump(i, axis, 1), bump(j, axis, 1)) - f(i, j)) * inv
    }

    pub fn d(&self, axis: usize, i: [i64; 2], j: [i64; 2]) -> C {
        self.derivative(axis, |a, b| self.w(a, b), i, j)
    }

    /// `D_a (D_b w)`.
    pub fn dd(&self, a: usize, b: usize, i: [i64; 2], j: [i64; 2]) -> C {
        self.derivative(a, |x, y| self.d(b, x, y), i, j)
    }
}

fn plane_phase(kappa: C, s: i64, h: f64) -> C {
    (I * kappa * (s as f64 * h)).exp()
}

#[inline]
fn bump(i: [i64; 2], axis: usize, k: i64) -> [i64; 2] {
    let mut o = i;
    o[axis] += k;
    o
}

#[inline]
fn bump2(i: [i64; 2], k: [i64; 2]) -> [i64; 2] {
    [i[0] + k[0], i[1] + k[1]]
}

/// Running maximum of `|lhs - sum(terms)|` and of the magnitudes of all terms.
#[derive(Debug, Clone, Copy, Default)]
struct Residual {
    res: f64,
    scale: f64,
}

impl Residual {
    fn add(&mut self, lhs: C, terms: &[C]) {
        let mut sum = C::new(0.0, 0.0);
        self.scale = self.scale.max(lhs.norm());
        for &t in terms {
            sum += t;
            self.scale = self.scale.max(t.norm());
        }
        self.res = self.res.max((lhs - sum).norm());
    }

    fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.res
        } else {
            self.res / self.scale
        }
    }
}

/// Lattice window on which the checks run: `i_a` and `j_a` over `lo..lo + size` along the
/// tested axis; the other axis is sampled at a few fixed `(i, j)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub i_lo: i64,
    pub j_lo: i64,
    pub size: i64,
}

impl Default for Window {
    fn default() -> Self {
        Self { i_lo: -8, j_lo: -4, size: 16 }
    }
}

const OTHER_SAMPLES: [[i64; 2]; 3] = [[0, 0], [2, 5], [-3, -2]];

impl Window {
    fn nodes(&self, axis: usize) -> Vec<([i64; 2], [i64; 2])> {
        let mut out = Vec::new();
        for a in 0..self.size {
            for b in 0..self.size {
                for [oi, oj] in OTHER_SAMPLES {
                    let mut i = [oi, oi];
                    let mut j = [oj, oj];
                    i[axis] = self.i_lo + a;
                    j[axis] = self.j_lo + b;
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Full window along axis 1 and a quarter-size block along axis 2.
    fn nodes_both(&self) -> Vec<([i64; 2], [i64; 2])> {
        let side = (self.size / 4).max(1);
        let mut out = Vec::new();
        for a1 in 0..self.size {
            for b1 in 0..self.size {
                for a2 in 0..side {
                    for b2 in 0..side {
                        out.push((
                            [self.i_lo + a1, self.i_lo / 2 + a2],
                            [self.j_lo + b1, self.j_lo / 2 + b2],
                        ));
                    }
                }
            }
        }
        out
    }

    /// Range of `j` reached by shifts of at most `reach` from the window.
    fn j_range(&self, reach: i64) -> (i64, i64) {
        ((self.j_lo - reach).min(0), (self.j_lo + self.size + reach).max(0))
    }
}

/// Builds the table for `mode` with enough cached depth for shifts up to `reach`.
pub fn mode_table(ext: &ExtendedMode, window: &Window, reach: i64) -> Result<ModeTable> {
    let (lo, hi) = window.j_range(reach + 4);
    ModeTable::new(ext, lo, hi)
}

/// Cross-multiplied Cauchy-Riemann residual along `axis`, scaled per face by the
/// magnitudes of the values and coordinate differences involved.
pub fn cauchy_riemann_residual(t: &ModeTable, axis: usize, window: &Window) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, j) in window.nodes(axis) {
        let ip = bump(i, axis, 1);
        let jp = bump(j, axis, 1);
        let f00 = t.w(i, j);
        let f11 = t.w(ip, jp);
        let f01 = t.w(i, jp);
        let f10 = t.w(ip, j);
        let z00 = t.z(axis, i[axis], j[axis]);
        let z11 = t.z(axis, ip[axis], jp[axis]);
        let z01 = t.z(axis, i[axis], jp[axis]);
        let z10 = t.z(axis, ip[axis], j[axis]);
        let r = (f11 - f00) * (z01 - z10) - (f01 - f10) * (z11 - z00);
        let scale = (f00.norm() + f11.norm() + f01.norm() + f10.norm()) * ((z11 - z00).norm() + (z01 - z10).norm());
        if scale > 0.0 {
            worst = worst.max(r.norm() / scale);
        }
    }
    worst
}

/// Shift identities that can be checked on an extended mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    /// Backward shift of `w` in `i` expressed through backward shifts in `j`.
    TauMinusK { axis: usize, k: i64 },
    /// Forward counterpart of [`Identity::TauMinusK`].
    TauPlusK { axis: usize, k: i64 },
    /// [`Identity::TauMinusK`] applied to `D_other w`.
    TauMinusKD { axis: usize, k: i64 },
    /// [`Identity::TauPlusK`] applied to `D_other w`.
    TauPlusKD { axis: usize, k: i64 },
    /// Backward shifts along both axes.
    TauTauMinus { k1: i64, k2: i64 },
    /// Forward shifts along both axes.
    TauTauPlus { k1: i64, k2: i64 },
    /// Backward shift along `axis`, forward along the other.
    TauTauMixed { axis: usize, k_back: i64, k_fwd: i64 },
    /// Frequency-domain relation for the forward-shifted derivative, `k >= 0`.
    TildePsi { axis: usize, k: i64 },
    /// Frequency-domain relation for the backward-shifted derivative, `k >= 1`. The
    /// history sum runs over `l = 1..=history_len`.
    BarPsi { axis: usize, k: i64, history_len: i64 },
    /// `D_1 D_2 w = D_2 D_1 w`.
    Commutation,
}

impl Identity {
    fn reach(&self) -> i64 {
        match *self {
            Identity::TauMinusK { k, .. }
            | Identity::TauPlusK { k, .. }
            | Identity::TauMinusKD { k, .. }
            | Identity::TauPlusKD { k, .. }
            | Identity::TildePsi { k, .. } => k + 3,
            Identity::BarPsi { k, history_len, .. } => k.max(history_len) + 3,
            Identity::TauTauMinus { k1, k2 } | Identity::TauTauPlus { k1, k2 } => k1 + k2 + 2,
            Identity::TauTauMixed { k_back, k_fwd, .. } => k_back + k_fwd + 2,
            Identity::Commutation => 2,
        }
    }

    fn validate(&self, window: &Window) -> Result<()> {
        let ok_axis = |a: usize| a < 2;
        let valid = match *self {
            Identity::TauMinusK { axis, k }
            | Identity::TauPlusK { axis, k }
            | Identity::TauMinusKD { axis, k }
            | Identity::TauPlusKD { axis, k } => ok_axis(axis) && k >= 1,
            Identity::TildePsi { axis, k } => ok_axis(axis) && k >= 0,
            Identity::BarPsi { axis, k, history_len } => ok_axis(axis) && k >= 1 && history_len >= 0,
            Identity::TauTauMinus { k1, k2 } | Identity::TauTauPlus { k1, k2 } => k1 >= 1 && k2 >= 1,
            Identity::TauTauMixed { axis, k_back, k_fwd } => ok_axis(axis) && k_back >= 1 && k_fwd >= 1,
            Identity::Commutation => true,
        };
        if !valid {
            return Err(Error::Index(format!("invalid identity parameters {self:?}")));
        }
        if self.reach() > window.size {
            return Err(Error::Dimension(format!(
                "window of size {} is too small for shifts of {}",
                window.size,
                self.reach()
            )));
        }
        Ok(())
    }
}

/// Maximum relative residual of `which` over the window.
pub fn proposition_identity_check(t: &ModeTable, which: Identity, window: &Window) -> Result<f64> {
    which.validate(window)?;
    let h = t.h;
    let sig = |a: usize, j: i64| t.sigma(a, j);
    let mut r = Residual::default();
    match which {
        Identity::TauMinusK { axis, k } | Identity::TauMinusKD { axis, k } => {
            let with_d = matches!(which, Identity::TauMinusKD { .. });
            let other = 1 - axis;
            let f = |i, j| if with_d { t.d(other, i, j) } else { t.w(i, j) };
            let g = |i, j| if with_d { t.dd(axis, other, i, j) } else { t.d(axis, i, j) };
            for (i, j) in window.nodes(axis) {
                let mut terms = vec![f(i, bump(j, axis, -k))];
                for l in 1..=k {
                    terms.push(-h * sig(axis, j[axis] - l) * g(bump(i, axis, -k + l - 1), bump(j, axis, -l)));
                }
                r.add(f(bump(i, axis, -k), j), &terms);
            }
        }
        Identity::TauPlusK { axis, k } | Identity::TauPlusKD { axis, k } => {
            let with_d = matches!(which, Identity::TauPlusKD { .. });
            let other = 1 - axis;
            let f = |i, j| if with_d { t.d(other, i, j) } else { t.w(i, j) };
            let g = |i, j| if with_d { t.dd(axis, other, i, j) } else { t.d(axis, i, j) };
            for (i, j) in window.nodes(axis) {
                let mut terms = vec![f(i, bump(j, axis, k))];
                for l in 1..=k {
                    terms.push(h * sig(axis, j[axis] + l - 1) * g(bump(i, axis, k - l), bump(j, axis, l - 1)));
                }
                r.add(f(bump(i, axis, k), j), &terms);
            }
        }
        Identity::TauTauMinus { k1, k2 } => {
            let ks = [k1, k2];
            for (i, j) in window.nodes_both() {
                let mut terms = vec![t.w(i, bump2(j, [-k1, -k2]))];
                for a in 0..2 {
                    let b = 1 - a;
                    for l in 1..=ks[a] {
                        let jj = bump(bump(j, a, -l), b, -ks[b]);
                        terms.push(-h * sig(a, j[a] - l) * t.d(a, bump(i, a, -ks[a] + l - 1), jj));
                    }
                }
                for l in 1..=k1 {
                    for m in 1..=k2 {
                        let s = sig(0, j[0] - l) * sig(1, j[1] - m);
                        let ii = bump2(i, [-k1 + l - 1, -k2 + m - 1]);
                        terms.push(h * h * s * t.dd(0, 1, ii, bump2(j, [-l, -m])));
                    }
                }
                r.add(t.w(bump2(i, [-k1, -k2]), j), &terms);
            }
        }
        Identity::TauTauPlus { k1, k2 } => {
            let ks = [k1, k2];
            for (i, j) in window.nodes_both() {
                let mut terms = vec![t.w(i, bump2(j, [k1, k2]))];
                for a in 0..2 {
                    let b = 1 - a;
                    for l in 1..=ks[a] {
                        let jj = bump(bump(j, a, l - 1), b, ks[b]);
                        terms.push(h * sig(a, j[a] + l - 1) * t.d(a, bump(i, a, ks[a] - l), jj));
                    }
                }
                for l in 1..=k1 {
                    for m in 1..=k2 {
                        let s = sig(0, j[0] + l - 1) * sig(1, j[1] + m - 1);
                        let ii = bump2(i, [k1 - l, k2 - m]);
                        terms.push(h * h * s * t.dd(0, 1, ii, bump2(j, [l - 1, m - 1])));
                    }
                }
                r.add(t.w(bump2(i, [k1, k2]), j), &terms);
            }
        }
        Identity::TauTauMixed { axis, k_back, k_fwd } => {
            let a = axis;
            let b = 1 - axis;
            for (i, j) in window.nodes_both() {
                let shift = |x: [i64; 2], da: i64, db: i64| bump(bump(x, a, da), b, db);
                let mut terms = vec![t.w(i, shift(j, -k_back, k_fwd))];
                for l in 1..=k_back {
                    terms.push(
                        -h * sig(a, j[a] - l) * t.d(a, bump(i, a, -k_back + l - 1), shift(j, -l, k_fwd)),
                    );
                }
                for l in 1..=k_fwd {
                    terms.push(h * sig(b, j[b] + l - 1) * t.d(b, bump(i, b, k_fwd - l), shift(j, -k_back, l - 1)));
                }
                for l in 1..=k_back {
                    for m in 1..=k_fwd {
                        let s = sig(a, j[a] - l) * sig(b, j[b] + m - 1);
                        let ii = shift(i, -k_back + l - 1, k_fwd - m);
                        terms.push(-h * h * s * t.dd(0, 1, ii, shift(j, -l, m - 1)));
                    }
                }
                r.add(t.w(shift(i, -k_back, k_fwd), j), &terms);
            }
        }
        Identity::TildePsi { axis, k } => {
            let a = axis;
            for (i, j) in window.nodes(a) {
                let ik = bump(i, a, k);
                let mut terms = vec![
                    t.w(i, bump(j, a, k + 2)) / (2.0 * h),
                    -t.w(i, bump(j, a, k)) / (2.0 * h),
                    0.5 * sig(a, j[a] + 1) * t.d(a, ik, bump(j, a, 1)),
                    0.5 * sig(a, j[a]) * t.d(a, ik, j),
                ];
                for l in 1..=k {
                    let il = bump(i, a, k - l);
                    terms.push(0.5 * sig(a, j[a] + l + 1) * t.d(a, il, bump(j, a, l + 1)));
                    terms.push(-0.5 * sig(a, j[a] + l - 1) * t.d(a, il, bump(j, a, l - 1)));
                }
                r.add(I * t.omega * t.d(a, ik, j), &terms);
            }
        }
        Identity::BarPsi { axis, k, history_len } => {
            let a = axis;
            for (i, j) in window.nodes(a) {
                let ik = bump(i, a, -k);
                let mut terms = vec![
                    t.w(i, bump(j, a, -k + 2)) / (2.0 * h),
                    -t.w(i, bump(j, a, -k)) / (2.0 * h),
                    0.5 * sig(a, j[a] - 1) * t.d(a, ik, bump(j, a, -1)),
                    0.5 * sig(a, j[a]) * t.d(a, ik, j),
                ];
                for l in 1..=history_len {
                    let il = bump(i, a, -k + l);
                    terms.push(0.5 * sig(a, j[a] - l - 1) * t.d(a, il, bump(j, a, -l - 1)));
                    terms.push(-0.5 * sig(a, j[a] - l + 1) * t.d(a, il, bump(j, a, -l + 1)));
                }
                r.add(I * t.omega * t.d(a, ik, j), &terms);
            }
        }
        Identity::Commutation => {
            for (i, j) in window.nodes_both() {
                r.add(t.dd(0, 1, i, j), &[t.dd(1, 0, i, j)]);
            }
        }
    }
    Ok(r.relative())
}

/// Residuals of every check for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphyReport {
    pub cauchy_riemann: f64,
    pub tau_minus_k: f64,
    pub tau_plus_k: f64,
    pub tau_minus_k_d: f64,
    pub tau_plus_k_d: f64,
    pub tau_tau_minus: f64,
    pub tau_tau_plus: f64,
    pub tau_tau_mixed: f64,
    pub tilde_psi: f64,
    /// Backward relation with the history sum running to `k`.
    pub bar_psi_full_history: f64,
    /// Backward relation with the history sum running to `k - 1`.
    pub bar_psi: f64,
    pub commutation: f64,
}

impl HolomorphyReport {
    pub const COLUMNS: [&'static str; 12] = [
        "cauchy_riemann",
        "tau_minus_k",
        "tau_plus_k",
        "tau_minus_k_d",
        "tau_plus_k_d",
        "tau_tau_minus",
        "tau_tau_plus",
        "tau_tau_mixed",
        "tilde_psi",
        "bar_psi_full_history",
        "bar_psi",
        "commutation",
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.cauchy_riemann,
            self.tau_minus_k,
            self.tau_plus_k,
            self.tau_minus_k_d,
            self.tau_plus_k_d,
            self.tau_tau_minus,
            self.tau_tau_plus,
            self.tau_tau_mixed,
            self.tilde_psi,
            self.bar_psi_full_history,
            self.bar_psi,
            self.commutation,
        ]
    }

    /// Largest residual over the checks that hold identically; the full-history
    /// variant of the backward relation is reported separately.
    pub fn max_holding(&self) -> f64 {
        self.values()
            .iter()
            .enumerate()
            .filter(|(n, _)| *n != 9)
            .fold(0.0, |m, (_, &v)| m.max(v))
    }
}

/// Runs every check for shifts `1..=max_k` on both axes.
pub fn holomorphy_suite(ext: &ExtendedMode, window: &Window, max_k: i64) -> Result<HolomorphyReport> {
    let t = mode_table(ext, window, 2 * max_k + 4)?;
    let mut rep = HolomorphyReport {
        cauchy_riemann: cauchy_riemann_residual(&t, 0, window).max(cauchy_riemann_residual(&t, 1, window)),
        tau_minus_k: 0.0,
        tau_plus_k: 0.0,
        tau_minus_k_d: 0.0,
        tau_plus_k_d: 0.0,
        tau_tau_minus: 0.0,
        tau_tau_plus: 0.0,
        tau_tau_mixed: 0.0,
        tilde_psi: 0.0,
        bar_psi_full_history: 0.0,
        bar_psi: 0.0,
        commutation: proposition_identity_check(&t, Identity::Commutation, window)?,
    };
    let upd = |slot: &mut f64, v: f64| *slot = slot.max(v);
    for axis in 0..2 {
        upd(
            &mut rep.tilde_psi,
            proposition_identity_check(&t, Identity::TildePsi { axis, k: 0 }, window)?,
        );
        for k in 1..=max_k {
            let chk = |id| proposition_identity_check(&t, id, window);
            upd(&mut rep.tau_minus_k, chk(Identity::TauMinusK { axis, k })?);
            upd(&mut rep.tau_plus_k, chk(Identity::TauPlusK { axis, k })?);
            upd(&mut rep.tau_minus_k_d, chk(Identity::TauMinusKD { axis, k })?);
            upd(&mut rep.tau_plus_k_d, chk(Identity::TauPlusKD { axis, k })?);
            upd(&mut rep.tilde_psi, chk(Identity::TildePsi { axis, k })?);
            upd(
                &mut rep.bar_psi_full_history,
                chk(Identity::BarPsi { axis, k, history_len: k })?,
            );
            upd(&mut rep.bar_psi, chk(Identity::BarPsi { axis, k, history_len: k - 1 })?);
            for k2 in 1..=max_k {
                upd(&mut rep.tau_tau_mixed, chk(Identity::TauTauMixed { axis, k_back: k, k_fwd: k2 })?);
                if axis == 0 {
                    upd(&mut rep.tau_tau_minus, chk(Identity::TauTauMinus { k1: k, k2 })?);
                    upd(&mut rep.tau_tau_plus, chk(Identity::TauTauPlus { k1: k, k2 })?);
                }
            }
        }
    }
    Ok(rep)
}

/// Residuals of the layer system evaluated on the extended wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremResidual {
    pub main: f64,
    pub tilde: f64,
    pub bar: f64,
    pub corner: f64,
}

impl TheoremResidual {
    pub fn max(&self) -> f64 {
        self.main.max(self.tilde).max(self.bar).max(self.corner)
    }
}

/// Checks that `mode` lies on the dispersion manifold of `st`.
pub fn check_dispersion(mode: &WaveMode, st: &Stencil) -> Result<()> {
    let sym = dispersion_symbol(st, mode.kappa);
    let gap = (sym + mode.omega * mode.omega).norm();
    let scale = st.coeff([0, 0]).abs().max(mode.omega * mode.omega).max(1.0);
    if gap > 1e-9 * scale {
        return Err(Error::Precondition(format!(
            "mode (omega = {}, kappa = {:?}) misses the dispersion relation by {gap:e}",
            mode.omega, mode.kappa
        )));
    }
    Ok(())
}

/// Builds the frequency-domain layer state from the extended wave on `[-half, half]^2`
/// and returns the relative residual of every equation at nodes at least `2p + 2`
/// away from the window edge. Residuals are relative to the largest term of each equation.
pub fn theorem_residual(mode: &WaveMode, st: &Stencil, prof: &PmlProfile, half: i64) -> Result<TheoremResidual> {
    check_dispersion(mode, st)?;
    let h = st.h();
    let p = st.radius();
    let pi = p as i64;
    let margin = 2 * pi + 2;
    if half <= margin {
        return Err(Error::Dimension(format!("window half width {half} must exceed {margin}")));
    }
    let ext = ExtendedMode::new(*mode, prof.clone(), h)?;
    let t = ModeTable::new(&ext, -half - 2 * pi - 4, half + 2 * pi + 4)?;
    let axis = IndexSet::range(-half, half);
    let sup = Arc::new(Support::new(axis.clone(), axis));
    let origin = [0i64, 0];
    let u = Field::from_fn(sup.clone(), |a, b| t.w(origin, [a, b]));
    let mut aux = AuxFields::<C>::zeros(p, [sup.clone(), sup.clone()], sup.clone());
    let shift_for = |side: Side, k: usize| match side {
        Side::Tilde => k as i64 - 1,
        Side::Bar => -(k as i64),
    };
    for axis in 0..2 {
        for side in Side::BOTH {
            for k in 1..=p {
                let i = bump(origin, axis, shift_for(side, k));
                *aux.slab_mut(side, axis, k) = Field::from_fn(sup.clone(), |a, b| t.d(axis, i, [a, b]));
            }
        }
    }
    for c in Corner::ALL {
        for k1 in 1..=p {
            for k2 in 1..=p {
                let i = [shift_for(c.axis1(), k1), shift_for(c.axis2(), k2)];
                *aux.corner_mut(c, k1, k2) = Field::from_fn(sup.clone(), |a, b| t.dd(0, 1, i, [a, b]));
            }
        }
    }

    let inner = half - margin;
    let compare = |lhs: &dyn Fn(i64, i64) -> C, rhs: &Field<C>| {
        let mut res: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for a in -inner..=inner {
            for b in -inner..=inner {
                let l = lhs(a, b);
                let r = rhs.get(a, b);
                res = res.max((l - r).norm());
                scale = scale.max(l.norm()).max(r.norm());
            }
        }
        if scale == 0.0 {
            res
        } else {
            res / scale
        }
    };

    let w2 = mode.omega * mode.omega;
    let rhs = main_rhs(&u, &aux, st, prof)?;
    let main = compare(&|a, b| -w2 * u.get(a, b), &rhs);
    let iw = -I * mode.omega;
    let mut out = TheoremResidual {
        main,
        tilde: 0.0,
        bar: 0.0,
        corner: 0.0,
    };
    for axis in 0..2 {
        for k in 1..=p {
            let r = aux_rhs_tilde(&u, &aux, prof, axis, k, h)?;
            let f = aux.slab(Side::Tilde, axis, k);
            out.tilde = out.tilde.max(compare(&|a, b| iw * f.get(a, b), &r));
            let r = aux_rhs_bar(&u, &aux, prof, axis, k, h)?;
            let f = aux.slab(Side::Bar, axis, k);
            out.bar = out.bar.max(compare(&|a, b| iw * f.get(a, b), &r));
        }
    }
    for c in Corner::ALL {
        for k1 in 1..=p {
            for k2 in 1..=p {
                let r = aux_rhs_corner(&aux, prof, c, k1, k2, h)?;
                let f = aux.corner(c, k1, k2);
                out.corner = out.corner.max(compare(&|a, b| iw * f.get(a, b), &r));
            }
        }
    }
    Ok(out)
}

/// Plane wave with real wave vector on the dispersion manifold; `positive` picks the
/// sign of the frequency.
pub fn propagating_mode(st: &Stencil, kappa: [f64; 2], positive: bool) -> Result<WaveMode> {
    let w2 = crate::stencil::dispersion_omega2(st, kappa);
    if !(w2 > 0.0) {
        return Err(Error::Domain(format!("wave vector {kappa:?} has no positive frequency")));
    }
    let w = w2.sqrt();
    Ok(WaveMode::real(if positive { w } else { -w }, kappa))
}

/// Solves the dispersion relation for a complex first wave number with `omega` and a
/// real second wave number fixed, by Newton iteration from the long-wave guess.
pub fn complex_mode(st: &Stencil, omega: f64, kappa2: f64) -> Result<WaveMode> {
    let h = st.h();
    let d = omega * omega - kappa2 * kappa2;
    let mut k1 = if d >= 0.0 {
        C::new(d.sqrt() * omega.signum(), -1e-3)
    } else {
        C::new(0.0, -(-d).sqrt())
    };
    let k2 = C::new(kappa2, 0.0);
    for _ in 0..100 {
        let f = dispersion_symbol(st, [k1, k2]) + omega * omega;
        let df = dispersion_symbol_d1(st, [k1, k2]);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        k1 -= step;
        if step.norm() <= 1e-15 * k1.norm().max(1.0) {
            break;
        }
    }
    // Fold into the admissible strip: the symbol is even and 2 pi / h periodic in k1.
    if k1.im > 0.0 {
        k1 = -k1;
    }
    let period = 2.0 * std::f64::consts::PI / h;
    while k1.re > period / 2.0 {
        k1.re -= period;
    }
    while k1.re <= -period / 2.0 {
        k1.re += period;
    }
    let mode = WaveMode::new(omega, [k1, k2]);
    check_dispersion(&mode, st)?;
    mode.validate(h)?;
    Ok(mode)
}

/// Profile with damping `values[l]` at depth `l >= 0` on both axes and none behind.
pub fn half_space_profile(values: Vec<f64>) -> Result<PmlProfile> {
    let a = AxisProfile::new(0, values)?;
    Ok(PmlProfile { axes: [a.clone(), a] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridConfig;
    use crate::kernel::KernelSpec;
    use crate::stencil::compute_stencil;

    fn gaussian_stencil() -> Stencil {
        let g = GridConfig { h: 1.0 / 16.0, n: 16, n_p: 4, p: 4 };
        compute_stencil(&KernelSpec::gaussian_with_horizon(0.25, 1e-7), &g, 8).unwrap()
    }

    #[test]
    fn coordinate_steps() {
        let ext = ExtendedMode::new(
            WaveMode::real(3.0, [2.0, 1.0]),
            half_space_profile(vec![1.0, 5.0, 2.0]).unwrap(),
            0.1,
        )
        .unwrap();
        let t = ModeTable::new(&ext, -2, 6).unwrap();
        for j in -2..5 {
            assert!((t.z(0, 1, j) - t.z(0, 0, j) - C::new(0.1, 0.0)).norm() < 1e-15);
            assert!(t.z(0, 0, j + 1).im >= t.z(0, 0, j).im);
        }
    }

    #[test]
    fn undamped_mode_is_plain_wave() {
        let ext = ExtendedMode::new(WaveMode::real(3.0, [2.0, 1.0]), PmlProfile::zero(), 0.1).unwrap();
        let w = Window::default();
        let t = mode_table(&ext, &w, 4).unwrap();
        let v = t.w([1, 2], [3, -1]);
        let e = (I * (2.0 * 4.0 * 0.1 + 1.0 * 1.0 * 0.1)).exp();
        assert!((v - e).norm() < 1e-14);
        assert_eq!(cauchy_riemann_residual(&t, 0, &w), 0.0);
        assert_eq!(
            proposition_identity_check(&t, Identity::TauMinusK { axis: 0, k: 2 }, &w).unwrap(),
            0.0
        );
    }

    #[test]
    fn oversized_shift_rejected() {
        let ext = ExtendedMode::new(WaveMode::real(3.0, [2.0, 1.0]), PmlProfile::zero(), 0.1).unwrap();
        let w = Window { i_lo: 0, j_lo: 0, size: 4 };
        let t = mode_table(&ext, &w, 12).unwrap();
        assert!(proposition_identity_check(&t, Identity::TauTauPlus { k1: 3, k2: 3 }, &w).is_err());
    }

    #[test]
    fn suite_on_damped_mode() {
        let prof = half_space_profile(vec![3.0, 10.0, 0.0, 25.0, 7.0, 1.0, 40.0, 2.0, 12.0, 5.0]).unwrap();
        let mode = WaveMode::new(4.0, [C::new(9.0, -0.5), C::new(-5.0, -0.1)]);
        let ext = ExtendedMode::new(mode, prof, 1.0 / 16.0).unwrap();
        let rep = holomorphy_suite(&ext, &Window::default(), 3).unwrap();
        assert!(rep.max_holding() < 1e-12, "{rep:?}");
    }

    #[test]
    fn layer_equations_hold_with_gaussian_stencil() {
        let st = gaussian_stencil();
        let prof = half_space_profile(vec![32.0; 64]).unwrap();
        let mode = propagating_mode(&st, [10.0, 4.0], true).unwrap();
        let r = theorem_residual(&mode, &st, &prof, 16).unwrap();
        assert!(r.max() < 1e-10, "{r:?}");
    }

    #[test]
    fn layer_residual_rejects_off_manifold_mode() {
        let st = gaussian_stencil();
        let prof = half_space_profile(vec![32.0; 64]).unwrap();
        let mode = WaveMode::real(1.0, [10.0, 4.0]);
        assert!(matches!(
            theorem_residual(&mode, &st, &prof, 16),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn evanescent_mode_root() {
        let st = gaussian_stencil();
        let m = complex_mode(&st, 3.0, 8.0).unwrap();
        assert!(m.kappa[0].im < -1.0);
        assert!(m.kappa[0].re.abs() < 1e-8);
    }
}
