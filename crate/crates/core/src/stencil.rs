//! Quadrature stencil of the discrete nonlocal operator.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{required_radius, Field, GridConfig, Scalar};
use crate::kernel::{weight, KernelSpec};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_QUAD_ORDER: usize = 8;

/// Coefficients `a_k` for `k` in `[-p, p]^2`, with `a_0 = -sum_{k != 0} a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    p: usize,
    h: f64,
    coeffs: Vec<f64>,
    nonzero: Vec<([i64; 2], f64)>,
}

impl Stencil {
    /// Builds a stencil from dense coefficients indexed `(k1 + p) + (2p + 1)(k2 + p)`.
    pub fn from_dense(p: usize, h: f64, coeffs: Vec<f64>) -> Result<Self> {
        let w = 2 * p + 1;
        if coeffs.len() != w * w {
            return Err(Error::Dimension(format!(
                "stencil of radius {p} needs {} coefficients, got {}",
                w * w,
                coeffs.len()
            )));
        }
        let pi = p as i64;
        let mut nonzero = Vec::new();
        for k1 in -pi..=pi {
            for k2 in -pi..=pi {
                let a = coeffs[(k1 + pi) as usize + w * (k2 + pi) as usize];
                if a != 0.0 {
                    nonzero.push(([k1, k2], a));
                }
            }
        }
        Ok(Self { p, h, coeffs, nonzero })
    }

    pub fn radius(&self) -> usize {
        self.p
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coefficient at offset `k`; zero outside `[-p, p]^2`.
    pub fn coeff(&self, k: [i64; 2]) -> f64 {
        let p = self.p as i64;
        if k[0].abs() > p || k[1].abs() > p {
            return 0.0;
        }
        self.coeffs[(k[0] + p) as usize + (2 * self.p + 1) * (k[1] + p) as usize]
    }

    /// Nonzero coefficients in lexicographic order of `(k1, k2)`.
    pub fn nonzero(&self) -> &[([i64; 2], f64)] {
        &self.nonzero
    }

    /// Largest `|k|_inf` carrying a nonzero coefficient.
    pub fn reach(&self) -> usize {
        self.nonzero
            .iter()
            .map(|(k, _)| k[0].unsigned_abs().max(k[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// `k, a_k` per line for `k` in `[-p, p]^2`, lexicographic.
    pub fn to_csv(&self) -> String {
        let p = self.p as i64;
        let mut s = String::from("k1,k2,a\n");
        for k1 in -p..=p {
            for k2 in -p..=p {
                let _ = writeln!(s, "{k1},{k2},{:e}", self.coeff([k1, k2]));
            }
        }
        s
    }
}

/// Computes the stencil for `kernel` on `grid`. `quad_order` is the Gauss-Legendre
/// order used on every cell or angular/radial sub-interval.
pub fn compute_stencil(kernel: &KernelSpec, grid: &GridConfig, quad_order: usize) -> Result<Stencil> {
    kernel.validate()?;
    if quad_order == 0 {
        return Err(Error::Config("quadrature order must be at least 1".into()));
    }
    let h = grid.h;
    let delta = kernel.horizon();
    let required = required_radius(delta, h);
    if grid.p < required {
        return Err(Error::StencilTooSmall {
            given: grid.p,
            required,
            horizon: delta,
        });
    }
    let p = grid.p;
    let w = 2 * p + 1;
    let mut coeffs = vec![0.0; w * w];
    if delta == 0.0 {
        return Stencil::from_dense(p, h, coeffs);
    }
    let gl = GaussLegendre::new(quad_order);
    let octant: Vec<[usize; 2]> = (1..=p).flat_map(|k1| (0..=k1).map(move |k2| [k1, k2])).collect();
    let values: Vec<f64> = octant
        .par_iter()
        .map(|&[k1, k2]| octant_coefficient(kernel, h, delta, [k1 as i64, k2 as i64], &gl))
        .collect();
    let pi = p as i64;
    let mut put = |a: i64, b: i64, v: f64| coeffs[(a + pi) as usize + w * (b + pi) as usize] = v;
    for (&[k1, k2], &v) in octant.iter().zip(&values) {
        let (k1, k2) = (k1 as i64, k2 as i64);
        for (a, b) in [(k1, k2), (k2, k1)] {
            for (sa, sb) in [(1, 1), (-1, 1), (1, -1), (-1, -1)] {
                put(sa * a, sb * b, v);
            }
        }
    }
    let mut sum = 0.0;
    for k1 in -pi..=pi {
        for k2 in -pi..=pi {
            if (k1, k2) != (0, 0) {
                sum += coeffs[(k1 + pi) as usize + w * (k2 + pi) as usize];
            }
        }
    }
    coeffs[p + w * p] = -sum;
    Stencil::from_dense(p, h, coeffs)
}

fn octant_coefficient(kernel: &KernelSpec, h: f64, delta: f64, k: [i64; 2], gl: &GaussLegendre) -> f64 {
    let xk = [k[0] as f64 * h, k[1] as f64 * h];
    let hat = |z: [f64; 2]| {
        let a = 1.0 - (z[0] / h - k[0] as f64).abs();
        let b = 1.0 - (z[1] / h - k[1] as f64).abs();
        a.max(0.0) * b.max(0.0)
    };
    let mut total = 0.0;
    for c1 in [k[0] - 1, k[0]] {
        for c2 in [k[1] - 1, k[1]] {
            let cell = Cell {
                x0: c1 as f64 * h,
                x1: (c1 + 1) as f64 * h,
                y0: c2 as f64 * h,
                y1: (c2 + 1) as f64 * h,
            };
            total += integrate_cell(kernel, delta, &cell, &hat, gl);
        }
    }
    // x_k lies on a lattice line, so W(x_k) > 0 for k != 0.
    total / weight(xk).expect("nonzero offset")
}

struct Cell {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Cell {
    fn corners(&self) -> [[f64; 2]; 4] {
        [[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]]
    }

    fn nearest_distance(&self) -> f64 {
        let dx = if self.x0 > 0.0 { self.x0 } else if self.x1 < 0.0 { -self.x1 } else { 0.0 };
        let dy = if self.y0 > 0.0 { self.y0 } else if self.y1 < 0.0 { -self.y1 } else { 0.0 };
        dx.hypot(dy)
    }

    fn farthest_distance(&self) -> f64 {
        self.corners().iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max)
    }

    fn touches_origin(&self) -> bool {
        self.corners().iter().any(|c| c[0] == 0.0 && c[1] == 0.0)
    }

    /// Parameter interval of the ray `t d` inside the cell.
    fn ray_interval(&self, d: [f64; 2]) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (a, b, di) in [(self.x0, self.x1, d[0]), (self.y0, self.y1, d[1])] {
            if di.abs() < 1e-300 {
                if a > 0.0 || b < 0.0 {
                    return (1.0, 0.0);
                }
            } else {
                let (t0, t1) = (a / di, b / di);
                lo = lo.max(t0.min(t1));
                hi = hi.min(t0.max(t1));
            }
        }
        (lo, hi)
    }
}

/// Integral of `hat(z) W(z) gamma(|z|)` over the cell clipped to the disk.
fn integrate_cell(
    kernel: &KernelSpec,
    delta: f64,
    cell: &Cell,
    hat: &impl Fn([f64; 2]) -> f64,
    gl: &GaussLegendre,
) -> f64 {
    if cell.nearest_distance() >= delta {
        return 0.0;
    }
    let integrand = |z: [f64; 2]| {
        let r = z[0].hypot(z[1]);
        let l1 = z[0].abs() + z[1].abs();
        hat(z) * (r * r / l1) * kernel.eval_unchecked(r)
    };
    if !cell.touches_origin() && cell.farthest_distance() <= delta {
        let mut acc = 0.0;
        for (y, wy) in gl.mapped(cell.y0, cell.y1) {
            for (x, wx) in gl.mapped(cell.x0, cell.x1) {
                acc += wx * wy * integrand([x, y]);
            }
        }
        return acc;
    }
    integrate_cell_polar(kernel, delta, cell, hat, gl)
}

/// Polar integration about the origin, split at the corner angles and at the
/// angles where the circle of radius `delta` crosses the cell edges, so that the
/// integrand is smooth on each angular piece.
fn integrate_cell_polar(
    kernel: &KernelSpec,
    delta: f64,
    cell: &Cell,
    hat: &impl Fn([f64; 2]) -> f64,
    gl: &GaussLegendre,
) -> f64 {
    let cx = 0.5 * (cell.x0 + cell.x1);
    let cy = 0.5 * (cell.y0 + cell.y1);
    let center = cy.atan2(cx);
    let unwrap = |x: f64, y: f64| {
        let mut d = y.atan2(x) - center;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d <= -PI {
            d += 2.0 * PI;
        }
        center + d
    };
    let mut breaks = Vec::with_capacity(12);
    for c in cell.corners() {
        if c[0] != 0.0 || c[1] != 0.0 {
            breaks.push(unwrap(c[0], c[1]));
        }
    }
    for x in [cell.x0, cell.x1] {
        if x.abs() < delta {
            let y = (delta * delta - x * x).sqrt();
            for y in [y, -y] {
                if y > cell.y0 && y < cell.y1 {
                    breaks.push(unwrap(x, y));
                }
            }
        }
    }
    for y in [cell.y0, cell.y1] {
        if y.abs() < delta {
            let x = (delta * delta - y * y).sqrt();
            for x in [x, -x] {
                if x > cell.x0 && x < cell.x1 {
                    breaks.push(unwrap(x, y));
                }
            }
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    // With an r^-(2s) singularity at the origin, r = rho^q removes it.
    let s = kernel.singular_exponent();
    let q = 1.0 / (1.0 - 2.0 * s);
    let radial = |d: [f64; 2], r0: f64, r1: f64| -> f64 {
        let g = |r: f64| {
            let z = [r * d[0], r * d[1]];
            // W(z) r = r^2 / (|d1| + |d2|)
            hat(z) * r * r / (d[0].abs() + d[1].abs()) * kernel.eval_unchecked(r)
        };
        if r0 == 0.0 && s > 0.0 {
            gl.integrate(0.0, r1.powf(1.0 / q), |rho| g(rho.powf(q)) * q * rho.powf(q - 1.0))
        } else {
            gl.integrate(r0, r1, g)
        }
    };

    let mut acc = 0.0;
    for win in breaks.windows(2) {
        acc += gl.integrate(win[0], win[1], |theta| {
            let d = [theta.cos(), theta.sin()];
            let (t0, t1) = cell.ray_interval(d);
            let r0 = t0.max(0.0);
            let r1 = t1.min(delta);
            if r1 <= r0 {
                0.0
            } else {
                radial(d, r0, r1)
            }
        });
    }
    acc
}

/// `(L_h u)(i) = sum_k a_k u(i + k)`, summed over nonzero `a_k` in lexicographic order.
pub fn apply_operator<T: Scalar>(u: &Field<T>, st: &Stencil, i: [i64; 2]) -> T {
    let mut acc = T::zero();
    for &(k, a) in st.nonzero() {
        acc += u.get(i[0] + k[0], i[1] + k[1]) * a;
    }
    acc
}

/// [`apply_operator`] at every node of `u`'s support, returning a field on the same support.
///
/// Accumulates in the same order as the pointwise form, so results agree bit for bit.
pub fn apply_operator_field<T: Scalar>(u: &Field<T>, st: &Stencil) -> Field<T> {
    let sup = u.support().clone();
    let [ax1, ax2] = &sup.axes;
    if !(ax1.is_contiguous() && ax2.is_contiguous()) || ax1.is_empty() || ax2.is_empty() {
        return Field::from_fn(sup.clone(), |a, b| apply_operator(u, st, [a, b]));
    }
    let p = st.reach();
    let n1 = ax1.len();
    let n2 = ax2.len();
    let w1 = n1 + 2 * p;
    let w2 = n2 + 2 * p;
    let mut pad = vec![T::zero(); w1 * w2];
    for (r, row) in u.data().chunks(n1).enumerate() {
        let start = (r + p) * w1 + p;
        pad[start..start + n1].copy_from_slice(row);
    }
    let mut out = vec![T::zero(); n1 * n2];
    out.par_chunks_mut(n1).enumerate().for_each(|(r, row)| {
        for &(k, a) in st.nonzero() {
            let src_row = (r as i64 + p as i64 + k[1]) as usize;
            let start = src_row * w1 + (p as i64 + k[0]) as usize;
            let src = &pad[start..start + n1];
            for (o, &v) in row.iter_mut().zip(src) {
                *o += v * a;
            }
        }
    });
    Field::from_data(sup, out).expect("matching size")
}

/// Squared frequency of the discrete plane wave with real wave vector `kappa`.
pub fn dispersion_omega2(st: &Stencil, kappa: [f64; 2]) -> f64 {
    -dispersion_symbol(st, [Complex64::new(kappa[0], 0.0), Complex64::new(kappa[1], 0.0)]).re
}

/// Symbol `sum_k a_k e^{i kappa . k h}` for a complex wave vector.
///
/// A plane wave is a mode of frequency `omega` exactly when this equals `-omega^2`.
pub fn dispersion_symbol(st: &Stencil, kappa: [Complex64; 2]) -> Complex64 {
    let h = st.h();
    let p = st.radius() as i64;
    let mut acc = Complex64::new(st.coeff([0, 0]), 0.0);
    for k in 1..=p {
        let kf = k as f64 * h;
        acc += 2.0 * st.coeff([k, 0]) * ((kappa[0] * kf).cos() + (kappa[1] * kf).cos());
    }
    for k1 in 1..=p {
        let c1 = (kappa[0] * (k1 as f64 * h)).cos();
        for k2 in 1..=p {
            let a = st.coeff([k1, k2]);
            if a != 0.0 {
                acc += 4.0 * a * c1 * (kappa[1] * (k2 as f64 * h)).cos();
            }
        }
    }
    acc
}

/// Derivative of [`dispersion_symbol`] with respect to `kappa[0]`.
pub fn dispersion_symbol_d1(st: &Stencil, kappa: [Complex64; 2]) -> Complex64 {
    let h = st.h();
    let p = st.radius() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..=p {
        let kf = k as f64 * h;
        acc -= 2.0 * st.coeff([k, 0]) * kf * (kappa[0] * kf).sin();
    }
    for k1 in 1..=p {
        let kf = k1 as f64 * h;
        let s1 = (kappa[0] * kf).sin();
        for k2 in 1..=p {
            let a = st.coeff([k1, k2]);
            if a != 0.0 {
                acc -= 4.0 * a * kf * s1 * (kappa[1] * (k2 as f64 * h)).cos();
            }
        }
    }
    acc
}

/// Largest squared frequency over a sampling of the Brillouin zone, corner included.
pub fn max_omega2(st: &Stencil) -> f64 {
    let h = st.h();
    let m = 48;
    let mut best = dispersion_omega2(st, [PI / h, PI / h]);
    for a in 0..=m {
        for b in 0..=a {
            let k = [PI / h * a as f64 / m as f64, PI / h * b as f64 / m as f64];
            best = best.max(dispersion_omega2(st, k));
        }
    }
    best
}

/// Largest group speed `|grad omega|` over a sampling of the Brillouin zone.
pub fn max_group_speed(st: &Stencil) -> f64 {
    let h = st.h();
    let m = 64;
    let step = PI / h / m as f64;
    let omega = |a: f64, b: f64| dispersion_omega2(st, [a, b]).max(0.0).sqrt();
    let mut best: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            let (x, y) = ((a as f64 + 0.5) * step, (b as f64 + 0.5) * step);
            let e = 1e-3 * step;
            let gx = (omega(x + e, y) - omega(x - e, y)) / (2.0 * e);
            let gy = (omega(x, y + e) - omega(x, y - e)) / (2.0 * e);
            best = best.max(gx.hypot(gy));
        }
    }
    best
}
