//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero on failure.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdpml::diagnostics::{
    convergence_study, reflection_scan, solve_reference_with_stencil, reflection_error, EnergyRecorder, StudySetup,
};
use pdpml::holomorphy::{complex_mode, half_space_profile, holomorphy_suite, propagating_mode, theorem_residual, Window};
use pdpml::integrator::{Simulation, SimulationConfig};
use pdpml::pml::{decay_rate_mu, ExtendedMode, PmlProfile, WaveMode};
use pdpml::{compute_stencil, GridConfig, KernelSpec, Stencil};

const H16: f64 = 1.0 / 16.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn example1() -> KernelSpec {
    KernelSpec::gaussian_with_horizon(0.25, 1e-7)
}

fn example2() -> KernelSpec {
    KernelSpec::heaviside(0.25)
}

/// Polar midpoint rule for the Heaviside stencil: with `gamma = c / r^2` the weighted
/// integrand reduces to `c * hat / (|cos| + |sin|)` in `(r, theta)`.
fn midpoint_coefficient(k: [i64; 2], h: f64, delta: f64, m: usize) -> f64 {
    let c = 4.0 / (PI * delta * delta);
    let (x0, x1) = ((k[0] - 1) as f64 * h, (k[0] + 1) as f64 * h);
    let (y0, y1) = ((k[1] - 1) as f64 * h, (k[1] + 1) as f64 * h);
    let corners = [[x0, y0], [x1, y0], [x0, y1], [x1, y1]];
    let contains_origin = x0 <= 0.0 && x1 >= 0.0 && y0 <= 0.0 && y1 >= 0.0;
    let far = corners.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    let (t0, t1, r0) = if contains_origin {
        (-PI, PI, 0.0)
    } else {
        let angles: Vec<f64> = corners.iter().map(|p| p[1].atan2(p[0])).collect();
        let near_x = 0.0f64.clamp(x0, x1);
        let near_y = 0.0f64.clamp(y0, y1);
        (
            angles.iter().cloned().fold(f64::INFINITY, f64::min),
            angles.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            near_x.hypot(near_y),
        )
    };
    let r1 = far.min(delta);
    if r1 <= r0 {
        return 0.0;
    }
    let (dt, dr) = ((t1 - t0) / m as f64, (r1 - r0) / m as f64);
    let mut total = 0.0;
    for a in 0..m {
        let t = t0 + (a as f64 + 0.5) * dt;
        let (s, co) = t.sin_cos();
        let ang = c / (co.abs() + s.abs());
        let mut line = 0.0;
        for b in 0..m {
            let r = r0 + (b as f64 + 0.5) * dr;
            let hx = 1.0 - (r * co / h - k[0] as f64).abs();
            let hy = 1.0 - (r * s / h - k[1] as f64).abs();
            if hx > 0.0 && hy > 0.0 {
                line += hx * hy;
            }
        }
        total += ang * line;
    }
    let xk = [k[0] as f64 * h, k[1] as f64 * h];
    let w = (xk[0] * xk[0] + xk[1] * xk[1]) / (xk[0].abs() + xk[1].abs());
    total * dt * dr / w
}

fn criterion_1() -> Outcome {
    let h = H16;
    let delta = 0.25;
    let grid = GridConfig::for_domain(1.0, h, 0, delta).unwrap();
    let st = compute_stencil(&example2(), &grid, 8).unwrap();
    let p = st.radius() as i64;
    let m = 8000;
    let mut worst: f64 = 0.0;
    let mut worst_k = [0, 0];
    for k1 in 1..=p {
        for k2 in 0..=k1 {
            let want = midpoint_coefficient([k1, k2], h, delta, m);
            let got = st.coeff([k1, k2]);
            let rel = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
            if rel > worst {
                worst = rel;
                worst_k = [k1, k2];
            }
        }
    }
    let mut sym = true;
    let mut abs_sum = 0.0;
    let mut sum = 0.0;
    for k1 in -p..=p {
        for k2 in -p..=p {
            let a = st.coeff([k1, k2]);
            sum += a;
            abs_sum += a.abs();
            for b in [[k2, k1], [-k1, k2], [k1, -k2], [-k1, -k2], [-k2, -k1]] {
                sym &= st.coeff(b) == a;
            }
        }
    }
    let row_ok = sum.abs() <= 8.0 * f64::EPSILON * abs_sum;
    outcome(
        worst < 1e-6 && sym && row_ok,
        format!(
            "stencil vs {m}x{m} midpoint oracle: max rel err {worst:.2e} at {worst_k:?} (< 1e-6), \
             row sum {sum:.1e} of {abs_sum:.3e}, eightfold symmetry {sym}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut cfg = SimulationConfig::standard(example2(), 0.125, 1.0, 4, 0.0, 0.0).unwrap();
    cfg.profile = PmlProfile::zero();
    let steps = 1000;
    cfg.t_final = steps as f64 * cfg.dt;
    let sim = Simulation::new(cfg.clone()).unwrap();
    let out = sim.run().unwrap();
    // Plain leapfrog on the same lattice.
    let st = &sim.stepper.stencil;
    let big_n = cfg.grid.outer();
    let w = (2 * big_n + 1) as usize;
    let at = |v: &Vec<f64>, a: i64, b: i64| {
        if a.abs() > big_n || b.abs() > big_n {
            0.0
        } else {
            v[(a + big_n) as usize + w * (b + big_n) as usize]
        }
    };
    let lap = |v: &Vec<f64>| {
        let mut o = vec![0.0; w * w];
        for b in -big_n..=big_n {
            for a in -big_n..=big_n {
                let mut acc = 0.0;
                for &(k, c) in st.nonzero() {
                    acc += at(v, a + k[0], b + k[1]) * c;
                }
                o[(a + big_n) as usize + w * (b + big_n) as usize] = acc;
            }
        }
        o
    };
    let h = cfg.grid.h;
    let mut u: Vec<f64> = (0..w * w)
        .map(|n| {
            let a = (n % w) as f64 - big_n as f64;
            let b = (n / w) as f64 - big_n as f64;
            let (x, y) = (a * h, b * h);
            1.0 * (-40.0 * (x * x + y * y)).exp()
        })
        .collect();
    let dt = cfg.dt;
    let half = 0.5 * dt * dt;
    let lu = lap(&u);
    let mut up: Vec<f64> = u.iter().zip(&lu).map(|(&a, &l)| a + half * l).collect();
    let dt2 = dt * dt;
    for _ in 0..steps {
        let lu = lap(&u);
        let next: Vec<f64> = (0..w * w).map(|n| 2.0 * u[n] - up[n] + dt2 * lu[n]).collect();
        up = std::mem::replace(&mut u, next);
    }
    let mine = out.final_state.u_curr.data();
    let identical = mine.len() == u.len() && mine.iter().zip(&u).all(|(a, b)| a.to_bits() == b.to_bits());
    let aux_zero = out.final_state.aux.all_fields().all(|f| f.data().is_empty());
    outcome(
        identical && aux_zero && out.final_state.step == steps,
        format!("{steps} zero-profile steps at h = 1/8 vs plain leapfrog: bit-identical {identical}, no auxiliary storage {aux_zero}"),
    )
}

fn random_k(rng: &mut ChaCha8Rng, h: f64) -> C {
    let re = rng.gen_range(-PI / h..PI / h);
    let im = if rng.gen_bool(0.5) { 0.0 } else { -rng.gen_range(0.0..8.0) };
    C::new(re, im)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = H16;
    let window = Window::default();
    let mut worst: f64 = 0.0;
    let mut printed_variant: f64 = f64::INFINITY;
    for _ in 0..50 {
        let omega = rng.gen_range(0.5..100.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let kappa = [random_k(&mut rng, h), random_k(&mut rng, h)];
        let sigma: Vec<f64> = (0..24)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..10.0 / h) })
            .collect();
        let prof = half_space_profile(sigma).unwrap();
        let ext = ExtendedMode::new(WaveMode::new(omega, kappa), prof, h).unwrap();
        let rep = holomorphy_suite(&ext, &window, 3).unwrap();
        worst = worst.max(rep.max_holding());
        printed_variant = printed_variant.min(rep.bar_psi_full_history);
    }
    outcome(
        worst < 1e-12,
        format!(
            "50 random modes on 16x16 windows: max relative residual {worst:.2e} (< 1e-12); \
             backward relation with history to k fails with residual >= {printed_variant:.2e}, checked with history to k - 1"
        ),
    )
}

fn gaussian_stencil_h16() -> Stencil {
    let grid = GridConfig::for_domain(1.0, H16, 0, example1().horizon()).unwrap();
    compute_stencil(&example1(), &grid, 8).unwrap()
}

fn criterion_4() -> Outcome {
    let st = gaussian_stencil_h16();
    let prof = half_space_profile(vec![32.0; 64]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut evanescent = 0;
    while count < 20 {
        let mode = if count % 4 == 3 {
            let omega: f64 = rng.gen_range(2.0..20.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let k2 = omega.abs() + rng.gen_range(1.0..10.0);
            match complex_mode(&st, omega, k2) {
                Ok(m) => {
                    evanescent += 1;
                    m
                }
                Err(_) => continue,
            }
        } else {
            let kappa = [rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)];
            match propagating_mode(&st, kappa, rng.gen_bool(0.5)) {
                Ok(m) => m,
                Err(_) => continue,
            }
        };
        let r = theorem_residual(&mode, &st, &prof, 16).unwrap();
        worst = worst.max(r.max());
        count += 1;
    }
    outcome(
        worst < 1e-10,
        format!(
            "20 dispersion-consistent modes ({evanescent} evanescent), Gaussian stencil h = 1/16, sigma0 = 32: \
             max relative residual {worst:.2e} (< 1e-10)"
        ),
    )
}

fn criterion_5() -> Outcome {
    let h = H16;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut undamped_exact = true;
    for _ in 0..20_000 {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let omega = sign * rng.gen_range(0.5..100.0);
        let re = sign * rng.gen_range(1e-6..PI / h);
        let im = if rng.gen_bool(0.5) { 0.0 } else { -rng.gen_range(0.0..20.0) };
        let kappa = [C::new(re, im), random_k(&mut rng, h)];
        let mode = WaveMode::new(omega, kappa);
        let sigma0 = rng.gen_range(1e-9..=10.0 / h);
        worst = worst.max(decay_rate_mu(&mode, sigma0, h).unwrap().norm());
        undamped_exact &= decay_rate_mu(&mode, 0.0, h).unwrap().norm() == 1.0;
    }
    outcome(
        worst < 1.0 && undamped_exact,
        format!("20000 outgoing samples: max |mu| = {worst:.15} (< 1); |mu| = 1 exactly without damping {undamped_exact}"),
    )
}

fn reflection_setup(kernel: KernelSpec) -> SimulationConfig {
    let mut cfg = SimulationConfig::standard(kernel, H16, 1.0, 4, 0.0, 2.0).unwrap();
    cfg.output.snapshot_every = Some(16);
    cfg
}

fn criterion_6() -> Outcome {
    let h = H16;
    let base = reflection_setup(example1());
    let sigmas: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|s| s / h).collect();
    let scan = reflection_scan(&base, &sigmas, 4).unwrap();
    let hard = scan[0].1;
    let damped = &scan[1..];
    let best = damped.iter().cloned().fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let at2 = damped.iter().find(|r| r.0 == 2.0 / h).unwrap().1;
    let ratio = at2 / hard;
    let in_range = best.0 >= 1.0 / h && best.0 <= 5.0 / h;
    let table: Vec<String> = scan.iter().map(|(s, e)| format!("{}/h:{e:.2e}", s * h)).collect();
    outcome(
        in_range && ratio < 1e-2,
        format!(
            "reflection over sigma0 [{}]: minimum at {}/h (in [1/h, 5/h]), ratio at 2/h vs hard truncation {ratio:.2e} (< 1e-2)",
            table.join(" "),
            best.0 * h
        ),
    )
}

fn criterion_7() -> Outcome {
    let setup = StudySetup {
        kernel: example1(),
        half_width: 1.0,
        n_p: 4,
        sigma0_h: 2.0,
        dt_over_h: 1.0 / 32.0,
        quad_order: 8,
    };
    let tab = convergence_study(&setup, &[1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0], 1.0 / 64.0, 1.5, 3).unwrap();
    let (s2, sm) = tab.slopes.unwrap();
    let rows: Vec<String> = tab
        .rows
        .iter()
        .map(|r| format!("h=1/{}: l2 {:.3e} max {:.3e}", (1.0 / r.h).round(), r.err_l2, r.err_max))
        .collect();
    let halving: Vec<String> = tab
        .rows
        .windows(2)
        .map(|w| format!("{:.2}", w[0].err_max / w[1].err_max))
        .collect();
    outcome(
        s2 >= 1.8 && sm >= 1.8,
        format!(
            "t = 1.5 against h = 1/64 reference [{}]: slopes l2 {s2:.3} max {sm:.3} (>= 1.8); max-error ratios per halving [{}]",
            rows.join("; "),
            halving.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let cfg = SimulationConfig::standard(example1(), H16, 1.0, 4, 2.0 / H16, 20.0).unwrap();
    let sim = Simulation::new(cfg.clone()).unwrap();
    let mut rec = EnergyRecorder::new(&sim.stepper.stencil, cfg.grid, cfg.dt);
    let run = sim.run_observed(|s| rec.observe(s));
    let finite = run.is_ok();
    let early = rec.trace.iter().filter(|p| p.0 <= 2.0).map(|p| p.1).fold(0.0, f64::max);
    let all = rec.trace.iter().map(|p| p.1).fold(0.0, f64::max);
    let late = rec.trace.iter().filter(|p| p.0 >= 10.0).map(|p| p.1).fold(0.0, f64::max);
    outcome(
        finite && all <= 1.05 * early,
        format!(
            "energy to t = 20: max {all:.6e}, max over [0, 2] {early:.6e} (ratio {:.4} <= 1.05), max over [10, 20] {late:.2e}, finite {finite}",
            all / early
        ),
    )
}

fn criterion_9() -> Outcome {
    let h = H16;
    let base = reflection_setup(example2());
    let st = compute_stencil(&base.kernel, &base.grid, base.quad_order).unwrap();
    let reference = solve_reference_with_stencil(&base, &st, 4).unwrap();
    let omega = base.grid.physical_support();
    let run = |sigma0: f64| {
        let cfg = SimulationConfig {
            profile: PmlProfile::constant(&base.grid, sigma0).unwrap(),
            ..base.clone()
        };
        Simulation::with_stencil(cfg, st.clone()).unwrap().run().unwrap()
    };
    let hard = reflection_error(&run(0.0).snapshots, &reference, &omega).unwrap();
    let out = run(2.0 / h);
    let refl = reflection_error(&out.snapshots, &reference, &omega).unwrap();
    let u = &out.final_state.u_curr;
    let n = base.grid.n as i64;
    let outer = base.grid.outer();
    let depth_max = |lo: i64, hi: i64| {
        u.support()
            .nodes()
            .filter(|[a, b]| (lo..=hi).contains(&a.abs().max(b.abs())))
            .map(|[a, b]| u.get(a, b).abs())
            .fold(0.0, f64::max)
    };
    // Interior of the layer: its nodes without the row on the interface and the outer row.
    let interior = depth_max(n + 2, outer - 1);
    let whole = depth_max(n + 1, outer);
    let ratio = refl / hard;
    outcome(
        interior < 1e-2 && ratio < 1e-2,
        format!(
            "Heaviside kernel to t = 2, sigma0 = 2/h: layer-interior max |u| {interior:.2e} (< 1e-2; {whole:.2e} including the interface row), \
             reflection {refl:.2e} = {ratio:.2e} of hard truncation (< 1e-2)"
        ),
    )
}

fn main() {
    // Numeric arguments select criteria; other arguments passed by the test runner are ignored.
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [fn() -> Outcome; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut failed = 0;
    for (n, run) in (1..).zip(criteria) {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {n}: {tag} ({:.1} s) {}", start.elapsed().as_secs_f64(), o.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all selected acceptance criteria passed");
}
