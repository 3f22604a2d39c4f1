//! One function per subcommand.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context};
use pdpml::diagnostics::{
    convergence_study, reflection_scan, reflection_trace, sigma_scan, solve_reference_with_stencil, EnergyRecorder,
    StudySetup,
};
use pdpml::holomorphy::{complex_mode, half_space_profile, holomorphy_suite, propagating_mode, theorem_residual, HolomorphyReport, Window};
use pdpml::integrator::{FieldSnapshot, Simulation};
use pdpml::io::{
    read_snapshot_binary, read_snapshot_text, snapshot_header, snapshot_name, write_convergence_csv, write_energy_csv,
    write_probe_csv, write_reflection_csv, write_sigma_scan_csv, write_snapshot_binary, write_snapshot_text, Dump,
};
use pdpml::pml::ExtendedMode;
use pdpml::stencil::{max_group_speed, max_omega2};
use pdpml::{compute_stencil, Stencil};

use crate::config::RunConfig;
use crate::manifest::RunManifest;

pub struct Options {
    pub binary: bool,
}

fn stencil_phase(m: &mut RunManifest, cfg: &RunConfig) -> anyhow::Result<Stencil> {
    let sim = cfg.simulation()?;
    m.phase("stencil", |_| Ok(compute_stencil(&sim.kernel, &sim.grid, sim.quad_order)?))
}

fn write_snapshots(m: &mut RunManifest, prefix: &str, snaps: &[FieldSnapshot], h: f64, opts: &Options) -> anyhow::Result<()> {
    for s in snaps {
        let name = format!("{prefix}{}", snapshot_name(s, opts.binary));
        if opts.binary {
            m.create(&name, |w| Ok(write_snapshot_binary(w, &s.u)?))?;
            let hdr = name.replace(".bin", ".hdr");
            m.create(&hdr, |w| {
                use std::io::Write;
                writeln!(w, "{}", snapshot_header(&s.u, h, s.t))?;
                Ok(())
            })?;
        } else {
            m.create(&name, |w| Ok(write_snapshot_text(w, &s.u, h, s.t)?))?;
        }
    }
    Ok(())
}

pub fn stencil(m: &mut RunManifest, cfg: &RunConfig) -> anyhow::Result<()> {
    let st = stencil_phase(m, cfg)?;
    m.create("stencil.csv", |w| {
        use std::io::Write;
        w.write_all(st.to_csv().as_bytes())?;
        Ok(())
    })?;
    let row_sum: f64 = st.nonzero().iter().map(|(_, a)| a).sum();
    m.note("radius", st.radius() as f64);
    m.note("nonzero", st.nonzero().len() as f64);
    m.note("row_sum", row_sum);
    m.note("max_omega", max_omega2(&st).sqrt());
    m.note("max_group_speed", max_group_speed(&st));
    Ok(())
}

pub fn run(m: &mut RunManifest, cfg: &RunConfig, opts: &Options) -> anyhow::Result<()> {
    let st = stencil_phase(m, cfg)?;
    let sim_cfg = cfg.simulation()?;
    let h = sim_cfg.grid.h;
    let out = m.phase("run", |_| Ok(Simulation::with_stencil(sim_cfg, st)?.run()?))?;
    m.phase("write", |m| {
        write_snapshots(m, "", &out.snapshots, h, opts)?;
        for (n, p) in out.probes.iter().enumerate() {
            m.create(&format!("probe_{n}.csv"), |w| Ok(write_probe_csv(w, p)?))?;
        }
        Ok(())
    })?;
    m.note("steps", out.final_state.step as f64);
    m.note("final_max_abs", out.final_state.u_curr.max_modulus());
    Ok(())
}

pub fn reference(m: &mut RunManifest, cfg: &RunConfig, opts: &Options) -> anyhow::Result<()> {
    let st = stencil_phase(m, cfg)?;
    let sim_cfg = cfg.simulation()?;
    let h = sim_cfg.grid.h;
    let snaps = m.phase("reference", |_| {
        Ok(solve_reference_with_stencil(&sim_cfg, &st, cfg.reference.enlargement)?)
    })?;
    m.phase("write", |m| write_snapshots(m, "", &snaps, h, opts))?;
    m.note("enlargement", cfg.reference.enlargement as f64);
    Ok(())
}

fn step_of(name: &str) -> Option<usize> {
    name.strip_prefix("u_")?.split('.').next()?.parse().ok()
}

fn read_dumps(dir: &Path) -> anyhow::Result<Vec<(usize, Dump)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let Some(step) = step_of(&name) else { continue };
        let dump = if name.ends_with(".txt") {
            let f = std::fs::File::open(&path)?;
            read_snapshot_text(std::io::BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?
        } else if name.ends_with(".bin") {
            let header = std::fs::read_to_string(path.with_extension("hdr"))
                .with_context(|| format!("reading header for {}", path.display()))?;
            let f = std::fs::File::open(&path)?;
            read_snapshot_binary(&header, std::io::BufReader::new(f))?
        } else {
            continue;
        };
        out.push((step, dump));
    }
    out.sort_by_key(|(s, _)| *s);
    Ok(out)
}

/// Reflection trace between paired dumps, compared on the reference nodes.
pub fn compare(m: &mut RunManifest, run_dir: &Path, ref_dir: &Path) -> anyhow::Result<()> {
    let (run, reference) = m.phase("read", |_| Ok((read_dumps(run_dir)?, read_dumps(ref_dir)?)))?;
    if run.is_empty() {
        bail!("no snapshot dumps in {}", run_dir.display());
    }
    let omega = reference
        .first()
        .map(|(_, d)| d.u.support().clone())
        .with_context(|| format!("no snapshot dumps in {}", ref_dir.display()))?;
    let to_snap = |v: Vec<(usize, Dump)>| -> Vec<FieldSnapshot> {
        v.into_iter()
            .map(|(step, d)| FieldSnapshot { step, t: d.t, u: d.u })
            .collect()
    };
    let trace = m.phase("compare", |_| Ok(reflection_trace(&to_snap(run), &to_snap(reference), &omega)?))?;
    m.create("reflection.csv", |w| Ok(write_reflection_csv(w, &trace)?))?;
    m.note("reflection_max", trace.iter().map(|p| p.1).fold(0.0, f64::max));
    Ok(())
}

pub fn scan_sigma(m: &mut RunManifest, cfg: &RunConfig, measure: bool) -> anyhow::Result<()> {
    let st = stencil_phase(m, cfg)?;
    let h = cfg.grid.h;
    let sigmas: Vec<f64> = cfg.scan.sigma0_h.iter().map(|s| s / h).collect();
    let limit = std::f64::consts::PI / h;
    let kappa: Vec<[f64; 2]> = cfg
        .scan
        .kappa
        .iter()
        .copied()
        .filter(|k| {
            let ok = k.iter().all(|c| c.abs() < limit);
            if !ok {
                log::warn!("skipping wave vector {k:?}: outside the resolved band |kappa| < {limit}");
            }
            ok
        })
        .collect();
    if kappa.is_empty() {
        bail!("no scan wave vector lies inside the resolved band |kappa| < {limit}");
    }
    let mut rows = m.phase("decay_rate", |_| Ok(sigma_scan(&st, &sigmas, &kappa)?))?;
    if measure {
        let mut base = cfg.simulation()?;
        if base.output.snapshot_every.is_none() {
            base.output.snapshot_every = Some(16);
        }
        let measured = m.phase("reflection", |_| Ok(reflection_scan(&base, &sigmas, cfg.reference.enlargement)?))?;
        for r in rows.iter_mut() {
            r.reflection = measured.iter().find(|(s, _)| *s == r.sigma0).map(|(_, e)| *e);
        }
    }
    m.create("sigma_scan.csv", |w| Ok(write_sigma_scan_csv(w, &rows)?))?;
    Ok(())
}

pub fn convergence(m: &mut RunManifest, cfg: &RunConfig) -> anyhow::Result<()> {
    let setup = StudySetup {
        kernel: cfg.kernel.spec(),
        half_width: cfg.grid.half_width,
        n_p: cfg.grid.n_p,
        sigma0_h: cfg.pml.sigma0 * cfg.grid.h,
        dt_over_h: cfg.time.dt / cfg.grid.h,
        quad_order: cfg.grid.quad_order,
    };
    let table = m.phase("study", |_| {
        Ok(convergence_study(
            &setup,
            &cfg.study.meshes,
            cfg.study.h_ref,
            cfg.study.t_eval,
            cfg.reference.enlargement,
        )?)
    })?;
    m.create("convergence.csv", |w| Ok(write_convergence_csv(w, &table)?))?;
    if let Some((l2, mx)) = table.slopes {
        m.note("slope_l2", l2);
        m.note("slope_max", mx);
    }
    Ok(())
}

pub fn energy(m: &mut RunManifest, cfg: &RunConfig) -> anyhow::Result<()> {
    let st = stencil_phase(m, cfg)?;
    let sim_cfg = cfg.simulation()?;
    let grid = sim_cfg.grid;
    let dt = sim_cfg.dt;
    let sim = Simulation::with_stencil(sim_cfg, st)?;
    let mut rec = EnergyRecorder::new(&sim.stepper.stencil, grid, dt);
    m.phase("run", |_| {
        sim.run_observed(|s| rec.observe(s))?;
        Ok(())
    })?;
    m.create("energy.csv", |w| Ok(write_energy_csv(w, &rec.trace)?))?;
    m.note("energy_max", rec.trace.iter().map(|p| p.1).fold(0.0, f64::max));
    Ok(())
}

/// Discrete holomorphy and layer-equation residuals for a few modes of the configured stencil.
pub fn verify(m: &mut RunManifest, cfg: &RunConfig) -> anyhow::Result<()> {
    let st = stencil_phase(m, cfg)?;
    let h = cfg.grid.h;
    let p = st.radius() as i64;
    let half = 2 * p + 10;
    let depth = (half + 2 * p + 8) as usize;
    let layer = cfg.pml.layer.clone().unwrap_or_else(|| vec![cfg.pml.sigma0; cfg.grid.n_p.max(1)]);
    let last = *layer.last().unwrap_or(&0.0);
    let values: Vec<f64> = (0..depth).map(|d| layer.get(d).copied().unwrap_or(last)).collect();
    let prof = half_space_profile(values)?;
    let kappas = [[0.3 / h, 0.1 / h], [1.0 / h, -0.5 / h], [-2.0 / h, 1.5 / h]];
    let mut modes = Vec::new();
    for k in kappas {
        for positive in [true, false] {
            modes.push(propagating_mode(&st, k, positive)?);
        }
    }
    let omega_ev = 0.5 * (0.2 / h);
    if let Ok(mode) = complex_mode(&st, omega_ev, 0.4 / h) {
        modes.push(mode);
    }
    let mut rows: Vec<(String, f64)> = HolomorphyReport::COLUMNS.iter().map(|c| (c.to_string(), 0.0)).collect();
    let mut theorem = [0.0f64; 4];
    m.phase("checks", |_| {
        for mode in &modes {
            let ext = ExtendedMode::new(*mode, prof.clone(), h)?;
            let rep = holomorphy_suite(&ext, &Window::default(), p.min(3))?;
            for (row, v) in rows.iter_mut().zip(rep.values()) {
                row.1 = row.1.max(v);
            }
            let r = theorem_residual(mode, &st, &prof, half)?;
            for (slot, v) in theorem.iter_mut().zip([r.main, r.tilde, r.bar, r.corner]) {
                *slot = slot.max(v);
            }
        }
        Ok(())
    })?;
    for (name, v) in ["layer_main", "layer_tilde", "layer_bar", "layer_corner"].iter().zip(theorem) {
        rows.push((name.to_string(), v));
    }
    m.create("verify.csv", |w| {
        use std::io::Write;
        writeln!(w, "check,residual")?;
        for (name, v) in &rows {
            writeln!(w, "{name},{}", pdpml::io::num(*v))?;
        }
        Ok(())
    })?;
    m.note("modes", modes.len() as f64);
    m.note(
        "max_residual",
        rows.iter()
            .filter(|(n, _)| n != "bar_psi_full_history")
            .map(|r| r.1)
            .fold(0.0, f64::max),
    );
    Ok(())
}

pub fn bench(m: &mut RunManifest, cfg: &RunConfig, steps: usize) -> anyhow::Result<()> {
    let st = stencil_phase(m, cfg)?;
    let mut sim_cfg = cfg.simulation()?;
    sim_cfg.output = Default::default();
    let sim = Simulation::with_stencil(sim_cfg, st)?;
    let mut state = m.phase("init", |_| Ok(sim.init_state()?))?;
    let start = Instant::now();
    m.phase("steps", |_| {
        for _ in 0..steps {
            sim.stepper.step_in_place(&mut state)?;
        }
        Ok(())
    })?;
    let secs = start.elapsed().as_secs_f64();
    m.note("steps", steps as f64);
    m.note("seconds_per_step", if steps > 0 { secs / steps as f64 } else { 0.0 });
    let timings = m.timings.clone();
    m.create("bench.csv", |w| {
        use std::io::Write;
        writeln!(w, "phase,seconds")?;
        for (name, s) in &timings {
            writeln!(w, "{name},{}", pdpml::io::num(*s))?;
        }
        Ok(())
    })?;
    Ok(())
}
