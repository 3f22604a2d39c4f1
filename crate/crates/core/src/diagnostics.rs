//! Reference solutions on enlarged domains, error norms, energy and parameter studies.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, GridConfig, Support};
use crate::integrator::{FieldSnapshot, OutputConfig, PmlState, Simulation, SimulationConfig};
use crate::kernel::KernelSpec;
use crate::pml::damping::{decay_rate_mu, WaveMode};
use crate::pml::profile::PmlProfile;
use crate::stencil::{compute_stencil, dispersion_omega2, max_group_speed, Stencil};

/// Snapshot of a reference run restricted to the physical nodes.
pub type ReferenceSnapshot = FieldSnapshot;

/// Smallest enlargement factor for which no disturbance leaving the physical box
/// returns to it before `t_final`, given the largest group speed.
pub fn required_enlargement(grid: &GridConfig, group_speed: f64, t_final: f64) -> usize {
    let n = grid.n as f64;
    let travel = group_speed * t_final / grid.h;
    // 2 ((L - 1) n - p) >= travel
    let l = 1.0 + (travel / 2.0 + grid.p as f64) / n;
    (l.ceil() as usize).max(2)
}

/// Grid of the enlarged layer-free problem.
pub fn reference_grid(grid: &GridConfig, enlargement: usize) -> GridConfig {
    GridConfig {
        h: grid.h,
        n: grid.n * enlargement,
        n_p: 0,
        p: grid.p,
    }
}

/// Plain Verlet on the enlarged grid with zero far boundary, restricted to the physical
/// nodes of `cfg` at every recorded time.
pub fn solve_reference(cfg: &SimulationConfig, enlargement: usize) -> Result<Vec<ReferenceSnapshot>> {
    let st = compute_stencil(&cfg.kernel, &cfg.grid, cfg.quad_order)?;
    solve_reference_with_stencil(cfg, &st, enlargement)
}

pub fn solve_reference_with_stencil(
    cfg: &SimulationConfig,
    st: &Stencil,
    enlargement: usize,
) -> Result<Vec<ReferenceSnapshot>> {
    let required = required_enlargement(&cfg.grid, max_group_speed(st), cfg.t_final);
    if enlargement < required {
        return Err(Error::Enlargement {
            given: enlargement,
            required,
            t_max: cfg.t_final,
        });
    }
    let grid = reference_grid(&cfg.grid, enlargement);
    let initial = match &cfg.initial {
        crate::integrator::InitialCondition::Custom(_) => {
            let small = cfg.initial.sample(&cfg.grid)?;
            let data = grid_embed(&small, &grid);
            crate::integrator::InitialCondition::Custom(data)
        }
        other => other.clone(),
    };
    let ref_cfg = SimulationConfig {
        grid,
        profile: PmlProfile::zero(),
        initial,
        output: OutputConfig {
            probes: Vec::new(),
            ..cfg.output.clone()
        },
        ..cfg.clone()
    };
    let sim = Simulation::with_stencil(ref_cfg, st.clone())?;
    let out = sim.run()?;
    let omega = cfg.grid.physical_support();
    Ok(out
        .snapshots
        .into_iter()
        .map(|s| FieldSnapshot {
            u: s.u.restrict(omega.clone()),
            ..s
        })
        .collect())
}

fn grid_embed(small: &Field<f64>, grid: &GridConfig) -> Vec<f64> {
    Field::from_fn(grid.full_support(), |a, b| small.get(a, b)).into_data()
}

/// `max_n max_{i in Omega} |U_i(t_n) - U_ref,i(t_n)|`.
pub fn reflection_error(u: &[FieldSnapshot], u_ref: &[FieldSnapshot], omega: &std::sync::Arc<Support>) -> Result<f64> {
    Ok(reflection_trace(u, u_ref, omega)?
        .into_iter()
        .map(|(_, e)| e)
        .fold(0.0, f64::max))
}

/// Per-time max difference over `omega`.
pub fn reflection_trace(
    u: &[FieldSnapshot],
    u_ref: &[FieldSnapshot],
    omega: &std::sync::Arc<Support>,
) -> Result<Vec<(f64, f64)>> {
    if u.len() != u_ref.len() {
        return Err(Error::Dimension(format!(
            "{} snapshots against {} reference snapshots",
            u.len(),
            u_ref.len()
        )));
    }
    u.iter()
        .zip(u_ref)
        .map(|(a, b)| {
            if a.step != b.step {
                return Err(Error::Dimension(format!("snapshot steps {} and {} differ", a.step, b.step)));
            }
            Ok((a.t, max_diff_on(&a.u, &b.u, omega)?))
        })
        .collect()
}

fn covers(f: &Field<f64>, omega: &Support) -> bool {
    (0..2).all(|ax| omega.axes[ax].indices().iter().all(|&i| f.support().axes[ax].contains(i)))
}

fn max_diff_on(a: &Field<f64>, b: &Field<f64>, omega: &Support) -> Result<f64> {
    if !covers(a, omega) || !covers(b, omega) {
        return Err(Error::Dimension("field does not cover the comparison set".into()));
    }
    Ok(omega
        .nodes()
        .map(|[i, j]| (a.get(i, j) - b.get(i, j)).abs())
        .fold(0.0, f64::max))
}

/// Discrete energy at level `n` from three consecutive levels.
pub fn energy(
    u_prev: &Field<f64>,
    u: &Field<f64>,
    u_next: &Field<f64>,
    st: &Stencil,
    grid: &GridConfig,
    dt: f64,
) -> Result<f64> {
    let n = grid.n as i64;
    let inner = n - st.reach() as i64;
    if inner < 0 {
        return Err(Error::Precondition(format!(
            "physical half width of {n} nodes is smaller than the stencil reach {}",
            st.reach()
        )));
    }
    let mut kinetic = 0.0;
    for b in -n..=n {
        for a in -n..=n {
            let v = (u_next.get(a, b) - u_prev.get(a, b)) / (2.0 * dt);
            kinetic += v * v;
        }
    }
    let count = ((2 * n + 1) * (2 * n + 1)) as f64;
    let mut potential = 0.0;
    for b in -inner..=inner {
        for a in -inner..=inner {
            let mut l = 0.0;
            for &(k, c) in st.nonzero() {
                l += c * u.get(a + k[0], b + k[1]);
            }
            potential += l * l;
        }
    }
    let count_inner = ((2 * inner + 1) * (2 * inner + 1)) as f64;
    Ok(0.5 * kinetic / count + 0.5 * potential / count_inner)
}

/// Collects `E(t_n)` from consecutive states of a run.
#[derive(Debug, Clone)]
pub struct EnergyRecorder<'a> {
    st: &'a Stencil,
    grid: GridConfig,
    dt: f64,
    before: Option<Field<f64>>,
    pub trace: Vec<(f64, f64)>,
}

impl<'a> EnergyRecorder<'a> {
    pub fn new(st: &'a Stencil, grid: GridConfig, dt: f64) -> Self {
        Self {
            st,
            grid,
            dt,
            before: None,
            trace: Vec::new(),
        }
    }

    /// Feed states in step order; the energy at level `n` is available once level `n + 1` is seen.
    pub fn observe(&mut self, s: &PmlState) -> Result<()> {
        if let Some(prev) = &self.before {
            let e = energy(prev, &s.u_prev, &s.u_curr, self.st, &self.grid, self.dt)?;
            self.trace.push((s.t - self.dt, e));
        }
        self.before = Some(s.u_prev.clone());
        Ok(())
    }
}

/// `h sqrt(sum e^2)` over `omega`.
pub fn l2_norm(f: impl Fn(i64, i64) -> f64, omega: &Support, h: f64) -> f64 {
    h * omega.nodes().map(|[a, b]| f(a, b).powi(2)).sum::<f64>().sqrt()
}

pub fn max_norm(f: impl Fn(i64, i64) -> f64, omega: &Support) -> f64 {
    omega.nodes().map(|[a, b]| f(a, b).abs()).fold(0.0, f64::max)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Precondition("slope needs at least two points".into()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Precondition("slope needs positive data".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub err_l2: f64,
    pub err_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Fitted slopes in the l2 and max norms; present with three or more meshes.
    pub slopes: Option<(f64, f64)>,
}

/// Setup shared by the meshes of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySetup {
    pub kernel: KernelSpec,
    pub half_width: f64,
    pub n_p: usize,
    /// Damping in units of `1/h`.
    pub sigma0_h: f64,
    /// Time step in units of `h`.
    pub dt_over_h: f64,
    pub quad_order: usize,
}

impl StudySetup {
    pub fn config(&self, h: f64, t_final: f64) -> Result<SimulationConfig> {
        let mut cfg = SimulationConfig::standard(self.kernel, h, self.half_width, self.n_p, self.sigma0_h / h, t_final)?;
        cfg.dt = self.dt_over_h * h;
        cfg.quad_order = self.quad_order;
        Ok(cfg)
    }
}

/// Errors of layer runs on `meshes` against a layer-free run on the nested mesh `h_ref`
/// over an enlarged domain, all at `t_eval`.
pub fn convergence_study(setup: &StudySetup, meshes: &[f64], h_ref: f64, t_eval: f64, enlargement: usize) -> Result<ConvergenceTable> {
    let ratios: Vec<usize> = meshes
        .iter()
        .map(|&h| nested_ratio(h, h_ref))
        .collect::<Result<_>>()?;
    let mut ref_cfg = setup.config(h_ref, t_eval)?;
    ref_cfg.output = OutputConfig {
        snapshot_times: vec![t_eval],
        ..OutputConfig::default()
    };
    let reference = solve_reference(&ref_cfg, enlargement)?;
    let u_ref = &reference.last().ok_or_else(|| Error::Precondition("empty reference".into()))?.u;
    let mut rows = Vec::with_capacity(meshes.len());
    for (&h, &r) in meshes.iter().zip(&ratios) {
        let mut cfg = setup.config(h, t_eval)?;
        cfg.output.snapshot_times = vec![t_eval];
        let out = Simulation::new(cfg.clone())?.run()?;
        let u = &out.final_state.u_curr;
        let r = r as i64;
        let err = |a: i64, b: i64| u.get(a, b) - u_ref.get(a * r, b * r);
        let omega = cfg.grid.physical_support();
        rows.push(ConvergenceRow {
            h,
            err_l2: l2_norm(err, &omega, h),
            err_max: max_norm(err, &omega),
        });
    }
    let slopes = if rows.len() >= 3 {
        let l2: Vec<_> = rows.iter().map(|r| (r.h, r.err_l2)).collect();
        let mx: Vec<_> = rows.iter().map(|r| (r.h, r.err_max)).collect();
        Some((loglog_slope(&l2)?, loglog_slope(&mx)?))
    } else {
        None
    };
    Ok(ConvergenceTable { rows, slopes })
}

fn nested_ratio(h: f64, h_ref: f64) -> Result<usize> {
    let r = h / h_ref;
    let ri = r.round();
    if ri < 1.0 || (r - ri).abs() > 1e-9 * r || !(ri as usize).is_power_of_two() {
        return Err(Error::Config(format!("mesh {h} is not nested over the reference mesh {h_ref}")));
    }
    Ok(ri as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaScanRow {
    pub sigma0: f64,
    pub kappa: [f64; 2],
    pub abs_mu: f64,
    pub reflection: Option<f64>,
}

/// `|mu|` for each damping value and wave vector, with `omega` taken from the dispersion relation.
pub fn sigma_scan(st: &Stencil, sigma0: &[f64], kappa: &[[f64; 2]]) -> Result<Vec<SigmaScanRow>> {
    let h = st.h();
    let mut rows = Vec::with_capacity(sigma0.len() * kappa.len());
    for &s in sigma0 {
        for &k in kappa {
            let omega = dispersion_omega2(st, k).max(0.0).sqrt();
            let mode = WaveMode::new(omega, [Complex64::new(k[0], 0.0), Complex64::new(k[1], 0.0)]);
            let mu = decay_rate_mu(&mode, s, h)?;
            rows.push(SigmaScanRow {
                sigma0: s,
                kappa: k,
                abs_mu: mu.norm(),
                reflection: None,
            });
        }
    }
    Ok(rows)
}

/// Measured reflection for each damping value: max over the recorded times of the
/// difference to the enlarged reference on the physical box.
pub fn reflection_scan(base: &SimulationConfig, sigma0: &[f64], enlargement: usize) -> Result<Vec<(f64, f64)>> {
    let st = compute_stencil(&base.kernel, &base.grid, base.quad_order)?;
    let reference = solve_reference_with_stencil(base, &st, enlargement)?;
    let omega = base.grid.physical_support();
    sigma0
        .iter()
        .map(|&s| {
            let cfg = SimulationConfig {
                profile: PmlProfile::constant(&base.grid, s)?,
                ..base.clone()
            };
            let out = Simulation::with_stencil(cfg, st.clone())?.run()?;
            Ok((s, reflection_error(&out.snapshots, &reference, &omega)?))
        })
        .collect()
}

/// Summary of one layer run against its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub reflection_max: f64,
    pub error_l2: f64,
    pub error_max: f64,
    pub energy_trace: Vec<(f64, f64)>,
    pub convergence_table: Option<ConvergenceTable>,
}
