//! Explicit time stepping of the layer system.
//!
//! `u` lives on integer time levels and the auxiliary fields on half levels. Each step
//! advances the auxiliary families in increasing order so that history terms see
//! the already updated lower orders, then advances `u` by central differences using
//! the time-centred average of the auxiliary fields. Corner fields are driven by the
//! time-centred average of their slab fields.

use log::warn;

use crate::error::{Error, Result};
use crate::grid::{Field, GridConfig};
use crate::kernel::KernelSpec;
use crate::pml::profile::PmlProfile;
use crate::pml::rhs::{damped, drive, history, main_rhs, self_term, AuxFields, Corner, Side};
use crate::stencil::{apply_operator_field, compute_stencil, max_omega2, Stencil, DEFAULT_QUAD_ORDER};

/// Initial displacement; the initial velocity is always zero.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `amplitude * exp(-decay |x - center|^2)`.
    GaussianPulse {
        amplitude: f64,
        decay: f64,
        center: [f64; 2],
    },
    /// Values on the full grid in storage order (axis 1 fastest).
    Custom(Vec<f64>),
}

impl InitialCondition {
    /// The pulse `exp(-40 |x|^2)`.
    pub fn standard_pulse() -> Self {
        InitialCondition::GaussianPulse {
            amplitude: 1.0,
            decay: 40.0,
            center: [0.0, 0.0],
        }
    }

    pub fn sample(&self, grid: &GridConfig) -> Result<Field<f64>> {
        let sup = grid.full_support();
        match self {
            InitialCondition::GaussianPulse {
                amplitude,
                decay,
                center,
            } => {
                let h = grid.h;
                Ok(Field::from_fn(sup, |a, b| {
                    let dx = a as f64 * h - center[0];
                    let dy = b as f64 * h - center[1];
                    amplitude * (-decay * (dx * dx + dy * dy)).exp()
                }))
            }
            InitialCondition::Custom(v) => Field::from_data(sup, v.clone()),
        }
    }
}

/// What to record during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputConfig {
    /// Times at which the full field is stored; each is rounded to the nearest step.
    pub snapshot_times: Vec<f64>,
    /// Store a snapshot every this many steps in addition to `snapshot_times`.
    pub snapshot_every: Option<usize>,
    /// Physical positions whose nearest node is recorded every step.
    pub probes: Vec<[f64; 2]>,
}

/// Handling of time steps above the stability estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflPolicy {
    /// Fraction of the stability limit `2 / max omega` that is accepted.
    pub safety: f64,
    /// Reject instead of warning.
    pub strict: bool,
}

impl Default for CflPolicy {
    fn default() -> Self {
        Self {
            safety: 0.9,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub grid: GridConfig,
    pub kernel: KernelSpec,
    pub quad_order: usize,
    pub profile: PmlProfile,
    pub dt: f64,
    pub t_final: f64,
    pub initial: InitialCondition,
    pub output: OutputConfig,
    pub cfl: CflPolicy,
}

impl SimulationConfig {
    /// Pulse on `(-half_width, half_width)^2` with `n_p` layer nodes of constant damping
    /// `sigma0` and time step `h / 32`.
    pub fn standard(kernel: KernelSpec, h: f64, half_width: f64, n_p: usize, sigma0: f64, t_final: f64) -> Result<Self> {
        let grid = GridConfig::for_domain(half_width, h, n_p, kernel.horizon())?;
        Ok(Self {
            grid,
            kernel,
            quad_order: DEFAULT_QUAD_ORDER,
            profile: PmlProfile::constant(&grid, sigma0)?,
            dt: h / 32.0,
            t_final,
            initial: InitialCondition::standard_pulse(),
            output: OutputConfig::default(),
            cfl: CflPolicy::default(),
        })
    }

    pub fn steps(&self) -> usize {
        steps_for(self.t_final, self.dt)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!("final time must be nonnegative, got {}", self.t_final)));
        }
        if !(self.cfl.safety > 0.0) {
            return Err(Error::Config(format!("CFL safety factor must be positive, got {}", self.cfl.safety)));
        }
        Ok(())
    }
}

/// Number of steps of size `dt` that reach `t` (rounded to the nearest step).
pub fn steps_for(t: f64, dt: f64) -> usize {
    (t / dt).round().max(0.0) as usize
}

/// Largest stable time step `2 / max omega`.
pub fn cfl_limit(st: &Stencil) -> f64 {
    let w2 = max_omega2(st);
    if w2 <= 0.0 {
        f64::INFINITY
    } else {
        2.0 / w2.sqrt()
    }
}

/// Solution state: `u` at levels `n - 1` and `n`, auxiliary fields at level `n - 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlState {
    pub u_prev: Field<f64>,
    pub u_curr: Field<f64>,
    pub aux: AuxFields<f64>,
    pub t: f64,
    pub step: usize,
}

/// Stencil, profile and step size bound together.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub grid: GridConfig,
    pub stencil: Stencil,
    pub profile: PmlProfile,
    pub dt: f64,
}

impl Stepper {
    pub fn new(grid: GridConfig, stencil: Stencil, profile: PmlProfile, dt: f64) -> Result<Self> {
        if stencil.radius() != grid.p {
            return Err(Error::Dimension(format!(
                "stencil radius {} differs from grid radius {}",
                stencil.radius(),
                grid.p
            )));
        }
        Ok(Self {
            grid,
            stencil,
            profile,
            dt,
        })
    }

    /// State for the initial displacement `u0` with zero velocity, using the Taylor
    /// start `u_prev = u0 + dt^2/2 L_h u0`.
    pub fn init_state(&self, u0: Field<f64>) -> Result<PmlState> {
        if **u0.support() != *self.grid.full_support() {
            return Err(Error::Dimension("initial field must live on the full grid".into()));
        }
        let lu = apply_operator_field(&u0, &self.stencil);
        let half = 0.5 * self.dt * self.dt;
        let prev: Vec<f64> = u0.data().iter().zip(lu.data()).map(|(&u, &l)| u + half * l).collect();
        let u_prev = Field::from_data(u0.support().clone(), prev)?;
        let aux = AuxFields::for_profile(self.grid.p, &self.profile, &self.grid.full_axis());
        Ok(PmlState {
            u_prev,
            u_curr: u0,
            aux,
            t: 0.0,
            step: 0,
        })
    }

    /// Advances `state` by one step in place.
    pub fn step_in_place(&self, state: &mut PmlState) -> Result<()> {
        let new_aux = self.advance_aux(&state.u_curr, &state.aux);
        let avg = state.aux.average(&new_aux);
        let rhs = main_rhs(&state.u_curr, &avg, &self.stencil, &self.profile)?;
        let dt2 = self.dt * self.dt;
        let next: Vec<f64> = state
            .u_curr
            .data()
            .iter()
            .zip(state.u_prev.data())
            .zip(rhs.data())
            .map(|((&u, &up), &lu)| 2.0 * u - up + dt2 * lu)
            .collect();
        let step = state.step + 1;
        if !next.iter().all(|v| v.is_finite()) || !new_aux.all_finite() {
            return Err(Error::Unstable { step });
        }
        let next = Field::from_data(state.u_curr.support().clone(), next)?;
        state.u_prev = std::mem::replace(&mut state.u_curr, next);
        state.aux = new_aux;
        state.step = step;
        state.t = step as f64 * self.dt;
        Ok(())
    }

    /// Pure form of [`Stepper::step_in_place`].
    pub fn step(&self, state: &PmlState) -> Result<PmlState> {
        let mut s = state.clone();
        self.step_in_place(&mut s)?;
        Ok(s)
    }

    fn advance_aux(&self, u: &Field<f64>, old: &AuxFields<f64>) -> AuxFields<f64> {
        let mut new = old.clone();
        let p = self.grid.p;
        let h = self.grid.h;
        for axis in 0..2 {
            if old.slab_support(axis).is_empty() {
                continue;
            }
            for side in Side::BOTH {
                for k in 1..=p {
                    let updated = {
                        let drive_src = |i: [i64; 2]| drive(side, axis, u, i, k as i64, h);
                        let lower = |m: usize| new.slab(side, axis, m);
                        self.update(old.slab(side, axis, k), axis, side, k, drive_src, lower)
                    };
                    *new.slab_mut(side, axis, k) = updated;
                }
            }
        }
        if !old.corner_support().is_empty() {
            for c in Corner::ALL {
                let side = c.axis1();
                for k2 in 1..=p {
                    let src = average(old.slab(c.axis2(), 1, k2), new.slab(c.axis2(), 1, k2));
                    for k1 in 1..=p {
                        let updated = {
                            let drive_src = |i: [i64; 2]| drive(side, 0, &src, i, k1 as i64, h);
                            let lower = |m: usize| new.corner(c, m, k2);
                            self.update(old.corner(c, k1, k2), 0, side, k1, drive_src, lower)
                        };
                        *new.corner_mut(c, k1, k2) = updated;
                    }
                }
            }
        }
        new
    }

    /// Explicit update of one auxiliary field from the old half level, with history
    /// terms read from the already advanced lower orders.
    fn update<'a>(
        &self,
        old: &Field<f64>,
        axis: usize,
        side: Side,
        k: usize,
        drive_at: impl Fn([i64; 2]) -> f64,
        lower: impl Fn(usize) -> &'a Field<f64>,
    ) -> Field<f64> {
        let dt = self.dt;
        let sig = &self.profile.axes[axis];
        let g_old = damped(old, sig, axis);
        Field::from_fn(old.support().clone(), |a, b| {
            let i = [a, b];
            let hist = history(side, axis, |m| damped(lower(m), sig, axis), i, k);
            old.get(a, b) + dt * (drive_at(i) - hist - self_term(side, axis, &g_old, i))
        })
    }
}

fn average(a: &Field<f64>, b: &Field<f64>) -> Field<f64> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| (x + y) * 0.5).collect();
    Field::from_data(a.support().clone(), data).expect("matching supports")
}

/// Recorded field at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub step: usize,
    pub t: f64,
    pub u: Field<f64>,
}

/// `u` at one node over time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTrace {
    pub position: [f64; 2],
    pub node: [i64; 2],
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<FieldSnapshot>,
    pub probes: Vec<ProbeTrace>,
    pub final_state: PmlState,
}

/// Simulation with its stencil computed once.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub cfg: SimulationConfig,
    pub stepper: Stepper,
}

impl Simulation {
    pub fn new(cfg: SimulationConfig) -> Result<Self> {
        cfg.validate()?;
        let st = compute_stencil(&cfg.kernel, &cfg.grid, cfg.quad_order)?;
        Self::with_stencil(cfg, st)
    }

    pub fn with_stencil(cfg: SimulationConfig, st: Stencil) -> Result<Self> {
        cfg.validate()?;
        let bound = cfg.cfl.safety * cfl_limit(&st);
        if cfg.dt > bound {
            if cfg.cfl.strict {
                return Err(Error::Cfl { dt: cfg.dt, bound });
            }
            warn!("time step {} exceeds the stability estimate {bound}", cfg.dt);
        }
        let stepper = Stepper::new(cfg.grid, st, cfg.profile.clone(), cfg.dt)?;
        Ok(Self { cfg, stepper })
    }

    pub fn init_state(&self) -> Result<PmlState> {
        self.stepper.init_state(self.cfg.initial.sample(&self.cfg.grid)?)
    }

    pub fn run(&self) -> Result<RunOutput> {
        self.run_observed(|_| Ok(()))
    }

    /// Runs to the final time, calling `observe` on the initial state and after every step.
    pub fn run_observed(&self, mut observe: impl FnMut(&PmlState) -> Result<()>) -> Result<RunOutput> {
        let cfg = &self.cfg;
        let n_steps = cfg.steps();
        let snap_steps: Vec<usize> = cfg.output.snapshot_times.iter().map(|&t| steps_for(t, cfg.dt)).collect();
        let wants_snapshot = |s: usize| {
            snap_steps.contains(&s) || cfg.output.snapshot_every.is_some_and(|e| e > 0 && s.is_multiple_of(e))
        };
        let h = cfg.grid.h;
        let outer = cfg.grid.outer();
        let mut probes: Vec<ProbeTrace> = cfg
            .output
            .probes
            .iter()
            .map(|&x| ProbeTrace {
                position: x,
                node: [
                    ((x[0] / h).round() as i64).clamp(-outer, outer),
                    ((x[1] / h).round() as i64).clamp(-outer, outer),
                ],
                samples: Vec::with_capacity(n_steps + 1),
            })
            .collect();
        let mut snapshots = Vec::new();
        let mut state = self.init_state()?;
        let mut record = |state: &PmlState, snapshots: &mut Vec<FieldSnapshot>| {
            for p in probes.iter_mut() {
                p.samples.push((state.t, state.u_curr.get(p.node[0], p.node[1])));
            }
            if wants_snapshot(state.step) || (n_steps == 0 && snapshots.is_empty()) {
                snapshots.push(FieldSnapshot {
                    step: state.step,
                    t: state.t,
                    u: state.u_curr.clone(),
                });
            }
        };
        record(&state, &mut snapshots);
        observe(&state)?;
        for _ in 0..n_steps {
            self.stepper.step_in_place(&mut state)?;
            record(&state, &mut snapshots);
            observe(&state)?;
        }
        Ok(RunOutput {
            snapshots,
            probes,
            final_state: state,
        })
    }
}
