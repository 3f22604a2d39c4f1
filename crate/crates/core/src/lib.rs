//! Peridynamic scalar waves on a uniform lattice with a discrete perfectly matched layer.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod holomorphy;
pub mod integrator;
pub mod io;
pub mod kernel;
pub mod pml;
pub mod quadrature;
pub mod stencil;

pub use error::{Error, Result};
pub use grid::{Field, GridConfig, IndexSet, NodeFn, Scalar, Support};
pub use kernel::{GammaBar, KernelFamily, KernelSpec};
pub use stencil::{apply_operator, apply_operator_field, compute_stencil, dispersion_omega2, Stencil};
pub use integrator::{
    FieldSnapshot, InitialCondition, OutputConfig, PmlState, ProbeTrace, RunOutput, Simulation, SimulationConfig,
};
pub use pml::{PmlProfile, WaveMode};
