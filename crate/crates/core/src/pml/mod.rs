//! Discrete perfectly matched layer: damping profiles, auxiliary fields and the
//! right-hand sides of the layer equations.

pub mod damping;
pub mod profile;
pub mod rhs;

pub use damping::{damping_factor, decay_rate_mu, eta, ExtendedMode, StretchedCoordinate, WaveMode};
pub use profile::{AxisProfile, PmlProfile};
pub use rhs::{
    aux_rhs_bar, aux_rhs_corner, aux_rhs_tilde, layer_terms_into, main_rhs, AuxFields, Corner, Side,
};
