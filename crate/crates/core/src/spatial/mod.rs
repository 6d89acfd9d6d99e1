//! Skew-selfadjoint spatial operators, their mode catalog and Galerkin data.

mod catalog;
mod field;
mod scheme;
pub mod verify;

pub use catalog::{
    dirichlet_square_2d, mixed_bc_1d, periodic_1d, Descriptor, Instance, Mode, SpatialOperator, DEFAULT_RESOLUTION,
};
pub use field::{Field, Term, Trig1d};
pub use scheme::{
    apply_p, build_scheme, embed_j, graph_norm, project_a, GalerkinScheme, SchemeDescriptor, ORDERING_VERSION,
};
