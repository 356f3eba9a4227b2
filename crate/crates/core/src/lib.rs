//! Geodesic flows of right-invariant L² metrics on diffeomorphism groups of
//! the flat 2-torus, and numerical checks of when the volume-preserving and
//! symplectic subgroups are totally geodesic.

pub mod calculus;
pub mod cli;
pub mod criteria;
pub mod error;
pub mod euler_arnold;
pub mod fieldexpr;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod hodge;

pub use error::{GeoError, Result};
pub use fields::{Components, MetricField, OneFormField, ScalarField, TwoFormField, VectorField};
pub use grid::{Axis, DiffMode, GridSpec};
