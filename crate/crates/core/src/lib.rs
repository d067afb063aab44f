//! Numerical laboratory for dispersive estimates of the Schrödinger group.

pub mod error;
pub mod experiments;
pub mod fft;
pub mod field;
pub mod fit;
pub mod grid;
pub mod imethod;
pub mod interaction;
pub mod par;
pub mod lp;
pub mod nls;
pub mod norms;
pub mod spectral;
pub mod wave_packets;

pub use error::{DlabError, Result};
pub use field::{Field, SpacetimeField};
pub use grid::Grid;
