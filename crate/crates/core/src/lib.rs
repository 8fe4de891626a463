//! Ultra-weak discontinuous Galerkin discretization of the periodic linear
//! Schrodinger equation `i u_t + u_xx = 0` in one dimension, with the tools
//! needed to study its superconvergence: flux-matching projections,
//! correction functions, special points, error metrics and SIAC filtering.

pub mod basis;
pub mod correction;
pub mod diagnostics;
pub mod error;
pub mod flux;
pub mod harness;
pub mod mesh;
pub mod projection;
pub mod siac;
pub mod solver;

pub use error::{Result, UwdgError};
pub use flux::{Assumption, FluxConfig, FluxSetup};
pub use mesh::{make_mesh, Mesh1D, MeshKind};
pub use projection::{AnalyticField, DGFunction, PlaneWave};
