//! Semilinear torsional rigidity `T_γ` on planar domains and on geodesic
//! disks of rotationally symmetric surfaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod conformal;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod geometry;
pub mod mesh;
pub mod ode;
mod par;
pub mod quad;
pub mod radial_oracle;
pub mod shape;
pub mod solver;
pub mod spline;

pub use error::{Error, Result};
