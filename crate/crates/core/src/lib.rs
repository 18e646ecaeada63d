//! Numerical toolkit for isoperimetric and Sobolev inequalities on
//! manifolds with asymptotically nonnegative curvature.

pub mod abp;
pub mod error;
pub mod grid;
pub mod manifold;
pub mod ode;
pub mod profile;
pub mod quadrature;
pub mod radial;
pub mod report;
pub mod sobolev;
pub mod submanifold;
pub mod sweep;

pub use error::{Error, Result};
