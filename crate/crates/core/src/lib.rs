//! Numerical laboratory for outer billiards about smooth strictly convex
//! curves: the billiard map, the area generating function and its
//! derivatives, discrete Jacobi fields and conjugate points, and the
//! integral quantities (defect integral, polar-dual areas, Santalo point)
//! that separate ellipses from every other curve.

pub mod billiard;
pub mod cli;
pub mod curve;
pub mod error;
pub mod generating;
pub mod geometry;
pub mod io;
pub mod jacobi;
pub mod quadrature;
pub mod rigidity;
pub mod roots;
pub mod verify;

pub use billiard::{BilliardMap, Orientation, PhasePoint};
pub use curve::{ConvexCurve, CurveSpec};
pub use error::{Error, Result};
pub use geometry::PlanePoint;
