//! Numerical laboratory for Gaussian bounded-variation calculus on convex
//! domains: truncated grids with Gaussian quadrature, the Mehler form of the
//! Ornstein-Uhlenbeck semigroup as a whole-space oracle, convex-body
//! smoothing, total-variation estimators, and the Neumann Ornstein-Uhlenbeck
//! evolution built from a discrete Dirichlet form.

pub mod bv;
pub mod convex;
pub mod error;
pub mod grid;
pub mod lab;
pub mod mehler;
pub mod operator;
pub mod rng;
pub mod special;
pub mod trace;

pub use convex::{ConvexBody, Halfspace};
pub use error::{Error, Result};
pub use grid::{gaussian_density, gaussian_integrate, GaussianGrid, Point, ScalarField, VectorField};
pub use operator::OuOperator;
pub use trace::SemigroupTrace;
