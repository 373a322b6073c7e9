//! Nonholonomic motion planning for driftless control-affine systems.
//!
//! The crate builds P. Hall bases, the canonical free nilpotent system,
//! privileged coordinates with canonical first-order approximations,
//! desingularization by lifting, exact sinusoidal steering of the
//! nilpotent approximation and the iterative global planner that drives the
//! true system with it.
//!
//! The symbolic pipeline is generic over [`Scalar`] (exact rationals, `f64`,
//! `f32`); steering and simulation are generic over `num_traits::Float`.

pub mod canonical;
pub mod chart;
pub mod desing;
pub mod error;
pub mod hall;
pub mod law;
pub mod linalg;
pub mod planner;
pub mod poly;
pub mod privcoord;
pub mod scalar;
pub mod sim;
pub mod steer;
pub mod sysfile;
pub mod system;
pub mod trig;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;
/// Exact polynomial.
pub type ExactPoly = poly::Poly<Rational>;
/// Double precision polynomial.
pub type Poly64 = poly::Poly<f64>;
/// Canonical system with exact coefficients.
pub type ExactCanonical = canonical::CanonicalSystem<Rational>;
/// Double precision control law.
pub type ControlLaw64 = law::ControlLaw<f64>;
/// Single precision control law.
pub type ControlLaw32 = law::ControlLaw<f32>;
/// Double precision trajectory.
pub type Trajectory64 = sim::Trajectory<f64>;
/// Lifted system with double precision charts.
pub type Lifted64 = desing::LiftedSystem<f64>;
/// Lifted system with exact charts.
pub type ExactLifted = desing::LiftedSystem<Rational>;
/// First-order approximation with double precision chart.
pub type Approx64 = privcoord::ApproxSystem<f64>;
/// First-order approximation with exact chart.
pub type ExactApprox = privcoord::ApproxSystem<Rational>;
