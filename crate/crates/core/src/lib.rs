//! Verification toolkit for the narrow escape problem on the unit disk and ball.
//!
//! The crate pairs three independent views of the exit event through small
//! absorbing windows:
//!
//! * closed-form quasimodes and asymptotic predictions ([`quasimode`], [`asymptotics`]),
//! * a P1 finite-element solver for the mixed Dirichlet–Neumann eigenproblem ([`fem`]),
//! * a reflected Brownian motion simulator with exit statistics ([`montecarlo`]).
//!
//! The closed-form modules are generic over [`Scalar`]; concrete aliases for
//! `f64` and `f32` are exported below.

pub mod asymptotics;
pub mod compare;
pub mod config;
pub mod fem;
pub mod geometry;
pub mod montecarlo;
pub mod quasimode;
pub mod scalar;
pub mod svg;

pub use scalar::Scalar;

pub type WindowSpec64 = geometry::WindowSpec<f64>;
pub type WindowSpec32 = geometry::WindowSpec<f32>;
pub type DomainConfig64 = geometry::DomainConfig<f64>;
pub type DomainConfig32 = geometry::DomainConfig<f32>;
pub type LevelSetBounds64 = geometry::LevelSetBounds<f64>;
pub type Quasimode64 = quasimode::Quasimode<f64>;
pub type Quasimode32 = quasimode::Quasimode<f32>;
pub type QuadratureRule64 = quasimode::QuadratureRule<f64>;
pub type Prediction64 = asymptotics::AsymptoticPrediction<f64>;
pub type Prediction32 = asymptotics::AsymptoticPrediction<f32>;
