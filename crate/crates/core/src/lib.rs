//! Sampling constants of dominating sets in weighted Bergman spaces on the
//! unit disk and in Fock spaces on the plane.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! `*64` and `*32` aliases below fix the scalar.

pub mod analysis;
pub mod bounds;
pub mod covering;
pub mod error;
pub mod fock;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod region;
pub mod remez;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point64 = geometry::Point<f64>;
pub type Region64 = region::Region<f64>;
pub type SpaceParams64 = analysis::SpaceParams<f64>;
pub type AnalyticFunction64 = analysis::AnalyticFunction<f64>;
pub type BoundConfig64 = bounds::BoundConfig<f64>;
pub type FockParams64 = fock::FockParams<f64>;
pub type SamplingResult64 = sampling::SamplingResult<f64>;

pub type Point32 = geometry::Point<f32>;
pub type Region32 = region::Region<f32>;
pub type SpaceParams32 = analysis::SpaceParams<f32>;
pub type AnalyticFunction32 = analysis::AnalyticFunction<f32>;
pub type BoundConfig32 = bounds::BoundConfig<f32>;
pub type FockParams32 = fock::FockParams<f32>;
pub type SamplingResult32 = sampling::SamplingResult<f32>;
