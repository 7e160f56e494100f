//! Simulation and verification toolkit for trading with a minimum holding
//! period: price-process generators, grid-adapted stopping rules and simple
//! strategies, statistical sign/reachability tests, exact martingale-measure
//! or arbitrage certificates on finite scenario trees, fractional-kernel
//! drift removal, and discrete hedging experiments.

pub mod csvio;
pub mod detect;
pub mod dmw;
pub mod error;
pub mod frackernel;
pub mod grid;
pub mod hedge;
pub mod procgen;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod strategy;
pub mod xform;

pub use detect::{ReachabilityReport, SearchReport, SignClass, Verdict};
pub use dmw::{ArbitrageCertificate, Certificate, MartingaleCertificate, ScenarioTree};
pub use error::{Error, Result};
pub use frackernel::{DensityPath, InverseExponent, KernelGrid};
pub use grid::{Path, QvPath, TimeGrid};
pub use hedge::{HedgeModel, HedgeReport, PayoffSpec, ProjectedStrategy};
pub use procgen::{FbmMethod, KernelShape, KernelSpec, MuSpec, PerturbationSpec, ProcessSpec};
pub use strategy::{
    Direction, EventSpec, GainsResult, PositionExpr, SimpleStrategy, StoppingRule,
};
pub use xform::{MonotoneMap, TimeChange};

/// Crate version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
