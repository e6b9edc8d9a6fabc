//! Joint cache partitioning and request routing for networks of partitioned
//! caches shared by several content providers.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the scenario description (providers, caches,
//!   connectivity, optional bandwidth limits and delays) and the [`Solution`]
//!   type every solver returns.
//! * [`che`] evaluates the characteristic-time (Che) approximation for LRU,
//!   FIFO and RANDOM slices: hit probabilities, hit rates and their derivative
//!   with respect to slice size.
//! * [`alloc`] solves the centralized problem: per-cache KKT allocation,
//!   exhaustive enumeration of single-cache routings, alternate convex search
//!   and a probabilistic-routing grid oracle.
//! * [`decentral`] runs the price-based mechanism in which providers bid for
//!   cache space against posted prices.
//! * [`bandwidth`] and [`latency`] are the bandwidth-limited and
//!   delay-oriented variants.
//! * [`sim`] is a seeded request-level simulator used to validate the model.
//!
//! Data-parallel loops (routing enumeration, sweeps, simulator campaigns) go
//! through [`par`], which uses rayon when the `parallel` feature is enabled
//! and plain iterators otherwise.

pub mod alloc;
pub mod bandwidth;
pub mod che;
pub mod decentral;
mod error;
pub mod family;
pub mod latency;
pub mod matrix;
pub mod model;
mod numeric;
pub mod objective;
pub mod par;
pub mod report;
pub mod sim;
pub mod sweep;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{
    CacheNode, ContentProvider, DemandModel, Scenario, Solution, UtilityKind, UtilitySpec,
};
pub use objective::{ObjectiveKind, Problem};
