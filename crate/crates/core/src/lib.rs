//! Pricing a product whose quality is learned from buyer reviews.
//!
//! Buyers share a prior that the product is good, buy when the expected
//! utility covers the price, and leave a like or a dislike. The seller picks
//! prices (dynamic or a single static price) and may withdraw the product.
//!
//! * [`model`]: parameters, Bayesian updates, lattice detection.
//! * [`catalan`]: exact counts of review histories that avoid a barrier.
//! * [`series`]: truncated path-sum solver with certified error.
//! * [`dp`]: dynamic program on the lattice of reachable priors.
//! * [`learning`]: probability of selling forever and false negatives.
//! * [`extended`]: quality drawn from a general distribution on `[0, 1]`.
//! * [`simulator`]: Monte Carlo ground truth.
//! * [`figures`]: data behind the standard price and cost sweeps.

pub mod catalan;
pub mod dp;
pub mod error;
pub mod extended;
pub mod figures;
pub mod learning;
pub mod model;
pub mod series;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{ModelParams, PricingMode, Review, ReviewCount};
