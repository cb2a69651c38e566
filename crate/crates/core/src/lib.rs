//! Genetic-evolutionary training of shallow unit-model populations.
//!
//! A run samples a pool of small sub-instances (sub-networks of a graph, or
//! mini-batches of a table), trains a population of unit models on batches
//! drawn from that pool, and evolves the population through fitness-weighted
//! selection, entry-wise crossover and uniform mutation. The final generation
//! is assembled into node embeddings or a best-model classifier.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod evolution;
pub mod graph;
pub mod io;
pub mod matrix;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod tabular;

pub use error::{Error, Result};
