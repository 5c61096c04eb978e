pub mod bits;
pub mod channel;
pub mod cli;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod quantize;
pub mod reciprocity;
pub mod reconcile;
pub mod rng;
pub mod stats;
pub mod turbo;
