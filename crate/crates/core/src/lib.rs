//! Physician referral-network analytics.
//!
//! Builds directed weighted graphs from shared-patient edge lists and runs the
//! structural, generative-model and state-level analyses over them. Every
//! randomized routine takes an explicit seed and gives identical results
//! regardless of thread count.

pub mod coreperiphery;
pub mod graph;
pub mod gravity;
pub mod ingest;
pub mod metrics;
pub mod motifs;
pub mod nullmodels;
pub mod powerlaw;
pub mod rng;
pub mod statelab;
pub mod states;
pub mod stats;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ingest.md")]
    mod ingest {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/powerlaw.md")]
    mod powerlaw {}
    #[doc = include_str!("../../../book/src/triads.md")]
    mod triads {}
    #[doc = include_str!("../../../book/src/coreperiphery.md")]
    mod coreperiphery {}
    #[doc = include_str!("../../../book/src/nullmodels.md")]
    mod nullmodels {}
    #[doc = include_str!("../../../book/src/gravity.md")]
    mod gravity {}
    #[doc = include_str!("../../../book/src/statelab.md")]
    mod statelab {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
