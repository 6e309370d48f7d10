//! Sparse associative memories on binary neurons.
//!
//! Three storage rules share one neuron space and one state representation:
//!
//! * [`AmariNetwork`]: integer co-activation counts, local fields exclude the
//!   neuron itself.
//! * [`WillshawNetwork`]: clipped (binary) co-activation weights with the
//!   diagonal kept, so a neuron's own activity counts towards its score.
//! * [`GbNetwork`]: the clustered variant where every message has exactly one
//!   active neuron per cluster and weights only join distinct clusters.
//!
//! Retrieval rules live in [`dynamics`], closed-form capacity quantities in
//! [`theory`]. The crate is `no_std` and only needs `alloc`; file IO, the
//! Monte Carlo harness and the command line front end are in the `samn`
//! crate.

#![no_std]

extern crate alloc;

pub mod bits;
pub mod dynamics;
pub mod models;
pub mod patterns;
pub mod rng;
pub mod theory;

pub use dynamics::{
    iterate, retrieve_exhaustive, step_amari, step_gb_som, step_gb_wta, step_willshaw_threshold,
    step_willshaw_wta, DynamicsError, GbScore, RetrievalPolicy, Trajectory, Verdict, WtaRule,
};
pub use models::{
    codec, recognize, AmariNetwork, AssociativeMemory, GbNetwork, ModelError, ModelKind, Network,
    StoredSet, WillshawNetwork,
};
pub use patterns::{
    erase, gen_exact_c, gen_gb, gen_iid, ClusterLayout, ErasureMode, ErasureSpec, NeuronSpace,
    Pattern, PatternError,
};
