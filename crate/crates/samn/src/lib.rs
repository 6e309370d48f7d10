//! Simulation harness and command-line front end for the networks in
//! `samn-core`: retrieval sweeps, recognition probes, network files, result
//! tables and plot scripts.

pub mod cli;
pub mod experiments;
pub mod io;
pub mod plot;
pub mod selftest;

pub use experiments::{
    efficiency, run_retrieval_sweep, stability_probe, subclique_probe, wrong_message_probe,
    Distribution, Estimate, ExperimentError, ExperimentResult, ExperimentSpec, Load, NetworkSetup,
    PointResult, RunOptions,
};
