//! Decision-tree induction driven by noise stability, with exact Fourier
//! machinery over small Boolean cubes and classical impurity baselines.
//!
//! Inputs live in `{-1,+1}^n` and are encoded as bitmasks: bit `i-1` set means
//! `x_i = +1`. Variables are named `1..=n` throughout the public API.

pub mod boolfn;
pub mod builder;
pub mod error;
pub mod fourier;
pub mod noise;
pub mod splitters;
pub mod sqestimate;
pub mod tree;
pub mod verify;

pub use builder::{build_impurity_dt, build_stabilizing_dt, osss_progress_check, preset_params, BuildParams, BuildReport, Preset};
pub use boolfn::{dist, make_target, random_dt_target, BoolFn, Restriction, TargetSpec};
pub use error::{Error, Result};
pub use fourier::{default_degree, spectrum, Spectrum};
pub use noise::{ns_exact, ns_of, ns_wrt_tree, stability_gain};
pub use sqestimate::{sq_answer, SqBackend, SqOracle, SqQuery};
pub use splitters::{ImpurityKind, ScoreEntry, TieBreak};
pub use tree::{f_completion, opt_brute, tree_error, CompletedTree, NodeId, PartialTree, TraceRow};
