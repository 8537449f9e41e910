//! Online power allocation for an energy-harvesting downlink transmitter.
//!
//! A transmitter with a finite battery serves `K` users per time slot over
//! NOMA (superposition with successive interference cancellation) or OMA
//! (disjoint bandwidth fractions). Energy arrives at random; each slot the
//! controller picks a total power and a split among users to maximize the
//! long-run sum rate, optionally subject to per-user rate floors.
//!
//! The controller turns the battery into a virtual queue `Q = E_b − C` and
//! solves one small convex problem per slot. The per-slot solvers live in
//! [`noma`] and [`oma`], the comparison policies in [`baselines`], and the
//! slot loop in [`sim`].
//!
//! ```
//! use ehalloc::{run_episode, Scheme, SystemConfig};
//!
//! let cfg = SystemConfig::default_for(Scheme::NomaWr);
//! let (trace, summary) = run_episode(&cfg, 7, 0, 200)?;
//! assert_eq!(trace.len(), 200);
//! assert!(summary.min_sum_rate.unwrap() >= 4.0 - 1e-9);
//! # Ok::<(), ehalloc::Error>(())
//! ```

pub mod baselines;
pub mod config;
pub mod error;
pub mod figures;
pub mod lyapunov;
pub mod model;
pub mod noma;
pub mod numerics;
pub mod oma;
pub mod sim;
pub mod stochastic;
pub mod svg;
pub mod trace;

pub use error::{Error, Result};
pub use lyapunov::{compute_c, compute_v_max, prepare, validate_wr_feasibility, QueueParams, QueueState};
pub use model::{rate_noma, rate_oma, Access, Allocation, Scheme, SlotState, SystemConfig};
pub use sim::{run_episode, run_summary, sweep, RunSummary, Simulation, SlotRecord};
pub use stochastic::{draw_slot, stream_for_run, ArrivalModel, ChannelModel, FadingDistribution};
