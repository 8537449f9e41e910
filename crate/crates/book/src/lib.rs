//! Compiles the guide's listings as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/battery_queue.md")]
pub mod battery_queue {}

#[doc = include_str!("../../../book/src/noma.md")]
pub mod noma {}

#[doc = include_str!("../../../book/src/oma.md")]
pub mod oma {}

#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
