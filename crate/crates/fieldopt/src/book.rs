//! Doc-test anchors for the guide in `book/`: every fenced Rust block in
//! the chapters compiles and runs under `cargo test --doc`, keeping the
//! book and the crate in sync.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/problems.md")]
pub mod problems {}

#[doc = include_str!("../../../book/src/mcs.md")]
pub mod mcs {}

#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines {}

#[doc = include_str!("../../../book/src/reservoir.md")]
pub mod reservoir {}

#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}

#[doc = include_str!("../../../book/src/joint.md")]
pub mod joint {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
