//! Runs every code block in the book as a doctest, keeping the guide and
//! the crate in sync. `cargo test --doc` exercises all of them.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/distance-classifiers.md")]
mod distance_classifiers {}

#[doc = include_str!("../../../book/src/block-dissimilarity.md")]
mod block_dissimilarity {}

#[doc = include_str!("../../../book/src/estimating-blocks.md")]
mod estimating_blocks {}

#[doc = include_str!("../../../book/src/energy-separation.md")]
mod energy_separation {}

#[doc = include_str!("../../../book/src/simulations.md")]
mod simulations {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
