//! The guide in `book/`, compiled so that `cargo test` runs every listing.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/ch01_scores.md")]
pub mod ch01_scores {}

#[doc = include_str!("../../../book/src/ch02_augmentation.md")]
pub mod ch02_augmentation {}

#[doc = include_str!("../../../book/src/ch03_expression.md")]
pub mod ch03_expression {}

#[doc = include_str!("../../../book/src/ch04_synthesis.md")]
pub mod ch04_synthesis {}

#[doc = include_str!("../../../book/src/ch05_mastering.md")]
pub mod ch05_mastering {}

#[doc = include_str!("../../../book/src/ch06_corpora.md")]
pub mod ch06_corpora {}
