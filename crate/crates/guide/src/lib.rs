//! The SIGHT guide, compiled.
//!
//! Each chapter of the mdbook in `book/` becomes the doc comment of an empty
//! module here, so `cargo test -p sight-guide --doc` runs every Rust snippet
//! in the book against the current library. mdbook cannot do that on its
//! own.

// One module per chapter so a failing doctest names the chapter it came
// from.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/quickstart.md")]
pub mod quickstart {}
#[doc = include_str!("../../../book/src/library.md")]
pub mod library {}
#[doc = include_str!("../../../book/src/adapter.md")]
pub mod adapter {}
#[doc = include_str!("../../../book/src/ablations.md")]
pub mod ablations {}
#[doc = include_str!("../../../book/src/formats.md")]
pub mod formats {}
#[doc = include_str!("../../../book/src/benchmark.md")]
pub mod benchmark {}
#[doc = include_str!("../../../book/src/reproducibility.md")]
pub mod reproducibility {}
