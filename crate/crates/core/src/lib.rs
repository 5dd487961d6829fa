//! Cross-city comparison of census block groups.
//!
//! Block groups of several cities are scored with a deprivation index
//! weighted by a reference city's standard deviations, joined to
//! assault/burglary/robbery incidents, and selected when they exceed the
//! reference city's medians of SNAP receipt, crime per capita and vacancy.
//! The crate also computes Moran's I, natural-breaks map classes and the
//! comparison tables that summarize each city.
//!
//! The `atlas` binary drives the whole pipeline from a JSON config; see
//! [`app::RunConfig`].

pub mod app;
pub mod error;
pub mod geo;
pub mod indices;
pub mod ingest;
pub mod selection;
pub mod stats;
pub mod variable;

pub use error::Error;
pub use variable::Variable;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/ingest.md")]
    mod ingest {}
    #[doc = include_str!("../../../book/src/spatial-join.md")]
    mod spatial_join {}
    #[doc = include_str!("../../../book/src/contiguity.md")]
    mod contiguity {}
    #[doc = include_str!("../../../book/src/deprivation.md")]
    mod deprivation {}
    #[doc = include_str!("../../../book/src/pca.md")]
    mod pca {}
    #[doc = include_str!("../../../book/src/morans-i.md")]
    mod morans_i {}
    #[doc = include_str!("../../../book/src/jenks.md")]
    mod jenks {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
