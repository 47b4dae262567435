//! Word-expert named-entity disambiguation.
//!
//! The pipeline has two stages. A dictionary harvested from titles,
//! redirects, disambiguation pages and anchor-text counts proposes ranked
//! candidate entities for a mention string ([`dictbuild`], [`lookup`]).
//! A per-string maximum-entropy classifier then picks among them using the
//! mention's context ([`wordexpert`]), optionally after expanding the
//! mention to a longer, less ambiguous name found in the same document
//! ([`expand`]). [`evalkit`] scores the results.

pub mod canonical;
pub mod dictbuild;
pub mod error;
pub mod evalkit;
pub mod expand;
pub mod lookup;
pub mod par;
mod tsv;
pub mod wordexpert;

pub use error::{Error, Result};
