//! Data pipeline and meta-evaluation toolkit for learned machine translation
//! quality metrics.
//!
//! The crate covers everything around the regression model itself:
//!
//! - [`corpus`]: ingestion and persistence of human ratings and metric scores
//! - [`ratings`]: z-normalization, aggregation and target-scale transforms
//! - [`synthgen`]: seeded generation of synthetic failure-mode examples
//! - [`mixture`]: input serialization and training-mixture assembly
//! - [`metaeval`]: pairwise accuracy (with tie calibration) and Pearson statistics
//! - [`challenge`]: paired challenge-set construction and evaluation
//! - [`selection`]: checkpoint ranking
//! - [`baseline`]: a lexical character n-gram scorer used as a stand-in metric

pub mod baseline;
pub mod challenge;
pub mod corpus;
pub mod error;
pub mod metaeval;
pub mod mixture;
pub mod ratings;
pub mod seed;
pub mod selection;
pub mod synthgen;

pub use error::{Error, Result};

/// A computed value together with the non-fatal warnings raised while
/// producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

impl<T> Outcome<T> {
    pub fn new(value: T) -> Self {
        Self {
            value,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{message}");
        self.warnings.push(message);
    }
}
