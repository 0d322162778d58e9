//! Rule extraction from student-model data.
//!
//! A one-hidden-layer network is trained on one-hot encoded categorical
//! records; a genetic algorithm then searches, per class, for the input bit
//! string that maximizes that class's output activation. Each optimal bit
//! string decodes into an IF-THEN rule (OR within an attribute, AND across
//! attributes), which is refined against the data and collected into an
//! ordered rule set by sequential covering.
//!
//! Alongside the extraction pipeline the crate carries the psychometric
//! toolkit needed to analyse the cohorts: t-tests, correlations, partial
//! correlation, Cronbach's alpha, Levene's test, one-way ANOVA, two-group
//! MANOVA and principal components with varimax rotation. [`synthgen`]
//! generates synthetic cohorts from published summary statistics.

pub mod bits;
pub mod error;
pub mod evolver;
pub mod hashing;
pub mod linalg;
pub mod neural;
pub mod psychostats;
pub mod rulekit;
pub mod schema;
pub mod seed;
pub mod synthgen;

pub use bits::BitString;
pub use error::{Error, ErrorKind, Result};
