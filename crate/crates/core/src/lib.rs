//! Time irreversibility of (possibly non-stationary) series via directed
//! visibility graphs.
//!
//! A series is mapped to its natural or horizontal visibility graph with
//! links oriented along the time arrow. The Kullback-Leibler divergence
//! between the in-degree and out-degree distributions measures how far the
//! series is from being statistically time reversible. Per-window values
//! are aggregated by calendar year into entity scores and year-by-entity
//! feature matrices, which feed PCA and complete-linkage clustering.

pub mod analytics;
pub mod error;
pub mod irreversibility;
pub mod nullmodels;
pub mod pipeline;
pub mod powerlaw;
pub mod series;
pub mod visibility;

pub use error::{Error, Result};
pub use irreversibility::{Bias, DivergenceConfig, DivergenceKind, IrreversibilityProfile};
pub use series::{TimeSeries, Window};
pub use visibility::{DegreeDistribution, DirectedVisibilityGraph, GraphKind};
