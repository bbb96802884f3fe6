//! Linear multiclass teachers, the two supervision oracles and data sources.

mod data;
mod model;
mod oracle;

pub use data::{effective_classes, sample_sphere, Dataset};
pub use model::LinearModel;
pub use oracle::{argmax_query, comparison_query, LabelOracle, QueryLedger};
