//! Figure pipelines, Monte-Carlo studies, data tables and the `gravsim` CLI.

pub mod config;
pub mod dataset;
pub mod error;
pub mod figures;
pub mod fit;
pub mod mc;
pub mod spec;

pub use dataset::{Dataset, Row, Table};
pub use error::{HarnessError, Result};
pub use figures::{run_figure, sensitivity_map};
pub use spec::SweepSpec;
