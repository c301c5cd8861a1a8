//! Files, command line and HTTP API around [`regulus_core`].

pub mod bundle;
pub mod export;
pub mod service;
pub mod table;

pub use bundle::{AnalysisBundle, AnalysisConfig, BundleError};
pub use table::{load_table, TableError, TableOptions};
