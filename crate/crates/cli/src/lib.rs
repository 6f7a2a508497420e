//! Command-line harness around `sleac-core`: run configuration files,
//! parameter sweeps with CSV output and per-point aggregates, and tables of
//! closed-form bounds.

pub mod config;
pub mod sweep;
pub mod table;

pub use config::{Config, ConfigError, RegionSource};
pub use sweep::{aggregate, Aggregate, Row, SweepError, SweepSpec};
pub use table::{bounds_table, BoundRow, BoundsCase, BoundsQuery, TableError};
