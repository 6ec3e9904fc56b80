//! Configuration, snapshot and table formats, the run driver and the command line.

pub mod cli;
pub mod config;
pub mod driver;
pub mod snapshot;
pub mod tables;

pub use config::{parse_config, Backend, ForcingMode, ForcingSpec, InitialSpec, RunConfig};
pub use driver::{execute_run, load_config, CliError, RunOutcome, Simulation};
pub use snapshot::{Layout, Snapshot, SnapshotError};
