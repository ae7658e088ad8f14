//! Command-line front end: landmark-file ingestion, the `fit`, `compare`,
//! `test-mean`, `density`, `sample` and `validate` subcommands, and run
//! reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod app;
pub mod io;
pub mod report;
pub mod workflow;

pub use app::{exit_code, main_with_args, parse_matrix, run, Cli, Command};
pub use io::{
    ingest, parse_landmarks, parse_raw, select_landmarks, write_landmark_file, write_landmarks,
    RawSpecimen, Specimen,
};
pub use report::{Comparison, FitEntry, GroupReport, LrtBlock, RunReport, SeriesEcho};
pub use workflow::{run_compare, run_test_mean, Group, RunConfig};
