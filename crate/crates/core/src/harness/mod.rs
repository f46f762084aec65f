//! Configs, problem generation, trace files, reports and the CLI.

pub mod bench;
pub mod cli;
pub mod config;
pub mod io;
pub mod problem;
pub mod reference;
pub mod report;

pub use config::ProblemConfig;
pub use io::{run_config, trace_csv, TraceFile};
pub use problem::{generate_problem, Problem};
pub use report::{solve_and_report, verify_trace_file, Report};
