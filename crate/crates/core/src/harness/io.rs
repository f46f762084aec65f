//! Trace persistence: CSV rows, full JSON traces and run entry points.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ProblemConfig;
use super::problem::{generate_problem, Problem};
use crate::error::{Error, Result};
use crate::model::{RunTrace, Vector};
use crate::ssc::{outer_solve, SolveOptions};

pub const TRACE_SCHEMA: &str = "ssc-fw/trace/v1";
pub const CSV_HEADER: &str = "k,f,gap_proxy,inner_steps,case,pi_tilde,cum_len,wall_ms";

/// A run together with the config that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub schema: String,
    pub config: ProblemConfig,
    pub trace: RunTrace,
}

impl TraceFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let tf: TraceFile = serde_json::from_str(&text)?;
        if tf.schema != TRACE_SCHEMA {
            return Err(Error::Config(format!("trace schema '{}' (expected '{TRACE_SCHEMA}')", tf.schema)));
        }
        Ok(tf)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Generates the problem and runs the outer loop.
pub fn run_config(cfg: &ProblemConfig, timing: bool) -> Result<(Problem, RunTrace)> {
    let pb = generate_problem(cfg)?;
    let opts = SolveOptions { max_iter: cfg.max_iter, eps_stat: cfg.eps_stat, tau: pb.tau, timing };
    let mut trace = outer_solve(pb.objective.as_ref(), &pb.domain, &pb.method, &pb.x0, &opts)?;
    trace.config_hash = cfg.hash();
    Ok((pb, trace))
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV row per outer iteration; `f` is the objective after the iteration.
pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::with_capacity(128 * (trace.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let mut cum = 0.0;
    for r in &trace.records {
        let step = (Vector::from_column_slice(&r.x_next) - Vector::from_column_slice(&r.x_k)).norm();
        cum += step;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            real(r.f_next),
            real(r.gap_proxy),
            r.inner_steps,
            r.termination_case.label(),
            real(r.pi_tilde),
            real(cum),
            real(r.wall_ms)
        );
    }
    out
}

/// Paths written by [`write_outputs`].
#[derive(Clone, Debug)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub trace: PathBuf,
    pub summary: PathBuf,
}

pub fn output_paths(dir: &Path, name: &str) -> OutputPaths {
    OutputPaths {
        csv: dir.join(format!("{name}.trace.csv")),
        trace: dir.join(format!("{name}.trace.json")),
        summary: dir.join(format!("{name}.summary.json")),
    }
}

pub fn write_outputs(dir: &Path, tf: &TraceFile, summary_json: &str) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir)?;
    let paths = output_paths(dir, &tf.config.name);
    std::fs::write(&paths.csv, trace_csv(&tf.trace))?;
    std::fs::write(&paths.trace, tf.to_json())?;
    std::fs::write(&paths.summary, summary_json)?;
    Ok(paths)
}
