//! Batch runs over suites of configs.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ProblemConfig;
use super::report::{solve_and_report, Report};
use crate::error::{Error, Result};

pub const SUITE_SCHEMA: &str = "ssc-fw/suite/v1";
pub const THREADS_ENV: &str = "SSC_FW_THREADS";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SuiteEntry {
    Path(String),
    Inline(Box<ProblemConfig>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Suite {
    pub schema: String,
    pub name: String,
    pub configs: Vec<SuiteEntry>,
}

impl Suite {
    pub fn load(path: &Path) -> Result<(Self, Vec<ProblemConfig>)> {
        let text = std::fs::read_to_string(path)?;
        let suite: Suite = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        if suite.schema != SUITE_SCHEMA {
            return Err(Error::Config(format!("suite schema '{}' (expected '{SUITE_SCHEMA}')", suite.schema)));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let configs = suite
            .configs
            .iter()
            .map(|e| match e {
                SuiteEntry::Path(p) => ProblemConfig::load(&base.join(p)),
                SuiteEntry::Inline(c) => {
                    c.validate()?;
                    Ok((**c).clone())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((suite, configs))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub report: Option<Report>,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn certified(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.certification.passed())
    }
}

/// Thread cap from the environment, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

/// Runs every config; rows come back in suite order.
pub fn run_suite(configs: &[ProblemConfig], timing: bool) -> Result<Vec<BenchRow>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| match solve_and_report(cfg, timing) {
                Ok((_, report)) => BenchRow { name: cfg.name.clone(), report: Some(report), error: None },
                Err(e) => BenchRow { name: cfg.name.clone(), report: None, error: Some(e.to_string()) },
            })
            .collect()
    }))
}

pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:<14} {:<10} {:>5} {:>6} {:>8} {:>13} {:>11} {:>9}  certified",
        "name", "domain", "method", "n", "iters", "inner", "final_f", "gap_proxy", "fit_slope"
    );
    for r in rows {
        match (&r.report, &r.error) {
            (Some(rep), _) => {
                let fails = rep.certification.failed_names();
                let _ = writeln!(
                    out,
                    "{:<28} {:<14} {:<10} {:>5} {:>6} {:>8} {:>13.6e} {:>11.3e} {:>9}  {}",
                    r.name,
                    rep.domain,
                    rep.method,
                    rep.dim,
                    rep.iterations,
                    rep.total_inner_steps,
                    rep.final_f,
                    rep.final_gap_proxy,
                    rep.gap_fit.as_ref().map_or("-".into(), |f| format!("{:.4}", f.slope)),
                    if fails.is_empty() { "yes".to_string() } else { format!("NO ({})", fails.join(",")) }
                );
            }
            (None, err) => {
                let _ = writeln!(out, "{:<28} error: {}", r.name, err.as_deref().unwrap_or("unknown"));
            }
        }
    }
    out
}
