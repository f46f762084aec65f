//! Run summaries and trace verification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::io::{run_config, trace_csv, TraceFile, CSV_HEADER};
use super::problem::generate_problem;
use crate::error::Result;
use crate::model::{RunTrace, TerminationCase};
use crate::ssc::{verify_descent, CertificationReport, CheckResult};

pub const SUMMARY_SCHEMA: &str = "ssc-fw/summary/v1";

/// Least-squares line through (k, log10 v_k).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
    pub first_k: usize,
}

/// Fits log10(values) against their index over `[start, len)`, skipping non-positive values.
pub fn log_linear_fit(values: &[f64], start: usize) -> Option<LogFit> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(k, v)| (k as f64, v.log10()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some(LogFit { slope, intercept, r2, points: pts.len(), first_k: start })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub name: String,
    pub config_hash: String,
    pub domain: String,
    pub method: String,
    pub dim: usize,
    pub tau: f64,
    pub lipschitz: f64,
    pub iterations: usize,
    pub final_f: f64,
    pub final_gap_proxy: f64,
    pub stationary: bool,
    pub converged: bool,
    pub total_inner_steps: usize,
    pub case_counts: BTreeMap<String, usize>,
    pub certification: CertificationReport,
    pub gap_fit: Option<LogFit>,
    pub wall_time: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn build_report(tf: &TraceFile, domain: &str, dim: usize, certification: CertificationReport) -> Report {
    let t = &tf.trace;
    let mut case_counts = BTreeMap::new();
    for r in &t.records {
        *case_counts.entry(r.termination_case.label().to_string()).or_insert(0) += 1;
    }
    let last = t.records.last();
    let final_gap = last.map_or(f64::NAN, |r| r.gap_proxy);
    let gaps: Vec<f64> = t.records.iter().map(|r| r.gap_proxy).collect();
    Report {
        schema: SUMMARY_SCHEMA.into(),
        name: tf.config.name.clone(),
        config_hash: t.config_hash.clone(),
        domain: domain.into(),
        method: tf.config.method.name(),
        dim,
        tau: t.tau,
        lipschitz: t.lipschitz,
        iterations: t.records.len(),
        final_f: t.final_f(),
        final_gap_proxy: final_gap,
        stationary: last.is_some_and(|r| r.termination_case == TerminationCase::Stationary),
        converged: final_gap <= tf.config.eps_stat,
        total_inner_steps: t.records.iter().map(|r| r.inner_steps).sum(),
        case_counts,
        certification,
        gap_fit: log_linear_fit(&gaps, gaps.len() / 2),
        wall_time: t.wall_time,
    }
}

/// Runs a config end to end and certifies the result.
pub fn solve_and_report(cfg: &super::config::ProblemConfig, timing: bool) -> Result<(TraceFile, Report)> {
    let (pb, trace) = run_config(cfg, timing)?;
    let cert = verify_descent(&trace, pb.objective.as_ref(), &pb.domain, pb.tau);
    let tf = TraceFile { schema: super::io::TRACE_SCHEMA.into(), config: cfg.clone(), trace };
    let report = build_report(&tf, &pb.domain.name(), pb.domain.dim(), cert);
    Ok((tf, report))
}

fn same_records(a: &RunTrace, b: &RunTrace) -> (bool, usize) {
    if a.records.len() != b.records.len() {
        return (false, a.records.len().min(b.records.len()));
    }
    for (i, (x, y)) in a.records.iter().zip(&b.records).enumerate() {
        let mut x = x.clone();
        x.wall_ms = y.wall_ms;
        if x != *y {
            return (false, i);
        }
    }
    (a.lipschitz == b.lipschitz && a.tau == b.tau, a.records.len())
}

/// Full certification of a stored trace: recomputed descent inequalities,
/// stored constants, config hash and a bit-exact replay.
pub fn verify_trace_file(tf: &TraceFile) -> Result<CertificationReport> {
    let pb = generate_problem(&tf.config)?;
    let mut report = verify_descent(&tf.trace, pb.objective.as_ref(), &pb.domain, pb.tau);
    let mut hash = CheckResult::new("config_hash", "stored hash = sha256(canonical config)");
    let ok = tf.trace.config_hash == tf.config.hash();
    hash.push(0, ok, if ok { 0.0 } else { 1.0 });
    let mut consts = CheckResult::new("constants", "stored (L, τ) = (L, τ) regenerated from config");
    let dl = (tf.trace.lipschitz - pb.objective.lipschitz()).abs();
    let dt = (tf.trace.tau - pb.tau).abs();
    consts.push(0, dl == 0.0 && dt == 0.0, dl.max(dt));
    let mut clock = CheckResult::new("wall_clock", "0 ≤ wall_ms_k ≤ wall_ms_{k+1} ≤ 1000·wall_time");
    let total_ms = tf.trace.wall_time * 1e3;
    let mut prev = 0.0;
    for (i, r) in tf.trace.records.iter().enumerate() {
        let over = (prev - r.wall_ms).max(r.wall_ms - total_ms).max(0.0);
        clock.push(
            i,
            r.wall_ms >= prev && r.wall_ms <= total_ms,
            if r.wall_ms.is_nan() { f64::INFINITY } else { over },
        );
        prev = r.wall_ms;
    }
    report.checks.push(clock);
    let (_, rerun) = run_config(&tf.config, false)?;
    let mut replay = CheckResult::new("replay", "every record equals a rerun of the embedded config");
    let (ok, at) = same_records(&tf.trace, &rerun);
    replay.push(at, ok, if ok { 0.0 } else { 1.0 });
    report.checks.push(hash);
    report.checks.push(consts);
    report.checks.push(replay);
    report.notes.push("wall_ms is excluded from the replay comparison".into());
    Ok(report)
}

/// Compares a CSV trace with the rows implied by the JSON trace.
pub fn verify_csv(csv: &str, tf: &TraceFile) -> CheckResult {
    let mut check = CheckResult::new("csv_consistency", "CSV rows = rows derived from the JSON trace");
    let expected = trace_csv(&tf.trace);
    let got: Vec<&str> = csv.lines().collect();
    let want: Vec<&str> = expected.lines().collect();
    if got.first() != Some(&CSV_HEADER) {
        check.push(0, false, f64::INFINITY);
    }
    for i in 0..got.len().max(want.len()) {
        let (a, b) = (got.get(i), want.get(i));
        let ok = match (a, b) {
            (Some(a), Some(b)) => rows_equal(a, b),
            _ => false,
        };
        check.push(i.saturating_sub(1), ok, if ok { 0.0 } else { 1.0 });
    }
    check
}

fn rows_equal(a: &str, b: &str) -> bool {
    let fa: Vec<&str> = a.split(',').collect();
    let fb: Vec<&str> = b.split(',').collect();
    fa.len() == fb.len()
        && fa.iter().zip(&fb).all(|(x, y)| match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(u), Ok(v)) => u == v || (u.is_nan() && v.is_nan()),
            _ => x == y,
        })
}
