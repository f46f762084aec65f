//! Command-line front end. Exit codes: 0 success, 2 certification failure, 1 error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use super::bench::{format_table, run_suite, Suite};
use super::config::ProblemConfig;
use super::io::{write_outputs, TraceFile};
use super::problem::generate_problem;
use super::report::{solve_and_report, verify_csv, verify_trace_file};
use crate::kl_rates::{certify_objective_rate, certify_tail_length, Desingularizer, RateCertificate, RateConstants};
use crate::model::Vector;
use crate::pwidth::pyramidal_width_bruteforce;
use crate::ssc::CertificationReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CERT_FAIL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "ssc-fw", version, about = "Short-step-chain Frank-Wolfe solver with descent certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a config and write <name>.trace.csv, <name>.trace.json and <name>.summary.json.
    Solve {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Record zero wall-clock times (byte-identical outputs).
        #[arg(long)]
        no_timing: bool,
    },
    /// Certify a stored trace (.trace.json, or a .trace.csv next to its .trace.json).
    Verify { trace: PathBuf },
    /// Check KL rate bounds for φ(t) = (M/θ)t^θ on a stored trace.
    Rates {
        trace: PathBuf,
        #[arg(long = "M", visible_alias = "m")]
        m: f64,
        #[arg(long)]
        theta: f64,
        /// Optimal value; defaults to the smallest recorded objective.
        #[arg(long)]
        fstar: Option<f64>,
    },
    /// Brute-force pyramidal width of {"atoms": [[..], ..], "grid": n}.
    Pwidth { atoms: PathBuf },
    /// Run a suite of configs and print a summary table.
    Bench {
        suite: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Deserialize)]
struct AtomsFile {
    atoms: Vec<Vec<f64>>,
    #[serde(default = "default_grid")]
    grid: usize,
}

fn default_grid() -> usize {
    crate::kl_rates::PWIDTH_GRID
}

/// Runs the CLI on `args` (including the program name), writing to `out`.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn print_report(out: &mut dyn Write, report: &CertificationReport) -> std::io::Result<()> {
    for c in &report.checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        write!(
            out,
            "{status} {:<16} {}  [checked {}, worst violation {:.3e}",
            c.name, c.inequality, c.checked, c.worst_violation
        )?;
        if let Some(k) = c.first_failure {
            write!(out, ", first failure at k={k}")?;
        }
        writeln!(out, "]")?;
    }
    for n in &report.notes {
        writeln!(out, "note: {n}")?;
    }
    Ok(())
}

fn print_rate(out: &mut dyn Write, c: &RateCertificate) -> std::io::Result<()> {
    let status = if c.passed() { "PASS" } else { "FAIL" };
    write!(
        out,
        "{status} {:<16} {}  [checked {}, worst violation {:.3e}",
        c.name,
        c.inequality,
        c.passed_at.len(),
        c.worst_violation
    )?;
    if let Some(k) = c.first_failure() {
        write!(out, ", first failure at k={k}")?;
    }
    writeln!(out, "]")
}

fn load_trace_for(path: &Path) -> anyhow::Result<(TraceFile, Option<String>)> {
    let name = path.to_string_lossy();
    if let Some(stem) = name.strip_suffix(".trace.csv") {
        let csv = std::fs::read_to_string(path)?;
        let tf = TraceFile::load(Path::new(&format!("{stem}.trace.json")))?;
        Ok((tf, Some(csv)))
    } else {
        Ok((TraceFile::load(path)?, None))
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> anyhow::Result<i32> {
    match cmd {
        Command::Solve { config, out: dir, no_timing } => {
            let cfg = ProblemConfig::load(&config)?;
            let (tf, report) = solve_and_report(&cfg, !no_timing)?;
            let paths = write_outputs(&dir, &tf, &report.to_json())?;
            writeln!(
                out,
                "{}: {} iterations, final f = {:.16e}, gap proxy = {:.3e}",
                cfg.name, report.iterations, report.final_f, report.final_gap_proxy
            )?;
            print_report(out, &report.certification)?;
            writeln!(out, "wrote {}", paths.csv.display())?;
            writeln!(out, "wrote {}", paths.trace.display())?;
            writeln!(out, "wrote {}", paths.summary.display())?;
            Ok(if report.certification.passed() { EXIT_OK } else { EXIT_CERT_FAIL })
        }
        Command::Verify { trace } => {
            let (tf, csv) = load_trace_for(&trace)?;
            let mut report = verify_trace_file(&tf)?;
            if let Some(csv) = csv {
                report.checks.push(verify_csv(&csv, &tf));
            }
            print_report(out, &report)?;
            if report.passed() {
                writeln!(out, "certified")?;
                Ok(EXIT_OK)
            } else {
                writeln!(out, "violated: {}", report.failed_names().join(", "))?;
                Ok(EXIT_CERT_FAIL)
            }
        }
        Command::Rates { trace, m, theta, fstar } => {
            let (tf, _) = load_trace_for(&trace)?;
            let pb = generate_problem(&tf.config)?;
            let rc = RateConstants::for_ssc(pb.objective.lipschitz(), pb.tau)?;
            let desing = Desingularizer::power(m, theta)?;
            let f_min = tf.trace.records.iter().flat_map(|r| [r.f_k, r.f_next]).fold(f64::INFINITY, f64::min);
            let f_star = fstar.unwrap_or(f_min);
            writeln!(out, "a = {:.6e}, b = {:.6e}, f* = {:.16e}", rc.a, rc.b, f_star)?;
            let obj = certify_objective_rate(&tf.trace, &desing, &rc, f_star)?;
            let tail = certify_tail_length(&tf.trace, &desing, &rc, f_star)?;
            print_rate(out, &obj)?;
            print_rate(out, &tail)?;
            for n in &obj.notes {
                writeln!(out, "note: {n}")?;
            }
            Ok(if obj.passed() && tail.passed() { EXIT_OK } else { EXIT_CERT_FAIL })
        }
        Command::Pwidth { atoms } => {
            let text = std::fs::read_to_string(&atoms)?;
            let af: AtomsFile = serde_json::from_str(&text)?;
            let pts: Vec<Vector> = af.atoms.iter().map(|a| Vector::from_column_slice(a)).collect();
            let est = pyramidal_width_bruteforce(&pts, af.grid)?;
            if est.degenerate {
                writeln!(out, "degenerate")?;
            } else {
                writeln!(out, "{}", est.value)?;
            }
            Ok(EXIT_OK)
        }
        Command::Bench { suite, out: dir, no_timing } => {
            let (suite, configs) = Suite::load(&suite)?;
            let rows = run_suite(&configs, !no_timing)?;
            write!(out, "{}", format_table(&rows))?;
            if let Some(dir) = dir {
                std::fs::create_dir_all(&dir)?;
                let path = dir.join(format!("{}.bench.json", suite.name));
                std::fs::write(&path, serde_json::to_string_pretty(&rows)?)?;
                writeln!(out, "wrote {}", path.display())?;
            }
            let errors = rows.iter().filter(|r| r.error.is_some()).count();
            let failed = rows.iter().filter(|r| r.report.is_some() && !r.certified()).count();
            writeln!(
                out,
                "{} runs, {} certified, {} failed certification, {} errors",
                rows.len(),
                rows.len() - errors - failed,
                failed,
                errors
            )?;
            Ok(if errors > 0 {
                EXIT_ERROR
            } else if failed > 0 {
                EXIT_CERT_FAIL
            } else {
                EXIT_OK
            })
        }
    }
}
