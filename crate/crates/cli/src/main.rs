//! `stringclass`: runs verification suites and writes residual reports.
//!
//! Settings resolve as command-line flag, then `STRINGCLASS_*` environment
//! variable, then the `--config` JSON file, then the built-in default.
//!
//! Exit status: 0 all checks pass, 1 some check fails, 2 usage error,
//! 3 I/O failure, 4 convention self-test abort.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stringclass::suite::{
    find_check, observed_order, run, GroupName, Report, ReportFormat, RunConfig, ScenarioName, SuiteError,
};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_CONVENTION: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "stringclass", version, about = "Verify string-class identities numerically")]
struct Cli {
    /// JSON file with any subset of the run settings.
    #[arg(long, env = "STRINGCLASS_CONFIG")]
    config: Option<PathBuf>,
    /// path-fibration, trivial-bundle, caloron-roundtrip, central-extension or all.
    #[arg(long, env = "STRINGCLASS_SCENARIO")]
    scenario: Option<ScenarioName>,
    /// su2 or su3.
    #[arg(long, env = "STRINGCLASS_GROUP")]
    group: Option<GroupName>,
    /// θ-grid size (even, at least 16).
    #[arg(long, env = "STRINGCLASS_NTHETA")]
    ntheta: Option<usize>,
    /// Nodes on paths in the loop group.
    #[arg(long, env = "STRINGCLASS_NPATH")]
    npath: Option<usize>,
    /// Finite-difference step, in (0, 1e-2].
    #[arg(long, env = "STRINGCLASS_FD_STEP")]
    fd_step: Option<f64>,
    /// Upper bound on every check's tolerance.
    #[arg(long, env = "STRINGCLASS_TOL")]
    tol: Option<f64>,
    #[arg(long, env = "STRINGCLASS_SEED")]
    seed: Option<u64>,
    /// json or csv.
    #[arg(long, env = "STRINGCLASS_REPORT")]
    report: Option<ReportFormat>,
    /// Report path; standard output if absent.
    #[arg(long, env = "STRINGCLASS_OUT")]
    out: Option<PathBuf>,
    /// Comma-separated grid sizes for a convergence study.
    #[arg(long, env = "STRINGCLASS_GRIDS", value_delimiter = ',')]
    grids: Option<Vec<usize>>,
    /// Write zero wall times (byte-identical reports).
    #[arg(long, env = "STRINGCLASS_OMIT_TIMING")]
    omit_timing: bool,
}

enum Failure {
    Usage(String),
    Io(String),
}

fn resolve(cli: Cli) -> Result<RunConfig, Failure> {
    let mut c = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = cli.$f { c.$f = v; } )* };
    }
    set!(scenario, group, ntheta, npath, fd_step, tol, seed, report, grids);
    if cli.out.is_some() {
        c.out = cli.out;
    }
    c.omit_timing |= cli.omit_timing;
    c.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(c)
}

fn summarise(report: &Report) {
    for c in &report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        eprintln!("{verdict} {:<34} residual {:.3e}  tol {:.1e}", c.name, c.residual, c.tol);
    }
    let mut by_name: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for r in &report.convergence {
        by_name.entry(r.name.as_str()).or_default().push(r.clone());
    }
    for (name, rows) in by_name {
        if find_check(name).is_some_and(|c| c.fd_dominated) {
            if let Some(p) = observed_order(&rows) {
                eprintln!("order {name:<33} {p:.2}");
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match resolve(cli) {
        Ok(c) => c,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_IO);
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(SuiteError::ConventionAbort(msg)) => {
            eprintln!("abort: {msg}");
            return ExitCode::from(EXIT_CONVENTION);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let text = report.render();
    let written = match &config.out {
        Some(path) => fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    };
    summarise(&report);
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_IO);
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
