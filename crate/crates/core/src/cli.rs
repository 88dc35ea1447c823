//! Command-line front end: `solve`, `verify` and `convergence`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::modes::ModeField;
use crate::solver::solve_full;
use crate::suites::{convergence_table, run_suite, SuiteReport};

#[derive(Debug, Parser)]
#[command(name = "helical", version, about = "Helically reduced wave equation on a ball")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the configured problem and write field, mode and report files.
    Solve(CommonArgs),
    /// Run verification suites; exit status 0 iff every check passes.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// One of energy, inequality, stokes, uniqueness, nullspace, compat.
        /// Defaults to the `suites` list of the configuration.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Manufactured-solution refinement study.
    Convergence(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of grid levels for `convergence`.
    #[arg(long)]
    pub refine: Option<usize>,
    /// Solve incompatible data after shifting the mean of `τ`.
    #[arg(long)]
    pub allow_incompatible: bool,
    /// Overrides `output_dir` of the configuration.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Exit statuses.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_INCOMPATIBLE: u8 = 2;
pub const EXIT_SINGULAR: u8 = 3;
pub const EXIT_USAGE: u8 = 4;

impl CommonArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut run = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            run.seed = s;
        }
        if let Some(k) = self.refine {
            run.refine = k;
        }
        if self.allow_incompatible {
            run.allow_incompatible = true;
        }
        if let Some(o) = &self.output {
            run.output_dir = o.clone();
        }
        fs::create_dir_all(&run.output_dir)?;
        Ok(run)
    }
}

/// Run a parsed command, printing a one-line summary per output. Returns the
/// process exit status.
pub fn run(cli: Cli) -> u8 {
    let outcome = match cli.command {
        Command::Solve(a) => a.load().and_then(|r| cmd_solve(&r)),
        Command::Verify { common, suite } => common.load().and_then(|r| cmd_verify(&r, suite.as_deref())),
        Command::Convergence(a) => a.load().and_then(|r| cmd_convergence(&r)),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::IncompatibleData { .. } => EXIT_INCOMPATIBLE,
        Error::SingularSystem { .. } => EXIT_SINGULAR,
        _ => EXIT_USAGE,
    }
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    fs::write(path, format!("{text}\n"))?;
    Ok(())
}

/// Solution field, one row per node and angle.
pub fn field_table(grid: &Grid, values: &[f64]) -> String {
    let np = grid.n_phi;
    let mut out = String::from("# j k p r theta phi rho z u\n");
    for node in 0..grid.node_count() {
        let (j, k) = grid.split(node);
        for p in 0..np {
            let _ = writeln!(
                out,
                "{j} {k} {p} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                grid.r(j),
                grid.theta(k),
                grid.phi(p),
                grid.rho(j, k),
                grid.z(j, k),
                values[node * np + p]
            );
        }
    }
    out
}

/// Mode coefficients, one row per mode and node.
pub fn mode_table(grid: &Grid, modes: &[ModeField]) -> String {
    let mut out = String::from("# m j k r theta re im\n");
    for mf in modes {
        for (node, v) in mf.values.iter().enumerate() {
            let (j, k) = grid.split(node);
            let _ = writeln!(
                out,
                "{} {j} {k} {:.17e} {:.17e} {:.17e} {:.17e}",
                mf.m.0,
                grid.r(j),
                grid.theta(k),
                v.re,
                v.im
            );
        }
    }
    out
}

pub fn cmd_solve(run: &RunConfig) -> Result<u8> {
    let problem = run.problem()?;
    let outcome = solve_full(&problem, &run.solve_options());
    let dir = &run.output_dir;
    write_json(&dir.join("report.json"), &serde_json::to_string_pretty(&outcome.report).expect("serializes"))?;
    fs::write(dir.join("config.toml"), run.to_toml())?;
    match outcome.field {
        Ok(u) => {
            fs::write(dir.join("field.txt"), field_table(&problem.grid, &u))?;
            fs::write(dir.join("modes.txt"), mode_table(&problem.grid, &outcome.modes))?;
            println!(
                "solved: {} modes, max residual {:.3e}, output in {}",
                outcome.modes.len(),
                outcome.report.max_residual,
                dir.display()
            );
            Ok(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(exit_code_for(&e))
        }
    }
}

fn print_suite(r: &SuiteReport) {
    for c in &r.checks {
        println!(
            "{} {:<8} {:<40} value={:.4e} threshold={:.1e}",
            if c.passed { "ok  " } else { "FAIL" },
            r.suite,
            c.name,
            c.value,
            c.threshold
        );
    }
}

pub fn cmd_verify(run: &RunConfig, suite: Option<&str>) -> Result<u8> {
    let names: Vec<String> = match suite {
        Some(s) => vec![s.to_string()],
        None => run.suites.clone(),
    };
    let mut all = true;
    for name in &names {
        let report = run_suite(name, run)?;
        print_suite(&report);
        write_json(&run.output_dir.join(format!("suite_{name}.json")), &report.to_json())?;
        all &= report.passed;
    }
    Ok(if all { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn cmd_convergence(run: &RunConfig) -> Result<u8> {
    let report = convergence_table(run)?;
    let mut table = String::from("# resolution h l2_error order\n");
    for row in &report.rows {
        let res: Vec<String> = row.resolution.iter().map(|v| v.to_string()).collect();
        let order = row.order.map_or("-".to_string(), |o| format!("{o:.4}"));
        let _ = writeln!(table, "{} {:.6e} {:.6e} {order}", res.join("x"), row.h, row.l2_error);
    }
    print!("{table}");
    fs::write(run.output_dir.join("convergence.txt"), &table)?;
    write_json(
        &run.output_dir.join("convergence.json"),
        &serde_json::to_string_pretty(&report).expect("serializes"),
    )?;
    Ok(if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}
