//! `mixcharts` command-line interface.
//!
//! Matrices are read and written in the comma-separated text format of
//! [`crate::io`]; parameter objects are single-line JSON. Data goes to
//! stdout, errors to stderr as `{"error": kind, "message": ...}`.
//! Exit codes: 0 success, 1 domain error, 2 usage error.

use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::charts::{chart_forward, chart_inverse_with_branch, select_charts, ChartId, ChartPoint};
use crate::check::run_checks;
use crate::error::{Error, Result};
use crate::factor::{factorize_rank2, MixtureRepresentation, DEFAULT_COMBINATION_TOL};
use crate::io::{format_counts, format_probability, parse_counts, parse_probability};
use crate::matrix::{
    numerical_rank, ContingencyTable, ProbabilityMatrix, DEFAULT_RANK_TOL, DEFAULT_SUM_TOL,
};
use crate::optimize::{fit_rank1, maximize_over_model, OptimizerSettings};
use crate::sampling::{sample_table, SampleSpec};

pub const SEED_ENV: &str = "MIXCHARTS_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "mixcharts",
    version,
    about = "Charts and likelihood fits for rank-two probability matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Rank1,
    Mixture2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the numerical rank of a probability matrix.
    Rank {
        /// Matrix file, or `-` for stdin.
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_SUM_TOL)]
        sum_tol: f64,
    },
    /// Exact nonnegative factorization of a matrix of rank at most two.
    Factorize {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_COMBINATION_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_SUM_TOL)]
        sum_tol: f64,
    },
    /// Evaluate a chart at a point and print the matrix.
    ChartForward {
        /// One-based column pair, e.g. `1,2`. Must match the point's chart.
        #[arg(long)]
        chart: Option<ChartId>,
        /// Point as inline JSON or a path to a JSON file.
        #[arg(long)]
        point: String,
    },
    /// Invert a chart at a matrix and print the point.
    ChartInverse {
        input: PathBuf,
        #[arg(long)]
        chart: ChartId,
        #[arg(long, default_value_t = DEFAULT_COMBINATION_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_SUM_TOL)]
        sum_tol: f64,
    },
    /// List every chart whose inverse applies to a matrix.
    Charts {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_COMBINATION_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_SUM_TOL)]
        sum_tol: f64,
    },
    /// Maximum-likelihood fit of a table of counts.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Model::Mixture2)]
        model: Model,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        multistarts: usize,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        grad_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        fd_step: f64,
    },
    /// Draw a table of counts from a mixture.
    Sample {
        /// Mixture as inline JSON or a path to a JSON file.
        #[arg(long)]
        rep: String,
        #[arg(long)]
        n: u64,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
    },
    /// Run the randomized invariant suites.
    Check {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Domain(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
}

impl Io<'_> {
    fn read_text(&mut self, path: &PathBuf) -> Result<String> {
        if path.as_os_str() == "-" {
            let mut s = String::new();
            self.stdin.read_to_string(&mut s)?;
            Ok(s)
        } else {
            std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
    }

    fn read_matrix(&mut self, path: &PathBuf, sum_tol: f64) -> Result<ProbabilityMatrix> {
        parse_probability(&self.read_text(path)?, sum_tol)
    }

    fn read_table(&mut self, path: &PathBuf) -> Result<ContingencyTable> {
        parse_counts(&self.read_text(path)?)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.stdout, "{s}")?;
        Ok(())
    }

    fn raw(&mut self, s: &str) -> Result<()> {
        self.stdout.write_all(s.as_bytes())?;
        Ok(())
    }

    fn json<T: serde::Serialize>(&mut self, v: &T) -> Result<()> {
        let s = serde_json::to_string(v)?;
        self.line(&s)
    }
}

/// Inline JSON when the argument parses as JSON, otherwise a file path.
fn json_arg<T: DeserializeOwned>(arg: &str) -> Result<T> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(serde_json::from_str(arg)?);
    }
    let text = std::fs::read_to_string(arg).map_err(|e| Error::Io(format!("{arg}: {e}")))?;
    Ok(serde_json::from_str(&text)?)
}

fn execute(cmd: Command, io: &mut Io<'_>) -> std::result::Result<bool, Failure> {
    match cmd {
        Command::Rank {
            input,
            tol,
            sum_tol,
        } => {
            let p = io.read_matrix(&input, sum_tol)?;
            io.line(&numerical_rank(&p, tol).to_string())?;
        }
        Command::Factorize {
            input,
            tol,
            sum_tol,
        } => {
            let p = io.read_matrix(&input, sum_tol)?;
            io.json(&factorize_rank2(&p, tol)?)?;
        }
        Command::ChartForward { chart, point } => {
            let pt: ChartPoint = json_arg(&point)?;
            if let Some(c) = chart {
                if c != pt.chart() {
                    return Err(Failure::Usage(format!(
                        "--chart {c} does not match the point's chart {}",
                        pt.chart()
                    )));
                }
            }
            let p = chart_forward(&pt)?;
            io.raw(&format_probability(&p))?;
        }
        Command::ChartInverse {
            input,
            chart,
            tol,
            sum_tol,
        } => {
            let p = io.read_matrix(&input, sum_tol)?;
            let (pt, _) = chart_inverse_with_branch(chart, &p, tol)?;
            io.json(&pt)?;
        }
        Command::Charts {
            input,
            tol,
            sum_tol,
        } => {
            let p = io.read_matrix(&input, sum_tol)?;
            let sel = select_charts(&p, tol)?;
            let charts: Vec<_> = sel
                .iter()
                .map(|s| json!({"j1": s.chart.j1 + 1, "j2": s.chart.j2 + 1, "branch": s.branch}))
                .collect();
            io.json(&json!({ "charts": charts }))?;
        }
        Command::Fit {
            input,
            model,
            seed,
            multistarts,
            max_iters,
            grad_tol,
            fd_step,
        } => {
            let table = io.read_table(&input)?;
            let settings = OptimizerSettings {
                seed,
                multistarts,
                max_iters,
                grad_tol,
                fd_step,
                ..Default::default()
            };
            settings.validate()?;
            let result = match model {
                Model::Rank1 => fit_rank1(&table)?,
                Model::Mixture2 => maximize_over_model(&table, &settings)?,
            };
            io.json(&result)?;
        }
        Command::Sample { rep, n, seed } => {
            let rep: MixtureRepresentation = json_arg(&rep)?;
            let table = sample_table(&rep, SampleSpec { n, seed });
            io.raw(&format_counts(&table))?;
        }
        Command::Check { cases, seed } => {
            let outcomes = run_checks(cases, seed);
            let all = outcomes.iter().all(|o| o.passed);
            for o in &outcomes {
                io.json(o)?;
            }
            return Ok(all);
        }
    }
    Ok(true)
}

/// Runs one invocation; returns the process exit code.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let mut io = Io { stdin, stdout };
    match execute(cli.command, &mut io) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Domain(e)) => {
            let obj = json!({"error": e.kind(), "message": e.to_string()});
            let _ = writeln!(stderr, "{obj}");
            1
        }
        Err(Failure::Usage(msg)) => {
            let obj = json!({"error": "Usage", "message": msg});
            let _ = writeln!(stderr, "{obj}");
            2
        }
    }
}
