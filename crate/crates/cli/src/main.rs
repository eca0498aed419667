//! `cansys`: batch driver emitting CSV and JSON over r-grids.
//!
//! Exit codes: 0 success, 1 numeric tolerance failure, 2 input or model error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use cansys::analysis::log_grid;
use cansys::examples::ExampleSpec;
use cansys::io::{load_model, write_csv, Cell};
use cansys::kernel::{ABS_K, EPS_K};
use cansys::par::map_ordered;
use cansys::partition::{kappa, theorem3_bounds};
use cansys::spectrum::{eigenvalues_with, schatten_sum, trace_inverse, ScanOptions, EPS_EIG};
use cansys::{CompatiblePair, Error, HamiltonianModel, KernelEval};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

mod verify;

#[derive(Parser)]
#[command(
    name = "cansys",
    version,
    about = "Growth of canonical systems over r-grids"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// CSV `r,kappa,lower,upper`; fails when int K leaves the explicit bounds.
    Kappa(Common),
    /// CSV `r,integral_K,left_part,t_hat`.
    Kernel(Common),
    /// CSV `index,lambda` for |lambda| < rmax plus a JSON summary.
    Eigs {
        #[command(flatten)]
        common: Common,
        /// Where the JSON summary goes (default: stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// JSON pass/fail report for a named example.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Check a model file against the oracles of this example.
        #[arg(long = "as", value_name = "NAME")]
        as_example: Option<String>,
    },
}

#[derive(Args, Clone)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["model", "example"]))]
pub struct Common {
    /// JSON model description.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Named example, e.g. `identity`, `chirp(0,2)`, `weierstrass(0.5,6)`.
    #[arg(long, value_name = "NAME")]
    pub example: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    pub rmin: f64,
    #[arg(long, default_value_t = 1e4)]
    pub rmax: f64,
    #[arg(long, default_value_t = 10)]
    pub per_decade: usize,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Relative tolerance of the kernel quadrature.
    #[arg(long, default_value_t = EPS_K)]
    pub tol_quad: f64,
    /// Relative tolerance of the eigenvalue root solver.
    #[arg(long, default_value_t = EPS_EIG)]
    pub tol_root: f64,
    /// Truncation point for limit point models on [a, inf).
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

pub enum Failure {
    Numeric(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Tolerance { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

impl Common {
    /// Table resolution used when lowering analytic models.
    fn resolution(&self) -> f64 {
        self.rmax.max(10.0)
    }

    pub fn load(&self) -> CliResult<HamiltonianModel> {
        let res = self.resolution();
        match (&self.model, &self.example) {
            (Some(path), _) => Ok(load_model(path)?.build(Some(res), self.cutoff)?),
            (None, Some(name)) => Ok(name.parse::<ExampleSpec>()?.build(res)?),
            (None, None) => Err(Failure::Input(
                "one of --model or --example is required".into(),
            )),
        }
    }

    pub fn grid(&self) -> CliResult<Vec<f64>> {
        if !(self.rmin > 0.0 && self.rmax >= self.rmin && self.rmax.is_finite()) {
            return Err(Failure::Input(format!(
                "bad grid [{}, {}]",
                self.rmin, self.rmax
            )));
        }
        Ok(log_grid(self.rmin, self.rmax, self.per_decade))
    }

    /// Grid checked against the threshold `r0` of the compatible pair.
    fn pair_grid(&self, model: &HamiltonianModel) -> CliResult<Vec<f64>> {
        let r0 = CompatiblePair::new(model, self.c)?.r0();
        if !(self.rmin > r0) {
            return Err(Failure::Input(format!(
                "--rmin {} must exceed r0 = {r0}",
                self.rmin
            )));
        }
        self.grid()
    }

    pub fn output(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        })
    }
}

fn cmd_kappa(cfg: &Common) -> CliResult<()> {
    let m = cfg.load()?;
    let grid = cfg.pair_grid(&m)?;
    let ke = KernelEval::new(CompatiblePair::new(&m, cfg.c)?).with_tolerance(cfg.tol_quad, ABS_K);
    let rows = map_ordered(&grid, |&r| -> cansys::Result<_> {
        let pr = kappa(&m, cfg.c, r)?;
        let (lo, hi) = theorem3_bounds(&m, &pr);
        let ik = ke.integral_k(r)?.total;
        Ok((r, pr.kappa, lo, hi, lo < ik && ik < hi))
    });
    let rows = rows.into_iter().collect::<cansys::Result<Vec<_>>>()?;
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|&(r, k, lo, hi, _)| {
            vec![
                Cell::Real(r),
                Cell::Int(k as i64),
                Cell::Real(lo),
                Cell::Real(hi),
            ]
        })
        .collect();
    let mut out = cfg.output()?;
    write_csv(&mut out, &["r", "kappa", "lower", "upper"], &cells)?;
    out.flush()?;
    let broken: Vec<String> = rows
        .iter()
        .filter(|row| !row.4)
        .map(|row| format!("{:e}", row.0))
        .collect();
    if !broken.is_empty() {
        return Err(Failure::Numeric(format!(
            "int K outside the kappa bounds at r = {}",
            broken.join(", ")
        )));
    }
    Ok(())
}

fn cmd_kernel(cfg: &Common) -> CliResult<()> {
    let m = cfg.load()?;
    let grid = cfg.pair_grid(&m)?;
    let ke = KernelEval::new(CompatiblePair::new(&m, cfg.c)?).with_tolerance(cfg.tol_quad, ABS_K);
    let rows = map_ordered(&grid, |&r| ke.integral_k(r))
        .into_iter()
        .collect::<cansys::Result<Vec<_>>>()?;
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|k| {
            vec![
                Cell::Real(k.r),
                Cell::Real(k.total),
                Cell::Real(k.left),
                Cell::Real(k.t_hat),
            ]
        })
        .collect();
    let mut out = cfg.output()?;
    write_csv(&mut out, &["r", "integral_K", "left_part", "t_hat"], &cells)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EigSummary {
    schema_version: u32,
    r_max: f64,
    count: usize,
    trace_inverse: f64,
    hs_sum: f64,
    p3_sum: f64,
    flags: Vec<f64>,
}

fn cmd_eigs(cfg: &Common, summary: Option<&PathBuf>) -> CliResult<()> {
    let m = cfg.load()?;
    let opts = ScanOptions {
        eps: cfg.tol_root,
        ..Default::default()
    };
    let sr = eigenvalues_with(&m, cfg.rmax, opts)?;
    let sum = EigSummary {
        schema_version: 1,
        r_max: sr.r_max,
        count: sr.eigenvalues.len(),
        trace_inverse: trace_inverse(&m)?,
        hs_sum: schatten_sum(&m, 2)?,
        p3_sum: schatten_sum(&m, 3)?,
        flags: sr.flags.clone(),
    };
    let cells: Vec<Vec<Cell>> = sr
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| vec![Cell::Int(i as i64), Cell::Real(l)])
        .collect();
    let mut out = cfg.output()?;
    write_csv(&mut out, &["index", "lambda"], &cells)?;
    out.flush()?;
    let json = serde_json::to_string_pretty(&sum)?;
    match summary {
        Some(p) => std::fs::write(p, json + "\n")?,
        None => eprintln!("{json}"),
    }
    Ok(())
}

fn init_threads(n: Option<usize>) -> CliResult<()> {
    let Some(n) = n else { return Ok(()) };
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.cmd {
        Cmd::Kappa(c) => {
            init_threads(c.threads)?;
            cmd_kappa(c)
        }
        Cmd::Kernel(c) => {
            init_threads(c.threads)?;
            cmd_kernel(c)
        }
        Cmd::Eigs { common, summary } => {
            init_threads(common.threads)?;
            cmd_eigs(common, summary.as_ref())
        }
        Cmd::Verify { common, as_example } => {
            init_threads(common.threads)?;
            verify::cmd_verify(common, as_example.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
