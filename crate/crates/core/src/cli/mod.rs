//! Command-line front end: `params`, `verify`, `ratio`, `scan-s`, `afe`.

pub mod config;
pub mod ratio;
pub mod report;
pub mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::charsums::{afe_central_value, afe_oracle, best_dyadic_window, scan_s, PartialSumKernel};
use crate::error::{Error, Result};
use crate::resonator::CoefficientTable;

use config::{resolve_workers, RunConfig};
use ratio::{run_ratio, write_ratio_outputs, RatioOptions, RatioOutcome};
use report::{num, write_csv, write_json};

#[derive(Parser, Debug)]
#[command(name = "reslab", version, about = "Resonator runs and verification suites")]
pub struct Cli {
    /// key = value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config)
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the parameter schedule and feasibility verdict.
    Params,
    /// Run one verification suite.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(verify::SUITES))]
        suite: String,
    },
    /// Full pipeline: signs, Σ₁, Σ₂, the discriminant scan and the ratio.
    Ratio {
        #[arg(long, hide = true)]
        stop_after: Option<usize>,
    },
    /// Tabulate S, S*, S̃ on a log grid.
    ScanS {
        #[arg(long)]
        y_lo: f64,
        #[arg(long)]
        y_hi: f64,
        #[arg(long, default_value_t = 200)]
        npoints: usize,
    },
    /// Smoothed central values L(1/2, χ_{8d}) with the oracle comparison.
    Afe {
        #[arg(long)]
        d: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        max_conductor: u64,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::ParamOutOfRange { .. }
        | Error::InvalidDiscriminant { .. }
        | Error::DegenerateSchedule { .. }
        | Error::InvalidArgument(_) => 2,
        Error::WorkEstimate { .. } | Error::SupportTooLarge { .. } => 3,
        _ => 1,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::parse(&fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.output {
        cfg.output = o.clone();
    }
    Ok(cfg)
}

fn cmd_params(cli: &Cli) -> Result<i32> {
    let text = match &cli.config {
        Some(p) => fs::read_to_string(p)?,
        None => String::new(),
    };
    match RunConfig::parse(&text) {
        Ok(cfg) => {
            let p = cfg.params()?;
            let table = CoefficientTable::new(&p)?;
            println!("{}", serde_json::to_string_pretty(&p)?);
            println!(
                "FEASIBLE |P-| = {} |P+| = {} support = {}",
                table.pminus().len(),
                table.pplus().len(),
                table.support().len()
            );
            Ok(0)
        }
        Err(Error::DegenerateSchedule { y, a, min_d }) => {
            println!("INFEASIBLE Y = {y:.6} a = {a} min_D = {min_d:.6e}");
            Ok(2)
        }
        Err(e) => Err(e),
    }
}

fn cmd_verify(cfg: &RunConfig, suite: &str) -> Result<i32> {
    let out = &cfg.output;
    fs::create_dir_all(out)?;
    let r = verify::run_suite(suite, cfg, out)?;
    write_json(&out.join(format!("verify_{suite}.json")), &r)?;
    println!("{} {}", r.suite, if r.passed { "PASS" } else { "FAIL" });
    Ok(if r.passed { 0 } else { 1 })
}

fn cmd_ratio(cfg: &RunConfig, stop_after: Option<usize>) -> Result<i32> {
    let out = &cfg.output;
    fs::create_dir_all(out)?;
    let cp = out.join("ratio.checkpoint.json");
    let opts = RatioOptions {
        checkpoint: Some(cp.clone()),
        stop_after,
    };
    match run_ratio(cfg, &opts)? {
        RatioOutcome::Complete(report, pairs) => {
            write_ratio_outputs(out, &report, &pairs)?;
            if cp.exists() {
                fs::remove_file(&cp)?;
            }
            let r = &report.result;
            println!("ratio = {:?}", r.ratio);
            println!("extremal 8d* = {} value = {:?}", r.extremal_discriminant, r.extremal_value);
            println!("pigeonhole {}", if r.pigeonhole_holds { "holds" } else { "FAILS" });
            Ok(if r.pigeonhole_holds { 0 } else { 1 })
        }
        RatioOutcome::Interrupted { completed, total } => {
            println!("interrupted after {completed}/{total} chunks; rerun to resume");
            Ok(1)
        }
    }
}

fn cmd_scan_s(cfg: &RunConfig, y_lo: f64, y_hi: f64, npoints: usize) -> Result<i32> {
    let out = &cfg.output;
    let params = cfg.params()?;
    let table = CoefficientTable::new(&params)?;
    let kernel = PartialSumKernel::new(&table, y_hi.max(params.x))?;
    let rows = scan_s(&kernel, y_lo, y_hi, npoints)?;
    write_csv(
        &out.join("scan_s.csv"),
        &["y", "S", "S_star", "S_tilde"],
        rows.iter().map(|r| vec![num(r.y), num(r.s), num(r.s_star), num(r.s_tilde)]),
    )?;
    let window = best_dyadic_window(&rows, params.x);
    write_json(&out.join("scan_s.json"), &json!({ "best_dyadic_window": window }))?;
    Ok(0)
}

fn cmd_afe(out: &Path, d: Option<u64>, max_conductor: u64) -> Result<i32> {
    if let Some(d) = d {
        let v = afe_central_value(d)?;
        let o = afe_oracle(d)?;
        println!("8d = {} L(1/2) = {:?} oracle = {:?} ± {:.1e}", v.conductor, v.value, o.value, o.error);
        return Ok(0);
    }
    let rows = verify::afe_rows(max_conductor)?;
    fs::create_dir_all(out)?;
    write_csv(
        &out.join("afe.csv"),
        &["d", "conductor", "afe", "oracle", "gap"],
        rows.iter()
            .map(|r| vec![r.d.to_string(), (8 * r.d).to_string(), num(r.value), num(r.oracle), num(r.gap)]),
    )?;
    let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    println!("{} values, max gap {:.3e}", rows.len(), max_gap);
    Ok(if max_gap <= 1e-6 { 0 } else { 1 })
}

fn dispatch(cli: &Cli) -> Result<i32> {
    if matches!(cli.command, Command::Params) {
        return cmd_params(cli);
    }
    let cfg = load_config(cli)?;
    let env = std::env::var("RESLAB_WORKERS").ok();
    let workers = resolve_workers(&cfg, env.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Params => unreachable!(),
        Command::Verify { suite } => cmd_verify(&cfg, suite),
        Command::Ratio { stop_after } => cmd_ratio(&cfg, *stop_after),
        Command::ScanS { y_lo, y_hi, npoints } => {
            fs::create_dir_all(&cfg.output)?;
            cmd_scan_s(&cfg, *y_lo, *y_hi, *npoints)
        }
        Command::Afe { d, max_conductor } => cmd_afe(&cfg.output, *d, *max_conductor),
    })
}

/// Parses argv, runs, and returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
