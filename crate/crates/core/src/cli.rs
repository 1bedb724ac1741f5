//! Command-line front end. Exit status: 0 on pass, 1 on a failed check, 2 on bad input.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::checks::{run_criterion, CRITERIA};
use crate::construction::{
    build_lambda, build_omega, lambda_volume, max_r_from_env, omega_measure, ConstructionConfig,
    ConstructionParams, PatchCenters, Scales,
};
use crate::error::{Error, Result};
use crate::experiment::{
    bounds_report, fit_exponent, scaling_run, write_bounds_csv, NList, RList, ScaleSpec, ScalingBudget,
};
use crate::exponents::{falconer_threshold, Surface};
use crate::extension::{extension_report, verify_phase, ExtensionBudget};
use crate::measure::{c_alpha_oracle, verify_params_balance, FractalMeasure, OracleBudget};
use crate::rational::Rational;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "decay-bounds", version, about = "Exact decay-rate exponents and finite-R checks of the lattice constructions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Clone, Debug, Args)]
pub struct ConstructionArgs {
    #[arg(long)]
    pub surface: Surface,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub m: usize,
    /// Dimension α as `p/q`.
    #[arg(long)]
    pub alpha: Rational,
    /// Overrides the lemma's κ.
    #[arg(long)]
    pub kappa: Option<Rational>,
    /// Width constant c.
    #[arg(long)]
    pub c: Option<f64>,
}

impl ConstructionArgs {
    pub fn config(&self) -> Result<ConstructionConfig> {
        let cfg = ConstructionConfig::new(self.surface, self.d, self.m, self.alpha, self.kappa)?;
        match self.c {
            Some(c) => cfg.with_width_constant(c),
            None => Ok(cfg),
        }
    }
}

/// R values (paraboloid) or lattice radii (sphere).
#[derive(Clone, Debug, Args)]
pub struct ScaleArgs {
    /// e.g. `2^20:2^30:2^2` or `1e6,2^24`.
    #[arg(long = "R")]
    pub r: Option<RList>,
    /// e.g. `1..4` or `1,3`.
    #[arg(long = "N")]
    pub n: Option<NList>,
}

impl ScaleArgs {
    pub fn specs(&self) -> Result<Vec<ScaleSpec>> {
        match (&self.r, &self.n) {
            (Some(r), None) => Ok(r.0.iter().map(|&v| ScaleSpec::R(v)).collect()),
            (None, Some(n)) => Ok(n.0.iter().map(|&v| ScaleSpec::N(v)).collect()),
            (None, None) => Err(Error::parse("R", "give --R (paraboloid) or --N (sphere)")),
            (Some(_), Some(_)) => Err(Error::parse("R", "give only one of --R and --N")),
        }
    }

    pub fn single(&self, cfg: &ConstructionConfig) -> Result<ConstructionParams> {
        match self.specs()?.as_slice() {
            [s] => s.instantiate(cfg, max_r_from_env()?),
            other => Err(Error::parse(
                "R",
                format!("this command takes one scale, got {}", other.len()),
            )),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact bound table over an α grid.
    Bounds {
        #[arg(long)]
        surface: Surface,
        #[arg(long)]
        d: i64,
        /// `start:end:step` (inclusive) or a comma list of `p/q`.
        #[arg(long)]
        alpha_grid: String,
        #[command(flatten)]
        output: Output,
    },
    /// Dimension threshold from the paraboloid bound.
    Threshold {
        #[arg(long)]
        d: i64,
    },
    /// Summary of one construction.
    Construct {
        #[command(flatten)]
        cons: ConstructionArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Samples phases on Λ × Ω and checks they stay within 1/100 of 2πZ.
    VerifyPhase {
        #[command(flatten)]
        cons: ConstructionArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// c_α oracle profile and the exact balance table.
    Calpha {
        #[command(flatten)]
        cons: ConstructionArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long, default_value_t = 1000)]
        centers: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// |Ef(Rx)| on Λ and its L¹(μ) norm, one report per scale.
    Extension {
        #[command(flatten)]
        cons: ConstructionArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long, default_value_t = 1000)]
        x_samples: usize,
        #[arg(long, default_value_t = 64)]
        nodes_per_patch: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// R sweep of the dual-estimate ratio and its slope fit.
    Scaling {
        #[command(flatten)]
        cons: ConstructionArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long, default_value_t = 1000)]
        x_samples: usize,
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 64)]
        nodes_per_patch: usize,
        #[arg(long)]
        seed: u64,
        /// Slope window for the pass/fail verdict.
        #[arg(long, default_value_t = 0.15)]
        tolerance: f64,
        /// Where to write the row table (CSV).
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// The acceptance suite.
    CheckAll {
        #[arg(long, default_value_t = 20261016)]
        seed: u64,
        /// Comma list of criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(w: &mut dyn Write, v: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, v)?;
    writeln!(w)?;
    Ok(())
}

/// Parses `start:end:step` or a comma list of rationals.
pub fn parse_alpha_grid(s: &str) -> Result<Vec<Rational>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, st] => {
            let (a, b, st): (Rational, Rational, Rational) = (a.parse()?, b.parse()?, st.parse()?);
            if st <= Rational::ZERO || b < a {
                return Err(Error::parse("alpha-grid", format!("bad range {s:?}")));
            }
            Ok(Rational::grid(a, b, st))
        }
        [list] => list.split(',').map(|v| v.trim().parse()).collect(),
        _ => Err(Error::parse("alpha-grid", format!("expected start:end:step or a list, got {s:?}"))),
    }
}

#[derive(Serialize)]
struct ConstructSummary {
    params: ConstructionParams,
    scales: Scales,
    gamma_count: Option<usize>,
    patch_count: usize,
    lambda_volume: crate::sampling::Estimate,
    omega_measure: crate::sampling::Estimate,
}

#[derive(Serialize)]
struct CalphaSummary {
    seed: u64,
    params: ConstructionParams,
    c_alpha: f64,
    stderr: f64,
    argmax_r: f64,
    argmax_x: Vec<f64>,
    normalized: f64,
    balance: Option<crate::measure::BalanceReport>,
    balance_error: Option<String>,
}

#[derive(Serialize)]
struct ScalingSummary {
    seed: u64,
    fit: Option<crate::experiment::FitResult>,
    fit_error: Option<String>,
    gated: bool,
    passed: bool,
    failed_rows: usize,
}

/// Runs a parsed command and returns the exit status.
pub fn dispatch(cli: Cli) -> i32 {
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_FAIL
            }
        }
    }
}

fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Bounds { surface, d, alpha_grid, output } => {
            let grid = parse_alpha_grid(&alpha_grid)?;
            let rows = bounds_report(surface, d, &grid);
            let mut w = sink(&output.out)?;
            match output.format {
                Format::Csv => write_bounds_csv(&rows, &mut w)?,
                Format::Json => write_json(&mut w, &rows)?,
            }
            Ok(EXIT_PASS)
        }
        Command::Threshold { d } => {
            println!("{}", falconer_threshold(d)?);
            Ok(EXIT_PASS)
        }
        Command::Construct { cons, scale, mc_samples, seed } => {
            let params = scale.single(&cons.config()?)?;
            let omega = build_omega(&params)?;
            let gamma_count = match &omega.centers {
                PatchCenters::Directions(g) => Some(g.len()),
                PatchCenters::Lattice { .. } => None,
            };
            let summary = ConstructSummary {
                scales: params.scales.clone(),
                gamma_count,
                patch_count: omega.patch_count(),
                lambda_volume: lambda_volume(&build_lambda(&params), mc_samples, seed)?,
                omega_measure: omega_measure(&omega, 64, seed)?,
                params,
            };
            write_json(&mut io::stdout().lock(), &summary)?;
            Ok(EXIT_PASS)
        }
        Command::VerifyPhase { cons, scale, samples, seed } => {
            let params = scale.single(&cons.config()?)?;
            match verify_phase(&params, samples, seed) {
                Ok(report) => {
                    write_json(&mut io::stdout().lock(), &report)?;
                    Ok(EXIT_PASS)
                }
                Err(e @ (Error::PhaseEscape { .. } | Error::Reduction { .. })) => {
                    eprintln!("check failed: {e}");
                    Ok(EXIT_FAIL)
                }
                Err(e) => Err(e),
            }
        }
        Command::Calpha { cons, scale, centers, samples, seed, output } => {
            let params = scale.single(&cons.config()?)?;
            let mu = FractalMeasure::from_params(&params, 100_000, seed)?;
            let budget = OracleBudget {
                random_centers: centers,
                samples_per_ball: samples,
                ..OracleBudget::default()
            };
            let o = c_alpha_oracle(&mu, budget, seed)?;
            let balance = verify_params_balance(&params);
            let passed = balance.is_ok();
            let summary = CalphaSummary {
                seed,
                normalized: o.value * params.r.powf(params.d() as f64 - params.alpha().to_f64()),
                c_alpha: o.value,
                stderr: o.stderr,
                argmax_r: o.argmax_r,
                argmax_x: o.argmax_x.clone(),
                params,
                balance_error: balance.as_ref().err().map(|e| e.to_string()),
                balance: balance.ok(),
            };
            match output.format {
                Format::Csv => {
                    o.profile.write_csv(sink(&output.out)?)?;
                    write_json(&mut io::stderr().lock(), &summary)?;
                }
                Format::Json => write_json(&mut sink(&output.out)?, &(summary, &o.profile))?,
            }
            Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Extension { cons, scale, x_samples, nodes_per_patch, seed } => {
            let cfg = cons.config()?;
            let max_r = max_r_from_env()?;
            let budget = ExtensionBudget {
                x_samples,
                nodes_per_patch,
                ..ExtensionBudget::default()
            };
            let mut reports = vec![];
            for s in scale.specs()? {
                reports.push(extension_report(&s.instantiate(&cfg, max_r)?, budget, seed)?);
            }
            write_json(&mut io::stdout().lock(), &reports)?;
            let lo = (0.01f64).cos() - 0.02;
            let ok = reports.iter().all(|r| r.max_phase_deviation < 0.01 && r.min_modulus_ratio >= lo);
            Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Scaling { cons, scale, x_samples, mc_samples, nodes_per_patch, seed, tolerance, table } => {
            let cfg = cons.config()?;
            let budget = ScalingBudget {
                x_samples,
                mc_samples,
                nodes_per_patch,
                ..ScalingBudget::default()
            };
            let t = scaling_run(&cfg, &scale.specs()?, budget, seed)?;
            if let Some(path) = &table {
                t.write_csv(File::create(path)?)?;
            }
            let fit = fit_exponent(&t);
            // Sphere fits are reported, not gated: lattice counts fluctuate.
            let gated = cfg.surface == Surface::Paraboloid;
            let passed = match &fit {
                Ok(f) => !gated || f.within(tolerance),
                Err(_) => false,
            };
            let summary = ScalingSummary {
                seed,
                fit_error: fit.as_ref().err().map(|e| e.to_string()),
                fit: fit.ok(),
                gated,
                passed,
                failed_rows: t.rows.iter().filter(|r| !r.ok()).count(),
            };
            write_json(&mut io::stdout().lock(), &summary)?;
            Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::CheckAll { seed, only } => {
            let ids: Vec<u8> = if only.is_empty() {
                CRITERIA.iter().map(|c| c.0).collect()
            } else {
                only
            };
            let mut all = true;
            for id in ids {
                let r = run_criterion(id, seed)?;
                println!("{}", r.line());
                all &= r.passed;
            }
            Ok(if all { EXIT_PASS } else { EXIT_FAIL })
        }
    }
}

/// Entry point for the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_grid_forms() {
        assert_eq!(parse_alpha_grid("3/2:3:1/8").unwrap().len(), 13);
        assert_eq!(parse_alpha_grid("2, 5/2").unwrap().len(), 2);
        assert!(parse_alpha_grid("a:b:c").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["decay-bounds", "threshold", "--d", "3"]), EXIT_PASS);
        assert_eq!(main_with_args(["decay-bounds", "threshold", "--d", "1"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["decay-bounds", "bounds", "--surface", "cube", "--d", "3", "--alpha-grid", "2"]), EXIT_CONFIG);
    }
}
