//! `oubv` — Gaussian bounded-variation laboratory.
//!
//! Subcommands:
//!   theorem-check       variation trace F(t) on a convex domain vs its reference
//!   domain-convergence  resolvents on nested smoothed m-gon supersets of a disk
//!   mehler-oracle       whole-box evolution vs the Mehler integral
//!   property-suite      seeded invariant checks across all modules
//!
//! Every run writes CSV artifacts, plot scripts where applicable, and a
//! report.txt with named verdicts. Exit code 0 iff all verdicts pass.

use std::path::Path;
use std::process::ExitCode;

use oubv::lab::{run, ExperimentConfig, ExperimentKind};

const USAGE: &str = "\
usage: oubv <experiment> [--config FILE] [--KEY VALUE ...]

experiments:
  theorem-check        --dim 1 --domain \"interval:-1,1\" --u0 sign --h 0.0009765625 \\
                       --tmin 1e-3 --tmax 1 --nt 24 --out run1/
  domain-convergence   --target \"ball:1\" --faces 4:12 --lambda 1 --out run2/
  mehler-oracle        --h 0.0009765625 --t-compare 0.5 --out run3/
  property-suite       --seed 42 --out run4/

keys (flags use '-', config files use '_'): dim, domain (or target),
smooth-delta, u0, L, h, tmin, tmax, nt, t-compare, lambda, faces, delta0,
conv-tol, upper-tol, seed, out";

fn parse_args(args: &[String]) -> Result<ExperimentConfig, String> {
    if args.is_empty() {
        return Err("missing experiment".into());
    }
    let kind = ExperimentKind::parse(&args[0]).map_err(|e| e.to_string())?;
    let mut config = ExperimentConfig::new(kind);
    let mut i = 1;
    while i < args.len() {
        let flag = &args[i];
        let Some(name) = flag.strip_prefix("--") else {
            return Err(format!("expected a --flag, got '{flag}'"));
        };
        let Some(value) = args.get(i + 1) else {
            return Err(format!("flag --{name} needs a value"));
        };
        let key = name.replace('-', "_");
        // `--target` is the domain-convergence spelling of the domain
        let key = if key == "target" { "domain".into() } else { key };
        if key == "config" {
            config
                .load_file(Path::new(value))
                .map_err(|e| e.to_string())?;
        } else {
            config.set(&key, value).map_err(|e| e.to_string())?;
        }
        i += 2;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        println!("{USAGE}");
        return ExitCode::from(if args.is_empty() { 2 } else { 0 });
    }
    let config = match parse_args(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("oubv: {msg}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(report) => {
            print!("{}", report.summary());
            println!("outputs in {}", config.out_dir.display());
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("oubv: {e}");
            ExitCode::from(2)
        }
    }
}
