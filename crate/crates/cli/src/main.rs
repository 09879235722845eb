//! `vpatch`: steady double vortex patches in bounded planar domains.
//!
//! Subcommands cover the whole experiment pipeline: Green-function
//! validation, Kirchhoff-Routh minima, the constrained energy maximizer,
//! strength sweeps, Euler evolution probes, and the local-maximality
//! table. Exit codes: 0 all invariants passed, 1 configuration error,
//! 2 invariant failure (with a machine-readable list on stdout and in
//! `failures.json`).

mod commands;
mod config;
mod reports;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;
use config::{parse_config, ConfigError, RunConfig};
use reports::OutDir;

#[derive(Parser)]
#[command(name = "vpatch", version, about = "steady double vortex patches: construction, asymptotics, and stability probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Config file (INI-style sections or JSON); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Domain: disk | rect:W,H | mask:PATH
    #[arg(long)]
    domain: Option<String>,
    /// Grid resolution (cells per reference length).
    #[arg(long)]
    n: Option<usize>,
    /// Circulation of the first (positive) vortex.
    #[arg(long)]
    kappa1: Option<f64>,
    /// Circulation of the second (negative) vortex.
    #[arg(long)]
    kappa2: Option<f64>,
    /// Patch strength.
    #[arg(long)]
    lambda: Option<f64>,
    /// Fixed-point iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Isolating-ball radius override (skips the certificate).
    #[arg(long)]
    delta: Option<f64>,
    /// RNG seed for sampled perturbations.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "vpatch-out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the Poisson solves against analytic references.
    GreenCheck(CommonArgs),
    /// Locate and certify the Kirchhoff-Routh minimum.
    KrMin(CommonArgs),
    /// Construct the steady double vortex patch.
    Solve(CommonArgs),
    /// Sweep the patch strength and collect concentration diagnostics.
    SweepLambda {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated strengths.
        #[arg(long)]
        lambdas: Option<String>,
        /// Keep the base grid instead of refining with sqrt(lambda).
        #[arg(long)]
        no_refine: bool,
    },
    /// Evolve a perturbed stored patch and record the L1 time series.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory produced by `solve`.
        #[arg(long)]
        patch: PathBuf,
        /// none | translate:D | translate:DX,DY | translate2:... |
        /// rotate:ANGLE | flow:TIME
        #[arg(long)]
        perturb: Option<String>,
        /// Horizon in turnovers.
        #[arg(long)]
        turnovers: Option<f64>,
        /// Transport stencil: bilinear | bicubic | bfecc
        #[arg(long)]
        interp: Option<String>,
    },
    /// Level-set comparison chain over seeded small rearrangements.
    Localmax {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory produced by `solve`.
        #[arg(long)]
        patch: PathBuf,
        /// Number of sampled perturbations.
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(d) = &common.domain {
        apply_domain_flag(&mut cfg, d)?;
    }
    if let Some(n) = common.n {
        cfg.n = n;
    }
    if let Some(k) = common.kappa1 {
        cfg.kappa1 = Some(k);
    }
    if let Some(k) = common.kappa2 {
        cfg.kappa2 = Some(k);
    }
    if let Some(l) = common.lambda {
        cfg.lambda = Some(l);
    }
    if let Some(m) = common.max_iters {
        cfg.max_iters = m;
    }
    if let Some(d) = common.delta {
        cfg.delta = Some(d);
    }
    if let Some(s) = common.seed {
        cfg.rng_seed = s;
    }
    revalidate(&cfg)?;
    Ok(cfg)
}

fn apply_domain_flag(cfg: &mut RunConfig, spec: &str) -> Result<(), CliError> {
    if spec == "disk" {
        cfg.domain_kind = "disk".into();
        return Ok(());
    }
    if let Some(rest) = spec.strip_prefix("rect:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(CliError::Config(format!("bad rectangle spec {spec:?}")));
        }
        cfg.domain_kind = "rectangle".into();
        cfg.width = parts[0]
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad width in {spec:?}")))?;
        cfg.height = parts[1]
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad height in {spec:?}")))?;
        return Ok(());
    }
    if let Some(path) = spec.strip_prefix("mask:") {
        cfg.domain_kind = "mask".into();
        cfg.mask_path = Some(path.to_string());
        return Ok(());
    }
    Err(CliError::Config(format!(
        "unknown domain {spec:?} (expected disk | rect:W,H | mask:PATH)"
    )))
}

fn revalidate(cfg: &RunConfig) -> Result<(), CliError> {
    // Round-trip through the parser's validator.
    let mut vortex = serde_json::Map::new();
    if let Some(k) = cfg.kappa1 {
        vortex.insert("kappa1".into(), k.into());
    }
    if let Some(k) = cfg.kappa2 {
        vortex.insert("kappa2".into(), k.into());
    }
    let mut solver = serde_json::Map::new();
    if let Some(l) = cfg.lambda {
        solver.insert("lambda".into(), l.into());
    }
    solver.insert("interp".into(), cfg.interp.clone().into());
    solver.insert("threads".into(), cfg.threads.into());
    let json = serde_json::json!({
        "domain": { "kind": cfg.domain_kind },
        "vortex": vortex,
        "solver": solver,
    });
    let probe = parse_config(&json.to_string());
    match probe {
        Ok(_) => Ok(()),
        Err(ConfigError(m)) => Err(CliError::Config(m)),
    }
}

fn dispatch(cli: Cli) -> Result<(Vec<String>, PathBuf), CliError> {
    match &cli.command {
        Command::GreenCheck(common) => {
            let cfg = resolve_config(common)?;
            let out = OutDir::create(&common.out_dir, &cfg)?;
            Ok((commands::run_green_check(&cfg, &out)?, common.out_dir.clone()))
        }
        Command::KrMin(common) => {
            let cfg = resolve_config(common)?;
            let out = OutDir::create(&common.out_dir, &cfg)?;
            Ok((commands::run_kr_min(&cfg, &out)?, common.out_dir.clone()))
        }
        Command::Solve(common) => {
            let cfg = resolve_config(common)?;
            let out = OutDir::create(&common.out_dir, &cfg)?;
            Ok((commands::run_solve(&cfg, &out)?, common.out_dir.clone()))
        }
        Command::SweepLambda {
            common,
            lambdas,
            no_refine,
        } => {
            let mut cfg = resolve_config(common)?;
            if let Some(list) = lambdas {
                cfg.lambdas = list
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Config(format!("bad lambdas list {list:?}")))?;
            }
            let out = OutDir::create(&common.out_dir, &cfg)?;
            Ok((
                commands::run_sweep(&cfg, !no_refine, &out)?,
                common.out_dir.clone(),
            ))
        }
        Command::Evolve {
            common,
            patch,
            perturb,
            turnovers,
            interp,
        } => {
            let mut cfg = resolve_config(common)?;
            if let Some(p) = perturb {
                cfg.perturb = p.clone();
            }
            if let Some(t) = turnovers {
                cfg.turnovers = *t;
            }
            if let Some(i) = interp {
                cfg.interp = i.clone();
                config::interp_kind(&cfg.interp)?;
            }
            let out = OutDir::create(&common.out_dir, &cfg)?;
            Ok((
                commands::run_evolve(&cfg, patch, &out)?,
                common.out_dir.clone(),
            ))
        }
        Command::Localmax {
            common,
            patch,
            trials,
        } => {
            let mut cfg = resolve_config(common)?;
            if let Some(t) = trials {
                cfg.trials = *t;
            }
            let out = OutDir::create(&common.out_dir, &cfg)?;
            Ok((
                commands::run_localmax(&cfg, patch, &out)?,
                common.out_dir.clone(),
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok((failures, out_dir)) => {
            if failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                let doc = serde_json::json!({ "failures": failures });
                println!("{doc}");
                let _ = std::fs::write(
                    out_dir.join("failures.json"),
                    format!("{:#}\n", doc),
                );
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
