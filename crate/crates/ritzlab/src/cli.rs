//! Command-line argument parsing and per-experiment default resolution.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::experiments::{EngineKind, ExperimentConfig, NINE_PAIRS};

#[derive(Debug, Parser)]
#[command(
    name = "ritzlab",
    version,
    about = "Deep Ritz training laboratory: variational energy, competing gradient engines, and loss-landscape diagnostics for 1D elliptic problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deep Ritz with ReLU vs tanh plus a ReLU regression control
    Provocation(CommonArgs),
    /// Provocation with the higher-frequency source 100·sin(4πx)
    ProvocationHf(CommonArgs),
    /// Single-neuron engine comparison showing the dropped delta impulse
    DeltaDemo(CommonArgs),
    /// Deep Ritz with the C¹ ReLU² activation next to tanh
    Relu2Fix(CommonArgs),
    /// Start Deep Ritz training from a regression fit of the exact solution
    InitAtSolution(CommonArgs),
    /// Identically initialized ReLU nets trained with FD vs AD gradients
    FdVsAd(CommonArgs),
    /// Hessian-eigenvector slices of the energy around regression optima
    Landscape(LandscapeArgs),
    /// Fit the configured network to the exact solution by regression
    Regress(CommonArgs),
    /// Run the gradient-engine equivalence and divergence law suite
    CheckGradients(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Provocation(_) => "provocation",
            Command::ProvocationHf(_) => "provocation-hf",
            Command::DeltaDemo(_) => "delta-demo",
            Command::Relu2Fix(_) => "relu2-fix",
            Command::InitAtSolution(_) => "init-at-solution",
            Command::FdVsAd(_) => "fd-vs-ad",
            Command::Landscape(_) => "landscape",
            Command::Regress(_) => "regress",
            Command::CheckGradients(_) => "check-gradients",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Provocation(c)
            | Command::ProvocationHf(c)
            | Command::DeltaDemo(c)
            | Command::Relu2Fix(c)
            | Command::InitAtSolution(c)
            | Command::FdVsAd(c)
            | Command::Regress(c)
            | Command::CheckGradients(c) => c,
            Command::Landscape(l) => &l.common,
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// RNG seed for the initial parameter draw
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Hidden-layer width N
    #[arg(long, default_value_t = 50, value_parser = parse_width)]
    pub width: usize,

    /// Number of quadrature points on [0, 1]
    #[arg(long = "grid-points", default_value_t = 250, value_parser = parse_grid_points)]
    pub grid_points: usize,

    /// Training epochs (full-batch)
    #[arg(long, default_value_t = 5000, value_parser = parse_epochs)]
    pub epochs: usize,

    /// ADAM learning rate; defaults to 1e-3 (5e-3 for fd-vs-ad)
    #[arg(long, value_parser = parse_positive)]
    pub lr: Option<f64>,

    /// Activation function (used by regress)
    #[arg(long, value_enum, default_value_t = Activation::Relu)]
    pub activation: Activation,

    /// Gradient engine for energy training
    #[arg(long, value_enum, default_value_t = EngineKind::Ad)]
    pub engine: EngineKind,

    /// Central-difference step for the fd engine and Hessian probes
    #[arg(long = "fd-step", default_value_t = 1e-3, value_parser = parse_positive)]
    pub fd_step: f64,

    /// Record parameter snapshots every K epochs
    #[arg(long = "snapshot-every")]
    pub snapshot_every: Option<usize>,

    /// Output directory (default: out/<experiment>)
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Slice grid resolution per axis
    #[arg(long, default_value_t = 51, value_parser = parse_resolution)]
    pub resolution: usize,

    /// Perturbation half-width along each eigenvector
    #[arg(long = "half-width", default_value_t = 0.5, value_parser = parse_positive)]
    pub half_width: f64,

    /// Eigenvector pairs as "i,j;i,j;..." (1-based, eigenvalues descending)
    #[arg(long)]
    pub pairs: Option<String>,
}

fn parse_width(s: &str) -> std::result::Result<usize, String> {
    parse_min(s, 1, "--width")
}

fn parse_grid_points(s: &str) -> std::result::Result<usize, String> {
    parse_min(s, 2, "--grid-points")
}

fn parse_epochs(s: &str) -> std::result::Result<usize, String> {
    parse_min(s, 1, "--epochs")
}

fn parse_resolution(s: &str) -> std::result::Result<usize, String> {
    parse_min(s, 3, "--resolution")
}

fn parse_min(s: &str, min: usize, flag: &str) -> std::result::Result<usize, String> {
    let v: usize = s.parse().map_err(|_| format!("{flag}: not an integer"))?;
    if v < min {
        return Err(format!("{flag} must be at least {min}, got {v}"));
    }
    Ok(v)
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| "not a number".to_string())?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("must be a positive finite number, got {v}"));
    }
    Ok(v)
}

fn parse_pairs(spec: &str) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for chunk in spec.split(';').filter(|c| !c.trim().is_empty()) {
        let mut it = chunk.split(',');
        let (i, j) = (it.next(), it.next());
        let parse = |t: Option<&str>| -> Result<usize> {
            t.and_then(|v| v.trim().parse().ok())
                .filter(|&v| v >= 1)
                .ok_or_else(|| {
                    Error::Experiment(format!(
                        "--pairs: expected \"i,j;i,j;...\" with 1-based indices, got {spec:?}"
                    ))
                })
        };
        let pair = (parse(i)?, parse(j)?);
        if it.next().is_some() {
            return Err(Error::Experiment(format!(
                "--pairs: each entry needs exactly two indices, got {chunk:?}"
            )));
        }
        pairs.push(pair);
    }
    if pairs.is_empty() {
        return Err(Error::Experiment("--pairs: no pairs given".into()));
    }
    Ok(pairs)
}

/// Fills per-experiment defaults and returns the resolved configuration plus
/// any advisory warnings (redundant flag combinations).
pub fn resolve(cli: &Cli) -> Result<(ExperimentConfig, Vec<String>)> {
    let name = cli.command.name();
    let common = cli.command.common();
    let out_dir = common
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(name));

    let mut cfg = ExperimentConfig::new(name, out_dir);
    cfg.seed = common.seed;
    cfg.width = common.width;
    cfg.grid_points = common.grid_points;
    cfg.epochs = common.epochs;
    if let Some(lr) = common.lr {
        cfg.lr = lr;
    }
    cfg.activation = common.activation;
    cfg.engine = common.engine;
    cfg.fd_step = common.fd_step;
    cfg.snapshot_every = common.snapshot_every.filter(|&k| k > 0);

    if let Command::Landscape(args) = &cli.command {
        cfg.resolution = args.resolution;
        cfg.half_width = args.half_width;
        cfg.pairs = match &args.pairs {
            Some(spec) => parse_pairs(spec)?,
            None => NINE_PAIRS.to_vec(),
        };
    }

    let mut warnings = Vec::new();
    if cfg.engine != EngineKind::Ad && cfg.activation.is_smooth() {
        warnings.push(format!(
            "--engine {:?} is redundant for the smooth {:?} activation: all engines agree there",
            cfg.engine, cfg.activation
        ));
    }
    Ok((cfg, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).expect("valid args")
    }

    #[test]
    fn provocation_defaults_match_stated_hyperparameters() {
        let cli = parse(&["ritzlab", "provocation"]);
        let (cfg, _) = resolve(&cli).unwrap();
        assert_eq!(cfg.name, "provocation");
        assert_eq!(cfg.width, 50);
        assert_eq!(cfg.grid_points, 250);
        assert_eq!(cfg.epochs, 5000);
        assert_eq!(cfg.lr, 1e-3);
        assert_eq!(cfg.out_dir, PathBuf::from("out/provocation"));
    }

    #[test]
    fn fd_vs_ad_defaults() {
        let cli = parse(&["ritzlab", "fd-vs-ad"]);
        let (cfg, _) = resolve(&cli).unwrap();
        assert_eq!(cfg.lr, 5e-3);
        assert_eq!(cfg.fd_step, 1e-3);
        // an explicit learning rate wins
        let cli = parse(&["ritzlab", "fd-vs-ad", "--lr", "0.002"]);
        let (cfg, _) = resolve(&cli).unwrap();
        assert_eq!(cfg.lr, 0.002);
    }

    #[test]
    fn degenerate_grid_rejected_at_parse_time() {
        let err = Cli::try_parse_from(["ritzlab", "provocation", "--grid-points", "1"])
            .unwrap_err()
            .to_string();
        assert!(err.contains("--grid-points"), "{err}");
    }

    #[test]
    fn unknown_flags_rejected() {
        assert!(Cli::try_parse_from(["ritzlab", "provocation", "--frobnicate", "3"]).is_err());
    }

    #[test]
    fn landscape_pairs_parsing() {
        let cli = parse(&[
            "ritzlab",
            "landscape",
            "--pairs",
            "1,2;3,4",
            "--resolution",
            "11",
        ]);
        let (cfg, _) = resolve(&cli).unwrap();
        assert_eq!(cfg.pairs, vec![(1, 2), (3, 4)]);
        assert_eq!(cfg.resolution, 11);

        let bad = parse(&["ritzlab", "landscape", "--pairs", "0,2"]);
        assert!(resolve(&bad).is_err());
        let bad = parse(&["ritzlab", "landscape", "--pairs", "1,2,3"]);
        assert!(resolve(&bad).is_err());
    }

    #[test]
    fn landscape_defaults_to_nine_pairs() {
        let cli = parse(&["ritzlab", "landscape"]);
        let (cfg, _) = resolve(&cli).unwrap();
        assert_eq!(cfg.pairs.len(), 9);
        assert_eq!(cfg.pairs[0], (1, 2));
        assert_eq!(cfg.resolution, 51);
        assert_eq!(cfg.half_width, 0.5);
    }

    #[test]
    fn redundant_engine_warning_for_smooth_activation() {
        let cli = parse(&["ritzlab", "regress", "--activation", "tanh", "--engine", "exact"]);
        let (_, warnings) = resolve(&cli).unwrap();
        assert_eq!(warnings.len(), 1);
        let cli = parse(&["ritzlab", "regress", "--activation", "relu", "--engine", "exact"]);
        let (_, warnings) = resolve(&cli).unwrap();
        assert!(warnings.is_empty());
    }
}
