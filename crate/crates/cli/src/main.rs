mod config;
mod run;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{DeformKindConfig, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "hypersurf", version, about = "Curvature audits, Gauss maps, degrees and deformations of hypersurfaces")]
struct Cli {
    /// Worker threads for per-sample work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Principal curvatures on a mesh and their interval verdict.
    Curvature(Common),
    /// Sampled Gauss map, Jacobian signs and orientation class.
    Gauss(GaussArgs),
    /// Degree of a Gauss map by Jacobian quadrature.
    Degree(GaussArgs),
    /// Track a deformation path.
    Deform(DeformArgs),
    /// Run all acceptance checks.
    VerifyAll(VerifyArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML experiment config.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Shipped catalog entry; replaces `immersion` from the config.
    #[arg(long)]
    entry: Option<String>,
    #[arg(long)]
    interval: Option<String>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for CSV/JSON/OBJ artifacts.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write an OBJ of the immersion (n = 2).
    #[arg(long)]
    obj: bool,
}

#[derive(Args, Debug, Clone)]
struct GaussArgs {
    #[command(flatten)]
    common: Common,
    /// normal, flat, visual or check.
    #[arg(long)]
    map: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct DeformArgs {
    #[command(flatten)]
    common: Common,
    /// normal-flow, euclidean-retraction, half-space-retraction or overlap-path.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    r_end: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct VerifyArgs {
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration; exit status 2.
    Config(String),
    /// A configured verdict failed; exit status 3.
    Verdict(String),
    /// Anything else; exit status 1.
    Other(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Verdict(m) => write!(f, "FAIL: {m}"),
            CliError::Other(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<hypersurf::GeometryError> for CliError {
    fn from(e: hypersurf::GeometryError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

fn parse_value<T: serde::de::DeserializeOwned>(flag: &str, v: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(v.to_string()))
        .map_err(|e| CliError::Config(format!("--{flag}: {e}")))
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut c = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(e) = &common.entry {
        c.model = None;
        c.immersion = Some(config::ImmersionConfig {
            entry: Some(e.clone()),
            ..Default::default()
        });
    }
    if let Some(i) = &common.interval {
        c.interval = Some(i.parse().map_err(|e| CliError::Config(format!("--interval: {e}")))?);
    }
    if common.level.is_some() {
        c.mesh_level = common.level;
    }
    if common.seed.is_some() {
        c.seed = common.seed;
    }
    if common.output.is_some() || common.obj {
        let out = c.output.get_or_insert_with(Default::default);
        if common.output.is_some() {
            out.dir = common.output.clone();
        }
        if common.obj {
            out.obj = Some(true);
        }
    }
    Ok(c)
}

fn load_gauss(g: &GaussArgs) -> Result<ExperimentConfig, CliError> {
    let mut c = load(&g.common)?;
    if let Some(m) = &g.map {
        c.gauss.get_or_insert_with(Default::default).map = Some(parse_value("map", m)?);
    }
    Ok(c)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Curvature(c) => run::curvature(&load(&c)?),
        Command::Gauss(g) => run::gauss(&load_gauss(&g)?),
        Command::Degree(g) => run::degree(&load_gauss(&g)?),
        Command::Deform(d) => {
            let mut c = load(&d.common)?;
            if let Some(k) = &d.kind {
                let kind: DeformKindConfig = parse_value("kind", k)?;
                match c.deform.as_mut() {
                    Some(dc) => dc.kind = kind,
                    None => {
                        c.deform = Some(config::DeformConfig {
                            kind,
                            mu: None,
                            steps: None,
                            r_end: None,
                            tau: None,
                            max_tau_k: None,
                            drift_tol: None,
                            formula_tol: None,
                            obj_every: None,
                        })
                    }
                }
            }
            if let Some(dc) = c.deform.as_mut() {
                dc.mu = d.mu.or(dc.mu);
                dc.steps = d.steps.or(dc.steps);
                dc.tau = d.tau.or(dc.tau);
                dc.r_end = d.r_end.or(dc.r_end);
            }
            run::deform(&c)
        }
        Command::VerifyAll(v) => run::verify_all(v.level, v.seed, v.output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                CliError::Verdict(_) => 3,
                CliError::Other(_) => 1,
            })
        }
    }
}
