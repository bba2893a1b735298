//! The `mushroom` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub mod artifact;
mod commands;
pub mod config;
pub mod plot;

use artifact::{Artifact, Manifest, Sink};
use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl From<mushroom_core::Error> for CliError {
    fn from(e: mushroom_core::Error) -> Self {
        use mushroom_core::Error as E;
        match e {
            E::Numerical { .. } => Self::numerical(e.to_string()),
            // refused hypotheses are a property of the input
            E::Refused { .. } => Self::validation(e.to_string()),
            _ if e.is_validation() => Self::validation(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "mushroom", version, about = "Spectral geometry of the mushroom billiard")]
pub struct Cli {
    /// INI configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving the manifest and artifacts; without it results go to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cache directory (overrides MUSHROOM_CACHE_DIR and the config file).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct Shape {
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub r2: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct Geo {
    #[command(flatten)]
    pub shape: Shape,
    /// Stalk length.
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Start {
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub y: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub dx: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub dy: f64,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum Command {
    /// Area, perimeter and boundary segment table.
    Geom {
        #[command(flatten)]
        geo: Geo,
    },
    /// Billiard flow.
    #[command(subcommand)]
    Dyn(DynCommand),
    /// Bessel zeros.
    #[command(subcommand)]
    Specfun(SpecfunCommand),
    /// Cap quasimodes.
    #[command(subcommand)]
    Quasi(QuasiCommand),
    /// Dirichlet eigenvalues.
    #[command(subcommand)]
    Eig(EigCommand),
    /// Quasimode-to-eigenvector approximation.
    #[command(subcommand)]
    Approx(ApproxCommand),
    /// Eigenvalue flow under stalk elongation.
    #[command(subcommand)]
    Flow(FlowCommand),
    /// Density-set assembly.
    #[command(subcommand)]
    Density(DensityCommand),
    /// Composite reports.
    #[command(subcommand)]
    Report(ReportCommand),
    /// SVG chart of a CSV table.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "line")]
        kind: plot::PlotKind,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        /// Column splitting the rows into separate curves.
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum DynCommand {
    /// Ergodic / integrable / exceptional class of a phase point.
    Classify {
        #[command(flatten)]
        geo: Geo,
        #[command(flatten)]
        start: Start,
    },
    /// Monte-Carlo estimate of the integrable fraction.
    Mc {
        #[command(flatten)]
        geo: Geo,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Bounce points of one orbit.
    Trace {
        #[command(flatten)]
        geo: Geo,
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
        y: f64,
        #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
        dx: f64,
        #[arg(long, default_value_t = 0.8, allow_hyphen_values = true)]
        dy: f64,
        #[arg(long, default_value_t = 100)]
        bounces: usize,
        #[arg(long, default_value_t = f64::INFINITY)]
        max_time: f64,
    },
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum SpecfunCommand {
    /// Zeros `α_{n,1..kmax}` of `J_n`.
    Zeros {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        kmax: u32,
    },
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum QuasiCommand {
    /// Quasimode counts `N(λ)` and `N(λ)/λ²` on an even grid up to `lambda_max`.
    Count {
        #[command(flatten)]
        geo: Geo,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
    /// Residual norm of one quasimode.
    Residual {
        #[command(flatten)]
        geo: Geo,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Inner product of two quasimodes.
    Overlap {
        #[command(flatten)]
        geo: Geo,
        #[arg(long)]
        n1: u32,
        #[arg(long)]
        k1: u32,
        #[arg(long)]
        n2: u32,
        #[arg(long)]
        k2: u32,
        #[arg(long)]
        eps: Option<f64>,
    },
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum EigCommand {
    /// Lowest `count` eigenvalues (cached on disk).
    Solve {
        #[command(flatten)]
        geo: Geo,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Weyl ratios `4πN(Λ)/(Λ|M|)` on a grid of `Λ`.
    Weyl {
        #[command(flatten)]
        geo: Geo,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda_grid: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum ApproxCommand {
    /// Runs the approximation algorithm on a spectrum file.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
    },
}

#[derive(Args, Debug, Clone, Default, Serialize)]
#[group(skip)]
pub struct Sweep {
    #[command(flatten)]
    pub shape: Shape,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub jmax: usize,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum FlowCommand {
    /// Numeric, boundary and interior `dE_j/dt` for `j ≤ J` at one `t`.
    Hadamard {
        #[command(flatten)]
        geo: Geo,
        /// Largest branch index.
        #[arg(long, default_value_t = 5)]
        j: usize,
        #[arg(long)]
        h: Option<f64>,
        /// Central-difference step; four grid steps by default.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Eigenvalue branches and their derivatives over `[t0, t1]`.
    Sweep {
        #[command(flatten)]
        sweep: Sweep,
    },
    /// Fraction of `[t0, t1]` each branch spends in quasimode windows.
    Occupancy {
        #[command(flatten)]
        sweep: Sweep,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum DensityCommand {
    /// Assembles the density set from a JSON instance.
    Assemble {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand, Debug, Clone, Serialize)]
pub enum ReportCommand {
    /// Integrable fraction, quasimode and Weyl counts, good-time ratio and flow table at one `t`.
    Percival {
        #[command(flatten)]
        geo: Geo,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Files a command produced and notes for stderr.
pub(crate) struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    commands::apply_overrides(&cli.command, &mut cfg);
    cfg.cache_dir = config::resolve_cache_dir(cli.cache_dir.as_deref(), &cfg.cache_dir);
    if let Some(o) = &cli.out {
        cfg.out_dir = Some(o.clone());
    }
    cfg.validate()?;
    let inputs = commands::input_bytes(&cli.command)?;

    let sink = match &cfg.out_dir {
        Some(dir) => Some(Sink::begin(dir, manifest(cli, &cfg, &inputs))?),
        None => None,
    };
    match commands::dispatch(&cli.command, &cfg) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            match sink {
                Some(s) => {
                    for p in s.finish(&out.artifacts)? {
                        println!("{}", p.display());
                    }
                }
                None => {
                    use std::io::Write;
                    let mut stdout = std::io::stdout().lock();
                    for (i, a) in out.artifacts.iter().enumerate() {
                        if i > 0 {
                            let _ = stdout.write_all(b"\n");
                        }
                        let _ = stdout.write_all(&a.content);
                    }
                }
            }
            Ok(())
        }
        Err(e) => {
            if let Some(s) = sink {
                s.fail(&e.message);
            }
            Err(e)
        }
    }
}

fn manifest(cli: &Cli, cfg: &RunConfig, inputs: &[u8]) -> Manifest {
    let command = serde_json::to_value(&cli.command).expect("command serialises");
    let config = serde_json::to_value(cfg).expect("config serialises");
    let mut hashed = serde_json::to_vec(&(&command, &config)).expect("inputs serialise");
    hashed.extend_from_slice(inputs);
    Manifest {
        tool: "mushroom".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: mushroom_core::VERSION.into(),
        command: commands::name(&cli.command),
        inputs_sha256: artifact::sha256_hex(&hashed),
        seeds: if commands::uses_seed(&cli.command) { vec![cfg.seed] } else { vec![] },
        config: serde_json::json!({ "resolved": config, "arguments": command }),
        status: "running".into(),
        error: None,
        artifacts: vec![],
    }
}
