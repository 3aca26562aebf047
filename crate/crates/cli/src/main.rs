use alpha_riccati_cli::commands::{self, SeedSpec};
use alpha_riccati_cli::config::{OutputFormat, RunConfig};
use alpha_riccati_cli::{EXIT_NUMERICAL, EXIT_USAGE};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "alpha-riccati",
    version,
    about = "Solver toolkit for u'(t) + u(t) = u^2(alpha t), u(0) = 1, alpha > 1"
)]
struct Cli {
    /// Flat key = value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for data files and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format: csv, json, or both.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,

    /// Full Gauss-Laguerre rule size.
    #[arg(short = 'N', long = "grid-size", global = true)]
    grid_n: Option<usize>,

    /// Truncation multiplier; the grid keeps ceil(M sqrt(N)) nodes.
    #[arg(short = 'M', long = "grid-mult", global = true)]
    grid_m: Option<f64>,

    /// Significand bits for the series machinery.
    #[arg(long, global = true)]
    bits: Option<usize>,

    /// Newton convergence tolerance (max-norm).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Moment-identity gate for continuation point acceptance.
    #[arg(long, global = true)]
    moment_tol: Option<f64>,

    /// Export the operator matrices next to solve outputs.
    #[arg(long, global = true)]
    dump_operators: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print and export the scaling coefficients C_n and norms.
    Coeffs {
        #[arg(long, default_value_t = 6)]
        max_n: u32,
    },
    /// Convergence study of the linear characteristic solve vs the series.
    VerifyLinear {
        /// Characteristic indices to check (alpha = 2^(1/n)).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 3, 5])]
        n_values: Vec<u32>,
        /// Rule sizes N for the sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![25usize, 50, 100, 200, 400, 700])]
        n_sweep: Vec<usize>,
        /// Error ceiling applied at the largest N.
        #[arg(long)]
        ceiling: Option<f64>,
    },
    /// One nonlinear solve from a chosen seed.
    Solve {
        #[arg(long)]
        alpha: f64,
        /// perturbation:N:EPS | family-b | file:PATH
        #[arg(long)]
        seed: String,
        /// Profile export reaches this t.
        #[arg(long, default_value_t = 15.0)]
        t_max: f64,
    },
    /// Pseudo-arclength atlas over an alpha window.
    Atlas {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 2])]
        n_range: Vec<u32>,
        /// alpha window as LO:HI.
        #[arg(long, default_value = "1.35:4.2")]
        window: String,
        /// alpha values for solution snapshots.
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
        /// Seeding offset from each characteristic value.
        #[arg(long, default_value_t = 0.01)]
        eps_seed: f64,
    },
    /// Perturbation residual curves r_n(t; eps) with the eps -> 0 limit.
    ResidualCheck {
        #[arg(long)]
        n: u32,
        #[arg(long, value_delimiter = ',')]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = 40.0)]
        t_max: f64,
    },
}

fn run(cli: Cli) -> alpha_riccati::Result<i32> {
    let mut config = RunConfig::default();
    if let Some(path) = &cli.config {
        config.apply_file(path)?;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    if let Some(format) = cli.format {
        config.format = format;
    }
    if let Some(n) = cli.grid_n {
        config.grid_n = n;
    }
    if let Some(m) = cli.grid_m {
        config.grid_m = m;
    }
    if let Some(bits) = cli.bits {
        config.precision_bits = bits;
    }
    if let Some(tol) = cli.tol {
        config.newton_tol = tol;
    }
    if let Some(mtol) = cli.moment_tol {
        config.moment_tol = mtol;
    }
    config.dump_operators |= cli.dump_operators;
    config.validate()?;

    match cli.command {
        Command::Coeffs { max_n } => commands::cmd_coeffs(&config, max_n),
        Command::VerifyLinear {
            n_values,
            n_sweep,
            ceiling,
        } => commands::cmd_verify_linear(
            &config,
            &n_values,
            &n_sweep,
            ceiling.unwrap_or(config.verify_ceiling),
        ),
        Command::Solve { alpha, seed, t_max } => {
            let spec: SeedSpec = seed
                .parse()
                .map_err(alpha_riccati::Error::Config)?;
            commands::cmd_solve(&config, alpha, &spec, t_max)
        }
        Command::Atlas {
            n_range,
            window,
            snapshots,
            eps_seed,
        } => {
            let (lo, hi) = window
                .split_once(':')
                .ok_or_else(|| alpha_riccati::Error::Config("window must be LO:HI".into()))?;
            let lo: f64 = lo
                .parse()
                .map_err(|_| alpha_riccati::Error::Config(format!("bad window start '{lo}'")))?;
            let hi: f64 = hi
                .parse()
                .map_err(|_| alpha_riccati::Error::Config(format!("bad window end '{hi}'")))?;
            commands::cmd_atlas(&config, &n_range, (lo, hi), &snapshots, eps_seed)
        }
        Command::ResidualCheck { n, epsilon, t_max } => {
            commands::cmd_residual_check(&config, n, &epsilon, t_max)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                alpha_riccati::Error::Config(_)
                | alpha_riccati::Error::Domain(_)
                | alpha_riccati::Error::Dimension { .. } => EXIT_USAGE,
                _ => EXIT_NUMERICAL,
            }
        }
    };
    std::process::exit(code);
}
