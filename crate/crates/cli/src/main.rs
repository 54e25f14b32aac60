use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cgft_cli::base_spec::{for_embedding, parse_base};
use cgft_cli::commands::{self, EmbedOptions, Outcome};
use cgft_cli::suites::SuiteSizes;
use clap::{Parser, Subcommand};

/// Optimal transport with cumulant-generating-function costs, and the
/// exponentially concave embedding of Λ₀-concave potentials.
#[derive(Parser, Debug)]
#[command(name = "cgft", version)]
struct Cli {
    /// gaussian:d[:nodes], simplex:d[:centered], or a base JSON file
    #[arg(long, global = true)]
    base: Option<String>,
    /// Seed for randomized checks
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Superdifferential pair tolerance
    #[arg(long, global = true, default_value_t = cgft::ctransform::DEFAULT_CHECK_TOL)]
    tol: f64,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Print only the JSON report
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a discrete transport problem and certify the plan
    Solve {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Use log-domain Sinkhorn with this regularization instead of the exact solver
        #[arg(long)]
        entropic: Option<f64>,
    },
    /// Λ₀-transform of a grid function
    Transform {
        #[arg(long)]
        psi: PathBuf,
        /// JSON list of output points (defaults to the input grid)
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Compute the backward transform instead of the conjugate
        #[arg(long)]
        backward: bool,
    },
    /// Build φ from a Λ₀-concave ψ and check the embedding
    Embed {
        #[arg(long)]
        psi: PathBuf,
        /// JSON list of α points on the ψ grid (defaults to the whole grid)
        #[arg(long)]
        alpha_grid: Option<PathBuf>,
        /// JSON list of θ points for the conjugate (defaults to the ψ grid)
        #[arg(long)]
        theta_grid: Option<PathBuf>,
        #[arg(long, default_value_t = cgft::ctransform::DEFAULT_LIPSCHITZ)]
        lipschitz: f64,
        /// Random test measures per superdifferential pair
        #[arg(long, default_value_t = 20)]
        nu_count: usize,
    },
    /// Run the randomized invariant suites
    Verify,
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CGFT_THREADS") {
        let n: usize = v.parse().with_context(|| format!("CGFT_THREADS=`{v}` is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    configure_threads()?;
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        bail!("--tol must be a positive number");
    }
    let base = parse_base(cli.base.as_deref().context("--base is required")?)?;
    match cli.command {
        Command::Solve { source, target, entropic } => commands::solve(base, &source, &target, entropic, cli.seed),
        Command::Transform { psi, grid, backward } => commands::transform(base, &psi, grid.as_deref(), backward, cli.seed),
        Command::Embed { psi, alpha_grid, theta_grid, lipschitz, nu_count } => {
            let opts = EmbedOptions { pair_tol: cli.tol, lipschitz, nu_count, ..EmbedOptions::default() };
            commands::embed(for_embedding(base)?, &psi, alpha_grid.as_deref(), theta_grid.as_deref(), opts, cli.seed)
        }
        Command::Verify => commands::verify(for_embedding(base)?, cli.tol, cli.seed, SuiteSizes::default()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (out, json, seed) = (cli.out.clone(), cli.json, cli.seed);
    let outcome = match run(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = outcome.artifacts.write_to(&out) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    if json {
        print!("{}", outcome.report);
    } else {
        println!("seed {seed}");
        for line in &outcome.summary {
            println!("{line}");
        }
        for name in outcome.artifacts.names() {
            println!("wrote {}", out.join(name).display());
        }
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
