use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mwsparse::adapt::Sampling;
use mwsparse::bench::{self, ExperimentConfig};
use mwsparse::csolve;
use mwsparse::models::model_by_name;
use mwsparse::mwbasis::{uniform_bound, MwBasis};
use mwsparse::{Error, Result};

#[derive(Parser)]
#[command(name = "mwsparse", version, about = "Adaptive sparse multi-wavelet surrogates")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive sweep over C and write the result tables.
    Run(ExperimentArgs),
    /// Compute only the Monte Carlo reference statistics.
    Mc(ExperimentArgs),
    /// Write the scaling and wavelet bases as text dumps.
    Basis(BasisArgs),
    /// Restricted isometry and sample-count diagnostics for a Legendre system.
    Rip(RipArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Key-value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    ns: Option<usize>,
    /// Refinement threshold; repeat for a sweep in decreasing order.
    #[arg(long = "c")]
    c: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    mc_seed: Option<u64>,
    #[arg(long)]
    sampling: Option<Sampling>,
    /// Residual bound per leaf; 0 selects exact basis pursuit.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_depth: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write zero wall times so output files are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                ExperimentConfig::from_kv_str(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.model {
            cfg.model = v.clone();
        }
        if let Some(v) = self.n0 {
            cfg.n0 = v;
        }
        if let Some(v) = self.ns {
            cfg.n_s = v;
        }
        if !self.c.is_empty() {
            cfg.cs = self.c.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.mc_samples {
            cfg.mc_samples = v;
        }
        if let Some(v) = self.mc_seed {
            cfg.mc_seed = v;
        }
        if let Some(v) = self.sampling {
            cfg.sampling = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.max_depth {
            cfg.max_depth = v;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = Some(v.clone());
        }
        if self.no_timing {
            cfg.timing = false;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct BasisArgs {
    /// Highest polynomial order to dump.
    #[arg(long, default_value_t = 6)]
    n0: usize,
    #[arg(long, default_value = "basis")]
    out: PathBuf,
}

#[derive(Args)]
struct RipArgs {
    /// Rows of the measurement matrix.
    #[arg(long, default_value_t = 8)]
    ns: usize,
    /// Legendre terms (columns).
    #[arg(long, default_value_t = 12)]
    terms: usize,
    /// Sparsity level for the exhaustive search.
    #[arg(long, default_value_t = 2)]
    sparsity: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Chebyshev sampling also applies the preconditioning weights.
    #[arg(long, default_value_t = Sampling::Uniform)]
    sampling: Sampling,
    /// Order and dimension used for the sample-count estimate.
    #[arg(long, default_value_t = 2)]
    n0: usize,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// RIP level for the sample-count estimate.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    let outcome = match cli.command {
        Command::Run(args) => run(&args),
        Command::Mc(args) => mc(&args),
        Command::Basis(args) => basis(&args),
        Command::Rip(args) => rip(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(args: &ExperimentArgs) -> Result<()> {
    let cfg = args.config()?;
    if let Some(dir) = &cfg.out_dir {
        ensure_dir(dir)?;
    }
    let exp = bench::run_experiment(&cfg)?;
    println!("# Monte Carlo: mean {:.8} variance {:.8}", exp.mc.mean, exp.mc.variance);
    print!("{}", bench::results_csv(&exp.rows));
    Ok(())
}

fn mc(args: &ExperimentArgs) -> Result<()> {
    let cfg = args.config()?;
    let model = model_by_name(&cfg.model)?;
    let r = bench::run_mc(model.as_ref(), cfg.mc_samples, cfg.mc_seed)?;
    println!("model,samples,seed,mean,variance");
    println!("{},{},{},{:.10e},{:.10e}", cfg.model, cfg.mc_samples, cfg.mc_seed, r.mean, r.variance);
    if let Some(dir) = &cfg.out_dir {
        ensure_dir(dir)?;
        let path = dir.join("histogram.csv");
        fs::write(&path, bench::histogram_csv(&r.values, cfg.histogram_bins)).map_err(|e| Error::Io { path, source: e })?;
    }
    Ok(())
}

fn basis(args: &BasisArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    for n0 in 0..=args.n0 {
        let b = MwBasis::new(n0)?;
        for (name, text) in [("scaling", b.scaling.dump()), ("wavelet", b.wavelets.dump())] {
            let path = args.out.join(format!("{name}_n0_{n0}.txt"));
            fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
        }
    }
    println!("wrote {} basis files to {}", 2 * (args.n0 + 1), args.out.display());
    Ok(())
}

fn rip(args: &RipArgs) -> Result<()> {
    if args.ns == 0 {
        return Err(Error::Config("rip needs at least one row".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let points = match args.sampling {
        Sampling::Chebyshev => csolve::chebyshev_points(&mut rng, args.ns),
        Sampling::Uniform => {
            use rand::Rng;
            (0..args.ns).map(|_| rng.gen_range(-1.0..=1.0)).collect()
        }
    };
    let preconditioned = args.sampling == Sampling::Chebyshev;
    let a = csolve::legendre_system(&points, args.terms, preconditioned) / (args.ns as f64).sqrt();
    let delta_s = csolve::rip_constant(&a, args.sparsity)?;
    let bound = uniform_bound(args.n0, args.dims)?;
    let p = mwsparse::tensor::basis_size(args.n0, args.dims);
    let samples = csolve::sample_bound(args.sparsity, p, bound.k, args.delta, 1.0)?;
    println!("rows {} terms {} sampling {}", args.ns, args.terms, args.sampling);
    println!("delta_{} = {delta_s:.6}", args.sparsity);
    println!(
        "basis n0 {} dims {}: P = {p}, K = {:.4}, measured sup {:.4}",
        args.n0, args.dims, bound.k, bound.tensor_sup
    );
    println!("sample estimate at delta {}: {samples}", args.delta);
    Ok(())
}
