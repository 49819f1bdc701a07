use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ttc_cli::config::{Config, InitKind, Lambda};
use ttc_cli::mask::{make_mask, write_mask, MaskMode};
use ttc_cli::run::{run_complete, run_cv, run_metrics, run_synth, CompleteOutcome};
use ttc_cli::Result;

#[derive(Parser)]
#[command(name = "ttc", version, about = "Tensor-train completion of images and videos")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complete an image or video described by a config file.
    Complete(CompleteArgs),
    /// Cross-validate candidate rank schedules.
    Cv(CvArgs),
    /// Draw a sampling mask.
    Mask(MaskArgs),
    /// RSE and PSNR between two images or frame directories.
    Metrics(MetricsArgs),
    /// Write a seeded synthetic instance (image, mask, config).
    Synth(SynthArgs),
}

#[derive(Args)]
struct Overrides {
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sweeps: Option<usize>,
    /// TV weight applied to every configured TV mode.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_enum)]
    init: Option<InitKind>,
}

impl Overrides {
    fn load(&self) -> Result<Config> {
        let mut cfg = Config::load(&self.config)?;
        if let Some(o) = &self.output {
            cfg.output.dir = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.sweeps {
            cfg.solver.sweeps = s;
        }
        if let Some(l) = self.lambda {
            cfg.solver.lambda = Lambda::Uniform(l);
        }
        if let Some(g) = self.gamma {
            cfg.solver.gamma = g;
        }
        if let Some(i) = self.init {
            cfg.solver.init = i;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct CompleteArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Explicit ranks R_2..R_d, comma separated.
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// Fold frames and channels into the first core (sensor masks only).
    #[arg(long)]
    grouped: bool,
    /// Print the planned factorization and ranks without solving.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct MaskArgs {
    /// Tensor dims, comma separated (e.g. 96,96,3).
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long)]
    fraction: f64,
    #[arg(long, value_enum, default_value = "iid")]
    mode: MaskMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    /// Peak value on the [0, 1] intensity scale.
    #[arg(long, default_value_t = 1.0)]
    peak: f64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, default_value_t = 0.3)]
    fraction: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Complete(a) => {
            let mut cfg = a.overrides.load()?;
            if let Some(r) = a.ranks {
                cfg.ranks.explicit = Some(r);
            }
            cfg.solver.grouped |= a.grouped;
            match run_complete(&cfg, a.dry_run)? {
                CompleteOutcome::DryRun(plan) => print!("{}", plan.describe()),
                CompleteOutcome::Done(_, rec) => {
                    print!("{}", toml::to_string(&rec).expect("record serializes"));
                }
            }
        }
        Command::Cv(a) => {
            let mut cfg = a.overrides.load()?;
            if let Some(t) = a.trials {
                cfg.cv.trials = t;
            }
            let (report, _) = run_cv(&cfg)?;
            for i in report.ranking() {
                let s = &report.scores[i];
                println!("candidate {} ranks {:?} params {} mean_rse {:e}", i + 1, s.ranks, s.params, s.mean_rse);
            }
            println!("selected candidate {}", report.best + 1);
        }
        Command::Mask(a) => {
            let picks = make_mask(&a.dims, a.fraction, a.mode, a.seed)?;
            write_mask(&a.out, &picks)?;
            println!("{} observed entries written to {}", picks.len(), a.out.display());
        }
        Command::Metrics(a) => {
            let (rse, psnr) = run_metrics(&a.truth, &a.estimate, a.peak)?;
            println!("rse = {rse:e}\npsnr = {psnr}");
        }
        Command::Synth(a) => {
            let cfg = run_synth(&a.out, a.size, a.fraction, a.seed)?;
            println!("{}", cfg.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

