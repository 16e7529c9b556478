use clap::{Parser, Subcommand};
use matweight_cli::commands::{self, Failure, Outcome};
use matweight_cli::config::ExperimentConfig;
use matweight_cli::suite::Tier;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "matweight", version, about = "Matrix-weighted function space experiments")]
struct Cli {
    /// Path to a JSON config, or the JSON itself.
    #[arg(long, global = true, default_value = r#"{"weight": "identity", "p": 2}"#)]
    config: String,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config, defaults to `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the dimensions of the configured weight.
    Apdim,
    /// Compare weighted and reduced norms on random band-limited functions.
    Norms,
    /// Tabulate the filter pair.
    Filters,
    /// Build the reducing family over the configured window.
    Reduce,
    /// Run the verification suite.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        tier: Tier,
    },
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let cfg = ExperimentConfig::load(&cli.config)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let out = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Apdim => commands::apdim(&cfg, seed, &out),
        Command::Norms => commands::norms(&cfg, seed, &out),
        Command::Filters => commands::filters(&cfg, seed, &out),
        Command::Reduce => commands::reduce(&cfg, seed, &out),
        Command::Verify { tier } => commands::verify(&cfg, seed, tier, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(cli) {
        Ok(o) => {
            for l in &o.lines {
                println!("{l}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
