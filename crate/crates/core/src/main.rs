use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nlcl::commands::{self, Perturbation, RunOptions, EXIT_BLOWUP, EXIT_OK};
use nlcl::config::ScenarioConfig;
use nlcl::Error;

#[derive(Parser)]
#[command(name = "nlcl", version, about = "Nonlocal balance-law solver")]
struct Cli {
    /// Output directory (overrides the config's output.directory).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Number of evenly spaced snapshots after t = 0.
    #[arg(long, global = true)]
    snapshots: Option<usize>,
    /// Seed for the random fields of `oracle`.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run { config: PathBuf },
    /// Paired runs from perturbed data; prints the L1 Lipschitz ratio table.
    Compare {
        config: PathBuf,
        /// e.g. "component=h_m;center=3,0;radius=1;delta=1e-2,1e-3,1e-4"
        #[arg(long)]
        perturb: String,
    },
    /// FFT against direct-sum convolution on random fields.
    Oracle {
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256])]
        sizes: Vec<usize>,
    },
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    let options = RunOptions {
        output_dir: cli.output_dir.clone(),
        snapshots: cli.snapshots,
    };
    match &cli.command {
        Command::Run { config } => {
            let outcome = commands::run_command(ScenarioConfig::load(config)?, &options)?;
            if !cli.quiet {
                print!("{}", outcome.report);
                println!("artifacts in {}", outcome.output_dir.display());
            }
            if let nlcl::diagnostics::HaltReason::BlowUp { t, reason } = &outcome.record.halt {
                eprintln!("halted by blow-up after t = {t}: {reason}");
            }
            Ok(outcome.exit_code())
        }
        Command::Compare { config, perturb } => {
            let p: Perturbation = perturb.parse()?;
            let report = commands::compare_command(ScenarioConfig::load(config)?, &p, &options)?;
            if !cli.quiet {
                println!("shared dt {:e}", report.dt);
                print!("{}", report.to_csv());
            }
            Ok(if report.halted { EXIT_BLOWUP } else { EXIT_OK })
        }
        Command::Oracle { sizes } => {
            let rows = commands::oracle_command(sizes, cli.seed)?;
            let mut ok = true;
            for r in &rows {
                ok &= r.passed();
                if !cli.quiet {
                    println!(
                        "{:>5} x {:<5} taps {:>6}  value dev {:.3e}  gradient dev {:.3e}  {}",
                        r.n,
                        r.n,
                        r.taps,
                        r.value_deviation,
                        r.gradient_deviation,
                        if r.passed() { "ok" } else { "FAIL" }
                    );
                }
            }
            Ok(if ok { EXIT_OK } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new().filter_level(level).init();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            commands::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
