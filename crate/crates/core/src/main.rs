use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsd_lab::cli::{run_config_file, with_thread_override};
use qsd_lab::models::{list_models, ModelId};
use qsd_lab::montecarlo::{fk_estimate, MC_CSV_HEADER};
use qsd_lab::operators::{feynman_kac_operator, FkMethod};
use qsd_lab::spectral::principal_triple;

#[derive(Parser)]
#[command(name = "qsd-lab", version, about = "Quasi-ergodicity diagnostics for sub-Markov semigroups")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Print the model zoo.
    ListModels,
    /// Print the principal eigentriple and spectral gap of a zoo model.
    Spectral { model: String },
    /// Monte Carlo estimate of the survival mass against the matrix kernel.
    Mc {
        model: String,
        #[arg(long, default_value_t = 0)]
        x0: usize,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.command {
        Command::Run { config } => run_config_file(&config),
        Command::ListModels => {
            print!("{}", list_models());
            0
        }
        Command::Spectral { model } => report(spectral(&model)),
        Command::Mc { model, x0, t, n, seed } => report(with_thread_override(|| mc(&model, x0, t, n, seed))),
    };
    ExitCode::from(code as u8)
}

fn report(result: qsd_lab::Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn spectral(model: &str) -> qsd_lab::Result<()> {
    let m = model.parse::<ModelId>()?.build()?;
    let spec = principal_triple(&m)?;
    print!("{}", spec.to_text(m.space()));
    Ok(())
}

fn mc(model: &str, x0: usize, t: f64, n: usize, seed: u64) -> qsd_lab::Result<()> {
    let id = model.parse::<ModelId>()?;
    let m = id.build()?;
    let est = fk_estimate(&m, x0, t, &vec![1.0; m.len()], n, seed)?;
    let exact = feynman_kac_operator(&m, t, FkMethod::ExactExponential)?.survival()[x0];
    println!("{MC_CSV_HEADER}");
    println!("{}", est.csv_row(&id.to_string(), "survival", t));
    println!("# matrix value {exact:.12e}, deviation {:.2} standard errors", (est.mean - exact) / est.stderr);
    Ok(())
}
