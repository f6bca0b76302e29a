// Run a TOML experiment and write its report files.

use std::path::Path;

use qsd_lab::cli::{run_experiment, ExperimentConfig};

fn main() -> qsd_lab::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/birthdeath.toml");
    let config = ExperimentConfig::from_file(&path)?;
    let report = run_experiment(&config)?;
    print!("{}", report.verdict_text());
    let out = std::env::temp_dir().join("qsd-lab-example");
    report.write(&out)?;
    println!("report written to {}", out.display());
    Ok(())
}
