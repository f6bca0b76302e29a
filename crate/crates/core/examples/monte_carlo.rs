// Feynman-Kac path estimates against matrix values, the mass sandwich and
// the stable characteristic function.

use qsd_lab::models::ModelId;
use qsd_lab::montecarlo::*;
use qsd_lab::operators::{feynman_kac_operator, FkMethod};

fn main() -> qsd_lab::Result<()> {
    let model = "birthdeath(20)".parse::<ModelId>()?.build()?;
    let ones = vec![1.0; model.len()];
    for t in [0.5, 1.0, 2.0] {
        let exact = feynman_kac_operator(&model, t, FkMethod::ExactExponential)?.survival()[10];
        let est = fk_estimate(&model, 10, t, &ones, 100_000, 1)?;
        let s = mass_sandwich(&model, 10, t, 1.0, 100_000, 2)?;
        println!(
            "t = {t}: matrix {exact:.6}, path {:.6} +/- {:.1e}, sandwich [{:.6}, {:.6}]",
            est.mean, est.stderr, s.lower.mean, s.upper
        );
    }
    for xi in [0.5, 1.0, 2.0] {
        let e = stable_cf_estimate(1.5, 1.0, xi, 100_000, 3)?;
        println!("E cos(xi X), xi = {xi}: {:.5} +/- {:.1e}, exact {:.5}", e.mean, e.stderr, (-f64::powf(xi, 1.5)).exp());
    }
    Ok(())
}
