// Kernel, quasi-ergodic and heat content errors decay at the spectral gap.

use qsd_lab::diagnostics::*;
use qsd_lab::models::ModelId;
use qsd_lab::operators::{feynman_kac_operator, FkMethod};
use qsd_lab::spectral::principal_triple;

fn main() -> qsd_lab::Result<()> {
    let model = "birthdeath(20)".parse::<ModelId>()?.build()?;
    let spec = principal_triple(&model)?;
    let sigma = QuasiStationaryMeasure::point_mass(model.len(), 12).weights;
    let mut kernel = DiagnosticSeries::new("kernel_convergence");
    let mut qe = DiagnosticSeries::new("quasi_ergodic");
    let mut heat = DiagnosticSeries::new("heat_content_asymptotics");
    for i in 0..=12 {
        let t = (3.0 + 0.25 * i as f64) / spec.gap;
        let op = feynman_kac_operator(&model, t, FkMethod::ExactExponential)?;
        kernel.push(t, kernel_convergence_error(&op, &spec))?;
        qe.push(t, quasi_ergodic_error(&op, &spec, &sigma, f64::INFINITY)?)?;
        heat.push(t, heat_content_asymptotic_error(&op, &spec))?;
    }
    println!("spectral gap {:.5}", spec.gap);
    for s in [&kernel, &qe, &heat] {
        let fit = fit_exponential_rate_above(s, 1.0, FIT_FLOOR)?;
        println!("{:26} rate {:.5}  r^2 {:.6}", s.name, -fit.rate, fit.r_squared);
    }
    Ok(())
}
