// Progressive quasi-ergodic error on growing balls against the rate kappa_b.

use std::sync::Arc;

use qsd_lab::diagnostics::{progressive_quasi_ergodic_error, KappaRate};
use qsd_lab::models::ModelId;
use qsd_lab::operators::{feynman_kac_operator, FkMethod};
use qsd_lab::spectral::principal_triple;
use qsd_lab::statespace::{ExhaustingFamily, RadiusFn};

fn main() -> qsd_lab::Result<()> {
    let model = "frac(1,0,0.5,logpower)".parse::<ModelId>()?.build()?;
    let spec = principal_triple(&model)?;
    let radius = RadiusFn::Custom(Arc::new(|t: f64| (t / 4.0).powi(2).exp()));
    let family = ExhaustingFamily::new(model.len() / 2, radius, 0.0);
    let kappa = KappaRate::new(&model, family.clone(), spec.gap, 1.0)?;
    println!("{:>4} {:>12} {:>12} {:>10}", "t", "error", "kappa", "ratio");
    for t in (2..=16).step_by(2).map(f64::from) {
        let op = feynman_kac_operator(&model, t, FkMethod::ExactExponential)?;
        let err = progressive_quasi_ergodic_error(&op, &spec, &family, 1.0 / 3.0, f64::INFINITY)?;
        let k = kappa.eval(model.space(), 1.0 / 3.0, t)?;
        println!("{t:4} {err:12.4e} {k:12.4e} {:10.4}", err / k);
    }
    Ok(())
}
