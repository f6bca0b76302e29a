// Regime classification of fractional models and the growth of the GSD
// profile when the window is doubled.

use qsd_lab::diagnostics::gsd_profile;
use qsd_lab::models::*;
use qsd_lab::operators::{feynman_kac_operator, FkMethod};
use qsd_lab::spectral::principal_triple;

fn profile_sup(levy: &LevyProfile, v: &PotentialSpec, half_width: f64) -> qsd_lab::Result<f64> {
    let model = build_fractional_model(&Lattice::new(0.5, half_width), levy, v)?;
    let spec = principal_triple(&model)?;
    let op = feynman_kac_operator(&model, 4.0, FkMethod::ExactExponential)?;
    Ok(gsd_profile(&op, &spec).into_iter().fold(0.0, f64::max))
}

fn main() -> qsd_lab::Result<()> {
    let poly = LevyProfile::polynomial(1.0, 0.0);
    let expo = LevyProfile::exponential(1.0, 1.5, 1.0);
    let cells = [
        (&poly, PotentialSpec::log_power(2.0)),
        (&poly, PotentialSpec::log_power(0.5)),
        (&expo, PotentialSpec::power(1.0)),
        (&expo, PotentialSpec::power(0.5)),
    ];
    for (levy, v) in cells {
        let regime = regime_classifier(levy, &v)?;
        let growth = profile_sup(levy, &v, 80.0)? / profile_sup(levy, &v, 40.0)?;
        println!("{levy:?} {v:?}\n    {regime}, window growth {growth:.3e}");
    }
    Ok(())
}
