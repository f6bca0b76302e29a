// Quasi-stationary measures by power iteration and from the spectral triple,
// and the warning raised by a reducible chain.

use nalgebra::DMatrix;
use qsd_lab::diagnostics::{find_qsd, qsd_from_spectral, qsd_residual};
use qsd_lab::models::{build_ctmc_model_unchecked, KernelRecipe, ModelId, PotentialSpec};
use qsd_lab::operators::{feynman_kac_operator, FkMethod};
use qsd_lab::spectral::principal_triple;

fn main() -> qsd_lab::Result<()> {
    let model = "birthdeath(20)".parse::<ModelId>()?.build()?;
    let spec = principal_triple(&model)?;
    let op = feynman_kac_operator(&model, 1.0, FkMethod::ExactExponential)?;
    let exact = qsd_from_spectral(&spec, model.space().mu(), false);
    let found = find_qsd(&op, 1e-10)?;
    println!("distance to psi0 mu: {:.2e}", found.measure.total_variation(&exact));
    println!("invariance residual: {:.2e}", qsd_residual(&exact, &op)?);

    let mut q = DMatrix::zeros(4, 4);
    for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
        q[(i, j)] = 1.0;
    }
    let split = build_ctmc_model_unchecked(&KernelRecipe::User(q), None, &PotentialSpec::constant(0.5))?;
    let op = feynman_kac_operator(&split, 1.0, FkMethod::ExactExponential)?;
    if let Some(w) = find_qsd(&op, 1e-10)?.warning {
        println!("{w}");
    }
    Ok(())
}
