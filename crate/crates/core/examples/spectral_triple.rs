// Principal eigenvalue, eigenfunctions and spectral gap of zoo models.

use qsd_lab::models::ModelId;
use qsd_lab::spectral::{generator_residuals, principal_triple};

fn main() -> qsd_lab::Result<()> {
    for id in ["swap2", "birthdeath(20)", "box(2,5)", "frac(1,0,2,logpower)"] {
        let model = id.parse::<ModelId>()?.build()?;
        let spec = principal_triple(&model)?;
        let (right, left) = generator_residuals(&model, &spec);
        println!(
            "{id:24} n = {:4}  lambda0 = {:.6}  gap = {:.6}  residuals {right:.1e} / {left:.1e}",
            model.len(),
            spec.lambda0,
            spec.gap
        );
    }
    let model = "swap2".parse::<ModelId>()?.build()?;
    print!("{}", principal_triple(&model)?.to_text(model.space()));
    Ok(())
}
