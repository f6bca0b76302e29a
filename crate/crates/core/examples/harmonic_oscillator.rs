// Mehler kernel of the harmonic oscillator on a grid, checked against its
// semigroup and eigenfunction identities, plus the pGSD radius.

use qsd_lab::diagnostics::{ho_pgsd_holds, ho_pgsd_radius};
use qsd_lab::models::{build_ho_discretization, Lattice};
use qsd_lab::operators::{compose, ho_ground_state, ho_survival};

fn main() -> qsd_lab::Result<()> {
    let grid = Lattice::new(0.05, 8.0);
    let half = build_ho_discretization(&grid, 0.5)?;
    let one = build_ho_discretization(&grid, 1.0)?;
    println!("Chapman-Kolmogorov defect: {:.2e}", compose(&half, &half)?.max_abs_diff(&one));

    let phi: Vec<f64> = grid.points().iter().map(|x| ho_ground_state(&[*x])).collect();
    let image = one.apply(&phi);
    let defect = image.iter().zip(&phi).map(|(a, b)| (a - (-1.0f64).exp() * b).abs()).fold(0.0, f64::max);
    println!("U_1 phi0 - e^-1 phi0: {defect:.2e}");

    for x in [0.0, 1.0, 3.0] {
        println!("U_1 1({x}) = {:.6}", ho_survival(1.0, &[x])?);
    }

    for (t, c) in [(0.5, 2.0), (1.0, 5.0), (4.0, 2.0)] {
        match ho_pgsd_radius(t, c, 1)? {
            Some(r) => println!("t = {t}, C = {c}: radius {r:.6} (holds just inside: {})", ho_pgsd_holds(t, c, 1, 0.999 * r)?),
            None => println!("t = {t}, C = {c}: empty set"),
        }
    }
    Ok(())
}
