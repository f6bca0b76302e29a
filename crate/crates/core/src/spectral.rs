//! Principal eigentriple `(λ₀, φ₀, ψ₀)`, the overlap `Λ = Σ φ₀ ψ₀ μ`, and
//! the spectral gap of `-G` for possibly non-self-adjoint generators.
//!
//! `ψ₀` is the eigenfunction of the `L²(μ)` adjoint, so `μ ψ₀` (not `ψ₀`)
//! is the plain left eigenvector of the generator matrix. The two
//! conventions differ by the similarity `diag(μ)`.

use std::fmt::Write as _;

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{KernelOperator, MarkovModel};
use crate::statespace::StateSpace;

/// Eigenvalues closer than this to `λ₀` make it non-simple.
pub const SIMPLICITY_TOL: f64 = 1e-10;
/// Relative size of negative entries tolerated before sign-fixing fails.
const SIGN_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub lambda0: f64,
    pub phi0: Vec<f64>,
    pub psi0: Vec<f64>,
    /// `Λ = Σ φ₀ ψ₀ μ`
    pub overlap: f64,
    /// `γ = min{ℜz : z ∈ spec(-G), z ≠ λ₀} - λ₀`
    pub gap: f64,
    /// Spectrum of `-G`, sorted by real part.
    pub spectrum: Vec<Complex<f64>>,
}

impl SpectralData {
    /// `Σ φ₀ μ`
    pub fn phi0_l1(&self, mu: &[f64]) -> f64 {
        self.phi0.iter().zip(mu).map(|(a, m)| a * m).sum()
    }

    /// `Σ ψ₀ μ`
    pub fn psi0_l1(&self, mu: &[f64]) -> f64 {
        self.psi0.iter().zip(mu).map(|(a, m)| a * m).sum()
    }

    /// Text record: `lambda0`, `gap`, `Lambda`, then `id phi0 psi0` rows.
    pub fn to_text(&self, space: &StateSpace) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "lambda0 {:.17e}", self.lambda0);
        let _ = writeln!(out, "gap {:.17e}", self.gap);
        let _ = writeln!(out, "Lambda {:.17e}", self.overlap);
        let _ = writeln!(out, "# id phi0 psi0");
        for (i, id) in space.ids().iter().enumerate() {
            let _ = writeln!(out, "{id} {:.17e} {:.17e}", self.phi0[i], self.psi0[i]);
        }
        out
    }
}

fn normalize_l2(v: &mut [f64], mu: &[f64]) {
    let norm = v.iter().zip(mu).map(|(a, m)| a * a * m).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
}

/// Flips the sign so the vector is positive; fails on genuinely mixed signs.
fn fix_sign(mut v: Vec<f64>) -> Result<Vec<f64>> {
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|a| *a = -*a);
    }
    let max = v.iter().copied().fold(0.0, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -SIGN_TOL * max {
        return Err(Error::Positivity { min_entry: min / max });
    }
    Ok(v)
}

/// Power steps with `exp(τG)` (or its transpose), which is entrywise
/// positive and computed to componentwise accuracy; this resolves tails of
/// the ground state far below the eigensolver's absolute accuracy.
fn refine_tails(
    generator: &DMatrix<f64>,
    tau: f64,
    phi: &mut [f64],
    left: Option<&mut [f64]>,
) -> Result<()> {
    let m = linalg::expm_metzler(generator, tau)?;
    let iterate = |v: &mut [f64], transpose: bool| {
        for _ in 0..200 {
            let x = DVector::from_column_slice(v);
            let mut w = if transpose { m.tr_mul(&x) } else { &m * &x };
            let norm = w.norm();
            w /= norm;
            let change = w
                .iter()
                .zip(v.iter())
                .map(|(a, b)| ((a - b) / a.abs().max(f64::MIN_POSITIVE)).abs())
                .fold(0.0, f64::max);
            v.copy_from_slice(w.as_slice());
            if change < 1e-13 {
                break;
            }
        }
    };
    let clamp = |v: &mut [f64]| v.iter_mut().for_each(|a| *a = a.max(0.0));
    clamp(phi);
    iterate(phi, false);
    if let Some(l) = left {
        clamp(l);
        iterate(l, true);
    }
    Ok(())
}

fn needs_refinement(v: &[f64]) -> bool {
    let max = v.iter().copied().fold(0.0, f64::max);
    v.iter().any(|a| *a < 1e-6 * max)
}

/// Computes `(λ₀, φ₀, ψ₀, Λ, γ)` by a full dense eigendecomposition of `-G`.
pub fn principal_triple(model: &MarkovModel) -> Result<SpectralData> {
    if !model.is_irreducible() {
        return Err(Error::Model("jump kernel is reducible".into()));
    }
    let n = model.len();
    let mu = model.space().mu().to_vec();
    let g = model.generator();
    let a = -&g;

    let (lambda0, spectrum, mut phi, mut psi) = if model.is_reversible() {
        let sq: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();
        let mut s = DMatrix::from_fn(n, n, |i, j| sq[i] * a[(i, j)] / sq[j]);
        s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(s, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let lambda0 = eig.eigenvalues[order[0]];
        let spectrum: Vec<Complex<f64>> =
            order.iter().map(|&i| Complex::new(eig.eigenvalues[i], 0.0)).collect();
        let v = eig.eigenvectors.column(order[0]);
        let phi: Vec<f64> = (0..n).map(|i| v[i] / sq[i]).collect();
        let phi = fix_sign(phi)?;
        (lambda0, spectrum, phi.clone(), phi)
    } else {
        let schur = Schur::try_new(a.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
        let mut spectrum: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
        spectrum.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.abs().total_cmp(&y.im.abs())));
        let lambda0 = spectrum[0].re;
        let phi = linalg::inverse_iteration(&a, lambda0)?;
        let left = linalg::inverse_iteration(&a.transpose(), lambda0)?;
        let phi = fix_sign(phi.iter().copied().collect())?;
        let left = fix_sign(left.iter().copied().collect())?;
        let psi: Vec<f64> = left.iter().zip(&mu).map(|(l, m)| l / m).collect();
        (lambda0, spectrum, phi, psi)
    };

    if n > 1 {
        let separation = spectrum[1..]
            .iter()
            .map(|z| (z - Complex::new(lambda0, 0.0)).norm())
            .fold(f64::INFINITY, f64::min);
        if separation < SIMPLICITY_TOL {
            return Err(Error::Nondegeneracy { separation });
        }
    }
    let gap = if n > 1 { spectrum[1].re - lambda0 } else { f64::INFINITY };

    if needs_refinement(&phi) || needs_refinement(&psi) {
        let tau = if gap.is_finite() { (1.0 / gap).clamp(0.25, 4.0) } else { 1.0 };
        if model.is_reversible() {
            refine_tails(&g, tau, &mut phi, None)?;
            psi = phi.clone();
        } else {
            let mut left: Vec<f64> = psi.iter().zip(&mu).map(|(p, m)| p * m).collect();
            refine_tails(&g, tau, &mut phi, Some(&mut left))?;
            psi = left.iter().zip(&mu).map(|(l, m)| l / m).collect();
        }
    }
    normalize_l2(&mut phi, &mu);
    normalize_l2(&mut psi, &mu);
    if let Some(min) = phi.iter().chain(&psi).copied().reduce(f64::min) {
        if !(min > 0.0) {
            return Err(Error::Positivity { min_entry: min });
        }
    }
    let overlap = phi.iter().zip(&psi).zip(&mu).map(|((a, b), m)| a * b * m).sum();
    Ok(SpectralData { lambda0, phi0: phi, psi0: psi, overlap, gap, spectrum })
}

/// `‖Gφ₀ + λ₀φ₀‖∞` and `‖G*ψ₀ + λ₀ψ₀‖∞` where `G*` is the `L²(μ)` adjoint.
pub fn generator_residuals(model: &MarkovModel, spec: &SpectralData) -> (f64, f64) {
    let g = model.generator();
    let mu = model.space().mu();
    let phi = DVector::from_column_slice(&spec.phi0);
    let right = (&g * &phi + &phi * spec.lambda0).amax();
    let weighted = DVector::from_iterator(mu.len(), spec.psi0.iter().zip(mu).map(|(p, m)| p * m));
    let left = g.tr_mul(&weighted) + &weighted * spec.lambda0;
    let left = left.iter().zip(mu).map(|(l, m)| (l / m).abs()).fold(0.0, f64::max);
    (right, left)
}

/// `(‖U_tφ₀ - e^{-λ₀t}φ₀‖∞, ‖U*_tψ₀ - e^{-λ₀t}ψ₀‖∞)`
pub fn eigen_residuals(spec: &SpectralData, op: &KernelOperator) -> (f64, f64) {
    let decay = (-spec.lambda0 * op.t()).exp();
    let sup = |image: Vec<f64>, f: &[f64]| {
        image.iter().zip(f).map(|(a, b)| (a - decay * b).abs()).fold(0.0, f64::max)
    };
    (sup(op.apply(&spec.phi0), &spec.phi0), sup(op.apply_adjoint(&spec.psi0), &spec.psi0))
}

/// Dominant eigenvalue of a nonnegative matrix together with its normalized
/// nonnegative left eigenvector, and the distance to the nearest other
/// eigenvalue of the same or larger modulus class.
#[derive(Clone, Debug)]
pub struct DominantLeft {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `|ρ| - max{|z| : z ≠ ρ}` (0 or less when the dominant eigenvalue is
    /// not simple).
    pub separation: f64,
}

pub fn dominant_left(p: &DMatrix<f64>) -> Result<DominantLeft> {
    let n = p.nrows();
    let schur = Schur::try_new(p.transpose(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let mut eig: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let value = eig[0].re;
    let separation = if n > 1 { eig[0].norm() - eig[1].norm() } else { f64::INFINITY };
    let raw = if separation > SIMPLICITY_TOL * value.abs().max(1.0) {
        linalg::inverse_iteration(&p.transpose(), value)?
    } else {
        // Degenerate: any nonnegative vector of the dominant eigenspace will
        // do; power iteration from the uniform vector lands in it.
        let mut v = DVector::from_element(n, 1.0 / n as f64);
        for _ in 0..2000 {
            let mut w = p.tr_mul(&v);
            w /= w.sum();
            v = w;
        }
        v
    };
    let mut vector: Vec<f64> = raw.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = vector.iter().sum();
    vector.iter_mut().for_each(|x| *x /= total);
    Ok(DominantLeft { value, vector, separation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{feynman_kac_operator, FkMethod, KernelOperator};
    use crate::statespace::StateSpace;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn swap(v: [f64; 2], mu: [f64; 2]) -> MarkovModel {
        let ids = vec!["a".to_string(), "b".to_string()];
        let space = Arc::new(StateSpace::new(ids, Some(vec![vec![0.0], vec![1.0]]), mu.to_vec()).unwrap());
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        MarkovModel::new(space, q, v.to_vec()).unwrap()
    }

    #[test]
    fn swap_triple() {
        let s = principal_triple(&swap([0.0, 0.0], [1.0, 1.0])).unwrap();
        assert!(s.lambda0.abs() < 1e-14);
        assert_relative_eq!(s.gap, 2.0, max_relative = 1e-13);
        let c = 0.5f64.sqrt();
        for i in 0..2 {
            assert_relative_eq!(s.phi0[i], c, max_relative = 1e-13);
            assert_relative_eq!(s.psi0[i], c, max_relative = 1e-13);
        }
        assert_relative_eq!(s.overlap, 1.0, max_relative = 1e-13);
    }

    #[test]
    fn swap_with_potential_by_hand() {
        // -G = [[1, -1], [-1, 1 + v]]: λ = 1 + v/2 ∓ sqrt(1 + v²/4).
        let v: f64 = 1.0;
        let s = principal_triple(&swap([0.0, v], [1.0, 1.0])).unwrap();
        let root = (1.0 + v * v / 4.0).sqrt();
        assert_relative_eq!(s.lambda0, 1.0 + v / 2.0 - root, max_relative = 1e-13);
        assert_relative_eq!(s.gap, 2.0 * root, max_relative = 1e-13);
        // Eigenvector (1, 1 - λ₀).
        assert_relative_eq!(s.phi0[1] / s.phi0[0], 1.0 - s.lambda0, max_relative = 1e-12);
        let op = feynman_kac_operator(&swap([0.0, v], [1.0, 1.0]), 1.0, FkMethod::ExactExponential).unwrap();
        let (r, l) = eigen_residuals(&s, &op);
        assert!(r <= 1e-10 && l <= 1e-10);
        let (gr, gl) = generator_residuals(&swap([0.0, v], [1.0, 1.0]), &s);
        assert!(gr <= 1e-9 && gl <= 1e-9);
    }

    #[test]
    fn identity_limit_has_zero_residual() {
        let m = swap([0.3, 1.0], [1.0, 2.0]);
        let s = principal_triple(&m).unwrap();
        let (r, l) = eigen_residuals(&s, &KernelOperator::identity(m.space().clone()));
        assert!(r < 1e-15 && l < 1e-15);
    }

    #[test]
    fn non_self_adjoint_pair() {
        // μ = (1, 2) is not invariant for the swap, so φ₀ ≠ ψ₀.
        let m = swap([0.3, 1.0], [1.0, 2.0]);
        let s = principal_triple(&m).unwrap();
        let (gr, gl) = generator_residuals(&m, &s);
        assert!(gr < 1e-12 && gl < 1e-12, "{gr} {gl}");
        assert!(s.overlap > 0.0 && s.overlap < 1.0);
        let op = feynman_kac_operator(&m, 0.7, FkMethod::ExactExponential).unwrap();
        let (r, l) = eigen_residuals(&s, &op);
        assert!(r < 1e-12 && l < 1e-12);
    }

    #[test]
    fn reducible_is_rejected_and_degenerate_detected() {
        let space = Arc::new(StateSpace::path(2).unwrap());
        let m = MarkovModel::new(space, DMatrix::identity(2, 2), vec![0.0, 0.0]).unwrap();
        assert!(matches!(principal_triple(&m), Err(Error::Model(_))));
        let d = dominant_left(&DMatrix::identity(2, 2)).unwrap();
        assert!(d.separation <= SIMPLICITY_TOL);
    }

    #[test]
    fn text_record() {
        let m = swap([0.0, 0.0], [1.0, 1.0]);
        let s = principal_triple(&m).unwrap();
        let txt = s.to_text(m.space());
        assert!(txt.starts_with("lambda0 "));
        assert_eq!(txt.lines().count(), 6);
    }
}
