//! Dense matrix kernels shared by the operator and spectral modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring around the diagonal [13/13]
/// Padé approximant.
pub fn expm_pade(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let norm = norm1(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Numerical("singular Padé denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Exponential `exp(tA)` of a Metzler matrix (nonnegative off-diagonal), as
/// produced by a sub-Markov generator.
///
/// The diagonal is shifted so that `t 2^{-s} (A + cI)` is entrywise
/// nonnegative with 1-norm at most 1/2; its Taylor series then has only
/// nonnegative terms and is summed until every entry has converged to
/// relative precision. Squaring nonnegative matrices preserves componentwise
/// relative accuracy, so tiny entries are resolved, not just large ones, and
/// the result is never negative.
pub fn expm_metzler(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Numerical("expm of a non-square matrix".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] < 0.0 {
                return Err(Error::Numerical(format!(
                    "negative off-diagonal entry at ({i}, {j})"
                )));
            }
        }
    }
    if t == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let shift = (0..n).map(|i| -a[(i, i)]).fold(0.0, f64::max);
    let mut b = a.clone();
    for i in 0..n {
        b[(i, i)] += shift;
    }
    let norm = norm1(&b) * t;
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let tau = t * 2f64.powi(-s);
    b *= tau;
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=60 {
        term = &term * &b / k as f64;
        sum += &term;
        let converged = term
            .iter()
            .zip(sum.iter())
            .all(|(t, s)| *t <= f64::EPSILON * 0.25 * s || *t < 1e-300);
        if converged {
            break;
        }
    }
    sum *= (-shift * tau).exp();
    for _ in 0..s {
        sum = &sum * &sum;
    }
    Ok(sum)
}

/// True when every state reaches every other through positive entries.
pub fn is_irreducible(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { a[(i, j)] } else { a[(j, i)] };
                if !seen[j] && w > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n <= 1 || (reach(true) && reach(false))
}

/// Eigenvector of `a` for the real eigenvalue `lambda` by shifted inverse
/// iteration. Returned with unit Euclidean norm and nonnegative sum.
pub fn inverse_iteration(a: &DMatrix<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = a.nrows();
    let scale = norm1(a).max(1.0);
    let mut shifted = a.clone();
    let delta = scale * 1e-10;
    for i in 0..n {
        shifted[(i, i)] -= lambda + delta;
    }
    let lu = shifted.lu();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    for _ in 0..8 {
        let mut w = lu
            .solve(&v)
            .ok_or_else(|| Error::Numerical("inverse iteration hit a singular shift".into()))?;
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Numerical("inverse iteration diverged".into()));
        }
        w /= norm;
        if w.sum() < 0.0 {
            w.neg_mut();
        }
        let change = (&w - &v).amax();
        v = w;
        if change < 1e-15 {
            break;
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn swap_generator(v: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0 - v])
    }

    #[test]
    fn scalar_exponentials() {
        let a = DMatrix::from_element(1, 1, -3.0);
        assert_relative_eq!(expm_pade(&(&a * 2.0)).unwrap()[(0, 0)], (-6f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(expm_metzler(&a, 2.0).unwrap()[(0, 0)], (-6f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn swap_closed_form() {
        // exp(t(Q - I)) for the swap has diagonal (1 + e^{-2t}) / 2.
        for t in [0.1f64, 1.0, 7.5] {
            let want = 0.5 * (1.0 + (-2.0 * t).exp());
            let m = expm_metzler(&swap_generator(0.0), t).unwrap();
            let p = expm_pade(&(swap_generator(0.0) * t)).unwrap();
            assert_relative_eq!(m[(0, 0)], want, max_relative = 1e-14);
            assert_relative_eq!(p[(0, 0)], want, max_relative = 1e-13);
        }
    }

    #[test]
    fn metzler_resolves_tiny_entries() {
        // Uniform killing at rate 50 over t = 10: entries near e^{-500}.
        let mut a = swap_generator(0.0) * 1e-3;
        a[(0, 0)] -= 50.0;
        a[(1, 1)] -= 50.0;
        let m = expm_metzler(&a, 10.0).unwrap();
        let want = (-500.0f64).exp() * 0.5 * (1.0 + (-2e-3 * 10.0f64).exp());
        assert!(want > 0.0);
        assert_relative_eq!(m[(0, 0)], want, max_relative = 1e-12);
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&swap_generator(0.0)));
        assert!(!is_irreducible(&DMatrix::<f64>::identity(2, 2)));
    }

    #[test]
    fn inverse_iteration_finds_perron_vector() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let v = inverse_iteration(&a, 3.0).unwrap();
        assert_relative_eq!(v[0], v[1], max_relative = 1e-12);
        assert!(v[0] > 0.0);
    }
}
