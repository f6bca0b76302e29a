//! Kernel operators `U_t` on a finite state space: uniformized Markov
//! transitions, Feynman–Kac exponentials, and the closed-form
//! harmonic-oscillator (Mehler) kernel.
//!
//! Densities are stored with respect to the reference measure, so the
//! transition weight from `x` to `y` is `u[x][y] * μ(y)`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::linalg;
use crate::statespace::StateSpace;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Generator data `(Q, Q̂, V)` of a Feynman–Kac semigroup with generator
/// `G = r (Q - I) - diag(V)`, where `r` is the total jump rate.
#[derive(Clone, Debug)]
pub struct MarkovModel {
    space: Arc<StateSpace>,
    q: DMatrix<f64>,
    q_dual: DMatrix<f64>,
    v: Vec<f64>,
    jump_rate: f64,
}

impl MarkovModel {
    /// Unit jump rate.
    pub fn new(space: Arc<StateSpace>, q: DMatrix<f64>, v: Vec<f64>) -> Result<Self> {
        Self::with_rate(space, q, v, 1.0)
    }

    pub fn with_rate(
        space: Arc<StateSpace>,
        q: DMatrix<f64>,
        v: Vec<f64>,
        jump_rate: f64,
    ) -> Result<Self> {
        let n = space.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::Model(format!("jump matrix must be {n}x{n}")));
        }
        if v.len() != n {
            return Err(Error::Model(format!("potential has {} entries for {n} states", v.len())));
        }
        if !(jump_rate > 0.0 && jump_rate.is_finite()) {
            return Err(Error::Model("jump rate must be positive and finite".into()));
        }
        if let Some(x) = v.iter().position(|p| !p.is_finite()) {
            return Err(Error::Model(format!("potential is not finite at state {x}")));
        }
        for i in 0..n {
            let row = q.row(i);
            if row.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::Model(format!("row {i} of Q has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Model(format!("row {i} of Q sums to {sum}")));
            }
        }
        let mu = space.mu();
        let q_dual = DMatrix::from_fn(n, n, |y, x| mu[x] * q[(x, y)] / mu[y]);
        Ok(Self { space, q, q_dual, v, jump_rate })
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Dual kernel `Q̂(y, x) = μ(x) Q(x, y) / μ(y)`.
    pub fn q_dual(&self) -> &DMatrix<f64> {
        &self.q_dual
    }

    pub fn potential(&self) -> &[f64] {
        &self.v
    }

    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }

    /// `‖V₋‖∞`
    pub fn negative_part_sup(&self) -> f64 {
        self.v.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max)
    }

    pub fn is_irreducible(&self) -> bool {
        linalg::is_irreducible(&self.q)
    }

    /// Whether `μ(x) Q(x,y) = μ(y) Q(y,x)`, in which case every `U_t` is
    /// self-adjoint in `L²(μ)`.
    pub fn is_reversible(&self) -> bool {
        let n = self.len();
        let mu = self.space.mu();
        (0..n).all(|x| {
            (0..x).all(|y| {
                let a = mu[x] * self.q[(x, y)];
                let b = mu[y] * self.q[(y, x)];
                (a - b).abs() <= 1e-13 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
            })
        })
    }

    /// Largest entrywise violation of `μ(x)Q(x,y) = μ(y)Q̂(y,x)`.
    pub fn duality_defect(&self) -> f64 {
        let n = self.len();
        let mu = self.space.mu();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                worst = worst.max((mu[x] * self.q[(x, y)] - mu[y] * self.q_dual[(y, x)]).abs());
            }
        }
        worst
    }

    /// Model driven by `Q̂` with the same potential; its operators are the
    /// `L²(μ)` adjoints of this model's.
    ///
    /// `Q̂` is stochastic only when `μ` is `Q`-invariant. Otherwise the row
    /// defect `1 - Σ_x Q̂(y, x)` moves into the potential and the jump rate is
    /// raised so the rescaled kernel stays stochastic; the generator is
    /// exactly `r(Q̂ - I) - diag(V)` either way.
    pub fn dual(&self) -> Result<Self> {
        let n = self.len();
        let r = self.jump_rate;
        let sums: Vec<f64> = (0..n).map(|y| self.q_dual.row(y).sum()).collect();
        let r_dual = r * sums.iter().copied().fold(1.0, f64::max);
        let mut q = &self.q_dual * (r / r_dual);
        let mut v = self.v.clone();
        for y in 0..n {
            let loop_mass = 1.0 - q.row(y).sum();
            q[(y, y)] += loop_mass.max(0.0);
            v[y] += r * (1.0 - sums[y]);
        }
        Self::with_rate(self.space.clone(), q, v, r_dual)
    }

    /// Generator matrix `G = r(Q - I) - diag(V)` acting on functions.
    pub fn generator(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut g = &self.q * self.jump_rate;
        for i in 0..n {
            g[(i, i)] -= self.jump_rate + self.v[i];
        }
        g
    }

    /// Copy with a different potential.
    pub fn with_potential(&self, v: Vec<f64>) -> Result<Self> {
        Self::with_rate(self.space.clone(), self.q.clone(), v, self.jump_rate)
    }
}

/// How an operator was computed.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Identity,
    /// Poisson series truncated after `terms` powers of `Q`.
    Uniformized { terms: usize, tail_bound: f64 },
    ExactExponential,
    Trotter { steps: usize },
    Composed,
    Adjoint,
    ClosedForm,
    Loaded,
}

/// Computational form of `U_t`: the kernel density `u_t(x, y)` w.r.t. `μ`.
#[derive(Clone, Debug)]
pub struct KernelOperator {
    t: f64,
    density: DMatrix<f64>,
    space: Arc<StateSpace>,
    provenance: Provenance,
}

impl KernelOperator {
    pub fn from_density(
        t: f64,
        density: DMatrix<f64>,
        space: Arc<StateSpace>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = space.len();
        if density.nrows() != n || density.ncols() != n {
            return Err(domain(format!("density must be {n}x{n}")));
        }
        if !(t >= 0.0) {
            return Err(domain("operator time must be nonnegative"));
        }
        Ok(Self { t, density, space, provenance })
    }

    /// Operator built from transition weights `P(x, y)`; divides by `μ(y)`.
    pub fn from_transition(
        t: f64,
        transition: DMatrix<f64>,
        space: Arc<StateSpace>,
        provenance: Provenance,
    ) -> Result<Self> {
        let mu = space.mu().to_vec();
        let mut density = transition;
        for (j, mut col) in density.column_iter_mut().enumerate() {
            col /= mu[j];
        }
        Self::from_density(t, density, space, provenance)
    }

    /// The `t → 0` limit: density `δ(x, y) / μ(y)`.
    pub fn identity(space: Arc<StateSpace>) -> Self {
        let n = space.len();
        let density = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / space.mu()[j] } else { 0.0 });
        Self { t: 0.0, density, space, provenance: Provenance::Identity }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn density(&self) -> &DMatrix<f64> {
        &self.density
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Transition weights `P(x, y) = u(x, y) μ(y)`.
    pub fn transition(&self) -> DMatrix<f64> {
        let mu = self.space.mu();
        let mut p = self.density.clone();
        for (j, mut col) in p.column_iter_mut().enumerate() {
            col *= mu[j];
        }
        p
    }

    /// `(U_t f)(x) = Σ_y u(x, y) f(y) μ(y)`
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mu = self.space.mu();
        let weighted = DVector::from_iterator(f.len(), f.iter().zip(mu).map(|(a, m)| a * m));
        (&self.density * weighted).iter().copied().collect()
    }

    /// `(U*_t g)(y) = Σ_x u(x, y) g(x) μ(x)`
    pub fn apply_adjoint(&self, g: &[f64]) -> Vec<f64> {
        let mu = self.space.mu();
        let weighted = DVector::from_iterator(g.len(), g.iter().zip(mu).map(|(a, m)| a * m));
        (self.density.tr_mul(&weighted)).iter().copied().collect()
    }

    /// `U_t 1`
    pub fn survival(&self) -> Vec<f64> {
        self.apply(&vec![1.0; self.len()])
    }

    /// `U*_t 1`
    pub fn adjoint_survival(&self) -> Vec<f64> {
        self.apply_adjoint(&vec![1.0; self.len()])
    }

    /// Strictly positive density everywhere (positivity improving).
    pub fn is_positivity_improving(&self) -> bool {
        self.density.iter().all(|u| *u > 0.0)
    }

    pub fn max_abs_diff(&self, other: &KernelOperator) -> f64 {
        (&self.density - &other.density).amax()
    }

    /// Text form: a header line `t n`, then `n` rows of the density.
    pub fn to_text(&self) -> String {
        let n = self.len();
        let mut out = format!("{:e} {}\n", self.t, n);
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:e}", self.density[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    /// Parses the output of [`KernelOperator::to_text`] against `space`.
    pub fn from_text(text: &str, space: Arc<StateSpace>) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let bad = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.into() };
        if head.len() != 2 {
            return Err(bad(0, "header must be `t n`"));
        }
        let t: f64 = head[0].parse().map_err(|_| bad(0, "bad time"))?;
        let n: usize = head[1].parse().map_err(|_| bad(0, "bad size"))?;
        if n != space.len() {
            return Err(bad(0, "size does not match the state space"));
        }
        let mut data = Vec::with_capacity(n * n);
        for (k, (lineno, line)) in lines.enumerate() {
            if k >= n {
                return Err(bad(lineno, "too many rows"));
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse::<f64>).collect();
            let row = row.map_err(|_| bad(lineno, "bad number"))?;
            if row.len() != n {
                return Err(bad(lineno, "wrong row length"));
            }
            data.extend(row);
        }
        if data.len() != n * n {
            return Err(bad(n, "too few rows"));
        }
        Self::from_density(t, DMatrix::from_row_slice(n, n, &data), space, Provenance::Loaded)
    }
}

/// Number of Poisson(`mean`) terms needed for the neglected tail mass to
/// drop below `eps`, and the Poisson weights themselves.
fn poisson_weights(mean: f64, eps: f64) -> (Vec<f64>, f64) {
    let mut weights = Vec::new();
    let mut cumulative = 0.0;
    let mut n = 0usize;
    loop {
        let logw = -mean + n as f64 * mean.max(f64::MIN_POSITIVE).ln() - ln_gamma(n as f64 + 1.0);
        let w = if mean == 0.0 {
            if n == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            logw.exp()
        };
        weights.push(w);
        cumulative += w;
        let tail = (1.0 - cumulative).max(0.0);
        // Past the mode the tail is bounded by w * mean / (n + 1 - mean) / (1 - ...);
        // the cumulative sum is accurate enough at the tolerances used here.
        if (n as f64 > mean && tail < eps) || n > 100_000 {
            return (weights, tail);
        }
        n += 1;
    }
}

/// `P_t = Σ_n Poisson(r t; n) Qⁿ` truncated once the Poisson tail is below
/// `eps`. The potential is ignored.
pub fn uniformized_transition(model: &MarkovModel, t: f64, eps: f64) -> Result<KernelOperator> {
    if !(eps > 0.0) {
        return Err(domain("truncation tolerance must be positive"));
    }
    if !(t > 0.0) {
        return Err(domain("time must be positive"));
    }
    let (weights, tail) = poisson_weights(model.jump_rate() * t, eps);
    let n = model.len();
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut p = &power * weights[0];
    for w in &weights[1..] {
        power = &power * model.q();
        p += &power * *w;
    }
    KernelOperator::from_transition(
        t,
        p,
        model.space().clone(),
        Provenance::Uniformized { terms: weights.len(), tail_bound: tail },
    )
}

/// Method for [`feynman_kac_operator`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FkMethod {
    ExactExponential,
    Trotter(usize),
}

/// `U_t = exp(t G)` with density `exp(tG)(x, y) / μ(y)`.
pub fn feynman_kac_operator(model: &MarkovModel, t: f64, method: FkMethod) -> Result<KernelOperator> {
    if !(t > 0.0) {
        return Err(domain("time must be positive"));
    }
    let n = model.len();
    let (p, provenance) = match method {
        FkMethod::ExactExponential => {
            (linalg::expm_metzler(&model.generator(), t)?, Provenance::ExactExponential)
        }
        FkMethod::Trotter(steps) => {
            if steps == 0 {
                return Err(domain("Trotter splitting needs at least one step"));
            }
            let dt = t / steps as f64;
            let mut free = model.q() * model.jump_rate();
            for i in 0..n {
                free[(i, i)] -= model.jump_rate();
            }
            let mut step = linalg::expm_metzler(&free, dt)?;
            for (j, mut col) in step.column_iter_mut().enumerate() {
                col *= (-dt * model.potential()[j]).exp();
            }
            let mut acc = step.clone();
            for _ in 1..steps {
                acc = &acc * &step;
            }
            (acc, Provenance::Trotter { steps })
        }
    };
    KernelOperator::from_transition(t, p, model.space().clone(), provenance)
}

/// `L²(μ)` adjoint: transposed density.
pub fn adjoint(op: &KernelOperator) -> KernelOperator {
    KernelOperator {
        t: op.t,
        density: op.density.transpose(),
        space: op.space.clone(),
        provenance: Provenance::Adjoint,
    }
}

/// Chapman–Kolmogorov product `u_{s+t}(x,y) = Σ_z u_s(x,z) u_t(z,y) μ(z)`.
pub fn compose(first: &KernelOperator, second: &KernelOperator) -> Result<KernelOperator> {
    if !Arc::ptr_eq(&first.space, &second.space) && first.space != second.space {
        return Err(domain("cannot compose operators on different state spaces"));
    }
    let mu = first.space.mu();
    let mut left = first.density.clone();
    for (j, mut col) in left.column_iter_mut().enumerate() {
        col *= mu[j];
    }
    Ok(KernelOperator {
        t: first.t + second.t,
        density: left * &second.density,
        space: first.space.clone(),
        provenance: Provenance::Composed,
    })
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("time must be positive, got {t}")))
    }
}

/// Logarithm of the Mehler kernel of `e^{-t(-Δ + |x|²)}`.
pub fn mehler_log_kernel(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_time(t)?;
    if x.len() != y.len() {
        return Err(domain("points of different dimension"));
    }
    let d = x.len() as f64;
    let (mut plus, mut minus) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        plus += (a + b) * (a + b);
        minus += (a - b) * (a - b);
    }
    let log_sinh2 = log_sinh(2.0 * t);
    Ok(-0.5 * d * ((2.0 * PI).ln() + log_sinh2) - 0.25 * (t.tanh() * plus + minus / t.tanh()))
}

/// `(2π sinh 2t)^{-d/2} exp(-¼(tanh t |x+y|² + coth t |x-y|²))`
pub fn mehler_kernel(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(mehler_log_kernel(t, x, y)?.exp())
}

fn log_sinh(z: f64) -> f64 {
    if z > 20.0 {
        z - std::f64::consts::LN_2 + (-2.0 * z).exp().ln_1p()
    } else {
        z.sinh().ln()
    }
}

fn log_cosh(z: f64) -> f64 {
    let z = z.abs();
    z - std::f64::consts::LN_2 + (-2.0 * z).exp().ln_1p()
}

/// Logarithm of `U_t 1(x)` for the harmonic oscillator.
pub fn ho_log_survival(t: f64, x: &[f64]) -> Result<f64> {
    check_time(t)?;
    let d = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok(-0.5 * d * log_cosh(2.0 * t) - 0.5 * r2 * (2.0 * t).tanh())
}

/// `U_t 1(x) = (cosh 2t)^{-d/2} exp(-|x|² / (2 coth 2t))`
pub fn ho_survival(t: f64, x: &[f64]) -> Result<f64> {
    Ok(ho_log_survival(t, x)?.exp())
}

/// Harmonic-oscillator ground state `π^{-d/4} e^{-|x|²/2}`.
pub fn ho_ground_state(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    PI.powf(-d / 4.0) * (-0.5 * r2).exp()
}

/// Ground-state eigenvalue `λ₀ = d`.
pub fn ho_ground_energy(d: usize) -> f64 {
    d as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn swap(v: [f64; 2]) -> MarkovModel {
        let space = Arc::new(StateSpace::path(2).unwrap());
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        MarkovModel::new(space, q, v.to_vec()).unwrap()
    }

    #[test]
    fn model_invariants() {
        let space = Arc::new(StateSpace::path(2).unwrap());
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 1.0, 0.0]);
        assert!(matches!(MarkovModel::new(space.clone(), bad, vec![0.0; 2]), Err(Error::Model(_))));
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(MarkovModel::new(space, q, vec![0.0, f64::NEG_INFINITY]).is_err());
        assert_eq!(swap([0.0, 0.0]).duality_defect(), 0.0);
    }

    #[test]
    fn uniformization_examples() {
        let space = Arc::new(StateSpace::path(3).unwrap());
        let id = MarkovModel::new(space, DMatrix::identity(3, 3), vec![0.0; 3]).unwrap();
        let p = uniformized_transition(&id, 2.0, 1e-14).unwrap();
        assert!((p.transition() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-13);

        for t in [0.1, 1.0, 3.0] {
            let p = uniformized_transition(&swap([0.0, 0.0]), t, 1e-15).unwrap();
            assert_relative_eq!(p.transition()[(0, 0)], 0.5 * (1.0 + (-2.0 * t).exp()), max_relative = 1e-13);
            for row in p.transition().row_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-14);
            }
        }
        assert!(uniformized_transition(&swap([0.0, 0.0]), 1.0, 0.0).is_err());
    }

    #[test]
    fn feynman_kac_examples() {
        let m = swap([0.0, 0.0]);
        let u = feynman_kac_operator(&m, 1.3, FkMethod::ExactExponential).unwrap();
        let p = uniformized_transition(&m, 1.3, 1e-15).unwrap();
        assert!(u.max_abs_diff(&p) < 1e-10);

        let c = 0.7;
        let mc = m.with_potential(vec![c, c]).unwrap();
        let uc = feynman_kac_operator(&mc, 1.3, FkMethod::ExactExponential).unwrap();
        let scaled = p.density() * (-c * 1.3f64).exp();
        assert!((uc.density() - scaled).amax() < 1e-14);

        assert!(feynman_kac_operator(&m, 1.0, FkMethod::Trotter(0)).is_err());
    }

    #[test]
    fn swap_with_potential_matches_eigendecomposition() {
        // G = [[-1, 1], [1, -1-v]] is symmetric: eigenvalues -1 - v/2 ± sqrt(1 + v²/4),
        // with eigenvectors (1, k) where k = 1 + λ.
        let v: f64 = 0.8;
        let t: f64 = 1.7;
        let root = (1.0 + v * v / 4.0).sqrt();
        let lams = [-1.0 - v / 2.0 + root, -1.0 - v / 2.0 - root];
        let mut want = DMatrix::zeros(2, 2);
        for lam in lams {
            let e = nalgebra::Vector2::new(1.0, 1.0 + lam).normalize();
            want += e * e.transpose() * (lam * t).exp();
        }
        let u = feynman_kac_operator(&swap([0.0, v]), t, FkMethod::ExactExponential).unwrap();
        assert!((u.density() - want).amax() < 1e-14);
    }

    #[test]
    fn adjoint_and_compose() {
        let m = swap([0.2, 0.9]);
        let u = feynman_kac_operator(&m, 0.5, FkMethod::ExactExponential).unwrap();
        let twice = adjoint(&adjoint(&u));
        assert_eq!(twice.density(), u.density());
        let id = KernelOperator::identity(m.space().clone());
        assert!(compose(&id, &u).unwrap().max_abs_diff(&u) < 1e-15);
        let u1 = feynman_kac_operator(&m, 1.0, FkMethod::ExactExponential).unwrap();
        assert!(compose(&u, &u).unwrap().max_abs_diff(&u1) < 1e-13);

        let other = Arc::new(StateSpace::path(2).unwrap().scaled(2.0).unwrap());
        let foreign = KernelOperator::identity(other);
        assert!(compose(&u, &foreign).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = swap([0.2, 0.9]);
        let u = feynman_kac_operator(&m, 0.5, FkMethod::ExactExponential).unwrap();
        let back = KernelOperator::from_text(&u.to_text(), m.space().clone()).unwrap();
        assert_eq!(back.density(), u.density());
        assert_eq!(back.t(), 0.5);
        assert!(KernelOperator::from_text("0.5 3\n", m.space().clone()).is_err());
    }

    #[test]
    fn mehler_point_values() {
        let v = mehler_kernel(1.0, &[0.0], &[0.0]).unwrap();
        assert_relative_eq!(v, (2.0 * PI * 2f64.sinh()).powf(-0.5), max_relative = 1e-15);
        assert_relative_eq!(
            mehler_kernel(0.3, &[0.4, -1.0], &[2.0, 0.5]).unwrap(),
            mehler_kernel(0.3, &[2.0, 0.5], &[0.4, -1.0]).unwrap(),
            max_relative = 1e-15
        );
        assert!(mehler_kernel(0.0, &[0.0], &[0.0]).is_err());
        for t in [0.2, 1.0, 5.0] {
            assert_relative_eq!(ho_survival(t, &[0.0]).unwrap(), (2.0 * t).cosh().powf(-0.5), max_relative = 1e-14);
        }
    }
}
