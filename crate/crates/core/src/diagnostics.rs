//! Quasi-ergodicity diagnostics evaluated on kernel operators: heat content,
//! quasi-stationary measures, convergence errors, ground-state domination
//! profiles, the η and κ_b rate functions, and exponential rate fits.

use std::fmt;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::linalg;
use crate::models::{LevyProfile, PotentialSpec};
use crate::operators::{feynman_kac_operator, ho_log_survival, FkMethod, KernelOperator, MarkovModel};
use crate::spectral::{dominant_left, SpectralData, SIMPLICITY_TOL};
use crate::statespace::{ExhaustingFamily, StateSpace};

/// Least-squares fit of `log(value) = intercept + rate * t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// `(t, value)` samples of one diagnostic, with an optional free-text
/// column per sample.
#[derive(Clone, Debug, Default)]
pub struct DiagnosticSeries {
    pub name: String,
    samples: Vec<(f64, f64)>,
    extra: Vec<String>,
    pub fit: Option<RateFit>,
}

impl DiagnosticSeries {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    /// Builds a series from samples, which must have strictly increasing `t`.
    pub fn from_samples(name: impl Into<String>, samples: &[(f64, f64)]) -> Result<Self> {
        let mut s = Self::new(name);
        for &(t, v) in samples {
            s.push(t, v)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        self.push_with(t, value, String::new())
    }

    pub fn push_with(&mut self, t: f64, value: f64, extra: impl Into<String>) -> Result<()> {
        if let Some(&(last, _)) = self.samples.last() {
            if !(t > last) {
                return Err(domain(format!("series {}: time {t} does not follow {last}", self.name)));
            }
        }
        if !value.is_finite() {
            return Err(domain(format!("series {}: non-finite value at t = {t}", self.name)));
        }
        self.samples.push((t, value));
        self.extra.push(extra.into());
        Ok(())
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1).collect()
    }

    /// Rows `model_id,diagnostic,t,value,extra`.
    pub fn csv_rows(&self, model_id: &str) -> String {
        let mut out = String::new();
        for ((t, v), extra) in self.samples.iter().zip(&self.extra) {
            let _ = writeln!(out, "{},{},{t:.6},{v:.12e},{extra}", csv_field(model_id), csv_field(&self.name));
        }
        out
    }

    /// Row `model_id,diagnostic,rate,intercept,r2`, if fitted.
    pub fn summary_row(&self, model_id: &str) -> Option<String> {
        self.fit.map(|f| {
            format!(
                "{},{},{:.12e},{:.12e},{:.12}",
                csv_field(model_id),
                csv_field(&self.name),
                f.rate,
                f.intercept,
                f.r_squared
            )
        })
    }
}

pub const SERIES_CSV_HEADER: &str = "model_id,diagnostic,t,value,extra";
pub const SUMMARY_CSV_HEADER: &str = "model_id,diagnostic,rate,intercept,r2";

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QsdSource {
    FromPsi0,
    FromPhi0,
    FromFixedPoint,
    User,
}

/// Probability vector over the states.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiStationaryMeasure {
    pub weights: Vec<f64>,
    pub source: QsdSource,
}

impl QuasiStationaryMeasure {
    /// Normalizes nonnegative `weights` to total mass one.
    pub fn new(weights: Vec<f64>, source: QsdSource) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(domain("measure weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateSupport);
        }
        Ok(Self { weights: weights.into_iter().map(|w| w / total).collect(), source })
    }

    pub fn point_mass(n: usize, x: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[x] = 1.0;
        Self { weights, source: QsdSource::User }
    }

    /// `Σ |a - b|`
    pub fn total_variation(&self, other: &Self) -> f64 {
        self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// `Z(t) = Σ_x (U_t 1)(x) μ(x)`
pub fn heat_content(op: &KernelOperator) -> f64 {
    op.survival().iter().zip(op.space().mu()).map(|(s, m)| s * m).sum()
}

/// `Z(t)` computed from the adjoint side, `Σ_y (U*_t 1)(y) μ(y)`.
pub fn heat_content_adjoint(op: &KernelOperator) -> f64 {
    op.adjoint_survival().iter().zip(op.space().mu()).map(|(s, m)| s * m).sum()
}

/// `Σ_x e^{-t V(x)} μ(x)`, an upper bound for `Z(t)`.
pub fn heat_content_bound(model: &MarkovModel, t: f64) -> f64 {
    model.potential().iter().zip(model.space().mu()).map(|(v, m)| (-t * v).exp() * m).sum()
}

/// `m ∝ ψ₀ μ`, or `m* ∝ φ₀ μ` when `adjoint` is set.
pub fn qsd_from_spectral(spec: &SpectralData, mu: &[f64], adjoint: bool) -> QuasiStationaryMeasure {
    let (f, source) = if adjoint { (&spec.phi0, QsdSource::FromPhi0) } else { (&spec.psi0, QsdSource::FromPsi0) };
    let w: Vec<f64> = f.iter().zip(mu).map(|(a, m)| a * m).collect();
    QuasiStationaryMeasure::new(w, source).expect("ground states are positive")
}

/// One-step evolution `y ↦ Σ_x σ(x) u_t(x, y)` and the mass `σ(U_t 1)`.
fn evolve(sigma: &[f64], op: &KernelOperator) -> Result<(Vec<f64>, f64)> {
    if sigma.len() != op.len() {
        return Err(domain(format!("measure has {} weights for {} states", sigma.len(), op.len())));
    }
    let u = op.density();
    let n = op.len();
    let row: Vec<f64> = (0..n).map(|y| (0..n).map(|x| sigma[x] * u[(x, y)]).sum()).collect();
    let mass: f64 = row.iter().zip(op.space().mu()).map(|(r, m)| r * m).sum();
    if !(mass > 0.0) {
        return Err(Error::DegenerateSupport);
    }
    Ok((row, mass))
}

/// `sup_{‖f‖∞ ≤ 1} |σ(U_t f)/σ(U_t 1) - σ(f)|`, evaluated as the total
/// variation between `σ` and its normalized one-step evolution.
pub fn qsd_residual(sigma: &QuasiStationaryMeasure, op: &KernelOperator) -> Result<f64> {
    let (row, mass) = evolve(&sigma.weights, op)?;
    let mu = op.space().mu();
    Ok(row.iter().zip(mu).zip(&sigma.weights).map(|((r, m), s)| (r * m / mass - s).abs()).sum())
}

/// The quasi-stationary measure is not determined uniquely by the operator.
#[derive(Clone, Debug, PartialEq)]
pub struct NonuniquenessWarning {
    /// Modulus gap between the two leading eigenvalues of the transition
    /// matrix.
    pub separation: f64,
    pub reducible: bool,
}

impl fmt::Display for NonuniquenessWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "NonuniquenessWarning: dominant eigenvalue separation {:.3e}, reducible = {}",
            self.separation, self.reducible
        )
    }
}

#[derive(Clone, Debug)]
pub struct QsdSearch {
    pub measure: QuasiStationaryMeasure,
    pub warning: Option<NonuniquenessWarning>,
}

/// Normalized left Perron vector of the transition matrix of `op`. `tol` is
/// the relative separation below which the dominant eigenvalue counts as
/// repeated.
pub fn find_qsd(op: &KernelOperator, tol: f64) -> Result<QsdSearch> {
    let p = op.transition();
    let dom = dominant_left(&p)?;
    let reducible = !linalg::is_irreducible(&p);
    let degenerate = dom.separation <= tol.max(SIMPLICITY_TOL) * dom.value.abs().max(f64::MIN_POSITIVE);
    let warning = (reducible || degenerate).then_some(NonuniquenessWarning { separation: dom.separation, reducible });
    Ok(QsdSearch { measure: QuasiStationaryMeasure::new(dom.vector, QsdSource::FromFixedPoint)?, warning })
}

/// `sup_{x, y} |e^{λ₀t} u_t(x, y) - φ₀(x) ψ₀(y) / Λ|`
pub fn kernel_convergence_error(op: &KernelOperator, spec: &SpectralData) -> f64 {
    let growth = (spec.lambda0 * op.t()).exp();
    let u = op.density();
    let mut worst: f64 = 0.0;
    for x in 0..op.len() {
        for y in 0..op.len() {
            let limit = spec.phi0[x] * spec.psi0[y] / spec.overlap;
            worst = worst.max((growth * u[(x, y)] - limit).abs());
        }
    }
    worst
}

/// Pointwise rate `κ(t, s, r, x, y)` of the refined kernel bound. `left`
/// carries `(s, U_s 1)` and `right` carries `(r, U*_r 1)`; `None` stands
/// for `s = 0` or `r = 0`.
pub fn refined_kappa(
    spec: &SpectralData,
    gamma: f64,
    t: f64,
    left: Option<(f64, &[f64])>,
    right: Option<(f64, &[f64])>,
) -> DMatrix<f64> {
    let n = spec.phi0.len();
    let s = left.map_or(0.0, |l| l.0);
    let r = right.map_or(0.0, |l| l.0);
    let base = (-gamma * (t - s - r)).exp();
    let lx = |x: usize| left.map_or(1.0, |(s, u)| (spec.lambda0 * s).exp() * u[x]);
    let ry = |y: usize| right.map_or(1.0, |(r, u)| (spec.lambda0 * r).exp() * u[y]);
    DMatrix::from_fn(n, n, |x, y| base * lx(x) * ry(y))
}

/// Norm index `p ∈ [1, ∞]`; `f64::INFINITY` is `p = ∞`.
fn dual_exponent(p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(domain(format!("norm index {p} is below 1")));
    }
    Ok(if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    })
}

/// `(Σ |g|^q μ)^{1/q}`, or `max |g|` for `q = ∞`.
pub fn lq_norm(g: &[f64], mu: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        g.iter().fold(0.0, |a, b| a.max(b.abs()))
    } else if q == 1.0 {
        g.iter().zip(mu).map(|(a, m)| a.abs() * m).sum()
    } else {
        g.iter().zip(mu).map(|(a, m)| a.abs().powf(q) * m).sum::<f64>().powf(1.0 / q)
    }
}

/// `sup_{‖f‖_{L^p(μ)} ≤ 1} |σ(U_t f)/σ(U_t 1) - m(f)|`, evaluated exactly as
/// the `L^q(μ)` norm of the difference of densities. `sigma` holds point
/// masses.
pub fn quasi_ergodic_error(op: &KernelOperator, spec: &SpectralData, sigma: &[f64], p: f64) -> Result<f64> {
    let q = dual_exponent(p)?;
    let (row, mass) = evolve(sigma, op)?;
    let mu = op.space().mu();
    let psi_l1 = spec.psi0_l1(mu);
    let g: Vec<f64> = row.iter().zip(&spec.psi0).map(|(r, s)| r / mass - s / psi_l1).collect();
    Ok(lq_norm(&g, mu, q))
}

/// `sup_{x ∈ K_{at}} sup_{‖f‖_p ≤ 1} |(U_t f)(x)/(U_t 1)(x) - m(f)|`
pub fn progressive_quasi_ergodic_error(
    op: &KernelOperator,
    spec: &SpectralData,
    family: &ExhaustingFamily,
    a: f64,
    p: f64,
) -> Result<f64> {
    let n = op.len();
    let mut worst: f64 = 0.0;
    for x in family.ball_indicator(op.space(), a * op.t())? {
        worst = worst.max(quasi_ergodic_error(op, spec, &QuasiStationaryMeasure::point_mass(n, x).weights, p)?);
    }
    Ok(worst)
}

/// `|e^{λ₀t} σ(U_t f) - σ(φ₀) Σ f ψ₀ μ / Λ|` for a finite measure `σ` given
/// by point masses.
pub fn asymptotic_projection_error(op: &KernelOperator, spec: &SpectralData, sigma: &[f64], f: &[f64]) -> f64 {
    let mu = op.space().mu();
    let uf = op.apply(f);
    let lhs: f64 = (spec.lambda0 * op.t()).exp() * sigma.iter().zip(&uf).map(|(s, u)| s * u).sum::<f64>();
    let s_phi: f64 = sigma.iter().zip(&spec.phi0).map(|(s, p)| s * p).sum();
    let f_psi: f64 = f.iter().zip(&spec.psi0).zip(mu).map(|((a, b), m)| a * b * m).sum();
    (lhs - s_phi * f_psi / spec.overlap).abs()
}

/// `|e^{λ₀t} Z(t) - ‖φ₀‖₁ ‖ψ₀‖₁ / Λ|`
pub fn heat_content_asymptotic_error(op: &KernelOperator, spec: &SpectralData) -> f64 {
    let mu = op.space().mu().to_vec();
    asymptotic_projection_error(op, spec, &mu, &vec![1.0; op.len()])
}

/// `x ↦ e^{λ₀t} (U_t 1)(x) / φ₀(x)`
pub fn gsd_profile(op: &KernelOperator, spec: &SpectralData) -> Vec<f64> {
    let growth = (spec.lambda0 * op.t()).exp();
    op.survival().iter().zip(&spec.phi0).map(|(s, p)| growth * s / p).collect()
}

/// Largest sampled radius `r` around `base` with `sup_{B_r} profile ≤ level`,
/// or `None` when the base point already exceeds the level.
pub fn pgsd_radius(profile: &[f64], space: &StateSpace, base: usize, level: f64) -> Option<f64> {
    let mut order: Vec<(f64, usize)> = (0..space.len()).map(|j| (space.distance(base, j), j)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut radius = None;
    let mut i = 0;
    while i < order.len() {
        // All points at the same distance enter the ball together.
        let d = order[i].0;
        let mut j = i;
        let mut ok = true;
        while j < order.len() && order[j].0 == d {
            ok &= profile[order[j].1] <= level;
            j += 1;
        }
        if !ok {
            break;
        }
        radius = Some(d);
        i = j;
    }
    radius
}

/// Closed-form pGSD radius of the `d`-dimensional harmonic oscillator:
/// the set where `U_t 1(x) ≤ C e^{-λ₀t} φ₀(x)`, or `None` when it is void.
pub fn ho_pgsd_radius(t: f64, level: f64, d: usize) -> Result<Option<f64>> {
    if !(t > 0.0) || !(level > 0.0) || d == 0 {
        return Err(domain("need t > 0, C > 0 and d >= 1"));
    }
    let half_d = d as f64 / 2.0;
    let inner = level.ln() - half_d * (2.0 * std::f64::consts::PI.sqrt()).ln() + half_d * (-4.0 * t).exp().ln_1p();
    if inner < 0.0 {
        return Ok(None);
    }
    Ok(Some(((4.0 * t).exp() + 1.0).sqrt() * inner.sqrt()))
}

/// Direct test of `U_t 1(x) ≤ C e^{-d t} φ₀(x)` at radius `|x| = r` for the
/// harmonic oscillator, in log form.
pub fn ho_pgsd_holds(t: f64, level: f64, d: usize, r: f64) -> Result<bool> {
    let mut x = vec![0.0; d];
    x[0] = r;
    let lhs = ho_log_survival(t, &x)?;
    let rhs = level.ln() - d as f64 * t - d as f64 / 4.0 * std::f64::consts::PI.ln() - 0.5 * r * r;
    Ok(lhs <= rhs)
}

/// `h(s) = min(inf_{K_s} φ₀, inf_{K_s} ψ₀)`
fn ground_state_floor(spec: &SpectralData, space: &StateSpace, family: &ExhaustingFamily, s: f64) -> Result<f64> {
    Ok(family
        .ball_indicator(space, s)?
        .into_iter()
        .map(|x| spec.phi0[x].min(spec.psi0[x]))
        .fold(f64::INFINITY, f64::min))
}

/// `η(t) = inf{s ≥ t_min : h(s) < e^{-γt}}` located by bisection to within
/// `resolution`. When `h` never drops below the level the exhaustion time
/// of the family is returned.
pub fn eta_function(
    spec: &SpectralData,
    space: &StateSpace,
    family: &ExhaustingFamily,
    gamma: f64,
    t: f64,
    resolution: f64,
) -> Result<f64> {
    if !(gamma > 0.0) || !(resolution > 0.0) {
        return Err(domain("γ and resolution must be positive"));
    }
    let h0 = ground_state_floor(spec, space, family, family.t_min)?;
    let t_admissible = -h0.ln() / gamma;
    if t < t_admissible {
        return Err(domain(format!("η is defined for t ≥ {t_admissible}, got {t}")));
    }
    let level = (-gamma * t).exp();
    let exhausted = family
        .exhaustion_time(space, resolution)
        .ok_or_else(|| domain("exhausting family never covers the space"))?;
    if ground_state_floor(spec, space, family, exhausted)? >= level {
        return Ok(exhausted);
    }
    let (mut lo, mut hi) = (family.t_min, exhausted);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if ground_state_floor(spec, space, family, mid)? < level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `κ_b(t) = e^{-γbt} + sup_{K_{bt}^c} U_{t₀}1 + sup_{K_{bt}^c} U*_{t₀}1`
/// with the survival functions at the reference time precomputed.
#[derive(Clone, Debug)]
pub struct KappaRate {
    pub gamma: f64,
    pub t0: f64,
    survival: Vec<f64>,
    adjoint_survival: Vec<f64>,
    family: ExhaustingFamily,
}

impl KappaRate {
    pub fn new(model: &MarkovModel, family: ExhaustingFamily, gamma: f64, t0: f64) -> Result<Self> {
        if !(t0 > 0.0) || !(gamma > 0.0) {
            return Err(domain("t₀ and γ must be positive"));
        }
        let op = feynman_kac_operator(model, t0, FkMethod::ExactExponential)?;
        Ok(Self { gamma, t0, survival: op.survival(), adjoint_survival: op.adjoint_survival(), family })
    }

    pub fn eval(&self, space: &StateSpace, b: f64, t: f64) -> Result<f64> {
        if !(b > 0.0 && b < 0.5) {
            return Err(domain(format!("b = {b} outside (0, 1/2)")));
        }
        let inside = self.family.mask(space, b * t)?;
        let sup_out = |f: &[f64]| {
            f.iter().zip(&inside).filter(|(_, k)| !**k).map(|(v, _)| *v).fold(0.0, f64::max)
        };
        Ok((-self.gamma * b * t).exp() + sup_out(&self.survival) + sup_out(&self.adjoint_survival))
    }
}

/// `κ_b(t)` in one call.
pub fn kappa_rate(
    model: &MarkovModel,
    family: &ExhaustingFamily,
    gamma: f64,
    t0: f64,
    b: f64,
    t: f64,
) -> Result<f64> {
    KappaRate::new(model, family.clone(), gamma, t0)?.eval(model.space(), b, t)
}

#[derive(Clone, Debug)]
pub struct UniquenessCheck {
    /// `e^{λ₀t} sup_x (U_t 1 + U*_t 1)(x)` at each grid time.
    pub values: Vec<(f64, f64)>,
    pub sup: f64,
    pub bounded: bool,
}

/// Relative change between the last two grid values that counts as settled.
pub const UNIQUENESS_STABILITY: f64 = 1e-3;

pub fn uniqueness_condition_check(model: &MarkovModel, spec: &SpectralData, t_grid: &[f64]) -> Result<UniquenessCheck> {
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let op = feynman_kac_operator(model, t, FkMethod::ExactExponential)?;
        let s = op.survival();
        let a = op.adjoint_survival();
        let sup = s.iter().zip(&a).map(|(x, y)| x + y).fold(0.0, f64::max);
        values.push((t, (spec.lambda0 * t).exp() * sup));
    }
    let sup = values.iter().map(|v| v.1).fold(0.0, f64::max);
    let bounded = match values.as_slice() {
        [.., (_, a), (_, b)] => sup.is_finite() && (b / a - 1.0).abs() <= UNIQUENESS_STABILITY,
        _ => sup.is_finite(),
    };
    Ok(UniquenessCheck { values, sup, bounded })
}

/// Fits the last `tail_fraction` of the samples (at least four).
pub fn fit_exponential_rate(series: &DiagnosticSeries, tail_fraction: f64) -> Result<RateFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Fit(format!("tail fraction {tail_fraction} outside (0, 1]")));
    }
    let n = series.len();
    let k = ((n as f64 * tail_fraction).ceil() as usize).min(n);
    if k < 4 {
        return Err(Error::Fit(format!("{k} samples in the tail window, need at least 4")));
    }
    let window = &series.samples()[n - k..];
    if let Some((t, v)) = window.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Fit(format!("nonpositive value {v} at t = {t}")));
    }
    let xs: Vec<f64> = window.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = window.iter().map(|s| s.1.ln()).collect();
    let kf = k as f64;
    let mx = xs.iter().sum::<f64>() / kf;
    let my = ys.iter().sum::<f64>() / kf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("tail window has a single time".into()));
    }
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let r_squared = if syy > 0.0 { 1.0 - (syy - rate * sxy).max(0.0) / syy } else { 1.0 };
    Ok(RateFit { rate, intercept, r_squared })
}

/// As [`fit_exponential_rate`] after discarding samples below `floor`, which
/// removes a round-off plateau at the end of a decaying series.
pub fn fit_exponential_rate_above(series: &DiagnosticSeries, tail_fraction: f64, floor: f64) -> Result<RateFit> {
    let kept: Vec<(f64, f64)> = series.samples().iter().copied().filter(|s| s.1 >= floor).collect();
    fit_exponential_rate(&DiagnosticSeries::from_samples(series.name.clone(), &kept)?, tail_fraction)
}

/// Default lower cutoff for [`fit_exponential_rate_above`].
pub const FIT_FLOOR: f64 = 1e-11;

/// Spread `(min, max)` of `e^{λ₀t} U_t 1(x) / (1 ∧ ν(x)/V(x))` over
/// `|x| ≤ radius`, the comparability ratio of the non-aGSD heat-kernel
/// profile.
pub fn schrodinger_comparability(
    op: &KernelOperator,
    spec: &SpectralData,
    levy: &LevyProfile,
    potential: &PotentialSpec,
    radius: f64,
) -> Result<(f64, f64)> {
    let coords = op.space().coords().ok_or_else(|| domain("comparability needs coordinates"))?;
    let growth = (spec.lambda0 * op.t()).exp();
    let survival = op.survival();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (x, c) in coords.iter().enumerate() {
        let r = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > radius {
            continue;
        }
        let shape = 1f64.min(levy.density(r.max(1.0)) / potential.at_radius(r));
        let ratio = growth * survival[x] / shape;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    if !lo.is_finite() {
        return Err(domain("no lattice points inside the comparability radius"));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_ctmc_model, build_ctmc_model_unchecked, KernelRecipe};
    use crate::operators::{Provenance, feynman_kac_operator};
    use crate::spectral::principal_triple;
    use crate::statespace::RadiusFn;
    use approx::assert_relative_eq;

    fn swap(v: f64) -> MarkovModel {
        build_ctmc_model(&KernelRecipe::Swap, None, &PotentialSpec::table(vec![0.0, v])).unwrap()
    }

    fn op(model: &MarkovModel, t: f64) -> KernelOperator {
        feynman_kac_operator(model, t, FkMethod::ExactExponential).unwrap()
    }

    #[test]
    fn heat_content_closed_forms() {
        let m = build_ctmc_model(&KernelRecipe::BirthDeath { n: 5, up: 0.3 }, Some(vec![1.0, 2.0, 0.5, 1.0, 3.0]), &PotentialSpec::constant(0.0)).unwrap();
        assert_relative_eq!(heat_content(&op(&m, 1.3)), 7.5, max_relative = 1e-12);
        let c = m.with_potential(vec![0.7; 5]).unwrap();
        let u = op(&c, 1.3);
        assert_relative_eq!(heat_content(&u), 7.5 * (-0.7f64 * 1.3).exp(), max_relative = 1e-12);
        assert!((heat_content(&u) - heat_content_adjoint(&u)).abs() < 1e-10);
    }

    #[test]
    fn swap_qsd_and_residuals() {
        let s0 = principal_triple(&swap(0.0)).unwrap();
        let m0 = qsd_from_spectral(&s0, &[1.0, 1.0], false);
        assert_relative_eq!(m0.weights[0], 0.5, max_relative = 1e-13);

        // -G = [[1, -1], [-1, 2]] has λ₀ = (3 - √5)/2 with left vector (1, 1 - λ₀).
        let m = swap(1.0);
        let s = principal_triple(&m).unwrap();
        let qsd = qsd_from_spectral(&s, &[1.0, 1.0], false);
        let l0 = (3.0 - 5f64.sqrt()) / 2.0;
        assert_relative_eq!(qsd.weights[0], 1.0 / (2.0 - l0), max_relative = 1e-12);
        let u = op(&m, 0.8);
        let r_m = qsd_residual(&qsd, &u).unwrap();
        assert!(r_m <= 1e-9);
        let point = QuasiStationaryMeasure::point_mass(2, 0);
        let r_p = qsd_residual(&point, &u).unwrap();
        assert!(r_p > 1e-3);
        let mix: Vec<f64> = qsd.weights.iter().map(|w| 0.9 * w + 0.1 * 0.5).collect();
        let r_mix = qsd_residual(&QuasiStationaryMeasure::new(mix, QsdSource::User).unwrap(), &u).unwrap();
        assert!(r_m < r_mix && r_mix < r_p);
        assert!(matches!(qsd_residual(&QuasiStationaryMeasure { weights: vec![0.0, 0.0], source: QsdSource::User }, &u), Err(Error::DegenerateSupport)));
    }

    #[test]
    fn find_qsd_agrees_and_warns() {
        let m = build_ctmc_model(&KernelRecipe::BirthDeath { n: 7, up: 0.6 }, None, &PotentialSpec::power(2.0).scaled(0.05)).unwrap();
        let s = principal_triple(&m).unwrap();
        let found = find_qsd(&op(&m, 1.0), 1e-10).unwrap();
        assert!(found.warning.is_none());
        assert!(found.measure.total_variation(&qsd_from_spectral(&s, m.space().mu(), false)) < 1e-8);

        let ds = build_ctmc_model(&KernelRecipe::Complete { n: 4 }, None, &PotentialSpec::constant(0.0)).unwrap();
        let f = find_qsd(&op(&ds, 0.5), 1e-10).unwrap();
        for w in &f.measure.weights {
            assert_relative_eq!(*w, 0.25, max_relative = 1e-10);
        }

        let mut q = DMatrix::zeros(4, 4);
        q[(0, 1)] = 1.0;
        q[(1, 0)] = 1.0;
        q[(2, 3)] = 1.0;
        q[(3, 2)] = 1.0;
        let split = build_ctmc_model_unchecked(&KernelRecipe::User(q), None, &PotentialSpec::constant(0.2)).unwrap();
        assert!(find_qsd(&op(&split, 1.0), 1e-10).unwrap().warning.is_some());
    }

    #[test]
    fn kernel_error_decays_at_gap() {
        let m = swap(0.5);
        let s = principal_triple(&m).unwrap();
        let mut series = DiagnosticSeries::new("kernel");
        for k in 1..=12 {
            let t = 0.5 * k as f64;
            series.push(t, kernel_convergence_error(&op(&m, t), &s)).unwrap();
        }
        let fit = fit_exponential_rate_above(&series, 0.5, FIT_FLOOR).unwrap();
        assert_relative_eq!(-fit.rate, s.gap, max_relative = 0.05);

        // Rank-one density is its own limit.
        let n = 2;
        let t = 0.7;
        let dens = DMatrix::from_fn(n, n, |x, y| s.phi0[x] * s.psi0[y] / s.overlap * (-s.lambda0 * t).exp());
        let r1 = KernelOperator::from_density(t, dens, m.space().clone(), Provenance::ClosedForm).unwrap();
        assert!(kernel_convergence_error(&r1, &s) < 1e-15);
    }

    #[test]
    fn refined_bound_dominates_after_calibration() {
        let m = build_ctmc_model(&KernelRecipe::BirthDeath { n: 8, up: 0.6 }, None, &PotentialSpec::power(2.0).scaled(0.2)).unwrap();
        let s = principal_triple(&m).unwrap();
        let (sr, rr) = (0.5, 0.5);
        let us = op(&m, sr).survival();
        let ur = op(&m, rr).adjoint_survival();
        let ratio = |t: f64| {
            let u = op(&m, t);
            let k = refined_kappa(&s, s.gap, t, Some((sr, &us)), Some((rr, &ur)));
            let g = (s.lambda0 * t).exp();
            let mut worst: f64 = 0.0;
            for x in 0..8 {
                for y in 0..8 {
                    let e = (g * u.density()[(x, y)] - s.phi0[x] * s.psi0[y] / s.overlap).abs();
                    worst = worst.max(e / k[(x, y)]);
                }
            }
            worst
        };
        let c = ratio(3.0) * 1.5;
        for t in [4.0, 6.0, 8.0] {
            assert!(ratio(t) <= c, "t = {t}");
        }
    }

    #[test]
    fn quasi_ergodic_error_properties() {
        let m = build_ctmc_model(&KernelRecipe::BirthDeath { n: 5, up: 0.6 }, None, &PotentialSpec::power(2.0).scaled(0.05)).unwrap();
        let s = principal_triple(&m).unwrap();
        let qsd = qsd_from_spectral(&s, m.space().mu(), false);
        let u = op(&m, 2.0);
        for p in [1.0, 2.0, f64::INFINITY] {
            assert!(quasi_ergodic_error(&u, &s, &qsd.weights, p).unwrap() < 1e-9);
        }
        let point = QuasiStationaryMeasure::point_mass(5, 0).weights;
        let e: Vec<f64> = [1.0, 2.0, f64::INFINITY].iter().map(|p| quasi_ergodic_error(&u, &s, &point, *p).unwrap()).collect();
        assert!(e[0] <= e[1] && e[1] <= e[2], "{e:?}");
        assert!(quasi_ergodic_error(&u, &s, &point, 0.5).is_err());

        let mut series = DiagnosticSeries::new("qe");
        for k in 1..=16 {
            let t = 0.5 * k as f64;
            series.push(t, quasi_ergodic_error(&op(&m, t), &s, &point, f64::INFINITY).unwrap()).unwrap();
        }
        let fit = fit_exponential_rate_above(&series, 0.5, FIT_FLOOR).unwrap();
        assert_relative_eq!(-fit.rate, s.gap, max_relative = 0.1);
    }

    #[test]
    fn projection_error_oracles() {
        let v: f64 = 1.0;
        let m = swap(v);
        let s = principal_triple(&m).unwrap();
        let u = op(&m, 1.1);
        assert!(asymptotic_projection_error(&u, &s, &[0.3, 2.0], &s.phi0) < 1e-12);

        // 2×2 closed form: δ₀ and f = 1_{0}.
        let l0 = 1.0 + v / 2.0 - (1.0 + v * v / 4.0f64).sqrt();
        let l1 = 1.0 + v / 2.0 + (1.0 + v * v / 4.0f64).sqrt();
        let a = [1.0, 1.0 - l0];
        let b = [1.0, 1.0 - l1];
        let na = a[0] * a[0] + a[1] * a[1];
        let nb = b[0] * b[0] + b[1] * b[1];
        let t: f64 = 1.1;
        let entry = a[0] * a[0] / na * (-l0 * t).exp() + b[0] * b[0] / nb * (-l1 * t).exp();
        let want = ((l0 * t).exp() * entry - a[0] * a[0] / na).abs();
        let got = asymptotic_projection_error(&u, &s, &[1.0, 0.0], &[1.0, 0.0]);
        assert_relative_eq!(got, want, max_relative = 1e-9);
    }

    #[test]
    fn gsd_profile_bounds() {
        let m = build_ctmc_model(&KernelRecipe::BirthDeath { n: 6, up: 0.6 }, None, &PotentialSpec::power(2.0).scaled(0.1)).unwrap();
        let s = principal_triple(&m).unwrap();
        let sup_phi = s.phi0.iter().cloned().fold(0.0, f64::max);
        for t in [0.5, 2.0, 5.0] {
            for v in gsd_profile(&op(&m, t), &s) {
                assert!(v >= 1.0 / sup_phi * (1.0 - 1e-10));
            }
        }
        let cons = build_ctmc_model(&KernelRecipe::BirthDeath { n: 6, up: 0.6 }, None, &PotentialSpec::constant(0.0)).unwrap();
        let sc = principal_triple(&cons).unwrap();
        let min_phi = sc.phi0.iter().cloned().fold(f64::INFINITY, f64::min);
        for t in [1.0, 3.0] {
            let sup = gsd_profile(&op(&cons, t), &sc).into_iter().fold(0.0, f64::max);
            assert_relative_eq!(sup, 1.0 / min_phi, max_relative = 1e-9);
        }
        let profile = vec![1.0, 2.0, 5.0, 2.0, 1.0];
        let line = StateSpace::path(5).unwrap();
        assert_eq!(pgsd_radius(&profile, &line, 2, 1.5), None);
        assert_eq!(pgsd_radius(&profile, &line, 0, 3.0), Some(1.0));
        assert_eq!(pgsd_radius(&profile, &line, 2, 10.0), Some(2.0));
    }

    #[test]
    fn ho_radius_matches_bisection() {
        let r = ho_pgsd_radius(1.0, 10.0, 1).unwrap().unwrap();
        let (mut lo, mut hi) = (0.0, 100.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if ho_pgsd_holds(1.0, 10.0, 1, mid).unwrap() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((r - lo).abs() < 1e-9);
        let c = (2.0 * std::f64::consts::PI.sqrt()).powf(0.5);
        assert_eq!(ho_pgsd_radius(6.0, 0.9 * c, 1).unwrap(), None);
        let bounded: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|t| ho_pgsd_radius(*t, c, 1).unwrap().unwrap()).collect();
        for b in bounded {
            assert!(b < 1.0);
        }
    }

    #[test]
    fn eta_step_and_monotone() {
        let cons = build_ctmc_model(&KernelRecipe::Complete { n: 4 }, Some(vec![1.0; 4]), &PotentialSpec::constant(0.0)).unwrap();
        let s = principal_triple(&cons).unwrap();
        // φ₀ = ψ₀ = 1/2 everywhere: h never drops, so η is the exhaustion time.
        let space = StateSpace::path(4).unwrap();
        let fam = ExhaustingFamily::new(0, RadiusFn::Linear { offset: 0.0, slope: 1.0 }, 0.0);
        let eta = eta_function(&s, &space, &fam, 1.0, 2.0, 1e-6).unwrap();
        assert!((eta - 3.0).abs() < 1e-5);
        assert!(eta_function(&s, &space, &fam, 1.0, 0.1, 1e-6).is_err());

        let m = build_ctmc_model(&KernelRecipe::BirthDeath { n: 15, up: 0.5 }, None, &PotentialSpec::power(2.0).scaled(0.1)).unwrap();
        let s = principal_triple(&m).unwrap();
        let fam = ExhaustingFamily::new(7, RadiusFn::Linear { offset: 0.0, slope: 1.0 }, 0.0);
        let mut last = 0.0;
        let h0 = s.phi0[7].min(s.psi0[7]);
        let start = -h0.ln() / s.gap;
        for k in 0..20 {
            let t = start + 0.5 * k as f64;
            let e = eta_function(&s, m.space(), &fam, s.gap, t, 1e-6).unwrap();
            assert!(e >= last);
            last = e;
        }
    }

    #[test]
    fn kappa_and_uniqueness() {
        let m = build_ctmc_model(&KernelRecipe::BirthDeath { n: 9, up: 0.5 }, None, &PotentialSpec::power(2.0).scaled(0.1)).unwrap();
        let s = principal_triple(&m).unwrap();
        let all = ExhaustingFamily::new(4, RadiusFn::Constant(100.0), 0.0);
        let k = kappa_rate(&m, &all, s.gap, 1.0, 0.25, 3.0).unwrap();
        assert_relative_eq!(k, (-s.gap * 0.75f64).exp(), max_relative = 1e-14);
        let grow = ExhaustingFamily::new(4, RadiusFn::Linear { offset: 0.0, slope: 1.0 }, 0.0);
        let rate = KappaRate::new(&m, grow, s.gap, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..30 {
            let v = rate.eval(m.space(), 0.3, 0.5 * k as f64).unwrap();
            assert!(v <= prev * (1.0 + 1e-12));
            prev = v;
        }

        let cons = build_ctmc_model(&KernelRecipe::BirthDeath { n: 5, up: 0.5 }, None, &PotentialSpec::constant(0.0)).unwrap();
        let sc = principal_triple(&cons).unwrap();
        let chk = uniqueness_condition_check(&cons, &sc, &[1.0, 2.0, 4.0]).unwrap();
        for (_, v) in &chk.values {
            assert_relative_eq!(*v, 2.0, max_relative = 1e-10);
        }
        assert!(chk.bounded);
        let chk = uniqueness_condition_check(&m, &s, &[2.0, 6.0, 12.0, 24.0]).unwrap();
        assert!(chk.bounded, "{:?}", chk.values);
    }

    #[test]
    fn fit_synthetic() {
        let exact: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 5.0 * (-3.0 * k as f64).exp())).collect();
        let f = fit_exponential_rate(&DiagnosticSeries::from_samples("x", &exact).unwrap(), 1.0).unwrap();
        assert!((f.rate + 3.0).abs() < 1e-10 && (f.r_squared - 1.0).abs() < 1e-10);
        assert_relative_eq!(f.intercept, 5f64.ln(), max_relative = 1e-10);
        let flat: Vec<(f64, f64)> = (0..8).map(|k| (k as f64, 2.0)).collect();
        assert!(fit_exponential_rate(&DiagnosticSeries::from_samples("c", &flat).unwrap(), 1.0).unwrap().rate.abs() < 1e-12);
        let bad = [(0.0, 1.0), (1.0, 0.5), (2.0, 0.0), (3.0, 0.1)];
        assert!(matches!(fit_exponential_rate(&DiagnosticSeries::from_samples("b", &bad).unwrap(), 1.0), Err(Error::Fit(_))));
        assert!(DiagnosticSeries::from_samples("d", &[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn csv_rows_render() {
        let mut s = DiagnosticSeries::from_samples("heat_content", &[(1.0, 0.5), (2.0, 0.25)]).unwrap();
        s.fit = Some(fit_exponential_rate(&DiagnosticSeries::from_samples("h", &[(0.0, 1.0), (1.0, 0.5), (2.0, 0.25), (3.0, 0.125)]).unwrap(), 1.0).unwrap());
        let rows = s.csv_rows("swap2");
        assert_eq!(rows.lines().count(), 2);
        assert!(rows.starts_with("swap2,heat_content,1.000000,"));
        assert!(s.summary_row("frac(1,0,2,logpower)").unwrap().starts_with("\"frac(1,0,2,logpower)\",heat_content,"));
    }
}
