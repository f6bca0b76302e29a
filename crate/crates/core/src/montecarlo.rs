//! Path-sampling estimators of Feynman–Kac functionals.
//!
//! Every estimator splits its `n` samples into fixed chunks of
//! [`CHUNK_SIZE`]; chunk `k` draws from the ChaCha8 stream `k` of the given
//! seed and chunk statistics are merged pairwise in chunk order, so results
//! do not depend on the number of threads.

use nalgebra::DMatrix;
use quadrature::double_exponential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::linalg::expm_metzler;
use crate::models::{PotentialKind, PotentialSpec};
use crate::operators::MarkovModel;

pub const CHUNK_SIZE: usize = 4096;

/// Piecewise-constant path on `[0, t]` with its Feynman–Kac weight.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub jump_times: Vec<f64>,
    pub states: Vec<usize>,
    /// `exp(-∫₀ᵗ V(X_s) ds)`
    pub weight: f64,
}

impl PathSample {
    pub fn final_state(&self) -> usize {
        *self.states.last().expect("paths visit at least one state")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithError {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl EstimateWithError {
    /// `|mean - value| ≤ k · stderr`
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }

    /// Row `model_id,target,t,mean,stderr,n,seed`.
    pub fn csv_row(&self, model_id: &str, target: &str, t: f64) -> String {
        format!(
            "{},{},{t:.6},{:.12e},{:.6e},{},{}",
            crate::diagnostics::csv_field(model_id),
            crate::diagnostics::csv_field(target),
            self.mean,
            self.stderr,
            self.n_samples,
            self.seed
        )
    }
}

pub const MC_CSV_HEADER: &str = "model_id,target,t,mean,stderr,n,seed";

/// Running mean and centered second moment.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Self, b: Self) -> Self {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Self { n, mean: a.mean + d * b.n / n, m2: a.m2 + b.m2 + d * d * a.n * b.n / n }
    }

    fn estimate(&self, seed: u64) -> EstimateWithError {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        EstimateWithError { mean: self.mean, stderr: (var / self.n).sqrt(), n_samples: self.n as usize, seed }
    }
}

/// Bivariate running moments for ratio estimators.
#[derive(Clone, Copy, Debug, Default)]
struct Moments2 {
    n: f64,
    ma: f64,
    mb: f64,
    saa: f64,
    sbb: f64,
    sab: f64,
}

impl Moments2 {
    fn push(&mut self, a: f64, b: f64) {
        self.n += 1.0;
        let da = a - self.ma;
        let db = b - self.mb;
        self.ma += da / self.n;
        self.mb += db / self.n;
        self.saa += da * (a - self.ma);
        self.sbb += db * (b - self.mb);
        self.sab += da * (b - self.mb);
    }

    fn merge(x: Self, y: Self) -> Self {
        if x.n == 0.0 {
            return y;
        }
        if y.n == 0.0 {
            return x;
        }
        let n = x.n + y.n;
        let da = y.ma - x.ma;
        let db = y.mb - x.mb;
        let w = x.n * y.n / n;
        Self {
            n,
            ma: x.ma + da * y.n / n,
            mb: x.mb + db * y.n / n,
            saa: x.saa + y.saa + da * da * w,
            sbb: x.sbb + y.sbb + db * db * w,
            sab: x.sab + y.sab + da * db * w,
        }
    }
}

fn pairwise<T: Copy>(mut items: Vec<T>, merge: fn(T, T) -> T) -> Option<T> {
    while items.len() > 1 {
        items = items.chunks(2).map(|c| if c.len() == 2 { merge(c[0], c[1]) } else { c[0] }).collect();
    }
    items.pop()
}

/// Stream for chunk `k` of an estimator seeded with `seed`.
pub fn chunk_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

fn run_chunks<T: Copy + Default + Send>(
    n: usize,
    seed: u64,
    merge: fn(T, T) -> T,
    body: impl Fn(&mut ChaCha8Rng, &mut T) + Sync,
) -> T {
    let chunks = n.div_ceil(CHUNK_SIZE);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(seed, k);
            let mut acc = T::default();
            let len = CHUNK_SIZE.min(n - k * CHUNK_SIZE);
            for _ in 0..len {
                body(&mut rng, &mut acc);
            }
            acc
        })
        .collect();
    pairwise(parts, merge).unwrap_or_default()
}

/// Precomputed cumulative jump rows of a model.
#[derive(Clone, Debug)]
pub struct CtmcSampler<'a> {
    model: &'a MarkovModel,
    cumulative: Vec<Vec<f64>>,
}

impl<'a> CtmcSampler<'a> {
    pub fn new(model: &'a MarkovModel) -> Self {
        let q = model.q();
        let cumulative = (0..model.len())
            .map(|i| {
                let mut acc = 0.0;
                q.row(i).iter().map(|p| {
                    acc += p;
                    acc
                }).collect()
            })
            .collect();
        Self { model, cumulative }
    }

    fn step<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let row = &self.cumulative[x];
        let u = rng.random::<f64>() * row[row.len() - 1];
        let k = row.partition_point(|c| *c <= u).min(row.len() - 1);
        // Skip zero-probability entries that share the cumulative value.
        if self.model.q()[(x, k)] > 0.0 {
            k
        } else {
            (k..row.len()).find(|&j| self.model.q()[(x, j)] > 0.0).unwrap_or(x)
        }
    }

    /// Path from `x0` on `[0, t]`. Jumps arrive at the model's jump rate and
    /// each step is drawn from the row of `Q`; the weight uses the exact
    /// holding times.
    pub fn sample<R: Rng + ?Sized>(&self, x0: usize, t: f64, rng: &mut R) -> PathSample {
        let rate = self.model.jump_rate();
        let v = self.model.potential();
        let mut states = vec![x0];
        let mut jump_times = Vec::new();
        let mut now = 0.0;
        let mut x = x0;
        let mut integral = 0.0;
        loop {
            let hold: f64 = if rate > 0.0 { Exp1.sample(rng) } else { f64::INFINITY };
            let next = now + hold / rate;
            if next >= t {
                integral += v[x] * (t - now);
                break;
            }
            integral += v[x] * (next - now);
            now = next;
            x = self.step(x, rng);
            jump_times.push(now);
            states.push(x);
        }
        PathSample { jump_times, states, weight: (-integral).exp() }
    }

    /// Like [`sample`](Self::sample) but only reports whether the path stays
    /// in `ball` and its weight, without storing the path.
    fn weight_and_stay<R: Rng + ?Sized>(&self, x0: usize, t: f64, ball: &[bool], rng: &mut R) -> (f64, usize, bool) {
        let rate = self.model.jump_rate();
        let v = self.model.potential();
        let (mut now, mut x, mut integral, mut stayed) = (0.0, x0, 0.0, true);
        loop {
            let hold: f64 = if rate > 0.0 { Exp1.sample(rng) } else { f64::INFINITY };
            let next = now + hold / rate;
            if next >= t {
                integral += v[x] * (t - now);
                break;
            }
            integral += v[x] * (next - now);
            now = next;
            x = self.step(x, rng);
            stayed &= ball[x];
        }
        ((-integral).exp(), x, stayed)
    }
}

pub fn sample_ctmc_path<R: Rng + ?Sized>(model: &MarkovModel, x0: usize, t: f64, rng: &mut R) -> Result<PathSample> {
    if !(t > 0.0) || x0 >= model.len() {
        return Err(domain("need t > 0 and a valid start state"));
    }
    Ok(CtmcSampler::new(model).sample(x0, t, rng))
}

fn check_args(model: &MarkovModel, x0: usize, t: f64, n: usize) -> Result<()> {
    if !(t > 0.0) {
        return Err(domain("horizon must be positive"));
    }
    if x0 >= model.len() {
        return Err(domain(format!("start state {x0} outside the model")));
    }
    if n < 2 {
        return Err(domain("need at least two samples"));
    }
    Ok(())
}

/// Estimate of `(U_t f)(x0) = E^{x0}[e^{-∫V} f(X_t)]`.
pub fn fk_estimate(model: &MarkovModel, x0: usize, t: f64, f: &[f64], n: usize, seed: u64) -> Result<EstimateWithError> {
    check_args(model, x0, t, n)?;
    let sampler = CtmcSampler::new(model);
    let everywhere = vec![true; model.len()];
    let m = run_chunks(n, seed, Moments::merge, |rng, acc: &mut Moments| {
        let (w, x, _) = sampler.weight_and_stay(x0, t, &everywhere, rng);
        acc.push(w * f[x]);
    });
    Ok(m.estimate(seed))
}

/// Estimate of the survival-conditioned average `(U_t f)(x0) / (U_t 1)(x0)`
/// with a delta-method standard error.
pub fn fk_ratio_estimate(model: &MarkovModel, x0: usize, t: f64, f: &[f64], n: usize, seed: u64) -> Result<EstimateWithError> {
    check_args(model, x0, t, n)?;
    let sampler = CtmcSampler::new(model);
    let everywhere = vec![true; model.len()];
    let m = run_chunks(n, seed, Moments2::merge, |rng, acc: &mut Moments2| {
        let (w, x, _) = sampler.weight_and_stay(x0, t, &everywhere, rng);
        acc.push(w * f[x], w);
    });
    let r = m.ma / m.mb;
    let k = m.n - 1.0;
    let var = (m.saa - 2.0 * r * m.sab + r * r * m.sbb) / k / (m.mb * m.mb);
    Ok(EstimateWithError { mean: r, stderr: (var.max(0.0) / m.n).sqrt(), n_samples: n, seed })
}

/// Estimate of `P^{x0}(t ≤ τ)`, the probability that the path has not left
/// the closed ball of `radius` around `x0` by time `t`.
pub fn exit_probability(model: &MarkovModel, x0: usize, t: f64, radius: f64, n: usize, seed: u64) -> Result<EstimateWithError> {
    check_args(model, x0, t, n)?;
    let space = model.space();
    let ball: Vec<bool> = (0..model.len()).map(|j| space.distance(x0, j) <= radius).collect();
    let sampler = CtmcSampler::new(model);
    let m = run_chunks(n, seed, Moments::merge, |rng, acc: &mut Moments| {
        let (_, _, stayed) = sampler.weight_and_stay(x0, t, &ball, rng);
        acc.push(if stayed { 1.0 } else { 0.0 });
    });
    Ok(m.estimate(seed))
}

/// Two-sided bound on the survival mass `(U_t 1)(x0)`:
/// `e^{-t sup_B V₊} P(t ≤ τ_B) ≤ (U_t 1)(x0) ≤ (1/t) ∫₀ᵗ P_s(e^{-tV})(x0) ds`.
#[derive(Clone, Copy, Debug)]
pub struct MassSandwich {
    /// Monte Carlo estimate of the lower bound.
    pub lower: EstimateWithError,
    /// Upper bound by quadrature over the conservative semigroup.
    pub upper: f64,
}

pub fn mass_sandwich(model: &MarkovModel, x0: usize, t: f64, radius: f64, n: usize, seed: u64) -> Result<MassSandwich> {
    let p = exit_probability(model, x0, t, radius, n, seed)?;
    let space = model.space();
    let v = model.potential();
    let sup_v = (0..model.len())
        .filter(|&j| space.distance(x0, j) <= radius)
        .map(|j| v[j].max(0.0))
        .fold(0.0, f64::max);
    let factor = (-t * sup_v).exp();
    let lower = EstimateWithError { mean: factor * p.mean, stderr: factor * p.stderr, ..p };
    let upper = jensen_upper_bound(model, x0, t)?;
    Ok(MassSandwich { lower, upper })
}

/// `(1/t) ∫₀ᵗ P_s(e^{-tV})(x0) ds` with `P_s` the conservative semigroup.
pub fn jensen_upper_bound(model: &MarkovModel, x0: usize, t: f64) -> Result<f64> {
    let n = model.len();
    let r = model.jump_rate();
    let a = (model.q() - DMatrix::identity(n, n)) * r;
    let g: Vec<f64> = model.potential().iter().map(|v| (-t * v).exp()).collect();
    let failure = std::cell::RefCell::new(None);
    let out = double_exponential::integrate(
        |s| match expm_metzler(&a, s) {
            Ok(p) => (0..n).map(|y| p[(x0, y)] * g[y]).sum(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        0.0,
        t,
        1e-12,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(out.integral / t),
    }
}

/// Symmetric α-stable increment over a time step `dt`, with characteristic
/// function `exp(-dt |ξ|^α)` (Chambers–Mallows–Stuck).
pub fn sample_stable_increment<R: Rng + ?Sized>(alpha: f64, dt: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(domain(format!("stability index {alpha} outside (0, 2]")));
    }
    if !(dt > 0.0) {
        return Err(domain("time step must be positive"));
    }
    Ok(dt.powf(1.0 / alpha) * standard_stable(alpha, rng))
}

fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let u = rng.random_range(-half_pi..half_pi);
    let w: f64 = Exp1.sample(rng);
    if alpha == 1.0 {
        return u.tan();
    }
    (alpha * u).sin() / u.cos().powf(1.0 / alpha) * (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Estimate of `(U_t 1)(x0)` for the continuum fractional Schrödinger
/// semigroup `exp(-t((-Δ)^{α/2} + V))` in one dimension, from Euler paths of
/// `n_steps` stable increments and a left-endpoint Riemann sum of `V`.
pub fn fk_estimate_levy(
    alpha: f64,
    potential: &PotentialSpec,
    x0: f64,
    t: f64,
    n_steps: usize,
    n: usize,
    seed: u64,
) -> Result<EstimateWithError> {
    if n_steps < 4 || n < 2 || !(t > 0.0) {
        return Err(domain("need n_steps >= 4, n >= 2 and t > 0"));
    }
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(domain(format!("stability index {alpha} outside (0, 2]")));
    }
    if matches!(potential.kind, PotentialKind::Table(_)) {
        return Err(domain("continuum paths need a radial potential"));
    }
    let dt = t / n_steps as f64;
    let scale = dt.powf(1.0 / alpha);
    let m = run_chunks(n, seed, Moments::merge, |rng, acc: &mut Moments| {
        let mut x = x0;
        let mut integral = 0.0;
        for _ in 0..n_steps {
            integral += potential.at_radius(x.abs()) * dt;
            x += scale * standard_stable(alpha, rng);
        }
        acc.push((-integral).exp());
    });
    Ok(m.estimate(seed))
}

/// Empirical characteristic function `E cos(ξ X)` of `n` stable increments,
/// with its standard error.
pub fn stable_cf_estimate(alpha: f64, dt: f64, xi: f64, n: usize, seed: u64) -> Result<EstimateWithError> {
    sample_stable_increment(alpha, dt, &mut chunk_rng(seed, 0))?;
    let scale = dt.powf(1.0 / alpha);
    let m = run_chunks(n, seed, Moments::merge, |rng, acc: &mut Moments| {
        acc.push((xi * scale * standard_stable(alpha, rng)).cos());
    });
    Ok(m.estimate(seed))
}
