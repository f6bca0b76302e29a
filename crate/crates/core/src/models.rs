//! Model zoo: CTMC builders, 1D discretized non-local Schrödinger operators
//! with polynomial or exponential Lévy profiles, the harmonic oscillator, and
//! the symbolic aGSD / heat-content regime classifier.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::operators::{mehler_kernel, KernelOperator, MarkovModel, Provenance};
use crate::statespace::StateSpace;

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// `(1 ∨ log|x|)^β`
    LogPower,
    /// `(1 ∨ |x|)^β`
    Power,
    Constant,
    /// One value per state.
    Table(Vec<f64>),
}

/// Potential profile `V`, multiplied by `scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub beta: f64,
    pub scale: f64,
}

impl PotentialSpec {
    pub fn log_power(beta: f64) -> Self {
        Self { kind: PotentialKind::LogPower, beta, scale: 1.0 }
    }

    pub fn power(beta: f64) -> Self {
        Self { kind: PotentialKind::Power, beta, scale: 1.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self { kind: PotentialKind::Constant, beta: 0.0, scale: c }
    }

    pub fn table(values: Vec<f64>) -> Self {
        Self { kind: PotentialKind::Table(values), beta: 0.0, scale: 1.0 }
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    /// Value at a point given by its Euclidean norm.
    pub fn at_radius(&self, r: f64) -> f64 {
        self.scale
            * match &self.kind {
                PotentialKind::LogPower => r.ln().max(1.0).powf(self.beta),
                PotentialKind::Power => r.max(1.0).powf(self.beta),
                PotentialKind::Constant => 1.0,
                PotentialKind::Table(_) => f64::NAN,
            }
    }

    /// Samples the potential on every point of `space` (coordinates are
    /// used through their Euclidean norm).
    pub fn sample(&self, space: &StateSpace) -> Result<Vec<f64>> {
        if let PotentialKind::Table(values) = &self.kind {
            if values.len() != space.len() {
                return Err(Error::Model(format!(
                    "potential table has {} values for {} states",
                    values.len(),
                    space.len()
                )));
            }
            return Ok(values.iter().map(|v| v * self.scale).collect());
        }
        if self.kind == PotentialKind::Constant {
            return Ok(vec![self.scale; space.len()]);
        }
        let coords = space
            .coords()
            .ok_or_else(|| Error::Model("radial potentials need coordinates".into()))?;
        Ok(coords
            .iter()
            .map(|c| self.at_radius(c.iter().map(|v| v * v).sum::<f64>().sqrt()))
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LevyKind {
    /// `|x|^{-1-α} (e ∨ |x|)^{-δ}`
    Polynomial,
    /// `e^{-m|x|} (1 ∧ |x|)^{-1-α} (1 ∨ |x|)^{-δ}`
    Exponential { m: f64 },
}

/// One-dimensional Lévy density profile, multiplied by `scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevyProfile {
    pub kind: LevyKind,
    pub alpha: f64,
    pub delta: f64,
    pub scale: f64,
}

impl LevyProfile {
    pub fn polynomial(alpha: f64, delta: f64) -> Self {
        Self { kind: LevyKind::Polynomial, alpha, delta, scale: 1.0 }
    }

    pub fn exponential(alpha: f64, delta: f64, m: f64) -> Self {
        Self { kind: LevyKind::Exponential { m }, alpha, delta, scale: 1.0 }
    }

    /// Symmetric α-stable Lévy density with characteristic exponent `|ξ|^α`:
    /// `c_α |x|^{-1-α}` with `c_α = Γ(1+α) sin(πα/2) / π`.
    pub fn stable(alpha: f64) -> Self {
        let c = statrs::function::gamma::gamma(1.0 + alpha) * (std::f64::consts::PI * alpha / 2.0).sin()
            / std::f64::consts::PI;
        Self { kind: LevyKind::Polynomial, alpha, delta: 0.0, scale: c }
    }

    pub fn density(&self, r: f64) -> f64 {
        let r = r.abs();
        let a = self.alpha;
        self.scale
            * match self.kind {
                LevyKind::Polynomial => r.powf(-1.0 - a) * r.max(std::f64::consts::E).powf(-self.delta),
                LevyKind::Exponential { m } => {
                    (-m * r).exp() * r.min(1.0).powf(-1.0 - a) * r.max(1.0).powf(-self.delta)
                }
            }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::Model(format!("stability index {} outside (0, 2)", self.alpha)));
        }
        if !(self.delta >= 0.0) || !(self.scale > 0.0) {
            return Err(Error::Model("tail exponent must be >= 0 and scale > 0".into()));
        }
        if let LevyKind::Exponential { m } = self.kind {
            if !(m > 0.0) {
                return Err(Error::Model("exponential decay rate must be positive".into()));
            }
        }
        Ok(())
    }

    /// `Σ_{k ≠ 0} ν(k h) h` over the infinite lattice.
    fn lattice_mass(&self, spacing: f64) -> f64 {
        let mut sum = 0.0;
        let mut k = 1u64;
        loop {
            let term = self.density(k as f64 * spacing) * spacing;
            sum += term;
            if term < 1e-18 * sum || k >= 2_000_000 {
                break;
            }
            k += 1;
        }
        if self.kind == LevyKind::Polynomial {
            // Integral tail of the pure power law beyond the last cell.
            let r = (k as f64 + 0.5) * spacing;
            let p = self.alpha + self.delta;
            sum += self.density(r) * r / p;
        }
        2.0 * sum
    }
}

/// Symmetric 1D lattice with `spacing` and `half_width`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub spacing: f64,
    pub half_width: f64,
}

impl Lattice {
    pub fn new(spacing: f64, half_width: f64) -> Self {
        Self { spacing, half_width }
    }

    pub fn space(&self) -> Result<StateSpace> {
        StateSpace::lattice(self.spacing, self.half_width)
    }

    pub fn points(&self) -> Vec<f64> {
        let k = (self.half_width / self.spacing + 1e-9).floor() as i64;
        (-k..=k).map(|i| i as f64 * self.spacing).collect()
    }
}

/// Jump-kernel recipes for [`build_ctmc_model`].
#[derive(Clone, Debug)]
pub enum KernelRecipe {
    /// Two states exchanging with probability one.
    Swap,
    /// Path of `n` states stepping up with probability `up`, down with
    /// `1 - up`; moves off the ends become self-loops.
    BirthDeath { n: usize, up: f64 },
    /// Nearest-neighbor walk on `{0..n-1}^d`, each of the `2d` directions
    /// with probability `1/(2d)`; blocked moves become self-loops.
    Box { d: usize, n: usize },
    /// Uniform jumps to the other `n - 1` states.
    Complete { n: usize },
    User(DMatrix<f64>),
}

impl KernelRecipe {
    fn states(&self) -> usize {
        match self {
            KernelRecipe::Swap => 2,
            KernelRecipe::BirthDeath { n, .. } | KernelRecipe::Complete { n } => *n,
            KernelRecipe::Box { d, n } => n.pow(*d as u32),
            KernelRecipe::User(q) => q.nrows(),
        }
    }

    /// Coordinates centered at the origin, when the recipe has a geometry.
    fn coords(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            KernelRecipe::Swap => Some(vec![vec![-0.5], vec![0.5]]),
            KernelRecipe::BirthDeath { n, .. } => {
                let c = (*n as f64 - 1.0) / 2.0;
                Some((0..*n).map(|k| vec![k as f64 - c]).collect())
            }
            KernelRecipe::Box { d, n } => {
                let c = (*n as f64 - 1.0) / 2.0;
                let b = StateSpace::grid_box(*d, *n).ok()?;
                Some(b.coords()?.iter().map(|p| p.iter().map(|v| v - c).collect()).collect())
            }
            KernelRecipe::Complete { .. } | KernelRecipe::User(_) => None,
        }
    }

    fn matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.states();
        Ok(match self {
            KernelRecipe::Swap => DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            KernelRecipe::BirthDeath { up, .. } => {
                if !(0.0..=1.0).contains(up) {
                    return Err(Error::Model("birth probability outside [0, 1]".into()));
                }
                let mut q = DMatrix::zeros(n, n);
                for k in 0..n {
                    let (mut stay, down) = (0.0, 1.0 - up);
                    if k + 1 < n {
                        q[(k, k + 1)] = *up;
                    } else {
                        stay += up;
                    }
                    if k > 0 {
                        q[(k, k - 1)] = down;
                    } else {
                        stay += down;
                    }
                    q[(k, k)] = stay;
                }
                q
            }
            KernelRecipe::Box { d, n: side } => {
                let mut q = DMatrix::zeros(n, n);
                let p = 1.0 / (2 * d) as f64;
                for idx in 0..n {
                    let mut stride = 1;
                    for _ in 0..*d {
                        let coord = (idx / stride) % side;
                        if coord + 1 < *side {
                            q[(idx, idx + stride)] += p;
                        } else {
                            q[(idx, idx)] += p;
                        }
                        if coord > 0 {
                            q[(idx, idx - stride)] += p;
                        } else {
                            q[(idx, idx)] += p;
                        }
                        stride *= side;
                    }
                }
                q
            }
            KernelRecipe::Complete { .. } => {
                if n < 2 {
                    return Err(Error::Model("complete graph needs two states".into()));
                }
                DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 / (n - 1) as f64 })
            }
            KernelRecipe::User(q) => q.clone(),
        })
    }
}

/// Builds a unit-rate CTMC model. `mu = None` means unit weights.
pub fn build_ctmc_model(
    recipe: &KernelRecipe,
    mu: Option<Vec<f64>>,
    potential: &PotentialSpec,
) -> Result<MarkovModel> {
    let model = build_ctmc_model_unchecked(recipe, mu, potential)?;
    if !model.is_irreducible() {
        return Err(Error::Model("jump kernel is reducible".into()));
    }
    Ok(model)
}

/// As [`build_ctmc_model`] but accepts reducible kernels, for
/// uniqueness-failure experiments.
pub fn build_ctmc_model_unchecked(
    recipe: &KernelRecipe,
    mu: Option<Vec<f64>>,
    potential: &PotentialSpec,
) -> Result<MarkovModel> {
    let n = recipe.states();
    let ids = (0..n).map(|i| i.to_string()).collect();
    let mu = mu.unwrap_or_else(|| vec![1.0; n]);
    let space = StateSpace::new(ids, recipe.coords(), mu).map_err(|e| Error::Model(e.to_string()))?;
    let v = potential.sample(&space)?;
    MarkovModel::new(Arc::new(space), recipe.matrix()?, v)
}

/// Lattice discretization of `-L + V` for a symmetric Lévy operator `L`
/// with density `levy`, restricted to the window of `grid`.
///
/// Jumps between window points have rate `ν(y - x) h`; the total rate `S`
/// over the infinite lattice is recorded as the model's jump rate, and the
/// rate of jumping out of the window is added to the potential (killing on
/// exit). Jumps shorter than one cell are cut off.
pub fn build_fractional_model(
    grid: &Lattice,
    levy: &LevyProfile,
    potential: &PotentialSpec,
) -> Result<MarkovModel> {
    levy.validate()?;
    let space = grid.space()?;
    let n = space.len();
    if n > 4001 {
        return Err(Error::Model(format!("{n} lattice points exceeds the dense-matrix budget")));
    }
    let h = grid.spacing;
    let total = levy.lattice_mass(h);
    let xs = grid.points();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                q[(i, j)] = levy.density(xs[j] - xs[i]) * h / total;
            }
        }
    }
    let mut v = potential.sample(&space)?;
    for i in 0..n {
        let out = (1.0 - q.row(i).sum()).max(0.0);
        q[(i, i)] = out;
        v[i] += total * out;
    }
    MarkovModel::with_rate(Arc::new(space), q, v, total)
}

/// Finite-difference discretization of `-Δ + |x|²` on a 1D lattice with
/// Dirichlet (killing) boundary.
pub fn build_ho_fd_model(grid: &Lattice) -> Result<MarkovModel> {
    let space = grid.space()?;
    let n = space.len();
    let h = grid.spacing;
    let rate = 2.0 / (h * h);
    let mut q = DMatrix::zeros(n, n);
    let mut v: Vec<f64> = grid.points().iter().map(|x| x * x).collect();
    for i in 0..n {
        if i > 0 {
            q[(i, i - 1)] = 0.5;
        } else {
            q[(i, i)] += 0.5;
            v[i] += 0.5 * rate;
        }
        if i + 1 < n {
            q[(i, i + 1)] = 0.5;
        } else {
            q[(i, i)] += 0.5;
            v[i] += 0.5 * rate;
        }
    }
    MarkovModel::with_rate(Arc::new(space), q, v, rate)
}

/// Mehler kernel evaluated on the lattice: a closed-form operator with
/// `μ = h`.
pub fn build_ho_discretization(grid: &Lattice, t: f64) -> Result<KernelOperator> {
    if !(t > 0.0) {
        return Err(domain("time must be positive"));
    }
    let space = Arc::new(grid.space()?);
    let xs = grid.points();
    let n = xs.len();
    let mut density = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let u = mehler_kernel(t, &[xs[i]], &[xs[j]])?;
            density[(i, j)] = u;
            density[(j, i)] = u;
        }
    }
    KernelOperator::from_density(t, density, space, Provenance::ClosedForm)
}

/// Result of the direct-jump-property scan.
#[derive(Clone, Debug, PartialEq)]
pub enum DjpOutcome {
    /// `sup_x (f₁ * f₁)(x) / f₁(x)` at the larger range.
    Constant(f64),
    /// The ratio kept growing when the range was doubled.
    Failure { ratio: f64, doubled_range_ratio: f64 },
}

/// Relative growth of the convolution ratio under range doubling that still
/// counts as stable.
pub const DJP_STABILITY: f64 = 0.10;

fn djp_ratio(profile: &dyn Fn(f64) -> f64, h: f64, half_width: f64) -> f64 {
    let k = (half_width / h).round() as i64;
    let f1 = |i: i64| -> f64 {
        if i == 0 {
            1.0
        } else {
            profile(i as f64 * h).min(1.0)
        }
    };
    // Convolution over the doubled window so that x near the edge still sees
    // both ends of the integrand.
    let vals: Vec<f64> = (-2 * k..=2 * k).map(f1).collect();
    let at = |i: i64| vals[(i + 2 * k) as usize];
    let mut worst: f64 = 0.0;
    for x in 0..=k {
        let mut conv = 0.0;
        for y in -2 * k..=2 * k {
            let z = x - y;
            if z.abs() <= 2 * k {
                conv += at(y) * at(z);
            }
        }
        conv *= h;
        let fx = at(x);
        if fx > 0.0 {
            worst = worst.max(conv / fx);
        }
    }
    worst
}

/// Checks `f₁ * f₁ ≤ c f₁` (`f₁ = f ∧ 1`) for an arbitrary radial profile on
/// the lattice window and on the window of doubled range.
pub fn check_djp_profile(profile: &dyn Fn(f64) -> f64, grid: &Lattice) -> DjpOutcome {
    let small = djp_ratio(profile, grid.spacing, grid.half_width);
    let large = djp_ratio(profile, grid.spacing, 2.0 * grid.half_width);
    if large > small * (1.0 + DJP_STABILITY) {
        DjpOutcome::Failure { ratio: small, doubled_range_ratio: large }
    } else {
        DjpOutcome::Constant(large)
    }
}

pub fn check_djp(levy: &LevyProfile, grid: &Lattice) -> DjpOutcome {
    check_djp_profile(&|r| levy.density(r), grid)
}

/// Predicted quasi-ergodic regime of `-L + V`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Agsd,
    NonAgsdFiniteHeat,
    NonAgsdInfiniteHeat,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Agsd => "aGSD",
            Regime::NonAgsdFiniteHeat => "non-aGSD-finite-Z",
            Regime::NonAgsdInfiniteHeat => "non-aGSD-infinite-Z",
        })
    }
}

/// Symbolic comparison of the growth of `V` against `|log ν|` (aGSD) and
/// against `log|x|` (finite heat content).
pub fn regime_classifier(levy: &LevyProfile, potential: &PotentialSpec) -> Result<Regime> {
    if !(potential.beta > 0.0) || !(potential.scale > 0.0) {
        return Err(Error::Classifier("potential must be confining (β > 0, scale > 0)".into()));
    }
    // Growth of each function at infinity, as (power of |x|, power of log|x|).
    let v_growth = match potential.kind {
        PotentialKind::LogPower => (0.0, potential.beta),
        PotentialKind::Power => (potential.beta, 0.0),
        _ => {
            return Err(Error::Classifier(format!(
                "no growth profile for potential kind {:?}",
                potential.kind
            )))
        }
    };
    let log_nu_growth = match levy.kind {
        LevyKind::Polynomial => (0.0, 1.0),
        LevyKind::Exponential { .. } => (1.0, 0.0),
    };
    // liminf V / g > 0 iff V grows at least as fast as g.
    let dominates = |a: (f64, f64), b: (f64, f64)| a.0 > b.0 || (a.0 == b.0 && a.1 >= b.1);
    Ok(if dominates(v_growth, log_nu_growth) {
        Regime::Agsd
    } else if dominates(v_growth, (0.0, 1.0)) {
        Regime::NonAgsdFiniteHeat
    } else {
        Regime::NonAgsdInfiniteHeat
    })
}

/// Addressable zoo models.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelId {
    /// Finite-difference harmonic oscillator on `[-8, 8]` with spacing `h`.
    Ho { spacing: f64 },
    Swap2 { v: f64 },
    BirthDeath { n: usize },
    Box { d: usize, n: usize },
    Frac { alpha: f64, delta: f64, beta: f64, kind: FracKind, spacing: f64, half_width: f64 },
}

/// Potential/profile pairing of the two fractional examples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FracKind {
    /// Polynomial Lévy density, `V = (1 ∨ log|x|)^β`.
    LogPower,
    /// Exponential Lévy density (`m = 1`), `V = (1 ∨ |x|)^β`.
    Power,
}

pub const FRAC_DEFAULT_SPACING: f64 = 0.5;
pub const FRAC_DEFAULT_HALF_WIDTH: f64 = 40.0;
pub const HO_DEFAULT_SPACING: f64 = 0.1;
/// Birth probability of the `birthdeath(n)` walk.
pub const BIRTH_DEATH_UP: f64 = 0.6;

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelId::Ho { spacing } if *spacing == HO_DEFAULT_SPACING => write!(f, "ho"),
            ModelId::Ho { spacing } => write!(f, "ho({spacing})"),
            ModelId::Swap2 { v } if *v == 0.0 => write!(f, "swap2"),
            ModelId::Swap2 { v } => write!(f, "swap2({v})"),
            ModelId::BirthDeath { n } => write!(f, "birthdeath({n})"),
            ModelId::Box { d, n } => write!(f, "box({d},{n})"),
            ModelId::Frac { alpha, delta, beta, kind, spacing, half_width } => {
                let k = match kind {
                    FracKind::LogPower => "logpower",
                    FracKind::Power => "power",
                };
                write!(f, "frac({alpha},{delta},{beta},{k}")?;
                if *spacing != FRAC_DEFAULT_SPACING || *half_width != FRAC_DEFAULT_HALF_WIDTH {
                    write!(f, ",{spacing},{half_width}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(i) => {
                let inner = s[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Config(format!("unbalanced parentheses in {s:?}")))?;
                (&s[..i], inner.split(',').map(str::trim).collect::<Vec<_>>())
            }
            None => (s, Vec::new()),
        };
        let num = |k: usize| -> Result<f64> {
            args.get(k)
                .ok_or_else(|| Error::Config(format!("{name} is missing argument {}", k + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{name} argument {}: {e}", k + 1)))
        };
        let count = |k: usize| -> Result<usize> {
            let v = num(k)?;
            if v < 1.0 || v.fract() != 0.0 {
                return Err(Error::Config(format!("{name} argument {} must be a positive integer", k + 1)));
            }
            Ok(v as usize)
        };
        let arity = |allowed: &[usize]| -> Result<()> {
            if allowed.contains(&args.len()) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} takes {allowed:?} arguments, got {}", args.len())))
            }
        };
        match name {
            "ho" => {
                arity(&[0, 1])?;
                let spacing = if args.is_empty() { HO_DEFAULT_SPACING } else { num(0)? };
                Ok(ModelId::Ho { spacing })
            }
            "swap2" => {
                arity(&[0, 1])?;
                Ok(ModelId::Swap2 { v: if args.is_empty() { 0.0 } else { num(0)? } })
            }
            "birthdeath" => {
                arity(&[1])?;
                Ok(ModelId::BirthDeath { n: count(0)? })
            }
            "box" => {
                arity(&[2])?;
                Ok(ModelId::Box { d: count(0)?, n: count(1)? })
            }
            "frac" => {
                arity(&[4, 6])?;
                let kind = match args[3].to_ascii_lowercase().replace(['-', '_'], "").as_str() {
                    "logpower" => FracKind::LogPower,
                    "power" => FracKind::Power,
                    other => return Err(Error::Config(format!("unknown frac kind {other:?}"))),
                };
                let (spacing, half_width) = if args.len() == 6 {
                    (num(4)?, num(5)?)
                } else {
                    (FRAC_DEFAULT_SPACING, FRAC_DEFAULT_HALF_WIDTH)
                };
                Ok(ModelId::Frac { alpha: num(0)?, delta: num(1)?, beta: num(2)?, kind, spacing, half_width })
            }
            other => Err(Error::Config(format!("unknown model {other:?}; see list-models"))),
        }
    }
}

impl ModelId {
    pub fn levy_and_potential(&self) -> Option<(LevyProfile, PotentialSpec)> {
        match self {
            ModelId::Frac { alpha, delta, beta, kind, .. } => Some(match kind {
                FracKind::LogPower => (LevyProfile::polynomial(*alpha, *delta), PotentialSpec::log_power(*beta)),
                FracKind::Power => (LevyProfile::exponential(*alpha, *delta, 1.0), PotentialSpec::power(*beta)),
            }),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<MarkovModel> {
        match self {
            ModelId::Ho { spacing } => build_ho_fd_model(&Lattice::new(*spacing, 8.0)),
            ModelId::Swap2 { v } => {
                build_ctmc_model(&KernelRecipe::Swap, None, &PotentialSpec::table(vec![0.0, *v]))
            }
            ModelId::BirthDeath { n } => build_ctmc_model(
                &KernelRecipe::BirthDeath { n: *n, up: BIRTH_DEATH_UP },
                None,
                &PotentialSpec::power(2.0).scaled(0.05),
            ),
            ModelId::Box { d, n } => {
                build_ctmc_model(&KernelRecipe::Box { d: *d, n: *n }, None, &PotentialSpec::power(2.0).scaled(0.1))
            }
            ModelId::Frac { spacing, half_width, .. } => {
                let (levy, v) = self.levy_and_potential().expect("frac model");
                build_fractional_model(&Lattice::new(*spacing, *half_width), &levy, &v)
            }
        }
    }
}

/// Zoo ids with parameter schemas, in a fixed order.
pub fn list_models() -> String {
    [
        "ho                         finite-difference harmonic oscillator -Δ + x² on [-8, 8] (ho(h) sets the spacing, default 0.1)",
        "swap2                      two-state swap, V = (0, 0); swap2(v) sets V = (0, v)",
        "birthdeath(n)              biased walk on n states (up 0.6, down 0.4), V = 0.05 (1 ∨ |x|)², unit weights",
        "box(d,n)                   nearest-neighbour walk on {0..n-1}^d, V = 0.1 (1 ∨ |x|)², unit weights",
        "frac(alpha,delta,beta,kind[,h,R])  lattice Lévy–Schrödinger model on [-R, R] (default h = 0.5, R = 40);",
        "                           kind = logpower: polynomial density, V = (1 ∨ log|x|)^beta",
        "                           kind = power: exponential density (m = 1), V = (1 ∨ |x|)^beta",
    ]
    .join("\n")
        + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn potential_profiles() {
        assert_eq!(PotentialSpec::log_power(2.0).at_radius(0.5), 1.0);
        assert_relative_eq!(PotentialSpec::log_power(2.0).at_radius(100.0), 100f64.ln().powi(2));
        assert_eq!(PotentialSpec::power(1.5).at_radius(0.2), 1.0);
        assert_relative_eq!(PotentialSpec::power(0.5).scaled(3.0).at_radius(4.0), 6.0);
    }

    #[test]
    fn ctmc_recipes() {
        let swap = build_ctmc_model(&KernelRecipe::Swap, None, &PotentialSpec::constant(0.0)).unwrap();
        assert_eq!(swap.q()[(0, 1)], 1.0);

        let sym = build_ctmc_model(&KernelRecipe::BirthDeath { n: 6, up: 0.5 }, None, &PotentialSpec::power(1.0)).unwrap();
        assert!((sym.q_dual() - sym.q()).amax() < 1e-16);

        let mu: Vec<f64> = (0..8).map(|k| 2f64.powi(-k)).collect();
        let geo = build_ctmc_model(&KernelRecipe::BirthDeath { n: 8, up: 0.3 }, Some(mu.clone()), &PotentialSpec::constant(0.0)).unwrap();
        for x in 0..8 {
            for y in 0..8 {
                let lhs = mu[x] * geo.q()[(x, y)];
                let rhs = mu[y] * geo.q_dual()[(y, x)];
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300));
            }
        }

        let bx = build_ctmc_model(&KernelRecipe::Box { d: 2, n: 3 }, None, &PotentialSpec::constant(0.0)).unwrap();
        assert_eq!(bx.len(), 9);
        // Corner (0, 0) is blocked in two of four directions.
        assert_eq!(bx.q()[(0, 0)], 0.5);

        let reducible = KernelRecipe::User(DMatrix::identity(3, 3));
        assert!(matches!(build_ctmc_model(&reducible, None, &PotentialSpec::constant(0.0)), Err(Error::Model(_))));
        assert!(build_ctmc_model_unchecked(&reducible, None, &PotentialSpec::constant(0.0)).is_ok());
    }

    #[test]
    fn fractional_weights() {
        let grid = Lattice::new(1.0, 10.0);
        let m = build_fractional_model(&grid, &LevyProfile::polynomial(1.0, 0.0), &PotentialSpec::log_power(1.0)).unwrap();
        // Cauchy-like: off-diagonal weights ∝ |y - x|^{-2}.
        let c = 10; // index of x = 0
        assert_relative_eq!(m.q()[(c, c + 1)] / m.q()[(c, c + 3)], 9.0, max_relative = 1e-12);
        assert!((m.q_dual() - m.q()).amax() < 1e-15);
        assert!(m.is_reversible());
        // Killing from jumps out of the window is largest at the edge.
        assert!(m.potential()[0] > m.potential()[c] + 0.1);
        assert!(build_fractional_model(&grid, &LevyProfile::polynomial(2.0, 0.0), &PotentialSpec::power(1.0)).is_err());
    }

    #[test]
    fn lattice_mass_matches_zeta() {
        // Σ_{k≥1} k^{-2} = π²/6 for h = 1, α = 1, δ = 0 (below e the cap is inactive for δ = 0).
        let m = LevyProfile::polynomial(1.0, 0.0).lattice_mass(1.0);
        assert_relative_eq!(m, std::f64::consts::PI.powi(2) / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn djp_examples() {
        let grid = Lattice::new(1.0, 200.0);
        assert!(matches!(check_djp(&LevyProfile::polynomial(0.5, 0.0), &grid), DjpOutcome::Constant(_)));
        assert!(matches!(check_djp(&LevyProfile::exponential(1.0, 1.5, 1.0), &Lattice::new(0.5, 20.0)), DjpOutcome::Constant(_)));
        let gauss = check_djp_profile(&|r: f64| (-r * r).exp(), &Lattice::new(0.25, 6.0));
        assert!(matches!(gauss, DjpOutcome::Failure { .. }), "{gauss:?}");
    }

    #[test]
    fn classifier_cells() {
        let poly = LevyProfile::polynomial(1.0, 0.0);
        let expo = LevyProfile::exponential(1.0, 1.5, 1.0);
        assert_eq!(regime_classifier(&poly, &PotentialSpec::log_power(1.0)).unwrap(), Regime::Agsd);
        assert_eq!(regime_classifier(&poly, &PotentialSpec::log_power(2.0)).unwrap(), Regime::Agsd);
        assert_eq!(regime_classifier(&poly, &PotentialSpec::log_power(0.5)).unwrap(), Regime::NonAgsdInfiniteHeat);
        assert_eq!(regime_classifier(&expo, &PotentialSpec::power(0.5)).unwrap(), Regime::NonAgsdFiniteHeat);
        assert_eq!(regime_classifier(&expo, &PotentialSpec::power(1.0)).unwrap(), Regime::Agsd);
        assert_eq!(regime_classifier(&expo, &PotentialSpec::log_power(1.0)).unwrap(), Regime::NonAgsdFiniteHeat);
        assert!(regime_classifier(&poly, &PotentialSpec::constant(1.0)).is_err());
    }

    #[test]
    fn model_ids_round_trip() {
        for s in ["ho", "swap2", "swap2(0.5)", "birthdeath(20)", "box(2,5)", "frac(1,0,2,logpower)", "frac(0.5,1.5,0.5,power,0.25,10)"] {
            let id: ModelId = s.parse().unwrap();
            assert_eq!(id.to_string(), s);
        }
        assert!("frac(1,0,2)".parse::<ModelId>().is_err());
        assert!("birthdeath(2.5)".parse::<ModelId>().is_err());
        assert!("nope".parse::<ModelId>().is_err());
        let listing = list_models();
        assert!(listing.contains("ho") && listing.contains("frac"));
        assert_eq!(listing, list_models());
    }

    #[test]
    fn ho_discretization_is_symmetric() {
        let op = build_ho_discretization(&Lattice::new(0.5, 3.0), 0.5).unwrap();
        assert!((op.density() - op.density().transpose()).amax() == 0.0);
        assert!(op.is_positivity_improving());
    }
}
