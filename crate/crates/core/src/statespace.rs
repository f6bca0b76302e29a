//! Finite measure spaces `(M, μ)` with a metric, and exhausting families of
//! closed balls.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};

/// Distance used by a [`StateSpace`].
#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    /// Euclidean distance between coordinates.
    Euclidean,
    /// 0 on the diagonal, 1 elsewhere.
    Discrete,
    /// Explicit symmetric distance table.
    Table(DMatrix<f64>),
}

/// A finite point set with strictly positive reference weights.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    ids: Vec<String>,
    coords: Option<Vec<Vec<f64>>>,
    mu: Vec<f64>,
    metric: Metric,
}

impl StateSpace {
    /// Builds a space; the metric is Euclidean when coordinates are given and
    /// discrete otherwise.
    pub fn new(ids: Vec<String>, coords: Option<Vec<Vec<f64>>>, mu: Vec<f64>) -> Result<Self> {
        let metric = if coords.is_some() {
            Metric::Euclidean
        } else {
            Metric::Discrete
        };
        Self::with_metric(ids, coords, mu, metric)
    }

    pub fn with_metric(
        ids: Vec<String>,
        coords: Option<Vec<Vec<f64>>>,
        mu: Vec<f64>,
        metric: Metric,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(domain("state space must contain at least one point"));
        }
        if mu.len() != n {
            return Err(domain(format!("{} weights for {} points", mu.len(), n)));
        }
        if let Some((i, w)) = mu.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(domain(format!("weight of point {} is {w}, must be positive", ids[i])));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(domain(format!("duplicate point identifier {id:?}")));
            }
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(domain(format!("{} coordinate rows for {} points", c.len(), n)));
            }
            let d = c[0].len();
            if c.iter().any(|row| row.len() != d || row.iter().any(|v| !v.is_finite())) {
                return Err(domain("coordinates must be finite with a common dimension"));
            }
        }
        match &metric {
            Metric::Euclidean if coords.is_none() => {
                return Err(domain("Euclidean metric needs coordinates"));
            }
            Metric::Table(t) => {
                if t.nrows() != n || t.ncols() != n {
                    return Err(domain("distance table has the wrong shape"));
                }
                for i in 0..n {
                    if t[(i, i)] != 0.0 {
                        return Err(domain(format!("metric({0},{0}) must be 0", ids[i])));
                    }
                    for j in 0..i {
                        let (a, b) = (t[(i, j)], t[(j, i)]);
                        if !(a >= 0.0) || a != b {
                            return Err(domain(format!(
                                "metric must be symmetric and nonnegative at ({}, {})",
                                ids[i], ids[j]
                            )));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(Self { ids, coords, mu, metric })
    }

    /// Symmetric 1D lattice `{-R, -R+h, ..., R}` with weights `h`
    /// (Lebesgue measure of a cell).
    pub fn lattice(spacing: f64, half_width: f64) -> Result<Self> {
        if !(spacing > 0.0) || !(half_width >= 0.0) {
            return Err(domain("lattice needs spacing > 0 and half-width >= 0"));
        }
        let k = (half_width / spacing + 1e-9).floor() as i64;
        let pts: Vec<f64> = (-k..=k).map(|i| i as f64 * spacing).collect();
        let ids = (-k..=k).map(|i| i.to_string()).collect();
        let n = pts.len();
        Self::new(ids, Some(pts.into_iter().map(|x| vec![x]).collect()), vec![spacing; n])
    }

    /// Path `0, 1, ..., n-1` with unit weights.
    pub fn path(n: usize) -> Result<Self> {
        let ids = (0..n).map(|i| i.to_string()).collect();
        let coords = (0..n).map(|i| vec![i as f64]).collect();
        Self::new(ids, Some(coords), vec![1.0; n])
    }

    /// Box `{0..n-1}^d` in row-major order with unit weights.
    pub fn grid_box(d: usize, n: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(domain("box needs d >= 1 and n >= 1"));
        }
        let total = n.pow(d as u32);
        let mut ids = Vec::with_capacity(total);
        let mut coords = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut c = vec![0.0; d];
            for k in (0..d).rev() {
                c[k] = (rem % n) as f64;
                rem /= n;
            }
            ids.push(c.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(","));
            coords.push(c);
        }
        Self::new(ids, Some(coords), vec![1.0; total])
    }

    /// Same points and metric, weights multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::with_metric(
            self.ids.clone(),
            self.coords.clone(),
            self.mu.iter().map(|w| w * c).collect(),
            self.metric.clone(),
        )
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn coord(&self, i: usize) -> Option<&[f64]> {
        self.coords.as_ref().map(|c| c[i].as_slice())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == id)
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match &self.metric {
            Metric::Euclidean => {
                let c = self.coords.as_ref().expect("checked at construction");
                c[i].iter()
                    .zip(&c[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            }
            Metric::Discrete => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            Metric::Table(t) => t[(i, j)],
        }
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                d = d.max(self.distance(i, j));
            }
        }
        d
    }

    /// Largest distance from `base` to any point.
    pub fn eccentricity(&self, base: usize) -> f64 {
        (0..self.len()).map(|j| self.distance(base, j)).fold(0.0, f64::max)
    }

    /// Indices of the closed ball `{x : d(x, center) <= radius}`.
    pub fn ball(&self, center: usize, radius: f64) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.distance(center, j) <= radius).collect()
    }

    /// Parses a whitespace- or comma-separated table with columns
    /// `id coord... mu`. Blank lines and lines starting with `#` are skipped.
    pub fn from_table(text: &str) -> Result<Self> {
        let mut ids = Vec::new();
        let mut coords = Vec::new();
        let mut mu = Vec::new();
        let mut width = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let err = |msg: String| Error::Parse { line: lineno + 1, msg };
            if fields.len() < 2 {
                return Err(err("expected at least an id and a weight".into()));
            }
            match width {
                None => width = Some(fields.len()),
                Some(w) if w != fields.len() => {
                    return Err(err(format!("expected {w} columns, found {}", fields.len())));
                }
                _ => {}
            }
            let nums: std::result::Result<Vec<f64>, _> =
                fields[1..].iter().map(|s| s.parse::<f64>()).collect();
            let mut nums = nums.map_err(|e| err(e.to_string()))?;
            mu.push(nums.pop().expect("at least one numeric column"));
            coords.push(nums);
            ids.push(fields[0].to_string());
        }
        let has_coords = width.is_some_and(|w| w > 2);
        Self::new(ids, has_coords.then_some(coords), mu)
    }

    /// Inverse of [`StateSpace::from_table`].
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            out.push_str(&self.ids[i]);
            if let Some(c) = self.coord(i) {
                for v in c {
                    out.push_str(&format!(" {v:e}"));
                }
            }
            out.push_str(&format!(" {:e}\n", self.mu[i]));
        }
        out
    }
}

/// Radius profile `t ↦ r(t)` of an exhausting family. Must be nondecreasing.
#[derive(Clone)]
pub enum RadiusFn {
    Constant(f64),
    /// `offset + slope * t`
    Linear { offset: f64, slope: f64 },
    /// `scale * exp(rate * t)`
    Exponential { scale: f64, rate: f64 },
    /// `scale * t^exponent`
    Power { scale: f64, exponent: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl RadiusFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RadiusFn::Constant(r) => *r,
            RadiusFn::Linear { offset, slope } => offset + slope * t,
            RadiusFn::Exponential { scale, rate } => scale * (rate * t).exp(),
            RadiusFn::Power { scale, exponent } => scale * t.max(0.0).powf(*exponent),
            RadiusFn::Custom(f) => f(t),
        }
    }
}

impl fmt::Debug for RadiusFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusFn::Constant(r) => write!(f, "Constant({r})"),
            RadiusFn::Linear { offset, slope } => write!(f, "Linear({offset} + {slope} t)"),
            RadiusFn::Exponential { scale, rate } => write!(f, "Exponential({scale} e^({rate} t))"),
            RadiusFn::Power { scale, exponent } => write!(f, "Power({scale} t^{exponent})"),
            RadiusFn::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Closed balls `K_t = B(base, r(t))`, `t >= t_min`.
#[derive(Clone, Debug)]
pub struct ExhaustingFamily {
    pub base: usize,
    pub radius: RadiusFn,
    pub t_min: f64,
}

impl ExhaustingFamily {
    pub fn new(base: usize, radius: RadiusFn, t_min: f64) -> Self {
        Self { base, radius, t_min }
    }

    pub fn radius_at(&self, t: f64) -> Result<f64> {
        if t < self.t_min {
            return Err(domain(format!("time {t} is below the family's t_min {}", self.t_min)));
        }
        Ok(self.radius.eval(t))
    }

    /// Indices of `K_t`, or a domain error for `t < t_min`.
    pub fn ball_indicator(&self, space: &StateSpace, t: f64) -> Result<Vec<usize>> {
        if self.base >= space.len() {
            return Err(domain("base point outside the state space"));
        }
        Ok(space.ball(self.base, self.radius_at(t)?))
    }

    /// Membership mask of `K_t`.
    pub fn mask(&self, space: &StateSpace, t: f64) -> Result<Vec<bool>> {
        let r = self.radius_at(t)?;
        Ok((0..space.len()).map(|j| space.distance(self.base, j) <= r).collect())
    }

    /// Smallest parameter (up to `resolution`) at which `K_t` is the whole
    /// space, or `None` if the radius never reaches the eccentricity of the
    /// base point before `t_min + 1e6`.
    pub fn exhaustion_time(&self, space: &StateSpace, resolution: f64) -> Option<f64> {
        let target = space.eccentricity(self.base);
        let covers = |t: f64| self.radius.eval(t) >= target;
        if covers(self.t_min) {
            return Some(self.t_min);
        }
        let mut step = 1.0;
        let mut hi = self.t_min + step;
        while !covers(hi) {
            step *= 2.0;
            hi = self.t_min + step;
            if step > 1e6 {
                return None;
            }
        }
        let mut lo = self.t_min;
        while hi - lo > resolution {
            let mid = 0.5 * (lo + hi);
            if covers(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

/// `sup_{x, r} μ(B_r(x)) / r^{d_M}` over centers `x` and radii `r` ranging
/// over the positive pairwise distances. A one-point space uses `r = 1`.
pub fn frostman_constant(space: &StateSpace, d_m: f64) -> Result<f64> {
    if !(d_m > 0.0) {
        return Err(domain("Frostman exponent must be positive"));
    }
    let n = space.len();
    if n == 1 {
        return Ok(space.mu()[0]);
    }
    let mut best: f64 = 0.0;
    let mut radii: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in 0..i {
            radii.push(space.distance(i, j));
        }
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    for x in 0..n {
        let mut dists: Vec<(f64, f64)> =
            (0..n).map(|y| (space.distance(x, y), space.mu()[y])).collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut mass = 0.0;
        let mut k = 0;
        for &r in radii.iter().filter(|r| **r > 0.0) {
            while k < n && dists[k].0 <= r {
                mass += dists[k].1;
                k += 1;
            }
            best = best.max(mass / r.powf(d_m));
        }
    }
    Ok(best)
}
