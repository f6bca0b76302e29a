//! Config-driven experiment runner: builds a model, evaluates the requested
//! diagnostics over a time grid and writes CSV series, fitted rates, the
//! spectral record and a PASS/FAIL verdict file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    asymptotic_projection_error, eta_function, find_qsd, fit_exponential_rate, fit_exponential_rate_above,
    gsd_profile, heat_content, heat_content_adjoint, heat_content_asymptotic_error, heat_content_bound,
    kernel_convergence_error, pgsd_radius, progressive_quasi_ergodic_error, qsd_from_spectral, qsd_residual,
    quasi_ergodic_error, uniqueness_condition_check, DiagnosticSeries, KappaRate, QuasiStationaryMeasure,
    SERIES_CSV_HEADER, SUMMARY_CSV_HEADER,
};
use crate::error::{Error, Result};
use crate::models::{build_ctmc_model_unchecked, KernelRecipe, ModelId, PotentialSpec};
use crate::montecarlo::{fk_estimate, MC_CSV_HEADER};
use crate::operators::{feynman_kac_operator, FkMethod, KernelOperator, MarkovModel};
use crate::spectral::{principal_triple, SpectralData};
use crate::statespace::{ExhaustingFamily, RadiusFn, StateSpace};

pub const OUTPUT_DIR_ENV: &str = "QSD_LAB_OUTPUT_DIR";
pub const THREADS_ENV: &str = "QSD_LAB_THREADS";

/// Diagnostics understood by [`run_experiment`], in report order.
pub const DIAGNOSTICS: [&str; 12] = [
    "heat_content",
    "qsd",
    "find_qsd",
    "kernel_convergence",
    "quasi_ergodic",
    "projection",
    "heat_content_asymptotics",
    "gsd_profile",
    "eta",
    "kappa",
    "uniqueness",
    "progressive_bound",
];

/// User-supplied chain for `model = "custom"`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModel {
    pub q: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub mu: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum RadiusKind {
    Linear,
    Exponential,
    Power,
    Constant,
}

/// Balls around `base` with radius `offset + slope t`, `scale e^{rate t}`,
/// `scale t^exponent` or the constant `scale`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilySpec {
    pub base: Option<usize>,
    pub radius: RadiusKind,
    pub offset: f64,
    pub slope: f64,
    pub scale: f64,
    pub rate: f64,
    pub exponent: f64,
    pub t_min: f64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self {
            base: None,
            radius: RadiusKind::Linear,
            offset: 0.0,
            slope: 1.0,
            scale: 1.0,
            rate: 1.0,
            exponent: 1.0,
            t_min: 0.0,
        }
    }
}

impl FamilySpec {
    pub fn family(&self, base: usize) -> ExhaustingFamily {
        let radius = match self.radius {
            RadiusKind::Linear => RadiusFn::Linear { offset: self.offset, slope: self.slope },
            RadiusKind::Exponential => RadiusFn::Exponential { scale: self.scale, rate: self.rate },
            RadiusKind::Power => RadiusFn::Power { scale: self.scale, exponent: self.exponent },
            RadiusKind::Constant => RadiusFn::Constant(self.scale),
        };
        ExhaustingFamily::new(base, radius, self.t_min)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticParams {
    /// Norm indices for the quasi-ergodic error (`inf` allowed).
    pub p: Vec<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Levels `C` for pGSD radii.
    pub levels: Vec<f64>,
    /// Reference time of the κ_b survival sups.
    pub t0: f64,
    /// Rate `γ` of η and κ_b; the spectral gap when absent.
    pub gamma: Option<f64>,
    /// Start state of point-mass initial measures; the family base when absent.
    pub x0: Option<usize>,
    pub family: FamilySpec,
}

impl Default for DiagnosticParams {
    fn default() -> Self {
        Self {
            p: vec![1.0, 2.0, f64::INFINITY],
            a: None,
            b: None,
            levels: vec![2.0, 5.0],
            t0: 1.0,
            gamma: None,
            x0: None,
            family: FamilySpec::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Relative tolerance between fitted decay rates and the spectral gap.
    pub rate_tol: f64,
    /// Fraction of the retained samples used by rate fits.
    pub fit_tail: f64,
    /// Samples below this value are dropped before fitting.
    pub fit_floor: f64,
    /// Fits use only `t ≥ fit_after_gaps / gap`.
    pub fit_after_gaps: f64,
    pub qsd_tol: f64,
    pub find_qsd_tol: f64,
    /// Relative tolerance of the heat-content duality check.
    pub duality_tol: f64,
    /// Monte Carlo agreement in standard errors.
    pub mc_sigmas: f64,
    /// η resolution in the family parameter.
    pub eta_resolution: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            rate_tol: 0.1,
            fit_tail: 1.0,
            fit_floor: crate::diagnostics::FIT_FLOOR,
            fit_after_gaps: 3.0,
            qsd_tol: 1e-9,
            find_qsd_tol: 1e-8,
            duality_tol: 1e-10,
            mc_sigmas: 3.0,
            eta_resolution: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct McBlock {
    pub n: usize,
    pub seed: u64,
    pub x0: Option<usize>,
}

impl Default for McBlock {
    fn default() -> Self {
        Self { n: 100_000, seed: 1, x0: None }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    pub t_grid: Vec<f64>,
    #[serde(default = "all_diagnostics")]
    pub diagnostics: Vec<String>,
    #[serde(default)]
    pub params: DiagnosticParams,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub mc: Option<McBlock>,
    pub custom: Option<CustomModel>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn all_diagnostics() -> Vec<String> {
    DIAGNOSTICS.iter().map(|s| s.to_string()).collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("qsd-lab-out")
}

/// Line of the first `key = ...` assignment in `src`.
fn key_line(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

impl ExperimentConfig {
    /// Parses and validates a TOML config. Errors name the offending line.
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate().map_err(|(key, msg)| match key_line(src, key) {
            Some(line) => Error::Parse { line, msg },
            None => Error::Config(msg),
        })?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.t_grid.is_empty() {
            return Err(("t_grid", "t_grid is empty".into()));
        }
        if self.t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(("t_grid", "t_grid must hold positive finite times".into()));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(("t_grid", "t_grid must be strictly increasing".into()));
        }
        for d in &self.diagnostics {
            if !DIAGNOSTICS.contains(&d.as_str()) {
                return Err(("diagnostics", format!("unknown diagnostic {d:?}; known: {}", DIAGNOSTICS.join(", "))));
            }
        }
        let (a, b) = (self.params.a, self.params.b);
        if let (Some(a), Some(b)) = (a, b) {
            if (a + 2.0 * b - 1.0).abs() > 1e-12 {
                return Err(("a", format!("a + 2b must equal 1, got a = {a}, b = {b}")));
            }
        }
        let (a, b) = self.split();
        if !(a > 0.0 && a < 1.0 && b > 0.0 && b < 0.5) {
            return Err(("a", format!("need a in (0, 1) and b in (0, 1/2), got a = {a}, b = {b}")));
        }
        if self.params.p.iter().any(|p| !(*p >= 1.0)) {
            return Err(("p", "norm indices must lie in [1, inf]".into()));
        }
        if self.params.levels.iter().any(|c| !(*c > 0.0)) {
            return Err(("levels", "levels must be positive".into()));
        }
        if !(self.params.t0 > 0.0) {
            return Err(("t0", "t0 must be positive".into()));
        }
        if self.model == "custom" {
            if self.custom.is_none() {
                return Err(("model", "model = \"custom\" needs a [custom] table".into()));
            }
        } else if let Err(e) = self.model.parse::<ModelId>() {
            return Err(("model", e.to_string()));
        }
        if let Some(mc) = &self.mc {
            if mc.n < 2 {
                return Err(("n", "Monte Carlo needs n >= 2".into()));
            }
        }
        Ok(())
    }

    /// `(a, b)` with `a + 2b = 1`; one value determines the other and the
    /// default is `a = b = 1/3`.
    pub fn split(&self) -> (f64, f64) {
        match (self.params.a, self.params.b) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => (a, (1.0 - a) / 2.0),
            (None, Some(b)) => (1.0 - 2.0 * b, b),
            (None, None) => (1.0 / 3.0, 1.0 / 3.0),
        }
    }

    pub fn build_model(&self) -> Result<MarkovModel> {
        if self.model == "custom" {
            let c = self.custom.as_ref().ok_or_else(|| Error::Config("missing [custom] table".into()))?;
            let n = c.q.len();
            if c.q.iter().any(|row| row.len() != n) {
                return Err(Error::Config("custom q must be square".into()));
            }
            let q = DMatrix::from_fn(n, n, |i, j| c.q[i][j]);
            let recipe = KernelRecipe::User(q);
            return build_ctmc_model_unchecked(&recipe, c.mu.clone(), &PotentialSpec::table(c.v.clone()));
        }
        self.model.parse::<ModelId>()?.build()
    }

    /// Copy with every optional knob resolved, as written to the report.
    pub fn resolved(&self, space: &StateSpace) -> Self {
        let mut c = self.clone();
        let (a, b) = self.split();
        c.params.a = Some(a);
        c.params.b = Some(b);
        let base = self.params.family.base.unwrap_or_else(|| default_base(space));
        c.params.family.base = Some(base);
        c.params.x0 = Some(self.params.x0.unwrap_or(base));
        if let Some(mc) = &mut c.mc {
            mc.x0 = Some(mc.x0.unwrap_or(base));
        }
        c
    }
}

/// State closest to the origin, or the first state without coordinates.
pub fn default_base(space: &StateSpace) -> usize {
    space
        .coords()
        .and_then(|cs| {
            (0..cs.len()).min_by(|&i, &j| {
                let n = |k: usize| cs[k].iter().map(|v| v * v).sum::<f64>();
                n(i).total_cmp(&n(j))
            })
        })
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub claim: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(claim: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { claim: claim.into(), pass, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.claim, self.detail)
    }
}

/// Everything an experiment produces.
#[derive(Clone, Debug)]
pub struct Report {
    pub model_id: String,
    pub config: ExperimentConfig,
    pub spectral: Option<String>,
    pub series: Vec<DiagnosticSeries>,
    pub mc_rows: Vec<String>,
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// 0 when every verdict passes, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            2
        }
    }

    pub fn series_csv(&self) -> String {
        let mut out = format!("{SERIES_CSV_HEADER}\n");
        for s in &self.series {
            out.push_str(&s.csv_rows(&self.model_id));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_CSV_HEADER}\n");
        for row in self.series.iter().filter_map(|s| s.summary_row(&self.model_id)) {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    pub fn mc_csv(&self) -> String {
        let mut out = format!("{MC_CSV_HEADER}\n");
        for row in &self.mc_rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }

    pub fn verdict_text(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            out.push_str(&v.line());
            out.push('\n');
        }
        let _ = writeln!(out, "overall {}", if self.all_pass() { "PASS" } else { "FAIL" });
        out
    }

    /// Writes `series.csv`, `summary.csv`, `spectral.txt`, `verdict.txt`,
    /// `config.toml` and, with a Monte Carlo block, `mc.csv`. Each file
    /// starts with a timestamp comment line.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let header = format!("# qsd-lab {} run at unix time {stamp}\n", env!("CARGO_PKG_VERSION"));
        let put = |name: &str, body: &str| fs::write(dir.join(name), format!("{header}{body}"));
        put("series.csv", &self.series_csv())?;
        put("summary.csv", &self.summary_csv())?;
        put("spectral.txt", self.spectral.as_deref().unwrap_or("unavailable\n"))?;
        put("verdict.txt", &self.verdict_text())?;
        put("config.toml", &toml::to_string(&self.config).map_err(|e| Error::Config(e.to_string()))?)?;
        if self.config.mc.is_some() {
            put("mc.csv", &self.mc_csv())?;
        }
        Ok(())
    }
}

fn fit_gap_rate(series: &mut DiagnosticSeries, gap: f64, th: &Thresholds) -> Verdict {
    let start = th.fit_after_gaps / gap;
    let late: Vec<(f64, f64)> = series.samples().iter().copied().filter(|s| s.0 >= start).collect();
    let fit = DiagnosticSeries::from_samples(series.name.clone(), &late)
        .and_then(|s| fit_exponential_rate_above(&s, th.fit_tail, th.fit_floor));
    let claim = format!("{} decays at the spectral gap", series.name);
    match fit {
        Ok(f) => {
            series.fit = Some(f);
            let rel = (-f.rate / gap - 1.0).abs();
            Verdict::new(claim, rel <= th.rate_tol, format!("rate {:.6}, gap {gap:.6}, relative deviation {rel:.3e}", -f.rate))
        }
        Err(e) => Verdict::new(claim, false, format!("no fit over t >= {start:.3}: {e}")),
    }
}

fn monotone(values: &[f64], increasing: bool) -> bool {
    values.windows(2).all(|w| if increasing { w[1] >= w[0] } else { w[1] <= w[0] * (1.0 + 1e-12) })
}

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn model_id_string(config: &ExperimentConfig) -> String {
    if config.model == "custom" {
        return "custom".into();
    }
    config.model.parse::<ModelId>().map(|m| m.to_string()).unwrap_or_else(|_| config.model.clone())
}

/// Runs every requested diagnostic on the configured model.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    let model = config.build_model()?;
    let space = model.space().clone();
    let config = config.resolved(&space);
    let th = &config.thresholds;
    let model_id = model_id_string(&config);
    let n = model.len();
    let base = config.params.family.base.expect("resolved");
    let x0 = config.params.x0.expect("resolved");
    if base >= n || x0 >= n {
        return Err(Error::Config(format!("base or start state outside the {n} model states")));
    }
    let wants = |d: &str| config.diagnostics.iter().any(|x| x == d);

    let ops: Vec<KernelOperator> = config
        .t_grid
        .par_iter()
        .map(|&t| feynman_kac_operator(&model, t, FkMethod::ExactExponential))
        .collect::<Result<_>>()?;

    let mut series = Vec::new();
    let mut verdicts = Vec::new();
    let spec = principal_triple(&model);

    if let Err(e) = &spec {
        verdicts.push(Verdict::new("principal eigentriple", false, e.to_string()));
    }

    if wants("heat_content") {
        let mut s = DiagnosticSeries::new("heat_content");
        let mut worst_bound: f64 = 0.0;
        let mut worst_dual: f64 = 0.0;
        for op in &ops {
            let z = heat_content(op);
            let bound = heat_content_bound(&model, op.t());
            worst_bound = worst_bound.max(z / bound);
            worst_dual = worst_dual.max((z - heat_content_adjoint(op)).abs() / z.max(1.0));
            s.push_with(op.t(), z, format!("bound={bound:.12e}"))?;
        }
        verdicts.push(Verdict::new("heat content below the potential bound", worst_bound <= 1.0 + 1e-12, format!("max Z/bound {worst_bound:.6}")));
        verdicts.push(Verdict::new("heat content duality", worst_dual <= th.duality_tol, format!("max relative difference {worst_dual:.3e}")));
        series.push(s);
    }

    if wants("find_qsd") {
        let mut warned = None;
        let mut worst: f64 = 0.0;
        let mut s = DiagnosticSeries::new("find_qsd_distance");
        for op in &ops {
            let found = find_qsd(op, th.find_qsd_tol)?;
            if let Some(w) = found.warning {
                warned.get_or_insert(w);
            }
            if let Ok(spec) = &spec {
                let d = found.measure.total_variation(&qsd_from_spectral(spec, space.mu(), false));
                worst = worst.max(d);
                s.push(op.t(), d)?;
            }
        }
        match warned {
            Some(w) => verdicts.push(Verdict::new("unique quasi-stationary measure", false, w.to_string())),
            None => verdicts.push(Verdict::new(
                "fixed-point QSD matches the spectral QSD",
                spec.is_ok() && worst <= th.find_qsd_tol,
                format!("max total variation {worst:.3e}"),
            )),
        }
        if !s.is_empty() {
            series.push(s);
        }
    }

    if let Ok(spec) = &spec {
        run_spectral_diagnostics(&config, &model, spec, &ops, &mut series, &mut verdicts)?;
    }

    let mut mc_rows = Vec::new();
    if let Some(mc) = &config.mc {
        let start = mc.x0.expect("resolved");
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for op in &ops {
            let est = fk_estimate(&model, start, op.t(), &vec![1.0; n], mc.n, mc.seed)?;
            let want = op.survival()[start];
            ok &= est.within(want, th.mc_sigmas);
            worst = worst.max((est.mean - want).abs() / est.stderr.max(f64::MIN_POSITIVE));
            mc_rows.push(est.csv_row(&model_id, &format!("survival@{}", space.ids()[start]), op.t()));
        }
        verdicts.push(Verdict::new(
            "Monte Carlo survival matches the matrix kernel",
            ok,
            format!("max deviation {worst:.2} standard errors"),
        ));
    }

    Ok(Report {
        model_id,
        config,
        spectral: spec.as_ref().ok().map(|s| s.to_text(&space)),
        series,
        mc_rows,
        verdicts,
    })
}

fn run_spectral_diagnostics(
    config: &ExperimentConfig,
    model: &MarkovModel,
    spec: &SpectralData,
    ops: &[KernelOperator],
    series: &mut Vec<DiagnosticSeries>,
    verdicts: &mut Vec<Verdict>,
) -> Result<()> {
    let th = &config.thresholds;
    let space: &Arc<StateSpace> = model.space();
    let n = model.len();
    let wants = |d: &str| config.diagnostics.iter().any(|x| x == d);
    let base = config.params.family.base.expect("resolved");
    let x0 = config.params.x0.expect("resolved");
    let point = QuasiStationaryMeasure::point_mass(n, x0).weights;
    let gap = spec.gap;
    let gamma = config.params.gamma.unwrap_or(gap);
    let family = config.params.family.family(base);
    let (a, b) = config.split();

    if wants("qsd") {
        let m = qsd_from_spectral(spec, space.mu(), false);
        let mut s = DiagnosticSeries::new("qsd_residual");
        for op in ops {
            s.push(op.t(), qsd_residual(&m, op)?)?;
        }
        let worst = s.values().into_iter().fold(0.0, f64::max);
        verdicts.push(Verdict::new("spectral QSD is quasi-stationary", worst <= th.qsd_tol, format!("max residual {worst:.3e}")));
        series.push(s);
    }

    if wants("kernel_convergence") {
        let mut s = DiagnosticSeries::new("kernel_convergence");
        for op in ops {
            s.push(op.t(), kernel_convergence_error(op, spec))?;
        }
        verdicts.push(fit_gap_rate(&mut s, gap, th));
        series.push(s);
    }

    if wants("quasi_ergodic") {
        let mut ps = config.params.p.clone();
        ps.sort_by(f64::total_cmp);
        let mut per_p = Vec::new();
        for &p in &ps {
            let mut s = DiagnosticSeries::new(format!("quasi_ergodic_p{}", p_label(p)));
            for op in ops {
                s.push_with(op.t(), quasi_ergodic_error(op, spec, &point, p)?, format!("x0={}", space.ids()[x0]))?;
            }
            per_p.push(s);
        }
        if let Some(last) = per_p.last_mut() {
            verdicts.push(fit_gap_rate(last, gap, th));
        }
        // The ordering in p is a property of unit or heavier atoms only.
        if ps.len() > 1 && space.mu().iter().all(|m| *m >= 1.0) {
            let ordered = (0..ops.len()).all(|k| per_p.windows(2).all(|w| w[0].samples()[k].1 <= w[1].samples()[k].1 * (1.0 + 1e-12)));
            verdicts.push(Verdict::new("quasi-ergodic error is ordered in p", ordered, format!("p = {:?}", ps.iter().map(|p| p_label(*p)).collect::<Vec<_>>())));
        }
        series.extend(per_p);
    }

    if wants("projection") {
        let mut s = DiagnosticSeries::new("projection");
        let one = vec![1.0; n];
        for op in ops {
            s.push(op.t(), asymptotic_projection_error(op, spec, &point, &one))?;
        }
        verdicts.push(fit_gap_rate(&mut s, gap, th));
        series.push(s);
    }

    if wants("heat_content_asymptotics") {
        let mut s = DiagnosticSeries::new("heat_content_asymptotics");
        for op in ops {
            s.push(op.t(), heat_content_asymptotic_error(op, spec))?;
        }
        verdicts.push(fit_gap_rate(&mut s, gap, th));
        series.push(s);
    }

    if wants("gsd_profile") {
        let mut sup = DiagnosticSeries::new("gsd_profile_sup");
        let mut radii: Vec<DiagnosticSeries> = config.params.levels.iter().map(|c| DiagnosticSeries::new(format!("pgsd_radius_C{c}"))).collect();
        let sup_phi = spec.phi0.iter().copied().fold(0.0, f64::max);
        let mut min_ratio = f64::INFINITY;
        for op in ops {
            let profile = gsd_profile(op, spec);
            let hi = profile.iter().copied().fold(0.0, f64::max);
            let lo = profile.iter().copied().fold(f64::INFINITY, f64::min);
            min_ratio = min_ratio.min(lo * sup_phi);
            sup.push(op.t(), hi)?;
            for (s, c) in radii.iter_mut().zip(&config.params.levels) {
                match pgsd_radius(&profile, space, base, *c) {
                    Some(r) => s.push(op.t(), r)?,
                    None => s.push_with(op.t(), 0.0, "void")?,
                }
            }
        }
        verdicts.push(Verdict::new(
            "GSD profile dominates 1/sup phi0",
            min_ratio >= 1.0 - 1e-9,
            format!("min profile * sup phi0 = {min_ratio:.9}"),
        ));
        series.push(sup);
        series.extend(radii);
    }

    if wants("eta") {
        let mut s = DiagnosticSeries::new("eta");
        for op in ops {
            if let Ok(e) = eta_function(spec, space, &family, gamma, op.t(), th.eta_resolution) {
                s.push(op.t(), e)?;
            }
        }
        let ok = monotone(&s.values(), true);
        verdicts.push(Verdict::new("eta is nondecreasing", ok, format!("{} admissible times", s.len())));
        series.push(s);
    }

    let kappa = if wants("kappa") || wants("progressive_bound") {
        Some(KappaRate::new(model, family.clone(), gamma, config.params.t0)?)
    } else {
        None
    };

    if wants("kappa") {
        let rate = kappa.as_ref().expect("built above");
        let mut s = DiagnosticSeries::new("kappa_b");
        for op in ops {
            if b * op.t() >= family.t_min {
                s.push_with(op.t(), rate.eval(space, b, op.t())?, format!("b={b:.6}"))?;
            }
        }
        verdicts.push(Verdict::new("kappa_b is nonincreasing", monotone(&s.values(), false), format!("{} times", s.len())));
        series.push(s);
    }

    if wants("uniqueness") {
        let t_grid: Vec<f64> = ops.iter().map(|o| o.t()).collect();
        let chk = uniqueness_condition_check(model, spec, &t_grid)?;
        let s = DiagnosticSeries::from_samples("uniqueness_sup", &chk.values)?;
        verdicts.push(Verdict::new("uniqueness condition is bounded", chk.bounded, format!("sup {:.6e}", chk.sup)));
        series.push(s);
    }

    if wants("progressive_bound") {
        let rate = kappa.as_ref().expect("built above");
        let mut err = DiagnosticSeries::new("progressive_error");
        let mut kap = DiagnosticSeries::new("progressive_kappa");
        for op in ops {
            if a * op.t() < family.t_min || b * op.t() < family.t_min {
                continue;
            }
            err.push_with(op.t(), progressive_quasi_ergodic_error(op, spec, &family, a, f64::INFINITY)?, format!("a={a:.6}"))?;
            kap.push_with(op.t(), rate.eval(space, b, op.t())?, format!("b={b:.6}"))?;
        }
        let pairs: Vec<(f64, f64)> = err.values().into_iter().zip(kap.values()).collect();
        let verdict = match pairs.first() {
            Some(&(e0, k0)) => {
                let c = e0 / k0;
                let worst = pairs.iter().map(|(e, k)| e / (c * k)).fold(0.0, f64::max);
                Verdict::new(
                    "progressive quasi-ergodic error below C kappa_b",
                    worst <= 1.0 + 1e-9,
                    format!("C = {c:.6e} calibrated at the first time, max ratio {worst:.6}"),
                )
            }
            None => Verdict::new("progressive quasi-ergodic error below C kappa_b", false, "no admissible times"),
        };
        verdicts.push(verdict);
        series.push(err);
        series.push(kap);
    }

    if let Some(s) = series.iter_mut().find(|s| s.name == "heat_content") {
        if s.len() >= 4 {
            s.fit = fit_exponential_rate(s, 1.0).ok();
        }
    }
    Ok(())
}

/// Parses `path`, runs it and writes the report. Returns the process exit
/// code: 0 all pass, 2 any failure, 1 configuration or runtime error.
pub fn run_config_file(path: &Path) -> i32 {
    let outcome = ExperimentConfig::from_file(path).and_then(|mut cfg| {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            cfg.output_dir = PathBuf::from(dir);
        }
        let report = with_thread_override(|| run_experiment(&cfg))?;
        report.write(&cfg.output_dir)?;
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            print!("{}", report.verdict_text());
            report.exit_code()
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            1
        }
    }
}

/// Runs `f` on a pool sized by the thread-count environment variable, if set.
pub fn with_thread_override<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(k) if k > 0 => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}
