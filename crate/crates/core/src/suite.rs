//! Named verification checks, run configurations and reports.
//!
//! Every check draws its random fixtures from a [`Sampler`] seeded with the run
//! seed plus a per-check salt, so reports are reproducible bit for bit.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caloron::{framed_inverse, Caloron, CaloronPoint, CaloronTangent};
use crate::centext::{reduced_splitting_residual, ExtensionData};
use crate::forms::{
    delta_fibre, delta_nerve, ext_d, nerve_point, nerve_tangent, FdConfig, FormError, FormResult, ScenarioPoint,
    TangentVector,
};
use crate::gerbe::{
    omega3_left, su2_volume_integral, trivial_point, trivial_tangent, BundleScenario, CurvatureRoute, Gerbe,
    PathFibration, TrivialBundle, CHART_DIM,
};
use crate::grid::ThetaGrid;
use crate::liegroup::{ad_inv, exp_alg, AlgebraElement, GroupKind};
use crate::loops::{LoopPoint, LoopVector, MIN_PATH_NODES};
use crate::sample::Sampler;

/// Report schema version.
pub const REPORT_VERSION: &str = "1.0";

/// Equation tags a report row may cite.
pub const EQUATION_REGISTRY: &[&str] = &[
    "one",
    "AF",
    "newRalpha",
    "stringclass",
    "omega3",
    "reducedsplitting",
    "epsilon",
    "curving",
    "deltadelta",
    "fourtythree",
    "fourtyfive",
    "caloronIntegral",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    PathFibration,
    TrivialBundle,
    CaloronRoundtrip,
    CentralExtension,
    All,
}

impl ScenarioName {
    pub const NAMES: [&'static str; 5] =
        ["path-fibration", "trivial-bundle", "caloron-roundtrip", "central-extension", "all"];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::PathFibration => "path-fibration",
            ScenarioName::TrivialBundle => "trivial-bundle",
            ScenarioName::CaloronRoundtrip => "caloron-roundtrip",
            ScenarioName::CentralExtension => "central-extension",
            ScenarioName::All => "all",
        }
    }

    fn includes(&self, other: ScenarioName) -> bool {
        *self == ScenarioName::All || *self == other
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupName {
    Su2,
    Su3,
}

impl GroupName {
    pub fn kind(&self) -> GroupKind {
        match self {
            GroupName::Su2 => GroupKind::Su2,
            GroupName::Su3 => GroupKind::Su3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown {what} {value:?} (expected one of: {expected})")]
pub struct ParseNameError {
    what: &'static str,
    value: String,
    expected: String,
}

fn parse_name<T: Copy>(what: &'static str, s: &str, table: &[(&'static str, T)]) -> Result<T, ParseNameError> {
    table.iter().find(|(n, _)| *n == s).map(|(_, v)| *v).ok_or_else(|| ParseNameError {
        what,
        value: s.to_string(),
        expected: table.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
    })
}

impl FromStr for ScenarioName {
    type Err = ParseNameError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use ScenarioName::*;
        let all = [PathFibration, TrivialBundle, CaloronRoundtrip, CentralExtension, All];
        let table: Vec<_> = all.iter().map(|v| (v.as_str(), *v)).collect();
        parse_name("scenario", s, &table)
    }
}

impl FromStr for GroupName {
    type Err = ParseNameError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_name("group", s, &[("su2", GroupName::Su2), ("su3", GroupName::Su3)])
    }
}

impl FromStr for ReportFormat {
    type Err = ParseNameError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_name("report format", s, &[("json", ReportFormat::Json), ("csv", ReportFormat::Csv)])
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A verification run. Missing fields deserialise to their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioName,
    pub group: GroupName,
    pub ntheta: usize,
    pub npath: usize,
    pub fd_step: f64,
    pub tol: f64,
    pub seed: u64,
    pub report: ReportFormat,
    pub out: Option<PathBuf>,
    /// Grids for the convergence study; empty means none.
    pub grids: Vec<usize>,
    /// Write zero wall times so reports are byte-identical across runs.
    pub omit_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioName::All,
            group: GroupName::Su2,
            ntheta: 64,
            npath: 256,
            fd_step: 1e-4,
            tol: 1e-6,
            seed: 1,
            report: ReportFormat::Json,
            out: None,
            grids: Vec::new(),
            omit_timing: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("ntheta must be even and at least 16, got {0}")]
    Ntheta(usize),
    #[error("npath must be at least {MIN_PATH_NODES}, got {0}")]
    Npath(usize),
    #[error("fd_step must lie in (0, 1e-2], got {0}")]
    FdStep(f64),
    #[error("tol must be positive, got {0}")]
    Tol(f64),
    #[error("convergence grids must be even and at least 16, got {0}")]
    Grid(usize),
}

fn valid_grid(n: usize) -> bool {
    n >= 16 && n.is_multiple_of(2)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !valid_grid(self.ntheta) {
            return Err(ConfigError::Ntheta(self.ntheta));
        }
        if self.npath < MIN_PATH_NODES {
            return Err(ConfigError::Npath(self.npath));
        }
        if !(self.fd_step > 0.0 && self.fd_step <= 1e-2) {
            return Err(ConfigError::FdStep(self.fd_step));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(ConfigError::Tol(self.tol));
        }
        if let Some(&g) = self.grids.iter().find(|&&g| !valid_grid(g)) {
            return Err(ConfigError::Grid(g));
        }
        Ok(())
    }

    pub fn context(&self) -> Ctx {
        Ctx {
            kind: self.group.kind(),
            ntheta: self.ntheta,
            npath: self.npath,
            fd: FdConfig { step: self.fd_step, richardson: true },
            seed: self.seed,
        }
    }
}

/// Parameters a check sees.
#[derive(Clone, Copy, Debug)]
pub struct Ctx {
    pub kind: GroupKind,
    pub ntheta: usize,
    pub npath: usize,
    pub fd: FdConfig,
    pub seed: u64,
}

impl Ctx {
    pub fn new(kind: GroupKind, ntheta: usize, seed: u64) -> Self {
        Ctx { kind, ntheta, npath: 256, fd: FdConfig::default(), seed }
    }

    fn sampler(&self, salt: u64) -> Sampler {
        Sampler::new(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt), self.kind)
    }

    fn periodic(&self) -> FormResult<ThetaGrid> {
        Ok(ThetaGrid::periodic(self.ntheta)?)
    }

    fn interval(&self) -> FormResult<ThetaGrid> {
        Ok(ThetaGrid::interval(self.ntheta)?)
    }
}

type CheckFn = fn(&Ctx, &mut Sampler) -> FormResult<f64>;

/// A registered check.
#[derive(Clone, Copy)]
pub struct Check {
    pub name: &'static str,
    pub scenario: ScenarioName,
    pub paper_ref: &'static str,
    /// Pinned tolerance; a run uses the smaller of this and the configured tol.
    pub tol: f64,
    /// Residual is dominated by finite-difference error, so the convergence
    /// study drops Richardson and ties the step to the grid.
    pub fd_dominated: bool,
    salt: u64,
    run: CheckFn,
}

impl fmt::Debug for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Check({})", self.name)
    }
}

impl Check {
    pub fn evaluate(&self, ctx: &Ctx) -> FormResult<f64> {
        let mut s = ctx.sampler(self.salt);
        (self.run)(ctx, &mut s)
    }
}

macro_rules! check {
    ($name:literal, $sc:ident, $tag:literal, $tol:expr, $fd:expr, $salt:literal, $f:path) => {
        Check {
            name: $name,
            scenario: ScenarioName::$sc,
            paper_ref: $tag,
            tol: $tol,
            fd_dominated: $fd,
            salt: $salt,
            run: $f,
        }
    };
}

/// All checks, sorted by name.
pub const CHECKS: &[Check] = &[
    check!("caloron.circle_vs_string_form", CaloronRoundtrip, "caloronIntegral", 1e-6, false, 41, caloron_circle),
    check!("caloron.connection_axioms", CaloronRoundtrip, "fourtythree", 1e-8, false, 42, caloron_axioms),
    check!("caloron.framed_inverse", CaloronRoundtrip, "fourtythree", 1e-10, false, 43, caloron_framed),
    check!("caloron.pontrjagin_identity", CaloronRoundtrip, "fourtyfive", 1e-8, true, 44, caloron_pontrjagin),
    check!("centext.d_alpha_delta_r", CentralExtension, "newRalpha", 1e-6, true, 11, d_alpha_delta_r),
    check!("centext.delta_alpha", CentralExtension, "newRalpha", 1e-8, false, 12, delta_alpha),
    check!("centext.delta_delta_nerve", CentralExtension, "deltadelta", 1e-12, false, 13, delta_delta_nerve),
    check!("centext.group_cocycle", CentralExtension, "AF", 1e-6, false, 14, group_cocycle),
    check!("gerbe.d_omega", TrivialBundle, "stringclass", 1e-6, true, 21, d_omega),
    check!("gerbe.dd_curving", TrivialBundle, "deltadelta", 1e-8, true, 22, dd_curving),
    check!("gerbe.delta_delta_fibre", TrivialBundle, "deltadelta", 1e-12, false, 23, delta_delta_fibre),
    check!("gerbe.delta_epsilon_beta", TrivialBundle, "epsilon", 1e-8, false, 24, delta_epsilon_beta),
    check!("gerbe.delta_f", TrivialBundle, "curving", 1e-6, true, 25, delta_f),
    check!("gerbe.df_string_form", TrivialBundle, "stringclass", 1e-6, true, 26, df_string_form),
    check!("gerbe.reduced_splitting", TrivialBundle, "reducedsplitting", 1e-8, false, 27, trivial_splitting),
    check!("path.reduced_splitting", PathFibration, "reducedsplitting", 1e-8, false, 31, path_splitting),
    check!("path.string_form_vs_omega3", PathFibration, "stringclass", 1e-6, true, 32, path_string_form),
    check!("path.su2_volume", PathFibration, "omega3", 1e-3, false, 33, su2_volume),
];

pub fn find_check(name: &str) -> Option<&'static Check> {
    CHECKS.iter().find(|c| c.name == name)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub paper_ref: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub name: String,
    pub grid: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: RunConfig,
    pub checks: Vec<CheckRow>,
    pub convergence: Vec<ConvergenceRow>,
}

#[derive(Serialize)]
struct CsvRecord<'a> {
    kind: &'static str,
    name: &'a str,
    paper_ref: Option<&'a str>,
    grid: Option<usize>,
    residual: f64,
    tol: Option<f64>,
    pass: Option<bool>,
    seconds: Option<f64>,
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("unknown check {0:?}")]
    UnknownCheck(String),
    #[error("convention self-test failed: {0}")]
    ConventionAbort(String),
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Flat projection: one record per check row, then one per convergence row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.checks {
            w.serialize(CsvRecord {
                kind: "check",
                name: &c.name,
                paper_ref: Some(&c.paper_ref),
                grid: None,
                residual: c.residual,
                tol: Some(c.tol),
                pass: Some(c.pass),
                seconds: Some(c.seconds),
            })
            .expect("in-memory write");
        }
        for r in &self.convergence {
            w.serialize(CsvRecord {
                kind: "convergence",
                name: &r.name,
                paper_ref: None,
                grid: Some(r.grid),
                residual: r.residual,
                tol: None,
                pass: None,
                seconds: None,
            })
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn render(&self) -> String {
        match self.config.report {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

/// Runs one check; non-convention errors become an infinite residual.
pub fn run_check(check: &Check, ctx: &Ctx) -> Result<f64, SuiteError> {
    match check.evaluate(ctx) {
        Ok(r) if r.is_nan() => Ok(f64::INFINITY),
        Ok(r) => Ok(r),
        Err(FormError::ConventionAbort(msg)) => Err(SuiteError::ConventionAbort(msg)),
        Err(_) => Ok(f64::INFINITY),
    }
}

/// Executes the selected checks and, if grids are configured, their
/// convergence study.
pub fn run(config: &RunConfig) -> Result<Report, SuiteError> {
    config.validate()?;
    let ctx = config.context();
    let selected: Vec<&Check> = CHECKS.iter().filter(|c| config.scenario.includes(c.scenario)).collect();
    let mut checks = Vec::with_capacity(selected.len());
    for c in &selected {
        let start = Instant::now();
        let residual = run_check(c, &ctx)?;
        let seconds = if config.omit_timing { 0.0 } else { start.elapsed().as_secs_f64() };
        let tol = c.tol.min(config.tol);
        checks.push(CheckRow {
            name: c.name.to_string(),
            paper_ref: c.paper_ref.to_string(),
            residual,
            tol,
            pass: residual <= tol,
            seconds,
        });
    }
    let mut convergence = Vec::new();
    if !config.grids.is_empty() {
        for c in &selected {
            convergence.extend(convergence_table(c.name, &config.grids, &ctx)?.rows);
        }
    }
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    convergence.sort_by(|a, b| a.name.cmp(&b.name).then(a.grid.cmp(&b.grid)));
    Ok(Report { version: REPORT_VERSION.to_string(), config: config.clone(), checks, convergence })
}

/// Residuals of one check over a list of grids.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `−log residual` against `log N`, for
    /// finite-difference-dominated checks.
    pub observed_order: Option<f64>,
}

/// Reruns a check at each grid size N. Finite-difference-dominated checks use
/// plain central differences with step `fd_step · N_min / N`, so the step
/// starts at the configured value and halves as the grid doubles.
pub fn convergence_table(name: &str, grids: &[usize], base: &Ctx) -> Result<ConvergenceTable, SuiteError> {
    let check = find_check(name).ok_or_else(|| SuiteError::UnknownCheck(name.to_string()))?;
    if let Some(&g) = grids.iter().find(|&&g| !valid_grid(g)) {
        return Err(ConfigError::Grid(g).into());
    }
    let coarsest = grids.iter().copied().min().unwrap_or(base.ntheta) as f64;
    let mut rows = Vec::with_capacity(grids.len());
    for &n in grids {
        let mut ctx = *base;
        ctx.ntheta = n;
        if check.fd_dominated {
            ctx.fd = FdConfig::plain(base.fd.step * coarsest / n as f64);
        }
        rows.push(ConvergenceRow { name: name.to_string(), grid: n, residual: run_check(check, &ctx)? });
    }
    let observed_order = if check.fd_dominated { observed_order(&rows) } else { None };
    Ok(ConvergenceTable { rows, observed_order })
}

/// Least-squares slope of `−log residual` against `log N`.
pub fn observed_order(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.residual > 0.0 && r.residual.is_finite())
        .map(|r| ((r.grid as f64).ln(), -r.residual.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

// ---- fixtures ----

fn trivial_gerbe(ctx: &Ctx) -> FormResult<Gerbe> {
    let grid = ctx.periodic()?;
    Gerbe::new(BundleScenario::Trivial(TrivialBundle::default_instance(&grid, ctx.kind)), ctx.fd)
}

fn path_scenario(ctx: &Ctx) -> FormResult<BundleScenario> {
    Ok(BundleScenario::Path(PathFibration::new(&ctx.interval()?, ctx.kind)?))
}

/// q points over one base point of the trivial bundle, with k tangents each.
struct Fibred {
    m: Vec<f64>,
    gs: Vec<LoopPoint>,
    u: Vec<Vec<f64>>,
    xs: Vec<Vec<LoopVector>>,
}

impl Fibred {
    fn draw(s: &mut Sampler, grid: &ThetaGrid, q: usize, k: usize) -> Self {
        let m = s.chart_point(CHART_DIM, 0.7);
        let gs = (0..q).map(|_| s.loop_point(grid)).collect();
        let u = (0..k).map(|_| s.chart_vector(CHART_DIM)).collect();
        let xs = (0..k).map(|_| (0..q).map(|_| s.loop_vector(grid, 2, 1.0)).collect()).collect();
        Fibred { m, gs, u, xs }
    }

    fn point(&self) -> ScenarioPoint {
        ScenarioPoint::Fibre(self.gs.iter().map(|g| trivial_point(&self.m, g.clone())).collect())
    }

    fn tangents(&self) -> Vec<TangentVector> {
        (0..self.u.len())
            .map(|j| TangentVector::Fibre(self.xs[j].iter().map(|x| trivial_tangent(&self.u[j], x.clone())).collect()))
            .collect()
    }

    fn total(&self, i: usize) -> ScenarioPoint {
        trivial_point(&self.m, self.gs[i].clone())
    }

    fn total_tangent(&self, i: usize, j: usize) -> TangentVector {
        trivial_tangent(&self.u[j], self.xs[j][i].clone())
    }
}

fn max_over(n: usize, mut f: impl FnMut() -> FormResult<f64>) -> FormResult<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n {
        worst = worst.max(f()?);
    }
    Ok(worst)
}

fn nerve_sample(s: &mut Sampler, grid: &ThetaGrid, q: usize, k: usize) -> (ScenarioPoint, Vec<TangentVector>) {
    let loops: Vec<LoopPoint> = (0..q).map(|_| s.loop_point(grid)).collect();
    let vs = (0..k).map(|_| nerve_tangent(&(0..q).map(|_| s.loop_vector(grid, 2, 1.0)).collect::<Vec<_>>())).collect();
    (nerve_point(&loops), vs)
}

// ---- central extension ----

fn extension(ctx: &Ctx) -> FormResult<ExtensionData> {
    ExtensionData::new(&ctx.periodic()?, ctx.kind, ctx.fd)
}

fn d_alpha_delta_r(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let ext = extension(ctx)?;
    let grid = ctx.periodic()?;
    let lhs = ext.alpha_form().d(ctx.fd);
    let rhs = delta_nerve(&ext.r_form());
    max_over(50, || {
        let (pt, vs) = nerve_sample(s, &grid, 2, 2);
        let r = rhs.eval(&pt, &vs)?;
        Ok((lhs.eval(&pt, &vs)? - r).norm() / r.norm().max(1.0))
    })
}

fn delta_alpha(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let ext = extension(ctx)?;
    let grid = ctx.periodic()?;
    let da = delta_nerve(&ext.alpha_form());
    max_over(50, || {
        let (pt, vs) = nerve_sample(s, &grid, 3, 1);
        Ok(da.eval(&pt, &vs)?.norm())
    })
}

fn delta_delta_nerve(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let ext = extension(ctx)?;
    let grid = ctx.periodic()?;
    let rr = delta_nerve(&delta_nerve(&ext.r_form()));
    let aa = delta_nerve(&delta_nerve(&ext.alpha_form()));
    max_over(10, || {
        let (pt, vs) = nerve_sample(s, &grid, 3, 2);
        let (pt4, vs4) = nerve_sample(s, &grid, 4, 1);
        Ok(rr.eval(&pt, &vs)?.norm().max(aa.eval(&pt4, &vs4)?.norm()))
    })
}

fn group_cocycle(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let ext = extension(ctx)?;
    let grid = ctx.periodic()?;
    max_over(20, || {
        let f = s.loop_group_path(&grid, ctx.npath);
        let g = s.loop_group_path(&grid, ctx.npath);
        let k = s.loop_group_path(&grid, ctx.npath);
        let lhs = ext.cocycle_c(&f, &g)? * ext.cocycle_c(&f.mul(&g)?, &k)?;
        let rhs = ext.cocycle_c(&g, &k)? * ext.cocycle_c(&f, &g.mul(&k)?)?;
        Ok((lhs - rhs).norm())
    })
}

// ---- trivial bundle gerbe ----

fn delta_epsilon_beta(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let g = trivial_gerbe(ctx)?;
    let grid = ctx.periodic()?;
    let (de, beta) = (delta_fibre(&g.epsilon()), g.beta());
    max_over(10, || {
        let f = Fibred::draw(s, &grid, 3, 1);
        Ok((de.eval(&f.point(), &f.tangents())? - beta.eval(&f.point(), &f.tangents())?).norm())
    })
}

fn delta_f(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let g = trivial_gerbe(ctx)?;
    let grid = ctx.periodic()?;
    let df = delta_fibre(&Gerbe::on_fibre1(&g.curving(CurvatureRoute::Closed)));
    let (tr, eps) = (g.tau_r(), g.epsilon());
    max_over(10, || {
        let f = Fibred::draw(s, &grid, 2, 2);
        let (p, vs) = (f.point(), f.tangents());
        let rhs = tr.eval(&p, &vs)? - ext_d(&eps, &p, &vs, &ctx.fd)?;
        Ok((df.eval(&p, &vs)? - rhs).norm())
    })
}

fn df_string_form(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let g = trivial_gerbe(ctx)?;
    let grid = ctx.periodic()?;
    let curv = g.curving(CurvatureRoute::Closed);
    let base = g.base_string_form(CurvatureRoute::Closed)?;
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    max_over(5, || {
        let f = Fibred::draw(s, &grid, 1, 3);
        let vs: Vec<_> = (0..3).map(|j| f.total_tangent(0, j)).collect();
        let df = ext_d(&curv, &f.total(0), &vs, &ctx.fd)?;
        let us: Vec<_> = f.u.iter().map(|u| TangentVector::Chart(u.clone())).collect();
        let w = base.eval(&ScenarioPoint::Chart(f.m.clone()), &us)?;
        Ok((df - two_pi_i * w).norm())
    })
}

fn d_omega(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let g = trivial_gerbe(ctx)?;
    let base = g.base_string_form(CurvatureRoute::Closed)?;
    max_over(5, || {
        let m = ScenarioPoint::Chart(s.chart_point(CHART_DIM, 0.7));
        let us: Vec<_> = (0..4).map(|_| TangentVector::Chart(s.chart_vector(CHART_DIM))).collect();
        Ok(ext_d(&base, &m, &us, &ctx.fd)?.abs())
    })
}

fn dd_curving(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let g = trivial_gerbe(ctx)?;
    let grid = ctx.periodic()?;
    // nested differences amplify round-off like ε/h², so the step is widened
    let fd = FdConfig { step: 10.0 * ctx.fd.step, ..ctx.fd };
    let ddf = g.curving(CurvatureRoute::Closed).d(fd).d(fd);
    max_over(2, || {
        let f = Fibred::draw(s, &grid, 1, 4);
        let vs: Vec<_> = (0..4).map(|j| f.total_tangent(0, j)).collect();
        Ok(ddf.eval(&f.total(0), &vs)?.norm())
    })
}

fn delta_delta_fibre(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let g = trivial_gerbe(ctx)?;
    let grid = ctx.periodic()?;
    let ff = delta_fibre(&delta_fibre(&Gerbe::on_fibre1(&g.curving(CurvatureRoute::Closed))));
    let ee = delta_fibre(&delta_fibre(&g.epsilon()));
    max_over(5, || {
        let f3 = Fibred::draw(s, &grid, 3, 2);
        let f4 = Fibred::draw(s, &grid, 4, 1);
        let a = ff.eval(&f3.point(), &f3.tangents())?.norm();
        Ok(a.max(ee.eval(&f4.point(), &f4.tangents())?.norm()))
    })
}

fn splitting_residual(sc: &BundleScenario, p: &ScenarioPoint, h: &LoopPoint, x: &LoopVector) -> FormResult<f64> {
    let ph = sc.higgs(p)?;
    let phg = sc.higgs(&sc.act(p, h)?)?;
    reduced_splitting_residual(&ph, &phg, h, x)
}

fn trivial_splitting(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let g = trivial_gerbe(ctx)?;
    let grid = ctx.periodic()?;
    max_over(10, || {
        let p = trivial_point(&s.chart_point(CHART_DIM, 0.7), s.loop_point(&grid));
        let (h, x) = (s.loop_point(&grid), s.loop_vector(&grid, 2, 1.0));
        splitting_residual(g.scenario(), &p, &h, &x)
    })
}

// ---- path fibration ----

fn path_splitting(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let sc = path_scenario(ctx)?;
    let grid = ctx.interval()?;
    max_over(10, || {
        let p = ScenarioPoint::Loop(s.path(&grid));
        let (h, x) = (s.based_loop(&grid), s.loop_vector(&grid, 2, 1.0));
        splitting_residual(&sc, &p, &h, &x)
    })
}

fn path_string_form(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let g = Gerbe::new(path_scenario(ctx)?, ctx.fd)?;
    let grid = ctx.interval()?;
    let form = g.string_form(CurvatureRoute::FiniteDifference);
    max_over(20, || {
        let p = s.path(&grid);
        let xs: Vec<LoopVector> = (0..3).map(|_| s.path_vector(&grid, 1.0)).collect();
        let ends: Vec<AlgebraElement> = xs.iter().map(|x| *x.values().last().expect("non-empty")).collect();
        let w3 = omega3_left(p.last(), &ends[0], &ends[1], &ends[2]);
        let vs: Vec<_> = xs.into_iter().map(TangentVector::Loop).collect();
        let sf = form.eval(&ScenarioPoint::Loop(p), &vs)?;
        Ok((sf - w3).abs() / w3.abs().max(1.0))
    })
}

fn su2_volume(ctx: &Ctx, _s: &mut Sampler) -> FormResult<f64> {
    Ok((su2_volume_integral((ctx.ntheta / 4).max(8))? - 1.0).abs())
}

// ---- caloron ----

fn caloron(ctx: &Ctx) -> FormResult<Caloron> {
    let grid = ctx.periodic()?;
    Ok(Caloron::new(BundleScenario::Trivial(TrivialBundle::default_instance(&grid, ctx.kind)), ctx.fd))
}

fn caloron_point(s: &mut Sampler, grid: &ThetaGrid) -> CaloronPoint {
    let p = trivial_point(&s.chart_point(CHART_DIM, 0.7), s.loop_point(grid));
    CaloronPoint { p, k: exp_alg(&s.algebra(1.0), 1.0), theta: s.uniform(0.0, 2.0 * PI) }
}

fn caloron_tangent(s: &mut Sampler, grid: &ThetaGrid) -> CaloronTangent {
    let x = trivial_tangent(&s.chart_vector(CHART_DIM), s.loop_vector(grid, 2, 1.0));
    CaloronTangent::new(x, s.algebra(1.0), s.uniform(-1.0, 1.0))
}

fn caloron_pontrjagin(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let cal = caloron(ctx)?;
    let grid = ctx.periodic()?;
    let lhs = cal.pontrjagin_form(CurvatureRoute::FiniteDifference);
    let rhs = cal.pontrjagin_rhs();
    max_over(100, || {
        let pt = caloron_point(s, &grid);
        let vs: Vec<_> = (0..4).map(|_| caloron_tangent(s, &grid)).collect();
        Ok((lhs.eval(&pt, &vs)? - rhs.eval(&pt, &vs)?).abs())
    })
}

fn caloron_circle(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let cal = caloron(ctx)?;
    let grid = ctx.periodic()?;
    let gerbe = Gerbe::new(cal.scenario().clone(), ctx.fd)?;
    let base = gerbe.base_string_form(CurvatureRoute::FiniteDifference)?;
    // a finer grid with different nodes from the loop grid
    let quad = ThetaGrid::periodic((3 * ctx.ntheta / 2 + 1) & !1)?;
    let n = ctx.kind.dim();
    max_over(20, || {
        let m = s.chart_point(CHART_DIM, 0.7);
        let us: Vec<Vec<f64>> = (0..3).map(|_| s.chart_vector(CHART_DIM)).collect();
        let p = trivial_point(&m, LoopPoint::identity(&grid, n));
        let xs = [0, 1, 2].map(|i| trivial_tangent(&us[i], LoopVector::zeros(&grid, n)));
        let got = cal.integrate_circle(&p, &xs, &quad, CurvatureRoute::Closed)?;
        let uvs: Vec<_> = us.into_iter().map(TangentVector::Chart).collect();
        let want = base.eval(&ScenarioPoint::Chart(m), &uvs)?;
        Ok((got - want).abs() / want.abs().max(1e-12))
    })
}

fn caloron_axioms(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let cal = caloron(ctx)?;
    let grid = ctx.periodic()?;
    let n = ctx.kind.dim();
    max_over(20, || {
        let pt = caloron_point(s, &grid);
        let v = caloron_tangent(s, &grid);
        let base = cal.connection(&pt, &v)?;
        let xi = s.algebra(1.0);
        let zero = trivial_tangent(&[0.0; CHART_DIM], LoopVector::zeros(&grid, n));
        let vertical = (cal.connection(&pt, &CaloronTangent::new(zero, xi, 0.0))? - xi).norm();
        let kernel = cal.connection(&pt, &cal.orbit_tangent(&pt, &s.loop_vector(&grid, 2, 1.0)))?.norm();
        let g = s.based_loop(&grid);
        let moved = cal.connection(&cal.omega_action(&pt, &g)?, &cal.omega_action_tangent(&pt, &v, &g)?)?;
        let invariance = (moved - base).norm();
        let h = exp_alg(&s.algebra(1.0), 1.0);
        let (pth, vh) = cal.k_action(&pt, &v, &h);
        let equivariance = (cal.connection(&pth, &vh)? - ad_inv(&h, &base)).norm();
        Ok(vertical.max(kernel).max(invariance).max(equivariance))
    })
}

fn caloron_framed(ctx: &Ctx, s: &mut Sampler) -> FormResult<f64> {
    let cal = caloron(ctx)?;
    let grid = ctx.periodic()?;
    max_over(10, || {
        let pt = caloron_point(s, &grid);
        let v = caloron_tangent(s, &grid);
        let (a, phi) = framed_inverse(|q, w| cal.connection(q, w), &pt.p, &v.x, &grid, ctx.kind.dim())?;
        let ea = a.sub(&cal.scenario().connection(&pt.p, &v.x)?)?.max_norm();
        let ep = phi.sub(&cal.scenario().higgs(&pt.p)?)?.max_norm();
        Ok(ea.max(ep))
    })
}
