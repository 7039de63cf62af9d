//! Config-driven experiments: one TOML file names a scenario and its inputs;
//! [`run`] turns it into a [`Report`] holding bounds, oracle and Monte Carlo
//! evidence, and verdicts.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::{
    anti_order_markov, azuma_bound, bernstein_bounded_bound, bernstein_subexp_bound, chebyshev_bound, chernoff_bound,
    chernoff_kl_bound, hoeffding_bound, kl_div, laplace_bound_discrete, markov_bound, master_bound_discrete,
    optimize_theta, randomized_chernoff_bound, randomized_chernoff_hoeffding_bound, BoundResult, ChebyshevMode,
    TheoremId, ThetaGrid,
};
use crate::error::{Error, Result};
use crate::processes::{
    doob_maximal_event, partial_sum_min_eig_event, randomized_event, ville_stopped_event, EbModel, PredictionRule,
    RandomizedEvent, StoppingKind, StoppingRule,
};
use crate::samplers::{
    sample_super_uniform, sample_uniform_scalar, Atom, DiscreteMatrixDist, MartingaleKind, McDiarmidFamily,
    MultiplicativeProcess, RademacherSequence, SeedSpec, SubGaussianFactorDist, SuperUniformSpec,
};
use crate::symmat::{loewner_geq, PsdTolerance, SymMatrix};
use crate::verify::{
    check_bound_holds, enumerate_exact_probability, enumerate_exact_probability_independent,
    estimate_event_probability_with_workers, EmpiricalEstimate, ProbabilityEvidence, VerdictStatus,
    VerificationVerdict, DEFAULT_CI_LEVEL,
};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable that overrides the default seed.
pub const SEED_ENV: &str = "LOEWNER_SEED";
/// Cap on the first-hit horizon of the Ville scenarios when `params.horizon`
/// is not set.
pub const DEFAULT_VILLE_HORIZON: usize = 1000;

pub const DEFAULT_SEED: u64 = 20_240_917;
const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Markov,
    Chebyshev,
    Chernoff,
    ChernoffKl,
    Laplace,
    Master,
    BernsteinBounded,
    BernsteinSubexp,
    Azuma,
    Mcdiarmid,
    Hoeffding,
    Doob,
    Ville,
    Eb,
    RandomizedMarkov,
    RandomizedChebyshev,
    RandomizedChernoff,
    RandomizedChernoffHoeffding,
    RandomizedVille,
    RandomizedEb,
}

impl Scenario {
    pub const ALL: [Scenario; 20] = [
        Scenario::Markov,
        Scenario::Chebyshev,
        Scenario::Chernoff,
        Scenario::ChernoffKl,
        Scenario::Laplace,
        Scenario::Master,
        Scenario::BernsteinBounded,
        Scenario::BernsteinSubexp,
        Scenario::Azuma,
        Scenario::Mcdiarmid,
        Scenario::Hoeffding,
        Scenario::Doob,
        Scenario::Ville,
        Scenario::Eb,
        Scenario::RandomizedMarkov,
        Scenario::RandomizedChebyshev,
        Scenario::RandomizedChernoff,
        Scenario::RandomizedChernoffHoeffding,
        Scenario::RandomizedVille,
        Scenario::RandomizedEb,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Markov => "markov",
            Scenario::Chebyshev => "chebyshev",
            Scenario::Chernoff => "chernoff",
            Scenario::ChernoffKl => "chernoff_kl",
            Scenario::Laplace => "laplace",
            Scenario::Master => "master",
            Scenario::BernsteinBounded => "bernstein_bounded",
            Scenario::BernsteinSubexp => "bernstein_subexp",
            Scenario::Azuma => "azuma",
            Scenario::Mcdiarmid => "mcdiarmid",
            Scenario::Hoeffding => "hoeffding",
            Scenario::Doob => "doob",
            Scenario::Ville => "ville",
            Scenario::Eb => "eb",
            Scenario::RandomizedMarkov => "randomized_markov",
            Scenario::RandomizedChebyshev => "randomized_chebyshev",
            Scenario::RandomizedChernoff => "randomized_chernoff",
            Scenario::RandomizedChernoffHoeffding => "randomized_chernoff_hoeffding",
            Scenario::RandomizedVille => "randomized_ville",
            Scenario::RandomizedEb => "randomized_eb",
        }
    }

    /// Whether an exact oracle exists (discrete, finitely supported inputs).
    pub fn has_oracle(&self) -> bool {
        !matches!(
            self,
            Scenario::BernsteinSubexp
                | Scenario::Hoeffding
                | Scenario::RandomizedMarkov
                | Scenario::RandomizedChebyshev
                | Scenario::RandomizedChernoff
                | Scenario::RandomizedChernoffHoeffding
                | Scenario::RandomizedVille
                | Scenario::RandomizedEb
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario {s:?}")))
    }
}

/// Input law, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// `X = A` with probability `p`, else `0`; uses `matrices.a`.
    TightExample {
        p: f64,
    },
    Discrete {
        atoms: Vec<Atom>,
    },
    /// `X = I` with probability `m`, else `0`.
    BoundedIid {
        m: f64,
    },
    /// Independent summands, one atom list each.
    Independent {
        factors: Vec<Vec<Atom>>,
    },
    /// `Y_n = (∏ w_i) B` with `(probability, w)` factor atoms; uses `matrices.b`.
    Multiplicative {
        factors: Vec<(f64, f64)>,
        martingale: MartingaleKind,
    },
}

impl DistributionSpec {
    fn kind(&self) -> &'static str {
        match self {
            DistributionSpec::TightExample { .. } => "tight_example",
            DistributionSpec::Discrete { .. } => "discrete",
            DistributionSpec::BoundedIid { .. } => "bounded_iid",
            DistributionSpec::Independent { .. } => "independent",
            DistributionSpec::Multiplicative { .. } => "multiplicative",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixLiterals {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<SymMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<SymMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_tilde: Option<SymMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_k: Option<Vec<SymMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_k: Option<Vec<SymMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<SymMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_hat_init: Option<SymMatrix>,
}

/// When a sequential scenario evaluates its event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopAt {
    /// First time the non-randomized event holds, capped at the horizon.
    FirstHit,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    ConditionalMean,
    /// Running average seeded with `matrices.x_hat_init`.
    RunningMean,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopping: Option<StopAt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<PredictionKind>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_ci_level() -> f64 {
    DEFAULT_CI_LEVEL
}

fn is_default<T: Default + PartialEq>(x: &T) -> bool {
    *x == T::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub dim: usize,
    /// Monte Carlo trials; `0` runs the oracle only.
    #[serde(default)]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub matrices: MatrixLiterals,
    #[serde(default, skip_serializing_if = "is_default")]
    pub params: ScalarParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub super_uniform: Option<SuperUniformSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    /// Checks every field the scenario needs, without running anything.
    pub fn validate(&self) -> Result<()> {
        Inputs::new(self).and_then(|i| i.check()).and_then(build_plan).map(|_| ())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(c) = o.ci_level {
            self.ci_level = c;
        }
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub ci_level: Option<f64>,
}

/// Seed from [`SEED_ENV`], if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Formulas only.
    Bound,
    /// Oracle when available, plus Monte Carlo when `trials > 0`.
    Verify,
    /// Oracle only.
    Enumerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub mode: RunMode,
    pub bounds: Vec<BoundResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EmpiricalEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_probability: Option<f64>,
    pub verdicts: Vec<VerificationVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<VerdictStatus>,
    /// The prior anti-order bound, `d` times the first entry of `bounds`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anti_order_reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub wall_clock_seconds: f64,
    pub library_version: String,
}

impl Report {
    pub fn has_violation(&self) -> bool {
        self.status == Some(VerdictStatus::Violation)
    }
}

type EventFn = Box<dyn Fn(&mut ChaCha8Rng) -> Result<bool> + Sync>;
type ExactFn = Box<dyn Fn() -> Result<f64> + Sync>;

/// A validated scenario ready to run.
struct Plan {
    bounds: Vec<BoundResult>,
    anti_order: Option<f64>,
    exact: Option<ExactFn>,
    trial: EventFn,
    notes: Vec<String>,
}

/// Runs one experiment. Deterministic given the config and independent of
/// `workers` (`0` = all cores).
pub fn run(config: &ExperimentConfig, mode: RunMode, workers: usize) -> Result<Report> {
    let started = Instant::now();
    let scenario = config.scenario;
    let ctx = |e: Error| with_context(scenario, e);
    let plan = Inputs::new(config).and_then(|i| i.check()).and_then(build_plan).map_err(ctx)?;
    let mut report = Report {
        config: config.clone(),
        mode,
        bounds: plan.bounds,
        estimate: None,
        exact_probability: None,
        verdicts: Vec::new(),
        status: None,
        anti_order_reference: plan.anti_order,
        notes: plan.notes,
        wall_clock_seconds: 0.0,
        library_version: LIBRARY_VERSION.to_string(),
    };

    match mode {
        RunMode::Bound => {}
        RunMode::Enumerate => {
            let exact = plan
                .exact
                .as_ref()
                .ok_or_else(|| ctx(Error::Config("this scenario has no enumeration oracle".into())))?;
            report.exact_probability = Some(exact().map_err(ctx)?);
        }
        RunMode::Verify => {
            if let Some(exact) = &plan.exact {
                match exact() {
                    Ok(p) => report.exact_probability = Some(p),
                    Err(Error::CapExceeded { count, cap }) => {
                        report.notes.push(format!("oracle skipped: {count} sequences exceed the cap of {cap}"))
                    }
                    Err(e) => return Err(ctx(e)),
                }
            }
            if config.trials > 0 {
                let seed = SeedSpec::new(config.seed, scenario as u64);
                let est =
                    estimate_event_probability_with_workers(&plan.trial, config.trials, seed, config.ci_level, workers)
                        .map_err(ctx)?;
                report.estimate = Some(est);
            } else if report.exact_probability.is_none() {
                return Err(ctx(Error::Config("trials must be at least 1 when no oracle result is available".into())));
            }
        }
    }

    for bound in &report.bounds {
        if let Some(p) = report.exact_probability {
            report.verdicts.push(check_bound_holds(ProbabilityEvidence::Exact { probability: p }, bound.clone()));
        }
        if let Some(e) = &report.estimate {
            report.verdicts.push(check_bound_holds(ProbabilityEvidence::Estimate(e.clone()), bound.clone()));
        }
    }
    report.status = worst_status(report.verdicts.iter().map(|v| v.status));
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

fn worst_status(it: impl Iterator<Item = VerdictStatus>) -> Option<VerdictStatus> {
    it.max_by_key(|s| match s {
        VerdictStatus::Pass => 0,
        VerdictStatus::Tight => 1,
        VerdictStatus::Violation => 2,
    })
}

fn with_context(s: Scenario, e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{s}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{s}: {m}")),
        Error::Overflow(m) => Error::Overflow(format!("{s}: {m}")),
        Error::Evaluation(m) => Error::Evaluation(format!("{s}: {m}")),
        Error::Config(m) => Error::Config(format!("{s}: {m}")),
        Error::Io(m) => Error::Io(format!("{s}: {m}")),
        cap @ Error::CapExceeded { .. } => cap,
    }
}

/// Field access with errors that name the missing or malformed field.
struct Inputs<'a> {
    cfg: &'a ExperimentConfig,
}

impl<'a> Inputs<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        if cfg.dim == 0 {
            return Err(Error::Config("`dim` must be at least 1".into()));
        }
        if !(cfg.ci_level > 0.0 && cfg.ci_level < 1.0) {
            return Err(Error::Config(format!("`ci_level` must lie in (0, 1), got {}", cfg.ci_level)));
        }
        Ok(Inputs { cfg })
    }

    fn check(self) -> Result<Self> {
        let s = self.cfg.scenario;
        if !s.has_oracle() && self.cfg.trials == 0 {
            return Err(Error::Config("`trials` must be at least 1: this scenario is Monte Carlo only".into()));
        }
        Ok(self)
    }

    fn d(&self) -> usize {
        self.cfg.dim
    }

    fn matrix(&self, m: &Option<SymMatrix>, field: &str) -> Result<SymMatrix> {
        let m = m.as_ref().ok_or_else(|| missing(&format!("matrices.{field}")))?;
        if m.dim() != self.d() {
            return Err(Error::Config(format!(
                "`matrices.{field}` is {}x{}, but dim = {}",
                m.dim(),
                m.dim(),
                self.d()
            )));
        }
        Ok(m.clone())
    }

    fn matrix_or_identity(&self, m: &Option<SymMatrix>, field: &str) -> Result<SymMatrix> {
        match m {
            Some(_) => self.matrix(m, field),
            None => Ok(SymMatrix::identity(self.d())),
        }
    }

    fn pd_matrix(&self, m: &Option<SymMatrix>, field: &str) -> Result<SymMatrix> {
        let a = self.matrix(m, field)?;
        if !a.is_pd(PsdTolerance::default())? {
            return Err(Error::Config(format!("`matrices.{field}` must be positive definite")));
        }
        Ok(a)
    }

    fn matrix_list(&self, m: &Option<Vec<SymMatrix>>, field: &str) -> Result<Vec<SymMatrix>> {
        let list = m.as_ref().ok_or_else(|| missing(&format!("matrices.{field}")))?;
        if list.is_empty() {
            return Err(Error::Config(format!("`matrices.{field}` must not be empty")));
        }
        for (k, x) in list.iter().enumerate() {
            if x.dim() != self.d() {
                return Err(Error::Config(format!("`matrices.{field}[{k}]` does not match dim = {}", self.d())));
            }
        }
        Ok(list.clone())
    }

    fn real(&self, v: Option<f64>, field: &str) -> Result<f64> {
        let x = v.ok_or_else(|| missing(&format!("params.{field}")))?;
        if !x.is_finite() {
            return Err(Error::Config(format!("`params.{field}` must be finite")));
        }
        Ok(x)
    }

    fn open_unit(&self, v: Option<f64>, field: &str) -> Result<f64> {
        let x = self.real(v, field)?;
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Config(format!("`params.{field}` must lie in (0, 1), got {x}")));
        }
        Ok(x)
    }

    fn count(&self, v: Option<usize>, field: &str) -> Result<usize> {
        let n = v.ok_or_else(|| missing(&format!("params.{field}")))?;
        if n == 0 {
            return Err(Error::Config(format!("`params.{field}` must be at least 1")));
        }
        Ok(n)
    }

    fn distribution(&self) -> Result<&DistributionSpec> {
        self.cfg.distribution.as_ref().ok_or_else(|| missing("distribution"))
    }

    /// Single-law distribution kinds: `tight_example`, `discrete`, `bounded_iid`.
    fn discrete(&self) -> Result<DiscreteMatrixDist> {
        let dist = match self.distribution()? {
            DistributionSpec::TightExample { p } => {
                let a = self.pd_matrix(&self.cfg.matrices.a, "a")?;
                crate::samplers::tight_example_dist(&a, *p).map_err(|e| field_err("distribution.p", e))?
            }
            DistributionSpec::Discrete { atoms } => {
                DiscreteMatrixDist::new(atoms.clone()).map_err(|e| field_err("distribution.atoms", e))?
            }
            DistributionSpec::BoundedIid { m } => {
                crate::samplers::bounded_iid_dist(self.d(), *m).map_err(|e| field_err("distribution.m", e))?
            }
            other => {
                return Err(Error::Config(format!(
                    "`distribution.kind` = {:?} is not allowed here; use tight_example, discrete or bounded_iid",
                    other.kind()
                )))
            }
        };
        if dist.dim() != self.d() {
            return Err(Error::Config(format!("distribution atoms do not match dim = {}", self.d())));
        }
        Ok(dist)
    }

    fn psd_discrete(&self) -> Result<DiscreteMatrixDist> {
        let dist = self.discrete()?;
        for (k, atom) in dist.atoms().iter().enumerate() {
            if !atom.value.is_psd(PsdTolerance::default())? {
                return Err(Error::Config(format!("`distribution` atom {k} must be positive semidefinite")));
            }
        }
        Ok(dist)
    }

    fn independent(&self) -> Result<Vec<DiscreteMatrixDist>> {
        match self.distribution()? {
            DistributionSpec::Independent { factors } => {
                if factors.is_empty() {
                    return Err(Error::Config("`distribution.factors` must not be empty".into()));
                }
                factors
                    .iter()
                    .enumerate()
                    .map(|(k, atoms)| {
                        let d = DiscreteMatrixDist::new(atoms.clone())
                            .map_err(|e| field_err(&format!("distribution.factors[{k}]"), e))?;
                        if d.dim() != self.d() {
                            return Err(Error::Config(format!(
                                "`distribution.factors[{k}]` does not match dim = {}",
                                self.d()
                            )));
                        }
                        Ok(d)
                    })
                    .collect()
            }
            other => Err(Error::Config(format!("`distribution.kind` must be \"independent\", got {:?}", other.kind()))),
        }
    }

    fn multiplicative(&self, kind: MartingaleKind) -> Result<MultiplicativeProcess> {
        match self.distribution()? {
            DistributionSpec::Multiplicative { factors, martingale } => {
                if *martingale != kind {
                    return Err(Error::Config(format!(
                        "`distribution.martingale` must be {kind:?} for this scenario, got {martingale:?}"
                    )));
                }
                let b = self.matrix(&self.cfg.matrices.b, "b")?;
                MultiplicativeProcess::new(b, factors.clone(), kind).map_err(|e| field_err("distribution.factors", e))
            }
            other => {
                Err(Error::Config(format!("`distribution.kind` must be \"multiplicative\", got {:?}", other.kind())))
            }
        }
    }

    fn super_uniform(&self) -> Result<SuperUniformSpec> {
        let spec = self.cfg.super_uniform.clone().unwrap_or(SuperUniformSpec::ScalarTimesIdentity);
        spec.validate(self.d()).map_err(|e| field_err("super_uniform", e))?;
        Ok(spec)
    }

    fn eb_model(&self) -> Result<EbModel> {
        let dist = self.discrete()?;
        let gamma = self.open_unit(self.cfg.params.gamma, "gamma")?;
        let rule = match self.cfg.params.prediction.unwrap_or(PredictionKind::ConditionalMean) {
            PredictionKind::ConditionalMean => PredictionRule::ConditionalMean,
            PredictionKind::RunningMean => {
                PredictionRule::RunningMean { init: self.matrix(&self.cfg.matrices.x_hat_init, "x_hat_init")? }
            }
        };
        EbModel::new(dist, gamma, rule).map_err(|e| field_err("distribution", e))
    }
}

fn missing(field: &str) -> Error {
    Error::Config(format!("missing required field `{field}`"))
}

fn field_err(field: &str, e: Error) -> Error {
    Error::Config(format!("`{field}`: {}", strip_prefix(&e)))
}

fn plan(bounds: Vec<BoundResult>, trial: EventFn) -> Plan {
    Plan { bounds, anti_order: None, exact: None, trial, notes: Vec::new() }
}

fn tol() -> PsdTolerance {
    PsdTolerance::default()
}

fn build_plan(inp: Inputs<'_>) -> Result<Plan> {
    let cfg = inp.cfg;
    let d = inp.d();
    let prm = &cfg.params;
    let mats = &cfg.matrices;
    let grid = ThetaGrid::default();

    let p = match cfg.scenario {
        Scenario::Markov => {
            let dist = inp.psd_discrete()?;
            let a = inp.pd_matrix(&mats.a, "a")?;
            let bound = markov_bound(&dist.exact_mean(), &a)?;
            let anti = anti_order_markov(&dist.exact_mean(), &a)?;
            let (d1, a1) = (dist.clone(), a.clone());
            let mut p = plan(vec![bound], Box::new(move |rng| loewner_geq(d1.sample(rng), &a1, tol())));
            p.exact = Some(Box::new(move || enumerate_exact_probability(&dist, 1, |xs| loewner_geq(xs[0], &a, tol()))));
            p.anti_order = Some(anti);
            p
        }
        Scenario::Chebyshev => {
            let dist = inp.discrete()?;
            let a = inp.pd_matrix(&mats.a, "a")?;
            let mode = match (prm.q, prm.p) {
                (Some(_), Some(_)) => return Err(Error::Config("set only one of `params.p` and `params.q`".into())),
                (Some(q), None) => ChebyshevMode::Root(q),
                (None, p) => ChebyshevMode::Power(p.unwrap_or(2.0)),
            };
            let bound = chebyshev_bound(&dist, &a, mode).map_err(|e| field_err("params.p / params.q", e))?;
            let mean = dist.exact_mean();
            let event = move |x: &SymMatrix| loewner_geq(&(x - &mean).abs()?, &a, tol());
            let (d1, e1) = (dist.clone(), event.clone());
            let mut p = plan(vec![bound], Box::new(move |rng| e1(d1.sample(rng))));
            p.exact = Some(Box::new(move || enumerate_exact_probability(&dist, 1, |xs| event(xs[0]))));
            p
        }
        Scenario::Chernoff | Scenario::ChernoffKl => {
            let n = inp.count(prm.n, "n")?;
            let (dist, a, bounds, anti) = if cfg.scenario == Scenario::Chernoff {
                let dist = inp.discrete()?;
                let a = inp.matrix(&mats.a, "a")?;
                let t = inp.matrix_or_identity(&mats.t, "t")?;
                let t2 = inp.matrix_or_identity(&mats.t_tilde, "t_tilde")?;
                let b = chernoff_bound(&dist, &a, &t, &t2, n)?;
                (dist, a, vec![b], None)
            } else {
                let m = match inp.distribution()? {
                    DistributionSpec::BoundedIid { m } => *m,
                    _ => return Err(Error::Config("`distribution.kind` must be \"bounded_iid\"".into())),
                };
                let dist = inp.discrete()?;
                let level = inp.real(prm.a, "a")?;
                let kl = chernoff_kl_bound(n, level, m).map_err(|e| field_err("params.a", e))?;
                let anti = d as f64 * (-(n as f64) * kl_div(level, m)?).exp();
                let a = SymMatrix::scaled_identity(d, level);
                let mut bounds = vec![kl];
                if level < 1.0 {
                    // T = T̃ = √θ I at the scalar optimum θ = log(a(1 − m) / (m(1 − a)))
                    let theta = (level * (1.0 - m) / (m * (1.0 - level))).ln().max(0.0);
                    let root = SymMatrix::scaled_identity(d, theta.sqrt());
                    bounds.push(chernoff_bound(&dist, &a, &root, &root, n)?.with_note(format!("theta = {theta}")));
                }
                (dist, a, bounds, Some(anti))
            };
            let target = &a * n as f64;
            let event = move |xs: &[&SymMatrix]| {
                let owned: Vec<SymMatrix> = xs.iter().map(|x| (*x).clone()).collect();
                loewner_geq(&crate::symmat::sum(&owned)?, &target, tol())
            };
            let (d1, e1) = (dist.clone(), event.clone());
            let mut p = plan(
                bounds,
                Box::new(move |rng| {
                    let xs: Vec<&SymMatrix> = (0..n).map(|_| d1.sample(rng)).collect();
                    e1(&xs)
                }),
            );
            p.exact = Some(Box::new(move || enumerate_exact_probability(&dist, n, &event)));
            p.anti_order = anti;
            p
        }
        Scenario::Laplace => {
            let dist = inp.discrete()?;
            let t = inp.real(prm.t, "t")?;
            let bound = laplace_bound_discrete(&dist, t, &grid)?;
            let anti = anti_order_laplace(&dist, t, &grid)?;
            let d1 = dist.clone();
            let mut p =
                plan(vec![bound], Box::new(move |rng| partial_sum_min_eig_event(&[d1.sample(rng).clone()], t, 1.0)));
            p.exact = Some(Box::new(move || {
                enumerate_exact_probability(&dist, 1, |xs| partial_sum_min_eig_event(&[xs[0].clone()], t, 1.0))
            }));
            p.anti_order = Some(anti);
            p
        }
        Scenario::Master => {
            let factors = inp.independent()?;
            let t = inp.real(prm.t, "t")?;
            let bound = master_bound_discrete(&factors, t, &grid)?;
            let f1 = factors.clone();
            let mut p = plan(
                vec![bound],
                Box::new(move |rng| {
                    let xs: Vec<SymMatrix> = f1.iter().map(|f| f.sample(rng).clone()).collect();
                    partial_sum_min_eig_event(&xs, t, 1.0)
                }),
            );
            p.exact = Some(Box::new(move || independent_sum_probability(&factors, t, 1.0)));
            p
        }
        Scenario::BernsteinBounded | Scenario::Azuma => {
            let seq = RademacherSequence::new(inp.matrix_list(&mats.a_k, "a_k")?)?;
            let t = inp.real(prm.t, "t")?;
            let sigma_sq = seq.sigma_sq()?;
            let (bounds, anti) = if cfg.scenario == Scenario::Azuma {
                let b = azuma_bound(sigma_sq, t).map_err(|e| field_err("params.t / matrices.a_k", e))?;
                (vec![b], Some(d as f64 * (-t * t / (8.0 * sigma_sq)).exp()))
            } else {
                let needed = seq.max_eig_bound()?;
                let r = prm.r.unwrap_or(needed);
                if r < needed * (1.0 - 1e-12) {
                    return Err(Error::Config(format!("`params.r` = {r} is below max_k lambda_max(X_k) = {needed}")));
                }
                let (h, s) = bernstein_bounded_bound(sigma_sq, r, t).map_err(|e| field_err("params", e))?;
                (vec![h, s], None)
            };
            let s1 = seq.clone();
            let mut p = plan(bounds, Box::new(move |rng| partial_sum_min_eig_event(&s1.sample(rng), t, 1.0)));
            p.exact = Some(Box::new(move || independent_sum_probability(&seq.step_distributions(), t, 1.0)));
            p.anti_order = anti;
            p
        }
        Scenario::BernsteinSubexp => {
            let b_k = inp.matrix_list(&mats.b_k, "b_k")?;
            let t = inp.real(prm.t, "t")?;
            let needed = b_k.iter().try_fold(0.0f64, |r, b| Ok::<_, Error>(r.max(b.op_norm()?)))? / 2.0;
            let r = prm.r.unwrap_or(needed);
            if r < needed * (1.0 - 1e-12) {
                return Err(Error::Config(format!(
                    "`params.r` = {r} is below max_k ||B_k|| / 2 = {needed}, the smallest R valid for Gaussian factors"
                )));
            }
            let sq: Vec<SymMatrix> = b_k.iter().map(|b| b.square()).collect();
            let sigma_sq = crate::symmat::sum(&sq)?.op_norm()?;
            let bound = bernstein_subexp_bound(sigma_sq, r, t).map_err(|e| field_err("params", e))?;
            let fams: Vec<SubGaussianFactorDist> = b_k.into_iter().map(SubGaussianFactorDist::new).collect();
            plan(
                vec![bound],
                Box::new(move |rng| {
                    let xs: Vec<SymMatrix> = fams.iter().map(|f| f.sample(rng)).collect();
                    partial_sum_min_eig_event(&xs, t, 1.0)
                }),
            )
        }
        Scenario::Mcdiarmid => {
            let fam = McDiarmidFamily::new(inp.matrix_list(&mats.b_k, "b_k")?)?;
            let t = inp.real(prm.t, "t")?;
            let sigma_sq = fam.sigma_sq()?;
            let bound = azuma_bound(sigma_sq, t)
                .map_err(|e| field_err("params.t / matrices.b_k", e))?
                .with_theorem(TheoremId::Mcdiarmid);
            let anti = d as f64 * (-t * t / (8.0 * sigma_sq)).exp();
            let mean = fam.exact_mean();
            let event =
                move |f: &McDiarmidFamily, z: &[f64]| partial_sum_min_eig_event(&[&f.evaluate(z)? - &mean], t, 1.0);
            let (f1, e1) = (fam.clone(), event.clone());
            let mut p = plan(vec![bound], Box::new(move |rng| e1(&f1, &f1.sample_args(rng))));
            p.exact = Some(Box::new(move || {
                let mut total = 0.0;
                for (w, z) in fam.enumerate_args()? {
                    if event(&fam, &z)? {
                        total += w;
                    }
                }
                Ok(total)
            }));
            p.anti_order = Some(anti);
            p
        }
        Scenario::Hoeffding => {
            let b_k = inp.matrix_list(&mats.b_k, "b_k")?;
            let t = inp.real(prm.t, "t")?;
            let fams: Vec<SubGaussianFactorDist> = b_k.into_iter().map(SubGaussianFactorDist::new).collect();
            let v: Vec<SymMatrix> = fams.iter().map(|f| f.variance_proxy().clone()).collect();
            let bound = hoeffding_bound(&v, t).map_err(|e| field_err("params.t", e))?;
            let scale = 1.0 / fams.len() as f64;
            plan(
                vec![bound],
                Box::new(move |rng| {
                    let xs: Vec<SymMatrix> = fams.iter().map(|f| f.sample(rng)).collect();
                    partial_sum_min_eig_event(&xs, t, scale)
                }),
            )
        }
        Scenario::Doob | Scenario::Ville | Scenario::RandomizedVille => {
            let kind = if cfg.scenario == Scenario::Doob {
                MartingaleKind::Submartingale
            } else {
                MartingaleKind::Supermartingale
            };
            let proc = inp.multiplicative(kind)?;
            let a = inp.pd_matrix(&mats.a, "a")?;
            let horizon = match cfg.scenario {
                Scenario::Doob => inp.count(prm.horizon, "horizon")?,
                _ => inp.count(prm.horizon.or(Some(DEFAULT_VILLE_HORIZON)), "horizon")?,
            };
            let stop = match (cfg.scenario, prm.stopping) {
                (Scenario::Doob, Some(StopAt::Fixed)) => {
                    return Err(Error::Config("`params.stopping` must be first_hit for doob".into()))
                }
                (_, s) => s.unwrap_or(StopAt::FirstHit),
            };
            let kind = match stop {
                StopAt::FirstHit => StoppingKind::FirstHit,
                StopAt::Fixed => StoppingKind::Fixed,
            };
            let rule = StoppingRule::new(kind, horizon)?;
            maximal_plan(cfg.scenario, proc, a, rule, inp.super_uniform()?)?
        }
        Scenario::Eb | Scenario::RandomizedEb => {
            let model = inp.eb_model()?;
            let alpha = inp.open_unit(prm.alpha, "alpha")?;
            let horizon = inp.count(prm.horizon, "horizon")?;
            let randomized = cfg.scenario == Scenario::RandomizedEb;
            let default_stop = if randomized { StopAt::Fixed } else { StopAt::FirstHit };
            let fixed = prm.stopping.unwrap_or(default_stop) == StopAt::Fixed;
            let id = if randomized { TheoremId::RandomizedEmpiricalBernstein } else { TheoremId::EmpiricalBernstein };
            let bound = BoundResult::new(id, alpha).with_note(format!(
                "gamma = {}, horizon = {horizon}, stopping = {}",
                model.gamma(),
                if fixed { "fixed" } else { "first_hit" }
            ));
            let m1 = model.clone();
            let mut p = plan(
                vec![bound],
                Box::new(move |rng| {
                    let u = if randomized { Some(sample_uniform_scalar(rng)) } else { None };
                    let path = m1.sample_path(rng, horizon)?;
                    m1.alpha_event(&path, alpha, u, fixed)
                }),
            );
            if !randomized {
                p.exact = Some(Box::new(move || model.enumerate_alpha_event(horizon, alpha, fixed)));
            }
            p
        }
        Scenario::RandomizedMarkov | Scenario::RandomizedChebyshev | Scenario::RandomizedChernoff => {
            let spec = inp.super_uniform()?;
            let (dist, bound, form) = match cfg.scenario {
                Scenario::RandomizedMarkov => {
                    let dist = inp.psd_discrete()?;
                    let a = inp.pd_matrix(&mats.a, "a")?;
                    let b = markov_bound(&dist.exact_mean(), &a)?.with_theorem(TheoremId::RandomizedMarkov);
                    (dist, b, RandomizedEvent::Markov { a })
                }
                Scenario::RandomizedChebyshev => {
                    let dist = inp.discrete()?;
                    let a = inp.pd_matrix(&mats.a, "a")?;
                    let q = inp.real(prm.q, "q")?;
                    let b = chebyshev_bound(&dist, &a, ChebyshevMode::Root(q))
                        .map_err(|e| field_err("params.q", e))?
                        .with_theorem(TheoremId::RandomizedChebyshev);
                    let mean = dist.exact_mean();
                    (dist, b, RandomizedEvent::ChebyshevRoot { a, q, mean })
                }
                _ => {
                    let dist = inp.discrete()?;
                    let a = inp.matrix(&mats.a, "a")?;
                    let gamma = inp.real(prm.gamma, "gamma")?;
                    let b = randomized_chernoff_bound(&dist, &a, gamma)?;
                    (dist, b, RandomizedEvent::Chernoff { a, gamma })
                }
            };
            plan(
                vec![bound],
                Box::new(move |rng| {
                    let x = dist.sample(rng).clone();
                    let u = sample_super_uniform(&spec, d, rng);
                    randomized_event(&x, &u, &form)
                }),
            )
        }
        Scenario::RandomizedChernoffHoeffding => {
            let spec = inp.super_uniform()?;
            let dist = inp.discrete()?;
            let n = inp.count(prm.n, "n")?;
            let gamma = inp.real(prm.gamma, "gamma")?;
            let beta = inp.real(prm.beta, "beta")?;
            let bound =
                randomized_chernoff_hoeffding_bound(&dist, n, gamma, beta).map_err(|e| field_err("params", e))?;
            let form = RandomizedEvent::ChernoffHoeffding { gamma, beta, mean: dist.exact_mean() };
            plan(
                vec![bound],
                Box::new(move |rng| {
                    let xs: Vec<SymMatrix> = (0..n).map(|_| dist.sample(rng).clone()).collect();
                    let mean = &crate::symmat::sum(&xs)? * (1.0 / n as f64);
                    let u = sample_super_uniform(&spec, d, rng);
                    randomized_event(&mean, &u, &form)
                }),
            )
        }
    };
    Ok(p)
}

fn independent_sum_probability(factors: &[DiscreteMatrixDist], t: f64, scale: f64) -> Result<f64> {
    let refs: Vec<&DiscreteMatrixDist> = factors.iter().collect();
    enumerate_exact_probability_independent(&refs, |xs| {
        let owned: Vec<SymMatrix> = xs.iter().map(|x| (*x).clone()).collect();
        partial_sum_min_eig_event(&owned, t, scale)
    })
}

/// `inf_θ e^{−θt} E tr e^{θY}`, the prior `λ_max` Laplace bound, computed
/// without the `1/d` normalization.
fn anti_order_laplace(dist: &DiscreteMatrixDist, t: f64, grid: &ThetaGrid) -> Result<f64> {
    let log_tr = |th: f64| dist.log_trace_mgf(th).unwrap_or(f64::NAN);
    let zero = log_tr(0.0).exp();
    let opt = optimize_theta(|th| (-th * t + log_tr(th)).exp(), grid)?;
    Ok(opt.value.min(zero))
}

fn maximal_plan(
    scenario: Scenario,
    proc: MultiplicativeProcess,
    a: SymMatrix,
    rule: StoppingRule,
    spec: SuperUniformSpec,
) -> Result<Plan> {
    let d = proc.dim();
    let horizon = rule.horizon;
    let (id, mean) = match scenario {
        Scenario::Doob => (TheoremId::Doob, proc.exact_mean(horizon)),
        Scenario::Ville => (TheoremId::Ville, proc.exact_mean(0)),
        _ => (TheoremId::RandomizedVille, proc.exact_mean(0)),
    };
    let mut bounds = vec![markov_bound(&mean, &a)?.with_theorem(id)];
    let anti = anti_order_markov(&mean, &a)?;
    let mut notes = Vec::new();
    let randomized = scenario == Scenario::RandomizedVille;

    let event = {
        let a = a.clone();
        move |path: &[SymMatrix], u: Option<&SymMatrix>| -> Result<bool> {
            match scenario {
                Scenario::Doob => doob_maximal_event(path, &a, horizon),
                _ => ville_stopped_event(path, &rule, &a, u),
            }
        }
    };
    let exact: Option<ExactFn> = if randomized {
        None
    } else {
        let (proc, ev) = (proc.clone(), event.clone());
        Some(Box::new(move || {
            let mut total = 0.0;
            for (w, cs) in proc.enumerate_multipliers(horizon)? {
                let path: Vec<SymMatrix> = cs.iter().map(|c| &proc.b * *c).collect();
                if ev(&path, None)? {
                    total += w;
                }
            }
            Ok(total)
        }))
    };

    if scenario == Scenario::Doob {
        // tr(E[Y_N 1{∃ n ≤ N : Y_n ⪰ A}] A^{-1}) / d by enumeration
        match proc.enumerate_multipliers(horizon) {
            Ok(paths) => {
                let mut acc = 0.0;
                for (w, cs) in &paths {
                    let path: Vec<SymMatrix> = cs.iter().map(|c| &proc.b * *c).collect();
                    if event(&path, None)? {
                        acc += w * cs[horizon];
                    }
                }
                let v = markov_bound(&(&proc.b * acc), &a)?.value;
                bounds.push(BoundResult::new(TheoremId::DoobIndicator, v));
            }
            Err(Error::CapExceeded { count, cap }) => {
                notes.push(format!("indicator bound skipped: {count} paths exceed the cap of {cap}"))
            }
            Err(e) => return Err(e),
        }
    }

    let trial: EventFn = Box::new(move |rng| {
        let path = proc.sample_path(rng, horizon);
        let u = if randomized { Some(sample_super_uniform(&spec, d, rng)) } else { None };
        event(&path, u.as_ref())
    });
    Ok(Plan { bounds, anti_order: Some(anti), exact, trial, notes })
}

/// Output encodings accepted by [`emit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Config(format!("unknown format {other:?}; use json or csv"))),
        }
    }
}

pub const CSV_HEADER: &str = "scenario,d,bound,prob,ci_low,ci_high,status";

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().unwrap_or(f64::NAN));
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Report as JSON: struct field order, numbers outside the config echo
/// rounded to 12 significant digits.
pub fn report_json(report: &Report) -> Result<String> {
    let mut v = serde_json::to_value(report).map_err(|e| Error::Io(e.to_string()))?;
    if let Value::Object(map) = &mut v {
        for (k, val) in map.iter_mut() {
            if k != "config" {
                round_value(val);
            }
        }
    }
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn fmt_num(x: Option<f64>) -> String {
    x.map(|v| format!("{}", round_sig(v))).unwrap_or_default()
}

/// One CSV row, without the header.
pub fn report_csv_row(report: &Report) -> String {
    let bound = report.bounds.first().map(|b| b.value);
    let prob = report.exact_probability.or(report.estimate.as_ref().map(|e| e.p_hat));
    let (lo, hi) = match &report.estimate {
        Some(e) => (Some(e.ci_low), Some(e.ci_high)),
        None => (None, None),
    };
    let status = report.status.map(|s| s.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{}",
        report.config.scenario,
        report.config.dim,
        fmt_num(bound),
        fmt_num(prob),
        fmt_num(lo),
        fmt_num(hi),
        status
    )
}

pub fn report_csv(report: &Report) -> String {
    format!("{CSV_HEADER}\n{}\n", report_csv_row(report))
}

pub fn render(report: &Report, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => report_json(report),
        OutputFormat::Csv => Ok(report_csv(report)),
    }
}

/// Writes the rendered report, creating parent directories.
pub fn emit(report: &Report, format: OutputFormat, path: &Path) -> Result<()> {
    write_text(path, &render(report, format)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::Io(format!("{}: {e}", parent.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<VerdictStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
    pub pass: usize,
    pub tight: usize,
    pub violation: usize,
    pub errors: usize,
}

impl SuiteReport {
    pub fn success(&self) -> bool {
        self.violation == 0 && self.errors == 0
    }
}

/// `*.toml` files of `dir` in name order.
pub fn config_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

/// Verifies every config in `dir`. Per-file failures are recorded and do not
/// stop the remaining files.
pub fn suite(dir: &Path, overrides: &Overrides, workers: usize) -> Result<(SuiteReport, Vec<Report>)> {
    let mut agg = SuiteReport::default();
    let mut reports = Vec::new();
    for path in config_files(dir)? {
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        let outcome = ExperimentConfig::load(&path).and_then(|mut cfg| {
            cfg.apply(overrides);
            run(&cfg, RunMode::Verify, workers)
        });
        match outcome {
            Ok(r) => {
                match r.status {
                    Some(VerdictStatus::Violation) => agg.violation += 1,
                    Some(VerdictStatus::Tight) => agg.tight += 1,
                    _ => agg.pass += 1,
                }
                agg.entries.push(SuiteEntry { file, scenario: Some(r.config.scenario), status: r.status, error: None });
                reports.push(r);
            }
            Err(e) => {
                agg.errors += 1;
                agg.entries.push(SuiteEntry { file, scenario: None, status: None, error: Some(e.to_string()) });
            }
        }
    }
    Ok((agg, reports))
}

/// Suite summary as CSV: one row per successful report, then one
/// `error` row per failed file.
pub fn suite_csv(agg: &SuiteReport, reports: &[Report]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in reports {
        out.push_str(&report_csv_row(r));
        out.push('\n');
    }
    for e in agg.entries.iter().filter(|e| e.error.is_some()) {
        out.push_str(&format!("{},,,,,,error\n", e.file));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn markov_cfg(p: f64) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
scenario = "markov"
dim = 2
trials = 2000
seed = 7

[distribution]
kind = "tight_example"
p = {p}

[matrices]
a = [[2.0, 0.5], [0.5, 1.0]]
"#
        ))
        .unwrap()
    }

    #[test]
    fn markov_tight_report() {
        let r = run(&markov_cfg(0.25), RunMode::Verify, 1).unwrap();
        assert_relative_eq!(r.bounds[0].value, 0.25, max_relative = 1e-12);
        assert_eq!(r.exact_probability, Some(0.25));
        assert_eq!(r.verdicts[0].status, VerdictStatus::Tight);
        assert!(!r.has_violation());
        assert_relative_eq!(r.anti_order_reference.unwrap(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn zero_trials_is_oracle_only() {
        let mut cfg = markov_cfg(0.5);
        cfg.trials = 0;
        let r = run(&cfg, RunMode::Verify, 1).unwrap();
        assert!(r.estimate.is_none());
        assert_eq!(r.exact_probability, Some(0.5));
        assert_eq!(r.verdicts.len(), 1);
    }

    #[test]
    fn validation_names_fields() {
        assert!(ExperimentConfig::from_toml("scenario = \"nonsense\"\ndim = 2").is_err());
        let cfg = ExperimentConfig::from_toml(
            "scenario = \"markov\"\ndim = 2\n[distribution]\nkind = \"tight_example\"\np = 0.5",
        )
        .unwrap();
        let e = cfg.validate().unwrap_err().to_string();
        assert!(e.contains("matrices.a"), "{e}");
        let e = run(&cfg, RunMode::Bound, 1).unwrap_err().to_string();
        assert!(e.contains("markov") && e.contains("matrices.a"), "{e}");
        let cfg = ExperimentConfig::from_toml(
            "scenario = \"hoeffding\"\ndim = 1\n[matrices]\nb_k = [[[1.0]]]\n[params]\nt = 0.5",
        )
        .unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("trials"));
        assert!(ExperimentConfig::from_toml("scenario = \"markov\"\ndim = 2\nbogus = 1").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = markov_cfg(0.25);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), cfg);
    }

    #[test]
    fn csv_and_json_shapes() {
        let r = run(&markov_cfg(0.25), RunMode::Verify, 1).unwrap();
        let csv = report_csv(&r);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("markov,2,0.25,0.25,"));
        let json = report_json(&r).unwrap();
        let v: Value = serde_json::from_str(&json).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys[0], "config");
        assert_eq!(keys.last().unwrap().as_str(), "library_version");
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-123456.7890123456), -123456.789012);
    }

    #[test]
    fn enumerate_mode_requires_oracle() {
        let cfg = ExperimentConfig::from_toml(
            "scenario = \"hoeffding\"\ndim = 1\ntrials = 10\n[matrices]\nb_k = [[[1.0]]]\n[params]\nt = 0.5",
        )
        .unwrap();
        assert!(run(&cfg, RunMode::Enumerate, 1).is_err());
        assert!(run(&cfg, RunMode::Bound, 1).is_ok());
    }

    #[test]
    fn scenario_names_parse() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
    }
}
