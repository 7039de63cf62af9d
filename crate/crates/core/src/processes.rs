//! Adapted matrix sequences, trace-exponential supermartingales and the
//! Loewner-order events evaluated on realized paths.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{eb_threshold_from_sum, g_eb};
use crate::error::{Error, Result};
use crate::samplers::{enumerate_product_support, DiscreteMatrixDist};
use crate::symmat::{loewner_geq, sum, PsdTolerance, SymMatrix};

/// Slack on the `λ_min(X_n − X̂_n) ≥ −1` hypothesis.
const EB_HYPOTHESIS_SLACK: f64 = 1e-9;

/// One step of an adapted sequence: the realized value, its conditional
/// mean, and optionally the predictable quantities used by the EB process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessStep {
    pub x: SymMatrix,
    pub m: SymMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_hat: Option<SymMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl ProcessStep {
    pub fn new(x: SymMatrix, m: SymMatrix) -> Self {
        ProcessStep { x, m, x_hat: None, gamma: None }
    }

    pub fn with_prediction(mut self, x_hat: SymMatrix, gamma: f64) -> Self {
        self.x_hat = Some(x_hat);
        self.gamma = Some(gamma);
        self
    }
}

/// A realized path; construction enforces the EB hypotheses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessPath {
    dim: usize,
    steps: Vec<ProcessStep>,
}

impl ProcessPath {
    pub fn new(dim: usize) -> Self {
        ProcessPath { dim, steps: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> &[ProcessStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: ProcessStep) -> Result<()> {
        let n = self.steps.len() + 1;
        for (name, m) in [("x", Some(&step.x)), ("m", Some(&step.m)), ("x_hat", step.x_hat.as_ref())] {
            if let Some(m) = m {
                if m.dim() != self.dim {
                    return Err(Error::InvalidInput(format!(
                        "step {n}: {name} has dimension {}, expected {}",
                        m.dim(),
                        self.dim
                    )));
                }
            }
        }
        if let Some(g) = step.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::InvalidInput(format!("step {n}: gamma {g} is outside (0, 1)")));
            }
        }
        if let Some(x_hat) = &step.x_hat {
            let lo = (&step.x - x_hat).min_eig()?;
            if lo < -1.0 - EB_HYPOTHESIS_SLACK {
                return Err(Error::InvalidInput(format!(
                    "step {n}: lambda_min(X - X_hat) = {lo} violates the >= -1 hypothesis"
                )));
            }
        }
        self.steps.push(step);
        Ok(())
    }

    pub fn from_steps(dim: usize, steps: Vec<ProcessStep>) -> Result<Self> {
        let mut path = ProcessPath::new(dim);
        for s in steps {
            path.push(s)?;
        }
        Ok(path)
    }
}

/// Running sums behind `L_n^EB`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EBState {
    /// `Σ γ_i (X_i − M_i)`.
    pub z_sum: SymMatrix,
    /// `Σ g(γ_i) (X_i − X̂_i)²`.
    pub quad_sum: SymMatrix,
    pub gamma_sum: f64,
    pub n: usize,
}

impl EBState {
    pub fn new(dim: usize) -> Self {
        EBState { z_sum: SymMatrix::zeros(dim), quad_sum: SymMatrix::zeros(dim), gamma_sum: 0.0, n: 0 }
    }

    /// Absorbs one step; the step must carry `x_hat` and `gamma`.
    pub fn advance(&mut self, step: &ProcessStep) -> Result<()> {
        let n = self.n + 1;
        let (x_hat, gamma) = match (&step.x_hat, step.gamma) {
            (Some(x), Some(g)) => (x, g),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "step {n} lacks the prediction or gamma required by the EB process"
                )))
            }
        };
        let resid = &step.x - x_hat;
        self.z_sum = &self.z_sum + &(&(&step.x - &step.m) * gamma);
        self.quad_sum = &self.quad_sum + &(&resid.square() * g_eb(gamma)?);
        self.gamma_sum += gamma;
        self.n = n;
        Ok(())
    }

    /// `L_n^EB = tr exp(z_sum − quad_sum)`.
    pub fn l_value(&self) -> Result<f64> {
        Ok((&self.z_sum - &self.quad_sum).exp()?.trace())
    }

    /// `λ_min(X̄^γ − M̄^γ) ≥ (log(u/α) + λ_max(quad_sum)) / Σγ`.
    pub fn alpha_event(&self, alpha: f64, randomizer_u: Option<f64>) -> Result<bool> {
        if self.n == 0 {
            return Ok(false);
        }
        let threshold = eb_threshold_from_sum(self.gamma_sum, &self.quad_sum, alpha, randomizer_u)?;
        Ok(self.z_sum.min_eig()? / self.gamma_sum >= threshold)
    }
}

/// `(L_n, state)` for `n = 0, …, len`, starting from `L_0 = d`.
pub fn eb_trace(path: &ProcessPath) -> Result<Vec<(f64, EBState)>> {
    let mut state = EBState::new(path.dim());
    let mut out = Vec::with_capacity(path.len() + 1);
    out.push((path.dim() as f64, state.clone()));
    for step in path.steps() {
        state.advance(step)?;
        out.push((state.l_value()?, state.clone()));
    }
    Ok(out)
}

/// `tr exp(Σ Z_i − Σ (C_i + C'_i))`.
///
/// Also checks the pointwise lower bound
/// `L_n ≥ d·exp(λ_min(Σ Z_i) − λ_max(Σ (C_i + C'_i)))`, which always holds;
/// a violation beyond `1e-9` relative means a numerical fault.
pub fn generic_supermartingale_l(
    z_list: &[SymMatrix],
    c_list: &[SymMatrix],
    c_prime_list: &[SymMatrix],
) -> Result<f64> {
    if z_list.len() != c_list.len() || z_list.len() != c_prime_list.len() {
        return Err(Error::InvalidInput(format!(
            "list lengths differ: {}, {}, {}",
            z_list.len(),
            c_list.len(),
            c_prime_list.len()
        )));
    }
    let first = z_list.first().ok_or_else(|| Error::InvalidInput("need at least one step".into()))?;
    let d = first.dim();
    let mut z = SymMatrix::zeros(d);
    let mut c = SymMatrix::zeros(d);
    for ((zi, ci), cpi) in z_list.iter().zip(c_list).zip(c_prime_list) {
        first.ensure_same_dim(zi)?;
        first.ensure_same_dim(ci)?;
        first.ensure_same_dim(cpi)?;
        z = &z + zi;
        c = &(&c + ci) + cpi;
    }
    let l = (&z - &c).exp()?.trace();
    let lower = d as f64 * (z.min_eig()? - c.max_eig()?).exp();
    if l < lower * (1.0 - 1e-9) {
        return Err(Error::Evaluation(format!("trace exponential {l} fell below its lower bound {lower}")));
    }
    Ok(l)
}

/// `{∃ n ≤ N : Y_n ⪰ A}`, where `path[n]` is `Y_n` and `n` runs over
/// `0..=horizon`.
pub fn doob_maximal_event(path: &[SymMatrix], a: &SymMatrix, horizon: usize) -> Result<bool> {
    if horizon >= path.len() {
        return Err(Error::InvalidInput(format!(
            "horizon {horizon} needs {} path entries, got {}",
            horizon + 1,
            path.len()
        )));
    }
    for y in &path[..=horizon] {
        if loewner_geq(y, a, PsdTolerance::default())? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// How the stopping time `τ` is chosen, always capped at `horizon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingKind {
    /// `τ = horizon`.
    Fixed,
    /// First `n` with `Y_n ⪰ A`. The randomizer never enters this rule, so
    /// `τ` stays a stopping time of the path filtration.
    FirstHit,
    /// First `n` with `tr(Y_n) ≥ level`.
    FirstTraceAbove { level: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub kind: StoppingKind,
    pub horizon: usize,
}

impl StoppingRule {
    pub fn new(kind: StoppingKind, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("stopping horizon must be at least 1".into()));
        }
        Ok(StoppingRule { kind, horizon })
    }

    /// `τ` on the given path.
    pub fn stop_index(&self, path: &[SymMatrix], a: &SymMatrix) -> Result<usize> {
        if self.horizon >= path.len() {
            return Err(Error::InvalidInput(format!(
                "horizon {} needs {} path entries, got {}",
                self.horizon,
                self.horizon + 1,
                path.len()
            )));
        }
        match self.kind {
            StoppingKind::Fixed => Ok(self.horizon),
            StoppingKind::FirstHit => {
                for (n, y) in path[..=self.horizon].iter().enumerate() {
                    if loewner_geq(y, a, PsdTolerance::default())? {
                        return Ok(n);
                    }
                }
                Ok(self.horizon)
            }
            StoppingKind::FirstTraceAbove { level } => {
                Ok(path[..=self.horizon].iter().position(|y| y.trace() >= level).unwrap_or(self.horizon))
            }
        }
    }
}

/// `{Y_τ ⪰ A}`, or `{Y_τ ⪰ A^{1/2} U A^{1/2}}` when a randomizer `U` is
/// supplied. With the first-hit rule and no randomizer this is the capped
/// maximal event `{∃ n ≤ N : Y_n ⪰ A}`.
pub fn ville_stopped_event(
    path: &[SymMatrix],
    rule: &StoppingRule,
    a: &SymMatrix,
    u_conjugate: Option<&SymMatrix>,
) -> Result<bool> {
    let tau = rule.stop_index(path, a)?;
    let threshold = match u_conjugate {
        Some(u) => {
            a.ensure_same_dim(u)?;
            u.conjugate_by(&a.sqrt()?)
        }
        None => a.clone(),
    };
    loewner_geq(&path[tau], &threshold, PsdTolerance::default())
}

/// Randomized Loewner events; `U` is supplied separately.
#[derive(Clone, Debug, PartialEq)]
pub enum RandomizedEvent {
    /// `X ⪰ A^{1/2} U A^{1/2}`.
    Markov { a: SymMatrix },
    /// `|X − E X| ⪰ (A^{q/2} U A^{q/2})^{1/q}`.
    ChebyshevRoot { a: SymMatrix, q: f64, mean: SymMatrix },
    /// `e^{γX} ⪰ e^{γA/2} U e^{γA/2}`.
    Chernoff { a: SymMatrix, gamma: f64 },
    /// `e^{γ(X̄ − M)} ⪰ βU`, with `X̄` passed as `x`.
    ChernoffHoeffding { gamma: f64, beta: f64, mean: SymMatrix },
}

/// Evaluates a randomized event at a realized `X` and `U`.
pub fn randomized_event(x: &SymMatrix, u: &SymMatrix, form: &RandomizedEvent) -> Result<bool> {
    x.ensure_same_dim(u)?;
    let tol = PsdTolerance::default();
    match form {
        RandomizedEvent::Markov { a } => {
            a.require_pd("randomized Markov threshold")?;
            loewner_geq(x, &u.conjugate_by(&a.sqrt()?), tol)
        }
        RandomizedEvent::ChebyshevRoot { a, q, mean } => {
            if !(*q > 0.0 && *q <= 1.0) {
                return Err(Error::Domain(format!("q must lie in (0, 1], got {q}")));
            }
            a.require_pd("randomized Chebyshev threshold")?;
            let inner = u.conjugate_by(&a.powf(q / 2.0)?);
            let threshold = if *q == 1.0 { inner } else { inner.powf(1.0 / q)? };
            loewner_geq(&(x - mean).abs()?, &threshold, tol)
        }
        RandomizedEvent::Chernoff { a, gamma } => {
            let lhs = (x * *gamma).exp()?;
            let half = (a * (gamma / 2.0)).exp()?;
            loewner_geq(&lhs, &u.conjugate_by(&half), tol)
        }
        RandomizedEvent::ChernoffHoeffding { gamma, beta, mean } => {
            if !(*beta > 0.0) {
                return Err(Error::Domain(format!("beta must be positive, got {beta}")));
            }
            let lhs = (&(x - mean) * *gamma).exp()?;
            loewner_geq(&lhs, &(u * *beta), tol)
        }
    }
}

/// `{λ_min(scale · Σ X_k) ≥ t}` with the default PSD slack on the sum.
pub fn partial_sum_min_eig_event(xs: &[SymMatrix], t: f64, scale: f64) -> Result<bool> {
    let s = &sum(xs)? * scale;
    let ev = s.eigenvalues()?;
    let norm = ev[0].abs().max(ev[ev.len() - 1].abs());
    Ok(ev[0] >= t - PsdTolerance::default().slack(norm.max(t.abs())))
}

/// How predictions `X̂_n` are formed in an [`EbModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictionRule {
    /// `X̂_n = M_n`.
    ConditionalMean,
    /// `X̂_1 = init`, then the average of `init, X_1, …, X_{n−1}`.
    RunningMean { init: SymMatrix },
}

/// iid observations from a discrete distribution with a constant `γ`, a
/// predictable `X̂_n`, and known conditional mean `M = E X`.
#[derive(Clone, Debug, PartialEq)]
pub struct EbModel {
    dist: DiscreteMatrixDist,
    gamma: f64,
    prediction: PredictionRule,
}

impl EbModel {
    /// Rejects models that could produce `λ_min(X_n − X̂_n) < −1`. Since
    /// `λ_min` is concave, checking every atom against every possible
    /// ingredient of the running mean suffices.
    pub fn new(dist: DiscreteMatrixDist, gamma: f64, prediction: PredictionRule) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidInput(format!("gamma {gamma} is outside (0, 1)")));
        }
        let mean = dist.exact_mean();
        let anchors: Vec<SymMatrix> = match &prediction {
            PredictionRule::ConditionalMean => vec![mean],
            PredictionRule::RunningMean { init } => {
                dist.dim();
                init.ensure_same_dim(&mean)?;
                std::iter::once(init.clone()).chain(dist.atoms().iter().map(|a| a.value.clone())).collect()
            }
        };
        for atom in dist.atoms() {
            for anchor in &anchors {
                let lo = (&atom.value - anchor).min_eig()?;
                if lo < -1.0 - EB_HYPOTHESIS_SLACK {
                    return Err(Error::InvalidInput(format!(
                        "an atom sits {lo} below a possible prediction, violating lambda_min(X - X_hat) >= -1"
                    )));
                }
            }
        }
        Ok(EbModel { dist, gamma, prediction })
    }

    pub fn dim(&self) -> usize {
        self.dist.dim()
    }

    pub fn dist(&self) -> &DiscreteMatrixDist {
        &self.dist
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Builds the path for a given observation sequence.
    pub fn path_from(&self, xs: &[&SymMatrix]) -> Result<ProcessPath> {
        let mean = self.dist.exact_mean();
        let mut path = ProcessPath::new(self.dim());
        let mut running = match &self.prediction {
            PredictionRule::RunningMean { init } => Some(init.clone()),
            PredictionRule::ConditionalMean => None,
        };
        for (i, x) in xs.iter().enumerate() {
            let x_hat = running.clone().unwrap_or_else(|| mean.clone());
            path.push(ProcessStep::new((*x).clone(), mean.clone()).with_prediction(x_hat, self.gamma))?;
            if let Some(r) = running.as_mut() {
                // average of init and the first i + 1 observations
                let k = (i + 1) as f64;
                *r = &(&*r * (k / (k + 1.0))) + &(*x * (1.0 / (k + 1.0)));
            }
        }
        Ok(path)
    }

    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R, horizon: usize) -> Result<ProcessPath> {
        let xs: Vec<&SymMatrix> = (0..horizon).map(|_| self.dist.sample(rng)).collect();
        self.path_from(&xs)
    }

    /// α-level event at the stopping time `τ`: `τ = N` when `fixed_time` is
    /// set, otherwise the first `n ≤ N` at which the non-randomized event
    /// holds (capped at `N`). `τ` never looks at the randomizer, so with
    /// `randomizer_u = None` this is the maximal event `∃ n ≤ N`.
    pub fn alpha_event(
        &self,
        path: &ProcessPath,
        alpha: f64,
        randomizer_u: Option<f64>,
        fixed_time: bool,
    ) -> Result<bool> {
        let mut state = EBState::new(path.dim());
        for (i, step) in path.steps().iter().enumerate() {
            state.advance(step)?;
            let last = i + 1 == path.len();
            if last || (!fixed_time && state.alpha_event(alpha, None)?) {
                return state.alpha_event(alpha, randomizer_u);
            }
        }
        Ok(false)
    }

    /// Exact probability of [`EbModel::alpha_event`] over all length-`horizon`
    /// observation sequences.
    pub fn enumerate_alpha_event(&self, horizon: usize, alpha: f64, fixed_time: bool) -> Result<f64> {
        let mut total = 0.0;
        for (p, xs) in enumerate_product_support(&self.dist, horizon)? {
            let path = self.path_from(&xs)?;
            if self.alpha_event(&path, alpha, None, fixed_time)? {
                total += p;
            }
        }
        Ok(total)
    }
}
