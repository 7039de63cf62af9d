//! Monte Carlo estimation with exact binomial intervals, the enumeration
//! oracle, bound verdicts, and executable checks of the proof steps.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::bounds::BoundResult;
use crate::error::{Error, Result};
use crate::processes::{EBState, ProcessStep};
use crate::samplers::{
    enumerate_independent, enumerate_product_support, random_pd, random_psd, random_symmetric, random_with_spectrum_in,
    Atom, DiscreteMatrixDist, SeedSpec,
};
use crate::symmat::{similarity_power_trace, sum, SymMatrix};

pub const DEFAULT_CI_LEVEL: f64 = 0.99;
/// Depth cap for [`conditional_supermartingale_check`].
pub const MAX_TREE_DEPTH: usize = 6;
/// Branching cap for [`conditional_supermartingale_check`].
pub const MAX_TREE_BRANCHING: usize = 4;
/// Exact-probability slack and the floor of the statistical margin.
pub const EXACT_SLACK: f64 = 1e-9;
/// Relative residual above which a property instance counts as a failure.
pub const PROPERTY_TOLERANCE: f64 = 1e-8;

const CHUNK: u64 = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
}

impl EmpiricalEstimate {
    pub fn from_counts(successes: u64, trials: u64, level: f64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if successes > trials {
            return Err(Error::InvalidInput(format!("{successes} successes out of {trials} trials")));
        }
        let (ci_low, ci_high) = clopper_pearson(successes, trials, level)?;
        let p_hat = successes as f64 / trials as f64;
        Ok(EmpiricalEstimate {
            trials,
            successes,
            p_hat,
            ci_low: ci_low.min(p_hat),
            ci_high: ci_high.max(p_hat),
            level,
        })
    }

    pub fn standard_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.trials as f64).sqrt()
    }
}

/// Exact two-sided binomial interval, by inverting the tails
/// `P(Bin(n, x) ≥ k) = α/2` and `P(Bin(n, x) ≤ k) = α/2`.
pub fn clopper_pearson(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if trials == 0 || successes > trials {
        return Err(Error::InvalidInput(format!("{successes} successes out of {trials} trials")));
    }
    let half = (1.0 - level) / 2.0;
    let (k, n) = (successes as f64, trials as f64);
    let low = if successes == 0 { 0.0 } else { invert_increasing(|x| beta_reg(k, n - k + 1.0, x), half) };
    let high = if successes == trials { 1.0 } else { invert_increasing(|x| beta_reg(k + 1.0, n - k, x), 1.0 - half) };
    Ok((low, high))
}

fn invert_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Runs `event` once per trial on the substream of that trial, using the
/// global rayon pool.
pub fn estimate_event_probability<F>(event: F, trials: u64, seed: SeedSpec, level: f64) -> Result<EmpiricalEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    estimate_event_probability_with_workers(event, trials, seed, level, 0)
}

/// As [`estimate_event_probability`] with an explicit worker count
/// (`0` = rayon default, `1` = current thread). Counts are merged exactly and
/// the first error by trial index wins, so the result never depends on
/// `workers`.
pub fn estimate_event_probability_with_workers<F>(
    event: F,
    trials: u64,
    seed: SeedSpec,
    level: f64,
    workers: usize,
) -> Result<EmpiricalEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    clopper_pearson(0, 1, level)?;
    let n_chunks = trials.div_ceil(CHUNK);
    let run_chunk = |c: u64| -> Result<u64> {
        let mut hits = 0;
        for k in c * CHUNK..((c + 1) * CHUNK).min(trials) {
            if event(&mut seed.trial_rng(k))? {
                hits += 1;
            }
        }
        Ok(hits)
    };
    let counts: Vec<Result<u64>> = if workers == 1 {
        (0..n_chunks).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
        pool.install(|| (0..n_chunks).into_par_iter().map(run_chunk).collect())
    };
    let mut successes = 0;
    for c in counts {
        successes += c?;
    }
    EmpiricalEstimate::from_counts(successes, trials, level)
}

/// Sums atom weights of the length-`n` iid sequences on which `event` holds.
pub fn enumerate_exact_probability<F>(dist: &DiscreteMatrixDist, n: usize, mut event: F) -> Result<f64>
where
    F: FnMut(&[&SymMatrix]) -> Result<bool>,
{
    let mut total = 0.0;
    for (p, xs) in enumerate_product_support(dist, n)? {
        if event(&xs)? {
            total += p;
        }
    }
    Ok(total.min(1.0))
}

/// Independent, not necessarily identical, factors.
pub fn enumerate_exact_probability_independent<F>(dists: &[&DiscreteMatrixDist], mut event: F) -> Result<f64>
where
    F: FnMut(&[&SymMatrix]) -> Result<bool>,
{
    let mut total = 0.0;
    for (p, xs) in enumerate_independent(dists)? {
        if event(&xs)? {
            total += p;
        }
    }
    Ok(total.min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbabilityEvidence {
    Exact { probability: f64 },
    Estimate(EmpiricalEstimate),
}

impl ProbabilityEvidence {
    pub fn point(&self) -> f64 {
        match self {
            ProbabilityEvidence::Exact { probability } => *probability,
            ProbabilityEvidence::Estimate(e) => e.p_hat,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Tight,
    Violation,
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictStatus::Pass => "pass",
            VerdictStatus::Tight => "tight",
            VerdictStatus::Violation => "violation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationVerdict {
    pub bound: BoundResult,
    pub evidence: ProbabilityEvidence,
    pub status: VerdictStatus,
    pub margin: f64,
}

/// Violation needs `ci_low > bound` (or an exact excess over `1e-9`);
/// tight means `|prob − bound| ≤ max(2·SE, 1e-9)`.
pub fn check_bound_holds(evidence: ProbabilityEvidence, bound: BoundResult) -> VerificationVerdict {
    let b = bound.value;
    let (status, margin) = match &evidence {
        ProbabilityEvidence::Exact { probability } => {
            let p = *probability;
            let status = if p > b + EXACT_SLACK {
                VerdictStatus::Violation
            } else if (p - b).abs() <= EXACT_SLACK {
                VerdictStatus::Tight
            } else {
                VerdictStatus::Pass
            };
            (status, EXACT_SLACK)
        }
        ProbabilityEvidence::Estimate(e) => {
            let margin = (2.0 * e.standard_error()).max(EXACT_SLACK);
            let status = if e.ci_low > b {
                VerdictStatus::Violation
            } else if (e.p_hat - b).abs() <= margin {
                VerdictStatus::Tight
            } else {
                VerdictStatus::Pass
            };
            (status, margin)
        }
    };
    VerificationVerdict { bound, evidence, status, margin }
}

/// Largest one-step drift `E[L(path, child) | path] − L(path)` over every
/// internal node of a finite tree. `children` lists `(probability, step)`
/// pairs for a node given its path from the root.
pub fn conditional_supermartingale_check<T, C, L>(depth: usize, children: C, l: L) -> Result<f64>
where
    T: Clone,
    C: Fn(&[T]) -> Result<Vec<(f64, T)>>,
    L: Fn(&[T]) -> Result<f64>,
{
    if depth == 0 || depth > MAX_TREE_DEPTH {
        return Err(Error::InvalidInput(format!("tree depth must lie in 1..={MAX_TREE_DEPTH}, got {depth}")));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut prefix = Vec::with_capacity(depth);
    visit(&mut prefix, depth, &children, &l, &mut worst)?;
    Ok(worst)
}

fn visit<T, C, L>(prefix: &mut Vec<T>, depth: usize, children: &C, l: &L, worst: &mut f64) -> Result<()>
where
    T: Clone,
    C: Fn(&[T]) -> Result<Vec<(f64, T)>>,
    L: Fn(&[T]) -> Result<f64>,
{
    if prefix.len() == depth {
        return Ok(());
    }
    let kids = children(prefix)?;
    if kids.is_empty() || kids.len() > MAX_TREE_BRANCHING {
        return Err(Error::InvalidInput(format!(
            "node at depth {} has {} children, allowed 1..={MAX_TREE_BRANCHING}",
            prefix.len(),
            kids.len()
        )));
    }
    let total: f64 = kids.iter().map(|k| k.0).sum();
    if (total - 1.0).abs() > 1e-12 || kids.iter().any(|k| !(k.0 >= 0.0)) {
        return Err(Error::InvalidInput(format!("child probabilities at depth {} sum to {total}", prefix.len())));
    }
    let here = l(prefix)?;
    let mut expected = 0.0;
    for (p, child) in kids {
        prefix.push(child);
        expected += p * l(prefix)?;
        visit(prefix, depth, children, l, worst)?;
        prefix.pop();
    }
    *worst = worst.max(expected - here);
    Ok(())
}

/// A random binary observation tree for the EB process. Every node draws its
/// own two-point law for `X_n` (eigenvalues in `[0, 1]`, so
/// `λ_min(X_n − X̂_n) ≥ −1` for any prediction with eigenvalues in `[0, 1]`),
/// its conditional mean, and a prediction that depends on the node only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EbTreeSpec {
    pub dim: usize,
    pub depth: usize,
    pub gamma: f64,
    pub seed: u64,
    /// Diagonal matrices only.
    pub commuting: bool,
}

/// Worst drift of `L_n^EB` over the tree described by `spec`.
pub fn eb_tree_drift(spec: &EbTreeSpec) -> Result<f64> {
    let seeds = SeedSpec::new(spec.seed, 0x0eb7);
    let draw = |rng: &mut ChaCha8Rng| {
        if spec.commuting {
            let v: Vec<f64> = (0..spec.dim).map(|_| rng.random::<f64>()).collect();
            SymMatrix::from_diagonal(&v).expect("finite diagonal")
        } else {
            random_with_spectrum_in(spec.dim, 0.0, 1.0, rng)
        }
    };
    let children = |path: &[(usize, ProcessStep)]| -> Result<Vec<(f64, (usize, ProcessStep))>> {
        let node = path.iter().fold(1u64, |acc, (c, _)| acc * 2 + *c as u64);
        let mut rng = seeds.trial_rng(node);
        let p = 0.1 + 0.8 * rng.random::<f64>();
        let (xa, xb) = (draw(&mut rng), draw(&mut rng));
        let x_hat = draw(&mut rng);
        let m = &(&xa * p) + &(&xb * (1.0 - p));
        Ok(vec![
            (p, (0, ProcessStep::new(xa, m.clone()).with_prediction(x_hat.clone(), spec.gamma))),
            (1.0 - p, (1, ProcessStep::new(xb, m).with_prediction(x_hat, spec.gamma))),
        ])
    };
    let l = |path: &[(usize, ProcessStep)]| -> Result<f64> {
        let mut state = EBState::new(spec.dim);
        for (_, step) in path {
            state.advance(step)?;
        }
        state.l_value()
    };
    conditional_supermartingale_check(spec.depth, children, l)
}

/// Proof steps that [`property_run`] can exercise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    GoldenThompson,
    CgfSubadditivity,
    MinEigExpIdentity,
    TraceMonotone,
    OperatorMonotoneQ,
    SimilarityTraceConsistency,
    ChebyshevRemarkTraces,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::GoldenThompson,
        Property::CgfSubadditivity,
        Property::MinEigExpIdentity,
        Property::TraceMonotone,
        Property::OperatorMonotoneQ,
        Property::SimilarityTraceConsistency,
        Property::ChebyshevRemarkTraces,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Property::GoldenThompson => "golden_thompson",
            Property::CgfSubadditivity => "cgf_subadditivity",
            Property::MinEigExpIdentity => "min_eig_exp_identity",
            Property::TraceMonotone => "trace_monotone",
            Property::OperatorMonotoneQ => "operator_monotone_q",
            Property::SimilarityTraceConsistency => "similarity_trace_consistency",
            Property::ChebyshevRemarkTraces => "chebyshev_remark_traces",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown property {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    pub instances: usize,
    pub failures: usize,
    /// Largest relative residual; positive values point against the property.
    pub worst_residual: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<NamedValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Evaluates `property` on `instances` random instances; instance `i` draws
/// from its own substream of `seed`.
pub fn property_run(property: Property, instances: usize, seed: u64) -> Result<PropertyReport> {
    let seeds = SeedSpec::new(seed, 0x9000 + property as u64);
    let mut report = PropertyReport {
        property,
        instances,
        failures: 0,
        worst_residual: f64::NEG_INFINITY,
        passed: true,
        values: Vec::new(),
        notes: Vec::new(),
    };
    if property == Property::ChebyshevRemarkTraces {
        let (direct, commuted) = chebyshev_remark_traces()?;
        report.instances = 1;
        report.worst_residual = (direct - commuted).abs();
        report.values = vec![
            NamedValue { name: "trace_of_expected_product_square".into(), value: direct },
            NamedValue { name: "trace_of_expected_square_times_inverse_square".into(), value: commuted },
        ];
        report
            .notes
            .push("all matrices in this example are diagonal, so the two expressions commute and coincide".into());
        return Ok(report);
    }
    for i in 0..instances {
        let mut rng = seeds.trial_rng(i as u64);
        let d = rng.random_range(1..=5usize);
        let residuals = match property {
            Property::GoldenThompson => vec![golden_thompson_residual(d, &mut rng)?],
            Property::CgfSubadditivity => cgf_subadditivity_residuals(d, &mut rng)?,
            Property::MinEigExpIdentity => vec![min_eig_exp_residual(d, &mut rng)?],
            Property::TraceMonotone => vec![trace_monotone_residual(d, &mut rng)?],
            Property::OperatorMonotoneQ => vec![operator_monotone_residual(d, &mut rng)?],
            Property::SimilarityTraceConsistency => vec![similarity_residual(d, &mut rng)?],
            Property::ChebyshevRemarkTraces => unreachable!(),
        };
        let worst = residuals.into_iter().fold(f64::NEG_INFINITY, f64::max);
        report.worst_residual = report.worst_residual.max(worst);
        if worst > PROPERTY_TOLERANCE {
            report.failures += 1;
        }
    }
    report.passed = report.failures == 0;
    Ok(report)
}

/// `(tr e^{A+B} − tr(e^A e^B)) / tr(e^A e^B)`.
fn golden_thompson_residual(d: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let a = random_symmetric(d, 1.0, rng);
    let b = random_symmetric(d, 1.0, rng);
    let lhs = (&a + &b).exp()?.trace();
    let rhs = a.exp()?.matmul(&b.exp()?).trace();
    Ok((lhs - rhs) / rhs)
}

/// `E tr exp(θ ΣX_k) ≤ tr exp(Σ log E e^{θX_k})` with the left side summed
/// over the product support.
fn cgf_subadditivity_residuals(d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let k = rng.random_range(1..=3usize);
    let dists = (0..k).map(|_| random_discrete(d, 3, rng)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&DiscreteMatrixDist> = dists.iter().collect();
    let mut out = Vec::new();
    for theta in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
        let mut lhs = 0.0;
        for (p, xs) in enumerate_independent(&refs)? {
            let owned: Vec<SymMatrix> = xs.into_iter().cloned().collect();
            lhs += p * (&sum(&owned)? * theta).exp()?.trace();
        }
        let cgfs = dists.iter().map(|x| x.log_mgf(theta)).collect::<Result<Vec<_>>>()?;
        let rhs = sum(&cgfs)?.exp()?.trace();
        out.push((lhs - rhs) / rhs.max(1.0));
    }
    Ok(out)
}

/// A discrete law with `1..=max_atoms` random symmetric atoms.
pub fn random_discrete(d: usize, max_atoms: usize, rng: &mut ChaCha8Rng) -> Result<DiscreteMatrixDist> {
    let n = rng.random_range(1..=max_atoms);
    let weights: Vec<f64> = (0..n).map(|_| 0.1 + rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let atoms = weights.into_iter().map(|w| Atom { prob: w / total, value: random_symmetric(d, 0.5, rng) }).collect();
    DiscreteMatrixDist::new(atoms)
}

/// `|λ_min(e^{θY}) − e^{θ λ_min(Y)}| / ‖e^{θY}‖` for `θ > 0`. The norm is the
/// scale at which eigenvalues of `e^{θY}` are computed to working precision.
fn min_eig_exp_residual(d: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let y = random_symmetric(d, 1.0, rng);
    let theta = 0.05 + 2.95 * rng.random::<f64>();
    let e = (&y * theta).exp()?;
    let direct = e.min_eig()?;
    let scalar = (theta * y.min_eig()?).exp();
    Ok((direct - scalar).abs() / e.op_norm()?)
}

/// `A ⪯ B ⇒ tr f(A) ≤ tr f(B)` for `f = exp` and, on PD inputs, `f = log`.
fn trace_monotone_residual(d: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let use_log = rng.random::<bool>();
    let a = if use_log { random_pd(d, 1.0, 0.05, rng) } else { random_symmetric(d, 1.0, rng) };
    let b = &a + &random_psd(d, 1.0, rng);
    let (fa, fb) = if use_log { (a.log()?.trace(), b.log()?.trace()) } else { (a.exp()?.trace(), b.exp()?.trace()) };
    Ok((fa - fb) / fb.abs().max(1.0))
}

/// `0 ⪯ A ⪯ B ⇒ A^q ⪯ B^q` for `q ∈ (0, 1]`.
fn operator_monotone_residual(d: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let q = 1.0 - rng.random::<f64>();
    let a = random_psd(d, 1.0, rng);
    let b = &a + &random_psd(d, 1.0, rng);
    let bq = b.powf(q)?;
    let gap = (&bq - &a.powf(q)?).min_eig()?;
    Ok(-gap / bq.op_norm()?.max(1.0))
}

/// Symmetric-form `tr((A^{-1/2} B A^{-1/2})^p)` against the plain product
/// `tr((B A^{-1})^p)` for integer `p`.
fn similarity_residual(d: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let p = rng.random_range(1..=3u32);
    let b = random_psd(d, 1.0, rng);
    let a = random_pd(d, 1.0, 0.2, rng);
    let sym = similarity_power_trace(&b, &a, p as f64)?;
    let prod = b.as_dmatrix() * a.inverse()?.as_dmatrix();
    let mut acc = prod.clone();
    for _ in 1..p {
        acc = &acc * &prod;
    }
    let direct = acc.trace();
    Ok((sym - direct).abs() / direct.abs().max(1.0))
}

/// `E tr((|X − EX| A^{-1})²)` and `tr(E[(X − EX)²] A^{-2})` for the two-atom
/// diagonal example, by two separate routes.
pub fn chebyshev_remark_traces() -> Result<(f64, f64)> {
    let dist = DiscreteMatrixDist::from_pairs(vec![
        (0.8, SymMatrix::from_diagonal(&[-2.0, 1.0])?),
        (0.2, SymMatrix::from_diagonal(&[1.0, -10.0])?),
    ])?;
    let a = SymMatrix::from_diagonal(&[1.0, 0.5])?;
    let mean = dist.exact_mean();
    let a_inv = a.inverse()?;

    let mut direct = 0.0;
    for atom in dist.atoms() {
        let prod = (&atom.value - &mean).abs()?.matmul(&a_inv);
        direct += atom.prob * (&prod * &prod).trace();
    }

    let second_moment = dist.expect(|x| Ok((x - &mean).square()))?;
    let a_inv_sq = a_inv.square();
    let commuted = second_moment.matmul(&a_inv_sq).trace();
    Ok((direct, commuted))
}
