//! Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use loewner::bounds::{
    bernstein_bounded_bound, chebyshev_bound, chernoff_bound, master_bound_discrete, ChebyshevMode, TheoremId,
};
use loewner::experiment::{
    report_json, run, DistributionSpec, ExperimentConfig, MatrixLiterals, PredictionKind, Report, RunMode,
    ScalarParams, Scenario, StopAt,
};
use loewner::processes::{
    randomized_event, ville_stopped_event, EbModel, PredictionRule, RandomizedEvent, StoppingKind, StoppingRule,
};
use loewner::samplers::{
    enumerate_independent, random_pd, random_psd, random_symmetric, random_with_spectrum_in, Atom, DiscreteMatrixDist,
    MartingaleKind, MultiplicativeProcess, SeedSpec, SuperUniformSpec,
};
use loewner::symmat::sum;
use loewner::verify::{
    eb_tree_drift, enumerate_exact_probability, enumerate_exact_probability_independent, property_run, random_discrete,
    EbTreeSpec, ProbabilityEvidence, Property, DEFAULT_CI_LEVEL,
};
use loewner::{loewner_geq, PsdTolerance, Result, SymMatrix, ThetaGrid, VerdictStatus};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Outcome { ok, detail: detail.into() }
    }
}

type Criterion = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 13] = [
        ("markov tightness", c1_markov_tight),
        ("markov dominance", c2_markov_dominance),
        ("chebyshev both modes", c3_chebyshev),
        ("chernoff and kl", c4_chernoff_kl),
        ("laplace tight instance", c5_laplace),
        ("master bound", c6_master),
        ("bernstein family mc", c7_bernstein_family),
        ("doob and ville", c8_doob_ville),
        ("empirical bernstein", c9_empirical_bernstein),
        ("randomized variants", c10_randomized),
        ("property suite", c11_properties),
        ("factor-d comparison", c12_factor_d),
        ("reproducibility", c13_reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let out = f().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        if !out.ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<24} {} [{:.1}s] {}",
            k + 1,
            name,
            if out.ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            out.detail
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::load(&configs_dir().join(format!("{name}.toml")))
}

fn base(scenario: Scenario, dim: usize, trials: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        scenario,
        dim,
        trials,
        seed,
        ci_level: DEFAULT_CI_LEVEL,
        output: None,
        distribution: None,
        matrices: MatrixLiterals::default(),
        params: ScalarParams::default(),
        super_uniform: None,
    }
}

fn rng(stream: u64, case: u64) -> ChaCha8Rng {
    SeedSpec::new(0xacce97, stream).trial_rng(case)
}

fn tol() -> PsdTolerance {
    PsdTolerance::default()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn two_atoms(r: &mut ChaCha8Rng, d: usize, scale: f64) -> Result<DiscreteMatrixDist> {
    let p = 0.15 + 0.7 * r.random::<f64>();
    DiscreteMatrixDist::from_pairs(vec![(p, random_symmetric(d, scale, r)), (1.0 - p, random_symmetric(d, scale, r))])
}

fn c1_markov_tight() -> Result<Outcome> {
    let mut ok = true;
    let mut worst_bound = 0.0f64;
    let mut misses = Vec::new();
    let mut case = 0;
    for p in [0.1, 0.25, 0.5, 0.9] {
        for d in [2usize, 5] {
            case += 1;
            let mut r = rng(1, case);
            let mut cfg = base(Scenario::Markov, d, 100_000, 1000 + case);
            cfg.distribution = Some(DistributionSpec::TightExample { p });
            cfg.matrices.a = Some(random_pd(d, 1.0, 0.1, &mut r));
            let rep = run(&cfg, RunMode::Verify, 0)?;
            let bound = rep.bounds[0].value;
            worst_bound = worst_bound.max((bound - p).abs());
            let exact = rep.exact_probability.unwrap_or(f64::NAN);
            let est = rep.estimate.clone().expect("trials > 0");
            let covered = est.ci_low <= p && p <= est.ci_high;
            if (bound - p).abs() > 1e-10 || exact != p || !covered {
                ok = false;
                misses.push(format!("p={p} d={d} bound={bound} exact={exact} ci=[{}, {}]", est.ci_low, est.ci_high));
            }
        }
    }
    Ok(Outcome::new(
        ok,
        format!("8 cases, max |bound - p| = {worst_bound:.1e}; exact = p and CI covers p{}", fmt_misses(&misses)),
    ))
}

fn fmt_misses(m: &[String]) -> String {
    if m.is_empty() {
        String::new()
    } else {
        format!("; misses: {}", m.join(" | "))
    }
}

fn c2_markov_dominance() -> Result<Outcome> {
    let mut misses = Vec::new();
    let mut nonzero = 0;
    let mut max_ratio = 0.0f64;
    for case in 0..50u64 {
        let mut r = rng(2, case);
        let d = 1 + (case % 4) as usize;
        let n = r.random_range(1..=5);
        let weights: Vec<f64> = (0..n).map(|_| 0.1 + r.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        let atoms: Vec<Atom> =
            weights.iter().map(|w| Atom { prob: w / total, value: random_psd(d, 1.0, &mut r) }).collect();
        let dist = DiscreteMatrixDist::new(atoms.clone())?;
        let s = 0.3 + 1.2 * r.random::<f64>();
        let a = &(&dist.exact_mean() * s) + &SymMatrix::scaled_identity(d, 0.05);
        let mut cfg = base(Scenario::Markov, d, 0, 2000 + case);
        cfg.distribution = Some(DistributionSpec::Discrete { atoms });
        cfg.matrices.a = Some(a);
        let rep = run(&cfg, RunMode::Enumerate, 1)?;
        let (exact, bound) = (rep.exact_probability.unwrap_or(f64::NAN), rep.bounds[0].value);
        if exact > 0.0 {
            nonzero += 1;
            max_ratio = max_ratio.max(exact / bound);
        }
        if !(exact <= bound + 1e-9) {
            misses.push(format!("case {case}: exact={exact} bound={bound}"));
        }
    }
    Ok(Outcome::new(
        misses.is_empty(),
        format!("50 laws, {nonzero} with P > 0, max exact/bound = {max_ratio:.3}{}", fmt_misses(&misses)),
    ))
}

fn c3_chebyshev() -> Result<Outcome> {
    let mut misses = Vec::new();
    let mut nonzero = 0;
    let mut worst_cross = 0.0f64;
    let modes = [
        ChebyshevMode::Power(1.0),
        ChebyshevMode::Power(2.0),
        ChebyshevMode::Power(3.0),
        ChebyshevMode::Root(0.5),
        ChebyshevMode::Root(1.0),
    ];
    for case in 0..30u64 {
        let mut r = rng(3, case);
        let d = 1 + (case % 4) as usize;
        let dist = random_discrete(d, 5, &mut r)?;
        let mean = dist.exact_mean();
        let abs_dev = dist.expect(|x| (x - &mean).abs())?;
        let s = 0.3 + 0.9 * r.random::<f64>();
        let a = &(&abs_dev * s) + &SymMatrix::scaled_identity(d, 0.05);
        let exact = enumerate_exact_probability(&dist, 1, |xs| loewner_geq(&(xs[0] - &mean).abs()?, &a, tol()))?;
        if exact > 0.0 {
            nonzero += 1;
        }
        for mode in modes {
            let b = chebyshev_bound(&dist, &a, mode)?.value;
            if !(exact <= b + 1e-9) {
                misses.push(format!("case {case} {mode:?}: exact={exact} bound={b}"));
            }
        }
        // direct products with an LU inverse
        let a_inv = a.as_dmatrix().clone().lu().try_inverse().expect("A is PD");
        let dd = d as f64;
        let q1 = (abs_dev.as_dmatrix() * &a_inv).trace() / dd;
        let mut p2 = 0.0;
        for atom in dist.atoms() {
            let m = (&atom.value - &mean).abs()?.as_dmatrix() * &a_inv;
            p2 += atom.prob * (&m * &m).trace() / dd;
        }
        let q1_lib = chebyshev_bound(&dist, &a, ChebyshevMode::Root(1.0))?.value;
        let p2_lib = chebyshev_bound(&dist, &a, ChebyshevMode::Power(2.0))?.value;
        for (lib, direct) in [(q1_lib, q1), (p2_lib, p2)] {
            let err = (lib - direct).abs() / direct.abs().max(1.0);
            worst_cross = worst_cross.max(err);
            if err > 1e-8 {
                misses.push(format!("case {case}: trace cross-check {lib} vs {direct}"));
            }
        }
    }
    Ok(Outcome::new(
        misses.is_empty(),
        format!(
            "30 laws x 5 modes, {nonzero} with P > 0, worst trace cross-check {worst_cross:.1e}{}",
            fmt_misses(&misses)
        ),
    ))
}

fn binomial_tail(n: usize, m: f64, a: f64) -> f64 {
    let k0 = (n as f64 * a - 1e-9).ceil() as usize;
    let mut total = 0.0;
    for k in k0..=n {
        let mut c = 1.0;
        for i in 0..k {
            c *= (n - i) as f64 / (i + 1) as f64;
        }
        total += c * m.powi(k as i32) * (1.0 - m).powi((n - k) as i32);
    }
    total
}

fn c4_chernoff_kl() -> Result<Outcome> {
    let mut misses = Vec::new();
    let mut cases = 0;
    let mut worst_binom = 0.0f64;
    for m in [0.3, 0.5] {
        for level in [0.6, 0.8] {
            for n in [5usize, 10] {
                cases += 1;
                let mut cfg = base(Scenario::ChernoffKl, 2, 0, 4000 + cases);
                cfg.distribution = Some(DistributionSpec::BoundedIid { m });
                cfg.params.a = Some(level);
                cfg.params.n = Some(n);
                let rep = run(&cfg, RunMode::Enumerate, 1)?;
                let exact = rep.exact_probability.unwrap_or(f64::NAN);
                worst_binom = worst_binom.max((exact - binomial_tail(n, m, level)).abs());
                for b in &rep.bounds {
                    if !(exact <= b.value + 1e-9) {
                        misses.push(format!("m={m} a={level} n={n} {}: exact={exact} bound={}", b.theorem_id, b.value));
                    }
                }
                let dist = loewner::samplers::bounded_iid_dist(2, m)?;
                let a = SymMatrix::scaled_identity(2, level);
                for theta in [0.1, 0.5, 1.0, 2.0, 5.0] {
                    let root = SymMatrix::scaled_identity(2, f64::sqrt(theta));
                    let b = chernoff_bound(&dist, &a, &root, &root, n)?.value;
                    if !(exact <= b + 1e-9) {
                        misses.push(format!("m={m} a={level} n={n} theta={theta}: exact={exact} bound={b}"));
                    }
                }
            }
        }
    }
    Ok(Outcome::new(
        misses.is_empty() && worst_binom < 1e-12,
        format!(
            "{cases} cases, KL and T = sqrt(theta) I bounds dominate, |enumerated - binomial| <= {worst_binom:.1e}{}",
            fmt_misses(&misses)
        ),
    ))
}

fn c5_laplace() -> Result<Outcome> {
    let mut cfg = shipped("laplace")?;
    cfg.trials = 100_000;
    let rep = run(&cfg, RunMode::Verify, 0)?;
    let bound = rep.bounds[0].value;
    let exact = rep.exact_probability.unwrap_or(f64::NAN);
    let exact_status =
        rep.verdicts.iter().find(|v| matches!(v.evidence, ProbabilityEvidence::Exact { .. })).map(|v| v.status);
    let ok = (bound - 0.5).abs() <= 1e-3 && exact == 0.5 && exact_status == Some(VerdictStatus::Tight);
    Ok(Outcome::new(ok, format!("bound={bound:.12} exact={exact} verdict={:?}", exact_status)))
}

fn c6_master() -> Result<Outcome> {
    let grid = ThetaGrid::default();
    let mut misses = Vec::new();
    let mut checks = 0;
    let mut worst_sub = f64::NEG_INFINITY;
    for case in 0..10u64 {
        let mut r = rng(6, case);
        let d = 2 + (case % 2) as usize;
        let k = 2 + (case % 2) as usize;
        let factors: Vec<DiscreteMatrixDist> = (0..k).map(|_| two_atoms(&mut r, d, 0.7)).collect::<Result<_>>()?;
        let refs: Vec<&DiscreteMatrixDist> = factors.iter().collect();
        let mut lmins = Vec::new();
        for (_, xs) in enumerate_independent(&refs)? {
            let owned: Vec<SymMatrix> = xs.iter().map(|x| (*x).clone()).collect();
            lmins.push(sum(&owned)?.min_eig()?);
        }
        let lo = lmins.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = lmins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for t in linspace(lo, hi, 10) {
            checks += 1;
            let bound = master_bound_discrete(&factors, t, &grid)?.value;
            let exact = enumerate_exact_probability_independent(&refs, |xs| {
                let owned: Vec<SymMatrix> = xs.iter().map(|x| (*x).clone()).collect();
                Ok(sum(&owned)?.min_eig()? >= t - 1e-9 * t.abs().max(1.0))
            })?;
            if !(exact <= bound + 1e-9) {
                misses.push(format!("case {case} t={t}: exact={exact} bound={bound}"));
            }
        }
        // E tr exp(θ Σ X_k) ≤ tr exp(Σ log E e^{θ X_k})
        for theta in [0.1, 0.5, 1.0, 2.0] {
            let mut lhs = 0.0;
            for (w, xs) in enumerate_independent(&refs)? {
                let owned: Vec<SymMatrix> = xs.iter().map(|x| (*x) * theta).collect();
                lhs += w * sum(&owned)?.exp()?.trace();
            }
            let cgfs: Vec<SymMatrix> = factors.iter().map(|f| f.log_mgf(theta)).collect::<Result<_>>()?;
            let rhs = sum(&cgfs)?.exp()?.trace();
            worst_sub = worst_sub.max((lhs - rhs) / rhs.max(1.0));
        }
    }
    let ok = misses.is_empty() && worst_sub <= 1e-9;
    Ok(Outcome::new(
        ok,
        format!(
            "{checks} (instance, t) pairs dominated, worst subadditivity residual {worst_sub:.1e}{}",
            fmt_misses(&misses)
        ),
    ))
}

fn c7_bernstein_family() -> Result<Outcome> {
    let mut misses = Vec::new();
    let mut runs = 0;
    let mut max_ratio = 0.0f64;
    for name in ["bernstein_bounded", "bernstein_subexp", "azuma", "mcdiarmid", "hoeffding"] {
        let proto = shipped(name)?;
        let scale = match name {
            "hoeffding" => 0.6,
            "mcdiarmid" => 1.2,
            _ => 3.0,
        };
        for (i, t) in linspace(scale / 10.0, scale, 10).into_iter().enumerate() {
            runs += 1;
            let mut cfg = proto.clone();
            cfg.trials = 100_000;
            cfg.seed = 7000 + runs;
            cfg.params.t = Some(t);
            let rep = run(&cfg, RunMode::Verify, 0)?;
            let est = rep.estimate.clone().expect("trials > 0");
            for b in &rep.bounds {
                if est.ci_low > b.value {
                    misses.push(format!("{name} t={t}: ci_low={} > {}={}", est.ci_low, b.theorem_id, b.value));
                }
                if b.value > 0.0 {
                    max_ratio = max_ratio.max(est.p_hat / b.value);
                }
            }
            if rep.has_violation() {
                misses.push(format!("{name} point {i}: violation verdict"));
            }
        }
    }
    let mut grid_points = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for s2 in [0.05, 0.5, 1.0, 5.0, 50.0] {
        for r in [0.01, 0.3, 1.0, 10.0] {
            for t in [0.1, 0.7, 2.0, 8.0, 40.0] {
                grid_points += 1;
                let (h, simple) = bernstein_bounded_bound(s2, r, t)?;
                worst_gap = worst_gap.max(h.value - simple.value);
                if h.value > simple.value * (1.0 + 1e-12) + 1e-300 {
                    misses.push(format!("h-form above simplified at s2={s2} r={r} t={t}"));
                }
            }
        }
    }
    Ok(Outcome::new(
        misses.is_empty(),
        format!(
            "{runs} MC runs of 1e5 trials, max p_hat/bound = {max_ratio:.3}; {grid_points}-point h <= simplified grid, worst gap {worst_gap:.1e}{}",
            fmt_misses(&misses)
        ),
    ))
}

fn martingale_factors(r: &mut ChaCha8Rng, kind: MartingaleKind) -> Vec<(f64, f64)> {
    let hi = 1.2 + 0.8 * r.random::<f64>();
    let lo = 0.2 + 0.55 * r.random::<f64>();
    let mu = match kind {
        MartingaleKind::Submartingale => 1.0 + 0.15 * r.random::<f64>(),
        MartingaleKind::Supermartingale => 0.8 + 0.2 * r.random::<f64>(),
    };
    let p = (mu - lo) / (hi - lo);
    vec![(p, hi), (1.0 - p, lo)]
}

fn c8_doob_ville() -> Result<Outcome> {
    let mut misses = Vec::new();
    let mut hits = 0;
    for case in 0..20u64 {
        let mut r = rng(8, case);
        let (scenario, kind) = if case < 10 {
            (Scenario::Doob, MartingaleKind::Submartingale)
        } else {
            (Scenario::Ville, MartingaleKind::Supermartingale)
        };
        let d = 2 + (case % 2) as usize;
        let horizon = r.random_range(4..=10usize);
        let b = random_pd(d, 1.0, 0.1, &mut r);
        let kappa = 1.2 + 1.8 * r.random::<f64>();
        let a = &(&b * kappa) + &SymMatrix::scaled_identity(d, 0.05);
        let mut cfg = base(scenario, d, 0, 8000 + case);
        cfg.distribution =
            Some(DistributionSpec::Multiplicative { factors: martingale_factors(&mut r, kind), martingale: kind });
        cfg.matrices.a = Some(a);
        cfg.matrices.b = Some(b);
        cfg.params.horizon = Some(horizon);
        let rep = run(&cfg, RunMode::Enumerate, 1)?;
        let exact = rep.exact_probability.unwrap_or(f64::NAN);
        if exact > 0.0 {
            hits += 1;
        }
        let main = rep.bounds[0].value;
        if !(exact <= main + 1e-9) {
            misses.push(format!("case {case}: exact={exact} bound={main}"));
        }
        if scenario == Scenario::Doob {
            match rep.bounds.iter().find(|b| b.theorem_id == TheoremId::DoobIndicator) {
                Some(ind) if exact <= ind.value + 1e-9 && ind.value <= main + 1e-9 => {}
                Some(ind) => misses.push(format!("case {case}: exact={exact} indicator={} full={main}", ind.value)),
                None => misses.push(format!("case {case}: indicator bound missing")),
            }
        }
    }
    Ok(Outcome::new(
        misses.is_empty(),
        format!(
            "10 doob + 10 ville parameterizations, {hits} with P > 0, indicator bound checked{}",
            fmt_misses(&misses)
        ),
    ))
}

fn c9_empirical_bernstein() -> Result<Outcome> {
    let mut misses = Vec::new();
    let mut trees = 0;
    let mut worst = f64::NEG_INFINITY;
    for depth in 1..=4 {
        for gamma in [0.2, 0.5] {
            for commuting in [true, false] {
                for seed in 0..6 {
                    trees += 1;
                    let dim = 2 + (seed % 2) as usize;
                    let drift = eb_tree_drift(&EbTreeSpec { dim, depth, gamma, seed, commuting })?;
                    worst = worst.max(drift);
                    if drift > 1e-9 {
                        misses.push(format!("depth={depth} gamma={gamma} seed={seed}: drift {drift:.2e}"));
                    }
                }
            }
        }
    }

    let mut models: Vec<(String, EbModel, usize)> = Vec::new();
    let cfg = shipped("eb")?;
    let atoms = match &cfg.distribution {
        Some(DistributionSpec::Discrete { atoms }) => atoms.clone(),
        _ => unreachable!("shipped eb config is discrete"),
    };
    let dist = DiscreteMatrixDist::new(atoms)?;
    models.push(("shipped".into(), EbModel::new(dist.clone(), 0.5, PredictionRule::ConditionalMean)?, 8));
    models.push(("shipped gamma=0.2".into(), EbModel::new(dist.clone(), 0.2, PredictionRule::ConditionalMean)?, 8));
    for case in 0..4u64 {
        let mut r = rng(9, case);
        let d = 2;
        let p = 0.1 + 0.3 * r.random::<f64>();
        let law = DiscreteMatrixDist::from_pairs(vec![
            (p, random_with_spectrum_in(d, 0.7, 1.0, &mut r)),
            (1.0 - p, random_with_spectrum_in(d, 0.0, 0.2, &mut r)),
        ])?;
        let gamma = if case % 2 == 0 { 0.2 } else { 0.5 };
        let init = law.exact_mean();
        models.push((format!("random {case}"), EbModel::new(law.clone(), gamma, PredictionRule::ConditionalMean)?, 8));
        models.push((
            format!("random {case} running mean"),
            EbModel::new(law, gamma, PredictionRule::RunningMean { init })?,
            8,
        ));
    }
    let mut events = 0;
    let mut worst_ratio = 0.0f64;
    for (label, model, horizon) in &models {
        for alpha in [0.05, 0.1, 0.25] {
            for fixed in [false, true] {
                events += 1;
                let prob = model.enumerate_alpha_event(*horizon, alpha, fixed)?;
                worst_ratio = worst_ratio.max(prob / alpha);
                if !(prob <= alpha + 1e-9) {
                    misses.push(format!("{label} alpha={alpha} fixed={fixed}: P={prob}"));
                }
            }
        }
    }
    Ok(Outcome::new(
        misses.is_empty(),
        format!(
            "{trees} trees, worst drift {worst:.1e}; {events} enumerated alpha-events, max P/alpha = {worst_ratio:.3}{}",
            fmt_misses(&misses)
        ),
    ))
}

fn c10_randomized() -> Result<Outcome> {
    let mut misses = Vec::new();
    let mut statuses = Vec::new();
    let mut configs = Vec::new();
    for name in [
        "randomized_markov",
        "randomized_chebyshev",
        "randomized_chernoff",
        "randomized_chernoff_hoeffding",
        "randomized_ville",
        "randomized_eb",
    ] {
        let cfg = shipped(name)?;
        if name == "randomized_chebyshev" {
            let mut q1 = cfg.clone();
            q1.params.q = Some(1.0);
            q1.seed += 1000;
            configs.push((format!("{name} q=1"), q1));
        }
        configs.push((name.to_string(), cfg));
    }
    for (label, mut cfg) in configs {
        cfg.trials = 100_000;
        if cfg.scenario != Scenario::RandomizedEb {
            cfg.super_uniform = Some(SuperUniformSpec::ScalarTimesIdentity);
        }
        let rep = run(&cfg, RunMode::Verify, 0)?;
        let st = rep.status.unwrap_or(VerdictStatus::Violation);
        statuses.push(format!("{label}={st}"));
        if st != VerdictStatus::Pass {
            misses.push(format!("{label}: {st}"));
        }
        let mismatches = identity_agreement(&cfg, 100_000)?;
        if mismatches > 0 {
            misses.push(format!("{label}: U = I disagrees on {mismatches} trials"));
        }
    }
    Ok(Outcome::new(
        misses.is_empty(),
        format!("{}; U = I agrees on every trial{}", statuses.join(" "), fmt_misses(&misses)),
    ))
}

fn discrete_of(cfg: &ExperimentConfig) -> Result<DiscreteMatrixDist> {
    match &cfg.distribution {
        Some(DistributionSpec::Discrete { atoms }) => DiscreteMatrixDist::new(atoms.clone()),
        other => panic!("expected a discrete law, got {other:?}"),
    }
}

/// Number of trials on which the randomized event at `U = I` differs from
/// the deterministic event.
fn identity_agreement(cfg: &ExperimentConfig, trials: u64) -> Result<u64> {
    let d = cfg.dim;
    let eye = SymMatrix::identity(d);
    let seeds = SeedSpec::new(cfg.seed, 0x1d);
    let mut mismatches = 0;
    let mats = &cfg.matrices;
    let prm = &cfg.params;
    match cfg.scenario {
        Scenario::RandomizedMarkov | Scenario::RandomizedChebyshev | Scenario::RandomizedChernoff => {
            let dist = discrete_of(cfg)?;
            let a = mats.a.clone().expect("a");
            let mean = dist.exact_mean();
            let form = match cfg.scenario {
                Scenario::RandomizedMarkov => RandomizedEvent::Markov { a: a.clone() },
                Scenario::RandomizedChebyshev => {
                    RandomizedEvent::ChebyshevRoot { a: a.clone(), q: prm.q.expect("q"), mean: mean.clone() }
                }
                _ => RandomizedEvent::Chernoff { a: a.clone(), gamma: prm.gamma.expect("gamma") },
            };
            for i in 0..trials {
                let x = dist.sample(&mut seeds.trial_rng(i));
                let randomized = randomized_event(x, &eye, &form)?;
                let plain = match &form {
                    RandomizedEvent::Markov { a } => loewner_geq(x, a, tol())?,
                    RandomizedEvent::ChebyshevRoot { a, .. } => loewner_geq(&(x - &mean).abs()?, a, tol())?,
                    RandomizedEvent::Chernoff { a, gamma } => {
                        loewner_geq(&(x * *gamma).exp()?, &(a * *gamma).exp()?, tol())?
                    }
                    RandomizedEvent::ChernoffHoeffding { .. } => unreachable!(),
                };
                if randomized != plain {
                    mismatches += 1;
                }
            }
        }
        Scenario::RandomizedChernoffHoeffding => {
            let dist = discrete_of(cfg)?;
            let (n, gamma, beta) = (prm.n.expect("n"), prm.gamma.expect("gamma"), prm.beta.expect("beta"));
            let mean = dist.exact_mean();
            let form = RandomizedEvent::ChernoffHoeffding { gamma, beta, mean: mean.clone() };
            for i in 0..trials {
                let mut r = seeds.trial_rng(i);
                let xs: Vec<SymMatrix> = (0..n).map(|_| dist.sample(&mut r).clone()).collect();
                let avg = &sum(&xs)? * (1.0 / n as f64);
                let randomized = randomized_event(&avg, &eye, &form)?;
                let plain = (&avg - &mean).min_eig()? >= beta.ln() / gamma;
                if randomized != plain {
                    mismatches += 1;
                }
            }
        }
        Scenario::RandomizedVille => {
            let (factors, kind) = match &cfg.distribution {
                Some(DistributionSpec::Multiplicative { factors, martingale }) => (factors.clone(), *martingale),
                other => panic!("expected a multiplicative process, got {other:?}"),
            };
            let proc = MultiplicativeProcess::new(mats.b.clone().expect("b"), factors, kind)?;
            let a = mats.a.clone().expect("a");
            let horizon = prm.horizon.expect("horizon");
            let kind = match prm.stopping.unwrap_or(StopAt::FirstHit) {
                StopAt::FirstHit => StoppingKind::FirstHit,
                StopAt::Fixed => StoppingKind::Fixed,
            };
            let rule = StoppingRule::new(kind, horizon)?;
            for i in 0..trials {
                let path = proc.sample_path(&mut seeds.trial_rng(i), horizon);
                if ville_stopped_event(&path, &rule, &a, Some(&eye))? != ville_stopped_event(&path, &rule, &a, None)? {
                    mismatches += 1;
                }
            }
        }
        Scenario::RandomizedEb => {
            let dist = discrete_of(cfg)?;
            let rule = match prm.prediction.unwrap_or(PredictionKind::ConditionalMean) {
                PredictionKind::ConditionalMean => PredictionRule::ConditionalMean,
                PredictionKind::RunningMean => {
                    PredictionRule::RunningMean { init: mats.x_hat_init.clone().expect("init") }
                }
            };
            let model = EbModel::new(dist, prm.gamma.expect("gamma"), rule)?;
            let (alpha, horizon) = (prm.alpha.expect("alpha"), prm.horizon.expect("horizon"));
            let fixed = prm.stopping.unwrap_or(StopAt::Fixed) == StopAt::Fixed;
            for i in 0..trials {
                let path = model.sample_path(&mut seeds.trial_rng(i), horizon)?;
                if model.alpha_event(&path, alpha, Some(1.0), fixed)? != model.alpha_event(&path, alpha, None, fixed)? {
                    mismatches += 1;
                }
            }
        }
        other => panic!("{other} is not randomized"),
    }
    Ok(mismatches)
}

fn c11_properties() -> Result<Outcome> {
    let props = [
        Property::GoldenThompson,
        Property::MinEigExpIdentity,
        Property::TraceMonotone,
        Property::OperatorMonotoneQ,
        Property::CgfSubadditivity,
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, p) in props.into_iter().enumerate() {
        let rep = property_run(p, 1000, 11_000 + k as u64)?;
        ok &= rep.passed && rep.failures == 0 && rep.instances == 1000;
        parts.push(format!("{}: {} fail, worst {:.1e}", p.name(), rep.failures, rep.worst_residual));
    }
    Ok(Outcome::new(ok, parts.join("; ")))
}

fn c12_factor_d() -> Result<Outcome> {
    let mut configs: Vec<ExperimentConfig> =
        ["markov", "laplace", "azuma", "mcdiarmid"].into_iter().map(shipped).collect::<Result<_>>()?;
    let mut r = rng(12, 0);
    for d in [3usize, 4] {
        let mut m = base(Scenario::Markov, d, 0, 12_000 + d as u64);
        m.distribution = Some(DistributionSpec::Discrete {
            atoms: vec![
                Atom { prob: 0.3, value: random_psd(d, 1.0, &mut r) },
                Atom { prob: 0.7, value: random_psd(d, 1.0, &mut r) },
            ],
        });
        m.matrices.a = Some(random_pd(d, 1.0, 0.2, &mut r));
        configs.push(m);

        let mut l = base(Scenario::Laplace, d, 0, 12_100 + d as u64);
        l.distribution = Some(DistributionSpec::Discrete {
            atoms: vec![
                Atom { prob: 0.6, value: random_symmetric(d, 0.8, &mut r) },
                Atom { prob: 0.4, value: random_symmetric(d, 0.8, &mut r) },
            ],
        });
        l.params.t = Some(0.5);
        configs.push(l);

        let mut az = base(Scenario::Azuma, d, 0, 12_200 + d as u64);
        az.matrices.a_k = Some((0..5).map(|_| random_symmetric(d, 0.5, &mut r)).collect());
        az.params.t = Some(1.5);
        configs.push(az);

        let mut mc = base(Scenario::Mcdiarmid, d, 0, 12_300 + d as u64);
        mc.matrices.b_k = Some((0..4).map(|_| random_symmetric(d, 0.4, &mut r)).collect());
        mc.params.t = Some(0.8);
        configs.push(mc);
    }
    let mut worst = 0.0f64;
    let mut misses = Vec::new();
    for cfg in &configs {
        let rep = run(cfg, RunMode::Bound, 1)?;
        let ours = rep.bounds[0].value;
        let anti = rep.anti_order_reference.unwrap_or(f64::NAN);
        let expected = cfg.dim as f64 * ours;
        let rel = (anti - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if !(rel <= 1e-12) {
            misses.push(format!("{} d={}: anti={anti} d*bound={expected}", cfg.scenario, cfg.dim));
        }
    }
    Ok(Outcome::new(
        misses.is_empty(),
        format!("{} reports, worst relative gap {worst:.1e}{}", configs.len(), fmt_misses(&misses)),
    ))
}

/// Rendered report plus a full-precision dump, wall clock zeroed.
fn normalized_json(mut rep: Report) -> Result<String> {
    rep.wall_clock_seconds = 0.0;
    let raw = serde_json::to_string(&rep).expect("report serializes");
    Ok(report_json(&rep)? + &raw)
}

fn c13_reproducibility() -> Result<Outcome> {
    let files = loewner::experiment::config_files(&configs_dir())?;
    let mut misses = Vec::new();
    for f in &files {
        let cfg = ExperimentConfig::load(f)?;
        let serial = normalized_json(run(&cfg, RunMode::Verify, 1)?)?;
        let parallel = normalized_json(run(&cfg, RunMode::Verify, 4)?)?;
        let again = normalized_json(run(&cfg, RunMode::Verify, 4)?)?;
        if serial != parallel || parallel != again {
            misses.push(cfg.scenario.to_string());
        }
    }
    Ok(Outcome::new(
        misses.is_empty() && !files.is_empty(),
        format!("{} shipped configs byte-identical across 1 and 4 workers{}", files.len(), fmt_misses(&misses)),
    ))
}
