//! Right-hand sides of the Loewner-order tail bounds.
//!
//! Every bound here controls an *order* event such as `{X ⪰ A}` or
//! `{λ_min(Y) ≥ t}`. The matching anti-order bounds from earlier work are
//! larger by exactly the dimension `d`; [`anti_order_markov`] and friends
//! compute those reference values independently for comparison.
//!
//! Expectations over discrete distributions are exact atom-weighted sums, so
//! every bound is deterministic. Values above one are returned unclamped.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::DiscreteMatrixDist;
use crate::symmat::{general_exp, similarity_power_trace, spectral_norm, SymMatrix};

/// Which inequality a [`BoundResult`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    Markov,
    ChebyshevPower,
    ChebyshevRoot,
    Chernoff,
    ChernoffKl,
    Laplace,
    Master,
    BernsteinBoundedH,
    BernsteinBoundedSimplified,
    BernsteinSubexp,
    Azuma,
    Mcdiarmid,
    Hoeffding,
    Doob,
    DoobIndicator,
    Ville,
    EmpiricalBernstein,
    RandomizedMarkov,
    RandomizedChebyshev,
    RandomizedChernoff,
    RandomizedChernoffHoeffding,
    RandomizedVille,
    RandomizedEmpiricalBernstein,
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        write!(f, "{}", s.as_str().unwrap_or("?"))
    }
}

/// A bound value with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub theorem_id: TheoremId,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_sq: Option<f64>,
    #[serde(default)]
    pub notes: String,
}

impl BoundResult {
    pub fn new(theorem_id: TheoremId, value: f64) -> Self {
        BoundResult { theorem_id, value, theta_star: None, sigma_sq: None, notes: String::new() }
    }

    pub fn with_theorem(mut self, id: TheoremId) -> Self {
        self.theorem_id = id;
        self
    }

    pub fn with_sigma_sq(mut self, s: f64) -> Self {
        self.sigma_sq = Some(s);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(&note);
        self
    }
}

/// Log-spaced grid for the infimum over `θ > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub log10_min: f64,
    pub log10_max: f64,
    pub points: usize,
    pub refine_iters: usize,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        ThetaGrid { log10_min: -4.0, log10_max: 4.0, points: 200, refine_iters: 60 }
    }
}

impl ThetaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.log10_min < self.log10_max) || !self.log10_min.is_finite() || !self.log10_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "theta grid needs log10_min < log10_max, got [{}, {}]",
                self.log10_min, self.log10_max
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidInput(format!("theta grid needs at least 2 points, got {}", self.points)));
        }
        Ok(())
    }

    fn log_theta(&self, i: usize) -> f64 {
        self.log10_min + (self.log10_max - self.log10_min) * i as f64 / (self.points - 1) as f64
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.points).map(|i| 10f64.powf(self.log_theta(i))).collect()
    }
}

/// Minimizer found by [`optimize_theta`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaOptimum {
    pub theta_star: f64,
    pub value: f64,
    /// The best raw grid point was an endpoint, so the true infimum may lie
    /// outside the grid.
    pub boundary: bool,
}

/// Grid scan in `log θ` followed by golden-section refinement on the bracket
/// around the best grid point. Non-finite objective values are skipped.
pub fn optimize_theta<F: Fn(f64) -> f64>(objective: F, grid: &ThetaGrid) -> Result<ThetaOptimum> {
    grid.validate()?;
    let values: Vec<f64> = (0..grid.points).map(|i| objective(10f64.powf(grid.log_theta(i)))).collect();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Evaluation("objective is non-finite on the whole theta grid".into()))?;
    let mut opt = ThetaOptimum {
        theta_star: 10f64.powf(grid.log_theta(best)),
        value: values[best],
        boundary: best == 0 || best == grid.points - 1,
    };
    if opt.boundary {
        return Ok(opt);
    }

    let eval = |x: f64| {
        let v = objective(10f64.powf(x));
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (grid.log_theta(best - 1), grid.log_theta(best + 1));
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    for _ in 0..grid.refine_iters {
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f < opt.value {
                opt.value = f;
                opt.theta_star = 10f64.powf(x);
            }
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    Ok(opt)
}

fn ensure_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    a.ensure_same_dim(b)
}

/// Order-version Markov bound `tr((E X) A^{-1}) / d`, evaluated through the
/// symmetric form `tr(A^{-1/2} (E X) A^{-1/2}) / d`.
pub fn markov_bound(mean_x: &SymMatrix, a: &SymMatrix) -> Result<BoundResult> {
    ensure_dims(mean_x, a)?;
    mean_x.require_psd("Markov bound mean")?;
    let ais = a.inv_sqrt()?;
    let value = mean_x.conjugate_by(&ais).trace() / a.dim() as f64;
    Ok(BoundResult::new(TheoremId::Markov, value.max(0.0)))
}

/// Anti-order Markov right-hand side `tr((E X) A^{-1})`, computed with an
/// explicit LU inverse and a plain product.
pub fn anti_order_markov(mean_x: &SymMatrix, a: &SymMatrix) -> Result<f64> {
    ensure_dims(mean_x, a)?;
    let inv = a.as_dmatrix().clone().try_inverse().ok_or_else(|| Error::Domain("matrix is singular".into()))?;
    Ok((mean_x.as_dmatrix() * inv).trace())
}

/// Power (`p ≥ 1`) or root (`0 < q ≤ 1`) form of the Chebyshev bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChebyshevMode {
    Power(f64),
    Root(f64),
}

/// `|X_i − E X|` for every atom.
pub fn centered_abs(dist: &DiscreteMatrixDist) -> Result<DiscreteMatrixDist> {
    let mean = dist.exact_mean();
    dist.map(|x| (x - &mean).abs())
}

pub fn chebyshev_bound(dist: &DiscreteMatrixDist, a: &SymMatrix, mode: ChebyshevMode) -> Result<BoundResult> {
    ensure_dims(&dist.exact_mean(), a)?;
    a.require_pd("Chebyshev threshold")?;
    let d = a.dim() as f64;
    let dev = centered_abs(dist)?;
    match mode {
        ChebyshevMode::Power(p) => {
            if !(p >= 1.0) || !p.is_finite() {
                return Err(Error::Domain(format!("power mode needs p >= 1, got {p}")));
            }
            let v = dev.expect_scalar(|b| similarity_power_trace(b, a, p))? / d;
            Ok(BoundResult::new(TheoremId::ChebyshevPower, v).with_note(format!("p = {p}")))
        }
        ChebyshevMode::Root(q) => {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::Domain(format!("root mode needs 0 < q <= 1, got {q}")));
            }
            let moment = dev.expect(|b| b.powf(q))?;
            let half = a.powf(-q / 2.0)?;
            let v = moment.conjugate_by(&half).trace() / d;
            Ok(BoundResult::new(TheoremId::ChebyshevRoot, v.max(0.0)).with_note(format!("q = {q}")))
        }
    }
}

/// `‖E exp(T (X − A) T̃)‖ⁿ` for iid copies of `X`, with `‖·‖` the largest
/// singular value since the exponent need not be symmetric.
pub fn chernoff_bound(
    dist: &DiscreteMatrixDist,
    a: &SymMatrix,
    t_conj: &SymMatrix,
    t_conj2: &SymMatrix,
    n: usize,
) -> Result<BoundResult> {
    ensure_dims(&dist.exact_mean(), a)?;
    ensure_dims(a, t_conj)?;
    ensure_dims(a, t_conj2)?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    t_conj.require_psd("conjugation T")?;
    t_conj2.require_psd("conjugation T~")?;
    let d = a.dim();
    let mut acc = nalgebra::DMatrix::<f64>::zeros(d, d);
    for atom in dist.atoms() {
        let diff = &atom.value - a;
        let exponent = t_conj.as_dmatrix() * diff.as_dmatrix() * t_conj2.as_dmatrix();
        acc += general_exp(&exponent)? * atom.prob;
    }
    let norm = spectral_norm(&acc);
    Ok(BoundResult::new(TheoremId::Chernoff, norm.powi(n as i32)).with_note(format!("n = {n}")))
}

/// Binary relative entropy `D(x‖y)` with `0·log 0 = 0`.
pub fn kl_div(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("kl_div needs x in [0, 1], got {x}")));
    }
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Domain(format!("kl_div needs y in (0, 1), got {y}")));
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a.ln() - b.ln()) };
    Ok((term(x, y) + term(1.0 - x, 1.0 - y)).max(0.0))
}

/// `exp(−n D(a‖m))` for `0 ≤ m ≤ a ≤ 1`.
pub fn chernoff_kl_bound(n: usize, a: f64, m: f64) -> Result<BoundResult> {
    if !(0.0 <= m && m <= a && a <= 1.0) {
        return Err(Error::Domain(format!("need 0 <= m <= a <= 1, got m = {m}, a = {a}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let v = (-(n as f64) * kl_div(a, m)?).exp();
    Ok(BoundResult::new(TheoremId::ChernoffKl, v).with_note(format!("n = {n}, a = {a}, m = {m}")))
}

fn infimum_bound(
    id: TheoremId,
    log_objective: impl Fn(f64) -> f64,
    zero_limit: f64,
    grid: &ThetaGrid,
) -> Result<BoundResult> {
    let opt = optimize_theta(|th| log_objective(th).exp(), grid)?;
    let mut res = BoundResult::new(id, opt.value);
    res.theta_star = Some(opt.theta_star);
    if opt.boundary {
        res = res.with_note("infimum attained at a grid boundary");
    }
    // the infimum over θ > 0 never exceeds the θ → 0⁺ limit
    if zero_limit.is_finite() && zero_limit < res.value {
        res.value = zero_limit;
        res.theta_star = Some(grid.thetas()[0]);
        res = res.with_note("theta -> 0 limit");
    }
    Ok(res)
}

/// `(1/d) inf_{θ>0} e^{−θt} E tr e^{θY}`.
///
/// `log_tr_mgf` must return `log E tr e^{θY}`; working with the logarithm
/// keeps the objective finite for large `θ`.
pub fn laplace_bound<F: Fn(f64) -> f64>(log_tr_mgf: F, t: f64, d: usize, grid: &ThetaGrid) -> Result<BoundResult> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let ln_d = (d as f64).ln();
    let zero = (log_tr_mgf(0.0) - ln_d).exp();
    infimum_bound(TheoremId::Laplace, |th| -th * t + log_tr_mgf(th) - ln_d, zero, grid)
}

/// [`laplace_bound`] for a discrete `Y`, using the exact trace MGF.
pub fn laplace_bound_discrete(dist: &DiscreteMatrixDist, t: f64, grid: &ThetaGrid) -> Result<BoundResult> {
    // surface eigen-decomposition failures before the optimizer hides them
    dist.log_trace_mgf(1.0)?;
    laplace_bound(|th| dist.log_trace_mgf(th).unwrap_or(f64::NAN), t, dist.dim(), grid)
}

/// `(1/d) inf_{θ>0} e^{−θt} tr exp(Σ_k log E e^{θX_k})`.
///
/// `cgf_sum(θ)` returns `Σ_k log E e^{θX_k}`; evaluation failures at a grid
/// point are skipped like non-finite values.
pub fn master_bound<F>(cgf_sum: F, t: f64, d: usize, grid: &ThetaGrid) -> Result<BoundResult>
where
    F: Fn(f64) -> Result<SymMatrix>,
{
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let ln_d = (d as f64).ln();
    let log_tr = |th: f64| cgf_sum(th).and_then(|c| c.log_trace_exp()).unwrap_or(f64::NAN);
    let zero = (log_tr(0.0) - ln_d).exp();
    infimum_bound(TheoremId::Master, |th| -th * t + log_tr(th) - ln_d, zero, grid)
}

/// [`master_bound`] for independent discrete summands, with exact CGFs.
pub fn master_bound_discrete(dists: &[DiscreteMatrixDist], t: f64, grid: &ThetaGrid) -> Result<BoundResult> {
    let first = dists.first().ok_or_else(|| Error::InvalidInput("master bound needs at least one summand".into()))?;
    let d = first.dim();
    for k in dists {
        if k.dim() != d {
            return Err(Error::InvalidInput("summands disagree on dimension".into()));
        }
    }
    master_bound(
        |th| {
            let mut acc = SymMatrix::zeros(d);
            for k in dists {
                acc = &acc + &k.log_mgf(th)?;
            }
            Ok(acc)
        },
        t,
        d,
        grid,
    )
}

/// Bennett's function `h(x) = (1 + x) log(1 + x) − x`.
pub fn h_bennett(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("h needs x >= 0, got {x}")));
    }
    Ok((1.0 + x) * x.ln_1p() - x)
}

fn require_sigma_sq(sigma_sq: f64) -> Result<()> {
    if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
        return Err(Error::Domain(format!("sigma^2 must be positive, got {sigma_sq}")));
    }
    Ok(())
}

fn require_t(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    Ok(())
}

/// Bounded-case Bernstein: the Bennett form and its simplified relaxation.
pub fn bernstein_bounded_bound(sigma_sq: f64, r: f64, t: f64) -> Result<(BoundResult, BoundResult)> {
    require_sigma_sq(sigma_sq)?;
    require_t(t)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("R must be positive, got {r}")));
    }
    let h_form = (-(sigma_sq / (r * r)) * h_bennett(r * t / sigma_sq)?).exp();
    let simple = (-(t * t / 2.0) / (sigma_sq + r * t / 3.0)).exp();
    Ok((
        BoundResult::new(TheoremId::BernsteinBoundedH, h_form).with_sigma_sq(sigma_sq),
        BoundResult::new(TheoremId::BernsteinBoundedSimplified, simple).with_sigma_sq(sigma_sq),
    ))
}

/// Subexponential Bernstein `exp(−(t²/2)/(σ² + Rt))`. `R = 0` is accepted as
/// the sub-Gaussian limit.
pub fn bernstein_subexp_bound(sigma_sq: f64, r: f64, t: f64) -> Result<BoundResult> {
    require_sigma_sq(sigma_sq)?;
    require_t(t)?;
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("R must be nonnegative, got {r}")));
    }
    let v = (-(t * t / 2.0) / (sigma_sq + r * t)).exp();
    Ok(BoundResult::new(TheoremId::BernsteinSubexp, v).with_sigma_sq(sigma_sq))
}

/// Azuma `exp(−t²/(8σ²))`; also the McDiarmid bound when `σ²` comes from the
/// difference matrices.
pub fn azuma_bound(sigma_sq: f64, t: f64) -> Result<BoundResult> {
    require_sigma_sq(sigma_sq)?;
    require_t(t)?;
    Ok(BoundResult::new(TheoremId::Azuma, (-t * t / (8.0 * sigma_sq)).exp()).with_sigma_sq(sigma_sq))
}

/// Hoeffding `exp(−n t²/(2σ²))` with `σ² = ‖(1/n) Σ V_i‖`.
///
/// When `σ² = 0` and `t > 0` the value is the limit `0`.
pub fn hoeffding_bound(v_mats: &[SymMatrix], t: f64) -> Result<BoundResult> {
    require_t(t)?;
    let n = v_mats.len();
    let first =
        v_mats.first().ok_or_else(|| Error::InvalidInput("Hoeffding bound needs at least one parameter".into()))?;
    let mut acc = SymMatrix::zeros(first.dim());
    for v in v_mats {
        first.ensure_same_dim(v)?;
        v.require_psd("sub-Gaussian parameter")?;
        acc = &acc + v;
    }
    let sigma_sq = (&acc * (1.0 / n as f64)).op_norm()?;
    let value = if t == 0.0 {
        1.0
    } else if sigma_sq == 0.0 {
        0.0
    } else {
        (-(n as f64) * t * t / (2.0 * sigma_sq)).exp()
    };
    Ok(BoundResult::new(TheoremId::Hoeffding, value).with_sigma_sq(sigma_sq).with_note(format!("n = {n}")))
}

/// `g(x) = −log(1 − x) − x`.
pub fn g_eb(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("g needs x in [0, 1), got {x}")));
    }
    Ok(-(-x).ln_1p() - x)
}

/// `(log(u/α) + λ_max(Σ g(γ_i)(X_i − X̂_i)²)) / Σ γ_i` with `u = 1` unless a
/// super-uniform draw is supplied.
pub fn eb_threshold(gammas: &[f64], quad_sum: &SymMatrix, alpha: f64, randomizer_u: Option<f64>) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let gamma_sum: f64 = gammas.iter().sum();
    eb_threshold_from_sum(gamma_sum, quad_sum, alpha, randomizer_u)
}

pub(crate) fn eb_threshold_from_sum(
    gamma_sum: f64,
    quad_sum: &SymMatrix,
    alpha: f64,
    randomizer_u: Option<f64>,
) -> Result<f64> {
    if !(gamma_sum > 0.0) {
        return Err(Error::InvalidInput(format!("sum of gammas must be positive, got {gamma_sum}")));
    }
    let u = randomizer_u.unwrap_or(1.0);
    if !(u >= 0.0) {
        return Err(Error::InvalidInput(format!("randomizer must be nonnegative, got {u}")));
    }
    Ok(((u / alpha).ln() + quad_sum.max_eig()?) / gamma_sum)
}

/// `(1/d) tr(E[e^{γX}] e^{−γA})`, the randomized Chernoff bound.
pub fn randomized_chernoff_bound(dist: &DiscreteMatrixDist, a: &SymMatrix, gamma: f64) -> Result<BoundResult> {
    ensure_dims(&dist.exact_mean(), a)?;
    let mgf = dist.exact_mgf(gamma)?;
    let half = (a * (-gamma / 2.0)).exp()?;
    let v = mgf.conjugate_by(&half).trace() / a.dim() as f64;
    Ok(BoundResult::new(TheoremId::RandomizedChernoff, v).with_note(format!("gamma = {gamma}")))
}

/// `(1/(βd)) tr(G(γ/n)ⁿ)` with `G(s) = E e^{s(X − M)}`.
pub fn randomized_chernoff_hoeffding_bound(
    dist: &DiscreteMatrixDist,
    n: usize,
    gamma: f64,
    beta: f64,
) -> Result<BoundResult> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if !(gamma > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!("need gamma > 0 and beta > 0, got {gamma}, {beta}")));
    }
    let mean = dist.exact_mean();
    let s = gamma / n as f64;
    let g = dist.expect(|x| (&(x - &mean) * s).exp())?;
    let tr: f64 = g.eigenvalues()?.iter().map(|l| l.max(0.0).powi(n as i32)).sum();
    let v = tr / (beta * g.dim() as f64);
    Ok(BoundResult::new(TheoremId::RandomizedChernoffHoeffding, v)
        .with_note(format!("n = {n}, gamma = {gamma}, beta = {beta}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::tight_example_dist;
    use approx::assert_relative_eq;

    fn diag(v: &[f64]) -> SymMatrix {
        SymMatrix::from_diagonal(v).unwrap()
    }

    #[test]
    fn markov_examples() {
        let a = SymMatrix::from_rows(&[vec![2.0, 0.4], vec![0.4, 1.0]]).unwrap();
        let b = markov_bound(&(&a * 0.3), &a).unwrap();
        assert_relative_eq!(b.value, 0.3, epsilon = 1e-12);
        assert_eq!(markov_bound(&SymMatrix::zeros(2), &a).unwrap().value, 0.0);
        let b = markov_bound(&SymMatrix::identity(2), &SymMatrix::scaled_identity(2, 2.0)).unwrap();
        assert_relative_eq!(b.value, 0.5, epsilon = 1e-15);
        assert!(matches!(markov_bound(&SymMatrix::identity(2), &diag(&[1.0, 0.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn markov_times_d_is_anti_order() {
        let a = SymMatrix::from_rows(&[vec![3.0, 1.0, 0.0], vec![1.0, 2.0, 0.5], vec![0.0, 0.5, 1.0]]).unwrap();
        let m = SymMatrix::from_rows(&[vec![1.0, 0.2, 0.1], vec![0.2, 0.5, 0.0], vec![0.1, 0.0, 0.3]]).unwrap();
        let ours = markov_bound(&m, &a).unwrap().value * 3.0;
        assert_relative_eq!(ours, anti_order_markov(&m, &a).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn chebyshev_examples() {
        let a = SymMatrix::identity(2);
        let constant = DiscreteMatrixDist::point_mass(diag(&[1.0, -1.0]));
        assert_eq!(chebyshev_bound(&constant, &a, ChebyshevMode::Power(2.0)).unwrap().value, 0.0);
        assert_eq!(chebyshev_bound(&constant, &a, ChebyshevMode::Root(0.5)).unwrap().value, 0.0);

        let pm = DiscreteMatrixDist::from_pairs(vec![(0.5, SymMatrix::identity(2)), (0.5, -&SymMatrix::identity(2))])
            .unwrap();
        let p2 = chebyshev_bound(&pm, &a, ChebyshevMode::Power(2.0)).unwrap();
        assert_relative_eq!(p2.value, 1.0, epsilon = 1e-14);
        let q1 = chebyshev_bound(&pm, &SymMatrix::scaled_identity(2, 2.0), ChebyshevMode::Root(1.0)).unwrap();
        assert_relative_eq!(q1.value, 0.5, epsilon = 1e-14);

        assert!(chebyshev_bound(&pm, &a, ChebyshevMode::Power(0.5)).is_err());
        assert!(chebyshev_bound(&pm, &a, ChebyshevMode::Root(1.5)).is_err());
        assert!(chebyshev_bound(&pm, &diag(&[1.0, -1.0]), ChebyshevMode::Root(1.0)).is_err());
    }

    #[test]
    fn chernoff_examples() {
        let a = SymMatrix::identity(2);
        let i = SymMatrix::identity(2);
        let fixed = DiscreteMatrixDist::point_mass(a.clone());
        for n in [1, 3] {
            assert_relative_eq!(chernoff_bound(&fixed, &a, &i, &i, n).unwrap().value, 1.0, epsilon = 1e-14);
        }
        let two = tight_example_dist(&a, 0.5).unwrap();
        let v1 = chernoff_bound(&two, &a, &i, &i, 1).unwrap().value;
        let expected = 0.5 + 0.5 * (-1f64).exp();
        assert_relative_eq!(v1, expected, max_relative = 1e-13);
        assert_relative_eq!(v1, 0.68394, epsilon = 1e-5);
        let v2 = chernoff_bound(&two, &a, &i, &i, 2).unwrap().value;
        assert_relative_eq!(v2, expected * expected, max_relative = 1e-13);
        assert_relative_eq!(v2, 0.46777, epsilon = 1e-5);
    }

    #[test]
    fn chernoff_accepts_unequal_conjugations() {
        let a = SymMatrix::scaled_identity(2, 0.5);
        let dist = DiscreteMatrixDist::from_pairs(vec![
            (0.4, SymMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 0.2]]).unwrap()),
            (0.6, diag(&[0.1, 0.0])),
        ])
        .unwrap();
        let t = diag(&[1.0, 2.0]);
        let tt = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let v = chernoff_bound(&dist, &a, &t, &tt, 3).unwrap();
        assert!(v.value.is_finite() && v.value > 0.0);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_div(0.37, 0.37).unwrap(), 0.0);
        assert_relative_eq!(kl_div(1.0, 0.5).unwrap(), 2f64.ln(), max_relative = 1e-15);
        // 0.8 ln 1.6 + 0.2 ln 0.4
        assert_relative_eq!(kl_div(0.8, 0.5).unwrap(), 0.192745, epsilon = 1e-6);
        assert!(kl_div(0.5, 0.0).is_err());
        assert!(kl_div(0.5, 1.0).is_err());
        assert_eq!(chernoff_kl_bound(5, 0.4, 0.4).unwrap().value, 1.0);
        assert_relative_eq!(chernoff_kl_bound(10, 0.8, 0.5).unwrap().value, 0.1455191522836684, max_relative = 1e-12);
        assert_relative_eq!(chernoff_kl_bound(1, 1.0, 0.5).unwrap().value, 0.5, max_relative = 1e-14);
        assert!(chernoff_kl_bound(3, 0.3, 0.5).is_err());
    }

    #[test]
    fn optimize_theta_examples() {
        let g = ThetaGrid::default();
        let opt = optimize_theta(|th| (-th + th * th / 2.0).exp(), &g).unwrap();
        assert_relative_eq!(opt.theta_star, 1.0, max_relative = 1e-6);
        assert_relative_eq!(opt.value, (-0.5f64).exp(), max_relative = 1e-12);
        assert!(!opt.boundary);

        let opt = optimize_theta(|th| 1.0 / (1.0 + th), &g).unwrap();
        assert!(opt.boundary);
        assert_relative_eq!(opt.theta_star, 1e4, max_relative = 1e-12);

        let opt = optimize_theta(|_| 1.0, &g).unwrap();
        assert_eq!(opt.value, 1.0);

        assert!(matches!(optimize_theta(|_| f64::NAN, &g), Err(Error::Evaluation(_))));
        let bad = ThetaGrid { points: 1, ..g };
        assert!(optimize_theta(|_| 1.0, &bad).is_err());
    }

    #[test]
    fn optimize_theta_beats_raw_grid() {
        let g = ThetaGrid { points: 7, ..Default::default() };
        let f = |th: f64| (th.ln() - 0.37).powi(2) + 0.1;
        let opt = optimize_theta(f, &g).unwrap();
        let raw_min = g.thetas().into_iter().map(f).fold(f64::INFINITY, f64::min);
        assert!(opt.value <= raw_min);
        assert_relative_eq!(opt.value, 0.1, epsilon = 1e-10);
    }

    #[test]
    fn laplace_examples() {
        let g = ThetaGrid::default();
        let zero = DiscreteMatrixDist::point_mass(SymMatrix::zeros(3));
        assert_relative_eq!(laplace_bound_discrete(&zero, 0.0, &g).unwrap().value, 1.0, epsilon = 1e-15);

        let rad = DiscreteMatrixDist::from_pairs(vec![(0.5, SymMatrix::identity(2)), (0.5, -&SymMatrix::identity(2))])
            .unwrap();
        let b = laplace_bound_discrete(&rad, 1.0, &g).unwrap();
        assert_relative_eq!(b.value, 0.5, epsilon = 1e-9);

        // standard normal scalar: log E e^{θY} = θ²/2, minimum at θ = t
        let b = laplace_bound(|th| th * th / 2.0, 1.0, 1, &g).unwrap();
        assert_relative_eq!(b.value, (-0.5f64).exp(), max_relative = 1e-10);
        assert_relative_eq!(b.theta_star.unwrap(), 1.0, max_relative = 1e-5);
    }

    #[test]
    fn master_single_summand_matches_laplace() {
        let g = ThetaGrid::default();
        let dist = DiscreteMatrixDist::from_pairs(vec![
            (0.3, SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, -0.2]]).unwrap()),
            (0.7, diag(&[-0.4, 0.3])),
        ])
        .unwrap();
        for t in [0.0, 0.2, 0.5] {
            let m = master_bound_discrete(std::slice::from_ref(&dist), t, &g).unwrap();
            let l = laplace_bound_discrete(&dist, t, &g).unwrap();
            assert_relative_eq!(m.value, l.value, max_relative = 1e-9);
        }
        let zero = DiscreteMatrixDist::point_mass(SymMatrix::zeros(2));
        assert_relative_eq!(master_bound_discrete(&[zero], 0.0, &g).unwrap().value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn scalar_helpers() {
        assert_eq!(h_bennett(0.0).unwrap(), 0.0);
        assert_relative_eq!(h_bennett(1.0).unwrap(), 2.0 * 2f64.ln() - 1.0, max_relative = 1e-15);
        assert_relative_eq!(h_bennett(std::f64::consts::E - 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert!(h_bennett(-0.1).is_err());

        assert_eq!(g_eb(0.0).unwrap(), 0.0);
        assert_relative_eq!(g_eb(0.5).unwrap(), 2f64.ln() - 0.5, max_relative = 1e-14);
        assert_relative_eq!(g_eb(0.9).unwrap(), 10f64.ln() - 0.9, max_relative = 1e-13);
        assert!(g_eb(1.0).is_err());
    }

    #[test]
    fn bernstein_examples() {
        let (h, s) = bernstein_bounded_bound(1.0, 1.0, 0.0).unwrap();
        assert_eq!((h.value, s.value), (1.0, 1.0));
        let (h, s) = bernstein_bounded_bound(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(h.value, 0.67957, epsilon = 1e-5);
        assert_relative_eq!(s.value, (-0.375f64).exp(), max_relative = 1e-14);
        let (_, s) = bernstein_bounded_bound(4.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(s.value, 0.65144, epsilon = 1e-5);
        assert!(bernstein_bounded_bound(0.0, 1.0, 1.0).is_err());

        assert_eq!(bernstein_subexp_bound(1.0, 1.0, 0.0).unwrap().value, 1.0);
        assert_relative_eq!(
            bernstein_subexp_bound(1.0, 1.0, 1.0).unwrap().value,
            (-0.25f64).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(bernstein_subexp_bound(1.0, 1e-12, 1.0).unwrap().value, 0.60653, epsilon = 1e-5);
        assert!(bernstein_subexp_bound(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn azuma_and_hoeffding_examples() {
        assert_eq!(azuma_bound(1.0, 0.0).unwrap().value, 1.0);
        assert_relative_eq!(azuma_bound(1.0, 2.0).unwrap().value, (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(azuma_bound(2.0, 4.0).unwrap().value, (-1f64).exp(), max_relative = 1e-15);
        assert!(azuma_bound(0.0, 1.0).is_err());

        let eye = vec![SymMatrix::identity(2); 4];
        assert_eq!(hoeffding_bound(&eye, 0.0).unwrap().value, 1.0);
        let b = hoeffding_bound(&eye, 1.0).unwrap();
        assert_eq!(b.sigma_sq, Some(1.0));
        assert_relative_eq!(b.value, (-2f64).exp(), max_relative = 1e-15);
        let b = hoeffding_bound(&[diag(&[1.0, 4.0])], 1.0).unwrap();
        assert_relative_eq!(b.value, 0.88250, epsilon = 1e-5);
        assert_eq!(hoeffding_bound(&[SymMatrix::zeros(2)], 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn eb_threshold_examples() {
        let alpha = (-1f64).exp();
        assert_relative_eq!(
            eb_threshold(&[1.0], &SymMatrix::zeros(2), alpha, None).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        let q = diag(&[0.0, 2.0]);
        assert_relative_eq!(eb_threshold(&[0.5, 0.5], &q, 0.05, None).unwrap(), 4.99573, epsilon = 1e-5);
        assert_relative_eq!(eb_threshold(&[0.5, 0.5], &q, 0.05, Some(0.05)).unwrap(), 2.0, max_relative = 1e-15);
        assert!(eb_threshold(&[0.5], &q, 1.0, None).is_err());
        assert!(eb_threshold(&[], &q, 0.1, None).is_err());
    }

    #[test]
    fn serde_shape() {
        let b = BoundResult::new(TheoremId::RandomizedChernoffHoeffding, 0.5);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"theorem_id":"randomized_chernoff_hoeffding","value":0.5,"notes":""}"#);
        assert_eq!(TheoremId::BernsteinBoundedH.to_string(), "bernstein_bounded_h");
    }
}
