//! Distribution families quantified over by the inequalities.
//!
//! Each family carries its exact mean (and MGF where the bounds need one),
//! so no verification ever depends on an estimated hypothesis quantity.
//! Finite families also expose their support for the enumeration oracle.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::processes::{ProcessPath, ProcessStep};
use crate::symmat::{log_sum_exp, sum, SymMatrix};

/// Largest product support the enumeration oracle will walk.
pub const ENUMERATION_CAP: u128 = 1 << 16;

/// Master seed plus stream; trial `k` draws from the counter-derived
/// substream `(master_seed, stream_id, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec { master_seed, stream_id }
    }

    /// Independent generator for a single trial. The key is the full
    /// `(master_seed, stream_id, trial)` triple, so the draws of one trial
    /// never depend on which worker ran it.
    pub fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        key[16..24].copy_from_slice(&trial.to_le_bytes());
        key[24..].copy_from_slice(b"loewner\x01");
        ChaCha8Rng::from_seed(key)
    }

    pub fn substream(&self, stream_id: u64) -> SeedSpec {
        SeedSpec { master_seed: self.master_seed, stream_id }
    }
}

/// One support point of a [`DiscreteMatrixDist`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub prob: f64,
    pub value: SymMatrix,
}

/// Finitely supported matrix distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMatrixDist {
    atoms: Vec<Atom>,
    cumulative: Vec<f64>,
}

impl DiscreteMatrixDist {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let first = atoms.first().ok_or_else(|| Error::InvalidInput("distribution needs at least one atom".into()))?;
        let d = first.value.dim();
        let mut total = 0.0;
        let mut cumulative = Vec::with_capacity(atoms.len());
        for (i, a) in atoms.iter().enumerate() {
            if !(a.prob > 0.0) || !a.prob.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "atom {i} has probability {}, expected a positive number",
                    a.prob
                )));
            }
            if a.value.dim() != d {
                return Err(Error::InvalidInput(format!("atom {i} has dimension {}, expected {d}", a.value.dim())));
            }
            total += a.prob;
            cumulative.push(total);
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("atom probabilities sum to {total}, expected 1")));
        }
        Ok(DiscreteMatrixDist { atoms, cumulative })
    }

    pub fn from_pairs(pairs: Vec<(f64, SymMatrix)>) -> Result<Self> {
        DiscreteMatrixDist::new(pairs.into_iter().map(|(prob, value)| Atom { prob, value }).collect())
    }

    pub fn point_mass(value: SymMatrix) -> Self {
        DiscreteMatrixDist::new(vec![Atom { prob: 1.0, value }]).expect("single atom is valid")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].value.dim()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Applies `f` to every atom, keeping the weights.
    pub fn map<F>(&self, f: F) -> Result<DiscreteMatrixDist>
    where
        F: Fn(&SymMatrix) -> Result<SymMatrix>,
    {
        let atoms =
            self.atoms.iter().map(|a| Ok(Atom { prob: a.prob, value: f(&a.value)? })).collect::<Result<Vec<_>>>()?;
        DiscreteMatrixDist::new(atoms)
    }

    /// `Σ pᵢ f(Xᵢ)` for a matrix-valued `f`.
    pub fn expect<F>(&self, f: F) -> Result<SymMatrix>
    where
        F: Fn(&SymMatrix) -> Result<SymMatrix>,
    {
        let mut acc = SymMatrix::zeros(self.dim());
        for a in &self.atoms {
            acc = &acc + &(&f(&a.value)? * a.prob);
        }
        Ok(acc)
    }

    /// `Σ pᵢ f(Xᵢ)` for a scalar `f`.
    pub fn expect_scalar<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&SymMatrix) -> Result<f64>,
    {
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.prob * f(&a.value)?;
        }
        Ok(acc)
    }

    pub fn exact_mean(&self) -> SymMatrix {
        self.expect(|x| Ok(x.clone())).expect("mean of finite atoms")
    }

    /// `E e^{θX} = Σ pᵢ exp(θ Xᵢ)`.
    pub fn exact_mgf(&self, theta: f64) -> Result<SymMatrix> {
        self.expect(|x| (x * theta).exp())
    }

    /// `log E e^{θX}`, computed with the largest exponent factored out so that
    /// large `θ` does not overflow.
    pub fn log_mgf(&self, theta: f64) -> Result<SymMatrix> {
        let mut shift = f64::NEG_INFINITY;
        for a in &self.atoms {
            let ev = (&a.value * theta).eigenvalues()?;
            shift = shift.max(ev[ev.len() - 1]);
        }
        let d = self.dim();
        let shifted = self.expect(|x| (&(x * theta) - &SymMatrix::scaled_identity(d, shift)).exp())?;
        Ok(&shifted.log()? + &SymMatrix::scaled_identity(d, shift))
    }

    /// `log E tr e^{θX}` as a log-sum-exp over atoms and eigenvalues.
    pub fn log_trace_mgf(&self, theta: f64) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.atoms.len() * self.dim());
        for a in &self.atoms {
            for lam in a.value.eigenvalues()? {
                terms.push(a.prob.ln() + theta * lam);
            }
        }
        Ok(log_sum_exp(&terms))
    }

    /// Index of the atom selected by one uniform draw.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.atoms.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &SymMatrix {
        &self.atoms[self.sample_index(rng)].value
    }
}

impl Serialize for DiscreteMatrixDist {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.atoms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteMatrixDist {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let atoms = Vec::<Atom>::deserialize(de)?;
        DiscreteMatrixDist::new(atoms).map_err(serde::de::Error::custom)
    }
}

/// `X = A` with probability `p`, otherwise `0`. Zero-probability atoms are
/// dropped, so `p ∈ {0, 1}` yields a point mass.
pub fn tight_example_dist(a: &SymMatrix, p: f64) -> Result<DiscreteMatrixDist> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("p must lie in [0, 1], got {p}")));
    }
    a.require_pd("tight example matrix")?;
    let mut pairs = Vec::new();
    if p > 0.0 {
        pairs.push((p, a.clone()));
    }
    if p < 1.0 {
        pairs.push((1.0 - p, SymMatrix::zeros(a.dim())));
    }
    DiscreteMatrixDist::from_pairs(pairs)
}

/// `X = I` with probability `m`, otherwise `0`; so `0 ⪯ X ⪯ I` and `E X = mI`.
pub fn bounded_iid_dist(d: usize, m: f64) -> Result<DiscreteMatrixDist> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::InvalidInput(format!("m must lie in (0, 1), got {m}")));
    }
    DiscreteMatrixDist::from_pairs(vec![(m, SymMatrix::identity(d)), (1.0 - m, SymMatrix::zeros(d))])
}

/// Walks the product support of independent discrete distributions in
/// lexicographic order of atom indices.
pub struct ProductSupport<'a> {
    dists: Vec<&'a DiscreteMatrixDist>,
    indices: Vec<usize>,
    done: bool,
}

impl<'a> Iterator for ProductSupport<'a> {
    type Item = (f64, Vec<&'a SymMatrix>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut prob = 1.0;
        let mut values = Vec::with_capacity(self.dists.len());
        for (dist, &i) in self.dists.iter().zip(&self.indices) {
            prob *= dist.atoms[i].prob;
            values.push(&dist.atoms[i].value);
        }
        // advance the mixed-radix counter, last position fastest
        self.done = true;
        for pos in (0..self.indices.len()).rev() {
            self.indices[pos] += 1;
            if self.indices[pos] < self.dists[pos].len() {
                self.done = false;
                break;
            }
            self.indices[pos] = 0;
        }
        Some((prob, values))
    }
}

/// Number of sequences in the product support, saturating on overflow.
pub fn product_support_size(dists: &[&DiscreteMatrixDist]) -> u128 {
    dists.iter().fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128))
}

/// Product support of independent, not necessarily identical, distributions.
pub fn enumerate_independent<'a>(dists: &[&'a DiscreteMatrixDist]) -> Result<ProductSupport<'a>> {
    let count = product_support_size(dists);
    if count > ENUMERATION_CAP {
        return Err(Error::CapExceeded { count, cap: ENUMERATION_CAP });
    }
    if let Some(first) = dists.first() {
        if let Some(bad) = dists.iter().find(|d| d.dim() != first.dim()) {
            return Err(Error::InvalidInput(format!(
                "distributions disagree on dimension: {} vs {}",
                first.dim(),
                bad.dim()
            )));
        }
    }
    Ok(ProductSupport { dists: dists.to_vec(), indices: vec![0; dists.len()], done: false })
}

/// Support of `n` iid copies of `dist`.
pub fn enumerate_product_support(dist: &DiscreteMatrixDist, n: usize) -> Result<ProductSupport<'_>> {
    enumerate_independent(&vec![dist; n])
}

/// `X_k = ε_k A_k` with iid Rademacher signs. Conditional means are zero and
/// `X_k² = A_k²` on every draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherSequence {
    pub a_mats: Vec<SymMatrix>,
}

impl RademacherSequence {
    pub fn new(a_mats: Vec<SymMatrix>) -> Result<Self> {
        let first = a_mats
            .first()
            .ok_or_else(|| Error::InvalidInput("Rademacher sequence needs at least one matrix".into()))?;
        for a in &a_mats {
            first.ensure_same_dim(a)?;
        }
        Ok(RademacherSequence { a_mats })
    }

    pub fn dim(&self) -> usize {
        self.a_mats[0].dim()
    }

    pub fn len(&self) -> usize {
        self.a_mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_mats.is_empty()
    }

    /// `‖Σ A_k²‖`.
    pub fn sigma_sq(&self) -> Result<f64> {
        sum(&self.a_mats.iter().map(SymMatrix::square).collect::<Vec<_>>())?.op_norm()
    }

    /// Smallest `R` with `λ_max(X_k) ≤ R` on every draw.
    pub fn max_eig_bound(&self) -> Result<f64> {
        self.a_mats.iter().try_fold(0.0f64, |r, a| Ok(r.max(a.op_norm()?)))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<SymMatrix> {
        self.a_mats.iter().map(|a| if rng.random::<bool>() { a.clone() } else { -a }).collect()
    }

    /// Draws a path with the zero conditional mean attached to each step.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ProcessPath> {
        let mut path = ProcessPath::new(self.dim());
        for x in self.sample(rng) {
            path.push(ProcessStep::new(x, SymMatrix::zeros(self.dim())))?;
        }
        Ok(path)
    }

    /// The step distributions `±A_k`, each with weight 1/2.
    pub fn step_distributions(&self) -> Vec<DiscreteMatrixDist> {
        self.a_mats
            .iter()
            .map(|a| DiscreteMatrixDist::from_pairs(vec![(0.5, a.clone()), (0.5, -a)]).expect("two equal atoms"))
            .collect()
    }
}

/// `H(z) = Σ z_k B_k` with Rademacher `z_k`. Changing one coordinate moves `H`
/// by `±2B_k`, so `A_k = 2B_k` bounds the squared differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McDiarmidFamily {
    pub b_mats: Vec<SymMatrix>,
}

impl McDiarmidFamily {
    pub fn new(b_mats: Vec<SymMatrix>) -> Result<Self> {
        let first =
            b_mats.first().ok_or_else(|| Error::InvalidInput("sign function needs at least one matrix".into()))?;
        for b in &b_mats {
            first.ensure_same_dim(b)?;
        }
        Ok(McDiarmidFamily { b_mats })
    }

    pub fn dim(&self) -> usize {
        self.b_mats[0].dim()
    }

    pub fn evaluate(&self, z: &[f64]) -> Result<SymMatrix> {
        if z.len() != self.b_mats.len() {
            return Err(Error::InvalidInput(format!("expected {} arguments, got {}", self.b_mats.len(), z.len())));
        }
        let mut acc = SymMatrix::zeros(self.dim());
        for (zk, b) in z.iter().zip(&self.b_mats) {
            acc = &acc + &(b * *zk);
        }
        Ok(acc)
    }

    pub fn difference_mats(&self) -> Vec<SymMatrix> {
        self.b_mats.iter().map(|b| b * 2.0).collect()
    }

    /// `E H(Z)`, zero by sign symmetry.
    pub fn exact_mean(&self) -> SymMatrix {
        SymMatrix::zeros(self.dim())
    }

    /// `‖Σ A_k²‖` with `A_k = 2B_k`.
    pub fn sigma_sq(&self) -> Result<f64> {
        sum(&self.difference_mats().iter().map(SymMatrix::square).collect::<Vec<_>>())?.op_norm()
    }

    pub fn sample_args<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.b_mats.len()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
    }

    /// Every sign pattern with its probability `2^{-n}`.
    pub fn enumerate_args(&self) -> Result<Vec<(f64, Vec<f64>)>> {
        let n = self.b_mats.len();
        let count = 1u128.checked_shl(n as u32).unwrap_or(u128::MAX);
        if count > ENUMERATION_CAP {
            return Err(Error::CapExceeded { count, cap: ENUMERATION_CAP });
        }
        let w = 0.5f64.powi(n as i32);
        Ok((0..count as u64)
            .map(|bits| (w, (0..n).map(|k| if bits >> k & 1 == 1 { 1.0 } else { -1.0 }).collect()))
            .collect())
    }
}

/// `X = g·B` with `g` standard normal; sub-Gaussian with parameter `V = B²`,
/// attained with equality since `E e^{λgB} = e^{λ²B²/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubGaussianFactorDist {
    b: SymMatrix,
    v: SymMatrix,
}

impl SubGaussianFactorDist {
    pub fn new(b: SymMatrix) -> Self {
        let v = b.square();
        SubGaussianFactorDist { b, v }
    }

    pub fn factor(&self) -> &SymMatrix {
        &self.b
    }

    pub fn variance_proxy(&self) -> &SymMatrix {
        &self.v
    }

    /// `ψ_X(λ) = e^{λ²V/2}`.
    pub fn mgf(&self, lambda: f64) -> Result<SymMatrix> {
        (&self.v * (lambda * lambda / 2.0)).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SymMatrix {
        let g: f64 = rng.sample(StandardNormal);
        &self.b * g
    }
}

/// Which side of a martingale a multiplicative process must sit on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MartingaleKind {
    Submartingale,
    Supermartingale,
}

/// `Y_n = (∏_{i≤n} w_i)·B` with iid positive scalar factors `w`; `Y_0 = B`.
/// `E w ≥ 1` gives a PSD submartingale, `E w ≤ 1` a supermartingale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativeProcess {
    pub b: SymMatrix,
    /// `(probability, factor)` pairs.
    pub factors: Vec<(f64, f64)>,
}

impl MultiplicativeProcess {
    pub fn new(b: SymMatrix, factors: Vec<(f64, f64)>, kind: MartingaleKind) -> Result<Self> {
        b.require_psd("multiplicative process base")?;
        if factors.is_empty() {
            return Err(Error::InvalidInput("factor distribution has no atoms".into()));
        }
        let mut total = 0.0;
        for &(p, w) in &factors {
            if !(p > 0.0) || !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "factor atom ({p}, {w}) needs positive probability and positive value"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("factor probabilities sum to {total}, expected 1")));
        }
        let proc = MultiplicativeProcess { b, factors };
        let mu = proc.mean_factor();
        let ok = match kind {
            MartingaleKind::Submartingale => mu >= 1.0 - 1e-12,
            MartingaleKind::Supermartingale => mu <= 1.0 + 1e-12,
        };
        if !ok {
            return Err(Error::InvalidInput(format!("mean factor {mu} is on the wrong side of 1 for a {kind:?}")));
        }
        Ok(proc)
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn mean_factor(&self) -> f64 {
        self.factors.iter().map(|&(p, w)| p * w).sum()
    }

    /// `E Y_n = μⁿ B`.
    pub fn exact_mean(&self, n: usize) -> SymMatrix {
        &self.b * self.mean_factor().powi(n as i32)
    }

    /// Scalar multipliers `c_0 = 1, c_1, …, c_n` with `Y_k = c_k B`.
    pub fn sample_multipliers<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n + 1);
        let mut c = 1.0;
        out.push(c);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut w = self.factors[self.factors.len() - 1].1;
            for &(p, wi) in &self.factors {
                acc += p;
                if u < acc {
                    w = wi;
                    break;
                }
            }
            c *= w;
            out.push(c);
        }
        out
    }

    /// Path `Y_0, …, Y_n`.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<SymMatrix> {
        self.sample_multipliers(rng, n).into_iter().map(|c| &self.b * c).collect()
    }

    /// Every multiplier path of length `n` with its probability.
    pub fn enumerate_multipliers(&self, n: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let k = self.factors.len() as u128;
        let count = (0..n).fold(1u128, |acc, _| acc.saturating_mul(k));
        if count > ENUMERATION_CAP {
            return Err(Error::CapExceeded { count, cap: ENUMERATION_CAP });
        }
        let mut out = vec![(1.0, vec![1.0])];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * self.factors.len());
            for (p, path) in &out {
                let last = path[path.len() - 1];
                for &(q, w) in &self.factors {
                    let mut ext = path.clone();
                    ext.push(last * w);
                    next.push((p * q, ext));
                }
            }
            out = next;
        }
        Ok(out)
    }
}

/// Recipes for super-uniform random matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SuperUniformSpec {
    /// The constant `I`.
    Identity,
    /// `u·I` with `u` uniform on `[0, 1]`.
    ScalarTimesIdentity,
    /// `Σ u_i e_i e_iᵀ + Y` with `u_i = u + spread·v_i`, where `u` and the
    /// `v_i` are iid uniform, so `min u_i ≥ u` is super-uniform.
    DiagonalPlusPsd {
        #[serde(default)]
        y: Option<SymMatrix>,
        #[serde(default = "default_spread")]
        spread: f64,
    },
}

fn default_spread() -> f64 {
    1.0
}

impl SuperUniformSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        if let SuperUniformSpec::DiagonalPlusPsd { y, spread } = self {
            if !(*spread >= 0.0) {
                return Err(Error::InvalidInput(format!("spread must be nonnegative, got {spread}")));
            }
            if let Some(y) = y {
                if y.dim() != d {
                    return Err(Error::InvalidInput(format!("y has dimension {}, expected {d}", y.dim())));
                }
                y.require_psd("super-uniform shift y")?;
            }
        }
        Ok(())
    }
}

/// One draw of a super-uniform matrix of dimension `d`.
pub fn sample_super_uniform<R: Rng + ?Sized>(spec: &SuperUniformSpec, d: usize, rng: &mut R) -> SymMatrix {
    match spec {
        SuperUniformSpec::Identity => SymMatrix::identity(d),
        SuperUniformSpec::ScalarTimesIdentity => SymMatrix::scaled_identity(d, sample_uniform_scalar(rng)),
        SuperUniformSpec::DiagonalPlusPsd { y, spread } => {
            let u = sample_uniform_scalar(rng);
            let diag: Vec<f64> = (0..d).map(|_| u + spread * rng.random::<f64>()).collect();
            let base = SymMatrix::from_diagonal(&diag).expect("finite diagonal");
            match y {
                Some(y) => &base + y,
                None => base,
            }
        }
    }
}

/// A uniform scalar on `[0, 1)`, hence super-uniform.
pub fn sample_uniform_scalar<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Symmetric matrix with independent `N(0, scale²)` entries on and above the
/// diagonal.
pub fn random_symmetric<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> SymMatrix {
    let mut m = nalgebra::DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let g: f64 = rng.sample(StandardNormal);
            m[(i, j)] = scale * g;
            m[(j, i)] = scale * g;
        }
    }
    SymMatrix::from_dmatrix(m).expect("finite gaussian entries")
}

/// `G Gᵀ / d` for a Gaussian `G` scaled by `scale`; PSD, generically of full rank.
pub fn random_psd<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> SymMatrix {
    let g = nalgebra::DMatrix::<f64>::from_fn(d, d, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    SymMatrix::from_dmatrix(&g * g.transpose() / d as f64).expect("finite gaussian entries")
}

/// PSD matrix plus `floor · I`.
pub fn random_pd<R: Rng + ?Sized>(d: usize, scale: f64, floor: f64, rng: &mut R) -> SymMatrix {
    &random_psd(d, scale, rng) + &SymMatrix::scaled_identity(d, floor)
}

/// `Q diag(λ) Qᵀ` with `λ_i` uniform on `[lo, hi]` and a random orthogonal `Q`.
pub fn random_with_spectrum_in<R: Rng + ?Sized>(d: usize, lo: f64, hi: f64, rng: &mut R) -> SymMatrix {
    let q = random_symmetric(d, 1.0, rng).spectral().expect("finite gaussian entries");
    let lambdas: Vec<f64> = (0..d).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    q.rebuild(&lambdas)
}
