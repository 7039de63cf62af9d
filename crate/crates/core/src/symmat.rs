//! Dense real symmetric matrices, their spectral decomposition, spectral
//! matrix functions and Loewner-order predicates.
//!
//! Every inequality in the crate is stated in terms of [`SymMatrix`]. The
//! value is immutable after construction and symmetric bit-for-bit: all
//! constructors that accept an arbitrary square array replace it with
//! `(M + Mᵀ)/2`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dense `d × d` real symmetric matrix.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

/// Eigenvalues in nondecreasing order with the matching orthonormal eigenbasis
/// stored column-wise.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub basis: DMatrix<f64>,
}

/// Relative tolerance used for every `⪰` / `⪯` decision.
///
/// A matrix `M` counts as PSD when `λ_min(M) ≥ −rel_eps · max(1, ‖M‖)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdTolerance {
    pub rel_eps: f64,
}

impl Default for PsdTolerance {
    fn default() -> Self {
        PsdTolerance { rel_eps: 1e-9 }
    }
}

impl PsdTolerance {
    pub fn new(rel_eps: f64) -> Result<Self> {
        if !(rel_eps >= 0.0) || !rel_eps.is_finite() {
            return Err(Error::InvalidInput(format!(
                "PSD tolerance must be a finite nonnegative number, got {rel_eps}"
            )));
        }
        Ok(PsdTolerance { rel_eps })
    }

    /// Slack allowed below zero for a matrix of operator norm `norm`.
    pub fn slack(&self, norm: f64) -> f64 {
        self.rel_eps * norm.max(1.0)
    }
}

/// Scalar functions that can be lifted to symmetric matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralFn {
    Exp,
    Log,
    Pow(f64),
    Abs,
    Sqrt,
}

impl SymMatrix {
    fn wrap(m: DMatrix<f64>) -> SymMatrix {
        let sym = (&m + m.transpose()) * 0.5;
        SymMatrix { m: sym }
    }

    /// Symmetrizes an arbitrary square matrix.
    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<SymMatrix> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "expected a nonempty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(SymMatrix::wrap(m))
    }

    /// Builds a matrix from row-major nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<SymMatrix> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::InvalidInput("matrix literal has no rows".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::InvalidInput(format!("matrix literal row {i} has {} entries, expected {d}", r.len())));
        }
        SymMatrix::from_dmatrix(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn zeros(d: usize) -> SymMatrix {
        assert!(d >= 1, "dimension must be at least 1");
        SymMatrix { m: DMatrix::zeros(d, d) }
    }

    pub fn identity(d: usize) -> SymMatrix {
        assert!(d >= 1, "dimension must be at least 1");
        SymMatrix { m: DMatrix::identity(d, d) }
    }

    pub fn scaled_identity(d: usize, c: f64) -> SymMatrix {
        SymMatrix::identity(d) * c
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<SymMatrix> {
        let d = diag.len();
        SymMatrix::from_dmatrix(DMatrix::from_fn(d, d, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.m[(i, j)]).collect()).collect()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Maximum absolute entry, used for cheap zero checks.
    pub fn max_abs_entry(&self) -> f64 {
        self.m.amax()
    }

    pub fn ensure_same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidInput(format!("dimension mismatch: {} vs {}", self.dim(), other.dim())));
        }
        Ok(())
    }

    /// `c · self · c`, symmetric whenever `c` is.
    pub fn conjugate_by(&self, c: &SymMatrix) -> SymMatrix {
        SymMatrix::wrap(&c.m * &self.m * &c.m)
    }

    /// `self²`.
    pub fn square(&self) -> SymMatrix {
        SymMatrix::wrap(&self.m * &self.m)
    }

    /// Plain (generally non-symmetric) matrix product.
    pub fn matmul(&self, other: &SymMatrix) -> DMatrix<f64> {
        &self.m * &other.m
    }

    /// Eigendecomposition with eigenvalues sorted nondecreasingly; ties keep
    /// the order produced by the underlying solver.
    pub fn spectral(&self) -> Result<Spectrum> {
        if self.m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let eig = SymmetricEigen::new(self.m.clone());
        let d = self.dim();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let basis = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Spectrum { eigenvalues, basis })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.dim() == 1 {
            let v = self.m[(0, 0)];
            if !v.is_finite() {
                return Err(Error::InvalidInput("matrix has non-finite entries".into()));
            }
            return Ok(vec![v]);
        }
        Ok(self.spectral()?.eigenvalues)
    }

    pub fn min_eig(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn max_eig(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("dim >= 1"))
    }

    /// Largest singular value, which for a symmetric matrix is the largest
    /// absolute eigenvalue.
    pub fn op_norm(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
    }

    /// Lifts a scalar function through the eigendecomposition.
    ///
    /// `Log` needs strictly positive eigenvalues. Non-integer powers and
    /// `Sqrt` need a PSD argument; eigenvalues inside the default PSD slack are
    /// treated as zero. Negative powers need a positive definite argument.
    pub fn apply(&self, f: SpectralFn) -> Result<SymMatrix> {
        let spec = self.spectral()?;
        let norm = spec.eigenvalues[0].abs().max(spec.eigenvalues[spec.eigenvalues.len() - 1].abs());
        let slack = PsdTolerance::default().slack(norm);
        let mut out = Vec::with_capacity(spec.eigenvalues.len());
        for &lam in &spec.eigenvalues {
            let v = match f {
                SpectralFn::Exp => lam.exp(),
                SpectralFn::Abs => lam.abs(),
                SpectralFn::Log => {
                    if !(lam > 0.0) {
                        return Err(Error::Domain(format!(
                            "matrix logarithm needs positive eigenvalues, found {lam:e}"
                        )));
                    }
                    lam.ln()
                }
                SpectralFn::Sqrt => nonneg(lam, slack, "square root")?.sqrt(),
                SpectralFn::Pow(r) => {
                    if r.fract() == 0.0 && r >= 0.0 && r.abs() < i32::MAX as f64 {
                        lam.powi(r as i32)
                    } else if r < 0.0 {
                        if !(lam > 0.0) {
                            return Err(Error::Domain(format!(
                                "negative power {r} needs positive eigenvalues, found {lam:e}"
                            )));
                        }
                        lam.powf(r)
                    } else {
                        nonneg(lam, slack, "fractional power")?.powf(r)
                    }
                }
            };
            out.push(v);
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow(format!("spectral function {f:?} produced a non-finite eigenvalue")));
        }
        Ok(spec.rebuild(&out))
    }

    pub fn exp(&self) -> Result<SymMatrix> {
        self.apply(SpectralFn::Exp)
    }

    pub fn log(&self) -> Result<SymMatrix> {
        self.apply(SpectralFn::Log)
    }

    pub fn abs(&self) -> Result<SymMatrix> {
        self.apply(SpectralFn::Abs)
    }

    pub fn sqrt(&self) -> Result<SymMatrix> {
        self.apply(SpectralFn::Sqrt)
    }

    pub fn powf(&self, r: f64) -> Result<SymMatrix> {
        self.apply(SpectralFn::Pow(r))
    }

    /// `self^{-1/2}`, defined only for positive definite input.
    pub fn inv_sqrt(&self) -> Result<SymMatrix> {
        self.require_pd("inverse square root")?;
        self.apply(SpectralFn::Pow(-0.5))
    }

    pub fn inverse(&self) -> Result<SymMatrix> {
        self.require_pd("inverse")?;
        self.apply(SpectralFn::Pow(-1.0))
    }

    /// `log tr(exp(self))`, evaluated without forming the exponential.
    pub fn log_trace_exp(&self) -> Result<f64> {
        Ok(log_sum_exp(&self.eigenvalues()?))
    }

    pub fn is_psd(&self, tol: PsdTolerance) -> Result<bool> {
        let ev = self.eigenvalues()?;
        let norm = ev[0].abs().max(ev[ev.len() - 1].abs());
        Ok(ev[0] >= -tol.slack(norm))
    }

    pub fn is_pd(&self, tol: PsdTolerance) -> Result<bool> {
        let ev = self.eigenvalues()?;
        let norm = ev[0].abs().max(ev[ev.len() - 1].abs());
        Ok(ev[0] > tol.slack(norm))
    }

    pub(crate) fn require_pd(&self, what: &str) -> Result<()> {
        let ev = self.eigenvalues()?;
        let norm = ev[0].abs().max(ev[ev.len() - 1].abs());
        if ev[0] > PsdTolerance::default().slack(norm) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{what} requires a positive definite matrix, smallest eigenvalue is {:e}",
                ev[0]
            )))
        }
    }

    pub(crate) fn require_psd(&self, what: &str) -> Result<()> {
        let ev = self.eigenvalues()?;
        let norm = ev[0].abs().max(ev[ev.len() - 1].abs());
        if ev[0] >= -PsdTolerance::default().slack(norm) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{what} requires a positive semidefinite matrix, smallest eigenvalue is {:e}",
                ev[0]
            )))
        }
    }
}

fn nonneg(lam: f64, slack: f64, what: &str) -> Result<f64> {
    if lam >= 0.0 {
        Ok(lam)
    } else if lam >= -slack {
        Ok(0.0)
    } else {
        Err(Error::Domain(format!("matrix {what} needs nonnegative eigenvalues, found {lam:e}")))
    }
}

/// Numerically stable `log Σ exp(xᵢ)`; returns `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl Spectrum {
    /// `U diag(values) Uᵀ`.
    pub fn rebuild(&self, values: &[f64]) -> SymMatrix {
        let d = self.basis.nrows();
        let mut scaled = self.basis.clone();
        for j in 0..d {
            let s = values[j];
            for i in 0..d {
                scaled[(i, j)] *= s;
            }
        }
        SymMatrix::wrap(scaled * self.basis.transpose())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.rebuild(&self.eigenvalues)
    }
}

/// Free-function form of [`SymMatrix::spectral`].
pub fn spectral_decompose(m: &SymMatrix) -> Result<Spectrum> {
    m.spectral()
}

/// Free-function form of [`SymMatrix::apply`].
pub fn apply_spectral_function(m: &SymMatrix, f: SpectralFn) -> Result<SymMatrix> {
    m.apply(f)
}

/// `a ⪰ b` up to the relative tolerance: `λ_min(a − b) ≥ −rel_eps·max(1, ‖a − b‖)`.
pub fn loewner_geq(a: &SymMatrix, b: &SymMatrix, tol: PsdTolerance) -> Result<bool> {
    a.ensure_same_dim(b)?;
    (a - b).is_psd(tol)
}

/// `tr((A^{-1/2} B A^{-1/2})^p)`, the basis-independent meaning of
/// `tr((B A^{-1})^p)` for real `p ≥ 1`.
///
/// `B A^{-1}` is similar to the PSD matrix `A^{-1/2} B A^{-1/2}`, so for
/// integer `p` this agrees with the trace of the repeated product.
pub fn similarity_power_trace(b: &SymMatrix, a: &SymMatrix, p: f64) -> Result<f64> {
    b.ensure_same_dim(a)?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("power must satisfy p >= 1, got {p}")));
    }
    let ais = a.inv_sqrt()?;
    let c = b.conjugate_by(&ais);
    let ev = c.eigenvalues()?;
    let norm = ev[0].abs().max(ev[ev.len() - 1].abs());
    let slack = PsdTolerance::default().slack(norm);
    let mut total = 0.0;
    for &lam in &ev {
        total += nonneg(lam, slack, "similarity power (B must be PSD)")?.powf(p);
    }
    Ok(total)
}

// Padé(13) coefficients and the matching scaling threshold from Higham (2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Exponential of an arbitrary square matrix by scaling and squaring around a
/// degree-13 Padé approximant.
pub fn general_exp(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 || n != a.ncols() {
        return Err(Error::InvalidInput(format!("expected a nonempty square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm1 > THETA13 { (norm1 / THETA13).log2().ceil() as i32 } else { 0 };
    if s > 1023 {
        return Err(Error::Overflow(format!("matrix norm {norm1:e} is too large to exponentiate")));
    }
    let scaled = a * 2f64.powi(-s);
    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or_else(|| Error::Overflow("Padé denominator is singular".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("matrix exponential exceeds the representable range".into()));
    }
    Ok(r)
}

/// Largest singular value of an arbitrary (possibly non-symmetric) matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMatrix{:?}", self.to_rows())
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(de)?;
        SymMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in matrix sum");
        SymMatrix { m: &self.m + &rhs.m }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in matrix difference");
        SymMatrix { m: &self.m - &rhs.m }
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        SymMatrix { m: &self.m * rhs }
    }
}

impl Mul<f64> for SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        SymMatrix { m: self.m * rhs }
    }
}

impl Add for SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: SymMatrix) -> SymMatrix {
        &self + &rhs
    }
}

impl Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: SymMatrix) -> SymMatrix {
        &self - &rhs
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        SymMatrix { m: -&self.m }
    }
}

/// Sum of a nonempty slice of equally sized matrices.
pub fn sum(mats: &[SymMatrix]) -> Result<SymMatrix> {
    let first = mats.first().ok_or_else(|| Error::InvalidInput("cannot sum an empty list of matrices".into()))?;
    let mut acc = first.clone();
    for m in &mats[1..] {
        acc.ensure_same_dim(m)?;
        acc = &acc + m;
    }
    Ok(acc)
}
