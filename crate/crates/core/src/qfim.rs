//! Quantum Fisher information matrix under commuting local generators.
//!
//! For the generalized ECS the QFIM is `γ(𝟙 + ω𝓘)` where `𝓘` is the all-ones
//! matrix, `γ = 4b² f(2m)` and `ω = −b² f(m)²/f(2m)`. Since `𝓘² = d𝓘`, the inverse
//! keeps the same shape:
//!
//! ```text
//! [γ(𝟙 + ω𝓘)]⁻¹ = (1/γ)(𝟙 − ω/(1 + ωd) 𝓘)
//! ```
//!
//! and the eigenvalues are `γ` (multiplicity `d − 1`) and `γ(1 + ωd)`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments;
use crate::states::{EcsParams, NoonParams};

/// `γ(𝟙 + ω𝓘)` of size `d × d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructuredQfim {
    pub d: usize,
    pub gamma: f64,
    pub omega: f64,
}

impl StructuredQfim {
    pub fn new(d: usize, gamma: f64, omega: f64) -> Self {
        Self { d, gamma, omega }
    }

    pub fn diagonal(&self) -> f64 {
        self.gamma * (1.0 + self.omega)
    }

    pub fn off_diagonal(&self) -> f64 {
        self.gamma * self.omega
    }

    /// `1 + ωd`, the nontrivial eigenvalue factor.
    pub fn rank_one_factor(&self) -> f64 {
        1.0 + self.omega * self.d as f64
    }

    /// Eigenvalues are `γ` (multiplicity `d − 1`) and `γ(1 + ωd)`.
    pub fn is_positive_definite(&self) -> bool {
        self.gamma * self.rank_one_factor() > 0.0 && (self.d == 1 || self.gamma > 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.d as f64 * self.diagonal()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        to_dense(self)
    }

    /// Recovers `(γ, ω)` from a dense matrix using the diagonal mean and the
    /// off-diagonal mean. For `d = 1` the split is not identifiable and `ω = 0`.
    pub fn fit(dense: &DenseMatrix) -> Self {
        let d = dense.dim();
        let diag = (0..d).map(|i| dense.get(i, i)).sum::<f64>() / d as f64;
        if d == 1 {
            return Self::new(1, diag, 0.0);
        }
        let mut off = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    off += dense.get(i, j);
                }
            }
        }
        off /= (d * (d - 1)) as f64;
        let gamma = diag - off;
        Self::new(d, gamma, off / gamma)
    }
}

/// Square real matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseMatrix {
    d: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(d: usize) -> Self {
        Self { d, entries: vec![0.0; d * d] }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push(f(i, j));
            }
        }
        Self { d, entries }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::Dimension { expected: d, got: bad.len() });
        }
        Ok(Self { d, entries: rows.concat() })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.d + j] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.get(i, i)).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.d).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `‖self − other‖_F / ‖other‖_F`.
    pub fn relative_frobenius(&self, other: &DenseMatrix) -> f64 {
        let diff: f64 = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        diff / other.frobenius_norm()
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.d != rhs.d {
            return Err(Error::Dimension { expected: self.d, got: rhs.d });
        }
        Ok(DenseMatrix::from_fn(self.d, |i, j| {
            (0..self.d).map(|k| self.get(i, k) * rhs.get(k, j)).sum()
        }))
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.entries)
    }

    /// General LU inverse, independent of any structure in the matrix.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        let inv = self
            .to_nalgebra()
            .try_inverse()
            .ok_or_else(|| Error::Singular("dense LU inversion failed".into()))?;
        Ok(DenseMatrix::from_fn(self.d, |i, j| inv[(i, j)]))
    }

    pub fn determinant(&self) -> f64 {
        self.to_nalgebra().determinant()
    }
}

/// Dense realization: diagonal `γ(1+ω)`, off-diagonal `γω`.
pub fn to_dense(f: &StructuredQfim) -> DenseMatrix {
    let (diag, off) = (f.diagonal(), f.off_diagonal());
    DenseMatrix::from_fn(f.d, |i, j| if i == j { diag } else { off })
}

/// QFIM of the generalized ECS, `F_jk = 4[δ_jk b² f(2m) − b⁴ f(m)²]`.
pub fn ecs_qfim(p: &EcsParams) -> Result<StructuredQfim> {
    if !(p.alpha_sq > 0.0) {
        return Err(Error::Degenerate(format!("|α|² = {} carries no phase information", p.alpha_sq)));
    }
    if p.b == 0.0 {
        return Err(Error::Degenerate("b = 0: the QFIM vanishes".into()));
    }
    let fm = moments::moment(p.m, p.alpha_sq)?;
    let f2m = moments::moment(2 * p.m, p.alpha_sq)?;
    let b_sq = p.b * p.b;
    Ok(StructuredQfim::new(p.d, 4.0 * b_sq * f2m, -b_sq * fm * fm / f2m))
}

/// QFIM of the generalized NOON state: `4b²N^{2m}(𝟙 − b²𝓘)`.
pub fn noon_qfim(p: &NoonParams) -> Result<StructuredQfim> {
    if p.b == 0.0 {
        return Err(Error::Degenerate("b = 0: the QFIM vanishes".into()));
    }
    let n_2m = (p.photon_number as f64).powi(2 * p.m as i32);
    let b_sq = p.b * p.b;
    Ok(StructuredQfim::new(p.d, 4.0 * b_sq * n_2m, -b_sq))
}

/// Structured inverse `(1/γ)(𝟙 − ω/(1+ωd) 𝓘)`.
pub fn qfim_inverse(f: &StructuredQfim) -> Result<StructuredQfim> {
    if f.gamma == 0.0 || !f.gamma.is_finite() {
        return Err(Error::Singular(format!("γ = {}", f.gamma)));
    }
    let k = f.rank_one_factor();
    if k.abs() <= 4.0 * f64::EPSILON * (1.0 + (f.omega * f.d as f64).abs()) {
        return Err(Error::Singular(format!(
            "1 + ωd = {k:e}: b² sits on the divergence boundary g/d"
        )));
    }
    Ok(StructuredQfim::new(f.d, 1.0 / f.gamma, -f.omega / k))
}

/// `Tr(F⁻¹)` evaluated from `b²` alone, without the normalization check.
///
/// Valid on `0 < b² < g/d`.
pub fn trace_inverse_at(d: usize, m: u32, alpha_sq: f64, b_sq: f64) -> Result<f64> {
    if !(b_sq > 0.0) {
        return Err(Error::Degenerate("b = 0: no photons in the parameterized branches".into()));
    }
    let f2m = moments::moment(2 * m, alpha_sq)?;
    let g = moments::moment_ratio(m, alpha_sq)?;
    let df = d as f64;
    let gap = g - b_sq * df;
    if !(gap > 0.0) {
        return Err(Error::Singular(format!(
            "b² = {b_sq} ≥ g/d = {}: Tr(F⁻¹) diverges",
            g / df
        )));
    }
    Ok(df / (4.0 * f2m) * (1.0 / b_sq + 1.0 / gap))
}

/// QCRB on the total variance, `d/(4f(2m)) · (1/b² + 1/(g − b²d))`.
pub fn trace_inverse_bound(p: &EcsParams) -> Result<f64> {
    if !(p.alpha_sq > 0.0) {
        return Err(Error::Degenerate(format!("|α|² = {} carries no phase information", p.alpha_sq)));
    }
    trace_inverse_at(p.d, p.m, p.alpha_sq, p.b * p.b)
}

/// `F_e = det F / Tr F` for two parameters, so that `Tr(F⁻¹) = 1/F_e`.
pub fn effective_qfi_2param(f: &DenseMatrix) -> Result<f64> {
    if f.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: f.dim() });
    }
    let det = f.get(0, 0) * f.get(1, 1) - f.get(0, 1) * f.get(1, 0);
    Ok(det / f.trace())
}
