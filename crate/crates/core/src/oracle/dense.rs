//! Full tensor-product expansion of a [`SparseProductState`].
//!
//! Mode 0 is the most significant index. Only usable for small `d` and cutoffs.

use num_complex::Complex64;

use super::SparseProductState;
use crate::error::{Error, Result};
use crate::qfim::DenseMatrix;

/// Largest number of amplitudes a dense state may hold.
pub const DENSE_SIZE_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensorState {
    num_modes: usize,
    cutoff: usize,
    amplitudes: Vec<Complex64>,
}

/// `(cutoff + 1)^num_modes`, or a size error above [`DENSE_SIZE_LIMIT`].
pub fn dense_size(num_modes: usize, cutoff: usize) -> Result<usize> {
    let size = (cutoff + 1)
        .checked_pow(num_modes as u32)
        .filter(|&s| s <= DENSE_SIZE_LIMIT)
        .ok_or_else(|| Error::SizeLimit {
            size: (cutoff + 1).checked_pow(num_modes as u32).unwrap_or(usize::MAX),
            limit: DENSE_SIZE_LIMIT,
        })?;
    Ok(size)
}

/// Expands every product term with Kronecker products and sums them.
pub fn dense_tensor_state(s: &SparseProductState) -> Result<DenseTensorState> {
    let size = dense_size(s.num_modes(), s.cutoff())?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); size];
    for term in s.terms() {
        let mut kron = vec![term.coefficient];
        for f in &term.factors {
            kron = kron
                .iter()
                .flat_map(|&x| f.amplitudes().iter().map(move |&a| x * a))
                .collect();
        }
        for (acc, v) in amplitudes.iter_mut().zip(kron) {
            *acc += v;
        }
    }
    Ok(DenseTensorState { num_modes: s.num_modes(), cutoff: s.cutoff(), amplitudes })
}

impl DenseTensorState {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    fn level(&self, index: usize, mode: usize) -> usize {
        let base = self.cutoff + 1;
        let stride = base.pow((self.num_modes - 1 - mode) as u32);
        (index / stride) % base
    }

    pub fn inner_product(&self, other: &DenseTensorState) -> Result<Complex64> {
        if self.num_modes != other.num_modes || self.cutoff != other.cutoff {
            return Err(Error::ShapeMismatch(format!(
                "({} modes, cutoff {}) vs ({} modes, cutoff {})",
                self.num_modes, self.cutoff, other.num_modes, other.cutoff
            )));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `(a_mode† a_mode)^m` applied to the full tensor.
    pub fn apply_number_power(&self, mode: usize, m: u32) -> Result<DenseTensorState> {
        if mode >= self.num_modes {
            return Err(Error::ShapeMismatch(format!(
                "mode {mode} out of range for {} modes",
                self.num_modes
            )));
        }
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| a * (self.level(i, mode) as f64).powi(m as i32))
            .collect();
        Ok(DenseTensorState { num_modes: self.num_modes, cutoff: self.cutoff, amplitudes })
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let n: usize = (0..self.num_modes).map(|k| self.level(i, k)).sum();
                n as f64 * a.norm_sqr()
            })
            .sum()
    }

    /// `F_jk = 4(⟨H_jH_k⟩ − ⟨H_j⟩⟨H_k⟩)` over modes `1..=d`.
    pub fn qfim(&self, m: u32) -> Result<DenseMatrix> {
        let d = self.num_modes - 1;
        let applied = (1..=d)
            .map(|j| self.apply_number_power(j, m))
            .collect::<Result<Vec<_>>>()?;
        let means = applied
            .iter()
            .map(|h| self.inner_product(h).map(|z| z.re))
            .collect::<Result<Vec<_>>>()?;
        let mut f = DenseMatrix::zeros(d);
        for j in 0..d {
            for k in j..d {
                let v = 4.0 * (applied[j].inner_product(&applied[k])?.re - means[j] * means[k]);
                f.set(j, k, v);
                f.set(k, j, v);
            }
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_ecs_state, build_noon_state, mean_photon_number, state_qfim};
    use crate::states::{EcsParams, NoonParams};

    #[test]
    fn size_limit() {
        let p = EcsParams::optimal(5, 1.0, 1).unwrap();
        let s = build_ecs_state(&p, 12, 1e-3).unwrap();
        assert!(matches!(dense_tensor_state(&s), Err(Error::SizeLimit { .. })));
        assert!(dense_size(200, 10).is_err());
    }

    #[test]
    fn small_state_size() {
        let p = EcsParams::optimal(1, 1.0, 1).unwrap();
        let s = build_ecs_state(&p, 8, 1e-3).unwrap();
        let t = dense_tensor_state(&s).unwrap();
        assert_eq!(t.len(), 81);
    }

    #[test]
    fn agrees_with_sparse() {
        let p = EcsParams::with_b(2, 1.2, 0.35, 2).unwrap();
        let s = build_ecs_state(&p, 24, 1e-12).unwrap();
        let t = dense_tensor_state(&s).unwrap();
        assert!((t.norm_sq() - s.norm_sq()).abs() < 1e-13);
        assert!((t.mean_photon_number() - mean_photon_number(&s).unwrap()).abs() < 1e-12);
        let fd = t.qfim(2).unwrap();
        let fs = state_qfim(&s, 2).unwrap();
        assert!(fd.relative_frobenius(&fs) < 1e-12);
    }

    #[test]
    fn noon_dense() {
        let p = NoonParams::optimal(2, 2, 1).unwrap();
        let s = build_noon_state(&p, 2).unwrap();
        let t = dense_tensor_state(&s).unwrap();
        assert!((t.norm_sq() - 1.0).abs() < 1e-14);
        assert!((t.mean_photon_number() - 2.0).abs() < 1e-14);
        assert!(t.qfim(1).unwrap().max_abs_diff(&state_qfim(&s, 1).unwrap()) < 1e-13);
    }
}
