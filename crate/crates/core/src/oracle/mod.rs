//! Truncated Fock-space oracle.
//!
//! States are kept as sums of multimode product states, each factor a truncated
//! single-mode amplitude vector. This is exact for the ECS and NOON families
//! (`d + 1` terms) and scales to any `d`. [`dense`] expands the same states into
//! full tensors as a second check at small sizes.
//!
//! Coherent vectors are truncated but never renormalized; their tail mass is
//! recorded so discrepancies stay attributable.

pub mod dense;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moments;
use crate::qfim::DenseMatrix;
use crate::states::{EcsParams, NoonParams};

/// Default central-difference step for [`qfim_via_state_derivatives`], in radians.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Suffix sums `T[K] = Σ_{n>K} e^{−μ} μ^n/n! · n^power`.
///
/// Terms are generated past the mode until they fall below `1e-30` of the
/// largest one and are summed from the far end.
fn poisson_tail_profile(mu: f64, power: u32) -> Vec<f64> {
    if mu == 0.0 {
        return vec![0.0];
    }
    let ln_mu = mu.ln();
    let pw = power as f64;
    let mut terms = Vec::new();
    let mut ln_fact = 0.0;
    let mut peak = 0.0_f64;
    for n in 0usize.. {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let term = if n == 0 {
            if power == 0 { (-mu).exp() } else { 0.0 }
        } else {
            (-mu + n as f64 * ln_mu - ln_fact + pw * (n as f64).ln()).exp()
        };
        peak = peak.max(term);
        terms.push(term);
        let past_mode = n as f64 > mu + pw + 1.0;
        if past_mode && (term < 1e-30 * peak || term == 0.0) {
            break;
        }
    }
    let mut tails = vec![0.0; terms.len()];
    let mut acc = 0.0;
    for k in (0..terms.len()).rev() {
        tails[k] = acc;
        acc += terms[k];
    }
    tails
}

/// `Σ_{n > cutoff} e^{−μ} μ^n / n!`, the probability mass lost by truncation.
pub fn poisson_tail(mu: f64, cutoff: usize) -> f64 {
    poisson_tail_profile(mu, 0).get(cutoff).copied().unwrap_or(0.0)
}

/// Smallest cutoff whose Poisson tail is below `tail_tol`.
pub fn minimal_cutoff(mu: f64, tail_tol: f64) -> usize {
    let tails = poisson_tail_profile(mu, 0);
    tails.iter().position(|&t| t < tail_tol).unwrap_or(tails.len())
}

/// Cutoff for an ECS probed by `(a†a)^m`: the plain Poisson tail and the
/// `n^{2m}`-weighted tail relative to `f(2m)` must both be below `tail_tol`.
pub fn auto_cutoff(alpha_sq: f64, m: u32, tail_tol: f64) -> Result<usize> {
    let plain = minimal_cutoff(alpha_sq, tail_tol);
    if alpha_sq == 0.0 {
        return Ok(plain);
    }
    let f2m = moments::moment(2 * m, alpha_sq)?;
    let weighted = poisson_tail_profile(alpha_sq, 2 * m);
    let w = weighted
        .iter()
        .position(|&t| t / f2m < tail_tol)
        .unwrap_or(weighted.len());
    Ok(plain.max(w))
}

/// Amplitudes of one mode on Fock levels `0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector {
    amplitudes: Vec<Complex64>,
    tail_mass: f64,
}

impl ModeVector {
    pub fn vacuum(cutoff: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes, tail_mass: 0.0 }
    }

    pub fn fock(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::CutoffTooSmall { cutoff, tail: 1.0, tol: 0.0, minimal: n });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, tail_mass: 0.0 })
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Norm² the untruncated state has beyond the cutoff.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &ModeVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn map_levels(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().enumerate().map(|(n, &a)| f(n, a)).collect(),
            tail_mass: self.tail_mass,
        }
    }

    /// `(a†a)^m` acting on this factor.
    pub fn number_power(&self, m: u32) -> Self {
        self.map_levels(|n, a| a * (n as f64).powi(m as i32))
    }

    /// `exp(i θ (a†a)^m)` acting on this factor.
    pub fn phase_evolved(&self, m: u32, theta: f64) -> Self {
        self.map_levels(|n, a| a * Complex64::from_polar(1.0, (n as f64).powi(m as i32) * theta))
    }
}

/// Truncated coherent state `e^{−|α|²/2} α^n / √n!`, `n = 0..=cutoff`.
pub fn truncated_coherent(alpha: Complex64, cutoff: usize, tail_tol: f64) -> Result<ModeVector> {
    let mu = alpha.norm_sqr();
    let tail = poisson_tail(mu, cutoff);
    if !(tail < tail_tol) {
        return Err(Error::CutoffTooSmall {
            cutoff,
            tail,
            tol: tail_tol,
            minimal: minimal_cutoff(mu, tail_tol),
        });
    }
    let mut amplitudes = Vec::with_capacity(cutoff + 1);
    let mut a = Complex64::new((-0.5 * mu).exp(), 0.0);
    amplitudes.push(a);
    for n in 1..=cutoff {
        a = a * alpha / (n as f64).sqrt();
        amplitudes.push(a);
    }
    Ok(ModeVector { amplitudes, tail_mass: tail })
}

/// One product term `coefficient · ⊗_k factors[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub coefficient: Complex64,
    pub factors: Vec<ModeVector>,
}

/// Superposition of multimode product states. Mode 0 is the reference beam.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProductState {
    num_modes: usize,
    cutoff: usize,
    terms: Vec<ProductTerm>,
}

impl SparseProductState {
    pub fn new(num_modes: usize, cutoff: usize, terms: Vec<ProductTerm>) -> Result<Self> {
        for t in &terms {
            if t.factors.len() != num_modes {
                return Err(Error::ShapeMismatch(format!(
                    "term has {} factors, state has {num_modes} modes",
                    t.factors.len()
                )));
            }
            if let Some(f) = t.factors.iter().find(|f| f.cutoff() != cutoff) {
                return Err(Error::ShapeMismatch(format!(
                    "factor cutoff {} differs from state cutoff {cutoff}",
                    f.cutoff()
                )));
            }
        }
        Ok(Self { num_modes, cutoff, terms })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    /// Largest tail mass over all factors.
    pub fn max_tail_mass(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter().map(ModeVector::tail_mass))
            .fold(0.0, f64::max)
    }

    pub fn norm_sq(&self) -> f64 {
        inner_product(self, self).map(|z| z.re).unwrap_or(f64::NAN)
    }

    fn map_factor(&self, mode: usize, f: impl Fn(&ModeVector) -> ModeVector) -> Result<Self> {
        if mode >= self.num_modes {
            return Err(Error::ShapeMismatch(format!(
                "mode {mode} out of range for {} modes",
                self.num_modes
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut factors = t.factors.clone();
                factors[mode] = f(&t.factors[mode]);
                ProductTerm { coefficient: t.coefficient, factors }
            })
            .collect();
        Ok(Self { num_modes: self.num_modes, cutoff: self.cutoff, terms })
    }
}

/// Builds a state from anything the oracle can simulate.
pub trait OracleInput {
    fn generator_order(&self) -> u32;
    /// Smallest cutoff that keeps truncation below `tail_tol`.
    fn suggested_cutoff(&self, tail_tol: f64) -> Result<usize>;
    fn build_state(&self, cutoff: usize, tail_tol: f64) -> Result<SparseProductState>;
}

impl OracleInput for EcsParams {
    fn generator_order(&self) -> u32 {
        self.m
    }

    fn suggested_cutoff(&self, tail_tol: f64) -> Result<usize> {
        auto_cutoff(self.alpha_sq, self.m, tail_tol)
    }

    fn build_state(&self, cutoff: usize, tail_tol: f64) -> Result<SparseProductState> {
        build_ecs_state(self, cutoff, tail_tol)
    }
}

impl OracleInput for NoonParams {
    fn generator_order(&self) -> u32 {
        self.m
    }

    fn suggested_cutoff(&self, _tail_tol: f64) -> Result<usize> {
        Ok(self.photon_number as usize)
    }

    fn build_state(&self, cutoff: usize, _tail_tol: f64) -> Result<SparseProductState> {
        build_noon_state(self, cutoff)
    }
}

fn branch_state(
    d: usize,
    cutoff: usize,
    b: f64,
    c: f64,
    excited: &ModeVector,
) -> Result<SparseProductState> {
    let vacuum = ModeVector::vacuum(cutoff);
    let terms = (0..=d)
        .map(|j| {
            let mut factors = vec![vacuum.clone(); d + 1];
            factors[j] = excited.clone();
            let coefficient = Complex64::new(if j == 0 { c } else { b }, 0.0);
            ProductTerm { coefficient, factors }
        })
        .collect();
    SparseProductState::new(d + 1, cutoff, terms)
}

/// `b Σ_{j=1..d} |α⟩_j + c|α⟩_0` with real `α = √|α|²`.
pub fn build_ecs_state(p: &EcsParams, cutoff: usize, tail_tol: f64) -> Result<SparseProductState> {
    let coherent = truncated_coherent(Complex64::new(p.alpha_sq.sqrt(), 0.0), cutoff, tail_tol)?;
    branch_state(p.d, cutoff, p.b, p.c, &coherent)
}

/// `b Σ_{j=1..d} |N⟩_j + c|N⟩_0`.
pub fn build_noon_state(p: &NoonParams, cutoff: usize) -> Result<SparseProductState> {
    let fock = ModeVector::fock(p.photon_number as usize, cutoff)?;
    branch_state(p.d, cutoff, p.b, p.c, &fock)
}

/// `(a_mode† a_mode)^m |s⟩`.
pub fn apply_number_power(s: &SparseProductState, mode: usize, m: u32) -> Result<SparseProductState> {
    s.map_factor(mode, |f| f.number_power(m))
}

/// `⟨s1|s2⟩ = Σ_{pairs} conj(c₁)c₂ ∏_k ⟨f₁ₖ|f₂ₖ⟩`.
pub fn inner_product(s1: &SparseProductState, s2: &SparseProductState) -> Result<Complex64> {
    if s1.num_modes != s2.num_modes || s1.cutoff != s2.cutoff {
        return Err(Error::ShapeMismatch(format!(
            "({} modes, cutoff {}) vs ({} modes, cutoff {})",
            s1.num_modes, s1.cutoff, s2.num_modes, s2.cutoff
        )));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for t1 in &s1.terms {
        for t2 in &s2.terms {
            let overlap: Complex64 = t1
                .factors
                .iter()
                .zip(&t2.factors)
                .map(|(a, b)| a.overlap(b))
                .product();
            total += t1.coefficient.conj() * t2.coefficient * overlap;
        }
    }
    Ok(total)
}

/// `Σ_k ⟨ψ|a_k†a_k|ψ⟩` over every mode, reference included.
pub fn mean_photon_number(s: &SparseProductState) -> Result<f64> {
    let mut total = 0.0;
    for mode in 0..s.num_modes {
        total += inner_product(s, &apply_number_power(s, mode, 1)?)?.re;
    }
    Ok(total)
}

/// Phase shifts `θ_1..θ_d`, one per parameterized mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector(Vec<f64>);

impl ThetaVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("phase shifts must be finite".into()));
        }
        Ok(Self(values))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

fn check_theta(s: &SparseProductState, theta: &ThetaVector) -> Result<()> {
    if theta.0.len() + 1 != s.num_modes {
        return Err(Error::Dimension { expected: s.num_modes - 1, got: theta.0.len() });
    }
    Ok(())
}

/// `exp(i Σ_j θ_j (a_j†a_j)^m)|s⟩`; mode `j` carries `θ_j`, the reference mode none.
pub fn evolve(s: &SparseProductState, m: u32, theta: &ThetaVector) -> Result<SparseProductState> {
    check_theta(s, theta)?;
    let mut out = s.clone();
    for (j, &t) in theta.0.iter().enumerate() {
        out = out.map_factor(j + 1, |f| f.phase_evolved(m, t))?;
    }
    Ok(out)
}

/// QFIM from generator moments,
/// `F_jk = 4(⟨H_jH_k⟩ − ⟨H_j⟩⟨H_k⟩)` with `H_j = (a_j†a_j)^m`.
pub fn state_qfim(s: &SparseProductState, m: u32) -> Result<DenseMatrix> {
    let d = s.num_modes - 1;
    let applied = (1..=d)
        .map(|j| apply_number_power(s, j, m))
        .collect::<Result<Vec<_>>>()?;
    let means = applied
        .iter()
        .map(|h| inner_product(s, h).map(|z| z.re))
        .collect::<Result<Vec<_>>>()?;
    let mut f = DenseMatrix::zeros(d);
    for j in 0..d {
        for k in j..d {
            let second = inner_product(&applied[j], &applied[k])?.re;
            let v = 4.0 * (second - means[j] * means[k]);
            f.set(j, k, v);
            f.set(k, j, v);
        }
    }
    Ok(f)
}

/// [`state_qfim`] for an ECS or NOON parameter set.
pub fn numerical_qfim<P: OracleInput>(p: &P, cutoff: usize, tail_tol: f64) -> Result<DenseMatrix> {
    state_qfim(&p.build_state(cutoff, tail_tol)?, p.generator_order())
}

/// QFIM from state derivatives,
/// `F_jk = 4 Re(⟨∂_jψ|∂_kψ⟩ − ⟨∂_jψ|ψ⟩⟨ψ|∂_kψ⟩)`, at the point `θ`.
///
/// `|∂_jψ⟩` is a central difference of the evolved mode-`j` factor; all other
/// factors are untouched by `θ_j`.
pub fn qfim_via_state_derivatives(
    s: &SparseProductState,
    m: u32,
    theta: &ThetaVector,
    fd_step: f64,
) -> Result<DenseMatrix> {
    if !(1e-6..=1e-3).contains(&fd_step) {
        return Err(Error::InvalidInput(format!(
            "finite-difference step must lie in [1e-6, 1e-3], got {fd_step}"
        )));
    }
    let psi = evolve(s, m, theta)?;
    let d = s.num_modes - 1;
    let inv_2h = 1.0 / (2.0 * fd_step);
    let derivs = (0..d)
        .map(|j| {
            let t = theta.0[j];
            let terms = s
                .terms
                .iter()
                .zip(&psi.terms)
                .map(|(raw, evolved)| {
                    let plus = raw.factors[j + 1].phase_evolved(m, t + fd_step);
                    let minus = raw.factors[j + 1].phase_evolved(m, t - fd_step);
                    let diff = ModeVector {
                        amplitudes: plus
                            .amplitudes
                            .iter()
                            .zip(&minus.amplitudes)
                            .map(|(p, q)| (p - q) * inv_2h)
                            .collect(),
                        tail_mass: plus.tail_mass,
                    };
                    let mut factors = evolved.factors.clone();
                    factors[j + 1] = diff;
                    ProductTerm { coefficient: evolved.coefficient, factors }
                })
                .collect();
            SparseProductState::new(s.num_modes, s.cutoff, terms)
        })
        .collect::<Result<Vec<_>>>()?;

    let overlaps = derivs
        .iter()
        .map(|dj| inner_product(dj, &psi))
        .collect::<Result<Vec<_>>>()?;
    let mut f = DenseMatrix::zeros(d);
    for j in 0..d {
        for k in j..d {
            let dd = inner_product(&derivs[j], &derivs[k])?;
            // ⟨ψ|∂_kψ⟩ = conj(⟨∂_kψ|ψ⟩)
            let v = 4.0 * (dd - overlaps[j] * overlaps[k].conj()).re;
            f.set(j, k, v);
            f.set(k, j, v);
        }
    }
    Ok(f)
}

/// `⟨ψ|[H_j, H_k]|ψ⟩` for mode indices `j, k ∈ 0..=d`.
pub fn commutator_expectation(s: &SparseProductState, j: usize, k: usize, m: u32) -> Result<Complex64> {
    let jk = apply_number_power(&apply_number_power(s, k, m)?, j, m)?;
    let kj = apply_number_power(&apply_number_power(s, j, m)?, k, m)?;
    Ok(inner_product(s, &jk)? - inner_product(s, &kj)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfim::{ecs_qfim, noon_qfim};
    use crate::states::{mean_total_photons, solve_c};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ecs(d: usize, a: f64, b: f64, m: u32) -> EcsParams {
        EcsParams::with_b(d, a, b, m).unwrap()
    }

    #[test]
    fn vacuum_coherent() {
        let v = truncated_coherent(c(0.0), 6, 1e-14).unwrap();
        assert_eq!(v.amplitudes()[0], c(1.0));
        assert!(v.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn coherent_tail_accounting() {
        let v = truncated_coherent(c(1.0), 20, 1e-14).unwrap();
        let norm: f64 = v.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert!(v.tail_mass() < 1e-15);
        assert!((norm + v.tail_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cutoff_too_small_reports_minimum() {
        let err = truncated_coherent(c(2.0), 5, 1e-12).unwrap_err();
        match err {
            Error::CutoffTooSmall { tail, minimal, .. } => {
                assert!((tail - 0.2149).abs() < 1e-3, "{tail}");
                assert!(minimal > 5);
                assert!(truncated_coherent(c(2.0), minimal, 1e-12).is_ok());
                assert!(truncated_coherent(c(2.0), minimal - 1, 1e-12).is_err());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn poisson_tail_matches_cdf() {
        // P(n > 5 | μ = 4) = 1 − Σ_{n≤5} e^{-4} 4^n/n!
        let mut cdf = 0.0;
        let mut p = (-4.0f64).exp();
        for n in 0..=5 {
            if n > 0 {
                p *= 4.0 / n as f64;
            }
            cdf += p;
        }
        assert!((poisson_tail(4.0, 5) - (1.0 - cdf)).abs() < 1e-14);
    }

    #[test]
    fn ecs_state_norm() {
        let p = EcsParams { d: 1, alpha_sq: 1.0, b: 0.0, c: 1.0, m: 1 };
        let s = build_ecs_state(&p, 30, 1e-14).unwrap();
        assert!((s.norm_sq() - 1.0).abs() < 1e-14);

        let p = ecs(2, 1.0, 0.4, 1);
        let s = build_ecs_state(&p, 30, 1e-14).unwrap();
        assert!((s.norm_sq() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cross_branch_overlap() {
        let p = ecs(3, 1.7, 0.2, 1);
        let s = build_ecs_state(&p, 40, 1e-15).unwrap();
        let t = s.terms();
        let overlap: Complex64 = t[1].factors.iter().zip(&t[2].factors).map(|(a, b)| a.overlap(b)).product();
        assert!((overlap.re - (-1.7f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn noon_state_norm_and_orthogonality() {
        let h = 0.5f64.sqrt();
        let p = NoonParams { d: 1, photon_number: 1, b: h, c: h, m: 1 };
        let s = build_noon_state(&p, 1).unwrap();
        assert!((s.norm_sq() - 1.0).abs() < 1e-15);
        let t = s.terms();
        let overlap: Complex64 = t[0].factors.iter().zip(&t[1].factors).map(|(a, b)| a.overlap(b)).product();
        assert_eq!(overlap, c(0.0));
        assert!(build_noon_state(&NoonParams { photon_number: 3, ..p }, 2).is_err());

        let p = NoonParams::optimal(5, 10, 1).unwrap();
        let s = build_noon_state(&p, 10).unwrap();
        assert!((s.norm_sq() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn number_power_action() {
        let p = ecs(2, 1.3, 0.35, 1);
        let s = build_ecs_state(&p, 40, 1e-15).unwrap();
        assert_eq!(apply_number_power(&s, 1, 0).unwrap(), s);
        let vac = ModeVector::vacuum(5).number_power(3);
        assert!(vac.amplitudes().iter().all(|a| a.norm() == 0.0));
        for m in 1..=3 {
            let h = apply_number_power(&s, 2, m).unwrap();
            let expect = p.b * p.b * moments::moment(m, 1.3).unwrap();
            assert!((inner_product(&s, &h).unwrap().re - expect).abs() < 1e-12);
        }
        assert!(apply_number_power(&s, 3, 1).is_err());
    }

    #[test]
    fn second_moments_are_diagonal() {
        let p = ecs(3, 2.0, 0.25, 2);
        let s = build_ecs_state(&p, auto_cutoff(2.0, 2, 1e-15).unwrap(), 1e-15).unwrap();
        let h1 = apply_number_power(&s, 1, 2).unwrap();
        let h2 = apply_number_power(&s, 2, 2).unwrap();
        assert_eq!(inner_product(&h1, &h2).unwrap(), c(0.0));
        let expect = p.b * p.b * moments::moment(4, 2.0).unwrap();
        let got = inner_product(&h1, &h1).unwrap().re;
        assert!((got - expect).abs() / expect < 1e-13);
    }

    #[test]
    fn shape_mismatch() {
        let a = build_ecs_state(&ecs(1, 1.0, 0.5, 1), 30, 1e-14).unwrap();
        let b = build_ecs_state(&ecs(2, 1.0, 0.4, 1), 30, 1e-14).unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::ShapeMismatch(_))));
        let b = build_ecs_state(&ecs(1, 1.0, 0.5, 1), 31, 1e-14).unwrap();
        assert!(inner_product(&a, &b).is_err());
    }

    #[test]
    fn numerical_qfim_single_mode() {
        let p = ecs(1, 1.0, 0.5, 1);
        let f = numerical_qfim(&p, 40, 1e-15).unwrap();
        assert!((f.get(0, 0) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn numerical_qfim_matches_analytic() {
        for d in 1..=4 {
            for m in 1..=2 {
                for &a in &[0.25, 1.0, 4.0] {
                    let p = EcsParams::optimal(d, a, m).unwrap();
                    let cutoff = p.suggested_cutoff(1e-14).unwrap();
                    let num = numerical_qfim(&p, cutoff, 1e-14).unwrap();
                    let ana = ecs_qfim(&p).unwrap().to_dense();
                    assert!(num.relative_frobenius(&ana) < 1e-8, "d={d} m={m} a={a}");
                    assert!(num.is_symmetric(0.0));
                }
            }
        }
    }

    #[test]
    fn numerical_qfim_noon() {
        let h = 1.0 / 3f64.sqrt();
        let p = NoonParams { d: 2, photon_number: 3, b: h, c: h, m: 1 };
        let f = numerical_qfim(&p, 3, 0.0).unwrap();
        let b2 = h * h;
        for j in 0..2 {
            for k in 0..2 {
                let delta = if j == k { 1.0 } else { 0.0 };
                let expect = 4.0 * (delta * b2 * 9.0 - b2 * b2 * 9.0);
                assert!((f.get(j, k) - expect).abs() < 1e-12);
            }
        }
        let p = NoonParams::optimal(4, 3, 2).unwrap();
        let f = numerical_qfim(&p, 3, 0.0).unwrap();
        assert!(f.max_abs_diff(&noon_qfim(&p).unwrap().to_dense()) < 1e-9);
    }

    #[test]
    fn derivative_path_matches_moment_path() {
        let p = ecs(3, 1.0, 0.3, 1);
        let s = build_ecs_state(&p, auto_cutoff(1.0, 1, 1e-14).unwrap(), 1e-14).unwrap();
        let moment = state_qfim(&s, 1).unwrap();
        let fd = qfim_via_state_derivatives(&s, 1, &ThetaVector::zeros(3), DEFAULT_FD_STEP).unwrap();
        assert!(fd.relative_frobenius(&moment) < 1e-5);
    }

    #[test]
    fn derivative_path_single_mode_analytic() {
        let p = ecs(1, 1.0, 0.5, 1);
        let s = build_ecs_state(&p, 40, 1e-15).unwrap();
        let fd = qfim_via_state_derivatives(&s, 1, &ThetaVector::zeros(1), 1e-5).unwrap();
        let analytic = 4.0 * 0.25 * 2.0 - 4.0 * 0.0625;
        assert!((fd.get(0, 0) - analytic).abs() < 1e-6);
    }

    #[test]
    fn derivative_path_is_theta_independent() {
        let p = ecs(3, 2.0, 0.3, 2);
        let s = build_ecs_state(&p, auto_cutoff(2.0, 2, 1e-14).unwrap(), 1e-14).unwrap();
        let at_zero = qfim_via_state_derivatives(&s, 2, &ThetaVector::zeros(3), 1e-4).unwrap();
        let theta = ThetaVector::new(vec![0.37, -1.2, 2.9]).unwrap();
        let at_theta = qfim_via_state_derivatives(&s, 2, &theta, 1e-4).unwrap();
        assert!(at_theta.relative_frobenius(&at_zero) < 1e-9);
    }

    #[test]
    fn central_difference_is_second_order() {
        let p = ecs(2, 4.0, 0.3, 2);
        let s = build_ecs_state(&p, auto_cutoff(4.0, 2, 1e-14).unwrap(), 1e-14).unwrap();
        let exact = state_qfim(&s, 2).unwrap();
        let theta = ThetaVector::zeros(2);
        let e1 = qfim_via_state_derivatives(&s, 2, &theta, 4e-4).unwrap().relative_frobenius(&exact);
        let e2 = qfim_via_state_derivatives(&s, 2, &theta, 2e-4).unwrap().relative_frobenius(&exact);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn fd_step_range_enforced() {
        let s = build_ecs_state(&ecs(1, 1.0, 0.5, 1), 30, 1e-14).unwrap();
        assert!(qfim_via_state_derivatives(&s, 1, &ThetaVector::zeros(1), 1e-2).is_err());
        assert!(qfim_via_state_derivatives(&s, 1, &ThetaVector::zeros(2), 1e-4).is_err());
    }

    #[test]
    fn commutators_vanish() {
        let p = ecs(3, 1.0, 0.3, 2);
        let s = build_ecs_state(&p, auto_cutoff(1.0, 2, 1e-14).unwrap(), 1e-14).unwrap();
        for j in 0..=3 {
            for k in 0..=3 {
                let z = commutator_expectation(&s, j, k, 2).unwrap();
                assert!(z.norm() <= 1e-14);
                if j == k {
                    assert_eq!(z, c(0.0));
                }
            }
        }
    }

    #[test]
    fn mean_photons_match_closed_form() {
        let p = ecs(2, 1.0, 0.4, 1);
        let s = build_ecs_state(&p, auto_cutoff(1.0, 1, 1e-14).unwrap(), 1e-14).unwrap();
        let oracle = mean_photon_number(&s).unwrap();
        let closed = mean_total_photons(&p);
        assert!((oracle - closed).abs() / closed < 1e-9);
    }

    #[test]
    fn normalization_scan_over_b() {
        let (d, a) = (3, 1.5);
        let gamma = crate::states::b_domain_limit(d, a).unwrap();
        let cutoff = auto_cutoff(a, 1, 1e-15).unwrap();
        for i in 0..1000 {
            let b = gamma.sqrt() * i as f64 / 1000.0;
            let c = solve_c(b, d, a).unwrap();
            let p = EcsParams { d, alpha_sq: a, b, c, m: 1 };
            let s = build_ecs_state(&p, cutoff, 1e-15).unwrap();
            assert!((s.norm_sq() - 1.0).abs() < 1e-10, "b={b}");
        }
    }
}
