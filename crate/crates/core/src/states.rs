//! Generalized ECS and NOON input states.
//!
//! The ECS `b Σ_j |α⟩_j + c|α⟩_0` is normalized when
//! `c² + 2bvc + b²u = 1`, with `u = d + d(d−1)e^{−|α|²}` and `v = d e^{−|α|²}`.
//! Only real `b ≥ 0` is modeled: the bounds depend on `|b|²` alone and a global
//! phase makes `c` real, so nothing is lost.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments;

/// Absolute tolerance for normalization and domain membership.
pub const NORMALIZATION_TOL: f64 = 1e-12;

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidInput("number of phases d must be at least 1".into()));
    }
    Ok(())
}

fn check_alpha_sq(alpha_sq: f64) -> Result<()> {
    if !alpha_sq.is_finite() || alpha_sq < 0.0 {
        return Err(Error::InvalidInput(format!(
            "|α|² must be finite and nonnegative, got {alpha_sq}"
        )));
    }
    Ok(())
}

/// Overlap coefficients `(u, v)` of the normalization condition.
pub fn uv_coefficients(d: usize, alpha_sq: f64) -> (f64, f64) {
    let d = d as f64;
    let x = (-alpha_sq).exp();
    (d + d * (d - 1.0) * x, d * x)
}

/// `u − v²`, evaluated in the factored form `d(1 − e^{−|α|²})(1 + d e^{−|α|²})`
/// which stays accurate as `|α|² → 0`.
fn domain_denominator(d: usize, alpha_sq: f64) -> f64 {
    let d = d as f64;
    let x = (-alpha_sq).exp();
    d * (-(-alpha_sq).exp_m1()) * (1.0 + d * x)
}

/// Upper limit `Γ = 1/(u − v²)` of `b²`.
pub fn b_domain_limit(d: usize, alpha_sq: f64) -> Result<f64> {
    check_d(d)?;
    check_alpha_sq(alpha_sq)?;
    let den = domain_denominator(d, alpha_sq);
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!(
            "u − v² = {den} ≤ 0 at d={d}, |α|²={alpha_sq}: all branches collapse to the vacuum"
        )));
    }
    Ok(1.0 / den)
}

/// Which root of the `c` quadratic to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CRoot {
    /// `−bv + √disc`, continuously connected to `c = 1` at `b = 0`.
    #[default]
    Larger,
    /// `−bv − √disc`.
    Smaller,
}

/// Reference-branch coefficient `c` that normalizes the ECS for a given `b`.
pub fn solve_c(b: f64, d: usize, alpha_sq: f64) -> Result<f64> {
    solve_c_with_root(b, d, alpha_sq, CRoot::Larger)
}

pub fn solve_c_with_root(b: f64, d: usize, alpha_sq: f64, root: CRoot) -> Result<f64> {
    if !b.is_finite() || b < 0.0 {
        return Err(Error::InvalidInput(format!("b must be real and nonnegative, got {b}")));
    }
    let gamma_cap = b_domain_limit(d, alpha_sq)?;
    let b_sq = b * b;
    if b_sq - gamma_cap > NORMALIZATION_TOL {
        return Err(Error::Domain { b_sq, gamma_cap });
    }
    let (_, v) = uv_coefficients(d, alpha_sq);
    let disc = (1.0 - b_sq * domain_denominator(d, alpha_sq)).max(0.0);
    Ok(match root {
        CRoot::Larger => -b * v + disc.sqrt(),
        CRoot::Smaller => -b * v - disc.sqrt(),
    })
}

/// Unconstrained minimizer `b⋆ = √(g/(√d + d))` of the total-variance bound.
pub fn b_star(d: usize, m: u32, alpha_sq: f64) -> Result<f64> {
    check_d(d)?;
    check_alpha_sq(alpha_sq)?;
    let g = moments::moment_ratio(m, alpha_sq)?;
    let df = d as f64;
    Ok((g / (df.sqrt() + df)).sqrt())
}

/// The `b` domain and optimizer for one `(d, m, |α|²)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainGeometry {
    pub gamma_cap: f64,
    pub b_star: f64,
    pub g: f64,
    /// `b⋆ ≤ √Γ`
    pub interior: bool,
}

impl DomainGeometry {
    pub fn new(d: usize, m: u32, alpha_sq: f64) -> Result<Self> {
        let gamma_cap = b_domain_limit(d, alpha_sq)?;
        let g = moments::moment_ratio(m, alpha_sq)?;
        let df = d as f64;
        let b_star = (g / (df.sqrt() + df)).sqrt();
        Ok(Self {
            gamma_cap,
            b_star,
            g,
            interior: b_star <= gamma_cap.sqrt(),
        })
    }

    pub fn sqrt_gamma(&self) -> f64 {
        self.gamma_cap.sqrt()
    }

    /// `min(b⋆, √Γ)`, the constrained optimum.
    pub fn optimal_b(&self) -> f64 {
        self.b_star.min(self.sqrt_gamma())
    }
}

/// A generalized entangled coherent state with generator order `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcsParams {
    pub d: usize,
    pub alpha_sq: f64,
    pub b: f64,
    pub c: f64,
    pub m: u32,
}

impl EcsParams {
    /// Normalized parameters for a given `b`, with `c` from the larger root.
    pub fn with_b(d: usize, alpha_sq: f64, b: f64, m: u32) -> Result<Self> {
        let c = solve_c(b, d, alpha_sq)?;
        validate_ecs(Self { d, alpha_sq, b, c, m })
    }

    /// Parameters at the constrained optimum `min(b⋆, √Γ)`.
    pub fn optimal(d: usize, alpha_sq: f64, m: u32) -> Result<Self> {
        let geom = DomainGeometry::new(d, m, alpha_sq)?;
        Self::with_b(d, alpha_sq, geom.optimal_b(), m)
    }

    /// `⟨ψ|ψ⟩ = c² + 2bvc + b²u`.
    pub fn norm_sq(&self) -> f64 {
        let (u, v) = uv_coefficients(self.d, self.alpha_sq);
        self.c * self.c + 2.0 * self.b * v * self.c + self.b * self.b * u
    }
}

/// Returns `p` unchanged if it is a normalized ECS with `b²` in `[0, Γ]`.
pub fn validate_ecs(p: EcsParams) -> Result<EcsParams> {
    check_d(p.d)?;
    if p.m == 0 {
        return Err(Error::InvalidInput("generator order m must be at least 1".into()));
    }
    if !p.b.is_finite() || p.b < 0.0 || !p.c.is_finite() {
        return Err(Error::InvalidInput(format!(
            "coefficients must be finite with b ≥ 0, got b={}, c={}",
            p.b, p.c
        )));
    }
    let gamma_cap = b_domain_limit(p.d, p.alpha_sq)?;
    let b_sq = p.b * p.b;
    if b_sq - gamma_cap > NORMALIZATION_TOL {
        return Err(Error::Domain { b_sq, gamma_cap });
    }
    let norm = p.norm_sq();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization { norm, tol: NORMALIZATION_TOL });
    }
    Ok(p)
}

/// Mean total photon number `|α|²(d b² + c²)` of the ECS.
pub fn mean_total_photons(p: &EcsParams) -> f64 {
    p.alpha_sq * (p.d as f64 * p.b * p.b + p.c * p.c)
}

/// Optimal branch weight `1/√(d + √d)` of the generalized NOON state.
pub fn noon_optimal_b(d: usize) -> f64 {
    let d = d as f64;
    1.0 / (d + d.sqrt()).sqrt()
}

/// A generalized NOON state `b Σ_j |N⟩_j + c|N⟩_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoonParams {
    pub d: usize,
    pub photon_number: u32,
    pub b: f64,
    pub c: f64,
    pub m: u32,
}

impl NoonParams {
    /// Branch weight `b` with the nonnegative `c = √(1 − d b²)`.
    pub fn with_b(d: usize, photon_number: u32, b: f64, m: u32) -> Result<Self> {
        check_d(d)?;
        let c_sq = 1.0 - d as f64 * b * b;
        if c_sq < -NORMALIZATION_TOL {
            return Err(Error::Domain { b_sq: b * b, gamma_cap: 1.0 / d as f64 });
        }
        Self { d, photon_number, b, c: c_sq.max(0.0).sqrt(), m }.validate()
    }

    pub fn optimal(d: usize, photon_number: u32, m: u32) -> Result<Self> {
        Self::with_b(d, photon_number, noon_optimal_b(d), m)
    }

    pub fn validate(self) -> Result<Self> {
        check_d(self.d)?;
        if self.photon_number == 0 || self.m == 0 {
            return Err(Error::InvalidInput("NOON states need N ≥ 1 and m ≥ 1".into()));
        }
        if !self.b.is_finite() || self.b < 0.0 || !self.c.is_finite() {
            return Err(Error::InvalidInput(format!(
                "coefficients must be finite with b ≥ 0, got b={}, c={}",
                self.b, self.c
            )));
        }
        let norm = self.d as f64 * self.b * self.b + self.c * self.c;
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization { norm, tol: NORMALIZATION_TOL });
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uv_examples() {
        let (u, v) = uv_coefficients(1, 3.7);
        assert_eq!(u, 1.0);
        assert!((v - (-3.7f64).exp()).abs() < 1e-16);

        let (u, v) = uv_coefficients(5, 16.0);
        assert!((u - (5.0 + 20.0 * (-16.0f64).exp())).abs() < 1e-15);
        assert!((u - 5.000_002_25).abs() < 1e-8);
        assert!((v - 5.6e-7).abs() < 1e-8);

        assert_eq!(uv_coefficients(2, 0.0), (4.0, 2.0));
    }

    #[test]
    fn gamma_examples() {
        assert!((b_domain_limit(1, 60.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((b_domain_limit(4, 60.0).unwrap() - 0.25).abs() < 1e-15);
        let x = (-1.0f64).exp();
        let expected = 1.0 / (2.0 + 2.0 * x - 4.0 * x * x);
        let got = b_domain_limit(2, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 0.4557).abs() < 1e-4);
    }

    #[test]
    fn gamma_factored_form_matches_expansion() {
        for d in 1..=12usize {
            for &a in &[0.3, 1.0, 2.5, 7.0, 20.0] {
                let (u, v) = uv_coefficients(d, a);
                let direct = 1.0 / (u - v * v);
                let got = b_domain_limit(d, a).unwrap();
                assert!((got - direct).abs() / direct < 1e-12, "d={d} a={a}");
            }
        }
    }

    #[test]
    fn vacuum_is_degenerate() {
        for d in 1..5 {
            assert!(matches!(b_domain_limit(d, 0.0), Err(Error::Degenerate(_))));
        }
        assert!(matches!(b_domain_limit(0, 1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn solve_c_examples() {
        assert_eq!(solve_c(0.0, 3, 1.0).unwrap(), 1.0);

        let gamma = b_domain_limit(2, 2.0).unwrap();
        let (_, v) = uv_coefficients(2, 2.0);
        let c = solve_c(gamma.sqrt(), 2, 2.0).unwrap();
        assert!((c + gamma.sqrt() * v).abs() < 1e-7, "disc should vanish");

        let c = solve_c(0.3, 2, 4.0).unwrap();
        let (u, v) = uv_coefficients(2, 4.0);
        assert!((c * c + 2.0 * 0.3 * v * c + 0.09 * u - 1.0).abs() < 1e-14);
    }

    #[test]
    fn smaller_root_also_normalizes() {
        let c = solve_c_with_root(0.2, 3, 1.5, CRoot::Smaller).unwrap();
        assert!(c < 0.0);
        let p = EcsParams { d: 3, alpha_sq: 1.5, b: 0.2, c, m: 1 };
        assert!(validate_ecs(p).is_ok());
    }

    #[test]
    fn solve_c_out_of_domain() {
        let gamma = b_domain_limit(2, 4.0).unwrap();
        assert!(matches!(solve_c(gamma.sqrt() * 1.01, 2, 4.0), Err(Error::Domain { .. })));
        assert!(solve_c(-0.1, 2, 4.0).is_err());
    }

    #[test]
    fn b_star_examples() {
        let expected = 1.0 / 2f64.sqrt();
        assert!((b_star(1, 1, 1e9).unwrap() - expected).abs() < 1e-9);
        assert!((b_star(4, 1, 1.0).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((b_star(1, 2, 1.0).unwrap() - (15.0 / 4.0 / 2.0f64).sqrt()).abs() < 1e-15);
        assert!(b_star(3, 1, 0.0).is_err());
    }

    #[test]
    fn b_star_minimizes_bound_on_grid() {
        // w(b²) = 1/b² + 1/(g − d b²) scanned on a fine grid
        let (d, m, a) = (4usize, 1u32, 1.0);
        let g = moments::moment_ratio(m, a).unwrap();
        let hi = g / d as f64;
        let n = 200_000;
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for i in 1..n {
            let x = hi * i as f64 / n as f64;
            let w = 1.0 / x + 1.0 / (g - d as f64 * x);
            if w < best {
                best = w;
                arg = x;
            }
        }
        let bs = b_star(d, m, a).unwrap();
        assert!((arg.sqrt() - bs).abs() < 1e-4);
    }

    #[test]
    fn validate_examples() {
        assert!(validate_ecs(EcsParams { d: 2, alpha_sq: 4.0, b: 0.0, c: 1.0, m: 1 }).is_ok());
        let gamma = b_domain_limit(2, 4.0).unwrap();
        let bad = EcsParams { d: 2, alpha_sq: 4.0, b: gamma.sqrt() * 1.01, c: 0.0, m: 1 };
        assert!(matches!(validate_ecs(bad), Err(Error::Domain { .. })));
        let c = solve_c(0.3, 3, 2.0).unwrap();
        assert!(validate_ecs(EcsParams { d: 3, alpha_sq: 2.0, b: 0.3, c, m: 2 }).is_ok());
        let off = EcsParams { d: 3, alpha_sq: 2.0, b: 0.3, c: c + 1e-6, m: 2 };
        assert!(matches!(validate_ecs(off), Err(Error::Normalization { .. })));
    }

    #[test]
    fn mean_photon_examples() {
        let p = EcsParams { d: 3, alpha_sq: 0.0, b: 0.0, c: 1.0, m: 1 };
        assert_eq!(mean_total_photons(&p), 0.0);
        let bs = b_star(5, 1, 16.0).unwrap();
        let p = EcsParams::with_b(5, 16.0, bs, 1).unwrap();
        let n = mean_total_photons(&p);
        assert!((n - 16.0).abs() < 1e-5, "{n}");
        // the |α|=4 photon-number discrepancy is of order 10⁻⁶
        assert!((n - 16.0).abs() > 1e-7);
    }

    #[test]
    fn noon_optimal_b_examples() {
        assert!((noon_optimal_b(1) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((noon_optimal_b(4) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((noon_optimal_b(5) - 0.3717).abs() < 1e-4);
        let p = NoonParams::optimal(5, 10, 1).unwrap();
        assert!((p.c * p.c - (1.0 - 5.0 * p.b * p.b)).abs() < 1e-15);
    }

    #[test]
    fn noon_validation() {
        assert!(NoonParams { d: 2, photon_number: 0, b: 0.5, c: 0.5f64.sqrt(), m: 1 }.validate().is_err());
        assert!(NoonParams { d: 2, photon_number: 3, b: 0.5, c: 0.5, m: 1 }.validate().is_err());
        assert!(NoonParams::with_b(2, 3, 0.8, 1).is_err());
    }

    #[test]
    fn gamma_nonincreasing_in_d() {
        for ai in 0..=44 {
            let a = 3.0 + 0.5 * ai as f64;
            let mut prev = f64::INFINITY;
            for d in 1..=20usize {
                if a < (d as f64).ln() {
                    continue;
                }
                let g = b_domain_limit(d, a).unwrap();
                assert!(g <= prev);
                prev = g;
            }
        }
    }

    #[test]
    fn large_alpha_gamma_limit() {
        for d in 1..=10usize {
            let g = b_domain_limit(d, 36.0).unwrap();
            assert!((g - 1.0 / d as f64).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn solved_c_normalizes(d in 1usize..12, a in 0.05f64..30.0, frac in 0.0f64..1.0) {
            let gamma = b_domain_limit(d, a).unwrap();
            let b = gamma.sqrt() * frac;
            let c = solve_c(b, d, a).unwrap();
            let p = EcsParams { d, alpha_sq: a, b, c, m: 1 };
            prop_assert!((p.norm_sq() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn geometry_g_at_least_one(d in 1usize..20, m in 1u32..4, a in 0.01f64..40.0) {
            let geom = DomainGeometry::new(d, m, a).unwrap();
            prop_assert!(geom.g >= 1.0);
            prop_assert_eq!(geom.interior, geom.b_star <= geom.gamma_cap.sqrt());
        }
    }
}
