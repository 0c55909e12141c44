//! Oracle-equivalence suites.
//!
//! Each check compares a closed form against an independent computation and
//! records the largest discrepancy seen. Random draws come from a seeded
//! ChaCha8 stream generated up front, so reports are byte-identical for a given
//! seed regardless of how many threads evaluate them.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{self, Regime};
use crate::error::{Error, Result};
use crate::moments::{self, MomentQuery};
use crate::oracle::{self, dense, ThetaVector};
use crate::qfim::{self, DenseMatrix, StructuredQfim};
use crate::states::{self, DomainGeometry, EcsParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Moments,
    Normalization,
    Qfim,
    Optimizer,
    Bounds,
    All,
}

impl Suite {
    fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Moments,
                Suite::Normalization,
                Suite::Qfim,
                Suite::Optimizer,
                Suite::Bounds,
            ],
            s => vec![s],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Suite::Moments => "moments",
            Suite::Normalization => "normalization",
            Suite::Qfim => "qfim",
            Suite::Optimizer => "optimizer",
            Suite::Bounds => "bounds",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Suite::Moments,
            Suite::Normalization,
            Suite::Qfim,
            Suite::Optimizer,
            Suite::Bounds,
            Suite::All,
        ]
        .into_iter()
        .find(|x| x.name() == s)
        .ok_or_else(|| Error::InvalidInput(format!("unknown suite {s:?}")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pass thresholds, one per kind of comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub moments: f64,
    pub normalization: f64,
    pub qfim: f64,
    pub fd: f64,
    pub dense: f64,
    pub commutator: f64,
    pub inverse: f64,
    pub optimizer: f64,
    pub closed_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            moments: 1e-10,
            normalization: 1e-10,
            qfim: 1e-8,
            fd: 1e-5,
            dense: 1e-12,
            commutator: 1e-14,
            inverse: 1e-10,
            optimizer: 1e-3,
            closed_form: 1e-12,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 9] = [
        "moments",
        "normalization",
        "qfim",
        "fd",
        "dense",
        "commutator",
        "inverse",
        "optimizer",
        "closed_form",
    ];

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidInput(format!("tolerance {key} must be positive, got {value}")));
        }
        let slot = match key {
            "moments" => &mut self.moments,
            "normalization" => &mut self.normalization,
            "qfim" => &mut self.qfim,
            "fd" => &mut self.fd,
            "dense" => &mut self.dense,
            "commutator" => &mut self.commutator,
            "inverse" => &mut self.inverse,
            "optimizer" => &mut self.optimizer,
            "closed_form" => &mut self.closed_form,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "unknown tolerance key {key:?}; expected one of {}",
                    Self::KEYS.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: Suite,
    pub name: String,
    pub samples: usize,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One line per check plus a summary line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {}/{} samples={} max_discrepancy={:.3e} tol={:.1e}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.samples,
                c.max_discrepancy,
                c.tolerance
            ));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!(
            "seed={} checks={} failed={}\n",
            self.seed,
            self.checks.len(),
            failed
        ));
        out
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Folds per-sample discrepancies in input order. A sample that errors counts
/// as an infinite discrepancy.
fn check(suite: Suite, name: &str, tolerance: f64, samples: Vec<Result<f64>>) -> CheckResult {
    let n = samples.len();
    let max = samples
        .into_iter()
        .map(|r| match r {
            Ok(v) if v.is_nan() => f64::INFINITY,
            Ok(v) => v,
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    CheckResult {
        suite,
        name: name.to_string(),
        samples: n,
        max_discrepancy: max,
        tolerance,
        passed: max <= tolerance,
    }
}

/// The `(d, m, |α|², b)` grid shared by the QFIM checks: `d ≤ 4`, `m ≤ 2`,
/// `|α|² ∈ {0.25, 1, 4}`, `b ∈ {0.1, min(b⋆, 0.99√Γ)}`.
pub fn qfim_grid() -> Result<Vec<EcsParams>> {
    let mut out = Vec::new();
    for d in 1..=4 {
        for m in 1..=2 {
            for &a in &[0.25, 1.0, 4.0] {
                let geom = DomainGeometry::new(d, m, a)?;
                for b in [0.1, geom.b_star.min(0.99 * geom.sqrt_gamma())] {
                    out.push(EcsParams::with_b(d, a, b, m)?);
                }
            }
        }
    }
    Ok(out)
}

pub const ORACLE_TAIL_TOL: f64 = 1e-14;

/// Central-difference step for the state-derivative check. The default step
/// leaves an `O(h² f(4m)/f(2m))` error near 2e-5 at `m = 2, |α|² = 4`.
pub const VERIFY_FD_STEP: f64 = 1e-5;

fn oracle_state(p: &EcsParams) -> Result<oracle::SparseProductState> {
    let cutoff = oracle::auto_cutoff(p.alpha_sq, p.m, ORACLE_TAIL_TOL)?;
    oracle::build_ecs_state(p, cutoff, ORACLE_TAIL_TOL)
}

fn moments_suite(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Vec<CheckResult> {
    let mut grid = Vec::new();
    for m in 0..=12u32 {
        for &mu in &[0.1, 0.5, 1.0, 2.0, 4.0, 9.0, 16.0] {
            grid.push((m, mu));
        }
    }
    let poisson = grid
        .par_iter()
        .map(|&(m, mu)| {
            let q = MomentQuery::new(m, mu)?;
            let closed = moments::coherent_number_moment(q)?;
            let summed = moments::moment_via_poisson_sum(q, 1e-14)?;
            Ok((closed - summed).abs() / closed.max(1.0))
        })
        .collect();

    let mus: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..20.0)).collect();
    let printed = mus
        .iter()
        .map(|&mu| {
            let f2 = mu * (1.0 + mu);
            let f4 = mu.powi(4) + 6.0 * mu.powi(3) + 7.0 * mu * mu + mu;
            Ok(rel(moments::moment(2, mu)?, f2).max(rel(moments::moment(4, mu)?, f4)))
        })
        .collect();

    vec![
        check(Suite::Moments, "stirling-vs-poisson-sum", tol.moments, poisson),
        check(Suite::Moments, "printed-polynomials", tol.closed_form, printed),
    ]
}

fn normalization_suite(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Vec<CheckResult> {
    let draws: Vec<(usize, f64, f64)> = (0..100)
        .map(|_| (rng.gen_range(1..=6), rng.gen_range(0.05..9.0), rng.gen_range(0.0..=1.0)))
        .collect();
    let samples = draws
        .par_iter()
        .map(|&(d, a, frac)| {
            let gamma = states::b_domain_limit(d, a)?;
            let p = EcsParams::with_b(d, a, frac * gamma.sqrt(), 1)?;
            let s = oracle_state(&p)?;
            Ok((s.norm_sq() - 1.0).abs())
        })
        .collect();
    let photons = draws
        .par_iter()
        .map(|&(d, a, frac)| {
            let gamma = states::b_domain_limit(d, a)?;
            let p = EcsParams::with_b(d, a, frac * gamma.sqrt(), 1)?;
            let s = oracle_state(&p)?;
            let closed = states::mean_total_photons(&p);
            Ok(rel(oracle::mean_photon_number(&s)?, closed))
        })
        .collect();
    vec![
        check(Suite::Normalization, "oracle-norm", tol.normalization, samples),
        check(Suite::Normalization, "oracle-mean-photons", 1e-9, photons),
    ]
}

fn qfim_suite(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Vec<CheckResult> {
    let grid = match qfim_grid() {
        Ok(g) => g,
        Err(e) => return vec![check(Suite::Qfim, "grid", tol.qfim, vec![Err(e)])],
    };
    let analytic = grid
        .par_iter()
        .map(|p| {
            let num = oracle::state_qfim(&oracle_state(p)?, p.m)?;
            Ok(num.relative_frobenius(&qfim::ecs_qfim(p)?.to_dense()))
        })
        .collect();
    let fd = grid
        .par_iter()
        .map(|p| {
            let s = oracle_state(p)?;
            let moment_path = oracle::state_qfim(&s, p.m)?;
            let theta = ThetaVector::zeros(p.d);
            let fd_path = oracle::qfim_via_state_derivatives(&s, p.m, &theta, VERIFY_FD_STEP)?;
            Ok(fd_path.relative_frobenius(&moment_path))
        })
        .collect();
    let dense_check = grid
        .par_iter()
        .filter(|p| p.d <= 2)
        .map(|p| {
            let s = oracle_state(p)?;
            let t = dense::dense_tensor_state(&s)?;
            Ok(t.qfim(p.m)?.relative_frobenius(&oracle::state_qfim(&s, p.m)?))
        })
        .collect();
    let commutators = grid
        .par_iter()
        .map(|p| {
            let s = oracle_state(p)?;
            let mut worst = 0.0_f64;
            for j in 0..=p.d {
                for k in 0..=p.d {
                    worst = worst.max(oracle::commutator_expectation(&s, j, k, p.m)?.norm());
                }
            }
            Ok(worst)
        })
        .collect();

    let matrices: Vec<(usize, f64, f64)> = (0..2000)
        .map(|_| {
            let d = rng.gen_range(1..=12);
            let gamma = rng.gen_range(0.1..10.0);
            // keep 1 + ωd away from zero
            let omega = -rng.gen_range(0.0..0.9) / d as f64;
            (d, gamma, omega)
        })
        .collect();
    let inverse = matrices
        .par_iter()
        .map(|&(d, gamma, omega)| {
            let f = StructuredQfim::new(d, gamma, omega);
            let prod = f.to_dense().matmul(&qfim::qfim_inverse(&f)?.to_dense())?;
            Ok(prod.max_abs_diff(&DenseMatrix::identity(d)))
        })
        .collect();

    vec![
        check(Suite::Qfim, "analytic-vs-oracle", tol.qfim, analytic),
        check(Suite::Qfim, "state-derivative-path", tol.fd, fd),
        check(Suite::Qfim, "sparse-vs-dense", tol.dense, dense_check),
        check(Suite::Qfim, "commutators", tol.commutator, commutators),
        check(Suite::Qfim, "structured-inverse", tol.inverse, inverse),
    ]
}

fn optimizer_suite(rng: &mut ChaCha8Rng, tol: &Tolerances) -> Vec<CheckResult> {
    let draws: Vec<(usize, u32, f64)> = (0..50)
        .map(|_| (rng.gen_range(1..=10), rng.gen_range(1..=2), rng.gen_range(0.5..25.0)))
        .collect();
    let scan = draws
        .par_iter()
        .map(|&(d, m, a)| {
            let best = bounds::minimize_bound_over_b(d, m, a)?;
            let grid = bounds::grid_scan_minimizer(d, m, a, 10_000)?;
            Ok(rel(best.value, grid.value))
        })
        .collect();
    let interior = draws
        .par_iter()
        .map(|&(d, m, a)| {
            let best = bounds::minimize_bound_over_b(d, m, a)?;
            if best.regime != Regime::Interior {
                return Ok(0.0);
            }
            let closed = if m == 1 {
                bounds::ecs_linear_closed_form(d, a)
            } else {
                bounds::ecs_nonlinear_closed_form(d, a)
            };
            Ok(rel(best.value, closed))
        })
        .collect();
    vec![
        check(Suite::Optimizer, "closed-form-vs-grid-scan", tol.optimizer, scan),
        check(Suite::Optimizer, "interior-closed-form", tol.closed_form, interior),
    ]
}

fn bounds_suite(tol: &Tolerances) -> Vec<CheckResult> {
    let pf5 = bounds::parameter_factor(5);
    let headline = vec![
        bounds::qcrb_ecs_linear(5, 4.0).map(|r| rel(r.value, pf5 / 100.0)),
        bounds::qcrb_noon_linear(5, 10.0).map(|r| rel(r.value, pf5 / 400.0)),
        bounds::qcrb_noon_nonlinear(5, 10.0)
            .and_then(|nl| Ok(rel(nl.value, bounds::qcrb_noon_linear(5, 10.0)?.value / 100.0))),
    ];

    let mut scaling = Vec::new();
    for d in 1..=10 {
        for &x in &[1.0, 2.5, 7.0] {
            let pf = bounds::parameter_factor(d);
            scaling.push(bounds::qcrb_noon_linear(d, x).map(|r| rel(r.value * 4.0 * x * x / pf, 1.0)));
            scaling.push(
                bounds::qcrb_noon_nonlinear(d, x).map(|r| rel(r.value * 4.0 * x.powi(4) / pf, 1.0)),
            );
            let s = 1.0 + x;
            scaling.push(Ok(rel(bounds::ecs_linear_closed_form(d, x) * 4.0 * s * s / pf, 1.0)));
        }
    }

    // EcsLinear < NoonNonlinear exactly below the golden ratio; a violated
    // ordering counts as an infinite discrepancy
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let crossing = [1.0, 1.5, 1.7, 2.0]
        .iter()
        .map(|&n| {
            let ecs = bounds::ecs_linear_closed_form(5, n);
            let noon = bounds::qcrb_noon_nonlinear(5, n)?.value;
            Ok(if (ecs < noon) == (n < golden) { 0.0 } else { f64::INFINITY })
        })
        .collect();

    let zzb = [4.0, 9.0, 16.0]
        .iter()
        .map(|&a| {
            let ecs = bounds::zzb_ecs(5, a)?.value;
            let noon = bounds::zzb_noon(5, a)?.value;
            Ok(if ecs < noon { 0.0 } else { f64::INFINITY })
        })
        .collect();

    vec![
        check(Suite::Bounds, "headline-values", tol.closed_form, headline),
        check(Suite::Bounds, "parameter-factor-scaling", tol.closed_form, scaling),
        check(Suite::Bounds, "ecs-noon-crossing", 0.0, crossing),
        check(Suite::Bounds, "zzb-ordering", 0.0, zzb),
    ]
}

/// Runs `suite` with draws from `seed`.
pub fn run(suite: Suite, seed: u64, tol: &Tolerances) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for s in suite.expand() {
        checks.extend(match s {
            Suite::Moments => moments_suite(&mut rng, tol),
            Suite::Normalization => normalization_suite(&mut rng, tol),
            Suite::Qfim => qfim_suite(&mut rng, tol),
            Suite::Optimizer => optimizer_suite(&mut rng, tol),
            Suite::Bounds => bounds_suite(tol),
            Suite::All => unreachable!(),
        });
    }
    VerifyReport { seed, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::All.expand().into_iter().chain([Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.set("qfim", 1e-6).unwrap();
        assert_eq!(t.qfim, 1e-6);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("qfim", -1.0).is_err());
    }

    #[test]
    fn grid_has_expected_size() {
        assert_eq!(qfim_grid().unwrap().len(), 48);
    }

    #[test]
    fn quick_suites_pass() {
        let tol = Tolerances::default();
        for s in [Suite::Moments, Suite::Bounds, Suite::Optimizer] {
            let r = run(s, 3, &tol);
            assert!(r.all_passed(), "{}", r.render());
        }
    }

    #[test]
    fn tight_tolerance_fails() {
        let mut tol = Tolerances::default();
        tol.set("optimizer", 1e-14).unwrap();
        assert!(!run(Suite::Optimizer, 3, &tol).all_passed());
    }

    #[test]
    fn report_is_seed_deterministic() {
        let tol = Tolerances::default();
        let a = run(Suite::Moments, 7, &tol).render();
        let b = run(Suite::Moments, 7, &tol).render();
        assert_eq!(a, b);
    }
}
