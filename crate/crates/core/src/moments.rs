//! Photon-number moments of a single-mode coherent state.
//!
//! `f(m, α) = ⟨α|(a†a)^m|α⟩` is the `m`-th raw moment of a Poisson distribution
//! with mean `μ = |α|²`, i.e. the Touchard polynomial
//!
//! ```text
//! f(m, α) = Σ_{k=0}^{m} S(m, k) μ^k
//! ```
//!
//! with `S(m, k)` the Stirling numbers of the second kind. The direct Poisson
//! sum [`moment_via_poisson_sum`] is kept as an independent check.

use crate::error::{Error, Result};

/// Order and mean photon number of a moment evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentQuery {
    m: u32,
    mu: f64,
}

impl MomentQuery {
    pub fn new(m: u32, mu: f64) -> Result<Self> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::InvalidInput(format!(
                "mean photon number must be finite and nonnegative, got {mu}"
            )));
        }
        Ok(Self { m, mu })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Row `S(m, 0..=m)` of Stirling numbers of the second kind.
///
/// Built with `S(n, k) = k·S(n−1, k) + S(n−1, k−1)` in checked `u128` arithmetic.
pub fn stirling2_row(m: u32) -> Result<Vec<u128>> {
    let m = m as usize;
    let mut row = vec![0u128; m + 1];
    row[0] = 1;
    for n in 1..=m {
        // walk k downwards so row[k - 1] still holds S(n - 1, k - 1)
        for k in (1..=n).rev() {
            let carried = (k as u128)
                .checked_mul(row[k])
                .and_then(|v| v.checked_add(row[k - 1]))
                .ok_or_else(|| Error::Range(format!("S({n}, {k}) overflows u128")))?;
            row[k] = carried;
        }
        row[0] = 0;
    }
    Ok(row)
}

/// Stirling number of the second kind `S(m, k)`, the number of ways to split an
/// `m`-set into `k` nonempty blocks.
pub fn stirling2(m: u32, k: u32) -> Result<u128> {
    if k > m {
        return Err(Error::InvalidInput(format!("S(m, k) needs k ≤ m, got m={m}, k={k}")));
    }
    Ok(stirling2_row(m)?[k as usize])
}

/// Closed-form `f(m, α)` from the Stirling expansion, evaluated by Horner's rule.
pub fn coherent_number_moment(q: MomentQuery) -> Result<f64> {
    let row = stirling2_row(q.m)?;
    let value = row.iter().rev().fold(0.0_f64, |acc, &s| acc * q.mu + s as f64);
    if !value.is_finite() {
        return Err(Error::Range(format!(
            "f({}, |α|²={}) is not representable as f64",
            q.m, q.mu
        )));
    }
    Ok(value)
}

/// Shorthand for [`coherent_number_moment`] with an unchecked-at-callsite query.
pub fn moment(m: u32, mu: f64) -> Result<f64> {
    coherent_number_moment(MomentQuery::new(m, mu)?)
}

/// `g = f(2m, α) / f(m, α)²`, the ratio that fixes the optimal branch weight.
pub fn moment_ratio(m: u32, mu: f64) -> Result<f64> {
    if mu <= 0.0 {
        return Err(Error::Degenerate(format!(
            "moment ratio needs |α|² > 0, got {mu}"
        )));
    }
    let fm = moment(m, mu)?;
    let f2m = moment(2 * m, mu)?;
    Ok(f2m / (fm * fm))
}

const MAX_POISSON_TERMS: usize = 10_000_000;

/// `f(m, α)` summed term by term over the Poisson distribution,
/// `Σ_n e^{−μ} μ^n / n! · n^m`.
///
/// The sum stops once the remaining tail is provably below `tail_tol`: past the
/// mode the term ratio `μ/(n+1)·((n+1)/n)^m` is decreasing, so the tail is
/// dominated by a geometric series.
pub fn moment_via_poisson_sum(q: MomentQuery, tail_tol: f64) -> Result<f64> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidInput(format!("tail_tol must be positive, got {tail_tol}")));
    }
    let (m, mu) = (q.m, q.mu);
    if mu == 0.0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    let ln_mu = mu.ln();
    let mf = m as f64;
    let log_term = |n: usize, ln_fact: f64| -> f64 {
        let nf = n as f64;
        -mu + nf * ln_mu - ln_fact + if n == 0 { 0.0 } else { mf * nf.ln() }
    };

    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut ln_fact = 0.0_f64;
    for n in 0..MAX_POISSON_TERMS {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let term = if n == 0 && m > 0 { 0.0 } else { log_term(n, ln_fact).exp() };
        // Neumaier compensated summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;

        if n >= 1 {
            let next = (n + 1) as f64;
            let ratio = mu / (next + 1.0) * ((next + 1.0) / next).powi(m as i32);
            if ratio < 1.0 {
                let next_term = log_term(n + 1, ln_fact + next.ln()).exp();
                if next_term / (1.0 - ratio) < tail_tol {
                    return Ok(sum + comp);
                }
            }
        }
    }
    Err(Error::Range(format!(
        "Poisson sum for f({m}, |α|²={mu}) did not reach tail {tail_tol:e} within {MAX_POISSON_TERMS} terms"
    )))
}
