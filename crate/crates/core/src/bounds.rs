//! Closed-form precision bounds.
//!
//! All values are lower bounds on the total variance `Σ_j Var(θ̂_j)` for a single
//! repetition of the experiment (`ν = 1`).
//!
//! The ECS bound `Tr(F⁻¹) = d/(4f(2m)) · (1/b² + 1/(g − b²d))` is minimized over
//! `b² ∈ (0, Γ]`. The stationary point `b⋆² = g/(d + √d)` is used when it is
//! normalizable, otherwise the minimum sits on the boundary `b² = Γ`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments;
use crate::qfim;
use crate::states::{self, DomainGeometry};

/// `λ` in the quantum Ziv-Zakai bound for a wide uniform prior.
pub const ZIV_ZAKAI_LAMBDA: f64 = 0.7246;

/// Experiment repetitions folded into every reported bound.
pub const REPETITIONS: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    EcsLinear,
    EcsNonlinear,
    NoonLinear,
    NoonNonlinear,
    IndependentEcs,
    IndependentNoon,
    ZivZakaiEcs,
    ZivZakaiNoon,
    GeneralEcsAtB,
}

/// Where the optimum over `b` sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `b⋆ ≤ √Γ`, the stationary point is reachable.
    Interior,
    /// `b⋆ > √Γ`, the optimum is pinned to `b = √Γ`.
    Clamped,
    /// The bound involves no optimization over `b`.
    NotApplicable,
}

/// Inputs that produced a bound. Fields that do not apply are omitted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BoundParams {
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photon_number: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_tot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value: f64,
    pub regime: Regime,
    pub params: BoundParams,
}

impl BoundReport {
    fn new(kind: BoundKind, value: f64, regime: Regime, params: BoundParams) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Degenerate(format!("{kind:?} bound evaluated to {value}")));
        }
        Ok(Self { kind, value, regime, params })
    }
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidInput("number of phases d must be at least 1".into()));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Degenerate(format!("{name} must be positive and finite, got {x}")));
    }
    Ok(())
}

/// `d(√d + 1)²`, the parameter-count factor shared by every headline bound.
pub fn parameter_factor(d: usize) -> f64 {
    let d = d as f64;
    let s = d.sqrt() + 1.0;
    d * s * s
}

/// Minimum of `Tr(F⁻¹)` over `b ∈ (0, √Γ]`.
pub fn minimize_bound_over_b(d: usize, m: u32, alpha_sq: f64) -> Result<BoundReport> {
    check_d(d)?;
    check_positive("|α|²", alpha_sq)?;
    let geom = DomainGeometry::new(d, m, alpha_sq)?;
    let fm = moments::moment(m, alpha_sq)?;
    let f2m = moments::moment(2 * m, alpha_sq)?;
    let kind = if m == 1 { BoundKind::EcsLinear } else { BoundKind::EcsNonlinear };
    let mut params = BoundParams { d, alpha_sq: Some(alpha_sq), m: Some(m), ..Default::default() };

    if geom.interior {
        let ratio = fm / f2m;
        params.b = Some(geom.b_star);
        BoundReport::new(kind, parameter_factor(d) / 4.0 * ratio * ratio, Regime::Interior, params)
    } else {
        let df = d as f64;
        let gap = geom.g - geom.gamma_cap * df;
        // b⋆ > √Γ already forces g > Γ(d + √d) > Γd
        if !(gap > 0.0) {
            return Err(Error::Degenerate(format!(
                "clamped optimum undefined: g − Γd = {gap} ≤ 0"
            )));
        }
        params.b = Some(geom.sqrt_gamma());
        let value = df / (4.0 * f2m) * (1.0 / geom.gamma_cap + 1.0 / gap);
        BoundReport::new(kind, value, Regime::Clamped, params)
    }
}

/// `d(√d+1)²/(4(1+|α|²)²)` evaluated unconditionally.
///
/// This is the linear-protocol optimum only when `b⋆ ≤ √Γ`; use
/// [`qcrb_ecs_linear`] for the checked version.
pub fn ecs_linear_closed_form(d: usize, alpha_sq: f64) -> f64 {
    let s = 1.0 + alpha_sq;
    parameter_factor(d) / (4.0 * s * s)
}

/// `d(√d+1)²/4 · ((1+|α|²)/(|α|⁶+6|α|⁴+7|α|²+1))²` evaluated unconditionally.
pub fn ecs_nonlinear_closed_form(d: usize, alpha_sq: f64) -> f64 {
    let a = alpha_sq;
    let ratio = (1.0 + a) / (((a + 6.0) * a + 7.0) * a + 1.0);
    parameter_factor(d) / 4.0 * ratio * ratio
}

fn checked_interior(d: usize, m: u32, alpha_sq: f64) -> Result<DomainGeometry> {
    check_d(d)?;
    check_positive("|α|²", alpha_sq)?;
    let geom = DomainGeometry::new(d, m, alpha_sq)?;
    if !geom.interior {
        return Err(Error::Region(format!(
            "b⋆ = {:.6} exceeds √Γ = {:.6} at d={d}, |α|²={alpha_sq}, m={m}; \
             the closed form is not the optimum here, use the constrained minimizer",
            geom.b_star,
            geom.sqrt_gamma()
        )));
    }
    Ok(geom)
}

/// Linear-protocol ECS bound, valid where `b⋆ ≤ √Γ`.
pub fn qcrb_ecs_linear(d: usize, alpha_sq: f64) -> Result<BoundReport> {
    let geom = checked_interior(d, 1, alpha_sq)?;
    let params = BoundParams {
        d,
        alpha_sq: Some(alpha_sq),
        m: Some(1),
        b: Some(geom.b_star),
        ..Default::default()
    };
    BoundReport::new(BoundKind::EcsLinear, ecs_linear_closed_form(d, alpha_sq), Regime::Interior, params)
}

/// Nonlinear (`m = 2`) ECS bound, valid where `b⋆ ≤ √Γ`.
pub fn qcrb_ecs_nonlinear(d: usize, alpha_sq: f64) -> Result<BoundReport> {
    let geom = checked_interior(d, 2, alpha_sq)?;
    let params = BoundParams {
        d,
        alpha_sq: Some(alpha_sq),
        m: Some(2),
        b: Some(geom.b_star),
        ..Default::default()
    };
    BoundReport::new(
        BoundKind::EcsNonlinear,
        ecs_nonlinear_closed_form(d, alpha_sq),
        Regime::Interior,
        params,
    )
}

fn noon_bound(kind: BoundKind, d: usize, photons: f64, power: i32) -> Result<BoundReport> {
    check_d(d)?;
    if !(photons >= 1.0) || !photons.is_finite() {
        return Err(Error::InvalidInput(format!("photon number N must be ≥ 1, got {photons}")));
    }
    let params = BoundParams {
        d,
        photon_number: Some(photons),
        m: Some(power as u32 / 2),
        b: Some(states::noon_optimal_b(d)),
        ..Default::default()
    };
    BoundReport::new(kind, parameter_factor(d) / (4.0 * photons.powi(power)), Regime::NotApplicable, params)
}

/// `d(√d+1)²/(4N²)`.
pub fn qcrb_noon_linear(d: usize, photons: f64) -> Result<BoundReport> {
    noon_bound(BoundKind::NoonLinear, d, photons, 2)
}

/// `d(√d+1)²/(4N⁴)`.
pub fn qcrb_noon_nonlinear(d: usize, photons: f64) -> Result<BoundReport> {
    noon_bound(BoundKind::NoonNonlinear, d, photons, 4)
}

/// `𝒩² = 1/(2(1 + e^{−|α|²}))` of the two-mode ECS.
pub fn ecs_normalizer_sq(alpha_sq: f64) -> f64 {
    0.5 / (1.0 + (-alpha_sq).exp())
}

/// QCRB of one two-mode ECS sensing one phase,
/// `1/(4𝒩²|α|²[1 + |α|²(1 − 𝒩²)])`.
pub fn single_ecs_variance(alpha_sq: f64) -> f64 {
    let n2 = ecs_normalizer_sq(alpha_sq);
    1.0 / (4.0 * n2 * alpha_sq * (1.0 + alpha_sq * (1.0 - n2)))
}

/// Total photon number `2d𝒩²|α|²` of `d` independent two-mode ECS.
pub fn independent_ecs_photons(d: usize, alpha_sq: f64) -> f64 {
    2.0 * d as f64 * ecs_normalizer_sq(alpha_sq) * alpha_sq
}

/// Inverts [`independent_ecs_photons`] for `|α|²` by bisection.
pub fn alpha_sq_for_independent_photons(d: usize, n_tot: f64) -> Result<f64> {
    check_d(d)?;
    check_positive("N_tot", n_tot)?;
    // 2𝒩² ∈ [1/2, 1) so |α|² ∈ (n_tot/d, 2 n_tot/d]
    let mut lo = n_tot / d as f64;
    let mut hi = 2.0 * lo + f64::MIN_POSITIVE;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if independent_ecs_photons(d, mid) < n_tot {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let pick = |x: f64| (independent_ecs_photons(d, x) - n_tot).abs();
    Ok(if pick(lo) <= pick(hi) { lo } else { hi })
}

/// `d` independent two-mode ECS, each at amplitude `|α|²`.
pub fn qcrb_independent_ecs(d: usize, alpha_sq: f64) -> Result<BoundReport> {
    check_d(d)?;
    check_positive("|α|²", alpha_sq)?;
    let params = BoundParams {
        d,
        alpha_sq: Some(alpha_sq),
        n_tot: Some(independent_ecs_photons(d, alpha_sq)),
        m: Some(1),
        ..Default::default()
    };
    BoundReport::new(
        BoundKind::IndependentEcs,
        d as f64 * single_ecs_variance(alpha_sq),
        Regime::NotApplicable,
        params,
    )
}

/// Independent-ECS bound written in the total photon number,
/// `d³/(N_tot[2d + N_tot(𝒩⁻² − 1)])`.
pub fn independent_ecs_vs_ntot(d: usize, n_tot: f64) -> Result<BoundReport> {
    let alpha_sq = alpha_sq_for_independent_photons(d, n_tot)?;
    let df = d as f64;
    let inv_n2 = 1.0 / ecs_normalizer_sq(alpha_sq);
    let value = df * df * df / (n_tot * (2.0 * df + n_tot * (inv_n2 - 1.0)));
    let params = BoundParams {
        d,
        alpha_sq: Some(alpha_sq),
        n_tot: Some(n_tot),
        m: Some(1),
        ..Default::default()
    };
    BoundReport::new(BoundKind::IndependentEcs, value, Regime::NotApplicable, params)
}

/// `d³/N_tot²` for independent NOON-state estimation.
pub fn qcrb_independent_noon(d: usize, n_tot: f64) -> Result<BoundReport> {
    check_d(d)?;
    check_positive("N_tot", n_tot)?;
    let df = d as f64;
    let params = BoundParams { d, n_tot: Some(n_tot), m: Some(1), ..Default::default() };
    BoundReport::new(BoundKind::IndependentNoon, df * df * df / (n_tot * n_tot), Regime::NotApplicable, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZivZakaiConfig {
    pub lambda: f64,
}

impl Default for ZivZakaiConfig {
    fn default() -> Self {
        Self { lambda: ZIV_ZAKAI_LAMBDA }
    }
}

/// The two candidates of the Ziv-Zakai maximum for a squared photon argument `x`
/// (`N²` for NOON, `(|α|²+1)²` for ECS).
pub fn zzb_branches(d: usize, x: f64, cfg: ZivZakaiConfig) -> (f64, f64) {
    let df = d as f64;
    let s = df + df.sqrt();
    let common = df * s * s;
    let first = common / (80.0 * cfg.lambda * cfg.lambda * x);
    let second = (PI * PI / 16.0 - 0.5) * common / ((s - 1.0) * x);
    (first, second)
}

fn zzb(kind: BoundKind, d: usize, x: f64, cfg: ZivZakaiConfig, mut params: BoundParams) -> Result<BoundReport> {
    check_d(d)?;
    let (first, second) = zzb_branches(d, x, cfg);
    params.lambda = Some(cfg.lambda);
    BoundReport::new(kind, first.max(second), Regime::NotApplicable, params)
}

pub fn zzb_noon_with(d: usize, photons: f64, cfg: ZivZakaiConfig) -> Result<BoundReport> {
    if !(photons >= 1.0) || !photons.is_finite() {
        return Err(Error::InvalidInput(format!("photon number N must be ≥ 1, got {photons}")));
    }
    let params = BoundParams { d, photon_number: Some(photons), m: Some(1), ..Default::default() };
    zzb(BoundKind::ZivZakaiNoon, d, photons * photons, cfg, params)
}

pub fn zzb_ecs_with(d: usize, alpha_sq: f64, cfg: ZivZakaiConfig) -> Result<BoundReport> {
    check_positive("|α|²", alpha_sq)?;
    let params = BoundParams { d, alpha_sq: Some(alpha_sq), m: Some(1), ..Default::default() };
    let s = alpha_sq + 1.0;
    zzb(BoundKind::ZivZakaiEcs, d, s * s, cfg, params)
}

/// Quantum Ziv-Zakai bound of the generalized NOON state.
pub fn zzb_noon(d: usize, photons: f64) -> Result<BoundReport> {
    zzb_noon_with(d, photons, ZivZakaiConfig::default())
}

/// Quantum Ziv-Zakai bound of the generalized ECS, linear protocol.
pub fn zzb_ecs(d: usize, alpha_sq: f64) -> Result<BoundReport> {
    zzb_ecs_with(d, alpha_sq, ZivZakaiConfig::default())
}

/// One cell of the `(d, |α|)` region partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCell {
    pub d: usize,
    pub alpha: f64,
    pub m: u32,
    pub b_star: f64,
    pub sqrt_gamma: f64,
    pub interior: bool,
}

/// Whether `b⋆` lies inside the normalizable domain at amplitude `|α| = alpha`.
pub fn region_classify(d: usize, alpha: f64, m: u32) -> Result<RegionCell> {
    check_positive("|α|", alpha)?;
    let geom = DomainGeometry::new(d, m, alpha * alpha)?;
    Ok(RegionCell {
        d,
        alpha,
        m,
        b_star: geom.b_star,
        sqrt_gamma: geom.sqrt_gamma(),
        interior: geom.interior,
    })
}

/// Brute-force minimum of `Tr(F⁻¹)` on a uniform grid in `b²` over
/// `(0, min(Γ, g/d))`. The endpoint `Γ` is included when it is the cap;
/// the divergent endpoint `g/d` never is.
pub fn grid_scan_minimizer(d: usize, m: u32, alpha_sq: f64, grid_points: usize) -> Result<BoundReport> {
    check_d(d)?;
    check_positive("|α|²", alpha_sq)?;
    if grid_points < 1000 {
        return Err(Error::InvalidInput(format!("grid scan needs ≥ 1000 points, got {grid_points}")));
    }
    let geom = DomainGeometry::new(d, m, alpha_sq)?;
    let cap_at_singularity = geom.g / d as f64;
    let clamped = geom.gamma_cap < cap_at_singularity;
    let (cap, denom) = if clamped {
        (geom.gamma_cap, grid_points as f64)
    } else {
        (cap_at_singularity, (grid_points + 1) as f64)
    };

    let mut best = (f64::INFINITY, 0usize);
    for i in 1..=grid_points {
        let b_sq = cap * i as f64 / denom;
        let v = qfim::trace_inverse_at(d, m, alpha_sq, b_sq)?;
        if v < best.0 {
            best = (v, i);
        }
    }
    let (value, i) = best;
    let regime = if clamped && i == grid_points { Regime::Clamped } else { Regime::Interior };
    let params = BoundParams {
        d,
        alpha_sq: Some(alpha_sq),
        m: Some(m),
        b: Some((cap * i as f64 / denom).sqrt()),
        ..Default::default()
    };
    BoundReport::new(BoundKind::GeneralEcsAtB, value, regime, params)
}
