//! Deterministic parameter sweeps for the region partitions and the bound curves.
//!
//! Cells are evaluated in parallel and collected in row-major order, so the
//! output does not depend on the number of worker threads.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{self, RegionCell};
use crate::error::{Error, Result};
use crate::states::{mean_total_photons, EcsParams};

/// A uniformly sampled axis, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(name: &str, lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo || (steps == 1 && hi != lo) {
            return Err(Error::InvalidInput(format!(
                "axis {name}: need finite lo ≤ hi and steps ≥ 1 (steps = 1 only when lo = hi), got [{lo}, {hi}] × {steps}"
            )));
        }
        Ok(Self { name: name.to_string(), lo, hi, steps })
    }

    /// Sample `i` of `0..steps`; the last sample is exactly `hi`.
    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            return self.lo;
        }
        if i + 1 == self.steps {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

/// Axes plus row-major cell records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid<T> {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub cells: Vec<T>,
}

impl<T> SweepGrid<T> {
    pub fn expected_len(&self) -> usize {
        self.axis1.steps * self.axis2.as_ref().map_or(1, |a| a.steps)
    }
}

/// Default amplitude axis for region sweeps, `|α| ∈ [0.01, 4]`.
pub fn default_alpha_axis() -> Axis {
    Axis::new("alpha", 0.01, 4.0, 400).expect("static axis")
}

/// Region partition over every integer `d` in `d_lo..=d_hi` (outer) and the
/// amplitude axis (inner).
pub fn region_sweep(m: u32, d_lo: usize, d_hi: usize, alpha: &Axis) -> Result<SweepGrid<RegionCell>> {
    if d_lo == 0 || d_hi < d_lo {
        return Err(Error::InvalidInput(format!("need 1 ≤ d_lo ≤ d_hi, got {d_lo}..={d_hi}")));
    }
    if !(alpha.lo > 0.0) {
        return Err(Error::InvalidInput(format!("alpha axis must be positive, starts at {}", alpha.lo)));
    }
    let ds: Vec<usize> = (d_lo..=d_hi).collect();
    let alphas = alpha.values();
    let cells = ds
        .par_iter()
        .flat_map_iter(|&d| alphas.iter().map(move |&a| bounds::region_classify(d, a, m)))
        .collect::<Result<Vec<_>>>()?;
    let d_axis = Axis::new("d", d_lo as f64, d_hi as f64, ds.len())?;
    Ok(SweepGrid { axis1: d_axis, axis2: Some(alpha.clone()), cells })
}

/// One row of the bound-versus-photon-number curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub n_tot: f64,
    pub ecs_linear: f64,
    pub noon_linear: f64,
    pub ecs_nonlinear: f64,
    pub noon_nonlinear: f64,
    pub ecs_mean_photons_exact: f64,
}

/// Bounds at `|α|² = N = n_tot`. ECS columns use the stationary-point closed
/// forms; the last column is the exact mean photon number of the linear-protocol
/// ECS at its optimal (domain-clamped) `b`.
pub fn curve_row(d: usize, n_tot: f64) -> Result<CurveRow> {
    let ecs = EcsParams::optimal(d, n_tot, 1)?;
    Ok(CurveRow {
        n_tot,
        ecs_linear: bounds::ecs_linear_closed_form(d, n_tot),
        noon_linear: bounds::qcrb_noon_linear(d, n_tot)?.value,
        ecs_nonlinear: bounds::ecs_nonlinear_closed_form(d, n_tot),
        noon_nonlinear: bounds::qcrb_noon_nonlinear(d, n_tot)?.value,
        ecs_mean_photons_exact: mean_total_photons(&ecs),
    })
}

/// Default photon-number axis, `N_tot ∈ [1, 100]` in steps of 0.01.
pub fn default_ntot_axis() -> Axis {
    Axis::new("n_tot", 1.0, 100.0, 9901).expect("static axis")
}

pub fn curves(d: usize, n_tot: &Axis) -> Result<SweepGrid<CurveRow>> {
    let xs = n_tot.values();
    let cells = xs.par_iter().map(|&x| curve_row(d, x)).collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid { axis1: n_tot.clone(), axis2: None, cells })
}

/// Rows that can be written as CSV.
pub trait CsvRecord {
    fn header() -> &'static str;
    fn write_row(&self, w: &mut dyn Write) -> io::Result<()>;
}

/// Full round-trip precision, 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl CsvRecord for RegionCell {
    fn header() -> &'static str {
        "d,alpha,m,b_star,sqrt_gamma,interior"
    }

    fn write_row(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            self.d,
            fmt_f64(self.alpha),
            self.m,
            fmt_f64(self.b_star),
            fmt_f64(self.sqrt_gamma),
            self.interior as u8
        )
    }
}

impl CsvRecord for CurveRow {
    fn header() -> &'static str {
        "n_tot,ecs_linear,noon_linear,ecs_nonlinear,noon_nonlinear,ecs_mean_photons_exact"
    }

    fn write_row(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(self.n_tot),
            fmt_f64(self.ecs_linear),
            fmt_f64(self.noon_linear),
            fmt_f64(self.ecs_nonlinear),
            fmt_f64(self.noon_nonlinear),
            fmt_f64(self.ecs_mean_photons_exact)
        )
    }
}

pub fn write_csv<T: CsvRecord>(rows: &[T], w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "{}", T::header())?;
    for r in rows {
        r.write_row(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_endpoints() {
        let a = Axis::new("x", 1.0, 100.0, 9901).unwrap();
        assert_eq!(a.value(0), 1.0);
        assert_eq!(a.value(9900), 100.0);
        assert!((a.value(62) - 1.62).abs() < 1e-12);
        assert!(Axis::new("x", 1.0, 0.0, 5).is_err());
        assert!(Axis::new("x", 0.0, 1.0, 0).is_err());
        assert_eq!(Axis::new("x", 2.0, 2.0, 1).unwrap().values(), vec![2.0]);
    }

    #[test]
    fn region_cell_count_and_order() {
        let alpha = Axis::new("alpha", 0.5, 3.0, 7).unwrap();
        let g = region_sweep(1, 2, 4, &alpha).unwrap();
        assert_eq!(g.cells.len(), 21);
        assert_eq!(g.cells.len(), g.expected_len());
        assert_eq!(g.cells[0].d, 2);
        assert_eq!(g.cells[7].d, 3);
        assert_eq!(g.cells[8].alpha, alpha.value(1));
        assert!(region_sweep(1, 0, 3, &alpha).is_err());
    }

    #[test]
    fn region_large_alpha_interior() {
        let alpha = Axis::new("alpha", 2.5, 4.0, 31).unwrap();
        let g = region_sweep(1, 1, 10, &alpha).unwrap();
        assert!(g.cells.iter().all(|c| c.interior));
    }

    #[test]
    fn curve_values() {
        let r = curve_row(5, 4.0).unwrap();
        assert!((r.ecs_linear - bounds::ecs_linear_closed_form(5, 4.0)).abs() == 0.0);
        assert!(r.ecs_linear < r.noon_linear);
        assert!(r.ecs_mean_photons_exact > 0.0 && r.ecs_mean_photons_exact <= 4.0 * 1.0 + 1e-12);
    }

    #[test]
    fn csv_format() {
        let alpha = Axis::new("alpha", 1.0, 2.0, 2).unwrap();
        let g = region_sweep(2, 1, 1, &alpha).unwrap();
        let mut buf = Vec::new();
        write_csv(&g.cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split_terminator('\n').collect();
        assert_eq!(lines[0], "d,alpha,m,b_star,sqrt_gamma,interior");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,1.0000000000000000e0,2,"));
        assert!(!text.contains('\r'));
        let parsed: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(parsed, g.cells[0].b_star);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let axis = Axis::new("n_tot", 1.0, 10.0, 301).unwrap();
        let render = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut buf = Vec::new();
                write_csv(&curves(5, &axis).unwrap().cells, &mut buf).unwrap();
                buf
            })
        };
        assert_eq!(render(1), render(4));
    }
}
