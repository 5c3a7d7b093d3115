//! Grid sweeps over `(L, λ)` producing one flagged row per point.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::eigen::SolverOptions;
use crate::error::{Error, Result};
use crate::fidelity::{chi_from_both, chi_from_derivatives, chi_from_stencil, ChainSolver, ExpansionOptions, ExpansionPoint};
use crate::scaling::{find_peak, prominence_threshold, PeakRecord};

/// Upper end of the admissible λ range.
pub const LAMBDA_LIMIT: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl LambdaGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) || step <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grid [{min}, {max}] step {step} is not a finite ascending grid"
            )));
        }
        if min < 0.0 || max > LAMBDA_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "grid [{min}, {max}] leaves [0, {LAMBDA_LIMIT}]"
            )));
        }
        Ok(Self { min, max, step })
    }

    pub fn len(&self) -> usize {
        if self.max < self.min {
            0
        } else {
            ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid values, rounded to 12 decimals so that `0.07` prints as `0.07`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| ((self.min + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMethod {
    Stencil,
    Derivative,
    /// Reports stencil values; flags rows where the derivative route disagrees.
    Both,
}

impl fmt::Display for SweepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepMethod::Stencil => "stencil",
            SweepMethod::Derivative => "derivative",
            SweepMethod::Both => "both",
        })
    }
}

impl FromStr for SweepMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stencil" => Ok(SweepMethod::Stencil),
            "derivative" => Ok(SweepMethod::Derivative),
            "both" => Ok(SweepMethod::Both),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub expansion: ExpansionOptions,
    pub method: SweepMethod,
    pub solver: SolverOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            expansion: ExpansionOptions::default(),
            method: SweepMethod::Stencil,
            solver: SolverOptions::default(),
        }
    }
}

pub const FLAG_OK: &str = "ok";

/// One output row. Hard failures carry `NaN` in every quantity that
/// could not be computed and a non-`ok` flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub sites: usize,
    pub lambda: f64,
    pub energy: f64,
    pub gap: f64,
    #[serde(rename = "F_plus_h")]
    pub f_plus_h: f64,
    pub chi2: f64,
    pub chi3: f64,
    pub chi3_abs: f64,
    pub fit_residual: f64,
    pub flag: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.flag == FLAG_OK
    }

    /// Whether the expansion coefficients were computed (possibly with warnings).
    pub fn has_values(&self) -> bool {
        self.chi2.is_finite() && self.chi3.is_finite()
    }

    pub fn quantity(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Energy => self.energy,
            Quantity::Gap => self.gap,
            Quantity::FPlusH => self.f_plus_h,
            Quantity::Chi2 => self.chi2,
            Quantity::Chi3 => self.chi3,
            Quantity::Chi3Abs => self.chi3_abs,
            Quantity::FitResidual => self.fit_residual,
        }
    }

    fn from_point(sites: usize, point: &ExpansionPoint, step: f64) -> Self {
        let flag = if point.warnings.is_empty() {
            FLAG_OK.to_string()
        } else {
            point
                .warnings
                .iter()
                .map(|w| w.as_str())
                .collect::<Vec<_>>()
                .join("|")
        };
        Self {
            sites,
            lambda: point.lambda,
            energy: point.energy,
            gap: point.gap_at_lambda,
            f_plus_h: point.f_plus(step).unwrap_or(f64::NAN),
            chi2: point.chi2,
            chi3: point.chi3,
            chi3_abs: point.chi3.abs(),
            fit_residual: point.fit_residual,
            flag,
        }
    }

    fn from_error(sites: usize, lambda: f64, err: &Error) -> Self {
        let (energy, gap, flag) = match *err {
            Error::Degenerate { energy, gap, .. } => (energy, gap, "degenerate"),
            Error::NotConverged { energy, .. } => (energy, f64::NAN, "not_converged"),
            Error::GaugeUndefined { .. } => (f64::NAN, f64::NAN, "gauge"),
            _ => (f64::NAN, f64::NAN, "error"),
        };
        Self {
            sites,
            lambda,
            energy,
            gap,
            f_plus_h: f64::NAN,
            chi2: f64::NAN,
            chi3: f64::NAN,
            chi3_abs: f64::NAN,
            fit_residual: f64::NAN,
            flag: flag.to_string(),
        }
    }
}

/// Numeric sweep columns addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "energy")]
    Energy,
    #[serde(rename = "gap")]
    Gap,
    #[serde(rename = "F_plus_h")]
    FPlusH,
    #[serde(rename = "chi2")]
    Chi2,
    #[serde(rename = "chi3")]
    Chi3,
    #[serde(rename = "chi3_abs")]
    Chi3Abs,
    #[serde(rename = "fit_residual")]
    FitResidual,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::Energy,
        Quantity::Gap,
        Quantity::FPlusH,
        Quantity::Chi2,
        Quantity::Chi3,
        Quantity::Chi3Abs,
        Quantity::FitResidual,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Energy => "energy",
            Quantity::Gap => "gap",
            Quantity::FPlusH => "F_plus_h",
            Quantity::Chi2 => "chi2",
            Quantity::Chi3 => "chi3",
            Quantity::Chi3Abs => "chi3_abs",
            Quantity::FitResidual => "fit_residual",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown quantity {s:?}")))
    }
}

/// Per-point bookkeeping that is not part of the numeric table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTiming {
    #[serde(rename = "L")]
    pub sites: usize,
    pub lambda: f64,
    pub seconds: f64,
    pub matvecs: usize,
    pub flag: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub timings: Vec<PointTiming>,
}

/// Checks sizes and grid against the options before any work is done.
pub fn validate(sizes: &[usize], grid: &LambdaGrid, opts: &SweepOptions) -> Result<()> {
    for &l in sizes {
        SectorBasis::check_sites(l)?;
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate system size".into()));
    }
    let h = opts.expansion.step;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h = {h}")));
    }
    if grid.len() > 1 && grid.step < 4.0 * h {
        return Err(Error::InvalidArgument(format!(
            "grid step {} is below 4h = {}",
            grid.step,
            4.0 * h
        )));
    }
    Ok(())
}

/// One `(L, λ)` point; failures become flagged rows.
pub fn sweep_point(basis: &SectorBasis, lambda: f64, opts: &SweepOptions) -> (SweepRow, usize) {
    let solver = ChainSolver::new(basis, opts.solver);
    let sites = basis.sites();
    let step = opts.expansion.step;
    let result = match opts.method {
        SweepMethod::Stencil => chi_from_stencil(&solver, lambda, &opts.expansion),
        SweepMethod::Derivative => chi_from_derivatives(&solver, lambda, &opts.expansion),
        SweepMethod::Both => chi_from_both(&solver, lambda, &opts.expansion).map(|(s, _)| s),
    };
    match result {
        Ok(point) => (SweepRow::from_point(sites, &point, step), point.iterations),
        Err(e) => (SweepRow::from_error(sites, lambda, &e), 0),
    }
}

/// Runs every `(L, λ)` point; rows come back sorted by `L`, then `λ`.
pub fn sweep(sizes: &[usize], grid: &LambdaGrid, opts: &SweepOptions) -> Result<SweepTable> {
    validate(sizes, grid, opts)?;
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    let lambdas = grid.points();
    let mut table = SweepTable::default();
    for &l in &sizes {
        let basis = SectorBasis::zero_magnetization(l)?;
        let results: Vec<(SweepRow, PointTiming)> = lambdas
            .par_iter()
            .map(|&lambda| {
                let start = Instant::now();
                let (row, matvecs) = sweep_point(&basis, lambda, opts);
                let timing = PointTiming {
                    sites: l,
                    lambda,
                    seconds: start.elapsed().as_secs_f64(),
                    matvecs,
                    flag: row.flag.clone(),
                };
                (row, timing)
            })
            .collect();
        for (row, timing) in results {
            table.rows.push(row);
            table.timings.push(timing);
        }
    }
    Ok(table)
}

/// Sorted `(λ, value)` pairs for one size, skipping rows without values.
pub fn column(rows: &[SweepRow], sites: usize, quantity: Quantity) -> Vec<(f64, f64)> {
    let mut col: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sites == sites)
        .map(|r| (r.lambda, r.quantity(quantity)))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    col.sort_by(|a, b| a.0.total_cmp(&b.0));
    col
}

/// Distinct sizes present in a table, ascending.
pub fn sizes(rows: &[SweepRow]) -> Vec<usize> {
    let mut s: Vec<usize> = rows.iter().map(|r| r.sites).collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// The dominant peak of `quantity` for every size in the table, with a
/// prominence threshold of `fraction` times each column's range.
pub fn peaks(rows: &[SweepRow], quantity: Quantity, fraction: f64) -> Result<Vec<PeakRecord>> {
    let mut out = Vec::new();
    for l in sizes(rows) {
        let col = column(rows, l, quantity);
        let threshold = prominence_threshold(&col, fraction);
        if let Some(p) = find_peak(l, &col, threshold)? {
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_arithmetic() {
        let g = LambdaGrid::new(0.0, 0.5, 0.01).unwrap();
        assert_eq!(g.len(), 51);
        let pts = g.points();
        assert_eq!(pts[7], 0.07);
        assert_eq!(*pts.last().unwrap(), 0.5);
        assert_eq!(LambdaGrid::new(0.0, 0.5, 0.005).unwrap().len(), 101);
        assert_eq!(LambdaGrid::new(0.2, 0.2, 0.01).unwrap().len(), 1);
        assert!(LambdaGrid::new(0.3, 0.2, 0.01).unwrap().is_empty());
        assert!(LambdaGrid::new(0.0, 0.7, 0.01).is_err());
        assert!(LambdaGrid::new(-0.1, 0.2, 0.01).is_err());
        assert!(LambdaGrid::new(0.0, 0.2, 0.0).is_err());
    }

    #[test]
    fn validation() {
        let g = LambdaGrid::new(0.0, 0.1, 0.01).unwrap();
        let opts = SweepOptions::default();
        assert!(validate(&[8], &g, &opts).is_ok());
        assert!(validate(&[13], &g, &opts).is_err());
        assert!(validate(&[8, 8], &g, &opts).is_err());
        let coarse = SweepOptions {
            expansion: ExpansionOptions {
                step: 5e-3,
                ..ExpansionOptions::default()
            },
            ..opts
        };
        assert!(validate(&[8], &g, &coarse).is_err());
    }

    #[test]
    fn empty_grid_gives_empty_table() {
        let g = LambdaGrid::new(0.3, 0.2, 0.01).unwrap();
        let t = sweep(&[8], &g, &SweepOptions::default()).unwrap();
        assert!(t.rows.is_empty());
    }

    #[test]
    fn small_sweep_rows() {
        let g = LambdaGrid::new(0.4, 0.5, 0.05).unwrap();
        let t = sweep(&[10, 8], &g, &SweepOptions::default()).unwrap();
        let keys: Vec<(usize, f64)> = t.rows.iter().map(|r| (r.sites, r.lambda)).collect();
        assert_eq!(keys, vec![(8, 0.4), (8, 0.45), (8, 0.5), (10, 0.4), (10, 0.45), (10, 0.5)]);
        for r in &t.rows {
            if r.lambda == 0.5 {
                assert_eq!(r.flag, "degenerate");
                assert!(r.chi2.is_nan());
                let exact = -3.0 * r.sites as f64 / 8.0;
                assert!((r.energy - exact).abs() < 1e-9 * exact.abs());
            } else {
                assert!(r.has_values(), "{r:?}");
                assert!(r.chi2 >= -1e-10);
                assert!(r.f_plus_h > 0.99 && r.f_plus_h <= 1.0);
                assert_eq!(r.chi3_abs, r.chi3.abs());
            }
        }
    }

    #[test]
    fn both_methods_agree_without_mismatch() {
        let basis = SectorBasis::zero_magnetization(10).unwrap();
        let opts = SweepOptions {
            method: SweepMethod::Both,
            ..SweepOptions::default()
        };
        let (row, matvecs) = sweep_point(&basis, 0.2, &opts);
        assert!(!row.flag.contains("method_mismatch"), "{row:?}");
        assert!(matvecs > 0);
        let stencil = sweep_point(&basis, 0.2, &SweepOptions::default()).0;
        assert_eq!(row.chi2, stencil.chi2);
    }

    #[test]
    fn quantity_names_round_trip() {
        for q in Quantity::ALL {
            assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
        }
        assert!("chi4".parse::<Quantity>().is_err());
    }
}
