//! Side-by-side comparison of the Lanczos routes with the exact-spectrum oracle.

use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::eigen::{full_spectrum, solve_chain, SolverOptions};
use crate::error::{Error, Result};
use crate::fidelity::{chi_from_both, ChainSolver, ExpansionOptions};
use crate::hamiltonian::{dense_hamiltonian, ChainSpec};
use crate::oracle::{d3e_finite_difference, oracle_values};

/// Largest chain the full-spectrum oracle accepts.
pub const ORACLE_MAX_SITES: usize = 12;

/// Default step of the third energy difference; the `h²` truncation is
/// far below tolerance while `tol / h³` noise stays negligible.
pub const DEFAULT_ENERGY_STEP: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub chi2: f64,
    pub chi3: f64,
    pub d3e: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            chi2: 5e-3,
            chi3: 1e-2,
            d3e: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteValue {
    pub route: String,
    pub value: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityComparison {
    pub quantity: String,
    pub oracle: f64,
    pub routes: Vec<RouteValue>,
    pub tolerance: f64,
    pub pass: bool,
}

impl QuantityComparison {
    fn new(quantity: &str, oracle: f64, routes: &[(&str, f64)], tolerance: f64) -> Self {
        let routes: Vec<RouteValue> = routes
            .iter()
            .map(|&(route, value)| RouteValue {
                route: route.to_string(),
                value,
                relative_deviation: relative(value, oracle),
            })
            .collect();
        let pass = routes.iter().all(|r| r.relative_deviation <= tolerance);
        Self {
            quantity: quantity.to_string(),
            oracle,
            routes,
            tolerance,
            pass,
        }
    }
}

fn relative(value: f64, reference: f64) -> f64 {
    let d = (value - reference).abs();
    if reference == 0.0 {
        d
    } else {
        d / reference.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    #[serde(rename = "L")]
    pub sites: usize,
    pub lambda: f64,
    pub step: f64,
    pub energy_step: f64,
    pub energy: f64,
    pub gap: f64,
    pub comparisons: Vec<QuantityComparison>,
    pub pass: bool,
}

impl OracleReport {
    pub fn get(&self, quantity: &str) -> Option<&QuantityComparison> {
        self.comparisons.iter().find(|c| c.quantity == quantity)
    }

    /// Plain-text table.
    pub fn render(&self) -> String {
        let mut out = format!(
            "L = {}, lambda = {}, h = {:e}, E0 = {:.12}, gap = {:.6e}\n",
            self.sites, self.lambda, self.step, self.energy, self.gap
        );
        out.push_str(&format!(
            "{:<6} {:>22} {:>12} {:>22} {:>12} {:>10} {}\n",
            "qty", "oracle", "route", "value", "rel.dev", "tol", "status"
        ));
        for c in &self.comparisons {
            for r in &c.routes {
                out.push_str(&format!(
                    "{:<6} {:>22.14e} {:>12} {:>22.14e} {:>12.3e} {:>10.1e} {}\n",
                    c.quantity,
                    c.oracle,
                    r.route,
                    r.value,
                    r.relative_deviation,
                    c.tolerance,
                    if r.relative_deviation <= c.tolerance { "ok" } else { "FAIL" }
                ));
            }
        }
        out.push_str(if self.pass { "all routes within tolerance\n" } else { "tolerance exceeded\n" });
        out
    }
}

/// Stencil, derivative and energy-difference values at `(L, λ)` against
/// the exact spectrum.
pub fn oracle_report(
    sites: usize,
    lambda: f64,
    expansion: &ExpansionOptions,
    energy_step: f64,
    solver: &SolverOptions,
    tolerances: &Tolerances,
) -> Result<OracleReport> {
    if sites > ORACLE_MAX_SITES {
        return Err(Error::InvalidArgument(format!(
            "oracle needs the full spectrum; L = {sites} exceeds the limit of {ORACLE_MAX_SITES}"
        )));
    }
    let basis = SectorBasis::zero_magnetization(sites)?;
    let spec = ChainSpec::new(sites, lambda)?;
    let spectrum = full_spectrum(dense_hamiltonian(&spec, &basis)?, lambda)?;
    let exact = oracle_values(&spectrum, &basis)?;

    let source = ChainSolver::new(&basis, *solver);
    let (fit, deriv) = chi_from_both(&source, lambda, expansion)?;
    let d3e = d3e_finite_difference(
        |x| Ok(solve_chain(&spec.with_lambda(x), &basis, solver, None)?.energy),
        lambda,
        energy_step,
    )?;

    let comparisons = vec![
        QuantityComparison::new(
            "chi2",
            exact.chi2,
            &[("stencil", fit.chi2), ("derivative", deriv.chi2)],
            tolerances.chi2,
        ),
        QuantityComparison::new(
            "chi3",
            exact.chi3,
            &[("stencil", fit.chi3), ("derivative", deriv.chi3)],
            tolerances.chi3,
        ),
        QuantityComparison::new("d3E", exact.d3e, &[("energy_fd", d3e)], tolerances.d3e),
    ];
    let pass = comparisons.iter().all(|c| c.pass);
    Ok(OracleReport {
        sites,
        lambda,
        step: expansion.step,
        energy_step,
        energy: exact.energy,
        gap: exact.gap,
        comparisons,
        pass,
    })
}
