//! Sum-over-states reference values from the complete spectrum.
//!
//! With `H_I^{mn} = ⟨Ψ_m|H_I|Ψ_n⟩` and `Δ_n = E_0 − E_n`:
//!
//! ```text
//! χ^(2)   = Σ_{n≠0} |H_I^{n0}|² / Δ_n²
//! χ^(3)   = Σ_{m,n≠0} 2 H_I^{0m} H_I^{mn} H_I^{n0} / (Δ_m Δ_n²) − Σ_{n≠0} 2 H_I^{00} |H_I^{n0}|² / Δ_n³
//! ∂³E/∂λ³ = Σ_{m,n≠0} 6 H_I^{0n} H_I^{nm} H_I^{m0} / (Δ_m Δ_n)  − Σ_{n≠0} 6 H_I^{00} |H_I^{n0}|² / Δ_n²
//! ```
//!
//! Sums run over states, so degenerate excited levels are harmless; only a
//! degenerate ground level is rejected.

use nalgebra::DMatrix;

use crate::basis::SectorBasis;
use crate::eigen::{SpectralData, DEGENERACY_RATIO};
use crate::error::{Error, Result};
use crate::hamiltonian::{ChainOperator, ChainSpec, LinearOperator};

/// `⟨Ψ_m|H_I|Ψ_n⟩` over all eigenpairs of one spectrum.
#[derive(Debug, Clone)]
pub struct DrivingMatrixElements {
    pub lambda: f64,
    pub elements: DMatrix<f64>,
}

impl DrivingMatrixElements {
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.elements[(m, n)]
    }
}

pub fn driving_elements(spectrum: &SpectralData, basis: &SectorBasis) -> Result<DrivingMatrixElements> {
    let dim = spectrum.dim();
    if dim != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: dim,
        });
    }
    let spec = ChainSpec::new(basis.sites(), spectrum.lambda)?;
    let driving = ChainOperator::driving(&spec, basis)?;
    let mut applied = DMatrix::zeros(dim, dim);
    let mut out = vec![0.0; dim];
    for n in 0..dim {
        let v = spectrum.vector(n);
        driving.apply(&v, &mut out);
        applied.column_mut(n).copy_from_slice(&out);
    }
    let elements = spectrum.eigenvectors.transpose() * applied;
    Ok(DrivingMatrixElements {
        lambda: spectrum.lambda,
        elements,
    })
}

fn ground_gaps(elems: &DrivingMatrixElements, energies: &[f64]) -> Result<Vec<f64>> {
    if energies.len() < 2 || elems.elements.nrows() != energies.len() {
        return Err(Error::DimensionMismatch {
            expected: elems.elements.nrows(),
            got: energies.len(),
        });
    }
    let e0 = energies[0];
    let gap = energies[1] - e0;
    if gap <= DEGENERACY_RATIO * e0.abs() {
        return Err(Error::Degenerate {
            lambda: elems.lambda,
            energy: e0,
            gap,
        });
    }
    Ok(energies.iter().map(|e| e0 - e).collect())
}

pub fn chi2_perturbative(elems: &DrivingMatrixElements, energies: &[f64]) -> Result<f64> {
    let delta = ground_gaps(elems, energies)?;
    Ok((1..delta.len())
        .map(|n| elems.get(n, 0).powi(2) / delta[n].powi(2))
        .sum())
}

/// Shared double sum `Σ_{m,n≠0} H^{0m} H^{mn} H^{n0} / (Δ_m Δ_n^p)`.
fn triple_sum(elems: &DrivingMatrixElements, delta: &[f64], power_n: i32) -> f64 {
    let dim = delta.len();
    let mut total = 0.0;
    for m in 1..dim {
        let left = elems.get(0, m) / delta[m];
        let mut inner = 0.0;
        for n in 1..dim {
            inner += elems.get(m, n) * elems.get(n, 0) / delta[n].powi(power_n);
        }
        total += left * inner;
    }
    total
}

pub fn chi3_perturbative(elems: &DrivingMatrixElements, energies: &[f64]) -> Result<f64> {
    let delta = ground_gaps(elems, energies)?;
    let h00 = elems.get(0, 0);
    let diagonal: f64 = (1..delta.len())
        .map(|n| h00 * elems.get(n, 0).powi(2) / delta[n].powi(3))
        .sum();
    Ok(2.0 * triple_sum(elems, &delta, 2) - 2.0 * diagonal)
}

pub fn d3e_perturbative(elems: &DrivingMatrixElements, energies: &[f64]) -> Result<f64> {
    let delta = ground_gaps(elems, energies)?;
    let h00 = elems.get(0, 0);
    let diagonal: f64 = (1..delta.len())
        .map(|n| h00 * elems.get(n, 0).powi(2) / delta[n].powi(2))
        .sum();
    Ok(6.0 * triple_sum(elems, &delta, 1) - 6.0 * diagonal)
}

/// Central third difference `[E(λ+2h) − 2E(λ+h) + 2E(λ−h) − E(λ−2h)] / (2h³)`.
pub fn d3e_finite_difference(
    mut energy: impl FnMut(f64) -> Result<f64>,
    lambda: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h = {h}")));
    }
    let e = |k: f64, energy: &mut dyn FnMut(f64) -> Result<f64>| energy(lambda + k * h);
    let p2 = e(2.0, &mut energy)?;
    let p1 = e(1.0, &mut energy)?;
    let m1 = e(-1.0, &mut energy)?;
    let m2 = e(-2.0, &mut energy)?;
    Ok((p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h.powi(3)))
}

/// Everything the oracle reports at one `(L, λ)`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct OracleValues {
    pub energy: f64,
    pub gap: f64,
    pub chi2: f64,
    pub chi3: f64,
    pub d3e: f64,
    /// `⟨Ψ0|H_I|Ψ0⟩ = dE0/dλ`.
    pub hellmann_feynman: f64,
}

pub fn oracle_values(spectrum: &SpectralData, basis: &SectorBasis) -> Result<OracleValues> {
    let elems = driving_elements(spectrum, basis)?;
    let e = &spectrum.energies;
    Ok(OracleValues {
        energy: e[0],
        gap: e[1] - e[0],
        chi2: chi2_perturbative(&elems, e)?,
        chi3: chi3_perturbative(&elems, e)?,
        d3e: d3e_perturbative(&elems, e)?,
        hellmann_feynman: elems.get(0, 0),
    })
}
