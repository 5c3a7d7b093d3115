//! Ground-state search and dense spectra.

mod dense;
mod lanczos;

pub use dense::{eigenvalues, full_spectrum, SpectralData};
pub use lanczos::{lowest_eigenpairs, Eigenpairs, SolverOptions};

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::hamiltonian::{ChainOperator, ChainSpec, LinearOperator};
use crate::linalg::{axpy, dot, norm};

/// Relative gap below which a ground state counts as degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GroundStateSolution {
    pub lambda: f64,
    pub energy: f64,
    pub second_energy: f64,
    pub vector: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub warm_started: bool,
    /// Set when `E1 - E0 < 1e-10 |E0|`; fidelity analysis refuses such states.
    pub near_degenerate: bool,
}

impl GroundStateSolution {
    pub fn gap(&self) -> f64 {
        self.second_energy - self.energy
    }
}

/// Lowest eigenpair of `op` together with an estimate of the next level.
///
/// With `opts.block == 2` the next level is converged; with 1 it is the
/// first unconverged Ritz value, an upper bound only.
pub fn ground_state<O: LinearOperator + ?Sized>(
    op: &O,
    lambda: f64,
    opts: &SolverOptions,
    warm_start: Option<&[f64]>,
) -> Result<GroundStateSolution> {
    if op.dim() < 2 {
        return Err(Error::InvalidArgument(format!(
            "ground_state needs dim >= 2, got {}",
            op.dim()
        )));
    }
    let block = opts.block.clamp(1, 2);
    let pairs = lowest_eigenpairs(op, block, opts, warm_start)?;
    let energy = pairs.values[0];
    let second_energy = if block == 2 {
        pairs.values[1]
    } else {
        pairs.next_ritz.unwrap_or(f64::INFINITY)
    }
    .max(energy);
    let mut vectors = pairs.vectors;
    let vector = vectors.swap_remove(0);
    Ok(GroundStateSolution {
        lambda,
        energy,
        second_energy,
        vector,
        residual_norm: pairs.residuals[0],
        iterations: pairs.iterations,
        converged: true,
        seed: opts.seed,
        warm_started: warm_start.is_some(),
        near_degenerate: second_energy - energy < DEGENERACY_RATIO * energy.abs(),
    })
}

/// Ground state of `H(λ)` for a chain in the given sector.
pub fn solve_chain(
    spec: &ChainSpec,
    basis: &SectorBasis,
    opts: &SolverOptions,
    warm_start: Option<&[f64]>,
) -> Result<GroundStateSolution> {
    let op = ChainOperator::hamiltonian(spec, basis)?;
    ground_state(&op, spec.lambda, opts, warm_start)
}

/// `‖A v − (vᵀAv) v‖`, computed with one explicit product.
pub fn residual_norm<O: LinearOperator + ?Sized>(op: &O, v: &[f64]) -> f64 {
    let mut hv = vec![0.0; v.len()];
    op.apply(v, &mut hv);
    let e = dot(v, &hv);
    axpy(-e, v, &mut hv);
    norm(&hv)
}

/// Tolerance under which an overlap is treated as zero by [`gauge_fix`].
pub const GAUGE_EPS: f64 = 1e-12;

/// Fixes the overall sign of a real eigenvector.
///
/// With a reference the result has positive overlap with it. Without one,
/// the largest-magnitude amplitude (lowest index on ties) is made positive.
pub fn gauge_fix(v: &[f64], reference: Option<&[f64]>) -> Result<Vec<f64>> {
    let sign = match reference {
        Some(r) => {
            if r.len() != v.len() {
                return Err(Error::DimensionMismatch {
                    expected: r.len(),
                    got: v.len(),
                });
            }
            let overlap = dot(r, v);
            if overlap.abs() <= GAUGE_EPS {
                return Err(Error::GaugeUndefined { overlap });
            }
            overlap.signum()
        }
        None => {
            let mut best = 0.0f64;
            let mut sign = 1.0;
            for &a in v {
                if a.abs() > best {
                    best = a.abs();
                    sign = a.signum();
                }
            }
            sign
        }
    };
    Ok(v.iter().map(|a| sign * a).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::dense_hamiltonian;

    #[test]
    fn gauge_flip_and_identity() {
        let r = vec![1.0, 0.0];
        let v = vec![-0.99, 0.141_067_359_796_658_8];
        let fixed = gauge_fix(&v, Some(&r)).unwrap();
        assert_eq!(fixed, vec![0.99, -0.141_067_359_796_658_8]);
        assert_eq!(gauge_fix(&r, Some(&r)).unwrap(), r);
        assert!(matches!(
            gauge_fix(&[0.0, 1.0], Some(&r)),
            Err(Error::GaugeUndefined { .. })
        ));
    }

    #[test]
    fn gauge_without_reference() {
        assert_eq!(gauge_fix(&[0.1, -0.9, 0.3], None).unwrap(), vec![-0.1, 0.9, -0.3]);
        // tie broken by lowest index
        assert_eq!(gauge_fix(&[-0.5, 0.5], None).unwrap(), vec![0.5, -0.5]);
    }

    #[test]
    fn l4_ground_energy() {
        let basis = SectorBasis::new(4, 2).unwrap();
        let spec = ChainSpec::new(4, 0.0).unwrap();
        let gs = solve_chain(&spec, &basis, &SolverOptions::default(), None).unwrap();
        assert!((gs.energy + 2.0).abs() < 1e-12);
        let spectrum = full_spectrum(dense_hamiltonian(&spec, &basis).unwrap(), 0.0).unwrap();
        assert!((spectrum.energies[0] + 2.0).abs() < 1e-12);
        assert!((spectrum.energies[5] - 1.0).abs() < 1e-12);
        assert_eq!(spectrum.energies.iter().filter(|e| (*e + 2.0).abs() < 1e-9).count(), 1);
    }

    #[test]
    fn majumdar_ghosh_l8() {
        let basis = SectorBasis::zero_magnetization(8).unwrap();
        let spec = ChainSpec::new(8, 0.5).unwrap();
        let gs = solve_chain(&spec, &basis, &SolverOptions::default(), None).unwrap();
        assert!((gs.energy + 3.0).abs() < 1e-10);
        // two dimer coverings are degenerate at this point
        assert!(gs.near_degenerate);
        let dense = eigenvalues(dense_hamiltonian(&spec, &basis).unwrap()).unwrap();
        assert!((dense[0] + 3.0).abs() < 1e-10);
    }

    #[test]
    fn lanczos_matches_dense_up_to_l12() {
        for l in [4, 6, 8, 10, 12] {
            let basis = SectorBasis::zero_magnetization(l).unwrap();
            for lambda in [0.0, 0.1, 0.2411, 0.5] {
                let spec = ChainSpec::new(l, lambda).unwrap();
                let gs = solve_chain(&spec, &basis, &SolverOptions::default(), None).unwrap();
                let dense = eigenvalues(dense_hamiltonian(&spec, &basis).unwrap()).unwrap();
                assert!((gs.energy - dense[0]).abs() < 1e-10, "L={l} λ={lambda}");
                assert!((norm(&gs.vector) - 1.0).abs() < 1e-12);
                assert!(gs.energy <= gs.second_energy);
                let op = ChainOperator::hamiltonian(&spec, &basis).unwrap();
                assert!(residual_norm(&op, &gs.vector) <= 1e-12);
                if !gs.near_degenerate {
                    assert!((gs.second_energy - dense[1]).abs() < 1e-6, "L={l} λ={lambda}");
                }
            }
        }
    }

    #[test]
    fn spectrum_contracts_l10() {
        let basis = SectorBasis::zero_magnetization(10).unwrap();
        let spec = ChainSpec::new(10, 0.3).unwrap();
        let h = dense_hamiltonian(&spec, &basis).unwrap();
        let trace = h.trace();
        let sd = full_spectrum(h.clone(), 0.3).unwrap();
        let gram = sd.eigenvectors.transpose() * &sd.eigenvectors;
        let n = sd.dim();
        for r in 0..n {
            for c in 0..n {
                let target = if r == c { 1.0 } else { 0.0 };
                assert!((gram[(r, c)] - target).abs() < 1e-10);
            }
        }
        assert!((sd.energies.iter().sum::<f64>() - trace).abs() < 1e-9);
        let rebuilt = &sd.eigenvectors
            * nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sd.energies.clone()))
            * sd.eigenvectors.transpose();
        assert!((rebuilt - h).abs().max() < 1e-9);
        assert!(sd.energies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn excited_pair_orthogonal_l12() {
        let basis = SectorBasis::zero_magnetization(12).unwrap();
        let spec = ChainSpec::new(12, 0.2).unwrap();
        let op = ChainOperator::hamiltonian(&spec, &basis).unwrap();
        let opts = SolverOptions {
            excited_tolerance: 1e-10,
            ..Default::default()
        };
        let pairs = lowest_eigenpairs(&op, 2, &opts, None).unwrap();
        assert!(dot(&pairs.vectors[0], &pairs.vectors[1]).abs() <= 1e-8);
    }

    #[test]
    fn variational_bound() {
        let basis = SectorBasis::zero_magnetization(12).unwrap();
        let spec = ChainSpec::new(12, 0.3).unwrap();
        let op = ChainOperator::hamiltonian(&spec, &basis).unwrap();
        let gs = ground_state(&op, 0.3, &SolverOptions::default(), None).unwrap();
        for seed in 0..5 {
            let v = lanczos::random_unit(basis.dim(), 100 + seed);
            let mut hv = vec![0.0; v.len()];
            op.apply(&v, &mut hv);
            assert!(dot(&v, &hv) >= gs.energy);
        }
    }

    #[test]
    fn warm_start_converges_to_same_state() {
        let basis = SectorBasis::zero_magnetization(12).unwrap();
        let spec = ChainSpec::new(12, 0.2).unwrap();
        let opts = SolverOptions::default();
        let cold = solve_chain(&spec, &basis, &opts, None).unwrap();
        let warm = solve_chain(&spec.with_lambda(0.201), &basis, &opts, Some(&cold.vector)).unwrap();
        assert!(warm.warm_started);
        assert!(dot(&cold.vector, &warm.vector).abs() > 0.999);
        assert!(warm.iterations < cold.iterations);
    }

    #[test]
    fn translation_invariance_of_energy() {
        let l = 10;
        let basis = SectorBasis::zero_magnetization(l).unwrap();
        let spec = ChainSpec::new(l, 0.25).unwrap();
        let h = dense_hamiltonian(&spec, &basis).unwrap();
        // relabel rows/columns by rotating each mask one site
        let rot = |m: u64| ((m << 1) | (m >> (l - 1))) & ((1 << l) - 1);
        let perm: Vec<usize> = basis.states().iter().map(|&m| basis.rank(rot(m)).unwrap()).collect();
        let rotated = nalgebra::DMatrix::from_fn(h.nrows(), h.ncols(), |r, c| h[(perm[r], perm[c])]);
        assert!((&rotated - &h).abs().max() < 1e-15);
        let e = eigenvalues(rotated).unwrap();
        let e_ref = eigenvalues(h).unwrap();
        assert!((e[0] - e_ref[0]).abs() < 1e-12);
    }
}
