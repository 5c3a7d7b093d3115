use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hamiltonian::DENSE_DIM_LIMIT;

/// Complete spectrum of one sector, ascending, with eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub lambda: f64,
    pub energies: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn vector(&self, n: usize) -> Vec<f64> {
        self.eigenvectors.column(n).iter().copied().collect()
    }
}

pub fn full_spectrum(matrix: DMatrix<f64>, lambda: f64) -> Result<SpectralData> {
    let dim = matrix.nrows();
    if dim > DENSE_DIM_LIMIT {
        return Err(Error::DenseGuard {
            dim,
            limit: DENSE_DIM_LIMIT,
        });
    }
    if dim != matrix.ncols() {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralData {
        lambda,
        energies,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(matrix: DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = matrix.nrows();
    if dim > DENSE_DIM_LIMIT {
        return Err(Error::DenseGuard {
            dim,
            limit: DENSE_DIM_LIMIT,
        });
    }
    let mut values: Vec<f64> = matrix.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}
