use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Dense real symmetric matrix.
///
/// Symmetry is checked exactly on construction: `m[(i, j)] == m[(j, i)]`
/// bit for bit, so anything built through [`SymmetricMatrix::from_upper`]
/// or by mirroring is accepted while a matrix with round-off asymmetry is not.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::invalid(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)].to_bits() != m[(j, i)].to_bits() {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    /// Builds the matrix from a closure evaluated on the upper triangle
    /// (`i <= j`) and mirrored.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("rows must form a square matrix"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Eigen-decomposition with eigenvalues in ascending order; column `i` of
/// `vectors` belongs to `values[i]`.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigh {
    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }
}

const EIGH_MAX_SWEEPS: usize = 10_000;

/// Eigenvalues and orthonormal eigenvectors of a real symmetric matrix
/// (Householder tridiagonalisation followed by implicitly shifted QR).
pub fn eigh(m: &SymmetricMatrix) -> Result<Eigh> {
    if m.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let n = m.dim();
    let dec = SymmetricEigen::try_new(m.0.clone(), f64::EPSILON, EIGH_MAX_SWEEPS).ok_or_else(
        || Error::NumericalFailure(format!("symmetric eigensolver did not converge (n = {n})")),
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let values = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| dec.eigenvectors[(r, order[c])]);
    Ok(Eigh { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_sorted() {
        let m = SymmetricMatrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        let e = eigh(&m).unwrap();
        assert_eq!(e.values.len(), 3);
        for (got, want) in e.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn pauli_x() {
        let m = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = eigh(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let v = e.vector(1);
        assert!((v[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_non_finite() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0 + 1e-15, 0.0]);
        assert!(matches!(SymmetricMatrix::new(asym), Err(Error::InvalidInput(_))));
        let nan = SymmetricMatrix::from_rows(&[vec![f64::NAN, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(eigh(&nan), Err(Error::InvalidInput(_))));
        assert!(SymmetricMatrix::from_rows(&[]).is_err());
    }
}
