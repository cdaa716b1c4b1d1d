use faer::{Mat, Side};

use crate::second_quantization::SparseOperator;
use crate::{Error, Result, C64};

/// All eigenpairs of a hermitian sparse operator, ascending, by dense
/// diagonalization.
///
/// With a nonempty orthonormal `deflation` set, the spectrum of the operator
/// compressed to the orthogonal complement of that set is returned instead.
pub(crate) fn full_eigen(
    op: &SparseOperator,
    deflation: &[Vec<C64>],
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let dim = op.nrows();
    if dim == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    // Shifting the deflated directions above every other eigenvalue and
    // dropping the top of the spectrum leaves exactly the compression.
    let shift = if deflation.is_empty() {
        0.0
    } else {
        let mut rows = vec![0.0; dim];
        for (i, _, v) in op.entries() {
            rows[i] += v.norm();
        }
        1.0 + 4.0 * rows.iter().cloned().fold(0.0, f64::max)
    };
    let real = op.is_real() && deflation.iter().all(|v| v.iter().all(|a| a.im == 0.0));
    let keep = dim - deflation.len();
    if real {
        let mut m = Mat::<f64>::zeros(dim, dim);
        for (i, j, v) in op.entries() {
            m[(i, j)] = v.re;
        }
        for u in deflation {
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] += shift * u[i].re * u[j].re;
                }
            }
        }
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::NoConvergence(format!("dense eigensolver: {e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = (0..keep).map(|k| s[k]).collect();
        let vectors = (0..keep)
            .map(|k| (0..dim).map(|i| C64::new(u[(i, k)], 0.0)).collect())
            .collect();
        Ok((values, vectors))
    } else {
        let mut m = Mat::<C64>::zeros(dim, dim);
        for (i, j, v) in op.entries() {
            m[(i, j)] = v;
        }
        for u in deflation {
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] += u[i] * u[j].conj() * shift;
                }
            }
        }
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::NoConvergence(format!("dense eigensolver: {e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = (0..keep).map(|k| s[k].re).collect();
        let vectors = (0..keep)
            .map(|k| (0..dim).map(|i| u[(i, k)]).collect())
            .collect();
        Ok((values, vectors))
    }
}

/// Eigenvalues (ascending) of a small hermitian matrix given row-major.
pub(crate) fn small_hermitian_eigenvalues(dim: usize, entries: &[C64]) -> Result<Vec<f64>> {
    if dim == 0 {
        return Ok(Vec::new());
    }
    let m = Mat::<C64>::from_fn(dim, dim, |i, j| entries[i * dim + j]);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("dense eigensolver: {e:?}")))?;
    let s = evd.S().column_vector();
    Ok((0..dim).map(|k| s[k].re).collect())
}

/// Eigenpairs of a real symmetric tridiagonal matrix.
pub(crate) fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    let k = alpha.len();
    let mut t = Mat::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i + 1, i)] = beta[i];
            t[(i, i + 1)] = beta[i];
        }
    }
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("tridiagonal eigensolver: {e:?}")))?;
    let s = evd.S().column_vector();
    Ok(((0..k).map(|i| s[i]).collect(), evd.U().to_owned()))
}
