use super::{CMatrix, CVector, C64};
use crate::error::{Error, Result};

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let p = m.adjoint() * m;
    let d = m.nrows();
    (0..d).all(|i| (0..d).all(|j| (p[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm() <= tol))
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

/// Kronecker product `a ⊗ b` (`a` acts on the more significant qubits).
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Extends orthonormal `columns` to a `dim × dim` unitary whose leading
/// columns are exactly `columns`.
///
/// Missing columns come from Gram-Schmidt over the canonical basis in index
/// order, skipping candidates whose residual falls below 1e-8.
pub fn complete_to_unitary(columns: &[CVector], dim: usize) -> Result<CMatrix> {
    if columns.len() > dim {
        return Err(Error::Validation(format!("{} columns exceed dimension {dim}", columns.len())));
    }
    let mut basis: Vec<CVector> = Vec::with_capacity(dim);
    for (i, c) in columns.iter().enumerate() {
        if c.len() != dim {
            return Err(Error::Validation(format!("column {i} has length {} not {dim}", c.len())));
        }
        if (c.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("column {i} is not normalized")));
        }
        if basis.iter().any(|b| b.dotc(c).norm() > 1e-10) {
            return Err(Error::Validation(format!("column {i} is not orthogonal to earlier columns")));
        }
        basis.push(c.clone());
    }
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = CVector::zeros(dim);
        v[e] = C64::new(1.0, 0.0);
        // two passes of modified Gram-Schmidt keep the result orthogonal to 1e-15
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v / C64::new(n, 0.0));
        }
    }
    if basis.len() != dim {
        return Err(Error::Validation("could not complete basis".into()));
    }
    Ok(CMatrix::from_columns(&basis))
}

/// Unitary whose first column is the normalized vector `v`.
pub fn unitary_with_first_column(v: &CVector) -> Result<CMatrix> {
    complete_to_unitary(std::slice::from_ref(v), v.len())
}
