use crate::error::{Error, Result};

/// Solves a tridiagonal system by Thomas elimination.
///
/// `lower[i]` multiplies `x[i - 1]` in row `i` (so `lower[0]` is ignored) and
/// `upper[i]` multiplies `x[i + 1]` (so the last entry is ignored). All four
/// slices must have the same length.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::InvalidArgument(format!(
            "tridiagonal bands have lengths {}, {}, {}, {}",
            lower.len(),
            n,
            upper.len(),
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SingularSystem { row: 0 });
    }
    c[0] = upper[0] / pivot;
    r[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: i });
        }
        c[i] = upper[i] / pivot;
        r[i] = (rhs[i] - lower[i] * r[i - 1]) / pivot;
    }
    let mut x = r;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
