use crate::error::{Error, Result};

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `diag` and `rhs` have length `n`; `lower[i]` is the entry at row `i + 1`,
/// column `i`, and `upper[i]` the entry at row `i`, column `i + 1`, so both
/// have length `n - 1`. No pivoting: the system must be diagonally dominant
/// by rows or columns.
pub fn thomas_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = vec![0.0; diag.len()];
    let mut scratch = vec![0.0; diag.len()];
    thomas_solve_into(lower, diag, upper, rhs, &mut scratch, &mut x)?;
    Ok(x)
}

/// Allocation-free variant of [`thomas_solve`]. `scratch` and `out` must
/// have length `n`.
pub fn thomas_solve_into(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty tridiagonal system".into()));
    }
    if lower.len() + 1 != n || upper.len() + 1 != n || rhs.len() != n || scratch.len() != n || out.len() != n {
        return Err(Error::InvalidParameter(format!(
            "inconsistent tridiagonal sizes: diag {n}, lower {}, upper {}, rhs {}",
            lower.len(),
            upper.len(),
            rhs.len()
        )));
    }

    // forward elimination; scratch holds the modified super-diagonal
    if diag[0] == 0.0 {
        return Err(Error::SingularSystem { row: 0 });
    }
    let mut pivot = diag[0];
    out[0] = rhs[0] / pivot;
    for i in 1..n {
        scratch[i - 1] = upper[i - 1] / pivot;
        pivot = diag[i] - lower[i - 1] * scratch[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: i });
        }
        out[i] = (rhs[i] - lower[i - 1] * out[i - 1]) / pivot;
    }

    for i in (0..n - 1).rev() {
        out[i] -= scratch[i] * out[i + 1];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let r = [1.0, -2.0, 3.5, 0.25];
        let x = thomas_solve(&[0.0; 3], &[1.0; 4], &[0.0; 3], &r).unwrap();
        assert_eq!(x, r.to_vec());
    }

    #[test]
    fn single_unknown() {
        let x = thomas_solve(&[], &[4.0], &[], &[2.0]).unwrap();
        assert_eq!(x, vec![0.5]);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let err = thomas_solve(&[1.0], &[0.0, 1.0], &[1.0], &[1.0, 1.0]).unwrap_err();
        assert_eq!(err, Error::SingularSystem { row: 0 });
        // second pivot: 1 - 1*1/1 = 0
        let err = thomas_solve(&[1.0], &[1.0, 1.0], &[1.0], &[1.0, 1.0]).unwrap_err();
        assert_eq!(err, Error::SingularSystem { row: 1 });
    }

    #[test]
    fn size_mismatch() {
        assert!(thomas_solve(&[1.0], &[1.0, 1.0, 1.0], &[1.0, 1.0], &[0.0; 3]).is_err());
        assert!(thomas_solve(&[], &[], &[], &[]).is_err());
    }
}
