//! Small dense linear solves for per-node update systems.
//!
//! Sweeps solve one 2x2 or 4x4 system per interior node, so a fixed-size
//! Gaussian elimination with partial pivoting is all that is needed. There
//! is also a tridiagonal solve used to construct cubic-spline initial
//! guesses.

/// Relative pivot threshold below which a matrix is reported singular.
const PIVOT_RTOL: f64 = 1e-12;

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when the best available pivot falls below `1e-12` times
/// the largest absolute entry of the original matrix (or when the matrix is
/// identically zero), which keeps near-singular node systems from silently
/// producing garbage steps.
#[allow(clippy::needless_range_loop)] // rows are read and written under one index
pub fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = a.iter().flatten().fold(0.0f64, |acc, &e| acc.max(e.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let tol = PIVOT_RTOL * scale;

    for col in 0..N {
        // Partial pivoting: bring the largest remaining entry up.
        let mut pivot_row = col;
        for row in col + 1..N {
            if a[row][col].abs() > a[pivot_row][col].abs() {
                pivot_row = row;
            }
        }
        if a[pivot_row][col].abs() < tol {
            return None;
        }
        if pivot_row != col {
            a.swap(col, pivot_row);
            b.swap(col, pivot_row);
        }
        for row in col + 1..N {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..N {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }

    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut sum = b[row];
        for k in row + 1..N {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Solve a tridiagonal system by the standard forward-elimination /
/// back-substitution pass. `lower` and `upper` have one fewer entry than
/// `diag`; `lower[i]` sits on row `i + 1`, `upper[i]` on row `i`.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let n = diag.len();
    assert_eq!(lower.len() + 1, n);
    assert_eq!(upper.len() + 1, n);
    assert_eq!(rhs.len(), n);

    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() < f64::EPSILON {
        return None;
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot.abs() < f64::EPSILON {
            return None;
        }
        if i < n - 1 {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_a_2x2_system() {
        let x = solve_dense([[2.0, 1.0], [1.0, 3.0]], [5.0, 10.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 3.0, max_relative = 1e-14);
    }

    #[test]
    fn solves_a_4x4_system_with_pivoting() {
        // Leading zero forces a row swap.
        let a = [
            [0.0, 2.0, 1.0, -1.0],
            [3.0, 0.5, -2.0, 1.0],
            [1.0, -1.0, 4.0, 2.0],
            [2.0, 1.0, 1.0, 3.0],
        ];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut b = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                b[i] += a[i][j] * x_true[j];
            }
        }
        let x = solve_dense(a, b).unwrap();
        for i in 0..4 {
            assert_relative_eq!(x[i], x_true[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn reports_singular_matrices() {
        assert!(solve_dense([[1.0, 2.0], [2.0, 4.0]], [1.0, 2.0]).is_none());
        assert!(solve_dense([[0.0, 0.0], [0.0, 0.0]], [1.0, 1.0]).is_none());
        // Tiny pivot relative to the matrix scale.
        assert!(solve_dense([[1e20, 1e20], [1e20, 1e20 + 1.0]], [1.0, 2.0]).is_none());
        assert!(solve_dense([[f64::NAN, 0.0], [0.0, 1.0]], [1.0, 1.0]).is_none());
    }

    #[test]
    fn tridiagonal_matches_dense_solve() {
        let lower = [1.0, -0.5, 2.0];
        let diag = [4.0, 5.0, 6.0, 5.0];
        let upper = [-1.0, 1.5, 0.5];
        let rhs = [1.0, 2.0, -1.0, 3.0];
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();

        let mut a = [[0.0; 4]; 4];
        for i in 0..4 {
            a[i][i] = diag[i];
            if i + 1 < 4 {
                a[i][i + 1] = upper[i];
                a[i + 1][i] = lower[i];
            }
        }
        let dense = solve_dense(a, rhs).unwrap();
        for i in 0..4 {
            assert_relative_eq!(x[i], dense[i], max_relative = 1e-13);
        }
    }

    #[test]
    fn tridiagonal_single_unknown() {
        let x = solve_tridiagonal(&[], &[2.0], &[], &[8.0]).unwrap();
        assert_eq!(x, vec![4.0]);
    }
}
