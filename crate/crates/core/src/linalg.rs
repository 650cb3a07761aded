//! Small dense complex solves.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solves `a x = b` in place by LU with partial pivoting. `a` is row-major
/// `n x n` and is overwritten by its factors; `b` receives `x`.
pub(crate) fn lu_solve_in_place(
    a: &mut [Complex64],
    b: &mut [Complex64],
    context: &'static str,
) -> Result<()> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix/vector size mismatch");
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = 1e-14 * scale;
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[r * n + col].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pivot > tiny) {
            return Err(Error::SingularSystem {
                context,
                column: col,
                pivot,
            });
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let diag = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / diag;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            a[r * n + col] = factor;
            for k in col + 1..n {
                let upper = a[col * n + k];
                a[r * n + k] -= factor * upper;
            }
            let rhs = b[col];
            b[r] -= factor * rhs;
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * b[k];
        }
        b[row] = acc / a[row * n + row];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_a_pivoting_system() {
        // first pivot is zero without row exchange
        let a = vec![c(0.0, 0.0), c(2.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)];
        let x = [c(0.5, 2.0), c(-1.0, 0.25)];
        let mut b: Vec<_> = (0..2)
            .map(|i| a[i * 2] * x[0] + a[i * 2 + 1] * x[1])
            .collect();
        let mut lu = a.clone();
        lu_solve_in_place(&mut lu, &mut b, "test").unwrap();
        for (got, want) in b.iter().zip(&x) {
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let mut a = vec![c(1.0, 1.0), c(2.0, 2.0), c(0.5, 0.5), c(1.0, 1.0)];
        let mut b = vec![c(1.0, 0.0), c(0.0, 1.0)];
        assert!(matches!(
            lu_solve_in_place(&mut a, &mut b, "test"),
            Err(Error::SingularSystem { column: 1, .. })
        ));
    }
}
