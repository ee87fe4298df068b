//! Small dense linear algebra: partial-pivot LU factorization with forward/
//! back substitution, plus convenience solvers for the tiny systems that
//! appear throughout (3×3 jump-condition solves, 2×2 superposition systems,
//! moment systems for quadrature weights).

use thiserror::Error;

/// Errors from dense factorization.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// A pivot below the breakdown threshold was encountered.
    #[error("matrix is singular to working precision (pivot {pivot:e} at step {step})")]
    Singular { step: usize, pivot: f64 },
}

/// LU factorization with row partial pivoting of a square matrix stored
/// row-major in a flat vector.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Vec<f64>,
    piv: Vec<usize>,
    n: usize,
}

impl LuFactors {
    /// Factors `a` (row-major, `n`×`n`); `a` is consumed as workspace.
    pub fn new(mut a: Vec<f64>, n: usize) -> Result<Self, LinalgError> {
        assert_eq!(a.len(), n * n, "matrix shape mismatch");
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for r in k + 1..n {
                let v = a[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < f64::MIN_POSITIVE.sqrt() {
                return Err(LinalgError::Singular {
                    step: k,
                    pivot: a[p * n + k],
                });
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
            }
            let pivot = a[k * n + k];
            for r in k + 1..n {
                let f = a[r * n + k] / pivot;
                a[r * n + k] = f;
                for c in k + 1..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
        Ok(Self { lu: a, piv, n })
    }

    /// Solves `A x = b`, overwriting `b` with `x`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Apply the row permutation.
        let permuted: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        // Forward substitution with unit lower factor.
        for r in 1..n {
            for c in 0..r {
                b[r] -= self.lu[r * n + c] * b[c];
            }
        }
        // Back substitution with the upper factor.
        for r in (0..n).rev() {
            for c in r + 1..n {
                b[r] -= self.lu[r * n + c] * b[c];
            }
            b[r] /= self.lu[r * n + r];
        }
    }
}

/// Solves a 3×3 system given by rows `m` and right-hand side `b`.
pub fn solve3(m: &[[f64; 3]; 3], b: &[f64; 3]) -> Result<[f64; 3], LinalgError> {
    let flat: Vec<f64> = m.iter().flat_map(|row| row.iter().copied()).collect();
    let lu = LuFactors::new(flat, 3)?;
    let mut x = b.to_vec();
    lu.solve_in_place(&mut x);
    Ok([x[0], x[1], x[2]])
}

/// Determinant of a 3×3 matrix (cofactor expansion).
pub fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Solves a 2×2 system, returning the solution and the Frobenius condition
/// estimate ‖A‖_F·‖A⁻¹‖_F (used to flag near-singular superposition systems).
pub fn solve2_with_cond(a: [[f64; 2]; 2], b: [f64; 2]) -> Result<([f64; 2], f64), LinalgError> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < f64::MIN_POSITIVE.sqrt() {
        return Err(LinalgError::Singular { step: 0, pivot: det });
    }
    let x = [
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ];
    let norm: f64 = a.iter().flatten().map(|v| v * v).sum::<f64>();
    let cond = norm / det.abs();
    Ok((x, cond))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_random_system() {
        // Fixed pseudo-random 6×6 system; verify A x = b.
        let n = 6;
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a: Vec<f64> = (0..n * n).map(|_| next()).collect();
        let x_true: Vec<f64> = (0..n).map(|_| next()).collect();
        let mut b = vec![0.0; n];
        for r in 0..n {
            for c in 0..n {
                b[r] += a[r * n + c] * x_true[c];
            }
        }
        let lu = LuFactors::new(a, n).unwrap();
        lu.solve_in_place(&mut b);
        for (xi, ti) in b.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_reports_singular() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(LuFactors::new(a, 2).is_err());
    }

    #[test]
    fn solve3_and_det3_consistent() {
        let m = [[2.0, 1.0, 0.5], [-1.0, 3.0, 1.0], [0.0, 0.25, -2.0]];
        let b = [1.0, 2.0, 3.0];
        let x = solve3(&m, &b).unwrap();
        for r in 0..3 {
            let lhs: f64 = (0..3).map(|c| m[r][c] * x[c]).sum();
            assert!((lhs - b[r]).abs() < 1e-13);
        }
        // Cramer check of the determinant against a permutation expansion.
        let d = det3(&m);
        assert!((d - (2.0 * (3.0 * -2.0 - 1.0 * 0.25)
            - 1.0 * (-1.0 * -2.0 - 1.0 * 0.0)
            + 0.5 * (-1.0 * 0.25 - 3.0 * 0.0)))
            .abs()
            < 1e-14);
    }

    #[test]
    fn solve2_cond_is_scale_invariant_order_of_magnitude() {
        let (x, cond) = solve2_with_cond([[2.0, 0.0], [0.0, 1.0]], [2.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 3.0).abs() < 1e-15);
        assert!(cond < 10.0);
    }
}
