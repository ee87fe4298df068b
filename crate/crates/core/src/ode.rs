//! Shared numerical kit used by every solver module:
//!
//! - explicit Runge–Kutta steppers driven by Butcher tableaus (the classic
//!   4th-order method and an 11-stage 8th-order method),
//! - finite-difference weight generation for arbitrary node sets,
//! - interpolatory quadrature weights and 4th-order cumulative integration,
//! - cubic Hermite and Lagrange interpolation,
//! - scalar Newton and bisection root finding.
//!
//! Everything here is deterministic and allocation-light; steppers reuse a
//! caller-provided scratch buffer so long marches do not churn the allocator.

use thiserror::Error;

/// Errors from the scalar root finders.
#[derive(Debug, Error)]
pub enum NumericsError {
    /// Newton iteration failed to reach the requested tolerance.
    #[error("Newton iteration did not converge within {max_iter} steps (last x = {last_x}, last |f| = {last_f})")]
    NewtonDivergence {
        max_iter: usize,
        last_x: f64,
        last_f: f64,
    },
    /// Bisection was called without a sign change on the bracket.
    #[error("bisection bracket [{a}, {b}] has no sign change (f(a) = {fa}, f(b) = {fb})")]
    BracketInvalid { a: f64, b: f64, fa: f64, fb: f64 },
}

/// An explicit Runge–Kutta method given by its Butcher tableau.
///
/// `a` is the strictly lower-triangular stage matrix stored row by row
/// (row `i` has `i` entries), `b` the quadrature weights, `c` the stage
/// abscissae. Row sums of `a` must equal `c` (checked in tests).
#[derive(Debug, Clone)]
pub struct RungeKutta {
    /// Stage coefficients, row `i` holding `a[i][0..i]`.
    pub a: Vec<Vec<f64>>,
    /// Output weights, one per stage.
    pub b: Vec<f64>,
    /// Stage abscissae, one per stage.
    pub c: Vec<f64>,
}

/// Reusable scratch space for [`RungeKutta::step`]; size adapts to the
/// state dimension on first use.
#[derive(Debug, Default)]
pub struct RkScratch {
    k: Vec<Vec<f64>>,
    ytmp: Vec<f64>,
}

impl RungeKutta {
    /// Number of stages.
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Advances `y` in place from `x` by one step of size `h`.
    ///
    /// `rhs(x, y, dy)` must write the derivative of `y` into `dy`.
    pub fn step<F>(&self, x: f64, y: &mut [f64], h: f64, scratch: &mut RkScratch, rhs: &mut F)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let s = self.stages();
        let n = y.len();
        if scratch.k.len() != s || scratch.ytmp.len() != n {
            scratch.k = vec![vec![0.0; n]; s];
            scratch.ytmp = vec![0.0; n];
        }
        for i in 0..s {
            scratch.ytmp.copy_from_slice(y);
            for (j, aij) in self.a[i].iter().enumerate() {
                if *aij != 0.0 {
                    for (t, kj) in scratch.ytmp.iter_mut().zip(&scratch.k[j]) {
                        *t += h * aij * kj;
                    }
                }
            }
            let (before, rest) = scratch.k.split_at_mut(i);
            let _ = before;
            rhs(x + self.c[i] * h, &scratch.ytmp, &mut rest[0]);
        }
        for (i, bi) in self.b.iter().enumerate() {
            if *bi != 0.0 {
                for (yv, kv) in y.iter_mut().zip(&scratch.k[i]) {
                    *yv += h * bi * kv;
                }
            }
        }
    }
}

/// The classic 4-stage 4th-order Runge–Kutta method.
pub fn classic_rk4() -> RungeKutta {
    RungeKutta {
        a: vec![vec![], vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
        b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        c: vec![0.0, 0.5, 0.5, 1.0],
    }
}

/// An 11-stage 8th-order explicit Runge–Kutta method (Cooper–Verner family).
///
/// The tableau entries involve √21 and are generated at run time; the
/// attained order is asserted by a convergence study in the tests.
pub fn cooper_verner8() -> RungeKutta {
    let s = 21.0_f64.sqrt();
    let a = vec![
        vec![],
        vec![0.5],
        vec![0.25, 0.25],
        vec![1.0 / 7.0, (-7.0 - 3.0 * s) / 98.0, (21.0 + 5.0 * s) / 49.0],
        vec![
            (11.0 + s) / 84.0,
            0.0,
            (18.0 + 4.0 * s) / 63.0,
            (21.0 - s) / 252.0,
        ],
        vec![
            (5.0 + s) / 48.0,
            0.0,
            (9.0 + s) / 36.0,
            (-231.0 + 14.0 * s) / 360.0,
            (63.0 - 7.0 * s) / 80.0,
        ],
        vec![
            (10.0 - s) / 42.0,
            0.0,
            (-432.0 + 92.0 * s) / 315.0,
            (633.0 - 145.0 * s) / 90.0,
            (-504.0 + 115.0 * s) / 70.0,
            (63.0 - 13.0 * s) / 35.0,
        ],
        vec![
            1.0 / 14.0,
            0.0,
            0.0,
            0.0,
            (14.0 - 3.0 * s) / 126.0,
            (13.0 - 3.0 * s) / 63.0,
            1.0 / 9.0,
        ],
        vec![
            1.0 / 32.0,
            0.0,
            0.0,
            0.0,
            (91.0 - 21.0 * s) / 576.0,
            11.0 / 72.0,
            (-385.0 - 75.0 * s) / 1152.0,
            (63.0 + 13.0 * s) / 128.0,
        ],
        vec![
            1.0 / 14.0,
            0.0,
            0.0,
            0.0,
            1.0 / 9.0,
            (-733.0 - 147.0 * s) / 2205.0,
            (515.0 + 111.0 * s) / 504.0,
            (-51.0 - 11.0 * s) / 56.0,
            (132.0 + 28.0 * s) / 245.0,
        ],
        vec![
            0.0,
            0.0,
            0.0,
            0.0,
            (-42.0 + 7.0 * s) / 18.0,
            (-18.0 + 28.0 * s) / 45.0,
            (-273.0 - 53.0 * s) / 72.0,
            (301.0 + 53.0 * s) / 72.0,
            (28.0 - 28.0 * s) / 45.0,
            (49.0 - 7.0 * s) / 18.0,
        ],
    ];
    let b = vec![
        1.0 / 20.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        49.0 / 180.0,
        16.0 / 45.0,
        49.0 / 180.0,
        1.0 / 20.0,
    ];
    let c = vec![
        0.0,
        0.5,
        0.5,
        (7.0 + s) / 14.0,
        (7.0 + s) / 14.0,
        0.5,
        (7.0 - s) / 14.0,
        (7.0 - s) / 14.0,
        0.5,
        (7.0 + s) / 14.0,
        1.0,
    ];
    RungeKutta { a, b, c }
}

/// Finite-difference weights for the `m`-th derivative at `x0` from the node
/// set `xs` (Fornberg's recursion). The returned vector has one weight per
/// node; the stencil is exact for polynomials of degree `xs.len() - 1`.
pub fn fd_weights(xs: &[f64], x0: f64, m: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > m, "need more nodes than the derivative order");
    // c[j][k] holds the weight of node j for the k-th derivative.
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Quadrature weights `w` with `∫_a^b f ≈ Σ w_j f(x_j)`, exact for
/// polynomials of degree `xs.len() - 1` (interpolatory weights obtained by
/// moment matching in shifted-scaled coordinates).
pub fn lagrange_integral_weights(xs: &[f64], a: f64, b: f64) -> Vec<f64> {
    let n = xs.len();
    let center = 0.5 * (a + b);
    let scale = xs
        .iter()
        .map(|x| (x - center).abs())
        .fold(0.5 * (b - a).abs(), f64::max)
        .max(f64::MIN_POSITIVE);
    // Moment system: Σ_j w_j t_j^k = ∫ t^k dt over the shifted interval.
    let t: Vec<f64> = xs.iter().map(|x| (x - center) / scale).collect();
    let (ta, tb) = ((a - center) / scale, (b - center) / scale);
    let mut mat = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for k in 0..n {
        for (j, tj) in t.iter().enumerate() {
            mat[k * n + j] = tj.powi(k as i32);
        }
        rhs[k] = (tb.powi(k as i32 + 1) - ta.powi(k as i32 + 1)) / (k as f64 + 1.0);
    }
    let lu = crate::linalg::LuFactors::new(mat, n).expect("moment matrix is nonsingular for distinct nodes");
    let mut w = rhs;
    lu.solve_in_place(&mut w);
    for wj in &mut w {
        *wj *= scale;
    }
    w
}

/// Cumulative integral `I_i = ∫_{x_0}^{x_i} f` of nodal values on a uniform
/// grid with spacing `h`, 4th-order accurate (cubic interpolatory weights on
/// a sliding 4-node stencil per interval).
pub fn cumulative_integral_uniform(h: f64, ys: &[f64]) -> Vec<f64> {
    let n = ys.len();
    assert!(n >= 4, "cumulative integration needs at least 4 nodes");
    let xs = [0.0, h, 2.0 * h, 3.0 * h];
    // Weight sets for an interval [x_i, x_{i+1}] covered by 4 nodes starting
    // at offset i-1 (interior), 0 (first interval) or n-4 (trailing ones).
    let w_first = lagrange_integral_weights(&xs, 0.0, h);
    let w_interior = lagrange_integral_weights(&xs, h, 2.0 * h);
    let w_last = lagrange_integral_weights(&xs, 2.0 * h, 3.0 * h);
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let (j0, w) = if i == 0 {
            (0, &w_first)
        } else if i + 2 < n {
            (i - 1, &w_interior)
        } else {
            (n - 4, &w_last)
        };
        let inc: f64 = (0..4).map(|k| w[k] * ys[j0 + k]).sum();
        out[i + 1] = out[i] + inc;
    }
    out
}

/// 5-point Gauss–Legendre quadrature of `f` over `[a, b]`.
pub fn gauss5<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in X.iter().zip(W.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Cubic Hermite interpolation of `(x0, y0, d0)`–`(x1, y1, d1)` at `x`.
pub fn hermite_eval(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Derivative of the cubic Hermite interpolant of
/// `(x0, y0, d0)`–`(x1, y1, d1)` at `x`.
pub fn hermite_eval_deriv(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    ((6.0 * t2 - 6.0 * t) * y0
        + (3.0 * t2 - 4.0 * t + 1.0) * h * d0
        + (-6.0 * t2 + 6.0 * t) * y1
        + (3.0 * t2 - 2.0 * t) * h * d1)
        / h
}

/// Lagrange interpolation of `(xs, ys)` at `x` (direct form; intended for
/// small stencils such as the 6-point axial interpolation).
pub fn lagrange_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let mut acc = 0.0;
    for j in 0..n {
        let mut lj = 1.0;
        for k in 0..n {
            if k != j {
                lj *= (x - xs[k]) / (xs[j] - xs[k]);
            }
        }
        acc += lj * ys[j];
    }
    acc
}

/// Newton iteration for `f(x) = 0` given `f` and `f'` bundled as
/// `f_df(x) -> (f, f')`. Converges when `|Δx| ≤ tol·max(1, |x|)`.
pub fn newton<F: FnMut(f64) -> (f64, f64)>(
    mut f_df: F,
    x0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64, NumericsError> {
    let mut x = x0;
    let mut last_f = f64::INFINITY;
    for _ in 0..max_iter {
        let (f, df) = f_df(x);
        last_f = f.abs();
        let dx = f / df;
        x -= dx;
        if dx.abs() <= tol * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    Err(NumericsError::NewtonDivergence {
        max_iter,
        last_x: x,
        last_f,
    })
}

/// Bisection for `f(x) = 0` on a sign-changing bracket `[a, b]`.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<f64, NumericsError> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::BracketInvalid { a, b, fa, fb });
    }
    while (b - a).abs() > tol * a.abs().max(b.abs()).max(1.0) {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Row sums of the stage matrix must reproduce the abscissae.
    #[test]
    fn tableau_row_sums_match_c() {
        for rk in [classic_rk4(), cooper_verner8()] {
            for (i, row) in rk.a.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                assert!(
                    (sum - rk.c[i]).abs() < 1e-14,
                    "stage {i}: row sum {sum} vs c {}",
                    rk.c[i]
                );
            }
            let bsum: f64 = rk.b.iter().sum();
            assert!((bsum - 1.0).abs() < 1e-14);
        }
    }

    /// Convergence study on y' = y·cos x, y(0)=1 (solution e^{sin x}).
    fn observed_errors(rk: &RungeKutta, steps: &[usize]) -> Vec<f64> {
        let mut errs = Vec::new();
        for &n in steps {
            let mut y = vec![1.0];
            let h = 2.0 / n as f64;
            let mut scratch = RkScratch::default();
            for i in 0..n {
                let x = i as f64 * h;
                rk.step(x, &mut y, h, &mut scratch, &mut |x, y, dy| {
                    dy[0] = y[0] * x.cos();
                });
            }
            errs.push((y[0] - (2.0_f64.sin()).exp()).abs());
        }
        errs
    }

    fn observed_order(rk: &RungeKutta, steps: &[usize]) -> Vec<f64> {
        observed_errors(rk, steps)
            .windows(2)
            .map(|w| (w[0] / w[1]).log2())
            .collect()
    }

    #[test]
    fn rk4_order_study() {
        let orders = observed_order(&classic_rk4(), &[20, 40, 80, 160]);
        println!("rk4 observed orders: {orders:?}");
        for p in orders {
            assert!((p - 4.0).abs() < 0.1, "observed order {p}");
        }
    }

    #[test]
    fn rk8_order_study() {
        // The asymptotic window is narrow: 2 steps is pre-asymptotic and
        // 16 steps already sits at the round-off floor, so the order is
        // read off the 4 → 8 refinement and the floor is checked directly.
        let orders = observed_order(&cooper_verner8(), &[4, 8, 16]);
        println!("rk8 observed orders: {orders:?}");
        assert!((orders[0] - 8.0).abs() < 0.35, "observed order {}", orders[0]);
        let errs = observed_errors(&cooper_verner8(), &[16]);
        assert!(errs[0] < 1e-12, "16-step error {}", errs[0]);
    }

    #[test]
    fn fd_weights_reproduce_central_stencils() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w1 = fd_weights(&xs, 0.0, 1);
        let expect1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (w, e) in w1.iter().zip(expect1.iter()) {
            assert!((w - e).abs() < 1e-13);
        }
        let w2 = fd_weights(&xs, 0.0, 2);
        let expect2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for (w, e) in w2.iter().zip(expect2.iter()) {
            assert!((w - e).abs() < 1e-13);
        }
    }

    #[test]
    fn fd_weights_one_sided_first_derivative() {
        // 5-point forward stencil for f' at the left end.
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let w = fd_weights(&xs, 0.0, 1);
        let expect = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25];
        for (wj, e) in w.iter().zip(expect.iter()) {
            assert!((wj - e).abs() < 1e-12);
        }
    }

    #[test]
    fn integral_weights_match_simpson() {
        let xs = [0.0, 0.5, 1.0];
        let w = lagrange_integral_weights(&xs, 0.0, 1.0);
        let expect = [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0];
        for (wj, e) in w.iter().zip(expect.iter()) {
            assert!((wj - e).abs() < 1e-14);
        }
    }

    #[test]
    fn cumulative_integral_is_fourth_order() {
        // ∫ sin on [0, 2]; error should shrink 16× per grid doubling.
        let exact = |x: f64| 1.0 - x.cos();
        let mut errs = Vec::new();
        for n in [33usize, 65, 129] {
            let h = 2.0 / (n - 1) as f64;
            let ys: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
            let cum = cumulative_integral_uniform(h, &ys);
            let err = cum
                .iter()
                .enumerate()
                .map(|(i, v)| (v - exact(i as f64 * h)).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        println!("cumulative integral errors: {errs:?}");
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order > 3.7, "observed order {order}");
    }

    #[test]
    fn hermite_exact_on_cubic() {
        let f = |x: f64| 1.0 + x + 3.0 * x * x - 2.0 * x * x * x;
        let df = |x: f64| 1.0 + 6.0 * x - 6.0 * x * x;
        for x in [0.1, 0.33, 0.77] {
            let v = hermite_eval(0.0, 1.0, f(0.0), f(1.0), df(0.0), df(1.0), x);
            assert!((v - f(x)).abs() < 1e-14);
            let d = hermite_eval_deriv(0.0, 1.0, f(0.0), f(1.0), df(0.0), df(1.0), x);
            assert!((d - df(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn lagrange_exact_on_quintic() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.2).collect();
        let f = |x: f64| x.powi(5) - 2.0 * x.powi(3) + x - 0.5;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        for x in [0.05, 0.41, 0.93] {
            assert!((lagrange_eval(&xs, &ys, x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn newton_and_bisection_agree() {
        let root_newton = newton(|x| (x.cos() - x, -x.sin() - 1.0), 1.0, 1e-15, 50).unwrap();
        let root_bisect = bisect(|x| x.cos() - x, 0.0, 1.0, 1e-14).unwrap();
        assert!((root_newton - root_bisect).abs() < 1e-12);
        assert!((root_newton.cos() - root_newton).abs() < 1e-14);
    }

    #[test]
    fn gauss5_exact_on_degree_nine() {
        let val = gauss5(0.0, 1.0, |x| x.powi(9));
        assert!((val - 0.1).abs() < 1e-15);
    }
}
