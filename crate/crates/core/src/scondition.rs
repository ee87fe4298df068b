//! Solvability functional of the nonlocal boundary-value problem, mode by
//! mode:
//!
//! - each cross-section mode with Laplacian eigenvalue `−q` reduces the
//!   nonlocal pressure equation to a linear third-order Cauchy problem for
//!   the kernel-weighted primitive `𝒲` (the substitution `𝒫 = ∫ b·p`
//!   absorbs the integral term),
//! - [`cauchy_w`] integrates that problem from exact data at the shock
//!   trace; the functional `ϑ(q) = 𝒲'(L)` decides mode solvability,
//! - [`scan_scondition`] sweeps `q = 0, …, Q_max`, flags which integers are
//!   realizable as `m₁² + m₂²`, and bisects sign changes of `ϑ`,
//! - [`crosscheck_transformed`] re-derives `ϑ` along an independent route
//!   (divide by the kernel weight `e₄`, differentiate once, integrate the
//!   resulting local equation for `𝒲'`), valid only when `e₄` has a fixed
//!   sign on the span.
//!
//! The solvability requirement is that `ϑ(q) ≠ 0` for every realizable
//! eigenvalue; the scan reports the margin and any real-`q` roots.

use crate::background::CoefficientTable;
use crate::ode::{cooper_verner8, fd_weights, RkScratch};
use crate::tol;
use thiserror::Error;

/// Errors from the solvability analysis.
#[derive(Debug, Error)]
pub enum SconditionError {
    /// The kernel weight `e₄` vanishes somewhere on the span, so the
    /// divide-and-differentiate route is not defined.
    #[error("transformation invalid: e₄ vanishes on the subsonic span (d₃ crosses zero near t = {t0:.6})")]
    TransformationInvalid { t0: f64 },
    /// Malformed resolution parameters.
    #[error("invalid resolution: {reason}")]
    InvalidResolution { reason: String },
}

/// Output-grid and substep counts for the mode integrations.
#[derive(Debug, Clone, Copy)]
pub struct Resolution {
    /// Uniform output stations on `[r_b, L]` (≥ 6).
    pub n_out: usize,
    /// Integrator substeps per output interval (≥ 1).
    pub substeps: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            n_out: 200,
            substeps: 20,
        }
    }
}

/// Marches the linear equation `c₃(y)u‴ + c₂(y)u″ + c₁(y)u′ + c₀(y)u =
/// rhs(y)` from `x0` to `x1` with an 8th-order Runge–Kutta method,
/// returning `(u, u', u'')` on the uniform output grid (`ic` at `x0`).
pub fn integrate_linear3(
    coeffs: &impl Fn(f64) -> [f64; 4],
    rhs: &impl Fn(f64) -> f64,
    ic: [f64; 3],
    x0: f64,
    x1: f64,
    n_out: usize,
    substeps: usize,
) -> Vec<[f64; 3]> {
    assert!(n_out >= 2 && substeps >= 1, "degenerate march resolution");
    let rk = cooper_verner8();
    let mut scratch = RkScratch::default();
    let h = (x1 - x0) / (n_out - 1) as f64;
    let hs = h / substeps as f64;
    let mut y = [ic[0], ic[1], ic[2]];
    let mut out = Vec::with_capacity(n_out);
    out.push(ic);
    let mut f = |x: f64, y: &[f64], dy: &mut [f64]| {
        let c = coeffs(x);
        dy[0] = y[1];
        dy[1] = y[2];
        dy[2] = (rhs(x) - c[2] * y[2] - c[1] * y[1] - c[0] * y[0]) / c[3];
    };
    for i in 1..n_out {
        let x_left = x0 + (i - 1) as f64 * h;
        for k in 0..substeps {
            rk.step(x_left + k as f64 * hs, &mut y, hs, &mut scratch, &mut f);
        }
        out.push(y);
    }
    out
}

/// Coefficients `[c₀, c₁, c₂, c₃]` of the kernel-primitive equation at `y`
/// for eigenvalue `q`: `ẽ₁𝒫‴ + ẽ₂𝒫″ + ẽ₃𝒫′ + e₄𝒫 = rhs`.
pub fn primitive_coeffs(table: &CoefficientTable, q: f64, y: f64) -> [f64; 4] {
    let c = table.eval(y);
    let b = c.b;
    let b2 = b * b;
    [
        c.e4,
        (c.e3 + q) / b - (c.e2 * c.b_x + c.e1 * c.b_xx) / b2
            + 2.0 * c.e1 * c.b_x * c.b_x / (b2 * b),
        c.e2 / b - 2.0 * c.e1 * c.b_x / b2,
        c.e1 / b,
    ]
}

/// Cauchy solution of the kernel-primitive problem for one eigenvalue.
#[derive(Debug, Clone)]
pub struct CauchyW {
    /// Cross-section Laplacian eigenvalue.
    pub q: f64,
    /// Solvability functional `ϑ(q) = 𝒲'(L)`.
    pub theta: f64,
    /// Uniform output stations on `[r_b, L]`.
    pub xs: Vec<f64>,
    /// `(𝒲, 𝒲', 𝒲'')` at the stations.
    pub w: Vec<[f64; 3]>,
    /// Whether the degenerate (frictionless) boundary reduction was used.
    pub degenerate: bool,
}

/// Integrates the kernel-primitive Cauchy problem whose trace data encode
/// the oblique-derivative boundary condition:
/// `𝒲(r_b) = 0`, `𝒲'(r_b) = b(r_b)`,
/// `𝒲''(r_b) = b'(r_b) − ((μ₇ − q)/μ₈)·b(r_b)`,
/// with source `−e₅(y)`.
///
/// With no friction the boundary condition loses its oblique term
/// (`μ₇ = μ₈ = 0`) and reduces to Dirichlet trace data; the functional is
/// then computed from the second fundamental solution alone, and at `q = 0`
/// it degenerates to the constant `b(r_b)`.
pub fn cauchy_w(
    table: &CoefficientTable,
    q: f64,
    res: Resolution,
) -> Result<CauchyW, SconditionError> {
    if res.n_out < 6 || res.substeps < 1 {
        return Err(SconditionError::InvalidResolution {
            reason: format!("n_out = {}, substeps = {}", res.n_out, res.substeps),
        });
    }
    let h = (table.l - table.r_b) / (res.n_out - 1) as f64;
    let xs: Vec<f64> = (0..res.n_out).map(|i| table.r_b + i as f64 * h).collect();
    let cp = table.eval(table.r_b);
    let b_rb = cp.b;
    let coeffs = |y: f64| primitive_coeffs(table, q, y);

    if table.mu8 == 0.0 {
        if q == 0.0 {
            return Ok(CauchyW {
                q,
                theta: b_rb,
                xs,
                w: vec![[0.0; 3]; res.n_out],
                degenerate: true,
            });
        }
        let w = integrate_linear3(
            &coeffs,
            &|_| 0.0,
            [0.0, 0.0, 1.0],
            table.r_b,
            table.l,
            res.n_out,
            res.substeps,
        );
        let theta = b_rb * w.last().unwrap()[1];
        return Ok(CauchyW {
            q,
            theta,
            xs,
            w,
            degenerate: true,
        });
    }

    let ic = [
        0.0,
        b_rb,
        cp.b_x - (table.mu7 - q) / table.mu8 * b_rb,
    ];
    let w = integrate_linear3(
        &coeffs,
        &|y: f64| -table.eval(y).e5,
        ic,
        table.r_b,
        table.l,
        res.n_out,
        res.substeps,
    );
    let theta = w.last().unwrap()[1];
    Ok(CauchyW {
        q,
        theta,
        xs,
        w,
        degenerate: false,
    })
}

/// The solvability functional `ϑ(q)` (may be evaluated at real `q ≥ 0`).
pub fn theta(table: &CoefficientTable, q: f64, res: Resolution) -> Result<f64, SconditionError> {
    Ok(cauchy_w(table, q, res)?.theta)
}

/// One scan sample.
#[derive(Debug, Clone, Copy)]
pub struct ThetaSample {
    /// Integer eigenvalue.
    pub q: usize,
    /// Functional value.
    pub theta: f64,
    /// Whether `q = m₁² + m₂²` for integers `m₁, m₂ ≥ 0`.
    pub realizable: bool,
}

/// Result of sweeping the solvability functional over integer eigenvalues.
#[derive(Debug, Clone)]
pub struct SconditionReport {
    /// Largest eigenvalue scanned.
    pub q_max: usize,
    /// Per-integer samples.
    pub thetas: Vec<ThetaSample>,
    /// Smallest `|ϑ|` over realizable eigenvalues.
    pub min_abs_realizable: f64,
    /// Realizable eigenvalue attaining it.
    pub argmin_q: usize,
    /// Smallest scale-free margin `|ϑ(q)| / sup_y |𝒲'(y)|` over realizable
    /// eigenvalues. The Cauchy solutions grow rapidly in `q`, so each
    /// functional value is measured against its own solution rather than a
    /// global magnitude.
    pub min_rel_realizable: f64,
    /// True when every realizable eigenvalue keeps its scale-free margin
    /// above the relative threshold.
    pub satisfied: bool,
    /// Refined real-`q` roots of `ϑ` found between scan points (diagnostic;
    /// a root strictly between integers does not violate the condition).
    pub roots: Vec<f64>,
    /// True when the kernel weight `e₄` changes sign on the span, which
    /// disables the transformed crosscheck route.
    pub e4_vanishes: bool,
}

/// Whether `q` is a sum of two integer squares.
pub fn realizable_eigenvalue(q: usize) -> bool {
    let mut m1 = 0usize;
    while m1 * m1 <= q {
        let r = q - m1 * m1;
        let s = (r as f64).sqrt().round() as usize;
        if s * s == r {
            return true;
        }
        m1 += 1;
    }
    false
}

fn e4_changes_sign(table: &CoefficientTable) -> bool {
    if table.gas.mu == 0.0 {
        return true;
    }
    let n = table.node_count();
    let mut min_abs = f64::INFINITY;
    let mut max_abs = 0.0_f64;
    for i in 0..n {
        let v = table.eval(table.node_x(i)).e4.abs();
        min_abs = min_abs.min(v);
        max_abs = max_abs.max(v);
    }
    max_abs == 0.0 || min_abs < 1e-6 * max_abs
}

/// Sweeps `ϑ(q)` for `q = 0, …, q_max`, refines sign changes by bisection,
/// and decides the solvability condition over the realizable eigenvalues.
pub fn scan_scondition(
    table: &CoefficientTable,
    q_max: usize,
    res: Resolution,
) -> Result<SconditionReport, SconditionError> {
    let mut thetas = Vec::with_capacity(q_max + 1);
    let (mut min_abs, mut argmin_q) = (f64::INFINITY, 0);
    let mut min_rel = f64::INFINITY;
    for q in 0..=q_max {
        let cw = cauchy_w(table, q as f64, res)?;
        let realizable = realizable_eigenvalue(q);
        if realizable {
            let scale = cw
                .w
                .iter()
                .map(|row| row[1].abs())
                .fold(cw.theta.abs(), f64::max)
                .max(f64::MIN_POSITIVE);
            min_rel = min_rel.min(cw.theta.abs() / scale);
            if cw.theta.abs() < min_abs {
                min_abs = cw.theta.abs();
                argmin_q = q;
            }
        }
        thetas.push(ThetaSample {
            q,
            theta: cw.theta,
            realizable,
        });
    }
    let satisfied = min_rel > tol::TOL_THETA_REL;
    let mut roots = Vec::new();
    for pair in thetas.windows(2) {
        if pair[0].theta.signum() != pair[1].theta.signum() {
            let root = crate::ode::bisect(
                |q| theta(table, q, res).expect("resolution already validated"),
                pair[0].q as f64,
                pair[1].q as f64,
                1e-10,
            )
            .expect("sign change implies a valid bracket");
            roots.push(root);
        }
    }
    Ok(SconditionReport {
        q_max,
        thetas,
        min_abs_realizable: min_abs,
        argmin_q,
        min_rel_realizable: min_rel,
        satisfied,
        roots,
        e4_vanishes: e4_changes_sign(table),
    })
}

/// Independent second route to `ϑ(q)`: divide the kernel-primitive equation
/// by `e₄`, differentiate once, and integrate the resulting local
/// third-order equation for `𝒲'`. Requires `e₄ ≠ 0` on the whole span.
pub fn crosscheck_transformed(
    table: &CoefficientTable,
    q: f64,
    res: Resolution,
) -> Result<f64, SconditionError> {
    if res.n_out < 6 || res.substeps < 1 {
        return Err(SconditionError::InvalidResolution {
            reason: format!("n_out = {}, substeps = {}", res.n_out, res.substeps),
        });
    }
    let gamma = table.gas.gamma;
    if e4_changes_sign(table) {
        let t0 = (-3.0 + (9.0 + 16.0 * gamma).sqrt()) / (2.0 * gamma);
        return Err(SconditionError::TransformationInvalid { t0 });
    }

    // Ratio derivatives (ẽ_k/e₄)' via 5-point in-domain finite differences
    // of the exactly evaluable ratios.
    let ratio = |k: usize, y: f64| {
        let c = primitive_coeffs(table, q, y);
        let e4 = table.eval(y).e4;
        c[k] / e4
    };
    let g = 1e-3 * (table.l - table.r_b);
    let fd = |f: &dyn Fn(f64) -> f64, y: f64| {
        let lo = (y - 2.0 * g).max(table.r_b);
        let hi = (y + 2.0 * g).min(table.l);
        let step = (hi - lo) / 4.0;
        let nodes: Vec<f64> = (0..5).map(|i| lo + i as f64 * step).collect();
        let w = fd_weights(&nodes, y, 1);
        nodes.iter().zip(w.iter()).map(|(x, w)| w * f(*x)).sum::<f64>()
    };

    let coeffs = |y: f64| {
        let c = primitive_coeffs(table, q, y);
        let e4 = c[0];
        [
            e4 + e4 * fd(&|x| ratio(1, x), y),
            c[1] + e4 * fd(&|x| ratio(2, x), y),
            c[2] + e4 * fd(&|x| ratio(3, x), y),
            c[3],
        ]
    };
    let rhs = |y: f64| {
        let e4 = table.eval(y).e4;
        -e4 * fd(&|x| table.eval(x).e5 / table.eval(x).e4, y)
    };

    // Cauchy data: 𝒲'(r_b), 𝒲''(r_b) as in the primary route, and
    // 𝒲'''(r_b) recovered from the untransformed equation at the trace.
    let cp = table.eval(table.r_b);
    let b_rb = cp.b;
    let w1 = b_rb;
    let w2 = cp.b_x - (table.mu7 - q) / table.mu8 * b_rb;
    let c0 = primitive_coeffs(table, q, table.r_b);
    let w3 = (-cp.e5 - c0[2] * w2 - c0[1] * w1 - c0[0] * 0.0) / c0[3];

    let sol = integrate_linear3(
        &coeffs,
        &rhs,
        [w1, w2, w3],
        table.r_b,
        table.l,
        res.n_out,
        res.substeps,
    );
    Ok(sol.last().unwrap()[0])
}
