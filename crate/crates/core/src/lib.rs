//! Numerical solver suite for transonic shock flows in a flat three-dimensional
//! duct with wall friction.
//!
//! The library is organised bottom-up:
//!
//! - [`ode`]: shared numerical kit — Runge–Kutta steppers (orders 4 and 8),
//!   finite-difference and quadrature weight generation, polynomial
//!   interpolation, and scalar root finding.
//! - [`linalg`]: small dense linear algebra (partial-pivot LU, 3×3 solves).
//! - [`gas`]: polytropic-gas thermodynamics, state conversions, and pointwise
//!   Euler / jump-condition residual evaluation.
//! - [`background`]: the one-dimensional frictional (Fanno) transonic
//!   background flow — two duct branches joined by a normal shock — and the
//!   table of every background-determined linearization coefficient.
//! - [`fields`]: scalar fields on the square torus and on the duct cylinder,
//!   with real trigonometric analysis/synthesis and derivative kits.
//! - [`scondition`]: the shock-position nondegeneracy check (S-condition):
//!   third-order mode ODE integration and zero detection of the exit
//!   functional ϑ.
//! - [`venttsel`]: spectral solver for the linear nonlocal elliptic problem
//!   with a Venttsel (second-order tangential trace) boundary condition.
//! - [`hyperbolic`]: supersonic inflow marching, streamline tracing,
//!   transport solves, and the periodic div-curl solver.
//! - [`shockmap`]: the free-boundary machinery — duct-normalizing coordinate
//!   transform, exact higher-order term evaluation, the six-step fixed-point
//!   iteration, and end-to-end solution verification.
//!
//! All floating-point work is `f64`. Builders are pure and their outputs are
//! immutable, so everything is safe to share across threads.

pub mod background;
pub mod fields;
pub mod gas;
pub mod hyperbolic;
pub mod linalg;
pub mod ode;
pub mod scondition;
pub mod shockmap;
pub mod venttsel;

/// Centralized tolerances. Each constant is used by exactly the checks named
/// in its doc comment so that tolerance policy is auditable in one place.
pub mod tol {
    /// Relative distance from the sonic value t = M² = 1 at which branch
    /// integration reports choking rather than continuing.
    pub const TOL_SONIC: f64 = 1e-6;

    /// Relative zero-detection threshold for the S-condition exit functional:
    /// a mode is flagged when |ϑ| < TOL_THETA_REL · max(1, max|ϑ| over scan).
    pub const TOL_THETA_REL: f64 = 1e-8;

    /// Default fixed-point stopping tolerance on the iterate-difference norm.
    pub const TOL_FIXED_POINT: f64 = 1e-10;

    /// Mean-zero check on produced shock profiles before exact projection.
    pub const TOL_PROFILE_MEAN: f64 = 1e-12;

    /// Compatibility-defect bound for the div-curl solve's zero-mean inputs;
    /// larger defects are projected away and reported.
    pub const TOL_DIVCURL_MEAN: f64 = 1e-10;

    /// 2×2 superposition-system condition-number cap in the per-mode
    /// boundary-value solve; beyond this the mode is reported as a
    /// nondegeneracy (S-condition) failure.
    pub const COND_MODE_SYSTEM: f64 = 1e12;

    /// Relative tail-energy threshold above which the spectral truncation of
    /// a right-hand side triggers a warning flag.
    pub const TOL_TAIL_ENERGY: f64 = 1e-10;
}
