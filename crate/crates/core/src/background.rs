//! One-dimensional frictional duct flows and the piecewise-smooth
//! transonic-shock background built from them:
//!
//! - `integrate_fanno` marches the frictional quasi-1D ODE system for
//!   `(u, p, ρ)` with dense substepping and stores ODE-consistent node
//!   derivatives for cubic Hermite evaluation,
//! - `choking_distance` / `max_subsonic_length` locate the sonic point of a
//!   branch operationally (bisection on integrability),
//! - `normal_shock` applies the plane-shock jump relations,
//! - `build_background` assembles the supersonic branch, the shock at
//!   `x⁰ = r_b`, and the subsonic branch extended a safety margin `h_b`
//!   past the shock on both sides,
//! - `Background::coefficients` evaluates every scalar and axial-profile
//!   coefficient of the linearized shock/pressure system, with the sign
//!   properties the downstream solvers rely on enforced at construction.
//!
//! Throughout, `t` denotes the axial Mach number squared `(u⁰/c)²`; a
//! branch is supersonic for `t > 1` and subsonic for `t < 1`. Friction
//! drives `t` monotonically toward 1 (choking) in the flow direction.

use crate::gas::{GasError, GasParams, PrimitiveState};
use crate::linalg::{det3, solve3};
use crate::ode::{classic_rk4, hermite_eval, RkScratch};
use crate::tol;
use std::cell::Cell;
use thiserror::Error;

/// Errors raised while constructing background flows.
#[derive(Debug, Error)]
pub enum BackgroundError {
    /// The branch reaches its sonic point before the integration target.
    #[error("flow chokes near x⁰ = {reached:.6} before reaching the target x⁰ = {target:.6}")]
    Choked { reached: f64, target: f64 },
    /// The state is too close to sonic for the branch ODE to be regular.
    #[error("state is sonic within tolerance (M² = {t})")]
    SonicState { t: f64 },
    /// A supersonic state was required.
    #[error("state must be supersonic (M² = {t})")]
    NotSupersonic { t: f64 },
    /// A subsonic state was required.
    #[error("state must be subsonic (M² = {t})")]
    NotSubsonic { t: f64 },
    /// The requested shock position lies at or beyond the supersonic choke.
    #[error("shock position x⁰ = {r_b} is not below the supersonic choking point x⁰ = {choke:.6}")]
    ShockBeyondChoke { r_b: f64, choke: f64 },
    /// The subsonic branch cannot reach the duct exit.
    #[error("subsonic branch chokes at x⁰ = {choke:.6} before the duct exit x⁰ = {l}")]
    ChokesBeforeExit { choke: f64, l: f64 },
    /// A coefficient came out with the wrong sign, so the linearized
    /// problem is outside the regime the solvers are built for.
    #[error("coefficient {name} violates its required sign (got {value})")]
    SignViolation { name: &'static str, value: f64 },
    /// A malformed configuration value.
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
    /// Invalid thermodynamic input.
    #[error(transparent)]
    Gas(#[from] GasError),
}

/// Axial Mach number squared `t = (u⁰)² ρ / (γ p)`.
pub fn mach_squared(state: &PrimitiveState, gamma: f64) -> f64 {
    state.u[0] * state.u[0] * state.rho / (gamma * state.p)
}

/// Branch ODE right-hand side: `du/dx = μ t/(1−t) u`,
/// `dp/dx = −μ γ t/(1−t) p`, `dρ/dx = −μ t/(1−t) ρ`.
fn fanno_rhs(gas: &GasParams, u: f64, p: f64, rho: f64) -> [f64; 3] {
    let t = u * u * rho / (gas.gamma * p);
    let f = gas.mu * t / (1.0 - t);
    [f * u, -gas.gamma * f * p, -f * rho]
}

/// Internal substep count per output interval, sized so table values sit at
/// the round-off floor rather than at the integrator truncation level.
fn substeps(h: f64) -> usize {
    ((h.abs() / 5e-4).ceil() as usize).max(4)
}

/// A value of a duct branch at one axial position, with ODE-consistent
/// derivatives (the stored derivatives satisfy the branch ODE exactly at the
/// interpolated state, so pointwise residuals vanish to round-off).
#[derive(Debug, Clone, Copy)]
pub struct BackgroundPoint {
    /// Axial velocity.
    pub u: f64,
    /// Pressure.
    pub p: f64,
    /// Density.
    pub rho: f64,
    /// Axial Mach number squared.
    pub t: f64,
    /// Sound speed squared `γp/ρ`.
    pub c2: f64,
    /// Bernoulli quantity `u²/2 + γp/((γ−1)ρ)`.
    pub e: f64,
    /// Axial derivative of `u`.
    pub u_x: f64,
    /// Axial derivative of `p`.
    pub p_x: f64,
    /// Axial derivative of `ρ`.
    pub rho_x: f64,
}

impl BackgroundPoint {
    /// The state as a primitive triple with purely axial velocity.
    pub fn primitive(&self) -> PrimitiveState {
        PrimitiveState {
            p: self.p,
            rho: self.rho,
            u: [self.u, 0.0, 0.0],
        }
    }
}

/// One smooth branch of the frictional duct flow, tabulated on a uniform
/// axial grid with node derivatives for cubic Hermite evaluation.
#[derive(Debug, Clone)]
pub struct FannoBranch {
    /// Gas parameters the branch was integrated with.
    pub gas: GasParams,
    /// Entropy function `A = p ρ^{−γ}`, invariant along the branch.
    pub entropy_const: f64,
    x0: f64,
    h: f64,
    n: usize,
    u: Vec<f64>,
    p: Vec<f64>,
    rho: Vec<f64>,
    du: Vec<f64>,
    dp: Vec<f64>,
    drho: Vec<f64>,
}

impl FannoBranch {
    /// Axial extent `(lo, hi)` of the tabulated branch.
    pub fn span(&self) -> (f64, f64) {
        (self.x0, self.x0 + (self.n - 1) as f64 * self.h)
    }

    /// Number of table nodes.
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Axial position of node `i`.
    pub fn node_x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// Whether the branch is supersonic (checked at the first node).
    pub fn is_supersonic(&self) -> bool {
        self.u[0] * self.u[0] * self.rho[0] / (self.gas.gamma * self.p[0]) > 1.0
    }

    /// Evaluates the branch at `x` (must lie in the tabulated span, up to a
    /// round-off slack). Piecewise cubic Hermite in `(u, p, ρ)`; the returned
    /// derivatives are the branch ODE evaluated at the interpolated state.
    pub fn eval(&self, x: f64) -> BackgroundPoint {
        let (lo, hi) = self.span();
        let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        assert!(
            x >= lo - slack && x <= hi + slack,
            "evaluation at x⁰ = {x} outside the branch span [{lo}, {hi}]"
        );
        let xc = x.clamp(lo, hi);
        let i = (((xc - self.x0) / self.h).floor().max(0.0) as usize).min(self.n - 2);
        let (xa, xb) = (self.node_x(i), self.node_x(i + 1));
        let u = hermite_eval(xa, xb, self.u[i], self.u[i + 1], self.du[i], self.du[i + 1], xc);
        let p = hermite_eval(xa, xb, self.p[i], self.p[i + 1], self.dp[i], self.dp[i + 1], xc);
        let rho = hermite_eval(
            xa,
            xb,
            self.rho[i],
            self.rho[i + 1],
            self.drho[i],
            self.drho[i + 1],
            xc,
        );
        let d = fanno_rhs(&self.gas, u, p, rho);
        let gamma = self.gas.gamma;
        BackgroundPoint {
            u,
            p,
            rho,
            t: u * u * rho / (gamma * p),
            c2: gamma * p / rho,
            e: 0.5 * u * u + gamma / (gamma - 1.0) * p / rho,
            u_x: d[0],
            p_x: d[1],
            rho_x: d[2],
        }
    }
}

/// Integrates the branch ODE from `inlet` (given at `x_start`, tangential
/// velocity ignored) to `x_end`, storing `n_nodes` uniformly spaced nodes.
/// Backward integration (`x_end < x_start`) is allowed; the returned table
/// is always in ascending order. Errors if the state starts sonic or the
/// branch chokes before the target.
pub fn integrate_fanno(
    inlet: &PrimitiveState,
    x_start: f64,
    x_end: f64,
    n_nodes: usize,
    gas: &GasParams,
) -> Result<FannoBranch, BackgroundError> {
    if n_nodes < 2 {
        return Err(BackgroundError::InvalidConfig {
            reason: format!("need at least 2 table nodes, got {n_nodes}"),
        });
    }
    if x_end == x_start {
        return Err(BackgroundError::InvalidConfig {
            reason: "integration interval is empty".into(),
        });
    }
    if inlet.p <= 0.0 || inlet.rho <= 0.0 || inlet.u[0] <= 0.0 {
        return Err(BackgroundError::InvalidConfig {
            reason: format!(
                "branch states need u⁰, p, ρ > 0 (got u⁰ = {}, p = {}, ρ = {})",
                inlet.u[0], inlet.p, inlet.rho
            ),
        });
    }
    let gamma = gas.gamma;
    let t_in = mach_squared(inlet, gamma);
    if (t_in - 1.0).abs() < tol::TOL_SONIC {
        return Err(BackgroundError::SonicState { t: t_in });
    }
    let supersonic = t_in > 1.0;

    let h = (x_end - x_start) / (n_nodes - 1) as f64;
    let m = substeps(h);
    let hs = h / m as f64;
    let rk = classic_rk4();
    let mut scratch = RkScratch::default();

    // The right-hand side freezes the state (zero derivative) and records
    // the position as soon as the branch enters the sonic guard band, so a
    // fixed-step march cannot shoot through the singularity.
    let choked: Cell<Option<f64>> = Cell::new(None);
    let mu = gas.mu;
    let mut rhs = |x: f64, y: &[f64], dy: &mut [f64]| {
        let (u, p, rho) = (y[0], y[1], y[2]);
        let t = u * u * rho / (gamma * p);
        if !t.is_finite()
            || (t - 1.0).abs() < tol::TOL_SONIC
            || (t > 1.0) != supersonic
            || p <= 0.0
            || rho <= 0.0
            || u <= 0.0
        {
            if choked.get().is_none() {
                choked.set(Some(x));
            }
            dy.fill(0.0);
            return;
        }
        let f = mu * t / (1.0 - t);
        dy[0] = f * u;
        dy[1] = -gamma * f * p;
        dy[2] = -f * rho;
    };

    let mut u = vec![0.0; n_nodes];
    let mut p = vec![0.0; n_nodes];
    let mut rho = vec![0.0; n_nodes];
    let mut du = vec![0.0; n_nodes];
    let mut dp = vec![0.0; n_nodes];
    let mut drho = vec![0.0; n_nodes];
    let mut y = [inlet.u[0], inlet.p, inlet.rho];
    let store = |i: usize,
                 y: &[f64; 3],
                 u: &mut [f64],
                 p: &mut [f64],
                 rho: &mut [f64],
                 du: &mut [f64],
                 dp: &mut [f64],
                 drho: &mut [f64]| {
        u[i] = y[0];
        p[i] = y[1];
        rho[i] = y[2];
        let d = fanno_rhs(gas, y[0], y[1], y[2]);
        du[i] = d[0];
        dp[i] = d[1];
        drho[i] = d[2];
    };
    store(0, &y, &mut u, &mut p, &mut rho, &mut du, &mut dp, &mut drho);
    for i in 1..n_nodes {
        let x_left = x_start + (i - 1) as f64 * h;
        for k in 0..m {
            rk.step(x_left + k as f64 * hs, &mut y, hs, &mut scratch, &mut rhs);
            if let Some(reached) = choked.get() {
                return Err(BackgroundError::Choked {
                    reached,
                    target: x_end,
                });
            }
        }
        store(i, &y, &mut u, &mut p, &mut rho, &mut du, &mut dp, &mut drho);
    }

    if h < 0.0 {
        u.reverse();
        p.reverse();
        rho.reverse();
        du.reverse();
        dp.reverse();
        drho.reverse();
    }
    Ok(FannoBranch {
        gas: *gas,
        entropy_const: inlet.p * inlet.rho.powf(-gamma),
        x0: x_start.min(x_end),
        h: h.abs(),
        n: n_nodes,
        u,
        p,
        rho,
        du,
        dp,
        drho,
    })
}

/// Distance from `state` to the sonic point of its branch, found by
/// bisection on "the branch integrates successfully over this length".
/// Returns `+∞` for a frictionless gas (the branch never chokes).
///
/// The result is resolved to roughly `1e−4` of the branch length: the sonic
/// guard band and the integrator's behaviour at the singular endpoint set
/// the resolution. This is a margin locator for validity checks, not a
/// precision observable.
pub fn choking_distance(
    state: &PrimitiveState,
    gas: &GasParams,
) -> Result<f64, BackgroundError> {
    let t = mach_squared(state, gas.gamma);
    if (t - 1.0).abs() < tol::TOL_SONIC {
        return Err(BackgroundError::SonicState { t });
    }
    if gas.mu == 0.0 {
        return Ok(f64::INFINITY);
    }
    let probe = |len: f64| integrate_fanno(state, 0.0, len, 33, gas).is_ok();
    let mut lo = 0.0;
    let mut hi = 0.5 / (gas.mu * (1.0 + gas.gamma));
    while probe(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Err(BackgroundError::InvalidConfig {
                reason: "no choking point found below length 1e9".into(),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if probe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(lo)
}

/// Maximal duct length the subsonic branch started at `state` can cover
/// before choking (`+∞` for a frictionless gas).
pub fn max_subsonic_length(
    state: &PrimitiveState,
    gas: &GasParams,
) -> Result<f64, BackgroundError> {
    let t = mach_squared(state, gas.gamma);
    if t >= 1.0 - tol::TOL_SONIC {
        return Err(BackgroundError::NotSubsonic { t });
    }
    choking_distance(state, gas)
}

/// Plane-shock jump relations: maps a supersonic upstream state to the
/// subsonic downstream state with equal mass flux, normal momentum flux and
/// Bernoulli quantity. Tangential velocity is carried across unchanged.
pub fn normal_shock(
    upstream: &PrimitiveState,
    gas: &GasParams,
) -> Result<PrimitiveState, BackgroundError> {
    let gamma = gas.gamma;
    let t = mach_squared(upstream, gamma);
    if t <= 1.0 + tol::TOL_SONIC {
        return Err(BackgroundError::NotSupersonic { t });
    }
    let p = upstream.p * (1.0 + 2.0 * gamma * (t - 1.0) / (gamma + 1.0));
    let rho = upstream.rho * (gamma + 1.0) * t / ((gamma - 1.0) * t + 2.0);
    let u0 = upstream.u[0] * upstream.rho / rho;
    Ok(PrimitiveState {
        p,
        rho,
        u: [u0, upstream.u[1], upstream.u[2]],
    })
}

/// Inputs for [`build_background`].
#[derive(Debug, Clone, Copy)]
pub struct BackgroundConfig {
    /// Gas parameters.
    pub gas: GasParams,
    /// Duct exit position (entrance is at `x⁰ = 0`).
    pub l: f64,
    /// Shock position, strictly between entrance and exit.
    pub r_b: f64,
    /// Supersonic entrance state (tangential velocity ignored).
    pub inlet: PrimitiveState,
    /// Axial table nodes for the subsonic branch on `[r_b, L]`; the other
    /// tables match its node spacing.
    pub n0: usize,
}

impl Default for BackgroundConfig {
    /// The reference configuration used across the test suite: γ = 1.4,
    /// μ = 0.05, duct `[0, 2]` with the shock at 1, entrance at Mach 2
    /// with unit pressure and density.
    fn default() -> Self {
        Self {
            gas: GasParams { gamma: 1.4, mu: 0.05 },
            l: 2.0,
            r_b: 1.0,
            inlet: PrimitiveState {
                p: 1.0,
                rho: 1.0,
                u: [2.0 * 1.4_f64.sqrt(), 0.0, 0.0],
            },
            n0: 200,
        }
    }
}

/// A complete transonic-shock background: supersonic branch up to and a
/// little past the shock, subsonic branch from a little before the shock to
/// the exit, and the shock trace states.
#[derive(Debug, Clone)]
pub struct Background {
    /// Gas parameters.
    pub gas: GasParams,
    /// Duct exit position.
    pub l: f64,
    /// Shock position.
    pub r_b: f64,
    /// Overlap margin: branches extend `h_b` past the shock on both sides.
    pub h_b: f64,
    /// Supersonic branch tabulated on `[0, r_b + h_b]`.
    pub supersonic: FannoBranch,
    /// Subsonic branch tabulated on `[r_b, L]`.
    pub subsonic: FannoBranch,
    /// Subsonic branch extension tabulated on `[r_b − h_b, r_b]`.
    pub subsonic_ext: FannoBranch,
    /// Upstream shock-trace state (supersonic side at `r_b`).
    pub upstream: PrimitiveState,
    /// Downstream shock-trace state (subsonic side at `r_b`).
    pub downstream: PrimitiveState,
    /// Absolute position where the supersonic branch would choke.
    pub choke_sup: f64,
    /// Absolute position where the subsonic branch would choke.
    pub choke_sub: f64,
}

/// Builds the transonic-shock background for `cfg`, validating that the
/// shock sits below the supersonic choking point and that the subsonic
/// branch reaches the exit.
pub fn build_background(cfg: &BackgroundConfig) -> Result<Background, BackgroundError> {
    let gas = cfg.gas;
    if !(cfg.r_b > 0.0 && cfg.r_b < cfg.l) {
        return Err(BackgroundError::InvalidConfig {
            reason: format!("need 0 < r_b < L (got r_b = {}, L = {})", cfg.r_b, cfg.l),
        });
    }
    if cfg.n0 < 9 {
        return Err(BackgroundError::InvalidConfig {
            reason: format!("need at least 9 axial nodes, got {}", cfg.n0),
        });
    }
    let t_in = mach_squared(&cfg.inlet, gas.gamma);
    if t_in <= 1.0 + tol::TOL_SONIC {
        return Err(BackgroundError::NotSupersonic { t: t_in });
    }
    let choke_sup = choking_distance(&cfg.inlet, &gas)?;
    if cfg.r_b >= choke_sup {
        return Err(BackgroundError::ShockBeyondChoke {
            r_b: cfg.r_b,
            choke: choke_sup,
        });
    }
    let h_b = (0.05 * (cfg.l - cfg.r_b))
        .min(0.5 * (choke_sup - cfg.r_b))
        .min(0.5 * cfg.r_b);

    let h_sub = (cfg.l - cfg.r_b) / (cfg.n0 - 1) as f64;
    let n_sup = (((cfg.r_b + h_b) / h_sub).ceil() as usize + 1).max(17);
    let supersonic = integrate_fanno(&cfg.inlet, 0.0, cfg.r_b + h_b, n_sup, &gas)?;
    let upstream = supersonic.eval(cfg.r_b).primitive();
    let downstream = normal_shock(&upstream, &gas)?;

    let choke_sub = cfg.r_b + choking_distance(&downstream, &gas)?;
    if choke_sub <= cfg.l {
        return Err(BackgroundError::ChokesBeforeExit {
            choke: choke_sub,
            l: cfg.l,
        });
    }
    let subsonic = integrate_fanno(&downstream, cfg.r_b, cfg.l, cfg.n0, &gas)?;
    let n_ext = ((h_b / h_sub).ceil() as usize + 1).max(17);
    let subsonic_ext = integrate_fanno(&downstream, cfg.r_b, cfg.r_b - h_b, n_ext, &gas)?;

    Ok(Background {
        gas,
        l: cfg.l,
        r_b: cfg.r_b,
        h_b,
        supersonic,
        subsonic,
        subsonic_ext,
        upstream,
        downstream,
        choke_sup,
        choke_sub,
    })
}

impl Background {
    /// Supersonic-side value at `x ∈ [0, r_b + h_b]`.
    pub fn eval_minus(&self, x: f64) -> BackgroundPoint {
        self.supersonic.eval(x)
    }

    /// Subsonic-side value at `x ∈ [r_b − h_b, L]`.
    pub fn eval_plus(&self, x: f64) -> BackgroundPoint {
        if x < self.r_b {
            self.subsonic_ext.eval(x)
        } else {
            self.subsonic.eval(x)
        }
    }

    /// Assembles the full coefficient table of the linearized problem.
    pub fn coefficients(&self) -> Result<CoefficientTable, BackgroundError> {
        CoefficientTable::new(self)
    }
}

// The d-profiles below are the exact channel coefficients of the linearized
// interior pressure equation: differentiating the second-order pressure
// operator about the background (with density and axial velocity slaved to
// pressure, entropy and Bernoulli data through the exact state recovery)
// yields, after division by c_b²,
//     (t−1)∂₀²p̂ − Δ'p̂ + μd₁(t)∂₀p̂ + μ²d₂(t)p̂ + μ²ρ_b d₃(t)Ê + μ²ρ_b^γ d₄(t)Â.
// Each formula is cross-checked against finite-difference channel derivatives
// and against annihilation of exact one-parameter solution families.

/// `d₁(t) = ((1 + 2γ)t² − t + 2)/(1 − t)`, positive for all `t ∈ (0, 1)`.
pub fn d1(t: f64, gamma: f64) -> f64 {
    ((1.0 + 2.0 * gamma) * t * t - t + 2.0) / (1.0 - t)
}

/// `d₂(t) = (γ(1+γ)t⁴ − 2γ(1+γ)t³ − (γ−3)t² − 8t + 4)/(t − 1)³`.
pub fn d2(t: f64, gamma: f64) -> f64 {
    let g1 = gamma * (1.0 + gamma);
    (g1 * t.powi(4) - 2.0 * g1 * t.powi(3) - (gamma - 3.0) * t * t - 8.0 * t + 4.0)
        / (t - 1.0).powi(3)
}

/// `d₃(t) = 2(γt² + 3t − 2)/(t − 1)³`, vanishing at
/// `t = (−3 + √(9 + 8γ))/(2γ)` and positive below that root.
pub fn d3(t: f64, gamma: f64) -> f64 {
    2.0 * (gamma * t * t + 3.0 * t - 2.0) / (t - 1.0).powi(3)
}

/// `d₄(t) = −((γ−1)t + 2)(γt² + 3t − 2)/((γ−1)(t − 1)³)`, equal to
/// `−d₃(t)((γ−1)t + 2)/(2(γ−1))`.
pub fn d4(t: f64, gamma: f64) -> f64 {
    -(((gamma - 1.0) * t + 2.0) * (gamma * t * t + 3.0 * t - 2.0))
        / ((gamma - 1.0) * (t - 1.0).powi(3))
}

/// Axial-profile values of the linearized-problem coefficients at one
/// position of the subsonic span `[r_b, L]`.
#[derive(Debug, Clone, Copy)]
pub struct CoeffPoint {
    /// 2nd-order axial coefficient `t − 1` (negative on the subsonic side).
    pub e1: f64,
    /// 1st-order axial coefficient `μ d₁(t)`.
    pub e2: f64,
    /// 0th-order coefficient `μ² d₂(t)`.
    pub e3: f64,
    /// Kernel weight of the axial-integral term,
    /// `2μ³ e^{−2μ y} ρ_b d₃(t)`.
    pub e4: f64,
    /// Coefficient of the trace term,
    /// `μ² (μ₄/μ₂)(ρ_b^γ d₄ + ρ_b d₃ J)`.
    pub e5: f64,
    /// Coefficient of the transported boundary datum,
    /// `−μ² e^{2μ(r_b − y)} ρ_b d₃`.
    pub e6: f64,
    /// Integral-kernel profile `b = e^{2μy}/ρ_b`.
    pub b: f64,
    /// First axial derivative of `b`.
    pub b_x: f64,
    /// Second axial derivative of `b`.
    pub b_xx: f64,
    /// Damped entropy-weight integral `J` (`J' = −2μJ + 2μ ρ_b^{γ−1}/(γ−1)`,
    /// `J(r_b) = 0`).
    pub j: f64,
    /// Background density.
    pub rho: f64,
    /// Background sound speed squared.
    pub c2: f64,
    /// Background axial Mach number squared.
    pub t: f64,
    /// Background axial velocity.
    pub u: f64,
    /// Background pressure.
    pub p: f64,
}

/// Every scalar and axial-profile coefficient of the linearized
/// shock/pressure system, evaluated on the subsonic background. Scalars are
/// computed at the shock trace; profiles are evaluated on demand from the
/// tabulated branch (Hermite-interpolated, so they are smooth in `y`).
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    /// Gas parameters.
    pub gas: GasParams,
    /// Shock position.
    pub r_b: f64,
    /// Duct exit position.
    pub l: f64,
    /// Upstream shock-trace state.
    pub upstream: PrimitiveState,
    /// Downstream shock-trace state.
    pub downstream: PrimitiveState,
    /// Linearized jump system on `(û⁰, p̂, ρ̂)` at the downstream trace.
    pub m_matrix: [[f64; 3]; 3],
    /// Determinant of `m_matrix`, equal to `(c² − (u⁰)²)₊/(γ−1) > 0`.
    pub det_m: f64,
    /// Mass-flux-to-pressure-jump ratio `(ρu⁰)_b / (p_b⁺ − p_b⁻) > 0`.
    pub mu0: f64,
    /// Per-friction shock-displacement coefficients `(μ₁, μ₂, μ₃, μ₄)/μ`.
    pub mu_hat: [f64; 4],
    /// Velocity displacement coefficient `μ₁ = μ μ̂₁`.
    pub mu1: f64,
    /// Pressure displacement coefficient `μ₂ = μ μ̂₂ < 0` for `μ > 0`.
    pub mu2: f64,
    /// Density displacement coefficient `μ₃ = μ μ̂₃`.
    pub mu3: f64,
    /// Entropy displacement coefficient `μ₄ = μ μ̂₄ < 0` for `μ > 0`.
    pub mu4: f64,
    /// Friction-free ratio `μ₄/μ₂ = μ̂₄/μ̂₂`, finite also at `μ = 0`.
    pub mu4_over_mu2: f64,
    /// Pressure self-coupling of the linearized axial pressure equation.
    pub gamma0: f64,
    /// Entropy coupling of the linearized axial pressure equation.
    pub k_a: f64,
    /// Bernoulli coupling of the linearized axial pressure equation.
    pub k_e: f64,
    /// Reduced pressure self-coupling `γ₁ = γ₀ − k_A μ₄/μ₂ < 0` for `μ > 0`.
    pub gamma1: f64,
    /// Divergence coupling `γ₂ = ρ_b u_b/(t − 1) |_{r_b} < 0`.
    pub gamma2: f64,
    /// `μ₅ = −1/γ₂ > 0`.
    pub mu5: f64,
    /// `μ₆ = −γ₁ μ₂ / γ₂ > 0` for `μ > 0`.
    pub mu6: f64,
    /// `μ₇ = −μ₀ μ₆`.
    pub mu7: f64,
    /// `μ₈ = −μ₀ μ₂ μ₅ > 0` for `μ > 0`.
    pub mu8: f64,
    /// `μ₉ = −μ₂ μ₅ / (4π² μ₆)` (defined as 0 in the frictionless limit).
    pub mu9: f64,
    branch: FannoBranch,
    j_nodes: Vec<f64>,
    j_deriv: Vec<f64>,
}

impl CoefficientTable {
    fn new(bg: &Background) -> Result<Self, BackgroundError> {
        let gas = bg.gas;
        let gamma = gas.gamma;
        let mu = gas.mu;
        let up = bg.eval_minus(bg.r_b);
        let dn = bg.eval_plus(bg.r_b);
        let (u, p, rho) = (dn.u, dn.p, dn.rho);
        let t = dn.t;
        let c2 = dn.c2;

        let jump_p = p - up.p;
        if jump_p <= 0.0 {
            return Err(BackgroundError::SignViolation {
                name: "pressure jump",
                value: jump_p,
            });
        }
        let m_matrix = [
            [2.0 * rho * u, 1.0, u * u],
            [rho, 0.0, u],
            [
                u,
                gamma / ((gamma - 1.0) * rho),
                -c2 / ((gamma - 1.0) * rho),
            ],
        ];
        let det_m = det3(&m_matrix);
        if det_m <= 0.0 {
            return Err(BackgroundError::SignViolation {
                name: "det M",
                value: det_m,
            });
        }
        let col = [-jump_p, 0.0, -2.0 * (c2 - up.c2) / (gamma - 1.0)];
        let hat3 = solve3(&m_matrix, &col).map_err(|_| BackgroundError::SignViolation {
            name: "det M",
            value: det_m,
        })?;
        let hat4 = rho.powf(-gamma) * hat3[1] - gamma * p * rho.powf(-gamma - 1.0) * hat3[2];
        let mu_hat = [hat3[0], hat3[1], hat3[2], hat4];
        if mu_hat[1] >= 0.0 {
            return Err(BackgroundError::SignViolation {
                name: "mu2",
                value: mu_hat[1],
            });
        }
        if mu_hat[3] >= 0.0 {
            return Err(BackgroundError::SignViolation {
                name: "mu4",
                value: mu_hat[3],
            });
        }
        let mu0 = rho * u / jump_p;
        if mu0 <= 0.0 {
            return Err(BackgroundError::SignViolation {
                name: "mu0",
                value: mu0,
            });
        }
        let mu4_over_mu2 = mu_hat[3] / mu_hat[1];

        let one_m_t2 = (1.0 - t) * (1.0 - t);
        let gamma0 = -mu * (gamma * t * t - t + 2.0) / one_m_t2;
        let k_a = mu * (t + 2.0 / (gamma - 1.0)) * rho.powf(gamma) / one_m_t2;
        let k_e = -2.0 * mu * gamma * p * c2 / ((u * u - c2) * (u * u - c2));
        let gamma1 = gamma0 - k_a * mu4_over_mu2;
        let gamma2 = rho * u / (t - 1.0);
        if gamma2 >= 0.0 {
            return Err(BackgroundError::SignViolation {
                name: "gamma2",
                value: gamma2,
            });
        }
        let mu5 = -1.0 / gamma2;
        let mu2 = mu * mu_hat[1];
        let mu6 = -gamma1 * mu2 / gamma2;
        let mu7 = -mu0 * mu6;
        let mu8 = -mu0 * mu2 * mu5;
        let mu9 = if mu6 == 0.0 {
            0.0
        } else {
            -mu2 * mu5 / (4.0 * std::f64::consts::PI.powi(2) * mu6)
        };
        if mu > 0.0 {
            for (name, value, positive) in [
                ("gamma1", gamma1, false),
                ("mu6", mu6, true),
                ("mu8", mu8, true),
            ] {
                if (value > 0.0) != positive || value == 0.0 {
                    return Err(BackgroundError::SignViolation { name, value });
                }
            }
        }

        // Damped entropy-weight integral J along the subsonic branch.
        let branch = bg.subsonic.clone();
        let n = branch.node_count();
        let mut j_nodes = vec![0.0; n];
        let mut j_deriv = vec![0.0; n];
        let j_rhs_at = |x: f64, j: f64| {
            -2.0 * mu * j + 2.0 * mu / (gamma - 1.0) * branch.eval(x).rho.powf(gamma - 1.0)
        };
        j_deriv[0] = j_rhs_at(branch.node_x(0), 0.0);
        let rk = classic_rk4();
        let mut scratch = RkScratch::default();
        let mut y = [0.0_f64];
        let h = branch.node_x(1) - branch.node_x(0);
        let m = substeps(h);
        let hs = h / m as f64;
        for i in 1..n {
            let x_left = branch.node_x(i - 1);
            for k in 0..m {
                rk.step(
                    x_left + k as f64 * hs,
                    &mut y,
                    hs,
                    &mut scratch,
                    &mut |x, y, dy| dy[0] = j_rhs_at(x, y[0]),
                );
            }
            j_nodes[i] = y[0];
            j_deriv[i] = j_rhs_at(branch.node_x(i), y[0]);
        }

        Ok(Self {
            gas,
            r_b: bg.r_b,
            l: bg.l,
            upstream: bg.upstream,
            downstream: bg.downstream,
            m_matrix,
            det_m,
            mu0,
            mu_hat,
            mu1: mu * mu_hat[0],
            mu2,
            mu3: mu * mu_hat[2],
            mu4: mu * mu_hat[3],
            mu4_over_mu2,
            gamma0,
            k_a,
            k_e,
            gamma1,
            gamma2,
            mu5,
            mu6,
            mu7,
            mu8,
            mu9,
            branch,
            j_nodes,
            j_deriv,
        })
    }

    /// Number of axial table nodes backing the profiles.
    pub fn node_count(&self) -> usize {
        self.branch.node_count()
    }

    /// Axial position of table node `i`.
    pub fn node_x(&self, i: usize) -> f64 {
        self.branch.node_x(i)
    }

    /// The damped entropy-weight integral `J` at `y ∈ [r_b, L]`.
    pub fn j_at(&self, y: f64) -> f64 {
        let (lo, hi) = self.branch.span();
        let xc = y.clamp(lo, hi);
        let i = (((xc - lo) / self.branch.h).floor().max(0.0) as usize)
            .min(self.branch.n - 2);
        let (xa, xb) = (self.branch.node_x(i), self.branch.node_x(i + 1));
        hermite_eval(
            xa,
            xb,
            self.j_nodes[i],
            self.j_nodes[i + 1],
            self.j_deriv[i],
            self.j_deriv[i + 1],
            xc,
        )
    }

    /// All profile coefficients at `y ∈ [r_b, L]`.
    pub fn eval(&self, y: f64) -> CoeffPoint {
        let pt = self.branch.eval(y);
        let gamma = self.gas.gamma;
        let mu = self.gas.mu;
        let (t, rho) = (pt.t, pt.rho);
        let b = (2.0 * mu * y).exp() / rho;
        let b_x = b * mu * (t - 2.0) / (t - 1.0);
        let t_x = mu * (1.0 + gamma) * t * t / (1.0 - t);
        let b_xx = b_x * mu * (t - 2.0) / (t - 1.0) + b * mu * t_x / ((t - 1.0) * (t - 1.0));
        let j = self.j_at(y);
        CoeffPoint {
            e1: t - 1.0,
            e2: mu * d1(t, gamma),
            e3: mu * mu * d2(t, gamma),
            e4: 2.0 * mu.powi(3) * (-2.0 * mu * y).exp() * rho * d3(t, gamma),
            e5: mu * mu * self.mu4_over_mu2 * (rho.powf(gamma) * d4(t, gamma) + rho * d3(t, gamma) * j),
            e6: -mu * mu * (2.0 * mu * (self.r_b - y)).exp() * rho * d3(t, gamma),
            b,
            b_x,
            b_xx,
            j,
            rho,
            c2: pt.c2,
            t,
            u: pt.u,
            p: pt.p,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::{bernoulli, recover_primitive, rh_residual, CharacteristicState};
    use proptest::prelude::*;

    /// Closed-form branch solution used as an independent oracle:
    /// `φ(t) = 1/t + ln t − 1` decreases by `μ(1+γ)·Δx` toward the choke,
    /// and `(u, p, ρ)` scale as powers of `t`.
    fn phi(t: f64) -> f64 {
        1.0 / t + t.ln() - 1.0
    }

    fn closed_form_state(
        gamma: f64,
        mu: f64,
        inlet: (f64, f64, f64),
        x: f64,
    ) -> (f64, f64, f64, f64) {
        let (u_in, p_in, rho_in) = inlet;
        let t_in = u_in * u_in * rho_in / (gamma * p_in);
        let target = phi(t_in) - mu * (1.0 + gamma) * x;
        let t = crate::ode::newton(
            |t| (phi(t) - target, (t - 1.0) / (t * t)),
            t_in,
            1e-15,
            200,
        )
        .expect("branch inversion converges");
        let s = t / t_in;
        (
            u_in * s.powf(1.0 / (1.0 + gamma)),
            p_in * s.powf(-gamma / (1.0 + gamma)),
            rho_in * s.powf(-1.0 / (1.0 + gamma)),
            t,
        )
    }

    fn reference_config() -> BackgroundConfig {
        BackgroundConfig::default()
    }

    #[test]
    fn branch_matches_closed_form_profile() {
        let cfg = reference_config();
        let branch = integrate_fanno(&cfg.inlet, 0.0, 1.05, 211, &cfg.gas).unwrap();
        let inlet = (cfg.inlet.u[0], cfg.inlet.p, cfg.inlet.rho);
        let mut worst: f64 = 0.0;
        for k in 0..=50 {
            // Sample off the table nodes to exercise the interpolation.
            let x = 1.05 * (k as f64 + 0.37) / 51.0;
            let (u, p, rho, t) = closed_form_state(1.4, 0.05, inlet, x);
            let pt = branch.eval(x);
            worst = worst
                .max((pt.u / u - 1.0).abs())
                .max((pt.p / p - 1.0).abs())
                .max((pt.rho / rho - 1.0).abs())
                .max((pt.t / t - 1.0).abs());
        }
        println!("branch vs closed form, worst relative error: {worst:.3e}");
        assert!(worst < 1e-10, "relative error {worst}");
        // Table nodes themselves sit at the round-off floor.
        for i in (0..branch.node_count()).step_by(30) {
            let x = branch.node_x(i);
            let (u, ..) = closed_form_state(1.4, 0.05, inlet, x);
            assert!((branch.u[i] / u - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_invariant_and_dissipation_identity() {
        let cfg = reference_config();
        let branch = integrate_fanno(&cfg.inlet, 0.0, 1.05, 211, &cfg.gas).unwrap();
        for k in 0..=40 {
            let x = 1.05 * k as f64 / 40.0;
            let pt = branch.eval(x);
            let a = pt.p * pt.rho.powf(-1.4);
            assert!(
                (a / branch.entropy_const - 1.0).abs() < 1e-11,
                "entropy drift at x = {x}"
            );
            // d/dx of the Bernoulli quantity must equal −μu² pointwise; the
            // stored derivatives satisfy this identity exactly.
            let de = pt.u * pt.u_x
                + 1.4 / 0.4 * (pt.p_x * pt.rho - pt.p * pt.rho_x) / (pt.rho * pt.rho);
            assert!(
                (de + cfg.gas.mu * pt.u * pt.u).abs() < 1e-12,
                "dissipation identity at x = {x}: {de}"
            );
        }
    }

    #[test]
    fn inlet_bernoulli_reference_value() {
        let cfg = reference_config();
        let e = bernoulli(cfg.inlet.p, cfg.inlet.rho, cfg.inlet.u, 1.4).unwrap();
        assert!((e - 6.3).abs() < 1e-14);
    }

    #[test]
    fn normal_shock_textbook_ratios() {
        let gas = GasParams::new(1.4, 0.0).unwrap();
        let up = PrimitiveState {
            p: 1.0,
            rho: 1.0,
            u: [2.0 * 1.4_f64.sqrt(), 0.3, -0.2],
        };
        let dn = normal_shock(&up, &gas).unwrap();
        assert!((dn.p - 4.5).abs() < 1e-13);
        assert!((dn.rho - 8.0 / 3.0).abs() < 1e-13);
        assert!((mach_squared(&dn, 1.4) - 1.0 / 3.0).abs() < 1e-13);
        // Tangential velocity passes through unchanged.
        assert_eq!(dn.u[1], 0.3);
        assert_eq!(dn.u[2], -0.2);
        let r = rh_residual(&up, &dn, [1.0, 0.0, 0.0], &gas);
        assert!(r.sup() < 1e-12, "jump residual {}", r.sup());
        assert!(r.pressure_jump > 0.0);
        // Entropy rises across the shock.
        let a_up = up.p * up.rho.powf(-1.4);
        let a_dn = dn.p * dn.rho.powf(-1.4);
        assert!(a_dn > a_up);
    }

    #[test]
    fn normal_shock_rejects_subsonic_upstream() {
        let gas = GasParams::new(1.4, 0.0).unwrap();
        let s = PrimitiveState {
            p: 1.0,
            rho: 1.0,
            u: [0.5, 0.0, 0.0],
        };
        assert!(matches!(
            normal_shock(&s, &gas),
            Err(BackgroundError::NotSupersonic { .. })
        ));
    }

    #[test]
    fn sonic_state_rejected() {
        let gas = GasParams::new(1.4, 0.05).unwrap();
        let s = PrimitiveState {
            p: 1.0,
            rho: 1.0,
            u: [1.4_f64.sqrt(), 0.0, 0.0],
        };
        assert!(matches!(
            integrate_fanno(&s, 0.0, 1.0, 11, &gas),
            Err(BackgroundError::SonicState { .. })
        ));
    }

    #[test]
    fn choking_reported_with_position() {
        let cfg = reference_config();
        let bg = build_background(&cfg).unwrap();
        // The subsonic branch chokes near x⁰ = 6.944; ask for more.
        let err = integrate_fanno(&bg.downstream, 1.0, 7.5, 101, &cfg.gas).unwrap_err();
        match err {
            BackgroundError::Choked { reached, target } => {
                assert!((reached - 6.9439661366762486).abs() < 1e-3, "reached {reached}");
                assert_eq!(target, 7.5);
            }
            other => panic!("expected choking error, got {other}"),
        }
    }

    #[test]
    fn choking_distance_matches_closed_form() {
        let cfg = reference_config();
        let sup = choking_distance(&cfg.inlet, &cfg.gas).unwrap();
        assert!(
            (sup / 5.3024530093324218 - 1.0).abs() < 1e-4,
            "supersonic choke {sup}"
        );
        let bg = build_background(&cfg).unwrap();
        let sub = max_subsonic_length(&bg.downstream, &cfg.gas).unwrap();
        assert!(
            (sub / 5.9439661366762486 - 1.0).abs() < 1e-4,
            "subsonic choke distance {sub}"
        );
        // Frictionless branches never choke.
        let gas0 = GasParams::new(1.4, 0.0).unwrap();
        assert!(choking_distance(&cfg.inlet, &gas0).unwrap().is_infinite());
        assert!(matches!(
            max_subsonic_length(&cfg.inlet, &gas0),
            Err(BackgroundError::NotSubsonic { .. })
        ));
    }

    #[test]
    fn background_reference_trace_values() {
        let cfg = reference_config();
        let bg = build_background(&cfg).unwrap();
        assert!((bg.h_b - 0.05).abs() < 1e-14);
        let rel = |a: f64, b: f64| (a / b - 1.0).abs();
        assert!(rel(bg.upstream.u[0], 2.2094043289045735) < 1e-9);
        assert!(rel(bg.upstream.p, 1.1008961123453893) < 1e-9);
        assert!(rel(bg.upstream.rho, 1.0710723620303249) < 1e-9);
        assert!(rel(bg.downstream.u[0], 0.91098315761238891) < 1e-9);
        assert!(rel(bg.downstream.p, 4.173521408917475) < 1e-9);
        assert!(rel(bg.downstream.rho, 2.5976681275228701) < 1e-9);
        let a_plus = bg.downstream.p * bg.downstream.rho.powf(-1.4);
        assert!(rel(a_plus, 1.0966941164912154) < 1e-9);
        // Bernoulli quantity is continuous across the shock.
        let e_m = bernoulli(bg.upstream.p, bg.upstream.rho, bg.upstream.u, 1.4).unwrap();
        let e_p = bernoulli(bg.downstream.p, bg.downstream.rho, bg.downstream.u, 1.4).unwrap();
        assert!((e_m - e_p).abs() < 1e-12);
        assert!(rel(e_m, 6.0381903959639098) < 1e-10);
        // Exit values and choking points.
        let exit = bg.eval_plus(2.0);
        assert!(rel(exit.t, 0.39747036572601996) < 1e-9);
        assert!(rel(exit.p, 3.9961598510744425) < 1e-9);
        assert!(rel(exit.rho, 2.5183285248453862) < 1e-9);
        assert!(rel(bg.choke_sup, 5.3024530093324218) < 1e-4);
        assert!(rel(bg.choke_sub, 6.9439661366762486) < 1e-4);
        // Jump residuals across the assembled shock.
        let r = rh_residual(&bg.upstream, &bg.downstream, [1.0, 0.0, 0.0], &cfg.gas);
        assert!(r.sup() < 1e-11, "jump residual {}", r.sup());
        // The extended spans are evaluable.
        let _ = bg.eval_plus(bg.r_b - 0.5 * bg.h_b);
        let _ = bg.eval_minus(bg.r_b + bg.h_b);
        // Interior subsonic spot checks.
        for (x, p_ref, u_ref, rho_ref) in [
            (1.25, 4.130435905891936, 0.91776070894174533, 2.5784846640128443),
            (1.5, 4.0865511919130144, 0.9247897169177941, 2.5588864905709174),
            (1.75, 4.041812844105535, 0.9320899152756591, 2.5388450990160001),
        ] {
            let pt = bg.eval_plus(x);
            assert!(rel(pt.p, p_ref) < 1e-9, "p at {x}");
            assert!(rel(pt.u, u_ref) < 1e-9, "u at {x}");
            assert!(rel(pt.rho, rho_ref) < 1e-9, "rho at {x}");
        }
        // Supersonic extension spot check at the far end of its span.
        let pt = bg.eval_minus(1.05);
        assert!(rel(pt.t, 3.3635139398313263) < 1e-9);
        assert!(rel(pt.u, 2.2015718509535334) < 1e-9);
        assert!(rel(pt.p, 1.1063832945001697) < 1e-9);
        assert!(rel(pt.rho, 1.074882889792995) < 1e-9);
    }

    #[test]
    fn coefficient_scalars_reference_values() {
        let cfg = reference_config();
        let table = build_background(&cfg).unwrap().coefficients().unwrap();
        let rel = |a: f64, b: f64| (a / b - 1.0).abs();
        assert!(rel(table.mu0, 0.77016612337336077) < 1e-9);
        assert!(rel(table.mu_hat[0], 0.022684521708800375) < 1e-7);
        assert!(rel(table.mu_hat[1], -3.1263066726803723) < 1e-9);
        assert!(rel(table.mu_hat[2], -0.064684905026667849) < 1e-7);
        assert!(rel(table.mu_hat[3], -0.78328049829589719) < 1e-9);
        assert!(rel(table.det_m, 3.5485194556035911) < 1e-9);
        assert!(rel(table.mu4_over_mu2, 0.25054499775747952) < 1e-9);
        assert!(rel(table.gamma0, -0.22872223758490517) < 1e-9);
        assert!(rel(table.k_a, 2.5654088383518325) < 1e-9);
        assert!(rel(table.k_e, -0.65232396345333288) < 1e-9);
        assert!(rel(table.gamma1, -0.87147258923678317) < 1e-9);
        assert!(rel(table.gamma2, -3.7500222717086471) < 1e-9);
        assert!(rel(table.mu5, 0.26666508291012453) < 1e-9);
        assert!(rel(table.mu6, 0.03632632519736502) < 1e-9);
        assert!(rel(table.mu7, -0.027977305053654651) < 1e-9);
        assert!(rel(table.mu8, 0.032103482541150911) < 1e-9);
        assert!(rel(table.mu9, 0.029066084491272598) < 1e-9);
        // μ-scaled values and the internal consistency identity
        // μ̂₃ = −(ρ⁺/u⁺) μ̂₁.
        assert!((table.mu1 - 0.05 * table.mu_hat[0]).abs() < 1e-15);
        assert!((table.mu4 - 0.05 * table.mu_hat[3]).abs() < 1e-15);
        let ratio = -table.downstream.rho / table.downstream.u[0];
        assert!(rel(table.mu_hat[2], ratio * table.mu_hat[0]) < 1e-9);
        // det M agrees with its closed form.
        let dn = table.downstream;
        let c2 = 1.4 * dn.p / dn.rho;
        assert!(rel(table.det_m, (c2 - dn.u[0] * dn.u[0]) / 0.4) < 1e-12);
        // The displacement coefficients must match their printed closed
        // forms (second route, independent of the matrix solve).
        let up = table.upstream;
        let c2m = 1.4 * up.p / up.rho;
        let dc2 = c2m - c2;
        let cmu = c2 - dn.u[0] * dn.u[0];
        let mu1_closed = 2.0 * 0.05 * dn.u[0] * (1.4 / 2.4 + dc2 / cmu);
        let mu2_closed = -2.0
            * 0.05
            * dn.rho
            * ((0.4 * dn.u[0] * dn.u[0] + c2) / 2.4 + dn.u[0] * dn.u[0] * dc2 / cmu);
        let mu4_closed = 2.0
            * 0.05
            * dn.rho.powf(1.0 - 1.4)
            * (0.4 / 2.4 * cmu + dc2);
        assert!(rel(table.mu1, mu1_closed) < 1e-8);
        assert!(rel(table.mu2, mu2_closed) < 1e-9);
        assert!(rel(table.mu4, mu4_closed) < 1e-9);
        assert!(table.mu4 < 0.0);
    }

    #[test]
    fn coefficient_profiles_consistent() {
        let cfg = reference_config();
        let table = build_background(&cfg).unwrap().coefficients().unwrap();
        let cp = table.eval(1.0);
        let dn = table.downstream;
        let t_plus = mach_squared(&dn, 1.4);
        assert!((cp.e1 - (t_plus - 1.0)).abs() < 1e-12);
        assert!((cp.b - (2.0 * 0.05_f64).exp() / dn.rho).abs() < 1e-12);
        assert!(cp.j.abs() < 1e-14);
        // d-values at the downstream trace against independent references.
        let rel = |a: f64, b: f64| (a / b - 1.0).abs();
        assert!(rel(d1(t_plus, 1.4), 3.4044035647390452) < 1e-9);
        assert!(rel(d2(t_plus, 1.4), -3.9432587299466699) < 1e-9);
        assert!(rel(d3(t_plus, 1.4), 5.5915203170932326) < 1e-9);
        assert!(rel(d4(t_plus, 1.4), -15.01031114645528) < 1e-9);
        // b', b'' agree with centered differences of b.
        let g = 1e-3;
        for y in [1.2, 1.5, 1.8] {
            let b = |x: f64| table.eval(x).b;
            let fd1 = (-b(y + 2.0 * g) + 8.0 * b(y + g) - 8.0 * b(y - g) + b(y - 2.0 * g))
                / (12.0 * g);
            let fd2 = (-b(y + 2.0 * g) + 16.0 * b(y + g) - 30.0 * b(y)
                + 16.0 * b(y - g)
                - b(y - 2.0 * g))
                / (12.0 * g * g);
            let cp = table.eval(y);
            assert!(rel(cp.b_x, fd1) < 1e-7, "b' at {y}: {} vs {}", cp.b_x, fd1);
            assert!(rel(cp.b_xx, fd2) < 1e-5, "b'' at {y}: {} vs {}", cp.b_xx, fd2);
            // J satisfies its defining equation.
            let j = |x: f64| table.j_at(x);
            let jd = (-j(y + 2.0 * g) + 8.0 * j(y + g) - 8.0 * j(y - g) + j(y - 2.0 * g))
                / (12.0 * g);
            let expect = -2.0 * 0.05 * cp.j + 2.0 * 0.05 / 0.4 * cp.rho.powf(0.4);
            assert!((jd - expect).abs() < 1e-8, "J' at {y}");
        }
    }

    #[test]
    fn trace_linearization_matches_finite_differences() {
        // The closed-form couplings (γ₀, k_A, k_E) of the axial pressure
        // equation must agree with centered differences of the branch flux
        // F(p, A, E) = μγp U²/(U² − C²) at the downstream trace, where U is
        // recovered from (p, A, E) and C² from (p, A).
        let cfg = reference_config();
        let table = build_background(&cfg).unwrap().coefficients().unwrap();
        let dn = table.downstream;
        let gamma = 1.4;
        let cs0 = CharacteristicState::from_primitive(&dn, gamma).unwrap();
        let flux = |p: f64, a: f64, e: f64| {
            let cs = CharacteristicState { p, a, e, u_t: [0.0, 0.0] };
            let prim = recover_primitive(&cs, gamma).unwrap();
            let u2 = prim.u[0] * prim.u[0];
            let c2 = gamma * prim.p / prim.rho;
            0.05 * gamma * prim.p * u2 / (u2 - c2)
        };
        let g = 1e-6;
        let dp = (flux(cs0.p + g, cs0.a, cs0.e) - flux(cs0.p - g, cs0.a, cs0.e)) / (2.0 * g);
        let da = (flux(cs0.p, cs0.a + g, cs0.e) - flux(cs0.p, cs0.a - g, cs0.e)) / (2.0 * g);
        let de = (flux(cs0.p, cs0.a, cs0.e + g) - flux(cs0.p, cs0.a, cs0.e - g)) / (2.0 * g);
        assert!((dp + table.gamma0).abs() < 1e-5 * table.gamma0.abs(), "γ₀ vs FD: {dp}");
        assert!((da - table.k_a).abs() < 1e-5 * table.k_a.abs(), "k_A vs FD: {da}");
        assert!((de - table.k_e).abs() < 1e-5 * table.k_e.abs(), "k_E vs FD: {de}");
    }

    #[test]
    fn frictionless_background_degenerates_cleanly() {
        let mut cfg = reference_config();
        cfg.gas = GasParams::new(1.4, 0.0).unwrap();
        let bg = build_background(&cfg).unwrap();
        assert!(bg.choke_sup.is_infinite());
        assert!(bg.choke_sub.is_infinite());
        // Branches are constant.
        for x in [0.0, 0.5, 1.0] {
            let pt = bg.eval_minus(x);
            assert!((pt.u - cfg.inlet.u[0]).abs() < 1e-14);
            assert!((pt.p - 1.0).abs() < 1e-14);
        }
        for x in [1.0, 1.5, 2.0] {
            let pt = bg.eval_plus(x);
            assert!((pt.p - bg.downstream.p).abs() < 1e-14);
        }
        let table = bg.coefficients().unwrap();
        // Friction-scaled scalars vanish exactly; the friction-free ratio
        // and the trace couplings that survive stay finite.
        for v in [
            table.mu1, table.mu2, table.mu3, table.mu4, table.gamma0, table.k_a, table.k_e,
            table.gamma1, table.mu6, table.mu7, table.mu8, table.mu9,
        ] {
            assert_eq!(v, 0.0);
        }
        assert!(table.mu4_over_mu2 > 0.0);
        assert!(table.gamma2 < 0.0);
        assert!(table.mu5 > 0.0);
        // Profile coefficients except e₁ vanish identically.
        for y in [1.0, 1.4, 2.0] {
            let cp = table.eval(y);
            assert_eq!(cp.e2, 0.0);
            assert_eq!(cp.e3, 0.0);
            assert_eq!(cp.e4, 0.0);
            assert_eq!(cp.e5, 0.0);
            assert_eq!(cp.e6, 0.0);
            assert!(cp.e1 < 0.0);
        }
    }

    #[test]
    fn d_coefficients_reference_points() {
        assert!((d1(0.5, 1.4) - 4.9).abs() < 1e-14);
        let gamma = 1.4_f64;
        let t0 = (-3.0 + (9.0 + 8.0 * gamma).sqrt()) / (2.0 * gamma);
        // The numerator cancels to round-off at the root; dividing by
        // (t₀ − 1)³ amplifies that to the 1e−11 scale.
        assert!(d3(t0, gamma).abs() < 1e-10);
        // d₃ changes sign across t₀.
        assert!(d3(t0 - 0.05, gamma) > 0.0);
        assert!(d3(t0 + 0.05, gamma) < 0.0);
        // d₄ is d₃ rescaled by −((γ−1)t + 2)/(2(γ−1)).
        for t in [0.2, 0.4, 0.6] {
            let expect = -d3(t, gamma) * ((gamma - 1.0) * t + 2.0) / (2.0 * (gamma - 1.0));
            assert!((d4(t, gamma) - expect).abs() < 1e-13);
        }
    }

    /// Finite-difference referee for the linearized interior-equation
    /// channels: perturb one datum of the exact state recovery at a time,
    /// holding the axial pressure-derivative values fixed, and compare the
    /// resulting derivative of the second-order pressure operator (divided
    /// by c_b²) with the tabulated channel coefficient.
    #[test]
    fn d_coefficients_match_interior_linearization() {
        let cfg = reference_config();
        let bg = build_background(&cfg).unwrap();
        let (gamma, mu) = (cfg.gas.gamma, cfg.gas.mu);
        let n_op = |p: f64, a: f64, e: f64, p1: f64, p2: f64| -> f64 {
            let rho = (p / a).powf(1.0 / gamma);
            let c2 = gamma * p / rho;
            let s = e - c2 / (gamma - 1.0);
            (2.0 * e - (gamma + 1.0) / (gamma - 1.0) * c2) * p2 - 2.0 * mu * s * p1
                - (2.0 / p) * (s + c2 * c2 / (4.0 * gamma * s)) * p1 * p1
                + 2.0 * mu * mu * gamma * p * s
        };
        for y in [1.1, 1.5, 1.9] {
            let pt = bg.eval_plus(y);
            let t = pt.t;
            let a = pt.p * pt.rho.powf(-gamma);
            let p_xx = -mu * mu * gamma * pt.p * t * t * (1.0 + gamma * t)
                / (1.0 - t).powi(3);
            let h = 1e-6;
            let channels = [
                (h, 0.0, 0.0, mu * mu * d2(t, gamma)),
                (0.0, h, 0.0, mu * mu * pt.rho.powf(gamma) * d4(t, gamma)),
                (0.0, 0.0, h, mu * mu * pt.rho * d3(t, gamma)),
            ];
            for (dp, da, de, expect) in channels {
                let hi = n_op(pt.p + dp, a + da, pt.e + de, pt.p_x, p_xx);
                let lo = n_op(pt.p - dp, a - da, pt.e - de, pt.p_x, p_xx);
                let fd = (hi - lo) / (2.0 * h) / pt.c2;
                assert!(
                    (fd - expect).abs() < 1e-6 * expect.abs().max(1e-3),
                    "channel at y={y}: fd {fd} vs model {expect}"
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

        /// The plane-shock map satisfies the jump conditions, compresses,
        /// and lands subsonic with increased entropy for any admissible
        /// supersonic upstream state.
        #[test]
        fn normal_shock_jump_conditions_hold(
            gamma in 1.1f64..1.8,
            t in 1.2f64..6.0,
            p in 0.5f64..2.0,
            rho in 0.5f64..2.0,
        ) {
            let gas = GasParams::new(gamma, 0.05).unwrap();
            let u = (t * gamma * p / rho).sqrt();
            let up = PrimitiveState { p, rho, u: [u, 0.0, 0.0] };
            let dn = normal_shock(&up, &gas).unwrap();
            let r = rh_residual(&up, &dn, [1.0, 0.0, 0.0], &gas);
            prop_assert!(r.sup() < 1e-10 * (p + rho * u * u));
            prop_assert!(r.pressure_jump > 0.0);
            prop_assert!(mach_squared(&dn, gamma) < 1.0);
            prop_assert!(dn.p * dn.rho.powf(-gamma) > up.p * up.rho.powf(-gamma));
        }

        /// The trace-system determinant identity holds for any subsonic
        /// state: det M = (c² − u²)/(γ − 1).
        #[test]
        fn trace_determinant_identity(
            gamma in 1.1f64..1.8,
            t in 0.05f64..0.9,
            p in 0.5f64..2.0,
            rho in 0.5f64..2.0,
        ) {
            let c2 = gamma * p / rho;
            let u = (t * c2).sqrt();
            let m = [
                [2.0 * rho * u, 1.0, u * u],
                [rho, 0.0, u],
                [u, gamma / ((gamma - 1.0) * rho), -c2 / ((gamma - 1.0) * rho)],
            ];
            let det = det3(&m);
            let closed = (c2 - u * u) / (gamma - 1.0);
            prop_assert!((det / closed - 1.0).abs() < 1e-10);
        }
    }
}
