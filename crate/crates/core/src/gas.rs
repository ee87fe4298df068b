//! Polytropic-gas thermodynamics and residual evaluation:
//!
//! - state containers for primitive variables `(p, ρ, u)` and for the
//!   characteristic unknowns `(p, A, E, u')` where `A = p·ρ^{−γ}` is the
//!   entropy function and `E` the Bernoulli quantity,
//! - conversions between the two (the axial velocity is recovered from `E`
//!   with the positive sign, matching flow in the `+x⁰` direction),
//! - pointwise steady Euler residuals with the friction body force
//!   `𝔟 = (−μ(u⁰)², 0, 0)` on structured grids,
//! - jump-condition residuals across a shock surface with a prescribed
//!   normal, including the entropy-condition pressure jump.

use crate::ode::fd_weights;
use thiserror::Error;

/// Errors from state validation and conversion.
#[derive(Debug, Error)]
pub enum GasError {
    /// A quantity that must be strictly positive was not.
    #[error("{what} must be positive (got {value})")]
    NonPositive { what: &'static str, value: f64 },
    /// The characteristic state has no real axial velocity.
    #[error("state not realizable: axial-velocity radicand {radicand} < 0")]
    StateNotRealizable { radicand: f64 },
    /// The sampling grid cannot support the 4th-order stencils.
    #[error("grid too coarse for 4th-order stencils: axis {axis} has {got} nodes, needs {needed}")]
    GridTooCoarse {
        axis: &'static str,
        needed: usize,
        got: usize,
    },
}

/// Adiabatic exponent and friction coefficient of the duct gas model.
#[derive(Debug, Clone, Copy)]
pub struct GasParams {
    /// Adiabatic exponent γ > 1.
    pub gamma: f64,
    /// Friction coefficient μ ≥ 0 (inverse length).
    pub mu: f64,
}

impl GasParams {
    /// Validated constructor.
    pub fn new(gamma: f64, mu: f64) -> Result<Self, GasError> {
        if !(gamma > 1.0) {
            return Err(GasError::NonPositive {
                what: "gamma - 1",
                value: gamma - 1.0,
            });
        }
        if !(mu >= 0.0) {
            return Err(GasError::NonPositive {
                what: "mu",
                value: mu,
            });
        }
        Ok(Self { gamma, mu })
    }
}

/// Primitive flow state: pressure, density, and velocity `(u⁰, u¹, u²)`.
#[derive(Debug, Clone, Copy)]
pub struct PrimitiveState {
    /// Pressure, > 0.
    pub p: f64,
    /// Density, > 0.
    pub rho: f64,
    /// Velocity vector, axial component first.
    pub u: [f64; 3],
}

/// Characteristic flow state: pressure, entropy function `A = p·ρ^{−γ}`,
/// Bernoulli quantity `E`, and the tangential velocity pair.
#[derive(Debug, Clone, Copy)]
pub struct CharacteristicState {
    /// Pressure, > 0.
    pub p: f64,
    /// Entropy function `A = p·ρ^{−γ}`, > 0.
    pub a: f64,
    /// Bernoulli quantity `E = |u|²/2 + γp/((γ−1)ρ)`.
    pub e: f64,
    /// Tangential velocity `(u¹, u²)`.
    pub u_t: [f64; 2],
}

/// Sonic speed `c = √(γ p / ρ)`.
pub fn sound_speed(p: f64, rho: f64, gamma: f64) -> Result<f64, GasError> {
    if p <= 0.0 {
        return Err(GasError::NonPositive { what: "p", value: p });
    }
    if rho <= 0.0 {
        return Err(GasError::NonPositive {
            what: "rho",
            value: rho,
        });
    }
    Ok((gamma * p / rho).sqrt())
}

/// Bernoulli quantity `E = |u|²/2 + γ p / ((γ−1) ρ)`.
pub fn bernoulli(p: f64, rho: f64, u: [f64; 3], gamma: f64) -> Result<f64, GasError> {
    if rho <= 0.0 {
        return Err(GasError::NonPositive {
            what: "rho",
            value: rho,
        });
    }
    let speed2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    Ok(0.5 * speed2 + gamma / (gamma - 1.0) * p / rho)
}

impl CharacteristicState {
    /// Forward conversion from a primitive state.
    pub fn from_primitive(s: &PrimitiveState, gamma: f64) -> Result<Self, GasError> {
        if s.p <= 0.0 {
            return Err(GasError::NonPositive { what: "p", value: s.p });
        }
        if s.rho <= 0.0 {
            return Err(GasError::NonPositive {
                what: "rho",
                value: s.rho,
            });
        }
        Ok(Self {
            p: s.p,
            a: s.p * s.rho.powf(-gamma),
            e: bernoulli(s.p, s.rho, s.u, gamma)?,
            u_t: [s.u[1], s.u[2]],
        })
    }
}

/// Inverts the characteristic unknowns: `ρ = (p/A)^{1/γ}` and the axial
/// velocity `u⁰ = +√(2E − 2γp/((γ−1)ρ) − |u'|²)` (positive root).
pub fn recover_primitive(cs: &CharacteristicState, gamma: f64) -> Result<PrimitiveState, GasError> {
    if cs.a <= 0.0 {
        return Err(GasError::NonPositive {
            what: "A",
            value: cs.a,
        });
    }
    if cs.p <= 0.0 {
        return Err(GasError::NonPositive { what: "p", value: cs.p });
    }
    let rho = (cs.p / cs.a).powf(1.0 / gamma);
    let radicand =
        2.0 * cs.e - 2.0 * gamma / (gamma - 1.0) * cs.p / rho - cs.u_t[0] * cs.u_t[0]
            - cs.u_t[1] * cs.u_t[1];
    if radicand < 0.0 {
        return Err(GasError::StateNotRealizable { radicand });
    }
    Ok(PrimitiveState {
        p: cs.p,
        rho,
        u: [radicand.sqrt(), cs.u_t[0], cs.u_t[1]],
    })
}

/// Sup-norms of the five steady-Euler residual components.
#[derive(Debug, Clone, Copy, Default)]
pub struct ResidualNorms {
    /// Momentum residuals, axial component first.
    pub momentum: [f64; 3],
    /// Mass residual.
    pub mass: f64,
    /// Energy residual.
    pub energy: f64,
}

impl ResidualNorms {
    /// Largest of the five component norms.
    pub fn sup(&self) -> f64 {
        self.momentum
            .iter()
            .copied()
            .fold(self.mass.max(self.energy), f64::max)
    }
}

/// A structured sampling of primitive states: `nx` axial stations spaced
/// `hx` apart, each carrying an `nt × nt` periodic tangential grid
/// (spacing 2π/nt). `nt = 1` degenerates to a one-dimensional profile.
/// Storage is row-major with the axial index slowest.
#[derive(Debug, Clone, Copy)]
pub struct GridShape {
    /// Number of axial stations (≥ 5).
    pub nx: usize,
    /// Axial spacing.
    pub hx: f64,
    /// Tangential nodes per direction (≥ 5, or exactly 1 for 1D data).
    pub nt: usize,
}

/// Pointwise steady Euler residuals with friction on a structured grid:
/// divergence of the mass/momentum/energy fluxes minus the friction source,
/// evaluated with 4th-order stencils (centered inside, one-sided at the
/// axial ends, periodic wrap tangentially). Returns sup-norms per component.
pub fn euler_residual(
    states: &[PrimitiveState],
    shape: GridShape,
    gas: &GasParams,
) -> Result<ResidualNorms, GasError> {
    let GridShape { nx, hx, nt } = shape;
    if nx < 5 {
        return Err(GasError::GridTooCoarse {
            axis: "x0",
            needed: 5,
            got: nx,
        });
    }
    if nt != 1 && nt < 5 {
        return Err(GasError::GridTooCoarse {
            axis: "tangential",
            needed: 5,
            got: nt,
        });
    }
    assert_eq!(states.len(), nx * nt * nt, "state count mismatch");
    let gamma = gas.gamma;
    let mu = gas.mu;

    // Flux components per node: for each conservation law, the axial flux
    // and the two tangential fluxes.
    let n_nodes = states.len();
    let mut flux = vec![[0.0_f64; 15]; n_nodes];
    let mut source = vec![[0.0_f64; 5]; n_nodes];
    for (k, s) in states.iter().enumerate() {
        let [u0, u1, u2] = s.u;
        let rho = s.rho;
        let p = s.p;
        let e = bernoulli(p, rho, s.u, gamma)?;
        // Rows: mass, momentum0, momentum1, momentum2, energy.
        let rows = [
            [rho * u0, rho * u1, rho * u2],
            [rho * u0 * u0 + p, rho * u0 * u1, rho * u0 * u2],
            [rho * u1 * u0, rho * u1 * u1 + p, rho * u1 * u2],
            [rho * u2 * u0, rho * u2 * u1, rho * u2 * u2 + p],
            [rho * e * u0, rho * e * u1, rho * e * u2],
        ];
        for (r, row) in rows.iter().enumerate() {
            flux[k][3 * r] = row[0];
            flux[k][3 * r + 1] = row[1];
            flux[k][3 * r + 2] = row[2];
        }
        // Friction enters the axial momentum and the energy balance.
        source[k] = [0.0, mu * rho * u0 * u0, 0.0, 0.0, mu * rho * u0 * u0 * u0];
    }

    // Axial derivative stencils (4th order): one central, four one-sided.
    let xs: Vec<f64> = (0..5).map(|i| i as f64 * hx).collect();
    let w_c = fd_weights(&[-2.0 * hx, -hx, 0.0, hx, 2.0 * hx], 0.0, 1);
    let w_l0 = fd_weights(&xs, 0.0, 1);
    let w_l1 = fd_weights(&xs, hx, 1);
    let w_r1 = fd_weights(&xs, 3.0 * hx, 1);
    let w_r0 = fd_weights(&xs, 4.0 * hx, 1);
    let ht = 2.0 * std::f64::consts::PI / nt as f64;
    let w_t = if nt > 1 {
        fd_weights(&[-2.0 * ht, -ht, 0.0, ht, 2.0 * ht], 0.0, 1)
    } else {
        vec![0.0; 5]
    };

    let idx = |i: usize, j: usize, k: usize| (i * nt + j) * nt + k;
    let mut norms = ResidualNorms::default();
    for i in 0..nx {
        // Axial stencil selection.
        let (offs, w): (Vec<usize>, &Vec<f64>) = if i >= 2 && i + 2 < nx {
            ((i - 2..=i + 2).collect(), &w_c)
        } else if i == 0 {
            ((0..5).collect(), &w_l0)
        } else if i == 1 {
            ((0..5).collect(), &w_l1)
        } else if i + 2 == nx {
            ((nx - 5..nx).collect(), &w_r1)
        } else {
            ((nx - 5..nx).collect(), &w_r0)
        };
        for j in 0..nt {
            for k in 0..nt {
                for r in 0..5 {
                    let mut res = source[idx(i, j, k)][r];
                    for (o, wx) in offs.iter().zip(w.iter()) {
                        res += wx * flux[idx(*o, j, k)][3 * r];
                    }
                    if nt > 1 {
                        for (d, wt) in (-2_i64..=2).zip(w_t.iter()) {
                            let jj = (j as i64 + d).rem_euclid(nt as i64) as usize;
                            let kk = (k as i64 + d).rem_euclid(nt as i64) as usize;
                            res += wt * flux[idx(i, jj, k)][3 * r + 1];
                            res += wt * flux[idx(i, j, kk)][3 * r + 2];
                        }
                    }
                    let res = res.abs();
                    match r {
                        0 => norms.mass = norms.mass.max(res),
                        1 => norms.momentum[0] = norms.momentum[0].max(res),
                        2 => norms.momentum[1] = norms.momentum[1].max(res),
                        3 => norms.momentum[2] = norms.momentum[2].max(res),
                        _ => norms.energy = norms.energy.max(res),
                    }
                }
            }
        }
    }
    Ok(norms)
}

/// Jump-condition residuals across a surface with normal `n`:
/// momentum `[ρ(u·n)u + p n]`, mass `[ρ(u·n)]`, energy `[ρ(u·n)E]`, and the
/// entropy-condition pressure jump `[p]` (all jumps downstream − upstream).
#[derive(Debug, Clone, Copy)]
pub struct RhResidual {
    /// Momentum jump residual.
    pub momentum: [f64; 3],
    /// Mass flux jump residual.
    pub mass: f64,
    /// Energy flux jump residual.
    pub energy: f64,
    /// Pressure jump `p_downstream − p_upstream` (must be > 0 for a
    /// physical compression shock).
    pub pressure_jump: f64,
}

impl RhResidual {
    /// Largest jump residual magnitude (excluding the pressure jump, which
    /// is a sign diagnostic rather than a residual).
    pub fn sup(&self) -> f64 {
        self.momentum
            .iter()
            .map(|v| v.abs())
            .fold(self.mass.abs().max(self.energy.abs()), f64::max)
    }
}

/// Evaluates the jump-condition residuals between an upstream state `left`
/// and a downstream state `right` across a surface with (non-normalized)
/// normal `n`.
pub fn rh_residual(
    left: &PrimitiveState,
    right: &PrimitiveState,
    normal: [f64; 3],
    gas: &GasParams,
) -> RhResidual {
    let flux = |s: &PrimitiveState| {
        let un = s.u[0] * normal[0] + s.u[1] * normal[1] + s.u[2] * normal[2];
        let m = s.rho * un;
        let e = bernoulli(s.p, s.rho, s.u, gas.gamma).expect("positive state");
        (
            [
                m * s.u[0] + s.p * normal[0],
                m * s.u[1] + s.p * normal[1],
                m * s.u[2] + s.p * normal[2],
            ],
            m,
            m * e,
        )
    };
    let (mom_l, mass_l, en_l) = flux(left);
    let (mom_r, mass_r, en_r) = flux(right);
    RhResidual {
        momentum: [
            mom_r[0] - mom_l[0],
            mom_r[1] - mom_l[1],
            mom_r[2] - mom_l[2],
        ],
        mass: mass_r - mass_l,
        energy: en_r - en_l,
        pressure_jump: right.p - left.p,
    }
}
