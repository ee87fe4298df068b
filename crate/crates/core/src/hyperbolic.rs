//! Hyperbolic and transport machinery for the perturbed flow:
//!
//! - [`march_supersonic`] advances the steady frictional Euler system in
//!   the duct direction, treating the axial coordinate as time-like (valid
//!   while the axial velocity stays supersonic). State per cross-section:
//!   `(p, u⁰, u¹, u², A)` with `ρ = (p/A)^{1/γ}`; tangential derivatives
//!   are spectral with 2/3-rule dealiasing; stations store value and slope
//!   for Hermite evaluation between steps.
//! - [`trace_streamlines`] integrates the downstream streamline field from
//!   seeds on the shock-trace cross-section and builds forward and inverse
//!   displacement maps per station.
//! - [`transport_scalar`] pulls boundary data along those streamlines and
//!   accumulates damped source integrals, fourth-order in the station
//!   spacing.
//! - [`solve_divcurl`] reconstructs a cross-section vector field from its
//!   divergence, curl, and prescribed means via two Poisson solves.

use std::cell::Cell;

use crate::fields::{mode_list, CylinderField, TorusField, TorusSpectrum};
use crate::gas::GasParams;
use crate::ode::{classic_rk4, cumulative_integral_uniform, hermite_eval, RkScratch};
use crate::tol;
use thiserror::Error;

/// Errors from the marching and transport solvers.
#[derive(Debug, Error)]
pub enum HyperbolicError {
    /// The axial velocity stopped being supersonic during the march.
    #[error("axial velocity no longer supersonic near x = {x:.6} (margin {margin:.3e})")]
    LostSupersonic { x: f64, margin: f64 },
    /// A state component that must stay positive did not.
    #[error("non-positive state during march near x = {x:.6}: {what} = {value:.6e}")]
    NonPositiveState {
        x: f64,
        what: &'static str,
        value: f64,
    },
    /// The advection speed dropped below the positivity floor.
    #[error("advection speed too small for streamline tracing: min ũ⁰ = {min_ut:.6e}")]
    StagnantStream { min_ut: f64 },
    /// Streamlines wandered farther than the displacement expansion allows.
    #[error("streamline displacement {sup:.3e} exceeds the expansion radius {radius:.3e}")]
    ExcessiveDrift { sup: f64, radius: f64 },
    /// Divergence/curl data with non-vanishing means cannot come from a
    /// periodic cross-section field.
    #[error("incompatible cross-section data: div mean {div_mean:.3e}, curl mean {curl_mean:.3e}")]
    IncompatibleMeans { div_mean: f64, curl_mean: f64 },
    /// Input fields disagree in shape or span.
    #[error("field shapes disagree: {reason}")]
    ShapeMismatch { reason: String },
}

/// Per-direction dealiasing cutoff for the 2/3 rule at grid size `n`.
pub fn dealias_cutoff(n: usize) -> usize {
    2 * (n / 2) / 3
}

fn truncate_spectrum(spec: &mut TorusSpectrum, cutoff: usize) {
    for (block, m1, m2) in mode_list(spec.h()) {
        if m1 > cutoff || m2 > cutoff {
            spec.set(block, m1, m2, 0.0);
        }
    }
}

/// Zeroes all modes above the 2/3 cutoff of a field.
pub fn dealias_field(field: &TorusField) -> TorusField {
    let mut spec = field.analyze();
    truncate_spectrum(&mut spec, dealias_cutoff(field.n()));
    spec.synthesize()
}

/// Marched supersonic flow: stations with values and axial slopes of
/// `(p, u⁰, u¹, u², A)`, Hermite-interpolable between stations.
#[derive(Debug, Clone)]
pub struct MarchedFlow {
    /// Station positions, uniform from `0` to the march end.
    pub xs: Vec<f64>,
    /// Cross-section fields per station.
    pub stations: Vec<[TorusField; 5]>,
    /// Axial slopes per station, from the marching equations.
    pub slopes: Vec<[TorusField; 5]>,
    /// Spectral energy fraction of the inlet above the dealiasing cutoff
    /// (content the march cannot represent).
    pub truncated_inlet_energy: f64,
}

impl MarchedFlow {
    /// Cross-section grid size.
    pub fn n(&self) -> usize {
        self.stations[0][0].n()
    }

    /// End of the marched span.
    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn interval(&self, x: f64) -> (usize, f64, f64) {
        let h = self.xs[1] - self.xs[0];
        let i = ((x - self.xs[0]) / h).floor() as isize;
        let i = i.clamp(0, self.xs.len() as isize - 2) as usize;
        (i, self.xs[i], self.xs[i + 1])
    }

    /// Hermite evaluation of all five components at axial position `x`.
    pub fn eval(&self, x: f64) -> [TorusField; 5] {
        let (i, x0, x1) = self.interval(x);
        let n = self.n();
        std::array::from_fn(|c| {
            TorusField::from_fn(n, |_, _| 0.0).clone_with(|j1, j2| {
                hermite_eval(
                    x0,
                    x1,
                    self.stations[i][c].at(j1, j2),
                    self.stations[i + 1][c].at(j1, j2),
                    self.slopes[i][c].at(j1, j2),
                    self.slopes[i + 1][c].at(j1, j2),
                    x,
                )
            })
        })
    }

    /// Hermite evaluation of the axial derivative of all five components.
    pub fn eval_deriv(&self, x: f64) -> [TorusField; 5] {
        let (i, x0, x1) = self.interval(x);
        let n = self.n();
        std::array::from_fn(|c| {
            TorusField::from_fn(n, |_, _| 0.0).clone_with(|j1, j2| {
                crate::ode::hermite_eval_deriv(
                    x0,
                    x1,
                    self.stations[i][c].at(j1, j2),
                    self.stations[i + 1][c].at(j1, j2),
                    self.slopes[i][c].at(j1, j2),
                    self.slopes[i + 1][c].at(j1, j2),
                    x,
                )
            })
        })
    }
}

/// Helper extension used to build fields by node index.
trait CloneWith {
    fn clone_with(&self, f: impl Fn(usize, usize) -> f64) -> TorusField;
}

impl CloneWith for TorusField {
    fn clone_with(&self, f: impl Fn(usize, usize) -> f64) -> TorusField {
        let n = self.n();
        let mut out = TorusField::new(n);
        for j1 in 0..n {
            for j2 in 0..n {
                *out.at_mut(j1, j2) = f(j1, j2);
            }
        }
        out
    }
}

struct MarchWorkspace {
    n: usize,
    cutoff: usize,
}

impl MarchWorkspace {
    fn rhs(
        &self,
        x: f64,
        state: &[f64],
        out: &mut [f64],
        gas: &GasParams,
        fault: &Cell<Option<HyperbolicError>>,
    ) {
        if fault.get_ref_is_some() {
            out.fill(0.0);
            return;
        }
        let n = self.n;
        let nn = n * n;
        let gamma = gas.gamma;
        let mu = gas.mu;
        let comp = |c: usize| &state[c * nn..(c + 1) * nn];
        let mut fields: Vec<TorusField> = Vec::with_capacity(5);
        for c in 0..5 {
            let mut f = TorusField::new(n);
            f.values_mut().copy_from_slice(comp(c));
            fields.push(f);
        }
        // Positivity and supersonicity.
        let mut rho = TorusField::new(n);
        let mut c2 = TorusField::new(n);
        for j in 0..nn {
            let p = fields[0].values()[j];
            let a = fields[4].values()[j];
            let u0 = fields[1].values()[j];
            if p <= 0.0 || a <= 0.0 {
                fault.set(Some(HyperbolicError::NonPositiveState {
                    x,
                    what: if p <= 0.0 { "p" } else { "A" },
                    value: p.min(a),
                }));
                out.fill(0.0);
                return;
            }
            let r = (p / a).powf(1.0 / gamma);
            let cc = gamma * p / r;
            rho.values_mut()[j] = r;
            c2.values_mut()[j] = cc;
            if u0 * u0 <= cc * (1.0 + tol::TOL_SONIC) {
                fault.set(Some(HyperbolicError::LostSupersonic {
                    x,
                    margin: u0 * u0 - cc,
                }));
                out.fill(0.0);
                return;
            }
        }

        // Spectral tangential derivatives.
        let specs: Vec<TorusSpectrum> = fields.iter().map(|f| f.analyze()).collect();
        let d = |c: usize, dir: usize| specs[c].deriv(dir).synthesize();
        let p_t = [d(0, 0), d(0, 1)];
        let u0_t = [d(1, 0), d(1, 1)];
        let u1_t = [d(2, 0), d(2, 1)];
        let u2_t = [d(3, 0), d(3, 1)];
        let a_t = [d(4, 0), d(4, 1)];
        // Tangential mass-flux divergence ∂_β(ρ u^β).
        let flux_div = {
            let mut f1 = TorusField::new(n);
            let mut f2 = TorusField::new(n);
            for j in 0..nn {
                f1.values_mut()[j] = rho.values()[j] * fields[2].values()[j];
                f2.values_mut()[j] = rho.values()[j] * fields[3].values()[j];
            }
            let mut div = f1.analyze().deriv(0).synthesize();
            div.axpy(1.0, &f2.analyze().deriv(1).synthesize());
            div
        };

        let mut rhs_fields: Vec<TorusField> = (0..5).map(|_| TorusField::new(n)).collect();
        for j in 0..nn {
            let u0 = fields[1].values()[j];
            let u1 = fields[2].values()[j];
            let u2 = fields[3].values()[j];
            let a = fields[4].values()[j];
            let r = rho.values()[j];
            let cc = c2.values()[j];

            let da = -(u1 * a_t[0].values()[j] + u2 * a_t[1].values()[j]) / u0;
            let du1 = (-p_t[0].values()[j] / r - u1 * u1_t[0].values()[j]
                - u2 * u1_t[1].values()[j])
                / u0;
            let du2 = (-p_t[1].values()[j] / r - u1 * u2_t[0].values()[j]
                - u2 * u2_t[1].values()[j])
                / u0;
            // Coupled axial momentum and mass rows:
            //   ρ ∂₀u⁰ + (u⁰/c²) ∂₀p = R₁, ρu⁰ ∂₀u⁰ + ∂₀p = R₂.
            let r1 = -flux_div.values()[j] + u0 * r / (gamma * a) * da;
            let r2 = -mu * r * u0 * u0 - r * (u1 * u0_t[0].values()[j] + u2 * u0_t[1].values()[j]);
            let det = r * (cc - u0 * u0) / cc;
            let du0 = (r1 - r2 * u0 / cc) / det;
            let dp = r * (r2 - u0 * r1) / det;

            rhs_fields[0].values_mut()[j] = dp;
            rhs_fields[1].values_mut()[j] = du0;
            rhs_fields[2].values_mut()[j] = du1;
            rhs_fields[3].values_mut()[j] = du2;
            rhs_fields[4].values_mut()[j] = da;
        }
        for (c, f) in rhs_fields.iter().enumerate() {
            let mut spec = f.analyze();
            truncate_spectrum(&mut spec, self.cutoff);
            out[c * nn..(c + 1) * nn].copy_from_slice(spec.synthesize().values());
        }
    }
}

/// Tiny adapter: `Cell<Option<E>>` without `take`-and-restore noise.
trait CellProbe {
    fn get_ref_is_some(&self) -> bool;
}

impl CellProbe for Cell<Option<HyperbolicError>> {
    fn get_ref_is_some(&self) -> bool {
        let v = self.take();
        let some = v.is_some();
        self.set(v);
        some
    }
}

/// Marches the steady Euler system from inlet data `(p, u⁰, u¹, u², A)` at
/// `x = 0` up to `x_max`. The step count is `max(256, ⌈x_max/0.002⌉)`.
/// Inlet content above the dealiasing cutoff is discarded and reported.
pub fn march_supersonic(
    inlet: &[TorusField; 5],
    x_max: f64,
    gas: &GasParams,
) -> Result<MarchedFlow, HyperbolicError> {
    let n = inlet[0].n();
    if inlet.iter().any(|f| f.n() != n) {
        return Err(HyperbolicError::ShapeMismatch {
            reason: "inlet components on different grids".into(),
        });
    }
    if !(x_max > 0.0) {
        return Err(HyperbolicError::ShapeMismatch {
            reason: format!("march span must be positive, got {x_max}"),
        });
    }
    let n_march = 256.max((x_max / 0.002).ceil() as usize);
    let h = x_max / n_march as f64;
    let nn = n * n;
    let ws = MarchWorkspace {
        n,
        cutoff: dealias_cutoff(n),
    };
    let fault: Cell<Option<HyperbolicError>> = Cell::new(None);

    // Dealias the inlet and record the discarded energy share.
    let mut state = vec![0.0; 5 * nn];
    let mut truncated = 0.0_f64;
    for (c, f) in inlet.iter().enumerate() {
        let mut spec = f.analyze();
        let clean = {
            truncate_spectrum(&mut spec, ws.cutoff);
            spec.synthesize()
        };
        let mut removed = f.clone();
        removed.axpy(-1.0, &clean);
        let scale = f.sup_norm().max(1e-300);
        truncated = truncated.max(removed.sup_norm() / scale);
        state[c * nn..(c + 1) * nn].copy_from_slice(clean.values());
    }

    let rk = classic_rk4();
    let mut scratch = RkScratch::default();
    let mut xs = Vec::with_capacity(n_march + 1);
    let mut stations = Vec::with_capacity(n_march + 1);
    let mut slopes = Vec::with_capacity(n_march + 1);

    let snapshot = |state: &[f64]| -> [TorusField; 5] {
        std::array::from_fn(|c| {
            let mut f = TorusField::new(n);
            f.values_mut().copy_from_slice(&state[c * nn..(c + 1) * nn]);
            f
        })
    };

    let mut slope_buf = vec![0.0; 5 * nn];
    for i in 0..=n_march {
        let x = i as f64 * h;
        ws.rhs(x, &state, &mut slope_buf, gas, &fault);
        if let Some(err) = fault.take() {
            return Err(err);
        }
        xs.push(x);
        stations.push(snapshot(&state));
        slopes.push(snapshot(&slope_buf));
        if i < n_march {
            let mut f =
                |x: f64, y: &[f64], dy: &mut [f64]| ws.rhs(x, y, dy, gas, &fault);
            rk.step(x, &mut state, h, &mut scratch, &mut f);
            if let Some(err) = fault.take() {
                return Err(err);
            }
        }
    }
    Ok(MarchedFlow {
        xs,
        stations,
        slopes,
        truncated_inlet_energy: truncated,
    })
}

/// Third-order local expansion of a cross-section field, for evaluation at
/// node-plus-small-displacement points.
struct LocalExpansion {
    terms: [TorusField; 10],
}

impl LocalExpansion {
    fn new(field: &TorusField) -> Self {
        let s = field.analyze();
        let s1 = s.deriv(0);
        let s2 = s.deriv(1);
        let s11 = s1.deriv(0);
        let s12 = s1.deriv(1);
        let s22 = s2.deriv(1);
        let terms = [
            s.synthesize(),
            s1.synthesize(),
            s2.synthesize(),
            s11.synthesize(),
            s12.synthesize(),
            s22.synthesize(),
            s11.deriv(0).synthesize(),
            s11.deriv(1).synthesize(),
            s12.deriv(1).synthesize(),
            s22.deriv(1).synthesize(),
        ];
        Self { terms }
    }

    /// Value at node `(j1, j2)` displaced by `(d1, d2)`.
    fn eval(&self, j1: usize, j2: usize, d1: f64, d2: f64) -> f64 {
        let t = &self.terms;
        t[0].at(j1, j2)
            + d1 * t[1].at(j1, j2)
            + d2 * t[2].at(j1, j2)
            + 0.5 * (d1 * d1 * t[3].at(j1, j2) + d2 * d2 * t[5].at(j1, j2))
            + d1 * d2 * t[4].at(j1, j2)
            + (d1 * d1 * d1 * t[6].at(j1, j2)
                + 3.0 * d1 * d1 * d2 * t[7].at(j1, j2)
                + 3.0 * d1 * d2 * d2 * t[8].at(j1, j2)
                + d2 * d2 * d2 * t[9].at(j1, j2))
                / 6.0
    }
}

/// Streamline geometry of the downstream flow on `[r_b, L] × 𝕋²`: forward
/// displacement per station (seed grid) and inverse displacement per
/// station (node grid), plus the advection speed sampled along each path.
pub struct Streamlines {
    /// Station positions (the axial grid of the velocity fields).
    pub xs: Vec<f64>,
    /// Forward displacements `(Φ_i − id)` on the seed grid.
    pub forward: Vec<[TorusField; 2]>,
    /// Inverse displacements `(Φ_i⁻¹ − id)` on the node grid.
    pub inverse: Vec<[TorusField; 2]>,
    /// Advection speed `ũ⁰` along each path, per station on the seed grid.
    pub ut_along: Vec<TorusField>,
    /// Largest displacement encountered (diagnostic).
    pub max_displacement: f64,
    /// Worst defect of the inverse map composition (diagnostic).
    pub inverse_defect: f64,
}

fn slice_at(field: &CylinderField, x: f64) -> TorusField {
    let (x_lo, x_hi) = field.span();
    let xc = x.clamp(x_lo, x_hi);
    field.eval_slice(xc)
}

/// Traces streamlines `dy^β/dy⁰ = u^β/ũ⁰` from seeds at every node of the
/// first station of the velocity grids. All three fields must share the
/// grid. Fails when the advection speed is not positively bounded or when
/// displacements exceed the safe expansion radius.
pub fn trace_streamlines(
    ut: &CylinderField,
    u1: &CylinderField,
    u2: &CylinderField,
) -> Result<Streamlines, HyperbolicError> {
    let n0 = ut.n0();
    let n = ut.n();
    for f in [u1, u2] {
        if f.n0() != n0 || f.n() != n || f.span() != ut.span() {
            return Err(HyperbolicError::ShapeMismatch {
                reason: "velocity components on different grids".into(),
            });
        }
    }
    let min_ut = ut.values().iter().cloned().fold(f64::INFINITY, f64::min);
    if min_ut <= 0.0 {
        return Err(HyperbolicError::StagnantStream { min_ut });
    }
    let h = ut.spacing();
    let (x_lo, _) = ut.span();
    let nn = n * n;
    // Safe radius for the third-order displacement expansion: a quarter of
    // the tangential grid spacing.
    let radius = 0.25 * (2.0 * std::f64::consts::PI / n as f64);

    // State: displacements (d1, d2) for all seeds, flattened.
    let mut state = vec![0.0_f64; 2 * nn];
    let rk = classic_rk4();
    let mut scratch = RkScratch::default();

    let mut forward = Vec::with_capacity(n0);
    let mut ut_along = Vec::with_capacity(n0);
    let mut max_disp = 0.0_f64;

    let sample = |x: f64, state: &[f64], out_ut: Option<&mut TorusField>| {
        let ut_s = LocalExpansion::new(&slice_at(ut, x));
        let u1_s = LocalExpansion::new(&slice_at(u1, x));
        let u2_s = LocalExpansion::new(&slice_at(u2, x));
        let mut rates = vec![0.0_f64; 2 * nn];
        let mut ut_field = TorusField::new(n);
        for j1 in 0..n {
            for j2 in 0..n {
                let k = j1 * n + j2;
                let d1 = state[k];
                let d2 = state[nn + k];
                let adv = ut_s.eval(j1, j2, d1, d2);
                rates[k] = u1_s.eval(j1, j2, d1, d2) / adv;
                rates[nn + k] = u2_s.eval(j1, j2, d1, d2) / adv;
                *ut_field.at_mut(j1, j2) = adv;
            }
        }
        if let Some(dst) = out_ut {
            *dst = ut_field;
        }
        rates
    };

    for i in 0..n0 {
        let x = x_lo + i as f64 * h;
        let mut ut_here = TorusField::new(n);
        sample(x, &state, Some(&mut ut_here));
        let min_here = ut_here
            .values()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_here <= 0.0 {
            return Err(HyperbolicError::StagnantStream { min_ut: min_here });
        }
        ut_along.push(ut_here);
        let mut d1 = TorusField::new(n);
        let mut d2 = TorusField::new(n);
        d1.values_mut().copy_from_slice(&state[..nn]);
        d2.values_mut().copy_from_slice(&state[nn..]);
        let sup = d1.sup_norm().max(d2.sup_norm());
        max_disp = max_disp.max(sup);
        if sup > radius {
            return Err(HyperbolicError::ExcessiveDrift { sup, radius });
        }
        forward.push([d1, d2]);

        if i + 1 < n0 {
            let mut f = |x: f64, y: &[f64], dy: &mut [f64]| {
                let rates = sample(x, y, None);
                dy.copy_from_slice(&rates);
            };
            rk.step(x, &mut state, h, &mut scratch, &mut f);
        }
    }

    // Inverse displacements by fixed-point iteration: s = node − d(s).
    let mut inverse = Vec::with_capacity(n0);
    let mut inverse_defect = 0.0_f64;
    for disp in &forward {
        let e1 = LocalExpansion::new(&disp[0]);
        let e2 = LocalExpansion::new(&disp[1]);
        let mut inv1 = TorusField::new(n);
        let mut inv2 = TorusField::new(n);
        for j1 in 0..n {
            for j2 in 0..n {
                let mut s1 = 0.0_f64;
                let mut s2 = 0.0_f64;
                for _ in 0..12 {
                    s1 = -e1.eval(j1, j2, s1, s2);
                    s2 = -e2.eval(j1, j2, s1, s2);
                }
                *inv1.at_mut(j1, j2) = s1;
                *inv2.at_mut(j1, j2) = s2;
                let r1 = s1 + e1.eval(j1, j2, s1, s2);
                let r2 = s2 + e2.eval(j1, j2, s1, s2);
                inverse_defect = inverse_defect.max(r1.abs().max(r2.abs()));
            }
        }
        inverse.push([inv1, inv2]);
    }

    Ok(Streamlines {
        xs: (0..n0).map(|i| x_lo + i as f64 * h).collect(),
        forward,
        inverse,
        ut_along,
        max_displacement: max_disp,
        inverse_defect,
    })
}

/// Transports boundary data from the first station along the streamlines,
/// solving `dT/dy⁰ + κT = source/ũ⁰` per path:
/// `T(y) = e^{−κ(y−r_b)}·[T_bd(foot) + ∫ e^{κ(τ−r_b)}·source/ũ⁰ dτ]`.
///
/// The source field, when present, must live on the streamline grid. The
/// result is a field on the same grid.
pub fn transport_scalar(
    streams: &Streamlines,
    boundary: &TorusField,
    damping: f64,
    source: Option<&CylinderField>,
) -> Result<CylinderField, HyperbolicError> {
    let n0 = streams.xs.len();
    let n = boundary.n();
    if streams.forward[0][0].n() != n {
        return Err(HyperbolicError::ShapeMismatch {
            reason: "boundary data grid differs from streamline grid".into(),
        });
    }
    let x_lo = streams.xs[0];
    let x_hi = *streams.xs.last().unwrap();
    let h = streams.xs[1] - streams.xs[0];
    let nn = n * n;

    // Weighted integrand samples along each path, per station on the seed
    // grid.
    let mut integrand = vec![vec![0.0_f64; nn]; n0];
    if let Some(src) = source {
        if src.n0() != n0 || src.n() != n {
            return Err(HyperbolicError::ShapeMismatch {
                reason: "source grid differs from streamline grid".into(),
            });
        }
        for i in 0..n0 {
            let exp = LocalExpansion::new(&src.slice(i));
            let weight = (damping * (streams.xs[i] - x_lo)).exp();
            let d = &streams.forward[i];
            let ut = &streams.ut_along[i];
            for j1 in 0..n {
                for j2 in 0..n {
                    let k = j1 * n + j2;
                    let val = exp.eval(j1, j2, d[0].at(j1, j2), d[1].at(j1, j2));
                    integrand[i][k] = weight * val / ut.at(j1, j2);
                }
            }
        }
    }

    // Cumulative integral per seed, then add the boundary data.
    let mut g_tilde = vec![TorusField::new(n); n0];
    let mut column = vec![0.0_f64; n0];
    let mut cum_store = vec![vec![0.0_f64; nn]; n0];
    if source.is_some() {
        for k in 0..nn {
            for i in 0..n0 {
                column[i] = integrand[i][k];
            }
            let cum = cumulative_integral_uniform(h, &column);
            for i in 0..n0 {
                cum_store[i][k] = cum[i];
            }
        }
    }
    for i in 0..n0 {
        let vals = g_tilde[i].values_mut();
        for k in 0..nn {
            vals[k] = boundary.values()[k] + cum_store[i][k];
        }
    }

    // Pull back to the node grid with the inverse map and apply damping.
    let mut out = CylinderField::new(n0, n, x_lo, x_hi);
    for i in 0..n0 {
        let exp = LocalExpansion::new(&g_tilde[i]);
        let inv = &streams.inverse[i];
        let factor = (-damping * (streams.xs[i] - x_lo)).exp();
        let mut slice = TorusField::new(n);
        for j1 in 0..n {
            for j2 in 0..n {
                *slice.at_mut(j1, j2) =
                    factor * exp.eval(j1, j2, inv[0].at(j1, j2), inv[1].at(j1, j2));
            }
        }
        out.set_slice(i, &slice);
    }
    Ok(out)
}

/// Cross-section field reconstructed from divergence, curl, and means.
#[derive(Debug, Clone)]
pub struct DivCurlSolution {
    /// First tangential component.
    pub u1: TorusField,
    /// Second tangential component.
    pub u2: TorusField,
    /// Mean of the divergence datum before projection (diagnostic).
    pub div_mean: f64,
    /// Mean of the curl datum before projection (diagnostic).
    pub curl_mean: f64,
}

/// Solves `∂₁u¹ + ∂₂u² = div`, `∂₁u² − ∂₂u¹ = curl` on the cross-section
/// torus with prescribed means `mean(u^β) = mean_u[β]`, via a Hodge split
/// `u = ∇φ + (∂₂χ, −∂₁χ) + mean`. Data means must vanish to tolerance;
/// they are projected out before solving.
pub fn solve_divcurl(
    div: &TorusField,
    curl: &TorusField,
    mean_u: [f64; 2],
) -> Result<DivCurlSolution, HyperbolicError> {
    if div.n() != curl.n() {
        return Err(HyperbolicError::ShapeMismatch {
            reason: "div and curl grids differ".into(),
        });
    }
    let div_mean = div.mean();
    let curl_mean = curl.mean();
    let scale = div.sup_norm().max(curl.sup_norm()).max(1.0);
    if div_mean.abs() > tol::TOL_DIVCURL_MEAN * scale
        || curl_mean.abs() > tol::TOL_DIVCURL_MEAN * scale
    {
        return Err(HyperbolicError::IncompatibleMeans {
            div_mean,
            curl_mean,
        });
    }
    let phi = div.analyze().solve_poisson();
    let chi = {
        let mut neg = TorusSpectrum::zero(curl.n());
        neg.axpy(-1.0, &curl.analyze());
        neg.solve_poisson()
    };
    let mut u1 = phi.deriv(0);
    u1.axpy(1.0, &chi.deriv(1));
    u1.set_mean(mean_u[0]);
    let mut u2 = phi.deriv(1);
    u2.axpy(-1.0, &chi.deriv(0));
    u2.set_mean(mean_u[1]);
    Ok(DivCurlSolution {
        u1: u1.synthesize(),
        u2: u2.synthesize(),
        div_mean,
        curl_mean,
    })
}
