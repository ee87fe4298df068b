//! Run configuration: the JSON schema accepted by every subcommand, its
//! validation, and the construction of solver inputs from it.
//!
//! A configuration file is a single JSON object with the sections below.
//! Every section (and every field) has a default, so `{}` is a complete
//! configuration describing the reference duct.

use std::path::Path;

use fanno_shock_core::background::BackgroundConfig;
use fanno_shock_core::fields::TorusField;
use fanno_shock_core::gas::{GasParams, PrimitiveState};
use serde::{Deserialize, Serialize};

use crate::commands::CliError;

/// Gas model: ratio of specific heats and wall-friction coefficient.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasSection {
    /// Ratio of specific heats (must exceed 1).
    pub gamma: f64,
    /// Friction coefficient (must be non-negative).
    pub mu: f64,
}

impl Default for GasSection {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            mu: 0.05,
        }
    }
}

/// Duct geometry: exit position and unperturbed shock position.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DuctSection {
    /// Duct length, i.e. the exit position (the inlet sits at 0).
    #[serde(rename = "L")]
    pub l: f64,
    /// Unperturbed shock position (strictly between 0 and `L`).
    pub r_b: f64,
}

impl Default for DuctSection {
    fn default() -> Self {
        Self { l: 2.0, r_b: 1.0 }
    }
}

/// Unperturbed inlet state (purely axial velocity, must be supersonic).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InletSection {
    /// Axial velocity.
    pub u0: f64,
    /// Pressure.
    pub p: f64,
    /// Density.
    pub rho: f64,
}

impl Default for InletSection {
    fn default() -> Self {
        // Mach 2 at unit pressure and density for γ = 1.4.
        Self {
            u0: 2.0 * 1.4_f64.sqrt(),
            p: 1.0,
            rho: 1.0,
        }
    }
}

/// One real trigonometric tensor factor: `cos` or `sin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigFactor {
    Cos,
    Sin,
}

/// A single cross-sectional mode `amplitude · f₁(m₁ y¹) · f₂(m₂ y²)` where
/// each factor is `cos` or `sin`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusMode {
    /// Frequency along `y¹`.
    pub m1: usize,
    /// Frequency along `y²`.
    pub m2: usize,
    /// Factor applied to `m₁ y¹`.
    pub f1: TrigFactor,
    /// Factor applied to `m₂ y²`.
    pub f2: TrigFactor,
    /// Mode amplitude (multiplied by the global `epsilon`).
    pub amplitude: f64,
}

impl TorusMode {
    /// Evaluates the mode at a point of the cross-section.
    pub fn eval(&self, y1: f64, y2: f64) -> f64 {
        let g1 = match self.f1 {
            TrigFactor::Cos => (self.m1 as f64 * y1).cos(),
            TrigFactor::Sin => (self.m1 as f64 * y1).sin(),
        };
        let g2 = match self.f2 {
            TrigFactor::Cos => (self.m2 as f64 * y2).cos(),
            TrigFactor::Sin => (self.m2 as f64 * y2).sin(),
        };
        self.amplitude * g1 * g2
    }

    fn validate(&self, what: &str, n: usize) -> Result<(), String> {
        let h = n / 2;
        for (m, f, axis) in [(self.m1, self.f1, "m1"), (self.m2, self.f2, "m2")] {
            if f == TrigFactor::Sin && m == 0 {
                return Err(format!("{what}: sin factor with {axis} = 0 vanishes identically"));
            }
            let max = if f == TrigFactor::Sin { h - 1 } else { h };
            if m > max {
                return Err(format!(
                    "{what}: {axis} = {m} is not representable on an N = {n} grid (max {max})"
                ));
            }
        }
        if !self.amplitude.is_finite() {
            return Err(format!("{what}: amplitude must be finite"));
        }
        Ok(())
    }
}

/// Which inlet field an inflow mode perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InletChannel {
    P,
    U0,
    U1,
    U2,
    Rho,
}

/// One inflow perturbation mode applied to a named inlet field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflowMode {
    /// Perturbed field.
    pub field: InletChannel,
    /// Frequency along `y¹`.
    pub m1: usize,
    /// Frequency along `y²`.
    pub m2: usize,
    /// Factor applied to `m₁ y¹`.
    pub f1: TrigFactor,
    /// Factor applied to `m₂ y²`.
    pub f2: TrigFactor,
    /// Mode amplitude (multiplied by the global `epsilon`).
    pub amplitude: f64,
}

impl InflowMode {
    fn mode(&self) -> TorusMode {
        TorusMode {
            m1: self.m1,
            m2: self.m2,
            f1: self.f1,
            f2: self.f2,
            amplitude: self.amplitude,
        }
    }
}

/// Perturbation data: overall scale, inflow modes, and exit back-pressure
/// modes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    /// Global perturbation scale (non-negative; 0 reproduces the background).
    pub epsilon: f64,
    /// Modes added to the inlet fields.
    pub inflow: Vec<InflowMode>,
    /// Modes of the exit back-pressure offset.
    pub back_pressure: Vec<TorusMode>,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            inflow: Vec::new(),
            back_pressure: vec![TorusMode {
                m1: 1,
                m2: 0,
                f1: TrigFactor::Cos,
                f2: TrigFactor::Cos,
                amplitude: 1.0,
            }],
        }
    }
}

/// Discretization and iteration parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    /// Axial stations on the subsonic span (≥ 9).
    #[serde(rename = "N0")]
    pub n0: usize,
    /// Tangential nodes per direction (even, ≥ 4).
    #[serde(rename = "N")]
    pub n: usize,
    /// Largest integer eigenvalue scanned by the solvability sweep.
    #[serde(rename = "Q_max")]
    pub q_max: usize,
    /// Fixed-point stopping tolerance.
    pub tol: f64,
    /// Fixed-point iteration cap.
    pub max_iter: usize,
    /// Seed echoed into the manifest (reserved; the pipeline is
    /// deterministic and draws no random numbers).
    pub seed: u64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            n0: 200,
            n: 16,
            q_max: 400,
            tol: 1e-10,
            max_iter: 40,
            seed: 0,
        }
    }
}

/// Optional parameter grids for the `sweep` subcommand.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Shock positions to sweep (default: ten values bracketing `duct.r_b`).
    pub r_b: Vec<f64>,
    /// Friction coefficients to sweep (default: the configured `gas.mu`).
    pub mu: Vec<f64>,
}

/// A complete run configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub gas: GasSection,
    pub duct: DuctSection,
    pub inlet: InletSection,
    pub perturbations: PerturbationSection,
    pub numerics: NumericsSection,
    pub sweep: SweepSection,
}

impl RunConfig {
    /// Loads and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config parse error: {e}")))?;
        cfg.validate().map_err(CliError::Validation)?;
        Ok(cfg)
    }

    /// Checks every invariant the solvers rely on, returning the first
    /// violated one by name.
    pub fn validate(&self) -> Result<(), String> {
        let g = &self.gas;
        if !(g.gamma > 1.0) {
            return Err(format!("gas.gamma must exceed 1 (got {})", g.gamma));
        }
        if !(g.mu >= 0.0) {
            return Err(format!("gas.mu must be non-negative (got {})", g.mu));
        }
        let d = &self.duct;
        if !(d.l > 0.0) {
            return Err(format!("duct.L must be positive (got {})", d.l));
        }
        if !(d.r_b > 0.0 && d.r_b < d.l) {
            return Err(format!(
                "duct.r_b must lie strictly between 0 and L = {} (got {})",
                d.l, d.r_b
            ));
        }
        let i = &self.inlet;
        for (name, v) in [("inlet.u0", i.u0), ("inlet.p", i.p), ("inlet.rho", i.rho)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("{name} must be positive and finite (got {v})"));
            }
        }
        let t_in = i.u0 * i.u0 * i.rho / (g.gamma * i.p);
        if !(t_in > 1.0) {
            return Err(format!(
                "inlet state must be supersonic: M² = {t_in:.6} is not above 1"
            ));
        }
        let n = &self.numerics;
        if n.n0 < 9 {
            return Err(format!("numerics.N0 must be at least 9 (got {})", n.n0));
        }
        if n.n < 4 || n.n % 2 != 0 {
            return Err(format!("numerics.N must be even and at least 4 (got {})", n.n));
        }
        if !(n.tol > 0.0) {
            return Err(format!("numerics.tol must be positive (got {})", n.tol));
        }
        if n.max_iter == 0 {
            return Err("numerics.max_iter must be at least 1".into());
        }
        let p = &self.perturbations;
        if !(p.epsilon >= 0.0) || !p.epsilon.is_finite() {
            return Err(format!(
                "perturbations.epsilon must be finite and non-negative (got {})",
                p.epsilon
            ));
        }
        for (k, m) in p.inflow.iter().enumerate() {
            m.mode().validate(&format!("perturbations.inflow[{k}]"), n.n)?;
        }
        for (k, m) in p.back_pressure.iter().enumerate() {
            m.validate(&format!("perturbations.back_pressure[{k}]"), n.n)?;
        }
        for (k, &r) in self.sweep.r_b.iter().enumerate() {
            if !(r > 0.0 && r < d.l) {
                return Err(format!(
                    "sweep.r_b[{k}] must lie strictly between 0 and L = {} (got {r})",
                    d.l
                ));
            }
        }
        for (k, &mu) in self.sweep.mu.iter().enumerate() {
            if !(mu >= 0.0) {
                return Err(format!("sweep.mu[{k}] must be non-negative (got {mu})"));
            }
        }
        Ok(())
    }

    /// The background-builder inputs described by this configuration.
    pub fn background_config(&self) -> Result<BackgroundConfig, CliError> {
        let gas = GasParams::new(self.gas.gamma, self.gas.mu)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(BackgroundConfig {
            gas,
            l: self.duct.l,
            r_b: self.duct.r_b,
            inlet: PrimitiveState {
                p: self.inlet.p,
                rho: self.inlet.rho,
                u: [self.inlet.u0, 0.0, 0.0],
            },
            n0: self.numerics.n0,
        })
    }

    /// The perturbed inlet fields `(p, u⁰, u¹, u², A)` on the `N × N`
    /// cross-section grid. The entropy field is recomputed pointwise from
    /// the perturbed pressure and density.
    pub fn inlet_fields(&self) -> [TorusField; 5] {
        let n = self.numerics.n;
        let eps = self.perturbations.epsilon;
        let base = [self.inlet.p, self.inlet.u0, 0.0, 0.0, self.inlet.rho];
        let mut fields: Vec<TorusField> = base
            .iter()
            .map(|&v| {
                let mut f = TorusField::new(n);
                f.values_mut().fill(v);
                f
            })
            .collect();
        for m in &self.perturbations.inflow {
            let slot = match m.field {
                InletChannel::P => 0,
                InletChannel::U0 => 1,
                InletChannel::U1 => 2,
                InletChannel::U2 => 3,
                InletChannel::Rho => 4,
            };
            let mode = m.mode();
            let f = &mut fields[slot];
            for i1 in 0..n {
                for i2 in 0..n {
                    let (y1, y2) = node_pair(n, i1, i2);
                    *f.at_mut(i1, i2) += eps * mode.eval(y1, y2);
                }
            }
        }
        let gamma = self.gas.gamma;
        let mut a = TorusField::new(n);
        for i1 in 0..n {
            for i2 in 0..n {
                *a.at_mut(i1, i2) = fields[0].at(i1, i2) * fields[4].at(i1, i2).powf(-gamma);
            }
        }
        let [p, u0, u1, u2, _rho] = <[TorusField; 5]>::try_from(fields).expect("five fields");
        [p, u0, u1, u2, a]
    }

    /// The exit back-pressure offset from the background exit value.
    pub fn exit_pressure(&self) -> TorusField {
        let n = self.numerics.n;
        let eps = self.perturbations.epsilon;
        TorusField::from_fn(n, |y1, y2| {
            self.perturbations
                .back_pressure
                .iter()
                .map(|m| eps * m.eval(y1, y2))
                .sum()
        })
    }
}

fn node_pair(n: usize, i1: usize, i2: usize) -> (f64, f64) {
    (TorusField::node(n, i1), TorusField::node(n, i2))
}
