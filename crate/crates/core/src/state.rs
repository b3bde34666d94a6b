//! Shock-layer state, model parameters and the thermodynamic closures.
//!
//! The state vector is the eight-component `(u, v, w, B2, B3, ζ2, ζ3, T)`
//! of the reduced layer system. Density is not a state component: mass
//! conservation fixes `ρ = M / (u - s)` where `s` is the shock speed in the
//! frame the state is expressed in (zero in the shock frame).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, ShockError};

/// Number of components of the layer state.
pub const STATE_DIM: usize = 8;

pub const IDX_U: usize = 0;
pub const IDX_V: usize = 1;
pub const IDX_W: usize = 2;
pub const IDX_B2: usize = 3;
pub const IDX_B3: usize = 4;
pub const IDX_ZETA2: usize = 5;
pub const IDX_ZETA3: usize = 6;
pub const IDX_T: usize = 7;

/// Component names in state order.
pub const STATE_NAMES: [&str; STATE_DIM] = ["u", "v", "w", "B2", "B3", "zeta2", "zeta3", "T"];

/// Mean-variable state of the shock layer.
///
/// `zeta2 = (u - s) dB2/dx` and `zeta3 = (u - s) dB3/dx` carry the
/// transverse current.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlasmaState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub b2: f64,
    pub b3: f64,
    pub zeta2: f64,
    pub zeta3: f64,
    pub t: f64,
}

impl PlasmaState {
    /// A quiescent state (no current) with the given velocity, field and temperature.
    pub fn quiescent(u: f64, v: f64, w: f64, b2: f64, b3: f64, t: f64) -> Self {
        Self { u, v, w, b2, b3, zeta2: 0.0, zeta3: 0.0, t }
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [self.u, self.v, self.w, self.b2, self.b3, self.zeta2, self.zeta3, self.t]
    }

    pub fn from_slice(y: &[f64]) -> Result<Self> {
        if y.len() != STATE_DIM {
            return Err(domain(format!(
                "plasma state needs {STATE_DIM} components, got {}",
                y.len()
            )));
        }
        Ok(Self {
            u: y[IDX_U],
            v: y[IDX_V],
            w: y[IDX_W],
            b2: y[IDX_B2],
            b3: y[IDX_B3],
            zeta2: y[IDX_ZETA2],
            zeta3: y[IDX_ZETA3],
            t: y[IDX_T],
        })
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    /// Checks the state invariants relative to a frame moving at `shock_speed`.
    pub fn check(&self, shock_speed: f64) -> Result<()> {
        if !self.is_finite() {
            return Err(domain("state has non-finite components"));
        }
        if self.u - shock_speed <= 0.0 {
            return Err(domain(format!(
                "normal velocity relative to the shock must be positive, got {}",
                self.u - shock_speed
            )));
        }
        if self.t <= 0.0 {
            return Err(domain(format!("temperature must be positive, got {}", self.t)));
        }
        Ok(())
    }
}

/// Physical coefficients of the reduced two-fluid system.
///
/// Flux constants (M, P, P2*, P3*, C) and the transverse electric field live
/// in [`FluxConstants`] because they are computed from the upstream state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Normal magnetic field component (constant across the layer).
    pub b1: f64,
    /// Normal electric field component; carries no dynamics in the reduced system.
    pub e1: f64,
    /// Optional prescribed transverse electric field. When set, the upstream
    /// state is checked against it instead of it being derived.
    pub e2: Option<f64>,
    pub e3: Option<f64>,
    /// Magnetic permeability.
    pub mu_e: f64,
    /// Inductive capacity.
    pub eps: f64,
    /// Longitudinal viscosity `4/3 μ + ζ_bulk`.
    pub eta: f64,
    /// Shear viscosity.
    pub mu_visc: f64,
    /// Heat conductivity.
    pub kappa: f64,
    /// Current-inertia coefficient `-1 / (γe γi M)`.
    pub beta: f64,
    /// Electrical conductivity.
    pub sigma: f64,
    /// Hall coefficient in layer normalization `(γe + γi) / (γe γi M)`.
    pub chi: f64,
    /// Electron charge-to-mass ratio (negative).
    pub gamma_e: f64,
    /// Ion charge-to-mass ratio (positive).
    pub gamma_i: f64,
    /// Friction coefficient between the species.
    pub alpha12: f64,
    /// Radiation constant; zero disables radiation pressure and energy.
    pub a_r: f64,
    /// Radiation diffusion coefficient.
    pub d_r: f64,
    /// Potential energy per unit mass.
    pub phi: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            b1: 0.0,
            e1: 0.0,
            e2: None,
            e3: None,
            mu_e: 1.0,
            eps: 1.0,
            eta: 1.0,
            mu_visc: 1.0,
            kappa: 1.0,
            beta: 1.0,
            sigma: 1.0,
            chi: 0.0,
            gamma_e: -1.0,
            gamma_i: 1.0,
            alpha12: -1.0,
            a_r: 0.0,
            d_r: 0.0,
            phi: 0.0,
        }
    }
}

fn require(cond: bool, field: &'static str, reason: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(ShockError::InvalidParameter { field, reason: reason.into() })
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("b1", self.b1),
            ("e1", self.e1),
            ("mu_e", self.mu_e),
            ("eps", self.eps),
            ("eta", self.eta),
            ("mu_visc", self.mu_visc),
            ("kappa", self.kappa),
            ("beta", self.beta),
            ("sigma", self.sigma),
            ("chi", self.chi),
            ("gamma_e", self.gamma_e),
            ("gamma_i", self.gamma_i),
            ("alpha12", self.alpha12),
            ("a_r", self.a_r),
            ("d_r", self.d_r),
            ("phi", self.phi),
        ];
        for (name, value) in finite {
            require(value.is_finite(), name, "must be finite")?;
        }
        require(self.mu_e > 0.0, "mu_e", "permeability must be positive")?;
        require(self.eps > 0.0, "eps", "inductive capacity must be positive")?;
        require(self.eta >= 0.0, "eta", "viscosity must be nonnegative")?;
        require(self.mu_visc >= 0.0, "mu_visc", "viscosity must be nonnegative")?;
        require(self.kappa >= 0.0, "kappa", "heat conductivity must be nonnegative")?;
        require(self.a_r >= 0.0, "a_r", "radiation constant must be nonnegative")?;
        require(self.d_r >= 0.0, "d_r", "radiation diffusion must be nonnegative")?;
        require(self.gamma_e < 0.0, "gamma_e", "electron charge-to-mass ratio must be negative")?;
        require(self.gamma_i > 0.0, "gamma_i", "ion charge-to-mass ratio must be positive")?;
        if self.alpha12 < 0.0 {
            require(self.sigma > 0.0, "sigma", "conductivity must be positive")?;
        }
        Ok(())
    }

    /// Recomputes `(σ, χ, β)` from the charge-to-mass ratios, friction
    /// coefficient, density and mass flux.
    pub fn derived_coefficients(&self, rho: f64, mass_flux: f64) -> (f64, f64, f64) {
        let (ge, gi) = (self.gamma_e, self.gamma_i);
        let sigma = -(ge * gi).powi(2) / (ge - gi).powi(2) * rho * rho / self.alpha12;
        let chi = (ge + gi) / (ge * gi * mass_flux);
        let beta = -1.0 / (ge * gi * mass_flux);
        (sigma, chi, beta)
    }

    /// True when the stored `(σ, χ, β)` match the derived values to `rel_tol`.
    pub fn coefficients_consistent(&self, rho: f64, mass_flux: f64, rel_tol: f64) -> bool {
        let (sigma, chi, beta) = self.derived_coefficients(rho, mass_flux);
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        close(sigma, self.sigma) && close(chi, self.chi) && close(beta, self.beta)
    }
}

/// Integration constants of the layer system, evaluated at the upstream state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxConstants {
    /// Mass flux `ρ (u - s)`.
    pub m: f64,
    /// Normal momentum constant `M u + p_t + |B⊥|² / 2μe`.
    pub p: f64,
    /// Transverse momentum constants.
    pub p2: f64,
    pub p3: f64,
    /// Energy constant.
    pub c: f64,
    /// Transverse electric field seen in the shock frame.
    pub e2: f64,
    pub e3: f64,
    /// Shock speed in the frame the states are expressed in.
    pub shock_speed: f64,
}

impl FluxConstants {
    /// The five first integrals in a fixed order: M, P, P2*, P3*, C.
    pub fn integrals(&self) -> [f64; 5] {
        [self.m, self.p, self.p2, self.p3, self.c]
    }
}

/// Names of the five first integrals, matching [`FluxConstants::integrals`].
pub const INTEGRAL_NAMES: [&str; 5] = ["M", "P", "P2", "P3", "C"];

/// Pluggable equation of state `p = p(ρ, T)`, `U_m = U_m(ρ, T)`.
pub trait EquationOfState: Send + Sync + fmt::Debug {
    fn pressure(&self, rho: f64, t: f64) -> f64;

    /// Internal energy per unit mass.
    fn internal_energy(&self, rho: f64, t: f64) -> f64;

    /// `(∂p/∂ρ, ∂p/∂T)`; central differences unless overridden.
    fn pressure_partials(&self, rho: f64, t: f64) -> (f64, f64) {
        central_partials(|r, tt| self.pressure(r, tt), rho, t)
    }

    /// `(∂U/∂ρ, ∂U/∂T)`; central differences unless overridden.
    fn energy_partials(&self, rho: f64, t: f64) -> (f64, f64) {
        central_partials(|r, tt| self.internal_energy(r, tt), rho, t)
    }
}

fn central_partials(f: impl Fn(f64, f64) -> f64, rho: f64, t: f64) -> (f64, f64) {
    let hr = 1e-6 * rho.abs().max(1e-8);
    let ht = 1e-6 * t.abs().max(1e-8);
    (
        (f(rho + hr, t) - f(rho - hr, t)) / (2.0 * hr),
        (f(rho, t + ht) - f(rho, t - ht)) / (2.0 * ht),
    )
}

/// Equation-of-state selection.
#[derive(Clone, Debug)]
pub enum EosSpec {
    /// Calorically perfect gas: `p = ρ R T`, `U_m = R T / (γ - 1)`.
    IdealGas { r_gas: f64, gamma_adiabatic: f64 },
    /// Caller-supplied closure.
    UserDefined(Arc<dyn EquationOfState>),
}

impl EosSpec {
    pub fn ideal_gas(r_gas: f64, gamma_adiabatic: f64) -> Self {
        EosSpec::IdealGas { r_gas, gamma_adiabatic }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EosSpec::IdealGas { r_gas, gamma_adiabatic } => {
                require(r_gas > 0.0 && r_gas.is_finite(), "r_gas", "gas constant must be positive")?;
                require(
                    gamma_adiabatic > 1.0 && gamma_adiabatic.is_finite(),
                    "gamma_adiabatic",
                    "adiabatic index must exceed 1",
                )
            }
            EosSpec::UserDefined(_) => Ok(()),
        }
    }

    /// Sound speed `sqrt(γ p / ρ)` for the ideal gas; `None` for user closures.
    pub fn ideal_sound_speed(&self, rho: f64, t: f64) -> Option<f64> {
        match *self {
            EosSpec::IdealGas { r_gas, gamma_adiabatic } => {
                let _ = rho;
                Some((gamma_adiabatic * r_gas * t).sqrt())
            }
            EosSpec::UserDefined(_) => None,
        }
    }
}

impl EquationOfState for EosSpec {
    fn pressure(&self, rho: f64, t: f64) -> f64 {
        match self {
            EosSpec::IdealGas { r_gas, .. } => rho * r_gas * t,
            EosSpec::UserDefined(eos) => eos.pressure(rho, t),
        }
    }

    fn internal_energy(&self, rho: f64, t: f64) -> f64 {
        match self {
            EosSpec::IdealGas { r_gas, gamma_adiabatic } => r_gas * t / (gamma_adiabatic - 1.0),
            EosSpec::UserDefined(eos) => eos.internal_energy(rho, t),
        }
    }

    fn pressure_partials(&self, rho: f64, t: f64) -> (f64, f64) {
        match self {
            EosSpec::IdealGas { r_gas, .. } => (r_gas * t, rho * r_gas),
            EosSpec::UserDefined(eos) => eos.pressure_partials(rho, t),
        }
    }

    fn energy_partials(&self, rho: f64, t: f64) -> (f64, f64) {
        match self {
            EosSpec::IdealGas { r_gas, gamma_adiabatic } => (0.0, r_gas / (gamma_adiabatic - 1.0)),
            EosSpec::UserDefined(eos) => eos.energy_partials(rho, t),
        }
    }
}

/// Mass density `ρ = M / (u - s)`.
pub fn density(state: &PlasmaState, constants: &FluxConstants) -> Result<f64> {
    let rel = state.u - constants.shock_speed;
    if !(rel > 0.0) {
        return Err(domain(format!("density needs u - s > 0, got {rel}")));
    }
    Ok(constants.m / rel)
}

/// Radiation pressure `a_R T⁴ / 3`.
pub fn radiation_pressure(t: f64, params: &ModelParams) -> f64 {
    params.a_r * t.powi(4) / 3.0
}

/// Radiation energy density `a_R T⁴`.
pub fn radiation_energy(t: f64, params: &ModelParams) -> f64 {
    params.a_r * t.powi(4)
}

/// Total pressure `p(ρ, T) + a_R T⁴ / 3`.
pub fn total_pressure(rho: f64, t: f64, params: &ModelParams, eos: &EosSpec) -> Result<f64> {
    if !(rho > 0.0) || !(t > 0.0) {
        return Err(domain(format!("total pressure needs ρ > 0 and T > 0, got ρ={rho}, T={t}")));
    }
    Ok(eos.pressure(rho, t) + radiation_pressure(t, params))
}

/// Total pressure evaluated from a layer state.
pub fn state_total_pressure(
    state: &PlasmaState,
    constants: &FluxConstants,
    params: &ModelParams,
    eos: &EosSpec,
) -> Result<f64> {
    let rho = density(state, constants)?;
    total_pressure(rho, state.t, params, eos)
}

/// Heat conductivity with the radiative diffusion flux folded in:
/// `κ + 4 D_R a_R T³`.
pub fn effective_conductivity(t: f64, params: &ModelParams) -> f64 {
    params.kappa + 4.0 * params.d_r * params.a_r * t.powi(3)
}

/// `dκ_eff/dT`.
pub fn effective_conductivity_slope(t: f64, params: &ModelParams) -> f64 {
    12.0 * params.d_r * params.a_r * t.powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shock_frame(m: f64) -> FluxConstants {
        FluxConstants { m, p: 0.0, p2: 0.0, p3: 0.0, c: 0.0, e2: 0.0, e3: 0.0, shock_speed: 0.0 }
    }

    fn with_radiation(a_r: f64, d_r: f64, kappa: f64) -> ModelParams {
        ModelParams { a_r, d_r, kappa, ..ModelParams::default() }
    }

    #[test]
    fn density_examples() {
        let s = |u| PlasmaState::quiescent(u, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_eq!(density(&s(1.0), &shock_frame(1.0)).unwrap(), 1.0);
        assert_eq!(density(&s(2.0), &shock_frame(1.0)).unwrap(), 0.5);
        assert_eq!(density(&s(0.25), &shock_frame(3.0)).unwrap(), 12.0);
        assert!(density(&s(0.0), &shock_frame(1.0)).is_err());
        assert!(density(&s(-1.0), &shock_frame(1.0)).is_err());
    }

    #[test]
    fn density_in_moving_frame() {
        let mut c = shock_frame(2.0);
        c.shock_speed = -0.5;
        let s = PlasmaState::quiescent(0.5, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_eq!(density(&s, &c).unwrap(), 2.0);
    }

    #[test]
    fn total_pressure_examples() {
        let eos = EosSpec::ideal_gas(1.0, 5.0 / 3.0);
        assert_eq!(total_pressure(1.0, 1.0, &with_radiation(0.0, 0.0, 1.0), &eos).unwrap(), 1.0);
        assert_eq!(total_pressure(1.0, 1.0, &with_radiation(3.0, 0.0, 1.0), &eos).unwrap(), 2.0);
        let eos = EosSpec::ideal_gas(0.5, 5.0 / 3.0);
        assert_eq!(total_pressure(2.0, 3.0, &with_radiation(0.0, 0.0, 1.0), &eos).unwrap(), 3.0);
        assert!(total_pressure(1.0, 0.0, &ModelParams::default(), &eos).is_err());
        assert!(total_pressure(-1.0, 1.0, &ModelParams::default(), &eos).is_err());
    }

    #[test]
    fn radiation_energy_examples() {
        assert_eq!(radiation_energy(1.0, &with_radiation(0.0, 0.0, 1.0)), 0.0);
        assert_eq!(radiation_energy(1.0, &with_radiation(1.0, 0.0, 1.0)), 1.0);
        assert_eq!(radiation_energy(2.0, &with_radiation(1.0, 0.0, 1.0)), 16.0);
    }

    #[test]
    fn effective_conductivity_examples() {
        assert_eq!(effective_conductivity(1.0, &with_radiation(0.0, 0.0, 1.0)), 1.0);
        assert_eq!(effective_conductivity(1.0, &with_radiation(1.0, 1.0, 0.0)), 4.0);
        assert_eq!(effective_conductivity(2.0, &with_radiation(1.0, 0.5, 1.0)), 17.0);
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::default().validate().is_ok());
        let bad = ModelParams { kappa: -1.0, ..ModelParams::default() };
        assert!(matches!(bad.validate(), Err(ShockError::InvalidParameter { field: "kappa", .. })));
        let bad = ModelParams { gamma_e: 1.0, ..ModelParams::default() };
        assert!(bad.validate().is_err());
        assert!(EosSpec::ideal_gas(1.0, 1.0).validate().is_err());
    }

    #[test]
    fn derived_coefficients_round_trip() {
        let mut p = ModelParams { gamma_e: -1836.0, gamma_i: 1.0, alpha12: -0.3, ..ModelParams::default() };
        let (rho, m) = (1.7, 2.3);
        let (sigma, chi, beta) = p.derived_coefficients(rho, m);
        p.sigma = sigma;
        p.chi = chi;
        p.beta = beta;
        assert!(p.coefficients_consistent(rho, m, 1e-12));
        assert!(sigma > 0.0 && beta > 0.0);
        p.beta *= 1.0 + 1e-9;
        assert!(!p.coefficients_consistent(rho, m, 1e-12));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn density_times_velocity_is_mass_flux(u in 1e-3f64..1e3, m in 1e-3f64..1e3) {
                let s = PlasmaState::quiescent(u, 0.0, 0.0, 0.0, 0.0, 1.0);
                let rho = density(&s, &shock_frame(m)).unwrap();
                prop_assert!((rho * u - m).abs() <= 4.0 * f64::EPSILON * m);
            }

            #[test]
            fn pressure_increases_with_temperature(
                rho in 1e-2f64..1e2, t in 1e-2f64..1e2, a_r in 0.0f64..10.0
            ) {
                let eos = EosSpec::ideal_gas(1.0, 1.4);
                let params = with_radiation(a_r, 0.0, 1.0);
                let h = 1e-6 * t;
                let up = total_pressure(rho, t + h, &params, &eos).unwrap();
                let down = total_pressure(rho, t - h, &params, &eos).unwrap();
                prop_assert!(up > down);
            }

            #[test]
            fn effective_conductivity_bounded_below(
                t in 1e-3f64..1e3, kappa in 0.0f64..10.0, a_r in 0.0f64..10.0, d_r in 0.0f64..10.0
            ) {
                prop_assert!(effective_conductivity(t, &with_radiation(a_r, d_r, kappa)) >= kappa);
            }
        }
    }
}
