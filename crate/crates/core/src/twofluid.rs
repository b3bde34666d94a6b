//! Two-species closure: mass and charge partition, diffusion velocities,
//! transport coefficients, the generalized Ohm's law and the electron/ion
//! temperature split.
//!
//! Species are labeled by charge-to-mass ratio, `γ_e = -e/m_e < 0` and
//! `γ_i = e/m_i > 0`. Functions taking a pair `(γ1, γ2)` accept either order.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, ShockError};
use crate::layer::LayerOde;
use crate::ode::{hermite_eval, integrate, Method, OdeOptions};
use crate::state::{FluxConstants, ModelParams, PlasmaState};

/// How the electron collision frequency is specified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collision {
    /// Fixed collision frequency `f`.
    Frequency(f64),
    /// `f = c1 · ν`, proportional to the number density.
    Proportional(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSpec {
    pub m_e: f64,
    pub m_i: f64,
    pub e_charge: f64,
    pub collision: Collision,
}

impl SpeciesSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| Err(ShockError::InvalidParameter { field, reason: reason.into() });
        if !(self.m_e > 0.0) {
            return bad("m_e", "electron mass must be positive");
        }
        if !(self.m_i > 0.0) {
            return bad("m_i", "ion mass must be positive");
        }
        if !(self.m_e < self.m_i) {
            return bad("m_e", "electron mass must be below the ion mass");
        }
        if !(self.e_charge > 0.0) {
            return bad("e_charge", "elementary charge must be positive");
        }
        match self.collision {
            Collision::Frequency(f) | Collision::Proportional(f) if !(f > 0.0 && f.is_finite()) => {
                bad("collision", "collision frequency must be positive")
            }
            _ => Ok(()),
        }
    }

    /// `(γ_e, γ_i)` for a singly ionized plasma.
    pub fn gammas(&self) -> (f64, f64) {
        (-self.e_charge / self.m_e, self.e_charge / self.m_i)
    }

    /// Electron collision frequency at number density `nu`.
    pub fn collision_frequency(&self, nu: f64) -> f64 {
        match self.collision {
            Collision::Frequency(f) => f,
            Collision::Proportional(c1) => c1 * nu,
        }
    }

    /// Number density for mass density `rho`.
    pub fn number_density(&self, rho: f64) -> f64 {
        rho / (self.m_e + self.m_i)
    }
}

/// Species-resolved quantities reconstructed from the mean variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeciesView {
    pub rho_e: f64,
    pub rho_i: f64,
    pub w_e: [f64; 3],
    pub w_i: [f64; 3],
    /// Charge densities.
    pub rho_ee: f64,
    pub rho_ei: f64,
    pub t_e: f64,
    pub t_i: f64,
}

fn check_gammas(g1: f64, g2: f64) -> Result<()> {
    if g1 == g2 {
        return Err(ShockError::DegenerateSpecies(g1));
    }
    Ok(())
}

/// Splits the mass density between two species with charge-to-mass ratios
/// `(γ1, γ2)` under quasi-neutrality.
pub fn partition_density(rho: f64, gammas: (f64, f64)) -> Result<(f64, f64)> {
    let (g1, g2) = gammas;
    check_gammas(g1, g2)?;
    let rho1 = g2 / (g2 - g1) * rho;
    // rho2 as the complement keeps the sum exact
    let rho2 = rho - rho1;
    Ok((rho1, rho2))
}

/// Charge densities `(ρ_e1, ρ_e2)`; they cancel exactly.
pub fn partition_charge(rho: f64, gammas: (f64, f64)) -> Result<(f64, f64)> {
    let (g1, g2) = gammas;
    check_gammas(g1, g2)?;
    let q = g1 * g2 / (g2 - g1) * rho;
    Ok((q, -q))
}

/// Diffusion velocities carried by the conduction current `i`.
pub fn diffusion_velocities(current: [f64; 3], rho: f64, gammas: (f64, f64)) -> Result<([f64; 3], [f64; 3])> {
    let (g1, g2) = gammas;
    if !(rho > 0.0) {
        return Err(domain(format!("density must be positive, got {rho}")));
    }
    check_gammas(g1, g2)?;
    if g1 == 0.0 || g2 == 0.0 {
        return Err(domain("charge-to-mass ratios must be nonzero"));
    }
    let w1 = current.map(|c| -c / (g2 * rho));
    let w2 = current.map(|c| -c / (g1 * rho));
    let factor = g1 * g2 / (g2 - g1) * rho;
    let tol = 1e-12 * current.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    for k in 0..3 {
        let rebuilt = factor * (w1[k] - w2[k]);
        if (rebuilt - current[k]).abs() > tol {
            return Err(domain("diffusion velocities do not reproduce the current"));
        }
    }
    Ok((w1, w2))
}

/// Transport coefficients of a singly ionized plasma.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportCoefficients {
    /// Electrical conductivity.
    pub sigma: f64,
    /// Hall coefficient of Ohm's law `i = σ(E + u×B) - χ (i×B)`.
    pub chi_hall: f64,
    /// Current-inertia coefficient of the layer system.
    pub beta: f64,
    /// Hall coefficient in layer normalization.
    pub chi_layer: f64,
    /// Inter-species friction coefficient.
    pub alpha12: f64,
    /// Collision frequency that was used.
    pub frequency: f64,
}

impl TransportCoefficients {
    /// Copies the coefficients that enter the layer system into `params`.
    pub fn apply(&self, params: &mut ModelParams, spec: &SpeciesSpec) {
        let (ge, gi) = spec.gammas();
        params.sigma = self.sigma;
        params.chi = self.chi_layer;
        params.beta = self.beta;
        params.alpha12 = self.alpha12;
        params.gamma_e = ge;
        params.gamma_i = gi;
    }
}

/// Conductivity, Hall coefficients, current inertia and friction for mass
/// density `rho`, number density `nu` and mass flux `mass_flux`.
pub fn transport_coefficients(
    spec: &SpeciesSpec,
    rho: f64,
    nu: f64,
    mass_flux: f64,
) -> Result<TransportCoefficients> {
    spec.validate()?;
    if !(nu > 0.0) {
        return Err(domain(format!("number density must be positive, got {nu}")));
    }
    if !(rho > 0.0) {
        return Err(domain(format!("density must be positive, got {rho}")));
    }
    if !(mass_flux > 0.0) {
        return Err(domain(format!("mass flux must be positive, got {mass_flux}")));
    }
    let f = spec.collision_frequency(nu);
    if !(f > 0.0) {
        return Err(domain(format!("collision frequency must be positive, got {f}")));
    }
    let (ge, gi) = spec.gammas();
    let alpha12 = -spec.m_e * nu * f;
    let ratio = ge * gi / (gi - ge);
    let sigma = ratio * ratio * rho * rho / (spec.m_e * nu * f);
    let (me, mi, e) = (spec.m_e, spec.m_i, spec.e_charge);
    let chi_hall = e * (mi - me) / ((me + mi) * me * f);
    Ok(TransportCoefficients {
        sigma,
        chi_hall,
        beta: -1.0 / (ge * gi * mass_flux),
        chi_layer: (ge + gi) / (ge * gi * mass_flux),
        alpha12,
        frequency: f,
    })
}

/// Reconstructs species densities, diffusion velocities and charge densities
/// at a layer state. Both temperatures are set to the mean temperature.
pub fn species_view(state: &PlasmaState, constants: &FluxConstants, params: &ModelParams, spec: &SpeciesSpec) -> Result<SpeciesView> {
    let rel_u = state.u - constants.shock_speed;
    if !(rel_u > 0.0) {
        return Err(domain("u - s must be positive"));
    }
    let rho = constants.m / rel_u;
    let gammas = spec.gammas();
    let (rho_e, rho_i) = partition_density(rho, gammas)?;
    let (rho_ee, rho_ei) = partition_charge(rho, gammas)?;
    let current = conduction_current(state, constants, params);
    let (w_e, w_i) = diffusion_velocities(current, rho, gammas)?;
    Ok(SpeciesView { rho_e, rho_i, w_e, w_i, rho_ee, rho_ei, t_e: state.t, t_i: state.t })
}

/// `(0, -ζ3/(μe ũ), ζ2/(μe ũ))`.
pub fn conduction_current(state: &PlasmaState, constants: &FluxConstants, params: &ModelParams) -> [f64; 3] {
    let rel_u = state.u - constants.shock_speed;
    [0.0, -state.zeta3 / (params.mu_e * rel_u), state.zeta2 / (params.mu_e * rel_u)]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// `i - σ(E + u×B) + χ_hall (i×B)` evaluated in the shock frame, with the
/// current taken from the ζ variables. The Hall coefficient of the layer
/// normalization converts as `χ_hall = σ χ ũ`.
///
/// Only the transverse components are enforced by the layer equations (and
/// only when current inertia vanishes); the normal component is reported
/// as is.
pub fn ohm_residual(state: &PlasmaState, constants: &FluxConstants, params: &ModelParams) -> [f64; 3] {
    let rel_u = state.u - constants.shock_speed;
    let i = conduction_current(state, constants, params);
    let e = [params.e1, constants.e2, constants.e3];
    let vel = [rel_u, state.v, state.w];
    let b = [params.b1, state.b2, state.b3];
    let uxb = cross(vel, b);
    let ixb = cross(i, b);
    let chi_hall = params.sigma * params.chi * rel_u;
    [0, 1, 2].map(|k| i[k] - params.sigma * (e[k] + uxb[k]) + chi_hall * ixb[k])
}

/// Both sides of `i · (E + u×B) = |i|² / σ` for `i = σ(E + u×B)`.
pub fn joule_identity_check(current: [f64; 3], e: [f64; 3], u: [f64; 3], b: [f64; 3], sigma: f64) -> (f64, f64) {
    let uxb = cross(u, b);
    let lhs: f64 = (0..3).map(|k| current[k] * (e[k] + uxb[k])).sum();
    let rhs = current.iter().map(|c| c * c).sum::<f64>() / sigma;
    (lhs, rhs)
}

/// Natural cubic spline through `(x, y)`.
#[derive(Clone, Debug)]
struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for the second derivatives
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0;
                let cc = h1 / 6.0;
                let r = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
                let denom = b - a * c[i - 1];
                c[i] = cc / denom;
                d[i] = (r - a * d[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { x: x.to_vec(), y: y.to_vec(), m }
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        let t = t.clamp(self.x[0], self.x[n - 1]);
        let k = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - t) / h;
        let b = (t - self.x[k]) / h;
        let val = a * self.y[k] + b * self.y[k + 1] + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0;
        let der = (self.y[k + 1] - self.y[k]) / h - (3.0 * a * a - 1.0) * h * self.m[k] / 6.0
            + (3.0 * b * b - 1.0) * h * self.m[k + 1] / 6.0;
        (val, der)
    }
}

/// Relaxation ODE for the electron temperature as an autonomous system in
/// `(x, T_e)`.
struct Relaxation<'a> {
    temp: &'a Spline,
    vel: &'a Spline,
    spec: &'a SpeciesSpec,
    mass_flux: f64,
}

impl Relaxation<'_> {
    fn rate(&self, x: f64) -> (f64, f64) {
        let (t, _) = self.temp.eval(x);
        let (u, _) = self.vel.eval(x);
        let nu = self.spec.number_density(self.mass_flux / u);
        let f = self.spec.collision_frequency(nu);
        (2.0 * self.spec.m_e * f / (self.spec.m_i * u), t)
    }
}

impl LayerOde for Relaxation<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let (k, t) = self.rate(y[0]);
        // T_i - T_e = 2 (T - T_e)
        dy[0] = 1.0;
        dy[1] = 2.0 * k * (t - y[1]);
        Ok(())
    }

    fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let h = 1e-7 * y[0].abs().max(1.0);
        let mut fp = [0.0; 2];
        let mut fm = [0.0; 2];
        self.rhs(&[y[0] + h, y[1]], &mut fp)?;
        self.rhs(&[y[0] - h, y[1]], &mut fm)?;
        let (k, _) = self.rate(y[0]);
        Ok(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, (fp[1] - fm[1]) / (2.0 * h), -2.0 * k]))
    }
}

/// Electron and ion temperatures along a mean-variable profile.
///
/// `x` must be strictly increasing; `temperature` and `rel_velocity` (the
/// shock-frame normal velocity) are sampled on `x`. The upstream end must be
/// an equilibrium, where `T_e = T_i = T`.
pub fn temperature_split(
    x: &[f64],
    temperature: &[f64],
    rel_velocity: &[f64],
    spec: &SpeciesSpec,
    mass_flux: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let n = x.len();
    if n < 2 || temperature.len() != n || rel_velocity.len() != n {
        return Err(ShockError::TooFewSamples { needed: 2, got: n.min(temperature.len()).min(rel_velocity.len()) });
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("abscissae must be strictly increasing"));
    }
    if rel_velocity.iter().any(|&u| !(u > 0.0)) {
        return Err(domain("normal velocity must be positive on the grid"));
    }
    let temp = Spline::new(x, temperature);
    let vel = Spline::new(x, rel_velocity);
    let span = x[n - 1] - x[0];
    let (_, dt0) = temp.eval(x[0]);
    let (_, du0) = vel.eval(x[0]);
    let drift = (dt0.abs() / temperature[0].abs().max(f64::MIN_POSITIVE)).max(du0.abs() / rel_velocity[0]) * span;
    if !(drift <= 1e-6) {
        return Err(ShockError::NonConvergence(format!(
            "upstream end is not an equilibrium (relative drift {drift:.3e} over the grid)"
        )));
    }
    let sys = Relaxation { temp: &temp, vel: &vel, spec, mass_flux };
    let opts = OdeOptions {
        method: Method::Auto,
        h_max: span / 50.0,
        ..OdeOptions::default()
    };
    let tr = integrate(&sys, 1.0, &[x[0], temperature[0]], span, &opts, None, None)?;
    // shift the sample abscissae from integration time back to x
    let samples: Vec<_> = tr
        .samples
        .into_iter()
        .map(|mut s| {
            s.x = s.y[0];
            s
        })
        .collect();
    let mut t_e = Vec::with_capacity(n);
    let mut t_i = Vec::with_capacity(n);
    for (k, &xk) in x.iter().enumerate() {
        let te = hermite_eval(&samples, xk)[1];
        t_e.push(te);
        t_i.push(2.0 * temperature[k] - te);
    }
    Ok((t_e, t_i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(collision: Collision) -> SpeciesSpec {
        SpeciesSpec { m_e: 1.0, m_i: 1836.0, e_charge: 1.0, collision }
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition_density(2.0, (1.0, -1.0)).unwrap(), (1.0, 1.0));
        let (r1, r2) = partition_density(1.0, (1836.0, -1.0)).unwrap();
        assert!((r1 - 1.0 / 1837.0).abs() < 1e-16);
        assert!((r2 - 1836.0 / 1837.0).abs() < 1e-15);
        assert_eq!(partition_density(0.0, (1.0, -3.0)).unwrap(), (0.0, 0.0));
        assert!(matches!(partition_density(1.0, (2.0, 2.0)), Err(ShockError::DegenerateSpecies(_))));
    }

    #[test]
    fn diffusion_examples() {
        assert_eq!(diffusion_velocities([0.0; 3], 1.0, (1.0, -1.0)).unwrap(), ([0.0; 3], [0.0; 3]));
        let (w1, w2) = diffusion_velocities([0.0, 1.0, 0.0], 1.0, (1.0, -1.0)).unwrap();
        assert_eq!(w1, [0.0, 1.0, 0.0]);
        assert_eq!(w2, [0.0, -1.0, 0.0]);
        let (w1, w2) = diffusion_velocities([0.0, 2.0, 0.0], 2.0, (2.0, -1.0)).unwrap();
        assert_eq!(w1, [0.0, 1.0, 0.0]);
        assert_eq!(w2, [0.0, -0.5, 0.0]);
        assert!(diffusion_velocities([1.0, 0.0, 0.0], 0.0, (1.0, -1.0)).is_err());
    }

    #[test]
    fn conductivity_examples() {
        let s = SpeciesSpec { m_e: 1.0, m_i: 2.0, e_charge: 1.0, collision: Collision::Frequency(1.0) };
        let tc = transport_coefficients(&s, 3.0, 1.0, 1.0).unwrap();
        assert!((tc.sigma - 1.0).abs() < 1e-15);

        let s = SpeciesSpec { m_e: 1.0, m_i: 2.0, e_charge: 2.0, collision: Collision::Frequency(4.0) };
        let tc = transport_coefficients(&s, 9.0, 3.0, 1.0).unwrap();
        assert!((tc.sigma - 3.0).abs() < 1e-14);
        assert_eq!(tc.alpha12, -12.0);

        // proportional collisions give a density-independent conductivity
        let s = SpeciesSpec { m_e: 1.0, m_i: 2.0, e_charge: 1.0, collision: Collision::Proportional(1.0) };
        for nu in [0.1, 1.0, 7.5] {
            let tc = transport_coefficients(&s, 3.0 * nu, nu, 1.0).unwrap();
            assert!((tc.sigma - 1.0).abs() < 1e-14);
        }
        assert!(transport_coefficients(&s, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn hall_coefficients_agree_between_normalizations() {
        let s = spec(Collision::Frequency(2.5));
        let (nu, rel_u) = (0.3, 1.7);
        let rho = nu * (s.m_e + s.m_i);
        let m = rho * rel_u;
        let tc = transport_coefficients(&s, rho, nu, m).unwrap();
        let converted = tc.sigma * tc.chi_layer * rel_u;
        assert!((converted - tc.chi_hall).abs() <= 1e-12 * tc.chi_hall.abs());
        assert!(tc.chi_hall > 0.0);
        assert!(tc.beta > 0.0);
    }

    #[test]
    fn ohm_quiescent_and_resistive() {
        let params = ModelParams { b1: 0.0, sigma: 2.0, chi: 0.0, ..ModelParams::default() };
        let c = FluxConstants { m: 1.0, p: 0.0, p2: 0.0, p3: 0.0, c: 0.0, e2: 0.0, e3: 0.0, shock_speed: 0.0 };
        let s = PlasmaState::quiescent(1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_eq!(ohm_residual(&s, &c, &params), [0.0; 3]);

        // choose ζ so that i = σ(E + u×B) with χ = 0
        let c = FluxConstants { e2: 0.3, e3: -0.2, ..c };
        let mut s = PlasmaState::quiescent(1.5, 0.2, -0.1, 0.4, 0.6, 1.0);
        let vel = [1.5, 0.2, -0.1];
        let b = [0.0, 0.4, 0.6];
        let uxb = cross(vel, b);
        let i2 = 2.0 * (0.3 + uxb[1]);
        let i3 = 2.0 * (-0.2 + uxb[2]);
        s.zeta3 = -i2 * 1.5;
        s.zeta2 = i3 * 1.5;
        let r = ohm_residual(&s, &c, &params);
        assert!(r[1].abs() < 1e-15 && r[2].abs() < 1e-15, "{r:?}");
    }

    #[test]
    fn ohm_matches_straight_line_evaluation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut r = || rng.random_range(-2.0..2.0);
            let params = ModelParams { b1: r(), e1: r(), sigma: 1.0 + r().abs(), chi: r(), mu_e: 1.0 + 0.1 * r(), ..ModelParams::default() };
            let c = FluxConstants { m: 1.0, p: 0.0, p2: 0.0, p3: 0.0, c: 0.0, e2: r(), e3: r(), shock_speed: 0.5 * r() };
            let s = PlasmaState { u: 3.0 + r(), v: r(), w: r(), b2: r(), b3: r(), zeta2: r(), zeta3: r(), t: 1.0 };
            let got = ohm_residual(&s, &c, &params);

            let ut = s.u - c.shock_speed;
            let j2 = -s.zeta3 / (params.mu_e * ut);
            let j3 = s.zeta2 / (params.mu_e * ut);
            let h = params.sigma * params.chi * ut;
            let sg = params.sigma;
            let want = [
                -sg * (params.e1 + s.v * s.b3 - s.w * s.b2) + h * (j2 * s.b3 - j3 * s.b2),
                j2 - sg * (c.e2 + s.w * params.b1 - ut * s.b3) + h * (j3 * params.b1),
                j3 - sg * (c.e3 + ut * s.b2 - s.v * params.b1) + h * (-j2 * params.b1),
            ];
            for k in 0..3 {
                assert!((got[k] - want[k]).abs() <= 1e-14 * want[k].abs().max(1.0), "{k}: {got:?} {want:?}");
            }
        }
    }

    #[test]
    fn joule_examples() {
        assert_eq!(joule_identity_check([0.0; 3], [0.0; 3], [1.0, 0.0, 0.0], [0.0; 3], 1.0), (0.0, 0.0));
        let (l, r) = joule_identity_check([2.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0; 3], [0.0; 3], 2.0);
        assert_eq!((l, r), (2.0, 2.0));
    }

    #[test]
    fn species_view_invariants() {
        let params = ModelParams::default();
        let c = FluxConstants { m: 2.0, p: 0.0, p2: 0.0, p3: 0.0, c: 0.0, e2: 0.0, e3: 0.0, shock_speed: 0.0 };
        let s = PlasmaState { u: 1.3, v: 0.0, w: 0.0, b2: 0.1, b3: 0.0, zeta2: 0.3, zeta3: -0.2, t: 1.0 };
        let sp = spec(Collision::Frequency(1.0));
        let view = species_view(&s, &c, &params, &sp).unwrap();
        let rho = 2.0 / 1.3;
        assert!((view.rho_e + view.rho_i - rho).abs() <= 1e-12 * rho);
        assert_eq!(view.rho_ee + view.rho_ei, 0.0);
        for k in 0..3 {
            assert!((view.rho_e * view.w_e[k] + view.rho_i * view.w_i[k]).abs() < 1e-12);
        }
        // electrons carry almost all of the diffusion velocity
        assert!(view.w_e[2].abs() > 1000.0 * view.w_i[2].abs());
    }

    #[test]
    fn constant_temperature_stays_in_equilibrium() {
        let x: Vec<f64> = (0..101).map(|k| -5.0 + 0.1 * k as f64).collect();
        let t = vec![1.7; x.len()];
        let u = vec![1.2; x.len()];
        let (te, ti) = temperature_split(&x, &t, &u, &spec(Collision::Frequency(3.0)), 1.0).unwrap();
        for k in 0..x.len() {
            assert!((te[k] - 1.7).abs() < 1e-12 && (ti[k] - 1.7).abs() < 1e-12);
        }
    }

    fn step_profile(x: f64) -> (f64, f64) {
        let t = 1.5 + 0.5 * (x / 0.7).tanh();
        let u = 2.0 - 0.6 * (1.0 + (x / 0.7).tanh());
        (t, u)
    }

    #[test]
    fn fast_relaxation_tracks_mean_temperature() {
        let x: Vec<f64> = (0..801).map(|k| -20.0 + 0.05 * k as f64).collect();
        let t: Vec<f64> = x.iter().map(|&v| step_profile(v).0).collect();
        let u: Vec<f64> = x.iter().map(|&v| step_profile(v).1).collect();
        let sp = SpeciesSpec { collision: Collision::Frequency(1e7), ..spec(Collision::Frequency(1.0)) };
        let (te, _) = temperature_split(&x, &t, &u, &sp, 1.0).unwrap();
        for k in 0..x.len() {
            assert!((te[k] - t[k]).abs() < 1e-4, "x = {}: {} vs {}", x[k], te[k], t[k]);
        }
    }

    #[test]
    fn finite_relaxation_matches_rk4_oracle() {
        let f = 200.0;
        let sp = SpeciesSpec { collision: Collision::Frequency(f), ..spec(Collision::Frequency(1.0)) };
        let n = 2001;
        let x: Vec<f64> = (0..n).map(|k| -20.0 + 40.0 * k as f64 / (n - 1) as f64).collect();
        let t: Vec<f64> = x.iter().map(|&v| step_profile(v).0).collect();
        let u: Vec<f64> = x.iter().map(|&v| step_profile(v).1).collect();
        let (te, ti) = temperature_split(&x, &t, &u, &sp, 1.0).unwrap();

        // fixed-step RK4 on the analytic profile with 10x finer steps
        let rate = |xv: f64, tev: f64| {
            let (tm, um) = step_profile(xv);
            2.0 * sp.m_e * f / (sp.m_i * um) * (2.0 * tm - tev - tev)
        };
        let sub = 10;
        let h = (x[1] - x[0]) / sub as f64;
        let mut y = t[0];
        let mut oracle = vec![y];
        let mut xv = x[0];
        for _ in 1..n {
            for _ in 0..sub {
                let k1 = rate(xv, y);
                let k2 = rate(xv + 0.5 * h, y + 0.5 * h * k1);
                let k3 = rate(xv + 0.5 * h, y + 0.5 * h * k2);
                let k4 = rate(xv + h, y + h * k3);
                y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                xv += h;
            }
            oracle.push(y);
        }
        let mut lag_seen = false;
        for k in 0..n {
            assert!((te[k] - oracle[k]).abs() <= 1e-6 * oracle[k].abs(), "x = {}: {} vs {}", x[k], te[k], oracle[k]);
            assert!((0.5 * (te[k] + ti[k]) - t[k]).abs() <= 1e-12 * t[k]);
            if ti[k] - te[k] > 1e-3 {
                lag_seen = true;
            }
        }
        assert!(lag_seen, "electrons should lag the ions through the layer");
    }

    #[test]
    fn non_equilibrium_upstream_is_rejected() {
        let x: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let t: Vec<f64> = x.iter().map(|&v| 1.0 + v).collect();
        let u = vec![1.0; x.len()];
        let err = temperature_split(&x, &t, &u, &spec(Collision::Frequency(1.0)), 1.0).unwrap_err();
        assert!(matches!(err, ShockError::NonConvergence(_)));
    }

    proptest! {
        #[test]
        fn partition_sums_exactly(rho in 0.0f64..1e3, g1 in 0.1f64..2000.0, g2 in -10.0f64..-0.1) {
            let (a, b) = partition_density(rho, (g1, g2)).unwrap();
            prop_assert!((a + b - rho).abs() <= 4.0 * f64::EPSILON * rho);
            let (q1, q2) = partition_charge(rho, (g1, g2)).unwrap();
            prop_assert_eq!(q1 + q2, 0.0);
        }

        #[test]
        fn diffusion_ratio(i2 in -5.0f64..5.0, i3 in -5.0f64..5.0, rho in 0.01f64..10.0, g1 in 0.1f64..50.0, g2 in -50.0f64..-0.1) {
            let (w1, w2) = diffusion_velocities([0.0, i2, i3], rho, (g1, g2)).unwrap();
            for k in 0..3 {
                prop_assert!((g2 * w1[k] - g1 * w2[k]).abs() <= 1e-12 * (g2 * w1[k]).abs().max(1e-300));
            }
        }

        #[test]
        fn joule_identity_holds(e in prop::array::uniform3(-3.0f64..3.0), u in prop::array::uniform3(-3.0f64..3.0),
                                b in prop::array::uniform3(-3.0f64..3.0), sigma in 0.01f64..100.0) {
            let uxb = cross(u, b);
            let i = [0, 1, 2].map(|k| sigma * (e[k] + uxb[k]));
            let (l, r) = joule_identity_check(i, e, u, b, sigma);
            prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
        }

        #[test]
        fn conductivity_positive(me in 0.01f64..1.0, ratio in 1.5f64..5000.0, e in 0.1f64..5.0, f in 0.01f64..100.0, nu in 0.01f64..10.0) {
            let s = SpeciesSpec { m_e: me, m_i: me * ratio, e_charge: e, collision: Collision::Frequency(f) };
            let tc = transport_coefficients(&s, nu * (me + me * ratio), nu, 1.0).unwrap();
            prop_assert!(tc.sigma > 0.0);
            let closed = e * e * nu / (me * f);
            prop_assert!((tc.sigma - closed).abs() <= 1e-12 * closed);
        }
    }
}
