//! Independent checks: first-integral residuals of a profile from finite
//! differences, the electromagnetic stress and Poynting identities on
//! synthetic fields, and frame invariance of computed profiles.
//!
//! The residual check deliberately avoids the layer right-hand side: the
//! derivatives come from finite differences of the sampled orbit and the
//! conserved quantities are assembled here from the state closures.

use crate::error::{Result, ShockError};
use crate::jump::{
    constants_from_upstream, find_rest_points, strongest_compressive_root, JumpPair, RestPointSearch,
};
use crate::layer::LayerSystem;
use crate::profile::{component_scales, find_profile, Profile, ProfileOptions};
use crate::state::{
    effective_conductivity, radiation_energy, radiation_pressure, EquationOfState, FluxConstants, ModelParams,
    PlasmaState, IDX_B2, IDX_B3, IDX_T, IDX_U, IDX_V, IDX_W, IDX_ZETA2, IDX_ZETA3, STATE_DIM,
};

/// Fewest samples accepted by [`conservation_residuals`].
pub const MIN_SAMPLES: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualOptions {
    /// Uniform resampling size.
    pub samples: usize,
    pub tol: f64,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self { samples: 80_001, tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    /// Max relative deviation of each integral (M, P, P2, P3, C) over the samples.
    pub per_constant: [f64; 5],
    /// Worst relative deviation at each sample.
    pub per_sample: Vec<f64>,
    /// Sample positions matching `per_sample`.
    pub x: Vec<f64>,
    /// Relative difference between the integrals evaluated at the upstream
    /// end and the pair's constants.
    pub constants_mismatch: [f64; 5],
    pub tol: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn worst(&self) -> f64 {
        self.per_constant.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

/// Second-order finite-difference derivative of uniformly spaced values.
pub fn fd_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "need at least three values");
    let mut d = vec![0.0; n];
    d[0] = (4.0 * (values[1] - values[0]) - (values[2] - values[0])) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (4.0 * (values[n - 1] - values[n - 2]) - (values[n - 1] - values[n - 3])) / (2.0 * h);
    d
}

/// Left-hand sides of the five integrated conservation laws and a magnitude
/// for each, from a state and its derivative.
fn integrals(y: &[f64], dy: &[f64], c: &FluxConstants, p: &ModelParams, eos: &dyn EquationOfState) -> Result<([f64; 5], [f64; 5])> {
    let (u, v, w) = (y[IDX_U], y[IDX_V], y[IDX_W]);
    let (b2, b3) = (y[IDX_B2], y[IDX_B3]);
    let (z2, z3) = (y[IDX_ZETA2], y[IDX_ZETA3]);
    let t = y[IDX_T];
    let ru = u - c.shock_speed;
    if !(ru > 0.0) || !(t > 0.0) {
        return Err(ShockError::Domain(format!("sample outside the admissible region: u - s = {ru}, T = {t}")));
    }
    let rho = c.m / ru;
    let pressure = eos.pressure(rho, t) + radiation_pressure(t, p);
    let inner = eos.internal_energy(rho, t);
    let bb = (b2 * b2 + b3 * b3) / (2.0 * p.mu_e);
    let s11 = p.eta * dy[IDX_U] - pressure;
    let s12 = p.mu_visc * dy[IDX_V];
    let s13 = p.mu_visc * dy[IDX_W];
    let flux = rho * ru;
    let kinetic = 0.5 * (u * u + v * v + w * w);
    let heat = effective_conductivity(t, p) * dy[IDX_T];
    let e_field = (c.e2 * b3 - c.e3 * b2) / p.mu_e;
    let moving = c.shock_speed * (2.0 * bb - p.b1 * p.b1 / p.mu_e) / 2.0;
    let inertia = p.beta * (z2 * z2 + z3 * z3) / (2.0 * p.mu_e * p.mu_e);
    let lhs = [
        flux,
        flux * u - s11 + bb,
        flux * v - s12 - p.b1 * b2 / p.mu_e,
        flux * w - s13 - p.b1 * b3 / p.mu_e,
        flux * (inner + p.phi + kinetic) + ru * radiation_energy(t, p) - u * s11 - v * s12 - w * s13 + inertia
            - heat
            + e_field
            + moving,
    ];
    let momentum = (flux * u).abs() + s11.abs() + bb;
    let size = [
        flux.abs(),
        momentum,
        momentum + (flux * v).abs() + s12.abs() + (p.b1 * b2 / p.mu_e).abs(),
        momentum + (flux * w).abs() + s13.abs() + (p.b1 * b3 / p.mu_e).abs(),
        (flux * (inner + p.phi + kinetic)).abs()
            + (ru * radiation_energy(t, p)).abs()
            + (u * s11).abs()
            + (v * s12).abs()
            + (w * s13).abs()
            + inertia
            + heat.abs()
            + e_field.abs()
            + moving.abs(),
    ];
    Ok((lhs, size))
}

/// Evaluates the five first integrals along a uniformly resampled profile,
/// with derivatives from second-order finite differences, and reports the
/// relative deviation from their values at the upstream end.
pub fn conservation_residuals(profile: &Profile, sys: &LayerSystem, opts: &ResidualOptions) -> Result<ResidualReport> {
    if profile.samples.len() < 2 || opts.samples < MIN_SAMPLES {
        return Err(ShockError::TooFewSamples { needed: MIN_SAMPLES, got: opts.samples.min(profile.samples.len()) });
    }
    if profile.samples[0].y.len() != STATE_DIM {
        return Err(ShockError::InvalidParameter { field: "profile", reason: "not a plasma profile".into() });
    }
    let grid = profile.resample(opts.samples);
    let n = grid.len();
    let h = (grid[n - 1].0 - grid[0].0) / (n - 1) as f64;
    let mut derivs = vec![vec![0.0; STATE_DIM]; n];
    if h > 0.0 {
        for c in 0..STATE_DIM {
            let vals: Vec<f64> = grid.iter().map(|(_, y)| y[c]).collect();
            for (i, d) in fd_derivative(&vals, h).into_iter().enumerate() {
                derivs[i][c] = d;
            }
        }
    }
    let c = &sys.constants;
    let p = &sys.params;
    let eos: &dyn EquationOfState = &sys.eos;
    let (reference, ref_size) = integrals(&profile.upstream.state, &[0.0; STATE_DIM], c, p, eos)?;
    let mut values = Vec::with_capacity(n);
    let mut scale = ref_size;
    for ((_, y), d) in grid.iter().zip(&derivs) {
        let (lhs, size) = integrals(y, d, c, p, eos)?;
        for k in 0..5 {
            scale[k] = scale[k].max(size[k]);
        }
        values.push(lhs);
    }
    let scale = scale.map(|s| s.max(f64::MIN_POSITIVE));
    let mut per_constant = [0.0f64; 5];
    let mut per_sample = Vec::with_capacity(n);
    for lhs in &values {
        let mut worst = 0.0f64;
        for k in 0..5 {
            let dev = (lhs[k] - reference[k]).abs() / scale[k];
            per_constant[k] = per_constant[k].max(dev);
            worst = worst.max(dev);
        }
        per_sample.push(worst);
    }
    let given = c.integrals();
    let mut constants_mismatch = [0.0; 5];
    for k in 0..5 {
        constants_mismatch[k] = (reference[k] - given[k]).abs() / scale[k];
    }
    let pass = per_constant.iter().chain(&constants_mismatch).all(|d| *d <= opts.tol);
    Ok(ResidualReport {
        per_constant,
        per_sample,
        x: grid.iter().map(|(x, _)| *x).collect(),
        constants_mismatch,
        tol: opts.tol,
        pass,
    })
}

/// One Fourier mode of the potentials `A2`, `A3`, `φ`, each proportional
/// to `sin(k x - ω t + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldMode {
    pub k: f64,
    pub omega: f64,
    pub phase: f64,
    pub a2: f64,
    pub a3: f64,
    pub phi: f64,
}

/// Fields varying in `x` and `t` only, derived from potentials so that
/// `∇·B = 0` and Faraday's law hold exactly:
/// `B = (B1, -∂x A3, ∂x A2)`, `E = (-∂x φ + E1, -∂t A2, -∂t A3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticFields {
    pub b1: f64,
    pub e1: f64,
    pub modes: Vec<FieldMode>,
}

impl SyntheticFields {
    /// `(E, B)` at `(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> ([f64; 3], [f64; 3]) {
        let mut e = [self.e1, 0.0, 0.0];
        let mut b = [self.b1, 0.0, 0.0];
        for m in &self.modes {
            let arg = m.k * x - m.omega * t + m.phase;
            let c = arg.cos();
            e[0] -= m.phi * m.k * c;
            e[1] += m.a2 * m.omega * c;
            e[2] += m.a3 * m.omega * c;
            b[1] -= m.a3 * m.k * c;
            b[2] += m.a2 * m.k * c;
        }
        (e, b)
    }
}

/// Largest errors of the momentum-stress identity (componentwise) and the
/// Poynting identity on a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityErrors {
    pub momentum: f64,
    pub energy: f64,
}

impl IdentityErrors {
    pub fn max(&self) -> f64 {
        self.momentum.max(self.energy)
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Checks `ρ_e E + J × B = ∂x T·1 - ∂t (ε E × B)` and
/// `E·J = -∂x (E × B/μe)_1 - ∂t (ε|E|²/2 + |B|²/2μe)` at the nodes
/// `x = j h` of `[0, 1]`, time `t0`, with `ρ_e` and `J` taken from Gauss's
/// and Ampère's laws. Every derivative is a central difference with step `h`.
pub fn lorentz_divergence_check(fields: &SyntheticFields, params: &ModelParams, h: f64, t0: f64) -> IdentityErrors {
    let eps = params.eps;
    let mu = params.mu_e;
    let f = |x: f64, t: f64| fields.eval(x, t);
    let stress = |x: f64, t: f64| -> [f64; 3] {
        let (e, b) = f(x, t);
        let pressure = 0.5 * (eps * dot(e, e) + dot(b, b) / mu);
        [eps * e[0] * e[0] + b[0] * b[0] / mu - pressure, eps * e[1] * e[0] + b[1] * b[0] / mu, eps * e[2] * e[0] + b[2] * b[0] / mu]
    };
    let momentum_density = |x: f64, t: f64| -> [f64; 3] {
        let (e, b) = f(x, t);
        cross(e, b).map(|v| eps * v)
    };
    let poynting = |x: f64, t: f64| -> f64 {
        let (e, b) = f(x, t);
        cross(e, b)[0] / mu
    };
    let energy_density = |x: f64, t: f64| -> f64 {
        let (e, b) = f(x, t);
        0.5 * eps * dot(e, e) + 0.5 * dot(b, b) / mu
    };
    let steps = (1.0 / h).round() as usize;
    let mut out = IdentityErrors { momentum: 0.0, energy: 0.0 };
    for j in 0..=steps {
        let x = j as f64 * h;
        let (e, b) = f(x, t0);
        let (ep, bp) = f(x + h, t0);
        let (em, bm) = f(x - h, t0);
        let (et, _) = f(x, t0 + h);
        let (eb, _) = f(x, t0 - h);
        let dx = |a: f64, c: f64| (a - c) / (2.0 * h);
        let charge = eps * dx(ep[0], em[0]);
        let curl_b = [0.0, -dx(bp[2], bm[2]), dx(bp[1], bm[1])];
        let current = [0, 1, 2].map(|i| curl_b[i] / mu - eps * dx(et[i], eb[i]));
        let jb = cross(current, b);
        let lhs = [0, 1, 2].map(|i| charge * e[i] + jb[i]);
        let (sp, sm) = (stress(x + h, t0), stress(x - h, t0));
        let (gp, gm) = (momentum_density(x, t0 + h), momentum_density(x, t0 - h));
        for i in 0..3 {
            let rhs = dx(sp[i], sm[i]) - dx(gp[i], gm[i]);
            out.momentum = out.momentum.max((lhs[i] - rhs).abs());
        }
        let lhs_e = dot(e, current);
        let rhs_e = -dx(poynting(x + h, t0), poynting(x - h, t0)) - dx(energy_density(x, t0 + h), energy_density(x, t0 - h));
        out.energy = out.energy.max((lhs_e - rhs_e).abs());
    }
    out
}

/// Observed convergence order from errors at successively halved steps.
pub fn convergence_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Profile computed in a frame moving with `velocity` relative to the
/// original one, mapped back and compared with the original profile.
#[derive(Clone, Debug)]
pub struct GalileanReport {
    /// Sup-norm difference, per component relative to the jump scale.
    pub discrepancy: f64,
    pub original: Profile,
    pub transformed: Profile,
}

fn connect(sys: &LayerSystem, upstream: &PlasmaState, search: &RestPointSearch, opts: &ProfileOptions) -> Result<Profile> {
    let report = find_rest_points(sys, upstream, search)?;
    let i = report
        .closest(&upstream.to_array())
        .ok_or(ShockError::NoRestPoints { failed_seeds: report.failed_seeds })?;
    let down = strongest_compressive_root(&report, upstream)
        .ok_or(ShockError::NoRestPoints { failed_seeds: report.failed_seeds })?
        .clone();
    let pair = JumpPair::new(sys, report.roots[i].clone(), down)?;
    find_profile(sys, &pair, opts)
}

/// Solves the shock in the original frame and in one moving with
/// `velocity = (V1, V2, V3)`: velocities become `u - V`, the shock speed
/// `s - V1`, and `E' = E + V × B` follows from the recomputed constants.
pub fn galilean_check(
    sys: &LayerSystem,
    upstream: &PlasmaState,
    velocity: [f64; 3],
    search: &RestPointSearch,
    opts: &ProfileOptions,
) -> Result<GalileanReport> {
    let original = connect(sys, upstream, search, opts)?;
    let c = &sys.constants;
    let rho = c.m / (upstream.u - c.shock_speed);
    let mut moved = *upstream;
    moved.u -= velocity[0];
    moved.v -= velocity[1];
    moved.w -= velocity[2];
    let mut params = sys.params.clone();
    params.e2 = None;
    params.e3 = None;
    let constants = constants_from_upstream(&moved, rho, c.shock_speed - velocity[0], &params, &sys.eos)?;
    let moved_sys = LayerSystem::new(sys.params.clone(), sys.eos.clone(), constants)?;
    let transformed = connect(&moved_sys, &moved, search, opts)?;

    let scales = component_scales(&original.upstream.state, &original.downstream.state);
    let shift = [velocity[0], velocity[1], velocity[2], 0.0, 0.0, 0.0, 0.0, 0.0];
    let (a0, a1) = original.x_range();
    let (b0, b1) = transformed.x_range();
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    let mut discrepancy = 0.0f64;
    if hi > lo {
        let n = 4001;
        for k in 0..n {
            let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let ya = original.state_at(x);
            let yb = transformed.state_at(x);
            for i in 0..STATE_DIM {
                discrepancy = discrepancy.max((ya[i] - (yb[i] + shift[i])).abs() / scales[i]);
            }
        }
    }
    Ok(GalileanReport { discrepancy, original, transformed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modes() -> SyntheticFields {
        SyntheticFields {
            b1: 0.7,
            e1: 0.2,
            modes: vec![
                FieldMode { k: 2.0 * std::f64::consts::PI, omega: 1.3, phase: 0.1, a2: 0.4, a3: -0.2, phi: 0.3 },
                FieldMode { k: 4.0 * std::f64::consts::PI, omega: -0.7, phase: 1.2, a2: 0.1, a3: 0.25, phi: -0.15 },
            ],
        }
    }

    #[test]
    fn fd_derivative_is_exact_on_quadratics() {
        let h = 0.1;
        let vals: Vec<f64> = (0..7).map(|i| {
            let x = i as f64 * h;
            3.0 * x * x - x + 2.0
        }).collect();
        for (i, d) in fd_derivative(&vals, h).iter().enumerate() {
            assert!((d - (6.0 * i as f64 * h - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn potential_fields_obey_faraday() {
        let f = modes();
        let (x, t, h) = (0.37, 0.2, 1e-5);
        let (_, bt) = f.eval(x, t + h);
        let (_, bb) = f.eval(x, t - h);
        let (ep, _) = f.eval(x + h, t);
        let (em, _) = f.eval(x - h, t);
        // ∂t B = -∇ × E with fields depending on x only
        let db2 = (bt[1] - bb[1]) / (2.0 * h);
        let db3 = (bt[2] - bb[2]) / (2.0 * h);
        let curl2 = -(ep[2] - em[2]) / (2.0 * h);
        let curl3 = (ep[1] - em[1]) / (2.0 * h);
        assert!((db2 + curl2).abs() < 1e-8);
        assert!((db3 + curl3).abs() < 1e-8);
    }

    #[test]
    fn identities_converge_at_second_order() {
        let params = ModelParams { eps: 0.8, mu_e: 1.3, ..ModelParams::default() };
        let errs: Vec<f64> = [64.0, 128.0, 256.0]
            .iter()
            .map(|n| lorentz_divergence_check(&modes(), &params, 1.0 / n, 0.3).max())
            .collect();
        for order in convergence_orders(&errs) {
            assert!((order - 2.0).abs() <= 0.2, "order {order} from {errs:?}");
        }
    }

    #[test]
    fn uniform_fields_satisfy_identities_exactly() {
        let f = SyntheticFields { b1: 1.0, e1: 0.5, modes: Vec::new() };
        let e = lorentz_divergence_check(&f, &ModelParams::default(), 0.125, 0.0);
        assert_eq!(e.max(), 0.0);
    }
}
