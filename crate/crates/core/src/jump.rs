//! Rest points of the layer system: flux constants from the upstream state,
//! a multi-start search for every state sharing them, and classification by
//! the spectrum of the layer Jacobian.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, ShockError};
use crate::layer::{LayerOde, LayerSystem};
use crate::linalg::{pseudo_solve, sorted_eigenvalues, spectral_radius};
use crate::state::{
    radiation_energy, radiation_pressure, EosSpec, EquationOfState, FluxConstants, ModelParams, PlasmaState,
    IDX_T, IDX_U,
};

/// Residual tolerance for accepting a rest point.
pub const REST_TOL: f64 = 1e-10;
/// Roots closer than this are the same root.
pub const DEDUP_RADIUS: f64 = 1e-8;
/// Relative size of `|Re λ|` below which an eigenvalue counts as center.
pub const CENTER_THRESHOLD: f64 = 1e-8;

/// An equilibrium of a layer system with its spectral classification.
#[derive(Clone, Debug, PartialEq)]
pub struct RestPoint {
    pub state: Vec<f64>,
    /// Max-norm of the rest-point residual.
    pub residual_norm: f64,
    pub n_unstable: usize,
    pub n_stable: usize,
    pub n_center: usize,
    pub eigenvalues: Vec<Complex64>,
}

impl RestPoint {
    /// Classifies `state` by the eigenvalues of `sys`'s Jacobian there.
    pub fn classify<S: LayerOde + ?Sized>(sys: &S, state: Vec<f64>, residual_norm: f64) -> Result<Self> {
        let jac = sys.jacobian(&state)?;
        let eigenvalues = sorted_eigenvalues(&jac);
        let threshold = CENTER_THRESHOLD * spectral_radius(&eigenvalues);
        let n_unstable = eigenvalues.iter().filter(|z| z.re > threshold).count();
        let n_stable = eigenvalues.iter().filter(|z| z.re < -threshold).count();
        let n_center = eigenvalues.len() - n_unstable - n_stable;
        Ok(Self { state, residual_norm, n_unstable, n_stable, n_center, eigenvalues })
    }

    /// Threshold separating center from hyperbolic eigenvalues.
    pub fn center_threshold(&self) -> f64 {
        CENTER_THRESHOLD * spectral_radius(&self.eigenvalues)
    }

    pub fn plasma_state(&self) -> Result<PlasmaState> {
        PlasmaState::from_slice(&self.state)
    }
}

/// Upstream and downstream rest points sharing one set of flux constants.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpPair {
    pub upstream: RestPoint,
    pub downstream: RestPoint,
    pub constants: FluxConstants,
}

/// Flux constants and transverse electric field of an upstream equilibrium
/// with density `rho`, in a frame where the shock moves with `shock_speed`.
pub fn constants_from_upstream(
    upstream: &PlasmaState,
    rho: f64,
    shock_speed: f64,
    params: &ModelParams,
    eos: &EosSpec,
) -> Result<FluxConstants> {
    params.validate()?;
    eos.validate()?;
    upstream.check(shock_speed)?;
    if upstream.zeta2 != 0.0 || upstream.zeta3 != 0.0 {
        return Err(ShockError::NotRestPoint(format!(
            "current variables must vanish upstream, got ({}, {})",
            upstream.zeta2, upstream.zeta3
        )));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(domain(format!("upstream density must be positive, got {rho}")));
    }
    let s = upstream;
    let mu_e = params.mu_e;
    let rel_u = s.u - shock_speed;
    let m = rho * rel_u;
    let e2 = rel_u * s.b3 - s.w * params.b1;
    let e3 = -(rel_u * s.b2 - s.v * params.b1);
    for (name, given, derived) in [("E2", params.e2, e2), ("E3", params.e3, e3)] {
        if let Some(g) = given {
            if (g - derived).abs() > 1e-10 * derived.abs().max(1.0) {
                return Err(ShockError::NotRestPoint(format!(
                    "Ohm's law is violated upstream: prescribed {name} = {g}, equilibrium needs {derived}"
                )));
            }
        }
    }
    let p_t = eos.pressure(rho, s.t) + radiation_pressure(s.t, params);
    let energy = eos.internal_energy(rho, s.t);
    let b_perp2 = s.b2 * s.b2 + s.b3 * s.b3;
    let kin = 0.5 * (s.u * s.u + s.v * s.v + s.w * s.w);
    let c = m * (energy + params.phi + kin)
        + rel_u * radiation_energy(s.t, params)
        + s.u * p_t
        + (e2 * s.b3 - e3 * s.b2) / mu_e
        + shock_speed * (b_perp2 - params.b1 * params.b1) / (2.0 * mu_e);
    let out = FluxConstants {
        m,
        p: m * s.u + p_t + b_perp2 / (2.0 * mu_e),
        p2: m * s.v - params.b1 * s.b2 / mu_e,
        p3: m * s.w - params.b1 * s.b3 / mu_e,
        c,
        e2,
        e3,
        shock_speed,
    };
    if out.integrals().iter().any(|v| !v.is_finite()) {
        return Err(domain("flux constants are not finite"));
    }
    Ok(out)
}

/// Unknowns of the rest-point system: `(u, v, w, B2, B3, T)`.
pub const REDUCED_DIM: usize = 6;

fn to_reduced(s: &PlasmaState) -> [f64; REDUCED_DIM] {
    [s.u, s.v, s.w, s.b2, s.b3, s.t]
}

fn from_reduced(z: &[f64]) -> PlasmaState {
    PlasmaState { u: z[0], v: z[1], w: z[2], b2: z[3], b3: z[4], zeta2: 0.0, zeta3: 0.0, t: z[5] }
}

/// Rest-point residual `G`: the three momentum rows, the two current rows
/// with `ζ = 0` (divided by `μe`) and the energy row.
pub fn rest_residual(sys: &LayerSystem, z: &[f64]) -> Result<[f64; REDUCED_DIM]> {
    let s = from_reduced(z);
    let p = &sys.params;
    let c = &sys.constants;
    let rel_u = s.u - c.shock_speed;
    if !(rel_u > 0.0) || !(s.t > 0.0) || z.iter().any(|v| !v.is_finite()) {
        return Err(domain("rest-point candidate outside the admissible region"));
    }
    let d = sys.derivative(&s)?;
    Ok([
        d.u * p.eta,
        d.v * p.mu_visc,
        d.w * p.mu_visc,
        c.e3 + rel_u * s.b2 - s.v * p.b1,
        -c.e2 + rel_u * s.b3 - s.w * p.b1,
        d.t * crate::state::effective_conductivity(s.t, p),
    ])
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn residual_jacobian(sys: &LayerSystem, z: &[f64]) -> Option<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(REDUCED_DIM, REDUCED_DIM);
    let mut zp = z.to_vec();
    for j in 0..REDUCED_DIM {
        let h = 1e-7 * z[j].abs().max(1e-2);
        zp[j] = z[j] + h;
        let fp = rest_residual(sys, &zp);
        zp[j] = z[j] - h;
        let fm = rest_residual(sys, &zp);
        zp[j] = z[j];
        let col: Vec<f64> = match (fp, fm) {
            (Ok(a), Ok(b)) => (0..REDUCED_DIM).map(|i| (a[i] - b[i]) / (2.0 * h)).collect(),
            (Ok(a), Err(_)) => {
                let f0 = rest_residual(sys, z).ok()?;
                (0..REDUCED_DIM).map(|i| (a[i] - f0[i]) / h).collect()
            }
            (Err(_), Ok(b)) => {
                let f0 = rest_residual(sys, z).ok()?;
                (0..REDUCED_DIM).map(|i| (f0[i] - b[i]) / h).collect()
            }
            _ => return None,
        };
        for i in 0..REDUCED_DIM {
            jac[(i, j)] = col[i];
        }
    }
    Some(jac)
}

/// Damped Newton with a pseudo-inverse step. Returns the converged point and
/// its residual max-norm.
fn newton(sys: &LayerSystem, z0: [f64; REDUCED_DIM], tol: f64, max_iter: usize) -> Option<([f64; REDUCED_DIM], f64)> {
    let mut z = z0;
    let mut g = rest_residual(sys, &z).ok()?;
    let mut norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..max_iter {
        if max_norm(&g) <= 1e-3 * tol {
            break;
        }
        let jac = residual_jacobian(sys, &z)?;
        let step = pseudo_solve(&jac, &(-DVector::from_column_slice(&g)), 1e-13)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = z;
            for i in 0..REDUCED_DIM {
                trial[i] += lambda * step[i];
            }
            if let Ok(gt) = rest_residual(sys, &trial) {
                let tn = gt.iter().map(|v| v * v).sum::<f64>().sqrt();
                if tn < norm * (1.0 - 1e-4 * lambda) || (tn <= norm && max_norm(&gt) <= tol) {
                    z = trial;
                    g = gt;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let r = max_norm(&g);
    (r <= tol).then_some((z, r))
}

/// Seed grid for [`find_rest_points`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RestPointSearch {
    /// Bounds on `(u - s)` relative to its upstream value.
    pub u_min_factor: f64,
    pub u_max_factor: f64,
    /// Number of `u` nodes in the grid and the one-dimensional scan.
    pub u_nodes: usize,
    pub scan_nodes: usize,
    /// Temperature seeds relative to upstream.
    pub t_factors: Vec<f64>,
    /// Transverse-field seed magnitudes relative to `max(|B⊥|, |B1|)`.
    pub b_factors: Vec<f64>,
    /// Number of angles for each nonzero field magnitude.
    pub b_angles: usize,
    pub tol: f64,
    pub dedup_radius: f64,
    pub max_iter: usize,
}

impl Default for RestPointSearch {
    fn default() -> Self {
        Self {
            u_min_factor: 0.02,
            u_max_factor: 3.0,
            u_nodes: 10,
            scan_nodes: 600,
            t_factors: vec![0.5, 1.0, 2.0, 5.0, 15.0],
            b_factors: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            b_angles: 4,
            tol: REST_TOL,
            dedup_radius: DEDUP_RADIUS,
            max_iter: 200,
        }
    }
}

/// Result of a rest-point search.
#[derive(Clone, Debug)]
pub struct RestPointReport {
    /// Distinct roots sorted by `u` then `T`.
    pub roots: Vec<RestPoint>,
    pub seeds: usize,
    pub failed_seeds: usize,
}

impl RestPointReport {
    /// Index of the root closest to `state`.
    pub fn closest(&self, state: &[f64]) -> Option<usize> {
        self.roots
            .iter()
            .enumerate()
            .map(|(k, r)| (k, r.state.iter().zip(state).map(|(a, b)| (a - b).powi(2)).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
    }
}

/// Temperature at which the normal momentum row closes for given `(u, B⊥)`,
/// by bisection on the total pressure.
fn temperature_for_pressure(sys: &LayerSystem, rho: f64, target: f64, t_ref: f64) -> Option<f64> {
    if !(target > 0.0) {
        return None;
    }
    let pt = |t: f64| sys.eos.pressure(rho, t) + radiation_pressure(t, &sys.params);
    let (mut lo, mut hi) = (t_ref, t_ref);
    let mut k = 0;
    while pt(lo) > target {
        lo *= 0.5;
        k += 1;
        if k > 200 {
            return None;
        }
    }
    k = 0;
    while pt(hi) < target {
        hi *= 2.0;
        k += 1;
        if k > 200 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pt(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Along the curve where every row but energy holds (away from the Alfvén
/// point), the state is fixed by `u`. Returns the state and energy residual.
fn scan_point(sys: &LayerSystem, u: f64, t_ref: f64) -> Option<([f64; REDUCED_DIM], f64)> {
    let p = &sys.params;
    let c = &sys.constants;
    let rel_u = u - c.shock_speed;
    let mu_e = p.mu_e;
    let denom = rel_u - p.b1 * p.b1 / (mu_e * c.m);
    if denom.abs() < 1e-12 {
        return None;
    }
    let b2 = (p.b1 * c.p2 / c.m - c.e3) / denom;
    let b3 = (p.b1 * c.p3 / c.m + c.e2) / denom;
    let v = (c.p2 + p.b1 * b2 / mu_e) / c.m;
    let w = (c.p3 + p.b1 * b3 / mu_e) / c.m;
    let rho = c.m / rel_u;
    let target = c.p - c.m * u - (b2 * b2 + b3 * b3) / (2.0 * mu_e);
    let t = temperature_for_pressure(sys, rho, target, t_ref)?;
    let z = [u, v, w, b2, b3, t];
    let g = rest_residual(sys, &z).ok()?;
    Some((z, g[5]))
}

/// Every rest point sharing `sys`'s constants that the seed grid reaches.
/// The upstream state is always included when it is itself a root.
pub fn find_rest_points(sys: &LayerSystem, upstream: &PlasmaState, search: &RestPointSearch) -> Result<RestPointReport> {
    let c = sys.constants;
    let rel_up = upstream.u - c.shock_speed;
    if !(rel_up > 0.0) {
        return Err(domain("upstream u - s must be positive"));
    }
    let mut seeds: Vec<[f64; REDUCED_DIM]> = Vec::new();

    // one-dimensional scan along the curve where all rows but energy vanish
    let (ulo, uhi) = (search.u_min_factor * rel_up, search.u_max_factor * rel_up);
    let nodes = search.scan_nodes.max(2);
    let mut prev: Option<([f64; REDUCED_DIM], f64)> = None;
    for k in 0..nodes {
        let rel = ulo * (uhi / ulo).powf(k as f64 / (nodes - 1) as f64);
        let cur = scan_point(sys, rel + c.shock_speed, upstream.t);
        if let (Some((z0, g0)), Some((z1, g1))) = (prev, cur) {
            if g0 * g1 <= 0.0 {
                let w = g0.abs() / (g0.abs() + g1.abs()).max(f64::MIN_POSITIVE);
                let mut z = [0.0; REDUCED_DIM];
                for i in 0..REDUCED_DIM {
                    z[i] = z0[i] + w * (z1[i] - z0[i]);
                }
                seeds.push(z);
            }
        }
        prev = cur;
    }

    // tensor grid in (u, T, B⊥)
    let b_ref = (upstream.b2.hypot(upstream.b3)).max(sys.params.b1.abs());
    let mut field_seeds: Vec<(f64, f64)> = Vec::new();
    for &f in &search.b_factors {
        if f == 0.0 || b_ref == 0.0 {
            field_seeds.push((upstream.b2, upstream.b3));
            continue;
        }
        let base = upstream.b3.atan2(upstream.b2);
        for a in 0..search.b_angles.max(1) {
            let ang = base + std::f64::consts::TAU * a as f64 / search.b_angles.max(1) as f64;
            field_seeds.push((f * b_ref * ang.cos(), f * b_ref * ang.sin()));
        }
    }
    field_seeds.dedup();
    let un = search.u_nodes.max(1);
    for k in 0..un {
        let frac = if un == 1 { 0.5 } else { k as f64 / (un - 1) as f64 };
        let rel = ulo + frac * (uhi - ulo);
        for &tf in &search.t_factors {
            for &(b2, b3) in &field_seeds {
                let p = &sys.params;
                let v = (c.p2 + p.b1 * b2 / p.mu_e) / c.m;
                let w = (c.p3 + p.b1 * b3 / p.mu_e) / c.m;
                seeds.push([rel + c.shock_speed, v, w, b2, b3, tf * upstream.t]);
            }
        }
    }

    let results: Vec<Option<([f64; REDUCED_DIM], f64)>> =
        seeds.par_iter().map(|z0| newton(sys, *z0, search.tol, search.max_iter)).collect();
    let failed_seeds = results.iter().filter(|r| r.is_none()).count();
    let mut found: Vec<([f64; REDUCED_DIM], f64)> = results.into_iter().flatten().collect();

    let up_z = to_reduced(upstream);
    if upstream.zeta2 == 0.0 && upstream.zeta3 == 0.0 {
        if let Ok(g) = rest_residual(sys, &up_z) {
            let r = max_norm(&g);
            if r <= search.tol {
                found.push((up_z, r));
            }
        }
    }
    let roots = deduplicate(sys, found, search.dedup_radius);
    if roots.is_empty() {
        return Err(ShockError::NoRestPoints { failed_seeds });
    }
    let mut classified = Vec::with_capacity(roots.len());
    for (z, r) in roots {
        let state = from_reduced(&z).to_array().to_vec();
        classified.push(RestPoint::classify(sys, state, r)?);
    }
    Ok(RestPointReport { roots: classified, seeds: seeds.len(), failed_seeds })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Clusters roots within `radius`, and merges near-coincident roots of a
/// nearly singular system (slow Newton convergence onto a double root
/// scatters the iterates over roughly `sqrt(tol)`).
fn deduplicate(
    sys: &LayerSystem,
    mut found: Vec<([f64; REDUCED_DIM], f64)>,
    radius: f64,
) -> Vec<([f64; REDUCED_DIM], f64)> {
    found.sort_by(|a, b| {
        a.0[0]
            .total_cmp(&b.0[0])
            .then(a.0[5].total_cmp(&b.0[5]))
            .then(a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut clusters: Vec<Vec<([f64; REDUCED_DIM], f64)>> = Vec::new();
    for item in found {
        match clusters.iter_mut().find(|cl| cl.iter().any(|m| distance(&m.0, &item.0) <= radius)) {
            Some(cl) => cl.push(item),
            None => clusters.push(vec![item]),
        }
    }
    let pick = |cl: &Vec<([f64; REDUCED_DIM], f64)>| {
        *cl.iter()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0[0].total_cmp(&b.0[0])))
            .expect("cluster is non-empty")
    };
    let mut reps: Vec<([f64; REDUCED_DIM], f64)> = clusters.iter().map(pick).collect();

    // merge near-double roots
    let near_singular = |z: &[f64]| -> bool {
        residual_jacobian(sys, z).is_some_and(|j| {
            let sv = j.singular_values();
            sv.min() <= 1e-5 * sv.max()
        })
    };
    let mut merged: Vec<([f64; REDUCED_DIM], f64)> = Vec::new();
    for r in reps.drain(..) {
        let scale = r.0.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if let Some(m) = merged
            .iter_mut()
            .find(|m| distance(&m.0, &r.0) <= 1e-4 * scale && (near_singular(&m.0) || near_singular(&r.0)))
        {
            if r.1 < m.1 {
                *m = r;
            }
        } else {
            merged.push(r);
        }
    }
    merged.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[5].total_cmp(&b.0[5])));
    merged
}

/// Classifies a state that should be a rest point of `sys`.
pub fn classify_rest_point(point: &PlasmaState, sys: &LayerSystem) -> Result<RestPoint> {
    if point.zeta2 != 0.0 || point.zeta3 != 0.0 {
        return Err(ShockError::NotRestPoint("current variables must vanish at a rest point".into()));
    }
    let g = rest_residual(sys, &to_reduced(point))?;
    let r = max_norm(&g);
    if r > REST_TOL {
        return Err(ShockError::NotRestPoint(format!("residual {r:.3e} exceeds {REST_TOL:.0e}")));
    }
    RestPoint::classify(sys, point.to_array().to_vec(), r)
}

impl JumpPair {
    /// Pairs two classified rest points, checking that the downstream state
    /// reproduces the upstream constants.
    pub fn new(sys: &LayerSystem, upstream: RestPoint, downstream: RestPoint) -> Result<Self> {
        let down = downstream.plasma_state()?;
        let rho = sys.constants.m / (down.u - sys.constants.shock_speed);
        let mut params = sys.params.clone();
        params.e2 = None;
        params.e3 = None;
        let again = constants_from_upstream(&down, rho, sys.constants.shock_speed, &params, &sys.eos)?;
        let a = sys.constants;
        let pairs = [
            (a.m, again.m),
            (a.p, again.p),
            (a.p2, again.p2),
            (a.p3, again.p3),
            (a.c, again.c),
            (a.e2, again.e2),
            (a.e3, again.e3),
        ];
        let scale = pairs.iter().fold(1.0f64, |s, (x, _)| s.max(x.abs()));
        if pairs.iter().any(|(x, y)| (x - y).abs() > 1e-8 * scale) {
            return Err(ShockError::NotRestPoint("downstream state does not share the upstream constants".into()));
        }
        Ok(Self { upstream, downstream, constants: sys.constants })
    }

    /// Pairs two states of a generic layer system. The plasma flux constants
    /// are left at zero apart from the shock speed.
    pub fn general<S: LayerOde + ?Sized>(sys: &S, upstream: Vec<f64>, downstream: Vec<f64>, shock_speed: f64) -> Result<Self> {
        let classify = |y: Vec<f64>| -> Result<RestPoint> {
            let mut f = vec![0.0; y.len()];
            sys.rhs(&y, &mut f)?;
            let r = max_norm(&f);
            if r > REST_TOL {
                return Err(ShockError::NotRestPoint(format!("residual {r:.3e} exceeds {REST_TOL:.0e}")));
            }
            RestPoint::classify(sys, y, r)
        };
        let constants = FluxConstants { m: 0.0, p: 0.0, p2: 0.0, p3: 0.0, c: 0.0, e2: 0.0, e3: 0.0, shock_speed };
        Ok(Self { upstream: classify(upstream)?, downstream: classify(downstream)?, constants })
    }

    pub fn is_degenerate(&self) -> bool {
        distance(&self.upstream.state, &self.downstream.state) <= DEDUP_RADIUS
    }

    pub fn reversed(&self) -> Self {
        Self { upstream: self.downstream.clone(), downstream: self.upstream.clone(), constants: self.constants }
    }
}

/// The root with the smallest normal velocity below the upstream one.
pub fn strongest_compressive_root<'a>(report: &'a RestPointReport, upstream: &PlasmaState) -> Option<&'a RestPoint> {
    report
        .roots
        .iter()
        .filter(|r| r.state[IDX_U] < upstream.u - DEDUP_RADIUS && r.state[IDX_T] > 0.0)
        .min_by(|a, b| a.state[IDX_U].total_cmp(&b.state[IDX_U]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gas_system(mach: f64) -> (LayerSystem, PlasmaState) {
        // a⁻ = 1 with ρ⁻ = 1, γ = 5/3: p⁻ = 3/5, T⁻ = p/(ρR)
        let gamma = 5.0 / 3.0;
        let p = 1.0 / gamma;
        let up = PlasmaState::quiescent(mach, 0.0, 0.0, 0.0, 0.0, p);
        let params = ModelParams::default();
        let eos = EosSpec::ideal_gas(1.0, gamma);
        let c = constants_from_upstream(&up, 1.0, 0.0, &params, &eos).unwrap();
        (LayerSystem::new(params, eos, c).unwrap(), up)
    }

    #[test]
    fn constants_examples() {
        let params = ModelParams::default();
        let eos = EosSpec::ideal_gas(1.0, 5.0 / 3.0);
        let up = PlasmaState::quiescent(1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let c = constants_from_upstream(&up, 1.0, 0.0, &params, &eos).unwrap();
        assert_eq!((c.m, c.p, c.p2, c.p3), (1.0, 2.0, 0.0, 0.0));

        let params = ModelParams { b1: 1.0, ..ModelParams::default() };
        let up = PlasmaState::quiescent(1.0, 0.0, 0.0, 0.5, 0.0, 1.0);
        let c = constants_from_upstream(&up, 1.0, 0.0, &params, &eos).unwrap();
        assert_eq!(c.e3, -0.5);

        let bad = ModelParams { b1: 1.0, e3: Some(0.2), ..ModelParams::default() };
        assert!(matches!(constants_from_upstream(&up, 1.0, 0.0, &bad, &eos), Err(ShockError::NotRestPoint(_))));
        let mut moving = up;
        moving.zeta2 = 0.1;
        assert!(constants_from_upstream(&moving, 1.0, 0.0, &params, &eos).is_err());
    }

    #[test]
    fn upstream_is_a_rest_point() {
        let (sys, up) = gas_system(2.0);
        let d = sys.derivative(&up).unwrap();
        assert!(d.to_array().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn mach_two_gas_jump() {
        let (sys, up) = gas_system(2.0);
        let report = find_rest_points(&sys, &up, &RestPointSearch::default()).unwrap();
        assert_eq!(report.roots.len(), 2, "{:?}", report.roots);
        let down = strongest_compressive_root(&report, &up).unwrap();
        let g = 5.0 / 3.0;
        let m2 = 4.0;
        let density_ratio = (g + 1.0) * m2 / ((g - 1.0) * m2 + 2.0);
        let pressure_ratio = 1.0 + 2.0 * g * (m2 - 1.0) / (g + 1.0);
        let rho_down = sys.constants.m / down.state[IDX_U];
        let p_down = rho_down * down.state[IDX_T];
        assert!((rho_down - density_ratio).abs() < 1e-9);
        assert!((p_down / (1.0 / g) - pressure_ratio).abs() < 1e-9);
        assert!(report.roots.iter().any(|r| distance(&r.state, &up.to_array()) < 1e-12));
        // supersonic upstream must have an unstable direction, the
        // subsonic downstream a stable one
        let upr = &report.roots[report.closest(&up.to_array()).unwrap()];
        assert!(upr.n_unstable >= 1);
        assert!(down.n_stable >= 1);
        assert_eq!(upr.n_unstable + upr.n_stable + upr.n_center, 8);
    }

    #[test]
    fn sonic_upstream_gives_a_double_root() {
        let (sys, up) = gas_system(1.0);
        let report = find_rest_points(&sys, &up, &RestPointSearch::default()).unwrap();
        assert_eq!(report.roots.len(), 1, "{:?}", report.roots.iter().map(|r| r.state.clone()).collect::<Vec<_>>());
        assert!(report.roots[0].n_center >= 1);
    }

    #[test]
    fn switch_on_roots_satisfy_the_residual() {
        let params = ModelParams { b1: 3.0, ..ModelParams::default() };
        let eos = EosSpec::ideal_gas(1.0, 5.0 / 3.0);
        let up = PlasmaState::quiescent(4.0, 0.0, 0.0, 0.0, 0.0, 0.6);
        let c = constants_from_upstream(&up, 1.0, 0.0, &params, &eos).unwrap();
        let sys = LayerSystem::new(params, eos, c).unwrap();
        let report = find_rest_points(&sys, &up, &RestPointSearch::default()).unwrap();
        assert!(report.roots.iter().any(|r| r.state[3].hypot(r.state[4]) > 1e-3));
        for r in &report.roots {
            let z = to_reduced(&r.plasma_state().unwrap());
            assert!(max_norm(&rest_residual(&sys, &z).unwrap()) <= REST_TOL);
        }
    }

    #[test]
    fn shared_constants_for_every_root() {
        let params = ModelParams { b1: 0.5, ..ModelParams::default() };
        let eos = EosSpec::ideal_gas(1.0, 5.0 / 3.0);
        let up = PlasmaState::quiescent(2.0, 0.0, 0.0, 0.4, 0.2, 0.6);
        let c = constants_from_upstream(&up, 1.0, 0.0, &params, &eos).unwrap();
        let sys = LayerSystem::new(params, eos, c).unwrap();
        let report = find_rest_points(&sys, &up, &RestPointSearch::default()).unwrap();
        assert!(report.roots.len() >= 2);
        let upr = classify_rest_point(&up, &sys).unwrap();
        for r in &report.roots {
            JumpPair::new(&sys, upr.clone(), r.clone()).unwrap();
        }
    }

    #[test]
    fn seed_order_does_not_change_roots() {
        let (sys, up) = gas_system(1.6);
        let a = find_rest_points(&sys, &up, &RestPointSearch::default()).unwrap();
        let mut rev = RestPointSearch::default();
        rev.t_factors.reverse();
        rev.b_factors.reverse();
        let b = find_rest_points(&sys, &up, &rev).unwrap();
        assert_eq!(a.roots.len(), b.roots.len());
        for (x, y) in a.roots.iter().zip(&b.roots) {
            assert!(distance(&x.state, &y.state) <= 1e-8);
        }
    }

    #[test]
    fn classification_rejects_non_rest_points() {
        let (sys, mut up) = gas_system(2.0);
        up.u *= 1.1;
        assert!(matches!(classify_rest_point(&up, &sys), Err(ShockError::NotRestPoint(_))));
    }
}
