//! Heteroclinic orbits of layer systems: shock profiles.
//!
//! [`find_profile`] launches from the rest point whose launch manifold has
//! the smaller dimension (the unstable manifold of the upstream state, or the
//! stable manifold of the downstream state integrated backward) and closes
//! the far end with a projection condition: on arrival near the other rest
//! point the deviation must have no component along the directions that
//! repel the flow there. Launch directions are parametrized by the deviation
//! they would have after a fixed time of linear flow, which keeps slow and
//! fast modes on an equal footing.
//!
//! All geometry is done in scaled coordinates `D⁻¹ (y - rest)`, with
//! `D = diag(max(|Δ_i|, 1e-3 · ‖Δ‖∞))` and `Δ` the jump across the shock.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bvp::{self, BvpOptions, EndCondition};
use crate::error::{IntegrationError, Result, ShockError};
use crate::jump::{JumpPair, RestPoint};
use crate::layer::{Dissipative, LayerOde};
use crate::linalg::{
    complement_basis, invariant_subspace, levenberg_marquardt, matrix_sign, null_vector, sorted_eigenvalues,
    spectral_radius, LmOptions, Side,
};
use crate::ode::{hermite_eval, integrate, quintic_eval, weighted_distance, OdeOptions, Outcome, Sample, Target};

/// Settings for a single shot and the launch/closure geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootingSpec {
    /// Weighted distance of the launch point from its rest point.
    pub launch_offset: f64,
    /// Launch direction in the launch basis; `None` aims at the other state.
    pub manifold_coeffs: Option<Vec<f64>>,
    pub ode: OdeOptions,
    /// Cap on the integration length; `None` derives one from the spectrum.
    pub max_span: Option<f64>,
    /// Required distance of the first sample from the upstream state.
    pub eps_up: f64,
    /// Required terminal distance from the downstream state.
    pub eps_down: f64,
    /// Distance from the far rest point at which the projection condition is
    /// imposed and the linear tail takes over.
    pub match_radius: f64,
    /// Radius at which launch directions are parametrized.
    pub linear_radius: f64,
}

impl Default for ShootingSpec {
    fn default() -> Self {
        Self {
            launch_offset: 1e-6,
            manifold_coeffs: None,
            ode: OdeOptions::default(),
            max_span: None,
            eps_up: 1e-8,
            eps_down: 1e-6,
            match_radius: 1e-5,
            linear_radius: 1e-4,
        }
    }
}

impl ShootingSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("launch_offset", self.launch_offset),
            ("rtol", self.ode.rtol),
            ("atol", self.ode.atol),
            ("eps_up", self.eps_up),
            ("eps_down", self.eps_down),
            ("match_radius", self.match_radius),
            ("linear_radius", self.linear_radius),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ShockError::InvalidParameter { field, reason: format!("must be positive, got {v}") });
            }
        }
        if self.max_span.is_some_and(|s| !(s > 0.0)) {
            return Err(ShockError::InvalidParameter { field: "max_span", reason: "must be positive".into() });
        }
        Ok(())
    }
}

/// Settings for [`find_profile`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileOptions {
    pub shooting: ShootingSpec,
    /// Number of multi-start points (the first is the aimed direction).
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Launch parameters of a previous solution to start from.
    pub warm_start: Option<Vec<f64>>,
    pub method: ProfileMethod,
    pub collocation: BvpOptions,
    /// Initial orbit for collocation, e.g. a rescaled earlier profile.
    pub initial_guess: Option<Vec<Sample>>,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            shooting: ShootingSpec::default(),
            starts: 8,
            seed: 0,
            max_iter: 40,
            warm_start: None,
            method: ProfileMethod::Auto,
            collocation: BvpOptions::default(),
            initial_guess: None,
        }
    }
}

/// How [`find_profile`] computes the orbit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMethod {
    /// Shooting, then collocation if shooting finds nothing.
    #[default]
    Auto,
    Shooting,
    Collocation,
}

/// Which rest point the orbit was launched from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LaunchSide {
    Upstream,
    Downstream,
    /// Solved as a boundary-value problem.
    Collocation,
    /// Zero-strength shock, no integration.
    None,
}

/// A computed shock profile.
#[derive(Clone, Debug)]
pub struct Profile {
    /// Samples ordered by `x`, with `dy = f(y)`.
    pub samples: Vec<Sample>,
    pub upstream: RestPoint,
    pub downstream: RestPoint,
    /// Largest of the terminal distances and the gap at the matching point.
    pub mismatch: f64,
    /// Largest relative first-integral defect per sample.
    pub conservation_residuals: Vec<f64>,
    /// Length over which the primary component covers the central 80% of its jump.
    pub width: f64,
    /// Launch parameters, usable as a warm start.
    pub coefficients: Vec<f64>,
    pub launch_side: LaunchSide,
    /// Component used for alignment and width.
    pub primary: usize,
    /// Per-component scales of the matching metric.
    pub scales: Vec<f64>,
    /// Largest scaled ODE defect of a collocation solution; zero for
    /// integrated orbits.
    pub defect: f64,
    /// Second derivatives `J(y) f(y)` at the samples; empty means cubic
    /// interpolation.
    pub curvature: Vec<Vec<f64>>,
}

impl Profile {
    pub fn x_range(&self) -> (f64, f64) {
        (self.samples[0].x, self.samples[self.samples.len() - 1].x)
    }

    /// State at `x` by Hermite interpolation (quintic when curvatures are
    /// present), constant outside the range.
    pub fn state_at(&self, x: f64) -> Vec<f64> {
        if self.curvature.len() == self.samples.len() {
            quintic_eval(&self.samples, &self.curvature, x)
        } else {
            hermite_eval(&self.samples, x)
        }
    }

    /// `n` samples on a uniform grid over the sample range.
    pub fn resample(&self, n: usize) -> Vec<(f64, Vec<f64>)> {
        let (a, b) = self.x_range();
        let n = n.max(2);
        (0..n)
            .map(|k| {
                let x = if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 };
                (x, self.state_at(x))
            })
            .collect()
    }

    /// Weighted distance of the first sample from the upstream state.
    pub fn upstream_distance(&self) -> f64 {
        weighted_distance(&self.samples[0].y, &self.upstream.state, &self.scales)
    }

    /// Weighted distance of the last sample from the downstream state.
    pub fn downstream_distance(&self) -> f64 {
        weighted_distance(&self.samples[self.samples.len() - 1].y, &self.downstream.state, &self.scales)
    }

    pub fn max_conservation_residual(&self) -> f64 {
        self.conservation_residuals.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

/// Per-component scales of the matching metric.
pub fn component_scales(a: &[f64], b: &[f64]) -> Vec<f64> {
    let jump = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let floor = if jump > 0.0 { 1e-3 * jump } else { 1e-3 * a.iter().fold(1.0f64, |m, x| m.max(x.abs())) };
    a.iter().zip(b).map(|(x, y)| (x - y).abs().max(floor)).collect()
}

/// Orthonormal basis of the unstable subspace at a rest point, and real
/// eigenvectors for its real eigenvalues.
#[derive(Clone, Debug)]
pub struct UnstableBasis {
    /// Orthonormal columns; for a single direction, oriented so that the
    /// primary component decreases.
    pub basis: DMatrix<f64>,
    /// `(λ, v)` with `‖v‖ = 1` for each real unstable eigenvalue.
    pub eigenvectors: Vec<(f64, DVector<f64>)>,
}

/// Unstable subspace of `sys` at `point`, in unscaled coordinates.
pub fn unstable_basis<S: LayerOde + ?Sized>(sys: &S, point: &RestPoint) -> Result<UnstableBasis> {
    let jac = sys.jacobian(&point.state)?;
    let threshold = point.center_threshold();
    let mut basis = invariant_subspace(&jac, Side::Unstable, threshold)
        .ok_or_else(|| ShockError::NonConvergence("matrix sign iteration failed".into()))?;
    if basis.ncols() == 0 {
        return Err(ShockError::NoUnstableDirection);
    }
    let p = sys.primary_component();
    for j in 0..basis.ncols() {
        let lead = if basis[(p, j)] != 0.0 {
            basis[(p, j)]
        } else {
            basis.column(j).iter().copied().find(|v| *v != 0.0).unwrap_or(1.0)
        };
        if lead > 0.0 {
            basis.column_mut(j).neg_mut();
        }
    }
    let n = jac.nrows();
    let mut eigenvectors = Vec::new();
    for z in sorted_eigenvalues(&jac) {
        if z.re > threshold && z.im == 0.0 {
            let shifted = &jac - DMatrix::identity(n, n) * z.re;
            if let Some(mut v) = null_vector(&shifted) {
                if v[p] > 0.0 {
                    v.neg_mut();
                }
                eigenvectors.push((z.re, v));
            }
        }
    }
    Ok(UnstableBasis { basis, eigenvectors })
}

/// Launch geometry at one rest point, in scaled coordinates.
struct Launch {
    rest: Vec<f64>,
    /// Orthonormal basis of the launch subspace.
    q: DMatrix<f64>,
    /// Restricted operator in the shooting time direction.
    a: DMatrix<f64>,
    /// Linear back-propagation from the parametrization radius to the launch.
    back: DMatrix<f64>,
    slowest: f64,
}

/// Closure geometry at the far rest point, in scaled coordinates.
struct Closure {
    rest: Vec<f64>,
    /// Projector onto the directions that repel the flow (in shooting time).
    bad: DMatrix<f64>,
    /// Jacobian in the shooting time direction.
    jac: DMatrix<f64>,
}

struct Geometry {
    scales: Vec<f64>,
    offset: f64,
    direction: f64,
    launch: Launch,
    closure: Closure,
    span: f64,
}

fn scaled_jacobian<S: LayerOde + ?Sized>(sys: &S, rest: &[f64], scales: &[f64], direction: f64) -> Result<DMatrix<f64>> {
    let j = sys.jacobian(rest)?;
    let n = j.nrows();
    Ok(DMatrix::from_fn(n, n, |r, c| direction * j[(r, c)] * scales[c] / scales[r]))
}

fn geometry<S: LayerOde + ?Sized>(sys: &S, pair: &JumpPair, from_upstream: bool, spec: &ShootingSpec) -> Result<Geometry> {
    let scales = component_scales(&pair.upstream.state, &pair.downstream.state);
    let (launch_rp, far_rp, direction) = if from_upstream {
        (&pair.upstream, &pair.downstream, 1.0)
    } else {
        (&pair.downstream, &pair.upstream, -1.0)
    };
    let jl = scaled_jacobian(sys, &launch_rp.state, &scales, direction)?;
    let thr_l = CENTER_REL * spectral_radius(&sorted_eigenvalues(&jl));
    let q = invariant_subspace(&jl, Side::Unstable, thr_l)
        .ok_or_else(|| ShockError::NonConvergence("matrix sign iteration failed".into()))?;
    if q.ncols() == 0 {
        return Err(ShockError::NoUnstableDirection);
    }
    let a = q.transpose() * &jl * &q;
    let ev_a = sorted_eigenvalues(&a);
    let slowest = ev_a.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let s_time = (spec.linear_radius / spec.launch_offset).ln().max(0.0) / slowest;
    let back = (&a * (-s_time)).exp();

    let jf = scaled_jacobian(sys, &far_rp.state, &scales, direction)?;
    let n = jf.nrows();
    let thr_f = CENTER_REL * spectral_radius(&sorted_eigenvalues(&jf));
    // attracting in shooting time: Re λ < -thr
    let sign = matrix_sign(&(-&jf - DMatrix::identity(n, n) * thr_f))
        .ok_or_else(|| ShockError::NonConvergence("matrix sign iteration failed".into()))?;
    let good = (DMatrix::identity(n, n) + sign) * 0.5;
    let bad = DMatrix::identity(n, n) - &good;
    let far_slowest = sorted_eigenvalues(&jf)
        .iter()
        .filter(|z| z.re < -thr_f)
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min);
    let span = spec.max_span.unwrap_or_else(|| {
        let rates = slowest.min(far_slowest).max(1e-300);
        200.0 / rates
    });
    Ok(Geometry {
        scales,
        offset: spec.launch_offset,
        direction,
        launch: Launch { rest: launch_rp.state.clone(), q, a, back, slowest },
        closure: Closure { rest: far_rp.state.clone(), bad, jac: jf },
        span,
    })
}

/// Relative threshold for center eigenvalues.
const CENTER_REL: f64 = 1e-8;

struct Shot {
    samples: Vec<Sample>,
    /// Scaled deviation from the far rest point at the end of the shot.
    deviation: DVector<f64>,
    residual: DVector<f64>,
    closest: f64,
}

fn unscale(rest: &[f64], scales: &[f64], dev: &DVector<f64>) -> Vec<f64> {
    rest.iter().zip(scales).zip(dev.iter()).map(|((r, s), d)| r + s * d).collect()
}

/// Launch deviation in launch-basis coordinates, of length `launch_offset`.
fn launch_deviation(g: &Geometry, dir: &DVector<f64>) -> DVector<f64> {
    let d = &g.launch.back * dir;
    let n = d.norm();
    if n > 0.0 {
        d * (g.offset / n)
    } else {
        d
    }
}

fn launch_point(g: &Geometry, dir: &DVector<f64>) -> Vec<f64> {
    let dev = &g.launch.q * launch_deviation(g, dir);
    unscale(&g.launch.rest, &g.scales, &dev)
}

fn fire<S: LayerOde + ?Sized>(sys: &S, g: &Geometry, dir: &DVector<f64>, spec: &ShootingSpec) -> std::result::Result<Shot, (IntegrationError, f64)> {
    let y0 = launch_point(g, dir);
    let target = Target { point: &g.closure.rest, scale: &g.scales, radius: spec.match_radius };
    match integrate(sys, g.direction, &y0, g.span, &spec.ode, None, Some(target)) {
        Ok(tr) if tr.outcome == Outcome::Target => {
            let y = &tr.last().y;
            let dev = DVector::from_iterator(
                y.len(),
                y.iter().zip(&g.closure.rest).zip(&g.scales).map(|((a, b), s)| (a - b) / s),
            );
            let residual = &g.closure.bad * &dev / spec.match_radius;
            Ok(Shot { closest: tr.closest_approach, samples: tr.samples, deviation: dev, residual })
        }
        Ok(tr) => {
            let last = tr.last().y.clone();
            Err((IntegrationError::SpanExceeded { span: g.span, last }, tr.closest_approach))
        }
        Err(e) => {
            let d = weighted_distance(e.last_state(), &g.closure.rest, &g.scales);
            Err((e, d))
        }
    }
}

fn unit_direction(base: &DVector<f64>, tangent: &DMatrix<f64>, a: &DVector<f64>) -> DVector<f64> {
    let v = base + tangent * a;
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        base.clone()
    }
}

/// Default launch direction: the scaled jump projected on the launch basis.
fn aimed_direction(g: &Geometry) -> DVector<f64> {
    let jump = DVector::from_iterator(
        g.scales.len(),
        g.closure.rest.iter().zip(&g.launch.rest).zip(&g.scales).map(|((a, b), s)| (a - b) / s),
    );
    // invert the back-propagation so the direction is the one seen at the
    // parametrization radius
    let proj = g.launch.q.transpose() * jump;
    let n = proj.norm();
    if n > 1e-12 {
        proj / n
    } else {
        let mut e = DVector::zeros(g.launch.q.ncols());
        e[0] = 1.0;
        e
    }
}

fn constant_profile<S: LayerOde + ?Sized>(sys: &S, pair: &JumpPair) -> Profile {
    let y = pair.upstream.state.clone();
    let dy = vec![0.0; y.len()];
    let samples = vec![
        Sample { x: -1.0, y: y.clone(), dy: dy.clone() },
        Sample { x: 0.0, y: y.clone(), dy: dy.clone() },
        Sample { x: 1.0, y: y.clone(), dy },
    ];
    let residuals = samples.iter().map(|s| max_defect(sys, &s.y, &s.dy)).collect();
    Profile {
        samples,
        upstream: pair.upstream.clone(),
        downstream: pair.downstream.clone(),
        mismatch: weighted_distance(&pair.upstream.state, &pair.downstream.state, &component_scales(&y, &y)),
        conservation_residuals: residuals,
        width: 0.0,
        coefficients: Vec::new(),
        launch_side: LaunchSide::None,
        primary: sys.primary_component(),
        scales: component_scales(&y, &y),
        defect: 0.0,
        curvature: Vec::new(),
    }
}

fn max_defect<S: LayerOde + ?Sized>(sys: &S, y: &[f64], dy: &[f64]) -> f64 {
    sys.integral_defects(y, dy).into_iter().fold(0.0f64, f64::max)
}

/// Samples of the linear flow `t ↦ rest + D exp(J t) v` for `t ∈ [0, t_end]`,
/// restricted to the decaying subspace of `jac` so growing modes are never
/// formed. `v` is projected onto that subspace first.
fn decaying_tail(rest: &[f64], scales: &[f64], jac: &DMatrix<f64>, v: &DVector<f64>, eps: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    let thr = CENTER_REL * spectral_radius(&sorted_eigenvalues(jac));
    let q = invariant_subspace(jac, Side::Stable, thr)
        .ok_or_else(|| ShockError::NonConvergence("matrix sign iteration failed".into()))?;
    if q.ncols() == 0 {
        return Ok(Vec::new());
    }
    let a = q.transpose() * jac * &q;
    let c = q.transpose() * v;
    let d0 = c.norm();
    if !(d0 > eps) {
        return Ok(Vec::new());
    }
    let rate = sorted_eigenvalues(&a).iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
    let t_end = (d0 / eps).ln() / rate * 1.5;
    let count = tail_samples(t_end, spectral_radius(&sorted_eigenvalues(&a)));
    Ok((0..count)
        .map(|k| {
            let t = t_end * k as f64 / (count - 1) as f64;
            let dev = &q * ((&a * t).exp() * &c);
            (t, unscale(rest, scales, &dev))
        })
        .collect())
}

fn tail_samples(length: f64, rate: f64) -> usize {
    ((length * rate * 4.0).ceil() as usize).clamp(24, 4000)
}

/// Assembles a profile from a converged shot plus its two linear tails.
fn assemble<S: LayerOde + ?Sized>(
    sys: &S,
    pair: &JumpPair,
    g: &Geometry,
    dir: &DVector<f64>,
    shot: Shot,
    coefficients: Vec<f64>,
    spec: &ShootingSpec,
) -> Result<Profile> {
    let eps_tail = 0.5 * spec.eps_up.min(spec.eps_down);
    // launch side: t ↦ rest + D Q exp(A t) back dir for t < 0
    let launch_dev = launch_deviation(g, dir);
    let l0 = launch_dev.norm().max(f64::MIN_POSITIVE);
    let t_launch = if l0 > eps_tail { (l0 / eps_tail).ln() / g.launch.slowest * 1.5 } else { 0.0 };
    let mut pts: Vec<(f64, Vec<f64>)> = Vec::new();
    if t_launch > 0.0 {
        let rate = spectral_radius(&sorted_eigenvalues(&g.launch.a));
        let count = tail_samples(t_launch, rate);
        let qa = &g.launch.q;
        for k in 0..count - 1 {
            let t = -t_launch + t_launch * k as f64 / (count - 1) as f64;
            let dev = qa * ((&g.launch.a * t).exp() * &launch_dev);
            pts.push((t, unscale(&g.launch.rest, &g.scales, &dev)));
        }
    }
    let n_shot = shot.samples.len();
    for s in &shot.samples {
        pts.push((s.x, s.y.clone()));
    }
    // far side: follow the linear flow on the attracting subspace
    let tau_end = shot.samples[n_shot - 1].x;
    let gap = (&g.closure.bad * &shot.deviation).norm();
    for (t, y) in decaying_tail(&g.closure.rest, &g.scales, &g.closure.jac, &shot.deviation, eps_tail)?.into_iter().skip(1) {
        pts.push((tau_end + t, y));
    }
    if g.direction < 0.0 {
        pts.reverse();
        for p in pts.iter_mut() {
            p.0 = -p.0;
        }
    }
    let side = if g.direction > 0.0 { LaunchSide::Upstream } else { LaunchSide::Downstream };
    build_profile(sys, pair, &g.scales, pts, coefficients, side, gap, 0.0)
}

#[allow(clippy::too_many_arguments)]
fn build_profile<S: LayerOde + ?Sized>(
    sys: &S,
    pair: &JumpPair,
    scales: &[f64],
    pts: Vec<(f64, Vec<f64>)>,
    coefficients: Vec<f64>,
    launch_side: LaunchSide,
    gap: f64,
    defect: f64,
) -> Result<Profile> {
    let mut samples: Vec<Sample> = Vec::with_capacity(pts.len());
    for (x, y) in pts {
        if let Some(last) = samples.last() {
            if !(x > last.x) {
                continue;
            }
        }
        let mut dy = vec![0.0; y.len()];
        sys.rhs(&y, &mut dy)?;
        samples.push(Sample { x, y, dy });
    }
    let primary = alignment_component(sys, pair, scales);
    align(&mut samples, pair, primary);
    let conservation_residuals = samples.iter().map(|s| max_defect(sys, &s.y, &s.dy)).collect();
    let mut curvature = Vec::with_capacity(samples.len());
    for s in &samples {
        let jac = sys.jacobian(&s.y)?;
        curvature.push((jac * DVector::from_column_slice(&s.dy)).as_slice().to_vec());
    }
    let mut profile = Profile {
        samples,
        upstream: pair.upstream.clone(),
        downstream: pair.downstream.clone(),
        mismatch: 0.0,
        conservation_residuals,
        width: 0.0,
        coefficients,
        launch_side,
        primary,
        scales: scales.to_vec(),
        defect,
        curvature,
    };
    profile.mismatch = gap.max(profile.downstream_distance()).max(profile.upstream_distance());
    profile.width = width(&profile.samples, pair, primary);
    Ok(profile)
}

fn alignment_component<S: LayerOde + ?Sized>(sys: &S, pair: &JumpPair, scales: &[f64]) -> usize {
    let p = sys.primary_component();
    let jumps: Vec<f64> = pair.upstream.state.iter().zip(&pair.downstream.state).map(|(a, b)| (a - b).abs()).collect();
    let floor = scales.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if jumps[p] >= floor {
        return p;
    }
    jumps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(p)
}

/// First `x` where component `c` crosses `level`, refined on the Hermite
/// interpolant.
fn crossing(samples: &[Sample], c: usize, level: f64) -> Option<f64> {
    let g0 = samples[0].y[c] - level;
    for w in samples.windows(2) {
        let (ga, gb) = (w[0].y[c] - level, w[1].y[c] - level);
        if ga == 0.0 {
            return Some(w[0].x);
        }
        if ga * gb < 0.0 || (gb == 0.0 && g0 != 0.0) {
            let (mut a, mut b) = (w[0].x, w[1].x);
            let pair = [w[0].clone(), w[1].clone()];
            let f = |x: f64| hermite_eval(&pair, x)[c] - level;
            let mut fa = f(a);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 || (b - a) <= 1e-15 * (1.0 + m.abs()) {
                    return Some(m);
                }
                if (fa < 0.0) == (fm < 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
    }
    None
}

fn align(samples: &mut [Sample], pair: &JumpPair, c: usize) {
    let mid = 0.5 * (pair.upstream.state[c] + pair.downstream.state[c]);
    if let Some(x0) = crossing(samples, c, mid) {
        for s in samples.iter_mut() {
            s.x -= x0;
        }
    }
}

fn width(samples: &[Sample], pair: &JumpPair, c: usize) -> f64 {
    let (a, b) = (pair.upstream.state[c], pair.downstream.state[c]);
    let lo = crossing(samples, c, a + 0.1 * (b - a));
    let hi = crossing(samples, c, a + 0.9 * (b - a));
    match (lo, hi) {
        (Some(x1), Some(x2)) => (x2 - x1).abs(),
        _ => 0.0,
    }
}

/// Integrates from the upstream state along the unstable manifold until the
/// orbit comes within `eps_down` of the downstream state.
pub fn shoot<S: LayerOde + ?Sized>(spec: &ShootingSpec, sys: &S, pair: &JumpPair) -> Result<Profile> {
    spec.validate()?;
    if pair.is_degenerate() {
        return Ok(constant_profile(sys, pair));
    }
    if pair.upstream.n_unstable == 0 {
        return Err(ShockError::NoUnstableDirection);
    }
    let g = geometry(sys, pair, true, spec)?;
    let k = g.launch.q.ncols();
    let dir = match &spec.manifold_coeffs {
        Some(c) if c.len() == k => {
            let v = DVector::from_column_slice(c);
            if v.norm() == 0.0 {
                return Err(ShockError::InvalidParameter { field: "manifold_coeffs", reason: "zero vector".into() });
            }
            v.normalize()
        }
        Some(c) => {
            return Err(ShockError::InvalidParameter {
                field: "manifold_coeffs",
                reason: format!("expected {k} coefficients, got {}", c.len()),
            })
        }
        None => aimed_direction(&g),
    };
    let y0 = launch_point(&g, &dir);
    let target = Target { point: &g.closure.rest, scale: &g.scales, radius: spec.eps_down };
    let tr = integrate(sys, 1.0, &y0, g.span, &spec.ode, None, Some(target))?;
    if tr.outcome != Outcome::Target {
        return Err(IntegrationError::SpanExceeded { span: g.span, last: tr.last().y.clone() }.into());
    }
    let last = tr.last().y.clone();
    let dev = DVector::from_iterator(
        last.len(),
        last.iter().zip(&g.closure.rest).zip(&g.scales).map(|((a, b), s)| (a - b) / s),
    );
    let residual = &g.closure.bad * &dev / spec.match_radius;
    let shot = Shot { samples: tr.samples, deviation: dev, residual, closest: tr.closest_approach };
    let mut profile = assemble(sys, pair, &g, &dir, shot, dir.as_slice().to_vec(), spec)?;
    profile.mismatch = profile.mismatch.max(weighted_distance(&last, &g.closure.rest, &g.scales).min(spec.eps_down));
    Ok(profile)
}

/// Searches for the heteroclinic orbit joining the pair.
///
/// With a one-dimensional unstable manifold this is a single [`shoot`].
/// Otherwise the launch direction is optimized by multi-start
/// Levenberg–Marquardt and, when that fails and the dimensions admit a
/// transversal connection, the orbit is computed by collocation.
pub fn find_profile<S: LayerOde + ?Sized>(sys: &S, pair: &JumpPair, opts: &ProfileOptions) -> Result<Profile> {
    let spec = &opts.shooting;
    spec.validate()?;
    if pair.is_degenerate() {
        return Ok(constant_profile(sys, pair));
    }
    let k = pair.upstream.n_unstable;
    let m = pair.downstream.n_stable;
    let jump = weighted_distance(
        &pair.upstream.state,
        &pair.downstream.state,
        &component_scales(&pair.upstream.state, &pair.downstream.state),
    );
    if k == 0 || m == 0 {
        return Err(ShockError::NoConnection { best_mismatch: jump, starts: 0 });
    }
    if k == 1 && spec.manifold_coeffs.is_none() && opts.method != ProfileMethod::Collocation {
        return shoot(spec, sys, pair).map_err(|e| match e {
            ShockError::Integration(_) | ShockError::NoUnstableDirection => {
                ShockError::NoConnection { best_mismatch: f64::INFINITY, starts: 1 }
            }
            other => other,
        });
    }
    let transversal = k + m == sys.dim() + 1;
    let shot = match opts.method {
        ProfileMethod::Collocation => None,
        _ => Some(shooting_profile(sys, pair, opts)),
    };
    match shot {
        Some(Ok(p)) => Ok(p),
        Some(Err(e)) if opts.method == ProfileMethod::Shooting || !transversal => Err(e),
        Some(Err(ShockError::NoConnection { best_mismatch, starts })) => {
            collocation_profile(sys, pair, opts).map_err(|e| match e {
                ShockError::NonConvergence(_) | ShockError::Integration(_) => {
                    ShockError::NoConnection { best_mismatch, starts: starts + 1 }
                }
                other => other,
            })
        }
        Some(Err(e)) => Err(e),
        None => collocation_profile(sys, pair, opts).map_err(|e| match e {
            ShockError::NonConvergence(_) | ShockError::Integration(_) => {
                ShockError::NoConnection { best_mismatch: jump, starts: 1 }
            }
            other => other,
        }),
    }
}

/// Rows spanning the complement of the spectral subspace selected by
/// `keep`: `rows · v = 0` iff `v` lies in that subspace.
fn complement_rows(jac: &DMatrix<f64>, keep: Side, threshold: f64) -> Result<DMatrix<f64>> {
    let n = jac.nrows();
    let shifted = match keep {
        Side::Unstable => jac - DMatrix::identity(n, n) * threshold,
        Side::Stable => -jac - DMatrix::identity(n, n) * threshold,
    };
    let sign = matrix_sign(&shifted).ok_or_else(|| ShockError::NonConvergence("matrix sign iteration failed".into()))?;
    let other = (DMatrix::identity(n, n) - sign) * 0.5;
    let rank = other.trace().round().max(0.0) as usize;
    if rank == 0 {
        return Ok(DMatrix::zeros(0, n));
    }
    let svd = other.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| ShockError::NonConvergence("svd failed".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    Ok(DMatrix::from_fn(rank, n, |r, c| vt[(order[r], c)]))
}

fn slowest_rate(jac: &DMatrix<f64>, side: Side, threshold: f64) -> f64 {
    sorted_eigenvalues(jac)
        .iter()
        .map(|z| if side == Side::Unstable { z.re } else { -z.re })
        .filter(|r| *r > threshold)
        .fold(f64::INFINITY, f64::min)
}

/// Collocation solve on a truncated interval with projection end conditions.
fn collocation_profile<S: LayerOde + ?Sized>(sys: &S, pair: &JumpPair, opts: &ProfileOptions) -> Result<Profile> {
    let spec = &opts.shooting;
    let (up, down) = (&pair.upstream.state, &pair.downstream.state);
    let scales = component_scales(up, down);
    let n = sys.dim();
    let ju = scaled_jacobian(sys, up, &scales, 1.0)?;
    let jd = scaled_jacobian(sys, down, &scales, 1.0)?;
    let thr_u = CENTER_REL * spectral_radius(&sorted_eigenvalues(&ju));
    let thr_d = CENTER_REL * spectral_radius(&sorted_eigenvalues(&jd));
    let left = complement_rows(&ju, Side::Unstable, thr_u)?;
    let right = complement_rows(&jd, Side::Stable, thr_d)?;
    let rate_u = slowest_rate(&ju, Side::Unstable, thr_u);
    let rate_d = slowest_rate(&jd, Side::Stable, thr_d);
    let primary = alignment_component(sys, pair, &scales);
    let mid = 0.5 * (up[primary] + down[primary]);

    let reach = (1.0 / spec.match_radius).ln();
    let (x0, x1) = (-reach / rate_u, reach / rate_d);
    let nodes = opts.collocation.initial_nodes.max(8);
    let mut x: Vec<f64> = (0..nodes / 2).map(|k| x0 * (1.0 - k as f64 / (nodes / 2) as f64)).collect();
    x.extend((0..=nodes / 2).map(|k| x1 * k as f64 / (nodes / 2) as f64));
    let guess: Vec<Vec<f64>> = match &opts.initial_guess {
        Some(samples) if samples.len() >= 2 && samples[0].y.len() == n => {
            x.iter().map(|&t| hermite_eval(samples, t)).collect()
        }
        _ => {
            let w = 1.0 / rate_u + 1.0 / rate_d;
            x.iter()
                .map(|&t| {
                    let s = 0.5 * (1.0 + (t / w).tanh());
                    up.iter().zip(down).map(|(a, b)| a + (b - a) * s).collect()
                })
                .collect()
        }
    };
    let problem = bvp::Problem {
        sys,
        scales: scales.clone(),
        left: EndCondition { rest: up.clone(), rows: left },
        right: EndCondition { rest: down.clone(), rows: right },
        pin_component: primary,
        pin_value: mid,
    };
    // the defect has units of a rate; measure it against the fastest one
    let rate_scale = spectral_radius(&sorted_eigenvalues(&ju)).max(spectral_radius(&sorted_eigenvalues(&jd))).max(1.0);
    let bvp_opts = BvpOptions { tol: opts.collocation.tol * rate_scale, ..opts.collocation.clone() };
    let sol = bvp::solve(&problem, x, guess, &bvp_opts)?;

    let eps_tail = 0.5 * spec.eps_up.min(spec.eps_down);
    let scaled_dev = |y: &[f64], rest: &[f64]| {
        DVector::from_iterator(n, y.iter().zip(rest).zip(&scales).map(|((a, b), s)| (a - b) / s))
    };
    let mut pts: Vec<(f64, Vec<f64>)> = Vec::new();
    let first = scaled_dev(&sol.y[0], up);
    let mut tail = decaying_tail(up, &scales, &(-&ju), &first, eps_tail)?;
    tail.reverse();
    tail.pop();
    pts.extend(tail.into_iter().map(|(s, y)| (sol.x[0] - s, y)));
    pts.extend(sol.x.iter().copied().zip(sol.y.iter().cloned()));
    let last_i = sol.y.len() - 1;
    let end = scaled_dev(&sol.y[last_i], down);
    let tail = decaying_tail(down, &scales, &jd, &end, eps_tail)?;
    pts.extend(tail.into_iter().skip(1).map(|(s, y)| (sol.x[last_i] + s, y)));
    build_profile(sys, pair, &scales, pts, Vec::new(), LaunchSide::Collocation, sol.residual, sol.defect)
}

/// Converged parameters with their residual, and the closest approach seen.
type Attempt = (Option<(DVector<f64>, f64)>, f64);

fn shooting_profile<S: LayerOde + ?Sized>(sys: &S, pair: &JumpPair, opts: &ProfileOptions) -> Result<Profile> {
    let spec = &opts.shooting;
    let k = pair.upstream.n_unstable;
    let m = pair.downstream.n_stable;
    let from_upstream = k <= m;
    let g = geometry(sys, pair, from_upstream, spec)?;
    let base = aimed_direction(&g);
    let tangent = complement_basis(&base);
    let p = tangent.ncols();

    let accept_gap = 0.5 * spec.eps_down;
    let lm = LmOptions { max_iter: opts.max_iter, tol: 1e-3 * accept_gap / spec.match_radius, fd_step: 1e-7 };

    let solve = |a0: DVector<f64>| -> Attempt {
        let mut best_closest = f64::INFINITY;
        let mut eval = |a: &DVector<f64>| -> Option<DVector<f64>> {
            let dir = unit_direction(&base, &tangent, a);
            match fire(sys, &g, &dir, spec) {
                Ok(shot) => {
                    best_closest = best_closest.min(shot.closest);
                    Some(shot.residual)
                }
                Err((_, d)) => {
                    best_closest = best_closest.min(d);
                    None
                }
            }
        };
        let res = levenberg_marquardt(&mut eval, a0, &lm);
        (res.map(|r| (r.x, r.residual_norm)), best_closest)
    };

    let mut starts: Vec<DVector<f64>> = Vec::with_capacity(opts.starts.max(1));
    match &opts.warm_start {
        Some(w) if w.len() == p => starts.push(DVector::from_column_slice(w)),
        _ => {}
    }
    starts.push(DVector::zeros(p));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.starts.max(1) && p > 0 {
        starts.push(DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0)));
    }

    let finish = |a: &DVector<f64>| -> Result<Profile> {
        let dir = unit_direction(&base, &tangent, a);
        let shot = fire(sys, &g, &dir, spec).map_err(|(e, _)| ShockError::Integration(e))?;
        assemble(sys, pair, &g, &dir, shot, a.as_slice().to_vec(), spec)
    };

    let n_starts = starts.len();
    let mut best_mismatch = f64::INFINITY;
    // first start sequentially; most cases end here
    let (first, closest) = solve(starts[0].clone());
    if let Some((a, r)) = &first {
        if r * spec.match_radius <= accept_gap {
            let prof = finish(a)?;
            if prof.mismatch <= spec.eps_down {
                return Ok(prof);
            }
            best_mismatch = best_mismatch.min(prof.mismatch);
        } else {
            best_mismatch = best_mismatch.min(r * spec.match_radius);
        }
    } else {
        best_mismatch = best_mismatch.min(closest);
    }
    let rest: Vec<Attempt> = starts[1..].par_iter().map(|a0| solve(a0.clone())).collect();
    let mut order: Vec<usize> = (0..rest.len()).collect();
    let key = |i: usize| rest[i].0.as_ref().map_or(f64::INFINITY, |(_, r)| *r);
    order.sort_by(|&i, &j| key(i).total_cmp(&key(j)).then(i.cmp(&j)));
    for i in order {
        match &rest[i].0 {
            Some((a, r)) if r * spec.match_radius <= accept_gap => {
                let prof = finish(a)?;
                if prof.mismatch <= spec.eps_down {
                    return Ok(prof);
                }
                best_mismatch = best_mismatch.min(prof.mismatch);
            }
            Some((_, r)) => best_mismatch = best_mismatch.min(r * spec.match_radius),
            None => best_mismatch = best_mismatch.min(rest[i].1),
        }
    }
    Err(ShockError::NoConnection { best_mismatch, starts: n_starts })
}

/// One row of a Germain sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepEntry {
    pub multiplier: f64,
    pub width: f64,
    /// Sup-distance between the profile and the limiting step outside a
    /// fixed neighborhood of the shock, relative to the jump.
    pub sup_distance: f64,
    pub mismatch: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GermainReport {
    pub entries: Vec<SweepEntry>,
    /// Multiplier at which continuation lost the profile.
    pub break_at: Option<f64>,
    /// Half-width of the excluded neighborhood of `x = 0`.
    pub neighborhood: f64,
    pub stable: bool,
}

struct Warm {
    coefficients: Vec<f64>,
    samples: Vec<Sample>,
    multiplier: f64,
}

/// Smallest multiplier continuation will try.
pub const MIN_MULTIPLIER: f64 = 1e-4;

fn sup_distance(profile: &Profile, pair: &JumpPair, neighborhood: f64) -> f64 {
    let c = profile.primary;
    let (a, b) = (pair.upstream.state[c], pair.downstream.state[c]);
    let jump = (a - b).abs();
    if jump == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for s in &profile.samples {
        if s.x.abs() < neighborhood {
            continue;
        }
        let step = if s.x < 0.0 { a } else { b };
        worst = worst.max((s.y[c] - step).abs() / jump);
    }
    // resampled check between samples in the outer region
    let (lo, hi) = profile.x_range();
    for k in 0..=400 {
        let x = lo + (hi - lo) * k as f64 / 400.0;
        if x.abs() < neighborhood {
            continue;
        }
        let step = if x < 0.0 { a } else { b };
        worst = worst.max((profile.state_at(x)[c] - step).abs() / jump);
    }
    worst
}

fn reclassify<S: LayerOde>(sys: &S, pair: &JumpPair) -> Result<JumpPair> {
    Ok(JumpPair {
        upstream: RestPoint::classify(sys, pair.upstream.state.clone(), pair.upstream.residual_norm)?,
        downstream: RestPoint::classify(sys, pair.downstream.state.clone(), pair.downstream.residual_norm)?,
        constants: pair.constants,
    })
}

/// Rescales all dissipation by each multiplier in `scale_grid` (decreasing)
/// and follows the profile by continuation. A failed step is retried at the
/// geometric midpoint, halving up to four times, before the sweep stops.
pub fn germain_sweep<S: Dissipative + Send>(sys: &S, pair: &JumpPair, scale_grid: &[f64], opts: &ProfileOptions) -> Result<GermainReport> {
    if scale_grid.is_empty() {
        return Err(ShockError::InvalidParameter { field: "scale_grid", reason: "empty".into() });
    }
    if scale_grid.windows(2).any(|w| !(w[1] < w[0])) || scale_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(ShockError::InvalidParameter {
            field: "scale_grid",
            reason: "multipliers must be positive and strictly decreasing".into(),
        });
    }
    let mut entries = Vec::new();
    let mut warm: Option<Warm> = None;
    let mut neighborhood = 0.0;
    let mut break_at = None;

    let run = |t: f64, warm: &Option<Warm>| -> Result<Profile> {
        let scaled = sys.with_dissipation_scale(t);
        let p = reclassify(&scaled, pair)?;
        let mut o = opts.clone();
        if let Some(w) = warm {
            o.warm_start = Some(w.coefficients.clone());
            let stretch = t / w.multiplier;
            o.initial_guess = Some(
                w.samples
                    .iter()
                    .map(|s| Sample { x: s.x * stretch, y: s.y.clone(), dy: s.dy.iter().map(|d| d / stretch).collect() })
                    .collect(),
            );
        }
        find_profile(&scaled, &p, &o)
    };

    for (idx, &t) in scale_grid.iter().enumerate() {
        if t < MIN_MULTIPLIER {
            break_at = Some(t);
            break;
        }
        // on failure, retry from geometric midpoints toward the last success
        let mut target = t;
        let mut halvings = 0;
        let outcome = loop {
            match run(target, &warm) {
                Ok(profile) => {
                    warm = Some(Warm { coefficients: profile.coefficients.clone(), samples: profile.samples.clone(), multiplier: target });
                    if target == t {
                        break Ok(profile);
                    }
                    target = t;
                }
                Err(e) => match &warm {
                    Some(w) if halvings < 4 => {
                        halvings += 1;
                        target = (w.multiplier * target).sqrt();
                    }
                    _ => break Err(e),
                },
            }
        };
        match outcome {
            Ok(profile) => {
                if idx == 0 {
                    neighborhood = profile.width.max(f64::MIN_POSITIVE);
                }
                entries.push(SweepEntry {
                    multiplier: t,
                    width: profile.width,
                    sup_distance: sup_distance(&profile, pair, neighborhood),
                    mismatch: profile.mismatch,
                });
            }
            Err(e) => {
                if idx == 0 {
                    return Err(e);
                }
                break_at = Some(t);
                break;
            }
        }
    }
    let monotone = entries
        .windows(2)
        .all(|w| w[1].sup_distance <= w[0].sup_distance * (1.0 + 1e-6) + 1e-9);
    let vanishing = entries.last().is_none_or(|e| e.sup_distance <= entries[0].sup_distance + 1e-9);
    Ok(GermainReport { stable: break_at.is_none() && monotone && vanishing, entries, break_at, neighborhood })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::{burgers_embedding, burgers_profile, GeneralForm};

    fn burgers_pair(sys: &GeneralForm, ul: f64, ur: f64) -> JumpPair {
        JumpPair {
            upstream: RestPoint::classify(sys, vec![ul], 0.0).unwrap(),
            downstream: RestPoint::classify(sys, vec![ur], 0.0).unwrap(),
            constants: crate::state::FluxConstants {
                m: 1.0,
                p: 0.0,
                p2: 0.0,
                p3: 0.0,
                c: 0.0,
                e2: 0.0,
                e3: 0.0,
                shock_speed: sys.shock_speed,
            },
        }
    }

    #[test]
    fn burgers_unstable_basis_points_down() {
        let sys = burgers_embedding(2.0, 0.5, 0.3);
        let pair = burgers_pair(&sys, 2.0, 0.5);
        let b = unstable_basis(&sys, &pair.upstream).unwrap();
        assert_eq!(b.basis.ncols(), 1);
        assert!((b.basis[(0, 0)] + 1.0).abs() < 1e-15);
        assert!(matches!(unstable_basis(&sys, &pair.downstream), Err(ShockError::NoUnstableDirection)));
    }

    #[test]
    fn burgers_profile_matches_closed_form() {
        let (ul, ur, eps) = (2.0, 0.5, 0.3);
        let sys = burgers_embedding(ul, ur, eps);
        let pair = burgers_pair(&sys, ul, ur);
        let prof = find_profile(&sys, &pair, &ProfileOptions::default()).unwrap();
        assert!(prof.mismatch <= 1e-6);
        let mut worst = 0.0f64;
        for s in &prof.samples {
            worst = worst.max((s.y[0] - burgers_profile(ul, ur, eps, s.x)).abs());
        }
        assert!(worst < 1e-6, "sup error {worst}");
        let shot = shoot(&ShootingSpec::default(), &sys, &pair).unwrap();
        assert_eq!(shot.samples, prof.samples);
        let expected_width = 8.0 * eps * 0.8f64.atanh() / (ul - ur);
        assert!((prof.width - expected_width).abs() < 1e-6 * expected_width);
    }

    #[test]
    fn burgers_sweep_is_self_similar() {
        let (ul, ur, eps) = (1.0, -1.0, 0.5);
        let sys = burgers_embedding(ul, ur, eps);
        let pair = burgers_pair(&sys, ul, ur);
        let rep = germain_sweep(&sys, &pair, &[1.0, 0.5, 0.25, 0.125], &ProfileOptions::default()).unwrap();
        assert!(rep.stable);
        let w0 = rep.entries[0].width;
        for e in &rep.entries {
            assert!((e.width / w0 - e.multiplier).abs() < 1e-6 * e.multiplier);
        }
        for w in rep.entries.windows(2) {
            assert!(w[1].sup_distance < w[0].sup_distance);
        }
    }

    #[test]
    fn reversed_burgers_pair_has_no_profile() {
        let sys = burgers_embedding(2.0, 0.5, 0.3);
        let pair = burgers_pair(&sys, 2.0, 0.5).reversed();
        assert!(matches!(find_profile(&sys, &pair, &ProfileOptions::default()), Err(ShockError::NoConnection { .. })));
    }

    #[test]
    fn zero_strength_is_constant() {
        let sys = burgers_embedding(1.0, 1.0, 0.3);
        let pair = burgers_pair(&sys, 1.0, 1.0);
        let prof = find_profile(&sys, &pair, &ProfileOptions::default()).unwrap();
        assert_eq!(prof.mismatch, 0.0);
        assert!(prof.samples.iter().all(|s| s.y[0] == 1.0));
    }

    #[test]
    fn symmetric_unstable_basis_is_eigenvectors() {
        // gradient-like linear system with symmetric Jacobian
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, -1.0]);
        let a2 = a.clone();
        let sys = GeneralForm::new(3, move |y| &a2 * DVector::from_column_slice(y), |_| DMatrix::identity(3, 3), 0.0, DVector::zeros(3));
        let rp = RestPoint::classify(&sys, vec![0.0; 3], 0.0).unwrap();
        let b = unstable_basis(&sys, &rp).unwrap();
        assert_eq!(b.basis.ncols(), 2);
        for j in 0..2 {
            let v = b.basis.column(j).into_owned();
            let lambda = (v.transpose() * &a * &v)[(0, 0)];
            assert!((&a * &v - &v * lambda).norm() < 1e-8);
        }
        assert!((b.basis.transpose() * &b.basis - DMatrix::identity(2, 2)).amax() < 1e-12);
        for (lambda, v) in &b.eigenvectors {
            assert!((&a * v - v * *lambda).norm() <= 1e-8);
        }
    }
}
