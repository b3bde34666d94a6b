//! Adaptive integrators for autonomous layer systems.
//!
//! Dormand–Prince 5(4) with a stiffness detector, and a four-stage
//! L-stable Rosenbrock 4(3) method for stiff stretches. Integration runs in a
//! pseudo-time `τ ∈ [0, span]` along `direction · f(y)`.

use nalgebra::{DMatrix, DVector};

use crate::error::IntegrationError;
use crate::layer::LayerOde;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DormandPrince,
    Rosenbrock,
    /// Explicit until stiffness is detected, then Rosenbrock.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `0` picks one from the local derivative.
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    pub method: Method,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 0.0,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 200_000,
            method: Method::Auto,
        }
    }
}

/// One accepted point of a trajectory. `dy` is the derivative along the
/// integration direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

/// Stop at the first crossing of `y[component] = level`.
#[derive(Clone, Copy, Debug)]
pub struct Section {
    pub component: usize,
    pub level: f64,
}

/// Stop once the weighted distance to `point` drops below `radius`.
#[derive(Clone, Copy, Debug)]
pub struct Target<'a> {
    pub point: &'a [f64],
    pub scale: &'a [f64],
    pub radius: f64,
}

impl Target<'_> {
    pub fn distance(&self, y: &[f64]) -> f64 {
        weighted_distance(y, self.point, self.scale)
    }
}

pub fn weighted_distance(a: &[f64], b: &[f64], scale: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(scale)
        .map(|((x, y), s)| ((x - y) / s).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Section,
    Target,
    SpanEnd,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
    /// Smallest distance to the target seen along the way.
    pub closest_approach: f64,
    pub rhs_evals: usize,
    /// Whether Auto mode switched to the implicit method.
    pub switched: bool,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Active {
    Explicit,
    Implicit,
}

enum StepFailure {
    /// Stage evaluation left the domain.
    Domain,
}

struct Rhs<'a, S: ?Sized> {
    sys: &'a S,
    direction: f64,
    evals: usize,
}

impl<S: LayerOde + ?Sized> Rhs<'_, S> {
    fn eval(&mut self, y: &[f64], out: &mut [f64]) -> Result<(), StepFailure> {
        self.evals += 1;
        if !self.sys.admissible(y) {
            return Err(StepFailure::Domain);
        }
        self.sys.rhs(y, out).map_err(|_| StepFailure::Domain)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(StepFailure::Domain);
        }
        if self.direction != 1.0 {
            out.iter_mut().for_each(|v| *v *= self.direction);
        }
        Ok(())
    }

    fn jacobian(&mut self, y: &[f64]) -> Result<DMatrix<f64>, StepFailure> {
        let j = self.sys.jacobian(y).map_err(|_| StepFailure::Domain)?;
        if j.iter().any(|v| !v.is_finite()) {
            return Err(StepFailure::Domain);
        }
        Ok(j * self.direction)
    }
}

// Dormand–Prince coefficients
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Rosenbrock (Shampine) coefficients
const GAM: f64 = 0.5;
const RA21: f64 = 2.0;
const RA31: f64 = 48.0 / 25.0;
const RA32: f64 = 6.0 / 25.0;
const RC21: f64 = -8.0;
const RC31: f64 = 372.0 / 25.0;
const RC32: f64 = 12.0 / 5.0;
const RC41: f64 = -112.0 / 125.0;
const RC42: f64 = -54.0 / 125.0;
const RC43: f64 = -2.0 / 5.0;
const RB1: f64 = 19.0 / 9.0;
const RB2: f64 = 1.0 / 2.0;
const RB3: f64 = 25.0 / 108.0;
const RB4: f64 = 125.0 / 108.0;
const RE1: f64 = 17.0 / 54.0;
const RE2: f64 = 7.0 / 36.0;
const RE3: f64 = 0.0;
const RE4: f64 = 125.0 / 108.0;

struct StepResult {
    y: Vec<f64>,
    dy: Vec<f64>,
    err: f64,
    /// Hairer's `h·|λ|` estimate, explicit steps only.
    stiffness: f64,
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &OdeOptions) -> f64 {
    let n = err.len();
    let sum: f64 = (0..n)
        .map(|i| {
            let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / n as f64).sqrt()
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (coef, k) in terms {
        if *coef != 0.0 {
            for (o, v) in out.iter_mut().zip(k.iter()) {
                *o += h * coef * v;
            }
        }
    }
    out
}

fn dopri_step<S: LayerOde + ?Sized>(
    f: &mut Rhs<'_, S>,
    y: &[f64],
    k1: &[f64],
    h: f64,
    opts: &OdeOptions,
) -> Result<StepResult, StepFailure> {
    let n = y.len();
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    f.eval(&axpy(y, h, &[(A21, k1)]), &mut k2)?;
    f.eval(&axpy(y, h, &[(A31, k1), (A32, &k2)]), &mut k3)?;
    f.eval(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]), &mut k4)?;
    f.eval(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]), &mut k5)?;
    let y6 = axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
    f.eval(&y6, &mut k6)?;
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    f.eval(&y1, &mut k7)?;
    let err: Vec<f64> = (0..n)
        .map(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]))
        .collect();
    let stnum: f64 = (0..n).map(|i| (k7[i] - k6[i]).powi(2)).sum();
    let stden: f64 = (0..n).map(|i| (y1[i] - y6[i]).powi(2)).sum();
    let stiffness = if stden > 0.0 { h * (stnum / stden).sqrt() } else { 0.0 };
    let e = error_norm(&err, y, &y1, opts);
    Ok(StepResult { y: y1, dy: k7, err: e, stiffness })
}

fn rosenbrock_step<S: LayerOde + ?Sized>(
    f: &mut Rhs<'_, S>,
    y: &[f64],
    k1: &[f64],
    jac: &DMatrix<f64>,
    h: f64,
    opts: &OdeOptions,
) -> Result<StepResult, StepFailure> {
    let n = y.len();
    let a = DMatrix::identity(n, n) / (GAM * h) - jac;
    let lu = a.lu();
    let solve = |rhs: Vec<f64>| -> Result<Vec<f64>, StepFailure> {
        lu.solve(&DVector::from_vec(rhs))
            .map(|v| v.as_slice().to_vec())
            .ok_or(StepFailure::Domain)
    };
    let g1 = solve(k1.to_vec())?;
    let mut f2 = vec![0.0; n];
    f.eval(&axpy(y, 1.0, &[(RA21, &g1)]), &mut f2)?;
    let g2 = solve((0..n).map(|i| f2[i] + RC21 * g1[i] / h).collect())?;
    let mut f3 = vec![0.0; n];
    f.eval(&axpy(y, 1.0, &[(RA31, &g1), (RA32, &g2)]), &mut f3)?;
    let g3 = solve((0..n).map(|i| f3[i] + (RC31 * g1[i] + RC32 * g2[i]) / h).collect())?;
    let g4 = solve((0..n).map(|i| f3[i] + (RC41 * g1[i] + RC42 * g2[i] + RC43 * g3[i]) / h).collect())?;
    let y1: Vec<f64> = (0..n)
        .map(|i| y[i] + RB1 * g1[i] + RB2 * g2[i] + RB3 * g3[i] + RB4 * g4[i])
        .collect();
    let err: Vec<f64> = (0..n)
        .map(|i| RE1 * g1[i] + RE2 * g2[i] + RE3 * g3[i] + RE4 * g4[i])
        .collect();
    let mut dy = vec![0.0; n];
    f.eval(&y1, &mut dy)?;
    let e = error_norm(&err, y, &y1, opts);
    Ok(StepResult { y: y1, dy, err: e, stiffness: 0.0 })
}

fn initial_step(y: &[f64], dy: &[f64], opts: &OdeOptions, span: f64) -> f64 {
    if opts.h_init > 0.0 {
        return opts.h_init.min(span);
    }
    let n = y.len();
    let d0: f64 = (0..n)
        .map(|i| (y[i] / (opts.atol + opts.rtol * y[i].abs())).powi(2))
        .sum::<f64>()
        .sqrt();
    let d1: f64 = (0..n)
        .map(|i| (dy[i] / (opts.atol + opts.rtol * y[i].abs())).powi(2))
        .sum::<f64>()
        .sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).min(opts.h_max).max(opts.h_min)
}

/// Where an event was located inside an accepted step.
struct Located {
    h: f64,
    step: StepResult,
}

/// Integrates `y' = direction · f(y)` from `y0` for `τ ∈ [0, span]`, stopping
/// at the first section crossing or target hit. Reaching `span` returns with
/// [`Outcome::SpanEnd`].
pub fn integrate<S: LayerOde + ?Sized>(
    sys: &S,
    direction: f64,
    y0: &[f64],
    span: f64,
    opts: &OdeOptions,
    section: Option<Section>,
    target: Option<Target<'_>>,
) -> Result<Trajectory, IntegrationError> {
    let mut f = Rhs { sys, direction, evals: 0 };
    let n = y0.len();
    let mut dy0 = vec![0.0; n];
    if f.eval(y0, &mut dy0).is_err() {
        return Err(IntegrationError::LeftAdmissible { x: 0.0, last: y0.to_vec() });
    }
    let mut samples = vec![Sample { x: 0.0, y: y0.to_vec(), dy: dy0 }];
    let mut closest = target.map_or(f64::INFINITY, |t| t.distance(y0));
    if let Some(t) = target {
        if closest <= t.radius {
            return Ok(Trajectory {
                samples,
                outcome: Outcome::Target,
                closest_approach: closest,
                rhs_evals: f.evals,
                switched: false,
            });
        }
    }
    let mut active = match opts.method {
        Method::Rosenbrock => Active::Implicit,
        _ => Active::Explicit,
    };
    let mut switched = false;
    let mut x = 0.0;
    let mut h = initial_step(y0, &samples[0].dy, opts, span);
    let mut steps = 0usize;
    let (mut stiff_hits, mut nonstiff_run) = (0usize, 0usize);
    let mut jac: Option<DMatrix<f64>> = None;

    loop {
        let last = samples.last().expect("non-empty");
        if x >= span * (1.0 - 1e-15) {
            return Ok(Trajectory {
                samples,
                outcome: Outcome::SpanEnd,
                closest_approach: closest,
                rhs_evals: f.evals,
                switched,
            });
        }
        if steps >= opts.max_steps {
            return Err(IntegrationError::MaxSteps { max_steps: opts.max_steps, x, last: last.y.clone() });
        }
        steps += 1;
        h = h.min(span - x).min(opts.h_max);
        let (y, k1) = (last.y.clone(), last.dy.clone());
        if active == Active::Implicit && jac.is_none() {
            match f.jacobian(&y) {
                Ok(j) => jac = Some(j),
                Err(_) => return Err(IntegrationError::LeftAdmissible { x, last: y }),
            }
        }
        let attempt = match active {
            Active::Explicit => dopri_step(&mut f, &y, &k1, h, opts),
            Active::Implicit => rosenbrock_step(&mut f, &y, &k1, jac.as_ref().expect("jacobian"), h, opts),
        };
        let order = if active == Active::Explicit { 5.0 } else { 4.0 };
        let step = match attempt {
            Ok(s) if s.err.is_finite() && sys.admissible(&s.y) => s,
            _ => {
                h *= 0.25;
                if h < opts.h_min {
                    return Err(IntegrationError::LeftAdmissible { x, last: y });
                }
                continue;
            }
        };
        if step.err > 1.0 {
            let fac = (0.9 * step.err.powf(-1.0 / order)).clamp(0.1, 0.9);
            h *= fac;
            if h < opts.h_min {
                return Err(IntegrationError::Stiffness { x, step: h, last: y });
            }
            continue;
        }

        // accepted
        let mut fac = if step.err > 0.0 { 0.9 * step.err.powf(-1.0 / order) } else { 5.0 };
        fac = fac.clamp(0.2, 5.0);
        let h_taken = h;
        let g0 = section.map(|s| y[s.component] - s.level);
        let g1 = section.map(|s| step.y[s.component] - s.level);

        let crossed = match (g0, g1) {
            (Some(a), Some(b)) => (a != 0.0 || steps > 1) && a * b <= 0.0 && !(a == 0.0 && b == 0.0),
            _ => false,
        };
        if crossed {
            let sec = section.expect("section");
            let loc = locate_section(&mut f, &y, &k1, jac.as_ref(), active, h_taken, step, sec, opts);
            let Located { h: hl, step: sl } = loc;
            samples.push(Sample { x: x + hl, y: sl.y, dy: sl.dy });
            if let Some(t) = target {
                closest = closest.min(t.distance(&samples.last().expect("sample").y));
            }
            return Ok(Trajectory {
                samples,
                outcome: Outcome::Section,
                closest_approach: closest,
                rhs_evals: f.evals,
                switched,
            });
        }

        x += h_taken;
        let new_y = step.y.clone();
        samples.push(Sample { x, y: step.y, dy: step.dy });
        if let Some(t) = target {
            let d = t.distance(&new_y);
            closest = closest.min(d);
            if d <= t.radius {
                return Ok(Trajectory {
                    samples,
                    outcome: Outcome::Target,
                    closest_approach: closest,
                    rhs_evals: f.evals,
                    switched,
                });
            }
        }

        match active {
            Active::Explicit => {
                if step.stiffness > 3.25 {
                    nonstiff_run = 0;
                    stiff_hits += 1;
                    if stiff_hits >= 15 {
                        match opts.method {
                            Method::Auto => {
                                active = Active::Implicit;
                                switched = true;
                                jac = None;
                            }
                            _ => {
                                return Err(IntegrationError::Stiffness { x, step: h_taken, last: new_y });
                            }
                        }
                    }
                } else {
                    nonstiff_run += 1;
                    if nonstiff_run >= 6 {
                        stiff_hits = 0;
                    }
                }
            }
            Active::Implicit => {
                // refresh the Jacobian every accepted step
                jac = None;
            }
        }
        h = h_taken * fac;
    }
}

/// Finds the step length inside `(0, h]` that lands on the section, by
/// Illinois-modified regula falsi on single steps from the start point.
#[allow(clippy::too_many_arguments)]
fn locate_section<S: LayerOde + ?Sized>(
    f: &mut Rhs<'_, S>,
    y: &[f64],
    k1: &[f64],
    jac: Option<&DMatrix<f64>>,
    active: Active,
    h: f64,
    full: StepResult,
    sec: Section,
    opts: &OdeOptions,
) -> Located {
    let g = |v: &[f64]| v[sec.component] - sec.level;
    let (mut a, mut ga) = (0.0, g(y));
    let (mut b, mut gb) = (h, g(&full.y));
    let mut best = Located { h, step: full };
    if gb == 0.0 {
        return best;
    }
    let scale = sec.level.abs().max(y[sec.component].abs()).max(1e-300);
    for _ in 0..60 {
        let t = (a * gb - b * ga) / (gb - ga);
        let t = if t.is_finite() && t > a.min(b) && t < a.max(b) { t } else { 0.5 * (a + b) };
        let trial = match active {
            Active::Explicit => dopri_step(f, y, k1, t, opts),
            Active::Implicit => rosenbrock_step(f, y, k1, jac.expect("jacobian"), t, opts),
        };
        let Ok(step) = trial else { break };
        let gt = g(&step.y);
        best = Located { h: t, step };
        if gt.abs() <= 1e-15 * scale || (b - a).abs() <= 1e-15 * h {
            break;
        }
        if gt * gb < 0.0 {
            a = b;
            ga = gb;
        } else {
            ga *= 0.5;
        }
        b = t;
        gb = gt;
    }
    best
}

/// Piecewise cubic Hermite interpolation of a sampled trajectory at `x`
/// (samples must be sorted by `x`; values outside the range are clamped).
pub fn hermite_eval(samples: &[Sample], x: f64) -> Vec<f64> {
    let n = samples.len();
    if x <= samples[0].x {
        return samples[0].y.clone();
    }
    if x >= samples[n - 1].x {
        return samples[n - 1].y.clone();
    }
    let idx = samples.partition_point(|s| s.x <= x).max(1) - 1;
    let (s0, s1) = (&samples[idx], &samples[idx + 1]);
    let h = s1.x - s0.x;
    if h <= 0.0 {
        return s0.y.clone();
    }
    let t = (x - s0.x) / h;
    let h00 = 2.0 * t * t * t - 3.0 * t * t + 1.0;
    let h10 = t * t * t - 2.0 * t * t + t;
    let h01 = -2.0 * t * t * t + 3.0 * t * t;
    let h11 = t * t * t - t * t;
    (0..s0.y.len())
        .map(|i| {
            if s0.y[i] == s1.y[i] && s0.dy[i] == 0.0 && s1.dy[i] == 0.0 {
                s0.y[i]
            } else {
                h00 * s0.y[i] + h10 * h * s0.dy[i] + h01 * s1.y[i] + h11 * h * s1.dy[i]
            }
        })
        .collect()
}

/// Quintic Hermite interpolation through samples with second derivatives
/// `ddy`; constant extrapolation outside the range.
pub fn quintic_eval(samples: &[Sample], ddy: &[Vec<f64>], x: f64) -> Vec<f64> {
    let n = samples.len();
    if x <= samples[0].x {
        return samples[0].y.clone();
    }
    if x >= samples[n - 1].x {
        return samples[n - 1].y.clone();
    }
    let idx = samples.partition_point(|s| s.x <= x).max(1) - 1;
    let (s0, s1) = (&samples[idx], &samples[idx + 1]);
    let (a0, a1) = (&ddy[idx], &ddy[idx + 1]);
    let h = s1.x - s0.x;
    if h <= 0.0 {
        return s0.y.clone();
    }
    let t = (x - s0.x) / h;
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let w0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let w1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let w2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let w3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let w4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let w5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    (0..s0.y.len())
        .map(|i| {
            if s0.y[i] == s1.y[i] && s0.dy[i] == 0.0 && s1.dy[i] == 0.0 && a0[i] == 0.0 && a1[i] == 0.0 {
                s0.y[i]
            } else {
                w0 * s0.y[i] + h * (w1 * s0.dy[i] + w4 * s1.dy[i]) + h * h * (w2 * a0[i] + w3 * a1[i]) + w5 * s1.y[i]
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Result;

    #[test]
    fn quintic_reproduces_quintic_polynomials() {
        let p = |x: f64| (x.powi(5) - 2.0 * x.powi(3) + x - 1.0, 5.0 * x.powi(4) - 6.0 * x * x + 1.0, 20.0 * x.powi(3) - 12.0 * x);
        let xs = [-1.0, -0.3, 0.4, 1.5];
        let samples: Vec<Sample> = xs.iter().map(|&x| Sample { x, y: vec![p(x).0], dy: vec![p(x).1] }).collect();
        let ddy: Vec<Vec<f64>> = xs.iter().map(|&x| vec![p(x).2]).collect();
        for k in 0..=50 {
            let x = -1.0 + 2.5 * k as f64 / 50.0;
            assert!((quintic_eval(&samples, &ddy, x)[0] - p(x).0).abs() < 1e-12);
        }
    }

    struct Linear {
        a: DMatrix<f64>,
    }

    impl LayerOde for Linear {
        fn dim(&self) -> usize {
            self.a.nrows()
        }
        fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
            let v = &self.a * DVector::from_column_slice(y);
            dy.copy_from_slice(v.as_slice());
            Ok(())
        }
        fn jacobian(&self, _y: &[f64]) -> Result<DMatrix<f64>> {
            Ok(self.a.clone())
        }
    }

    struct Positive;

    impl LayerOde for Positive {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = -1.0;
            let _ = y;
            Ok(())
        }
        fn admissible(&self, y: &[f64]) -> bool {
            y[0] > 0.0
        }
    }

    fn decay() -> Linear {
        Linear { a: DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -2.0]) }
    }

    fn exact_decay(x: f64) -> [f64; 2] {
        // y2 = e^{-2x}, y1 = 1.5 e^{-x} - 0.5 e^{-2x}  for y(0) = (1, 1)
        [1.5 * (-x).exp() - 0.5 * (-2.0 * x).exp(), (-2.0 * x).exp()]
    }

    #[test]
    fn explicit_accuracy() {
        let opts = OdeOptions { method: Method::DormandPrince, ..OdeOptions::default() };
        let tr = integrate(&decay(), 1.0, &[1.0, 1.0], 3.0, &opts, None, None).unwrap();
        assert_eq!(tr.outcome, Outcome::SpanEnd);
        let last = tr.last();
        assert!((last.x - 3.0).abs() < 1e-14);
        let ex = exact_decay(3.0);
        assert!((last.y[0] - ex[0]).abs() < 1e-9 && (last.y[1] - ex[1]).abs() < 1e-9);
    }

    #[test]
    fn rosenbrock_accuracy_and_order() {
        let opts = OdeOptions { method: Method::Rosenbrock, ..OdeOptions::default() };
        let tr = integrate(&decay(), 1.0, &[1.0, 1.0], 3.0, &opts, None, None).unwrap();
        let ex = exact_decay(3.0);
        assert!((tr.last().y[0] - ex[0]).abs() < 1e-8);

        // fixed-step errors fall by about 2^4 per halving
        let sys = decay();
        let mut errs = Vec::new();
        for &nsteps in &[20usize, 40, 80] {
            let h = 1.0 / nsteps as f64;
            let mut f = Rhs { sys: &sys, direction: 1.0, evals: 0 };
            let mut y = vec![1.0, 1.0];
            let o = OdeOptions::default();
            for _ in 0..nsteps {
                let mut k1 = vec![0.0; 2];
                f.eval(&y, &mut k1).ok().unwrap();
                let s = rosenbrock_step(&mut f, &y, &k1, &sys.a, h, &o).ok().unwrap();
                y = s.y;
            }
            let ex = exact_decay(1.0);
            errs.push(((y[0] - ex[0]).powi(2) + (y[1] - ex[1]).powi(2)).sqrt());
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate > 3.7 && rate < 4.5, "rate {rate}, errors {errs:?}");
        }
    }

    #[test]
    fn dopri_fixed_step_order() {
        let sys = decay();
        let mut errs = Vec::new();
        for &nsteps in &[5usize, 10, 20] {
            let h = 1.0 / nsteps as f64;
            let mut f = Rhs { sys: &sys, direction: 1.0, evals: 0 };
            let mut y = vec![1.0, 1.0];
            let o = OdeOptions::default();
            for _ in 0..nsteps {
                let mut k1 = vec![0.0; 2];
                f.eval(&y, &mut k1).ok().unwrap();
                y = dopri_step(&mut f, &y, &k1, h, &o).ok().unwrap().y;
            }
            let ex = exact_decay(1.0);
            errs.push(((y[0] - ex[0]).powi(2) + (y[1] - ex[1]).powi(2)).sqrt());
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate > 4.6 && rate < 5.6, "rate {rate}, errors {errs:?}");
        }
    }

    #[test]
    fn auto_switches_on_stiff_problem() {
        let stiff = Linear { a: DMatrix::from_row_slice(2, 2, &[-1e5, 0.0, 0.0, -1.0]) };
        let opts = OdeOptions::default();
        let tr = integrate(&stiff, 1.0, &[1.0, 1.0], 5.0, &opts, None, None).unwrap();
        assert!(tr.switched);
        assert!((tr.last().y[1] - (-5.0f64).exp()).abs() < 1e-8);

        let explicit = OdeOptions { method: Method::DormandPrince, ..opts };
        let err = integrate(&stiff, 1.0, &[1.0, 1.0], 5.0, &explicit, None, None).unwrap_err();
        assert!(matches!(err, IntegrationError::Stiffness { .. }), "{err:?}");
    }

    #[test]
    fn section_is_located_precisely() {
        let opts = OdeOptions::default();
        let sec = Section { component: 1, level: 0.25 };
        let tr = integrate(&decay(), 1.0, &[1.0, 1.0], 10.0, &opts, Some(sec), None).unwrap();
        assert_eq!(tr.outcome, Outcome::Section);
        let last = tr.last();
        assert!((last.y[1] - 0.25).abs() < 1e-13, "{:?}", last);
        assert!((last.x - 0.5 * 4f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn backward_direction_and_target() {
        let opts = OdeOptions::default();
        let scale = [1.0, 1.0];
        let ex = exact_decay(1.0);
        let tr = integrate(&decay(), -1.0, &ex, 1.0, &opts, None, None).unwrap();
        assert_eq!(tr.outcome, Outcome::SpanEnd);
        assert!((tr.last().y[0] - 1.0).abs() < 1e-8 && (tr.last().y[1] - 1.0).abs() < 1e-8);
        let target = Target { point: &[1.0, 1.0], scale: &scale, radius: 1e-2 };
        let tr = integrate(&decay(), -1.0, &ex, 5.0, &opts, None, Some(target)).unwrap();
        assert_eq!(tr.outcome, Outcome::Target);
        assert!(tr.closest_approach <= 1e-2 && tr.last().x < 1.0);
    }

    #[test]
    fn leaving_the_domain_is_reported() {
        let opts = OdeOptions::default();
        let err = integrate(&Positive, 1.0, &[1.0], 5.0, &opts, None, None).unwrap_err();
        match err {
            IntegrationError::LeftAdmissible { last, .. } => assert!(last[0] > 0.0 && last[0] < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step_budget() {
        let opts = OdeOptions { max_steps: 3, h_init: 1e-3, ..OdeOptions::default() };
        let err = integrate(&decay(), 1.0, &[1.0, 1.0], 5.0, &opts, None, None).unwrap_err();
        assert!(matches!(err, IntegrationError::MaxSteps { .. }));
    }

    #[test]
    fn hermite_is_exact_for_cubics() {
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let samples: Vec<Sample> = [0.0, 0.7, 1.5]
            .iter()
            .map(|&x| Sample { x, y: vec![f(x)], dy: vec![df(x)] })
            .collect();
        for &x in &[0.1, 0.5, 0.9, 1.4] {
            assert!((hermite_eval(&samples, x)[0] - f(x)).abs() < 1e-13);
        }
    }
}
