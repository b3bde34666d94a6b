//! Hermite–Simpson collocation for connecting orbits on a truncated interval.
//!
//! The orbit is represented by node values `y_i` on a mesh; each interval
//! carries the cubic Hermite interpolant through `(y_i, f_i)` and
//! `(y_{i+1}, f_{i+1})`, which is required to satisfy the ODE at the
//! interval midpoint. The two ends are closed by linear conditions on the
//! deviation from the rest points, and one node is pinned to fix the
//! translation. Newton's method runs on the scaled unknowns
//! `z = D⁻¹ (y - origin)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ShockError};
use crate::layer::LayerOde;

#[derive(Clone, Debug, PartialEq)]
pub struct BvpOptions {
    /// Largest allowed scaled ODE defect at the interval quarter points.
    pub tol: f64,
    pub max_nodes: usize,
    pub initial_nodes: usize,
    pub max_newton: usize,
    /// Newton stops when the scaled residual max-norm falls below this.
    pub newton_tol: f64,
    pub max_refinements: usize,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_nodes: 40_000, initial_nodes: 240, max_newton: 40, newton_tol: 1e-13, max_refinements: 14 }
    }
}

/// Linear end condition `rows · D⁻¹ (y - rest) = 0`.
#[derive(Clone, Debug)]
pub struct EndCondition {
    pub rest: Vec<f64>,
    pub rows: DMatrix<f64>,
}

/// Problem data: scales, end conditions and the pinned component value at `x = 0`.
pub struct Problem<'a, S: LayerOde + ?Sized> {
    pub sys: &'a S,
    pub scales: Vec<f64>,
    pub left: EndCondition,
    pub right: EndCondition,
    pub pin_component: usize,
    pub pin_value: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    /// Scaled residual max-norm at the last Newton iterate.
    pub residual: f64,
    /// Largest scaled defect at the quarter points.
    pub defect: f64,
}

/// A row of a sparse matrix with a contiguous band of columns.
#[derive(Clone, Debug)]
struct Row {
    start: usize,
    vals: Vec<f64>,
    rhs: f64,
}

impl Row {
    fn end(&self) -> usize {
        self.start + self.vals.len()
    }

    fn get(&self, c: usize) -> f64 {
        if c >= self.start && c < self.end() {
            self.vals[c - self.start]
        } else {
            0.0
        }
    }
}

/// Gaussian elimination with partial pivoting on a banded row system.
fn solve_rows(mut rows: Vec<Row>) -> Option<Vec<f64>> {
    let n = rows.len();
    let window = rows.iter().map(|r| r.vals.len()).max().unwrap_or(1) * 2 + 2;
    for k in 0..n {
        let hi = (k + window).min(n);
        let mut p = k;
        let mut best = rows[k].get(k).abs();
        for (r, row) in rows.iter().enumerate().take(hi).skip(k + 1) {
            let v = row.get(k).abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        debug_assert!(rows[hi..].iter().all(|r| r.start > k || r.get(k) == 0.0));
        if !(best > 0.0) || !best.is_finite() {
            return None;
        }
        rows.swap(k, p);
        let (head, tail) = rows.split_at_mut(k + 1);
        let pivot = &head[k];
        let pk = pivot.get(k);
        for row in tail.iter_mut().take(hi - k - 1) {
            let v = row.get(k);
            if v == 0.0 {
                continue;
            }
            let l = v / pk;
            let end = pivot.end().max(row.end());
            let start = row.start.min(k);
            if start < row.start || end > row.end() {
                let mut vals = vec![0.0; end - start];
                let off = row.start - start;
                vals[off..off + row.vals.len()].copy_from_slice(&row.vals);
                row.vals = vals;
                row.start = start;
            }
            for c in k..pivot.end() {
                row.vals[c - row.start] -= l * pivot.vals[c - pivot.start];
            }
            row.rhs -= l * pivot.rhs;
            // drop the eliminated leading entries
            let drop = k + 1 - row.start;
            row.vals.drain(..drop);
            row.start = k + 1;
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let row = &rows[k];
        let s: f64 = ((k + 1)..row.end()).map(|c| row.get(c) * x[c]).sum();
        x[k] = (row.rhs - s) / row.get(k);
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct Scaled<'p, 'a, S: LayerOde + ?Sized> {
    p: &'p Problem<'a, S>,
}

impl<S: LayerOde + ?Sized> Scaled<'_, '_, S> {
    fn unscale(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.p.scales).zip(&self.p.left.rest).map(|((z, d), o)| o + d * z).collect()
    }

    fn scale(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.p.scales).zip(&self.p.left.rest).map(|((y, d), o)| (y - o) / d).collect()
    }

    fn g(&self, z: &[f64]) -> Result<DVector<f64>> {
        let y = self.unscale(z);
        let mut dy = vec![0.0; y.len()];
        self.p.sys.rhs(&y, &mut dy)?;
        Ok(DVector::from_iterator(y.len(), dy.iter().zip(&self.p.scales).map(|(d, s)| d / s)))
    }

    fn jac(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let y = self.unscale(z);
        let j = self.p.sys.jacobian(&y)?;
        let s = &self.p.scales;
        Ok(DMatrix::from_fn(j.nrows(), j.ncols(), |r, c| j[(r, c)] * s[c] / s[r]))
    }

    fn rest_offset(&self, rest: &[f64]) -> DVector<f64> {
        DVector::from_vec(self.scale(rest))
    }
}

/// Newton iterate data on a fixed mesh.
struct Mesh {
    x: Vec<f64>,
    pin: usize,
}

fn residual<S: LayerOde + ?Sized>(sc: &Scaled<S>, mesh: &Mesh, z: &[DVector<f64>]) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let n = z[0].len();
    let g: Vec<DVector<f64>> = z.iter().map(|zi| sc.g(zi.as_slice())).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(z.len() * n);
    let lo = sc.rest_offset(&sc.p.left.rest);
    let ro = sc.rest_offset(&sc.p.right.rest);
    out.extend((&sc.p.left.rows * (&z[0] - &lo)).iter());
    for i in 0..mesh.x.len() - 1 {
        if i == mesh.pin {
            out.push(z[i][sc.p.pin_component] - (sc.p.pin_value - sc.p.left.rest[sc.p.pin_component]) / sc.p.scales[sc.p.pin_component]);
        }
        let h = mesh.x[i + 1] - mesh.x[i];
        let zm = (&z[i] + &z[i + 1]) * 0.5 - (&g[i + 1] - &g[i]) * (h / 8.0);
        let gm = sc.g(zm.as_slice())?;
        let r = &z[i + 1] - &z[i] - (&g[i] + &gm * 4.0 + &g[i + 1]) * (h / 6.0);
        out.extend(r.iter());
    }
    if mesh.pin == mesh.x.len() - 1 {
        out.push(z[mesh.pin][sc.p.pin_component] - (sc.p.pin_value - sc.p.left.rest[sc.p.pin_component]) / sc.p.scales[sc.p.pin_component]);
    }
    let last = z.len() - 1;
    out.extend((&sc.p.right.rows * (&z[last] - &ro)).iter());
    Ok((out, g))
}

fn newton_system<S: LayerOde + ?Sized>(sc: &Scaled<S>, mesh: &Mesh, z: &[DVector<f64>], g: &[DVector<f64>], res: &[f64]) -> Result<Vec<Row>> {
    let n = z[0].len();
    let jn: Vec<DMatrix<f64>> = z.iter().map(|zi| sc.jac(zi.as_slice())).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(res.len());
    let mut k = 0;
    let mut push = |start: usize, vals: Vec<f64>, rows: &mut Vec<Row>| {
        rows.push(Row { start, vals, rhs: -res[k] });
        k += 1;
    };
    for r in 0..sc.p.left.rows.nrows() {
        push(0, sc.p.left.rows.row(r).iter().copied().collect(), &mut rows);
    }
    let id = DMatrix::<f64>::identity(n, n);
    let pin_row = || -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[sc.p.pin_component] = 1.0;
        v
    };
    for i in 0..mesh.x.len() - 1 {
        if i == mesh.pin {
            push(i * n, pin_row(), &mut rows);
        }
        let h = mesh.x[i + 1] - mesh.x[i];
        let zm = (&z[i] + &z[i + 1]) * 0.5 - (&g[i + 1] - &g[i]) * (h / 8.0);
        let jm = sc.jac(zm.as_slice())?;
        let a = -&id - (&jn[i] + &jm * 4.0 * (&id * 0.5 + &jn[i] * (h / 8.0))) * (h / 6.0);
        let b = &id - (&jn[i + 1] + &jm * 4.0 * (&id * 0.5 - &jn[i + 1] * (h / 8.0))) * (h / 6.0);
        for r in 0..n {
            let mut vals = Vec::with_capacity(2 * n);
            vals.extend(a.row(r).iter());
            vals.extend(b.row(r).iter());
            push(i * n, vals, &mut rows);
        }
    }
    let last = mesh.x.len() - 1;
    if mesh.pin == last {
        push(last * n, pin_row(), &mut rows);
    }
    for r in 0..sc.p.right.rows.nrows() {
        push(last * n, sc.p.right.rows.row(r).iter().copied().collect(), &mut rows);
    }
    Ok(rows)
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn newton<S: LayerOde + ?Sized>(sc: &Scaled<S>, mesh: &Mesh, mut z: Vec<DVector<f64>>, opts: &BvpOptions) -> Result<(Vec<DVector<f64>>, f64)> {
    let n = z[0].len();
    let (mut res, mut g) = residual(sc, mesh, &z)?;
    let mut norm = max_norm(&res);
    for _ in 0..opts.max_newton {
        if norm <= opts.newton_tol {
            break;
        }
        let rows = newton_system(sc, mesh, &z, &g, &res)?;
        let dz = solve_rows(rows).ok_or_else(|| ShockError::NonConvergence("singular collocation system".into()))?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial: Vec<DVector<f64>> = z
                .iter()
                .enumerate()
                .map(|(i, zi)| zi + DVector::from_column_slice(&dz[i * n..(i + 1) * n]) * alpha)
                .collect();
            if let Ok((r2, g2)) = residual(sc, mesh, &trial) {
                let n2 = max_norm(&r2);
                if n2 < (1.0 - 1e-4 * alpha) * norm || (n2 <= opts.newton_tol) {
                    z = trial;
                    res = r2;
                    g = g2;
                    norm = n2;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        let step = max_norm(&dz) * alpha;
        if step <= 1e-13 {
            break;
        }
    }
    if norm > opts.newton_tol.max(1e-10) {
        return Err(ShockError::NonConvergence(format!("collocation Newton stalled at residual {norm:.3e}")));
    }
    Ok((z, norm))
}

/// Cubic Hermite value and derivative on `[0, h]` at `s · h`.
fn hermite(z0: &DVector<f64>, z1: &DVector<f64>, g0: &DVector<f64>, g1: &DVector<f64>, h: f64, s: f64) -> (DVector<f64>, DVector<f64>) {
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let d00 = (6.0 * s2 - 6.0 * s) / h;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = (-6.0 * s2 + 6.0 * s) / h;
    let d11 = 3.0 * s2 - 2.0 * s;
    let y = z0 * h00 + g0 * (h10 * h) + z1 * h01 + g1 * (h11 * h);
    let d = z0 * d00 + g0 * d10 + z1 * d01 + g1 * d11;
    (y, d)
}

fn defects<S: LayerOde + ?Sized>(sc: &Scaled<S>, mesh: &Mesh, z: &[DVector<f64>], g: &[DVector<f64>]) -> Vec<f64> {
    (0..mesh.x.len() - 1)
        .map(|i| {
            let h = mesh.x[i + 1] - mesh.x[i];
            [0.25, 0.75]
                .iter()
                .map(|&s| {
                    let (y, d) = hermite(&z[i], &z[i + 1], &g[i], &g[i + 1], h, s);
                    match sc.g(y.as_slice()) {
                        Ok(f) => (d - f).amax(),
                        Err(_) => f64::INFINITY,
                    }
                })
                .fold(0.0f64, f64::max)
        })
        .collect()
}

/// Solves the connecting-orbit problem from an initial guess on `x`
/// (which must contain `0`), refining the mesh until the defect is below
/// `opts.tol`.
pub fn solve<S: LayerOde + ?Sized>(problem: &Problem<S>, x: Vec<f64>, guess: Vec<Vec<f64>>, opts: &BvpOptions) -> Result<Solution> {
    let n = problem.sys.dim();
    let square = problem.left.rows.nrows() + problem.right.rows.nrows() + 1;
    if square != n {
        return Err(ShockError::InvalidParameter {
            field: "end conditions",
            reason: format!("{square} conditions for a {n}-dimensional system"),
        });
    }
    let sc = Scaled { p: problem };
    let pin = x.iter().position(|v| *v == 0.0).ok_or_else(|| ShockError::InvalidParameter {
        field: "mesh",
        reason: "mesh must contain x = 0".into(),
    })?;
    let mut mesh = Mesh { x, pin };
    let mut z: Vec<DVector<f64>> = guess.iter().map(|y| DVector::from_vec(sc.scale(y))).collect();
    for _ in 0..=opts.max_refinements {
        let (zn, norm) = newton(&sc, &mesh, z, opts)?;
        z = zn;
        let g: Vec<DVector<f64>> = z.iter().map(|zi| sc.g(zi.as_slice())).collect::<Result<_>>()?;
        let d = defects(&sc, &mesh, &z, &g);
        let worst = max_norm(&d);
        if worst <= opts.tol {
            let y: Vec<Vec<f64>> = z.iter().map(|zi| sc.unscale(zi.as_slice())).collect();
            let f = y
                .iter()
                .map(|yi| {
                    let mut dy = vec![0.0; n];
                    problem.sys.rhs(yi, &mut dy).map(|_| dy)
                })
                .collect::<Result<_>>()?;
            return Ok(Solution { x: mesh.x, y, f, residual: norm, defect: worst });
        }
        // split intervals whose defect exceeds the tolerance; the defect
        // shrinks like h³, so pick the number of pieces accordingly
        let mut nx = Vec::with_capacity(mesh.x.len() * 2);
        let mut nz = Vec::with_capacity(mesh.x.len() * 2);
        let mut npin = 0;
        for i in 0..mesh.x.len() - 1 {
            if i == mesh.pin {
                npin = nx.len();
            }
            nx.push(mesh.x[i]);
            nz.push(z[i].clone());
            if d[i] > opts.tol {
                let pieces = ((d[i] / opts.tol).cbrt().ceil() as usize).clamp(2, 8);
                let h = mesh.x[i + 1] - mesh.x[i];
                for k in 1..pieces {
                    let s = k as f64 / pieces as f64;
                    let (y, _) = hermite(&z[i], &z[i + 1], &g[i], &g[i + 1], h, s);
                    nx.push(mesh.x[i] + s * h);
                    nz.push(y);
                }
            }
        }
        let last = mesh.x.len() - 1;
        if mesh.pin == last {
            npin = nx.len();
        }
        nx.push(mesh.x[last]);
        nz.push(z[last].clone());
        if nx.len() > opts.max_nodes {
            return Err(ShockError::NonConvergence(format!(
                "collocation mesh would exceed {} nodes (defect {worst:.3e})",
                opts.max_nodes
            )));
        }
        mesh = Mesh { x: nx, pin: npin };
        z = nz;
    }
    Err(ShockError::NonConvergence("collocation mesh refinement did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::{burgers_embedding, burgers_profile};

    #[test]
    fn row_solver_matches_dense() {
        let a = DMatrix::from_row_slice(4, 4, &[0.0, 2.0, 0.0, 0.0, 1.0, 1.0, 3.0, 0.0, 0.0, 4.0, 1.0, 2.0, 0.0, 0.0, 1.0, 5.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let rows = (0..4)
            .map(|r| {
                let start = (0..4).find(|&c| a[(r, c)] != 0.0).unwrap();
                let end = (0..4).rev().find(|&c| a[(r, c)] != 0.0).unwrap() + 1;
                Row { start, vals: (start..end).map(|c| a[(r, c)]).collect(), rhs: b[r] }
            })
            .collect();
        let x = solve_rows(rows).unwrap();
        let expect = a.lu().solve(&b).unwrap();
        for i in 0..4 {
            assert!((x[i] - expect[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn burgers_collocation() {
        let (ul, ur, eps) = (1.0, -1.0, 0.5);
        let sys = burgers_embedding(ul, ur, eps);
        // for 1D, the left end pins nothing and the right end pins nothing;
        // one pin condition closes the problem
        let problem = Problem {
            sys: &sys,
            scales: vec![2.0],
            left: EndCondition { rest: vec![ul], rows: DMatrix::zeros(0, 1) },
            right: EndCondition { rest: vec![ur], rows: DMatrix::zeros(0, 1) },
            pin_component: 0,
            pin_value: 0.0,
        };
        let x: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.25).collect();
        let guess = x.iter().map(|&t| vec![-(t / 2.0).tanh()]).collect();
        let sol = solve(&problem, x, guess, &BvpOptions::default()).unwrap();
        for (x, y) in sol.x.iter().zip(&sol.y) {
            assert!((y[0] - burgers_profile(ul, ur, eps, *x)).abs() < 1e-7);
        }
    }
}
