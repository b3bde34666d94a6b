//! Dense linear-algebra helpers: spectra, spectral projectors and a small
//! Levenberg–Marquardt solver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigenvalues sorted by real part, then imaginary part.
pub fn sorted_eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    let mut ev: Vec<Complex64> = a
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    ev
}

pub fn spectral_radius(ev: &[Complex64]) -> f64 {
    ev.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Matrix sign function by scaled Newton iteration. `None` when an iterate
/// becomes singular (an eigenvalue on the imaginary axis).
pub fn matrix_sign(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut s = a.clone();
    for _ in 0..100 {
        let lu = s.clone().lu();
        let det = lu.determinant();
        let inv = lu.try_inverse()?;
        let mut c = det.abs().powf(-1.0 / n as f64);
        if !c.is_finite() || c <= 0.0 {
            c = 1.0;
        }
        let next = (&s * c + inv / c) * 0.5;
        let diff = (&next - &s).abs().row_sum().max();
        let norm = next.abs().row_sum().max();
        s = next;
        if diff <= 1e-14 * norm {
            // one unscaled polish step
            let inv = s.clone().try_inverse()?;
            return Some((&s + inv) * 0.5);
        }
    }
    None
}

/// Which side of the imaginary axis an invariant subspace belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Unstable,
    Stable,
}

/// Orthonormal basis of the invariant subspace of `a` belonging to eigenvalues
/// with `Re λ > threshold` (unstable) or `Re λ < -threshold` (stable).
///
/// The basis is rotated by the Schur vectors of the restricted operator, so
/// for a symmetric `a` its columns are eigenvectors.
pub fn invariant_subspace(a: &DMatrix<f64>, side: Side, threshold: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let shifted = match side {
        Side::Unstable => a - DMatrix::identity(n, n) * threshold,
        Side::Stable => -a - DMatrix::identity(n, n) * threshold,
    };
    let sign = matrix_sign(&shifted)?;
    let proj = (DMatrix::identity(n, n) + sign) * 0.5;
    let rank = proj.trace().round().max(0.0) as usize;
    if rank == 0 {
        return Some(DMatrix::zeros(n, 0));
    }
    let svd = proj.svd(true, false);
    let u = svd.u?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let q = DMatrix::from_fn(n, rank, |i, j| u[(i, order[j])]);
    let restricted = q.transpose() * a * &q;
    let (z, _) = restricted.schur().unpack();
    Some(q * z)
}

/// Unit vector spanning the (numerical) null space of `a`.
pub fn null_vector(a: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = a.ncols();
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    Some(DVector::from_fn(n, |j, _| vt[(imin, j)]))
}

/// Solves the least-squares system `a x ≈ b` via SVD with relative cutoff.
pub fn pseudo_solve(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> Option<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, rcond * smax.max(f64::MIN_POSITIVE)).ok()
}

/// Orthonormal basis of the orthogonal complement of unit vector `c`.
pub fn complement_basis(c: &DVector<f64>) -> DMatrix<f64> {
    let k = c.len();
    if k <= 1 {
        return DMatrix::zeros(k, 0);
    }
    let proj = DMatrix::identity(k, k) - c * c.transpose();
    let svd = proj.svd(true, false);
    let u = svd.u.expect("svd with u");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    DMatrix::from_fn(k, k - 1, |i, j| u[(i, order[j])])
}

/// Settings for [`levenberg_marquardt`].
#[derive(Clone, Copy, Debug)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when the residual 2-norm falls below this.
    pub tol: f64,
    /// Central-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iter: 60, tol: 1e-11, fd_step: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct LmResult {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Minimizes `‖r(x)‖²` where `r` may fail (returns `None`) in parts of the
/// domain. Failed trial points are treated as rejected steps.
pub fn levenberg_marquardt(
    mut r: impl FnMut(&DVector<f64>) -> Option<DVector<f64>>,
    x0: DVector<f64>,
    opts: &LmOptions,
) -> Option<LmResult> {
    let mut evals = 1;
    let mut x = x0;
    let mut fx = r(&x)?;
    let mut norm = fx.norm();
    let p = x.len();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    if p == 0 {
        return Some(LmResult { x, residual_norm: norm, iterations, evaluations: evals });
    }
    while iterations < opts.max_iter && norm > opts.tol {
        iterations += 1;
        let q = fx.len();
        let mut jac = DMatrix::zeros(q, p);
        let mut jac_ok = true;
        for j in 0..p {
            let h = opts.fd_step * x[j].abs().max(1.0);
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            evals += 2;
            match (r(&xp), r(&xm)) {
                (Some(fp), Some(fm)) => jac.set_column(j, &((fp - fm) / (2.0 * h))),
                (Some(fp), None) => jac.set_column(j, &((fp - &fx) / h)),
                (None, Some(fm)) => jac.set_column(j, &((&fx - fm) / h)),
                (None, None) => {
                    jac_ok = false;
                    break;
                }
            }
        }
        if !jac_ok {
            break;
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &fx;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..p {
                a[(i, i)] += lambda * (jtj[(i, i)].max(1e-12));
            }
            let Some(step) = pseudo_solve(&a, &(-&g), 1e-14) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &x + &step;
            evals += 1;
            if let Some(ft) = r(&trial) {
                let tn = ft.norm();
                if tn < norm {
                    let rel_step = step.norm() / (x.norm() + 1e-12);
                    x = trial;
                    fx = ft;
                    norm = tn;
                    lambda = (lambda * 0.2).max(1e-12);
                    improved = true;
                    if rel_step < 1e-15 {
                        return Some(LmResult { x, residual_norm: norm, iterations, evaluations: evals });
                    }
                    break;
                }
            }
            lambda *= 8.0;
        }
        if !improved {
            break;
        }
    }
    Some(LmResult { x, residual_norm: norm, iterations, evaluations: evals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_of_diagonalizable_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, -1.0, 3.0, 0.0, 0.0, 0.5]);
        let s = matrix_sign(&a).unwrap();
        // S² = I and S commutes with A
        let s2 = &s * &s;
        assert!((s2 - DMatrix::identity(3, 3)).amax() < 1e-12);
        assert!((&s * &a - &a * &s).amax() < 1e-12);
        assert!((s.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unstable_subspace_of_symmetric_matrix_is_eigenvectors() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 0.5, 0.3, 0.0, 0.3, -1.5]);
        let q = invariant_subspace(&a, Side::Unstable, 1e-10).unwrap();
        let ev = sorted_eigenvalues(&a);
        let n_unstable = ev.iter().filter(|z| z.re > 0.0).count();
        assert_eq!(q.ncols(), n_unstable);
        for j in 0..q.ncols() {
            let v = q.column(j).into_owned();
            let lambda = (v.transpose() * &a * &v)[(0, 0)];
            assert!((&a * &v - &v * lambda).norm() < 1e-12);
        }
    }

    #[test]
    fn complex_pair_subspace() {
        // rotation-dilation block with eigenvalues 1 ± 2i plus a stable mode
        let a = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.0, 2.0, 1.0, 0.0, 0.3, 0.1, -1.0]);
        let q = invariant_subspace(&a, Side::Unstable, 1e-10).unwrap();
        assert_eq!(q.ncols(), 2);
        // invariance: A Q = Q (Qᵀ A Q)
        let r = &a * &q - &q * (q.transpose() * &a * &q);
        assert!(r.amax() < 1e-12);
        let s = invariant_subspace(&a, Side::Stable, 1e-10).unwrap();
        assert_eq!(s.ncols(), 1);
    }

    #[test]
    fn lm_solves_rosenbrock_residual() {
        let res = levenberg_marquardt(
            |x| Some(DVector::from_vec(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]])),
            DVector::from_vec(vec![-1.2, 1.0]),
            &LmOptions { max_iter: 200, ..LmOptions::default() },
        )
        .unwrap();
        assert!(res.residual_norm < 1e-10, "{res:?}");
        assert!((res.x[0] - 1.0).abs() < 1e-8);
    }
}
