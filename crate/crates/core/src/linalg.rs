//! Matrix-free Krylov solvers with Jacobi preconditioning and a tridiagonal
//! solver. Reductions run sequentially so results are bit-reproducible.

use std::ops::{Div, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inv_diagonal(diag: &[f64]) -> Vec<f64> {
    diag.iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

/// Preconditioned conjugate gradients for a symmetric positive definite operator.
///
/// `x` holds the initial guess on entry and the solution on exit.
pub fn pcg<A>(apply: A, diag: &[f64], b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> Result<KrylovStats>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let minv = inv_diagonal(diag);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    for it in 0..max_iter {
        if rel <= rtol {
            return Ok(KrylovStats {
                iterations: it,
                relative_residual: rel,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::LinearSolver(rel));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
    }
    if rel <= rtol {
        Ok(KrylovStats {
            iterations: max_iter,
            relative_residual: rel,
        })
    } else {
        Err(Error::LinearSolver(rel))
    }
}

/// Right-preconditioned BiCGSTAB for general (nonsymmetric) operators.
pub fn bicgstab<A>(apply: A, diag: &[f64], b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> Result<KrylovStats>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let minv = inv_diagonal(diag);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut zz = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    for it in 0..max_iter {
        if rel <= rtol {
            return Ok(KrylovStats {
                iterations: it,
                relative_residual: rel,
            });
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return Err(Error::LinearSolver(rel));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] * minv[i];
        }
        apply(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            return Err(Error::LinearSolver(rel));
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let snorm = dot(&s, &s).sqrt() / bnorm;
        if snorm <= rtol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(KrylovStats {
                iterations: it + 1,
                relative_residual: snorm,
            });
        }
        for i in 0..n {
            zz[i] = s[i] * minv[i];
        }
        apply(&zz, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zz[i];
            r[i] = s[i] - omega * t[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if omega == 0.0 {
            return Err(Error::LinearSolver(rel));
        }
    }
    if rel <= rtol {
        Ok(KrylovStats {
            iterations: max_iter,
            relative_residual: rel,
        })
    } else {
        Err(Error::LinearSolver(rel))
    }
}

/// Restarted GMRES with right Jacobi preconditioning.
pub fn gmres<A>(
    apply: A,
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<KrylovStats>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let minv = inv_diagonal(diag);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let m = restart.max(1);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    loop {
        apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = dot(&r, &r).sqrt();
        let rel = beta / bnorm;
        if rel <= rtol {
            return Ok(KrylovStats {
                iterations: total,
                relative_residual: rel,
            });
        }
        if total >= max_iter {
            return Err(Error::LinearSolver(rel));
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < max_iter {
            for i in 0..n {
                z[i] = basis[k][i] * minv[i];
            }
            apply(&z, &mut w);
            for j in 0..=k {
                let hjk = dot(&w, &basis[j]);
                hess[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * basis[j][i];
                }
            }
            let wn = dot(&w, &w).sqrt();
            hess[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let rho = hess[k][k].hypot(hess[k + 1][k]);
            if rho == 0.0 || !rho.is_finite() {
                return Err(Error::LinearSolver(g[k].abs() / bnorm));
            }
            cs[k] = hess[k][k] / rho;
            sn[k] = hess[k + 1][k] / rho;
            hess[k][k] = rho;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            if g[k].abs() / bnorm <= rtol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, yj) in y.iter().enumerate() {
                acc += yj * basis[j][i];
            }
            x[i] += acc * minv[i];
        }
    }
}

/// Thomas algorithm for `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
/// `lower[0]` and `upper[n-1]` are ignored. Solves in place.
pub fn solve_tridiagonal<T>(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [T]) -> Result<()>
where
    T: Copy + Sub<Output = T> + Mul<f64, Output = T> + Div<f64, Output = T>,
{
    let n = rhs.len();
    if n == 0 {
        return Ok(());
    }
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::InvariantViolation("zero pivot in tridiagonal solve".into()));
    }
    c[0] = upper[0] / denom;
    rhs[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::InvariantViolation("zero pivot in tridiagonal solve".into()));
        }
        c[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        rhs[i] = (rhs[i] - rhs[i - 1] * lower[i]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - rhs[i + 1] * c[i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(x: &[f64], y: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] } else { 0.0 };
            y[i] = 2.0 * x[i] - l - r + 0.1 * (i as f64) * x[i];
        }
    }

    fn residual(x: &[f64], b: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        laplace_1d(x, &mut y);
        y.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn pcg_solves_spd_system() {
        let n = 50;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        pcg(laplace_1d, &diag, &b, &mut x, 1e-12, 500).unwrap();
        assert!(residual(&x, &b) < 1e-10);
    }

    #[test]
    fn bicgstab_solves_nonsymmetric_system() {
        let n = 40;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 3.0 * x[i] - 1.3 * l - 0.7 * r;
            }
        };
        let diag = vec![3.0; n];
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        let mut x = vec![0.0; n];
        bicgstab(apply, &diag, &b, &mut x, 1e-13, 500).unwrap();
        let mut y = vec![0.0; n];
        apply(&x, &mut y);
        let err = y.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 60;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.5 * x[i] - 1.9 * l - 0.4 * r;
            }
        };
        let diag = vec![2.5; n];
        let b: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        gmres(apply, &diag, &b, &mut x, 1e-12, 10, 2000).unwrap();
        let mut y = vec![0.0; n];
        apply(&x, &mut y);
        let err = y.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let mut rhs = [1.0, 2.0, 3.0, 4.0];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs).unwrap();
        let x = rhs;
        let back = [
            4.0 * x[0] - x[1],
            -x[0] + 4.0 * x[1] - x[2],
            -x[1] + 4.0 * x[2] - x[3],
            -x[2] + 4.0 * x[3],
        ];
        for (a, b) in back.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
