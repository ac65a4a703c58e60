//! One-dimensional quadrature and interpolation helpers.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(points: usize) -> (Vec<f64>, Vec<f64>) {
    let m = points;
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_m.
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Tails `int_{t_j}^{t_last} p(t) t^{-2} dt` for `j >= 1`, where `p` is the
/// piecewise-cubic Lagrange interpolant of `values` on `t_i = i spacing`
/// (the same stencils as `cubic_interpolate`). Each cell is integrated in
/// closed form, so data of degree at most three are integrated exactly.
/// Entry 0 is NaN since the weight is not integrable at `t = 0`.
pub fn inverse_square_tails(values: &[f64], spacing: f64) -> Vec<f64> {
    let last = values.len() - 1;
    let mut out = vec![0.0; values.len()];
    out[0] = f64::NAN;
    let mut acc = 0.0;
    for i in (1..last).rev() {
        let start = i.saturating_sub(1).min(last.saturating_sub(3));
        // Monomial coefficients in xi = (t - t_i)/spacing over the stencil.
        let mut c = [0.0; 4];
        for q in 0..4 {
            let mut basis = [1.0, 0.0, 0.0, 0.0];
            let xq = (start + q) as f64 - i as f64;
            let mut denom = 1.0;
            for r in 0..4 {
                if r == q {
                    continue;
                }
                let xr = (start + r) as f64 - i as f64;
                for m in (1..4).rev() {
                    basis[m] = basis[m - 1] - xr * basis[m];
                }
                basis[0] *= -xr;
                denom *= xq - xr;
            }
            for m in 0..4 {
                c[m] += values[start + q] * basis[m] / denom;
            }
        }
        // J_m = int_0^h x^m (a + x)^{-2} dx with a = t_i, x = xi spacing.
        let (a, h) = (i as f64 * spacing, spacing);
        let log = (h / a).ln_1p();
        let j0 = h / (a * (a + h));
        let j1 = log - a * j0;
        let j2 = h - 2.0 * a * log + a * a * j0;
        let j3 = 0.5 * h * h - 2.0 * a * h + 3.0 * a * a * log - a * a * a * j0;
        acc += c[0] * j0 + c[1] * j1 / h + c[2] * j2 / (h * h) + c[3] * j3 / (h * h * h);
        out[i] = acc;
    }
    out
}

/// Four-point Lagrange interpolation of samples on a uniform grid starting at 0.
pub fn cubic_interpolate(values: &[f64], spacing: f64, t: f64) -> f64 {
    let last = values.len() - 1;
    let s = (t / spacing).clamp(0.0, last as f64);
    let i = (s.floor() as usize).min(last - 1);
    let start = i.saturating_sub(1).min(last.saturating_sub(3));
    let x = s - start as f64;
    let mut acc = 0.0;
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (x - b as f64) / (a as f64 - b as f64);
            }
        }
        acc += l * values[start + a];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(32);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(41)).sum();
        assert!((i - 1.0 / 42.0).abs() < 1e-14);
        let (x3, w3) = gauss_legendre_unit(3);
        let i3: f64 = x3.iter().zip(&w3).map(|(x, w)| w * x.powi(5)).sum();
        assert!((i3 - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_square_tails_are_exact_for_cubics() {
        let h = 0.05;
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t;
        let vals: Vec<f64> = (0..=20).map(|i| p(i as f64 * h)).collect();
        let tails = inverse_square_tails(&vals, h);
        let anti = |t: f64| -1.0 / t - 2.0 * t.ln() + 0.5 * t + 1.5 * t * t;
        for j in 1..=20 {
            let exact = anti(1.0) - anti(j as f64 * h);
            assert!((tails[j] - exact).abs() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn cubic_interpolation_reproduces_cubics() {
        let h = 0.1;
        let vals: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        for t in [0.0, 0.03, 0.47, 0.95, 1.0] {
            assert!((cubic_interpolate(&vals, h, t) - t.powi(3)).abs() < 1e-13);
        }
    }
}
