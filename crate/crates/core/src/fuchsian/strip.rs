//! Model operators on the periodic strip `{Y in R^{n-1}, 0 <= T <= theta}`
//! with period `2 theta` in each `Y_j`, and the explicit inverse of
//! `(D+2)(D-1) + T^2 lap_Y`, where `D = T d/dT`.
//!
//! Y-derivatives are spectral. T-derivatives are second-order differences on
//! `T_j = j theta / nt`; the row `j = 0` stores the `T -> 0` limits.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::quadrature::{cubic_interpolate, gauss_legendre_unit, inverse_square_tails};
use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;

/// Gauss-Legendre points for `f0 = int_0^1 sigma h_TT(T sigma) d sigma`.
pub const F0_POINTS: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct StripField {
    n: usize,
    theta: f64,
    ny: usize,
    nt: usize,
    /// Layout `[y][t]`, T fastest; `y` is row-major over the `n-1` axes.
    values: Vec<f64>,
}

impl StripField {
    pub fn zeros(n: usize, theta: f64, ny: usize, nt: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument("n ≥ 3 required".into()));
        }
        if !(theta > 0.0) || ny < 4 || ny % 2 != 0 || nt < 4 {
            return Err(Error::InvalidArgument(format!(
                "strip needs theta > 0, even ny >= 4 and nt >= 4 (got {theta}, {ny}, {nt})"
            )));
        }
        let len = ny.pow((n - 1) as u32) * (nt + 1);
        Ok(Self {
            n,
            theta,
            ny,
            nt,
            values: vec![0.0; len],
        })
    }

    /// Samples `f(Y, T)` on the strip grid.
    pub fn from_fn<F: Fn(&[f64], f64) -> f64 + Sync>(n: usize, theta: f64, ny: usize, nt: usize, f: F) -> Result<Self> {
        let mut s = Self::zeros(n, theta, ny, nt)?;
        let cols = s.columns();
        let nt1 = nt + 1;
        let (dy, dt) = (s.dy(), s.dt());
        let m = n - 1;
        s.values.par_chunks_mut(nt1).enumerate().for_each(|(yi, col)| {
            let y = y_coords(yi, ny, m, dy);
            for (j, v) in col.iter_mut().enumerate() {
                *v = f(&y, j as f64 * dt);
            }
        });
        debug_assert_eq!(cols * nt1, s.values.len());
        Ok(s)
    }

    fn like(&self, values: Vec<f64>) -> Self {
        Self {
            n: self.n,
            theta: self.theta,
            ny: self.ny,
            nt: self.nt,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.theta / self.ny as f64
    }

    pub fn dt(&self) -> f64 {
        self.theta / self.nt as f64
    }

    /// Number of Y points.
    pub fn columns(&self) -> usize {
        self.values.len() / (self.nt + 1)
    }

    pub fn y(&self, column: usize) -> Vec<f64> {
        y_coords(column, self.ny, self.n - 1, self.dy())
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, column: usize, j: usize) -> f64 {
        self.values[column * (self.nt + 1) + j]
    }

    pub fn column(&self, column: usize) -> &[f64] {
        let nt1 = self.nt + 1;
        &self.values[column * nt1..(column + 1) * nt1]
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.ny != other.ny || self.nt != other.nt || self.theta != other.theta {
            return Err(Error::InvalidArgument("strip fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Result<Self> {
        self.same_grid(other)?;
        Ok(self.like(self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect()))
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        self.like(self.values.iter().map(|a| f(*a)).collect())
    }

    /// Multiplies by `g(T)` row by row.
    pub fn scale_by_t<F: Fn(f64) -> f64>(&self, g: F) -> Self {
        let nt1 = self.nt + 1;
        let dt = self.dt();
        self.like(
            self.values
                .iter()
                .enumerate()
                .map(|(i, v)| v * g((i % nt1) as f64 * dt))
                .collect(),
        )
    }

    /// Max `|value|` over nodes with `T > t_min`.
    pub fn max_abs_above(&self, t_min: f64) -> f64 {
        let nt1 = self.nt + 1;
        let dt = self.dt();
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| (i % nt1) as f64 * dt > t_min)
            .fold(0.0, |a, (_, v)| a.max(v.abs()))
    }

    /// Max `|value|` on the `T = 0` row.
    pub fn max_abs_at_zero(&self) -> f64 {
        (0..self.columns()).fold(0.0, |a, c| a.max(self.get(c, 0).abs()))
    }

    /// `D f = T df/dT`: zero at `T = 0`, central inside, one-sided at `T = theta`.
    pub fn euler(&self) -> Self {
        let nt = self.nt;
        let dt = self.dt();
        let mut out = vec![0.0; self.values.len()];
        out.par_chunks_mut(nt + 1)
            .zip(self.values.par_chunks(nt + 1))
            .for_each(|(o, f)| {
                for j in 1..nt {
                    o[j] = j as f64 * dt * (f[j + 1] - f[j - 1]) / (2.0 * dt);
                }
                o[nt] = self.theta * (3.0 * f[nt] - 4.0 * f[nt - 1] + f[nt - 2]) / (2.0 * dt);
            });
        self.like(out)
    }

    /// `D^2 f - D f = T^2 d^2f/dT^2`, second order up to both ends.
    pub fn euler_second(&self) -> Self {
        let nt = self.nt;
        let mut out = vec![0.0; self.values.len()];
        out.par_chunks_mut(nt + 1)
            .zip(self.values.par_chunks(nt + 1))
            .for_each(|(o, f)| {
                for j in 1..nt {
                    let t = j as f64;
                    o[j] = t * t * (f[j + 1] - 2.0 * f[j] + f[j - 1]);
                }
                let t = nt as f64;
                o[nt] = t * t * (2.0 * f[nt] - 5.0 * f[nt - 1] + 4.0 * f[nt - 2] - f[nt - 3]);
            });
        self.like(out)
    }

    fn spectral(&self) -> Spectral {
        Spectral::new(self.ny, self.n - 1, self.theta)
    }

    /// `lap_Y f` by Fourier multiplication.
    pub fn laplacian_y(&self) -> Self {
        let sp = self.spectral();
        self.like(sp.multiply(&self.values, self.nt, |k| Complex64::new(-k.iter().map(|x| x * x).sum::<f64>(), 0.0)))
    }

    /// `d f / d Y_axis` by Fourier multiplication; the Nyquist mode is dropped.
    pub fn derivative_y(&self, axis: usize) -> Self {
        let sp = self.spectral();
        let nyq = std::f64::consts::PI / self.theta * (self.ny / 2) as f64;
        self.like(sp.multiply(&self.values, self.nt, |k| {
            if (k[axis].abs() - nyq).abs() < 1e-9 * nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k[axis])
            }
        }))
    }
}

fn y_coords(column: usize, ny: usize, m: usize, dy: f64) -> Vec<f64> {
    let mut rem = column;
    let mut y = vec![0.0; m];
    for a in (0..m).rev() {
        y[a] = (rem % ny) as f64 * dy;
        rem /= ny;
    }
    y
}

/// Multi-dimensional FFT over the Y axes of one T-row at a time.
struct Spectral {
    ny: usize,
    m: usize,
    theta: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(ny: usize, m: usize, theta: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            ny,
            m,
            theta,
            fwd: planner.plan_fft_forward(ny),
            inv: planner.plan_fft_inverse(ny),
        }
    }

    fn size(&self) -> usize {
        self.ny.pow(self.m as u32)
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let ny = self.ny;
        let mut line = vec![Complex64::new(0.0, 0.0); ny];
        for a in 0..self.m {
            let stride = ny.pow((self.m - 1 - a) as u32);
            for base in 0..data.len() {
                if (base / stride) % ny != 0 {
                    continue;
                }
                for k in 0..ny {
                    line[k] = data[base + k * stride];
                }
                fft.process(&mut line);
                for k in 0..ny {
                    data[base + k * stride] = line[k];
                }
            }
        }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
        let s = 1.0 / self.size() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Angular wavenumbers of a flat mode index.
    fn wavenumbers(&self, mode: usize) -> Vec<f64> {
        let base = std::f64::consts::PI / self.theta;
        let mut rem = mode;
        let mut k = vec![0.0; self.m];
        for a in (0..self.m).rev() {
            let i = rem % self.ny;
            rem /= self.ny;
            let signed = if i <= self.ny / 2 { i as i64 } else { i as i64 - self.ny as i64 };
            k[a] = base * signed as f64;
        }
        k
    }

    /// Applies the Fourier multiplier `symbol(k)` to every T-row.
    fn multiply<S: Fn(&[f64]) -> Complex64>(&self, values: &[f64], nt: usize, symbol: S) -> Vec<f64> {
        let size = self.size();
        let nt1 = nt + 1;
        let sym: Vec<Complex64> = (0..size).map(|i| symbol(&self.wavenumbers(i))).collect();
        let mut out = vec![0.0; values.len()];
        let mut row = vec![Complex64::new(0.0, 0.0); size];
        for j in 0..nt1 {
            for (c, r) in row.iter_mut().enumerate() {
                *r = Complex64::new(values[c * nt1 + j], 0.0);
            }
            self.forward(&mut row);
            for (r, s) in row.iter_mut().zip(&sym) {
                *r *= s;
            }
            self.inverse(&mut row);
            for (c, r) in row.iter().enumerate() {
                out[c * nt1 + j] = r.re;
            }
        }
        out
    }
}

/// `L0 f = (D+2)(D+1-n) f + T^2 lap_Y f`.
pub fn apply_l0(f: &StripField) -> StripField {
    euler_pair_plus_transverse(f, 1.0 - f.n as f64)
}

/// `L0' f = (D+2)(D-1) f + T^2 lap_Y f = L0 f + (n-2)(D+2) f`.
pub fn apply_l0_prime(f: &StripField) -> StripField {
    euler_pair_plus_transverse(f, -1.0)
}

/// `(D+2)(D+c) f + T^2 lap_Y f`, expanded as `T^2 f_TT + (3+c) T f_T + 2c f`
/// so that the end row `T = theta` keeps second-order accuracy.
fn euler_pair_plus_transverse(f: &StripField, c: f64) -> StripField {
    let tt = f.euler_second();
    let d = f.euler();
    let transverse = f.laplacian_y().scale_by_t(|t| t * t);
    let mut values = f.values.clone();
    for (i, v) in values.iter_mut().enumerate() {
        *v = tt.values[i] + (3.0 + c) * d.values[i] + 2.0 * c * *v + transverse.values[i];
    }
    f.like(values)
}

/// Coefficients of `L1`: the tangential part of `grad d` per Y axis and `lap d`.
#[derive(Clone, Debug)]
pub struct L1Coefficients {
    pub grad_d: Vec<StripField>,
    pub laplacian_d: StripField,
}

/// `L1 f = (4-n) grad~d . grad_Y(T f) + 2T grad~d . grad_Y(D f) + T (D f) lap d`.
pub fn apply_l1(f: &StripField, coef: &L1Coefficients) -> Result<StripField> {
    if coef.grad_d.len() != f.n - 1 {
        return Err(Error::InvalidArgument("L1 needs one gradient coefficient per Y axis".into()));
    }
    let n = f.n as f64;
    let df = f.euler();
    let tf = f.scale_by_t(|t| t);
    let mut out = df.zip_with(&coef.laplacian_d, |a, b| a * b)?.scale_by_t(|t| t);
    for (a, c) in coef.grad_d.iter().enumerate() {
        let first = tf.derivative_y(a).zip_with(c, |x, y| (4.0 - n) * x * y)?;
        let second = df.derivative_y(a).zip_with(c, |x, y| 2.0 * x * y)?.scale_by_t(|t| t);
        out = out.zip_with(&first, |x, y| x + y)?.zip_with(&second, |x, y| x + y)?;
    }
    Ok(out)
}

/// `k~ = int_1^inf F1[k](T sigma) sigma^{-2} d sigma` with `F1[k]` the constant
/// extension beyond `theta`. Returns the field and the largest share of the
/// analytic tail on rows with `T <= theta/2`.
pub fn k_tilde(k: &StripField) -> (StripField, f64) {
    let nt = k.nt;
    let dt = k.dt();
    let theta = k.theta;
    let rows: Vec<(Vec<f64>, f64)> = (0..k.columns())
        .into_par_iter()
        .map(|c| {
            let col = k.column(c);
            let top = col[nt];
            let tails = inverse_square_tails(col, dt);
            let mut out = vec![0.0; nt + 1];
            let mut share: f64 = 0.0;
            out[0] = col[0];
            for (j, o) in out.iter_mut().enumerate().skip(1) {
                let t = j as f64 * dt;
                let tail = top * t / theta;
                let numeric = t * tails[j];
                *o = numeric + tail;
                if t <= 0.5 * theta {
                    let denom = numeric.abs() + tail.abs();
                    if denom > 0.0 {
                        share = share.max(tail.abs() / denom);
                    }
                }
            }
            (out, share)
        })
        .collect();
    let share = rows.iter().fold(0.0f64, |a, (_, s)| a.max(*s));
    let values = rows.into_iter().flat_map(|(v, _)| v).collect();
    (k.like(values), share)
}

/// Solves `(d_TT + lap_Y) h = -rhs` with `h(Y,0) = 0`, `h_T(Y,theta) = 0`.
pub fn solve_strip_poisson(rhs: &StripField) -> Result<StripField> {
    let sp = rhs.spectral();
    let size = sp.size();
    let nt = rhs.nt;
    let nt1 = nt + 1;
    let dt2 = rhs.dt() * rhs.dt();
    // Spectral coefficients, laid out [mode][t].
    let mut hat = vec![Complex64::new(0.0, 0.0); size * nt1];
    let mut row = vec![Complex64::new(0.0, 0.0); size];
    for j in 0..nt1 {
        for (c, r) in row.iter_mut().enumerate() {
            *r = Complex64::new(rhs.values[c * nt1 + j], 0.0);
        }
        sp.forward(&mut row);
        for (c, r) in row.iter().enumerate() {
            hat[c * nt1 + j] = *r;
        }
    }
    hat.par_chunks_mut(nt1).enumerate().try_for_each(|(mode, col)| {
        let k2: f64 = sp.wavenumbers(mode).iter().map(|x| x * x).sum();
        // Unknowns h_1..h_nt; the last row uses the reflected ghost h_{nt+1} = h_{nt-1}.
        let lower: Vec<f64> = (0..nt).map(|i| if i + 1 == nt { 2.0 / dt2 } else { 1.0 / dt2 }).collect();
        let diag = vec![-2.0 / dt2 - k2; nt];
        let upper = vec![1.0 / dt2; nt];
        let mut b: Vec<Complex64> = col[1..].iter().map(|v| -v).collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut b)
            .map_err(|e| Error::StripSolve(format!("mode {mode}: {e}")))?;
        col[0] = Complex64::new(0.0, 0.0);
        col[1..].copy_from_slice(&b);
        Ok::<(), Error>(())
    })?;
    let mut values = vec![0.0; rhs.values.len()];
    for j in 0..nt1 {
        for (c, r) in row.iter_mut().enumerate() {
            *r = hat[c * nt1 + j];
        }
        sp.inverse(&mut row);
        for (c, r) in row.iter().enumerate() {
            values[c * nt1 + j] = r.re;
        }
    }
    Ok(rhs.like(values))
}

/// Intermediate and final fields of the inversion `f0 = G[k]`.
#[derive(Clone, Debug)]
pub struct ModelInverse {
    pub k_tilde: StripField,
    pub h: StripField,
    pub h_tt: StripField,
    pub f0: StripField,
    /// Largest share of the constant-extension tail in `k~` for `T <= theta/2`.
    pub tail_share: f64,
    /// Set when the extension, rather than the data, dominates `k~` in the lower half strip.
    pub tail_warning: bool,
}

/// `f0 = G[k]`, the solution of `L0' f0 = k` with `f0(Y,0) = -k(Y,0)/2`.
pub fn invert_model_operator(k: &StripField) -> Result<ModelInverse> {
    if k.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::StripSolve("k has non-finite values".into()));
    }
    let (kt, tail_share) = k_tilde(k);
    let h = solve_strip_poisson(&kt)?;
    let h_tt = kt.zip_with(&h.laplacian_y(), |a, b| -a - b)?;
    let (nodes, weights) = gauss_legendre_unit(F0_POINTS);
    let nt = k.nt;
    let dt = k.dt();
    let mut f0 = vec![0.0; k.values.len()];
    f0.par_chunks_mut(nt + 1).enumerate().for_each(|(c, out)| {
        let col = h_tt.column(c);
        for (j, o) in out.iter_mut().enumerate() {
            let t = j as f64 * dt;
            *o = nodes
                .iter()
                .zip(&weights)
                .map(|(s, w)| w * s * cubic_interpolate(col, dt, t * s))
                .sum();
        }
    });
    Ok(ModelInverse {
        k_tilde: kt,
        h,
        h_tt,
        f0: k.like(f0),
        tail_share,
        tail_warning: tail_share > 0.5,
    })
}

/// `f = G[k/(n-1)]`, whose trace is `f(Y,0) = k(Y,0)/(2-2n)`.
pub fn assemble_model_solution(k: &StripField) -> Result<StripField> {
    let a = 1.0 / (k.n as f64 - 1.0);
    Ok(invert_model_operator(&k.map(|v| a * v))?.f0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn euler_eigenfunctions() {
        for m in 0..3 {
            let f = StripField::from_fn(3, 1.0, 8, 64, |_, t| t.powi(m)).unwrap();
            let l0 = apply_l0(&f);
            let mf = m as f64;
            for c in 0..f.columns() {
                for j in 0..=64 {
                    let t = f.t(j);
                    let exact = (mf + 2.0) * (mf - 2.0) * t.powi(m);
                    assert!((l0.get(c, j) - exact).abs() < 1e-9, "m={m} j={j}");
                }
            }
        }
        let one = StripField::from_fn(3, 1.0, 8, 16, |_, _| 1.0).unwrap();
        assert!((apply_l0(&one).get(0, 5) + 4.0).abs() < 1e-12);
    }

    #[test]
    fn transverse_part_is_spectral() {
        let theta = 1.0;
        let kap = PI / theta;
        let f = StripField::from_fn(3, theta, 16, 64, |y, t| t * t * (kap * y[0]).sin()).unwrap();
        let l0 = apply_l0(&f);
        for c in 0..f.columns() {
            let y = f.y(c);
            for j in 1..64 {
                let t = f.t(j);
                let exact = (4.0 * (3.0 - 3.0) - kap * kap * t * t) * t * t * (kap * y[0]).sin();
                assert!((l0.get(c, j) - exact).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn l1_reduces_to_last_term() {
        let f = StripField::from_fn(4, 1.0, 8, 32, |y, t| t * t + y[1]).unwrap();
        let zero = StripField::zeros(4, 1.0, 8, 32).unwrap();
        let c = zero.map(|_| 1.5);
        let coef = L1Coefficients {
            grad_d: vec![zero.clone(), zero.clone(), zero],
            laplacian_d: c,
        };
        let out = apply_l1(&f, &coef).unwrap();
        let expected = f.euler().scale_by_t(|t| 1.5 * t);
        for (a, b) in out.values().iter().zip(expected.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_data_inverts_exactly() {
        let k = StripField::from_fn(3, 1.0, 16, 64, |_, _| 1.0).unwrap();
        let inv = invert_model_operator(&k).unwrap();
        for v in inv.k_tilde.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        for v in inv.f0.values() {
            assert!((v + 0.5).abs() < 1e-10);
        }
        let r = apply_l0_prime(&inv.f0);
        assert!(r.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn k_tilde_inverts_d_minus_one() {
        let k = StripField::from_fn(3, 1.0, 8, 128, |y, t| 1.0 + t * t + 0.2 * (PI * y[1]).cos()).unwrap();
        let (kt, _) = k_tilde(&k);
        let resid = kt.euler().zip_with(&kt, |a, b| a - b).unwrap().zip_with(&k, |a, b| a + b).unwrap();
        assert!(resid.max_abs_above(0.0) < 1e-3);
        for c in 0..k.columns() {
            assert_eq!(kt.get(c, 0), k.get(c, 0));
        }
    }
}
