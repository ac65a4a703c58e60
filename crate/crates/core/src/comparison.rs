//! Barrier functions and maximum-principle checks run against computed fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convergence::{loglog_slope, shell_maxima};
use crate::error::{Error, Result};
use crate::fuchsian::{apply_mw, FuchsianContext};
use crate::geometry::{DistanceData, DomainDescriptor};
use crate::grid::{Quantity, ScalarField};
use crate::radial::{sandwich_bounds, RadialProfile};

/// Outcome of one named check. `worst_margin` is the smallest signed slack
/// (negative means violated); `flagged` lists positions of the first violations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub fitted_slopes: Vec<f64>,
    pub flagged: Vec<Vec<f64>>,
    pub passed: bool,
}

const MAX_FLAGGED: usize = 16;

impl CheckReport {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            samples: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            fitted_slopes: Vec::new(),
            flagged: Vec::new(),
            passed: true,
        }
    }

    /// Records one sample; a negative margin is a violation.
    pub fn record(&mut self, margin: f64, position: impl FnOnce() -> Vec<f64>) {
        self.samples += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if margin < 0.0 {
            self.violations += 1;
            self.passed = false;
            if self.flagged.len() < MAX_FLAGGED {
                self.flagged.push(position());
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierKind {
    SphereSandwich,
    W0PlusAd,
    EpsilonSingular,
    AlphaSupersolution,
}

/// Constants of a comparison function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierSpec {
    pub kind: BarrierKind,
    /// Coefficient of the linear correction `A d`.
    pub linear_coefficient: f64,
    /// Shift `B` of the singular barrier `d^-2 + B d^-1`.
    pub singular_shift: f64,
    /// Weight `epsilon` of the singular barrier.
    pub singular_weight: f64,
    /// Source size `a` bounded by the power supersolution.
    pub source_coefficient: f64,
    /// Exponent of the power supersolution `d^alpha`, in (0, 1).
    pub exponent: f64,
    /// Collar width.
    pub collar_width: f64,
}

impl Default for BarrierSpec {
    fn default() -> Self {
        Self {
            kind: BarrierKind::SphereSandwich,
            linear_coefficient: 1.0,
            singular_shift: 1.0,
            singular_weight: 1.0,
            source_coefficient: 1.0,
            exponent: 0.5,
            collar_width: 0.0,
        }
    }
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("linear_coefficient", self.linear_coefficient),
            ("singular_shift", self.singular_shift),
            ("source_coefficient", self.source_coefficient),
        ];
        for (what, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.singular_weight >= 0.0) {
            return Err(Error::InvalidArgument("singular_weight must be nonnegative".into()));
        }
        if !(self.exponent > 0.0 && self.exponent < 1.0) {
            return Err(Error::InvalidArgument(format!("exponent must lie in (0, 1), got {}", self.exponent)));
        }
        if !(self.collar_width >= 0.0) {
            return Err(Error::InvalidArgument("collar_width must be nonnegative".into()));
        }
        Ok(())
    }

    /// Sign conditions of this barrier at one point of the collar.
    /// `quadratic_bound` is the constant `c` in `|M_w(w)| <= c d`.
    pub fn sign_condition(&self, dd: &DistanceData, n: usize, quadratic_bound: f64) -> bool {
        let nf = n as f64;
        let (d, lap) = (dd.d, dd.laplacian_d);
        if !lap.is_finite() {
            return false;
        }
        match self.kind {
            BarrierKind::SphereSandwich => true,
            BarrierKind::W0PlusAd => {
                2.0 * (2.0 - nf) + d * lap <= 0.0 && (2.0 - nf) * self.linear_coefficient + quadratic_bound <= 0.0
            }
            BarrierKind::EpsilonSingular => {
                nf * self.singular_shift + (2.0 + self.singular_shift * d) * lap >= 0.0
            }
            BarrierKind::AlphaSupersolution => {
                let a = self.exponent;
                let bracket = (a + 2.0) * (nf - 1.0 - a);
                self.linear_coefficient > self.source_coefficient / bracket && bracket - a * d * lap >= 0.0
            }
        }
    }
}

/// `(u_e, u_i)` sandwich at every node with `0 < d <= r0`, relative tolerance `tol`.
pub fn sphere_sandwich_check(u: &ScalarField, tol: f64) -> Result<CheckReport> {
    if u.quantity() != Quantity::U {
        return Err(Error::InvalidArgument("sandwich check expects a u-field".into()));
    }
    let grid = u.grid();
    let (n, r0) = (grid.dim(), grid.domain().r0());
    let mut report = CheckReport::new("sphere-sandwich");
    for (id, val) in u.iter_defined() {
        let d = grid.distance_data(id).map_or(0.0, |g| g.d);
        if d > 0.0 && d <= r0 {
            report.record(sandwich_margin(n, r0, d, val, tol), || grid.position(id));
        }
    }
    Ok(report)
}

/// The same sandwich along a radial profile.
pub fn radial_sandwich_check(profile: &RadialProfile, tol: f64) -> CheckReport {
    let r0 = profile.geometry.r0();
    let mut report = CheckReport::new("radial-sphere-sandwich");
    for (&r, &v) in profile.r.iter().zip(&profile.v) {
        let d = profile.geometry.distance(r);
        if d > 0.0 && d <= r0 {
            let u = v.powf(-(profile.n as f64 - 2.0) / 2.0);
            report.record(sandwich_margin(profile.n, r0, d, u, tol), || vec![r]);
        }
    }
    report
}

fn sandwich_margin(n: usize, r0: f64, d: f64, u: f64, tol: f64) -> f64 {
    let (lo, hi) = sandwich_bounds(n, r0, d);
    ((u - lo) / lo).min((hi - u) / hi) + tol
}

/// Value of `epsilon (d^-2 + B d^-1)` and its exact image under `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularBarrier {
    pub value: f64,
    pub l_image: f64,
}

pub fn singular_barrier_values(dd: &DistanceData, barrier: &BarrierSpec, n: usize) -> Result<SingularBarrier> {
    if !(dd.d > 0.0) {
        return Err(Error::OutOfDomain {
            what: "d",
            value: dd.d,
            reason: "the singular barrier has a pole at the boundary".into(),
        });
    }
    let (d, b, eps) = (dd.d, barrier.singular_shift, barrier.singular_weight);
    Ok(SingularBarrier {
        value: eps * (1.0 / (d * d) + b / d),
        l_image: eps * l_singular_closed(n, d, dd.laplacian_d, b),
    })
}

fn l_distance_closed(n: usize, d: f64, lap: f64) -> f64 {
    3.0 * (2.0 - n as f64) * d + d * d * lap
}

fn l_power_closed(n: usize, d: f64, lap: f64, a: f64) -> f64 {
    -d.powf(a) * ((a + 2.0) * (n as f64 - 1.0 - a) - a * d * lap)
}

fn l_singular_closed(n: usize, d: f64, lap: f64, b: f64) -> f64 {
    -(n as f64 * b + 2.0 * lap) / d - b * lap
}

/// `L` applied to `g(d)` by the chain rule from the exact derivatives of `d`:
/// `grad g = g' grad d`, `lap g = g'' |grad d|^2 + g' lap d`.
fn l_of_profile(n: usize, dd: &DistanceData, g: f64, g1: f64, g2: f64) -> f64 {
    let grad2: f64 = dd.grad_d.iter().map(|c| c * c).sum();
    let d = dd.d;
    d * d * (g2 * grad2 + g1 * dd.laplacian_d) + (4.0 - n as f64) * d * g1 * grad2 + (2.0 - 2.0 * n as f64) * g
}

/// Seeded points with `d > min_d` and finite `lap d`.
pub fn sample_points(domain: &DomainDescriptor, count: usize, min_d: f64, max_d: f64, seed: u64) -> Result<Vec<DistanceData>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = domain.bounding_box();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(Error::InvalidArgument(format!(
                "could not place {count} samples with {min_d} < d < {max_d}"
            )));
        }
        let x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
        if !domain.contains(&x) {
            continue;
        }
        let dd = domain.signed_distance(&x)?;
        if dd.d > min_d && dd.d < max_d && dd.laplacian_d.is_finite() {
            out.push(dd);
        }
    }
    Ok(out)
}

/// Chain-rule images of `d`, `d^alpha` and `d^-2 + B d^-1` under `L`
/// against their closed forms, to `tol * max(1, |closed form|)`.
pub fn closed_form_identity_check(
    domain: &DomainDescriptor,
    samples: usize,
    seed: u64,
    exponent: f64,
    singular_shift: f64,
    tol: f64,
) -> Result<Vec<CheckReport>> {
    let n = domain.dim();
    let points = sample_points(domain, samples, 1e-3 * domain.r0(), f64::INFINITY, seed)?;
    let mut reports = vec![
        CheckReport::new("identity-l-distance"),
        CheckReport::new("identity-l-power"),
        CheckReport::new("identity-l-singular"),
    ];
    let (a, b) = (exponent, singular_shift);
    for dd in &points {
        let (d, lap) = (dd.d, dd.laplacian_d);
        let pairs = [
            (l_of_profile(n, dd, d, 1.0, 0.0), l_distance_closed(n, d, lap)),
            (
                l_of_profile(n, dd, d.powf(a), a * d.powf(a - 1.0), a * (a - 1.0) * d.powf(a - 2.0)),
                l_power_closed(n, d, lap, a),
            ),
            (
                l_of_profile(
                    n,
                    dd,
                    d.powi(-2) + b / d,
                    -2.0 * d.powi(-3) - b * d.powi(-2),
                    6.0 * d.powi(-4) + 2.0 * b * d.powi(-3),
                ),
                l_singular_closed(n, d, lap, b),
            ),
        ];
        for (report, (chain, closed)) in reports.iter_mut().zip(pairs) {
            let margin = tol * closed.abs().max(1.0) - (chain - closed).abs();
            report.record(margin, || dd.nearest_point.clone());
        }
    }
    Ok(reports)
}

/// Largest collar width among `{r0/2, r0/4, r0/8}` on which every barrier's
/// sign condition holds at all seeded samples; `None` if none qualifies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollarSelection {
    pub delta: Option<f64>,
    pub candidates: Vec<(f64, bool)>,
}

pub fn select_collar_width(
    domain: &DomainDescriptor,
    barriers: &[BarrierSpec],
    quadratic_bound: f64,
    samples: usize,
    seed: u64,
) -> Result<CollarSelection> {
    let n = domain.dim();
    let r0 = domain.r0();
    let points = sample_points(domain, samples, 0.0, 0.5 * r0, seed)?;
    let mut selection = CollarSelection {
        delta: None,
        candidates: Vec::new(),
    };
    for delta in [0.5 * r0, 0.25 * r0, 0.125 * r0] {
        let ok = points
            .iter()
            .filter(|dd| dd.d < delta)
            .all(|dd| barriers.iter().all(|s| s.sign_condition(dd, n, quadratic_bound)));
        selection.candidates.push((delta, ok));
        if ok && selection.delta.is_none() {
            selection.delta = Some(delta);
        }
    }
    Ok(selection)
}

/// `1.5 max |M_w(w)| / d` over evaluated nodes of the collar `0 < d < delta`.
pub fn measure_quadratic_bound(ctx: &FuchsianContext, w: &ScalarField) -> Result<f64> {
    let mw = apply_mw(ctx, w, w)?;
    let grid = w.grid();
    let worst = mw
        .field
        .iter_defined()
        .filter(|(_, v)| v.is_finite())
        .filter_map(|(id, v)| {
            let d = grid.distance_data(id)?.d;
            (d > 0.0 && d < ctx.delta).then(|| v.abs() / d)
        })
        .fold(0.0, f64::max);
    Ok(1.5 * worst)
}

/// Checks `|w + H(Q)| <= A d + slack` on `0 < d <= delta` and fits the slope of
/// `level * max |w + H(Q)| / d` over bands of half a spacing around each level.
pub fn verify_tilde_w_bound(
    w: &ScalarField,
    linear_coefficient: f64,
    delta: f64,
    slack: f64,
    levels: &[f64],
    min_slope: f64,
) -> Result<CheckReport> {
    if w.quantity() != Quantity::W {
        return Err(Error::InvalidArgument("tilde-w bound expects a w-field".into()));
    }
    let grid = w.grid();
    let mut report = CheckReport::new("tilde-w-bound");
    for (id, val) in w.iter_defined() {
        let Some(dd) = grid.distance_data(id) else { continue };
        if dd.d > 0.0 && dd.d <= delta && val.is_finite() {
            let margin = linear_coefficient * dd.d + slack - (val + dd.mean_curvature).abs();
            report.record(margin, || grid.position(id));
        }
    }
    // Bands are a spacing wide, so the raw maximum is biased toward the outer
    // edge; the ratio to `d` rescaled by the level removes that bias.
    let ratios = shell_maxima(grid, levels, 0.5 * grid.spacing(), |id, dd| {
        Some((w.value(id) + dd.mean_curvature).abs() / dd.d)
    })?;
    let maxima: Vec<f64> = ratios.iter().zip(levels).map(|(r, l)| r * l).collect();
    finish_slope(&mut report, levels, &maxima, min_slope)?;
    Ok(report)
}

/// Slope of `max |w + H|` against `d` along a radial profile, with `H` the
/// mean curvature of the nearest boundary sphere.
pub fn radial_tilde_w_slope(profile: &RadialProfile, levels: &[f64], min_slope: f64) -> Result<CheckReport> {
    let mut report = CheckReport::new("radial-tilde-w-slope");
    let w = profile.w();
    let mut maxima = vec![f64::NEG_INFINITY; levels.len()];
    for (k, level) in levels.iter().enumerate() {
        for (&r, wv) in profile.r.iter().zip(&w) {
            let d = profile.geometry.distance(r);
            if (d - level).abs() <= 0.5 * profile.spacing && wv.is_finite() {
                let e = (wv + profile.geometry.nearest_mean_curvature(r)).abs() / d * level;
                maxima[k] = maxima[k].max(e);
                report.samples += 1;
            }
        }
        if maxima[k] == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!("no radial node samples d = {level}")));
        }
    }
    finish_slope(&mut report, levels, &maxima, min_slope)?;
    Ok(report)
}

fn finish_slope(report: &mut CheckReport, levels: &[f64], maxima: &[f64], min_slope: f64) -> Result<()> {
    let slope = loglog_slope(levels, maxima)?;
    report.fitted_slopes.push(slope);
    report.passed &= slope >= min_slope;
    report.worst_margin = report.worst_margin.min(slope - min_slope);
    Ok(())
}

/// Discrete minimum-principle witness for
/// `z = eps (d^-2 + B d^-1) + (-H + A d) - w` on the collar `0 < d < delta`:
/// a node strictly inside the collar must not be a local minimum with `z`
/// below both zero and the minimum over the slice `d ~ delta`.
pub fn maximum_principle_witness(w: &ScalarField, barrier: &BarrierSpec) -> Result<CheckReport> {
    barrier.validate()?;
    let grid = w.grid();
    let delta = barrier.collar_width;
    let half = 0.5 * grid.spacing();
    if delta <= half {
        return Err(Error::InvalidArgument(format!("collar width {delta} is not resolved by the grid")));
    }
    let z = |id: usize| -> Option<f64> {
        let dd = grid.distance_data(id)?;
        let val = w.value(id);
        (dd.d > 0.0 && val.is_finite()).then(|| {
            let d = dd.d;
            barrier.singular_weight * (1.0 / (d * d) + barrier.singular_shift / d) - dd.mean_curvature
                + barrier.linear_coefficient * d
                - val
        })
    };
    let slice_min = (0..grid.len())
        .filter(|&id| grid.distance_data(id).is_some_and(|dd| (dd.d - delta).abs() <= half))
        .filter_map(z)
        .fold(f64::INFINITY, f64::min);
    if slice_min == f64::INFINITY {
        return Err(Error::InvalidArgument(format!("no node samples the slice d = {delta}")));
    }
    let floor = slice_min.min(0.0);
    let mut report = CheckReport::new("maximum-principle-witness");
    for id in 0..grid.len() {
        let Some(dd) = grid.distance_data(id) else { continue };
        if !(dd.d > 0.0 && dd.d < delta - half) {
            continue;
        }
        let Some(zc) = z(id) else { continue };
        let local_min = grid.neighbors(id).flatten().filter_map(z).all(|zn| zc <= zn);
        let margin = if local_min { zc - floor } else { f64::INFINITY };
        report.record(margin, || grid.position(id));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MaskedGrid;
    use std::sync::Arc;

    fn ball_dd(d: f64) -> DistanceData {
        DomainDescriptor::ball(vec![0.0; 3], 1.0)
            .unwrap()
            .signed_distance(&[1.0 - d, 0.0, 0.0])
            .unwrap()
    }

    #[test]
    fn singular_barrier_example() {
        let barrier = BarrierSpec {
            kind: BarrierKind::EpsilonSingular,
            singular_shift: 2.0,
            ..Default::default()
        };
        let sb = singular_barrier_values(&ball_dd(0.1), &barrier, 3).unwrap();
        assert!((sb.l_image + 11.111_111_111).abs() < 1e-6, "{}", sb.l_image);
        assert!((sb.value - 120.0).abs() < 1e-9);
        let zero = BarrierSpec {
            singular_weight: 0.0,
            ..barrier
        };
        assert_eq!(singular_barrier_values(&ball_dd(0.1), &zero, 3).unwrap().value, 0.0);
        let mut boundary = ball_dd(0.1);
        boundary.d = 0.0;
        assert!(singular_barrier_values(&boundary, &barrier, 3).is_err());
    }

    #[test]
    fn singular_image_is_nonpositive_where_the_condition_holds() {
        let barrier = BarrierSpec {
            kind: BarrierKind::EpsilonSingular,
            singular_shift: 8.0,
            ..Default::default()
        };
        for k in 1..50 {
            let dd = ball_dd(0.01 * k as f64);
            assert!(barrier.sign_condition(&dd, 3, 0.0));
            assert!(singular_barrier_values(&dd, &barrier, 3).unwrap().l_image <= 0.0);
        }
    }

    #[test]
    fn collar_selection_shrinks_for_small_shift() {
        let dom = DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap();
        let barrier = BarrierSpec {
            kind: BarrierKind::EpsilonSingular,
            singular_shift: 2.0,
            ..Default::default()
        };
        let sel = select_collar_width(&dom, &[barrier], 0.0, 2000, 0).unwrap();
        // 3B(1-d) >= 4 + 2Bd holds for d <= 0.2 when B = 2.
        assert_eq!(sel.delta, Some(0.125));
        let big = BarrierSpec { singular_shift: 8.0, ..barrier };
        assert_eq!(select_collar_width(&dom, &[big], 0.0, 2000, 0).unwrap().delta, Some(0.5));
    }

    #[test]
    fn exact_ball_field_satisfies_the_sandwich_and_corruption_is_flagged() {
        let dom = DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap();
        let g = Arc::new(MaskedGrid::build(&dom, 33, 0.0625, true).unwrap());
        let mut u = ScalarField::from_fn(g.clone(), Quantity::U, |x, _| {
            (1.0 - x.iter().map(|c| c * c).sum::<f64>()).powf(-0.5)
        });
        let rep = sphere_sandwich_check(&u, 1e-12).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.samples > 100);
        let id = g.node_at(&[8, 0, 0]).unwrap();
        u.values_mut()[id] *= 0.5;
        let rep = sphere_sandwich_check(&u, 1e-12).unwrap();
        assert_eq!(rep.violations, 1);
        assert_eq!(rep.flagged[0], g.position(id));
    }

    #[test]
    fn identities_hold_on_the_ball() {
        let dom = DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap();
        let reps = closed_form_identity_check(&dom, 200, 7, 0.5, 2.0, 1e-10).unwrap();
        assert!(reps.iter().all(|r| r.passed && r.samples == 200));
    }

    #[test]
    fn exact_ball_w_has_no_negative_interior_minimum() {
        let dom = DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap();
        let g = Arc::new(MaskedGrid::build(&dom, 33, 0.0625, true).unwrap());
        let w = ScalarField::from_fn(g, Quantity::W, |_, _| -1.0);
        let barrier = BarrierSpec {
            kind: BarrierKind::EpsilonSingular,
            singular_weight: 1e-3,
            singular_shift: 8.0,
            linear_coefficient: 1.0,
            collar_width: 0.25,
            ..Default::default()
        };
        let rep = maximum_principle_witness(&w, &barrier).unwrap();
        assert!(rep.passed);
        let g = w.grid().clone();
        let tilted = ScalarField::from_fn(g, Quantity::W, |_, dd| -1.0 + 0.5 * dd.d);
        let tw = verify_tilde_w_bound(&tilted, 0.6, 0.25, 1e-12, &[0.0625, 0.125, 0.25], 0.95).unwrap();
        assert!(tw.passed, "{tw:?}");
        assert!((tw.fitted_slopes[0] - 1.0).abs() < 0.05);
        let tight = verify_tilde_w_bound(&tilted, 0.4, 0.25, 1e-12, &[0.0625, 0.125, 0.25], 0.95).unwrap();
        assert!(tight.violations > 0);
    }
}
