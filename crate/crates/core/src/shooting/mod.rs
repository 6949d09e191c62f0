//! λ-curves in the plane and λ-surfaces of revolution by ODE shooting.
//!
//! All integration is fixed-step classical RK4. Events (section crossings)
//! are located by re-stepping from the last accepted state with a shorter
//! step, so the crossing state carries the same fourth-order accuracy.

mod curve;
mod profile;
mod revolve;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use curve::{
    curve_curvature, integrate_curve, integrate_rescaled_curve, section_defect, shoot_closed_curve,
    sweep_closed_curves, PlanarCurveState,
};
pub use profile::{integrate_profile, profile_curvature, shoot_revolution, sweep_torus, ProfileState, RevolutionMode};
pub use revolve::{revolve_closed_profile, revolve_sphere_profile, RevolveOptions};

/// Largest tangent turn allowed in one step.
pub const MAX_TURN_PER_STEP: f64 = std::f64::consts::FRAC_PI_8;

/// Tolerance on the closure defect for a trajectory to count as closed.
pub const CLOSURE_TOL: f64 = 1e-6;

/// Largest curvature variance still classified as a round circle.
pub const CIRCLE_VARIANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Circle,
    ClosedNoncircular,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub variance: f64,
}

impl CurvatureStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        Self {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            variance: values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n,
        }
    }
}

/// A sample of a planar trajectory. For profiles `x` is the distance to
/// the axis and `y` the height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShootKind {
    Curve { symmetry_order: usize },
    SphereLike,
    TorusLike,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShootResult {
    pub lambda: f64,
    pub kind: ShootKind,
    /// Launch distance for curves, pole depth for spheres, equatorial
    /// radius for tori.
    pub parameter: f64,
    pub iterations: usize,
    /// Section defect at the final parameter.
    pub section_defect: f64,
    pub closure_defect: f64,
    pub classification: Classification,
    pub curvature_stats: CurvatureStats,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl ShootResult {
    pub fn is_closed(&self) -> bool {
        self.classification != Classification::Open
    }

    pub fn min_radius(&self) -> f64 {
        self.trajectory.iter().map(|p| p.x.hypot(p.y)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        self.trajectory.iter().map(|p| p.x.hypot(p.y)).fold(0.0, f64::max)
    }

    /// Net tangent turning over the trajectory in units of full turns.
    pub fn winding_number(&self) -> i64 {
        match (self.trajectory.first(), self.trajectory.last()) {
            (Some(a), Some(b)) => ((b.theta - a.theta) / std::f64::consts::TAU).round() as i64,
            _ => 0,
        }
    }
}

fn classify(defect: f64, stats: &CurvatureStats) -> Classification {
    if !(defect <= CLOSURE_TOL) {
        Classification::Open
    } else if stats.variance < CIRCLE_VARIANCE_TOL {
        Classification::Circle
    } else {
        Classification::ClosedNoncircular
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveInvariants {
    pub lambda: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub round_radius: f64,
    pub intersects_round: bool,
    /// `min < r < max` with margin above roundoff.
    pub strict: bool,
    pub winding_number: i64,
    pub curvature_stats: CurvatureStats,
}

/// Whether a closed trajectory meets the round solution of the same λ:
/// the circle `√(λ²+2) − λ` for curves, the sphere `√(λ²+4) − λ` for
/// surfaces of revolution.
pub fn curve_invariants(result: &ShootResult) -> Result<CurveInvariants> {
    if !result.is_closed() {
        return Err(Error::OpenTrajectory(result.closure_defect));
    }
    let lambda = result.lambda;
    let round_radius = match result.kind {
        ShootKind::Curve { .. } => crate::lambda_circle_radius(lambda),
        _ => crate::lambda_sphere_radius(lambda),
    };
    let (lo, hi) = (result.min_radius(), result.max_radius());
    let slack = 1e-9 * round_radius;
    Ok(CurveInvariants {
        lambda,
        min_radius: lo,
        max_radius: hi,
        round_radius,
        intersects_round: lo <= round_radius + slack && round_radius - slack <= hi,
        strict: lo < round_radius - slack && round_radius + slack < hi,
        winding_number: result.winding_number(),
        curvature_stats: result.curvature_stats,
    })
}

pub(crate) fn rk4_step<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], c: f64| -> [f64; N] { std::array::from_fn(|i| a[i] + c * b[i]) };
    let k1 = f(y);
    let k2 = f(&add(y, &k1, 0.5 * h));
    let k3 = f(&add(y, &k2, 0.5 * h));
    let k4 = f(&add(y, &k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Refuses steps that turn the tangent (component 2) by more than
/// [`MAX_TURN_PER_STEP`].
pub(crate) fn check_turn<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> Result<()> {
    let turn = f(y)[2].abs() * h.abs();
    if !(turn <= MAX_TURN_PER_STEP) {
        return Err(Error::StepTooLarge(turn));
    }
    Ok(())
}

/// Fixed-step integration over a signed arclength; returns `(s, y)` samples.
pub(crate) fn integrate_fixed<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    y0: [f64; N],
    length: f64,
    step: f64,
) -> Result<Vec<(f64, [f64; N])>> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    let n = (length.abs() / step).ceil().max(1.0) as usize;
    let h = length / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut y = y0;
    out.push((0.0, y));
    for k in 1..=n {
        check_turn(f, &y, h)?;
        y = rk4_step(f, &y, h);
        out.push((k as f64 * h, y));
    }
    Ok(out)
}

/// Crossing of `g` through zero, with `direction` +1 (rising), −1
/// (falling) or 0 (either).
pub(crate) struct Event<'a, const N: usize> {
    pub g: &'a dyn Fn(&[f64; N]) -> f64,
    pub direction: f64,
}

pub(crate) struct EventRun<const N: usize> {
    pub samples: Vec<(f64, [f64; N])>,
    /// Arclength and state at the event, if it occurred.
    pub hit: Option<(f64, [f64; N])>,
}

/// Integrates forward until `event` fires or `max_len` is reached. The
/// `guard` sees every accepted state and may abort the run.
pub(crate) fn integrate_to_event<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    y0: [f64; N],
    s0: f64,
    step: f64,
    max_len: f64,
    event: &Event<N>,
    guard: &dyn Fn(&[f64; N]) -> Result<()>,
) -> Result<EventRun<N>> {
    let mut samples = vec![(s0, y0)];
    let mut y = y0;
    let mut s = s0;
    let mut g0 = (event.g)(&y);
    while s - s0 < max_len {
        check_turn(f, &y, step)?;
        let y1 = rk4_step(f, &y, step);
        guard(&y1)?;
        let g1 = (event.g)(&y1);
        let crosses = g0.signum() != g1.signum() && g0 != 0.0;
        let right_way = event.direction == 0.0 || (g1 - g0) * event.direction > 0.0;
        if crosses && right_way {
            let (hs, ys) = locate(f, &y, step, g0, g1, event.g);
            samples.push((s + hs, ys));
            return Ok(EventRun {
                samples,
                hit: Some((s + hs, ys)),
            });
        }
        y = y1;
        s += step;
        g0 = g1;
        samples.push((s, y));
    }
    Ok(EventRun { samples, hit: None })
}

/// Sub-step length in `(0, h]` where the event function vanishes
/// (Illinois false position on re-integrated states).
fn locate<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    y: &[f64; N],
    h: f64,
    g0: f64,
    g1: f64,
    g: &dyn Fn(&[f64; N]) -> f64,
) -> (f64, [f64; N]) {
    let (mut a, mut ga) = (0.0, g0);
    let (mut b, mut gb) = (h, g1);
    let mut side = 0;
    let mut best = (h, rk4_step(f, y, h));
    for _ in 0..200 {
        let c = (a * gb - b * ga) / (gb - ga);
        let c = if c > a && c < b { c } else { 0.5 * (a + b) };
        let yc = rk4_step(f, y, c);
        let gc = g(&yc);
        best = (c, yc);
        if gc == 0.0 || (b - a) <= 1e-15 * h {
            break;
        }
        if gc.signum() == ga.signum() {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            gb = gc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        if gc.abs() < 1e-15 {
            break;
        }
    }
    best
}

/// Secant iteration on a scalar defect; returns `(root, defect, iterations)`.
pub(crate) fn secant(
    mut f: impl FnMut(f64) -> Result<f64>,
    x0: f64,
    x1: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, f64, usize)> {
    let (mut a, mut fa) = (x0, f(x0)?);
    if fa.abs() <= tol {
        return Ok((a, fa, 0));
    }
    let (mut b, mut fb) = (x1, f(x1)?);
    for it in 1..=max_iter {
        if fb.abs() <= tol {
            return Ok((b, fb, it));
        }
        if fb == fa {
            return Err(Error::NewtonDivergence(format!("flat secant at {b}")));
        }
        let c = b - fb * (b - a) / (fb - fa);
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::NewtonDivergence(format!("secant left the domain at step {it}: {c}")));
        }
        a = b;
        fa = fb;
        b = c;
        fb = f(b)?;
    }
    if fb.abs() <= tol {
        return Ok((b, fb, max_iter));
    }
    Err(Error::NewtonDivergence(format!(
        "no convergence after {max_iter} steps, defect {fb:.3e}"
    )))
}

/// Grid sign changes of `f` on `[lo, hi]` refined by bisection.
pub(crate) fn bracket_roots(f: &(dyn Fn(f64) -> Option<f64> + Sync), lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    use rayon::prelude::*;
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vals: Vec<Option<f64>> = xs.par_iter().map(|&x| f(x)).collect();
    let pairs: Vec<(f64, f64, f64, f64)> = (0..n)
        .filter_map(|i| match (vals[i], vals[i + 1]) {
            (Some(a), Some(b)) if a.signum() != b.signum() => Some((xs[i], a, xs[i + 1], b)),
            _ => None,
        })
        .collect();
    pairs
        .par_iter()
        .filter_map(|&(mut a, mut fa, mut b, _)| {
            for _ in 0..80 {
                let c = 0.5 * (a + b);
                let fc = f(c)?;
                if fc == 0.0 {
                    return Some((c, 0.0));
                }
                if fc.signum() == fa.signum() {
                    a = c;
                    fa = fc;
                } else {
                    b = c;
                }
                if b - a <= 4.0 * f64::EPSILON * b.abs() {
                    break;
                }
            }
            let c = 0.5 * (a + b);
            f(c).map(|fc| (c, fc))
        })
        .collect()
}
