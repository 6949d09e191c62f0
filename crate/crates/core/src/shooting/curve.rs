//! Planar λ-curves: `κ = ⟨x, n⟩/2 + λ` with tangent `(cosθ, sinθ)` and
//! normal `(sinθ, −cosθ)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    bracket_roots, classify, integrate_fixed, integrate_to_event, secant, CurvatureStats, Event, ShootKind,
    ShootResult, TrajectoryPoint,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarCurveState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub s: f64,
}

impl PlanarCurveState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta, s: 0.0 }
    }

    /// Launch perpendicular to the positive x-axis at distance `d`.
    pub fn launch(d: f64) -> Self {
        Self::new(d, 0.0, 0.5 * PI)
    }
}

pub fn curve_curvature(x: f64, y: f64, theta: f64, lambda: f64) -> f64 {
    0.5 * (x * theta.sin() - y * theta.cos()) + lambda
}

fn rhs(lambda: f64) -> impl Fn(&[f64; 3]) -> [f64; 3] {
    move |y: &[f64; 3]| [y[2].cos(), y[2].sin(), curve_curvature(y[0], y[1], y[2], lambda)]
}

/// Same curve family under `x ↦ αx`: `κ = ⟨x, n⟩/(2α²) + λ/α`.
fn rescaled_rhs(lambda: f64, alpha: f64) -> impl Fn(&[f64; 3]) -> [f64; 3] {
    move |y: &[f64; 3]| {
        let (s, c) = y[2].sin_cos();
        [c, s, (y[0] * s - y[1] * c) / (2.0 * alpha * alpha) + lambda / alpha]
    }
}

fn to_states(init: &PlanarCurveState, run: Vec<(f64, [f64; 3])>) -> Vec<PlanarCurveState> {
    run.into_iter()
        .map(|(s, y)| PlanarCurveState {
            x: y[0],
            y: y[1],
            theta: y[2],
            s: init.s + s,
        })
        .collect()
}

/// RK4 trajectory over `length` with uniform steps no longer than `step`.
/// A negative `length` integrates backwards.
pub fn integrate_curve(init: &PlanarCurveState, lambda: f64, length: f64, step: f64) -> Result<Vec<PlanarCurveState>> {
    let run = integrate_fixed(&rhs(lambda), [init.x, init.y, init.theta], length, step)?;
    Ok(to_states(init, run))
}

pub fn integrate_rescaled_curve(
    init: &PlanarCurveState,
    lambda: f64,
    alpha: f64,
    length: f64,
    step: f64,
) -> Result<Vec<PlanarCurveState>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {alpha}")));
    }
    let run = integrate_fixed(&rescaled_rhs(lambda, alpha), [init.x, init.y, init.theta], length, step)?;
    Ok(to_states(init, run))
}

const SECTION_STEP: f64 = 1e-3;
const SECTION_MAX_LEN: f64 = 200.0;

/// Arclength to, and `cos(θ − φ)` at, the first crossing of the ray at
/// polar angle `π/m` by the curve launched at distance `d`. Zero means the
/// curve meets the ray perpendicularly, so reflections in both rays close
/// it with m-fold symmetry.
fn section(lambda: f64, m: usize, d: f64) -> Result<(f64, f64)> {
    let f = move |y: &[f64; 4]| {
        let (s, c) = y[2].sin_cos();
        let r2 = y[0] * y[0] + y[1] * y[1];
        [c, s, curve_curvature(y[0], y[1], y[2], lambda), (y[0] * s - y[1] * c) / r2]
    };
    let target = PI / m as f64;
    let ev = Event {
        g: &|y: &[f64; 4]| y[3] - target,
        direction: 1.0,
    };
    let guard = |y: &[f64; 4]| {
        if y[0] * y[0] + y[1] * y[1] < 1e-12 {
            Err(Error::OpenTrajectory(0.0))
        } else {
            Ok(())
        }
    };
    let run = integrate_to_event(&f, [d, 0.0, 0.5 * PI, 0.0], 0.0, SECTION_STEP, SECTION_MAX_LEN, &ev, &guard)?;
    match run.hit {
        Some((s, y)) => Ok((s, (y[2] - y[3]).cos())),
        None => Err(Error::OpenTrajectory(f64::INFINITY)),
    }
}

/// Section defect `G(d)`; both round circles and m-symmetric closed curves
/// are zeros.
pub fn section_defect(lambda: f64, symmetry_order: usize, d: f64) -> Result<f64> {
    if symmetry_order == 0 || !(d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need symmetry order ≥ 1 and d > 0, got {symmetry_order}, {d}"
        )));
    }
    section(lambda, symmetry_order, d).map(|r| r.1)
}

fn wrap_angle(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Integrates the full 2m-sector curve from a converged launch distance.
fn close_curve(lambda: f64, m: usize, d: f64, iterations: usize, g: f64) -> Result<ShootResult> {
    let (sector, _) = section(lambda, m, d)?;
    let period = 2.0 * m as f64 * sector;
    let step = (1e-3f64).min(period / 4096.0);
    let init = PlanarCurveState::launch(d);
    let states = integrate_curve(&init, lambda, period, step)?;
    let (a, b) = (states[0], *states.last().unwrap());
    let defect = (b.x - a.x).hypot(b.y - a.y) + wrap_angle(b.theta - a.theta).abs();
    let trajectory: Vec<TrajectoryPoint> = states
        .iter()
        .map(|p| TrajectoryPoint {
            s: p.s,
            x: p.x,
            y: p.y,
            theta: p.theta,
            kappa: curve_curvature(p.x, p.y, p.theta, lambda),
        })
        .collect();
    let kappas: Vec<f64> = trajectory[..trajectory.len() - 1].iter().map(|p| p.kappa).collect();
    let stats = CurvatureStats::of(&kappas);
    Ok(ShootResult {
        lambda,
        kind: ShootKind::Curve { symmetry_order: m },
        parameter: d,
        iterations,
        section_defect: g,
        closure_defect: defect,
        classification: classify(defect, &stats),
        curvature_stats: stats,
        trajectory,
    })
}

/// Secant iteration on the launch distance from `guess`, then the full
/// closed curve.
pub fn shoot_closed_curve(lambda: f64, symmetry_order: usize, guess: f64) -> Result<ShootResult> {
    if symmetry_order == 0 || !(guess > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need symmetry order ≥ 1 and a positive guess, got {symmetry_order}, {guess}"
        )));
    }
    let (d, g, it) = secant(
        |d| section(lambda, symmetry_order, d).map(|r| r.1),
        guess,
        guess * (1.0 + 1e-3),
        1e-13,
        60,
    )?;
    close_curve(lambda, symmetry_order, d, it, g)
}

/// All closed curves whose launch distance lies in `[lo, hi]`: grid
/// sign changes of the section defect, bisection, then full closure.
/// Candidates that fail to close are returned with the `Open` class.
pub fn sweep_closed_curves(lambda: f64, symmetry_order: usize, lo: f64, hi: f64, n: usize) -> Result<Vec<ShootResult>> {
    if !(lo > 0.0 && hi > lo) || n == 0 || symmetry_order == 0 {
        return Err(Error::InvalidParameter(format!("bad sweep [{lo}, {hi}] × {n}")));
    }
    let g = move |d: f64| section(lambda, symmetry_order, d).ok().map(|r| r.1);
    let roots = bracket_roots(&g, lo, hi, n);
    if roots.is_empty() {
        return Err(Error::NoBracket { lo, hi });
    }
    roots
        .into_iter()
        .map(|(d, gd)| close_curve(lambda, symmetry_order, d, 0, gd))
        .collect()
}
