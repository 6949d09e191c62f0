//! Profiles of λ-surfaces of revolution about the z-axis.
//!
//! With `ρ` the distance to the axis and `θ` the profile tangent angle,
//! `θ' = (ρ sinθ − z cosθ)/2 + λ − sinθ/ρ`. The last term is singular on
//! the axis; regular starts there use a series in arclength.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::revolve::{revolve_closed_profile, revolve_sphere_profile, RevolveOptions};
use super::{
    bracket_roots, classify, integrate_fixed, integrate_to_event, secant, CurvatureStats, Event, ShootKind,
    ShootResult, TrajectoryPoint,
};
use crate::mesh::TriMesh;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    pub rho: f64,
    pub z: f64,
    pub theta: f64,
    pub s: f64,
}

impl ProfileState {
    pub fn new(rho: f64, z: f64, theta: f64) -> Self {
        Self { rho, z, theta, s: 0.0 }
    }

    /// Regular start on the axis at height `z0`, heading away from it.
    pub fn on_axis(z0: f64) -> Self {
        Self::new(0.0, z0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevolutionMode {
    SphereLike,
    TorusLike,
}

pub fn profile_curvature(rho: f64, z: f64, theta: f64, lambda: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    0.5 * (rho * s - z * c) + lambda - s / rho
}

fn rhs(lambda: f64) -> impl Fn(&[f64; 3]) -> [f64; 3] {
    move |y: &[f64; 3]| [y[2].cos(), y[2].sin(), profile_curvature(y[0], y[1], y[2], lambda)]
}

/// Series coefficients `θ = a s + b s³` of the regular start at height `z0`.
fn axis_coefficients(z0: f64, lambda: f64) -> (f64, f64) {
    let a = 0.5 * (lambda - 0.5 * z0);
    (a, (a + z0 * a * a) / 16.0)
}

fn axis_series(z0: f64, lambda: f64, s: f64) -> [f64; 3] {
    let (a, b) = axis_coefficients(z0, lambda);
    let s2 = s * s;
    [
        s - a * a * s * s2 / 6.0,
        z0 + 0.5 * a * s2 + (b - a * a * a / 6.0) * s2 * s2 / 4.0,
        a * s + b * s * s2,
    ]
}

fn pinch_guard(y: &[f64; 3]) -> Result<()> {
    if y[0] <= 0.0 {
        Err(Error::Pinch(y[1]))
    } else {
        Ok(())
    }
}

/// Result of [`integrate_profile`]; `reached_axis` marks a run truncated
/// where `ρ` fell to three steps from the axis.
#[derive(Debug, Clone)]
pub struct ProfileRun {
    pub states: Vec<ProfileState>,
    pub reached_axis: bool,
}

/// RK4 profile over `length`. Starts on the axis (`ρ = 0`) must have
/// `θ = 0` and take their first step from the series.
pub fn integrate_profile(init: &ProfileState, lambda: f64, length: f64, step: f64) -> Result<ProfileRun> {
    if !(step > 0.0 && length > 0.0) {
        return Err(Error::InvalidParameter("step and length must be positive".into()));
    }
    let (y0, s0) = if init.rho == 0.0 {
        if init.theta != 0.0 {
            return Err(Error::InvalidParameter("axis starts need θ = 0".into()));
        }
        (axis_series(init.z, lambda, step), step)
    } else if init.rho < 0.0 {
        return Err(Error::InvalidParameter("ρ must be non-negative".into()));
    } else {
        ([init.rho, init.z, init.theta], 0.0)
    };
    let stop = 3.0 * step;
    let ev = Event {
        g: &move |y: &[f64; 3]| if y[2].cos() < 0.0 { y[0] - stop } else { 1.0 },
        direction: -1.0,
    };
    let run = integrate_to_event(&rhs(lambda), y0, s0, step, length - s0, &ev, &pinch_guard)?;
    let mut states = Vec::with_capacity(run.samples.len() + 1);
    if init.rho == 0.0 {
        states.push(*init);
    }
    states.extend(run.samples.iter().map(|(s, y)| ProfileState {
        rho: y[0],
        z: y[1],
        theta: y[2],
        s: init.s + s,
    }));
    Ok(ProfileRun {
        states,
        reached_axis: run.hit.is_some(),
    })
}

/// Mismatch between `π − θ` at a state near the axis and the regular
/// branch through the axis point it is heading to; also returns that
/// point's height and arclength distance.
fn top_pole_defect(state: &ProfileState, lambda: f64) -> (f64, f64, f64) {
    let rho = state.rho;
    let mut sigma = rho;
    let mut z_top = state.z;
    for _ in 0..8 {
        let a = 0.5 * (0.5 * z_top + lambda);
        let b = (a - z_top * a * a) / 16.0;
        for _ in 0..4 {
            sigma = rho + a * a * sigma.powi(3) / 6.0;
        }
        z_top = state.z + 0.5 * a * sigma * sigma + (b - a * a * a / 6.0) * sigma.powi(4) / 4.0;
    }
    let a = 0.5 * (0.5 * z_top + lambda);
    let b = (a - z_top * a * a) / 16.0;
    let psi = PI - state.theta;
    ((psi - (a * sigma + b * sigma.powi(3))).abs(), z_top, sigma)
}

fn step_for(period: f64) -> f64 {
    (1e-3f64).min(period / 4096.0)
}

/// Height at the first vertical tangent of the profile from pole depth `d`.
fn sphere_section(lambda: f64, d: f64) -> Result<f64> {
    let step = step_for(PI * d);
    let ev = Event {
        g: &|y: &[f64; 3]| y[2] - 0.5 * PI,
        direction: 1.0,
    };
    let y0 = axis_series(-d, lambda, step);
    let run = integrate_to_event(&rhs(lambda), y0, step, step, 20.0 * d.max(1.0), &ev, &pinch_guard)?;
    run.hit.map(|(_, y)| y[1]).ok_or(Error::OpenTrajectory(f64::INFINITY))
}

/// Arclength to, and `cosθ` at, the downward crossing of `z = 0` by the
/// profile launched upward at `(ρ0, 0)`.
fn torus_section(lambda: f64, rho0: f64) -> Result<(f64, f64)> {
    let ev = Event {
        g: &|y: &[f64; 3]| y[1],
        direction: -1.0,
    };
    let run = integrate_to_event(&rhs(lambda), [rho0, 0.0, 0.5 * PI], 0.0, 1e-3, 60.0, &ev, &pinch_guard)?;
    run.hit.map(|(s, y)| (s, y[2].cos())).ok_or(Error::OpenTrajectory(f64::INFINITY))
}

fn points(states: &[ProfileState], lambda: f64, pole_kappa: f64) -> Vec<TrajectoryPoint> {
    states
        .iter()
        .map(|p| TrajectoryPoint {
            s: p.s,
            x: p.rho,
            y: p.z,
            theta: p.theta,
            kappa: if p.rho == 0.0 { pole_kappa } else { profile_curvature(p.rho, p.z, p.theta, lambda) },
        })
        .collect()
}

fn finish_sphere(lambda: f64, d: f64, iterations: usize, g: f64, opts: &RevolveOptions) -> Result<(ShootResult, TriMesh)> {
    let step = step_for(PI * d);
    let run = integrate_profile(&ProfileState::on_axis(-d), lambda, 10.0 * PI * d.max(1.0), step)?;
    if !run.reached_axis {
        return Err(Error::OpenTrajectory(f64::INFINITY));
    }
    let last = *run.states.last().unwrap();
    let (defect, z_top, sigma) = top_pole_defect(&last, lambda);
    let mut states = run.states;
    states.push(ProfileState {
        rho: 0.0,
        z: z_top,
        theta: PI,
        s: last.s + sigma,
    });
    let (a0, _) = axis_coefficients(-d, lambda);
    let a1 = 0.5 * (0.5 * z_top + lambda);
    let mut trajectory = points(&states, lambda, a0);
    trajectory.last_mut().unwrap().kappa = a1;
    let kappas: Vec<f64> = trajectory.iter().map(|p| p.kappa).collect();
    let stats = CurvatureStats::of(&kappas);
    let result = ShootResult {
        lambda,
        kind: ShootKind::SphereLike,
        parameter: d,
        iterations,
        section_defect: g,
        closure_defect: defect,
        classification: classify(defect, &stats),
        curvature_stats: stats,
        trajectory,
    };
    if !result.is_closed() {
        return Err(Error::OpenTrajectory(defect));
    }
    let mesh = revolve_sphere_profile(&result.trajectory, opts)?;
    Ok((result, mesh))
}

fn finish_torus(lambda: f64, rho0: f64, iterations: usize, g: f64, opts: &RevolveOptions) -> Result<(ShootResult, TriMesh)> {
    let (half, _) = torus_section(lambda, rho0)?;
    let period = 2.0 * half;
    let run = integrate_fixed(&rhs(lambda), [rho0, 0.0, 0.5 * PI], period, step_for(period))?;
    if let Some((_, y)) = run.iter().find(|(_, y)| y[0] <= 0.0) {
        return Err(Error::Pinch(y[1]));
    }
    let (a, b) = (run[0].1, run.last().unwrap().1);
    let turn = (b[2] - a[2] - 2.0 * PI).abs();
    let defect = (b[0] - a[0]).hypot(b[1] - a[1]) + turn;
    let states: Vec<ProfileState> = run
        .iter()
        .map(|(s, y)| ProfileState {
            rho: y[0],
            z: y[1],
            theta: y[2],
            s: *s,
        })
        .collect();
    let trajectory = points(&states, lambda, 0.0);
    let kappas: Vec<f64> = trajectory[..trajectory.len() - 1].iter().map(|p| p.kappa).collect();
    let stats = CurvatureStats::of(&kappas);
    let result = ShootResult {
        lambda,
        kind: ShootKind::TorusLike,
        parameter: rho0,
        iterations,
        section_defect: g,
        closure_defect: defect,
        classification: classify(defect, &stats),
        curvature_stats: stats,
        trajectory,
    };
    if !result.is_closed() {
        return Err(Error::OpenTrajectory(defect));
    }
    let mesh = revolve_closed_profile(&result.trajectory, opts)?;
    Ok((result, mesh))
}

/// Shoots on one parameter to close a profile and revolves it into a mesh.
///
/// `sphere_like` starts on the axis at depth `guess` and requires the
/// first vertical tangent to sit at `z = 0`; `torus_like` starts at
/// `(guess, 0)` heading up and requires a perpendicular return to `z = 0`.
pub fn shoot_revolution(
    lambda: f64,
    mode: RevolutionMode,
    guess: f64,
    opts: &RevolveOptions,
) -> Result<(ShootResult, TriMesh)> {
    if !(guess > 0.0) {
        return Err(Error::InvalidParameter(format!("guess must be positive, got {guess}")));
    }
    match mode {
        RevolutionMode::SphereLike => {
            let (d, g, it) = secant(|d| sphere_section(lambda, d), guess, guess * (1.0 + 1e-4), 1e-13, 60)?;
            finish_sphere(lambda, d, it, g, opts)
        }
        RevolutionMode::TorusLike => {
            let (r, g, it) = secant(|r| torus_section(lambda, r).map(|t| t.1), guess, guess * (1.0 + 1e-4), 1e-13, 60)?;
            finish_torus(lambda, r, it, g, opts)
        }
    }
}

/// Closed torus-like profiles with equatorial radius in `[lo, hi]`.
pub fn sweep_torus(lambda: f64, lo: f64, hi: f64, n: usize, opts: &RevolveOptions) -> Result<Vec<(ShootResult, TriMesh)>> {
    if !(lo > 0.0 && hi > lo) || n == 0 {
        return Err(Error::InvalidParameter(format!("bad sweep [{lo}, {hi}] × {n}")));
    }
    let g = move |r: f64| torus_section(lambda, r).ok().map(|t| t.1);
    let roots = bracket_roots(&g, lo, hi, n);
    if roots.is_empty() {
        return Err(Error::NoBracket { lo, hi });
    }
    let closed: Vec<_> = roots
        .into_iter()
        .filter_map(|(r, gr)| finish_torus(lambda, r, 0, gr, opts).ok())
        .collect();
    if closed.is_empty() {
        return Err(Error::NoBracket { lo, hi });
    }
    Ok(closed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_sphere_radius;
    use crate::shooting::{curve_invariants, Classification};

    #[test]
    fn series_matches_sphere() {
        let r = lambda_sphere_radius(0.7);
        for s in [1e-3, 1e-2, 5e-2] {
            let y = axis_series(-r, 0.7, s);
            let t = s / r;
            assert!((y[0] - r * t.sin()).abs() < s.powi(5));
            assert!((y[1] + r * t.cos()).abs() < s.powi(5));
            assert!((y[2] - t).abs() < s.powi(5));
        }
    }

    #[test]
    fn cylinder_is_stationary() {
        let rho = 2f64.sqrt();
        assert!(profile_curvature(rho, 0.3, 0.5 * PI, 0.0).abs() < 1e-15);
        let run = integrate_profile(&ProfileState::new(rho, 0.0, 0.5 * PI), 0.0, 2.0, 1e-2).unwrap();
        assert!(run.states.iter().all(|p| (p.theta - 0.5 * PI).abs() < 1e-13 && (p.rho - rho).abs() < 1e-13));
    }

    #[test]
    fn sphere_profile_closes_on_axis() {
        for lambda in [1.0, 0.0] {
            let r = lambda_sphere_radius(lambda);
            let run = integrate_profile(&ProfileState::on_axis(-r), lambda, 2.0 * PI * r, 1e-3).unwrap();
            assert!(run.reached_axis);
            let last = run.states.last().unwrap();
            let (defect, z_top, _) = top_pole_defect(last, lambda);
            assert!(defect < 1e-6, "{defect}");
            assert!((z_top - r).abs() < 1e-8);
            for p in &run.states {
                assert!((p.rho.hypot(p.z) - r).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn axis_start_needs_zero_angle() {
        assert!(integrate_profile(&ProfileState::new(0.0, -1.0, 0.3), 0.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn sphere_like_shooting() {
        let opts = RevolveOptions::default();
        let (res, mesh) = shoot_revolution(0.5, RevolutionMode::SphereLike, 1.3, &opts).unwrap();
        assert!((res.parameter - (4.25f64.sqrt() - 0.5)).abs() < 1e-8);
        assert_eq!(res.classification, Classification::Circle);
        assert!(mesh.is_closed());
        assert_eq!(mesh.euler_characteristic(), 2);
        let (res, _) = shoot_revolution(0.0, RevolutionMode::SphereLike, 2.0, &opts).unwrap();
        assert!(res.iterations <= 3);
        let inv = curve_invariants(&res).unwrap();
        assert!(inv.intersects_round);
    }

    #[test]
    fn shrinker_torus() {
        let opts = RevolveOptions::default();
        let (res, mesh) = shoot_revolution(0.0, RevolutionMode::TorusLike, 3.3, &opts).unwrap();
        assert!(res.closure_defect < 1e-5, "{}", res.closure_defect);
        assert_eq!(res.classification, Classification::ClosedNoncircular);
        assert_eq!(res.winding_number(), 1);
        assert_eq!(mesh.euler_characteristic(), 0);
        let inv = curve_invariants(&res).unwrap();
        assert!(inv.intersects_round);
        assert!(inv.min_radius < 2.0 && 2.0 < inv.max_radius);
    }
}
