use std::f64::consts::PI;

use crate::mesh::{unit_icosphere, TriMesh, Vec3};
use crate::{Error, Result};

use super::TrajectoryPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevolveOptions {
    /// Icosphere level whose vertices are mapped onto sphere-like surfaces.
    pub level: usize,
    /// Target edge length for torus-like surfaces.
    pub edge: f64,
}

impl RevolveOptions {
    /// Resolution comparable to the radius-2 icosphere of the same level.
    pub fn at_level(level: usize) -> Self {
        Self {
            level,
            edge: 2.1 / (1u64 << level) as f64,
        }
    }
}

impl Default for RevolveOptions {
    fn default() -> Self {
        Self::at_level(4)
    }
}

/// Cubic Hermite position at arclength `s` from samples carrying tangent
/// angles. `s` is clamped to the sampled range.
fn hermite(traj: &[TrajectoryPoint], s: f64) -> (f64, f64) {
    let s = s.clamp(traj[0].s, traj[traj.len() - 1].s);
    let k = match traj.binary_search_by(|p| p.s.total_cmp(&s)) {
        Ok(i) => return (traj[i].x, traj[i].y),
        Err(i) => i.clamp(1, traj.len() - 1) - 1,
    };
    let (p, q) = (&traj[k], &traj[k + 1]);
    let h = q.s - p.s;
    let t = (s - p.s) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let x = h00 * p.x + h10 * h * p.theta.cos() + h01 * q.x + h11 * h * q.theta.cos();
    let y = h00 * p.y + h10 * h * p.theta.sin() + h01 * q.y + h11 * h * q.theta.sin();
    (x, y)
}

/// Maps icosphere vertices onto the surface swept by a pole-to-pole
/// profile, matching polar angle to a uniform fraction of arclength.
pub fn revolve_sphere_profile(traj: &[TrajectoryPoint], opts: &RevolveOptions) -> Result<TriMesh> {
    if traj.len() < 2 || traj[0].x != 0.0 || traj[traj.len() - 1].x != 0.0 {
        return Err(Error::InvalidParameter("profile must run from axis to axis".into()));
    }
    let (s0, s1) = (traj[0].s, traj[traj.len() - 1].s);
    let (dirs, faces) = unit_icosphere(opts.level);
    let vertices = dirs
        .iter()
        .map(|d| {
            let beta = (-d.z).clamp(-1.0, 1.0).acos();
            let (rho, z) = hermite(traj, s0 + (s1 - s0) * beta / PI);
            let w = d.x.hypot(d.y);
            if w == 0.0 {
                Vec3::new(0.0, 0.0, z)
            } else {
                Vec3::new(rho.max(0.0) * d.x / w, rho.max(0.0) * d.y / w, z)
            }
        })
        .collect();
    TriMesh::new(vertices, faces)
}

/// Revolves a closed profile loop (first and last samples coincide) into
/// a torus-like mesh. Rings are equally spaced in `∫ds/ρ` and odd rings
/// are rotated by half an azimuthal step, so triangles are close to
/// equilateral everywhere.
pub fn revolve_closed_profile(traj: &[TrajectoryPoint], opts: &RevolveOptions) -> Result<TriMesh> {
    if traj.len() < 4 || !(opts.edge > 0.0) {
        return Err(Error::InvalidParameter("need a sampled loop and a positive edge length".into()));
    }
    // conformal coordinate τ = ∫ds/ρ makes ring and azimuthal spacing agree
    let mut tau = vec![0.0; traj.len()];
    for i in 1..traj.len() {
        tau[i] = tau[i - 1] + 0.5 * (traj[i].s - traj[i - 1].s) * (1.0 / traj[i].x + 1.0 / traj[i - 1].x);
    }
    let total = tau[traj.len() - 1];
    let mean_rho = traj.iter().map(|p| p.x).sum::<f64>() / traj.len() as f64;
    let nj = ((2.0 * PI * mean_rho / opts.edge).ceil() as usize).max(8);
    let row = 0.5 * 3f64.sqrt() * 2.0 * PI / nj as f64;
    let nk = ((total / row / 2.0).round() as usize).max(4) * 2;
    let mut vertices = Vec::with_capacity(nk * nj);
    let mut seg = 0;
    for k in 0..nk {
        let target = total * k as f64 / nk as f64;
        while seg + 2 < traj.len() && tau[seg + 1] < target {
            seg += 1;
        }
        let w = (target - tau[seg]) / (tau[seg + 1] - tau[seg]);
        let (rho, z) = hermite(traj, traj[seg].s + w * (traj[seg + 1].s - traj[seg].s));
        for j in 0..nj {
            let phi = 2.0 * PI * (j as f64 + 0.5 * (k % 2) as f64) / nj as f64;
            vertices.push(Vec3::new(rho * phi.cos(), rho * phi.sin(), z));
        }
    }
    let id = |k: usize, j: usize| (k % nk) * nj + (j % nj);
    let mut faces = Vec::with_capacity(2 * nk * nj);
    for k in 0..nk {
        for j in 0..nj {
            if k % 2 == 0 {
                faces.push([id(k, j), id(k, j + 1), id(k + 1, j)]);
                faces.push([id(k, j + 1), id(k + 1, j + 1), id(k + 1, j)]);
            } else {
                faces.push([id(k, j), id(k, j + 1), id(k + 1, j + 1)]);
                faces.push([id(k, j), id(k + 1, j + 1), id(k + 1, j)]);
            }
        }
    }
    TriMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_profile(r: f64, n: usize, full: bool) -> Vec<TrajectoryPoint> {
        let span = if full { 2.0 * PI } else { PI };
        (0..=n)
            .map(|i| {
                let t = span * i as f64 / n as f64;
                // centred at (0,0) for spheres; shifted off-axis for tori
                let (cx, x, y) = if full { (2.0, r * t.cos(), r * t.sin()) } else { (0.0, r * t.sin(), -r * t.cos()) };
                let theta = if full { t + 0.5 * PI } else { t };
                TrajectoryPoint {
                    s: r * t,
                    x: if full { cx + x } else { x.max(0.0) * (i != 0 && i != n) as u8 as f64 },
                    y,
                    theta,
                    kappa: 1.0 / r,
                }
            })
            .collect()
    }

    #[test]
    fn hermite_is_accurate_on_circle() {
        let traj = circle_profile(1.5, 64, false);
        for i in 0..100 {
            let s = 1.5 * PI * (i as f64 + 0.37) / 100.0;
            let (x, y) = hermite(&traj, s);
            assert!((x.hypot(y) - 1.5).abs() < 1e-6);
        }
    }

    #[test]
    fn sphere_profile_gives_outward_sphere() {
        let traj = circle_profile(1.5, 400, false);
        let m = revolve_sphere_profile(&traj, &RevolveOptions { level: 3, edge: 0.1 }).unwrap();
        assert_eq!(m.n_vertices(), 642);
        assert!(m.vertices().iter().all(|p| (p.norm() - 1.5).abs() < 1e-6));
        for v in 0..m.n_vertices() {
            assert!(m.area_weighted_normal(v).dot(&m.vertices()[v]) > 0.0);
        }
    }

    #[test]
    fn closed_profile_gives_outward_torus() {
        let traj = circle_profile(0.5, 400, true);
        let m = revolve_closed_profile(&traj, &RevolveOptions { level: 0, edge: 0.1 }).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        for v in 0..m.n_vertices() {
            let p = m.vertices()[v];
            let c = Vec3::new(p.x, p.y, 0.0).normalize() * 2.0;
            assert!(m.area_weighted_normal(v).dot(&(p - c)) > 0.0);
        }
    }
}
