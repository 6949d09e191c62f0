//! Integral and pointwise estimates evaluated on meshes.
//!
//! Balls restrict the surface by vertex inclusion: vertex integrals sum
//! `f_i·A_i` over vertices in the ball, with `A_i` the parent mixed area,
//! and bordered patches keep the faces whose three vertices lie inside.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curvature::{max_abs, CurvatureData};
use crate::identities::require_lambda_surface;
use crate::mesh::{ball_patch, capped_genus, TriMesh};
use crate::operators::{drift_laplacian, gaussian_weight};
use crate::{lambda_sphere_radius, Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Informational,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: Option<f64>,
    /// `rhs − lhs`.
    pub margin: Option<f64>,
    pub tolerance: f64,
    pub parameters: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<[f64; 3]>,
    /// Sampled `(s, value)` pairs for profile-type estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<[f64; 2]>>,
    pub verdict: Verdict,
}

impl EstimateReport {
    fn inequality(name: &str, lhs: f64, rhs: f64) -> Self {
        let tolerance = 1e-9 * rhs.abs().max(1.0);
        let margin = rhs - lhs;
        Self {
            name: name.into(),
            lhs,
            rhs: Some(rhs),
            margin: Some(margin),
            tolerance,
            parameters: BTreeMap::new(),
            x0: None,
            profile: None,
            verdict: if margin >= -tolerance { Verdict::Pass } else { Verdict::Fail },
        }
    }

    fn informational(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            lhs: value,
            rhs: None,
            margin: None,
            tolerance: 0.0,
            parameters: BTreeMap::new(),
            x0: None,
            profile: None,
            verdict: Verdict::Informational,
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.into(), value);
        self
    }

    fn at(mut self, x0: &Vec3) -> Self {
        self.x0 = Some([x0.x, x0.y, x0.z]);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

fn inside(mesh: &TriMesh, x0: &Vec3, r: f64) -> Vec<bool> {
    let slack = 1e-9 * r.max(1.0);
    mesh.vertices().iter().map(|p| (p - x0).norm() <= r + slack).collect()
}

fn ball_integral(curv: &CurvatureData, mask: &[bool], f: impl Fn(usize) -> f64) -> f64 {
    (0..mask.len()).filter(|&i| mask[i]).map(|i| f(i) * curv.area[i]).sum()
}

/// Nearest vertex to `x0`, rejected if farther than the longest edge.
fn snap(mesh: &TriMesh, x0: &Vec3) -> Result<usize> {
    let (best, dist) = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p - x0).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::EmptyPatch)?;
    if dist > mesh.max_edge_length() {
        return Err(Error::InvalidParameter(format!(
            "x0 lies {dist:.3e} from the surface, beyond the snap tolerance"
        )));
    }
    Ok(best)
}

/// `sup_{s∈[r,R]} area(B_s)/(πs²)` for the vertex-area step function; the
/// supremum sits at `s = r` or at a vertex distance.
fn density_ratio(mesh: &TriMesh, curv: &CurvatureData, x0: &Vec3, r: f64, big_r: f64) -> f64 {
    let mut d: Vec<(f64, f64)> = mesh
        .vertices()
        .iter()
        .zip(&curv.area)
        .map(|(p, a)| ((p - x0).norm(), *a))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    let mut best: f64 = 0.0;
    let mut k = 0;
    while k < d.len() && d[k].0 <= r {
        acc += d[k].1;
        k += 1;
    }
    best = best.max(acc / (PI * r * r));
    while k < d.len() && d[k].0 <= big_r {
        acc += d[k].1;
        best = best.max(acc / (PI * d[k].0 * d[k].0));
        k += 1;
    }
    best
}

/// Local Gauss–Bonnet bound
/// `(1−ε)∫_{B_r}|A|² ≤ ∫_{B_R}H² + 8π g(M∩B_R) + 24π D' R²/(ε(R−r)²)`.
pub fn gauss_bonnet_check(mesh: &TriMesh, x0: &Vec3, r: f64, big_r: f64, epsilon: f64) -> Result<EstimateReport> {
    if !(0.0 < r && r < big_r) {
        return Err(Error::InvalidParameter(format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < ε < 1, got {epsilon}")));
    }
    let patch = ball_patch(mesh, x0, big_r);
    if patch.is_empty() {
        return Err(Error::EmptyPatch);
    }
    let curv = mesh.curvature()?;
    let in_r = inside(mesh, x0, r);
    let in_big = inside(mesh, x0, big_r);
    let a2 = ball_integral(curv, &in_r, |i| curv.a_norm2[i]);
    let h2 = ball_integral(curv, &in_big, |i| curv.h[i] * curv.h[i]);
    let genus = capped_genus(&patch.mesh) as f64;
    let d_prime = density_ratio(mesh, curv, x0, r, big_r);
    let area_term = 24.0 * PI * d_prime * big_r * big_r / (epsilon * (big_r - r).powi(2));
    let rhs = h2 + 8.0 * PI * genus + area_term;
    Ok(EstimateReport::inequality("gauss_bonnet", (1.0 - epsilon) * a2, rhs)
        .at(x0)
        .with("epsilon", epsilon)
        .with("r", r)
        .with("R", big_r)
        .with("D_prime", d_prime)
        .with("genus", genus)
        .with("int_A2_Br", a2)
        .with("int_H2_BR", h2))
}

/// A sub-triangle of the quadrature surface.
struct Node {
    face: usize,
    point: Vec3,
    weight: f64,
    bary: [f64; 3],
    /// Distance range of its corners and centroid from the ball centre.
    dist: [f64; 2],
}

/// Quadrature on the Phong surface through the mesh: faces that reach
/// `B_t(x₀)` are split into `m²` sub-triangles whose corners are lifted
/// with the vertex normals, so the surface bends between vertices.
fn subsample(mesh: &TriMesh, normals: &[Vec3], x0: &Vec3, t: f64, m: usize) -> Vec<Node> {
    let v = mesh.vertices();
    let inv = 1.0 / m as f64;
    let reach = t + mesh.max_edge_length();
    let mut out = Vec::new();
    for (fi, f) in mesh.faces().iter().enumerate() {
        if f.iter().all(|&k| (v[k] - x0).norm() > reach) {
            continue;
        }
        let lift = |b: [f64; 3]| {
            let p = v[f[0]] * b[0] + v[f[1]] * b[1] + v[f[2]] * b[2];
            (0..3).fold(Vec3::zeros(), |acc, k| {
                let n = normals[f[k]];
                acc + (p - n * (p - v[f[k]]).dot(&n)) * b[k]
            })
        };
        let bary = |i: usize, j: usize| [i as f64 * inv, j as f64 * inv, 1.0 - (i + j) as f64 * inv];
        let mut push = |c: [[usize; 2]; 3]| {
            let bs = c.map(|[i, j]| bary(i, j));
            let ps = bs.map(lift);
            let b: [f64; 3] = std::array::from_fn(|k| (bs[0][k] + bs[1][k] + bs[2][k]) / 3.0);
            let point = lift(b);
            let ds = [(ps[0] - x0).norm(), (ps[1] - x0).norm(), (ps[2] - x0).norm(), (point - x0).norm()];
            out.push(Node {
                face: fi,
                point,
                weight: 0.5 * (ps[1] - ps[0]).cross(&(ps[2] - ps[0])).norm(),
                bary: b,
                dist: [ds.iter().copied().fold(f64::INFINITY, f64::min), ds.iter().copied().fold(0.0, f64::max)],
            });
        };
        for i in 0..m {
            for j in 0..m - i {
                push([[i, j], [i + 1, j], [i, j + 1]]);
                if i + j + 2 <= m {
                    push([[i + 1, j], [i + 1, j + 1], [i, j + 1]]);
                }
            }
        }
    }
    out
}

/// Share of a node inside `B_s`, spreading its weight evenly over its
/// distance range.
fn inside_fraction(dist: [f64; 2], s: f64) -> f64 {
    if s >= dist[1] {
        1.0
    } else if s <= dist[0] {
        0.0
    } else {
        (s - dist[0]) / (dist[1] - dist[0])
    }
}

pub const MONOTONICITY_RADII: usize = 32;

/// `g(s) = s⁻²∫_{B_s(x₀)} f e^{−|x|²/4}` on `s = t·2^{−k/8}`, with the
/// smallest `K` making `e^{Ks}g(s)` nondecreasing on the grid.
///
/// The verdict requires `g > 0` on the grid, so that `K` is finite, and
/// the nondecrease of `e^{Ks}g` within `1e-8·g(t)`. Parameter `C` is the
/// largest value of the proof's lower bound `−g'/g ≤ Q(s)` sampled on the
/// grid, and `bound_holds` records whether the measured `K` respects it.
pub fn monotonicity_profile(mesh: &TriMesh, lambda: f64, x0: &Vec3, f: &[f64], t: f64) -> Result<EstimateReport> {
    if f.len() != mesh.n_vertices() {
        return Err(Error::InvalidParameter("field length does not match the mesh".into()));
    }
    if f.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter("f must be non-negative".into()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    require_lambda_surface(mesh, lambda, None)?;
    let x0 = mesh.vertices()[snap(mesh, x0)?];
    let curv = mesh.curvature()?;
    let lf = drift_laplacian(mesh)?.apply(f);
    let radii: Vec<f64> = (0..MONOTONICITY_RADII)
        .rev()
        .map(|k| t * 2f64.powf(-(k as f64) / 8.0))
        .collect();
    let m = ((24.0 * mesh.max_edge_length() / radii[0]).ceil() as usize).max(1);
    let faces = mesh.faces();
    let interp = |field: &[f64], fi: usize, b: &[f64; 3]| {
        let fc = faces[fi];
        field[fc[0]] * b[0] + field[fc[1]] * b[1] + field[fc[2]] * b[2]
    };
    // per node: distance range, f·e·w, and the integrands of Q(s)
    let nodes: Vec<([f64; 2], [f64; 5])> = subsample(mesh, &curv.normal, &x0, t, m)
        .into_iter()
        .filter(|nd| nd.dist[0] <= t)
        .map(|nd| {
            let (fi, b, p) = (nd.face, nd.bary, nd.point);
            let fc = faces[fi];
            let n = (curv.normal[fc[0]] * b[0] + curv.normal[fc[1]] * b[1] + curv.normal[fc[2]] * b[2]).normalize();
            let e = gaussian_weight(&p) * nd.weight;
            let fe = interp(f, fi, &b) * e;
            let le = interp(&lf, fi, &b) * e;
            let d = (p - x0).norm();
            (nd.dist, [fe, fe * p.dot(&(p - x0)), fe * n.dot(&(p - x0)), le * d * d, le])
        })
        .collect();
    let mut g = Vec::with_capacity(radii.len());
    let mut q = Vec::with_capacity(radii.len());
    for &s in &radii {
        let mut sums = [0.0; 5];
        for (dist, vals) in &nodes {
            let w = inside_fraction(*dist, s);
            if w > 0.0 {
                for c in 0..5 {
                    sums[c] += w * vals[c];
                }
            }
        }
        let [fe, xx, nx, ld2, l] = sums;
        g.push(fe / (s * s));
        q.push(if fe > 0.0 {
            (0.5 * xx + lambda * nx + 0.5 * (ld2 - s * s * l)) / (s * fe)
        } else {
            0.0
        });
    }
    let gt = *g.last().unwrap();
    let all_zero = g.iter().all(|v| *v == 0.0);
    let positive = g.iter().all(|v| *v > 0.0);
    let k_measured = if all_zero || !positive {
        0.0
    } else {
        radii
            .windows(2)
            .zip(g.windows(2))
            .map(|(s, gv)| -(gv[1].ln() - gv[0].ln()) / (s[1] - s[0]))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let k_eff = k_measured.max(0.0);
    let tol = 1e-8 * gt.abs().max(f64::MIN_POSITIVE);
    let mut nondecreasing = all_zero || positive;
    if positive {
        for i in 1..radii.len() {
            let a = (k_eff * radii[i - 1]).exp() * g[i - 1];
            let b = (k_eff * radii[i]).exp() * g[i];
            if b < a - tol {
                nondecreasing = false;
            }
        }
    }
    let c_bound = q.iter().copied().fold(0.0f64, f64::max);
    let mut rep = EstimateReport::informational("monotonicity", k_measured)
        .at(&x0)
        .with("lambda", lambda)
        .with("t", t)
        .with("K", k_measured)
        .with("C", c_bound)
        .with("bound_holds", (k_measured <= c_bound + 1e-6) as u8 as f64)
        .with("subdivision", m as f64);
    rep.profile = Some(radii.iter().zip(&g).map(|(s, v)| [*s, *v]).collect());
    rep.tolerance = tol;
    rep.verdict = if nondecreasing { Verdict::Pass } else { Verdict::Fail };
    Ok(rep)
}

/// `max_σ σ²·sup_{B_{r−σ}(x₀)}|A|²` over a 64-step σ-grid, alongside the
/// total curvature `∫_{B_r}|A|²`.
pub fn choi_schoen_quantity(mesh: &TriMesh, x0: &Vec3, r: f64) -> Result<EstimateReport> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let x0 = mesh.vertices()[snap(mesh, x0)?];
    let curv = mesh.curvature()?;
    let mask = inside(mesh, &x0, r);
    if !mask.iter().any(|b| *b) {
        return Err(Error::EmptyPatch);
    }
    let total = ball_integral(curv, &mask, |i| curv.a_norm2[i]);
    let mut d: Vec<(f64, f64)> = mesh
        .vertices()
        .iter()
        .zip(&curv.a_norm2)
        .map(|(p, a)| ((p - x0).norm(), *a))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    let steps = 64;
    let slack = 1e-9 * r.max(1.0);
    let mut best: f64 = 0.0;
    for k in 0..=steps {
        let sigma = r * k as f64 / steps as f64;
        let sup = d
            .iter()
            .take_while(|(dist, _)| *dist <= r - sigma + slack)
            .fold(0.0f64, |m, (_, a)| m.max(*a));
        best = best.max(sigma * sigma * sup);
    }
    Ok(EstimateReport::informational("choi_schoen", best)
        .at(&x0)
        .with("r", r)
        .with("total_curvature", total))
}

/// `sup |A(x)|·|x − x₀|` over vertices.
pub fn singularity_diagnostic(mesh: &TriMesh, x0: &Vec3) -> Result<EstimateReport> {
    let curv = mesh.curvature()?;
    let v = mesh
        .vertices()
        .iter()
        .zip(&curv.a_norm2)
        .fold(0.0f64, |m, (p, a)| m.max(a.sqrt() * (p - x0).norm()));
    Ok(EstimateReport::informational("singularity", v).at(x0))
}

/// Number of edges whose dihedral angle bends the wrong way for a convex
/// surface with outward normals.
pub fn reflex_edges(mesh: &TriMesh) -> usize {
    let v = mesh.vertices();
    let topo = mesh.topology();
    let scale = mesh.mean_edge_length();
    let mut count = 0;
    for i in 0..mesh.n_vertices() {
        for sp in topo.spokes(i).iter().filter(|s| s.to > i && !s.is_boundary()) {
            let j = sp.to;
            let [a, b] = sp.opposite;
            let n = (v[j] - v[i]).cross(&(v[a] - v[i])).normalize() * orientation_sign(mesh, i, j, a);
            if n.dot(&(v[b] - v[i])) > 1e-9 * scale {
                count += 1;
            }
        }
    }
    count
}

/// +1 if the face through `(i, j, a)` is stored in that cyclic order.
fn orientation_sign(mesh: &TriMesh, i: usize, j: usize, a: usize) -> f64 {
    for &fi in mesh.topology().vertex_faces(i) {
        let f = mesh.faces()[fi];
        if f.contains(&j) && f.contains(&a) {
            let k = f.iter().position(|&x| x == i).unwrap();
            return if f[(k + 1) % 3] == j { 1.0 } else { -1.0 };
        }
    }
    0.0
}

/// `area(B_R(x₀) ∩ Σ)/(4πR²) ≤ 1` for each radius on convex surfaces.
pub fn convex_area_growth(mesh: &TriMesh, x0: &Vec3, radii: &[f64]) -> Result<EstimateReport> {
    let reflex = reflex_edges(mesh);
    if reflex > 0 {
        return Err(Error::NotConvex(reflex));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive and non-empty".into()));
    }
    let profile: Vec<[f64; 2]> = radii
        .iter()
        .map(|&r| [r, ball_patch(mesh, x0, r).mesh.area() / (4.0 * PI * r * r)])
        .collect();
    let worst = profile.iter().map(|p| p[1]).fold(0.0, f64::max);
    let mut rep = EstimateReport::inequality("convex_area_growth", worst, 1.0).at(x0);
    rep.profile = Some(profile);
    Ok(rep)
}

/// `min|x| ≤ √(λ²+4) − λ ≤ max|x|` on closed λ-surfaces.
pub fn sphere_intersection_check(mesh: &TriMesh, lambda: f64) -> Result<EstimateReport> {
    if !mesh.is_closed() {
        return Err(Error::NotClosed(mesh.n_boundary_edges()));
    }
    let (worst, threshold) = require_lambda_surface(mesh, lambda, None)?;
    let r = lambda_sphere_radius(lambda);
    let norms: Vec<f64> = mesh.vertices().iter().map(|p| p.norm()).collect();
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = max_abs(&norms);
    let mut rep = EstimateReport::inequality("sphere_intersection", 0.0, (r - lo).min(hi - r))
        .with("lambda", lambda)
        .with("round_radius", r)
        .with("min_norm", lo)
        .with("max_norm", hi)
        .with("max_lambda_residual", worst)
        .with("threshold", threshold);
    rep.tolerance = 1e-9 * r;
    rep.verdict = if rep.margin.unwrap() >= -rep.tolerance { Verdict::Pass } else { Verdict::Fail };
    Ok(rep)
}

/// Residual of `H = ⟨x,n⟩/(2α²) + ⟨z,n⟩/(2α) + λ/α` on the surface
/// translated by `−z` and scaled by `α`. It equals the original residual
/// divided by `α`.
pub fn rescaled_residual(mesh: &TriMesh, z: &Vec3, alpha: f64, lambda: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("α must be positive, got {alpha}")));
    }
    let scaled = mesh.map_vertices(|_, p| (p - z) * alpha)?;
    let c = scaled.curvature()?;
    Ok(scaled
        .vertices()
        .iter()
        .zip(c.h.iter().zip(&c.normal))
        .map(|(x, (h, n))| h - x.dot(n) / (2.0 * alpha * alpha) - z.dot(n) / (2.0 * alpha) - lambda / alpha)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::lambda_residual;
    use crate::mesh::{build_primitive, ShapeSpec};

    fn sphere(r: f64, level: usize) -> TriMesh {
        build_primitive(&ShapeSpec::icosphere(r, level)).unwrap()
    }

    #[test]
    fn gauss_bonnet_on_shrinker_sphere() {
        let m = sphere(2.0, 4);
        let rep = gauss_bonnet_check(&m, &Vec3::zeros(), 2.5, 3.0, 0.5).unwrap();
        assert!((rep.lhs - 4.0 * PI).abs() < 0.02 * 4.0 * PI);
        assert!(rep.rhs.unwrap() >= 16.0 * PI * 0.99);
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.parameters["genus"], 0.0);
    }

    #[test]
    fn gauss_bonnet_flat_disk() {
        let m = build_primitive(&ShapeSpec::disk(1.0, 3)).unwrap();
        let rep = gauss_bonnet_check(&m, &Vec3::zeros(), 0.5, 0.9, 0.25).unwrap();
        assert!(rep.lhs.abs() < 1e-12);
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn gauss_bonnet_rejects_bad_radii() {
        let m = sphere(2.0, 1);
        assert!(gauss_bonnet_check(&m, &Vec3::zeros(), 3.0, 2.0, 0.5).is_err());
        assert!(matches!(
            gauss_bonnet_check(&m, &Vec3::new(10.0, 0.0, 0.0), 1.0, 2.0, 0.5),
            Err(Error::EmptyPatch)
        ));
    }

    #[test]
    fn density_ratio_of_sphere() {
        let m = sphere(2.0, 3);
        let c = m.curvature().unwrap();
        let d = density_ratio(&m, c, &Vec3::zeros(), 2.5, 3.0);
        let area: f64 = c.area.iter().sum();
        assert!((d - area / (PI * 6.25)).abs() < 1e-12);
    }

    #[test]
    fn monotone_on_shrinker_sphere() {
        let m = sphere(2.0, 4);
        let ones = vec![1.0; m.n_vertices()];
        let rep = monotonicity_profile(&m, 0.0, &Vec3::new(0.0, 0.0, 2.0), &ones, 1.0).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.parameters["K"].is_finite());
        // a cap of radius s on a sphere has area exactly πs²
        for [_, g] in rep.profile.unwrap() {
            assert!((g / (PI * (-1f64).exp()) - 1.0).abs() < 0.03, "{g}");
        }
    }

    #[test]
    fn zero_field_is_monotone() {
        let m = sphere(2.0, 3);
        let rep = monotonicity_profile(&m, 0.0, &Vec3::new(2.0, 0.0, 0.0), &vec![0.0; m.n_vertices()], 1.0).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.profile.unwrap().iter().all(|p| p[1] == 0.0));
    }

    #[test]
    fn monotonicity_rejects_negative_field_and_far_point() {
        let m = sphere(2.0, 2);
        let f = vec![-1.0; m.n_vertices()];
        assert!(monotonicity_profile(&m, 0.0, &Vec3::new(2.0, 0.0, 0.0), &f, 1.0).is_err());
        let ones = vec![1.0; m.n_vertices()];
        assert!(monotonicity_profile(&m, 0.0, &Vec3::new(5.0, 0.0, 0.0), &ones, 1.0).is_err());
    }

    #[test]
    fn small_ball_density_of_curvature() {
        let r = lambda_sphere_radius(0.5);
        let m = sphere(r, 4);
        let a2 = m.curvature().unwrap().a_norm2.clone();
        let x0 = Vec3::new(0.0, 0.0, r);
        let rep = monotonicity_profile(&m, 0.5, &x0, &a2, 1.0).unwrap();
        let g0 = rep.profile.unwrap()[0][1];
        let expect = PI * (2.0 / (r * r)) * (-r * r / 4.0).exp();
        assert!((g0 / expect - 1.0).abs() < 0.02, "{g0} vs {expect}");
    }

    #[test]
    fn monotonicity_constant_is_stable_under_refinement() {
        let ks: Vec<f64> = [4, 5]
            .iter()
            .map(|&l| {
                let m = sphere(2.0, l);
                let f: Vec<f64> = m.vertices().iter().map(|p| 3.0 + 0.5 * p.z).collect();
                let rep = monotonicity_profile(&m, 0.0, &Vec3::new(0.0, 0.0, 2.0), &f, 1.0).unwrap();
                assert_eq!(rep.verdict, Verdict::Pass);
                assert_eq!(rep.parameters["bound_holds"], 1.0);
                rep.parameters["K"]
            })
            .collect();
        assert!(ks[0] > 0.0);
        assert!((ks[1] / ks[0] - 1.0).abs() < 0.2, "{ks:?}");
    }

    #[test]
    fn choi_schoen_on_lambda_sphere() {
        let r = lambda_sphere_radius(0.3);
        let m = sphere(r, 3);
        let rep = choi_schoen_quantity(&m, &Vec3::new(r, 0.0, 0.0), r).unwrap();
        let ico_vertex = m.vertices().iter().any(|p| (p - Vec3::new(r, 0.0, 0.0)).norm() < 1e-12);
        let x0 = Vec3::from(rep.x0.unwrap());
        assert!(ico_vertex || (x0.norm() - r).abs() < 1e-12);
        assert!((rep.lhs - 2.0).abs() < 1e-9, "{}", rep.lhs);
    }

    #[test]
    fn choi_schoen_flat_and_neck() {
        let disk = build_primitive(&ShapeSpec::disk(1.0, 3)).unwrap();
        assert!(choi_schoen_quantity(&disk, &Vec3::zeros(), 0.8).unwrap().lhs.abs() < 1e-12);
        let neck = build_primitive(&ShapeSpec::catenoid_band(0.5, 0.8, 3)).unwrap();
        let ball = sphere(2.0, 3);
        let qn = choi_schoen_quantity(&neck, &Vec3::new(0.5, 0.0, 0.0), 0.5).unwrap().lhs;
        let qs = choi_schoen_quantity(&ball, &Vec3::new(2.0, 0.0, 0.0), 0.5).unwrap().lhs;
        assert!(qn > qs, "{qn} vs {qs}");
    }

    #[test]
    fn singularity_at_centre() {
        let r = lambda_sphere_radius(-0.5);
        let m = sphere(r, 3);
        let rep = singularity_diagnostic(&m, &Vec3::zeros()).unwrap();
        assert!((rep.lhs - 2f64.sqrt()).abs() < 1e-9);
        let disk = build_primitive(&ShapeSpec::disk(1.0, 2)).unwrap();
        assert!(singularity_diagnostic(&disk, &Vec3::new(0.3, 0.1, 0.0)).unwrap().lhs < 1e-12);
        let on = singularity_diagnostic(&sphere(2.0, 3), &Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert!(on.lhs <= 2.0 * 2f64.sqrt() + 1e-9);
    }

    #[test]
    fn area_growth_on_spheres() {
        let m = sphere(2.0, 4);
        let rep = convex_area_growth(&m, &Vec3::zeros(), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = rep.profile.clone().unwrap();
        assert_eq!(p[0][1], 0.0);
        let full = m.area() / (16.0 * PI);
        assert!((p[1][1] - full).abs() < 1e-12 && full > 0.995 && full <= 1.0);
        assert!((p[3][1] - full / 4.0).abs() < 1e-12);
        for w in p[1..].windows(2) {
            assert!(w[1][1] <= w[0][1]);
        }
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn area_growth_on_ellipsoid_and_torus() {
        let e = build_primitive(&ShapeSpec::ellipsoid(2.0, 2.0, 1.0, 3)).unwrap();
        let radii: Vec<f64> = (1..=12).map(|k| 0.25 * k as f64).collect();
        assert_eq!(convex_area_growth(&e, &Vec3::zeros(), &radii).unwrap().verdict, Verdict::Pass);
        let t = build_primitive(&ShapeSpec::torus(2.0, 0.5, 1)).unwrap();
        assert!(matches!(convex_area_growth(&t, &Vec3::zeros(), &[1.0]), Err(Error::NotConvex(_))));
    }

    #[test]
    fn intersection_on_lambda_spheres() {
        for lambda in [-0.5, 0.0, 1.0] {
            let m = sphere(lambda_sphere_radius(lambda), 3);
            assert_eq!(sphere_intersection_check(&m, lambda).unwrap().verdict, Verdict::Pass);
        }
        let m = sphere(2.0, 3);
        assert!(matches!(sphere_intersection_check(&m, 1.0), Err(Error::NotLambdaSurface { .. })));
    }

    #[test]
    fn rescaled_identity_cases() {
        let lambda = 0.5;
        let m = sphere(lambda_sphere_radius(lambda), 3);
        let base = lambda_residual(&m, lambda).unwrap();
        assert_eq!(rescaled_residual(&m, &Vec3::zeros(), 1.0, lambda).unwrap(), base);
        assert!(max_abs(&rescaled_residual(&m, &Vec3::zeros(), 2.0, lambda).unwrap()) < 1e-9);
        assert!(rescaled_residual(&m, &Vec3::zeros(), 0.0, lambda).is_err());
    }

    #[test]
    fn large_scale_rhs_bound() {
        let lambda = -0.5;
        let m = sphere(lambda_sphere_radius(lambda), 3);
        let alpha = 100.0;
        let scaled = m.map_vertices(|_, p| p * alpha).unwrap();
        let c = scaled.curvature().unwrap();
        let xmax = m.vertices().iter().map(|p| p.norm()).fold(0.0, f64::max);
        let rhs = scaled
            .vertices()
            .iter()
            .zip(&c.normal)
            .map(|(x, n)| (x.dot(n) / (2.0 * alpha * alpha) + lambda / alpha).abs())
            .fold(0.0, f64::max);
        assert!(rhs <= (xmax / 2.0 + lambda.abs()) / alpha + 1e-15);
    }
}
