//! Procedural meshes: icospheres, tori, bands, disks and a genus-2 plate.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{read_mesh, TriMesh, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Icosphere,
    CylinderBand,
    Torus,
    Disk,
    Ellipsoid,
    CatenoidBand,
    Genus2,
    File(PathBuf),
}

/// Parameters for [`build_primitive`].
///
/// `radii` is interpreted per kind:
/// icosphere `[r]`, torus `[R, ρ]`, cylinder band `[r, height]`,
/// disk `[r]`, ellipsoid `[a, b, c]`, catenoid band `[neck, half_height]`,
/// genus-2 plate `[cell_size]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub radii: Vec<f64>,
    pub level: usize,
    pub center: [f64; 3],
}

impl ShapeSpec {
    fn with(kind: ShapeKind, radii: Vec<f64>, level: usize) -> Self {
        Self {
            kind,
            radii,
            level,
            center: [0.0; 3],
        }
    }

    pub fn icosphere(r: f64, level: usize) -> Self {
        Self::with(ShapeKind::Icosphere, vec![r], level)
    }

    pub fn torus(major: f64, minor: f64, level: usize) -> Self {
        Self::with(ShapeKind::Torus, vec![major, minor], level)
    }

    pub fn cylinder_band(r: f64, height: f64, level: usize) -> Self {
        Self::with(ShapeKind::CylinderBand, vec![r, height], level)
    }

    pub fn disk(r: f64, level: usize) -> Self {
        Self::with(ShapeKind::Disk, vec![r], level)
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64, level: usize) -> Self {
        Self::with(ShapeKind::Ellipsoid, vec![a, b, c], level)
    }

    pub fn catenoid_band(neck: f64, half_height: f64, level: usize) -> Self {
        Self::with(ShapeKind::CatenoidBand, vec![neck, half_height], level)
    }

    pub fn genus2(cell: f64, level: usize) -> Self {
        Self::with(ShapeKind::Genus2, vec![cell], level)
    }

    pub fn file(path: impl Into<PathBuf>) -> Self {
        Self::with(ShapeKind::File(path.into()), Vec::new(), 0)
    }

    pub fn centered_at(mut self, c: [f64; 3]) -> Self {
        self.center = c;
        self
    }

    fn validate(&self) -> Result<()> {
        let need = match self.kind {
            ShapeKind::Icosphere | ShapeKind::Disk | ShapeKind::Genus2 => 1,
            ShapeKind::Torus | ShapeKind::CylinderBand | ShapeKind::CatenoidBand => 2,
            ShapeKind::Ellipsoid => 3,
            ShapeKind::File(_) => 0,
        };
        if self.radii.len() != need {
            return Err(Error::InvalidParameter(format!(
                "{:?} needs {need} radii, got {}",
                self.kind,
                self.radii.len()
            )));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidParameter("radii must be positive".into()));
        }
        if self.kind == ShapeKind::Torus && self.radii[1] >= self.radii[0] {
            return Err(Error::InvalidParameter("torus tube radius must be below the major radius".into()));
        }
        if self.level > 8 {
            return Err(Error::InvalidParameter(format!("refinement level {} is too large", self.level)));
        }
        Ok(())
    }
}

pub fn build_primitive(spec: &ShapeSpec) -> Result<TriMesh> {
    spec.validate()?;
    let r = &spec.radii;
    let (vertices, faces) = match &spec.kind {
        ShapeKind::Icosphere => {
            let (v, f) = unit_icosphere(spec.level);
            (v.into_iter().map(|p| p * r[0]).collect(), f)
        }
        ShapeKind::Ellipsoid => {
            let (v, f) = unit_icosphere(spec.level);
            (v.into_iter().map(|p| Vec3::new(p.x * r[0], p.y * r[1], p.z * r[2])).collect(), f)
        }
        ShapeKind::Torus => torus(r[0], r[1], spec.level),
        ShapeKind::CylinderBand => cylinder_band(r[0], r[1], spec.level),
        ShapeKind::CatenoidBand => catenoid_band(r[0], r[1], spec.level),
        ShapeKind::Disk => disk(r[0], spec.level),
        ShapeKind::Genus2 => genus2_plate(r[0], spec.level),
        ShapeKind::File(path) => return read_mesh(path),
    };
    let c = Vec3::from(spec.center);
    TriMesh::new(vertices.into_iter().map(|p| p + c).collect(), faces)
}

/// Subdivided icosahedron with every vertex normalized to the unit sphere.
pub fn unit_icosphere(level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                v.push(((v[a] + v[b]) * 0.5).normalize());
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for &[a, b, c] in &f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    (v, f)
}

/// Quad grid on a (u periodic) × (v periodic or not) parameter domain.
fn grid_faces(nu: usize, nv: usize, v_periodic: bool) -> Vec<[usize; 3]> {
    let rows = if v_periodic { nv } else { nv + 1 };
    let idx = |i: usize, j: usize| (j % rows) * nu + (i % nu);
    let mut f = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            f.push([a, b, c]);
            f.push([a, c, d]);
        }
    }
    f
}

fn torus(major: f64, minor: f64, level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let nv = 6 << level;
    let nu = ((nv as f64) * major / minor).round().max(3.0) as usize;
    let mut v = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        let b = 2.0 * PI * j as f64 / nv as f64;
        for i in 0..nu {
            let a = 2.0 * PI * i as f64 / nu as f64;
            let w = major + minor * b.cos();
            v.push(Vec3::new(w * a.cos(), w * a.sin(), minor * b.sin()));
        }
    }
    (v, grid_faces(nu, nv, true))
}

fn cylinder_band(r: f64, height: f64, level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let nu = 12 << level;
    let dz = 2.0 * PI * r / nu as f64;
    let nz = ((height / dz).round() as usize).max(1);
    let mut v = Vec::with_capacity(nu * (nz + 1));
    for j in 0..=nz {
        let z = -0.5 * height + height * j as f64 / nz as f64;
        for i in 0..nu {
            let a = 2.0 * PI * i as f64 / nu as f64;
            v.push(Vec3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    (v, grid_faces(nu, nz, false))
}

fn catenoid_band(neck: f64, half_height: f64, level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let nu = 12 << level;
    let nz = 4 << level;
    let mut v = Vec::with_capacity(nu * (nz + 1));
    for j in 0..=nz {
        let z = -half_height + 2.0 * half_height * j as f64 / nz as f64;
        let w = neck * (z / neck).cosh();
        for i in 0..nu {
            let a = 2.0 * PI * i as f64 / nu as f64;
            v.push(Vec3::new(w * a.cos(), w * a.sin(), z));
        }
    }
    (v, grid_faces(nu, nz, false))
}

/// Hexagonal lattice patch radially mapped onto the disk of radius `r`
/// in the z = 0 plane, oriented with normal +z.
fn disk(r: f64, level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let n = 2i64 << level;
    let hex = |a: i64, b: i64| a.abs().max(b.abs()).max((a + b).abs());
    let mut index = HashMap::new();
    let mut v = Vec::new();
    for b in -n..=n {
        for a in -n..=n {
            let k = hex(a, b);
            if k > n {
                continue;
            }
            let p = Vec3::new(a as f64 + 0.5 * b as f64, 0.5 * 3f64.sqrt() * b as f64, 0.0);
            let q = if k == 0 { p } else { p * (r * k as f64 / n as f64 / p.norm()) };
            index.insert((a, b), v.len());
            v.push(q);
        }
    }
    let mut f = Vec::new();
    for b in -n..n {
        for a in -n..n {
            let tris = [[(a, b), (a + 1, b), (a, b + 1)], [(a + 1, b), (a + 1, b + 1), (a, b + 1)]];
            for t in tris {
                if let (Some(&i), Some(&j), Some(&k)) = (index.get(&t[0]), index.get(&t[1]), index.get(&t[2])) {
                    f.push([i, j, k]);
                }
            }
        }
    }
    (v, f)
}

/// Boundary surface of a voxel plate with two square holes (genus 2).
fn genus2_plate(cell: f64, level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    const PATTERN: [&str; 3] = ["#####", "#.#.#", "#####"];
    let m = 1usize << level;
    let (nx, ny, nz) = (5 * m, 3 * m, m);
    let filled = |x: i64, y: i64, z: i64| -> bool {
        if x < 0 || y < 0 || z < 0 || x >= nx as i64 || y >= ny as i64 || z >= nz as i64 {
            return false;
        }
        PATTERN[(y as usize) / m].as_bytes()[(x as usize) / m] == b'#'
    };
    let h = cell / m as f64;
    let offset = Vec3::new(2.5 * cell, 1.5 * cell, 0.5 * cell);
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut v = Vec::new();
    let mut vid = |p: [i64; 3], v: &mut Vec<Vec3>| -> usize {
        *index.entry(p).or_insert_with(|| {
            v.push(Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64) * h - offset);
            v.len() - 1
        })
    };
    let mut f = Vec::new();
    for z in 0..nz as i64 {
        for y in 0..ny as i64 {
            for x in 0..nx as i64 {
                if !filled(x, y, z) {
                    continue;
                }
                for axis in 0..3 {
                    for dir in [-1i64, 1] {
                        let mut nb = [x, y, z];
                        nb[axis] += dir;
                        if filled(nb[0], nb[1], nb[2]) {
                            continue;
                        }
                        let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
                        let mut base = [x, y, z];
                        if dir > 0 {
                            base[axis] += 1;
                        }
                        let corner = |du: i64, dw: i64| {
                            let mut c = base;
                            c[u] += du;
                            c[w] += dw;
                            c
                        };
                        // e_u × e_w = e_axis, so (0,0),(1,0),(1,1),(0,1) faces +axis
                        let mut q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                        if dir < 0 {
                            q.reverse();
                        }
                        let ids: Vec<usize> = q.iter().map(|&c| vid(c, &mut v)).collect();
                        f.push([ids[0], ids[1], ids[2]]);
                        f.push([ids[0], ids[2], ids[3]]);
                    }
                }
            }
        }
    }
    (v, f)
}
