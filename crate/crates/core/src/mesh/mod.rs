//! Indexed triangle meshes and their combinatorics.

mod io;
mod patch;
mod primitives;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub use io::{read_mesh, read_obj, read_off, write_curvature_csv, write_obj, write_off};
pub use patch::{ball_patch, Patch};
pub use primitives::{build_primitive, unit_icosphere, ShapeKind, ShapeSpec};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Sentinel for a missing opposite vertex on a boundary edge.
pub const NONE: usize = usize::MAX;

/// An immutable, consistently oriented triangle mesh.
///
/// Construction validates indices, orientation and face areas; the
/// content hash and combinatorial data are computed once.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    topology: Arc<Topology>,
    hash: String,
    curvature: Arc<OnceLock<crate::curvature::CurvatureData>>,
}

/// One undirected edge seen from a vertex: the other endpoint and the
/// vertices opposite the edge in its (one or two) incident faces.
#[derive(Debug, Clone, Copy)]
pub struct Spoke {
    pub to: usize,
    pub opposite: [usize; 2],
}

impl Spoke {
    pub fn is_boundary(&self) -> bool {
        self.opposite[1] == NONE
    }
}

#[derive(Debug, Clone)]
pub struct Topology {
    vertex_faces: Vec<Vec<usize>>,
    spokes: Vec<Vec<Spoke>>,
    boundary: Vec<bool>,
    n_edges: usize,
    n_boundary_edges: usize,
}

impl Topology {
    fn build(n_vertices: usize, faces: &[[usize; 3]]) -> Result<Self> {
        let mut vertex_faces = vec![Vec::new(); n_vertices];
        // directed edge -> opposite vertex
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                vertex_faces[a].push(fi);
                if directed.insert((a, b), c).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "directed edge ({a}, {b}) used twice: inconsistent orientation or non-manifold edge"
                    )));
                }
            }
        }

        let mut spokes: Vec<Vec<Spoke>> = vec![Vec::new(); n_vertices];
        let mut n_edges = 0;
        let mut n_boundary_edges = 0;
        let mut boundary = vec![false; n_vertices];
        for (&(a, b), &c) in &directed {
            let twin = directed.get(&(b, a)).copied();
            if let Some(d) = twin {
                if a < b {
                    n_edges += 1;
                    spokes[a].push(Spoke { to: b, opposite: [c, d] });
                    spokes[b].push(Spoke { to: a, opposite: [d, c] });
                }
            } else {
                n_edges += 1;
                n_boundary_edges += 1;
                boundary[a] = true;
                boundary[b] = true;
                spokes[a].push(Spoke { to: b, opposite: [c, NONE] });
                spokes[b].push(Spoke { to: a, opposite: [c, NONE] });
            }
        }
        for s in &mut spokes {
            s.sort_unstable_by_key(|sp| sp.to);
        }
        Ok(Self {
            vertex_faces,
            spokes,
            boundary,
            n_edges,
            n_boundary_edges,
        })
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn spokes(&self, v: usize) -> &[Spoke] {
        &self.spokes[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.spokes[v].iter().map(|s| s.to)
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Vertices within `k` edge hops of `v`, excluding `v`, in ascending order.
    pub fn ring(&self, v: usize, k: usize) -> Vec<usize> {
        let mut seen = vec![v];
        let mut frontier = vec![v];
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for w in self.neighbors(u) {
                    if !seen.contains(&w) {
                        seen.push(w);
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        seen.retain(|&w| w != v);
        seen.sort_unstable();
        seen
    }

    /// Whether the faces around `v` form a single fan (disk or half-disk).
    pub fn is_manifold_vertex(&self, v: usize, faces: &[[usize; 3]]) -> bool {
        let fs = &self.vertex_faces[v];
        if fs.is_empty() {
            return false;
        }
        // link edges next -> prev around v
        let mut link: HashMap<usize, usize> = HashMap::with_capacity(fs.len());
        for &fi in fs {
            let f = faces[fi];
            let k = f.iter().position(|&x| x == v).unwrap();
            link.insert(f[(k + 1) % 3], f[(k + 2) % 3]);
        }
        let targets: std::collections::HashSet<usize> = link.values().copied().collect();
        let starts: Vec<usize> = link.keys().copied().filter(|a| !targets.contains(a)).collect();
        if starts.len() > 1 {
            return false;
        }
        let start = starts.first().copied().unwrap_or_else(|| *link.keys().min().unwrap());
        let mut cur = start;
        let mut visited = 0;
        while let Some(&nx) = link.get(&cur) {
            visited += 1;
            cur = nx;
            if cur == start || visited > fs.len() {
                break;
            }
        }
        visited == fs.len()
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!("face {fi} has an index out of range")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex")));
            }
            if vertices[f[0]].iter().chain(vertices[f[1]].iter()).any(|c| !c.is_finite()) {
                return Err(Error::InvalidMesh(format!("face {fi} has a non-finite vertex")));
            }
        }
        if !faces.is_empty() {
            let areas: Vec<f64> = faces.iter().map(|f| tri_area(&vertices, f)).collect();
            let mean = areas.iter().sum::<f64>() / areas.len() as f64;
            if let Some((fi, &a)) = areas.iter().enumerate().find(|(_, &a)| a <= 1e-12 * mean) {
                return Err(Error::DegenerateFace { face: fi, area: a });
            }
        }
        let topology = Arc::new(Topology::build(n, &faces)?);
        let hash = content_hash(&vertices, &faces);
        Ok(Self {
            vertices,
            faces,
            topology,
            hash,
            curvature: Arc::new(OnceLock::new()),
        })
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new()).expect("empty mesh is valid")
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_edges(&self) -> usize {
        self.topology.n_edges
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.topology.boundary
    }

    pub fn is_closed(&self) -> bool {
        self.topology.n_boundary_edges == 0
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.topology.n_boundary_edges
    }

    /// Curvature, computed on first use and cached with the mesh.
    pub fn curvature(&self) -> Result<&crate::curvature::CurvatureData> {
        if let Some(c) = self.curvature.get() {
            return Ok(c);
        }
        let c = crate::curvature::compute_curvature(self)?;
        Ok(self.curvature.get_or_init(|| c))
    }

    /// Hex SHA-256 of vertex coordinates and face indices.
    pub fn content_hash(&self) -> &str {
        &self.hash
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    pub fn face_area(&self, f: usize) -> f64 {
        tri_area(&self.vertices, &self.faces[f])
    }

    pub fn area(&self) -> f64 {
        (0..self.n_faces()).map(|f| self.face_area(f)).sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (v, spokes) in self.topology.spokes.iter().enumerate() {
            for s in spokes.iter().filter(|s| s.to > v) {
                total += (self.vertices[s.to] - self.vertices[v]).norm();
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (v, spokes) in self.topology.spokes.iter().enumerate() {
            for s in spokes {
                m = m.max((self.vertices[s.to] - self.vertices[v]).norm());
            }
        }
        m
    }

    /// Same connectivity, vertices moved by `f(index, position)`.
    pub fn map_vertices(&self, f: impl Fn(usize, &Vec3) -> Vec3) -> Result<Self> {
        let v = self.vertices.iter().enumerate().map(|(i, p)| f(i, p)).collect();
        Self::new(v, self.faces.clone())
    }

    /// Connected components as a face labelling; returns (labels, count).
    pub fn face_components(&self) -> (Vec<usize>, usize) {
        let mut uf = UnionFind::new(self.n_vertices());
        for f in &self.faces {
            uf.union(f[0], f[1]);
            uf.union(f[1], f[2]);
        }
        let mut root_id = HashMap::new();
        let mut labels = Vec::with_capacity(self.n_faces());
        for f in &self.faces {
            let r = uf.find(f[0]);
            let next = root_id.len();
            labels.push(*root_id.entry(r).or_insert(next));
        }
        let count = root_id.len();
        (labels, count)
    }

    /// Number of closed boundary loops.
    pub fn boundary_loops(&self) -> usize {
        let mut uf = UnionFind::new(self.n_vertices());
        let mut on_boundary = vec![false; self.n_vertices()];
        for (v, spokes) in self.topology.spokes.iter().enumerate() {
            for s in spokes.iter().filter(|s| s.is_boundary()) {
                uf.union(v, s.to);
                on_boundary[v] = true;
            }
        }
        let mut roots: Vec<usize> = (0..self.n_vertices())
            .filter(|&v| on_boundary[v])
            .map(|v| uf.find(v))
            .collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Outward-ish area-weighted normal at a vertex from incident faces.
    pub fn area_weighted_normal(&self, v: usize) -> Vec3 {
        let mut n = Vec3::zeros();
        for &fi in self.topology.vertex_faces(v) {
            n += face_cross(&self.vertices, &self.faces[fi]);
        }
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            n
        }
    }
}

/// Twice the signed area vector of a face.
pub(crate) fn face_cross(vertices: &[Vec3], f: &[usize; 3]) -> Vec3 {
    (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]))
}

pub(crate) fn tri_area(vertices: &[Vec3], f: &[usize; 3]) -> f64 {
    0.5 * face_cross(vertices, f).norm()
}

fn content_hash(vertices: &[Vec3], faces: &[[usize; 3]]) -> String {
    let mut h = Sha256::new();
    h.update((vertices.len() as u64).to_le_bytes());
    for v in vertices {
        for c in v.iter() {
            h.update(c.to_le_bytes());
        }
    }
    h.update((faces.len() as u64).to_le_bytes());
    for f in faces {
        for &i in f {
            h.update((i as u64).to_le_bytes());
        }
    }
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Genus of a closed connected oriented mesh, `(2 − χ)/2`.
pub fn genus(mesh: &TriMesh) -> Result<i64> {
    if !mesh.is_closed() {
        return Err(Error::NotClosed(mesh.n_boundary_edges()));
    }
    let (_, comps) = mesh.face_components();
    if comps != 1 {
        return Err(Error::NotConnected(comps));
    }
    Ok((2 - mesh.euler_characteristic()) / 2)
}

/// Total genus of a bordered mesh after capping every boundary loop with a
/// disk, summed over connected components.
pub fn capped_genus(mesh: &TriMesh) -> i64 {
    if mesh.is_empty() {
        return 0;
    }
    let (labels, count) = mesh.face_components();
    let mut v_of = vec![NONE; mesh.n_vertices()];
    for (fi, f) in mesh.faces().iter().enumerate() {
        for &v in f {
            v_of[v] = labels[fi];
        }
    }
    let mut chi = vec![0i64; count];
    for &c in v_of.iter().filter(|&&c| c != NONE) {
        chi[c] += 1;
    }
    for &c in &labels {
        chi[c] += 1;
    }
    let topo = mesh.topology();
    let mut uf = UnionFind::new(mesh.n_vertices());
    for v in 0..mesh.n_vertices() {
        for s in topo.spokes(v).iter().filter(|s| s.to > v) {
            chi[v_of[v]] -= 1;
            if s.is_boundary() {
                uf.union(v, s.to);
            }
        }
    }
    let mut loops: Vec<(usize, usize)> = (0..mesh.n_vertices())
        .filter(|&v| topo.is_boundary(v))
        .map(|v| (uf.find(v), v_of[v]))
        .collect();
    loops.sort_unstable();
    loops.dedup_by_key(|l| l.0);
    for (_, c) in loops {
        chi[c] += 1;
    }
    chi.iter().map(|&x| (2 - x) / 2).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> TriMesh {
        let v = vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ];
        let f = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
        TriMesh::new(v, f).unwrap()
    }

    #[test]
    fn tetrahedron_counts() {
        let m = tetra();
        assert_eq!(m.n_edges(), 6);
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.is_closed());
        assert_eq!(genus(&m).unwrap(), 0);
        assert_eq!(m.content_hash().len(), 64);
    }

    #[test]
    fn rejects_flipped_face() {
        let m = tetra();
        let mut f = m.faces().to_vec();
        f[0] = [0, 2, 1];
        assert!(matches!(TriMesh::new(m.vertices().to_vec(), f), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn rejects_out_of_range_and_degenerate() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(TriMesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        let mut v2 = v.clone();
        v2.push(Vec3::new(2.0, 0.0, 0.0));
        // collinear 0,1,3
        let r = TriMesh::new(v2, vec![[0, 1, 2], [0, 3, 1]]);
        assert!(matches!(r, Err(Error::DegenerateFace { face: 1, .. }) | Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn single_triangle_is_open() {
        let m = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        assert!(!m.is_closed());
        assert_eq!(m.boundary_loops(), 1);
        assert!(m.boundary_flags().iter().all(|&b| b));
        assert!(matches!(genus(&m), Err(Error::NotClosed(3))));
        assert_eq!(capped_genus(&m), 0);
    }

    #[test]
    fn bowtie_vertex_is_not_manifold() {
        let v = vec![
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(-1.0, -1.0, 0.0),
        ];
        let m = TriMesh::new(v, vec![[0, 1, 2], [0, 3, 4]]).unwrap();
        assert!(!m.topology().is_manifold_vertex(0, m.faces()));
        assert!(m.topology().is_manifold_vertex(1, m.faces()));
    }

    #[test]
    fn hash_changes_with_geometry() {
        let m = tetra();
        let moved = m.map_vertices(|_, p| p * 1.000001).unwrap();
        assert_ne!(m.content_hash(), moved.content_hash());
        let same = m.map_vertices(|_, p| *p).unwrap();
        assert_eq!(m.content_hash(), same.content_hash());
    }
}
