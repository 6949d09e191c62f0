use super::{TriMesh, Vec3, NONE};

/// Submesh cut out by an ambient ball, with the map back to parent vertices.
#[derive(Debug, Clone)]
pub struct Patch {
    pub mesh: TriMesh,
    pub parent_vertex: Vec<usize>,
}

impl Patch {
    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    /// Restrict a parent per-vertex field to the patch.
    pub fn pull<T: Copy>(&self, field: &[T]) -> Vec<T> {
        self.parent_vertex.iter().map(|&p| field[p]).collect()
    }
}

/// Faces whose three vertices lie in the closed ball `B_r(x0)`.
///
/// Membership uses a relative slack of 1e-9 so vertices that lie on the
/// sphere up to rounding are included.
pub fn ball_patch(mesh: &TriMesh, x0: &Vec3, r: f64) -> Patch {
    let slack = 1e-9 * r.max(1.0);
    let inside: Vec<bool> = mesh.vertices().iter().map(|p| (p - x0).norm() <= r + slack).collect();
    let kept: Vec<&[usize; 3]> = mesh.faces().iter().filter(|f| f.iter().all(|&v| inside[v])).collect();
    let mut used = vec![false; mesh.n_vertices()];
    for f in &kept {
        for &v in f.iter() {
            used[v] = true;
        }
    }
    let mut remap = vec![NONE; mesh.n_vertices()];
    let mut parent_vertex = Vec::new();
    for v in (0..mesh.n_vertices()).filter(|&v| used[v]) {
        remap[v] = parent_vertex.len();
        parent_vertex.push(v);
    }
    let faces = kept.iter().map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]]).collect();
    let vertices = parent_vertex.iter().map(|&p| mesh.vertices()[p]).collect();
    let mesh = TriMesh::new(vertices, faces).expect("sub-mesh of a valid mesh is valid");
    Patch { mesh, parent_vertex }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_primitive, capped_genus, ShapeSpec};
    use std::f64::consts::PI;

    #[test]
    fn containing_ball_keeps_everything() {
        let m = build_primitive(&ShapeSpec::icosphere(2.0, 2)).unwrap();
        let p = ball_patch(&m, &Vec3::zeros(), 3.0);
        assert_eq!(p.mesh.content_hash(), m.content_hash());
        assert!(p.mesh.is_closed());
    }

    #[test]
    fn disjoint_ball_is_empty() {
        let m = build_primitive(&ShapeSpec::icosphere(2.0, 2)).unwrap();
        let p = ball_patch(&m, &Vec3::zeros(), 1.0);
        assert!(p.is_empty());
        assert_eq!(p.mesh.n_vertices(), 0);
    }

    #[test]
    fn cap_area_converges() {
        // cap of height 1 on the sphere of radius 2: area 2π·2·1;
        // vertex inclusion loses an O(h) strip at the rim
        let exact = 4.0 * PI;
        let mut errs = Vec::new();
        for level in 3..6 {
            let m = build_primitive(&ShapeSpec::icosphere(2.0, level)).unwrap();
            let p = ball_patch(&m, &Vec3::new(2.0, 0.0, 0.0), 2.0);
            assert!(p.mesh.area() <= exact);
            assert_eq!(p.mesh.boundary_loops(), 1);
            assert_eq!(capped_genus(&p.mesh), 0);
            errs.push((p.mesh.area() - exact).abs() / exact);
        }
        assert!(errs[1] < 0.7 * errs[0] && errs[2] < 0.7 * errs[1], "{errs:?}");
        assert!(errs[2] < 0.05, "{errs:?}");
    }

    #[test]
    fn pull_follows_parent_indices() {
        let m = build_primitive(&ShapeSpec::icosphere(2.0, 1)).unwrap();
        let p = ball_patch(&m, &Vec3::new(0.0, 0.0, 2.0), 1.5);
        let ids: Vec<usize> = (0..m.n_vertices()).collect();
        assert_eq!(p.pull(&ids), p.parent_vertex);
        for (i, &pv) in p.parent_vertex.iter().enumerate() {
            assert_eq!(p.mesh.vertices()[i], m.vertices()[pv]);
        }
    }
}
