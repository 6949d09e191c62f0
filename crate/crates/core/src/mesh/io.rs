//! ASCII OBJ and OFF mesh IO, plus curvature CSV export.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{TriMesh, Vec3};
use crate::curvature::CurvatureData;
use crate::{Error, Result};

pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("off") => read_off(&text),
        Some("obj") => read_obj(&text),
        _ => Err(Error::UnknownShape(path.display().to_string())),
    }
}

fn parse_f64(tok: Option<&str>, format: &'static str, line: usize) -> Result<f64> {
    let t = tok.ok_or(Error::Parse {
        format,
        line,
        msg: "missing value".into(),
    })?;
    t.parse().map_err(|_| Error::Parse {
        format,
        line,
        msg: format!("bad number {t:?}"),
    })
}

/// Triangles and polygons (fan-triangulated); texture and normal indices ignored.
pub fn read_obj(text: &str) -> Result<TriMesh> {
    let mut v = Vec::new();
    let mut f = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("v") => {
                let x = parse_f64(it.next(), "obj", line)?;
                let y = parse_f64(it.next(), "obj", line)?;
                let z = parse_f64(it.next(), "obj", line)?;
                v.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in it {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| Error::Parse {
                        format: "obj",
                        line,
                        msg: format!("bad index {tok:?}"),
                    })?;
                    let idx = if i > 0 { i - 1 } else { v.len() as i64 + i };
                    if idx < 0 {
                        return Err(Error::Parse {
                            format: "obj",
                            line,
                            msg: format!("index {i} out of range"),
                        });
                    }
                    poly.push(idx as usize);
                }
                if poly.len() < 3 {
                    return Err(Error::Parse {
                        format: "obj",
                        line,
                        msg: "face with fewer than 3 vertices".into(),
                    });
                }
                for k in 1..poly.len() - 1 {
                    f.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriMesh::new(v, f)
}

pub fn read_off(text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line, msg: &str| Error::Parse {
        format: "off",
        line,
        msg: msg.into(),
    };
    let (l0, head) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let counts_line = if head == "OFF" {
        lines.next().ok_or_else(|| err(l0, "missing counts"))?
    } else if let Some(rest) = head.strip_prefix("OFF") {
        (l0, rest.trim())
    } else {
        return Err(err(l0, "missing OFF header"));
    };
    let counts: Vec<usize> = counts_line
        .1
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(counts_line.0, "bad count")))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(err(counts_line.0, "expected vertex and face counts"));
    }
    let mut v = Vec::with_capacity(counts[0]);
    for _ in 0..counts[0] {
        let (ln, l) = lines.next().ok_or_else(|| err(counts_line.0, "truncated vertex list"))?;
        let mut it = l.split_whitespace();
        let x = parse_f64(it.next(), "off", ln)?;
        let y = parse_f64(it.next(), "off", ln)?;
        let z = parse_f64(it.next(), "off", ln)?;
        v.push(Vec3::new(x, y, z));
    }
    let mut f = Vec::with_capacity(counts[1]);
    for _ in 0..counts[1] {
        let (ln, l) = lines.next().ok_or_else(|| err(counts_line.0, "truncated face list"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(ln, "bad index")))
            .collect::<Result<_>>()?;
        let k = *idx.first().ok_or_else(|| err(ln, "empty face"))?;
        if k < 3 || idx.len() < k + 1 {
            return Err(err(ln, "malformed face"));
        }
        for j in 1..k - 1 {
            f.push([idx[1], idx[j + 1], idx[j + 2]]);
        }
    }
    TriMesh::new(v, f)
}

pub fn write_obj(mesh: &TriMesh, mut w: impl Write) -> Result<()> {
    for p in mesh.vertices() {
        writeln!(w, "v {:.17e} {:.17e} {:.17e}", p.x, p.y, p.z)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn write_off(mesh: &TriMesh, mut w: impl Write) -> Result<()> {
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} {}", mesh.n_vertices(), mesh.n_faces(), mesh.n_edges())?;
    for p in mesh.vertices() {
        writeln!(w, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z)?;
    }
    for f in mesh.faces() {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

pub fn write_curvature_csv(curv: &CurvatureData, mut w: impl Write) -> Result<()> {
    writeln!(w, "vertex_id,H,A_norm2,A3")?;
    for i in 0..curv.h.len() {
        writeln!(w, "{},{:.17e},{:.17e},{:.17e}", i, curv.h[i], curv.a_norm2[i], curv.a3[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_primitive, ShapeSpec};

    #[test]
    fn obj_round_trip_is_bitwise() {
        let m = build_primitive(&ShapeSpec::icosphere(1.3, 2)).unwrap();
        let mut buf = Vec::new();
        write_obj(&m, &mut buf).unwrap();
        let back = read_obj(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(m.content_hash(), back.content_hash());
    }

    #[test]
    fn off_round_trip_is_bitwise() {
        let m = build_primitive(&ShapeSpec::torus(2.0, 0.5, 0)).unwrap();
        let mut buf = Vec::new();
        write_off(&m, &mut buf).unwrap();
        let back = read_off(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(m.content_hash(), back.content_hash());
    }

    #[test]
    fn obj_quads_and_slashes() {
        let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n";
        let m = read_obj(text).unwrap();
        assert_eq!(m.n_faces(), 2);
        assert!((m.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parse_errors_carry_line() {
        match read_obj("v 0 0 0\nv 1 x 0\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(read_off("OFF\n3 1\n0 0 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(read_off("PLY\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn unknown_extension() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mesh.stl");
        fs::write(&p, "solid").unwrap();
        assert!(matches!(read_mesh(&p), Err(Error::UnknownShape(_))));
    }
}
