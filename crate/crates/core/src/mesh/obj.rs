use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{QuadMesh, TriMesh};
use crate::error::{Error, Result};
use crate::scalar::{Real, Vec3};

/// Mesh with arbitrary polygonal faces, as read from an OBJ file.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMesh<T: Real> {
    pub vertices: Vec<Vec3<T>>,
    pub faces: Vec<Vec<usize>>,
}

impl<T: Real> PolyMesh<T> {
    /// Fan triangulation from each face's first vertex.
    pub fn to_tri_mesh(&self) -> TriMesh<T> {
        let mut tris = Vec::new();
        for f in &self.faces {
            for k in 1..f.len().saturating_sub(1) {
                tris.push([f[0], f[k], f[k + 1]]);
            }
        }
        TriMesh::new(self.vertices.clone(), tris)
    }
}

impl<T: Real> From<&QuadMesh<T>> for PolyMesh<T> {
    fn from(q: &QuadMesh<T>) -> Self {
        PolyMesh {
            vertices: q.vertices.clone(),
            faces: q.quads.iter().map(|f| f.to_vec()).collect(),
        }
    }
}

impl<T: Real> From<&TriMesh<T>> for PolyMesh<T> {
    fn from(t: &TriMesh<T>) -> Self {
        PolyMesh {
            vertices: t.vertices.clone(),
            faces: t.triangles.iter().map(|f| f.to_vec()).collect(),
        }
    }
}

/// OBJ text with 1-based indices and 17 significant digits per coordinate.
pub fn write_obj_string<T: Real>(mesh: &PolyMesh<T>) -> String {
    let mut out = String::with_capacity(mesh.vertices.len() * 72 + mesh.faces.len() * 24);
    for v in &mesh.vertices {
        writeln!(out, "v {:.16e} {:.16e} {:.16e}", v.x.as_f64(), v.y.as_f64(), v.z.as_f64()).unwrap();
    }
    for f in &mesh.faces {
        out.push('f');
        for i in f {
            write!(out, " {}", i + 1).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_obj<T: Real>(mesh: &PolyMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_obj_string(mesh))?;
    Ok(())
}

pub fn parse_obj<T: Real>(src: &str) -> Result<PolyMesh<T>> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut offset = 0;
    for line in src.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [T::zero(); 3];
                for slot in &mut c {
                    let tok = it.next().ok_or_else(|| Error::parse(start, "vertex needs 3 coordinates"))?;
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| Error::parse(start, format!("invalid coordinate `{tok}`")))?;
                    *slot = T::lit(v);
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut face = Vec::new();
                for tok in it {
                    let idx = tok.split('/').next().unwrap_or("");
                    let n: i64 = idx
                        .parse()
                        .map_err(|_| Error::parse(start, format!("invalid face index `{tok}`")))?;
                    let resolved = if n > 0 {
                        n - 1
                    } else if n < 0 {
                        vertices.len() as i64 + n
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(Error::parse(start, format!("face index {n} out of range")));
                    }
                    face.push(resolved as usize);
                }
                if face.len() < 3 {
                    return Err(Error::parse(start, "face needs at least 3 vertices"));
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Ok(PolyMesh { vertices, faces })
}

pub fn read_obj<T: Real>(path: impl AsRef<Path>) -> Result<PolyMesh<T>> {
    parse_obj(&fs::read_to_string(path)?)
}
