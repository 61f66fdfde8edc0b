//! Minimal Wavefront OBJ reader/writer.
//!
//! Only `v` and `f` records matter here; normals, texture coordinates and
//! grouping statements are ignored. Faces with more than three vertices
//! are fan-triangulated deterministically. Vertex coordinates are written
//! with shortest-round-trip formatting so write/parse is lossless.

use std::collections::BTreeMap;

use super::{Mesh, MeshError};

pub fn parse_obj(text: &str) -> Result<Mesh, MeshError> {
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for slot in &mut coords {
                    let field = fields.next().ok_or_else(|| MeshError::Obj {
                        line,
                        detail: "vertex needs 3 coordinates".into(),
                    })?;
                    *slot = field.parse().map_err(|_| MeshError::Obj {
                        line,
                        detail: format!("bad coordinate '{field}'"),
                    })?;
                }
                vertices.push(coords);
            }
            Some("f") => {
                let mut indices: Vec<u32> = Vec::new();
                for field in fields {
                    let first = field.split('/').next().unwrap_or("");
                    let parsed: i64 = first.parse().map_err(|_| MeshError::Obj {
                        line,
                        detail: format!("bad face index '{field}'"),
                    })?;
                    if parsed < 1 || parsed as usize > vertices.len() {
                        return Err(MeshError::Obj {
                            line,
                            detail: format!("face index {parsed} out of range"),
                        });
                    }
                    indices.push((parsed - 1) as u32);
                }
                if indices.len() < 3 {
                    return Err(MeshError::Obj {
                        line,
                        detail: "face needs at least 3 vertices".into(),
                    });
                }
                for i in 1..indices.len() - 1 {
                    faces.push([indices[0], indices[i], indices[i + 1]]);
                }
            }
            _ => {} // vn, vt, o, g, s, usemtl, mtllib ...
        }
    }

    Ok(Mesh {
        vertices,
        faces,
        landmarks: BTreeMap::new(),
    })
}

pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        out.push_str(&format!("v {} {} {}\n", v[0], v[1], v[2]));
    }
    for f in &mesh.faces {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    out
}
