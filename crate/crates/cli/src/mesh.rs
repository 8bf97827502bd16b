//! ASCII triangle meshes: Wavefront OBJ and ASCII STL.

use qgnbv_core::voxelize::Triangle;
use qgnbv_core::Vec3;

use crate::FormatError;

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64, FormatError> {
    tok.and_then(|t| t.parse::<f64>().ok())
        .ok_or(FormatError::Mesh {
            line,
            msg: "expected a number",
        })
}

/// Vertices and faces of an OBJ file. Polygons are fan-triangulated; texture
/// and normal indices are ignored; negative indices count from the end.
pub fn parse_obj(text: &str) -> Result<Vec<Triangle>, FormatError> {
    let mut verts: Vec<Vec3> = Vec::new();
    let mut tris = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("v") => {
                let x = parse_f64(it.next(), line)?;
                let y = parse_f64(it.next(), line)?;
                let z = parse_f64(it.next(), line)?;
                verts.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let n: i64 = first.parse().map_err(|_| FormatError::Mesh {
                        line,
                        msg: "bad face index",
                    })?;
                    let resolved = if n > 0 {
                        n - 1
                    } else if n < 0 {
                        verts.len() as i64 + n
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved as usize >= verts.len() {
                        return Err(FormatError::Mesh {
                            line,
                            msg: "face index out of range",
                        });
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(FormatError::Mesh {
                        line,
                        msg: "face needs at least three vertices",
                    });
                }
                for k in 1..idx.len() - 1 {
                    tris.push([verts[idx[0]], verts[idx[k]], verts[idx[k + 1]]]);
                }
            }
            _ => {}
        }
    }
    Ok(tris)
}

/// Triangles of an ASCII STL file.
pub fn parse_stl(text: &str) -> Result<Vec<Triangle>, FormatError> {
    let mut tris = Vec::new();
    let mut cur: Vec<Vec3> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("vertex") => {
                let x = parse_f64(it.next(), line)?;
                let y = parse_f64(it.next(), line)?;
                let z = parse_f64(it.next(), line)?;
                cur.push(Vec3::new(x, y, z));
            }
            Some("endfacet") => {
                if cur.len() != 3 {
                    return Err(FormatError::Mesh {
                        line,
                        msg: "facet must have three vertices",
                    });
                }
                tris.push([cur[0], cur[1], cur[2]]);
                cur.clear();
            }
            _ => {}
        }
    }
    Ok(tris)
}
