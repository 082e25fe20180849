//! Wavefront OBJ and OFF readers plus an OBJ writer.
//!
//! The readers are deliberately minimal: OBJ honors `v` and `f` records and
//! skips everything else (normals, texture coordinates, materials, groups);
//! `f` entries of the form `i/t/n` contribute their vertex index only, and
//! negative OBJ indices resolve relative to the vertices seen so far. OFF
//! accepts the plain ASCII variant, ignoring per-vertex or per-face color
//! columns. Faces with more than three vertices are rejected in both formats
//! rather than fanned, since downstream code assumes the triangulation was
//! chosen by the mesh author.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;

use super::{MeshError, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

/// Loads a mesh, inferring the format from the file extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let format = match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ref e) if e == "obj" => MeshFormat::Obj,
        Some(ref e) if e == "off" => MeshFormat::Off,
        _ => return Err(MeshError::UnknownFormat(path.to_path_buf())),
    };
    load_mesh_as(path, format)
}

pub fn load_mesh_as(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriangleMesh, MeshError> {
    let reader = BufReader::new(File::open(path)?);
    match format {
        MeshFormat::Obj => read_obj(reader),
        MeshFormat::Off => read_off(reader),
    }
}

pub fn read_obj(reader: impl BufRead) -> Result<TriangleMesh, MeshError> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = ln + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coord = [0.0; 3];
                for c in &mut coord {
                    *c = tokens
                        .next()
                        .ok_or_else(|| parse_err(lineno, "vertex record needs 3 coordinates"))?
                        .parse::<f64>()
                        .map_err(|e| parse_err(lineno, &format!("bad coordinate: {e}")))?;
                }
                // optional w component and vertex colors are ignored
                vertices.push(Point3::new(coord[0], coord[1], coord[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(MeshError::NonTriangularFace { line: lineno, count: refs.len() });
                }
                let mut face = [0u32; 3];
                for (slot, r) in face.iter_mut().zip(&refs) {
                    let vref = r.split('/').next().unwrap_or("");
                    let raw: i64 = vref
                        .parse()
                        .map_err(|e| parse_err(lineno, &format!("bad vertex reference {vref:?}: {e}")))?;
                    let resolved = if raw > 0 {
                        raw - 1
                    } else if raw < 0 {
                        vertices.len() as i64 + raw
                    } else {
                        return Err(parse_err(lineno, "vertex reference 0 is not valid"));
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(MeshError::IndexOutOfRange {
                            face: faces.len(),
                            index: raw,
                            vertices: vertices.len(),
                        });
                    }
                    *slot = resolved as u32;
                }
                faces.push(face);
            }
            _ => {} // comments and unsupported records
        }
    }
    TriangleMesh::new(vertices, faces)
}

pub fn read_off(reader: impl BufRead) -> Result<TriangleMesh, MeshError> {
    // significant lines: header, counts, then vertex and face records
    let mut lines = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim().to_string();
        if !content.is_empty() {
            lines.push((ln + 1, content));
        }
    }
    let mut iter = lines.into_iter();
    let (lineno, header) = iter.next().ok_or_else(|| parse_err(0, "empty OFF file"))?;
    let mut header_tokens = header.split_whitespace();
    match header_tokens.next() {
        Some("OFF") => {}
        _ => return Err(parse_err(lineno, "missing OFF header")),
    }
    // counts either share the header line or come on the next one
    let rest: Vec<&str> = header_tokens.collect();
    let (counts_line, counts): (usize, Vec<String>) = if rest.is_empty() {
        let (ln, line) = iter.next().ok_or_else(|| parse_err(lineno, "missing OFF counts"))?;
        (ln, line.split_whitespace().map(str::to_string).collect())
    } else {
        (lineno, rest.into_iter().map(str::to_string).collect())
    };
    if counts.len() < 2 {
        return Err(parse_err(counts_line, "OFF counts need at least vertices and faces"));
    }
    let nv: usize = counts[0]
        .parse()
        .map_err(|e| parse_err(counts_line, &format!("bad vertex count: {e}")))?;
    let nf: usize = counts[1]
        .parse()
        .map_err(|e| parse_err(counts_line, &format!("bad face count: {e}")))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = iter.next().ok_or_else(|| parse_err(counts_line, "unexpected end of vertex list"))?;
        let mut tokens = line.split_whitespace();
        let mut coord = [0.0; 3];
        for c in &mut coord {
            *c = tokens
                .next()
                .ok_or_else(|| parse_err(ln, "vertex record needs 3 coordinates"))?
                .parse::<f64>()
                .map_err(|e| parse_err(ln, &format!("bad coordinate: {e}")))?;
        }
        vertices.push(Point3::new(coord[0], coord[1], coord[2]));
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, line) = iter.next().ok_or_else(|| parse_err(counts_line, "unexpected end of face list"))?;
        let mut tokens = line.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| parse_err(ln, "face record needs a vertex count"))?
            .parse()
            .map_err(|e| parse_err(ln, &format!("bad face vertex count: {e}")))?;
        if n != 3 {
            return Err(MeshError::NonTriangularFace { line: ln, count: n });
        }
        let mut face = [0u32; 3];
        for slot in &mut face {
            let raw: i64 = tokens
                .next()
                .ok_or_else(|| parse_err(ln, "face record ended early"))?
                .parse()
                .map_err(|e| parse_err(ln, &format!("bad vertex index: {e}")))?;
            if raw < 0 || raw >= vertices.len() as i64 {
                return Err(MeshError::IndexOutOfRange { face: faces.len(), index: raw, vertices: vertices.len() });
            }
            *slot = raw as u32;
        }
        faces.push(face);
    }
    TriangleMesh::new(vertices, faces)
}

/// Writes OBJ with 17 significant digits so coordinates round-trip exactly.
pub fn write_obj(mesh: &TriangleMesh, mut writer: impl Write) -> std::io::Result<()> {
    writeln!(writer, "# {} vertices, {} faces", mesh.vertex_count(), mesh.face_count())?;
    for v in mesh.vertices() {
        writeln!(writer, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(writer, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_obj(mesh, &mut writer)?;
    writer.flush()?;
    Ok(())
}

fn parse_err(line: usize, message: &str) -> MeshError {
    MeshError::Parse { line, message: message.to_string() }
}
