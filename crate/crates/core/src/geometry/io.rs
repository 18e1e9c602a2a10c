//! Mesh and label-sidecar input/output.
//!
//! Input meshes: OBJ, or ASCII / binary-little-endian PLY. Labels arrive in
//! a sidecar: a JSON array of strings (index = vertex) or two-column CSV
//! `vertex_index,label`. Output is ASCII PLY with a per-vertex integer
//! `label` property plus a label-dictionary JSON next to it.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::Path;

use crate::geometry::AnnotatedMesh;
use crate::math::Vec3;
use crate::{Error, Result};

/// Geometry without labels, as parsed from disk.
#[derive(Debug, Clone, Default)]
pub struct RawMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    /// per-vertex integer labels if the file itself carries them (our PLY output)
    pub vertex_label_ids: Option<Vec<u32>>,
}

pub fn parse_obj(text: &str) -> Result<RawMesh> {
    let mut mesh = RawMesh::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coord = [0.0; 3];
                for c in coord.iter_mut() {
                    *c = it
                        .next()
                        .ok_or_else(|| Error::parse(format!("obj line {}: short vertex", lineno + 1)))?
                        .parse::<f64>()
                        .map_err(|e| Error::parse(format!("obj line {}: {e}", lineno + 1)))?;
                }
                mesh.vertices.push(coord.into());
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or(tok);
                        first
                            .parse::<isize>()
                            .map_err(|e| Error::parse(format!("obj line {}: {e}", lineno + 1)))
                            .and_then(|i| {
                                let n = mesh.vertices.len() as isize;
                                let i = if i < 0 { n + i } else { i - 1 };
                                if i < 0 || i >= n {
                                    Err(Error::parse(format!(
                                        "obj line {}: face index out of range",
                                        lineno + 1
                                    )))
                                } else {
                                    Ok(i as usize)
                                }
                            })
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse(format!("obj line {}: face with < 3 vertices", lineno + 1)));
                }
                // fan-triangulate polygons
                for k in 1..idx.len() - 1 {
                    mesh.faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(mesh)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            other => return Err(Error::parse(format!("unknown ply type {other}"))),
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn read_le(self, buf: &[u8]) -> f64 {
        match self {
            PlyType::I8 => buf[0] as i8 as f64,
            PlyType::U8 => buf[0] as f64,
            PlyType::I16 => i16::from_le_bytes([buf[0], buf[1]]) as f64,
            PlyType::U16 => u16::from_le_bytes([buf[0], buf[1]]) as f64,
            PlyType::I32 => i32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            PlyType::U32 => u32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            PlyType::F32 => f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            PlyType::F64 => f64::from_le_bytes(buf[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum PlyProperty {
    Scalar { name: String, ty: PlyType },
    List { name: String, count_ty: PlyType, item_ty: PlyType },
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

pub fn parse_ply(data: &[u8]) -> Result<RawMesh> {
    let header_end = data
        .windows(10)
        .position(|w| w == b"end_header")
        .ok_or_else(|| Error::parse("ply: missing end_header"))?;
    let mut body_start = header_end + 10;
    while body_start < data.len() && (data[body_start] == b'\r' || data[body_start] == b'\n') {
        body_start += 1;
        if data[body_start - 1] == b'\n' {
            break;
        }
    }
    let header = std::str::from_utf8(&data[..header_end])
        .map_err(|_| Error::parse("ply: non-utf8 header"))?;

    let mut lines = header.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(Error::parse("ply: missing magic"));
    }
    let mut binary = false;
    let mut elements: Vec<PlyElement> = Vec::new();
    for line in lines {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("format") => match it.next() {
                Some("ascii") => binary = false,
                Some("binary_little_endian") => binary = true,
                other => return Err(Error::parse(format!("ply: unsupported format {other:?}"))),
            },
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = it.next().ok_or_else(|| Error::parse("ply: element name"))?;
                let count: usize = it
                    .next()
                    .ok_or_else(|| Error::parse("ply: element count"))?
                    .parse()
                    .map_err(|e| Error::parse(format!("ply: {e}")))?;
                elements.push(PlyElement { name: name.into(), count, properties: Vec::new() });
            }
            Some("property") => {
                let elem = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse("ply: property before element"))?;
                let first = it.next().ok_or_else(|| Error::parse("ply: property type"))?;
                if first == "list" {
                    let count_ty = PlyType::parse(it.next().ok_or_else(|| Error::parse("ply: list count type"))?)?;
                    let item_ty = PlyType::parse(it.next().ok_or_else(|| Error::parse("ply: list item type"))?)?;
                    let name = it.next().ok_or_else(|| Error::parse("ply: list name"))?;
                    elem.properties.push(PlyProperty::List { name: name.into(), count_ty, item_ty });
                } else {
                    let ty = PlyType::parse(first)?;
                    let name = it.next().ok_or_else(|| Error::parse("ply: property name"))?;
                    elem.properties.push(PlyProperty::Scalar { name: name.into(), ty });
                }
            }
            _ => {}
        }
    }

    let mut mesh = RawMesh::default();
    let mut labels: Vec<u32> = Vec::new();
    let mut has_labels = false;

    if binary {
        let mut pos = body_start;
        for elem in &elements {
            for _ in 0..elem.count {
                let mut scalars: HashMap<&str, f64> = HashMap::new();
                let mut list: Vec<f64> = Vec::new();
                for prop in &elem.properties {
                    match prop {
                        PlyProperty::Scalar { name, ty } => {
                            if pos + ty.size() > data.len() {
                                return Err(Error::parse("ply: truncated body"));
                            }
                            scalars.insert(name, ty.read_le(&data[pos..]));
                            pos += ty.size();
                        }
                        PlyProperty::List { count_ty, item_ty, .. } => {
                            if pos + count_ty.size() > data.len() {
                                return Err(Error::parse("ply: truncated body"));
                            }
                            let n = count_ty.read_le(&data[pos..]) as usize;
                            pos += count_ty.size();
                            list.clear();
                            for _ in 0..n {
                                if pos + item_ty.size() > data.len() {
                                    return Err(Error::parse("ply: truncated body"));
                                }
                                list.push(item_ty.read_le(&data[pos..]));
                                pos += item_ty.size();
                            }
                        }
                    }
                }
                ingest_element(elem, &scalars, &list, &mut mesh, &mut labels, &mut has_labels)?;
            }
        }
    } else {
        let body = std::str::from_utf8(&data[body_start..])
            .map_err(|_| Error::parse("ply: non-utf8 ascii body"))?;
        let mut tokens = body.split_whitespace();
        let mut next_f64 = |what: &str| -> Result<f64> {
            tokens
                .next()
                .ok_or_else(|| Error::parse(format!("ply: unexpected end of body at {what}")))?
                .parse::<f64>()
                .map_err(|e| Error::parse(format!("ply: {e}")))
        };
        for elem in &elements {
            for _ in 0..elem.count {
                let mut scalars: HashMap<&str, f64> = HashMap::new();
                let mut list: Vec<f64> = Vec::new();
                for prop in &elem.properties {
                    match prop {
                        PlyProperty::Scalar { name, .. } => {
                            scalars.insert(name, next_f64(name)?);
                        }
                        PlyProperty::List { name, .. } => {
                            let n = next_f64(name)? as usize;
                            list.clear();
                            for _ in 0..n {
                                list.push(next_f64(name)?);
                            }
                        }
                    }
                }
                ingest_element(elem, &scalars, &list, &mut mesh, &mut labels, &mut has_labels)?;
            }
        }
    }

    if has_labels {
        if labels.len() != mesh.vertices.len() {
            return Err(Error::parse("ply: label property missing on some vertices"));
        }
        mesh.vertex_label_ids = Some(labels);
    }
    Ok(mesh)
}

fn ingest_element(
    elem: &PlyElement,
    scalars: &HashMap<&str, f64>,
    list: &[f64],
    mesh: &mut RawMesh,
    labels: &mut Vec<u32>,
    has_labels: &mut bool,
) -> Result<()> {
    match elem.name.as_str() {
        "vertex" => {
            let get = |k: &str| {
                scalars
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::parse(format!("ply: vertex missing {k}")))
            };
            mesh.vertices.push(Vec3::new(get("x")?, get("y")?, get("z")?));
            if let Some(&l) = scalars.get("label") {
                *has_labels = true;
                labels.push(l as u32);
            }
        }
        "face" => {
            if list.len() < 3 {
                return Err(Error::parse("ply: face with < 3 vertices"));
            }
            let idx: Vec<usize> = list.iter().map(|&v| v as usize).collect();
            for k in 1..idx.len() - 1 {
                mesh.faces.push([idx[0], idx[k], idx[k + 1]]);
            }
        }
        _ => {}
    }
    Ok(())
}

/// Parse a label sidecar: JSON array of strings, or CSV `vertex_index,label`.
pub fn parse_labels(text: &str, n_vertices: usize) -> Result<Vec<String>> {
    let trimmed = text.trim_start();
    let labels: Vec<String> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed)?
    } else {
        let mut out = vec![None::<String>; n_vertices];
        let mut count = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (idx, label) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(format!("labels line {}: expected index,label", lineno + 1)))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|e| Error::parse(format!("labels line {}: {e}", lineno + 1)))?;
            if idx >= n_vertices {
                return Err(Error::parse(format!("labels line {}: vertex index {idx} out of range", lineno + 1)));
            }
            out[idx] = Some(label.trim().to_string());
            count += 1;
        }
        if count != n_vertices || out.iter().any(Option::is_none) {
            return Err(Error::contract(format!(
                "label count mismatch: {count} labels for {n_vertices} vertices"
            )));
        }
        out.into_iter().map(Option::unwrap).collect()
    };
    if labels.len() != n_vertices {
        return Err(Error::contract(format!(
            "label count mismatch: {} labels for {} vertices",
            labels.len(),
            n_vertices
        )));
    }
    Ok(labels)
}

/// Load a mesh (OBJ or PLY by extension) plus a label sidecar, validate,
/// merge near-duplicate vertices (1e-6 m) and drop degenerate faces.
/// Returns the mesh and human-readable warnings.
pub fn load_annotated_mesh(mesh_path: &Path, labels_path: &Path) -> Result<(AnnotatedMesh, Vec<String>)> {
    let ext = mesh_path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let raw = match ext.as_str() {
        "obj" => parse_obj(&std::fs::read_to_string(mesh_path)?)?,
        "ply" => parse_ply(&std::fs::read(mesh_path)?)?,
        other => return Err(Error::parse(format!("unsupported mesh extension .{other}"))),
    };
    if raw.vertices.is_empty() || raw.faces.is_empty() {
        return Err(Error::contract("empty mesh"));
    }
    let label_strings = parse_labels(&std::fs::read_to_string(labels_path)?, raw.vertices.len())?;

    let mut label_names: Vec<String> = Vec::new();
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let vertex_labels: Vec<u32> = label_strings
        .iter()
        .map(|l| {
            *ids.entry(l.as_str()).or_insert_with(|| {
                label_names.push(l.clone());
                (label_names.len() - 1) as u32
            })
        })
        .collect();

    let mut mesh = AnnotatedMesh {
        vertices: raw.vertices,
        faces: raw.faces,
        vertex_labels,
        label_names,
    };
    // validate indices before dedupe so out-of-range faces surface as errors
    for f in &mesh.faces {
        for &i in f {
            if i >= mesh.vertices.len() {
                return Err(Error::parse(format!("face index {i} out of range")));
            }
        }
    }
    let (merged, dropped) = mesh.dedupe(1e-6);
    let mut warnings = Vec::new();
    if merged > 0 {
        warnings.push(format!("merged {merged} duplicate vertices (tol 1e-6 m)"));
    }
    if dropped > 0 {
        warnings.push(format!("dropped {dropped} degenerate faces"));
    }
    if mesh.faces.is_empty() {
        return Err(Error::contract("empty mesh after degenerate-face removal"));
    }
    mesh.validate()?;
    Ok((mesh, warnings))
}

/// Write ASCII PLY with a per-vertex integer `label` property, plus
/// `<path>.labels.json` holding the label dictionary (id order = array order).
pub fn save_labeled_ply(mesh: &AnnotatedMesh, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "ply")?;
    writeln!(f, "format ascii 1.0")?;
    writeln!(f, "element vertex {}", mesh.vertices.len())?;
    writeln!(f, "property double x")?;
    writeln!(f, "property double y")?;
    writeln!(f, "property double z")?;
    writeln!(f, "property int label")?;
    writeln!(f, "element face {}", mesh.faces.len())?;
    writeln!(f, "property list uchar int vertex_indices")?;
    writeln!(f, "end_header")?;
    for (v, &l) in mesh.vertices.iter().zip(&mesh.vertex_labels) {
        writeln!(f, "{} {} {} {}", v.x, v.y, v.z, l)?;
    }
    for face in &mesh.faces {
        writeln!(f, "3 {} {} {}", face[0], face[1], face[2])?;
    }
    f.flush()?;
    let dict_path = path.with_extension("labels.json");
    std::fs::write(dict_path, serde_json::to_string_pretty(&mesh.label_names)?)?;
    Ok(())
}

/// Load a mesh previously written by [`save_labeled_ply`].
pub fn load_labeled_ply(path: &Path) -> Result<AnnotatedMesh> {
    let raw = parse_ply(&std::fs::read(path)?)?;
    let ids = raw
        .vertex_label_ids
        .ok_or_else(|| Error::parse("ply: missing per-vertex label property"))?;
    let label_names: Vec<String> =
        serde_json::from_str(&std::fs::read_to_string(path.with_extension("labels.json"))?)?;
    let mesh = AnnotatedMesh {
        vertices: raw.vertices,
        faces: raw.faces,
        vertex_labels: ids,
        label_names,
    };
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::box_mesh;

    const CUBE_OBJ: &str = "\
v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\nf 3 4 8\nf 3 8 7\nf 1 5 8\nf 1 8 4\nf 2 3 7\nf 2 7 6\n";

    #[test]
    fn load_cube_obj_with_json_labels() {
        let dir = tempfile::tempdir().unwrap();
        let mesh_path = dir.path().join("cube.obj");
        let labels_path = dir.path().join("cube.labels.json");
        std::fs::write(&mesh_path, CUBE_OBJ).unwrap();
        std::fs::write(&labels_path, serde_json::to_string(&vec!["wall"; 8]).unwrap()).unwrap();
        let (mesh, warnings) = load_annotated_mesh(&mesh_path, &labels_path).unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        assert_eq!(mesh.faces.len(), 12);
        assert!(mesh.vertex_labels.iter().all(|&l| mesh.label_names[l as usize] == "wall"));
        assert!(warnings.is_empty());
    }

    #[test]
    fn zero_area_face_dropped_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        let mesh_path = dir.path().join("m.obj");
        // triangle + a zero-area face (three collinear points)
        let obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 3\nf 1 2 4\n";
        std::fs::write(&mesh_path, obj).unwrap();
        let labels_path = dir.path().join("m.csv");
        std::fs::write(&labels_path, "0,wall\n1,wall\n2,wall\n3,wall\n").unwrap();
        let (mesh, warnings) = load_annotated_mesh(&mesh_path, &labels_path).unwrap();
        assert_eq!(mesh.faces.len(), 1);
        assert!(warnings.iter().any(|w| w.contains("degenerate")));
    }

    #[test]
    fn label_count_mismatch_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mesh_path = dir.path().join("cube.obj");
        std::fs::write(&mesh_path, CUBE_OBJ).unwrap();
        let labels_path = dir.path().join("cube.labels.json");
        std::fs::write(&labels_path, serde_json::to_string(&vec!["wall"; 7]).unwrap()).unwrap();
        let err = load_annotated_mesh(&mesh_path, &labels_path).unwrap_err();
        assert!(err.to_string().contains("label count mismatch"));
    }

    #[test]
    fn labeled_ply_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = box_mesh(Vec3::ZERO, Vec3::new(1.0, 2.0, 3.0), "wall");
        let floor = m.intern_label("floor");
        m.vertex_labels[0] = floor;
        let path = dir.path().join("out.ply");
        save_labeled_ply(&m, &path).unwrap();
        let back = load_labeled_ply(&path).unwrap();
        assert_eq!(back.vertices.len(), 8);
        assert_eq!(back.faces.len(), 12);
        assert_eq!(back.label_of(0), "floor");
        assert_eq!(back.label_of(1), "wall");
    }

    #[test]
    fn binary_ply_parses() {
        // hand-build a binary_little_endian PLY with one triangle
        let mut data = Vec::new();
        data.extend_from_slice(
            b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n",
        );
        for v in [[0f32, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
            for c in v {
                data.extend_from_slice(&c.to_le_bytes());
            }
        }
        data.push(3);
        for i in [0i32, 1, 2] {
            data.extend_from_slice(&i.to_le_bytes());
        }
        let mesh = parse_ply(&data).unwrap();
        assert_eq!(mesh.vertices.len(), 3);
        assert_eq!(mesh.faces, vec![[0, 1, 2]]);
    }
}
