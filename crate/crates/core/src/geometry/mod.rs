//! Annotated triangle meshes: loading, hole closing, face labeling, and
//! label-preserving simplification.

pub mod close;
pub mod hull;
pub mod io;
pub mod simplify;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::math::Vec3;
use crate::{Error, Result};

/// Triangle mesh with one semantic label per vertex. Labels are interned:
/// `vertex_labels` indexes into `label_names`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatedMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub vertex_labels: Vec<u32>,
    pub label_names: Vec<String>,
}

/// Mesh with a label per face (majority vote of its vertices).
#[derive(Debug, Clone)]
pub struct FaceLabeledMesh {
    pub mesh: AnnotatedMesh,
    pub face_labels: Vec<u32>,
}

impl AnnotatedMesh {
    pub fn label_of(&self, vertex: usize) -> &str {
        &self.label_names[self.vertex_labels[vertex] as usize]
    }

    /// Intern a label name, returning its id.
    pub fn intern_label(&mut self, name: &str) -> u32 {
        if let Some(i) = self.label_names.iter().position(|n| n == name) {
            i as u32
        } else {
            self.label_names.push(name.to_string());
            (self.label_names.len() - 1) as u32
        }
    }

    /// Check all structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() || self.faces.is_empty() {
            return Err(Error::contract("empty mesh"));
        }
        if self.vertex_labels.len() != self.vertices.len() {
            return Err(Error::contract(format!(
                "label count mismatch: {} labels for {} vertices",
                self.vertex_labels.len(),
                self.vertices.len()
            )));
        }
        for v in &self.vertices {
            if !v.is_finite() {
                return Err(Error::contract("non-finite vertex coordinate"));
            }
        }
        for f in &self.faces {
            for &i in f {
                if i >= self.vertices.len() {
                    return Err(Error::contract(format!("face index {i} out of range")));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::contract("face references the same vertex twice"));
            }
        }
        for &l in &self.vertex_labels {
            if l as usize >= self.label_names.len() {
                return Err(Error::contract("vertex label id out of range"));
            }
        }
        Ok(())
    }

    pub fn aabb(&self) -> (Vec3, Vec3) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for &v in &self.vertices[1..] {
            lo = lo.min_components(v);
            hi = hi.max_components(v);
        }
        (lo, hi)
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (b - a).cross(c - a).norm() * 0.5
    }

    /// Unique undirected edges (i < j).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = std::collections::BTreeSet::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.into_iter().collect()
    }

    /// Merge vertices closer than `tol` and drop degenerate faces.
    /// Returns the number of merged vertices and dropped faces.
    pub fn dedupe(&mut self, tol: f64) -> (usize, usize) {
        let quant = |v: Vec3| {
            (
                (v.x / tol).round() as i64,
                (v.y / tol).round() as i64,
                (v.z / tol).round() as i64,
            )
        };
        let mut cell_to_new: HashMap<(i64, i64, i64), usize> = HashMap::new();
        let mut remap = vec![0usize; self.vertices.len()];
        let mut new_vertices: Vec<Vec3> = Vec::new();
        let mut new_labels = Vec::new();
        for (i, &v) in self.vertices.iter().enumerate() {
            let key = quant(v);
            match cell_to_new.get(&key) {
                Some(&j) if (new_vertices[j] - v).norm() <= tol => remap[i] = j,
                _ => {
                    let j = new_vertices.len();
                    cell_to_new.insert(key, j);
                    new_vertices.push(v);
                    new_labels.push(self.vertex_labels[i]);
                    remap[i] = j;
                }
            }
        }
        let merged = self.vertices.len() - new_vertices.len();

        let mut dropped = 0;
        let mut new_faces = Vec::with_capacity(self.faces.len());
        for f in &self.faces {
            let g = [remap[f[0]], remap[f[1]], remap[f[2]]];
            if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
                dropped += 1;
                continue;
            }
            let (a, b, c) = (new_vertices[g[0]], new_vertices[g[1]], new_vertices[g[2]]);
            if (b - a).cross(c - a).norm() * 0.5 <= 0.0 {
                dropped += 1;
                continue;
            }
            new_faces.push(g);
        }
        self.vertices = new_vertices;
        self.vertex_labels = new_labels;
        self.faces = new_faces;
        (merged, dropped)
    }
}

/// Label each face by majority vote of its 3 vertex labels; a 3-way tie
/// takes the label of the face's lowest vertex index.
pub fn vertex_to_face_labels(mesh: &AnnotatedMesh) -> FaceLabeledMesh {
    let face_labels = mesh
        .faces
        .iter()
        .map(|f| {
            let l = [
                mesh.vertex_labels[f[0]],
                mesh.vertex_labels[f[1]],
                mesh.vertex_labels[f[2]],
            ];
            if l[0] == l[1] || l[0] == l[2] {
                l[0]
            } else if l[1] == l[2] {
                l[1]
            } else {
                // all distinct: lowest vertex index wins
                let min = f.iter().enumerate().min_by_key(|(_, &v)| v).unwrap().0;
                l[min]
            }
        })
        .collect();
    FaceLabeledMesh { mesh: mesh.clone(), face_labels }
}

/// Axis-aligned box mesh helper used across tests and benchmarks.
/// Faces wind outward. `label` is applied to every vertex.
pub fn box_mesh(lo: Vec3, hi: Vec3, label: &str) -> AnnotatedMesh {
    let v = vec![
        Vec3::new(lo.x, lo.y, lo.z),
        Vec3::new(hi.x, lo.y, lo.z),
        Vec3::new(hi.x, hi.y, lo.z),
        Vec3::new(lo.x, hi.y, lo.z),
        Vec3::new(lo.x, lo.y, hi.z),
        Vec3::new(hi.x, lo.y, hi.z),
        Vec3::new(hi.x, hi.y, hi.z),
        Vec3::new(lo.x, hi.y, hi.z),
    ];
    let faces = vec![
        // bottom (z = lo.z), outward -z
        [0, 2, 1],
        [0, 3, 2],
        // top (z = hi.z), outward +z
        [4, 5, 6],
        [4, 6, 7],
        // front (y = lo.y), outward -y
        [0, 1, 5],
        [0, 5, 4],
        // back (y = hi.y), outward +y
        [2, 3, 7],
        [2, 7, 6],
        // left (x = lo.x), outward -x
        [0, 4, 7],
        [0, 7, 3],
        // right (x = hi.x), outward +x
        [1, 2, 6],
        [1, 6, 5],
    ];
    AnnotatedMesh {
        vertices: v,
        faces,
        vertex_labels: vec![0; 8],
        label_names: vec![label.to_string()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_label_majority() {
        let mut m = box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), "wall");
        let floor = m.intern_label("floor");
        m.vertex_labels[2] = floor; // face [0,2,1]: wall, floor, wall -> wall
        let fl = vertex_to_face_labels(&m);
        assert_eq!(fl.face_labels[0], 0);
    }

    #[test]
    fn face_label_tie_breaks_on_lowest_index() {
        let mut m = AnnotatedMesh {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            faces: vec![[2, 0, 1]],
            vertex_labels: vec![0, 0, 0],
            label_names: vec!["wall".into()],
        };
        let floor = m.intern_label("floor");
        let sofa = m.intern_label("sofa");
        m.vertex_labels = vec![0, floor, sofa]; // all distinct
        let fl = vertex_to_face_labels(&m);
        // lowest vertex index in the face is 0, labeled "wall"
        assert_eq!(fl.face_labels[0], 0);
    }

    #[test]
    fn uniform_mesh_keeps_label() {
        let m = box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), "wall");
        let fl = vertex_to_face_labels(&m);
        assert!(fl.face_labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn cube_has_18_edges() {
        let m = box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), "wall");
        assert_eq!(m.edges().len(), 18);
    }

    #[test]
    fn dedupe_merges_and_drops() {
        let mut m = AnnotatedMesh {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(1e-9, 0.0, 0.0), // duplicate of vertex 0
            ],
            faces: vec![[0, 1, 2], [3, 1, 2]],
            vertex_labels: vec![0, 0, 0, 0],
            label_names: vec!["wall".into()],
        };
        let (merged, dropped) = m.dedupe(1e-6);
        assert_eq!(merged, 1);
        assert_eq!(dropped, 0);
        assert_eq!(m.faces.len(), 2);
        assert_eq!(m.vertices.len(), 3);
    }
}
