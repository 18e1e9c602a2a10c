//! Hole closing: union a mesh with its convex hull and triangulate small
//! interior boundary loops shut.

use std::collections::HashMap;

use crate::geometry::hull::convex_hull;
use crate::geometry::AnnotatedMesh;
use crate::math::Vec3;
use crate::Result;

/// Result of [`close_mesh`]: the closed mesh plus the indices of the faces
/// that belong to the convex-hull outer boundary (for watertightness checks).
#[derive(Debug, Clone)]
pub struct ClosedMesh {
    pub mesh: AnnotatedMesh,
    pub hull_faces: Vec<usize>,
    pub filled_loops: usize,
}

/// True when every edge of the given face subset has exactly 2 incident faces.
pub fn is_watertight(faces: &[[usize; 3]]) -> bool {
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    !faces.is_empty() && count.values().all(|&c| c == 2)
}

/// Boundary loops of a face set: chains of edges with exactly one incident
/// face. Each loop is a cyclic vertex sequence.
pub fn boundary_loops(faces: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    // adjacency over boundary edges
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for (&(a, b), &c) in &count {
        if c == 1 {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    for v in adj.values_mut() {
        v.sort_unstable();
    }

    let mut visited: std::collections::HashSet<(usize, usize)> = Default::default();
    let mut loops = Vec::new();
    let mut starts: Vec<usize> = adj.keys().copied().collect();
    starts.sort_unstable();
    for &start in &starts {
        for &first in &adj[&start] {
            let key = (start.min(first), start.max(first));
            if visited.contains(&key) {
                continue;
            }
            // walk the chain
            let mut chain = vec![start];
            let mut prev = start;
            let mut cur = first;
            visited.insert(key);
            loop {
                chain.push(cur);
                let next = adj[&cur]
                    .iter()
                    .copied()
                    .find(|&n| n != prev && !visited.contains(&(n.min(cur), n.max(cur))));
                match next {
                    Some(n) => {
                        visited.insert((n.min(cur), n.max(cur)));
                        prev = cur;
                        cur = n;
                    }
                    None => break,
                }
            }
            // closed loop when the walk returned to the start
            if chain.len() >= 4 && *chain.last().unwrap() == start {
                chain.pop();
                loops.push(chain);
            } else if chain.len() >= 3 {
                let &end = chain.last().unwrap();
                let closing = (start.min(end), start.max(end));
                if adj[&start].contains(&end) && !visited.contains(&closing) {
                    visited.insert(closing);
                    loops.push(chain);
                }
            }
        }
    }
    loops
}

/// Union the mesh with its convex hull, then triangulate interior boundary
/// loops with perimeter below `small_hole_perimeter` (0.5 m default) shut.
///
/// Hull vertices are original vertices, so they keep their own labels
/// (nearest original vertex at distance zero). Fill-centroid vertices take
/// the label of the nearest loop vertex.
pub fn close_mesh(mesh: &AnnotatedMesh) -> Result<ClosedMesh> {
    close_mesh_with(mesh, 0.5)
}

pub fn close_mesh_with(mesh: &AnnotatedMesh, small_hole_perimeter: f64) -> Result<ClosedMesh> {
    mesh.validate()?;
    let hull = convex_hull(&mesh.vertices)?;

    let mut out = mesh.clone();
    let mut existing: std::collections::HashSet<[usize; 3]> = out
        .faces
        .iter()
        .map(|f| {
            let mut s = *f;
            s.sort_unstable();
            s
        })
        .collect();

    let mut hull_faces = Vec::new();
    for f in &hull {
        let mut key = *f;
        key.sort_unstable();
        if existing.insert(key) {
            hull_faces.push(out.faces.len());
            out.faces.push(*f);
        } else {
            // hull face coincides with an original face
            let idx = out.faces.iter().position(|g| {
                let mut s = *g;
                s.sort_unstable();
                s == key
            });
            hull_faces.push(idx.unwrap());
        }
    }

    // Fill small interior boundary loops of the original surface.
    let loops = boundary_loops(&mesh.faces);
    let mut filled = 0;
    for lp in loops {
        let perimeter: f64 = lp
            .iter()
            .zip(lp.iter().cycle().skip(1))
            .take(lp.len())
            .map(|(&a, &b)| mesh.vertices[a].distance(mesh.vertices[b]))
            .sum();
        if perimeter >= small_hole_perimeter {
            continue;
        }
        let centroid = lp
            .iter()
            .fold(Vec3::ZERO, |acc, &v| acc + mesh.vertices[v])
            / lp.len() as f64;
        let nearest = lp
            .iter()
            .copied()
            .min_by(|&a, &b| {
                mesh.vertices[a]
                    .distance(centroid)
                    .total_cmp(&mesh.vertices[b].distance(centroid))
            })
            .unwrap();
        let c = out.vertices.len();
        out.vertices.push(centroid);
        out.vertex_labels.push(out.vertex_labels[nearest]);
        for i in 0..lp.len() {
            let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
            out.faces.push([c, a, b]);
        }
        filled += 1;
    }

    out.validate()?;
    Ok(ClosedMesh { mesh: out, hull_faces, filled_loops: filled })
}
