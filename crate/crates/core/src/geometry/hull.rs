//! 3D convex hull (quickhull) over a point set.

use crate::math::Vec3;
use crate::{Error, Result};

#[derive(Debug, Clone)]
struct HullFace {
    verts: [usize; 3],
    normal: Vec3,
    offset: f64, // plane: normal . x = offset
    outside: Vec<usize>,
    alive: bool,
}

impl HullFace {
    fn dist(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

fn make_face(points: &[Vec3], a: usize, b: usize, c: usize) -> HullFace {
    let n = (points[b] - points[a]).cross(points[c] - points[a]).normalized();
    HullFace {
        verts: [a, b, c],
        normal: n,
        offset: n.dot(points[a]),
        outside: Vec::new(),
        alive: true,
    }
}

/// Convex hull faces (outward-wound triangles of input point indices).
///
/// Errors with "degenerate hull" when all points are coplanar.
pub fn convex_hull(points: &[Vec3]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 4 {
        return Err(Error::contract("degenerate hull: fewer than 4 points"));
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for &p in points {
        lo = lo.min_components(p);
        hi = hi.max_components(p);
    }
    let diag = (hi - lo).norm();
    if diag == 0.0 {
        return Err(Error::contract("degenerate hull: coincident points"));
    }
    let eps = diag * 1e-10;

    // Initial simplex: two extreme points, then farthest-from-line, then
    // farthest-from-plane.
    let (mut i0, mut i1) = (0, 0);
    let mut best = -1.0;
    for axis in 0..3 {
        let coord = |p: Vec3| [p.x, p.y, p.z][axis];
        let a = (0..points.len()).min_by(|&x, &y| coord(points[x]).total_cmp(&coord(points[y]))).unwrap();
        let b = (0..points.len()).max_by(|&x, &y| coord(points[x]).total_cmp(&coord(points[y]))).unwrap();
        let d = (points[a] - points[b]).norm();
        if d > best {
            best = d;
            i0 = a;
            i1 = b;
        }
    }
    let dir = (points[i1] - points[i0]).normalized();
    let line_dist = |p: Vec3| {
        let d = p - points[i0];
        (d - dir * d.dot(dir)).norm()
    };
    let i2 = (0..points.len())
        .max_by(|&x, &y| line_dist(points[x]).total_cmp(&line_dist(points[y])))
        .unwrap();
    if line_dist(points[i2]) <= eps {
        return Err(Error::contract("degenerate hull: collinear points"));
    }
    let n = (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
    let plane_dist = |p: Vec3| n.dot(p - points[i0]);
    let i3 = (0..points.len())
        .max_by(|&x, &y| plane_dist(points[x]).abs().total_cmp(&plane_dist(points[y]).abs()))
        .unwrap();
    if plane_dist(points[i3]).abs() <= eps {
        return Err(Error::contract("degenerate hull: coplanar points"));
    }

    // Orient the simplex so faces wind outward.
    let (a, b, c, d) = if plane_dist(points[i3]) < 0.0 {
        (i0, i1, i2, i3)
    } else {
        (i0, i2, i1, i3)
    };
    let mut faces = vec![
        make_face(points, a, b, c),
        make_face(points, a, c, d),
        make_face(points, c, b, d),
        make_face(points, b, a, d),
    ];

    // Assign each point to the first face it lies outside of.
    for p in 0..points.len() {
        if p == a || p == b || p == c || p == d {
            continue;
        }
        for f in faces.iter_mut() {
            if f.dist(points[p]) > eps {
                f.outside.push(p);
                break;
            }
        }
    }

    loop {
        // face with the farthest outside point
        let mut pick: Option<(usize, usize, f64)> = None;
        for (fi, f) in faces.iter().enumerate() {
            if !f.alive || f.outside.is_empty() {
                continue;
            }
            for &p in &f.outside {
                let d = f.dist(points[p]);
                if pick.map_or(true, |(_, _, pd)| d > pd) {
                    pick = Some((fi, p, d));
                }
            }
        }
        let Some((_, apex, _)) = pick else { break };

        // visible set: all live faces that see the apex
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive && f.dist(points[apex]) > eps)
            .map(|(i, _)| i)
            .collect();

        // horizon: directed edges of visible faces whose reverse edge is not
        // in the visible set
        let mut edge_count = std::collections::HashMap::new();
        for &fi in &visible {
            let v = faces[fi].verts;
            for k in 0..3 {
                let e = (v[k], v[(k + 1) % 3]);
                *edge_count.entry(e).or_insert(0) += 1;
            }
        }
        let mut horizon = Vec::new();
        for (&(u, w), _) in &edge_count {
            if !edge_count.contains_key(&(w, u)) {
                horizon.push((u, w));
            }
        }
        horizon.sort_unstable();

        let mut orphans = Vec::new();
        for &fi in &visible {
            faces[fi].alive = false;
            orphans.append(&mut faces[fi].outside);
        }
        orphans.sort_unstable();
        orphans.dedup();

        let mut new_ids = Vec::new();
        for &(u, w) in &horizon {
            let mut f = make_face(points, u, w, apex);
            if f.normal.norm_squared() == 0.0 {
                // collinear horizon edge with apex; skip, points get
                // redistributed to neighbors
                f.alive = false;
            }
            new_ids.push(faces.len());
            faces.push(f);
        }
        for p in orphans {
            if p == apex {
                continue;
            }
            for &fi in &new_ids {
                if faces[fi].alive && faces[fi].dist(points[p]) > eps {
                    faces[fi].outside.push(p);
                    break;
                }
            }
        }
    }

    let mut out: Vec<[usize; 3]> = faces.into_iter().filter(|f| f.alive).map(|f| f.verts).collect();
    out.sort_unstable();
    Ok(out)
}
