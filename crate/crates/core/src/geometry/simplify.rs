//! Label-preserving quadric-error edge-collapse simplification.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::geometry::AnnotatedMesh;
use crate::math::Vec3;
use crate::{Error, Result};

/// Symmetric 4x4 quadric, upper triangle: [a11 a12 a13 a14 a22 a23 a24 a33 a34 a44].
#[derive(Debug, Clone, Copy, Default)]
struct Quadric {
    m: [f64; 10],
}

impl Quadric {
    fn from_plane(a: f64, b: f64, c: f64, d: f64) -> Self {
        Quadric {
            m: [
                a * a,
                a * b,
                a * c,
                a * d,
                b * b,
                b * c,
                b * d,
                c * c,
                c * d,
                d * d,
            ],
        }
    }

    fn add(&mut self, o: &Quadric) {
        for i in 0..10 {
            self.m[i] += o.m[i];
        }
    }

    fn eval(&self, v: Vec3) -> f64 {
        let m = &self.m;
        let (x, y, z) = (v.x, v.y, v.z);
        m[0] * x * x
            + 2.0 * m[1] * x * y
            + 2.0 * m[2] * x * z
            + 2.0 * m[3] * x
            + m[4] * y * y
            + 2.0 * m[5] * y * z
            + 2.0 * m[6] * y
            + m[7] * z * z
            + 2.0 * m[8] * z
            + m[9]
    }

    /// Position minimizing the quadric, or None when the 3x3 system is
    /// near-singular.
    fn optimal(&self) -> Option<Vec3> {
        let m = &self.m;
        let a = [[m[0], m[1], m[2]], [m[1], m[4], m[5]], [m[2], m[5], m[7]]];
        let b = [-m[3], -m[6], -m[8]];
        let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        let scale = a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        if det.abs() <= 1e-12 * scale.powi(3).max(1e-30) {
            return None;
        }
        let inv = |r: usize, c: usize| {
            let idx = |i: usize| (0..3).filter(|&k| k != i).collect::<Vec<_>>();
            let (r0, r1) = (idx(r)[0], idx(r)[1]);
            let (c0, c1) = (idx(c)[0], idx(c)[1]);
            let minor = a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor / det
        };
        // x = A^{-1} b, note adjugate transpose
        let x = inv(0, 0) * b[0] + inv(1, 0) * b[1] + inv(2, 0) * b[2];
        let y = inv(0, 1) * b[0] + inv(1, 1) * b[1] + inv(2, 1) * b[2];
        let z = inv(0, 2) * b[0] + inv(1, 2) * b[1] + inv(2, 2) * b[2];
        let p = Vec3::new(x, y, z);
        p.is_finite().then_some(p)
    }
}

#[derive(Debug)]
struct Candidate {
    cost: f64,
    a: usize,
    b: usize,
    ver_a: u64,
    ver_b: u64,
    target: Vec3,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.a == other.a && self.b == other.b
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

struct Collapser {
    pos: Vec<Vec3>,
    labels: Vec<u32>,
    quadrics: Vec<Quadric>,
    version: Vec<u64>,
    vert_alive: Vec<bool>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    incident: Vec<BTreeSet<usize>>,
    alive_faces: usize,
    heap: BinaryHeap<Reverse<Candidate>>,
}

impl Collapser {
    fn new(mesh: &AnnotatedMesh) -> Self {
        let n = mesh.vertices.len();
        let mut quadrics = vec![Quadric::default(); n];
        let mut incident: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (fi, f) in mesh.faces.iter().enumerate() {
            let (a, b, c) = (mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
            let nrm = (b - a).cross(c - a);
            let area = nrm.norm();
            if area > 0.0 {
                let u = nrm / area;
                let d = -u.dot(a);
                let mut k = Quadric::from_plane(u.x, u.y, u.z, d);
                // area-weighted planes stabilize irregular triangulations
                for v in k.m.iter_mut() {
                    *v *= area * 0.5;
                }
                for &vi in f {
                    quadrics[vi].add(&k);
                }
            }
            for &vi in f {
                incident[vi].insert(fi);
            }
        }
        let mut c = Collapser {
            pos: mesh.vertices.clone(),
            labels: mesh.vertex_labels.clone(),
            quadrics,
            version: vec![0; n],
            vert_alive: vec![true; n],
            faces: mesh.faces.clone(),
            face_alive: vec![true; mesh.faces.len()],
            incident,
            alive_faces: mesh.faces.len(),
            heap: BinaryHeap::new(),
        };
        for (a, b) in mesh.edges() {
            c.push_candidate(a, b);
        }
        c
    }

    fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &fi in &self.incident[v] {
            if self.face_alive[fi] {
                for &u in &self.faces[fi] {
                    if u != v {
                        out.insert(u);
                    }
                }
            }
        }
        out
    }

    fn push_candidate(&mut self, a: usize, b: usize) {
        let (a, b) = (a.min(b), a.max(b));
        let mut q = self.quadrics[a];
        q.add(&self.quadrics[b]);
        let mid = (self.pos[a] + self.pos[b]) * 0.5;
        let mut best = (q.eval(mid), mid);
        for cand in [q.optimal(), Some(self.pos[a]), Some(self.pos[b])].into_iter().flatten() {
            let e = q.eval(cand);
            if e < best.0 {
                best = (e, cand);
            }
        }
        self.heap.push(Reverse(Candidate {
            cost: best.0.max(0.0),
            a,
            b,
            ver_a: self.version[a],
            ver_b: self.version[b],
            target: best.1,
        }));
    }

    fn edge_exists(&self, a: usize, b: usize) -> bool {
        self.incident[a]
            .iter()
            .any(|&fi| self.face_alive[fi] && self.faces[fi].contains(&b))
    }

    /// Would moving `v` to `target` flip any incident face that survives the
    /// collapse of edge (a, b)?
    fn flips_face(&self, v: usize, other: usize, target: Vec3) -> bool {
        for &fi in &self.incident[v] {
            if !self.face_alive[fi] || self.faces[fi].contains(&other) {
                continue;
            }
            let f = self.faces[fi];
            let p = |i: usize| if i == v { target } else { self.pos[i] };
            let before = (self.pos[f[1]] - self.pos[f[0]]).cross(self.pos[f[2]] - self.pos[f[0]]);
            let after = (p(f[1]) - p(f[0])).cross(p(f[2]) - p(f[0]));
            if before.dot(after) <= 0.0 {
                return true;
            }
        }
        false
    }

    /// Collapse edge (a, b) into vertex a at `target`. Returns false when the
    /// candidate is stale or rejected.
    fn try_collapse(&mut self, cand: &Candidate, allow_flips: bool) -> bool {
        let (a, b) = (cand.a, cand.b);
        if !self.vert_alive[a]
            || !self.vert_alive[b]
            || self.version[a] != cand.ver_a
            || self.version[b] != cand.ver_b
            || !self.edge_exists(a, b)
        {
            return false;
        }
        let mut target = cand.target;
        if !allow_flips && (self.flips_face(a, b, target) || self.flips_face(b, a, target)) {
            // fall back to endpoint placements before giving up
            let mut placed = false;
            for alt in [(self.pos[a] + self.pos[b]) * 0.5, self.pos[a], self.pos[b]] {
                if !self.flips_face(a, b, alt) && !self.flips_face(b, a, alt) {
                    target = alt;
                    placed = true;
                    break;
                }
            }
            if !placed {
                return false;
            }
        }

        // label rule: survivor takes the label of the endpoint with smaller
        // combined quadric error; ties go to the lower index
        let mut q = self.quadrics[a];
        q.add(&self.quadrics[b]);
        let (ea, eb) = (q.eval(self.pos[a]), q.eval(self.pos[b]));
        let label = if ea < eb || (ea == eb && a < b) { self.labels[a] } else { self.labels[b] };

        self.pos[a] = target;
        self.labels[a] = label;
        self.quadrics[a] = q;
        self.vert_alive[b] = false;
        self.version[a] += 1;
        self.version[b] += 1;

        let b_faces: Vec<usize> = self.incident[b].iter().copied().collect();
        for fi in b_faces {
            if !self.face_alive[fi] {
                continue;
            }
            if self.faces[fi].contains(&a) {
                // face spanned the collapsed edge: it degenerates
                self.face_alive[fi] = false;
                self.alive_faces -= 1;
                for &v in &self.faces[fi] {
                    self.incident[v].remove(&fi);
                }
            } else {
                for v in self.faces[fi].iter_mut() {
                    if *v == b {
                        *v = a;
                    }
                }
                self.incident[a].insert(fi);
            }
        }
        self.incident[b].clear();

        for n in self.neighbors(a) {
            self.push_candidate(a, n);
        }
        true
    }

    fn run(&mut self, target_faces: usize) {
        let mut allow_flips = false;
        loop {
            if self.alive_faces <= target_faces {
                return;
            }
            match self.heap.pop() {
                Some(Reverse(cand)) => {
                    self.try_collapse(&cand, allow_flips);
                }
                None => {
                    if allow_flips {
                        return;
                    }
                    // rebuild once with flip protection off so the face
                    // budget can always be met
                    allow_flips = true;
                    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
                    for (fi, f) in self.faces.iter().enumerate() {
                        if self.face_alive[fi] {
                            for k in 0..3 {
                                let (x, y) = (f[k], f[(k + 1) % 3]);
                                edges.insert((x.min(y), x.max(y)));
                            }
                        }
                    }
                    for (a, b) in edges {
                        self.push_candidate(a, b);
                    }
                }
            }
        }
    }

    fn into_mesh(self, label_names: Vec<String>) -> AnnotatedMesh {
        let mut remap = vec![usize::MAX; self.pos.len()];
        let mut vertices = Vec::new();
        let mut labels = Vec::new();
        for (i, alive) in self.vert_alive.iter().enumerate() {
            if *alive {
                remap[i] = vertices.len();
                vertices.push(self.pos[i]);
                labels.push(self.labels[i]);
            }
        }
        let faces = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &alive)| alive)
            .map(|(f, _)| [remap[f[0]], remap[f[1]], remap[f[2]]])
            .collect();
        AnnotatedMesh { vertices, faces, vertex_labels: labels, label_names }
    }
}

/// Simplify to at most `ceil(target_ratio * faces)` faces (never below 4).
/// Returns the simplified mesh and any warnings.
pub fn simplify(mesh: &AnnotatedMesh, target_ratio: f64) -> Result<(AnnotatedMesh, Vec<String>)> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::contract("target_ratio must be in (0, 1]"));
    }
    if mesh.faces.len() < 8 {
        return Err(Error::contract("simplify requires >= 8 faces"));
    }
    mesh.validate()?;
    if target_ratio == 1.0 {
        return Ok((mesh.clone(), Vec::new()));
    }
    let mut warnings = Vec::new();
    let mut target = (target_ratio * mesh.faces.len() as f64).ceil() as usize;
    if target < 4 {
        warnings.push(format!("target of {target} faces clamped to 4"));
        target = 4;
    }
    let mut c = Collapser::new(mesh);
    c.run(target);
    let out = c.into_mesh(mesh.label_names.clone());
    Ok((out, warnings))
}
