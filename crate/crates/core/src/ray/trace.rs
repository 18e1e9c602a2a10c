//! Energy ray propagation with band absorption, specular/diffuse
//! branching, a detection-sphere receiver, and ITD/ILD binauralization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dsp::bands::{BAND_CENTERS, N_BANDS};
use crate::materials::MaterialAnnotatedMesh;
use crate::math::Vec3;
use crate::ray::{point_in_mesh, Arrival, EnergyHistogram, HeadModel, SimConfig};
use crate::{Error, Result};

/// Minimum ray parameter accepted as a hit, to step off the surface a ray
/// just reflected from.
const T_EPS: f64 = 1e-9;

/// Moller-Trumbore ray/triangle intersection; returns the ray parameter.
pub fn ray_triangle(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    if t > 0.0 {
        Some(t)
    } else {
        None
    }
}

struct Tri {
    a: Vec3,
    b: Vec3,
    c: Vec3,
    normal: Vec3,
}

fn triangles(scene: &MaterialAnnotatedMesh) -> Vec<Tri> {
    scene
        .mesh
        .faces
        .iter()
        .map(|f| {
            let (a, b, c) = (
                scene.mesh.vertices[f[0]],
                scene.mesh.vertices[f[1]],
                scene.mesh.vertices[f[2]],
            );
            Tri { a, b, c, normal: (b - a).cross(c - a).normalized() }
        })
        .collect()
}

fn nearest_hit(tris: &[Tri], origin: Vec3, dir: Vec3) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, t) in tris.iter().enumerate() {
        if let Some(tt) = ray_triangle(origin, dir, t.a, t.b, t.c) {
            if tt > T_EPS && best.map_or(true, |(bt, _)| tt < bt) {
                best = Some((tt, i));
            }
        }
    }
    best
}

fn segment_occluded(tris: &[Tri], from: Vec3, to: Vec3) -> bool {
    let d = to - from;
    let len = d.norm();
    let dir = d / len;
    tris.iter().any(|t| {
        ray_triangle(from, dir, t.a, t.b, t.c)
            .map_or(false, |tt| tt > 1e-7 && tt < len - 1e-7)
    })
}

/// First crossing parameter of the segment [origin, origin + dir * t_max]
/// with the sphere (center, radius). Rays starting inside the sphere are
/// skipped.
fn sphere_entry(origin: Vec3, dir: Vec3, center: Vec3, radius: f64, t_max: f64) -> Option<f64> {
    let oc = origin - center;
    if oc.norm_squared() < radius * radius {
        return None;
    }
    let b = oc.dot(dir);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    if t > T_EPS && t < t_max {
        Some(t)
    } else {
        None
    }
}

fn uniform_sphere(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Cosine-weighted hemisphere direction about `normal`.
fn cosine_weighted(normal: Vec3, rng: &mut ChaCha8Rng) -> Vec3 {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let r = u1.sqrt();
    let phi = std::f64::consts::TAU * u2;
    let (x, y) = (r * phi.cos(), r * phi.sin());
    let z = (1.0 - u1).max(0.0).sqrt();
    // orthonormal basis around the normal
    let t = if normal.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let b1 = normal.cross(t).normalized();
    let b2 = normal.cross(b1);
    (b1 * x + b2 * y + normal * z).normalized()
}

fn air_factor(cfg: &SimConfig, band: usize, dist: f64) -> f64 {
    let db = cfg.air_absorption_db_per_m[band];
    if db == 0.0 {
        1.0
    } else {
        10f64.powf(-db * dist / 10.0)
    }
}

/// Trace one ray; returns its detector crossings in path order. The direct
/// (depth 0) segment never deposits — the direct path is added analytically
/// by `trace`.
fn trace_ray(
    tris: &[Tri],
    scene: &MaterialAnnotatedMesh,
    source: Vec3,
    listener: Vec3,
    cfg: &SimConfig,
    seed: u64,
    ray_idx: usize,
) -> Vec<Arrival> {
    let e0 = 1.0 / cfg.n_rays as f64;
    let deposit_norm =
        1.0 / (std::f64::consts::PI * cfg.detector_radius * cfg.detector_radius);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + ray_idx as u64);

    let mut origin = source;
    let mut dir = uniform_sphere(&mut rng);
    let mut energy = [e0; N_BANDS];
    let mut path_len = 0.0;
    let mut arrivals = Vec::new();

    for depth in 0..cfg.max_depth {
        let hit = nearest_hit(tris, origin, dir);
        let t_max = hit.map_or(f64::INFINITY, |(t, _)| t);
        if depth > 0 {
            if let Some(s) = sphere_entry(origin, dir, listener, cfg.detector_radius, t_max) {
                let total = path_len + s;
                let mut e = [0.0; N_BANDS];
                for b in 0..N_BANDS {
                    e[b] = energy[b] * deposit_norm * air_factor(cfg, b, total);
                }
                arrivals.push(Arrival {
                    time: total / cfg.speed_of_sound,
                    direction: dir,
                    energy: e,
                });
            }
        }
        let Some((t, face)) = hit else { break };
        path_len += t;
        origin = origin + dir * t;
        let alpha = &scene.band_absorption[face];
        for b in 0..N_BANDS {
            energy[b] *= 1.0 - alpha[b];
        }
        // consume the branch draw before the termination check so path
        // geometry is independent of absorption when threshold is 0
        let u: f64 = rng.gen();
        let mut n = tris[face].normal;
        if n.dot(dir) > 0.0 {
            n = -n;
        }
        dir = if u < scene.sc[scene.mesh.faces[face][0]] {
            cosine_weighted(n, &mut rng)
        } else {
            dir - n * (2.0 * dir.dot(n))
        };
        if energy.iter().all(|&e| e < cfg.energy_threshold * e0) {
            break;
        }
    }
    arrivals
}

/// Binauralize one arrival into the histogram: per ear, the Woodworth ITD
/// shifts the arrival time and the contralateral ear's bands are shadowed.
fn deposit_binaural(
    hist: &mut EnergyHistogram,
    arrival: &Arrival,
    head: &HeadModel,
    speed_of_sound: f64,
) {
    let to_source = -arrival.direction;
    let s = to_source.y.clamp(-1.0, 1.0);
    let itd = head.itd(s, speed_of_sound);
    // s > 0: source on the right; the right ear leads and the left ear is
    // shadowed
    for ear in 0..2 {
        let is_right = ear == 1;
        let delay = if is_right { -itd / 2.0 } else { itd / 2.0 };
        let contralateral = (s > 0.0) != is_right;
        let mut e = arrival.energy;
        if contralateral {
            for b in 0..N_BANDS {
                e[b] *= head.ild_shadow(BAND_CENTERS[b], s);
            }
        }
        hist.deposit(ear, arrival.time + delay, &e);
    }
}

/// Stochastic energy trace from `source` to the detection sphere at
/// `listener`, binauralized into per-ear band histograms.
pub fn trace(
    scene: &MaterialAnnotatedMesh,
    source: Vec3,
    listener: Vec3,
    cfg: &SimConfig,
    head: &HeadModel,
    seed: u64,
) -> Result<EnergyHistogram> {
    cfg.validate()?;
    head.validate()?;
    if source.distance(listener) < 1e-9 {
        return Err(Error::contract("source and listener coincide"));
    }
    if !point_in_mesh(&scene.mesh, source) || !point_in_mesh(&scene.mesh, listener) {
        return Err(Error::contract("source/listener outside mesh"));
    }
    let tris = triangles(scene);
    let mut hist = EnergyHistogram::new(cfg.histogram_bin);

    // analytic direct path
    if !segment_occluded(&tris, source, listener) {
        let d = source.distance(listener);
        let base = 1.0 / (4.0 * std::f64::consts::PI * d * d);
        let mut e = [0.0; N_BANDS];
        for b in 0..N_BANDS {
            e[b] = base * air_factor(cfg, b, d);
        }
        let direct = Arrival {
            time: d / cfg.speed_of_sound,
            direction: (listener - source).normalized(),
            energy: e,
        };
        deposit_binaural(&mut hist, &direct, head, cfg.speed_of_sound);
    }

    // rays are independent; deposits are applied in ray order so the
    // result does not depend on scheduling
    let per_ray: Vec<Vec<Arrival>> = (0..cfg.n_rays)
        .into_par_iter()
        .map(|i| trace_ray(&tris, scene, source, listener, cfg, seed, i))
        .collect();
    for arrivals in &per_ray {
        for a in arrivals {
            deposit_binaural(&mut hist, a, head, cfg.speed_of_sound);
        }
    }
    Ok(hist)
}
