//! Stochastic energy-based geometric acoustics: grid position sampling,
//! ray tracing with frequency-band absorption and specular/diffuse
//! branching, a spherical-head binauralizer, and noise-based BIR synthesis.

pub mod dataset;
pub mod synth;
pub mod trace;

pub use dataset::{gen_dataset, DatasetManifest, DatasetParams, PairRecord};
pub use synth::{simulate_pair, synthesize_bir};
pub use trace::trace;

use serde::{Deserialize, Serialize};

use crate::dsp::bands::N_BANDS;
use crate::geometry::AnnotatedMesh;
use crate::math::{point_triangle_distance, Vec3};
use crate::{Error, Result};

/// Simulation parameters for the energy ray tracer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// rays emitted from the source
    pub n_rays: usize,
    /// maximum reflections per ray
    pub max_depth: usize,
    /// termination threshold as a fraction of the per-ray emitted energy
    pub energy_threshold: f64,
    /// m/s
    pub speed_of_sound: f64,
    /// Hz
    pub sim_sample_rate: u32,
    /// seconds per histogram bin
    pub histogram_bin: f64,
    /// listener detection sphere radius, m
    pub detector_radius: f64,
    /// optional per-band air attenuation in dB per meter (zero = off)
    pub air_absorption_db_per_m: [f64; N_BANDS],
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_rays: 20_000,
            max_depth: 2000,
            energy_threshold: 1e-6,
            speed_of_sound: 343.0,
            sim_sample_rate: 48_000,
            histogram_bin: 1e-3,
            detector_radius: 0.25,
            air_absorption_db_per_m: [0.0; N_BANDS],
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rays == 0 || self.max_depth == 0 {
            return Err(Error::contract("n_rays and max_depth must be positive"));
        }
        if !(0.0..1.0).contains(&self.energy_threshold) {
            return Err(Error::contract("energy_threshold must be in [0, 1)"));
        }
        if self.speed_of_sound <= 0.0
            || self.sim_sample_rate == 0
            || self.histogram_bin <= 0.0
            || self.detector_radius <= 0.0
        {
            return Err(Error::contract("simulation scales must be positive"));
        }
        if self.air_absorption_db_per_m.iter().any(|&a| a < 0.0) {
            return Err(Error::contract("air absorption must be non-negative"));
        }
        Ok(())
    }
}

/// Spherical-head binauralization model. The head is fixed in world frame:
/// the interaural axis is +y (left ear toward -y, right ear toward +y).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadModel {
    /// distance between the ears, m
    pub ear_separation: f64,
    /// contralateral attenuation at 8 kHz for a fully lateral source, dB;
    /// scaled down linearly with band center frequency and |sin(azimuth)|
    pub ild_max_db: f64,
}

impl Default for HeadModel {
    fn default() -> Self {
        HeadModel { ear_separation: 0.18, ild_max_db: 20.0 }
    }
}

impl HeadModel {
    pub fn validate(&self) -> Result<()> {
        if self.ear_separation <= 0.0 {
            return Err(Error::contract("ear_separation must be positive"));
        }
        Ok(())
    }

    /// Woodworth interaural time difference for a lateral sine `s` =
    /// dot(direction-to-source, ear axis). Positive when the source is on
    /// the right (+y) side, meaning the right ear leads.
    pub fn itd(&self, s: f64, speed_of_sound: f64) -> f64 {
        let s = s.clamp(-1.0, 1.0);
        let a = self.ear_separation / 2.0;
        s.signum() * a * (s.abs().asin() + s.abs()) / speed_of_sound
    }

    /// Contralateral energy attenuation factor (linear power scale) for a
    /// band centered at `freq` and lateral sine `s`.
    pub fn ild_shadow(&self, freq: f64, s: f64) -> f64 {
        let db = self.ild_max_db * (freq / 8000.0).min(1.0) * s.abs().min(1.0);
        10f64.powf(-db / 10.0)
    }
}

/// One detected ray crossing at the listener, before binauralization.
#[derive(Debug, Clone)]
pub struct Arrival {
    /// seconds since emission
    pub time: f64,
    /// propagation direction of the incoming sound (unit vector)
    pub direction: Vec3,
    /// band energies after surface and air absorption and detector
    /// normalization
    pub energy: [f64; N_BANDS],
}

/// Time-binned band energies per ear (0 = left, 1 = right).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyHistogram {
    /// seconds per bin
    pub bin_width: f64,
    pub ears: [Vec<[f64; N_BANDS]>; 2],
}

impl EnergyHistogram {
    pub fn new(bin_width: f64) -> Self {
        EnergyHistogram { bin_width, ears: [Vec::new(), Vec::new()] }
    }

    pub fn n_bins(&self) -> usize {
        self.ears[0].len().max(self.ears[1].len())
    }

    pub fn deposit(&mut self, ear: usize, time: f64, energy: &[f64; N_BANDS]) {
        let bin = (time.max(0.0) / self.bin_width) as usize;
        let v = &mut self.ears[ear];
        if v.len() <= bin {
            v.resize(bin + 1, [0.0; N_BANDS]);
        }
        for b in 0..N_BANDS {
            v[bin][b] += energy[b];
        }
    }

    pub fn total_energy(&self) -> f64 {
        self.ears.iter().flatten().flatten().sum()
    }

    /// Total energy of one band for one ear.
    pub fn band_total(&self, ear: usize, band: usize) -> f64 {
        self.ears[ear].iter().map(|bin| bin[band]).sum()
    }
}

/// Parity test: counts crossings of a fixed-direction ray against every
/// face. Odd count = inside. The direction is chosen irrational to avoid
/// edge-grazing degeneracies on axis-aligned meshes.
pub fn point_in_mesh(mesh: &AnnotatedMesh, p: Vec3) -> bool {
    let dir = Vec3::new(0.577_350_1, 0.211_324_9, 0.789_456_3).normalized();
    let mut crossings = 0;
    for f in &mesh.faces {
        let (a, b, c) =
            (mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
        if let Some(t) = trace::ray_triangle(p, dir, a, b, c) {
            if t > 1e-12 {
                crossings += 1;
            }
        }
    }
    crossings % 2 == 1
}

/// Distance from `p` to the nearest mesh surface.
pub fn distance_to_surface(mesh: &AnnotatedMesh, p: Vec3) -> f64 {
    mesh.faces
        .iter()
        .map(|f| {
            point_triangle_distance(
                p,
                mesh.vertices[f[0]],
                mesh.vertices[f[1]],
                mesh.vertices[f[2]],
            )
        })
        .fold(f64::INFINITY, f64::min)
}

/// Axis-aligned grid over the mesh AABB at `spacing`, keeping points that
/// are inside the mesh with surface clearance >= `clearance` (inclusive).
pub fn grid_positions(
    mesh: &AnnotatedMesh,
    spacing: f64,
    clearance: f64,
) -> Result<Vec<Vec3>> {
    if spacing <= 0.0 || clearance < 0.0 {
        return Err(Error::contract("spacing must be positive, clearance non-negative"));
    }
    let (lo, hi) = mesh.aabb();
    let steps = |a: f64, b: f64| -> Vec<f64> {
        let n = ((b - a) / spacing + 1e-9).floor() as usize;
        (0..=n).map(|k| a + k as f64 * spacing).collect()
    };
    let mut out = Vec::new();
    for &x in &steps(lo.x, hi.x) {
        for &y in &steps(lo.y, hi.y) {
            for &z in &steps(lo.z, hi.z) {
                let p = Vec3::new(x, y, z);
                if point_in_mesh(mesh, p) && distance_to_surface(mesh, p) >= clearance - 1e-9 {
                    out.push(p);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::contract("zero valid positions"));
    }
    Ok(out)
}

/// Draw min(n_sources, floor(|positions|/2)) source positions without
/// replacement; the rest are listeners. Deterministic given the seed.
pub fn split_sources_listeners(
    positions: &[Vec3],
    n_sources: usize,
    seed: u64,
) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    if positions.is_empty() {
        return Err(Error::contract("no positions to split"));
    }
    let k = n_sources.min(positions.len() / 2);
    let mut idx: Vec<usize> = (0..positions.len()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let sources = idx[..k].iter().map(|&i| positions[i]).collect();
    let listeners = idx[k..].iter().map(|&i| positions[i]).collect();
    Ok((sources, listeners))
}

/// Synthetic scenes shared by tests, the benchmark command, and examples.
pub mod test_support {
    use super::*;
    use crate::geometry::box_mesh;
    use crate::materials::MaterialAnnotatedMesh;

    /// Uniform-material shoebox scene with one corner at the origin.
    pub fn shoebox(hi: Vec3, alpha: f64, sc: f64) -> MaterialAnnotatedMesh {
        let mesh = box_mesh(Vec3::ZERO, hi, "wall");
        let n_faces = mesh.faces.len();
        let n_verts = mesh.vertices.len();
        MaterialAnnotatedMesh {
            mesh,
            ab: vec![alpha; n_verts],
            sc: vec![sc; n_verts],
            band_absorption: vec![[alpha; N_BANDS]; n_faces],
            face_labels: vec![0; n_faces],
        }
    }
}
