//! Semantic-label-to-material mapping: absorption databases, label
//! matching, band averaging, and scattering sampling.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::bands::N_BANDS;
use crate::geometry::{vertex_to_face_labels, AnnotatedMesh, FaceLabeledMesh};
use crate::{Error, Result};

/// Named material with 8 octave-band absorption coefficients
/// (62.5 Hz .. 8 kHz).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterialEntry {
    pub name: String,
    pub absorption: [f64; N_BANDS],
}

impl MaterialEntry {
    fn validate(&self) -> Result<()> {
        for &a in &self.absorption {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::contract(format!(
                    "absorption out of range for '{}': {a}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Absorption database with optional precomputed name embeddings.
#[derive(Debug, Clone, Default)]
pub struct MaterialDatabase {
    pub entries: Vec<MaterialEntry>,
    pub embeddings: BTreeMap<String, Vec<f64>>,
}

impl MaterialDatabase {
    pub fn new(entries: Vec<MaterialEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            e.validate()?;
            if !seen.insert(normalize(&e.name)) {
                return Err(Error::contract(format!("duplicate material name '{}'", e.name)));
            }
        }
        Ok(MaterialDatabase { entries, embeddings: BTreeMap::new() })
    }

    pub fn with_embeddings(mut self, embeddings: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let mut dim = None;
        for (name, v) in &embeddings {
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::contract(format!(
                        "ragged embedding dimensions: '{name}' has {} expected {d}",
                        v.len()
                    )))
                }
                _ => {}
            }
        }
        self.embeddings = embeddings;
        Ok(self)
    }

    pub fn find(&self, name: &str) -> Option<&MaterialEntry> {
        let norm = normalize(name);
        self.entries.iter().find(|e| normalize(&e.name) == norm)
    }
}

/// How a query label is matched against database entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchStrategy {
    /// identical normalized name, falling through to token overlap
    Exact,
    /// max Jaccard similarity of lowercase token sets
    TokenOverlap,
    /// max cosine similarity over precomputed embeddings
    EmbeddingCosine,
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

fn tokens(s: &str) -> HashSet<String> {
    normalize(s)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Find the closest material for a label. Ties break lexicographically by
/// entry name.
pub fn match_label<'a>(
    label: &str,
    db: &'a MaterialDatabase,
    strategy: MatchStrategy,
) -> Result<&'a MaterialEntry> {
    if db.entries.is_empty() {
        return Err(Error::contract("material database is empty"));
    }
    match strategy {
        MatchStrategy::Exact => {
            if let Some(e) = db.find(label) {
                Ok(e)
            } else {
                match_label(label, db, MatchStrategy::TokenOverlap)
            }
        }
        MatchStrategy::TokenOverlap => {
            let q = tokens(label);
            let best = db
                .entries
                .iter()
                .map(|e| (jaccard(&q, &tokens(&e.name)), e))
                .max_by(|(sa, ea), (sb, eb)| {
                    sa.total_cmp(sb).then_with(|| eb.name.cmp(&ea.name))
                })
                .unwrap();
            if best.0 == 0.0 {
                return Err(Error::contract(format!(
                    "no material shares a token with label '{label}'"
                )));
            }
            Ok(best.1)
        }
        MatchStrategy::EmbeddingCosine => {
            let q = db
                .embeddings
                .get(&normalize(label))
                .or_else(|| db.embeddings.get(label))
                .ok_or_else(|| {
                    Error::contract(format!("no embedding for query label '{label}'"))
                })?;
            let mut best: Option<(f64, &MaterialEntry)> = None;
            for e in &db.entries {
                let v = db
                    .embeddings
                    .get(&normalize(&e.name))
                    .or_else(|| db.embeddings.get(&e.name))
                    .ok_or_else(|| {
                        Error::contract(format!("no embedding for material '{}'", e.name))
                    })?;
                let s = cosine(q, v);
                let better = match best {
                    None => true,
                    Some((bs, be)) => s > bs || (s == bs && e.name < be.name),
                };
                if better {
                    best = Some((s, e));
                }
            }
            Ok(best.unwrap().1)
        }
    }
}

/// Band-averaging mode for reducing 8 coefficients to one scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingMode {
    /// mean of the 500 Hz and 1000 Hz bands
    Mid,
    /// mean over all 8 bands
    Full,
}

pub fn band_average(absorption: &[f64; N_BANDS], mode: AveragingMode) -> f64 {
    match mode {
        AveragingMode::Mid => 0.5 * (absorption[3] + absorption[4]),
        AveragingMode::Full => absorption.iter().sum::<f64>() / N_BANDS as f64,
    }
}

/// Gaussian prior over the per-scene scattering coefficient, clamped.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScatteringPrior {
    pub mean: f64,
    pub std: f64,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
}

impl Default for ScatteringPrior {
    fn default() -> Self {
        ScatteringPrior { mean: 0.3, std: 0.15, clamp_lo: 0.01, clamp_hi: 0.99 }
    }
}

impl ScatteringPrior {
    pub fn validate(&self) -> Result<()> {
        if self.std < 0.0 {
            return Err(Error::contract("scattering std must be >= 0"));
        }
        if !(self.clamp_lo < self.clamp_hi)
            || self.clamp_lo < 0.0
            || self.clamp_hi > 1.0
        {
            return Err(Error::contract("scattering clamp must satisfy 0 <= lo < hi <= 1"));
        }
        Ok(())
    }
}

/// One clamped Gaussian draw, deterministic per seed. Applied scene-wide.
pub fn sample_scattering(prior: &ScatteringPrior, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = standard_normal(&mut rng);
    (prior.mean + prior.std * z).clamp(prior.clamp_lo, prior.clamp_hi)
}

/// Box-Muller standard normal draw.
pub(crate) fn standard_normal<R: rand::Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Mesh with per-vertex scalar (ab, sc) features and per-face band
/// absorption for the ray tracer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterialAnnotatedMesh {
    pub mesh: AnnotatedMesh,
    /// per-vertex averaged absorption
    pub ab: Vec<f64>,
    /// per-vertex scattering (constant per scene)
    pub sc: Vec<f64>,
    /// per-face 8-band absorption
    pub band_absorption: Vec<[f64; N_BANDS]>,
    pub face_labels: Vec<u32>,
}

/// All-band 0.1 absorption backstop for unmatched labels.
pub fn default_material() -> MaterialEntry {
    MaterialEntry { name: "default".into(), absorption: [0.1; N_BANDS] }
}

/// Attach material features to every vertex and face. Labels that fail the
/// matching chain fall to the default material and produce a warning.
pub fn assign_materials(
    mesh: &AnnotatedMesh,
    db: &MaterialDatabase,
    prior: &ScatteringPrior,
    mode: AveragingMode,
    strategy: MatchStrategy,
    seed: u64,
) -> Result<(MaterialAnnotatedMesh, Vec<String>)> {
    mesh.validate()?;
    prior.validate()?;
    let mut warnings = Vec::new();

    // resolve each distinct label once
    let mut resolved: Vec<MaterialEntry> = Vec::with_capacity(mesh.label_names.len());
    for name in &mesh.label_names {
        match match_label(name, db, strategy) {
            Ok(e) => resolved.push(e.clone()),
            Err(_) => {
                warnings.push(format!("label '{name}' unmatched, using default material"));
                resolved.push(default_material());
            }
        }
    }

    let sc_value = sample_scattering(prior, seed);
    let ab: Vec<f64> = mesh
        .vertex_labels
        .iter()
        .map(|&l| band_average(&resolved[l as usize].absorption, mode))
        .collect();
    let sc = vec![sc_value; mesh.vertices.len()];

    let FaceLabeledMesh { face_labels, .. } = vertex_to_face_labels(mesh);
    let band_absorption = face_labels
        .iter()
        .map(|&l| resolved[l as usize].absorption)
        .collect();

    Ok((
        MaterialAnnotatedMesh {
            mesh: mesh.clone(),
            ab,
            sc,
            band_absorption,
            face_labels,
        },
        warnings,
    ))
}

/// Load a material database from CSV
/// (`name,a62,a125,a250,a500,a1000,a2000,a4000,a8000`) or JSON
/// (array of `{name, absorption: [8]}`).
pub fn load_material_db(path: &Path) -> Result<MaterialDatabase> {
    let text = std::fs::read_to_string(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let entries: Vec<MaterialEntry> = if ext == "json" || text.trim_start().starts_with('[') {
        serde_json::from_str(&text)?
    } else {
        parse_material_csv(&text)?
    };
    MaterialDatabase::new(entries)
}

fn parse_material_csv(text: &str) -> Result<Vec<MaterialEntry>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && fields.get(1).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue; // header row
        }
        if fields.len() != 1 + N_BANDS {
            return Err(Error::parse(format!(
                "materials line {}: expected name + {N_BANDS} coefficients",
                lineno + 1
            )));
        }
        let mut absorption = [0.0; N_BANDS];
        for (i, a) in absorption.iter_mut().enumerate() {
            *a = fields[i + 1]
                .parse::<f64>()
                .map_err(|e| Error::parse(format!("materials line {}: {e}", lineno + 1)))?;
        }
        out.push(MaterialEntry { name: fields[0].to_string(), absorption });
    }
    Ok(out)
}

/// Load embeddings from JSON: map name -> number array.
pub fn load_embeddings(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let raw: BTreeMap<String, Vec<f64>> =
        serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok(raw.into_iter().map(|(k, v)| (normalize(&k), v)).collect())
}
