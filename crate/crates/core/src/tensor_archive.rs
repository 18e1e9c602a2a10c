//! Flat binary tensor archive with a JSON shape manifest.
//!
//! Layout: `<name>.bin` holds all tensors concatenated as little-endian f64;
//! `<name>.json` lists `{name, shape, offset}` per tensor (offset in
//! elements) plus an optional free-form `meta` object.

use std::collections::BTreeMap;
use std::io::{Read as _, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tensors: Vec<TensorEntry>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

/// Named tensors in insertion order.
#[derive(Debug, Clone, Default)]
pub struct TensorArchive {
    pub tensors: Vec<(String, Vec<usize>, Vec<f64>)>,
    pub meta: serde_json::Value,
}

impl TensorArchive {
    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.tensors.push((name.into(), shape, data));
    }

    pub fn get(&self, name: &str) -> Option<(&[usize], &[f64])> {
        self.tensors
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, s, d)| (s.as_slice(), d.as_slice()))
    }

    /// Write `<stem>.bin` and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let mut entries = Vec::new();
        let mut offset = 0usize;
        let bin_path = stem.with_extension("bin");
        let mut bin = std::io::BufWriter::new(std::fs::File::create(&bin_path)?);
        for (name, shape, data) in &self.tensors {
            entries.push(TensorEntry { name: name.clone(), shape: shape.clone(), offset });
            offset += data.len();
            for v in data {
                bin.write_all(&v.to_le_bytes())?;
            }
        }
        bin.flush()?;
        let manifest = Manifest { tensors: entries, meta: self.meta.clone() };
        std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let manifest: Manifest =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        let mut raw = Vec::new();
        std::fs::File::open(stem.with_extension("bin"))?.read_to_end(&mut raw)?;
        if raw.len() % 8 != 0 {
            return Err(Error::parse("tensor archive .bin size not a multiple of 8"));
        }
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut tensors = Vec::new();
        for e in &manifest.tensors {
            let len: usize = e.shape.iter().product();
            let end = e.offset + len;
            if end > values.len() {
                return Err(Error::parse(format!("tensor {} out of archive bounds", e.name)));
            }
            tensors.push((e.name.clone(), e.shape.clone(), values[e.offset..end].to_vec()));
        }
        Ok(TensorArchive { tensors, meta: manifest.meta })
    }

    pub fn as_map(&self) -> BTreeMap<&str, (&[usize], &[f64])> {
        self.tensors
            .iter()
            .map(|(n, s, d)| (n.as_str(), (s.as_slice(), d.as_slice())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("params");
        let mut a = TensorArchive::default();
        a.push("w1", vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        a.push("b1", vec![3], vec![-0.5, 0.0, 0.5]);
        a.save(&stem).unwrap();
        let b = TensorArchive::load(&stem).unwrap();
        assert_eq!(b.tensors.len(), 2);
        let (shape, data) = b.get("w1").unwrap();
        assert_eq!(shape, &[2, 3]);
        assert_eq!(data[4], 5.0);
    }
}
