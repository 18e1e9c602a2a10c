//! Binaural impulse responses: the SD-embedding training codec, energy
//! decay analysis, and the acoustic metric suite.

pub mod codec;
pub mod ed;
pub mod metrics;

pub use codec::{postprocess_bir, preprocess_bir, BirLayout, PreprocessedBir};
pub use ed::{ed_relief, edc, edc_db, EdMatrix};
pub use metrics::{drr, edt, metric_report, t60, MetricReport};

/// Two-channel impulse response.
#[derive(Debug, Clone)]
pub struct Bir {
    pub sample_rate: u32,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl Bir {
    pub fn new(sample_rate: u32, left: Vec<f64>, right: Vec<f64>) -> crate::Result<Self> {
        if left.len() != right.len() {
            return Err(crate::Error::contract("BIR channels must have equal length"));
        }
        if left.iter().chain(&right).any(|v| !v.is_finite()) {
            return Err(crate::Error::contract("BIR contains non-finite samples"));
        }
        Ok(Bir { sample_rate, left, right })
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        if i == 0 {
            &self.left
        } else {
            &self.right
        }
    }
}
