//! Energy decay analysis: the time-frequency ED relief (cumulative
//! remaining spectrogram energy) and the broadband Schroeder curve.

use crate::dsp::stft::{power_spectrogram, StftConfig};
use crate::{Error, Result};

/// Log floor applied before taking log of ED values.
pub const ED_LOG_FLOOR: f64 = 1e-8;

/// Remaining energy per (frame, bin): suffix sum of |H|^2 along time.
/// Row 0 equals the total per-bin energy; rows are non-increasing in time.
#[derive(Debug, Clone)]
pub struct EdMatrix {
    /// frames x bins
    pub values: Vec<Vec<f64>>,
}

impl EdMatrix {
    pub fn n_frames(&self) -> usize {
        self.values.len()
    }

    pub fn n_bins(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// ED curve for one bin, normalized to 1 at frame 0 when possible.
    pub fn normalized_bin(&self, bin: usize) -> Vec<f64> {
        let total = self.values[0][bin];
        self.values
            .iter()
            .map(|row| if total > 0.0 { row[bin] / total } else { 0.0 })
            .collect()
    }
}

/// Energy decay relief of one channel: magnitude-squared STFT followed by a
/// cumulative sum from the final frame backwards, per bin.
pub fn ed_relief(channel: &[f64], cfg: StftConfig) -> Result<EdMatrix> {
    let spec = power_spectrogram(channel, cfg)?;
    Ok(EdMatrix { values: suffix_cumsum(spec) })
}

pub(crate) fn suffix_cumsum(mut spec: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n_frames = spec.len();
    for f in (0..n_frames.saturating_sub(1)).rev() {
        for b in 0..spec[f].len() {
            spec[f][b] += spec[f + 1][b];
        }
    }
    spec
}

/// Broadband Schroeder curve: backward cumulative sum of squared samples,
/// normalized to 1 at t = 0. Errors on silent input.
pub fn edc(channel: &[f64]) -> Result<Vec<f64>> {
    if channel.is_empty() {
        return Err(Error::contract("edc of empty signal"));
    }
    let mut out: Vec<f64> = channel.iter().map(|x| x * x).collect();
    for i in (0..out.len() - 1).rev() {
        out[i] += out[i + 1];
    }
    let total = out[0];
    if total <= 0.0 {
        return Err(Error::numerical("edc of silent signal is undefined"));
    }
    for v in &mut out {
        *v /= total;
    }
    Ok(out)
}

/// Schroeder curve in dB with a floor at the log epsilon.
pub fn edc_db(channel: &[f64]) -> Result<Vec<f64>> {
    Ok(edc(channel)?
        .into_iter()
        .map(|v| 10.0 * v.max(ED_LOG_FLOOR).log10())
        .collect())
}
