//! Short-time Fourier transform with a Hann window, one-sided bins.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// STFT framing parameters. Defaults match the BIR analysis settings
/// (window 128, hop 64 at 16 kHz, so bin width is 125 Hz).
#[derive(Debug, Clone, Copy)]
pub struct StftConfig {
    pub window: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig { window: 128, hop: 64 }
    }
}

impl StftConfig {
    pub fn n_bins(&self) -> usize {
        self.window / 2 + 1
    }

    pub fn n_frames(&self, len: usize) -> usize {
        if len < self.window {
            0
        } else {
            (len - self.window) / self.hop + 1
        }
    }

    /// One-sided bin index nearest to `freq` at `sample_rate`.
    pub fn bin_for_freq(&self, freq: f64, sample_rate: f64) -> usize {
        let bin = (freq * self.window as f64 / sample_rate).round() as usize;
        bin.min(self.n_bins() - 1)
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect()
}

/// Complex STFT frames, `n_frames x n_bins`, one-sided.
pub fn stft(signal: &[f64], cfg: StftConfig) -> Result<Vec<Vec<Complex64>>> {
    let n_frames = cfg.n_frames(signal.len());
    if n_frames == 0 {
        return Err(Error::contract(format!(
            "signal too short for STFT: {} samples < window {}",
            signal.len(),
            cfg.window
        )));
    }
    let w = hann(cfg.window);
    let fft = FftPlanner::new().plan_fft_forward(cfg.window);
    let n_bins = cfg.n_bins();

    let mut frames = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.window];
    for f in 0..n_frames {
        let start = f * cfg.hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(signal[start + i] * w[i], 0.0);
        }
        fft.process(&mut buf);
        frames.push(buf[..n_bins].to_vec());
    }
    Ok(frames)
}

/// Magnitude-squared spectrogram, `n_frames x n_bins`.
pub fn power_spectrogram(signal: &[f64], cfg: StftConfig) -> Result<Vec<Vec<f64>>> {
    Ok(stft(signal, cfg)?
        .into_iter()
        .map(|frame| frame.into_iter().map(|c| c.norm_sqr()).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_count_and_bins() {
        let cfg = StftConfig::default();
        let x = vec![0.0; 512];
        let frames = stft(&x, cfg).unwrap();
        assert_eq!(frames.len(), (512 - 128) / 64 + 1);
        assert_eq!(frames[0].len(), 65);
    }

    #[test]
    fn sinusoid_peaks_at_its_bin() {
        let cfg = StftConfig::default();
        let sr = 16000.0;
        let f = 1000.0; // bin 8 exactly
        let x: Vec<f64> = (0..1024)
            .map(|n| (2.0 * std::f64::consts::PI * f * n as f64 / sr).sin())
            .collect();
        let spec = power_spectrogram(&x, cfg).unwrap();
        let frame = &spec[3];
        let peak = frame
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, cfg.bin_for_freq(f, sr));
    }

    #[test]
    fn too_short_errors() {
        assert!(stft(&[0.0; 10], StftConfig::default()).is_err());
    }
}
