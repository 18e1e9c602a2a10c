//! Octave-band definitions and FFT-domain band-pass filtering.

use crate::dsp::fft::{fft_real, ifft_real};

/// Number of octave bands used throughout the pipeline.
pub const N_BANDS: usize = 8;

/// Octave-band center frequencies in Hz.
pub const BAND_CENTERS: [f64; N_BANDS] =
    [62.5, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];

/// Lower/upper edges of octave band `b` (center / sqrt(2), center * sqrt(2)).
pub fn band_edges(b: usize) -> (f64, f64) {
    let c = BAND_CENTERS[b];
    (c / std::f64::consts::SQRT_2, c * std::f64::consts::SQRT_2)
}

/// Brick-wall band-pass of a real signal via FFT. The lowest band extends
/// down to DC and the highest up to Nyquist so that summing all bands
/// reconstructs the full spectrum below/above the edge bands.
pub fn bandpass(signal: &[f64], band: usize, sample_rate: f64) -> Vec<f64> {
    let n = signal.len().next_power_of_two();
    let mut spec = fft_real(signal, n);
    let (mut lo, mut hi) = band_edges(band);
    if band == 0 {
        lo = 0.0;
    }
    if band == N_BANDS - 1 {
        hi = sample_rate / 2.0;
    }
    let df = sample_rate / n as f64;
    for (k, c) in spec.iter_mut().enumerate() {
        // mirror index for the negative-frequency half
        let f = if k <= n / 2 { k as f64 * df } else { (n - k) as f64 * df };
        if f < lo || f > hi {
            *c = rustfft::num_complex::Complex64::new(0.0, 0.0);
        }
    }
    let mut out = ifft_real(&spec);
    out.truncate(signal.len());
    out
}
