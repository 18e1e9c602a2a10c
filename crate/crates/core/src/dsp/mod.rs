//! Shared signal-processing primitives: FFT convolution helpers, STFT,
//! decimation, and octave-band utilities.

pub mod bands;
pub mod fft;
pub mod resample;
pub mod stft;
