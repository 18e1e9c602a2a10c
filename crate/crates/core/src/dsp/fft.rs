//! Thin wrappers around rustfft for real signals.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward complex FFT of a real signal, zero-padded to `n`.
pub fn fft_real(signal: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Inverse FFT returning the real part, scaled by 1/n.
pub fn ifft_real(spectrum: &[Complex64]) -> Vec<f64> {
    let n = spectrum.len();
    let mut buf = spectrum.to_vec();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Full linear convolution via FFT; output length `a.len() + b.len() - 1`.
pub fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let fa = fft_real(a, n);
    let fb = fft_real(b, n);
    let prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    let mut out = ifft_real(&prod);
    out.truncate(out_len);
    out
}
