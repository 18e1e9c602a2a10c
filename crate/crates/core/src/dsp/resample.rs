//! Integer-factor decimation with a windowed-sinc anti-alias filter.

use crate::{Error, Result};

/// Lowpass FIR taps: windowed sinc, cutoff as a fraction of the input
/// sample rate, Hann-windowed, `2 * half + 1` taps, unit DC gain.
fn lowpass_taps(cutoff: f64, half: usize) -> Vec<f64> {
    let n = 2 * half + 1;
    let mut taps = Vec::with_capacity(n);
    for i in 0..n {
        let m = i as f64 - half as f64;
        let sinc = if m == 0.0 {
            2.0 * cutoff
        } else {
            (2.0 * std::f64::consts::PI * cutoff * m).sin() / (std::f64::consts::PI * m)
        };
        let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos());
        taps.push(sinc * w);
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Decimate `signal` by an integer `factor` after anti-alias lowpass
/// filtering. `factor == 1` is a passthrough.
pub fn decimate(signal: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 {
        return Err(Error::contract("decimation factor must be >= 1"));
    }
    if factor == 1 {
        return Ok(signal.to_vec());
    }
    // cutoff slightly inside the new Nyquist
    let taps = lowpass_taps(0.45 / factor as f64, 32 * factor);
    let half = (taps.len() - 1) / 2;
    let out_len = signal.len().div_ceil(factor);
    let mut out = Vec::with_capacity(out_len);
    for o in 0..out_len {
        let center = o * factor;
        let mut acc = 0.0;
        for (k, &t) in taps.iter().enumerate() {
            let idx = center as isize + k as isize - half as isize;
            if idx >= 0 && (idx as usize) < signal.len() {
                acc += t * signal[idx as usize];
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Resample between sample rates; only integer downsampling ratios are
/// supported (48 kHz -> 16 kHz is the pipeline's case).
pub fn resample(signal: &[f64], from_hz: u32, to_hz: u32) -> Result<Vec<f64>> {
    if from_hz == to_hz {
        return Ok(signal.to_vec());
    }
    if from_hz % to_hz == 0 {
        return decimate(signal, (from_hz / to_hz) as usize);
    }
    Err(Error::contract(format!(
        "unsupported resampling ratio {from_hz} -> {to_hz} (integer decimation only)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passthrough_same_rate() {
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(resample(&x, 16000, 16000).unwrap(), x);
    }

    #[test]
    fn decimation_length() {
        let x = vec![0.0; 12000];
        assert_eq!(resample(&x, 48000, 16000).unwrap().len(), 4000);
    }

    #[test]
    fn low_frequency_tone_preserved() {
        let sr_in = 48000.0;
        let f = 400.0;
        let x: Vec<f64> = (0..48000)
            .map(|n| (2.0 * std::f64::consts::PI * f * n as f64 / sr_in).sin())
            .collect();
        let y = resample(&x, 48000, 16000).unwrap();
        // interior samples should track the same tone at the new rate
        let sr_out = 16000.0;
        for n in 1000..2000 {
            let want = (2.0 * std::f64::consts::PI * f * n as f64 / sr_out).sin();
            assert!((y[n] - want).abs() < 0.01, "n={n} got {} want {}", y[n], want);
        }
    }

    #[test]
    fn fractional_ratio_rejected() {
        assert!(resample(&[0.0; 10], 44100, 16000).is_err());
    }
}
