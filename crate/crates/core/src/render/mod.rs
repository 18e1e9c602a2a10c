//! Applying BIRs to dry audio: single-shot convolution and multi-source
//! walkthrough rendering with per-position BIRs and linear crossfades.

use serde::{Deserialize, Serialize};

use crate::bir::Bir;
use crate::dsp::fft::fft_convolve;
use crate::dsp::resample::resample;
use crate::math::Vec3;
use crate::{Error, Result};

/// Stereo render product.
#[derive(Debug, Clone)]
pub struct StereoAudio {
    pub sample_rate: u32,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Full linear convolution of a (mono) dry signal with both BIR channels.
/// The dry signal is resampled to the BIR rate on mismatch. Output length =
/// dry + bir - 1.
pub fn convolve(dry: &[f64], dry_rate: u32, bir: &Bir) -> Result<StereoAudio> {
    if dry.is_empty() || bir.is_empty() {
        return Err(Error::contract("convolve requires non-empty dry signal and BIR"));
    }
    let dry = if dry_rate == bir.sample_rate {
        dry.to_vec()
    } else {
        resample(dry, dry_rate, bir.sample_rate)?
    };
    Ok(StereoAudio {
        sample_rate: bir.sample_rate,
        left: fft_convolve(&dry, &bir.left),
        right: fft_convolve(&dry, &bir.right),
    })
}

/// One dry source placed in the scene.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSpec {
    pub position: [f64; 3],
    /// dry audio file; mono, or stereo downmixed with a warning
    pub dry_wav: String,
}

/// Listener path keyframe.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathPoint {
    /// seconds
    pub t: f64,
    pub position: [f64; 3],
}

/// Walkthrough description (JSON on disk).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkthroughSpec {
    pub scene: String,
    pub sources: Vec<SourceSpec>,
    pub path: Vec<PathPoint>,
    /// BIR refresh rate along the path, Hz
    #[serde(default = "default_update_rate")]
    pub bir_update_rate: f64,
    /// linear crossfade between adjacent frames, ms
    #[serde(default = "default_crossfade_ms")]
    pub crossfade_ms: f64,
}

fn default_update_rate() -> f64 {
    10.0
}

fn default_crossfade_ms() -> f64 {
    100.0
}

impl WalkthroughSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() || self.path.is_empty() {
            return Err(Error::contract("walkthrough needs at least one source and path point"));
        }
        if self.path.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::contract("path timestamps must be strictly increasing"));
        }
        if self.bir_update_rate <= 0.0 || self.crossfade_ms < 0.0 {
            return Err(Error::contract("update rate must be positive, crossfade non-negative"));
        }
        if self.crossfade_ms / 1000.0 > 1.0 / self.bir_update_rate {
            return Err(Error::contract("crossfade longer than the BIR update interval"));
        }
        Ok(())
    }

    /// Listener position at time `t`: linear interpolation between
    /// keyframes, endpoints held outside the path span.
    pub fn listener_at(&self, t: f64) -> Vec3 {
        let path = &self.path;
        if t <= path[0].t {
            return Vec3::from(path[0].position);
        }
        if t >= path[path.len() - 1].t {
            return Vec3::from(path[path.len() - 1].position);
        }
        let i = path.partition_point(|p| p.t <= t) - 1;
        let (a, b) = (path[i], path[i + 1]);
        let f = (t - a.t) / (b.t - a.t);
        Vec3::from(a.position) * (1.0 - f) + Vec3::from(b.position) * f
    }
}

/// Trapezoid partition-of-unity window for frame `k` of `n_frames`:
/// returns (start sample, weights). Interior boundaries at k*hop carry a
/// linear crossfade of `cf` samples centered on the boundary; the first and
/// last frames extend flat to the signal edges.
fn frame_window(k: usize, n_frames: usize, hop: usize, cf: usize, len: usize) -> (usize, Vec<f64>) {
    let half = cf / 2;
    let lead = k * hop;
    let tail = if k + 1 == n_frames { len } else { (k + 1) * hop };
    let start = if k == 0 { 0 } else { lead.saturating_sub(half) };
    let stop = if k + 1 == n_frames { len } else { (tail + (cf - half)).min(len) };
    let mut w = vec![1.0; stop - start];
    if k > 0 {
        // ramp 0 -> 1 over cf samples around the leading boundary
        let n = w.len();
        for (j, v) in w.iter_mut().take(cf.min(n)).enumerate() {
            *v = (j as f64 + 0.5) / cf as f64;
        }
    }
    if k + 1 < n_frames {
        let n = w.len();
        for j in 0..cf.min(n) {
            w[n - 1 - j] *= (j as f64 + 0.5) / cf as f64;
        }
    }
    (start, w)
}

/// Render a listener walkthrough. `dry` holds one decoded (samples, rate)
/// per source, aligned with `spec.sources`. `bir_provider` maps (source,
/// listener) positions to a BIR; every returned BIR must share one sample
/// rate. Returns the mix, whether peak normalization was applied, and
/// warnings.
pub fn render_walkthrough<F>(
    spec: &WalkthroughSpec,
    dry: &[(Vec<f64>, u32)],
    mut bir_provider: F,
) -> Result<(StereoAudio, bool, Vec<String>)>
where
    F: FnMut(Vec3, Vec3) -> Result<Bir>,
{
    spec.validate()?;
    if dry.len() != spec.sources.len() {
        return Err(Error::contract("one dry signal required per source"));
    }
    let mut warnings = Vec::new();

    // probe the provider once to fix the output rate
    let probe = bir_provider(Vec3::from(spec.sources[0].position), spec.listener_at(0.0))?;
    let sr = probe.sample_rate;
    let hop = (sr as f64 / spec.bir_update_rate).round() as usize;
    let cf = (spec.crossfade_ms / 1000.0 * sr as f64).round() as usize;
    if hop == 0 {
        return Err(Error::contract("update rate too high for the sample rate"));
    }

    let resampled: Vec<Vec<f64>> = dry
        .iter()
        .map(|(x, rate)| {
            if x.is_empty() {
                return Err(Error::contract("empty dry signal"));
            }
            if *rate == sr {
                Ok(x.clone())
            } else {
                resample(x, *rate, sr)
            }
        })
        .collect::<Result<_>>()?;
    let dry_len = resampled.iter().map(Vec::len).max().unwrap();
    let n_frames = dry_len.div_ceil(hop).max(1);

    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut max_bir_len = 0usize;
    for (si, source) in spec.sources.iter().enumerate() {
        let src = Vec3::from(source.position);
        let x = &resampled[si];
        for k in 0..n_frames {
            let t = k as f64 * hop as f64 / sr as f64;
            let bir = bir_provider(src, spec.listener_at(t))?;
            if bir.sample_rate != sr {
                return Err(Error::contract("provider changed sample rate mid-render"));
            }
            max_bir_len = max_bir_len.max(bir.len());
            let (start, w) = frame_window(k, n_frames, hop, cf, dry_len);
            if start >= x.len() {
                continue;
            }
            let seg: Vec<f64> = w
                .iter()
                .enumerate()
                .take(x.len() - start)
                .map(|(j, &wv)| wv * x[start + j])
                .collect();
            if seg.iter().all(|&v| v == 0.0) {
                continue;
            }
            let out_needed = start + seg.len() + bir.len() - 1;
            if left.len() < out_needed {
                left.resize(out_needed, 0.0);
                right.resize(out_needed, 0.0);
            }
            for (ch, out) in [(&bir.left, &mut left), (&bir.right, &mut right)] {
                let conv = fft_convolve(&seg, ch);
                for (j, v) in conv.into_iter().enumerate() {
                    out[start + j] += v;
                }
            }
        }
    }
    let full_len = dry_len + max_bir_len.saturating_sub(1);
    left.resize(full_len, 0.0);
    right.resize(full_len, 0.0);

    if left.iter().chain(&right).any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite samples in rendered output"));
    }
    let peak = left.iter().chain(&right).fold(0.0f64, |m, v| m.max(v.abs()));
    let mut normalized = false;
    if peak > 1.0 {
        let target = 10f64.powf(-1.0 / 20.0); // -1 dBFS
        let g = target / peak;
        for v in left.iter_mut().chain(&mut right) {
            *v *= g;
        }
        normalized = true;
        warnings.push(format!("output clipped (peak {peak:.3}): normalized to -1 dBFS"));
    }
    Ok((StereoAudio { sample_rate: sr, left, right }, normalized, warnings))
}
