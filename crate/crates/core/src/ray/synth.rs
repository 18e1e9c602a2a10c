//! Band-filtered-noise BIR synthesis from binaural energy histograms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bir::Bir;
use crate::dsp::bands::{bandpass, N_BANDS};
use crate::materials::MaterialAnnotatedMesh;
use crate::math::Vec3;
use crate::ray::{trace, EnergyHistogram, HeadModel, SimConfig};
use crate::Result;

/// Convert an energy histogram to a pressure-domain BIR: per ear and band,
/// white noise is band-pass filtered, windowed per time bin, and scaled so
/// each window's energy equals the bin's band energy (amplitude =
/// sqrt(energy)). Deterministic given the seed.
pub fn synthesize_bir(
    hist: &EnergyHistogram,
    cfg: &SimConfig,
    seed: u64,
) -> Result<(Bir, Vec<String>)> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let n_bins = hist.n_bins();
    let spb = (cfg.histogram_bin * cfg.sim_sample_rate as f64).round() as usize;
    let n_samples = n_bins * spb;
    if n_samples == 0 || hist.total_energy() <= 0.0 {
        warnings.push("empty histogram: synthesized all-zero BIR".into());
        let len = n_samples.max(1);
        return Ok((Bir::new(cfg.sim_sample_rate, vec![0.0; len], vec![0.0; len])?, warnings));
    }
    let sr = cfg.sim_sample_rate as f64;
    let mut channels = [vec![0.0; n_samples], vec![0.0; n_samples]];
    for ear in 0..2 {
        let out = &mut channels[ear];
        for band in 0..N_BANDS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((ear * N_BANDS + band) as u64);
            let noise: Vec<f64> =
                (0..n_samples).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let filtered = bandpass(&noise, band, sr);
            for (bin, energies) in hist.ears[ear].iter().enumerate() {
                let e = energies[band];
                if e <= 0.0 {
                    continue;
                }
                let w = &filtered[bin * spb..(bin + 1) * spb];
                let we: f64 = w.iter().map(|x| x * x).sum();
                if we <= 0.0 {
                    continue;
                }
                let scale = (e / we).sqrt();
                for (j, &x) in w.iter().enumerate() {
                    out[bin * spb + j] += x * scale;
                }
            }
        }
    }
    let [left, right] = channels;
    Ok((Bir::new(cfg.sim_sample_rate, left, right)?, warnings))
}

/// Full ground-truth oracle for one source/listener pair: trace then
/// synthesize.
pub fn simulate_pair(
    scene: &MaterialAnnotatedMesh,
    source: Vec3,
    listener: Vec3,
    cfg: &SimConfig,
    head: &HeadModel,
    seed: u64,
) -> Result<(Bir, Vec<String>)> {
    let hist = trace(scene, source, listener, cfg, head, seed)?;
    synthesize_bir(&hist, cfg, seed)
}
