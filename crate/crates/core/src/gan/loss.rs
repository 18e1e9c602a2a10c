//! The four-term generator objective and discriminator objective, each with
//! analytic gradients with respect to the generated signal.

use rustfft::num_complex::Complex64;

use crate::bir::ed::{ed_relief, ED_LOG_FLOOR};
use crate::bir::PreprocessedBir;
use crate::dsp::stft::{hann, stft, StftConfig};
use crate::gan::nn::Feat;
use crate::gan::{disc_forward, gen_forward, DiscriminatorParams, GeneratorParams, COND_DIM};
use crate::{Error, Result};

/// Weights of the auxiliary generator loss terms (1.0 each by default).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub bir: f64,
    pub ed: f64,
    pub mse: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { bir: 1.0, ed: 1.0, mse: 1.0 }
    }
}

fn check_layout(gen: &PreprocessedBir, reference: &PreprocessedBir) -> Result<()> {
    if gen.layout != reference.layout {
        return Err(Error::contract("generated/reference layout mismatch"));
    }
    Ok(())
}

/// Channel-difference MSE on the SD-normalized samples (SD block excluded):
/// mean of ((L_gen - R_gen) - (L_ref - R_ref))^2.
pub fn loss_bir(gen: &PreprocessedBir, reference: &PreprocessedBir) -> Result<f64> {
    check_layout(gen, reference)?;
    let n = gen.layout.normalized_len;
    let mut acc = 0.0;
    for i in 0..n {
        let d = (gen.left[i] - gen.right[i]) - (reference.left[i] - reference.right[i]);
        acc += d * d;
    }
    Ok(acc / n as f64)
}

/// loss_bir value plus gradient on the generated signal (2 x total_len).
pub fn loss_bir_grad(gen: &PreprocessedBir, reference: &PreprocessedBir) -> Result<(f64, Feat)> {
    check_layout(gen, reference)?;
    let n = gen.layout.normalized_len;
    let total = gen.layout.total_len();
    let mut grad = Feat::zeros(2, total);
    let mut acc = 0.0;
    for i in 0..n {
        let d = (gen.left[i] - gen.right[i]) - (reference.left[i] - reference.right[i]);
        acc += d * d;
        *grad.at_mut(0, i) = 2.0 * d / n as f64;
        *grad.at_mut(1, i) = -2.0 * d / n as f64;
    }
    Ok((acc / n as f64, grad))
}

/// Log energy-decay-relief MSE: mean over channels, bins, and frames of
/// (log(ED_ref + eps) - log(ED_gen + eps))^2 on the de-SD-blocked samples.
pub fn loss_ed(gen: &PreprocessedBir, reference: &PreprocessedBir) -> Result<f64> {
    Ok(loss_ed_grad(gen, reference)?.0)
}

/// loss_ed value plus gradient on the generated signal. The gradient flows
/// through the STFT adjoint; the SD block receives zero gradient.
pub fn loss_ed_grad(gen: &PreprocessedBir, reference: &PreprocessedBir) -> Result<(f64, Feat)> {
    check_layout(gen, reference)?;
    let cfg = StftConfig::default();
    let n = gen.layout.normalized_len;
    let total = gen.layout.total_len();
    let w = hann(cfg.window);
    let mut grad = Feat::zeros(2, total);
    let mut loss = 0.0;
    let mut norm = 0.0;
    for (ch, (gch, rch)) in [(&gen.left, &reference.left), (&gen.right, &reference.right)]
        .into_iter()
        .enumerate()
    {
        let frames = stft(&gch[..n], cfg)?;
        let ed_gen = ed_relief(&gch[..n], cfg)?;
        let ed_ref = ed_relief(&rch[..n], cfg)?;
        let n_frames = ed_gen.n_frames();
        let n_bins = ed_gen.n_bins();
        norm += (n_frames * n_bins) as f64;

        // dL/dED (un-normalized; divided by the grand total at the end)
        let mut d_ed = vec![vec![0.0; n_bins]; n_frames];
        for f in 0..n_frames {
            for b in 0..n_bins {
                let g = ed_gen.values[f][b] + ED_LOG_FLOOR;
                let r = ed_ref.values[f][b] + ED_LOG_FLOOR;
                let diff = g.ln() - r.ln();
                loss += diff * diff;
                d_ed[f][b] = 2.0 * diff / g;
            }
        }
        // ED[f] = sum_{t >= f} P[t]  =>  dL/dP[t] = sum_{f <= t} dL/dED[f]
        for b in 0..n_bins {
            let mut run = 0.0;
            for f in 0..n_frames {
                run += d_ed[f][b];
                d_ed[f][b] = run;
            }
        }
        // P[t][b] = |H|^2 with H = sum_n w[n] x[t*hop + n] e^{-i 2 pi b n / W}
        // dP/dx[n] = 2 w[n] Re(H e^{+i 2 pi b n / W})
        let gch_grad = &mut grad.data[ch * total..ch * total + n];
        for (t, frame) in frames.iter().enumerate() {
            let start = t * cfg.hop;
            for b in 0..n_bins {
                let g = d_ed[t][b];
                if g == 0.0 {
                    continue;
                }
                let h: Complex64 = frame[b];
                let theta = std::f64::consts::TAU * b as f64 / cfg.window as f64;
                for nn in 0..cfg.window {
                    let e = Complex64::from_polar(1.0, theta * nn as f64);
                    gch_grad[start + nn] += g * 2.0 * w[nn] * (h * e).re;
                }
            }
        }
    }
    loss /= norm;
    for v in &mut grad.data {
        *v /= norm;
    }
    Ok((loss, grad))
}

/// Plain sample MSE over all values including the SD block, so the
/// generator learns the SD encoding.
pub fn loss_mse(gen: &PreprocessedBir, reference: &PreprocessedBir) -> Result<f64> {
    check_layout(gen, reference)?;
    let n = 2 * gen.layout.total_len();
    let acc: f64 = gen
        .left
        .iter()
        .chain(&gen.right)
        .zip(reference.left.iter().chain(&reference.right))
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(acc / n as f64)
}

/// loss_mse value plus gradient on the generated signal.
pub fn loss_mse_grad(gen: &PreprocessedBir, reference: &PreprocessedBir) -> Result<(f64, Feat)> {
    check_layout(gen, reference)?;
    let total = gen.layout.total_len();
    let n = (2 * total) as f64;
    let mut grad = Feat::zeros(2, total);
    let mut acc = 0.0;
    for (ch, (g, r)) in
        [(&gen.left, &reference.left), (&gen.right, &reference.right)].into_iter().enumerate()
    {
        for i in 0..total {
            let d = g[i] - r[i];
            acc += d * d;
            grad.data[ch * total + i] = 2.0 * d / n;
        }
    }
    Ok((acc / n, grad))
}

/// Adversarial terms from clamped discriminator probabilities:
/// L_CGAN = log(1 - d_fake) (minimized by the generator, saturating form)
/// and L_D = log(d_real) + log(1 - d_fake) (maximized by the discriminator).
pub fn gan_terms(d_real: f64, d_fake: f64) -> (f64, f64) {
    let l_cgan = (1.0 - d_fake).ln();
    (l_cgan, d_real.ln() + l_cgan)
}

/// Full generator objective over a batch: mean of
/// L_CGAN + w.bir * L_BIR + w.ed * L_ED + w.mse * L_MSE.
pub fn generator_objective(
    batch: &[([f64; COND_DIM], PreprocessedBir)],
    gen: &GeneratorParams,
    disc: &DiscriminatorParams,
    weights: &LossWeights,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::contract("empty batch"));
    }
    let mut acc = 0.0;
    for (cond, reference) in batch {
        let cache = gen_forward(gen, cond);
        let fake = PreprocessedBir::from_raw(
            gen.arch.layout,
            cache.out.channel(0).to_vec(),
            cache.out.channel(1).to_vec(),
        )?;
        let d_fake = disc_forward(disc, &fake, cond).prob;
        let (l_cgan, _) = gan_terms(0.5, d_fake);
        acc += l_cgan
            + weights.bir * loss_bir(&fake, reference)?
            + weights.ed * loss_ed(&fake, reference)?
            + weights.mse * loss_mse(&fake, reference)?;
    }
    Ok(acc / batch.len() as f64)
}
