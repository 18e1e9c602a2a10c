//! Finite-difference validation of the hand-written backward passes on the
//! auxiliary generator losses (GAN term excluded; the discriminator's own
//! layers are covered by layer-level checks).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bir::PreprocessedBir;
use crate::gan::loss::{
    loss_bir, loss_bir_grad, loss_ed, loss_ed_grad, loss_mse, loss_mse_grad, LossWeights,
};
use crate::gan::{gen_backward, gen_forward, GenGrads, GeneratorParams, COND_DIM};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// coordinates excluded by the |analytic| + |numeric| < 1e-12 rule
    pub skipped: usize,
}

fn objective(
    gen: &GeneratorParams,
    batch: &[([f64; COND_DIM], PreprocessedBir)],
    weights: &LossWeights,
) -> Result<f64> {
    let mut acc = 0.0;
    for (cond, reference) in batch {
        let fake = crate::gan::generate(cond, gen)?;
        acc += weights.bir * loss_bir(&fake, reference)?
            + weights.ed * loss_ed(&fake, reference)?
            + weights.mse * loss_mse(&fake, reference)?;
    }
    Ok(acc / batch.len() as f64)
}

fn analytic_grads(
    gen: &GeneratorParams,
    batch: &[([f64; COND_DIM], PreprocessedBir)],
    weights: &LossWeights,
) -> Result<GenGrads> {
    let mut grads = GenGrads::zeros(gen);
    let total = gen.arch.layout.total_len();
    let b = batch.len() as f64;
    for (cond, reference) in batch {
        let cache = gen_forward(gen, cond);
        let fake = PreprocessedBir::from_raw(
            gen.arch.layout,
            cache.out.channel(0).to_vec(),
            cache.out.channel(1).to_vec(),
        )?;
        let (_, gb) = loss_bir_grad(&fake, reference)?;
        let (_, ge) = loss_ed_grad(&fake, reference)?;
        let (_, gm) = loss_mse_grad(&fake, reference)?;
        let mut sig = crate::gan::nn::Feat::zeros(2, total);
        for ch in 0..2 {
            for i in 0..total {
                *sig.at_mut(ch, i) = (weights.bir * gb.at(ch, i)
                    + weights.ed * ge.at(ch, i)
                    + weights.mse * gm.at(ch, i))
                    / b;
            }
        }
        gen_backward(gen, &cache, &sig, &mut grads);
    }
    Ok(grads)
}

/// Compare analytic parameter gradients of the weighted auxiliary objective
/// against central finite differences (h = 1e-4) on `n_coords` randomly
/// sampled coordinates.
pub fn grad_check(
    gen: &GeneratorParams,
    batch: &[([f64; COND_DIM], PreprocessedBir)],
    weights: &LossWeights,
    n_coords: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    if batch.is_empty() {
        return Err(Error::contract("empty grad-check batch"));
    }
    let grads = analytic_grads(gen, batch, weights)?;
    let flat_analytic: Vec<f64> =
        grads.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    let n_params = flat_analytic.len();

    let mut work = gen.clone();
    let h = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = 0;
    for _ in 0..n_coords {
        let flat_idx = rng.gen_range(0..n_params);
        // map the flat index into (tensor, offset)
        let (mut ti, mut off) = (0usize, flat_idx);
        {
            let tensors = work.tensors_mut();
            while off >= tensors[ti].len() {
                off -= tensors[ti].len();
                ti += 1;
            }
        }
        let orig = work.tensors_mut()[ti][off];
        work.tensors_mut()[ti][off] = orig + h;
        let up = objective(&work, batch, weights)?;
        work.tensors_mut()[ti][off] = orig - h;
        let dn = objective(&work, batch, weights)?;
        work.tensors_mut()[ti][off] = orig;
        let numeric = (up - dn) / (2.0 * h);
        let analytic = flat_analytic[flat_idx];
        if analytic.abs() + numeric.abs() < 1e-12 {
            skipped += 1;
            continue;
        }
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
        max_rel = max_rel.max(rel);
        checked += 1;
    }
    Ok(GradCheckReport { max_rel_error: max_rel, checked, skipped })
}
