//! Alternating RMSprop training of the conditional GAN with a stepped
//! schedule (lr 8e-5, decayed to 0.7x every 7 epochs, batch 96).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bir::PreprocessedBir;
use crate::gan::loss::{loss_bir_grad, loss_ed_grad, loss_mse_grad, LossWeights};
use crate::gan::{
    condition_vector, disc_backward, disc_forward, gen_backward, gen_forward, DiscArch,
    DiscGrads, DiscriminatorParams, GenArch, GenGrads, GeneratorParams, COND_DIM,
};
use crate::graph::SceneLatent;
use crate::{Error, Result};

/// One training example: precomputed scene latent, positions, and the
/// SD-embedded reference BIR.
#[derive(Debug, Clone)]
pub struct TrainRecord {
    pub latent: SceneLatent,
    pub src: [f64; 3],
    pub lst: [f64; 3],
    pub bir: PreprocessedBir,
}

/// Optimizer and schedule settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub weights: LossWeights,
    pub lr: f64,
    /// multiplier applied every `decay_every` epochs
    pub lr_decay: f64,
    pub decay_every: usize,
    pub batch: usize,
    pub epochs: usize,
    pub rmsprop_decay: f64,
    pub rmsprop_eps: f64,
    /// generator GAN term: false = saturating log(1 - D) (as printed),
    /// true = non-saturating -log D
    pub non_saturating: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            weights: LossWeights::default(),
            lr: 8e-5,
            lr_decay: 0.7,
            decay_every: 7,
            batch: 96,
            epochs: 100,
            rmsprop_decay: 0.99,
            rmsprop_eps: 1e-8,
            non_saturating: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 || self.lr_decay <= 0.0 || self.decay_every == 0 {
            return Err(Error::contract("learning-rate schedule must be positive"));
        }
        if self.weights.bir < 0.0 || self.weights.ed < 0.0 || self.weights.mse < 0.0 {
            return Err(Error::contract("loss weights must be non-negative"));
        }
        if self.batch == 0 || self.epochs == 0 {
            return Err(Error::contract("batch and epochs must be positive"));
        }
        Ok(())
    }

    /// Learning rate in effect for a given 0-based epoch.
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        self.lr * self.lr_decay.powi((epoch / self.decay_every) as i32)
    }
}

/// One history row per optimizer step (one batch).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub l_cgan: f64,
    pub l_bir: f64,
    pub l_ed: f64,
    pub l_mse: f64,
    pub l_d: f64,
    pub lr: f64,
}

/// Render the history in the checkpoint CSV layout.
pub fn history_csv(history: &[StepRecord]) -> String {
    let mut out = String::from("step,l_cgan,l_bir,l_ed,l_mse,l_d,lr\n");
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.step, r.l_cgan, r.l_bir, r.l_ed, r.l_mse, r.l_d, r.lr
        ));
    }
    out
}

/// Per-tensor RMSprop accumulator.
struct RmsProp {
    decay: f64,
    eps: f64,
    state: Vec<Vec<f64>>,
}

impl RmsProp {
    fn new(sizes: &[usize], decay: f64, eps: f64) -> Self {
        RmsProp { decay, eps, state: sizes.iter().map(|&n| vec![0.0; n]).collect() }
    }

    fn step(&mut self, params: Vec<&mut Vec<f64>>, grads: Vec<&[f64]>, lr: f64) {
        for ((p, g), v) in params.into_iter().zip(grads).zip(&mut self.state) {
            for i in 0..p.len() {
                v[i] = self.decay * v[i] + (1.0 - self.decay) * g[i] * g[i];
                p[i] -= lr * g[i] / (v[i].sqrt() + self.eps);
            }
        }
    }
}

fn check_finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numerical(format!("non-finite loss term {name}: {v}")))
    }
}

/// Alternating training: per batch, one discriminator ascent step on L_D
/// followed by one generator descent step on L_G. Single-threaded and
/// bitwise deterministic for a fixed seed.
pub fn train(
    dataset: &[TrainRecord],
    gen_arch: GenArch,
    disc_arch: DiscArch,
    cfg: &TrainConfig,
) -> Result<(GeneratorParams, DiscriminatorParams, Vec<StepRecord>)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::contract("empty training dataset"));
    }
    if gen_arch.layout != disc_arch.layout {
        return Err(Error::contract("generator/discriminator layout mismatch"));
    }
    for (i, r) in dataset.iter().enumerate() {
        if r.bir.layout != gen_arch.layout {
            return Err(Error::contract(format!("record {i} layout mismatch")));
        }
    }

    let mut gen = GeneratorParams::random(gen_arch, cfg.seed)?;
    let mut disc = DiscriminatorParams::random(disc_arch, cfg.seed.wrapping_add(1))?;
    let gen_sizes: Vec<usize> = GenGrads::zeros(&gen).tensors().iter().map(|t| t.len()).collect();
    let disc_sizes: Vec<usize> =
        DiscGrads::zeros(&disc).tensors().iter().map(|t| t.len()).collect();
    let mut gen_opt = RmsProp::new(&gen_sizes, cfg.rmsprop_decay, cfg.rmsprop_eps);
    let mut disc_opt = RmsProp::new(&disc_sizes, cfg.rmsprop_decay, cfg.rmsprop_eps);

    let conds: Vec<[f64; COND_DIM]> =
        dataset.iter().map(|r| condition_vector(&r.latent, r.src, r.lst)).collect();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let mut history = Vec::new();
    let mut step = 0usize;
    let total_len = gen.arch.layout.total_len();

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at_epoch(epoch);
        order.shuffle(&mut shuffle_rng);
        for batch_idx in order.chunks(cfg.batch) {
            let bsz = batch_idx.len() as f64;

            // --- discriminator step: ascend L_D = log D(real) + log(1 - D(fake))
            let mut dgrads = DiscGrads::zeros(&disc);
            let mut l_d = 0.0;
            for &i in batch_idx {
                let cond = &conds[i];
                let fake_cache = gen_forward(&gen, cond);
                let fake = PreprocessedBir::from_raw(
                    gen.arch.layout,
                    fake_cache.out.channel(0).to_vec(),
                    fake_cache.out.channel(1).to_vec(),
                )?;
                let real_cache = disc_forward(&disc, &dataset[i].bir, cond);
                let fake_disc = disc_forward(&disc, &fake, cond);
                l_d += real_cache.prob.ln() + (1.0 - fake_disc.prob).ln();
                // minimize -L_D
                disc_backward(&disc, &real_cache, -1.0 / real_cache.prob / bsz, &mut dgrads);
                disc_backward(
                    &disc,
                    &fake_disc,
                    1.0 / (1.0 - fake_disc.prob) / bsz,
                    &mut dgrads,
                );
            }
            l_d = check_finite("L_D", l_d / bsz)?;
            disc_opt.step(disc.tensors_mut(), dgrads.tensors(), lr);

            // --- generator step: descend L_G
            let mut ggrads = GenGrads::zeros(&gen);
            let (mut l_cgan, mut l_bir, mut l_ed, mut l_mse) = (0.0, 0.0, 0.0, 0.0);
            for &i in batch_idx {
                let cond = &conds[i];
                let cache = gen_forward(&gen, cond);
                let fake = PreprocessedBir::from_raw(
                    gen.arch.layout,
                    cache.out.channel(0).to_vec(),
                    cache.out.channel(1).to_vec(),
                )?;
                let fake_disc = disc_forward(&disc, &fake, cond);
                let d = fake_disc.prob;
                let (term, d_grad_prob) = if cfg.non_saturating {
                    (-d.ln(), -1.0 / d)
                } else {
                    ((1.0 - d).ln(), -1.0 / (1.0 - d))
                };
                l_cgan += term;
                let (vb, gb) = loss_bir_grad(&fake, &dataset[i].bir)?;
                let (ve, ge) = loss_ed_grad(&fake, &dataset[i].bir)?;
                let (vm, gm) = loss_mse_grad(&fake, &dataset[i].bir)?;
                l_bir += vb;
                l_ed += ve;
                l_mse += vm;

                // combined gradient on the generated signal
                let mut scratch = DiscGrads::zeros(&disc);
                let mut sig =
                    disc_backward(&disc, &fake_disc, d_grad_prob / bsz, &mut scratch);
                for ch in 0..2 {
                    for j in 0..total_len {
                        *sig.at_mut(ch, j) += (cfg.weights.bir * gb.at(ch, j)
                            + cfg.weights.ed * ge.at(ch, j)
                            + cfg.weights.mse * gm.at(ch, j))
                            / bsz;
                    }
                }
                gen_backward(&gen, &cache, &sig, &mut ggrads);
            }
            l_cgan = check_finite("L_CGAN", l_cgan / bsz)?;
            l_bir = check_finite("L_BIR", l_bir / bsz)?;
            l_ed = check_finite("L_ED", l_ed / bsz)?;
            l_mse = check_finite("L_MSE", l_mse / bsz)?;
            gen_opt.step(gen.tensors_mut(), ggrads.tensors(), lr);

            history.push(StepRecord { step, l_cgan, l_bir, l_ed, l_mse, l_d, lr });
            step += 1;
        }
    }
    Ok((gen, disc, history))
}
