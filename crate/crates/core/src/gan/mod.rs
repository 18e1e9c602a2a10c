//! Conditional GAN mapping a 14-d condition (8-d scene latent ++ source ++
//! listener position) to an SD-embedded BIR, with a hand-written
//! reverse-mode differentiation core, the four-term generator objective,
//! and an RMSprop training loop.

pub mod gradcheck;
pub mod loss;
pub mod nn;
pub mod train;

pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::{gan_terms, generator_objective, loss_bir, loss_ed, loss_mse};
pub use train::{train, StepRecord, TrainConfig, TrainRecord};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bir::codec::BirLayout;
use crate::bir::PreprocessedBir;
use crate::gan::nn::{relu, relu_backward, sigmoid, Conv1d, ConvTranspose1d, Feat, Linear};
use crate::graph::SceneLatent;
use crate::tensor_archive::TensorArchive;
use crate::{Error, Result};

/// Condition dimensionality: 8 latent + 3 source + 3 listener.
pub const COND_DIM: usize = 14;

/// Discriminator probability clamp, keeping log terms finite.
pub const PROB_CLAMP: f64 = 1e-7;

/// Assemble a condition vector in the scene frame used by build_graph.
pub fn condition_vector(latent: &SceneLatent, src: [f64; 3], lst: [f64; 3]) -> [f64; COND_DIM] {
    let mut c = [0.0; COND_DIM];
    c[..8].copy_from_slice(latent);
    c[8..11].copy_from_slice(&src);
    c[11..14].copy_from_slice(&lst);
    c
}

/// One upsampling (generator) or downsampling (discriminator) stage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct StageSpec {
    pub stride: usize,
    pub out_channels: usize,
}

/// Generator architecture: affine 14 -> base_channels x base_len, a chain
/// of strided transposed convolutions with ReLU, and a per-position linear
/// head to 2 channels (no output activation).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GenArch {
    pub base_channels: usize,
    pub base_len: usize,
    pub stages: Vec<StageSpec>,
    pub layout: BirLayout,
}

impl GenArch {
    /// Full-scale output: 4096 samples x 2 channels.
    pub fn full() -> Self {
        GenArch {
            base_channels: 32,
            base_len: 8,
            stages: vec![
                StageSpec { stride: 4, out_channels: 32 },
                StageSpec { stride: 4, out_channels: 24 },
                StageSpec { stride: 4, out_channels: 16 },
                StageSpec { stride: 8, out_channels: 8 },
            ],
            layout: BirLayout::FULL,
        }
    }

    /// Desk-scale output: 544 samples x 2 channels (512 + 32 layout).
    pub fn desk() -> Self {
        GenArch {
            base_channels: 32,
            base_len: 17,
            stages: vec![
                StageSpec { stride: 2, out_channels: 24 },
                StageSpec { stride: 2, out_channels: 16 },
                StageSpec { stride: 2, out_channels: 12 },
                StageSpec { stride: 4, out_channels: 8 },
            ],
            layout: BirLayout::DESK,
        }
    }

    /// Sub-1k-parameter architecture for finite-difference validation.
    pub fn tiny() -> Self {
        GenArch {
            base_channels: 4,
            base_len: 72,
            stages: vec![StageSpec { stride: 2, out_channels: 3 }],
            layout: BirLayout { normalized_len: 128, sd_len: 16 },
        }
    }

    pub fn out_len(&self) -> usize {
        self.base_len * self.stages.iter().map(|s| s.stride).product::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_channels == 0 || self.base_len == 0 || self.stages.is_empty() {
            return Err(Error::contract("degenerate generator architecture"));
        }
        if self.stages.iter().any(|s| s.stride % 2 != 0 || s.out_channels == 0) {
            return Err(Error::contract("stage strides must be even and channels positive"));
        }
        if self.out_len() != self.layout.total_len() {
            return Err(Error::contract(format!(
                "architecture output length {} does not match layout {}",
                self.out_len(),
                self.layout.total_len()
            )));
        }
        Ok(())
    }
}

/// Discriminator architecture: the 2-channel signal with the condition
/// broadcast-concatenated as 14 extra channels, a chain of strided
/// convolutions with ReLU, and an affine head to one sigmoid probability.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiscArch {
    pub stages: Vec<StageSpec>,
    pub layout: BirLayout,
}

impl DiscArch {
    pub fn full() -> Self {
        DiscArch {
            stages: vec![
                StageSpec { stride: 8, out_channels: 16 },
                StageSpec { stride: 4, out_channels: 16 },
                StageSpec { stride: 4, out_channels: 12 },
                StageSpec { stride: 4, out_channels: 8 },
            ],
            layout: BirLayout::FULL,
        }
    }

    pub fn desk() -> Self {
        DiscArch {
            stages: vec![
                StageSpec { stride: 4, out_channels: 16 },
                StageSpec { stride: 4, out_channels: 12 },
                StageSpec { stride: 2, out_channels: 8 },
            ],
            layout: BirLayout::DESK,
        }
    }

    pub fn head_len(&self) -> usize {
        let mut l = self.layout.total_len();
        for s in &self.stages {
            l /= s.stride;
        }
        l
    }

    pub fn validate(&self) -> Result<()> {
        let mut l = self.layout.total_len();
        for s in &self.stages {
            if s.stride % 2 != 0 || s.out_channels == 0 {
                return Err(Error::contract("stage strides must be even and channels positive"));
            }
            if l % s.stride != 0 {
                return Err(Error::contract("stage stride must divide its input length"));
            }
            l /= s.stride;
        }
        if l == 0 {
            return Err(Error::contract("discriminator collapses to zero length"));
        }
        Ok(())
    }
}

/// Generator weights.
#[derive(Debug, Clone)]
pub struct GeneratorParams {
    pub arch: GenArch,
    pub input: Linear,
    pub stages: Vec<ConvTranspose1d>,
    /// per-position channel mix to the 2 output channels
    pub head: Linear,
}

impl GeneratorParams {
    pub fn random(arch: GenArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = Linear::random(COND_DIM, arch.base_channels * arch.base_len, &mut rng);
        let mut stages = Vec::new();
        let mut c = arch.base_channels;
        for s in &arch.stages {
            stages.push(ConvTranspose1d::random(c, s.out_channels, s.stride, &mut rng));
            c = s.out_channels;
        }
        let head = Linear::random(c, 2, &mut rng);
        Ok(GeneratorParams { arch, input, stages, head })
    }

    pub fn n_params(&self) -> usize {
        self.input.n_params()
            + self.stages.iter().map(ConvTranspose1d::n_params).sum::<usize>()
            + self.head.n_params()
    }

    /// All weight tensors in the fixed optimizer order (matches
    /// `GenGrads::tensors`).
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut v: Vec<&mut Vec<f64>> = vec![&mut self.input.w, &mut self.input.b];
        for s in &mut self.stages {
            v.push(&mut s.w);
            v.push(&mut s.b);
        }
        v.push(&mut self.head.w);
        v.push(&mut self.head.b);
        v
    }
}

/// Post-ReLU activations cached for the backward pass.
pub struct GenCache {
    pub cond: [f64; COND_DIM],
    /// base map and every post-ReLU stage output
    pub acts: Vec<Feat>,
    pub out: Feat,
}

/// Forward pass caching activations; `generate` wraps this.
pub fn gen_forward(params: &GeneratorParams, cond: &[f64; COND_DIM]) -> GenCache {
    let arch = &params.arch;
    let mut acts = Vec::with_capacity(params.stages.len() + 1);
    let base = params.input.forward(cond);
    let mut x = Feat::from_data(arch.base_channels, arch.base_len, base);
    relu(&mut x);
    acts.push(x);
    for stage in &params.stages {
        let mut y = stage.forward(acts.last().unwrap());
        relu(&mut y);
        acts.push(y);
    }
    let last = acts.last().unwrap();
    let mut out = Feat::zeros(2, last.len);
    for i in 0..last.len {
        let col: Vec<f64> = (0..last.channels).map(|c| last.at(c, i)).collect();
        let o = params.head.forward(&col);
        *out.at_mut(0, i) = o[0];
        *out.at_mut(1, i) = o[1];
    }
    GenCache { cond: *cond, acts, out }
}

/// Gradient buffers matching `GeneratorParams`.
pub struct GenGrads {
    pub input_w: Vec<f64>,
    pub input_b: Vec<f64>,
    pub stages: Vec<(Vec<f64>, Vec<f64>)>,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

impl GenGrads {
    pub fn zeros(p: &GeneratorParams) -> Self {
        GenGrads {
            input_w: vec![0.0; p.input.w.len()],
            input_b: vec![0.0; p.input.b.len()],
            stages: p
                .stages
                .iter()
                .map(|s| (vec![0.0; s.w.len()], vec![0.0; s.b.len()]))
                .collect(),
            head_w: vec![0.0; p.head.w.len()],
            head_b: vec![0.0; p.head.b.len()],
        }
    }

    pub fn scale(&mut self, f: f64) {
        for v in self.iter_mut() {
            *v *= f;
        }
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.input_w
            .iter_mut()
            .chain(self.input_b.iter_mut())
            .chain(self.stages.iter_mut().flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut())))
            .chain(self.head_w.iter_mut())
            .chain(self.head_b.iter_mut())
    }

    /// Gradient tensors in the same order as `GeneratorParams::tensors_mut`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![&self.input_w, &self.input_b];
        for (w, b) in &self.stages {
            v.push(w);
            v.push(b);
        }
        v.push(&self.head_w);
        v.push(&self.head_b);
        v
    }
}

/// Backpropagate a gradient on the generator output into parameter grads
/// (accumulated into `grads`).
pub fn gen_backward(params: &GeneratorParams, cache: &GenCache, grad_out: &Feat, grads: &mut GenGrads) {
    let last = cache.acts.last().unwrap();
    let mut grad = Feat::zeros(last.channels, last.len);
    for i in 0..last.len {
        let col: Vec<f64> = (0..last.channels).map(|c| last.at(c, i)).collect();
        let go = [grad_out.at(0, i), grad_out.at(1, i)];
        let gi = params.head.backward(&col, &go, &mut grads.head_w, &mut grads.head_b);
        for (c, g) in gi.into_iter().enumerate() {
            *grad.at_mut(c, i) = g;
        }
    }
    for (si, stage) in params.stages.iter().enumerate().rev() {
        relu_backward(&cache.acts[si + 1], &mut grad);
        let (gw, gb) = &mut grads.stages[si];
        grad = stage.backward(&cache.acts[si], &grad, gw, gb);
    }
    relu_backward(&cache.acts[0], &mut grad);
    params.input.backward(&cache.cond, &grad.data, &mut grads.input_w, &mut grads.input_b);
}

/// Deterministic generation: condition in, SD-embedded BIR out.
pub fn generate(cond: &[f64; COND_DIM], params: &GeneratorParams) -> Result<PreprocessedBir> {
    if cond.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("non-finite condition vector"));
    }
    let cache = gen_forward(params, cond);
    PreprocessedBir::from_raw(
        params.arch.layout,
        cache.out.channel(0).to_vec(),
        cache.out.channel(1).to_vec(),
    )
}

/// Discriminator weights.
#[derive(Debug, Clone)]
pub struct DiscriminatorParams {
    pub arch: DiscArch,
    pub stages: Vec<Conv1d>,
    pub head: Linear,
}

impl DiscriminatorParams {
    pub fn random(arch: DiscArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stages = Vec::new();
        let mut c = 2 + COND_DIM;
        for s in &arch.stages {
            stages.push(Conv1d::random(c, s.out_channels, s.stride, &mut rng));
            c = s.out_channels;
        }
        let head = Linear::random(c * arch.head_len(), 1, &mut rng);
        Ok(DiscriminatorParams { arch, stages, head })
    }

    pub fn n_params(&self) -> usize {
        self.stages.iter().map(Conv1d::n_params).sum::<usize>() + self.head.n_params()
    }

    /// All weight tensors in the fixed optimizer order (matches
    /// `DiscGrads::tensors`).
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut v: Vec<&mut Vec<f64>> = Vec::new();
        for s in &mut self.stages {
            v.push(&mut s.w);
            v.push(&mut s.b);
        }
        v.push(&mut self.head.w);
        v.push(&mut self.head.b);
        v
    }
}

pub struct DiscCache {
    /// input map and every post-ReLU stage output
    pub acts: Vec<Feat>,
    /// pre-sigmoid logit
    pub logit: f64,
    /// clamped probability
    pub prob: f64,
    /// whether the clamp was active (gradient blocked)
    pub clamped: bool,
}

/// Stack the 2-channel signal with the broadcast condition.
fn disc_input(signal: &PreprocessedBir, cond: &[f64; COND_DIM]) -> Feat {
    let l = signal.layout.total_len();
    let mut x = Feat::zeros(2 + COND_DIM, l);
    x.data[..l].copy_from_slice(&signal.left);
    x.data[l..2 * l].copy_from_slice(&signal.right);
    for (ci, &v) in cond.iter().enumerate() {
        for i in 0..l {
            *x.at_mut(2 + ci, i) = v;
        }
    }
    x
}

pub fn disc_forward(
    params: &DiscriminatorParams,
    signal: &PreprocessedBir,
    cond: &[f64; COND_DIM],
) -> DiscCache {
    let mut acts = vec![disc_input(signal, cond)];
    for stage in &params.stages {
        let mut y = stage.forward(acts.last().unwrap());
        relu(&mut y);
        acts.push(y);
    }
    let logit = params.head.forward(&acts.last().unwrap().data)[0];
    let raw = sigmoid(logit);
    let prob = raw.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    DiscCache { acts, logit, prob, clamped: raw != prob }
}

/// Gradient buffers matching `DiscriminatorParams`.
pub struct DiscGrads {
    pub stages: Vec<(Vec<f64>, Vec<f64>)>,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

impl DiscGrads {
    pub fn zeros(p: &DiscriminatorParams) -> Self {
        DiscGrads {
            stages: p
                .stages
                .iter()
                .map(|s| (vec![0.0; s.w.len()], vec![0.0; s.b.len()]))
                .collect(),
            head_w: vec![0.0; p.head.w.len()],
            head_b: vec![0.0; p.head.b.len()],
        }
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.stages
            .iter_mut()
            .flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
            .chain(self.head_w.iter_mut())
            .chain(self.head_b.iter_mut())
    }

    /// Gradient tensors in the same order as
    /// `DiscriminatorParams::tensors_mut`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for (w, b) in &self.stages {
            v.push(w);
            v.push(b);
        }
        v.push(&self.head_w);
        v.push(&self.head_b);
        v
    }
}

/// Backpropagate dL/d(prob) through the discriminator. Returns the gradient
/// on the 2 signal channels of the input (for generator training); the
/// clamp blocks gradients when active.
pub fn disc_backward(
    params: &DiscriminatorParams,
    cache: &DiscCache,
    grad_prob: f64,
    grads: &mut DiscGrads,
) -> Feat {
    let l = params.arch.layout.total_len();
    if cache.clamped {
        return Feat::zeros(2, l);
    }
    let grad_logit = grad_prob * cache.prob * (1.0 - cache.prob);
    let flat = &cache.acts.last().unwrap().data;
    let gi = params.head.backward(flat, &[grad_logit], &mut grads.head_w, &mut grads.head_b);
    let last = cache.acts.last().unwrap();
    let mut grad = Feat::from_data(last.channels, last.len, gi);
    for (si, stage) in params.stages.iter().enumerate().rev() {
        relu_backward(&cache.acts[si + 1], &mut grad);
        let (gw, gb) = &mut grads.stages[si];
        grad = stage.backward(&cache.acts[si], &grad, gw, gb);
    }
    let mut sig = Feat::zeros(2, l);
    sig.data[..l].copy_from_slice(&grad.data[..l]);
    sig.data[l..].copy_from_slice(&grad.data[l..2 * l]);
    sig
}

const GEN_META_KEY: &str = "gen_arch";
const DISC_META_KEY: &str = "disc_arch";

/// Serialize generator weights (architecture in the manifest metadata).
pub fn gen_to_archive(p: &GeneratorParams, extra_meta: serde_json::Value) -> Result<TensorArchive> {
    let mut meta = serde_json::Map::new();
    meta.insert(GEN_META_KEY.into(), serde_json::to_value(&p.arch)?);
    if let serde_json::Value::Object(m) = extra_meta {
        meta.extend(m);
    }
    let mut a = TensorArchive { meta: serde_json::Value::Object(meta), ..Default::default() };
    a.push("input.w", vec![p.input.n_out, p.input.n_in], p.input.w.clone());
    a.push("input.b", vec![p.input.n_out], p.input.b.clone());
    for (i, s) in p.stages.iter().enumerate() {
        a.push(&format!("stage{i}.w"), vec![s.c_in, s.c_out, s.kernel()], s.w.clone());
        a.push(&format!("stage{i}.b"), vec![s.c_out], s.b.clone());
    }
    a.push("head.w", vec![p.head.n_out, p.head.n_in], p.head.w.clone());
    a.push("head.b", vec![p.head.n_out], p.head.b.clone());
    Ok(a)
}

pub fn gen_from_archive(a: &TensorArchive) -> Result<GeneratorParams> {
    let arch: GenArch = serde_json::from_value(
        a.meta
            .get(GEN_META_KEY)
            .cloned()
            .ok_or_else(|| Error::parse("checkpoint missing generator architecture"))?,
    )?;
    let mut p = GeneratorParams::random(arch, 0)?;
    let fetch = |name: &str, expect: usize| -> Result<Vec<f64>> {
        let (_, data) = a
            .get(name)
            .ok_or_else(|| Error::parse(format!("checkpoint missing tensor {name}")))?;
        if data.len() != expect {
            return Err(Error::parse(format!("tensor {name} has wrong size")));
        }
        Ok(data.to_vec())
    };
    p.input.w = fetch("input.w", p.input.w.len())?;
    p.input.b = fetch("input.b", p.input.b.len())?;
    for (i, s) in p.stages.iter_mut().enumerate() {
        s.w = fetch(&format!("stage{i}.w"), s.w.len())?;
        s.b = fetch(&format!("stage{i}.b"), s.b.len())?;
    }
    p.head.w = fetch("head.w", p.head.w.len())?;
    p.head.b = fetch("head.b", p.head.b.len())?;
    Ok(p)
}

/// Serialize discriminator weights.
pub fn disc_to_archive(p: &DiscriminatorParams) -> Result<TensorArchive> {
    let mut meta = serde_json::Map::new();
    meta.insert(DISC_META_KEY.into(), serde_json::to_value(&p.arch)?);
    let mut a = TensorArchive { meta: serde_json::Value::Object(meta), ..Default::default() };
    for (i, s) in p.stages.iter().enumerate() {
        a.push(&format!("stage{i}.w"), vec![s.c_out, s.c_in, s.kernel()], s.w.clone());
        a.push(&format!("stage{i}.b"), vec![s.c_out], s.b.clone());
    }
    a.push("head.w", vec![p.head.n_out, p.head.n_in], p.head.w.clone());
    a.push("head.b", vec![p.head.n_out], p.head.b.clone());
    Ok(a)
}

pub fn disc_from_archive(a: &TensorArchive) -> Result<DiscriminatorParams> {
    let arch: DiscArch = serde_json::from_value(
        a.meta
            .get(DISC_META_KEY)
            .cloned()
            .ok_or_else(|| Error::parse("checkpoint missing discriminator architecture"))?,
    )?;
    let mut p = DiscriminatorParams::random(arch, 0)?;
    let fetch = |name: &str, expect: usize| -> Result<Vec<f64>> {
        let (_, data) = a
            .get(name)
            .ok_or_else(|| Error::parse(format!("checkpoint missing tensor {name}")))?;
        if data.len() != expect {
            return Err(Error::parse(format!("tensor {name} has wrong size")));
        }
        Ok(data.to_vec())
    };
    for (i, s) in p.stages.iter_mut().enumerate() {
        s.w = fetch(&format!("stage{i}.w"), s.w.len())?;
        s.b = fetch(&format!("stage{i}.b"), s.b.len())?;
    }
    p.head.w = fetch("head.w", p.head.w.len())?;
    p.head.b = fetch("head.b", p.head.b.len())?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_cond(seed: u64) -> [f64; COND_DIM] {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = [0.0; COND_DIM];
        for v in &mut c {
            *v = rng.gen_range(-1.0..1.0);
        }
        c
    }

    #[test]
    fn full_arch_produces_4096x2() {
        let arch = GenArch::full();
        assert_eq!(arch.out_len(), 4096);
        let p = GeneratorParams::random(arch, 1).unwrap();
        let out = generate(&test_cond(0), &p).unwrap();
        assert_eq!(out.left.len(), 4096);
        assert_eq!(out.right.len(), 4096);
    }

    #[test]
    fn generation_is_deterministic() {
        let p = GeneratorParams::random(GenArch::desk(), 3).unwrap();
        let c = test_cond(5);
        let a = generate(&c, &p).unwrap();
        let b = generate(&c, &p).unwrap();
        assert_eq!(a.left, b.left);
        assert_eq!(a.right, b.right);
    }

    #[test]
    fn zero_weights_give_constant_output() {
        let mut p = GeneratorParams::random(GenArch::desk(), 3).unwrap();
        for s in &mut p.stages {
            s.w.iter_mut().for_each(|v| *v = 0.0);
        }
        p.input.w.iter_mut().for_each(|v| *v = 0.0);
        p.head.w.iter_mut().for_each(|v| *v = 0.0);
        p.head.b = vec![0.25, -0.5];
        let out = generate(&test_cond(7), &p).unwrap();
        assert!(out.left.iter().all(|&v| v == 0.25));
        assert!(out.right.iter().all(|&v| v == -0.5));
    }

    #[test]
    fn non_finite_condition_rejected() {
        let p = GeneratorParams::random(GenArch::desk(), 3).unwrap();
        let mut c = test_cond(1);
        c[4] = f64::NAN;
        assert!(generate(&c, &p).is_err());
    }

    #[test]
    fn discriminator_outputs_valid_probability() {
        let gp = GeneratorParams::random(GenArch::desk(), 3).unwrap();
        let dp = DiscriminatorParams::random(DiscArch::desk(), 4).unwrap();
        let c = test_cond(2);
        let sig = generate(&c, &gp).unwrap();
        let cache = disc_forward(&dp, &sig, &c);
        assert!(cache.prob >= PROB_CLAMP && cache.prob <= 1.0 - PROB_CLAMP);
    }

    #[test]
    fn tiny_arch_is_under_5k_params() {
        let p = GeneratorParams::random(GenArch::tiny(), 0).unwrap();
        assert!(p.n_params() < 5000, "tiny generator has {} params", p.n_params());
    }

    #[test]
    fn generator_archive_round_trip() {
        let p = GeneratorParams::random(GenArch::desk(), 11).unwrap();
        let a = gen_to_archive(&p, serde_json::json!({})).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gen.bin");
        a.save(&path).unwrap();
        let b = TensorArchive::load(&path).unwrap();
        let q = gen_from_archive(&b).unwrap();
        let c = test_cond(9);
        let x = generate(&c, &p).unwrap();
        let y = generate(&c, &q).unwrap();
        assert_eq!(x.left, y.left);
        assert_eq!(x.right, y.right);
    }

    #[test]
    fn discriminator_archive_round_trip() {
        let gp = GeneratorParams::random(GenArch::desk(), 3).unwrap();
        let dp = DiscriminatorParams::random(DiscArch::desk(), 8).unwrap();
        let a = disc_to_archive(&dp).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("disc.bin");
        a.save(&path).unwrap();
        let q = disc_from_archive(&TensorArchive::load(&path).unwrap()).unwrap();
        let c = test_cond(2);
        let sig = generate(&c, &gp).unwrap();
        assert_eq!(disc_forward(&dp, &sig, &c).prob, disc_forward(&q, &sig, &c).prob);
    }
}
