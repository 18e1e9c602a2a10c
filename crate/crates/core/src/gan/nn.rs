//! Minimal dense/convolution layers with hand-written forward and backward
//! passes, sized for the small conditional GAN used here.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Channels-first 1-d feature map.
#[derive(Debug, Clone)]
pub struct Feat {
    pub channels: usize,
    pub len: usize,
    pub data: Vec<f64>,
}

impl Feat {
    pub fn zeros(channels: usize, len: usize) -> Self {
        Feat { channels, len, data: vec![0.0; channels * len] }
    }

    pub fn from_data(channels: usize, len: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), channels * len);
        Feat { channels, len, data }
    }

    #[inline]
    pub fn at(&self, c: usize, i: usize) -> f64 {
        self.data[c * self.len + i]
    }

    #[inline]
    pub fn at_mut(&mut self, c: usize, i: usize) -> &mut f64 {
        &mut self.data[c * self.len + i]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.len..(c + 1) * self.len]
    }
}

fn xavier(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
}

/// Fully connected layer, `w` stored row-major as out x in.
#[derive(Debug, Clone)]
pub struct Linear {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Linear {
    pub fn random(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        Linear { n_in, n_out, w: xavier(rng, n_in, n_out, n_in * n_out), b: vec![0.0; n_out] }
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_in);
        let mut out = self.b.clone();
        for (o, out_v) in out.iter_mut().enumerate() {
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            *out_v += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        out
    }

    /// Returns grad wrt input; accumulates parameter grads into `gw`/`gb`.
    pub fn backward(
        &self,
        x: &[f64],
        grad_out: &[f64],
        gw: &mut [f64],
        gb: &mut [f64],
    ) -> Vec<f64> {
        let mut grad_in = vec![0.0; self.n_in];
        for o in 0..self.n_out {
            let g = grad_out[o];
            gb[o] += g;
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            let grow = &mut gw[o * self.n_in..(o + 1) * self.n_in];
            for i in 0..self.n_in {
                grow[i] += g * x[i];
                grad_in[i] += g * row[i];
            }
        }
        grad_in
    }
}

/// Transposed 1-d convolution with kernel = 2 x stride and padding =
/// stride / 2, so the output length is exactly `stride x` the input length.
/// Weights stored as `w[cin][cout][k]`.
#[derive(Debug, Clone)]
pub struct ConvTranspose1d {
    pub c_in: usize,
    pub c_out: usize,
    pub stride: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl ConvTranspose1d {
    pub fn kernel(&self) -> usize {
        2 * self.stride
    }

    pub fn random(c_in: usize, c_out: usize, stride: usize, rng: &mut ChaCha8Rng) -> Self {
        assert!(stride % 2 == 0, "stride must be even for symmetric padding");
        let k = 2 * stride;
        ConvTranspose1d {
            c_in,
            c_out,
            stride,
            w: xavier(rng, c_in * k, c_out * k, c_in * c_out * k),
            b: vec![0.0; c_out],
        }
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    #[inline]
    fn widx(&self, ci: usize, co: usize, k: usize) -> usize {
        (ci * self.c_out + co) * self.kernel() + k
    }

    pub fn out_len(&self, l_in: usize) -> usize {
        l_in * self.stride
    }

    pub fn forward(&self, x: &Feat) -> Feat {
        debug_assert_eq!(x.channels, self.c_in);
        let l_out = self.out_len(x.len);
        let pad = self.stride / 2;
        let k = self.kernel();
        let mut out = Feat::zeros(self.c_out, l_out);
        for co in 0..self.c_out {
            let bias = self.b[co];
            for v in out.data[co * l_out..(co + 1) * l_out].iter_mut() {
                *v = bias;
            }
        }
        for ci in 0..self.c_in {
            let xc = &x.data[ci * x.len..(ci + 1) * x.len];
            for co in 0..self.c_out {
                let wrow = &self.w[self.widx(ci, co, 0)..self.widx(ci, co, 0) + k];
                let oc = &mut out.data[co * l_out..(co + 1) * l_out];
                for (i, &xv) in xc.iter().enumerate() {
                    if xv == 0.0 {
                        continue;
                    }
                    let base = i * self.stride;
                    for (kk, &wv) in wrow.iter().enumerate() {
                        let o = base + kk;
                        if o >= pad && o - pad < l_out {
                            oc[o - pad] += xv * wv;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn backward(
        &self,
        x: &Feat,
        grad_out: &Feat,
        gw: &mut [f64],
        gb: &mut [f64],
    ) -> Feat {
        let l_out = grad_out.len;
        let pad = self.stride / 2;
        let k = self.kernel();
        let mut grad_in = Feat::zeros(self.c_in, x.len);
        for co in 0..self.c_out {
            gb[co] += grad_out.data[co * l_out..(co + 1) * l_out].iter().sum::<f64>();
        }
        for ci in 0..self.c_in {
            let xc = &x.data[ci * x.len..(ci + 1) * x.len];
            let gic = &mut grad_in.data[ci * x.len..(ci + 1) * x.len];
            for co in 0..self.c_out {
                let wrow = &self.w[self.widx(ci, co, 0)..self.widx(ci, co, 0) + k];
                let gwrow = &mut gw[self.widx(ci, co, 0)..self.widx(ci, co, 0) + k];
                let goc = &grad_out.data[co * l_out..(co + 1) * l_out];
                for i in 0..x.len {
                    let base = i * self.stride;
                    let mut acc = 0.0;
                    for kk in 0..k {
                        let o = base + kk;
                        if o >= pad && o - pad < l_out {
                            let g = goc[o - pad];
                            acc += g * wrow[kk];
                            gwrow[kk] += g * xc[i];
                        }
                    }
                    gic[i] += acc;
                }
            }
        }
        grad_in
    }
}

/// Strided 1-d convolution with kernel = 2 x stride and padding =
/// stride / 2, so the output length is exactly input length / stride.
/// Weights stored as `w[cout][cin][k]`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub c_in: usize,
    pub c_out: usize,
    pub stride: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Conv1d {
    pub fn kernel(&self) -> usize {
        2 * self.stride
    }

    pub fn random(c_in: usize, c_out: usize, stride: usize, rng: &mut ChaCha8Rng) -> Self {
        assert!(stride % 2 == 0, "stride must be even for symmetric padding");
        let k = 2 * stride;
        Conv1d {
            c_in,
            c_out,
            stride,
            w: xavier(rng, c_in * k, c_out * k, c_in * c_out * k),
            b: vec![0.0; c_out],
        }
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    #[inline]
    fn widx(&self, co: usize, ci: usize, k: usize) -> usize {
        (co * self.c_in + ci) * self.kernel() + k
    }

    pub fn out_len(&self, l_in: usize) -> usize {
        debug_assert_eq!(l_in % self.stride, 0);
        l_in / self.stride
    }

    pub fn forward(&self, x: &Feat) -> Feat {
        debug_assert_eq!(x.channels, self.c_in);
        let l_out = self.out_len(x.len);
        let pad = self.stride / 2;
        let k = self.kernel();
        let mut out = Feat::zeros(self.c_out, l_out);
        for co in 0..self.c_out {
            let oc = &mut out.data[co * l_out..(co + 1) * l_out];
            for v in oc.iter_mut() {
                *v = self.b[co];
            }
            for ci in 0..self.c_in {
                let xc = &x.data[ci * x.len..(ci + 1) * x.len];
                let wrow = &self.w[self.widx(co, ci, 0)..self.widx(co, ci, 0) + k];
                for (o, ov) in oc.iter_mut().enumerate() {
                    let base = o * self.stride;
                    let mut acc = 0.0;
                    for (kk, &wv) in wrow.iter().enumerate() {
                        let ii = base + kk;
                        if ii >= pad && ii - pad < x.len {
                            acc += wv * xc[ii - pad];
                        }
                    }
                    *ov += acc;
                }
            }
        }
        out
    }

    pub fn backward(
        &self,
        x: &Feat,
        grad_out: &Feat,
        gw: &mut [f64],
        gb: &mut [f64],
    ) -> Feat {
        let l_out = grad_out.len;
        let pad = self.stride / 2;
        let k = self.kernel();
        let mut grad_in = Feat::zeros(self.c_in, x.len);
        for co in 0..self.c_out {
            let goc = &grad_out.data[co * l_out..(co + 1) * l_out];
            gb[co] += goc.iter().sum::<f64>();
            for ci in 0..self.c_in {
                let xc = &x.data[ci * x.len..(ci + 1) * x.len];
                let wrow = &self.w[self.widx(co, ci, 0)..self.widx(co, ci, 0) + k];
                let gwrow = &mut gw[self.widx(co, ci, 0)..self.widx(co, ci, 0) + k];
                let gic = &mut grad_in.data[ci * x.len..(ci + 1) * x.len];
                for (o, &g) in goc.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    let base = o * self.stride;
                    for kk in 0..k {
                        let ii = base + kk;
                        if ii >= pad && ii - pad < x.len {
                            gwrow[kk] += g * xc[ii - pad];
                            gic[ii - pad] += g * wrow[kk];
                        }
                    }
                }
            }
        }
        grad_in
    }
}

/// In-place ReLU; returns the activation (used as the backward mask).
pub fn relu(x: &mut Feat) {
    for v in &mut x.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Backward through ReLU given the post-activation values.
pub fn relu_backward(activated: &Feat, grad: &mut Feat) {
    for (g, &a) in grad.data.iter_mut().zip(&activated.data) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
