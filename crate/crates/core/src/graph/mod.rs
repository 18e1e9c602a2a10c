//! Scene graph construction and the graph encoder: 3 x (GCN + top-k pool)
//! with a mean/max readout producing an 8-d scene latent.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::materials::MaterialAnnotatedMesh;
use crate::tensor_archive::TensorArchive;
use crate::{Error, Result};

/// Graph over mesh vertices with 5-d node features [x, y, z, ab, sc].
/// Edges are unique undirected pairs (i < j), self-loop-free.
#[derive(Debug, Clone)]
pub struct SceneGraph {
    pub node_features: Array2<f64>,
    pub edges: Vec<(usize, usize)>,
}

impl SceneGraph {
    pub fn n_nodes(&self) -> usize {
        self.node_features.nrows()
    }
}

/// Build the scene graph. With `normalize`, coordinates are translated so
/// the AABB minimum sits at the origin (source/listener positions must use
/// the same frame).
pub fn build_graph(mam: &MaterialAnnotatedMesh, normalize: bool) -> SceneGraph {
    let mesh = &mam.mesh;
    let n = mesh.vertices.len();
    let offset = if normalize { mesh.aabb().0 } else { crate::math::Vec3::ZERO };
    let mut features = Array2::zeros((n, 5));
    for (i, v) in mesh.vertices.iter().enumerate() {
        let p = *v - offset;
        features[[i, 0]] = p.x;
        features[[i, 1]] = p.y;
        features[[i, 2]] = p.z;
        features[[i, 3]] = mam.ab[i];
        features[[i, 4]] = mam.sc[i];
    }
    SceneGraph { node_features: features, edges: mesh.edges() }
}

/// One symmetric-normalized graph convolution:
/// `relu(D^{-1/2} (A + I) D^{-1/2} X W)`, evaluated sparsely over the edge
/// list.
pub fn gcn_layer(
    features: &Array2<f64>,
    edges: &[(usize, usize)],
    weight: &Array2<f64>,
) -> Result<Array2<f64>> {
    let n = features.nrows();
    if features.ncols() != weight.nrows() {
        return Err(Error::contract(format!(
            "gcn shape mismatch: features {}x{} vs weight {}x{}",
            n,
            features.ncols(),
            weight.nrows(),
            weight.ncols()
        )));
    }
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::contract("edge index out of range"));
        }
    }
    // degrees of A + I
    let mut deg = vec![1.0f64; n];
    for &(a, b) in edges {
        deg[a] += 1.0;
        deg[b] += 1.0;
    }
    let y = features.dot(weight);
    let d = y.ncols();
    let mut out = Array2::zeros((n, d));
    for i in 0..n {
        let scale = 1.0 / deg[i];
        for c in 0..d {
            out[[i, c]] = y[[i, c]] * scale;
        }
    }
    for &(a, b) in edges {
        let s = 1.0 / (deg[a] * deg[b]).sqrt();
        for c in 0..d {
            let ya = y[[a, c]];
            let yb = y[[b, c]];
            out[[a, c]] += yb * s;
            out[[b, c]] += ya * s;
        }
    }
    out.mapv_inplace(|v| v.max(0.0));
    Ok(out)
}

/// Binary square of the adjacency list: (i, j) are connected when some node
/// is adjacent to both. Self-loops are excluded. Output pairs have i < j.
pub fn adjacency_squared(n: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut set = std::collections::BTreeSet::new();
    for nbrs in &adj {
        for i in 0..nbrs.len() {
            for j in i + 1..nbrs.len() {
                let (a, b) = (nbrs[i].min(nbrs[j]), nbrs[i].max(nbrs[j]));
                if a != b {
                    set.insert((a, b));
                }
            }
        }
    }
    set.into_iter().collect()
}

/// Top-k pooling: keep ceil(keep * N) nodes by projection score, gate kept
/// features with tanh(score), and rewire with the binary square of the
/// adjacency matrix restricted to kept nodes.
pub fn topn_pool(
    features: &Array2<f64>,
    edges: &[(usize, usize)],
    score_vec: &Array1<f64>,
    keep: f64,
) -> Result<(Array2<f64>, Vec<(usize, usize)>)> {
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(Error::contract("keep fraction must be in (0, 1]"));
    }
    let n = features.nrows();
    if features.ncols() != score_vec.len() {
        return Err(Error::contract("pooling score vector dimension mismatch"));
    }
    let k = ((keep * n as f64).ceil() as usize).clamp(1, n);
    let p_norm = score_vec.dot(score_vec).sqrt();
    let scores: Vec<f64> = if p_norm == 0.0 {
        vec![0.0; n]
    } else {
        features.dot(score_vec).iter().map(|s| s / p_norm).collect()
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = order[..k].to_vec();
    kept.sort_unstable();

    let mut out = Array2::zeros((k, features.ncols()));
    for (row, &node) in kept.iter().enumerate() {
        let gate = scores[node].tanh();
        for c in 0..features.ncols() {
            out[[row, c]] = features[[node, c]] * gate;
        }
    }

    let sq = adjacency_squared(n, edges);
    let mut new_index = vec![usize::MAX; n];
    for (row, &node) in kept.iter().enumerate() {
        new_index[node] = row;
    }
    let new_edges = sq
        .into_iter()
        .filter(|&(a, b)| new_index[a] != usize::MAX && new_index[b] != usize::MAX)
        .map(|(a, b)| (new_index[a], new_index[b]))
        .collect();
    Ok((out, new_edges))
}

/// Fixed 8-d latent output dimension.
pub const LATENT_DIM: usize = 8;

/// Encoder weights: 3 GCN layers, 3 pooling score vectors, and a 2-layer
/// readout over concatenated per-layer mean/max statistics.
#[derive(Debug, Clone)]
pub struct GraphEncoderParams {
    pub layer_weights: Vec<Array2<f64>>, // 5->w1, w1->w2, w2->w3
    pub pool_scores: Vec<Array1<f64>>,   // one per layer
    pub readout_w1: Array2<f64>,         // 2*(w1+w2+w3) -> hidden
    pub readout_b1: Array1<f64>,
    pub readout_w2: Array2<f64>, // hidden -> 8
    pub readout_b2: Array1<f64>,
    pub keep: f64,
}

impl GraphEncoderParams {
    /// Random init with the default widths 5 -> 32 -> 32 -> 32, readout
    /// 192 -> 64 -> 8, keep 0.6.
    pub fn random(seed: u64) -> Self {
        Self::random_with_widths(seed, &[32, 32, 32], 64)
    }

    pub fn random_with_widths(seed: u64, widths: &[usize; 3], hidden: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mat = |r: usize, c: usize| {
            let bound = (6.0 / (r + c) as f64).sqrt();
            Array2::from_shape_fn((r, c), |_| rng.gen_range(-bound..bound))
        };
        let layer_weights = vec![mat(5, widths[0]), mat(widths[0], widths[1]), mat(widths[1], widths[2])];
        let readout_in = 2 * (widths[0] + widths[1] + widths[2]);
        let readout_w1 = mat(readout_in, hidden);
        let readout_w2 = mat(hidden, LATENT_DIM);
        let mut rng2 = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let mut vecf = |d: usize| Array1::from_shape_fn(d, |_| rng2.gen_range(-0.5..0.5));
        let pool_scores = vec![vecf(widths[0]), vecf(widths[1]), vecf(widths[2])];
        GraphEncoderParams {
            layer_weights,
            pool_scores,
            readout_w1,
            readout_b1: Array1::zeros(hidden),
            readout_w2,
            readout_b2: Array1::zeros(LATENT_DIM),
            keep: 0.6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_weights.len() != 3 || self.pool_scores.len() != 3 {
            return Err(Error::contract("encoder must have 3 layers"));
        }
        for (w, p) in self.layer_weights.iter().zip(&self.pool_scores) {
            if w.ncols() != p.len() {
                return Err(Error::contract("pool score width must match layer output"));
            }
        }
        let readout_in: usize = 2 * self.layer_weights.iter().map(|w| w.ncols()).sum::<usize>();
        if self.readout_w1.nrows() != readout_in {
            return Err(Error::contract("readout input width mismatch"));
        }
        if self.readout_w2.ncols() != LATENT_DIM {
            return Err(Error::contract("latent dimension must be 8"));
        }
        let all_finite = self
            .layer_weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.pool_scores.iter().flat_map(|p| p.iter()))
            .chain(self.readout_w1.iter())
            .chain(self.readout_b1.iter())
            .chain(self.readout_w2.iter())
            .chain(self.readout_b2.iter())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::numerical("non-finite encoder parameter"));
        }
        Ok(())
    }

    pub fn to_archive(&self) -> TensorArchive {
        let mut a = TensorArchive::default();
        for (i, w) in self.layer_weights.iter().enumerate() {
            a.push(format!("layer{}.weight", i + 1), vec![w.nrows(), w.ncols()], w.iter().copied().collect());
        }
        for (i, p) in self.pool_scores.iter().enumerate() {
            a.push(format!("pool{}.score", i + 1), vec![p.len()], p.to_vec());
        }
        a.push("readout.w1", vec![self.readout_w1.nrows(), self.readout_w1.ncols()], self.readout_w1.iter().copied().collect());
        a.push("readout.b1", vec![self.readout_b1.len()], self.readout_b1.to_vec());
        a.push("readout.w2", vec![self.readout_w2.nrows(), self.readout_w2.ncols()], self.readout_w2.iter().copied().collect());
        a.push("readout.b2", vec![self.readout_b2.len()], self.readout_b2.to_vec());
        a.meta = serde_json::json!({ "keep": self.keep, "kind": "graph-encoder" });
        a
    }

    pub fn from_archive(a: &TensorArchive) -> Result<Self> {
        let get2 = |name: &str| -> Result<Array2<f64>> {
            let (shape, data) = a
                .get(name)
                .ok_or_else(|| Error::parse(format!("missing tensor {name}")))?;
            if shape.len() != 2 {
                return Err(Error::parse(format!("tensor {name} is not 2-d")));
            }
            Array2::from_shape_vec((shape[0], shape[1]), data.to_vec())
                .map_err(|e| Error::parse(e.to_string()))
        };
        let get1 = |name: &str| -> Result<Array1<f64>> {
            let (shape, data) = a
                .get(name)
                .ok_or_else(|| Error::parse(format!("missing tensor {name}")))?;
            if shape.len() != 1 {
                return Err(Error::parse(format!("tensor {name} is not 1-d")));
            }
            Ok(Array1::from_vec(data.to_vec()))
        };
        let params = GraphEncoderParams {
            layer_weights: vec![get2("layer1.weight")?, get2("layer2.weight")?, get2("layer3.weight")?],
            pool_scores: vec![get1("pool1.score")?, get1("pool2.score")?, get1("pool3.score")?],
            readout_w1: get2("readout.w1")?,
            readout_b1: get1("readout.b1")?,
            readout_w2: get2("readout.w2")?,
            readout_b2: get1("readout.b2")?,
            keep: a.meta.get("keep").and_then(|v| v.as_f64()).unwrap_or(0.6),
        };
        params.validate()?;
        Ok(params)
    }
}

/// 8-d scene latent.
pub type SceneLatent = [f64; LATENT_DIM];

/// Encode a scene graph: 3 x (GCN -> pool), record per-layer channel-wise
/// mean and max after each layer, concatenate means then maxes, and run the
/// readout stack.
pub fn encode_scene(graph: &SceneGraph, params: &GraphEncoderParams) -> Result<SceneLatent> {
    params.validate()?;
    if graph.n_nodes() < 3 {
        return Err(Error::contract("graph too small: encoder needs >= 3 nodes"));
    }
    let mut features = graph.node_features.clone();
    let mut edges = graph.edges.clone();
    let mut means: Vec<f64> = Vec::new();
    let mut maxes: Vec<f64> = Vec::new();
    for layer in 0..3 {
        let conv = gcn_layer(&features, &edges, &params.layer_weights[layer])?;
        let (pooled, new_edges) = topn_pool(&conv, &edges, &params.pool_scores[layer], params.keep)?;
        for c in 0..pooled.ncols() {
            let col = pooled.index_axis(Axis(1), c);
            means.push(col.iter().sum::<f64>() / col.len() as f64);
            maxes.push(col.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        features = pooled;
        edges = new_edges;
    }
    let readout_in: Vec<f64> = means.into_iter().chain(maxes).collect();
    let x = Array1::from_vec(readout_in);
    let h = (x.dot(&params.readout_w1) + &params.readout_b1).mapv(|v| v.max(0.0));
    let y = h.dot(&params.readout_w2) + &params.readout_b2;
    let mut latent = [0.0; LATENT_DIM];
    for (slot, v) in latent.iter_mut().zip(y.iter()) {
        if !v.is_finite() {
            return Err(Error::numerical("non-finite latent"));
        }
        *slot = *v;
    }
    Ok(latent)
}
