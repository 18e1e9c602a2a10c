//! Acceptance suite: 12 end-to-end criteria, one test (and one printed
//! PASS line) per criterion. Every numeric check is validated against an
//! oracle computed independently inside this file, not against the
//! library's own intermediate values.

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use birkit::bir::codec::{postprocess_bir, preprocess_bir, BirLayout, PreprocessedBir};
use birkit::bir::metrics::{drr, edt, exponential_ir, t60};
use birkit::bir::{ed_relief, Bir};
use birkit::dsp::bands::N_BANDS;
use birkit::dsp::stft::StftConfig;
use birkit::gan::gradcheck::grad_check;
use birkit::gan::loss::LossWeights;
use birkit::gan::train::{train, TrainConfig, TrainRecord};
use birkit::gan::{condition_vector, generate, DiscArch, GenArch, GeneratorParams};
use birkit::geometry::close::{close_mesh, is_watertight};
use birkit::geometry::simplify::simplify;
use birkit::geometry::{box_mesh, AnnotatedMesh};
use birkit::graph::{encode_scene, gcn_layer, topn_pool, GraphEncoderParams, SceneGraph};
use birkit::math::Vec3;
use birkit::ray::test_support::shoebox;
use birkit::ray::{grid_positions, split_sources_listeners, trace, HeadModel, SimConfig};
use birkit::ray::simulate_pair;
use birkit::render::{convolve, render_walkthrough, PathPoint, SourceSpec, WalkthroughSpec};

fn pass(n: usize, detail: &str) {
    println!("criterion {n:02} [PASS] {detail}");
}

// ---------------------------------------------------------------- 1: codec

#[test]
fn acceptance_01_codec_round_trip() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut max_rel = 0.0f64;
    let mut max_ild = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(3968..6000);
        let left: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let right: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bir = Bir::new(16_000, left.clone(), right.clone()).unwrap();
        let (pre, warnings) = preprocess_bir(&bir, BirLayout::FULL).unwrap();
        assert!(warnings.is_empty());
        let back = postprocess_bir(&pre).unwrap();
        assert_eq!(back.len(), 3968);
        let mut err = 0.0;
        let mut norm = 0.0;
        for i in 0..3968 {
            err += (back.left[i] - left[i]).powi(2) + (back.right[i] - right[i]).powi(2);
            norm += left[i].powi(2) + right[i].powi(2);
        }
        max_rel = max_rel.max((err / norm).sqrt());
        // ILD preservation: inter-channel sample ratios are unchanged,
        // checked cross-multiplied to avoid dividing by small samples
        for i in 0..3968 {
            let cross = (back.left[i] * right[i] - back.right[i] * left[i]).abs();
            let scale = left[i].abs().max(right[i].abs()).max(1e-12);
            max_ild = max_ild.max(cross / scale);
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(max_rel < 1e-6, "round-trip relative L2 {max_rel}");
    assert!(max_ild < 1e-9, "inter-channel ratio drift {max_ild}");
    assert!(dt < 5.0, "runtime {dt:.2}s exceeds 5s");
    pass(1, &format!("100 round trips, rel L2 <= {max_rel:.2e}, {dt:.2}s"));
}

// ------------------------------------------------------------ 2: GCN oracle

/// Dense oracle: relu(D^{-1/2} (A + I) D^{-1/2} X W) with explicit matrices.
fn dense_gcn(x: &Array2<f64>, edges: &[(usize, usize)], w: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut a = Array2::<f64>::eye(n);
    for &(i, j) in edges {
        a[[i, j]] = 1.0;
        a[[j, i]] = 1.0;
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    let mut norm = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            norm[[i, j]] = a[[i, j]] / (deg[i] * deg[j]).sqrt();
        }
    }
    let mut out = norm.dot(x).dot(w);
    out.mapv_inplace(|v| v.max(0.0));
    out
}

fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> (Array2<f64>, Vec<(usize, usize)>) {
    let n = rng.gen_range(2..=max_nodes);
    let f = rng.gen_range(2..8);
    let x = Array2::from_shape_fn((n, f), |_| rng.gen_range(-2.0..2.0));
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.15) {
                edges.push((i, j));
            }
        }
    }
    (x, edges)
}

#[test]
fn acceptance_02_gcn_matches_dense_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut max_rel = 0.0f64;
    for _ in 0..50 {
        let (x, edges) = random_graph(&mut rng, 200);
        let w = Array2::from_shape_fn((x.ncols(), rng.gen_range(2..6)), |_| {
            rng.gen_range(-1.0..1.0)
        });
        let got = gcn_layer(&x, &edges, &w).unwrap();
        let want = dense_gcn(&x, &edges, &w);
        let num: f64 = (&got - &want).iter().map(|v| v * v).sum::<f64>().sqrt();
        let den: f64 = want.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-30);
        max_rel = max_rel.max(num / den);
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(max_rel < 1e-6, "max relative error {max_rel}");
    assert!(dt < 10.0, "runtime {dt:.2}s exceeds 10s");
    pass(2, &format!("50 graphs <= 200 nodes, rel err <= {max_rel:.2e}, {dt:.2}s"));
}

// --------------------------------------------------------------- 3: pooling

#[test]
fn acceptance_03_pooling_count_and_a2_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    // node-count contract for every N in 3..100
    for n in 3..=100usize {
        let x = Array2::from_shape_fn((n, 4), |_| rng.gen_range(-1.0..1.0));
        let p = Array1::from_shape_fn(4, |_| rng.gen_range(-1.0..1.0));
        let (pooled, _) = topn_pool(&x, &[], &p, 0.6).unwrap();
        let want = (0.6 * n as f64).ceil() as usize;
        assert_eq!(pooled.nrows(), want, "N = {n}");
    }
    // A^2 edge oracle on graphs <= 50 nodes: boolean matrix square
    for _ in 0..30 {
        let (x, edges) = random_graph(&mut rng, 50);
        let n = x.nrows();
        let p = Array1::from_shape_fn(x.ncols(), |_| rng.gen_range(-1.0..1.0));
        let (_, new_edges) = topn_pool(&x, &edges, &p, 0.6).unwrap();

        // oracle kept set: top ceil(0.6 n) scores (continuous features make
        // ties measure-zero)
        let p_norm = p.dot(&p).sqrt();
        let scores: Vec<f64> = x.dot(&p).iter().map(|s| s / p_norm).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let k = (0.6 * n as f64).ceil() as usize;
        let mut kept = order[..k].to_vec();
        kept.sort_unstable();

        // boolean square of the adjacency matrix
        let mut a = vec![vec![false; n]; n];
        for &(i, j) in &edges {
            a[i][j] = true;
            a[j][i] = true;
        }
        let mut want: Vec<(usize, usize)> = Vec::new();
        for (ri, &i) in kept.iter().enumerate() {
            for (rj, &j) in kept.iter().enumerate().skip(ri + 1) {
                if (0..n).any(|m| a[i][m] && a[m][j]) {
                    want.push((ri, rj));
                }
            }
        }
        let mut got = new_edges.clone();
        got.sort_unstable();
        want.sort_unstable();
        assert_eq!(got, want, "A^2 edge sets differ on a {n}-node graph");
    }
    pass(3, "ceil(0.6 N) for N in 3..100; A^2 oracle on 30 graphs <= 50 nodes");
}

// ------------------------------------------- 4: encoder permutation invariance

#[test]
fn acceptance_04_encoder_permutation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for g in 0..20 {
        let (x, edges) = random_graph(&mut rng, 40);
        let n = x.nrows();
        // 5-d features expected by the encoder
        let feats = Array2::from_shape_fn((n, 5), |_| rng.gen_range(-1.0..1.0));
        let graph = SceneGraph { node_features: feats.clone(), edges: edges.clone() };
        let params = GraphEncoderParams::random(1000 + g);
        let base = encode_scene(&graph, &params).unwrap();
        for _ in 0..5 {
            // random permutation of node order
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            // perm[old] = new
            let mut pf = Array2::zeros((n, 5));
            for old in 0..n {
                for c in 0..5 {
                    pf[[perm[old], c]] = feats[[old, c]];
                }
            }
            let pe: Vec<(usize, usize)> = edges
                .iter()
                .map(|&(a, b)| {
                    let (a, b) = (perm[a], perm[b]);
                    (a.min(b), a.max(b))
                })
                .collect();
            let permuted = SceneGraph { node_features: pf, edges: pe };
            let latent = encode_scene(&permuted, &params).unwrap();
            for d in 0..8 {
                assert!(
                    (latent[d] - base[d]).abs() < 1e-6,
                    "graph {g}: latent dim {d} moved {} under permutation",
                    (latent[d] - base[d]).abs()
                );
            }
        }
    }
    pass(4, "20 graphs x 5 permutations, latents equal within 1e-6");
}

// --------------------------------------------------------- 5: gradient checks

#[test]
fn acceptance_05_gradient_checks() {
    let t0 = Instant::now();
    let gen = GeneratorParams::random(GenArch::tiny(), 55).unwrap();
    assert!(gen.n_params() < 5000, "tiny net has {} params", gen.n_params());
    let layout = gen.arch.layout;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let batch: Vec<_> = (0..2)
        .map(|_| {
            let mut cond = [0.0; 14];
            for v in &mut cond {
                *v = rng.gen_range(-1.0..1.0);
            }
            let t = layout.total_len();
            let l: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (cond, PreprocessedBir::from_raw(layout, l, r).unwrap())
        })
        .collect();
    let mut worst = 0.0f64;
    let mut total_checked = 0;
    for (name, w) in [
        ("mse", LossWeights { bir: 0.0, ed: 0.0, mse: 1.0 }),
        ("bir", LossWeights { bir: 1.0, ed: 0.0, mse: 0.0 }),
        ("ed", LossWeights { bir: 0.0, ed: 1.0, mse: 0.0 }),
        ("combined", LossWeights::default()),
    ] {
        let report = grad_check(&gen, &batch, &w, 400, 7).unwrap();
        assert!(
            report.max_rel_error < 1e-3,
            "{name}: max rel error {}",
            report.max_rel_error
        );
        worst = worst.max(report.max_rel_error);
        total_checked += report.checked;
    }
    assert!(total_checked >= 100, "only {total_checked} coordinates checked");
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 60.0, "runtime {dt:.2}s exceeds 60s");
    pass(
        5,
        &format!(
            "{} params, {total_checked} coords, max rel err {worst:.2e}, {dt:.1}s",
            gen.n_params()
        ),
    );
}

// ----------------------------------------------------------- 6: overfit smoke

/// Direct-peak index of a channel (largest |sample| in the normalized part).
fn peak_index(p: &PreprocessedBir, channel: usize) -> i64 {
    p.normalized(channel)
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap()
        .0 as i64
}

#[test]
fn acceptance_06_overfit_smoke() {
    let t0 = Instant::now();
    let layout = BirLayout::DESK;
    // 4 synthetic (condition, BIR) pairs with alternating lateral geometry:
    // the leading ear's direct peak arrives 4 samples earlier
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut data = Vec::new();
    for i in 0..4 {
        let right_leads = i % 2 == 0;
        let mk = |lead: bool, f: f64| -> Vec<f64> {
            let peak_at = if lead { 20 } else { 24 };
            let amp = if lead { 1.0 } else { 0.7 };
            (0..512)
                .map(|n| {
                    let tail = 0.25
                        * (-(n as f64 - peak_at as f64).max(0.0) / 60.0).exp()
                        * (std::f64::consts::TAU * f * n as f64).sin();
                    if n == peak_at {
                        amp
                    } else if n > peak_at {
                        tail
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        let f = 0.02 + 0.015 * i as f64;
        let left = mk(!right_leads, f);
        let right = mk(right_leads, f);
        let bir = Bir::new(16_000, left, right).unwrap();
        let (pre, _) = preprocess_bir(&bir, layout).unwrap();
        let mut latent = [0.0; 8];
        for v in &mut latent {
            *v = rng.gen_range(-1.0..1.0);
        }
        let y = if right_leads { 3.0 } else { 0.5 };
        data.push(TrainRecord {
            latent,
            src: [1.0 + i as f64, y, 1.5],
            lst: [2.0, 1.75, 1.5],
            bir: pre,
        });
    }

    let cfg = TrainConfig {
        weights: LossWeights { bir: 1.0, ed: 0.02, mse: 1.0 },
        batch: 4,
        epochs: 500, // one full-batch step per epoch -> 500 alternating steps
        lr: 3e-3,
        decay_every: 10_000,
        seed: 66,
        ..TrainConfig::default()
    };
    let (gen, _, history) = train(&data, GenArch::desk(), DiscArch::desk(), &cfg).unwrap();
    assert_eq!(history.len(), 500);
    let score =
        |i: usize| cfg.weights.mse * history[i].l_mse + cfg.weights.ed * history[i].l_ed;
    let (first, last) = (score(0), score(history.len() - 1));
    assert!(
        last <= 0.10 * first,
        "weighted MSE+ED fell only {:.1}% ({first:.4} -> {last:.4})",
        100.0 * (1.0 - last / first)
    );

    // ITD efficacy: generated left-minus-right direct-peak offset matches
    // the reference's sign on all 4 pairs
    for (i, r) in data.iter().enumerate() {
        let cond = condition_vector(&r.latent, r.src, r.lst);
        let fake = generate(&cond, &gen).unwrap();
        let got = peak_index(&fake, 0) - peak_index(&fake, 1);
        let want = peak_index(&r.bir, 0) - peak_index(&r.bir, 1);
        assert!(
            got.signum() == want.signum() && want != 0,
            "pair {i}: generated L-R peak offset {got}, reference {want}"
        );
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 300.0, "runtime {dt:.1}s exceeds 5 min");
    pass(
        6,
        &format!(
            "MSE+ED fell {:.1}% over 500 steps, ITD signs match 4/4, {dt:.1}s",
            100.0 * (1.0 - last / first)
        ),
    );
}

// ------------------------------------------------------- 7: ray tracer physics

#[test]
fn acceptance_07_ray_tracer_physics() {
    let t0 = Instant::now();
    let head = HeadModel::default();
    let cfg = SimConfig::default(); // 20,000 rays

    // (a) direct arrival within +-1 bin over 50 random shoeboxes
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for run in 0..50 {
        let dims = Vec3::new(
            rng.gen_range(3.0..8.0),
            rng.gen_range(3.0..7.0),
            rng.gen_range(2.5..4.0),
        );
        let alpha = rng.gen_range(0.3..1.0);
        let sc = rng.gen_range(0.0..1.0);
        let scene = shoebox(dims, alpha, sc);
        let point = |rng: &mut ChaCha8Rng| {
            Vec3::new(
                rng.gen_range(0.5..dims.x - 0.5),
                rng.gen_range(0.5..dims.y - 0.5),
                rng.gen_range(0.5..dims.z - 0.5),
            )
        };
        let src = point(&mut rng);
        let mut lst = point(&mut rng);
        while src.distance(lst) < 0.6 {
            lst = point(&mut rng);
        }
        let hist = trace(&scene, src, lst, &cfg, &head, 7000 + run).unwrap();
        let want = (src.distance(lst) / cfg.speed_of_sound / cfg.histogram_bin) as i64;
        for ear in 0..2 {
            let first = hist.ears[ear]
                .iter()
                .position(|b| b.iter().sum::<f64>() > 0.0)
                .expect("no energy received") as i64;
            assert!(
                (first - want).abs() <= 1,
                "run {run} ear {ear}: first bin {first}, expected {want}"
            );
        }
        // (d) received energy never exceeds emitted energy (1 per ear/band)
        for ear in 0..2 {
            for b in 0..N_BANDS {
                let e = hist.band_total(ear, b);
                assert!(e <= 1.0 + 1e-12, "run {run}: ear {ear} band {b} got {e}");
            }
        }
    }

    // (b) fully absorptive room: zero energy outside the direct bins
    let scene = shoebox(Vec3::new(5.0, 4.0, 3.0), 1.0, 0.0);
    let src = Vec3::new(1.0, 1.2, 1.4);
    let lst = Vec3::new(4.0, 2.8, 1.6);
    let hist = trace(&scene, src, lst, &cfg, &head, 77).unwrap();
    let d = src.distance(lst);
    for ear in 0..2 {
        let bin = (d / cfg.speed_of_sound / cfg.histogram_bin) as i64;
        let mut extra = 0.0;
        for (i, b) in hist.ears[ear].iter().enumerate() {
            if (i as i64 - bin).abs() > 1 {
                extra += b.iter().sum::<f64>();
            }
        }
        assert_eq!(extra, 0.0, "ear {ear}: non-direct energy {extra}");
    }

    // (c) first-order specular arrivals match the image-source oracle
    let (lx, ly, lz) = (5.0, 4.0, 3.0);
    let scene = shoebox(Vec3::new(lx, ly, lz), 0.5, 0.0);
    let src = Vec3::new(1.2, 1.1, 1.4);
    let lst = Vec3::new(3.7, 2.9, 1.6);
    let hist = trace(&scene, src, lst, &cfg, &head, 777).unwrap();
    let combined: Vec<f64> = (0..hist.n_bins())
        .map(|i| {
            (0..2)
                .map(|e| hist.ears[e].get(i).map_or(0.0, |b| b.iter().sum::<f64>()))
                .sum()
        })
        .collect();
    for axis in 0..3 {
        for wall in [0.0, [lx, ly, lz][axis]] {
            let mut img = [src.x, src.y, src.z];
            img[axis] = 2.0 * wall - img[axis];
            let t = Vec3::new(img[0], img[1], img[2]).distance(lst) / cfg.speed_of_sound;
            let bin = (t / cfg.histogram_bin) as usize;
            let lo = bin.saturating_sub(1);
            let hi = (bin + 1).min(combined.len() - 1);
            let near: f64 = combined[lo..=hi].iter().sum();
            assert!(near > 0.0, "no energy near image-source bin {bin} (axis {axis})");
        }
    }

    // (e) Schroeder T60 within 20% of the Sabine estimate
    let alpha = 0.15;
    let scene = shoebox(Vec3::new(lx, ly, lz), alpha, 0.3);
    let (bir, _) = simulate_pair(
        &scene,
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(4.0, 3.0, 2.0),
        &cfg,
        &head,
        7777,
    )
    .unwrap();
    let volume = lx * ly * lz;
    let surface = 2.0 * (lx * ly + lx * lz + ly * lz);
    let sabine = 0.161 * volume / (alpha * surface);
    let measured = t60(&bir.left, bir.sample_rate).unwrap();
    let rel = (measured - sabine).abs() / sabine;
    assert!(rel < 0.20, "T60 {measured:.3}s vs Sabine {sabine:.3}s ({:.0}%)", rel * 100.0);

    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 180.0, "runtime {dt:.1}s exceeds 3 min");
    pass(
        7,
        &format!(
            "direct +-1 bin x50, absorptive-extra 0, image sources ok, \
             energy bounded, T60 {measured:.2}s vs Sabine {sabine:.2}s, {dt:.1}s"
        ),
    );
}

// ------------------------------------------------------- 8: metric estimators

#[test]
fn acceptance_08_metric_estimators() {
    // T60 and EDT within 5% on closed-form exponential decays
    for (k, target) in [0.1, 0.3, 0.5, 0.8, 1.2, 1.6, 2.0].iter().enumerate() {
        let sr = 16_000;
        let len = (2.2 * target * sr as f64) as usize;
        let ir = exponential_ir(*target, sr, len, 800 + k as u64);
        let got_t60 = t60(&ir, sr).unwrap();
        let got_edt = edt(&ir, sr).unwrap();
        assert!(
            (got_t60 - target).abs() / target < 0.05,
            "T60 {got_t60:.3} vs {target}"
        );
        assert!(
            (got_edt - target).abs() / target < 0.05,
            "EDT {got_edt:.3} vs {target}"
        );
    }

    // DRR = 0 dB by construction: direct window energy == late energy
    let sr = 48_000u32;
    let mut ir = vec![0.0; sr as usize / 2];
    ir[100] = 1.0; // peak; +-2.5 ms window = +-120 samples
    ir[10_000] = 1.0; // far outside the direct window
    let got = drr(&ir, sr).unwrap();
    assert!(got.abs() < 1e-9, "DRR {got} dB, expected 0");

    // ED relief rows monotone non-increasing in time on 100 random signals
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for _ in 0..100 {
        let n = rng.gen_range(600..3000);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ed = ed_relief(&x, StftConfig::default()).unwrap();
        for b in 0..ed.n_bins() {
            for f in 1..ed.n_frames() {
                assert!(
                    ed.values[f][b] <= ed.values[f - 1][b] + 1e-12,
                    "ED increased at frame {f} bin {b}"
                );
            }
        }
    }
    pass(8, "T60/EDT within 5% on [0.1, 2.0]s, DRR = 0 construction, ED monotone x100");
}

// ----------------------------------------------------------- 9: mesh pipeline

/// Closed box subdivided into m x m cells per side, vertices welded.
fn subdivided_box(dims: Vec3, m: usize) -> AnnotatedMesh {
    let mut mesh = AnnotatedMesh {
        vertices: Vec::new(),
        faces: Vec::new(),
        vertex_labels: Vec::new(),
        label_names: vec!["wall".into(), "floor".into(), "ceiling".into()],
    };
    // each side: grid over (u, v) with the remaining axis fixed
    let sides: [(usize, usize, usize, f64, bool); 6] = [
        (0, 1, 2, 0.0, true),    // bottom z=0
        (0, 1, 2, dims.z, false), // top
        (0, 2, 1, 0.0, false),   // y=0
        (0, 2, 1, dims.y, true),
        (1, 2, 0, 0.0, true),    // x=0
        (1, 2, 0, dims.x, false),
    ];
    let dim = [dims.x, dims.y, dims.z];
    for &(ua, va, wa, w, flip) in &sides {
        let label = if wa == 2 && w == 0.0 {
            1 // floor
        } else if wa == 2 {
            2 // ceiling
        } else {
            0
        };
        let base = mesh.vertices.len();
        for i in 0..=m {
            for j in 0..=m {
                let mut p = [0.0; 3];
                p[ua] = dim[ua] * i as f64 / m as f64;
                p[va] = dim[va] * j as f64 / m as f64;
                p[wa] = w;
                mesh.vertices.push(Vec3::new(p[0], p[1], p[2]));
                mesh.vertex_labels.push(label);
            }
        }
        let idx = |i: usize, j: usize| base + i * (m + 1) + j;
        for i in 0..m {
            for j in 0..m {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                if flip {
                    mesh.faces.push([a, c, b]);
                    mesh.faces.push([a, d, c]);
                } else {
                    mesh.faces.push([a, b, c]);
                    mesh.faces.push([a, c, d]);
                }
            }
        }
    }
    mesh.dedupe(1e-9);
    mesh
}

#[test]
fn acceptance_09_mesh_pipeline() {
    // watertight closure of 10 synthetic open rooms (one side removed)
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for room in 0..10 {
        let dims = Vec3::new(
            rng.gen_range(2.0..6.0),
            rng.gen_range(2.0..6.0),
            rng.gen_range(2.0..4.0),
        );
        let mut mesh = box_mesh(Vec3::ZERO, dims, "wall");
        // remove one side (2 triangles)
        let side = rng.gen_range(0..6);
        mesh.faces.drain(2 * side..2 * side + 2);
        let closed = close_mesh(&mesh).unwrap();
        let hull: Vec<[usize; 3]> =
            closed.hull_faces.iter().map(|&f| closed.mesh.faces[f]).collect();
        assert!(is_watertight(&hull), "room {room}: outer boundary not watertight");
    }

    // simplification: 40k+ faces -> <= 2.6%, retaining >= 5%-prevalence labels
    let mesh = subdivided_box(Vec3::new(5.0, 4.0, 3.0), 58);
    assert!(mesh.faces.len() >= 40_000, "test mesh has {} faces", mesh.faces.len());
    let mut prevalence = vec![0usize; mesh.label_names.len()];
    for &l in &mesh.vertex_labels {
        prevalence[l as usize] += 1;
    }
    let (simplified, _) = simplify(&mesh, 0.025).unwrap();
    let ratio = simplified.faces.len() as f64 / mesh.faces.len() as f64;
    assert!(
        ratio <= 0.026,
        "{} -> {} faces ({:.2}%)",
        mesh.faces.len(),
        simplified.faces.len(),
        ratio * 100.0
    );
    for (l, &count) in prevalence.iter().enumerate() {
        if count as f64 >= 0.05 * mesh.vertex_labels.len() as f64 {
            let name = &mesh.label_names[l];
            let kept = simplified
                .vertex_labels
                .iter()
                .any(|&v| simplified.label_names[v as usize] == *name);
            assert!(kept, "label '{name}' ({count} vertices) lost in simplification");
        }
    }
    pass(
        9,
        &format!(
            "10 rooms closed watertight; {} -> {} faces ({:.2}%), labels retained",
            mesh.faces.len(),
            simplified.faces.len(),
            ratio * 100.0
        ),
    );
}

// ------------------------------------------------------------ 10: grid sampler

#[test]
fn acceptance_10_grid_sampler() {
    // brute-force oracle: lattice points of the 4 x 4 x 3 box with
    // clearance >= 0.2 from every wall
    let mesh = box_mesh(Vec3::ZERO, Vec3::new(4.0, 4.0, 3.0), "wall");
    let got = grid_positions(&mesh, 1.0, 0.2).unwrap();
    let mut want = Vec::new();
    for x in 0..=4 {
        for y in 0..=4 {
            for z in 0..=3 {
                let p = Vec3::new(x as f64, y as f64, z as f64);
                let clear = [
                    p.x,
                    4.0 - p.x,
                    p.y,
                    4.0 - p.y,
                    p.z,
                    3.0 - p.z,
                ]
                .into_iter()
                .fold(f64::INFINITY, f64::min);
                if clear >= 0.2 {
                    want.push(p);
                }
            }
        }
    }
    assert_eq!(want.len(), 18);
    assert_eq!(got.len(), 18);
    for w in &want {
        assert!(
            got.iter().any(|g| g.distance(*w) < 1e-9),
            "oracle point {w:?} missing"
        );
    }

    // 10-source split honored when >= 20 positions exist
    let mesh = box_mesh(Vec3::ZERO, Vec3::new(5.0, 5.0, 3.0), "wall");
    let positions = grid_positions(&mesh, 1.0, 0.2).unwrap();
    assert!(positions.len() >= 20, "only {} positions", positions.len());
    let (sources, listeners) = split_sources_listeners(&positions, 10, 10).unwrap();
    assert_eq!(sources.len(), 10);
    assert_eq!(sources.len() + listeners.len(), positions.len());
    for s in &sources {
        assert!(
            !listeners.iter().any(|l| l.distance(*s) < 1e-12),
            "source reused as listener"
        );
    }
    pass(
        10,
        &format!(
            "18/18 grid points match oracle; 10 sources + {} listeners disjoint",
            listeners.len()
        ),
    );
}

// -------------------------------------------------- 11: throughput accounting

#[test]
fn acceptance_11_throughput() {
    let scene = shoebox(Vec3::new(5.0, 4.0, 3.0), 0.15, 0.3);

    // one-time encode, timed separately
    let t0 = Instant::now();
    let graph = birkit::graph::build_graph(&scene, true);
    let encoder = GraphEncoderParams::random(11);
    let latent = encode_scene(&graph, &encoder).unwrap();
    let encode_s = t0.elapsed().as_secs_f64();

    // per-BIR generation cost at the full 4096 x 2 architecture
    // (generate() is single-threaded; no pool is involved)
    let gen = GeneratorParams::random(GenArch::full(), 12).unwrap();
    let n = 500;
    let t1 = Instant::now();
    for i in 0..n {
        let s = 0.5 + 0.001 * i as f64;
        let cond = condition_vector(&latent, [s, 1.0, 1.5], [4.0 - s, 3.0, 1.5]);
        let bir = generate(&cond, &gen).unwrap();
        std::hint::black_box(&bir);
    }
    let gen_s = t1.elapsed().as_secs_f64();
    let rate = n as f64 / gen_s;
    assert!(rate >= 200.0, "{rate:.0} BIRs/s below the 200/s desk target");
    assert_eq!(gen.arch.out_len(), 4096);
    pass(
        11,
        &format!("encode {encode_s:.4}s (once), {rate:.0} BIRs/s at 4096x2"),
    );
}

// --------------------------------------------------------------- 12: renderer

fn naive_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len() + h.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        for (j, &hj) in h.iter().enumerate() {
            out[i + j] += xi * hj;
        }
    }
    out
}

#[test]
fn acceptance_12_renderer() {
    let mut rng = ChaCha8Rng::seed_from_u64(1212);

    // convolve vs the naive time-domain oracle on 50 random pairs
    let mut max_rel = 0.0f64;
    for _ in 0..50 {
        let nd = rng.gen_range(50..400);
        let nb = rng.gen_range(10..200);
        let dry: Vec<f64> = (0..nd).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l: Vec<f64> = (0..nb).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let r: Vec<f64> = (0..nb).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let bir = Bir::new(16_000, l.clone(), r.clone()).unwrap();
        let got = convolve(&dry, 16_000, &bir).unwrap();
        for (g, h) in [(&got.left, &l), (&got.right, &r)] {
            let want = naive_convolve(&dry, h);
            let num: f64 =
                g.iter().zip(&want).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let den: f64 = want.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-30);
            max_rel = max_rel.max(num / den);
        }
    }
    assert!(max_rel < 1e-6, "convolution relative error {max_rel}");

    // walkthrough spec shared by the linearity and crossfade checks
    let mk_spec = |n_sources: usize| WalkthroughSpec {
        scene: "unused".into(),
        sources: (0..n_sources)
            .map(|_| SourceSpec { position: [1.0, 1.0, 1.5], dry_wav: "unused".into() })
            .collect(),
        path: vec![
            PathPoint { t: 0.0, position: [2.0, 1.0, 1.5] },
            PathPoint { t: 1.0, position: [2.0, 3.0, 1.5] },
        ],
        bir_update_rate: 10.0,
        crossfade_ms: 50.0,
    };
    let dry: Vec<f64> = (0..16_000).map(|_| rng.gen_range(-0.2..0.2)).collect();
    let fixed_bir = {
        let l: Vec<f64> = (0..64).map(|_| rng.gen_range(-0.05..0.05)).collect();
        let r: Vec<f64> = (0..64).map(|_| rng.gen_range(-0.05..0.05)).collect();
        Bir::new(16_000, l, r).unwrap()
    };

    // linearity: two identical co-located sources produce exactly twice the
    // single-source mix
    let one = render_walkthrough(&mk_spec(1), &[(dry.clone(), 16_000)], |_, _| {
        Ok(fixed_bir.clone())
    })
    .unwrap()
    .0;
    let two = render_walkthrough(
        &mk_spec(2),
        &[(dry.clone(), 16_000), (dry.clone(), 16_000)],
        |_, _| Ok(fixed_bir.clone()),
    )
    .unwrap()
    .0;
    for (a, b) in one.left.iter().zip(&two.left) {
        assert!((2.0 * a - b).abs() < 1e-9, "mixing is not linear");
    }

    // crossfade partition of unity: with a position-independent BIR the
    // crossfaded walkthrough equals one whole-signal convolution
    let reference = convolve(&dry, 16_000, &fixed_bir).unwrap();
    for (i, (a, b)) in one.left.iter().zip(&reference.left).enumerate() {
        assert!(
            (a - b).abs() < 1e-9,
            "crossfade windows do not sum to 1 at sample {i}: {a} vs {b}"
        );
    }
    pass(
        12,
        &format!("convolve rel err <= {max_rel:.2e} x50; linearity + crossfade PoU ok"),
    );
}
