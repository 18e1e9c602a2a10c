//! `birkit` — command-line pipeline for material-aware binaural impulse
//! response synthesis.
//!
//! Exit codes: 0 ok, 2 usage/contract, 3 input parse, 4 numerical, 5 io.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use birkit::bir::codec::{postprocess_bir, preprocess_bir, BirLayout};
use birkit::bir::metrics::{format_report, metric_report};
use birkit::bir::Bir;
use birkit::gan::train::{history_csv, train, TrainConfig, TrainRecord};
use birkit::gan::{
    condition_vector, gen_from_archive, gen_to_archive, generate, DiscArch, GenArch,
    GeneratorParams,
};
use birkit::geometry::io::{load_annotated_mesh, load_labeled_ply, save_labeled_ply};
use birkit::geometry::{close::close_mesh, simplify::simplify};
use birkit::graph::{build_graph, encode_scene, GraphEncoderParams, SceneLatent};
use birkit::materials::{
    assign_materials, load_embeddings, load_material_db, AveragingMode, MatchStrategy,
    MaterialAnnotatedMesh, ScatteringPrior,
};
use birkit::math::Vec3;
use birkit::ray::dataset::{gen_dataset, DatasetManifest, DatasetParams};
use birkit::ray::synth::simulate_pair;
use birkit::ray::test_support::shoebox;
use birkit::ray::{HeadModel, SimConfig};
use birkit::render::{render_walkthrough, WalkthroughSpec};
use birkit::tensor_archive::TensorArchive;
use birkit::{wav, Error, Result};

#[derive(Parser)]
#[command(
    name = "birkit",
    version,
    about = "Material-aware binaural impulse response synthesis pipeline",
    after_help = "Exit codes: 0 ok, 2 usage, 3 input parse, 4 numerical, 5 io."
)]
struct Cli {
    /// Worker threads for internal parallelism (default: logical cores;
    /// 1 gives bit-exact single-threaded reference behavior)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON config file with sim/head/dataset/train sections; explicit
    /// flags override config values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchChoice {
    /// 3968+128 layout, 4096-sample output
    Full,
    /// 512+32 layout, 544-sample output
    Desk,
}

impl ArchChoice {
    fn gen(self) -> GenArch {
        match self {
            ArchChoice::Full => GenArch::full(),
            ArchChoice::Desk => GenArch::desk(),
        }
    }
    fn disc(self) -> DiscArch {
        match self {
            ArchChoice::Full => DiscArch::full(),
            ArchChoice::Desk => DiscArch::desk(),
        }
    }
    fn layout(self) -> BirLayout {
        match self {
            ArchChoice::Full => BirLayout::FULL,
            ArchChoice::Desk => BirLayout::DESK,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeChoice {
    /// mean of the 500 Hz and 1 kHz absorption bands
    Mid,
    /// mean over all 8 bands
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyChoice {
    /// normalized exact name match, falling through to token overlap
    Exact,
    /// Jaccard similarity of lowercase token sets
    Token,
    /// cosine similarity over precomputed embeddings
    Embedding,
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderMode {
    /// ray-traced BIR per frame (requires --scene and --seed)
    Sim,
    /// generator BIR per frame (requires --gen and --latent)
    Gan,
}

#[derive(Subcommand)]
enum Command {
    /// Load an annotated mesh, close holes, simplify, and write a labeled PLY
    PreprocessMesh {
        /// input mesh (.ply; labeled PLY when --labels is omitted)
        #[arg(long)]
        mesh: PathBuf,
        /// sidecar per-vertex label JSON (for unlabeled PLY input)
        #[arg(long)]
        labels: Option<PathBuf>,
        /// output labeled PLY
        #[arg(long)]
        out: PathBuf,
        /// face-count target as a fraction of the closed mesh
        #[arg(long, default_value_t = 0.025)]
        target_ratio: f64,
    },
    /// Map semantic labels to acoustic materials; write the scene as JSON
    AssignMaterials {
        /// labeled PLY from preprocess-mesh
        #[arg(long)]
        mesh: PathBuf,
        /// material database (CSV or JSON)
        #[arg(long)]
        db: PathBuf,
        /// label embeddings JSON (required for --strategy embedding)
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// output scene JSON
        #[arg(long)]
        out: PathBuf,
        /// RNG seed for the per-scene scattering coefficient
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeChoice::Mid)]
        mode: ModeChoice,
        #[arg(long, value_enum, default_value_t = StrategyChoice::Exact)]
        strategy: StrategyChoice,
    },
    /// Encode a scene JSON into an 8-d latent vector
    EncodeScene {
        /// scene JSON from assign-materials
        #[arg(long)]
        scene: PathBuf,
        /// output latent JSON
        #[arg(long)]
        out: PathBuf,
        /// RNG seed for encoder weights (ignored with --encoder)
        #[arg(long)]
        seed: u64,
        /// load encoder weights from this archive stem instead of seeding
        #[arg(long)]
        encoder: Option<PathBuf>,
        /// also save the encoder weights to this archive stem
        #[arg(long)]
        save_encoder: Option<PathBuf>,
    },
    /// Ray-trace ground-truth BIRs for a grid of source/listener pairs
    GenDataset {
        /// scene JSON from assign-materials
        #[arg(long)]
        scene: PathBuf,
        /// output directory (WAVs + manifest.json)
        #[arg(long)]
        out: PathBuf,
        /// base RNG seed; each pair derives its own stream
        #[arg(long)]
        seed: u64,
        /// scene id recorded in the manifest (default: scene file stem)
        #[arg(long)]
        scene_id: Option<String>,
        /// grid spacing in meters
        #[arg(long)]
        spacing: Option<f64>,
        /// minimum distance from any surface in meters
        #[arg(long)]
        clearance: Option<f64>,
        /// requested source count
        #[arg(long)]
        n_sources: Option<usize>,
        /// rays per simulation
        #[arg(long)]
        n_rays: Option<usize>,
        /// maximum reflection depth
        #[arg(long)]
        max_depth: Option<usize>,
    },
    /// Train the conditional generator on a gen-dataset directory
    Train {
        /// dataset directory containing manifest.json
        #[arg(long)]
        dataset: PathBuf,
        /// scene latent JSON from encode-scene
        #[arg(long)]
        latent: PathBuf,
        /// output directory (gen/disc archives + history.csv)
        #[arg(long)]
        out: PathBuf,
        /// RNG seed for weight init and batch shuffling
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ArchChoice::Full)]
        arch: ArchChoice,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
    },
    /// Generate BIR WAVs for a list of source/listener pairs
    Infer {
        /// generator archive stem from train
        #[arg(long)]
        gen: PathBuf,
        /// scene latent JSON from encode-scene
        #[arg(long)]
        latent: PathBuf,
        /// JSON array of {"src": [x,y,z], "lst": [x,y,z]}
        #[arg(long)]
        pairs: PathBuf,
        /// output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare generated BIRs against references paired by filename
    Metrics {
        /// directory of generated BIR WAVs
        #[arg(long)]
        gen: PathBuf,
        /// directory of reference BIR WAVs
        #[arg(long = "ref")]
        reference: PathBuf,
        /// output report JSON (text summary goes to stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a listener walkthrough to a stereo WAV
    Render {
        /// walkthrough spec JSON
        #[arg(long)]
        spec: PathBuf,
        /// output WAV
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: RenderMode,
        /// scene JSON (sim mode)
        #[arg(long)]
        scene: Option<PathBuf>,
        /// base RNG seed (sim mode)
        #[arg(long)]
        seed: Option<u64>,
        /// generator archive stem (gan mode)
        #[arg(long)]
        gen: Option<PathBuf>,
        /// scene latent JSON (gan mode)
        #[arg(long)]
        latent: Option<PathBuf>,
    },
    /// Time one scene encode and N BIR generations
    Bench {
        /// number of BIRs to generate
        #[arg(long, default_value_t = 2500)]
        n: usize,
        /// RNG seed for encoder and generator weights
        #[arg(long)]
        seed: u64,
        /// scene JSON (default: built-in 5x4x3 m shoebox)
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ArchChoice::Full)]
        arch: ArchChoice,
        /// write the report JSON here as well as to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Optional config-file sections; explicit flags override these.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    sim: Option<SimConfig>,
    head: Option<HeadModel>,
    dataset: Option<DatasetParams>,
    train: Option<TrainConfig>,
}

#[derive(Serialize, Deserialize)]
struct LatentFile {
    latent: SceneLatent,
}

#[derive(Serialize, Deserialize)]
struct PairSpec {
    src: [f64; 3],
    lst: [f64; 3],
}

#[derive(Serialize)]
struct BenchReport {
    encode_s: f64,
    mean_ms_per_bir: f64,
    birs_per_sec: f64,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Contract(_) => 2,
        Error::Parse(_) | Error::Json(_) => 3,
        Error::Numerical(_) => 4,
        Error::Io(_) | Error::Wav(_) => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: failed to configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text)?;
    Ok(())
}

fn load_scene(path: &Path) -> Result<MaterialAnnotatedMesh> {
    read_json(path)
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Read a stereo WAV as a BIR.
fn read_bir(path: &Path) -> Result<Bir> {
    let (channels, sr) = wav::read(path)?;
    if channels.len() != 2 {
        return Err(Error::parse(format!(
            "{} has {} channels, expected 2",
            path.display(),
            channels.len()
        )));
    }
    let mut it = channels.into_iter();
    Bir::new(sr, it.next().unwrap(), it.next().unwrap())
}

fn run(cli: Cli) -> Result<()> {
    let file_cfg = load_config(&cli.config)?;
    match cli.command {
        Command::PreprocessMesh { mesh, labels, out, target_ratio } => {
            let (annotated, warnings) = match &labels {
                Some(l) => load_annotated_mesh(&mesh, l)?,
                None => (load_labeled_ply(&mesh)?, Vec::new()),
            };
            print_warnings(&warnings);
            let closed = close_mesh(&annotated)?;
            let (simplified, warnings) = simplify(&closed.mesh, target_ratio)?;
            print_warnings(&warnings);
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent)?;
            }
            save_labeled_ply(&simplified, &out)?;
            println!(
                "closed {} hole loop(s); {} -> {} faces ({:.2}%)",
                closed.filled_loops,
                closed.mesh.faces.len(),
                simplified.faces.len(),
                100.0 * simplified.faces.len() as f64 / closed.mesh.faces.len() as f64
            );
            Ok(())
        }

        Command::AssignMaterials { mesh, db, embeddings, out, seed, mode, strategy } => {
            let annotated = load_labeled_ply(&mesh)?;
            let mut database = load_material_db(&db)?;
            if let Some(e) = &embeddings {
                database.embeddings = load_embeddings(e)?;
            }
            let mode = match mode {
                ModeChoice::Mid => AveragingMode::Mid,
                ModeChoice::Full => AveragingMode::Full,
            };
            let strategy = match strategy {
                StrategyChoice::Exact => MatchStrategy::Exact,
                StrategyChoice::Token => MatchStrategy::TokenOverlap,
                StrategyChoice::Embedding => MatchStrategy::EmbeddingCosine,
            };
            let (scene, warnings) = assign_materials(
                &annotated,
                &database,
                &ScatteringPrior::default(),
                mode,
                strategy,
                seed,
            )?;
            print_warnings(&warnings);
            write_json(&out, &scene)?;
            println!(
                "materials assigned for {} labels over {} faces (sc = {:.3})",
                annotated.label_names.len(),
                scene.face_labels.len(),
                scene.sc[0]
            );
            Ok(())
        }

        Command::EncodeScene { scene, out, seed, encoder, save_encoder } => {
            let scene = load_scene(&scene)?;
            let graph = build_graph(&scene, true);
            let params = match &encoder {
                Some(stem) => GraphEncoderParams::from_archive(&TensorArchive::load(stem)?)?,
                None => GraphEncoderParams::random(seed),
            };
            let latent = encode_scene(&graph, &params)?;
            if let Some(stem) = &save_encoder {
                params.to_archive().save(stem)?;
            }
            write_json(&out, &LatentFile { latent })?;
            println!("encoded {} graph nodes into an {}-d latent", graph.n_nodes(), latent.len());
            Ok(())
        }

        Command::GenDataset {
            scene,
            out,
            seed,
            scene_id,
            spacing,
            clearance,
            n_sources,
            n_rays,
            max_depth,
        } => {
            let scene_id = scene_id.unwrap_or_else(|| {
                scene.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            });
            let mam = load_scene(&scene)?;
            let mut sim = file_cfg.sim.unwrap_or_default();
            if let Some(v) = n_rays {
                sim.n_rays = v;
            }
            if let Some(v) = max_depth {
                sim.max_depth = v;
            }
            let head = file_cfg.head.unwrap_or_default();
            let mut params = file_cfg.dataset.unwrap_or_default();
            if let Some(v) = spacing {
                params.spacing = v;
            }
            if let Some(v) = clearance {
                params.clearance = v;
            }
            if let Some(v) = n_sources {
                params.n_sources = v;
            }
            let manifest = gen_dataset(&mam, &scene_id, &sim, &head, &params, &out, seed)?;
            println!("wrote {} pairs to {}", manifest.pairs.len(), out.display());
            Ok(())
        }

        Command::Train { dataset, latent, out, seed, arch, epochs, batch, lr } => {
            let manifest: DatasetManifest = read_json(&dataset.join("manifest.json"))?;
            let latent_file: LatentFile = read_json(&latent)?;
            let layout = arch.layout();
            let mut records = Vec::with_capacity(manifest.pairs.len());
            for pair in &manifest.pairs {
                let bir = read_bir(&dataset.join(&pair.wav))?;
                let (pre, warnings) = preprocess_bir(&bir, layout)?;
                print_warnings(&warnings);
                records.push(TrainRecord {
                    latent: latent_file.latent,
                    src: pair.src,
                    lst: pair.lst,
                    bir: pre,
                });
            }
            let mut cfg = file_cfg.train.unwrap_or_default();
            cfg.seed = seed;
            if let Some(v) = epochs {
                cfg.epochs = v;
            }
            if let Some(v) = batch {
                cfg.batch = v;
            }
            if let Some(v) = lr {
                cfg.lr = v;
            }
            let (gen, disc, history) = train(&records, arch.gen(), arch.disc(), &cfg)?;
            std::fs::create_dir_all(&out)?;
            let meta = serde_json::json!({
                "seed": seed,
                "dataset": manifest.scene,
                "config_hash": manifest.config_hash,
            });
            gen_to_archive(&gen, meta)?.save(&out.join("gen"))?;
            birkit::gan::disc_to_archive(&disc)?.save(&out.join("disc"))?;
            std::fs::write(out.join("history.csv"), history_csv(&history))?;
            if let Some(last) = history.last() {
                println!(
                    "trained {} steps on {} pairs; final L_CGAN {:.4}, L_BIR {:.4}, L_ED {:.4}, L_MSE {:.4}",
                    history.len(),
                    records.len(),
                    last.l_cgan,
                    last.l_bir,
                    last.l_ed,
                    last.l_mse
                );
            }
            Ok(())
        }

        Command::Infer { gen, latent, pairs, out } => {
            let params = gen_from_archive(&TensorArchive::load(&gen)?)?;
            let latent_file: LatentFile = read_json(&latent)?;
            let pair_list: Vec<PairSpec> = read_json(&pairs)?;
            if pair_list.is_empty() {
                return Err(Error::contract("empty pair list"));
            }
            std::fs::create_dir_all(&out)?;
            for (i, p) in pair_list.iter().enumerate() {
                let cond = condition_vector(&latent_file.latent, p.src, p.lst);
                let bir = postprocess_bir(&generate(&cond, &params)?)?;
                let path = out.join(format!("bir_{i:03}.wav"));
                wav::write_stereo(&path, &bir.left, &bir.right, bir.sample_rate)?;
            }
            println!("wrote {} BIRs to {}", pair_list.len(), out.display());
            Ok(())
        }

        Command::Metrics { gen, reference, out } => {
            let mut names: Vec<String> = std::fs::read_dir(&gen)?
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n.ends_with(".wav"))
                .collect();
            names.sort();
            if names.is_empty() {
                return Err(Error::contract(format!("no .wav files in {}", gen.display())));
            }
            let mut generated = Vec::new();
            let mut refs = Vec::new();
            for name in &names {
                let mut g = read_bir(&gen.join(name))?;
                let mut r = read_bir(&reference.join(name))?;
                if g.sample_rate != r.sample_rate {
                    return Err(Error::contract(format!(
                        "{name}: sample rate mismatch ({} vs {})",
                        g.sample_rate, r.sample_rate
                    )));
                }
                // metric comparison requires equal lengths; zero-pad the shorter
                let n = g.len().max(r.len());
                if g.len() != r.len() {
                    eprintln!("warning: {name}: length mismatch, zero-padding to {n} samples");
                }
                for bir in [&mut g, &mut r] {
                    bir.left.resize(n, 0.0);
                    bir.right.resize(n, 0.0);
                }
                generated.push(g);
                refs.push(r);
            }
            let report = metric_report(&generated, &refs)?;
            print!("{}", format_report(&report));
            if let Some(path) = &out {
                write_json(path, &report)?;
                println!("report written to {}", path.display());
            }
            Ok(())
        }

        Command::Render { spec, out, mode, scene, seed, gen, latent } => {
            let walk: WalkthroughSpec = read_json(&spec)?;
            walk.validate()?;
            let base = spec.parent().map(Path::to_path_buf).unwrap_or_default();
            let mut dry = Vec::new();
            for s in &walk.sources {
                let path = base.join(&s.dry_wav);
                let (samples, rate, downmixed) = wav::read_mono(&path)?;
                if downmixed {
                    eprintln!("warning: {} downmixed to mono", path.display());
                }
                dry.push((samples, rate));
            }
            let (audio, normalized, warnings) = match mode {
                RenderMode::Sim => {
                    let scene = scene
                        .ok_or_else(|| Error::contract("--mode sim requires --scene"))?;
                    let seed =
                        seed.ok_or_else(|| Error::contract("--mode sim requires --seed"))?;
                    let mam = load_scene(&scene)?;
                    let sim = file_cfg.sim.unwrap_or_default();
                    let head = file_cfg.head.unwrap_or_default();
                    let mut call = 0u64;
                    render_walkthrough(&walk, &dry, |src, lst| {
                        let pair_seed =
                            seed.wrapping_add(call.wrapping_mul(0x9e37_79b9_7f4a_7c15));
                        call += 1;
                        let (bir, warnings) = simulate_pair(&mam, src, lst, &sim, &head, pair_seed)?;
                        print_warnings(&warnings);
                        Ok(bir)
                    })?
                }
                RenderMode::Gan => {
                    let gen =
                        gen.ok_or_else(|| Error::contract("--mode gan requires --gen"))?;
                    let latent = latent
                        .ok_or_else(|| Error::contract("--mode gan requires --latent"))?;
                    let params = gen_from_archive(&TensorArchive::load(&gen)?)?;
                    let latent_file: LatentFile = read_json(&latent)?;
                    render_walkthrough(&walk, &dry, |src, lst| {
                        let cond = condition_vector(
                            &latent_file.latent,
                            [src.x, src.y, src.z],
                            [lst.x, lst.y, lst.z],
                        );
                        postprocess_bir(&generate(&cond, &params)?)
                    })?
                }
            };
            print_warnings(&warnings);
            if normalized {
                eprintln!("warning: output peak-normalized to -1 dBFS to avoid clipping");
            }
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent)?;
            }
            wav::write_stereo(&out, &audio.left, &audio.right, audio.sample_rate)?;
            println!(
                "rendered {:.2} s at {} Hz to {}",
                audio.left.len() as f64 / audio.sample_rate as f64,
                audio.sample_rate,
                out.display()
            );
            Ok(())
        }

        Command::Bench { n, seed, scene, arch, out } => {
            if n == 0 {
                return Err(Error::contract("--n must be at least 1"));
            }
            let mam = match &scene {
                Some(path) => load_scene(path)?,
                None => shoebox(Vec3::new(5.0, 4.0, 3.0), 0.15, 0.3),
            };

            // one-time scene encode, timed separately from generation
            let t0 = Instant::now();
            let graph = build_graph(&mam, true);
            let encoder = GraphEncoderParams::random(seed);
            let latent = encode_scene(&graph, &encoder)?;
            let encode_s = t0.elapsed().as_secs_f64();

            let params = GeneratorParams::random(arch.gen(), seed.wrapping_add(1))?;
            let (lo, hi) = mam.mesh.aabb();
            let span = hi - lo;
            let pos = |i: usize, phase: f64| -> [f64; 3] {
                let f = |k: f64| 0.2 + 0.6 * ((i as f64 * k + phase).fract());
                [
                    lo.x + span.x * f(0.137),
                    lo.y + span.y * f(0.291),
                    lo.z + span.z * f(0.473),
                ]
            };
            let t1 = Instant::now();
            for i in 0..n {
                let cond = condition_vector(&latent, pos(i, 0.0), pos(i, 0.5));
                let bir = generate(&cond, &params)?;
                std::hint::black_box(&bir);
            }
            let gen_s = t1.elapsed().as_secs_f64();
            let report = BenchReport {
                encode_s,
                mean_ms_per_bir: 1e3 * gen_s / n as f64,
                birs_per_sec: n as f64 / gen_s,
            };
            let text = serde_json::to_string_pretty(&report)?;
            println!("{text}");
            if let Some(path) = &out {
                std::fs::write(path, text)?;
            }
            Ok(())
        }
    }
}
