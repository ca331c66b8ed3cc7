//! `hypwn` — command-line interface for wrapped normal distributions on the
//! Lorentz model of hyperbolic space.
//!
//! Every subcommand reads its parameters from flags, optionally layered
//! over a JSON config file (`--config`; explicit flags win). Training
//! commands write a fully resolved copy of their configuration next to the
//! output artifact, so any run can be replayed bit-for-bit with
//! `--config <out>.config.json`.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
//! Logging to stderr is controlled by the `HYP_LOG` env var
//! (error|info|debug).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use hypwn::embedding::{self, EmbedTrainConfig, EmbeddingCov, EmbeddingModel, Vocabulary};
use hypwn::lorentz::{lift_to_manifold, LorentzPoint};
use hypwn::tree::{generate_tree_dataset, TreeDataset};
use hypwn::vae::{self, MlpVae, VaeTrainConfig};
use hypwn::wrapped::{CovKind, WrappedNormal};
use hypwn::{Error, Geometry, Result};

#[derive(Parser)]
#[command(
    name = "hypwn",
    version,
    about = "Wrapped normal distributions on hyperbolic space: sampling, densities, embeddings, and a toy VAE"
)]
struct Cli {
    /// JSON config file; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a wrapped normal G(mu, Sigma).
    Sample(SampleOpts),
    /// Evaluate the exact log-density at a point.
    Logpdf(LogpdfOpts),
    /// Export a CSV heat grid of the log-density over the Poincare disk (n = 2).
    DensityGrid(DensityGridOpts),
    /// Generate the synthetic noisy binary-tree dataset as CSV.
    GenTree(GenTreeOpts),
    /// Train the tree VAE (hyperbolic or Euclidean latent space).
    TrainVae(TrainVaeOpts),
    /// Report Hamming-vs-latent-distance correlations of a trained VAE.
    EvalVae(EvalVaeOpts),
    /// Export latent locations of the tree nodes as CSV.
    ExportLatent(ExportLatentOpts),
    /// Train the probabilistic graph embedding.
    TrainEmbed(TrainEmbedOpts),
    /// Report reconstruction MAP / mean rank of a trained embedding.
    EvalEmbed(EvalEmbedOpts),
    /// Run the built-in numerical verification suites.
    Selfcheck(SelfcheckOpts),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HYP_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::DimensionMismatch { .. }
        | Error::Parse { .. }
        | Error::OffManifold { .. }
        | Error::NotTangent { .. }
        | Error::NonFinite(_) => 1,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Sample(opts) => cmd_sample(opts.over(load_opts(&cli.config)?)),
        Command::Logpdf(opts) => cmd_logpdf(opts.over(load_opts(&cli.config)?)),
        Command::DensityGrid(opts) => cmd_density_grid(opts.over(load_opts(&cli.config)?)),
        Command::GenTree(opts) => cmd_gen_tree(opts.over(load_opts(&cli.config)?)),
        Command::TrainVae(opts) => cmd_train_vae(opts.over(load_opts(&cli.config)?)),
        Command::EvalVae(opts) => cmd_eval_vae(opts.over(load_opts(&cli.config)?)),
        Command::ExportLatent(opts) => cmd_export_latent(opts.over(load_opts(&cli.config)?)),
        Command::TrainEmbed(opts) => cmd_train_embed(opts.over(load_opts(&cli.config)?)),
        Command::EvalEmbed(opts) => cmd_eval_embed(opts.over(load_opts(&cli.config)?)),
        Command::Selfcheck(opts) => cmd_selfcheck(opts.over(load_opts(&cli.config)?)),
    }
}

/// Loads the config file as the option struct of the current subcommand;
/// missing file means all-defaults.
fn load_opts<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::io(format!("reading config {}", p.display()), e))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: p.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })
        }
    }
}

/// Writes the resolved config next to an output artifact.
fn write_config_copy<T: Serialize>(out: &Path, resolved: &T) -> Result<()> {
    let path = out.with_extension(match out.extension() {
        Some(ext) => format!("{}.config.json", ext.to_string_lossy()),
        None => "config.json".to_string(),
    });
    let text = serde_json::to_string_pretty(resolved)
        .map_err(|e| Error::InvalidConfig(format!("serializing config: {e}")))?;
    std::fs::write(&path, text)
        .map_err(|e| Error::io(format!("writing config copy {}", path.display()), e))
}

/// Writes `content` to `--out` or stdout.
fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| Error::io("writing stdout", e))
        }
        Some(p) => {
            std::fs::write(p, content).map_err(|e| Error::io(format!("writing {}", p.display()), e))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidConfig(format!("serializing output: {e}")))
}

/// Builds the distribution shared by sample/logpdf/density-grid: location
/// from the unconstrained vector `mu_h`, diagonal covariance from `sigma`
/// (identity when absent).
fn build_distribution(mu_h: &[f64], sigma: &Option<Vec<f64>>) -> Result<WrappedNormal> {
    let mu = lift_to_manifold(mu_h)?;
    let cov = match sigma {
        None => CovKind::Unit,
        Some(s) => {
            let s = if s.len() == 1 {
                vec![s[0]; mu_h.len()]
            } else {
                s.clone()
            };
            CovKind::Diagonal(s)
        }
    };
    WrappedNormal::new(mu, cov)
}

// ---------------------------------------------------------------------------
// sample

#[derive(Args, Deserialize, Serialize, Default, Clone)]
#[serde(default)]
struct SampleOpts {
    /// Manifold dimension n.
    #[arg(long)]
    dim: Option<usize>,
    /// Location as an unconstrained vector h (mu = exp_mu0(h)), comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu_h: Option<Vec<f64>>,
    /// Diagonal standard deviations (single value broadcasts); identity if absent.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    /// Number of samples.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SampleOpts {
    fn over(self, file: Self) -> Self {
        SampleOpts {
            dim: self.dim.or(file.dim),
            mu_h: self.mu_h.or(file.mu_h),
            sigma: self.sigma.or(file.sigma),
            count: self.count.or(file.count),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
        }
    }
}

fn cmd_sample(o: SampleOpts) -> Result<i32> {
    let dim = o.dim.unwrap_or(2);
    let mu_h = o.mu_h.clone().unwrap_or_else(|| vec![0.0; dim]);
    if mu_h.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: mu_h.len(),
        });
    }
    let d = build_distribution(&mu_h, &o.sigma)?;
    let count = o.count.unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed.unwrap_or(0));

    #[derive(Serialize)]
    struct Row {
        z: Vec<f64>,
        base: Vec<f64>,
        log_prob: f64,
    }
    let rows: Vec<Row> = (0..count)
        .map(|_| {
            let (z, base) = d.sample(&mut rng);
            let log_prob = d.log_prob(&z)?;
            Ok(Row {
                z: z.into_coords(),
                base,
                log_prob,
            })
        })
        .collect::<Result<_>>()?;
    emit(&o.out, &format!("{}\n", to_json(&rows)?))?;
    if let Some(out) = &o.out {
        write_config_copy(out, &o)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// logpdf

#[derive(Args, Deserialize, Serialize, Default, Clone)]
#[serde(default)]
struct LogpdfOpts {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu_h: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    /// Evaluation point as n+1 ambient Lorentz coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl LogpdfOpts {
    fn over(self, file: Self) -> Self {
        LogpdfOpts {
            dim: self.dim.or(file.dim),
            mu_h: self.mu_h.or(file.mu_h),
            sigma: self.sigma.or(file.sigma),
            z: self.z.or(file.z),
            out: self.out.or(file.out),
        }
    }
}

fn cmd_logpdf(o: LogpdfOpts) -> Result<i32> {
    let z = o
        .z
        .clone()
        .ok_or_else(|| Error::InvalidConfig("--z is required".into()))?;
    let dim = o.dim.unwrap_or(z.len().saturating_sub(1));
    if z.len() != dim + 1 {
        return Err(Error::DimensionMismatch {
            expected: dim + 1,
            got: z.len(),
        });
    }
    let mu_h = o.mu_h.clone().unwrap_or_else(|| vec![0.0; dim]);
    let d = build_distribution(&mu_h, &o.sigma)?;
    let z = LorentzPoint::new(z)?;
    let lp = d.log_prob(&z)?;
    emit(
        &o.out,
        &format!("{}\n", to_json(&serde_json::json!({ "log_prob": lp }))?),
    )?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// density-grid

#[derive(Args, Deserialize, Serialize, Default, Clone)]
#[serde(default)]
struct DensityGridOpts {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu_h: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    /// Grid points per axis over the Poincare disk.
    #[arg(long)]
    grid: Option<usize>,
    /// Maximum ball radius included in the grid.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl DensityGridOpts {
    fn over(self, file: Self) -> Self {
        DensityGridOpts {
            mu_h: self.mu_h.or(file.mu_h),
            sigma: self.sigma.or(file.sigma),
            grid: self.grid.or(file.grid),
            radius: self.radius.or(file.radius),
            out: self.out.or(file.out),
        }
    }
}

fn cmd_density_grid(o: DensityGridOpts) -> Result<i32> {
    let mu_h = o.mu_h.clone().unwrap_or_else(|| vec![0.0, 0.0]);
    if mu_h.len() != 2 {
        return Err(Error::InvalidConfig(
            "density-grid renders the 2-dimensional model only".into(),
        ));
    }
    let d = build_distribution(&mu_h, &o.sigma)?;
    let grid = o.grid.unwrap_or(101);
    let radius = o.radius.unwrap_or(0.95);
    if grid < 2 || !(0.0..1.0).contains(&radius) {
        return Err(Error::InvalidConfig(
            "grid must be >= 2 and radius in (0, 1)".into(),
        ));
    }
    let mut csv = String::from("x,y,log_density\n");
    for iy in 0..grid {
        for ix in 0..grid {
            let x = -radius + 2.0 * radius * ix as f64 / (grid - 1) as f64;
            let y = -radius + 2.0 * radius * iy as f64 / (grid - 1) as f64;
            if x * x + y * y >= radius * radius {
                continue;
            }
            let z = LorentzPoint::from_poincare(&[x, y])?;
            let lp = d.log_prob(&z)?;
            csv.push_str(&format!("{x},{y},{lp}\n"));
        }
    }
    emit(&o.out, &csv)?;
    if let Some(out) = &o.out {
        write_config_copy(out, &o)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// gen-tree

#[derive(Args, Deserialize, Serialize, Default, Clone)]
#[serde(default)]
struct GenTreeOpts {
    #[arg(long)]
    depth: Option<usize>,
    /// Per-bit flip probability for noisy rows.
    #[arg(long)]
    eps: Option<f64>,
    /// Noisy rows emitted per node (0 = clean codes only).
    #[arg(long)]
    samples_per_node: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl GenTreeOpts {
    fn over(self, file: Self) -> Self {
        GenTreeOpts {
            depth: self.depth.or(file.depth),
            eps: self.eps.or(file.eps),
            samples_per_node: self.samples_per_node.or(file.samples_per_node),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
        }
    }
}

/// Renders the dataset as headerless CSV rows `kind,node,b0,...`; clean
/// rows first, then any noisy rows.
fn tree_csv(ds: &TreeDataset, include_noisy: bool) -> String {
    let mut out = String::new();
    let row_str = |bits: &[u8]| {
        bits.iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    for (i, row) in ds.clean.iter().enumerate() {
        out.push_str(&format!("clean,{i},{}\n", row_str(row)));
    }
    if include_noisy {
        for (i, row) in ds.noisy.iter().enumerate() {
            out.push_str(&format!("noisy,{},{}\n", ds.node_of_noisy(i), row_str(row)));
        }
    }
    out
}

fn cmd_gen_tree(o: GenTreeOpts) -> Result<i32> {
    let depth = o.depth.unwrap_or(6);
    let eps = o.eps.unwrap_or(0.1);
    let samples = o.samples_per_node.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed.unwrap_or(0));
    let ds = generate_tree_dataset(depth, eps, samples.max(1), &mut rng)?;
    let csv = tree_csv(&ds, samples > 0);
    emit(&o.out, &csv)?;
    if let Some(out) = &o.out {
        let meta = serde_json::json!({
            "depth": depth,
            "eps": eps,
            "samples_per_node": samples,
            "nodes": ds.node_count(),
            "code_len": ds.code_len(),
            "columns": "kind,node,bit_0..bit_{code_len-1}",
        });
        let meta_path = out.with_extension("meta.json");
        std::fs::write(&meta_path, format!("{}\n", to_json(&meta)?))
            .map_err(|e| Error::io(format!("writing {}", meta_path.display()), e))?;
        write_config_copy(out, &o)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// VAE commands

#[derive(Args, Deserialize, Serialize, Default, Clone)]
#[serde(default)]
struct TrainVaeOpts {
    /// Latent geometry: hyperbolic | euclidean.
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    samples_per_node: Option<usize>,
    /// Latent dimension n.
    #[arg(long)]
    dim: Option<usize>,
    /// MLP hidden width.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Latent Monte-Carlo samples per example.
    #[arg(long)]
    kl_samples: Option<usize>,
    /// KL weight in the ELBO.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint path (required).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainVaeOpts {
    fn over(self, file: Self) -> Self {
        TrainVaeOpts {
            geometry: self.geometry.or(file.geometry),
            depth: self.depth.or(file.depth),
            eps: self.eps.or(file.eps),
            samples_per_node: self.samples_per_node.or(file.samples_per_node),
            dim: self.dim.or(file.dim),
            hidden: self.hidden.or(file.hidden),
            epochs: self.epochs.or(file.epochs),
            batch: self.batch.or(file.batch),
            lr: self.lr.or(file.lr),
            kl_samples: self.kl_samples.or(file.kl_samples),
            beta: self.beta.or(file.beta),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
        }
    }

    fn resolved(&self) -> Self {
        TrainVaeOpts {
            geometry: Some(self.geometry.clone().unwrap_or_else(|| "hyperbolic".into())),
            depth: Some(self.depth.unwrap_or(6)),
            eps: Some(self.eps.unwrap_or(0.1)),
            samples_per_node: Some(self.samples_per_node.unwrap_or(10)),
            dim: Some(self.dim.unwrap_or(2)),
            hidden: Some(self.hidden.unwrap_or(100)),
            epochs: Some(self.epochs.unwrap_or(40)),
            batch: Some(self.batch.unwrap_or(64)),
            lr: Some(self.lr.unwrap_or(1e-3)),
            kl_samples: Some(self.kl_samples.unwrap_or(1)),
            beta: Some(self.beta.unwrap_or(1.0)),
            seed: Some(self.seed.unwrap_or(0)),
            out: self.out.clone(),
        }
    }
}

/// Rebuilds the dataset exactly as `train-vae` does: generation consumes
/// the seeded stream first, so eval commands reproduce it from the same
/// seed and dataset parameters.
fn vae_dataset_and_rng(o: &TrainVaeOpts) -> Result<(TreeDataset, ChaCha8Rng)> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed.unwrap());
    let ds = generate_tree_dataset(
        o.depth.unwrap(),
        o.eps.unwrap(),
        o.samples_per_node.unwrap(),
        &mut rng,
    )?;
    Ok((ds, rng))
}

fn cmd_train_vae(o: TrainVaeOpts) -> Result<i32> {
    let o = o.resolved();
    let out = o
        .out
        .clone()
        .ok_or_else(|| Error::InvalidConfig("--out checkpoint path is required".into()))?;
    let geometry = Geometry::parse(o.geometry.as_deref().unwrap())?;
    let (ds, mut rng) = vae_dataset_and_rng(&o)?;
    let mut model = MlpVae::new(
        geometry,
        ds.code_len(),
        o.dim.unwrap(),
        o.hidden.unwrap(),
        &mut rng,
    )?;
    let cfg = VaeTrainConfig {
        epochs: o.epochs.unwrap(),
        batch_size: o.batch.unwrap(),
        lr: o.lr.unwrap(),
        kl_samples: o.kl_samples.unwrap(),
        beta: o.beta.unwrap(),
    };
    log::info!(
        "training {} VAE: {} nodes, {} noisy rows, {} params",
        geometry.as_str(),
        ds.node_count(),
        ds.noisy.len(),
        model.params.len()
    );
    let loss_log = vae::train_vae(&mut model, &ds, &cfg, &mut rng)?;
    vae::save_vae(&model, &out)?;
    write_config_copy(&out, &o)?;
    let report = serde_json::json!({
        "geometry": geometry.as_str(),
        "epochs": loss_log.len(),
        "final_loss": loss_log.last(),
        "loss_log": loss_log,
        "checkpoint": out.display().to_string(),
    });
    println!("{}", to_json(&report)?);
    Ok(0)
}

#[derive(Args, Deserialize, Serialize, Default, Clone)]
#[serde(default)]
struct EvalVaeOpts {
    /// Trained checkpoint from train-vae.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    samples_per_node: Option<usize>,
    /// Seed used by the training run (reproduces its dataset).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl EvalVaeOpts {
    fn over(self, file: Self) -> Self {
        EvalVaeOpts {
            model: self.model.or(file.model),
            depth: self.depth.or(file.depth),
            eps: self.eps.or(file.eps),
            samples_per_node: self.samples_per_node.or(file.samples_per_node),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
        }
    }

    fn dataset(&self) -> Result<TreeDataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0));
        generate_tree_dataset(
            self.depth.unwrap_or(6),
            self.eps.unwrap_or(0.1),
            self.samples_per_node.unwrap_or(10),
            &mut rng,
        )
    }
}

fn cmd_eval_vae(o: EvalVaeOpts) -> Result<i32> {
    let model_path = o
        .model
        .clone()
        .ok_or_else(|| Error::InvalidConfig("--model is required".into()))?;
    let model = vae::load_vae(&model_path)?;
    let ds = o.dataset()?;
    let corr_clean = vae::correlation_metric(&model, &ds.clean)?;
    let corr_noisy = vae::correlation_metric(&model, &ds.noisy)?;
    let report = serde_json::json!({
        "geometry": model.layout.geometry.as_str(),
        "correlation_clean": corr_clean,
        "correlation_noisy": corr_noisy,
    });
    emit(&o.out, &format!("{}\n", to_json(&report)?))?;
    Ok(0)
}

#[derive(Args, Deserialize, Serialize, Default, Clone)]
#[serde(default)]
struct ExportLatentOpts {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    samples_per_node: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExportLatentOpts {
    fn over(self, file: Self) -> Self {
        ExportLatentOpts {
            model: self.model.or(file.model),
            depth: self.depth.or(file.depth),
            eps: self.eps.or(file.eps),
            samples_per_node: self.samples_per_node.or(file.samples_per_node),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
        }
    }
}

fn cmd_export_latent(o: ExportLatentOpts) -> Result<i32> {
    let model_path = o
        .model
        .clone()
        .ok_or_else(|| Error::InvalidConfig("--model is required".into()))?;
    let model = vae::load_vae(&model_path)?;
    let eval = EvalVaeOpts {
        model: Some(model_path),
        depth: o.depth,
        eps: o.eps,
        samples_per_node: o.samples_per_node,
        seed: o.seed,
        out: None,
    };
    let ds = eval.dataset()?;
    let n = model.layout.latent_dim;
    let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let mut csv = format!("kind,node,{}\n", header.join(","));
    let mut push_rows = |kind: &str, rows: &[Vec<u8>], node_of: &dyn Fn(usize) -> usize| -> Result<()> {
        for (i, row) in rows.iter().enumerate() {
            let x: Vec<f64> = row.iter().map(|&b| b as f64).collect();
            let coords = model.latent_location(&x)?.export_coords();
            let fields: Vec<String> = coords.iter().map(|c| c.to_string()).collect();
            csv.push_str(&format!("{kind},{},{}\n", node_of(i), fields.join(",")));
        }
        Ok(())
    };
    push_rows("clean", &ds.clean, &|i| i)?;
    let spn = ds.samples_per_node;
    push_rows("noisy", &ds.noisy, &move |i| i / spn)?;
    emit(&o.out, &csv)?;
    if let Some(out) = &o.out {
        write_config_copy(out, &o)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// Embedding commands

#[derive(Args, Deserialize, Serialize, Default, Clone)]
#[serde(default)]
struct TrainEmbedOpts {
    /// TSV edge list: one child<TAB>parent pair per line.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Alternative to --edges: generate the transitive closure of a
    /// complete binary tree of this depth.
    #[arg(long)]
    tree_depth: Option<usize>,
    #[arg(long)]
    geometry: Option<String>,
    /// Embedding dimension n.
    #[arg(long)]
    dim: Option<usize>,
    /// Covariance kind: unit | diag.
    #[arg(long)]
    cov: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    /// Learning rate after the burn-in phase (default lr / 40).
    #[arg(long)]
    lr_after_burnin: Option<f64>,
    #[arg(long)]
    burnin_epochs: Option<usize>,
    /// KL Monte-Carlo samples per energy during training.
    #[arg(long)]
    kl_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint path (required).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainEmbedOpts {
    fn over(self, file: Self) -> Self {
        TrainEmbedOpts {
            edges: self.edges.or(file.edges),
            tree_depth: self.tree_depth.or(file.tree_depth),
            geometry: self.geometry.or(file.geometry),
            dim: self.dim.or(file.dim),
            cov: self.cov.or(file.cov),
            epochs: self.epochs.or(file.epochs),
            batch: self.batch.or(file.batch),
            negatives: self.negatives.or(file.negatives),
            margin: self.margin.or(file.margin),
            lr: self.lr.or(file.lr),
            lr_after_burnin: self.lr_after_burnin.or(file.lr_after_burnin),
            burnin_epochs: self.burnin_epochs.or(file.burnin_epochs),
            kl_samples: self.kl_samples.or(file.kl_samples),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
        }
    }

    fn resolved(&self) -> Self {
        let lr = self.lr.unwrap_or(0.1);
        TrainEmbedOpts {
            edges: self.edges.clone(),
            tree_depth: self.tree_depth,
            geometry: Some(self.geometry.clone().unwrap_or_else(|| "hyperbolic".into())),
            dim: Some(self.dim.unwrap_or(5)),
            cov: Some(self.cov.clone().unwrap_or_else(|| "unit".into())),
            epochs: Some(self.epochs.unwrap_or(30)),
            batch: Some(self.batch.unwrap_or(64)),
            negatives: Some(self.negatives.unwrap_or(10)),
            margin: Some(self.margin.unwrap_or(1.0)),
            lr: Some(lr),
            lr_after_burnin: Some(self.lr_after_burnin.unwrap_or(lr / 40.0)),
            burnin_epochs: Some(self.burnin_epochs.unwrap_or(50)),
            kl_samples: Some(self.kl_samples.unwrap_or(8)),
            seed: Some(self.seed.unwrap_or(0)),
            out: self.out.clone(),
        }
    }
}

fn load_vocab(edges: &Option<PathBuf>, tree_depth: Option<usize>) -> Result<Vocabulary> {
    match (edges, tree_depth) {
        (Some(path), None) => Vocabulary::from_path(path),
        (None, Some(depth)) => embedding::generate_tree_closure(depth),
        _ => Err(Error::InvalidConfig(
            "exactly one of --edges or --tree-depth is required".into(),
        )),
    }
}

fn cmd_train_embed(o: TrainEmbedOpts) -> Result<i32> {
    let o = o.resolved();
    let out = o
        .out
        .clone()
        .ok_or_else(|| Error::InvalidConfig("--out checkpoint path is required".into()))?;
    let vocab = load_vocab(&o.edges, o.tree_depth)?;
    let geometry = Geometry::parse(o.geometry.as_deref().unwrap())?;
    let cov = EmbeddingCov::parse(o.cov.as_deref().unwrap())?;
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed.unwrap());
    let mut model =
        EmbeddingModel::new(geometry, o.dim.unwrap(), vocab.len(), cov, &mut rng)?;
    let cfg = EmbedTrainConfig {
        epochs: o.epochs.unwrap(),
        batch_size: o.batch.unwrap(),
        negatives: o.negatives.unwrap(),
        margin: o.margin.unwrap(),
        lr: o.lr.unwrap(),
        lr_after_burnin: o.lr_after_burnin.unwrap(),
        burnin_epochs: o.burnin_epochs.unwrap(),
        kl_samples: o.kl_samples.unwrap(),
    };
    log::info!(
        "training {} embedding: {} tokens, {} edges, n = {}",
        geometry.as_str(),
        vocab.len(),
        vocab.edges().len(),
        o.dim.unwrap()
    );
    let loss_log = embedding::train(&mut model, &vocab, &cfg, &mut rng)?;
    embedding::save_checkpoint(&model, &vocab, &out)?;
    write_config_copy(&out, &o)?;
    let report = serde_json::json!({
        "geometry": geometry.as_str(),
        "tokens": vocab.len(),
        "edges": vocab.edges().len(),
        "epochs": loss_log.len(),
        "final_loss": loss_log.last(),
        "loss_log": loss_log,
        "checkpoint": out.display().to_string(),
    });
    println!("{}", to_json(&report)?);
    Ok(0)
}

#[derive(Args, Deserialize, Serialize, Default, Clone)]
#[serde(default)]
struct EvalEmbedOpts {
    /// Trained checkpoint from train-embed.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    tree_depth: Option<usize>,
    /// KL Monte-Carlo samples per query during ranking.
    #[arg(long)]
    kl_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optional CSV export of the location coordinates.
    #[arg(long)]
    export_csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl EvalEmbedOpts {
    fn over(self, file: Self) -> Self {
        EvalEmbedOpts {
            model: self.model.or(file.model),
            edges: self.edges.or(file.edges),
            tree_depth: self.tree_depth.or(file.tree_depth),
            kl_samples: self.kl_samples.or(file.kl_samples),
            seed: self.seed.or(file.seed),
            export_csv: self.export_csv.or(file.export_csv),
            out: self.out.or(file.out),
        }
    }
}

fn cmd_eval_embed(o: EvalEmbedOpts) -> Result<i32> {
    let model_path = o
        .model
        .clone()
        .ok_or_else(|| Error::InvalidConfig("--model is required".into()))?;
    let (model, ckpt_vocab) = embedding::load_checkpoint(&model_path)?;
    let vocab = load_vocab(&o.edges, o.tree_depth)?;
    if vocab.len() != ckpt_vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: ckpt_vocab.len(),
            got: vocab.len(),
        });
    }
    let k_eval = o.kl_samples.unwrap_or(64);
    let seed = o.seed.unwrap_or(0);
    let (map, mean_rank) = embedding::evaluate_reconstruction(&model, &vocab, k_eval, seed)?;
    if let Some(csv_path) = &o.export_csv {
        let file = std::fs::File::create(csv_path)
            .map_err(|e| Error::io(format!("creating {}", csv_path.display()), e))?;
        embedding::export_locations_csv(&model, &vocab, std::io::BufWriter::new(file))?;
    }
    let report = serde_json::json!({
        "geometry": model.geometry.as_str(),
        "map": map,
        "mean_rank": mean_rank,
        "kl_samples": k_eval,
        "seed": seed,
    });
    emit(&o.out, &format!("{}\n", to_json(&report)?))?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// selfcheck

#[derive(Args, Deserialize, Serialize, Default, Clone)]
#[serde(default)]
struct SelfcheckOpts {
    #[arg(long)]
    seed: Option<u64>,
}

impl SelfcheckOpts {
    fn over(self, file: Self) -> Self {
        SelfcheckOpts {
            seed: self.seed.or(file.seed),
        }
    }
}

fn cmd_selfcheck(o: SelfcheckOpts) -> Result<i32> {
    let reports = hypwn::diagnostics::run_selfcheck(o.seed.unwrap_or(0));
    let mut all_passed = true;
    for r in &reports {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", r.name, r.detail);
        all_passed &= r.passed;
    }
    Ok(if all_passed { 0 } else { 2 })
}
