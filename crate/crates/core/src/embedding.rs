//! Probabilistic word embedding on hyperbolic space.
//!
//! Every word is a wrapped normal `q_s = G(mu(s), Sigma(s))` with
//! `mu(s) = exp_{mu0}(h_s)` for an unconstrained per-word vector `h_s`. The
//! similarity energy is `E(s, t) = D_KL(q_s || q_t)` (Monte-Carlo for the
//! hyperbolic geometry, closed form for the Euclidean baseline), trained
//! with the max-margin loss `max(0, m + E(s,t) - E(s,t'))` over positive
//! links `(s, t)` and sampled negatives `t'`.
//!
//! Evaluation ranks, for each word with at least one true neighbor, all
//! other words by ascending energy and reports mean average precision and
//! mean rank of the true-neighbor set.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::lorentz::{lift_any, lift_to_manifold};
use crate::scalar::{softplus, Real};
use crate::wrapped::{gaussian_kl_any, log_prob_any, rsample_with_log_prob_any};

/// Raw-sigma value at which `softplus(raw) + 1e-6 = 1`.
const RAW_SIGMA_ONE: f64 = 0.541_322_855_375_3716;

// ---------------------------------------------------------------------------
// Vocabulary

/// Token table plus the directed (child, parent) link set of a transitive
/// closure.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    edges: Vec<(u32, u32)>,
    /// Per child: the set of linked parents.
    neighbors: Vec<BTreeSet<u32>>,
}

impl Vocabulary {
    /// Builds the vocabulary from raw (child, parent) token pairs; tokens
    /// are assigned dense ids in order of first appearance, edges are
    /// deduplicated, self-links are rejected.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut tokens: Vec<String> = Vec::new();
        let mut index: HashMap<String, u32> = HashMap::new();
        let intern = |tok: &str, tokens: &mut Vec<String>, index: &mut HashMap<String, u32>| {
            if let Some(&id) = index.get(tok) {
                id
            } else {
                let id = tokens.len() as u32;
                tokens.push(tok.to_string());
                index.insert(tok.to_string(), id);
                id
            }
        };
        let mut edge_set = BTreeSet::new();
        for (child, parent) in pairs {
            let (child, parent) = (child.as_ref(), parent.as_ref());
            if child == parent {
                return Err(Error::InvalidConfig(format!(
                    "self-link '{child}' is not allowed"
                )));
            }
            let c = intern(child, &mut tokens, &mut index);
            let p = intern(parent, &mut tokens, &mut index);
            edge_set.insert((c, p));
        }
        if tokens.is_empty() {
            return Err(Error::InvalidConfig("empty edge list".into()));
        }
        let mut neighbors = vec![BTreeSet::new(); tokens.len()];
        for &(c, p) in &edge_set {
            neighbors[c as usize].insert(p);
        }
        Ok(Vocabulary {
            tokens,
            index,
            edges: edge_set.into_iter().collect(),
            neighbors,
        })
    }

    /// Parses a UTF-8 TSV edge list: one `child<TAB>parent` pair per line,
    /// `#` comments and blank lines skipped.
    pub fn parse_tsv(reader: impl BufRead, path: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(format!("reading {path}"), e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split('\t');
            match (fields.next(), fields.next(), fields.next()) {
                (Some(child), Some(parent), None) => {
                    pairs.push((child.to_string(), parent.to_string()))
                }
                _ => {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno + 1,
                        message: "expected exactly two tab-separated fields".into(),
                    })
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::Parse {
                path: path.to_string(),
                line: 0,
                message: "no edges found".into(),
            });
        }
        let vocab = Self::from_pairs(pairs)?;
        log::info!(
            "{path}: {} tokens, {} edges",
            vocab.len(),
            vocab.edges.len()
        );
        Ok(vocab)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::parse_tsv(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, s: u32) -> &BTreeSet<u32> {
        &self.neighbors[s as usize]
    }
}

/// Generates the transitive closure of a complete binary tree of the given
/// depth: one edge (descendant, ancestor) per strict ancestor. Node `i`'s
/// children are `2i+1`, `2i+2`; tokens are `n0`, `n1`, ...
pub fn generate_tree_closure(depth: usize) -> Result<Vocabulary> {
    if depth == 0 {
        return Err(Error::InvalidConfig("closure depth must be >= 1".into()));
    }
    let n_nodes = crate::tree::tree_node_count(depth);
    let mut pairs = Vec::new();
    for u in 1..n_nodes {
        let mut a = u;
        while a != 0 {
            a = (a - 1) / 2;
            pairs.push((format!("n{u}"), format!("n{a}")));
        }
    }
    Vocabulary::from_pairs(pairs)
}

// ---------------------------------------------------------------------------
// Model

/// Covariance family for the per-word distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingCov {
    Unit,
    Diag,
}

impl EmbeddingCov {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(EmbeddingCov::Unit),
            "diag" => Ok(EmbeddingCov::Diag),
            other => Err(Error::InvalidConfig(format!(
                "unknown covariance kind '{other}' (expected unit|diag)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EmbeddingCov::Unit => "unit",
            EmbeddingCov::Diag => "diag",
        }
    }
}

/// Per-word distribution parameters, stored flat.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub geometry: Geometry,
    pub n: usize,
    pub cov: EmbeddingCov,
    /// Unconstrained locations, `V x n` row-major.
    pub h: Vec<f64>,
    /// Unconstrained scales, `V x n` row-major; present iff `cov == Diag`.
    pub raw_sigma: Option<Vec<f64>>,
}

impl EmbeddingModel {
    /// Initializes locations near the origin (`N(0, 0.01^2)` per
    /// coordinate) and scales at sigma = 1.
    pub fn new(
        geometry: Geometry,
        n: usize,
        vocab_size: usize,
        cov: EmbeddingCov,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if n == 0 || vocab_size == 0 {
            return Err(Error::InvalidConfig(
                "embedding dimension and vocabulary must be non-empty".into(),
            ));
        }
        let h = (0..vocab_size * n)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * 0.01)
            .collect();
        let raw_sigma = match cov {
            EmbeddingCov::Unit => None,
            EmbeddingCov::Diag => Some(vec![RAW_SIGMA_ONE; vocab_size * n]),
        };
        Ok(EmbeddingModel {
            geometry,
            n,
            cov,
            h,
            raw_sigma,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.h.len() / self.n
    }

    fn h_row(&self, s: u32) -> &[f64] {
        &self.h[s as usize * self.n..(s as usize + 1) * self.n]
    }

    /// Standard deviations of word `s`.
    pub fn sigma_row(&self, s: u32) -> Vec<f64> {
        match &self.raw_sigma {
            None => vec![1.0; self.n],
            Some(raw) => raw[s as usize * self.n..(s as usize + 1) * self.n]
                .iter()
                .map(|&r| softplus(r) + 1e-6)
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Energy and loss (generic over Real so the same code runs on the tape)

/// View of the flat parameter tables in scalar type `T`. `sigma_one` is a
/// unit scalar used when the covariance is fixed at identity.
struct ParamView<'a, T: Real> {
    h: &'a [T],
    raw_sigma: Option<&'a [T]>,
    sigma_one: T,
    n: usize,
}

impl<'a, T: Real> ParamView<'a, T> {
    fn location(&self, s: u32, geometry: Geometry) -> Vec<T> {
        let row = &self.h[s as usize * self.n..(s as usize + 1) * self.n];
        match geometry {
            Geometry::Hyperbolic => lift_any(row),
            Geometry::Euclidean => row.to_vec(),
        }
    }

    fn sigma(&self, s: u32) -> Vec<T> {
        match self.raw_sigma {
            None => vec![self.sigma_one; self.n],
            Some(raw) => raw[s as usize * self.n..(s as usize + 1) * self.n]
                .iter()
                .map(|&r| softplus(r) + 1e-6)
                .collect(),
        }
    }
}

/// One positive link with its sampled negatives.
#[derive(Debug, Clone)]
pub struct LinkExample {
    pub s: u32,
    pub t: u32,
    pub negatives: Vec<u32>,
}

/// Standard-normal draws needed by one batch (hyperbolic geometry only):
/// `k * n` per positive example, shared between that example's energies as
/// common random numbers.
pub fn batch_eps_len(geometry: Geometry, examples: usize, k: usize, n: usize) -> usize {
    match geometry {
        Geometry::Hyperbolic => examples * k * n,
        Geometry::Euclidean => 0,
    }
}

/// Differentiable max-margin batch loss:
/// mean over examples of mean over negatives of
/// `max(0, margin + E(s,t) - E(s,t'))`.
///
/// For the hyperbolic geometry each example draws `k` reparametrized
/// samples from `q_s` once and reuses them for every energy of that
/// example (`E(s, .) = (1/k) sum_j [log q_s(z_j) - log q_.(z_j)]`).
#[allow(clippy::too_many_arguments)]
pub fn batch_loss_any<T: Real>(
    h: &[T],
    raw_sigma: Option<&[T]>,
    sigma_one: T,
    geometry: Geometry,
    n: usize,
    margin: f64,
    k: usize,
    batch: &[LinkExample],
    eps: &[f64],
) -> T {
    debug_assert_eq!(eps.len(), batch_eps_len(geometry, batch.len(), k, n));
    let view = ParamView {
        h,
        raw_sigma,
        sigma_one,
        n,
    };
    let mut total: Option<T> = None;
    for (i, ex) in batch.iter().enumerate() {
        let contribution = match geometry {
            Geometry::Hyperbolic => {
                let mu_s = view.location(ex.s, geometry);
                let sigma_s = view.sigma(ex.s);
                let block = &eps[i * k * n..(i + 1) * k * n];
                let mut zs = Vec::with_capacity(k);
                let mut lqs = Vec::with_capacity(k);
                for j in 0..k {
                    let (z, lq) =
                        rsample_with_log_prob_any(&mu_s, &sigma_s, &block[j * n..(j + 1) * n]);
                    zs.push(z);
                    lqs.push(lq);
                }
                let energy_to = |t: u32| -> T {
                    let mu_t = view.location(t, geometry);
                    let sigma_t = view.sigma(t);
                    let mut acc = lqs[0] - log_prob_any(&mu_t, &sigma_t, &zs[0]);
                    for j in 1..k {
                        acc = acc + (lqs[j] - log_prob_any(&mu_t, &sigma_t, &zs[j]));
                    }
                    acc / k as f64
                };
                let e_pos = energy_to(ex.t);
                hinge_mean(e_pos, ex.negatives.iter().map(|&t| energy_to(t)), margin)
            }
            Geometry::Euclidean => {
                let mu_s = view.location(ex.s, geometry);
                let sigma_s = view.sigma(ex.s);
                let energy_to = |t: u32| -> T {
                    let mu_t = view.location(t, geometry);
                    let sigma_t = view.sigma(t);
                    gaussian_kl_any(&mu_s, &sigma_s, &mu_t, &sigma_t)
                };
                let e_pos = energy_to(ex.t);
                hinge_mean(e_pos, ex.negatives.iter().map(|&t| energy_to(t)), margin)
            }
        };
        total = Some(match total {
            Some(v) => v + contribution,
            None => contribution,
        });
    }
    total.expect("non-empty batch") / batch.len() as f64
}

fn hinge_mean<T: Real>(e_pos: T, e_negs: impl Iterator<Item = T>, margin: f64) -> T {
    let mut acc: Option<T> = None;
    let mut count = 0usize;
    for e_neg in e_negs {
        let hinge = (e_pos - e_neg + margin).max_const(0.0);
        acc = Some(match acc {
            Some(v) => v + hinge,
            None => hinge,
        });
        count += 1;
    }
    acc.expect("at least one negative") / count as f64
}

/// Monte-Carlo (hyperbolic) or closed-form (Euclidean) similarity energy
/// `E(s, t) = D_KL(q_s || q_t)`, plain f64 evaluation.
pub fn energy(model: &EmbeddingModel, s: u32, t: u32, k: usize, rng: &mut impl Rng) -> f64 {
    let view = ParamView {
        h: &model.h,
        raw_sigma: model.raw_sigma.as_deref(),
        sigma_one: 1.0,
        n: model.n,
    };
    match model.geometry {
        Geometry::Hyperbolic => {
            let mu_s = view.location(s, model.geometry);
            let sigma_s = view.sigma(s);
            let mu_t = view.location(t, model.geometry);
            let sigma_t = view.sigma(t);
            let mut acc = 0.0;
            for _ in 0..k {
                let eps: Vec<f64> = (0..model.n).map(|_| rng.sample(StandardNormal)).collect();
                let (z, lq) = rsample_with_log_prob_any(&mu_s, &sigma_s, &eps);
                acc += lq - log_prob_any(&mu_t, &sigma_t, &z);
            }
            acc / k as f64
        }
        Geometry::Euclidean => gaussian_kl_any(
            &view.location(s, model.geometry),
            &view.sigma(s),
            &view.location(t, model.geometry),
            &view.sigma(t),
        ),
    }
}

// ---------------------------------------------------------------------------
// Training

/// Max-margin training configuration.
#[derive(Debug, Clone)]
pub struct EmbedTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Negatives sampled per positive link, uniform over non-neighbors.
    pub negatives: usize,
    pub margin: f64,
    /// Learning rate during the burn-in phase (the initial epochs).
    pub lr: f64,
    /// Learning rate after `burnin_epochs` (the protocol lowers it by a
    /// factor of 40 by default).
    pub lr_after_burnin: f64,
    pub burnin_epochs: usize,
    /// KL Monte-Carlo samples per energy during training.
    pub kl_samples: usize,
}

impl Default for EmbedTrainConfig {
    fn default() -> Self {
        let lr = 0.1;
        EmbedTrainConfig {
            epochs: 30,
            batch_size: 64,
            negatives: 10,
            margin: 1.0,
            lr,
            lr_after_burnin: lr / 40.0,
            burnin_epochs: 50,
            kl_samples: 8,
        }
    }
}

impl EmbedTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.negatives == 0 || self.kl_samples == 0 {
            return Err(Error::InvalidConfig(
                "batch_size, negatives and kl_samples must be >= 1".into(),
            ));
        }
        if !(self.lr > 0.0) || !(self.lr_after_burnin > 0.0) {
            return Err(Error::InvalidConfig(
                "learning rates must be positive".into(),
            ));
        }
        if !(self.margin > 0.0) || !self.margin.is_finite() {
            return Err(Error::InvalidConfig("margin must be positive".into()));
        }
        Ok(())
    }
}

/// SGD training over shuffled positive edges with uniform negative
/// resampling each epoch. Returns per-epoch mean batch loss; deterministic
/// for a fixed RNG state.
pub fn train(
    model: &mut EmbeddingModel,
    vocab: &Vocabulary,
    cfg: &EmbedTrainConfig,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let v = vocab.len();
    if model.vocab_size() != v {
        return Err(Error::DimensionMismatch {
            expected: v,
            got: model.vocab_size(),
        });
    }
    let n = model.n;
    let mut edges: Vec<(u32, u32)> = vocab.edges().to_vec();
    let mut loss_log = Vec::with_capacity(cfg.epochs);
    // One tape reused across batches: clearing keeps the (large) node
    // buffer mapped instead of paying a fresh allocation per batch.
    let tape = Tape::with_capacity(1 << 16);

    for epoch in 0..cfg.epochs {
        let lr = if epoch < cfg.burnin_epochs {
            cfg.lr
        } else {
            cfg.lr_after_burnin
        };
        edges.shuffle(rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in edges.chunks(cfg.batch_size) {
            // Assemble examples with fresh uniform negatives.
            let mut batch = Vec::with_capacity(chunk.len());
            for &(s, t) in chunk {
                let blocked = vocab.neighbors(s);
                if blocked.len() + 1 >= v {
                    continue; // no valid negatives for this word
                }
                let negatives = (0..cfg.negatives)
                    .map(|_| loop {
                        let cand = rng.gen_range(0..v as u32);
                        if cand != s && !blocked.contains(&cand) {
                            break cand;
                        }
                    })
                    .collect();
                batch.push(LinkExample { s, t, negatives });
            }
            if batch.is_empty() {
                continue;
            }
            let eps: Vec<f64> = (0..batch_eps_len(model.geometry, batch.len(), cfg.kl_samples, n))
                .map(|_| rng.sample(StandardNormal))
                .collect();

            tape.clear();
            let h_vars: Vec<_> = model.h.iter().map(|&p| tape.var(p)).collect();
            let raw_vars: Option<Vec<_>> = model
                .raw_sigma
                .as_ref()
                .map(|raw| raw.iter().map(|&p| tape.var(p)).collect());
            let sigma_one = tape.var(1.0);
            let loss = batch_loss_any(
                &h_vars,
                raw_vars.as_deref(),
                sigma_one,
                model.geometry,
                n,
                cfg.margin,
                cfg.kl_samples,
                &batch,
                &eps,
            );
            let loss_val = loss.value();
            if !loss_val.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            let grads = tape.backward(loss)?;
            for (p, var) in model.h.iter_mut().zip(&h_vars) {
                *p -= lr * grads.wrt(*var);
            }
            if let (Some(raw), Some(vars)) = (model.raw_sigma.as_mut(), raw_vars.as_ref()) {
                for (p, var) in raw.iter_mut().zip(vars) {
                    *p -= lr * grads.wrt(*var);
                }
            }
            epoch_loss += loss_val;
            batches += 1;
        }
        let mean = epoch_loss / batches.max(1) as f64;
        log::debug!("embed epoch {epoch}: lr {lr}, mean loss {mean:.4}");
        loss_log.push(mean);
    }
    Ok(loss_log)
}

// ---------------------------------------------------------------------------
// Evaluation

/// Sorts candidates by (energy ascending, id ascending) and returns the
/// average precision of the positive set plus the 1-based ranks of the
/// positives.
pub fn average_precision_and_ranks(
    candidates: &[(u32, f64)],
    positives: &BTreeSet<u32>,
) -> (f64, Vec<usize>) {
    let mut order: Vec<&(u32, f64)> = candidates.iter().collect();
    order.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("non-finite energy")
            .then(a.0.cmp(&b.0))
    });
    let mut hits = 0usize;
    let mut ap = 0.0;
    let mut ranks = Vec::with_capacity(positives.len());
    for (rank0, (id, _)) in order.iter().enumerate() {
        if positives.contains(id) {
            hits += 1;
            let rank = rank0 + 1;
            ap += hits as f64 / rank as f64;
            ranks.push(rank);
        }
    }
    (ap / positives.len() as f64, ranks)
}

/// Deterministic per-query RNG seed derived from the global seed.
fn query_seed(seed: u64, s: u32) -> u64 {
    (seed ^ (s as u64 + 1)).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Reconstruction metrics over the link set: for every word with at least
/// one true neighbor, ranks all other words by ascending energy (with
/// fixed-seed `k_eval` samples per query shared across candidates) and
/// aggregates MAP and mean rank. Parallel over queries; results are
/// independent of thread count because every query seeds its own RNG.
pub fn evaluate_reconstruction(
    model: &EmbeddingModel,
    vocab: &Vocabulary,
    k_eval: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let v = vocab.len();
    if model.vocab_size() != v {
        return Err(Error::DimensionMismatch {
            expected: v,
            got: model.vocab_size(),
        });
    }
    if k_eval == 0 {
        return Err(Error::InvalidConfig("k_eval must be >= 1".into()));
    }
    let n = model.n;
    let view = ParamView {
        h: &model.h,
        raw_sigma: model.raw_sigma.as_deref(),
        sigma_one: 1.0,
        n,
    };
    // Precompute all locations and scales once.
    let locations: Vec<Vec<f64>> = (0..v as u32)
        .map(|s| view.location(s, model.geometry))
        .collect();
    let sigmas: Vec<Vec<f64>> = (0..v as u32).map(|s| view.sigma(s)).collect();

    let queries: Vec<u32> = (0..v as u32)
        .filter(|&s| !vocab.neighbors(s).is_empty())
        .collect();
    if queries.is_empty() {
        return Err(Error::InvalidConfig("no words with neighbors".into()));
    }

    let per_query: Vec<(f64, Vec<usize>)> = queries
        .par_iter()
        .map(|&s| {
            let positives = vocab.neighbors(s);
            let mut energies = Vec::with_capacity(v - 1);
            match model.geometry {
                Geometry::Hyperbolic => {
                    let mut rng = ChaCha8Rng::seed_from_u64(query_seed(seed, s));
                    let mut zs = Vec::with_capacity(k_eval);
                    let mut lqs = Vec::with_capacity(k_eval);
                    for _ in 0..k_eval {
                        let eps: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                        let (z, lq) = rsample_with_log_prob_any(
                            &locations[s as usize],
                            &sigmas[s as usize],
                            &eps,
                        );
                        zs.push(z);
                        lqs.push(lq);
                    }
                    for t in 0..v as u32 {
                        if t == s {
                            continue;
                        }
                        let mut acc = 0.0;
                        for j in 0..k_eval {
                            acc += lqs[j]
                                - log_prob_any(&locations[t as usize], &sigmas[t as usize], &zs[j]);
                        }
                        energies.push((t, acc / k_eval as f64));
                    }
                }
                Geometry::Euclidean => {
                    for t in 0..v as u32 {
                        if t == s {
                            continue;
                        }
                        let e = gaussian_kl_any(
                            &locations[s as usize],
                            &sigmas[s as usize],
                            &locations[t as usize],
                            &sigmas[t as usize],
                        );
                        energies.push((t, e));
                    }
                }
            }
            average_precision_and_ranks(&energies, positives)
        })
        .collect();

    let map = per_query.iter().map(|(ap, _)| ap).sum::<f64>() / per_query.len() as f64;
    let (rank_sum, rank_count) = per_query.iter().fold((0usize, 0usize), |(s, c), (_, r)| {
        (s + r.iter().sum::<usize>(), c + r.len())
    });
    Ok((map, rank_sum as f64 / rank_count as f64))
}

// ---------------------------------------------------------------------------
// Persistence and export

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    version: u32,
    n: usize,
    v: usize,
    cov_kind: EmbeddingCov,
    geometry: String,
    tokens: Vec<String>,
}

/// Writes the model as a one-line JSON header followed by a little-endian
/// f64 block: the `h` matrix row-major, then `raw_sigma` if present.
pub fn save_checkpoint(model: &EmbeddingModel, vocab: &Vocabulary, path: &Path) -> Result<()> {
    let header = CheckpointHeader {
        version: 1,
        n: model.n,
        v: vocab.len(),
        cov_kind: model.cov,
        geometry: model.geometry.as_str().to_string(),
        tokens: (0..vocab.len() as u32).map(|i| vocab.token(i).to_string()).collect(),
    };
    let mut bytes = serde_json::to_vec(&header)
        .map_err(|e| Error::InvalidConfig(format!("serializing checkpoint header: {e}")))?;
    bytes.push(b'\n');
    for &x in model.h.iter().chain(model.raw_sigma.iter().flatten()) {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<(EmbeddingModel, Vocabulary)> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        line: 1,
        message: "missing header line".into(),
    })?;
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[..newline]).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("bad header: {e}"),
        })?;
    let geometry = Geometry::parse(&header.geometry)?;
    let blocks = match header.cov_kind {
        EmbeddingCov::Unit => 1,
        EmbeddingCov::Diag => 2,
    };
    let want = header.v * header.n * blocks * 8;
    let payload = &bytes[newline + 1..];
    if payload.len() != want {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 2,
            message: format!("expected {want} parameter bytes, found {}", payload.len()),
        });
    }
    let mut floats = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let h: Vec<f64> = floats.by_ref().take(header.v * header.n).collect();
    let raw_sigma = match header.cov_kind {
        EmbeddingCov::Unit => None,
        EmbeddingCov::Diag => Some(floats.collect()),
    };
    if header.tokens.len() != header.v {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "token list length disagrees with v".into(),
        });
    }
    // Rebuild an edgeless vocabulary shell: eval commands reload the edge
    // list separately, but exports only need the tokens.
    let tokens = header.tokens;
    let index = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    let vocab = Vocabulary {
        neighbors: vec![BTreeSet::new(); tokens.len()],
        edges: Vec::new(),
        index,
        tokens,
    };
    let model = EmbeddingModel {
        geometry,
        n: header.n,
        cov: header.cov_kind,
        h,
        raw_sigma,
    };
    Ok((model, vocab))
}

/// Writes `token,x1,...,xn` rows: Poincare-ball coordinates of mu for the
/// hyperbolic geometry, raw locations for the Euclidean baseline.
pub fn export_locations_csv(
    model: &EmbeddingModel,
    vocab: &Vocabulary,
    mut out: impl Write,
) -> Result<()> {
    let write_err = |e| Error::io("writing embedding CSV", e);
    let header: Vec<String> = (1..=model.n).map(|i| format!("x{i}")).collect();
    writeln!(out, "token,{}", header.join(",")).map_err(write_err)?;
    for s in 0..vocab.len() as u32 {
        let coords = match model.geometry {
            Geometry::Hyperbolic => lift_to_manifold(model.h_row(s))?.to_poincare(),
            Geometry::Euclidean => model.h_row(s).to_vec(),
        };
        let fields: Vec<String> = coords.iter().map(|c| format!("{c}")).collect();
        writeln!(out, "{},{}", vocab.token(s), fields.join(",")).map_err(write_err)?;
    }
    Ok(())
}
