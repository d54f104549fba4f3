//! Weighted least-squares factorization of the context matrix.
//!
//! Every stored entry `(i, j, x, f)` contributes `f · (w_i·w̃_j + b_i + b̃_j − x)²`
//! to the cost. Entries are visited in a fresh shuffle each epoch and each
//! visit takes one descent step on all four parameter groups it touches.

mod checkpoint;
mod online;

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use checkpoint::Checkpoint;
pub use online::{update_online, OnlineReport};

use crate::context::{ContextEntry, ContextMatrix};
use crate::error::{Error, Result};
use crate::graph::IdMap;
use crate::numfmt;
use crate::similarity::PaperVectors;

const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    PlainSgd,
    /// Per-parameter steps scaled by the root of accumulated squared gradients.
    #[default]
    Adaptive,
}

impl Optimizer {
    pub fn name(self) -> &'static str {
        match self {
            Optimizer::PlainSgd => "plain-sgd",
            Optimizer::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain-sgd" | "sgd" | "plain" => Ok(Optimizer::PlainSgd),
            "adaptive" | "adagrad" | "adaptive-per-parameter" => Ok(Optimizer::Adaptive),
            _ => Err(Error::Config(format!("unknown optimizer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub alpha: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub workers: usize,
    /// Train on the average of `X(j|i)` and `X(i|j)` instead of the raw entries.
    pub symmetrize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 500,
            epochs: 50,
            alpha: 0.05,
            optimizer: Optimizer::Adaptive,
            seed: 1,
            workers: 1,
            symmetrize: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.epochs == 0 || self.workers == 0 {
            return Err(Error::Config(
                "dim, epochs and workers must be positive".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config("alpha must be positive".into()));
        }
        Ok(())
    }
}

/// Trainable parameters plus adaptive-step accumulators.
///
/// Matrices are row-major `V × dim`. Accumulators start at 1.0 and are only
/// read in adaptive mode.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub dim: usize,
    pub node_count: usize,
    pub seed: u64,
    pub w: Vec<f64>,
    pub w_tilde: Vec<f64>,
    pub b: Vec<f64>,
    pub b_tilde: Vec<f64>,
    pub acc_w: Vec<f64>,
    pub acc_w_tilde: Vec<f64>,
    pub acc_b: Vec<f64>,
    pub acc_b_tilde: Vec<f64>,
}

/// Total cost of each epoch, summed over the per-step contributions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossTrace {
    pub epochs: Vec<f64>,
}

impl LossTrace {
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch\tcost")?;
        for (e, j) in self.epochs.iter().enumerate() {
            writeln!(out, "{}\t{}", e + 1, numfmt::sig(*j, 9))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }
}

fn uniform_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<f64> {
    let half = 0.5 / dim as f64;
    (0..n * dim)
        .map(|_| rng.random_range(-half..=half))
        .collect()
}

/// Fresh model: vectors uniform on `[−0.5/dim, 0.5/dim]`, zero biases.
pub fn init_model(node_count: usize, config: &TrainConfig) -> EmbeddingModel {
    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(INIT_STREAM);
    let w = uniform_rows(&mut rng, node_count, dim);
    let w_tilde = uniform_rows(&mut rng, node_count, dim);
    EmbeddingModel {
        dim,
        node_count,
        seed: config.seed,
        w,
        w_tilde,
        b: vec![0.0; node_count],
        b_tilde: vec![0.0; node_count],
        acc_w: vec![1.0; node_count * dim],
        acc_w_tilde: vec![1.0; node_count * dim],
        acc_b: vec![1.0; node_count],
        acc_b_tilde: vec![1.0; node_count],
    }
}

impl EmbeddingModel {
    pub fn paper_vector(&self, i: usize) -> &[f64] {
        &self.w[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context_vector(&self, j: usize) -> &[f64] {
        &self.w_tilde[j * self.dim..(j + 1) * self.dim]
    }

    /// `w_i·w̃_j + b_i + b̃_j`, the model's estimate of `X(j|i)`.
    pub fn predict(&self, i: usize, j: usize) -> f64 {
        dot(self.paper_vector(i), self.context_vector(j)) + self.b[i] + self.b_tilde[j]
    }

    /// Weighted cost of the whole matrix at the current parameters.
    pub fn cost(&self, entries: &[ContextEntry]) -> f64 {
        entries
            .iter()
            .map(|e| {
                let d = self.predict(e.source, e.context) - e.x;
                e.f * d * d
            })
            .sum()
    }

    /// Median of `|predict(i, j) - x|` over the entries; 0 for an empty slice.
    pub fn median_residual(&self, entries: &[ContextEntry]) -> f64 {
        let mut r: Vec<f64> = entries
            .iter()
            .map(|e| (self.predict(e.source, e.context) - e.x).abs())
            .collect();
        if r.is_empty() {
            return 0.0;
        }
        r.sort_by(f64::total_cmp);
        let n = r.len();
        if n % 2 == 1 {
            r[n / 2]
        } else {
            0.5 * (r[n / 2 - 1] + r[n / 2])
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.w, &self.w_tilde, &self.b, &self.b_tilde]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Appends freshly initialized rows for documents `node_count..new_count`.
    pub fn grow(&mut self, new_count: usize) {
        if new_count <= self.node_count {
            return;
        }
        let added = new_count - self.node_count;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(2 + self.node_count as u64);
        self.w.extend(uniform_rows(&mut rng, added, self.dim));
        self.w_tilde.extend(uniform_rows(&mut rng, added, self.dim));
        self.b.resize(new_count, 0.0);
        self.b_tilde.resize(new_count, 0.0);
        self.acc_w.resize(new_count * self.dim, 1.0);
        self.acc_w_tilde.resize(new_count * self.dim, 1.0);
        self.acc_b.resize(new_count, 1.0);
        self.acc_b_tilde.resize(new_count, 1.0);
        self.node_count = new_count;
    }

    /// Zeroes the paper vector of every document with `false` in `keep`, so
    /// that untrained rows are flagged rather than ranked on noise.
    pub fn clear_rows(&mut self, keep: &[bool]) {
        for (i, &k) in keep.iter().enumerate().take(self.node_count) {
            if !k {
                self.w[i * self.dim..(i + 1) * self.dim].fill(0.0);
            }
        }
    }

    /// Drops context vectors and biases, L2-normalizing the paper vectors.
    pub fn finalize(&self, ids: &IdMap) -> Result<PaperVectors> {
        if ids.len() != self.node_count {
            return Err(Error::Config(format!(
                "model has {} rows but {} ids were given",
                self.node_count,
                ids.len()
            )));
        }
        Ok(PaperVectors::from_rows(
            ids.clone(),
            self.dim,
            self.w.clone(),
        ))
    }
}

/// Convenience wrapper for [`EmbeddingModel::finalize`].
pub fn finalize(model: &EmbeddingModel, ids: &IdMap) -> Result<PaperVectors> {
    model.finalize(ids)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy)]
enum Block {
    W,
    WTilde,
    B,
    BTilde,
    AccW,
    AccWTilde,
    AccB,
    AccBTilde,
}

/// Parameter storage the step kernel reads and writes through.
trait ParamStore {
    fn get(&self, block: Block, idx: usize) -> f64;
    fn set(&mut self, block: Block, idx: usize, v: f64);
}

impl ParamStore for EmbeddingModel {
    fn get(&self, block: Block, idx: usize) -> f64 {
        match block {
            Block::W => self.w[idx],
            Block::WTilde => self.w_tilde[idx],
            Block::B => self.b[idx],
            Block::BTilde => self.b_tilde[idx],
            Block::AccW => self.acc_w[idx],
            Block::AccWTilde => self.acc_w_tilde[idx],
            Block::AccB => self.acc_b[idx],
            Block::AccBTilde => self.acc_b_tilde[idx],
        }
    }

    fn set(&mut self, block: Block, idx: usize, v: f64) {
        let slot = match block {
            Block::W => &mut self.w[idx],
            Block::WTilde => &mut self.w_tilde[idx],
            Block::B => &mut self.b[idx],
            Block::BTilde => &mut self.b_tilde[idx],
            Block::AccW => &mut self.acc_w[idx],
            Block::AccWTilde => &mut self.acc_w_tilde[idx],
            Block::AccB => &mut self.acc_b[idx],
            Block::AccBTilde => &mut self.acc_b_tilde[idx],
        };
        *slot = v;
    }
}

/// Lock-free view used by multi-worker training. Updates race benignly:
/// each component is read and written atomically, rows are not.
struct SharedParams {
    blocks: [Vec<AtomicU64>; 8],
}

impl SharedParams {
    fn from_model(m: &EmbeddingModel) -> Self {
        let wrap = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect();
        SharedParams {
            blocks: [
                wrap(&m.w),
                wrap(&m.w_tilde),
                wrap(&m.b),
                wrap(&m.b_tilde),
                wrap(&m.acc_w),
                wrap(&m.acc_w_tilde),
                wrap(&m.acc_b),
                wrap(&m.acc_b_tilde),
            ],
        }
    }

    fn store_into(self, m: &mut EmbeddingModel) {
        let [w, wt, b, bt, aw, awt, ab, abt] = self.blocks.map(|v| {
            v.into_iter()
                .map(|a| f64::from_bits(a.into_inner()))
                .collect::<Vec<_>>()
        });
        (m.w, m.w_tilde, m.b, m.b_tilde) = (w, wt, b, bt);
        (m.acc_w, m.acc_w_tilde, m.acc_b, m.acc_b_tilde) = (aw, awt, ab, abt);
    }
}

struct SharedHandle<'a>(&'a SharedParams);

impl ParamStore for SharedHandle<'_> {
    fn get(&self, block: Block, idx: usize) -> f64 {
        f64::from_bits(self.0.blocks[block as usize][idx].load(Ordering::Relaxed))
    }

    fn set(&mut self, block: Block, idx: usize, v: f64) {
        self.0.blocks[block as usize][idx].store(v.to_bits(), Ordering::Relaxed);
    }
}

/// Scratch rows so the kernel reads both vectors before writing either.
#[derive(Default)]
struct Scratch {
    wi: Vec<f64>,
    wj: Vec<f64>,
    new_wi: Vec<f64>,
    new_wj: Vec<f64>,
    acc_wi: Vec<f64>,
    acc_wj: Vec<f64>,
}

#[inline]
fn descend(optimizer: Optimizer, alpha: f64, grad: f64, acc: &mut f64) -> f64 {
    match optimizer {
        Optimizer::PlainSgd => alpha * grad,
        Optimizer::Adaptive => {
            *acc += grad * grad;
            alpha * grad / acc.sqrt()
        }
    }
}

/// One descent step on a single entry. Returns the entry's cost before the
/// update, or `None` (leaving the parameters untouched) if anything would
/// become non-finite.
fn step_kernel<P: ParamStore>(
    p: &mut P,
    dim: usize,
    e: &ContextEntry,
    alpha: f64,
    optimizer: Optimizer,
    s: &mut Scratch,
) -> Option<f64> {
    let (ri, rj) = (e.source * dim, e.context * dim);
    s.wi.clear();
    s.wj.clear();
    s.wi.extend((0..dim).map(|k| p.get(Block::W, ri + k)));
    s.wj.extend((0..dim).map(|k| p.get(Block::WTilde, rj + k)));
    let bi = p.get(Block::B, e.source);
    let bj = p.get(Block::BTilde, e.context);

    let diff = dot(&s.wi, &s.wj) + bi + bj - e.x;
    let g = 2.0 * e.f * diff;
    let loss = e.f * diff * diff;
    if !g.is_finite() || !loss.is_finite() {
        return None;
    }

    s.new_wi.clear();
    s.new_wj.clear();
    s.acc_wi.clear();
    s.acc_wj.clear();
    for k in 0..dim {
        let mut acc_i = p.get(Block::AccW, ri + k);
        let mut acc_j = p.get(Block::AccWTilde, rj + k);
        s.new_wi
            .push(s.wi[k] - descend(optimizer, alpha, g * s.wj[k], &mut acc_i));
        s.new_wj
            .push(s.wj[k] - descend(optimizer, alpha, g * s.wi[k], &mut acc_j));
        s.acc_wi.push(acc_i);
        s.acc_wj.push(acc_j);
    }
    let mut acc_bi = p.get(Block::AccB, e.source);
    let mut acc_bj = p.get(Block::AccBTilde, e.context);
    let new_bi = bi - descend(optimizer, alpha, g, &mut acc_bi);
    let new_bj = bj - descend(optimizer, alpha, g, &mut acc_bj);

    let finite = new_bi.is_finite()
        && new_bj.is_finite()
        && s.new_wi.iter().chain(&s.new_wj).all(|v| v.is_finite());
    if !finite {
        return None;
    }

    for k in 0..dim {
        p.set(Block::W, ri + k, s.new_wi[k]);
        p.set(Block::WTilde, rj + k, s.new_wj[k]);
        if optimizer == Optimizer::Adaptive {
            p.set(Block::AccW, ri + k, s.acc_wi[k]);
            p.set(Block::AccWTilde, rj + k, s.acc_wj[k]);
        }
    }
    p.set(Block::B, e.source, new_bi);
    p.set(Block::BTilde, e.context, new_bj);
    if optimizer == Optimizer::Adaptive {
        p.set(Block::AccB, e.source, acc_bi);
        p.set(Block::AccBTilde, e.context, acc_bj);
    }
    Some(loss)
}

/// Applies one update for `entry` and returns its cost before the update.
pub fn sgd_step(
    model: &mut EmbeddingModel,
    entry: &ContextEntry,
    alpha: f64,
    optimizer: Optimizer,
) -> Result<f64> {
    if entry.source >= model.node_count || entry.context >= model.node_count {
        return Err(Error::UnknownDocument(format!(
            "#{}",
            entry.source.max(entry.context)
        )));
    }
    let dim = model.dim;
    step_kernel(model, dim, entry, alpha, optimizer, &mut Scratch::default()).ok_or(
        Error::NonFiniteGradient {
            epoch: 0,
            source_index: entry.source,
            context_index: entry.context,
        },
    )
}

/// Initializes a model and trains it on `matrix`.
pub fn train(matrix: &ContextMatrix, config: &TrainConfig) -> Result<(EmbeddingModel, LossTrace)> {
    config.validate()?;
    let mut model = init_model(matrix.node_count, config);
    let sym;
    let entries = if config.symmetrize {
        sym = matrix.symmetrized();
        &sym.entries
    } else {
        &matrix.entries
    };
    let trace = fit(&mut model, entries, config, SHUFFLE_STREAM)?;
    Ok((model, trace))
}

/// Runs `config.epochs` shuffled passes over `entries`, continuing from the
/// model's current state.
pub fn fit(
    model: &mut EmbeddingModel,
    entries: &[ContextEntry],
    config: &TrainConfig,
    stream: u64,
) -> Result<LossTrace> {
    config.validate()?;
    if config.dim != model.dim {
        return Err(Error::Config(format!(
            "model dimension {} does not match configured {}",
            model.dim, config.dim
        )));
    }
    if let Some(e) = entries
        .iter()
        .find(|e| e.source >= model.node_count || e.context >= model.node_count)
    {
        return Err(Error::UnknownDocument(format!(
            "#{}",
            e.source.max(e.context)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let mut order: Vec<usize> = (0..entries.len()).collect();
    let mut trace = LossTrace::default();

    if config.workers <= 1 {
        let mut scratch = Scratch::default();
        let dim = model.dim;
        for epoch in 1..=config.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for &k in &order {
                let e = &entries[k];
                total += step_kernel(model, dim, e, config.alpha, config.optimizer, &mut scratch)
                    .ok_or(Error::NonFiniteGradient {
                    epoch,
                    source_index: e.source,
                    context_index: e.context,
                })?;
            }
            log::debug!("epoch {epoch}: cost {total}");
            trace.epochs.push(total);
        }
        return Ok(trace);
    }

    let shared = SharedParams::from_model(model);
    let dim = model.dim;
    let mut result = Ok(());
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let chunk = order.len().div_ceil(config.workers).max(1);
        let outcomes: Vec<std::result::Result<f64, &ContextEntry>> = std::thread::scope(|scope| {
            let handles: Vec<_> = order
                .chunks(chunk)
                .map(|part| {
                    let shared = &shared;
                    scope.spawn(move || {
                        let mut handle = SharedHandle(shared);
                        let mut scratch = Scratch::default();
                        let mut total = 0.0;
                        for &k in part {
                            let e = &entries[k];
                            match step_kernel(
                                &mut handle,
                                dim,
                                e,
                                config.alpha,
                                config.optimizer,
                                &mut scratch,
                            ) {
                                Some(l) => total += l,
                                None => return Err(e),
                            }
                        }
                        Ok(total)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training worker panicked"))
                .collect()
        });
        let mut total = 0.0;
        for outcome in outcomes {
            match outcome {
                Ok(l) => total += l,
                Err(e) => {
                    result = Err(Error::NonFiniteGradient {
                        epoch,
                        source_index: e.source,
                        context_index: e.context,
                    });
                }
            }
        }
        if result.is_err() {
            break;
        }
        trace.epochs.push(total);
    }
    shared.store_into(model);
    result.map(|_| trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(dim: usize) -> TrainConfig {
        TrainConfig {
            dim,
            epochs: 1,
            alpha: 0.05,
            optimizer: Optimizer::PlainSgd,
            seed: 9,
            workers: 1,
            symmetrize: false,
        }
    }

    fn one_dim_model() -> EmbeddingModel {
        let mut m = init_model(2, &plain(1));
        m.w = vec![0.1, 0.0];
        m.w_tilde = vec![0.0, 0.2];
        m
    }

    #[test]
    fn hand_computed_plain_step() {
        let mut m = one_dim_model();
        let e = ContextEntry {
            source: 0,
            context: 1,
            x: 1.0,
            f: 2.0,
        };
        let loss = sgd_step(&mut m, &e, 0.05, Optimizer::PlainSgd).unwrap();
        assert!((loss - 1.9208).abs() < 1e-12);
        assert!((m.w[0] - 0.1392).abs() < 1e-12);
        assert!((m.w_tilde[1] - 0.2196).abs() < 1e-12);
        assert!((m.b[0] - 0.196).abs() < 1e-12);
        assert!((m.b_tilde[1] - 0.196).abs() < 1e-12);
        // untouched rows
        assert_eq!(
            (m.w[1], m.w_tilde[0], m.b[1], m.b_tilde[0]),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn median_residual_of_hand_model() {
        // prediction for (0, 1) is 0.02 and for (1, 0) is 0
        let m = one_dim_model();
        let entry = |source, context, x| ContextEntry {
            source,
            context,
            x,
            f: 1.0,
        };
        let odd = [entry(0, 1, 1.02), entry(1, 0, 3.0), entry(0, 1, 0.52)];
        assert!((m.median_residual(&odd) - 1.0).abs() < 1e-12);
        assert!((m.median_residual(&odd[..2]) - 2.0).abs() < 1e-12);
        assert_eq!(m.median_residual(&[]), 0.0);
    }

    #[test]
    fn satisfied_entry_is_fixed_point() {
        let mut m = one_dim_model();
        let e = ContextEntry {
            source: 0,
            context: 1,
            x: 0.1 * 0.2,
            f: 3.0,
        };
        let before = m.clone();
        for opt in [Optimizer::PlainSgd, Optimizer::Adaptive] {
            assert_eq!(sgd_step(&mut m, &e, 0.05, opt).unwrap(), 0.0);
            assert_eq!(m, before);
        }
    }

    #[test]
    fn adaptive_step_scales_by_accumulator() {
        let mut m = one_dim_model();
        let e = ContextEntry {
            source: 0,
            context: 1,
            x: 1.0,
            f: 2.0,
        };
        sgd_step(&mut m, &e, 0.05, Optimizer::Adaptive).unwrap();
        let g: f64 = -3.92;
        let gw = g * 0.2;
        let expect_w = 0.1 - 0.05 * gw / (1.0 + gw * gw).sqrt();
        assert!((m.w[0] - expect_w).abs() < 1e-15);
        assert!((m.acc_b[0] - (1.0 + g * g)).abs() < 1e-12);
        assert!((m.b[0] + 0.05 * g / (1.0 + g * g).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn init_is_bounded_and_deterministic() {
        let cfg = TrainConfig {
            dim: 16,
            ..plain(16)
        };
        let a = init_model(3, &cfg);
        let b = init_model(3, &cfg);
        assert_eq!(a, b);
        assert!(a.w.iter().chain(&a.w_tilde).all(|v| v.abs() <= 0.03125));
        assert!(a.b.iter().chain(&a.b_tilde).all(|&v| v == 0.0));
        assert!(a.acc_w.iter().all(|&v| v == 1.0));
        let empty = init_model(0, &cfg);
        assert!(empty.w.is_empty() && empty.node_count == 0);
    }

    #[test]
    fn non_finite_step_aborts_without_writing() {
        let mut m = one_dim_model();
        let e = ContextEntry {
            source: 0,
            context: 1,
            x: 1.0,
            f: f64::MAX,
        };
        let before = m.clone();
        let err = sgd_step(&mut m, &e, 0.05, Optimizer::PlainSgd).unwrap_err();
        assert!(matches!(
            err,
            Error::NonFiniteGradient {
                source_index: 0,
                context_index: 1,
                ..
            }
        ));
        assert_eq!(m, before);
    }

    #[test]
    fn empty_matrix_leaves_init() {
        let matrix = ContextMatrix {
            entries: vec![],
            node_count: 4,
            config: Default::default(),
            lambda: 0.0,
        };
        let cfg = TrainConfig {
            epochs: 3,
            ..plain(8)
        };
        let (m, trace) = train(&matrix, &cfg).unwrap();
        assert_eq!(m, init_model(4, &cfg));
        assert_eq!(trace.epochs, vec![0.0; 3]);
    }

    #[test]
    fn finalize_normalizes_and_flags() {
        let mut m = init_model(2, &plain(2));
        m.w = vec![3.0, 4.0, 0.0, 0.0];
        let ids: IdMap = ["a", "b"].into_iter().map(String::from).collect();
        let pv = finalize(&m, &ids).unwrap();
        assert_eq!(pv.vector(0), &[0.6, 0.8]);
        assert!(pv.is_embedded(0));
        assert_eq!(pv.vector(1), &[0.0, 0.0]);
        assert!(!pv.is_embedded(1));
        let wrong: IdMap = ["a"].into_iter().map(String::from).collect();
        assert!(m.finalize(&wrong).is_err());
    }

    #[test]
    fn grow_keeps_existing_rows() {
        let cfg = plain(4);
        let mut m = init_model(3, &cfg);
        let before = m.clone();
        m.grow(5);
        assert_eq!(&m.w[..12], &before.w[..]);
        assert_eq!(m.w.len(), 20);
        assert_eq!(m.b.len(), 5);
        assert!(m.w[12..].iter().all(|v| v.abs() <= 0.125));
    }

    #[test]
    fn optimizer_names() {
        assert_eq!(
            "plain-sgd".parse::<Optimizer>().unwrap(),
            Optimizer::PlainSgd
        );
        assert_eq!(
            "adaptive-per-parameter".parse::<Optimizer>().unwrap(),
            Optimizer::Adaptive
        );
        assert!("adam".parse::<Optimizer>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig {
                dim: 0,
                ..Default::default()
            },
            TrainConfig {
                epochs: 0,
                ..Default::default()
            },
            TrainConfig {
                alpha: 0.0,
                ..Default::default()
            },
            TrainConfig {
                workers: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
