//! Full training state for resuming: ids, all parameters, accumulators and
//! the context settings needed to rebuild rows consistently.
//!
//! Layout (little-endian): magic `P2VC`, u32 version, u32 dim, u64 V, u64 seed,
//! u64 win, f64 λ, u8 exclude_diagonal, f64 prune threshold, V × (u32 length,
//! UTF-8 id), then the eight f64 blocks `w, w̃, b, b̃` and their accumulators.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::EmbeddingModel;
use crate::binio::{LeReader, LeWriter};
use crate::context::{ContextConfig, LambdaMode};
use crate::error::{Error, Result};
use crate::graph::IdMap;

const MAGIC: &[u8; 4] = b"P2VC";
const VERSION: u32 = 1;
const WHAT: &str = "checkpoint";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub ids: IdMap,
    pub model: EmbeddingModel,
    /// Context settings with λ resolved to a fixed value.
    pub context: ContextConfig,
}

impl Checkpoint {
    pub fn new(ids: IdMap, model: EmbeddingModel, context: ContextConfig, lambda: f64) -> Self {
        Checkpoint {
            ids,
            model,
            context: ContextConfig {
                lambda: LambdaMode::Fixed(lambda),
                ..context
            },
        }
    }

    pub fn lambda(&self) -> f64 {
        match self.context.lambda {
            LambdaMode::Fixed(l) => l,
            LambdaMode::Auto { .. } => unreachable!("checkpoint lambda is always resolved"),
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let m = &self.model;
        let mut out = LeWriter(out);
        out.bytes(MAGIC)?;
        out.u32(VERSION)?;
        out.u32(m.dim as u32)?;
        out.u64(m.node_count as u64)?;
        out.u64(m.seed)?;
        out.u64(self.context.win as u64)?;
        out.f64(self.lambda())?;
        out.u8(self.context.exclude_diagonal as u8)?;
        out.f64(self.context.prune_threshold)?;
        for id in self.ids.ids() {
            out.u32(id.len() as u32)?;
            out.bytes(id.as_bytes())?;
        }
        for block in [
            &m.w,
            &m.w_tilde,
            &m.b,
            &m.b_tilde,
            &m.acc_w,
            &m.acc_w_tilde,
            &m.acc_b,
            &m.acc_b_tilde,
        ] {
            out.f64s(block)?;
        }
        out.flush()
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn read<R: Read>(input: R) -> Result<Checkpoint> {
        let mut r = LeReader::new(input, WHAT);
        let mut magic = [0u8; 4];
        r.bytes(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::format(WHAT, "bad magic"));
        }
        if r.u32()? != VERSION {
            return Err(Error::format(WHAT, "unsupported version"));
        }
        let dim = r.u32()? as usize;
        let n = r.u64()? as usize;
        let seed = r.u64()?;
        let win = r.u64()? as usize;
        let lambda = r.f64()?;
        let exclude_diagonal = r.u8()? != 0;
        let prune_threshold = r.f64()?;
        let mut ids = IdMap::new();
        for _ in 0..n {
            let len = r.u32()? as usize;
            let id = r.string(len)?;
            if ids.intern(&id) != ids.len() - 1 {
                return Err(Error::format(WHAT, format!("duplicate id {id:?}")));
            }
        }
        let model = EmbeddingModel {
            dim,
            node_count: n,
            seed,
            w: r.f64s(n * dim)?,
            w_tilde: r.f64s(n * dim)?,
            b: r.f64s(n)?,
            b_tilde: r.f64s(n)?,
            acc_w: r.f64s(n * dim)?,
            acc_w_tilde: r.f64s(n * dim)?,
            acc_b: r.f64s(n)?,
            acc_b_tilde: r.f64s(n)?,
        };
        r.finish()?;
        let context = ContextConfig {
            win,
            lambda: LambdaMode::Fixed(lambda),
            exclude_diagonal,
            prune_threshold,
        };
        context.validate()?;
        Ok(Checkpoint {
            ids,
            model,
            context,
        })
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Checkpoint> {
        Self::read(BufReader::new(File::open(path)?))
    }
}
