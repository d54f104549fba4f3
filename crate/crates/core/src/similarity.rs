//! Query-time similarity over finalized paper vectors.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::binio::{LeReader, LeWriter};
use crate::error::{Error, Result};
use crate::graph::IdMap;
use crate::numfmt;
use crate::trainer::dot;

const MODEL_MAGIC: &[u8; 4] = b"P2V1";

/// Unit-length document vectors. Rows that were exactly zero stay zero and
/// are marked as unembedded.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperVectors {
    ids: IdMap,
    dim: usize,
    data: Vec<f64>,
    embedded: Vec<bool>,
}

impl PaperVectors {
    /// Normalizes each row of the row-major `rows` matrix.
    pub fn from_rows(ids: IdMap, dim: usize, mut rows: Vec<f64>) -> Self {
        assert_eq!(rows.len(), ids.len() * dim, "row matrix shape mismatch");
        let mut embedded = Vec::with_capacity(ids.len());
        if dim > 0 {
            for row in rows.chunks_mut(dim) {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|v| *v /= norm);
                }
                embedded.push(norm > 0.0);
            }
        } else {
            embedded.resize(ids.len(), false);
        }
        PaperVectors {
            ids,
            dim,
            data: rows,
            embedded,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &IdMap {
        &self.ids
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_embedded(&self, i: usize) -> bool {
        self.embedded[i]
    }

    /// Applies `f` to every embedded vector, e.g. a rotation in tests.
    pub fn map_vectors(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> PaperVectors {
        let mut out = self.clone();
        for i in 0..self.len() {
            if self.embedded[i] {
                let v = f(self.vector(i));
                out.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(&v);
            }
        }
        out
    }

    fn require(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::UnknownDocument(format!("#{i}")));
        }
        if !self.embedded[i] {
            return Err(Error::NoEmbedding(self.ids.id(i).to_owned()));
        }
        Ok(())
    }

    /// Binary model file: magic `P2V1`, u32 dim, u64 V, then per document a
    /// u16 id length, the UTF-8 id and `dim` little-endian f32 values.
    pub fn write_model<W: Write>(&self, out: W) -> Result<()> {
        let mut out = LeWriter(out);
        out.bytes(MODEL_MAGIC)?;
        out.u32(self.dim as u32)?;
        out.u64(self.len() as u64)?;
        for (i, id) in self.ids.ids().iter().enumerate() {
            let len = u16::try_from(id.len())
                .map_err(|_| Error::format("model", format!("id too long: {id:?}")))?;
            out.u16(len)?;
            out.bytes(id.as_bytes())?;
            for &v in self.vector(i) {
                out.f32(v as f32)?;
            }
        }
        out.flush()
    }

    pub fn write_model_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_model(BufWriter::new(File::create(path)?))
    }

    pub fn read_model<R: Read>(input: R) -> Result<PaperVectors> {
        let mut r = LeReader::new(input, "model");
        let mut magic = [0u8; 4];
        r.bytes(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::format("model", "bad magic"));
        }
        let dim = r.u32()? as usize;
        let n = r.u64()? as usize;
        let mut ids = IdMap::new();
        let mut data = Vec::with_capacity(n.saturating_mul(dim).min(1 << 28));
        let mut embedded = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            let len = r.u16()? as usize;
            let id = r.string(len)?;
            if ids.intern(&id) != ids.len() - 1 {
                return Err(Error::format("model", format!("duplicate id {id:?}")));
            }
            let start = data.len();
            for _ in 0..dim {
                data.push(r.f32()? as f64);
            }
            embedded.push(data[start..].iter().any(|&v| v != 0.0));
        }
        r.finish()?;
        Ok(PaperVectors {
            ids,
            dim,
            data,
            embedded,
        })
    }

    pub fn read_model_file(path: impl AsRef<Path>) -> Result<PaperVectors> {
        Self::read_model(BufReader::new(File::open(path)?))
    }

    /// Text export: one line per document, id then space-separated values.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, id) in self.ids.ids().iter().enumerate() {
            write!(out, "{id}")?;
            for &v in self.vector(i) {
                write!(out, " {}", v as f32)?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_text_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_text(BufWriter::new(File::create(path)?))
    }
}

/// Cosine similarity of two embedded documents.
pub fn cosine(vectors: &PaperVectors, i: usize, j: usize) -> Result<f64> {
    vectors.require(i)?;
    vectors.require(j)?;
    Ok(dot(vectors.vector(i), vectors.vector(j)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub score: f64,
}

/// Descending score, then ascending index.
pub fn rank_order(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.index.cmp(&b.index))
}

/// Keeps the `k` best of `scored` under [`rank_order`], sorted.
pub fn select_top(mut scored: Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
    if scored.len() > k && k > 0 {
        scored.select_nth_unstable_by(k - 1, rank_order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(rank_order);
    scored.truncate(k);
    scored
}

/// Exhaustive top-`k` by cosine against every other embedded document.
pub fn top_k(vectors: &PaperVectors, i: usize, k: usize) -> Result<Vec<Neighbor>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    vectors.require(i)?;
    let q = vectors.vector(i);
    let scored = (0..vectors.len())
        .filter(|&j| j != i && vectors.embedded[j])
        .map(|j| Neighbor {
            index: j,
            score: dot(q, vectors.vector(j)),
        })
        .collect();
    Ok(select_top(scored, k))
}

/// Top-`k` lists for every embedded document, in index order.
pub fn all_top_k(vectors: &PaperVectors, k: usize) -> Result<RankingTable> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let lists = (0..vectors.len())
        .into_par_iter()
        .filter(|&i| vectors.embedded[i])
        .map(|i| {
            let items = top_k(vectors, i, k)?;
            Ok(RankedList::from_neighbors(vectors.ids(), i, &items))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankingTable { lists })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query: String,
    pub items: Vec<(String, f64)>,
}

impl RankedList {
    pub fn from_neighbors(ids: &IdMap, query: usize, items: &[Neighbor]) -> Self {
        RankedList {
            query: ids.id(query).to_owned(),
            items: items
                .iter()
                .map(|n| (ids.id(n.index).to_owned(), n.score))
                .collect(),
        }
    }
}

/// Ordered similar-document lists keyed by external id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankingTable {
    pub lists: Vec<RankedList>,
}

impl RankingTable {
    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn get(&self, query: &str) -> Option<&RankedList> {
        self.lists.iter().find(|l| l.query == query)
    }

    /// Writes `query<TAB>rank<TAB>neighbor<TAB>score` lines, ranks from 1.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for list in &self.lists {
            for (r, (id, score)) in list.items.iter().enumerate() {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    list.query,
                    r + 1,
                    id,
                    numfmt::sig(*score, 9)
                )?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    /// Reads the ranking format. Lines of one query must be contiguous and in
    /// rank order; a neighbor may appear only once per query.
    pub fn read<R: BufRead>(reader: R) -> Result<RankingTable> {
        const WHAT: &str = "ranking file";
        let mut lists: Vec<RankedList> = Vec::new();
        let mut seen_queries = HashSet::new();
        let mut seen_items = HashSet::new();
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 || fields[0].is_empty() || fields[2].is_empty() {
                return Err(Error::parse(
                    WHAT,
                    line_no,
                    "expected query, rank, neighbor, score",
                ));
            }
            let rank: usize = fields[1]
                .parse()
                .map_err(|_| Error::parse(WHAT, line_no, "bad rank"))?;
            let score: f64 = fields[3]
                .parse()
                .map_err(|_| Error::parse(WHAT, line_no, "bad score"))?;
            let (query, item) = (fields[0], fields[2]);
            if lists.last().is_none_or(|l| l.query != query) {
                if !seen_queries.insert(query.to_owned()) {
                    return Err(Error::parse(
                        WHAT,
                        line_no,
                        "query lines are not contiguous",
                    ));
                }
                seen_items.clear();
                lists.push(RankedList {
                    query: query.to_owned(),
                    items: Vec::new(),
                });
            }
            let list = lists.last_mut().expect("just pushed");
            if rank != list.items.len() + 1 {
                return Err(Error::parse(WHAT, line_no, "ranks must run 1, 2, 3, ..."));
            }
            if !seen_items.insert(item.to_owned()) {
                return Err(Error::parse(WHAT, line_no, "duplicate neighbor in list"));
            }
            list.items.push((item.to_owned(), score));
        }
        Ok(RankingTable { lists })
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<RankingTable> {
        Self::read(BufReader::new(File::open(path)?))
    }
}
