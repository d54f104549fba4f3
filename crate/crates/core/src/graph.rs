//! Citation graph ingestion.
//!
//! Directed citation records are interned into dense indices (first-seen order)
//! and collapsed into an undirected simple graph that drives the random walk.
//! The directed cited (`C`) and citing (`P`) sets are kept alongside for the
//! co-occurrence baselines.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Bijection between external document ids and dense indices `0..V`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `id`, assigning the next free one if it is new.
    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn lookup(&self, id: &str) -> Result<usize> {
        self.get(id)
            .ok_or_else(|| Error::UnknownDocument(id.to_owned()))
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

impl FromIterator<String> for IdMap {
    fn from_iter<T: IntoIterator<Item = String>>(iter: T) -> Self {
        let mut map = IdMap::new();
        for id in iter {
            map.intern(&id);
        }
        map
    }
}

/// Immutable citation graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationGraph {
    ids: IdMap,
    adjacency: Vec<Vec<usize>>,
    cited: Vec<Vec<usize>>,
    citing: Vec<Vec<usize>>,
}

/// Incremental builder; records may arrive in any order.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    ids: IdMap,
    edges: Vec<(usize, usize)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a document without any citation.
    pub fn add_document(&mut self, id: &str) -> usize {
        self.ids.intern(id)
    }

    pub fn add_citation(&mut self, citing: &str, cited: &str) {
        let from = self.ids.intern(citing);
        let to = self.ids.intern(cited);
        // self-citations keep the node but never become links
        if from != to {
            self.edges.push((from, to));
        }
    }

    pub fn build(self) -> CitationGraph {
        let n = self.ids.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut cited = vec![Vec::new(); n];
        let mut citing = vec![Vec::new(); n];
        for &(from, to) in &self.edges {
            cited[from].push(to);
            citing[to].push(from);
            adjacency[from].push(to);
            adjacency[to].push(from);
        }
        for list in adjacency
            .iter_mut()
            .chain(cited.iter_mut())
            .chain(citing.iter_mut())
        {
            list.sort_unstable();
            list.dedup();
        }
        CitationGraph {
            ids: self.ids,
            adjacency,
            cited,
            citing,
        }
    }
}

/// Builds a graph from `(citing, cited)` pairs.
pub fn ingest_edges<I, S>(records: I) -> CitationGraph
where
    I: IntoIterator<Item = (S, S)>,
    S: AsRef<str>,
{
    let mut builder = GraphBuilder::new();
    for (citing, cited) in records {
        builder.add_citation(citing.as_ref(), cited.as_ref());
    }
    builder.build()
}

/// Parses the edge-list text format: `citing<TAB>cited` per line, `#` comments,
/// blank lines ignored, LF or CRLF endings.
pub fn parse_edge_records<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(
                "edge file",
                n + 1,
                "expected exactly two tab-separated fields",
            ));
        };
        let (a, b) = (a.trim(), b.trim());
        if a.is_empty() || b.is_empty() {
            return Err(Error::parse("edge file", n + 1, "empty document id"));
        }
        records.push((a.to_owned(), b.to_owned()));
    }
    Ok(records)
}

pub fn read_edge_records(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    parse_edge_records(BufReader::new(File::open(path)?))
}

pub fn read_edge_file(path: impl AsRef<Path>) -> Result<CitationGraph> {
    Ok(ingest_edges(read_edge_records(path)?))
}

impl CitationGraph {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn ids(&self) -> &IdMap {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        self.ids.id(i)
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.ids.lookup(id)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Undirected neighbors, sorted ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Documents cited by `i`.
    pub fn cited_by(&self, i: usize) -> &[usize] {
        &self.cited[i]
    }

    /// Documents citing `i`.
    pub fn citing(&self, i: usize) -> &[usize] {
        &self.citing[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub(crate) fn check(&self, i: usize) -> Result<()> {
        if i < self.node_count() {
            Ok(())
        } else {
            Err(Error::UnknownDocument(format!("#{i}")))
        }
    }

    /// Uniform random-walk transition probabilities out of `i`.
    pub fn transition_row(&self, i: usize) -> Result<Vec<(usize, f64)>> {
        self.check(i)?;
        let nbrs = &self.adjacency[i];
        if nbrs.is_empty() {
            return Ok(Vec::new());
        }
        let p = 1.0 / nbrs.len() as f64;
        Ok(nbrs.iter().map(|&j| (j, p)).collect())
    }

    /// Marks every node within `hops` undirected steps of any of `seeds`.
    pub fn ball(&self, seeds: impl IntoIterator<Item = usize>, hops: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::new();
        for s in seeds {
            if !seen[s] {
                seen[s] = true;
                queue.push_back((s, 0));
            }
        }
        while let Some((u, d)) = queue.pop_front() {
            if d == hops {
                continue;
            }
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back((v, d + 1));
                }
            }
        }
        seen
    }

    /// Distinct directed citations in index order.
    pub fn citations(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cited
            .iter()
            .enumerate()
            .flat_map(|(i, out)| out.iter().map(move |&j| (i, j)))
    }

    /// Writes the graph back out in edge-file format. Nodes without links are
    /// emitted as self-citation records so they survive re-ingestion.
    pub fn write_edges<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.node_count() {
            for &j in &self.cited[i] {
                writeln!(out, "{}\t{}", self.id(i), self.id(j))?;
            }
            if self.adjacency[i].is_empty() {
                writeln!(out, "{}\t{}", self.id(i), self.id(i))?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_edge_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_edges(BufWriter::new(File::create(path)?))
    }
}
