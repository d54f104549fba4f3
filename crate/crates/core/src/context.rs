//! Weighted citation-link context.
//!
//! For a source document `i` the context mass of `j` is
//!
//! ```text
//! M_ij = Σ_{o=1..win} Σ_{k=1..o} [A^k]_ij = Σ_{k=1..win} (win + 1 - k) [A^k]_ij
//! ```
//!
//! where `A` is the uniform transition matrix of the undirected citation graph.
//! The regression target is `X(j|i) = max(0, ln M_ij + λ)` and the per-entry
//! confidence weight is `M_ij` itself. Rows are computed exactly by propagating
//! a sparse probability vector `win` times; no walks are sampled.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CitationGraph;
use crate::numfmt;

/// How the log shift λ is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    Fixed(f64),
    /// λ = −ln of the given nearest-rank percentile of all candidate masses.
    Auto {
        percentile: f64,
    },
}

impl fmt::Display for LambdaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaMode::Fixed(l) => write!(f, "fixed({l})"),
            LambdaMode::Auto { percentile } => write!(f, "auto(q={percentile})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextConfig {
    pub win: usize,
    pub lambda: LambdaMode,
    pub exclude_diagonal: bool,
    /// Masses at or below this value are not considered.
    pub prune_threshold: f64,
}

impl Default for ContextConfig {
    fn default() -> Self {
        Self {
            win: 3,
            lambda: LambdaMode::Auto { percentile: 0.05 },
            exclude_diagonal: true,
            prune_threshold: 0.0,
        }
    }
}

impl ContextConfig {
    pub fn validate(&self) -> Result<()> {
        if self.win == 0 {
            return Err(Error::Config("win must be at least 1".into()));
        }
        match self.lambda {
            LambdaMode::Fixed(l) if !l.is_finite() => {
                return Err(Error::Config("lambda must be finite".into()))
            }
            LambdaMode::Auto { percentile } if !(percentile > 0.0 && percentile < 1.0) => {
                return Err(Error::Config(
                    "lambda percentile must lie strictly between 0 and 1".into(),
                ))
            }
            _ => {}
        }
        if self.prune_threshold.is_nan() || self.prune_threshold < 0.0 {
            return Err(Error::Config("prune threshold must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One nonzero cell of the context matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextEntry {
    pub source: usize,
    pub context: usize,
    /// Shifted log weight X(j|i), always > 0.
    pub x: f64,
    /// Raw context mass M_ij used as the least-squares weight.
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextMatrix {
    pub entries: Vec<ContextEntry>,
    pub node_count: usize,
    pub config: ContextConfig,
    pub lambda: f64,
}

/// Reusable dense scratch space for row propagation.
struct Propagator {
    mass: Vec<f64>,
    cur: Vec<f64>,
    next: Vec<f64>,
    in_mass: Vec<bool>,
    in_next: Vec<bool>,
    mass_nodes: Vec<usize>,
    frontier: Vec<usize>,
    next_frontier: Vec<usize>,
}

impl Propagator {
    fn new(n: usize) -> Self {
        Self {
            mass: vec![0.0; n],
            cur: vec![0.0; n],
            next: vec![0.0; n],
            in_mass: vec![false; n],
            in_next: vec![false; n],
            mass_nodes: Vec::new(),
            frontier: Vec::new(),
            next_frontier: Vec::new(),
        }
    }

    fn row(&mut self, graph: &CitationGraph, win: usize, source: usize) -> Vec<(usize, f64)> {
        self.cur[source] = 1.0;
        self.frontier.push(source);
        for k in 1..=win {
            for &u in &self.frontier {
                let p = self.cur[u];
                self.cur[u] = 0.0;
                let nbrs = graph.neighbors(u);
                if nbrs.is_empty() {
                    continue;
                }
                let share = p / nbrs.len() as f64;
                for &v in nbrs {
                    if !self.in_next[v] {
                        self.in_next[v] = true;
                        self.next_frontier.push(v);
                    }
                    self.next[v] += share;
                }
            }
            let coeff = (win + 1 - k) as f64;
            for &v in &self.next_frontier {
                self.in_next[v] = false;
                if !self.in_mass[v] {
                    self.in_mass[v] = true;
                    self.mass_nodes.push(v);
                }
                self.mass[v] += coeff * self.next[v];
            }
            std::mem::swap(&mut self.cur, &mut self.next);
            std::mem::swap(&mut self.frontier, &mut self.next_frontier);
            self.next_frontier.clear();
        }
        for &u in &self.frontier {
            self.cur[u] = 0.0;
        }
        self.frontier.clear();

        self.mass_nodes.sort_unstable();
        let row = self.mass_nodes.iter().map(|&j| (j, self.mass[j])).collect();
        for &j in &self.mass_nodes {
            self.mass[j] = 0.0;
            self.in_mass[j] = false;
        }
        self.mass_nodes.clear();
        row
    }
}

/// Coefficient-weighted expected visits `M_i` of a `win`-step walk from `i`,
/// sorted by context index. The diagonal is included.
pub fn expected_visits(graph: &CitationGraph, win: usize, i: usize) -> Result<Vec<(usize, f64)>> {
    graph.check(i)?;
    if win == 0 {
        return Err(Error::Config("win must be at least 1".into()));
    }
    Ok(Propagator::new(graph.node_count()).row(graph, win, i))
}

/// λ = −ln m where m is the nearest-rank `q` percentile of `masses`.
///
/// The rank is `max(1, ⌊q·n⌋)` so that, for distinct masses, at least a
/// `1 − q` fraction lies strictly above the cut.
pub fn select_lambda(masses: &[f64], q: f64) -> Result<f64> {
    if masses.is_empty() {
        return Err(Error::NoContextMass);
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Config(
            "lambda percentile must lie strictly between 0 and 1".into(),
        ));
    }
    let mut sorted = masses.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((q * n as f64 + 1e-9).floor() as usize).clamp(1, n);
    Ok(-sorted[rank - 1].ln())
}

/// Candidate masses for each listed source after diagonal and prune filtering.
fn candidate_rows(
    graph: &CitationGraph,
    config: &ContextConfig,
    sources: &[usize],
) -> Vec<Vec<(usize, f64)>> {
    let n = graph.node_count();
    sources
        .par_iter()
        .map_init(
            || Propagator::new(n),
            |prop, &i| {
                let mut row = prop.row(graph, config.win, i);
                row.retain(|&(j, m)| {
                    m > config.prune_threshold && !(config.exclude_diagonal && j == i)
                });
                row
            },
        )
        .collect()
}

fn weigh(sources: &[usize], rows: Vec<Vec<(usize, f64)>>, lambda: f64) -> Vec<ContextEntry> {
    sources
        .iter()
        .zip(rows)
        .flat_map(|(&source, row)| {
            row.into_iter().filter_map(move |(context, m)| {
                let x = (m.ln() + lambda).max(0.0);
                (x > 0.0).then_some(ContextEntry {
                    source,
                    context,
                    x,
                    f: m,
                })
            })
        })
        .collect()
}

/// Builds the full weighted context matrix.
pub fn build_context_matrix(
    graph: &CitationGraph,
    config: &ContextConfig,
) -> Result<ContextMatrix> {
    config.validate()?;
    let sources: Vec<usize> = (0..graph.node_count()).collect();
    let rows = candidate_rows(graph, config, &sources);
    let lambda = match config.lambda {
        LambdaMode::Fixed(l) => l,
        LambdaMode::Auto { percentile } => {
            let masses: Vec<f64> = rows.iter().flatten().map(|&(_, m)| m).collect();
            select_lambda(&masses, percentile)?
        }
    };
    Ok(ContextMatrix {
        entries: weigh(&sources, rows, lambda),
        node_count: graph.node_count(),
        config: *config,
        lambda,
    })
}

/// Rebuilds only the rows of `sources` (ascending) with a known λ.
pub fn build_rows(
    graph: &CitationGraph,
    config: &ContextConfig,
    lambda: f64,
    sources: &[usize],
) -> Vec<ContextEntry> {
    let rows = candidate_rows(graph, config, sources);
    weigh(sources, rows, lambda)
}

impl ContextMatrix {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Averages `(i, j)` with `(j, i)`; a missing direction counts as zero.
    pub fn symmetrized(&self) -> ContextMatrix {
        use std::collections::BTreeMap;
        let mut cells: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
        for e in &self.entries {
            for key in [(e.source, e.context), (e.context, e.source)] {
                let cell = cells.entry(key).or_insert((0.0, 0.0));
                cell.0 += 0.5 * e.x;
                cell.1 += 0.5 * e.f;
            }
        }
        let entries = cells
            .into_iter()
            .filter(|(_, (x, _))| *x > 0.0)
            .map(|((source, context), (x, f))| ContextEntry {
                source,
                context,
                x,
                f,
            })
            .collect();
        ContextMatrix {
            entries,
            ..self.clone()
        }
    }

    /// Sources that own at least one entry.
    pub fn source_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.node_count];
        for e in &self.entries {
            mask[e.source] = true;
        }
        mask
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "#paper2vec-context v1 V={} win={} lambda={}",
            self.node_count, self.config.win, self.lambda
        )?;
        for e in &self.entries {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                e.source,
                e.context,
                numfmt::sig(e.x, 9),
                numfmt::sig(e.f, 9)
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    /// Reads the cache format. The returned config carries the recorded
    /// window and a fixed λ; other fields take their defaults.
    pub fn read<R: BufRead>(reader: R) -> Result<ContextMatrix> {
        const WHAT: &str = "context file";
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::parse(WHAT, 1, "missing header"))?;
        let header = header.trim_end_matches('\r');
        let rest = header
            .strip_prefix("#paper2vec-context v1 ")
            .ok_or_else(|| Error::parse(WHAT, 1, "bad header"))?;
        let (mut v, mut win, mut lambda) = (None, None, None);
        for field in rest.split_whitespace() {
            let bad = || Error::parse(WHAT, 1, format!("bad header field {field:?}"));
            let (key, value) = field.split_once('=').ok_or_else(bad)?;
            match key {
                "V" => v = Some(value.parse::<usize>().map_err(|_| bad())?),
                "win" => win = Some(value.parse::<usize>().map_err(|_| bad())?),
                "lambda" => lambda = Some(value.parse::<f64>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let (Some(node_count), Some(win), Some(lambda)) = (v, win, lambda) else {
            return Err(Error::parse(WHAT, 1, "header needs V, win and lambda"));
        };

        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            let line_no = n + 2;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    WHAT,
                    line_no,
                    "expected four tab-separated fields",
                ));
            }
            let bad = |m: &str| Error::parse(WHAT, line_no, m.to_owned());
            let source: usize = fields[0].parse().map_err(|_| bad("bad source index"))?;
            let context: usize = fields[1].parse().map_err(|_| bad("bad context index"))?;
            let x: f64 = fields[2].parse().map_err(|_| bad("bad x"))?;
            let f: f64 = fields[3].parse().map_err(|_| bad("bad f"))?;
            if source >= node_count || context >= node_count {
                return Err(bad("index out of range"));
            }
            if !(x > 0.0 && x.is_finite() && f > 0.0 && f.is_finite()) {
                return Err(bad("weights must be positive and finite"));
            }
            entries.push(ContextEntry {
                source,
                context,
                x,
                f,
            });
        }
        let exclude_diagonal = entries.iter().all(|e| e.source != e.context);
        Ok(ContextMatrix {
            entries,
            node_count,
            config: ContextConfig {
                win,
                lambda: LambdaMode::Fixed(lambda),
                exclude_diagonal,
                prune_threshold: 0.0,
            },
            lambda,
        })
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<ContextMatrix> {
        Self::read(BufReader::new(File::open(path)?))
    }
}
