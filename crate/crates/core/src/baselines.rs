//! Co-occurrence citation similarity: Amsler, co-citation and bibliographic
//! coupling. All three only score pairs that share a neighbor, so candidate
//! generation is limited to the two-hop ball around the query.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CitationGraph;
use crate::similarity::{select_top, Neighbor, RankedList, RankingTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Amsler,
    Cocitation,
    Coupling,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Amsler => "amsler",
            Measure::Cocitation => "cocitation",
            Measure::Coupling => "coupling",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amsler" => Ok(Measure::Amsler),
            "cocitation" | "co-citation" => Ok(Measure::Cocitation),
            "coupling" | "bibliographic-coupling" => Ok(Measure::Coupling),
            _ => Err(Error::Config(format!("unknown baseline measure {s:?}"))),
        }
    }
}

/// Size of the intersection of two ascending, deduplicated lists.
fn overlap(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn check_pair(graph: &CitationGraph, i: usize, j: usize) -> Result<()> {
    graph.check(i)?;
    graph.check(j)
}

/// Jaccard overlap of the combined citing ∪ cited sets; 0 when both are empty.
pub fn amsler(graph: &CitationGraph, i: usize, j: usize) -> Result<f64> {
    check_pair(graph, i, j)?;
    // P ∪ C is exactly the undirected neighborhood
    let (a, b) = (graph.neighbors(i), graph.neighbors(j));
    let common = overlap(a, b);
    let union = a.len() + b.len() - common;
    Ok(if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    })
}

/// Number of documents citing both `i` and `j`.
pub fn cocitation(graph: &CitationGraph, i: usize, j: usize) -> Result<usize> {
    check_pair(graph, i, j)?;
    Ok(overlap(graph.citing(i), graph.citing(j)))
}

/// Number of references shared by `i` and `j`.
pub fn bibliographic_coupling(graph: &CitationGraph, i: usize, j: usize) -> Result<usize> {
    check_pair(graph, i, j)?;
    Ok(overlap(graph.cited_by(i), graph.cited_by(j)))
}

pub fn score(graph: &CitationGraph, measure: Measure, i: usize, j: usize) -> Result<f64> {
    match measure {
        Measure::Amsler => amsler(graph, i, j),
        Measure::Cocitation => cocitation(graph, i, j).map(|c| c as f64),
        Measure::Coupling => bibliographic_coupling(graph, i, j).map(|c| c as f64),
    }
}

/// Nonzero-scoring documents within two hops of `i`, best first, at most `k`.
pub fn baseline_top_k(
    graph: &CitationGraph,
    measure: Measure,
    i: usize,
    k: usize,
) -> Result<Vec<Neighbor>> {
    graph.check(i)?;
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut candidates: Vec<usize> = graph
        .neighbors(i)
        .iter()
        .flat_map(|&u| graph.neighbors(u).iter().copied())
        .filter(|&j| j != i)
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    let mut scored = Vec::with_capacity(candidates.len());
    for j in candidates {
        let s = score(graph, measure, i, j)?;
        if s > 0.0 {
            scored.push(Neighbor { index: j, score: s });
        }
    }
    Ok(select_top(scored, k))
}

/// Baseline rankings for every document; empty lists are kept.
pub fn baseline_table(graph: &CitationGraph, measure: Measure, k: usize) -> Result<RankingTable> {
    let lists = (0..graph.node_count())
        .into_par_iter()
        .map(|i| {
            let items = baseline_top_k(graph, measure, i, k)?;
            Ok(RankedList::from_neighbors(graph.ids(), i, &items))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankingTable { lists })
}
