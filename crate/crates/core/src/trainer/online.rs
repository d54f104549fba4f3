//! Incremental training after new citations arrive.
//!
//! Adding an edge changes the transition rows of its endpoints, which only
//! affects the context rows of sources whose `win`-step walks can reach them.
//! Those rows are rebuilt with the original λ and trained for a few more
//! epochs; every other row is left as is.

use super::{fit, Checkpoint, LossTrace, TrainConfig};
use crate::context::build_rows;
use crate::error::{Error, Result};
use crate::graph::CitationGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineReport {
    pub new_documents: usize,
    pub affected_sources: usize,
    pub entries: usize,
    pub trace: LossTrace,
}

/// Updates `checkpoint` in place for `graph`, which must be the previously
/// trained graph extended by the `delta` citation records.
pub fn update_online(
    checkpoint: &mut Checkpoint,
    graph: &CitationGraph,
    delta: &[(String, String)],
    config: &TrainConfig,
) -> Result<OnlineReport> {
    let old = checkpoint.ids.len();
    if graph.node_count() < old || graph.ids().ids()[..old] != *checkpoint.ids.ids() {
        return Err(Error::Config(
            "updated graph does not extend the checkpoint's documents".into(),
        ));
    }
    let config = TrainConfig {
        dim: checkpoint.model.dim,
        ..*config
    };

    checkpoint.model.grow(graph.node_count());
    checkpoint.ids = graph.ids().clone();

    let mut seeds = Vec::with_capacity(delta.len() * 2);
    for (a, b) in delta {
        seeds.push(graph.index_of(a)?);
        seeds.push(graph.index_of(b)?);
    }
    let within = graph.ball(seeds, checkpoint.context.win);
    let sources: Vec<usize> = (0..graph.node_count()).filter(|&i| within[i]).collect();
    let entries = build_rows(graph, &checkpoint.context, checkpoint.lambda(), &sources);
    log::info!(
        "online update: {} new documents, {} affected sources, {} entries",
        graph.node_count() - old,
        sources.len(),
        entries.len()
    );
    let stream = (1 << 63) | graph.node_count() as u64;
    let trace = fit(&mut checkpoint.model, &entries, &config, stream)?;
    Ok(OnlineReport {
        new_documents: graph.node_count() - old,
        affected_sources: sources.len(),
        entries: entries.len(),
        trace,
    })
}
