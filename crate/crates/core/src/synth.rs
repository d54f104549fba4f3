//! Planted-partition citation graphs with community-derived gold scores, for
//! testing retrieval without a curated corpus.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::GoldStandard;
use crate::graph::{CitationGraph, GraphBuilder};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub communities: usize,
    pub nodes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
    /// Fraction of the other documents that additionally cite document 0.
    pub hub_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            communities: 2,
            nodes: 200,
            p_in: 0.1,
            p_out: 0.005,
            seed: 7,
            hub_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthGraph {
    pub ids: Vec<String>,
    pub community: Vec<usize>,
    /// Directed `(citing, cited)` records; later documents cite earlier ones.
    pub records: Vec<(String, String)>,
}

/// Samples a stochastic block model: each unordered pair is linked with
/// probability `p_in` inside a community and `p_out` across. Communities are
/// contiguous index blocks of (nearly) equal size.
pub fn generate(config: &SynthConfig) -> Result<SynthGraph> {
    let SynthConfig {
        communities,
        nodes,
        p_in,
        p_out,
        seed,
        hub_fraction,
    } = *config;
    if communities == 0 || nodes < communities {
        return Err(Error::Config(
            "need at least one community and one node per community".into(),
        ));
    }
    for p in [p_in, p_out, hub_fraction] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
    }
    let width = (nodes - 1).to_string().len();
    let ids: Vec<String> = (0..nodes).map(|i| format!("d{i:0width$}")).collect();
    let community: Vec<usize> = (0..nodes).map(|i| i * communities / nodes).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut linked = vec![false; nodes];
    let mut records = Vec::new();
    for j in 1..nodes {
        for i in 0..j {
            let p = if community[i] == community[j] {
                p_in
            } else {
                p_out
            };
            if rng.random::<f64>() < p {
                records.push((ids[j].clone(), ids[i].clone()));
                linked[i] = true;
                linked[j] = true;
            }
        }
    }
    if hub_fraction > 0.0 && nodes > 1 {
        let mut others: Vec<usize> = (1..nodes).collect();
        others.shuffle(&mut rng);
        let take = (hub_fraction * (nodes - 1) as f64).round() as usize;
        for &o in &others[..take] {
            records.push((ids[o].clone(), ids[0].clone()));
            linked[o] = true;
            linked[0] = true;
        }
    }
    for (i, id) in ids.iter().enumerate() {
        if !linked[i] {
            records.push((id.clone(), id.clone()));
        }
    }
    Ok(SynthGraph {
        ids,
        community,
        records,
    })
}

impl SynthGraph {
    /// The citation graph with indices in generator order.
    pub fn graph(&self) -> CitationGraph {
        let mut builder = GraphBuilder::new();
        for id in &self.ids {
            builder.add_document(id);
        }
        for (a, b) in &self.records {
            builder.add_citation(a, b);
        }
        builder.build()
    }

    pub fn community_of(&self, id: &str) -> Option<usize> {
        self.ids
            .iter()
            .position(|x| x == id)
            .map(|i| self.community[i])
    }

    /// Same-community pairs with score 1; cross pairs are absent.
    pub fn gold_pairs(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        let n = self.ids.len();
        (0..n).flat_map(move |a| {
            (a + 1..n)
                .filter(move |&b| self.community[a] == self.community[b])
                .map(move |b| (self.ids[a].as_str(), self.ids[b].as_str()))
        })
    }

    pub fn gold(&self) -> GoldStandard {
        let mut gold = GoldStandard::new();
        for (a, b) in self.gold_pairs() {
            gold.insert(a, b, 1.0).expect("generated pairs are unique");
        }
        gold
    }

    pub fn write_edges<W: Write>(&self, mut out: W) -> Result<()> {
        for (a, b) in &self.records {
            writeln!(out, "{a}\t{b}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_gold<W: Write>(&self, mut out: W) -> Result<()> {
        for (a, b) in self.gold_pairs() {
            writeln!(out, "{a}\t{b}\t1")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_labels<W: Write>(&self, mut out: W) -> Result<()> {
        for (id, c) in self.ids.iter().zip(&self.community) {
            writeln!(out, "{id}\t{c}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `edges.tsv`, `gold.tsv` and `labels.tsv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_edges(BufWriter::new(File::create(dir.join("edges.tsv"))?))?;
        self.write_gold(BufWriter::new(File::create(dir.join("gold.tsv"))?))?;
        self.write_labels(BufWriter::new(File::create(dir.join("labels.tsv"))?))
    }
}
