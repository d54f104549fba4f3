#![allow(dead_code)]

use paper2vec::graph::{CitationGraph, GraphBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Erdős–Rényi citation graph over `n` documents named `n0..`; each linked
/// pair gets a random citation direction, and a few reciprocal citations.
pub fn random_graph(n: usize, p: f64, seed: u64) -> (CitationGraph, Vec<(String, String)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                let (a, b) = if rng.random::<bool>() { (i, j) } else { (j, i) };
                records.push((format!("n{a}"), format!("n{b}")));
                if rng.random::<f64>() < 0.1 {
                    records.push((format!("n{b}"), format!("n{a}")));
                }
            }
        }
    }
    let mut builder = GraphBuilder::new();
    for i in 0..n {
        builder.add_document(&format!("n{i}"));
    }
    for (a, b) in &records {
        builder.add_citation(a, b);
    }
    (builder.build(), records)
}

/// Dense row-stochastic transition matrix.
pub fn dense_transition(g: &CitationGraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        let d = g.degree(i);
        for &j in g.neighbors(i) {
            row[j] = 1.0 / d as f64;
        }
    }
    a
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != 0.0 {
                for j in 0..n {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}
