//! Ranking evaluation: intersection ratio against a gold standard, and
//! Entropy Novelty of the recommended-document distribution.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numfmt;
use crate::similarity::RankingTable;

/// Symmetric pairwise gold similarity scores keyed by external id.
#[derive(Debug, Clone, Default)]
pub struct GoldStandard {
    pairs: HashMap<(String, String), f64>,
    by_doc: HashMap<String, Vec<(String, f64)>>,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

impl GoldStandard {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pair; repeating a pair with a different score is an error.
    pub fn insert(&mut self, a: &str, b: &str, score: f64) -> Result<()> {
        let key = pair_key(a, b);
        if let Some(&prev) = self.pairs.get(&key) {
            if prev != score {
                return Err(Error::GoldConflict {
                    a: key.0,
                    b: key.1,
                    first: prev,
                    second: score,
                });
            }
            return Ok(());
        }
        self.pairs.insert(key, score);
        if a != b {
            self.by_doc
                .entry(a.to_owned())
                .or_default()
                .push((b.to_owned(), score));
            self.by_doc
                .entry(b.to_owned())
                .or_default()
                .push((a.to_owned(), score));
        }
        Ok(())
    }

    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        self.pairs.get(&pair_key(a, b)).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains_document(&self, id: &str) -> bool {
        self.by_doc.contains_key(id)
    }

    fn sorted_for(&self, id: &str) -> Option<Vec<(String, f64)>> {
        let mut list = self.by_doc.get(id)?.clone();
        list.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Some(list)
    }

    /// Reads `id_a<TAB>id_b<TAB>score` lines (`#` comments allowed).
    pub fn read<R: BufRead>(reader: R) -> Result<GoldStandard> {
        const WHAT: &str = "gold file";
        let mut gold = GoldStandard::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields[0].is_empty() || fields[1].is_empty() {
                return Err(Error::parse(WHAT, n + 1, "expected id_a, id_b, score"));
            }
            let score: f64 = fields[2]
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite())
                .ok_or_else(|| Error::parse(WHAT, n + 1, "bad score"))?;
            gold.insert(fields[0], fields[1], score)?;
        }
        Ok(gold)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<GoldStandard> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

pub fn load_gold(path: impl AsRef<Path>) -> Result<GoldStandard> {
    GoldStandard::read_file(path)
}

/// The `k` best gold partners of `id`, ties by ascending id. `None` when the
/// document has no gold data.
pub fn gold_top_k(gold: &GoldStandard, id: &str, k: usize) -> Option<Vec<(String, f64)>> {
    let mut list = gold.sorted_for(id)?;
    list.truncate(k);
    Some(list)
}

/// How the gold top-K set is cut when scores tie at rank K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GoldTies {
    /// Exactly K documents, ties broken by ascending id.
    #[default]
    Truncate,
    /// Every document scoring at least the K-th best score.
    Inclusive,
}

/// Denominator of the per-query intersection ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioDenominator {
    #[default]
    K,
    /// The system list's own length (at most K).
    ListLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IntersectionOptions {
    pub ties: GoldTies,
    pub denominator: RatioDenominator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub metric: String,
    pub k: usize,
    pub value: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub per_query: Vec<(String, f64)>,
}

impl MetricReport {
    /// `metric<TAB>K<TAB>value<TAB>evaluated<TAB>skipped`
    pub fn line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.metric,
            self.k,
            numfmt::sig(self.value, 9),
            self.evaluated,
            self.skipped
        )
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.line())?;
        out.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn write_per_query<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "query,{}", self.metric)?;
        for (q, v) in &self.per_query {
            writeln!(out, "{q},{}", numfmt::sig(*v, 9))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Parses report lines back; per-query values are not part of this format.
    pub fn read<R: BufRead>(reader: R) -> Result<Vec<MetricReport>> {
        const WHAT: &str = "metric report";
        let mut out = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let bad = || Error::parse(WHAT, n + 1, "expected metric, K, value, evaluated, skipped");
            if f.len() != 5 {
                return Err(bad());
            }
            out.push(MetricReport {
                metric: f[0].to_owned(),
                k: f[1].parse().map_err(|_| bad())?,
                value: f[2].parse().map_err(|_| bad())?,
                evaluated: f[3].parse().map_err(|_| bad())?,
                skipped: f[4].parse().map_err(|_| bad())?,
                per_query: Vec::new(),
            });
        }
        Ok(out)
    }
}

/// Mean over evaluable queries of `|system top-K ∩ gold top-K| / K`.
/// Queries without gold data are skipped and counted.
pub fn intersection_ratio(
    system: &RankingTable,
    gold: &GoldStandard,
    k: usize,
    options: IntersectionOptions,
) -> Result<MetricReport> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut per_query = Vec::new();
    let mut skipped = 0;
    for list in &system.lists {
        let Some(ranked) = gold.sorted_for(&list.query) else {
            skipped += 1;
            continue;
        };
        let cut = match options.ties {
            GoldTies::Truncate => k.min(ranked.len()),
            GoldTies::Inclusive => match ranked.get(k.min(ranked.len()).saturating_sub(1)) {
                Some(&(_, kth)) => ranked.iter().take_while(|(_, s)| *s >= kth).count(),
                None => 0,
            },
        };
        let gold_set: HashSet<&str> = ranked[..cut].iter().map(|(id, _)| id.as_str()).collect();
        let returned = &list.items[..k.min(list.items.len())];
        let hits = returned
            .iter()
            .filter(|(id, _)| gold_set.contains(id.as_str()))
            .count();
        let denom = match options.denominator {
            RatioDenominator::K => k,
            RatioDenominator::ListLength => returned.len(),
        };
        let ratio = if denom == 0 {
            0.0
        } else {
            hits as f64 / denom as f64
        };
        per_query.push((list.query.clone(), ratio));
    }
    if per_query.is_empty() {
        return Err(Error::NoEvaluableQueries);
    }
    let value = per_query.iter().map(|(_, r)| r).sum::<f64>() / per_query.len() as f64;
    Ok(MetricReport {
        metric: "intersection_ratio".into(),
        k,
        value,
        evaluated: per_query.len(),
        skipped,
        per_query,
    })
}

/// Shannon entropy (natural log) of how often each document is recommended.
///
/// `p_i` is the number of lists containing `i` over the total list length;
/// a document counts at most once per list, so the `p_i` sum to one.
pub fn entropy_novelty(table: &RankingTable) -> Result<MetricReport> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    let mut longest = 0usize;
    for list in &table.lists {
        let mut seen = HashSet::new();
        for (id, _) in &list.items {
            if seen.insert(id.as_str()) {
                *counts.entry(id.as_str()).or_default() += 1;
                total += 1;
            }
        }
        longest = longest.max(seen.len());
    }
    if total == 0 {
        return Err(Error::EmptyRankings);
    }
    let total = total as f64;
    let mut mass = 0.0;
    let mut novelty = 0.0;
    for &c in counts.values() {
        let p = c as f64 / total;
        mass += p;
        novelty -= p * p.ln();
    }
    debug_assert!((mass - 1.0).abs() < 1e-9, "probabilities sum to {mass}");
    Ok(MetricReport {
        metric: "entropy_novelty".into(),
        k: longest,
        value: novelty.max(0.0),
        evaluated: table.lists.len(),
        skipped: 0,
        per_query: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::RankedList;

    fn table(lists: &[(&str, &[&str])]) -> RankingTable {
        RankingTable {
            lists: lists
                .iter()
                .map(|(q, items)| RankedList {
                    query: q.to_string(),
                    items: items
                        .iter()
                        .enumerate()
                        .map(|(r, id)| (id.to_string(), 1.0 / (r + 1) as f64))
                        .collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn gold_is_symmetric() {
        let gold = GoldStandard::read("a\tb\t0.7\n".as_bytes()).unwrap();
        assert_eq!(gold.score("b", "a"), Some(0.7));
        assert_eq!(gold.score("a", "c"), None);
    }

    #[test]
    fn gold_conflicts_rejected() {
        let err = GoldStandard::read("a\tb\t0.7\nb\ta\t0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::GoldConflict { .. }));
        assert!(GoldStandard::read("a\tb\t0.7\nb\ta\t0.7\n".as_bytes()).is_ok());
    }

    #[test]
    fn gold_empty_and_malformed() {
        assert!(GoldStandard::read("".as_bytes()).unwrap().is_empty());
        assert!(matches!(
            GoldStandard::read("a\tb\t1\na\tb\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(GoldStandard::read("a\tb\tnan\n".as_bytes()).is_err());
    }

    #[test]
    fn gold_top_k_semantics() {
        let gold =
            GoldStandard::read("q\tc\t0.5\nq\tb\t0.5\nq\ta\t0.9\nq\td\t0.1\n".as_bytes()).unwrap();
        let top = gold_top_k(&gold, "q", 3).unwrap();
        let ids: Vec<&str> = top.iter().map(|(i, _)| i.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(gold_top_k(&gold, "q", 10).unwrap().len(), 4);
        assert_eq!(
            gold_top_k(&gold, "a", 10).unwrap(),
            vec![("q".to_owned(), 0.9)]
        );
        assert!(gold_top_k(&gold, "zz", 3).is_none());
    }

    fn gold_from_table(t: &RankingTable) -> GoldStandard {
        let mut g = GoldStandard::new();
        for l in &t.lists {
            for (r, (id, _)) in l.items.iter().enumerate() {
                g.insert(&l.query, id, 100.0 - r as f64).unwrap();
            }
        }
        g
    }

    #[test]
    fn ratio_identity_and_disjoint() {
        let sys = table(&[("q1", &["a", "b"]), ("q2", &["c", "d"])]);
        let gold = gold_from_table(&sys);
        let r = intersection_ratio(&sys, &gold, 2, Default::default()).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!((r.evaluated, r.skipped), (2, 0));
        let other = table(&[("q1", &["x", "y"]), ("q2", &["z", "w"])]);
        let r = intersection_ratio(&other, &gold, 2, Default::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn ratio_half_of_ten() {
        let sys_items: Vec<String> = (0..10).map(|i| format!("s{i}")).collect();
        let mut gold = GoldStandard::new();
        for i in 0..5 {
            gold.insert("q", &format!("s{i}"), 1.0).unwrap();
            gold.insert("q", &format!("g{i}"), 1.0).unwrap();
        }
        let refs: Vec<&str> = sys_items.iter().map(String::as_str).collect();
        let sys = table(&[("q", &refs)]);
        let r = intersection_ratio(&sys, &gold, 10, Default::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ratio_skips_queries_without_gold() {
        let sys = table(&[("q1", &["a"]), ("nogold", &["a"])]);
        let mut gold = GoldStandard::new();
        gold.insert("q1", "a", 1.0).unwrap();
        let r = intersection_ratio(&sys, &gold, 1, Default::default()).unwrap();
        assert_eq!((r.value, r.evaluated, r.skipped), (1.0, 1, 1));
        let none = table(&[("nogold", &["a"])]);
        assert!(matches!(
            intersection_ratio(&none, &gold, 1, Default::default()),
            Err(Error::NoEvaluableQueries)
        ));
    }

    #[test]
    fn ratio_denominator_variants() {
        let sys = table(&[("q", &["a"])]);
        let mut gold = GoldStandard::new();
        gold.insert("q", "a", 1.0).unwrap();
        gold.insert("q", "b", 0.5).unwrap();
        let by_k = intersection_ratio(&sys, &gold, 2, Default::default()).unwrap();
        assert_eq!(by_k.value, 0.5);
        let opts = IntersectionOptions {
            denominator: RatioDenominator::ListLength,
            ..Default::default()
        };
        assert_eq!(intersection_ratio(&sys, &gold, 2, opts).unwrap().value, 1.0);
    }

    #[test]
    fn inclusive_ties_take_whole_tied_block() {
        let mut gold = GoldStandard::new();
        for id in ["a", "b", "c", "d"] {
            gold.insert("q", id, 1.0).unwrap();
        }
        gold.insert("q", "e", 0.2).unwrap();
        let sys = table(&[("q", &["d", "c"])]);
        let strict = intersection_ratio(&sys, &gold, 2, Default::default()).unwrap();
        assert_eq!(strict.value, 0.0);
        let opts = IntersectionOptions {
            ties: GoldTies::Inclusive,
            ..Default::default()
        };
        assert_eq!(intersection_ratio(&sys, &gold, 2, opts).unwrap().value, 1.0);
        let with_e = table(&[("q", &["e", "a"])]);
        assert_eq!(
            intersection_ratio(&with_e, &gold, 2, opts).unwrap().value,
            0.5
        );
    }

    #[test]
    fn novelty_uniform_three() {
        let t = table(&[("q1", &["a"]), ("q2", &["b"]), ("q3", &["c"])]);
        let r = entropy_novelty(&t).unwrap();
        assert!((r.value - 3f64.ln()).abs() < 1e-12);
        assert!((r.value - 1.0986).abs() < 1e-4);
    }

    #[test]
    fn novelty_single_document_is_zero() {
        let t = table(&[("q1", &["x"]), ("q2", &["x"]), ("q3", &["x"])]);
        assert_eq!(entropy_novelty(&t).unwrap().value, 0.0);
    }

    #[test]
    fn novelty_uniform_n_is_ln_n() {
        // 6 documents, each appearing in exactly two of six length-2 lists
        let t = table(&[
            ("q1", &["a", "b"]),
            ("q2", &["c", "d"]),
            ("q3", &["e", "f"]),
            ("q4", &["a", "b"]),
            ("q5", &["c", "d"]),
            ("q6", &["e", "f"]),
        ]);
        let r = entropy_novelty(&t).unwrap();
        assert!((r.value - 6f64.ln()).abs() < 1e-12);
        assert_eq!(r.k, 2);
    }

    #[test]
    fn novelty_handles_ragged_lists() {
        let t = table(&[("q1", &["a", "b", "c"]), ("q2", &[]), ("q3", &["a"])]);
        let r = entropy_novelty(&t).unwrap();
        let p = [0.5, 0.25, 0.25];
        let expect: f64 = -p.iter().map(|p: &f64| p * p.ln()).sum::<f64>();
        assert!((r.value - expect).abs() < 1e-12);
        assert!(matches!(
            entropy_novelty(&table(&[("q", &[])])),
            Err(Error::EmptyRankings)
        ));
    }

    #[test]
    fn report_round_trip() {
        let r = MetricReport {
            metric: "intersection_ratio".into(),
            k: 10,
            value: 0.123456789123,
            evaluated: 7,
            skipped: 2,
            per_query: vec![("a".into(), 0.5)],
        };
        assert_eq!(r.line(), "intersection_ratio\t10\t0.123456789\t7\t2");
        let mut buf = Vec::new();
        r.write(&mut buf).unwrap();
        let back = MetricReport::read(&buf[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!((back[0].k, back[0].evaluated, back[0].skipped), (10, 7, 2));
        let mut csv = Vec::new();
        r.write_per_query(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "query,intersection_ratio\na,0.5\n"
        );
    }
}
