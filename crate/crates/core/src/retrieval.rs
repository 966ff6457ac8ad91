//! L1 ranking and retrieval-quality metrics.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptors::FeatureVector;
use crate::error::{Error, Result};

/// Number of recall levels in an interpolated PR curve (0.0, 0.1, ..., 1.0).
pub const PR_LEVELS: usize = 11;

pub fn l1_distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    if a.descriptor() != b.descriptor() || a.dimension() != b.dimension() {
        return Err(Error::IncompatibleFeatures(format!(
            "{} x{} vs {} x{}",
            a.descriptor(),
            a.dimension(),
            b.descriptor(),
            b.dimension()
        )));
    }
    Ok(l1_unchecked(a.values(), b.values()))
}

#[inline]
fn l1_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Items ordered by ascending distance to a query, query excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    query: usize,
    items: Vec<(usize, f64)>,
}

impl Ranking {
    /// Builds a ranking from arbitrary `(item, distance)` pairs; sorts them by
    /// distance with ties going to the lower item index.
    pub fn from_distances(query: usize, mut items: Vec<(usize, f64)>) -> Result<Self> {
        if items.iter().any(|&(i, d)| i == query || d.is_nan()) {
            return Err(Error::InvalidInput(
                "ranking contains the query or a NaN distance".into(),
            ));
        }
        items.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut seen: Vec<usize> = items.iter().map(|&(i, _)| i).collect();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate item in ranking".into()));
        }
        Ok(Ranking { query, items })
    }

    pub fn query(&self) -> usize {
        self.query
    }

    pub fn items(&self) -> &[(usize, f64)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Relevance flags in rank order.
    fn relevance<'a, L: PartialEq>(&'a self, labels: &'a [L]) -> impl Iterator<Item = bool> + 'a {
        let q = &labels[self.query];
        self.items.iter().map(move |&(i, _)| labels[i] == *q)
    }
}

fn check_features(features: &[FeatureVector]) -> Result<()> {
    if features.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "ranking needs at least 2 items, got {}",
            features.len()
        )));
    }
    let first = &features[0];
    if let Some(bad) = features
        .iter()
        .find(|f| f.descriptor() != first.descriptor() || f.dimension() != first.dimension())
    {
        return Err(Error::IncompatibleFeatures(format!(
            "{} x{} vs {} x{}",
            first.descriptor(),
            first.dimension(),
            bad.descriptor(),
            bad.dimension()
        )));
    }
    Ok(())
}

/// Ranks every other item against `features[query]`.
pub fn rank_all(features: &[FeatureVector], query: usize) -> Result<Ranking> {
    check_features(features)?;
    if query >= features.len() {
        return Err(Error::InvalidArgument(format!(
            "query {query} out of range for {} items",
            features.len()
        )));
    }
    Ok(rank_unchecked(features, query))
}

fn rank_unchecked(features: &[FeatureVector], query: usize) -> Ranking {
    let q = features[query].values();
    let mut items: Vec<(usize, f64)> = features
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != query)
        .map(|(i, f)| (i, l1_unchecked(q, f.values())))
        .collect();
    items.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ranking { query, items }
}

/// One ranking per item, each item acting as the query.
pub fn rank_every_query(features: &[FeatureVector]) -> Result<Vec<Ranking>> {
    check_features(features)?;
    Ok((0..features.len())
        .into_par_iter()
        .map(|q| rank_unchecked(features, q))
        .collect())
}

pub fn precision_at_k<L: PartialEq>(ranking: &Ranking, labels: &[L], k: usize) -> Result<f64> {
    if k == 0 || k > ranking.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            ranking.len()
        )));
    }
    let hits = ranking.relevance(labels).take(k).filter(|&r| r).count();
    Ok(hits as f64 / k as f64)
}

/// Average precision of one ranking; `None` when the query has no relevant candidates.
pub fn average_precision<L: PartialEq>(ranking: &Ranking, labels: &[L]) -> Option<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, relevant) in ranking.relevance(labels).enumerate() {
        if relevant {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

/// Mean of a per-query metric together with the queries that had nothing relevant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flagged<T> {
    pub value: T,
    pub zero_relevant_queries: Vec<usize>,
}

/// MAP; queries without relevant candidates contribute 0 and are flagged.
pub fn mean_average_precision<L: PartialEq>(
    rankings: &[Ranking],
    labels: &[L],
) -> Result<Flagged<f64>> {
    if rankings.is_empty() {
        return Err(Error::InvalidInput("no rankings".into()));
    }
    let mut flagged = Vec::new();
    let mut total = 0.0;
    for r in rankings {
        match average_precision(r, labels) {
            Some(ap) => total += ap,
            None => flagged.push(r.query()),
        }
    }
    Ok(Flagged {
        value: total / rankings.len() as f64,
        zero_relevant_queries: flagged,
    })
}

/// 11-point interpolated precision for one query; all zeros if nothing is relevant.
pub fn interpolated_precision<L: PartialEq>(ranking: &Ranking, labels: &[L]) -> [f64; PR_LEVELS] {
    let relevance: Vec<bool> = ranking.relevance(labels).collect();
    let total = relevance.iter().filter(|&&r| r).count();
    let mut out = [0.0; PR_LEVELS];
    if total == 0 {
        return out;
    }
    // (recall, precision) after each rank
    let mut points = Vec::with_capacity(relevance.len());
    let mut hits = 0usize;
    for (rank, &rel) in relevance.iter().enumerate() {
        hits += usize::from(rel);
        points.push((hits, hits as f64 / (rank + 1) as f64));
    }
    for (level, slot) in out.iter_mut().enumerate() {
        // recall >= level/10  <=>  10·hits >= level·total
        *slot = points
            .iter()
            .filter(|&&(h, _)| 10 * h >= level * total)
            .map(|&(_, p)| p)
            .fold(0.0, f64::max);
    }
    out
}

/// Query-averaged 11-point interpolated PR curve as `(recall_level, precision)` pairs.
pub fn pr_curve<L: PartialEq>(
    rankings: &[Ranking],
    labels: &[L],
) -> Result<Flagged<Vec<(f64, f64)>>> {
    if rankings.is_empty() {
        return Err(Error::InvalidInput("no rankings".into()));
    }
    let mut sums = [0.0; PR_LEVELS];
    let mut flagged = Vec::new();
    for r in rankings {
        let p = interpolated_precision(r, labels);
        if p.iter().all(|&v| v == 0.0) && average_precision(r, labels).is_none() {
            flagged.push(r.query());
        }
        for (s, v) in sums.iter_mut().zip(p) {
            *s += v;
        }
    }
    let n = rankings.len() as f64;
    let curve = sums
        .iter()
        .enumerate()
        .map(|(level, s)| (level as f64 / 10.0, s / n))
        .collect();
    Ok(Flagged {
        value: curve,
        zero_relevant_queries: flagged,
    })
}

/// Weights of the FFP4 score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ffp4Config {
    pub k8: f64,
    pub k9: f64,
}

impl Default for Ffp4Config {
    fn default() -> Self {
        Ffp4Config { k8: 7.0, k9: 0.982 }
    }
}

impl Ffp4Config {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(k8: f64, k9: f64) -> Result<Self> {
        if !(k8 > 0.0) || !(k9 > 0.0 && k9 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ffp4 needs k8 > 0 and 0 < k9 < 1, got k8={k8} k9={k9}"
            )));
        }
        Ok(Ffp4Config { k8, k9 })
    }
}

/// Σ r_i · k8 · k9^i over rank positions `i = 1..=len`, with binary relevance.
pub fn ffp4_score<L: PartialEq>(ranking: &Ranking, labels: &[L], cfg: &Ffp4Config) -> f64 {
    let mut weight = 1.0;
    let mut score = 0.0;
    for relevant in ranking.relevance(labels) {
        weight *= cfg.k9;
        if relevant {
            score += cfg.k8 * weight;
        }
    }
    score
}

/// Mean FFP4 with every item used once as the query.
pub fn mean_ffp4<L: PartialEq + Sync>(
    features: &[FeatureVector],
    labels: &[L],
    cfg: &Ffp4Config,
) -> Result<f64> {
    check_labels(features, labels)?;
    let rankings = rank_every_query(features)?;
    let total: f64 = rankings.iter().map(|r| ffp4_score(r, labels, cfg)).sum();
    Ok(total / rankings.len() as f64)
}

fn check_labels<L>(features: &[FeatureVector], labels: &[L]) -> Result<()> {
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} features but {} labels",
            features.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Per-query row of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: String,
    pub class: String,
    pub p_at_10: f64,
    pub ap: f64,
    pub ffp4: f64,
}

/// Metrics CSV: header, one row per query, then a `summary` row of means.
pub fn metrics_csv(rows: &[QueryMetrics]) -> String {
    let mut out = String::from("query_id,class,p_at_10,ap,ffp4\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.query_id, r.class, r.p_at_10, r.ap, r.ffp4)
            .expect("write to String");
    }
    let n = rows.len().max(1) as f64;
    let mean = |f: fn(&QueryMetrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
    writeln!(
        out,
        "summary,,{},{},{}",
        mean(|r| r.p_at_10),
        mean(|r| r.ap),
        mean(|r| r.ffp4)
    )
    .expect("write to String");
    out
}

pub fn pr_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("recall_level,precision\n");
    for (recall, precision) in curve {
        writeln!(out, "{recall},{precision}").expect("write to String");
    }
    out
}
