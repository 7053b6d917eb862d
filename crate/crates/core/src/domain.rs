//! Ground-truth domain model shared by every other module: queries, items,
//! relevances, rankings, rank weights, logging policies, display contexts,
//! and click logs.
//!
//! All types here are immutable after construction and safe to share across
//! concurrent readers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for probability sums (policy mixtures, query distributions).
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

// ── Errors ──────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("item {item} is not in the ranking")]
    NotInRanking { item: ItemId },

    #[error("no relevance declared for item {item} under query {query}")]
    MissingRelevance { query: QueryId, item: ItemId },

    #[error("duplicate item {item} in ranking")]
    DuplicateItem { item: ItemId },

    #[error("relevance {value} for item {item} under query {query} is outside [0, 1]")]
    RelevanceOutOfRange {
        query: QueryId,
        item: ItemId,
        value: f64,
    },

    #[error("probability {value} is outside [0, 1] ({what})")]
    ProbabilityOutOfRange { what: String, value: f64 },

    #[error("probabilities for {what} sum to {sum}, expected 1")]
    ProbabilitySum { what: String, sum: f64 },

    #[error("identifier {text:?} is invalid: {reason}")]
    InvalidIdentifier { text: String, reason: String },

    #[error("impression {index} does not belong to query {expected}")]
    QueryMismatch { expected: QueryId, index: u64 },

    #[error("impression indices must be 0..N-1 in order; found {found} at position {position}")]
    BadImpressionIndex { found: u64, position: usize },

    #[error("impression has {clicks} click flags for {items} ranked items")]
    ClickShapeMismatch { clicks: usize, items: usize },
}

// ── Identifiers ─────────────────────────────────────────────────────────

fn validate_identifier(text: &str) -> Result<(), DomainError> {
    if text.is_empty() {
        return Err(DomainError::InvalidIdentifier {
            text: text.to_owned(),
            reason: "empty".to_owned(),
        });
    }
    if let Some(bad) = text
        .chars()
        .find(|c| !(c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')))
    {
        return Err(DomainError::InvalidIdentifier {
            text: text.to_owned(),
            reason: format!("character {bad:?} not allowed"),
        });
    }
    Ok(())
}

macro_rules! id_type {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(text: impl AsRef<str>) -> Result<Self, DomainError> {
                let text = text.as_ref();
                validate_identifier(text)?;
                Ok(Self(Arc::from(text)))
            }

            #[must_use]
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.0)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                Self::new(&text).map_err(serde::de::Error::custom)
            }
        }
    };
}

id_type!(
    ItemId,
    "Opaque item identifier (alphanumeric plus `_-.`), unique within a scenario."
);
id_type!(
    QueryId,
    "Opaque query identifier (alphanumeric plus `_-.`), unique within a scenario."
);

// ── Relevance ───────────────────────────────────────────────────────────

/// Ground-truth relevance per (query, item): the probability that a user
/// prefers the item given the query. Lookups of undeclared pairs are errors,
/// never silent defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelevanceTable {
    entries: BTreeMap<QueryId, BTreeMap<ItemId, f64>>,
}

impl RelevanceTable {
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        query: QueryId,
        item: ItemId,
        relevance: f64,
    ) -> Result<(), DomainError> {
        if !(0.0..=1.0).contains(&relevance) {
            return Err(DomainError::RelevanceOutOfRange {
                query,
                item,
                value: relevance,
            });
        }
        self.entries.entry(query).or_default().insert(item, relevance);
        Ok(())
    }

    pub fn get(&self, query: &QueryId, item: &ItemId) -> Result<f64, DomainError> {
        self.entries
            .get(query)
            .and_then(|m| m.get(item))
            .copied()
            .ok_or_else(|| DomainError::MissingRelevance {
                query: query.clone(),
                item: item.clone(),
            })
    }

    #[must_use]
    pub fn contains(&self, query: &QueryId, item: &ItemId) -> bool {
        self.entries.get(query).is_some_and(|m| m.contains_key(item))
    }

    /// Items declared for a query, in id order.
    pub fn items_for(&self, query: &QueryId) -> impl Iterator<Item = (&ItemId, f64)> {
        self.entries
            .get(query)
            .into_iter()
            .flat_map(|m| m.iter().map(|(item, &r)| (item, r)))
    }
}

// ── Rankings ────────────────────────────────────────────────────────────

/// An ordered list of distinct items; ranks are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ItemId>", into = "Vec<ItemId>")]
pub struct Ranking {
    items: Vec<ItemId>,
}

impl Ranking {
    pub fn new(items: Vec<ItemId>) -> Result<Self, DomainError> {
        let mut seen = BTreeSet::new();
        for item in &items {
            if !seen.insert(item.clone()) {
                return Err(DomainError::DuplicateItem { item: item.clone() });
            }
        }
        Ok(Self { items })
    }

    #[must_use]
    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    #[must_use]
    pub fn contains(&self, item: &ItemId) -> bool {
        self.items.contains(item)
    }

    /// 1-based rank of `item`, or `NotInRanking`.
    pub fn rank_of(&self, item: &ItemId) -> Result<usize, DomainError> {
        self.items
            .iter()
            .position(|d| d == item)
            .map(|p| p + 1)
            .ok_or_else(|| DomainError::NotInRanking { item: item.clone() })
    }
}

impl TryFrom<Vec<ItemId>> for Ranking {
    type Error = DomainError;

    fn try_from(items: Vec<ItemId>) -> Result<Self, Self::Error> {
        Self::new(items)
    }
}

impl From<Ranking> for Vec<ItemId> {
    fn from(r: Ranking) -> Self {
        r.items
    }
}

// ── Rank weights ────────────────────────────────────────────────────────

/// Weight assigned to each 1-based rank when scoring a ranking.
///
/// The default is the DCG-style `1 / log2(rank + 1)`, which is positive and
/// non-increasing in rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankWeights {
    /// `1 / log2(rank + 1)`.
    Dcg,
    /// `1 / rank`.
    Reciprocal,
    /// `1` for every rank.
    Uniform,
    /// Explicit per-rank table; ranks beyond the table weigh zero.
    Table(Vec<f64>),
}

impl Default for RankWeights {
    fn default() -> Self {
        Self::Dcg
    }
}

impl RankWeights {
    /// Weight of a 1-based rank.
    #[must_use]
    pub fn weight(&self, rank: usize) -> f64 {
        debug_assert!(rank >= 1, "ranks are 1-based");
        match self {
            Self::Dcg => 1.0 / ((rank + 1) as f64).log2(),
            Self::Reciprocal => 1.0 / rank as f64,
            Self::Uniform => 1.0,
            Self::Table(weights) => weights.get(rank - 1).copied().unwrap_or(0.0),
        }
    }
}

// ── Logging policy ──────────────────────────────────────────────────────

/// Distribution over displayed rankings, per query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoggingPolicy {
    rankings: BTreeMap<QueryId, Vec<(Arc<Ranking>, f64)>>,
}

impl LoggingPolicy {
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare the ranking distribution for a query. Probabilities must lie
    /// in [0, 1] and sum to 1 within [`PROBABILITY_SUM_TOLERANCE`].
    pub fn set_query(
        &mut self,
        query: QueryId,
        rankings: Vec<(Ranking, f64)>,
    ) -> Result<(), DomainError> {
        for (_, p) in &rankings {
            if !(0.0..=1.0).contains(p) {
                return Err(DomainError::ProbabilityOutOfRange {
                    what: format!("ranking probability for query {query}"),
                    value: *p,
                });
            }
        }
        let sum: f64 = rankings.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(DomainError::ProbabilitySum {
                what: format!("rankings of query {query}"),
                sum,
            });
        }
        self.rankings.insert(
            query,
            rankings.into_iter().map(|(r, p)| (Arc::new(r), p)).collect(),
        );
        Ok(())
    }

    /// Convenience for a deterministic policy: one ranking with probability 1.
    pub fn set_deterministic(&mut self, query: QueryId, ranking: Ranking) -> Result<(), DomainError> {
        self.set_query(query, vec![(ranking, 1.0)])
    }

    #[must_use]
    pub fn rankings_for(&self, query: &QueryId) -> &[(Arc<Ranking>, f64)] {
        self.rankings.get(query).map_or(&[], Vec::as_slice)
    }

    pub fn queries(&self) -> impl Iterator<Item = &QueryId> {
        self.rankings.keys()
    }

    /// Raw (unchecked) sum of ranking probabilities for a query; used by
    /// scenario validation to report violations instead of erroring.
    #[must_use]
    pub fn probability_sum(&self, query: &QueryId) -> f64 {
        self.rankings_for(query).iter().map(|(_, p)| p).sum()
    }
}

// ── Display contexts ────────────────────────────────────────────────────

/// Continuous context values are rounded to this many decimal digits before
/// keying, so that algebraically equal values never split into two contexts.
const CONTEXT_KEY_DECIMALS: f64 = 1e12;

/// How an item was displayed, described without any reference to the item's
/// own relevance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum DisplayContext {
    /// Display position (1-based rank).
    Position(usize),
    /// Probability that the user's scan reached the item.
    ExposureProbability(f64),
    /// Total relevance mass of the *other* items in the choice set.
    ChoiceSetMass(f64),
}

impl DisplayContext {
    /// Canonical hashable key; equal descriptors produce equal keys.
    #[must_use]
    pub fn key(&self) -> ContextKey {
        fn quantize(v: f64) -> i64 {
            (v * CONTEXT_KEY_DECIMALS).round() as i64
        }
        match self {
            Self::Position(rank) => ContextKey::Position(*rank),
            Self::ExposureProbability(kappa) => ContextKey::Exposure(quantize(*kappa)),
            Self::ChoiceSetMass(mass) => ContextKey::ChoiceMass(quantize(*mass)),
        }
    }
}

/// Canonical context key: positions stay integral, continuous values are
/// quantized to 12 decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContextKey {
    Position(usize),
    Exposure(i64),
    ChoiceMass(i64),
}

impl fmt::Display for ContextKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Position(rank) => write!(f, "pos:{rank}"),
            Self::Exposure(q) => write!(f, "exposure:{:.12}", *q as f64 / CONTEXT_KEY_DECIMALS),
            Self::ChoiceMass(q) => write!(f, "mass:{:.12}", *q as f64 / CONTEXT_KEY_DECIMALS),
        }
    }
}

// ── Impressions and click logs ──────────────────────────────────────────

/// One logged display of a ranking with its click outcome. Click flags are
/// stored positionally: `clicks[j]` belongs to `ranking.items()[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Impression {
    query: QueryId,
    index: u64,
    ranking: Arc<Ranking>,
    clicks: Vec<bool>,
}

impl Impression {
    pub fn new(
        query: QueryId,
        index: u64,
        ranking: Arc<Ranking>,
        clicks: Vec<bool>,
    ) -> Result<Self, DomainError> {
        if clicks.len() != ranking.len() {
            return Err(DomainError::ClickShapeMismatch {
                clicks: clicks.len(),
                items: ranking.len(),
            });
        }
        Ok(Self {
            query,
            index,
            ranking,
            clicks,
        })
    }

    #[must_use]
    pub fn query(&self) -> &QueryId {
        &self.query
    }

    #[must_use]
    pub fn index(&self) -> u64 {
        self.index
    }

    #[must_use]
    pub fn ranking(&self) -> &Ranking {
        &self.ranking
    }

    #[must_use]
    pub fn ranking_arc(&self) -> &Arc<Ranking> {
        &self.ranking
    }

    /// Click flag for `item`, or `None` when the item was not displayed.
    #[must_use]
    pub fn click(&self, item: &ItemId) -> Option<bool> {
        self.ranking
            .items()
            .iter()
            .position(|d| d == item)
            .map(|j| self.clicks[j])
    }

    /// Iterate `(item, 1-based rank, clicked)` in rank order.
    pub fn entries(&self) -> impl Iterator<Item = (&ItemId, usize, bool)> {
        self.ranking
            .items()
            .iter()
            .zip(&self.clicks)
            .enumerate()
            .map(|(j, (item, &clicked))| (item, j + 1, clicked))
    }

    #[must_use]
    pub fn click_count(&self) -> usize {
        self.clicks.iter().filter(|&&c| c).count()
    }
}

/// The interaction log for one query: an ordered sequence of impressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickLog {
    query: QueryId,
    impressions: Vec<Impression>,
}

impl ClickLog {
    pub fn new(query: QueryId, impressions: Vec<Impression>) -> Result<Self, DomainError> {
        for (position, imp) in impressions.iter().enumerate() {
            if imp.query != query {
                return Err(DomainError::QueryMismatch {
                    expected: query,
                    index: imp.index,
                });
            }
            if imp.index != position as u64 {
                return Err(DomainError::BadImpressionIndex {
                    found: imp.index,
                    position,
                });
            }
        }
        Ok(Self { query, impressions })
    }

    #[must_use]
    pub fn query(&self) -> &QueryId {
        &self.query
    }

    #[must_use]
    pub fn impressions(&self) -> &[Impression] {
        &self.impressions
    }

    /// `N_q`: the number of logged impressions.
    #[must_use]
    pub fn len(&self) -> usize {
        self.impressions.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.impressions.is_empty()
    }

    /// Log restricted to the first `n` impressions (prefix stream).
    pub fn prefix(&self, n: usize) -> Result<Self, DomainError> {
        let n = n.min(self.impressions.len());
        Self::new(self.query.clone(), self.impressions[..n].to_vec())
    }
}

// ── Quality measures ────────────────────────────────────────────────────

/// Quality of a ranking for a query: the rank-weighted sum of the ranked
/// items' relevances.
pub fn ranking_quality(
    ranking: &Ranking,
    weights: &RankWeights,
    rel: &RelevanceTable,
    query: &QueryId,
) -> Result<f64, DomainError> {
    let mut total = 0.0;
    for (rank0, item) in ranking.items().iter().enumerate() {
        total += weights.weight(rank0 + 1) * rel.get(query, item)?;
    }
    Ok(total)
}

/// Expected ranking quality of a logging policy over a query distribution.
pub fn model_quality(
    policy: &LoggingPolicy,
    queries: &[(QueryId, f64)],
    weights: &RankWeights,
    rel: &RelevanceTable,
) -> Result<f64, DomainError> {
    let sum: f64 = queries.iter().map(|(_, p)| p).sum();
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(DomainError::ProbabilitySum {
            what: "query distribution".to_owned(),
            sum,
        });
    }
    let mut total = 0.0;
    for (query, query_prob) in queries {
        for (ranking, ranking_prob) in policy.rankings_for(query) {
            total += query_prob * ranking_prob * ranking_quality(ranking, weights, rel, query)?;
        }
    }
    Ok(total)
}

// ── Scenario validation ─────────────────────────────────────────────────

/// A single problem found by [`validate_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Violation {
    PolicyProbabilitySum { query: QueryId, sum: f64 },
    ProbabilityOutOfRange { query: QueryId, value: f64 },
    MissingRelevance { query: QueryId, item: ItemId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PolicyProbabilitySum { query, sum } => {
                write!(f, "policy probabilities for query {query} sum to {sum}")
            }
            Self::ProbabilityOutOfRange { query, value } => {
                write!(f, "ranking probability {value} for query {query} outside [0, 1]")
            }
            Self::MissingRelevance { query, item } => {
                write!(f, "ranked item {item} has no relevance entry for query {query}")
            }
        }
    }
}

/// Outcome of scenario validation; an empty report means the scenario is
/// well-formed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    #[must_use]
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check a relevance table and logging policy for structural problems:
/// probability sums, out-of-range probabilities, and ranked items without a
/// relevance entry. Findings are reported, not raised.
#[must_use]
pub fn validate_scenario(rel: &RelevanceTable, policy: &LoggingPolicy) -> ValidationReport {
    let mut report = ValidationReport::default();
    for query in policy.queries() {
        let sum = policy.probability_sum(query);
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            report.violations.push(Violation::PolicyProbabilitySum {
                query: query.clone(),
                sum,
            });
        }
        let mut missing = BTreeSet::new();
        for (ranking, prob) in policy.rankings_for(query) {
            if !(0.0..=1.0).contains(prob) {
                report.violations.push(Violation::ProbabilityOutOfRange {
                    query: query.clone(),
                    value: *prob,
                });
            }
            for item in ranking.items() {
                if !rel.contains(query, item) {
                    missing.insert(item.clone());
                }
            }
        }
        for item in missing {
            report.violations.push(Violation::MissingRelevance {
                query: query.clone(),
                item,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn item(s: &str) -> ItemId {
        ItemId::new(s).unwrap()
    }

    pub(crate) fn query(s: &str) -> QueryId {
        QueryId::new(s).unwrap()
    }

    fn ranking(items: &[&str]) -> Ranking {
        Ranking::new(items.iter().map(|s| item(s)).collect()).unwrap()
    }

    #[test]
    fn rank_of_positions_are_one_based() {
        let r = ranking(&["A", "B", "C"]);
        assert_eq!(r.rank_of(&item("B")).unwrap(), 2);
        let single = ranking(&["A"]);
        assert_eq!(single.rank_of(&item("A")).unwrap(), 1);
    }

    #[test]
    fn rank_of_absent_item_errors() {
        let r = ranking(&["A", "B"]);
        assert_eq!(
            r.rank_of(&item("C")),
            Err(DomainError::NotInRanking { item: item("C") })
        );
    }

    #[test]
    fn rank_of_is_a_bijection_onto_prefix() {
        let r = ranking(&["A", "B", "C", "D"]);
        let mut ranks: Vec<usize> = r
            .items()
            .iter()
            .map(|d| r.rank_of(d).unwrap())
            .collect();
        ranks.sort_unstable();
        assert_eq!(ranks, vec![1, 2, 3, 4]);
    }

    #[test]
    fn duplicate_items_rejected_at_construction() {
        let items = vec![item("A"), item("B"), item("A")];
        assert!(matches!(
            Ranking::new(items),
            Err(DomainError::DuplicateItem { .. })
        ));
    }

    #[test]
    fn identifiers_reject_whitespace_and_empty() {
        assert!(ItemId::new("a b").is_err());
        assert!(ItemId::new("").is_err());
        assert!(ItemId::new("ok_id-1.x").is_ok());
    }

    #[test]
    fn relevance_table_rejects_out_of_range_and_missing() {
        let mut rel = RelevanceTable::new();
        assert!(rel.insert(query("q"), item("A"), 1.5).is_err());
        rel.insert(query("q"), item("A"), 0.5).unwrap();
        assert_eq!(rel.get(&query("q"), &item("A")).unwrap(), 0.5);
        assert!(matches!(
            rel.get(&query("q"), &item("B")),
            Err(DomainError::MissingRelevance { .. })
        ));
    }

    #[test]
    fn ranking_quality_empty_is_zero() {
        let rel = RelevanceTable::new();
        let r = Ranking::new(vec![]).unwrap();
        let q = ranking_quality(&r, &RankWeights::Dcg, &rel, &query("q")).unwrap();
        assert_eq!(q, 0.0);
    }

    #[test]
    fn ranking_quality_single_term() {
        let mut rel = RelevanceTable::new();
        rel.insert(query("q"), item("A"), 0.5).unwrap();
        let r = ranking(&["A"]);
        let q = ranking_quality(&r, &RankWeights::Dcg, &rel, &query("q")).unwrap();
        assert!((q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ranking_quality_two_term_dcg() {
        // Hand evaluation: 0.9·1 + 0.4·(1/log2(3)) = 0.9 + 0.4·0.6309297535714574.
        let mut rel = RelevanceTable::new();
        rel.insert(query("q"), item("A"), 0.9).unwrap();
        rel.insert(query("q"), item("B"), 0.4).unwrap();
        let r = ranking(&["A", "B"]);
        let q = ranking_quality(&r, &RankWeights::Dcg, &rel, &query("q")).unwrap();
        assert!((q - 1.152_371_901_428_583).abs() < 1e-5);
    }

    #[test]
    fn ranking_quality_missing_relevance_errors() {
        let mut rel = RelevanceTable::new();
        rel.insert(query("q"), item("A"), 0.9).unwrap();
        let r = ranking(&["A", "B"]);
        assert!(matches!(
            ranking_quality(&r, &RankWeights::Dcg, &rel, &query("q")),
            Err(DomainError::MissingRelevance { .. })
        ));
    }

    #[test]
    fn ranking_quality_is_linear_in_each_relevance() {
        let q = query("q");
        let mut rel = RelevanceTable::new();
        rel.insert(q.clone(), item("A"), 0.3).unwrap();
        rel.insert(q.clone(), item("B"), 0.2).unwrap();
        let r = ranking(&["A", "B"]);
        let before = ranking_quality(&r, &RankWeights::Dcg, &rel, &q).unwrap();
        let mut doubled = rel.clone();
        doubled.insert(q.clone(), item("B"), 0.4).unwrap();
        let after = ranking_quality(&r, &RankWeights::Dcg, &doubled, &q).unwrap();
        let lambda2 = RankWeights::Dcg.weight(2);
        assert!((after - before - lambda2 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn model_quality_degenerate_policy_equals_ranking_quality_bitwise() {
        let q = query("q");
        let mut rel = RelevanceTable::new();
        rel.insert(q.clone(), item("A"), 0.9).unwrap();
        rel.insert(q.clone(), item("B"), 0.4).unwrap();
        let r = ranking(&["A", "B"]);
        let mut policy = LoggingPolicy::new();
        policy.set_deterministic(q.clone(), r.clone()).unwrap();
        let mq = model_quality(&policy, &[(q.clone(), 1.0)], &RankWeights::Dcg, &rel).unwrap();
        let rq = ranking_quality(&r, &RankWeights::Dcg, &rel, &q).unwrap();
        // Same arithmetic path (times 1.0 twice), so bitwise equality holds.
        assert_eq!(mq.to_bits(), (1.0 * 1.0 * rq).to_bits());
    }

    #[test]
    fn model_quality_midpoint_of_two_rankings() {
        let q = query("q");
        let mut rel = RelevanceTable::new();
        rel.insert(q.clone(), item("A"), 1.0).unwrap();
        rel.insert(q.clone(), item("B"), 0.5).unwrap();
        let mut policy = LoggingPolicy::new();
        policy
            .set_query(
                q.clone(),
                vec![(ranking(&["A"]), 0.5), (ranking(&["B"]), 0.5)],
            )
            .unwrap();
        // Qualities are 1.0 and 0.5; the equiprobable mixture is 0.75.
        let mq = model_quality(&policy, &[(q, 1.0)], &RankWeights::Dcg, &rel).unwrap();
        assert!((mq - 0.75).abs() < 1e-15);
    }

    #[test]
    fn model_quality_matches_brute_force_enumeration() {
        // Two queries, two rankings each; enumerate the four weighted terms
        // independently and compare.
        let (qa, qb) = (query("qa"), query("qb"));
        let mut rel = RelevanceTable::new();
        for (q, i, r) in [
            (&qa, "A", 0.9),
            (&qa, "B", 0.2),
            (&qb, "A", 0.4),
            (&qb, "B", 0.7),
        ] {
            rel.insert(q.clone(), item(i), r).unwrap();
        }
        let mut policy = LoggingPolicy::new();
        policy
            .set_query(
                qa.clone(),
                vec![(ranking(&["A", "B"]), 0.25), (ranking(&["B", "A"]), 0.75)],
            )
            .unwrap();
        policy
            .set_query(
                qb.clone(),
                vec![(ranking(&["A", "B"]), 0.6), (ranking(&["B", "A"]), 0.4)],
            )
            .unwrap();
        let queries = [(qa.clone(), 0.3), (qb.clone(), 0.7)];
        let w = RankWeights::Dcg;
        let l2 = w.weight(2);
        let brute = 0.3 * (0.25 * (0.9 + 0.2 * l2) + 0.75 * (0.2 + 0.9 * l2))
            + 0.7 * (0.6 * (0.4 + 0.7 * l2) + 0.4 * (0.7 + 0.4 * l2));
        let mq = model_quality(&policy, &queries, &w, &rel).unwrap();
        assert!((mq - brute).abs() < 1e-12);
    }

    #[test]
    fn validate_scenario_empty_report_for_valid_input() {
        let q = query("q");
        let mut rel = RelevanceTable::new();
        rel.insert(q.clone(), item("A"), 0.5).unwrap();
        let mut policy = LoggingPolicy::new();
        policy.set_deterministic(q, ranking(&["A"])).unwrap();
        assert!(validate_scenario(&rel, &policy).is_valid());
    }

    #[test]
    fn validate_scenario_flags_bad_probability_sum() {
        // Bypass the checked constructor by building the map directly.
        let q = query("q");
        let mut rel = RelevanceTable::new();
        rel.insert(q.clone(), item("A"), 0.5).unwrap();
        let mut policy = LoggingPolicy::new();
        policy
            .rankings
            .insert(q.clone(), vec![(Arc::new(ranking(&["A"])), 0.9)]);
        let report = validate_scenario(&rel, &policy);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            &report.violations[0],
            Violation::PolicyProbabilitySum { query, .. } if *query == q
        ));
    }

    #[test]
    fn validate_scenario_flags_missing_relevance() {
        let q = query("q");
        let rel = RelevanceTable::new();
        let mut policy = LoggingPolicy::new();
        policy.set_deterministic(q.clone(), ranking(&["A"])).unwrap();
        let report = validate_scenario(&rel, &policy);
        assert_eq!(
            report.violations,
            vec![Violation::MissingRelevance {
                query: q,
                item: item("A")
            }]
        );
    }

    #[test]
    fn context_keys_quantize_continuous_values() {
        let a = DisplayContext::ExposureProbability(0.7);
        let b = DisplayContext::ExposureProbability(0.7 + 1e-15);
        assert_eq!(a.key(), b.key());
        let c = DisplayContext::ExposureProbability(0.7001);
        assert_ne!(a.key(), c.key());
        // Tags never collide even at equal numeric values.
        assert_ne!(
            DisplayContext::ExposureProbability(0.5).key(),
            DisplayContext::ChoiceSetMass(0.5).key()
        );
    }

    #[test]
    fn impression_click_lookup_is_positional() {
        let q = query("q");
        let r = Arc::new(ranking(&["A", "B"]));
        let imp = Impression::new(q, 0, r, vec![true, false]).unwrap();
        assert_eq!(imp.click(&item("A")), Some(true));
        assert_eq!(imp.click(&item("B")), Some(false));
        assert_eq!(imp.click(&item("C")), None);
        assert_eq!(imp.click_count(), 1);
    }

    #[test]
    fn click_log_enforces_contiguous_indices_and_query() {
        let q = query("q");
        let r = Arc::new(ranking(&["A"]));
        let ok = ClickLog::new(
            q.clone(),
            vec![
                Impression::new(q.clone(), 0, r.clone(), vec![false]).unwrap(),
                Impression::new(q.clone(), 1, r.clone(), vec![true]).unwrap(),
            ],
        );
        assert!(ok.is_ok());
        let bad_index = ClickLog::new(
            q.clone(),
            vec![Impression::new(q.clone(), 3, r.clone(), vec![false]).unwrap()],
        );
        assert!(matches!(
            bad_index,
            Err(DomainError::BadImpressionIndex { .. })
        ));
        let other = query("other");
        let bad_query = ClickLog::new(
            q,
            vec![Impression::new(other, 0, r, vec![false]).unwrap()],
        );
        assert!(matches!(bad_query, Err(DomainError::QueryMismatch { .. })));
    }
}
