//! Generative click-behavior models.
//!
//! Three user models produce clicks on a displayed ranking:
//!
//! * [`AffineBehavior`] — an independent click per rank with probability
//!   `alpha_k * R + beta_k` (position bias plus trust bias).
//! * Cascade — the user scans top-down and clicks at most once; the marginal
//!   click probability of the item at rank `k` is `R * prod_{j<k}(1 - R_j)`.
//! * Plackett-Luce — the user clicks exactly one item, chosen with
//!   probability proportional to relevance.
//!
//! Every model exposes its exact marginal click probability, impression
//! sampling, and the display context of an item (which, by construction,
//! never depends on the item's own relevance).

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{
    DisplayContext, DomainError, Impression, ItemId, QueryId, Ranking, RelevanceTable,
};
use crate::numeric::least_squares_line;

/// Default residual tolerance for [`affinity_check`] on exact-probability
/// inputs.
pub const DEFAULT_AFFINITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BehaviorError {
    #[error(transparent)]
    Domain(#[from] DomainError),

    #[error("total relevance of the choice set is zero")]
    DegenerateChoiceSet,

    #[error("rank {rank} not covered: behavior declares {available} ranks")]
    RankNotCovered { rank: usize, available: usize },

    #[error("alpha[{index}] = {alpha}, beta[{index}] = {beta} violate 0 <= alpha, beta and alpha + beta <= 1")]
    InvalidAffineParameters { index: usize, alpha: f64, beta: f64 },

    #[error("alpha has {alphas} entries but beta has {betas}")]
    ParameterLengthMismatch { alphas: usize, betas: usize },

    #[error("affinity check needs at least two points with two distinct relevances")]
    InsufficientPoints,
}

// ── Affine behavior ─────────────────────────────────────────────────────

/// Per-rank `(alpha_k, beta_k)` with `alpha_k, beta_k in [0, 1]` and
/// `alpha_k + beta_k <= 1`, so click probabilities stay in [0, 1] for any
/// relevance in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineBehavior {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl AffineBehavior {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self, BehaviorError> {
        if alpha.len() != beta.len() {
            return Err(BehaviorError::ParameterLengthMismatch {
                alphas: alpha.len(),
                betas: beta.len(),
            });
        }
        for (index, (&a, &b)) in alpha.iter().zip(&beta).enumerate() {
            let valid = (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && a + b <= 1.0;
            if !valid {
                return Err(BehaviorError::InvalidAffineParameters {
                    index,
                    alpha: a,
                    beta: b,
                });
            }
        }
        Ok(Self { alpha, beta })
    }

    /// Same `(alpha, beta)` at every rank up to `ranks`.
    pub fn uniform(ranks: usize, alpha: f64, beta: f64) -> Result<Self, BehaviorError> {
        Self::new(vec![alpha; ranks], vec![beta; ranks])
    }

    #[must_use]
    pub fn ranks(&self) -> usize {
        self.alpha.len()
    }

    #[must_use]
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    #[must_use]
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    fn at(&self, rank: usize) -> Result<(f64, f64), BehaviorError> {
        if rank == 0 || rank > self.alpha.len() {
            return Err(BehaviorError::RankNotCovered {
                rank,
                available: self.alpha.len(),
            });
        }
        Ok((self.alpha[rank - 1], self.beta[rank - 1]))
    }
}

// ── Behavior model ──────────────────────────────────────────────────────

/// Tagged union of the supported click-behavior models.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum BehaviorModel {
    Affine(AffineBehavior),
    Cascade,
    PlackettLuce,
}

impl BehaviorModel {
    /// Exact marginal click probability of `item` in the displayed `ranking`.
    pub fn click_prob(
        &self,
        rel: &RelevanceTable,
        query: &QueryId,
        ranking: &Ranking,
        item: &ItemId,
    ) -> Result<f64, BehaviorError> {
        let rank = ranking.rank_of(item)?;
        let relevance = rel.get(query, item)?;
        match self {
            Self::Affine(affine) => {
                let (alpha, beta) = affine.at(rank)?;
                Ok(alpha * relevance + beta)
            }
            Self::Cascade => {
                let kappa = cascade_exposure(rel, query, ranking, rank)?;
                Ok(kappa * relevance)
            }
            Self::PlackettLuce => {
                let total = total_relevance(rel, query, ranking)?;
                if total <= 0.0 {
                    return Err(BehaviorError::DegenerateChoiceSet);
                }
                Ok(relevance / total)
            }
        }
    }

    /// Sample one impression of `ranking` for `query`.
    ///
    /// The draw consumes only the supplied stream, so identically seeded
    /// streams reproduce identical impressions.
    pub fn sample_impression(
        &self,
        rel: &RelevanceTable,
        query: &QueryId,
        ranking: &Arc<Ranking>,
        index: u64,
        rng: &mut impl Rng,
    ) -> Result<Impression, BehaviorError> {
        let n = ranking.len();
        let mut clicks = vec![false; n];
        match self {
            Self::Affine(affine) => {
                for (j, item) in ranking.items().iter().enumerate() {
                    let (alpha, beta) = affine.at(j + 1)?;
                    let p = alpha * rel.get(query, item)? + beta;
                    clicks[j] = rng.random::<f64>() < p;
                }
            }
            Self::Cascade => {
                for (j, item) in ranking.items().iter().enumerate() {
                    if rng.random::<f64>() < rel.get(query, item)? {
                        clicks[j] = true;
                        break;
                    }
                }
            }
            Self::PlackettLuce => {
                let total = total_relevance(rel, query, ranking)?;
                if total <= 0.0 {
                    return Err(BehaviorError::DegenerateChoiceSet);
                }
                let draw = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = None;
                for (j, item) in ranking.items().iter().enumerate() {
                    let r = rel.get(query, item)?;
                    if r > 0.0 {
                        acc += r;
                        chosen = Some(j);
                        if draw < acc {
                            break;
                        }
                    }
                }
                // `chosen` is always set: total > 0 implies some r > 0.
                clicks[chosen.expect("positive total relevance")] = true;
            }
        }
        Ok(Impression::new(query.clone(), index, Arc::clone(ranking), clicks)?)
    }

    /// Display context of `item` in `ranking`: position for the affine
    /// model, exposure probability for the cascade, choice-set mass for
    /// Plackett-Luce. Never a function of the item's own relevance.
    pub fn exposure_context(
        &self,
        rel: &RelevanceTable,
        query: &QueryId,
        ranking: &Ranking,
        item: &ItemId,
    ) -> Result<DisplayContext, BehaviorError> {
        let rank = ranking.rank_of(item)?;
        match self {
            Self::Affine(_) => Ok(DisplayContext::Position(rank)),
            Self::Cascade => Ok(DisplayContext::ExposureProbability(cascade_exposure(
                rel, query, ranking, rank,
            )?)),
            Self::PlackettLuce => {
                let mut mass = 0.0;
                for other in ranking.items() {
                    if other != item {
                        mass += rel.get(query, other)?;
                    }
                }
                Ok(DisplayContext::ChoiceSetMass(mass))
            }
        }
    }
}

/// Probability that the cascade scan reaches `rank`: the product of the
/// non-click probabilities of all earlier items.
fn cascade_exposure(
    rel: &RelevanceTable,
    query: &QueryId,
    ranking: &Ranking,
    rank: usize,
) -> Result<f64, BehaviorError> {
    let mut kappa = 1.0;
    for item in &ranking.items()[..rank - 1] {
        kappa *= 1.0 - rel.get(query, item)?;
    }
    Ok(kappa)
}

fn total_relevance(
    rel: &RelevanceTable,
    query: &QueryId,
    ranking: &Ranking,
) -> Result<f64, BehaviorError> {
    let mut total = 0.0;
    for item in ranking.items() {
        total += rel.get(query, item)?;
    }
    Ok(total)
}

// ── Affinity check ──────────────────────────────────────────────────────

/// Result of fitting a line through `(relevance, click probability)` points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffinityCheck {
    /// True iff every point lies on the fitted line within the tolerance.
    pub affine: bool,
    /// Fitted slope.
    pub alpha: f64,
    /// Fitted intercept.
    pub beta: f64,
    /// Largest absolute deviation of a point from the line.
    pub max_residual: f64,
}

/// Least-squares test of whether click probability is an affine function of
/// relevance: fits `P ≈ alpha·R + beta` and reports the worst residual.
pub fn affinity_check(
    points: &[(f64, f64)],
    tolerance: f64,
) -> Result<AffinityCheck, BehaviorError> {
    let (alpha, beta) = least_squares_line(points).ok_or(BehaviorError::InsufficientPoints)?;
    let max_residual = points
        .iter()
        .map(|&(r, p)| (p - (alpha * r + beta)).abs())
        .fold(0.0, f64::max);
    Ok(AffinityCheck {
        affine: max_residual <= tolerance,
        alpha,
        beta,
        max_residual,
    })
}
