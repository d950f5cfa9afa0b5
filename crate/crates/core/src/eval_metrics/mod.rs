//! Agreement and aggregation metrics for Likert ratings.
//!
//! Kappa statistics are generic over [`Scalar`] and exact over
//! `Ratio<i64>`; rank correlation needs [`Real`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scalar::{Real, Scalar};

pub mod report;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("rating vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("metric needs at least {0} observation(s)")]
    TooFew(usize),
    #[error("row {row} has {got} ratings, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("Fleiss' kappa needs at least two raters per item, got {0}")]
    TooFewRaters(usize),
    #[error("rank correlation is undefined for a constant vector")]
    Constant,
    #[error("rating {0} outside 1-5")]
    OutOfRange(u8),
}

pub type Result<T, E = MetricError> = std::result::Result<T, E>;

/// Ratings on the 1-5 scale for one iteration, in questionnaire order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingVector {
    ratings: Vec<u8>,
    pub iteration: usize,
}

impl RatingVector {
    pub fn new(ratings: Vec<u8>, iteration: usize) -> Result<Self> {
        if let Some(&bad) = ratings.iter().find(|r| !(1..=5).contains(*r)) {
            return Err(MetricError::OutOfRange(bad));
        }
        Ok(Self { ratings, iteration })
    }

    pub fn ratings(&self) -> &[u8] {
        &self.ratings
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Negative,
    Neutral,
    Positive,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Negative, Polarity::Neutral, Polarity::Positive];
}

/// 1-2 negative, 3 neutral, 4-5 positive.
pub fn to_polarity(rating: u8) -> Result<Polarity> {
    match rating {
        1 | 2 => Ok(Polarity::Negative),
        3 => Ok(Polarity::Neutral),
        4 | 5 => Ok(Polarity::Positive),
        other => Err(MetricError::OutOfRange(other)),
    }
}

pub fn polarities(ratings: &[u8]) -> Result<Vec<Polarity>> {
    ratings.iter().map(|&r| to_polarity(r)).collect()
}

/// Cohen's kappa between two raters over the categories either one used.
/// Perfect observed agreement yields exactly 1, including the degenerate
/// case where both raters use a single category.
pub fn cohen_kappa<T: Scalar, L: Ord + Copy>(a: &[L], b: &[L]) -> Result<T> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(MetricError::TooFew(1));
    }
    let n = a.len();
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    if agree == n {
        return Ok(T::one());
    }
    let mut marginals: BTreeMap<L, (usize, usize)> = BTreeMap::new();
    for &x in a {
        marginals.entry(x).or_default().0 += 1;
    }
    for &y in b {
        marginals.entry(y).or_default().1 += 1;
    }
    let chance_pairs: usize = marginals.values().map(|(ca, cb)| ca * cb).sum();
    let n_t = T::from_count(n);
    let p_o = T::from_count(agree) / n_t;
    let p_e = T::from_count(chance_pairs) / (n_t * n_t);
    Ok((p_o - p_e) / (T::one() - p_e))
}

/// How per-iteration authenticity is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthenticityMode {
    /// One Cohen's kappa across the iteration's question pairs.
    #[default]
    Kappa,
    /// Mean of per-question exact agreement (1 if equal, else 0).
    PerQuestion,
}

/// Agreement between the agent's and the humans' ratings for one iteration.
pub fn authenticity<T: Scalar>(agent: &[u8], human: &[u8], mode: AuthenticityMode) -> Result<T> {
    match mode {
        AuthenticityMode::Kappa => cohen_kappa(agent, human),
        AuthenticityMode::PerQuestion => {
            if agent.len() != human.len() {
                return Err(MetricError::LengthMismatch {
                    left: agent.len(),
                    right: human.len(),
                });
            }
            if agent.is_empty() {
                return Err(MetricError::TooFew(1));
            }
            let equal = agent.iter().zip(human).filter(|(a, h)| a == h).count();
            Ok(T::from_count(equal) / T::from_count(agent.len()))
        }
    }
}

/// Fleiss' kappa from an items-by-categories count matrix. Every row must
/// sum to the same number of raters, at least two.
pub fn fleiss_kappa<T: Scalar>(counts: &[Vec<usize>]) -> Result<T> {
    let first = counts.first().ok_or(MetricError::TooFew(1))?;
    let raters: usize = first.iter().sum();
    if raters < 2 {
        return Err(MetricError::TooFewRaters(raters));
    }
    let categories = first.len();
    for (row, r) in counts.iter().enumerate() {
        if r.len() != categories {
            return Err(MetricError::Ragged {
                row,
                got: r.len(),
                expected: categories,
            });
        }
        let sum: usize = r.iter().sum();
        if sum != raters {
            return Err(MetricError::Ragged {
                row,
                got: sum,
                expected: raters,
            });
        }
    }
    let items = T::from_count(counts.len());
    let n = T::from_count(raters);
    let pair_norm = n * (n - T::one());

    let mut p_bar = T::zero();
    for row in counts {
        let sq: usize = row.iter().map(|c| c * c).sum();
        p_bar = p_bar + (T::from_count(sq) - n) / pair_norm;
    }
    p_bar = p_bar / items;

    let mut p_e = T::zero();
    for j in 0..categories {
        let col: usize = counts.iter().map(|r| r[j]).sum();
        let p_j = T::from_count(col) / (items * n);
        p_e = p_e + p_j * p_j;
    }
    if p_e == T::one() {
        return Ok(T::one());
    }
    Ok((p_bar - p_e) / (T::one() - p_e))
}

/// Builds the count matrix for [`fleiss_kappa`] from per-item rating lists.
pub fn category_counts<L: PartialEq>(items: &[Vec<L>], categories: &[L]) -> Vec<Vec<usize>> {
    items
        .iter()
        .map(|ratings| {
            categories
                .iter()
                .map(|c| ratings.iter().filter(|r| *r == c).count())
                .collect()
        })
        .collect()
}

/// Average (fractional) ranks, 1-based; ties share the mean of their positions.
pub fn average_ranks<T: Real>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1..=end share their mean.
        let mean = T::from_count(start + 1 + end) / (T::one() + T::one());
        for &idx in &order[start..end] {
            ranks[idx] = mean;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of average ranks.
pub fn spearman_rho<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(MetricError::TooFew(2));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = T::from_count(a.len());
    let mean_a = ra.iter().fold(T::zero(), |s, &x| s + x) / n;
    let mean_b = rb.iter().fold(T::zero(), |s, &x| s + x) / n;
    let (mut cov, mut va, mut vb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov = cov + dx * dy;
        va = va + dx * dx;
        vb = vb + dy * dy;
    }
    if va == T::zero() || vb == T::zero() {
        return Err(MetricError::Constant);
    }
    Ok(cov / (va * vb).sqrt())
}

/// Mean of all defined pairwise Spearman correlations between raters.
/// Pairs involving a constant rater are skipped; `None` if no pair is defined.
pub fn mean_pairwise_spearman<T: Real>(raters: &[Vec<T>]) -> Result<Option<T>> {
    let mut sum = T::zero();
    let mut defined = 0usize;
    for i in 0..raters.len() {
        for j in i + 1..raters.len() {
            match spearman_rho(&raters[i], &raters[j]) {
                Ok(rho) => {
                    sum = sum + rho;
                    defined += 1;
                }
                Err(MetricError::Constant) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok((defined > 0).then(|| sum / T::from_count(defined)))
}

/// Panel aggregation by mode. Ties between modes go to the one closest to
/// the panel median, then to the lower rating.
pub fn majority_rating(ratings: &[u8]) -> Result<u8> {
    if ratings.is_empty() {
        return Err(MetricError::TooFew(1));
    }
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for &r in ratings {
        *counts.entry(r).or_default() += 1;
    }
    let top = *counts.values().max().expect("non-empty");
    let modes: Vec<u8> = counts.iter().filter(|(_, &c)| c == top).map(|(&r, _)| r).collect();
    if modes.len() == 1 {
        return Ok(modes[0]);
    }
    let mut sorted = ratings.to_vec();
    sorted.sort_unstable();
    let len = sorted.len();
    // Twice the median, to stay in integers for even-sized panels.
    let median2 = if len % 2 == 1 {
        2 * i32::from(sorted[len / 2])
    } else {
        i32::from(sorted[len / 2 - 1]) + i32::from(sorted[len / 2])
    };
    Ok(*modes
        .iter()
        .min_by_key(|&&m| ((2 * i32::from(m) - median2).abs(), m))
        .expect("at least one mode"))
}
