//! Classical stepdown multiple-testing procedure with k-FWER and FDP
//! threshold sequences — the baselines the penalized methods are compared
//! against.

use crate::error::{Result, SlopeError};
use crate::float::{fp_usize, Scalar};
use crate::special::cdf_raw;

/// Non-negative, non-decreasing per-rank significance thresholds
/// α₁ ≤ … ≤ α_m.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSequence<T: Scalar> {
    alphas: Vec<T>,
}

impl<T: Scalar> ThresholdSequence<T> {
    pub fn new(alphas: Vec<T>) -> Result<Self> {
        for (i, &a) in alphas.iter().enumerate() {
            if !a.is_finite() || a < T::zero() {
                return Err(SlopeError::InvalidSequence(format!(
                    "threshold {a} at index {i} is negative or non-finite"
                )));
            }
            if i > 0 && a < alphas[i - 1] {
                return Err(SlopeError::InvalidSequence(format!(
                    "thresholds decrease at index {i}"
                )));
            }
        }
        Ok(Self { alphas })
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// k-FWER thresholds: α_i = kα/m for i ≤ k and kα/(m+k−i) beyond.
pub fn kfwer_thresholds<T: Scalar>(m: usize, k: usize, alpha: T) -> Result<ThresholdSequence<T>> {
    if m == 0 || k == 0 || k > m {
        return Err(SlopeError::Domain(format!(
            "need 1 <= k <= m, got k={k}, m={m}"
        )));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(SlopeError::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let ka = fp_usize::<T>(k) * alpha;
    let alphas = (1..=m)
        .map(|i| {
            let denom = if i <= k { m } else { m + k - i };
            ka / fp_usize(denom)
        })
        .collect();
    ThresholdSequence::new(alphas)
}

/// FDP thresholds: α_i = (⌊γi⌋+1)α/(m+⌊γi⌋+1−i).
pub fn fdp_thresholds<T: Scalar>(m: usize, gamma: T, alpha: T) -> Result<ThresholdSequence<T>> {
    if m == 0 {
        return Err(SlopeError::Domain("m must be positive".into()));
    }
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(SlopeError::Domain(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(SlopeError::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let alphas = (1..=m)
        .map(|i| {
            let fl = (gamma * fp_usize(i)).floor();
            (fl + T::one()) * alpha / (fp_usize::<T>(m) + fl + T::one() - fp_usize(i))
        })
        .collect();
    ThresholdSequence::new(alphas)
}

/// Runs the stepdown rule: sort p-values ascending, find the largest prefix
/// with p_(j) ≤ α_j throughout, and reject the hypotheses owning it.
///
/// Ties are all-or-nothing automatically: the thresholds are non-decreasing,
/// so if one member of a group of equal p-values passes at its rank, every
/// later member passes too, and the boundary can never split the group. The
/// outcome therefore does not depend on how ties were ordered.
pub fn stepdown_select<T: Scalar>(
    pvalues: &[T],
    thresholds: &ThresholdSequence<T>,
) -> Result<Vec<usize>> {
    if pvalues.len() != thresholds.len() {
        return Err(SlopeError::DimensionMismatch {
            expected: thresholds.len(),
            found: pvalues.len(),
        });
    }
    for (i, &p) in pvalues.iter().enumerate() {
        if !p.is_finite() || p < T::zero() || p > T::one() {
            return Err(SlopeError::DomainAt {
                index: i,
                reason: format!("p-value {p} outside [0, 1]"),
            });
        }
    }
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        pvalues[a]
            .partial_cmp(&pvalues[b])
            .expect("p-values checked finite")
            .then(a.cmp(&b))
    });

    let alphas = thresholds.alphas();
    let mut r = 0;
    for j in 0..m {
        if pvalues[order[j]] <= alphas[j] {
            r = j + 1;
        } else {
            break;
        }
    }
    debug_assert!(
        r == 0 || r == m || pvalues[order[r]] != pvalues[order[r - 1]],
        "non-decreasing thresholds cannot split a tie group"
    );
    let mut rejected: Vec<usize> = order[..r].to_vec();
    rejected.sort_unstable();
    Ok(rejected)
}

/// Two-sided normal p-value 2(1 − Φ(|z|/sd)) for a statistic with known
/// noise scale.
pub fn two_sided_p<T: Scalar>(z: T, noise_sd: T) -> Result<T> {
    if !noise_sd.is_finite() || noise_sd <= T::zero() {
        return Err(SlopeError::Domain(format!(
            "noise scale must be positive, got {noise_sd}"
        )));
    }
    if !z.is_finite() {
        return Err(SlopeError::Domain(format!("statistic must be finite, got {z}")));
    }
    let two = fp_usize::<T>(2);
    Ok((two * (T::one() - cdf_raw((z / noise_sd).abs()))).min(T::one()))
}
