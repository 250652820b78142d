//! Per-replication selection scoring and Monte Carlo aggregation.

use crate::error::{Result, SlopeError};
use crate::float::{fp_usize, Scalar};

/// Counts from one replication: V false selections out of R total, against
/// a true support of size t.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionOutcome {
    pub false_selections: usize,
    pub selections: usize,
    pub true_positives: usize,
    pub true_support_size: usize,
}

impl SelectionOutcome {
    pub fn new(
        false_selections: usize,
        selections: usize,
        true_positives: usize,
        true_support_size: usize,
    ) -> Result<Self> {
        if false_selections + true_positives != selections {
            return Err(SlopeError::Domain(format!(
                "inconsistent counts: V={false_selections} + TP={true_positives} != R={selections}"
            )));
        }
        if true_positives > true_support_size {
            return Err(SlopeError::Domain(format!(
                "true positives {true_positives} exceed support size {true_support_size}"
            )));
        }
        Ok(Self {
            false_selections,
            selections,
            true_positives,
            true_support_size,
        })
    }
}

/// Scores a selected index set against the true support. Both inputs are
/// treated as sets; `m` bounds the valid index range.
pub fn score_selection(
    selected: &[usize],
    true_support: &[usize],
    m: usize,
) -> Result<SelectionOutcome> {
    let mut truth = vec![false; m];
    for &i in true_support {
        if i >= m {
            return Err(SlopeError::DomainAt {
                index: i,
                reason: format!("support index out of range (m={m})"),
            });
        }
        truth[i] = true;
    }
    let mut seen = vec![false; m];
    let mut selections = 0;
    let mut true_positives = 0;
    for &i in selected {
        if i >= m {
            return Err(SlopeError::DomainAt {
                index: i,
                reason: format!("selected index out of range (m={m})"),
            });
        }
        if seen[i] {
            continue;
        }
        seen[i] = true;
        selections += 1;
        if truth[i] {
            true_positives += 1;
        }
    }
    let t = truth.iter().filter(|&&b| b).count();
    SelectionOutcome::new(selections - true_positives, selections, true_positives, t)
}

/// FDP = V / max(R, 1).
pub fn fdp<T: Scalar>(outcome: &SelectionOutcome) -> T {
    fp_usize::<T>(outcome.false_selections) / fp_usize(outcome.selections.max(1))
}

/// Aggregated estimates over a batch of replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport<T: Scalar> {
    /// Mean FDP.
    pub fdr_hat: T,
    /// Fraction of replications with V ≥ k.
    pub kfwer_hat: T,
    /// Fraction of replications with FDP > γ (strict).
    pub prob_fdp_exceed_hat: T,
    /// Mean fraction of the true support recovered.
    pub power_hat: T,
    pub replications: usize,
    pub config_echo: String,
    pub seed: u64,
}

/// Aggregates outcomes into FDR̂, k-FWER̂, exceedance probability, and power.
///
/// Panics if the sample-level Markov sandwich
/// (fdr − γ)/(1 − γ) ≤ P̂(FDP > γ) ≤ fdr/γ is violated, since both bounds
/// hold exactly for any outcome list and a violation means the aggregation
/// itself is broken.
pub fn aggregate<T: Scalar>(
    outcomes: &[SelectionOutcome],
    gamma: T,
    k: usize,
) -> Result<ExperimentReport<T>> {
    if outcomes.is_empty() {
        return Err(SlopeError::Domain("cannot aggregate zero replications".into()));
    }
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(SlopeError::Domain(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    if k == 0 {
        return Err(SlopeError::Domain("k must be at least 1".into()));
    }
    if let Some(bad) = outcomes.iter().position(|o| o.true_support_size == 0) {
        return Err(SlopeError::DomainAt {
            index: bad,
            reason: "power undefined for an empty true support".into(),
        });
    }

    let n = fp_usize::<T>(outcomes.len());
    let mut fdr = T::zero();
    let mut kfwer = T::zero();
    let mut exceed = T::zero();
    let mut power = T::zero();
    for o in outcomes {
        let f = fdp::<T>(o);
        fdr += f;
        if f > gamma {
            exceed += T::one();
        }
        if o.false_selections >= k {
            kfwer += T::one();
        }
        power += fp_usize::<T>(o.true_positives) / fp_usize(o.true_support_size);
    }
    fdr /= n;
    kfwer /= n;
    exceed /= n;
    power /= n;

    let slack = T::epsilon() * fp_usize::<T>(16);
    assert!(
        exceed <= fdr / gamma + slack,
        "Markov bound violated: P(FDP>gamma)={exceed} > FDR/gamma={}",
        fdr / gamma
    );
    assert!(
        (fdr - gamma) / (T::one() - gamma) <= exceed + slack,
        "reverse Markov bound violated: (FDR-gamma)/(1-gamma)={} > {exceed}",
        (fdr - gamma) / (T::one() - gamma)
    );

    Ok(ExperimentReport {
        fdr_hat: fdr,
        kfwer_hat: kfwer,
        prob_fdp_exceed_hat: exceed,
        power_hat: power,
        replications: outcomes.len(),
        config_echo: String::new(),
        seed: 0,
    })
}
