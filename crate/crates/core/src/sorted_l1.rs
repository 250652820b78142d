//! The sorted-ℓ1 norm, its proximal operator, and the dual-ball diagnostics
//! used for stopping.
//!
//! The penalty pairs the i-th largest |coefficient| with the i-th weight of a
//! non-negative, non-increasing sequence. Its prox is computed exactly: sort
//! magnitudes, shrink by the weights, project onto the non-increasing cone
//! with a stack-based pool-adjacent-violators pass, clip at zero, and undo
//! the sort. Outputs therefore contain exact zeros; the selected support
//! needs no thresholding.

use crate::error::{Result, SlopeError};
use crate::float::{fp_usize, Scalar};
use std::io::Write;

/// How a weight sequence was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// FDR-calibrated weights.
    Bh,
    /// k-FWER-calibrated weights.
    KFwer,
    /// FDP-exceedance-calibrated weights.
    Fdp,
    /// A base sequence adjusted for non-orthogonal designs.
    Corrected,
    Custom,
}

/// Non-negative, non-increasing penalty weights λ₁ ≥ … ≥ λ_m ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSequence<T: Scalar> {
    weights: Vec<T>,
    provenance: Provenance,
}

impl<T: Scalar> LambdaSequence<T> {
    /// Validates and wraps a weight vector.
    pub fn new(weights: Vec<T>, provenance: Provenance) -> Result<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < T::zero() {
                return Err(SlopeError::InvalidSequence(format!(
                    "weight {w} at index {i} is negative or non-finite"
                )));
            }
            if i > 0 && w > weights[i - 1] {
                return Err(SlopeError::InvalidSequence(format!(
                    "weights increase at index {i}: {} -> {w}",
                    weights[i - 1]
                )));
            }
        }
        Ok(Self { weights, provenance })
    }

    /// Constant sequence; with this choice the penalty reduces to the plain
    /// ℓ1 norm scaled by `value`.
    pub fn constant(value: T, len: usize) -> Result<Self> {
        Self::new(vec![value; len], Provenance::Custom)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Multiplies every weight by a non-negative factor, preserving provenance.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        if !factor.is_finite() || factor < T::zero() {
            return Err(SlopeError::Domain(format!(
                "scale factor must be finite and non-negative, got {factor}"
            )));
        }
        Ok(Self {
            weights: self.weights.iter().map(|&w| w * factor).collect(),
            provenance: self.provenance,
        })
    }

    /// Writes `index,weight` rows for inspection.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,weight")?;
        for (i, w) in self.weights.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, w)?;
        }
        Ok(())
    }
}

fn check_finite<T: Scalar>(v: &[T]) -> Result<()> {
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(SlopeError::DomainAt {
                index: i,
                reason: format!("non-finite entry {x}"),
            });
        }
    }
    Ok(())
}

fn check_len<T: Scalar>(v: &[T], lambda: &LambdaSequence<T>) -> Result<()> {
    if v.len() != lambda.len() {
        return Err(SlopeError::DimensionMismatch {
            expected: lambda.len(),
            found: v.len(),
        });
    }
    Ok(())
}

/// Indices of `v` sorted by decreasing magnitude, stable in the original
/// index order on ties.
fn magnitude_order<T: Scalar>(v: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| {
        v[b].abs()
            .partial_cmp(&v[a].abs())
            .expect("entries checked finite")
            .then(a.cmp(&b))
    });
    order
}

/// J_λ(β) = Σ λ_i |β|_(i).
pub fn sorted_l1_norm<T: Scalar>(beta: &[T], lambda: &LambdaSequence<T>) -> Result<T> {
    check_len(beta, lambda)?;
    check_finite(beta)?;
    let mut mags: Vec<T> = beta.iter().map(|&x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(mags
        .iter()
        .zip(lambda.weights())
        .map(|(&m, &w)| w * m)
        .sum())
}

/// argmin_b ½‖b − v‖² + step·J_λ(b), computed exactly.
pub fn prox_sorted_l1<T: Scalar>(
    v: &[T],
    lambda: &LambdaSequence<T>,
    step: T,
) -> Result<Vec<T>> {
    check_len(v, lambda)?;
    check_finite(v)?;
    if !step.is_finite() || step <= T::zero() {
        return Err(SlopeError::Domain(format!(
            "prox step must be positive, got {step}"
        )));
    }

    let m = v.len();
    let order = magnitude_order(v);

    // Non-increasing isotonic fit of |v|_(i) - step*λ_i via block pooling.
    // Each stack entry is (count, sum); a block's value is its mean.
    let mut blocks: Vec<(usize, T)> = Vec::with_capacity(m);
    for (rank, &idx) in order.iter().enumerate() {
        let z = v[idx].abs() - step * lambda.weights()[rank];
        let mut cur = (1usize, z);
        while let Some(&(pc, ps)) = blocks.last() {
            // pool while mean(cur) > mean(prev); cross-multiplied to avoid
            // division, and strict so runs of equal values stay untouched
            // (constant weights must reduce to exact soft-thresholding)
            if cur.1 * fp_usize(pc) > ps * fp_usize(cur.0) {
                blocks.pop();
                cur = (cur.0 + pc, cur.1 + ps);
            } else {
                break;
            }
        }
        blocks.push(cur);
    }

    let mut out = vec![T::zero(); m];
    let mut rank = 0;
    for (count, sum) in blocks {
        let value = (sum / fp_usize(count)).max(T::zero());
        for _ in 0..count {
            let idx = order[rank];
            if value > T::zero() {
                out[idx] = if v[idx] < T::zero() { -value } else { value };
            }
            rank += 1;
        }
    }
    Ok(out)
}

/// max_k (Σ_{i≤k} |g|_(i) − Σ_{i≤k} λ_i), clipped below at zero.
///
/// Zero exactly when `g` lies in the dual unit ball of J_λ.
pub fn sorted_l1_dual_infeasibility<T: Scalar>(
    g: &[T],
    lambda: &LambdaSequence<T>,
) -> Result<T> {
    check_len(g, lambda)?;
    check_finite(g)?;
    let mut mags: Vec<T> = g.iter().map(|&x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut worst = T::zero();
    let mut cum_g = T::zero();
    let mut cum_l = T::zero();
    for (mg, &w) in mags.iter().zip(lambda.weights()) {
        cum_g += *mg;
        cum_l += w;
        worst = worst.max(cum_g - cum_l);
    }
    Ok(worst)
}

/// max_k Σ_{i≤k}|g|_(i) / Σ_{i≤k}λ_i with 0/0 → 0; infinite when some prefix
/// of λ sums to zero while the matching prefix of |g| does not.
///
/// Scaling `g` by the reciprocal of this ratio (when it exceeds one) lands it
/// on the dual ball, which is how the solver builds a feasible dual point.
pub fn dual_norm_ratio<T: Scalar>(g: &[T], lambda: &LambdaSequence<T>) -> Result<T> {
    check_len(g, lambda)?;
    check_finite(g)?;
    let mut mags: Vec<T> = g.iter().map(|&x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut ratio = T::zero();
    let mut cum_g = T::zero();
    let mut cum_l = T::zero();
    for (mg, &w) in mags.iter().zip(lambda.weights()) {
        cum_g += *mg;
        cum_l += w;
        let r = if cum_l > T::zero() {
            cum_g / cum_l
        } else if cum_g > T::zero() {
            T::infinity()
        } else {
            T::zero()
        };
        ratio = ratio.max(r);
    }
    Ok(ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(w: &[f64]) -> LambdaSequence<f64> {
        LambdaSequence::new(w.to_vec(), Provenance::Custom).unwrap()
    }

    #[test]
    fn sequence_rejects_increasing_or_negative() {
        assert!(LambdaSequence::new(vec![1.0, 2.0], Provenance::Custom).is_err());
        assert!(LambdaSequence::new(vec![1.0, -0.5], Provenance::Custom).is_err());
        assert!(LambdaSequence::new(vec![1.0, f64::NAN], Provenance::Custom).is_err());
        assert!(LambdaSequence::new(vec![2.0, 2.0, 0.0], Provenance::Custom).is_ok());
    }

    #[test]
    fn norm_of_zero_is_zero() {
        let l = lam(&[3.0, 2.0, 1.0]);
        assert_eq!(sorted_l1_norm(&[0.0, 0.0, 0.0], &l).unwrap(), 0.0);
    }

    #[test]
    fn norm_direct_substitution() {
        let l = lam(&[2.0, 1.0]);
        assert_eq!(sorted_l1_norm(&[-1.0, 3.0], &l).unwrap(), 7.0);
    }

    #[test]
    fn norm_constant_weights_is_l1() {
        let l = lam(&[1.5, 1.5, 1.5, 1.5]);
        let beta = [0.3, -2.0, 0.0, 1.1];
        let l1: f64 = beta.iter().map(|x: &f64| x.abs()).sum();
        assert!((sorted_l1_norm(&beta, &l).unwrap() - 1.5 * l1).abs() < 1e-12);
    }

    #[test]
    fn norm_length_mismatch() {
        let l = lam(&[1.0]);
        assert!(matches!(
            sorted_l1_norm(&[1.0, 2.0], &l),
            Err(SlopeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn prox_zero_weights_is_identity() {
        let l = lam(&[0.0, 0.0, 0.0]);
        let v = [1.5, -0.2, 0.0];
        assert_eq!(prox_sorted_l1(&v, &l, 1.0).unwrap(), v.to_vec());
    }

    #[test]
    fn prox_constant_weights_soft_thresholds() {
        let l = lam(&[1.0, 1.0]);
        assert_eq!(prox_sorted_l1(&[3.0, -0.5], &l, 1.0).unwrap(), vec![2.0, 0.0]);
    }

    #[test]
    fn prox_rejects_bad_step() {
        let l = lam(&[1.0]);
        assert!(prox_sorted_l1(&[1.0], &l, 0.0).is_err());
        assert!(prox_sorted_l1(&[1.0], &l, -1.0).is_err());
    }

    #[test]
    fn prox_ties_shrink_equally() {
        let l = lam(&[2.0, 1.0, 0.5]);
        let out = prox_sorted_l1(&[2.0, -2.0, 2.0], &l, 1.0).unwrap();
        assert_eq!(out[0].abs(), out[1].abs());
        assert_eq!(out[1].abs(), out[2].abs());
        assert!(out[1] <= 0.0);
    }

    #[test]
    fn dual_infeasibility_at_origin() {
        let l = lam(&[2.0, 1.0]);
        assert_eq!(sorted_l1_dual_infeasibility(&[0.0, 0.0], &l).unwrap(), 0.0);
    }

    #[test]
    fn dual_infeasibility_cumulative_formula() {
        let l = lam(&[2.0, 1.0]);
        // max(3-2, 3-3, 0) = 1
        assert_eq!(sorted_l1_dual_infeasibility(&[3.0, 0.0], &l).unwrap(), 1.0);
    }

    #[test]
    fn prox_fixed_point_at_zero_implies_dual_feasible() {
        // if prox(v) = 0 then v lies in the dual ball
        let l = lam(&[1.5, 1.0, 0.7, 0.7]);
        let v = [0.9, -0.8, 0.7, 0.4];
        let out = prox_sorted_l1(&v, &l, 1.0).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
        assert!(sorted_l1_dual_infeasibility(&v, &l).unwrap() <= 1e-10);
    }

    #[test]
    fn ratio_conventions() {
        let l = lam(&[0.0, 0.0]);
        assert_eq!(dual_norm_ratio(&[0.0, 0.0], &l).unwrap(), 0.0);
        assert!(dual_norm_ratio(&[1.0, 0.0], &l).unwrap().is_infinite());
        let l2 = lam(&[2.0, 1.0]);
        assert!((dual_norm_ratio(&[3.0, 0.0], &l2).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_shape() {
        let l = lam(&[2.0, 1.0]);
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("index,weight"));
    }
}
