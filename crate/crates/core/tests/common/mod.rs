//! Independent oracles shared by the integration suites. These deliberately
//! avoid the library's algorithmic paths: the prox oracle enumerates every
//! block structure of the solution instead of pooling violators, the solver
//! oracle is plain unaccelerated proximal gradient with a fixed step, and
//! the stepdown oracle re-scans every candidate prefix from scratch.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use stepdown_slope::{prox_sorted_l1, sorted_l1_norm, LambdaSequence, Provenance};

/// Exact prox of the sorted-ℓ1 norm by exhaustive enumeration of consecutive
/// block partitions with a zero tail (the minimizer has this form, and every
/// enumerated candidate is feasible, so the best candidate is the minimizer).
/// Exponential in the dimension; intended for m ≤ 12.
pub fn oracle_prox(v: &[f64], lambda: &[f64], step: f64) -> Vec<f64> {
    let m = v.len();
    assert!(m <= 12, "enumeration oracle limited to small dimensions");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        v[b].abs()
            .partial_cmp(&v[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let z: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| v[i].abs() - step * lambda[rank])
        .collect();

    let mut best_obj = f64::INFINITY;
    let mut best: Vec<f64> = vec![0.0; m];
    for r in 0..=m {
        let masks = 1usize << r.saturating_sub(1);
        for mask in 0..masks {
            let mut w = vec![0.0f64; m];
            let mut feasible = true;
            let mut start = 0usize;
            let mut prev = f64::INFINITY;
            for i in 0..r {
                let is_boundary = i + 1 == r || (mask >> i) & 1 == 1;
                if !is_boundary {
                    continue;
                }
                let len = i + 1 - start;
                let mean: f64 = z[start..=i].iter().sum::<f64>() / len as f64;
                if mean < 0.0 || mean > prev + 1e-15 {
                    feasible = false;
                    break;
                }
                for slot in &mut w[start..=i] {
                    *slot = mean;
                }
                prev = mean;
                start = i + 1;
            }
            if !feasible {
                continue;
            }
            let obj: f64 = w.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
            if obj < best_obj {
                best_obj = obj;
                best = w.clone();
            }
        }
    }

    let mut out = vec![0.0f64; m];
    for (rank, &i) in order.iter().enumerate() {
        if best[rank] > 0.0 {
            out[i] = v[i].signum() * best[rank];
        }
    }
    out
}

/// Plain proximal gradient (no momentum, no duality stopping) with a fixed
/// step, returning the final iterate and objective.
pub fn oracle_plain_proximal_gradient(
    x: &Array2<f64>,
    y: &Array1<f64>,
    lambda: &LambdaSequence<f64>,
    sigma: f64,
    iterations: usize,
) -> (Array1<f64>, f64) {
    let m = x.ncols();
    let slam = lambda.scaled(sigma).unwrap();
    // crude overestimate of the spectral norm keeps the step safely small
    let mut v = Array1::from_elem(m, 1.0 / (m as f64).sqrt());
    let mut lip = 1.0;
    for _ in 0..500 {
        let u = x.t().dot(&x.dot(&v));
        lip = u.dot(&u).sqrt();
        if lip == 0.0 {
            break;
        }
        v = u / lip;
    }
    let step = 1.0 / (lip * 1.01).max(1e-12);
    let mut beta = Array1::<f64>::zeros(m);
    for _ in 0..iterations {
        let grad = x.t().dot(&(x.dot(&beta) - y));
        let arg = &beta - &(grad * step);
        beta = Array1::from(prox_sorted_l1(arg.as_slice().unwrap(), &slam, step).unwrap());
    }
    let resid = y - &x.dot(&beta);
    let obj = 0.5 * resid.dot(&resid) + sorted_l1_norm(beta.as_slice().unwrap(), &slam).unwrap();
    (beta, obj)
}

/// Stepdown by brute force: every candidate prefix length is re-checked with
/// a full scan, and the largest passing one wins.
pub fn oracle_stepdown(pvalues: &[f64], alphas: &[f64]) -> Vec<usize> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        pvalues[a]
            .partial_cmp(&pvalues[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut best = 0;
    for r in 0..=m {
        if (0..r).all(|j| pvalues[order[j]] <= alphas[j]) {
            best = r;
        }
    }
    let mut rejected: Vec<usize> = order[..best].to_vec();
    rejected.sort_unstable();
    rejected
}

pub fn randn(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// Random non-increasing non-negative weights of length m.
pub fn random_lambda(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> LambdaSequence<f64> {
    let mut w: Vec<f64> = (0..m).map(|_| (randn(rng) * scale).abs()).collect();
    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
    LambdaSequence::new(w, Provenance::Custom).unwrap()
}

pub fn random_vector(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> Vec<f64> {
    (0..m).map(|_| randn(rng) * scale).collect()
}

/// Random design with unit columns (n ≥ 1 rows).
pub fn random_unit_design(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Array2<f64> {
    let mut x = Array2::from_shape_fn((n, m), |_| randn(rng));
    for mut col in x.columns_mut() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        col.mapv_inplace(|v| v / norm);
    }
    x
}
