//! Accelerated proximal gradient solver for sorted-ℓ1 penalized least
//! squares: minimize ½‖y − Xβ‖² + σ·J_λ(β).
//!
//! The iteration is FISTA with backtracking line search. The momentum
//! candidate is rejected whenever it would increase the objective; the step
//! is then retaken from the previous iterate with the momentum reset, which
//! keeps the accepted iterates monotone without giving up the accelerated
//! rate. Stopping is by relative duality gap: the residual is scaled until
//! its correlation vector lies in the dual ball of the (σ-scaled) penalty,
//! which yields a dual-feasible point and hence a true optimality gap.

use crate::error::{Result, SlopeError};
use crate::float::{fp, fp_usize, Scalar};
use crate::sorted_l1::{dual_norm_ratio, prox_sorted_l1, sorted_l1_norm, LambdaSequence};
use ndarray::{Array1, Array2, ArrayView1};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

/// Design matrix with unit-norm columns.
///
/// The identity variant exists so orthogonal experiments don't materialize
/// an n×n matrix; it behaves exactly like the equivalent dense identity.
#[derive(Debug, Clone)]
pub enum Design<T: Scalar> {
    Identity { n: usize },
    Dense(Array2<T>),
}

impl<T: Scalar> Design<T> {
    pub fn identity(n: usize) -> Self {
        Design::Identity { n }
    }

    /// Wraps a dense matrix, checking entries are finite.
    pub fn dense(x: Array2<T>) -> Result<Self> {
        if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
            return Err(SlopeError::DomainAt {
                index: bad,
                reason: "non-finite design entry".into(),
            });
        }
        Ok(Design::Dense(x))
    }

    pub fn nrows(&self) -> usize {
        match self {
            Design::Identity { n } => *n,
            Design::Dense(x) => x.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Design::Identity { n } => *n,
            Design::Dense(x) => x.ncols(),
        }
    }

    /// X·β
    pub fn matvec(&self, beta: ArrayView1<T>) -> Array1<T> {
        match self {
            Design::Identity { .. } => beta.to_owned(),
            Design::Dense(x) => x.dot(&beta),
        }
    }

    /// Xᵀ·v, accumulated row-wise so the dense path stays cache-friendly.
    pub fn rmatvec(&self, v: ArrayView1<T>) -> Array1<T> {
        match self {
            Design::Identity { .. } => v.to_owned(),
            Design::Dense(x) => {
                let mut out = Array1::zeros(x.ncols());
                for (row, &vi) in x.rows().into_iter().zip(v.iter()) {
                    out.scaled_add(vi, &row);
                }
                out
            }
        }
    }

    pub fn column_norms(&self) -> Vec<T> {
        match self {
            Design::Identity { n } => vec![T::one(); *n],
            Design::Dense(x) => {
                let mut sq = vec![T::zero(); x.ncols()];
                for row in x.rows() {
                    for (s, &v) in sq.iter_mut().zip(row.iter()) {
                        *s += v * v;
                    }
                }
                sq.into_iter().map(|s| s.sqrt()).collect()
            }
        }
    }

    /// XᵀX as a dense matrix.
    pub fn gram(&self) -> Array2<T> {
        match self {
            Design::Identity { n } => Array2::eye(*n),
            Design::Dense(x) => x.t().dot(x),
        }
    }

    /// Largest eigenvalue of XᵀX (= ‖X‖²) by power iteration.
    pub fn operator_norm_squared(&self, iterations: usize) -> T {
        match self {
            Design::Identity { .. } => T::one(),
            Design::Dense(_) => {
                let m = self.ncols();
                let mut v = Array1::from_elem(m, T::one() / fp_usize::<T>(m).sqrt());
                let mut norm = T::zero();
                for _ in 0..iterations {
                    let u = self.rmatvec(self.matvec(v.view()).view());
                    norm = u.dot(&u).sqrt();
                    if norm == T::zero() {
                        return T::zero();
                    }
                    v = u / norm;
                }
                norm
            }
        }
    }
}

/// A regression instance: unit-column design, response, known noise scale,
/// and (for simulations) the coefficients that generated the response.
#[derive(Debug, Clone)]
pub struct Problem<T: Scalar> {
    design: Design<T>,
    y: Array1<T>,
    sigma: T,
    beta_true: Option<Array1<T>>,
}

impl<T: Scalar> Problem<T> {
    pub fn new(
        design: Design<T>,
        y: Array1<T>,
        sigma: T,
        beta_true: Option<Array1<T>>,
    ) -> Result<Self> {
        if y.len() != design.nrows() {
            return Err(SlopeError::DimensionMismatch {
                expected: design.nrows(),
                found: y.len(),
            });
        }
        if let Some(bt) = &beta_true {
            if bt.len() != design.ncols() {
                return Err(SlopeError::DimensionMismatch {
                    expected: design.ncols(),
                    found: bt.len(),
                });
            }
        }
        if !sigma.is_finite() || sigma <= T::zero() {
            return Err(SlopeError::Domain(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if let Some(bad) = y.iter().position(|v| !v.is_finite()) {
            return Err(SlopeError::DomainAt {
                index: bad,
                reason: "non-finite response entry".into(),
            });
        }
        let tol = fp::<T>(1e-8).max(T::epsilon() * fp(100.0));
        for (j, norm) in design.column_norms().into_iter().enumerate() {
            if (norm - T::one()).abs() > tol {
                return Err(SlopeError::DomainAt {
                    index: j,
                    reason: format!("design column norm {norm} deviates from 1"),
                });
            }
        }
        Ok(Self {
            design,
            y,
            sigma,
            beta_true,
        })
    }

    pub fn design(&self) -> &Design<T> {
        &self.design
    }

    pub fn y(&self) -> &Array1<T> {
        &self.y
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn beta_true(&self) -> Option<&Array1<T>> {
        self.beta_true.as_ref()
    }

    /// Indices of nonzero true coefficients, when known.
    pub fn true_support(&self) -> Option<Vec<usize>> {
        self.beta_true
            .as_ref()
            .map(|b| support_of(b.as_slice().expect("contiguous")))
    }

    /// (n, m)
    pub fn dims(&self) -> (usize, usize) {
        (self.design.nrows(), self.design.ncols())
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions<T: Scalar> {
    pub max_iterations: usize,
    /// Relative duality-gap tolerance: stop when gap/max(P, 1) falls below.
    pub gap_tolerance: T,
    /// Step shrink factor on a failed sufficient-decrease test, in (0, 1).
    pub backtracking_shrink: T,
    /// Precomputed ‖X‖² to reuse across solves on the same design.
    pub lipschitz: Option<T>,
    /// Power-iteration steps when `lipschitz` is not given.
    pub power_iterations: usize,
    /// Per-check trace (iteration, objective, gap) written as CSV.
    pub trace: Option<PathBuf>,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            gap_tolerance: fp(1e-6),
            backtracking_shrink: fp(0.5),
            lipschitz: None,
            power_iterations: 100,
            trace: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlopeSolution<T: Scalar> {
    pub beta_hat: Array1<T>,
    /// Indices of exactly-nonzero coefficients, ascending.
    pub support: Vec<usize>,
    pub iterations: usize,
    pub duality_gap: T,
    pub converged: bool,
}

/// Indices of the exactly-nonzero entries, sorted ascending.
pub fn support_of<T: Scalar>(beta: &[T]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, &b)| b != T::zero())
        .map(|(i, _)| i)
        .collect()
}

fn check_dims<T: Scalar>(problem: &Problem<T>, lambda: &LambdaSequence<T>) -> Result<()> {
    if lambda.len() != problem.design.ncols() {
        return Err(SlopeError::DimensionMismatch {
            expected: problem.design.ncols(),
            found: lambda.len(),
        });
    }
    Ok(())
}

/// Duality gap of `beta` for the objective ½‖y − Xβ‖² + σ·J_λ(β).
///
/// The dual candidate is the residual scaled to dual feasibility; weak
/// duality makes the result a certified bound on the suboptimality, and it
/// vanishes at the minimizer.
pub fn duality_gap<T: Scalar>(
    problem: &Problem<T>,
    beta: &[T],
    lambda: &LambdaSequence<T>,
) -> Result<T> {
    check_dims(problem, lambda)?;
    if beta.len() != problem.design.ncols() {
        return Err(SlopeError::DimensionMismatch {
            expected: problem.design.ncols(),
            found: beta.len(),
        });
    }
    let slam = lambda.scaled(problem.sigma)?;
    let beta_v = ArrayView1::from(beta);
    let resid = problem.y() - &problem.design.matvec(beta_v);
    let primal = fp::<T>(0.5) * resid.dot(&resid) + sorted_l1_norm(beta, &slam)?;
    gap_at(problem, &resid, primal, &slam)
}

fn gap_at<T: Scalar>(
    problem: &Problem<T>,
    resid: &Array1<T>,
    primal: T,
    slam: &LambdaSequence<T>,
) -> Result<T> {
    let corr = problem.design.rmatvec(resid.view());
    let ratio = dual_norm_ratio(corr.as_slice().expect("contiguous"), slam)?;
    let scale = if ratio > T::one() {
        ratio.recip() // infinite ratio scales the candidate to zero
    } else {
        T::one()
    };
    let y = problem.y();
    let shifted = y - &(resid * scale);
    let dual = fp::<T>(0.5) * (y.dot(y) - shifted.dot(&shifted));
    Ok((primal - dual).max(T::zero()))
}

/// Runs the accelerated proximal gradient iteration until the relative
/// duality gap meets tolerance or the iteration budget is exhausted.
/// Non-convergence is reported through the `converged` flag, not an error.
pub fn solve_slope<T: Scalar>(
    problem: &Problem<T>,
    lambda: &LambdaSequence<T>,
    opts: &SolverOptions<T>,
) -> Result<SlopeSolution<T>> {
    check_dims(problem, lambda)?;
    if opts.max_iterations == 0 {
        return Err(SlopeError::Domain("max_iterations must be positive".into()));
    }
    if !(opts.gap_tolerance > T::zero()) {
        return Err(SlopeError::Domain("gap tolerance must be positive".into()));
    }
    let shrink = opts.backtracking_shrink;
    if !(shrink > T::zero() && shrink < T::one()) {
        return Err(SlopeError::Domain(format!(
            "backtracking shrink must lie in (0, 1), got {shrink}"
        )));
    }

    let slam = lambda.scaled(problem.sigma)?;
    let m = problem.design.ncols();
    let y = problem.y();
    let half = fp::<T>(0.5);

    let lip = opts
        .lipschitz
        .unwrap_or_else(|| problem.design.operator_norm_squared(opts.power_iterations));
    let mut step = if lip > T::zero() { lip.recip() } else { T::one() };
    let step_floor = step * fp(1e-20);

    let mut trace = match &opts.trace {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            writeln!(w, "iteration,objective,gap")?;
            Some(w)
        }
        None => None,
    };

    let mut momentum = Array1::<T>::zeros(m); // a^k
    let mut beta = Array1::<T>::zeros(m); // b^k
    let mut p_beta = half * y.dot(y);
    let mut theta = T::one();

    let mut gap = T::infinity();
    let mut converged = false;
    let mut iterations = 0;

    // backtracked prox-gradient step from `point`; returns (candidate, f(candidate))
    let prox_step = |point: &Array1<T>, step: &mut T| -> Result<(Array1<T>, T)> {
        let fitted = problem.design.matvec(point.view());
        let resid = &fitted - y;
        let f_point = half * resid.dot(&resid);
        let grad = problem.design.rmatvec(resid.view());
        loop {
            let arg = point - &(&grad * *step);
            let cand = Array1::from(prox_sorted_l1(
                arg.as_slice().expect("contiguous"),
                &slam,
                *step,
            )?);
            let diff = &cand - point;
            let model = f_point + grad.dot(&diff) + diff.dot(&diff) / (fp::<T>(2.0) * *step);
            let fitted_c = problem.design.matvec(cand.view());
            let rc = &fitted_c - y;
            let f_cand = half * rc.dot(&rc);
            let slack = fp::<T>(1e-12) * model.abs().max(T::one());
            if f_cand <= model + slack || *step <= step_floor {
                return Ok((cand, f_cand));
            }
            *step *= shrink;
        }
    };

    for k in 0..opts.max_iterations {
        iterations = k + 1;
        let (mut cand, mut f_cand) = prox_step(&momentum, &mut step)?;
        let mut p_cand =
            f_cand + sorted_l1_norm(cand.as_slice().expect("contiguous"), &slam)?;

        // momentum overshoot: retake the step from the last iterate
        if p_cand > p_beta + fp::<T>(1e-12) * p_beta.abs().max(T::one()) {
            theta = T::one();
            let retaken = prox_step(&beta, &mut step)?;
            cand = retaken.0;
            f_cand = retaken.1;
            p_cand = f_cand + sorted_l1_norm(cand.as_slice().expect("contiguous"), &slam)?;
        }

        let theta_next =
            fp::<T>(2.0) / (T::one() + (T::one() + fp::<T>(4.0) / (theta * theta)).sqrt());
        let coeff = theta_next * (theta.recip() - T::one());
        momentum = &cand + &((&cand - &beta) * coeff);
        beta = cand;
        p_beta = p_cand;
        theta = theta_next;

        if (k + 1) % 10 == 0 || k + 1 == opts.max_iterations {
            let resid = y - &problem.design.matvec(beta.view());
            gap = gap_at(problem, &resid, p_beta, &slam)?;
            if let Some(w) = trace.as_mut() {
                writeln!(w, "{},{},{}", k + 1, p_beta, gap)?;
            }
            if gap <= opts.gap_tolerance * p_beta.max(T::one()) {
                converged = true;
                break;
            }
        }
    }

    let support = support_of(beta.as_slice().expect("contiguous"));
    Ok(SlopeSolution {
        beta_hat: beta,
        support,
        iterations,
        duality_gap: gap,
        converged,
    })
}
