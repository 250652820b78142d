//! Deterministic, seeded generators for the three experimental designs:
//! orthogonal, correlated multiple means with whitening, and Gaussian.
//!
//! Each generator is a pure function of its parameters and an [`RngStream`];
//! the harness assigns one stream per replication so replications can run in
//! any order (or concurrently) without changing a single draw.

use crate::error::{Result, SlopeError};
use crate::float::{fp, fp_usize, Scalar};
use crate::solver::{Design, Problem};
use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write;

/// A (seed, stream) pair naming one reproducible draw sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// √(2·ln d)
pub fn sqrt_two_log<T: Scalar>(d: usize) -> T {
    (fp::<T>(2.0) * fp_usize::<T>(d).ln()).sqrt()
}

/// Default orthogonal-design signal amplitude, 3√(2 ln n).
pub fn orthogonal_default_amplitude<T: Scalar>(n: usize) -> T {
    fp::<T>(3.0) * sqrt_two_log(n)
}

/// Weak signal amplitude √(2 ln m).
pub fn weak_amplitude<T: Scalar>(m: usize) -> T {
    sqrt_two_log(m)
}

/// Moderate signal amplitude 2√(2 ln m).
pub fn moderate_amplitude<T: Scalar>(m: usize) -> T {
    fp::<T>(2.0) * sqrt_two_log(m)
}

fn draw_support(rng: &mut ChaCha8Rng, m: usize, t: usize) -> Vec<usize> {
    let mut support = index::sample(rng, m, t).into_vec();
    support.sort_unstable();
    support
}

fn randn<T: Scalar>(rng: &mut ChaCha8Rng) -> T
where
    StandardNormal: Distribution<T>,
{
    rng.sample(StandardNormal)
}

/// Identity-design instance: y = β + σε with t signal coordinates of the
/// given amplitude at uniformly drawn positions.
pub fn gen_orthogonal<T: Scalar>(
    n: usize,
    t: usize,
    amplitude: T,
    sigma: T,
    stream: RngStream,
) -> Result<Problem<T>>
where
    StandardNormal: Distribution<T>,
{
    if t > n {
        return Err(SlopeError::Domain(format!(
            "signal count t={t} exceeds dimension n={n}"
        )));
    }
    if !amplitude.is_finite() {
        return Err(SlopeError::Domain("amplitude must be finite".into()));
    }
    if !sigma.is_finite() || sigma <= T::zero() {
        return Err(SlopeError::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let mut rng = stream.rng();
    let support = draw_support(&mut rng, n, t);
    let mut beta = Array1::zeros(n);
    for &i in &support {
        beta[i] = amplitude;
    }
    let mut y = beta.clone();
    for yi in y.iter_mut() {
        *yi += sigma * randn::<T>(&mut rng);
    }
    Problem::new(Design::identity(n), y, sigma, Some(beta))
}

/// Compound-symmetric covariance (constant diagonal, constant off-diagonal)
/// together with the closed-form pieces of its inverse square root
/// Σ^{-1/2} = a·I + b·J.
#[derive(Debug, Clone, Copy)]
pub struct CompoundSymmetry<T: Scalar> {
    pub m: usize,
    pub diag: T,
    pub offdiag: T,
    pub a: T,
    pub b: T,
    /// Euclidean norm shared by every column of Σ^{-1/2}.
    pub column_norm: T,
}

impl<T: Scalar> CompoundSymmetry<T> {
    pub fn new(m: usize, diag: T, offdiag: T) -> Result<Self> {
        if m == 0 {
            return Err(SlopeError::Domain("dimension must be positive".into()));
        }
        if !(diag.is_finite() && offdiag.is_finite()) || !(diag > offdiag) || offdiag < T::zero()
        {
            return Err(SlopeError::Domain(format!(
                "need diag > offdiag >= 0, got diag={diag}, offdiag={offdiag}"
            )));
        }
        let bulk = diag + fp_usize::<T>(m - 1) * offdiag;
        if !(bulk > T::zero()) {
            return Err(SlopeError::Domain(
                "covariance is not positive definite".into(),
            ));
        }
        let a = (diag - offdiag).sqrt().recip();
        let b = (bulk.sqrt().recip() - a) / fp_usize(m);
        // spectral self-check: (Σ^{-1/2})² Σ = I on both eigenspaces
        let r1 = a * a * (diag - offdiag) - T::one();
        let evec = a + fp_usize::<T>(m) * b;
        let r2 = evec * evec * bulk - T::one();
        if r1.abs() > fp(1e-8) || r2.abs() > fp(1e-8) {
            return Err(SlopeError::Domain(format!(
                "inverse square root residuals too large: {r1}, {r2}"
            )));
        }
        let ab = a + b;
        let column_norm = (ab * ab + fp_usize::<T>(m - 1) * b * b).sqrt();
        Ok(Self {
            m,
            diag,
            offdiag,
            a,
            b,
            column_norm,
        })
    }

    /// Σ^{-1/2} as a dense matrix.
    pub fn inv_sqrt(&self) -> Array2<T> {
        let (a, b) = (self.a, self.b);
        Array2::from_shape_fn((self.m, self.m), |(i, j)| {
            if i == j {
                a + b
            } else {
                b
            }
        })
    }

    /// Σ^{-1/2} with columns rescaled to unit norm.
    pub fn normalized_design(&self) -> Array2<T> {
        let mut x = self.inv_sqrt();
        let c = self.column_norm;
        x.mapv_inplace(|v| v / c);
        x
    }

    /// Σ^{-1/2}·v in O(m).
    pub fn inv_sqrt_apply(&self, v: &Array1<T>) -> Array1<T> {
        let total = v.sum();
        v.mapv(|x| self.a * x) + self.b * total
    }

    pub fn sigma_matrix(&self) -> Array2<T> {
        Array2::from_shape_fn((self.m, self.m), |(i, j)| {
            if i == j {
                self.diag
            } else {
                self.offdiag
            }
        })
    }
}

/// Closed-form inverse square root of the compound-symmetric matrix with the
/// given diagonal and off-diagonal entries.
pub fn compound_symmetry_inv_sqrt<T: Scalar>(
    m: usize,
    diag: T,
    offdiag: T,
) -> Result<Array2<T>> {
    Ok(CompoundSymmetry::new(m, diag, offdiag)?.inv_sqrt())
}

/// One replication of the correlated multiple-means experiment.
#[derive(Debug, Clone)]
pub struct CorrelatedMeansInstance<T: Scalar> {
    /// Per-test averages over laboratories, ȳ_i = μ_i + τ̄ + z̄_i.
    pub ybar: Array1<T>,
    /// True means; the regression problem's coefficients.
    pub mu: Array1<T>,
    pub support: Vec<usize>,
    /// Covariance of ȳ (compound symmetric) and the whitening pieces.
    pub covariance: CompoundSymmetry<T>,
    /// Column norm of Σ^{-1/2} before normalization.
    pub column_norm_c: T,
    /// Whitened regression: unit-column design, response with N(0, I) noise,
    /// true coefficients μ.
    pub problem: Problem<T>,
}

impl<T: Scalar> CorrelatedMeansInstance<T> {
    pub fn whitened_design(&self) -> &Design<T> {
        self.problem.design()
    }

    pub fn whitened_response(&self) -> &Array1<T> {
        self.problem.y()
    }
}

/// Generates the laboratory-effect multiple-means data and its whitened
/// regression form.
///
/// Observations y_{ij} = μ_i + τ_j + z_{ij} are averaged over `p_labs`
/// laboratories, giving ȳ ~ N(μ, Σ) with Σ_ii = (σ_τ² + σ_z²)/p and
/// Σ_ij = σ_τ²/p. The noise is whitened exactly (Σ^{-1/2}(ȳ − μ) ~ N(0, I))
/// and regressed against the column-normalized Σ^{-1/2}, so the regression
/// coefficients are μ itself. `mu_amplitude` defaults to 2√(2 ln m)/c with c
/// the pre-normalization column norm.
pub fn gen_correlated_means<T: Scalar>(
    n_tests: usize,
    p_labs: usize,
    t: usize,
    sigma_tau2: T,
    sigma_z2: T,
    mu_amplitude: Option<T>,
    stream: RngStream,
) -> Result<CorrelatedMeansInstance<T>>
where
    StandardNormal: Distribution<T>,
{
    let m = n_tests;
    if t > m {
        return Err(SlopeError::Domain(format!(
            "signal count t={t} exceeds number of tests {m}"
        )));
    }
    if p_labs == 0 {
        return Err(SlopeError::Domain("need at least one laboratory".into()));
    }
    if !(sigma_tau2 >= T::zero()) || !(sigma_z2 > T::zero()) {
        return Err(SlopeError::Domain(format!(
            "need sigma_tau2 >= 0 and sigma_z2 > 0, got {sigma_tau2}, {sigma_z2}"
        )));
    }
    let p = fp_usize::<T>(p_labs);
    let cov = CompoundSymmetry::new(m, (sigma_tau2 + sigma_z2) / p, sigma_tau2 / p)?;
    let c = cov.column_norm;
    let amplitude = mu_amplitude.unwrap_or_else(|| moderate_amplitude::<T>(m) / c);

    let mut rng = stream.rng();
    let support = draw_support(&mut rng, m, t);
    let mut mu = Array1::zeros(m);
    for &i in &support {
        mu[i] = amplitude;
    }

    let tau_sd = sigma_tau2.sqrt();
    let z_sd = sigma_z2.sqrt();
    let mut tau_bar = T::zero();
    for _ in 0..p_labs {
        tau_bar += tau_sd * randn::<T>(&mut rng);
    }
    tau_bar /= p;
    let mut ybar = Array1::zeros(m);
    for i in 0..m {
        let mut z_bar = T::zero();
        for _ in 0..p_labs {
            z_bar += z_sd * randn::<T>(&mut rng);
        }
        ybar[i] = mu[i] + tau_bar + z_bar / p;
    }

    // whitened noise is exactly N(0, I); the signal enters through the
    // normalized design so the regression coefficients stay equal to μ
    let noise = cov.inv_sqrt_apply(&(&ybar - &mu));
    let signal = cov.inv_sqrt_apply(&mu) / c;
    let response = signal + noise;
    let problem = Problem::new(
        Design::dense(cov.normalized_design())?,
        response,
        T::one(),
        Some(mu.clone()),
    )?;

    Ok(CorrelatedMeansInstance {
        ybar,
        mu,
        support,
        covariance: cov,
        column_norm_c: c,
        problem,
    })
}

/// Gaussian-design instance: X has i.i.d. N(0, 1/n) entries with columns
/// rescaled to unit norm, and y = Xβ + ε with ε ~ N(0, I).
pub fn gen_gaussian_design<T: Scalar>(
    n: usize,
    m: usize,
    t: usize,
    amplitude: T,
    stream: RngStream,
) -> Result<Problem<T>>
where
    StandardNormal: Distribution<T>,
{
    if t > m {
        return Err(SlopeError::Domain(format!(
            "signal count t={t} exceeds dimension m={m}"
        )));
    }
    if n == 0 || m == 0 {
        return Err(SlopeError::Domain("n and m must be positive".into()));
    }
    let mut rng = stream.rng();
    let support = draw_support(&mut rng, m, t);
    let mut beta = Array1::zeros(m);
    for &i in &support {
        beta[i] = amplitude;
    }
    let x = gaussian_design_matrix(n, m, &mut rng);
    let design = Design::dense(x)?;
    let mut y = design.matvec(beta.view());
    for yi in y.iter_mut() {
        *yi += randn::<T>(&mut rng);
    }
    Problem::new(design, y, T::one(), Some(beta))
}

/// The design-matrix part of [`gen_gaussian_design`]: i.i.d. N(0, 1/n)
/// entries, columns normalized.
pub fn gaussian_design_matrix<T: Scalar>(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Array2<T>
where
    StandardNormal: Distribution<T>,
{
    let root_n = fp_usize::<T>(n).sqrt();
    let mut x = Array2::from_shape_fn((n, m), |_| randn::<T>(rng) / root_n);
    let mut sq = vec![T::zero(); m];
    for row in x.rows() {
        for (s, &v) in sq.iter_mut().zip(row.iter()) {
            *s += v * v;
        }
    }
    let inv: Vec<T> = sq.into_iter().map(|s| s.sqrt().recip()).collect();
    for mut row in x.rows_mut() {
        for (v, &f) in row.iter_mut().zip(inv.iter()) {
            *v *= f;
        }
    }
    x
}

/// Dumps a problem as `x.csv`, `y.csv`, and (when present) `beta_true.csv`
/// under `dir`, for external cross-checking.
pub fn dump_problem_csv<T: Scalar>(problem: &Problem<T>, dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (n, m) = problem.dims();
    let mut xf = std::io::BufWriter::new(std::fs::File::create(dir.join("x.csv"))?);
    for i in 0..n {
        let mut row = String::new();
        for j in 0..m {
            if j > 0 {
                row.push(',');
            }
            let v = match problem.design() {
                Design::Identity { .. } => {
                    if i == j {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
                Design::Dense(x) => x[[i, j]],
            };
            row.push_str(&format!("{v}"));
        }
        writeln!(xf, "{row}")?;
    }
    let mut yf = std::io::BufWriter::new(std::fs::File::create(dir.join("y.csv"))?);
    for v in problem.y().iter() {
        writeln!(yf, "{v}")?;
    }
    if let Some(beta) = problem.beta_true() {
        let mut bf = std::io::BufWriter::new(std::fs::File::create(dir.join("beta_true.csv"))?);
        for v in beta.iter() {
            writeln!(bf, "{v}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_support_and_amplitude() {
        let amp = orthogonal_default_amplitude::<f64>(1000);
        assert!((amp - 11.150766566549514).abs() < 1e-9);
        let p = gen_orthogonal(1000, 50, amp, 1.0, RngStream::new(1, 0)).unwrap();
        let beta = p.beta_true().unwrap();
        let nonzero: Vec<f64> = beta.iter().copied().filter(|&b| b != 0.0).collect();
        assert_eq!(nonzero.len(), 50);
        assert!(nonzero.iter().all(|&b| b == amp));
        assert_eq!(p.true_support().unwrap().len(), 50);
    }

    #[test]
    fn orthogonal_rejects_too_many_signals() {
        assert!(gen_orthogonal(5, 6, 1.0, 1.0, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn generators_are_deterministic_per_stream() {
        let s = RngStream::new(42, 7);
        let a = gen_orthogonal::<f64>(50, 5, 3.0, 1.0, s).unwrap();
        let b = gen_orthogonal::<f64>(50, 5, 3.0, 1.0, s).unwrap();
        assert_eq!(a.y(), b.y());
        assert_eq!(a.beta_true().unwrap(), b.beta_true().unwrap());

        let g1 = gen_gaussian_design::<f64>(30, 12, 3, 2.0, s).unwrap();
        let g2 = gen_gaussian_design::<f64>(30, 12, 3, 2.0, s).unwrap();
        assert_eq!(g1.y(), g2.y());

        let c1 = gen_correlated_means::<f64>(20, 5, 4, 2.5, 2.5, None, s).unwrap();
        let c2 = gen_correlated_means::<f64>(20, 5, 4, 2.5, 2.5, None, s).unwrap();
        assert_eq!(c1.ybar, c2.ybar);
        assert_eq!(c1.problem.y(), c2.problem.y());

        // a different stream changes the draws
        let c3 =
            gen_correlated_means::<f64>(20, 5, 4, 2.5, 2.5, None, RngStream::new(42, 8)).unwrap();
        assert_ne!(c1.ybar, c3.ybar);
    }

    #[test]
    fn gaussian_columns_are_unit_norm() {
        let p = gen_gaussian_design::<f64>(200, 40, 5, moderate_amplitude(40), RngStream::new(3, 1))
            .unwrap();
        for norm in p.design().column_norms() {
            assert!((norm - 1.0).abs() < 1e-12);
        }
        assert!((moderate_amplitude::<f64>(1000) - 7.4338443776996765).abs() < 1e-9);
        assert!((weak_amplitude::<f64>(1000) - 3.7169221888498383).abs() < 1e-9);
    }

    #[test]
    fn compound_symmetry_diagonal_case() {
        let cs = CompoundSymmetry::<f64>::new(6, 4.0, 0.0).unwrap();
        let w = cs.inv_sqrt();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert!((w[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn compound_symmetry_two_by_two_spectrum() {
        // diag 1, offdiag 0.5: eigenvalues 1.5 and 0.5
        let cs = CompoundSymmetry::<f64>::new(2, 1.0, 0.5).unwrap();
        let w = cs.inv_sqrt();
        let on_ones = w[[0, 0]] + w[[0, 1]];
        let on_diff = w[[0, 0]] - w[[0, 1]];
        assert!((on_ones - 1.5f64.sqrt().recip()).abs() < 1e-12);
        assert!((on_diff - 0.5f64.sqrt().recip()).abs() < 1e-12);
    }

    #[test]
    fn compound_symmetry_inverse_square_root_residual() {
        for &(m, d, o) in &[(3usize, 2.0, 0.3), (8, 1.0, 0.5), (20, 5.0, 4.0)] {
            let cs = CompoundSymmetry::<f64>::new(m, d, o).unwrap();
            let w = cs.inv_sqrt();
            let sigma = cs.sigma_matrix();
            let res = w.dot(&sigma).dot(&w) - Array2::<f64>::eye(m);
            let max = res.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
            assert!(max <= 1e-8, "m={m}: residual {max}");
        }
    }

    #[test]
    fn compound_symmetry_rejects_indefinite() {
        assert!(CompoundSymmetry::<f64>::new(4, 1.0, 1.0).is_err());
        assert!(CompoundSymmetry::<f64>::new(4, 0.5, -0.1).is_err());
    }

    #[test]
    fn correlated_covariance_parameters() {
        let inst =
            gen_correlated_means::<f64>(10, 5, 2, 2.5, 2.5, None, RngStream::new(5, 0)).unwrap();
        assert!((inst.covariance.diag - 1.0).abs() < 1e-12);
        assert!((inst.covariance.offdiag - 0.5).abs() < 1e-12);
        assert_eq!(inst.support.len(), 2);
        // regression coefficients are mu
        assert_eq!(inst.problem.beta_true().unwrap(), &inst.mu);
        // design columns unit norm
        for norm in inst.problem.design().column_norms() {
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn correlated_no_lab_effect_decouples() {
        let inst =
            gen_correlated_means::<f64>(8, 4, 1, 0.0, 2.0, None, RngStream::new(9, 3)).unwrap();
        assert_eq!(inst.covariance.offdiag, 0.0);
        let w = inst.covariance.inv_sqrt();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(w[[i, j]], 0.0);
                }
            }
        }
    }

    #[test]
    fn correlated_sample_covariance_matches_sigma() {
        // entrywise agreement within 3 standard errors over many draws
        let m = 6;
        let reps = 5000;
        let mut sums = Array2::<f64>::zeros((m, m));
        for r in 0..reps {
            let inst = gen_correlated_means::<f64>(
                m,
                3,
                2,
                2.5,
                2.5,
                None,
                RngStream::new(1234, r as u64),
            )
            .unwrap();
            let e = &inst.ybar - &inst.mu;
            for i in 0..m {
                for j in 0..m {
                    sums[[i, j]] += e[i] * e[j];
                }
            }
        }
        let n = reps as f64;
        let cs = CompoundSymmetry::<f64>::new(m, 5.0 / 3.0, 2.5 / 3.0).unwrap();
        for i in 0..m {
            for j in 0..m {
                let want = if i == j { cs.diag } else { cs.offdiag };
                let got = sums[[i, j]] / n;
                // Var(e_i e_j) = σii σjj + σij²
                let se = ((cs.diag * cs.diag
                    + if i == j { 2.0 } else { 1.0 } * want * want)
                    / n)
                    .sqrt();
                assert!(
                    (got - want).abs() <= 3.0 * se,
                    "cov[{i},{j}]: got {got}, want {want}, se {se}"
                );
            }
        }
    }

    #[test]
    fn problem_dump_round_trips() {
        let p = gen_gaussian_design::<f64>(6, 3, 1, 2.0, RngStream::new(4, 4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        dump_problem_csv(&p, dir.path()).unwrap();
        let x = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
        assert_eq!(x.lines().count(), 6);
        assert_eq!(x.lines().next().unwrap().split(',').count(), 3);
        let y = std::fs::read_to_string(dir.path().join("y.csv")).unwrap();
        let parsed: Vec<f64> = y.lines().map(|l| l.parse().unwrap()).collect();
        assert_eq!(parsed.len(), 6);
        for (a, b) in parsed.iter().zip(p.y().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(dir.path().join("beta_true.csv").exists());
    }

    #[test]
    fn whitened_noise_is_isotropic() {
        // sample covariance of Σ^{-1/2}(ȳ − μ) is close to the identity
        let m = 5;
        let reps = 5000;
        let mut sums = Array2::<f64>::zeros((m, m));
        for r in 0..reps {
            let inst = gen_correlated_means::<f64>(
                m,
                5,
                1,
                2.5,
                2.5,
                None,
                RngStream::new(777, r as u64),
            )
            .unwrap();
            let e = inst.covariance.inv_sqrt_apply(&(&inst.ybar - &inst.mu));
            for i in 0..m {
                for j in 0..m {
                    sums[[i, j]] += e[i] * e[j];
                }
            }
        }
        let n = reps as f64;
        for i in 0..m {
            for j in 0..m {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = sums[[i, j]] / n;
                let se = ((1.0 + want * want) / n).sqrt();
                assert!(
                    (got - want).abs() <= 3.0 * se,
                    "whitened cov[{i},{j}] = {got}"
                );
            }
        }
    }
}
