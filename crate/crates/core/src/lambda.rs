//! Construction of the penalty weight sequences.
//!
//! Three calibrations are provided, all of the form σ·Φ⁻¹(1 − a_i/2) for a
//! per-index tail level a_i:
//!
//! * [`lambda_bh`] — FDR calibration, a_i = i·q/m (includes the σ factor);
//! * [`lambda_kfwer`] — k-FWER calibration, a_i = kα/m on the first k
//!   entries and kα/(m+k−i) after;
//! * [`lambda_fdp`] — FDP-exceedance calibration,
//!   a_i = (⌊γi⌋+1)α/(m+⌊γi⌋+1−i).
//!
//! For non-orthogonal designs the base sequences are inflated left to right
//! by the extra variance a growing selected set induces on the next
//! coordinate: [`gaussian_correction`] uses the closed-form inverse-Wishart
//! weight w(s) = 1/(n−s−1) valid for i.i.d. Gaussian designs, and
//! [`monte_carlo_correction`] estimates the same quantity by sampling random
//! supports on an arbitrary design. Both flatten the sequence after its
//! global minimum (first index attaining it) so the penalty stays convex.

use crate::error::{Result, SlopeError};
use crate::float::{fp, fp_usize, Scalar};
use crate::solver::Design;
use crate::sorted_l1::{LambdaSequence, Provenance};
use crate::special::quantile_raw;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;

/// Parameters a sequence builder may need. Each builder reads only the
/// fields relevant to it and validates them there.
#[derive(Debug, Clone, Copy)]
pub struct SequenceSpec<T: Scalar> {
    /// Number of features / hypotheses.
    pub m: usize,
    /// Target level for k-FWER and FDP control.
    pub alpha: T,
    /// Target FDR level (BH calibration only).
    pub q: T,
    /// FDP exceedance level.
    pub gamma: T,
    /// Tolerated false rejections (k-FWER calibration only).
    pub k: usize,
    /// Noise scale; multiplies the BH weights.
    pub sigma: T,
    /// Sample size, used by the corrections.
    pub n: usize,
}

impl<T: Scalar> SequenceSpec<T> {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            alpha: fp(0.1),
            q: fp(0.1),
            gamma: fp(0.1),
            k: 1,
            sigma: T::one(),
            n: 0,
        }
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_q(mut self, q: T) -> Self {
        self.q = q;
        self
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }
}

fn check_open_unit<T: Scalar>(value: T, name: &str) -> Result<()> {
    if !(value > T::zero() && value < T::one()) {
        return Err(SlopeError::Domain(format!(
            "{name} must lie in (0, 1), got {value}"
        )));
    }
    Ok(())
}

fn quantile_checked<T: Scalar>(arg: T, index_1b: usize) -> Result<T> {
    if !(arg > T::zero() && arg < T::one()) {
        return Err(SlopeError::DomainAt {
            index: index_1b,
            reason: format!("quantile argument {arg} outside (0, 1)"),
        });
    }
    Ok(quantile_raw(arg))
}

/// σ·Φ⁻¹(1 − i·q/(2m)) for i = 1..m; strictly decreasing, all positive.
pub fn lambda_bh<T: Scalar>(spec: &SequenceSpec<T>) -> Result<LambdaSequence<T>> {
    let m = spec.m;
    if m == 0 {
        return Err(SlopeError::Domain("m must be at least 1".into()));
    }
    check_open_unit(spec.q, "q")?;
    if !spec.sigma.is_finite() || spec.sigma <= T::zero() {
        return Err(SlopeError::Domain(format!(
            "sigma must be positive, got {}",
            spec.sigma
        )));
    }
    let two_m = fp::<T>(2.0) * fp_usize(m);
    let mut weights = Vec::with_capacity(m);
    for i in 1..=m {
        let arg = T::one() - fp_usize::<T>(i) * spec.q / two_m;
        weights.push(spec.sigma * quantile_checked(arg, i)?);
    }
    LambdaSequence::new(weights, Provenance::Bh)
}

/// Unit-σ k-FWER weights: constant Φ⁻¹(1 − kα/2m) on the first k entries,
/// Φ⁻¹(1 − kα/(2(m+k−i))) after.
pub fn lambda_kfwer<T: Scalar>(spec: &SequenceSpec<T>) -> Result<LambdaSequence<T>> {
    let (m, k) = (spec.m, spec.k);
    if m == 0 || k == 0 || k > m {
        return Err(SlopeError::Domain(format!(
            "k must satisfy 1 <= k <= m, got k={k}, m={m}"
        )));
    }
    check_open_unit(spec.alpha, "alpha")?;
    let two = fp::<T>(2.0);
    let ka = fp_usize::<T>(k) * spec.alpha;
    let mut weights = Vec::with_capacity(m);
    for i in 1..=m {
        let denom = if i <= k { m } else { m + k - i };
        let arg = T::one() - ka / (two * fp_usize(denom));
        weights.push(quantile_checked(arg, i)?);
    }
    LambdaSequence::new(weights, Provenance::KFwer)
}

/// Unit-σ FDP weights Φ⁻¹(1 − (⌊γi⌋+1)α/(2(m+⌊γi⌋+1−i))), with the
/// flattening diagnostic discarded.
pub fn lambda_fdp<T: Scalar>(spec: &SequenceSpec<T>) -> Result<LambdaSequence<T>> {
    lambda_fdp_with_diagnostics(spec).map(|(seq, _)| seq)
}

/// As [`lambda_fdp`], also reporting how many entries the non-increasing
/// enforcement had to flatten. The raw formula has been non-increasing on
/// every parameter set scanned, so the count is expected to be zero; it is
/// surfaced so a violation cannot pass silently.
pub fn lambda_fdp_with_diagnostics<T: Scalar>(
    spec: &SequenceSpec<T>,
) -> Result<(LambdaSequence<T>, usize)> {
    let m = spec.m;
    if m == 0 {
        return Err(SlopeError::Domain("m must be at least 1".into()));
    }
    check_open_unit(spec.alpha, "alpha")?;
    check_open_unit(spec.gamma, "gamma")?;
    let two = fp::<T>(2.0);
    let mut weights = Vec::with_capacity(m);
    for i in 1..=m {
        let fl = (spec.gamma * fp_usize(i)).floor();
        let num = (fl + T::one()) * spec.alpha;
        let den = two * (fp_usize::<T>(m) + fl + T::one() - fp_usize(i));
        weights.push(quantile_checked(T::one() - num / den, i)?);
    }
    let mut flattened = 0;
    for i in 1..m {
        if weights[i] > weights[i - 1] {
            weights[i] = weights[i - 1];
            flattened += 1;
        }
    }
    Ok((LambdaSequence::new(weights, Provenance::Fdp)?, flattened))
}

/// Inverse-Wishart variance weight w(s) = 1/(n − s − 1).
pub fn wishart_weight<T: Scalar>(s: usize, n: usize) -> Result<T> {
    if n <= s + 1 {
        return Err(SlopeError::Domain(format!(
            "wishart weight undefined: need n > s + 1, got s={s}, n={n}"
        )));
    }
    Ok(T::one() / fp_usize(n - s - 1))
}

/// Shared recursion + truncation: `weight_at(s)` returns the variance weight
/// for a support of size s, or `None` once it stops being defined.
fn corrected_sequence<T: Scalar>(
    base: &LambdaSequence<T>,
    weight_at: impl Fn(usize) -> Option<T>,
) -> Result<LambdaSequence<T>> {
    let m = base.len();
    if m == 0 {
        return LambdaSequence::new(Vec::new(), Provenance::Corrected);
    }
    let b = base.weights();
    let mut raw = Vec::with_capacity(m);
    raw.push(b[0]);
    let mut sum_sq = b[0] * b[0];
    for i in 2..=m {
        let Some(w) = weight_at(i - 1) else { break };
        let val = b[i - 1] * (T::one() + w * sum_sq).sqrt();
        raw.push(val);
        sum_sq += val * val;
    }
    truncate_at_global_min(raw, m)
}

fn truncate_at_global_min<T: Scalar>(raw: Vec<T>, m: usize) -> Result<LambdaSequence<T>> {
    let mut k_star = 0;
    for (i, &x) in raw.iter().enumerate() {
        if x < raw[k_star] {
            k_star = i;
        }
    }
    if raw.len() < m && k_star == raw.len() - 1 {
        return Err(SlopeError::Domain(format!(
            "corrected sequence still decreasing at index {} where the \
             variance weight becomes undefined; cannot locate its minimum",
            raw.len()
        )));
    }
    let flat = raw[k_star];
    let mut out = raw;
    out.truncate(k_star + 1);
    out.resize(m, flat);
    // the raw prefix is not mathematically guaranteed monotone, so enforce it
    for i in 1..out.len() {
        if out[i] > out[i - 1] {
            out[i] = out[i - 1];
        }
    }
    LambdaSequence::new(out, Provenance::Corrected)
}

/// Left-to-right variance inflation for i.i.d. Gaussian designs with n
/// samples: out(i) = base(i)·√(1 + w(i−1)·Σ_{j<i} out(j)²), flattened after
/// the global minimum.
pub fn gaussian_correction<T: Scalar>(
    base: &LambdaSequence<T>,
    n: usize,
) -> Result<LambdaSequence<T>> {
    corrected_sequence(base, |s| wishart_weight::<T>(s, n).ok())
}

/// Output of [`monte_carlo_correction`] with per-index sampling diagnostics.
#[derive(Debug, Clone)]
pub struct MonteCarloCorrected<T: Scalar> {
    pub sequence: LambdaSequence<T>,
    /// Estimated inflation factor per index (entry 0 is zero by convention).
    pub factors: Vec<T>,
    /// Standard error of each factor estimate.
    pub factor_se: Vec<T>,
    /// Draws discarded because the support Gram matrix was singular.
    pub skipped: usize,
}

/// Monte Carlo variant of the correction for designs that are neither
/// orthogonal nor i.i.d. Gaussian.
///
/// For each index i it averages, over `replicates` fresh draws of a uniform
/// support S of size i−1 and a target column drawn uniformly outside S, the
/// squared projection of the current weight prefix through the support Gram
/// matrix. Draws whose Gram submatrix is numerically singular are skipped
/// and counted; more than 10% skipped at any index is a conditioning error.
pub fn monte_carlo_correction<T: Scalar>(
    base: &LambdaSequence<T>,
    design: &Design<T>,
    replicates: usize,
    rng: &mut ChaCha8Rng,
) -> Result<MonteCarloCorrected<T>> {
    let m = base.len();
    if design.ncols() != m {
        return Err(SlopeError::DimensionMismatch {
            expected: m,
            found: design.ncols(),
        });
    }
    if replicates < 100 {
        return Err(SlopeError::Domain(format!(
            "need at least 100 replicates, got {replicates}"
        )));
    }
    for (j, norm) in design.column_norms().into_iter().enumerate() {
        if (norm - T::one()).abs() > fp(1e-6) {
            return Err(SlopeError::DomainAt {
                index: j,
                reason: format!("design column norm {norm} is not 1"),
            });
        }
    }
    if m == 0 {
        return Ok(MonteCarloCorrected {
            sequence: LambdaSequence::new(Vec::new(), Provenance::Corrected)?,
            factors: Vec::new(),
            factor_se: Vec::new(),
            skipped: 0,
        });
    }

    let gram = design.gram();
    let b = base.weights();
    let mut raw = Vec::with_capacity(m);
    let mut factors = vec![T::zero(); m];
    let mut factor_se = vec![T::zero(); m];
    let mut skipped_total = 0usize;
    raw.push(b[0]);

    let mut gss: Vec<T> = Vec::new();
    let mut rhs: Vec<T> = Vec::new();
    for i in 2..=m {
        let s = i - 1;
        let mut vals: Vec<T> = Vec::with_capacity(replicates);
        let mut skipped = 0usize;
        for _ in 0..replicates {
            let pick = index::sample(rng, m, s + 1).into_vec();
            let (support, target) = (&pick[..s], pick[s]);
            gss.clear();
            gss.resize(s * s, T::zero());
            for (r, &jr) in support.iter().enumerate() {
                for (c, &jc) in support.iter().enumerate() {
                    gss[r * s + c] = gram[[jr, jc]];
                }
            }
            rhs.clear();
            rhs.extend_from_slice(&raw[..s]);
            if !cholesky_solve(&mut gss, s, &mut rhs) {
                skipped += 1;
                continue;
            }
            let mut proj = T::zero();
            for (r, &jr) in support.iter().enumerate() {
                proj += gram[[target, jr]] * rhs[r];
            }
            vals.push(proj * proj);
        }
        if skipped * 10 > replicates {
            return Err(SlopeError::Conditioning {
                skipped,
                total: replicates,
            });
        }
        skipped_total += skipped;
        let count = fp_usize::<T>(vals.len());
        let mean = vals.iter().copied().sum::<T>() / count;
        let var = if vals.len() > 1 {
            vals.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>()
                / (count - T::one())
        } else {
            T::zero()
        };
        factors[i - 1] = mean;
        factor_se[i - 1] = (var / count).sqrt();
        raw.push(b[i - 1] * (T::one() + mean).sqrt());
    }

    Ok(MonteCarloCorrected {
        sequence: truncate_at_global_min(raw, m)?,
        factors,
        factor_se,
        skipped: skipped_total,
    })
}

/// In-place Cholesky factorization + solve for a small SPD system stored
/// row-major. Returns false when a pivot falls below tolerance.
fn cholesky_solve<T: Scalar>(a: &mut [T], s: usize, rhs: &mut [T]) -> bool {
    let mut max_diag = T::zero();
    for r in 0..s {
        max_diag = max_diag.max(a[r * s + r].abs());
    }
    let tol = max_diag * fp(1e-12) + T::min_positive_value();
    for j in 0..s {
        let mut d = a[j * s + j];
        for k in 0..j {
            d -= a[j * s + k] * a[j * s + k];
        }
        if d <= tol {
            return false;
        }
        let l = d.sqrt();
        a[j * s + j] = l;
        for r in (j + 1)..s {
            let mut v = a[r * s + j];
            for k in 0..j {
                v -= a[r * s + k] * a[j * s + k];
            }
            a[r * s + j] = v / l;
        }
    }
    // forward then backward substitution
    for r in 0..s {
        let mut v = rhs[r];
        for k in 0..r {
            v -= a[r * s + k] * rhs[k];
        }
        rhs[r] = v / a[r * s + r];
    }
    for r in (0..s).rev() {
        let mut v = rhs[r];
        for k in (r + 1)..s {
            v -= a[k * s + r] * rhs[k];
        }
        rhs[r] = v / a[r * s + r];
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::std_normal_quantile;
    use ndarray::Array2;
    use rand::SeedableRng;

    #[test]
    fn bh_single_entry() {
        let seq = lambda_bh(&SequenceSpec::<f64>::new(1).with_q(0.5)).unwrap();
        assert!((seq.weights()[0] - 0.6744897501960817).abs() < 1e-9);
    }

    #[test]
    fn bh_scales_linearly_in_sigma() {
        let spec = SequenceSpec::<f64>::new(7).with_q(0.2);
        let unit = lambda_bh(&spec).unwrap();
        let doubled = lambda_bh(&spec.with_sigma(2.0)).unwrap();
        for (a, b) in unit.weights().iter().zip(doubled.weights()) {
            assert_eq!(*b, 2.0 * a);
        }
    }

    #[test]
    fn bh_direct_substitution() {
        let seq = lambda_bh(&SequenceSpec::<f64>::new(4).with_q(0.2)).unwrap();
        for (i, w) in seq.weights().iter().enumerate() {
            let want = std_normal_quantile(1.0 - 0.025 * (i + 1) as f64).unwrap();
            assert!((w - want).abs() < 1e-12);
        }
        // strictly decreasing
        for pair in seq.weights().windows(2) {
            assert!(pair[0] > pair[1]);
        }
        assert!(seq.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn kfwer_constant_prefix_then_decreasing() {
        let seq = lambda_kfwer(&SequenceSpec::<f64>::new(10).with_k(3).with_alpha(0.1)).unwrap();
        let first = seq.weights()[0];
        assert_eq!(seq.weights()[1], first);
        assert_eq!(seq.weights()[2], first);
        assert!(seq.weights()[3] < first);
        for pair in seq.weights()[2..].windows(2) {
            assert!(pair[0] >= pair[1]);
        }
    }

    #[test]
    fn kfwer_k_equals_m_is_flat() {
        let seq = lambda_kfwer(&SequenceSpec::<f64>::new(6).with_k(6).with_alpha(0.2)).unwrap();
        let want = std_normal_quantile(1.0 - 0.1).unwrap();
        for &w in seq.weights() {
            assert!((w - want).abs() < 1e-12);
        }
    }

    #[test]
    fn kfwer_tail_entry_value() {
        // m=10, k=2, alpha=0.1, i=10: argument k*alpha/(2*(m+k-i)) = 0.05
        let seq = lambda_kfwer(&SequenceSpec::<f64>::new(10).with_k(2).with_alpha(0.1)).unwrap();
        assert!((seq.weights()[9] - 1.6448536269514722).abs() < 1e-9);
    }

    #[test]
    fn kfwer_rejects_bad_k() {
        assert!(lambda_kfwer(&SequenceSpec::<f64>::new(5).with_k(0)).is_err());
        assert!(lambda_kfwer(&SequenceSpec::<f64>::new(5).with_k(6)).is_err());
    }

    #[test]
    fn fdp_first_entry_collapses_floor() {
        let spec = SequenceSpec::<f64>::new(10).with_gamma(0.1).with_alpha(0.1);
        let seq = lambda_fdp(&spec).unwrap();
        let want = std_normal_quantile(1.0 - 0.1 / 20.0).unwrap();
        assert_eq!(seq.weights()[0], want);
    }

    #[test]
    fn fdp_tail_entry_value() {
        // m=10, gamma=0.1, alpha=0.1, i=10: floor(1)=1, arg = 0.2/(2*2) = 0.05
        let spec = SequenceSpec::<f64>::new(10).with_gamma(0.1).with_alpha(0.1);
        let seq = lambda_fdp(&spec).unwrap();
        assert!((seq.weights()[9] - 1.6448536269514722).abs() < 1e-9);
    }

    #[test]
    fn fdp_raw_sequence_never_needs_flattening() {
        for &m in &[50usize, 300, 1000] {
            for &gamma in &[0.05, 0.1, 0.37, 0.9] {
                let spec = SequenceSpec::<f64>::new(m).with_gamma(gamma).with_alpha(0.1);
                let (seq, flattened) = lambda_fdp_with_diagnostics(&spec).unwrap();
                assert_eq!(flattened, 0, "m={m}, gamma={gamma}");
                for pair in seq.weights().windows(2) {
                    assert!(pair[0] >= pair[1]);
                }
            }
        }
    }

    #[test]
    fn wishart_weight_values() {
        assert_eq!(wishart_weight::<f64>(0, 2).unwrap(), 1.0);
        assert!((wishart_weight::<f64>(10, 5000).unwrap() - 1.0 / 4989.0).abs() < 1e-18);
        assert!(wishart_weight::<f64>(5, 6).is_err());
        // n -> infinity: w(s) * n -> 1
        let n = 1_000_000_000usize;
        assert!((wishart_weight::<f64>(10, n).unwrap() * n as f64 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_correction_near_identity_for_huge_n() {
        let base = lambda_bh(&SequenceSpec::<f64>::new(20).with_q(0.1)).unwrap();
        let out = gaussian_correction(&base, 100_000_000).unwrap();
        for (a, b) in out.weights().iter().zip(base.weights()) {
            assert!((a / b - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn correction_identity_when_weight_is_zero() {
        let base = lambda_bh(&SequenceSpec::<f64>::new(15).with_q(0.2)).unwrap();
        let out = corrected_sequence(&base, |_| Some(0.0)).unwrap();
        assert_eq!(out.weights(), base.weights());
    }

    #[test]
    fn gaussian_correction_recursion_base() {
        let base = lambda_bh(&SequenceSpec::<f64>::new(5).with_q(0.1)).unwrap();
        let out = gaussian_correction(&base, 50).unwrap();
        let b = base.weights();
        assert_eq!(out.weights()[0], b[0]);
        let w1 = wishart_weight::<f64>(1, 50).unwrap();
        let want = b[1] * (1.0 + w1 * b[0] * b[0]).sqrt();
        assert!((out.weights()[1] - want).abs() < 1e-14);
    }

    #[test]
    fn gaussian_correction_truncates_when_raw_turns_up() {
        // m > n: the raw sequence blows up well before the weight becomes
        // undefined, so the output must flatten at the global minimum.
        let base = lambda_bh(&SequenceSpec::<f64>::new(200).with_q(0.1)).unwrap();
        let out = gaussian_correction(&base, 100).unwrap();
        let w = out.weights();
        assert_eq!(w.len(), 200);
        for pair in w.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
        // constant tail
        let flat = w[199];
        let k_star = w.iter().position(|&x| x == flat).unwrap();
        assert!(k_star < 190, "expected interior minimum, got {k_star}");
        for &x in &w[k_star..] {
            assert_eq!(x, flat);
        }
        // the raw recursion, recomputed independently, attains its minimum there
        let b = base.weights();
        let mut raw = vec![b[0]];
        let mut sum_sq = b[0] * b[0];
        for i in 2..100 {
            let ww = wishart_weight::<f64>(i - 1, 100).unwrap();
            let val = b[i - 1] * (1.0 + ww * sum_sq).sqrt();
            raw.push(val);
            sum_sq += val * val;
        }
        let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((min - flat).abs() < 1e-12);
        // and it is eventually increasing
        let arg_min = raw.iter().position(|&x| x == min).unwrap();
        for pair in raw[arg_min..].windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }

    #[test]
    fn monte_carlo_identity_design_leaves_base_unchanged() {
        let base = lambda_bh(&SequenceSpec::<f64>::new(12).with_q(0.2)).unwrap();
        let design = Design::identity(12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = monte_carlo_correction(&base, &design, 100, &mut rng).unwrap();
        assert_eq!(out.sequence.weights(), base.weights());
        assert_eq!(out.skipped, 0);
    }

    #[test]
    fn monte_carlo_deterministic_per_seed() {
        let base = lambda_bh(&SequenceSpec::<f64>::new(8).with_q(0.2)).unwrap();
        let x = crate::simgen::gaussian_design_matrix::<f64>(
            40,
            8,
            &mut ChaCha8Rng::seed_from_u64(77),
        );
        let design = Design::dense(x).unwrap();
        let a = monte_carlo_correction(
            &base,
            &design,
            120,
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        let b = monte_carlo_correction(
            &base,
            &design,
            120,
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        assert_eq!(a.sequence.weights(), b.sequence.weights());
    }

    #[test]
    fn monte_carlo_rejects_singular_designs() {
        // duplicated column: supports containing both copies are singular
        let mut x = Array2::zeros((6, 4));
        for i in 0..6 {
            x[[i, 0]] = ((i + 1) as f64).sin();
            x[[i, 1]] = x[[i, 0]];
            x[[i, 2]] = ((i * i + 2) as f64).cos();
            x[[i, 3]] = ((i * 3 + 1) as f64 * 0.31).sin();
        }
        let design = Design::dense(normalize_cols(x)).unwrap();
        let base = LambdaSequence::constant(1.0, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = monte_carlo_correction(&base, &design, 200, &mut rng).unwrap_err();
        assert!(matches!(err, SlopeError::Conditioning { .. }));
    }

    #[test]
    fn monte_carlo_requires_enough_replicates() {
        let base = LambdaSequence::constant(1.0, 3).unwrap();
        let design = Design::identity(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(monte_carlo_correction(&base, &design, 99, &mut rng).is_err());
    }

    fn normalize_cols(mut x: Array2<f64>) -> Array2<f64> {
        for mut col in x.columns_mut() {
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            col.mapv_inplace(|v| v / norm);
        }
        x
    }
}
