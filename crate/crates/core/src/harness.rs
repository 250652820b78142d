//! Config-driven experiment runner.
//!
//! A JSON [`ExperimentConfig`] names a design, parameter grids, methods, and
//! a seed; [`run_experiment`] expands the grid, generates one seeded
//! instance per (t, replication), runs every method on it, aggregates the
//! selection outcomes, and returns one report row per (method, grid cell).
//! Rows serialize to a fixed-schema CSV plus a long-format k-FWER heatmap
//! companion. Everything is deterministic in (config, seed): replications
//! own disjoint RNG streams, so thread count and execution order cannot
//! change a single draw.

use crate::error::{Result, SlopeError};
use crate::lambda::{
    gaussian_correction, lambda_bh, lambda_fdp, lambda_kfwer, monte_carlo_correction,
    SequenceSpec,
};
use crate::metrics::{aggregate, score_selection, ExperimentReport, SelectionOutcome};
use crate::simgen::{
    gaussian_design_matrix, gen_correlated_means, gen_gaussian_design, gen_orthogonal,
    moderate_amplitude, orthogonal_default_amplitude, weak_amplitude, CompoundSymmetry,
    RngStream,
};
use crate::solver::{solve_slope, Design, Problem, SolverOptions};
use crate::sorted_l1::LambdaSequence;
use crate::stepdown::{
    fdp_thresholds, kfwer_thresholds, stepdown_select, two_sided_p, ThresholdSequence,
};
use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// RNG stream layout: instances use (t_index << 32) | replication, weight
/// corrections use a high block so the two can never collide.
const LAMBDA_STREAM_BASE: u64 = 1 << 48;
const REFERENCE_DESIGN_STREAM: u64 = LAMBDA_STREAM_BASE - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Orthogonal,
    CorrelatedMeans,
    Gaussian,
}

impl DesignKind {
    pub fn label(&self) -> &'static str {
        match self {
            DesignKind::Orthogonal => "orthogonal",
            DesignKind::CorrelatedMeans => "correlated_means",
            DesignKind::Gaussian => "gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "SLOPE")]
    Slope,
    #[serde(rename = "kSLOPE")]
    KSlope,
    #[serde(rename = "FSLOPE")]
    FSlope,
    #[serde(rename = "Sd_kFWER")]
    SdKFwer,
    #[serde(rename = "Sd_FDP")]
    SdFdp,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Slope => "SLOPE",
            Method::KSlope => "kSLOPE",
            Method::FSlope => "FSLOPE",
            Method::SdKFwer => "Sd_kFWER",
            Method::SdFdp => "Sd_FDP",
        }
    }

    fn uses_k(&self) -> bool {
        matches!(self, Method::KSlope | Method::SdKFwer)
    }

    fn is_stepdown(&self) -> bool {
        matches!(self, Method::SdKFwer | Method::SdFdp)
    }
}

/// Signal strength: multiples of √(2 ln d) (divided by the whitening column
/// norm for the correlated design), or an absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeMode {
    Weak,
    Moderate,
    Custom(f64),
}

/// Weight-sequence adjustment for non-orthogonal designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionKind {
    None,
    Gaussian,
    MonteCarlo(usize),
}

fn default_p_labs() -> usize {
    5
}

fn default_level() -> f64 {
    0.1
}

fn default_lab_variance() -> f64 {
    2.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub design: DesignKind,
    /// Sample size. For the orthogonal design this is also the dimension.
    pub n: usize,
    /// Feature / test count; may be omitted (0) for the orthogonal and
    /// correlated designs, where it defaults to n.
    #[serde(default)]
    pub m: usize,
    #[serde(default = "default_p_labs")]
    pub p_labs: usize,
    pub t_grid: Vec<usize>,
    #[serde(default)]
    pub k_grid: Vec<usize>,
    #[serde(default = "default_level")]
    pub alpha: f64,
    #[serde(default = "default_level")]
    pub q: f64,
    #[serde(default = "default_level")]
    pub gamma: f64,
    /// Defaults per design: 3√(2 ln n) for orthogonal, moderate elsewhere.
    #[serde(default)]
    pub amplitude_mode: Option<AmplitudeMode>,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub seed: u64,
    /// Defaults per design: none for orthogonal, gaussian for the Gaussian
    /// design, monte_carlo(200) for correlated means.
    #[serde(default)]
    pub lambda_correction: Option<CorrectionKind>,
    #[serde(default = "default_lab_variance")]
    pub sigma_tau2: f64,
    #[serde(default = "default_lab_variance")]
    pub sigma_z2: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| SlopeError::InvalidConfig(vec![format!("config parse error: {e}")]))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Feature count after applying per-design defaults.
    pub fn effective_m(&self) -> usize {
        match self.design {
            DesignKind::Orthogonal | DesignKind::CorrelatedMeans => {
                if self.m == 0 {
                    self.n
                } else {
                    self.m
                }
            }
            DesignKind::Gaussian => self.m,
        }
    }

    pub fn effective_correction(&self) -> CorrectionKind {
        self.lambda_correction.unwrap_or(match self.design {
            DesignKind::Orthogonal => CorrectionKind::None,
            DesignKind::Gaussian => CorrectionKind::Gaussian,
            DesignKind::CorrelatedMeans => CorrectionKind::MonteCarlo(200),
        })
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let m = self.effective_m();
        if self.n == 0 {
            bad.push("n: must be at least 1".to_string());
        }
        if m == 0 {
            bad.push("m: must be at least 1".to_string());
        }
        match self.design {
            DesignKind::Orthogonal | DesignKind::CorrelatedMeans => {
                if self.m != 0 && self.n != 0 && self.m != self.n {
                    bad.push(format!(
                        "m: must equal n (or be omitted) for the {} design, got m={}, n={}",
                        self.design.label(),
                        self.m,
                        self.n
                    ));
                }
            }
            DesignKind::Gaussian => {
                if self.m == 0 {
                    bad.push("m: required for the gaussian design".to_string());
                }
            }
        }
        if self.replications == 0 {
            bad.push("replications: must be at least 1".to_string());
        }
        if self.methods.is_empty() {
            bad.push("methods: must name at least one method".to_string());
        }
        let mut seen = Vec::new();
        for &meth in &self.methods {
            if seen.contains(&meth) {
                bad.push(format!("methods: duplicate entry {}", meth.label()));
            }
            seen.push(meth);
        }
        if self.t_grid.is_empty() {
            bad.push("t_grid: must be non-empty".to_string());
        }
        for &t in &self.t_grid {
            if t == 0 {
                bad.push("t_grid: t = 0 makes power undefined".to_string());
            } else if m > 0 && t > m {
                bad.push(format!("t_grid: t={t} exceeds m={m}"));
            }
        }
        if self.methods.iter().any(|meth| meth.uses_k()) {
            if self.k_grid.is_empty() {
                bad.push("k_grid: required when kSLOPE or Sd_kFWER is requested".to_string());
            }
            for &k in &self.k_grid {
                if k == 0 || (m > 0 && k > m) {
                    bad.push(format!("k_grid: k={k} outside 1..=m (m={m})"));
                }
            }
        }
        for (name, v) in [("alpha", self.alpha), ("q", self.q), ("gamma", self.gamma)] {
            if !(v > 0.0 && v < 1.0) {
                bad.push(format!("{name}: must lie in (0, 1), got {v}"));
            }
        }
        if let Some(AmplitudeMode::Custom(v)) = self.amplitude_mode {
            if !v.is_finite() {
                bad.push(format!("amplitude_mode: custom amplitude {v} is not finite"));
            } else if v == 0.0 && self.t_grid.iter().any(|&t| t > 0) {
                bad.push("amplitude_mode: custom amplitude 0 with t > 0 signals".to_string());
            }
        }
        match self.design {
            DesignKind::CorrelatedMeans => {
                if self.p_labs == 0 {
                    bad.push("p_labs: must be at least 1".to_string());
                }
                if !(self.sigma_tau2 >= 0.0) {
                    bad.push(format!("sigma_tau2: must be >= 0, got {}", self.sigma_tau2));
                }
                if !(self.sigma_z2 > 0.0) {
                    bad.push(format!("sigma_z2: must be > 0, got {}", self.sigma_z2));
                }
            }
            DesignKind::Gaussian => {
                if self.methods.iter().any(|meth| meth.is_stepdown()) {
                    bad.push(
                        "methods: stepdown baselines need marginal test statistics, \
                         which the gaussian design does not provide"
                            .to_string(),
                    );
                }
            }
            DesignKind::Orthogonal => {}
        }
        match self.effective_correction() {
            CorrectionKind::MonteCarlo(r) if r < 100 => {
                bad.push(format!("lambda_correction: monte_carlo needs >= 100 replicates, got {r}"));
            }
            CorrectionKind::Gaussian if self.correction_sample_size() < 3 => {
                bad.push("lambda_correction: gaussian correction needs n >= 3".to_string());
            }
            _ => {}
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SlopeError::InvalidConfig(bad))
        }
    }

    /// Row count of the design the correction reasons about.
    fn correction_sample_size(&self) -> usize {
        match self.design {
            DesignKind::CorrelatedMeans => self.effective_m(),
            _ => self.n,
        }
    }

    fn covariance(&self) -> Result<Option<CompoundSymmetry<f64>>> {
        match self.design {
            DesignKind::CorrelatedMeans => {
                let p = self.p_labs as f64;
                Ok(Some(CompoundSymmetry::new(
                    self.effective_m(),
                    (self.sigma_tau2 + self.sigma_z2) / p,
                    self.sigma_tau2 / p,
                )?))
            }
            _ => Ok(None),
        }
    }

    fn resolved_amplitude(&self, cov: Option<&CompoundSymmetry<f64>>) -> f64 {
        let m = self.effective_m();
        match self.design {
            DesignKind::Orthogonal => match self.amplitude_mode {
                None => orthogonal_default_amplitude(self.n),
                Some(AmplitudeMode::Weak) => weak_amplitude(self.n),
                Some(AmplitudeMode::Moderate) => moderate_amplitude(self.n),
                Some(AmplitudeMode::Custom(v)) => v,
            },
            DesignKind::Gaussian => match self.amplitude_mode {
                None | Some(AmplitudeMode::Moderate) => moderate_amplitude(m),
                Some(AmplitudeMode::Weak) => weak_amplitude(m),
                Some(AmplitudeMode::Custom(v)) => v,
            },
            DesignKind::CorrelatedMeans => {
                let c = cov.expect("covariance present for correlated design").column_norm;
                match self.amplitude_mode {
                    None | Some(AmplitudeMode::Moderate) => moderate_amplitude::<f64>(m) / c,
                    Some(AmplitudeMode::Weak) => weak_amplitude::<f64>(m) / c,
                    Some(AmplitudeMode::Custom(v)) => v,
                }
            }
        }
    }
}

/// One aggregated result row.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub method: Method,
    pub design: DesignKind,
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub k: Option<usize>,
    pub alpha: f64,
    pub gamma: f64,
    pub q: f64,
    pub report: ExperimentReport<f64>,
    pub se_kfwer: f64,
    pub se_prob: f64,
    pub nonconverged: usize,
}

struct Cell {
    method: Method,
    k: Option<usize>,
    selector: Selector,
}

enum Selector {
    Solve(LambdaSequence<f64>),
    Stepdown(ThresholdSequence<f64>),
}

struct RepInstance {
    problem: Problem<f64>,
    lipschitz: f64,
    true_support: Vec<usize>,
    /// Marginal statistics with their noise scale, for the stepdown
    /// baselines: the response itself for the orthogonal design, the
    /// whitened correlation vector Xᵀy for correlated means.
    sd_stats: Option<(Array1<f64>, f64)>,
}

fn apply_correction(
    base: LambdaSequence<f64>,
    config: &ExperimentConfig,
    cov: Option<&CompoundSymmetry<f64>>,
    cell_index: u64,
) -> Result<LambdaSequence<f64>> {
    match config.effective_correction() {
        CorrectionKind::None => Ok(base),
        CorrectionKind::Gaussian => gaussian_correction(&base, config.correction_sample_size()),
        CorrectionKind::MonteCarlo(replicates) => {
            let design = match config.design {
                DesignKind::Orthogonal => Design::identity(config.n),
                DesignKind::CorrelatedMeans => Design::dense(
                    cov.expect("covariance present for correlated design")
                        .normalized_design(),
                )?,
                // random per-replication designs share one reference draw;
                // the correction is a population-level adjustment
                DesignKind::Gaussian => {
                    let mut rng =
                        RngStream::new(config.seed, REFERENCE_DESIGN_STREAM).rng();
                    Design::dense(gaussian_design_matrix(
                        config.n,
                        config.effective_m(),
                        &mut rng,
                    ))?
                }
            };
            let mut rng = RngStream::new(config.seed, LAMBDA_STREAM_BASE + cell_index).rng();
            Ok(monte_carlo_correction(&base, &design, replicates, &mut rng)?.sequence)
        }
    }
}

fn build_cells(
    config: &ExperimentConfig,
    cov: Option<&CompoundSymmetry<f64>>,
) -> Result<Vec<Cell>> {
    let m = config.effective_m();
    let mut cells = Vec::new();
    for &method in &config.methods {
        let ks: Vec<Option<usize>> = if method.uses_k() {
            config.k_grid.iter().map(|&k| Some(k)).collect()
        } else {
            vec![None]
        };
        for k in ks {
            let cell_index = cells.len() as u64;
            let selector = match method {
                Method::Slope => {
                    let base = lambda_bh(&SequenceSpec::new(m).with_q(config.q))?;
                    Selector::Solve(apply_correction(base, config, cov, cell_index)?)
                }
                Method::KSlope => {
                    let base = lambda_kfwer(
                        &SequenceSpec::new(m)
                            .with_k(k.unwrap())
                            .with_alpha(config.alpha),
                    )?;
                    Selector::Solve(apply_correction(base, config, cov, cell_index)?)
                }
                Method::FSlope => {
                    let base = lambda_fdp(
                        &SequenceSpec::new(m)
                            .with_gamma(config.gamma)
                            .with_alpha(config.alpha),
                    )?;
                    Selector::Solve(apply_correction(base, config, cov, cell_index)?)
                }
                Method::SdKFwer => {
                    Selector::Stepdown(kfwer_thresholds(m, k.unwrap(), config.alpha)?)
                }
                Method::SdFdp => {
                    Selector::Stepdown(fdp_thresholds(m, config.gamma, config.alpha)?)
                }
            };
            cells.push(Cell {
                method,
                k,
                selector,
            });
        }
    }
    Ok(cells)
}

fn build_instance(
    config: &ExperimentConfig,
    t: usize,
    amplitude: f64,
    cov: Option<&CompoundSymmetry<f64>>,
    stream: RngStream,
) -> Result<RepInstance> {
    match config.design {
        DesignKind::Orthogonal => {
            let problem = gen_orthogonal(config.n, t, amplitude, 1.0, stream)?;
            let stats = problem.y().clone();
            Ok(RepInstance {
                true_support: problem.true_support().unwrap_or_default(),
                sd_stats: Some((stats, 1.0)),
                lipschitz: 1.0,
                problem,
            })
        }
        DesignKind::CorrelatedMeans => {
            let cs = cov.expect("covariance present for correlated design");
            let inst = gen_correlated_means(
                cs.m,
                config.p_labs,
                t,
                config.sigma_tau2,
                config.sigma_z2,
                Some(amplitude),
                stream,
            )?;
            let stats = inst.problem.design().rmatvec(inst.problem.y().view());
            let lipschitz = inst.problem.design().operator_norm_squared(100);
            Ok(RepInstance {
                true_support: inst.support,
                sd_stats: Some((stats, 1.0)),
                lipschitz,
                problem: inst.problem,
            })
        }
        DesignKind::Gaussian => {
            let problem =
                gen_gaussian_design(config.n, config.effective_m(), t, amplitude, stream)?;
            let lipschitz = problem.design().operator_norm_squared(100);
            Ok(RepInstance {
                true_support: problem.true_support().unwrap_or_default(),
                sd_stats: None,
                lipschitz,
                problem,
            })
        }
    }
}

fn run_cell(cell: &Cell, inst: &RepInstance, m: usize) -> Result<(SelectionOutcome, bool)> {
    match &cell.selector {
        Selector::Solve(seq) => {
            let opts = SolverOptions {
                lipschitz: Some(inst.lipschitz),
                ..SolverOptions::default()
            };
            let sol = solve_slope(&inst.problem, seq, &opts)?;
            let outcome = score_selection(&sol.support, &inst.true_support, m)?;
            Ok((outcome, !sol.converged))
        }
        Selector::Stepdown(thresholds) => {
            let (stats, sd) = inst
                .sd_stats
                .as_ref()
                .expect("validation admits stepdown only with marginal statistics");
            let pvalues = stats
                .iter()
                .map(|&z| two_sided_p(z, *sd))
                .collect::<Result<Vec<f64>>>()?;
            let rejected = stepdown_select(&pvalues, thresholds)?;
            Ok((score_selection(&rejected, &inst.true_support, m)?, false))
        }
    }
}

/// Runs the full grid. Rows come back sorted by (design, method, t, k).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    config.validate()?;
    let m = config.effective_m();
    let cov = config.covariance()?;
    let amplitude = config.resolved_amplitude(cov.as_ref());
    let cells = build_cells(config, cov.as_ref())?;

    let mut rows = Vec::with_capacity(cells.len() * config.t_grid.len());
    for (ti, &t) in config.t_grid.iter().enumerate() {
        let per_rep: Vec<Vec<(SelectionOutcome, bool)>> = (0..config.replications)
            .into_par_iter()
            .map(|rep| {
                let stream =
                    RngStream::new(config.seed, ((ti as u64) << 32) | rep as u64);
                let inst = build_instance(config, t, amplitude, cov.as_ref(), stream)?;
                cells
                    .iter()
                    .map(|cell| run_cell(cell, &inst, m))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        for (ci, cell) in cells.iter().enumerate() {
            let outcomes: Vec<SelectionOutcome> =
                per_rep.iter().map(|r| r[ci].0).collect();
            let nonconverged = per_rep.iter().filter(|r| r[ci].1).count();
            let mut report = aggregate(&outcomes, config.gamma, cell.k.unwrap_or(1))?;
            report.seed = config.seed;
            report.config_echo = format!(
                "design={};n={};m={};t={};k={};alpha={};q={};gamma={};amplitude={:.6};correction={:?};reps={}",
                config.design.label(),
                config.n,
                m,
                t,
                cell.k.map_or("-".to_string(), |k| k.to_string()),
                config.alpha,
                config.q,
                config.gamma,
                amplitude,
                config.effective_correction(),
                config.replications,
            );
            let binom_se = |p: f64| (p * (1.0 - p) / config.replications as f64).sqrt();
            rows.push(ReportRow {
                method: cell.method,
                design: config.design,
                n: config.n,
                m,
                t,
                k: cell.k,
                alpha: config.alpha,
                gamma: config.gamma,
                q: config.q,
                se_kfwer: binom_se(report.kfwer_hat),
                se_prob: binom_se(report.prob_fdp_exceed_hat),
                nonconverged,
                report,
            });
        }
    }
    rows.sort_by(|a, b| {
        (a.design.label(), a.method.label(), a.t, a.k.unwrap_or(0)).cmp(&(
            b.design.label(),
            b.method.label(),
            b.t,
            b.k.unwrap_or(0),
        ))
    });
    Ok(rows)
}

pub const REPORT_HEADER: &str = "method,design,n,m,t,k,alpha,gamma,q,replications,seed,\
                                 fdr_hat,kfwer_hat,prob_fdp_exceed_hat,power_hat,se_kfwer,se_prob,nonconverged";

/// Writes the report CSV (header always present, six-decimal floats).
pub fn write_report<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.method.label(),
            r.design.label(),
            r.n,
            r.m,
            r.t,
            r.k.map_or(String::new(), |k| k.to_string()),
            r.alpha,
            r.gamma,
            r.q,
            r.report.replications,
            r.report.seed,
            r.report.fdr_hat,
            r.report.kfwer_hat,
            r.report.prob_fdp_exceed_hat,
            r.report.power_hat,
            r.se_kfwer,
            r.se_prob,
            r.nonconverged,
        )?;
    }
    Ok(())
}

pub fn emit_report(rows: &[ReportRow], path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_report(rows, file)
}

/// Long-format k-FWER data behind the heatmap figures: one row per
/// (method, k, t) cell of the k-controlled methods.
pub fn write_kfwer_heatmap<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    writeln!(out, "method,k,t,kfwer_hat")?;
    let mut picked: Vec<&ReportRow> = rows.iter().filter(|r| r.k.is_some()).collect();
    picked.sort_by(|a, b| {
        (a.method.label(), a.k.unwrap(), a.t).cmp(&(b.method.label(), b.k.unwrap(), b.t))
    });
    for r in picked {
        writeln!(
            out,
            "{},{},{},{:.6}",
            r.method.label(),
            r.k.unwrap(),
            r.t,
            r.report.kfwer_hat
        )?;
    }
    Ok(())
}

pub fn emit_kfwer_heatmap(rows: &[ReportRow], path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_kfwer_heatmap(rows, file)
}
