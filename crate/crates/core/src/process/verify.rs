use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{
    build_dual_process, compensated_sum, enumerate_trajectories, trajectory_probability, EnsembleMode, ProcessSpec,
    TrajectoryEnsemble,
};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Branchwise bound on `|ln(p/p̃) − Σ|`.
pub const DETAILED_FT_TOLERANCE: f64 = 1e-9;

/// Bound on `|Σ p e^{−Σ} − 1|` for exact ensembles.
pub const INTEGRAL_FT_TOLERANCE: f64 = 1e-12;

/// Chi-square bins with expected count below this are pooled.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetailedFTReport {
    pub branches: usize,
    pub dual_branches: usize,
    pub max_residual: f64,
    /// Trajectory `(n, ks, m)` attaining the maximum.
    pub worst: Option<String>,
    pub tolerance: f64,
    pub passed: bool,
}

fn describe(key: &(usize, Vec<usize>, usize)) -> String {
    let ks: Vec<String> = key.1.iter().map(|k| k.to_string()).collect();
    format!("({}; {}; {})", key.0, ks.join(","), key.2)
}

/// Compares every forward branch with its reverse in the dual process.
pub fn verify_detailed_ft(spec: &ProcessSpec, tol: &Tolerances) -> Result<DetailedFTReport> {
    let dual = build_dual_process(spec, tol)?;
    verify_detailed_ft_against(spec, &dual, tol)
}

/// As [`verify_detailed_ft`], with the reverse process supplied.
pub fn verify_detailed_ft_against(
    spec: &ProcessSpec,
    dual: &ProcessSpec,
    tol: &Tolerances,
) -> Result<DetailedFTReport> {
    let forward = enumerate_trajectories(spec, tol)?;
    let reverse = enumerate_trajectories(dual, tol)?;
    let lookup: HashMap<(usize, Vec<usize>, usize), f64> =
        reverse.trajectories.iter().map(|t| (t.key(), t.probability)).collect();

    let mut max_residual = 0.0f64;
    let mut worst = None;
    for t in &forward.trajectories {
        let key = t.reversed_key();
        // Reverse branches pruned at ε_prob are recomputed; only a reverse
        // probability negligible against the forward one is treated as zero.
        let p_rev = match lookup.get(&key) {
            Some(&p) => p,
            None => trajectory_probability(dual, key.0, &key.1, key.2)?,
        };
        if p_rev.is_nan() || p_rev <= t.probability * f64::EPSILON {
            return Err(Error::AbsoluteContinuityViolation {
                trajectory: describe(&t.key()),
                forward: t.probability,
                reverse: p_rev,
            });
        }
        let residual = ((t.probability / p_rev).ln() - t.sigma).abs();
        if residual > max_residual || worst.is_none() {
            max_residual = max_residual.max(residual);
            worst = Some(describe(&t.key()));
        }
    }
    Ok(DetailedFTReport {
        branches: forward.trajectories.len(),
        dual_branches: reverse.trajectories.len(),
        max_residual,
        worst,
        tolerance: DETAILED_FT_TOLERANCE,
        passed: max_residual <= DETAILED_FT_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralFTReport {
    pub mode: EnsembleMode,
    pub trajectories: usize,
    pub total_probability: f64,
    /// `⟨e^{−Σ}⟩`.
    pub mean_exp_minus_sigma: f64,
    /// `|⟨e^{−Σ}⟩ − 1|`.
    pub deviation: f64,
    pub standard_error: Option<f64>,
    pub z_score: Option<f64>,
    pub mean_sigma: f64,
    pub max_abs_sigma: f64,
}

pub fn verify_integral_ft(ensemble: &TrajectoryEnsemble) -> Result<IntegralFTReport> {
    if ensemble.trajectories.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory ensemble".into()));
    }
    let weights = ensemble.weights();
    let values: Vec<f64> = ensemble.trajectories.iter().map(|t| (-t.sigma).exp()).collect();
    let mean = compensated_sum(values.iter().zip(&weights).map(|(v, w)| v * w));
    let (standard_error, z_score) = match ensemble.mode {
        EnsembleMode::Exact => (None, None),
        EnsembleMode::MonteCarlo { .. } => {
            let n = values.len() as f64;
            let var = if values.len() > 1 {
                compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1.0)
            } else {
                0.0
            };
            let se = (var / n).sqrt();
            let z = if se > 0.0 { (mean - 1.0) / se } else { 0.0 };
            (Some(se), Some(z))
        }
    };
    Ok(IntegralFTReport {
        mode: ensemble.mode,
        trajectories: ensemble.trajectories.len(),
        total_probability: ensemble.total_probability(),
        mean_exp_minus_sigma: mean,
        deviation: (mean - 1.0).abs(),
        standard_error,
        z_score,
        mean_sigma: ensemble.mean_sigma(),
        max_abs_sigma: ensemble.max_abs_sigma(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkReport {
    pub beta: f64,
    /// `F_f − F_i`.
    pub delta_f: f64,
    pub mean_work: f64,
    /// `⟨e^{−β(W − ΔF)}⟩`.
    pub mean_exp_dissipated: f64,
    pub deviation: f64,
    /// Largest `|β(W − ΔF) − Σ|`; zero when every reservoir sits at the
    /// boundary temperature.
    pub max_sigma_mismatch: f64,
}

/// Work `W = ΔE_{nm} + Q` with heat released `Q = −Σ_r ΔΦ(k_r)/β_r`.
pub fn work_statistics(spec: &ProcessSpec, ensemble: &TrajectoryEnsemble) -> Result<WorkReport> {
    let energies = spec.boundary.energies.as_ref().ok_or(Error::BoundaryModeMismatch {
        expected: "equilibrium",
    })?;
    if ensemble.trajectories.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory ensemble".into()));
    }
    let beta = energies.beta;
    let delta_f = energies.free_final - energies.free_initial;
    let weights = ensemble.weights();
    let mut works = Vec::with_capacity(weights.len());
    let mut mismatch = 0.0f64;
    for t in &ensemble.trajectories {
        let de = energies.final_levels[t.m] - energies.initial_levels[t.n];
        let q: f64 =
            t.ks.iter()
                .zip(&spec.steps)
                .map(|(&k, s)| -s.structure.delta_phi[k] / s.reservoir_beta.unwrap_or(beta))
                .sum();
        let w = de + q;
        mismatch = mismatch.max((beta * (w - delta_f) - t.sigma).abs());
        works.push(w);
    }
    let mean_work = compensated_sum(works.iter().zip(&weights).map(|(w, p)| w * p));
    let mean_exp = compensated_sum(
        works
            .iter()
            .zip(&weights)
            .map(|(w, p)| p * (-beta * (w - delta_f)).exp()),
    );
    Ok(WorkReport {
        beta,
        delta_f,
        mean_work,
        mean_exp_dissipated: mean_exp,
        deviation: (mean_exp - 1.0).abs(),
        max_sigma_mismatch: mismatch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareReport {
    pub bins: usize,
    pub degrees_of_freedom: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson test of sampled branch frequencies against exact probabilities.
/// Branches expected fewer than five times are pooled into one bin, together
/// with any sampled branch missing from the exact ensemble.
pub fn chi_square_test(exact: &TrajectoryEnsemble, sampled: &TrajectoryEnsemble) -> Result<ChiSquareReport> {
    let n = sampled.trajectories.len() as f64;
    if n == 0.0 || exact.trajectories.is_empty() {
        return Err(Error::InvalidParameter(
            "chi-square test needs two nonempty ensembles".into(),
        ));
    }
    let mut observed: HashMap<(usize, Vec<usize>, usize), f64> = HashMap::new();
    for t in &sampled.trajectories {
        *observed.entry(t.key()).or_insert(0.0) += 1.0;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pool_e, mut pool_o) = (0.0, 0.0);
    let mut matched = 0.0;
    for t in &exact.trajectories {
        let e = n * t.probability;
        let o = observed.get(&t.key()).copied().unwrap_or(0.0);
        matched += o;
        if e >= MIN_EXPECTED {
            bins.push((e, o));
        } else {
            pool_e += e;
            pool_o += o;
        }
    }
    pool_o += n - matched;
    pool_e += (n - n * exact.total_probability()).max(0.0);
    if pool_e > 0.0 || pool_o > 0.0 {
        if pool_e >= MIN_EXPECTED || bins.is_empty() {
            bins.push((pool_e, pool_o));
        } else {
            let smallest = bins
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
                .map(|(i, _)| i)
                .unwrap();
            bins[smallest].0 += pool_e;
            bins[smallest].1 += pool_o;
        }
    }
    let statistic: f64 = bins
        .iter()
        .map(|&(e, o)| {
            if e > 0.0 {
                (o - e).powi(2) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else if statistic.is_infinite() {
        0.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        dist.sf(statistic)
    };
    Ok(ChiSquareReport {
        bins: bins.len(),
        degrees_of_freedom: dof,
        statistic,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub probability: f64,
}

/// Histogram of `Σ` with bins `[(i − ½)w, (i + ½)w)` centered on multiples of `w`.
pub fn histogram(ensemble: &TrajectoryEnsemble, bin_width: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let mut bins: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (t, w) in ensemble.trajectories.iter().zip(ensemble.weights()) {
        let idx = (t.sigma / bin_width).round() as i64;
        bins.entry(idx).or_default().push(w);
    }
    Ok(bins
        .into_iter()
        .map(|(i, ws)| HistogramBin {
            bin_left: (i as f64 - 0.5) * bin_width,
            bin_right: (i as f64 + 0.5) * bin_width,
            probability: compensated_sum(ws),
        })
        .collect())
}
