use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{make_trajectory, EnsembleMode, ProcessSpec, Trajectory, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::numerics::{inner, norm_sqr, C64};
use crate::tolerance::Tolerances;

/// Independent stream for trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw(weights: &[f64], u: f64) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if target < acc {
            return Some(i);
        }
    }
    last
}

fn dead_end() -> Error {
    Error::ZeroProbabilityBranch {
        probability: 0.0,
        tolerance: 0.0,
    }
}

/// Draws `n` from the initial populations, unravels the pure state through
/// every step with Born weights `‖M_k ψ‖²`, and measures in the final basis.
pub fn sample_trajectory<R: Rng + ?Sized>(spec: &ProcessSpec, rng: &mut R, tol: &Tolerances) -> Result<Trajectory> {
    let b = &spec.boundary;
    let n = draw(&b.initial_populations, rng.gen::<f64>()).ok_or_else(dead_end)?;
    let mut psi = b.initial_basis.column(n);
    let mut ks = Vec::with_capacity(spec.steps.len());
    for step in &spec.steps {
        let branches: Vec<Vec<C64>> = step
            .map
            .operators()
            .iter()
            .map(|m| m.mat_vec(&psi))
            .collect::<Result<_>>()?;
        let weights: Vec<f64> = branches.iter().map(|v| norm_sqr(v)).collect();
        let k = draw(&weights, rng.gen::<f64>()).ok_or_else(dead_end)?;
        let norm = weights[k].sqrt();
        psi = branches[k].iter().map(|z| z / norm).collect();
        ks.push(k);
    }
    let weights: Vec<f64> = (0..spec.dim())
        .map(|m| inner(&b.final_basis.column(m), &psi).norm_sqr())
        .collect();
    let m = draw(&weights, rng.gen::<f64>()).ok_or_else(dead_end)?;
    make_trajectory(spec, n, ks, m, 1.0, tol)
}

/// `samples` trajectories, trajectory `i` drawn from [`trajectory_rng`]`(seed, i)`.
/// The output does not depend on thread scheduling.
pub fn sample_ensemble(spec: &ProcessSpec, seed: u64, samples: usize, tol: &Tolerances) -> Result<TrajectoryEnsemble> {
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let trajectories = (0..samples as u64)
        .into_par_iter()
        .map(|i| sample_trajectory(spec, &mut trajectory_rng(seed, i), tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryEnsemble {
        trajectories,
        mode: EnsembleMode::MonteCarlo { seed, samples },
        pruned: 0,
    })
}
