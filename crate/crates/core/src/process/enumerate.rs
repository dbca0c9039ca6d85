use super::{make_trajectory, EnsembleMode, ProcessSpec, Trajectory, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::numerics::{inner, norm_sqr, C64};
use crate::tolerance::Tolerances;

/// Largest `dim × Π K_r × dim` enumerated by default.
pub const DEFAULT_BRANCH_CAP: f64 = 1e7;

pub fn enumerate_trajectories(spec: &ProcessSpec, tol: &Tolerances) -> Result<TrajectoryEnsemble> {
    enumerate_with_cap(spec, DEFAULT_BRANCH_CAP, tol)
}

/// Depth-first enumeration of every branch whose probability exceeds
/// `tol.prob`. Partial branches are pruned as soon as their weight
/// `p_i(n) ‖M…ψ_n‖²` drops to the floor.
pub fn enumerate_with_cap(spec: &ProcessSpec, cap: f64, tol: &Tolerances) -> Result<TrajectoryEnsemble> {
    let dim = spec.dim();
    let branches = spec
        .steps
        .iter()
        .fold((dim * dim) as f64, |acc, s| acc * s.map.len() as f64);
    if branches > cap {
        return Err(Error::EnumerationTooLarge { branches, cap });
    }

    let finals = spec.boundary.final_basis.columns();
    let mut out = Vec::new();
    let mut pruned = 0usize;
    let mut ks = Vec::with_capacity(spec.steps.len());
    for (n, &p) in spec.boundary.initial_populations.iter().enumerate() {
        if p <= tol.prob {
            pruned += 1;
            continue;
        }
        let psi = spec.boundary.initial_basis.column(n);
        descend(spec, &finals, n, p, psi, &mut ks, &mut out, &mut pruned, tol)?;
    }
    Ok(TrajectoryEnsemble {
        trajectories: out,
        mode: EnsembleMode::Exact,
        pruned,
    })
}

#[allow(clippy::too_many_arguments)]
fn descend(
    spec: &ProcessSpec,
    finals: &[Vec<C64>],
    n: usize,
    p_n: f64,
    amp: Vec<C64>,
    ks: &mut Vec<usize>,
    out: &mut Vec<Trajectory>,
    pruned: &mut usize,
    tol: &Tolerances,
) -> Result<()> {
    let r = ks.len();
    if r == spec.steps.len() {
        for (m, phi) in finals.iter().enumerate() {
            let p = p_n * inner(phi, &amp).norm_sqr();
            if p <= tol.prob {
                *pruned += 1;
                continue;
            }
            out.push(make_trajectory(spec, n, ks.clone(), m, p, tol)?);
        }
        return Ok(());
    }
    for (k, op) in spec.steps[r].map.operators().iter().enumerate() {
        let next = op.mat_vec(&amp)?;
        if p_n * norm_sqr(&next) <= tol.prob {
            *pruned += 1;
            continue;
        }
        ks.push(k);
        descend(spec, finals, n, p_n, next, ks, out, pruned, tol)?;
        ks.pop();
    }
    Ok(())
}

/// `p_i(n) |⟨φ_m| M_{k_R} … M_{k_1} |ψ_n⟩|²` without pruning.
pub fn trajectory_probability(spec: &ProcessSpec, n: usize, ks: &[usize], m: usize) -> Result<f64> {
    let dim = spec.dim();
    if n >= dim || m >= dim {
        return Err(Error::IndexOutOfRange {
            index: n.max(m),
            len: dim,
        });
    }
    if ks.len() != spec.steps.len() {
        return Err(Error::InvalidParameter(format!(
            "trajectory has {} operations for {} steps",
            ks.len(),
            spec.steps.len()
        )));
    }
    let mut amp = spec.boundary.initial_basis.column(n);
    for (&k, s) in ks.iter().zip(&spec.steps) {
        amp = s.map.operator(k)?.mat_vec(&amp)?;
    }
    let phi = spec.boundary.final_basis.column(m);
    Ok(spec.boundary.initial_populations[n] * inner(&phi, &amp).norm_sqr())
}
