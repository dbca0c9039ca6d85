//! Concatenated processes, their trajectories and boundary terms.

mod dual;
mod enumerate;
mod sample;
mod verify;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{apply_map, DensityMatrix, KrausMap};
use crate::numerics::{hermitian_eig, ComplexMatrix};
use crate::potential::{build_potential_structure, PotentialStructure, SymmetryOp};
use crate::tolerance::Tolerances;

pub use dual::build_dual_process;
pub use enumerate::{enumerate_trajectories, enumerate_with_cap, trajectory_probability, DEFAULT_BRANCH_CAP};
pub use sample::{sample_ensemble, sample_trajectory, trajectory_rng};
pub use verify::{
    chi_square_test, histogram, verify_detailed_ft, verify_detailed_ft_against, verify_integral_ft, work_statistics,
    ChiSquareReport, DetailedFTReport, HistogramBin, IntegralFTReport, WorkReport, DETAILED_FT_TOLERANCE,
    INTEGRAL_FT_TOLERANCE,
};

/// One map of a concatenation, classified against its own invariant state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessStep {
    pub map: KrausMap,
    pub structure: PotentialStructure,
    /// Inverse temperature of the reservoir driving this step. Used only for
    /// heat bookkeeping; defaults to the boundary `β` when absent.
    pub reservoir_beta: Option<f64>,
}

impl ProcessStep {
    pub fn new(map: KrausMap, pi: &DensityMatrix, tol: &Tolerances) -> Result<Self> {
        let structure = build_potential_structure(&map, pi, tol)?;
        Ok(Self {
            map,
            structure,
            reservoir_beta: None,
        })
    }

    pub fn with_reservoir_beta(mut self, beta: f64) -> Self {
        self.reservoir_beta = Some(beta);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BoundaryMode {
    Entropic,
    Equilibrium {
        beta: f64,
        h_initial: ComplexMatrix,
        h_final: ComplexMatrix,
    },
}

impl BoundaryMode {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryMode::Entropic => "entropic",
            BoundaryMode::Equilibrium { .. } => "equilibrium",
        }
    }
}

/// Measurement bases and reference populations at both ends of a process.
///
/// Bases are stored as columns. `final_populations` are the reference
/// populations entering `σ(n, m)`: the eigenvalues of `ρ_f` in entropic mode,
/// the Gibbs weights of `H_f` in equilibrium mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Boundary {
    pub initial_basis: ComplexMatrix,
    pub initial_populations: Vec<f64>,
    pub final_basis: ComplexMatrix,
    pub final_populations: Vec<f64>,
    pub energies: Option<Energies>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Energies {
    pub beta: f64,
    pub initial_levels: Vec<f64>,
    pub final_levels: Vec<f64>,
    pub free_initial: f64,
    pub free_final: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub steps: Vec<ProcessStep>,
    pub initial_state: DensityMatrix,
    pub mode: BoundaryMode,
    pub symmetry: SymmetryOp,
    pub boundary: Boundary,
}

fn check_steps(steps: &[ProcessStep], n: usize) -> Result<()> {
    for s in steps {
        if s.map.dim() != n {
            return Err(Error::DimensionMismatch {
                op: "process step",
                left: (n, n),
                right: (s.map.dim(), s.map.dim()),
            });
        }
    }
    Ok(())
}

/// `F = −β⁻¹ ln Σ e^{−βE}`, shifted by the ground energy for stability.
pub fn free_energy(energies: &[f64], beta: f64) -> f64 {
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = energies.iter().map(|e| (-beta * (e - min)).exp()).sum();
    min - z.ln() / beta
}

fn gibbs(energies: &[f64], beta: f64, free: f64) -> Vec<f64> {
    energies.iter().map(|e| (beta * (free - e)).exp()).collect()
}

fn clamp_populations(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&x| x.max(0.0)).collect()
}

impl ProcessSpec {
    /// Boundaries from the eigenbases of `ρ_i` and of the evolved `ρ_f`.
    pub fn entropic(
        steps: Vec<ProcessStep>,
        initial_state: DensityMatrix,
        symmetry: SymmetryOp,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = initial_state.dim();
        check_steps(&steps, n)?;
        if symmetry.dim() != n {
            return Err(Error::DimensionMismatch {
                op: "process symmetry",
                left: (n, n),
                right: (symmetry.dim(), symmetry.dim()),
            });
        }
        let mut rho = initial_state.clone();
        for s in &steps {
            rho = apply_map(&s.map, &rho, tol)?;
        }
        let ei = initial_state.eigen(tol)?;
        let ef = rho.eigen(tol)?;
        let boundary = Boundary {
            initial_basis: ei.eigenvectors,
            initial_populations: clamp_populations(&ei.eigenvalues),
            final_basis: ef.eigenvectors,
            final_populations: clamp_populations(&ef.eigenvalues),
            energies: None,
        };
        Ok(Self {
            steps,
            initial_state,
            mode: BoundaryMode::Entropic,
            symmetry,
            boundary,
        })
    }

    /// Boundaries from the eigenbases of `H_i`, `H_f`, with `ρ_i` the Gibbs
    /// state of `H_i` at `β`.
    pub fn equilibrium(
        steps: Vec<ProcessStep>,
        beta: f64,
        h_initial: ComplexMatrix,
        h_final: ComplexMatrix,
        symmetry: SymmetryOp,
        tol: &Tolerances,
    ) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        let n = h_initial.rows();
        if h_final.shape() != h_initial.shape() || symmetry.dim() != n {
            return Err(Error::DimensionMismatch {
                op: "equilibrium boundary",
                left: h_initial.shape(),
                right: h_final.shape(),
            });
        }
        check_steps(&steps, n)?;
        let ei = hermitian_eig(&h_initial, tol)?;
        let ef = hermitian_eig(&h_final, tol)?;
        let free_initial = free_energy(&ei.eigenvalues, beta);
        let free_final = free_energy(&ef.eigenvalues, beta);
        let p_i = gibbs(&ei.eigenvalues, beta, free_initial);
        let q_f = gibbs(&ef.eigenvalues, beta, free_final);
        let initial_state = DensityMatrix::from_spectrum(&ei.eigenvectors, &p_i, tol)?;
        let boundary = Boundary {
            initial_basis: ei.eigenvectors,
            initial_populations: p_i,
            final_basis: ef.eigenvectors,
            final_populations: q_f,
            energies: Some(Energies {
                beta,
                initial_levels: ei.eigenvalues,
                final_levels: ef.eigenvalues,
                free_initial,
                free_final,
            }),
        };
        Ok(Self {
            steps,
            initial_state,
            mode: BoundaryMode::Equilibrium {
                beta,
                h_initial,
                h_final,
            },
            symmetry,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.initial_state.dim()
    }

    /// `ρ_f = E_R … E_1(ρ_i)`.
    pub fn final_state(&self, tol: &Tolerances) -> Result<DensityMatrix> {
        let mut rho = self.initial_state.clone();
        for s in &self.steps {
            rho = apply_map(&s.map, &rho, tol)?;
        }
        Ok(rho)
    }
}

/// `σ(n, m)`: `ln p_i(n) − ln p_f(m)` (entropic) or
/// `β(E^f_m − E^i_n − F_f + F_i)` (equilibrium).
pub fn sigma_boundary(spec: &ProcessSpec, n: usize, m: usize, tol: &Tolerances) -> Result<f64> {
    let b = &spec.boundary;
    let dim = spec.dim();
    for &idx in &[n, m] {
        if idx >= dim {
            return Err(Error::IndexOutOfRange { index: idx, len: dim });
        }
    }
    if let Some(e) = &b.energies {
        return Ok(e.beta * (e.final_levels[m] - e.initial_levels[n] - e.free_final + e.free_initial));
    }
    let (p, q) = (b.initial_populations[n], b.final_populations[m]);
    for &v in &[p, q] {
        if v <= tol.prob {
            return Err(Error::ZeroProbabilityBranch {
                probability: v,
                tolerance: tol.prob,
            });
        }
    }
    Ok(p.ln() - q.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub n: usize,
    pub ks: Vec<usize>,
    pub m: usize,
    /// Exact branch probability, or 1 for a sampled trajectory.
    pub probability: f64,
    pub sigma_boundary: f64,
    pub delta_phi_sum: f64,
    /// `σ(n, m) − Σ_r ΔΦ(k_r)`.
    pub sigma: f64,
}

impl Trajectory {
    pub fn key(&self) -> (usize, Vec<usize>, usize) {
        (self.n, self.ks.clone(), self.m)
    }

    /// `(m, k_R … k_1, n)`.
    pub fn reversed_key(&self) -> (usize, Vec<usize>, usize) {
        let mut ks = self.ks.clone();
        ks.reverse();
        (self.m, ks, self.n)
    }
}

pub(crate) fn make_trajectory(
    spec: &ProcessSpec,
    n: usize,
    ks: Vec<usize>,
    m: usize,
    probability: f64,
    tol: &Tolerances,
) -> Result<Trajectory> {
    let sigma_b = sigma_boundary(spec, n, m, tol)?;
    let delta_phi_sum: f64 = ks.iter().zip(&spec.steps).map(|(&k, s)| s.structure.delta_phi[k]).sum();
    Ok(Trajectory {
        n,
        ks,
        m,
        probability,
        sigma_boundary: sigma_b,
        delta_phi_sum,
        sigma: sigma_b - delta_phi_sum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleMode {
    Exact,
    MonteCarlo { seed: u64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryEnsemble {
    pub trajectories: Vec<Trajectory>,
    pub mode: EnsembleMode,
    /// Branches dropped at or below the probability floor (exact mode).
    pub pruned: usize,
}

impl TrajectoryEnsemble {
    /// Probability weight of each trajectory: exact probability, or `1/N`.
    pub fn weights(&self) -> Vec<f64> {
        match self.mode {
            EnsembleMode::Exact => self.trajectories.iter().map(|t| t.probability).collect(),
            EnsembleMode::MonteCarlo { .. } => {
                let w = 1.0 / self.trajectories.len() as f64;
                vec![w; self.trajectories.len()]
            }
        }
    }

    pub fn total_probability(&self) -> f64 {
        compensated_sum(self.weights())
    }

    /// `⟨Σ⟩`.
    pub fn mean_sigma(&self) -> f64 {
        compensated_sum(self.trajectories.iter().zip(self.weights()).map(|(t, w)| w * t.sigma))
    }

    pub fn max_abs_sigma(&self) -> f64 {
        self.trajectories.iter().map(|t| t.sigma.abs()).fold(0.0, f64::max)
    }
}

/// Neumaier summation in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
