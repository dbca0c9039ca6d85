use super::{Boundary, BoundaryMode, Energies, ProcessSpec, ProcessStep};
use crate::error::Result;
use crate::maps::DensityMatrix;
use crate::potential::{build_dual, build_potential_structure};
use crate::tolerance::Tolerances;

/// Dual steps in reverse order. The dual starts in `A ρ_f A†` measured in
/// the transformed final basis and ends in the transformed initial basis, so
/// outcome indices of forward and dual trajectories correspond one to one.
pub fn build_dual_process(spec: &ProcessSpec, tol: &Tolerances) -> Result<ProcessSpec> {
    let a = &spec.symmetry;
    let mut steps = Vec::with_capacity(spec.steps.len());
    for step in spec.steps.iter().rev() {
        let dual = build_dual(&step.map, &step.structure.pi, a, tol)?;
        let structure = build_potential_structure(&dual.map, &dual.pi_dual, tol)?;
        steps.push(ProcessStep {
            map: dual.map,
            structure,
            reservoir_beta: step.reservoir_beta,
        });
    }

    let b = &spec.boundary;
    let initial_basis = a.transform_basis(&b.final_basis);
    let final_basis = a.transform_basis(&b.initial_basis);
    let initial_state = DensityMatrix::from_spectrum(&initial_basis, &b.final_populations, tol)?;
    let boundary = Boundary {
        initial_basis,
        initial_populations: b.final_populations.clone(),
        final_basis,
        final_populations: b.initial_populations.clone(),
        energies: b.energies.as_ref().map(|e| Energies {
            beta: e.beta,
            initial_levels: e.final_levels.clone(),
            final_levels: e.initial_levels.clone(),
            free_initial: e.free_final,
            free_final: e.free_initial,
        }),
    };
    let mode = match &spec.mode {
        BoundaryMode::Entropic => BoundaryMode::Entropic,
        BoundaryMode::Equilibrium {
            beta,
            h_initial,
            h_final,
        } => BoundaryMode::Equilibrium {
            beta: *beta,
            h_initial: a.conjugate_operator(h_final),
            h_final: a.conjugate_operator(h_initial),
        },
    };
    Ok(ProcessSpec {
        steps,
        initial_state,
        mode,
        symmetry: a.clone(),
        boundary,
    })
}
