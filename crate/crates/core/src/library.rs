//! A fixed collection of small, exactly enumerable processes spanning
//! unital, thermal, concatenated, discretized and multi-reservoir dynamics.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use crate::error::Result;
use crate::maps::{invariant_state, DensityMatrix, KrausMap};
use crate::models::{
    dephasing_map, gibbs_populations, lindblad_step, multi_reservoir_step, projective_measurement, thermal_lindblads,
    thermal_qubit_map, unitary_map, Reservoir,
};
use crate::numerics::{basis_vector, unitary_evolution, ComplexMatrix, C64};
use crate::potential::SymmetryOp;
use crate::process::{ProcessSpec, ProcessStep};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone)]
pub struct LibraryEntry {
    pub name: &'static str,
    pub family: &'static str,
    /// Entropic boundaries with `ρ_i` invariant under every step.
    pub stationary: bool,
    pub spec: ProcessSpec,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn qubit_state(p0: f64, coherence: C64, tol: &Tolerances) -> Result<DensityMatrix> {
    DensityMatrix::new(
        ComplexMatrix::from_rows(&[vec![c(p0, 0.0), coherence], vec![coherence.conj(), c(1.0 - p0, 0.0)]])?,
        tol,
    )
}

fn drive(tol: &Tolerances) -> Result<ComplexMatrix> {
    let h = ComplexMatrix::from_rows(&[vec![c(0.4, 0.0), c(0.3, 0.6)], vec![c(0.3, -0.6), c(-0.2, 0.0)]])?;
    unitary_evolution(&h, 0.8, tol)
}

fn x_basis() -> Vec<Vec<C64>> {
    let s = c(FRAC_1_SQRT_2, 0.0);
    vec![vec![s, s], vec![s, -s]]
}

fn z_basis(n: usize) -> Vec<Vec<C64>> {
    (0..n).map(|i| basis_vector(n, i)).collect()
}

fn unital(map: KrausMap, tol: &Tolerances) -> Result<ProcessStep> {
    let n = map.dim();
    ProcessStep::new(map, &DensityMatrix::maximally_mixed(n), tol)
}

fn thermal(beta_omega: f64, gamma: f64, tol: &Tolerances) -> Result<ProcessStep> {
    let map = thermal_qubit_map(beta_omega, gamma, tol)?;
    let p = 1.0 / (1.0 + (-beta_omega).exp());
    ProcessStep::new(map, &DensityMatrix::diagonal(&[p, 1.0 - p], tol)?, tol)
}

fn computed(map: KrausMap, tol: &Tolerances) -> Result<ProcessStep> {
    let pi = invariant_state(&map, tol)?;
    ProcessStep::new(map, &pi, tol)
}

/// Thermal ladder on `n` levels with nearest-neighbour jumps at `β`.
pub fn ladder_lindblads(energies: &[f64], beta: f64, rate: f64) -> Vec<ComplexMatrix> {
    let n = energies.len();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        let gap = energies[i + 1] - energies[i];
        out.push(ComplexMatrix::unit(n, i, i + 1).scale_real(rate.sqrt()));
        out.push(ComplexMatrix::unit(n, i + 1, i).scale_real((rate * (-beta * gap).exp()).sqrt()));
    }
    out
}

fn two_reservoir_steps(repeats: usize, tol: &Tolerances) -> Result<Vec<ProcessStep>> {
    let h = ComplexMatrix::diag_real(&[0.0, 1.0]);
    let reservoirs = [LN_2, 3.0f64.ln()]
        .iter()
        .map(|&beta| {
            Ok(Reservoir {
                lindblads: thermal_lindblads(beta, 1.0),
                pi: DensityMatrix::diagonal(&gibbs_populations(&[0.0, 1.0], beta), tol)?,
                beta: Some(beta),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let block = multi_reservoir_step(&h, &reservoirs, 0.1, tol)?;
    Ok((0..repeats).flat_map(|_| block.clone()).collect())
}

pub fn model_library(tol: &Tolerances) -> Result<Vec<LibraryEntry>> {
    let theta2 = SymmetryOp::time_reversal(2);
    let mut out = Vec::new();

    out.push(LibraryEntry {
        name: "unitary_then_measurement",
        family: "unital",
        stationary: false,
        spec: ProcessSpec::entropic(
            vec![
                unital(unitary_map(drive(tol)?, tol)?, tol)?,
                unital(projective_measurement(&x_basis(), tol)?, tol)?,
            ],
            qubit_state(0.8, c(0.1, 0.15), tol)?,
            theta2.clone(),
            tol,
        )?,
    });

    out.push(LibraryEntry {
        name: "unital_chain",
        family: "unital",
        stationary: false,
        spec: ProcessSpec::entropic(
            vec![
                unital(unitary_map(drive(tol)?, tol)?, tol)?,
                unital(dephasing_map(&z_basis(2), 0.4, tol)?, tol)?,
                unital(projective_measurement(&x_basis(), tol)?, tol)?,
            ],
            qubit_state(0.9, c(-0.05, 0.2), tol)?,
            theta2.clone(),
            tol,
        )?,
    });

    let h = ComplexMatrix::diag_real(&[0.0, 1.0]);
    out.push(LibraryEntry {
        name: "unital_equilibrium",
        family: "unital",
        stationary: false,
        spec: ProcessSpec::equilibrium(
            vec![
                unital(unitary_map(drive(tol)?, tol)?, tol)?,
                unital(projective_measurement(&x_basis(), tol)?, tol)?,
            ],
            0.7,
            h.clone(),
            h.clone(),
            theta2.clone(),
            tol,
        )?,
    });

    out.push(LibraryEntry {
        name: "sudden_quench",
        family: "unital",
        stationary: false,
        spec: ProcessSpec::equilibrium(
            vec![unital(unitary_map(ComplexMatrix::identity(2), tol)?, tol)?],
            LN_2,
            h.clone(),
            ComplexMatrix::diag_real(&[0.0, 2.0]),
            theta2.clone(),
            tol,
        )?,
    });

    let pi = DensityMatrix::diagonal(&[2.0 / 3.0, 1.0 / 3.0], tol)?;
    out.push(LibraryEntry {
        name: "gad_stationary",
        family: "thermal",
        stationary: true,
        spec: ProcessSpec::entropic(vec![thermal(LN_2, 0.5, tol)?; 3], pi, theta2.clone(), tol)?,
    });

    out.push(LibraryEntry {
        name: "gad_relaxation",
        family: "thermal",
        stationary: false,
        spec: ProcessSpec::entropic(
            vec![thermal(LN_2, 0.5, tol)?; 3],
            DensityMatrix::diagonal(&[0.9, 0.1], tol)?,
            theta2.clone(),
            tol,
        )?,
    });

    out.push(LibraryEntry {
        name: "gad_concatenation",
        family: "gad_concatenation",
        stationary: false,
        spec: ProcessSpec::entropic(
            vec![
                thermal(LN_2, 0.3, tol)?,
                thermal(1.5, 0.6, tol)?,
                thermal(-0.4, 0.8, tol)?,
                thermal(0.2, 1.0, tol)?,
            ],
            qubit_state(0.35, c(0.2, -0.1), tol)?,
            theta2.clone(),
            tol,
        )?,
    });

    out.push(LibraryEntry {
        name: "thermal_equilibrium_stationary",
        family: "thermal",
        stationary: false,
        spec: ProcessSpec::equilibrium(
            vec![thermal(0.9, 0.4, tol)?.with_reservoir_beta(0.9); 2],
            0.9,
            h.clone(),
            h.clone(),
            theta2.clone(),
            tol,
        )?,
    });

    let h_quenched = ComplexMatrix::diag_real(&[0.0, 1.6]);
    out.push(LibraryEntry {
        name: "thermal_quench",
        family: "thermal",
        stationary: false,
        spec: ProcessSpec::equilibrium(
            vec![
                unital(unitary_map(drive(tol)?, tol)?, tol)?,
                thermal(0.9 * 1.6, 0.5, tol)?.with_reservoir_beta(0.9),
            ],
            0.9,
            h.clone(),
            h_quenched,
            theta2.clone(),
            tol,
        )?,
    });

    let lindblad = lindblad_step(&h, &thermal_lindblads(0.8, 1.0), 0.05, tol)?;
    out.push(LibraryEntry {
        name: "lindblad_thermal_qubit",
        family: "lindblad",
        stationary: false,
        spec: ProcessSpec::entropic(
            vec![computed(lindblad.map, tol)?; 3],
            qubit_state(0.25, c(0.1, 0.05), tol)?,
            theta2.clone(),
            tol,
        )?,
    });

    let levels = [0.0, 1.0, 2.5];
    let qutrit = lindblad_step(
        &ComplexMatrix::diag_real(&levels),
        &ladder_lindblads(&levels, 0.7, 1.0),
        0.05,
        tol,
    )?;
    let rho3 = DensityMatrix::new(
        ComplexMatrix::from_rows(&[
            vec![c(0.2, 0.0), c(0.05, 0.02), c(0.0, 0.01)],
            vec![c(0.05, -0.02), c(0.3, 0.0), c(0.04, 0.0)],
            vec![c(0.0, -0.01), c(0.04, 0.0), c(0.5, 0.0)],
        ])?,
        tol,
    )?;
    out.push(LibraryEntry {
        name: "qutrit_thermal_ladder",
        family: "lindblad",
        stationary: false,
        spec: ProcessSpec::entropic(
            vec![computed(qutrit.map, tol)?; 2],
            rho3,
            SymmetryOp::time_reversal(3),
            tol,
        )?,
    });

    out.push(LibraryEntry {
        name: "two_reservoir",
        family: "two_reservoir",
        stationary: false,
        spec: ProcessSpec::entropic(
            two_reservoir_steps(2, tol)?,
            qubit_state(0.5, c(0.1, 0.0), tol)?,
            theta2.clone(),
            tol,
        )?,
    });

    out.push(LibraryEntry {
        name: "gad_then_dephasing",
        family: "thermal",
        stationary: false,
        spec: ProcessSpec::entropic(
            vec![
                thermal(1.2, 0.4, tol)?,
                unital(dephasing_map(&x_basis(), 0.5, tol)?, tol)?,
                thermal(1.2, 0.4, tol)?,
            ],
            qubit_state(0.6, c(0.15, 0.1), tol)?,
            theta2.clone(),
            tol,
        )?,
    });

    let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])?;
    out.push(LibraryEntry {
        name: "gad_flip_symmetry",
        family: "thermal",
        stationary: false,
        spec: ProcessSpec::entropic(
            vec![
                thermal(LN_2, 0.5, tol)?,
                unital(unitary_map(drive(tol)?, tol)?, tol)?,
                thermal(0.5, 0.7, tol)?,
            ],
            qubit_state(0.7, c(0.0, 0.2), tol)?,
            SymmetryOp::new(x, true)?,
            tol,
        )?,
    });

    Ok(out)
}
