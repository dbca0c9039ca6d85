//! Constructors for common map families: unitaries, measurements, thermal
//! qubit channels, discretized Lindblad evolution and multi-reservoir steps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{invariant_state, validate_cptp, DensityMatrix, KrausMap};
use crate::numerics::{hermitian_eig, log_of_positive, matrix_power_of_positive, ComplexMatrix, C64, I};
use crate::potential::build_potential_structure;
use crate::process::ProcessStep;
use crate::tolerance::Tolerances;

/// `max_k ‖L_k‖²_F dt` above which a discretization is flagged.
pub const ACCURACY_WARNING: f64 = 0.1;

const UNITARY_TOLERANCE: f64 = 1e-10;
const BASIS_TOLERANCE: f64 = 1e-10;

fn checked(map: KrausMap, tol: &Tolerances) -> Result<KrausMap> {
    let report = validate_cptp(&map, tol);
    if !report.passed {
        return Err(Error::NotTracePreserving {
            deviation: report.tp_deviation,
            tolerance: report.tolerance,
        });
    }
    Ok(map)
}

pub fn unitary_map(u: ComplexMatrix, tol: &Tolerances) -> Result<KrausMap> {
    if !u.is_square() {
        return Err(Error::InvalidMatrix("unitary must be square".into()));
    }
    let deviation = u.unitarity_deviation();
    if deviation > UNITARY_TOLERANCE {
        return Err(Error::NotUnitary {
            deviation,
            tolerance: UNITARY_TOLERANCE,
        });
    }
    checked(KrausMap::from_operators(vec![u])?.with_labels(vec!["U".into()])?, tol)
}

fn basis_matrix(basis: &[Vec<C64>]) -> Result<ComplexMatrix> {
    let n = basis.len();
    if n == 0 || basis.iter().any(|b| b.len() != n) {
        return Err(Error::InvalidBasis(format!(
            "expected a complete basis of {n} vectors of length {n}"
        )));
    }
    let b = ComplexMatrix::from_columns(basis)?;
    let deviation = b.unitarity_deviation();
    if deviation > BASIS_TOLERANCE {
        return Err(Error::InvalidBasis(format!(
            "basis is not orthonormal: deviation {deviation:e}"
        )));
    }
    Ok(b)
}

/// Rank-one projectors `|b_i⟩⟨b_i|` onto a complete orthonormal basis.
pub fn projective_measurement(basis: &[Vec<C64>], tol: &Tolerances) -> Result<KrausMap> {
    basis_matrix(basis)?;
    let ops = basis.iter().map(|b| ComplexMatrix::outer(b, b)).collect();
    let labels = (0..basis.len()).map(|i| format!("P{i}")).collect();
    checked(KrausMap::from_operators(ops)?.with_labels(labels)?, tol)
}

/// Generalized amplitude damping with Gibbs fixed point `diag(p, 1 − p)`,
/// `p = 1/(1 + e^{−βω})`, for levels `E₀ = 0`, `E₁ = ω`.
///
/// Operator order: stay (ground-weighted), decay `|0⟩⟨1|`, stay
/// (excited-weighted), excitation `|1⟩⟨0|`.
pub fn thermal_qubit_map(beta_omega: f64, gamma: f64, tol: &Tolerances) -> Result<KrausMap> {
    if !beta_omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta_omega must be finite, got {beta_omega}"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    let p = 1.0 / (1.0 + (-beta_omega).exp());
    let q = 1.0 - p;
    let ops = vec![
        ComplexMatrix::diag_real(&[1.0, (1.0 - gamma).sqrt()]).scale_real(p.sqrt()),
        ComplexMatrix::unit(2, 0, 1).scale_real((p * gamma).sqrt()),
        ComplexMatrix::diag_real(&[(1.0 - gamma).sqrt(), 1.0]).scale_real(q.sqrt()),
        ComplexMatrix::unit(2, 1, 0).scale_real((q * gamma).sqrt()),
    ];
    let labels = ["stay_ground", "decay", "stay_excited", "excite"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    checked(KrausMap::from_operators(ops)?.with_labels(labels)?, tol)
}

/// Scales off-diagonal elements in `basis` by `1 − strength`.
/// Zero-weight operators are left out.
pub fn dephasing_map(basis: &[Vec<C64>], strength: f64, tol: &Tolerances) -> Result<KrausMap> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::InvalidParameter(format!(
            "strength must lie in [0, 1], got {strength}"
        )));
    }
    basis_matrix(basis)?;
    let n = basis.len();
    let mut ops = Vec::new();
    let mut labels = Vec::new();
    if strength < 1.0 {
        ops.push(ComplexMatrix::identity(n).scale_real((1.0 - strength).sqrt()));
        labels.push("keep".to_string());
    }
    if strength > 0.0 {
        for (i, b) in basis.iter().enumerate() {
            ops.push(ComplexMatrix::outer(b, b).scale_real(strength.sqrt()));
            labels.push(format!("P{i}"));
        }
    }
    checked(KrausMap::from_operators(ops)?.with_labels(labels)?, tol)
}

/// A short-time Kraus map together with its first-order raw form.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedMap {
    /// Exactly trace-preserving operators.
    pub map: KrausMap,
    pub raw_operators: Vec<ComplexMatrix>,
    /// `‖Σ M†M − 1‖_F` before renormalization.
    pub raw_tp_deviation: f64,
    /// `max_k ‖L_k‖²_F dt`.
    pub accuracy_parameter: f64,
    pub warning: Option<String>,
}

fn renormalize(
    raw: Vec<ComplexMatrix>,
    labels: Vec<String>,
    accuracy: f64,
    tol: &Tolerances,
) -> Result<DiscretizedMap> {
    let n = raw[0].rows();
    let mut s = ComplexMatrix::zeros(n, n);
    for m in &raw {
        s = &s + &(&m.adjoint() * m);
    }
    let raw_tp_deviation = s.distance(&ComplexMatrix::identity(n));
    let r = matrix_power_of_positive(&s.hermitian_part(), -0.5, tol)?;
    let ops: Vec<ComplexMatrix> = raw.iter().map(|m| m * &r).collect();
    let map = checked(KrausMap::from_operators(ops)?.with_labels(labels)?, tol)?;
    let warning = (accuracy > ACCURACY_WARNING)
        .then(|| format!("max ‖L‖² dt = {accuracy:.3e} exceeds {ACCURACY_WARNING}; the step is coarse"));
    Ok(DiscretizedMap {
        map,
        raw_operators: raw,
        raw_tp_deviation,
        accuracy_parameter: accuracy,
        warning,
    })
}

fn check_generator(h: &ComplexMatrix, lindblads: &[ComplexMatrix], dt: f64, tol: &Tolerances) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !h.is_square() {
        return Err(Error::InvalidMatrix("Hamiltonian must be square".into()));
    }
    let deviation = h.hermitian_deviation();
    if deviation > tol.herm * h.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian {
            deviation,
            tolerance: tol.herm,
        });
    }
    for l in lindblads {
        if l.shape() != h.shape() {
            return Err(Error::DimensionMismatch {
                op: "lindblad operator",
                left: h.shape(),
                right: l.shape(),
            });
        }
    }
    Ok(())
}

fn jump_sum(lindblads: &[ComplexMatrix], n: usize) -> ComplexMatrix {
    let mut sum = ComplexMatrix::zeros(n, n);
    for l in lindblads {
        sum = &sum + &(&l.adjoint() * l);
    }
    sum
}

fn accuracy(lindblads: &[ComplexMatrix], dt: f64) -> f64 {
    lindblads
        .iter()
        .map(|l| l.frobenius_norm().powi(2) * dt)
        .fold(0.0, f64::max)
}

/// `M₀ = 1 − (iH + ½ Σ L†L) dt`, `M_k = L_k √dt`, renormalized on the right
/// by `(Σ M†M)^{−1/2}`.
pub fn lindblad_step(
    h: &ComplexMatrix,
    lindblads: &[ComplexMatrix],
    dt: f64,
    tol: &Tolerances,
) -> Result<DiscretizedMap> {
    check_generator(h, lindblads, dt, tol)?;
    let n = h.rows();
    let drift = &h.scale(I) + &jump_sum(lindblads, n).scale_real(0.5);
    let mut raw = vec![&ComplexMatrix::identity(n) - &drift.scale_real(dt)];
    let mut labels = vec!["no_jump".to_string()];
    for (k, l) in lindblads.iter().enumerate() {
        raw.push(l.scale_real(dt.sqrt()));
        labels.push(format!("L{k}"));
    }
    renormalize(raw, labels, accuracy(lindblads, dt), tol)
}

/// One dissipative channel of a multi-reservoir step.
#[derive(Debug, Clone, PartialEq)]
pub struct Reservoir {
    pub lindblads: Vec<ComplexMatrix>,
    /// Fixed point of this reservoir's dissipator.
    pub pi: DensityMatrix,
    /// Inverse temperature used for heat bookkeeping, if thermal.
    pub beta: Option<f64>,
}

/// `‖Σ_k (L π L† − ½{L†L, π})‖_F`.
pub fn dissipator_residual(lindblads: &[ComplexMatrix], pi: &DensityMatrix) -> f64 {
    let rho = pi.matrix();
    let n = rho.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for l in lindblads {
        let ll = &l.adjoint() * l;
        out = &out + &(&(l * rho) * &l.adjoint());
        out = &out - &(&(&ll * rho) + &(rho * &ll)).scale_real(0.5);
    }
    out.frobenius_norm()
}

/// `[E₀, E_{α₁}, …]`: an exactly unitary Hamiltonian step followed by one
/// renormalized dissipative map per reservoir.
///
/// Each supplied `π^{(α)}` must be annihilated by its dissipator. The
/// renormalized map is then classified against its own exact invariant
/// state, which differs from `π^{(α)}` at `O(dt²)`.
pub fn multi_reservoir_step(
    h: &ComplexMatrix,
    reservoirs: &[Reservoir],
    dt: f64,
    tol: &Tolerances,
) -> Result<Vec<ProcessStep>> {
    let all: Vec<ComplexMatrix> = reservoirs.iter().flat_map(|r| r.lindblads.clone()).collect();
    check_generator(h, &all, dt, tol)?;
    let n = h.rows();

    let first_order = &ComplexMatrix::identity(n) - &h.scale(I * dt);
    let h2 = &(h * h).scale_real(dt * dt) + &ComplexMatrix::identity(n);
    let u = &first_order * &matrix_power_of_positive(&h2.hermitian_part(), -0.5, tol)?;
    let unitary = unitary_map(u, tol)?;
    let mut steps = vec![ProcessStep::new(unitary, &DensityMatrix::maximally_mixed(n), tol)?];

    for (alpha, r) in reservoirs.iter().enumerate() {
        if r.pi.dim() != n {
            return Err(Error::DimensionMismatch {
                op: "reservoir invariant state",
                left: (n, n),
                right: (r.pi.dim(), r.pi.dim()),
            });
        }
        let min = r.pi.eigen(tol)?.eigenvalues[0];
        if min <= tol.pos {
            return Err(Error::SingularState {
                min_eigenvalue: min,
                tolerance: tol.pos,
            });
        }
        let scale = r
            .lindblads
            .iter()
            .map(|l| l.frobenius_norm().powi(2))
            .sum::<f64>()
            .max(1.0);
        let residual = dissipator_residual(&r.lindblads, &r.pi);
        if residual > tol.residual * scale {
            return Err(Error::NotFixedPoint {
                residual,
                tolerance: tol.residual * scale,
            });
        }
        let mut raw = vec![&ComplexMatrix::identity(n) - &jump_sum(&r.lindblads, n).scale_real(0.5 * dt)];
        let mut labels = vec![format!("R{alpha}_no_jump")];
        for (k, l) in r.lindblads.iter().enumerate() {
            raw.push(l.scale_real(dt.sqrt()));
            labels.push(format!("R{alpha}_L{k}"));
        }
        let map = renormalize(raw, labels, accuracy(&r.lindblads, dt), tol)?.map;
        let pi = invariant_state(&map, tol)?;
        let mut step = ProcessStep::new(map, &pi, tol)?;
        step.reservoir_beta = r.beta;
        steps.push(step);
    }
    Ok(steps)
}

/// Thermal jump pair `{√Γ↓ |0⟩⟨1|, √Γ↑ |1⟩⟨0|}` with `Γ↓/Γ↑ = e^{βω}`.
pub fn thermal_lindblads(beta_omega: f64, rate: f64) -> Vec<ComplexMatrix> {
    let down = rate;
    let up = rate * (-beta_omega).exp();
    vec![
        ComplexMatrix::unit(2, 0, 1).scale_real(down.sqrt()),
        ComplexMatrix::unit(2, 1, 0).scale_real(up.sqrt()),
    ]
}

/// Gibbs populations `e^{−βE_i}/Z`.
pub fn gibbs_populations(energies: &[f64], beta: f64) -> Vec<f64> {
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - min)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BohrReport {
    /// Distinct `E_j − E_i` over the nonzero elements `⟨i|L|j⟩` in the
    /// eigenbasis of `H`, ascending.
    pub frequencies: Vec<f64>,
    pub omega: Option<f64>,
    /// `‖[L, H] − ωL‖_F` for the unique frequency.
    pub residual: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
    pub potential: Option<PotentialLadder>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialLadder {
    pub f_of_omega: f64,
    /// `−f(ω)`: the potential change of `L` implied by `[L, ln π] = −f(ω) L`.
    pub implied_delta_phi: f64,
    /// Largest `|ln π(i) − ln π(j) − f(E_j − E_i)|` over all level pairs.
    pub ratio_residual: f64,
    /// `‖[L, ln π] + f(ω)L‖_F`.
    pub commutator_residual: f64,
    pub passed: bool,
}

/// Checks `[L, H] = ωL` for a single Bohr frequency and, given a state with
/// `π(i)/π(j) = e^{f(E_j − E_i)}`, that `L` lowers `ln π` by `f(ω)`.
pub fn check_bohr_ladder(
    h: &ComplexMatrix,
    l: &ComplexMatrix,
    potential: Option<(&DensityMatrix, &dyn Fn(f64) -> f64)>,
    tol: &Tolerances,
) -> Result<BohrReport> {
    if l.shape() != h.shape() {
        return Err(Error::DimensionMismatch {
            op: "check_bohr_ladder",
            left: h.shape(),
            right: l.shape(),
        });
    }
    let eig = hermitian_eig(h, tol)?;
    let v = &eig.eigenvectors;
    let c = &(&v.adjoint() * l) * v;
    let n = h.rows();
    let norm = l.frobenius_norm();
    let cutoff = tol.zero * norm;
    let energy_scale = eig.eigenvalues.iter().fold(1.0f64, |a, e| a.max(e.abs()));
    let mut frequencies: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if c.get(i, j).norm() <= cutoff {
                continue;
            }
            let w = eig.eigenvalues[j] - eig.eigenvalues[i];
            if !frequencies.iter().any(|f| (f - w).abs() <= tol.residual * energy_scale) {
                frequencies.push(w);
            }
        }
    }
    frequencies.sort_by(f64::total_cmp);
    let threshold = tol.residual * norm;
    let (omega, residual) = match frequencies.as_slice() {
        [w] => (Some(*w), Some((&l.commutator(h) - &l.scale_real(*w)).frobenius_norm())),
        [] => (Some(0.0), Some(0.0)),
        _ => (None, None),
    };
    let mut passed = residual.is_some_and(|r| r <= threshold);

    let potential = match (potential, omega) {
        (Some((pi, f)), Some(w)) => {
            let log_pi = log_of_positive(pi.matrix(), tol)?;
            let levels: Vec<f64> = (0..n)
                .map(|i| {
                    let e = eig.eigenvector(i);
                    let le = log_pi.mat_vec(&e).expect("square");
                    e.iter().zip(&le).map(|(a, b)| a.conj() * b).sum::<C64>().re
                })
                .collect();
            let mut ratio_residual = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let lhs = levels[i] - levels[j];
                    let rhs = f(eig.eigenvalues[j] - eig.eigenvalues[i]);
                    ratio_residual = ratio_residual.max((lhs - rhs).abs());
                }
            }
            let fw = f(w);
            let commutator_residual = (&l.commutator(&log_pi) + &l.scale_real(fw)).frobenius_norm();
            let log_scale = levels.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            let ok = commutator_residual <= tol.residual * norm * log_scale;
            passed &= ok;
            Some(PotentialLadder {
                f_of_omega: fw,
                implied_delta_phi: -fw,
                ratio_residual,
                commutator_residual,
                passed: ok,
            })
        }
        _ => None,
    };
    Ok(BohrReport {
        frequencies,
        omega,
        residual,
        threshold,
        passed,
        potential,
    })
}

/// Convenience: potential changes of a map against its computed invariant state.
pub fn delta_phi_of(map: &KrausMap, tol: &Tolerances) -> Result<Vec<f64>> {
    let pi = invariant_state(map, tol)?;
    Ok(build_potential_structure(map, &pi, tol)?.delta_phi)
}
