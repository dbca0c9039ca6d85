//! Nonequilibrium potential of an invariant state, ladder classification of
//! Kraus operators, dual maps and generalized detailed balance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{fixed_point_residual, validate_cptp, DensityMatrix, KrausMap};
use crate::numerics::{log_of_positive, matrix_power_of_positive, ComplexMatrix, HermitianEigen, C64};
use crate::tolerance::Tolerances;

/// Gap agreement required by [`delta_phi_pi_independence`].
pub const INDEPENDENCE_TOLERANCE: f64 = 1e-9;

/// A unitary `V`, optionally composed with complex conjugation:
/// `A x = V x` or `A x = V conj(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryOp {
    matrix: ComplexMatrix,
    antiunitary: bool,
}

impl SymmetryOp {
    pub fn new(matrix: ComplexMatrix, antiunitary: bool) -> Result<Self> {
        let deviation = matrix.unitarity_deviation();
        if deviation > 1e-12 {
            return Err(Error::NotUnitary {
                deviation,
                tolerance: 1e-12,
            });
        }
        Ok(Self { matrix, antiunitary })
    }

    /// Plain complex conjugation in the computational basis.
    pub fn time_reversal(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n),
            antiunitary: true,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n),
            antiunitary: false,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn is_antiunitary(&self) -> bool {
        self.antiunitary
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply_vector(&self, x: &[C64]) -> Vec<C64> {
        let v: Vec<C64> = if self.antiunitary {
            x.iter().map(|z| z.conj()).collect()
        } else {
            x.to_vec()
        };
        self.matrix.mat_vec(&v).expect("symmetry dimension mismatch")
    }

    /// `A M A†`: `V M V†`, or `V conj(M) V†` when anti-unitary.
    pub fn conjugate_operator(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let inner = if self.antiunitary { m.conj() } else { m.clone() };
        &(&self.matrix * &inner) * &self.matrix.adjoint()
    }

    /// Applies `A` to every column of a basis matrix.
    pub fn transform_basis(&self, basis: &ComplexMatrix) -> ComplexMatrix {
        let cols: Vec<Vec<C64>> = basis.columns().iter().map(|c| self.apply_vector(c)).collect();
        ComplexMatrix::from_columns(&cols).expect("basis columns")
    }

    /// Whether `A² = 1`.
    pub fn is_involution(&self, tol: f64) -> bool {
        let square = if self.antiunitary {
            &self.matrix * &self.matrix.conj()
        } else {
            &self.matrix * &self.matrix
        };
        square.distance(&ComplexMatrix::identity(self.dim())) <= tol
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch {
                op: "symmetry operator",
                left: (n, n),
                right: self.matrix.shape(),
            });
        }
        Ok(())
    }
}

/// Potentials `Φ(i) = −ln π(i)` over the eigenbasis of `π` and the potential
/// change `ΔΦ(k)` carried by each Kraus operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialStructure {
    pub pi: DensityMatrix,
    pub eigen: HermitianEigen,
    /// One entry per eigenindex of `π` (eigenvalues ascending).
    pub potentials: Vec<f64>,
    /// Class id per eigenindex; classes are numbered by increasing potential.
    pub classes: Vec<usize>,
    pub class_potentials: Vec<f64>,
    pub delta_phi: Vec<f64>,
}

impl PotentialStructure {
    pub fn delta_phi(&self, k: usize) -> f64 {
        self.delta_phi[k]
    }
}

fn require_positive_fixed_point(map: &KrausMap, pi: &DensityMatrix, tol: &Tolerances) -> Result<HermitianEigen> {
    if pi.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            op: "invariant state",
            left: (map.dim(), map.dim()),
            right: (pi.dim(), pi.dim()),
        });
    }
    let residual = fixed_point_residual(map, pi)?;
    if residual > tol.fix {
        return Err(Error::NotFixedPoint {
            residual,
            tolerance: tol.fix,
        });
    }
    let eigen = pi.eigen(tol)?;
    let min = eigen.eigenvalues[0];
    if min <= tol.pos {
        return Err(Error::SingularState {
            min_eigenvalue: min,
            tolerance: tol.pos,
        });
    }
    Ok(eigen)
}

/// Groups eigenindices whose potentials lie within `group` of the first
/// member of their class.
fn potential_classes(potentials: &[f64], group: f64) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..potentials.len()).collect();
    order.sort_by(|&a, &b| potentials[a].total_cmp(&potentials[b]).then(a.cmp(&b)));
    let mut classes = vec![0; potentials.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for &i in &order {
        if members.is_empty() || potentials[i] - anchor > group {
            anchor = potentials[i];
            members.push(Vec::new());
        }
        classes[i] = members.len() - 1;
        members.last_mut().unwrap().push(i);
    }
    let class_potentials = members
        .iter()
        .map(|m| m.iter().map(|&i| potentials[i]).sum::<f64>() / m.len() as f64)
        .collect();
    (classes, class_potentials)
}

pub fn build_potential_structure(map: &KrausMap, pi: &DensityMatrix, tol: &Tolerances) -> Result<PotentialStructure> {
    let eigen = require_positive_fixed_point(map, pi, tol)?;
    let potentials: Vec<f64> = eigen.eigenvalues.iter().map(|&p| -p.ln()).collect();
    let (classes, class_potentials) = potential_classes(&potentials, tol.group);

    let v = &eigen.eigenvectors;
    let v_adj = v.adjoint();
    let n = map.dim();
    let mut delta_phi = Vec::with_capacity(map.len());
    for (k, m) in map.operators().iter().enumerate() {
        let coeffs = &(&v_adj * m) * v;
        let cutoff = tol.zero * m.frobenius_norm();
        // (representative gap, running sum, count)
        let mut gaps: Vec<(f64, f64, usize)> = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if coeffs.get(j, i).norm() <= cutoff {
                    continue;
                }
                let gap = class_potentials[classes[j]] - class_potentials[classes[i]];
                match gaps.iter_mut().find(|g| (g.0 - gap).abs() <= tol.group) {
                    Some(g) => {
                        g.1 += gap;
                        g.2 += 1;
                    }
                    None => gaps.push((gap, gap, 1)),
                }
            }
        }
        match gaps.len() {
            0 => delta_phi.push(0.0),
            1 => delta_phi.push(gaps[0].1 / gaps[0].2 as f64),
            _ => {
                let mut values: Vec<f64> = gaps.iter().map(|g| g.1 / g.2 as f64).collect();
                values.sort_by(f64::total_cmp);
                return Err(Error::MixedPotentialOperator {
                    operator: k,
                    gaps: values,
                });
            }
        }
    }

    Ok(PotentialStructure {
        pi: pi.clone(),
        eigen,
        potentials,
        classes,
        class_potentials,
        delta_phi,
    })
}

/// The dual map `M̃_k = A π^{1/2} M_k† π^{-1/2} A†` together with `π̃ = A π A†`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualMap {
    pub map: KrausMap,
    pub pi_dual: DensityMatrix,
    pub symmetry: SymmetryOp,
}

pub fn build_dual(map: &KrausMap, pi: &DensityMatrix, symmetry: &SymmetryOp, tol: &Tolerances) -> Result<DualMap> {
    symmetry.check_dim(map.dim())?;
    require_positive_fixed_point(map, pi, tol)?;
    let sqrt = matrix_power_of_positive(pi.matrix(), 0.5, tol)?;
    let inv_sqrt = matrix_power_of_positive(pi.matrix(), -0.5, tol)?;
    let operators: Vec<ComplexMatrix> = map
        .operators()
        .iter()
        .map(|m| symmetry.conjugate_operator(&(&(&sqrt * &m.adjoint()) * &inv_sqrt)))
        .collect();
    let dual = KrausMap::from_operators(operators)?.with_labels(map.labels().to_vec())?;
    let report = validate_cptp(&dual, tol);
    if !report.passed {
        return Err(Error::NotTracePreserving {
            deviation: report.tp_deviation,
            tolerance: report.tolerance,
        });
    }
    let pi_dual = DensityMatrix::new(symmetry.conjugate_operator(pi.matrix()), tol)?;
    let residual = fixed_point_residual(&dual, &pi_dual)?;
    if residual > tol.fix {
        return Err(Error::NotFixedPoint {
            residual,
            tolerance: tol.fix,
        });
    }
    Ok(DualMap {
        map: dual,
        pi_dual,
        symmetry: symmetry.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceEntry {
    pub operator: usize,
    pub label: String,
    pub delta_phi: f64,
    /// `‖M̃_k − e^{ΔΦ/2} A M_k† A†‖_F`.
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub entries: Vec<BalanceEntry>,
    pub relative_tolerance: f64,
    pub max_residual: f64,
    pub passed: bool,
}

pub fn check_detailed_balance(
    map: &KrausMap,
    dual: &DualMap,
    structure: &PotentialStructure,
    tol: &Tolerances,
) -> Result<BalanceReport> {
    if dual.map.len() != map.len() || structure.delta_phi.len() != map.len() {
        return Err(Error::InvalidParameter(
            "map, dual and structure disagree on the number of operators".into(),
        ));
    }
    if dual.map.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            op: "check_detailed_balance",
            left: (map.dim(), map.dim()),
            right: (dual.map.dim(), dual.map.dim()),
        });
    }
    let entries: Vec<BalanceEntry> = map
        .operators()
        .iter()
        .zip(dual.map.operators())
        .enumerate()
        .map(|(k, (m, m_dual))| {
            let dphi = structure.delta_phi[k];
            let expected = dual
                .symmetry
                .conjugate_operator(&m.adjoint())
                .scale_real((dphi / 2.0).exp());
            let residual = m_dual.distance(&expected);
            let threshold = tol.residual * m.frobenius_norm();
            BalanceEntry {
                operator: k,
                label: map.labels()[k].clone(),
                delta_phi: dphi,
                residual,
                threshold,
                passed: residual <= threshold,
            }
        })
        .collect();
    let max_residual = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
    let passed = entries.iter().all(|e| e.passed);
    Ok(BalanceReport {
        entries,
        relative_tolerance: tol.residual,
        max_residual,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorEntry {
    pub operator: usize,
    /// `‖[M_k, ln π] − ΔΦ(k) M_k‖_F`.
    pub ladder_residual: f64,
    pub ladder_threshold: f64,
    /// `‖[M_k† M_k, π]‖_F`.
    pub populations_residual: f64,
    pub populations_threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub entries: Vec<CommutatorEntry>,
    pub relative_tolerance: f64,
    pub passed: bool,
}

pub fn check_ladder_commutators(
    map: &KrausMap,
    structure: &PotentialStructure,
    tol: &Tolerances,
) -> Result<CommutatorReport> {
    let log_pi = log_of_positive(structure.pi.matrix(), tol)?;
    let pi = structure.pi.matrix();
    let log_scale = structure.potentials.iter().fold(1.0f64, |a, p| a.max(p.abs()));
    let entries: Vec<CommutatorEntry> = map
        .operators()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let dphi = structure.delta_phi[k];
            let ladder = &m.commutator(&log_pi) - &m.scale_real(dphi);
            let populations = (&m.adjoint() * m).commutator(pi);
            let norm = m.frobenius_norm();
            let ladder_threshold = tol.residual * norm * log_scale;
            let populations_threshold = tol.residual * norm * norm;
            let ladder_residual = ladder.frobenius_norm();
            let populations_residual = populations.frobenius_norm();
            CommutatorEntry {
                operator: k,
                ladder_residual,
                ladder_threshold,
                populations_residual,
                populations_threshold,
                passed: ladder_residual <= ladder_threshold && populations_residual <= populations_threshold,
            }
        })
        .collect();
    let passed = entries.iter().all(|e| e.passed);
    Ok(CommutatorReport {
        entries,
        relative_tolerance: tol.residual,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    /// `ΔΦ(k)` per supplied invariant state, in operator order.
    pub delta_phi: Vec<Vec<f64>>,
    /// Largest per-operator disagreement across states.
    pub max_operator_discrepancy: f64,
    /// Largest disagreement between the sorted multisets.
    pub max_multiset_discrepancy: f64,
    pub tolerance: f64,
    pub agree: bool,
}

/// Compares the potential changes obtained from several invariant states of
/// one map.
pub fn delta_phi_pi_independence(
    map: &KrausMap,
    pis: &[DensityMatrix],
    tol: &Tolerances,
) -> Result<IndependenceReport> {
    if pis.is_empty() {
        return Err(Error::InvalidParameter("no invariant states supplied".into()));
    }
    let delta_phi: Vec<Vec<f64>> = pis
        .iter()
        .map(|pi| build_potential_structure(map, pi, tol).map(|s| s.delta_phi))
        .collect::<Result<_>>()?;
    let reference = &delta_phi[0];
    let mut sorted_ref = reference.clone();
    sorted_ref.sort_by(f64::total_cmp);
    let mut op_disc = 0.0f64;
    let mut set_disc = 0.0f64;
    for other in &delta_phi[1..] {
        for (a, b) in reference.iter().zip(other) {
            op_disc = op_disc.max((a - b).abs());
        }
        let mut sorted = other.clone();
        sorted.sort_by(f64::total_cmp);
        for (a, b) in sorted_ref.iter().zip(&sorted) {
            set_disc = set_disc.max((a - b).abs());
        }
    }
    Ok(IndependenceReport {
        delta_phi,
        max_operator_discrepancy: op_disc,
        max_multiset_discrepancy: set_disc,
        tolerance: INDEPENDENCE_TOLERANCE,
        agree: set_disc <= INDEPENDENCE_TOLERANCE,
    })
}
