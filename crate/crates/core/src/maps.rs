//! Kraus-form CPTP maps, density matrices, and single-step trajectory
//! probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, norm_sqr, ComplexMatrix, HermitianEigen, C64, ZERO};
use crate::tolerance::{Tolerances, MAX_DIM};

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        Self::with_trace_tolerance(matrix, tol, tol.trace)
    }

    /// As [`DensityMatrix::new`] with an explicit trace tolerance.
    pub fn with_trace_tolerance(matrix: ComplexMatrix, tol: &Tolerances, trace_tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState(format!(
                "{}x{} matrix is not square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix.rows() > MAX_DIM {
            return Err(Error::DimensionTooLarge {
                dim: matrix.rows(),
                max: MAX_DIM,
            });
        }
        let deviation = matrix.hermitian_deviation();
        let limit = tol.herm * matrix.frobenius_norm().max(1.0);
        if deviation > limit {
            return Err(Error::NotHermitian {
                deviation,
                tolerance: limit,
            });
        }
        let matrix = matrix.hermitian_part();
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > trace_tol {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let eig = hermitian_eig(&matrix, tol)?;
        if let Some(&min) = eig.eigenvalues.first() {
            if min < -tol.pos {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(psi: &[C64], tol: &Tolerances) -> Result<Self> {
        Self::new(ComplexMatrix::outer(psi, psi), tol)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n).scale_real(1.0 / n as f64),
        }
    }

    pub fn diagonal(populations: &[f64], tol: &Tolerances) -> Result<Self> {
        Self::new(ComplexMatrix::diag_real(populations), tol)
    }

    /// Builds `Σ_i p_i |b_i⟩⟨b_i|` from basis columns and populations.
    pub fn from_spectrum(basis: &ComplexMatrix, populations: &[f64], tol: &Tolerances) -> Result<Self> {
        let eig = HermitianEigen {
            eigenvalues: populations.to_vec(),
            eigenvectors: basis.clone(),
        };
        Self::new(eig.reconstruct(), tol)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn eigen(&self, tol: &Tolerances) -> Result<HermitianEigen> {
        hermitian_eig(&self.matrix, tol)
    }

    /// `−Tr ρ ln ρ`, with `0 ln 0 = 0`.
    pub fn von_neumann_entropy(&self, tol: &Tolerances) -> Result<f64> {
        let eig = self.eigen(tol)?;
        Ok(eig.eigenvalues.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
    }
}

/// Ordered Kraus operators `{M_k}` on a common Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausMap {
    dim: usize,
    operators: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl KrausMap {
    /// Builds a map and requires trace preservation at `tol.tp`.
    pub fn new(operators: Vec<ComplexMatrix>, tol: &Tolerances) -> Result<Self> {
        let map = Self::from_operators(operators)?;
        let report = validate_cptp(&map, tol);
        if !report.passed {
            return Err(Error::NotTracePreserving {
                deviation: report.tp_deviation,
                tolerance: report.tolerance,
            });
        }
        Ok(map)
    }

    /// Structural checks only (square, common dimension, size cap); the
    /// result may fail [`validate_cptp`].
    pub fn from_operators(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidParameter("a Kraus map needs at least one operator".into()))?;
        let dim = first.rows();
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
        }
        for op in &operators {
            if op.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch {
                    op: "kraus operators",
                    left: (dim, dim),
                    right: op.shape(),
                });
            }
        }
        let labels = (0..operators.len()).map(|k| format!("M{k}")).collect();
        Ok(Self { dim, operators, labels })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.operators.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} operators",
                labels.len(),
                self.operators.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn operator(&self, k: usize) -> Result<&ComplexMatrix> {
        self.operators.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.operators.len(),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `Σ_k M_k X M_k†` on an arbitrary square matrix.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch {
                op: "apply_map",
                left: (self.dim, self.dim),
                right: x.shape(),
            });
        }
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for m in &self.operators {
            out = &out + &(&(m * x) * &m.adjoint());
        }
        Ok(out)
    }

    /// `‖E(1) − 1‖_F ≤ fix`.
    pub fn is_unital(&self, tol: &Tolerances) -> bool {
        let id = ComplexMatrix::identity(self.dim);
        self.apply_matrix(&id)
            .map(|out| out.distance(&id) <= tol.fix)
            .unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub operator_count: usize,
    /// `‖Σ_k M_k† M_k − 1‖_F`.
    pub tp_deviation: f64,
    pub tolerance: f64,
    pub trace_preserving: bool,
    /// Always true: any Kraus sum is completely positive.
    pub completely_positive: bool,
    pub passed: bool,
}

pub fn validate_cptp(map: &KrausMap, tol: &Tolerances) -> ValidationReport {
    let n = map.dim();
    let mut acc = ComplexMatrix::zeros(n, n);
    for m in map.operators() {
        acc = &acc + &(&m.adjoint() * m);
    }
    let deviation = acc.distance(&ComplexMatrix::identity(n));
    let tp = deviation <= tol.tp;
    ValidationReport {
        dim: n,
        operator_count: map.len(),
        tp_deviation: deviation,
        tolerance: tol.tp,
        trace_preserving: tp,
        completely_positive: true,
        passed: tp,
    }
}

pub fn apply_map(map: &KrausMap, state: &DensityMatrix, tol: &Tolerances) -> Result<DensityMatrix> {
    let out = map.apply_matrix(state.matrix())?;
    // The output trace is only as good as the map's trace preservation.
    DensityMatrix::with_trace_tolerance(out, tol, tol.tp.max(tol.trace))
}

/// `Tr[M_k ρ M_k†]`, clamped to `[0, 1]` after a tolerance check.
pub fn operation_probability(map: &KrausMap, k: usize, state: &DensityMatrix, tol: &Tolerances) -> Result<f64> {
    let m = map.operator(k)?;
    if state.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            op: "operation_probability",
            left: (map.dim(), map.dim()),
            right: (state.dim(), state.dim()),
        });
    }
    let p = (&(m * state.matrix()) * &m.adjoint()).trace().re;
    clamp_probability(p, tol)
}

pub(crate) fn clamp_probability(p: f64, tol: &Tolerances) -> Result<f64> {
    if p < -tol.tp || p > 1.0 + tol.tp || !p.is_finite() {
        return Err(Error::ProbabilityOutOfRange { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `E_k(ρ) / p_k(ρ)`.
pub fn selective_post_state(
    map: &KrausMap,
    k: usize,
    state: &DensityMatrix,
    tol: &Tolerances,
) -> Result<DensityMatrix> {
    let p = operation_probability(map, k, state, tol)?;
    if p <= tol.prob {
        return Err(Error::ZeroProbabilityBranch {
            probability: p,
            tolerance: tol.prob,
        });
    }
    let m = map.operator(k)?;
    let branch = (&(m * state.matrix()) * &m.adjoint()).scale_real(1.0 / p);
    DensityMatrix::with_trace_tolerance(branch, tol, tol.tp.max(tol.trace))
}

/// `(M_k ψ / ‖M_k ψ‖, ‖M_k ψ‖²)`.
pub fn apply_to_pure(map: &KrausMap, k: usize, psi: &[C64], tol: &Tolerances) -> Result<(Vec<C64>, f64)> {
    let m = map.operator(k)?;
    let norm = norm_sqr(psi);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("state vector has squared norm {norm}")));
    }
    let out = m.mat_vec(psi)?;
    let p = norm_sqr(&out);
    if p <= tol.prob {
        return Err(Error::ZeroProbabilityBranch {
            probability: p,
            tolerance: tol.prob,
        });
    }
    let scale = 1.0 / p.sqrt();
    Ok((out.into_iter().map(|z| z * scale).collect(), p))
}

/// Matrix of a map acting on row-major vectorized density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperoperatorMatrix {
    dim: usize,
    matrix: ComplexMatrix,
}

impl SuperoperatorMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let out = self.matrix.mat_vec(&x.vectorize())?;
        ComplexMatrix::new(self.dim, self.dim, out)
    }
}

/// `S = Σ_k M_k ⊗ conj(M_k)`, so that `S vec(ρ) = vec(E(ρ))` for row-major `vec`.
pub fn build_superoperator(map: &KrausMap) -> SuperoperatorMatrix {
    let n = map.dim();
    let mut s = ComplexMatrix::zeros(n * n, n * n);
    for m in map.operators() {
        s = &s + &m.kron(&m.conj());
    }
    SuperoperatorMatrix { dim: n, matrix: s }
}

/// Unique invariant state from the eigenvalue-1 subspace of the superoperator.
///
/// The null space of `A = S − 1` is read off the eigendecomposition of
/// `A†A`, then polished by Gauss-Newton steps with the pseudo-inverse from
/// the same decomposition.
pub fn invariant_state(map: &KrausMap, tol: &Tolerances) -> Result<DensityMatrix> {
    let n = map.dim();
    let sup = build_superoperator(map);
    let a = &sup.matrix - &ComplexMatrix::identity(n * n);
    let a_adj = a.adjoint();
    let gram = &a_adj * &a;
    let eig = hermitian_eig(&gram, tol)?;
    let top = eig.eigenvalues.last().copied().unwrap_or(0.0).max(1.0);
    let threshold = tol.null * top;
    let null_dim = eig.eigenvalues.iter().take_while(|&&l| l <= threshold).count();

    if null_dim == 0 {
        return Err(Error::NoConvergence(format!(
            "superoperator has no eigenvalue 1 (smallest singular value squared {:e})",
            eig.eigenvalues[0]
        )));
    }
    if null_dim > 1 {
        let candidate = map.is_unital(tol).then(|| Box::new(DensityMatrix::maximally_mixed(n)));
        return Err(Error::NonUniqueInvariantState {
            dimension: null_dim,
            candidate,
        });
    }

    let mut x = eig.eigenvector(0);
    for _ in 0..4 {
        let r = a.mat_vec(&x)?;
        let y = a_adj.mat_vec(&r)?;
        let mut delta = vec![ZERO; x.len()];
        for (i, &lam) in eig.eigenvalues.iter().enumerate().skip(1) {
            let v = eig.eigenvector(i);
            let coeff: C64 = v.iter().zip(&y).map(|(a, b)| a.conj() * b).sum::<C64>() / lam;
            for (d, vi) in delta.iter_mut().zip(&v) {
                *d += vi * coeff;
            }
        }
        for (xi, d) in x.iter_mut().zip(&delta) {
            *xi -= d;
        }
    }

    let rho = ComplexMatrix::new(n, n, x)?;
    let trace = rho.trace();
    if trace.norm() < 1e-12 {
        return Err(Error::NoConvergence("fixed point has vanishing trace".into()));
    }
    let rho = rho.scale(trace.inv()).hermitian_part();
    let residual = map.apply_matrix(&rho)?.distance(&rho);
    if residual > tol.fix {
        return Err(Error::NotFixedPoint {
            residual,
            tolerance: tol.fix,
        });
    }
    let min = hermitian_eig(&rho, tol)?.eigenvalues[0];
    if min <= tol.pos {
        return Err(Error::SingularState {
            min_eigenvalue: min,
            tolerance: tol.pos,
        });
    }
    DensityMatrix::new(rho, tol)
}

/// `‖E(π) − π‖_F`.
pub fn fixed_point_residual(map: &KrausMap, pi: &DensityMatrix) -> Result<f64> {
    Ok(map.apply_matrix(pi.matrix())?.distance(pi.matrix()))
}

/// JSON map file: `{ "dim": N, "operators": [matrix, ...], "labels": [string, ...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub dim: usize,
    pub operators: Vec<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl MapFile {
    pub fn from_map(map: &KrausMap) -> Self {
        Self {
            dim: map.dim(),
            operators: map.operators().to_vec(),
            labels: Some(map.labels().to_vec()),
        }
    }

    /// Structural conversion; trace preservation is left to [`validate_cptp`].
    pub fn into_map(self) -> Result<KrausMap> {
        let map = KrausMap::from_operators(self.operators)?;
        if map.dim() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "declared dim {} but operators are {}x{}",
                self.dim,
                map.dim(),
                map.dim()
            )));
        }
        match self.labels {
            Some(labels) => map.with_labels(labels),
            None => Ok(map),
        }
    }
}
