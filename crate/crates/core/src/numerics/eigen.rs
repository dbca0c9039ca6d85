use serde::Serialize;

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

const MAX_SWEEPS: usize = 100;

/// Spectral decomposition `A = V diag(λ) V†` of a Hermitian matrix.
///
/// Eigenvalues are ascending. Each eigenvector column is fixed in phase so
/// that its largest-magnitude entry (first one on ties) is real and positive,
/// which makes the output a deterministic function of the input bits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.column(i)
    }

    /// `V diag(f(λ)) V†`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        self.apply_complex_fn(|l| C64::new(f(l), 0.0))
    }

    pub fn apply_complex_fn(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == ZERO {
                continue;
            }
            for i in 0..n {
                let vik = v.get(i, k) * w;
                for j in 0..n {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + vik * v.get(j, k).conj());
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|l| l)
    }

    /// `‖V diag(λ) V† − A‖_F / ‖A‖_F` (absolute when `A = 0`).
    pub fn reconstruction_error(&self, a: &ComplexMatrix) -> f64 {
        let err = self.reconstruct().distance(a);
        let norm = a.frobenius_norm();
        if norm > 0.0 {
            err / norm
        } else {
            err
        }
    }

    /// `‖V†V − 1‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        self.eigenvectors.unitarity_deviation()
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// The input is symmetrized as `(A + A†)/2` after checking
/// `‖A − A†‖_F ≤ herm · ‖A‖_F`.
pub fn hermitian_eig(a: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::InvalidMatrix(format!(
            "eigendecomposition of a non-square {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let norm = a.frobenius_norm();
    let deviation = a.hermitian_deviation();
    if deviation > tol.herm * norm {
        return Err(Error::NotHermitian {
            deviation,
            tolerance: tol.herm * norm,
        });
    }

    let n = a.rows();
    let sym = a.hermitian_part();
    let mut m: Vec<C64> = sym.data().to_vec();
    let mut v: Vec<C64> = ComplexMatrix::identity(n).into_data();
    for i in 0..n {
        m[i * n + i].im = 0.0;
    }

    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[p * n + q].norm_sqr())
            .sum();
        if off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let abs = apq.norm();
                if abs == 0.0 {
                    continue;
                }
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let g = 100.0 * abs;
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[p * n + q] = ZERO;
                    m[q * n + p] = ZERO;
                    continue;
                }
                let tau = (aqq - app) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let u = apq / abs;
                let su = u * s;
                let su_conj = su.conj();

                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = akp * c - su_conj * akq;
                    m[k * n + q] = su * akp + akq * c;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = apk * c - su * aqk;
                    m[q * n + k] = su_conj * apk + aqk * c;
                }
                m[p * n + q] = ZERO;
                m[q * n + p] = ZERO;
                m[p * n + p].im = 0.0;
                m[q * n + q].im = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c - su_conj * vkq;
                    v[k * n + q] = su * vkp + vkq * c;
                }
            }
        }
    }
    if !converged {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[p * n + q].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off > tol.eig * norm {
            return Err(Error::NoConvergence(format!(
                "Jacobi sweeps left off-diagonal norm {off:e}"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].re.total_cmp(&m[j * n + j].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i * n + i].re).collect();

    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for k in 0..n {
            let a = v[k * n + src].norm();
            if a > best_abs {
                best_abs = a;
                best = k;
            }
        }
        let pivot = v[best * n + src];
        let phase = pivot.conj() / pivot.norm();
        for k in 0..n {
            let mut z = v[k * n + src] * phase;
            if k == best {
                z = C64::new(z.norm(), 0.0);
            }
            vectors.set(k, col, z);
        }
    }

    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// `A^p` for a positive-definite `A`, via its eigendecomposition.
pub fn matrix_power_of_positive(a: &ComplexMatrix, exponent: f64, tol: &Tolerances) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a, tol)?;
    let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if min <= tol.pos {
        return Err(Error::SingularState {
            min_eigenvalue: min,
            tolerance: tol.pos,
        });
    }
    Ok(eig.apply_fn(|l| l.powf(exponent)))
}

/// Principal logarithm of a positive-definite matrix.
pub fn log_of_positive(a: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a, tol)?;
    let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if min <= tol.pos {
        return Err(Error::SingularState {
            min_eigenvalue: min,
            tolerance: tol.pos,
        });
    }
    Ok(eig.apply_fn(f64::ln))
}

/// `exp(−iHt)` for Hermitian `H`.
pub fn unitary_evolution(h: &ComplexMatrix, t: f64, tol: &Tolerances) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h, tol)?;
    Ok(eig.apply_complex_fn(|l| C64::from_polar(1.0, -l * t)))
}
