//! Dense complex linear algebra sized for small Hilbert spaces.

mod eigen;
mod matrix;

pub use eigen::{hermitian_eig, log_of_positive, matrix_power_of_positive, unitary_evolution, HermitianEigen};
pub use matrix::{adjoint, basis_vector, inner, matmul, norm_sqr, ComplexMatrix, C64, I, ONE, ZERO};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::tolerance::Tolerances;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn matmul_examples() {
        let x = pauli_x();
        let id = ComplexMatrix::identity(2);
        assert_eq!(matmul(&id, &x).unwrap(), x);
        assert_eq!(matmul(&x, &x).unwrap(), id);
        let a = ComplexMatrix::diag_real(&[2.0, 3.0]);
        let b = ComplexMatrix::diag_real(&[5.0, 7.0]);
        assert_eq!(matmul(&a, &b).unwrap(), ComplexMatrix::diag_real(&[10.0, 21.0]));
    }

    #[test]
    fn matmul_dimension_mismatch_is_an_error() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 2);
        assert!(matches!(matmul(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn adjoint_examples() {
        let raise = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let lower = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(adjoint(&raise), lower);
        let h = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, -1.0)], vec![c(2.0, 1.0), c(-3.0, 0.0)]]).unwrap();
        assert_eq!(adjoint(&h), h);
        let ii = ComplexMatrix::identity(2).scale(I);
        assert_eq!(adjoint(&ii), ComplexMatrix::identity(2).scale(-I));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(ComplexMatrix::new(2, 2, vec![ZERO; 3]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn eig_of_diagonal_state() {
        let tol = Tolerances::default();
        let a = ComplexMatrix::diag_real(&[1.0 / 3.0, 2.0 / 3.0]);
        let e = hermitian_eig(&a, &tol).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(e.eigenvectors, ComplexMatrix::identity(2));
    }

    #[test]
    fn eig_of_pauli_x() {
        let tol = Tolerances::default();
        let e = hermitian_eig(&pauli_x(), &tol).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-15);
        assert!(e.reconstruction_error(&pauli_x()) < 1e-15);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let tol = Tolerances::default();
        let a = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eig(&a, &tol), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_is_deterministic() {
        let tol = Tolerances::default();
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.3, 0.2), c(0.0, -0.1)],
            vec![c(0.3, -0.2), c(1.0, 0.0), c(0.5, 0.0)],
            vec![c(0.0, 0.1), c(0.5, 0.0), c(-2.0, 0.0)],
        ])
        .unwrap();
        let a = hermitian_eig(&h, &tol).unwrap();
        let b = hermitian_eig(&h.clone(), &tol).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eig_of_degenerate_matrix() {
        let tol = Tolerances::default();
        let e = hermitian_eig(&ComplexMatrix::identity(4), &tol).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0; 4]);
        assert!(e.orthonormality_error() < 1e-15);
    }

    #[test]
    fn positive_powers() {
        let tol = Tolerances::default();
        let a = ComplexMatrix::diag_real(&[4.0, 9.0]);
        let half = matrix_power_of_positive(&a, 0.5, &tol).unwrap();
        assert!(half.distance(&ComplexMatrix::diag_real(&[2.0, 3.0])) < 1e-15);
        let inv_half = matrix_power_of_positive(&a, -0.5, &tol).unwrap();
        assert!(inv_half.distance(&ComplexMatrix::diag_real(&[0.5, 1.0 / 3.0])) < 1e-15);
        let singular = ComplexMatrix::diag_real(&[1.0, 0.0]);
        assert!(matches!(
            matrix_power_of_positive(&singular, -0.5, &tol),
            Err(Error::SingularState { .. })
        ));
    }

    #[test]
    fn phase_gate_from_evolution() {
        let tol = Tolerances::default();
        let h = ComplexMatrix::diag_real(&[0.0, 1.0]);
        let u = unitary_evolution(&h, std::f64::consts::PI, &tol).unwrap();
        assert!(u.distance(&ComplexMatrix::diag_real(&[1.0, -1.0])) < 1e-15);
    }

    #[test]
    fn json_format_is_nested_pairs() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, -1.0)], vec![c(0.5, 0.25), c(2.0, 0.0)]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[[1.0,0.0],[0.0,-1.0]],[[0.5,0.25],[2.0,0.0]]]");
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>("[[[1,0]],[[1,0],[2,0]]]").is_err());
    }

    fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols).prop_map(move |v| {
            ComplexMatrix::new(rows, cols, v.into_iter().map(|(re, im)| C64::new(re, im)).collect()).unwrap()
        })
    }

    fn arb_hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
        arb_matrix(n, n).prop_map(|a| a.hermitian_part())
    }

    fn arb_density(n: usize) -> impl Strategy<Value = ComplexMatrix> {
        arb_matrix(n, n).prop_map(|a| {
            let p = &a * &a.adjoint();
            let t = p.trace().re;
            p.scale_real(1.0 / t)
        })
    }

    proptest! {
        #[test]
        fn adjoint_reverses_products(a in arb_matrix(3, 4), b in arb_matrix(4, 2)) {
            let lhs = adjoint(&matmul(&a, &b).unwrap());
            let rhs = matmul(&adjoint(&b), &adjoint(&a)).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-13);
        }

        #[test]
        fn eig_reconstructs_random_hermitian(h in arb_hermitian(4)) {
            let tol = Tolerances::default();
            let e = hermitian_eig(&h, &tol).unwrap();
            prop_assert!(e.reconstruction_error(&h) <= tol.eig);
            prop_assert!(e.orthonormality_error() <= tol.eig);
            prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn eig_of_density_sums_to_trace(rho in arb_density(5)) {
            let tol = Tolerances::default();
            let e = hermitian_eig(&rho, &tol).unwrap();
            let sum: f64 = e.eigenvalues.iter().sum();
            prop_assert!((sum - rho.trace().re).abs() <= 1e-12);
        }

        #[test]
        fn square_root_squares_back(a in arb_matrix(3, 3)) {
            let tol = Tolerances::default();
            let pos = &(&a * &a.adjoint()) + &ComplexMatrix::identity(3).scale_real(0.1);
            let root = matrix_power_of_positive(&pos, 0.5, &tol).unwrap();
            prop_assert!((&root * &root).distance(&pos) <= 1e-11 * pos.frobenius_norm());
        }
    }
}
