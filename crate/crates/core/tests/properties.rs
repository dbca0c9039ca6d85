use std::collections::HashMap;

use krausft::maps::{validate_cptp, DensityMatrix, KrausMap};
use krausft::models::{dephasing_map, projective_measurement, thermal_qubit_map, unitary_map};
use krausft::numerics::ComplexMatrix;
use krausft::potential::{build_dual, build_potential_structure, SymmetryOp};
use krausft::process::{
    build_dual_process, enumerate_trajectories, verify_detailed_ft, verify_integral_ft, ProcessSpec, ProcessStep,
};
use krausft::{Tolerances, C64};
use proptest::prelude::*;

fn tol() -> Tolerances {
    Tolerances::default()
}

/// `[[e^{ia} cos t, e^{ib} sin t], [−e^{−ib} sin t, e^{−ia} cos t]]`.
fn su2(t: f64, a: f64, b: f64) -> ComplexMatrix {
    let (c, s) = (t.cos(), t.sin());
    ComplexMatrix::from_rows(&[
        vec![C64::from_polar(c, a), C64::from_polar(s, b)],
        vec![-C64::from_polar(s, -b), C64::from_polar(c, -a)],
    ])
    .unwrap()
}

fn thermal_p(beta_omega: f64) -> f64 {
    1.0 / (1.0 + (-beta_omega).exp())
}

/// GAD conjugated by `u`, with its rotated thermal state.
fn rotated_gad(beta_omega: f64, gamma: f64, u: &ComplexMatrix) -> (KrausMap, DensityMatrix) {
    let t = tol();
    let gad = thermal_qubit_map(beta_omega, gamma, &t).unwrap();
    let ops = gad.operators().iter().map(|m| &(u * m) * &u.adjoint()).collect();
    let map = KrausMap::new(ops, &t).unwrap();
    let p = thermal_p(beta_omega);
    let pi = DensityMatrix::from_spectrum(u, &[p, 1.0 - p], &t).unwrap();
    (map, pi)
}

fn branch(m: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    &(m * x) * &m.adjoint()
}

/// `u diag(1, −1) u†`, a unitary squaring to one.
fn reflection(u: &ComplexMatrix) -> ComplexMatrix {
    let z = ComplexMatrix::diag_real(&[1.0, -1.0]);
    &(u * &z) * &u.adjoint()
}

fn symmetries() -> impl Strategy<Value = SymmetryOp> {
    prop_oneof![
        Just(SymmetryOp::time_reversal(2)),
        Just(SymmetryOp::identity(2)),
        rotation().prop_map(|u| SymmetryOp::new(reflection(&u), false).unwrap()),
        Just(
            SymmetryOp::new(
                ComplexMatrix::from_rows(&[
                    vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
                    vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                ])
                .unwrap(),
                true
            )
            .unwrap()
        ),
    ]
}

fn gad_params() -> impl Strategy<Value = (f64, f64)> {
    (-3.0..3.0f64, 0.05..1.0f64)
}

fn rotation() -> impl Strategy<Value = ComplexMatrix> {
    (0.0..3.2f64, -3.2..3.2f64, -3.2..3.2f64).prop_map(|(t, a, b)| su2(t, a, b))
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(48) })]

    #[test]
    fn constructors_are_cptp(bw in -4.0..4.0f64, g in 0.0..1.0f64, s in 0.0..1.0f64, u in rotation()) {
        let t = tol();
        let cols = u.columns();
        for map in [
            thermal_qubit_map(bw, g, &t).unwrap(),
            unitary_map(u.clone(), &t).unwrap(),
            projective_measurement(&cols, &t).unwrap(),
            dephasing_map(&cols, s, &t).unwrap(),
        ] {
            let r = validate_cptp(&map, &t);
            prop_assert!(r.passed, "deviation {}", r.tp_deviation);
        }
    }

    #[test]
    fn dual_is_an_involution((bw, g) in gad_params(), u in rotation(), sym in symmetries()) {
        let t = tol();
        let (map, pi) = rotated_gad(bw, g, &u);
        let dual = build_dual(&map, &pi, &sym, &t).unwrap();
        prop_assert!(validate_cptp(&dual.map, &t).passed);
        let back = build_dual(&dual.map, &dual.pi_dual, &sym, &t).unwrap();
        for (a, b) in back.map.operators().iter().zip(map.operators()) {
            prop_assert!(a.distance(b) < 1e-10, "distance {}", a.distance(b));
        }
    }

    #[test]
    fn pair_statistics_match_reversed_pairs((bw, g) in gad_params(), u in rotation(), sym in symmetries()) {
        let t = tol();
        let (map, pi) = rotated_gad(bw, g, &u);
        let dual = build_dual(&map, &pi, &sym, &t).unwrap();
        let ops = map.operators();
        let dops = dual.map.operators();
        for k1 in 0..ops.len() {
            for k2 in 0..ops.len() {
                let fwd = branch(&ops[k2], &branch(&ops[k1], pi.matrix())).trace().re;
                let rev = branch(&dops[k1], &branch(&dops[k2], dual.pi_dual.matrix())).trace().re;
                prop_assert!((fwd - rev).abs() < 1e-12, "({k1},{k2}) {fwd} vs {rev}");
            }
        }
    }

    #[test]
    fn dual_reverses_potential_changes((bw, g) in gad_params(), u in rotation(), sym in symmetries()) {
        let t = tol();
        let (map, pi) = rotated_gad(bw, g, &u);
        let forward = build_potential_structure(&map, &pi, &t).unwrap();
        let dual = build_dual(&map, &pi, &sym, &t).unwrap();
        let reverse = build_potential_structure(&dual.map, &dual.pi_dual, &t).unwrap();
        for (a, b) in forward.delta_phi.iter().zip(&reverse.delta_phi) {
            prop_assert!((a + b).abs() < 1e-10, "{a} vs {b}");
        }
        let expected = [0.0, -bw, 0.0, bw];
        for (a, e) in forward.delta_phi.iter().zip(expected) {
            prop_assert!((a - e).abs() < 1e-9, "{a} vs {e}");
        }
    }
}

fn gad_chain() -> impl Strategy<Value = (Vec<(f64, f64)>, f64, ComplexMatrix)> {
    (prop::collection::vec(gad_params(), 1..5), 0.02..0.98f64, rotation())
}

fn chain_spec(params: &[(f64, f64)], p0: f64, basis: &ComplexMatrix, sym: SymmetryOp) -> ProcessSpec {
    let t = tol();
    let steps = params
        .iter()
        .map(|&(bw, g)| {
            let map = thermal_qubit_map(bw, g, &t).unwrap();
            let p = thermal_p(bw);
            ProcessStep::new(map, &DensityMatrix::diagonal(&[p, 1.0 - p], &t).unwrap(), &t).unwrap()
        })
        .collect();
    let rho = DensityMatrix::from_spectrum(basis, &[p0, 1.0 - p0], &t).unwrap();
    ProcessSpec::entropic(steps, rho, sym, &t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(32) })]

    #[test]
    fn concatenations_obey_fluctuation_theorems((params, p0, basis) in gad_chain(), sym in symmetries()) {
        let t = tol();
        let spec = chain_spec(&params, p0, &basis, sym);
        // Pruning at ε_prob drops up to ε_prob·e^{−Σ} per branch from
        // ⟨e^{−Σ}⟩, so the 1e-12 bound is checked on the exact support.
        let support = Tolerances { prob: 0.0, ..t };
        let ens = enumerate_trajectories(&spec, &support).unwrap();
        prop_assert!((ens.total_probability() - 1.0).abs() < 1e-12);
        let integral = verify_integral_ft(&ens).unwrap();
        prop_assert!(integral.deviation < 1e-12, "deviation {}", integral.deviation);
        prop_assert!(integral.mean_sigma >= -1e-12, "mean {}", integral.mean_sigma);
        let pruned = verify_integral_ft(&enumerate_trajectories(&spec, &t).unwrap()).unwrap();
        let bound = 1e-12 + (ens.trajectories.len() as f64) * t.prob * integral.max_abs_sigma.exp();
        prop_assert!(pruned.deviation < bound, "pruned deviation {} above {bound}", pruned.deviation);
        let detailed = verify_detailed_ft(&spec, &t).unwrap();
        prop_assert!(detailed.passed, "residual {}", detailed.max_residual);
        let dual = build_dual_process(&spec, &t).unwrap();
        let dual_integral = verify_integral_ft(&enumerate_trajectories(&dual, &support).unwrap()).unwrap();
        prop_assert!(dual_integral.deviation < 1e-12);
    }

    #[test]
    fn dual_of_dual_process_is_forward((params, p0, basis) in gad_chain(), sym in symmetries()) {
        let t = tol();
        let spec = chain_spec(&params, p0, &basis, sym);
        let back = build_dual_process(&build_dual_process(&spec, &t).unwrap(), &t).unwrap();
        let fwd = enumerate_trajectories(&spec, &t).unwrap();
        let rev: HashMap<_, _> = enumerate_trajectories(&back, &t)
            .unwrap()
            .trajectories
            .iter()
            .map(|tr| (tr.key(), tr.probability))
            .collect();
        for tr in &fwd.trajectories {
            let p = rev.get(&tr.key()).copied().unwrap_or(0.0);
            prop_assert!((p - tr.probability).abs() < 1e-10, "{:?}: {} vs {p}", tr.key(), tr.probability);
        }
    }

    #[test]
    fn stationary_processes_produce_no_entropy(
        bw in -3.0..3.0f64,
        gammas in prop::collection::vec(0.05..1.0f64, 1..5),
    ) {
        let t = tol();
        let params: Vec<_> = gammas.iter().map(|&g| (bw, g)).collect();
        let spec = chain_spec(&params, thermal_p(bw), &ComplexMatrix::identity(2), SymmetryOp::time_reversal(2));
        let ens = enumerate_trajectories(&spec, &t).unwrap();
        prop_assert!(ens.max_abs_sigma() < 1e-10, "max |sigma| {}", ens.max_abs_sigma());
    }
}
