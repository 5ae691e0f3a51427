//! Property-based checks of unitarity, symmetry, gauge and convergence.

use lzsm::adiabatic::{frames_on_grid, initial_ground_state};
use lzsm::analysis::stage_operators;
use lzsm::propagator::{evolve, propagator_matrix, step_unitary_2x2, uniform_grid, StateVector};
use lzsm::schedules::{
    check_symmetry, example1_schedule, Frame, HermitianOperator2, Mat2, PiecewiseLinearProfile, SymmetryAxis,
    TlsSchedule,
};
use lzsm::ssh::{reduced_coefficients, ChainHamiltonian, ChainModel};
use lzsm::table::fmt_float;
use lzsm::verify::convergence_ratios;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

/// Piecewise-linear schedule on `axis` built from first-half samples and
/// mirrored so that `d0, dr` are odd and `dθ, dφ` even about `T/2`.
fn mirrored_schedule(axis: SymmetryAxis, total: f64, half: &[[f64; 4]]) -> TlsSchedule {
    let m = half.len();
    let mut times = Vec::with_capacity(2 * m + 1);
    let mut values = Vec::with_capacity(2 * m + 1);
    for (k, v) in half.iter().enumerate() {
        times.push(0.5 * total * k as f64 / m as f64);
        values.push(*v);
    }
    let mid = half[m - 1];
    times.push(0.5 * total);
    values.push([0.0, mid[1], mid[2], 0.0]);
    for k in (0..m).rev() {
        times.push(total - times[k]);
        let v = values[k];
        values.push([-v[0], v[1], v[2], -v[3]]);
    }
    TlsSchedule::new(Frame::Rotated(axis), PiecewiseLinearProfile::new(times, values).unwrap()).unwrap()
}

fn sample() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-2.0..2.0f64)
}

fn axis() -> impl Strategy<Value = SymmetryAxis> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(|(t, p)| SymmetryAxis::new(t, p))
}

fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    (u.adjoint() * u - DMatrix::identity(u.nrows(), u.ncols())).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn step_unitary_is_unitary(c in sample(), dt in 1e-6..2.0f64) {
        let u = step_unitary_2x2(&HermitianOperator2::new(c[0], c[1], c[2], c[3]), dt);
        prop_assert!((u.adjoint() * u - Mat2::identity()).norm() < 1e-13);
    }

    #[test]
    fn example1_propagation_is_unitary_and_symmetric(
        j in prop::array::uniform4(0.1..3.0f64),
        total in 0.2..6.0f64,
    ) {
        let s = example1_schedule(j[0], j[1], j[2], j[3], total).unwrap();
        prop_assert!(check_symmetry(&s, SymmetryAxis::Z, 501) < 1e-12);
        let u = propagator_matrix(&s, 0.0, total, 2000).unwrap();
        prop_assert!(unitarity_defect(&u) < 1e-10);
        let traj = evolve(&s, &initial_ground_state(&s).unwrap(), 0.0, total, 2000).unwrap();
        prop_assert!(traj.max_norm_defect() < 1e-10);
    }

    #[test]
    fn mirrored_schedules_satisfy_gauge_and_stage_relations(
        axis in axis(),
        half in prop::collection::vec(sample(), 2..6),
        total in 0.5..4.0f64,
        frac in 0.1..0.45f64,
    ) {
        let s = mirrored_schedule(axis, total, &half);
        prop_assert!(check_symmetry(&s, axis, 801) < 1e-12);
        let times = uniform_grid(0.0, total, 400);
        let frames = frames_on_grid(&s, axis, &times).unwrap();
        for (f, g) in frames.iter().zip(frames.iter().rev()) {
            prop_assert!((f.det() - C64::new(1.0, 0.0)).norm() < 1e-10);
            prop_assert!((f.e_plus + g.e_minus).abs() < 1e-10);
            if f.gap() > 1e-6 {
                prop_assert!(f.eigen_residual(&s.hamiltonian_at(f.t).unwrap()) < 1e-10);
            }
            if f.t <= 0.5 * total && !f.is_vacuous() {
                prop_assert!(f.gauge_product().im.abs() < 1e-10);
                prop_assert!(f.gauge_product().re >= -1e-12);
            }
        }
        let ops = stage_operators(&s, axis, frac * total, 400).unwrap();
        prop_assert!(ops.diabatic_residual(axis) < 1e-6);
        prop_assert!(ops.adiabatic_residual() < 1e-5);
    }

    #[test]
    fn midpoint_rule_is_second_order(
        j in prop::array::uniform4(0.5..2.0f64),
        total in 0.5..3.0f64,
    ) {
        let s = example1_schedule(j[0], j[1], j[2], j[3], total).unwrap();
        let ratios = convergence_ratios(&s, 400).unwrap();
        for r in ratios {
            prop_assert!((3.5..4.5).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn chain_evolution_conserves_norm(
        n_cells in 2usize..8,
        v0 in -0.95..0.95f64,
        delta0 in -0.5..0.5f64,
        total in 1.0..20.0f64,
    ) {
        let m = ChainModel::new(n_cells, 1.0, v0, delta0, total).unwrap();
        let traj = evolve(&ChainHamiltonian(&m), &StateVector::basis(m.sites(), 0), 0.0, total, 400).unwrap();
        prop_assert!(traj.max_norm_defect() < 1e-10);
        let u = propagator_matrix(&ChainHamiltonian(&m), 0.0, total, 100).unwrap();
        prop_assert!(unitarity_defect(&u) < 1e-10);
    }

    #[test]
    fn reduced_coefficients_have_mirror_parity(
        n_cells in 2usize..12,
        v0 in -0.95..0.95f64,
        delta0 in -0.5..0.5f64,
        total in 1.0..300.0f64,
        frac in 0.0..1.0f64,
    ) {
        let m = ChainModel::new(n_cells, 1.0, v0, delta0, total).unwrap();
        let t = frac * total;
        let (d, k) = reduced_coefficients(&m, t).unwrap();
        let (dm, km) = reduced_coefficients(&m, total - t).unwrap();
        prop_assert!((d + dm).abs() < 1e-10);
        prop_assert!((k - km).abs() < 1e-10);
    }

    #[test]
    fn float_format_round_trips_to_twelve_digits(x in prop::num::f64::NORMAL) {
        let back: f64 = fmt_float(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }
}
