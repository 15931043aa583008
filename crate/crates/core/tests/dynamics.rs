use std::f64::consts::{PI, TAU};

use liouville::dynamics::{
    check_confinement, integral_drift, integrate, integrate_with, IntegrateOptions, Method,
};
use liouville::model::{NaturalSystem, PhasePoint, TorusModel, TrigPotential, TrigTerm};
use liouville::observables::separable_integrals;
use proptest::prelude::*;

fn example() -> NaturalSystem {
    NaturalSystem::cosine_family(&[1, 2]).unwrap()
}

#[test]
fn free_motion_is_linear() {
    let model = TorusModel::diagonal(&[2.0, 0.5]).unwrap();
    let p0 = PhasePoint::new(vec![0.3, 1.0], vec![1.0, -0.25]).unwrap();
    let traj = integrate(&model, &TrigPotential::zero(2), &p0, 0.01, 1000).unwrap();
    let end = traj.lift(traj.len() - 1);
    let t = traj.times()[traj.len() - 1];
    assert!((end[0] - (0.3 + 0.5 * t)).abs() < 1e-12);
    assert!((end[1] - (1.0 - 0.5 * t)).abs() < 1e-12);
    assert_eq!(traj.winding_numbers(), vec![0, -1]);
}

#[test]
fn verlet_is_also_second_order() {
    let sys = example();
    let p0 = PhasePoint::new(vec![PI / 2.0, PI], vec![0.1, 0.0]).unwrap();
    let drift = |dt: f64| {
        let opts = IntegrateOptions { method: Method::Verlet, stride: 1 };
        integrate_with(&sys.model, &sys.potential, &p0, dt, (20.0 / dt) as usize, opts)
            .unwrap()
            .energy_drift()
    };
    let r = drift(2e-3) / drift(1e-3);
    assert!((r - 4.0).abs() < 0.8, "ratio {r}");
}

#[test]
fn stride_keeps_first_and_last() {
    let sys = example();
    let p0 = PhasePoint::new(vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
    let opts = IntegrateOptions { method: Method::MinimumError, stride: 7 };
    let traj = integrate_with(&sys.model, &sys.potential, &p0, 1e-2, 100, opts).unwrap();
    assert_eq!(traj.times()[0], 0.0);
    assert!((traj.times()[traj.len() - 1] - 1.0).abs() < 1e-12);
    assert_eq!(traj.len(), 1 + 100 / 7 + 1);
}

fn phase_point() -> impl Strategy<Value = PhasePoint> {
    (0.0..TAU, 0.0..TAU, -1.5f64..1.5, -1.5f64..1.5)
        .prop_map(|(a, b, c, d)| PhasePoint::new(vec![a, b], vec![c, d]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn time_reversal_returns_to_start(p0 in phase_point()) {
        let sys = example();
        let fwd = integrate(&sys.model, &sys.potential, &p0, 1e-3, 2000).unwrap();
        let end = fwd.len() - 1;
        let back0 = PhasePoint::new(
            fwd.lift(end).to_vec(),
            fwd.momentum(end).iter().map(|y| -y).collect(),
        ).unwrap();
        let back = integrate(&sys.model, &sys.potential, &back0, 1e-3, 2000).unwrap();
        let last = back.len() - 1;
        for i in 0..2 {
            // the restart reduces angles, so compare on the circle
            let dx = (back.lift(last)[i] - p0.x()[i] + PI).rem_euclid(TAU) - PI;
            prop_assert!(dx.abs() < 1e-10, "dx = {}", dx);
            prop_assert!((back.momentum(last)[i] + p0.y()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn integrals_and_energy_are_conserved(p0 in phase_point()) {
        let sys = example();
        let traj = integrate(&sys.model, &sys.potential, &p0, 1e-3, 20_000).unwrap();
        let ints = separable_integrals(&sys.model, &sys.potential).unwrap();
        prop_assert!(traj.energy_drift() < 1e-6);
        let d = integral_drift(&traj, &ints).unwrap();
        prop_assert!(d < 1e-6);
        prop_assert!((d - traj.recorded_integral_drift()).abs() < 1e-12);
        let conf = check_confinement(&traj, &sys.potential, traj.energies()[0]).unwrap();
        prop_assert!(conf.passed);
    }

    #[test]
    fn coupled_systems_conserve_energy(p0 in phase_point(), eps in 0.0f64..0.5) {
        let u = TrigPotential::new(2, vec![
            TrigTerm::cos(1.0, vec![1, 0]),
            TrigTerm::cos(eps, vec![1, -1]),
        ]).unwrap();
        let model = TorusModel::new(nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
        let traj = integrate(&model, &u, &p0, 1e-3, 10_000).unwrap();
        prop_assert!(traj.energy_drift() < 1e-6);
    }
}
