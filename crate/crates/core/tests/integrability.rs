use liouville::model::{TorusModel, TrigPotential, TrigTerm};
use liouville::observables::{
    involution_report, poisson_bracket, separable_integrals, Observable,
};
use liouville::Error;
use proptest::prelude::*;

#[test]
fn coupled_potentials_are_rejected() {
    let model = TorusModel::identity(2).unwrap();
    let u = TrigPotential::new(2, vec![TrigTerm::cos(1.0, vec![1, -1])]).unwrap();
    assert!(matches!(separable_integrals(&model, &u), Err(Error::NonSeparable { .. })));
    let full = TorusModel::new(nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
    let sep = TrigPotential::cosine_sum(1.0, &[1, 1]).unwrap();
    assert!(matches!(separable_integrals(&full, &sep), Err(Error::NonDiagonalMetric)));
}

#[test]
fn coupling_breaks_factor_conservation() {
    // F₁ = ½y₁² + cos x₁ is not conserved once cos(x₁ − x₂) is switched on
    let model = TorusModel::identity(2).unwrap();
    let sep = TrigPotential::cosine_sum(1.0, &[1, 1]).unwrap();
    let coupled = TrigPotential::new(
        2,
        vec![
            TrigTerm::cos(1.0, vec![1, 0]),
            TrigTerm::cos(1.0, vec![0, 1]),
            TrigTerm::cos(0.5, vec![1, -1]),
        ],
    )
    .unwrap();
    let f = separable_integrals(&model, &sep).unwrap();
    let h = Observable::hamiltonian(&model, &coupled).unwrap();
    assert!(!poisson_bracket(&h, &f[0]).unwrap().is_zero());
}

fn separable_system() -> impl Strategy<Value = (TorusModel, TrigPotential)> {
    (2usize..=4).prop_flat_map(|n| {
        let masses = prop::collection::vec(prop::sample::select(vec![0.25, 0.5, 1.0, 2.0, 3.0]), n);
        let term = (0..n, -3i64..=3, -2.0f64..2.0, any::<bool>()).prop_map(move |(i, k, a, c)| {
            let mut wave = vec![0; n];
            wave[i] = k;
            if c {
                TrigTerm::cos(a, wave)
            } else {
                TrigTerm::sin(a, wave)
            }
        });
        (masses, prop::collection::vec(term, 0..6)).prop_map(move |(m, t)| {
            (TorusModel::diagonal(&m).unwrap(), TrigPotential::new(n, t).unwrap())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn separable_integrals_commute_and_sum_to_h((model, u) in separable_system()) {
        let ints = separable_integrals(&model, &u).unwrap();
        let h = Observable::hamiltonian(&model, &u).unwrap();
        let rep = involution_report(&ints, Some(&h)).unwrap();
        prop_assert!(rep.passed);
        let mut sum = Observable::zero(model.dim());
        for f in &ints {
            sum = sum.checked_add(f).unwrap();
        }
        prop_assert_eq!(sum.canonicalize(), h.canonicalize());
    }
}
