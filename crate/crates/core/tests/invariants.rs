use chiral_router::hamiltonian::reduced_with_phase;
use chiral_router::noise::{ou_ensemble, static_noise_state, OUSpec, VonMisesSpec};
use chiral_router::routing::{
    input_state, routing_fidelity, transition_probability, SuperpositionParams,
};
use chiral_router::{
    build_full_hamiltonian, build_reduced_hamiltonian, propagator, DensityMatrix, FullGraphLayout,
    PureState, RouterParams, C64,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn config() -> ProptestConfig {
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(1000)
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn router() -> impl Strategy<Value = RouterParams> {
    (2u64..2000, -3.0f64..3.0, 0.0..TAU).prop_map(|(n, b, p)| RouterParams::new(n, b, p).unwrap())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn hamiltonians_are_hermitian(p in router()) {
        let h = build_reduced_hamiltonian(&p);
        prop_assert!(h.hermiticity_error() < 1e-12);
        let small = RouterParams::new(p.n_outputs() % 30 + 2, p.beta(), p.phi()).unwrap();
        let layout = FullGraphLayout::default_for(small.n_outputs()).unwrap();
        let full = build_full_hamiltonian(&small, &layout).unwrap();
        prop_assert!(full.hermiticity_error() < 1e-12);
    }

    #[test]
    fn propagator_is_unitary(p in router(), t in 0.0f64..100.0) {
        let u = propagator(&build_reduced_hamiltonian(&p), t).unwrap();
        prop_assert!(u.unitarity_error() < 1e-10, "{}", u.unitarity_error());
    }

    #[test]
    fn probability_is_conserved(p in router(), t in 0.0f64..100.0, from in 1usize..=6) {
        let total: f64 = (1..=6)
            .map(|to| transition_probability(&p, t, from, to).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reversing_phase_reverses_direction(p in router(), t in 0.0f64..60.0) {
        // P_{1,4}(φ) = P_{4,1}(-φ)
        let mirrored = p.with_phi(-p.phi()).unwrap();
        let a = transition_probability(&p, t, 1, 4).unwrap();
        let b = transition_probability(&mirrored, t, 4, 1).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn unmodified_router_is_output_symmetric(n in 2u64..500, t in 0.0f64..60.0) {
        let p = RouterParams::new(n, 1.0, 0.0).unwrap();
        let p14 = transition_probability(&p, t, 1, 4).unwrap();
        let p16 = transition_probability(&p, t, 1, 6).unwrap();
        prop_assert!((p14 - p16 / (n - 1) as f64).abs() < 1e-10);
    }

    #[test]
    fn fidelity_is_a_probability(p in router(), t in 0.0f64..60.0, a in 0.0f64..=1.0, chi in 0.0..TAU) {
        let sp = SuperpositionParams::new(a, chi).unwrap();
        let f = routing_fidelity(&p, t, &sp).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn mixtures_are_valid_density_matrices(
        weights in prop::collection::vec(0.01f64..1.0, 1..6),
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36),
    ) {
        let states: Vec<PureState> = (0..weights.len())
            .map(|i| {
                let amps = DVector::from_iterator(
                    6,
                    raw[6 * i..6 * i + 6].iter().map(|&(re, im)| C64::new(re, im + 1e-3)),
                );
                PureState::normalized(amps).unwrap()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let rho = DensityMatrix::mixture(&weights, &states).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
        prop_assert!(rho.min_eigenvalue() > -1e-10);
        prop_assert!(rho.purity() <= 1.0 + 1e-10);
        prop_assert!(max_abs(&(rho.matrix() - rho.matrix().adjoint())) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn noisy_states_are_valid(
        n in 2u64..200,
        phi in 0.0..TAU,
        t in 0.0f64..20.0,
        k in 0.0f64..50.0,
        a in 0.0f64..=1.0,
        chi in 0.0..TAU,
    ) {
        let p = RouterParams::new(n, 1.0, phi).unwrap();
        let psi0 = input_state(&SuperpositionParams::new(a, chi).unwrap());
        let sigma = static_noise_state(&p, t, &psi0, &VonMisesSpec::new(k).unwrap()).unwrap().value;
        prop_assert!((sigma.trace() - 1.0).abs() < 1e-10);
        prop_assert!(sigma.min_eigenvalue() > -1e-10);
        let spec = OUSpec::new(1.0, 0.8).unwrap().with_trajectories(8).unwrap();
        let rho = &ou_ensemble(&p, &psi0, &spec, &[t.min(3.0)], None).unwrap().states[0];
        prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
        prop_assert!(rho.min_eigenvalue() > -1e-10);
    }
}

#[test]
fn reduced_hamiltonian_handles_extreme_phases() {
    for phase in [-1e6, -TAU, 0.0, 1e-300, 1e6] {
        let h = reduced_with_phase(10, 1.0, phase);
        assert!(h.hermiticity_error() < 1e-15);
    }
}
