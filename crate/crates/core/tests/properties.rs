use num_complex::Complex64;
use proptest::prelude::*;
use rayon::prelude::*;

use qcloning::budget::{fidelity_error_bound, ErrorBudget};
use qcloning::hilbert::{unitarity_defect, DensityMatrix, PureState, QubitLabel};
use qcloning::network::clone_state;
use qcloning::optics::{
    apply_train, element_matrix, modes_to_qubits, qubits_to_modes, ModeSpace, OpticalElement,
    OpticalTrain, PhotonState, QubitMapping,
};
use qcloning::tomography::{
    linear_inversion, monte_carlo_fidelities, optical_detection_table, physical_projection,
    reconstruct_single_qubit, DetectorModel,
};

const N_PATHS: usize = 4;

fn lossless_element() -> impl Strategy<Value = OpticalElement> {
    let path = 0..N_PATHS;
    let angle = -3.2f64..3.2;
    let pair = (0..N_PATHS, 0..N_PATHS).prop_filter("distinct", |(a, b)| a != b);
    prop_oneof![
        (path.clone(), angle.clone()).prop_map(|(path, angle)| OpticalElement::Hwp { path, angle }),
        (path.clone(), angle.clone()).prop_map(|(path, angle)| OpticalElement::Qwp { path, angle }),
        (path.clone(), angle.clone())
            .prop_map(|(path, retardance)| OpticalElement::Ajwp { path, retardance }),
        (path, angle).prop_map(|(path, phase)| OpticalElement::PhaseShift { path, phase }),
        pair.clone().prop_map(|(a, b)| OpticalElement::Pbs { a, b }),
        pair.prop_map(|(a, b)| OpticalElement::Bs { a, b }),
    ]
}

fn train(elements: Vec<OpticalElement>) -> OpticalTrain {
    let mut t = OpticalTrain::new(ModeSpace::new(N_PATHS).unwrap());
    t.extend(elements).unwrap();
    t
}

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_filter("nonzero", |v| {
            v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3
        })
        .prop_map(|v| {
            let n = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            v.into_iter()
                .map(|(a, b)| Complex64::new(a / n, b / n))
                .collect()
        })
}

fn bloch_ball() -> impl Strategy<Value = [f64; 3]> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("inside", |(x, y, z)| x * x + y * y + z * z <= 1.0)
        .prop_map(|(x, y, z)| [x, y, z])
}

proptest! {
    #[test]
    fn lossless_elements_are_unitary(e in lossless_element()) {
        let m = element_matrix(&e, &ModeSpace::new(N_PATHS).unwrap()).unwrap();
        prop_assert!(unitarity_defect(&m) < 1e-12);
    }

    #[test]
    fn train_application_composes(
        a in prop::collection::vec(lossless_element(), 0..8),
        b in prop::collection::vec(lossless_element(), 0..8),
        amps in amplitudes(2 * N_PATHS),
    ) {
        let space = ModeSpace::new(N_PATHS).unwrap();
        let state = PhotonState::from_amplitudes(space, amps).unwrap();
        let (ta, tb) = (train(a.clone()), train(b.clone()));
        let mut both = ta.clone();
        both.append(&tb).unwrap();
        let stepwise = apply_train(&tb, &apply_train(&ta, &state).unwrap()).unwrap();
        let joint = apply_train(&both, &state).unwrap();
        let diff = (stepwise.amplitudes() - joint.amplitudes()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn mode_qubit_mapping_round_trips(amps in amplitudes(16)) {
        let mapping = QubitMapping::standard(8).unwrap();
        let state = PhotonState::from_amplitudes(ModeSpace::new(8).unwrap(), amps).unwrap();
        let qubits = modes_to_qubits(&state, &mapping).unwrap();
        let back = qubits_to_modes(&qubits, &mapping).unwrap();
        let diff = (back.amplitudes() - state.amplitudes()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-15);
    }

    #[test]
    fn exact_probabilities_reconstruct_exactly(s in bloch_ball()) {
        let probs = [(1.0 + s[2]) / 2.0, (1.0 - s[2]) / 2.0, (1.0 + s[0]) / 2.0, (1.0 + s[1]) / 2.0];
        let rho = reconstruct_single_qubit(probs).unwrap();
        let expected = DensityMatrix::from_stokes(QubitLabel::new(1), s).unwrap();
        prop_assert!(rho.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent(c in prop::array::uniform4(0.0f64..1.0)) {
        prop_assume!(c[0] + c[1] > 1e-3);
        let label = [QubitLabel::new(1)];
        let once = physical_projection(&label, &linear_inversion(c).unwrap()).unwrap();
        let twice = physical_projection(&label, once.matrix()).unwrap();
        prop_assert!(once.max_abs_diff(&twice).unwrap() < 1e-12);
        prop_assert!(once.eigenvalues().iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn bound_grows_with_each_entry(
        dc in prop::array::uniform4(0.0f64..0.01),
        dt in 0.0f64..0.01,
        i in 0usize..5,
        bump in 0.0f64..0.01,
    ) {
        let base = ErrorBudget { delta_c: dc, delta_theta: dt };
        let mut more = base;
        if i < 4 { more.delta_c[i] += bump } else { more.delta_theta += bump }
        prop_assert!(fidelity_error_bound(&more).unwrap() >= fidelity_error_bound(&base).unwrap());
    }

    #[test]
    fn clones_are_universal(theta in 0.0f64..std::f64::consts::PI, delta in 0.0f64..std::f64::consts::TAU) {
        let c = clone_state(theta, delta).unwrap();
        prop_assert!((c.f1 - 5.0 / 6.0).abs() < 1e-12);
        prop_assert!((c.f2 - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn random_states_are_normalized(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let psi = PureState::random(&[QubitLabel::new(1), QubitLabel::new(2)], &mut rng).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn million_trials_converge() {
    let table = optical_detection_table(0.0, 0.0).unwrap();
    let model = DetectorModel::default();
    let fs: Vec<[f64; 2]> = (0..100u64)
        .into_par_iter()
        .map(|s| monte_carlo_fidelities(&table, 0.0, 0.0, &model, 1_000_000, s).unwrap())
        .collect();
    for r in 0..2 {
        let within = fs
            .iter()
            .filter(|f| (f[r] - 5.0 / 6.0).abs() < 0.003)
            .count();
        assert!(within >= 95, "replica {}: {within}/100", r + 1);
    }
}
