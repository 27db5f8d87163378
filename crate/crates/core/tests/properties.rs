use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use thermal_shadows::clifford::{
    apply_clifford, sample_pauli_basis, sample_two_design, CliffordCircuit, CliffordGate, CliffordKind,
    MeasurementBasis,
};
use thermal_shadows::dense::{func_of_hermitian, purity, DenseOperator, GibbsState, StateVector};
use thermal_shadows::experiment::{run_to_bytes, Command, ExperimentConfig};
use thermal_shadows::minimax::remez_fit;
use thermal_shadows::pauli::{build_xxz, observable_set, Couplings, Pauli, PauliString};
use thermal_shadows::resources::{build_qsp_circuit, is_native, lower, phase_count, CircuitIR, Gate, GateKind, Tag, Target};
use thermal_shadows::shadow::{
    global_clifford_snapshot, pauli_snapshot_estimate, run_experiment, SampleBudget, Snapshot, StateSource,
    ThermalSampler,
};
use thermal_shadows::thermal::{exact_tpq, tpq_unnormalized};

fn pauli() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn word(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PauliString> {
    n.prop_flat_map(|k| prop::collection::vec(pauli(), k).prop_map(PauliString::new))
}

fn couplings() -> impl Strategy<Value = Couplings> {
    prop::array::uniform6(-2.0f64..2.0).prop_map(|[jx, jy, jz, hx, hy, hz]| Couplings { jx, jy, jz, hx, hy, hz })
}

fn identity(dim: usize) -> DMatrix<C64> {
    DMatrix::identity(dim, dim)
}

/// Scaling-and-squaring Taylor exponential.
fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * a.nrows() as f64;
    let squarings = norm.max(1.0).log2().ceil() as u32 + 4;
    let b = a.scale(0.5f64.powi(squarings as i32));
    let mut term = identity(a.nrows());
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &b / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn equal_up_to_phase(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
    let k = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(k, _)| k)
        .unwrap();
    let ph = a.as_slice()[k] / b.as_slice()[k];
    (ph.norm() - 1.0).abs() < tol && (a - b * ph).camax() < tol
}

/// Unitary of a lowered circuit on its first `width` wires, asserting that
/// the trailing ancillae come back clean.
fn restricted(lowered: &CircuitIR, width: usize) -> DMatrix<C64> {
    let extra = lowered.num_qubits() - width;
    let dim = 1usize << width;
    let mut m = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut v = StateVector::basis_state(lowered.num_qubits(), k << extra);
        lowered.apply(&mut v).unwrap();
        let amps = v.amplitudes();
        let leak: f64 = (0..amps.len())
            .filter(|i| i & ((1 << extra) - 1) != 0)
            .map(|i| amps[i].norm_sqr())
            .sum();
        assert!(leak < 1e-18);
        for r in 0..dim {
            m[(r, k)] = amps[r << extra];
        }
    }
    m
}

/// A random gate on `n` wires; `quarter` restricts angles to multiples of
/// pi/2 so that fault-tolerant lowering stays exact.
fn gate(n: usize, quarter: bool) -> impl Strategy<Value = Gate> {
    let angle = if quarter {
        (-4i32..=4).prop_map(|k| k as f64 * FRAC_PI_2).boxed()
    } else {
        (-3.5f64..3.5).boxed()
    };
    let wires = Just((0..n).collect::<Vec<usize>>()).prop_shuffle();
    (0usize..11, wires, angle, prop::collection::vec(1usize..4, 3), any::<bool>()).prop_map(
        move |(pick, q, a, letters, neg)| {
            let tag = Tag::Select;
            let lt = |i: usize| [Pauli::X, Pauli::Y, Pauli::Z][letters[i] - 1];
            match pick {
                0 => Gate::new(GateKind::H, vec![q[0]], tag),
                1 => Gate::new(GateKind::S, vec![q[0]], tag),
                2 => Gate::new(GateKind::T, vec![q[0]], tag),
                3 => Gate::new(GateKind::Y, vec![q[0]], tag),
                4 => Gate::rotation(GateKind::Ry, q[0], Some(a), tag),
                5 => Gate::rotation(GateKind::Rz, q[0], Some(a), tag),
                6 => Gate::new(GateKind::Cnot, vec![q[0], q[1]], tag),
                7 => Gate::new(GateKind::Toffoli, q[..3.min(n)].to_vec(), tag),
                8 => Gate::new(GateKind::MultiControlledZ, q.clone(), tag),
                9 => {
                    let mut g = Gate::new(GateKind::MultiControlledRy, q.clone(), tag);
                    g.angle = Some(a);
                    g
                }
                _ => {
                    let t = 1 + (letters[2] % 2);
                    Gate::new(
                        GateKind::ControlledPauli {
                            letters: (0..t).map(lt).collect(),
                            negative: neg,
                        },
                        q.clone(),
                        tag,
                    )
                }
            }
        },
    )
}

fn circuit(quarter: bool) -> impl Strategy<Value = CircuitIR> {
    (3usize..=4)
        .prop_flat_map(move |n| (Just(n), prop::collection::vec(gate(n, quarter), 1..6)))
        .prop_map(|(n, gates)| CircuitIR::new(n, gates).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_matrices_are_hermitian_unitary_involutions(p in word(1..=4)) {
        let m = p.matrix().unwrap();
        let a = m.matrix();
        let dim = a.nrows();
        prop_assert!((a - a.adjoint()).camax() < 1e-14);
        prop_assert!((a * a - identity(dim)).camax() < 1e-14);
        let tr = m.trace();
        if p.locality() == 0 {
            prop_assert!((tr.re - dim as f64).abs() < 1e-12);
        } else {
            prop_assert!(tr.norm() < 1e-12);
        }
    }

    #[test]
    fn gibbs_state_commutes_with_h(c in couplings(), n in 2usize..=4, beta in 0.0f64..3.0) {
        let h = build_xxz(n, &c).unwrap();
        let hm = h.matrix().unwrap();
        let rho = GibbsState::new(&h, beta).unwrap().density();
        let comm = hm.matrix() * rho.matrix() - rho.matrix() * hm.matrix();
        prop_assert!(comm.camax() < 1e-9, "{:e}", comm.camax());
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cooling_purifies(c in couplings(), n in 2usize..=4) {
        let h = build_xxz(n, &c).unwrap();
        let ps: Vec<f64> = (0..=6)
            .map(|i| purity(&GibbsState::new(&h, 0.5 * i as f64).unwrap().density()))
            .collect();
        for w in ps.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12, "{ps:?}");
        }
    }

    #[test]
    fn spectral_exp_matches_taylor(re in prop::collection::vec(-1.0f64..1.0, 64), im in prop::collection::vec(-1.0f64..1.0, 64)) {
        let a = DMatrix::from_fn(8, 8, |i, j| C64::new(re[8 * i + j], im[8 * i + j]));
        let h = (&a + a.adjoint()).scale(0.5);
        let got = func_of_hermitian(&DenseOperator::from_matrix(h.clone()).unwrap(), f64::exp).unwrap();
        prop_assert!((got.matrix() - expm(&h)).camax() < 1e-8);
    }

    #[test]
    fn sampled_unitaries_are_clifford(n in 1usize..=3, seed in any::<u64>()) {
        let u = sample_two_design(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let um = u.unitary().unwrap();
        let um = um.matrix();
        let dim = 1usize << n;
        let all: Vec<DMatrix<C64>> = (0..1usize << (2 * n))
            .map(|k| {
                let ops = (0..n).map(|q| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][(k >> (2 * q)) & 3]).collect();
                PauliString::new(ops).matrix().unwrap().into_inner()
            })
            .collect();
        for q in 0..n {
            for g in [Pauli::X, Pauli::Z] {
                let p = PauliString::from_sparse(n, &[(q, g)]).unwrap().matrix().unwrap();
                let conj = um * p.matrix() * um.adjoint();
                let hit = all.iter().any(|m| ((m.adjoint() * &conj).trace() / dim as f64).norm() > 1.0 - 1e-9);
                prop_assert!(hit, "generator {g:?} on {q} not mapped to a Pauli");
            }
        }
    }

    #[test]
    fn single_qubit_channel_inverts(re in prop::array::uniform3(-1.0f64..1.0)) {
        // Bloch vector inside the ball
        let r = re.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v: Vec<f64> = if r > 1.0 { re.iter().map(|x| x / r).collect() } else { re.to_vec() };
        let half = C64::new(0.5, 0.0);
        let rho = DMatrix::from_row_slice(2, 2, &[
            half * (1.0 + v[2]), C64::new(0.5 * v[0], -0.5 * v[1]),
            C64::new(0.5 * v[0], 0.5 * v[1]), half * (1.0 - v[2]),
        ]);
        let mut acc = DMatrix::<C64>::zeros(2, 2);
        for axis in Pauli::NON_IDENTITY {
            let vc = MeasurementBasis::new(vec![axis]).unwrap().rotation_circuit();
            let vm = vc.unitary().unwrap().into_inner();
            let rotated = &vm * &rho * vm.adjoint();
            for b in 0..2u8 {
                let p = rotated[(b as usize, b as usize)].re;
                let snap = global_clifford_snapshot(&vc, &[b]).unwrap();
                acc += snap.matrix().scale(p / 3.0);
            }
        }
        prop_assert!((acc - rho).camax() < 1e-10);
    }

    #[test]
    fn snapshot_scores_are_bounded(seed in any::<u64>(), bits in prop::collection::vec(0u8..2, 4), o in word(4..=4)) {
        let basis = sample_pauli_basis(4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let s = Snapshot::new(basis, bits).unwrap();
        let v = pauli_snapshot_estimate(&s, &o).unwrap();
        let cap = 3f64.powi(o.locality() as i32);
        prop_assert!(v == 0.0 || (v.abs() - cap).abs() < 1e-12, "{v}");
    }

    #[test]
    fn tpq_norm_is_the_filtered_overlap(c in couplings(), seed in any::<u64>(), beta in 0.0f64..3.0) {
        let h = build_xxz(3, &c).unwrap();
        let u = sample_two_design(3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let v = tpq_unnormalized(&h, beta, &u).unwrap();
        let e = expm(&h.matrix().unwrap().matrix().scale(-beta));
        let phi = apply_clifford(&u, &StateVector::zero_state(3)).unwrap();
        let expect = (phi.amplitudes().adjoint() * &e * phi.amplitudes())[(0, 0)].re;
        prop_assert!((v.norm_squared() - expect).abs() < 1e-9 * expect.max(1.0));
    }

    #[test]
    fn tpq_ignores_the_global_phase_of_u(seed in any::<u64>(), beta in 0.0f64..3.0) {
        let h = build_xxz(3, &Couplings::default()).unwrap();
        let u = sample_two_design(3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        // X Z X Z = -I, S^2 = Z, so this prefix contributes only a phase
        let mut gates: Vec<CliffordGate> = [CliffordKind::X, CliffordKind::Z, CliffordKind::X, CliffordKind::Z]
            .into_iter()
            .map(|k| CliffordGate::single(k, 2))
            .collect();
        gates.extend(u.gates().iter().cloned());
        let w = CliffordCircuit::new(3, gates).unwrap();
        let a = exact_tpq(&h, beta, &u).unwrap();
        let b = exact_tpq(&h, beta, &w).unwrap();
        prop_assert!((a.fidelity(&b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_count_is_two_d_plus_one(c in couplings(), n in 2usize..=6, d in 0usize..=64) {
        let h = build_xxz(n, &c).unwrap();
        prop_assert_eq!(phase_count(&build_qsp_circuit(&h, d).unwrap()), 2 * d + 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nisq_lowering_preserves_the_unitary(ir in circuit(false)) {
        let low = lower(&ir, Target::Nisq).unwrap();
        prop_assert!(is_native(&low, Target::Nisq));
        prop_assert!(low.num_qubits() <= 6);
        let want = ir.unitary().unwrap();
        prop_assert!(equal_up_to_phase(&restricted(&low, ir.num_qubits()), want.matrix(), 1e-8));
    }

    #[test]
    fn ft_lowering_preserves_the_unitary(ir in circuit(true)) {
        let low = lower(&ir, Target::Ft).unwrap();
        prop_assert!(is_native(&low, Target::Ft));
        let want = ir.unitary().unwrap();
        prop_assert!(equal_up_to_phase(&restricted(&low, ir.num_qubits()), want.matrix(), 1e-8));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn minimax_error_falls_with_stride_two(tau in 0.2f64..6.0, d in 1usize..=8) {
        let a = remez_fit(tau, d, (0.0, 1.0)).unwrap().achieved_error();
        let b = remez_fit(tau, d + 2, (0.0, 1.0)).unwrap().achieved_error();
        prop_assert!(b <= a * (1.0 + 1e-9) + 1e-300, "{a:e} -> {b:e}");
    }

    #[test]
    fn shadow_runs_replay(seed in any::<u64>()) {
        let h = build_xxz(3, &Couplings::default()).unwrap();
        let obs = observable_set(3).unwrap();
        let sampler = ThermalSampler::new(&h, 1.0, StateSource::ExactTpq, None).unwrap();
        let budget = SampleBudget::from_sets(obs.len(), 20, 5).unwrap();
        let a = run_experiment(&sampler, &obs, &budget, seed).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap()
            .install(|| run_experiment(&sampler, &obs, &budget, seed).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cli_output_replays(seed in any::<u64>()) {
        let cfg = ExperimentConfig { seed, n: 3, samples: 40, ..Default::default() };
        prop_assert_eq!(run_to_bytes(Command::RuStats, &cfg).unwrap(), run_to_bytes(Command::RuStats, &cfg).unwrap());
    }
}
