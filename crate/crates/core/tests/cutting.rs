// SPDX-License-Identifier: Apache-2.0

mod common;

use proptest::prelude::*;
use qunicorn_core::circuit::{Circuit, GateKind, Pauli, PauliObservable};
use qunicorn_core::cutting::{
    find_cut, generate_subcircuits, group_observables, measure_in_basis, measured_subcircuits, reconstruct_exact,
    reconstruct_fragments, reconstruct_sampled, CutError, Fragment,
};
use qunicorn_core::mitigation::{mitigate, ConfusionModel};
use qunicorn_core::scenarios::{edge_observables, path_graph, qaoa_maxcut};
use qunicorn_core::simulator::{expectation, sample, NoiseSpec};

/// Brute force: does some qubit bipartition admit cutting `q` after `p`?
fn candidate_is_feasible(c: &Circuit, q: usize, p: usize, max_width: usize) -> bool {
    let n = c.num_qubits;
    let others: Vec<usize> = (0..n).filter(|&x| x != q).collect();
    (0..1u32 << others.len()).any(|mask| {
        let up: Vec<usize> = others.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect();
        let down: Vec<usize> = others.iter().copied().filter(|x| !up.contains(x)).collect();
        if up.len() + 1 > max_width || down.len() > max_width {
            return false;
        }
        c.instructions.iter().enumerate().all(|(i, inst)| {
            let rest = inst.qubits.iter().filter(|&&x| x != q);
            if !inst.qubits.contains(&q) {
                let v: Vec<_> = rest.collect();
                v.iter().all(|x| up.contains(x)) || v.iter().all(|x| down.contains(x))
            } else if i <= p {
                rest.into_iter().all(|x| up.contains(x))
            } else {
                rest.into_iter().all(|x| down.contains(x))
            }
        })
    })
}

fn brute_force_first_cut(c: &Circuit, max_width: usize) -> Option<(usize, usize)> {
    (0..c.num_qubits).find_map(|q| {
        c.instructions
            .iter()
            .enumerate()
            .filter(|(_, inst)| inst.qubits.contains(&q))
            .map(|(p, _)| p)
            .find(|&p| candidate_is_feasible(c, q, p, max_width))
            .map(|p| (q, p))
    })
}

fn qaoa4() -> Circuit {
    qaoa_maxcut(4, &path_graph(4), &[0.37], &[0.81])
}

#[test]
fn qaoa_path_cut_splits_the_chain() {
    let c = qaoa4();
    let plan = find_cut(&c, 2).unwrap();
    assert_eq!(plan.cut_qubit, 1);
    assert_eq!(plan.upstream_qubits, [0, 1]);
    assert_eq!(plan.downstream_qubits, [2, 3]);
    assert_eq!(Some((plan.cut_qubit, plan.cut_position)), brute_force_first_cut(&c, 2));
    let set = generate_subcircuits(&c, &plan);
    assert_eq!(set.len(), 7);
    assert!(set.max_width() <= 3);
    for obs in edge_observables(&path_graph(4)) {
        let uncut = expectation(&c, &obs).unwrap();
        let cut = reconstruct_exact(&plan, &set, &obs).unwrap();
        assert!((cut - uncut).abs() < 1e-9, "{obs}: {cut} vs {uncut}");
    }
}

#[test]
fn qaoa_sampled_reconstruction_within_five_sigma() {
    let c = qaoa4();
    let plan = find_cut(&c, 2).unwrap();
    let set = generate_subcircuits(&c, &plan);
    let observables = edge_observables(&path_graph(4));
    let groups = group_observables(&observables);
    assert_eq!(groups.len(), 1);
    let circuits = measured_subcircuits(&plan, &set, &groups[0].0);
    let counts: Vec<_> =
        circuits.iter().enumerate().map(|(i, sc)| sample(sc, 100_000, 11 + i as u64, None).unwrap()).collect();
    for obs in &observables {
        let est = reconstruct_sampled(&plan, &set, obs, &counts).unwrap();
        let uncut = expectation(&c, obs).unwrap();
        assert!(est.std_error > 0.0 && est.std_error < 0.02);
        assert!((est.value - uncut).abs() <= 5.0 * est.std_error, "{obs}: {est:?} vs {uncut}");
    }
}

#[test]
fn sampled_errors_are_calibrated() {
    // Over many seeds, ~95% of estimates land within 2σ.
    let c = qaoa4();
    let plan = find_cut(&c, 2).unwrap();
    let set = generate_subcircuits(&c, &plan);
    let obs = PauliObservable::zz(1, 2);
    let uncut = expectation(&c, &obs).unwrap();
    let circuits = measured_subcircuits(&plan, &set, &obs.paulis);
    let mut inside = 0;
    for run in 0..200u64 {
        let counts: Vec<_> =
            circuits.iter().enumerate().map(|(i, sc)| sample(sc, 2000, run * 7 + i as u64, None).unwrap()).collect();
        let est = reconstruct_sampled(&plan, &set, &obs, &counts).unwrap();
        if (est.value - uncut).abs() <= 2.0 * est.std_error {
            inside += 1;
        }
    }
    assert!((175..=200).contains(&inside), "{inside}/200 within 2σ");
}

#[test]
fn mitigated_fragments_are_unbiased_and_calibrated() {
    let c = qaoa4();
    let plan = find_cut(&c, 2).unwrap();
    let set = generate_subcircuits(&c, &plan);
    let obs = PauliObservable::zz(1, 2);
    let uncut = expectation(&c, &obs).unwrap();
    let circuits = measured_subcircuits(&plan, &set, &obs.paulis);
    let noise = NoiseSpec::uniform(3, 0.06, 0.04);
    let (mut inside, mut raw_bias, mut mit_bias) = (0, 0.0, 0.0);
    let runs = 200u64;
    for run in 0..runs {
        let mut raw = Vec::new();
        let mut mitigated = Vec::new();
        for (i, sc) in circuits.iter().enumerate() {
            let counts = sample(sc, 4000, run * 11 + i as u64, Some(&noise)).unwrap();
            let model = ConfusionModel::for_measurements(sc, &noise);
            let q = mitigate(&counts, &model).unwrap();
            let gains = vec![1.0 - 0.06 - 0.04; model.num_bits()];
            mitigated.push(Fragment { probs: q.probs, shots: q.shots, gains });
            raw.push(counts);
        }
        let noisy = reconstruct_sampled(&plan, &set, &obs, &raw).unwrap();
        let est = reconstruct_fragments(&plan, &set, &obs, &mitigated).unwrap();
        raw_bias += (noisy.value - uncut) / runs as f64;
        mit_bias += (est.value - uncut) / runs as f64;
        if (est.value - uncut).abs() <= 2.0 * est.std_error {
            inside += 1;
        }
    }
    assert!(mit_bias.abs() < raw_bias.abs() / 3.0, "raw bias {raw_bias}, mitigated bias {mit_bias}");
    assert!((175..=200).contains(&inside), "{inside}/200 within 2σ");
}

#[test]
fn mixed_basis_observables() {
    let c = qaoa4();
    let plan = find_cut(&c, 2).unwrap();
    let set = generate_subcircuits(&c, &plan);
    for text in ["X0 Y3", "Y1 X2", "-0.5*X1", "Z0 X3", "Y0Y1", "I"] {
        let obs: PauliObservable = text.parse().unwrap();
        let uncut = expectation(&c, &obs).unwrap();
        let cut = reconstruct_exact(&plan, &set, &obs).unwrap();
        assert!((cut - uncut).abs() < 1e-9, "{obs}: {cut} vs {uncut}");
        let circuits = measured_subcircuits(&plan, &set, &obs.paulis);
        let counts: Vec<_> =
            circuits.iter().enumerate().map(|(i, sc)| sample(sc, 100_000, i as u64, None).unwrap()).collect();
        let est = reconstruct_sampled(&plan, &set, &obs, &counts).unwrap();
        assert!((est.value - uncut).abs() <= 5.0 * est.std_error.max(1e-12), "{obs}: {est:?} vs {uncut}");
    }
}

#[test]
fn uncut_basis_runs_estimate_expectations() {
    let c = qaoa4();
    for text in ["X0 Y3", "-0.5*X1", "Z1 Z2"] {
        let obs: PauliObservable = text.parse().unwrap();
        let run = measure_in_basis(&c, &obs.paulis);
        let counts = sample(&run, 50_000, 5, None).unwrap();
        let est = Fragment::from_counts(&counts).expectation(&obs);
        let exact = expectation(&c, &obs).unwrap();
        assert!((est.value - exact).abs() <= 5.0 * est.std_error.max(1e-12), "{obs}: {est:?} vs {exact}");
    }
}

#[test]
fn cutting_rejects_measured_circuits() {
    let mut c = qaoa4();
    c.num_clbits = 4;
    c.measure_all();
    assert_eq!(find_cut(&c, 2), Err(CutError::NotGatesOnly));
}

fn random_observable(seed: u64, n: usize) -> PauliObservable {
    let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
    let a = (seed % n as u64) as usize;
    let b = ((seed / 7) % n as u64) as usize;
    let mut terms = vec![(a, paulis[(seed / 3 % 3) as usize])];
    if seed.is_multiple_of(2) && b != a {
        terms.push((b, paulis[(seed / 11 % 3) as usize]));
    }
    PauliObservable::new(&terms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_reconstruction_matches_uncut(seed in any::<u64>(), n in 2usize..=6, gates in 1usize..25, width_slack in 0usize..2) {
        let c = common::random_circuit(seed, n, gates);
        let max_width = (n - 1).saturating_sub(width_slack).max(1);
        let expected_first = brute_force_first_cut(&c, max_width);
        match find_cut(&c, max_width) {
            Ok(plan) => {
                prop_assert_eq!(Some((plan.cut_qubit, plan.cut_position)), expected_first);
                let set = generate_subcircuits(&c, &plan);
                prop_assert!(set.max_width() <= max_width + 1);
                prop_assert_eq!(set.upstream.iter().map(|(_, u)| u.num_qubits).max(), Some(plan.upstream_qubits.len()));
                let total: usize = set.upstream[0].1.instructions.len() + set.downstream[0].1.instructions.len();
                prop_assert_eq!(total, c.instructions.iter().filter(|i| i.kind != GateKind::Barrier).count());
                for k in 0..4 {
                    let obs = random_observable(seed.wrapping_add(k), n);
                    let uncut = expectation(&c, &obs).unwrap();
                    let cut = reconstruct_exact(&plan, &set, &obs).unwrap();
                    prop_assert!((cut - uncut).abs() < 1e-9, "{}: {} vs {}", obs, cut, uncut);
                }
            }
            Err(CutError::NoCutFound { .. }) => prop_assert_eq!(expected_first, None),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}

/// Two random blocks sharing exactly one wire: always admits a cut.
fn two_block_circuit(seed: u64, k: usize, n: usize, g1: usize, g2: usize) -> Circuit {
    let a = common::random_circuit(seed, k, g1);
    let b = common::random_circuit(seed ^ 0x9e37_79b9, n - k + 1, g2);
    let mut c = Circuit::new(n, 0);
    c.instructions.extend(a.instructions);
    c.h(k - 1);
    for mut inst in b.instructions {
        inst.qubits.iter_mut().for_each(|q| *q += k - 1);
        c.push(inst);
    }
    c
}

#[test]
fn spectator_components_are_split_exactly() {
    // Spectators {3} and {4,5} only fit as up {0,4,5} / down {1,2,3}.
    let c = two_block_circuit(4447420634625613595, 3, 6, 2, 2);
    let plan = find_cut(&c, 3).unwrap();
    assert_eq!((plan.cut_qubit, plan.cut_position), (0, 0));
    assert_eq!(Some((0, 0)), brute_force_first_cut(&c, 3));
    assert_eq!(plan.upstream_qubits, [0, 4, 5]);
    assert_eq!(plan.downstream_qubits, [1, 2, 3]);
    let set = generate_subcircuits(&c, &plan);
    for j in 0..6 {
        let obs = random_observable(j, 6);
        let cut = reconstruct_exact(&plan, &set, &obs).unwrap();
        assert!((cut - expectation(&c, &obs).unwrap()).abs() < 1e-9, "{obs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn two_block_circuits_always_cut(seed in any::<u64>(), n in 3usize..=6, split in 0usize..4, g1 in 1usize..15, g2 in 1usize..15) {
        let k = 2 + split % (n - 2);
        let c = two_block_circuit(seed, k, n, g1, g2);
        let max_width = k.max(n - k);
        let plan = find_cut(&c, max_width).unwrap();
        prop_assert_eq!(Some((plan.cut_qubit, plan.cut_position)), brute_force_first_cut(&c, max_width));
        let set = generate_subcircuits(&c, &plan);
        prop_assert!(set.max_width() <= max_width + 1);
        for j in 0..4 {
            let obs = random_observable(seed.wrapping_mul(31).wrapping_add(j), n);
            let uncut = expectation(&c, &obs).unwrap();
            let cut = reconstruct_exact(&plan, &set, &obs).unwrap();
            prop_assert!((cut - uncut).abs() < 1e-9, "{}: {} vs {}", obs, cut, uncut);
        }
    }
}
