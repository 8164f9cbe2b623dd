// SPDX-License-Identifier: Apache-2.0

//! Dense statevector simulator.
//!
//! Qubit ordering is little-endian: qubit `q` is bit `q` of the basis-state
//! index. Bitstring keys print classical bit 0 rightmost.
//!
//! Sampling is reproducible across platforms: shots are drawn with
//! `ChaCha8Rng::seed_from_u64(seed)`, each uniform variate is the top 53 bits
//! of one `next_u64` call, outcomes are picked by inverse CDF over the
//! measured outcomes in ascending (lexicographic) order, and readout noise
//! consumes exactly one further variate per measured bit per shot.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateKind, Instruction, Pauli, PauliObservable, ValidationReport};
use crate::gates::{single_qubit_matrix, Matrix2};

pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulationError {
    #[error("circuit has {num_qubits} qubits, the simulator supports at most {MAX_QUBITS}")]
    TooLarge { num_qubits: usize },
    #[error("circuit has no measurements")]
    NoMeasurements,
    #[error("shots must be at least 1")]
    NoShots,
    #[error("invalid circuit: {0}")]
    InvalidCircuit(ValidationReport),
    #[error("observable acts on qubit {qubit} but the circuit has {num_qubits} qubits")]
    ObservableOutOfRange { qubit: usize, num_qubits: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(num_qubits: usize) -> Result<Self, SimulationError> {
        if num_qubits > MAX_QUBITS {
            return Err(SimulationError::TooLarge { num_qubits });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits, amplitudes })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self, SimulationError> {
        let mut sv = StateVector::zero(num_qubits)?;
        sv.amplitudes[0] = Complex64::new(0.0, 0.0);
        sv.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(sv)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies one instruction. Measurements and barriers are no-ops.
    pub fn apply(&mut self, inst: &Instruction) {
        let q = &inst.qubits;
        match inst.kind {
            GateKind::Measure | GateKind::Barrier => {}
            GateKind::Cx => self.apply_cx(q[0], q[1]),
            GateKind::Cz => {
                let mask = (1 << q[0]) | (1 << q[1]);
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a = -*a;
                    }
                }
            }
            GateKind::Swap => {
                let (a, b) = (1usize << q[0], 1usize << q[1]);
                for i in 0..self.amplitudes.len() {
                    if i & a != 0 && i & b == 0 {
                        self.amplitudes.swap(i, i ^ a ^ b);
                    }
                }
            }
            GateKind::Ccx => {
                let controls = (1 << q[0]) | (1 << q[1]);
                let t = 1usize << q[2];
                for i in 0..self.amplitudes.len() {
                    if i & controls == controls && i & t == 0 {
                        self.amplitudes.swap(i, i | t);
                    }
                }
            }
            kind => {
                let m = single_qubit_matrix(kind, &inst.params).expect("single-qubit gate");
                self.apply_matrix(&m, q[0]);
            }
        }
    }

    pub fn apply_matrix(&mut self, m: &Matrix2, qubit: usize) {
        let bit = 1usize << qubit;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_cx(&mut self, control: usize, target: usize) {
        let (c, t) = (1usize << control, 1usize << target);
        for i in 0..self.amplitudes.len() {
            if i & c != 0 && i & t == 0 {
                self.amplitudes.swap(i, i | t);
            }
        }
    }

    /// `⟨ψ|P|ψ⟩` for the Pauli string, scaled by its coefficient.
    pub fn expectation(&self, obs: &PauliObservable) -> Result<f64, SimulationError> {
        let (mut x_mask, mut z_mask, mut num_y) = (0usize, 0usize, 0u32);
        for q in obs.support() {
            if q >= self.num_qubits {
                return Err(SimulationError::ObservableOutOfRange { qubit: q, num_qubits: self.num_qubits });
            }
            match obs.get(q) {
                Pauli::X => x_mask |= 1 << q,
                Pauli::Y => {
                    x_mask |= 1 << q;
                    z_mask |= 1 << q;
                    num_y += 1;
                }
                Pauli::Z => z_mask |= 1 << q,
                Pauli::I => {}
            }
        }
        // P|i⟩ = i^{#Y} (-1)^{popcount(i & z_mask)} |i ^ x_mask⟩
        let y_phase = match num_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in self.amplitudes.iter().enumerate() {
            let sign = if (i & z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += self.amplitudes[i ^ x_mask].conj() * *a * sign;
        }
        Ok(obs.coefficient * (acc * y_phase).re)
    }
}

/// Final state of the circuit's gates applied to `|0…0⟩`.
pub fn run_state(circuit: &Circuit) -> Result<StateVector, SimulationError> {
    let mut sv = StateVector::zero(circuit.num_qubits)?;
    for inst in &circuit.instructions {
        sv.apply(inst);
    }
    Ok(sv)
}

pub fn expectation(circuit: &Circuit, obs: &PauliObservable) -> Result<f64, SimulationError> {
    run_state(circuit)?.expectation(obs)
}

/// Readout error of one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReadoutError {
    /// Probability of reading 1 when the true bit is 0.
    pub e0: f64,
    /// Probability of reading 0 when the true bit is 1.
    pub e1: f64,
}

impl ReadoutError {
    pub fn new(e0: f64, e1: f64) -> Self {
        ReadoutError { e0, e1 }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..0.5).contains(&self.e0) && (0.0..0.5).contains(&self.e1)
    }
}

/// Per-qubit readout noise, indexed by qubit. Qubits beyond the list are noiseless.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseSpec {
    pub readout: Vec<ReadoutError>,
}

impl NoiseSpec {
    pub fn uniform(num_qubits: usize, e0: f64, e1: f64) -> Self {
        NoiseSpec { readout: vec![ReadoutError::new(e0, e1); num_qubits] }
    }

    pub fn for_qubit(&self, qubit: usize) -> ReadoutError {
        self.readout.get(qubit).copied().unwrap_or_default()
    }

    pub fn is_valid(&self) -> bool {
        self.readout.iter().all(ReadoutError::is_valid)
    }
}

/// Shot histogram keyed by bitstring (classical bit 0 rightmost).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub shots: u64,
    pub histogram: BTreeMap<String, u64>,
}

impl Counts {
    pub fn num_bits(&self) -> Option<usize> {
        self.histogram.keys().next().map(String::len)
    }

    pub fn get(&self, key: &str) -> u64 {
        self.histogram.get(key).copied().unwrap_or(0)
    }

    /// Keys sorted by descending count, ties by ascending key.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<_> = self.histogram.iter().map(|(k, &c)| (k.as_str(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }

    /// Empirical `⟨Z…Z⟩` over the given classical bits together with the
    /// variance of that estimate, `(1 - m²) / shots`.
    pub fn parity_expectation(&self, clbits: &[usize]) -> (f64, f64) {
        if self.shots == 0 {
            return (0.0, 0.0);
        }
        let mut acc: i64 = 0;
        for (key, &count) in &self.histogram {
            let bytes = key.as_bytes();
            let ones = clbits.iter().filter(|&&c| c < bytes.len() && bytes[bytes.len() - 1 - c] == b'1').count();
            if ones % 2 == 0 {
                acc += count as i64;
            } else {
                acc -= count as i64;
            }
        }
        let mean = acc as f64 / self.shots as f64;
        (mean, (1.0 - mean * mean).max(0.0) / self.shots as f64)
    }
}

pub fn bitstring(value: u64, width: usize) -> String {
    (0..width).rev().map(|b| if value >> b & 1 == 1 { '1' } else { '0' }).collect()
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws `shots` samples of the circuit's measurements.
pub fn sample(circuit: &Circuit, shots: u64, seed: u64, noise: Option<&NoiseSpec>) -> Result<Counts, SimulationError> {
    let report = circuit.validate();
    if !report.is_ok() {
        return Err(SimulationError::InvalidCircuit(report));
    }
    if shots == 0 {
        return Err(SimulationError::NoShots);
    }
    let mut measurements = circuit.measurements();
    if measurements.is_empty() {
        return Err(SimulationError::NoMeasurements);
    }
    // Ascending clbit order makes the compact outcome index order-isomorphic
    // to the bitstring keys.
    measurements.sort_by_key(|&(_, c)| c);
    let state = run_state(circuit)?;

    let k = measurements.len();
    let mut marginal = vec![0.0f64; 1 << k];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let mut outcome = 0usize;
        for (j, &(q, _)) in measurements.iter().enumerate() {
            outcome |= (i >> q & 1) << j;
        }
        marginal[outcome] += p;
    }
    let mut cdf = Vec::with_capacity(marginal.len());
    let mut acc = 0.0;
    for p in &marginal {
        acc += p;
        cdf.push(acc);
    }
    let last_nonzero = marginal.iter().rposition(|&p| p > 0.0).unwrap_or(0);

    let errors: Vec<ReadoutError> =
        measurements.iter().map(|&(q, _)| noise.map(|n| n.for_qubit(q)).unwrap_or_default()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = vec![0u64; 1 << k];
    for _ in 0..shots {
        let u = uniform(&mut rng) * acc;
        let mut outcome = cdf.partition_point(|&c| c <= u).min(last_nonzero);
        if noise.is_some() {
            for (j, err) in errors.iter().enumerate() {
                let v = uniform(&mut rng);
                let bit = outcome >> j & 1;
                let flip = if bit == 0 { v < err.e0 } else { v < err.e1 };
                if flip {
                    outcome ^= 1 << j;
                }
            }
        }
        tally[outcome] += 1;
    }

    let mut histogram = BTreeMap::new();
    for (outcome, &count) in tally.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let mut value = 0u64;
        for (j, &(_, c)) in measurements.iter().enumerate() {
            value |= ((outcome >> j & 1) as u64) << c;
        }
        histogram.insert(bitstring(value, circuit.num_clbits), count);
    }
    Ok(Counts { shots, histogram })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    fn bell() -> Circuit {
        let mut c = Circuit::new(2, 2);
        c.h(0).cx(0, 1).measure(0, 0).measure(1, 1);
        c
    }

    #[test]
    fn hadamard_state() {
        let mut c = Circuit::new(1, 0);
        c.h(0);
        let sv = run_state(&c).unwrap();
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        assert!(close(sv.amplitudes()[0], h) && close(sv.amplitudes()[1], h));
    }

    #[test]
    fn bell_state_amplitudes() {
        let sv = run_state(&bell()).unwrap();
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let expected = [h, z, z, h];
        assert!(sv.amplitudes().iter().zip(expected).all(|(a, b)| close(*a, b)));
    }

    #[test]
    fn rx_pi_gives_minus_i_on_one() {
        let mut c = Circuit::new(1, 0);
        c.rx(PI, 0);
        let sv = run_state(&c).unwrap();
        assert!(sv.amplitudes()[0].norm() < 1e-12);
        assert!(close(sv.amplitudes()[1], Complex64::new(0.0, -1.0)));
    }

    #[test]
    fn too_large_is_rejected() {
        let c = Circuit::new(21, 0);
        assert_eq!(run_state(&c), Err(SimulationError::TooLarge { num_qubits: 21 }));
    }

    #[test]
    fn bell_sampling_within_five_sigma() {
        for seed in [0, 1, 7, 12345] {
            let counts = sample(&bell(), 10_000, seed, None).unwrap();
            assert_eq!(counts.shots, 10_000);
            assert!(counts.histogram.keys().all(|k| k == "00" || k == "11"));
            assert!(counts.get("00").abs_diff(5000) <= 250);
        }
    }

    #[test]
    fn deterministic_outcome_and_seed_determinism() {
        let mut c = Circuit::new(1, 1);
        c.x(0).measure(0, 0);
        let noise = NoiseSpec::uniform(1, 0.0, 0.0);
        let counts = sample(&c, 100, 3, Some(&noise)).unwrap();
        assert_eq!(counts.histogram.into_iter().collect::<Vec<_>>(), [("1".into(), 100)]);
        assert_eq!(sample(&bell(), 500, 9, None), sample(&bell(), 500, 9, None));
    }

    #[test]
    fn readout_flip_rate() {
        let mut c = Circuit::new(1, 1);
        c.measure(0, 0);
        let noise = NoiseSpec::uniform(1, 0.1, 0.0);
        let counts = sample(&c, 100_000, 11, Some(&noise)).unwrap();
        let frac = counts.get("1") as f64 / 100_000.0;
        let bound = 5.0 * (0.09f64 / 100_000.0).sqrt();
        assert!((frac - 0.1).abs() <= bound, "{frac}");
    }

    #[test]
    fn clbit_zero_is_rightmost() {
        let mut c = Circuit::new(3, 3);
        c.x(0).measure(0, 0).measure(1, 1).measure(2, 2);
        let counts = sample(&c, 10, 0, None).unwrap();
        assert_eq!(counts.get("001"), 10);
        let mut swapped = Circuit::new(2, 2);
        swapped.x(0).measure(0, 1).measure(1, 0);
        assert_eq!(sample(&swapped, 10, 0, None).unwrap().get("10"), 10);
    }

    #[test]
    fn sampling_errors() {
        let mut c = Circuit::new(1, 0);
        c.h(0);
        assert_eq!(sample(&c, 10, 0, None), Err(SimulationError::NoMeasurements));
        assert_eq!(sample(&bell(), 0, 0, None), Err(SimulationError::NoShots));
    }

    #[test]
    fn expectation_examples() {
        let gates = bell().gates_only();
        assert!((expectation(&gates, &PauliObservable::zz(0, 1)).unwrap() - 1.0).abs() < 1e-9);
        assert!(expectation(&gates, &PauliObservable::z(1)).unwrap().abs() < 1e-9);
        let mut plus = Circuit::new(1, 0);
        plus.h(0);
        let x0 = PauliObservable::new(&[(0, Pauli::X)]);
        assert!((expectation(&plus, &x0).unwrap() - 1.0).abs() < 1e-9);
        let scaled = PauliObservable::identity().with_coefficient(2.5);
        assert!((expectation(&gates, &scaled).unwrap() - 2.5).abs() < 1e-12);
        assert!(matches!(
            expectation(&gates, &PauliObservable::z(4)),
            Err(SimulationError::ObservableOutOfRange { qubit: 4, .. })
        ));
    }

    #[test]
    fn y_expectation_of_plus_i_state() {
        let mut c = Circuit::new(1, 0);
        c.h(0).s(0);
        let y = PauliObservable::new(&[(0, Pauli::Y)]);
        assert!((expectation(&c, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parity_from_counts() {
        let counts = Counts {
            shots: 4,
            histogram: [("00".into(), 1), ("01".into(), 1), ("11".into(), 2)].into_iter().collect(),
        };
        assert_eq!(counts.parity_expectation(&[0, 1]).0, 0.5);
        assert_eq!(counts.parity_expectation(&[0]).0, -0.5);
        assert_eq!(counts.parity_expectation(&[]).0, 1.0);
    }
}
