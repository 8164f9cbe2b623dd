// SPDX-License-Identifier: Apache-2.0

//! Single-wire circuit cutting.
//!
//! A wire is cut by resolving the identity channel on it,
//! `ρ = ½ Σ_O tr(Oρ) O` over `O ∈ {I, X, Y, Z}`. The upstream block
//! measures the cut wire in the Z, X and Y bases. The downstream block
//! re-prepares it in |0⟩, |1⟩, |+⟩ and |+i⟩, and
//!
//! ```text
//! I = |0⟩⟨0| + |1⟩⟨1|      X = 2|+⟩⟨+| − I
//! Z = |0⟩⟨0| − |1⟩⟨1|      Y = 2|+i⟩⟨+i| − I
//! ```
//!
//! The cut location is found by treating the circuit as a graph of wire
//! segments joined by multi-qubit gates. Cutting wire `q` after
//! instruction `p` splits `q` into an "early" and a "late" segment. The cut
//! is valid when those segments fall into different connected components.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateKind, Instruction, Pauli, PauliObservable};
use crate::simulator::{self, Counts, SimulationError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CutError {
    #[error("no single-wire cut yields blocks of width at most {max_width}")]
    NoCutFound { max_width: usize },
    #[error("observable {0} does not factorize across the cut")]
    NonSeparableObservable(PauliObservable),
    #[error("cutting needs a gates-only circuit")]
    NotGatesOnly,
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutPlan {
    pub num_qubits: usize,
    pub cut_qubit: usize,
    /// The wire is cut right after this instruction.
    pub cut_position: usize,
    /// Sorted; contains `cut_qubit`.
    pub upstream_qubits: Vec<usize>,
    /// Sorted; the cut wire re-enters as an extra fresh qubit.
    pub downstream_qubits: Vec<usize>,
}

impl CutPlan {
    /// Qubits of the downstream subcircuits (including the fresh wire), sorted.
    pub fn downstream_wires(&self) -> Vec<usize> {
        let mut w = self.downstream_qubits.clone();
        w.push(self.cut_qubit);
        w.sort_unstable();
        w
    }

    fn is_upstream(&self, index: usize, inst: &Instruction) -> bool {
        if inst.qubits.contains(&self.cut_qubit) {
            index <= self.cut_position
        } else {
            inst.qubits.iter().all(|q| self.upstream_qubits.contains(q))
        }
    }

    /// Splits `obs` into `(P_up, P_down)` in original qubit labels. Any
    /// Pauli on the cut qubit belongs to the downstream block, which holds
    /// the wire's final state.
    pub fn split_observable(&self, obs: &PauliObservable) -> Result<(PauliObservable, PauliObservable), CutError> {
        if obs.max_qubit().is_some_and(|q| q >= self.num_qubits) {
            return Err(CutError::NonSeparableObservable(obs.clone()));
        }
        let mut up = PauliObservable::identity();
        let mut down = PauliObservable::identity().with_coefficient(obs.coefficient);
        for (&q, &p) in &obs.paulis {
            if q != self.cut_qubit && self.upstream_qubits.contains(&q) {
                up.paulis.insert(q, p);
            } else {
                down.paulis.insert(q, p);
            }
        }
        Ok((up, down))
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Evaluates cutting `qubit` after instruction `position`.
fn try_cut(circuit: &Circuit, qubit: usize, position: usize, max_width: usize) -> Option<CutPlan> {
    let n = circuit.num_qubits;
    // Node `n` stands for the late segment of the cut wire.
    let mut uf = UnionFind::new(n + 1);
    let node = |q: usize, i: usize| if q == qubit && i > position { n } else { q };
    for (i, inst) in circuit.instructions.iter().enumerate() {
        if inst.kind == GateKind::Barrier {
            continue;
        }
        if let Some((&first, rest)) = inst.qubits.split_first() {
            for &q in rest {
                uf.union(node(first, i), node(q, i));
            }
        }
    }
    let (early, late) = (uf.find(qubit), uf.find(n));
    if early == late {
        return None;
    }
    let mut upstream: Vec<usize> = (0..n).filter(|&q| uf.find(q) == early).collect();
    let mut downstream: Vec<usize> = (0..n).filter(|&q| q != qubit && uf.find(q) == late).collect();
    if upstream.len() > max_width || downstream.len() > max_width {
        return None;
    }
    // Remaining components: exact subset-sum split, filling upstream as far as possible.
    let mut others: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for q in 0..n {
        let r = uf.find(q);
        if q != qubit && r != early && r != late {
            others.entry(r).or_default().push(q);
        }
    }
    let comps: Vec<Vec<usize>> = others.into_values().collect();
    let total: usize = comps.iter().map(Vec::len).sum();
    // reach[i][s]: some subset of the first i components has s qubits
    let mut reach = vec![vec![false; total + 1]; comps.len() + 1];
    reach[0][0] = true;
    for (i, comp) in comps.iter().enumerate() {
        for s in 0..=total {
            if reach[i][s] {
                reach[i + 1][s] = true;
                reach[i + 1][s + comp.len()] = true;
            }
        }
    }
    let lo = total.saturating_sub(max_width - downstream.len());
    let hi = total.min(max_width - upstream.len());
    let mut s = (lo..=hi).rev().find(|&s| reach[comps.len()][s])?;
    for (i, comp) in comps.iter().enumerate().rev() {
        if s >= comp.len() && reach[i][s - comp.len()] {
            s -= comp.len();
            upstream.extend_from_slice(comp);
        } else {
            downstream.extend_from_slice(comp);
        }
    }
    upstream.sort_unstable();
    downstream.sort_unstable();
    Some(CutPlan {
        num_qubits: n,
        cut_qubit: qubit,
        cut_position: position,
        upstream_qubits: upstream,
        downstream_qubits: downstream,
    })
}

/// First-fit cut search: qubits in ascending order, then cut positions in
/// ascending order over the instructions acting on that qubit.
pub fn find_cut(circuit: &Circuit, max_width: usize) -> Result<CutPlan, CutError> {
    if circuit.has_measurements() {
        return Err(CutError::NotGatesOnly);
    }
    for q in 0..circuit.num_qubits {
        for (p, inst) in circuit.instructions.iter().enumerate() {
            if inst.kind == GateKind::Barrier || !inst.qubits.contains(&q) {
                continue;
            }
            if let Some(plan) = try_cut(circuit, q, p, max_width) {
                return Ok(plan);
            }
        }
    }
    Err(CutError::NoCutFound { max_width })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CutBasis {
    Z,
    X,
    Y,
}

impl CutBasis {
    pub const ALL: [CutBasis; 3] = [CutBasis::Z, CutBasis::X, CutBasis::Y];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CutState {
    Zero,
    One,
    Plus,
    PlusI,
}

impl CutState {
    pub const ALL: [CutState; 4] = [CutState::Zero, CutState::One, CutState::Plus, CutState::PlusI];
}

/// Gates rotating the Pauli eigenbasis of `p` onto Z.
pub fn basis_change(p: Pauli, qubit: usize) -> Vec<Instruction> {
    match p {
        Pauli::I | Pauli::Z => vec![],
        Pauli::X => vec![Instruction::gate(GateKind::H, &[qubit])],
        Pauli::Y => vec![Instruction::gate(GateKind::Sdg, &[qubit]), Instruction::gate(GateKind::H, &[qubit])],
    }
}

fn preparation(state: CutState, qubit: usize) -> Vec<Instruction> {
    let g = |k| Instruction::gate(k, &[qubit]);
    match state {
        CutState::Zero => vec![],
        CutState::One => vec![g(GateKind::X)],
        CutState::Plus => vec![g(GateKind::H)],
        CutState::PlusI => vec![g(GateKind::H), g(GateKind::S)],
    }
}

/// The seven gate-only fragments of a cut circuit, with local qubit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcircuitSet {
    pub upstream: Vec<(CutBasis, Circuit)>,
    pub downstream: Vec<(CutState, Circuit)>,
    /// Original qubit of each local upstream qubit.
    pub upstream_map: Vec<usize>,
    /// Original qubit of each local downstream qubit (the cut qubit is the fresh wire).
    pub downstream_map: Vec<usize>,
}

impl SubcircuitSet {
    pub fn len(&self) -> usize {
        self.upstream.len() + self.downstream.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_width(&self) -> usize {
        self.upstream
            .iter()
            .map(|(_, c)| c.num_qubits)
            .chain(self.downstream.iter().map(|(_, c)| c.num_qubits))
            .max()
            .unwrap_or(0)
    }
}

fn local(map: &[usize], q: usize) -> usize {
    map.iter().position(|&m| m == q).expect("qubit belongs to the block")
}

fn relabel(inst: &Instruction, map: &[usize]) -> Instruction {
    let mut out = inst.clone();
    out.qubits = inst.qubits.iter().map(|&q| local(map, q)).collect();
    out
}

pub fn generate_subcircuits(circuit: &Circuit, plan: &CutPlan) -> SubcircuitSet {
    let up_map = plan.upstream_qubits.clone();
    let down_map = plan.downstream_wires();
    let mut up_block = Circuit::new(up_map.len(), 0);
    let mut down_block = Circuit::new(down_map.len(), 0);
    for (i, inst) in circuit.instructions.iter().enumerate() {
        if inst.kind == GateKind::Barrier {
            continue;
        }
        if plan.is_upstream(i, inst) {
            up_block.push(relabel(inst, &up_map));
        } else {
            down_block.push(relabel(inst, &down_map));
        }
    }
    let up_cut = local(&up_map, plan.cut_qubit);
    let down_cut = local(&down_map, plan.cut_qubit);
    let upstream = CutBasis::ALL
        .iter()
        .map(|&b| {
            let mut c = up_block.clone();
            let pauli = match b {
                CutBasis::Z => Pauli::Z,
                CutBasis::X => Pauli::X,
                CutBasis::Y => Pauli::Y,
            };
            c.instructions.extend(basis_change(pauli, up_cut));
            (b, c)
        })
        .collect();
    let downstream = CutState::ALL
        .iter()
        .map(|&s| {
            let mut c = Circuit::new(down_block.num_qubits, 0);
            c.instructions = preparation(s, down_cut);
            c.instructions.extend(down_block.instructions.iter().cloned());
            (s, c)
        })
        .collect();
    SubcircuitSet { upstream, downstream, upstream_map: up_map, downstream_map: down_map }
}

/// `u(O) = ⟨P_up ⊗ O_cut⟩` on the upstream block.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpstreamValues {
    pub i: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// `f(s) = ⟨P_down⟩` on the downstream block prepared in `s`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DownstreamValues {
    pub zero: f64,
    pub one: f64,
    pub plus: f64,
    pub plus_i: f64,
}

impl DownstreamValues {
    /// `(d(I), d(X), d(Y), d(Z))`.
    pub fn resolved(&self) -> (f64, f64, f64, f64) {
        let s = self.zero + self.one;
        (s, 2.0 * self.plus - s, 2.0 * self.plus_i - s, self.zero - self.one)
    }
}

pub fn combine(up: &UpstreamValues, down: &DownstreamValues) -> f64 {
    let (di, dx, dy, dz) = down.resolved();
    0.5 * (up.i * di + up.x * dx + up.y * dy + up.z * dz)
}

/// Reconstructs `⟨obs⟩` from per-variant expectations. The coefficient of
/// `obs` is expected to be folded into the downstream values already.
pub fn reconstruct(
    plan: &CutPlan,
    up: &UpstreamValues,
    down: &DownstreamValues,
    obs: &PauliObservable,
) -> Result<f64, CutError> {
    plan.split_observable(obs)?;
    Ok(combine(up, down))
}

fn localize(obs: &PauliObservable, map: &[usize]) -> PauliObservable {
    let relabel: BTreeMap<usize, usize> = map.iter().enumerate().map(|(l, &q)| (q, l)).collect();
    obs.restrict(&relabel).with_coefficient(obs.coefficient)
}

/// Exact reconstruction using statevector expectations of every fragment.
pub fn reconstruct_exact(plan: &CutPlan, set: &SubcircuitSet, obs: &PauliObservable) -> Result<f64, CutError> {
    let (p_up, p_down) = plan.split_observable(obs)?;
    let p_up = localize(&p_up, &set.upstream_map);
    let p_down = localize(&p_down, &set.downstream_map);
    let up_cut = local(&set.upstream_map, plan.cut_qubit);
    let mut up = UpstreamValues::default();
    for (basis, circuit) in &set.upstream {
        let state = simulator::run_state(circuit)?;
        let mut with_cut = p_up.clone();
        with_cut.paulis.insert(up_cut, Pauli::Z);
        let v = state.expectation(&with_cut)?;
        match basis {
            CutBasis::Z => {
                up.z = v;
                up.i = state.expectation(&p_up)?;
            }
            CutBasis::X => up.x = v,
            CutBasis::Y => up.y = v,
        }
    }
    let mut down = DownstreamValues::default();
    for (s, circuit) in &set.downstream {
        let v = simulator::run_state(circuit)?.expectation(&p_down)?;
        match s {
            CutState::Zero => down.zero = v,
            CutState::One => down.one = v,
            CutState::Plus => down.plus = v,
            CutState::PlusI => down.plus_i = v,
        }
    }
    reconstruct(plan, &up, &down, obs)
}

/// Partitions observables into qubit-wise commuting groups (first fit).
/// Returns each group's measurement basis and the member indices.
pub fn group_observables(observables: &[PauliObservable]) -> Vec<(BTreeMap<usize, Pauli>, Vec<usize>)> {
    let mut groups: Vec<(BTreeMap<usize, Pauli>, Vec<usize>)> = Vec::new();
    for (i, obs) in observables.iter().enumerate() {
        let fits = |basis: &BTreeMap<usize, Pauli>| obs.paulis.iter().all(|(q, p)| basis.get(q).is_none_or(|b| b == p));
        match groups.iter_mut().find(|(basis, _)| fits(basis)) {
            Some((basis, members)) => {
                basis.extend(obs.paulis.iter().map(|(&q, &p)| (q, p)));
                members.push(i);
            }
            None => groups.push((obs.paulis.clone(), vec![i])),
        }
    }
    groups
}

/// Appends basis changes for `basis` and measures every qubit into the
/// clbit of the same index.
pub fn measure_in_basis(circuit: &Circuit, basis: &BTreeMap<usize, Pauli>) -> Circuit {
    let mut out = circuit.clone();
    out.num_clbits = out.num_qubits;
    for (&q, &p) in basis {
        out.instructions.extend(basis_change(p, q));
    }
    for q in 0..out.num_qubits {
        out.measure(q, q);
    }
    out
}

/// Fragments ready for sampling: every qubit measured after rotating the
/// group basis (restricted to each block) onto Z.
pub fn measured_subcircuits(plan: &CutPlan, set: &SubcircuitSet, basis: &BTreeMap<usize, Pauli>) -> Vec<Circuit> {
    let basis_obs = PauliObservable { paulis: basis.clone(), coefficient: 1.0 };
    let (up, down) = plan.split_observable(&basis_obs).expect("basis qubits in range");
    let up = localize(&up, &set.upstream_map).paulis;
    let down = localize(&down, &set.downstream_map).paulis;
    set.upstream
        .iter()
        .map(|(_, c)| measure_in_basis(c, &up))
        .chain(set.downstream.iter().map(|(_, c)| measure_in_basis(c, &down)))
        .collect()
}

/// Estimate with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

fn parity(key: &[u8], bits: &[usize]) -> f64 {
    let ones = bits.iter().filter(|&&c| key[key.len() - 1 - c] == b'1').count();
    if ones % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sampled output of one fragment: a (possibly readout-mitigated)
/// distribution over clbit strings and the shots behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub probs: BTreeMap<String, f64>,
    pub shots: u64,
    /// `1 − e0 − e1` per clbit when `probs` was mitigated, used to scale the
    /// variance of mitigated parities. Empty means unmitigated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gains: Vec<f64>,
}

impl Fragment {
    pub fn from_counts(counts: &Counts) -> Self {
        let n = counts.shots.max(1) as f64;
        Fragment {
            probs: counts.histogram.iter().map(|(k, &c)| (k.clone(), c as f64 / n)).collect(),
            shots: counts.shots,
            gains: Vec::new(),
        }
    }

    /// `⟨obs⟩` read off a run measured with [`measure_in_basis`], where the
    /// clbit of each qubit carries its rotated factor.
    pub fn expectation(&self, obs: &PauliObservable) -> Estimate {
        let bits: Vec<usize> = obs.support().collect();
        let (m, _, var, _, _) = self.parity_moments(&bits, &bits);
        Estimate { value: obs.coefficient * m, std_error: obs.coefficient.abs() * var.sqrt() }
    }

    fn gain(&self, bits: &[usize]) -> f64 {
        bits.iter().map(|&b| self.gains.get(b).copied().unwrap_or(1.0)).product()
    }

    /// Means of parities `a` and `b`, the variances of both means and the
    /// covariance between them. `b` must contain `a` plus at most one bit.
    fn parity_moments(&self, a: &[usize], b: &[usize]) -> (f64, f64, f64, f64, f64) {
        let n = self.shots.max(1) as f64;
        let (mut ma, mut mb, mut mab) = (0.0, 0.0, 0.0);
        for (key, &p) in &self.probs {
            let (pa, pb) = (parity(key.as_bytes(), a), parity(key.as_bytes(), b));
            ma += p * pa;
            mb += p * pb;
            mab += p * pa * pb;
        }
        let extra: Vec<usize> = b.iter().copied().filter(|x| !a.contains(x)).collect();
        let (ga, gb, gab) = (self.gain(a), self.gain(b), self.gain(&extra));
        // Moments of the raw (noisy) parities, then mapped back through the gains.
        let (ra, rb) = (ma * ga, mb * gb);
        let var = |r: f64, g: f64| (1.0 - r * r).max(0.0) / (n * g * g);
        let cov = (mab * gab - ra * rb) / (n * ga * gb);
        (ma, mb, var(ra, ga), var(rb, gb), cov)
    }
}

/// Reconstructs `⟨obs⟩` from sampled fragment counts, given in the order
/// produced by [`measured_subcircuits`] (Z, X, Y upstream; |0⟩, |1⟩, |+⟩,
/// |+i⟩ downstream).
pub fn reconstruct_sampled(
    plan: &CutPlan,
    set: &SubcircuitSet,
    obs: &PauliObservable,
    counts: &[Counts],
) -> Result<Estimate, CutError> {
    let fragments: Vec<Fragment> = counts.iter().map(Fragment::from_counts).collect();
    reconstruct_fragments(plan, set, obs, &fragments)
}

/// [`reconstruct_sampled`] over general fragment distributions.
pub fn reconstruct_fragments(
    plan: &CutPlan,
    set: &SubcircuitSet,
    obs: &PauliObservable,
    fragments: &[Fragment],
) -> Result<Estimate, CutError> {
    let (p_up, p_down) = plan.split_observable(obs)?;
    let up_bits: Vec<usize> = localize(&p_up, &set.upstream_map).support().collect();
    let down_bits: Vec<usize> = localize(&p_down, &set.downstream_map).support().collect();
    let coeff = obs.coefficient;
    let up_cut = local(&set.upstream_map, plan.cut_qubit);
    let mut with_cut = up_bits.clone();
    with_cut.push(up_cut);

    let (u_i, u_z, var_i, var_z, cov_iz) = fragments[0].parity_moments(&up_bits, &with_cut);
    let (u_x, _, var_x, _, _) = fragments[1].parity_moments(&with_cut, &with_cut);
    let (u_y, _, var_y, _, _) = fragments[2].parity_moments(&with_cut, &with_cut);
    let mut f = [0.0; 4];
    let mut var_f = [0.0; 4];
    for k in 0..4 {
        let (m, _, v, _, _) = fragments[3 + k].parity_moments(&down_bits, &down_bits);
        f[k] = coeff * m;
        var_f[k] = coeff * coeff * v;
    }
    let up = UpstreamValues { i: u_i, x: u_x, y: u_y, z: u_z };
    let down = DownstreamValues { zero: f[0], one: f[1], plus: f[2], plus_i: f[3] };
    let value = reconstruct(plan, &up, &down, obs)?;

    let (di, dx, dy, dz) = down.resolved();
    let grad_f = [0.5 * (u_i + u_z - u_x - u_y), 0.5 * (u_i - u_z - u_x - u_y), u_x, u_y];
    let variance = 0.25
        * (di * di * var_i + dz * dz * var_z + 2.0 * di * dz * cov_iz + dx * dx * var_x + dy * dy * var_y)
        + grad_f.iter().zip(&var_f).map(|(g, v)| g * g * v).sum::<f64>();
    Ok(Estimate { value, std_error: variance.max(0.0).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::expectation;

    fn bell() -> Circuit {
        let mut c = Circuit::new(2, 0);
        c.h(0).cx(0, 1);
        c
    }

    #[test]
    fn bell_cut_after_h() {
        let plan = find_cut(&bell(), 1).unwrap();
        assert_eq!((plan.cut_qubit, plan.cut_position), (0, 0));
        assert_eq!(plan.upstream_qubits, [0]);
        assert_eq!(plan.downstream_qubits, [1]);
    }

    #[test]
    fn all_to_all_has_no_cut() {
        let mut c = Circuit::new(3, 0);
        c.cx(0, 1).cx(1, 2).cx(0, 2).cx(0, 1).cx(1, 2).cx(0, 2);
        assert_eq!(find_cut(&c, 2), Err(CutError::NoCutFound { max_width: 2 }));
    }

    #[test]
    fn bell_variants() {
        let c = bell();
        let plan = find_cut(&c, 1).unwrap();
        let set = generate_subcircuits(&c, &plan);
        assert_eq!(set.len(), 7);
        let x_up = &set.upstream[1].1;
        assert_eq!(x_up.instructions, [Instruction::gate(GateKind::H, &[0]), Instruction::gate(GateKind::H, &[0])]);
        assert_eq!(set.upstream[0].1.instructions, [Instruction::gate(GateKind::H, &[0])]);
        // Local labels: wire 0 is the fresh cut wire, 1 is q1.
        let plus = &set.downstream[2].1;
        assert_eq!(plus.instructions, [Instruction::gate(GateKind::H, &[0]), Instruction::gate(GateKind::Cx, &[0, 1])]);
    }

    #[test]
    fn bell_reconstruction_matches_hand_values() {
        let c = bell();
        let plan = find_cut(&c, 1).unwrap();
        let up = UpstreamValues { i: 1.0, x: 1.0, y: 0.0, z: 0.0 };
        let down = DownstreamValues { zero: 1.0, one: 1.0, plus: 1.0, plus_i: 1.0 };
        let zz = PauliObservable::zz(0, 1);
        assert_eq!(reconstruct(&plan, &up, &down, &zz).unwrap(), 1.0);
        let set = generate_subcircuits(&c, &plan);
        assert!((reconstruct_exact(&plan, &set, &zz).unwrap() - 1.0).abs() < 1e-12);
        assert!(reconstruct_exact(&plan, &set, &PauliObservable::z(1)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn product_state_cut() {
        let mut c = Circuit::new(2, 0);
        c.h(0).x(1);
        let plan = find_cut(&c, 1).unwrap();
        let set = generate_subcircuits(&c, &plan);
        let x0 = PauliObservable::new(&[(0, Pauli::X)]);
        assert!((reconstruct_exact(&plan, &set, &x0).unwrap() - expectation(&c, &x0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_observable_is_rejected() {
        let plan = find_cut(&bell(), 1).unwrap();
        assert!(matches!(plan.split_observable(&PauliObservable::z(5)), Err(CutError::NonSeparableObservable(_))));
    }

    #[test]
    fn grouping_is_qubit_wise() {
        let obs: Vec<PauliObservable> = ["Z0Z1", "Z1Z2", "X0", "Z2"].iter().map(|s| s.parse().unwrap()).collect();
        let groups = group_observables(&obs);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1, [0, 1, 3]);
        assert_eq!(groups[1].1, [2]);
    }
}
