// SPDX-License-Identifier: Apache-2.0

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CouplingError {
    #[error("edge ({0}, {1}) references a qubit outside the map")]
    OutOfRange(usize, usize),
    #[error("self-loop on qubit {0}")]
    SelfLoop(usize),
    #[error("coupling map is disconnected")]
    Disconnected,
    #[error("coupling map has no qubits")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RawCouplingMap {
    num_qubits: usize,
    edges: Vec<[usize; 2]>,
}

/// Undirected, connected qubit connectivity graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCouplingMap", into = "RawCouplingMap")]
pub struct CouplingMap {
    num_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl TryFrom<RawCouplingMap> for CouplingMap {
    type Error = CouplingError;

    fn try_from(raw: RawCouplingMap) -> Result<Self, Self::Error> {
        CouplingMap::new(raw.num_qubits, raw.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<CouplingMap> for RawCouplingMap {
    fn from(map: CouplingMap) -> Self {
        RawCouplingMap { num_qubits: map.num_qubits, edges: map.edges.iter().map(|&(a, b)| [a, b]).collect() }
    }
}

impl CouplingMap {
    pub fn new(num_qubits: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, CouplingError> {
        if num_qubits == 0 {
            return Err(CouplingError::Empty);
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= num_qubits || b >= num_qubits {
                return Err(CouplingError::OutOfRange(a, b));
            }
            if a == b {
                return Err(CouplingError::SelfLoop(a));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut neighbors = vec![Vec::new(); num_qubits];
        for &(a, b) in &set {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        let map = CouplingMap { num_qubits, edges: set, neighbors };
        if map.distances_from(0).iter().any(Option::is_none) {
            return Err(CouplingError::Disconnected);
        }
        Ok(map)
    }

    pub fn linear(n: usize) -> Self {
        CouplingMap::new(n, (1..n).map(|i| (i - 1, i))).expect("linear map is valid")
    }

    pub fn ring(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        CouplingMap::new(n, edges).expect("ring map is valid")
    }

    pub fn full(n: usize) -> Self {
        CouplingMap::new(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)))).expect("full map is valid")
    }

    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let q = r * cols + c;
                if c + 1 < cols {
                    edges.push((q, q + 1));
                }
                if r + 1 < rows {
                    edges.push((q, q + cols));
                }
            }
        }
        CouplingMap::new(rows * cols, edges).expect("grid map is valid")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.neighbors[q]
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    fn distances_from(&self, start: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_qubits];
        dist[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(q) = queue.pop_front() {
            let d = dist[q].unwrap_or(0);
            for &n in &self.neighbors[q] {
                if dist[n].is_none() {
                    dist[n] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Shortest path `from → to` inclusive. BFS visits neighbours in
    /// ascending order, so among equal-length paths the one through the
    /// lowest-indexed qubits wins.
    pub fn shortest_path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.num_qubits];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(q) = queue.pop_front() {
            if q == to {
                break;
            }
            for &n in &self.neighbors[q] {
                if parent[n] == usize::MAX {
                    parent[n] = q;
                    queue.push_back(n);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        path
    }
}
