// SPDX-License-Identifier: Apache-2.0

//! Readout error mitigation by tensor-structured confusion-matrix inversion.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::simulator::{bitstring, Counts, NoiseSpec, ReadoutError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MitigationError {
    #[error("counts have {counts} bits but the confusion model covers {model}")]
    DimensionMismatch { counts: usize, model: usize },
    #[error("confusion matrix for bit {0} is singular")]
    Singular(usize),
}

/// Column-stochastic 2×2 matrix `[[1−e0, e1], [e0, 1−e1]]`
/// (columns = true bit, rows = observed bit).
pub type Confusion2 = [[f64; 2]; 2];

pub fn confusion_matrix(err: ReadoutError) -> Confusion2 {
    [[1.0 - err.e0, err.e1], [err.e0, 1.0 - err.e1]]
}

/// One matrix per classical bit; the full model is their tensor product,
/// which is never materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionModel {
    matrices: Vec<Confusion2>,
}

impl ConfusionModel {
    pub fn from_readout(errors: &[ReadoutError]) -> Self {
        ConfusionModel { matrices: errors.iter().copied().map(confusion_matrix).collect() }
    }

    /// Model for a device's readout errors, one matrix per qubit.
    pub fn for_device(noise: &NoiseSpec) -> Self {
        ConfusionModel::from_readout(&noise.readout)
    }

    /// Model keyed by the circuit's classical bits: bit `c` takes the errors
    /// of the qubit measured into it; unmeasured bits are noiseless.
    pub fn for_measurements(circuit: &Circuit, noise: &NoiseSpec) -> Self {
        let mut errors = vec![ReadoutError::default(); circuit.num_clbits];
        for (q, c) in circuit.measurements() {
            errors[c] = noise.for_qubit(q);
        }
        ConfusionModel::from_readout(&errors)
    }

    pub fn num_bits(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, bit: usize) -> &Confusion2 {
        &self.matrices[bit]
    }

    fn inverses(&self) -> Result<Vec<Confusion2>, MitigationError> {
        self.matrices
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if det.abs() < 1e-12 {
                    return Err(MitigationError::Singular(j));
                }
                Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
            })
            .collect()
    }
}

/// Applies per-bit 2×2 matrices to a dense probability vector indexed by
/// the integer value of the bitstring.
fn apply_tensor(probs: &mut [f64], matrices: &[Confusion2]) {
    for (j, m) in matrices.iter().enumerate() {
        let bit = 1usize << j;
        for i in 0..probs.len() {
            if i & bit == 0 {
                let (p0, p1) = (probs[i], probs[i | bit]);
                probs[i] = m[0][0] * p0 + m[0][1] * p1;
                probs[i | bit] = m[1][0] * p0 + m[1][1] * p1;
            }
        }
    }
}

/// `M · p` for a dense probability vector; used to synthesize noisy inputs.
pub fn apply_confusion(model: &ConfusionModel, probs: &[f64]) -> Vec<f64> {
    let mut out = probs.to_vec();
    apply_tensor(&mut out, &model.matrices);
    out
}

/// Dense vector `M⁻¹ · p`, before any clipping.
pub fn invert_probabilities(model: &ConfusionModel, probs: &[f64]) -> Result<Vec<f64>, MitigationError> {
    let mut out = probs.to_vec();
    apply_tensor(&mut out, &model.inverses()?);
    Ok(out)
}

pub fn counts_to_probabilities(counts: &Counts, num_bits: usize) -> Result<Vec<f64>, MitigationError> {
    let mut p = vec![0.0; 1 << num_bits];
    for (key, &n) in &counts.histogram {
        if key.len() != num_bits {
            return Err(MitigationError::DimensionMismatch { counts: key.len(), model: num_bits });
        }
        let idx = usize::from_str_radix(key, 2)
            .map_err(|_| MitigationError::DimensionMismatch { counts: key.len(), model: num_bits })?;
        p[idx] += n as f64 / counts.shots.max(1) as f64;
    }
    Ok(p)
}

/// Real-valued distribution produced by mitigation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiDistribution {
    pub probs: BTreeMap<String, f64>,
    pub shots: u64,
    /// Total magnitude of negative entries removed by clipping.
    pub negative_mass: f64,
}

impl QuasiDistribution {
    pub fn get(&self, key: &str) -> f64 {
        self.probs.get(key).copied().unwrap_or(0.0)
    }

    /// Clips negatives to zero and renormalizes a dense quasi-probability vector.
    pub fn finalize(raw: &[f64], num_bits: usize, shots: u64) -> Self {
        let negative_mass: f64 = raw.iter().filter(|&&p| p < 0.0).map(|p| -p).sum();
        let total: f64 = raw.iter().filter(|&&p| p > 0.0).sum();
        let probs = raw
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (bitstring(i as u64, num_bits), p / total))
            .collect();
        QuasiDistribution { probs, shots, negative_mass }
    }
}

pub fn mitigate(counts: &Counts, model: &ConfusionModel) -> Result<QuasiDistribution, MitigationError> {
    let n = model.num_bits();
    if let Some(bits) = counts.num_bits() {
        if bits != n {
            return Err(MitigationError::DimensionMismatch { counts: bits, model: n });
        }
    }
    let raw = invert_probabilities(model, &counts_to_probabilities(counts, n)?)?;
    Ok(QuasiDistribution::finalize(&raw, n, counts.shots))
}

/// Total-variation distance between two distributions over bitstrings.
pub fn tv_distance<'a>(
    a: impl IntoIterator<Item = (&'a str, f64)>,
    b: impl IntoIterator<Item = (&'a str, f64)>,
) -> f64 {
    let mut diff: BTreeMap<&str, f64> = BTreeMap::new();
    for (k, p) in a {
        *diff.entry(k).or_default() += p;
    }
    for (k, p) in b {
        *diff.entry(k).or_default() -= p;
    }
    diff.values().map(|d| d.abs()).sum::<f64>() / 2.0
}

pub fn counts_distribution(counts: &Counts) -> impl Iterator<Item = (&str, f64)> {
    let shots = counts.shots.max(1) as f64;
    counts.histogram.iter().map(move |(k, &n)| (k.as_str(), n as f64 / shots))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MitigationLocus {
    #[default]
    Middleware,
    Provider,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MitigationOptions {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub locus: MitigationLocus,
}

/// Embedded in results as `{"applied":true,"locus":"middleware","negative_mass":0.013}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigationMetadata {
    pub applied: bool,
    pub locus: MitigationLocus,
    pub negative_mass: f64,
}
