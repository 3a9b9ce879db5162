use serde::{Deserialize, Serialize};

use super::{Gate, StateError, StateVector};
use crate::benchmarks::WeightedGraph;

/// Hardware-efficient ansatz: `layers + 1` rotation blocks (RY then RZ on
/// every qubit) separated by `layers` circular CX chains.
///
/// Parameter layout, block by block: `[ry_0 .. ry_{n-1}, rz_0 .. rz_{n-1}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeaSpec {
    pub n_qubits: usize,
    pub layers: usize,
}

impl HeaSpec {
    pub fn new(n_qubits: usize, layers: usize) -> Self {
        Self { n_qubits, layers }
    }

    pub fn n_params(&self) -> usize {
        2 * self.n_qubits * (self.layers + 1)
    }

    pub fn prepare(&self, params: &[f64]) -> Result<StateVector, StateError> {
        check_len(self.n_params(), params)?;
        let n = self.n_qubits;
        let mut state = StateVector::zero(n)?;
        for (block, angles) in params.chunks_exact(2 * n).enumerate() {
            if block > 0 {
                for q in 0..n.saturating_sub(1) {
                    state.apply(Gate::Cx {
                        control: q,
                        target: q + 1,
                    })?;
                }
                if n > 1 {
                    state.apply(Gate::Cx {
                        control: n - 1,
                        target: 0,
                    })?;
                }
            }
            for q in 0..n {
                state.apply(Gate::Ry(q, angles[q]))?;
            }
            for q in 0..n {
                state.apply(Gate::Rz(q, angles[n + q]))?;
            }
        }
        Ok(state)
    }
}

/// Multi-angle QAOA: one phase angle per edge and one mixer angle per node in
/// every layer, `(m + n) p` parameters in total.
///
/// Layer `l` occupies `params[l (m + n) .. (l + 1)(m + n)]`: the `m` edge
/// angles first, in edge order, then the `n` mixer angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaQaoaSpec {
    pub graph: WeightedGraph,
    pub p: usize,
}

impl MaQaoaSpec {
    pub fn new(graph: WeightedGraph, p: usize) -> Self {
        Self { graph, p }
    }

    pub fn n_params(&self) -> usize {
        (self.graph.edges.len() + self.graph.n_nodes) * self.p
    }

    /// Starts from `|+>^n`; each layer applies `exp(-i g w/2 (I - Z Z))` per
    /// edge (as `RZZ(-g w)`, dropping the global phase) and then `RX(2 b)`
    /// per node.
    pub fn prepare(&self, params: &[f64]) -> Result<StateVector, StateError> {
        check_len(self.n_params(), params)?;
        let m = self.graph.edges.len();
        let n = self.graph.n_nodes;
        let mut state = StateVector::plus(n)?;
        if m + n == 0 {
            return Ok(state);
        }
        for layer in params.chunks_exact(m + n) {
            let (gammas, betas) = layer.split_at(m);
            for (e, &g) in self.graph.edges.iter().zip(gammas) {
                state.apply(Gate::Rzz(e.u, e.v, -g * e.w))?;
            }
            for (q, &b) in betas.iter().enumerate() {
                state.apply(Gate::Rx(q, 2.0 * b))?;
            }
        }
        Ok(state)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Ansatz {
    Hea(HeaSpec),
    Maqaoa(MaQaoaSpec),
}

impl Ansatz {
    pub fn n_qubits(&self) -> usize {
        match self {
            Ansatz::Hea(s) => s.n_qubits,
            Ansatz::Maqaoa(s) => s.graph.n_nodes,
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Ansatz::Hea(s) => s.n_params(),
            Ansatz::Maqaoa(s) => s.n_params(),
        }
    }

    pub fn prepare(&self, params: &[f64]) -> Result<StateVector, StateError> {
        match self {
            Ansatz::Hea(s) => s.prepare(params),
            Ansatz::Maqaoa(s) => s.prepare(params),
        }
    }
}

fn check_len(expected: usize, params: &[f64]) -> Result<(), StateError> {
    if params.len() != expected {
        return Err(StateError::ParamLengthMismatch {
            expected,
            found: params.len(),
        });
    }
    Ok(())
}
