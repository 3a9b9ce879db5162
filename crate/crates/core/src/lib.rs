//! Multi-task variational quantum optimization.
//!
//! A family of related Hamiltonians is optimized jointly: every task starts in
//! one shared cluster that minimizes the mean ("mixed") Hamiltonian, and
//! clusters are bipartitioned by spectral clustering on coefficient distance
//! whenever the shared optimization stalls or one member starts getting worse.
//! Each cluster is a node of a tree; leaves are the final clusters.
//!
//! The crate bundles everything needed to run this at desk scale:
//!
//! * [`pauli`]: Pauli strings, Hamiltonians, superset padding and distances.
//! * [`statevec`]: a dense statevector simulator with binomial shot noise.
//! * [`optim`]: SPSA and a Nelder-Mead simplex behind one oracle contract.
//! * [`cluster`]: RBF similarity and spectral bipartitioning.
//! * [`engine`]: cluster stepping, the global controller, the independent
//!   per-task baseline and all metrics.
//! * [`benchmarks`]: TFIM, XXZ and weighted MaxCut task families plus exact
//!   ground-state references.

pub mod benchmarks;
pub mod cluster;
pub mod engine;
pub mod optim;
pub mod pauli;
pub mod rng;
pub mod statevec;

pub use benchmarks::WeightedGraph;
pub use engine::{RunConfig, RunRecord, TaskResult};
pub use pauli::{Hamiltonian, PaddedTaskSet, Pauli, PauliString};
pub use statevec::StateVector;
