//! Derivative-free optimizers driven through a loss oracle.
//!
//! Both optimizers only ever see `params -> loss` evaluations. Every
//! evaluation reports the shots it cost, and the optimizers hand those counts
//! back unchanged so the caller's ledger is exact.

mod simplex;
mod spsa;

pub use simplex::{simplex_step, SimplexState};
pub use spsa::{
    calibrate_spsa, calibrate_spsa_with, spsa_step, step_with_perturbation, Calibration, SpsaState,
};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::statevec::TermEstimate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("oracle failed: {0}")]
    OracleFailure(String),
    #[error("invalid optimizer settings: {0}")]
    InvalidSettings(String),
}

/// One oracle call.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub terms: Vec<TermEstimate>,
    pub shots: u64,
}

impl Evaluation {
    /// A noiseless evaluation with no term breakdown.
    pub fn exact(loss: f64) -> Self {
        Self {
            loss,
            terms: Vec::new(),
            shots: 0,
        }
    }
}

pub trait LossOracle {
    fn evaluate(&mut self, params: &[f64]) -> Result<Evaluation, OptimError>;
}

/// Adapts a plain loss function, mostly for tests and calibration studies.
pub struct FnOracle<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> LossOracle for FnOracle<F> {
    fn evaluate(&mut self, params: &[f64]) -> Result<Evaluation, OptimError> {
        Ok(Evaluation::exact((self.0)(params)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub params: Vec<f64>,
    pub evaluations: Vec<Evaluation>,
}

impl StepReport {
    pub fn losses(&self) -> Vec<f64> {
        self.evaluations.iter().map(|e| e.loss).collect()
    }

    pub fn shots(&self) -> u64 {
        self.evaluations.iter().map(|e| e.shots).sum()
    }
}

/// The optimizer owned by one cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimizerState {
    Spsa(SpsaState),
    Simplex(SimplexState),
}

impl OptimizerState {
    pub fn params(&self) -> &[f64] {
        match self {
            OptimizerState::Spsa(s) => &s.theta,
            OptimizerState::Simplex(s) => s.best(),
        }
    }

    pub fn step(
        &mut self,
        oracle: &mut dyn LossOracle,
        rng: &mut dyn RngCore,
    ) -> Result<StepReport, OptimError> {
        match self {
            OptimizerState::Spsa(s) => spsa_step(s, oracle, rng),
            OptimizerState::Simplex(s) => simplex_step(s, oracle),
        }
    }

    /// State for a child cluster starting at the same parameters. SPSA keeps
    /// its schedule position; the simplex is rebuilt around the best vertex
    /// because the old vertex losses belong to a different objective.
    pub fn fork(&self) -> Self {
        match self {
            OptimizerState::Spsa(s) => OptimizerState::Spsa(s.clone()),
            OptimizerState::Simplex(s) => {
                OptimizerState::Simplex(SimplexState::new(s.best().to_vec(), s.initial_step))
            }
        }
    }
}
