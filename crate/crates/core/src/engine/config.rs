use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::statevec::Ansatz;

pub const DEFAULT_SHOTS_PER_TERM: u64 = 4096;
pub const WINDOW_FLOOR: usize = 20;
const WINDOW_FRACTION: f64 = 0.0002;
const WARMUP_FLOOR: u64 = 50;
const EPS_SCALE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Tree,
    Baseline,
    /// Monitoring off; the root is bipartitioned once after this many of its
    /// own iterations and the children never split.
    ForcedSplit {
        iteration: u64,
    },
}

/// How the independent baseline spends `S_max`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineBudget {
    /// Every task stops once it has used `S_max / N`.
    #[default]
    Strict,
    /// As strict, but a task also stops early once its loss slope stagnates.
    UntilConverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain {
    Value(f64),
    Keyword(GainKeyword),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainKeyword {
    Calibrate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Spsa {
        /// A number, or `"calibrate"` to probe the first cluster's loss.
        #[serde(default = "calibrate")]
        a: Gain,
        #[serde(default = "default_target_step")]
        target_first_step: f64,
        /// Defaults to a tenth of the planned iterations.
        #[serde(rename = "A", default)]
        big_a: Option<f64>,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Simplex {
        #[serde(default = "default_simplex_step")]
        initial_step: f64,
    },
}

fn calibrate() -> Gain {
    Gain::Keyword(GainKeyword::Calibrate)
}
fn default_target_step() -> f64 {
    0.01
}
fn default_alpha() -> f64 {
    0.602
}
fn default_c() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    0.101
}
fn default_simplex_step() -> f64 {
    0.1
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec::Spsa {
            a: calibrate(),
            target_first_step: default_target_step(),
            big_a: None,
            alpha: default_alpha(),
            c: default_c(),
            gamma: default_gamma(),
        }
    }
}

impl OptimizerSpec {
    /// Evaluations per iteration for budget planning (SPSA's two; the
    /// simplex averages about two as well once built).
    pub fn evals_per_iteration(&self) -> u64 {
        2
    }
}

/// Unset fields take defaults derived from the planned iteration count.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSpec {
    #[serde(default)]
    pub warmup: Option<u64>,
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default)]
    pub eps_split: Option<f64>,
}

/// Monitor settings with defaults filled in. `eps_split` stays unset until a
/// cluster records its first loss when it is not given explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub warmup: u64,
    pub window: usize,
    pub eps_split: Option<f64>,
}

impl MonitorConfig {
    pub fn resolve(spec: &MonitorSpec, planned_iterations: u64) -> Result<Self, EngineError> {
        let window = spec.window.unwrap_or_else(|| {
            WINDOW_FLOOR.max((WINDOW_FRACTION * planned_iterations as f64).round() as usize)
        });
        let warmup = spec
            .warmup
            .unwrap_or_else(|| (2 * window as u64).max(WARMUP_FLOOR));
        let m = Self {
            warmup,
            window,
            eps_split: spec.eps_split,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.window < 2 {
            return Err(EngineError::Config(format!(
                "window must be at least 2, got {}",
                self.window
            )));
        }
        if self.warmup < self.window as u64 {
            return Err(EngineError::Config(format!(
                "warmup {} is shorter than the window {}",
                self.warmup, self.window
            )));
        }
        if let Some(e) = self.eps_split {
            if !(e > 0.0 && e.is_finite()) {
                return Err(EngineError::Config(format!(
                    "eps_split must be positive, got {e}"
                )));
            }
        }
        Ok(())
    }

    /// The explicit threshold, or `1e-4 |first mixed loss| / W`.
    pub fn eps_for(&self, first_loss: f64) -> f64 {
        self.eps_split
            .unwrap_or(EPS_SCALE * first_loss.abs() / self.window as f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialParams {
    #[default]
    Zeros,
    /// Independent uniform draws, shared by every task and cluster.
    Uniform {
        low: f64,
        high: f64,
    },
    Explicit {
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// `S_max`.
    pub budget: u64,
    pub shots_per_term: u64,
    pub ansatz: Ansatz,
    pub optimizer: OptimizerSpec,
    pub monitor: MonitorSpec,
    pub seed: u64,
    pub mode: Mode,
    pub baseline_budget: BaselineBudget,
    pub initial_params: InitialParams,
    /// Keep every `history_stride`-th history entry in the record.
    pub history_stride: usize,
}

impl RunConfig {
    pub fn new(ansatz: Ansatz, budget: u64) -> Self {
        Self {
            budget,
            shots_per_term: DEFAULT_SHOTS_PER_TERM,
            ansatz,
            optimizer: OptimizerSpec::default(),
            monitor: MonitorSpec::default(),
            seed: 0,
            mode: Mode::Tree,
            baseline_budget: BaselineBudget::Strict,
            initial_params: InitialParams::Zeros,
            history_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.budget == 0 {
            return Err(EngineError::Config("budget must be positive".into()));
        }
        if self.shots_per_term == 0 {
            return Err(EngineError::Config(
                "shots_per_term must be positive".into(),
            ));
        }
        if self.history_stride == 0 {
            return Err(EngineError::Config(
                "history_stride must be positive".into(),
            ));
        }
        if let InitialParams::Uniform { low, high } = self.initial_params {
            if !(low < high) || !low.is_finite() || !high.is_finite() {
                return Err(EngineError::Config(
                    "uniform initial params need low < high".into(),
                ));
            }
        }
        if let InitialParams::Explicit { values } = &self.initial_params {
            if values.len() != self.ansatz.n_params() {
                return Err(EngineError::Config(format!(
                    "explicit initial params have length {}, ansatz needs {}",
                    values.len(),
                    self.ansatz.n_params()
                )));
            }
        }
        Ok(())
    }
}
