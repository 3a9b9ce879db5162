use serde::{Deserialize, Serialize};

use super::{Evaluation, LossOracle, OptimError, StepReport};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const DEGENERATE_SPREAD: f64 = 1e-12;

/// Nelder-Mead simplex advanced one reflection at a time.
///
/// The simplex is built lazily on the first step (`n + 1` evaluations). Each
/// later step costs one evaluation for the reflection plus one for an
/// expansion or contraction, or `n` more when the simplex shrinks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexState {
    pub initial_step: f64,
    start: Vec<f64>,
    vertices: Vec<Vec<f64>>,
    losses: Vec<f64>,
    pub reinitializations: u64,
}

impl SimplexState {
    pub fn new(start: Vec<f64>, initial_step: f64) -> Self {
        Self {
            initial_step,
            start,
            vertices: Vec::new(),
            losses: Vec::new(),
            reinitializations: 0,
        }
    }

    /// Lowest-loss vertex, or the start point before the first step.
    pub fn best(&self) -> &[f64] {
        match self.best_index() {
            Some(i) => &self.vertices[i],
            None => &self.start,
        }
    }

    pub fn best_loss(&self) -> Option<f64> {
        self.best_index().map(|i| self.losses[i])
    }

    fn best_index(&self) -> Option<usize> {
        (0..self.losses.len()).min_by(|&a, &b| self.losses[a].total_cmp(&self.losses[b]))
    }

    fn build(
        &mut self,
        center: Vec<f64>,
        oracle: &mut dyn LossOracle,
        evals: &mut Vec<Evaluation>,
    ) -> Result<(), OptimError> {
        let n = center.len();
        let mut vertices = vec![center.clone()];
        for i in 0..n {
            let mut v = center.clone();
            v[i] += self.initial_step;
            vertices.push(v);
        }
        self.losses = Vec::with_capacity(n + 1);
        for v in &vertices {
            let e = oracle.evaluate(v)?;
            self.losses.push(e.loss);
            evals.push(e);
        }
        self.vertices = vertices;
        Ok(())
    }

    fn degenerate(&self) -> bool {
        let best = self.best();
        let diameter = self
            .vertices
            .iter()
            .map(|v| {
                v.iter()
                    .zip(best)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        diameter < DEGENERATE_SPREAD
    }
}

pub fn simplex_step(
    state: &mut SimplexState,
    oracle: &mut dyn LossOracle,
) -> Result<StepReport, OptimError> {
    let mut evals = Vec::new();
    if !(state.initial_step > 0.0 && state.initial_step.is_finite()) {
        return Err(OptimError::InvalidSettings(
            "initial_step must be positive".into(),
        ));
    }
    if state.vertices.is_empty() {
        let start = state.start.clone();
        state.build(start, oracle, &mut evals)?;
        return Ok(StepReport {
            params: state.best().to_vec(),
            evaluations: evals,
        });
    }
    if state.degenerate() {
        let best = state.best().to_vec();
        state.reinitializations += 1;
        state.build(best, oracle, &mut evals)?;
        return Ok(StepReport {
            params: state.best().to_vec(),
            evaluations: evals,
        });
    }
    let n = state.start.len();
    if n == 0 {
        return Ok(StepReport {
            params: Vec::new(),
            evaluations: evals,
        });
    }

    let mut order: Vec<usize> = (0..=n).collect();
    order.sort_by(|&a, &b| state.losses[a].total_cmp(&state.losses[b]));
    let (best, second_worst, worst) = (order[0], order[n - 1], order[n]);
    let mut centroid = vec![0.0; n];
    for &i in &order[..n] {
        for (c, x) in centroid.iter_mut().zip(&state.vertices[i]) {
            *c += x / n as f64;
        }
    }
    let toward = |coef: f64, from: &[f64]| -> Vec<f64> {
        centroid
            .iter()
            .zip(from)
            .map(|(c, w)| c + coef * (c - w))
            .collect()
    };

    let worst_v = state.vertices[worst].clone();
    let reflected = toward(REFLECT, &worst_v);
    let er = oracle.evaluate(&reflected)?;
    let fr = er.loss;
    evals.push(er);

    if fr < state.losses[best] {
        let expanded = toward(EXPAND, &worst_v);
        let ee = oracle.evaluate(&expanded)?;
        let fe = ee.loss;
        evals.push(ee);
        if fe < fr {
            state.vertices[worst] = expanded;
            state.losses[worst] = fe;
        } else {
            state.vertices[worst] = reflected;
            state.losses[worst] = fr;
        }
    } else if fr < state.losses[second_worst] {
        state.vertices[worst] = reflected;
        state.losses[worst] = fr;
    } else {
        let outside = fr < state.losses[worst];
        let contracted = if outside {
            toward(CONTRACT, &worst_v)
        } else {
            toward(-CONTRACT, &worst_v)
        };
        let ec = oracle.evaluate(&contracted)?;
        let fc = ec.loss;
        evals.push(ec);
        let bound = if outside { fr } else { state.losses[worst] };
        if fc < bound {
            state.vertices[worst] = contracted;
            state.losses[worst] = fc;
        } else {
            let anchor = state.vertices[best].clone();
            for i in 0..=n {
                if i == best {
                    continue;
                }
                let v: Vec<f64> = anchor
                    .iter()
                    .zip(&state.vertices[i])
                    .map(|(a, x)| a + SHRINK * (x - a))
                    .collect();
                let e = oracle.evaluate(&v)?;
                state.losses[i] = e.loss;
                state.vertices[i] = v;
                evals.push(e);
            }
        }
    }
    Ok(StepReport {
        params: state.best().to_vec(),
        evaluations: evals,
    })
}
