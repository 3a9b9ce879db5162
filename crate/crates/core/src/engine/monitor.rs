use super::EngineError;

/// Least-squares slope of the last `window` values against `0..window`.
pub fn slope(history: &[f64], window: usize) -> Result<f64, EngineError> {
    if window < 2 || history.len() < window {
        return Err(EngineError::InsufficientHistory {
            have: history.len(),
            window,
        });
    }
    let ys = &history[history.len() - window..];
    let w = window as f64;
    let x_mean = (w - 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / w;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - x_mean;
        num += dx * (y - y_mean);
        den += dx * dx;
    }
    Ok(num / den)
}

/// Stagnation of the mixed loss, or any member getting worse.
pub fn split_condition(slope_mixed: f64, per_task_slopes: &[f64], eps_split: f64) -> bool {
    slope_mixed.abs() < eps_split || per_task_slopes.iter().any(|&s| s > 0.0)
}

/// `sum_k c_ik e_k` for every member row.
pub fn per_task_losses(estimates: &[f64], rows: &[&[f64]]) -> Result<Vec<f64>, EngineError> {
    rows.iter()
        .map(|row| {
            if row.len() != estimates.len() {
                return Err(EngineError::LengthMismatch {
                    left: row.len(),
                    right: estimates.len(),
                });
            }
            Ok(row.iter().zip(estimates).map(|(c, e)| c * e).sum())
        })
        .collect()
}
