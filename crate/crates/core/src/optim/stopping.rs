use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StopParams {
    /// Moving-average window W.
    pub window: usize,
    /// Consecutive satisfied checks required to stop.
    pub patience: u64,
    pub threshold: f64,
    pub max_steps: u64,
}

impl StopParams {
    pub fn new(threshold: f64, max_steps: u64) -> Self {
        StopParams {
            window: 100,
            patience: 10,
            threshold,
            max_steps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Converged,
    MaxSteps,
    NumericFailure,
}

/// Moving-average early stopping.
///
/// Compares the mean of the last `W` losses with the mean of the `W` before
/// them, `r = |now − prev| / max(|prev|, 1e-12)`. Checks start with the
/// first observation after the `2W`-loss warm-up, so a constant stream
/// stops on 0-based step `2W + patience − 1`. `patience` consecutive checks
/// with `r < threshold` stop the run.
#[derive(Clone, Debug)]
pub struct StopState {
    params: StopParams,
    history: VecDeque<f64>,
    seen: u64,
    consecutive_hits: u64,
}

impl StopState {
    pub fn new(params: StopParams) -> Self {
        assert!(params.window >= 1 && params.patience >= 1 && params.max_steps >= 1);
        StopState {
            params,
            history: VecDeque::with_capacity(2 * params.window),
            seen: 0,
            consecutive_hits: 0,
        }
    }

    pub fn consecutive_hits(&self) -> u64 {
        self.consecutive_hits
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// `step` is the 0-based index of this observation; the run ends with
    /// `MaxSteps` on observation number `max_steps`.
    pub fn observe(&mut self, loss: f64, step: u64) -> StopDecision {
        if !loss.is_finite() {
            return StopDecision::NumericFailure;
        }
        let w = self.params.window;
        if self.history.len() == 2 * w {
            self.history.pop_front();
        }
        self.history.push_back(loss);
        self.seen += 1;
        if self.seen > 2 * w as u64 {
            let prev: f64 = self.history.range(..w).sum::<f64>() / w as f64;
            let now: f64 = self.history.range(w..).sum::<f64>() / w as f64;
            let r = (now - prev).abs() / prev.abs().max(1e-12);
            if r < self.params.threshold {
                self.consecutive_hits += 1;
            } else {
                self.consecutive_hits = 0;
            }
        }
        if self.consecutive_hits >= self.params.patience {
            StopDecision::Converged
        } else if step + 1 >= self.params.max_steps {
            StopDecision::MaxSteps
        } else {
            StopDecision::Continue
        }
    }
}
