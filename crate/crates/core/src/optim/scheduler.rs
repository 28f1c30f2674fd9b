/// Reduce-on-plateau learning-rate schedule.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlateauParams {
    pub factor: f64,
    pub patience: u64,
    pub min_lr: f64,
    /// Absolute improvement needed to reset the plateau counter.
    pub min_delta: f64,
}

impl Default for PlateauParams {
    fn default() -> Self {
        PlateauParams {
            factor: 0.5,
            patience: 1_000,
            min_lr: 1e-5,
            min_delta: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlateauScheduler {
    params: PlateauParams,
    best_loss: f64,
    since_improve: u64,
}

impl PlateauScheduler {
    pub fn new(params: PlateauParams) -> Self {
        PlateauScheduler {
            params,
            best_loss: f64::INFINITY,
            since_improve: 0,
        }
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }

    /// Feeds one loss and returns the learning rate to use next.
    pub fn observe(&mut self, loss: f64, lr: f64) -> f64 {
        if loss < self.best_loss - self.params.min_delta {
            self.best_loss = loss;
            self.since_improve = 0;
            return lr;
        }
        self.since_improve += 1;
        if self.since_improve >= self.params.patience {
            self.since_improve = 0;
            return (lr * self.params.factor).max(self.params.min_lr).min(lr);
        }
        lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(patience: u64) -> PlateauScheduler {
        PlateauScheduler::new(PlateauParams {
            patience,
            ..PlateauParams::default()
        })
    }

    #[test]
    fn decreasing_losses_keep_lr() {
        let mut s = sched(3);
        let mut lr = 0.01;
        for k in 0..100 {
            lr = s.observe(-(k as f64), lr);
        }
        assert_eq!(lr, 0.01);
    }

    #[test]
    fn plateau_halves_once() {
        let mut s = sched(5);
        let mut lr = s.observe(1.0, 0.01);
        let mut changes = 0;
        for _ in 0..5 {
            let next = s.observe(1.0, lr);
            if next != lr {
                changes += 1;
            }
            lr = next;
        }
        assert_eq!(changes, 1);
        assert_eq!(lr, 0.005);
    }

    #[test]
    fn floor_at_min_lr() {
        let mut s = sched(1);
        let mut lr = 1e-5;
        for _ in 0..10 {
            lr = s.observe(1.0, lr);
        }
        assert_eq!(lr, 1e-5);
    }

    #[test]
    fn lr_sequence_non_increasing() {
        let mut s = sched(2);
        let mut lr = 0.01;
        let losses = [3.0, 2.0, 2.5, 2.5, 1.0, 1.0, 1.0, 1.0, 0.5, 0.7, 0.7, 0.7, 0.7, 0.7];
        for _ in 0..20 {
            for &l in &losses {
                let next = s.observe(l, lr);
                assert!(next <= lr && next >= 1e-5);
                lr = next;
            }
        }
    }
}
