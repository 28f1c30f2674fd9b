use super::clamp_box;

/// Hyperparameters for Adam; `weight_decay > 0` selects decoupled AdamW.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamParams {
    pub const fn adam() -> Self {
        AdamParams {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }

    pub const fn adamw() -> Self {
        AdamParams {
            weight_decay: 1e-5,
            ..Self::adam()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFiniteGradient {
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct AdamState {
    pub params: AdamParams,
    pub lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n: usize, params: AdamParams) -> Self {
        AdamState {
            params,
            lr: params.lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// One bias-corrected Adam step at the current `lr`, followed by
    /// projection onto `[lo, hi]`.
    ///
    /// With weight decay the update is `p ← p − lr·(m̂/(√v̂ + ε) + wd·p)`,
    /// the decay using the pre-step parameter. A non-finite gradient leaves
    /// everything untouched.
    pub fn step(
        &mut self,
        x: &mut [f64],
        grad: &[f64],
        lo: f64,
        hi: f64,
    ) -> Result<(), NonFiniteGradient> {
        debug_assert_eq!(x.len(), grad.len());
        debug_assert_eq!(x.len(), self.m.len());
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(NonFiniteGradient { index });
        }
        self.t += 1;
        let AdamParams {
            beta1,
            beta2,
            eps,
            weight_decay,
            ..
        } = self.params;
        let t = self.t as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let lr = self.lr;
        for (((p, &g), m), v) in x.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            let mut update = m_hat / (v_hat.sqrt() + eps);
            if weight_decay > 0.0 {
                update += weight_decay * *p;
            }
            *p -= lr * update;
        }
        clamp_box(x, lo, hi);
        Ok(())
    }
}
