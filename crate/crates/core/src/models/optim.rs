use super::network::{flatten, Dense, Network};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Adaptive-moment update with bias correction.
pub struct Adam {
    lr: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(net: &Network, lr: f64) -> Self {
        let n = net.layers.iter().map(|d| d.weight.len() + d.bias.len()).sum();
        Adam {
            lr,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn update(&mut self, net: &mut Network, grads: &[Dense]) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        let flat = flatten(grads);
        for (k, p) in net.params_mut().enumerate() {
            let g = flat[k];
            self.m[k] = ADAM_BETA1 * self.m[k] + (1.0 - ADAM_BETA1) * g;
            self.v[k] = ADAM_BETA2 * self.v[k] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
}
