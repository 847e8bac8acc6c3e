//! Adaptive first-order optimizers over flat parameter vectors.

use super::params::{NnError, ParamVector};

/// Which adaptive update rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    /// First- and second-moment adaptive update with bias correction.
    AdamStyle,
    /// Second-moment-only adaptive update.
    RmsPropStyle,
}

/// Optimizer state sized to one parameter vector.
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    decay: f64,
    eps: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, param_len: usize) -> Self {
        Optimizer {
            kind,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            decay: 0.99,
            eps: match kind {
                OptimizerKind::AdamStyle => 1e-8,
                OptimizerKind::RmsPropStyle => 1e-5,
            },
            first_moment: vec![0.0; param_len],
            second_moment: vec![0.0; param_len],
            step_count: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update in place; moment buffers advance.
    pub fn step(&mut self, params: &mut ParamVector, grad: &ParamVector) -> Result<(), NnError> {
        if params.len() != self.first_moment.len() || grad.len() != self.first_moment.len() {
            return Err(NnError::LengthMismatch {
                dst: params.len(),
                src: grad.len(),
            });
        }
        self.step_count += 1;
        let p = params.as_mut_slice();
        let g = grad.as_slice();
        match self.kind {
            OptimizerKind::AdamStyle => {
                let bc1 = 1.0 - self.beta1.powi(self.step_count as i32);
                let bc2 = 1.0 - self.beta2.powi(self.step_count as i32);
                for k in 0..p.len() {
                    self.first_moment[k] = self.beta1 * self.first_moment[k] + (1.0 - self.beta1) * g[k];
                    self.second_moment[k] =
                        self.beta2 * self.second_moment[k] + (1.0 - self.beta2) * g[k] * g[k];
                    let m_hat = self.first_moment[k] / bc1;
                    let v_hat = self.second_moment[k] / bc2;
                    p[k] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
                }
            }
            OptimizerKind::RmsPropStyle => {
                for k in 0..p.len() {
                    self.second_moment[k] =
                        self.decay * self.second_moment[k] + (1.0 - self.decay) * g[k] * g[k];
                    p[k] -= self.learning_rate * g[k] / (self.second_moment[k].sqrt() + self.eps);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_of(values: &[f64]) -> ParamVector {
        let mut p = ParamVector::with_segments(&[("p", values.len())]);
        p.as_mut_slice().copy_from_slice(values);
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        for kind in [OptimizerKind::AdamStyle, OptimizerKind::RmsPropStyle] {
            let mut params = vec_of(&[1.0, -2.0, 3.0]);
            let grad = params.zeros_like();
            let mut opt = Optimizer::new(kind, 0.01, 3);
            opt.step(&mut params, &grad).unwrap();
            assert_eq!(params.as_slice(), &[1.0, -2.0, 3.0]);
        }
    }

    #[test]
    fn first_adam_step_is_a_bias_corrected_sign_step() {
        // With m_hat = g and v_hat = g^2, the first update is
        // lr * g / (|g| + eps), i.e. almost exactly lr in magnitude.
        let lr = 0.01;
        for g in [2.5, -0.3, 1e-3] {
            let mut params = vec_of(&[0.0]);
            let grad = vec_of(&[g]);
            let mut opt = Optimizer::new(OptimizerKind::AdamStyle, lr, 1);
            opt.step(&mut params, &grad).unwrap();
            let expected = -lr * g / (g.abs() + 1e-8);
            assert!(
                (params.as_slice()[0] - expected).abs() < 1e-12,
                "g={g}: {} vs {expected}",
                params.as_slice()[0]
            );
            assert!((params.as_slice()[0].abs() - lr).abs() < 1e-5);
        }
    }

    #[test]
    fn trajectories_are_deterministic() {
        for kind in [OptimizerKind::AdamStyle, OptimizerKind::RmsPropStyle] {
            let run = || {
                let mut params = vec_of(&[0.5, -0.5]);
                let mut opt = Optimizer::new(kind, 0.005, 2);
                for t in 0..10 {
                    let grad = vec_of(&[0.1 * t as f64, -0.2]);
                    opt.step(&mut params, &grad).unwrap();
                }
                params.as_slice().to_vec()
            };
            assert_eq!(run(), run());
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut params = vec_of(&[1.0, 2.0]);
        let grad = vec_of(&[1.0]);
        let mut opt = Optimizer::new(OptimizerKind::AdamStyle, 0.01, 2);
        assert!(opt.step(&mut params, &grad).is_err());
    }

    #[test]
    fn rmsprop_descends_a_quadratic() {
        // Minimize (x - 3)^2 from 0; the adaptive step should get close.
        let mut params = vec_of(&[0.0]);
        let mut opt = Optimizer::new(OptimizerKind::RmsPropStyle, 0.05, 1);
        for _ in 0..500 {
            let x = params.as_slice()[0];
            let grad = vec_of(&[2.0 * (x - 3.0)]);
            opt.step(&mut params, &grad).unwrap();
        }
        assert!((params.as_slice()[0] - 3.0).abs() < 0.05);
    }
}
