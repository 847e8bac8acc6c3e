//! Local agent: an LSTM-style recurrent cell followed by two dense layers
//! producing one action value per action.

use rand::Rng;

use super::params::{NnError, ParamVector};
use super::{glorot_limit, matvec_acc, matvec_t_acc, outer_acc, relu, relu_grad, sigmoid};

/// Architecture of one local agent.
#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub obs_dim: usize,
    pub n_actions: usize,
    /// Recurrent state width and dense layer width.
    pub hidden: usize,
}

/// Recurrent state `(h, c)`; zeroed at episode start.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl HiddenState {
    pub fn zeros(hidden: usize) -> Self {
        HiddenState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// One recorded step of a forward unroll.
struct StepTrace {
    input: Vec<f64>,
    c_prev: Vec<f64>,
    /// Post-activation gates, in [input, forget, cell, output] order.
    gate_i: Vec<f64>,
    gate_f: Vec<f64>,
    gate_g: Vec<f64>,
    gate_o: Vec<f64>,
    c_new: Vec<f64>,
    tanh_c: Vec<f64>,
    h_new: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
}

/// Recorded forward recurrence, consumed by [`AgentNet::backward`].
pub struct AgentUnroll {
    steps: Vec<StepTrace>,
    state: HiddenState,
}

impl AgentUnroll {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// State after the last recorded step.
    pub fn state(&self) -> &HiddenState {
        &self.state
    }
}

/// The local agent `Q_i = g(o_i; h)`.
///
/// Gate weights act on the concatenated `(observation, h_prev)` input; the
/// cell output feeds a rectified dense layer and a linear action-value head.
pub struct AgentNet {
    cfg: AgentConfig,
    params: ParamVector,
    gate_w: usize,
    gate_b: usize,
    fc_w: usize,
    fc_b: usize,
    out_w: usize,
    out_b: usize,
}

impl AgentNet {
    pub fn new(cfg: AgentConfig) -> Self {
        let h = cfg.hidden;
        let gin = cfg.obs_dim + h;
        let params = ParamVector::with_segments(&[
            ("lstm.w", 4 * h * gin),
            ("lstm.b", 4 * h),
            ("fc.w", h * h),
            ("fc.b", h),
            ("out.w", cfg.n_actions * h),
            ("out.b", cfg.n_actions),
        ]);
        let segs = params.segments();
        let gate_w = segs[0].offset;
        let gate_b = segs[1].offset;
        let fc_w = segs[2].offset;
        let fc_b = segs[3].offset;
        let out_w = segs[4].offset;
        let out_b = segs[5].offset;
        AgentNet {
            cfg,
            params,
            gate_w,
            gate_b,
            fc_w,
            fc_b,
            out_w,
            out_b,
        }
    }

    /// Glorot-uniform weights; biases zero except the forget gate at +1.
    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        let h = self.cfg.hidden;
        let gin = self.cfg.obs_dim + h;
        let n_act = self.cfg.n_actions;
        let (gate_w, gate_b, fc_w, out_w) = (self.gate_w, self.gate_b, self.fc_w, self.out_w);
        let data = self.params.as_mut_slice();
        let limg = glorot_limit(gin, h);
        for w in &mut data[gate_w..gate_w + 4 * h * gin] {
            *w = rng.gen_range(-limg..limg);
        }
        // Forget-gate rows occupy the second block of gate biases.
        for b in &mut data[gate_b + h..gate_b + 2 * h] {
            *b = 1.0;
        }
        let limf = glorot_limit(h, h);
        for w in &mut data[fc_w..fc_w + h * h] {
            *w = rng.gen_range(-limf..limf);
        }
        let limo = glorot_limit(h, n_act);
        for w in &mut data[out_w..out_w + n_act * h] {
            *w = rng.gen_range(-limo..limo);
        }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamVector {
        &mut self.params
    }

    pub fn set_params(&mut self, src: &ParamVector) -> Result<(), NnError> {
        self.params.copy_from(src)
    }

    pub fn zero_state(&self) -> HiddenState {
        HiddenState::zeros(self.cfg.hidden)
    }

    fn check_obs(&self, obs: &[f64], state: &HiddenState) -> Result<(), NnError> {
        if obs.len() != self.cfg.obs_dim {
            return Err(NnError::ShapeMismatch {
                what: "agent observation width",
                expected: self.cfg.obs_dim,
                got: obs.len(),
            });
        }
        if state.h.len() != self.cfg.hidden || state.c.len() != self.cfg.hidden {
            return Err(NnError::ShapeMismatch {
                what: "agent hidden-state width",
                expected: self.cfg.hidden,
                got: state.h.len(),
            });
        }
        Ok(())
    }

    fn step_impl(&self, obs: &[f64], state: &HiddenState) -> (StepTrace, Vec<f64>) {
        let h = self.cfg.hidden;
        let gin = self.cfg.obs_dim + h;
        let data = self.params.as_slice();

        let mut input = Vec::with_capacity(gin);
        input.extend_from_slice(obs);
        input.extend_from_slice(&state.h);

        let mut gates = data[self.gate_b..self.gate_b + 4 * h].to_vec();
        matvec_acc(&data[self.gate_w..self.gate_w + 4 * h * gin], 4 * h, gin, &input, &mut gates);

        let mut gate_i = vec![0.0; h];
        let mut gate_f = vec![0.0; h];
        let mut gate_g = vec![0.0; h];
        let mut gate_o = vec![0.0; h];
        for k in 0..h {
            gate_i[k] = sigmoid(gates[k]);
            gate_f[k] = sigmoid(gates[h + k]);
            gate_g[k] = gates[2 * h + k].tanh();
            gate_o[k] = sigmoid(gates[3 * h + k]);
        }
        let mut c_new = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        let mut h_new = vec![0.0; h];
        for k in 0..h {
            c_new[k] = gate_f[k] * state.c[k] + gate_i[k] * gate_g[k];
            tanh_c[k] = c_new[k].tanh();
            h_new[k] = gate_o[k] * tanh_c[k];
        }

        let mut z1 = data[self.fc_b..self.fc_b + h].to_vec();
        matvec_acc(&data[self.fc_w..self.fc_w + h * h], h, h, &h_new, &mut z1);
        let a1: Vec<f64> = z1.iter().map(|&z| relu(z)).collect();

        let n_act = self.cfg.n_actions;
        let mut q = data[self.out_b..self.out_b + n_act].to_vec();
        matvec_acc(&data[self.out_w..self.out_w + n_act * h], n_act, h, &a1, &mut q);

        (
            StepTrace {
                input,
                c_prev: state.c.clone(),
                gate_i,
                gate_f,
                gate_g,
                gate_o,
                c_new,
                tanh_c,
                h_new,
                z1,
                a1,
            },
            q,
        )
    }

    /// One recurrent step: per-action values plus the successor state.
    pub fn forward(&self, obs: &[f64], state: &HiddenState) -> Result<(Vec<f64>, HiddenState), NnError> {
        self.check_obs(obs, state)?;
        let (trace, q) = self.step_impl(obs, state);
        Ok((
            q,
            HiddenState {
                h: trace.h_new,
                c: trace.c_new,
            },
        ))
    }

    /// Starts a recorded unroll from the zero state.
    pub fn begin_unroll(&self) -> AgentUnroll {
        AgentUnroll {
            steps: Vec::new(),
            state: self.zero_state(),
        }
    }

    /// One recorded step of the unroll; returns the per-action values.
    pub fn forward_recorded(&self, unroll: &mut AgentUnroll, obs: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_obs(obs, &unroll.state)?;
        let (trace, q) = self.step_impl(obs, &unroll.state);
        unroll.state = HiddenState {
            h: trace.h_new.clone(),
            c: trace.c_new.clone(),
        };
        unroll.steps.push(trace);
        Ok(q)
    }

    /// Smallest |pre-activation| of the rectified dense layer across an
    /// unrolled observation sequence; the gate nonlinearities are smooth,
    /// so this is the only kink a finite-difference probe can straddle.
    pub fn relu_margin(&self, obs_seq: &[Vec<f64>]) -> Result<f64, NnError> {
        let mut state = self.zero_state();
        let mut margin = f64::INFINITY;
        for obs in obs_seq {
            self.check_obs(obs, &state)?;
            let (trace, _) = self.step_impl(obs, &state);
            for z in &trace.z1 {
                margin = margin.min(z.abs());
            }
            state = HiddenState {
                h: trace.h_new,
                c: trace.c_new,
            };
        }
        Ok(margin)
    }

    /// Backpropagation through the recorded recurrence.
    ///
    /// `upstream[t]` is d(loss)/d(q_t); gradients accumulate into `grads`.
    pub fn backward_into(
        &self,
        unroll: &AgentUnroll,
        upstream: &[Vec<f64>],
        grads: &mut ParamVector,
    ) -> Result<(), NnError> {
        if unroll.steps.is_empty() {
            return Err(NnError::NoRecordedForward);
        }
        if upstream.len() != unroll.steps.len() {
            return Err(NnError::ShapeMismatch {
                what: "agent upstream gradient count",
                expected: unroll.steps.len(),
                got: upstream.len(),
            });
        }
        if grads.len() != self.params.len() {
            return Err(NnError::LengthMismatch {
                dst: grads.len(),
                src: self.params.len(),
            });
        }

        let h = self.cfg.hidden;
        let gin = self.cfg.obs_dim + h;
        let n_act = self.cfg.n_actions;
        let data = self.params.as_slice();

        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut da1 = vec![0.0; h];
        let mut dz1 = vec![0.0; h];
        let mut dh = vec![0.0; h];
        let mut dc = vec![0.0; h];
        let mut dgates = vec![0.0; 4 * h];
        let mut dinput = vec![0.0; gin];

        for (t, step) in unroll.steps.iter().enumerate().rev() {
            let dq = &upstream[t];
            if dq.len() != n_act {
                return Err(NnError::ShapeMismatch {
                    what: "agent upstream gradient width",
                    expected: n_act,
                    got: dq.len(),
                });
            }

            // Output head.
            {
                let g = grads.as_mut_slice();
                outer_acc(&mut g[self.out_w..self.out_w + n_act * h], dq, &step.a1);
                for (db, d) in g[self.out_b..self.out_b + n_act].iter_mut().zip(dq) {
                    *db += d;
                }
            }
            da1.iter_mut().for_each(|x| *x = 0.0);
            matvec_t_acc(&data[self.out_w..self.out_w + n_act * h], n_act, h, dq, &mut da1);

            // Dense layer.
            for k in 0..h {
                dz1[k] = da1[k] * relu_grad(step.z1[k]);
            }
            {
                let g = grads.as_mut_slice();
                outer_acc(&mut g[self.fc_w..self.fc_w + h * h], &dz1, &step.h_new);
                for (db, d) in g[self.fc_b..self.fc_b + h].iter_mut().zip(&dz1) {
                    *db += d;
                }
            }

            // dh collects the head path plus the recurrent carry.
            dh.iter_mut().for_each(|x| *x = 0.0);
            matvec_t_acc(&data[self.fc_w..self.fc_w + h * h], h, h, &dz1, &mut dh);
            for k in 0..h {
                dh[k] += dh_next[k];
            }

            // Cell internals.
            for k in 0..h {
                let d_tanh_c = dh[k] * step.gate_o[k];
                dc[k] = dc_next[k] + d_tanh_c * (1.0 - step.tanh_c[k] * step.tanh_c[k]);
                let d_o = dh[k] * step.tanh_c[k];
                let d_i = dc[k] * step.gate_g[k];
                let d_f = dc[k] * step.c_prev[k];
                let d_g = dc[k] * step.gate_i[k];
                dgates[k] = d_i * step.gate_i[k] * (1.0 - step.gate_i[k]);
                dgates[h + k] = d_f * step.gate_f[k] * (1.0 - step.gate_f[k]);
                dgates[2 * h + k] = d_g * (1.0 - step.gate_g[k] * step.gate_g[k]);
                dgates[3 * h + k] = d_o * step.gate_o[k] * (1.0 - step.gate_o[k]);
            }
            {
                let g = grads.as_mut_slice();
                outer_acc(&mut g[self.gate_w..self.gate_w + 4 * h * gin], &dgates, &step.input);
                for (db, d) in g[self.gate_b..self.gate_b + 4 * h].iter_mut().zip(&dgates) {
                    *db += d;
                }
            }
            dinput.iter_mut().for_each(|x| *x = 0.0);
            matvec_t_acc(
                &data[self.gate_w..self.gate_w + 4 * h * gin],
                4 * h,
                gin,
                &dgates,
                &mut dinput,
            );

            // Carry into the previous step.
            dh_next.copy_from_slice(&dinput[self.cfg.obs_dim..]);
            for k in 0..h {
                dc_next[k] = dc[k] * step.gate_f[k];
            }
        }
        Ok(())
    }

    /// Convenience wrapper returning a fresh gradient vector.
    pub fn backward(&self, unroll: &AgentUnroll, upstream: &[Vec<f64>]) -> Result<ParamVector, NnError> {
        let mut grads = self.params.zeros_like();
        self.backward_into(unroll, upstream, &mut grads)?;
        Ok(grads)
    }
}
