//! Central critic: per-group feature extraction, concatenation fusion, and a
//! joint-value estimation head.

use rand::Rng;

use super::params::{NnError, ParamVector};
use super::{glorot_limit, matvec_acc, matvec_t_acc, outer_acc, relu, relu_grad};

/// Architecture of the central critic.
#[derive(Debug, Clone)]
pub struct CriticConfig {
    pub n_agents: usize,
    pub obs_dim: usize,
    /// Width of one agent's action encoding (one-hot of the action id; the
    /// all-zeros vector is the baseline encoding).
    pub act_dim: usize,
    /// Units per dense layer in the extractors.
    pub hidden: usize,
    /// Units in the rectified fusion layer ahead of the single linear
    /// output. Coalition interactions between agents are representable only
    /// through this layer; with it removed the joint value would be a sum of
    /// per-agent terms.
    pub head_hidden: usize,
    /// Group label per agent; agents with equal labels share extractor
    /// parameters exactly.
    pub groups: Vec<usize>,
}

impl CriticConfig {
    pub fn homogeneous(n_agents: usize, obs_dim: usize, act_dim: usize, hidden: usize) -> Self {
        CriticConfig {
            n_agents,
            obs_dim,
            act_dim,
            hidden,
            head_hidden: hidden,
            groups: vec![0; n_agents],
        }
    }

    fn input_dim(&self) -> usize {
        self.obs_dim + self.act_dim
    }
}

#[derive(Debug, Clone, Copy)]
struct ExtractorOffsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

/// The central critic `Q_tot = f(o_1, u_1, ..., o_n, u_n)`.
///
/// Each agent's (observation, action encoding) pair passes through its
/// group's two-layer rectified extractor; the per-agent features are
/// concatenated and the estimation head (one rectified dense layer, then a
/// single linear unit) produces the joint value.
pub struct CriticNet {
    cfg: CriticConfig,
    params: ParamVector,
    /// Extractor index per agent (group labels mapped by first appearance).
    extractor_of_agent: Vec<usize>,
    offsets: Vec<ExtractorOffsets>,
    head_w1: usize,
    head_b1: usize,
    head_w2: usize,
    head_b2: usize,
}

/// Recorded activations from one traced forward pass.
pub struct CriticTrace {
    inputs: Vec<Vec<f64>>,
    z1: Vec<Vec<f64>>,
    a1: Vec<Vec<f64>>,
    z2: Vec<Vec<f64>>,
    fused: Vec<f64>,
    zh: Vec<f64>,
    ah: Vec<f64>,
    pub output: f64,
}

/// Gradients of a scalar loss with respect to parameters and inputs.
pub struct CriticGradients {
    pub params: ParamVector,
    pub obs: Vec<Vec<f64>>,
    pub enc: Vec<Vec<f64>>,
}

impl CriticNet {
    pub fn new(cfg: CriticConfig) -> Result<Self, NnError> {
        if cfg.groups.len() != cfg.n_agents {
            return Err(NnError::ShapeMismatch {
                what: "critic group labels",
                expected: cfg.n_agents,
                got: cfg.groups.len(),
            });
        }
        // Map group labels to extractor indices in order of first appearance.
        let mut labels: Vec<usize> = Vec::new();
        let mut extractor_of_agent = Vec::with_capacity(cfg.n_agents);
        for &label in &cfg.groups {
            let idx = match labels.iter().position(|&l| l == label) {
                Some(i) => i,
                None => {
                    labels.push(label);
                    labels.len() - 1
                }
            };
            extractor_of_agent.push(idx);
        }

        let input = cfg.input_dim();
        let h = cfg.hidden;
        let hh = cfg.head_hidden;
        let fused = cfg.n_agents * h;
        let mut decls: Vec<(String, usize)> = Vec::new();
        for g in 0..labels.len() {
            decls.push((format!("group{g}.w1"), h * input));
            decls.push((format!("group{g}.b1"), h));
            decls.push((format!("group{g}.w2"), h * h));
            decls.push((format!("group{g}.b2"), h));
        }
        decls.push(("head.w1".to_string(), hh * fused));
        decls.push(("head.b1".to_string(), hh));
        decls.push(("head.w2".to_string(), hh));
        decls.push(("head.b2".to_string(), 1));
        let decl_refs: Vec<(&str, usize)> = decls.iter().map(|(n, l)| (n.as_str(), *l)).collect();
        let params = ParamVector::with_segments(&decl_refs);

        let segs = params.segments();
        let mut offsets = Vec::with_capacity(labels.len());
        for g in 0..labels.len() {
            offsets.push(ExtractorOffsets {
                w1: segs[4 * g].offset,
                b1: segs[4 * g + 1].offset,
                w2: segs[4 * g + 2].offset,
                b2: segs[4 * g + 3].offset,
            });
        }
        let head_w1 = segs[segs.len() - 4].offset;
        let head_b1 = segs[segs.len() - 3].offset;
        let head_w2 = segs[segs.len() - 2].offset;
        let head_b2 = segs[segs.len() - 1].offset;

        Ok(CriticNet {
            cfg,
            params,
            extractor_of_agent,
            offsets,
            head_w1,
            head_b1,
            head_w2,
            head_b2,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        let input = self.cfg.input_dim();
        let h = self.cfg.hidden;
        let hh = self.cfg.head_hidden;
        let fused = self.cfg.n_agents * h;
        let offsets = self.offsets.clone();
        let (head_w1, head_w2) = (self.head_w1, self.head_w2);
        let data = self.params.as_mut_slice();
        for off in &offsets {
            let lim1 = glorot_limit(input, h);
            for w in &mut data[off.w1..off.w1 + h * input] {
                *w = rng.gen_range(-lim1..lim1);
            }
            let lim2 = glorot_limit(h, h);
            for w in &mut data[off.w2..off.w2 + h * h] {
                *w = rng.gen_range(-lim2..lim2);
            }
        }
        let limh = glorot_limit(fused, hh);
        for w in &mut data[head_w1..head_w1 + hh * fused] {
            *w = rng.gen_range(-limh..limh);
        }
        let limo = glorot_limit(hh, 1);
        for w in &mut data[head_w2..head_w2 + hh] {
            *w = rng.gen_range(-limo..limo);
        }
    }

    pub fn config(&self) -> &CriticConfig {
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

    fn check_inputs(&self, obs: &[Vec<f64>], enc: &[Vec<f64>]) -> Result<(), NnError> {
        if obs.len() != self.cfg.n_agents {
            return Err(NnError::ShapeMismatch {
                what: "critic observation count",
                expected: self.cfg.n_agents,
                got: obs.len(),
            });
        }
        if enc.len() != self.cfg.n_agents {
            return Err(NnError::ShapeMismatch {
                what: "critic encoding count",
                expected: self.cfg.n_agents,
                got: enc.len(),
            });
        }
        for o in obs {
            if o.len() != self.cfg.obs_dim {
                return Err(NnError::ShapeMismatch {
                    what: "critic observation width",
                    expected: self.cfg.obs_dim,
                    got: o.len(),
                });
            }
        }
        for e in enc {
            if e.len() != self.cfg.act_dim {
                return Err(NnError::ShapeMismatch {
                    what: "critic encoding width",
                    expected: self.cfg.act_dim,
                    got: e.len(),
                });
            }
        }
        Ok(())
    }

    fn extract(&self, agent: usize, input: &[f64], z1: &mut [f64], a1: &mut [f64], z2: &mut [f64]) {
        let h = self.cfg.hidden;
        let input_dim = self.cfg.input_dim();
        let off = self.offsets[self.extractor_of_agent[agent]];
        let data = self.params.as_slice();

        z1.copy_from_slice(&data[off.b1..off.b1 + h]);
        matvec_acc(&data[off.w1..off.w1 + h * input_dim], h, input_dim, input, z1);
        for (a, z) in a1.iter_mut().zip(z1.iter()) {
            *a = relu(*z);
        }
        z2.copy_from_slice(&data[off.b2..off.b2 + h]);
        matvec_acc(&data[off.w2..off.w2 + h * h], h, h, a1, z2);
    }

    fn head(&self, fused: &[f64], zh: &mut [f64]) -> f64 {
        let hh = self.cfg.head_hidden;
        let data = self.params.as_slice();
        zh.copy_from_slice(&data[self.head_b1..self.head_b1 + hh]);
        matvec_acc(
            &data[self.head_w1..self.head_w1 + hh * fused.len()],
            hh,
            fused.len(),
            fused,
            zh,
        );
        let mut out = data[self.head_b2];
        let w2 = &data[self.head_w2..self.head_w2 + hh];
        for (w, z) in w2.iter().zip(zh.iter()) {
            out += w * relu(*z);
        }
        out
    }

    /// Joint value for one step's observations and action encodings.
    pub fn forward(&self, obs: &[Vec<f64>], enc: &[Vec<f64>]) -> Result<f64, NnError> {
        self.check_inputs(obs, enc)?;
        let h = self.cfg.hidden;

        let mut input = vec![0.0; self.cfg.input_dim()];
        let mut z1 = vec![0.0; h];
        let mut a1 = vec![0.0; h];
        let mut z2 = vec![0.0; h];
        let mut fused = vec![0.0; self.cfg.n_agents * h];
        for agent in 0..self.cfg.n_agents {
            input[..self.cfg.obs_dim].copy_from_slice(&obs[agent]);
            input[self.cfg.obs_dim..].copy_from_slice(&enc[agent]);
            self.extract(agent, &input, &mut z1, &mut a1, &mut z2);
            for (f, z) in fused[agent * h..(agent + 1) * h].iter_mut().zip(z2.iter()) {
                *f = relu(*z);
            }
        }
        let mut zh = vec![0.0; self.cfg.head_hidden];
        Ok(self.head(&fused, &mut zh))
    }

    /// Pre-fusion feature of one agent; probe for the parameter-sharing
    /// contract.
    pub fn features(&self, agent: usize, obs: &[f64], enc: &[f64]) -> Result<Vec<f64>, NnError> {
        if agent >= self.cfg.n_agents {
            return Err(NnError::ShapeMismatch {
                what: "critic agent index",
                expected: self.cfg.n_agents,
                got: agent,
            });
        }
        if obs.len() != self.cfg.obs_dim || enc.len() != self.cfg.act_dim {
            return Err(NnError::ShapeMismatch {
                what: "critic feature-probe input",
                expected: self.cfg.obs_dim + self.cfg.act_dim,
                got: obs.len() + enc.len(),
            });
        }
        let h = self.cfg.hidden;
        let mut input = Vec::with_capacity(self.cfg.input_dim());
        input.extend_from_slice(obs);
        input.extend_from_slice(enc);
        let mut z1 = vec![0.0; h];
        let mut a1 = vec![0.0; h];
        let mut z2 = vec![0.0; h];
        self.extract(agent, &input, &mut z1, &mut a1, &mut z2);
        Ok(z2.iter().map(|&z| relu(z)).collect())
    }

    /// Smallest |pre-activation| over every rectifier input for this input,
    /// a well-posedness margin for finite-difference checks: central
    /// differences are only trustworthy when no rectifier sits within the
    /// probe step of its kink.
    pub fn relu_margin(&self, obs: &[Vec<f64>], enc: &[Vec<f64>]) -> Result<f64, NnError> {
        let trace = self.forward_traced(obs, enc)?;
        let mut margin = f64::INFINITY;
        for agent in 0..self.cfg.n_agents {
            for z in trace.z1[agent].iter().chain(trace.z2[agent].iter()) {
                margin = margin.min(z.abs());
            }
        }
        for z in &trace.zh {
            margin = margin.min(z.abs());
        }
        Ok(margin)
    }

    /// Forward pass that records activations for a later [`Self::backward`].
    pub fn forward_traced(&self, obs: &[Vec<f64>], enc: &[Vec<f64>]) -> Result<CriticTrace, NnError> {
        self.check_inputs(obs, enc)?;
        let n = self.cfg.n_agents;
        let h = self.cfg.hidden;

        let mut inputs = Vec::with_capacity(n);
        let mut z1s = Vec::with_capacity(n);
        let mut a1s = Vec::with_capacity(n);
        let mut z2s = Vec::with_capacity(n);
        let mut fused = vec![0.0; n * h];
        for agent in 0..n {
            let mut input = Vec::with_capacity(self.cfg.input_dim());
            input.extend_from_slice(&obs[agent]);
            input.extend_from_slice(&enc[agent]);
            let mut z1 = vec![0.0; h];
            let mut a1 = vec![0.0; h];
            let mut z2 = vec![0.0; h];
            self.extract(agent, &input, &mut z1, &mut a1, &mut z2);
            for (f, z) in fused[agent * h..(agent + 1) * h].iter_mut().zip(z2.iter()) {
                *f = relu(*z);
            }
            inputs.push(input);
            z1s.push(z1);
            a1s.push(a1);
            z2s.push(z2);
        }
        let mut zh = vec![0.0; self.cfg.head_hidden];
        let output = self.head(&fused, &mut zh);
        let ah = zh.iter().map(|&z| relu(z)).collect();

        Ok(CriticTrace {
            inputs,
            z1: z1s,
            a1: a1s,
            z2: z2s,
            fused,
            zh,
            ah,
            output,
        })
    }

    /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
    ///
    /// Shared group segments receive the sum of every member agent's
    /// contribution.
    pub fn backward_into(
        &self,
        trace: &CriticTrace,
        upstream: f64,
        grads: &mut ParamVector,
    ) -> Result<(), NnError> {
        self.backward_impl(trace, upstream, grads, None)
    }

    /// Full gradients: parameters plus inputs (observations and encodings).
    pub fn backward(&self, trace: &CriticTrace, upstream: f64) -> Result<CriticGradients, NnError> {
        let mut params = self.params.zeros_like();
        let mut d_inputs = vec![vec![0.0; self.cfg.input_dim()]; self.cfg.n_agents];
        self.backward_impl(trace, upstream, &mut params, Some(&mut d_inputs))?;
        let mut obs = Vec::with_capacity(self.cfg.n_agents);
        let mut enc = Vec::with_capacity(self.cfg.n_agents);
        for d in d_inputs {
            obs.push(d[..self.cfg.obs_dim].to_vec());
            enc.push(d[self.cfg.obs_dim..].to_vec());
        }
        Ok(CriticGradients { params, obs, enc })
    }

    fn backward_impl(
        &self,
        trace: &CriticTrace,
        upstream: f64,
        grads: &mut ParamVector,
        mut d_inputs: Option<&mut Vec<Vec<f64>>>,
    ) -> Result<(), NnError> {
        if grads.len() != self.params.len() {
            return Err(NnError::LengthMismatch {
                dst: grads.len(),
                src: self.params.len(),
            });
        }
        let n = self.cfg.n_agents;
        let h = self.cfg.hidden;
        let hh = self.cfg.head_hidden;
        let fused_len = n * h;
        let input_dim = self.cfg.input_dim();
        let data = self.params.as_slice();

        // Output unit: out = head_w2 . ah + head_b2.
        let mut dzh = vec![0.0; hh];
        {
            let g = grads.as_mut_slice();
            g[self.head_b2] += upstream;
            let w2 = &data[self.head_w2..self.head_w2 + hh];
            for i in 0..hh {
                g[self.head_w2 + i] += upstream * trace.ah[i];
                dzh[i] = upstream * w2[i] * relu_grad(trace.zh[i]);
            }
        }

        // Fusion layer.
        let mut dfused = vec![0.0; fused_len];
        {
            let g = grads.as_mut_slice();
            outer_acc(&mut g[self.head_w1..self.head_w1 + hh * fused_len], &dzh, &trace.fused);
            for (db, d) in g[self.head_b1..self.head_b1 + hh].iter_mut().zip(&dzh) {
                *db += d;
            }
        }
        matvec_t_acc(
            &data[self.head_w1..self.head_w1 + hh * fused_len],
            hh,
            fused_len,
            &dzh,
            &mut dfused,
        );

        let mut dz2 = vec![0.0; h];
        let mut da1 = vec![0.0; h];
        let mut dz1 = vec![0.0; h];
        for agent in 0..n {
            let off = self.offsets[self.extractor_of_agent[agent]];
            for i in 0..h {
                dz2[i] = dfused[agent * h + i] * relu_grad(trace.z2[agent][i]);
            }
            let g = grads.as_mut_slice();
            outer_acc(&mut g[off.w2..off.w2 + h * h], &dz2, &trace.a1[agent]);
            for (db, d) in g[off.b2..off.b2 + h].iter_mut().zip(&dz2) {
                *db += d;
            }
            da1.iter_mut().for_each(|x| *x = 0.0);
            matvec_t_acc(&data[off.w2..off.w2 + h * h], h, h, &dz2, &mut da1);
            for i in 0..h {
                dz1[i] = da1[i] * relu_grad(trace.z1[agent][i]);
            }
            let g = grads.as_mut_slice();
            outer_acc(&mut g[off.w1..off.w1 + h * input_dim], &dz1, &trace.inputs[agent]);
            for (db, d) in g[off.b1..off.b1 + h].iter_mut().zip(&dz1) {
                *db += d;
            }
            if let Some(d_inputs) = d_inputs.as_deref_mut() {
                matvec_t_acc(
                    &data[off.w1..off.w1 + h * input_dim],
                    h,
                    input_dim,
                    &dz1,
                    &mut d_inputs[agent],
                );
            }
        }
        Ok(())
    }
}
