//! Hand-rolled differentiable approximators: the grouped central critic, the
//! recurrent local agent, flat parameter vectors, and adaptive optimizers.
//!
//! Everything runs in f64 with analytic gradients; the gradient contract is
//! agreement with central finite differences, exercised in the tests.

mod agent;
mod critic;
mod optim;
mod params;

pub use agent::{AgentConfig, AgentNet, AgentUnroll, HiddenState};
pub use critic::{CriticConfig, CriticGradients, CriticNet, CriticTrace};
pub use optim::{Optimizer, OptimizerKind};
pub use params::{copy_params, NnError, ParamVector, Segment};

/// y += W x, with W stored row-major as rows x cols.
pub(crate) fn matvec_acc(w: &[f64], rows: usize, cols: usize, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(y.len(), rows);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        y[r] += acc;
    }
}

/// dx += W^T dy.
pub(crate) fn matvec_t_acc(w: &[f64], rows: usize, cols: usize, dy: &[f64], dx: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(dy.len(), rows);
    debug_assert_eq!(dx.len(), cols);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let g = dy[r];
        if g == 0.0 {
            continue;
        }
        for (dxi, wi) in dx.iter_mut().zip(row) {
            *dxi += g * wi;
        }
    }
}

/// dW += dy (outer) x, accumulated into the row-major layout.
pub(crate) fn outer_acc(dw: &mut [f64], dy: &[f64], x: &[f64]) {
    debug_assert_eq!(dw.len(), dy.len() * x.len());
    let cols = x.len();
    for (r, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let row = &mut dw[r * cols..(r + 1) * cols];
        for (dwi, xi) in row.iter_mut().zip(x) {
            *dwi += g * xi;
        }
    }
}

pub(crate) fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub(crate) fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Uniform Glorot-style init bound for a dense layer.
pub(crate) fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
