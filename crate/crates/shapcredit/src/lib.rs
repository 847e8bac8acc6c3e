//! Cooperative multi-agent reinforcement learning with Shapley
//! counterfactual credit assignment.
//!
//! A central critic estimates the joint action value and is trained by
//! temporal-difference learning; per-agent credits are carved out of that
//! joint value by counterfactually masking coalition actions and averaging
//! the marginal contributions (exactly, or by Monte Carlo sampling), and the
//! recurrent local agents regress onto their credits. Training is
//! centralized, execution decentralized.
//!
//! The crate is organized around the pipeline:
//!
//! - [`game`] — coalitions, characteristic functions, exact and Monte Carlo
//!   Shapley values, axiom verification.
//! - [`env`] — the shared-reward environment contract plus the matrix game,
//!   the team gridworld, and the null-agent wrapper.
//! - [`nn`] — flat-parameter critic and recurrent agent networks with
//!   analytic gradients, and the adaptive optimizers.
//! - [`credit`] — the critic-backed counterfactual game and the credit
//!   strategies (exact Shapley, Monte Carlo Shapley, plain counterfactual,
//!   uniform).
//! - [`trainer`] — the two-stage loop: TD update of the critic, then credit
//!   regression of the agents, with replay buffer, target network, and
//!   epsilon-greedy exploration.
//! - [`config`], [`checkpoint`], [`harness`] — run configuration files,
//!   parameter checkpoints, and the train/audit/bench entry points behind
//!   the command-line binary.
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability.

pub mod checkpoint;
pub mod config;
pub mod credit;
pub mod env;
pub mod game;
pub mod harness;
pub mod nn;
pub mod trainer;
