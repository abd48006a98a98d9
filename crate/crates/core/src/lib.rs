//! Exact discrete Bayesian inference and Monte Carlo simulation of
//! information cascades in sequential decision-making.
//!
//! Agents act one after another, each seeing every earlier action and one
//! noisy private signal about a binary true value. The library maintains
//! the exact shared public belief over the true value and the hidden count
//! of High signals (including `k` unobserved prior agents), lets each agent
//! decide by a count-majority rule, and runs parameter sweeps over many
//! seeded chains.
//!
//! All belief arithmetic is generic over [`Scalar`]; the aliases below fix
//! it to `f64`, which is what the simulator and the experiment harness use.

pub mod baseline;
pub mod belief;
pub mod choice;
pub mod error;
pub mod experiments;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod validate;

pub use belief::{
    acting_agent_posterior, infer_signal_posterior, make_prior, observe,
    observer_action_likelihood, public_belief_after, update_public_belief, ActionLikelihood,
};
pub use choice::{decide, decision_is_signal_independent, decision_weights, Verdict};
pub use error::{CascadeError, Result};
pub use model::{Action, ChoiceMode, ObserverModel, Signal, TrueValue};
pub use scalar::Scalar;
pub use sim::{detect_cascade, run_once, CascadeKind, CascadeStats, DEFAULT_WINDOW};

pub type JointBelief = belief::JointBelief<f64>;
pub type SignalPosterior = belief::SignalPosterior<f64>;
pub type DecisionWeights = choice::DecisionWeights<f64>;
pub type ModelParams = model::ModelParams<f64>;
pub type RunRecord = sim::RunRecord<f64>;
