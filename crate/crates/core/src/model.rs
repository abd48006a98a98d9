//! Domain vocabulary shared by every module: signals, actions, the true
//! value, the choice rule, and validated model parameters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::scalar::Scalar;

/// An agent's private perception of the true value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Signal {
    High,
    Low,
}

impl Signal {
    pub const ALL: [Signal; 2] = [Signal::High, Signal::Low];

    pub fn flip(self) -> Self {
        match self {
            Signal::High => Signal::Low,
            Signal::Low => Signal::High,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Signal::High => 'H',
            Signal::Low => 'L',
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "H" => Some(Signal::High),
            "L" => Some(Signal::Low),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Adopt,
    Reject,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Adopt, Action::Reject];

    pub fn flip(self) -> Self {
        match self {
            Action::Adopt => Action::Reject,
            Action::Reject => Action::Adopt,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Action::Adopt => 'A',
            Action::Reject => 'R',
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "A" => Some(Action::Adopt),
            "R" => Some(Action::Reject),
            _ => None,
        }
    }

    /// The action that matches a true value (adopting is right iff V = 1).
    pub fn matching(v: TrueValue) -> Self {
        match v {
            TrueValue::V1 => Action::Adopt,
            TrueValue::V0 => Action::Reject,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Benefit of adopting: 0 or 1. Serialized as the bare number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum TrueValue {
    V0,
    V1,
}

impl TrueValue {
    pub const ALL: [TrueValue; 2] = [TrueValue::V0, TrueValue::V1];

    pub fn flip(self) -> Self {
        match self {
            TrueValue::V0 => TrueValue::V1,
            TrueValue::V1 => TrueValue::V0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            TrueValue::V0 => 0,
            TrueValue::V1 => 1,
        }
    }
}

impl TryFrom<u8> for TrueValue {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(TrueValue::V0),
            1 => Ok(TrueValue::V1),
            other => Err(format!("true value must be 0 or 1, got {other}")),
        }
    }
}

impl From<TrueValue> for u8 {
    fn from(v: TrueValue) -> u8 {
        v.index() as u8
    }
}

impl fmt::Display for TrueValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// How an agent turns its decision weights into an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChoiceMode {
    /// Pick the heavier side; fair coin on an exact tie.
    #[serde(rename = "det")]
    Deterministic,
    /// Adopt with probability `p1 + p3/2`.
    #[serde(rename = "rand")]
    WeightedRandom,
}

impl ChoiceMode {
    pub const ALL: [ChoiceMode; 2] = [ChoiceMode::Deterministic, ChoiceMode::WeightedRandom];

    pub fn name(self) -> &'static str {
        match self {
            ChoiceMode::Deterministic => "det",
            ChoiceMode::WeightedRandom => "rand",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "det" => Some(ChoiceMode::Deterministic),
            "rand" => Some(ChoiceMode::WeightedRandom),
            _ => None,
        }
    }
}

impl fmt::Display for ChoiceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which count distribution an observer uses when it evaluates how likely
/// an observed action was under each possible private signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ObserverModel {
    /// Threshold tests on the unconditioned public count marginal, with the
    /// candidate signal only adding its +1. Can assign zero probability to
    /// actions the acting rule actually produces.
    Marginal,
    /// Replays the acting agent's own rule: condition the public belief on
    /// the candidate signal, then apply the decision weights. Observed
    /// actions are never impossible under this model.
    #[default]
    SignalConditioned,
}

/// Validated parameters of one cascade model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    p: T,
    k: usize,
    mode: ChoiceMode,
    observer: ObserverModel,
}

impl<T: Scalar> ModelParams<T> {
    /// `p` is the signal accuracy in `[0.5, 1]`, `k` the number of
    /// unobserved prior agents.
    pub fn new(p: T, k: usize, mode: ChoiceMode) -> Result<Self> {
        if !(p >= T::half() && p <= T::one()) {
            return Err(CascadeError::InvalidParams(format!(
                "signal accuracy must lie in [0.5, 1], got {:?}",
                p
            )));
        }
        Ok(ModelParams {
            p,
            k,
            mode,
            observer: ObserverModel::default(),
        })
    }

    pub fn with_observer(mut self, observer: ObserverModel) -> Self {
        self.observer = observer;
        self
    }

    pub fn with_mode(mut self, mode: ChoiceMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn p(&self) -> &T {
        &self.p
    }

    /// `1 - p`.
    pub fn q(&self) -> T {
        T::one() - self.p.clone()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> ChoiceMode {
        self.mode
    }

    pub fn observer(&self) -> ObserverModel {
        self.observer
    }

    /// `P(X = signal | V = v)`.
    pub fn signal_likelihood(&self, signal: Signal, v: TrueValue) -> T {
        match (v, signal) {
            (TrueValue::V1, Signal::High) | (TrueValue::V0, Signal::Low) => self.p.clone(),
            _ => self.q(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_accuracy_outside_range() {
        assert!(ModelParams::new(0.49, 1, ChoiceMode::Deterministic).is_err());
        assert!(ModelParams::new(1.01, 1, ChoiceMode::Deterministic).is_err());
        assert!(ModelParams::new(f64::NAN, 1, ChoiceMode::Deterministic).is_err());
        assert!(ModelParams::new(0.5, 0, ChoiceMode::Deterministic).is_ok());
        assert!(ModelParams::new(1.0, 40, ChoiceMode::WeightedRandom).is_ok());
    }

    #[test]
    fn signal_table() {
        let m = ModelParams::<f64>::new(0.8, 1, ChoiceMode::Deterministic).unwrap();
        assert_eq!(m.signal_likelihood(Signal::High, TrueValue::V1), 0.8);
        assert!((m.signal_likelihood(Signal::High, TrueValue::V0) - 0.2).abs() < 1e-15);
        assert!((m.signal_likelihood(Signal::Low, TrueValue::V1) - 0.2).abs() < 1e-15);
        assert_eq!(m.signal_likelihood(Signal::Low, TrueValue::V0), 0.8);
    }

    #[test]
    fn serde_names() {
        assert_eq!(
            serde_json::to_string(&ChoiceMode::WeightedRandom).unwrap(),
            "\"rand\""
        );
        assert_eq!(serde_json::to_string(&TrueValue::V1).unwrap(), "1");
        assert!(serde_json::from_str::<TrueValue>("2").is_err());
    }

    #[test]
    fn signal_order_is_high_first() {
        assert!(Signal::High < Signal::Low);
    }
}
