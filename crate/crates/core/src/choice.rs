//! The acting agent's decision rule and the signal-independence (cascade)
//! predicate.

use rand::Rng;

use crate::belief::{acting_agent_posterior, JointBelief};
use crate::error::{CascadeError, Result};
use crate::model::{Action, ChoiceMode, ModelParams, Signal};
use crate::scalar::Scalar;

/// Mass of the count distribution strictly above, strictly below, and
/// exactly at the majority threshold `(k + i) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionWeights<T> {
    /// `p1 = P(C > t)`
    pub above: T,
    /// `p2 = P(C < t)`
    pub below: T,
    /// `p3 = P(C = t)`, zero whenever `k + i` is odd.
    pub at: T,
}

/// Argmax outcome of the deterministic rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Adopt,
    Reject,
    Tie,
}

impl<T: Scalar> DecisionWeights<T> {
    /// Splits `masses[c]` (the probability that the count is `c`) around the
    /// threshold, where the effective count is `c + offset` and the threshold
    /// is `total / 2`. Comparisons are done as `2·(c + offset)` vs `total`.
    ///
    /// Both tails are accumulated from the outside in, so a distribution
    /// symmetric about the threshold yields bit-identical `above` and
    /// `below`.
    pub fn from_count_masses(masses: &[T], offset: usize, total: usize) -> Self {
        let side = |c: usize| (2 * (c + offset)).cmp(&total);
        let mut below = T::zero();
        let mut above = T::zero();
        let mut at = T::zero();
        for (c, m) in masses.iter().enumerate() {
            match side(c) {
                std::cmp::Ordering::Less => below = below + m.clone(),
                std::cmp::Ordering::Equal => at = at + m.clone(),
                std::cmp::Ordering::Greater => break,
            }
        }
        for (c, m) in masses.iter().enumerate().rev() {
            if side(c) != std::cmp::Ordering::Greater {
                break;
            }
            above = above + m.clone();
        }
        DecisionWeights { above, below, at }
    }

    /// `p1 + p3/2`.
    pub fn adopt_probability(&self) -> T {
        self.above.clone() + self.at.clone() * T::half()
    }

    /// `p2 + p3/2`.
    pub fn reject_probability(&self) -> T {
        self.below.clone() + self.at.clone() * T::half()
    }

    pub fn verdict(&self) -> Verdict {
        if self.above > self.below {
            Verdict::Adopt
        } else if self.above < self.below {
            Verdict::Reject
        } else {
            Verdict::Tie
        }
    }

    pub fn mirror(&self) -> Self {
        DecisionWeights {
            above: self.below.clone(),
            below: self.above.clone(),
            at: self.at.clone(),
        }
    }
}

/// Threshold split of an acting agent's count distribution over `C_i`.
pub fn decision_weights<T: Scalar>(
    posterior: &JointBelief<T>,
    i: usize,
    params: &ModelParams<T>,
) -> Result<DecisionWeights<T>> {
    if posterior.j() != i {
        return Err(CascadeError::DimensionMismatch {
            expected: i,
            found: posterior.j(),
        });
    }
    Ok(DecisionWeights::from_count_masses(
        &posterior.count_marginal(),
        0,
        params.k() + i,
    ))
}

/// Turns weights into an action given one uniform draw `u ∈ [0, 1)`.
///
/// Deterministic mode consults `u` only on an exact tie (Adopt iff
/// `u < 0.5`); weighted mode adopts iff `u < p1 + p3/2`.
pub fn decide_with_draw<T: Scalar>(w: &DecisionWeights<T>, mode: ChoiceMode, u: f64) -> Action {
    let coin = |threshold: f64| {
        if u < threshold {
            Action::Adopt
        } else {
            Action::Reject
        }
    };
    match mode {
        ChoiceMode::Deterministic => match w.verdict() {
            Verdict::Adopt => Action::Adopt,
            Verdict::Reject => Action::Reject,
            Verdict::Tie => coin(0.5),
        },
        ChoiceMode::WeightedRandom => coin(w.adopt_probability().approx()),
    }
}

/// Draws exactly one uniform from `rng` and decides.
pub fn decide<T: Scalar, R: Rng + ?Sized>(
    w: &DecisionWeights<T>,
    mode: ChoiceMode,
    rng: &mut R,
) -> Action {
    let u: f64 = rng.random();
    decide_with_draw(w, mode, u)
}

/// Deterministic verdict agent `i` would reach with private signal `own`.
pub fn verdict_for_signal<T: Scalar>(
    public: &JointBelief<T>,
    own: Signal,
    i: usize,
    params: &ModelParams<T>,
) -> Result<Verdict> {
    let post = acting_agent_posterior(public, own, params)?;
    Ok(decision_weights(&post, i, params)?.verdict())
}

/// Whether agent `i`'s deterministic decision ignores its private signal:
/// both signals lead to the same non-tied verdict.
pub fn decision_is_signal_independent<T: Scalar>(
    public: &JointBelief<T>,
    i: usize,
    params: &ModelParams<T>,
) -> Result<bool> {
    if i == 0 || public.j() != i - 1 {
        return Err(CascadeError::DimensionMismatch {
            expected: i.saturating_sub(1),
            found: public.j(),
        });
    }
    let high = verdict_for_signal(public, Signal::High, i, params)?;
    let low = verdict_for_signal(public, Signal::Low, i, params)?;
    Ok(high == low && high != Verdict::Tie)
}
