//! Exact discrete Bayesian machinery over the joint of the true value `V` and
//! the running count `C` of High signals (including the `k` unobserved prior
//! agents).
//!
//! The public belief is the distribution every observer shares after seeing
//! the same action sequence. It starts from [`make_prior`] and advances one
//! action at a time through [`infer_signal_posterior`] followed by
//! [`update_public_belief`]. An agent about to act folds in its own signal
//! with [`acting_agent_posterior`].

use crate::choice::DecisionWeights;
use crate::error::{CascadeError, Result};
use crate::model::{Action, ChoiceMode, ModelParams, ObserverModel, Signal, TrueValue};
use crate::scalar::{binomial_row, powu, Scalar};

/// Joint distribution over `(V, C)` with `C` ranging over `0..=k + j`.
///
/// Cells are stored row-major: the `V0` row followed by the `V1` row.
#[derive(Debug, Clone, PartialEq)]
pub struct JointBelief<T> {
    k: usize,
    j: usize,
    cells: Vec<T>,
}

impl<T: Scalar> JointBelief<T> {
    /// Builds a belief from explicit rows, normalizing them.
    ///
    /// Both rows must have length `k + j + 1`, be non-negative and carry
    /// positive total mass.
    pub fn from_rows(k: usize, j: usize, v0: Vec<T>, v1: Vec<T>) -> Result<Self> {
        let width = k + j + 1;
        if v0.len() != width || v1.len() != width {
            return Err(CascadeError::InvalidParams(format!(
                "belief rows must have length {width}, got {} and {}",
                v0.len(),
                v1.len()
            )));
        }
        if v0
            .iter()
            .chain(v1.iter())
            .any(|x| x.partial_cmp(&T::zero()).is_none_or(|o| o.is_lt()))
        {
            return Err(CascadeError::InvalidParams(
                "belief cells must be non-negative".into(),
            ));
        }
        let mut cells = v0;
        cells.extend(v1);
        let belief = JointBelief { k, j, cells };
        belief
            .normalized()
            .ok_or(CascadeError::InconsistentEvidence)
    }

    /// Packages rows that are already a probability table, without
    /// rescaling them. Mass must be within `1e-9` of one.
    pub fn from_normalized_rows(k: usize, j: usize, v0: Vec<T>, v1: Vec<T>) -> Result<Self> {
        let width = k + j + 1;
        if v0.len() != width || v1.len() != width {
            return Err(CascadeError::InvalidParams(format!(
                "belief rows must have length {width}, got {} and {}",
                v0.len(),
                v1.len()
            )));
        }
        let mut cells = v0;
        cells.extend(v1);
        let belief = JointBelief { k, j, cells };
        if !belief.check_invariants(1e-9) {
            return Err(CascadeError::InvalidParams(
                "rows are not a normalized probability table".into(),
            ));
        }
        Ok(belief)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of agents, beyond the `k` prior ones, whose signals the count
    /// dimension covers.
    pub fn j(&self) -> usize {
        self.j
    }

    /// Largest representable count, `k + j`.
    pub fn max_count(&self) -> usize {
        self.k + self.j
    }

    /// Size of the count dimension, `k + j + 1`.
    pub fn width(&self) -> usize {
        self.k + self.j + 1
    }

    pub fn row(&self, v: TrueValue) -> &[T] {
        let w = self.width();
        &self.cells[v.index() * w..(v.index() + 1) * w]
    }

    pub fn get(&self, v: TrueValue, c: usize) -> &T {
        &self.row(v)[c]
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    /// Total mass, summed as `Σ_c [cell(V1, c) + cell(V0, n - c)]` so the
    /// result is bit-identical for a belief and its mirror image.
    pub fn total_mass(&self) -> T {
        let n = self.max_count();
        let (v0, v1) = (self.row(TrueValue::V0), self.row(TrueValue::V1));
        (0..=n).fold(T::zero(), |acc, c| {
            acc + (v1[c].clone() + v0[n - c].clone())
        })
    }

    /// `[P(V=0), P(V=1)]`.
    pub fn v_marginal(&self) -> [T; 2] {
        let sum = |row: &[T]| row.iter().cloned().fold(T::zero(), |a, b| a + b);
        [sum(self.row(TrueValue::V0)), sum(self.row(TrueValue::V1))]
    }

    /// `P(C = c)` for every `c`.
    pub fn count_marginal(&self) -> Vec<T> {
        self.row(TrueValue::V0)
            .iter()
            .zip(self.row(TrueValue::V1))
            .map(|(a, b)| a.clone() + b.clone())
            .collect()
    }

    /// Relabels `V0↔V1` and `c↔(k+j−c)`.
    pub fn mirror(&self) -> Self {
        let flip = |row: &[T]| row.iter().rev().cloned().collect::<Vec<_>>();
        let mut cells = flip(self.row(TrueValue::V1));
        cells.extend(flip(self.row(TrueValue::V0)));
        JointBelief {
            k: self.k,
            j: self.j,
            cells,
        }
    }

    /// Largest absolute per-cell difference (as `f64`). Infinite when the
    /// shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.k != other.k || self.j != other.j {
            return f64::INFINITY;
        }
        self.cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| (a.approx() - b.approx()).abs())
            .fold(0.0, f64::max)
    }

    /// Checks the representation invariants within `tol`.
    pub fn check_invariants(&self, tol: f64) -> bool {
        self.cells.len() == 2 * self.width()
            && self.cells.iter().all(|x| *x >= T::zero())
            && (self.total_mass().approx() - 1.0).abs() <= tol
    }

    fn normalized(mut self) -> Option<Self> {
        let z = self.total_mass();
        if z.is_zero() {
            return None;
        }
        if !z.is_one() {
            for x in &mut self.cells {
                *x = x.clone() / z.clone();
            }
        }
        Some(self)
    }

    fn expect_actions(&self, incorporated: usize) -> Result<()> {
        if self.j != incorporated {
            return Err(CascadeError::DimensionMismatch {
                expected: incorporated,
                found: self.j,
            });
        }
        Ok(())
    }
}

/// `P(X_j = High)` and `P(X_j = Low)` given the actions seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalPosterior<T> {
    pub high: T,
    pub low: T,
}

impl<T: Scalar> SignalPosterior<T> {
    pub fn mirror(&self) -> Self {
        SignalPosterior {
            high: self.low.clone(),
            low: self.high.clone(),
        }
    }
}

/// `P(A_j = Adopt | X_j, history)` and `P(A_j = Reject | X_j, history)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionLikelihood<T> {
    pub adopt: T,
    pub reject: T,
}

impl<T: Scalar> ActionLikelihood<T> {
    pub fn of(&self, action: Action) -> &T {
        match action {
            Action::Adopt => &self.adopt,
            Action::Reject => &self.reject,
        }
    }

    fn from_weights(w: &DecisionWeights<T>, mode: ChoiceMode) -> Self {
        match mode {
            ChoiceMode::Deterministic => {
                let (adopt, reject) = if w.above > w.below {
                    (T::one(), T::zero())
                } else if w.above < w.below {
                    (T::zero(), T::one())
                } else {
                    (T::half(), T::half())
                };
                ActionLikelihood { adopt, reject }
            }
            ChoiceMode::WeightedRandom => ActionLikelihood {
                adopt: w.adopt_probability(),
                reject: w.reject_probability(),
            },
        }
    }
}

/// Public belief before any action: uniform over `V`, and `C_0 | V`
/// binomial over the `k` prior agents with success probability `p` under
/// `V = 1` and `1 − p` under `V = 0`.
pub fn make_prior<T: Scalar>(params: &ModelParams<T>) -> JointBelief<T> {
    let k = params.k();
    let (p, q) = (params.p().clone(), params.q());
    let coef = binomial_row::<T>(k);
    let half = T::half();
    let v1: Vec<T> = (0..=k)
        .map(|c| half.clone() * coef[c].clone() * powu(&p, c) * powu(&q, k - c))
        .collect();
    // The V0 row is the V1 row reversed, which keeps the prior exactly
    // mirror-symmetric in floating point.
    let v0: Vec<T> = v1.iter().rev().cloned().collect();
    let mut cells = v0;
    cells.extend(v1);
    JointBelief { k, j: 0, cells }
        .normalized()
        .expect("binomial prior has positive mass")
}

/// How likely an observer finds each action from agent `j` had its private
/// signal been `signal`, given the public belief over the first `j − 1`
/// actions.
///
/// The count threshold `(k + j) / 2` is compared in integers as
/// `2·count` against `k + j`.
pub fn observer_action_likelihood<T: Scalar>(
    belief: &JointBelief<T>,
    signal: Signal,
    j: usize,
    params: &ModelParams<T>,
) -> Result<ActionLikelihood<T>> {
    if j == 0 {
        return Err(CascadeError::DimensionMismatch {
            expected: 0,
            found: belief.j(),
        });
    }
    belief.expect_actions(j - 1)?;
    let total = params.k() + j;
    let weights = match params.observer() {
        ObserverModel::Marginal => {
            let offset = usize::from(signal == Signal::High);
            DecisionWeights::from_count_masses(&belief.count_marginal(), offset, total)
        }
        ObserverModel::SignalConditioned => match acting_agent_posterior(belief, signal, params) {
            Ok(post) => DecisionWeights::from_count_masses(&post.count_marginal(), 0, total),
            // The signal itself has probability zero; its row of the
            // likelihood never carries weight.
            Err(CascadeError::InconsistentEvidence) => {
                return Ok(ActionLikelihood {
                    adopt: T::half(),
                    reject: T::half(),
                })
            }
            Err(e) => return Err(e),
        },
    };
    Ok(ActionLikelihood::from_weights(&weights, params.mode()))
}

/// Posterior over agent `j`'s private signal after seeing its action.
///
/// The signal prior comes from the public `V` marginal and the signal
/// accuracy; the likelihood from [`observer_action_likelihood`].
pub fn infer_signal_posterior<T: Scalar>(
    belief: &JointBelief<T>,
    observed: Action,
    j: usize,
    params: &ModelParams<T>,
) -> Result<SignalPosterior<T>> {
    let [pv0, pv1] = belief.v_marginal();
    let p = params.p().clone();
    let q = params.q();
    let prior_high = pv1.clone() * p.clone() + pv0.clone() * q.clone();
    let prior_low = pv0 * p + pv1 * q;

    let lik_high = observer_action_likelihood(belief, Signal::High, j, params)?;
    let lik_low = observer_action_likelihood(belief, Signal::Low, j, params)?;
    let high = prior_high * lik_high.of(observed).clone();
    let low = prior_low * lik_low.of(observed).clone();
    let z = high.clone() + low.clone();
    if z.is_zero() {
        return Err(CascadeError::ImpossibleObservation {
            index: j,
            action: observed,
        });
    }
    Ok(SignalPosterior {
        high: high / z.clone(),
        low: low / z,
    })
}

/// Advances the public belief by one observed action:
/// `new(v, c) = old(v, c)·P(Low) + old(v, c−1)·P(High)`.
pub fn update_public_belief<T: Scalar>(
    belief: &JointBelief<T>,
    sp: &SignalPosterior<T>,
) -> JointBelief<T> {
    let width = belief.width() + 1;
    let mut cells = Vec::with_capacity(2 * width);
    for v in TrueValue::ALL {
        let old = belief.row(v);
        for c in 0..width {
            let stay = old.get(c).map_or(T::zero(), |x| x.clone() * sp.low.clone());
            let moved = if c == 0 {
                T::zero()
            } else {
                old[c - 1].clone() * sp.high.clone()
            };
            cells.push(stay + moved);
        }
    }
    JointBelief {
        k: belief.k,
        j: belief.j + 1,
        cells,
    }
    .normalized()
    .expect("mixture of a normalized belief keeps positive mass")
}

/// Observes one action: signal inference followed by the public update.
pub fn observe<T: Scalar>(
    belief: &JointBelief<T>,
    action: Action,
    params: &ModelParams<T>,
) -> Result<JointBelief<T>> {
    let sp = infer_signal_posterior(belief, action, belief.j() + 1, params)?;
    Ok(update_public_belief(belief, &sp))
}

/// Public belief after an entire action sequence, recomputed from the prior.
pub fn public_belief_after<T: Scalar>(
    params: &ModelParams<T>,
    actions: &[Action],
) -> Result<JointBelief<T>> {
    actions
        .iter()
        .try_fold(make_prior(params), |b, &a| observe(&b, a, params))
}

/// The acting agent's joint over `(V, C_i)`: reweight by the likelihood of
/// its own signal, normalize, and shift the count by one for High.
pub fn acting_agent_posterior<T: Scalar>(
    belief: &JointBelief<T>,
    own: Signal,
    params: &ModelParams<T>,
) -> Result<JointBelief<T>> {
    let width = belief.width() + 1;
    let mut cells = Vec::with_capacity(2 * width);
    for v in TrueValue::ALL {
        let w = params.signal_likelihood(own, v);
        let scaled = belief.row(v).iter().map(|x| x.clone() * w.clone());
        match own {
            Signal::High => {
                cells.push(T::zero());
                cells.extend(scaled);
            }
            Signal::Low => {
                cells.extend(scaled);
                cells.push(T::zero());
            }
        }
    }
    JointBelief {
        k: belief.k,
        j: belief.j + 1,
        cells,
    }
    .normalized()
    .ok_or(CascadeError::InconsistentEvidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChoiceMode::{Deterministic, WeightedRandom};
    use num_rational::BigRational;

    fn params(p: f64, k: usize, mode: ChoiceMode) -> ModelParams<f64> {
        ModelParams::new(p, k, mode).unwrap()
    }

    fn literal(p: f64, k: usize, mode: ChoiceMode) -> ModelParams<f64> {
        params(p, k, mode).with_observer(ObserverModel::Marginal)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn prior_uniform_at_half() {
        let b = make_prior(&params(0.5, 1, Deterministic));
        assert!(b.cells().iter().all(|&x| close(x, 0.25)));
    }

    #[test]
    fn prior_cells_p08_k1() {
        let b = make_prior(&params(0.8, 1, Deterministic));
        assert!(close(*b.get(TrueValue::V1, 1), 0.40));
        assert!(close(*b.get(TrueValue::V1, 0), 0.10));
        assert!(close(*b.get(TrueValue::V0, 1), 0.10));
        assert!(close(*b.get(TrueValue::V0, 0), 0.40));
    }

    #[test]
    fn prior_includes_binomial_coefficient() {
        // Enumerate HH, HL, LH, LL under V=1 and keep the single-H outcomes.
        let (p, q) = (0.6, 0.4);
        let oracle: f64 = [(true, false), (false, true)]
            .iter()
            .map(|&(a, b)| (if a { p } else { q }) * (if b { p } else { q }))
            .sum();
        assert!(close(oracle, 0.48));
        let b = make_prior(&params(0.6, 2, Deterministic));
        let [_, pv1] = b.v_marginal();
        assert!(close(b.get(TrueValue::V1, 1) / pv1, oracle));
        assert!(close(b.total_mass(), 1.0));
    }

    #[test]
    fn prior_marginal_is_uniform_for_large_k() {
        for k in [0, 5, 20, 40] {
            let b = make_prior(&params(0.7, k, Deterministic));
            let [a, c] = b.v_marginal();
            assert!(close(a, 0.5) && close(c, 0.5), "k={k}");
            assert_eq!(b.width(), k + 1);
        }
    }

    #[test]
    fn literal_observer_table_examples() {
        let m = literal(0.8, 1, Deterministic);
        let b = make_prior(&m);
        let hi = observer_action_likelihood(&b, Signal::High, 1, &m).unwrap();
        assert_eq!((hi.adopt, hi.reject), (1.0, 0.0));
        let lo = observer_action_likelihood(&b, Signal::Low, 1, &m).unwrap();
        assert_eq!((lo.adopt, lo.reject), (0.0, 1.0));

        let m = literal(0.8, 1, WeightedRandom);
        let hi = observer_action_likelihood(&b, Signal::High, 1, &m).unwrap();
        assert!(close(hi.adopt, 0.75) && close(hi.reject, 0.25));
    }

    #[test]
    fn conditioned_observer_replays_the_actor() {
        let m = params(0.8, 1, WeightedRandom);
        let b = make_prior(&m);
        let hi = observer_action_likelihood(&b, Signal::High, 1, &m).unwrap();
        // Acting posterior with High: P(C_1=2)=0.68, P(C_1=1)=0.32 at t=1.
        assert!(close(hi.adopt, 0.68 + 0.16) && close(hi.reject, 0.16));
    }

    #[test]
    fn likelihood_rejects_wrong_index() {
        let m = params(0.8, 1, Deterministic);
        let b = make_prior(&m);
        assert!(matches!(
            observer_action_likelihood(&b, Signal::High, 2, &m),
            Err(CascadeError::DimensionMismatch { .. })
        ));
        assert!(observer_action_likelihood(&b, Signal::High, 0, &m).is_err());
    }

    #[test]
    fn signal_posterior_examples() {
        let m = literal(0.8, 1, Deterministic);
        let b = make_prior(&m);
        let sp = infer_signal_posterior(&b, Action::Adopt, 1, &m).unwrap();
        assert_eq!(sp.high, 1.0);

        let m = literal(0.8, 1, WeightedRandom);
        let sp = infer_signal_posterior(&b, Action::Adopt, 1, &m).unwrap();
        let oracle = 0.5 * 0.75 / (0.5 * 0.75 + 0.5 * 0.25);
        assert!(close(sp.high, oracle) && close(sp.high, 0.75));
        assert!(close(sp.high + sp.low, 1.0));
    }

    #[test]
    fn uninformative_likelihood_returns_signal_prior() {
        // Mass only at c = 0 and c = 2: both signal rows say Adopt.
        let m = literal(0.9, 2, Deterministic);
        let b = JointBelief::from_rows(2, 0, vec![0.1, 0.0, 0.2], vec![0.3, 0.0, 0.4]).unwrap();
        let hi = observer_action_likelihood(&b, Signal::High, 1, &m).unwrap();
        let lo = observer_action_likelihood(&b, Signal::Low, 1, &m).unwrap();
        assert_eq!(hi, lo);
        let sp = infer_signal_posterior(&b, Action::Adopt, 1, &m).unwrap();
        let [pv0, pv1] = b.v_marginal();
        assert!(close(sp.high, pv1 * 0.9 + pv0 * 0.1));
    }

    #[test]
    fn impossible_observation_is_reported() {
        let m = literal(0.8, 1, Deterministic);
        let b = make_prior(&m);
        // All mass at the top count: either signal clears the threshold.
        let m2 = literal(0.8, 2, Deterministic);
        let b2 = JointBelief::from_rows(2, 0, vec![0.0, 0.0, 0.5], vec![0.0, 0.0, 0.5]).unwrap();
        let err = infer_signal_posterior(&b2, Action::Reject, 1, &m2).unwrap_err();
        assert!(matches!(
            err,
            CascadeError::ImpossibleObservation { index: 1, .. }
        ));
        assert!(infer_signal_posterior(&b, Action::Reject, 1, &m).is_ok());
    }

    #[test]
    fn update_degenerate_weights() {
        let b = make_prior(&params(0.8, 1, Deterministic));
        let shifted = update_public_belief(
            &b,
            &SignalPosterior {
                high: 1.0,
                low: 0.0,
            },
        );
        let kept = update_public_belief(
            &b,
            &SignalPosterior {
                high: 0.0,
                low: 1.0,
            },
        );
        for v in TrueValue::ALL {
            assert_eq!(*shifted.get(v, 0), 0.0);
            assert_eq!(*kept.get(v, 2), 0.0);
            for c in 0..2 {
                assert_eq!(shifted.get(v, c + 1), b.get(v, c));
                assert_eq!(kept.get(v, c), b.get(v, c));
            }
        }
        assert_eq!(shifted.j(), 1);
        assert_eq!(shifted.width(), 3);
    }

    #[test]
    fn update_after_weighted_adopt() {
        let m = literal(0.8, 1, WeightedRandom);
        let b = make_prior(&m);
        let sp = infer_signal_posterior(&b, Action::Adopt, 1, &m).unwrap();
        let nb = update_public_belief(&b, &sp);
        assert!(close(*nb.get(TrueValue::V1, 2), 0.40 * 0.75));
        assert!(close(*nb.get(TrueValue::V1, 2), 0.30));
        assert!(nb.check_invariants(1e-12));
    }

    #[test]
    fn acting_posterior_examples() {
        let m = params(0.8, 1, Deterministic);
        let b = make_prior(&m);
        let post = acting_agent_posterior(&b, Signal::High, &m).unwrap();
        let [_, pv1] = post.v_marginal();
        assert!(close(pv1, 0.8));
        assert_eq!(*post.get(TrueValue::V0, 0), 0.0);
        assert_eq!(*post.get(TrueValue::V1, 0), 0.0);
        let cm = post.count_marginal();
        assert!(close(cm[2], 0.68) && close(cm[1], 0.32));

        let m = params(0.5, 3, Deterministic);
        let b = public_belief_after(&m, &[Action::Adopt, Action::Reject]).unwrap();
        let post = acting_agent_posterior(&b, Signal::Low, &m).unwrap();
        let (a, c) = (b.v_marginal(), post.v_marginal());
        assert!(close(a[1], c[1]));
    }

    #[test]
    fn acting_posterior_contradiction_at_p1() {
        let m = params(1.0, 1, Deterministic);
        let b = JointBelief::from_rows(1, 0, vec![0.0, 0.0], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            acting_agent_posterior(&b, Signal::Low, &m),
            Err(CascadeError::InconsistentEvidence)
        ));
        assert!(acting_agent_posterior(&b, Signal::High, &m).is_ok());
    }

    #[test]
    fn public_v_marginal_never_moves() {
        // The mixing weight in the public update does not depend on v, so
        // P(V) stays at its prior value whatever is observed.
        let m = params(0.8, 2, WeightedRandom);
        let acts = [Action::Adopt, Action::Adopt, Action::Reject, Action::Adopt];
        let b = public_belief_after(&m, &acts).unwrap();
        let [a, c] = b.v_marginal();
        assert!(close(a, 0.5) && close(c, 0.5));
    }

    #[test]
    fn from_rows_validates() {
        assert!(JointBelief::from_rows(1, 0, vec![0.5], vec![0.5, 0.0]).is_err());
        assert!(JointBelief::from_rows(1, 0, vec![-0.5, 0.5], vec![0.5, 0.5]).is_err());
        assert!(JointBelief::from_rows(1, 0, vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
        let b = JointBelief::from_rows(1, 0, vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(close(*b.get(TrueValue::V0, 0), 0.25));
    }

    #[test]
    fn mirror_is_an_involution() {
        let m = params(0.7, 3, Deterministic);
        let b = public_belief_after(&m, &[Action::Adopt, Action::Reject, Action::Adopt]).unwrap();
        assert_eq!(b.mirror().mirror(), b);
        assert_eq!(b.total_mass(), b.mirror().total_mass());
    }

    #[test]
    fn exact_rational_prior_and_update() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let m = ModelParams::new(r(4, 5), 1, WeightedRandom)
            .unwrap()
            .with_observer(ObserverModel::Marginal);
        let b = make_prior(&m);
        assert_eq!(*b.get(TrueValue::V1, 1), r(2, 5));
        let sp = infer_signal_posterior(&b, Action::Adopt, 1, &m).unwrap();
        assert_eq!(sp.high, r(3, 4));
        let nb = update_public_belief(&b, &sp);
        assert_eq!(*nb.get(TrueValue::V1, 2), r(3, 10));
        assert_eq!(nb.total_mass(), r(1, 1));
    }
}
