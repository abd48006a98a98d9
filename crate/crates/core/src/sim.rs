//! Generative environment and the single-chain simulation loop.

use crate::belief::{acting_agent_posterior, make_prior, observe, JointBelief};
use crate::choice::{decide_with_draw, decision_is_signal_independent, decision_weights};
use crate::error::{CascadeError, Result};
use crate::model::{Action, ChoiceMode, ModelParams, Signal, TrueValue};
use crate::rng::{run_rng, DrawSource};
use crate::scalar::Scalar;

/// Default length of the terminal identical-action window.
pub const DEFAULT_WINDOW: usize = 20;

/// Signal from one uniform draw `u`: the signal is correct iff `u < p`.
///
/// Correct means High under `V1` and Low under `V0`, so identical draws
/// produce mirrored signals under mirrored true values.
pub fn sample_signal_with_draw(v: TrueValue, p: f64, u: f64) -> Signal {
    let correct = u < p;
    match (v, correct) {
        (TrueValue::V1, true) | (TrueValue::V0, false) => Signal::High,
        _ => Signal::Low,
    }
}

/// Draws one private signal: High with probability `p` under `V1` and
/// `1 − p` under `V0`.
pub fn sample_signal<D: DrawSource + ?Sized>(v: TrueValue, p: f64, rng: &mut D) -> Signal {
    sample_signal_with_draw(v, p, rng.signal_draw())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentEntry {
    pub signal: Signal,
    pub action: Action,
    /// Adopts among agents `1..=i`.
    pub cum_adopt: u32,
    pub cum_reject: u32,
}

/// One simulated chain of agents.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<T> {
    pub params: ModelParams<T>,
    pub v_true: TrueValue,
    pub seed: u64,
    pub entries: Vec<AgentEntry>,
}

impl<T: Scalar> RunRecord<T> {
    pub fn n_agents(&self) -> usize {
        self.entries.len()
    }

    pub fn actions(&self) -> Vec<Action> {
        self.entries.iter().map(|e| e.action).collect()
    }
}

/// Appends entries with running counts.
#[derive(Debug, Default)]
pub(crate) struct Tally {
    adopts: u32,
    rejects: u32,
}

impl Tally {
    pub(crate) fn push(&mut self, signal: Signal, action: Action) -> AgentEntry {
        match action {
            Action::Adopt => self.adopts += 1,
            Action::Reject => self.rejects += 1,
        }
        AgentEntry {
            signal,
            action,
            cum_adopt: self.adopts,
            cum_reject: self.rejects,
        }
    }
}

/// Simulates `n_agents` agents acting in sequence under one shared public
/// belief. Pure function of its arguments.
pub fn run_once<T: Scalar>(
    params: &ModelParams<T>,
    v_true: TrueValue,
    n_agents: usize,
    seed: u64,
) -> Result<RunRecord<T>> {
    let mut rng = run_rng(seed);
    run_with_draws(params, v_true, n_agents, seed, &mut rng)
}

/// [`run_once`] with an explicit draw source; `seed` is only recorded.
pub fn run_with_draws<T: Scalar, D: DrawSource + ?Sized>(
    params: &ModelParams<T>,
    v_true: TrueValue,
    n_agents: usize,
    seed: u64,
    draws: &mut D,
) -> Result<RunRecord<T>> {
    if n_agents == 0 {
        return Err(CascadeError::InvalidParams(
            "n_agents must be positive".into(),
        ));
    }
    let p = params.p().approx();
    let mut public = make_prior(params);
    let mut tally = Tally::default();
    let mut entries = Vec::with_capacity(n_agents);
    for i in 1..=n_agents {
        let signal = sample_signal(v_true, p, draws);
        let u = draws.choice_draw();
        let posterior = acting_agent_posterior(&public, signal, params)?;
        let weights = decision_weights(&posterior, i, params)?;
        let action = decide_with_draw(&weights, params.mode(), u);
        entries.push(tally.push(signal, action));
        public = observe(&public, action, params)?;
    }
    Ok(RunRecord {
        params: params.clone(),
        v_true,
        seed,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CascadeKind {
    Correct,
    Incorrect,
    None,
}

impl CascadeKind {
    pub fn name(self) -> &'static str {
        match self {
            CascadeKind::Correct => "correct",
            CascadeKind::Incorrect => "incorrect",
            CascadeKind::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CascadeStats {
    pub kind: CascadeKind,
    /// First agent index (1-based) from which the decision stays independent
    /// of the private signal through the end of the run. Deterministic mode
    /// only.
    pub onset_predicate: Option<usize>,
    /// Start (1-based) of the terminal run of identical actions, when that
    /// run is at least the window length.
    pub onset_window: Option<usize>,
}

/// Start (1-based) and action of the terminal run of identical actions.
pub fn terminal_run(actions: &[Action]) -> Option<(usize, Action)> {
    let last = *actions.last()?;
    let len = actions.iter().rev().take_while(|&&a| a == last).count();
    Some((actions.len() - len + 1, last))
}

/// Window classification shared by the Bayesian and counting models.
pub(crate) fn classify_window(
    actions: &[Action],
    v_true: TrueValue,
    window: usize,
) -> Result<(CascadeKind, Option<usize>)> {
    if window == 0 || window > actions.len() {
        return Err(CascadeError::InvalidParams(format!(
            "window {window} must lie in 1..={}",
            actions.len()
        )));
    }
    let (start, action) = terminal_run(actions).expect("non-empty");
    if actions.len() - start + 1 < window {
        return Ok((CascadeKind::None, None));
    }
    let kind = if action == Action::matching(v_true) {
        CascadeKind::Correct
    } else {
        CascadeKind::Incorrect
    };
    Ok((kind, Some(start)))
}

/// First index of the all-true suffix of `flags` (1-based).
pub(crate) fn stable_onset(flags: &[bool]) -> Option<usize> {
    let tail = flags.iter().rev().take_while(|&&f| f).count();
    (tail > 0).then(|| flags.len() - tail + 1)
}

/// Signal-independence flag for every agent, replayed from the recorded
/// action prefix.
pub fn predicate_flags<T: Scalar>(
    params: &ModelParams<T>,
    actions: &[Action],
) -> Result<Vec<bool>> {
    let mut public: JointBelief<T> = make_prior(params);
    let mut flags = Vec::with_capacity(actions.len());
    for (idx, &action) in actions.iter().enumerate() {
        flags.push(decision_is_signal_independent(&public, idx + 1, params)?);
        public = observe(&public, action, params)?;
    }
    Ok(flags)
}

/// Cascade statistics of an action sequence.
pub fn detect_cascade_in<T: Scalar>(
    params: &ModelParams<T>,
    v_true: TrueValue,
    actions: &[Action],
    window: usize,
) -> Result<CascadeStats> {
    let (kind, onset_window) = classify_window(actions, v_true, window)?;
    let onset_predicate = match params.mode() {
        ChoiceMode::Deterministic => stable_onset(&predicate_flags(params, actions)?),
        ChoiceMode::WeightedRandom => None,
    };
    Ok(CascadeStats {
        kind,
        onset_predicate,
        onset_window,
    })
}

pub fn detect_cascade<T: Scalar>(record: &RunRecord<T>, window: usize) -> Result<CascadeStats> {
    detect_cascade_in(&record.params, record.v_true, &record.actions(), window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::public_belief_after;
    use crate::model::ChoiceMode::{Deterministic, WeightedRandom};
    use crate::model::ObserverModel;
    use crate::rng::run_rng;

    fn params(p: f64, k: usize, mode: ChoiceMode) -> ModelParams<f64> {
        ModelParams::new(p, k, mode).unwrap()
    }

    fn high_frequency(v: TrueValue, p: f64) -> f64 {
        let mut rng = run_rng(3);
        let n = 10_000;
        (0..n)
            .filter(|_| sample_signal(v, p, &mut rng) == Signal::High)
            .count() as f64
            / n as f64
    }

    #[test]
    fn signal_frequencies_follow_accuracy() {
        let sigma = |p: f64| 3.0 * (p * (1.0 - p) / 10_000.0).sqrt();
        let f = high_frequency(TrueValue::V1, 0.8);
        assert!((f - 0.8).abs() <= sigma(0.8), "{f}");
        let f = high_frequency(TrueValue::V0, 0.8);
        assert!((f - 0.2).abs() <= sigma(0.2), "{f}");
        let f = high_frequency(TrueValue::V1, 0.5);
        assert!((f - 0.5).abs() <= sigma(0.5), "{f}");
    }

    #[test]
    fn perfect_signals_make_everyone_adopt() {
        for k in [0, 1, 5, 20] {
            let r = run_once(&params(1.0, k, Deterministic), TrueValue::V1, 50, 11).unwrap();
            assert!(r.entries.iter().all(|e| e.action == Action::Adopt), "k={k}");
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let m = params(0.7, 3, WeightedRandom);
        let a = run_once(&m, TrueValue::V0, 100, 42).unwrap();
        let b = run_once(&m, TrueValue::V0, 100, 42).unwrap();
        assert_eq!(a, b);
        let c = run_once(&m, TrueValue::V0, 100, 43).unwrap();
        assert_ne!(a.entries, c.entries);
    }

    #[test]
    fn counts_are_conserved() {
        let r = run_once(&params(0.6, 2, WeightedRandom), TrueValue::V1, 80, 5).unwrap();
        for (i, e) in r.entries.iter().enumerate() {
            assert_eq!((e.cum_adopt + e.cum_reject) as usize, i + 1);
        }
    }

    #[test]
    fn zero_agents_rejected() {
        assert!(run_once(&params(0.6, 2, Deterministic), TrueValue::V1, 0, 5).is_err());
    }

    #[test]
    fn signal_streams_shared_across_modes() {
        let det = run_once(&params(0.7, 4, Deterministic), TrueValue::V1, 60, 9).unwrap();
        let rnd = run_once(&params(0.7, 4, WeightedRandom), TrueValue::V1, 60, 9).unwrap();
        let sig = |r: &RunRecord<f64>| r.entries.iter().map(|e| e.signal).collect::<Vec<_>>();
        assert_eq!(sig(&det), sig(&rnd));
    }

    #[test]
    fn all_adopt_is_a_correct_cascade_from_the_start() {
        let m = params(0.8, 1, Deterministic);
        let acts = vec![Action::Adopt; 100];
        let s = detect_cascade_in(&m, TrueValue::V1, &acts, 20).unwrap();
        assert_eq!(s.kind, CascadeKind::Correct);
        assert_eq!(s.onset_window, Some(1));
        let s = detect_cascade_in(&m, TrueValue::V0, &acts, 20).unwrap();
        assert_eq!(s.kind, CascadeKind::Incorrect);
    }

    #[test]
    fn alternating_actions_have_no_cascade() {
        let m = params(0.8, 1, WeightedRandom);
        let acts: Vec<Action> = (0..100)
            .map(|i| {
                if i % 2 == 0 {
                    Action::Adopt
                } else {
                    Action::Reject
                }
            })
            .collect();
        let s = detect_cascade_in(&m, TrueValue::V1, &acts, 20).unwrap();
        assert_eq!(s.kind, CascadeKind::None);
        assert_eq!(s.onset_window, None);
        assert_eq!(s.onset_predicate, None);
    }

    #[test]
    fn window_bounds_checked() {
        let m = params(0.8, 1, Deterministic);
        let acts = vec![Action::Adopt; 5];
        assert!(detect_cascade_in(&m, TrueValue::V1, &acts, 0).is_err());
        assert!(detect_cascade_in(&m, TrueValue::V1, &acts, 6).is_err());
        assert!(detect_cascade_in(&m, TrueValue::V1, &acts, 5).is_ok());
    }

    #[test]
    fn stable_onset_needs_an_all_true_suffix() {
        assert_eq!(stable_onset(&[false, true, false, true, true]), Some(4));
        assert_eq!(stable_onset(&[true, true]), Some(1));
        assert_eq!(stable_onset(&[true, false]), None);
        assert_eq!(stable_onset(&[]), None);
    }

    #[test]
    fn predicate_onset_for_two_adopts() {
        let m = params(0.8, 1, Deterministic);
        let mut acts = vec![Action::Adopt; 10];
        let flags = predicate_flags(&m, &acts).unwrap();
        assert!(!flags[0] && !flags[1] && flags[2]);
        // After two rejections an adoption would be impossible.
        acts[0] = Action::Reject;
        acts[1] = Action::Reject;
        assert!(predicate_flags(&m, &acts).is_err());
        let flags = predicate_flags(&m, &[Action::Reject; 10]).unwrap();
        assert!(!flags[1] && flags[2..].iter().all(|&f| f));
    }

    #[test]
    fn literal_observer_hits_impossible_observations() {
        // The unconditioned observer table can rule out what the acting rule
        // does; the simulator surfaces that as an error instead of NaNs.
        let m = params(0.8, 1, Deterministic).with_observer(ObserverModel::Marginal);
        let failures = (0..50)
            .filter(|&s| {
                matches!(
                    run_once(&m, TrueValue::V1, 100, s),
                    Err(CascadeError::ImpossibleObservation { .. })
                )
            })
            .count();
        assert!(failures > 0);
    }

    #[test]
    fn shared_belief_matches_recomputation() {
        let m = params(0.7, 5, WeightedRandom);
        let r = run_once(&m, TrueValue::V1, 40, 77).unwrap();
        let acts = r.actions();
        let mut incremental = make_prior(&m);
        for (i, &a) in acts.iter().enumerate() {
            incremental = observe(&incremental, a, &m).unwrap();
            if i % 7 == 3 {
                let scratch = public_belief_after(&m, &acts[..=i]).unwrap();
                assert!(incremental.max_abs_diff(&scratch) <= 1e-10);
            }
        }
    }
}
