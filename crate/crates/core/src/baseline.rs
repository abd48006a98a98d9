//! Counting model: each agent treats every earlier action as one vote,
//! adds one vote for its own signal, and follows the majority (fair coin on
//! a tie). Serves as the reference curve for correct/incorrect cascade
//! probabilities as a function of signal accuracy.

use rayon::prelude::*;

use crate::error::{CascadeError, Result};
use crate::model::{Action, Signal, TrueValue};
use crate::rng::{run_rng, run_seed, DrawSource};
use crate::sim::{
    classify_window, sample_signal, stable_onset, AgentEntry, CascadeKind, CascadeStats, Tally,
    DEFAULT_WINDOW,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRunRecord {
    pub v_true: TrueValue,
    pub seed: u64,
    pub entries: Vec<AgentEntry>,
    pub stats: CascadeStats,
}

impl BaselineRunRecord {
    pub fn actions(&self) -> Vec<Action> {
        self.entries.iter().map(|e| e.action).collect()
    }
}

/// Counting-model action for prior tallies and an own signal, given the
/// agent's choice draw `u` (used only on ties).
pub fn counting_choice(adopts: u32, rejects: u32, signal: Signal, u: f64) -> Action {
    let (a, r) = match signal {
        Signal::High => (adopts + 1, rejects),
        Signal::Low => (adopts, rejects + 1),
    };
    match a.cmp(&r) {
        std::cmp::Ordering::Greater => Action::Adopt,
        std::cmp::Ordering::Less => Action::Reject,
        std::cmp::Ordering::Equal if u < 0.5 => Action::Adopt,
        std::cmp::Ordering::Equal => Action::Reject,
    }
}

/// Counting-model chain with the same two-draws-per-agent protocol as the
/// Bayesian simulator.
pub fn run_basic_with_draws<D: DrawSource + ?Sized>(
    p: f64,
    v_true: TrueValue,
    n_agents: usize,
    seed: u64,
    window: usize,
    draws: &mut D,
) -> Result<BaselineRunRecord> {
    let mut tally = Tally::default();
    let mut entries: Vec<AgentEntry> = Vec::with_capacity(n_agents);
    let mut independent = Vec::with_capacity(n_agents);
    for _ in 0..n_agents {
        let signal = sample_signal(v_true, p, draws);
        let u = draws.choice_draw();
        let (adopts, rejects) = entries
            .last()
            .map_or((0, 0), |e| (e.cum_adopt, e.cum_reject));
        // Own vote cannot overturn a lead of two or more.
        independent.push(adopts.abs_diff(rejects) >= 2);
        let action = counting_choice(adopts, rejects, signal, u);
        entries.push(tally.push(signal, action));
    }
    let actions: Vec<Action> = entries.iter().map(|e| e.action).collect();
    let (kind, onset_window) = classify_window(&actions, v_true, window)?;
    Ok(BaselineRunRecord {
        v_true,
        seed,
        entries,
        stats: CascadeStats {
            kind,
            onset_predicate: stable_onset(&independent),
            onset_window,
        },
    })
}

/// One counting-model chain, classified with the default window.
pub fn run_basic_once(
    p: f64,
    v_true: TrueValue,
    n_agents: usize,
    seed: u64,
) -> Result<BaselineRunRecord> {
    let window = DEFAULT_WINDOW.min(n_agents.max(1));
    run_basic_with_draws(p, v_true, n_agents, seed, window, &mut run_rng(seed))
}

/// Monte Carlo estimates of the correct/incorrect/no cascade probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeProbabilities {
    pub p: f64,
    pub runs: usize,
    pub correct: f64,
    pub incorrect: f64,
    pub none: f64,
}

impl CascadeProbabilities {
    /// Binomial standard error of an estimated rate.
    pub fn std_error(&self, rate: f64) -> f64 {
        (rate * (1.0 - rate) / self.runs as f64).sqrt()
    }
}

/// Estimates cascade probabilities under `V = 1` over `runs` chains.
pub fn estimate_cascade_probabilities(
    p: f64,
    n_agents: usize,
    runs: usize,
    master_seed: u64,
) -> Result<CascadeProbabilities> {
    let mut counts = [0usize; 3];
    for r in 0..runs {
        let rec = run_basic_once(p, TrueValue::V1, n_agents, run_seed(master_seed, r as u64))?;
        counts[match rec.stats.kind {
            CascadeKind::Correct => 0,
            CascadeKind::Incorrect => 1,
            CascadeKind::None => 2,
        }] += 1;
    }
    let rate = |c: usize| c as f64 / runs.max(1) as f64;
    Ok(CascadeProbabilities {
        p,
        runs,
        correct: rate(counts[0]),
        incorrect: rate(counts[1]),
        none: rate(counts[2]),
    })
}

/// One estimate per accuracy, all sharing the same per-run seeds.
/// `workers <= 1` stays on the calling thread; the result never depends on it.
pub fn baseline_curve(
    p_values: &[f64],
    n_agents: usize,
    runs: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<CascadeProbabilities>> {
    if let Some(&bad) = p_values.iter().find(|p| !(0.5..=1.0).contains(*p)) {
        return Err(CascadeError::InvalidParams(format!(
            "p = {bad} outside [0.5, 1]"
        )));
    }
    let one = |&p: &f64| estimate_cascade_probabilities(p, n_agents, runs, master_seed);
    if workers <= 1 {
        return p_values.iter().map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CascadeError::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| p_values.par_iter().map(one).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_high_signals_all_adopt() {
        let mut t = Tally::default();
        let mut last = (0, 0);
        for _ in 0..10 {
            let a = counting_choice(last.0, last.1, Signal::High, 0.99);
            assert_eq!(a, Action::Adopt);
            let e = t.push(Signal::High, a);
            last = (e.cum_adopt, e.cum_reject);
        }
    }

    #[test]
    fn two_adopts_override_a_low_signal() {
        assert_eq!(counting_choice(2, 0, Signal::Low, 0.99), Action::Adopt);
    }

    #[test]
    fn one_adopt_and_low_is_a_coin() {
        assert_eq!(counting_choice(1, 0, Signal::Low, 0.2), Action::Adopt);
        assert_eq!(counting_choice(1, 0, Signal::Low, 0.7), Action::Reject);
    }

    #[test]
    fn perfect_signals_give_correct_cascades() {
        let est = estimate_cascade_probabilities(1.0, 100, 200, 1).unwrap();
        assert_eq!(est.correct, 1.0);
    }

    #[test]
    fn rates_sum_to_one() {
        let est = estimate_cascade_probabilities(0.6, 30, 500, 2).unwrap();
        assert!((est.correct + est.incorrect + est.none - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predicate_onset_is_lead_of_two() {
        let rec = run_basic_once(1.0, TrueValue::V1, 10, 0).unwrap();
        assert_eq!(rec.stats.onset_predicate, Some(3));
        assert_eq!(rec.stats.onset_window, Some(1));
    }
}
