//! Independent reference computations used to validate the belief core.
//!
//! Nothing in here calls the arithmetic of [`crate::belief`] or
//! [`crate::choice`] for the quantities it checks: the dense recursion keeps
//! its own `[c][v]` table, its own binomial prior and its own threshold
//! tests, and detects ties with an absolute tolerance instead of relying on
//! summation order. Agreement between the two is therefore meaningful.

use crate::baseline::run_basic_with_draws;
use crate::belief::{acting_agent_posterior, make_prior, observe, JointBelief};
use crate::choice::{decision_weights, Verdict};
use crate::error::{CascadeError, Result};
use crate::model::{Action, ChoiceMode, ModelParams, ObserverModel, Signal, TrueValue};
use crate::rng::{run_rng, run_seed};
use crate::sim::{run_once, run_with_draws};

/// Tie tolerance used by the dense oracle's deterministic table.
const TIE_TOL: f64 = 1e-12;

pub const ENUMERATION_MAX_K: usize = 6;
pub const ENUMERATION_MAX_LEN: usize = 10;

type Table = Vec<[f64; 2]>;

fn dense_prior(p: f64, k: usize) -> Table {
    let q = 1.0 - p;
    let mut table = Vec::with_capacity(k + 1);
    for c in 0..=k {
        let mut coef = 1.0f64;
        for t in 0..c {
            coef *= (k - t) as f64;
            coef /= (t + 1) as f64;
        }
        let v1 = 0.5 * coef * p.powi(c as i32) * q.powi((k - c) as i32);
        let v0 = 0.5 * coef * q.powi(c as i32) * p.powi((k - c) as i32);
        table.push([v0, v1]);
    }
    let z: f64 = table.iter().map(|r| r[0] + r[1]).sum();
    table.iter_mut().for_each(|r| {
        r[0] /= z;
        r[1] /= z;
    });
    table
}

fn signal_weight(p: f64, high: bool, v: usize) -> f64 {
    if high == (v == 1) {
        p
    } else {
        1.0 - p
    }
}

/// `(P(Adopt), P(Reject))` for one candidate signal at step `j`.
fn dense_likelihood(table: &Table, params: &ModelParams<f64>, high: bool, j: usize) -> (f64, f64) {
    let p = *params.p();
    let total = params.k() + j;
    // Count distribution the threshold is applied to, indexed by effective count.
    let effective: Vec<f64> = match params.observer() {
        ObserverModel::Marginal => {
            let mut m = vec![0.0; table.len() + 1];
            for (c, row) in table.iter().enumerate() {
                m[c + usize::from(high)] += row[0] + row[1];
            }
            m
        }
        ObserverModel::SignalConditioned => {
            let mut m = vec![0.0; table.len() + 1];
            let mut z = 0.0;
            for (c, row) in table.iter().enumerate() {
                let mass = row[0] * signal_weight(p, high, 0) + row[1] * signal_weight(p, high, 1);
                m[c + usize::from(high)] += mass;
                z += mass;
            }
            if z == 0.0 {
                return (0.5, 0.5);
            }
            m.iter_mut().for_each(|x| *x /= z);
            m
        }
    };
    let (mut gt, mut lt, mut eq) = (0.0, 0.0, 0.0);
    for (e, &mass) in effective.iter().enumerate() {
        if 2 * e > total {
            gt += mass;
        } else if 2 * e < total {
            lt += mass;
        } else {
            eq += mass;
        }
    }
    match params.mode() {
        ChoiceMode::Deterministic => {
            if (gt - lt).abs() <= TIE_TOL {
                (0.5, 0.5)
            } else if gt > lt {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        }
        ChoiceMode::WeightedRandom => (gt + 0.5 * eq, lt + 0.5 * eq),
    }
}

/// One step of the recursion, also returning the likelihood rows used.
fn dense_step(
    table: &Table,
    params: &ModelParams<f64>,
    action: Action,
    j: usize,
) -> Result<(Table, [(f64, f64); 2])> {
    let p = *params.p();
    let pv1: f64 = table.iter().map(|r| r[1]).sum();
    let pv0: f64 = table.iter().map(|r| r[0]).sum();
    let prior_h = pv1 * p + pv0 * (1.0 - p);
    let prior_l = pv0 * p + pv1 * (1.0 - p);
    let lh = dense_likelihood(table, params, true, j);
    let ll = dense_likelihood(table, params, false, j);
    let pick = |l: (f64, f64)| if action == Action::Adopt { l.0 } else { l.1 };
    let (nh, nl) = (prior_h * pick(lh), prior_l * pick(ll));
    if nh + nl == 0.0 {
        return Err(CascadeError::ImpossibleObservation { index: j, action });
    }
    let (sh, sl) = (nh / (nh + nl), nl / (nh + nl));
    let mut next = vec![[0.0; 2]; table.len() + 1];
    for (c, row) in table.iter().enumerate() {
        for v in 0..2 {
            next[c][v] += row[v] * sl;
            next[c + 1][v] += row[v] * sh;
        }
    }
    let z: f64 = next.iter().map(|r| r[0] + r[1]).sum();
    next.iter_mut().for_each(|r| {
        r[0] /= z;
        r[1] /= z;
    });
    Ok((next, [lh, ll]))
}

fn table_to_belief(k: usize, j: usize, table: &Table) -> Result<JointBelief<f64>> {
    JointBelief::from_normalized_rows(
        k,
        j,
        table.iter().map(|r| r[0]).collect(),
        table.iter().map(|r| r[1]).collect(),
    )
}

/// The public belief after `actions`, recomputed from scratch with a dense
/// table in a single pass.
pub fn dense_posterior(params: &ModelParams<f64>, actions: &[Action]) -> Result<JointBelief<f64>> {
    let mut table = dense_prior(*params.p(), params.k());
    for (idx, &a) in actions.iter().enumerate() {
        table = dense_step(&table, params, a, idx + 1)?.0;
    }
    table_to_belief(params.k(), actions.len(), &table)
}

/// Full-history posterior over `(V, C_j)`: enumerates `C_0`, `V` and every
/// signal history, weighting each by the prior, the signal likelihoods and
/// the per-step action likelihoods along the realized public-belief path.
///
/// Refuses `k > 6` or more than 10 actions.
pub fn enumeration_posterior(
    params: &ModelParams<f64>,
    actions: &[Action],
) -> Result<JointBelief<f64>> {
    let k = params.k();
    let n = actions.len();
    if k > ENUMERATION_MAX_K || n > ENUMERATION_MAX_LEN {
        return Err(CascadeError::SizeLimit(format!(
            "k = {k}, {n} actions (limits {ENUMERATION_MAX_K} and {ENUMERATION_MAX_LEN})"
        )));
    }
    let p = *params.p();
    let prior = dense_prior(p, k);
    let mut liks = Vec::with_capacity(n);
    let mut table = prior.clone();
    for (idx, &a) in actions.iter().enumerate() {
        let (next, rows) = dense_step(&table, params, a, idx + 1)?;
        liks.push(rows);
        table = next;
    }

    let mut cells = vec![[0.0f64; 2]; k + n + 1];
    for (c0, row) in prior.iter().enumerate() {
        for v in 0..2 {
            if row[v] == 0.0 {
                continue;
            }
            for mask in 0u32..(1u32 << n) {
                let mut w = row[v];
                for (t, &a) in actions.iter().enumerate() {
                    let high = mask & (1 << t) != 0;
                    let (adopt, reject) = liks[t][usize::from(!high)];
                    w *=
                        signal_weight(p, high, v) * if a == Action::Adopt { adopt } else { reject };
                }
                cells[c0 + mask.count_ones() as usize][v] += w;
            }
        }
    }
    let z: f64 = cells.iter().map(|r| r[0] + r[1]).sum();
    if z == 0.0 {
        return Err(CascadeError::ImpossibleObservation {
            index: n,
            action: *actions.last().unwrap_or(&Action::Adopt),
        });
    }
    cells.iter_mut().for_each(|r| {
        r[0] /= z;
        r[1] /= z;
    });
    table_to_belief(k, n, &cells)
}

/// Max-abs cell gap between the full-history posterior and the recursion.
pub fn recursion_divergence(params: &ModelParams<f64>, actions: &[Action]) -> Result<f64> {
    let exact = enumeration_posterior(params, actions)?;
    let recursive = dense_posterior(params, actions)?;
    Ok(exact.max_abs_diff(&recursive))
}

/// One acting-agent decision where the count-threshold rule and the
/// `P(V = 1) > 0.5` rule disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleDisagreement {
    pub trial: usize,
    pub agent: usize,
    pub signal: Signal,
    pub count_rule: Verdict,
    pub value_rule: Verdict,
    pub p_v1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub decisions: usize,
    pub agreeing: usize,
    /// First few disagreements, for logging.
    pub examples: Vec<RuleDisagreement>,
}

impl AgreementReport {
    pub fn rate(&self) -> f64 {
        if self.decisions == 0 {
            1.0
        } else {
            self.agreeing as f64 / self.decisions as f64
        }
    }
}

const MAX_LOGGED: usize = 10;

fn value_verdict(post: &JointBelief<f64>) -> Verdict {
    let [pv0, pv1] = post.v_marginal();
    if pv1 > pv0 {
        Verdict::Adopt
    } else if pv1 < pv0 {
        Verdict::Reject
    } else {
        Verdict::Tie
    }
}

/// Compares the two rules on one acting posterior.
pub fn rules_agree(
    post: &JointBelief<f64>,
    i: usize,
    params: &ModelParams<f64>,
) -> Result<(Verdict, Verdict)> {
    Ok((
        decision_weights(post, i, params)?.verdict(),
        value_verdict(post),
    ))
}

/// Over every acting-agent posterior along `trials` simulated chains
/// (`V = 1`), the fraction where the count-threshold verdict equals the
/// `P(V = 1 | X_i, actions)` verdict (ties compared as ties).
pub fn choice_rule_agreement(
    params: &ModelParams<f64>,
    n_agents: usize,
    trials: usize,
    master_seed: u64,
) -> Result<AgreementReport> {
    let mut report = AgreementReport {
        decisions: 0,
        agreeing: 0,
        examples: Vec::new(),
    };
    for trial in 0..trials {
        let rec = run_once(
            params,
            TrueValue::V1,
            n_agents,
            run_seed(master_seed, trial as u64),
        )?;
        let mut public = make_prior(params);
        for (idx, e) in rec.entries.iter().enumerate() {
            let post = acting_agent_posterior(&public, e.signal, params)?;
            let (count_rule, value_rule) = rules_agree(&post, idx + 1, params)?;
            report.decisions += 1;
            if count_rule == value_rule {
                report.agreeing += 1;
            } else if report.examples.len() < MAX_LOGGED {
                report.examples.push(RuleDisagreement {
                    trial,
                    agent: idx + 1,
                    signal: e.signal,
                    count_rule,
                    value_rule,
                    p_v1: post.v_marginal()[1],
                });
            }
            public = observe(&public, e.action, params)?;
        }
    }
    Ok(report)
}

/// Fraction of chains in which the Bayesian model with `k = 0` and
/// deterministic choice takes exactly the counting model's actions, both
/// fed the same draw stream.
pub fn counting_model_agreement(
    p: f64,
    n_agents: usize,
    trials: usize,
    master_seed: u64,
) -> Result<f64> {
    let params = ModelParams::new(p, 0, ChoiceMode::Deterministic)?;
    let mut same = 0usize;
    for trial in 0..trials {
        let seed = run_seed(master_seed, trial as u64);
        let bayes = run_with_draws(&params, TrueValue::V1, n_agents, seed, &mut run_rng(seed))?;
        let basic = run_basic_with_draws(p, TrueValue::V1, n_agents, seed, 1, &mut run_rng(seed))?;
        if bayes.actions() == basic.actions() {
            same += 1;
        }
    }
    Ok(same as f64 / trials.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::public_belief_after;
    use crate::model::ChoiceMode::{Deterministic, WeightedRandom};

    fn params(p: f64, k: usize, mode: ChoiceMode) -> ModelParams<f64> {
        ModelParams::new(p, k, mode).unwrap()
    }

    #[test]
    fn empty_sequence_is_the_prior() {
        for k in [0, 1, 3, 6] {
            let m = params(0.7, k, Deterministic);
            let prior = make_prior(&m);
            assert!(dense_posterior(&m, &[]).unwrap().max_abs_diff(&prior) < 1e-15);
            assert!(enumeration_posterior(&m, &[]).unwrap().max_abs_diff(&prior) < 1e-15);
        }
    }

    #[test]
    fn one_revealing_adopt() {
        let m = params(0.8, 1, Deterministic);
        // Under the recursion the V marginal cannot move.
        let dense = dense_posterior(&m, &[Action::Adopt]).unwrap();
        assert!((dense.v_marginal()[1] - 0.5).abs() < 1e-12);
        // The full-history posterior sees X_1 = High revealed exactly.
        let exact = enumeration_posterior(&m, &[Action::Adopt]).unwrap();
        assert!((exact.v_marginal()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn dense_matches_core_on_a_few_sequences() {
        use Action::*;
        for observer in [ObserverModel::Marginal, ObserverModel::SignalConditioned] {
            for mode in ChoiceMode::ALL {
                let m = params(0.6, 2, mode).with_observer(observer);
                let acts = [Adopt, Reject, Reject, Adopt, Adopt];
                match (dense_posterior(&m, &acts), public_belief_after(&m, &acts)) {
                    (Ok(a), Ok(b)) => assert!(a.max_abs_diff(&b) < 1e-12),
                    (Err(_), Err(_)) => {}
                    other => panic!("disagree: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn enumeration_normalizes_and_is_neutral_at_half() {
        use Action::*;
        let m = params(0.5, 3, WeightedRandom);
        let b = enumeration_posterior(&m, &[Adopt, Adopt, Reject, Adopt]).unwrap();
        assert!((b.total_mass() - 1.0).abs() < 1e-12);
        assert!((b.v_marginal()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn enumeration_refuses_large_instances() {
        let m = params(0.7, 7, Deterministic);
        assert!(matches!(
            enumeration_posterior(&m, &[]),
            Err(CascadeError::SizeLimit(_))
        ));
        let m = params(0.7, 1, Deterministic);
        assert!(enumeration_posterior(&m, &[Action::Adopt; 11]).is_err());
    }

    #[test]
    fn weighted_two_adopts_divergence_is_positive() {
        let m = params(0.8, 1, WeightedRandom);
        let d = recursion_divergence(&m, &[Action::Adopt, Action::Adopt]).unwrap();
        assert!(d > 0.0 && d < 1.0);
    }

    #[test]
    fn saturated_beliefs_agree() {
        let m = params(0.8, 1, Deterministic);
        // Count certainly at its maximum and V certainly 1.
        let b = JointBelief::from_rows(1, 1, vec![0.0; 3], vec![0.0, 0.0, 1.0]).unwrap();
        let (c, v) = rules_agree(&b, 1, &m).unwrap();
        assert_eq!((c, v), (Verdict::Adopt, Verdict::Adopt));
    }

    #[test]
    fn value_rule_always_ties_at_half() {
        // P(V) is never updated by the public recursion, and at p = 0.5 the
        // own signal carries no information either.
        let m = params(0.5, 2, Deterministic);
        let b = public_belief_after(&m, &[Action::Adopt, Action::Reject, Action::Adopt]).unwrap();
        for s in Signal::ALL {
            let post = acting_agent_posterior(&b, s, &m).unwrap();
            assert_eq!(rules_agree(&post, 4, &m).unwrap().1, Verdict::Tie);
        }
    }

    #[test]
    fn rules_tie_together_on_symmetric_input() {
        let m = params(0.5, 1, Deterministic);
        let b = JointBelief::from_rows(1, 1, vec![0.25, 0.25, 0.0], vec![0.25, 0.25, 0.0]).unwrap();
        let post = acting_agent_posterior(&b, Signal::High, &m).unwrap();
        assert_eq!(
            rules_agree(&post, 2, &m).unwrap(),
            (Verdict::Tie, Verdict::Tie)
        );
    }

    #[test]
    fn agreement_report_counts_every_decision() {
        let m = params(0.7, 1, Deterministic);
        let r = choice_rule_agreement(&m, 20, 5, 3).unwrap();
        assert_eq!(r.decisions, 100);
        assert!((0.0..=1.0).contains(&r.rate()));
    }
}
