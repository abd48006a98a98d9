//! Monte Carlo campaigns: parameter grids, aggregation, and file output.

mod csv_io;
mod svg;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::model::{ChoiceMode, ModelParams, TrueValue};
use crate::rng::run_seed;
use crate::sim::{detect_cascade, run_once, CascadeKind, CascadeStats, RunRecord};

pub use csv_io::{
    format_runs_csv, format_summary, read_runs_csv, summarize_runs, write_baseline_csv,
    write_runs_csv, write_summary_csv, CsvRun, RUNS_HEADER, SCHEMA_LINE, SUMMARY_HEADER,
};
pub use svg::{render_baseline_plot, render_cumulative_plot};

/// Default ceiling on `cells × runs × n_agents`.
pub const DEFAULT_MAX_AGENT_STEPS: u64 = 50_000_000;

fn default_budget() -> u64 {
    DEFAULT_MAX_AGENT_STEPS
}

/// A sweep over the Cartesian product of the listed parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p_values: Vec<f64>,
    pub k_values: Vec<usize>,
    pub modes: Vec<ChoiceMode>,
    pub v_values: Vec<TrueValue>,
    pub n_agents: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub window: usize,
    #[serde(default = "default_budget")]
    pub max_agent_steps: u64,
}

impl SweepConfig {
    /// Reference grid: five accuracies, three prior sizes, both choice
    /// rules, both true values, 1000 runs of 100 agents.
    pub fn standard_grid(master_seed: u64) -> Self {
        SweepConfig {
            p_values: vec![0.5, 0.6, 0.7, 0.8, 0.9],
            k_values: vec![1, 20, 40],
            modes: ChoiceMode::ALL.to_vec(),
            v_values: vec![TrueValue::V1, TrueValue::V0],
            n_agents: 100,
            runs: 1000,
            master_seed,
            window: crate::sim::DEFAULT_WINDOW,
            max_agent_steps: DEFAULT_MAX_AGENT_STEPS,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| CascadeError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CascadeError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CascadeError::InvalidConfig(msg));
        if self.p_values.is_empty()
            || self.k_values.is_empty()
            || self.modes.is_empty()
            || self.v_values.is_empty()
        {
            return bad("parameter lists must be non-empty".into());
        }
        if let Some(p) = self.p_values.iter().find(|p| !(0.5..=1.0).contains(*p)) {
            return bad(format!("p = {p} outside [0.5, 1]"));
        }
        if self.n_agents == 0 || self.runs == 0 {
            return bad("n_agents and runs must be positive".into());
        }
        if self.window == 0 || self.window > self.n_agents {
            return bad(format!("window must lie in 1..={}", self.n_agents));
        }
        Ok(())
    }

    pub fn cell_keys(&self) -> Vec<CellKey> {
        let mut keys = Vec::new();
        for &p in &self.p_values {
            for &k in &self.k_values {
                for &mode in &self.modes {
                    for &v in &self.v_values {
                        keys.push(CellKey { p, k, mode, v });
                    }
                }
            }
        }
        keys
    }

    pub fn agent_steps(&self) -> u64 {
        self.cell_keys().len() as u64 * self.runs as u64 * self.n_agents as u64
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKey {
    pub p: f64,
    pub k: usize,
    pub mode: ChoiceMode,
    pub v: TrueValue,
}

impl CellKey {
    pub fn params(&self) -> Result<ModelParams<f64>> {
        ModelParams::new(self.p, self.k, self.mode)
    }

    /// File-name stem such as `p0.8_k20_det_v1`.
    pub fn stem(&self) -> String {
        format!("p{}_k{}_{}_v{}", self.p, self.k, self.mode.name(), self.v)
    }
}

/// Aggregates of one cell's runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub runs: usize,
    pub frac_correct: f64,
    pub frac_incorrect: f64,
    pub frac_none: f64,
    pub mean_onset_window: Option<f64>,
    pub median_onset_window: Option<f64>,
    pub mean_onset_predicate: Option<f64>,
    pub median_onset_predicate: Option<f64>,
}

fn mean(xs: &[usize]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<usize>() as f64 / xs.len() as f64)
}

fn median(xs: &[usize]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut s = xs.to_vec();
    s.sort_unstable();
    let n = s.len();
    Some(if n % 2 == 1 {
        s[n / 2] as f64
    } else {
        (s[n / 2 - 1] + s[n / 2]) as f64 / 2.0
    })
}

impl CellSummary {
    pub fn from_stats(stats: &[CascadeStats]) -> Self {
        let n = stats.len();
        let frac = |kind: CascadeKind| {
            stats.iter().filter(|s| s.kind == kind).count() as f64 / n.max(1) as f64
        };
        let window: Vec<usize> = stats.iter().filter_map(|s| s.onset_window).collect();
        let predicate: Vec<usize> = stats.iter().filter_map(|s| s.onset_predicate).collect();
        CellSummary {
            runs: n,
            frac_correct: frac(CascadeKind::Correct),
            frac_incorrect: frac(CascadeKind::Incorrect),
            frac_none: frac(CascadeKind::None),
            mean_onset_window: mean(&window),
            median_onset_window: median(&window),
            mean_onset_predicate: mean(&predicate),
            median_onset_predicate: median(&predicate),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub key: CellKey,
    pub records: Vec<RunRecord<f64>>,
    pub stats: Vec<CascadeStats>,
    pub summary: CellSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    pub fn cell(&self, p: f64, k: usize, mode: ChoiceMode, v: TrueValue) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.key.p == p && c.key.k == k && c.key.mode == mode && c.key.v == v)
    }
}

fn simulate(
    key: &CellKey,
    config: &SweepConfig,
    run: usize,
) -> Result<(RunRecord<f64>, CascadeStats)> {
    let params = key.params()?;
    let seed = run_seed(config.master_seed, run as u64);
    let record = run_once(&params, key.v, config.n_agents, seed)?;
    let stats = detect_cascade(&record, config.window)?;
    Ok((record, stats))
}

/// Runs every `(cell, run)` pair. Run `r` of every cell uses the seed
/// derived from `(master_seed, r)`, so cells are paired by run index.
///
/// `workers <= 1` runs serially on the calling thread; otherwise a
/// dedicated pool of that size is used. Output is identical either way.
pub fn run_sweep(config: &SweepConfig, workers: usize) -> Result<SweepResult> {
    config.validate()?;
    let steps = config.agent_steps();
    if steps > config.max_agent_steps {
        return Err(CascadeError::BudgetExceeded {
            requested: steps,
            budget: config.max_agent_steps,
        });
    }
    let keys = config.cell_keys();
    let tasks: Vec<(usize, usize)> = (0..keys.len())
        .flat_map(|c| (0..config.runs).map(move |r| (c, r)))
        .collect();
    let work = |&(c, r): &(usize, usize)| simulate(&keys[c], config, r);
    let outputs: Vec<(RunRecord<f64>, CascadeStats)> = if workers <= 1 {
        tasks.iter().map(work).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CascadeError::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(work).collect::<Result<_>>())?
    };

    let mut outputs = outputs.into_iter();
    let cells = keys
        .into_iter()
        .map(|key| {
            let (records, stats): (Vec<_>, Vec<_>) = outputs.by_ref().take(config.runs).unzip();
            let summary = CellSummary::from_stats(&stats);
            CellResult {
                key,
                records,
                stats,
                summary,
            }
        })
        .collect();
    log::debug!("sweep finished: {steps} agent-steps");
    Ok(SweepResult {
        config: config.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(runs: usize) -> SweepConfig {
        SweepConfig {
            p_values: vec![0.7],
            k_values: vec![2],
            modes: vec![ChoiceMode::Deterministic],
            v_values: vec![TrueValue::V1],
            n_agents: 30,
            runs,
            master_seed: 5,
            window: 10,
            max_agent_steps: DEFAULT_MAX_AGENT_STEPS,
        }
    }

    #[test]
    fn single_run_single_cell() {
        let r = run_sweep(&small(1), 1).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].records.len(), 1);
        assert_eq!(r.cells[0].records[0].seed, run_seed(5, 0));
    }

    #[test]
    fn parallel_matches_serial() {
        let mut cfg = small(40);
        cfg.modes = ChoiceMode::ALL.to_vec();
        cfg.v_values = TrueValue::ALL.to_vec();
        assert_eq!(run_sweep(&cfg, 1).unwrap(), run_sweep(&cfg, 4).unwrap());
    }

    #[test]
    fn rates_sum_to_one() {
        let r = run_sweep(&small(50), 2).unwrap();
        let s = &r.cells[0].summary;
        assert!((s.frac_correct + s.frac_incorrect + s.frac_none - 1.0).abs() < 1e-12);
        assert_eq!(s.runs, 50);
    }

    #[test]
    fn budget_is_enforced() {
        let mut cfg = small(10);
        cfg.max_agent_steps = 100;
        assert!(matches!(
            run_sweep(&cfg, 1),
            Err(CascadeError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = small(1);
        cfg.p_values = vec![0.4];
        assert!(cfg.validate().is_err());
        let mut cfg = small(1);
        cfg.window = 31;
        assert!(cfg.validate().is_err());
        let mut cfg = small(1);
        cfg.modes.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_round_trip_uses_wire_names() {
        let cfg = SweepConfig::standard_grid(7);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"modes\":[\"det\",\"rand\"]"));
        assert!(text.contains("\"v_values\":[1,0]"));
        assert_eq!(SweepConfig::from_json(&text).unwrap(), cfg);
        let minimal = r#"{"p_values":[0.8],"k_values":[1],"modes":["det"],"v_values":[1],
            "n_agents":10,"runs":2,"master_seed":1,"window":5}"#;
        assert_eq!(
            SweepConfig::from_json(minimal).unwrap().max_agent_steps,
            DEFAULT_MAX_AGENT_STEPS
        );
        assert!(SweepConfig::from_json(r#"{"p_values":[0.8]}"#).is_err());
    }

    #[test]
    fn standard_grid_has_sixty_cells() {
        assert_eq!(SweepConfig::standard_grid(0).cell_keys().len(), 60);
    }

    #[test]
    fn median_and_mean() {
        assert_eq!(median(&[3, 1, 2]), Some(2.0));
        assert_eq!(median(&[4, 1, 2, 3]), Some(2.5));
        assert_eq!(mean(&[]), None);
    }
}
