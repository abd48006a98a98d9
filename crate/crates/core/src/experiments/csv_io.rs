//! CSV schemas (version 1). Every file starts with a `#schema=1` comment
//! line, then a header row; fields are comma-separated with LF endings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{CellKey, CellSummary, SweepResult};
use crate::baseline::CascadeProbabilities;
use crate::error::{CascadeError, Result};
use crate::model::{Action, ChoiceMode, Signal, TrueValue};
use crate::sim::{detect_cascade_in, AgentEntry, RunRecord};

pub const SCHEMA_LINE: &str = "#schema=1";
pub const RUNS_HEADER: &str =
    "run_id,p,k,mode,v_true,agent_index,signal,action,cum_adopt,cum_reject";
pub const SUMMARY_HEADER: &str = "p,k,mode,v_true,runs,frac_correct,frac_incorrect,frac_none,mean_onset_window,mean_onset_predicate";
pub const BASELINE_HEADER: &str = "p,runs,p_correct,p_incorrect,p_none";

/// Schema line and header, then one record per row.
fn render<I, R>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut buf = format!("{SCHEMA_LINE}\n{header}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        for row in rows {
            w.write_record(row).expect("write to memory");
        }
        w.flush().expect("write to memory");
    }
    String::from_utf8(buf).expect("fields are ASCII")
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| CascadeError::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CascadeError::io(path, e))
}

/// One row per agent per run; `run_id` is the position in `records`.
pub fn format_runs_csv(records: &[RunRecord<f64>]) -> String {
    let rows = records.iter().enumerate().flat_map(|(run_id, rec)| {
        let (p, k, mode) = (rec.params.p(), rec.params.k(), rec.params.mode().name());
        rec.entries.iter().enumerate().map(move |(i, e)| {
            [
                run_id.to_string(),
                p.to_string(),
                k.to_string(),
                mode.to_string(),
                rec.v_true.to_string(),
                (i + 1).to_string(),
                e.signal.symbol().to_string(),
                e.action.symbol().to_string(),
                e.cum_adopt.to_string(),
                e.cum_reject.to_string(),
            ]
        })
    });
    render(RUNS_HEADER, rows)
}

pub fn write_runs_csv(records: &[RunRecord<f64>], path: &Path) -> Result<()> {
    write_file(path, &format_runs_csv(records))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Summary CSV text for a sequence of cells.
pub fn format_summary<'a>(
    rows: impl IntoIterator<Item = (&'a CellKey, &'a CellSummary)>,
) -> String {
    let rows = rows.into_iter().map(|(key, s)| {
        [
            key.p.to_string(),
            key.k.to_string(),
            key.mode.name().to_string(),
            key.v.to_string(),
            s.runs.to_string(),
            s.frac_correct.to_string(),
            s.frac_incorrect.to_string(),
            s.frac_none.to_string(),
            opt(s.mean_onset_window),
            opt(s.mean_onset_predicate),
        ]
    });
    render(SUMMARY_HEADER, rows)
}

pub fn write_summary_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(
        path,
        &format_summary(result.cells.iter().map(|c| (&c.key, &c.summary))),
    )
}

pub fn write_baseline_csv(rows: &[CascadeProbabilities], path: &Path) -> Result<()> {
    let rows = rows.iter().map(|r| {
        [
            r.p.to_string(),
            r.runs.to_string(),
            r.correct.to_string(),
            r.incorrect.to_string(),
            r.none.to_string(),
        ]
    });
    write_file(path, &render(BASELINE_HEADER, rows))
}

/// One run reconstructed from a runs CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRun {
    pub run_id: usize,
    pub key: CellKey,
    pub entries: Vec<AgentEntry>,
}

impl CsvRun {
    pub fn actions(&self) -> Vec<Action> {
        self.entries.iter().map(|e| e.action).collect()
    }
}

/// Parses a runs CSV back into runs, in file order.
pub fn read_runs_csv(path: &Path) -> Result<Vec<CsvRun>> {
    let file = File::open(path).map_err(|e| CascadeError::io(path, e))?;
    let parse_err = |line: u64, message: String| CascadeError::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
    if header.iter().ne(RUNS_HEADER.split(',')) {
        let found = header.iter().collect::<Vec<_>>().join(",");
        return Err(parse_err(2, format!("unexpected header {found:?}")));
    }
    let mut runs: Vec<CsvRun> = Vec::new();
    for record in reader.records() {
        let f =
            record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let lineno = f.position().map_or(0, |p| p.line());
        let num = |i: usize, what: &str| -> Result<u64> {
            f[i].parse::<u64>()
                .map_err(|_| parse_err(lineno, format!("bad {what}: {:?}", &f[i])))
        };
        let run_id = num(0, "run_id")? as usize;
        let p: f64 = f[1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad p: {:?}", &f[1])))?;
        let k = num(2, "k")? as usize;
        let mode = ChoiceMode::from_name(&f[3])
            .ok_or_else(|| parse_err(lineno, format!("bad mode: {:?}", &f[3])))?;
        let v = TrueValue::try_from(num(4, "v_true")? as u8).map_err(|m| parse_err(lineno, m))?;
        let agent_index = num(5, "agent_index")? as usize;
        let signal = Signal::from_symbol(&f[6])
            .ok_or_else(|| parse_err(lineno, format!("bad signal: {:?}", &f[6])))?;
        let action = Action::from_symbol(&f[7])
            .ok_or_else(|| parse_err(lineno, format!("bad action: {:?}", &f[7])))?;
        let entry = AgentEntry {
            signal,
            action,
            cum_adopt: num(8, "cum_adopt")? as u32,
            cum_reject: num(9, "cum_reject")? as u32,
        };
        let key = CellKey { p, k, mode, v };
        match runs.last_mut() {
            Some(run) if run.run_id == run_id && run.key == key => run.entries.push(entry),
            _ => runs.push(CsvRun {
                run_id,
                key,
                entries: vec![entry],
            }),
        }
        let run = runs.last().expect("just pushed");
        if run.entries.len() != agent_index {
            return Err(parse_err(
                lineno,
                format!("agent_index {agent_index} out of sequence"),
            ));
        }
    }
    Ok(runs)
}

/// Recomputes per-cell summaries from parsed runs, grouping cells in order
/// of first appearance.
pub fn summarize_runs(runs: &[CsvRun], window: usize) -> Result<Vec<(CellKey, CellSummary)>> {
    let mut groups: Vec<(CellKey, Vec<crate::sim::CascadeStats>)> = Vec::new();
    for run in runs {
        let params = run.key.params()?;
        let stats = detect_cascade_in(&params, run.key.v, &run.actions(), window)?;
        match groups.iter_mut().find(|(k, _)| *k == run.key) {
            Some((_, v)) => v.push(stats),
            None => groups.push((run.key, vec![stats])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(k, s)| (k, CellSummary::from_stats(&s)))
        .collect())
}
