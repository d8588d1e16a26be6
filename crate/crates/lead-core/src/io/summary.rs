//! Plot-ready CSV tables aggregated from episode records: success rates,
//! per-step error counts, the TV-distance matrix across agents, lookahead
//! positional accuracy, and vote/call volume per step.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use crate::analytics::{self, ErrorDistribution};
use crate::executors::{EpisodeRecord, Outcome, Phase, StepVerdict};
use crate::puzzle::{PuzzleKind, Step};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryTables {
    /// `strategy,puzzle,n,agent,episodes,successes,success_pct`
    pub success: String,
    /// `step_index,commits,ok,move_finding,move_execution,parse,error_pct`
    pub step_errors: String,
    /// Pairwise TV distances across agent labels, diagonal = the
    /// self-distance baseline. Present with two or more labels.
    pub tv_matrix: Option<String>,
    /// `anchor,offset,samples,accuracy` from recorded rollouts anchored
    /// on the reference trajectory. Present when rollouts were recorded.
    pub positional: Option<String>,
    /// `step_index,episodes,agent_calls,votes`
    pub votes_calls: String,
}

fn csv_escape(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn success_table(records: &[EpisodeRecord]) -> String {
    let mut groups: BTreeMap<(String, String, usize, String), (u64, u64)> = BTreeMap::new();
    for r in records {
        let key = (
            r.config.strategy.name().to_string(),
            r.kind.name().to_string(),
            r.n,
            r.agent_label.clone(),
        );
        let entry = groups.entry(key).or_insert((0, 0));
        entry.0 += 1;
        if r.outcome == Outcome::Success {
            entry.1 += 1;
        }
    }
    let mut out = String::from("strategy,puzzle,n,agent,episodes,successes,success_pct\n");
    for ((strategy, puzzle, n, agent), (episodes, successes)) in groups {
        let pct = 100.0 * successes as f64 / episodes as f64;
        out.push_str(&format!(
            "{strategy},{puzzle},{n},{},{episodes},{successes},{pct:.1}\n",
            csv_escape(&agent)
        ));
    }
    out
}

fn step_error_table(records: &[EpisodeRecord]) -> String {
    #[derive(Default, Clone, Copy)]
    struct Row {
        commits: u64,
        ok: u64,
        move_finding: u64,
        move_execution: u64,
        parse: u64,
    }
    let mut rows: BTreeMap<usize, Row> = BTreeMap::new();
    for r in records {
        for (i, verdict) in r.step_verdicts.iter().enumerate() {
            let row = rows.entry(i).or_default();
            row.commits += 1;
            match verdict {
                StepVerdict::Ok => row.ok += 1,
                StepVerdict::MoveFinding => row.move_finding += 1,
                StepVerdict::MoveExecution => row.move_execution += 1,
                StepVerdict::Parse => row.parse += 1,
            }
        }
        if let Some(t) = &r.terminal_failure {
            let row = rows.entry(t.step_index).or_default();
            row.parse += 1;
        }
    }
    let mut out =
        String::from("step_index,commits,ok,move_finding,move_execution,parse,error_pct\n");
    for (step, row) in rows {
        let attempts = row.commits.max(row.ok + row.move_finding + row.move_execution + row.parse);
        let errors = row.move_finding + row.move_execution + row.parse;
        let pct = if attempts == 0 {
            0.0
        } else {
            100.0 * errors as f64 / attempts as f64
        };
        out.push_str(&format!(
            "{step},{},{},{},{},{},{pct:.1}\n",
            row.commits, row.ok, row.move_finding, row.move_execution, row.parse
        ));
    }
    out
}

fn tv_matrix_table(records: &[EpisodeRecord]) -> Option<String> {
    let mut by_label: BTreeMap<String, Vec<&EpisodeRecord>> = BTreeMap::new();
    for r in records {
        by_label.entry(r.agent_label.clone()).or_default().push(r);
    }
    if by_label.len() < 2 {
        return None;
    }
    let labels: Vec<String> = by_label.keys().cloned().collect();
    let distributions: BTreeMap<&String, Option<ErrorDistribution>> = by_label
        .iter()
        .map(|(label, rs)| {
            let owned: Vec<EpisodeRecord> = rs.iter().map(|r| (*r).clone()).collect();
            (label, ErrorDistribution::from_episodes(&owned).ok())
        })
        .collect();
    let mut out = String::from("agent");
    for label in &labels {
        out.push(',');
        out.push_str(&csv_escape(label));
    }
    out.push('\n');
    for a in &labels {
        out.push_str(&csv_escape(a));
        for b in &labels {
            out.push(',');
            let cell = if a == b {
                let runs = analytics::error_steps_per_run(
                    &by_label[a].iter().map(|r| (*r).clone()).collect::<Vec<_>>(),
                );
                analytics::self_distance_baseline(&runs, 8, 0).ok()
            } else {
                match (&distributions[a], &distributions[b]) {
                    (Some(pa), Some(pb)) => Some(analytics::tv_distance(pa, pb)),
                    _ => None,
                }
            };
            match cell {
                Some(d) => out.push_str(&format!("{d:.4}")),
                None => out.push_str("NA"),
            }
        }
        out.push('\n');
    }
    Some(out)
}

/// Accuracy by (anchor, offset) from recorded lookahead rollouts that
/// were anchored on the true reference state.
fn positional_table(records: &[EpisodeRecord]) -> Option<String> {
    let mut trajectories: BTreeMap<(PuzzleKind, usize), (Vec<Step>, Vec<crate::puzzle::PuzzleState>)> =
        BTreeMap::new();
    let mut counts: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
    for r in records {
        let (trajectory, states) = trajectories
            .entry((r.kind, r.n))
            .or_insert_with(|| {
                let trajectory = r.kind.oracle_solve(r.n).unwrap_or_default();
                let mut states = vec![r.kind.initial(r.n).expect("validated size")];
                states.extend(trajectory.iter().map(|s| s.state.clone()));
                (trajectory, states)
            });
        for exchange in &r.exchanges {
            if exchange.phase != Phase::LookaheadVote {
                continue;
            }
            let Some(anchor_state) = &exchange.anchor_state else {
                continue;
            };
            let anchor = exchange.anchor_index;
            if states.get(anchor) != Some(anchor_state) {
                continue;
            }
            for (offset0, predicted) in exchange.parsed.iter().enumerate() {
                let target = anchor + offset0;
                let Some(reference) = trajectory.get(target) else {
                    break;
                };
                let cell = counts.entry((anchor, offset0 + 1)).or_insert((0, 0));
                cell.1 += 1;
                if predicted.same_prediction(reference) {
                    cell.0 += 1;
                }
            }
        }
    }
    if counts.is_empty() {
        return None;
    }
    let mut out = String::from("anchor,offset,samples,accuracy\n");
    for ((anchor, offset), (correct, total)) in counts {
        out.push_str(&format!(
            "{anchor},{offset},{total},{:.4}\n",
            correct as f64 / total as f64
        ));
    }
    Some(out)
}

fn votes_calls_table(records: &[EpisodeRecord]) -> String {
    let mut rows: BTreeMap<usize, (u64, u64, u64)> = BTreeMap::new();
    for r in records {
        let mut seen = std::collections::BTreeSet::new();
        for exchange in &r.exchanges {
            if exchange.phase == Phase::Commit {
                continue;
            }
            let row = rows.entry(exchange.step_index).or_default();
            row.1 += 1;
            seen.insert(exchange.step_index);
        }
        for (i, tally) in r.tallies.iter().enumerate() {
            if let Some(t) = tally {
                rows.entry(i).or_default().2 += u64::from(t.total_votes);
            }
        }
        for i in seen {
            rows.entry(i).or_default().0 += 1;
        }
    }
    let mut out = String::from("step_index,episodes,agent_calls,votes\n");
    for (step, (episodes, calls, votes)) in rows {
        out.push_str(&format!("{step},{episodes},{calls},{votes}\n"));
    }
    out
}

/// Builds every summary table from graded records.
pub fn summarize(records: &[EpisodeRecord]) -> SummaryTables {
    SummaryTables {
        success: success_table(records),
        step_errors: step_error_table(records),
        tv_matrix: tv_matrix_table(records),
        positional: positional_table(records),
        votes_calls: votes_calls_table(records),
    }
}

/// Writes the tables as CSV files and returns the paths written.
pub fn write_summary(dir: &Path, tables: &SummaryTables) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: &str| -> io::Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put("success.csv", &tables.success)?;
    put("step_errors.csv", &tables.step_errors)?;
    if let Some(tv) = &tables.tv_matrix {
        put("tv_matrix.csv", tv)?;
    }
    if let Some(pos) = &tables.positional {
        put("positional.csv", pos)?;
    }
    put("votes_calls.csv", &tables.votes_calls)?;
    Ok(written)
}
