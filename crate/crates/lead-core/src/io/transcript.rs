//! JSON Lines transcripts: one entry per line, append-only, a lossless
//! round trip. Prompts are stored as a template hash plus the instance
//! substitutions by default (they are multi-kilobyte and repeated), or
//! as full text on request.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{render_prompt_full, ParseStatus, PromptExtra, PromptVariant, Usage};
use crate::executors::{EpisodeRecord, Exchange, Phase, StepVerdict};
use crate::listing::state_text;
use crate::puzzle::{PuzzleKind, Step};

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("transcript line {line}: {message}")]
    Line { line: usize, message: String },
}

/// How prompts are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PromptMode {
    #[default]
    TemplateHash,
    FullText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptRecord {
    Template {
        template_hash: String,
        substitutions: BTreeMap<String, String>,
    },
    Full {
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub episode_id: u64,
    pub step_index: usize,
    pub phase: Phase,
    pub anchor_index: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prompt: Option<PromptRecord>,
    pub raw_text: String,
    pub parsed_steps: Vec<Step>,
    pub parse_status: ParseStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub classification: Option<StepVerdict>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prefix_consistent: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub latency_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub usage: Option<Usage>,
}

fn template_hash(variant: PromptVariant, kind: PuzzleKind, depth: usize) -> String {
    static CACHE: OnceLock<Mutex<BTreeMap<(PromptVariant, PuzzleKind), String>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(hash) = cache.lock().unwrap().get(&(variant, kind)) {
        return hash.clone();
    }
    // Render against a throwaway instance; the template (and so its
    // hash) does not depend on the substitutions.
    let state = kind.initial(2).expect("n=2 is valid");
    let extra = PromptExtra {
        depth: Some(depth.max(1)),
        step_id: Some(0),
        warmup_n: None,
    };
    let hash = render_prompt_full(variant, kind, 2, &state, &extra)
        .map(|p| p.template_hash)
        .unwrap_or_default();
    cache
        .lock()
        .unwrap()
        .insert((variant, kind), hash.clone());
    hash
}

fn prompt_record(
    exchange: &Exchange,
    kind: PuzzleKind,
    n: usize,
    mode: PromptMode,
) -> Option<PromptRecord> {
    let variant = exchange.variant?;
    let state = exchange.anchor_state.as_ref()?;
    let extra = PromptExtra {
        depth: (variant == PromptVariant::Lookahead).then_some(exchange.depth),
        step_id: Some(exchange.anchor_index),
        warmup_n: None,
    };
    match mode {
        PromptMode::FullText => render_prompt_full(variant, kind, n, state, &extra)
            .ok()
            .map(|p| PromptRecord::Full { text: p.text }),
        PromptMode::TemplateHash => {
            let mut substitutions = BTreeMap::new();
            substitutions.insert("n".to_string(), n.to_string());
            substitutions.insert("state".to_string(), state_text(state));
            if kind == PuzzleKind::Hanoi {
                substitutions.insert("id".to_string(), exchange.anchor_index.to_string());
            }
            if variant == PromptVariant::Lookahead {
                substitutions.insert("k".to_string(), exchange.depth.to_string());
            }
            Some(PromptRecord::Template {
                template_hash: template_hash(variant, kind, exchange.depth),
                substitutions,
            })
        }
    }
}

/// Flattens a graded episode into transcript entries. Commit entries
/// carry the step's verdict; agent exchanges carry the prompt record.
pub fn entries_from_record(record: &EpisodeRecord, mode: PromptMode) -> Vec<TranscriptEntry> {
    record
        .exchanges
        .iter()
        .map(|exchange| {
            let classification = (exchange.phase == Phase::Commit)
                .then(|| record.step_verdicts.get(exchange.step_index).copied())
                .flatten();
            TranscriptEntry {
                episode_id: record.episode_id,
                step_index: exchange.step_index,
                phase: exchange.phase,
                anchor_index: exchange.anchor_index,
                prompt: prompt_record(exchange, record.kind, record.n, mode),
                raw_text: exchange.raw_text.clone(),
                parsed_steps: exchange.parsed.clone(),
                parse_status: exchange.parse_status,
                classification,
                prefix_consistent: exchange.prefix_consistent,
                latency_ms: exchange.latency_ms,
                usage: exchange.usage,
            }
        })
        .collect()
}

/// Writes entries as JSON Lines.
pub fn write_transcript<W: Write>(
    mut sink: W,
    entries: &[TranscriptEntry],
) -> Result<(), TranscriptError> {
    for entry in entries {
        let line = serde_json::to_string(entry)
            .map_err(|e| TranscriptError::Line { line: 0, message: e.to_string() })?;
        sink.write_all(line.as_bytes())?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a transcript back; malformed lines are reported with their
/// 1-based line number.
pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, TranscriptError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| TranscriptError::Line {
            line: idx + 1,
            message: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok(entries)
}
