//! Time-aligned phonetic transcripts.
//!
//! The interchange format stands in for a forced aligner's output: one
//! record per line, `symbol<TAB>start_ms<TAB>end_ms` with integer
//! millisecond times, `#` comments, and an optional `@duration<TAB>ms`
//! directive that declares trailing silence past the last segment.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Reserved symbol for silence.
pub const SILENCE: &str = "sil";

/// One aligned phone: an IPA symbol with start/end times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct PhoneSegment {
    pub symbol: String,
    pub start: f64,
    pub end: f64,
}

impl PhoneSegment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_silence(&self) -> bool {
        self.symbol == SILENCE
    }
}

/// An ordered, non-overlapping sequence of phone segments.
///
/// Gaps between segments are legal and read as silence; `total_duration`
/// may extend past the last segment (trailing silence).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    pub segments: Vec<PhoneSegment>,
    pub total_duration: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TranscriptError {
    #[error("line {line}: unknown symbol '{symbol}'")]
    UnknownSymbol { line: usize, symbol: String },
    #[error("line {line}: non-monotonic times ({detail})")]
    NonMonotonic { line: usize, detail: String },
    #[error("line {line}: malformed record ({detail})")]
    MalformedLine { line: usize, detail: String },
}

/// A single invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    EmptySegment { index: usize },
    UnknownSymbol { index: usize, symbol: String },
    Overlap { index: usize },
    OutOfOrder { index: usize },
    DurationTooShort { expected: f64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptySegment { index } => {
                write!(f, "segment {index}: end <= start")
            }
            Diagnostic::UnknownSymbol { index, symbol } => {
                write!(f, "segment {index}: unknown symbol '{symbol}'")
            }
            Diagnostic::Overlap { index } => {
                write!(f, "segment {index}: overlaps previous segment")
            }
            Diagnostic::OutOfOrder { index } => {
                write!(f, "segment {index}: starts before previous segment")
            }
            Diagnostic::DurationTooShort { expected } => {
                write!(f, "total_duration shorter than last segment end {expected}")
            }
        }
    }
}

fn parse_ms(field: &str, line: usize) -> Result<f64, TranscriptError> {
    let ms: i64 = field
        .trim()
        .parse()
        .map_err(|_| TranscriptError::MalformedLine {
            line,
            detail: format!("non-integer time '{field}'"),
        })?;
    if ms < 0 {
        return Err(TranscriptError::MalformedLine {
            line,
            detail: format!("negative time '{field}'"),
        });
    }
    Ok(ms as f64 / 1000.0)
}

/// Parse a transcript file. `known_symbols` is the engine's phoneme
/// inventory; `sil` is always accepted.
pub fn parse_transcript(
    text: &str,
    known_symbols: &BTreeSet<String>,
) -> Result<Transcript, TranscriptError> {
    let mut segments: Vec<PhoneSegment> = Vec::new();
    let mut declared_duration: Option<f64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields[0] == "@duration" {
            if fields.len() != 2 {
                return Err(TranscriptError::MalformedLine {
                    line,
                    detail: "@duration takes one field".into(),
                });
            }
            declared_duration = Some(parse_ms(fields[1], line)?);
            continue;
        }
        if fields.len() != 3 {
            return Err(TranscriptError::MalformedLine {
                line,
                detail: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let symbol = fields[0].trim();
        if symbol != SILENCE && !known_symbols.contains(symbol) {
            return Err(TranscriptError::UnknownSymbol {
                line,
                symbol: symbol.to_string(),
            });
        }
        let start = parse_ms(fields[1], line)?;
        let end = parse_ms(fields[2], line)?;
        if end <= start {
            return Err(TranscriptError::NonMonotonic {
                line,
                detail: format!("end {end} <= start {start}"),
            });
        }
        if let Some(prev) = segments.last() {
            if start < prev.start {
                return Err(TranscriptError::NonMonotonic {
                    line,
                    detail: "descending start times".into(),
                });
            }
            if start < prev.end {
                return Err(TranscriptError::NonMonotonic {
                    line,
                    detail: format!("segment starts at {start} before previous end {}", prev.end),
                });
            }
        }
        segments.push(PhoneSegment {
            symbol: symbol.to_string(),
            start,
            end,
        });
    }

    let last_end = segments.last().map_or(0.0, |s| s.end);
    let total_duration = declared_duration.map_or(last_end, |d| d.max(last_end));
    Ok(Transcript {
        segments,
        total_duration,
    })
}

/// Check every [`Transcript`] invariant, returning one diagnostic per
/// violation. An empty list means the transcript is valid.
pub fn validate(transcript: &Transcript, known_symbols: &BTreeSet<String>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (index, seg) in transcript.segments.iter().enumerate() {
        if seg.end <= seg.start {
            out.push(Diagnostic::EmptySegment { index });
        }
        if !seg.is_silence() && !known_symbols.contains(&seg.symbol) {
            out.push(Diagnostic::UnknownSymbol {
                index,
                symbol: seg.symbol.clone(),
            });
        }
        if index > 0 {
            let prev = &transcript.segments[index - 1];
            if seg.start < prev.start {
                out.push(Diagnostic::OutOfOrder { index });
            } else if seg.start < prev.end {
                out.push(Diagnostic::Overlap { index });
            }
        }
    }
    if let Some(last) = transcript.segments.last() {
        if transcript.total_duration < last.end {
            out.push(Diagnostic::DurationTooShort { expected: last.end });
        }
    }
    out
}

/// Render a transcript back to the interchange format. Times are written
/// as rounded integer milliseconds, so this is the exact inverse of
/// [`parse_transcript`] for transcripts that came from a file.
pub fn serialize(transcript: &Transcript) -> String {
    let mut out = String::new();
    for seg in &transcript.segments {
        let start_ms = (seg.start * 1000.0).round() as i64;
        let end_ms = (seg.end * 1000.0).round() as i64;
        out.push_str(&format!("{}\t{}\t{}\n", seg.symbol, start_ms, end_ms));
    }
    let last_end = transcript.segments.last().map_or(0.0, |s| s.end);
    if transcript.total_duration > last_end {
        let ms = (transcript.total_duration * 1000.0).round() as i64;
        out.push_str(&format!("@duration\t{ms}\n"));
    }
    out
}
