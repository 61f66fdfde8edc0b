//! Viseme classes: groups of phonemes that share a mouth shape.
//!
//! The inventory is data-driven (see `assets/visemes_en20.csv`, a
//! reconstruction of a 20-class English grouping) so it can be swapped
//! for other languages without touching code.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::transcript::{Transcript, SILENCE};

/// Number of viseme classes in a valid inventory.
pub const VISEME_CLASS_COUNT: usize = 20;

/// Class id of the neutral (silence) viseme.
pub const NEUTRAL_VISEME: u8 = 0;

/// One viseme class: a named group of phonemes with articulation flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisemeClass {
    pub id: u8,
    pub name: String,
    pub members: BTreeSet<String>,
    pub is_labial: bool,
    pub is_labiodental: bool,
}

/// A time interval during which one viseme class is the articulation target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisemeSegment {
    pub viseme_id: u8,
    pub start: f64,
    pub end: f64,
}

impl VisemeSegment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum VisemeError {
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),
    #[error("viseme table line {line}: {detail}")]
    BadTable { line: usize, detail: String },
    #[error("viseme table must define exactly {VISEME_CLASS_COUNT} classes, got {0}")]
    WrongClassCount(usize),
    #[error("symbol '{0}' appears in more than one class")]
    DuplicateSymbol(String),
}

/// The full phoneme-to-viseme mapping.
#[derive(Debug, Clone)]
pub struct VisemeTable {
    classes: Vec<VisemeClass>,
    by_symbol: BTreeMap<String, u8>,
    symbols: BTreeSet<String>,
}

const DEFAULT_TABLE: &str = include_str!("../assets/visemes_en20.csv");

impl VisemeTable {
    /// The built-in 20-class English table.
    pub fn default_english() -> VisemeTable {
        VisemeTable::parse(DEFAULT_TABLE).expect("built-in viseme table is valid")
    }

    /// Parse a table from its CSV interchange format:
    /// `class_id,name,flags,member symbols...` with `#` comments.
    pub fn parse(text: &str) -> Result<VisemeTable, VisemeError> {
        let mut classes: Vec<VisemeClass> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() < 4 {
                return Err(VisemeError::BadTable {
                    line,
                    detail: "expected id,name,flags,members...".into(),
                });
            }
            let id: u8 = fields[0].parse().map_err(|_| VisemeError::BadTable {
                line,
                detail: format!("bad class id '{}'", fields[0]),
            })?;
            if usize::from(id) != classes.len() {
                return Err(VisemeError::BadTable {
                    line,
                    detail: format!("class ids must be dense and ascending, got {id}"),
                });
            }
            let mut is_labial = false;
            let mut is_labiodental = false;
            for flag in fields[2].split('|') {
                match flag {
                    "labial" => is_labial = true,
                    "labiodental" => is_labiodental = true,
                    "-" | "" => {}
                    other => {
                        return Err(VisemeError::BadTable {
                            line,
                            detail: format!("unknown flag '{other}'"),
                        })
                    }
                }
            }
            let members: BTreeSet<String> = fields[3..]
                .iter()
                .filter(|s| !s.is_empty())
                .map(|s| s.to_string())
                .collect();
            if members.is_empty() {
                return Err(VisemeError::BadTable {
                    line,
                    detail: "class has no members".into(),
                });
            }
            classes.push(VisemeClass {
                id,
                name: fields[1].to_string(),
                members,
                is_labial,
                is_labiodental,
            });
        }
        if classes.len() != VISEME_CLASS_COUNT {
            return Err(VisemeError::WrongClassCount(classes.len()));
        }
        let mut by_symbol = BTreeMap::new();
        for class in &classes {
            for symbol in &class.members {
                if by_symbol.insert(symbol.clone(), class.id).is_some() {
                    return Err(VisemeError::DuplicateSymbol(symbol.clone()));
                }
            }
        }
        let symbols = by_symbol.keys().cloned().collect();
        Ok(VisemeTable {
            classes,
            by_symbol,
            symbols,
        })
    }

    pub fn classes(&self) -> &[VisemeClass] {
        &self.classes
    }

    pub fn class(&self, id: u8) -> Option<&VisemeClass> {
        self.classes.get(usize::from(id))
    }

    /// The phoneme inventory this table covers (includes `sil`).
    pub fn symbol_set(&self) -> &BTreeSet<String> {
        &self.symbols
    }

    /// Map a phoneme to its viseme class. Silence maps to the neutral class.
    pub fn map_phoneme(&self, symbol: &str) -> Result<&VisemeClass, VisemeError> {
        let id = self
            .by_symbol
            .get(symbol)
            .copied()
            .ok_or_else(|| VisemeError::UnknownSymbol(symbol.to_string()))?;
        Ok(&self.classes[usize::from(id)])
    }

    /// True when `id` names a labial or labiodental class (closed-lip shapes).
    pub fn requires_closure(&self, id: u8) -> bool {
        self.class(id)
            .is_some_and(|c| c.is_labial || c.is_labiodental)
    }
}

/// Convert a transcript to viseme segments. Segment times are preserved;
/// touching neighbors that map to the same class are merged.
pub fn to_viseme_segments(
    transcript: &Transcript,
    table: &VisemeTable,
) -> Result<Vec<VisemeSegment>, VisemeError> {
    let mut out: Vec<VisemeSegment> = Vec::new();
    for seg in &transcript.segments {
        let id = if seg.symbol == SILENCE {
            NEUTRAL_VISEME
        } else {
            table.map_phoneme(&seg.symbol)?.id
        };
        if let Some(last) = out.last_mut() {
            if last.viseme_id == id && (seg.start - last.end).abs() < 1e-9 {
                last.end = seg.end;
                continue;
            }
        }
        out.push(VisemeSegment {
            viseme_id: id,
            start: seg.start,
            end: seg.end,
        });
    }
    Ok(out)
}

/// Extend short labial/labiodental segments backwards into preceding
/// silence so the lip-closure interval spans at least one frame.
///
/// Only segments shorter than `min_duration` are extended. An extended
/// segment keeps its end and grows back to at most `max_extension` total
/// duration, consuming only silence: a preceding gap or neutral segment.
/// Neutral segments shrink (or vanish) as they are consumed; non-neutral
/// segments are never moved or shortened, so the result is overlap-free
/// and the operation is idempotent.
pub fn extend_labials(
    segments: &[VisemeSegment],
    table: &VisemeTable,
    max_extension: f64,
    min_duration: f64,
) -> Vec<VisemeSegment> {
    let mut out: Vec<VisemeSegment> = segments.to_vec();
    for i in 0..out.len() {
        let seg = out[i];
        if !table.requires_closure(seg.viseme_id) || seg.duration() >= min_duration {
            continue;
        }
        // Room reaches back to the nearest non-neutral neighbor (or t=0),
        // consuming any neutral segments in between.
        let mut floor = 0.0;
        for prev in out[..i].iter().rev() {
            if prev.viseme_id != NEUTRAL_VISEME {
                floor = prev.end;
                break;
            }
        }
        let new_start = (seg.end - max_extension).max(floor);
        if new_start >= seg.start {
            continue;
        }
        for prev in out[..i].iter_mut() {
            if prev.viseme_id == NEUTRAL_VISEME && prev.end > new_start {
                prev.end = prev.end.min(new_start).max(prev.start);
            }
        }
        out[i].start = new_start;
    }
    // Drop neutral segments consumed down to zero length.
    out.retain(|s| s.duration() > 1e-12);
    out
}
