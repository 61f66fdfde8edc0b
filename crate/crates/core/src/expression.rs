//! Emotional expression blending over the active viseme.
//!
//! Expressions are applied as `F = F_viseme + lambda * (F_expr_max - F_0)`
//! in weight space: this module only computes weights, the mesh module
//! realizes them as displacements. A compatibility table guards
//! articulation conflicts: each (viseme, expression) pair carries a
//! viseme weight factor `alpha`, a maximum emotion weight `cap`, and
//! optionally a pre-blended replacement target for closed-lip visemes
//! under open-mouth emotions.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::headpose::NeckPose;
use crate::viseme::{VisemeTable, VISEME_CLASS_COUNT};

/// Number of basic expressions.
pub const EXPRESSION_COUNT: usize = 6;

/// The six basic expressions, in canonical (alphabetical) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Expression {
    Anger,
    Disgust,
    Fear,
    Joy,
    Sadness,
    Surprise,
}

pub const ALL_EXPRESSIONS: [Expression; EXPRESSION_COUNT] = [
    Expression::Anger,
    Expression::Disgust,
    Expression::Fear,
    Expression::Joy,
    Expression::Sadness,
    Expression::Surprise,
];

impl Expression {
    pub fn index(self) -> usize {
        match self {
            Expression::Anger => 0,
            Expression::Disgust => 1,
            Expression::Fear => 2,
            Expression::Joy => 3,
            Expression::Sadness => 4,
            Expression::Surprise => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Expression::Anger => "anger",
            Expression::Disgust => "disgust",
            Expression::Fear => "fear",
            Expression::Joy => "joy",
            Expression::Sadness => "sadness",
            Expression::Surprise => "surprise",
        }
    }

    pub fn from_name(name: &str) -> Option<Expression> {
        ALL_EXPRESSIONS.into_iter().find(|e| e.name() == name)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExpressionError {
    #[error("no compatibility entry for viseme {viseme_id} x {expression:?}")]
    MissingEntry {
        viseme_id: u8,
        expression: Expression,
    },
    #[error("emotion script line {line}: {detail}")]
    BadScript { line: usize, detail: String },
    #[error("compatibility table line {line}: {detail}")]
    BadTable { line: usize, detail: String },
}

/// Piecewise-linear intensity over time. Zero outside the point support.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    points: Vec<(f64, f64)>,
}

impl Envelope {
    /// Points must be sorted by time; values are clamped to [0, 1].
    pub fn new(mut points: Vec<(f64, f64)>) -> Envelope {
        for p in &mut points {
            p.1 = p.1.clamp(0.0, 1.0);
        }
        // Collapse zero-width steps, keeping the later value.
        points.dedup_by(|next, prev| {
            if (next.0 - prev.0).abs() < 1e-12 {
                prev.1 = next.1;
                true
            } else {
                false
            }
        });
        Envelope { points }
    }

    /// Trapezoid over `[start, end]` rising to `peak` in `attack` seconds
    /// and falling over the final `release` seconds. Ramps that do not fit
    /// are scaled down proportionally (degenerating to a triangle).
    pub fn trapezoid(start: f64, end: f64, peak: f64, attack: f64, release: f64) -> Envelope {
        let span = end - start;
        let (attack, release) = if attack + release > span && attack + release > 0.0 {
            let scale = span / (attack + release);
            (attack * scale, release * scale)
        } else {
            (attack, release)
        };
        Envelope::new(vec![
            (start, 0.0),
            (start + attack, peak),
            (end - release, peak),
            (end, 0.0),
        ])
    }

    pub fn eval(&self, t: f64) -> f64 {
        let Some(first) = self.points.first() else {
            return 0.0;
        };
        let last = self.points.last().unwrap();
        if t < first.0 || t > last.0 {
            return 0.0;
        }
        for pair in self.points.windows(2) {
            let (t0, v0) = pair[0];
            let (t1, v1) = pair[1];
            if t <= t1 {
                if t1 - t0 < 1e-12 {
                    return v1;
                }
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        last.1
    }

    pub fn end(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.0)
    }
}

/// A scheduled expression: constant `intensity` when no envelope is given,
/// otherwise the envelope modulates intensity over time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionSpec {
    pub expression: Expression,
    pub intensity: f64,
    pub envelope: Option<Envelope>,
}

impl ExpressionSpec {
    pub fn constant(expression: Expression, intensity: f64) -> ExpressionSpec {
        ExpressionSpec {
            expression,
            intensity: intensity.clamp(0.0, 1.0),
            envelope: None,
        }
    }

    fn lambda_at(&self, t: f64) -> f64 {
        match &self.envelope {
            None => self.intensity,
            Some(env) => env.eval(t),
        }
    }
}

/// Per-pair compatibility values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatEntry {
    /// Factor applied to the viseme weights while this expression dominates.
    pub alpha: f64,
    /// Maximum emotion weight for this viseme/expression combination.
    pub cap: f64,
}

impl CompatEntry {
    pub const NEUTRAL: CompatEntry = CompatEntry {
        alpha: 1.0,
        cap: 1.0,
    };
}

/// Viseme/expression compatibility: per-pair (alpha, cap) plus pre-blend
/// substitutions for closed-lip visemes under open-mouth emotions.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityTable {
    entries: [[Option<CompatEntry>; EXPRESSION_COUNT]; VISEME_CLASS_COUNT],
    preblends: BTreeMap<(u8, Expression), String>,
}

/// Open-mouth expressions that conflict with closed-lip visemes.
pub const OPEN_MOUTH_EXPRESSIONS: [Expression; 3] =
    [Expression::Surprise, Expression::Fear, Expression::Anger];

impl CompatibilityTable {
    /// Table with no entries at all; every lookup is a `MissingEntry`.
    pub fn empty() -> CompatibilityTable {
        CompatibilityTable {
            entries: [[None; EXPRESSION_COUNT]; VISEME_CLASS_COUNT],
            preblends: BTreeMap::new(),
        }
    }

    /// The default table: (1.0, 1.0) everywhere except the conflicting
    /// pairs. Puckered-mouth classes under joy get cap 0.3 (a placeholder
    /// tuning value, not a published one), and the labial/labiodental
    /// classes get pre-blend substitutions under the open-mouth emotions.
    pub fn default_table(viseme_table: &VisemeTable) -> CompatibilityTable {
        let mut table = CompatibilityTable {
            entries: [[Some(CompatEntry::NEUTRAL); EXPRESSION_COUNT]; VISEME_CLASS_COUNT],
            preblends: BTreeMap::new(),
        };
        for class in viseme_table.classes() {
            let rounded = matches!(class.name.as_str(), "w" | "oh" | "uw");
            if rounded {
                table.entries[usize::from(class.id)][Expression::Joy.index()] = Some(CompatEntry {
                    alpha: 1.0,
                    cap: 0.3,
                });
            }
            if class.is_labial || class.is_labiodental {
                for expr in OPEN_MOUTH_EXPRESSIONS {
                    table.preblends.insert(
                        (class.id, expr),
                        format!("preblend_{}_{}", class.name, expr.name()),
                    );
                }
            }
        }
        table
    }

    /// Parse rows `viseme_id,expression,alpha,cap[,preblend_id]` into a
    /// sparse table; combinations not listed stay missing.
    pub fn sparse_from_csv(text: &str) -> Result<CompatibilityTable, ExpressionError> {
        let mut table = CompatibilityTable::empty();
        table.apply_csv(text)?;
        Ok(table)
    }

    /// Parse rows as overrides on top of the default table.
    pub fn with_overrides_from_csv(
        viseme_table: &VisemeTable,
        text: &str,
    ) -> Result<CompatibilityTable, ExpressionError> {
        let mut table = CompatibilityTable::default_table(viseme_table);
        table.apply_csv(text)?;
        Ok(table)
    }

    fn apply_csv(&mut self, text: &str) -> Result<(), ExpressionError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() < 4 || fields.len() > 5 {
                return Err(ExpressionError::BadTable {
                    line,
                    detail: "expected viseme_id,expression,alpha,cap[,preblend_id]".into(),
                });
            }
            let viseme_id: u8 = fields[0].parse().map_err(|_| ExpressionError::BadTable {
                line,
                detail: format!("bad viseme id '{}'", fields[0]),
            })?;
            if usize::from(viseme_id) >= VISEME_CLASS_COUNT {
                return Err(ExpressionError::BadTable {
                    line,
                    detail: format!("viseme id {viseme_id} out of range"),
                });
            }
            let expression =
                Expression::from_name(fields[1]).ok_or_else(|| ExpressionError::BadTable {
                    line,
                    detail: format!("unknown expression '{}'", fields[1]),
                })?;
            let alpha: f64 = fields[2].parse().map_err(|_| ExpressionError::BadTable {
                line,
                detail: format!("bad alpha '{}'", fields[2]),
            })?;
            let cap: f64 = fields[3].parse().map_err(|_| ExpressionError::BadTable {
                line,
                detail: format!("bad cap '{}'", fields[3]),
            })?;
            if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&cap) {
                return Err(ExpressionError::BadTable {
                    line,
                    detail: "alpha and cap must lie in [0,1]".into(),
                });
            }
            self.entries[usize::from(viseme_id)][expression.index()] =
                Some(CompatEntry { alpha, cap });
            if let Some(id) = fields.get(4) {
                if !id.is_empty() {
                    self.preblends
                        .insert((viseme_id, expression), id.to_string());
                }
            }
        }
        Ok(())
    }

    /// Look up (alpha, cap) for a combination.
    pub fn lookup(
        &self,
        viseme_id: u8,
        expression: Expression,
    ) -> Result<CompatEntry, ExpressionError> {
        self.entries
            .get(usize::from(viseme_id))
            .and_then(|row| row[expression.index()])
            .ok_or(ExpressionError::MissingEntry {
                viseme_id,
                expression,
            })
    }

    pub fn preblend_for(&self, viseme_id: u8, expression: Expression) -> Option<&str> {
        self.preblends
            .get(&(viseme_id, expression))
            .map(String::as_str)
    }

    pub fn preblend_target_ids(&self) -> impl Iterator<Item = &str> {
        self.preblends.values().map(String::as_str)
    }

    /// True when every in-range combination has an entry.
    pub fn is_complete(&self) -> bool {
        self.entries
            .iter()
            .all(|row| row.iter().all(Option::is_some))
    }
}

/// An active pre-blend target and its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PreblendWeight {
    pub target_id: String,
    pub weight: f64,
}

/// Complete pose for one frame: viseme weights, upper/lower expression
/// weights, optional pre-blend substitution, gaze angles and neck pose.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBlend {
    pub viseme_weights: [f64; VISEME_CLASS_COUNT],
    pub expr_upper: [f64; EXPRESSION_COUNT],
    pub expr_lower: [f64; EXPRESSION_COUNT],
    pub preblend: Option<PreblendWeight>,
    pub gaze_yaw: f64,
    pub gaze_pitch: f64,
    pub neck: NeckPose,
}

impl FrameBlend {
    pub fn neutral() -> FrameBlend {
        FrameBlend {
            viseme_weights: [0.0; VISEME_CLASS_COUNT],
            expr_upper: [0.0; EXPRESSION_COUNT],
            expr_lower: [0.0; EXPRESSION_COUNT],
            preblend: None,
            gaze_yaw: 0.0,
            gaze_pitch: 0.0,
            neck: NeckPose::default(),
        }
    }
}

/// Index of the dominant viseme (ties resolve to the lowest id).
pub fn dominant_viseme(weights: &[f64; VISEME_CLASS_COUNT]) -> u8 {
    let mut best = 0usize;
    for (v, w) in weights.iter().enumerate().skip(1) {
        if *w > weights[best] {
            best = v;
        }
    }
    best as u8
}

/// Blend the active expressions over one frame of viseme weights.
///
/// The dominant viseme selects the compatibility row; each active
/// expression's intensity is capped by it, applied to both face regions,
/// and the lower region is replaced by a pre-blend target when the table
/// declares one for the combination. Missing table entries fall back to
/// (1.0, 1.0); the asset-loading layer is expected to reject incomplete
/// tables up front.
pub fn blend_frame(
    frame_visemes: &[f64; VISEME_CLASS_COUNT],
    active: &[(Expression, f64)],
    table: &CompatibilityTable,
) -> FrameBlend {
    let dominant = dominant_viseme(frame_visemes);
    let dominant_weight = frame_visemes[usize::from(dominant)];

    // Fold duplicates by max and drop zero intensities.
    let mut lambda: [f64; EXPRESSION_COUNT] = [0.0; EXPRESSION_COUNT];
    for (expr, l) in active {
        let slot = &mut lambda[expr.index()];
        *slot = slot.max(l.clamp(0.0, 1.0));
    }

    let mut out = FrameBlend::neutral();
    let mut effective: [f64; EXPRESSION_COUNT] = [0.0; EXPRESSION_COUNT];
    for expr in ALL_EXPRESSIONS {
        let l = lambda[expr.index()];
        if l <= 0.0 {
            continue;
        }
        let entry = table.lookup(dominant, expr).unwrap_or(CompatEntry::NEUTRAL);
        let capped = l.min(entry.cap).clamp(0.0, 1.0);
        effective[expr.index()] = capped;
        out.expr_upper[expr.index()] = capped;
        out.expr_lower[expr.index()] = capped;
    }

    // At most one pre-blend per frame: the strongest active expression
    // holding a substitution for the dominant viseme wins.
    let mut winner: Option<Expression> = None;
    for expr in ALL_EXPRESSIONS {
        if lambda[expr.index()] <= 0.0 {
            continue;
        }
        if table.preblend_for(dominant, expr).is_none() {
            continue;
        }
        let better = match winner {
            None => true,
            Some(w) => effective[expr.index()] > effective[w.index()],
        };
        if better {
            winner = Some(expr);
        }
    }

    // Viseme weights scale by the strongest active expression's alpha.
    let mut strongest: Option<Expression> = None;
    for expr in ALL_EXPRESSIONS {
        if lambda[expr.index()] <= 0.0 {
            continue;
        }
        let better = match strongest {
            None => true,
            Some(s) => effective[expr.index()] > effective[s.index()],
        };
        if better {
            strongest = Some(expr);
        }
    }
    let alpha = strongest
        .map(|e| {
            table
                .lookup(dominant, e)
                .unwrap_or(CompatEntry::NEUTRAL)
                .alpha
        })
        .unwrap_or(1.0);

    for (slot, w) in out.viseme_weights.iter_mut().zip(frame_visemes.iter()) {
        *slot = (w * alpha).clamp(0.0, 1.0);
    }

    if let Some(expr) = winner {
        let target_id = table.preblend_for(dominant, expr).unwrap().to_string();
        out.preblend = Some(PreblendWeight {
            target_id,
            weight: dominant_weight.clamp(0.0, 1.0),
        });
        out.expr_lower[expr.index()] = 0.0;
        // The pre-blend target replaces the viseme itself.
        out.viseme_weights[usize::from(dominant)] = 0.0;
    }

    out
}

/// Evaluate every spec at each frame time, returning the active
/// (expression, lambda) pairs per frame. Duplicate expressions merge by
/// maximum.
pub fn expand_expression_schedule(
    specs: &[ExpressionSpec],
    fps: f64,
    n_frames: usize,
) -> Vec<Vec<(Expression, f64)>> {
    let mut out = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let t = i as f64 / fps;
        let mut lambda: [f64; EXPRESSION_COUNT] = [0.0; EXPRESSION_COUNT];
        for spec in specs {
            let l = spec.lambda_at(t).clamp(0.0, 1.0);
            let slot = &mut lambda[spec.expression.index()];
            *slot = slot.max(l);
        }
        out.push(
            ALL_EXPRESSIONS
                .into_iter()
                .filter(|e| lambda[e.index()] > 0.0)
                .map(|e| (e, lambda[e.index()]))
                .collect(),
        );
    }
    out
}

/// Parse an emotion script: rows `expression,start_ms,end_ms,peak_lambda`
/// become trapezoid envelopes with the given attack/release times.
pub fn parse_emotion_script(
    text: &str,
    attack: f64,
    release: f64,
) -> Result<Vec<ExpressionSpec>, ExpressionError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(ExpressionError::BadScript {
                line,
                detail: "expected expression,start_ms,end_ms,peak_lambda".into(),
            });
        }
        let expression =
            Expression::from_name(fields[0]).ok_or_else(|| ExpressionError::BadScript {
                line,
                detail: format!("unknown expression '{}'", fields[0]),
            })?;
        let start_ms: f64 = fields[1].parse().map_err(|_| ExpressionError::BadScript {
            line,
            detail: format!("bad start '{}'", fields[1]),
        })?;
        let end_ms: f64 = fields[2].parse().map_err(|_| ExpressionError::BadScript {
            line,
            detail: format!("bad end '{}'", fields[2]),
        })?;
        let peak: f64 = fields[3].parse().map_err(|_| ExpressionError::BadScript {
            line,
            detail: format!("bad peak '{}'", fields[3]),
        })?;
        if end_ms <= start_ms {
            return Err(ExpressionError::BadScript {
                line,
                detail: format!("end {end_ms} <= start {start_ms}"),
            });
        }
        if !(0.0..=1.0).contains(&peak) {
            return Err(ExpressionError::BadScript {
                line,
                detail: format!("peak {peak} outside [0,1]"),
            });
        }
        out.push(ExpressionSpec {
            expression,
            intensity: peak,
            envelope: Some(Envelope::trapezoid(
                start_ms / 1000.0,
                end_ms / 1000.0,
                peak,
                attack,
                release,
            )),
        });
    }
    Ok(out)
}
