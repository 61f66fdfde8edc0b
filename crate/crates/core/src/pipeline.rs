//! End-to-end synthesis: transcript + emotion script -> per-frame
//! timeline, plus the timeline interchange format.
//!
//! The timeline file is a `#` comment line, a single-line JSON-style
//! header, a CSV column header, and one fixed-precision CSV row per
//! frame — deliberately diffable so golden tests can compare bytes.

use thiserror::Error;

use crate::coarticulation::{
    enforce_labial_closure, frame_count, sample_track, CoarticulationError, SmoothingKernel,
};
use crate::config::EngineConfig;
use crate::expression::{
    blend_frame, expand_expression_schedule, CompatibilityTable, ExpressionSpec, FrameBlend,
    ALL_EXPRESSIONS, EXPRESSION_COUNT,
};
use crate::transcript::Transcript;
use crate::viseme::{
    extend_labials, to_viseme_segments, VisemeError, VisemeTable, VISEME_CLASS_COUNT,
};

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Viseme(#[from] VisemeError),
    #[error(transparent)]
    Coarticulation(#[from] CoarticulationError),
}

/// A synthesized animation: one [`FrameBlend`] per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub fps: f64,
    pub frames: Vec<FrameBlend>,
}

impl Timeline {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }
}

/// Run the full synthesis pipeline.
///
/// `basic` reproduces the unsmoothed comparison baseline: bandwidth 0
/// and no labial handling (no extension, no closure enforcement).
pub fn synthesize(
    transcript: &Transcript,
    specs: &[ExpressionSpec],
    viseme_table: &VisemeTable,
    compat: &CompatibilityTable,
    config: &EngineConfig,
    basic: bool,
) -> Result<Timeline, PipelineError> {
    let fps = config.fps;
    let n = frame_count(transcript.total_duration, fps);
    if n == 0 {
        return Ok(Timeline {
            fps,
            frames: Vec::new(),
        });
    }

    let mut segments = to_viseme_segments(transcript, viseme_table)?;
    if !basic {
        segments = extend_labials(
            &segments,
            viseme_table,
            config.max_extension,
            config.min_duration,
        );
    }
    let kernel = if basic {
        SmoothingKernel {
            shape: config.kernel_shape,
            bandwidth: 0.0,
        }
    } else {
        SmoothingKernel {
            shape: config.kernel_shape,
            bandwidth: config.bandwidth,
        }
    };
    let mut track = sample_track(&segments, transcript.total_duration, fps, &kernel)?;
    if !basic {
        track = enforce_labial_closure(&track, &segments, viseme_table);
    }

    let schedule = expand_expression_schedule(specs, fps, track.n_frames());
    let frames = track
        .frames
        .iter()
        .zip(schedule.iter())
        .map(|(visemes, active)| blend_frame(visemes, active, compat))
        .collect();
    Ok(Timeline { fps, frames })
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// Serialize a timeline to its interchange format. Identical timelines
/// always produce identical bytes.
pub fn write_timeline(timeline: &Timeline) -> String {
    let mut out = String::from("# visage timeline v1\n");
    out.push_str(&format!(
        "{{\"fps\":{},\"frames\":{},\"visemes\":{},\"expressions\":{}}}\n",
        timeline.fps,
        timeline.n_frames(),
        VISEME_CLASS_COUNT,
        EXPRESSION_COUNT
    ));
    out.push_str("frame,time_s");
    for v in 0..VISEME_CLASS_COUNT {
        out.push_str(&format!(",v{v:02}"));
    }
    for e in ALL_EXPRESSIONS {
        out.push_str(&format!(",up_{}", e.name()));
    }
    for e in ALL_EXPRESSIONS {
        out.push_str(&format!(",lo_{}", e.name()));
    }
    out.push_str(",preblend_id,preblend_w,gaze_yaw,gaze_pitch,neck_yaw,neck_pitch,neck_roll\n");

    for (i, frame) in timeline.frames.iter().enumerate() {
        out.push_str(&format!("{i},{}", fmt6(i as f64 / timeline.fps)));
        for w in &frame.viseme_weights {
            out.push(',');
            out.push_str(&fmt6(*w));
        }
        for w in &frame.expr_upper {
            out.push(',');
            out.push_str(&fmt6(*w));
        }
        for w in &frame.expr_lower {
            out.push(',');
            out.push_str(&fmt6(*w));
        }
        match &frame.preblend {
            Some(pre) => out.push_str(&format!(",{},{}", pre.target_id, fmt6(pre.weight))),
            None => out.push_str(",,0.000000"),
        }
        out.push_str(&format!(
            ",{},{},{},{},{}\n",
            fmt6(frame.gaze_yaw),
            fmt6(frame.gaze_pitch),
            fmt6(frame.neck.yaw),
            fmt6(frame.neck.pitch),
            fmt6(frame.neck.roll)
        ));
    }
    out
}
