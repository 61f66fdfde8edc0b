//! Coarticulation by kernel smoothing.
//!
//! Viseme segments are sampled into per-frame weight vectors with a
//! Nadaraya-Watson smoother over segment indicator functions: the weight
//! of class `v` at frame time `t` is the kernel mass falling on `v`'s
//! segments divided by the kernel mass over all segments. Gaps are filled
//! with neutral segments before sampling so silence pulls the face back
//! to the neutral pose smoothly, and the weights always sum to one.
//!
//! Bandwidth 0 selects the unsmoothed baseline: each frame gets the
//! active segment's viseme with weight 1.

use thiserror::Error;

use crate::math::erf;
use crate::viseme::{VisemeSegment, VisemeTable, NEUTRAL_VISEME, VISEME_CLASS_COUNT};

/// Denominator threshold below which a frame is treated as pure silence.
pub const SILENCE_DENOMINATOR_EPS: f64 = 1e-6;

/// Gaussian kernels are truncated at this many bandwidths.
pub const GAUSSIAN_TRUNCATION: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelShape {
    Gaussian,
    Triangular,
}

/// Smoothing kernel. `bandwidth` is in seconds; 0 disables smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingKernel {
    pub shape: KernelShape,
    pub bandwidth: f64,
}

impl SmoothingKernel {
    pub fn gaussian(bandwidth: f64) -> Self {
        SmoothingKernel {
            shape: KernelShape::Gaussian,
            bandwidth,
        }
    }

    pub fn triangular(bandwidth: f64) -> Self {
        SmoothingKernel {
            shape: KernelShape::Triangular,
            bandwidth,
        }
    }

    /// Half-width of the kernel's support.
    pub fn support(&self) -> f64 {
        match self.shape {
            KernelShape::Gaussian => GAUSSIAN_TRUNCATION * self.bandwidth,
            KernelShape::Triangular => self.bandwidth,
        }
    }

    /// Closed-form `integral of K(t - tau) d tau` over `[a, b]`.
    pub fn segment_mass(&self, t: f64, a: f64, b: f64) -> f64 {
        let lo = a.max(t - self.support());
        let hi = b.min(t + self.support());
        if hi <= lo {
            return 0.0;
        }
        match self.shape {
            KernelShape::Gaussian => {
                let sigma = self.bandwidth;
                let scale = sigma * std::f64::consts::SQRT_2;
                let c = sigma * (std::f64::consts::PI / 2.0).sqrt();
                c * (erf((hi - t) / scale) - erf((lo - t) / scale))
            }
            KernelShape::Triangular => {
                let sigma = self.bandwidth;
                // Antiderivative of max(0, 1 - |u|/sigma) from -sigma.
                let g = |u: f64| -> f64 {
                    let u = u.clamp(-sigma, sigma);
                    if u <= 0.0 {
                        (u + sigma) * (u + sigma) / (2.0 * sigma)
                    } else {
                        sigma / 2.0 + u - u * u / (2.0 * sigma)
                    }
                };
                g(hi - t) - g(lo - t)
            }
        }
    }
}

/// Per-frame viseme weight vectors at a fixed frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct VisemeTrack {
    pub fps: f64,
    pub frames: Vec<[f64; VISEME_CLASS_COUNT]>,
}

impl VisemeTrack {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn frame_time(&self, index: usize) -> f64 {
        index as f64 / self.fps
    }

    /// Timeline interchange format: a header line with the rate and class
    /// count, then one CSV row of weights per frame.
    pub fn to_csv(&self) -> String {
        let mut out = format!("fps={} classes={}\n", self.fps, VISEME_CLASS_COUNT);
        for frame in &self.frames {
            let row: Vec<String> = frame.iter().map(|w| w.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CoarticulationError {
    #[error("empty timeline: duration must be positive")]
    EmptyTimeline,
}

/// Number of frames covering `duration` at `fps` (guarding against
/// binary-representation spill like 0.1 * 30 = 3.0000000000000004).
pub fn frame_count(duration: f64, fps: f64) -> usize {
    (duration * fps - 1e-9).ceil().max(0.0) as usize
}

/// Cover `[0, horizon]` completely: input segments plus neutral fillers
/// for every gap.
fn fill_gaps(segments: &[VisemeSegment], horizon: f64) -> Vec<VisemeSegment> {
    let mut out = Vec::with_capacity(segments.len() * 2 + 1);
    let mut cursor = 0.0f64;
    for seg in segments {
        if seg.start > cursor + 1e-12 {
            out.push(VisemeSegment {
                viseme_id: NEUTRAL_VISEME,
                start: cursor,
                end: seg.start,
            });
        }
        out.push(*seg);
        cursor = cursor.max(seg.end);
    }
    if horizon > cursor + 1e-12 {
        out.push(VisemeSegment {
            viseme_id: NEUTRAL_VISEME,
            start: cursor,
            end: horizon,
        });
    }
    out
}

/// Sample segments into a smooth per-frame weight track.
///
/// Frame `i` is evaluated at `t = i / fps`; the frame count is
/// `ceil(duration * fps)`.
pub fn sample_track(
    segments: &[VisemeSegment],
    duration: f64,
    fps: f64,
    kernel: &SmoothingKernel,
) -> Result<VisemeTrack, CoarticulationError> {
    let horizon = duration.max(segments.last().map_or(0.0, |s| s.end));
    let n = frame_count(horizon, fps);
    if n == 0 {
        return Err(CoarticulationError::EmptyTimeline);
    }
    let covered = fill_gaps(segments, horizon);
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fps;
        frames.push(if kernel.bandwidth <= 0.0 {
            basic_frame(&covered, t)
        } else {
            smoothed_frame(&covered, t, kernel)
        });
    }
    Ok(VisemeTrack { fps, frames })
}

fn neutral_frame() -> [f64; VISEME_CLASS_COUNT] {
    let mut w = [0.0; VISEME_CLASS_COUNT];
    w[usize::from(NEUTRAL_VISEME)] = 1.0;
    w
}

fn basic_frame(covered: &[VisemeSegment], t: f64) -> [f64; VISEME_CLASS_COUNT] {
    let active = covered
        .iter()
        .find(|s| s.start <= t && t < s.end)
        .map_or(NEUTRAL_VISEME, |s| s.viseme_id);
    let mut w = [0.0; VISEME_CLASS_COUNT];
    w[usize::from(active)] = 1.0;
    w
}

fn smoothed_frame(
    covered: &[VisemeSegment],
    t: f64,
    kernel: &SmoothingKernel,
) -> [f64; VISEME_CLASS_COUNT] {
    let mut mass = [0.0f64; VISEME_CLASS_COUNT];
    let mut total = 0.0f64;
    for seg in covered {
        let m = kernel.segment_mass(t, seg.start, seg.end);
        mass[usize::from(seg.viseme_id)] += m;
        total += m;
    }
    if total < SILENCE_DENOMINATOR_EPS {
        return neutral_frame();
    }
    let mut w = [0.0; VISEME_CLASS_COUNT];
    for (out, m) in w.iter_mut().zip(mass.iter()) {
        *out = (m / total).clamp(0.0, 1.0);
    }
    w
}

/// Guarantee a fully closed mouth for every labial/labiodental segment:
/// the frame nearest the segment midpoint is replaced by the pure labial
/// vector. Frames whose times fall inside the segment are preferred; a
/// sub-frame segment wedged between two frame times gets the nearest
/// frame overall, so the guarantee holds unconditionally.
pub fn enforce_labial_closure(
    track: &VisemeTrack,
    segments: &[VisemeSegment],
    table: &VisemeTable,
) -> VisemeTrack {
    let mut out = track.clone();
    let n = out.n_frames();
    if n == 0 {
        return out;
    }
    for seg in segments {
        if !table.requires_closure(seg.viseme_id) {
            continue;
        }
        let mid = 0.5 * (seg.start + seg.end);
        let lo = ((seg.start * track.fps - 1e-9).ceil().max(0.0) as usize).min(n - 1);
        let hi = ((seg.end * track.fps + 1e-9).floor().max(0.0) as usize).min(n - 1);
        let inside = lo <= hi && {
            let t_lo = lo as f64 / track.fps;
            t_lo + 1e-12 >= seg.start
        };
        let chosen = if inside {
            (lo..=hi)
                .min_by(|&a, &b| {
                    let da = (a as f64 / track.fps - mid).abs();
                    let db = (b as f64 / track.fps - mid).abs();
                    da.partial_cmp(&db).unwrap().then(a.cmp(&b))
                })
                .unwrap()
        } else {
            ((mid * track.fps).round().max(0.0) as usize).min(n - 1)
        };
        let mut pure = [0.0; VISEME_CLASS_COUNT];
        pure[usize::from(seg.viseme_id)] = 1.0;
        out.frames[chosen] = pure;
    }
    out
}
