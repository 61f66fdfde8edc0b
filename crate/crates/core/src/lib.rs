//! Deterministic facial-animation synthesis and projection-mapping
//! calibration.
//!
//! The animation path turns time-aligned IPA transcripts plus emotion
//! scripts into per-frame morph-target weight timelines: phonemes map to
//! 20 viseme classes, kernel smoothing models coarticulation, short
//! labials are extended and hard-closed so /b p m f v/ always read as
//! closed lips, and the six basic expressions blend over the speech with
//! per-combination compatibility limits. The mesh layer realizes
//! timelines as blended OBJ meshes with independent eye gaze and a
//! clamped 3-DoF neck.
//!
//! The calibration path estimates a piecewise homography between screen
//! and mask coordinates from checkerboard correspondences and pre-distorts
//! a model through the inverse world-view-projection transform, so the
//! projected face lands undistorted on a curved surface.

pub mod calibration;
pub mod coarticulation;
pub mod config;
pub mod expression;
pub mod headpose;
pub mod math;
pub mod mesh;
pub mod pipeline;
pub mod synth;
pub mod transcript;
pub mod viseme;

pub use config::EngineConfig;
pub use pipeline::{synthesize, write_timeline, Timeline};
