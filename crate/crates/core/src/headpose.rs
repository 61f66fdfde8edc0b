//! 3-DoF neck envelope: 150 degrees of yaw, 30 of pitch, 30 of roll,
//! split symmetrically about the neutral pose. Poses are kinematic
//! set-points; no motor dynamics.

use thiserror::Error;

pub const YAW_LIMIT: f64 = 75.0;
pub const PITCH_LIMIT: f64 = 15.0;
pub const ROLL_LIMIT: f64 = 15.0;

/// Neck pose in degrees, always within the mechanism envelope.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NeckPose {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

/// Which axes were clamped to produce a pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClampFlags {
    pub yaw: bool,
    pub pitch: bool,
    pub roll: bool,
}

impl ClampFlags {
    pub fn any(&self) -> bool {
        self.yaw || self.pitch || self.roll
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum HeadPoseError {
    #[error("non-finite pose input")]
    NonFiniteInput,
    #[error("target coincides with head origin")]
    DegenerateTarget,
}

/// Clamp a raw pose into the neck envelope, reporting per-axis clamping.
pub fn clamp_neck(
    yaw: f64,
    pitch: f64,
    roll: f64,
) -> Result<(NeckPose, ClampFlags), HeadPoseError> {
    if !yaw.is_finite() || !pitch.is_finite() || !roll.is_finite() {
        return Err(HeadPoseError::NonFiniteInput);
    }
    let pose = NeckPose {
        yaw: yaw.clamp(-YAW_LIMIT, YAW_LIMIT),
        pitch: pitch.clamp(-PITCH_LIMIT, PITCH_LIMIT),
        roll: roll.clamp(-ROLL_LIMIT, ROLL_LIMIT),
    };
    let flags = ClampFlags {
        yaw: pose.yaw != yaw,
        pitch: pose.pitch != pitch,
        roll: pose.roll != roll,
    };
    Ok((pose, flags))
}

/// Aim the head at a world-space target: yaw/pitch toward it (clamped),
/// roll zero. +z is forward, +y up, +x to the head's right.
pub fn pose_toward(
    target: [f64; 3],
    head_origin: [f64; 3],
) -> Result<(NeckPose, ClampFlags), HeadPoseError> {
    let dx = target[0] - head_origin[0];
    let dy = target[1] - head_origin[1];
    let dz = target[2] - head_origin[2];
    let dist2 = dx * dx + dy * dy + dz * dz;
    if !dist2.is_finite() || dist2 < 1e-18 {
        return Err(HeadPoseError::DegenerateTarget);
    }
    let yaw = dx.atan2(dz).to_degrees();
    let pitch = dy.atan2((dx * dx + dz * dz).sqrt()).to_degrees();
    clamp_neck(yaw, pitch, 0.0)
}
