//! Multi-target morphing of triangle meshes.
//!
//! A [`MorphSet`] holds a neutral mesh plus per-target displacement
//! fields (visemes, upper/lower expressions, pre-blends). Blending adds
//! weighted displacements to the neutral in a fixed order so results are
//! deterministic to the bit. Eye submeshes never deform; they rotate
//! rigidly via [`apply_gaze`].

mod morphset;
mod obj;

pub use morphset::{load_morphset, write_morphset, EyeSubmesh, MorphSetBuilder, TargetSource};
pub use obj::{parse_obj, write_obj};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expression::{Expression, FrameBlend, EXPRESSION_COUNT};
use crate::math::Mat3;

/// Maximum eye yaw magnitude the assets tolerate, in degrees.
pub const GAZE_YAW_LIMIT: f64 = 60.0;
/// Maximum eye pitch magnitude the assets tolerate, in degrees.
pub const GAZE_PITCH_LIMIT: f64 = 40.0;

/// Landmark names every morph set must provide.
pub const LANDMARK_NOSE_TIP: &str = "nose_tip";
pub const LANDMARK_LEFT_EYE: &str = "left_eye_center";
pub const LANDMARK_RIGHT_EYE: &str = "right_eye_center";

/// A triangle mesh with named landmark vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
    pub landmarks: BTreeMap<String, u32>,
}

impl Mesh {
    pub fn landmark(&self, name: &str) -> Result<u32, MeshError> {
        self.landmarks
            .get(name)
            .copied()
            .ok_or_else(|| MeshError::MissingLandmark(name.to_string()))
    }
}

/// Face region a vertex belongs to, split at the tip of the nose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Upper,
    Lower,
    Both,
}

/// What a morph target contributes to a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Viseme(u8),
    ExpressionUpper(Expression),
    ExpressionLower(Expression),
    Preblend,
}

/// Per-vertex displacement field relative to the neutral mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphTarget {
    pub id: String,
    pub kind: TargetKind,
    pub displacements: Vec<[f64; 3]>,
    pub region_mask: Vec<Region>,
    /// FACS action units this target realizes (metadata only, e.g. joy =
    /// AU 6 + AU 12); empty when undeclared.
    pub action_units: Vec<u8>,
}

/// Neutral mesh plus every displacement target and the eye submeshes.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphSet {
    pub neutral: Mesh,
    pub targets: BTreeMap<String, MorphTarget>,
    /// Target id per viseme class, indexed by class id.
    pub viseme_targets: Vec<String>,
    /// Target id per expression, upper face, indexed by `Expression::index`.
    pub expr_upper_targets: Vec<String>,
    /// Target id per expression, lower face.
    pub expr_lower_targets: Vec<String>,
    pub eyes: Vec<EyeSubmesh>,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("unknown morph target id '{0}'")]
    UnknownTargetId(String),
    #[error("gaze ({yaw}, {pitch}) outside asset-safe limits (+-60 yaw, +-40 pitch)")]
    GazeOutOfRange { yaw: f64, pitch: f64 },
    #[error("gaze target coincides with the eye center")]
    DegenerateTarget,
    #[error("topology mismatch in '{target_id}': {detail}")]
    TopologyMismatch { target_id: String, detail: String },
    #[error("missing landmark '{0}'")]
    MissingLandmark(String),
    #[error("incomplete morph set: {0}")]
    IncompleteMorphSet(String),
    #[error("obj line {line}: {detail}")]
    Obj { line: usize, detail: String },
    #[error("manifest line {line}: {detail}")]
    Manifest { line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MorphSet {
    pub fn vertex_count(&self) -> usize {
        self.neutral.vertices.len()
    }

    pub fn target(&self, id: &str) -> Result<&MorphTarget, MeshError> {
        self.targets
            .get(id)
            .ok_or_else(|| MeshError::UnknownTargetId(id.to_string()))
    }

    /// Vertex indices covered by any eye submesh.
    pub fn eye_vertex_set(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertex_count()];
        for eye in &self.eyes {
            for &idx in &eye.vertices {
                if let Some(slot) = mask.get_mut(idx as usize) {
                    *slot = true;
                }
            }
        }
        mask
    }
}

fn accumulate(vertices: &mut [[f64; 3]], target: &MorphTarget, weight: f64) {
    if weight == 0.0 {
        return;
    }
    for (v, d) in vertices.iter_mut().zip(target.displacements.iter()) {
        v[0] += weight * d[0];
        v[1] += weight * d[1];
        v[2] += weight * d[2];
    }
}

/// Realize a [`FrameBlend`] as a mesh:
/// `neutral + sum(w_v * viseme_v) + sum(u_j * upper_j) + sum(l_j * lower_j)
/// + preblend`.
///
/// Terms are added in that fixed order (ascending ids within each group)
/// and zero weights are skipped, so equal inputs give bit-equal outputs.
pub fn blend_mesh(set: &MorphSet, fb: &FrameBlend) -> Result<Mesh, MeshError> {
    let mut vertices = set.neutral.vertices.clone();
    for (class, target_id) in set.viseme_targets.iter().enumerate() {
        let w = fb.viseme_weights[class];
        if w != 0.0 {
            accumulate(&mut vertices, set.target(target_id)?, w);
        }
    }
    for j in 0..EXPRESSION_COUNT {
        let w = fb.expr_upper[j];
        if w != 0.0 {
            accumulate(&mut vertices, set.target(&set.expr_upper_targets[j])?, w);
        }
    }
    for j in 0..EXPRESSION_COUNT {
        let w = fb.expr_lower[j];
        if w != 0.0 {
            accumulate(&mut vertices, set.target(&set.expr_lower_targets[j])?, w);
        }
    }
    if let Some(pre) = &fb.preblend {
        let target = set.target(&pre.target_id)?;
        accumulate(&mut vertices, target, pre.weight);
    }
    Ok(Mesh {
        vertices,
        faces: set.neutral.faces.clone(),
        landmarks: set.neutral.landmarks.clone(),
    })
}

/// Rotation matrix for eye gaze: pitch about +x, then yaw about +y,
/// composed for row vectors (`v * R`). +z is forward, +y up.
pub fn gaze_rotation(yaw_deg: f64, pitch_deg: f64) -> Mat3 {
    let (sy, cy) = yaw_deg.to_radians().sin_cos();
    let (sp, cp) = pitch_deg.to_radians().sin_cos();
    let pitch = Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]]);
    let yaw = Mat3::from_rows([[cy, 0.0, -sy], [0.0, 1.0, 0.0], [sy, 0.0, cy]]);
    pitch.mul(&yaw)
}

/// Rigidly rotate each eye submesh about its center landmark. Non-eye
/// vertices are returned bit-identical; zero angles return the mesh
/// unchanged.
pub fn apply_gaze(mesh: &Mesh, set: &MorphSet, yaw: f64, pitch: f64) -> Result<Mesh, MeshError> {
    if yaw.abs() > GAZE_YAW_LIMIT
        || pitch.abs() > GAZE_PITCH_LIMIT
        || !yaw.is_finite()
        || !pitch.is_finite()
    {
        return Err(MeshError::GazeOutOfRange { yaw, pitch });
    }
    if yaw == 0.0 && pitch == 0.0 {
        return Ok(mesh.clone());
    }
    let rot = gaze_rotation(yaw, pitch);
    let mut out = mesh.clone();
    for eye in &set.eyes {
        let center_idx = mesh.landmark(&eye.center_landmark)? as usize;
        let c = mesh.vertices[center_idx];
        for &idx in &eye.vertices {
            let v = mesh.vertices[idx as usize];
            let rel = [v[0] - c[0], v[1] - c[1], v[2] - c[2]];
            let mut rotated = [0.0; 3];
            for (j, slot) in rotated.iter_mut().enumerate() {
                *slot = rel[0] * rot.m[0][j] + rel[1] * rot.m[1][j] + rel[2] * rot.m[2][j];
            }
            out.vertices[idx as usize] = [rotated[0] + c[0], rotated[1] + c[1], rotated[2] + c[2]];
        }
    }
    Ok(out)
}

/// Yaw/pitch (degrees) that aim the +z forward axis from `eye_center` at
/// `target`.
pub fn gaze_to_angles(eye_center: [f64; 3], target: [f64; 3]) -> Result<(f64, f64), MeshError> {
    let dx = target[0] - eye_center[0];
    let dy = target[1] - eye_center[1];
    let dz = target[2] - eye_center[2];
    let dist2 = dx * dx + dy * dy + dz * dz;
    if !dist2.is_finite() || dist2 < 1e-18 {
        return Err(MeshError::DegenerateTarget);
    }
    let yaw = dx.atan2(dz).to_degrees();
    let pitch = dy.atan2((dx * dx + dz * dz).sqrt()).to_degrees();
    Ok((yaw, pitch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expression::PreblendWeight;
    use crate::synth;
    use crate::viseme::{VisemeTable, VISEME_CLASS_COUNT};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn test_set() -> MorphSet {
        synth::test_head(&VisemeTable::default_english())
    }

    #[test]
    fn zero_blend_is_bitwise_neutral() {
        let set = test_set();
        let fb = FrameBlend::neutral();
        let mesh = blend_mesh(&set, &fb).unwrap();
        assert_eq!(mesh.vertices, set.neutral.vertices);
        assert_eq!(mesh.faces, set.neutral.faces);
    }

    #[test]
    fn full_joy_on_silence_is_neutral_plus_both_halves() {
        let set = test_set();
        let mut fb = FrameBlend::neutral();
        fb.viseme_weights[0] = 1.0;
        fb.expr_upper[Expression::Joy.index()] = 1.0;
        fb.expr_lower[Expression::Joy.index()] = 1.0;
        let mesh = blend_mesh(&set, &fb).unwrap();
        let upper = set
            .target(&set.expr_upper_targets[Expression::Joy.index()])
            .unwrap();
        let lower = set
            .target(&set.expr_lower_targets[Expression::Joy.index()])
            .unwrap();
        for i in 0..set.vertex_count() {
            for k in 0..3 {
                let expect = set.neutral.vertices[i][k]
                    + upper.displacements[i][k]
                    + lower.displacements[i][k];
                assert!((mesh.vertices[i][k] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn half_weights_match_naive_sum() {
        let set = test_set();
        let mut fb = FrameBlend::neutral();
        fb.viseme_weights[3] = 0.5;
        fb.viseme_weights[13] = 0.5;
        let mesh = blend_mesh(&set, &fb).unwrap();
        let t3 = set.target(&set.viseme_targets[3]).unwrap();
        let t13 = set.target(&set.viseme_targets[13]).unwrap();
        for i in 0..set.vertex_count() {
            for k in 0..3 {
                let expect = set.neutral.vertices[i][k]
                    + 0.5 * t3.displacements[i][k]
                    + 0.5 * t13.displacements[i][k];
                assert!((mesh.vertices[i][k] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unknown_preblend_id_rejected() {
        let set = test_set();
        let mut fb = FrameBlend::neutral();
        fb.preblend = Some(PreblendWeight {
            target_id: "no_such_target".into(),
            weight: 1.0,
        });
        assert!(matches!(
            blend_mesh(&set, &fb),
            Err(MeshError::UnknownTargetId(_))
        ));
    }

    #[test]
    fn blend_is_linear_in_weights() {
        let set = test_set();
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..20 {
            let mut w1 = FrameBlend::neutral();
            let mut w2 = FrameBlend::neutral();
            for v in 0..VISEME_CLASS_COUNT {
                w1.viseme_weights[v] = rng.random_range(0.0..0.5);
                w2.viseme_weights[v] = rng.random_range(0.0..0.5);
            }
            for j in 0..EXPRESSION_COUNT {
                w1.expr_upper[j] = rng.random_range(0.0..0.5);
                w2.expr_lower[j] = rng.random_range(0.0..0.5);
            }
            let mut sum = FrameBlend::neutral();
            for v in 0..VISEME_CLASS_COUNT {
                sum.viseme_weights[v] = w1.viseme_weights[v] + w2.viseme_weights[v];
            }
            for j in 0..EXPRESSION_COUNT {
                sum.expr_upper[j] = w1.expr_upper[j] + w2.expr_upper[j];
                sum.expr_lower[j] = w1.expr_lower[j] + w2.expr_lower[j];
            }
            let a = blend_mesh(&set, &w1).unwrap();
            let b = blend_mesh(&set, &w2).unwrap();
            let c = blend_mesh(&set, &sum).unwrap();
            for i in 0..set.vertex_count() {
                for k in 0..3 {
                    let lhs = c.vertices[i][k];
                    let rhs = a.vertices[i][k] + b.vertices[i][k] - set.neutral.vertices[i][k];
                    assert!((lhs - rhs).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn lower_only_blend_leaves_upper_bitwise_neutral() {
        let set = test_set();
        let nose = set.neutral.landmark(LANDMARK_NOSE_TIP).unwrap() as usize;
        let nose_y = set.neutral.vertices[nose][1];
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..20 {
            let mut fb = FrameBlend::neutral();
            for j in 0..EXPRESSION_COUNT {
                fb.expr_lower[j] = rng.random_range(0.0..1.0);
            }
            for v in 0..VISEME_CLASS_COUNT {
                fb.viseme_weights[v] = rng.random_range(0.0..0.3);
            }
            let mesh = blend_mesh(&set, &fb).unwrap();
            for (i, v) in mesh.vertices.iter().enumerate() {
                if set.neutral.vertices[i][1] > nose_y {
                    assert_eq!(*v, set.neutral.vertices[i], "upper vertex {i} moved");
                }
            }
        }
    }

    #[test]
    fn upper_only_blend_leaves_lower_bitwise_neutral() {
        let set = test_set();
        let nose = set.neutral.landmark(LANDMARK_NOSE_TIP).unwrap() as usize;
        let nose_y = set.neutral.vertices[nose][1];
        let mut rng = StdRng::seed_from_u64(43);
        for _ in 0..20 {
            let mut fb = FrameBlend::neutral();
            for j in 0..EXPRESSION_COUNT {
                fb.expr_upper[j] = rng.random_range(0.0..1.0);
            }
            let mesh = blend_mesh(&set, &fb).unwrap();
            for (i, v) in mesh.vertices.iter().enumerate() {
                if set.neutral.vertices[i][1] <= nose_y {
                    assert_eq!(*v, set.neutral.vertices[i], "lower vertex {i} moved");
                }
            }
        }
    }

    #[test]
    fn zero_gaze_is_identity() {
        let set = test_set();
        let mesh = apply_gaze(&set.neutral, &set, 0.0, 0.0).unwrap();
        assert_eq!(mesh, set.neutral);
    }

    #[test]
    fn gaze_touches_only_eye_vertices() {
        let set = test_set();
        let eye_mask = set.eye_vertex_set();
        let mesh = apply_gaze(&set.neutral, &set, 25.0, 0.0).unwrap();
        let mut moved = 0usize;
        for (i, (a, b)) in mesh
            .vertices
            .iter()
            .zip(set.neutral.vertices.iter())
            .enumerate()
        {
            if eye_mask[i] {
                if a != b {
                    moved += 1;
                }
            } else {
                assert_eq!(a, b, "non-eye vertex {i} moved");
            }
        }
        assert!(moved > 0, "eye vertices should rotate");
    }

    #[test]
    fn gaze_rotation_is_orthonormal() {
        let mut rng = StdRng::seed_from_u64(44);
        for _ in 0..200 {
            let yaw = rng.random_range(-60.0..60.0);
            let pitch = rng.random_range(-40.0..40.0);
            let r = gaze_rotation(yaw, pitch);
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|k| r.m[k][i] * r.m[k][j]).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gaze_preserves_eye_rigidity() {
        let set = test_set();
        let mesh = apply_gaze(&set.neutral, &set, 37.0, -21.0).unwrap();
        for eye in &set.eyes {
            for (ai, a) in eye.vertices.iter().enumerate() {
                for b in eye.vertices.iter().skip(ai + 1) {
                    let d0 = dist(
                        set.neutral.vertices[*a as usize],
                        set.neutral.vertices[*b as usize],
                    );
                    let d1 = dist(mesh.vertices[*a as usize], mesh.vertices[*b as usize]);
                    assert!((d0 - d1).abs() < 1e-9);
                }
            }
        }
    }

    fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
        let dx = a[0] - b[0];
        let dy = a[1] - b[1];
        let dz = a[2] - b[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    #[test]
    fn out_of_range_gaze_rejected() {
        let set = test_set();
        assert!(matches!(
            apply_gaze(&set.neutral, &set, 61.0, 0.0),
            Err(MeshError::GazeOutOfRange { .. })
        ));
        assert!(matches!(
            apply_gaze(&set.neutral, &set, 0.0, -41.0),
            Err(MeshError::GazeOutOfRange { .. })
        ));
    }

    #[test]
    fn gaze_angles_forward_and_planar() {
        let (yaw, pitch) = gaze_to_angles([0.0; 3], [0.0, 0.0, 3.0]).unwrap();
        assert_eq!((yaw, pitch), (0.0, 0.0));
        let (yaw, pitch) = gaze_to_angles([0.0; 3], [1.0, 0.0, 1.0]).unwrap();
        assert!((yaw - 45.0).abs() < 1e-12);
        assert!(pitch.abs() < 1e-12);
    }

    #[test]
    fn gaze_angles_rotation_round_trip() {
        // The rotated forward axis must pass through the target direction.
        let mut rng = StdRng::seed_from_u64(45);
        for _ in 0..200 {
            let target = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-0.8..0.8),
                rng.random_range(0.5..3.0),
            ];
            let (yaw, pitch) = gaze_to_angles([0.0; 3], target).unwrap();
            let r = gaze_rotation(yaw, pitch);
            let fwd = [r.m[2][0], r.m[2][1], r.m[2][2]]; // (0,0,1) * R
            let norm =
                (target[0] * target[0] + target[1] * target[1] + target[2] * target[2]).sqrt();
            for k in 0..3 {
                assert!((fwd[k] - target[k] / norm).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn seat_geometry_yaw_angles() {
        // Five seats at -45..45 degrees, five feet away, eyes 0.3 m above
        // the seated observers.
        let eye = [0.0, 0.0, 0.0];
        let dist = 1.524;
        let seat_y = -0.3;
        let mut yaws = Vec::new();
        for angle in [-45.0f64, -25.0, 0.0, 25.0, 45.0] {
            let target = [
                dist * angle.to_radians().sin(),
                seat_y,
                dist * angle.to_radians().cos(),
            ];
            let (yaw, pitch) = gaze_to_angles(eye, target).unwrap();
            yaws.push(yaw);
            let expected_pitch = (seat_y / dist).atan().to_degrees();
            assert!((pitch - expected_pitch).abs() < 1e-9);
        }
        for (yaw, expect) in yaws.iter().zip([-45.0, -25.0, 0.0, 25.0, 45.0]) {
            assert!((yaw - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_gaze_target_rejected() {
        assert!(matches!(
            gaze_to_angles([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]),
            Err(MeshError::DegenerateTarget)
        ));
    }
}
