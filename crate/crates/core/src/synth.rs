//! Procedurally generated low-poly test head.
//!
//! Stands in for artist-authored assets so every test and demo run is
//! self-contained: an ellipsoid face (~1k vertices) with two rigid eye
//! spheres, plus synthetic displacement fields for all 20 viseme classes,
//! the six expressions (split upper/lower at build time) and the
//! pre-blend targets the default compatibility table refers to.
//! Everything is a pure function of indices — no randomness.

use std::collections::BTreeMap;

use crate::expression::{Expression, ALL_EXPRESSIONS, OPEN_MOUTH_EXPRESSIONS};
use crate::mesh::{
    EyeSubmesh, Mesh, MorphSet, MorphSetBuilder, TargetKind, TargetSource, LANDMARK_LEFT_EYE,
    LANDMARK_NOSE_TIP, LANDMARK_RIGHT_EYE,
};
use crate::viseme::{VisemeTable, VISEME_CLASS_COUNT};

/// FACS decomposition of an expression target, when the composition is
/// declared: joy is Cheek Raiser (AU 6) + Lip Corner Puller (AU 12),
/// sadness is Inner Brow Raiser (AU 1) + Brow Lowerer (AU 4) + Lip
/// Corner Depressor (AU 15).
fn action_units_for(expr: Expression) -> Vec<u8> {
    match expr {
        Expression::Joy => vec![6, 12],
        Expression::Sadness => vec![1, 4, 15],
        _ => Vec::new(),
    }
}

const RINGS: usize = 24;
const SEGS: usize = 40;
const EYE_RINGS: usize = 6;
const EYE_SEGS: usize = 8;

const FACE_RADII: [f64; 3] = [0.8, 1.0, 0.75];
const EYE_RADIUS: f64 = 0.12;
const EYE_CENTERS: [[f64; 3]; 2] = [[0.3, 0.25, 0.55], [-0.3, 0.25, 0.55]];
const MOUTH: [f64; 3] = [0.0, -0.45, 0.62];
const BROW: [f64; 3] = [0.0, 0.55, 0.55];
const CHEEK_L: [f64; 3] = [0.45, -0.05, 0.5];
const CHEEK_R: [f64; 3] = [-0.45, -0.05, 0.5];

/// Append a latitude/longitude sphere; returns (start index, vertex count).
fn push_sphere(
    vertices: &mut Vec<[f64; 3]>,
    faces: &mut Vec<[u32; 3]>,
    center: [f64; 3],
    radii: [f64; 3],
    rings: usize,
    segs: usize,
) -> (u32, usize) {
    let base = vertices.len() as u32;
    vertices.push([center[0], center[1] + radii[1], center[2]]);
    for i in 1..rings {
        let theta = std::f64::consts::PI * i as f64 / rings as f64;
        for j in 0..segs {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / segs as f64;
            vertices.push([
                center[0] + radii[0] * theta.sin() * phi.sin(),
                center[1] + radii[1] * theta.cos(),
                center[2] + radii[2] * theta.sin() * phi.cos(),
            ]);
        }
    }
    vertices.push([center[0], center[1] - radii[1], center[2]]);
    let bottom = vertices.len() as u32 - 1;

    let ring = |i: usize, j: usize| base + 1 + ((i - 1) * segs + (j % segs)) as u32;
    for j in 0..segs {
        faces.push([base, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segs {
            faces.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    for j in 0..segs {
        faces.push([ring(rings - 1, j + 1), ring(rings - 1, j), bottom]);
    }
    let count = vertices.len() - base as usize;
    (base, count)
}

fn gauss_bump(p: [f64; 3], center: [f64; 3], radius: f64) -> f64 {
    let dx = p[0] - center[0];
    let dy = p[1] - center[1];
    let dz = p[2] - center[2];
    (-(dx * dx + dy * dy + dz * dz) / (2.0 * radius * radius)).exp()
}

/// Mouth-region displacement for a viseme class. Class 0 is the neutral
/// viseme: zero everywhere.
fn viseme_field(class: usize, p: [f64; 3]) -> [f64; 3] {
    if class == 0 {
        return [0.0; 3];
    }
    let c = class as f64;
    let g = gauss_bump(p, MOUTH, 0.35);
    let dir = [
        (1.7 * c).sin() * 0.4,
        (2.3 * c).cos() * 0.5 - (0.5 + 0.5 * (1.3 * c).cos()) * 0.6,
        0.8 + 0.2 * (0.9 * c).sin(),
    ];
    let amp = 0.06 + 0.03 * (0.5 + 0.5 * (3.1 * c).sin());
    [g * amp * dir[0], g * amp * dir[1], g * amp * dir[2]]
}

/// Whole-face displacement for an expression at maximum intensity.
fn expression_field(index: usize, p: [f64; 3]) -> [f64; 3] {
    let e = index as f64;
    let brow = gauss_bump(p, BROW, 0.3);
    let cheek_l = gauss_bump(p, CHEEK_L, 0.25);
    let cheek_r = gauss_bump(p, CHEEK_R, 0.25);
    let mouth = gauss_bump(p, MOUTH, 0.3);
    let brow_amp = 0.05 * (1.1 + e).sin();
    let cheek_amp = 0.04 * (0.7 * e).cos();
    let mouth_amp = 0.05 * (2.0 + 1.3 * e).sin();
    [
        0.01 * (cheek_l - cheek_r) + 0.008 * (0.6 * e).sin() * mouth,
        brow * brow_amp + (cheek_l + cheek_r) * cheek_amp + mouth * mouth_amp,
        0.02 * brow + 0.01 * (cheek_l + cheek_r) + 0.015 * mouth * (1.0 + 0.3 * e).cos(),
    ]
}

fn displaced(neutral: &Mesh, field: impl Fn([f64; 3]) -> [f64; 3]) -> Mesh {
    Mesh {
        vertices: neutral
            .vertices
            .iter()
            .map(|v| {
                let d = field(*v);
                [v[0] + d[0], v[1] + d[1], v[2] + d[2]]
            })
            .collect(),
        faces: neutral.faces.clone(),
        landmarks: BTreeMap::new(),
    }
}

/// Build the deterministic test head for the given viseme inventory.
pub fn test_head(table: &VisemeTable) -> MorphSet {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    push_sphere(&mut vertices, &mut faces, [0.0; 3], FACE_RADII, RINGS, SEGS);

    // Nose tip: front vertex slightly below the vertical center.
    let nose_ring = (0.55 * RINGS as f64).round() as usize;
    let nose_idx = (1 + (nose_ring - 1) * SEGS) as u32;

    let mut eyes = Vec::new();
    let mut landmarks = BTreeMap::new();
    landmarks.insert(LANDMARK_NOSE_TIP.to_string(), nose_idx);
    for (center, (side, landmark)) in EYE_CENTERS
        .iter()
        .zip([("left", LANDMARK_LEFT_EYE), ("right", LANDMARK_RIGHT_EYE)])
    {
        let (base, count) = push_sphere(
            &mut vertices,
            &mut faces,
            *center,
            [EYE_RADIUS; 3],
            EYE_RINGS,
            EYE_SEGS,
        );
        // Explicit center vertex doubles as the rotation landmark.
        let center_idx = vertices.len() as u32;
        vertices.push(*center);
        landmarks.insert(landmark.to_string(), center_idx);
        let mut members: Vec<u32> = (base..base + count as u32).collect();
        members.push(center_idx);
        eyes.push(EyeSubmesh {
            name: side.to_string(),
            vertices: members,
            center_landmark: landmark.to_string(),
        });
    }

    let neutral = Mesh {
        vertices,
        faces,
        landmarks,
    };

    let mut targets: Vec<TargetSource> = Vec::new();
    for class in 0..VISEME_CLASS_COUNT {
        let name = &table.classes()[class].name;
        targets.push(TargetSource::new(
            format!("viseme_{name}"),
            TargetKind::Viseme(class as u8),
            displaced(&neutral, |p| viseme_field(class, p)),
        ));
    }
    for expr in ALL_EXPRESSIONS {
        let mesh = displaced(&neutral, |p| expression_field(expr.index(), p));
        for (suffix, kind) in [
            ("upper", TargetKind::ExpressionUpper(expr)),
            ("lower", TargetKind::ExpressionLower(expr)),
        ] {
            let mut source =
                TargetSource::new(format!("expr_{}_{suffix}", expr.name()), kind, mesh.clone());
            source.action_units = action_units_for(expr);
            targets.push(source);
        }
    }
    for class in table.classes() {
        if !(class.is_labial || class.is_labiodental) {
            continue;
        }
        let class_id = usize::from(class.id);
        for expr in OPEN_MOUTH_EXPRESSIONS {
            // Closed lips with the open-mouth emotion folded in at half
            // strength, matching the ids the default table substitutes.
            let mesh = displaced(&neutral, |p| {
                let v = viseme_field(class_id, p);
                let x = expression_field(expr.index(), p);
                [v[0] + 0.5 * x[0], v[1] + 0.5 * x[1], v[2] + 0.5 * x[2]]
            });
            targets.push(TargetSource::new(
                format!("preblend_{}_{}", class.name, expr.name()),
                TargetKind::Preblend,
                mesh,
            ));
        }
    }

    MorphSetBuilder {
        neutral,
        targets,
        eyes,
        region_override: None,
    }
    .build()
    .expect("synthetic head is a complete, consistent morph set")
}
