//! Morph-set assembly and the manifest asset format.
//!
//! A manifest is a plain line-oriented text file next to its OBJ files:
//!
//! ```text
//! neutral neutral.obj
//! landmark nose_tip 412
//! landmark left_eye_center 930
//! landmark right_eye_center 973
//! eye left 888 889 ...
//! eye right 931 932 ...
//! target viseme 0 viseme_sil viseme_sil.obj
//! target expr_upper joy expr_joy_upper expr_joy.obj
//! target expr_lower joy expr_joy_lower expr_joy.obj
//! target preblend preblend_pbm_surprise preblend_pbm_surprise.obj
//! mask upper 0 1 2 ...        # optional; omitted -> nose-tip rule
//! ```
//!
//! Displacements are computed as `target - neutral`. The builder enforces
//! the region split: upper-face expression targets are zeroed below the
//! nose line, everything else (visemes, lower expressions, pre-blends) is
//! zeroed above it, and eye vertices never displace at all — eyes move
//! only through gaze rotation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::obj::{parse_obj, write_obj};
use super::{
    Mesh, MeshError, MorphSet, MorphTarget, Region, TargetKind, LANDMARK_LEFT_EYE,
    LANDMARK_NOSE_TIP, LANDMARK_RIGHT_EYE,
};
use crate::expression::{Expression, EXPRESSION_COUNT};
use crate::viseme::VISEME_CLASS_COUNT;

/// A rigid eye: its vertex set plus the landmark it rotates about.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeSubmesh {
    pub name: String,
    pub vertices: Vec<u32>,
    pub center_landmark: String,
}

/// One target before assembly: the absolute mesh plus metadata.
#[derive(Debug, Clone)]
pub struct TargetSource {
    pub id: String,
    pub kind: TargetKind,
    pub mesh: Mesh,
    pub action_units: Vec<u8>,
}

impl TargetSource {
    pub fn new(id: impl Into<String>, kind: TargetKind, mesh: Mesh) -> TargetSource {
        TargetSource {
            id: id.into(),
            kind,
            mesh,
            action_units: Vec::new(),
        }
    }
}

/// Raw ingredients for a [`MorphSet`]; `build` validates and assembles.
#[derive(Debug, Clone)]
pub struct MorphSetBuilder {
    pub neutral: Mesh,
    pub targets: Vec<TargetSource>,
    pub eyes: Vec<EyeSubmesh>,
    /// Explicit per-vertex regions; `None` derives them from the nose tip.
    pub region_override: Option<Vec<Region>>,
}

impl MorphSetBuilder {
    pub fn build(self) -> Result<MorphSet, MeshError> {
        let n = self.neutral.vertices.len();

        let regions: Vec<Region> = match self.region_override {
            Some(regions) => {
                if regions.len() != n {
                    return Err(MeshError::IncompleteMorphSet(format!(
                        "region mask covers {} of {} vertices",
                        regions.len(),
                        n
                    )));
                }
                regions
            }
            None => {
                let nose = self.neutral.landmark(LANDMARK_NOSE_TIP)? as usize;
                let nose_y = self.neutral.vertices[nose][1];
                self.neutral
                    .vertices
                    .iter()
                    .map(|v| {
                        if v[1] > nose_y {
                            Region::Upper
                        } else {
                            Region::Lower
                        }
                    })
                    .collect()
            }
        };

        let mut eye_mask = vec![false; n];
        for eye in &self.eyes {
            self.neutral.landmark(&eye.center_landmark)?;
            for &idx in &eye.vertices {
                let slot = eye_mask.get_mut(idx as usize).ok_or_else(|| {
                    MeshError::IncompleteMorphSet(format!(
                        "eye '{}' references vertex {idx} out of range",
                        eye.name
                    ))
                })?;
                *slot = true;
            }
        }

        let mut targets: BTreeMap<String, MorphTarget> = BTreeMap::new();
        let mut viseme_targets: Vec<Option<String>> = vec![None; VISEME_CLASS_COUNT];
        let mut expr_upper: Vec<Option<String>> = vec![None; EXPRESSION_COUNT];
        let mut expr_lower: Vec<Option<String>> = vec![None; EXPRESSION_COUNT];

        for TargetSource {
            id,
            kind,
            mesh,
            action_units,
        } in self.targets
        {
            if mesh.vertices.len() != n {
                return Err(MeshError::TopologyMismatch {
                    target_id: id,
                    detail: format!("{} vertices, neutral has {n}", mesh.vertices.len()),
                });
            }
            if mesh.faces != self.neutral.faces {
                return Err(MeshError::TopologyMismatch {
                    target_id: id,
                    detail: "face list differs from neutral".into(),
                });
            }
            let mut displacements: Vec<[f64; 3]> = mesh
                .vertices
                .iter()
                .zip(self.neutral.vertices.iter())
                .map(|(t, b)| [t[0] - b[0], t[1] - b[1], t[2] - b[2]])
                .collect();
            for (i, d) in displacements.iter_mut().enumerate() {
                let zero = eye_mask[i]
                    || match kind {
                        TargetKind::ExpressionUpper(_) => regions[i] == Region::Lower,
                        TargetKind::Viseme(_)
                        | TargetKind::ExpressionLower(_)
                        | TargetKind::Preblend => regions[i] == Region::Upper,
                    };
                if zero {
                    *d = [0.0; 3];
                }
            }
            match kind {
                TargetKind::Viseme(class) => {
                    let slot = viseme_targets.get_mut(usize::from(class)).ok_or_else(|| {
                        MeshError::IncompleteMorphSet(format!("viseme class {class} out of range"))
                    })?;
                    if slot.replace(id.clone()).is_some() {
                        return Err(MeshError::IncompleteMorphSet(format!(
                            "duplicate target for viseme class {class}"
                        )));
                    }
                }
                TargetKind::ExpressionUpper(e) => {
                    if expr_upper[e.index()].replace(id.clone()).is_some() {
                        return Err(MeshError::IncompleteMorphSet(format!(
                            "duplicate upper target for {}",
                            e.name()
                        )));
                    }
                }
                TargetKind::ExpressionLower(e) => {
                    if expr_lower[e.index()].replace(id.clone()).is_some() {
                        return Err(MeshError::IncompleteMorphSet(format!(
                            "duplicate lower target for {}",
                            e.name()
                        )));
                    }
                }
                TargetKind::Preblend => {}
            }
            let target = MorphTarget {
                id: id.clone(),
                kind,
                displacements,
                region_mask: regions.clone(),
                action_units,
            };
            if targets.insert(id.clone(), target).is_some() {
                return Err(MeshError::IncompleteMorphSet(format!(
                    "duplicate target id '{id}'"
                )));
            }
        }

        let unwrap_all =
            |slots: Vec<Option<String>>, what: &str| -> Result<Vec<String>, MeshError> {
                slots
                    .into_iter()
                    .enumerate()
                    .map(|(i, s)| {
                        s.ok_or_else(|| {
                            MeshError::IncompleteMorphSet(format!("missing {what} target {i}"))
                        })
                    })
                    .collect()
            };

        Ok(MorphSet {
            neutral: self.neutral,
            targets,
            viseme_targets: unwrap_all(viseme_targets, "viseme")?,
            expr_upper_targets: unwrap_all(expr_upper, "upper expression")?,
            expr_lower_targets: unwrap_all(expr_lower, "lower expression")?,
            eyes: self.eyes,
        })
    }
}

fn parse_index(field: &str, line: usize) -> Result<u32, MeshError> {
    field.parse().map_err(|_| MeshError::Manifest {
        line,
        detail: format!("bad vertex index '{field}'"),
    })
}

/// Load a morph set from a manifest file; OBJ paths are resolved relative
/// to the manifest's directory.
pub fn load_morphset(manifest_path: &Path) -> Result<MorphSet, MeshError> {
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(manifest_path)?;

    let mut neutral_file: Option<String> = None;
    let mut landmarks: BTreeMap<String, u32> = BTreeMap::new();
    let mut eyes: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    let mut target_specs: Vec<(String, TargetKind, String)> = Vec::new();
    let mut mask_lines: Vec<(Region, Vec<u32>)> = Vec::new();
    let mut au_lines: Vec<(String, Vec<u8>, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match fields[0] {
            "neutral" => {
                if fields.len() != 2 {
                    return Err(MeshError::Manifest {
                        line,
                        detail: "neutral takes one file".into(),
                    });
                }
                neutral_file = Some(fields[1].to_string());
            }
            "landmark" => {
                if fields.len() != 3 {
                    return Err(MeshError::Manifest {
                        line,
                        detail: "landmark takes name and vertex index".into(),
                    });
                }
                landmarks.insert(fields[1].to_string(), parse_index(fields[2], line)?);
            }
            "eye" => {
                if fields.len() < 3 {
                    return Err(MeshError::Manifest {
                        line,
                        detail: "eye takes a side and vertex indices".into(),
                    });
                }
                let entry = eyes.entry(fields[1].to_string()).or_default();
                for field in &fields[2..] {
                    entry.push(parse_index(field, line)?);
                }
            }
            "target" => {
                let (kind, id, file) = match fields.get(1).copied() {
                    Some("viseme") if fields.len() == 5 => {
                        let class: u8 = fields[2].parse().map_err(|_| MeshError::Manifest {
                            line,
                            detail: format!("bad viseme class '{}'", fields[2]),
                        })?;
                        (TargetKind::Viseme(class), fields[3], fields[4])
                    }
                    Some(kind @ ("expr_upper" | "expr_lower")) if fields.len() == 5 => {
                        let expr = Expression::from_name(fields[2]).ok_or_else(|| {
                            MeshError::Manifest {
                                line,
                                detail: format!("unknown expression '{}'", fields[2]),
                            }
                        })?;
                        let k = if kind == "expr_upper" {
                            TargetKind::ExpressionUpper(expr)
                        } else {
                            TargetKind::ExpressionLower(expr)
                        };
                        (k, fields[3], fields[4])
                    }
                    Some("preblend") if fields.len() == 4 => {
                        (TargetKind::Preblend, fields[2], fields[3])
                    }
                    _ => {
                        return Err(MeshError::Manifest {
                            line,
                            detail: "expected 'target viseme <class> <id> <file>', \
                                     'target expr_upper|expr_lower <expression> <id> <file>' \
                                     or 'target preblend <id> <file>'"
                                .into(),
                        })
                    }
                };
                target_specs.push((id.to_string(), kind, file.to_string()));
            }
            "mask" => {
                if fields.len() < 3 {
                    return Err(MeshError::Manifest {
                        line,
                        detail: "mask takes a region and vertex indices".into(),
                    });
                }
                let region = match fields[1] {
                    "upper" => Region::Upper,
                    "lower" => Region::Lower,
                    "both" => Region::Both,
                    other => {
                        return Err(MeshError::Manifest {
                            line,
                            detail: format!("unknown region '{other}'"),
                        })
                    }
                };
                let mut indices = Vec::new();
                for field in &fields[2..] {
                    indices.push(parse_index(field, line)?);
                }
                mask_lines.push((region, indices));
            }
            "action_units" => {
                if fields.len() < 3 {
                    return Err(MeshError::Manifest {
                        line,
                        detail: "action_units takes a target id and AU numbers".into(),
                    });
                }
                let mut aus = Vec::new();
                for field in &fields[2..] {
                    aus.push(field.parse().map_err(|_| MeshError::Manifest {
                        line,
                        detail: format!("bad action unit '{field}'"),
                    })?);
                }
                au_lines.push((fields[1].to_string(), aus, line));
            }
            other => {
                return Err(MeshError::Manifest {
                    line,
                    detail: format!("unknown directive '{other}'"),
                });
            }
        }
    }

    let neutral_file = neutral_file.ok_or(MeshError::Manifest {
        line: 0,
        detail: "manifest declares no neutral mesh".into(),
    })?;
    let mut neutral = parse_obj(&fs::read_to_string(dir.join(&neutral_file))?)?;
    neutral.landmarks = landmarks;

    let region_override = if mask_lines.is_empty() {
        None
    } else {
        let mut regions = vec![Region::Lower; neutral.vertices.len()];
        for (region, indices) in mask_lines {
            for idx in indices {
                let slot = regions.get_mut(idx as usize).ok_or_else(|| {
                    MeshError::IncompleteMorphSet(format!("mask vertex {idx} out of range"))
                })?;
                *slot = region;
            }
        }
        Some(regions)
    };

    let mut targets = Vec::with_capacity(target_specs.len());
    for (id, kind, file) in target_specs {
        let mesh = parse_obj(&fs::read_to_string(dir.join(&file))?)?;
        targets.push(TargetSource::new(id, kind, mesh));
    }
    for (target_id, aus, line) in au_lines {
        let target = targets
            .iter_mut()
            .find(|t| t.id == target_id)
            .ok_or_else(|| MeshError::Manifest {
                line,
                detail: format!("action_units names unknown target '{target_id}'"),
            })?;
        target.action_units = aus;
    }

    let eyes = eyes
        .into_iter()
        .map(|(name, vertices)| {
            let center_landmark = match name.as_str() {
                "left" => LANDMARK_LEFT_EYE.to_string(),
                "right" => LANDMARK_RIGHT_EYE.to_string(),
                other => format!("{other}_eye_center"),
            };
            EyeSubmesh {
                name,
                vertices,
                center_landmark,
            }
        })
        .collect();

    MorphSetBuilder {
        neutral,
        targets,
        eyes,
        region_override,
    }
    .build()
}

/// Write a morph set out as OBJ files plus a manifest, the inverse of
/// [`load_morphset`].
pub fn write_morphset(set: &MorphSet, dir: &Path) -> Result<(), MeshError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("neutral.obj"), write_obj(&set.neutral))?;

    let mut manifest = String::from("# morph set manifest\nneutral neutral.obj\n");
    for (name, idx) in &set.neutral.landmarks {
        manifest.push_str(&format!("landmark {name} {idx}\n"));
    }
    for eye in &set.eyes {
        let list: Vec<String> = eye.vertices.iter().map(u32::to_string).collect();
        manifest.push_str(&format!("eye {} {}\n", eye.name, list.join(" ")));
    }
    for target in set.targets.values() {
        let file = format!("{}.obj", target.id);
        let mesh = Mesh {
            vertices: set
                .neutral
                .vertices
                .iter()
                .zip(target.displacements.iter())
                .map(|(v, d)| [v[0] + d[0], v[1] + d[1], v[2] + d[2]])
                .collect(),
            faces: set.neutral.faces.clone(),
            landmarks: BTreeMap::new(),
        };
        fs::write(dir.join(&file), write_obj(&mesh))?;
        let record = match target.kind {
            TargetKind::Viseme(class) => {
                format!("target viseme {class} {} {file}\n", target.id)
            }
            TargetKind::ExpressionUpper(e) => {
                format!("target expr_upper {} {} {file}\n", e.name(), target.id)
            }
            TargetKind::ExpressionLower(e) => {
                format!("target expr_lower {} {} {file}\n", e.name(), target.id)
            }
            TargetKind::Preblend => format!("target preblend {} {file}\n", target.id),
        };
        manifest.push_str(&record);
        if !target.action_units.is_empty() {
            let aus: Vec<String> = target.action_units.iter().map(u8::to_string).collect();
            manifest.push_str(&format!("action_units {} {}\n", target.id, aus.join(" ")));
        }
    }
    fs::write(dir.join("manifest.txt"), manifest)?;
    Ok(())
}
