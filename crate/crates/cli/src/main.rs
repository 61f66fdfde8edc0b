//! `visage` — synthesize facial-animation timelines and calibrate the
//! projection chain.
//!
//! Failures print a single machine-parsable line `error: <kind>: <detail>`
//! to stderr. Exit code 1 means an input failed to parse or validate;
//! exit code 2 means assets disagree (mesh topology, landmarks, camera
//! matrices).

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use visage_core::calibration::{
    build_piecewise_map, build_piecewise_map_triangles, gen_checkerboard, parse_camera_matrices,
    parse_correspondences, parse_mold_placement, parse_piecewise_map, predistort_model,
    render_checkerboard_pgm, serialize_piecewise_map, CalibrationError, MoldPlacement,
};
use visage_core::config::EngineConfig;
use visage_core::expression::{parse_emotion_script, CompatibilityTable, ExpressionSpec};
use visage_core::headpose::pose_toward;
use visage_core::mesh::{
    apply_gaze, blend_mesh, gaze_to_angles, load_morphset, parse_obj, write_obj, MeshError,
    MorphSet,
};
use visage_core::pipeline::{synthesize, write_timeline};
use visage_core::synth;
use visage_core::transcript::parse_transcript;
use visage_core::viseme::VisemeTable;

#[derive(Parser)]
#[command(
    name = "visage",
    about = "Viseme-based facial animation synthesis and projection calibration",
    version
)]
struct Cli {
    /// Engine configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured frame rate.
    #[arg(long, global = true)]
    fps: Option<f64>,

    /// Seed for optional noise fixtures (only `calibrate --noise-px`).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a per-frame timeline from a transcript and emotion script.
    Synthesize {
        /// Transcript file (`symbol<TAB>start_ms<TAB>end_ms`), or `-` for stdin.
        #[arg(long)]
        transcript: PathBuf,
        /// Emotion script (`expression,start_ms,end_ms,peak_lambda`).
        #[arg(long)]
        emotions: Option<PathBuf>,
        /// Output timeline file.
        #[arg(long)]
        out: PathBuf,
        /// Also export one OBJ mesh per frame into this directory.
        #[arg(long)]
        export_mesh: Option<PathBuf>,
        /// Baseline mode: no kernel smoothing, no labial closure handling.
        #[arg(long)]
        basic_lipsync: bool,
    },
    /// Build a piecewise homography map from checkerboard correspondences.
    Calibrate {
        /// Correspondence CSV: `row,col,mask_x,mask_y`.
        #[arg(long)]
        correspondences: PathBuf,
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 1280.0)]
        screen_width: f64,
        #[arg(long, default_value_t = 800.0)]
        screen_height: f64,
        /// Output map file.
        #[arg(long)]
        out: PathBuf,
        /// Also render the checkerboard pattern as a PGM image.
        #[arg(long)]
        pattern: Option<PathBuf>,
        /// Perturb mask corners with uniform noise of this amplitude
        /// (pixels), seeded by --seed; for synthetic fixtures.
        #[arg(long)]
        noise_px: Option<f64>,
        /// Comparison mode: two affine triangles per cell instead of one
        /// homography.
        #[arg(long)]
        triangles: bool,
    },
    /// Pre-distort a model so its projection appears undistorted.
    Predistort {
        /// Neutral model OBJ.
        #[arg(long)]
        model: PathBuf,
        /// World/view/projection matrices (48 numbers, row-major).
        #[arg(long)]
        matrices: PathBuf,
        /// Piecewise map produced by `calibrate`.
        #[arg(long)]
        map: PathBuf,
        /// Optional 2x3 affine mold placement (identity when omitted).
        #[arg(long)]
        placement: Option<PathBuf>,
        /// Output OBJ.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute eye gaze angles and clamped neck poses toward 3D targets.
    Gaze {
        /// Target file: `x,y,z` per line.
        #[arg(long)]
        targets: PathBuf,
        /// Head/eye origin as `x,y,z`.
        #[arg(long, default_value = "0,0,0")]
        origin: String,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A diagnosed failure: stable kind token, message, exit code.
struct Failure {
    kind: &'static str,
    message: String,
    code: u8,
}

impl Failure {
    fn parse(kind: &'static str, message: impl ToString) -> Failure {
        Failure {
            kind,
            message: message.to_string(),
            code: 1,
        }
    }

    fn asset(kind: &'static str, message: impl ToString) -> Failure {
        Failure {
            kind,
            message: message.to_string(),
            code: 2,
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Failure::parse("io", format!("stdin: {e}")))?;
        return Ok(buf);
    }
    fs::read_to_string(path).map_err(|e| Failure::parse("io", format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::parse("io", format!("{}: {e}", path.display())))
}

fn load_config(cli: &Cli) -> Result<EngineConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => {
            EngineConfig::parse(&read_input(path)?).map_err(|e| Failure::parse("config", e))?
        }
        None => EngineConfig::default(),
    };
    if let Some(fps) = cli.fps {
        config.fps = fps;
    }
    config.validate().map_err(|e| Failure::parse("config", e))?;
    Ok(config)
}

fn load_viseme_table(config: &EngineConfig) -> Result<VisemeTable, Failure> {
    match &config.viseme_table {
        Some(path) => {
            VisemeTable::parse(&read_input(path)?).map_err(|e| Failure::parse("viseme-table", e))
        }
        None => Ok(VisemeTable::default_english()),
    }
}

fn load_compat_table(
    config: &EngineConfig,
    viseme_table: &VisemeTable,
) -> Result<CompatibilityTable, Failure> {
    let table = match &config.compat_table {
        Some(path) => CompatibilityTable::with_overrides_from_csv(viseme_table, &read_input(path)?)
            .map_err(|e| Failure::parse("compat-table", e))?,
        None => CompatibilityTable::default_table(viseme_table),
    };
    if !table.is_complete() {
        return Err(Failure::asset(
            "compat-table",
            "table does not cover every viseme/expression combination",
        ));
    }
    Ok(table)
}

fn load_morphset_for(
    config: &EngineConfig,
    viseme_table: &VisemeTable,
) -> Result<MorphSet, Failure> {
    match &config.morphset {
        None => Ok(synth::test_head(viseme_table)),
        Some(path) if path == Path::new("synthetic") => Ok(synth::test_head(viseme_table)),
        Some(path) => load_morphset(path).map_err(mesh_failure),
    }
}

fn mesh_failure(e: MeshError) -> Failure {
    match e {
        MeshError::Obj { .. } | MeshError::Manifest { .. } => Failure::parse("mesh-parse", e),
        MeshError::Io(_) => Failure::parse("io", e),
        other => Failure::asset("asset-mismatch", other),
    }
}

fn calibration_failure(e: CalibrationError) -> Failure {
    match e {
        CalibrationError::UninvertibleWVP => Failure::asset("asset-mismatch", e),
        CalibrationError::Io(_) => Failure::parse("io", e),
        other => Failure::parse("calibration", other),
    }
}

fn parse_point3(text: &str) -> Result<[f64; 3], Failure> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(Failure::parse(
            "point",
            format!("expected x,y,z got '{text}'"),
        ));
    }
    let mut out = [0.0f64; 3];
    for (slot, field) in out.iter_mut().zip(&fields) {
        *slot = field
            .parse()
            .map_err(|_| Failure::parse("point", format!("bad coordinate '{field}'")))?;
    }
    Ok(out)
}

fn cmd_synthesize(
    cli: &Cli,
    transcript_path: &Path,
    emotions: Option<&Path>,
    out: &Path,
    export_mesh: Option<&Path>,
    basic: bool,
) -> Result<(), Failure> {
    let config = load_config(cli)?;
    let viseme_table = load_viseme_table(&config)?;
    let compat = load_compat_table(&config, &viseme_table)?;

    let transcript_text = read_input(transcript_path)?;
    let transcript = parse_transcript(&transcript_text, viseme_table.symbol_set())
        .map_err(|e| Failure::parse("transcript", e))?;

    let specs: Vec<ExpressionSpec> = match emotions {
        Some(path) => parse_emotion_script(
            &read_input(path)?,
            config.emotion_attack,
            config.emotion_release,
        )
        .map_err(|e| Failure::parse("emotion-script", e))?,
        None => Vec::new(),
    };

    let timeline = synthesize(&transcript, &specs, &viseme_table, &compat, &config, basic)
        .map_err(|e| Failure::parse("synthesis", e))?;
    write_output(out, write_timeline(&timeline).as_bytes())?;

    if let Some(dir) = export_mesh {
        let set = load_morphset_for(&config, &viseme_table)?;
        fs::create_dir_all(dir)
            .map_err(|e| Failure::parse("io", format!("{}: {e}", dir.display())))?;
        for (i, fb) in timeline.frames.iter().enumerate() {
            let mut mesh = blend_mesh(&set, fb).map_err(mesh_failure)?;
            if fb.gaze_yaw != 0.0 || fb.gaze_pitch != 0.0 {
                mesh = apply_gaze(&mesh, &set, fb.gaze_yaw, fb.gaze_pitch).map_err(mesh_failure)?;
            }
            let path = dir.join(format!("frame_{i:06}.obj"));
            write_output(&path, write_obj(&mesh).as_bytes())?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)] // one parameter per CLI flag
fn cmd_calibrate(
    cli: &Cli,
    correspondences: &Path,
    rows: usize,
    cols: usize,
    width: f64,
    height: f64,
    out: &Path,
    pattern: Option<&Path>,
    noise_px: Option<f64>,
    triangles: bool,
) -> Result<(), Failure> {
    let text = read_input(correspondences)?;
    let mut mask_corners = parse_correspondences(&text, rows, cols).map_err(calibration_failure)?;
    if let Some(amplitude) = noise_px {
        let mut rng = StdRng::seed_from_u64(cli.seed);
        for corner in &mut mask_corners {
            corner[0] += rng.random_range(-amplitude..=amplitude);
            corner[1] += rng.random_range(-amplitude..=amplitude);
        }
    }
    let grid = gen_checkerboard(rows, cols, width, height).map_err(calibration_failure)?;
    let map = if triangles {
        build_piecewise_map_triangles(&grid, &mask_corners).map_err(calibration_failure)?
    } else {
        build_piecewise_map(&grid, &mask_corners).map_err(calibration_failure)?
    };
    write_output(out, serialize_piecewise_map(&map).as_bytes())?;
    if let Some(path) = pattern {
        let pgm = render_checkerboard_pgm(rows, cols, width as usize, height as usize)
            .map_err(calibration_failure)?;
        write_output(path, &pgm)?;
    }
    Ok(())
}

fn cmd_predistort(
    model: &Path,
    matrices: &Path,
    map_path: &Path,
    placement: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    let mesh = parse_obj(&read_input(model)?).map_err(mesh_failure)?;
    let cams = parse_camera_matrices(&read_input(matrices)?).map_err(calibration_failure)?;
    let map = parse_piecewise_map(&read_input(map_path)?).map_err(calibration_failure)?;
    let placement = match placement {
        Some(path) => parse_mold_placement(&read_input(path)?).map_err(calibration_failure)?,
        None => MoldPlacement::IDENTITY,
    };
    let distorted =
        predistort_model(&mesh, &cams, &map, &placement).map_err(calibration_failure)?;
    write_output(out, write_obj(&distorted).as_bytes())
}

fn cmd_gaze(targets: &Path, origin: &str, out: Option<&Path>) -> Result<(), Failure> {
    let origin = parse_point3(origin)?;
    let text = read_input(targets)?;
    let mut output =
        String::from("# index,eye_yaw,eye_pitch,neck_yaw,neck_pitch,neck_roll,clamped\n");
    let mut index = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let target = parse_point3(trimmed)
            .map_err(|f| Failure::parse("gaze-targets", format!("line {line}: {}", f.message)))?;
        let eye = match gaze_to_angles(origin, target) {
            Ok(angles) => angles,
            Err(e) => {
                eprintln!("warning: gaze-targets line {line} skipped: {e}");
                continue;
            }
        };
        let (neck, flags) = match pose_toward(target, origin) {
            Ok(result) => result,
            Err(e) => {
                eprintln!("warning: gaze-targets line {line} skipped: {e}");
                continue;
            }
        };
        let mut clamped: Vec<&str> = Vec::new();
        if flags.yaw {
            clamped.push("yaw");
        }
        if flags.pitch {
            clamped.push("pitch");
        }
        if flags.roll {
            clamped.push("roll");
        }
        let clamped = if clamped.is_empty() {
            "-".to_string()
        } else {
            clamped.join("|")
        };
        output.push_str(&format!(
            "{index},{:.6},{:.6},{:.6},{:.6},{:.6},{clamped}\n",
            eye.0, eye.1, neck.yaw, neck.pitch, neck.roll
        ));
        index += 1;
    }
    match out {
        Some(path) => write_output(path, output.as_bytes()),
        None => {
            print!("{output}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Synthesize {
            transcript,
            emotions,
            out,
            export_mesh,
            basic_lipsync,
        } => cmd_synthesize(
            cli,
            transcript,
            emotions.as_deref(),
            out,
            export_mesh.as_deref(),
            *basic_lipsync,
        ),
        Command::Calibrate {
            correspondences,
            rows,
            cols,
            screen_width,
            screen_height,
            out,
            pattern,
            noise_px,
            triangles,
        } => cmd_calibrate(
            cli,
            correspondences,
            *rows,
            *cols,
            *screen_width,
            *screen_height,
            out,
            pattern.as_deref(),
            *noise_px,
            *triangles,
        ),
        Command::Predistort {
            model,
            matrices,
            map,
            placement,
            out,
        } => cmd_predistort(model, matrices, map, placement.as_deref(), out),
        Command::Gaze {
            targets,
            origin,
            out,
        } => cmd_gaze(targets, origin, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}: {}", failure.kind, failure.message);
            ExitCode::from(failure.code)
        }
    }
}
