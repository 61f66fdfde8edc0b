//! Acceptance suite: one test per release criterion, each printing a
//! `ACCEPTANCE <n> PASS` line (visible with `--nocapture`). Tolerances
//! are pinned here, not tuned elsewhere.
//!
//! Run with: `cargo test -p visage-cli --test acceptance -- --nocapture`

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use visage_core::calibration::{
    build_piecewise_map, estimate_homography, gen_checkerboard, predistort_model, CameraMatrices,
    MoldPlacement,
};
use visage_core::coarticulation::{
    enforce_labial_closure, sample_track, SmoothingKernel, GAUSSIAN_TRUNCATION,
    SILENCE_DENOMINATOR_EPS,
};
use visage_core::config::EngineConfig;
use visage_core::expression::{
    blend_frame, CompatibilityTable, FrameBlend, ALL_EXPRESSIONS, EXPRESSION_COUNT,
};
use visage_core::headpose::{clamp_neck, PITCH_LIMIT, ROLL_LIMIT, YAW_LIMIT};
use visage_core::math::Mat3;
use visage_core::mesh::blend_mesh;
use visage_core::pipeline::synthesize;
use visage_core::synth;
use visage_core::transcript::{parse_transcript, PhoneSegment, Transcript};
use visage_core::viseme::{
    extend_labials, to_viseme_segments, VisemeSegment, VisemeTable, NEUTRAL_VISEME,
    VISEME_CLASS_COUNT,
};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Criterion 1 — every labial in a 1,000-transcript random corpus
/// (labial durations 5..200 ms, including the 5 ms case) ends up with at
/// least one pure-labial frame at 30 fps. Runtime < 10 s.
#[test]
fn acceptance_01_labial_closure_guarantee() {
    let started = Instant::now();
    let table = VisemeTable::default_english();
    let kernel = SmoothingKernel::gaussian(0.030);
    let labials = ["m", "b", "p", "f", "v"];
    let vowels = ["ɑ", "i", "ɛ", "oʊ", "u", "æ"];
    let mut rng = StdRng::seed_from_u64(101);
    let mut total_labial_segments = 0usize;

    for case in 0..1000 {
        let mut segments: Vec<PhoneSegment> = Vec::new();
        let mut cursor = 0i64;
        let push = |symbol: &str, dur: i64, cursor: &mut i64, out: &mut Vec<PhoneSegment>| {
            out.push(PhoneSegment {
                symbol: symbol.to_string(),
                start: *cursor as f64 / 1000.0,
                end: (*cursor + dur) as f64 / 1000.0,
            });
            *cursor += dur;
        };
        if case == 0 {
            // The canonical short-labial scenario: 5 ms /m/ inside open
            // vowels ("mama" said fast).
            push("ɑ", 200, &mut cursor, &mut segments);
            push("m", 5, &mut cursor, &mut segments);
            push("ɑ", 200, &mut cursor, &mut segments);
        } else {
            if rng.random_bool(0.4) {
                push("sil", rng.random_range(40..300), &mut cursor, &mut segments);
            }
            for _ in 0..rng.random_range(2..8) {
                push(
                    vowels[rng.random_range(0..vowels.len())],
                    rng.random_range(60..300),
                    &mut cursor,
                    &mut segments,
                );
                if rng.random_bool(0.3) {
                    cursor += rng.random_range(5..120); // silent gap
                }
                push(
                    labials[rng.random_range(0..labials.len())],
                    rng.random_range(5..=200),
                    &mut cursor,
                    &mut segments,
                );
            }
        }
        let transcript = Transcript {
            total_duration: cursor as f64 / 1000.0,
            segments,
        };

        let raw = to_viseme_segments(&transcript, &table).unwrap();
        let extended = extend_labials(&raw, &table, 0.060, 1.0 / 30.0);
        let track = sample_track(&extended, transcript.total_duration, 30.0, &kernel).unwrap();
        let closed = enforce_labial_closure(&track, &extended, &table);

        for seg in extended
            .iter()
            .filter(|s| table.requires_closure(s.viseme_id))
        {
            total_labial_segments += 1;
            let satisfied = closed.frames.iter().any(|frame| {
                frame[usize::from(seg.viseme_id)] == 1.0
                    && frame
                        .iter()
                        .enumerate()
                        .all(|(v, w)| v == usize::from(seg.viseme_id) || *w == 0.0)
            });
            assert!(
                satisfied,
                "case {case}: labial segment {seg:?} has no pure frame"
            );
        }
    }

    let elapsed = started.elapsed();
    assert!(total_labial_segments >= 1000, "corpus too small");
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "runtime {elapsed:?} exceeds 10 s"
    );
    println!(
        "ACCEPTANCE 1 PASS: {total_labial_segments} labial segments, 100% closed, {elapsed:?}"
    );
}

/// Brute-force smoothing oracle: midpoint-rule integration of the
/// truncated kernel at 0.1 ms steps with the same gap filling and
/// normalization (independent of the closed-form path).
fn oracle_frame(
    segments: &[VisemeSegment],
    horizon: f64,
    t: f64,
    sigma: f64,
) -> [f64; VISEME_CLASS_COUNT] {
    let mut covered: Vec<VisemeSegment> = Vec::new();
    let mut cursor = 0.0f64;
    for seg in segments {
        if seg.start > cursor + 1e-12 {
            covered.push(VisemeSegment {
                viseme_id: NEUTRAL_VISEME,
                start: cursor,
                end: seg.start,
            });
        }
        covered.push(*seg);
        cursor = cursor.max(seg.end);
    }
    if horizon > cursor + 1e-12 {
        covered.push(VisemeSegment {
            viseme_id: NEUTRAL_VISEME,
            start: cursor,
            end: horizon,
        });
    }

    let support = GAUSSIAN_TRUNCATION * sigma;
    let mut mass = [0.0f64; VISEME_CLASS_COUNT];
    let mut total = 0.0f64;
    for seg in &covered {
        let lo = seg.start.max(t - support);
        let hi = seg.end.min(t + support);
        if hi <= lo {
            continue;
        }
        let steps = ((hi - lo) / 1e-4).ceil().max(1.0) as usize;
        let dt = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for j in 0..steps {
            let tau = lo + (j as f64 + 0.5) * dt;
            let u = t - tau;
            acc += (-u * u / (2.0 * sigma * sigma)).exp() * dt;
        }
        mass[usize::from(seg.viseme_id)] += acc;
        total += acc;
    }
    let mut w = [0.0; VISEME_CLASS_COUNT];
    if total < SILENCE_DENOMINATOR_EPS {
        w[usize::from(NEUTRAL_VISEME)] = 1.0;
        return w;
    }
    for (out, m) in w.iter_mut().zip(mass.iter()) {
        *out = m / total;
    }
    w
}

/// Criterion 2 — closed-form sampling matches the brute-force oracle
/// within 1e-4 on 200 random timelines. Runtime < 30 s.
#[test]
fn acceptance_02_smoothing_matches_brute_force_oracle() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(102);
    let mut max_err = 0.0f64;
    for _ in 0..200 {
        let mut cursor = 0.0f64;
        let mut segments = Vec::new();
        for _ in 0..rng.random_range(1..=10) {
            if rng.random_bool(0.3) {
                cursor += rng.random_range(0.01..0.15);
            }
            let dur = rng.random_range(0.01..0.25);
            if cursor + dur > 2.0 {
                break;
            }
            segments.push(VisemeSegment {
                viseme_id: rng.random_range(0..VISEME_CLASS_COUNT as u8),
                start: cursor,
                end: cursor + dur,
            });
            cursor += dur;
        }
        if segments.is_empty() {
            continue;
        }
        let horizon = (cursor + rng.random_range(0.0..0.2)).min(2.0);
        let sigma = rng.random_range(0.015..0.05);
        let kernel = SmoothingKernel::gaussian(sigma);
        let track = sample_track(&segments, horizon, 30.0, &kernel).unwrap();
        for (i, frame) in track.frames.iter().enumerate() {
            let t = i as f64 / 30.0;
            let oracle = oracle_frame(&segments, horizon.max(cursor), t, sigma);
            for v in 0..VISEME_CLASS_COUNT {
                max_err = max_err.max((frame[v] - oracle[v]).abs());
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(max_err < 1e-4, "max abs error {max_err}");
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?}");
    println!("ACCEPTANCE 2 PASS: max abs deviation {max_err:.3e} < 1e-4, {elapsed:?}");
}

/// Criterion 3 — expression blending endpoints: lambda 0 leaves the
/// viseme-only mesh untouched; lambda 1 on silence reproduces the full
/// expression target within 1e-12 per vertex, for all six expressions.
#[test]
fn acceptance_03_expression_intensity_endpoints() {
    let table = VisemeTable::default_english();
    let compat = CompatibilityTable::default_table(&table);
    let set = synth::test_head(&table);

    // lambda = 0: identical FrameBlend and bit-identical mesh.
    let mut visemes = [0.0; VISEME_CLASS_COUNT];
    visemes[13] = 0.6;
    visemes[9] = 0.4;
    for expr in ALL_EXPRESSIONS {
        let with_zero = blend_frame(&visemes, &[(expr, 0.0)], &compat);
        let without = blend_frame(&visemes, &[], &compat);
        assert_eq!(with_zero, without);
        let a = blend_mesh(&set, &with_zero).unwrap();
        let b = blend_mesh(&set, &without).unwrap();
        assert_eq!(a.vertices, b.vertices);
    }

    // lambda = 1 on silence: neutral + upper + lower = expression maximum.
    let mut silence = [0.0; VISEME_CLASS_COUNT];
    silence[usize::from(NEUTRAL_VISEME)] = 1.0;
    for expr in ALL_EXPRESSIONS {
        let fb = blend_frame(&silence, &[(expr, 1.0)], &compat);
        assert_eq!(fb.expr_upper[expr.index()], 1.0);
        assert_eq!(fb.expr_lower[expr.index()], 1.0);
        let mesh = blend_mesh(&set, &fb).unwrap();
        let upper = set.target(&set.expr_upper_targets[expr.index()]).unwrap();
        let lower = set.target(&set.expr_lower_targets[expr.index()]).unwrap();
        let mut max_dev = 0.0f64;
        for i in 0..set.vertex_count() {
            for k in 0..3 {
                let expected = set.neutral.vertices[i][k]
                    + upper.displacements[i][k]
                    + lower.displacements[i][k];
                max_dev = max_dev.max((mesh.vertices[i][k] - expected).abs());
            }
        }
        assert!(max_dev <= 1e-12, "{}: deviation {max_dev}", expr.name());
    }
    println!("ACCEPTANCE 3 PASS: lambda endpoints exact for all 6 expressions");
}

/// Criterion 4 — region partition: lower-only blends leave every
/// upper-region vertex bit-identical to neutral, and symmetrically.
/// Zero tolerance.
#[test]
fn acceptance_04_region_partition_bitwise() {
    let table = VisemeTable::default_english();
    let set = synth::test_head(&table);
    let nose = set.neutral.landmarks["nose_tip"] as usize;
    let nose_y = set.neutral.vertices[nose][1];
    let mut rng = StdRng::seed_from_u64(104);

    for _ in 0..100 {
        // Lower-only: visemes, lower expressions, possibly a pre-blend.
        let mut fb = FrameBlend::neutral();
        for v in 0..VISEME_CLASS_COUNT {
            fb.viseme_weights[v] = rng.random_range(0.0..1.0);
        }
        for j in 0..EXPRESSION_COUNT {
            fb.expr_lower[j] = rng.random_range(0.0..1.0);
        }
        if rng.random_bool(0.3) {
            fb.preblend = Some(visage_core::expression::PreblendWeight {
                target_id: "preblend_pbm_surprise".into(),
                weight: rng.random_range(0.0..1.0),
            });
        }
        let mesh = blend_mesh(&set, &fb).unwrap();
        for (i, v) in mesh.vertices.iter().enumerate() {
            if set.neutral.vertices[i][1] > nose_y {
                for (a, b) in v.iter().zip(set.neutral.vertices[i].iter()) {
                    assert_eq!(
                        a.to_bits(),
                        b.to_bits(),
                        "upper vertex {i} moved under a lower-only blend"
                    );
                }
            }
        }

        // Upper-only.
        let mut fb = FrameBlend::neutral();
        for j in 0..EXPRESSION_COUNT {
            fb.expr_upper[j] = rng.random_range(0.0..1.0);
        }
        let mesh = blend_mesh(&set, &fb).unwrap();
        for (i, v) in mesh.vertices.iter().enumerate() {
            if set.neutral.vertices[i][1] <= nose_y {
                for (a, b) in v.iter().zip(set.neutral.vertices[i].iter()) {
                    assert_eq!(
                        a.to_bits(),
                        b.to_bits(),
                        "lower vertex {i} moved under an upper-only blend"
                    );
                }
            }
        }
    }
    println!("ACCEPTANCE 4 PASS: 100 lower-only and 100 upper-only blends bit-exact");
}

fn apply_h(m: &Mat3, p: [f64; 2]) -> [f64; 2] {
    let [x, y, w] = m.apply_homogeneous(p);
    [x / w, y / w]
}

/// Criterion 5 — homography recovery from 4-point correspondences for
/// 1,000 random projective transforms (relative error < 1e-6 after scale
/// normalization) and 100% rejection of collinear configurations.
#[test]
fn acceptance_05_homography_recovery_and_degeneracy() {
    let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let mut rng = StdRng::seed_from_u64(105);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let angle: f64 = rng.random_range(-1.2..1.2);
        let scale: f64 = rng.random_range(0.3..3.0);
        let (s, c) = angle.sin_cos();
        let truth = Mat3::from_rows([
            [scale * c, -scale * s, rng.random_range(-10.0..10.0)],
            [scale * s, scale * c, rng.random_range(-10.0..10.0)],
            [
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                1.0,
            ],
        ]);
        let dst: Vec<[f64; 2]> = square.iter().map(|p| apply_h(&truth, *p)).collect();
        let recovered = estimate_homography(&square, &dst).expect("well-posed recovery");
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let reference = truth.m[i][j] / truth.m[2][2];
                num = num.max((recovered.matrix().m[i][j] - reference).abs());
                den = den.max(reference.abs());
            }
        }
        worst = worst.max(num / den);
    }
    assert!(worst < 1e-6, "worst relative error {worst}");

    let mut rejected = 0usize;
    let trials = 200usize;
    for _ in 0..trials {
        // Three or four of the source points on one random line.
        let a = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let dir = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let on_line = |t: f64| [a[0] + t * dir[0], a[1] + t * dir[1]];
        let mut src = vec![
            on_line(0.0),
            on_line(1.0),
            on_line(rng.random_range(1.5..3.0)),
        ];
        if rng.random_bool(0.5) {
            src.push(on_line(-1.0));
        } else {
            src.push([rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
        }
        if estimate_homography(&src, &square).is_err() {
            rejected += 1;
        }
    }
    assert_eq!(
        rejected, trials,
        "collinear configurations must all be rejected"
    );
    println!(
        "ACCEPTANCE 5 PASS: worst relative error {worst:.3e} over 1000 transforms; \
         {rejected}/{trials} degenerate sets rejected"
    );
}

fn fixture_cameras() -> CameraMatrices {
    let text = fs::read_to_string(fixture("cameras.txt")).unwrap();
    visage_core::calibration::parse_camera_matrices(&text).unwrap()
}

fn project(cams: &CameraMatrices, v: [f64; 3]) -> [f64; 2] {
    let clip = cams.wvp().transform_row([v[0], v[1], v[2], 1.0]);
    [clip[0] / clip[3], clip[1] / clip[3]]
}

/// Invert a warp by coarse grid sampling plus shrinking pattern search;
/// deliberately derivative-free and independent of any analytic inverse.
fn invert_by_dense_sampling(
    warp: &dyn Fn([f64; 2]) -> [f64; 2],
    target: [f64; 2],
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> [f64; 2] {
    let err = |p: [f64; 2]| {
        let q = warp(p);
        (q[0] - target[0]).powi(2) + (q[1] - target[1]).powi(2)
    };
    let n = 48;
    let mut best = [x_range.0, y_range.0];
    let mut best_err = f64::INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            let p = [
                x_range.0 + (x_range.1 - x_range.0) * i as f64 / n as f64,
                y_range.0 + (y_range.1 - y_range.0) * j as f64 / n as f64,
            ];
            let e = err(p);
            if e < best_err {
                best_err = e;
                best = p;
            }
        }
    }
    let mut step = (x_range.1 - x_range.0).max(y_range.1 - y_range.0) / n as f64;
    while step > 1e-10 {
        let mut improved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let candidate = [best[0] + dx * step, best[1] + dy * step];
            let e = err(candidate);
            if e < best_err {
                best_err = e;
                best = candidate;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Criterion 6 — pre-distortion: identity map is the identity within
/// 1e-9 per vertex; a smooth synthetic warp reprojects within 1e-4 px of
/// the dense-sampling warp-inversion oracle.
#[test]
fn acceptance_06_predistortion_round_trip_and_warp() {
    let table = VisemeTable::default_english();
    let head = synth::test_head(&table).neutral;
    let cams = fixture_cameras();

    let grid = gen_checkerboard(8, 8, 640.0, 480.0).unwrap();
    let identity_map = build_piecewise_map(&grid, &grid.corners).unwrap();
    let out = predistort_model(&head, &cams, &identity_map, &MoldPlacement::IDENTITY).unwrap();
    let mut max_dev = 0.0f64;
    for (a, b) in out.vertices.iter().zip(head.vertices.iter()) {
        for k in 0..3 {
            max_dev = max_dev.max((a[k] - b[k]).abs());
        }
    }
    assert!(max_dev < 1e-9, "identity round trip deviates {max_dev}");

    // Smooth warp: a mild global projective distortion of the screen.
    let warp_matrix = Mat3::from_rows([
        [1.06, 0.015, -9.0],
        [-0.012, 0.95, 11.0],
        [2.5e-5, -1.5e-5, 1.0],
    ]);
    let warp = move |p: [f64; 2]| apply_h(&warp_matrix, p);
    let mask: Vec<[f64; 2]> = grid.corners.iter().map(|p| warp(*p)).collect();
    let warp_map = build_piecewise_map(&grid, &mask).unwrap();
    let distorted = predistort_model(&head, &cams, &warp_map, &MoldPlacement::IDENTITY).unwrap();

    let mut max_px = 0.0f64;
    for (orig, moved) in head
        .vertices
        .iter()
        .zip(distorted.vertices.iter())
        .step_by(7)
    {
        let s_orig = project(&cams, *orig);
        let s_new = project(&cams, *moved);
        // Interior check: the head projects well inside the lattice.
        assert!(s_orig[0] > 80.0 && s_orig[0] < 560.0);
        assert!(s_orig[1] > 60.0 && s_orig[1] < 420.0);
        let inverted = invert_by_dense_sampling(&warp, s_new, (0.0, 640.0), (0.0, 480.0));
        let err = ((inverted[0] - s_orig[0]).powi(2) + (inverted[1] - s_orig[1]).powi(2)).sqrt();
        max_px = max_px.max(err);
    }
    assert!(max_px < 1e-4, "reprojection error {max_px} px");
    println!(
        "ACCEPTANCE 6 PASS: identity deviation {max_dev:.3e}, warp reprojection {max_px:.3e} px"
    );
}

/// Criterion 7 — a seven-second input yields exactly 210 frames at
/// 30 fps and synthesizes (excluding mesh export) in under 100 ms.
#[test]
fn acceptance_07_frame_count_and_timing() {
    let table = VisemeTable::default_english();
    let compat = CompatibilityTable::default_table(&table);
    let config = EngineConfig::default();
    let text = fs::read_to_string(fixture("seven_sec.tsv")).unwrap();
    let transcript = parse_transcript(&text, table.symbol_set()).unwrap();
    assert_eq!(transcript.total_duration, 7.0);

    // Warm once, then time the synthesis alone.
    let warm = synthesize(&transcript, &[], &table, &compat, &config, false).unwrap();
    assert_eq!(warm.n_frames(), 210);
    let started = Instant::now();
    let timeline = synthesize(&transcript, &[], &table, &compat, &config, false).unwrap();
    let elapsed = started.elapsed();
    assert_eq!(timeline.n_frames(), 210);
    assert!(
        elapsed.as_secs_f64() < 0.100,
        "synthesis took {elapsed:?}, budget 100 ms"
    );
    println!("ACCEPTANCE 7 PASS: 210 frames, synthesis in {elapsed:?}");
}

/// Criterion 8 — neck clamping: one million random poses stay inside
/// +-75/+-15/+-15 degrees and clamping is idempotent.
#[test]
fn acceptance_08_neck_envelope_fuzz() {
    let mut rng = StdRng::seed_from_u64(108);
    for _ in 0..1_000_000 {
        let yaw = rng.random_range(-1000.0..1000.0);
        let pitch = rng.random_range(-1000.0..1000.0);
        let roll = rng.random_range(-1000.0..1000.0);
        let (pose, _) = clamp_neck(yaw, pitch, roll).unwrap();
        assert!(pose.yaw.abs() <= YAW_LIMIT);
        assert!(pose.pitch.abs() <= PITCH_LIMIT);
        assert!(pose.roll.abs() <= ROLL_LIMIT);
        let (again, flags) = clamp_neck(pose.yaw, pose.pitch, pose.roll).unwrap();
        assert_eq!(pose, again);
        assert!(!flags.any());
    }
    println!("ACCEPTANCE 8 PASS: 1,000,000 poses clamped within the envelope, idempotent");
}

/// Criterion 9 — viseme inventory integrity: exactly 20 classes, /b p m/
/// co-classed, /f v/ co-classed, every phoneme mapped exactly once.
#[test]
fn acceptance_09_viseme_inventory_integrity() {
    let table = VisemeTable::default_english();
    assert_eq!(table.classes().len(), 20);

    let b = table.map_phoneme("b").unwrap().id;
    assert_eq!(table.map_phoneme("p").unwrap().id, b);
    assert_eq!(table.map_phoneme("m").unwrap().id, b);
    assert!(table.class(b).unwrap().is_labial);

    let f = table.map_phoneme("f").unwrap().id;
    assert_eq!(table.map_phoneme("v").unwrap().id, f);
    assert!(table.class(f).unwrap().is_labiodental);
    assert_ne!(b, f);

    let total_members: usize = table.classes().iter().map(|c| c.members.len()).sum();
    assert_eq!(
        total_members,
        table.symbol_set().len(),
        "classes must partition the inventory"
    );
    for symbol in table.symbol_set() {
        let class = table.map_phoneme(symbol).unwrap();
        let holders = table
            .classes()
            .iter()
            .filter(|c| c.members.contains(symbol))
            .count();
        assert_eq!(holders, 1, "symbol '{symbol}' held by {holders} classes");
        assert!(class.members.contains(symbol));
    }
    println!(
        "ACCEPTANCE 9 PASS: 20 classes partition {} phonemes; labial and labiodental co-classing hold",
        table.symbol_set().len()
    );
}

/// Criterion 10 — synthesizing the golden fixture twice through the CLI
/// produces byte-identical timelines.
#[test]
fn acceptance_10_cli_determinism() {
    let out_a = std::env::temp_dir().join(format!("visage-acc10-a-{}", std::process::id()));
    let out_b = std::env::temp_dir().join(format!("visage-acc10-b-{}", std::process::id()));
    for out in [&out_a, &out_b] {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_visage"))
            .args([
                "synthesize",
                "--transcript",
                fixture("seven_sec.tsv").to_str().unwrap(),
                "--emotions",
                fixture("emotions.csv").to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .expect("binary runs");
        assert!(status.success());
    }
    let a = fs::read(&out_a).unwrap();
    let b = fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "two runs must be byte-identical");
    fs::remove_file(&out_a).ok();
    fs::remove_file(&out_b).ok();
    println!(
        "ACCEPTANCE 10 PASS: {} byte timeline reproduced exactly",
        a.len()
    );
}
