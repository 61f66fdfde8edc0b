//! Calibration file formats.
//!
//! - correspondences: CSV `row,col,mask_x,mask_y`, one record per lattice
//!   corner, `#` comments.
//! - piecewise map: line-oriented text with rows/cols/screen size, lattice
//!   corners and nine matrix entries per cell. Floats use shortest
//!   round-trip formatting, so parse(serialize(m)) is bit-identical.
//! - camera matrices: 48 whitespace-separated numbers (world, view,
//!   projection; row-major).
//! - mold placement: 6 numbers, row-major 2x3.
//! - checkerboard pattern: binary PGM (P5) for direct projection.

use super::{CalibrationError, CameraMatrices, CellMode, Homography, MoldPlacement, PiecewiseMap};
use crate::math::{Mat3, Mat4};

/// Parse corner correspondences into a row-major mask-corner lattice for
/// a (rows x cols) grid. Every corner must appear exactly once.
pub fn parse_correspondences(
    text: &str,
    rows: usize,
    cols: usize,
) -> Result<Vec<[f64; 2]>, CalibrationError> {
    let stride = cols + 1;
    let total = (rows + 1) * stride;
    let mut corners: Vec<Option<[f64; 2]>> = vec![None; total];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(CalibrationError::Parse {
                line,
                detail: "expected row,col,mask_x,mask_y".into(),
            });
        }
        let r: usize = fields[0].parse().map_err(|_| CalibrationError::Parse {
            line,
            detail: format!("bad row '{}'", fields[0]),
        })?;
        let c: usize = fields[1].parse().map_err(|_| CalibrationError::Parse {
            line,
            detail: format!("bad col '{}'", fields[1]),
        })?;
        if r > rows || c > cols {
            return Err(CalibrationError::Parse {
                line,
                detail: format!("corner ({r},{c}) outside a {rows}x{cols} grid"),
            });
        }
        let x: f64 = fields[2].parse().map_err(|_| CalibrationError::Parse {
            line,
            detail: format!("bad x '{}'", fields[2]),
        })?;
        let y: f64 = fields[3].parse().map_err(|_| CalibrationError::Parse {
            line,
            detail: format!("bad y '{}'", fields[3]),
        })?;
        let slot = &mut corners[r * stride + c];
        if slot.replace([x, y]).is_some() {
            return Err(CalibrationError::Parse {
                line,
                detail: format!("duplicate corner ({r},{c})"),
            });
        }
    }
    corners
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| CalibrationError::Parse {
                line: 0,
                detail: format!("missing corner ({}, {})", i / stride, i % stride),
            })
        })
        .collect()
}

pub fn serialize_piecewise_map(map: &PiecewiseMap) -> String {
    let mut out = String::from("# piecewise homography map\n");
    out.push_str(&format!("rows {}\n", map.rows));
    out.push_str(&format!("cols {}\n", map.cols));
    out.push_str(&format!("screen {} {}\n", map.width, map.height));
    out.push_str(match map.mode {
        CellMode::Quad => "mode quad\n",
        CellMode::TrianglePair => "mode triangles\n",
    });
    let stride = map.cols + 1;
    for r in 0..=map.rows {
        for c in 0..=map.cols {
            let s = map.screen_corners[r * stride + c];
            let m = map.mask_corners[r * stride + c];
            out.push_str(&format!(
                "corner {r} {c} {} {} {} {}\n",
                s[0], s[1], m[0], m[1]
            ));
        }
    }
    let matrix_line = |h: &Homography| -> String {
        let entries: Vec<String> = h.matrix().m.iter().flatten().map(f64::to_string).collect();
        entries.join(" ")
    };
    for r in 0..map.rows {
        for c in 0..map.cols {
            match map.mode {
                CellMode::Quad => {
                    out.push_str(&format!("cell {r} {c} {}\n", matrix_line(map.cell(r, c))));
                }
                CellMode::TrianglePair => {
                    for k in 0..2 {
                        out.push_str(&format!(
                            "tri {r} {c} {k} {}\n",
                            matrix_line(map.triangle(r, c, k))
                        ));
                    }
                }
            }
        }
    }
    out
}

pub fn parse_piecewise_map(text: &str) -> Result<PiecewiseMap, CalibrationError> {
    let mut rows: Option<usize> = None;
    let mut cols: Option<usize> = None;
    let mut screen: Option<(f64, f64)> = None;
    let mut mode = CellMode::Quad;
    let mut corner_records: Vec<(usize, usize, [f64; 2], [f64; 2])> = Vec::new();
    // (row, col, triangle index or 0, entries)
    let mut cell_records: Vec<(usize, usize, usize, [f64; 9])> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let parse_f = |s: &str| -> Result<f64, CalibrationError> {
            s.parse().map_err(|_| CalibrationError::Parse {
                line,
                detail: format!("bad number '{s}'"),
            })
        };
        let parse_u = |s: &str| -> Result<usize, CalibrationError> {
            s.parse().map_err(|_| CalibrationError::Parse {
                line,
                detail: format!("bad integer '{s}'"),
            })
        };
        let parse_entries = |fields: &[&str]| -> Result<[f64; 9], CalibrationError> {
            let mut entries = [0.0f64; 9];
            for (slot, field) in entries.iter_mut().zip(fields) {
                *slot = parse_f(field)?;
            }
            Ok(entries)
        };
        match fields[0] {
            "rows" if fields.len() == 2 => rows = Some(parse_u(fields[1])?),
            "cols" if fields.len() == 2 => cols = Some(parse_u(fields[1])?),
            "screen" if fields.len() == 3 => {
                screen = Some((parse_f(fields[1])?, parse_f(fields[2])?))
            }
            "mode" if fields.len() == 2 => {
                mode = match fields[1] {
                    "quad" => CellMode::Quad,
                    "triangles" => CellMode::TrianglePair,
                    other => {
                        return Err(CalibrationError::Parse {
                            line,
                            detail: format!("unknown mode '{other}'"),
                        })
                    }
                };
            }
            "corner" if fields.len() == 7 => {
                corner_records.push((
                    parse_u(fields[1])?,
                    parse_u(fields[2])?,
                    [parse_f(fields[3])?, parse_f(fields[4])?],
                    [parse_f(fields[5])?, parse_f(fields[6])?],
                ));
            }
            "cell" if fields.len() == 12 => {
                cell_records.push((
                    parse_u(fields[1])?,
                    parse_u(fields[2])?,
                    0,
                    parse_entries(&fields[3..])?,
                ));
            }
            "tri" if fields.len() == 13 => {
                let k = parse_u(fields[3])?;
                if k > 1 {
                    return Err(CalibrationError::Parse {
                        line,
                        detail: format!("triangle index {k} out of range"),
                    });
                }
                cell_records.push((
                    parse_u(fields[1])?,
                    parse_u(fields[2])?,
                    k,
                    parse_entries(&fields[4..])?,
                ));
            }
            other => {
                return Err(CalibrationError::Parse {
                    line,
                    detail: format!("unknown or malformed record '{other}'"),
                })
            }
        }
    }

    let rows = rows.ok_or(CalibrationError::Parse {
        line: 0,
        detail: "missing rows".into(),
    })?;
    let cols = cols.ok_or(CalibrationError::Parse {
        line: 0,
        detail: "missing cols".into(),
    })?;
    let (width, height) = screen.ok_or(CalibrationError::Parse {
        line: 0,
        detail: "missing screen size".into(),
    })?;
    if rows < 1 || cols < 1 {
        return Err(CalibrationError::BadDimensions(format!(
            "map must be at least 1x1, got {rows}x{cols}"
        )));
    }

    let stride = cols + 1;
    let mut screen_corners = vec![[0.0f64; 2]; (rows + 1) * stride];
    let mut mask_corners = vec![[0.0f64; 2]; (rows + 1) * stride];
    let mut seen_corners = vec![false; (rows + 1) * stride];
    for (r, c, s, m) in corner_records {
        if r > rows || c > cols {
            return Err(CalibrationError::Parse {
                line: 0,
                detail: format!("corner ({r},{c}) out of range"),
            });
        }
        screen_corners[r * stride + c] = s;
        mask_corners[r * stride + c] = m;
        seen_corners[r * stride + c] = true;
    }
    if seen_corners.iter().any(|seen| !seen) {
        return Err(CalibrationError::Parse {
            line: 0,
            detail: "incomplete corner lattice".into(),
        });
    }

    let per_cell = match mode {
        CellMode::Quad => 1,
        CellMode::TrianglePair => 2,
    };
    let mut cells: Vec<Option<Homography>> = vec![None; per_cell * rows * cols];
    for (r, c, k, entries) in cell_records {
        if r >= rows || c >= cols || k >= per_cell {
            return Err(CalibrationError::Parse {
                line: 0,
                detail: format!("cell ({r},{c}) record does not fit the declared mode"),
            });
        }
        let m = Mat3::from_rows([
            [entries[0], entries[1], entries[2]],
            [entries[3], entries[4], entries[5]],
            [entries[6], entries[7], entries[8]],
        ]);
        // Stored matrices are already normalized; rebuild without
        // rescaling so round trips stay bit-identical.
        if m.det().abs() <= 1e-12 {
            return Err(CalibrationError::DegenerateCell { row: r, col: c });
        }
        cells[per_cell * (r * cols + c) + k] = Some(Homography { matrix: m });
    }
    let cells: Vec<Homography> = cells
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or(CalibrationError::Parse {
                line: 0,
                detail: format!(
                    "missing cell ({}, {})",
                    (i / per_cell) / cols,
                    (i / per_cell) % cols
                ),
            })
        })
        .collect::<Result<_, _>>()?;

    Ok(PiecewiseMap {
        rows,
        cols,
        width,
        height,
        mode,
        cells,
        screen_corners,
        mask_corners,
    })
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, CalibrationError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        for field in trimmed.split_whitespace() {
            out.push(field.parse().map_err(|_| CalibrationError::Parse {
                line,
                detail: format!("bad number '{field}'"),
            })?);
        }
    }
    Ok(out)
}

/// Parse world, view and projection matrices: 48 numbers, row-major.
pub fn parse_camera_matrices(text: &str) -> Result<CameraMatrices, CalibrationError> {
    let numbers = parse_numbers(text)?;
    if numbers.len() != 48 {
        return Err(CalibrationError::Parse {
            line: 0,
            detail: format!("expected 48 numbers (3 matrices), got {}", numbers.len()),
        });
    }
    let mat = |offset: usize| {
        let mut m = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = numbers[offset + i * 4 + j];
            }
        }
        Mat4::from_rows(m)
    };
    Ok(CameraMatrices {
        world: mat(0),
        view: mat(16),
        projection: mat(32),
    })
}

/// Parse a 2x3 affine placement: 6 numbers, row-major.
pub fn parse_mold_placement(text: &str) -> Result<MoldPlacement, CalibrationError> {
    let numbers = parse_numbers(text)?;
    if numbers.len() != 6 {
        return Err(CalibrationError::Parse {
            line: 0,
            detail: format!("expected 6 numbers, got {}", numbers.len()),
        });
    }
    let placement = MoldPlacement {
        m: [
            [numbers[0], numbers[1], numbers[2]],
            [numbers[3], numbers[4], numbers[5]],
        ],
    };
    if placement.linear_det().abs() < 1e-12 {
        return Err(CalibrationError::DegenerateConfiguration(
            "placement has a singular linear part".into(),
        ));
    }
    Ok(placement)
}

pub fn serialize_mold_placement(placement: &MoldPlacement) -> String {
    format!(
        "{} {} {}\n{} {} {}\n",
        placement.m[0][0],
        placement.m[0][1],
        placement.m[0][2],
        placement.m[1][0],
        placement.m[1][1],
        placement.m[1][2]
    )
}

/// Render the checkerboard as a binary PGM (P5) image. Cell (0, 0) is
/// dark.
pub fn render_checkerboard_pgm(
    rows: usize,
    cols: usize,
    width: usize,
    height: usize,
) -> Result<Vec<u8>, CalibrationError> {
    if rows < 1 || cols < 1 || width < 1 || height < 1 {
        return Err(CalibrationError::BadDimensions(
            "pattern needs positive grid and pixel sizes".into(),
        ));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.reserve(width * height);
    for y in 0..height {
        let r = (y * rows / height).min(rows - 1);
        for x in 0..width {
            let c = (x * cols / width).min(cols - 1);
            out.push(if super::CheckerboardGrid::cell_is_dark(r, c) {
                0
            } else {
                255
            });
        }
    }
    Ok(out)
}
