//! Projection-mapping calibration: checkerboard lattices, piecewise
//! homographies between screen and mask coordinates, affine mold
//! placement, and pre-distortion of a model through the inverse WVP
//! transform so its projection lands undistorted on the mask.

mod files;

pub use files::{
    parse_camera_matrices, parse_correspondences, parse_mold_placement, parse_piecewise_map,
    render_checkerboard_pgm, serialize_mold_placement, serialize_piecewise_map,
};

use thiserror::Error;

use crate::math::{jacobi_eigen_sym, solve3, Mat3, Mat4};
use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("need at least {needed} point pairs, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("degenerate cell ({row}, {col})")]
    DegenerateCell { row: usize, col: usize },
    #[error("projective divide by zero")]
    ProjectiveDivideByZero,
    #[error("WVP matrix is not invertible")]
    UninvertibleWVP,
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Scale-normalized invertible 3x3 projective transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    matrix: Mat3,
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        matrix: Mat3::IDENTITY,
    };

    /// Normalize scale (bottom-right entry forced to 1 when nonzero) and
    /// verify invertibility.
    pub fn from_matrix(m: Mat3) -> Result<Homography, CalibrationError> {
        let mut m = m;
        let scale = m.m[2][2];
        if scale.abs() > 1e-12 {
            for row in &mut m.m {
                for cell in row.iter_mut() {
                    *cell /= scale;
                }
            }
        }
        if m.det().abs() <= 1e-12 {
            return Err(CalibrationError::DegenerateConfiguration(
                "homography is not invertible".into(),
            ));
        }
        Ok(Homography { matrix: m })
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    /// Apply with homogeneous divide.
    pub fn apply(&self, p: [f64; 2]) -> Result<[f64; 2], CalibrationError> {
        let [x, y, w] = self.matrix.apply_homogeneous(p);
        if w.abs() < 1e-12 {
            return Err(CalibrationError::ProjectiveDivideByZero);
        }
        Ok([x / w, y / w])
    }
}

/// Uniform corner lattice of a screen-space checkerboard.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckerboardGrid {
    pub rows: usize,
    pub cols: usize,
    pub width: f64,
    pub height: f64,
    /// (rows+1) x (cols+1) corner points, row-major.
    pub corners: Vec<[f64; 2]>,
}

impl CheckerboardGrid {
    pub fn corner(&self, row: usize, col: usize) -> [f64; 2] {
        self.corners[row * (self.cols + 1) + col]
    }

    /// Checker color of a cell; (0, 0) is dark.
    pub fn cell_is_dark(row: usize, col: usize) -> bool {
        (row + col).is_multiple_of(2)
    }
}

/// Uniform (rows+1) x (cols+1) corner lattice over a screen of the given
/// pixel size.
pub fn gen_checkerboard(
    rows: usize,
    cols: usize,
    width: f64,
    height: f64,
) -> Result<CheckerboardGrid, CalibrationError> {
    if rows < 1 || cols < 1 {
        return Err(CalibrationError::BadDimensions(format!(
            "grid must be at least 1x1, got {rows}x{cols}"
        )));
    }
    if width <= 0.0 || height <= 0.0 || width.is_nan() || height.is_nan() {
        return Err(CalibrationError::BadDimensions(format!(
            "screen size must be positive, got {width}x{height}"
        )));
    }
    let mut corners = Vec::with_capacity((rows + 1) * (cols + 1));
    for r in 0..=rows {
        for c in 0..=cols {
            corners.push([
                c as f64 * width / cols as f64,
                r as f64 * height / rows as f64,
            ]);
        }
    }
    Ok(CheckerboardGrid {
        rows,
        cols,
        width,
        height,
        corners,
    })
}

/// Hartley normalization: translate the centroid to the origin and scale
/// the mean distance to sqrt(2).
fn normalize_points(points: &[[f64; 2]]) -> Result<(Vec<[f64; 2]>, Mat3), CalibrationError> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if mean_dist < 1e-12 {
        return Err(CalibrationError::DegenerateConfiguration(
            "points are coincident".into(),
        ));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    let t = Mat3::from_rows([[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]]);
    let normalized = points
        .iter()
        .map(|p| [s * (p[0] - cx), s * (p[1] - cy)])
        .collect();
    Ok((normalized, t))
}

fn triple_collinear(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    let abx = b[0] - a[0];
    let aby = b[1] - a[1];
    let acx = c[0] - a[0];
    let acy = c[1] - a[1];
    let cross = abx * acy - aby * acx;
    let scale = (abx * abx + aby * aby).sqrt() * (acx * acx + acy * acy).sqrt();
    cross.abs() <= 1e-9 * scale.max(1e-12)
}

fn any_triple_collinear(points: &[[f64; 2]]) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if triple_collinear(points[i], points[j], points[k]) {
                    return true;
                }
            }
        }
    }
    false
}

/// Estimate the homography mapping `src` to `dst` with the normalized
/// direct linear transform (least squares for more than four pairs).
///
/// Exactly four pairs admit no redundancy, so no three source or
/// destination points may be collinear; larger sets are rejected when the
/// design matrix loses rank.
pub fn estimate_homography(
    src: &[[f64; 2]],
    dst: &[[f64; 2]],
) -> Result<Homography, CalibrationError> {
    if src.len() < 4 || src.len() != dst.len() {
        return Err(CalibrationError::InsufficientPoints {
            needed: 4,
            got: src.len().min(dst.len()),
        });
    }
    if src.len() == 4 && (any_triple_collinear(src) || any_triple_collinear(dst)) {
        return Err(CalibrationError::DegenerateConfiguration(
            "three of four points are collinear".into(),
        ));
    }

    let (src_n, t_src) = normalize_points(src)?;
    let (dst_n, t_dst) = normalize_points(dst)?;

    // Accumulate A^T A directly (A is 2n x 9).
    let mut ata = [[0.0f64; 9]; 9];
    let mut add_row = |row: [f64; 9]| {
        for i in 0..9 {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..9 {
                ata[i][j] += row[i] * row[j];
            }
        }
    };
    for (s, d) in src_n.iter().zip(dst_n.iter()) {
        let [x, y] = *s;
        let [u, v] = *d;
        add_row([-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        add_row([0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }

    let (values, vectors) = jacobi_eigen_sym::<9>(ata);
    // A second near-zero eigenvalue means the solution is not unique.
    if values[1].abs() <= 1e-12 * values[8].abs().max(1e-12) {
        return Err(CalibrationError::DegenerateConfiguration(
            "rank-deficient correspondence set".into(),
        ));
    }
    let h = vectors[0];
    let h_norm = Mat3::from_rows([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], h[8]]]);

    let t_dst_inv = t_dst
        .inverse_checked()
        .ok_or(CalibrationError::DegenerateConfiguration(
            "normalization transform not invertible".into(),
        ))?;
    Homography::from_matrix(t_dst_inv.mul(&h_norm).mul(&t_src))
}

/// How a grid cell is mapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellMode {
    /// One exact 4-point homography per cell (the default).
    Quad,
    /// Two exact 3-point affine transforms per cell, split along the
    /// top-left/bottom-right diagonal; a comparison mode.
    TrianglePair,
}

/// Grid of per-cell transforms from screen cells to mask coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseMap {
    pub rows: usize,
    pub cols: usize,
    pub width: f64,
    pub height: f64,
    pub mode: CellMode,
    /// Row-major per-cell transforms; two entries per cell in
    /// [`CellMode::TrianglePair`] order (upper-right, lower-left).
    pub cells: Vec<Homography>,
    pub screen_corners: Vec<[f64; 2]>,
    pub mask_corners: Vec<[f64; 2]>,
}

impl PiecewiseMap {
    pub fn cell(&self, row: usize, col: usize) -> &Homography {
        match self.mode {
            CellMode::Quad => &self.cells[row * self.cols + col],
            CellMode::TrianglePair => &self.cells[2 * (row * self.cols + col)],
        }
    }

    /// Triangle `k` (0 = upper-right of the diagonal, 1 = lower-left) of
    /// a cell in [`CellMode::TrianglePair`].
    pub fn triangle(&self, row: usize, col: usize, k: usize) -> &Homography {
        debug_assert_eq!(self.mode, CellMode::TrianglePair);
        &self.cells[2 * (row * self.cols + col) + k]
    }
}

/// One exact 4-point homography per checkerboard cell.
pub fn build_piecewise_map(
    grid: &CheckerboardGrid,
    mask_corners: &[[f64; 2]],
) -> Result<PiecewiseMap, CalibrationError> {
    if mask_corners.len() != grid.corners.len() {
        return Err(CalibrationError::BadDimensions(format!(
            "expected {} mask corners, got {}",
            grid.corners.len(),
            mask_corners.len()
        )));
    }
    let stride = grid.cols + 1;
    let mut cells = Vec::with_capacity(grid.rows * grid.cols);
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let idx = [
                r * stride + c,
                r * stride + c + 1,
                (r + 1) * stride + c + 1,
                (r + 1) * stride + c,
            ];
            let src: Vec<[f64; 2]> = idx.iter().map(|&i| grid.corners[i]).collect();
            let dst: Vec<[f64; 2]> = idx.iter().map(|&i| mask_corners[i]).collect();
            let h = estimate_homography(&src, &dst)
                .map_err(|_| CalibrationError::DegenerateCell { row: r, col: c })?;
            cells.push(h);
        }
    }
    Ok(PiecewiseMap {
        rows: grid.rows,
        cols: grid.cols,
        width: grid.width,
        height: grid.height,
        mode: CellMode::Quad,
        cells,
        screen_corners: grid.corners.clone(),
        mask_corners: mask_corners.to_vec(),
    })
}

/// Exact affine transform taking three source points to three
/// destination points.
fn affine_from_triangle(
    src: &[[f64; 2]; 3],
    dst: &[[f64; 2]; 3],
) -> Result<Homography, CalibrationError> {
    let g = [
        [src[0][0], src[0][1], 1.0],
        [src[1][0], src[1][1], 1.0],
        [src[2][0], src[2][1], 1.0],
    ];
    let row_x = solve3(g, [dst[0][0], dst[1][0], dst[2][0]]);
    let row_y = solve3(g, [dst[0][1], dst[1][1], dst[2][1]]);
    match (row_x, row_y) {
        (Some(rx), Some(ry)) => Homography::from_matrix(Mat3::from_rows([rx, ry, [0.0, 0.0, 1.0]])),
        _ => Err(CalibrationError::DegenerateConfiguration(
            "collinear triangle".into(),
        )),
    }
}

/// Comparison mode: each checkerboard cell split along its top-left to
/// bottom-right diagonal into two exact 3-point affine transforms.
pub fn build_piecewise_map_triangles(
    grid: &CheckerboardGrid,
    mask_corners: &[[f64; 2]],
) -> Result<PiecewiseMap, CalibrationError> {
    if mask_corners.len() != grid.corners.len() {
        return Err(CalibrationError::BadDimensions(format!(
            "expected {} mask corners, got {}",
            grid.corners.len(),
            mask_corners.len()
        )));
    }
    let stride = grid.cols + 1;
    let mut cells = Vec::with_capacity(2 * grid.rows * grid.cols);
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let tl = r * stride + c;
            let tr = r * stride + c + 1;
            let br = (r + 1) * stride + c + 1;
            let bl = (r + 1) * stride + c;
            for idx in [[tl, tr, br], [tl, br, bl]] {
                let src = [
                    grid.corners[idx[0]],
                    grid.corners[idx[1]],
                    grid.corners[idx[2]],
                ];
                let dst = [
                    mask_corners[idx[0]],
                    mask_corners[idx[1]],
                    mask_corners[idx[2]],
                ];
                let affine = affine_from_triangle(&src, &dst)
                    .map_err(|_| CalibrationError::DegenerateCell { row: r, col: c })?;
                cells.push(affine);
            }
        }
    }
    Ok(PiecewiseMap {
        rows: grid.rows,
        cols: grid.cols,
        width: grid.width,
        height: grid.height,
        mode: CellMode::TrianglePair,
        cells,
        screen_corners: grid.corners.clone(),
        mask_corners: mask_corners.to_vec(),
    })
}

/// Map a screen point through its containing cell. Points outside the
/// lattice use the nearest boundary cell and report `clamped = true`.
pub fn map_point(map: &PiecewiseMap, p: [f64; 2]) -> Result<([f64; 2], bool), CalibrationError> {
    let cell_w = map.width / map.cols as f64;
    let cell_h = map.height / map.rows as f64;
    let raw_col = (p[0] / cell_w).floor();
    let raw_row = (p[1] / cell_h).floor();
    let col = (raw_col.max(0.0) as usize).min(map.cols - 1);
    let row = (raw_row.max(0.0) as usize).min(map.rows - 1);
    let clamped = raw_col < 0.0
        || raw_row < 0.0
        || raw_col as usize > map.cols - 1
        || raw_row as usize > map.rows - 1;
    let transform = match map.mode {
        CellMode::Quad => map.cell(row, col),
        CellMode::TrianglePair => {
            // Local cell coordinates decide the side of the diagonal.
            let lu = p[0] / cell_w - col as f64;
            let lv = p[1] / cell_h - row as f64;
            map.triangle(row, col, if lu >= lv { 0 } else { 1 })
        }
    };
    let out = transform.apply(p)?;
    Ok((out, clamped))
}

/// World, view and projection matrices composed for row vectors:
/// `screen = v * world * view * projection` with homogeneous divide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraMatrices {
    pub world: Mat4,
    pub view: Mat4,
    pub projection: Mat4,
}

impl CameraMatrices {
    pub fn wvp(&self) -> Mat4 {
        self.world.mul(&self.view).mul(&self.projection)
    }
}

/// 2D affine transform (2x3) placing mold-model points on a mask image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoldPlacement {
    pub m: [[f64; 3]; 2],
}

impl MoldPlacement {
    pub const IDENTITY: MoldPlacement = MoldPlacement {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    };

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * p[0] + self.m[0][1] * p[1] + self.m[0][2],
            self.m[1][0] * p[0] + self.m[1][1] * p[1] + self.m[1][2],
        ]
    }

    pub fn linear_det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

/// Residual report from an affine fit.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineResidual {
    pub rms: f64,
    pub max: f64,
    pub per_point: Vec<f64>,
}

/// Least-squares 6-parameter affine fit of `src` onto `dst`.
pub fn fit_affine_mold(
    src: &[[f64; 2]],
    dst: &[[f64; 2]],
) -> Result<(MoldPlacement, AffineResidual), CalibrationError> {
    if src.len() < 3 || src.len() != dst.len() {
        return Err(CalibrationError::InsufficientPoints {
            needed: 3,
            got: src.len().min(dst.len()),
        });
    }
    let (src_n, t_src) = normalize_points(src)?;
    let (dst_n, t_dst) = normalize_points(dst)?;

    // Normal equations on normalized coordinates, one system per output axis.
    let mut gtg = [[0.0f64; 3]; 3];
    let mut rhs_x = [0.0f64; 3];
    let mut rhs_y = [0.0f64; 3];
    for (s, d) in src_n.iter().zip(dst_n.iter()) {
        let row = [s[0], s[1], 1.0];
        for i in 0..3 {
            for j in 0..3 {
                gtg[i][j] += row[i] * row[j];
            }
            rhs_x[i] += row[i] * d[0];
            rhs_y[i] += row[i] * d[1];
        }
    }
    // Collinear sources make G^T G singular.
    let det = Mat3::from_rows(gtg).det();
    if det.abs() < 1e-9 * (src.len() as f64).powi(3) {
        return Err(CalibrationError::DegenerateConfiguration(
            "source points are collinear".into(),
        ));
    }
    let ax = solve3(gtg, rhs_x).ok_or(CalibrationError::DegenerateConfiguration(
        "singular normal equations".into(),
    ))?;
    let ay = solve3(gtg, rhs_y).ok_or(CalibrationError::DegenerateConfiguration(
        "singular normal equations".into(),
    ))?;

    // Denormalize: A = T_dst^-1 * A_n * T_src (lifted to 3x3).
    let a_n = Mat3::from_rows([ax, ay, [0.0, 0.0, 1.0]]);
    let t_dst_inv = t_dst
        .inverse_checked()
        .ok_or(CalibrationError::DegenerateConfiguration(
            "normalization transform not invertible".into(),
        ))?;
    let a = t_dst_inv.mul(&a_n).mul(&t_src);
    let placement = MoldPlacement {
        m: [a.m[0], a.m[1]],
    };
    if placement.linear_det().abs() < 1e-12 {
        return Err(CalibrationError::DegenerateConfiguration(
            "fitted affine has a singular linear part".into(),
        ));
    }

    let per_point: Vec<f64> = src
        .iter()
        .zip(dst.iter())
        .map(|(s, d)| {
            let p = placement.apply(*s);
            ((p[0] - d[0]).powi(2) + (p[1] - d[1]).powi(2)).sqrt()
        })
        .collect();
    let rms = (per_point.iter().map(|r| r * r).sum::<f64>() / per_point.len() as f64).sqrt();
    let max = per_point.iter().fold(0.0f64, |acc, r| acc.max(*r));
    Ok((
        placement,
        AffineResidual {
            rms,
            max,
            per_point,
        },
    ))
}

/// Distort a neutral model so its projection through the calibrated
/// display chain lands where the mold says it should.
///
/// Per vertex: project to screen keeping clip-space depth and w, register
/// with the mold placement, warp through the piecewise map, reassemble
/// the clip vector with the retained depth/w, and pull back through the
/// inverse WVP. Topology is untouched.
pub fn predistort_model(
    neutral: &Mesh,
    cams: &CameraMatrices,
    map: &PiecewiseMap,
    placement: &MoldPlacement,
) -> Result<Mesh, CalibrationError> {
    let wvp = cams.wvp();
    let inv = wvp
        .inverse_checked()
        .ok_or(CalibrationError::UninvertibleWVP)?;
    let mut vertices = Vec::with_capacity(neutral.vertices.len());
    for v in &neutral.vertices {
        let clip = wvp.transform_row([v[0], v[1], v[2], 1.0]);
        let w = clip[3];
        if w.abs() < 1e-12 {
            return Err(CalibrationError::ProjectiveDivideByZero);
        }
        let screen = [clip[0] / w, clip[1] / w];
        let registered = placement.apply(screen);
        let (warped, _) = map_point(map, registered)?;
        let clip_back = [warped[0] * w, warped[1] * w, clip[2], w];
        let model = inv.transform_row(clip_back);
        if model[3].abs() < 1e-12 {
            return Err(CalibrationError::ProjectiveDivideByZero);
        }
        vertices.push([
            model[0] / model[3],
            model[1] / model[3],
            model[2] / model[3],
        ]);
    }
    Ok(Mesh {
        vertices,
        faces: neutral.faces.clone(),
        landmarks: neutral.landmarks.clone(),
    })
}
