//! Heatmap rendering: min-max scaled blue→red ramp, written as binary PPM (P6).

use crate::Matrix;

pub const DEFAULT_CELL_PX: usize = 16;

/// Linear ramp from blue `(0, 0, 255)` at `t = 0` to red `(255, 0, 0)` at `t = 1`.
pub fn blue_red(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    [
        (255.0 * t).round() as u8,
        0,
        (255.0 * (1.0 - t)).round() as u8,
    ]
}

/// Min-max scaled values in `[0, 1]`; a constant map scales to all zeros.
pub fn min_max_scaled(map: &Matrix) -> Matrix {
    let (Some(lo), Some(hi)) = (map.min(), map.max()) else {
        return map.clone();
    };
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return Matrix::zeros(map.rows(), map.cols());
    }
    map.map(|x| (x - lo) / range)
}

/// Renders each matrix cell as a `cell_px × cell_px` block. Returns
/// `(width, height, rgb)` with `width = cols · cell_px`, `height = rows · cell_px`.
pub fn render_rgb(map: &Matrix, cell_px: usize) -> (usize, usize, Vec<u8>) {
    let cell_px = cell_px.max(1);
    let scaled = min_max_scaled(map);
    let (width, height) = (map.cols() * cell_px, map.rows() * cell_px);
    let mut rgb = Vec::with_capacity(width * height * 3);
    for i in 0..map.rows() {
        let row: Vec<[u8; 3]> = scaled.row(i).iter().map(|&t| blue_red(t)).collect();
        for _ in 0..cell_px {
            for color in &row {
                for _ in 0..cell_px {
                    rgb.extend_from_slice(color);
                }
            }
        }
    }
    (width, height, rgb)
}

pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

pub fn heatmap_ppm(map: &Matrix, cell_px: usize) -> Vec<u8> {
    let (w, h, rgb) = render_rgb(map, cell_px);
    encode_ppm(w, h, &rgb)
}
