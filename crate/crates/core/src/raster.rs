use serde::{Deserialize, Serialize};

/// Row-major single-channel image of radiance values.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Wraps an existing buffer. Panics if the length does not match.
    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height, "raster buffer size mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Samples row `y` at fractional column `x` with linear interpolation.
    /// Returns `None` outside `[0, width - 1]`.
    #[inline]
    pub fn sample_row(&self, x: f64, y: usize) -> Option<f64> {
        let row = self.row(y);
        sample_linear(row, x)
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Linear interpolation along a row. An integral coordinate returns the stored
/// sample unchanged, so a zero shift is an exact copy.
#[inline]
pub(crate) fn sample_linear(row: &[f32], x: f64) -> Option<f64> {
    if !(x >= 0.0) || x > (row.len() - 1) as f64 {
        return None;
    }
    let i = x.floor() as usize;
    let t = x - i as f64;
    if t == 0.0 {
        return Some(row[i] as f64);
    }
    let a = row[i] as f64;
    let b = row[i + 1] as f64;
    Some(a + (b - a) * t)
}

/// Axis-aligned pixel rectangle, `x0..x0+width`, `y0..y0+height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl PixelRect {
    pub fn new(x0: usize, y0: usize, width: usize, height: usize) -> Self {
        Self {
            x0,
            y0,
            width,
            height,
        }
    }

    /// Square of side `size` centred on the pixel nearest `(cx, cy)`, clipped
    /// at zero.
    pub fn centered(cx: f64, cy: f64, size: usize) -> Self {
        let half = (size / 2) as f64;
        let x0 = (cx.round() - half).max(0.0) as usize;
        let y0 = (cy.round() - half).max(0.0) as usize;
        Self::new(x0, y0, size, size)
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x0 + self.width <= width && self.y0 + self.height <= height
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y0..self.y0 + self.height)
            .flat_map(move |y| (self.x0..self.x0 + self.width).map(move |x| (x, y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_sampling_is_exact_at_integers() {
        let row = [1.0f32, 3.0, 7.0];
        assert_eq!(sample_linear(&row, 2.0), Some(7.0));
        assert_eq!(sample_linear(&row, 0.5), Some(2.0));
        assert_eq!(sample_linear(&row, 2.0001), None);
        assert_eq!(sample_linear(&row, -0.1), None);
        assert_eq!(sample_linear(&row, f64::NAN), None);
    }

    #[test]
    fn centered_rect() {
        let r = PixelRect::centered(10.4, 20.6, 5);
        assert_eq!(r, PixelRect::new(8, 19, 5, 5));
        assert!(r.fits(13, 24));
        assert!(!r.fits(12, 24));
        assert_eq!(r.pixels().count(), 25);
    }
}
