use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral::IntegralImage;
use crate::raster::{PixelRect, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    /// `(max - min) / (max + min)`; `None` when `max + min` is zero.
    pub michelson: Option<f64>,
    /// Standard deviation of the region's values.
    pub rms: f64,
}

/// Contrast of the covered pixels of `region` in an integral image.
pub fn contrast_metric(integral: &IntegralImage, region: PixelRect) -> Result<Contrast> {
    contrast_of(&integral.image, region, Some(&integral.coverage))
}

/// Contrast of `region`, optionally skipping pixels with zero coverage.
pub fn contrast_of(image: &Raster, region: PixelRect, coverage: Option<&[u16]>) -> Result<Contrast> {
    if region.is_empty() || !region.fits(image.width(), image.height()) {
        return Err(Error::invalid(format!(
            "contrast region {region:?} is empty or outside the {}x{} image",
            image.width(),
            image.height()
        )));
    }
    let w = image.width();
    let values: Vec<f64> = region
        .pixels()
        .filter(|&(x, y)| coverage.is_none_or(|c| c[y * w + x] > 0))
        .map(|(x, y)| image.get(x, y) as f64)
        .collect();
    if values.is_empty() {
        return Err(Error::invalid("contrast region has no covered pixels"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let rms = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let michelson = if hi + lo == 0.0 {
        None
    } else {
        Some((hi - lo) / (hi + lo))
    };
    Ok(Contrast { michelson, rms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_region_has_zero_rms() {
        let img = Raster::filled(10, 10, 4.0);
        let c = contrast_of(&img, PixelRect::new(0, 0, 10, 10), None).unwrap();
        assert_eq!(c.rms, 0.0);
        assert_eq!(c.michelson, Some(0.0));
    }

    #[test]
    fn binary_region_has_unit_michelson() {
        let data = (0..100).map(|i| (i % 2) as f32).collect();
        let img = Raster::from_vec(10, 10, data);
        let c = contrast_of(&img, PixelRect::new(0, 0, 10, 10), None).unwrap();
        assert_eq!(c.michelson, Some(1.0));
        assert!((c.rms - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_zero_region() {
        let img = Raster::new(4, 4);
        let c = contrast_of(&img, PixelRect::new(0, 0, 4, 4), None).unwrap();
        assert_eq!(c.michelson, None);
        assert_eq!(c.rms, 0.0);
    }

    #[test]
    fn empty_region_rejected() {
        let img = Raster::new(4, 4);
        assert!(contrast_of(&img, PixelRect::new(0, 0, 0, 4), None).is_err());
    }
}
