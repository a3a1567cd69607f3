//! Image products shared by the command line and the HTTP service.
//!
//! Parameters are snapped to millimetres before anything is computed, so two
//! front ends given the same request render from the same numbers and return
//! the same bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::integral::{compose_display, integrate, stereo_pair, DisplayMode, IntegralParams, ScanStack};
use crate::io::{encode_display, encode_png16, RADIANCE_SCALE};

/// Largest accepted magnitude for a length parameter, metres.
const MAX_METRES: f64 = 1.0e6;

/// Rounds a length in metres to whole millimetres.
pub fn to_mm(name: &str, v: f64) -> Result<i64> {
    if !v.is_finite() || v.abs() > MAX_METRES {
        return Err(Error::invalid(format!("{name} must be a finite length in metres, got {v}")));
    }
    Ok((v * 1000.0).round() as i64)
}

pub fn from_mm(mm: i64) -> f64 {
    mm as f64 / 1000.0
}

/// Viewing parameters at millimetre resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ViewParams {
    pub u_mm: i64,
    pub a_mm: i64,
    pub ef_mm: i64,
    pub h_mm: i64,
}

impl ViewParams {
    pub fn new(u: f64, a: f64, ef: f64, h: f64) -> Result<Self> {
        Ok(Self {
            u_mm: to_mm("u", u)?,
            a_mm: to_mm("a", a)?,
            ef_mm: to_mm("e_f", ef)?,
            h_mm: to_mm("h", h)?,
        })
    }

    pub fn u(&self) -> f64 {
        from_mm(self.u_mm)
    }
    pub fn a(&self) -> f64 {
        from_mm(self.a_mm)
    }
    pub fn ef(&self) -> f64 {
        from_mm(self.ef_mm)
    }
    pub fn h(&self) -> f64 {
        from_mm(self.h_mm)
    }

    /// Stable text form, also used for cache keys and validators.
    pub fn key(&self) -> String {
        format!("u{}_a{}_ef{}_h{}", self.u_mm, self.a_mm, self.ef_mm, self.h_mm)
    }

    /// Effective parameters as provenance entries.
    pub fn provenance(&self) -> Vec<(String, String)> {
        vec![
            ("u".into(), sig6(self.u())),
            ("a".into(), sig6(self.a())),
            ("e_f".into(), sig6(self.ef())),
            ("h".into(), sig6(self.h())),
        ]
    }
}

/// 16-bit PNG of the integral image at `(u, a, h)`; `e_f` is ignored.
pub fn integral_png(stack: &ScanStack, view: ViewParams) -> Result<Vec<u8>> {
    stack.check_integral(view.u(), view.a())?;
    let integral = integrate(stack, IntegralParams::new(view.u(), view.a(), view.h()))?;
    encode_png16(&integral.image, RADIANCE_SCALE)
}

/// PNG files of one stereo configuration.
#[derive(Debug, Clone)]
pub struct StereoPngs {
    pub left: Vec<u8>,
    pub right: Vec<u8>,
    pub side_by_side: Vec<u8>,
    pub anaglyph: Vec<u8>,
}

impl StereoPngs {
    pub fn display(&self, mode: DisplayMode) -> &[u8] {
        match mode {
            DisplayMode::SideBySide => &self.side_by_side,
            DisplayMode::Anaglyph => &self.anaglyph,
        }
    }
}

fn checked_pair(stack: &ScanStack, view: ViewParams) -> Result<crate::integral::StereoPair> {
    stack.check_stereo(view.u(), view.a(), view.ef())?;
    stereo_pair(stack, view.u(), view.ef(), view.a(), view.h())
}

/// Both eyes and both display composites.
pub fn stereo_pngs(stack: &ScanStack, view: ViewParams) -> Result<StereoPngs> {
    let pair = checked_pair(stack, view)?;
    Ok(StereoPngs {
        left: encode_png16(&pair.left.image, RADIANCE_SCALE)?,
        right: encode_png16(&pair.right.image, RADIANCE_SCALE)?,
        side_by_side: encode_display(&compose_display(&pair, DisplayMode::SideBySide)?)?,
        anaglyph: encode_display(&compose_display(&pair, DisplayMode::Anaglyph)?)?,
    })
}

/// One display composite of a stereo configuration.
pub fn stereo_png(stack: &ScanStack, view: ViewParams, mode: DisplayMode) -> Result<Vec<u8>> {
    let pair = checked_pair(stack, view)?;
    encode_display(&compose_display(&pair, mode)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn millimetre_snapping() {
        let v = ViewParams::new(0.12345, 2.0004, 1.0, 26.0).unwrap();
        assert_eq!(v.u_mm, 123);
        assert_eq!(v.a_mm, 2000);
        assert_eq!(v.key(), "u123_a2000_ef1000_h26000");
        assert_eq!(ViewParams::new(0.1234999, 2.0, 1.0, 26.0).unwrap(), ViewParams::new(0.123, 2.0, 1.0, 26.0).unwrap());
        assert!(ViewParams::new(f64::NAN, 0.0, 0.0, 26.0).is_err());
        assert_eq!(to_mm("u", -0.0015).unwrap(), -2);
    }
}
