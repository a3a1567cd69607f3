use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral::StereoPair;
use crate::scene::Scene;

/// Reference radiances of the surface classes in a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadianceRefs {
    pub ground: f64,
    /// `None` for scenes without occluders, where no residue can exist.
    #[serde(default)]
    pub occluder: Option<f64>,
    #[serde(default)]
    pub targets: Vec<f64>,
}

impl RadianceRefs {
    pub fn from_scene(scene: &Scene) -> Self {
        Self {
            ground: scene.spec.ground_temp,
            occluder: (!scene.occluders.is_empty()).then_some(scene.spec.occluders.temp),
            targets: scene.spec.targets.iter().map(|t| t.temp).collect(),
        }
    }

    fn all(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.ground)
            .chain(self.occluder)
            .chain(self.targets.iter().copied())
    }

    pub fn dynamic_range(&self) -> f64 {
        let hi = self.all().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.all().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    /// True when the occluder radiance is the nearest reference to `v`.
    pub fn is_occlusion_residue(&self, v: f64) -> bool {
        let Some(occluder) = self.occluder else {
            return false;
        };
        let d = (v - occluder).abs();
        d < (v - self.ground).abs() && self.targets.iter().all(|t| d < (v - t).abs())
    }

    pub fn offset(&self, delta: f64) -> Self {
        Self {
            ground: self.ground + delta,
            occluder: self.occluder.map(|o| o + delta),
            targets: self.targets.iter().map(|t| t + delta).collect(),
        }
    }
}

/// Left/right disagreement caused by residual occlusion.
///
/// Both eyes are already registered on the focal plane. A jointly covered
/// pixel is residue when either eye's value is nearest the occluder radiance;
/// the score is the mean `|L - R|` over residue pixels divided by the dynamic
/// range of the references. No residue gives 0.
pub fn rivalry_score(pair: &StereoPair, refs: &RadianceRefs) -> Result<f64> {
    let (l, r) = (&pair.left, &pair.right);
    if !l.image.same_shape(&r.image) {
        return Err(Error::DimensionMismatch(
            l.image.width(),
            l.image.height(),
            r.image.width(),
            r.image.height(),
        ));
    }
    let range = refs.dynamic_range();
    let range = if range > 0.0 { range } else { 1.0 };
    let mut residue = 0usize;
    let mut total = 0.0;
    for (i, (a, b)) in l.image.data().iter().zip(r.image.data()).enumerate() {
        if l.coverage[i] == 0 || r.coverage[i] == 0 {
            continue;
        }
        let (a, b) = (*a as f64, *b as f64);
        if refs.is_occlusion_residue(a) || refs.is_occlusion_residue(b) {
            residue += 1;
            total += (a - b).abs();
        }
    }
    if residue == 0 {
        return Ok(0.0);
    }
    Ok(total / (residue as f64 * range))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_needs_an_occluder() {
        let mut refs = RadianceRefs {
            ground: 10.0,
            occluder: Some(16.0),
            targets: vec![30.0],
        };
        assert!(refs.is_occlusion_residue(15.0));
        assert!(!refs.is_occlusion_residue(11.0));
        assert!(!refs.is_occlusion_residue(25.0));
        assert_eq!(refs.dynamic_range(), 20.0);
        refs.occluder = None;
        assert!(!refs.is_occlusion_residue(16.0));
    }

    #[test]
    fn offset_moves_every_reference() {
        let refs = RadianceRefs {
            ground: 10.0,
            occluder: Some(16.0),
            targets: vec![30.0],
        };
        let moved = refs.offset(5.0);
        assert_eq!(moved.occluder, Some(21.0));
        assert_eq!(moved.dynamic_range(), refs.dynamic_range());
        assert!(moved.is_occlusion_residue(20.0));
    }
}
