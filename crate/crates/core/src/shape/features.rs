use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    central_moments, convex_hull, convexity_defects, hu_invariants, min_area_rect,
    min_enclosing_circle, Contour,
};
use crate::error::{Error, Result};

pub const FEATURE_COUNT: usize = 13;

/// Column order of [`ShapeFeatures::to_array`].
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "convexity",
    "eccentricity",
    "compactness",
    "circularity",
    "squareness",
    "convexity_defects",
    "hu1",
    "hu2",
    "hu3",
    "hu4",
    "hu5",
    "hu6",
    "hu7",
];

/// Cavities deeper than this fraction of the perimeter count as defects.
pub const DEFECT_DEPTH_FRACTION: f64 = 0.02;

/// Defect counts saturate at this value before scaling to [0, 1].
pub const DEFECT_SCORE_CAP: usize = 10;

/// The 13 shape descriptors, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeFeatures {
    /// Area over convex hull area.
    pub convexity: f64,
    /// Minor over major axis length of the second-moment ellipse.
    pub eccentricity: f64,
    /// `4 pi A / P^2`.
    pub compactness: f64,
    /// Area over minimum enclosing circle area.
    pub circularity: f64,
    /// Area over minimum-area bounding rectangle area.
    pub squareness: f64,
    /// `min(defects, 10) / 10`.
    pub convexity_defect_score: f64,
    /// Log-squashed Hu invariants, see [`squash_hu`].
    pub moments: [f64; 7],
}

impl ShapeFeatures {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        out[0] = self.convexity;
        out[1] = self.eccentricity;
        out[2] = self.compactness;
        out[3] = self.circularity;
        out[4] = self.squareness;
        out[5] = self.convexity_defect_score;
        out[6..].copy_from_slice(&self.moments);
        out
    }

    /// Builds from a raw vector, requiring every entry finite and in [0, 1].
    pub fn from_array(v: [f64; FEATURE_COUNT]) -> Result<Self> {
        for (i, x) in v.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("feature {}", FEATURE_NAMES[i])));
            }
            if !(0.0..=1.0).contains(x) {
                return Err(Error::InvalidParameter(format!(
                    "feature {} = {x} outside [0, 1]",
                    FEATURE_NAMES[i]
                )));
            }
        }
        let mut moments = [0.0; 7];
        moments.copy_from_slice(&v[6..]);
        Ok(ShapeFeatures {
            convexity: v[0],
            eccentricity: v[1],
            compactness: v[2],
            circularity: v[3],
            squareness: v[4],
            convexity_defect_score: v[5],
            moments,
        })
    }
}

/// Maps a signed Hu invariant spanning many orders of magnitude onto [0, 1]:
/// `(sign(h) log10(1 + |h| 1e6) / 12 + 1) / 2`, clamped.
pub fn squash_hu(h: f64) -> f64 {
    let s = h.signum() * (1.0 + h.abs() * 1e6).log10() / 12.0;
    (0.5 * (s + 1.0)).clamp(0.0, 1.0)
}

fn unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Computes the 13 shape descriptors of a contour. All entries are invariant
/// to translation, rotation and uniform scaling.
pub fn extract_features(c: &Contour) -> Result<ShapeFeatures> {
    let area = c.area();
    let perimeter = c.perimeter();
    if !(area > 0.0 && perimeter > 0.0) {
        return Err(Error::DegenerateShape("zero area or perimeter".into()));
    }

    let hull = convex_hull(c);
    let convexity = unit(area / hull.area());

    let m = central_moments(c);
    let (major, minor) = m.principal_second_moments();
    if !(major > 0.0) {
        return Err(Error::DegenerateShape("vanishing second moments".into()));
    }
    let eccentricity = unit((minor.max(0.0) / major).sqrt());

    let compactness = unit(4.0 * PI * area / (perimeter * perimeter));
    let circularity = unit(area / min_enclosing_circle(c).area());
    let squareness = unit(area / min_area_rect(c).area());

    let defects = convexity_defects(c, DEFECT_DEPTH_FRACTION);
    let convexity_defect_score = defects.min(DEFECT_SCORE_CAP) as f64 / DEFECT_SCORE_CAP as f64;

    let hu = hu_invariants(&m);
    let moments = hu.map(squash_hu);

    let f = ShapeFeatures {
        convexity,
        eccentricity,
        compactness,
        circularity,
        squareness,
        convexity_defect_score,
        moments,
    };
    if f.to_array().iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateShape("non-finite descriptor".into()));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ngon(n: usize) -> Contour {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / n as f64;
                (t.cos(), t.sin())
            })
            .collect();
        Contour::from_xy(&pts).unwrap()
    }

    fn comb() -> Contour {
        let mut pts = vec![(0.0, 0.0), (74.0, 0.0)];
        for f in (0..5).rev() {
            let x0 = f as f64 * 16.0;
            pts.push((x0 + 10.0, 70.0));
            pts.push((x0, 70.0));
            if f > 0 {
                pts.push((x0, 30.0));
                pts.push((x0 - 6.0, 30.0));
            }
        }
        Contour::from_xy(&pts).unwrap()
    }

    #[test]
    fn circle_limit() {
        let f = extract_features(&ngon(360)).unwrap();
        for v in [f.convexity, f.compactness, f.circularity, f.eccentricity] {
            assert!((v - 1.0).abs() < 1e-2, "{f:?}");
        }
        assert_eq!(f.convexity_defect_score, 0.0);
    }

    #[test]
    fn square_values() {
        let sq = Contour::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap();
        let f = extract_features(&sq).unwrap();
        assert!((f.squareness - 1.0).abs() < 1e-9);
        assert!((f.circularity - 2.0 / PI).abs() < 1e-2);
        assert!((f.compactness - PI / 4.0).abs() < 1e-12);
        assert!((f.eccentricity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn comb_invariant_under_similarity() {
        let c = comb();
        let a = extract_features(&c).unwrap().to_array();
        let b = extract_features(&c.similarity(37f64.to_radians(), 2.5, 13.0, -4.0))
            .unwrap()
            .to_array();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{a:?}\n{b:?}");
        }
        assert_eq!(a[5], 0.4);
    }

    #[test]
    fn squash_is_monotone_and_centred() {
        assert_eq!(squash_hu(0.0), 0.5);
        assert!(squash_hu(1e-3) > squash_hu(1e-6));
        assert!(squash_hu(-1e-3) < squash_hu(-1e-6));
        assert!(squash_hu(1e9) <= 1.0);
        assert!(squash_hu(-1e9) >= 0.0);
    }

    #[test]
    fn from_array_rejects_out_of_range() {
        let mut v = [0.5; FEATURE_COUNT];
        assert!(ShapeFeatures::from_array(v).is_ok());
        v[3] = 1.2;
        assert!(ShapeFeatures::from_array(v).is_err());
        v[3] = f64::NAN;
        assert!(matches!(ShapeFeatures::from_array(v), Err(Error::NonFinite(_))));
    }
}
