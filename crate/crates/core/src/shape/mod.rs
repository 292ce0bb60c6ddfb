//! Contour geometry and pre-categorical shape descriptors.
//!
//! A [`Contour`] is a validated simple polygon in pixel coordinates. From it
//! [`extract_features`] computes the 13-entry [`ShapeFeatures`] vector used to
//! describe hand postures, tools and objects.

mod enclosing;
mod features;
mod hull;
mod moments;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use enclosing::{min_area_rect, min_enclosing_circle, Circle, OrientedRect};
pub use features::{
    extract_features, squash_hu, ShapeFeatures, DEFECT_DEPTH_FRACTION, DEFECT_SCORE_CAP,
    FEATURE_COUNT, FEATURE_NAMES,
};
pub use hull::{cavities, convex_hull, convexity_defects, hull_indices};
pub use moments::{central_moments, hu_invariants, CentralMoments};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Orientation of `c` relative to the directed line `a -> b`: positive when
/// `c` lies to the left.
pub(crate) fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

/// Twice the signed shoelace area; positive for counter-clockwise order.
pub(crate) fn signed_area2(points: &[Point]) -> f64 {
    let n = points.len();
    // Anchor at the first vertex to limit cancellation for far-off polygons.
    let o = points[0];
    let mut acc = 0.0;
    for i in 1..n.saturating_sub(1) {
        acc += points[i].sub(o).cross(points[i + 1].sub(o));
    }
    acc
}

/// A closed simple polygon. The last vertex implicitly connects to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    points: Vec<Point>,
}

impl Contour {
    /// Validates and wraps a vertex list.
    ///
    /// Rejects fewer than 3 points, non-finite coordinates, repeated
    /// consecutive vertices, zero area and self-intersections.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::DegenerateShape(format!(
                "need at least 3 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points
            .iter()
            .position(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::NonFinite(format!("contour vertex {i}")));
        }
        let n = points.len();
        for i in 0..n {
            if points[i] == points[(i + 1) % n] {
                return Err(Error::InvalidContour(format!(
                    "vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        let a2 = signed_area2(&points);
        let scale = bbox_diag(&points);
        if a2.abs() <= 1e-12 * scale * scale {
            return Err(Error::DegenerateShape("polygon has zero area".into()));
        }
        if let Some((i, j)) = find_self_intersection(&points) {
            return Err(Error::InvalidContour(format!(
                "edges {i} and {j} intersect"
            )));
        }
        Ok(Contour { points })
    }

    pub fn from_xy(coords: &[(f64, f64)]) -> Result<Self> {
        Contour::new(coords.iter().copied().map(Point::from).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * signed_area2(&self.points)
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    /// Vertices in counter-clockwise order (reversed if stored clockwise).
    pub fn ccw_points(&self) -> Vec<Point> {
        let mut pts = self.points.clone();
        if !self.is_ccw() {
            pts.reverse();
        }
        pts
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| self.points[i].dist(self.points[(i + 1) % n]))
            .sum()
    }

    pub fn centroid(&self) -> Point {
        let m = central_moments(self);
        m.centroid
    }

    /// Applies `p -> s * R(theta) * p + t`. Similarity transforms preserve
    /// validity, so the result is not re-validated.
    pub fn similarity(&self, theta: f64, scale: f64, tx: f64, ty: f64) -> Contour {
        let (s, c) = theta.sin_cos();
        let points = self
            .points
            .iter()
            .map(|p| {
                Point::new(
                    scale * (c * p.x - s * p.y) + tx,
                    scale * (s * p.x + c * p.y) + ty,
                )
            })
            .collect();
        Contour { points }
    }

    pub fn translate(&self, tx: f64, ty: f64) -> Contour {
        self.similarity(0.0, 1.0, tx, ty)
    }

    pub fn rotate(&self, theta: f64) -> Contour {
        self.similarity(theta, 1.0, 0.0, 0.0)
    }

    pub fn scale(&self, s: f64) -> Contour {
        self.similarity(0.0, s, 0.0, 0.0)
    }

    /// Same polygon with the vertex list rotated to start at `k`.
    pub fn reindex(&self, k: usize) -> Contour {
        let mut points = self.points.clone();
        let n = points.len();
        points.rotate_left(k % n);
        Contour { points }
    }
}

impl fmt::Display for Contour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.points {
            writeln!(f, "{},{}", p.x, p.y)?;
        }
        Ok(())
    }
}

/// Shoelace area of a validated contour, in squared pixels.
pub fn area(c: &Contour) -> f64 {
    c.area()
}

/// Sum of edge lengths including the closing edge.
pub fn perimeter(c: &Contour) -> f64 {
    c.perimeter()
}

fn bbox_diag(points: &[Point]) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    (x1 - x0).hypot(y1 - y0)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Returns the first pair of intersecting edges, where edge `i` runs from
/// vertex `i` to vertex `i + 1`. Adjacent edges only conflict when they fold
/// back onto each other.
fn find_self_intersection(points: &[Point]) -> Option<(usize, usize)> {
    let n = points.len();
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        // fold-back at the shared vertex b
        let c = points[(i + 2) % n];
        if orient(a, b, c) == 0.0 && b.sub(a).dot(c.sub(b)) < 0.0 {
            return Some((i, (i + 1) % n));
        }
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let c = points[j];
            let d = points[(j + 1) % n];
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Parses the plain-text contour format: one `x,y` pair per line, with blank
/// lines separating consecutive contours. Lines starting with `#` are skipped.
pub fn parse_contours(text: &str) -> Result<Vec<Contour>> {
    let mut out = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !current.is_empty() {
                out.push(Contour::new(std::mem::take(&mut current))?);
            }
            continue;
        }
        let (xs, ys) = line.split_once(',').ok_or_else(|| {
            Error::InvalidContour(format!("line {}: expected \"x,y\"", lineno + 1))
        })?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| {
                Error::InvalidContour(format!("line {}: bad number {:?}", lineno + 1, s.trim()))
            })
        };
        current.push(Point::new(parse(xs)?, parse(ys)?));
    }
    if !current.is_empty() {
        out.push(Contour::new(current)?);
    }
    if out.is_empty() {
        return Err(Error::InvalidContour("no contours found".into()));
    }
    Ok(out)
}

pub fn read_contours(path: impl AsRef<Path>) -> Result<Vec<Contour>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_contours(&text).map_err(|e| e.in_file(path))
}

pub fn format_contours(contours: &[Contour]) -> String {
    contours
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Contour {
        Contour::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap()
    }

    fn pentagon() -> Vec<(f64, f64)> {
        vec![(0.0, 0.0), (4.0, -1.0), (6.0, 2.5), (3.0, 5.0), (-1.0, 3.0)]
    }

    // Independent trapezoid-rule area: sum over edges of (x1 - x0)(y1 + y0)/2.
    fn trapezoid_area(pts: &[(f64, f64)]) -> f64 {
        let n = pts.len();
        let mut s = 0.0;
        for i in 0..n {
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[(i + 1) % n];
            s += (x1 - x0) * (y1 + y0) / 2.0;
        }
        s.abs()
    }

    #[test]
    fn unit_square_area_and_perimeter() {
        let sq = square();
        assert_eq!(area(&sq), 1.0);
        assert_eq!(perimeter(&sq), 4.0);
        assert_eq!(area(&sq.scale(3.0)), 9.0);
    }

    #[test]
    fn pentagon_matches_independent_recomputation() {
        let pts = pentagon();
        let c = Contour::from_xy(&pts).unwrap();
        assert!((area(&c) - trapezoid_area(&pts)).abs() < 1e-12);
        let mut edge_sum = 0.0;
        for i in 0..pts.len() {
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[(i + 1) % pts.len()];
            edge_sum += ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
        }
        assert!((perimeter(&c) - edge_sum).abs() < 1e-12);
    }

    #[test]
    fn regular_360_gon_perimeter_is_two_pi() {
        let pts: Vec<(f64, f64)> = (0..360)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 360.0;
                (t.cos(), t.sin())
            })
            .collect();
        let c = Contour::from_xy(&pts).unwrap();
        assert!((perimeter(&c) - std::f64::consts::TAU).abs() < 1e-3);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(matches!(
            Contour::from_xy(&[(0.0, 0.0), (1.0, 0.0)]),
            Err(Error::DegenerateShape(_))
        ));
        assert!(matches!(
            Contour::from_xy(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]),
            Err(Error::DegenerateShape(_))
        ));
        assert!(matches!(
            Contour::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 1.0)]),
            Err(Error::InvalidContour(_))
        ));
        assert!(matches!(
            Contour::from_xy(&[(0.0, 0.0), (f64::NAN, 0.0), (0.0, 1.0)]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn rejects_bow_tie() {
        let r = Contour::from_xy(&[(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 1.0)]);
        assert!(matches!(r, Err(Error::InvalidContour(_))));
    }

    #[test]
    fn rejects_spike_that_folds_back() {
        let r = Contour::from_xy(&[(0.0, 0.0), (2.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn parses_multiple_contours() {
        let text = "0,0\n1,0\n1,1\n0,1\n\n# second\n0,0\n2,0\n0,2\n";
        let cs = parse_contours(text).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[1].len(), 3);
        let again = parse_contours(&format_contours(&cs)).unwrap();
        assert_eq!(again, cs);
    }

    #[test]
    fn parse_reports_line_number() {
        let err = parse_contours("0,0\n1;0\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
