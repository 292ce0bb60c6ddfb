//! Area moments of a polygon via Green's theorem, up to third order.

use super::{Contour, Point};

/// Central area moments `mu_pq` (p + q <= 3) of the region bounded by a
/// contour, with the centroid used as origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralMoments {
    pub centroid: Point,
    pub mu00: f64,
    pub mu20: f64,
    pub mu11: f64,
    pub mu02: f64,
    pub mu30: f64,
    pub mu21: f64,
    pub mu12: f64,
    pub mu03: f64,
}

impl CentralMoments {
    /// Scale-normalized moment `eta_pq = mu_pq / mu00^(1 + (p+q)/2)`.
    fn eta(&self, mu: f64, order: i32) -> f64 {
        mu / self.mu00.powf(1.0 + order as f64 / 2.0)
    }

    /// Eigenvalues of the second-order moment matrix, larger first.
    pub fn principal_second_moments(&self) -> (f64, f64) {
        let mean = 0.5 * (self.mu20 + self.mu02);
        let half_diff = 0.5 * (self.mu20 - self.mu02);
        let r = half_diff.hypot(self.mu11);
        (mean + r, mean - r)
    }
}

#[derive(Default)]
struct RawMoments {
    m00: f64,
    m10: f64,
    m01: f64,
    m20: f64,
    m11: f64,
    m02: f64,
    m30: f64,
    m21: f64,
    m12: f64,
    m03: f64,
}

fn raw_moments(pts: &[Point]) -> RawMoments {
    let n = pts.len();
    let mut m = RawMoments::default();
    for i in 0..n {
        let Point { x: x0, y: y0 } = pts[i];
        let Point { x: x1, y: y1 } = pts[(i + 1) % n];
        let a = x0 * y1 - x1 * y0;
        m.m00 += a;
        m.m10 += a * (x0 + x1);
        m.m01 += a * (y0 + y1);
        m.m20 += a * (x0 * x0 + x0 * x1 + x1 * x1);
        m.m02 += a * (y0 * y0 + y0 * y1 + y1 * y1);
        m.m11 += a * (x0 * y1 + 2.0 * x0 * y0 + 2.0 * x1 * y1 + x1 * y0);
        m.m30 += a * (x0 * x0 * x0 + x0 * x0 * x1 + x0 * x1 * x1 + x1 * x1 * x1);
        m.m03 += a * (y0 * y0 * y0 + y0 * y0 * y1 + y0 * y1 * y1 + y1 * y1 * y1);
        m.m21 += a
            * (x0 * x0 * (3.0 * y0 + y1) + 2.0 * x0 * x1 * (y0 + y1) + x1 * x1 * (y0 + 3.0 * y1));
        m.m12 += a
            * (y0 * y0 * (3.0 * x0 + x1) + 2.0 * y0 * y1 * (x0 + x1) + y1 * y1 * (x0 + 3.0 * x1));
    }
    m.m00 /= 2.0;
    m.m10 /= 6.0;
    m.m01 /= 6.0;
    m.m20 /= 12.0;
    m.m02 /= 12.0;
    m.m11 /= 24.0;
    m.m30 /= 20.0;
    m.m03 /= 20.0;
    m.m21 /= 60.0;
    m.m12 /= 60.0;
    m
}

/// Central moments of the polygon region. Orientation-independent: the
/// contour is traversed counter-clockwise.
pub fn central_moments(c: &Contour) -> CentralMoments {
    let pts = c.ccw_points();
    // Two passes: locate the centroid relative to the first vertex, then
    // integrate about the centroid itself to avoid cancellation.
    let o = pts[0];
    let local: Vec<Point> = pts.iter().map(|p| p.sub(o)).collect();
    let first = raw_moments(&local);
    let centroid = Point::new(o.x + first.m10 / first.m00, o.y + first.m01 / first.m00);
    let centred: Vec<Point> = pts.iter().map(|p| p.sub(centroid)).collect();
    let m = raw_moments(&centred);
    CentralMoments {
        centroid,
        mu00: m.m00,
        mu20: m.m20,
        mu11: m.m11,
        mu02: m.m02,
        mu30: m.m30,
        mu21: m.m21,
        mu12: m.m12,
        mu03: m.m03,
    }
}

/// The seven Hu moment invariants of the polygon region.
pub fn hu_invariants(m: &CentralMoments) -> [f64; 7] {
    let n20 = m.eta(m.mu20, 2);
    let n11 = m.eta(m.mu11, 2);
    let n02 = m.eta(m.mu02, 2);
    let n30 = m.eta(m.mu30, 3);
    let n21 = m.eta(m.mu21, 3);
    let n12 = m.eta(m.mu12, 3);
    let n03 = m.eta(m.mu03, 3);

    let a = n30 + n12;
    let b = n21 + n03;
    let c = n30 - 3.0 * n12;
    let d = 3.0 * n21 - n03;

    let h1 = n20 + n02;
    let h2 = (n20 - n02).powi(2) + 4.0 * n11 * n11;
    let h3 = c * c + d * d;
    let h4 = a * a + b * b;
    let h5 = c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b);
    let h6 = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
    let h7 = d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b);
    [h1, h2, h3, h4, h5, h6, h7]
}

#[cfg(test)]
mod tests {
    use super::*;

    // Oracle: fan-triangulate from the origin and integrate each monomial
    // with the degree-3-exact four-point triangle rule.
    fn quadrature_moment(pts: &[(f64, f64)], p: i32, q: i32) -> f64 {
        let n = pts.len();
        let mut total = 0.0;
        for i in 0..n {
            let (ax, ay) = (0.0, 0.0);
            let (bx, by) = pts[i];
            let (cx, cy) = pts[(i + 1) % n];
            let area = 0.5 * ((bx - ax) * (cy - ay) - (cx - ax) * (by - ay));
            let at = |l1: f64, l2: f64, l3: f64| {
                let x = l1 * ax + l2 * bx + l3 * cx;
                let y = l1 * ay + l2 * by + l3 * cy;
                x.powi(p) * y.powi(q)
            };
            let centre = at(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
            let others = at(0.6, 0.2, 0.2) + at(0.2, 0.6, 0.2) + at(0.2, 0.2, 0.6);
            total += area * (-27.0 / 48.0 * centre + 25.0 / 48.0 * others);
        }
        total
    }

    fn fixture() -> Vec<(f64, f64)> {
        vec![
            (0.0, 0.0),
            (5.0, -1.0),
            (7.0, 2.0),
            (4.0, 3.0),
            (6.0, 6.0),
            (1.0, 5.0),
            (-1.0, 2.5),
        ]
    }

    #[test]
    fn raw_moments_match_quadrature() {
        let pts = fixture();
        let poly: Vec<Point> = pts.iter().copied().map(Point::from).collect();
        let m = raw_moments(&poly);
        let cases = [
            (m.m00, 0, 0),
            (m.m10, 1, 0),
            (m.m01, 0, 1),
            (m.m20, 2, 0),
            (m.m11, 1, 1),
            (m.m02, 0, 2),
            (m.m30, 3, 0),
            (m.m21, 2, 1),
            (m.m12, 1, 2),
            (m.m03, 0, 3),
        ];
        for (got, p, q) in cases {
            let want = quadrature_moment(&pts, p, q);
            assert!(
                (got - want).abs() < 1e-9 * want.abs().max(1.0),
                "m{p}{q}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn centroid_of_square() {
        let c = Contour::from_xy(&[(2.0, 2.0), (4.0, 2.0), (4.0, 4.0), (2.0, 4.0)]).unwrap();
        let m = central_moments(&c);
        assert!((m.centroid.x - 3.0).abs() < 1e-12);
        assert!((m.centroid.y - 3.0).abs() < 1e-12);
        assert!((m.mu00 - 4.0).abs() < 1e-12);
        assert!(m.mu11.abs() < 1e-12);
        // mu20 of a 2x2 square about its centre = 2 * 2^3 / 12
        assert!((m.mu20 - 16.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn hu_of_square_matches_closed_form() {
        let c = Contour::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap();
        let h = hu_invariants(&central_moments(&c));
        assert!((h[0] - 1.0 / 6.0).abs() < 1e-12);
        for v in &h[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn clockwise_order_gives_same_moments() {
        let pts = fixture();
        let mut rev = pts.clone();
        rev.reverse();
        let a = central_moments(&Contour::from_xy(&pts).unwrap());
        let b = central_moments(&Contour::from_xy(&rev).unwrap());
        assert!((a.mu00 - b.mu00).abs() < 1e-12);
        assert!((a.mu21 - b.mu21).abs() < 1e-9);
    }
}
