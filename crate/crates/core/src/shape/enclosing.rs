use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{hull_indices, Contour, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    fn contains(&self, p: Point) -> bool {
        p.dist(self.center) <= self.radius * (1.0 + 1e-12) + 1e-300
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

fn circle_from_two(a: Point, b: Point) -> Circle {
    let center = Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    Circle {
        center,
        radius: 0.5 * a.dist(b),
    }
}

fn circle_from_three(a: Point, b: Point, c: Point) -> Circle {
    let ab = b.sub(a);
    let ac = c.sub(a);
    let d = 2.0 * ab.cross(ac);
    let scale = ab.norm().max(ac.norm());
    if d.abs() <= 1e-14 * scale * scale {
        // nearly collinear: the farthest pair spans the circle
        let cands = [circle_from_two(a, b), circle_from_two(a, c), circle_from_two(b, c)];
        return cands
            .into_iter()
            .max_by(|x, y| x.radius.total_cmp(&y.radius))
            .unwrap();
    }
    let ab2 = ab.dot(ab);
    let ac2 = ac.dot(ac);
    let ux = (ac.y * ab2 - ab.y * ac2) / d;
    let uy = (ab.x * ac2 - ac.x * ab2) / d;
    Circle {
        center: Point::new(a.x + ux, a.y + uy),
        radius: ux.hypot(uy),
    }
}

/// Smallest circle enclosing all contour vertices (Welzl's incremental
/// algorithm over the hull vertices in a fixed pseudo-random order).
pub fn min_enclosing_circle(c: &Contour) -> Circle {
    let pts = c.points();
    let mut hull: Vec<Point> = hull_indices(pts).into_iter().map(|i| pts[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_6331);
    hull.shuffle(&mut rng);

    let mut circle = Circle {
        center: hull[0],
        radius: 0.0,
    };
    for i in 1..hull.len() {
        if circle.contains(hull[i]) {
            continue;
        }
        circle = Circle {
            center: hull[i],
            radius: 0.0,
        };
        for j in 0..i {
            if circle.contains(hull[j]) {
                continue;
            }
            circle = circle_from_two(hull[i], hull[j]);
            for k in 0..j {
                if !circle.contains(hull[k]) {
                    circle = circle_from_three(hull[i], hull[j], hull[k]);
                }
            }
        }
    }
    circle
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    /// Direction of the rectangle side flush with a hull edge, in radians.
    pub angle: f64,
    pub width: f64,
    pub height: f64,
}

impl OrientedRect {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Minimum-area bounding rectangle. One side of the optimum is flush with a
/// hull edge, so every hull edge direction is tried.
pub fn min_area_rect(c: &Contour) -> OrientedRect {
    let pts = c.points();
    let hull: Vec<Point> = hull_indices(pts).into_iter().map(|i| pts[i]).collect();
    let h = hull.len();
    let mut best: Option<OrientedRect> = None;
    for e in 0..h {
        let a = hull[e];
        let b = hull[(e + 1) % h];
        let d = b.sub(a);
        let len = d.norm();
        let u = Point::new(d.x / len, d.y / len);
        let v = Point::new(-u.y, u.x);
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &hull {
            let r = p.sub(a);
            let pu = r.dot(u);
            let pv = r.dot(v);
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let rect = OrientedRect {
            angle: u.y.atan2(u.x),
            width: umax - umin,
            height: vmax - vmin,
        };
        if best.is_none_or(|b| rect.area() < b.area()) {
            best = Some(rect);
        }
    }
    best.expect("hull has at least 3 edges")
}
