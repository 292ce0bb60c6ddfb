use super::{orient, Contour, Point};

/// Indices (into `points`) of the strict convex hull in counter-clockwise
/// order, starting from the lowest-x (then lowest-y) point. Collinear points
/// on hull edges are excluded.
pub fn hull_indices(points: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        let (p, q) = (points[a], points[b]);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::with_capacity(idx.len());
    for &i in &idx {
        while lower.len() >= 2
            && orient(
                points[lower[lower.len() - 2]],
                points[lower[lower.len() - 1]],
                points[i],
            ) <= 0.0
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::with_capacity(idx.len());
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && orient(
                points[upper[upper.len() - 2]],
                points[upper[upper.len() - 1]],
                points[i],
            ) <= 0.0
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Convex hull of a contour, counter-clockwise.
pub fn convex_hull(c: &Contour) -> Contour {
    let pts = c.points();
    let hull: Vec<Point> = hull_indices(pts).into_iter().map(|i| pts[i]).collect();
    // A valid contour has nonzero area, so its hull has at least 3 vertices.
    Contour::new(hull).expect("hull of a valid contour is a valid convex polygon")
}

fn line_distance(a: Point, b: Point, p: Point) -> f64 {
    orient(a, b, p).abs() / a.dist(b)
}

/// Deepest point of every cavity deeper than `limit`, in contour order.
///
/// Between two consecutive hull vertices, a cavity is a maximal run of
/// contour vertices lying more than `limit` away from the hull edge. Distance
/// to the edge is linear along each contour edge, so vertex runs capture the
/// excursions exactly. A finger tip that nearly touches the hull therefore
/// separates the gaps on either side of it.
pub fn cavities(c: &Contour, limit: f64) -> Vec<f64> {
    let pts = c.ccw_points();
    let n = pts.len();
    let mut hull = hull_indices(&pts);
    // For a simple CCW polygon the hull vertices appear in contour order.
    hull.sort_unstable();

    let mut depths = Vec::new();
    for k in 0..hull.len() {
        let start = hull[k];
        let end = hull[(k + 1) % hull.len()];
        let (a, b) = (pts[start], pts[end]);
        let mut deepest: Option<f64> = None;
        let mut i = (start + 1) % n;
        while i != end {
            let d = line_distance(a, b, pts[i]);
            if d > limit {
                deepest = Some(deepest.map_or(d, |m: f64| m.max(d)));
            } else if let Some(m) = deepest.take() {
                depths.push(m);
            }
            i = (i + 1) % n;
        }
        depths.extend(deepest);
    }
    depths
}

/// Counts cavities reaching more than `depth_threshold * perimeter` below
/// the convex hull.
pub fn convexity_defects(c: &Contour, depth_threshold: f64) -> usize {
    cavities(c, depth_threshold * c.perimeter()).len()
}
