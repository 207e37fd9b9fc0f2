//! Oriented rectangles and their exact minimum distance.

/// Rectangle with center, heading and half extents along / across the heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub cx: f64,
    pub cy: f64,
    pub half_length: f64,
    pub half_width: f64,
    cos: f64,
    sin: f64,
}

impl OrientedBox {
    pub fn new(cx: f64, cy: f64, yaw: f64, length: f64, width: f64) -> Self {
        let (sin, cos) = yaw.sin_cos();
        Self {
            cx,
            cy,
            half_length: 0.5 * length,
            half_width: 0.5 * width,
            cos,
            sin,
        }
    }

    pub fn yaw(&self) -> f64 {
        self.sin.atan2(self.cos)
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (hl, hw) = (self.half_length, self.half_width);
        let (c, s) = (self.cos, self.sin);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
            .map(|(a, b)| [self.cx + a * c - b * s, self.cy + a * s + b * c])
    }

    fn circumradius(&self) -> f64 {
        self.half_length.hypot(self.half_width)
    }

    /// Squared distance from `p` to the box; zero inside.
    #[inline]
    pub fn point_distance_sq(&self, p: [f64; 2]) -> f64 {
        let (dx, dy) = (p[0] - self.cx, p[1] - self.cy);
        let lx = dx * self.cos + dy * self.sin;
        let ly = -dx * self.sin + dy * self.cos;
        let ex = (lx.abs() - self.half_length).max(0.0);
        let ey = (ly.abs() - self.half_width).max(0.0);
        ex * ex + ey * ey
    }

    /// Half extent of the box projected on the unit axis `(ax, ay)`.
    #[inline]
    fn radius_on(&self, ax: f64, ay: f64) -> f64 {
        self.half_length * (self.cos * ax + self.sin * ay).abs()
            + self.half_width * (-self.sin * ax + self.cos * ay).abs()
    }

    /// Separating-axis test over the four face normals.
    pub fn intersects(&self, other: &OrientedBox) -> bool {
        let (dx, dy) = (other.cx - self.cx, other.cy - self.cy);
        let r = self.circumradius() + other.circumradius();
        if dx * dx + dy * dy > r * r {
            return false;
        }
        for b in [self, other] {
            for (ax, ay) in [(b.cos, b.sin), (-b.sin, b.cos)] {
                let gap = (dx * ax + dy * ay).abs();
                if gap > self.radius_on(ax, ay) + other.radius_on(ax, ay) {
                    return false;
                }
            }
        }
        true
    }
}

/// Minimum Euclidean distance between two oriented boxes, 0 if they overlap.
///
/// For disjoint convex polygons the closest pair always involves a vertex of
/// one of them, so eight vertex-to-box distances suffice once intersection is
/// ruled out.
pub fn box_distance(a: &OrientedBox, b: &OrientedBox) -> f64 {
    if a.intersects(b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for p in a.corners() {
        best = best.min(b.point_distance_sq(p));
    }
    for p in b.corners() {
        best = best.min(a.point_distance_sq(p));
    }
    best.sqrt()
}
