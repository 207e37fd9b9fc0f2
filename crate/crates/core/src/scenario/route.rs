use serde::{Deserialize, Serialize};

use super::{wrap_angle, Pose};
use crate::error::{Error, Result};

/// Piecewise-linear path with cumulative arclength.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<[f64; 2]>,
    arclength: Vec<f64>,
    yaw: Vec<f64>,
}

impl Polyline {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidRoute("need at least two vertices".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRoute("non-finite vertex".into()));
        }
        let mut arclength = Vec::with_capacity(vertices.len());
        let mut yaw = Vec::with_capacity(vertices.len() - 1);
        arclength.push(0.0);
        for w in vertices.windows(2) {
            let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            let len = dx.hypot(dy);
            if !(len > 1e-9) {
                return Err(Error::InvalidRoute(
                    "arclength must be strictly increasing (repeated vertex)".into(),
                ));
            }
            arclength.push(arclength.last().unwrap() + len);
            yaw.push(dy.atan2(dx));
        }
        Ok(Self {
            vertices,
            arclength,
            yaw: yaw.into_iter().map(wrap_angle).collect(),
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn length(&self) -> f64 {
        *self.arclength.last().unwrap()
    }

    /// Arclength at each vertex.
    pub fn arclength(&self) -> &[f64] {
        &self.arclength
    }

    pub fn segment_yaw(&self, segment: usize) -> f64 {
        self.yaw[segment]
    }

    /// Segment containing arclength `s` (clamped to the path).
    pub fn segment_at(&self, s: f64) -> usize {
        let idx = self.arclength.partition_point(|&a| a <= s);
        idx.saturating_sub(1).min(self.segment_count() - 1)
    }

    /// Pose at arclength `s`; yaw is the containing segment's heading.
    /// Points before the start or past the end are extrapolated along the
    /// first or last segment.
    pub fn pose_at(&self, s: f64) -> Pose {
        let seg = self.segment_at(s);
        let a = self.vertices[seg];
        let yaw = self.yaw[seg];
        let ds = s - self.arclength[seg];
        Pose::new(a[0] + ds * yaw.cos(), a[1] + ds * yaw.sin(), yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LateralBounds {
    /// Lower lateral bound (right-hand side under the left-positive
    /// convention), m.
    pub min: f64,
    /// Upper lateral bound (left-hand side), m.
    pub max: f64,
}

impl LateralBounds {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }
}

/// Serialisable route description; [`RouteSpec::build`] yields a [`Route`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    pub waypoints: Vec<[f64; 2]>,
    pub bounds: LateralBounds,
    /// Optional per-segment override of `bounds`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_bounds: Option<Vec<LateralBounds>>,
    /// Arclength per route index, m.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Length of the moving progress window, in route indices.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_off_route")]
    pub off_route_limit: f64,
}

fn default_resolution() -> f64 {
    1.0
}
fn default_window() -> usize {
    100
}
fn default_off_route() -> f64 {
    100.0
}

impl RouteSpec {
    pub fn new(waypoints: Vec<[f64; 2]>, bounds: LateralBounds) -> Self {
        Self {
            waypoints,
            bounds,
            segment_bounds: None,
            resolution: default_resolution(),
            window: default_window(),
            off_route_limit: default_off_route(),
        }
    }

    pub fn build(&self) -> Result<Route> {
        let line = Polyline::new(self.waypoints.clone())?;
        let bounds = match &self.segment_bounds {
            Some(b) if b.len() != line.segment_count() => {
                return Err(Error::InvalidRoute(format!(
                    "{} segment bounds for {} segments",
                    b.len(),
                    line.segment_count()
                )))
            }
            Some(b) => b.clone(),
            None => vec![self.bounds; line.segment_count()],
        };
        if bounds.iter().any(|b| !(b.min < b.max)) {
            return Err(Error::InvalidRoute("lateral bounds need min < max".into()));
        }
        if !(self.resolution > 0.0) || self.window == 0 || !(self.off_route_limit > 0.0) {
            return Err(Error::InvalidRoute(
                "resolution, window and off-route limit must be positive".into(),
            ));
        }
        let curvature = segment_curvature(&line);
        Ok(Route {
            line,
            bounds,
            curvature,
            resolution: self.resolution,
            window: self.window,
            off_route_limit: self.off_route_limit,
        })
    }
}

/// Central finite difference of segment yaw over midpoint arclength.
fn segment_curvature(line: &Polyline) -> Vec<f64> {
    let n = line.segment_count();
    if n < 2 {
        return vec![0.0; n];
    }
    let mid = |i: usize| 0.5 * (line.arclength[i] + line.arclength[i + 1]);
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            wrap_angle(line.yaw[hi] - line.yaw[lo]) / (mid(hi) - mid(lo))
        })
        .collect()
}

/// Result of projecting a point onto the route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub segment: usize,
    /// Arclength of the foot point, m.
    pub arclength: f64,
    /// Route index (arclength divided by the route resolution, rounded).
    pub index: usize,
    /// Signed lateral offset, positive to the left of travel.
    pub d_lat: f64,
    pub yaw_ref: f64,
    /// Euclidean distance to the foot point.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    line: Polyline,
    bounds: Vec<LateralBounds>,
    curvature: Vec<f64>,
    resolution: f64,
    window: usize,
    off_route_limit: f64,
}

impl Route {
    pub fn polyline(&self) -> &Polyline {
        &self.line
    }

    pub fn length(&self) -> f64 {
        self.line.length()
    }

    pub fn segment_count(&self) -> usize {
        self.line.segment_count()
    }

    pub fn bounds(&self, segment: usize) -> LateralBounds {
        self.bounds[segment]
    }

    pub fn curvature(&self, segment: usize) -> f64 {
        self.curvature[segment]
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Window length `L_w` of the progress cost, in route indices.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn off_route_limit(&self) -> f64 {
        self.off_route_limit
    }

    pub fn index_count(&self) -> usize {
        (self.length() / self.resolution).round() as usize
    }

    /// Projects onto the nearest segment; ties go to the lower index.
    pub fn project_to_route(&self, point: [f64; 2]) -> Result<Projection> {
        let p = self.project_in(point, 0, self.segment_count());
        if p.distance > self.off_route_limit {
            return Err(Error::OffRoute {
                x: point[0],
                y: point[1],
                distance: p.distance,
                limit: self.off_route_limit,
            });
        }
        Ok(p)
    }

    /// Nearest-segment projection restricted to segments `lo..hi`. Never fails.
    pub fn project_in(&self, point: [f64; 2], lo: usize, hi: usize) -> Projection {
        let n = self.segment_count();
        let (lo, hi) = (lo.min(n - 1), hi.clamp(lo.min(n - 1) + 1, n));
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for seg in lo..hi {
            let a = self.line.vertices[seg];
            let b = self.line.vertices[seg + 1];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let (px, py) = (point[0] - a[0], point[1] - a[1]);
            let len2 = dx * dx + dy * dy;
            let t = ((px * dx + py * dy) / len2).clamp(0.0, 1.0);
            let (fx, fy) = (a[0] + t * dx - point[0], a[1] + t * dy - point[1]);
            let dist = fx.hypot(fy);
            if best.map_or(true, |(_, d, _, _)| dist < d) {
                best = Some((seg, dist, t, (dx * py - dy * px) / len2.sqrt()));
            }
        }
        let (segment, distance, t, cross) = best.expect("route has segments");
        let beyond_start = segment == 0 && t <= 0.0;
        let beyond_end = segment == n - 1 && t >= 1.0;
        let d_lat = if beyond_start || beyond_end {
            cross
        } else if cross < 0.0 {
            -distance
        } else {
            distance
        };
        let seg_len = self.line.arclength[segment + 1] - self.line.arclength[segment];
        let arclength = self.line.arclength[segment] + t * seg_len;
        Projection {
            segment,
            arclength,
            index: (arclength / self.resolution).round() as usize,
            d_lat,
            yaw_ref: self.line.yaw[segment],
            distance,
        }
    }

    /// Half-open range of segments overlapping the arclength interval.
    pub fn segments_between(&self, s_lo: f64, s_hi: f64) -> (usize, usize) {
        let lo = self.line.segment_at(s_lo);
        let hi = self.line.segment_at(s_hi) + 1;
        (lo, hi)
    }
}

/// Builds tangent-continuous paths from straights and circular arcs.
#[derive(Debug, Clone)]
pub struct PathBuilder {
    samples: Vec<([f64; 2], f64)>,
    arc_step: f64,
}

impl PathBuilder {
    pub fn new(start: [f64; 2], heading: f64) -> Self {
        Self {
            samples: vec![(start, heading)],
            arc_step: 1.0,
        }
    }

    fn head(&self) -> ([f64; 2], f64) {
        *self.samples.last().unwrap()
    }

    pub fn straight(mut self, length: f64) -> Self {
        let (p, h) = self.head();
        self.samples
            .push(([p[0] + length * h.cos(), p[1] + length * h.sin()], h));
        self
    }

    /// Circular arc; positive `angle` turns left.
    pub fn arc(mut self, radius: f64, angle: f64) -> Self {
        let (p, h) = self.head();
        let side = angle.signum();
        let center = [
            p[0] - side * radius * h.sin(),
            p[1] + side * radius * h.cos(),
        ];
        let n = ((radius * angle.abs()) / self.arc_step).ceil().max(1.0) as usize;
        for i in 1..=n {
            let hh = h + angle * i as f64 / n as f64;
            let pt = [
                center[0] + side * radius * hh.sin(),
                center[1] - side * radius * hh.cos(),
            ];
            self.samples.push((pt, hh));
        }
        self
    }

    pub fn build(&self) -> Vec<[f64; 2]> {
        self.build_offset(0.0)
    }

    /// Path shifted `lateral` metres to the left of travel.
    pub fn build_offset(&self, lateral: f64) -> Vec<[f64; 2]> {
        self.samples
            .iter()
            .map(|(p, h)| [p[0] - lateral * h.sin(), p[1] + lateral * h.cos()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn straight(len: f64) -> Route {
        RouteSpec::new(vec![[0.0, 0.0], [len, 0.0]], LateralBounds::new(-2.0, 2.0))
            .build()
            .unwrap()
    }

    #[test]
    fn projection_on_centerline() {
        let r = straight(100.0);
        let p = r.project_to_route([5.0, 0.0]).unwrap();
        assert_eq!(p.index, 5);
        assert_eq!(p.d_lat, 0.0);
        assert_eq!(p.yaw_ref, 0.0);
    }

    #[test]
    fn lateral_offset_is_positive_left() {
        let r = straight(100.0);
        let p = r.project_to_route([5.0, 2.0]).unwrap();
        assert_eq!(p.index, 5);
        assert_eq!(p.d_lat, 2.0);
        let p = r.project_to_route([5.0, -2.0]).unwrap();
        assert_eq!(p.d_lat, -2.0);
    }

    #[test]
    fn off_route_is_an_error() {
        let r = straight(100.0);
        assert!(matches!(
            r.project_to_route([50.0, 150.0]),
            Err(Error::OffRoute { .. })
        ));
    }

    /// Brute-force nearest point over a densely sampled centreline.
    fn dense_nearest_segment(route: &Route, p: [f64; 2]) -> usize {
        let v = route.polyline().vertices();
        let mut best = (usize::MAX, f64::INFINITY);
        for seg in 0..v.len() - 1 {
            for i in 0..=10_000 {
                let t = i as f64 / 10_000.0;
                let q = [
                    v[seg][0] + t * (v[seg + 1][0] - v[seg][0]),
                    v[seg][1] + t * (v[seg + 1][1] - v[seg][1]),
                ];
                let d = (q[0] - p[0]).hypot(q[1] - p[1]);
                if d < best.1 {
                    best = (seg, d);
                }
            }
        }
        best.0
    }

    #[test]
    fn l_shaped_corner_matches_dense_oracle() {
        let r = RouteSpec::new(
            vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]],
            LateralBounds::new(-2.0, 2.0),
        )
        .build()
        .unwrap();
        for p in [
            [12.0, -2.0],
            [13.0, -1.0],
            [11.0, -3.0],
            [8.0, 1.0],
            [9.0, 4.0],
        ] {
            let proj = r.project_to_route(p).unwrap();
            assert_eq!(proj.segment, dense_nearest_segment(&r, p), "point {p:?}");
        }
        // exact bisector of the outer corner: tie goes to the lower index
        assert_eq!(r.project_to_route([12.0, -2.0]).unwrap().segment, 0);
    }

    #[test]
    fn vertices_project_to_zero_offset() {
        let pts = PathBuilder::new([0.0, 0.0], 0.3)
            .straight(20.0)
            .arc(15.0, FRAC_PI_2)
            .straight(20.0)
            .build();
        let r = RouteSpec::new(pts.clone(), LateralBounds::new(-2.0, 2.0))
            .build()
            .unwrap();
        for v in pts {
            assert!(r.project_to_route(v).unwrap().d_lat.abs() < 1e-9);
        }
    }

    #[test]
    fn arc_curvature_matches_radius() {
        let pts = PathBuilder::new([0.0, 0.0], 0.0)
            .straight(30.0)
            .arc(15.0, FRAC_PI_2)
            .straight(30.0)
            .build();
        let r = RouteSpec::new(pts, LateralBounds::new(-2.0, 2.0))
            .build()
            .unwrap();
        let mid = r.segments_between(30.0 + 15.0 * FRAC_PI_2 / 2.0, 30.0 + 15.0 * FRAC_PI_2 / 2.0);
        assert!((r.curvature(mid.0) - 1.0 / 15.0).abs() < 1e-3);
        let straight = RouteSpec::new(
            vec![[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]],
            LateralBounds::new(-2.0, 2.0),
        )
        .build()
        .unwrap();
        assert_eq!(straight.curvature(0), 0.0);
    }

    #[test]
    fn repeated_vertices_are_rejected() {
        assert!(Polyline::new(vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(
            RouteSpec::new(vec![[0.0, 0.0], [1.0, 0.0]], LateralBounds::new(1.0, -1.0))
                .build()
                .is_err()
        );
    }

    #[test]
    fn offset_path_is_parallel() {
        let b = PathBuilder::new([0.0, 0.0], 0.0)
            .straight(10.0)
            .arc(10.0, FRAC_PI_2);
        let inner = b.build_offset(3.0);
        let last = inner.last().unwrap();
        // arc centre (0+10, 10); inner radius 7
        assert!(((last[0] - 10.0).hypot(last[1] - 10.0) - 7.0).abs() < 1e-9);
    }
}
