//! Planar primitives: oriented label boxes, feature geometries, intersection
//! predicates and the strip-based polygon skeleton used to anchor area labels.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical slack used by the strict (positive-area) predicates.
pub const EPS: f64 = 1e-9;

/// Number of slicing strips used by [`polygon_skeleton`].
pub const SKELETON_ANCHORS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("polyline needs at least 2 distinct vertices, got {0}")]
    TooFewLineVertices(usize),
    #[error("polygon ring needs at least 3 distinct vertices, got {0}")]
    TooFewRingVertices(usize),
    #[error("polygon ring has zero area")]
    ZeroArea,
    #[error("polygon ring self-intersects between edges {0} and {1}")]
    SelfIntersection(usize, usize),
    #[error("skeleton construction found only {found} of {SKELETON_ANCHORS} chords")]
    DegenerateSkeleton { found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector at `angle` radians counterclockwise from +x.
    pub fn from_angle(angle: f64) -> Self {
        Point::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise normal of the same length.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Axis-aligned bounding rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn from_points<I: IntoIterator<Item = Point>>(points: I) -> Option<Aabb> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut bb = Aabb { min: first, max: first };
        for p in it {
            bb.include(p);
        }
        Some(bb)
    }

    pub fn include(&mut self, p: Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(self, o: Aabb) -> Aabb {
        let mut u = self;
        u.include(o.min);
        u.include(o.max);
        u
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// Closed-interval overlap test, used only as a broad-phase filter.
    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    /// Builds a polyline, collapsing consecutive duplicate vertices.
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut v: Vec<Point> = Vec::with_capacity(vertices.len());
        for p in vertices {
            if v.last() != Some(&p) {
                v.push(p);
            }
        }
        if v.len() < 2 {
            return Err(GeometryError::TooFewLineVertices(v.len()));
        }
        Ok(Polyline { vertices: v })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied()).expect("polyline is non-empty")
    }

    pub fn translate(&self, d: Point) -> Polyline {
        Polyline { vertices: self.vertices.iter().map(|&p| p + d).collect() }
    }

    /// Point at arc length `s` (clamped to the line) and the unit direction of
    /// the segment that contains it.
    pub fn point_at(&self, s: f64) -> (Point, Point) {
        let mut remaining = s.max(0.0);
        let mut last = None;
        for (a, b) in self.segments() {
            let len = a.distance(b);
            let dir = (b - a) * (1.0 / len);
            if remaining <= len {
                return (a + dir * remaining, dir);
            }
            remaining -= len;
            last = Some((b, dir));
        }
        last.expect("polyline has at least one segment")
    }

    /// Midpoint by arc length.
    pub fn midpoint(&self) -> Point {
        self.point_at(self.length() / 2.0).0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    /// Closed ring: the first vertex is repeated at the end.
    exterior: Vec<Point>,
}

impl Polygon {
    /// Validates and closes an exterior ring. The input may be open or closed.
    pub fn new(ring: Vec<Point>) -> Result<Self, GeometryError> {
        if ring.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut v: Vec<Point> = Vec::with_capacity(ring.len() + 1);
        for p in ring {
            if v.last() != Some(&p) {
                v.push(p);
            }
        }
        while v.len() > 1 && v.first() == v.last() {
            v.pop();
        }
        if v.len() < 3 {
            return Err(GeometryError::TooFewRingVertices(v.len()));
        }
        v.push(v[0]);
        let poly = Polygon { exterior: v };
        if poly.signed_area().abs() <= 1e-12 {
            return Err(GeometryError::ZeroArea);
        }
        if let Some((i, j)) = poly.first_self_intersection() {
            return Err(GeometryError::SelfIntersection(i, j));
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle, counterclockwise from `min`.
    pub fn rectangle(min: Point, max: Point) -> Result<Self, GeometryError> {
        Polygon::new(vec![min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)])
    }

    pub fn exterior(&self) -> &[Point] {
        &self.exterior
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.exterior.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.cross(b)).sum::<f64>() / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.exterior.iter().copied()).expect("ring is non-empty")
    }

    /// Even-odd containment. Points on the boundary may go either way.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// True when a point or line feature lies in or crosses this polygon.
    pub fn meets(&self, g: &Geometry) -> bool {
        if !self.aabb().overlaps(&g.aabb()) {
            return false;
        }
        match g {
            Geometry::Point(p) => self.contains(*p),
            Geometry::Line(l) => {
                l.vertices().iter().any(|&p| self.contains(p))
                    || l.segments().any(|(a, b)| self.edges().any(|(c, d)| segments_touch(a, b, c, d)))
            }
            Geometry::Area(_) => false,
        }
    }

    fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.exterior.len() - 1;
        let edges: Vec<(Point, Point)> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                // adjacent edges share a vertex by construction
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if segments_touch(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection (touching counts).
pub fn segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Normalizes an angle into `[0, 2π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// An oriented label rectangle: `length` runs along the box's own x axis,
/// which is rotated `angle` radians counterclockwise from the map's +x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelBox {
    pub center: Point,
    pub length: f64,
    pub height: f64,
    pub angle: f64,
}

impl LabelBox {
    pub fn new(center: Point, length: f64, height: f64, angle: f64) -> Self {
        debug_assert!(length > 0.0 && height > 0.0, "label box needs positive extent");
        LabelBox { center, length, height, angle: normalize_angle(angle) }
    }

    /// Unit vectors of the box's length and height directions.
    pub fn axes(&self) -> (Point, Point) {
        let u = Point::from_angle(self.angle);
        (u, u.perp())
    }

    /// Corners counterclockwise, starting at local `(+L/2, +h/2)`.
    pub fn corners(&self) -> [Point; 4] {
        let (u, v) = self.axes();
        let hu = u * (self.length / 2.0);
        let hv = v * (self.height / 2.0);
        let c = self.center;
        [c + hu + hv, c - hu + hv, c - hu - hv, c + hu - hv]
    }

    /// Coordinates of `p` in the box frame (origin at the center).
    pub fn to_local(&self, p: Point) -> Point {
        let (u, v) = self.axes();
        let d = p - self.center;
        Point::new(d.dot(u), d.dot(v))
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.corners()).expect("four corners")
    }

    /// True when `p` lies strictly inside the rectangle.
    pub fn contains_strict(&self, p: Point) -> bool {
        let l = self.to_local(p);
        l.x.abs() < self.length / 2.0 - EPS && l.y.abs() < self.height / 2.0 - EPS
    }

    /// Projection interval of the box onto a unit axis.
    fn project(&self, axis: Point) -> (f64, f64) {
        let (u, v) = self.axes();
        let c = self.center.dot(axis);
        let r = (self.length / 2.0) * u.dot(axis).abs() + (self.height / 2.0) * v.dot(axis).abs();
        (c - r, c + r)
    }

    /// Half-extent of the box measured along a unit direction.
    pub fn half_extent_along(&self, dir: Point) -> f64 {
        let (u, v) = self.axes();
        (self.length / 2.0) * u.dot(dir).abs() + (self.height / 2.0) * v.dot(dir).abs()
    }

    /// Euclidean distance from `p` to the closed rectangle (0 inside).
    pub fn distance_to(&self, p: Point) -> f64 {
        let l = self.to_local(p);
        let dx = (l.x.abs() - self.length / 2.0).max(0.0);
        let dy = (l.y.abs() - self.height / 2.0).max(0.0);
        dx.hypot(dy)
    }

    pub fn translate(&self, d: Point) -> LabelBox {
        LabelBox { center: self.center + d, ..*self }
    }

    /// The portion of segment `a`-`b` inside the closed box, as parameters
    /// `t0 <= t1` in `[0, 1]`, via Liang-Barsky clipping in the box frame.
    fn clip_segment(&self, a: Point, b: Point) -> Option<(f64, f64)> {
        let la = self.to_local(a);
        let lb = self.to_local(b);
        let d = lb - la;
        let (hl, hh) = (self.length / 2.0, self.height / 2.0);
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        for (p, q) in [(-d.x, la.x + hl), (d.x, hl - la.x), (-d.y, la.y + hh), (d.y, hh - la.y)] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return None;
                }
            }
        }
        Some((t0, t1))
    }

    /// A point of segment `a`-`b` strictly inside the box, if the segment
    /// passes through the interior (running along an edge does not count).
    pub fn segment_contact(&self, a: Point, b: Point) -> Option<Point> {
        let (t0, t1) = self.clip_segment(a, b)?;
        if (t1 - t0) * a.distance(b) <= EPS {
            return None;
        }
        let mid = a.lerp(b, (t0 + t1) / 2.0);
        self.contains_strict(mid).then_some(mid)
    }
}

/// Corners of the oriented rectangle, counterclockwise from local `(+L/2, +h/2)`.
pub fn label_box_corners(b: &LabelBox) -> [Point; 4] {
    b.corners()
}

/// Separating-axis test over the four edge normals. Edge contact is not overlap.
pub fn boxes_intersect(a: &LabelBox, b: &LabelBox) -> bool {
    let (au, av) = a.axes();
    let (bu, bv) = b.axes();
    for axis in [au, av, bu, bv] {
        let (amin, amax) = a.project(axis);
        let (bmin, bmax) = b.project(axis);
        if amax <= bmin + EPS || bmax <= amin + EPS {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Point,
    Line,
    Area,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Point => "point",
            FeatureKind::Line => "line",
            FeatureKind::Area => "area",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Point(Point),
    Line(Polyline),
    Area(Polygon),
}

impl Geometry {
    pub fn kind(&self) -> FeatureKind {
        match self {
            Geometry::Point(_) => FeatureKind::Point,
            Geometry::Line(_) => FeatureKind::Line,
            Geometry::Area(_) => FeatureKind::Area,
        }
    }

    pub fn aabb(&self) -> Aabb {
        match self {
            Geometry::Point(p) => Aabb { min: *p, max: *p },
            Geometry::Line(l) => l.aabb(),
            Geometry::Area(a) => a.aabb(),
        }
    }
}

/// Where a label box touches a feature, or `None` when they are clear.
///
/// Points conflict when strictly inside the box. Lines conflict when any
/// segment passes through the interior. Polygons conflict only when their
/// exterior ring does: a box sitting wholly inside the polygon is clear.
pub fn box_feature_contact(b: &LabelBox, g: &Geometry) -> Option<Point> {
    if !b.aabb().overlaps(&g.aabb()) {
        return None;
    }
    match g {
        Geometry::Point(p) => b.contains_strict(*p).then_some(*p),
        Geometry::Line(l) => l.segments().find_map(|(p, q)| b.segment_contact(p, q)),
        Geometry::Area(a) => a.edges().find_map(|(p, q)| b.segment_contact(p, q)),
    }
}

pub fn box_feature_intersect(b: &LabelBox, g: &Geometry) -> bool {
    box_feature_contact(b, g).is_some()
}

/// Direction the skeleton spine runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpineAxis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub spine: Polyline,
    pub above: Polyline,
    pub below: Polyline,
    pub axis: SpineAxis,
    /// Perpendicular offset between the spine and `above`/`below`.
    pub offset: f64,
}

impl Skeleton {
    /// Unit normal pointing from the spine toward `above`.
    pub fn normal(&self) -> Point {
        match self.axis {
            SpineAxis::Horizontal => Point::new(0.0, 1.0),
            SpineAxis::Vertical => Point::new(1.0, 0.0),
        }
    }

    /// Local spine direction at anchor `i`, from its neighbours.
    pub fn direction_at(&self, i: usize) -> Point {
        let v = self.spine.vertices();
        let a = v[i.saturating_sub(1)];
        let b = v[(i + 1).min(v.len() - 1)];
        let d = b - a;
        d * (1.0 / d.norm())
    }
}

/// Longest chord of the polygon along the line `coord(axis) = c`, where
/// `swap` selects slicing along x (`false`: vertical lines) or y.
fn longest_chord(poly: &Polygon, c: f64, swap: bool) -> Option<Point> {
    let key = |p: Point| if swap { Point::new(p.y, p.x) } else { p };
    let mut hits: Vec<f64> = poly
        .edges()
        .filter_map(|(a, b)| {
            let (a, b) = (key(a), key(b));
            if (a.x > c) != (b.x > c) {
                Some(a.y + (c - a.x) * (b.y - a.y) / (b.x - a.x))
            } else {
                None
            }
        })
        .collect();
    hits.sort_by(f64::total_cmp);
    let (lo, hi) = hits
        .chunks_exact(2)
        .map(|w| (w[0], w[1]))
        .filter(|(lo, hi)| hi - lo > 0.0)
        .max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0)))?;
    let mid = (lo + hi) / 2.0;
    Some(if swap { Point::new(mid, c) } else { Point::new(c, mid) })
}

/// Approximate centerline from eight slicing chords.
///
/// Lines parallel to the bounding box's shorter side cut the polygon at the
/// centers of eight equal strips along the longer side; the midpoints of the
/// longest chord on each line form the spine. `above`/`below` are the spine
/// shifted by `label_height` perpendicular to the longer side.
pub fn polygon_skeleton(poly: &Polygon, label_height: f64) -> Result<Skeleton, GeometryError> {
    let bb = poly.aabb();
    let (axis, lo, span) = if bb.width() >= bb.height() {
        (SpineAxis::Horizontal, bb.min.x, bb.width())
    } else {
        (SpineAxis::Vertical, bb.min.y, bb.height())
    };
    let swap = axis == SpineAxis::Vertical;
    let anchors: Vec<Point> = (0..SKELETON_ANCHORS)
        .filter_map(|k| {
            let c = lo + span * (k as f64 + 0.5) / SKELETON_ANCHORS as f64;
            longest_chord(poly, c, swap)
        })
        .collect();
    if anchors.len() < SKELETON_ANCHORS {
        return Err(GeometryError::DegenerateSkeleton { found: anchors.len() });
    }
    let spine = Polyline::new(anchors)?;
    let normal = match axis {
        SpineAxis::Horizontal => Point::new(0.0, 1.0),
        SpineAxis::Vertical => Point::new(1.0, 0.0),
    };
    Ok(Skeleton {
        above: spine.translate(normal * label_height),
        below: spine.translate(normal * -label_height),
        spine,
        axis,
        offset: label_height,
    })
}
