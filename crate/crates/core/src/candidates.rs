//! Candidate label positions per feature.
//!
//! Points get 8 bearings on each of three distance layers. Lines and
//! polygons get 8 anchors (arc-length stations or skeleton chords) per layer,
//! each with the most preferred orientation that does not cross the feature
//! itself. Every full set holds 24 positions sorted by ascending base score.
//! Polygons whose best position is clear of everything are frozen to a single
//! candidate and drop out of the search space.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    box_feature_intersect, boxes_intersect, normalize_angle, polygon_skeleton, Aabb, FeatureKind, Geometry,
    GeometryError, LabelBox, Point, Polygon, Polyline, Skeleton,
};
use crate::index::GridIndex;

pub const LAYERS: usize = 3;
pub const PER_LAYER: usize = 8;
/// Size of a full candidate set.
pub const FULL_SET: usize = LAYERS * PER_LAYER;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CandidateError {
    #[error("feature {id}: {source}")]
    Geometry {
        id: u32,
        #[source]
        source: GeometryError,
    },
    #[error("invalid label for feature {id}: {reason}")]
    InvalidLabel { id: u32, reason: String },
    #[error("invalid layer radii {0:?}: need 0 < r1 < r2 < r3")]
    InvalidLayers([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub text: String,
    pub char_width: f64,
    pub height: f64,
}

impl LabelSpec {
    pub fn new(text: impl Into<String>, char_width: f64, height: f64) -> Self {
        LabelSpec { text: text.into(), char_width, height }
    }

    /// Box length: one `char_width` per character.
    pub fn length(&self) -> f64 {
        self.char_width * self.text.chars().count() as f64
    }

    fn validate(&self, id: u32) -> Result<(), CandidateError> {
        let bad = |reason: &str| Err(CandidateError::InvalidLabel { id, reason: reason.into() });
        if self.text.is_empty() {
            return bad("empty text");
        }
        if !(self.char_width > 0.0 && self.char_width.is_finite()) {
            return bad("char_width must be positive");
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return bad("height must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub id: u32,
    /// Identifier carried over from the input file.
    pub source_id: String,
    pub geometry: Geometry,
    pub label: LabelSpec,
}

impl Feature {
    pub fn new(id: u32, geometry: Geometry, label: LabelSpec) -> Self {
        Feature { id, source_id: id.to_string(), geometry, label }
    }

    pub fn kind(&self) -> FeatureKind {
        self.geometry.kind()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RadiusScale {
    /// Radii are multiples of each feature's label height.
    #[default]
    LabelHeight,
    /// Radii are absolute map units.
    MapUnits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayerConfig {
    pub radii: [f64; 3],
    #[serde(default)]
    pub scale: RadiusScale,
}

impl Default for LayerConfig {
    fn default() -> Self {
        LayerConfig { radii: [0.3, 0.9, 1.5], scale: RadiusScale::LabelHeight }
    }
}

impl LayerConfig {
    pub fn map_units(radii: [f64; 3]) -> Self {
        LayerConfig { radii, scale: RadiusScale::MapUnits }
    }

    pub fn validate(&self) -> Result<(), CandidateError> {
        let [a, b, c] = self.radii;
        if a > 0.0 && a < b && b < c && c.is_finite() {
            Ok(())
        } else {
            Err(CandidateError::InvalidLayers(self.radii))
        }
    }

    /// Layer distances in map units for a label of the given height.
    pub fn radii_for(&self, label_height: f64) -> [f64; 3] {
        match self.scale {
            RadiusScale::LabelHeight => self.radii.map(|r| r * label_height),
            RadiusScale::MapUnits => self.radii,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Horizontal,
    /// Parallel to the line, or to the polygon's skeleton.
    Along,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidatePosition {
    pub label_box: LabelBox,
    /// 1, 2 or 3.
    pub layer: u8,
    /// Bearing from a point feature to the box, in `[0, 2π)`.
    pub beta: Option<f64>,
    pub orientation: Option<Orientation>,
    /// Local direction of the line or skeleton at the anchor.
    pub local_angle: Option<f64>,
    /// Layer distance `D` between feature and label.
    pub distance: f64,
    pub mu2: f64,
    pub priority: f64,
    pub base_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub feature_id: u32,
    pub positions: Vec<CandidatePosition>,
}

impl CandidateSet {
    pub fn is_shortcut(&self) -> bool {
        self.positions.len() == 1
    }

    pub fn best(&self) -> &CandidatePosition {
        &self.positions[0]
    }
}

/// Normalized ambiguity `(D - Dmin) / (Dmax - Dmin)`, clamped to `[0, 1]`.
pub fn ambiguity(distance: f64, radii: [f64; 3]) -> f64 {
    ((distance - radii[0]) / (radii[2] - radii[0])).clamp(0.0, 1.0)
}

/// Quadrant priority of a point label by bearing.
pub fn point_priority(beta: f64) -> f64 {
    let deg = normalize_angle(beta).to_degrees();
    if deg < 90.0 {
        0.25
    } else if deg < 180.0 {
        0.5
    } else if deg < 270.0 {
        0.75
    } else {
        1.0
    }
}

pub fn area_priority(o: Orientation) -> f64 {
    match o {
        Orientation::Horizontal => 0.25,
        Orientation::Along => 0.5,
        Orientation::Vertical => 0.75,
    }
}

pub fn line_priority(o: Orientation) -> f64 {
    match o {
        Orientation::Along => 0.25,
        Orientation::Horizontal => 0.5,
        Orientation::Vertical => 0.75,
    }
}

/// Priority of a candidate for a feature of `kind`.
pub fn priority(kind: FeatureKind, beta: Option<f64>, orientation: Option<Orientation>) -> f64 {
    match (kind, beta, orientation) {
        (FeatureKind::Point, Some(b), _) => point_priority(b),
        (FeatureKind::Line, _, Some(o)) => line_priority(o),
        (FeatureKind::Area, _, Some(o)) => area_priority(o),
        _ => 0.0,
    }
}

/// Conflict-independent part of a candidate's quality: ambiguity plus
/// position priority.
pub fn base_score(c: &CandidatePosition, f: &Feature, layers: &LayerConfig) -> f64 {
    ambiguity(c.distance, layers.radii_for(f.label.height)) + priority(f.kind(), c.beta, c.orientation)
}

/// Folds an angle into `(-π/2, π/2]` so text never reads upside down, then
/// normalizes it into `[0, 2π)`.
fn readable_angle(a: f64) -> f64 {
    let mut a = normalize_angle(a);
    if a > PI {
        a -= 2.0 * PI;
    }
    if a > FRAC_PI_2 + 1e-12 {
        a -= PI;
    } else if a <= -FRAC_PI_2 + 1e-12 {
        a += PI;
    }
    normalize_angle(a)
}

fn sign(v: f64) -> f64 {
    if v > 1e-12 {
        1.0
    } else if v < -1e-12 {
        -1.0
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
fn position(
    f: &Feature,
    radii: [f64; 3],
    label_box: LabelBox,
    layer: usize,
    beta: Option<f64>,
    orientation: Option<Orientation>,
    local_angle: Option<f64>,
) -> CandidatePosition {
    let distance = radii[layer];
    let mu2 = ambiguity(distance, radii);
    let priority = priority(f.kind(), beta, orientation);
    CandidatePosition {
        label_box,
        layer: layer as u8 + 1,
        beta,
        orientation,
        local_angle,
        distance,
        mu2,
        priority,
        base_score: mu2 + priority,
    }
}

fn sort_key(score: f64) -> i64 {
    (score * 1e9).round() as i64
}

/// Stable sort by ascending base score; ties keep the generation order,
/// which is layer-major.
fn sorted(feature_id: u32, mut positions: Vec<CandidatePosition>) -> CandidateSet {
    positions.sort_by_key(|c| (sort_key(c.base_score), c.layer));
    CandidateSet { feature_id, positions }
}

/// Horizontal box whose nearest point to `origin` lies at distance `gap`
/// along `beta`: the corner for diagonal bearings, an edge midpoint for axial ones.
pub fn box_at_bearing(origin: Point, gap: f64, beta: f64, length: f64, height: f64) -> LabelBox {
    let dir = Point::from_angle(beta);
    let nearest = origin + dir * gap;
    let push = Point::new(sign(dir.x) * length / 2.0, sign(dir.y) * height / 2.0);
    LabelBox::new(nearest + push, length, height, 0.0)
}

pub fn point_candidates(f: &Feature, layers: &LayerConfig) -> CandidateSet {
    let Geometry::Point(p) = &f.geometry else {
        panic!("point_candidates called on a {} feature", f.kind());
    };
    let radii = layers.radii_for(f.label.height);
    let (len, h) = (f.label.length(), f.label.height);
    let mut out = Vec::with_capacity(FULL_SET);
    for (layer, &r) in radii.iter().enumerate() {
        for k in 0..PER_LAYER {
            let beta = k as f64 * FRAC_PI_4;
            let b = box_at_bearing(*p, r, beta, len, h);
            out.push(position(f, radii, b, layer, Some(beta), None, None));
        }
    }
    sorted(f.id, out)
}

/// First orientation, in preference order, whose box (placed by `place`)
/// stays clear of the feature's own geometry; vertical when none does.
fn choose_orientation(
    f: &Feature,
    prefs: [(Orientation, f64); 3],
    place: impl Fn(f64) -> LabelBox,
) -> (Orientation, LabelBox) {
    for (o, angle) in prefs {
        let b = place(angle);
        if !box_feature_intersect(&b, &f.geometry) {
            return (o, b);
        }
    }
    (Orientation::Vertical, place(FRAC_PI_2))
}

pub fn polyline_candidates(f: &Feature, layers: &LayerConfig) -> CandidateSet {
    let Geometry::Line(line) = &f.geometry else {
        panic!("polyline_candidates called on a {} feature", f.kind());
    };
    let radii = layers.radii_for(f.label.height);
    let (len, h) = (f.label.length(), f.label.height);
    let total = line.length();
    let stations: Vec<(Point, Point)> =
        (0..PER_LAYER).map(|k| line.point_at(total * (k as f64 + 0.5) / PER_LAYER as f64)).collect();
    let mut out = Vec::with_capacity(FULL_SET);
    for (layer, &r) in radii.iter().enumerate() {
        for (k, &(anchor, dir)) in stations.iter().enumerate() {
            let side = if k % 2 == 0 { 1.0 } else { -1.0 };
            let normal = dir.perp() * side;
            let along = readable_angle(dir.y.atan2(dir.x));
            let place = |angle: f64| {
                let probe = LabelBox::new(anchor, len, h, angle);
                let off = r + probe.half_extent_along(normal);
                LabelBox::new(anchor + normal * off, len, h, angle)
            };
            let prefs = [(Orientation::Along, along), (Orientation::Horizontal, 0.0), (Orientation::Vertical, FRAC_PI_2)];
            let (o, b) = choose_orientation(f, prefs, place);
            out.push(position(f, radii, b, layer, None, Some(o), Some(along)));
        }
    }
    sorted(f.id, out)
}

pub fn polygon_candidates(f: &Feature, layers: &LayerConfig, skeleton: &Skeleton) -> CandidateSet {
    assert_eq!(f.kind(), FeatureKind::Area, "polygon_candidates called on a {} feature", f.kind());
    let radii = layers.radii_for(f.label.height);
    let (len, h) = (f.label.length(), f.label.height);
    let normal = skeleton.normal();
    let anchors = skeleton.spine.vertices();
    let mut out = Vec::with_capacity(FULL_SET);
    for layer in 0..LAYERS {
        // layer 1 on the spine, layer 2 on the offset lines, layer 3 beyond
        let offset = skeleton.offset * (radii[layer] - radii[0]) / (radii[1] - radii[0]);
        for (i, &a) in anchors.iter().enumerate() {
            let side = if i % 2 == 0 { 1.0 } else { -1.0 };
            let center = a + normal * (side * offset);
            let d = skeleton.direction_at(i);
            let along = readable_angle(d.y.atan2(d.x));
            let prefs = [(Orientation::Horizontal, 0.0), (Orientation::Along, along), (Orientation::Vertical, FRAC_PI_2)];
            let (o, b) = choose_orientation(f, prefs, |angle| LabelBox::new(center, len, h, angle));
            out.push(position(f, radii, b, layer, None, Some(o), Some(along)));
        }
    }
    sorted(f.id, out)
}

/// The 24-position set for any feature.
pub fn feature_candidates(f: &Feature, layers: &LayerConfig) -> Result<CandidateSet, CandidateError> {
    f.label.validate(f.id)?;
    Ok(match &f.geometry {
        Geometry::Point(_) => point_candidates(f, layers),
        Geometry::Line(_) => polyline_candidates(f, layers),
        Geometry::Area(poly) => {
            let sk = polygon_skeleton(poly, f.label.height).map_err(|source| CandidateError::Geometry { id: f.id, source })?;
            polygon_candidates(f, layers, &sk)
        }
    })
}

pub fn generate_all(features: &[Feature], layers: &LayerConfig) -> Result<Vec<CandidateSet>, CandidateError> {
    layers.validate()?;
    features.iter().map(|f| feature_candidates(f, layers)).collect()
}

/// Decides which polygons can be frozen to their best candidate. The polygon
/// must hold no point or line feature, and its best box must not touch any
/// feature geometry (its own boundary included) nor any candidate box of any
/// other feature. Shared polygon boundaries do not count. Returns one flag
/// per feature.
pub fn shortcut_flags(features: &[Feature], sets: &[CandidateSet]) -> Vec<bool> {
    let geoms: Vec<Aabb> = features.iter().map(|f| f.geometry.aabb()).collect();
    let geom_index = GridIndex::new(&geoms);
    let mut owners = Vec::new();
    let mut boxes = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        for c in &s.positions {
            owners.push(i);
            boxes.push(c.label_box);
        }
    }
    let box_index = GridIndex::new(&boxes.iter().map(LabelBox::aabb).collect::<Vec<_>>());
    features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if f.kind() != FeatureKind::Area {
                return false;
            }
            let Geometry::Area(poly) = &f.geometry else { unreachable!() };
            let occupied = geom_index
                .query(&poly.aabb())
                .into_iter()
                .any(|j| j as usize != i && poly.meets(&features[j as usize].geometry));
            if occupied {
                return false;
            }
            let best = sets[i].best().label_box;
            let bb = best.aabb();
            let hits_feature = geom_index
                .query(&bb)
                .into_iter()
                .any(|j| box_feature_intersect(&best, &features[j as usize].geometry));
            if hits_feature {
                return false;
            }
            !box_index
                .query(&bb)
                .into_iter()
                .any(|k| owners[k as usize] != i && boxes_intersect(&best, &boxes[k as usize]))
        })
        .collect()
}

/// Splits features into frozen single-candidate polygons and full 24-candidate sets.
pub fn partition_by_shortcut(
    features: &[Feature],
    layers: &LayerConfig,
) -> Result<(Vec<CandidateSet>, Vec<CandidateSet>), CandidateError> {
    let problem = Problem::build(features.to_vec(), *layers)?;
    let (mut shortcut, mut full) = (Vec::new(), Vec::new());
    for (s, is_full) in problem.sets.into_iter().zip(problem.is_full) {
        if is_full {
            full.push(s);
        } else {
            shortcut.push(s);
        }
    }
    Ok((shortcut, full))
}

/// A complete optimization instance: features, their candidate sets in
/// feature order (shortcut polygons reduced to one position) and the
/// indices of the features that remain in the search space.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub features: Vec<Feature>,
    pub layers: LayerConfig,
    pub sets: Vec<CandidateSet>,
    pub is_full: Vec<bool>,
    /// Feature indices with 24 candidates, in feature order. Gene `q` of a
    /// chromosome selects from `sets[full[q]]`.
    pub full: Vec<usize>,
}

impl Problem {
    pub fn build(features: Vec<Feature>, layers: LayerConfig) -> Result<Self, CandidateError> {
        let sets = generate_all(&features, &layers)?;
        Ok(Problem::from_sets(features, layers, sets))
    }

    /// Applies the shortcut rule to already generated full sets.
    pub fn from_sets(features: Vec<Feature>, layers: LayerConfig, mut sets: Vec<CandidateSet>) -> Self {
        let shortcut = shortcut_flags(&features, &sets);
        for (s, &frozen) in sets.iter_mut().zip(&shortcut) {
            if frozen {
                s.positions.truncate(1);
            }
        }
        let is_full: Vec<bool> = shortcut.iter().map(|s| !s).collect();
        let full = is_full.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect();
        Problem { features, layers, sets, is_full, full }
    }

    /// Number of features in the search space.
    pub fn q(&self) -> usize {
        self.full.len()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Convenience constructors used by tests, fixtures and benches.
pub fn point_feature(id: u32, x: f64, y: f64, text: &str, char_width: f64, height: f64) -> Feature {
    Feature::new(id, Geometry::Point(Point::new(x, y)), LabelSpec::new(text, char_width, height))
}

pub fn line_feature(id: u32, pts: &[(f64, f64)], text: &str, char_width: f64, height: f64) -> Result<Feature, GeometryError> {
    let line = Polyline::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect())?;
    Ok(Feature::new(id, Geometry::Line(line), LabelSpec::new(text, char_width, height)))
}

pub fn area_feature(id: u32, ring: &[(f64, f64)], text: &str, char_width: f64, height: f64) -> Result<Feature, GeometryError> {
    let poly = Polygon::new(ring.iter().map(|&(x, y)| Point::new(x, y)).collect())?;
    Ok(Feature::new(id, Geometry::Area(poly), LabelSpec::new(text, char_width, height)))
}
