//! GeoJSON ingestion, the JSON placement report and SVG rendering.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use geojson::{feature::Id, FeatureCollection, GeometryValue, Position};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::candidates::{Feature, LabelSpec, Problem};
use crate::geometry::{Aabb, FeatureKind, Geometry, Point, Polygon, Polyline};
use crate::quality::{Placement, ScoreBreakdown, Scorer};
use crate::sliding::SlideReport;

pub const REPORT_SCHEMA: &str = "labelforge/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("feature {feature}: unsupported geometry type {kind}")]
    UnsupportedGeometry { feature: String, kind: String },
    #[error("feature {feature}: no \"label\" or \"name\" property")]
    MissingLabel { feature: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

/// Label metrics used when a feature carries no `label_char_width` or
/// `label_height` property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelDefaults {
    pub char_width: f64,
    pub height: f64,
}

impl Default for LabelDefaults {
    fn default() -> Self {
        LabelDefaults { char_width: 0.6, height: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Feature>,
    pub source: Option<PathBuf>,
    pub bounds: Option<Aabb>,
}

impl Dataset {
    pub fn new(features: Vec<Feature>, source: Option<PathBuf>) -> Self {
        let bounds = features.iter().map(|f| f.geometry.aabb()).reduce(Aabb::union);
        Dataset { features, source, bounds }
    }

    pub fn count(&self, kind: FeatureKind) -> usize {
        self.features.iter().filter(|f| f.kind() == kind).count()
    }
}

fn point_of(p: &Position, feature: &str) -> Result<Point, IoError> {
    let s = p.as_slice();
    if s.len() < 2 {
        return Err(IoError::Parse(format!("feature {feature}: position needs two coordinates")));
    }
    let pt = Point::new(s[0], s[1]);
    if !pt.is_finite() {
        return Err(IoError::Parse(format!("feature {feature}: non-finite coordinate")));
    }
    Ok(pt)
}

fn points_of(ps: &[Position], feature: &str) -> Result<Vec<Point>, IoError> {
    ps.iter().map(|p| point_of(p, feature)).collect()
}

fn line_of(ps: &[Position], feature: &str) -> Result<Geometry, IoError> {
    let line = Polyline::new(points_of(ps, feature)?).map_err(|e| IoError::Parse(format!("feature {feature}: {e}")))?;
    Ok(Geometry::Line(line))
}

fn area_of(rings: &[Vec<Position>], feature: &str) -> Result<Geometry, IoError> {
    let Some(exterior) = rings.first() else {
        return Err(IoError::Parse(format!("feature {feature}: polygon without rings")));
    };
    if rings.len() > 1 {
        log::warn!("feature {feature}: {} hole(s) dropped, exterior ring kept", rings.len() - 1);
    }
    let poly = Polygon::new(points_of(exterior, feature)?).map_err(|e| IoError::Parse(format!("feature {feature}: {e}")))?;
    Ok(Geometry::Area(poly))
}

/// Geometry parts of one GeoJSON geometry; multi-geometries yield one part each.
fn parts(value: &GeometryValue, feature: &str) -> Result<Vec<Geometry>, IoError> {
    Ok(match value {
        GeometryValue::Point { coordinates } => vec![Geometry::Point(point_of(coordinates, feature)?)],
        GeometryValue::MultiPoint { coordinates } => {
            coordinates.iter().map(|p| point_of(p, feature).map(Geometry::Point)).collect::<Result<_, _>>()?
        }
        GeometryValue::LineString { coordinates } => vec![line_of(coordinates, feature)?],
        GeometryValue::MultiLineString { coordinates } => {
            coordinates.iter().map(|l| line_of(l, feature)).collect::<Result<_, _>>()?
        }
        GeometryValue::Polygon { coordinates } => vec![area_of(coordinates, feature)?],
        GeometryValue::MultiPolygon { coordinates } => {
            coordinates.iter().map(|r| area_of(r, feature)).collect::<Result<_, _>>()?
        }
        other => {
            return Err(IoError::UnsupportedGeometry { feature: feature.to_string(), kind: other.type_name().to_string() })
        }
    })
}

fn positive(props: &Map<String, Value>, key: &str, feature: &str) -> Result<Option<f64>, IoError> {
    match props.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => match v.as_f64() {
            Some(x) if x > 0.0 && x.is_finite() => Ok(Some(x)),
            _ => Err(IoError::Parse(format!("feature {feature}: \"{key}\" must be a positive number"))),
        },
    }
}

fn label_text(props: &Map<String, Value>) -> Option<String> {
    ["label", "name"].iter().find_map(|k| match props.get(*k) {
        Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
        Some(Value::Number(n)) => Some(n.to_string()),
        _ => None,
    })
}

/// Parses a GeoJSON FeatureCollection.
pub fn parse_geojson(text: &str, defaults: LabelDefaults) -> Result<Dataset, IoError> {
    let fc = FeatureCollection::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    let mut features = Vec::new();
    for (index, f) in fc.features.iter().enumerate() {
        let source = match &f.id {
            Some(Id::String(s)) => s.clone(),
            Some(Id::Number(n)) => n.to_string(),
            None => index.to_string(),
        };
        let Some(geometry) = &f.geometry else {
            return Err(IoError::Parse(format!("feature {source}: missing geometry")));
        };
        let empty = Map::new();
        let props = f.properties.as_ref().unwrap_or(&empty);
        let text = label_text(props).ok_or_else(|| IoError::MissingLabel { feature: source.clone() })?;
        let label = LabelSpec::new(
            text,
            positive(props, "label_char_width", &source)?.unwrap_or(defaults.char_width),
            positive(props, "label_height", &source)?.unwrap_or(defaults.height),
        );
        let geoms = parts(&geometry.value, &source)?;
        let multi = geoms.len() > 1 || matches!(
            geometry.value,
            GeometryValue::MultiPoint { .. } | GeometryValue::MultiLineString { .. } | GeometryValue::MultiPolygon { .. }
        );
        for (k, g) in geoms.into_iter().enumerate() {
            let id = features.len() as u32;
            let mut feature = Feature::new(id, g, label.clone());
            feature.source_id = if multi { format!("{source}.{k}") } else { source.clone() };
            features.push(feature);
        }
    }
    Ok(Dataset::new(features, None))
}

pub fn read_geojson(path: &Path, defaults: LabelDefaults) -> Result<Dataset, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut ds = parse_geojson(&text, defaults)?;
    ds.source = Some(path.to_path_buf());
    Ok(ds)
}

fn coords(p: Point) -> Value {
    serde_json::json!([p.x, p.y])
}

/// FeatureCollection text for `features`, with label metrics as properties.
pub fn to_geojson(features: &[Feature]) -> String {
    let items: Vec<Value> = features
        .iter()
        .map(|f| {
            let geometry = match &f.geometry {
                Geometry::Point(p) => serde_json::json!({"type": "Point", "coordinates": coords(*p)}),
                Geometry::Line(l) => serde_json::json!({
                    "type": "LineString",
                    "coordinates": l.vertices().iter().map(|p| coords(*p)).collect::<Vec<_>>()
                }),
                Geometry::Area(a) => {
                    let ring: Vec<Value> = a.exterior().iter().map(|p| coords(*p)).collect();
                    serde_json::json!({"type": "Polygon", "coordinates": [ring]})
                }
            };
            serde_json::json!({
                "type": "Feature",
                "id": f.source_id,
                "geometry": geometry,
                "properties": {
                    "label": f.label.text,
                    "label_char_width": f.label.char_width,
                    "label_height": f.label.height,
                }
            })
        })
        .collect();
    let fc = serde_json::json!({"type": "FeatureCollection", "features": items});
    let mut s = serde_json::to_string_pretty(&fc).expect("plain JSON values");
    s.push('\n');
    s
}

pub fn write_geojson(features: &[Feature], path: &Path) -> Result<(), IoError> {
    fs::write(path, to_geojson(features)).map_err(io_err(path))
}

/// Rounds to the report's six-decimal grid, so a written report reads back
/// equal.
pub fn quantize(x: f64) -> f64 {
    let q = (x * 1e6).round() / 1e6;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub id: u32,
    pub source_id: String,
    pub kind: FeatureKind,
    pub label: String,
    pub center_x: f64,
    pub center_y: f64,
    pub length: f64,
    pub height: f64,
    pub angle: f64,
    pub layer: u8,
    pub mu1: f64,
    pub mu2: f64,
    pub priority: f64,
    pub searched: bool,
    pub slid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub rho2: f64,
    pub fitness: f64,
    pub ll_conflict_count: usize,
    pub lf_conflict_count: usize,
}

impl From<&ScoreBreakdown> for ScoreSummary {
    fn from(s: &ScoreBreakdown) -> Self {
        ScoreSummary {
            s1: quantize(s.s1),
            s2: quantize(s.s2),
            s3: quantize(s.s3),
            s4: quantize(s.s4),
            rho2: quantize(s.rho2),
            fitness: quantize(s.fitness),
            ll_conflict_count: s.ll_conflict_count,
            lf_conflict_count: s.lf_conflict_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideSummary {
    pub conflicted: usize,
    pub eliminated: usize,
    pub better: usize,
    pub score_before: f64,
    pub score_after: f64,
}

impl From<&SlideReport> for SlideSummary {
    fn from(r: &SlideReport) -> Self {
        SlideSummary {
            conflicted: r.conflicted,
            eliminated: r.eliminated,
            better: r.better,
            score_before: quantize(r.score_before),
            score_after: quantize(r.score_after),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub wall_seconds: f64,
    pub makespan_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub features: usize,
    pub searched: usize,
    pub iterations: usize,
    pub generations: usize,
    pub population: usize,
    pub workers: usize,
    pub seed: u64,
    pub exchange_interval: usize,
    pub initial_best: f64,
    pub best_fitness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    pub schema: String,
    pub features: Vec<FeatureRow>,
    pub before_sliding: ScoreSummary,
    pub after_sliding: ScoreSummary,
    pub sliding: SlideSummary,
    pub run: RunSummary,
}

impl PlacementReport {
    /// Rows come from `after`; `before` is the optimizer's placement.
    pub fn build(
        problem: &Problem,
        scorer: &Scorer<'_>,
        before: &Placement,
        after: &Placement,
        slide: &SlideReport,
        mut run: RunSummary,
    ) -> Self {
        let features = problem
            .features
            .iter()
            .zip(&after.positions)
            .enumerate()
            .map(|(i, (f, c))| FeatureRow {
                id: f.id,
                source_id: f.source_id.clone(),
                kind: f.kind(),
                label: f.label.text.clone(),
                center_x: quantize(c.label_box.center.x),
                center_y: quantize(c.label_box.center.y),
                length: quantize(c.label_box.length),
                height: quantize(c.label_box.height),
                angle: quantize(c.label_box.angle),
                layer: c.layer,
                mu1: quantize(scorer.mu1(&c.label_box)),
                mu2: quantize(c.mu2),
                priority: quantize(scorer.priority_term(i, c)),
                searched: after.in_search[i],
                slid: c.label_box != before.positions[i].label_box,
            })
            .collect();
        run.initial_best = quantize(run.initial_best);
        run.best_fitness = quantize(run.best_fitness);
        if let Some(t) = run.timings.as_mut() {
            t.wall_seconds = quantize(t.wall_seconds);
            t.makespan_seconds = quantize(t.makespan_seconds);
        }
        PlacementReport {
            schema: REPORT_SCHEMA.to_string(),
            features,
            before_sliding: ScoreSummary::from(&scorer.total_score(before)),
            after_sliding: ScoreSummary::from(&scorer.total_score(after)),
            sliding: SlideSummary::from(slide),
            run,
        }
    }

    /// Label-feature conflicts, `s2`, `s3` and `s4` recomputed from the rows.
    pub fn row_totals(&self) -> (usize, f64, f64, f64) {
        let lf = self.features.iter().filter(|r| r.mu1 > 0.0).count();
        let sum = |f: fn(&FeatureRow) -> f64| self.features.iter().map(f).sum::<f64>();
        (lf, sum(|r| r.mu1), sum(|r| r.mu2), sum(|r| r.priority))
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("report serializes"))
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap_or(0.0);
                let s = format!("{x:.6}");
                out.push_str(if s == "-0.000000" { "0.000000" } else { &s });
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, item, indent + 2);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&serde_json::to_string(key).expect("key"));
                out.push_str(": ");
                write_value(out, &map[*key], indent + 2);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and every float printed with six decimals.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

pub fn write_report(r: &PlacementReport, path: &Path) -> Result<(), IoError> {
    fs::write(path, r.to_canonical_json()).map_err(io_err(path))
}

pub fn read_report(path: &Path) -> Result<PlacementReport, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let r: PlacementReport = serde_json::from_str(&text).map_err(|e| IoError::Parse(e.to_string()))?;
    if r.schema != REPORT_SCHEMA {
        return Err(IoError::Parse(format!("unknown report schema {:?}", r.schema)));
    }
    Ok(r)
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn path_data(points: &[Point], close: bool) -> String {
    let mut d = String::new();
    for (k, p) in points.iter().enumerate() {
        let _ = write!(d, "{}{:.6} {:.6}", if k == 0 { "M" } else { " L" }, p.x + 0.0, -p.y + 0.0);
    }
    if close {
        d.push_str(" Z");
    }
    d
}

/// SVG 1.1 drawing of the features and placed labels. Map y points up, so
/// y is negated; labels touching any feature get the `conflict` class.
pub fn render_svg(features: &[Feature], placement: &Placement, scorer: &Scorer<'_>) -> String {
    let mut bounds = features.iter().map(|f| f.geometry.aabb()).reduce(Aabb::union);
    for b in placement.boxes() {
        let bb = b.aabb();
        bounds = Some(bounds.map_or(bb, |a| a.union(bb)));
    }
    let (view, stroke) = match bounds {
        None => ("0 0 1 1".to_string(), 0.01),
        Some(b) => {
            let span = b.width().max(b.height()).max(1e-9);
            let mx = b.width().max(span * 0.01) * 0.05;
            let my = b.height().max(span * 0.01) * 0.05;
            (
                format!(
                    "{:.6} {:.6} {:.6} {:.6}",
                    b.min.x - mx,
                    -b.max.y - my,
                    b.width() + 2.0 * mx,
                    b.height() + 2.0 * my
                ),
                span * 0.0008,
            )
        }
    };
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{view}\">");
    let _ = writeln!(
        s,
        "<style>.pt{{fill:#333}} .ln{{fill:none;stroke:#3a6fb0;stroke-width:{w:.6}}} .ar{{fill:#dfe9d4;stroke:#7d9a6a;stroke-width:{w:.6}}} .lb{{fill:none;stroke:#2b8a3e;stroke-width:{w:.6}}} .lb.conflict{{stroke:#d7263d}} .tx{{font-family:sans-serif;text-anchor:middle;dominant-baseline:central}}</style>",
        w = stroke
    );
    s.push_str("<g class=\"features\">\n");
    for f in features {
        match &f.geometry {
            Geometry::Point(p) => {
                let _ = writeln!(s, "<circle class=\"pt\" cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\"/>", p.x + 0.0, -p.y + 0.0, stroke * 3.0);
            }
            Geometry::Line(l) => {
                let _ = writeln!(s, "<path class=\"ln\" d=\"{}\"/>", path_data(l.vertices(), false));
            }
            Geometry::Area(a) => {
                let _ = writeln!(s, "<path class=\"ar\" d=\"{}\"/>", path_data(a.exterior(), true));
            }
        }
    }
    s.push_str("</g>\n<g class=\"labels\">\n");
    for (f, c) in features.iter().zip(&placement.positions) {
        let b = &c.label_box;
        let class = if scorer.mu1(b) > 0.0 { "lb conflict" } else { "lb" };
        let (cx, cy) = (b.center.x + 0.0, -b.center.y + 0.0);
        let rot = format!("rotate({:.6} {cx:.6} {cy:.6})", -b.angle.to_degrees() + 0.0);
        let _ = writeln!(
            s,
            "<rect class=\"{class}\" x=\"{:.6}\" y=\"{:.6}\" width=\"{:.6}\" height=\"{:.6}\" transform=\"{rot}\"/>",
            cx - b.length / 2.0,
            cy - b.height / 2.0,
            b.length,
            b.height
        );
        let _ = writeln!(
            s,
            "<text class=\"tx\" x=\"{cx:.6}\" y=\"{cy:.6}\" font-size=\"{:.6}\" transform=\"{rot}\">{}</text>",
            b.height * 0.8,
            xml_escape(&f.label.text)
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn write_svg(features: &[Feature], placement: &Placement, scorer: &Scorer<'_>, path: &Path) -> Result<(), IoError> {
    fs::write(path, render_svg(features, placement, scorer)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::LayerConfig;
    use crate::quality::QualityWeights;

    const SPRINGFIELD: &str = r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","geometry":{"type":"Point","coordinates":[1.0,2.0]},"properties":{"name":"Springfield"}}]}"#;

    #[test]
    fn single_point() {
        let ds = parse_geojson(SPRINGFIELD, LabelDefaults { char_width: 0.5, height: 1.0 }).unwrap();
        assert_eq!(ds.features.len(), 1);
        let f = &ds.features[0];
        assert_eq!(f.kind(), FeatureKind::Point);
        assert_eq!(f.label.text, "Springfield");
        assert!((f.label.length() - 11.0 * 0.5).abs() < 1e-12);
        assert_eq!(f.source_id, "0");
    }

    #[test]
    fn label_preferred_over_name_and_metrics_read() {
        let text = r#"{"type":"FeatureCollection","features":[{"type":"Feature","id":"a",
            "geometry":{"type":"Point","coordinates":[0,0]},
            "properties":{"label":"L","name":"N","label_char_width":2,"label_height":3}}]}"#;
        let ds = parse_geojson(text, LabelDefaults::default()).unwrap();
        let f = &ds.features[0];
        assert_eq!((f.label.text.as_str(), f.label.char_width, f.label.height), ("L", 2.0, 3.0));
        assert_eq!(f.source_id, "a");
    }

    #[test]
    fn polygon_hole_dropped() {
        let text = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"name":"lake"},
            "geometry":{"type":"Polygon","coordinates":[[[0,0],[10,0],[10,10],[0,10],[0,0]],[[4,4],[6,4],[6,6],[4,6],[4,4]]]}}]}"#;
        let ds = parse_geojson(text, LabelDefaults::default()).unwrap();
        let Geometry::Area(a) = &ds.features[0].geometry else { panic!("area expected") };
        assert_eq!(a.exterior().len(), 5);
        assert!((a.area() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let one_vertex = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"name":"r"},
            "geometry":{"type":"LineString","coordinates":[[0,0]]}}]}"#;
        assert!(matches!(parse_geojson(one_vertex, LabelDefaults::default()), Err(IoError::Parse(_))));
        let unnamed = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{},
            "geometry":{"type":"Point","coordinates":[0,0]}}]}"#;
        assert!(matches!(parse_geojson(unnamed, LabelDefaults::default()), Err(IoError::MissingLabel { .. })));
        let collection = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"name":"g"},
            "geometry":{"type":"GeometryCollection","geometries":[]}}]}"#;
        assert!(matches!(parse_geojson(collection, LabelDefaults::default()), Err(IoError::UnsupportedGeometry { .. })));
        assert!(matches!(parse_geojson("{not json", LabelDefaults::default()), Err(IoError::Parse(_))));
    }

    #[test]
    fn multi_parts_get_suffixes() {
        let text = r#"{"type":"FeatureCollection","features":[{"type":"Feature","id":7,"properties":{"name":"isles"},
            "geometry":{"type":"MultiPolygon","coordinates":[[[[0,0],[1,0],[1,1],[0,0]]],[[[5,5],[6,5],[6,6],[5,5]]]]}},
            {"type":"Feature","properties":{"name":"r"},
            "geometry":{"type":"MultiLineString","coordinates":[[[0,3],[4,3]]]}}]}"#;
        let ds = parse_geojson(text, LabelDefaults::default()).unwrap();
        let ids: Vec<_> = ds.features.iter().map(|f| (f.id, f.source_id.as_str())).collect();
        assert_eq!(ids, vec![(0, "7.0"), (1, "7.1"), (2, "1.0")]);
    }

    #[test]
    fn geojson_round_trip() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"Point","coordinates":[1.0,2.0]},"properties":{"name":"Springfield"}},
            {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[3,1]]},"properties":{"name":"r"}},
            {"type":"Feature","geometry":{"type":"Polygon","coordinates":[[[0,0],[4,0],[4,4],[0,0]]]},"properties":{"name":"a"}}]}"#;
        let ds = parse_geojson(text, LabelDefaults::default()).unwrap();
        let back = parse_geojson(&to_geojson(&ds.features), LabelDefaults::default()).unwrap();
        assert_eq!(back.features, ds.features);
    }

    #[test]
    fn canonical_formatting() {
        let v = serde_json::json!({"b": 1.0, "a": [-0.0, 2, 1.23456789], "c": {"z": true, "y": null}});
        let s = canonical_json(&v);
        assert_eq!(
            s,
            "{\n  \"a\": [\n    0.000000,\n    2,\n    1.234568\n  ],\n  \"b\": 1.000000,\n  \"c\": {\n    \"y\": null,\n    \"z\": true\n  }\n}\n"
        );
        assert_eq!(quantize(-1e-9), 0.0);
        assert!(quantize(-1e-9).is_sign_positive());
    }

    fn tiny_run() -> (Problem, Placement) {
        let ds = parse_geojson(SPRINGFIELD, LabelDefaults::default()).unwrap();
        let p = Problem::build(ds.features, LayerConfig::default()).unwrap();
        let pl = Placement::from_genes(&p, &vec![0; p.q()]);
        (p, pl)
    }

    #[test]
    fn svg_elements() {
        let (p, pl) = tiny_run();
        let s = Scorer::new(&p.features, QualityWeights::default());
        let svg = render_svg(&p.features, &pl, &s);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<text").count(), 1);
        assert_eq!(svg.matches("<rect").count(), 1);
        assert!(!svg.contains("lb conflict"));
        assert!(svg.contains("version=\"1.1\""));

        let empty = render_svg(&[], &Placement { positions: vec![], in_search: vec![] }, &s);
        assert!(empty.contains("viewBox=\"0 0 1 1\""));
        assert!(!empty.contains("<rect") && !empty.contains("<circle"));
    }

    #[test]
    fn conflicting_label_is_marked() {
        let (p, mut pl) = tiny_run();
        let s = Scorer::new(&p.features, QualityWeights::default());
        // centre the label on its own point
        pl.positions[0].label_box.center = Point::new(1.0, 2.0);
        let svg = render_svg(&p.features, &pl, &s);
        assert!(svg.contains("class=\"lb conflict\""));
    }

    #[test]
    fn report_round_trip_and_aggregates() {
        let (p, pl) = tiny_run();
        let s = Scorer::new(&p.features, QualityWeights::default());
        let run = RunSummary {
            features: 1,
            searched: p.q(),
            iterations: 10,
            generations: 10,
            population: 100,
            workers: 1,
            seed: 3,
            exchange_interval: 500,
            initial_best: 0.123_456_789,
            best_fitness: 0.1,
            timings: None,
        };
        let r = PlacementReport::build(&p, &s, &pl, &pl, &SlideReport::default(), run);
        let (lf, s2, s3, s4) = r.row_totals();
        assert_eq!(lf, r.after_sliding.lf_conflict_count);
        assert!((s2 - r.after_sliding.s2).abs() < 1e-9);
        assert!((s3 - r.after_sliding.s3).abs() < 1e-6);
        assert!((s4 - r.after_sliding.s4).abs() < 1e-6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_report(&r, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"schema\": \"labelforge/1\""));
        assert!(!text.contains("timings"));
        assert_eq!(read_report(&path).unwrap(), r);
    }
}
