//! Seeded synthetic maps used as fixtures, benchmarks and demo data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::candidates::{Feature, LabelSpec};
use crate::geometry::{Geometry, Point, Polygon, Polyline};

const SYLLABLES: [&str; 28] = [
    "ka", "lo", "mi", "ren", "sa", "tor", "vel", "an", "bri", "dun", "el", "fen", "gar", "hol", "ist", "jun", "mor",
    "nes", "or", "pal", "quin", "ros", "sel", "tam", "ul", "wen", "yar", "zo",
];

fn name(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(2..=3);
    let mut s: String = (0..n).map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())]).collect();
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s
}

/// Layout of a grid-tile map: jittered quadrilateral tiles plus random
/// polylines and points scattered over the same extent.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub cols: usize,
    pub rows: usize,
    pub cell_w: f64,
    pub cell_h: f64,
    /// Number of tiles left out, taken from the end of the grid.
    pub skip_tiles: usize,
    pub lines: usize,
    pub points: usize,
    pub char_width: f64,
    pub label_height: f64,
}

impl GridMap {
    pub fn width(&self) -> f64 {
        self.cols as f64 * self.cell_w
    }

    pub fn height(&self) -> f64 {
        self.rows as f64 * self.cell_h
    }

    pub fn generate(&self, seed: u64) -> Vec<Feature> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let label = |rng: &mut ChaCha8Rng| LabelSpec::new(name(rng), self.char_width, self.label_height);

        // interior grid vertices jitter by up to a fifth of a cell, which
        // keeps every tile a simple quadrilateral
        let mut verts = vec![vec![Point::new(0.0, 0.0); self.rows + 1]; self.cols + 1];
        for (i, col) in verts.iter_mut().enumerate() {
            for (j, v) in col.iter_mut().enumerate() {
                let jx = if i == 0 || i == self.cols { 0.0 } else { rng.random_range(-0.2..0.2) * self.cell_w };
                let jy = if j == 0 || j == self.rows { 0.0 } else { rng.random_range(-0.2..0.2) * self.cell_h };
                *v = Point::new(i as f64 * self.cell_w + jx, j as f64 * self.cell_h + jy);
            }
        }
        let tiles = (self.cols * self.rows).saturating_sub(self.skip_tiles);
        for t in 0..tiles {
            let (i, j) = (t % self.cols, t / self.cols);
            let ring = vec![verts[i][j], verts[i + 1][j], verts[i + 1][j + 1], verts[i][j + 1]];
            let poly = Polygon::new(ring).expect("jittered tile is simple");
            let l = label(&mut rng);
            features.push(Feature::new(features.len() as u32, Geometry::Area(poly), l));
        }

        let (w, h) = (self.width(), self.height());
        let step = self.cell_w.min(self.cell_h);
        for _ in 0..self.lines {
            let mut p = Point::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
            let mut heading = rng.random_range(0.0..std::f64::consts::TAU);
            let mut pts = vec![p];
            for _ in 0..rng.random_range(3..=6) {
                heading += rng.random_range(-0.5..0.5);
                let len = rng.random_range(0.6..1.2) * step;
                let next = p + Point::from_angle(heading) * len;
                p = Point::new(next.x.clamp(0.0, w), next.y.clamp(0.0, h));
                pts.push(p);
            }
            let line = Polyline::new(pts).expect("walk has distinct vertices");
            let l = label(&mut rng);
            features.push(Feature::new(features.len() as u32, Geometry::Line(line), l));
        }
        for _ in 0..self.points {
            let p = Point::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
            let l = label(&mut rng);
            features.push(Feature::new(features.len() as u32, Geometry::Point(p), l));
        }
        features
    }
}

/// A county-sized map: 39 areas, 17 lines and 15 points.
pub fn washington_spec() -> GridMap {
    GridMap {
        cols: 8,
        rows: 5,
        cell_w: 40.0,
        cell_h: 32.0,
        skip_tiles: 1,
        lines: 17,
        points: 15,
        char_width: 1.2,
        label_height: 2.0,
    }
}

pub fn washington(seed: u64) -> Vec<Feature> {
    washington_spec().generate(seed)
}

/// A crowded map of 330 features: 150 areas, 60 lines and 120 points.
pub fn dense_spec() -> GridMap {
    GridMap {
        cols: 15,
        rows: 10,
        cell_w: 20.0,
        cell_h: 16.0,
        skip_tiles: 0,
        lines: 60,
        points: 120,
        char_width: 1.2,
        label_height: 2.0,
    }
}

pub fn dense(seed: u64) -> Vec<Feature> {
    dense_spec().generate(seed)
}

fn rectangle(id: u32, x0: f64, y0: f64, x1: f64, y1: f64, text: &str) -> Feature {
    let poly = Polygon::rectangle(Point::new(x0, y0), Point::new(x1, y1)).expect("rectangle");
    Feature::new(id, Geometry::Area(poly), LabelSpec::new(text, 1.0, 2.0))
}

/// Ten polygons: five large isolated ones whose labels fit inside, and a
/// row of five small touching squares whose long labels overflow them.
pub fn shortcut_fixture() -> Vec<Feature> {
    let mut features = Vec::new();
    for i in 0..5u32 {
        let x = f64::from(i) * 1000.0;
        features.push(rectangle(i, x, 0.0, x + 80.0, 20.0, "isle"));
    }
    for i in 0..5u32 {
        let x = 10_000.0 + 10.0 * f64::from(i);
        features.push(rectangle(5 + i, x, 0.0, x + 10.0, 10.0, "overflowing"));
    }
    features
}

/// `n` mixed features packed into a small square so labels compete.
pub fn cluster(seed: u64, n: usize) -> Vec<Feature> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 6.0 + 3.0 * n as f64;
    let mut features = Vec::with_capacity(n);
    while features.len() < n {
        let id = features.len() as u32;
        let c = Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side));
        let text = name(&mut rng);
        let label = LabelSpec::new(text, 1.0, 2.0);
        let geometry = match rng.random_range(0..3) {
            0 => Geometry::Point(c),
            1 => {
                let d = Point::from_angle(rng.random_range(0.0..std::f64::consts::PI)) * rng.random_range(4.0..10.0);
                let bend = c + d + d.perp() * rng.random_range(-0.3..0.3);
                match Polyline::new(vec![c - d, c, bend]) {
                    Ok(l) => Geometry::Line(l),
                    Err(_) => continue,
                }
            }
            _ => {
                let (w, h) = (rng.random_range(6.0..16.0), rng.random_range(5.0..10.0));
                match Polygon::rectangle(c, c + Point::new(w, h)) {
                    Ok(p) => Geometry::Area(p),
                    Err(_) => continue,
                }
            }
        };
        features.push(Feature::new(id, geometry, label));
    }
    features
}
