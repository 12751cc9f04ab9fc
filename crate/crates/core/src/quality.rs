//! Four-term placement quality and the weighted fitness the optimizer minimizes.
//!
//! * `s1`: 9 per overlapping label pair among the features in the search space.
//! * `s2`, per label: 99 if it covers a point, else 1 if it crosses a line or
//!   polygon boundary, else 0.
//! * `s3`, per label: normalized distance layer (0 on layer 1, 1 on layer 3).
//! * `s4`, per label: bearing quadrant (points) or orientation (areas, and
//!   lines unless strict mode is on) priority.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{CandidatePosition, Feature, Problem};
use crate::geometry::{box_feature_contact, boxes_intersect, FeatureKind, LabelBox};
use crate::index::GridIndex;

/// Score of one overlapping label pair before weighting.
pub const LABEL_LABEL_PENALTY: f64 = 9.0;
/// Label over a point feature.
pub const POINT_CONFLICT: f64 = 99.0;
/// Label across a line or a polygon boundary.
pub const LINE_AREA_CONFLICT: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("weights must be finite and non-negative: {0:?}")]
    Negative([f64; 4]),
    #[error("weights must satisfy w1 >= w2 >= max(w3, w4): {0:?}")]
    Ordering([f64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        QualityWeights { w1: 10.0, w2: 5.0, w3: 1.0, w4: 1.0 }
    }
}

impl QualityWeights {
    pub fn uniform(w: f64) -> Self {
        QualityWeights { w1: w, w2: w, w3: w, w4: w }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.w1, self.w2, self.w3, self.w4]
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        let a = self.as_array();
        if a.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(WeightError::Negative(a));
        }
        if !(self.w1 >= self.w2 && self.w2 >= self.w3.max(self.w4)) {
            return Err(WeightError::Ordering(a));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub rho2: f64,
    pub fitness: f64,
    pub ll_conflict_count: usize,
    pub lf_conflict_count: usize,
}

/// One chosen position per feature, in feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub positions: Vec<CandidatePosition>,
    /// Whether the feature belongs to the optimized set (`Q`), as opposed to
    /// a frozen single-candidate polygon.
    pub in_search: Vec<bool>,
}

impl Placement {
    /// Placement selected by `genes` (one gene per searchable feature).
    pub fn from_genes(problem: &Problem, genes: &[u8]) -> Placement {
        assert_eq!(genes.len(), problem.q(), "chromosome length must equal Q");
        let mut positions: Vec<CandidatePosition> = problem.sets.iter().map(|s| s.positions[0]).collect();
        for (&fi, &g) in problem.full.iter().zip(genes) {
            positions[fi] = problem.sets[fi].positions[g as usize];
        }
        Placement { positions, in_search: problem.is_full.clone() }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn boxes(&self) -> impl Iterator<Item = &LabelBox> {
        self.positions.iter().map(|c| &c.label_box)
    }
}

/// Read-only scoring context for one dataset: the features, a spatial index
/// over them, the weights and whether line priorities enter `s4`.
#[derive(Debug, Clone)]
pub struct Scorer<'a> {
    pub features: &'a [Feature],
    pub weights: QualityWeights,
    pub line_priority: bool,
    index: GridIndex,
}

impl<'a> Scorer<'a> {
    pub fn new(features: &'a [Feature], weights: QualityWeights) -> Self {
        let bounds: Vec<_> = features.iter().map(|f| f.geometry.aabb()).collect();
        Scorer { features, weights, line_priority: true, index: GridIndex::new(&bounds) }
    }

    /// Drops the line-priority extension from `s4`.
    pub fn strict(mut self, strict: bool) -> Self {
        self.line_priority = !strict;
        self
    }

    /// Features whose geometry the box touches, as `(feature index, kind)`.
    pub fn touched(&self, b: &LabelBox) -> Vec<usize> {
        self.index
            .query(&b.aabb())
            .into_iter()
            .map(|j| j as usize)
            .filter(|&j| box_feature_contact(b, &self.features[j].geometry).is_some())
            .collect()
    }

    /// Label-feature score of a single box.
    pub fn mu1(&self, b: &LabelBox) -> f64 {
        let mut worst: f64 = 0.0;
        for j in self.index.query(&b.aabb()) {
            let g = &self.features[j as usize].geometry;
            if box_feature_contact(b, g).is_some() {
                if g.kind() == FeatureKind::Point {
                    return POINT_CONFLICT;
                }
                worst = LINE_AREA_CONFLICT;
            }
        }
        worst
    }

    /// Priority contribution of feature `i`'s chosen position to `s4`.
    pub fn priority_term(&self, i: usize, c: &CandidatePosition) -> f64 {
        if !self.line_priority && self.features[i].kind() == FeatureKind::Line {
            0.0
        } else {
            c.priority
        }
    }

    pub fn score_label_label(&self, p: &Placement) -> (f64, usize) {
        score_label_label(p)
    }

    pub fn score_label_feature(&self, p: &Placement) -> (f64, usize) {
        let mut s2 = 0.0;
        let mut count = 0;
        for c in &p.positions {
            let m = self.mu1(&c.label_box);
            s2 += m;
            count += usize::from(m > 0.0);
        }
        (s2, count)
    }

    pub fn score_priority(&self, p: &Placement) -> f64 {
        p.positions.iter().enumerate().map(|(i, c)| self.priority_term(i, c)).sum()
    }

    pub fn total_score(&self, p: &Placement) -> ScoreBreakdown {
        let (s1, ll) = self.score_label_label(p);
        let (s2, lf) = self.score_label_feature(p);
        let s3 = score_ambiguity(p);
        let s4 = self.score_priority(p);
        assemble([s1, s2, s3, s4], &self.weights, ll, lf)
    }
}

fn assemble(s: [f64; 4], w: &QualityWeights, ll: usize, lf: usize) -> ScoreBreakdown {
    let w = w.as_array();
    ScoreBreakdown {
        s1: s[0],
        s2: s[1],
        s3: s[2],
        s4: s[3],
        rho2: s.iter().sum(),
        fitness: s.iter().zip(w).map(|(s, w)| s * w).sum(),
        ll_conflict_count: ll,
        lf_conflict_count: lf,
    }
}

/// Overlapping label pairs as `(i, j)` with `i < j`, over all labels.
pub fn overlapping_pairs(p: &Placement) -> Vec<(usize, usize)> {
    let bounds: Vec<_> = p.boxes().map(LabelBox::aabb).collect();
    let index = GridIndex::new(&bounds);
    let mut pairs = Vec::new();
    for (i, a) in p.boxes().enumerate() {
        for j in index.query(&bounds[i]) {
            let j = j as usize;
            if j > i && boxes_intersect(a, &p.positions[j].label_box) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// `s1` over the searchable labels, plus the overlap count over all labels.
pub fn score_label_label(p: &Placement) -> (f64, usize) {
    let pairs = overlapping_pairs(p);
    let scored = pairs.iter().filter(|&&(i, j)| p.in_search[i] && p.in_search[j]).count();
    (LABEL_LABEL_PENALTY * scored as f64, pairs.len())
}

pub fn score_label_feature(p: &Placement, features: &[Feature]) -> (f64, usize) {
    Scorer::new(features, QualityWeights::default()).score_label_feature(p)
}

pub fn score_ambiguity(p: &Placement) -> f64 {
    p.positions.iter().map(|c| c.mu2).sum()
}

pub fn score_priority(p: &Placement, features: &[Feature]) -> f64 {
    Scorer::new(features, QualityWeights::default()).score_priority(p)
}

pub fn total_score(p: &Placement, features: &[Feature], weights: QualityWeights) -> ScoreBreakdown {
    Scorer::new(features, weights).total_score(p)
}

/// Precomputed per-candidate costs and candidate-pair overlaps for fast
/// chromosome evaluation. Agrees with [`Scorer::total_score`] on the placement
/// the chromosome selects.
#[derive(Debug, Clone)]
pub struct FitnessTable {
    /// Weighted `s2 + s3 + s4` of every candidate of every searchable feature.
    unary: Vec<Vec<f64>>,
    /// For candidate `c` of searchable feature `q`: overlapping candidates
    /// `(q2, c2)` with `q2 > q`.
    overlaps: Vec<Vec<Vec<(u32, u8)>>>,
    /// Weighted contribution of the frozen features.
    constant: f64,
    pair_cost: f64,
}

impl FitnessTable {
    pub fn new(problem: &Problem, scorer: &Scorer<'_>) -> Self {
        let w = scorer.weights;
        let unary_of = |i: usize, c: &CandidatePosition| {
            w.w2 * scorer.mu1(&c.label_box) + w.w3 * c.mu2 + w.w4 * scorer.priority_term(i, c)
        };
        let mut constant = 0.0;
        for (i, s) in problem.sets.iter().enumerate() {
            if !problem.is_full[i] {
                constant += unary_of(i, &s.positions[0]);
            }
        }
        let unary: Vec<Vec<f64>> = problem
            .full
            .iter()
            .map(|&i| problem.sets[i].positions.iter().map(|c| unary_of(i, c)).collect())
            .collect();

        let mut owners = Vec::new();
        let mut boxes = Vec::new();
        for (q, &i) in problem.full.iter().enumerate() {
            for (c, pos) in problem.sets[i].positions.iter().enumerate() {
                owners.push((q as u32, c as u8));
                boxes.push(pos.label_box);
            }
        }
        let bounds: Vec<_> = boxes.iter().map(LabelBox::aabb).collect();
        let index = GridIndex::new(&bounds);
        let mut overlaps: Vec<Vec<Vec<(u32, u8)>>> = unary.iter().map(|u| vec![Vec::new(); u.len()]).collect();
        for (k, b) in boxes.iter().enumerate() {
            let (q, c) = owners[k];
            for other in index.query(&bounds[k]) {
                let (q2, c2) = owners[other as usize];
                if q2 > q && boxes_intersect(b, &boxes[other as usize]) {
                    overlaps[q as usize][c as usize].push((q2, c2));
                }
            }
        }
        FitnessTable { unary, overlaps, constant, pair_cost: w.w1 * LABEL_LABEL_PENALTY }
    }

    pub fn q(&self) -> usize {
        self.unary.len()
    }

    /// Weighted fitness of the placement selected by `genes`.
    pub fn evaluate(&self, genes: &[u8]) -> f64 {
        debug_assert_eq!(genes.len(), self.q());
        let mut unary = 0.0;
        let mut pairs = 0usize;
        for (q, &g) in genes.iter().enumerate() {
            unary += self.unary[q][g as usize];
            pairs += self.overlaps[q][g as usize].iter().filter(|&&(q2, c2)| genes[q2 as usize] == c2).count();
        }
        self.constant + unary + self.pair_cost * pairs as f64
    }

    /// Base-score-only fitness lower part, exposed for diagnostics.
    pub fn candidate_cost(&self, q: usize, c: usize) -> f64 {
        self.unary[q][c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{area_feature, line_feature, point_feature, LayerConfig, Orientation};
    use crate::geometry::Point;

    fn pos(center: Point, len: f64, h: f64) -> CandidatePosition {
        CandidatePosition {
            label_box: LabelBox::new(center, len, h, 0.0),
            layer: 1,
            beta: Some(0.0),
            orientation: None,
            local_angle: None,
            distance: 0.0,
            mu2: 0.0,
            priority: 0.25,
            base_score: 0.25,
        }
    }

    fn placement(centers: &[(f64, f64)]) -> Placement {
        Placement {
            positions: centers.iter().map(|&(x, y)| pos(Point::new(x, y), 2.0, 2.0)).collect(),
            in_search: vec![true; centers.len()],
        }
    }

    #[test]
    fn label_label_counts_pairs() {
        assert_eq!(score_label_label(&placement(&[(0.0, 0.0), (10.0, 0.0)])), (0.0, 0));
        assert_eq!(score_label_label(&placement(&[(0.0, 0.0), (1.0, 0.0)])), (9.0, 1));
        assert_eq!(score_label_label(&placement(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)])), (27.0, 3));
    }

    #[test]
    fn frozen_labels_are_reported_but_not_scored() {
        let mut p = placement(&[(0.0, 0.0), (1.0, 0.0)]);
        p.in_search[1] = false;
        assert_eq!(score_label_label(&p), (0.0, 1));
    }

    #[test]
    fn label_feature_classes() {
        let features = vec![
            point_feature(0, 0.0, 0.0, "a", 1.0, 1.0),
            line_feature(1, &[(20.0, -5.0), (20.0, 5.0)], "b", 1.0, 1.0).unwrap(),
            point_feature(2, 100.0, 100.0, "c", 1.0, 1.0),
        ];
        let scorer = Scorer::new(&features, QualityWeights::default());
        assert_eq!(scorer.mu1(&LabelBox::new(Point::new(0.0, 0.0), 2.0, 2.0, 0.0)), 99.0);
        assert_eq!(scorer.mu1(&LabelBox::new(Point::new(20.0, 0.0), 2.0, 2.0, 0.0)), 1.0);
        assert_eq!(scorer.mu1(&LabelBox::new(Point::new(50.0, 50.0), 2.0, 2.0, 0.0)), 0.0);
        // point beats line when both are covered
        assert_eq!(scorer.mu1(&LabelBox::new(Point::new(10.0, 0.0), 30.0, 2.0, 0.0)), 99.0);
    }

    #[test]
    fn ambiguity_sums() {
        let mut p = placement(&[(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)]);
        assert_eq!(score_ambiguity(&p), 0.0);
        for c in &mut p.positions {
            c.mu2 = 1.0;
        }
        assert_eq!(score_ambiguity(&p), 3.0);
        p.positions[0].mu2 = 0.5;
        assert_eq!(score_ambiguity(&p), 2.5);
    }

    #[test]
    fn priority_sums() {
        let features = vec![
            point_feature(0, 0.0, 0.0, "a", 1.0, 1.0),
            area_feature(1, &[(50.0, 50.0), (90.0, 50.0), (90.0, 90.0), (50.0, 90.0)], "b", 1.0, 1.0).unwrap(),
        ];
        let mut p = placement(&[(5.0, 0.0), (70.0, 70.0)]);
        p.positions[0].priority = crate::candidates::point_priority(300f64.to_radians());
        p.positions[1].orientation = Some(Orientation::Vertical);
        p.positions[1].priority = crate::candidates::area_priority(Orientation::Vertical);
        assert_eq!(score_priority(&p, &features), 1.75);
    }

    #[test]
    fn single_point_best_placement() {
        let features = vec![point_feature(0, 0.0, 0.0, "abc", 1.0, 2.0)];
        let problem = Problem::build(features.clone(), LayerConfig::default()).unwrap();
        let p = Placement::from_genes(&problem, &[0]);
        let s = total_score(&p, &features, QualityWeights::uniform(1.0));
        assert_eq!(s.rho2, 0.25);
        assert_eq!(s.fitness, s.rho2);
    }

    #[test]
    fn weighted_pair() {
        let features: Vec<Feature> = Vec::new();
        let mut p = placement(&[(0.0, 0.0), (1.0, 0.0)]);
        for c in &mut p.positions {
            c.priority = 0.0;
        }
        let s = total_score(&p, &features, QualityWeights { w1: 2.0, w2: 1.0, w3: 1.0, w4: 1.0 });
        assert_eq!(s.s1, 9.0);
        assert_eq!(s.fitness, 18.0);
    }

    #[test]
    fn weight_validation() {
        assert!(QualityWeights::default().validate().is_ok());
        assert!(QualityWeights { w1: 1.0, w2: 5.0, w3: 1.0, w4: 1.0 }.validate().is_err());
        assert!(QualityWeights { w1: -1.0, w2: 0.0, w3: 0.0, w4: 0.0 }.validate().is_err());
    }

    #[test]
    fn strict_mode_drops_line_priority() {
        let features = vec![line_feature(0, &[(0.0, 0.0), (50.0, 0.0)], "road", 1.0, 1.0).unwrap()];
        let problem = Problem::build(features.clone(), LayerConfig::default()).unwrap();
        let p = Placement::from_genes(&problem, &[0]);
        let loose = Scorer::new(&features, QualityWeights::default()).total_score(&p);
        let strict = Scorer::new(&features, QualityWeights::default()).strict(true).total_score(&p);
        assert_eq!(loose.s4, 0.25);
        assert_eq!(strict.s4, 0.0);
    }

    #[test]
    fn table_matches_direct_scoring() {
        let features = vec![
            point_feature(0, 0.0, 0.0, "alpha", 1.0, 2.0),
            point_feature(1, 4.0, 1.0, "beta", 1.0, 2.0),
            line_feature(2, &[(-10.0, 3.0), (15.0, 3.0)], "road", 1.0, 2.0).unwrap(),
            area_feature(3, &[(-20.0, -20.0), (20.0, -20.0), (20.0, -8.0), (-20.0, -8.0)], "park", 1.0, 2.0).unwrap(),
        ];
        let problem = Problem::build(features.clone(), LayerConfig::default()).unwrap();
        let scorer = Scorer::new(&problem.features, QualityWeights::default());
        let table = FitnessTable::new(&problem, &scorer);
        let q = problem.q();
        let mut genes = vec![0u8; q];
        for step in 0..500u32 {
            for (k, g) in genes.iter_mut().enumerate() {
                *g = ((step as usize * 7 + k * 13 + (step as usize / 3) * k) % 24) as u8;
            }
            let fast = table.evaluate(&genes);
            let slow = scorer.total_score(&Placement::from_genes(&problem, &genes)).fitness;
            assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
        }
    }
}
