//! Post-optimization repair of label-feature conflicts.
//!
//! Each conflicting label is tried at alternative positions: for point
//! labels the other fixed candidates and four tight diagonal slots first,
//! then displacements of the current box; for line and area labels,
//! displacements along the axes and the local feature direction. A move is
//! taken only if it lowers the label's own cost and adds no label overlap,
//! so the placement score never rises.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{ambiguity, box_at_bearing, point_priority, CandidatePosition, Problem};
use crate::geometry::{box_feature_contact, boxes_intersect, normalize_angle, FeatureKind, Geometry, LabelBox, Point};
use crate::index::GridIndex;
use crate::quality::{Placement, Scorer, POINT_CONFLICT};

/// Displacement bearings for point labels, in trial order.
pub const POINT_DIRECTIONS: [f64; 4] = [FRAC_PI_4, 3.0 * FRAC_PI_4, 5.0 * FRAC_PI_4, 7.0 * FRAC_PI_4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlideError {
    #[error("sliding margin must be positive, got {0}")]
    NonPositiveEpsilon(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlideConfig {
    /// Fixed safety margin in map units; when unset, `epsilon_factor` times
    /// the label height is used per label.
    pub epsilon: Option<f64>,
    pub epsilon_factor: f64,
    /// Cap on displacement trials per label.
    pub max_attempts: usize,
    /// Skip labels whose conflicts involve more than one feature kind.
    pub strict: bool,
}

impl Default for SlideConfig {
    fn default() -> Self {
        SlideConfig { epsilon: None, epsilon_factor: 0.05, max_attempts: 8, strict: false }
    }
}

impl SlideConfig {
    pub fn validate(&self) -> Result<(), SlideError> {
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(SlideError::NonPositiveEpsilon(e));
            }
        }
        if !(self.epsilon_factor > 0.0 && self.epsilon_factor.is_finite()) {
            return Err(SlideError::NonPositiveEpsilon(self.epsilon_factor));
        }
        Ok(())
    }

    pub fn epsilon_for(&self, label_height: f64) -> f64 {
        self.epsilon.unwrap_or(self.epsilon_factor * label_height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictRecord {
    /// Index of the feature owning the label.
    pub label: usize,
    /// Index of the feature the label touches.
    pub feature: usize,
    pub kind: FeatureKind,
    /// Contact point: the point feature itself, or the middle of the
    /// segment portion inside the box.
    pub r: Point,
    /// Box corner nearest to `r`.
    pub b: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlideMethod {
    FixedCandidate,
    Diagonal,
    Displacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlideOutcome {
    Eliminated,
    Better,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlideMove {
    pub feature: usize,
    pub method: SlideMethod,
    pub outcome: SlideOutcome,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SlideReport {
    /// Labels with a label-feature conflict before sliding.
    pub conflicted: usize,
    pub eliminated: usize,
    pub better: usize,
    pub score_before: f64,
    pub score_after: f64,
    pub moves: Vec<SlideMove>,
}

fn nearest_corner(b: &LabelBox, r: Point) -> Point {
    let corners = b.corners();
    let mut best = corners[0];
    for c in &corners[1..] {
        if c.distance(r) < best.distance(r) {
            best = *c;
        }
    }
    best
}

fn conflicts_of(scorer: &Scorer<'_>, label: usize, b: &LabelBox) -> Vec<ConflictRecord> {
    scorer
        .touched(b)
        .into_iter()
        .filter_map(|j| {
            let g = &scorer.features[j].geometry;
            box_feature_contact(b, g).map(|r| ConflictRecord { label, feature: j, kind: g.kind(), r, b: nearest_corner(b, r) })
        })
        .collect()
}

/// Every (label, feature) pair whose geometry the label box touches, in
/// label then feature order.
pub fn detect_conflicts(p: &Placement, scorer: &Scorer<'_>) -> Vec<ConflictRecord> {
    p.positions.iter().enumerate().flat_map(|(i, c)| conflicts_of(scorer, i, &c.label_box)).collect()
}

/// Distance a box must move to clear the contact at `r`, plus the margin.
pub fn move_distance(r: Point, b: Point, epsilon: f64) -> f64 {
    r.distance(b) + epsilon
}

/// Label overlaps against the current placement. Boxes that have moved
/// since the index was built are checked directly.
struct OverlapIndex {
    index: GridIndex,
    moved: Vec<usize>,
    is_moved: Vec<bool>,
}

impl OverlapIndex {
    fn new(p: &Placement) -> Self {
        let bounds: Vec<_> = p.boxes().map(LabelBox::aabb).collect();
        OverlapIndex { index: GridIndex::new(&bounds), moved: Vec::new(), is_moved: vec![false; p.len()] }
    }

    fn overlaps(&self, p: &Placement, label: usize, b: &LabelBox) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .index
            .query(&b.aabb())
            .into_iter()
            .map(|j| j as usize)
            .filter(|&j| !self.is_moved[j])
            .chain(self.moved.iter().copied())
            .filter(|&j| j != label && boxes_intersect(b, &p.positions[j].label_box))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn mark_moved(&mut self, i: usize) {
        if !self.is_moved[i] {
            self.is_moved[i] = true;
            self.moved.push(i);
        }
    }
}

/// Read-only state shared by the per-label slide routines.
pub struct SlideContext<'a> {
    pub problem: &'a Problem,
    pub scorer: &'a Scorer<'a>,
    pub cfg: &'a SlideConfig,
}

struct Trial {
    position: CandidatePosition,
    method: SlideMethod,
}

impl SlideContext<'_> {
    fn local_cost(&self, i: usize, c: &CandidatePosition) -> (f64, f64) {
        let mu1 = self.scorer.mu1(&c.label_box);
        (mu1, mu1 + c.mu2 + self.scorer.priority_term(i, c))
    }

    /// First acceptable trial: conflict-free if any, else strictly lower
    /// `μ1`. Every accepted trial lowers the label's own cost and keeps its
    /// overlap set within the current one.
    fn choose(&self, i: usize, p: &Placement, overlaps: &OverlapIndex, trials: Vec<Trial>) -> Option<(Trial, SlideOutcome)> {
        let current = &p.positions[i];
        let (mu1_now, cost_now) = self.local_cost(i, current);
        let ll_now = overlaps.overlaps(p, i, &current.label_box);
        let mut better: Option<Trial> = None;
        for t in trials {
            let (mu1, cost) = self.local_cost(i, &t.position);
            if mu1 >= mu1_now || cost >= cost_now {
                continue;
            }
            let ll = overlaps.overlaps(p, i, &t.position.label_box);
            if !ll.iter().all(|j| ll_now.binary_search(j).is_ok()) {
                continue;
            }
            if mu1 == 0.0 && ll.is_empty() {
                return Some((t, SlideOutcome::Eliminated));
            }
            if better.is_none() {
                better = Some(t);
            }
        }
        better.map(|t| {
            let outcome = if self.scorer.mu1(&t.position.label_box) == 0.0 { SlideOutcome::Eliminated } else { SlideOutcome::Better };
            (t, outcome)
        })
    }

    fn displacements(&self, current: &CandidatePosition, d: f64, bearings: &[f64]) -> Vec<Trial> {
        bearings
            .iter()
            .take(self.cfg.max_attempts)
            .map(|&theta| Trial {
                position: CandidatePosition {
                    label_box: current.label_box.translate(Point::from_angle(theta) * d),
                    ..*current
                },
                method: SlideMethod::Displacement,
            })
            .collect()
    }

    fn move_length(&self, i: usize, conflicts: &[ConflictRecord]) -> f64 {
        let eps = self.cfg.epsilon_for(self.problem.features[i].label.height);
        conflicts.iter().map(|c| move_distance(c.r, c.b, eps)).fold(0.0, f64::max)
    }

    fn point_trials(&self, i: usize, current: &CandidatePosition, conflicts: &[ConflictRecord]) -> Vec<Trial> {
        let f = &self.problem.features[i];
        let Geometry::Point(origin) = f.geometry else {
            return Vec::new();
        };
        let (len, h) = (f.label.length(), f.label.height);
        let radii = self.problem.layers.radii_for(h);
        let mut fixed: Vec<&CandidatePosition> =
            self.problem.sets[i].positions.iter().filter(|c| c.label_box != current.label_box).collect();
        // stable: within a layer the set's base-score order is kept
        fixed.sort_by_key(|c| c.layer);
        let mut trials: Vec<Trial> = fixed.into_iter().map(|c| Trial { position: *c, method: SlideMethod::FixedCandidate }).collect();
        let gap = h / 2.0;
        let mu2 = ambiguity(gap, radii);
        for theta in POINT_DIRECTIONS {
            let priority = point_priority(theta);
            trials.push(Trial {
                position: CandidatePosition {
                    label_box: box_at_bearing(origin, gap, theta, len, h),
                    layer: 1,
                    beta: Some(theta),
                    orientation: None,
                    local_angle: None,
                    distance: gap,
                    mu2,
                    priority,
                    base_score: mu2 + priority,
                },
                method: SlideMethod::Diagonal,
            });
        }
        let d = self.move_length(i, conflicts);
        trials.extend(self.displacements(current, d, &POINT_DIRECTIONS));
        trials
    }

    fn line_area_trials(&self, i: usize, current: &CandidatePosition, conflicts: &[ConflictRecord]) -> Vec<Trial> {
        let local = current.local_angle.unwrap_or(current.label_box.angle);
        let mut bearings: Vec<f64> = Vec::with_capacity(6);
        for theta in [0.0, FRAC_PI_2, local, PI, 3.0 * FRAC_PI_2, local + PI] {
            let theta = normalize_angle(theta);
            let seen = bearings.iter().any(|&b| {
                let d = (b - theta).abs();
                d < 1e-9 || (2.0 * PI - d) < 1e-9
            });
            if !seen {
                bearings.push(theta);
            }
        }
        let d = self.move_length(i, conflicts);
        self.displacements(current, d, &bearings)
    }

    fn slide(&self, i: usize, p: &Placement, overlaps: &OverlapIndex, conflicts: &[ConflictRecord]) -> Option<(Trial, SlideOutcome)> {
        let current = &p.positions[i];
        let trials = match self.problem.features[i].kind() {
            FeatureKind::Point => self.point_trials(i, current, conflicts),
            FeatureKind::Line | FeatureKind::Area => self.line_area_trials(i, current, conflicts),
        };
        self.choose(i, p, overlaps, trials)
    }
}

/// New position for a conflicting point label, or `None` to keep it.
pub fn slide_point_label(
    ctx: &SlideContext<'_>,
    label: usize,
    conflicts: &[ConflictRecord],
    p: &Placement,
) -> Option<(CandidatePosition, SlideMethod, SlideOutcome)> {
    let overlaps = OverlapIndex::new(p);
    let trials = ctx.point_trials(label, &p.positions[label], conflicts);
    ctx.choose(label, p, &overlaps, trials).map(|(t, o)| (t.position, t.method, o))
}

/// New position for a conflicting line or area label, or `None` to keep it.
pub fn slide_line_area_label(
    ctx: &SlideContext<'_>,
    label: usize,
    conflicts: &[ConflictRecord],
    p: &Placement,
) -> Option<(CandidatePosition, SlideMethod, SlideOutcome)> {
    let overlaps = OverlapIndex::new(p);
    let trials = ctx.line_area_trials(label, &p.positions[label], conflicts);
    ctx.choose(label, p, &overlaps, trials).map(|(t, o)| (t.position, t.method, o))
}

/// One sweep over the conflicting labels, point conflicts first, then by
/// feature order.
pub fn apply_sliding(
    p: &Placement,
    problem: &Problem,
    scorer: &Scorer<'_>,
    cfg: &SlideConfig,
) -> Result<(Placement, SlideReport), SlideError> {
    cfg.validate()?;
    let ctx = SlideContext { problem, scorer, cfg };
    let mut out = p.clone();
    let before = scorer.total_score(p).rho2;

    let mut by_label: Vec<Vec<ConflictRecord>> = vec![Vec::new(); p.len()];
    for c in detect_conflicts(p, scorer) {
        by_label[c.label].push(c);
    }
    let mut order: Vec<(usize, f64)> = by_label
        .iter()
        .enumerate()
        .filter(|(_, cs)| !cs.is_empty())
        .map(|(i, _)| (i, scorer.mu1(&p.positions[i].label_box)))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut report = SlideReport { conflicted: order.len(), score_before: before, ..Default::default() };
    let mut overlaps = OverlapIndex::new(&out);
    for (i, severity) in order {
        let conflicts = &by_label[i];
        if cfg.strict && conflicts.iter().any(|c| c.kind != conflicts[0].kind) {
            continue;
        }
        if let Some((trial, outcome)) = ctx.slide(i, &out, &overlaps, conflicts) {
            log::trace!("label {i} (severity {severity}) moved by {:?}: {outcome:?}", trial.method);
            out.positions[i] = trial.position;
            overlaps.mark_moved(i);
            match outcome {
                SlideOutcome::Eliminated => report.eliminated += 1,
                SlideOutcome::Better => report.better += 1,
            }
            report.moves.push(SlideMove { feature: i, method: trial.method, outcome });
        }
    }
    report.score_after = scorer.total_score(&out).rho2;
    debug_assert!(report.score_after <= report.score_before + 1e-9);
    Ok((out, report))
}

/// True when any recorded conflict is with a point feature.
pub fn has_point_conflict(conflicts: &[ConflictRecord]) -> bool {
    conflicts.iter().any(|c| c.kind == FeatureKind::Point)
}

/// Label-feature score the conflicts imply for their label.
pub fn severity(conflicts: &[ConflictRecord]) -> f64 {
    if has_point_conflict(conflicts) {
        POINT_CONFLICT
    } else if conflicts.is_empty() {
        0.0
    } else {
        crate::quality::LINE_AREA_CONFLICT
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{line_feature, point_feature, Feature, LayerConfig};
    use crate::quality::QualityWeights;

    fn setup(features: Vec<Feature>) -> Problem {
        Problem::build(features, LayerConfig::default()).unwrap()
    }

    fn best_placement(p: &Problem) -> Placement {
        Placement::from_genes(p, &vec![0; p.q()])
    }

    #[test]
    fn move_distance_examples() {
        assert!((move_distance(Point::new(3.0, 4.0), Point::new(0.0, 0.0), 0.5) - 5.5).abs() < 1e-12);
        assert_eq!(move_distance(Point::new(1.0, 1.0), Point::new(1.0, 1.0), 0.5), 0.5);
        assert!(SlideConfig { epsilon: Some(0.0), ..Default::default() }.validate().is_err());
        assert!(SlideConfig { epsilon_factor: -1.0, ..Default::default() }.validate().is_err());
        assert!(SlideConfig::default().validate().is_ok());
    }

    #[test]
    fn conflict_free_is_identity() {
        let p = setup(vec![point_feature(0, 0.0, 0.0, "a", 1.0, 2.0), point_feature(1, 100.0, 0.0, "b", 1.0, 2.0)]);
        let s = Scorer::new(&p.features, QualityWeights::default());
        let pl = best_placement(&p);
        assert!(detect_conflicts(&pl, &s).is_empty());
        let (out, report) = apply_sliding(&pl, &p, &s, &SlideConfig::default()).unwrap();
        assert_eq!(out, pl);
        assert_eq!((report.conflicted, report.eliminated, report.better), (0, 0, 0));
        assert_eq!(report.score_before, report.score_after);
    }

    #[test]
    fn counts_each_touched_feature() {
        let p = setup(vec![point_feature(0, 0.0, 0.0, "abcd", 1.0, 2.0)]);
        let first = p.sets[0].positions[0].label_box;
        let c = first.center;
        let p = setup(vec![
            point_feature(0, 0.0, 0.0, "abcd", 1.0, 2.0),
            point_feature(1, c.x, c.y, "x", 1.0, 2.0),
            line_feature(2, &[(c.x - 0.5, c.y - 10.0), (c.x - 0.5, c.y + 10.0)], "road", 1.0, 2.0).unwrap(),
        ]);
        let s = Scorer::new(&p.features, QualityWeights::default());
        let mut pl = best_placement(&p);
        pl.positions[0] = p.sets[0].positions.iter().find(|q| q.label_box == first).copied().unwrap();
        let recs: Vec<_> = detect_conflicts(&pl, &s).into_iter().filter(|r| r.label == 0).collect();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].kind, FeatureKind::Point);
        assert_eq!(recs[1].kind, FeatureKind::Line);
        for r in &recs {
            assert!(box_feature_contact(&first, &p.features[r.feature].geometry).is_some());
            assert!(first.corners().contains(&r.b));
        }
    }

    #[test]
    fn crossing_line_moves_to_first_free_candidate() {
        let probe = setup(vec![point_feature(0, 0.0, 0.0, "town", 1.0, 2.0)]);
        let chosen = probe.sets[0].positions[0];
        let c = chosen.label_box.center;
        let road = line_feature(1, &[(c.x, c.y - 20.0), (c.x, c.y + 20.0)], "road", 0.5, 1.0).unwrap();
        let p = setup(vec![point_feature(0, 0.0, 0.0, "town", 1.0, 2.0), road]);
        let s = Scorer::new(&p.features, QualityWeights::default());
        let mut pl = best_placement(&p);
        pl.positions[0] = chosen;
        // move the road's own label far away so it cannot interfere
        pl.positions[1].label_box = pl.positions[1].label_box.translate(Point::new(500.0, 500.0));
        assert_eq!(s.mu1(&chosen.label_box), 1.0);
        let (out, report) = apply_sliding(&pl, &p, &s, &SlideConfig::default()).unwrap();
        assert_eq!(report.eliminated, 1);
        assert!(report.score_after < report.score_before);
        let moved = out.positions[0];
        assert_eq!(s.mu1(&moved.label_box), 0.0);
        // oracle: first fixed candidate in ring order that is clear and cheaper
        let cost = |q: &CandidatePosition| s.mu1(&q.label_box) + q.mu2 + q.priority;
        let mut ring: Vec<_> = p.sets[0].positions.iter().filter(|q| q.label_box != chosen.label_box).collect();
        ring.sort_by_key(|q| q.layer);
        let want = ring.into_iter().find(|q| s.mu1(&q.label_box) == 0.0 && cost(q) < cost(&chosen)).unwrap();
        assert_eq!(moved, *want);
    }

    #[test]
    fn blocked_point_uses_displacement() {
        let probe = setup(vec![point_feature(0, 0.0, 0.0, "town", 1.0, 2.0)]);
        let chosen = probe.sets[0].positions[0];
        let mut features = vec![point_feature(0, 0.0, 0.0, "town", 1.0, 2.0)];
        let mut blockers: Vec<Point> = probe.sets[0].positions.iter().map(|q| q.label_box.center).collect();
        for theta in POINT_DIRECTIONS {
            blockers.push(box_at_bearing(Point::new(0.0, 0.0), 1.0, theta, 4.0, 2.0).center);
        }
        blockers.dedup();
        for (k, b) in blockers.iter().enumerate() {
            features.push(point_feature(k as u32 + 1, b.x, b.y, "x", 1.0, 2.0));
        }
        let p = setup(features);
        let s = Scorer::new(&p.features, QualityWeights::default());
        let mut pl = best_placement(&p);
        pl.positions[0] = chosen;
        for q in pl.positions.iter_mut().skip(1) {
            q.label_box = q.label_box.translate(Point::new(1000.0, 0.0));
        }
        let overlaps = OverlapIndex::new(&pl);
        // a wide margin carries the box clear of the blocked ring
        let cfg = SlideConfig { epsilon: Some(6.0), ..Default::default() };
        let ctx = SlideContext { problem: &p, scorer: &s, cfg: &cfg };
        let conflicts = conflicts_of(&s, 0, &chosen.label_box);
        let d = ctx.move_length(0, &conflicts);
        let trials = ctx.point_trials(0, &chosen, &conflicts);
        assert!(trials
            .iter()
            .filter(|t| t.method != SlideMethod::Displacement)
            .all(|t| s.mu1(&t.position.label_box) > 0.0));
        let (t, outcome) = ctx.slide(0, &pl, &overlaps, &conflicts).expect("a displacement clears the box");
        assert_eq!(t.method, SlideMethod::Displacement);
        assert_eq!(outcome, SlideOutcome::Eliminated);
        let shift = t.position.label_box.center.distance(chosen.label_box.center);
        assert!(shift >= d - 1e-9);
    }

    #[test]
    fn move_onto_another_label_is_rejected() {
        // a road crosses an area label; once another label sits where the
        // first clear move would go, that move is no longer taken
        let area = crate::candidates::area_feature(0, &[(0.0, 0.0), (40.0, 0.0), (40.0, 10.0), (0.0, 10.0)], "park", 1.0, 2.0).unwrap();
        let probe = setup(vec![area.clone()]);
        let mut chosen = probe.sets[0].positions[0];
        chosen.label_box.center = Point::new(20.0, 5.0);
        let c = chosen.label_box.center;
        let road = line_feature(1, &[(c.x + 1.0, -5.0), (c.x + 1.0, 15.0)], "road", 0.5, 1.0).unwrap();
        let p = setup(vec![area, road]);
        let s = Scorer::new(&p.features, QualityWeights::default());
        let mut pl = best_placement(&p);
        pl.positions[0] = chosen;
        pl.positions[1].label_box = pl.positions[1].label_box.translate(Point::new(500.0, 0.0));
        let cfg = SlideConfig::default();
        let ctx = SlideContext { problem: &p, scorer: &s, cfg: &cfg };
        let conflicts = conflicts_of(&s, 0, &chosen.label_box);
        let free = slide_line_area_label(&ctx, 0, &conflicts, &pl).expect("a clear direction exists");
        assert_eq!(s.mu1(&free.0.label_box), 0.0);
        // park the road label where that move would go, clear of the current box
        let target = free.0.label_box;
        let far = target.corners().into_iter().max_by(|a, b| {
            a.distance(chosen.label_box.center).total_cmp(&b.distance(chosen.label_box.center))
        });
        let tip = far.unwrap().lerp(target.center, 0.05);
        pl.positions[1].label_box = LabelBox::new(tip, 0.3, 0.3, 0.0);
        assert!(!boxes_intersect(&chosen.label_box, &pl.positions[1].label_box));
        assert!(boxes_intersect(&target, &pl.positions[1].label_box));
        let blocked = slide_line_area_label(&ctx, 0, &conflicts, &pl);
        if let Some((pos, _, _)) = blocked {
            assert_ne!(pos.label_box, free.0.label_box);
            assert!(!boxes_intersect(&pos.label_box, &pl.positions[1].label_box));
        }
    }

    #[test]
    fn five_removable_conflicts() {
        let probe = setup(vec![point_feature(0, 0.0, 0.0, "town", 1.0, 2.0)]);
        let chosen = probe.sets[0].positions[0];
        let mut features = Vec::new();
        for k in 0..5 {
            let x0 = k as f64 * 100.0;
            features.push(point_feature(2 * k, x0, 0.0, "town", 1.0, 2.0));
            let cx = x0 + chosen.label_box.center.x;
            features.push(line_feature(2 * k + 1, &[(cx, -3.0), (cx, 6.0)], "r", 0.5, 1.0).unwrap());
        }
        let p = setup(features);
        let s = Scorer::new(&p.features, QualityWeights::default());
        let mut pl = best_placement(&p);
        for k in 0..5 {
            let i = 2 * k;
            pl.positions[i].label_box = chosen.label_box.translate(Point::new(k as f64 * 100.0, 0.0));
            pl.positions[i + 1].label_box = pl.positions[i + 1].label_box.translate(Point::new(0.0, 1000.0));
        }
        let lf_before = s.total_score(&pl).lf_conflict_count;
        let (out, report) = apply_sliding(&pl, &p, &s, &SlideConfig::default()).unwrap();
        assert_eq!(report.eliminated, 5);
        assert!(report.score_after < report.score_before);
        assert_eq!(s.total_score(&out).lf_conflict_count, lf_before - 5);
        let (again, second) = apply_sliding(&out, &p, &s, &SlideConfig::default()).unwrap();
        assert_eq!(second.eliminated + second.better, 0);
        assert_eq!(again, out);
    }

    #[test]
    fn strict_mode_skips_mixed_conflicts() {
        let probe = setup(vec![point_feature(0, 0.0, 0.0, "abcd", 1.0, 2.0)]);
        let first = probe.sets[0].positions[0];
        let c = first.label_box.center;
        let p = setup(vec![
            point_feature(0, 0.0, 0.0, "abcd", 1.0, 2.0),
            point_feature(1, c.x + 0.3, c.y, "x", 1.0, 2.0),
            line_feature(2, &[(c.x - 0.5, c.y - 10.0), (c.x - 0.5, c.y + 10.0)], "road", 1.0, 2.0).unwrap(),
        ]);
        let s = Scorer::new(&p.features, QualityWeights::default());
        let mut pl = best_placement(&p);
        pl.positions[0] = first;
        for q in pl.positions.iter_mut().skip(1) {
            q.label_box = q.label_box.translate(Point::new(0.0, 1000.0));
        }
        let cfg = SlideConfig { strict: true, ..Default::default() };
        let (out, report) = apply_sliding(&pl, &p, &s, &cfg).unwrap();
        assert_eq!(out.positions[0], first);
        assert_eq!(report.eliminated + report.better, 0);
    }
}
