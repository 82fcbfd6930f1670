//! 2D placement of structured scenes and the geometric truth conditions of
//! spatial relations.
//!
//! Coordinates follow image conventions: x grows rightward, y grows
//! downward. Depth projects onto the vertical axis, front meaning lower in
//! the image (larger y). All relations are strict inequalities with a pixel
//! margin, so yes/no judgments survive rasterization rounding:
//!
//! * `right_of`: `cx_s > cx_o + margin` (and `left_of` mirrored)
//! * `below`:    `cy_s > cy_o + margin` (and `above` mirrored)
//! * `in_front_of` = `below`, `behind` = `above`
//! * diagonal composites are conjunctions, e.g.
//!   `front_right_of` = `below` and `right_of`
//!
//! [`solve_layout`] realizes a scene on a canvas: topological levels per
//! axis, even coordinate spacing, then seeded jitter re-sampled until every
//! constraint verifies. The anchored object is pinned to the canvas center.

use crate::tuple::{validate, Relation, RelationTuple, StructuredInfo, TupleError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

const JITTER_ATTEMPTS: usize = 200;
const SCRAMBLE_ATTEMPTS: usize = 1000;

/// The drawing surface and the margin used by every relation judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
    pub margin: u32,
}

impl Canvas {
    pub fn new(width: u32, height: u32, margin: u32) -> Result<Canvas, LayoutError> {
        if width < 64 || height < 64 {
            return Err(LayoutError::InvalidCanvas(format!(
                "canvas {width}x{height} is smaller than 64x64"
            )));
        }
        let limit = width.min(height) / 4;
        if margin == 0 || margin >= limit {
            return Err(LayoutError::InvalidCanvas(format!(
                "margin {margin} must lie in 1..{limit}"
            )));
        }
        Ok(Canvas { width, height, margin })
    }

    /// Bounding-box side used for solved objects.
    pub fn object_size(&self) -> u32 {
        (self.width.min(self.height) / 8).max(8)
    }
}

/// One placed object: pixel center plus bounding-box side. The box occupies
/// columns `[cx - size/2, cx - size/2 + size)` and rows likewise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub object_id: u32,
    pub cx: i32,
    pub cy: i32,
    pub size: u32,
}

impl Placement {
    /// Inclusive pixel bounds (x0, y0, x1, y1).
    pub fn bbox(&self) -> (i32, i32, i32, i32) {
        let half = (self.size / 2) as i32;
        let x0 = self.cx - half;
        let y0 = self.cy - half;
        (x0, y0, x0 + self.size as i32 - 1, y0 + self.size as i32 - 1)
    }

    fn inside(&self, canvas: &Canvas) -> bool {
        let (x0, y0, x1, y1) = self.bbox();
        x0 >= 0 && y0 >= 0 && x1 < canvas.width as i32 && y1 < canvas.height as i32
    }
}

/// A solved scene: canvas, one placement per source object.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub canvas: Canvas,
    pub placements: Vec<Placement>,
    pub source: StructuredInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

/// A contradiction among relation tuples: a directed cycle in the ordering
/// constraints of one axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inconsistency {
    pub axis: Axis,
    pub cycle: Vec<u32>,
}

impl fmt::Display for Inconsistency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.cycle.iter().map(|id| id.to_string()).collect();
        write!(f, "{}-axis ordering cycle: {}", self.axis, path.join(" -> "))
    }
}

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("invalid canvas: {0}")]
    InvalidCanvas(String),
    #[error("object {0} has no placement")]
    UnplacedObject(u32),
    #[error("inconsistent relations: {0}")]
    InconsistentRelations(Inconsistency),
    #[error("unsatisfiable: {0}")]
    Unsatisfiable(String),
    #[error(transparent)]
    InvalidScene(#[from] TupleError),
    #[error("layout json: {0}")]
    Json(String),
}

/// Ordering constraints implied by one relation tuple, as
/// `(axis, lesser_id, greater_id)`: the lesser coordinate must lie more
/// than `margin` below the greater.
fn axis_orders(r: &RelationTuple) -> Vec<(Axis, u32, u32)> {
    let s = r.subject_id;
    let o = r.object_id;
    match r.relation {
        Relation::LeftOf => vec![(Axis::X, s, o)],
        Relation::RightOf => vec![(Axis::X, o, s)],
        Relation::Above => vec![(Axis::Y, s, o)],
        Relation::Below => vec![(Axis::Y, o, s)],
        Relation::InFrontOf => vec![(Axis::Y, o, s)],
        Relation::Behind => vec![(Axis::Y, s, o)],
        Relation::FrontLeftOf => vec![(Axis::Y, o, s), (Axis::X, s, o)],
        Relation::FrontRightOf => vec![(Axis::Y, o, s), (Axis::X, o, s)],
        Relation::BehindLeftOf => vec![(Axis::Y, s, o), (Axis::X, s, o)],
        Relation::BehindRightOf => vec![(Axis::Y, s, o), (Axis::X, o, s)],
    }
}

/// Evaluates one relation on raw center coordinates.
pub fn relation_holds_at(
    sx: f64,
    sy: f64,
    ox: f64,
    oy: f64,
    relation: Relation,
    margin: f64,
) -> bool {
    let right = sx > ox + margin;
    let left = sx < ox - margin;
    let lower = sy > oy + margin;
    let upper = sy < oy - margin;
    match relation {
        Relation::LeftOf => left,
        Relation::RightOf => right,
        Relation::Above => upper,
        Relation::Below => lower,
        Relation::InFrontOf => lower,
        Relation::Behind => upper,
        Relation::FrontLeftOf => lower && left,
        Relation::FrontRightOf => lower && right,
        Relation::BehindLeftOf => upper && left,
        Relation::BehindRightOf => upper && right,
    }
}

/// Evaluates one relation tuple over placements.
pub fn relation_holds(
    placements: &[Placement],
    r: &RelationTuple,
    margin: u32,
) -> Result<bool, LayoutError> {
    let find = |id: u32| {
        placements
            .iter()
            .find(|p| p.object_id == id)
            .ok_or(LayoutError::UnplacedObject(id))
    };
    let s = find(r.subject_id)?;
    let o = find(r.object_id)?;
    Ok(relation_holds_at(
        s.cx as f64,
        s.cy as f64,
        o.cx as f64,
        o.cy as f64,
        r.relation,
        margin as f64,
    ))
}

/// Detects contradictions: a directed cycle in either axis ordering graph.
pub fn check_consistency(relations: &[RelationTuple]) -> Result<(), Inconsistency> {
    for axis in [Axis::X, Axis::Y] {
        let mut edges: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for r in relations {
            for (a, lesser, greater) in axis_orders(r) {
                if a == axis {
                    edges.entry(lesser).or_default().push(greater);
                    edges.entry(greater).or_default();
                }
            }
        }
        if let Some(cycle) = find_cycle(&edges) {
            return Err(Inconsistency { axis, cycle });
        }
    }
    Ok(())
}

/// DFS cycle search; returns the node sequence of one cycle if any exists.
fn find_cycle(edges: &BTreeMap<u32, Vec<u32>>) -> Option<Vec<u32>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Gray,
        Black,
    }
    let mut marks: BTreeMap<u32, Mark> = edges.keys().map(|&k| (k, Mark::White)).collect();
    let mut path: Vec<u32> = Vec::new();

    fn visit(
        node: u32,
        edges: &BTreeMap<u32, Vec<u32>>,
        marks: &mut BTreeMap<u32, Mark>,
        path: &mut Vec<u32>,
    ) -> Option<Vec<u32>> {
        marks.insert(node, Mark::Gray);
        path.push(node);
        for &next in edges.get(&node).into_iter().flatten() {
            match marks.get(&next).copied().unwrap_or(Mark::White) {
                Mark::Gray => {
                    let start = path.iter().position(|&n| n == next).unwrap_or(0);
                    let mut cycle = path[start..].to_vec();
                    cycle.push(next);
                    return Some(cycle);
                }
                Mark::White => {
                    if let Some(cycle) = visit(next, edges, marks, path) {
                        return Some(cycle);
                    }
                }
                Mark::Black => {}
            }
        }
        path.pop();
        marks.insert(node, Mark::Black);
        None
    }

    let nodes: Vec<u32> = edges.keys().copied().collect();
    for node in nodes {
        if marks.get(&node) == Some(&Mark::White) {
            if let Some(cycle) = visit(node, edges, &mut marks, &mut path) {
                return Some(cycle);
            }
        }
    }
    None
}

/// Longest-path level per object id for one axis; unconstrained objects sit
/// at level 0. Returns (levels, level_count).
fn axis_levels(
    ids: &[u32],
    relations: &[RelationTuple],
    axis: Axis,
) -> (BTreeMap<u32, usize>, usize) {
    let mut preds: BTreeMap<u32, Vec<u32>> = ids.iter().map(|&id| (id, Vec::new())).collect();
    let mut succs: BTreeMap<u32, Vec<u32>> = ids.iter().map(|&id| (id, Vec::new())).collect();
    let mut indegree: BTreeMap<u32, usize> = ids.iter().map(|&id| (id, 0)).collect();
    for r in relations {
        for (a, lesser, greater) in axis_orders(r) {
            if a == axis {
                succs.entry(lesser).or_default().push(greater);
                preds.entry(greater).or_default().push(lesser);
                *indegree.entry(greater).or_default() += 1;
            }
        }
    }

    let mut levels: BTreeMap<u32, usize> = BTreeMap::new();
    let mut ready: Vec<u32> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&id, _)| id)
        .collect();
    while let Some(id) = ready.pop() {
        let level = preds[&id]
            .iter()
            .map(|p| levels[p] + 1)
            .max()
            .unwrap_or(0);
        levels.insert(id, level);
        for &next in &succs[&id] {
            let d = indegree.get_mut(&next).unwrap();
            *d -= 1;
            if *d == 0 {
                // Process in ascending id order for determinism.
                let pos = ready.binary_search(&next).unwrap_or_else(|p| p);
                ready.insert(pos, next);
            }
        }
    }
    let count = levels.values().max().map(|&m| m + 1).unwrap_or(1);
    (levels, count)
}

/// Per-axis base coordinates and jitter half-width.
struct AxisPlan {
    base: BTreeMap<u32, i32>,
    band: i32,
    lo: i32,
    hi: i32,
}

fn plan_axis(
    ids: &[u32],
    levels: &BTreeMap<u32, usize>,
    level_count: usize,
    axis_len: u32,
    size: u32,
    margin: u32,
    anchored: Option<u32>,
) -> Result<AxisPlan, LayoutError> {
    let half = (size / 2) as i32;
    let lo = half + 1;
    let hi = axis_len as i32 - half - 2;
    if hi <= lo {
        return Err(LayoutError::Unsatisfiable(format!(
            "axis of length {axis_len} cannot hold objects of size {size}"
        )));
    }
    let center = (axis_len / 2) as i32;
    let step_min = (margin + 2).max(size + 2) as i32;

    let mut level_pos: Vec<i32> = Vec::with_capacity(level_count);
    let band;
    match anchored {
        Some(anchor_id) => {
            let anchor_level = levels[&anchor_id] as i32;
            let left = anchor_level;
            let right = level_count as i32 - 1 - anchor_level;
            let mut step = i32::MAX;
            if left > 0 {
                step = step.min((center - lo) / left);
            }
            if right > 0 {
                step = step.min((hi - center) / right);
            }
            if step == i32::MAX {
                // Single level: everything shares the anchor's coordinate
                // before jitter.
                level_pos.push(center);
                band = (hi - lo) / 2;
            } else {
                if step < step_min {
                    return Err(LayoutError::Unsatisfiable(format!(
                        "axis of length {axis_len} cannot separate {level_count} levels by {step_min}"
                    )));
                }
                for k in 0..level_count as i32 {
                    level_pos.push(center + (k - anchor_level) * step);
                }
                band = (step - step_min) / 2;
            }
        }
        None => {
            if level_count == 1 {
                level_pos.push((lo + hi) / 2);
                band = (hi - lo) / 2;
            } else {
                let step = (hi - lo) / (level_count as i32 - 1);
                if step < step_min {
                    return Err(LayoutError::Unsatisfiable(format!(
                        "axis of length {axis_len} cannot separate {level_count} levels by {step_min}"
                    )));
                }
                for k in 0..level_count as i32 {
                    level_pos.push(lo + k * step);
                }
                band = (step - step_min) / 2;
            }
        }
    }

    let base = ids.iter().map(|&id| (id, level_pos[levels[&id]])).collect();
    Ok(AxisPlan { base, band: band.max(0), lo, hi })
}

/// True when every relation holds at the margin, every box is inside the
/// canvas, and all boxes are pairwise disjoint with at least one pixel gap.
fn placements_valid(
    placements: &[Placement],
    relations: &[RelationTuple],
    canvas: &Canvas,
) -> bool {
    if placements.iter().any(|p| !p.inside(canvas)) {
        return false;
    }
    for r in relations {
        match relation_holds(placements, r, canvas.margin) {
            Ok(true) => {}
            _ => return false,
        }
    }
    for (i, a) in placements.iter().enumerate() {
        for b in &placements[i + 1..] {
            let need = ((a.size + b.size) / 2 + 1) as i32;
            if (a.cx - b.cx).abs() < need && (a.cy - b.cy).abs() < need {
                return false;
            }
        }
    }
    true
}

/// Solves a scene into concrete placements. Deterministic per seed; the
/// anchored object lands exactly on the canvas center.
pub fn solve_layout(
    info: &StructuredInfo,
    canvas: &Canvas,
    seed: u64,
) -> Result<Layout, LayoutError> {
    let violations = validate(info);
    if !violations.is_empty() {
        return Err(LayoutError::InvalidScene(TupleError::Invalid(violations)));
    }
    check_consistency(&info.relations).map_err(LayoutError::InconsistentRelations)?;

    let size = canvas.object_size();
    let ids: Vec<u32> = info.objects.iter().map(|o| o.id).collect();
    let anchored = info.objects.iter().find(|o| o.anchor.is_some()).map(|o| o.id);

    let (x_levels, x_count) = axis_levels(&ids, &info.relations, Axis::X);
    let (y_levels, y_count) = axis_levels(&ids, &info.relations, Axis::Y);
    let x_plan = plan_axis(&ids, &x_levels, x_count, canvas.width, size, canvas.margin, anchored)?;
    let y_plan = plan_axis(&ids, &y_levels, y_count, canvas.height, size, canvas.margin, anchored)?;

    let mut sorted_ids = ids.clone();
    sorted_ids.sort_unstable();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for attempt in 0..JITTER_ATTEMPTS {
        let mut placements = Vec::with_capacity(sorted_ids.len());
        for &id in &sorted_ids {
            let jitter = |rng: &mut ChaCha12Rng, band: i32| -> i32 {
                if band > 0 && anchored != Some(id) {
                    rng.gen_range(-band..=band)
                } else {
                    0
                }
            };
            let dx = jitter(&mut rng, x_plan.band);
            let dy = jitter(&mut rng, y_plan.band);
            placements.push(Placement {
                object_id: id,
                cx: (x_plan.base[&id] + dx).clamp(x_plan.lo, x_plan.hi),
                cy: (y_plan.base[&id] + dy).clamp(y_plan.lo, y_plan.hi),
                size,
            });
        }
        if placements_valid(&placements, &info.relations, canvas) {
            return Ok(Layout { canvas: *canvas, placements, source: info.clone() });
        }
        if attempt > 0 && x_plan.band == 0 && y_plan.band == 0 {
            break;
        }
    }

    // Jitter failed; spread objects that share both level coordinates,
    // deterministically, and verify once.
    let mut groups: BTreeMap<(usize, usize), Vec<u32>> = BTreeMap::new();
    for &id in &sorted_ids {
        groups.entry((x_levels[&id], y_levels[&id])).or_default().push(id);
    }
    let spread_unit = (size + canvas.margin + 2) as i32;
    let mut placements = Vec::with_capacity(sorted_ids.len());
    for &id in &sorted_ids {
        let group = &groups[&(x_levels[&id], y_levels[&id])];
        let m = group.len() as i32;
        let idx = group.iter().position(|&g| g == id).unwrap() as i32;
        let offset = if anchored == Some(id) { 0 } else { (2 * idx + 1 - m) * spread_unit / 2 };
        placements.push(Placement {
            object_id: id,
            cx: (x_plan.base[&id] + offset).clamp(x_plan.lo, x_plan.hi),
            cy: y_plan.base[&id].clamp(y_plan.lo, y_plan.hi),
            size,
        });
    }
    if placements_valid(&placements, &info.relations, canvas) {
        return Ok(Layout { canvas: *canvas, placements, source: info.clone() });
    }
    Err(LayoutError::Unsatisfiable(
        "no placement satisfied all constraints within the attempt budget".into(),
    ))
}

/// Repositions every object uniformly at random, keeping sizes and the
/// object identity bindings, ignoring relations and anchors. Placements
/// stay in-canvas and pairwise disjoint.
pub fn scramble_layout(layout: &Layout, seed: u64) -> Result<Layout, LayoutError> {
    let canvas = layout.canvas;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sorted: Vec<&Placement> = layout.placements.iter().collect();
    sorted.sort_by_key(|p| p.object_id);

    for _ in 0..SCRAMBLE_ATTEMPTS {
        let mut placements = Vec::with_capacity(sorted.len());
        for p in &sorted {
            let half = (p.size / 2) as i32;
            let lo_x = half + 1;
            let hi_x = canvas.width as i32 - half - 2;
            let lo_y = half + 1;
            let hi_y = canvas.height as i32 - half - 2;
            placements.push(Placement {
                object_id: p.object_id,
                cx: rng.gen_range(lo_x..=hi_x),
                cy: rng.gen_range(lo_y..=hi_y),
                size: p.size,
            });
        }
        let disjoint = placements.iter().enumerate().all(|(i, a)| {
            placements[i + 1..].iter().all(|b| {
                let need = ((a.size + b.size) / 2 + 1) as i32;
                (a.cx - b.cx).abs() >= need || (a.cy - b.cy).abs() >= need
            })
        });
        if disjoint {
            return Ok(Layout { canvas, placements, source: layout.source.clone() });
        }
    }
    Err(LayoutError::Unsatisfiable(
        "could not place objects without overlap within the attempt budget".into(),
    ))
}

/// Wire form of a layout: `{"canvas": [w, h, margin],
/// "placements": [[id, cx, cy, size], ...]}`.
#[derive(Serialize, Deserialize)]
struct LayoutRecord {
    canvas: (u32, u32, u32),
    placements: Vec<(u32, i32, i32, u32)>,
}

impl Layout {
    pub fn to_json(&self) -> String {
        let record = LayoutRecord {
            canvas: (self.canvas.width, self.canvas.height, self.canvas.margin),
            placements: self
                .placements
                .iter()
                .map(|p| (p.object_id, p.cx, p.cy, p.size))
                .collect(),
        };
        serde_json::to_string(&record).expect("layout record serializes")
    }

    /// Rebuilds a layout from its JSON form plus the scene it places.
    pub fn from_json(text: &str, source: StructuredInfo) -> Result<Layout, LayoutError> {
        let record: LayoutRecord =
            serde_json::from_str(text).map_err(|e| LayoutError::Json(e.to_string()))?;
        let canvas = Canvas::new(record.canvas.0, record.canvas.1, record.canvas.2)?;
        let placements: Vec<Placement> = record
            .placements
            .iter()
            .map(|&(object_id, cx, cy, size)| Placement { object_id, cx, cy, size })
            .collect();
        for object in &source.objects {
            let count = placements.iter().filter(|p| p.object_id == object.id).count();
            if count != 1 {
                return Err(LayoutError::Json(format!(
                    "object {} has {count} placements, expected 1",
                    object.id
                )));
            }
        }
        if placements.len() != source.objects.len() {
            return Err(LayoutError::Json(format!(
                "{} placements for {} objects",
                placements.len(),
                source.objects.len()
            )));
        }
        for p in &placements {
            if p.size < 8 {
                return Err(LayoutError::Json(format!(
                    "placement of object {} has size {} < 8",
                    p.object_id, p.size
                )));
            }
            if !p.inside(&canvas) {
                return Err(LayoutError::Json(format!(
                    "placement of object {} leaves the canvas",
                    p.object_id
                )));
            }
        }
        Ok(Layout { canvas, placements, source })
    }
}
