//! Geometric alignment judge: recovers colored shapes from rendered pixels
//! and answers yes/no queries about spatial relations, colors, and shapes.
//!
//! Queries name objects the way prompts do, by `(color, shape)` description.
//! A query whose described object is missing, or matched by more than one
//! detection, is undecidable; undecidable scores as "no" in proportions,
//! since such an image cannot support a "yes".

use crate::layout::relation_holds_at;
use crate::metrics::{aggregate_seeds, MetricValue, MetricsError};
use crate::render::{Palette, RasterImage};
use crate::tuple::{Color, Relation, Shape, StructuredInfo};
use serde::Serialize;
use thiserror::Error;

/// Bounding-box fill-ratio thresholds separating the three shapes. A full
/// square has ratio 1, a circle pi/4 (~0.785), a triangle ~0.5.
const CUBE_MIN_FILL: f64 = 0.95;
const SPHERE_MIN_FILL: f64 = 0.68;

/// One connected foreground component, classified. `cx`/`cy` is the
/// bounding-box center in pixel-center coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectedObject {
    pub color: Color,
    pub shape: Shape,
    pub cx: f64,
    pub cy: f64,
    pub bbox: (u32, u32, u32, u32),
    pub pixel_count: usize,
}

impl DetectedObject {
    pub fn fill_ratio(&self) -> f64 {
        let (x0, y0, x1, y1) = self.bbox;
        let area = ((x1 - x0 + 1) as f64) * ((y1 - y0 + 1) as f64);
        self.pixel_count as f64 / area
    }
}

/// How prompts name an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectDescription {
    pub color: Color,
    pub shape: Shape,
}

/// A yes/no question about one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Spatial { subject: ObjectDescription, relation: Relation, object: ObjectDescription },
    Color { object: ObjectDescription, expected: Color },
    Shape { object: ObjectDescription, expected: Shape },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    Undecidable,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JudgeError {
    #[error("pixel ({x},{y}) has non-palette color {rgb:?}")]
    UnknownColor { x: u32, y: u32, rgb: [u8; 3] },
    #[error("image contains no foreground objects")]
    EmptyScene,
    #[error("count mismatch: {left} references vs {right} images")]
    CountMismatch { left: usize, right: usize },
    #[error("runs disagree on sample count")]
    RunSizeMismatch,
}

/// Finds every 4-connected foreground component and classifies it by color
/// (exact palette lookup) and shape (bounding-box fill ratio). Components
/// are returned in scan order.
pub fn detect_scene(
    img: &RasterImage,
    palette: &Palette,
) -> Result<Vec<DetectedObject>, JudgeError> {
    let (w, h) = (img.width as usize, img.height as usize);
    let background = palette.background();
    let mut visited = vec![false; w * h];
    let mut objects = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();

    for start_y in 0..h {
        for start_x in 0..w {
            let idx = start_y * w + start_x;
            if visited[idx] {
                continue;
            }
            let rgb = img.pixel(start_x as u32, start_y as u32);
            if rgb == background {
                visited[idx] = true;
                continue;
            }
            let color = palette.color_of(rgb).ok_or(JudgeError::UnknownColor {
                x: start_x as u32,
                y: start_y as u32,
                rgb,
            })?;

            let (mut min_x, mut max_x) = (start_x, start_x);
            let (mut min_y, mut max_y) = (start_y, start_y);
            let mut pixel_count = 0usize;
            visited[idx] = true;
            stack.push((start_x, start_y));
            while let Some((x, y)) = stack.pop() {
                pixel_count += 1;
                min_x = min_x.min(x);
                max_x = max_x.max(x);
                min_y = min_y.min(y);
                max_y = max_y.max(y);
                let mut neighbors = [(0usize, 0usize); 4];
                let mut n = 0;
                if x > 0 {
                    neighbors[n] = (x - 1, y);
                    n += 1;
                }
                if x + 1 < w {
                    neighbors[n] = (x + 1, y);
                    n += 1;
                }
                if y > 0 {
                    neighbors[n] = (x, y - 1);
                    n += 1;
                }
                if y + 1 < h {
                    neighbors[n] = (x, y + 1);
                    n += 1;
                }
                for &(nx, ny) in &neighbors[..n] {
                    let nidx = ny * w + nx;
                    if !visited[nidx] && img.pixel(nx as u32, ny as u32) == rgb {
                        visited[nidx] = true;
                        stack.push((nx, ny));
                    }
                }
            }

            let bbox = (min_x as u32, min_y as u32, max_x as u32, max_y as u32);
            let area = ((max_x - min_x + 1) * (max_y - min_y + 1)) as f64;
            let ratio = pixel_count as f64 / area;
            let shape = if ratio >= CUBE_MIN_FILL {
                Shape::Cube
            } else if ratio >= SPHERE_MIN_FILL {
                Shape::Sphere
            } else {
                Shape::Triangle
            };
            objects.push(DetectedObject {
                color,
                shape,
                cx: (min_x + max_x + 1) as f64 / 2.0,
                cy: (min_y + max_y + 1) as f64 / 2.0,
                bbox,
                pixel_count,
            });
        }
    }

    if objects.is_empty() {
        return Err(JudgeError::EmptyScene);
    }
    Ok(objects)
}

fn resolve<'a>(
    scene: &'a [DetectedObject],
    desc: ObjectDescription,
) -> Option<&'a DetectedObject> {
    let mut found = None;
    for obj in scene {
        if obj.color == desc.color && obj.shape == desc.shape {
            if found.is_some() {
                return None;
            }
            found = Some(obj);
        }
    }
    found
}

/// Answers one query against a detected scene.
pub fn answer_query(scene: &[DetectedObject], query: &Query, margin: u32) -> Answer {
    let yes_no = |b: bool| if b { Answer::Yes } else { Answer::No };
    match query {
        Query::Spatial { subject, relation, object } => {
            let (Some(s), Some(o)) = (resolve(scene, *subject), resolve(scene, *object)) else {
                return Answer::Undecidable;
            };
            yes_no(relation_holds_at(s.cx, s.cy, o.cx, o.cy, *relation, margin as f64))
        }
        Query::Color { object, expected } => match resolve(scene, *object) {
            Some(found) => yes_no(found.color == *expected),
            None => Answer::Undecidable,
        },
        Query::Shape { object, expected } => match resolve(scene, *object) {
            Some(found) => yes_no(found.shape == *expected),
            None => Answer::Undecidable,
        },
    }
}

/// The queries one reference scene generates: one spatial query per relation
/// tuple, one color and one shape query per object.
pub fn queries_for_scene(info: &StructuredInfo) -> Vec<Query> {
    let describe = |id: u32| {
        let object = info.object(id).expect("relation ids resolve in valid scenes");
        ObjectDescription { color: object.color, shape: object.shape }
    };
    let mut queries = Vec::new();
    for r in &info.relations {
        queries.push(Query::Spatial {
            subject: describe(r.subject_id),
            relation: r.relation,
            object: describe(r.object_id),
        });
    }
    for o in &info.objects {
        let desc = ObjectDescription { color: o.color, shape: o.shape };
        queries.push(Query::Color { object: desc, expected: o.color });
        queries.push(Query::Shape { object: desc, expected: o.shape });
    }
    queries
}

/// Exact yes-counts for one evaluation run. Proportions are integer ratios,
/// so aggregation order cannot change them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Proportion {
    pub yes: u64,
    pub total: u64,
}

impl Proportion {
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.yes as f64 / self.total as f64
        }
    }

    fn add(&mut self, answer: Answer) {
        self.total += 1;
        if answer == Answer::Yes {
            self.yes += 1;
        }
    }
}

/// Alignment proportions of a single run (one seed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentRun {
    pub spatial: Proportion,
    pub color: Proportion,
    pub shape: Proportion,
    pub n: usize,
}

/// Alignment proportions aggregated over seeds, in mean +/- std form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub spatial: MetricValue,
    pub color: MetricValue,
    pub shape: MetricValue,
    pub n: usize,
}

/// Judges one image per reference scene and accumulates exact proportions.
pub fn evaluate_alignment(
    references: &[&StructuredInfo],
    images: &[RasterImage],
    palette: &Palette,
    margin: u32,
) -> Result<AlignmentRun, JudgeError> {
    if references.len() != images.len() {
        return Err(JudgeError::CountMismatch { left: references.len(), right: images.len() });
    }
    let mut spatial = Proportion::default();
    let mut color = Proportion::default();
    let mut shape = Proportion::default();
    for (info, img) in references.iter().zip(images) {
        let scene = match detect_scene(img, palette) {
            Ok(scene) => scene,
            Err(JudgeError::EmptyScene) => Vec::new(),
            Err(e) => return Err(e),
        };
        for query in queries_for_scene(info) {
            let answer = answer_query(&scene, &query, margin);
            match query {
                Query::Spatial { .. } => spatial.add(answer),
                Query::Color { .. } => color.add(answer),
                Query::Shape { .. } => shape.add(answer),
            }
        }
    }
    Ok(AlignmentRun { spatial, color, shape, n: references.len() })
}

/// Aggregates per-seed runs into mean +/- std reports.
pub fn aggregate_alignment(runs: &[AlignmentRun]) -> Result<AlignmentReport, MetricsError> {
    if runs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let collect = |f: fn(&AlignmentRun) -> Proportion| -> Vec<f64> {
        runs.iter().map(|r| f(r).value()).collect()
    };
    Ok(AlignmentReport {
        spatial: aggregate_seeds(&collect(|r| r.spatial))?,
        color: aggregate_seeds(&collect(|r| r.color))?,
        shape: aggregate_seeds(&collect(|r| r.shape))?,
        n: runs[0].n,
    })
}
