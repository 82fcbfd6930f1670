//! Seeded synthesis of prompt/tuple pairs plus their JSONL file format.
//!
//! Every sample is a two-object scene: clause one introduces an object
//! anchored at the center, clause two introduces a second object with one
//! relation back to the first, phrased with the pronoun `it`. The generator
//! records the ground-truth tuples at emission time, so each sample carries
//! its own parse oracle. Prompts are unique across the whole dataset.
//!
//! JSONL schema, one object per line:
//!
//! ```json
//! {"id": "train-0000", "split": "train", "prompt": "...",
//!  "objects": [[1, "purple", "cube", "center"], [2, "brown", "cube", null]],
//!  "relations": [[2, "front_right_of", 1]], "serialized": "Objects: ..."}
//! ```

use crate::tuple::{
    serialize, Anchor, Color, ObjectTuple, Prompt, Relation, RelationTuple, Shape, StructuredInfo,
    TupleError,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

/// Rejection-sampling budget: at most this many attempts per requested
/// sample before giving up.
const REJECTION_CAP_FACTOR: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Counts, seed, and vocabulary subsets for one generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub seed: u64,
    pub colors: Vec<Color>,
    pub shapes: Vec<Shape>,
    pub relations: Vec<Relation>,
}

impl DatasetConfig {
    pub fn new(train: usize, val: usize, test: usize, seed: u64) -> Self {
        DatasetConfig {
            train,
            val,
            test,
            seed,
            colors: Color::ALL.to_vec(),
            shapes: Shape::ALL.to_vec(),
            relations: Relation::ALL.to_vec(),
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    /// Number of distinct samples the vocabulary can produce. The two
    /// objects of a scene must differ in (color, shape) so that prompts can
    /// name each object unambiguously.
    pub fn combinatorial_space(&self) -> usize {
        let descriptions = self.colors.len() * self.shapes.len();
        descriptions * descriptions.saturating_sub(1) * self.relations.len()
    }

    fn check(&self) -> Result<(), DatasetError> {
        if self.train == 0 || self.val == 0 || self.test == 0 {
            return Err(DatasetError::InvalidConfig("split counts must be positive".into()));
        }
        if self.colors.is_empty() || self.shapes.is_empty() || self.relations.is_empty() {
            return Err(DatasetError::InvalidConfig("vocabulary subsets must be non-empty".into()));
        }
        if self.total() > self.combinatorial_space() {
            return Err(DatasetError::VocabularyExhausted {
                requested: self.total(),
                space: self.combinatorial_space(),
            });
        }
        Ok(())
    }
}

/// One prompt paired with its reference tuples and canonical serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub split: Split,
    pub prompt: Prompt,
    pub reference: StructuredInfo,
    pub serialized: String,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid dataset config: {0}")]
    InvalidConfig(String),
    #[error("vocabulary exhausted: {requested} distinct samples requested, space holds {space}")]
    VocabularyExhausted { requested: usize, space: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error(transparent)]
    Tuple(#[from] TupleError),
}

/// The surface phrase realizing a relation in clause two, with the pronoun
/// reference inline. Inverse of the parser's phrase tables.
fn relation_clause(relation: Relation) -> &'static str {
    match relation {
        Relation::LeftOf => "on the left of it",
        Relation::RightOf => "on the right of it",
        Relation::Above => "above it",
        Relation::Below => "below it",
        Relation::InFrontOf => "in front of it",
        Relation::Behind => "behind it",
        Relation::FrontLeftOf => "in front of it on the left",
        Relation::FrontRightOf => "in front of it on the right",
        Relation::BehindLeftOf => "behind it on the left",
        Relation::BehindRightOf => "behind it on the right",
    }
}

/// Renders the prompt text for one drawn scene.
fn realize_prompt(
    first: (Color, Shape),
    second: (Color, Shape),
    relation: Relation,
) -> String {
    format!(
        "Add a {} {} at the center. Add a {} {} {}.",
        first.0,
        first.1,
        second.0,
        second.1,
        relation_clause(relation)
    )
}

/// Generates the requested dataset. Deterministic given the config: the RNG
/// stream is consumed in split order train, val, test, drawing the fields
/// color, shape, color, shape, relation for each sample. Draws that collide
/// with an already-used prompt (or repeat the first object's description)
/// are rejected and redrawn, up to a fixed budget.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<Vec<Sample>, DatasetError> {
    cfg.check()?;

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.total());
    let mut used_prompts: std::collections::HashSet<String> =
        std::collections::HashSet::with_capacity(cfg.total());
    let budget = cfg.total().saturating_mul(REJECTION_CAP_FACTOR);
    let mut attempts = 0usize;

    for (split, count) in [
        (Split::Train, cfg.train),
        (Split::Val, cfg.val),
        (Split::Test, cfg.test),
    ] {
        let mut emitted = 0usize;
        while emitted < count {
            attempts += 1;
            if attempts > budget {
                return Err(DatasetError::VocabularyExhausted {
                    requested: cfg.total(),
                    space: cfg.combinatorial_space(),
                });
            }

            let c1 = *cfg.colors.choose(&mut rng).unwrap();
            let s1 = *cfg.shapes.choose(&mut rng).unwrap();
            let c2 = *cfg.colors.choose(&mut rng).unwrap();
            let s2 = *cfg.shapes.choose(&mut rng).unwrap();
            let relation = *cfg.relations.choose(&mut rng).unwrap();

            if (c1, s1) == (c2, s2) {
                continue;
            }
            let prompt_text = realize_prompt((c1, s1), (c2, s2), relation);
            if !used_prompts.insert(prompt_text.clone()) {
                continue;
            }

            let reference = StructuredInfo::new(
                vec![
                    ObjectTuple::anchored(1, c1, s1, Anchor::Center),
                    ObjectTuple::new(2, c2, s2),
                ],
                vec![RelationTuple::new(2, relation, 1)],
            );
            let serialized = serialize(&reference)?;
            samples.push(Sample {
                id: format!("{split}-{emitted:04}"),
                split,
                prompt: Prompt::new(&prompt_text)?,
                reference,
                serialized,
            });
            emitted += 1;
        }
    }

    Ok(samples)
}

/// On-disk row shape; field order is the JSONL schema.
#[derive(Serialize, Deserialize)]
struct SampleRecord {
    id: String,
    split: Split,
    prompt: String,
    objects: Vec<(u32, Color, Shape, Option<Anchor>)>,
    relations: Vec<(u32, Relation, u32)>,
    serialized: String,
}

impl From<&Sample> for SampleRecord {
    fn from(s: &Sample) -> Self {
        SampleRecord {
            id: s.id.clone(),
            split: s.split,
            prompt: s.prompt.text().to_string(),
            objects: s
                .reference
                .objects
                .iter()
                .map(|o| (o.id, o.color, o.shape, o.anchor))
                .collect(),
            relations: s
                .reference
                .relations
                .iter()
                .map(|r| (r.subject_id, r.relation, r.object_id))
                .collect(),
            serialized: s.serialized.clone(),
        }
    }
}

impl SampleRecord {
    fn into_sample(self, line: usize) -> Result<Sample, DatasetError> {
        let schema_err = |message: String| DatasetError::Schema { line, message };

        let reference = StructuredInfo::new(
            self.objects
                .iter()
                .map(|&(id, color, shape, anchor)| ObjectTuple { id, color, shape, anchor })
                .collect(),
            self.relations
                .iter()
                .map(|&(subject_id, relation, object_id)| RelationTuple {
                    subject_id,
                    relation,
                    object_id,
                })
                .collect(),
        );
        let violations = crate::tuple::validate(&reference);
        if let Some(v) = violations.first() {
            return Err(schema_err(v.to_string()));
        }
        let canonical = serialize(&reference).map_err(|e| schema_err(e.to_string()))?;
        if canonical != self.serialized {
            return Err(schema_err(format!(
                "serialized field does not match tuples: expected {canonical:?}"
            )));
        }
        let prompt = Prompt::new(&self.prompt).map_err(|e| schema_err(e.to_string()))?;
        Ok(Sample { id: self.id, split: self.split, prompt, reference, serialized: self.serialized })
    }
}

/// Writes samples as JSONL. Byte output is deterministic for equal input.
pub fn write_jsonl(samples: &[Sample], path: &Path) -> Result<(), DatasetError> {
    let mut out = BufWriter::new(File::create(path)?);
    for sample in samples {
        let record = SampleRecord::from(sample);
        serde_json::to_writer(&mut out, &record)
            .map_err(|e| DatasetError::Schema { line: 0, message: e.to_string() })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSONL dataset, validating each line's tuples and serialization.
/// Line numbers in errors are 1-based.
pub fn read_jsonl(path: &Path) -> Result<Vec<Sample>, DatasetError> {
    let reader = BufReader::new(File::open(path)?);
    let mut samples = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord = serde_json::from_str(&line)
            .map_err(|e| DatasetError::Schema { line: line_no, message: e.to_string() })?;
        samples.push(record.into_sample(line_no)?);
    }
    Ok(samples)
}
