//! Tuple-based structured prompts for spatial text-to-image pipelines.
//!
//! The crate turns spatial natural-language prompts into explicit
//! object/relation tuples and uses that representation end to end:
//!
//! * [`tuple`] — object tuples `(color, shape)`, relation tuples
//!   `(subject, relation, object)`, canonical serialization, validation,
//!   and prompt augmentation.
//! * [`parser`] — the deterministic converter from prompt text to tuples,
//!   including pronoun and definite-reference resolution.
//! * [`dataset`] — seeded synthesis of prompt/tuple pairs with a JSONL
//!   interchange format.
//! * [`layout`] — relation semantics over 2D placements, consistency
//!   checking, and a constraint solver acting as an ideal generator.
//! * [`render`] — exact rasterization of layouts into flat-color images and
//!   the binary PPM codec.
//! * [`judge`] — pixel-level scene detection and yes/no alignment queries
//!   with exact proportion accounting.
//! * [`metrics`] — cross-entropy, BLEU, ROUGE-L, Inception Score, and
//!   mean +/- std aggregation.
//! * [`pipeline`] — the multi-seed run wiring all stages together and
//!   writing every intermediate artifact.

pub mod dataset;
pub mod judge;
pub mod layout;
pub mod metrics;
pub mod parser;
pub mod pipeline;
pub mod render;
pub mod tuple;
