//! Tuple-based scene representation: object tuples `(color, shape)` and
//! spatial relation tuples `(subjectID, relation, objectID)`, together with
//! their canonical text serialization and prompt augmentation.
//!
//! The canonical serialization is a single ASCII line:
//!
//! ```text
//! Objects: [1: (purple, cube, center)], [2: (brown, cube)]. Relations: [(2, front right of, 1)].
//! ```
//!
//! Object entries are `[<id>: (<color>, <shape>[, center])]` joined by `, `;
//! relation entries are `(<subject>, <relation words>, <object>)` inside one
//! bracket pair, with relation tokens rendered as space-separated words
//! (`front_right_of` becomes `front right of`). An empty relation list
//! renders as `Relations: [].`. [`serialize`] and [`parse_serialized`] are
//! exact inverses over valid values.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Closed color vocabulary. Input is case-insensitive; output is lowercase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    Purple,
    Brown,
    Gray,
    Cyan,
}

impl Color {
    pub const ALL: [Color; 8] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Yellow,
        Color::Purple,
        Color::Brown,
        Color::Gray,
        Color::Cyan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
            Color::Purple => "purple",
            Color::Brown => "brown",
            Color::Gray => "gray",
            Color::Cyan => "cyan",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Color {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Color::ALL
            .into_iter()
            .find(|c| c.name() == lower)
            .ok_or_else(|| UnknownToken::new("color", s))
    }
}

/// Closed shape vocabulary. The 2D projection is fixed: a cube renders as a
/// square, a sphere as a circle, a triangle as an isoceles triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Cube,
    Sphere,
    Triangle,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Cube, Shape::Sphere, Shape::Triangle];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Sphere => "sphere",
            Shape::Triangle => "triangle",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Shape {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Shape::ALL
            .into_iter()
            .find(|c| c.name() == lower)
            .ok_or_else(|| UnknownToken::new("shape", s))
    }
}

/// Unary placement anchor. Only `center` exists; it models "at the center"
/// phrases without widening relation tuples beyond binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    Center,
}

impl Anchor {
    pub fn name(self) -> &'static str {
        match self {
            Anchor::Center => "center",
        }
    }
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Anchor {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("center") {
            Ok(Anchor::Center)
        } else {
            Err(UnknownToken::new("anchor", s))
        }
    }
}

/// Closed spatial relation vocabulary. Every relation has an inverse and the
/// inverse map is an involution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    LeftOf,
    RightOf,
    Above,
    Below,
    InFrontOf,
    Behind,
    FrontLeftOf,
    FrontRightOf,
    BehindLeftOf,
    BehindRightOf,
}

impl Relation {
    pub const ALL: [Relation; 10] = [
        Relation::LeftOf,
        Relation::RightOf,
        Relation::Above,
        Relation::Below,
        Relation::InFrontOf,
        Relation::Behind,
        Relation::FrontLeftOf,
        Relation::FrontRightOf,
        Relation::BehindLeftOf,
        Relation::BehindRightOf,
    ];

    /// Underscore token, e.g. `front_right_of`.
    pub fn token(self) -> &'static str {
        match self {
            Relation::LeftOf => "left_of",
            Relation::RightOf => "right_of",
            Relation::Above => "above",
            Relation::Below => "below",
            Relation::InFrontOf => "in_front_of",
            Relation::Behind => "behind",
            Relation::FrontLeftOf => "front_left_of",
            Relation::FrontRightOf => "front_right_of",
            Relation::BehindLeftOf => "behind_left_of",
            Relation::BehindRightOf => "behind_right_of",
        }
    }

    /// Space-separated words used in the canonical serialization,
    /// e.g. `front right of`.
    pub fn words(self) -> &'static str {
        match self {
            Relation::LeftOf => "left of",
            Relation::RightOf => "right of",
            Relation::Above => "above",
            Relation::Below => "below",
            Relation::InFrontOf => "in front of",
            Relation::Behind => "behind",
            Relation::FrontLeftOf => "front left of",
            Relation::FrontRightOf => "front right of",
            Relation::BehindLeftOf => "behind left of",
            Relation::BehindRightOf => "behind right of",
        }
    }

    pub fn inverse(self) -> Relation {
        match self {
            Relation::LeftOf => Relation::RightOf,
            Relation::RightOf => Relation::LeftOf,
            Relation::Above => Relation::Below,
            Relation::Below => Relation::Above,
            Relation::InFrontOf => Relation::Behind,
            Relation::Behind => Relation::InFrontOf,
            Relation::FrontLeftOf => Relation::BehindRightOf,
            Relation::FrontRightOf => Relation::BehindLeftOf,
            Relation::BehindLeftOf => Relation::FrontRightOf,
            Relation::BehindRightOf => Relation::FrontLeftOf,
        }
    }

    fn from_words(words: &str) -> Option<Relation> {
        Relation::ALL.into_iter().find(|r| r.words() == words)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl std::str::FromStr for Relation {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Relation::ALL
            .into_iter()
            .find(|r| r.token() == lower)
            .ok_or_else(|| UnknownToken::new("relation", s))
    }
}

/// A token outside one of the closed vocabularies.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} token: {token:?}")]
pub struct UnknownToken {
    pub kind: &'static str,
    pub token: String,
}

impl UnknownToken {
    fn new(kind: &'static str, token: &str) -> Self {
        UnknownToken { kind, token: token.to_string() }
    }
}

/// One object in a scene: 1-based id in order of mention, color, shape, and
/// an optional placement anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ObjectTuple {
    pub id: u32,
    pub color: Color,
    pub shape: Shape,
    pub anchor: Option<Anchor>,
}

impl ObjectTuple {
    pub fn new(id: u32, color: Color, shape: Shape) -> Self {
        ObjectTuple { id, color, shape, anchor: None }
    }

    pub fn anchored(id: u32, color: Color, shape: Shape, anchor: Anchor) -> Self {
        ObjectTuple { id, color, shape, anchor: Some(anchor) }
    }
}

/// One spatial relation: subject `relation` object, both ends referencing
/// object ids of the same scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RelationTuple {
    pub subject_id: u32,
    pub relation: Relation,
    pub object_id: u32,
}

impl RelationTuple {
    pub fn new(subject_id: u32, relation: Relation, object_id: u32) -> Self {
        RelationTuple { subject_id, relation, object_id }
    }

    /// The same geometric constraint stated from the other side:
    /// `(s, r, o)` becomes `(o, inverse(r), s)`.
    pub fn inverted(self) -> RelationTuple {
        RelationTuple {
            subject_id: self.object_id,
            relation: self.relation.inverse(),
            object_id: self.subject_id,
        }
    }
}

/// Structured information for one scene: ordered object tuples plus ordered
/// relation tuples.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StructuredInfo {
    pub objects: Vec<ObjectTuple>,
    pub relations: Vec<RelationTuple>,
}

impl StructuredInfo {
    pub fn new(objects: Vec<ObjectTuple>, relations: Vec<RelationTuple>) -> Self {
        StructuredInfo { objects, relations }
    }

    pub fn object(&self, id: u32) -> Option<&ObjectTuple> {
        self.objects.iter().find(|o| o.id == id)
    }
}

/// A plain natural-language prompt: non-empty, whitespace-trimmed text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prompt {
    text: String,
}

impl Prompt {
    pub fn new(text: &str) -> Result<Prompt, TupleError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(TupleError::EmptyPrompt);
        }
        Ok(Prompt { text: trimmed.to_string() })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Separator inserted between the plain prompt and the serialized tuples.
pub const AUGMENT_SEPARATOR: &str = "\nStructured information: ";

/// A plain prompt concatenated with its serialized structured information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedPrompt {
    pub plain: Prompt,
    pub structured_text: String,
    pub combined: String,
}

/// A violated well-formedness rule found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyObjects,
    DuplicateObjectId(u32),
    /// Ids must form the contiguous range `1..=n`.
    NonContiguousIds(Vec<u32>),
    MultipleAnchors,
    SelfRelation(u32),
    DanglingId { relation_index: usize, id: u32 },
    DuplicateRelation(RelationTuple),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyObjects => write!(f, "objects list is empty"),
            Violation::DuplicateObjectId(id) => write!(f, "duplicate object id {id}"),
            Violation::NonContiguousIds(ids) => {
                write!(f, "object ids {ids:?} do not form a contiguous 1..n range")
            }
            Violation::MultipleAnchors => write!(f, "more than one object is anchored"),
            Violation::SelfRelation(id) => write!(f, "relation from object {id} to itself"),
            Violation::DanglingId { relation_index, id } => {
                write!(f, "relation {relation_index} references missing object id {id}")
            }
            Violation::DuplicateRelation(r) => write!(
                f,
                "duplicate relation ({}, {}, {})",
                r.subject_id, r.relation, r.object_id
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TupleError {
    #[error("invalid structured info: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("serialization syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("prompt text is empty")]
    EmptyPrompt,
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Checks every well-formedness rule and returns all violations found.
/// An empty list means the value is valid.
pub fn validate(info: &StructuredInfo) -> Vec<Violation> {
    let mut violations = Vec::new();

    if info.objects.is_empty() {
        violations.push(Violation::EmptyObjects);
    }

    let mut ids: Vec<u32> = Vec::with_capacity(info.objects.len());
    for obj in &info.objects {
        if ids.contains(&obj.id) {
            violations.push(Violation::DuplicateObjectId(obj.id));
        }
        ids.push(obj.id);
    }

    if !info.objects.is_empty() {
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        let contiguous = sorted.len() == ids.len()
            && sorted.first() == Some(&1)
            && *sorted.last().unwrap() == ids.len() as u32;
        if !contiguous {
            violations.push(Violation::NonContiguousIds(ids.clone()));
        }
    }

    if info.objects.iter().filter(|o| o.anchor.is_some()).count() > 1 {
        violations.push(Violation::MultipleAnchors);
    }

    let mut seen = Vec::with_capacity(info.relations.len());
    for (index, rel) in info.relations.iter().enumerate() {
        if rel.subject_id == rel.object_id {
            violations.push(Violation::SelfRelation(rel.subject_id));
        }
        for id in [rel.subject_id, rel.object_id] {
            if !ids.contains(&id) {
                violations.push(Violation::DanglingId { relation_index: index, id });
            }
        }
        if seen.contains(rel) {
            violations.push(Violation::DuplicateRelation(*rel));
        }
        seen.push(*rel);
    }

    violations
}

fn require_valid(info: &StructuredInfo) -> Result<(), TupleError> {
    let violations = validate(info);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(TupleError::Invalid(violations))
    }
}

/// Serializes structured information into the canonical single-line text.
/// Equal inputs yield byte-identical output.
pub fn serialize(info: &StructuredInfo) -> Result<String, TupleError> {
    require_valid(info)?;

    let mut out = String::from("Objects: ");
    for (i, obj) in info.objects.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('[');
        out.push_str(&obj.id.to_string());
        out.push_str(": (");
        out.push_str(obj.color.name());
        out.push_str(", ");
        out.push_str(obj.shape.name());
        if let Some(anchor) = obj.anchor {
            out.push_str(", ");
            out.push_str(anchor.name());
        }
        out.push_str(")]");
    }
    out.push_str(". Relations: [");
    for (i, rel) in info.relations.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('(');
        out.push_str(&rel.subject_id.to_string());
        out.push_str(", ");
        out.push_str(rel.relation.words());
        out.push_str(", ");
        out.push_str(&rel.object_id.to_string());
        out.push(')');
    }
    out.push_str("].");
    Ok(out)
}

/// Cursor over the canonical serialization text. Errors carry the byte
/// offset where matching failed.
struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> TupleError {
        TupleError::Syntax { offset: self.pos, message: message.into() }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn peek_is(&self, literal: &str) -> bool {
        self.rest().starts_with(literal)
    }

    fn expect(&mut self, literal: &str) -> Result<(), TupleError> {
        if self.peek_is(literal) {
            self.pos += literal.len();
            Ok(())
        } else {
            Err(self.error(format!("expected {literal:?}")))
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|(_, c)| !pred(*c))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        self.pos += end;
        &self.text[start..self.pos]
    }

    fn parse_id(&mut self) -> Result<(u32, usize), TupleError> {
        let offset = self.pos;
        let digits = self.take_while(|c| c.is_ascii_digit());
        if digits.is_empty() {
            self.pos = offset;
            return Err(self.error("expected object id"));
        }
        let id: u32 = digits
            .parse()
            .map_err(|_| TupleError::Syntax { offset, message: format!("id {digits:?} out of range") })?;
        if id == 0 {
            return Err(TupleError::Syntax { offset, message: "object ids are 1-based".into() });
        }
        Ok((id, offset))
    }

    fn parse_word(&mut self) -> (&'a str, usize) {
        let offset = self.pos;
        let word = self.take_while(|c| c.is_ascii_alphabetic() || c == '_');
        (word, offset)
    }

    fn at_end(&self) -> bool {
        self.pos == self.text.len()
    }
}

/// Parses the canonical serialization back into structured information.
/// Inverse of [`serialize`]: `parse_serialized(serialize(x)) == x`.
pub fn parse_serialized(text: &str) -> Result<StructuredInfo, TupleError> {
    let mut cur = Cursor::new(text);
    cur.expect("Objects: ")?;

    let mut objects = Vec::new();
    let mut relations = Vec::new();
    let mut id_offsets: Vec<(u32, usize)> = Vec::new();

    loop {
        cur.expect("[")?;
        let (id, id_offset) = cur.parse_id()?;
        cur.expect(": (")?;
        let (color_word, color_offset) = cur.parse_word();
        let color: Color = color_word.parse().map_err(|e: UnknownToken| TupleError::Syntax {
            offset: color_offset,
            message: e.to_string(),
        })?;
        cur.expect(", ")?;
        let (shape_word, shape_offset) = cur.parse_word();
        let shape: Shape = shape_word.parse().map_err(|e: UnknownToken| TupleError::Syntax {
            offset: shape_offset,
            message: e.to_string(),
        })?;
        let anchor = if cur.peek_is(", ") && !cur.peek_is(", [") {
            cur.expect(", ")?;
            let (anchor_word, anchor_offset) = cur.parse_word();
            let anchor: Anchor =
                anchor_word.parse().map_err(|e: UnknownToken| TupleError::Syntax {
                    offset: anchor_offset,
                    message: e.to_string(),
                })?;
            Some(anchor)
        } else {
            None
        };
        cur.expect(")]")?;
        objects.push(ObjectTuple { id, color, shape, anchor });
        id_offsets.push((id, id_offset));

        if cur.peek_is(", ") {
            cur.expect(", ")?;
        } else {
            break;
        }
    }

    cur.expect(". Relations: [")?;
    if !cur.peek_is("]") {
        loop {
            cur.expect("(")?;
            let (subject_id, subject_offset) = cur.parse_id()?;
            cur.expect(", ")?;
            let words_start = cur.pos;
            let words = cur.take_while(|c| c.is_ascii_alphabetic() || c == ' ');
            // The relation field ends just before ", <oid>"; give back the
            // trailing " " consumed by the word scan.
            let words = words.trim_end();
            cur.pos = words_start + words.len();
            let relation = Relation::from_words(words).ok_or(TupleError::Syntax {
                offset: words_start,
                message: format!("unknown relation phrase {words:?}"),
            })?;
            cur.expect(", ")?;
            let (object_id, object_offset) = cur.parse_id()?;
            cur.expect(")")?;
            relations.push(RelationTuple { subject_id, relation, object_id });
            id_offsets.push((subject_id, subject_offset));
            id_offsets.push((object_id, object_offset));

            if cur.peek_is(", ") {
                cur.expect(", ")?;
            } else {
                break;
            }
        }
    }
    cur.expect("].")?;
    if !cur.at_end() {
        return Err(cur.error("trailing content after serialization"));
    }

    let info = StructuredInfo { objects, relations };
    let violations = validate(&info);
    if let Some(v) = violations.first() {
        // Point the offset at the offending id token where one exists.
        let offset = match v {
            Violation::DanglingId { id, .. } | Violation::SelfRelation(id) => id_offsets
                .iter()
                .rev()
                .find(|(seen, _)| seen == id)
                .map(|(_, off)| *off)
                .unwrap_or(0),
            _ => 0,
        };
        return Err(TupleError::Syntax { offset, message: v.to_string() });
    }
    Ok(info)
}

/// Concatenates a plain prompt with the canonical serialization of its
/// structured information. The plain text is left unmodified.
pub fn augment(plain: &Prompt, info: &StructuredInfo) -> Result<AugmentedPrompt, TupleError> {
    let structured_text = serialize(info)?;
    let combined = format!("{}{}{}", plain.text(), AUGMENT_SEPARATOR, structured_text);
    Ok(AugmentedPrompt { plain: plain.clone(), structured_text, combined })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cube_scene() -> StructuredInfo {
        StructuredInfo::new(
            vec![
                ObjectTuple::anchored(1, Color::Purple, Shape::Cube, Anchor::Center),
                ObjectTuple::new(2, Color::Brown, Shape::Cube),
            ],
            vec![RelationTuple::new(2, Relation::FrontRightOf, 1)],
        )
    }

    #[test]
    fn serialize_two_cube_scene() {
        assert_eq!(
            serialize(&two_cube_scene()).unwrap(),
            "Objects: [1: (purple, cube, center)], [2: (brown, cube)]. Relations: [(2, front right of, 1)]."
        );
    }

    #[test]
    fn serialize_single_object_empty_relations() {
        let info = StructuredInfo::new(vec![ObjectTuple::new(1, Color::Red, Shape::Sphere)], vec![]);
        assert_eq!(
            serialize(&info).unwrap(),
            "Objects: [1: (red, sphere)]. Relations: []."
        );
    }

    #[test]
    fn parse_serialized_single_object() {
        let info = parse_serialized("Objects: [1: (red, sphere)]. Relations: [].").unwrap();
        assert_eq!(info.objects.len(), 1);
        assert_eq!(info.objects[0], ObjectTuple::new(1, Color::Red, Shape::Sphere));
        assert!(info.relations.is_empty());
    }

    #[test]
    fn round_trip_two_cube_scene() {
        let info = two_cube_scene();
        let text = serialize(&info).unwrap();
        assert_eq!(parse_serialized(&text).unwrap(), info);
    }

    #[test]
    fn parse_serialized_rejects_dangling_id() {
        let text = "Objects: [1: (red, sphere)]. Relations: [(1, left of, 2)].";
        let err = parse_serialized(text).unwrap_err();
        match err {
            TupleError::Syntax { offset, message } => {
                assert!(message.contains("missing object id 2"), "{message}");
                // Offset points at the "2" inside the relation tuple.
                assert_eq!(offset, text.rfind('2').unwrap());
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn parse_serialized_reports_byte_offset() {
        let err = parse_serialized("Objects: [1: (red, blob)]. Relations: [].").unwrap_err();
        match err {
            TupleError::Syntax { offset, message } => {
                assert_eq!(offset, 19);
                assert!(message.contains("blob"));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn parse_serialized_rejects_trailing_content() {
        let err = parse_serialized("Objects: [1: (red, sphere)]. Relations: []. extra").unwrap_err();
        assert!(matches!(err, TupleError::Syntax { .. }));
    }

    #[test]
    fn validate_accepts_well_formed_scene() {
        assert!(validate(&two_cube_scene()).is_empty());
    }

    #[test]
    fn validate_rejects_self_relation() {
        let info = StructuredInfo::new(
            vec![ObjectTuple::new(1, Color::Red, Shape::Cube)],
            vec![RelationTuple::new(1, Relation::LeftOf, 1)],
        );
        let violations = validate(&info);
        assert!(violations.contains(&Violation::SelfRelation(1)), "{violations:?}");
    }

    #[test]
    fn validate_rejects_non_contiguous_ids() {
        let info = StructuredInfo::new(
            vec![
                ObjectTuple::new(1, Color::Red, Shape::Cube),
                ObjectTuple::new(3, Color::Blue, Shape::Sphere),
            ],
            vec![],
        );
        let violations = validate(&info);
        assert!(
            violations.iter().any(|v| matches!(v, Violation::NonContiguousIds(_))),
            "{violations:?}"
        );
    }

    #[test]
    fn validate_rejects_duplicate_relation() {
        let mut info = two_cube_scene();
        info.relations.push(info.relations[0]);
        let violations = validate(&info);
        assert!(
            violations.iter().any(|v| matches!(v, Violation::DuplicateRelation(_))),
            "{violations:?}"
        );
    }

    #[test]
    fn validate_rejects_multiple_anchors() {
        let info = StructuredInfo::new(
            vec![
                ObjectTuple::anchored(1, Color::Red, Shape::Cube, Anchor::Center),
                ObjectTuple::anchored(2, Color::Blue, Shape::Sphere, Anchor::Center),
            ],
            vec![],
        );
        assert!(validate(&info).contains(&Violation::MultipleAnchors));
    }

    #[test]
    fn serialize_fails_exactly_when_validate_fails() {
        let bad = StructuredInfo::new(
            vec![ObjectTuple::new(2, Color::Red, Shape::Cube)],
            vec![],
        );
        assert!(!validate(&bad).is_empty());
        assert!(serialize(&bad).is_err());
        assert!(validate(&two_cube_scene()).is_empty());
        assert!(serialize(&two_cube_scene()).is_ok());
    }

    #[test]
    fn relation_inverse_is_involution() {
        for r in Relation::ALL {
            assert_eq!(r.inverse().inverse(), r);
            assert_ne!(r.inverse(), r);
        }
    }

    #[test]
    fn augment_appends_serialization() {
        let plain = Prompt::new(
            "Add a purple cube at the center. Add a brown cube in front of it on the right.",
        )
        .unwrap();
        let augmented = augment(&plain, &two_cube_scene()).unwrap();
        assert_eq!(augmented.plain, plain);
        assert!(augmented.combined.starts_with(plain.text()));
        assert!(augmented.combined.ends_with(
            "Objects: [1: (purple, cube, center)], [2: (brown, cube)]. Relations: [(2, front right of, 1)]."
        ));
        assert!(augmented.combined.contains(AUGMENT_SEPARATOR));
    }

    #[test]
    fn augment_keeps_empty_relations_marker() {
        let plain = Prompt::new("Add a red sphere at the center.").unwrap();
        let info = StructuredInfo::new(
            vec![ObjectTuple::anchored(1, Color::Red, Shape::Sphere, Anchor::Center)],
            vec![],
        );
        let augmented = augment(&plain, &info).unwrap();
        assert!(augmented.combined.contains("Relations: []."));
    }

    #[test]
    fn augment_is_injective_in_plain() {
        let info = two_cube_scene();
        let a = augment(&Prompt::new("first prompt").unwrap(), &info).unwrap();
        let b = augment(&Prompt::new("second prompt").unwrap(), &info).unwrap();
        assert_ne!(a.combined, b.combined);
    }

    #[test]
    fn prompt_trims_and_rejects_empty() {
        assert_eq!(Prompt::new("  hi  ").unwrap().text(), "hi");
        assert!(matches!(Prompt::new("   "), Err(TupleError::EmptyPrompt)));
    }

    #[test]
    fn color_parsing_is_case_insensitive() {
        assert_eq!("RED".parse::<Color>().unwrap(), Color::Red);
        assert_eq!("Cyan".parse::<Color>().unwrap(), Color::Cyan);
        assert!("pink".parse::<Color>().is_err());
    }
}
