//! Deterministic grammar parser mapping natural-language prompts onto
//! structured information.
//!
//! The language fragment is clause-based: a prompt is a sequence of
//! `.`-terminated clauses, each introducing one object and at most one
//! spatial relation to an earlier object. Object ids follow mention order.
//! The pronoun `it` binds to the most recently introduced object; a definite
//! phrase `the <color> <shape>` must match exactly one earlier object.
//! Anything outside the grammar is rejected with diagnostics; there are no
//! partial parses.

use crate::tuple::{
    validate, Anchor, Color, ObjectTuple, Prompt, Relation, RelationTuple, Shape, StructuredInfo,
};
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

/// What kind of problem a diagnostic reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticCategory {
    UnknownWord,
    UnresolvedReference,
    TemplateMismatch,
}

impl fmt::Display for DiagnosticCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagnosticCategory::UnknownWord => "unknown-word",
            DiagnosticCategory::UnresolvedReference => "unresolved-reference",
            DiagnosticCategory::TemplateMismatch => "template-mismatch",
        };
        f.write_str(s)
    }
}

/// One parse problem, located by clause index and byte span in the prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub clause: usize,
    pub span: (usize, usize),
    pub message: String,
    pub category: DiagnosticCategory,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "clause {} [{}..{}] {}: {}",
            self.clause, self.span.0, self.span.1, self.category, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "prompt does not parse ({} diagnostics):", self.diagnostics.len())?;
        for d in &self.diagnostics {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown relation phrase {0:?}")]
pub struct UnknownRelationPhrase(pub String);

/// Surface forms of a simple (single-axis) relation phrase.
const SIMPLE_PHRASES: &[(&[&str], Relation)] = &[
    (&["on", "the", "left", "of"], Relation::LeftOf),
    (&["to", "the", "left", "of"], Relation::LeftOf),
    (&["left", "of"], Relation::LeftOf),
    (&["on", "the", "right", "of"], Relation::RightOf),
    (&["to", "the", "right", "of"], Relation::RightOf),
    (&["right", "of"], Relation::RightOf),
    (&["above"], Relation::Above),
    (&["below"], Relation::Below),
    (&["in", "front", "of"], Relation::InFrontOf),
    (&["behind"], Relation::Behind),
];

/// Composite (diagonal) phrases wrap the object reference:
/// `<prefix> <reference> <suffix>`.
const COMPOSITE_PHRASES: &[(&[&str], &[&str], Relation)] = &[
    (&["in", "front", "of"], &["on", "the", "left"], Relation::FrontLeftOf),
    (&["in", "front", "of"], &["on", "the", "right"], Relation::FrontRightOf),
    (&["behind"], &["on", "the", "left"], Relation::BehindLeftOf),
    (&["behind"], &["on", "the", "right"], Relation::BehindRightOf),
];

/// The clause templates and lexicon of the prompt language. Immutable after
/// construction; safe to share across threads.
#[derive(Debug, Default)]
pub struct PromptGrammar {
    _private: (),
}

/// A word of a clause: lowercase text plus its byte span in the prompt.
#[derive(Debug, Clone)]
struct Token {
    word: String,
    span: (usize, usize),
}

/// An object reference inside a relation clause.
#[derive(Debug, Clone, Copy)]
enum Reference {
    It,
    Definite(Color, Shape),
}

#[derive(Debug)]
struct Clause {
    index: usize,
    tokens: Vec<Token>,
    span: (usize, usize),
}

impl Clause {
    fn diagnostic(
        &self,
        span: (usize, usize),
        category: DiagnosticCategory,
        message: impl Into<String>,
    ) -> ParseDiagnostic {
        ParseDiagnostic { clause: self.index, span, message: message.into(), category }
    }

    fn tail_span(&self, from: usize) -> (usize, usize) {
        match self.tokens.get(from) {
            Some(tok) => (tok.span.0, self.span.1),
            None => (self.span.1, self.span.1),
        }
    }
}

impl PromptGrammar {
    pub fn new() -> Self {
        PromptGrammar::default()
    }

    /// Parses a prompt into structured information. Object ids are assigned
    /// in order of first mention; the result always passes validation.
    pub fn parse_prompt(&self, prompt: &Prompt) -> Result<StructuredInfo, ParseError> {
        let text = prompt.text();
        let clauses = split_clauses(text);
        if clauses.is_empty() {
            return Err(ParseError {
                diagnostics: vec![ParseDiagnostic {
                    clause: 0,
                    span: (0, text.len()),
                    message: "prompt contains no clauses".into(),
                    category: DiagnosticCategory::TemplateMismatch,
                }],
            });
        }

        let mut objects: Vec<ObjectTuple> = Vec::new();
        let mut relations: Vec<RelationTuple> = Vec::new();
        let mut diagnostics: Vec<ParseDiagnostic> = Vec::new();

        for clause in &clauses {
            match self.parse_clause(clause, &objects) {
                Ok((object, relation)) => {
                    objects.push(object);
                    relations.extend(relation);
                }
                Err(diag) => diagnostics.push(diag),
            }
        }

        if objects.len() > 2 {
            let third = &clauses[clauses.len().min(2)];
            diagnostics.push(third.diagnostic(
                third.span,
                DiagnosticCategory::TemplateMismatch,
                format!("prompts are limited to two objects, found {}", objects.len()),
            ));
        }

        if !diagnostics.is_empty() {
            return Err(ParseError { diagnostics });
        }

        let info = StructuredInfo::new(objects, relations);
        debug_assert!(validate(&info).is_empty(), "parser built an invalid scene");
        Ok(info)
    }

    /// Parses one clause into its new object and optional relation. Objects
    /// introduced by earlier clauses are the antecedent candidates.
    fn parse_clause(
        &self,
        clause: &Clause,
        earlier: &[ObjectTuple],
    ) -> Result<(ObjectTuple, Option<RelationTuple>), ParseDiagnostic> {
        let tokens = &clause.tokens;
        let word = |i: usize| tokens.get(i).map(|t| t.word.as_str());

        if word(0) != Some("add") || word(1) != Some("a") {
            return Err(clause.diagnostic(
                clause.span,
                DiagnosticCategory::TemplateMismatch,
                "clause does not start with \"Add a\"",
            ));
        }

        let color_tok = tokens.get(2).ok_or_else(|| {
            clause.diagnostic(
                clause.tail_span(2),
                DiagnosticCategory::TemplateMismatch,
                "expected a color after \"Add a\"",
            )
        })?;
        let color: Color = color_tok.word.parse().map_err(|_| {
            clause.diagnostic(
                color_tok.span,
                DiagnosticCategory::UnknownWord,
                format!("unknown color {:?}", color_tok.word),
            )
        })?;

        let shape_tok = tokens.get(3).ok_or_else(|| {
            clause.diagnostic(
                clause.tail_span(3),
                DiagnosticCategory::TemplateMismatch,
                "expected a shape after the color",
            )
        })?;
        let shape: Shape = shape_tok.word.parse().map_err(|_| {
            clause.diagnostic(
                shape_tok.span,
                DiagnosticCategory::UnknownWord,
                format!("unknown shape {:?}", shape_tok.word),
            )
        })?;

        let id = earlier.len() as u32 + 1;
        let rest = &tokens[4..];

        // Template forms, longest modifiers first: anchored, composite
        // relation, simple relation, bare object.
        if rest.is_empty() {
            return Ok((ObjectTuple::new(id, color, shape), None));
        }

        if words_eq(rest, &["at", "the", "center"]) {
            return Ok((ObjectTuple::anchored(id, color, shape, Anchor::Center), None));
        }

        for (prefix, suffix, relation) in COMPOSITE_PHRASES {
            if let Some(middle) = strip_circumfix(rest, prefix, suffix) {
                if middle.is_empty() {
                    continue;
                }
                let reference = self.parse_reference(clause, middle)?;
                let antecedent = resolve_reference(clause, reference, middle, earlier)?;
                let tuple = RelationTuple::new(id, *relation, antecedent);
                return Ok((ObjectTuple::new(id, color, shape), Some(tuple)));
            }
        }

        let mut simple: Vec<_> = SIMPLE_PHRASES.to_vec();
        simple.sort_by_key(|(phrase, _)| std::cmp::Reverse(phrase.len()));
        for (phrase, relation) in simple {
            if let Some(ref_tokens) = strip_prefix_words(rest, phrase) {
                if ref_tokens.is_empty() {
                    continue;
                }
                let reference = self.parse_reference(clause, ref_tokens)?;
                let antecedent = resolve_reference(clause, reference, ref_tokens, earlier)?;
                let tuple = RelationTuple::new(id, relation, antecedent);
                return Ok((ObjectTuple::new(id, color, shape), Some(tuple)));
            }
        }

        Err(clause.diagnostic(
            clause.tail_span(4),
            DiagnosticCategory::TemplateMismatch,
            "clause tail matches no template",
        ))
    }

    fn parse_reference(
        &self,
        clause: &Clause,
        tokens: &[Token],
    ) -> Result<Reference, ParseDiagnostic> {
        if words_eq(tokens, &["it"]) {
            return Ok(Reference::It);
        }
        if tokens.len() == 3 && tokens[0].word == "the" {
            let color: Color = tokens[1].word.parse().map_err(|_| {
                clause.diagnostic(
                    tokens[1].span,
                    DiagnosticCategory::UnknownWord,
                    format!("unknown color {:?}", tokens[1].word),
                )
            })?;
            let shape: Shape = tokens[2].word.parse().map_err(|_| {
                clause.diagnostic(
                    tokens[2].span,
                    DiagnosticCategory::UnknownWord,
                    format!("unknown shape {:?}", tokens[2].word),
                )
            })?;
            return Ok(Reference::Definite(color, shape));
        }
        let span = (tokens[0].span.0, tokens[tokens.len() - 1].span.1);
        Err(clause.diagnostic(
            span,
            DiagnosticCategory::TemplateMismatch,
            "expected \"it\" or \"the <color> <shape>\"",
        ))
    }
}

fn resolve_reference(
    clause: &Clause,
    reference: Reference,
    ref_tokens: &[Token],
    earlier: &[ObjectTuple],
) -> Result<u32, ParseDiagnostic> {
    let span = (ref_tokens[0].span.0, ref_tokens[ref_tokens.len() - 1].span.1);
    match reference {
        Reference::It => earlier.last().map(|o| o.id).ok_or_else(|| {
            clause.diagnostic(
                span,
                DiagnosticCategory::UnresolvedReference,
                "\"it\" has no antecedent",
            )
        }),
        Reference::Definite(color, shape) => {
            let matches: Vec<u32> = earlier
                .iter()
                .filter(|o| o.color == color && o.shape == shape)
                .map(|o| o.id)
                .collect();
            match matches.as_slice() {
                [id] => Ok(*id),
                [] => Err(clause.diagnostic(
                    span,
                    DiagnosticCategory::UnresolvedReference,
                    format!("no earlier object matches \"the {color} {shape}\""),
                )),
                _ => Err(clause.diagnostic(
                    span,
                    DiagnosticCategory::UnresolvedReference,
                    format!("\"the {color} {shape}\" matches {} objects", matches.len()),
                )),
            }
        }
    }
}

fn words_eq(tokens: &[Token], words: &[&str]) -> bool {
    tokens.len() == words.len() && tokens.iter().zip(words).all(|(t, w)| t.word == *w)
}

fn strip_prefix_words<'a>(tokens: &'a [Token], words: &[&str]) -> Option<&'a [Token]> {
    if tokens.len() >= words.len() && tokens.iter().zip(words).all(|(t, w)| t.word == *w) {
        Some(&tokens[words.len()..])
    } else {
        None
    }
}

fn strip_circumfix<'a>(
    tokens: &'a [Token],
    prefix: &[&str],
    suffix: &[&str],
) -> Option<&'a [Token]> {
    let middle = strip_prefix_words(tokens, prefix)?;
    if middle.len() < suffix.len() {
        return None;
    }
    let (middle, tail) = middle.split_at(middle.len() - suffix.len());
    if tail.iter().zip(suffix).all(|(t, w)| t.word == *w) {
        Some(middle)
    } else {
        None
    }
}

/// Splits prompt text into `.`-separated clauses with whitespace-delimited,
/// lowercased tokens. Byte spans index into the original text.
fn split_clauses(text: &str) -> Vec<Clause> {
    let mut clauses = Vec::new();
    let mut start = 0usize;
    let mut segments: Vec<(usize, &str)> = Vec::new();
    for (i, c) in text.char_indices() {
        if c == '.' {
            segments.push((start, &text[start..i]));
            start = i + 1;
        }
    }
    if start < text.len() {
        segments.push((start, &text[start..]));
    }

    for (seg_start, seg) in segments {
        let mut tokens = Vec::new();
        let mut word_start: Option<usize> = None;
        for (i, c) in seg.char_indices() {
            if c.is_whitespace() {
                if let Some(ws) = word_start.take() {
                    tokens.push(Token {
                        word: seg[ws..i].to_lowercase(),
                        span: (seg_start + ws, seg_start + i),
                    });
                }
            } else if word_start.is_none() {
                word_start = Some(i);
            }
        }
        if let Some(ws) = word_start {
            tokens.push(Token {
                word: seg[ws..].to_lowercase(),
                span: (seg_start + ws, seg_start + seg.len()),
            });
        }
        if tokens.is_empty() {
            continue;
        }
        let span = (tokens[0].span.0, tokens[tokens.len() - 1].span.1);
        clauses.push(Clause { index: clauses.len(), tokens, span });
    }
    clauses
}

fn default_grammar() -> &'static PromptGrammar {
    static GRAMMAR: OnceLock<PromptGrammar> = OnceLock::new();
    GRAMMAR.get_or_init(PromptGrammar::new)
}

/// Parses a prompt with the built-in grammar.
pub fn parse_prompt(prompt: &Prompt) -> Result<StructuredInfo, ParseError> {
    default_grammar().parse_prompt(prompt)
}

/// Maps a relation surface phrase to its relation token. Composite phrases
/// may carry their object reference inline (`in front of it on the right`)
/// or elided (`in front of ... on the right`).
pub fn relation_phrase_to_relation(words: &str) -> Result<Relation, UnknownRelationPhrase> {
    let tokens: Vec<&str> = words.split_whitespace().collect();
    let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let toks: Vec<&str> = lowered.iter().map(|s| s.as_str()).collect();
    if toks.is_empty() {
        return Err(UnknownRelationPhrase(words.to_string()));
    }

    for (prefix, suffix, relation) in COMPOSITE_PHRASES {
        if toks.len() > prefix.len() + suffix.len()
            && toks[..prefix.len()] == **prefix
            && toks[toks.len() - suffix.len()..] == **suffix
        {
            let middle = &toks[prefix.len()..toks.len() - suffix.len()];
            let is_reference = middle == ["..."]
                || middle == ["it"]
                || (middle.len() == 3
                    && middle[0] == "the"
                    && middle[1].parse::<Color>().is_ok()
                    && middle[2].parse::<Shape>().is_ok());
            if is_reference {
                return Ok(*relation);
            }
        }
    }

    for (phrase, relation) in SIMPLE_PHRASES {
        if toks == **phrase {
            return Ok(*relation);
        }
    }

    Err(UnknownRelationPhrase(words.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuple::serialize;

    fn parse(text: &str) -> Result<StructuredInfo, ParseError> {
        parse_prompt(&Prompt::new(text).unwrap())
    }

    #[test]
    fn parses_two_clause_prompt_with_composite_relation() {
        let info =
            parse("Add a purple cube at the center. Add a brown cube in front of it on the right.")
                .unwrap();
        assert_eq!(
            info.objects,
            vec![
                ObjectTuple::anchored(1, Color::Purple, Shape::Cube, Anchor::Center),
                ObjectTuple::new(2, Color::Brown, Shape::Cube),
            ]
        );
        assert_eq!(info.relations, vec![RelationTuple::new(2, Relation::FrontRightOf, 1)]);
        assert_eq!(
            serialize(&info).unwrap(),
            "Objects: [1: (purple, cube, center)], [2: (brown, cube)]. Relations: [(2, front right of, 1)]."
        );
    }

    #[test]
    fn parses_single_anchored_clause() {
        let info = parse("Add a red sphere at the center.").unwrap();
        assert_eq!(
            info.objects,
            vec![ObjectTuple::anchored(1, Color::Red, Shape::Sphere, Anchor::Center)]
        );
        assert!(info.relations.is_empty());
    }

    #[test]
    fn parses_simple_relation_with_pronoun() {
        let info = parse("Add a red cube at the center. Add a blue sphere on the right of it.")
            .unwrap();
        assert_eq!(info.relations, vec![RelationTuple::new(2, Relation::RightOf, 1)]);
    }

    #[test]
    fn parses_definite_reference() {
        let info = parse("Add a red cube at the center. Add a green sphere above the red cube.")
            .unwrap();
        assert_eq!(info.relations, vec![RelationTuple::new(2, Relation::Above, 1)]);
    }

    #[test]
    fn parses_every_relation_surface_form() {
        let cases = [
            ("on the left of it", Relation::LeftOf),
            ("to the left of it", Relation::LeftOf),
            ("left of it", Relation::LeftOf),
            ("on the right of it", Relation::RightOf),
            ("to the right of it", Relation::RightOf),
            ("right of it", Relation::RightOf),
            ("above it", Relation::Above),
            ("below it", Relation::Below),
            ("in front of it", Relation::InFrontOf),
            ("behind it", Relation::Behind),
            ("in front of it on the left", Relation::FrontLeftOf),
            ("in front of it on the right", Relation::FrontRightOf),
            ("behind it on the left", Relation::BehindLeftOf),
            ("behind it on the right", Relation::BehindRightOf),
        ];
        for (phrase, expected) in cases {
            let text = format!("Add a red cube at the center. Add a blue sphere {phrase}.");
            let info = parse(&text).unwrap_or_else(|e| panic!("{text:?}: {e}"));
            assert_eq!(info.relations[0].relation, expected, "{phrase}");
        }
    }

    #[test]
    fn rejects_unknown_color() {
        let err = parse("Add a pink cube.").unwrap_err();
        assert_eq!(err.diagnostics.len(), 1);
        let d = &err.diagnostics[0];
        assert_eq!(d.category, DiagnosticCategory::UnknownWord);
        assert_eq!(&"Add a pink cube."[d.span.0..d.span.1], "pink");
    }

    #[test]
    fn rejects_pronoun_without_antecedent() {
        let err = parse("Add a red cube on the left of it.").unwrap_err();
        assert_eq!(err.diagnostics[0].category, DiagnosticCategory::UnresolvedReference);
    }

    #[test]
    fn rejects_definite_reference_without_match() {
        let err = parse("Add a red cube at the center. Add a blue sphere above the green cube.")
            .unwrap_err();
        let d = &err.diagnostics[0];
        assert_eq!(d.category, DiagnosticCategory::UnresolvedReference);
        assert!(d.message.contains("green cube"));
    }

    #[test]
    fn rejects_three_object_prompts() {
        let err = parse("Add a red cube. Add a blue sphere above it. Add a green triangle below it.")
            .unwrap_err();
        assert!(err
            .diagnostics
            .iter()
            .any(|d| d.message.contains("limited to two objects")));
    }

    #[test]
    fn rejects_clause_outside_grammar() {
        let err = parse("Remove the red cube.").unwrap_err();
        assert_eq!(err.diagnostics[0].category, DiagnosticCategory::TemplateMismatch);
    }

    #[test]
    fn never_returns_partial_scene_on_error() {
        // Second clause is broken; the parse must fail as a whole.
        assert!(parse("Add a red cube at the center. Add a blob sphere above it.").is_err());
    }

    #[test]
    fn parse_is_deterministic() {
        let text = "Add a purple cube at the center. Add a brown cube in front of it on the right.";
        assert_eq!(parse(text).unwrap(), parse(text).unwrap());
        let bad = "Add a pink cube. Add a blue blob.";
        assert_eq!(parse(bad).unwrap_err(), parse(bad).unwrap_err());
    }

    #[test]
    fn phrase_lookup_covers_simple_variants() {
        assert_eq!(relation_phrase_to_relation("on the right of").unwrap(), Relation::RightOf);
        assert_eq!(relation_phrase_to_relation("to the right of").unwrap(), Relation::RightOf);
        assert_eq!(relation_phrase_to_relation("right of").unwrap(), Relation::RightOf);
        assert_eq!(relation_phrase_to_relation("behind").unwrap(), Relation::Behind);
        assert_eq!(relation_phrase_to_relation("Above").unwrap(), Relation::Above);
    }

    #[test]
    fn phrase_lookup_covers_composites() {
        assert_eq!(
            relation_phrase_to_relation("in front of ... on the left").unwrap(),
            Relation::FrontLeftOf
        );
        assert_eq!(
            relation_phrase_to_relation("in front of it on the right").unwrap(),
            Relation::FrontRightOf
        );
        assert_eq!(
            relation_phrase_to_relation("behind the red cube on the left").unwrap(),
            Relation::BehindLeftOf
        );
    }

    #[test]
    fn phrase_lookup_rejects_unknown() {
        assert!(relation_phrase_to_relation("next to").is_err());
        assert!(relation_phrase_to_relation("").is_err());
        assert!(relation_phrase_to_relation("in front of on the right").is_err());
    }
}
