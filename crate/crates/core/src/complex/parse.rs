//! Text format for triangulations.
//!
//! ```text
//! tetrahedra 2
//! glue 0 0 -> 1 0132
//! ...
//! metric 1 1
//! ```
//!
//! `glue t f -> u p0p1p2p3` glues face `f` of tetrahedron `t` to tetrahedron
//! `u`, sending vertex `i` to vertex `p_i`. Blank lines and lines starting
//! with `#` are ignored. An optional final `metric` record lists an initial
//! value per edge class.

use std::fmt;

use thiserror::Error;

use super::{FaceGluing, GluingSpec, Perm};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("expected `tetrahedra <N>` header")]
    MissingHeader,
    #[error("tetrahedron count must be positive")]
    NoTetrahedra,
    #[error("field `{field}`: expected a non-negative integer, got `{value}`")]
    BadInteger { field: &'static str, value: String },
    #[error("field `{field}`: tetrahedron {index} out of range (count {count})")]
    TetOutOfRange {
        field: &'static str,
        index: usize,
        count: usize,
    },
    #[error("face {0} out of range (expected 0..=3)")]
    FaceOutOfRange(usize),
    #[error("malformed permutation `{0}`")]
    MalformedPermutation(String),
    #[error("expected `glue <t> <f> -> <t'> <perm>`")]
    MalformedGlue,
    #[error("face {face} of tetrahedron {tet} glued twice")]
    DuplicateGluing { tet: usize, face: usize },
    #[error("metric value `{0}` is not a finite number")]
    BadMetricValue(String),
    #[error("metric record has no values")]
    EmptyMetric,
    #[error("record after `metric`")]
    RecordAfterMetric,
    #[error("unknown record `{0}`")]
    UnknownRecord(String),
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn parse_index(line: usize, field: &'static str, value: &str) -> Result<usize, ParseError> {
    value.parse().map_err(|_| {
        err(
            line,
            ParseErrorKind::BadInteger {
                field,
                value: value.to_string(),
            },
        )
    })
}

/// Parses a triangulation file. Only syntax and index ranges are checked;
/// gluing consistency is left to [`super::validate`].
pub fn parse_complex(source: &str) -> Result<GluingSpec, ParseError> {
    let mut records = source
        .lines()
        .enumerate()
        .map(|(i, text)| (i + 1, text.trim()))
        .filter(|(_, text)| !text.is_empty() && !text.starts_with('#'));

    let (header_line, header) = records
        .next()
        .ok_or_else(|| err(1, ParseErrorKind::MissingHeader))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("tetrahedra") {
        return Err(err(header_line, ParseErrorKind::MissingHeader));
    }
    let count_token = tokens
        .next()
        .ok_or_else(|| err(header_line, ParseErrorKind::MissingHeader))?;
    if tokens.next().is_some() {
        return Err(err(header_line, ParseErrorKind::MissingHeader));
    }
    let tet_count = parse_index(header_line, "tetrahedra", count_token)?;
    if tet_count == 0 {
        return Err(err(header_line, ParseErrorKind::NoTetrahedra));
    }

    let mut spec = GluingSpec::new(tet_count);
    let mut metric: Option<Vec<f64>> = None;
    for (line, text) in records {
        if metric.is_some() {
            return Err(err(line, ParseErrorKind::RecordAfterMetric));
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        match tokens[0] {
            "glue" => {
                if tokens.len() < 6 || tokens[3] != "->" {
                    return Err(err(line, ParseErrorKind::MalformedGlue));
                }
                let tet = parse_index(line, "tet", tokens[1])?;
                if tet >= tet_count {
                    return Err(err(
                        line,
                        ParseErrorKind::TetOutOfRange {
                            field: "tet",
                            index: tet,
                            count: tet_count,
                        },
                    ));
                }
                let face = parse_index(line, "face", tokens[2])?;
                if face > 3 {
                    return Err(err(line, ParseErrorKind::FaceOutOfRange(face)));
                }
                let neighbor = parse_index(line, "neighbor", tokens[4])?;
                if neighbor >= tet_count {
                    return Err(err(
                        line,
                        ParseErrorKind::TetOutOfRange {
                            field: "neighbor",
                            index: neighbor,
                            count: tet_count,
                        },
                    ));
                }
                let perm_field = tokens[5..].join(" ");
                let perm: Perm = perm_field
                    .parse()
                    .map_err(|()| err(line, ParseErrorKind::MalformedPermutation(perm_field)))?;
                if spec.gluing(tet, face).is_some() {
                    return Err(err(line, ParseErrorKind::DuplicateGluing { tet, face }));
                }
                spec.set_gluing(tet, face, Some(FaceGluing { neighbor, perm }));
            }
            "metric" => {
                let values = tokens[1..]
                    .iter()
                    .map(|tok| match tok.parse::<f64>() {
                        Ok(x) if x.is_finite() => Ok(x),
                        _ => Err(err(line, ParseErrorKind::BadMetricValue(tok.to_string()))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if values.is_empty() {
                    return Err(err(line, ParseErrorKind::EmptyMetric));
                }
                metric = Some(values);
            }
            other => return Err(err(line, ParseErrorKind::UnknownRecord(other.to_string()))),
        }
    }
    spec.set_initial_metric(metric);
    Ok(spec)
}

impl fmt::Display for GluingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tetrahedra {}", self.tet_count())?;
        for tet in 0..self.tet_count() {
            for face in 0..4 {
                if let Some(g) = self.gluing(tet, face) {
                    writeln!(f, "glue {tet} {face} -> {} {}", g.neighbor, g.perm)?;
                }
            }
        }
        if let Some(metric) = self.initial_metric() {
            write!(f, "metric")?;
            for x in metric {
                write!(f, " {x}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
