//! Versioned JSON formats: `bilin-scheme/1` for schemes and
//! `flip-trace/1` for move traces.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::coeff::{CoeffDomain, CoeffError, Coefficient};
use crate::moves::{Flip, Move, MoveTrace, Rebalance, Reduction, Split, TraceStart};
use crate::tensor::{CoeffVector, Scheme, Slot, TensorError, Term};

pub const SCHEME_FORMAT: &str = "bilin-scheme/1";
pub const TRACE_FORMAT: &str = "flip-trace/1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format {found:?}, expected {expected:?}")]
    Version { found: String, expected: &'static str },
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("move {index}: {reason}")]
    Move { index: usize, reason: String },
    #[error("{0}")]
    Shape(String),
}

#[derive(Serialize, Deserialize)]
struct SchemeDoc {
    format: String,
    n: usize,
    m: usize,
    domain: String,
    terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    u: Vec<CoeffText>,
    v: Vec<CoeffText>,
    w: Vec<CoeffText>,
}

// Written as strings; bare JSON integers are accepted on input.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffText {
    Text(String),
    Int(i64),
}

impl CoeffText {
    fn parse(&self, d: CoeffDomain) -> Result<Coefficient, CoeffError> {
        match self {
            CoeffText::Text(s) => d.parse_coeff(s),
            CoeffText::Int(x) => Ok(d.from_i64(*x)),
        }
    }
}

fn vec_doc(v: &CoeffVector) -> Vec<CoeffText> {
    v.entries().iter().map(|c| CoeffText::Text(c.to_string())).collect()
}

fn vec_parse(d: CoeffDomain, xs: &[CoeffText]) -> Result<CoeffVector, CoeffError> {
    CoeffVector::from_entries(d, xs.iter().map(|x| x.parse(d)).collect::<Result<_, _>>()?)
}

fn check_format(found: &str, expected: &'static str) -> Result<(), FormatError> {
    if found != expected {
        return Err(FormatError::Version { found: found.to_string(), expected });
    }
    Ok(())
}

fn scheme_doc(s: &Scheme) -> SchemeDoc {
    SchemeDoc {
        format: SCHEME_FORMAT.to_string(),
        n: s.n(),
        m: s.m(),
        domain: s.domain().to_string(),
        terms: s.terms().iter().map(|t| TermDoc { u: vec_doc(&t.u), v: vec_doc(&t.v), w: vec_doc(&t.w) }).collect(),
    }
}

fn scheme_from_doc(doc: SchemeDoc) -> Result<Scheme, FormatError> {
    check_format(&doc.format, SCHEME_FORMAT)?;
    let d: CoeffDomain = doc.domain.parse()?;
    let mut terms = Vec::with_capacity(doc.terms.len());
    for t in &doc.terms {
        terms.push(Term::new(vec_parse(d, &t.u)?, vec_parse(d, &t.v)?, vec_parse(d, &t.w)?));
    }
    Ok(Scheme::new(doc.n, doc.m, d, terms)?)
}

pub fn scheme_to_json(s: &Scheme) -> String {
    serde_json::to_string(&scheme_doc(s)).expect("serializable")
}

pub fn scheme_to_value(s: &Scheme) -> Value {
    serde_json::to_value(scheme_doc(s)).expect("serializable")
}

pub fn scheme_from_json(text: &str) -> Result<Scheme, FormatError> {
    scheme_from_doc(serde_json::from_str(text)?)
}

pub fn scheme_from_value(v: Value) -> Result<Scheme, FormatError> {
    scheme_from_doc(serde_json::from_value(v)?)
}

#[derive(Serialize, Deserialize)]
struct TraceDoc {
    format: String,
    n: usize,
    m: usize,
    domain: String,
    start: Value,
    moves: Vec<MoveDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum MoveDoc {
    Flip { i: usize, j: usize, shared: String, orient: String, lambda: CoeffText },
    Reduction { i: usize, j: usize, shared: String },
    Split { i: usize, slot: String, part: Vec<CoeffText> },
    Rebalance { i: usize, from: String, to: String, alpha: CoeffText },
}

fn move_doc(mv: &Move) -> MoveDoc {
    match mv {
        Move::Flip(f) => MoveDoc::Flip {
            i: f.i,
            j: f.j,
            shared: f.shared.name().into(),
            orient: format!("{}-", f.orient.name()),
            lambda: CoeffText::Text(f.lambda.to_string()),
        },
        Move::Reduction(r) => MoveDoc::Reduction {
            i: r.i,
            j: r.j,
            shared: format!("{}{}", r.shared.0.name(), r.shared.1.name()),
        },
        Move::Split(s) => MoveDoc::Split { i: s.i, slot: s.slot.name().into(), part: vec_doc(&s.part) },
        Move::Rebalance(r) => MoveDoc::Rebalance {
            i: r.i,
            from: r.from.name().into(),
            to: r.to.name().into(),
            alpha: CoeffText::Text(r.alpha.to_string()),
        },
    }
}

fn parse_move(d: CoeffDomain, doc: &MoveDoc) -> Result<Move, String> {
    let slot = |s: &str| Slot::from_name(s).ok_or_else(|| format!("unknown slot {s:?}"));
    Ok(match doc {
        MoveDoc::Flip { i, j, shared, orient, lambda } => {
            let o = orient.strip_suffix('-').ok_or_else(|| format!("orientation {orient:?} must end in '-'"))?;
            Move::Flip(Flip {
                i: *i,
                j: *j,
                shared: slot(shared)?,
                orient: slot(o)?,
                lambda: lambda.parse(d).map_err(|e| e.to_string())?,
            })
        }
        MoveDoc::Reduction { i, j, shared } => {
            let mut cs = shared.chars().map(|c| slot(&c.to_string()));
            let (a, b) = match (cs.next(), cs.next(), cs.next()) {
                (Some(a), Some(b), None) => (a?, b?),
                _ => return Err(format!("reduction needs two slots, got {shared:?}")),
            };
            if a == b {
                return Err(format!("reduction slots {shared:?} repeat"));
            }
            Move::Reduction(Reduction { i: *i, j: *j, shared: (a, b) })
        }
        MoveDoc::Split { i, slot: sl, part } => {
            Move::Split(Split { i: *i, slot: slot(sl)?, part: vec_parse(d, part).map_err(|e| e.to_string())? })
        }
        MoveDoc::Rebalance { i, from, to, alpha } => Move::Rebalance(Rebalance {
            i: *i,
            from: slot(from)?,
            to: slot(to)?,
            alpha: alpha.parse(d).map_err(|e| e.to_string())?,
        }),
    })
}

pub fn move_to_value(mv: &Move) -> Value {
    serde_json::to_value(move_doc(mv)).expect("serializable")
}

fn trace_doc(t: &MoveTrace) -> TraceDoc {
    TraceDoc {
        format: TRACE_FORMAT.to_string(),
        n: t.n,
        m: t.m,
        domain: t.domain.to_string(),
        start: match &t.start {
            TraceStart::Standard => Value::String("standard".into()),
            TraceStart::Explicit(s) => scheme_to_value(s),
        },
        moves: t.moves.iter().map(move_doc).collect(),
    }
}

pub fn trace_to_json(t: &MoveTrace) -> String {
    serde_json::to_string(&trace_doc(t)).expect("serializable")
}

pub fn trace_from_json(text: &str) -> Result<MoveTrace, FormatError> {
    let doc: TraceDoc = serde_json::from_str(text)?;
    check_format(&doc.format, TRACE_FORMAT)?;
    let domain: CoeffDomain = doc.domain.parse()?;
    let start = match doc.start {
        Value::String(s) if s == "standard" => TraceStart::Standard,
        Value::String(s) => return Err(FormatError::Shape(format!("unknown start {s:?}"))),
        v => {
            let s = scheme_from_value(v)?;
            if (s.n(), s.m(), s.domain()) != (doc.n, doc.m, domain) {
                return Err(FormatError::Shape("start scheme does not match trace header".into()));
            }
            TraceStart::Explicit(s)
        }
    };
    let moves = doc
        .moves
        .iter()
        .enumerate()
        .map(|(index, m)| parse_move(domain, m).map_err(|reason| FormatError::Move { index, reason }))
        .collect::<Result<_, _>>()?;
    Ok(MoveTrace { n: doc.n, m: doc.m, domain, start, moves })
}
