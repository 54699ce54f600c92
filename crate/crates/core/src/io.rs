//! Text syntax and JSON documents for contractions.
//!
//! ```text
//! 2/3 * R[i,j,k,l]*R[i,j,k,l] - 1 * D[m](Ric[i,j])*D[m](Ric[i,j]) + 4
//! ```
//!
//! A repeated index name is a contracted pair. The grammar is documented in
//! `docs/grammar.md`; the JSON layout in `docs/serialization.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{to_text, Rational};
use crate::term::{Contraction, Factor, Kind, Label, LinearCombination, TermError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("term {term}: {source}")]
    Term {
        term: usize,
        #[source]
        source: TermError,
    },
    #[error("term {term}: index `{name}` is not contracted")]
    Unbalanced { term: usize, name: String },
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    Schema { found: u32 },
    #[error("invalid combination: {0}")]
    Term(#[from] TermError),
}

struct Lexer<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            text: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let before = &self.text[..self.pos.min(self.text.len())];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = before.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), ParseError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", byte as char)))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_alphanumeric() || self.text[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos || self.text[start].is_ascii_digit() {
            self.pos = start;
            return Err(self.error("expected a name"));
        }
        Ok(String::from_utf8_lossy(&self.text[start..self.pos]).into_owned())
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        let digits = std::str::from_utf8(&self.text[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("digits parse"))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
}

/// Index names of the term being parsed, numbered by first appearance.
#[derive(Default)]
struct Names {
    ids: BTreeMap<String, Label>,
}

impl Names {
    fn label(&mut self, name: String) -> Label {
        let next = self.ids.len() as Label;
        *self.ids.entry(name).or_insert(next)
    }
}

impl Parser<'_> {
    fn expression(&mut self) -> Result<Vec<(Contraction, BTreeMap<String, Label>)>, ParseError> {
        let mut terms = Vec::new();
        let mut negative = false;
        if self.lex.peek() == Some(b'-') {
            self.lex.pos += 1;
            negative = true;
        } else if self.lex.peek() == Some(b'+') {
            self.lex.pos += 1;
        }
        loop {
            let (mut term, names) = self.term()?;
            if negative {
                term.coeff = -term.coeff;
            }
            terms.push((term, names));
            match self.lex.peek() {
                Some(b'+') => negative = false,
                Some(b'-') => negative = true,
                None => break,
                Some(c) => {
                    return Err(self
                        .lex
                        .error(format!("unexpected `{}`, expected `+`, `-` or end", c as char)))
                }
            }
            self.lex.pos += 1;
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<(Contraction, BTreeMap<String, Label>), ParseError> {
        let mut coeff = Rational::one();
        let mut names = Names::default();
        let mut factors = Vec::new();
        let mut first = true;
        loop {
            match self.lex.peek() {
                Some(c) if c.is_ascii_digit() => {
                    let numer = self.lex.integer()?;
                    let value = if self.lex.peek() == Some(b'/') {
                        self.lex.pos += 1;
                        let denom = self.lex.integer()?;
                        if denom.is_zero() {
                            return Err(self.lex.error("zero denominator"));
                        }
                        Rational::new(numer, denom)
                    } else {
                        Rational::from_integer(numer)
                    };
                    coeff *= value;
                }
                Some(_) => factors.push(self.factor(&mut names)?),
                None => {
                    return Err(self.lex.error(if first {
                        "expected a term"
                    } else {
                        "expected a factor"
                    }))
                }
            }
            first = false;
            if self.lex.peek() == Some(b'*') {
                self.lex.pos += 1;
            } else {
                break;
            }
        }
        Ok((Contraction::new(coeff, factors), names.ids))
    }

    fn index_list(&mut self, names: &mut Names) -> Result<Vec<Label>, ParseError> {
        self.lex.expect(b'[')?;
        let mut out = vec![names.label(self.lex.ident()?)];
        while self.lex.peek() == Some(b',') {
            self.lex.pos += 1;
            out.push(names.label(self.lex.ident()?));
        }
        self.lex.expect(b']')?;
        Ok(out)
    }

    fn factor(&mut self, names: &mut Names) -> Result<Factor, ParseError> {
        let start = self.lex.pos;
        let name = self.lex.ident()?;
        if name == "D" {
            let derivs = self.index_list(names)?;
            self.lex.expect(b'(')?;
            let inner = self.factor(names)?;
            self.lex.expect(b')')?;
            if matches!(inner.kind, Kind::Metric | Kind::InverseMetric | Kind::SymPhi) {
                self.lex.pos = start;
                return Err(self
                    .lex
                    .error(format!("`D` cannot be applied to {:?}", inner.kind)));
            }
            let mut indices = derivs.clone();
            indices.extend(inner.indices);
            return Ok(Factor {
                kind: inner.kind,
                order: inner.order + derivs.len() as u8,
                flavor: inner.flavor,
                indices,
            });
        }
        let (base, flavor) = match name.split_once('_') {
            Some((base, flavor)) => match flavor.parse::<u8>() {
                Ok(f) if base == "phi" || base == "Sphi" => (base.to_string(), f),
                _ => {
                    self.lex.pos = start;
                    return Err(self.lex.error(format!("unknown tensor `{name}`")));
                }
            },
            None => (name.clone(), 0),
        };
        let kind = match base.as_str() {
            "R" => Kind::Riemann,
            "W" => Kind::Weyl,
            "P" => Kind::Schouten,
            "Ric" => Kind::Ricci,
            "Scal" => Kind::ScalarCurv,
            "phi" => Kind::Phi,
            "Sphi" => Kind::SymPhi,
            "g" => Kind::Metric,
            "gi" => Kind::InverseMetric,
            _ => {
                self.lex.pos = start;
                return Err(self.lex.error(format!("unknown tensor `{name}`")));
            }
        };
        let indices = if kind == Kind::ScalarCurv {
            Vec::new()
        } else {
            self.index_list(names)?
        };
        let order = if kind.is_phi() { indices.len() as u8 } else { 0 };
        Ok(Factor {
            kind,
            order,
            flavor,
            indices,
        })
    }
}

fn parse_terms(text: &str) -> Result<Vec<(Contraction, BTreeMap<String, Label>)>, ParseError> {
    let mut parser = Parser {
        lex: Lexer::new(text),
    };
    if parser.lex.peek().is_none() {
        return Err(parser.lex.error("empty expression"));
    }
    let terms = parser.expression()?;
    for (t, (term, _)) in terms.iter().enumerate() {
        term.validate()
            .map_err(|source| ParseError::Term { term: t, source })?;
    }
    Ok(terms)
}

/// Parses a combination of complete contractions. Index labels are numbered
/// per term in order of first appearance; explicit metrics are kept (see
/// [`crate::canon::reduce`]).
pub fn parse(text: &str) -> Result<LinearCombination, ParseError> {
    let terms = parse_terms(text)?;
    let mut out = Vec::with_capacity(terms.len());
    for (t, (term, names)) in terms.into_iter().enumerate() {
        if let Some(free) = term.free_labels().first() {
            let name = names
                .iter()
                .find(|(_, &l)| l == *free)
                .map(|(n, _)| n.clone())
                .unwrap_or_default();
            return Err(ParseError::Unbalanced { term: t, name });
        }
        if !term.coeff.is_zero() {
            out.push(term);
        }
    }
    LinearCombination::new(out).map_err(|source| ParseError::Term { term: 0, source })
}

/// Parses a combination that may carry free indices. Free names are shared
/// across terms; the map from names to labels is returned.
pub fn parse_tensor(text: &str) -> Result<(LinearCombination, BTreeMap<String, Label>), ParseError> {
    let terms = parse_terms(text)?;
    // Free names are renumbered consistently across terms, dummies after them.
    let mut free_names: BTreeMap<String, Label> = BTreeMap::new();
    for (term, names) in &terms {
        let free = term.free_labels();
        for (name, label) in names {
            if free.contains(label) {
                let next = free_names.len() as Label;
                free_names.entry(name.clone()).or_insert(next);
            }
        }
    }
    let base = free_names.len() as Label;
    let mut out = Vec::new();
    for (term, names) in terms {
        let free = term.free_labels();
        let map: BTreeMap<Label, Label> = names
            .iter()
            .map(|(name, &l)| {
                if free.contains(&l) {
                    (l, free_names[name])
                } else {
                    (l, base + l)
                }
            })
            .collect();
        if !term.coeff.is_zero() {
            out.push(term.relabel(&map));
        }
    }
    let lc = LinearCombination::new(out).map_err(|source| ParseError::Term { term: 0, source })?;
    Ok((lc, free_names))
}

const NAMES: [&str; 25] = [
    "i", "j", "k", "l", "m", "n", "p", "q", "r", "s", "t", "u", "v", "w", "x", "y", "z", "a",
    "b", "c", "d", "e", "f", "h", "o",
];

/// Name of the `rank`-th index of a term.
pub fn index_name(rank: usize) -> String {
    let base = NAMES[rank % NAMES.len()];
    match rank / NAMES.len() {
        0 => base.to_string(),
        round => format!("{base}{round}"),
    }
}

fn factor_text(f: &Factor, name: &mut impl FnMut(Label) -> String) -> String {
    let list = |labels: &[Label], name: &mut dyn FnMut(Label) -> String| {
        let parts: Vec<String> = labels.iter().map(|&l| name(l)).collect();
        format!("[{}]", parts.join(","))
    };
    let flavored = |base: &str| {
        if f.flavor == 0 {
            base.to_string()
        } else {
            format!("{base}_{}", f.flavor)
        }
    };
    match f.kind {
        Kind::Phi => format!("{}{}", flavored("phi"), list(&f.indices, name)),
        Kind::SymPhi => format!("{}{}", flavored("Sphi"), list(&f.indices, name)),
        _ => {
            let m = f.order as usize;
            let head = match f.kind {
                Kind::Riemann => "R",
                Kind::Weyl => "W",
                Kind::Schouten => "P",
                Kind::Ricci => "Ric",
                Kind::ScalarCurv => "Scal",
                Kind::Metric => "g",
                Kind::InverseMetric => "gi",
                Kind::Phi | Kind::SymPhi => unreachable!(),
            };
            let derivs = if m > 0 {
                Some(list(&f.indices[..m], name))
            } else {
                None
            };
            let base = if f.kind == Kind::ScalarCurv {
                head.to_string()
            } else {
                format!("{head}{}", list(&f.indices[m..], name))
            };
            match derivs {
                Some(d) => format!("D{d}({base})"),
                None => base,
            }
        }
    }
}

/// Product part of a term (`R[i,j,k,l]*R[i,j,k,l]`), empty for constants.
/// Index names follow first appearance; free labels use `free_names` if given.
pub fn product_text(c: &Contraction, free_names: Option<&BTreeMap<Label, String>>) -> String {
    let mut assigned: BTreeMap<Label, String> = BTreeMap::new();
    let mut taken: Vec<String> = free_names
        .map(|m| m.values().cloned().collect())
        .unwrap_or_default();
    let mut rank = 0;
    let mut name = |l: Label| -> String {
        if let Some(n) = free_names.and_then(|m| m.get(&l)) {
            return n.clone();
        }
        assigned
            .entry(l)
            .or_insert_with(|| loop {
                let candidate = index_name(rank);
                rank += 1;
                if !taken.contains(&candidate) {
                    taken.push(candidate.clone());
                    break candidate;
                }
            })
            .clone()
    };
    let parts: Vec<String> = c.factors.iter().map(|f| factor_text(f, &mut name)).collect();
    parts.join("*")
}

fn write_terms(lc: &LinearCombination, free_names: Option<&BTreeMap<Label, String>>) -> String {
    if lc.terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (t, term) in lc.terms.iter().enumerate() {
        let negative = term.coeff.is_negative();
        let magnitude = to_text(&term.coeff.abs());
        if t == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        if term.factors.is_empty() {
            out.push_str(&magnitude);
        } else {
            let _ = write!(out, "{magnitude} * {}", product_text(term, free_names));
        }
    }
    out
}

/// Deterministic text form. Terms are printed in the given order; pass a
/// reduced combination for canonical output.
pub fn print(lc: &LinearCombination) -> String {
    write_terms(lc, None)
}

/// Like [`print`] with free labels printed under the given names.
pub fn print_tensor(lc: &LinearCombination, free_names: &BTreeMap<Label, String>) -> String {
    write_terms(lc, Some(free_names))
}

pub fn print_term(c: &Contraction) -> String {
    write_terms(&LinearCombination::single(c.clone()), None)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema_version: u32,
    terms: Vec<Contraction>,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

pub fn to_json(lc: &LinearCombination) -> serde_json::Value {
    serde_json::to_value(Document {
        schema_version: SCHEMA_VERSION,
        terms: lc.terms.clone(),
    })
    .expect("combination serializes")
}

pub fn serialize(lc: &LinearCombination) -> String {
    serde_json::to_string_pretty(&to_json(lc)).expect("combination serializes")
}

pub fn deserialize(text: &str) -> Result<LinearCombination, DocumentError> {
    let probe: VersionProbe = serde_json::from_str(text)?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(DocumentError::Schema {
            found: probe.schema_version,
        });
    }
    let doc: Document = serde_json::from_str(text)?;
    let lc = LinearCombination::from_terms(doc.terms);
    lc.validate()?;
    Ok(lc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::reduce;
    use crate::rational::{int, rat};

    #[test]
    fn parses_full_curvature_square() {
        let lc = parse("R[i,j,k,l]*R[i,j,k,l]").unwrap();
        assert_eq!(lc.terms.len(), 1);
        assert_eq!(lc.terms[0].coeff, int(1));
        assert_eq!(
            lc.terms[0].factors,
            vec![Factor::riemann(0, 1, 2, 3), Factor::riemann(0, 1, 2, 3)]
        );
    }

    #[test]
    fn parses_derivatives_and_coefficients() {
        let lc = parse("-3/2 * D[m](Ric[i,j])*D[m](Ric[i,j]) + 2*D[a,a](Scal)*Scal").unwrap();
        assert_eq!(lc.terms[0].coeff, rat(-3, 2));
        assert_eq!(lc.terms[0].factors[0], Factor::new(Kind::Ricci, 1, vec![0, 1, 2]));
        assert_eq!(lc.terms[1].factors[0], Factor::new(Kind::ScalarCurv, 2, vec![0, 0]));
        let phi = parse("D[a](phi_2[b])*phi_2[a,b]").unwrap();
        assert_eq!(phi.terms[0].factors[0], Factor::phi(2, vec![0, 1]));
    }

    #[test]
    fn schouten_trace_square() {
        let lc = parse("P[a,a]*P[b,b]").unwrap();
        assert_eq!(
            lc.terms[0].factors,
            vec![Factor::schouten(0, 0), Factor::schouten(1, 1)]
        );
    }

    #[test]
    fn explicit_metric_trace_of_weyl_vanishes() {
        let lc = parse("W[i,j,k,l]*P[i,k]*g[j,l]").unwrap();
        assert!(reduce(&lc, 4).is_empty());
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(
            parse("R[i,j,k]*R[i,j,k]"),
            Err(ParseError::Term { .. })
        ));
        assert!(matches!(
            parse("P[a,b]"),
            Err(ParseError::Unbalanced { .. })
        ));
        match parse("R[i,j,k,l]*\n  Q[i,j,k,l]") {
            Err(ParseError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("").is_err());
    }

    #[test]
    fn prints_canonical_text() {
        assert_eq!(print(&LinearCombination::zero()), "0");
        let lc = parse("-3/2*R[i,j,k,l]*R[i,j,k,l]").unwrap();
        assert_eq!(print(&lc), "-3/2 * R[i,j,k,l]*R[i,j,k,l]");
        let lc = reduce(&parse("g[a,a]*P[b,c]*P[b,c] - P[a,a]*P[b,b]").unwrap(), 4);
        assert_eq!(print(&lc), "-1 * P[i,i]*P[j,j] + 4 * P[i,j]*P[i,j]");
        let constant = reduce(&parse("g[a,a]").unwrap(), 4);
        assert_eq!(print(&constant), "4");
    }

    #[test]
    fn round_trip_of_reduced_text() {
        let lc = reduce(
            &parse("D[a,b](phi[c])*phi[a]*D[b](R[c,d,e,f])*W[d,e,f,h]*phi[h] + Sphi_1[x,y,z]*phi_1[x]*phi_1[y]*phi_1[z]*Scal*Scal")
                .unwrap(),
            6,
        );
        assert_eq!(parse(&print(&lc)).unwrap(), lc);
    }

    #[test]
    fn tensors_with_free_indices() {
        let (lc, names) = parse_tensor("Ric[a,b] - R[c,a,b,c]").unwrap();
        assert_eq!(names.len(), 2);
        assert!(reduce(&lc, 4).is_empty());
    }

    #[test]
    fn document_round_trip() {
        let lc = parse("1/3 * W[i,j,k,l]*W[i,j,k,l] - phi_1[a]*phi_2[a]*Scal").unwrap();
        let doc = serialize(&lc);
        assert!(doc.contains("\"schema_version\": 1"));
        assert!(doc.contains("\"1/3\""));
        assert_eq!(deserialize(&doc).unwrap(), lc);
        let empty = serialize(&LinearCombination::zero());
        assert_eq!(deserialize(&empty).unwrap(), LinearCombination::zero());
    }

    #[test]
    fn document_errors() {
        let bad_kind = r#"{"schema_version":1,"terms":[{"coeff":"1","factors":[{"kind":"Torsion","deriv_order":0,"indices":[0,0]}]}]}"#;
        assert!(matches!(deserialize(bad_kind), Err(DocumentError::Json(_))));
        let bad_version = r#"{"schema_version":7,"terms":[]}"#;
        assert!(matches!(
            deserialize(bad_version),
            Err(DocumentError::Schema { found: 7 })
        ));
    }
}
