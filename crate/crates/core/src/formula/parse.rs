//! S-expression reader for formulas.
//!
//! ```text
//! (d x y) (dhat x y) (pred NAME x1 ... xk) (const p/q)
//! (add f g) (sub f g) (scale p/q f) (min f g) (max f g) (abs f)
//! (sup x f) (inf x f)
//! (join [:lower-bound-only] [x1 c1 ... xn cn | bound] f1 f2 ...)
//! (meet [:upper-bound-only] [x1 c1 ... xn cn | bound] f1 f2 ...)
//! ```
//!
//! The bracketed modulus declaration of a family may be omitted, in which
//! case it is inferred from the members.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::modulus::infer_modulus;
use super::{Exactness, Family, Formula, FormulaError, ModulusVector, Var};
use crate::rational::Rational;
use crate::structure::Signature;

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    OpenBracket,
    CloseBracket,
    Word(&'a str),
}

fn tokenize(text: &str) -> Vec<(Tok<'_>, usize)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => out.push((Tok::Open, i)),
            b')' => out.push((Tok::Close, i)),
            b'[' => out.push((Tok::OpenBracket, i)),
            b']' => out.push((Tok::CloseBracket, i)),
            c if c.is_ascii_whitespace() => {}
            _ => {
                let start = i;
                while i < bytes.len() && !b"()[]".contains(&bytes[i]) && !bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                out.push((Tok::Word(&text[start..i]), start));
                continue;
            }
        }
        i += 1;
    }
    out
}

struct Parser<'a, 's> {
    toks: Vec<(Tok<'a>, usize)>,
    pos: usize,
    end: usize,
    sig: &'s Signature,
}

fn syntax(position: usize, message: impl Into<String>) -> FormulaError {
    FormulaError::Syntax { position, message: message.into() }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

impl<'a> Parser<'a, '_> {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn next(&mut self) -> Result<(Tok<'a>, usize), FormulaError> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| syntax(self.end, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn expect_close(&mut self) -> Result<(), FormulaError> {
        match self.next()? {
            (Tok::Close, _) => Ok(()),
            (_, p) => Err(syntax(p, "expected `)`")),
        }
    }

    fn word(&mut self, what: &str) -> Result<(&'a str, usize), FormulaError> {
        match self.next()? {
            (Tok::Word(w), p) => Ok((w, p)),
            (_, p) => Err(syntax(p, format!("expected {what}"))),
        }
    }

    fn var(&mut self) -> Result<Var, FormulaError> {
        let (w, p) = self.word("a variable")?;
        if !is_identifier(w) {
            return Err(syntax(p, format!("`{w}` is not a variable name")));
        }
        Ok(Var::new(w))
    }

    fn rational(&mut self) -> Result<Rational, FormulaError> {
        let (w, p) = self.word("a rational")?;
        w.parse().map_err(|e| syntax(p, format!("{e}")))
    }

    fn formula(&mut self) -> Result<Arc<Formula>, FormulaError> {
        match self.next()? {
            (Tok::Open, _) => {}
            (_, p) => return Err(syntax(p, "expected `(`")),
        }
        let (head, head_pos) = self.word("an operator")?;
        let f = match head {
            "d" | "dhat" => {
                let (x, y) = (self.var()?, self.var()?);
                Arc::new(Formula::Dist { left: x, right: y, truncated: head == "dhat" })
            }
            "pred" => {
                let (name, _) = self.word("a predicate name")?;
                let mut args = Vec::new();
                while let Some(Tok::Word(_)) = self.peek() {
                    args.push(self.var()?);
                }
                let symbol = self
                    .sig
                    .get(name)
                    .ok_or_else(|| FormulaError::UnknownPredicate(name.to_string()))?;
                if symbol.arity != args.len() {
                    return Err(FormulaError::ArityMismatch {
                        pred: name.to_string(),
                        expected: symbol.arity,
                        found: args.len(),
                    });
                }
                Arc::new(Formula::Atom { pred: name.to_string(), args })
            }
            "const" => Formula::constant(self.rational()?),
            "add" | "sub" | "min" | "max" => {
                let f = self.formula()?;
                let g = self.formula()?;
                match head {
                    "add" => Formula::add(f, g),
                    "sub" => Formula::sub(f, g),
                    "min" => Formula::min(f, g),
                    _ => Formula::max(f, g),
                }
            }
            "scale" => {
                let at = self.offset();
                let c = self.rational()?;
                if c.is_negative() {
                    return Err(syntax(at, "scale factor must be nonnegative"));
                }
                Formula::scale(c, self.formula()?)
            }
            "abs" => Formula::abs(self.formula()?),
            "sup" | "inf" => {
                let x = self.var()?;
                let body = self.formula()?;
                if head == "sup" {
                    Formula::sup(x, body)
                } else {
                    Formula::inf(x, body)
                }
            }
            "join" | "meet" => self.family(head == "join")?,
            other => return Err(syntax(head_pos, format!("unknown operator `{other}`"))),
        };
        self.expect_close()?;
        Ok(f)
    }

    fn family(&mut self, is_join: bool) -> Result<Arc<Formula>, FormulaError> {
        let marker = if is_join { ":lower-bound-only" } else { ":upper-bound-only" };
        let mut exactness = Exactness::Exact;
        if let Some(Tok::Word(w)) = self.peek() {
            if *w == marker {
                exactness = Exactness::PrefixOnly;
                self.pos += 1;
            } else if w.starts_with(':') {
                return Err(syntax(self.offset(), format!("unknown marker `{w}`")));
            }
        }
        let declared = if let Some(Tok::OpenBracket) = self.peek() {
            self.pos += 1;
            Some(self.declaration()?)
        } else {
            None
        };
        let mut members = Vec::new();
        while let Some(Tok::Open) = self.peek() {
            members.push(self.formula()?);
        }
        if members.is_empty() {
            return Err(syntax(self.offset(), "family needs at least one member"));
        }
        let declared = match declared {
            Some(d) => d,
            None => {
                let mut acc = ModulusVector::default();
                for m in &members {
                    acc = acc.pointwise_max(&infer_modulus(m, self.sig)?);
                }
                acc
            }
        };
        let fam = Family { members, exactness, declared };
        Ok(Arc::new(if is_join { Formula::Join(fam) } else { Formula::Meet(fam) }))
    }

    fn declaration(&mut self) -> Result<ModulusVector, FormulaError> {
        let mut lipschitz = BTreeMap::new();
        loop {
            let (w, p) = self.word("a variable or `|`")?;
            if w == "|" {
                break;
            }
            if !is_identifier(w) {
                return Err(syntax(p, format!("`{w}` is not a variable name")));
            }
            let c = self.rational()?;
            if c.is_negative() {
                return Err(syntax(p, "Lipschitz constants must be nonnegative"));
            }
            if lipschitz.insert(Var::new(w), c).is_some() {
                return Err(syntax(p, format!("`{w}` declared twice")));
            }
        }
        let value_bound = self.rational()?;
        if value_bound.is_negative() {
            return Err(syntax(self.offset(), "value bound must be nonnegative"));
        }
        match self.next()? {
            (Tok::CloseBracket, _) => Ok(ModulusVector { lipschitz, value_bound }),
            (_, p) => Err(syntax(p, "expected `]`")),
        }
    }
}

/// Parses a formula, resolving predicate names against `sig`.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Arc<Formula>, FormulaError> {
    let mut parser = Parser { toks: tokenize(text), pos: 0, end: text.len(), sig };
    let f = parser.formula()?;
    if parser.pos != parser.toks.len() {
        return Err(syntax(parser.offset(), "trailing input"));
    }
    Ok(f)
}
