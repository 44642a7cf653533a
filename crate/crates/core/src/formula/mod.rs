//! Continuous infinitary formulas over finite structure codes.
//!
//! Formulas are real-valued. The connectives are addition, subtraction,
//! nonnegative rational scaling, `min`, `max`, `abs` and constants; the
//! quantifiers are `sup` and `inf`; countable joins and meets are presented by
//! a finite prefix of members together with a declared modulus that every
//! member must respect.
//!
//! Subformulas are reference counted, so large generated formulas (see
//! [`crate::synthesis`]) can share structure. The evaluator and the static
//! analyses memoize on node identity and treat such formulas as DAGs.

mod eval;
mod modulus;
mod parse;
mod print;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::rational::Rational;

pub use eval::{eval, eval_table, lipschitz_audit, AuditReport, Env, Evaluation, Tag, ValueTable};
pub use modulus::{check_wellformed, free_vars, infer_interval, infer_modulus, ModulusVector};
pub use parse::parse_formula;

/// A variable name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// Whether the prefix of a family is its whole value on the structures it is
/// evaluated on, or only an approximation from one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exactness {
    Exact,
    /// For a join the prefix is a lower bound, for a meet an upper bound.
    PrefixOnly,
}

/// A finitely presented countable family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    pub members: Vec<Arc<Formula>>,
    pub exactness: Exactness,
    pub declared: ModulusVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Dist { left: Var, right: Var, truncated: bool },
    Atom { pred: String, args: Vec<Var> },
    Const(Rational),
    Add(Arc<Formula>, Arc<Formula>),
    Sub(Arc<Formula>, Arc<Formula>),
    /// Scaling by a nonnegative rational.
    Scale(Rational, Arc<Formula>),
    Min(Arc<Formula>, Arc<Formula>),
    Max(Arc<Formula>, Arc<Formula>),
    Abs(Arc<Formula>),
    Sup(Var, Arc<Formula>),
    Inf(Var, Arc<Formula>),
    Join(Family),
    Meet(Family),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{pred}` takes {expected} arguments, got {found}")]
    ArityMismatch { pred: String, expected: usize, found: usize },
    #[error("unbound variable `{0}`")]
    UnboundVariable(Var),
    #[error("quantifier over `{0}` shadows another binding")]
    Shadowing(Var),
    #[error("family member {member} exceeds the declared modulus")]
    ModulusExceedsDeclared { member: usize },
    #[error("family has no members")]
    EmptyFamily,
    #[error("negative scale factor {0}")]
    NegativeScale(Rational),
    #[error("the raw distance has no modulus against the truncated metric")]
    RawDistance,
    #[error("point {index} out of range for a structure of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("value is not exact ({0:?})")]
    NotExact(Tag),
    #[error("Lipschitz bound fails between {env:?} and {other:?}: |{lhs} - {rhs}| > {allowed}")]
    LipschitzViolation {
        env: BTreeMap<Var, usize>,
        other: BTreeMap<Var, usize>,
        lhs: Rational,
        rhs: Rational,
        allowed: Rational,
    },
    #[error("value {value} at {env:?} exceeds the inferred bound {bound}")]
    ValueBoundViolation { env: BTreeMap<Var, usize>, value: Rational, bound: Rational },
}

impl FormulaError {
    pub fn code(&self) -> &'static str {
        match self {
            FormulaError::Syntax { .. } => "SyntaxError",
            FormulaError::UnknownPredicate(_) => "UnknownPredicate",
            FormulaError::ArityMismatch { .. } => "ArityMismatch",
            FormulaError::UnboundVariable(_) => "UnboundVariable",
            FormulaError::Shadowing(_) => "Shadowing",
            FormulaError::ModulusExceedsDeclared { .. } => "ModulusExceedsDeclared",
            FormulaError::EmptyFamily => "EmptyFamily",
            FormulaError::NegativeScale(_) => "NegativeScale",
            FormulaError::RawDistance => "RawDistance",
            FormulaError::IndexOutOfRange { .. } => "IndexOutOfRange",
            FormulaError::NotExact(_) => "NotExact",
            FormulaError::LipschitzViolation { .. } => "LipschitzViolation",
            FormulaError::ValueBoundViolation { .. } => "ValueBoundViolation",
        }
    }
}

// Builders. They return `Arc` so generated formulas can share subterms.
impl Formula {
    pub fn dhat(x: impl Into<Var>, y: impl Into<Var>) -> Arc<Formula> {
        Arc::new(Formula::Dist { left: x.into(), right: y.into(), truncated: true })
    }

    pub fn dist(x: impl Into<Var>, y: impl Into<Var>) -> Arc<Formula> {
        Arc::new(Formula::Dist { left: x.into(), right: y.into(), truncated: false })
    }

    pub fn atom(pred: &str, args: Vec<Var>) -> Arc<Formula> {
        Arc::new(Formula::Atom { pred: pred.to_string(), args })
    }

    pub fn constant(c: Rational) -> Arc<Formula> {
        Arc::new(Formula::Const(c))
    }

    pub fn add(f: Arc<Formula>, g: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Add(f, g))
    }

    pub fn sub(f: Arc<Formula>, g: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Sub(f, g))
    }

    pub fn scale(c: Rational, f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Scale(c, f))
    }

    pub fn min(f: Arc<Formula>, g: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Min(f, g))
    }

    pub fn max(f: Arc<Formula>, g: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Max(f, g))
    }

    pub fn abs(f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Abs(f))
    }

    pub fn sup(x: impl Into<Var>, f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Sup(x.into(), f))
    }

    pub fn inf(x: impl Into<Var>, f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Inf(x.into(), f))
    }

    pub fn join(members: Vec<Arc<Formula>>, exactness: Exactness, declared: ModulusVector) -> Arc<Formula> {
        Arc::new(Formula::Join(Family { members, exactness, declared }))
    }

    pub fn meet(members: Vec<Arc<Formula>>, exactness: Exactness, declared: ModulusVector) -> Arc<Formula> {
        Arc::new(Formula::Meet(Family { members, exactness, declared }))
    }

    /// Binary `max` folded over a nonempty list.
    pub fn max_all(items: impl IntoIterator<Item = Arc<Formula>>) -> Option<Arc<Formula>> {
        items.into_iter().reduce(Formula::max)
    }

    /// Binary `min` folded over a nonempty list.
    pub fn min_all(items: impl IntoIterator<Item = Arc<Formula>>) -> Option<Arc<Formula>> {
        items.into_iter().reduce(Formula::min)
    }

    /// `sup` over each variable in turn, outermost first.
    pub fn sup_all(vars: &[Var], body: Arc<Formula>) -> Arc<Formula> {
        vars.iter().rev().fold(body, |acc, v| Formula::sup(v.clone(), acc))
    }

    /// True when the formula contains no quantifier and no family.
    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Dist { .. } | Formula::Atom { .. } | Formula::Const(_) => true,
            Formula::Add(f, g) | Formula::Sub(f, g) | Formula::Min(f, g) | Formula::Max(f, g) => {
                f.is_quantifier_free() && g.is_quantifier_free()
            }
            Formula::Scale(_, f) | Formula::Abs(f) => f.is_quantifier_free(),
            Formula::Sup(..) | Formula::Inf(..) | Formula::Join(_) | Formula::Meet(_) => false,
        }
    }

    /// Renames free variables. Bound variables are left alone; the caller
    /// must make sure the new names are not captured.
    pub fn rename(self: &Arc<Formula>, map: &BTreeMap<Var, Var>) -> Arc<Formula> {
        let r = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
        match &**self {
            Formula::Dist { left, right, truncated } => {
                Arc::new(Formula::Dist { left: r(left), right: r(right), truncated: *truncated })
            }
            Formula::Atom { pred, args } => {
                Arc::new(Formula::Atom { pred: pred.clone(), args: args.iter().map(r).collect() })
            }
            Formula::Const(_) => self.clone(),
            Formula::Add(f, g) => Formula::add(f.rename(map), g.rename(map)),
            Formula::Sub(f, g) => Formula::sub(f.rename(map), g.rename(map)),
            Formula::Min(f, g) => Formula::min(f.rename(map), g.rename(map)),
            Formula::Max(f, g) => Formula::max(f.rename(map), g.rename(map)),
            Formula::Scale(c, f) => Formula::scale(c.clone(), f.rename(map)),
            Formula::Abs(f) => Formula::abs(f.rename(map)),
            Formula::Sup(x, f) | Formula::Inf(x, f) => {
                let mut inner = map.clone();
                inner.remove(x);
                let body = f.rename(&inner);
                if matches!(&**self, Formula::Sup(..)) {
                    Formula::sup(x.clone(), body)
                } else {
                    Formula::inf(x.clone(), body)
                }
            }
            Formula::Join(fam) | Formula::Meet(fam) => {
                let members = fam.members.iter().map(|m| m.rename(map)).collect();
                let declared = ModulusVector {
                    lipschitz: fam.declared.lipschitz.iter().map(|(v, c)| (r(v), c.clone())).collect(),
                    value_bound: fam.declared.value_bound.clone(),
                };
                let fam = Family { members, exactness: fam.exactness, declared };
                Arc::new(if matches!(&**self, Formula::Join(_)) {
                    Formula::Join(fam)
                } else {
                    Formula::Meet(fam)
                })
            }
        }
    }
}
