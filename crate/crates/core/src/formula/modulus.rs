//! Static modulus analysis.
//!
//! Every well-formed formula is Lipschitz in each free variable with respect
//! to the truncated metric, and bounded. The analysis computes both
//! structurally. Values are tracked as an interval `[lo, hi]` so that clamping
//! with `min`/`max` against constants is visible to the analysis; the reported
//! value bound is `max(|lo|, |hi|)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use super::{Formula, FormulaError, Var};
use crate::rational::Rational;
use crate::structure::Signature;

/// Per-variable Lipschitz constants (against `min(d, 1)`) and a bound on the
/// absolute value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModulusVector {
    pub lipschitz: BTreeMap<Var, Rational>,
    pub value_bound: Rational,
}

impl ModulusVector {
    pub fn uniform(vars: impl IntoIterator<Item = Var>, constant: Rational, value_bound: Rational) -> Self {
        ModulusVector {
            lipschitz: vars.into_iter().map(|v| (v, constant.clone())).collect(),
            value_bound,
        }
    }

    /// Constant for `v`; absent variables have constant zero.
    pub fn constant(&self, v: &Var) -> Rational {
        self.lipschitz.get(v).cloned().unwrap_or_default()
    }

    pub fn pointwise_max(&self, other: &ModulusVector) -> ModulusVector {
        let mut lipschitz = self.lipschitz.clone();
        for (v, c) in &other.lipschitz {
            let e = lipschitz.entry(v.clone()).or_default();
            if c > e {
                *e = c.clone();
            }
        }
        ModulusVector {
            lipschitz,
            value_bound: self.value_bound.clone().max_of(other.value_bound.clone()),
        }
    }

    /// True when every variable of `self` is declared in `other` with a
    /// constant at least as large, and the bound is no larger.
    pub fn dominated_by(&self, other: &ModulusVector) -> bool {
        self.value_bound <= other.value_bound
            && self
                .lipschitz
                .iter()
                .all(|(v, c)| other.lipschitz.get(v).is_some_and(|d| c <= d))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Shape {
    pub lip: BTreeMap<Var, Rational>,
    pub lo: Rational,
    pub hi: Rational,
}

impl Shape {
    fn modulus(&self) -> ModulusVector {
        ModulusVector {
            lipschitz: self.lip.clone(),
            value_bound: self.lo.abs().max_of(self.hi.abs()),
        }
    }
}

fn key(f: &Formula) -> usize {
    f as *const Formula as usize
}

fn merge_lip(a: &BTreeMap<Var, Rational>, b: &BTreeMap<Var, Rational>, sum: bool) -> BTreeMap<Var, Rational> {
    let mut out = a.clone();
    for (v, c) in b {
        match out.get_mut(v) {
            Some(e) if sum => *e = &*e + c,
            Some(e) => {
                if c > e {
                    *e = c.clone()
                }
            }
            None => {
                out.insert(v.clone(), c.clone());
            }
        }
    }
    out
}

/// Memoizing analyzer; one per traversal of a (possibly shared) formula.
pub(crate) struct Analyzer<'s> {
    sig: &'s Signature,
    shapes: HashMap<usize, Shape>,
    free: HashMap<usize, Arc<BTreeSet<Var>>>,
    binders: HashMap<usize, Arc<BTreeSet<Var>>>,
}

impl<'s> Analyzer<'s> {
    pub fn new(sig: &'s Signature) -> Self {
        Analyzer { sig, shapes: HashMap::new(), free: HashMap::new(), binders: HashMap::new() }
    }

    pub fn shape(&mut self, f: &Formula) -> Result<Shape, FormulaError> {
        if let Some(s) = self.shapes.get(&key(f)) {
            return Ok(s.clone());
        }
        let s = match f {
            Formula::Dist { left, right, truncated } => {
                if !truncated {
                    return Err(FormulaError::RawDistance);
                }
                if left == right {
                    Shape {
                        lip: [(left.clone(), Rational::zero())].into(),
                        lo: Rational::zero(),
                        hi: Rational::zero(),
                    }
                } else {
                    Shape {
                        lip: [(left.clone(), Rational::one()), (right.clone(), Rational::one())].into(),
                        lo: Rational::zero(),
                        hi: Rational::one(),
                    }
                }
            }
            Formula::Atom { pred, args } => {
                let sym = self
                    .sig
                    .get(pred)
                    .ok_or_else(|| FormulaError::UnknownPredicate(pred.clone()))?;
                if sym.arity != args.len() {
                    return Err(FormulaError::ArityMismatch {
                        pred: pred.clone(),
                        expected: sym.arity,
                        found: args.len(),
                    });
                }
                let mut lip: BTreeMap<Var, Rational> = BTreeMap::new();
                for (a, c) in args.iter().zip(&sym.lipschitz) {
                    let e = lip.entry(a.clone()).or_default();
                    *e = &*e + c;
                }
                Shape { lip, lo: -&sym.bound, hi: sym.bound.clone() }
            }
            Formula::Const(c) => Shape { lip: BTreeMap::new(), lo: c.clone(), hi: c.clone() },
            Formula::Add(a, b) => {
                let (a, b) = (self.shape(a)?, self.shape(b)?);
                Shape { lip: merge_lip(&a.lip, &b.lip, true), lo: a.lo + b.lo, hi: a.hi + b.hi }
            }
            Formula::Sub(a, b) => {
                let (a, b) = (self.shape(a)?, self.shape(b)?);
                Shape { lip: merge_lip(&a.lip, &b.lip, true), lo: a.lo - b.hi, hi: a.hi - b.lo }
            }
            Formula::Scale(c, a) => {
                if c.is_negative() {
                    return Err(FormulaError::NegativeScale(c.clone()));
                }
                let a = self.shape(a)?;
                Shape {
                    lip: a.lip.iter().map(|(v, l)| (v.clone(), l * c)).collect(),
                    lo: &a.lo * c,
                    hi: &a.hi * c,
                }
            }
            Formula::Min(a, b) => {
                let (a, b) = (self.shape(a)?, self.shape(b)?);
                Shape { lip: merge_lip(&a.lip, &b.lip, false), lo: a.lo.min_of(b.lo), hi: a.hi.min_of(b.hi) }
            }
            Formula::Max(a, b) => {
                let (a, b) = (self.shape(a)?, self.shape(b)?);
                Shape { lip: merge_lip(&a.lip, &b.lip, false), lo: a.lo.max_of(b.lo), hi: a.hi.max_of(b.hi) }
            }
            Formula::Abs(a) => {
                let a = self.shape(a)?;
                let (lo, hi) = if !a.lo.is_negative() {
                    (a.lo, a.hi)
                } else if !a.hi.is_negative() && !a.hi.is_zero() {
                    (Rational::zero(), (-&a.lo).max_of(a.hi))
                } else {
                    (-&a.hi, -&a.lo)
                };
                Shape { lip: a.lip, lo, hi }
            }
            Formula::Sup(x, a) | Formula::Inf(x, a) => {
                let mut a = self.shape(a)?;
                a.lip.remove(x);
                a
            }
            Formula::Join(fam) | Formula::Meet(fam) => {
                let b = fam.declared.value_bound.clone();
                Shape { lip: fam.declared.lipschitz.clone(), lo: -&b, hi: b }
            }
        };
        self.shapes.insert(key(f), s.clone());
        Ok(s)
    }

    pub fn free_vars(&mut self, f: &Formula) -> Arc<BTreeSet<Var>> {
        if let Some(s) = self.free.get(&key(f)) {
            return s.clone();
        }
        let s: BTreeSet<Var> = match f {
            Formula::Dist { left, right, .. } => [left.clone(), right.clone()].into(),
            Formula::Atom { args, .. } => args.iter().cloned().collect(),
            Formula::Const(_) => BTreeSet::new(),
            Formula::Add(a, b) | Formula::Sub(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => {
                let mut s = (*self.free_vars(a)).clone();
                s.extend(self.free_vars(b).iter().cloned());
                s
            }
            Formula::Scale(_, a) | Formula::Abs(a) => (*self.free_vars(a)).clone(),
            Formula::Sup(x, a) | Formula::Inf(x, a) => {
                let mut s = (*self.free_vars(a)).clone();
                s.remove(x);
                s
            }
            Formula::Join(fam) | Formula::Meet(fam) => {
                let mut s = BTreeSet::new();
                for m in &fam.members {
                    s.extend(self.free_vars(m).iter().cloned());
                }
                s
            }
        };
        let s = Arc::new(s);
        self.free.insert(key(f), s.clone());
        s
    }

    fn binders(&mut self, f: &Formula) -> Arc<BTreeSet<Var>> {
        if let Some(s) = self.binders.get(&key(f)) {
            return s.clone();
        }
        let s: BTreeSet<Var> = match f {
            Formula::Dist { .. } | Formula::Atom { .. } | Formula::Const(_) => BTreeSet::new(),
            Formula::Add(a, b) | Formula::Sub(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => {
                let mut s = (*self.binders(a)).clone();
                s.extend(self.binders(b).iter().cloned());
                s
            }
            Formula::Scale(_, a) | Formula::Abs(a) => (*self.binders(a)).clone(),
            Formula::Sup(x, a) | Formula::Inf(x, a) => {
                let mut s = (*self.binders(a)).clone();
                s.insert(x.clone());
                s
            }
            Formula::Join(fam) | Formula::Meet(fam) => {
                let mut s = BTreeSet::new();
                for m in &fam.members {
                    s.extend(self.binders(m).iter().cloned());
                }
                s
            }
        };
        let s = Arc::new(s);
        self.binders.insert(key(f), s.clone());
        s
    }

    /// Binding and family checks for every node reachable from `f`.
    fn check_nodes(&mut self, f: &Formula, visited: &mut HashSet<usize>) -> Result<(), FormulaError> {
        if !visited.insert(key(f)) {
            return Ok(());
        }
        match f {
            Formula::Dist { .. } | Formula::Atom { .. } | Formula::Const(_) => {
                self.shape(f).map(drop).or_else(|e| match e {
                    // Raw distances are allowed in formulas that are only evaluated.
                    FormulaError::RawDistance => Ok(()),
                    e => Err(e),
                })
            }
            Formula::Add(a, b) | Formula::Sub(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => {
                self.check_nodes(a, visited)?;
                self.check_nodes(b, visited)
            }
            Formula::Scale(c, a) => {
                if c.is_negative() {
                    return Err(FormulaError::NegativeScale(c.clone()));
                }
                self.check_nodes(a, visited)
            }
            Formula::Abs(a) => self.check_nodes(a, visited),
            Formula::Sup(x, a) | Formula::Inf(x, a) => {
                if self.binders(a).contains(x) {
                    return Err(FormulaError::Shadowing(x.clone()));
                }
                self.check_nodes(a, visited)
            }
            Formula::Join(fam) | Formula::Meet(fam) => {
                if fam.members.is_empty() {
                    return Err(FormulaError::EmptyFamily);
                }
                for (i, m) in fam.members.iter().enumerate() {
                    self.check_nodes(m, visited)?;
                    let shape = self.shape(m)?;
                    if !shape.modulus().dominated_by(&fam.declared) {
                        return Err(FormulaError::ModulusExceedsDeclared { member: i });
                    }
                }
                Ok(())
            }
        }
    }
}

/// Structural modulus of `f`: per-free-variable Lipschitz constants against
/// the truncated metric and a value bound.
pub fn infer_modulus(f: &Formula, sig: &Signature) -> Result<ModulusVector, FormulaError> {
    Analyzer::new(sig).shape(f).map(|s| s.modulus())
}

/// Inferred value interval `[lo, hi]`.
pub fn infer_interval(f: &Formula, sig: &Signature) -> Result<(Rational, Rational), FormulaError> {
    Analyzer::new(sig).shape(f).map(|s| (s.lo, s.hi))
}

pub fn free_vars(f: &Formula) -> BTreeSet<Var> {
    let sig = Signature::metric_only();
    (*Analyzer::new(&sig).free_vars(f)).clone()
}

/// Checks variable binding and family moduli.
///
/// When `declared_free` is given, every free variable of `f` must belong to
/// it. Quantified variables may not rebind a variable that is already bound
/// in an enclosing scope or free in `f`.
pub fn check_wellformed(
    f: &Formula,
    sig: &Signature,
    declared_free: Option<&BTreeSet<Var>>,
) -> Result<(), FormulaError> {
    let mut an = Analyzer::new(sig);
    let free = an.free_vars(f);
    if let Some(declared) = declared_free {
        if let Some(v) = free.iter().find(|v| !declared.contains(*v)) {
            return Err(FormulaError::UnboundVariable(v.clone()));
        }
    }
    an.check_nodes(f, &mut HashSet::new())?;
    if let Some(v) = an.binders(f).intersection(&free).next() {
        return Err(FormulaError::Shadowing(v.clone()));
    }
    Ok(())
}
