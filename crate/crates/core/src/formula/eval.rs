//! Exact evaluation over finite structure codes.
//!
//! Each node is evaluated once per structure into a table of its values over
//! all assignments of its free variables. Tables of shared nodes are reused.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use super::modulus::infer_modulus;
use super::{Exactness, Formula, FormulaError, Var};
use crate::rational::Rational;
use crate::structure::StructureCode;

/// Assignment of point indices to variables.
pub type Env = BTreeMap<Var, usize>;

/// How an evaluated value relates to the true value of the formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Tag {
    Exact,
    LowerBound,
    UpperBound,
    /// Approximations from both sides were mixed; no one-sided guarantee.
    Inexact,
}

impl Tag {
    /// Tag of a value that is monotone nondecreasing in two inputs.
    pub fn combine(self, other: Tag) -> Tag {
        match (self, other) {
            (Tag::Exact, t) | (t, Tag::Exact) => t,
            (a, b) if a == b => a,
            _ => Tag::Inexact,
        }
    }

    pub fn flip(self) -> Tag {
        match self {
            Tag::LowerBound => Tag::UpperBound,
            Tag::UpperBound => Tag::LowerBound,
            t => t,
        }
    }

    pub fn is_exact(self) -> bool {
        self == Tag::Exact
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::Exact => "exact",
            Tag::LowerBound => "lower-bound",
            Tag::UpperBound => "upper-bound",
            Tag::Inexact => "inexact",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub value: Rational,
    pub tag: Tag,
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            Tag::Exact => write!(f, "{}", self.value),
            t => write!(f, "{} ({t})", self.value),
        }
    }
}

/// Values of a formula over every assignment of its free variables.
///
/// `vars` is sorted; the assignment `(a_0, ..., a_{n-1})` is stored at the
/// row-major index `a_0·N^{n-1} + ... + a_{n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueTable {
    pub vars: Vec<Var>,
    pub size: usize,
    pub values: Vec<Rational>,
    pub tag: Tag,
}

impl ValueTable {
    fn constant(size: usize, value: Rational, tag: Tag) -> Self {
        ValueTable { vars: Vec::new(), size, values: vec![value], tag }
    }

    pub fn get(&self, env: &Env) -> Result<&Rational, FormulaError> {
        let mut idx = 0;
        for v in &self.vars {
            let i = *env.get(v).ok_or_else(|| FormulaError::UnboundVariable(v.clone()))?;
            if i >= self.size {
                return Err(FormulaError::IndexOutOfRange { index: i, size: self.size });
            }
            idx = idx * self.size + i;
        }
        Ok(&self.values[idx])
    }

    /// All assignments in storage order.
    pub fn envs(&self) -> impl Iterator<Item = Env> + '_ {
        crate::structure::tuples(self.size, self.vars.len())
            .map(|t| self.vars.iter().cloned().zip(t).collect())
    }

    fn strides_into(&self, out_vars: &[Var]) -> Vec<usize> {
        let n = self.vars.len();
        out_vars
            .iter()
            .map(|v| match self.vars.binary_search(v) {
                Ok(j) => self.size.pow((n - 1 - j) as u32),
                Err(_) => 0,
            })
            .collect()
    }
}

fn sorted_union<'a>(tables: impl IntoIterator<Item = &'a ValueTable>) -> Vec<Var> {
    let mut vars: Vec<Var> = tables.into_iter().flat_map(|t| t.vars.iter().cloned()).collect();
    vars.sort();
    vars.dedup();
    vars
}

/// Calls `visit(offsets)` for every cell of the product over `dims` axes of
/// length `size`, where `offsets[t]` is the running offset into input `t`.
fn odometer(size: usize, strides: &[Vec<usize>], mut visit: impl FnMut(&[usize])) {
    let axes = strides.first().map_or(0, Vec::len);
    let mut digits = vec![0usize; axes];
    let mut offsets = vec![0usize; strides.len()];
    loop {
        visit(&offsets);
        let mut a = axes;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            digits[a] += 1;
            for (o, s) in offsets.iter_mut().zip(strides) {
                *o += s[a];
            }
            if digits[a] < size {
                break;
            }
            for (o, s) in offsets.iter_mut().zip(strides) {
                *o -= s[a] * size;
            }
            digits[a] = 0;
        }
    }
}

fn broadcast(size: usize, inputs: &[&ValueTable], tag: Tag, mut op: impl FnMut(&[&Rational]) -> Rational) -> ValueTable {
    let vars = sorted_union(inputs.iter().copied());
    let strides: Vec<Vec<usize>> = inputs.iter().map(|t| t.strides_into(&vars)).collect();
    let mut values = Vec::with_capacity(size.pow(vars.len() as u32));
    let mut args = Vec::with_capacity(inputs.len());
    odometer(size, &strides, |offs| {
        args.clear();
        args.extend(inputs.iter().zip(offs).map(|(t, &o)| &t.values[o]));
        values.push(op(&args));
    });
    ValueTable { vars, size, values, tag }
}

fn node_key(f: &Formula) -> usize {
    f as *const Formula as usize
}

struct Evaluator<'p> {
    p: &'p StructureCode,
    memo: HashMap<usize, Arc<ValueTable>>,
}

impl Evaluator<'_> {
    fn table(&mut self, f: &Formula) -> Result<Arc<ValueTable>, FormulaError> {
        if let Some(t) = self.memo.get(&node_key(f)) {
            return Ok(t.clone());
        }
        let n = self.p.size();
        let t = match f {
            Formula::Dist { left, right, truncated } => {
                let value = |i: usize, j: usize| {
                    if *truncated {
                        self.p.dhat(i, j)
                    } else {
                        self.p.d(i, j).clone()
                    }
                };
                if left == right {
                    ValueTable { vars: vec![left.clone()], size: n, values: vec![Rational::zero(); n], tag: Tag::Exact }
                } else {
                    let (a, b) = if left < right { (left, right) } else { (right, left) };
                    let values = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| value(i, j)).collect();
                    ValueTable { vars: vec![a.clone(), b.clone()], size: n, values, tag: Tag::Exact }
                }
            }
            Formula::Atom { pred, args } => {
                let pos = self
                    .p
                    .signature()
                    .position(pred)
                    .ok_or_else(|| FormulaError::UnknownPredicate(pred.clone()))?;
                let arity = self.p.signature().predicates()[pos].arity;
                if arity != args.len() {
                    return Err(FormulaError::ArityMismatch { pred: pred.clone(), expected: arity, found: args.len() });
                }
                let mut vars = args.clone();
                vars.sort();
                vars.dedup();
                let slots: Vec<usize> = args.iter().map(|a| vars.binary_search(a).unwrap()).collect();
                let mut point = vec![0; args.len()];
                let values = crate::structure::tuples(n, vars.len())
                    .map(|assign| {
                        for (pt, &s) in point.iter_mut().zip(&slots) {
                            *pt = assign[s];
                        }
                        self.p.pred_value(pos, &point).clone()
                    })
                    .collect();
                ValueTable { vars, size: n, values, tag: Tag::Exact }
            }
            Formula::Const(c) => ValueTable::constant(n, c.clone(), Tag::Exact),
            Formula::Add(a, b) | Formula::Sub(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => {
                let (a, b) = (self.table(a)?, self.table(b)?);
                let (tag, op): (Tag, fn(&Rational, &Rational) -> Rational) = match f {
                    Formula::Add(..) => (a.tag.combine(b.tag), |x, y| x + y),
                    Formula::Sub(..) => (a.tag.combine(b.tag.flip()), |x, y| x - y),
                    Formula::Min(..) => (a.tag.combine(b.tag), |x, y| x.clone().min_of(y.clone())),
                    _ => (a.tag.combine(b.tag), |x, y| x.clone().max_of(y.clone())),
                };
                broadcast(n, &[&a, &b], tag, |v| op(v[0], v[1]))
            }
            Formula::Scale(c, a) => {
                if c.is_negative() {
                    return Err(FormulaError::NegativeScale(c.clone()));
                }
                let a = self.table(a)?;
                ValueTable { values: a.values.iter().map(|v| v * c).collect(), ..(*a).clone() }
            }
            Formula::Abs(a) => {
                let a = self.table(a)?;
                let tag = if a.tag.is_exact() { Tag::Exact } else { Tag::Inexact };
                ValueTable { values: a.values.iter().map(Rational::abs).collect(), tag, ..(*a).clone() }
            }
            Formula::Sup(x, body) | Formula::Inf(x, body) => {
                let body = self.table(body)?;
                let Ok(pos) = body.vars.binary_search(x) else {
                    self.memo.insert(node_key(f), body.clone());
                    return Ok(body);
                };
                let is_sup = matches!(f, Formula::Sup(..));
                let mut vars = body.vars.clone();
                vars.remove(pos);
                let strides = vec![body.strides_into(&vars)];
                let step = n.pow((body.vars.len() - 1 - pos) as u32);
                let mut values = Vec::with_capacity(n.pow(vars.len() as u32));
                odometer(n, &strides, |offs| {
                    let cells = (0..n).map(|i| &body.values[offs[0] + i * step]);
                    let best = if is_sup { cells.max() } else { cells.min() };
                    values.push(best.expect("nonempty structure").clone());
                });
                ValueTable { vars, size: n, values, tag: body.tag }
            }
            Formula::Join(fam) | Formula::Meet(fam) => {
                if fam.members.is_empty() {
                    return Err(FormulaError::EmptyFamily);
                }
                let is_join = matches!(f, Formula::Join(_));
                let members = fam.members.iter().map(|m| self.table(m)).collect::<Result<Vec<_>, _>>()?;
                let mut tag = members.iter().fold(Tag::Exact, |t, m| t.combine(m.tag));
                if fam.exactness == Exactness::PrefixOnly {
                    tag = tag.combine(if is_join { Tag::LowerBound } else { Tag::UpperBound });
                }
                let refs: Vec<&ValueTable> = members.iter().map(|m| &**m).collect();
                broadcast(n, &refs, tag, |v| {
                    let it = v.iter().copied();
                    if is_join { it.max() } else { it.min() }.unwrap().clone()
                })
            }
        };
        let t = Arc::new(t);
        self.memo.insert(node_key(f), t.clone());
        Ok(t)
    }
}

/// Table of values of `f` over all assignments of its free variables.
pub fn eval_table(f: &Formula, p: &StructureCode) -> Result<Arc<ValueTable>, FormulaError> {
    Evaluator { p, memo: HashMap::new() }.table(f)
}

/// Value of `f` in `p` under `env`, which must cover the free variables.
pub fn eval(f: &Formula, p: &StructureCode, env: &Env) -> Result<Evaluation, FormulaError> {
    if let Some(&i) = env.values().find(|&&i| i >= p.size()) {
        return Err(FormulaError::IndexOutOfRange { index: i, size: p.size() });
    }
    let table = eval_table(f, p)?;
    Ok(Evaluation { value: table.get(env)?.clone(), tag: table.tag })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub assignments: usize,
    pub pairs_checked: usize,
}

/// Exhaustively checks the inferred modulus and value bound of `f` on `p`.
pub fn lipschitz_audit(f: &Formula, p: &StructureCode) -> Result<AuditReport, FormulaError> {
    let modulus = infer_modulus(f, p.signature())?;
    let table = eval_table(f, p)?;
    if !table.tag.is_exact() {
        return Err(FormulaError::NotExact(table.tag));
    }
    let envs: Vec<Env> = table.envs().collect();
    let consts: Vec<Rational> = table.vars.iter().map(|v| modulus.constant(v)).collect();
    for (env, value) in envs.iter().zip(&table.values) {
        if value.abs() > modulus.value_bound {
            return Err(FormulaError::ValueBoundViolation {
                env: env.clone(),
                value: value.clone(),
                bound: modulus.value_bound.clone(),
            });
        }
    }
    let mut pairs = 0;
    for (i, (e1, v1)) in envs.iter().zip(&table.values).enumerate() {
        for (e2, v2) in envs.iter().zip(&table.values).skip(i + 1) {
            pairs += 1;
            let allowed: Rational = table
                .vars
                .iter()
                .zip(&consts)
                .map(|(v, c)| c * &p.dhat(e1[v], e2[v]))
                .sum();
            if (v1 - v2).abs() > allowed {
                return Err(FormulaError::LipschitzViolation {
                    env: e1.clone(),
                    other: e2.clone(),
                    lhs: v1.clone(),
                    rhs: v2.clone(),
                    allowed,
                });
            }
        }
    }
    Ok(AuditReport { assignments: envs.len(), pairs_checked: pairs })
}
