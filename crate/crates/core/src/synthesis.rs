//! Lowering of Borel codes to formulas.
//!
//! For a code `A` and an arity `k` the lowering produces `φ_{A,k}(x_0, ...)`
//! whose value at `u` is `A^{*k}(p, u)`:
//!
//! * basic `θ` of support `s`: `sup_{w} θ(w) − k·max_{i<min(k,s)} d̂(x_i, w_i)`;
//! * `sup_n A_n`: the join of the lowerings of the `A_n`;
//! * `−B`: the join over `m` of `sup_{y_{<m}} −k·d̂(x, y) − φ_{B,m}(y)`.
//!
//! A lowered formula only mentions the first `min(k, s)` variables, where `s`
//! is the support of the code; later coordinates can always be matched
//! exactly and contribute nothing. For the same reason the quantifiers of the
//! negation case range over the first `min(m, s)` coordinates only.
//!
//! The negation case is a countable join. It is emitted as a finite prefix,
//! either long enough to be exact on a class of finite structures (see
//! [`truncation_bound`]) or of a fixed length and marked as a lower bound.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::ToPrimitive;

use crate::formula::{eval_table, Exactness, Formula, FormulaError, ModulusVector, Tag, Var};
use crate::rational::Rational;
use crate::structure::{tuples, Signature, StructureCode};
use crate::vaught::{z, AStarOracle, BorelCode, VaughtError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Code(#[from] VaughtError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("synthesized value {lhs} differs from the oracle value {rhs} at u = {u:?}")]
    Mismatch { u: Vec<usize>, lhs: Rational, rhs: Rational },
    #[error("prefix length {0} is too large")]
    PrefixTooLong(u128),
}

impl SynthesisError {
    pub fn code(&self) -> &'static str {
        match self {
            SynthesisError::Code(e) => e.code(),
            SynthesisError::Formula(e) => e.code(),
            SynthesisError::Mismatch { .. } => "Mismatch",
            SynthesisError::PrefixTooLong(_) => "BudgetExceeded",
        }
    }
}

/// The structures a certified prefix is exact on: at most `max_size` points
/// and every positive truncated distance at least `min_distance`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureClass {
    pub max_size: usize,
    pub min_distance: Option<Rational>,
}

impl StructureClass {
    pub fn of(p: &StructureCode) -> Self {
        StructureClass { max_size: p.size(), min_distance: p.min_positive_truncated_distance() }
    }

    /// Smallest class containing every structure in `ps`.
    pub fn covering<'a>(ps: impl IntoIterator<Item = &'a StructureCode>) -> Self {
        let mut class = StructureClass { max_size: 1, min_distance: None };
        for p in ps {
            class.max_size = class.max_size.max(p.size());
            class.min_distance = match (class.min_distance.take(), p.min_positive_truncated_distance()) {
                (Some(a), Some(b)) => Some(a.min_of(b)),
                (a, b) => a.or(b),
            };
        }
        class
    }

    pub fn contains(&self, p: &StructureCode) -> bool {
        p.size() <= self.max_size
            && match (p.min_positive_truncated_distance(), &self.min_distance) {
                (None, _) => true,
                (Some(d), Some(m)) => &d >= m,
                (Some(_), None) => false,
            }
    }
}

/// How many members of each negation-case join to emit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrefixPolicy {
    /// `multiplier · truncation_bound` members, exact on the class.
    Certified { class: StructureClass, multiplier: usize },
    /// A fixed number of members, marked as a lower bound.
    Fixed(usize),
}

impl PrefixPolicy {
    pub fn certified_for(p: &StructureCode) -> Self {
        PrefixPolicy::Certified { class: StructureClass::of(p), multiplier: 1 }
    }

    pub fn with_multiplier(self, multiplier: usize) -> Self {
        match self {
            PrefixPolicy::Certified { class, .. } => PrefixPolicy::Certified { class, multiplier },
            fixed => fixed,
        }
    }
}

/// `m* = max(N, s) + ⌈(2·M_A + k + 1)/δ⌉` for a structure with `N ≥ 2`
/// points and least positive truncated distance `δ`; `1` when `N < 2`.
///
/// Here `s` is the support of the negated code. From index `m*` on, the
/// members of the negation-case join all equal its supremum on `p`.
pub fn truncation_bound(p: &StructureCode, k: usize, bound: &Rational, support: usize) -> usize {
    truncation_bound_for(&StructureClass::of(p), k, bound, support)
}

pub fn truncation_bound_for(class: &StructureClass, k: usize, bound: &Rational, support: usize) -> usize {
    let Some(delta) = class.min_distance.as_ref().filter(|_| class.max_size >= 2) else {
        return 1;
    };
    let two = Rational::from_integer(2);
    let steps = ((&two * bound + Rational::from(k) + Rational::one()) / delta.clone()).ceil();
    let steps = steps.to_usize().expect("truncation bound fits in usize");
    class.max_size.max(support) + steps
}

fn var(level: usize, i: usize) -> Var {
    if level == 0 {
        Var::new(&format!("x{i}"))
    } else {
        Var::new(&format!("y{level}_{i}"))
    }
}

/// The variables `x_0, ..., x_{n-1}` of a lowered formula.
pub fn free_variables(n: usize) -> Vec<Var> {
    (0..n).map(|i| var(0, i)).collect()
}

struct Lowering<'a> {
    sig: &'a Signature,
    policy: &'a PrefixPolicy,
    cache: HashMap<(usize, usize, usize), Arc<Formula>>,
}

fn max_distance(level_x: usize, ys: &[Var], r: usize) -> Option<Arc<Formula>> {
    Formula::max_all((0..r).map(|i| Formula::dhat(var(level_x, i), ys[i].clone())))
}

/// `max(−M, f)`; the lowerings are never below `−M`, but the structural
/// interval of `f` reaches down to `−M − k`.
fn floor_at(bound: &Rational, f: Arc<Formula>) -> Arc<Formula> {
    Formula::max(Formula::constant(-bound), f)
}

impl Lowering<'_> {
    fn lower(&mut self, code: &BorelCode, k: usize, level: usize) -> Result<Arc<Formula>, SynthesisError> {
        let key = (code as *const BorelCode as usize, k, level);
        if let Some(f) = self.cache.get(&key) {
            return Ok(f.clone());
        }
        let bound = code.bound(self.sig)?;
        let s = code.support();
        let f = match code {
            BorelCode::Basic { theta, support } => {
                let ws: Vec<Var> = (0..*support).map(|i| Var::new(&format!("w{level}_{i}"))).collect();
                let renaming = (0..*support).map(|i| (z(i), ws[i].clone())).collect();
                let theta = theta.rename(&renaming);
                let r = k.min(s);
                match max_distance(level, &ws, r) {
                    Some(dist) if k > 0 => {
                        let body = Formula::sub(theta, Formula::scale(Rational::from(k), dist));
                        floor_at(&bound, Formula::sup_all(&ws, body))
                    }
                    _ => Formula::sup_all(&ws, theta),
                }
            }
            BorelCode::SupFamily(members) => {
                let lowered = members.iter().map(|m| self.lower(m, k, level)).collect::<Result<Vec<_>, _>>()?;
                let declared = ModulusVector::uniform((0..k.min(s)).map(|i| var(level, i)), Rational::from(k), bound);
                Formula::join(lowered, Exactness::Exact, declared)
            }
            BorelCode::Neg(inner) => {
                let (len, exactness) = match self.policy {
                    PrefixPolicy::Certified { class, multiplier } => {
                        let m = truncation_bound_for(class, k.min(s), &bound, s) as u128 * *multiplier as u128;
                        (usize::try_from(m).map_err(|_| SynthesisError::PrefixTooLong(m))?, Exactness::Exact)
                    }
                    PrefixPolicy::Fixed(n) => (*n, Exactness::PrefixOnly),
                };
                let ys: Vec<Var> = (0..s).map(|i| var(level + 1, i)).collect();
                let mut members = Vec::with_capacity(len.max(1));
                for m in 0..len.max(1) {
                    let quantified = &ys[..m.min(s)];
                    let phi = self.lower(inner, m, level + 1)?;
                    let r = k.min(m).min(s);
                    let body = match max_distance(level, ys.as_slice(), r) {
                        Some(dist) if k > 0 => {
                            let penalty = Formula::add(Formula::scale(Rational::from(k), dist), phi);
                            floor_at(&bound, Formula::sup_all(quantified, Formula::sub(Formula::constant(Rational::zero()), penalty)))
                        }
                        _ => Formula::sup_all(quantified, Formula::sub(Formula::constant(Rational::zero()), phi)),
                    };
                    members.push(body);
                }
                let declared = ModulusVector::uniform((0..k.min(s)).map(|i| var(level, i)), Rational::from(k), bound);
                Formula::join(members, exactness, declared)
            }
        };
        self.cache.insert(key, f.clone());
        Ok(f)
    }
}

/// `φ_{A,k}`. Its free variables are among `x_0, ..., x_{min(k,s)-1}`.
pub fn synthesize(code: &BorelCode, k: usize, sig: &Signature, policy: &PrefixPolicy) -> Result<Arc<Formula>, SynthesisError> {
    code.validate(sig)?;
    Lowering { sig, policy, cache: HashMap::new() }.lower(code, k, 0)
}

/// `φ_{A,0}`, a sentence whose value is `A(p)` whenever `A` is invariant.
pub fn synthesize_sentence(code: &BorelCode, sig: &Signature, policy: &PrefixPolicy) -> Result<Arc<Formula>, SynthesisError> {
    synthesize(code, 0, sig, policy)
}

/// Environment binding `x_i` to `u_i`.
pub fn env_for(u: &[usize]) -> crate::formula::Env {
    u.iter().enumerate().map(|(i, &p)| (var(0, i), p)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub u: Vec<usize>,
    pub formula_value: Rational,
    pub oracle_value: Rational,
}

/// Compares `φ_{A,k}(u)` with `A^{*k}(p, u)`.
pub fn verify_against_oracle(
    code: &BorelCode,
    p: &StructureCode,
    k: usize,
    u: &[usize],
    budget: u64,
) -> Result<Verdict, SynthesisError> {
    let phi = synthesize(code, k, p.signature(), &PrefixPolicy::certified_for(p))?;
    let value = crate::formula::eval(&phi, p, &env_for(u))?;
    if !value.tag.is_exact() {
        return Err(FormulaError::NotExact(value.tag).into());
    }
    let oracle = AStarOracle::new(code, p, k, budget)?.value(u)?;
    if value.value != oracle {
        return Err(SynthesisError::Mismatch { u: u.to_vec(), lhs: value.value, rhs: oracle });
    }
    Ok(Verdict { u: u.to_vec(), formula_value: value.value, oracle_value: oracle })
}

/// Compares a lowered formula with the oracle at every `u ∈ points^k`.
pub fn verify_formula_all_u(
    phi: &Formula,
    code: &BorelCode,
    p: &StructureCode,
    k: usize,
    budget: u64,
) -> Result<Vec<Verdict>, SynthesisError> {
    let table = eval_table(phi, p)?;
    if table.tag != Tag::Exact {
        return Err(FormulaError::NotExact(table.tag).into());
    }
    let oracle = AStarOracle::new(code, p, k, budget)?;
    tuples(p.size(), k)
        .map(|u| {
            let lhs = table.get(&env_for(&u))?.clone();
            let rhs = oracle.value(&u)?;
            if lhs != rhs {
                return Err(SynthesisError::Mismatch { u, lhs, rhs });
            }
            Ok(Verdict { u, formula_value: lhs, oracle_value: rhs })
        })
        .collect()
}
