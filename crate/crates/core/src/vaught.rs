//! Borel codes, the sequence distance and a brute-force oracle for the Vaught
//! transform `A^{*k}` on finite structure codes.
//!
//! A code denotes a bounded function of a sequence `y` of points. On a finite
//! structure every code in scope depends on finitely many coordinates and is
//! continuous, so the category supremum over dense sequences is an ordinary
//! maximum over finitely many tuples.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::formula::{check_wellformed, eval_table, infer_modulus, Formula, FormulaError, ValueTable, Var};
use crate::rational::Rational;
use crate::structure::{tuples, Signature, StructureCode};

/// Default cap on the number of tuples an oracle may enumerate.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Enumeration cap: `CLW_BUDGET` if set to a positive integer, else
/// [`DEFAULT_BUDGET`].
pub fn default_budget() -> u64 {
    std::env::var("CLW_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&b| b > 0)
        .unwrap_or(DEFAULT_BUDGET)
}

/// The finite part of a sequence of points.
pub type SequencePrefix = Vec<usize>;

/// Name of the `i`-th coordinate variable of a basic leaf.
pub fn z(i: usize) -> Var {
    Var::new(&format!("z{i}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BorelCode {
    /// `θ(z_0, ..., z_{support-1})` for a quantifier-free `θ`.
    Basic { theta: Arc<Formula>, support: usize },
    SupFamily(Vec<BorelCode>),
    Neg(Box<BorelCode>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VaughtError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("basic leaf is not quantifier-free")]
    NotQuantifierFree,
    #[error("variable `{var}` is not among z0..z{}", support.saturating_sub(1))]
    UnexpectedVariable { var: Var, support: usize },
    #[error("sup family has no members")]
    EmptyFamily,
    #[error("sequence prefix of length {got} is shorter than the support {needed}")]
    InsufficientPrefix { needed: usize, got: usize },
    #[error("expected a tuple of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("point {index} out of range for a structure of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("enumeration of {needed} tuples exceeds the budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("A^*k is not k-Lipschitz between {u:?} and {v:?}: |{lhs} - {rhs}| > {allowed}")]
    LipschitzViolation { u: Vec<usize>, v: Vec<usize>, lhs: Rational, rhs: Rational, allowed: Rational },
}

impl VaughtError {
    pub fn code(&self) -> &'static str {
        match self {
            VaughtError::Formula(e) => e.code(),
            VaughtError::NotQuantifierFree => "NotQuantifierFree",
            VaughtError::UnexpectedVariable { .. } => "UnboundVariable",
            VaughtError::EmptyFamily => "EmptyFamily",
            VaughtError::InsufficientPrefix { .. } => "InsufficientPrefix",
            VaughtError::LengthMismatch { .. } => "LengthMismatch",
            VaughtError::IndexOutOfRange { .. } => "IndexOutOfRange",
            VaughtError::BudgetExceeded { .. } => "BudgetExceeded",
            VaughtError::LipschitzViolation { .. } => "LipschitzViolation",
        }
    }
}

impl BorelCode {
    pub fn basic(theta: Arc<Formula>, support: usize) -> Self {
        BorelCode::Basic { theta, support }
    }

    pub fn sup(members: Vec<BorelCode>) -> Self {
        BorelCode::SupFamily(members)
    }

    pub fn neg(inner: BorelCode) -> Self {
        BorelCode::Neg(Box::new(inner))
    }

    /// Checks leaves: quantifier-free, well-formed, free variables among
    /// `z_0..z_{support-1}`, and a finite modulus (no raw distance).
    pub fn validate(&self, sig: &Signature) -> Result<(), VaughtError> {
        match self {
            BorelCode::Basic { theta, support } => {
                if !theta.is_quantifier_free() {
                    return Err(VaughtError::NotQuantifierFree);
                }
                let allowed: BTreeSet<Var> = (0..*support).map(z).collect();
                check_wellformed(theta, sig, None)?;
                for v in crate::formula::free_vars(theta) {
                    if !allowed.contains(&v) {
                        return Err(VaughtError::UnexpectedVariable { var: v, support: *support });
                    }
                }
                infer_modulus(theta, sig)?;
                Ok(())
            }
            BorelCode::SupFamily(members) => {
                if members.is_empty() {
                    return Err(VaughtError::EmptyFamily);
                }
                members.iter().try_for_each(|m| m.validate(sig))
            }
            BorelCode::Neg(inner) => inner.validate(sig),
        }
    }

    /// Structural bound `M_A` on the absolute value.
    pub fn bound(&self, sig: &Signature) -> Result<Rational, VaughtError> {
        match self {
            BorelCode::Basic { theta, .. } => Ok(infer_modulus(theta, sig)?.value_bound),
            BorelCode::SupFamily(members) => {
                let mut best = Rational::zero();
                for m in members {
                    best = best.max_of(m.bound(sig)?);
                }
                Ok(best)
            }
            BorelCode::Neg(inner) => inner.bound(sig),
        }
    }

    /// Number of leading coordinates the denoted function depends on.
    pub fn support(&self) -> usize {
        match self {
            BorelCode::Basic { support, .. } => *support,
            BorelCode::SupFamily(members) => members.iter().map(BorelCode::support).max().unwrap_or(0),
            BorelCode::Neg(inner) => inner.support(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            BorelCode::Basic { .. } => 1,
            BorelCode::SupFamily(members) => 1 + members.iter().map(BorelCode::depth).max().unwrap_or(0),
            BorelCode::Neg(inner) => 1 + inner.depth(),
        }
    }

    pub fn contains_neg(&self) -> bool {
        match self {
            BorelCode::Basic { .. } => false,
            BorelCode::SupFamily(members) => members.iter().any(BorelCode::contains_neg),
            BorelCode::Neg(_) => true,
        }
    }
}

fn check_indices(p: &StructureCode, y: &[usize]) -> Result<(), VaughtError> {
    match y.iter().find(|&&i| i >= p.size()) {
        Some(&index) => Err(VaughtError::IndexOutOfRange { index, size: p.size() }),
        None => Ok(()),
    }
}

/// `max_{i < min(|y|,|u|)} d̂(y_i, u_i)`, and 0 when either is empty.
pub fn seq_distance(p: &StructureCode, y: &[usize], u: &[usize]) -> Result<Rational, VaughtError> {
    check_indices(p, y)?;
    check_indices(p, u)?;
    Ok(y.iter().zip(u).map(|(&a, &b)| p.dhat(a, b)).max().unwrap_or_default())
}

/// A code with the value tables of its leaves computed for one structure.
enum Prepared {
    Basic { table: Arc<ValueTable>, coords: Vec<usize> },
    Sup(Vec<Prepared>),
    Neg(Box<Prepared>),
}

impl Prepared {
    fn new(code: &BorelCode, p: &StructureCode) -> Result<Self, VaughtError> {
        Ok(match code {
            BorelCode::Basic { theta, support } => {
                let table = eval_table(theta, p)?;
                let coords = table
                    .vars
                    .iter()
                    .map(|v| {
                        (0..*support)
                            .find(|&i| z(i) == *v)
                            .ok_or_else(|| VaughtError::UnexpectedVariable { var: v.clone(), support: *support })
                    })
                    .collect::<Result<_, _>>()?;
                Prepared::Basic { table, coords }
            }
            BorelCode::SupFamily(members) => {
                if members.is_empty() {
                    return Err(VaughtError::EmptyFamily);
                }
                Prepared::Sup(members.iter().map(|m| Prepared::new(m, p)).collect::<Result<_, _>>()?)
            }
            BorelCode::Neg(inner) => Prepared::Neg(Box::new(Prepared::new(inner, p)?)),
        })
    }

    fn value(&self, y: &[usize]) -> Rational {
        match self {
            Prepared::Basic { table, coords } => {
                let idx = coords.iter().fold(0, |acc, &c| acc * table.size + y[c]);
                table.values[idx].clone()
            }
            Prepared::Sup(members) => members.iter().map(|m| m.value(y)).max().expect("nonempty family"),
            Prepared::Neg(inner) => -inner.value(y),
        }
    }
}

/// Value of the function coded by `code` at any sequence extending `y`.
pub fn eval_borel(code: &BorelCode, p: &StructureCode, y: &[usize]) -> Result<Rational, VaughtError> {
    check_indices(p, y)?;
    let needed = code.support();
    if y.len() < needed {
        return Err(VaughtError::InsufficientPrefix { needed, got: y.len() });
    }
    Ok(Prepared::new(code, p)?.value(y))
}

fn enumeration_size(n: usize, s: usize, budget: u64) -> Result<(), VaughtError> {
    let needed = (n as u128).checked_pow(s as u32).unwrap_or(u128::MAX);
    if needed > budget as u128 {
        return Err(VaughtError::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// `A^{*k}(p, u)` by enumeration of all `y ∈ points^s`, `s = max(k, support)`.
pub fn a_star_k_oracle(
    code: &BorelCode,
    p: &StructureCode,
    k: usize,
    u: &[usize],
    budget: u64,
) -> Result<Rational, VaughtError> {
    AStarOracle::new(code, p, k, budget)?.value(u)
}

/// Oracle with the leaf tables and the tuple range prepared once, for
/// repeated queries at different `u`.
pub struct AStarOracle<'p> {
    p: &'p StructureCode,
    k: usize,
    /// `(y, A(y))` for every enumerated `y`.
    samples: Vec<(Vec<usize>, Rational)>,
}

impl<'p> AStarOracle<'p> {
    pub fn new(code: &BorelCode, p: &'p StructureCode, k: usize, budget: u64) -> Result<Self, VaughtError> {
        let s = k.max(code.support());
        enumeration_size(p.size(), s, budget)?;
        let prepared = Prepared::new(code, p)?;
        let samples = tuples(p.size(), s)
            .map(|y| {
                let v = prepared.value(&y);
                (y, v)
            })
            .collect();
        Ok(AStarOracle { p, k, samples })
    }

    pub fn value(&self, u: &[usize]) -> Result<Rational, VaughtError> {
        if u.len() != self.k {
            return Err(VaughtError::LengthMismatch { expected: self.k, got: u.len() });
        }
        check_indices(self.p, u)?;
        let k = Rational::from(self.k);
        let best = self
            .samples
            .iter()
            .map(|(y, v)| {
                let dist = y.iter().zip(u).map(|(&a, &b)| self.p.dhat(a, b)).max().unwrap_or_default();
                v - &(&k * &dist)
            })
            .max();
        Ok(best.expect("structures are nonempty"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KAuditReport {
    pub tuples: usize,
    pub pairs_checked: usize,
}

/// Checks that `u ↦ A^{*k}(p, u)` is `k`-Lipschitz for the sequence distance.
pub fn k_lipschitz_audit(code: &BorelCode, p: &StructureCode, k: usize, budget: u64) -> Result<KAuditReport, VaughtError> {
    let oracle = AStarOracle::new(code, p, k, budget)?;
    let us: Vec<Vec<usize>> = tuples(p.size(), k).collect();
    let values = us.iter().map(|u| oracle.value(u)).collect::<Result<Vec<_>, _>>()?;
    let kq = Rational::from(k);
    let mut pairs = 0;
    for i in 0..us.len() {
        for j in i + 1..us.len() {
            pairs += 1;
            let allowed = &kq * &seq_distance(p, &us[i], &us[j])?;
            if (&values[i] - &values[j]).abs() > allowed {
                return Err(VaughtError::LipschitzViolation {
                    u: us[i].clone(),
                    v: us[j].clone(),
                    lhs: values[i].clone(),
                    rhs: values[j].clone(),
                    allowed,
                });
            }
        }
    }
    Ok(KAuditReport { tuples: us.len(), pairs_checked: pairs })
}
