//! Finite codes for metric structures.
//!
//! A [`StructureCode`] presents a metric structure on `N` code points: a
//! rational pseudo-metric table plus one table per predicate symbol. The
//! signature declares, for every predicate, a Lipschitz constant per argument
//! (measured against the truncated metric `min(d, 1)`) and a bound on its
//! absolute value. The distance symbol `d` is implicit in every signature.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Rational;

/// Names that can never be used for predicates.
pub const RESERVED_NAMES: &[&str] = &["d", "dhat"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateSymbol {
    pub name: String,
    pub arity: usize,
    pub lipschitz: Vec<Rational>,
    pub bound: Rational,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    predicates: Vec<PredicateSymbol>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("duplicate predicate `{0}`")]
    DuplicatePredicate(String),
    #[error("`{0}` is reserved for the metric")]
    ReservedName(String),
    #[error("predicate `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("predicate `{name}` declares {found} Lipschitz constants for arity {arity}")]
    LipschitzArity { name: String, arity: usize, found: usize },
    #[error("predicate `{0}` has a negative Lipschitz constant or bound")]
    NegativeModulus(String),
    #[error("structure must have at least one point")]
    Empty,
    #[error("table `{table}` has {found} entries, expected {expected}")]
    DimensionMismatch { table: String, expected: usize, found: usize },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("missing table for predicate `{0}`")]
    MissingPredicate(String),
    #[error("d({0},{0}) is not zero")]
    NonzeroDiagonal(usize),
    #[error("d({0},{1}) is negative")]
    NegativeDistance(usize, usize),
    #[error("d({0},{1}) != d({1},{0})")]
    AsymmetricDistance(usize, usize),
    #[error("triangle inequality fails: d({0},{1}) > d({0},{2}) + d({2},{1})")]
    TriangleViolation(usize, usize, usize),
    #[error("predicate `{pred}` breaks its modulus between {u:?} and {v:?}")]
    ModulusViolation { pred: String, u: Vec<usize>, v: Vec<usize> },
    #[error("predicate `{pred}` exceeds its bound at {u:?}")]
    BoundViolation { pred: String, u: Vec<usize> },
    #[error("index {index} out of range for a structure of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("predicate `{pred}` differs across the zero-distance class of {u:?}")]
    InconsistentPredicateOnClass { pred: String, u: Vec<usize> },
    #[error("function table breaks its declared modulus between {u:?} and {v:?}")]
    FunctionModulusViolation { u: Vec<usize>, v: Vec<usize> },
}

impl StructureError {
    /// Stable machine-readable name of the error class.
    pub fn code(&self) -> &'static str {
        match self {
            StructureError::DuplicatePredicate(_) => "DuplicatePredicate",
            StructureError::ReservedName(_) => "ReservedName",
            StructureError::ZeroArity(_) => "ZeroArity",
            StructureError::LipschitzArity { .. } => "LipschitzArity",
            StructureError::NegativeModulus(_) => "NegativeModulus",
            StructureError::Empty => "Empty",
            StructureError::DimensionMismatch { .. } => "DimensionMismatch",
            StructureError::UnknownPredicate(_) => "UnknownPredicate",
            StructureError::MissingPredicate(_) => "MissingPredicate",
            StructureError::NonzeroDiagonal(_) => "NonzeroDiagonal",
            StructureError::NegativeDistance(..) => "NegativeDistance",
            StructureError::AsymmetricDistance(..) => "AsymmetricDistance",
            StructureError::TriangleViolation(..) => "TriangleViolation",
            StructureError::ModulusViolation { .. } => "ModulusViolation",
            StructureError::BoundViolation { .. } => "BoundViolation",
            StructureError::IndexOutOfRange { .. } => "IndexOutOfRange",
            StructureError::InconsistentPredicateOnClass { .. } => "InconsistentPredicateOnClass",
            StructureError::FunctionModulusViolation { .. } => "FunctionModulusViolation",
        }
    }
}

impl Signature {
    pub fn new(predicates: Vec<PredicateSymbol>) -> Result<Self, StructureError> {
        let mut seen = std::collections::BTreeSet::new();
        for p in &predicates {
            if RESERVED_NAMES.contains(&p.name.as_str()) {
                return Err(StructureError::ReservedName(p.name.clone()));
            }
            if !seen.insert(p.name.as_str()) {
                return Err(StructureError::DuplicatePredicate(p.name.clone()));
            }
            if p.arity == 0 {
                return Err(StructureError::ZeroArity(p.name.clone()));
            }
            if p.lipschitz.len() != p.arity {
                return Err(StructureError::LipschitzArity {
                    name: p.name.clone(),
                    arity: p.arity,
                    found: p.lipschitz.len(),
                });
            }
            if p.bound.is_negative() || p.lipschitz.iter().any(Rational::is_negative) {
                return Err(StructureError::NegativeModulus(p.name.clone()));
            }
        }
        Ok(Signature { predicates })
    }

    /// The signature with only the distance symbol.
    pub fn metric_only() -> Self {
        Signature::default()
    }

    pub fn predicates(&self) -> &[PredicateSymbol] {
        &self.predicates
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&PredicateSymbol> {
        self.predicates.iter().find(|p| p.name == name)
    }
}

/// A finite presentation of a metric structure.
///
/// Construction only checks table dimensions; use [`StructureCode::validate`]
/// for the pseudo-metric and modulus conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureCode {
    signature: Signature,
    size: usize,
    dist: Vec<Rational>,
    tables: Vec<Vec<Rational>>,
}

/// Row-major index of a tuple of points.
pub fn tuple_index(size: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &i| acc * size + i)
}

/// All tuples in `0..size` of the given length, in row-major order.
pub fn tuples(size: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = size.checked_pow(len as u32).unwrap_or(usize::MAX);
    (0..total).map(move |mut idx| {
        let mut t = vec![0; len];
        for slot in t.iter_mut().rev() {
            *slot = idx % size;
            idx /= size;
        }
        t
    })
}

fn truncate(d: &Rational) -> Rational {
    if *d > Rational::one() {
        Rational::one()
    } else {
        d.clone()
    }
}

impl StructureCode {
    pub fn new(
        signature: Signature,
        size: usize,
        dist: Vec<Rational>,
        tables: Vec<Vec<Rational>>,
    ) -> Result<Self, StructureError> {
        if size == 0 {
            return Err(StructureError::Empty);
        }
        if dist.len() != size * size {
            return Err(StructureError::DimensionMismatch {
                table: "d".into(),
                expected: size * size,
                found: dist.len(),
            });
        }
        if tables.len() != signature.predicates.len() {
            return Err(StructureError::DimensionMismatch {
                table: "predicates".into(),
                expected: signature.predicates.len(),
                found: tables.len(),
            });
        }
        for (p, t) in signature.predicates.iter().zip(&tables) {
            let expected = size.pow(p.arity as u32);
            if t.len() != expected {
                return Err(StructureError::DimensionMismatch {
                    table: p.name.clone(),
                    expected,
                    found: t.len(),
                });
            }
        }
        Ok(StructureCode { signature, size, dist, tables })
    }

    /// A code with only the metric.
    pub fn metric(size: usize, dist: Vec<Rational>) -> Result<Self, StructureError> {
        Self::new(Signature::metric_only(), size, dist, Vec::new())
    }

    /// Build from a predicate map keyed by name.
    pub fn from_named(
        signature: Signature,
        size: usize,
        dist: Vec<Rational>,
        mut named: BTreeMap<String, Vec<Rational>>,
    ) -> Result<Self, StructureError> {
        let mut tables = Vec::with_capacity(signature.predicates.len());
        for p in &signature.predicates {
            let t = named
                .remove(&p.name)
                .ok_or_else(|| StructureError::MissingPredicate(p.name.clone()))?;
            tables.push(t);
        }
        if let Some(name) = named.into_keys().next() {
            return Err(StructureError::UnknownPredicate(name));
        }
        Self::new(signature, size, dist, tables)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dist_table(&self) -> &[Rational] {
        &self.dist
    }

    pub fn table(&self, pred: usize) -> &[Rational] {
        &self.tables[pred]
    }

    pub fn table_by_name(&self, name: &str) -> Option<&[Rational]> {
        self.signature.position(name).map(|i| self.tables[i].as_slice())
    }

    /// Unchecked distance lookup.
    pub fn d(&self, i: usize, j: usize) -> &Rational {
        &self.dist[i * self.size + j]
    }

    /// Unchecked truncated distance `min(d, 1)`.
    pub fn dhat(&self, i: usize, j: usize) -> Rational {
        truncate(self.d(i, j))
    }

    fn check_index(&self, i: usize) -> Result<(), StructureError> {
        if i < self.size {
            Ok(())
        } else {
            Err(StructureError::IndexOutOfRange { index: i, size: self.size })
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> Result<Rational, StructureError> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(self.d(i, j).clone())
    }

    pub fn truncated_distance(&self, i: usize, j: usize) -> Result<Rational, StructureError> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(self.dhat(i, j))
    }

    /// Unchecked predicate lookup.
    pub fn pred_value(&self, pred: usize, args: &[usize]) -> &Rational {
        &self.tables[pred][tuple_index(self.size, args)]
    }

    pub fn diameter(&self) -> Rational {
        self.dist.iter().cloned().max().unwrap_or_default()
    }

    /// Smallest positive entry of the truncated metric, if any.
    pub fn min_positive_truncated_distance(&self) -> Option<Rational> {
        self.dist
            .iter()
            .filter(|d| !d.is_zero())
            .map(truncate)
            .min()
    }

    /// Checks the pseudo-metric axioms, then modulus compliance, then bounds.
    /// The first violation found is returned with its witnesses.
    pub fn validate(&self) -> Result<(), StructureError> {
        self.validate_metric()?;
        for (pi, p) in self.signature.predicates.iter().enumerate() {
            self.check_modulus(pi, p)?;
        }
        for (pi, p) in self.signature.predicates.iter().enumerate() {
            if let Some(u) = tuples(self.size, p.arity)
                .find(|u| self.pred_value(pi, u).abs() > p.bound)
            {
                return Err(StructureError::BoundViolation { pred: p.name.clone(), u });
            }
        }
        Ok(())
    }

    pub fn validate_metric(&self) -> Result<(), StructureError> {
        let n = self.size;
        for i in 0..n {
            if !self.d(i, i).is_zero() {
                return Err(StructureError::NonzeroDiagonal(i));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if self.d(i, j).is_negative() {
                    return Err(StructureError::NegativeDistance(i, j));
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.d(i, j) != self.d(j, i) {
                    return Err(StructureError::AsymmetricDistance(i, j));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if *self.d(i, j) > self.d(i, k) + self.d(k, j) {
                        return Err(StructureError::TriangleViolation(i, j, k));
                    }
                }
            }
        }
        Ok(())
    }

    // Pairs differing in a single coordinate suffice: a general pair is joined
    // by a chain of single-coordinate moves and the bound is additive.
    fn check_modulus(&self, pi: usize, p: &PredicateSymbol) -> Result<(), StructureError> {
        for u in tuples(self.size, p.arity) {
            let bu = self.pred_value(pi, &u);
            for j in 0..p.arity {
                let mut v = u.clone();
                for w in 0..self.size {
                    if w == u[j] {
                        continue;
                    }
                    v[j] = w;
                    let allowed = &p.lipschitz[j] * self.dhat(u[j], w);
                    if (bu - self.pred_value(pi, &v)).abs() > allowed {
                        return Err(StructureError::ModulusViolation {
                            pred: p.name.clone(),
                            u: u.clone(),
                            v,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Merges points at distance zero, keeping the smallest index of each
    /// class in order. The result is a metric.
    pub fn quotient_zero_distance(&self) -> Result<StructureCode, StructureError> {
        let n = self.size;
        let mut class_of = vec![usize::MAX; n];
        let mut reps = Vec::new();
        for i in 0..n {
            if class_of[i] != usize::MAX {
                continue;
            }
            let c = reps.len();
            reps.push(i);
            for j in i..n {
                if class_of[j] == usize::MAX && self.d(i, j).is_zero() {
                    class_of[j] = c;
                }
            }
        }
        for (pi, p) in self.signature.predicates.iter().enumerate() {
            for u in tuples(n, p.arity) {
                let rep: Vec<usize> = u.iter().map(|&i| reps[class_of[i]]).collect();
                if self.pred_value(pi, &u) != self.pred_value(pi, &rep) {
                    return Err(StructureError::InconsistentPredicateOnClass {
                        pred: p.name.clone(),
                        u,
                    });
                }
            }
        }
        self.reindex(&reps)
    }

    /// Pulls every table back along `y`: the result has `y.len()` points and
    /// point `i` of the result is point `y[i]` of `self`.
    pub fn reindex(&self, y: &[usize]) -> Result<StructureCode, StructureError> {
        if y.is_empty() {
            return Err(StructureError::Empty);
        }
        for &i in y {
            self.check_index(i)?;
        }
        let m = y.len();
        let mut dist = Vec::with_capacity(m * m);
        for &a in y {
            for &b in y {
                dist.push(self.d(a, b).clone());
            }
        }
        let tables = self
            .signature
            .predicates
            .iter()
            .enumerate()
            .map(|(pi, p)| {
                tuples(m, p.arity)
                    .map(|u| {
                        let image: Vec<usize> = u.iter().map(|&i| y[i]).collect();
                        self.pred_value(pi, &image).clone()
                    })
                    .collect()
            })
            .collect();
        Ok(StructureCode { signature: self.signature.clone(), size: m, dist, tables })
    }

    /// Adds a predicate to the signature together with its table.
    pub fn with_predicate(
        &self,
        symbol: PredicateSymbol,
        table: Vec<Rational>,
    ) -> Result<StructureCode, StructureError> {
        let mut preds = self.signature.predicates.clone();
        preds.push(symbol);
        let signature = Signature::new(preds)?;
        let mut tables = self.tables.clone();
        tables.push(table);
        StructureCode::new(signature, self.size, self.dist.clone(), tables)
    }

    /// Encodes a `k`-ary function symbol `f` (given as a row-major table of
    /// point indices) as the `k+1`-ary predicate `B_f(u, r) = d(f(u), r)`.
    ///
    /// `lipschitz` is the declared modulus of `f` against the truncated
    /// metric; it is checked. The predicate's constants are scaled by
    /// `max(1, diam)` so that the raw distance complies with a modulus taken
    /// against the truncated metric.
    pub fn encode_function_symbol(
        &self,
        name: &str,
        arity: usize,
        function: &[usize],
        lipschitz: &[Rational],
    ) -> Result<(PredicateSymbol, Vec<Rational>), StructureError> {
        let n = self.size;
        let expected = n.pow(arity as u32);
        if function.len() != expected {
            return Err(StructureError::DimensionMismatch {
                table: name.to_string(),
                expected,
                found: function.len(),
            });
        }
        if lipschitz.len() != arity {
            return Err(StructureError::LipschitzArity {
                name: name.to_string(),
                arity,
                found: lipschitz.len(),
            });
        }
        for &i in function {
            self.check_index(i)?;
        }
        for u in tuples(n, arity) {
            for v in tuples(n, arity) {
                let allowed: Rational = (0..arity)
                    .map(|j| &lipschitz[j] * self.dhat(u[j], v[j]))
                    .sum();
                let fu = function[tuple_index(n, &u)];
                let fv = function[tuple_index(n, &v)];
                if self.dhat(fu, fv) > allowed {
                    return Err(StructureError::FunctionModulusViolation { u, v });
                }
            }
        }
        let scale = self.diameter().max_of(Rational::one());
        let mut lip: Vec<Rational> = lipschitz.iter().map(|l| l * &scale).collect();
        lip.push(scale);
        let symbol = PredicateSymbol {
            name: name.to_string(),
            arity: arity + 1,
            lipschitz: lip,
            bound: self.diameter(),
        };
        let table = tuples(n, arity + 1)
            .map(|t| {
                let (args, r) = t.split_at(arity);
                self.d(function[tuple_index(n, args)], r[0]).clone()
            })
            .collect();
        Ok((symbol, table))
    }
}

/// A point bijection witnessing an isomorphism: `map[i]` is the image in the
/// second structure of point `i` of the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Isomorphism {
    pub map: Vec<usize>,
}

/// Exact isomorphism test by backtracking over point bijections.
///
/// Both codes should be quotiented first; codes with different sizes or
/// signatures are never isomorphic.
pub fn iso_check(a: &StructureCode, b: &StructureCode) -> Option<Isomorphism> {
    if a.size != b.size || a.signature != b.signature {
        return None;
    }
    let n = a.size;
    let mut map = Vec::with_capacity(n);
    let mut used = vec![false; n];
    if extend_iso(a, b, &mut map, &mut used) {
        Some(Isomorphism { map })
    } else {
        None
    }
}

fn extend_iso(a: &StructureCode, b: &StructureCode, map: &mut Vec<usize>, used: &mut [bool]) -> bool {
    let n = a.size;
    let i = map.len();
    if i == n {
        return predicates_match(a, b, map);
    }
    for cand in 0..n {
        if used[cand] {
            continue;
        }
        let consistent = (0..i).all(|j| a.d(i, j) == b.d(cand, map[j]) && a.d(j, i) == b.d(map[j], cand))
            && a.d(i, i) == b.d(cand, cand);
        if !consistent {
            continue;
        }
        used[cand] = true;
        map.push(cand);
        if extend_iso(a, b, map, used) {
            return true;
        }
        map.pop();
        used[cand] = false;
    }
    false
}

fn predicates_match(a: &StructureCode, b: &StructureCode, map: &[usize]) -> bool {
    a.signature.predicates.iter().enumerate().all(|(pi, p)| {
        tuples(a.size, p.arity).all(|u| {
            let image: Vec<usize> = u.iter().map(|&i| map[i]).collect();
            a.pred_value(pi, &u) == b.pred_value(pi, &image)
        })
    })
}

impl fmt::Display for StructureCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "structure with {} points", self.size)?;
        for i in 0..self.size {
            let row: Vec<String> = (0..self.size).map(|j| self.d(i, j).to_string()).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        Ok(())
    }
}
