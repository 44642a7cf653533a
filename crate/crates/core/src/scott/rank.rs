//! Rank computation.
//!
//! `r_α(ā, b̄)` depends only on the set of pairs `{(a_i, b_i)}`: `r_0` is a
//! maximum over pairs of pairs, and the successor step only ever adds a pair.
//! [`RankEngine`] therefore tabulates every stage once over all subsets of
//! `X × Y`, stored as bitmasks, with values replaced by their rank in the
//! finite sorted set of possible values. [`rank_step`] and [`literal_layer`]
//! implement the recursion on tuples as written and serve as a cross-check.

use std::fmt::Write as _;

use super::{FiniteSpace, ScottError};
use crate::rational::Rational;
use crate::structure::{tuple_index, tuples};

/// Largest `|X|·|Y|` the set-indexed engine accepts.
pub const DEFAULT_MAX_PAIRS: usize = 20;
/// Stage at which stabilization search gives up.
pub const DEFAULT_ALPHA_CEILING: usize = 64;

fn check_tuples(x: &FiniteSpace, y: &FiniteSpace, a: &[usize], b: &[usize]) -> Result<(), ScottError> {
    if a.len() != b.len() {
        return Err(ScottError::LengthMismatch(a.len(), b.len()));
    }
    a.iter().try_for_each(|&i| x.check_index(i))?;
    b.iter().try_for_each(|&j| y.check_index(j))
}

/// `½ max_{i,k<n} |d(a_i, a_k) − d(b_i, b_k)|`, and 0 for empty tuples.
pub fn r0(x: &FiniteSpace, y: &FiniteSpace, a: &[usize], b: &[usize]) -> Result<Rational, ScottError> {
    check_tuples(x, y, a, b)?;
    let half = Rational::new(1, 2);
    let mut best = Rational::zero();
    for i in 0..a.len() {
        for k in i + 1..a.len() {
            best = best.max_of((x.d(a[i], a[k]) - y.d(b[i], b[k])).abs());
        }
    }
    Ok(best * half)
}

/// Stage values at one tuple length. The pair `(ā, b̄)` is stored at
/// `index(ā)·|Y|^n + index(b̄)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleLayer {
    pub n: usize,
    pub values: Vec<Rational>,
    x_size: usize,
    y_size: usize,
}

impl TupleLayer {
    fn index(&self, a: &[usize], b: &[usize]) -> usize {
        tuple_index(self.x_size, a) * self.y_size.pow(self.n as u32) + tuple_index(self.y_size, b)
    }

    pub fn get(&self, a: &[usize], b: &[usize]) -> Option<&Rational> {
        if a.len() != self.n || b.len() != self.n {
            return None;
        }
        self.values.get(self.index(a, b))
    }
}

/// `r_0` at every pair of `n`-tuples.
pub fn r0_layer(x: &FiniteSpace, y: &FiniteSpace, n: usize) -> TupleLayer {
    let mut values = Vec::new();
    for a in tuples(x.size(), n) {
        for b in tuples(y.size(), n) {
            values.push(r0(x, y, &a, &b).expect("valid tuples"));
        }
    }
    TupleLayer { n, values, x_size: x.size(), y_size: y.size() }
}

/// The successor step: stage `α` at length `n + 1` to stage `α + 1` at
/// length `n`.
pub fn rank_step(x: &FiniteSpace, y: &FiniteSpace, next: &TupleLayer) -> Result<TupleLayer, ScottError> {
    if next.n == 0 {
        return Err(ScottError::MissingStage { alpha: 0 });
    }
    if next.x_size != x.size() || next.y_size != y.size() {
        return Err(ScottError::DimensionMismatch { expected: x.size() * y.size(), found: next.x_size * next.y_size });
    }
    let n = next.n - 1;
    let mut values = Vec::new();
    for a in tuples(x.size(), n) {
        for b in tuples(y.size(), n) {
            let cell = |xi: usize, yi: usize| {
                let mut ax = a.clone();
                ax.push(xi);
                let mut by = b.clone();
                by.push(yi);
                next.get(&ax, &by).expect("layer covers n + 1").clone()
            };
            let forth = (0..x.size()).map(|xi| (0..y.size()).map(|yi| cell(xi, yi)).min().unwrap()).max().unwrap();
            let back = (0..y.size()).map(|yi| (0..x.size()).map(|xi| cell(xi, yi)).min().unwrap()).max().unwrap();
            values.push(forth.max_of(back));
        }
    }
    Ok(TupleLayer { n, values, x_size: x.size(), y_size: y.size() })
}

/// `r_{α,n}` on all tuple pairs, computed from `r_0` at length `n + α`.
pub fn literal_layer(x: &FiniteSpace, y: &FiniteSpace, alpha: usize, n: usize, budget: u64) -> Result<TupleLayer, ScottError> {
    let pairs = (x.size() * y.size()) as u128;
    let cells = pairs.checked_pow((n + alpha) as u32).unwrap_or(u128::MAX);
    if cells > budget as u128 {
        return Err(ScottError::BudgetExceeded { what: format!("{cells} tuple pairs"), budget });
    }
    let mut layer = r0_layer(x, y, n + alpha);
    for _ in 0..alpha {
        layer = rank_step(x, y, &layer)?;
    }
    Ok(layer)
}

/// All stages of the rank recursion between two finite spaces, tabulated
/// over sets of pairs.
#[derive(Debug, Clone)]
pub struct RankEngine {
    x: FiniteSpace,
    y: FiniteSpace,
    /// Sorted distinct values the ranks can take.
    levels: Vec<Rational>,
    stages: Vec<Vec<u16>>,
    stable_from: Option<usize>,
}

impl RankEngine {
    pub fn new(x: &FiniteSpace, y: &FiniteSpace) -> Result<Self, ScottError> {
        Self::with_max_pairs(x, y, DEFAULT_MAX_PAIRS)
    }

    pub fn with_max_pairs(x: &FiniteSpace, y: &FiniteSpace, max_pairs: usize) -> Result<Self, ScottError> {
        let ny = y.size();
        let p = x.size() * ny;
        if p > max_pairs.min(30) {
            return Err(ScottError::BudgetExceeded { what: format!("{p} pairs"), budget: max_pairs as u64 });
        }
        let half = Rational::new(1, 2);
        let gap = |s: usize, t: usize| (x.d(s / ny, t / ny) - y.d(s % ny, t % ny)).abs() * &half;
        let mut levels: Vec<Rational> = vec![Rational::zero()];
        for s in 0..p {
            for t in s + 1..p {
                levels.push(gap(s, t));
            }
        }
        levels.sort();
        levels.dedup();
        let level_of = |v: &Rational| levels.binary_search(v).expect("value is listed") as u16;
        let mut gaps = vec![0u16; p * p];
        for s in 0..p {
            for t in 0..p {
                gaps[s * p + t] = level_of(&gap(s, t));
            }
        }
        let mut base = vec![0u16; 1 << p];
        for set in 1usize..1 << p {
            let low = set.trailing_zeros() as usize;
            let rest = set & (set - 1);
            let mut best = base[rest];
            let mut bits = rest;
            while bits != 0 {
                let t = bits.trailing_zeros() as usize;
                best = best.max(gaps[low * p + t]);
                bits &= bits - 1;
            }
            base[set] = best;
        }
        Ok(RankEngine { x: x.clone(), y: y.clone(), levels, stages: vec![base], stable_from: None })
    }

    pub fn x(&self) -> &FiniteSpace {
        &self.x
    }

    pub fn y(&self) -> &FiniteSpace {
        &self.y
    }

    fn pairs(&self) -> usize {
        self.x.size() * self.y.size()
    }

    /// Number of stages computed so far.
    pub fn stages(&self) -> usize {
        self.stages.len()
    }

    fn step(&mut self) {
        let (nx, ny) = (self.x.size(), self.y.size());
        let cur = self.stages.last().expect("stage 0 exists");
        let mut next = vec![0u16; cur.len()];
        for (set, slot) in next.iter_mut().enumerate() {
            let at = |xi: usize, yi: usize| cur[set | 1 << (xi * ny + yi)];
            let forth = (0..nx).map(|xi| (0..ny).map(|yi| at(xi, yi)).min().unwrap()).max().unwrap();
            let back = (0..ny).map(|yi| (0..nx).map(|xi| at(xi, yi)).min().unwrap()).max().unwrap();
            *slot = forth.max(back);
        }
        if self.stable_from.is_none() && next == *cur {
            self.stable_from = Some(self.stages.len() - 1);
        }
        self.stages.push(next);
    }

    /// Computes stages up to and including `alpha`.
    pub fn ensure_stage(&mut self, alpha: usize) {
        while self.stages.len() <= alpha && self.stable_from.is_none() {
            self.step();
        }
    }

    fn stage(&self, alpha: usize) -> Result<&[u16], ScottError> {
        match (self.stages.get(alpha), self.stable_from) {
            (Some(s), _) => Ok(s),
            (None, Some(_)) => Ok(self.stages.last().unwrap()),
            (None, None) => Err(ScottError::MissingStage { alpha }),
        }
    }

    fn mask(&self, a: &[usize], b: &[usize]) -> Result<usize, ScottError> {
        check_tuples(&self.x, &self.y, a, b)?;
        Ok(a.iter().zip(b).fold(0, |m, (&i, &j)| m | 1 << (i * self.y.size() + j)))
    }

    /// `r_α(ā, b̄)`; the stage must have been computed, or stabilization
    /// reached before it.
    pub fn value(&self, alpha: usize, a: &[usize], b: &[usize]) -> Result<Rational, ScottError> {
        let mask = self.mask(a, b)?;
        Ok(self.levels[self.stage(alpha)?[mask] as usize].clone())
    }

    pub fn value_mut(&mut self, alpha: usize, a: &[usize], b: &[usize]) -> Result<Rational, ScottError> {
        self.ensure_stage(alpha);
        self.value(alpha, a, b)
    }

    /// Least `α ≤ ceiling` with `r_{α+1} = r_α` on every set of at most
    /// `n_probe` pairs.
    pub fn stabilize(&mut self, n_probe: usize, ceiling: usize) -> Result<usize, ScottError> {
        for alpha in 0..=ceiling {
            self.ensure_stage(alpha + 1);
            if let Some(s) = self.stable_from {
                if s <= alpha {
                    return Ok(alpha);
                }
            }
            let (cur, next) = (&self.stages[alpha], &self.stages[alpha + 1]);
            let same = (0..cur.len())
                .filter(|set| set.count_ones() as usize <= n_probe)
                .all(|set| cur[set] == next[set]);
            if same {
                return Ok(alpha);
            }
        }
        Err(ScottError::NoStabilization(ceiling))
    }

    /// The point from which every stage is equal, once computed.
    pub fn stable_from(&self) -> Option<usize> {
        self.stable_from
    }

    /// Computes stages until they stop changing.
    pub fn saturate(&mut self, ceiling: usize) -> Result<usize, ScottError> {
        self.stabilize(self.pairs(), ceiling)
    }

    /// The finite set of values ranks can take.
    pub fn levels(&self) -> &[Rational] {
        &self.levels
    }
}

/// Least `α` at which all ranks between `x` and `y` on tuples of length at
/// most `n_probe` (default `|X|·|Y|`) stop changing.
pub fn stabilization_rank(x: &FiniteSpace, y: &FiniteSpace, n_probe: Option<usize>) -> Result<usize, ScottError> {
    let mut engine = RankEngine::new(x, y)?;
    engine.stabilize(n_probe.unwrap_or(x.size() * y.size()), DEFAULT_ALPHA_CEILING)
}

/// Stabilization rank of a space against itself.
pub fn continuous_scott_rank(x: &FiniteSpace, n_probe: Option<usize>) -> Result<usize, ScottError> {
    stabilization_rank(x, x, n_probe)
}

/// Ranks for `α ≤ alpha_max` and `n ≤ n_max`.
#[derive(Debug, Clone)]
pub struct RankTable {
    engine: RankEngine,
    pub alpha_max: usize,
    pub n_max: usize,
}

pub fn rank_table(x: &FiniteSpace, y: &FiniteSpace, alpha_max: usize, n_max: usize) -> Result<RankTable, ScottError> {
    let mut engine = RankEngine::new(x, y)?;
    engine.ensure_stage(alpha_max);
    Ok(RankTable { engine, alpha_max, n_max })
}

impl RankTable {
    pub fn engine(&self) -> &RankEngine {
        &self.engine
    }

    pub fn value(&self, alpha: usize, a: &[usize], b: &[usize]) -> Result<Rational, ScottError> {
        if alpha > self.alpha_max {
            return Err(ScottError::MissingStage { alpha });
        }
        self.engine.value(alpha, a, b)
    }

    /// `(α, n, ā, b̄, value)` in order of `α`, then `n`, then tuples.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, Vec<usize>, Vec<usize>, Rational)> + '_ {
        let (nx, ny) = (self.engine.x.size(), self.engine.y.size());
        (0..=self.alpha_max).flat_map(move |alpha| {
            (0..=self.n_max).flat_map(move |n| {
                tuples(nx, n).flat_map(move |a| {
                    tuples(ny, n).map(move |b| {
                        let v = self.value(alpha, &a, &b).expect("within the table");
                        (alpha, n, a.clone(), b, v)
                    })
                })
            })
        })
    }

    /// CSV with columns `alpha,n,a,b,value`; tuples are space separated.
    pub fn to_csv(&self) -> String {
        let join = |t: &[usize]| t.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let mut out = String::from("alpha,n,a,b,value\n");
        for (alpha, n, a, b, v) in self.rows() {
            writeln!(out, "{alpha},{n},{},{},{v}", join(&a), join(&b)).unwrap();
        }
        out
    }
}
