//! Seeded random generators for structures, formulas, Borel codes and
//! finite spaces. All output is a deterministic function of the seed.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{infer_modulus, Exactness, Formula, ModulusVector, Var};
use crate::rational::Rational;
use crate::scott::FiniteSpace;
use crate::structure::{tuples, PredicateSymbol, Signature, StructureCode};
use crate::vaught::{z, BorelCode};

pub type GenRng = ChaCha8Rng;

pub fn rng(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unary `P` (constant 1, bound 1) and binary `R` (constants 1/2, bound 1).
pub fn corpus_signature() -> Signature {
    Signature::new(vec![
        PredicateSymbol { name: "P".into(), arity: 1, lipschitz: vec![Rational::one()], bound: Rational::one() },
        PredicateSymbol {
            name: "R".into(),
            arity: 2,
            lipschitz: vec![Rational::new(1, 2), Rational::new(1, 2)],
            bound: Rational::one(),
        },
    ])
    .expect("valid signature")
}

/// A metric on `n` points with distances in `{1/q, ..., max_steps/q}`:
/// random entries closed under shortest paths.
pub fn random_metric(rng: &mut GenRng, n: usize, q: i64, max_steps: i64) -> Vec<Rational> {
    let mut steps = vec![0i64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let s = rng.gen_range(1..=max_steps);
            steps[i * n + j] = s;
            steps[j * n + i] = s;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = steps[i * n + k] + steps[k * n + j];
                if via < steps[i * n + j] {
                    steps[i * n + j] = via;
                }
            }
        }
    }
    steps.into_iter().map(|s| Rational::new(s, q)).collect()
}

fn clamp(v: Rational, bound: &Rational) -> Rational {
    v.min_of(bound.clone()).max_of(-bound)
}

/// Predicate values `clamp(c + Σ_j ±L_j·d̂(u_j, a_j))`, which respect the
/// declared constants and bound.
fn random_table(rng: &mut GenRng, p: &StructureCode, sym: &PredicateSymbol) -> Vec<Rational> {
    let n = p.size();
    let anchors: Vec<usize> = (0..sym.arity).map(|_| rng.gen_range(0..n)).collect();
    let signs: Vec<bool> = (0..sym.arity).map(|_| rng.gen_bool(0.5)).collect();
    let offset = Rational::new(rng.gen_range(-4..=4), 4) * sym.bound.clone();
    tuples(n, sym.arity)
        .map(|u| {
            let mut v = offset.clone();
            for j in 0..sym.arity {
                let term = &sym.lipschitz[j] * &p.dhat(u[j], anchors[j]);
                v = if signs[j] { v + term } else { v - term };
            }
            clamp(v, &sym.bound)
        })
        .collect()
}

/// A valid metric structure on `n` points (distances in quarters up to 2).
pub fn random_structure(rng: &mut GenRng, n: usize, sig: &Signature) -> StructureCode {
    let dist = random_metric(rng, n, 4, 8);
    let bare = StructureCode::metric(n, dist.clone()).expect("dimensions");
    let tables = sig.predicates().iter().map(|s| random_table(rng, &bare, s)).collect();
    StructureCode::new(sig.clone(), n, dist, tables).expect("dimensions")
}

/// A finite metric space on `n` points with distances in `{1/q, ..., max_steps/q}`.
pub fn random_space(rng: &mut GenRng, n: usize, q: i64, max_steps: i64) -> FiniteSpace {
    FiniteSpace::new(n, random_metric(rng, n, q, max_steps)).expect("shortest-path closure is a metric")
}

pub fn random_permutation(rng: &mut GenRng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn small_rational(rng: &mut GenRng) -> Rational {
    Rational::new(rng.gen_range(-4..=4), rng.gen_range(1..=4))
}

fn scale_factor(rng: &mut GenRng) -> Rational {
    Rational::new(rng.gen_range(0..=6), rng.gen_range(1..=3))
}

/// A quantifier-free formula over `vars` (which may be empty).
pub fn random_qf(rng: &mut GenRng, vars: &[Var], sig: &Signature, depth: usize) -> Arc<Formula> {
    let pick = |rng: &mut GenRng| vars[rng.gen_range(0..vars.len())].clone();
    if depth == 0 || rng.gen_bool(0.25) {
        let atoms = if vars.is_empty() { 1 } else { 3 };
        return match rng.gen_range(0..atoms) {
            0 => Formula::constant(small_rational(rng)),
            1 => Formula::dhat(pick(rng), pick(rng)),
            _ => match sig.predicates().choose(rng) {
                Some(s) => Formula::atom(&s.name, (0..s.arity).map(|_| pick(rng)).collect()),
                None => Formula::dhat(pick(rng), pick(rng)),
            },
        };
    }
    let sub = |rng: &mut GenRng| random_qf(rng, vars, sig, depth - 1);
    match rng.gen_range(0..7) {
        0 => Formula::add(sub(rng), sub(rng)),
        1 => Formula::sub(sub(rng), sub(rng)),
        2 => Formula::scale(scale_factor(rng), sub(rng)),
        3 => Formula::min(sub(rng), sub(rng)),
        4 => Formula::max(sub(rng), sub(rng)),
        5 => Formula::abs(sub(rng)),
        _ => sub(rng),
    }
}

/// Options for [`random_formula`].
#[derive(Debug, Clone, Copy)]
pub struct FormulaShape {
    pub depth: usize,
    /// Allow the raw distance `d` (which has no modulus).
    pub raw_distance: bool,
    /// Allow families marked as one-sided approximations.
    pub prefix_only: bool,
}

/// A well-formed formula with free variables among `free`, using
/// quantifiers and families. Bound variables get fresh names.
pub fn random_formula(rng: &mut GenRng, free: &[Var], sig: &Signature, shape: FormulaShape) -> Arc<Formula> {
    let mut counter = 0;
    gen_formula(rng, free, sig, shape, shape.depth, &mut counter)
}

fn gen_formula(
    rng: &mut GenRng,
    scope: &[Var],
    sig: &Signature,
    shape: FormulaShape,
    depth: usize,
    counter: &mut usize,
) -> Arc<Formula> {
    if depth == 0 || rng.gen_bool(0.2) {
        if shape.raw_distance && !scope.is_empty() && rng.gen_bool(0.2) {
            let a = scope[rng.gen_range(0..scope.len())].clone();
            let b = scope[rng.gen_range(0..scope.len())].clone();
            return Formula::dist(a, b);
        }
        return random_qf(rng, scope, sig, 0);
    }
    let sub = |rng: &mut GenRng, scope: &[Var], counter: &mut usize| gen_formula(rng, scope, sig, shape, depth - 1, counter);
    match rng.gen_range(0..10) {
        0 => Formula::add(sub(rng, scope, counter), sub(rng, scope, counter)),
        1 => Formula::sub(sub(rng, scope, counter), sub(rng, scope, counter)),
        2 => Formula::scale(scale_factor(rng), sub(rng, scope, counter)),
        3 => Formula::min(sub(rng, scope, counter), sub(rng, scope, counter)),
        4 => Formula::max(sub(rng, scope, counter), sub(rng, scope, counter)),
        5 => Formula::abs(sub(rng, scope, counter)),
        6 | 7 => {
            let v = Var::new(&format!("b{}", *counter));
            *counter += 1;
            let mut inner = scope.to_vec();
            inner.push(v.clone());
            let body = sub(rng, &inner, counter);
            if rng.gen_bool(0.5) {
                Formula::sup(v, body)
            } else {
                Formula::inf(v, body)
            }
        }
        _ => {
            let members: Vec<Arc<Formula>> = (0..rng.gen_range(1..=3)).map(|_| sub(rng, scope, counter)).collect();
            let declared = members
                .iter()
                .map(|m| infer_modulus(m, sig))
                .collect::<Result<Vec<_>, _>>()
                .map(|ms| ms.iter().fold(ModulusVector::default(), |acc, m| acc.pointwise_max(m)));
            let Ok(mut declared) = declared else {
                // Members with a raw distance: fall back to a sum.
                return members.into_iter().reduce(Formula::add).unwrap();
            };
            if rng.gen_bool(0.3) {
                declared.value_bound = &declared.value_bound + &Rational::new(1, 2);
            }
            let exactness = if shape.prefix_only && rng.gen_bool(0.3) { Exactness::PrefixOnly } else { Exactness::Exact };
            if rng.gen_bool(0.5) {
                Formula::join(members, exactness, declared)
            } else {
                Formula::meet(members, exactness, declared)
            }
        }
    }
}

/// Options for [`random_borel`].
#[derive(Debug, Clone, Copy)]
pub struct BorelShape {
    pub depth: usize,
    pub max_support: usize,
    pub max_members: usize,
    pub theta_depth: usize,
}

/// A Borel code of depth at most `shape.depth`.
pub fn random_borel(rng: &mut GenRng, sig: &Signature, shape: BorelShape) -> BorelCode {
    if shape.depth <= 1 || rng.gen_bool(0.2) {
        return random_basic(rng, sig, shape);
    }
    let inner = BorelShape { depth: shape.depth - 1, ..shape };
    if rng.gen_bool(0.5) {
        BorelCode::neg(random_borel(rng, sig, inner))
    } else {
        let n = rng.gen_range(1..=shape.max_members);
        BorelCode::sup((0..n).map(|_| random_borel(rng, sig, inner)).collect())
    }
}

pub fn random_basic(rng: &mut GenRng, sig: &Signature, shape: BorelShape) -> BorelCode {
    let support = rng.gen_range(0..=shape.max_support);
    let vars: Vec<Var> = (0..support).map(z).collect();
    BorelCode::basic(random_qf(rng, &vars, sig, shape.theta_depth), support)
}

/// `min(1, diam)` as a sup over `n = 2..=max_n` of the largest truncated
/// distance among the first `n` coordinates.
pub fn diam_code(max_n: usize) -> BorelCode {
    BorelCode::sup(
        (2..=max_n)
            .map(|n| {
                let pairs = (0..n).flat_map(|i| (0..n).map(move |j| Formula::dhat(z(i), z(j))));
                BorelCode::basic(Formula::max_all(pairs).expect("n ≥ 2"), n)
            })
            .collect(),
    )
}

/// Tally of node kinds, for corpus coverage checks.
pub fn node_kinds(code: &BorelCode) -> BTreeMap<&'static str, usize> {
    fn walk(code: &BorelCode, out: &mut BTreeMap<&'static str, usize>) {
        match code {
            BorelCode::Basic { .. } => *out.entry("basic").or_default() += 1,
            BorelCode::SupFamily(ms) => {
                *out.entry("sup").or_default() += 1;
                ms.iter().for_each(|m| walk(m, out));
            }
            BorelCode::Neg(inner) => {
                *out.entry("neg").or_default() += 1;
                if matches!(**inner, BorelCode::SupFamily(_)) {
                    *out.entry("neg-sup").or_default() += 1;
                }
                walk(inner, out);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(code, &mut out);
    out
}
