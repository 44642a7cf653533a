//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! All comparisons are exact rational equalities.

use std::collections::BTreeMap;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use clw::formula::{
    check_wellformed, eval, eval_table, infer_modulus, lipschitz_audit, parse_formula, Env, Formula, Var,
};
use clw::gen::{self, BorelShape, FormulaShape, GenRng};
use clw::io::{borel_to_json, parse_structure, structure_to_json};
use clw::rational::{q, Rational};
use clw::scott::{
    gh_bruteforce, gh_rank, katetov_check, katetov_extend, katetov_from_correspondence, q_error, scott_formula,
    scott_var, stabilization_rank, BiKatetov, FiniteSpace, RankEngine,
};
use clw::structure::{iso_check, tuples, PredicateSymbol, Signature, StructureCode};
use clw::synthesis::{synthesize, synthesize_sentence, verify_formula_all_u, PrefixPolicy, StructureClass};
use clw::vaught::{k_lipschitz_audit, z, AStarOracle, BorelCode};
use rand::Rng;

const BUDGET: u64 = 10_000_000;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Corpus {
    sig: Signature,
    structures: Vec<StructureCode>,
    codes: Vec<BorelCode>,
}

fn corpus() -> Corpus {
    let sig = gen::corpus_signature();
    let mut rng = gen::rng(20_240_611);
    let structures: Vec<StructureCode> = (0..20)
        .map(|i| {
            let p = gen::random_structure(&mut rng, 1 + i % 4, &sig);
            p.validate().expect("generated structure is valid");
            p.quotient_zero_distance().expect("quotient")
        })
        .collect();
    let mut codes = Vec::new();
    for depth in 1..=4 {
        let shape = BorelShape { depth, max_support: 2, max_members: 3, theta_depth: 2 };
        for _ in 0..13 {
            codes.push(gen::random_borel(&mut rng, &sig, shape));
        }
    }
    let shape = BorelShape { depth: 1, max_support: 2, max_members: 1, theta_depth: 2 };
    let mut basic = || gen::random_basic(&mut rng, &sig, shape);
    codes.push(BorelCode::neg(BorelCode::sup(vec![basic(), basic()])));
    codes.push(BorelCode::neg(BorelCode::sup(vec![basic(), BorelCode::neg(basic())])));
    codes.push(BorelCode::sup(vec![BorelCode::neg(BorelCode::sup(vec![basic(), basic()])), basic()]));
    codes.push(gen::diam_code(4));
    Corpus { sig, structures, codes }
}

fn class_policy(c: &Corpus) -> PrefixPolicy {
    PrefixPolicy::Certified { class: StructureClass::covering(&c.structures), multiplier: 1 }
}

fn criterion_1(c: &Corpus) -> Outcome {
    let mut kinds = BTreeMap::new();
    for code in &c.codes {
        for (kind, n) in gen::node_kinds(code) {
            if n > 0 {
                *kinds.entry(kind).or_insert(0usize) += 1;
            }
        }
    }
    let depths: Vec<usize> = c.codes.iter().map(BorelCode::depth).collect();
    ensure(c.codes.len() >= 50 && c.structures.len() >= 20, || "corpus too small".into())?;
    for kind in ["basic", "sup", "neg", "neg-sup"] {
        ensure(kinds.get(kind).copied().unwrap_or(0) > 0, || format!("no code with a {kind} node"))?;
    }
    for d in 1..=4 {
        ensure(depths.contains(&d), || format!("no code of depth {d}"))?;
    }
    ensure(c.structures.iter().all(|p| p.size() <= 4), || "structure with more than 4 points".into())?;
    let policy = class_policy(c);
    let mut instances = 0;
    for (ci, code) in c.codes.iter().enumerate() {
        for k in 0..=2 {
            let phi = synthesize(code, k, &c.sig, &policy).map_err(|e| format!("code {ci} k {k}: {e}"))?;
            for (pi, p) in c.structures.iter().enumerate() {
                let verdicts = verify_formula_all_u(&phi, code, p, k, BUDGET)
                    .map_err(|e| format!("code {ci} structure {pi} k {k}: {e}"))?;
                instances += verdicts.len();
            }
        }
    }
    Ok(format!(
        "{} codes (kinds {:?}), {} structures, k in 0..=2: {instances} (code, p, k, u) instances equal",
        c.codes.len(),
        kinds,
        c.structures.len()
    ))
}

fn criterion_2(c: &Corpus) -> Outcome {
    let sentence = synthesize_sentence(&gen::diam_code(4), &c.sig, &class_policy(c)).map_err(|e| e.to_string())?;
    let direct = Formula::sup("x", Formula::sup("y", Formula::dhat("x", "y")));
    for (pi, p) in c.structures.iter().enumerate() {
        let lhs = eval(&sentence, p, &Env::new()).map_err(|e| e.to_string())?;
        let rhs = eval(&direct, p, &Env::new()).map_err(|e| e.to_string())?;
        let diam = p.diameter().min_of(Rational::one());
        ensure(lhs.tag.is_exact() && lhs.value == rhs.value && rhs.value == diam, || {
            format!("structure {pi}: synthesized {lhs}, direct {}, min(1, diam) {diam}", rhs.value)
        })?;
    }
    Ok(format!("{} structures, sentence = sup x sup y dhat(x,y) = min(1, diam)", c.structures.len()))
}

/// `max` over all `r`-tuples from `z_0..z_{s-1}` of `θ`.
fn closure_theta(theta: &Arc<Formula>, r: usize, s: usize) -> Arc<Formula> {
    Formula::max_all(tuples(s, r).map(|t| {
        let map = (0..r).map(|i| (z(i), z(t[i]))).collect();
        theta.rename(&map)
    }))
    .expect("s ≥ 1")
}

/// Invariant codes and their values `A(p)`, computed directly.
type Expected = Box<dyn Fn(&StructureCode) -> Rational + Sync>;

fn invariant_codes(c: &Corpus, rng: &mut GenRng) -> Vec<(BorelCode, Expected)> {
    let mut out: Vec<(BorelCode, Expected)> = Vec::new();
    out.push((gen::diam_code(4), Box::new(|p: &StructureCode| p.diameter().min_of(Rational::one()))));
    for value in [q(0, 1), q(1, 3), q(-3, 4)] {
        let v = value.clone();
        out.push((BorelCode::basic(Formula::constant(value.clone()), 0), Box::new(move |_: &StructureCode| v.clone())));
        let v = value.clone();
        out.push((
            BorelCode::neg(BorelCode::basic(Formula::constant(value), 1)),
            Box::new(move |_: &StructureCode| -&v),
        ));
    }
    for i in 0..8 {
        let r = 1 + i % 2;
        let vars: Vec<Var> = (0..r).map(z).collect();
        let theta = gen::random_qf(rng, &vars, &c.sig, 2);
        let code = BorelCode::sup(vec![BorelCode::basic(closure_theta(&theta, r, r + 2), r + 2)]);
        let expected = move |p: &StructureCode| {
            tuples(p.size(), r)
                .map(|t| {
                    let env: Env = t.iter().enumerate().map(|(i, &a)| (z(i), a)).collect();
                    eval(&theta, p, &env).expect("closed QF formula").value
                })
                .max()
                .expect("nonempty")
        };
        out.push((code, Box::new(expected)));
    }
    out
}

fn criterion_3(c: &Corpus) -> Outcome {
    let mut rng = gen::rng(33);
    let policy = class_policy(c);
    let pairs: Vec<(StructureCode, StructureCode)> = c
        .structures
        .iter()
        .map(|p| {
            let perm = gen::random_permutation(&mut rng, p.size());
            let image = p.reindex(&perm).expect("permutation");
            (p.clone(), image)
        })
        .collect();
    for (pi, (a, b)) in pairs.iter().enumerate() {
        ensure(iso_check(a, b).is_some(), || format!("structure {pi} is not isomorphic to its reindexing"))?;
    }
    let mut checked = 0;
    for (ci, code) in c.codes.iter().enumerate() {
        let sentence = synthesize_sentence(code, &c.sig, &policy).map_err(|e| e.to_string())?;
        for (pi, (a, b)) in pairs.iter().enumerate() {
            let va = eval(&sentence, a, &Env::new()).map_err(|e| e.to_string())?.value;
            let vb = eval(&sentence, b, &Env::new()).map_err(|e| e.to_string())?.value;
            ensure(va == vb, || format!("code {ci} structure {pi}: {va} vs {vb}"))?;
            checked += 1;
        }
    }
    let invariant = invariant_codes(c, &mut rng);
    let mut oracle_checks = 0;
    for (ci, (code, expected)) in invariant.iter().enumerate() {
        for (pi, p) in c.structures.iter().enumerate() {
            let want = expected(p);
            for k in 0..=2 {
                let oracle = AStarOracle::new(code, p, k, BUDGET).map_err(|e| e.to_string())?;
                for u in tuples(p.size(), k) {
                    let got = oracle.value(&u).map_err(|e| e.to_string())?;
                    ensure(got == want, || {
                        format!("invariant code {ci} structure {pi} k {k} u {u:?}: oracle {got}, A(p) {want}")
                    })?;
                    oracle_checks += 1;
                }
            }
        }
    }
    Ok(format!(
        "{checked} isomorphic sentence pairs equal; {} invariant codes give A*k(p,u) = A(p) in {oracle_checks} cases",
        invariant.len()
    ))
}

fn criterion_4(c: &Corpus) -> Outcome {
    let mut rng = gen::rng(44);
    let structures: Vec<StructureCode> = (0..10).map(|i| gen::random_structure(&mut rng, 1 + i % 5, &c.sig)).collect();
    let free = [Var::new("x"), Var::new("y"), Var::new("z")];
    let shape = FormulaShape { depth: 4, raw_distance: false, prefix_only: false };
    let mut pairs = 0;
    for fi in 0..100 {
        let f = gen::random_formula(&mut rng, &free, &c.sig, shape);
        check_wellformed(&f, &c.sig, Some(&free.iter().cloned().collect())).map_err(|e| format!("formula {fi}: {e}"))?;
        for (pi, p) in structures.iter().enumerate() {
            let report = lipschitz_audit(&f, p).map_err(|e| format!("formula {fi} structure {pi}: {e}: {f}"))?;
            pairs += report.pairs_checked;
        }
    }
    let mut triples = 0;
    for (ci, code) in c.codes.iter().enumerate() {
        for (pi, p) in c.structures.iter().enumerate() {
            for k in 0..=2 {
                k_lipschitz_audit(code, p, k, BUDGET).map_err(|e| format!("code {ci} structure {pi} k {k}: {e}"))?;
                triples += 1;
            }
        }
    }
    let policy = class_policy(c);
    for (ci, code) in c.codes.iter().enumerate() {
        let bound = code.bound(&c.sig).map_err(|e| e.to_string())?;
        for k in 0..=2 {
            let phi = synthesize(code, k, &c.sig, &policy).map_err(|e| e.to_string())?;
            let m = infer_modulus(&phi, &c.sig).map_err(|e| e.to_string())?;
            let expected_vars: Vec<Var> = (0..k.min(code.support())).map(|i| Var::new(&format!("x{i}"))).collect();
            let vars: Vec<Var> = m.lipschitz.keys().cloned().collect();
            ensure(vars == expected_vars && m.lipschitz.values().all(|l| *l == Rational::from(k)), || {
                format!("code {ci} k {k}: modulus {:?}", m.lipschitz)
            })?;
            ensure(m.value_bound <= bound, || format!("code {ci} k {k}: value bound {} > {bound}", m.value_bound))?;
        }
    }
    Ok(format!(
        "100 formulas x 10 structures ({pairs} pairs audited); {triples} (code, p, k) audits; modulus exactly k on {} codes",
        c.codes.len()
    ))
}

fn criterion_5(c: &Corpus) -> Outcome {
    let mut instances = 0;
    let with_neg: Vec<(usize, &BorelCode)> = c.codes.iter().enumerate().filter(|(_, code)| code.contains_neg()).collect();
    for &(ci, code) in &with_neg {
        for (pi, p) in c.structures.iter().enumerate() {
            for k in 0..=2 {
                let single = PrefixPolicy::certified_for(p);
                let double = single.clone().with_multiplier(2);
                let phi1 = synthesize(code, k, &c.sig, &single).map_err(|e| e.to_string())?;
                let phi2 = synthesize(code, k, &c.sig, &double).map_err(|e| e.to_string())?;
                let t1 = eval_table(&phi1, p).map_err(|e| e.to_string())?;
                let t2 = eval_table(&phi2, p).map_err(|e| e.to_string())?;
                ensure(t1.tag.is_exact() && t1.values == t2.values, || {
                    format!("code {ci} structure {pi} k {k}: single and doubled prefixes differ")
                })?;
                let verdicts = verify_formula_all_u(&phi1, code, p, k, BUDGET)
                    .map_err(|e| format!("code {ci} structure {pi} k {k}: {e}"))?;
                instances += verdicts.len();
            }
        }
    }
    Ok(format!(
        "{} codes with negation: value at the truncation bound = value at twice it = oracle in {instances} instances",
        with_neg.len()
    ))
}

fn spaces(seed: u64, count: usize, max_size: usize, q: i64, max_steps: i64) -> Vec<FiniteSpace> {
    let mut rng = gen::rng(seed);
    (0..count).map(|i| gen::random_space(&mut rng, 1 + i % max_size, q, max_steps)).collect()
}

fn criterion_6() -> Outcome {
    let xs = spaces(66, 32, 4, 6, 9);
    let mut pairs = 0;
    for (i, a) in xs.iter().enumerate() {
        let own = gh_rank(a, a).map_err(|e| e.to_string())?;
        ensure(own.value.is_zero(), || format!("gh(X{i}, X{i}) = {}", own.value))?;
        for (j, b) in xs.iter().enumerate().skip(i + 1) {
            let r = gh_rank(a, b).map_err(|e| e.to_string())?;
            let back = gh_rank(b, a).map_err(|e| e.to_string())?;
            ensure(r.scale_factor <= Rational::one(), || "scale factor above 1".into())?;
            ensure(a.scaled(&r.scale_factor).diameter() < Rational::one(), || "rescaled diameter not below 1".into())?;
            let brute = gh_bruteforce(&a.scaled(&r.scale_factor), &b.scaled(&r.scale_factor), BUDGET)
                .map_err(|e| e.to_string())?;
            ensure(r.value == brute, || format!("X{i}, X{j}: rank {} vs bruteforce {brute}", r.value))?;
            ensure(r.value == back.value, || format!("X{i}, X{j}: not symmetric"))?;
            pairs += 1;
        }
    }
    Ok(format!("{} spaces, {pairs} pairs: gh_rank = gh_bruteforce, gh(X,X) = 0, symmetric", xs.len()))
}

/// Exact conversion to an integer count of `1/unit`.
fn units(v: &Rational, unit: i64) -> i64 {
    let n = (v.to_f64() * unit as f64).round() as i64;
    assert_eq!(Rational::new(n, unit), *v, "value not a multiple of 1/{unit}");
    n
}

fn criterion_7() -> Outcome {
    let q = 8;
    let xs = spaces(77, 9, 3, q, 7);
    let unit = 2 * q;
    let mut cells = 0u64;
    let mut max_stage = 0;
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in xs.iter().enumerate() {
            let tag = format!("X{i}, X{j}");
            let mut engine = RankEngine::new(x, y).map_err(|e| e.to_string())?;
            let mut mirror = RankEngine::new(y, x).map_err(|e| e.to_string())?;
            let alpha_star = engine.stabilize(x.size() * y.size(), 64).map_err(|e| e.to_string())?;
            let top = alpha_star + 1;
            max_stage = max_stage.max(top);
            engine.ensure_stage(top);
            mirror.ensure_stage(top);
            let mut allowed: Vec<Rational> = vec![Rational::zero()];
            for (a, a2) in (0..x.size()).flat_map(|a| (0..x.size()).map(move |a2| (a, a2))) {
                for (b, b2) in (0..y.size()).flat_map(|b| (0..y.size()).map(move |b2| (b, b2))) {
                    allowed.push((x.d(a, a2) - y.d(b, b2)).abs() * Rational::new(1, 2));
                }
            }
            let dx: Vec<i64> = x.dist_table().iter().map(|d| units(d, unit)).collect();
            let dy: Vec<i64> = y.dist_table().iter().map(|d| units(d, unit)).collect();
            for alpha in 0..=top {
                let mut by_n: Vec<Vec<Cell>> = Vec::new();
                for n in 0..=3 {
                    let mut cells_n = Vec::new();
                    for a in tuples(x.size(), n) {
                        for b in tuples(y.size(), n) {
                            let v = engine.value(alpha, &a, &b).map_err(|e| e.to_string())?;
                            ensure(allowed.contains(&v), || format!("{tag} alpha {alpha}: {v} outside the value set"))?;
                            ensure(mirror.value(alpha, &b, &a).map_err(|e| e.to_string())? == v, || {
                                format!("{tag} alpha {alpha} {a:?} {b:?}: not symmetric")
                            })?;
                            if alpha > 0 {
                                let prev = engine.value(alpha - 1, &a, &b).map_err(|e| e.to_string())?;
                                ensure(prev <= v, || format!("{tag} alpha {alpha} {a:?} {b:?}: decreased"))?;
                            }
                            cells_n.push((a.clone(), b, units(&v, unit)));
                            cells += 1;
                        }
                    }
                    by_n.push(cells_n);
                }
                for (n, cells_n) in by_n.iter().enumerate() {
                    for (a, b, v) in cells_n {
                        for (a2, b2, v2) in cells_n {
                            let move_a = (0..n).map(|i| dx[a[i] * x.size() + a2[i]]).max().unwrap_or(0);
                            let move_b = (0..n).map(|i| dy[b[i] * y.size() + b2[i]]).max().unwrap_or(0);
                            ensure((v - v2).abs() <= move_a.max(move_b) * 2, || {
                                format!("{tag} alpha {alpha}: not 1-Lipschitz at {a:?} {b:?} / {a2:?} {b2:?}")
                            })?;
                        }
                    }
                }
                for (m, cells_m) in by_n.iter().enumerate() {
                    for (c, d, v) in cells_m {
                        for n in 0..=m {
                            for inj in tuples(m, n).filter(|t| distinct(t)) {
                                let a: Vec<usize> = inj.iter().map(|&i| c[i]).collect();
                                let b: Vec<usize> = inj.iter().map(|&i| d[i]).collect();
                                let small = units(&engine.value(alpha, &a, &b).map_err(|e| e.to_string())?, unit);
                                ensure(small <= *v, || format!("{tag} alpha {alpha}: {a:?},{b:?} above {c:?},{d:?}"))?;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(format!(
        "{} spaces, {} ordered pairs, n <= 3, alpha up to stabilization + 1 (max {max_stage}): {cells} cells",
        xs.len(),
        xs.len() * xs.len()
    ))
}

/// `(ā, b̄, r)` with the rank in units.
type Cell = (Vec<usize>, Vec<usize>, i64);

fn distinct(t: &[usize]) -> bool {
    t.iter().enumerate().all(|(i, a)| !t[..i].contains(a))
}

fn criterion_8() -> Outcome {
    let mut rng = gen::rng(88);
    let mut xs = spaces(89, 6, 3, 8, 7);
    for i in [2, 5] {
        let perm = gen::random_permutation(&mut rng, xs[i].size());
        let image = xs[i].to_structure().reindex(&perm).map_err(|e| e.to_string())?;
        xs.push(FiniteSpace::from_structure(&image).map_err(|e| e.to_string())?);
    }
    let mut checked = 0;
    let (mut zero, mut positive) = (0, 0);
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in xs.iter().enumerate() {
            let qy = y.to_structure();
            let mut engine = RankEngine::new(x, y).map_err(|e| e.to_string())?;
            for alpha in 0..=4 {
                for n in 0..=2 {
                    for a in tuples(x.size(), n) {
                        let psi = scott_formula(x, alpha, &a, BUDGET).map_err(|e| e.to_string())?;
                        let table = eval_table(&psi, &qy).map_err(|e| e.to_string())?;
                        for b in tuples(y.size(), n) {
                            let env: Env = b.iter().enumerate().map(|(i, &p)| (scott_var(i), p)).collect();
                            let got = table.get(&env).map_err(|e| e.to_string())?;
                            let want = engine.value_mut(alpha, &a, &b).map_err(|e| e.to_string())?;
                            ensure(*got == want, || {
                                format!("X{i}, X{j} alpha {alpha} {a:?} {b:?}: formula {got}, rank {want}")
                            })?;
                            checked += 1;
                        }
                    }
                }
            }
            let alpha_star = stabilization_rank(x, y, None).map_err(|e| e.to_string())?;
            let psi = scott_formula(x, alpha_star, &[], BUDGET).map_err(|e| e.to_string())?;
            let value = eval(&psi, &qy, &Env::new()).map_err(|e| e.to_string())?.value;
            let gh = gh_bruteforce(x, y, BUDGET).map_err(|e| e.to_string())?;
            ensure(value.is_zero() == gh.is_zero(), || format!("X{i}, X{j}: sentence {value}, gh {gh}"))?;
            if gh.is_zero() {
                zero += 1;
            } else {
                positive += 1;
            }
        }
    }
    Ok(format!(
        "{checked} (X, q, alpha, a, b) values equal; at stabilization the sentence vanishes exactly on the {zero} pairs at distance 0 ({positive} positive)"
    ))
}

fn restrict(x: &FiniteSpace, idx: &[usize]) -> FiniteSpace {
    let dist = idx.iter().flat_map(|&i| idx.iter().map(move |&j| x.d(i, j).clone())).collect();
    FiniteSpace::new(idx.len(), dist).expect("subspace")
}

fn random_subset(rng: &mut GenRng, n: usize) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

/// Cross distances of a random metric on the disjoint union of `a` and `b`.
fn amalgam(rng: &mut GenRng, a: &FiniteSpace, b: &FiniteSpace) -> BiKatetov {
    let (na, nb) = (a.size(), b.size());
    let n = na + nb;
    let half = a.diameter().max_of(b.diameter()) * Rational::new(1, 2);
    let mut d = vec![Rational::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = match (i < na, j < na) {
                (true, true) => a.d(i, j).clone(),
                (false, false) => b.d(i - na, j - na).clone(),
                _ if i < j => &half + &Rational::new(rng.gen_range(0..=8), 8),
                _ => Rational::zero(),
            };
        }
    }
    for i in 0..n {
        for j in 0..i {
            d[i * n + j] = d[j * n + i].clone();
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = &d[i * n + k] + &d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    let values = (0..na).flat_map(|i| (0..nb).map(move |j| (i, j))).map(|(i, j)| d[i * n + na + j].clone()).collect();
    BiKatetov::new(na, nb, values).expect("shape")
}

fn correspondences(nx: usize, ny: usize) -> Vec<Vec<(usize, usize)>> {
    let cells: Vec<(usize, usize)> = (0..nx).flat_map(|a| (0..ny).map(move |b| (a, b))).collect();
    (1u32..1 << cells.len())
        .map(|mask| cells.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &c)| c).collect::<Vec<_>>())
        .filter(|r: &Vec<(usize, usize)>| {
            (0..nx).all(|a| r.iter().any(|&(x, _)| x == a)) && (0..ny).all(|b| r.iter().any(|&(_, y)| y == b))
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let mut rng = gen::rng(99);
    for trial in 0..200 {
        let nx = rng.gen_range(1..=4);
        let ny = rng.gen_range(1..=4);
        let x = gen::random_space(&mut rng, nx, 8, 8);
        let y = gen::random_space(&mut rng, ny, 8, 8);
        let sub_x = random_subset(&mut rng, nx);
        let sub_y = random_subset(&mut rng, ny);
        let (ax, by) = (restrict(&x, &sub_x), restrict(&y, &sub_y));
        let f = if trial % 2 == 0 {
            let mut pairs: Vec<(usize, usize)> = (0..ax.size()).map(|a| (a, rng.gen_range(0..by.size()))).collect();
            pairs.extend((0..by.size()).map(|b| (rng.gen_range(0..ax.size()), b)));
            katetov_from_correspondence(&ax, &by, &pairs).map_err(|e| e.to_string())?
        } else {
            amalgam(&mut rng, &ax, &by)
        };
        katetov_check(&f, &ax, &by).map_err(|e| format!("trial {trial}: generated input rejected: {e}"))?;
        let g = katetov_extend(&f, &sub_x, &sub_y, &x, &y).map_err(|e| e.to_string())?;
        katetov_check(&g, &x, &y).map_err(|e| format!("trial {trial}: extension rejected: {e}"))?;
        for (i, &a) in sub_x.iter().enumerate() {
            for (j, &b) in sub_y.iter().enumerate() {
                ensure(g.get(a, b) == f.get(i, j), || format!("trial {trial}: extension changes f at ({a}, {b})"))?;
            }
        }
    }
    let xs = spaces(98, 12, 3, 8, 8);
    for (i, x) in xs.iter().enumerate() {
        let id = BiKatetov::identity(x);
        katetov_check(&id, x, x).map_err(|e| e.to_string())?;
        ensure(q_error(&id).is_zero(), || format!("X{i}: q_error(identity) = {}", q_error(&id)))?;
    }
    let mut agreements = 0;
    for x in &xs {
        for y in &xs {
            let best = correspondences(x.size(), y.size())
                .iter()
                .map(|r| {
                    let f = katetov_from_correspondence(x, y, r).expect("correspondence");
                    katetov_check(&f, x, y).expect("bi-Katetov");
                    q_error(&f)
                })
                .min()
                .expect("some correspondence");
            let gh = gh_bruteforce(x, y, BUDGET).map_err(|e| e.to_string())?;
            ensure(best == gh, || format!("correspondence functions give {best}, gh {gh}"))?;
            agreements += 1;
        }
    }
    Ok(format!(
        "200 extensions valid and restricting to their input; q_error(identity) = 0 on {} spaces; min q_error over correspondences = gh on {agreements} pairs",
        xs.len()
    ))
}

fn seeded_violation(class: &str) -> String {
    let sig = Signature::new(vec![PredicateSymbol {
        name: "P".into(),
        arity: 1,
        lipschitz: vec![Rational::one()],
        bound: Rational::one(),
    }])
    .expect("signature");
    let mut dist = vec![q(0, 1), q(1, 2), q(1, 1), q(1, 2), q(0, 1), q(1, 2), q(1, 1), q(1, 2), q(0, 1)];
    let mut table = vec![q(0, 1), q(1, 4), q(1, 2)];
    match class {
        "NonzeroDiagonal" => dist[4] = q(1, 8),
        "NegativeDistance" => {
            dist[1] = q(-1, 2);
            dist[3] = q(-1, 2);
        }
        "AsymmetricDistance" => dist[1] = q(1, 3),
        "TriangleViolation" => {
            dist[2] = q(3, 2);
            dist[6] = q(3, 2);
        }
        "ModulusViolation" => table[1] = q(7, 8),
        "BoundViolation" => table.iter_mut().for_each(|v| *v = &*v + &q(2, 1)),
        _ => {}
    }
    match StructureCode::new(sig, 3, dist, vec![table]).and_then(|p| p.validate()) {
        Ok(()) => "valid".into(),
        Err(e) => e.code().into(),
    }
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_clw")).args(args).output().expect("run clw");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion_10(c: &Corpus) -> Outcome {
    let mut rng = gen::rng(1010);
    let free = [Var::new("x"), Var::new("y")];
    let shape = FormulaShape { depth: 5, raw_distance: true, prefix_only: true };
    for fi in 0..500 {
        let f = gen::random_formula(&mut rng, &free, &c.sig, shape);
        let text = f.to_string();
        let back = parse_formula(&text, &c.sig).map_err(|e| format!("formula {fi}: {e}: {text}"))?;
        ensure(back == f && back.to_string() == text, || format!("formula {fi} does not round-trip: {text}"))?;
    }
    let classes = [
        "NonzeroDiagonal",
        "NegativeDistance",
        "AsymmetricDistance",
        "TriangleViolation",
        "ModulusViolation",
        "BoundViolation",
    ];
    ensure(seeded_violation("none") == "valid", || "unmodified structure rejected".into())?;
    for class in classes {
        let got = seeded_violation(class);
        ensure(got == class, || format!("seeded {class}, reported {got}"))?;
    }
    let parsed = [
        (r#"{"size":2,"dist":[["0","1"]]}"#, "DimensionMismatch"),
        (r#"{"size":1,"dist":[["0"]],"predicates":{"Q":["0"]}}"#, "UnknownPredicate"),
        (r#"{"signature":[{"name":"P","arity":1,"lipschitz":["1"],"bound":"1"}],"size":1,"dist":[["0"]]}"#, "MissingPredicate"),
        (r#"{"size":"#, "MalformedInput"),
    ];
    for (text, class) in parsed {
        let got = parse_structure(text).err().map(|e| e.code()).unwrap_or("valid");
        ensure(got == class, || format!("expected {class}, reported {got}"))?;
    }
    let pseudo = StructureCode::new(
        Signature::new(vec![PredicateSymbol {
            name: "P".into(),
            arity: 1,
            lipschitz: vec![Rational::one()],
            bound: Rational::one(),
        }])
        .unwrap(),
        2,
        vec![q(0, 1), q(0, 1), q(0, 1), q(0, 1)],
        vec![vec![q(0, 1), q(1, 2)]],
    )
    .map_err(|e| e.to_string())?;
    let got = pseudo.quotient_zero_distance().err().map(|e| e.code()).unwrap_or("valid");
    ensure(got == "InconsistentPredicateOnClass" || got == "ModulusViolation", || {
        format!("zero-distance class with differing predicate values: {got}")
    })?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let write = |name: &str, text: String| {
        let path = dir.path().join(name);
        std::fs::write(&path, text).expect("write input");
        path.to_string_lossy().into_owned()
    };
    let two = write("two.json", structure_to_json(&StructureCode::metric(2, vec![q(0, 1), q(3, 1), q(3, 1), q(0, 1)]).unwrap()));
    let diam = write("diam.json", borel_to_json(&gen::diam_code(4), &Signature::metric_only()));
    let metric: Vec<String> = (0..3)
        .map(|i| {
            let x = gen::random_space(&mut rng, 2 + i, 4, 6);
            write(&format!("s{i}.json"), structure_to_json(&x.to_structure()))
        })
        .collect();
    let (code, out) = run_cli(&["eval", "(sup x (sup y (dhat x y)))", &two]);
    ensure(code == 0 && out == b"1/1\n", || format!("eval diam: exit {code}, {:?}", String::from_utf8_lossy(&out)))?;
    let mut verify = vec!["synthesize", diam.as_str(), "--verify"];
    verify.extend(metric.iter().map(String::as_str));
    let (code, out) = run_cli(&verify);
    let text = String::from_utf8_lossy(&out);
    ensure(code == 0 && text.trim_end().ends_with("3/3 equal"), || format!("synthesize --verify: exit {code}, {text}"))?;
    let (code, out) = run_cli(&["gh-rank", &metric[0], &metric[0]]);
    let text = String::from_utf8_lossy(&out);
    ensure(code == 0 && text.lines().next() == Some("0/1"), || format!("gh-rank: exit {code}, {text}"))?;

    let runs: [Vec<&str>; 4] = [
        vec!["--format", "json", "sweep", "--seed", "17"],
        vec!["--format", "json", "gh-rank", &metric[1], &metric[2], "--check"],
        vec!["rank-table", &metric[0], &metric[2], "--alpha-max", "2", "--n-max", "2"],
        verify.iter().copied().chain(["--format", "json"]).collect(),
    ];
    for args in &runs {
        let first = run_cli(args);
        let second = run_cli(args);
        ensure(first.0 == 0 && first == second, || format!("clw {}: reruns differ or fail (exit {})", args.join(" "), first.0))?;
    }
    Ok(format!(
        "500 formulas round-trip; {} seeded violation classes reported by code; CLI examples and {} byte-identical reruns",
        classes.len() + parsed.len() + 1,
        runs.len()
    ))
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let start = Instant::now();
    let corpus = corpus();
    let c = &corpus;
    let names = [
        "synthesized formula equals the Vaught transform oracle",
        "diameter sentence",
        "invariance",
        "modulus soundness",
        "negation-case truncation",
        "Gromov-Hausdorff oracle equivalence",
        "rank lemma properties",
        "rank formulas",
        "Katetov extension",
        "plumbing",
    ];
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let jobs: Vec<Box<dyn FnOnce() -> Outcome + Send + '_>> = vec![
            Box::new(move || criterion_1(c)),
            Box::new(move || criterion_2(c)),
            Box::new(move || criterion_3(c)),
            Box::new(move || criterion_4(c)),
            Box::new(move || criterion_5(c)),
            Box::new(criterion_6),
            Box::new(criterion_7),
            Box::new(criterion_8),
            Box::new(criterion_9),
            Box::new(move || criterion_10(c)),
        ];
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|job| {
                s.spawn(move || {
                    let t = Instant::now();
                    let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(job))
                        .unwrap_or_else(|_| Err("panicked".into()));
                    (r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    let mut failed = 0;
    for (i, ((result, secs), name)) in results.iter().zip(names).enumerate() {
        match result {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed in {:.1}s", names.len() - failed, names.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
