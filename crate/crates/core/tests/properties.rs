use proptest::prelude::*;
use rand::Rng;

use clw::formula::{eval, eval_table, infer_interval, infer_modulus, parse_formula, Env, Tag, Var};
use clw::gen::{self, BorelShape, FormulaShape};
use clw::rational::{q, Rational};
use clw::scott::{delta_k, literal_layer, stabilization_rank, FiniteSpace, RankEngine};
use clw::structure::{iso_check, tuples, StructureCode};
use clw::synthesis::{env_for, synthesize, truncation_bound, PrefixPolicy};
use clw::vaught::{AStarOracle, BorelCode};

const BUDGET: u64 = 10_000_000;

fn structure(seed: u64, max_size: usize) -> StructureCode {
    let mut rng = gen::rng(seed);
    let n = rng.gen_range(1..=max_size);
    gen::random_structure(&mut rng, n, &gen::corpus_signature())
}

fn space(seed: u64, max_size: usize) -> FiniteSpace {
    let mut rng = gen::rng(seed);
    let n = rng.gen_range(1..=max_size);
    gen::random_space(&mut rng, n, 8, 7)
}

fn free() -> Vec<Var> {
    vec![Var::new("x"), Var::new("y")]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rational_field_laws(a in -1_000_000i64..1_000_000, b in 1i64..1_000, c in -(1i64 << 40)..(1i64 << 40), d in 1i64..(1 << 20)) {
        let x = q(a, b);
        let y = q(c, d);
        prop_assert_eq!(&(&x + &y) - &y, x.clone());
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!((&x * &y) * &y, &x * &(&y * &y));
        prop_assert_eq!(x < y, (&x - &y).is_negative());
        prop_assert_eq!(x.to_string().parse::<Rational>().unwrap(), x);
    }

    #[test]
    fn iso_check_is_an_equivalence(seed: u64) {
        let p = structure(seed, 5);
        let mut rng = gen::rng(seed ^ 1);
        let pi = gen::random_permutation(&mut rng, p.size());
        let sigma = gen::random_permutation(&mut rng, p.size());
        let a = p.reindex(&pi).unwrap();
        let b = a.reindex(&sigma).unwrap();
        prop_assert!(iso_check(&p, &p).is_some());
        prop_assert!(iso_check(&p, &a).is_some());
        prop_assert!(iso_check(&a, &p).is_some());
        prop_assert!(iso_check(&a, &b).is_some());
        prop_assert!(iso_check(&p, &b).is_some());
        let iso = iso_check(&p, &a).unwrap();
        for i in 0..p.size() {
            for j in 0..p.size() {
                prop_assert_eq!(p.d(i, j), a.d(iso.map[i], iso.map[j]));
            }
        }
    }

    #[test]
    fn reindex_composes(seed: u64) {
        let p = structure(seed, 4);
        let mut rng = gen::rng(seed ^ 2);
        let y: Vec<usize> = (0..rng.gen_range(1..=5)).map(|_| rng.gen_range(0..p.size())).collect();
        let y2: Vec<usize> = (0..rng.gen_range(1..=5)).map(|_| rng.gen_range(0..y.len())).collect();
        let composed: Vec<usize> = y2.iter().map(|&i| y[i]).collect();
        prop_assert_eq!(p.reindex(&y).unwrap().reindex(&y2).unwrap(), p.reindex(&composed).unwrap());
    }

    #[test]
    fn quotient_is_idempotent(seed: u64) {
        let p = structure(seed, 4);
        let mut rng = gen::rng(seed ^ 3);
        let y: Vec<usize> = (0..rng.gen_range(1..=6)).map(|_| rng.gen_range(0..p.size())).collect();
        let pseudo = p.reindex(&y).unwrap();
        pseudo.validate().unwrap();
        let once = pseudo.quotient_zero_distance().unwrap();
        let twice = once.quotient_zero_distance().unwrap();
        prop_assert_eq!(&once, &twice);
        let mut distinct = y.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(once.size(), distinct.len());
        prop_assert!(iso_check(&once, &p.reindex(&distinct).unwrap()).is_some());
    }

    #[test]
    fn eval_is_invariant_under_isomorphism(seed: u64) {
        let p = structure(seed, 4);
        let mut rng = gen::rng(seed ^ 4);
        let f = gen::random_formula(&mut rng, &free(), p.signature(), FormulaShape { depth: 4, raw_distance: true, prefix_only: true });
        let pi = gen::random_permutation(&mut rng, p.size());
        let image = p.reindex(&pi).unwrap();
        let mut inverse = vec![0; pi.len()];
        for (i, &a) in pi.iter().enumerate() {
            inverse[a] = i;
        }
        for u in tuples(p.size(), 2) {
            let env: Env = free().into_iter().zip(u.iter().copied()).collect();
            let moved: Env = free().into_iter().zip(u.iter().map(|&a| inverse[a])).collect();
            prop_assert_eq!(eval(&f, &p, &env).unwrap(), eval(&f, &image, &moved).unwrap());
        }
    }

    #[test]
    fn values_respect_the_inferred_interval(seed: u64) {
        let p = structure(seed, 4);
        let mut rng = gen::rng(seed ^ 5);
        let f = gen::random_formula(&mut rng, &free(), p.signature(), FormulaShape { depth: 5, raw_distance: false, prefix_only: false });
        let (lo, hi) = infer_interval(&f, p.signature()).unwrap();
        let bound = infer_modulus(&f, p.signature()).unwrap().value_bound;
        let table = eval_table(&f, &p).unwrap();
        prop_assert_eq!(table.tag, Tag::Exact);
        for v in &table.values {
            prop_assert!(&lo <= v && v <= &hi);
            prop_assert!(v.abs() <= bound);
        }
    }

    #[test]
    fn formulas_round_trip_through_text(seed: u64) {
        let sig = gen::corpus_signature();
        let mut rng = gen::rng(seed);
        let f = gen::random_formula(&mut rng, &free(), &sig, FormulaShape { depth: 6, raw_distance: true, prefix_only: true });
        let text = f.to_string();
        prop_assert_eq!(parse_formula(&text, &sig).unwrap(), f);
    }

    #[test]
    fn rank_engine_matches_the_tuple_recursion(seed: u64) {
        let x = space(seed, 3);
        let y = space(seed ^ 6, 3);
        let mut engine = RankEngine::new(&x, &y).unwrap();
        for alpha in 0..=2 {
            for n in 0..=2 {
                let layer = literal_layer(&x, &y, alpha, n, BUDGET).unwrap();
                for a in tuples(x.size(), n) {
                    for b in tuples(y.size(), n) {
                        prop_assert_eq!(layer.get(&a, &b).unwrap(), &engine.value_mut(alpha, &a, &b).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn stabilized_ranks_are_pinned_distances(seed: u64) {
        let x = space(seed, 3);
        let y = space(seed ^ 7, 3);
        let mut engine = RankEngine::new(&x, &y).unwrap();
        let alpha = engine.saturate(64).unwrap();
        for k in 0..=2 {
            for a in tuples(x.size(), k) {
                for b in tuples(y.size(), k) {
                    prop_assert_eq!(engine.value(alpha, &a, &b).unwrap(), delta_k(&x, &y, &a, &b, BUDGET).unwrap());
                }
            }
        }
    }

    #[test]
    fn one_more_probe_keeps_the_rank(seed: u64) {
        let x = space(seed, 4);
        let y = space(seed ^ 8, 4);
        let n = x.size() * y.size();
        prop_assert_eq!(
            stabilization_rank(&x, &y, Some(n)).unwrap(),
            stabilization_rank(&x, &y, Some(n + 1)).unwrap()
        );
    }

    #[test]
    fn negation_prefixes_increase_to_the_transform(seed: u64) {
        let sig = gen::corpus_signature();
        let mut rng = gen::rng(seed);
        let shape = BorelShape { depth: 2, max_support: 2, max_members: 2, theta_depth: 2 };
        let inner = loop {
            let c = gen::random_borel(&mut rng, &sig, shape);
            if !c.contains_neg() {
                break c;
            }
        };
        let code = BorelCode::neg(inner);
        let p = structure(seed ^ 9, 3);
        let k = rng.gen_range(0..=2);
        let m = truncation_bound(&p, k.min(code.support()), &code.bound(&sig).unwrap(), code.support());
        let oracle = AStarOracle::new(&code, &p, k, BUDGET).unwrap();
        let mut previous: Option<Vec<Rational>> = None;
        for len in 1..=m {
            let phi = synthesize(&code, k, &sig, &PrefixPolicy::Fixed(len)).unwrap();
            let values: Vec<Rational> = tuples(p.size(), k)
                .map(|u| {
                    let v = eval(&phi, &p, &env_for(&u)).unwrap();
                    assert!(matches!(v.tag, Tag::LowerBound | Tag::Exact));
                    v.value
                })
                .collect();
            if let Some(prev) = &previous {
                prop_assert!(prev.iter().zip(&values).all(|(a, b)| a <= b));
            }
            previous = Some(values);
        }
        let last = previous.unwrap();
        for (u, v) in tuples(p.size(), k).zip(&last) {
            prop_assert_eq!(v, &oracle.value(&u).unwrap());
        }
    }
}
