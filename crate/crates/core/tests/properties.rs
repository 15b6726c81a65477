use bilin_core::coeff::{arith, ArithOp};
use bilin_core::construct::standard_scheme;
use bilin_core::io::{scheme_from_json, scheme_to_json, trace_from_json, trace_to_json};
use bilin_core::moves::{
    apply_flip, apply_move, apply_rebalance, apply_reduction, apply_split, enumerate_flips, random_move, Move,
    MoveTrace, Rebalance, Reduction, Split,
};
use bilin_core::path::replay;
use bilin_core::search::{search_campaign, SearchConfig};
use bilin_core::tensor::{canonicalize, contract, flattening_rank};
use bilin_core::{is_multiplication_tensor, CoeffDomain, CoeffVector, Coefficient, Scheme, Slot};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn domains() -> Vec<CoeffDomain> {
    vec![
        CoeffDomain::Gf2,
        CoeffDomain::gfp(5).unwrap(),
        CoeffDomain::gfp(101).unwrap(),
        CoeffDomain::zpow2(20).unwrap(),
        CoeffDomain::Rational,
        CoeffDomain::Integer,
    ]
}

fn small(d: CoeffDomain, rng: &mut ChaCha8Rng) -> Coefficient {
    d.from_i64(rng.gen_range(-3..=3))
}

fn nonzero(d: CoeffDomain, rng: &mut ChaCha8Rng) -> Coefficient {
    loop {
        let c = small(d, rng);
        if !c.is_zero() {
            return c;
        }
    }
}

fn unit(d: CoeffDomain, rng: &mut ChaCha8Rng) -> Coefficient {
    loop {
        let c = small(d, rng);
        if c.is_invertible() {
            return c;
        }
    }
}

/// A verified scheme reached by `steps` random moves from the standard one,
/// together with the moves taken.
fn random_scheme(d: CoeffDomain, n: usize, m: usize, steps: usize, seed: u64) -> (Scheme, Vec<Move>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = standard_scheme(n, m, d);
    let cap = (n + 1) * (m + 1) + 3;
    let mut moves = Vec::new();
    for _ in 0..steps {
        if let Some(mv) = random_move(&s, &mut rng, cap) {
            s = apply_move(&s, &mv).unwrap();
            moves.push(mv);
        }
    }
    (s, moves)
}

fn arb_domain() -> impl Strategy<Value = CoeffDomain> {
    (0..domains().len()).prop_map(|i| domains()[i])
}

fn coeff(d: CoeffDomain, num: i64, den: i64) -> Coefficient {
    if d == CoeffDomain::Rational {
        d.from_ratio(&BigInt::from(num), &BigInt::from(den)).unwrap()
    } else {
        d.from_i64(num)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn coefficient_ring_axioms(
        d in arb_domain(),
        (a, b, c) in (-1000i64..1000, -1000i64..1000, -1000i64..1000),
        (da, db) in (1i64..50, 1i64..50),
    ) {
        let (a, b, c) = (coeff(d, a, da), coeff(d, b, db), coeff(d, c, 1));
        let add = |x: &Coefficient, y: &Coefficient| arith(ArithOp::Add, x, y).unwrap();
        let mul = |x: &Coefficient, y: &Coefficient| arith(ArithOp::Mul, x, y).unwrap();
        prop_assert_eq!(add(&a, &b), add(&b, &a));
        prop_assert_eq!(mul(&a, &b), mul(&b, &a));
        prop_assert_eq!(add(&add(&a, &b), &c), add(&a, &add(&b, &c)));
        prop_assert_eq!(mul(&mul(&a, &b), &c), mul(&a, &mul(&b, &c)));
        prop_assert_eq!(mul(&a, &add(&b, &c)), add(&mul(&a, &b), &mul(&a, &c)));
        prop_assert!(add(&a, &a.neg()).is_zero());
        prop_assert_eq!(mul(&a, &d.one()), a.clone());
        prop_assert_eq!(arith(ArithOp::Sub, &a, &b).unwrap(), add(&a, &b.neg()));
        if a.is_invertible() {
            prop_assert!(mul(&a, &a.inverse().unwrap()).is_one());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // 100 cases x 100 moves = 10^4 random legal moves
    #[test]
    fn moves_preserve_the_tensor(d in arb_domain(), n in 0usize..4, m in 0usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = standard_scheme(n, m, d);
        let target = contract(&s);
        let cap = (n + 1) * (m + 1) + 3;
        for _ in 0..100 {
            let Some(mv) = random_move(&s, &mut rng, cap) else { break };
            let next = apply_move(&s, &mv).unwrap();
            let delta = next.rank() as isize - s.rank() as isize;
            prop_assert!(delta == mv.nominal_rank_delta() || (matches!(mv, Move::Reduction(_)) && delta == -2));
            prop_assert_eq!(contract(&next), target.clone());
            s = next;
        }
    }

    #[test]
    fn flips_are_reversible(d in arb_domain(), seed in any::<u64>()) {
        let (s, _) = random_scheme(d, 2, 2, 30, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for shape in enumerate_flips(&s).into_iter().take(10) {
            let f = shape.with_lambda(nonzero(d, &mut rng));
            if let Ok(t) = apply_flip(&s, &f) {
                prop_assert_eq!(apply_flip(&t, &f.inverse()).unwrap(), s.clone());
            }
        }
    }

    #[test]
    fn flip_equals_split_then_reduction(d in arb_domain(), seed in any::<u64>()) {
        let (s, _) = random_scheme(d, 2, 1, 20, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        for shape in enumerate_flips(&s).into_iter().take(10) {
            let lambda = unit(d, &mut rng);
            let f = shape.with_lambda(lambda.clone());
            let Ok(flipped) = apply_flip(&s, &f) else { continue };
            let (oi, oj) = (s.terms()[f.i].slot(f.orient).clone(), s.terms()[f.j].slot(f.orient).clone());
            // term i's orient slot = (oi - λ oj) + λ oj; the appended half is
            // rescaled to share two slots with term j, then merged into it
            let keep = oi.sub(&oj.scale(&lambda).unwrap()).unwrap();
            let split = apply_split(&s, &Split { i: f.i, slot: f.orient, part: keep }).unwrap();
            let fresh = split.rank() - 1;
            let bal = apply_rebalance(&split, &Rebalance { i: fresh, from: f.orient, to: f.target(), alpha: lambda.clone() }).unwrap();
            let red = apply_reduction(&bal, &Reduction { i: f.j, j: fresh, shared: ordered(f.shared, f.orient) }).unwrap();
            prop_assert_eq!(red, flipped);
        }
    }

    #[test]
    fn verified_schemes_respect_flattening_bound(d in arb_domain(), n in 0usize..4, m in 0usize..4, seed in any::<u64>()) {
        let (s, _) = random_scheme(d, n, m, 60, seed);
        prop_assert!(is_multiplication_tensor(&s));
        prop_assert!(s.rank() > n + m);
        if d != CoeffDomain::zpow2(20).unwrap() {
            prop_assert_eq!(flattening_rank(&s, Slot::W).unwrap(), n + m + 1);
        }
    }

    #[test]
    fn canonicalize_is_idempotent_and_tensor_preserving(d in arb_domain(), seed in any::<u64>()) {
        let (s, _) = random_scheme(d, 2, 2, 40, seed);
        let c = canonicalize(&s);
        prop_assert_eq!(canonicalize(&c), c.clone());
        prop_assert_eq!(contract(&c), contract(&s));
    }

    #[test]
    fn schemes_and_traces_round_trip(d in arb_domain(), n in 0usize..4, m in 0usize..4, seed in any::<u64>()) {
        let (s, moves) = random_scheme(d, n, m, 40, seed);
        prop_assert_eq!(scheme_from_json(&scheme_to_json(&s)).unwrap(), s.clone());
        let mut trace = MoveTrace::from_standard(n, m, d);
        trace.moves = moves;
        let back = trace_from_json(&trace_to_json(&trace)).unwrap();
        prop_assert_eq!(&back, &trace);
        prop_assert_eq!(replay(&back, true).unwrap(), s);
    }
}

fn ordered(a: Slot, b: Slot) -> (Slot, Slot) {
    if a.index() < b.index() {
        (a, b)
    } else {
        (b, a)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn search_is_deterministic(seed in any::<u64>(), n in 1usize..4, m in 1usize..3) {
        let cfg = SearchConfig { seed, max_steps: 3_000, plateau_limit: 500, walks: 3, threads: 1, ..Default::default() };
        let a = search_campaign(n, m, &cfg).unwrap();
        let b = search_campaign(n, m, &SearchConfig { threads: 3, ..cfg.clone() }).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(is_multiplication_tensor(&a.result.best));
    }

    #[test]
    fn longer_walks_never_end_worse(seed in any::<u64>(), n in 1usize..4, m in 1usize..3) {
        let short = SearchConfig { seed, max_steps: 1_000, plateau_limit: 300, walks: 2, ..Default::default() };
        let long = SearchConfig { max_steps: 4_000, ..short.clone() };
        let a = search_campaign(n, m, &short).unwrap();
        let b = search_campaign(n, m, &long).unwrap();
        for (x, y) in a.walks.iter().zip(&b.walks) {
            prop_assert!(y.rank <= x.rank);
        }
    }
}

#[test]
fn reduction_to_zero_removes_both_terms() {
    let d = CoeffDomain::Rational;
    let one = CoeffVector::from_i64s(d, &[1]);
    let t = standard_scheme(0, 0, d).terms()[0].clone();
    let s = Scheme::new(0, 0, d, vec![t.clone(), t.clone(), bilin_core::Term::new(one.neg(), one.clone(), one)]).unwrap();
    let r = apply_reduction(&s, &Reduction { i: 1, j: 2, shared: (Slot::V, Slot::W) }).unwrap();
    assert_eq!(r.rank(), 1);
}
