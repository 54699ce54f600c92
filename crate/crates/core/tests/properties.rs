mod common;

use std::collections::BTreeSet;

use confinv::canon::{canonical_key, canonicalize, equivalent, reduce};
use confinv::io::{deserialize, parse, print, serialize};
use confinv::numeric::eval::jet_order;
use confinv::numeric::{check_zero, random_jets};
use confinv::relations::RelationSpace;
use confinv::term::{Contraction, Kind, LinearCombination};
use confinv::variation::{filter_by_rearrangement, filter_no_internal, rearrangement_classes};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_lc(seed: u64, terms: usize, with_phi: bool) -> LinearCombination {
    let mut r = rng(seed);
    LinearCombination::from_terms(common::random_homogeneous(&mut r, terms, 3, with_phi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonicalize_is_idempotent(seed in any::<u64>()) {
        let t = common::random_term(&mut rng(seed), 4, true);
        let once = canonicalize(&t);
        prop_assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn equal_forms_share_a_canonical_key(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = common::random_term(&mut r, 4, true);
        let e = common::equal_form(&t, &mut r);
        let (kt, ke) = (canonical_key(&t), canonical_key(&e));
        prop_assert_eq!(kt.is_none(), ke.is_none());
        let lc = LinearCombination::from_terms(vec![t.clone(), e.scaled(&(-confinv::rational::int(1)))]);
        prop_assert!(reduce(&lc, 4).is_empty(), "{} vs {}", print(&LinearCombination::single(t)), print(&LinearCombination::single(e)));
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>(), terms in 1usize..4) {
        let lc = random_lc(seed, terms, true);
        let text = print(&lc);
        let back = parse(&text).unwrap();
        prop_assert!(equivalent(&back, &lc, 4));
        prop_assert_eq!(print(&back), text);
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), terms in 1usize..4) {
        let lc = random_lc(seed, terms, true);
        prop_assert_eq!(deserialize(&serialize(&lc)).unwrap(), lc);
    }

    #[test]
    fn filters_commute_with_reduction(seed in any::<u64>(), terms in 1usize..6) {
        let lc = random_lc(seed, terms, true);
        let red = reduce(&lc, 4);
        for r in rearrangement_classes(&lc).union(&rearrangement_classes(&red)) {
            let a = reduce(&filter_by_rearrangement(&lc, r).unwrap(), 4);
            let b = filter_by_rearrangement(&red, r).unwrap();
            prop_assert!(equivalent(&a, &b, 4));
        }
        for l in 1..6 {
            let a = filter_no_internal(&lc, l);
            let b = filter_no_internal(&red, l);
            prop_assert!(a.equivalent(&b, 4));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reduction_preserves_value(seed in any::<u64>(), terms in 1usize..4) {
        let lc = random_lc(seed, terms, true);
        let red = reduce(&lc, 4);
        let diff = lc.minus(&red);
        let jets = random_jets(4, jet_order(&lc).max(2), 2, 1, seed ^ 0x5eed);
        let check = check_zero(&diff, &jets);
        prop_assert!(check.passes(1e-9), "{} -> {}: {:?}", print(&lc), print(&red), check);
    }

    #[test]
    fn cyclic_sums_are_relations(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (t, at) = loop {
            let t = common::random_term(&mut r, 3, false);
            let rs: Vec<usize> = (0..t.factors.len()).filter(|&i| t.factors[i].kind == Kind::Riemann).collect();
            if !rs.is_empty() && t.weight() >= -6 {
                let at = rs[r.gen_range(0..rs.len())];
                break (t, at);
            }
        };
        let d = t.factors[at].order as usize;
        let cycled = |shift: usize| {
            let mut c: Contraction = t.clone();
            let base = t.factors[at].indices[d..].to_vec();
            let (j, k, l) = [(1, 2, 3), (2, 3, 1), (3, 1, 2)][shift];
            c.factors[at].indices[d..].copy_from_slice(&[base[0], base[j], base[k], base[l]]);
            c
        };
        let lc = LinearCombination::from_terms((0..3).map(cycled).collect());
        let jets = random_jets(4, jet_order(&lc).max(2), 2, 0, seed);
        prop_assert!(check_zero(&lc, &jets).passes(1e-9));
        let mut rel = RelationSpace::for_combination(&lc, 4);
        prop_assert!(rel.is_zero(&lc), "{}", print(&lc));
    }
}

#[test]
fn distinct_products_are_not_relations() {
    let lc = parse("R[a,b,c,d]*R[a,b,c,d] - Ric[a,b]*Ric[a,b]").unwrap();
    let mut rel = RelationSpace::for_combination(&lc, 4);
    assert!(!rel.is_zero(&lc));
    let classes: BTreeSet<_> = rearrangement_classes(&lc);
    assert_eq!(classes.len(), 1);
}
