//! Random complete contractions and symmetry-equivalent rewrites of them.
#![allow(dead_code)]

use confinv::rational::rat;
use confinv::term::{Contraction, Factor, Kind, Label, LinearCombination};
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_factor(rng: &mut impl Rng, with_phi: bool) -> Factor {
    let pick = if with_phi { rng.gen_range(0..6) } else { rng.gen_range(0..4) };
    match pick {
        0 => Factor::new(Kind::Riemann, rng.gen_range(0..3), vec![]),
        1 => Factor::new(Kind::Weyl, rng.gen_range(0..2), vec![]),
        2 => Factor::new(Kind::Ricci, rng.gen_range(0..2), vec![]),
        3 => Factor::new(Kind::ScalarCurv, rng.gen_range(0..2), vec![]),
        _ => Factor::sym_phi(0, vec![0; rng.gen_range(1..4)]),
    }
}

/// A random complete contraction with up to `max_factors` curvature or
/// symmetrized φ factors, slots paired by a random perfect matching.
pub fn random_term(rng: &mut impl Rng, max_factors: usize, with_phi: bool) -> Contraction {
    loop {
        let k = rng.gen_range(1..=max_factors);
        let mut factors: Vec<Factor> = (0..k).map(|_| random_factor(rng, with_phi)).collect();
        let arity = |f: &Factor| f.kind.base_slots() + f.order as usize;
        let total: usize = factors.iter().map(arity).sum();
        if total % 2 == 1 {
            if with_phi {
                factors.push(Factor::sym_phi(0, vec![0]));
            } else {
                factors.push(Factor::new(Kind::ScalarCurv, 1, vec![]));
            }
        }
        let total: usize = factors.iter().map(arity).sum();
        let mut slots: Vec<usize> = (0..total).collect();
        slots.shuffle(rng);
        let mut labels = vec![0 as Label; total];
        for (pair, chunk) in slots.chunks(2).enumerate() {
            labels[chunk[0]] = pair as Label;
            labels[chunk[1]] = pair as Label;
        }
        let mut next = 0;
        for f in &mut factors {
            let a = arity(f);
            f.indices = labels[next..next + a].to_vec();
            next += a;
        }
        let c = Contraction::new(rat(rng.gen_range(-5..=5), rng.gen_range(1..=4)), factors);
        if c.validate_complete().is_ok() && !c.coeff.is_zero() {
            return c;
        }
    }
}

/// The same contraction written differently: factors reordered, labels
/// renamed, symmetric slots permuted and antisymmetric slots swapped with
/// the matching sign.
pub fn equal_form(c: &Contraction, rng: &mut impl Rng) -> Contraction {
    let mut out = c.clone();
    let mut sign = 1i64;
    for f in &mut out.factors {
        let d = f.order as usize;
        match f.kind {
            Kind::Riemann | Kind::Weyl => {
                let b = &mut f.indices[d..];
                if rng.gen_bool(0.5) {
                    b.swap(0, 1);
                    sign = -sign;
                }
                if rng.gen_bool(0.5) {
                    b.swap(2, 3);
                    sign = -sign;
                }
                if rng.gen_bool(0.5) {
                    b.swap(0, 2);
                    b.swap(1, 3);
                }
            }
            Kind::Ricci | Kind::Schouten | Kind::Metric | Kind::InverseMetric => {
                if rng.gen_bool(0.5) {
                    f.indices[d..].swap(0, 1);
                }
            }
            Kind::SymPhi => f.indices.shuffle(rng),
            _ => {}
        }
    }
    out.factors.shuffle(rng);
    let max = out.max_label().unwrap_or(0);
    let mut targets: Vec<Label> = (0..=max).map(|l| l + 100).collect();
    targets.shuffle(rng);
    let map = (0..=max).zip(targets).collect();
    let mut out = out.relabel(&map);
    if sign < 0 {
        out.coeff = -out.coeff;
    }
    out
}

/// `count` random terms sharing the weight of the first one.
pub fn random_homogeneous(rng: &mut impl Rng, count: usize, max_factors: usize, with_phi: bool) -> Vec<Contraction> {
    let first = random_term(rng, max_factors, with_phi);
    let weight = first.weight();
    let mut out = vec![first];
    while out.len() < count {
        let t = random_term(rng, max_factors, with_phi);
        if t.weight() == weight {
            out.push(t);
        }
    }
    out
}

/// `Σ t_i - Σ t_i'` with each `t_i'` an equal form of `t_i`, all of one weight.
pub fn random_zero_combination(rng: &mut impl Rng, terms: usize, max_factors: usize, with_phi: bool) -> LinearCombination {
    let mut lc = LinearCombination::zero();
    for t in random_homogeneous(rng, terms, max_factors, with_phi) {
        let e = equal_form(&t, rng);
        lc.push(t);
        lc.push(Contraction::new(-e.coeff.clone(), e.factors));
    }
    let mut terms = lc.terms;
    terms.shuffle(rng);
    LinearCombination::from_terms(terms)
}
