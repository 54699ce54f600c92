//! Canonical representatives of contractions modulo monoterm symmetries.
//!
//! A contraction is put in canonical form by a branch-and-bound search over
//! factor orderings (within groups of factors of the same kind, order and
//! flavor) and over the intrinsic slot symmetry group of every factor. Each
//! choice determines a label sequence in which dummy indices are numbered by
//! first appearance; the lexicographically least sequence is the canonical
//! key. A prefix that already exceeds the best key found so far is pruned.
//!
//! If two choices reach the least key with opposite signs the contraction
//! has an odd automorphism and vanishes identically.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{int, Rational};
use crate::term::{Contraction, Factor, Kind, Label, LinearCombination};

const FREE_BASE: u32 = 1 << 30;
const UNMAPPED: u32 = u32::MAX;

/// Total-order key identifying a contraction modulo slot relabeling, factor
/// permutation and intrinsic factor symmetries.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalKey(pub Vec<u32>);

/// A slot permutation of one factor together with its sign.
/// Entry `p` of `perm` is the old slot that moves to position `p`.
#[derive(Clone, Debug)]
struct SlotSymmetry {
    perm: Vec<u8>,
    sign: i8,
}

fn identity(arity: usize) -> Vec<u8> {
    (0..arity as u8).collect()
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Intrinsic symmetry group of a factor.
fn symmetry_group(factor: &Factor) -> Vec<SlotSymmetry> {
    let m = factor.order as usize;
    let arity = factor.expected_arity();
    match factor.kind {
        Kind::Riemann | Kind::Weyl => {
            // (ijkl) and its images under i↔j, k↔l and the pair exchange.
            const D8: [([usize; 4], i8); 8] = [
                ([0, 1, 2, 3], 1),
                ([1, 0, 2, 3], -1),
                ([0, 1, 3, 2], -1),
                ([1, 0, 3, 2], 1),
                ([2, 3, 0, 1], 1),
                ([3, 2, 0, 1], -1),
                ([2, 3, 1, 0], -1),
                ([3, 2, 1, 0], 1),
            ];
            D8.iter()
                .map(|(p, sign)| {
                    let mut perm = identity(m);
                    perm.extend(p.iter().map(|&q| (m + q) as u8));
                    SlotSymmetry { perm, sign: *sign }
                })
                .collect()
        }
        Kind::Schouten | Kind::Ricci | Kind::Metric | Kind::InverseMetric => {
            let mut swapped = identity(arity);
            swapped.swap(m, m + 1);
            vec![
                SlotSymmetry {
                    perm: identity(arity),
                    sign: 1,
                },
                SlotSymmetry {
                    perm: swapped,
                    sign: 1,
                },
            ]
        }
        // Second covariant derivatives of a scalar commute.
        Kind::ScalarCurv | Kind::Phi if m >= 2 => {
            let mut swapped = identity(arity);
            swapped.swap(m - 2, m - 1);
            vec![
                SlotSymmetry {
                    perm: identity(arity),
                    sign: 1,
                },
                SlotSymmetry {
                    perm: swapped,
                    sign: 1,
                },
            ]
        }
        Kind::SymPhi => permutations(&identity(arity))
            .into_iter()
            .map(|perm| SlotSymmetry { perm, sign: 1 })
            .collect(),
        _ => vec![SlotSymmetry {
            perm: identity(arity),
            sign: 1,
        }],
    }
}

fn signature(f: &Factor) -> u32 {
    (f.kind.code() << 16) | ((f.order as u32) << 8) | f.flavor as u32
}

/// Result of the orbit search.
#[derive(Clone, Debug)]
pub struct Canonical {
    pub key: CanonicalKey,
    /// Canonical representative, coefficient adjusted by the symmetry sign.
    pub term: Contraction,
}

struct Search<'a> {
    factors: &'a [Factor],
    /// Compressed label of each slot.
    slots: Vec<Vec<u32>>,
    groups: Vec<Vec<SlotSymmetry>>,
    order: Vec<usize>,
    sigs: Vec<u32>,
    free_code: Vec<u32>,
    map: Vec<u32>,
    next: u32,
    used: Vec<bool>,
    key: Vec<u32>,
    choice: Vec<(usize, usize)>,
    sign: i8,
    best: Option<(Vec<u32>, i8, Vec<(usize, usize)>)>,
    odd_automorphism: bool,
}

impl Search<'_> {
    fn run(&mut self, pos: usize) {
        if pos == self.order.len() {
            self.leaf();
            return;
        }
        let sig = self.sigs[pos];
        for f in 0..self.factors.len() {
            if self.used[f] || signature(&self.factors[f]) != sig {
                continue;
            }
            // Group elements producing the same slot labels are redundant;
            // if they disagree in sign the factor equals minus itself.
            let mut seen: Vec<(Vec<u32>, i8)> = Vec::new();
            for g in 0..self.groups[f].len() {
                let raw: Vec<u32> = self.groups[f][g]
                    .perm
                    .iter()
                    .map(|&p| self.slots[f][p as usize])
                    .collect();
                let s = self.groups[f][g].sign;
                if let Some((_, s0)) = seen.iter().find(|(q, _)| *q == raw) {
                    if *s0 != s {
                        self.odd_automorphism = true;
                        return;
                    }
                    continue;
                }
                seen.push((raw, s));
                let (seq, fresh) = self.sequence(f, g);
                let start = self.key.len();
                self.key.extend_from_slice(&seq);
                if self.prefix_admissible() {
                    self.used[f] = true;
                    self.choice.push((f, g));
                    self.sign *= s;
                    self.run(pos + 1);
                    self.sign *= s;
                    self.choice.pop();
                    self.used[f] = false;
                }
                self.next -= fresh.len() as u32;
                for l in fresh {
                    self.map[l as usize] = UNMAPPED;
                }
                self.key.truncate(start);
                if self.odd_automorphism {
                    return;
                }
            }
        }
    }

    /// Label sequence of factor `f` under group element `g`; assigns fresh
    /// codes and returns the labels that were newly mapped.
    fn sequence(&mut self, f: usize, g: usize) -> (Vec<u32>, Vec<u32>) {
        let perm = &self.groups[f][g].perm;
        let mut seq = Vec::with_capacity(perm.len());
        let mut fresh = Vec::new();
        for &p in perm {
            let l = self.slots[f][p as usize];
            let code = if self.free_code[l as usize] != UNMAPPED {
                self.free_code[l as usize]
            } else if self.map[l as usize] != UNMAPPED {
                self.map[l as usize]
            } else {
                let c = self.next;
                self.next += 1;
                self.map[l as usize] = c;
                fresh.push(l);
                c
            };
            seq.push(code);
        }
        (seq, fresh)
    }

    fn prefix_admissible(&self) -> bool {
        match &self.best {
            None => true,
            Some((best, _, _)) => {
                let len = self.key.len();
                self.key[..] <= best[..len]
            }
        }
    }

    fn leaf(&mut self) {
        match &self.best {
            None => {
                self.best = Some((self.key.clone(), self.sign, self.choice.clone()));
            }
            Some((best, best_sign, _)) => match self.key.cmp(best) {
                Ordering::Less => {
                    self.best = Some((self.key.clone(), self.sign, self.choice.clone()));
                }
                Ordering::Equal => {
                    if *best_sign != self.sign {
                        self.odd_automorphism = true;
                    }
                }
                Ordering::Greater => {}
            },
        }
    }
}

/// Canonical form of a contraction, or `None` when it vanishes by an odd
/// automorphism (or has a zero coefficient). Free labels keep their values;
/// dummy labels are renumbered from the smallest value above all free labels.
pub fn canonical(c: &Contraction) -> Option<Canonical> {
    if c.coeff.is_zero() {
        return None;
    }
    // Compress labels.
    let mut dense: BTreeMap<Label, u32> = BTreeMap::new();
    for f in &c.factors {
        for &l in &f.indices {
            let next = dense.len() as u32;
            dense.entry(l).or_insert(next);
        }
    }
    let occurrences = c.occurrences();
    let mut free_code = vec![UNMAPPED; dense.len()];
    let mut free_labels: Vec<Label> = Vec::new();
    for (rank, (label, _)) in occurrences.iter().filter(|(_, o)| o.len() == 1).enumerate() {
        free_code[dense[label] as usize] = FREE_BASE + rank as u32;
        free_labels.push(*label);
    }
    let slots: Vec<Vec<u32>> = c
        .factors
        .iter()
        .map(|f| f.indices.iter().map(|l| dense[l]).collect())
        .collect();
    let groups: Vec<Vec<SlotSymmetry>> = c.factors.iter().map(symmetry_group).collect();
    let mut order: Vec<usize> = (0..c.factors.len()).collect();
    order.sort_by_key(|&f| signature(&c.factors[f]));
    let sigs: Vec<u32> = order.iter().map(|&f| signature(&c.factors[f])).collect();

    let mut search = Search {
        factors: &c.factors,
        slots,
        groups,
        order,
        sigs: sigs.clone(),
        free_code,
        map: vec![UNMAPPED; dense.len()],
        next: 0,
        used: vec![false; c.factors.len()],
        key: Vec::new(),
        choice: Vec::new(),
        sign: 1,
        best: None,
        odd_automorphism: false,
    };
    search.run(0);
    if search.odd_automorphism {
        return None;
    }
    let (seq, sign, choice) = search.best?;

    let dummy_base = free_labels.iter().max().map_or(0, |m| m + 1);
    let decode = |code: u32| -> Label {
        if code >= FREE_BASE {
            free_labels[(code - FREE_BASE) as usize]
        } else {
            dummy_base + code
        }
    };
    let mut factors = Vec::with_capacity(choice.len());
    let mut offset = 0;
    for &(f, _) in &choice {
        let src = &c.factors[f];
        let len = src.indices.len();
        factors.push(Factor {
            kind: src.kind,
            order: src.order,
            flavor: src.flavor,
            indices: seq[offset..offset + len].iter().map(|&x| decode(x)).collect(),
        });
        offset += len;
    }
    let mut key = sigs;
    key.push(u32::MAX);
    key.extend(seq);
    let coeff = if sign < 0 {
        -c.coeff.clone()
    } else {
        c.coeff.clone()
    };
    Some(Canonical {
        key: CanonicalKey(key),
        term: Contraction::new(coeff, factors),
    })
}

/// Canonical representative; a vanishing contraction comes back with
/// coefficient zero and its factors untouched.
pub fn canonicalize(c: &Contraction) -> Contraction {
    match canonical(c) {
        Some(canon) => canon.term,
        None => Contraction::new(Rational::zero(), c.factors.clone()),
    }
}

pub fn canonical_key(c: &Contraction) -> Option<CanonicalKey> {
    let mut unit = c.clone();
    unit.coeff = Rational::one();
    canonical(&unit).map(|k| k.key)
}

/// Removes explicit metric factors. `g[a,a]` becomes the dimension `n`;
/// a metric joining two other slots is absorbed by renaming. Metrics with
/// two free slots are kept.
pub fn eliminate_metrics(c: &Contraction, n: usize) -> Contraction {
    let mut coeff = c.coeff.clone();
    let mut factors = c.factors.clone();
    loop {
        let Some(pos) = factors.iter().enumerate().position(|(p, f)| {
            f.kind.is_metric() && {
                let (a, b) = (f.indices[0], f.indices[1]);
                a == b || occurs_elsewhere(&factors, p, a) || occurs_elsewhere(&factors, p, b)
            }
        }) else {
            break;
        };
        let metric = factors.remove(pos);
        let (a, b) = (metric.indices[0], metric.indices[1]);
        if a == b {
            coeff *= int(n as i64);
            continue;
        }
        let (from, to) = if occurs(&factors, b) { (b, a) } else { (a, b) };
        for f in factors.iter_mut() {
            for l in f.indices.iter_mut() {
                if *l == from {
                    *l = to;
                }
            }
        }
    }
    Contraction::new(coeff, factors)
}

fn occurs(factors: &[Factor], label: Label) -> bool {
    factors.iter().any(|f| f.indices.contains(&label))
}

fn occurs_elsewhere(factors: &[Factor], skip: usize, label: Label) -> bool {
    factors
        .iter()
        .enumerate()
        .any(|(p, f)| p != skip && f.indices.contains(&label))
}

/// Kind-intrinsic trace identities on base slots: Weyl traces vanish,
/// Riemann traces become Ricci, Ricci traces become scalar curvature.
/// Derivative slots are untouched. Returns `None` when the term vanishes.
pub fn normalize_traces(c: &Contraction) -> Option<Contraction> {
    let mut coeff = c.coeff.clone();
    let mut factors = Vec::with_capacity(c.factors.len());
    for f in &c.factors {
        let mut f = f.clone();
        loop {
            let m = f.order as usize;
            match f.kind {
                Kind::Weyl => {
                    let base = &f.indices[m..];
                    if (0..4).any(|p| base[p + 1..].contains(&base[p])) {
                        return None;
                    }
                    break;
                }
                Kind::Riemann => {
                    let b: Vec<Label> = f.indices[m..].to_vec();
                    let (i, j, k, l) = (b[0], b[1], b[2], b[3]);
                    let ricci = |x: Label, y: Label| {
                        let mut indices = f.indices[..m].to_vec();
                        indices.extend([x, y]);
                        Factor::new(Kind::Ricci, f.order, indices)
                    };
                    if i == j || k == l {
                        return None;
                    } else if i == l {
                        f = ricci(j, k);
                    } else if j == k {
                        f = ricci(i, l);
                    } else if i == k {
                        coeff = -coeff;
                        f = ricci(j, l);
                    } else if j == l {
                        coeff = -coeff;
                        f = ricci(i, k);
                    } else {
                        break;
                    }
                }
                Kind::Ricci => {
                    if f.indices[m] == f.indices[m + 1] {
                        f = Factor::new(Kind::ScalarCurv, f.order, f.indices[..m].to_vec());
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        factors.push(f);
    }
    Some(Contraction::new(coeff, factors))
}

/// Metric elimination, trace normalization and canonicalization of one term.
pub fn normalize_term(c: &Contraction, n: usize) -> Option<Canonical> {
    let c = eliminate_metrics(c, n);
    let c = normalize_traces(&c)?;
    canonical(&c)
}

/// Collects like terms after canonicalization. Zero terms are dropped and the
/// result is sorted by canonical key, so it does not depend on input order.
pub fn reduce(lc: &LinearCombination, n: usize) -> LinearCombination {
    let mut collected: BTreeMap<CanonicalKey, Contraction> = BTreeMap::new();
    for term in &lc.terms {
        let Some(canon) = normalize_term(term, n) else {
            continue;
        };
        match collected.get_mut(&canon.key) {
            Some(existing) => existing.coeff += canon.term.coeff,
            None => {
                collected.insert(canon.key, canon.term);
            }
        }
    }
    LinearCombination::from_terms(
        collected
            .into_values()
            .filter(|t| !t.coeff.is_zero())
            .collect(),
    )
}

/// Reduced combination as a map from canonical key to coefficient.
pub fn coefficients(lc: &LinearCombination, n: usize) -> BTreeMap<CanonicalKey, Rational> {
    reduce(lc, n)
        .terms
        .into_iter()
        .map(|t| {
            let key = canonical_key(&t).expect("reduced terms are nonzero");
            (key, t.coeff)
        })
        .collect()
}

/// True when `a` and `b` reduce to the same combination.
pub fn equivalent(a: &LinearCombination, b: &LinearCombination, n: usize) -> bool {
    reduce(&a.minus(b), n).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn rr(first: Factor) -> Contraction {
        Contraction::unit(vec![first, Factor::riemann(0, 1, 2, 3)])
    }

    #[test]
    fn antisymmetry_flips_sign() {
        let a = canonicalize(&rr(Factor::riemann(1, 0, 2, 3)));
        let b = canonicalize(&rr(Factor::riemann(0, 1, 2, 3)));
        assert_eq!(a.factors, b.factors);
        assert_eq!(a.coeff, int(-1));
        assert_eq!(b.coeff, int(1));
        assert_eq!(b.factors[0].indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn factor_order_is_irrelevant() {
        let a = Contraction::unit(vec![
            Factor::weyl(0, 1, 2, 3),
            Factor::schouten(0, 2),
            Factor::schouten(1, 3),
        ]);
        let b = Contraction::unit(vec![
            Factor::schouten(7, 5),
            Factor::weyl(9, 7, 8, 5),
            Factor::schouten(9, 8),
        ]);
        assert_eq!(canonical_key(&a), canonical_key(&b));
        assert_eq!(canonicalize(&a), canonicalize(&b));
    }

    #[test]
    fn symmetric_phi_ignores_slot_order() {
        let term = |idx: [Label; 3]| {
            Contraction::unit(vec![
                Factor::sym_phi(0, idx.to_vec()),
                Factor::phi(0, vec![0]),
                Factor::phi(0, vec![1]),
                Factor::phi(0, vec![2]),
            ])
        };
        let a = canonicalize(&term([0, 1, 2]));
        let b = canonicalize(&term([2, 0, 1]));
        assert_eq!(a, b);
        assert_eq!(a.coeff, int(1));
    }

    #[test]
    fn odd_automorphism_vanishes() {
        // R_ijkl W^ij.. pattern with a symmetric partner: R_abcd P^ab P^cd = 0.
        let c = Contraction::unit(vec![
            Factor::riemann(0, 1, 2, 3),
            Factor::schouten(0, 1),
            Factor::schouten(2, 3),
        ]);
        assert!(canonical(&c).is_none());
        // An internal antisymmetric trace vanishes as well.
        let c = Contraction::unit(vec![Factor::riemann(0, 0, 1, 1)]);
        assert!(canonical(&c).is_none());
    }

    #[test]
    fn idempotent() {
        let c = Contraction::new(
            rat(-3, 2),
            vec![
                Factor::riemann(3, 2, 0, 1),
                Factor::riemann(0, 2, 4, 5),
                Factor::riemann(1, 4, 3, 5),
            ],
        );
        let once = canonicalize(&c);
        assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn free_labels_are_preserved() {
        let c = Contraction::unit(vec![Factor::riemann(10, 20, 30, 11)]);
        let canon = canonicalize(&c);
        assert_eq!(canon.free_labels(), vec![11, 10, 20, 30].into_iter().collect::<std::collections::BTreeSet<_>>().into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn reduce_cancels_swapped_factors() {
        let a = Contraction::unit(vec![Factor::riemann(0, 1, 2, 3), Factor::riemann(0, 1, 2, 3)]);
        let b = Contraction::unit(vec![Factor::riemann(4, 5, 6, 7), Factor::riemann(4, 5, 6, 7)]);
        let lc = LinearCombination::from_terms(vec![a, b.scaled(&int(-1))]);
        assert!(reduce(&lc, 4).is_empty());
    }

    #[test]
    fn reduce_resolves_metric_trace() {
        let c = Contraction::unit(vec![
            Factor::metric(0, 0),
            Factor::schouten(1, 1),
        ]);
        let r = reduce(&c.into(), 5);
        assert_eq!(r.terms.len(), 1);
        assert_eq!(r.terms[0].coeff, int(5));
        assert_eq!(r.terms[0].factors, vec![Factor::schouten(0, 0)]);
    }

    #[test]
    fn riemann_traces_become_ricci() {
        // g^il R_ijkl = Ric_jk
        let c = Contraction::unit(vec![Factor::riemann(0, 5, 6, 0)]);
        let r = reduce(&c.into(), 4);
        assert_eq!(r.terms[0].factors, vec![Factor::ricci(5, 6)]);
        assert_eq!(r.terms[0].coeff, int(1));
        let c = Contraction::unit(vec![Factor::riemann(0, 5, 0, 6)]);
        let r = reduce(&c.into(), 4);
        assert_eq!(r.terms[0].factors, vec![Factor::ricci(5, 6)]);
        assert_eq!(r.terms[0].coeff, int(-1));
        let c = Contraction::unit(vec![Factor::riemann(0, 1, 1, 0)]);
        let r = reduce(&c.into(), 4);
        assert_eq!(r.terms[0].factors, vec![Factor::scalar()]);
    }

    #[test]
    fn weyl_traces_vanish() {
        let c = Contraction::unit(vec![Factor::weyl(0, 1, 0, 2), Factor::schouten(1, 2)]);
        assert!(reduce(&c.into(), 4).is_empty());
    }

    #[test]
    fn metric_between_factors_is_absorbed() {
        let c = Contraction::unit(vec![
            Factor::weyl(0, 1, 2, 3),
            Factor::schouten(0, 2),
            Factor::metric(1, 3),
        ]);
        // W_ijkl P^ik g^jl is a Weyl trace.
        assert!(reduce(&c.into(), 4).is_empty());
    }
}
