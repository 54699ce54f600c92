//! Multiterm identities as a linear relation space.
//!
//! Generators are instances of the first Bianchi identity (Riemann and Weyl
//! factors, any derivative order), the second Bianchi identity for derived
//! Riemann factors (also lifted to derived Ricci and scalar curvature, which
//! yields the contracted Bianchi identities), derivative commutation, and
//! the dimension identity: antisymmetrizing over `n + 1` indices gives zero.
//! Membership is decided by exact elimination over canonical terms.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::canon::{canonical, reduce, CanonicalKey};
use crate::linalg::{Echelon, SparseVec};
use crate::numeric::{check_zero, MetricJet, ZeroCheck};
use crate::rational::{int, Rational};
use crate::rules::{swap_derivatives, LabelGen};
use crate::term::{Contraction, Factor, IndexSlot, Kind, Label, LinearCombination};

/// Base-slot images of `(i, j, k, l)` under the Riemann symmetry group.
const IMAGES: [[usize; 4]; 8] = [
    [0, 1, 2, 3],
    [1, 0, 2, 3],
    [0, 1, 3, 2],
    [1, 0, 3, 2],
    [2, 3, 0, 1],
    [3, 2, 0, 1],
    [2, 3, 1, 0],
    [3, 2, 1, 0],
];

/// Identifies the set of relation generators, recorded in reports.
pub const RELATION_SPACE_VERSION: &str = "bianchi1+bianchi2+contracted+commutation+dimension/1";

/// Default bound on the number of canonical terms explored by the closure.
pub const DEFAULT_TERM_CAP: usize = 20_000;

#[derive(Clone, Debug)]
pub struct RelationSpace {
    pub n: usize,
    pub generators: Vec<LinearCombination>,
    columns: BTreeMap<CanonicalKey, usize>,
    terms: Vec<Contraction>,
    echelon: Echelon,
    expanded: usize,
    cap: usize,
    /// False when the closure stopped at the term cap.
    pub complete: bool,
}

fn with_factor(c: &Contraction, f: usize, replacement: Vec<Factor>) -> Contraction {
    let mut factors = c.factors.clone();
    factors.splice(f..=f, replacement);
    Contraction::new(c.coeff.clone(), factors)
}

fn replace_base(f: &Factor, base: [Label; 4]) -> Factor {
    let m = f.order as usize;
    let mut indices = f.indices[..m].to_vec();
    indices.extend(base);
    Factor { indices, ..f.clone() }
}

/// First Bianchi instances through factor `f` of `c`.
fn first_bianchi(c: &Contraction, f: usize) -> Vec<Vec<Contraction>> {
    let factor = &c.factors[f];
    let m = factor.order as usize;
    let b = &factor.indices[m..];
    IMAGES
        .iter()
        .map(|p| {
            let (i, j, k, l) = (b[p[0]], b[p[1]], b[p[2]], b[p[3]]);
            [[i, j, k, l], [i, k, l, j], [i, l, j, k]]
                .into_iter()
                .map(|base| with_factor(c, f, vec![replace_base(factor, base)]))
                .collect()
        })
        .collect()
}

/// Second Bianchi instances `∇_a R_bcde + ∇_b R_cade + ∇_c R_abde` through a
/// derived Riemann factor (innermost derivative `a`).
fn second_bianchi(c: &Contraction, f: usize) -> Vec<Vec<Contraction>> {
    let factor = &c.factors[f];
    let m = factor.order as usize;
    if factor.kind != Kind::Riemann || m == 0 {
        return Vec::new();
    }
    let outer = &factor.indices[..m - 1];
    let a = factor.indices[m - 1];
    let base = &factor.indices[m..];
    let make = |d: Label, r: [Label; 4]| {
        let mut indices = outer.to_vec();
        indices.push(d);
        indices.extend(r);
        Factor::new(Kind::Riemann, factor.order, indices)
    };
    IMAGES
        .iter()
        .map(|p| {
            let (b, cc, d, e) = (base[p[0]], base[p[1]], base[p[2]], base[p[3]]);
            vec![
                with_factor(c, f, vec![make(a, [b, cc, d, e])]),
                with_factor(c, f, vec![make(b, [cc, a, d, e])]),
                with_factor(c, f, vec![make(cc, [a, b, d, e])]),
            ]
        })
        .collect()
}

/// Writes a derived Ricci or scalar factor as a trace of Riemann.
fn lift(c: &Contraction, f: usize) -> Option<Contraction> {
    let factor = &c.factors[f];
    let m = factor.order as usize;
    let mut gen = LabelGen::above(c);
    let derivs = &factor.indices[..m];
    let base: [Label; 4] = match factor.kind {
        Kind::Ricci => {
            let x = gen.fresh();
            [x, factor.indices[m], factor.indices[m + 1], x]
        }
        Kind::ScalarCurv => {
            let x = gen.fresh();
            let y = gen.fresh();
            [x, y, y, x]
        }
        _ => return None,
    };
    let mut indices = derivs.to_vec();
    indices.extend(base);
    Some(with_factor(
        c,
        f,
        vec![Factor::new(Kind::Riemann, factor.order, indices)],
    ))
}

pub(crate) fn permutations(k: usize) -> Vec<(Vec<usize>, i64)> {
    if k == 0 {
        return vec![(vec![], 1)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(k - 1) {
        // Insert k-1 at every position; each shift past an element flips the sign.
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            let sign = if (p.len() - pos) % 2 == 0 { s } else { -s };
            out.push((q, sign));
        }
    }
    out
}

/// Antisymmetrizations over `n + 1` contracted pairs of a term. For each
/// chosen pair one of its two slots takes part in the permutation; the
/// orientation choices are enumerated with the first pair fixed.
fn dimension_identities(c: &Contraction, n: usize, limit: usize) -> Vec<Vec<Contraction>> {
    let pairs = c.pairing();
    if pairs.len() < n + 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let perms = permutations(n + 1);
    let mut subset: Vec<usize> = (0..=n).collect();
    'subsets: loop {
        for orientation in 0u32..(1 << n) {
            if out.len() >= limit {
                break 'subsets;
            }
            let moved: Vec<IndexSlot> = subset
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let (a, b) = pairs[p];
                    if i > 0 && orientation >> (i - 1) & 1 == 1 {
                        a
                    } else {
                        b
                    }
                })
                .collect();
            let labels: Vec<Label> = moved
                .iter()
                .map(|s| c.factors[s.factor].indices[s.position])
                .collect();
            let mut terms = Vec::with_capacity(perms.len());
            for (p, sign) in &perms {
                let mut t = c.clone();
                for (i, slot) in moved.iter().enumerate() {
                    t.factors[slot.factor].indices[slot.position] = labels[p[i]];
                }
                t.coeff = &c.coeff * int(*sign);
                terms.push(t);
            }
            out.push(terms);
        }
        let Some(i) = (0..=n).rev().find(|&i| subset[i] < pairs.len() - (n + 1) + i) else {
            break;
        };
        subset[i] += 1;
        for j in i + 1..=n {
            subset[j] = subset[j - 1] + 1;
        }
    }
    out
}

impl RelationSpace {
    pub fn new(n: usize) -> Self {
        RelationSpace::with_cap(n, DEFAULT_TERM_CAP)
    }

    pub fn with_cap(n: usize, cap: usize) -> Self {
        RelationSpace {
            n,
            generators: Vec::new(),
            columns: BTreeMap::new(),
            terms: Vec::new(),
            echelon: Echelon::new(),
            expanded: 0,
            cap,
            complete: true,
        }
    }

    /// Relation space closed over every term reachable from `lc`.
    pub fn for_combination(lc: &LinearCombination, n: usize) -> Self {
        let mut rel = RelationSpace::new(n);
        rel.close_over(lc);
        rel
    }

    /// Number of canonical terms seen.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn rank(&self) -> usize {
        self.echelon.rank()
    }

    fn column(&mut self, key: CanonicalKey, term: &Contraction) -> usize {
        if let Some(&c) = self.columns.get(&key) {
            return c;
        }
        let c = self.terms.len();
        let mut unit = term.clone();
        unit.coeff = Rational::one();
        self.terms.push(unit);
        self.columns.insert(key, c);
        c
    }

    /// Coordinates of a combination in the canonical-term basis.
    pub fn vector(&mut self, lc: &LinearCombination) -> SparseVec {
        let mut v = SparseVec::new();
        for t in &reduce(lc, self.n).terms {
            let canon = canonical(t).expect("reduced terms are nonzero");
            let col = self.column(canon.key, &canon.term);
            *v.entry(col).or_insert_with(Rational::zero) += &canon.term.coeff;
        }
        v.retain(|_, x| !x.is_zero());
        v
    }

    fn add_generator(&mut self, terms: Vec<Contraction>) {
        let lc = reduce(&LinearCombination::from_terms(terms), self.n);
        if lc.is_empty() {
            return;
        }
        let v = self.vector(&lc);
        if self.echelon.insert(&v) {
            self.generators.push(lc);
        }
    }

    fn generate_for(&mut self, c: &Contraction) {
        for f in 0..c.factors.len() {
            let kind = c.factors[f].kind;
            if matches!(kind, Kind::Riemann | Kind::Weyl) {
                for g in first_bianchi(c, f) {
                    self.add_generator(g);
                }
            }
            for g in second_bianchi(c, f) {
                self.add_generator(g);
            }
            if let Some(lifted) = lift(c, f) {
                for g in second_bianchi(&lifted, f) {
                    self.add_generator(g);
                }
            }
            let m = if kind == Kind::SymPhi { 0 } else { c.factors[f].order as usize };
            for pos in 0..m.saturating_sub(1) {
                let (swapped, corrections) = swap_derivatives(c, f, pos);
                let mut g = vec![c.clone(), swapped.scaled(&int(-1))];
                g.extend(corrections.into_iter().map(|t| t.scaled(&int(-1))));
                self.add_generator(g);
            }
        }
        let mut lifted = c.clone();
        for f in 0..c.factors.len() {
            if let Some(l) = lift(&lifted, f) {
                lifted = l;
            }
        }
        for g in dimension_identities(c, self.n, 32) {
            self.add_generator(g);
        }
        if lifted != *c {
            for g in dimension_identities(&lifted, self.n, 32) {
                self.add_generator(g);
            }
        }
    }

    /// Generates relations through every known term until no new terms
    /// appear (or the term cap is reached).
    fn saturate(&mut self) {
        while self.expanded < self.terms.len() {
            if self.terms.len() > self.cap {
                self.complete = false;
                return;
            }
            let term = self.terms[self.expanded].clone();
            self.expanded += 1;
            self.generate_for(&term);
        }
    }

    /// Registers the terms of `lc` and closes the space over them.
    pub fn close_over(&mut self, lc: &LinearCombination) {
        self.vector(lc);
        self.saturate();
    }

    /// True iff `lc` lies in the span of the generators.
    pub fn is_zero(&mut self, lc: &LinearCombination) -> bool {
        self.close_over(lc);
        let v = self.vector(lc);
        self.echelon.contains(&v)
    }

    /// Indices of a maximal subset of `terms` that is linearly independent
    /// modulo the relations, chosen greedily in the given order.
    pub fn independent_subset(&mut self, terms: &[Contraction]) -> Vec<usize> {
        let all = LinearCombination::from_terms(terms.to_vec());
        self.close_over(&all);
        let mut echelon = self.echelon.clone();
        let mut kept = Vec::new();
        for (i, t) in terms.iter().enumerate() {
            let v = self.vector(&LinearCombination::single(t.clone()));
            if echelon.insert(&v) {
                kept.push(i);
            }
        }
        kept
    }

    /// Representative of `lc` modulo the relations, reduced onto the terms
    /// that are not pivots of any relation.
    pub fn normal_form(&mut self, lc: &LinearCombination) -> LinearCombination {
        self.close_over(lc);
        let v = self.vector(lc);
        let r = self.echelon.reduce(&v);
        let terms = r
            .into_iter()
            .map(|(col, x)| self.terms[col].scaled(&x))
            .collect();
        reduce(&LinearCombination::from_terms(terms), self.n)
    }
}

/// True iff `lc` is a consequence of the relation generators (closing the
/// space over the terms of `lc` first).
pub fn is_zero_mod_relations(lc: &LinearCombination, rel: &mut RelationSpace) -> bool {
    rel.is_zero(lc)
}

/// Symbolic verdict together with a numeric check at random jets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroCertificate {
    pub symbolic: bool,
    pub numeric: ZeroCheck,
    pub numeric_zero: bool,
    /// Numerically zero but not derivable from the relation generators.
    pub relation_basis_too_small: bool,
    /// The relation closure was cut off by the term cap.
    pub closure_complete: bool,
}

pub fn certify_zero(lc: &LinearCombination, n: usize, jets: &[MetricJet], tol: f64) -> ZeroCertificate {
    let mut rel = RelationSpace::for_combination(lc, n);
    let symbolic = rel.is_zero(lc);
    let numeric = check_zero(lc, jets);
    let numeric_zero = numeric.passes(tol);
    ZeroCertificate {
        symbolic,
        relation_basis_too_small: numeric_zero && !symbolic,
        numeric_zero,
        numeric,
        closure_complete: rel.complete,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse;

    #[test]
    fn cyclic_sum_is_a_relation() {
        let lc = parse("R[i,j,k,l]*R[i,j,k,l] + R[i,k,l,j]*R[i,j,k,l] + R[i,l,j,k]*R[i,j,k,l]").unwrap();
        let mut rel = RelationSpace::for_combination(&lc, 4);
        assert!(is_zero_mod_relations(&lc, &mut rel));
    }

    #[test]
    fn curvature_square_is_not_a_relation() {
        let lc = parse("R[i,j,k,l]*R[i,j,k,l]").unwrap();
        let mut rel = RelationSpace::for_combination(&lc, 4);
        assert!(!rel.is_zero(&lc));
        assert!(rel.is_zero(&LinearCombination::zero()));
    }

    #[test]
    fn half_trace_identity() {
        // R_ikjl R_ijkl = ½ R_ijkl R_ijkl
        let lc = parse("R[i,k,j,l]*R[i,j,k,l] - 1/2*R[i,j,k,l]*R[i,j,k,l]").unwrap();
        let mut rel = RelationSpace::for_combination(&lc, 5);
        assert!(rel.is_zero(&lc));
    }

    #[test]
    fn contracted_bianchi() {
        // ∇^a Ric_ab ∇^b Scal = ½ |∇Scal|²
        let lc = parse("D[a](Ric[a,b])*D[b](Scal) - 1/2*D[a](Scal)*D[a](Scal)").unwrap();
        let mut rel = RelationSpace::for_combination(&lc, 4);
        assert!(rel.is_zero(&lc));
    }

    #[test]
    fn permutation_signs() {
        let perms = permutations(3);
        assert_eq!(perms.len(), 6);
        assert_eq!(perms.iter().map(|(_, s)| s).sum::<i64>(), 0);
    }

    #[test]
    fn two_dimensional_curvature_square() {
        let lc = parse("R[i,j,k,l]*R[i,j,k,l] - Scal*Scal").unwrap();
        let mut rel = RelationSpace::for_combination(&lc, 2);
        assert!(rel.is_zero(&lc));
        assert!(!RelationSpace::for_combination(&lc, 3).is_zero(&lc));
    }

    #[test]
    fn generators_vanish_numerically() {
        let seed = parse("D[a,b](Ric[a,b])*Scal + D[a](R[a,c,d,e])*D[b](R[b,c,d,e]) + R[a,b,c,d]*R[a,c,e,f]*R[b,f,d,e]").unwrap();
        let rel = RelationSpace::for_combination(&seed, 4);
        assert!(rel.complete);
        assert!(rel.generators.len() > 10);
        let jets = crate::numeric::random_jets(4, 5, 2, 0, 7);
        for g in &rel.generators {
            let check = check_zero(g, &jets);
            assert!(check.passes(1e-9), "{} -> {check:?}", crate::io::print(g));
        }
    }
}
