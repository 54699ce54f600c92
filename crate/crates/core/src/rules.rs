//! Differential-geometric rewrites on contractions.
//!
//! Curvature conventions: `R_ijkl = g_il g_jk - g_ik g_jl` on the unit
//! sphere, `Ric_jk = R_ijki` (trace of the first and last slot), and
//! `P = (Ric - Scal/(2(n-1)) g)/(n-2)`, so that
//! `R = W + P∧g` with `(P∧g)_ijkl = P_jk g_il + P_il g_jk - P_jl g_ik - P_ik g_jl`.
//! Derivatives commute as `[∇_a, ∇_b] X_s = R_abus X_u`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::canon::{eliminate_metrics, reduce};
use crate::rational::{int, rat, Rational};
use crate::term::{Contraction, Factor, Kind, Label, LinearCombination};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("{op} needs dimension n >= {min}, got {n}")]
    Dimension { op: &'static str, n: usize, min: usize },
    #[error("{op} needs an even dimension, got {n}")]
    OddDimension { op: &'static str, n: usize },
    #[error("{op} does not apply to {kind:?} factors")]
    UnsupportedKind { op: &'static str, kind: Kind },
}

/// Source of labels not yet used in a term.
#[derive(Clone, Debug)]
pub struct LabelGen {
    next: Label,
}

impl LabelGen {
    pub fn above(c: &Contraction) -> Self {
        LabelGen {
            next: c.next_label(),
        }
    }

    pub fn starting_at(next: Label) -> Self {
        LabelGen { next }
    }

    pub fn fresh(&mut self) -> Label {
        let l = self.next;
        self.next += 1;
        l
    }
}

/// A sum of factor products, used as the replacement of one factor.
pub type Products = Vec<(Rational, Vec<Factor>)>;

/// Replaces factors term by term. `rule` returns `None` to keep a factor.
pub fn substitute(
    lc: &LinearCombination,
    mut rule: impl FnMut(&Factor, &mut LabelGen) -> Option<Products>,
) -> LinearCombination {
    let mut out = Vec::new();
    for term in &lc.terms {
        let mut gen = LabelGen::above(term);
        let mut partial: Products = vec![(term.coeff.clone(), Vec::new())];
        for f in &term.factors {
            let options = rule(f, &mut gen).unwrap_or_else(|| vec![(Rational::one(), vec![f.clone()])]);
            let mut next = Vec::with_capacity(partial.len() * options.len());
            for (c, fs) in &partial {
                for (d, gs) in &options {
                    let mut prod = fs.clone();
                    prod.extend(gs.iter().cloned());
                    next.push((c * d, prod));
                }
            }
            partial = next;
        }
        out.extend(
            partial
                .into_iter()
                .filter(|(c, _)| !c.is_zero())
                .map(|(c, fs)| Contraction::new(c, fs)),
        );
    }
    LinearCombination::from_terms(out)
}

fn with_derivs(kind: Kind, derivs: &[Label], base: &[Label]) -> Factor {
    let mut indices = derivs.to_vec();
    indices.extend_from_slice(base);
    Factor::new(kind, derivs.len() as u8, indices)
}

fn split(f: &Factor) -> (&[Label], &[Label]) {
    f.indices.split_at(f.order as usize)
}

/// `P → (Ric - Scal/(2(n-1)) g)/(n-2)`, derivatives carried along.
pub fn schouten_to_ricci(lc: &LinearCombination, n: usize) -> Result<LinearCombination, RuleError> {
    if n < 3 {
        return Err(RuleError::Dimension {
            op: "schouten_to_ricci",
            n,
            min: 3,
        });
    }
    let n_ = n as i64;
    let out = substitute(lc, |f, _| {
        (f.kind == Kind::Schouten).then(|| {
            let (d, b) = split(f);
            vec![
                (rat(1, n_ - 2), vec![with_derivs(Kind::Ricci, d, b)]),
                (
                    rat(-1, 2 * (n_ - 1) * (n_ - 2)),
                    vec![with_derivs(Kind::ScalarCurv, d, &[]), Factor::metric(b[0], b[1])],
                ),
            ]
        })
    });
    Ok(reduce(&out, n))
}

/// `Ric → (n-2) P + J g` and `Scal → 2(n-1) J` with `J = P^a_a`.
pub fn ricci_to_schouten(lc: &LinearCombination, n: usize) -> LinearCombination {
    let n_ = n as i64;
    let out = substitute(lc, |f, gen| match f.kind {
        Kind::Ricci => {
            let (d, b) = split(f);
            let c = gen.fresh();
            Some(vec![
                (int(n_ - 2), vec![with_derivs(Kind::Schouten, d, b)]),
                (
                    int(1),
                    vec![with_derivs(Kind::Schouten, d, &[c, c]), Factor::metric(b[0], b[1])],
                ),
            ])
        }
        Kind::ScalarCurv => {
            let (d, _) = split(f);
            let c = gen.fresh();
            Some(vec![(
                int(2 * (n_ - 1)),
                vec![with_derivs(Kind::Schouten, d, &[c, c])],
            )])
        }
        _ => None,
    });
    reduce(&out, n)
}

/// `(X∧g)_ijkl = X_jk g_il + X_il g_jk - X_jl g_ik - X_ik g_jl` for a
/// symmetric two-tensor given as `make(a, b)`.
fn wedge_g(i: Label, j: Label, k: Label, l: Label, make: impl Fn(Label, Label) -> Products) -> Products {
    let mut out = Products::new();
    for (sign, (a, b), (c, d)) in [
        (1, (j, k), (i, l)),
        (1, (i, l), (j, k)),
        (-1, (j, l), (i, k)),
        (-1, (i, k), (j, l)),
    ] {
        for (coeff, mut fs) in make(a, b) {
            fs.push(Factor::metric(c, d));
            out.push((coeff * int(sign), fs));
        }
    }
    out
}

/// Underived Riemann factors become `W + P∧g`. Derived Riemann factors are
/// left in place and returned in the second component.
pub fn decompose_curvature(lc: &LinearCombination, n: usize) -> (LinearCombination, Vec<Factor>) {
    let mut skipped = Vec::new();
    let out = substitute(lc, |f, _| {
        if f.kind != Kind::Riemann {
            return None;
        }
        if f.order > 0 {
            skipped.push(f.clone());
            return None;
        }
        let (i, j, k, l) = (f.indices[0], f.indices[1], f.indices[2], f.indices[3]);
        let mut out = vec![(Rational::one(), vec![Factor::weyl(i, j, k, l)])];
        out.extend(wedge_g(i, j, k, l, |a, b| {
            vec![(Rational::one(), vec![Factor::schouten(a, b)])]
        }));
        Some(out)
    });
    (reduce(&out, n), skipped)
}

/// Weyl factors (any derivative order) in terms of Riemann, Ricci and scalar
/// curvature.
pub fn decompose_weyl(lc: &LinearCombination, n: usize) -> Result<LinearCombination, RuleError> {
    if n < 3 {
        return Err(RuleError::Dimension {
            op: "decompose_weyl",
            n,
            min: 3,
        });
    }
    let n_ = n as i64;
    let out = substitute(lc, |f, _| {
        if f.kind != Kind::Weyl {
            return None;
        }
        let (d, b) = split(f);
        let (i, j, k, l) = (b[0], b[1], b[2], b[3]);
        let mut out = vec![(Rational::one(), vec![with_derivs(Kind::Riemann, d, b)])];
        // W = R - (Ric∧g)/(n-2) + Scal (g∧g)/(2(n-1)(n-2)), where g∧g = 2(g_il g_jk - g_ik g_jl).
        for (coeff, fs) in wedge_g(i, j, k, l, |a, c| {
            vec![(Rational::one(), vec![with_derivs(Kind::Ricci, d, &[a, c])])]
        }) {
            out.push((coeff * rat(-1, n_ - 2), fs));
        }
        let s = rat(1, (n_ - 1) * (n_ - 2));
        let scal = with_derivs(Kind::ScalarCurv, d, &[]);
        out.push((
            s.clone(),
            vec![scal.clone(), Factor::metric(i, l), Factor::metric(j, k)],
        ));
        out.push((-s, vec![scal, Factor::metric(i, k), Factor::metric(j, l)]));
        Some(out)
    });
    Ok(reduce(&out, n))
}

/// `∇_k` of a product by the Leibniz rule (metric factors are parallel).
pub fn leibniz(c: &Contraction, k: Label) -> Vec<Contraction> {
    let mut out = Vec::new();
    for (p, f) in c.factors.iter().enumerate() {
        if f.kind.is_metric() {
            continue;
        }
        let mut factors = c.factors.clone();
        factors[p] = match f.kind {
            // A derivative of a symmetrized φ-jet is no longer symmetric.
            Kind::SymPhi => {
                return desymmetrize(c)
                    .terms
                    .iter()
                    .flat_map(|t| leibniz(t, k))
                    .collect()
            }
            _ => f.differentiate(k),
        };
        out.push(Contraction::new(c.coeff.clone(), factors));
    }
    out
}

/// Applies the derivatives `derivs` (outermost first) to a product.
fn differentiate_product(c: &Contraction, derivs: &[Label]) -> Vec<Contraction> {
    let mut terms = vec![c.clone()];
    for &k in derivs.iter().rev() {
        terms = terms.iter().flat_map(|t| leibniz(t, k)).collect();
    }
    terms
}

/// Exchanges the derivative slots at positions `pos` and `pos + 1` of factor
/// `f`. Returns the term with the slots swapped, and the curvature
/// corrections so that `original = swapped + corrections`.
pub fn swap_derivatives(c: &Contraction, f: usize, pos: usize) -> (Contraction, Vec<Contraction>) {
    let factor = &c.factors[f];
    let m = factor.order as usize;
    assert!(pos + 1 < m, "derivative slot {pos} has no inner neighbour");
    let mut swapped = c.clone();
    swapped.factors[f].indices.swap(pos, pos + 1);
    let scalar_pair = matches!(factor.kind, Kind::Phi | Kind::ScalarCurv) && pos + 2 == m;
    if scalar_pair || factor.indices[pos] == factor.indices[pos + 1] {
        return (swapped, Vec::new());
    }
    // ∇_O [∇_a, ∇_b] X_{s..} = ∇_O Σ_t R_{a b u s_t} X_{..u..}
    let (a, b) = (factor.indices[pos], factor.indices[pos + 1]);
    let outer = &factor.indices[..pos];
    let inner = Factor {
        indices: factor.indices[pos + 2..].to_vec(),
        order: factor.order - pos as u8 - 2,
        ..factor.clone()
    };
    let mut gen = LabelGen::above(c);
    let mut corrections = Vec::new();
    for t in 0..inner.indices.len() {
        let u = gen.fresh();
        let s = inner.indices[t];
        let mut x = inner.clone();
        x.indices[t] = u;
        let product = Contraction::unit(vec![Factor::riemann(a, b, u, s), x]);
        for piece in differentiate_product(&product, outer) {
            let mut factors = c.factors.clone();
            factors.splice(f..=f, piece.factors);
            corrections.push(Contraction::new(&c.coeff * &piece.coeff, factors));
        }
    }
    (swapped, corrections)
}

/// Sorts the derivative slots of factor `f` by `rank` (stable, adjacent
/// swaps). The first returned term is the sorted one; the others are the
/// curvature corrections, left as produced.
pub fn sort_derivatives(
    c: &Contraction,
    f: usize,
    rank: &impl Fn(Label) -> usize,
) -> Vec<Contraction> {
    let mut main = c.clone();
    let mut corrections = Vec::new();
    let m = main.factors[f].order as usize;
    loop {
        let idx = &main.factors[f].indices;
        let Some(pos) = (0..m.saturating_sub(1)).find(|&p| rank(idx[p]) > rank(idx[p + 1])) else {
            break;
        };
        let (swapped, corr) = swap_derivatives(&main, f, pos);
        main = swapped;
        corrections.extend(corr);
    }
    let mut out = vec![main];
    out.extend(corrections);
    out
}

fn derivatives_sorted(f: &Factor) -> bool {
    let d = &f.indices[..f.order as usize];
    d.windows(2).all(|w| w[0] <= w[1])
}

/// Reorders every factor's derivative slots into ascending label order,
/// emitting curvature corrections (which are sorted in turn). The result is
/// not canonicalized: canonical relabeling would undo the label order.
pub fn commute_derivatives(lc: &LinearCombination) -> LinearCombination {
    let mut done = Vec::new();
    let mut work: Vec<Contraction> = lc.terms.clone();
    while let Some(term) = work.pop() {
        match term.factors.iter().position(|f| !derivatives_sorted(f)) {
            None => done.push(term),
            Some(f) => {
                let mut pieces = sort_derivatives(&term, f, &|l| l as usize).into_iter();
                work.push(pieces.next().expect("sorted term"));
                work.extend(pieces);
            }
        }
    }
    LinearCombination::from_terms(done)
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

fn permutations(items: &[Label]) -> Vec<Vec<Label>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let first = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Expands every `SymPhi` factor into the average of the φ-jets over all
/// orderings of its slots.
pub fn desymmetrize(c: &Contraction) -> LinearCombination {
    let lc = LinearCombination::single(c.clone());
    substitute(&lc, |f, _| {
        (f.kind == Kind::SymPhi).then(|| {
            let w = rat(1, factorial(f.indices.len()));
            permutations(&f.indices)
                .into_iter()
                .map(|p| (w.clone(), vec![Factor::phi(f.flavor, p)]))
                .collect()
        })
    })
}

/// Rewrites every φ-jet of order ≥ 3 as its symmetrization plus lower-order
/// curvature corrections (recursively symmetrized). Orders 1 and 2 are
/// already symmetric and become `SymPhi` unchanged.
pub fn symmetrize_phi(lc: &LinearCombination, n: usize) -> LinearCombination {
    let mut out = Vec::new();
    let mut work: Vec<Contraction> = lc.terms.clone();
    while let Some(term) = work.pop() {
        let Some(f) = term.factors.iter().position(|f| f.kind == Kind::Phi) else {
            out.push(term);
            continue;
        };
        let factor = &term.factors[f];
        let mut sym = term.clone();
        sym.factors[f].kind = Kind::SymPhi;
        work.push(sym);
        let nu = factor.indices.len();
        if nu < 3 {
            continue;
        }
        // ∇_{σ(a)}φ = ∇_a φ + corr_σ, so ∇_a φ = Sym - (1/ν!) Σ_σ corr_σ.
        let target = factor.indices.clone();
        let rank = |l: Label| target.iter().position(|&t| t == l).unwrap_or(usize::MAX);
        let weight = rat(-1, factorial(nu));
        let mut distinct: BTreeMap<Vec<Label>, i64> = BTreeMap::new();
        for perm in permutations(&target) {
            *distinct.entry(perm).or_insert(0) += 1;
        }
        for (perm, multiplicity) in distinct {
            let mut t = term.clone();
            t.factors[f].indices = perm;
            let pieces = sort_derivatives(&t, f, &rank);
            for corr in pieces.into_iter().skip(1) {
                work.push(corr.scaled(&(&weight * int(multiplicity))));
            }
        }
    }
    reduce(&LinearCombination::from_terms(out), n)
}

/// Number of φ-factors of the given flavor.
pub fn phi_degree(c: &Contraction, flavor: u8) -> usize {
    c.factors
        .iter()
        .filter(|f| f.kind.is_phi() && f.flavor == flavor)
        .count()
}

/// Expansion of a factor under `ĝ = e^{2φ} g`: `e^{prefactor φ}` times the
/// sum of the homogeneous parts `by_degree[k]` (degree `k` in φ).
#[derive(Clone, Debug)]
pub struct ConformalLaw {
    pub prefactor: i64,
    pub by_degree: Vec<LinearCombination>,
}

/// Builder for conformally transformed factors. Terms are products whose free
/// labels are the slots of the transformed object; the conformal factor is a
/// `Phi` of flavor `flavor`.
struct Hat {
    n: i64,
    flavor: u8,
    max_degree: usize,
}

impl Hat {
    fn phi(&self, indices: Vec<Label>) -> Factor {
        Factor::phi(self.flavor, indices)
    }

    fn degree(&self, c: &Contraction) -> usize {
        phi_degree(c, self.flavor)
    }

    fn keep(&self, terms: Vec<Contraction>) -> Vec<Contraction> {
        terms
            .into_iter()
            .filter(|t| self.degree(t) <= self.max_degree && !t.coeff.is_zero())
            .collect()
    }

    /// `D_ab = -φ_ab + φ_a φ_b - ½|∇φ|² g_ab`, the change of the Schouten tensor.
    fn schouten_shift(&self, a: Label, b: Label, gen: &mut LabelGen) -> Vec<Contraction> {
        let u = gen.fresh();
        vec![
            Contraction::new(int(-1), vec![self.phi(vec![a, b])]),
            Contraction::unit(vec![self.phi(vec![a]), self.phi(vec![b])]),
            Contraction::new(
                rat(-1, 2),
                vec![self.phi(vec![u]), self.phi(vec![u]), Factor::metric(a, b)],
            ),
        ]
    }

    /// `tr D = -Δφ + (1 - n/2)|∇φ|²`.
    fn schouten_shift_trace(&self, gen: &mut LabelGen) -> Vec<Contraction> {
        let u = gen.fresh();
        let v = gen.fresh();
        vec![
            Contraction::new(int(-1), vec![self.phi(vec![u, u])]),
            Contraction::new(
                rat(2 - self.n, 2),
                vec![self.phi(vec![v]), self.phi(vec![v])],
            ),
        ]
    }

    fn times(terms: Vec<Contraction>, coeff: Rational, extra: &[Factor]) -> Vec<Contraction> {
        terms
            .into_iter()
            .map(|t| {
                let mut factors = t.factors;
                factors.extend_from_slice(extra);
                Contraction::new(t.coeff * &coeff, factors)
            })
            .collect()
    }

    /// Transformed underived tensor with the given base slots.
    fn base(&self, kind: Kind, base: &[Label], gen: &mut LabelGen) -> Result<(i64, Vec<Contraction>), RuleError> {
        let n = self.n;
        Ok(match kind {
            Kind::Weyl => (2, vec![Contraction::unit(vec![Factor::new(kind, 0, base.to_vec())])]),
            Kind::Metric => (2, vec![Contraction::unit(vec![Factor::metric(base[0], base[1])])]),
            Kind::InverseMetric => (
                -2,
                vec![Contraction::unit(vec![Factor::new(kind, 0, base.to_vec())])],
            ),
            Kind::Riemann => {
                let (i, j, k, l) = (base[0], base[1], base[2], base[3]);
                let mut terms = vec![Contraction::unit(vec![Factor::riemann(i, j, k, l)])];
                for (sign, (a, b), (c, d)) in [
                    (1, (j, k), (i, l)),
                    (1, (i, l), (j, k)),
                    (-1, (j, l), (i, k)),
                    (-1, (i, k), (j, l)),
                ] {
                    let shift = self.schouten_shift(a, b, gen);
                    terms.extend(Hat::times(shift, int(sign), &[Factor::metric(c, d)]));
                }
                (2, terms)
            }
            Kind::Schouten => {
                let mut terms = vec![Contraction::unit(vec![Factor::schouten(base[0], base[1])])];
                terms.extend(self.schouten_shift(base[0], base[1], gen));
                (0, terms)
            }
            Kind::Ricci => {
                let (a, b) = (base[0], base[1]);
                let mut terms = vec![Contraction::unit(vec![Factor::ricci(a, b)])];
                terms.extend(Hat::times(self.schouten_shift(a, b, gen), int(n - 2), &[]));
                terms.extend(Hat::times(
                    self.schouten_shift_trace(gen),
                    int(1),
                    &[Factor::metric(a, b)],
                ));
                (0, terms)
            }
            Kind::ScalarCurv => {
                let mut terms = vec![Contraction::unit(vec![Factor::scalar()])];
                terms.extend(Hat::times(self.schouten_shift_trace(gen), int(2 * (n - 1)), &[]));
                (-2, terms)
            }
            Kind::Phi | Kind::SymPhi => unreachable!("φ-jets are handled by `factor`"),
        })
    }

    /// `∇̂_k (e^{wφ} E)` for `E` with free slots `slots`, divided by `e^{wφ}`.
    fn derivative(
        &self,
        terms: &[Contraction],
        w: i64,
        k: Label,
        slots: &[Label],
        gen: &mut LabelGen,
    ) -> Vec<Contraction> {
        let mut out = Vec::new();
        for e in terms {
            out.extend(leibniz(e, k));
            if self.degree(e) + 1 > self.max_degree {
                continue;
            }
            let r = slots.len() as i64;
            if w != r {
                out.push(Contraction::new(
                    &e.coeff * int(w - r),
                    [e.factors.clone(), vec![self.phi(vec![k])]].concat(),
                ));
            }
            for &s in slots {
                let moved = e.relabel(&BTreeMap::from([(s, k)]));
                out.push(Contraction::new(
                    -e.coeff.clone(),
                    [moved.factors, vec![self.phi(vec![s])]].concat(),
                ));
                let u = gen.fresh();
                let traced = e.relabel(&BTreeMap::from([(s, u)]));
                out.push(Contraction::new(
                    e.coeff.clone(),
                    [traced.factors, vec![self.phi(vec![u]), Factor::metric(k, s)]].concat(),
                ));
            }
        }
        self.keep(out)
    }

    /// Transformed factor whose labels are pairwise distinct.
    fn factor(&self, f: &Factor, gen: &mut LabelGen) -> Result<(i64, Vec<Contraction>), RuleError> {
        let m = f.order as usize;
        if f.kind == Kind::SymPhi {
            let mut all = Vec::new();
            let mut w = 0;
            for t in desymmetrize(&Contraction::unit(vec![f.clone()])).terms {
                let (w1, terms) = self.factor(&t.factors[0], gen)?;
                w = w1;
                all.extend(Hat::times(terms, t.coeff.clone(), &[]));
            }
            return Ok((w, all));
        }
        if f.kind.is_metric() && m > 0 {
            return Err(RuleError::UnsupportedKind {
                op: "conformal_expand",
                kind: f.kind,
            });
        }
        let (w, mut terms, mut slots, applied) = if f.kind == Kind::Phi {
            // A scalar function: the innermost derivative is the plain gradient.
            let last = f.indices[m - 1];
            let start = vec![Contraction::unit(vec![Factor::phi(f.flavor, vec![last])])];
            (0, self.keep(start), vec![last], 1)
        } else {
            let (w, terms) = self.base(f.kind, &f.indices[m..], gen)?;
            (w, self.keep(terms), f.indices[m..].to_vec(), 0)
        };
        for p in (0..m - applied).rev() {
            let k = f.indices[p];
            terms = self.derivative(&terms, w, k, &slots, gen);
            slots.insert(0, k);
        }
        Ok((w, terms))
    }

    /// Transformed factor with internal pairs, relabeled apart and restored.
    fn factor_with_pairs(&self, f: &Factor, gen: &mut LabelGen) -> Result<(i64, Vec<Contraction>), RuleError> {
        let mut distinct = f.clone();
        let mut restore = BTreeMap::new();
        let mut seen = Vec::new();
        for l in distinct.indices.iter_mut() {
            if seen.contains(l) {
                let x = gen.fresh();
                restore.insert(x, *l);
                *l = x;
            } else {
                seen.push(*l);
            }
        }
        let (w, terms) = self.factor(&distinct, gen)?;
        let pairs = restore.len() as i64;
        let terms = terms.into_iter().map(|t| t.relabel(&restore)).collect();
        Ok((w - 2 * pairs, terms))
    }
}

/// Conformal transformation law of one factor up to φ-degree `max_degree`.
/// Labels that occur twice in the factor stay contracted.
pub fn conformal_law(f: &Factor, max_degree: usize, n: usize, flavor: u8) -> Result<ConformalLaw, RuleError> {
    let hat = Hat {
        n: n as i64,
        flavor,
        max_degree,
    };
    let mut gen = LabelGen::starting_at(f.indices.iter().max().map_or(0, |m| m + 1));
    let (prefactor, terms) = hat.factor_with_pairs(f, &mut gen)?;
    let mut by_degree = vec![Vec::new(); max_degree + 1];
    for t in terms {
        let d = hat.degree(&t);
        by_degree[d].push(t);
    }
    Ok(ConformalLaw {
        prefactor,
        by_degree: by_degree
            .into_iter()
            .map(|terms| reduce(&LinearCombination::from_terms(terms), n))
            .collect(),
    })
}

/// Degree-`degree` part of the transformed factor (prefactor removed).
pub fn conformal_expand(f: &Factor, degree: usize, n: usize) -> Result<LinearCombination, RuleError> {
    Ok(conformal_law(f, degree, n, 0)?.by_degree.swap_remove(degree))
}

/// Transformation of a whole term up to φ-degree `max_degree`: returns the
/// total prefactor exponent (the term's weight) and the parts by degree,
/// unreduced.
pub fn conformal_term(
    c: &Contraction,
    max_degree: usize,
    n: usize,
    flavor: u8,
) -> Result<(i64, Vec<Vec<Contraction>>), RuleError> {
    let hat = Hat {
        n: n as i64,
        flavor,
        max_degree,
    };
    let mut gen = LabelGen::above(c);
    let pairs = c.pairing().len() as i64;
    let internal: i64 = c.factors.iter().map(|f| f.internal_pairs() as i64).sum();
    // Partial products bucketed by degree.
    let mut partial: Vec<Vec<Contraction>> = vec![Vec::new(); max_degree + 1];
    partial[0].push(Contraction::constant(c.coeff.clone()));
    let mut prefactor = 0;
    for f in &c.factors {
        let (w, terms) = hat.factor_with_pairs(f, &mut gen)?;
        prefactor += w;
        let mut next: Vec<Vec<Contraction>> = vec![Vec::new(); max_degree + 1];
        for (d0, bucket) in partial.iter().enumerate() {
            for p in bucket {
                for t in &terms {
                    let d = d0 + hat.degree(t);
                    if d <= max_degree {
                        next[d].push(p.product(t));
                    }
                }
            }
        }
        partial = next;
    }
    // Pairs between different factors contract through ĝ^{-1}.
    prefactor -= 2 * (pairs - internal);
    Ok((prefactor, partial))
}

fn odd_permutations_sign(perm: &[usize]) -> i64 {
    let mut sign = 1;
    let mut seen = vec![false; perm.len()];
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

fn index_permutations(n: usize) -> Vec<Vec<usize>> {
    permutations(&(0..n as Label).collect::<Vec<_>>())
        .into_iter()
        .map(|p| p.into_iter().map(|x| x as usize).collect())
        .collect()
}

/// The Chern-Gauss-Bonnet integrand from the generalized Kronecker delta,
/// `(1/(2^{n/2} n!)) δ^{i_1…i_n}_{j_1…j_n} Π R_{i_{2a-1} i_{2a}}^{j_{2a} j_{2a-1}}`,
/// normalized to equal 1 on the unit sphere.
pub fn pfaffian(n: usize) -> Result<LinearCombination, RuleError> {
    if n % 2 == 1 || n == 0 {
        return Err(RuleError::OddDimension { op: "pfaffian", n });
    }
    let half = n / 2;
    let norm = Rational::new(1.into(), (num_bigint::BigInt::from(1) << half) * factorial(n));
    let mut terms = Vec::new();
    for sigma in index_permutations(n) {
        // j_{σ(b)} = i_b
        let mut j = vec![0 as Label; n];
        for (b, &s) in sigma.iter().enumerate() {
            j[s] = b as Label;
        }
        let factors = (0..half)
            .map(|a| Factor::riemann(2 * a as Label, 2 * a as Label + 1, j[2 * a + 1], j[2 * a]))
            .collect();
        terms.push(Contraction::new(
            &norm * int(odd_permutations_sign(&sigma)),
            factors,
        ));
    }
    Ok(reduce(&LinearCombination::from_terms(terms), n))
}

/// Number of Schouten factors of a term.
pub fn schouten_count(c: &Contraction) -> usize {
    c.factors.iter().filter(|f| f.kind == Kind::Schouten).count()
}

/// The Pfaffian in Weyl/Schouten form, split into the part without Schouten
/// factors and the part with at least one.
pub fn pfaffian_split(n: usize) -> Result<(LinearCombination, LinearCombination), RuleError> {
    let pf = pfaffian(n)?;
    let (decomposed, _) = decompose_curvature(&pf, n);
    let ws = ricci_to_schouten(&decomposed, n);
    let weyl_only = ws.filter(|t| schouten_count(t) == 0);
    let bar = ws.filter(|t| schouten_count(t) >= 1);
    Ok((weyl_only, bar))
}

/// Drops explicit metrics only (no canonicalization).
pub fn strip_metrics(lc: &LinearCombination, n: usize) -> LinearCombination {
    LinearCombination::from_terms(lc.terms.iter().map(|t| eliminate_metrics(t, n)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{parse, parse_tensor, print};

    #[test]
    fn schouten_trace_in_ricci_form() {
        for n in [3usize, 4, 6] {
            let lc = schouten_to_ricci(&parse("P[a,a]*Scal").unwrap(), n).unwrap();
            assert_eq!(lc.terms.len(), 1);
            assert_eq!(lc.terms[0].coeff, rat(1, 2 * (n as i64 - 1)));
        }
        let sq = schouten_to_ricci(&parse("P[a,a]*P[b,b]").unwrap(), 4).unwrap();
        assert_eq!(print(&sq), "1/36 * Scal*Scal");
        assert!(schouten_to_ricci(&parse("P[a,a]*Scal").unwrap(), 2).is_err());
    }

    #[test]
    fn weyl_is_trace_free() {
        for n in [3usize, 4, 5, 7] {
            let (w, _) = parse_tensor("W[i,j,k,i]").unwrap();
            let lc = decompose_weyl(&w, n).unwrap();
            assert!(lc.is_empty(), "n = {n}: {}", print(&lc));
        }
    }

    #[test]
    fn curvature_decomposition_recombines() {
        let (r, _) = parse_tensor("R[i,j,k,l]").unwrap();
        let (dec, skipped) = decompose_curvature(&r, 5);
        assert!(skipped.is_empty());
        let back = schouten_to_ricci(&decompose_weyl(&dec, 5).unwrap(), 5).unwrap();
        assert_eq!(reduce(&back.minus(&r), 5), LinearCombination::zero());
    }

    #[test]
    fn traced_decomposition_gives_ricci() {
        let (r, _) = parse_tensor("R[i,j,k,i]").unwrap();
        let (dec, _) = decompose_curvature(&r, 4);
        let (ric, _) = parse_tensor("Ric[j,k]").unwrap();
        let ric_p = ricci_to_schouten(&ric, 4);
        assert!(reduce(&dec.minus(&ric_p), 4).is_empty());
    }

    #[test]
    fn weyl_decomposition_ricci_coefficient() {
        let (w, _) = parse_tensor("W[i,j,k,l]").unwrap();
        let lc = decompose_weyl(&w, 4).unwrap();
        let ric_coeffs: Vec<Rational> = lc
            .terms
            .iter()
            .filter(|t| t.factors.iter().any(|f| f.kind == Kind::Ricci))
            .map(|t| t.coeff.clone())
            .collect();
        assert_eq!(ric_coeffs.len(), 4);
        assert!(ric_coeffs.iter().all(|c| *c == rat(1, 2) || *c == rat(-1, 2)));
    }

    #[test]
    fn hessian_of_scalar_commutes() {
        let lc = parse("phi[a,b]*phi[a]*phi[b]").unwrap();
        let swapped = Contraction::unit(vec![
            Factor::phi(0, vec![1, 0]),
            Factor::phi(0, vec![0]),
            Factor::phi(0, vec![1]),
        ]);
        let (s, corr) = swap_derivatives(&lc.terms[0], 0, 0);
        assert!(corr.is_empty());
        assert_eq!(s, swapped);
    }

    #[test]
    fn commutator_on_gradient() {
        // ∇_i∇_j∇_k φ = ∇_j∇_i∇_k φ + R_ijuk φ_u
        let c = Contraction::unit(vec![Factor::phi(0, vec![0, 1, 2])]);
        let (s, corr) = swap_derivatives(&c, 0, 0);
        assert_eq!(s.factors[0].indices, vec![1, 0, 2]);
        assert_eq!(corr.len(), 1);
        assert_eq!(corr[0].factors, vec![Factor::riemann(0, 1, 3, 2), Factor::phi(0, vec![3])]);
    }

    #[test]
    fn pfaffian_low_dimensions() {
        assert_eq!(print(&pfaffian(2).unwrap()), "1/2 * Scal");
        let p4 = pfaffian(4).unwrap();
        let expected = reduce(
            &parse("1/24*R[i,j,k,l]*R[i,j,k,l] - 1/6*Ric[a,b]*Ric[a,b] + 1/24*Scal*Scal").unwrap(),
            4,
        );
        assert_eq!(p4, expected);
        assert!(pfaffian(3).is_err());
    }

    #[test]
    fn pfaffian_split_in_dimension_four() {
        let (weyl, bar) = pfaffian_split(4).unwrap();
        assert_eq!(weyl, reduce(&parse("1/24*W[i,j,k,l]*W[i,j,k,l]").unwrap(), 4));
        assert_eq!(
            bar,
            reduce(&parse("1/3*P[a,a]*P[b,b] - 1/3*P[a,b]*P[a,b]").unwrap(), 4)
        );
    }

    #[test]
    fn weyl_is_conformally_covariant() {
        let law = conformal_law(&Factor::weyl(0, 1, 2, 3), 3, 4, 0).unwrap();
        assert_eq!(law.prefactor, 2);
        assert_eq!(law.by_degree[0].len(), 1);
        assert!(law.by_degree[1..].iter().all(LinearCombination::is_empty));
    }

    #[test]
    fn schouten_transformation_parts() {
        let p = Factor::schouten(0, 1);
        let one = conformal_expand(&p, 1, 4).unwrap();
        assert_eq!(one, LinearCombination::single(Contraction::new(int(-1), vec![Factor::phi(0, vec![0, 1])])));
        let two = conformal_expand(&p, 2, 4).unwrap();
        let (expected, _) = parse_tensor("phi[a]*phi[b] - 1/2*phi[u]*phi[u]*g[a,b]").unwrap();
        assert!(reduce(&two.minus(&expected), 4).is_empty(), "{}", print(&two));
        assert!(conformal_expand(&p, 3, 4).unwrap().is_empty());
    }

    #[test]
    fn curvature_law_is_weyl_plus_schouten_law() {
        let n = 5;
        let law = conformal_law(&Factor::riemann(0, 1, 2, 3), 2, n, 0).unwrap();
        // Schouten law on labels far from 0..3, then renamed onto (a, b).
        let p_law = conformal_law(&Factor::schouten(100, 101), 2, n, 0).unwrap();
        for d in 1..=2 {
            let mut expected = LinearCombination::zero();
            for (sign, (a, b), (c, e)) in [
                (1, (1, 2), (0, 3)),
                (1, (0, 3), (1, 2)),
                (-1, (1, 3), (0, 2)),
                (-1, (0, 2), (1, 3)),
            ] {
                let rename = BTreeMap::from([(100, a), (101, b)]);
                for t in &p_law.by_degree[d].terms {
                    let mut moved = t.relabel(&rename);
                    moved.factors.push(Factor::metric(c, e));
                    expected.push(moved.scaled(&int(sign)));
                }
            }
            assert!(reduce(&law.by_degree[d].minus(&expected), n).is_empty(), "degree {d}");
        }
    }
}
