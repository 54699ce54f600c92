//! The contraction data model.
//!
//! A [`Contraction`] is a rational coefficient times a tensor product of
//! [`Factor`]s whose slots are joined by index labels: a label that occurs
//! twice is a contracted pair, a label that occurs once is a free index.
//! Complete contractions have no free indices. Pairs are metric-normalized:
//! every pair is an implicit contraction through the (inverse) metric, so the
//! upper/lower position of an index carries no information and explicit
//! `Metric`/`InverseMetric` factors are eliminated by `reduce`.
//!
//! Slot layout of a factor: the first `order` slots are derivative slots,
//! outermost derivative first, followed by the base slots of the tensor.
//! `D[a,b](R[i,j,k,l])` is stored as `Riemann, order 2, [a,b,i,j,k,l]` and
//! stands for `∇_a ∇_b R_ijkl`. For `Phi` every slot is a derivative slot.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

pub type Label = u32;

/// Tensor kind of a factor. The declaration order is the canonical factor
/// order used by the canonicalizer and the printer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    Weyl,
    Riemann,
    Schouten,
    Ricci,
    ScalarCurv,
    Phi,
    SymPhi,
    Metric,
    InverseMetric,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Weyl,
        Kind::Riemann,
        Kind::Schouten,
        Kind::Ricci,
        Kind::ScalarCurv,
        Kind::Phi,
        Kind::SymPhi,
        Kind::Metric,
        Kind::InverseMetric,
    ];

    /// Number of non-derivative slots.
    pub fn base_slots(self) -> usize {
        match self {
            Kind::Weyl | Kind::Riemann => 4,
            Kind::Schouten | Kind::Ricci | Kind::Metric | Kind::InverseMetric => 2,
            Kind::ScalarCurv | Kind::Phi | Kind::SymPhi => 0,
        }
    }

    /// Exponent `s` in `T(t²g) = t^s T(g)` for the all-lower-index tensor.
    pub fn scale(self) -> i64 {
        match self {
            // Under metric normalization g^ab and g_ab are one abstract tensor.
            Kind::Weyl | Kind::Riemann | Kind::Metric | Kind::InverseMetric => 2,
            Kind::Schouten | Kind::Ricci | Kind::Phi | Kind::SymPhi => 0,
            Kind::ScalarCurv => -2,
        }
    }

    pub fn is_curvature(self) -> bool {
        matches!(
            self,
            Kind::Weyl | Kind::Riemann | Kind::Schouten | Kind::Ricci | Kind::ScalarCurv
        )
    }

    pub fn is_phi(self) -> bool {
        matches!(self, Kind::Phi | Kind::SymPhi)
    }

    pub fn is_metric(self) -> bool {
        matches!(self, Kind::Metric | Kind::InverseMetric)
    }

    pub(crate) fn code(self) -> u32 {
        self as u32
    }
}

/// One tensor occurrence inside a contraction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Factor {
    pub kind: Kind,
    /// Number of covariant derivatives (the `m` in `∇^m R`, or `ν` for φ-factors).
    #[serde(rename = "deriv_order")]
    pub order: u8,
    /// Distinguishes φ_1, φ_2, … after polarization. Always 0 for curvature kinds.
    #[serde(default)]
    pub flavor: u8,
    pub indices: Vec<Label>,
}

impl Factor {
    pub fn new(kind: Kind, order: u8, indices: Vec<Label>) -> Self {
        Factor {
            kind,
            order,
            flavor: 0,
            indices,
        }
    }

    pub fn riemann(i: Label, j: Label, k: Label, l: Label) -> Self {
        Factor::new(Kind::Riemann, 0, vec![i, j, k, l])
    }

    pub fn weyl(i: Label, j: Label, k: Label, l: Label) -> Self {
        Factor::new(Kind::Weyl, 0, vec![i, j, k, l])
    }

    pub fn schouten(a: Label, b: Label) -> Self {
        Factor::new(Kind::Schouten, 0, vec![a, b])
    }

    pub fn ricci(a: Label, b: Label) -> Self {
        Factor::new(Kind::Ricci, 0, vec![a, b])
    }

    pub fn scalar() -> Self {
        Factor::new(Kind::ScalarCurv, 0, vec![])
    }

    pub fn metric(a: Label, b: Label) -> Self {
        Factor::new(Kind::Metric, 0, vec![a, b])
    }

    /// `∇^ν φ_flavor` with the given derivative indices (outermost first).
    pub fn phi(flavor: u8, indices: Vec<Label>) -> Self {
        Factor {
            kind: Kind::Phi,
            order: indices.len() as u8,
            flavor,
            indices,
        }
    }

    pub fn sym_phi(flavor: u8, indices: Vec<Label>) -> Self {
        Factor {
            kind: Kind::SymPhi,
            order: indices.len() as u8,
            flavor,
            indices,
        }
    }

    pub fn expected_arity(&self) -> usize {
        self.kind.base_slots() + self.order as usize
    }

    /// Number of leading derivative slots.
    pub fn deriv_slots(&self) -> usize {
        self.order as usize
    }

    /// Contribution to the weight of a complete contraction.
    pub fn weight(&self) -> i64 {
        self.kind.scale() - self.expected_arity() as i64
    }

    /// Number of pairs joining two slots of this factor.
    pub fn internal_pairs(&self) -> usize {
        let mut count = 0;
        for (p, a) in self.indices.iter().enumerate() {
            if self.indices[p + 1..].contains(a) {
                count += 1;
            }
        }
        count
    }

    /// Returns `∇_label` applied to this factor (new outermost derivative slot).
    pub fn differentiate(&self, label: Label) -> Factor {
        let mut indices = Vec::with_capacity(self.indices.len() + 1);
        indices.push(label);
        indices.extend_from_slice(&self.indices);
        Factor {
            kind: self.kind,
            order: self.order + 1,
            flavor: self.flavor,
            indices,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variance {
    Lower,
    Upper,
}

/// A slot of a factor inside a contraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSlot {
    pub factor: usize,
    pub position: usize,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("factor {factor} ({kind:?}, order {order}) has {found} slots, expected {expected}")]
    Arity {
        factor: usize,
        kind: Kind,
        order: u8,
        expected: usize,
        found: usize,
    },
    #[error("factor {factor} ({kind:?}) must have derivative order {expected}, found {found}")]
    Order {
        factor: usize,
        kind: Kind,
        expected: String,
        found: u8,
    },
    #[error("index {label} occurs {count} times (first at factor {factor}, slot {position})")]
    Matching {
        label: Label,
        count: usize,
        factor: usize,
        position: usize,
    },
    #[error("free index {label} at factor {factor}, slot {position} in a complete contraction")]
    FreeIndex {
        label: Label,
        factor: usize,
        position: usize,
    },
    #[error("term {term} has weight {found}, expected {expected}")]
    Weight {
        term: usize,
        expected: i64,
        found: i64,
    },
    #[error("term {term} has free indices {found:?}, expected {expected:?}")]
    FreeMismatch {
        term: usize,
        expected: Vec<Label>,
        found: Vec<Label>,
    },
}

/// A rational multiple of a tensor product with an index pairing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Contraction {
    #[serde(with = "crate::rational::serde_text")]
    pub coeff: Rational,
    pub factors: Vec<Factor>,
}

impl Contraction {
    pub fn new(coeff: Rational, factors: Vec<Factor>) -> Self {
        Contraction { coeff, factors }
    }

    pub fn unit(factors: Vec<Factor>) -> Self {
        Contraction::new(Rational::one(), factors)
    }

    pub fn constant(coeff: Rational) -> Self {
        Contraction::new(coeff, Vec::new())
    }

    /// Occurrences of each label, as `(factor, position)` lists.
    pub fn occurrences(&self) -> BTreeMap<Label, Vec<IndexSlot>> {
        let mut map: BTreeMap<Label, Vec<IndexSlot>> = BTreeMap::new();
        for (f, factor) in self.factors.iter().enumerate() {
            for (p, &label) in factor.indices.iter().enumerate() {
                map.entry(label).or_default().push(IndexSlot {
                    factor: f,
                    position: p,
                });
            }
        }
        map
    }

    /// Labels occurring exactly once, in ascending order.
    pub fn free_labels(&self) -> Vec<Label> {
        self.occurrences()
            .into_iter()
            .filter(|(_, occ)| occ.len() == 1)
            .map(|(l, _)| l)
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.free_labels().is_empty()
    }

    /// Contracted pairs, each ordered by slot position in the product.
    pub fn pairing(&self) -> Vec<(IndexSlot, IndexSlot)> {
        self.occurrences()
            .into_values()
            .filter(|occ| occ.len() == 2)
            .map(|occ| (occ[0], occ[1]))
            .collect()
    }

    /// Variance of a slot under the metric-normalized convention: the first
    /// slot of a pair is lower, its partner upper; free slots are lower.
    pub fn variance(&self, slot: IndexSlot) -> Variance {
        let label = self.factors[slot.factor].indices[slot.position];
        let first = self
            .occurrences()
            .remove(&label)
            .and_then(|occ| occ.first().copied());
        if first == Some(slot) {
            Variance::Lower
        } else {
            Variance::Upper
        }
    }

    pub fn max_label(&self) -> Option<Label> {
        self.factors
            .iter()
            .flat_map(|f| f.indices.iter().copied())
            .max()
    }

    pub fn next_label(&self) -> Label {
        self.max_label().map_or(0, |l| l + 1)
    }

    /// Scaling exponent under `g → t²g`, with free slots counted as lower
    /// indices. For complete contractions this is the usual weight.
    pub fn weight(&self) -> i64 {
        let scale: i64 = self.factors.iter().map(|f| f.kind.scale()).sum();
        scale - 2 * self.pairing().len() as i64
    }

    /// Number of non-metric factors.
    pub fn length(&self) -> usize {
        self.factors.iter().filter(|f| !f.kind.is_metric()).count()
    }

    /// Number of pairs whose two slots lie in the same factor.
    pub fn internal_contractions(&self) -> usize {
        self.factors.iter().map(Factor::internal_pairs).sum()
    }

    /// Structural checks: arity per kind, each label used at most twice.
    pub fn validate(&self) -> Result<(), TermError> {
        for (f, factor) in self.factors.iter().enumerate() {
            match factor.kind {
                Kind::Phi | Kind::SymPhi if factor.order == 0 => {
                    return Err(TermError::Order {
                        factor: f,
                        kind: factor.kind,
                        expected: ">= 1".into(),
                        found: factor.order,
                    })
                }
                Kind::Metric | Kind::InverseMetric if factor.order != 0 => {
                    return Err(TermError::Order {
                        factor: f,
                        kind: factor.kind,
                        expected: "0".into(),
                        found: factor.order,
                    })
                }
                _ => {}
            }
            if factor.indices.len() != factor.expected_arity() {
                return Err(TermError::Arity {
                    factor: f,
                    kind: factor.kind,
                    order: factor.order,
                    expected: factor.expected_arity(),
                    found: factor.indices.len(),
                });
            }
        }
        for (label, occ) in self.occurrences() {
            if occ.len() > 2 {
                return Err(TermError::Matching {
                    label,
                    count: occ.len(),
                    factor: occ[0].factor,
                    position: occ[0].position,
                });
            }
        }
        Ok(())
    }

    /// `validate` plus the requirement that every slot is paired.
    pub fn validate_complete(&self) -> Result<(), TermError> {
        self.validate()?;
        for (label, occ) in self.occurrences() {
            if occ.len() == 1 {
                return Err(TermError::FreeIndex {
                    label,
                    factor: occ[0].factor,
                    position: occ[0].position,
                });
            }
        }
        Ok(())
    }

    /// Renames every label through `map`; labels missing from the map are kept.
    pub fn relabel(&self, map: &BTreeMap<Label, Label>) -> Contraction {
        let factors = self
            .factors
            .iter()
            .map(|f| Factor {
                indices: f
                    .indices
                    .iter()
                    .map(|l| *map.get(l).unwrap_or(l))
                    .collect(),
                ..f.clone()
            })
            .collect();
        Contraction::new(self.coeff.clone(), factors)
    }

    /// Shifts all labels by `offset`.
    pub fn shifted(&self, offset: Label) -> Contraction {
        let factors = self
            .factors
            .iter()
            .map(|f| Factor {
                indices: f.indices.iter().map(|l| l + offset).collect(),
                ..f.clone()
            })
            .collect();
        Contraction::new(self.coeff.clone(), factors)
    }

    pub fn scaled(&self, c: &Rational) -> Contraction {
        Contraction::new(&self.coeff * c, self.factors.clone())
    }

    /// Tensor product of two terms (labels are used as given).
    pub fn product(&self, other: &Contraction) -> Contraction {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Contraction::new(&self.coeff * &other.coeff, factors)
    }

    pub fn census(&self) -> FactorCensus {
        FactorCensus::of(self)
    }
}

/// A finite formal sum of contractions.
///
/// All terms share one weight and one set of free indices; [`LinearCombination::new`]
/// rejects heterogeneous input. Terms are not automatically collected; see
/// [`crate::canon::reduce`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCombination {
    pub terms: Vec<Contraction>,
}

impl LinearCombination {
    pub fn zero() -> Self {
        LinearCombination { terms: Vec::new() }
    }

    pub fn new(terms: Vec<Contraction>) -> Result<Self, TermError> {
        let lc = LinearCombination { terms };
        lc.validate()?;
        Ok(lc)
    }

    /// Builds a combination without checking homogeneity. Used by rewrites
    /// whose output is homogeneous by construction.
    pub fn from_terms(terms: Vec<Contraction>) -> Self {
        LinearCombination { terms }
    }

    pub fn single(term: Contraction) -> Self {
        LinearCombination { terms: vec![term] }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn weight(&self) -> Option<i64> {
        self.terms.first().map(Contraction::weight)
    }

    pub fn validate(&self) -> Result<(), TermError> {
        let mut reference: Option<(i64, Vec<Label>)> = None;
        for (t, term) in self.terms.iter().enumerate() {
            term.validate()?;
            let w = term.weight();
            let free = term.free_labels();
            match &reference {
                None => reference = Some((w, free)),
                Some((w0, free0)) => {
                    if *w0 != w {
                        return Err(TermError::Weight {
                            term: t,
                            expected: *w0,
                            found: w,
                        });
                    }
                    if *free0 != free {
                        return Err(TermError::FreeMismatch {
                            term: t,
                            expected: free0.clone(),
                            found: free,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn validate_complete(&self) -> Result<(), TermError> {
        for term in &self.terms {
            term.validate_complete()?;
        }
        self.validate()
    }

    pub fn push(&mut self, term: Contraction) {
        self.terms.push(term);
    }

    pub fn extend(&mut self, other: LinearCombination) {
        self.terms.extend(other.terms);
    }

    pub fn scaled(&self, c: &Rational) -> LinearCombination {
        LinearCombination::from_terms(self.terms.iter().map(|t| t.scaled(c)).collect())
    }

    pub fn negated(&self) -> LinearCombination {
        self.scaled(&-Rational::one())
    }

    /// `self − other`, uncollected.
    pub fn minus(&self, other: &LinearCombination) -> LinearCombination {
        let mut out = self.clone();
        out.extend(other.negated());
        out
    }

    pub fn plus(&self, other: &LinearCombination) -> LinearCombination {
        let mut out = self.clone();
        out.extend(other.clone());
        out
    }

    /// Sub-combination of the terms satisfying `keep`.
    pub fn filter(&self, keep: impl Fn(&Contraction) -> bool) -> LinearCombination {
        LinearCombination::from_terms(self.terms.iter().filter(|t| keep(t)).cloned().collect())
    }

    /// True when every coefficient is zero (or there are no terms).
    pub fn is_trivially_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.is_zero())
    }
}

impl From<Contraction> for LinearCombination {
    fn from(term: Contraction) -> Self {
        LinearCombination::single(term)
    }
}

/// Factor counts `(Z, X, C, Γ, Δ)` of a term and derived statistics.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorCensus {
    /// Riemann factors without internal contractions.
    pub z: usize,
    /// Ricci factors.
    pub x: usize,
    /// Scalar-curvature factors.
    pub c: usize,
    /// Second-order φ-factors whose slots are not contracted with each other.
    pub gamma: usize,
    /// Laplacians: second-order φ-factors whose two slots form a pair.
    pub delta: usize,
    /// Non-metric factors.
    pub length: usize,
    /// First-order φ-factors.
    pub n_gradphi: usize,
    pub internal_contractions: usize,
    /// Orders of the φ-factors, non-increasing.
    pub phi_orders: Vec<u8>,
}

impl FactorCensus {
    pub fn of(c: &Contraction) -> FactorCensus {
        let mut census = FactorCensus {
            z: 0,
            x: 0,
            c: 0,
            gamma: 0,
            delta: 0,
            length: c.length(),
            n_gradphi: 0,
            internal_contractions: c.internal_contractions(),
            phi_orders: Vec::new(),
        };
        for f in &c.factors {
            match f.kind {
                Kind::Riemann if f.internal_pairs() == 0 => census.z += 1,
                Kind::Ricci => census.x += 1,
                Kind::ScalarCurv => census.c += 1,
                Kind::Phi | Kind::SymPhi => {
                    census.phi_orders.push(f.order);
                    match f.order {
                        1 => census.n_gradphi += 1,
                        2 if f.indices[0] == f.indices[1] => census.delta += 1,
                        2 => census.gamma += 1,
                        _ => {}
                    }
                }
                _ => {}
            }
        }
        census.phi_orders.sort_unstable_by(|a, b| b.cmp(a));
        census
    }

    /// The `(Z, X, C, Γ, Δ)` tuple.
    pub fn tuple(&self) -> (usize, usize, usize, usize, usize) {
        (self.z, self.x, self.c, self.gamma, self.delta)
    }
}

impl fmt::Display for FactorCensus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(Z={}, X={}, C={}, Γ={}, Δ={}; length {}, ∇φ {}, internal {}, φ-orders {:?})",
            self.z,
            self.x,
            self.c,
            self.gamma,
            self.delta,
            self.length,
            self.n_gradphi,
            self.internal_contractions,
            self.phi_orders
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn rr_full() -> Contraction {
        Contraction::unit(vec![Factor::riemann(0, 1, 2, 3), Factor::riemann(0, 1, 2, 3)])
    }

    #[test]
    fn weight_of_full_curvature_square() {
        assert_eq!(rr_full().weight(), -4);
    }

    #[test]
    fn weight_of_metric_trace_is_zero() {
        let c = Contraction::unit(vec![
            Factor::metric(0, 1),
            Factor::new(Kind::InverseMetric, 0, vec![0, 1]),
        ]);
        assert_eq!(c.weight(), 0);
    }

    #[test]
    fn weight_of_schouten_trace_square() {
        let c = Contraction::unit(vec![Factor::schouten(0, 0), Factor::schouten(1, 1)]);
        assert_eq!(c.weight(), -4);
    }

    #[test]
    fn weight_with_explicit_metric_matches_normalized_form() {
        // W_ijkl P^ik g^jl has the same weight as W_ijkl P^ik with j=l.
        let with_metric = Contraction::unit(vec![
            Factor::weyl(0, 1, 2, 3),
            Factor::schouten(0, 2),
            Factor::metric(1, 3),
        ]);
        let normalized =
            Contraction::unit(vec![Factor::weyl(0, 1, 2, 1), Factor::schouten(0, 2)]);
        assert_eq!(with_metric.weight(), normalized.weight());
        assert_eq!(normalized.weight(), -4);
    }

    #[test]
    fn weight_of_phi_factors() {
        let c = Contraction::unit(vec![Factor::phi(0, vec![0, 0]), Factor::phi(0, vec![1, 1])]);
        assert_eq!(c.weight(), -4);
        let g = Contraction::unit(vec![Factor::phi(0, vec![0]), Factor::phi(0, vec![0])]);
        assert_eq!(g.weight(), -2);
    }

    #[test]
    fn census_scalar_and_laplacians() {
        // R^2 (Δφ)^2, the n = 8, A1 = 2 example.
        let c = Contraction::unit(vec![
            Factor::scalar(),
            Factor::scalar(),
            Factor::phi(0, vec![0, 0]),
            Factor::phi(0, vec![1, 1]),
        ]);
        assert_eq!(c.census().tuple(), (0, 0, 2, 0, 2));
        assert_eq!(c.weight(), -8);
    }

    #[test]
    fn census_ricci_hessian_class() {
        // n = 8, A1 = 2: R ⊗ Ric^ab ⊗ ∇²_ab φ ⊗ Δφ.
        let c = Contraction::unit(vec![
            Factor::scalar(),
            Factor::ricci(0, 1),
            Factor::phi(0, vec![0, 1]),
            Factor::phi(0, vec![2, 2]),
        ]);
        assert_eq!(c.census().tuple(), (0, 1, 1, 1, 1));
        assert_eq!(c.weight(), -8);
    }

    #[test]
    fn census_of_curvature_square() {
        let census = rr_full().census();
        assert_eq!(census.tuple(), (2, 0, 0, 0, 0));
        assert_eq!(census.length, 2);
        assert_eq!(census.internal_contractions, 0);
    }

    #[test]
    fn census_orders_are_sorted() {
        let c = Contraction::unit(vec![
            Factor::phi(0, vec![0]),
            Factor::sym_phi(0, vec![0, 1, 2]),
            Factor::phi(0, vec![1, 2]),
        ]);
        assert_eq!(c.census().phi_orders, vec![3, 2, 1]);
    }

    #[test]
    fn validate_accepts_full_contraction() {
        assert!(rr_full().validate_complete().is_ok());
    }

    #[test]
    fn validate_rejects_bad_ricci_arity() {
        let c = Contraction::unit(vec![Factor::new(Kind::Ricci, 0, vec![0, 1, 2])]);
        assert!(matches!(c.validate(), Err(TermError::Arity { found: 3, .. })));
    }

    #[test]
    fn validate_rejects_triple_label() {
        let c = Contraction::unit(vec![Factor::riemann(0, 0, 0, 1), Factor::schouten(1, 2)]);
        assert!(matches!(
            c.validate(),
            Err(TermError::Matching { label: 0, count: 3, .. })
        ));
    }

    #[test]
    fn validate_rejects_free_index_in_complete() {
        let c = Contraction::unit(vec![Factor::schouten(0, 1)]);
        assert!(c.validate().is_ok());
        assert!(matches!(
            c.validate_complete(),
            Err(TermError::FreeIndex { .. })
        ));
    }

    #[test]
    fn combination_rejects_mixed_weight() {
        let a = rr_full();
        let b = Contraction::unit(vec![Factor::scalar()]);
        assert!(matches!(
            LinearCombination::new(vec![a, b]),
            Err(TermError::Weight { .. })
        ));
    }

    #[test]
    fn variance_alternates_within_pair() {
        let c = rr_full();
        let first = IndexSlot {
            factor: 0,
            position: 0,
        };
        let second = IndexSlot {
            factor: 1,
            position: 0,
        };
        assert_eq!(c.variance(first), Variance::Lower);
        assert_eq!(c.variance(second), Variance::Upper);
        assert_eq!(c.pairing().len(), 4);
        assert_eq!(c.scaled(&int(2)).coeff, int(2));
    }
}
