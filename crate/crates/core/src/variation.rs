//! Conformal variation of scalar invariants and the operations on its
//! homogeneous parts: polarization, first variation, Hessian/Schouten
//! exchange, erasure of gradient factors and census filters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::reduce;
use crate::io::parse;
use crate::numeric::eval::jet_order;
use crate::numeric::{evaluate, MetricJet};
use crate::rational::{int, Rational};
use crate::relations::permutations;
use crate::rules::{conformal_term, phi_degree, RuleError};
use crate::term::{Contraction, Factor, Kind, LinearCombination};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum VariationError {
    #[error("expected weight {expected}, found {}", .found.map_or("mixed weights".to_string(), |w| w.to_string()))]
    Weight { expected: i64, found: Option<i64> },
    #[error("terms have φ-degrees {degrees:?}, expected a single degree")]
    NotHomogeneous { degrees: Vec<usize> },
    #[error("φ-factor of order {order} cannot be exchanged with a Schouten factor")]
    PhiOrder { order: u8 },
    #[error("unsymmetrized φ-factor present")]
    Unsymmetrized,
    #[error("gradient factor of flavor {flavor} is not contracted against a derivative slot")]
    NotDerivativeSlot { flavor: u8 },
    #[error("maximal order must be at least 1")]
    Order,
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// A combination known exactly up to terms of length at least `length_floor`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncated {
    pub lc: LinearCombination,
    pub length_floor: Option<usize>,
}

impl Truncated {
    pub fn exact(lc: LinearCombination) -> Self {
        Truncated { lc, length_floor: None }
    }

    /// Drops the terms of length `>= floor` and records the floor.
    pub fn modulo_length(lc: &LinearCombination, floor: usize) -> Self {
        Truncated {
            lc: lc.filter(|t| t.length() < floor),
            length_floor: Some(floor),
        }
    }

    /// Printed form of the truncation, e.g. `+ O(length >= 3)`.
    pub fn marker(&self) -> Option<String> {
        self.length_floor.map(|l| format!("+ O(length >= {l})"))
    }

    /// Equality of the retained parts after reduction (the floors must agree).
    pub fn equivalent(&self, other: &Truncated, n: usize) -> bool {
        self.length_floor == other.length_floor
            && reduce(&self.lc.minus(&other.lc), n).is_empty()
    }
}

impl fmt::Display for Truncated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::io::print(&self.lc))?;
        if let Some(m) = self.marker() {
            write!(f, " {m}")?;
        }
        Ok(())
    }
}

/// The homogeneous parts `I^Z` of `e^{nφ} P(e^{2φ} g) - P(g)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VariationResult {
    pub n: usize,
    pub base: LinearCombination,
    pub by_order: BTreeMap<usize, LinearCombination>,
}

impl VariationResult {
    pub fn order(&self, z: usize) -> LinearCombination {
        self.by_order.get(&z).cloned().unwrap_or_default()
    }

    /// Largest `Z` with a nonzero part.
    pub fn degree(&self) -> usize {
        self.by_order
            .iter()
            .filter(|(_, lc)| !lc.is_empty())
            .map(|(&z, _)| z)
            .max()
            .unwrap_or(0)
    }
}

/// Bound on the φ-degree of the transformed term.
fn degree_bound(c: &Contraction) -> usize {
    c.factors
        .iter()
        .filter(|f| !f.kind.is_metric())
        .map(|f| f.order as usize + 2)
        .sum()
}

/// φ-degree bound over a combination.
pub fn max_variation_order(lc: &LinearCombination) -> usize {
    lc.terms.iter().map(degree_bound).max().unwrap_or(0)
}

/// Exact parts `I^1 … I^{zmax}` of the conformal variation of `p`, which
/// must have weight `-n`.
pub fn conformal_image(p: &LinearCombination, zmax: usize, n: usize) -> Result<VariationResult, VariationError> {
    if zmax == 0 {
        return Err(VariationError::Order);
    }
    for t in &p.terms {
        if t.weight() != -(n as i64) {
            return Err(VariationError::Weight {
                expected: -(n as i64),
                found: Some(t.weight()),
            });
        }
    }
    let parts: Vec<Vec<Vec<Contraction>>> = p
        .terms
        .par_iter()
        .map(|t| {
            let (prefactor, by_degree) = conformal_term(t, zmax, n, 0)?;
            debug_assert_eq!(prefactor + n as i64, 0);
            Ok(by_degree)
        })
        .collect::<Result<_, RuleError>>()?;
    let by_order = (1..=zmax)
        .into_par_iter()
        .map(|z| {
            let terms: Vec<Contraction> = parts.iter().flat_map(|b| b[z].iter().cloned()).collect();
            (z, reduce(&LinearCombination::from_terms(terms), n))
        })
        .collect();
    Ok(VariationResult {
        n,
        base: p.clone(),
        by_order,
    })
}

/// All parts of the variation (up to the degree bound).
pub fn full_conformal_image(p: &LinearCombination, n: usize) -> Result<VariationResult, VariationError> {
    conformal_image(p, max_variation_order(p).max(1), n)
}

fn homogeneous_degree(lc: &LinearCombination, flavor: u8) -> Result<usize, VariationError> {
    let degrees: BTreeSet<usize> = lc.terms.iter().map(|t| phi_degree(t, flavor)).collect();
    match degrees.len() {
        0 => Ok(0),
        1 => Ok(*degrees.iter().next().expect("one degree")),
        _ => Err(VariationError::NotHomogeneous {
            degrees: degrees.into_iter().collect(),
        }),
    }
}

/// Full polarization in the flavor-0 function: each term of degree `Z` is
/// replaced by the sum over all ways of giving its φ-factors the distinct
/// flavors `1..=Z`. Setting every flavor back to φ multiplies by `Z!`.
pub fn polarize(lc: &LinearCombination, n: usize) -> Result<LinearCombination, VariationError> {
    let z = homogeneous_degree(lc, 0)?;
    let perms = permutations(z);
    let mut out = Vec::with_capacity(lc.len() * perms.len());
    for t in &lc.terms {
        let slots: Vec<usize> = (0..t.factors.len())
            .filter(|&i| t.factors[i].kind.is_phi() && t.factors[i].flavor == 0)
            .collect();
        for (p, _) in &perms {
            let mut c = t.clone();
            for (k, &i) in slots.iter().enumerate() {
                c.factors[i].flavor = p[k] as u8 + 1;
            }
            out.push(c);
        }
    }
    Ok(reduce(&LinearCombination::from_terms(out), n))
}

/// Sets every φ-flavor to the conformal factor.
pub fn diagonal(lc: &LinearCombination, n: usize) -> LinearCombination {
    let terms = lc
        .terms
        .iter()
        .map(|t| {
            let mut c = t.clone();
            for f in c.factors.iter_mut().filter(|f| f.kind.is_phi()) {
                f.flavor = 0;
            }
            c
        })
        .collect();
    reduce(&LinearCombination::from_terms(terms), n)
}

/// First conformal variation `∂_λ|_0 [e^{-wλψ} C(e^{2λψ} g)]` in the
/// function of the given flavor, where `w` is the weight of `C`.
pub fn image1(lc: &LinearCombination, flavor: u8, n: usize) -> Result<LinearCombination, VariationError> {
    let mut terms = Vec::new();
    for t in &lc.terms {
        let base = phi_degree(t, flavor);
        let (_, by_degree) = conformal_term(t, base + 1, n, flavor)?;
        terms.extend(by_degree.into_iter().nth(base + 1).unwrap_or_default());
    }
    Ok(reduce(&LinearCombination::from_terms(terms), n))
}

/// Replaces every second-order φ-factor `∇²_{ab}φ` by `-P_ab`.
pub fn substitute_hessian_to_schouten(lc: &LinearCombination, n: usize) -> Result<LinearCombination, VariationError> {
    let mut terms = Vec::with_capacity(lc.len());
    for t in &lc.terms {
        let mut c = t.clone();
        for f in c.factors.iter_mut().filter(|f| f.kind.is_phi()) {
            if f.order != 2 {
                return Err(VariationError::PhiOrder { order: f.order });
            }
            *f = Factor::schouten(f.indices[0], f.indices[1]);
            c.coeff = -&c.coeff;
        }
        terms.push(c);
    }
    Ok(reduce(&LinearCombination::from_terms(terms), n))
}

/// Replaces every underived Schouten factor `P_ab` by `-∇²_{ab}φ`.
pub fn schouten_to_hessian(lc: &LinearCombination, n: usize) -> LinearCombination {
    let terms = lc
        .terms
        .iter()
        .map(|t| {
            let mut c = t.clone();
            for f in c.factors.iter_mut() {
                if f.kind == Kind::Schouten && f.order == 0 {
                    *f = Factor::phi(0, f.indices.clone());
                    c.coeff = -&c.coeff;
                }
            }
            c
        })
        .collect();
    reduce(&LinearCombination::from_terms(terms), n)
}

/// Removes the gradient factors `∇φ_h` with `h` in `flavors`, together with
/// the derivative slot each one is contracted against.
pub fn erase_phi(c: &Contraction, flavors: &BTreeSet<u8>) -> Result<Contraction, VariationError> {
    let mut out = c.clone();
    loop {
        let Some(i) = out
            .factors
            .iter()
            .position(|f| f.kind.is_phi() && f.order == 1 && flavors.contains(&f.flavor))
        else {
            return Ok(out);
        };
        let flavor = out.factors[i].flavor;
        let label = out.factors[i].indices[0];
        let partner = out
            .factors
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .find_map(|(j, f)| f.indices.iter().position(|&x| x == label).map(|p| (j, p)));
        let Some((j, p)) = partner else {
            return Err(VariationError::NotDerivativeSlot { flavor });
        };
        let target = &mut out.factors[j];
        if p >= target.deriv_slots() {
            return Err(VariationError::NotDerivativeSlot { flavor });
        }
        target.indices.remove(p);
        target.order -= 1;
        if target.kind == Kind::SymPhi && target.order < 2 {
            target.kind = Kind::Phi;
        }
        out.factors.remove(i);
    }
}

/// Terms whose φ-orders, in non-increasing order, equal `r`. All φ-factors
/// must be in symmetrized form.
pub fn filter_by_rearrangement(lc: &LinearCombination, r: &[u8]) -> Result<LinearCombination, VariationError> {
    if lc
        .terms
        .iter()
        .flat_map(|t| &t.factors)
        .any(|f| f.kind == Kind::Phi && f.order >= 2)
    {
        return Err(VariationError::Unsymmetrized);
    }
    Ok(lc.filter(|t| t.census().phi_orders == r))
}

/// The distinct φ-order rearrangements occurring in `lc`.
pub fn rearrangement_classes(lc: &LinearCombination) -> BTreeSet<Vec<u8>> {
    lc.terms.iter().map(|t| t.census().phi_orders).collect()
}

/// True when a term contains a contraction inside one factor, counting
/// Ricci, scalar and Schouten factors as traces of curvature.
pub fn has_internal_contraction(t: &Contraction) -> bool {
    t.internal_contractions() > 0
        || t
            .factors
            .iter()
            .any(|f| matches!(f.kind, Kind::Ricci | Kind::ScalarCurv | Kind::Schouten))
}

/// Terms of length `l` without internal contractions, modulo length `>= l + 1`.
pub fn filter_no_internal(lc: &LinearCombination, l: usize) -> Truncated {
    Truncated {
        lc: lc.filter(|t| t.length() == l && !has_internal_contraction(t)),
        length_floor: Some(l + 1),
    }
}

/// `Q = (1/12)(-ΔScal + ¼ Scal² - |E|²)` in dimension four, with `E` the
/// trace-free Ricci tensor.
pub fn q_curvature_4() -> LinearCombination {
    parse("-1/12*D[a,a](Scal) + 1/24*Scal*Scal - 1/12*Ric[a,b]*Ric[a,b]").expect("valid expression")
}

/// `(P^a_a)^k`.
pub fn schouten_trace_power(k: usize) -> LinearCombination {
    let factors = (0..k as u32).map(|i| Factor::schouten(2 * i, 2 * i)).collect();
    LinearCombination::single(Contraction::new(Rational::one(), factors))
}

/// Value of `e^{nεφ} P(e^{2εφ} g) - P(g)` at a jet carrying φ as flavor 0.
pub fn exact_variation(p: &LinearCombination, jet: &MetricJet, eps: f64, n: usize) -> f64 {
    let phi0 = jet.phis[0].value();
    let moved = jet.conformal(eps);
    (n as f64 * eps * phi0).exp() * evaluate(p, &moved) - evaluate(p, jet)
}

/// Values of `I^1(φ), …, I^{degree}(φ)` at a jet.
pub fn part_values(result: &VariationResult, jet: &MetricJet) -> Vec<f64> {
    (1..=result.degree()).map(|z| evaluate(&result.order(z), jet)).collect()
}

/// Order-by-order comparison of the symbolic expansion with direct
/// evaluation at two metrics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderCheck {
    /// Largest relative mismatch of a Taylor coefficient in `ε`.
    pub coefficient_error: f64,
    /// Fitted log-log slopes of the truncated remainders, by truncation order.
    pub slopes: Vec<(usize, f64)>,
}

/// Solves the Vandermonde system for the coefficients of a polynomial of
/// degree `< nodes.len()` through the samples.
fn interpolate(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    let k = nodes.len();
    let m = nalgebra::DMatrix::from_fn(k, k, |i, j| nodes[i].powi(j as i32));
    let v = nalgebra::DVector::from_column_slice(values);
    let sol = m.lu().solve(&v).expect("distinct nodes");
    sol.iter().copied().collect()
}

/// Checks the expansion against direct evaluation: the Taylor coefficients
/// of `ε ↦ e^{nεφ}P(e^{2εφ}g) - P(g)` recovered by interpolation against
/// `I^Z(φ)`, and the decay rate of the remainder after each truncation.
pub fn order_check(result: &VariationResult, jets: &[MetricJet]) -> OrderCheck {
    let n = result.n;
    let degree = result.degree();
    let mut coefficient_error: f64 = 0.0;
    let mut slope_min: BTreeMap<usize, f64> = BTreeMap::new();
    for jet in jets {
        let parts = part_values(result, jet);
        let scale = parts.iter().fold(1e-300_f64, |m, x| m.max(x.abs()));
        // Polynomial of degree `degree` in ε: interpolate at degree + 1 nodes
        // besides ε = 0.
        let nodes: Vec<f64> = (1..=degree + 1)
            .map(|k| 0.5 * (k as f64 * std::f64::consts::PI / (degree as f64 + 2.0)).cos())
            .collect();
        let samples: Vec<f64> = nodes
            .iter()
            .map(|&e| exact_variation(&result.base, jet, e, n))
            .collect();
        let coeffs = interpolate(&nodes, &samples);
        for (z, c) in coeffs.iter().enumerate() {
            let expected = if z == 0 { 0.0 } else { parts[z - 1] };
            coefficient_error = coefficient_error.max((c - expected).abs() / scale);
        }
        for zmax in 1..degree {
            let remainder = |e: f64| {
                let predicted: f64 = (1..=zmax).map(|z| e.powi(z as i32) * parts[z - 1]).sum();
                (exact_variation(&result.base, jet, e, n) - predicted).abs()
            };
            let (e1, e2) = (0.02, 0.01);
            let slope = (remainder(e1) / remainder(e2)).ln() / (e1 / e2).ln();
            let entry = slope_min.entry(zmax).or_insert(f64::INFINITY);
            if slope.is_finite() {
                *entry = entry.min(slope);
            }
        }
    }
    OrderCheck {
        coefficient_error,
        slopes: slope_min.into_iter().collect(),
    }
}

/// Jet order sufficient for [`order_check`].
pub fn order_check_jet_order(result: &VariationResult) -> usize {
    let mut order = jet_order(&result.base);
    for lc in result.by_order.values() {
        order = order.max(jet_order(lc));
    }
    order
}

/// Sum of the parts with coefficient `ε^Z`, as a single combination with
/// rational weights; used to express truncated expansions.
pub fn scaled_sum(result: &VariationResult, eps: &Rational) -> LinearCombination {
    let mut out = LinearCombination::zero();
    let mut power = Rational::one();
    for z in 1..=result.degree() {
        power *= eps;
        out.extend(result.order(z).scaled(&power));
    }
    reduce(&out, result.n)
}

/// `k!` as a rational.
pub fn factorial(k: usize) -> Rational {
    (1..=k as i64).fold(Rational::one(), |acc, i| acc * int(i))
}

impl Default for Truncated {
    fn default() -> Self {
        Truncated::exact(LinearCombination::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::print;
    use crate::numeric::random_jets;

    #[test]
    fn weyl_square_has_no_variation() {
        let p = parse("W[a,b,c,d]*W[a,b,c,d]").unwrap();
        let result = full_conformal_image(&p, 4).unwrap();
        assert!(result.by_order.values().all(|lc| lc.is_empty()));
    }

    #[test]
    fn weight_is_checked() {
        let p = parse("Scal").unwrap();
        assert!(matches!(conformal_image(&p, 2, 4), Err(VariationError::Weight { .. })));
    }

    #[test]
    fn schouten_power_top_part() {
        for n in [4usize, 6] {
            let k = n / 2;
            let result = conformal_image(&schouten_trace_power(k), k, n).unwrap();
            let top = Truncated::modulo_length(&result.order(k), k + 1);
            let expected = schouten_to_hessian(&schouten_trace_power(k), n);
            assert!(top.equivalent(&Truncated::modulo_length(&expected, k + 1), n), "{top}");
        }
    }

    #[test]
    fn polarized_laplacian_square() {
        let lc = parse("phi[a,a]*phi[b,b]").unwrap();
        let pol = polarize(&lc, 4).unwrap();
        assert_eq!(print(&pol), "2 * phi_1[i,i]*phi_2[j,j]");
        let back = diagonal(&pol, 4);
        assert_eq!(back, reduce(&lc.scaled(&int(2)), 4));
    }

    #[test]
    fn hessian_schouten_round_trip() {
        let lc = parse("W[a,b,c,d]*P[a,c]*P[b,d]").unwrap();
        let h = schouten_to_hessian(&lc, 4);
        assert!(h.terms[0].factors.iter().filter(|f| f.kind == Kind::Phi).count() == 2);
        assert_eq!(substitute_hessian_to_schouten(&h, 4).unwrap(), reduce(&lc, 4));
        let bad = parse("phi[a]*phi[a]").unwrap();
        assert!(substitute_hessian_to_schouten(&bad, 4).is_err());
    }

    #[test]
    fn erasing_gradients() {
        let c = parse("D[a](R[b,c,d,e])*phi_1[a]*R[b,c,d,e]").unwrap().terms[0].clone();
        let erased = erase_phi(&c, &[1].into_iter().collect()).unwrap();
        assert_eq!(erased.weight(), c.weight() + 2);
        assert_eq!(erased.length(), c.length() - 1);
        assert_eq!(erase_phi(&c, &BTreeSet::new()).unwrap(), c);
        let bad = parse("R[a,b,c,d]*phi_1[a]*phi[b,c,d]").unwrap().terms[0].clone();
        assert!(erase_phi(&bad, &[1].into_iter().collect()).is_err());
    }

    #[test]
    fn scalar_curvature_first_variation() {
        // δ(e^{2λψ}) of Scal with weight compensation: -2(n-1)Δψ.
        for n in [3usize, 4, 6] {
            let v = image1(&parse("Scal").unwrap(), 1, n).unwrap();
            let expected = parse("phi_1[a,a]").unwrap().scaled(&int(-2 * (n as i64 - 1)));
            assert_eq!(v, reduce(&expected, n), "n = {n}");
        }
    }

    #[test]
    fn q_curvature_expansion_matches() {
        let result = full_conformal_image(&q_curvature_4(), 4).unwrap();
        let jets = random_jets(4, order_check_jet_order(&result), 2, 1, 5);
        let check = order_check(&result, &jets);
        assert!(check.coefficient_error < 1e-8, "{check:?}");
        for (z, s) in &check.slopes {
            assert!(*s >= *z as f64 + 0.9, "{check:?}");
        }
    }
}
