//! Weyl/Schouten contraction bases, the kernel of integrated conformal
//! invariance over such a basis, and the reconstruction of the Schouten part
//! of the Pfaffian from that kernel.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::{canonical, coefficients, reduce, CanonicalKey};
use crate::io::print_term;
use crate::numeric::{random_jets, torus_integrals, TorusFunction, TorusMetric};
use crate::rational::{approximate, serde_text, to_f64, to_text, Rational};
use crate::relations::RelationSpace;
use crate::rules::{pfaffian_split, RuleError};
use crate::term::{Contraction, Factor, Label, LinearCombination};

/// Default bound on the number of pairing patterns examined.
pub const DEFAULT_BUDGET: u64 = 100_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error("dimension {n} must be even and at least 4")]
    Dimension { n: usize },
    #[error("enumeration in dimension {n} needs about {estimate} pairing patterns, over the budget of {budget}")]
    Budget { n: usize, estimate: u64, budget: u64 },
    #[error("the basis is empty")]
    EmptyBasis,
    #[error("kernel has dimension {found}, reconstruction needs dimension 1")]
    KernelDimension { found: usize },
    #[error("kernel vector could not be rationalized (component {value})")]
    Rationalization { value: f64 },
    #[error("kernel vector has no (P^a_a)^k component")]
    MissingTracePower,
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// One element `contr(W^A ⊗ P^B)` of the basis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisEntry {
    pub weyl: usize,
    pub schouten: usize,
    pub term: Contraction,
    pub key: CanonicalKey,
    pub text: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantBasis {
    pub n: usize,
    pub b_min: usize,
    pub entries: Vec<BasisEntry>,
    /// Pairing patterns examined.
    pub patterns: u64,
    /// Distinct nonzero canonical terms before the relation quotient.
    pub canonical_terms: usize,
    /// Canonical terms dependent on earlier ones modulo the relations.
    pub dependent: Vec<String>,
    /// Terms that survived the relations but vanish or depend on others
    /// numerically; a nonempty list means the relation generators missed
    /// an identity.
    pub numerically_dependent: Vec<String>,
    pub relation_rank: usize,
    pub relation_closure_complete: bool,
}

impl InvariantBasis {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The combination `Σ c_i entry_i`.
    pub fn combination(&self, coeffs: &[Rational]) -> LinearCombination {
        LinearCombination::from_terms(
            self.entries
                .iter()
                .zip(coeffs)
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| e.term.scaled(c))
                .collect(),
        )
    }

    /// Each entry multiplied by `c` (coefficients of kernels scale by `1/c`).
    pub fn scaled(&self, c: &Rational) -> InvariantBasis {
        let mut out = self.clone();
        for e in out.entries.iter_mut() {
            e.term = e.term.scaled(c);
        }
        out
    }

    fn as_combinations(&self) -> Vec<LinearCombination> {
        self.entries
            .iter()
            .map(|e| LinearCombination::single(e.term.clone()))
            .collect()
    }

    /// Position of `(P^a_a)^{n/2}` in the basis.
    pub fn trace_power_index(&self) -> Option<usize> {
        let target = canonical(&trace_power(self.n / 2))?.key;
        self.entries.iter().position(|e| e.key == target)
    }
}

/// `(P^a_a)^k` as a unit term.
pub fn trace_power(k: usize) -> Contraction {
    Contraction::unit((0..k as Label).map(|i| Factor::schouten(i, i)).collect())
}

/// `(2m - 1)!!`, the number of perfect matchings of `2m` slots.
fn matchings_count(slots: usize) -> u64 {
    (1..slots as u64).step_by(2).product::<u64>().max(1)
}

/// Number of pairing patterns `enumerate_basis` would examine.
pub fn enumeration_estimate(n: usize, b_min: usize) -> u64 {
    let half = n / 2;
    (b_min..=half)
        .map(|b| matchings_count(4 * (half - b) + 2 * b))
        .sum()
}

/// All perfect matchings of `0..slots`, as label assignments.
fn matchings(slots: usize) -> Vec<Vec<Label>> {
    fn rec(labels: &mut Vec<Option<Label>>, next: Label, out: &mut Vec<Vec<Label>>) {
        let Some(first) = labels.iter().position(Option::is_none) else {
            out.push(labels.iter().map(|l| l.expect("assigned")).collect());
            return;
        };
        labels[first] = Some(next);
        for second in first + 1..labels.len() {
            if labels[second].is_none() {
                labels[second] = Some(next);
                rec(labels, next + 1, out);
                labels[second] = None;
            }
        }
        labels[first] = None;
    }
    let mut out = Vec::new();
    rec(&mut vec![None; slots], 0, &mut out);
    out
}

/// Enumerates the complete contractions `W^A ⊗ P^B` with `A + B = n/2` and
/// `B >= b_min`, modulo symmetries, traces and the relation space, keeping
/// only entries that are numerically independent.
pub fn enumerate_basis(n: usize, b_min: usize) -> Result<InvariantBasis, SolverError> {
    enumerate_basis_with_budget(n, b_min, DEFAULT_BUDGET)
}

pub fn enumerate_basis_with_budget(n: usize, b_min: usize, budget: u64) -> Result<InvariantBasis, SolverError> {
    if n < 4 || n % 2 == 1 {
        return Err(SolverError::Dimension { n });
    }
    let estimate = enumeration_estimate(n, b_min);
    if estimate > budget {
        return Err(SolverError::Budget { n, estimate, budget });
    }
    let half = n / 2;
    let mut seen: BTreeMap<CanonicalKey, (usize, usize, Contraction)> = BTreeMap::new();
    let mut patterns = 0u64;
    for b in b_min..=half {
        let a = half - b;
        let slots = 4 * a + 2 * b;
        for labels in matchings(slots) {
            patterns += 1;
            let mut factors = Vec::with_capacity(a + b);
            let mut rest = &labels[..];
            for _ in 0..a {
                factors.push(Factor::weyl(rest[0], rest[1], rest[2], rest[3]));
                rest = &rest[4..];
            }
            for _ in 0..b {
                factors.push(Factor::schouten(rest[0], rest[1]));
                rest = &rest[2..];
            }
            let lc = reduce(&LinearCombination::single(Contraction::unit(factors)), n);
            if lc.len() != 1 {
                continue;
            }
            let term = &lc.terms[0];
            let canon = canonical(term).expect("reduced term is nonzero");
            let mut unit = canon.term.clone();
            unit.coeff = Rational::one();
            seen.entry(canon.key).or_insert((a, b, unit));
        }
    }
    let canonical_terms = seen.len();
    let candidates: Vec<(CanonicalKey, (usize, usize, Contraction))> = seen.into_iter().collect();
    let terms: Vec<Contraction> = candidates.iter().map(|(_, (_, _, t))| t.clone()).collect();

    let mut rel = RelationSpace::new(n);
    let kept = rel.independent_subset(&terms);
    let dependent = (0..terms.len())
        .filter(|i| !kept.contains(i))
        .map(|i| print_term(&terms[i]))
        .collect();

    // Numeric independence at random jets.
    let samples = kept.len() + 6;
    let jets = random_jets(n, 2, samples, 0, 0x5eed ^ n as u64);
    let lcs: Vec<LinearCombination> = kept
        .iter()
        .map(|&i| LinearCombination::single(terms[i].clone()))
        .collect();
    let columns: Vec<Vec<f64>> = lcs
        .iter()
        .map(|lc| jets.iter().map(|j| crate::numeric::evaluate(lc, j)).collect())
        .collect();
    let mut independent: Vec<usize> = Vec::new();
    let mut numerically_dependent = Vec::new();
    for pos in 0..columns.len() {
        let mut trial = independent.clone();
        trial.push(pos);
        if numeric_rank(&columns, &trial, samples) == trial.len() {
            independent = trial;
        } else {
            numerically_dependent.push(print_term(&terms[kept[pos]]));
        }
    }

    let entries = independent
        .into_iter()
        .map(|pos| {
            let (key, (a, b, t)) = &candidates[kept[pos]];
            BasisEntry {
                weyl: *a,
                schouten: *b,
                term: t.clone(),
                key: key.clone(),
                text: print_term(t),
            }
        })
        .collect();
    Ok(InvariantBasis {
        n,
        b_min,
        entries,
        patterns,
        canonical_terms,
        dependent,
        numerically_dependent,
        relation_rank: rel.rank(),
        relation_closure_complete: rel.complete,
    })
}

/// Rank of the selected columns after normalizing each to unit length.
fn numeric_rank(columns: &[Vec<f64>], selected: &[usize], rows: usize) -> usize {
    let m = DMatrix::from_fn(rows, selected.len(), |r, c| {
        let col = &columns[selected[c]];
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            0.0
        } else {
            col[r] / norm
        }
    });
    let sv = m.singular_values();
    sv.iter().filter(|&&s| s > 1e-9).count()
}

/// Parameters of the randomized invariance test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub seed: u64,
    pub grid: usize,
    /// Coordinates the metric and φ depend on.
    pub active: usize,
    pub eps: f64,
    pub max_freq: i32,
    pub metric_modes: usize,
    pub phi_modes: usize,
    pub phi_amplitude: f64,
    /// Number of constraint rows; 0 means three per basis entry.
    pub trials: usize,
    /// Out-of-sample pairs used to verify the kernel.
    pub fresh: usize,
    /// Relative singular value below which a direction counts as null.
    pub rank_tol: f64,
    /// Bound on the invariance residual of verified kernel vectors.
    pub verify_tol: f64,
    /// Residual a non-kernel direction must exceed on some sample.
    pub discriminate_tol: f64,
    pub max_denominator: i64,
}

impl SampleConfig {
    pub fn for_dimension(n: usize) -> SampleConfig {
        SampleConfig {
            seed: 1,
            grid: if n <= 4 { 12 } else { 10 },
            active: n.min(4),
            eps: 0.2,
            max_freq: 1,
            metric_modes: 3,
            phi_modes: 2,
            phi_amplitude: 0.3,
            trials: 0,
            fresh: 10,
            rank_tol: 1e-7,
            verify_tol: 1e-6,
            discriminate_tol: 1e-3,
            max_denominator: 10_000,
        }
    }
}

/// A (metric, φ) pair drawn from a seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sample {
    pub seed: u64,
    pub metric: TorusMetric,
    pub phi: TorusFunction,
}

impl Sample {
    pub fn draw(n: usize, config: &SampleConfig, seed: u64) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let metric = TorusMetric::random(n, config.active, config.max_freq, config.metric_modes, config.eps, &mut rng);
        let amplitude = config.phi_amplitude * rng.gen_range(0.5..1.0);
        let phi = TorusFunction::random(config.active, config.max_freq, config.phi_modes, amplitude, &mut rng);
        Sample { seed, metric, phi }
    }
}

/// Integrals of every basis entry over `g` and over `e^{2φ} g`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleRow {
    pub seed: u64,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    /// Largest fine/coarse grid discrepancy among the integrals.
    pub quadrature_error: f64,
}

impl SampleRow {
    pub fn difference(&self) -> Vec<f64> {
        self.after.iter().zip(&self.before).map(|(a, b)| a - b).collect()
    }

    /// Invariance residual of `Σ c_i entry_i`.
    pub fn residual(&self, coeffs: &[f64]) -> f64 {
        let dot = |v: &[f64]| v.iter().zip(coeffs).map(|(x, c)| x * c).sum::<f64>();
        (dot(&self.after) - dot(&self.before)).abs() / dot(&self.before).abs().max(1.0)
    }
}

pub fn sample_row(exprs: &[LinearCombination], n: usize, config: &SampleConfig, seed: u64) -> SampleRow {
    let sample = Sample::draw(n, config, seed);
    let before = torus_integrals(exprs, &sample.metric, None, config.grid);
    let after = torus_integrals(exprs, &sample.metric, Some(&sample.phi), config.grid);
    let quadrature_error = before
        .iter()
        .chain(&after)
        .map(|r| r.convergence())
        .fold(0.0, f64::max);
    SampleRow {
        seed,
        before: before.iter().map(|r| r.value).collect(),
        after: after.iter().map(|r| r.value).collect(),
        quadrature_error,
    }
}

fn sample_seed(config: &SampleConfig, i: u64) -> u64 {
    config.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelVector {
    #[serde(with = "rational_vec")]
    pub coefficients: Vec<Rational>,
    pub numeric: Vec<f64>,
    /// Largest residual over the fresh samples.
    pub fresh_residual: f64,
    pub verified: bool,
}

mod rational_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(to_text))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| crate::rational::parse_text(t).ok_or_else(|| serde::de::Error::custom(format!("bad rational {t}"))))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelReport {
    pub n: usize,
    pub basis: Vec<String>,
    pub classes: Vec<(usize, usize)>,
    pub config: SampleConfig,
    pub rows: Vec<SampleRow>,
    /// Singular values of the column-normalized constraint matrix, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub dimension: usize,
    /// Ratio of the largest to the smallest retained singular value.
    pub condition: f64,
    /// Ratio of the smallest retained to the largest discarded singular value.
    pub gap: f64,
    pub ill_conditioned: bool,
    pub kernel: Vec<KernelVector>,
    pub fresh_rows: Vec<SampleRow>,
    /// For each basis entry, the largest residual over all samples.
    pub entry_residuals: Vec<f64>,
    /// Every basis direction outside the kernel shows a residual above the
    /// discrimination threshold on some sample.
    pub discriminating: bool,
    pub max_quadrature_error: f64,
}

impl KernelReport {
    pub fn verified(&self) -> bool {
        self.kernel.iter().all(|k| k.verified)
    }
}

/// Reduced row echelon form of the rows of `k` with partial pivoting, in
/// floating point.
fn rref(mut k: Vec<Vec<f64>>, preferred: Option<usize>) -> Vec<Vec<f64>> {
    let rows = k.len();
    if rows == 0 {
        return k;
    }
    let cols = k[0].len();
    let mut order: Vec<usize> = (0..cols).collect();
    if let Some(p) = preferred {
        order.retain(|&c| c != p);
        order.insert(0, p);
    }
    let mut r = 0;
    for &c in &order {
        if r == rows {
            break;
        }
        let (best, value) = (r..rows)
            .map(|i| (i, k[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if value < 1e-8 {
            continue;
        }
        k.swap(r, best);
        let lead = k[r][c];
        for x in k[r].iter_mut() {
            *x /= lead;
        }
        for i in 0..rows {
            if i != r {
                let f = k[i][c];
                if f != 0.0 {
                    let pivot = k[r].clone();
                    for (x, p) in k[i].iter_mut().zip(&pivot) {
                        *x -= f * p;
                    }
                }
            }
        }
        r += 1;
    }
    k
}

/// Samples the integrated invariance defect of every basis entry, extracts
/// the null space, rationalizes it and re-verifies it on fresh samples.
pub fn invariance_kernel(basis: &InvariantBasis, config: &SampleConfig) -> Result<KernelReport, SolverError> {
    if basis.is_empty() {
        return Err(SolverError::EmptyBasis);
    }
    let n = basis.n;
    let exprs = basis.as_combinations();
    let cols = exprs.len();
    let trials = if config.trials == 0 { 3 * cols } else { config.trials.max(cols) };
    let rows: Vec<SampleRow> = (0..trials as u64)
        .map(|i| sample_row(&exprs, n, config, sample_seed(config, i)))
        .collect();

    let raw = DMatrix::from_fn(trials, cols, |r, c| rows[r].after[c] - rows[r].before[c]);
    let norms: Vec<f64> = (0..cols)
        .map(|c| raw.column(c).norm())
        .map(|x| if x > 0.0 { x } else { 1.0 })
        .collect();
    let scaled = DMatrix::from_fn(trials, cols, |r, c| raw[(r, c)] / norms[c]);
    let svd = scaled.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = singular_values[0].max(f64::MIN_POSITIVE);
    let rank = singular_values.iter().filter(|&&s| s > config.rank_tol * top).count();
    let dimension = cols - rank;
    let smallest_kept = if rank > 0 { singular_values[rank - 1] } else { 0.0 };
    let largest_dropped = if rank < cols { singular_values[rank] } else { 0.0 };
    let condition = if smallest_kept > 0.0 { top / smallest_kept } else { f64::INFINITY };
    let gap = if largest_dropped > 0.0 { smallest_kept / largest_dropped } else { f64::INFINITY };

    // Null vectors: right singular vectors of the discarded directions, in
    // original coordinates. There are at least as many rows as columns.
    let null: Vec<Vec<f64>> = order[rank..]
        .iter()
        .map(|&i| (0..cols).map(|c| v_t[(i, c)] / norms[c]).collect())
        .collect();

    let preferred = basis.trace_power_index();
    let reduced = rref(null, preferred);
    let mut kernel = Vec::new();
    let fresh_rows: Vec<SampleRow> = (0..config.fresh as u64)
        .map(|i| sample_row(&exprs, n, config, sample_seed(config, 1_000_000 + i)))
        .collect();
    for v in reduced {
        let coefficients = v
            .iter()
            .map(|&x| {
                if x.abs() < 1e-9 {
                    Some(Rational::zero())
                } else {
                    approximate(x, config.max_denominator)
                }
            })
            .collect::<Option<Vec<Rational>>>()
            .ok_or(SolverError::Rationalization {
                value: v.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            })?;
        let exact: Vec<f64> = coefficients.iter().map(to_f64).collect();
        let fresh_residual = fresh_rows.iter().map(|r| r.residual(&exact)).fold(0.0, f64::max);
        kernel.push(KernelVector {
            verified: fresh_residual < config.verify_tol,
            coefficients,
            numeric: v,
            fresh_residual,
        });
    }

    let all_rows: Vec<&SampleRow> = rows.iter().chain(&fresh_rows).collect();
    let entry_residuals: Vec<f64> = (0..cols)
        .map(|c| {
            let mut e = vec![0.0; cols];
            e[c] = 1.0;
            all_rows.iter().map(|r| r.residual(&e)).fold(0.0, f64::max)
        })
        .collect();
    // A direction outside the kernel: each entry that is not a kernel
    // vector by itself must move on some sample.
    let discriminating = (0..cols).all(|c| {
        let alone_in_kernel = kernel.iter().any(|k| {
            k.coefficients
                .iter()
                .enumerate()
                .all(|(i, x)| (i == c) != x.is_zero())
        });
        alone_in_kernel || entry_residuals[c] > config.discriminate_tol
    });
    let max_quadrature_error = all_rows.iter().map(|r| r.quadrature_error).fold(0.0, f64::max);
    Ok(KernelReport {
        n,
        basis: basis.entries.iter().map(|e| e.text.clone()).collect(),
        classes: basis.entries.iter().map(|e| (e.weyl, e.schouten)).collect(),
        config: config.clone(),
        rows,
        singular_values,
        rank,
        dimension,
        condition,
        gap,
        ill_conditioned: gap < 1e3,
        kernel,
        fresh_rows,
        entry_residuals,
        discriminating,
        max_quadrature_error,
    })
}

/// Result of matching the kernel generator with the Pfaffian.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reconstruction {
    pub n: usize,
    /// Kernel generator, normalized to coefficient 1 on `(P^a_a)^{n/2}`.
    pub invariant: LinearCombination,
    /// `invariant = constant * bar`, where `bar` is the Schouten part of the
    /// Pfaffian.
    #[serde(with = "serde_text")]
    pub constant: Rational,
    pub bar: LinearCombination,
    /// Exact agreement of `invariant` and `constant * bar` modulo relations.
    pub matches: bool,
    pub table: Vec<CoefficientRow>,
    pub kernel: KernelReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub term: String,
    #[serde(with = "serde_text")]
    pub kernel: Rational,
    #[serde(with = "serde_text")]
    pub scaled_bar: Rational,
}

/// Runs the kernel computation on the `B >= 1` basis and compares the
/// generator with the Schouten part of the Pfaffian.
pub fn reconstruct(n: usize, config: &SampleConfig) -> Result<Reconstruction, SolverError> {
    let basis = enumerate_basis(n, 1)?;
    reconstruct_from(&basis, config)
}

pub fn reconstruct_from(basis: &InvariantBasis, config: &SampleConfig) -> Result<Reconstruction, SolverError> {
    let n = basis.n;
    let kernel = invariance_kernel(basis, config)?;
    if kernel.dimension != 1 {
        return Err(SolverError::KernelDimension { found: kernel.dimension });
    }
    let trace_index = basis.trace_power_index().ok_or(SolverError::MissingTracePower)?;
    let coeffs = &kernel.kernel[0].coefficients;
    let lead = coeffs[trace_index].clone();
    if lead.is_zero() {
        return Err(SolverError::MissingTracePower);
    }
    let normalized: Vec<Rational> = coeffs.iter().map(|c| c / &lead).collect();
    let invariant = reduce(&basis.combination(&normalized), n);

    let (_, bar) = pfaffian_split(n)?;
    let bar = reduce(&bar, n);
    let bar_coeffs = coefficients(&bar, n);
    let trace_key = canonical(&trace_power(n / 2)).expect("nonzero").key;
    let bar_lead = bar_coeffs.get(&trace_key).cloned().unwrap_or_else(Rational::zero);
    if bar_lead.is_zero() {
        return Err(SolverError::MissingTracePower);
    }
    let constant = Rational::one() / &bar_lead;
    let scaled_bar = bar.scaled(&constant);

    let mut rel = RelationSpace::new(n);
    let difference = invariant.minus(&scaled_bar);
    let matches = rel.is_zero(&difference);

    let inv_coeffs = coefficients(&invariant, n);
    let scaled_coeffs = coefficients(&scaled_bar, n);
    let mut keys: Vec<&CanonicalKey> = inv_coeffs.keys().chain(scaled_coeffs.keys()).collect();
    keys.sort();
    keys.dedup();
    let terms_by_key: BTreeMap<CanonicalKey, Contraction> = invariant
        .terms
        .iter()
        .chain(&scaled_bar.terms)
        .filter_map(|t| canonical(t).map(|c| (c.key, c.term)))
        .collect();
    let table = keys
        .into_iter()
        .map(|k| {
            let mut t = terms_by_key[k].clone();
            t.coeff = Rational::one();
            CoefficientRow {
                term: print_term(&t),
                kernel: inv_coeffs.get(k).cloned().unwrap_or_else(Rational::zero),
                scaled_bar: scaled_coeffs.get(k).cloned().unwrap_or_else(Rational::zero),
            }
        })
        .collect();
    Ok(Reconstruction {
        n,
        invariant,
        constant,
        bar,
        matches,
        table,
        kernel,
    })
}

/// `2^n π^{n/2} (n/2 - 1)! / (2 (n - 1)!)`, the factor relating the
/// integral of the Pfaffian to the Euler characteristic.
pub fn gauss_bonnet_constant(n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0, "even dimension required");
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    2f64.powi(n as i32) * std::f64::consts::PI.powf(n as f64 / 2.0) * fact(n / 2 - 1) / (2.0 * fact(n - 1))
}

/// Volume of the unit sphere `S^n` for even `n`, from the recursion
/// `|S^n| = 2π |S^{n-2}| / (n - 1)` starting at `|S^0| = 2`.
pub fn sphere_volume(n: usize) -> f64 {
    assert!(n % 2 == 0, "even dimension required");
    (1..=n / 2).fold(2.0, |vol, k| vol * 2.0 * std::f64::consts::PI / (2 * k - 1) as f64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussBonnetReport {
    pub n: usize,
    pub topology: String,
    pub euler_characteristic: i64,
    /// Integral of the Pfaffian.
    pub integral: f64,
    /// `gauss_bonnet_constant(n) * χ`.
    pub expected: f64,
    /// `∫ |Pfaffian| dV`, the scale of the torus test.
    pub scale: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Fine/coarse grid discrepancy of the torus quadrature.
    pub quadrature_error: f64,
}

/// Pointwise Pfaffian of the round unit sphere times its volume, against the
/// constant times `χ(S^n) = 2`; relative error.
pub fn gauss_bonnet_sphere(n: usize, tol: f64) -> Result<GaussBonnetReport, SolverError> {
    let pf = crate::rules::pfaffian(n)?;
    let jet = crate::numeric::MetricJet::constant_curvature(n, 2, 1.0);
    let integral = crate::numeric::evaluate(&pf, &jet) * sphere_volume(n);
    let expected = gauss_bonnet_constant(n) * 2.0;
    let error = (integral - expected).abs() / expected.abs();
    Ok(GaussBonnetReport {
        n,
        topology: "sphere".into(),
        euler_characteristic: 2,
        integral,
        expected,
        scale: expected.abs(),
        error,
        tolerance: tol,
        pass: error < tol,
        quadrature_error: 0.0,
    })
}

/// Integral of the Pfaffian over a perturbed flat torus (`χ = 0`), judged
/// relative to `∫ |Pfaffian| dV`.
pub fn gauss_bonnet_torus(n: usize, metric: &TorusMetric, grid: usize, tol: f64) -> Result<GaussBonnetReport, SolverError> {
    let pf = crate::rules::pfaffian(n)?;
    let report = crate::numeric::torus_integral(&pf, metric, grid);
    let error = report.value.abs() / report.abs_integral.max(f64::MIN_POSITIVE);
    Ok(GaussBonnetReport {
        n,
        topology: "torus".into(),
        euler_characteristic: 0,
        integral: report.value,
        expected: 0.0,
        scale: report.abs_integral,
        error,
        tolerance: tol,
        pass: error < tol,
        quadrature_error: report.convergence(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_counts() {
        assert_eq!(matchings(4).len(), 3);
        assert_eq!(matchings(6).len(), 15);
        assert_eq!(matchings_count(8), 105);
        assert_eq!(enumeration_estimate(4, 1), 3 + 15);
    }

    #[test]
    fn four_dimensional_basis() {
        let basis = enumerate_basis(4, 1).unwrap();
        let texts: Vec<&str> = basis.entries.iter().map(|e| e.text.as_str()).collect();
        assert_eq!(basis.len(), 2, "{texts:?}");
        assert!(basis.trace_power_index().is_some());
        assert!(basis.numerically_dependent.is_empty());
        let with_weyl = enumerate_basis(4, 0).unwrap();
        assert!(with_weyl.entries.iter().any(|e| e.weyl == 2));
    }

    #[test]
    fn budget_refusal() {
        let err = enumerate_basis_with_budget(6, 0, 100).unwrap_err();
        assert!(matches!(err, SolverError::Budget { estimate, .. } if estimate > 100));
        assert!(matches!(enumerate_basis(5, 1), Err(SolverError::Dimension { n: 5 })));
    }

    #[test]
    fn sphere_volumes() {
        use std::f64::consts::PI;
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_volume(4) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!((gauss_bonnet_constant(2) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn rref_prefers_column() {
        let r = rref(vec![vec![2.0, -2.0, 1.0]], Some(1));
        assert_eq!(r[0], vec![-1.0, 1.0, -0.5]);
    }
}
