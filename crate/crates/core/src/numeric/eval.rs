//! Evaluation of contractions at a point from orthonormal-frame components.

use std::collections::HashMap;
use std::rc::Rc;

use super::jet::{Geometry, MetricJet};
use crate::rational::to_f64;
use crate::term::{Contraction, Factor, Kind, Label, LinearCombination};

/// Highest curvature derivative order and φ-derivative order in `lc`.
pub fn requirements(lc: &LinearCombination) -> (usize, usize) {
    let mut max_r = 0;
    let mut max_phi = 0;
    for f in lc.terms.iter().flat_map(|t| &t.factors) {
        if f.kind.is_curvature() {
            max_r = max_r.max(f.order as usize);
        } else if f.kind.is_phi() {
            max_phi = max_phi.max(f.order as usize);
        }
    }
    (max_r, max_phi)
}

/// Jet order needed to evaluate `lc`.
pub fn jet_order(lc: &LinearCombination) -> usize {
    let (r, p) = requirements(lc);
    (r + 2).max(p)
}

/// A dense tensor whose slots carry index labels.
#[derive(Clone, Debug)]
struct Labeled {
    labels: Vec<Label>,
    data: Rc<Vec<f64>>,
}

fn strides(rank: usize, n: usize) -> Vec<usize> {
    (0..rank).map(|s| n.pow((rank - 1 - s) as u32)).collect()
}

/// All offsets `Σ digit_s * stride_s` over the digit grid, for two stride sets at once.
fn offset_grid(n: usize, sa: &[usize], sb: &[usize]) -> Vec<(usize, usize)> {
    let mut out = vec![(0usize, 0usize)];
    for (a, b) in sa.iter().zip(sb) {
        let mut next = Vec::with_capacity(out.len() * n);
        for &(oa, ob) in &out {
            for d in 0..n {
                next.push((oa + d * a, ob + d * b));
            }
        }
        out = next;
    }
    out
}

/// Sums over labels repeated within one tensor.
fn trace_internal(t: Labeled, n: usize) -> Labeled {
    let st = strides(t.labels.len(), n);
    let mut keep = Vec::new();
    let mut keep_strides = Vec::new();
    let mut traced = Vec::new();
    for (p, l) in t.labels.iter().enumerate() {
        match t.labels.iter().position(|x| x == l).expect("label present") {
            q if q < p => traced.push(st[q] + st[p]),
            _ if t.labels[p + 1..].contains(l) => {}
            _ => {
                keep.push(*l);
                keep_strides.push(st[p]);
            }
        }
    }
    if traced.is_empty() {
        return t;
    }
    let zeros = vec![0; traced.len()];
    let inner = offset_grid(n, &traced, &zeros);
    let outer = offset_grid(n, &keep_strides, &vec![0; keep_strides.len()]);
    let data = outer
        .iter()
        .map(|&(base, _)| inner.iter().map(|&(o, _)| t.data[base + o]).sum())
        .collect();
    Labeled {
        labels: keep,
        data: Rc::new(data),
    }
}

fn contract(a: &Labeled, b: &Labeled, n: usize) -> Labeled {
    let sa = strides(a.labels.len(), n);
    let sb = strides(b.labels.len(), n);
    let mut result = Vec::new();
    let mut res_a = Vec::new();
    let mut res_b = Vec::new();
    let mut sh_a = Vec::new();
    let mut sh_b = Vec::new();
    for (p, l) in a.labels.iter().enumerate() {
        match b.labels.iter().position(|x| x == l) {
            Some(q) => {
                sh_a.push(sa[p]);
                sh_b.push(sb[q]);
            }
            None => {
                result.push(*l);
                res_a.push(sa[p]);
                res_b.push(0);
            }
        }
    }
    for (q, l) in b.labels.iter().enumerate() {
        if !a.labels.contains(l) {
            result.push(*l);
            res_a.push(0);
            res_b.push(sb[q]);
        }
    }
    let inner = offset_grid(n, &sh_a, &sh_b);
    let outer = offset_grid(n, &res_a, &res_b);
    let data = outer
        .iter()
        .map(|&(ba, bb)| {
            inner
                .iter()
                .map(|&(oa, ob)| a.data[ba + oa] * b.data[bb + ob])
                .sum()
        })
        .collect();
    Labeled {
        labels: result,
        data: Rc::new(data),
    }
}

/// Frame components of factor tensors, computed once per kind and order.
pub struct Evaluator<'a> {
    geo: &'a Geometry,
    cache: HashMap<(Kind, u8, u8), Rc<Vec<f64>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(geo: &'a Geometry) -> Self {
        Evaluator {
            geo,
            cache: HashMap::new(),
        }
    }

    fn delta(&self) -> Vec<f64> {
        let n = self.geo.n;
        (0..n * n)
            .map(|i| if i / n == i % n { 1.0 } else { 0.0 })
            .collect()
    }

    fn ricci(&mut self, m: u8) -> Rc<Vec<f64>> {
        self.tensor(Kind::Ricci, m, 0)
    }

    pub fn tensor(&mut self, kind: Kind, m: u8, flavor: u8) -> Rc<Vec<f64>> {
        if let Some(t) = self.cache.get(&(kind, m, flavor)) {
            return t.clone();
        }
        let n = self.geo.n;
        let outer = n.pow(m as u32);
        let data: Vec<f64> = match kind {
            Kind::Riemann => self.geo.curvature[m as usize].clone(),
            Kind::Ricci => {
                let r = &self.geo.curvature[m as usize];
                let mut out = vec![0.0; outer * n * n];
                for d in 0..outer {
                    for j in 0..n {
                        for k in 0..n {
                            out[(d * n + j) * n + k] = (0..n)
                                .map(|i| r[(((d * n + i) * n + j) * n + k) * n + i])
                                .sum();
                        }
                    }
                }
                out
            }
            Kind::ScalarCurv => {
                let ric = self.ricci(m);
                (0..outer)
                    .map(|d| (0..n).map(|j| ric[(d * n + j) * n + j]).sum())
                    .collect()
            }
            Kind::Schouten => {
                let ric = self.ricci(m);
                let scal = self.tensor(Kind::ScalarCurv, m, 0);
                let nf = n as f64;
                let mut out = vec![0.0; outer * n * n];
                for d in 0..outer {
                    for j in 0..n {
                        for k in 0..n {
                            let trace = if j == k { scal[d] / (2.0 * (nf - 1.0)) } else { 0.0 };
                            out[(d * n + j) * n + k] = (ric[(d * n + j) * n + k] - trace) / (nf - 2.0);
                        }
                    }
                }
                out
            }
            Kind::Weyl => {
                let r = self.geo.curvature[m as usize].clone();
                let p = self.tensor(Kind::Schouten, m, 0);
                let d_ = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                let mut out = r;
                for d in 0..outer {
                    let pp = |a: usize, b: usize| p[(d * n + a) * n + b];
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                for l in 0..n {
                                    let wedge = pp(j, k) * d_(i, l) + pp(i, l) * d_(j, k)
                                        - pp(j, l) * d_(i, k)
                                        - pp(i, k) * d_(j, l);
                                    out[(((d * n + i) * n + j) * n + k) * n + l] -= wedge;
                                }
                            }
                        }
                    }
                }
                out
            }
            Kind::Phi => self.geo.phi[flavor as usize][m as usize].clone(),
            Kind::SymPhi => {
                let raw = self.tensor(Kind::Phi, m, flavor);
                let rank = m as usize;
                let mut out = vec![0.0; raw.len()];
                for (pos, o) in out.iter_mut().enumerate() {
                    let mut digits: Vec<usize> = (0..rank)
                        .map(|s| (pos / n.pow((rank - 1 - s) as u32)) % n)
                        .collect();
                    digits.sort_unstable();
                    let mut total = 0.0;
                    let mut count = 0.0;
                    loop {
                        let idx = digits.iter().fold(0, |acc, &x| acc * n + x);
                        total += raw[idx];
                        count += 1.0;
                        if !next_permutation(&mut digits) {
                            break;
                        }
                    }
                    *o = total / count;
                }
                out
            }
            Kind::Metric | Kind::InverseMetric => self.delta(),
        };
        let data = Rc::new(data);
        self.cache.insert((kind, m, flavor), data.clone());
        data
    }

    fn labeled(&mut self, f: &Factor) -> Labeled {
        Labeled {
            labels: f.indices.clone(),
            data: self.tensor(f.kind, f.order, f.flavor),
        }
    }

    /// Value of one term without its coefficient; free labels are returned in
    /// ascending label order.
    fn product(&mut self, c: &Contraction) -> Labeled {
        let n = self.geo.n;
        let mut pending: Vec<Labeled> = c
            .factors
            .iter()
            .map(|f| trace_internal(self.labeled(f), n))
            .collect();
        let mut current = match pending.is_empty() {
            true => Labeled {
                labels: vec![],
                data: Rc::new(vec![1.0]),
            },
            false => pending.remove(0),
        };
        while !pending.is_empty() {
            // Pick the factor leaving the fewest open slots.
            let best = (0..pending.len())
                .min_by_key(|&p| {
                    let shared = pending[p]
                        .labels
                        .iter()
                        .filter(|l| current.labels.contains(l))
                        .count();
                    current.labels.len() + pending[p].labels.len() - 2 * shared
                })
                .expect("pending factors");
            let next = pending.remove(best);
            current = contract(&current, &next, n);
        }
        // Sort free labels ascending.
        let mut order: Vec<usize> = (0..current.labels.len()).collect();
        order.sort_by_key(|&p| current.labels[p]);
        if order.windows(2).all(|w| w[0] < w[1]) {
            return current;
        }
        let st = strides(current.labels.len(), n);
        let perm_strides: Vec<usize> = order.iter().map(|&p| st[p]).collect();
        let grid = offset_grid(n, &perm_strides, &vec![0; perm_strides.len()]);
        Labeled {
            labels: order.iter().map(|&p| current.labels[p]).collect(),
            data: Rc::new(grid.iter().map(|&(o, _)| current.data[o]).collect()),
        }
    }

    pub fn term(&mut self, c: &Contraction) -> f64 {
        let t = self.product(c);
        assert!(t.labels.is_empty(), "term has free indices");
        to_f64(&c.coeff) * t.data[0]
    }

    pub fn combination(&mut self, lc: &LinearCombination) -> f64 {
        lc.terms.iter().map(|t| self.term(t)).sum()
    }

    /// Components of a combination with free indices, slots in ascending
    /// label order.
    pub fn tensor_value(&mut self, lc: &LinearCombination) -> Vec<f64> {
        let mut total: Option<Vec<f64>> = None;
        for t in &lc.terms {
            let c = to_f64(&t.coeff);
            let v = self.product(t);
            match total.as_mut() {
                None => total = Some(v.data.iter().map(|x| c * x).collect()),
                Some(acc) => {
                    for (a, x) in acc.iter_mut().zip(v.data.iter()) {
                        *a += c * x;
                    }
                }
            }
        }
        total.unwrap_or_default()
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Value of a combination of complete contractions at the origin of `jet`.
pub fn evaluate(lc: &LinearCombination, jet: &MetricJet) -> f64 {
    let (r, p) = requirements(lc);
    let geo = jet.geometry(r, p);
    Evaluator::new(&geo).combination(lc)
}

/// Values of the individual terms (coefficients included).
pub fn term_values(lc: &LinearCombination, jet: &MetricJet) -> Vec<f64> {
    let (r, p) = requirements(lc);
    let geo = jet.geometry(r, p);
    let mut ev = Evaluator::new(&geo);
    lc.terms.iter().map(|t| ev.term(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_sphere_invariants() {
        let n = 4;
        let jet = MetricJet::constant_curvature(n, 2, 1.0);
        let nf = n as f64;
        let cases = [
            ("Scal", nf * (nf - 1.0)),
            ("R[i,j,k,l]*R[i,j,k,l]", 2.0 * nf * (nf - 1.0)),
            ("Ric[a,b]*Ric[a,b]", nf * (nf - 1.0) * (nf - 1.0)),
            ("P[a,a]", nf / 2.0),
            ("W[i,j,k,l]*W[i,j,k,l]", 0.0),
        ];
        for (text, expected) in cases {
            let v = evaluate(&parse(text).unwrap(), &jet);
            assert!((v - expected).abs() < 1e-10, "{text}: {v}");
        }
    }

    #[test]
    fn symmetrized_phi_matches_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let jet = MetricJet::random(3, 3, 0.2, 1, &mut rng);
        let sym = evaluate(&parse("Sphi[a,b,c]*phi[a]*phi[b,c]").unwrap(), &jet);
        let avg = evaluate(
            &parse("1/6*phi[a,b,c]*phi[a]*phi[b,c] + 1/6*phi[a,c,b]*phi[a]*phi[b,c] + 1/6*phi[b,a,c]*phi[a]*phi[b,c] + 1/6*phi[b,c,a]*phi[a]*phi[b,c] + 1/6*phi[c,a,b]*phi[a]*phi[b,c] + 1/6*phi[c,b,a]*phi[a]*phi[b,c]").unwrap(),
            &jet,
        );
        assert!((sym - avg).abs() < 1e-12);
    }

    #[test]
    fn metric_trace_is_dimension() {
        let jet = MetricJet::euclidean(5, 2);
        assert!((evaluate(&parse("g[a,a]").unwrap(), &jet) - 5.0).abs() < 1e-15);
    }
}
