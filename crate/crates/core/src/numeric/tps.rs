//! Truncated multivariate Taylor series.
//!
//! Monomials are ordered by total degree, so the coefficients of degree `< j`
//! form a prefix. Multiplication and differentiation use tables built once
//! per [`Space`].

use std::collections::HashMap;
use std::sync::Arc;

/// The monomial basis in `vars` variables up to total degree `order`.
#[derive(Debug)]
pub struct Space {
    pub vars: usize,
    pub order: usize,
    pub monomials: Vec<Vec<u8>>,
    degree_start: Vec<usize>,
    /// Product table sorted by target monomial, so the entries producing
    /// degree `<= d` form the prefix `..mul_end[d]`.
    mul: Vec<(u32, u32, u32)>,
    mul_end: Vec<usize>,
    deriv: Vec<Vec<(u32, u32, f64)>>,
    index: HashMap<Vec<u8>, usize>,
}

fn monomials_of_degree(vars: usize, degree: usize) -> Vec<Vec<u8>> {
    if vars == 0 {
        return if degree == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in monomials_of_degree(vars - 1, degree - first) {
            rest.insert(0, first as u8);
            out.push(rest);
        }
    }
    out
}

impl Space {
    pub fn new(vars: usize, order: usize) -> Arc<Space> {
        let mut monomials = Vec::new();
        let mut degree_start = Vec::new();
        for d in 0..=order {
            degree_start.push(monomials.len());
            monomials.extend(monomials_of_degree(vars, d));
        }
        degree_start.push(monomials.len());
        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let degree = |m: &Vec<u8>| m.iter().map(|&e| e as usize).sum::<usize>();
        let mut mul = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if degree(a) + degree(b) <= order {
                    let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    mul.push((i as u32, j as u32, index[&sum] as u32));
                }
            }
        }
        mul.sort_by_key(|&(_, _, k)| k);
        let mul_end = (0..=order)
            .map(|d| mul.partition_point(|&(_, _, k)| (k as usize) < degree_start[d + 1]))
            .collect();
        let mut deriv = vec![Vec::new(); vars];
        for (v, table) in deriv.iter_mut().enumerate() {
            for (i, m) in monomials.iter().enumerate() {
                if m[v] > 0 {
                    let mut lower = m.clone();
                    lower[v] -= 1;
                    table.push((i as u32, index[&lower] as u32, m[v] as f64));
                }
            }
        }
        Arc::new(Space {
            vars,
            order,
            monomials,
            degree_start,
            mul,
            mul_end,
            deriv,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.index.get(exponents).copied()
    }

    /// Range of coefficient indices of total degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }
}

/// A truncated Taylor series around the origin.
#[derive(Clone, Debug)]
pub struct Series {
    pub space: Arc<Space>,
    pub coeffs: Vec<f64>,
}

impl Series {
    pub fn zero(space: &Arc<Space>) -> Series {
        Series {
            space: space.clone(),
            coeffs: vec![0.0; space.len()],
        }
    }

    pub fn constant(space: &Arc<Space>, c: f64) -> Series {
        let mut s = Series::zero(space);
        s.coeffs[0] = c;
        s
    }

    /// The coordinate function `x_v`.
    pub fn variable(space: &Arc<Space>, v: usize) -> Series {
        let mut s = Series::zero(space);
        if space.order >= 1 {
            let mut e = vec![0u8; space.vars];
            e[v] = 1;
            s.coeffs[space.index_of(&e).expect("linear monomial")] = 1.0;
        }
        s
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn add(&self, other: &Series) -> Series {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Series) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Series) {
        if c == 0.0 {
            return;
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &Series) -> Series {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn scale(&self, c: f64) -> Series {
        Series {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn mul(&self, other: &Series) -> Series {
        let mut out = Series::zero(&self.space);
        self.mul_acc(other, 1.0, &mut out);
        out
    }

    /// `out += c * self * other`.
    pub fn mul_acc(&self, other: &Series, c: f64, out: &mut Series) {
        self.mul_acc_upto(other, c, out, self.space.order);
    }

    /// `out += c * self * other` in the coefficients of degree `<= degree`.
    pub fn mul_acc_upto(&self, other: &Series, c: f64, out: &mut Series, degree: usize) {
        let a = &self.coeffs;
        let b = &other.coeffs;
        let o = &mut out.coeffs;
        let end = self.space.mul_end[degree.min(self.space.order)];
        for &(i, j, k) in &self.space.mul[..end] {
            let x = a[i as usize];
            if x != 0.0 {
                o[k as usize] += c * x * b[j as usize];
            }
        }
    }

    /// Partial derivative in variable `v`; the top-degree coefficients of
    /// the result are unknown and set to zero.
    pub fn deriv(&self, v: usize) -> Series {
        let mut out = Series::zero(&self.space);
        for &(from, to, c) in &self.space.deriv[v] {
            out.coeffs[to as usize] += c * self.coeffs[from as usize];
        }
        out
    }

    /// `Σ_j (h^j / j!)` style series of a function applied to `self`, given the
    /// derivatives `f^{(j)}(s0)` for `j = 0..=order`.
    pub fn compose(&self, derivs_at_value: &[f64]) -> Series {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut out = Series::constant(&self.space, derivs_at_value[0]);
        let mut power = Series::constant(&self.space, 1.0);
        let mut factorial = 1.0;
        for (j, d) in derivs_at_value.iter().enumerate().skip(1) {
            power = power.mul(&h);
            factorial *= j as f64;
            out.axpy(d / factorial, &power);
        }
        out
    }

    pub fn exp(&self) -> Series {
        let e = self.value().exp();
        self.compose(&vec![e; self.space.order + 1])
    }

    pub fn recip(&self) -> Series {
        let s0 = self.value();
        let mut derivs = Vec::with_capacity(self.space.order + 1);
        let mut d = 1.0 / s0;
        for j in 0..=self.space.order {
            derivs.push(d);
            d *= -((j + 1) as f64) / s0;
        }
        self.compose(&derivs)
    }

    /// `self^p` for real `p`, with `self(0) > 0`.
    pub fn powf(&self, p: f64) -> Series {
        let s0 = self.value();
        let mut derivs = Vec::with_capacity(self.space.order + 1);
        let mut coeff = 1.0;
        for j in 0..=self.space.order {
            derivs.push(coeff * s0.powf(p - j as f64));
            coeff *= p - j as f64;
        }
        self.compose(&derivs)
    }
}

/// Inverse of a symmetric matrix of series, `m[a * d + b]`.
pub fn inverse_matrix(m: &[Series], d: usize) -> Vec<Series> {
    let space = m[0].space.clone();
    let m0 = nalgebra::DMatrix::from_fn(d, d, |a, b| m[a * d + b].value());
    let inv0 = m0.try_inverse().expect("metric is invertible at the origin");
    // X = Σ_j (-A0^{-1} H)^j A0^{-1}, where H is the non-constant part.
    let mut h = m.to_vec();
    for s in h.iter_mut() {
        s.coeffs[0] = 0.0;
    }
    let base: Vec<Series> = (0..d * d)
        .map(|i| Series::constant(&space, inv0[(i / d, i % d)]))
        .collect();
    let mut term = base.clone();
    let mut total = base.clone();
    for _ in 0..space.order {
        // term <- -A0^{-1} H term
        let mut ht = vec![Series::zero(&space); d * d];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    h[a * d + c].mul_acc(&term[c * d + b], 1.0, &mut ht[a * d + b]);
                }
            }
        }
        let mut next = vec![Series::zero(&space); d * d];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    next[a * d + b].axpy(-inv0[(a, c)], &ht[c * d + b]);
                }
            }
        }
        for (t, n) in total.iter_mut().zip(&next) {
            t.add_assign(n);
        }
        term = next;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_prefix_layout() {
        let s = Space::new(3, 3);
        assert_eq!(s.len(), 20);
        assert_eq!(s.degree_range(1), 1..4);
        assert_eq!(s.monomials[1], vec![1, 0, 0]);
    }

    #[test]
    fn exp_and_recip() {
        let space = Space::new(2, 4);
        let x = Series::variable(&space, 0);
        let e = x.exp();
        let expected = [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0];
        for (d, c) in expected.iter().enumerate() {
            let mut m = vec![0u8; 2];
            m[0] = d as u8;
            assert!((e.coeffs[space.index_of(&m).unwrap()] - c).abs() < 1e-14);
        }
        let one_plus = Series::constant(&space, 1.0).add(&x);
        let product = one_plus.recip().mul(&one_plus);
        assert!((product.value() - 1.0).abs() < 1e-14);
        assert!(product.coeffs[1..].iter().all(|c| c.abs() < 1e-14));
        let sq = one_plus.powf(0.5);
        let back = sq.mul(&sq).sub(&one_plus);
        assert!(back.coeffs.iter().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn derivative_lowers_degree() {
        let space = Space::new(2, 3);
        let x = Series::variable(&space, 0);
        let y = Series::variable(&space, 1);
        let f = x.mul(&x).mul(&y);
        let fx = f.deriv(0);
        let expected = x.mul(&y).scale(2.0);
        assert_eq!(fx.coeffs, expected.coeffs);
    }

    #[test]
    fn matrix_inverse() {
        let space = Space::new(2, 3);
        let x = Series::variable(&space, 0);
        let y = Series::variable(&space, 1);
        let one = Series::constant(&space, 1.0);
        let m = vec![one.add(&x), y.clone(), y.clone(), one.add(&x.mul(&y))];
        let inv = inverse_matrix(&m, 2);
        for a in 0..2 {
            for b in 0..2 {
                let mut s = Series::zero(&space);
                for c in 0..2 {
                    m[a * 2 + c].mul_acc(&inv[c * 2 + b], 1.0, &mut s);
                }
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((s.value() - target).abs() < 1e-14);
                assert!(s.coeffs[1..].iter().all(|c| c.abs() < 1e-13));
            }
        }
    }
}
