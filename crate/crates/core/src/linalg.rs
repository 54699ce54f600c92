//! Exact sparse linear algebra over the rationals.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::rational::Rational;

/// Sparse vector: column index to nonzero coefficient.
pub type SparseVec = BTreeMap<usize, Rational>;

/// `v += c * w`, dropping entries that cancel.
pub fn axpy(v: &mut SparseVec, c: &Rational, w: &SparseVec) {
    for (col, x) in w {
        let entry = v.entry(*col).or_insert_with(Rational::zero);
        *entry += c * x;
        if entry.is_zero() {
            v.remove(col);
        }
    }
}

/// Row echelon form built incrementally. Each stored row is pivoted on its
/// largest column, so reducing a vector expresses it through the smallest
/// columns possible; the reduced remainder is a normal form modulo the span.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: BTreeMap<usize, SparseVec>,
}

impl Echelon {
    pub fn new() -> Self {
        Echelon::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    /// Remainder of `v` after eliminating every pivot column.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        let mut v = v.clone();
        // Elimination only introduces smaller columns, so sweep downwards.
        let mut bound = usize::MAX;
        while let Some((&col, x)) = v.range(..bound).next_back() {
            if let Some(row) = self.rows.get(&col) {
                let factor = -(x / &row[&col]);
                axpy(&mut v, &factor, row);
            }
            bound = col;
        }
        v
    }

    /// Adds `v` to the span; returns false when it was already contained.
    pub fn insert(&mut self, v: &SparseVec) -> bool {
        let mut r = self.reduce(v);
        let Some((&pivot, lead)) = r.iter().next_back() else {
            return false;
        };
        let lead = lead.clone();
        for x in r.values_mut() {
            *x /= &lead;
        }
        self.rows.insert(pivot, r);
        true
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_empty()
    }
}

/// Basis of the null space of a dense rational matrix (rows × cols).
pub fn nullspace(matrix: &[Vec<Rational>], cols: usize) -> Vec<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = matrix.to_vec();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let lead = m[row][col].clone();
        for x in m[row].iter_mut() {
            *x /= &lead;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..cols {
                    let delta = &factor * &m[row][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::from_integer(1.into());
            for (r, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn sv(entries: &[(usize, i64)]) -> SparseVec {
        entries.iter().map(|&(c, x)| (c, int(x))).collect()
    }

    #[test]
    fn echelon_detects_dependence() {
        let mut e = Echelon::new();
        assert!(e.insert(&sv(&[(0, 1), (2, 1)])));
        assert!(e.insert(&sv(&[(1, 2), (2, -1)])));
        assert!(!e.insert(&sv(&[(0, 1), (1, 2)])));
        assert!(e.contains(&sv(&[(0, 2), (1, 4)])));
        assert_eq!(e.rank(), 2);
    }

    #[test]
    fn reduction_prefers_small_columns() {
        let mut e = Echelon::new();
        e.insert(&sv(&[(0, 1), (3, -1)]));
        assert_eq!(e.reduce(&sv(&[(3, 5)])), sv(&[(0, 5)]));
    }

    #[test]
    fn nullspace_of_rank_one_matrix() {
        let m = vec![vec![int(1), int(2), int(3)], vec![int(2), int(4), int(6)]];
        let ns = nullspace(&m, 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            let dot: Rational = m[0].iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!(dot.is_zero());
        }
    }
}
