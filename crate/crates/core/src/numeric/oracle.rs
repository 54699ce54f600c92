//! Zero tests of symbolic combinations at random jets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::{jet_order, requirements, Evaluator};
use super::jet::MetricJet;
use crate::term::LinearCombination;

/// Largest residual over the samples and the size of the individual terms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroCheck {
    pub samples: usize,
    pub max_residual: f64,
    /// Largest absolute value of a single term (or tensor component).
    pub scale: f64,
}

impl ZeroCheck {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.max_residual
        } else {
            self.max_residual / self.scale
        }
    }

    /// Residual below `tol` after normalizing by the term scale (when the
    /// scale exceeds 1).
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol * self.scale.max(1.0)
    }
}

/// `count` seeded random jets of dimension `n` able to evaluate anything up
/// to `order` derivatives of the metric, each carrying `flavors` functions.
pub fn random_jets(n: usize, order: usize, count: usize, flavors: usize, seed: u64) -> Vec<MetricJet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| MetricJet::random(n, order, 0.3, flavors, &mut rng))
        .collect()
}

/// Evaluates `lc` (complete or with free indices) at every jet. The residual
/// is the largest component of the sum; the scale the largest component of
/// a single term.
pub fn check_zero(lc: &LinearCombination, jets: &[MetricJet]) -> ZeroCheck {
    let (r, p) = requirements(lc);
    let mut max_residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for jet in jets {
        let geo = jet.geometry(r, p);
        let mut ev = Evaluator::new(&geo);
        let total = ev.tensor_value(lc);
        max_residual = total.iter().fold(max_residual, |m, x| m.max(x.abs()));
        for t in &lc.terms {
            let v = ev.tensor_value(&LinearCombination::single(t.clone()));
            scale = v.iter().fold(scale, |m, x| m.max(x.abs()));
        }
    }
    ZeroCheck {
        samples: jets.len(),
        max_residual,
        scale,
    }
}

/// Jet order needed by both combinations.
pub fn common_order(a: &LinearCombination, b: &LinearCombination) -> usize {
    jet_order(a).max(jet_order(b))
}
