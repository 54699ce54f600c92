//! Periodic metrics on the flat torus `(R/2πZ)^n` and quadrature of
//! curvature invariants over them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{jet_order, requirements, Evaluator};
use super::jet::MetricJet;
use super::tps::{Series, Space};
use crate::term::LinearCombination;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

/// `cos(k·x + phase)` in the active coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Wave {
    pub k: Vec<i32>,
    pub phase: f64,
}

impl Wave {
    fn random(active: usize, max_freq: i32, rng: &mut impl Rng) -> Wave {
        loop {
            let k: Vec<i32> = (0..active).map(|_| rng.gen_range(-max_freq..=max_freq)).collect();
            if k.iter().any(|&x| x != 0) {
                return Wave {
                    k,
                    phase: rng.gen_range(0.0..2.0 * PI),
                };
            }
        }
    }

    /// Taylor series of the wave around `x` (active coordinates).
    fn jet(&self, x: &[f64], space: &Arc<Space>) -> Series {
        let arg: f64 = self.k.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum::<f64>() + self.phase;
        let mut s = Series::zero(space);
        for (i, m) in space.monomials.iter().enumerate() {
            let mut c = 1.0;
            let mut degree = 0;
            for (v, &e) in m.iter().enumerate() {
                for j in 1..=e as i32 {
                    c *= self.k[v] as f64 / j as f64;
                }
                degree += e as usize;
            }
            if c != 0.0 {
                s.coeffs[i] = c * (arg + degree as f64 * FRAC_PI_2).cos();
            }
        }
        s
    }
}

/// `g = δ + ε Σ_m A_m cos(k_m·x + θ_m)` with `Σ_m |A_m|_F = 1`, so `g` is
/// positive definite whenever `ε < 1`. Only the `active` leading coordinates
/// enter the waves.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusMetric {
    pub dim: usize,
    pub active: usize,
    pub eps: f64,
    pub modes: Vec<(Wave, Vec<f64>)>,
}

/// `φ = Σ_m b_m cos(k_m·x + θ_m)` in the active coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusFunction {
    pub active: usize,
    pub modes: Vec<(Wave, f64)>,
}

impl TorusMetric {
    pub fn flat(dim: usize) -> TorusMetric {
        TorusMetric {
            dim,
            active: dim,
            eps: 0.0,
            modes: Vec::new(),
        }
    }

    pub fn random(dim: usize, active: usize, max_freq: i32, modes: usize, eps: f64, rng: &mut impl Rng) -> TorusMetric {
        assert!(eps < 1.0, "perturbation must keep the metric positive definite");
        let mut out = Vec::with_capacity(modes);
        for _ in 0..modes {
            let wave = Wave::random(active, max_freq, rng);
            let mut a = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in i..dim {
                    let x = rng.gen_range(-1.0..1.0);
                    a[i * dim + j] = x;
                    a[j * dim + i] = x;
                }
            }
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in a.iter_mut() {
                *x /= norm * modes as f64;
            }
            out.push((wave, a));
        }
        TorusMetric {
            dim,
            active,
            eps,
            modes: out,
        }
    }

    /// Jet of the metric at the point with active coordinates `x`.
    pub fn jet_at(&self, x: &[f64], order: usize) -> MetricJet {
        let space = Space::new(self.active, order);
        self.jet_in(x, &space)
    }

    fn jet_in(&self, x: &[f64], space: &Arc<Space>) -> MetricJet {
        let n = self.dim;
        let mut g: Vec<Series> = (0..n * n)
            .map(|i| Series::constant(space, if i / n == i % n { 1.0 } else { 0.0 }))
            .collect();
        for (wave, a) in &self.modes {
            let w = wave.jet(x, space);
            for i in 0..n * n {
                g[i].axpy(self.eps * a[i], &w);
            }
        }
        MetricJet {
            dim: n,
            space: space.clone(),
            var_of: (0..n).map(|c| (c < self.active).then_some(c)).collect(),
            g,
            phis: Vec::new(),
        }
    }
}

impl TorusFunction {
    pub fn random(active: usize, max_freq: i32, modes: usize, amplitude: f64, rng: &mut impl Rng) -> TorusFunction {
        TorusFunction {
            active,
            modes: (0..modes)
                .map(|_| (Wave::random(active, max_freq, rng), amplitude * rng.gen_range(-1.0..1.0)))
                .collect(),
        }
    }

    fn jet_in(&self, x: &[f64], space: &Arc<Space>) -> Series {
        let mut s = Series::zero(space);
        for (wave, b) in &self.modes {
            s.axpy(*b, &wave.jet(x, space));
        }
        s
    }
}

/// Quadrature result on an `N^active` grid together with the value on the
/// `(N/2)^active` subgrid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegralReport {
    pub value: f64,
    pub coarse: f64,
    /// `∫ |P| dV`, the scale against which the value is judged.
    pub abs_integral: f64,
}

impl IntegralReport {
    /// Difference between the fine and the coarse grid.
    pub fn convergence(&self) -> f64 {
        (self.value - self.coarse).abs()
    }
}

/// `∫ P dV` for each expression, over `g` or over `e^{2φ} g` when `conformal`
/// is given. The grid size must be even.
pub fn torus_integrals(
    exprs: &[LinearCombination],
    metric: &TorusMetric,
    conformal: Option<&TorusFunction>,
    grid: usize,
) -> Vec<IntegralReport> {
    assert!(grid >= 2 && grid % 2 == 0, "grid size must be even");
    let order = exprs.iter().map(jet_order).max().unwrap_or(2).max(2);
    let (max_r, _) = exprs
        .iter()
        .map(requirements)
        .fold((0, 0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let space = Space::new(metric.active, order);
    let active = metric.active;
    let points = grid.pow(active as u32);
    let h = 2.0 * PI / grid as f64;
    let inactive_volume = (2.0 * PI).powi((metric.dim - active) as i32);

    let per_point: Vec<Vec<f64>> = (0..points)
        .into_par_iter()
        .map(|p| {
            let x: Vec<f64> = (0..active)
                .map(|v| ((p / grid.pow((active - 1 - v) as u32)) % grid) as f64 * h)
                .collect();
            let mut jet = metric.jet_in(&x, &space);
            if let Some(phi) = conformal {
                jet.phis = vec![phi.jet_in(&x, &space)];
                jet = jet.conformal(1.0);
                jet.phis.clear();
            }
            let geo = jet.geometry(max_r, 0);
            let mut ev = Evaluator::new(&geo);
            exprs
                .iter()
                .map(|e| ev.combination(e) * geo.volume_density)
                .collect()
        })
        .collect();

    let cell = h.powi(active as i32) * inactive_volume;
    let coarse_cell = (2.0 * h).powi(active as i32) * inactive_volume;
    (0..exprs.len())
        .map(|e| {
            let mut value = 0.0;
            let mut coarse = 0.0;
            let mut abs = 0.0;
            for (p, vals) in per_point.iter().enumerate() {
                value += vals[e];
                abs += vals[e].abs();
                let on_subgrid = (0..active).all(|v| (p / grid.pow((active - 1 - v) as u32)) % 2 == 0);
                if on_subgrid {
                    coarse += vals[e];
                }
            }
            IntegralReport {
                value: value * cell,
                coarse: coarse * coarse_cell,
                abs_integral: abs * cell,
            }
        })
        .collect()
}

pub fn torus_integral(expr: &LinearCombination, metric: &TorusMetric, grid: usize) -> IntegralReport {
    torus_integrals(std::slice::from_ref(expr), metric, None, grid).remove(0)
}

/// Relative change of `∫ P dV` under `g → e^{2φ} g`,
/// `|∫P(ĝ)dV̂ - ∫P(g)dV| / max(1, |∫P(g)dV|)`.
pub fn conformal_invariance_residual(
    expr: &LinearCombination,
    metric: &TorusMetric,
    phi: &TorusFunction,
    grid: usize,
) -> f64 {
    let before = torus_integral(expr, metric, grid).value;
    let after = torus_integrals(std::slice::from_ref(expr), metric, Some(phi), grid)[0].value;
    (after - before).abs() / before.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_torus_volume() {
        let vol = torus_integral(&parse("1").unwrap(), &TorusMetric::flat(2), 4);
        assert!((vol.value - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn gauss_bonnet_on_a_two_torus() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let metric = TorusMetric::random(2, 2, 2, 3, 0.3, &mut rng);
        let report = torus_integral(&parse("Scal").unwrap(), &metric, 32);
        assert!(report.value.abs() < 1e-9 * report.abs_integral.max(1.0), "{report:?}");
        assert!(report.abs_integral > 1e-2);
    }

    #[test]
    fn wave_jet_matches_finite_difference() {
        let wave = Wave {
            k: vec![2, -1],
            phase: 0.3,
        };
        let space = Space::new(2, 2);
        let x = [0.4, 1.1];
        let s = wave.jet(&x, &space);
        let f = |a: f64, b: f64| (2.0 * a - b + 0.3).cos();
        let h = 1e-5;
        let dx = (f(x[0] + h, x[1]) - f(x[0] - h, x[1])) / (2.0 * h);
        assert!((s.coeffs[1] - dx).abs() < 1e-8);
        assert!((s.value() - f(x[0], x[1])).abs() < 1e-15);
    }
}
