//! Metric jets and the curvature quantities they determine at the origin.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use super::tps::{inverse_matrix, Series, Space};

/// Taylor jet of a metric (and of auxiliary scalar functions) at a point.
///
/// Only the coordinates listed in `active` carry Taylor variables; the metric
/// and the functions are independent of the remaining coordinates.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub dim: usize,
    pub space: Arc<Space>,
    /// Taylor variable of each coordinate, if any.
    pub var_of: Vec<Option<usize>>,
    /// Components `g[a * dim + b]`.
    pub g: Vec<Series>,
    /// Scalar functions by flavor; flavor 0 is the conformal factor φ.
    pub phis: Vec<Series>,
}

/// Random symmetric matrix with entries uniform in `[-1, 1]`.
fn random_symmetric(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let x = rng.gen_range(-1.0..1.0);
            m[a * n + b] = x;
            m[b * n + a] = x;
        }
    }
    m
}

fn random_series(space: &Arc<Space>, rng: &mut impl Rng, amplitude: f64, from_degree: usize) -> Series {
    let mut s = Series::zero(space);
    for d in from_degree..=space.order {
        for i in space.degree_range(d) {
            s.coeffs[i] = amplitude * rng.gen_range(-1.0..1.0);
        }
    }
    s
}

impl MetricJet {
    pub fn euclidean(dim: usize, order: usize) -> MetricJet {
        let space = Space::new(dim, order);
        let g = (0..dim * dim)
            .map(|i| Series::constant(&space, if i / dim == i % dim { 1.0 } else { 0.0 }))
            .collect();
        MetricJet {
            dim,
            space,
            var_of: (0..dim).map(Some).collect(),
            g,
            phis: Vec::new(),
        }
    }

    /// A generic jet: `g(0) = I + A` with small symmetric `A`, random Taylor
    /// coefficients of size `amplitude` in every degree ≥ 1, and `flavors`
    /// random scalar functions.
    pub fn random(dim: usize, order: usize, amplitude: f64, flavors: usize, rng: &mut impl Rng) -> MetricJet {
        let mut jet = MetricJet::euclidean(dim, order);
        let a0 = random_symmetric(dim, rng);
        for a in 0..dim {
            for b in a..dim {
                let mut s = random_series(&jet.space, rng, amplitude, 1);
                s.coeffs[0] = if a == b { 1.0 } else { 0.0 } + 0.15 * a0[a * dim + b];
                jet.g[a * dim + b] = s.clone();
                jet.g[b * dim + a] = s;
            }
        }
        jet.phis = (0..flavors)
            .map(|_| random_series(&jet.space, rng, 1.0, 0))
            .collect();
        jet
    }

    /// Round sphere of sectional curvature `kappa` in stereographic
    /// coordinates, `g = 4δ / (1 + κ|x|²)²`.
    pub fn constant_curvature(dim: usize, order: usize, kappa: f64) -> MetricJet {
        let mut jet = MetricJet::euclidean(dim, order);
        let mut s = Series::constant(&jet.space, 1.0);
        for v in 0..dim {
            let x = Series::variable(&jet.space, v);
            s.axpy(kappa, &x.mul(&x));
        }
        let factor = s.powf(-2.0).scale(4.0);
        for a in 0..dim {
            jet.g[a * dim + a] = factor.clone();
        }
        jet
    }

    /// `g = e^{2u} δ`.
    pub fn conformally_flat(dim: usize, u: &Series) -> MetricJet {
        let mut jet = MetricJet::euclidean(dim, u.space.order);
        jet.space = u.space.clone();
        let factor = u.scale(2.0).exp();
        let zero = Series::zero(&jet.space);
        for a in 0..dim {
            for b in 0..dim {
                jet.g[a * dim + b] = if a == b { factor.clone() } else { zero.clone() };
            }
        }
        jet
    }

    /// The jet of `e^{2 t φ} g`, where φ is the flavor-0 function.
    pub fn conformal(&self, t: f64) -> MetricJet {
        let phi = self.phis.first().expect("jet carries a conformal factor");
        let factor = phi.scale(2.0 * t).exp();
        let mut out = self.clone();
        for s in out.g.iter_mut() {
            *s = s.mul(&factor);
        }
        out
    }

    pub fn with_phis(mut self, phis: Vec<Series>) -> MetricJet {
        self.phis = phis;
        self
    }

    fn partial(&self, s: &Series, coord: usize) -> Series {
        match self.var_of[coord] {
            Some(v) => s.deriv(v),
            None => Series::zero(&self.space),
        }
    }

    pub fn metric_at_origin(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |a, b| self.g[a * n + b].value())
    }

    /// Curvature and φ-derivatives at the origin up to the given orders.
    pub fn geometry(&self, max_curvature_order: usize, max_phi_order: usize) -> Geometry {
        if max_curvature_order == 0 && max_phi_order <= 2 && self.space.order >= 2 {
            self.second_order_geometry(max_phi_order)
        } else {
            self.series_geometry(max_curvature_order, max_phi_order)
        }
    }

    /// Positions of the monomials `x_v` and `x_v x_w` in the coefficient vector.
    fn low_monomials(&self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let vars = self.space.vars;
        let mut e = vec![0u8; vars];
        let mut linear = Vec::with_capacity(vars);
        let mut quadratic = vec![vec![0; vars]; vars];
        for v in 0..vars {
            e[v] += 1;
            linear.push(self.space.index_of(&e).expect("linear monomial"));
            for w in 0..vars {
                e[w] += 1;
                quadratic[v][w] = self.space.index_of(&e).expect("quadratic monomial");
                e[w] -= 1;
            }
            e[v] -= 1;
        }
        (linear, quadratic)
    }

    /// Undifferentiated curvature and up to two φ-derivatives, computed from
    /// the first and second derivatives of the metric at the origin.
    fn second_order_geometry(&self, max_phi_order: usize) -> Geometry {
        let n = self.dim;
        let (frame, det) = self.frame();
        let (linear, quadratic) = self.low_monomials();
        let first_partial = |s: &Series, a: usize| self.var_of[a].map_or(0.0, |v| s.coeffs[linear[v]]);
        let second_partial = |s: &Series, a: usize, b: usize| match (self.var_of[a], self.var_of[b]) {
            (Some(v), Some(w)) if v == w => 2.0 * s.coeffs[quadratic[v][w]],
            (Some(v), Some(w)) => s.coeffs[quadratic[v][w]],
            _ => 0.0,
        };
        let g0 = self.metric_at_origin();
        let ginv = g0.clone().try_inverse().expect("metric is invertible");
        let i3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let i4 = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
        // dg[c][a][b] = ∂_c g_ab, ddg[c][d][a][b] = ∂_c ∂_d g_ab
        let mut dg = vec![0.0; n * n * n];
        let mut ddg = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                let s = &self.g[a * n + b];
                for c in 0..n {
                    dg[i3(c, a, b)] = first_partial(s, c);
                    for d in 0..n {
                        ddg[i4(c, d, a, b)] = second_partial(s, c, d);
                    }
                }
            }
        }
        // Γ_{d,bc} and its derivatives ∂_e Γ_{d,bc}.
        let mut first = vec![0.0; n * n * n];
        let mut dfirst = vec![0.0; n * n * n * n];
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    first[i3(d, b, c)] = 0.5 * (dg[i3(b, d, c)] + dg[i3(c, d, b)] - dg[i3(d, b, c)]);
                    for e in 0..n {
                        dfirst[i4(e, d, b, c)] =
                            0.5 * (ddg[i4(e, b, d, c)] + ddg[i4(e, c, d, b)] - ddg[i4(e, d, b, c)]);
                    }
                }
            }
        }
        // ∂_e g^{ad} = -g^{ap} ∂_e g_pq g^{qd}
        let mut dginv = vec![0.0; n * n * n];
        for e in 0..n {
            for a in 0..n {
                for d in 0..n {
                    let mut acc = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            acc -= ginv[(a, p)] * dg[i3(e, p, q)] * ginv[(q, d)];
                        }
                    }
                    dginv[i3(e, a, d)] = acc;
                }
            }
        }
        // Γ^a_bc and ∂_e Γ^a_bc.
        let mut gamma = vec![0.0; n * n * n];
        let mut dgamma = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut acc = 0.0;
                    for d in 0..n {
                        acc += ginv[(a, d)] * first[i3(d, b, c)];
                    }
                    gamma[i3(a, b, c)] = acc;
                    for e in 0..n {
                        let mut acc = 0.0;
                        for d in 0..n {
                            acc += dginv[i3(e, a, d)] * first[i3(d, b, c)] + ginv[(a, d)] * dfirst[i4(e, d, b, c)];
                        }
                        dgamma[i4(e, a, b, c)] = acc;
                    }
                }
            }
        }
        // R^a_bcd = ∂_c Γ^a_db - ∂_d Γ^a_cb + Γ^a_ce Γ^e_db - Γ^a_de Γ^e_cb
        let mut rup = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut acc = dgamma[i4(c, a, d, b)] - dgamma[i4(d, a, c, b)];
                        for e in 0..n {
                            acc += gamma[i3(a, c, e)] * gamma[i3(e, d, b)] - gamma[i3(a, d, e)] * gamma[i3(e, c, b)];
                        }
                        rup[i4(a, b, c, d)] = acc;
                    }
                }
            }
        }
        // R_ijkl = g_ie R^e_{j l k}
        let mut riemann = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for e in 0..n {
                            acc += g0[(i, e)] * rup[i4(e, j, l, k)];
                        }
                        riemann[i4(i, j, k, l)] = acc;
                    }
                }
            }
        }
        let curvature = vec![values_to_frame(riemann, 4, n, &frame)];

        let phi = self
            .phis
            .iter()
            .map(|s| {
                let mut orders = vec![vec![s.value()]];
                if max_phi_order >= 1 {
                    let grad: Vec<f64> = (0..n).map(|c| first_partial(s, c)).collect();
                    if max_phi_order >= 2 {
                        let mut hess = vec![0.0; n * n];
                        for a in 0..n {
                            for b in 0..n {
                                let mut acc = second_partial(s, a, b);
                                for u in 0..n {
                                    acc -= gamma[i3(u, a, b)] * grad[u];
                                }
                                hess[a * n + b] = acc;
                            }
                        }
                        orders.push(values_to_frame(grad, 1, n, &frame));
                        orders.push(values_to_frame(hess, 2, n, &frame));
                    } else {
                        orders.push(values_to_frame(grad, 1, n, &frame));
                    }
                }
                orders
            })
            .collect();
        Geometry {
            n,
            volume_density: det.sqrt(),
            curvature,
            phi,
        }
    }

    /// Orthonormal frame `E = L^{-T}` (with `g = L L^T`) and `det g` at the origin.
    fn frame(&self) -> (DMatrix<f64>, f64) {
        let n = self.dim;
        let chol = self
            .metric_at_origin()
            .cholesky()
            .expect("metric is positive definite at the origin");
        let l = chol.l();
        let det: f64 = (0..n).map(|i| l[(i, i)] * l[(i, i)]).product();
        let frame = l
            .transpose()
            .try_inverse()
            .expect("Cholesky factor is invertible");
        (frame, det)
    }

    /// The same quantities computed with Taylor-series arithmetic, valid
    /// for any derivative orders the jet resolves.
    pub fn series_geometry(&self, max_curvature_order: usize, max_phi_order: usize) -> Geometry {
        let n = self.dim;
        let needed = (max_curvature_order + 2).max(max_phi_order);
        assert!(
            self.space.order >= needed,
            "jet of order {} cannot resolve {} derivatives",
            self.space.order,
            needed
        );
        let (frame, det) = self.frame();

        let ginv = inverse_matrix(&self.g, n);
        // Christoffel symbols of the second kind, gamma[a][b][c] = Γ^a_bc.
        let dg: Vec<Vec<Series>> = (0..n)
            .map(|c| self.g.iter().map(|s| self.partial(s, c)).collect())
            .collect();
        let mut first = vec![Series::zero(&self.space); n * n * n];
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut s = dg[b][d * n + c].add(&dg[c][d * n + b]);
                    s.axpy(-1.0, &dg[d][b * n + c]);
                    first[(d * n + b) * n + c] = s.scale(0.5);
                }
            }
        }
        let mut gamma = vec![Series::zero(&self.space); n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in b..n {
                    let mut s = Series::zero(&self.space);
                    for d in 0..n {
                        ginv[a * n + d].mul_acc_upto(&first[(d * n + b) * n + c], 1.0, &mut s, needed - 1);
                    }
                    gamma[(a * n + c) * n + b] = s.clone();
                    gamma[(a * n + b) * n + c] = s;
                }
            }
        }
        let gam = |a: usize, b: usize, c: usize| &gamma[(a * n + b) * n + c];

        // Rup[a][b][c][d] = ∂_c Γ^a_db - ∂_d Γ^a_cb + Γ^a_ce Γ^e_db - Γ^a_de Γ^e_cb
        let idx4 = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
        let mut rup = vec![Series::zero(&self.space); n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in (c + 1)..n {
                        let mut s = self.partial(gam(a, d, b), c);
                        s.axpy(-1.0, &self.partial(gam(a, c, b), d));
                        for e in 0..n {
                            gam(a, c, e).mul_acc_upto(gam(e, d, b), 1.0, &mut s, needed - 2);
                            gam(a, d, e).mul_acc_upto(gam(e, c, b), -1.0, &mut s, needed - 2);
                        }
                        rup[idx4(a, b, d, c)] = s.scale(-1.0);
                        rup[idx4(a, b, c, d)] = s;
                    }
                }
            }
        }
        // R_ijkl = g_ie R^e_{j l k}
        let mut riemann = vec![Series::zero(&self.space); n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = Series::zero(&self.space);
                        for e in 0..n {
                            self.g[i * n + e].mul_acc_upto(&rup[idx4(e, j, l, k)], 1.0, &mut s, needed - 2);
                        }
                        riemann[idx4(i, j, k, l)] = s;
                    }
                }
            }
        }

        let mut curvature = Vec::with_capacity(max_curvature_order + 1);
        let mut current = riemann;
        let mut rank = 4;
        for m in 0..=max_curvature_order {
            curvature.push(to_frame(&current, rank, n, &frame));
            if m < max_curvature_order {
                current = self.covariant_derivative(&current, rank, &gamma, needed - 3 - m);
                rank += 1;
            }
        }

        let mut phi_derivs = Vec::with_capacity(self.phis.len());
        for phi in &self.phis {
            let mut orders = vec![vec![phi.value()]];
            if max_phi_order >= 1 {
                let mut current: Vec<Series> = (0..n).map(|c| self.partial(phi, c)).collect();
                let mut rank = 1;
                for nu in 1..=max_phi_order {
                    orders.push(to_frame(&current, rank, n, &frame));
                    if nu < max_phi_order {
                        current = self.covariant_derivative(&current, rank, &gamma, needed - 1 - nu);
                        rank += 1;
                    }
                }
            }
            phi_derivs.push(orders);
        }

        Geometry {
            n,
            volume_density: det.sqrt(),
            curvature,
            phi: phi_derivs,
        }
    }

    /// `(∇T)_{k s_1..s_r} = ∂_k T_s - Σ_t Γ^u_{k s_t} T_{..u..}`.
    /// Coefficients above `degree` are left unreliable.
    fn covariant_derivative(&self, t: &[Series], rank: usize, gamma: &[Series], degree: usize) -> Vec<Series> {
        let n = self.dim;
        let size = n.pow(rank as u32);
        let mut out = Vec::with_capacity(size * n);
        let mut digits = vec![0usize; rank];
        for k in 0..n {
            for pos in 0..size {
                let mut rem = pos;
                for t_ in (0..rank).rev() {
                    digits[t_] = rem % n;
                    rem /= n;
                }
                let mut s = self.partial(&t[pos], k);
                for slot in 0..rank {
                    let stride = n.pow((rank - 1 - slot) as u32);
                    let st = digits[slot];
                    let base = pos - st * stride;
                    for u in 0..n {
                        gamma[(u * n + k) * n + st].mul_acc_upto(&t[base + u * stride], -1.0, &mut s, degree);
                    }
                }
                out.push(s);
            }
        }
        out
    }
}

/// Components of a covariant tensor in the frame `E` (columns), evaluated at
/// the origin.
fn to_frame(t: &[Series], rank: usize, n: usize, frame: &DMatrix<f64>) -> Vec<f64> {
    values_to_frame(t.iter().map(Series::value).collect(), rank, n, frame)
}

fn values_to_frame(mut data: Vec<f64>, rank: usize, n: usize, frame: &DMatrix<f64>) -> Vec<f64> {
    for slot in 0..rank {
        let stride = n.pow((rank - 1 - slot) as u32);
        let mut next = vec![0.0; data.len()];
        for (pos, out) in next.iter_mut().enumerate() {
            let a = (pos / stride) % n;
            let base = pos - a * stride;
            let mut acc = 0.0;
            for i in 0..n {
                acc += data[base + i * stride] * frame[(i, a)];
            }
            *out = acc;
        }
        data = next;
    }
    data
}

/// Orthonormal-frame components at the origin of `∇^m R` and `∇^ν φ_h`.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub n: usize,
    /// `sqrt(det g)` at the origin.
    pub volume_density: f64,
    /// `curvature[m]` holds `∇^m R` with derivative slots first.
    pub curvature: Vec<Vec<f64>>,
    /// `phi[h][ν]` holds `∇^ν φ_h`; `phi[h][0]` is the value.
    pub phi: Vec<Vec<Vec<f64>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_sphere_curvature() {
        let n = 4;
        let geo = MetricJet::constant_curvature(n, 3, 1.0).geometry(1, 0);
        let r = &geo.curvature[0];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        let expected = d(i, l) * d(j, k) - d(i, k) * d(j, l);
                        let got = r[((i * n + j) * n + k) * n + l];
                        assert!((got - expected).abs() < 1e-12, "{i}{j}{k}{l}: {got}");
                    }
                }
            }
        }
        // Constant curvature is parallel.
        assert!(geo.curvature[1].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn flat_metric_has_no_curvature() {
        let geo = MetricJet::euclidean(3, 2).geometry(0, 0);
        assert!(geo.curvature[0].iter().all(|x| *x == 0.0));
        assert_eq!(geo.volume_density, 1.0);
    }

    #[test]
    fn curvature_symmetries_at_random_jet() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 3;
        let geo = MetricJet::random(n, 3, 0.3, 0, &mut rng).geometry(1, 0);
        let r = &geo.curvature[0];
        let at = |i: usize, j: usize, k: usize, l: usize| r[((i * n + j) * n + k) * n + l];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        assert!((at(i, j, k, l) + at(j, i, k, l)).abs() < 1e-12);
                        assert!((at(i, j, k, l) - at(k, l, i, j)).abs() < 1e-12);
                        let bianchi = at(i, j, k, l) + at(i, k, l, j) + at(i, l, j, k);
                        assert!(bianchi.abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pointwise_path_matches_series_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [3usize, 4] {
            let jet = MetricJet::random(n, 3, 0.3, 1, &mut rng);
            let fast = jet.geometry(0, 2);
            let slow = jet.series_geometry(0, 2);
            for (a, b) in fast.curvature[0].iter().zip(&slow.curvature[0]) {
                assert!((a - b).abs() < 1e-12);
            }
            for nu in 0..=2 {
                for (a, b) in fast.phi[0][nu].iter().zip(&slow.phi[0][nu]) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            assert!((fast.volume_density - slow.volume_density).abs() < 1e-14);
        }
    }
}
