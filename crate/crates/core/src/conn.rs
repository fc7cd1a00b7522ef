//! Connections on a trivialized vector bundle over a chart.
//!
//! A connection is its coefficient matrices: `∇_v s = ∂_v s + A(v) s` with
//! `A(v) = Σ_i v_i A_i(x)`. The curvature convention is
//! `R(e_i, e_j) = ∂_i A_j - ∂_j A_i + [A_i, A_j]`, validated against the
//! independent loop-holonomy oracle `Hol = 1 - ε² R(e_i, e_j) + O(ε³)` for a
//! counterclockwise square loop of side `ε` in the `(i, j)` plane.

use crate::chart::{central_diff, FormField, MatrixField};
use crate::linalg::realify;
use crate::{C64, CMat, RMat, RVec};
use std::sync::Arc;

type CoeffFn = Arc<dyn Fn(&RVec) -> Vec<RMat> + Send + Sync>;

#[derive(Clone)]
pub struct Connection {
    base_dim: usize,
    rank: usize,
    a: CoeffFn,
}

impl Connection {
    pub fn new(
        base_dim: usize,
        rank: usize,
        a: impl Fn(&RVec) -> Vec<RMat> + Send + Sync + 'static,
    ) -> Connection {
        Connection {
            base_dim,
            rank,
            a: Arc::new(a),
        }
    }

    /// The trivial connection `d`.
    pub fn flat(base_dim: usize, rank: usize) -> Connection {
        Connection::new(base_dim, rank, move |_| {
            vec![RMat::zeros(rank, rank); base_dim]
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coeffs(&self, x: &RVec) -> Vec<RMat> {
        (self.a)(x)
    }

    /// `A(v) = Σ_i v_i A_i(x)`.
    pub fn coeff_along(&self, x: &RVec, v: &RVec) -> RMat {
        let coeffs = self.coeffs(x);
        let mut out = RMat::zeros(self.rank, self.rank);
        for (i, ai) in coeffs.iter().enumerate() {
            if v[i] != 0.0 {
                out += ai * v[i];
            }
        }
        out
    }

    /// `∇ + Δ` for a coefficient perturbation `Δ_i(x)`.
    pub fn shifted(
        &self,
        delta: impl Fn(&RVec) -> Vec<RMat> + Send + Sync + 'static,
    ) -> Connection {
        let a = self.a.clone();
        Connection::new(self.base_dim, self.rank, move |x| {
            let mut coeffs = a(x);
            for (c, d) in coeffs.iter_mut().zip(delta(x)) {
                *c += d;
            }
            coeffs
        })
    }

    /// Curvature `R(e_i, e_j)` by differentiating the coefficients.
    pub fn curvature(&self, x: &RVec, i: usize, j: usize, h: f64) -> RMat {
        let a = &self.a;
        let di_aj = {
            let mut e = RVec::zeros(self.base_dim);
            e[i] = 1.0;
            central_diff(&|y: &RVec| a(y)[j].clone(), x, &e, h)
        };
        let dj_ai = {
            let mut e = RVec::zeros(self.base_dim);
            e[j] = 1.0;
            central_diff(&|y: &RVec| a(y)[i].clone(), x, &e, h)
        };
        let coeffs = self.coeffs(x);
        di_aj - dj_ai + &coeffs[i] * &coeffs[j] - &coeffs[j] * &coeffs[i]
    }

    /// Full antisymmetric grid `grid[i][j] = R(e_i, e_j)`.
    #[allow(clippy::needless_range_loop)]
    pub fn curvature_grid(&self, x: &RVec, h: f64) -> Vec<Vec<RMat>> {
        let m = self.base_dim;
        let mut grid = vec![vec![RMat::zeros(self.rank, self.rank); m]; m];
        for i in 0..m {
            for j in (i + 1)..m {
                let r = self.curvature(x, i, j, h);
                grid[j][i] = -&r;
                grid[i][j] = r;
            }
        }
        grid
    }

    /// Parallel transport operator along the straight segment `from -> to`,
    /// integrating `U' = -A(γ') U` with `steps` RK4 substeps.
    pub fn transport(&self, from: &RVec, to: &RVec, steps: usize) -> RMat {
        let dir = to - from;
        let mut u = RMat::identity(self.rank, self.rank);
        let dt = 1.0 / steps as f64;
        let f = |t: f64, u: &RMat| -> RMat {
            let x = from + &dir * t;
            -self.coeff_along(&x, &dir) * u
        };
        for s in 0..steps {
            let t = s as f64 * dt;
            let k1 = f(t, &u);
            let k2 = f(t + 0.5 * dt, &(&u + &k1 * (0.5 * dt)));
            let k3 = f(t + 0.5 * dt, &(&u + &k2 * (0.5 * dt)));
            let k4 = f(t + dt, &(&u + &k3 * dt));
            u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        u
    }

    /// Holonomy around the counterclockwise square of side `eps` spanned by
    /// `e_i`, `e_j` at `x`.
    pub fn loop_holonomy(&self, x: &RVec, i: usize, j: usize, eps: f64, steps: usize) -> RMat {
        let mut ei = RVec::zeros(self.base_dim);
        ei[i] = eps;
        let mut ej = RVec::zeros(self.base_dim);
        ej[j] = eps;
        let p1 = x + &ei;
        let p2 = &p1 + &ej;
        let p3 = x + &ej;
        self.transport(&p3, x, steps)
            * self.transport(&p2, &p3, steps)
            * self.transport(&p1, &p2, steps)
            * self.transport(x, &p1, steps)
    }

    /// `(1 - Hol)/ε²` compared with `R(e_i, e_j)`; the independent check of
    /// the curvature sign convention. Returns the absolute deviation.
    pub fn holonomy_curvature_residual(
        &self,
        x: &RVec,
        i: usize,
        j: usize,
        eps: f64,
        steps: usize,
        h: f64,
    ) -> f64 {
        let hol = self.loop_holonomy(x, i, j, eps, steps);
        let measured = (RMat::identity(self.rank, self.rank) - hol) / (eps * eps);
        (measured - self.curvature(x, i, j, h)).norm()
    }

    /// Covariant derivative of a section field along the constant vector `v`.
    pub fn covariant_section(
        &self,
        f: &dyn Fn(&RVec) -> RVec,
        x: &RVec,
        v: &RVec,
        h: f64,
    ) -> RVec {
        central_diff(f, x, v, h) + self.coeff_along(x, v) * f(x)
    }

    /// Covariant derivative of an endomorphism field:
    /// `∇_v Φ = ∂_v Φ + [A(v), Φ]`.
    pub fn covariant_end(&self, f: &dyn Fn(&RVec) -> RMat, x: &RVec, v: &RVec, h: f64) -> RMat {
        let a = self.coeff_along(x, v);
        let phi = f(x);
        central_diff(f, x, v, h) + &a * &phi - &phi * &a
    }

    /// `∇_v g` for a fiber metric: `∂_v G - A(v)^T G - G A(v)`.
    pub fn metric_derivative(&self, g: &MatrixField, x: &RVec, v: &RVec, h: f64) -> RMat {
        let a = self.coeff_along(x, v);
        let gm = g.eval(x);
        g.directional(x, v, h) - a.transpose() * &gm - &gm * &a
    }
}

/// Levi-Civita connection of a metric field on the tangent bundle of a chart
/// of dimension `dim`: `Γ^k_{ij} = g^{kl}(∂_i g_{lj} + ∂_j g_{li} - ∂_l g_{ij}) / 2`,
/// packed as `A_i[(k, j)] = Γ^k_{ij}`.
pub fn levi_civita(dim: usize, g: MatrixField, h: f64) -> Connection {
    let g = Arc::new(g);
    Connection::new(dim, dim, move |x| {
        let gm = g.eval(x);
        let ginv = gm.clone().try_inverse().expect("metric must be invertible");
        let dg: Vec<RMat> = (0..dim).map(|k| g.partial(x, k, h)).collect();
        let mut coeffs = vec![RMat::zeros(dim, dim); dim];
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let mut s = 0.0;
                    for l in 0..dim {
                        s += ginv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                    }
                    coeffs[i][(k, j)] = 0.5 * s;
                }
            }
        }
        coeffs
    })
}

type CMatFn = Arc<dyn Fn(&RVec) -> CMat + Send + Sync>;

/// Metric connection of a Hermitian metric `H(x)` in a holomorphic frame over
/// `C^n` with interleaved real coordinates: `θ_j = H^{-1} ∂_{z_j} H`, realified
/// with `A_{2j-1} = realify(θ_j)` and `A_{2j} = realify(i θ_j)` (1-based).
pub fn hermitian_holomorphic_connection(
    n: usize,
    hfield: impl Fn(&RVec) -> CMat + Send + Sync + 'static,
    h: f64,
) -> Connection {
    let hfield: CMatFn = Arc::new(hfield);
    let base_dim = 2 * n;
    let rank = 2 * hfield(&RVec::zeros(base_dim)).nrows();
    Connection::new(base_dim, rank, move |x| {
        let hm = hfield(x);
        let hinv = hm.clone().try_inverse().expect("Hermitian metric must be invertible");
        let mut coeffs = Vec::with_capacity(base_dim);
        for j in 0..n {
            let mut ex = RVec::zeros(base_dim);
            ex[2 * j] = 1.0;
            let mut ey = RVec::zeros(base_dim);
            ey[2 * j + 1] = 1.0;
            let dx = central_diff(&|y: &RVec| hfield(y), x, &ex, h);
            let dy = central_diff(&|y: &RVec| hfield(y), x, &ey, h);
            // ∂_{z_j} = (∂_x - i ∂_y)/2
            let dz = (&dx - &dy * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0);
            let theta = &hinv * dz;
            coeffs.push(realify(&theta));
            coeffs.push(realify(&(&theta * C64::new(0.0, 1.0))));
        }
        coeffs
    })
}

/// The pair `∇ ± (g^{-1} T)/2` for a 3-form `T`, where
/// `(g^{-1} T)(e_i) e_j = g^{-1} T(e_i, e_j, ·)`.
pub fn torsion_shifted(base: &Connection, g: MatrixField, torsion: FormField, sign: f64) -> Connection {
    let m = base.base_dim();
    #[allow(clippy::needless_range_loop)]
    base.shifted(move |x| {
        let gm = g.eval(x);
        let ginv = gm.try_inverse().expect("metric must be invertible");
        let t = torsion.eval(x);
        let mut delta = vec![RMat::zeros(m, m); m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let mut s = 0.0;
                    for l in 0..m {
                        s += ginv[(k, l)] * t.get(&[i, j, l]);
                    }
                    delta[i][(k, j)] = sign * 0.5 * s;
                }
            }
        }
        delta
    })
}

/// `∇' = ∇ + (∇J)J/2`, which makes the structure field `J` parallel:
/// differentiating `J² = -1` shows `∇J` anticommutes with `J`, and then
/// `∇'J = ∇J + [(∇J)J, J]/2 = 0` identically.
pub fn structure_parallel_modification(base: &Connection, j: MatrixField, h: f64) -> Connection {
    section_modified_connection(base, j, h, 0.0, 0.5)
}

/// The two-parameter family `∇ + (∇J)(a + bJ)`; `(a, b) = (0, 1/2)` makes
/// `J` parallel, and every member keeps `(1,1)` curvature when `J` is a
/// holomorphic section over the base structure.
pub fn section_modified_connection(
    base: &Connection,
    j: MatrixField,
    h: f64,
    a: f64,
    b: f64,
) -> Connection {
    let dim = base.base_dim();
    let conn = base.clone();
    base.shifted(move |x| {
        let jm = j.eval(x);
        (0..dim)
            .map(|i| {
                let mut e = RVec::zeros(dim);
                e[i] = 1.0;
                let ai = conn.coeff_along(x, &e);
                let nabla_j = j.partial(x, i, h) + &ai * &jm - &jm * &ai;
                &nabla_j * a + nabla_j * &jm * b
            })
            .collect()
    })
}

/// Curvature along arbitrary vectors from a precomputed coordinate grid:
/// `R(v, w) = Σ v_i w_j R(e_i, e_j)`.
pub fn curvature_along(grid: &[Vec<RMat>], v: &RVec, w: &RVec) -> RMat {
    let m = grid.len();
    let k = grid[0][0].nrows();
    let mut out = RMat::zeros(k, k);
    for i in 0..m {
        for j in 0..m {
            let c = v[i] * w[j];
            if c != 0.0 {
                out += &grid[i][j] * c;
            }
        }
    }
    out
}

/// `∇ + sign · I[g^{-1}H, I]/2` for a 3-form flux `H` and a structure field
/// `I` on the tangent bundle, with `(g^{-1}H)(e_i) e_j = g^{-1} H(e_i, e_j, ·)`
/// as in [`torsion_shifted`].
pub fn flux_twist(
    base: &Connection,
    g: MatrixField,
    i: MatrixField,
    flux: FormField,
    sign: f64,
) -> Connection {
    let m = base.base_dim();
    #[allow(clippy::needless_range_loop)]
    base.shifted(move |x| {
        let gm = g.eval(x);
        let ginv = gm.try_inverse().expect("metric must be invertible");
        let im = i.eval(x);
        let hval = flux.eval(x);
        (0..m)
            .map(|dir| {
                let mut b = RMat::zeros(m, m);
                for j in 0..m {
                    for k in 0..m {
                        let mut s = 0.0;
                        for l in 0..m {
                            s += ginv[(k, l)] * hval.get(&[dir, j, l]);
                        }
                        b[(k, j)] = s;
                    }
                }
                let comm = &b * &im - &im * &b;
                &im * comm * (sign * 0.5)
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_vec_to_real, real_vec_to_complex, standard_acs};
    use crate::chart::end_two_form_02_residual;
    use crate::CVec;

    fn poly_connection() -> Connection {
        // smooth nonabelian 2x2 connection over R^2
        Connection::new(2, 2, |x: &RVec| {
            vec![
                RMat::from_row_slice(2, 2, &[x[1], 0.3 * x[0], 0.0, -x[1] * x[0]]),
                RMat::from_row_slice(2, 2, &[0.1, x[0] * x[0], x[1], 0.2 * x[0]]),
            ]
        })
    }

    #[test]
    fn flat_connection_has_no_curvature_or_holonomy() {
        let c = Connection::flat(3, 2);
        let x = RVec::from_vec(vec![0.1, 0.2, 0.3]);
        assert!(c.curvature(&x, 0, 2, 1e-3).norm() < 1e-12);
        let hol = c.loop_holonomy(&x, 0, 1, 0.05, 4);
        assert!((hol - RMat::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn constant_coefficients_curve_by_their_commutator() {
        let m1 = RMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let m2 = RMat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let c = {
            let (a, b) = (m1.clone(), m2.clone());
            Connection::new(2, 2, move |_| vec![a.clone(), b.clone()])
        };
        let x = RVec::zeros(2);
        let r = c.curvature(&x, 0, 1, 1e-3);
        assert!((r - (&m1 * &m2 - &m2 * &m1)).norm() < 1e-9);
    }

    #[test]
    fn holonomy_defect_matches_curvature_to_first_order() {
        let c = poly_connection();
        let x = RVec::from_vec(vec![0.4, -0.2]);
        let scale = 1.0 + c.curvature(&x, 0, 1, 1e-3).norm();
        let r1 = c.holonomy_curvature_residual(&x, 0, 1, 1e-2, 8, 1e-3);
        let r2 = c.holonomy_curvature_residual(&x, 0, 1, 5e-3, 8, 1e-3);
        assert!(r1 < 0.05 * scale, "residual {r1} too large");
        assert!(r2 < 0.6 * r1 + 1e-12, "defect must shrink linearly: {r2} vs {r1}");
    }

    #[test]
    fn levi_civita_of_a_conformal_metric_matches_the_closed_form() {
        // g = e^{2φ} δ has Γ^k_{ij} = δ_{ik} ∂_j φ + δ_{jk} ∂_i φ - δ_{ij} ∂_k φ.
        let phi = |x: &RVec| 0.3 * x[0] - 0.2 * x[1] + 0.1 * x[0] * x[1];
        let dphi = |x: &RVec, k: usize| match k {
            0 => 0.3 + 0.1 * x[1],
            _ => -0.2 + 0.1 * x[0],
        };
        let g = MatrixField::new(move |x: &RVec| RMat::identity(2, 2) * (2.0 * phi(x)).exp());
        let conn = levi_civita(2, g, 1e-3);
        let x = RVec::from_vec(vec![0.5, -0.3]);
        let coeffs = conn.coeffs(&x);
        for (i, ci) in coeffs.iter().enumerate() {
            for j in 0..2 {
                for k in 0..2 {
                    let expect = ((i == k) as u8 as f64) * dphi(&x, j)
                        + ((j == k) as u8 as f64) * dphi(&x, i)
                        - ((i == j) as u8 as f64) * dphi(&x, k);
                    assert!(
                        (ci[(k, j)] - expect).abs() < 1e-9,
                        "Γ^{k}_{i}{j}"
                    );
                }
            }
        }
        // torsion-free and metric
        let gfield = MatrixField::new(move |x: &RVec| RMat::identity(2, 2) * (2.0 * phi(x)).exp());
        for v in [RVec::from_vec(vec![1.0, 0.0]), RVec::from_vec(vec![0.3, -0.8])] {
            assert!(conn.metric_derivative(&gfield, &x, &v, 1e-3).norm() < 1e-8);
        }
    }

    #[test]
    fn hermitian_connection_preserves_the_metric_and_has_one_one_curvature() {
        // H(z) = I + small Hermitian perturbation depending on both z1, z2.
        let hfield = |x: &RVec| {
            let (x1, y1, x2, y2) = (x[0], x[1], x[2], x[3]);
            let mut h = CMat::identity(2, 2);
            h[(0, 0)] += C64::new(0.2 * x1 * x1 + 0.1 * y2 * y2, 0.0);
            h[(1, 1)] += C64::new(0.15 * y1 * y1 + 0.1 * x2 * x2, 0.0);
            let off = C64::new(0.1 * x1 * x2 - 0.05 * y1, 0.05 * y2 + 0.08 * x1 * y1);
            h[(0, 1)] = off;
            h[(1, 0)] = off.conj();
            h
        };
        let conn = hermitian_holomorphic_connection(2, hfield, 1e-3);
        assert_eq!(conn.base_dim(), 4);
        assert_eq!(conn.rank(), 4);
        let x = RVec::from_vec(vec![0.3, -0.2, 0.1, 0.4]);

        // parallel transport conserves h(s, s)
        let y = RVec::from_vec(vec![0.1, 0.2, -0.3, 0.2]);
        let u = conn.transport(&x, &y, 64);
        let s0 = CVec::from_vec(vec![C64::new(1.0, 0.3), C64::new(-0.2, 0.5)]);
        let s1 = real_vec_to_complex(&(u * complex_vec_to_real(&s0)));
        let h0 = (s0.adjoint() * hfield(&x) * &s0)[(0, 0)];
        let h1 = (s1.adjoint() * hfield(&y) * &s1)[(0, 0)];
        assert!((h0 - h1).norm() < 1e-8, "pairing drifted: {h0} vs {h1}");

        // curvature of a holomorphic-frame metric connection is (1, 1)
        let grid = conn.curvature_grid(&x, 1e-3);
        assert!(end_two_form_02_residual(&grid, &standard_acs(2)) < 1e-7);
    }

    #[test]
    fn torsion_pair_and_flux_twist_of_a_conformal_metric() {
        // g = e^{2 x1} δ with the standard structure on R^4. The flux form is
        // H = dω(I·,I·,I·); the + torsion shift of Levi-Civita preserves I,
        // the - shift does not, and the - flux twist of the Chern connection
        // reproduces the - torsion shift coefficientwise.
        let gf = || MatrixField::new(|x: &RVec| RMat::identity(4, 4) * (2.0 * x[0]).exp());
        let i0 = standard_acs(2);
        let ifield = MatrixField::constant(i0.clone());
        let lc = levi_civita(4, gf(), 1e-3);
        let flux = crate::chart::torsion_flux(&gf(), &ifield, 4, 1e-3);
        let plus = torsion_shifted(&lc, gf(), flux.clone(), 1.0);
        let minus = torsion_shifted(&lc, gf(), flux.clone(), -1.0);
        let x = RVec::from_vec(vec![0.3, -0.1, 0.4, 0.2]);
        let iconst = move |_: &RVec| i0.clone();
        let mut minus_i_deriv: f64 = 0.0;
        for k in 0..4 {
            let mut v = RVec::zeros(4);
            v[k] = 1.0;
            assert!(plus.covariant_end(&iconst, &x, &v, 1e-3).norm() < 1e-8);
            minus_i_deriv = minus_i_deriv.max(minus.covariant_end(&iconst, &x, &v, 1e-3).norm());
            assert!(plus.metric_derivative(&gf(), &x, &v, 1e-3).norm() < 1e-8);
            assert!(minus.metric_derivative(&gf(), &x, &v, 1e-3).norm() < 1e-8);
        }
        assert!(minus_i_deriv > 1e-2, "the - shift should move I");

        let chern = hermitian_holomorphic_connection(2, |x: &RVec| {
            CMat::identity(2, 2) * C64::new((2.0 * x[0]).exp(), 0.0)
        }, 1e-3);
        for k in 0..4 {
            let mut v = RVec::zeros(4);
            v[k] = 1.0;
            assert!(chern.covariant_end(&iconst, &x, &v, 1e-3).norm() < 1e-10);
            assert!(chern.metric_derivative(&gf(), &x, &v, 1e-3).norm() < 1e-8);
        }
        let twist_minus = flux_twist(&chern, gf(), ifield.clone(), flux.clone(), -1.0);
        let twist_plus = flux_twist(&chern, gf(), ifield.clone(), flux.clone(), 1.0);
        for y in [x.clone(), RVec::from_vec(vec![-0.2, 0.3, 0.1, -0.4])] {
            let a = twist_minus.coeffs(&y);
            let b = minus.coeffs(&y);
            let c = twist_plus.coeffs(&y);
            for k in 0..4 {
                let dm = (&a[k] - &b[k]).norm();
                let dp = (&c[k] - &b[k]).norm();
                assert!(dm < 1e-6, "twist- vs torsion-: {dm} (twist+ vs torsion-: {dp})");
            }
        }
    }

    #[test]
    fn structure_parallel_modification_kills_the_derivative() {
        // J(x) = exp(S(x)) J0 exp(-S(x)) for a polynomial S, under a base
        // connection with nonzero coefficients.
        let j0 = standard_acs(2);
        let jf = move |x: &RVec| {
            let mut s = RMat::zeros(4, 4);
            s[(0, 2)] = 0.4 * x[0];
            s[(2, 0)] = -0.1 * x[1];
            s[(1, 3)] = 0.2 * x[1] + 0.3 * x[0];
            s[(3, 0)] = 0.25 * x[0];
            let e = s.exp();
            let einv = (-s).exp();
            &e * &j0 * &einv
        };
        let base = Connection::new(2, 4, |x: &RVec| {
            vec![
                RMat::from_fn(4, 4, |r, c| 0.1 * (r as f64 - c as f64) * x[1]),
                RMat::from_fn(4, 4, |r, c| 0.05 * ((r * c) as f64) * x[0]),
            ]
        });
        let jfield = MatrixField::new(jf.clone());
        let modified = structure_parallel_modification(&base, jfield, 1e-3);
        let x = RVec::from_vec(vec![0.2, -0.4]);
        for dir in 0..2 {
            let mut v = RVec::zeros(2);
            v[dir] = 1.0;
            let residual = modified.covariant_end(&jf, &x, &v, 1e-3).norm();
            assert!(residual < 1e-9, "∇'J = {residual} along {dir}");
        }
    }
}
