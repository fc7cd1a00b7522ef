//! Fiberwise linear algebra for almost complex structures.
//!
//! Everything here is exact linear algebra on one fiber `V = R^{2n}`:
//!
//! * the tangent space of `C(V) = { J : J^2 = -1 }` at `J` is the space of
//!   endomorphisms anticommuting with `J`, of dimension `2n^2`;
//! * for a metric `g` with `J` orthogonal, the tangent space of
//!   `T(V, g) = C(V) ∩ O(V, g)` is its intersection with `so(V, g)`, of
//!   dimension `n(n-1)`;
//! * the spectral projectors `P^{1,0} = (1 - iJ)/2` and `P^{0,1} = (1 + iJ)/2`
//!   split `V ⊗ C` into the `±i` eigenspaces of `J`.
//!
//! Tangent bases are produced as orthonormal kernels of explicitly assembled
//! linear systems, so their spans can be cross-checked against exact rational
//! elimination. Curves in `C(V)` are realized by the conjugation flow
//! `t -> exp(-tA/2) J exp(tA/2)`, whose velocity at `t = 0` is `JA`.

use crate::{C64, CMat, Error, RMat, RVec, Result, EPS_ALG, EPS_RANK};
use rand::Rng;
use rand_distr::StandardNormal;

/// Frobenius inner product `<a, b> = tr(a^T b)`.
pub fn frob_inner(a: &RMat, b: &RMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// View a real matrix as complex.
pub fn complexify(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Entrywise complex conjugate.
pub fn conj_mat(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

/// Largest absolute imaginary part, used to certify realness.
pub fn imag_residual(m: &CMat) -> f64 {
    m.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

/// Real 2k x 2k representation of a complex k x k matrix in interleaved
/// coordinates `(Re w_1, Im w_1, Re w_2, ...)`: each entry `p + iq` becomes the
/// block `[[p, -q], [q, p]]`.
pub fn realify(m: &CMat) -> RMat {
    let (r, c) = m.shape();
    let mut out = RMat::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            out[(2 * i, 2 * j)] = z.re;
            out[(2 * i, 2 * j + 1)] = -z.im;
            out[(2 * i + 1, 2 * j)] = z.im;
            out[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    out
}

/// Interleaved real coordinates of a complex vector, matching [`realify`]:
/// `realify(M) · realize(v) = realize(M v)`.
pub fn complex_vec_to_real(v: &crate::CVec) -> RVec {
    RVec::from_fn(2 * v.len(), |k, _| {
        if k % 2 == 0 {
            v[k / 2].re
        } else {
            v[k / 2].im
        }
    })
}

pub fn real_vec_to_complex(v: &RVec) -> crate::CVec {
    crate::CVec::from_fn(v.len() / 2, |k, _| C64::new(v[2 * k], v[2 * k + 1]))
}

/// Standard almost complex structure on `R^{2n}` in interleaved coordinates:
/// `e_{2a-1} -> e_{2a}`, `e_{2a} -> -e_{2a-1}`.
pub fn standard_acs(n: usize) -> RMat {
    let mut j = RMat::zeros(2 * n, 2 * n);
    for a in 0..n {
        j[(2 * a + 1, 2 * a)] = 1.0;
        j[(2 * a, 2 * a + 1)] = -1.0;
    }
    j
}

/// Residual of `J^2 = -1`.
pub fn acs_residual(j: &RMat) -> f64 {
    let n = j.nrows();
    (j * j + RMat::identity(n, n)).norm()
}

/// Checks `J^2 = -1` within `eps`, scaled by the matrix size.
pub fn check_acs(j: &RMat, eps: f64) -> Result<()> {
    if j.nrows() != j.ncols() || !j.nrows().is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "almost complex structure must be square of even size, got {}x{}",
            j.nrows(),
            j.ncols()
        )));
    }
    let residual = acs_residual(j);
    if residual > eps * (1.0 + j.norm()) {
        return Err(Error::NotAlmostComplex { residual });
    }
    Ok(())
}

/// Residual of the anticommutation `AJ + JA = 0`.
pub fn tangency_residual(j: &RMat, a: &RMat) -> f64 {
    (a * j + j * a).norm()
}

/// Checks that `g` is symmetric positive definite.
pub fn check_metric(g: &RMat) -> Result<()> {
    if (g - g.transpose()).norm() > EPS_ALG * (1.0 + g.norm()) {
        return Err(Error::BadMetric);
    }
    if g.clone().cholesky().is_none() {
        return Err(Error::BadMetric);
    }
    Ok(())
}

/// Residual of `J^T g J = g`, i.e. of `J` preserving `g`.
pub fn orthogonality_residual(j: &RMat, g: &RMat) -> f64 {
    (j.transpose() * g * j - g).norm()
}

/// Orthonormal kernel basis of a real matrix, with a relative singular-value
/// cutoff. Returns `(rank, kernel_basis)`.
pub fn rank_kernel_real(m: &RMat, rel_tol: f64) -> (usize, Vec<RVec>) {
    let cols = m.ncols();
    let svd = m.clone().svd(false, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > rel_tol * smax && s > 0.0).count();
    let v_t = svd.v_t.expect("requested V^T");
    // Rows of V^T beyond the rank span the kernel; V^T may be truncated to
    // min(rows, cols), in which case the coordinate complement is appended.
    let mut basis: Vec<RVec> = (rank..v_t.nrows())
        .map(|r| v_t.row(r).transpose())
        .collect();
    if v_t.nrows() < cols {
        // Complete the orthonormal set by Gram-Schmidt against coordinates.
        let mut have: Vec<RVec> = (0..v_t.nrows()).map(|r| v_t.row(r).transpose()).collect();
        for k in 0..cols {
            let mut e = RVec::zeros(cols);
            e[k] = 1.0;
            for b in have.iter() {
                let c = b.dot(&e);
                e -= b * c;
            }
            let nrm = e.norm();
            if nrm > 1e-8 {
                e /= nrm;
                have.push(e.clone());
                basis.push(e);
                if have.len() == cols {
                    break;
                }
            }
        }
    }
    (rank, basis)
}

/// Complex SVD computed by one-sided Jacobi iteration.
///
/// Columns of `u` with nonzero singular value are an orthonormal basis of the
/// image (zero-`s` columns of `u` are left as zero vectors); `v` is square
/// unitary; `s` is sorted descending. The Jacobi route keeps full accuracy on
/// the small dense matrices used here, where the bidiagonalization algorithm
/// can lose orthogonality between singular vectors.
pub struct ComplexSvd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn complex_svd(m: &CMat) -> ComplexSvd {
    let cols = m.ncols();
    let mut a = m.clone();
    let mut v = CMat::identity(cols, cols);
    for _sweep in 0..64 {
        let mut off: f64 = 0.0;
        for i in 0..cols.saturating_sub(1) {
            for j in (i + 1)..cols {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dotc(&a.column(j));
                let scale = (alpha * beta).sqrt();
                if scale == 0.0 || gamma.norm() <= 1e-15 * scale {
                    continue;
                }
                off = off.max(gamma.norm() / scale);
                // Unitary 2x2 diagonalizing the Hermitian Gram block
                // [[alpha, gamma], [conj(gamma), beta]].
                let phase = gamma / gamma.norm();
                let tau = (beta - alpha) / (2.0 * gamma.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let w11 = C64::new(c, 0.0);
                let w12 = C64::new(s, 0.0);
                let w21 = -phase.conj() * s;
                let w22 = phase.conj() * c;
                let ai = a.column(i).into_owned();
                let aj = a.column(j).into_owned();
                a.set_column(i, &(&ai * w11 + &aj * w21));
                a.set_column(j, &(&ai * w12 + &aj * w22));
                let vi = v.column(i).into_owned();
                let vj = v.column(j).into_owned();
                v.set_column(i, &(&vi * w11 + &vj * w21));
                v.set_column(j, &(&vi * w12 + &vj * w22));
            }
        }
        if off <= 1e-14 {
            break;
        }
    }
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols).map(|k| a.column(k).norm()).collect();
    order.sort_by(|&p, &q| norms[q].partial_cmp(&norms[p]).expect("finite norms"));
    let mut u = CMat::zeros(m.nrows(), cols);
    let mut vs = CMat::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (dst, &src) in order.iter().enumerate() {
        s.push(norms[src]);
        vs.set_column(dst, &v.column(src));
        if norms[src] > 0.0 {
            u.set_column(dst, &(a.column(src) / C64::new(norms[src], 0.0)));
        }
    }
    ComplexSvd { u, s, v: vs }
}

/// Complex analogue of [`rank_kernel_real`].
pub fn rank_kernel_complex(m: &CMat, rel_tol: f64) -> (usize, Vec<crate::CVec>) {
    let svd = complex_svd(m);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let rank = svd.s.iter().filter(|&&s| s > rel_tol * smax && s > 0.0).count();
    let basis = (rank..svd.v.ncols())
        .map(|c| svd.v.column(c).into_owned())
        .collect();
    (rank, basis)
}

fn vec_index(n: usize, r: usize, c: usize) -> usize {
    c * n + r
}

fn unflatten(n: usize, v: &RVec) -> RMat {
    RMat::from_fn(n, n, |r, c| v[vec_index(n, r, c)])
}

/// Assembles the linear operator `A -> AJ + JA` on `End(V)` in the column-major
/// matrix vectorization.
fn anticommutator_operator(j: &RMat) -> RMat {
    let n = j.nrows();
    let mut m = RMat::zeros(n * n, n * n);
    for p in 0..n {
        for q in 0..n {
            let row = vec_index(n, p, q);
            for k in 0..n {
                m[(row, vec_index(n, p, k))] += j[(k, q)];
                m[(row, vec_index(n, k, q))] += j[(p, k)];
            }
        }
    }
    m
}

/// The operator `A -> A^T g + g A` in the same vectorization.
fn skew_operator(g: &RMat) -> RMat {
    let n = g.nrows();
    let mut m = RMat::zeros(n * n, n * n);
    for p in 0..n {
        for q in 0..n {
            let row = vec_index(n, p, q);
            for k in 0..n {
                m[(row, vec_index(n, k, p))] += g[(k, q)];
                m[(row, vec_index(n, k, q))] += g[(p, k)];
            }
        }
    }
    m
}

/// Orthonormal (Frobenius) basis of `{ A : AJ + JA = 0 }`, the tangent space
/// of `C(V)` at `J`. Its dimension is `2n^2` for `V = R^{2n}`.
pub fn anticommutator_basis(j: &RMat) -> Result<Vec<RMat>> {
    check_acs(j, 1e-9)?;
    let n = j.nrows();
    let (_, kernel) = rank_kernel_real(&anticommutator_operator(j), EPS_RANK);
    Ok(kernel.iter().map(|v| unflatten(n, v)).collect())
}

/// Orthonormal basis of `{ A : AJ + JA = 0, A^T g + g A = 0 }`, the tangent
/// space of `T(V, g)` at `J`. Its dimension is `n(n-1)`.
pub fn skew_anticommutator_basis(j: &RMat, g: &RMat) -> Result<Vec<RMat>> {
    check_acs(j, 1e-9)?;
    check_metric(g)?;
    let residual = orthogonality_residual(j, g);
    if residual > 1e-9 * (1.0 + g.norm()) {
        return Err(Error::NotOrthogonal { residual });
    }
    let n = j.nrows();
    let top = anticommutator_operator(j);
    let bot = skew_operator(g);
    let mut stack = RMat::zeros(2 * n * n, n * n);
    stack.view_mut((0, 0), (n * n, n * n)).copy_from(&top);
    stack.view_mut((n * n, 0), (n * n, n * n)).copy_from(&bot);
    let (_, kernel) = rank_kernel_real(&stack, EPS_RANK);
    Ok(kernel.iter().map(|v| unflatten(n, v)).collect())
}

/// Spectral projectors `(P^{1,0}, P^{0,1}) = ((1 - iJ)/2, (1 + iJ)/2)` onto the
/// `+i` and `-i` eigenspaces of `J` on `V ⊗ C`.
pub fn projectors(j: &RMat) -> (CMat, CMat) {
    let n = j.nrows();
    let jc = complexify(j);
    let id = CMat::identity(n, n);
    let half = C64::new(0.5, 0.0);
    let i = C64::new(0.0, 1.0);
    let p10 = (&id - &jc * i) * half;
    let p01 = (&id + &jc * i) * half;
    (p10, p01)
}

/// Conjugation flow `J(t) = exp(-tA/2) J exp(tA/2)` through `J` with velocity
/// `JA` at `t = 0`. Requires `A` tangent at `J` (anticommuting), which keeps
/// `J(t)^2 = -1` exactly.
pub fn conjugation_flow(j: &RMat, a: &RMat, t: f64) -> Result<RMat> {
    let residual = tangency_residual(j, a);
    if residual > 1e-8 * (1.0 + a.norm()) {
        return Err(Error::NotTangent { residual });
    }
    let left = (a * (-t / 2.0)).exp();
    let right = (a * (t / 2.0)).exp();
    Ok(left * j * right)
}

/// Matrix exponential together with its directional (Frechet) derivative:
/// returns `(exp(S), D exp_S[B])`, extracted from `exp([[S, B], [0, S]])`.
pub fn exp_with_directional(s: &RMat, b: &RMat) -> (RMat, RMat) {
    let n = s.nrows();
    let mut blk = RMat::zeros(2 * n, 2 * n);
    blk.view_mut((0, 0), (n, n)).copy_from(s);
    blk.view_mut((0, n), (n, n)).copy_from(b);
    blk.view_mut((n, n), (n, n)).copy_from(s);
    let e = blk.exp();
    (
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, n)).into_owned(),
    )
}

/// Random matrix with independent standard normal entries, scaled.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> RMat {
    RMat::from_fn(rows, cols, |_, _| {
        let x: f64 = rng.sample(StandardNormal);
        scale * x
    })
}

/// Random almost complex structure `exp(S) J0 exp(-S)` with `S` a scaled
/// Gaussian matrix. Squares to `-1` up to roundoff.
pub fn random_acs<R: Rng>(rng: &mut R, n2: usize) -> Result<RMat> {
    if !n2.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "fiber dimension must be even, got {n2}"
        )));
    }
    let j0 = standard_acs(n2 / 2);
    let s = random_matrix(rng, n2, n2, 0.3);
    let e = s.clone().exp();
    let einv = (-s).exp();
    Ok(&e * j0 * &einv)
}

/// Random `g`-orthogonal almost complex structure: a `g`-compatible base point
/// conjugated by `exp(S)` with `S` in `so(V, g)`.
pub fn random_metric_acs<R: Rng>(rng: &mut R, g: &RMat) -> Result<RMat> {
    check_metric(g)?;
    let n2 = g.nrows();
    if !n2.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "fiber dimension must be even, got {n2}"
        )));
    }
    // F = C^{-T} for g = C C^T maps the standard frame to a g-orthonormal one.
    let chol = g.clone().cholesky().ok_or(Error::BadMetric)?;
    let c = chol.l();
    let f = c
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Singular("cholesky factor".into()))?;
    let finv = c.transpose();
    let j_base = &f * standard_acs(n2 / 2) * &finv;
    let k = random_matrix(rng, n2, n2, 0.3);
    let skew = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("metric".into()))?
        * (&k - &k.transpose())
        * 0.5;
    let e = skew.clone().exp();
    let einv = (-skew).exp();
    Ok(&e * j_base * &einv)
}

/// Random tangent vector at `J`: a Gaussian matrix projected onto the
/// anticommutator space by `B -> (B + JBJ)/2`.
pub fn random_tangent<R: Rng>(rng: &mut R, j: &RMat) -> RMat {
    let n = j.nrows();
    let b = random_matrix(rng, n, n, 1.0);
    (&b + j * &b * j) * 0.5
}

/// Random tangent vector at `J` inside `so(V, g)`: the same projection applied
/// to a `g`-skew Gaussian matrix (the projection preserves `so(V, g)` when `J`
/// is `g`-orthogonal).
pub fn random_metric_tangent<R: Rng>(rng: &mut R, j: &RMat, g: &RMat) -> Result<RMat> {
    let n = j.nrows();
    let k = random_matrix(rng, n, n, 1.0);
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("metric".into()))?;
    let b = ginv * (&k - &k.transpose()) * 0.5;
    Ok((&b + j * &b * j) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standard_structure_squares_to_minus_one() {
        for n in 1..=3 {
            let j = standard_acs(n);
            assert!(acs_residual(&j) < 1e-14);
        }
    }

    #[test]
    fn jacobi_svd_reconstructs_rank_deficient_matrices() {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for &(m, n, r) in &[(6usize, 6usize, 3usize), (8, 12, 5), (12, 8, 5), (5, 5, 0)] {
            let a = CMat::from_fn(m, r, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let b = CMat::from_fn(r, n, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let prod = if r == 0 { CMat::zeros(m, n) } else { &a * &b };
            let svd = complex_svd(&prod);
            let smax = svd.s[0].max(1.0);
            let rank = svd.s.iter().filter(|&&s| s > 1e-9 * smax).count();
            assert_eq!(rank, r);
            let mut rec = CMat::zeros(m, n);
            for k in 0..svd.s.len() {
                rec += svd.u.column(k) * svd.v.column(k).adjoint() * C64::new(svd.s[k], 0.0);
            }
            assert!((rec - &prod).norm() < 1e-12 * smax);
            assert!(
                (svd.v.adjoint() * &svd.v - CMat::identity(n, n)).norm() < 1e-12,
                "V must be unitary"
            );
            let ur = svd.u.columns(0, rank).into_owned();
            assert!((ur.adjoint() * &ur - CMat::identity(rank, rank)).norm() < 1e-12);
        }
    }

    #[test]
    fn jacobi_svd_handles_spectral_projectors() {
        // Oblique eigenprojectors of a random structure: rank n, with the
        // image basis accurate to machine precision (the motivating case).
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for n in 1..=4usize {
            let j = random_acs(&mut rng, 2 * n).unwrap();
            let (_, p01) = projectors(&j);
            let svd = complex_svd(&p01);
            let rank = svd.s.iter().filter(|&&s| s > 1e-9 * svd.s[0]).count();
            assert_eq!(rank, n);
            let mut rec = CMat::zeros(2 * n, 2 * n);
            for k in 0..svd.s.len() {
                rec += svd.u.column(k) * svd.v.column(k).adjoint() * C64::new(svd.s[k], 0.0);
            }
            assert!((rec - &p01).norm() < 1e-13 * (1.0 + p01.norm()));
        }
    }

    #[test]
    fn tangent_dimensions_match_the_orbit_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3usize {
            let j = random_acs(&mut rng, 2 * n).unwrap();
            let basis = anticommutator_basis(&j).unwrap();
            assert_eq!(basis.len(), 2 * n * n);
            for a in &basis {
                assert!(tangency_residual(&j, a) < 1e-9);
            }
        }
    }

    #[test]
    fn metric_tangent_dimensions_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 1..=3usize {
            let g = RMat::identity(2 * n, 2 * n);
            let j = random_metric_acs(&mut rng, &g).unwrap();
            let basis = skew_anticommutator_basis(&j, &g).unwrap();
            assert_eq!(basis.len(), n * (n - 1));
        }
        // Non-diagonal metric: g = T^T T with J = T^{-1} J0 T is g-orthogonal.
        let n = 2usize;
        let t = RMat::from_row_slice(4, 4, &[
            1.0, 0.2, 0.0, -0.1,
            0.0, 1.1, 0.3, 0.0,
            0.0, 0.0, 0.9, 0.2,
            0.1, 0.0, 0.0, 1.2,
        ]);
        let g = t.transpose() * &t;
        let tinv = t.clone().try_inverse().unwrap();
        let j = &tinv * standard_acs(n) * &t;
        assert!(orthogonality_residual(&j, &g) < 1e-12);
        let basis = skew_anticommutator_basis(&j, &g).unwrap();
        assert_eq!(basis.len(), n * (n - 1));
        for a in &basis {
            assert!(tangency_residual(&j, a) < 1e-8);
            assert!((a.transpose() * &g + &g * a).norm() < 1e-8);
        }
    }

    #[test]
    fn basis_is_frobenius_orthonormal() {
        let j = standard_acs(2);
        let basis = anticommutator_basis(&j).unwrap();
        for (i, a) in basis.iter().enumerate() {
            for (k, b) in basis.iter().enumerate() {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert_relative_eq!(frob_inner(a, b), expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn projectors_split_the_complexification() {
        let j = standard_acs(1);
        let (p10, p01) = projectors(&j);
        // Direct evaluation of (1 + iJ0)/2 for J0 = [[0,-1],[1,0]].
        let expect = CMat::from_row_slice(2, 2, &[
            C64::new(0.5, 0.0), C64::new(0.0, -0.5),
            C64::new(0.0, 0.5), C64::new(0.5, 0.0),
        ]);
        assert!((&p01 - &expect).norm() < 1e-15);
        assert!((&p10 - conj_mat(&expect)).norm() < 1e-15);
        assert!((&p01 * &p01 - &p01).norm() < 1e-15);
        assert!((&p10 * &p10 - &p10).norm() < 1e-15);
        assert!((&p10 + &p01 - CMat::identity(2, 2)).norm() < 1e-15);
        let jc = complexify(&j);
        assert!((&jc * &p01 - &p01 * C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((&jc * &p10 - &p10 * C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn conjugation_flow_velocity_is_ja() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let j = random_acs(&mut rng, 4).unwrap();
        let a = random_tangent(&mut rng, &j);
        let h = 1e-4;
        let plus = conjugation_flow(&j, &a, h).unwrap();
        let minus = conjugation_flow(&j, &a, -h).unwrap();
        let fd = (plus - minus) / (2.0 * h);
        assert!((fd - &j * &a).norm() < 1e-7 * (1.0 + a.norm()));
        // The flow stays on C(V) exactly.
        let far = conjugation_flow(&j, &a, 1.7).unwrap();
        assert!(acs_residual(&far) < 1e-10);
    }

    #[test]
    fn conjugation_flow_rejects_non_tangent_directions() {
        let j = standard_acs(2);
        let a = RMat::identity(4, 4);
        assert!(matches!(
            conjugation_flow(&j, &a, 0.5),
            Err(Error::NotTangent { .. })
        ));
    }

    #[test]
    fn metric_flow_preserves_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = RMat::identity(4, 4);
        let j = random_metric_acs(&mut rng, &g).unwrap();
        assert!(acs_residual(&j) < 1e-10);
        assert!(orthogonality_residual(&j, &g) < 1e-10);
        let a = random_metric_tangent(&mut rng, &j, &g).unwrap();
        assert!(tangency_residual(&j, &a) < 1e-10);
        let jt = conjugation_flow(&j, &a, 0.8).unwrap();
        assert!(orthogonality_residual(&jt, &g) < 1e-9);
    }

    #[test]
    fn rank_kernel_detects_exact_deficiency() {
        let m = RMat::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]);
        let (rank, kernel) = rank_kernel_real(&m, EPS_RANK);
        assert_eq!(rank, 2);
        assert_eq!(kernel.len(), 1);
        assert!((&m * &kernel[0]).norm() < 1e-12);

        let c = CMat::from_row_slice(2, 2, &[
            C64::new(1.0, 0.0), C64::new(0.0, 1.0),
            C64::new(0.0, -1.0), C64::new(1.0, 0.0),
        ]);
        let (rank, kernel) = rank_kernel_complex(&c, EPS_RANK);
        assert_eq!(rank, 1);
        assert_eq!(kernel.len(), 1);
        assert!((&c * &kernel[0]).norm() < 1e-12);
    }

    #[test]
    fn exp_directional_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_matrix(&mut rng, 4, 4, 0.4);
        let b = random_matrix(&mut rng, 4, 4, 1.0);
        let (es, des) = exp_with_directional(&s, &b);
        assert!((&es - s.clone().exp()).norm() < 1e-12);
        let h = 1e-5;
        let fd = ((&s + &b * h).exp() - (&s - &b * h).exp()) / (2.0 * h);
        assert!((des - fd).norm() < 1e-8);
    }

    #[test]
    fn realify_represents_complex_multiplication() {
        let m = CMat::from_row_slice(1, 1, &[C64::new(0.0, 1.0)]);
        assert_eq!(realify(&m), standard_acs(1));
        let a = CMat::from_row_slice(2, 2, &[
            C64::new(1.0, 2.0), C64::new(0.0, -1.0),
            C64::new(3.0, 0.0), C64::new(-1.0, 1.0),
        ]);
        let b = CMat::from_row_slice(2, 2, &[
            C64::new(0.5, -1.0), C64::new(2.0, 0.0),
            C64::new(0.0, 1.0), C64::new(1.0, 1.0),
        ]);
        assert!((realify(&(&a * &b)) - realify(&a) * realify(&b)).norm() < 1e-12);
    }
}
