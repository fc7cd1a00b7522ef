//! One fiber of the twistor bundle: structures, planes, and charts.
//!
//! A point `J` of `C(V)` is encoded by its `-i` eigenspace `E^{0,1}_J ⊂ V ⊗ C`,
//! an `n`-plane transverse to its own conjugate. This module provides
//!
//! * the vertical complex structure `A -> JA` on tangents at `J`;
//! * the plane embedding `J -> E^{0,1}_J` into the Grassmannian, its inverse
//!   `P -> i(Π_conj(P) - Π_P)`, and graph charts around an anchor plane;
//! * the pushforward law: along the conjugation flow with velocity `JA`, the
//!   graph-chart velocity of the embedded plane is `-A/2` viewed as a map
//!   `E^{0,1}_J -> E^{1,0}_J`;
//! * exponential fiber charts `s -> exp(S(s)) J0 exp(-S(s))` with exact
//!   differentials, used as coordinates on `C(V)` and `T(V, g)`.

use crate::linalg::{
    check_acs, complex_svd, complexify, conj_mat, conjugation_flow,
    exp_with_directional, imag_residual, projectors, standard_acs, tangency_residual,
};
use crate::{C64, CMat, Error, RMat, RVec, Result, EPS_RANK};

/// Vertical complex structure on the tangent space at `J`: `A -> JA`.
/// `A` must anticommute with `J`; the result anticommutes again.
pub fn vertical_structure(j: &RMat, a: &RMat) -> Result<RMat> {
    let residual = tangency_residual(j, a);
    if residual > 1e-8 * (1.0 + a.norm()) {
        return Err(Error::NotTangent { residual });
    }
    Ok(j * a)
}

/// A complex `k`-plane in `C^{2n}`, stored as an orthonormal basis matrix.
#[derive(Clone, Debug)]
pub struct Plane {
    basis: CMat,
}

impl Plane {
    /// Builds a plane from a spanning matrix, which must have full column rank.
    pub fn from_span(span: &CMat) -> Result<Plane> {
        let k = span.ncols();
        let svd = complex_svd(span);
        let smax = svd.s.first().copied().unwrap_or(0.0);
        let rank = svd.s.iter().filter(|&&s| s > EPS_RANK * smax).count();
        if rank < k {
            return Err(Error::Singular(format!(
                "plane span is rank deficient ({rank} < {k})"
            )));
        }
        Ok(Plane {
            basis: svd.u.columns(0, k).into_owned(),
        })
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Conjugate plane.
    pub fn conj(&self) -> Plane {
        Plane {
            basis: conj_mat(&self.basis),
        }
    }
}

/// Principal angles between two planes of equal dimension, ascending.
pub fn principal_angles(p: &Plane, q: &Plane) -> Vec<f64> {
    let m = p.basis.adjoint() * &q.basis;
    let mut angles: Vec<f64> = complex_svd(&m)
        .s
        .iter()
        .map(|&s| s.clamp(-1.0, 1.0).acos())
        .collect();
    angles.reverse();
    angles
}

/// Largest principal angle; a metric on the Grassmannian. Computed through
/// its sine, `‖(1 - Π_q) Π_p‖_2`, which stays accurate for nearby planes
/// where `acos` of a singular value would lose half the digits.
pub fn plane_distance(p: &Plane, q: &Plane) -> f64 {
    let residual = &p.basis - &q.basis * (q.basis.adjoint() * &p.basis);
    let sine = complex_svd(&residual).s.first().copied().unwrap_or(0.0);
    sine.clamp(-1.0, 1.0).asin()
}

/// Embeds `J` as its `-i` eigenspace `E^{0,1}_J = image((1 + iJ)/2)`.
pub fn fiber_embed(j: &RMat) -> Result<Plane> {
    check_acs(j, 1e-9)?;
    let n2 = j.nrows();
    let (_, p01) = projectors(j);
    let svd = complex_svd(&p01);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let rank = svd.s.iter().filter(|&&s| s > EPS_RANK * smax).count();
    if rank != n2 / 2 {
        return Err(Error::Singular(format!(
            "eigenprojector has rank {rank}, expected {}",
            n2 / 2
        )));
    }
    Ok(Plane {
        basis: svd.u.columns(0, n2 / 2).into_owned(),
    })
}

/// Recovers `J` from a plane transverse to its conjugate:
/// `J = i(Π_conj - Π)` where `Π` projects onto the plane along its conjugate.
pub fn acs_from_plane(p: &Plane) -> Result<RMat> {
    let n2 = p.ambient_dim();
    let k = p.dim();
    if 2 * k != n2 {
        return Err(Error::DimensionMismatch(format!(
            "plane dimension {k} is not half the ambient dimension {n2}"
        )));
    }
    let mut m = CMat::zeros(n2, n2);
    m.view_mut((0, 0), (n2, k)).copy_from(&p.basis);
    m.view_mut((0, k), (n2, k)).copy_from(&conj_mat(&p.basis));
    let svd_min = complex_svd(&m).s.last().copied().unwrap_or(0.0);
    if svd_min < 1e-10 {
        return Err(Error::NotTransverse { gap: svd_min });
    }
    let minv = m
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("plane + conjugate frame".into()))?;
    let mut diag = CMat::zeros(n2, n2);
    let i = C64::new(0.0, 1.0);
    for c in 0..k {
        diag[(c, c)] = -i; // J acts as -i on the plane itself
        diag[(k + c, k + c)] = i; // and as +i on the conjugate
    }
    let jc = m * diag * minv;
    let residual = imag_residual(&jc);
    if residual > 1e-9 * (1.0 + jc.norm()) {
        return Err(Error::NotAlmostComplex { residual });
    }
    let j = jc.map(|z| z.re);
    check_acs(&j, 1e-8)?;
    Ok(j)
}

/// Graph chart on the Grassmannian around an anchor plane `P0` with chosen
/// complement `Q0`: the plane with coordinates `B` is `{ v + B v : v in P0 }`,
/// spanned by the columns of `P0 + Q0 B`.
#[derive(Clone, Debug)]
pub struct GraphChart {
    p0: CMat,
    q0: CMat,
    inv: CMat, // inverse of [P0 | Q0]
    k: usize,
}

impl GraphChart {
    pub fn new(anchor: &Plane, complement: &Plane) -> Result<GraphChart> {
        let n2 = anchor.ambient_dim();
        let k = anchor.dim();
        if complement.ambient_dim() != n2 || complement.dim() != n2 - k {
            return Err(Error::DimensionMismatch(
                "complement must fill the ambient space".into(),
            ));
        }
        let mut m = CMat::zeros(n2, n2);
        m.view_mut((0, 0), (n2, k)).copy_from(&anchor.basis);
        m.view_mut((0, k), (n2, n2 - k)).copy_from(&complement.basis);
        let inv = m
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Singular("anchor and complement overlap".into()))?;
        Ok(GraphChart {
            p0: anchor.basis.clone(),
            q0: complement.basis.clone(),
            inv,
            k,
        })
    }

    /// Chart anchored at `E^{0,1}_J` with complement `E^{1,0}_J`.
    pub fn at_acs(j: &RMat) -> Result<GraphChart> {
        let p = fiber_embed(j)?;
        let q = p.conj();
        GraphChart::new(&p, &q)
    }

    pub fn anchor_basis(&self) -> &CMat {
        &self.p0
    }

    /// Chart coordinates of a plane, if transverse to the complement.
    pub fn coords(&self, p: &Plane) -> Result<CMat> {
        let c = &self.inv * &p.basis;
        let ca = c.rows(0, self.k).into_owned();
        let cb = c.rows(self.k, c.nrows() - self.k).into_owned();
        let sv = complex_svd(&ca).s;
        let smin = sv.last().copied().unwrap_or(0.0);
        let smax = sv.first().copied().unwrap_or(0.0);
        if smax == 0.0 || smin < 1e-10 * smax {
            return Err(Error::NotTransverse {
                gap: if smax == 0.0 { 0.0 } else { smin / smax },
            });
        }
        let ca_inv = ca
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Singular("graph coordinates".into()))?;
        Ok(cb * ca_inv)
    }

    /// Plane with the given chart coordinates.
    pub fn plane_at(&self, b: &CMat) -> Result<Plane> {
        Plane::from_span(&(&self.p0 + &self.q0 * b))
    }

    /// Chart velocity at the anchor of a curve of planes whose basis matrix
    /// moves with velocity `delta` off the anchor basis.
    pub fn velocity_coords(&self, delta: &CMat) -> CMat {
        let c = &self.inv * delta;
        c.rows(self.k, c.nrows() - self.k).into_owned()
    }
}

/// Measured graph-chart velocity of the embedded plane along the conjugation
/// flow with initial velocity `tangent` at `J` (Richardson-extrapolated
/// central differences with step `h`).
pub fn embed_pushforward_measured(
    j: &RMat,
    tangent: &RMat,
    chart: &GraphChart,
    h: f64,
) -> Result<CMat> {
    // The conjugation flow along A has velocity JA, so velocity `tangent`
    // corresponds to the generator -J * tangent.
    let gen = -(j * tangent);
    let coords_at = |t: f64| -> Result<CMat> {
        let jt = conjugation_flow(j, &gen, t)?;
        chart.coords(&fiber_embed(&jt)?)
    };
    let d = |step: f64| -> Result<CMat> {
        Ok((coords_at(step)? - coords_at(-step)?) * C64::new(1.0 / (2.0 * step), 0.0))
    };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok((fine * C64::new(4.0, 0.0) - coarse) * C64::new(1.0 / 3.0, 0.0))
}

/// Predicted chart velocity of the same curve: the anchor-basis velocity is
/// `(J * tangent / 2)` applied to the anchor columns, i.e. `-A/2` for a
/// tangent `JA`.
pub fn embed_pushforward_expected(j: &RMat, tangent: &RMat, chart: &GraphChart) -> CMat {
    let delta = complexify(&(j * tangent * 0.5)) * chart.anchor_basis();
    chart.velocity_coords(&delta)
}

/// Complex-bilinear isotropy residual `max |p^T g_C p|` of a plane for a
/// metric `g`; maximal isotropic planes of `(V ⊗ C, g_C)` give zero.
pub fn isotropy_residual(p: &Plane, g: &RMat) -> f64 {
    let gc = complexify(g);
    let m = p.basis.transpose() * gc * &p.basis;
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Exponential chart on the fiber: `J(s) = exp(S(s)) J0 exp(-S(s))` with
/// `S(s) = sum_a s_a B_a` over a tangent basis at `J0`. For a basis inside
/// `so(V, g)` the chart stays in `T(V, g)`.
#[derive(Clone)]
pub struct FiberChart {
    pub center: RMat,
    pub basis: Vec<RMat>,
}

impl FiberChart {
    /// Chart on all of `C(V)` around `J0`.
    pub fn general(j0: &RMat) -> Result<FiberChart> {
        Ok(FiberChart {
            center: j0.clone(),
            basis: crate::linalg::anticommutator_basis(j0)?,
        })
    }

    /// Chart on `T(V, g)` around a `g`-orthogonal `J0`.
    pub fn metric(j0: &RMat, g: &RMat) -> Result<FiberChart> {
        Ok(FiberChart {
            center: j0.clone(),
            basis: crate::linalg::skew_anticommutator_basis(j0, g)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn fiber_rank(&self) -> usize {
        self.center.nrows()
    }

    fn s_mat(&self, s: &[f64]) -> RMat {
        let n = self.center.nrows();
        let mut m = RMat::zeros(n, n);
        for (c, b) in s.iter().zip(self.basis.iter()) {
            m += b * *c;
        }
        m
    }

    /// Chart map.
    pub fn eval(&self, s: &[f64]) -> RMat {
        let sm = self.s_mat(s);
        let e = sm.clone().exp();
        let einv = (-sm).exp();
        e * &self.center * einv
    }

    /// Exact partial derivatives `∂J/∂s_a` of the chart map.
    pub fn differential(&self, s: &[f64]) -> Vec<RMat> {
        let sm = self.s_mat(s);
        let neg = -&sm;
        self.basis
            .iter()
            .map(|b| {
                let (es, des) = exp_with_directional(&sm, b);
                let (eneg, deneg) = exp_with_directional(&neg, &(-b));
                &des * &self.center * &eneg + es * &self.center * deneg
            })
            .collect()
    }

    /// Least-squares inversion of the chart differential at `s`.
    pub fn velocity_solver(&self, s: &[f64]) -> FiberVelocitySolver {
        let cols = self.differential(s);
        let n2 = self.fiber_rank();
        let d = cols.len();
        let mut m = RMat::zeros(n2 * n2, d);
        for (a, c) in cols.iter().enumerate() {
            for (idx, v) in c.iter().enumerate() {
                m[(idx, a)] = *v;
            }
        }
        FiberVelocitySolver {
            svd: m.svd(true, true),
            columns: cols,
            n2,
        }
    }
}

/// Factorized chart differential, converting between coordinate velocities
/// `ds/dt` and matrix velocities `dJ/dt`.
pub struct FiberVelocitySolver {
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    columns: Vec<RMat>,
    n2: usize,
}

impl FiberVelocitySolver {
    pub fn to_coords(&self, jdot: &RMat) -> Result<RVec> {
        let flat = RVec::from_iterator(self.n2 * self.n2, jdot.iter().cloned());
        self.svd
            .solve(&flat, 1e-12)
            .map_err(|e| Error::Singular(format!("fiber chart differential: {e}")))
    }

    pub fn from_coords(&self, sdot: &RVec) -> RMat {
        let mut out = RMat::zeros(self.n2, self.n2);
        for (a, c) in self.columns.iter().enumerate() {
            out += c * sdot[a];
        }
        out
    }
}

/// Convenience: the standard structure as chart center.
pub fn standard_center(n: usize) -> RMat {
    standard_acs(n)
}
