//! The total space of the structure bundle over a base chart.
//!
//! A point is a pair `(x, J)` with `x` in a box chart of the base and `J` a
//! fiberwise complex structure on the bundle, encoded by exponential fiber
//! coordinates `J(s) = exp(S(s)) J0 exp(-S(s))`. The connection splits every
//! tangent vector into a base velocity `v` and a vertical matrix
//! `P(X) = J̇ + [A(v), J]`, which anticommutes with `J`.
//!
//! On this splitting live the two almost complex structures under study:
//!
//! * the fibered structure `(v, A) -> (I v, J A)`, defined for any bundle
//!   over a base with an almost complex structure `I`;
//! * the tautological structure `(v, A) -> (J v, J A)`, defined when the
//!   bundle is the tangent bundle itself.
//!
//! The module provides the structure matrices in chart coordinates (for
//! finite-difference Nijenhuis tensors), the closed curvature expression the
//! Nijenhuis tensor must match, the integrability residual `[R^{0,2}, J]`
//! localized on `E^{0,1}_J`, holomorphy residuals for sections of the bundle
//! and of the lifted bundles, and the bracket identity for the vertical
//! projection.

use crate::chart::{central_diff, nijenhuis_fd, ChartDomain, MatrixField};
use crate::conn::{curvature_along, Connection};
use crate::fiber::{FiberChart, FiberVelocitySolver};
use crate::linalg::{complexify, projectors, rank_kernel_real};
use crate::{C64, Error, RMat, RVec, Result};
use rand::Rng;

/// Which almost complex structure to realize on the total space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureKind {
    /// `(v, A) -> (I v, J A)`: base rotation by `I`, vertical rotation by `J`.
    Fibered,
    /// `(v, A) -> (J v, J A)`: both rotations by the fiber point itself
    /// (tangent-bundle case only).
    Tautological,
}

/// Base chart, bundle connection, base structure field, and fiber chart,
/// bundled into coordinates on the total space `R^{m + d}`.
#[derive(Clone)]
pub struct TotalSpace {
    base: ChartDomain,
    conn: Connection,
    i_field: MatrixField,
    fiber: FiberChart,
}

impl TotalSpace {
    pub fn new(
        base: ChartDomain,
        conn: Connection,
        i_field: MatrixField,
        fiber: FiberChart,
    ) -> Result<TotalSpace> {
        if conn.base_dim() != base.dim() {
            return Err(Error::DimensionMismatch(format!(
                "connection over base of dimension {}, chart of dimension {}",
                conn.base_dim(),
                base.dim()
            )));
        }
        if conn.rank() != fiber.fiber_rank() {
            return Err(Error::DimensionMismatch(format!(
                "connection rank {} vs fiber rank {}",
                conn.rank(),
                fiber.fiber_rank()
            )));
        }
        let i0 = i_field.eval(&base.center());
        if i0.nrows() != base.dim() {
            return Err(Error::DimensionMismatch(format!(
                "base structure of size {} on a chart of dimension {}",
                i0.nrows(),
                base.dim()
            )));
        }
        crate::linalg::check_acs(&i0, 1e-8)?;
        Ok(TotalSpace {
            base,
            conn,
            i_field,
            fiber,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber.dim()
    }

    pub fn rank(&self) -> usize {
        self.fiber.fiber_rank()
    }

    pub fn dim(&self) -> usize {
        self.base_dim() + self.fiber_dim()
    }

    pub fn base(&self) -> &ChartDomain {
        &self.base
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    pub fn base_structure(&self) -> &MatrixField {
        &self.i_field
    }

    pub fn fiber(&self) -> &FiberChart {
        &self.fiber
    }

    /// The same space with the connection replaced.
    pub fn with_connection(&self, conn: Connection) -> Result<TotalSpace> {
        TotalSpace::new(self.base.clone(), conn, self.i_field.clone(), self.fiber.clone())
    }

    /// The same space with the connection shifted by `w ⊗ 1` for a scalar
    /// coefficient field `w`; the fibered structure matrix is unchanged by
    /// this because scalars commute with everything vertical.
    pub fn with_scalar_shift(
        &self,
        w: impl Fn(&RVec) -> RVec + Send + Sync + 'static,
    ) -> Result<TotalSpace> {
        let k = self.rank();
        let m = self.base_dim();
        let shifted = self.conn.shifted(move |x| {
            let c = w(x);
            (0..m).map(|i| RMat::identity(k, k) * c[i]).collect()
        });
        self.with_connection(shifted)
    }

    pub fn split_coords(&self, u: &RVec) -> (RVec, Vec<f64>) {
        let m = self.base_dim();
        (
            u.rows(0, m).into_owned(),
            u.as_slice()[m..].to_vec(),
        )
    }

    pub fn join_coords(&self, x: &RVec, s: &[f64]) -> RVec {
        RVec::from_iterator(
            self.dim(),
            x.iter().cloned().chain(s.iter().cloned()),
        )
    }

    /// Uniform sample of total coordinates: base point `margin` inside the
    /// box, fiber coordinates uniform in `[-radius, radius]^d`.
    pub fn sample<R: Rng>(&self, rng: &mut R, margin: f64, radius: f64) -> RVec {
        let x = self.base.sample(rng, margin);
        let s: Vec<f64> = (0..self.fiber_dim())
            .map(|_| radius * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        self.join_coords(&x, &s)
    }

    /// The fiber structure `J` at the total coordinates `u`.
    pub fn structure_at(&self, u: &RVec) -> RMat {
        let (_, s) = self.split_coords(u);
        self.fiber.eval(&s)
    }

    /// Point data with the fiber chart differential factorized and the
    /// connection coefficients cached.
    pub fn point(&self, u: &RVec) -> TotalPoint {
        let (x, s) = self.split_coords(u);
        let j = self.fiber.eval(&s);
        let coeffs = self.conn.coeffs(&x);
        let solver = self.fiber.velocity_solver(&s);
        TotalPoint {
            m: self.base_dim(),
            x,
            j,
            coeffs,
            solver,
        }
    }

    /// Applies the chosen structure to a coordinate velocity at `p`.
    pub fn apply_structure(
        &self,
        kind: StructureKind,
        p: &TotalPoint,
        udot: &RVec,
    ) -> Result<RVec> {
        let v = p.base_part(udot);
        let vert = p.vertical_part(udot);
        let (hv, hvert) = match kind {
            StructureKind::Fibered => (self.i_field.eval(&p.x) * v, &p.j * vert),
            StructureKind::Tautological => {
                if self.rank() != self.base_dim() {
                    return Err(Error::DimensionMismatch(
                        "the tautological structure needs the tangent bundle".into(),
                    ));
                }
                (&p.j * v, &p.j * vert)
            }
        };
        p.coords_from(&hv, &hvert)
    }

    /// Matrix of the chosen structure in total chart coordinates.
    pub fn structure_matrix(&self, kind: StructureKind, u: &RVec) -> Result<RMat> {
        let p = self.point(u);
        let n = self.dim();
        let mut out = RMat::zeros(n, n);
        for c in 0..n {
            let mut e = RVec::zeros(n);
            e[c] = 1.0;
            let col = self.apply_structure(kind, &p, &e)?;
            out.set_column(c, &col);
        }
        Ok(out)
    }

    /// The structure matrix as a closure over the chart, for difference
    /// quotients. Panics outside the valid chart domain.
    pub fn structure_field(
        &self,
        kind: StructureKind,
    ) -> impl Fn(&RVec) -> RMat + Send + Sync + 'static {
        let me = self.clone();
        move |u: &RVec| {
            me.structure_matrix(kind, u)
                .expect("structure matrix inside the chart domain")
        }
    }

    /// Finite-difference Nijenhuis tensor of the chosen structure on constant
    /// coordinate vectors, as a total coordinate vector.
    pub fn nijenhuis_fd_total(
        &self,
        kind: StructureKind,
        u: &RVec,
        udot1: &RVec,
        udot2: &RVec,
        h: f64,
    ) -> RVec {
        let f = self.structure_field(kind);
        nijenhuis_fd(&f, u, udot1, udot2, h)
    }

    /// Splits a coordinate tangent vector at `u` into its base part and its
    /// vertical projection.
    pub fn split_tangent(&self, u: &RVec, udot: &RVec) -> (RVec, RMat) {
        let p = self.point(u);
        (p.base_part(udot), p.vertical_part(udot))
    }

    /// Closed form of the Nijenhuis tensor of the fibered structure: the base
    /// part is the Nijenhuis tensor of `I` on the base velocities, and the
    /// vertical part is
    /// `[R(v,w) - R(Iv,Iw), J] + J [R(Iv,w) + R(v,Iw), J]`.
    /// It depends only on the base parts of the two tangents.
    pub fn closed_nijenhuis(
        &self,
        u: &RVec,
        udot1: &RVec,
        udot2: &RVec,
        h: f64,
    ) -> (RVec, RMat) {
        let p = self.point(u);
        let v = p.base_part(udot1);
        let w = p.base_part(udot2);
        let i = self.i_field.eval(&p.x);
        let ifn = {
            let f = self.i_field.clone();
            move |y: &RVec| f.eval(y)
        };
        let base = nijenhuis_fd(&ifn, &p.x, &v, &w, h);
        let grid = self.conn.curvature_grid(&p.x, h);
        let iv = &i * &v;
        let iw = &i * &w;
        let r_vw = curvature_along(&grid, &v, &w);
        let r_ivw = curvature_along(&grid, &iv, &w);
        let r_viw = curvature_along(&grid, &v, &iw);
        let r_iviw = curvature_along(&grid, &iv, &iw);
        let first = &r_vw - &r_iviw;
        let second = &r_ivw + &r_viw;
        let comm = |a: &RMat, b: &RMat| a * b - b * a;
        let vertical = comm(&first, &p.j) + &p.j * comm(&second, &p.j);
        (base, vertical)
    }

    /// Relative deviation between the finite-difference Nijenhuis tensor of
    /// the fibered structure and its closed form, with the denominator
    /// saturating at 1 so that integrable cases are measured absolutely.
    pub fn nijenhuis_deviation(
        &self,
        u: &RVec,
        udot1: &RVec,
        udot2: &RVec,
        h: f64,
    ) -> f64 {
        let n_fd = self.nijenhuis_fd_total(StructureKind::Fibered, u, udot1, udot2, h);
        let (b_fd, v_fd) = self.split_tangent(u, &n_fd);
        let (b_cl, v_cl) = self.closed_nijenhuis(u, udot1, udot2, h);
        let err = (&b_fd - &b_cl).norm() + (&v_fd - &v_cl).norm();
        let scale = (b_cl.norm() + v_cl.norm()).max(1.0);
        err / scale
    }

    /// Integrability obstruction at `u`: the largest
    /// `‖[R^{0,2}(e_a, e_b), J] P^{0,1}_J‖` over coordinate pairs, relative
    /// to the curvature scale (saturating at 1).
    pub fn integrability_residual(&self, u: &RVec, h: f64) -> f64 {
        let p = self.point(u);
        let grid = self.conn.curvature_grid(&p.x, h);
        let i = self.i_field.eval(&p.x);
        let (_, p01) = projectors(&p.j);
        let jc = complexify(&p.j);
        let m = self.base_dim();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for a in 0..m {
            for b in (a + 1)..m {
                scale = scale.max(grid[a][b].norm());
                let r02 = crate::chart::end_two_form_02(&grid, &i, a, b);
                let comm = &r02 * &jc - &jc * &r02;
                worst = worst.max((comm * &p01).norm());
            }
        }
        worst / scale
    }

    /// Derivative of the tautological endomorphism field `φ(u) = J(s)` along
    /// the coordinate velocity `udot` under the pulled-back connection:
    /// `∂_X φ + [A(π_* X), φ]`, by finite differences of the fiber chart map.
    pub fn taut_endo_derivative(&self, u: &RVec, udot: &RVec, h: f64) -> RMat {
        let me = self.clone();
        let f = move |y: &RVec| me.structure_at(y);
        let p = self.point(u);
        let v = p.base_part(udot);
        let a = p.a_along(&v);
        central_diff(&f, u, udot, h) + &a * &p.j - &p.j * &a
    }

    /// Holomorphy defect of the tautological endomorphism section of the
    /// lifted structure bundle over the total space:
    /// `‖φ ∇̂_X φ - ∇̂_{𝓘X} φ‖ / (1 + ‖∇̂_X φ‖)`, where `𝓘` is the chosen
    /// structure on the total space.
    pub fn phi_section_residual(
        &self,
        kind: StructureKind,
        u: &RVec,
        udot: &RVec,
        h: f64,
    ) -> Result<f64> {
        let p = self.point(u);
        let dphi = self.taut_endo_derivative(u, udot, h);
        let ix = self.apply_structure(kind, &p, udot)?;
        let dphi_i = self.taut_endo_derivative(u, &ix, h);
        let defect = (&p.j * &dphi - &dphi_i).norm();
        Ok(defect / (1.0 + dphi.norm()))
    }

    /// Matrix of the lifted tangent-bundle connection
    /// `∇̃ = (π*∇ + [(π*∇φ)φ, ·]/2) ⊕ π*∇` along the coordinate velocity
    /// `udot`, in total chart coordinates: the column for the constant
    /// coordinate field `e_c` is `∇̃_X e_c` recombined into coordinates.
    pub fn lifted_connection_along(&self, u: &RVec, udot: &RVec, h: f64) -> Result<RMat> {
        if self.rank() != self.base_dim() {
            return Err(Error::DimensionMismatch(
                "the lifted connection needs the tangent bundle".into(),
            ));
        }
        let p = self.point(u);
        let v_x = p.base_part(udot);
        let a_x = p.a_along(&v_x);
        let px = p.vertical_part(udot);
        let pxj = &px * &p.j;
        let n = self.dim();
        let mut out = RMat::zeros(n, n);
        for c in 0..n {
            let mut e = RVec::zeros(n);
            e[c] = 1.0;
            let w = p.base_part(&e);
            let b_now = p.vertical_part(&e);
            // π*∇_X of the End-valued field u -> P(e_c)
            let me = self.clone();
            let ec = e.clone();
            let bfield = move |y: &RVec| {
                let q = me.point(y);
                q.vertical_part(&ec)
            };
            let db = central_diff(&bfield, u, udot, h) + &a_x * &b_now - &b_now * &a_x;
            let vert = db + (&pxj * &b_now - &b_now * &pxj) * 0.5;
            let hor = &a_x * w;
            let col = p.coords_from(&hor, &vert)?;
            out.set_column(c, &col);
        }
        Ok(out)
    }

    /// Holomorphy defect of the tautological structure, viewed as a section
    /// of the structure bundle of the total tangent bundle with the lifted
    /// connection: `‖Φ ∇̃_X Φ - ∇̃_{𝓘X} Φ‖ / (1 + ‖∇̃_X Φ‖)` where `Φ` is the
    /// tautological structure matrix field and `𝓘` the chosen base structure
    /// on the total space.
    pub fn taut_section_residual(
        &self,
        kind: StructureKind,
        u: &RVec,
        udot: &RVec,
        h: f64,
    ) -> Result<f64> {
        let p = self.point(u);
        let phi = self.structure_matrix(StructureKind::Tautological, u)?;
        let field = self.structure_field(StructureKind::Tautological);
        let cov = |dir: &RVec| -> Result<RMat> {
            let atilde = self.lifted_connection_along(u, dir, h)?;
            Ok(central_diff(&field, u, dir, h) + &atilde * &phi - &phi * &atilde)
        };
        let dphi = cov(udot)?;
        let ix = self.apply_structure(kind, &p, udot)?;
        let dphi_i = cov(&ix)?;
        let defect = (&phi * &dphi - &dphi_i).norm();
        Ok(defect / (1.0 + dphi.norm()))
    }

    /// Defect of the vertical-projection bracket identity
    /// `P([X,Y]) = -[R^{π*∇}(X,Y), φ] + π*∇_X P(Y) - π*∇_Y P(X)`
    /// for coordinate vector fields `X`, `Y` on the total chart.
    pub fn bracket_projection_residual(
        &self,
        u: &RVec,
        xf: &(dyn Fn(&RVec) -> RVec + Sync),
        yf: &(dyn Fn(&RVec) -> RVec + Sync),
        h: f64,
    ) -> f64 {
        let p = self.point(u);
        let xu = xf(u);
        let yu = yf(u);
        let bracket = central_diff(&|z: &RVec| yf(z), u, &xu, h)
            - central_diff(&|z: &RVec| xf(z), u, &yu, h);
        let p_bracket = p.vertical_part(&bracket);
        let grid = self.conn.curvature_grid(&p.x, h);
        let r = curvature_along(&grid, &p.base_part(&xu), &p.base_part(&yu));
        let r_phi = &r * &p.j - &p.j * &r;
        let me = self.clone();
        let cov_p = |ff: &(dyn Fn(&RVec) -> RVec + Sync), dir: &RVec| -> RMat {
            let field = |y: &RVec| {
                let q = me.point(y);
                q.vertical_part(&ff(y))
            };
            let vdir = p.base_part(dir);
            let a = p.a_along(&vdir);
            let now = field(u);
            central_diff(&field, u, dir, h) + &a * &now - &now * &a
        };
        let dx_py = cov_p(yf, &xu);
        let dy_px = cov_p(xf, &yu);
        let residual = (&p_bracket + &r_phi - &dx_py + &dy_px).norm();
        let scale = 1.0 + p_bracket.norm() + r_phi.norm() + dx_py.norm() + dy_px.norm();
        residual / scale
    }
}

/// Cached data at one total-space point: base coordinates, fiber structure,
/// connection coefficients, and the factorized fiber chart differential.
pub struct TotalPoint {
    m: usize,
    pub x: RVec,
    pub j: RMat,
    coeffs: Vec<RMat>,
    solver: FiberVelocitySolver,
}

impl TotalPoint {
    pub fn a_along(&self, v: &RVec) -> RMat {
        let k = self.j.nrows();
        let mut out = RMat::zeros(k, k);
        for (i, ai) in self.coeffs.iter().enumerate() {
            if v[i] != 0.0 {
                out += ai * v[i];
            }
        }
        out
    }

    pub fn base_part(&self, udot: &RVec) -> RVec {
        udot.rows(0, self.m).into_owned()
    }

    /// Vertical projection `P(X) = J̇ + [A(v), J]` of a coordinate velocity.
    pub fn vertical_part(&self, udot: &RVec) -> RMat {
        let v = self.base_part(udot);
        let sdot = udot.rows(self.m, udot.len() - self.m).into_owned();
        let jdot = self.solver.from_coords(&sdot);
        let a = self.a_along(&v);
        jdot + &a * &self.j - &self.j * &a
    }

    /// Coordinate velocity with the given base part and vertical projection.
    pub fn coords_from(&self, v: &RVec, vert: &RMat) -> Result<RVec> {
        let a = self.a_along(v);
        let jdot = vert - (&a * &self.j - &self.j * &a);
        let sdot = self.solver.to_coords(&jdot)?;
        Ok(RVec::from_iterator(
            self.m + sdot.len(),
            v.iter().cloned().chain(sdot.iter().cloned()),
        ))
    }

    /// Coordinates of the horizontal lift of a base vector.
    pub fn horizontal_lift(&self, v: &RVec) -> Result<RVec> {
        let k = self.j.nrows();
        self.coords_from(v, &RMat::zeros(k, k))
    }
}

/// `max_v ‖φ ∇_v φ - ∇_{Iv} φ‖` over the given base directions: the
/// holomorphy defect of the section `x -> φ(x)` of the structure bundle,
/// normalized by `1 + ‖∇φ‖`.
pub fn section_holomorphy_residual(
    conn: &Connection,
    i_field: &MatrixField,
    phi: &MatrixField,
    x: &RVec,
    dirs: &[RVec],
    h: f64,
) -> f64 {
    let f = |y: &RVec| phi.eval(y);
    let i = i_field.eval(x);
    let jm = phi.eval(x);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for v in dirs {
        let dv = conn.covariant_end(&f, x, v, h);
        let div = conn.covariant_end(&f, x, &(&i * v), h);
        scale = scale.max(dv.norm()).max(div.norm());
        worst = worst.max((&jm * &dv - &div).norm());
    }
    worst / scale
}

/// Holomorphic-subbundle defect of `E^{0,1}_φ` inside the complexified
/// bundle: `max ‖P^{1,0}_φ ∇^{0,1}_{v̄} M‖` over base directions, where `M`
/// is the smooth spanning frame given by the projector `P^{0,1}_φ(x)` and
/// `∇^{0,1}_{v̄} = (∇_v + i ∇_{Iv})/2` acts columnwise.
pub fn subbundle_holomorphy_residual(
    conn: &Connection,
    i_field: &MatrixField,
    phi: &MatrixField,
    x: &RVec,
    dirs: &[RVec],
    h: f64,
) -> f64 {
    let p01_field = |y: &RVec| projectors(&phi.eval(y)).1;
    let i = i_field.eval(x);
    let (p10_here, _) = projectors(&phi.eval(x));
    let cov = |v: &RVec| {
        let ac = complexify(&conn.coeff_along(x, v));
        central_diff(&p01_field, x, v, h) + ac * p01_field(x)
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for v in dirs {
        let dv = cov(v);
        let div = cov(&(&i * v));
        let dbar = (&dv + &div * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0);
        scale = scale.max(dbar.norm());
        worst = worst.max((&p10_here * &dbar).norm());
    }
    worst / scale
}

/// Kernel dimensions `(dim ker(K - J), dim ker(K + J))` of a pair of
/// structures: the ranks of agreement and anti-agreement, which stratify
/// pairs of fiberwise structures.
pub fn pair_kernel_dims(k: &RMat, j: &RMat) -> (usize, usize) {
    let n = k.nrows();
    let (r_minus, _) = rank_kernel_real(&(k - j), crate::EPS_RANK);
    let (r_plus, _) = rank_kernel_real(&(k + j), crate::EPS_RANK);
    (n - r_minus, n - r_plus)
}
