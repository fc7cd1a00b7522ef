//! The bundle of half-dimensional planes in the complexified bundle, the
//! embedding of the structure bundle into it, and holomorphic bundle
//! isomorphisms between antiholomorphic derivative operators.
//!
//! A fiberwise structure `J` embeds as its `-i` eigenspace `E^{0,1}_J`, a
//! half-dimensional plane transverse to its conjugate. The connection splits
//! plane velocities into a vertical graph velocity and a horizontal part
//! (the velocity of a parallel-transported plane), and the plane bundle
//! carries the structure "multiply vertical graph velocities by `i`, rotate
//! base velocities by `I`". The embedding intertwines this structure with
//! the fibered structure of the total space for any connection; when the
//! curvature is `(1,1)`, charts built from antiholomorphically parallel
//! frames give honest holomorphic coordinates.

use crate::chart::{central_diff, MatrixField};
use crate::conn::Connection;
use crate::fiber::{fiber_embed, GraphChart, Plane};
use crate::linalg::{complexify, projectors};
use crate::twistor::{StructureKind, TotalSpace};
use crate::{C64, CMat, Error, RMat, RVec, Result};
use std::sync::Arc;

/// Parallel transport of an endomorphism along the straight segment
/// `from -> to`: integrates `Φ' = [Φ, A(γ')]` with RK4, independent of the
/// vector transport operator.
pub fn endo_transport(
    conn: &Connection,
    from: &RVec,
    to: &RVec,
    phi0: &RMat,
    steps: usize,
) -> RMat {
    let dir = to - from;
    let mut phi = phi0.clone();
    let dt = 1.0 / steps as f64;
    let f = |t: f64, p: &RMat| -> RMat {
        let x = from + &dir * t;
        let a = conn.coeff_along(&x, &dir);
        p * &a - &a * p
    };
    for s in 0..steps {
        let t = s as f64 * dt;
        let k1 = f(t, &phi);
        let k2 = f(t + 0.5 * dt, &(&phi + &k1 * (0.5 * dt)));
        let k3 = f(t + 0.5 * dt, &(&phi + &k2 * (0.5 * dt)));
        let k4 = f(t + dt, &(&phi + &k3 * dt));
        phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    phi
}

/// Parallel transport of a plane along the straight segment: the complexified
/// vector transport applied to a spanning basis.
pub fn plane_transport(
    conn: &Connection,
    from: &RVec,
    to: &RVec,
    p: &Plane,
    steps: usize,
) -> Result<Plane> {
    let u = complexify(&conn.transport(from, to, steps));
    Plane::from_span(&(u * p.basis()))
}

/// Deviation between the two transport routes out of a structure `j0`:
/// embedding after endomorphism transport versus plane transport after
/// embedding. The embedding maps horizontal curves to horizontal curves, so
/// this vanishes up to integrator error.
pub fn transport_commutation_residual(
    conn: &Connection,
    from: &RVec,
    to: &RVec,
    j0: &RMat,
    steps: usize,
) -> Result<f64> {
    let j1 = endo_transport(conn, from, to, j0, steps);
    crate::linalg::check_acs(&j1, 1e-6)?;
    let via_endo = fiber_embed(&j1)?;
    let via_plane = plane_transport(conn, from, to, &fiber_embed(j0)?, steps)?;
    Ok(crate::fiber::plane_distance(&via_endo, &via_plane))
}

/// Graph-chart velocity of the plane field obtained by parallel transport:
/// the horizontal velocity above the base direction `v`, measured in a chart
/// anchored at the current plane.
pub fn horizontal_plane_velocity(
    conn: &Connection,
    x: &RVec,
    chart: &GraphChart,
    v: &RVec,
) -> CMat {
    let ac = complexify(&conn.coeff_along(x, v));
    chart.velocity_coords(&(-(ac * chart.anchor_basis())))
}

/// The plane-bundle structure applied to a velocity `(v, bdot)` in a graph
/// chart anchored at the current plane: vertical graph velocities rotate by
/// `i`, base velocities by `I`, and horizontal parts follow the base.
pub fn plane_bundle_structure_apply(
    conn: &Connection,
    i: &RMat,
    x: &RVec,
    chart: &GraphChart,
    v: &RVec,
    bdot: &CMat,
) -> (RVec, CMat) {
    let hor_v = horizontal_plane_velocity(conn, x, chart, v);
    let iv = i * v;
    let hor_iv = horizontal_plane_velocity(conn, x, chart, &iv);
    let vert = bdot - &hor_v;
    (iv, vert * C64::new(0.0, 1.0) + hor_iv)
}

/// Finite-difference pushforward of the plane embedding of the total space
/// through a fixed graph chart: the base velocity together with the chart
/// velocity of the embedded plane along the coordinate direction `udot`.
pub fn embedding_pushforward_fd(
    space: &TotalSpace,
    u: &RVec,
    udot: &RVec,
    chart: &GraphChart,
    h: f64,
) -> Result<(RVec, CMat)> {
    let chart = chart.clone();
    let me = space.clone();
    let f = move |y: &RVec| -> CMat {
        let plane = fiber_embed(&me.structure_at(y)).expect("structure stays almost complex");
        chart
            .coords(&plane)
            .expect("embedded plane stays inside the graph chart")
    };
    let bdot = central_diff(&f, u, udot, h);
    let p = space.point(u);
    Ok((p.base_part(udot), bdot))
}

/// `‖Ψ_*(𝒥X) - 𝒥^{Gr}(Ψ_* X)‖ / (1 + ‖Ψ_* X‖)`: the holomorphy defect of
/// the embedding of the total space into the plane bundle, with the fibered
/// structure upstairs and the split plane-bundle structure downstairs.
pub fn embedding_holomorphy_residual(
    space: &TotalSpace,
    u: &RVec,
    udot: &RVec,
    h: f64,
) -> Result<f64> {
    let p = space.point(u);
    let chart = GraphChart::at_acs(&p.j)?;
    let jx = space.apply_structure(StructureKind::Fibered, &p, udot)?;
    let (v_jx, b_jx) = embedding_pushforward_fd(space, u, &jx, &chart, h)?;
    let (v_x, b_x) = embedding_pushforward_fd(space, u, udot, &chart, h)?;
    let i = space.base_structure().eval(&p.x);
    let (iv, b_gr) =
        plane_bundle_structure_apply(space.connection(), &i, &p.x, &chart, &v_x, &b_x);
    let err = (v_jx - iv).norm() + (b_jx - b_gr).norm();
    Ok(err / (1.0 + v_x.norm() + b_x.norm()))
}

/// Chart on the plane bundle built from a pointwise frame of the complexified
/// bundle: plane coordinates are graph coordinates of the plane's coefficient
/// matrix in the frame, against a coefficient-space anchor fixed at chart
/// construction. When the frame is antiholomorphically parallel and the base
/// coordinates are holomorphic for `I`, the chart map is holomorphic.
pub struct FrameChart {
    frame: Arc<dyn Fn(&RVec) -> CMat + Send + Sync>,
    chart: GraphChart,
}

impl FrameChart {
    /// Anchors the chart at the plane embedded from the total coordinates
    /// `u0`, with the conjugate plane (in frame coefficients) as complement.
    pub fn new(
        space: &TotalSpace,
        frame: impl Fn(&RVec) -> CMat + Send + Sync + 'static,
        u0: &RVec,
    ) -> Result<FrameChart> {
        let frame: Arc<dyn Fn(&RVec) -> CMat + Send + Sync> = Arc::new(frame);
        let (x0, _) = space.split_coords(u0);
        let f0 = frame(&x0);
        let inv = f0
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("frame matrix is not invertible".into()))?;
        let plane0 = fiber_embed(&space.structure_at(u0))?;
        let coeff0 = &inv * plane0.basis();
        let anchor = Plane::from_span(&coeff0)?;
        let complement = Plane::from_span(&coeff0.map(|z| z.conj()))?;
        let chart = GraphChart::new(&anchor, &complement)?;
        Ok(FrameChart { frame, chart })
    }

    /// Frame-coefficient graph coordinates of the embedded plane at `u`.
    pub fn coords(&self, space: &TotalSpace, u: &RVec) -> Result<CMat> {
        let (x, _) = space.split_coords(u);
        let f = (self.frame)(&x);
        let inv = f
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("frame matrix is not invertible".into()))?;
        let plane = fiber_embed(&space.structure_at(u))?;
        let coeff = Plane::from_span(&(&inv * plane.basis()))?;
        self.chart.coords(&coeff)
    }

    /// Full chart map `(z(x), B(u))` as a complex column, with interleaved
    /// base coordinates `z_a = x_{2a-1} + i x_{2a}`.
    pub fn map(&self, space: &TotalSpace, u: &RVec) -> Result<CMat> {
        let (x, _) = space.split_coords(u);
        let b = self.coords(space, u)?;
        let half = x.len() / 2;
        let mut out = CMat::zeros(half + b.len(), 1);
        for a in 0..half {
            out[(a, 0)] = C64::new(x[2 * a], x[2 * a + 1]);
        }
        for (k, z) in b.iter().enumerate() {
            out[(half + k, 0)] = *z;
        }
        Ok(out)
    }
}

/// Cauchy-Riemann defect of the frame-chart map at `u` along `udot`:
/// `‖G_*(𝒥X) - i G_*(X)‖ / (1 + ‖G_*(X)‖)`. Requires base coordinates that
/// are holomorphic for the base structure.
pub fn frame_chart_holomorphy_residual(
    space: &TotalSpace,
    fc: &FrameChart,
    u: &RVec,
    udot: &RVec,
    h: f64,
) -> Result<f64> {
    let p = space.point(u);
    let jx = space.apply_structure(StructureKind::Fibered, &p, udot)?;
    let me = space.clone();
    let g = |y: &RVec| -> CMat {
        fc.map(&me, y).expect("chart map defined near the anchor")
    };
    let gx = central_diff(&g, u, udot, h);
    let gjx = central_diff(&g, u, &jx, h);
    let err = (gjx - &gx * C64::new(0.0, 1.0)).norm();
    Ok(err / (1.0 + gx.norm()))
}

/// An antiholomorphic derivative operator `∇^{0,1} + extra` on sections of
/// the complexified bundle: for a real direction `v`,
/// `D_v f = ((∂_v + A(v)) f + i (∂_{Iv} + A(Iv)) f) / 2 + extra(x, v) f`.
/// Sections are complex column matrices over the base chart.
pub struct AntiholomorphicDerivative {
    conn: Connection,
    i_field: MatrixField,
    extra: ExtraTerm,
}

/// Zeroth-order term added to an antiholomorphic derivative: a matrix-valued
/// function of the base point and the direction.
pub type ExtraTerm = Arc<dyn Fn(&RVec, &RVec) -> CMat + Send + Sync>;

impl AntiholomorphicDerivative {
    pub fn new(conn: Connection, i_field: MatrixField) -> AntiholomorphicDerivative {
        let k = conn.rank();
        AntiholomorphicDerivative {
            conn,
            i_field,
            extra: Arc::new(move |_, _| CMat::zeros(k, k)),
        }
    }

    /// Adds a zeroth-order term, already contracted with the direction.
    pub fn with_extra(
        self,
        extra: impl Fn(&RVec, &RVec) -> CMat + Send + Sync + 'static,
    ) -> AntiholomorphicDerivative {
        AntiholomorphicDerivative {
            extra: Arc::new(extra),
            ..self
        }
    }

    pub fn apply(
        &self,
        f: &dyn Fn(&RVec) -> CMat,
        x: &RVec,
        v: &RVec,
        h: f64,
    ) -> CMat {
        let i = self.i_field.eval(x);
        let iv = &i * v;
        let fx = f(x);
        let dv = central_diff(f, x, v, h) + complexify(&self.conn.coeff_along(x, v)) * &fx;
        let div = central_diff(f, x, &iv, h) + complexify(&self.conn.coeff_along(x, &iv)) * &fx;
        (dv + div * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0) + (self.extra)(x, v) * &fx
    }
}

/// `‖D'(T f) - T (D f)‖ / (1 + ‖T (D f)‖)` at `x` along `v`: the defect of
/// `T` as an intertwiner of two antiholomorphic derivative operators.
pub fn intertwining_residual(
    op_src: &AntiholomorphicDerivative,
    op_dst: &AntiholomorphicDerivative,
    t: &(dyn Fn(&RVec) -> CMat + Sync),
    f: &(dyn Fn(&RVec) -> CMat + Sync),
    x: &RVec,
    v: &RVec,
    h: f64,
) -> f64 {
    let tf = |y: &RVec| t(y) * f(y);
    let lhs = op_dst.apply(&tf, x, v, h);
    let rhs = t(x) * op_src.apply(f, x, v, h);
    (&lhs - &rhs).norm() / (1.0 + rhs.norm())
}

/// The fiberwise map `v^{1,0} + v^{0,1} -> v^{1,0} + g'⁻¹ g v^{0,1}`
/// carrying planes compatible with the metric `g` to planes compatible with
/// `g'`. Both metrics must be Hermitian for the same structure `i`.
pub fn metric_change_map(i: &RMat, g: &RMat, gp: &RMat) -> Result<CMat> {
    let (p10, p01) = projectors(i);
    let gp_inv = gp
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("target metric is not invertible".into()))?;
    Ok(p10 + complexify(&(gp_inv * g)) * p01)
}

/// `‖Mᵀ g'_C M - g_C‖`: deviation of `M` from being orthogonal for the
/// complex-bilinear pairings of the two metrics.
pub fn pairing_change_residual(m: &CMat, g: &RMat, gp: &RMat) -> f64 {
    let gc = complexify(g);
    let gpc = complexify(gp);
    (m.transpose() * gpc * m - gc).norm()
}
