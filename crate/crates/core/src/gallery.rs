//! Example geometries with machine-checkable expected verdicts.
//!
//! Each case packages analytic fields on a box chart — metrics, base
//! structures, torsion fluxes, connections — together with a list of named
//! checks. A check runs against sampling parameters and returns a residual;
//! positive checks pass when the residual stays below their tolerance,
//! negative controls pass when the residual exceeds ten times it. The case
//! list covers positive controls (flat spaces, Kähler, SKT, bihermitian,
//! anti-self-dual), engineered failures (a connection with nonvanishing
//! `(0,2)` curvature), the scalar loophole where that failure is invisible,
//! twistor spaces over twistor spaces, and antiholomorphic-twist families.

use crate::chart::{
    central_diff, end_two_form_02_residual, form_type_component_max, kahler_form,
    real_subspace_distance, self_dual_split, torsion_flux, two_form_pq_parts, ChartDomain,
    FormField, FormValue, MatrixField,
};
use crate::conn::{
    flux_twist, hermitian_holomorphic_connection, levi_civita, structure_parallel_modification,
    torsion_shifted, Connection,
};
use crate::fiber::{
    acs_from_plane, embed_pushforward_expected, embed_pushforward_measured, fiber_embed,
    isotropy_residual, standard_center, FiberChart, GraphChart,
};
use crate::grassmann::{
    embedding_holomorphy_residual, intertwining_residual, metric_change_map,
    pairing_change_residual, transport_commutation_residual, AntiholomorphicDerivative,
};
use crate::linalg::{
    anticommutator_basis, projectors, rank_kernel_real, skew_anticommutator_basis, standard_acs,
};
use crate::twistor::{
    pair_kernel_dims, section_holomorphy_residual, subbundle_holomorphy_residual, StructureKind,
    TotalSpace,
};
use crate::{C64, CMat, Error, RMat, RVec, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Sampling parameters shared by all checks of a run.
#[derive(Clone, Copy, Debug)]
pub struct CheckParams {
    pub fd_step: f64,
    pub samples: usize,
}

impl Default for CheckParams {
    fn default() -> CheckParams {
        CheckParams {
            fd_step: 1e-3,
            samples: 40,
        }
    }
}

/// How a residual converts into a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    /// Passes when the residual is at most the tolerance.
    Bound,
    /// Negative control: passes when the residual is at least ten times the
    /// tolerance, reproducing an expected failure with margin.
    Margin,
}

type Runner = Box<dyn Fn(&CheckParams, &mut ChaCha8Rng) -> Result<f64> + Send + Sync>;

/// A named residual computation with its tolerance and verdict convention.
pub struct Check {
    name: &'static str,
    anchor: &'static str,
    tol: f64,
    expectation: Expectation,
    runner: Runner,
}

impl Check {
    pub fn bound(
        name: &'static str,
        anchor: &'static str,
        tol: f64,
        runner: impl Fn(&CheckParams, &mut ChaCha8Rng) -> Result<f64> + Send + Sync + 'static,
    ) -> Check {
        Check {
            name,
            anchor,
            tol,
            expectation: Expectation::Bound,
            runner: Box::new(runner),
        }
    }

    pub fn margin(
        name: &'static str,
        anchor: &'static str,
        tol: f64,
        runner: impl Fn(&CheckParams, &mut ChaCha8Rng) -> Result<f64> + Send + Sync + 'static,
    ) -> Check {
        Check {
            expectation: Expectation::Margin,
            ..Check::bound(name, anchor, tol, runner)
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn anchor(&self) -> &'static str {
        self.anchor
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn expectation(&self) -> Expectation {
        self.expectation
    }

    pub fn run(&self, params: &CheckParams, rng: &mut ChaCha8Rng) -> Result<f64> {
        (self.runner)(params, rng)
    }

    /// Verdict for a computed residual under this check's expectation.
    pub fn passes(&self, residual: f64, tol: f64) -> bool {
        if !residual.is_finite() {
            return false;
        }
        match self.expectation {
            Expectation::Bound => residual <= tol,
            Expectation::Margin => residual >= 10.0 * tol,
        }
    }
}

/// A gallery case: a stable key, a summary, and its checks.
pub struct Case {
    key: &'static str,
    summary: &'static str,
    checks: Vec<Check>,
}

impl Case {
    pub fn key(&self) -> &'static str {
        self.key
    }

    pub fn summary(&self) -> &'static str {
        self.summary
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }
}

/// Stable list of gallery keys, in presentation order.
pub fn case_keys() -> &'static [&'static str] {
    &[
        "flat_cn",
        "complex_curve_any_connection",
        "torus_02_control",
        "scalar_02_loophole",
        "cp1_fubini_study",
        "hopf_skt",
        "flat_hyperkahler_bihermitian",
        "flat_r4_asd",
        "twistor_over_vectorspace",
        "d_twist_family",
    ]
}

/// Builds a gallery case by key.
pub fn build(key: &str) -> Result<Case> {
    match key {
        "flat_cn" => flat_cn(),
        "complex_curve_any_connection" => complex_curve_any_connection(),
        "torus_02_control" => torus_02_control(),
        "scalar_02_loophole" => scalar_02_loophole(),
        "cp1_fubini_study" => cp1_fubini_study(),
        "hopf_skt" => hopf_skt(),
        "flat_hyperkahler_bihermitian" => flat_hyperkahler_bihermitian(),
        "flat_r4_asd" => flat_r4_asd(),
        "twistor_over_vectorspace" => twistor_over_vectorspace(),
        "d_twist_family" => d_twist_family(),
        other => Err(Error::UnknownCase(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// shared residual computations

fn unit_random<R: Rng>(rng: &mut R, n: usize) -> RVec {
    loop {
        let v = RVec::from_fn(n, |_, _| 2.0 * rng.random::<f64>() - 1.0);
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

fn sample_count(params: &CheckParams) -> usize {
    params.samples.max(1)
}

/// Worst `‖M² + 1‖` of the fibered structure matrix over sampled points.
fn worst_involution(space: &Arc<TotalSpace>, params: &CheckParams, rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = space.dim();
    let eye = RMat::identity(n, n);
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(12) {
        let u = space.sample(rng, 0.1, 0.4);
        let m = space.structure_matrix(StructureKind::Fibered, &u)?;
        worst = worst.max((&m * &m + &eye).norm());
    }
    Ok(worst)
}

/// Worst relative deviation between the finite-difference Nijenhuis tensor of
/// the fibered structure and its closed curvature expression, over at least
/// fifty random tangent pairs.
fn worst_oracle_deviation(
    space: &Arc<TotalSpace>,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let pairs = sample_count(params).max(50);
    let n = space.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let u = space.sample(rng, 0.15, 0.35);
        let x = unit_random(rng, n);
        let y = unit_random(rng, n);
        worst = worst.max(space.nijenhuis_deviation(&u, &x, &y, params.fd_step));
    }
    Ok(worst)
}

/// Worst finite-difference Nijenhuis norm of a chosen structure on unit
/// coordinate tangents over sampled points.
fn worst_fd_nijenhuis(
    space: &Arc<TotalSpace>,
    kind: StructureKind,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let n = space.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params) {
        let u = space.sample(rng, 0.15, 0.35);
        let x = unit_random(rng, n);
        let y = unit_random(rng, n);
        let nij = space.nijenhuis_fd_total(kind, &u, &x, &y, params.fd_step);
        worst = worst.max(nij.norm());
    }
    Ok(worst)
}

/// Worst `[R^{0,2}, J] E^{0,1}` obstruction over sampled points.
fn worst_obstruction(
    space: &Arc<TotalSpace>,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params) {
        let u = space.sample(rng, 0.15, 0.35);
        worst = worst.max(space.integrability_residual(&u, params.fd_step));
    }
    Ok(worst)
}

fn worst_phi_section(
    space: &Arc<TotalSpace>,
    kind: StructureKind,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let n = space.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(16) {
        let u = space.sample(rng, 0.15, 0.35);
        let udot = unit_random(rng, n);
        worst = worst.max(space.phi_section_residual(kind, &u, &udot, params.fd_step)?);
    }
    Ok(worst)
}

fn worst_taut_section(
    space: &Arc<TotalSpace>,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let n = space.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(10) {
        let u = space.sample(rng, 0.15, 0.35);
        let udot = unit_random(rng, n);
        worst = worst.max(space.taut_section_residual(StructureKind::Fibered, &u, &udot, params.fd_step)?);
    }
    Ok(worst)
}

fn worst_embedding_holomorphy(
    space: &Arc<TotalSpace>,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let n = space.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(12) {
        let u = space.sample(rng, 0.15, 0.35);
        let udot = unit_random(rng, n);
        worst = worst.max(embedding_holomorphy_residual(space, &u, &udot, params.fd_step)?);
    }
    Ok(worst)
}

/// Worst deviation between the measured graph-chart pushforward of the fiber
/// embedding and the half-rate law, over random structures and tangents.
fn worst_pushforward_law(
    space: &Arc<TotalSpace>,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(20) {
        let u = space.sample(rng, 0.15, 0.45);
        let j = space.structure_at(&u);
        let tangent = crate::linalg::random_tangent(rng, &j);
        let chart = GraphChart::at_acs(&j)?;
        let measured = embed_pushforward_measured(&j, &tangent, &chart, params.fd_step)?;
        let expected = embed_pushforward_expected(&j, &tangent, &chart);
        worst = worst.max((measured - expected).norm());
    }
    Ok(worst)
}

/// Worst complex-bilinear isotropy residual of embedded planes against the
/// base metric field.
fn worst_isotropy(
    space: &Arc<TotalSpace>,
    g: &MatrixField,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params) {
        let u = space.sample(rng, 0.15, 0.45);
        let (x, _) = space.split_coords(&u);
        let plane = fiber_embed(&space.structure_at(&u))?;
        worst = worst.max(isotropy_residual(&plane, &g.eval(&x)));
    }
    Ok(worst)
}

/// Worst `‖acs(plane(J)) - J‖` round trip over sampled fiber points.
fn worst_round_trip(
    space: &Arc<TotalSpace>,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params) {
        let u = space.sample(rng, 0.15, 0.45);
        let j = space.structure_at(&u);
        let back = acs_from_plane(&fiber_embed(&j)?)?;
        worst = worst.max((back - j).norm());
    }
    Ok(worst)
}

/// Worst holomorphy residual of a structure-valued section over sampled base
/// points and coordinate directions.
fn worst_section_holomorphy(
    conn: &Connection,
    i_field: &MatrixField,
    phi: &MatrixField,
    base: &ChartDomain,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let m = base.dim();
    let dirs: Vec<RVec> = (0..m)
        .map(|k| {
            let mut e = RVec::zeros(m);
            e[k] = 1.0;
            e
        })
        .collect();
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(16) {
        let x = base.sample(rng, 0.15);
        worst = worst.max(section_holomorphy_residual(
            conn, i_field, phi, &x, &dirs, params.fd_step,
        ));
    }
    Ok(worst)
}

/// Same section, antiholomorphic-subbundle route.
fn worst_subbundle_holomorphy(
    conn: &Connection,
    i_field: &MatrixField,
    phi: &MatrixField,
    base: &ChartDomain,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let m = base.dim();
    let dirs: Vec<RVec> = (0..m)
        .map(|k| {
            let mut e = RVec::zeros(m);
            e[k] = 1.0;
            e
        })
        .collect();
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(12) {
        let x = base.sample(rng, 0.15);
        worst = worst.max(subbundle_holomorphy_residual(
            conn, i_field, phi, &x, &dirs, params.fd_step,
        ));
    }
    Ok(worst)
}

/// Worst `‖∇_v Φ‖` of an endomorphism field over samples and directions.
fn worst_end_parallel(
    conn: &Connection,
    phi: &MatrixField,
    base: &ChartDomain,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let m = base.dim();
    let f = |x: &RVec| phi.eval(x);
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(16) {
        let x = base.sample(rng, 0.15);
        for k in 0..m {
            let mut e = RVec::zeros(m);
            e[k] = 1.0;
            worst = worst.max(conn.covariant_end(&f, &x, &e, params.fd_step).norm());
        }
    }
    Ok(worst)
}

/// Worst `‖∇_v g‖` over samples and directions.
fn worst_metric_parallel(
    conn: &Connection,
    g: &MatrixField,
    base: &ChartDomain,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let m = base.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(16) {
        let x = base.sample(rng, 0.15);
        for k in 0..m {
            let mut e = RVec::zeros(m);
            e[k] = 1.0;
            worst = worst.max(conn.metric_derivative(g, &x, &e, params.fd_step).norm());
        }
    }
    Ok(worst)
}

/// Worst coefficient-wise difference between two connections over samples.
fn worst_coefficient_gap(
    a: &Connection,
    b: &Connection,
    base: &ChartDomain,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(16) {
        let x = base.sample(rng, 0.15);
        let ca = a.coeffs(&x);
        let cb = b.coeffs(&x);
        for (ma, mb) in ca.iter().zip(cb.iter()) {
            worst = worst.max((ma - mb).norm());
        }
    }
    Ok(worst)
}

/// Worst `(0,2) + (2,0)` curvature residual of a connection against a base
/// structure field, relative to the curvature scale.
fn worst_one_one_curvature(
    conn: &Connection,
    i_field: &MatrixField,
    base: &ChartDomain,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(10) {
        let x = base.sample(rng, 0.15);
        let grid = conn.curvature_grid(&x, params.fd_step);
        worst = worst.max(end_two_form_02_residual(&grid, &i_field.eval(&x)));
    }
    Ok(worst)
}

/// Worst norm of the `(0,2)` part of the curvature over samples and pairs.
fn worst_zero_two_norm(
    conn: &Connection,
    i_field: &MatrixField,
    base: &ChartDomain,
    params: &CheckParams,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let m = base.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count(params).min(8) {
        let x = base.sample(rng, 0.15);
        let grid = conn.curvature_grid(&x, params.fd_step);
        let i = i_field.eval(&x);
        for a in 0..m {
            for b in (a + 1)..m {
                worst = worst.max(crate::chart::end_two_form_02(&grid, &i, a, b).norm());
            }
        }
    }
    Ok(worst)
}

/// Random smooth polynomial connection with coefficients frozen by a seed:
/// `A_i(x) = B0 + B1 x_0 + B2 x_1 (+ skew part only if requested)`.
fn frozen_random_connection(base_dim: usize, rank: usize, seed: u64, scale: f64) -> Connection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let consts: Vec<Vec<RMat>> = (0..base_dim)
        .map(|_| {
            (0..=base_dim)
                .map(|_| crate::linalg::random_matrix(&mut rng, rank, rank, scale))
                .collect()
        })
        .collect();
    Connection::new(base_dim, rank, move |x: &RVec| {
        consts
            .iter()
            .map(|cs| {
                let mut a = cs[0].clone();
                for (k, c) in cs[1..].iter().enumerate() {
                    a += c * x[k];
                }
                a
            })
            .collect()
    })
}

// ---------------------------------------------------------------------------
// case builders

fn coordinate_dirs(m: usize) -> Vec<RVec> {
    (0..m)
        .map(|k| {
            let mut e = RVec::zeros(m);
            e[k] = 1.0;
            e
        })
        .collect()
}

fn standard_structure_field(n: usize) -> MatrixField {
    MatrixField::constant(standard_acs(n))
}

fn identity_metric_field(k: usize) -> MatrixField {
    MatrixField::constant(RMat::identity(k, k))
}

/// `φ(x) · Id_k` with its analytic derivative, for conformal metrics.
fn conformal_metric_field(
    k: usize,
    phi: impl Fn(&RVec) -> f64 + Send + Sync + 'static,
    dphi: impl Fn(&RVec, usize) -> f64 + Send + Sync + 'static,
) -> MatrixField {
    MatrixField::with_derivative(
        move |x| RMat::identity(k, k) * phi(x),
        move |x, c| RMat::identity(k, k) * dphi(x, c),
    )
}

fn general_space(
    base: ChartDomain,
    conn: Connection,
    i_field: MatrixField,
    n: usize,
) -> Result<Arc<TotalSpace>> {
    Ok(Arc::new(TotalSpace::new(
        base,
        conn,
        i_field,
        FiberChart::general(&standard_center(n))?,
    )?))
}

fn metric_space(
    base: ChartDomain,
    conn: Connection,
    i_field: MatrixField,
    n: usize,
) -> Result<Arc<TotalSpace>> {
    let j0 = standard_center(n);
    let g = RMat::identity(2 * n, 2 * n);
    Ok(Arc::new(TotalSpace::new(
        base,
        conn,
        i_field,
        FiberChart::metric(&j0, &g)?,
    )?))
}

/// Number of independent matrices in a list, by the rank of their stack.
fn span_rank(mats: &[RMat]) -> usize {
    if mats.is_empty() {
        return 0;
    }
    let n2 = mats[0].nrows() * mats[0].ncols();
    let mut stack = RMat::zeros(n2, mats.len());
    for (c, m) in mats.iter().enumerate() {
        for (r, v) in m.iter().enumerate() {
            stack[(r, c)] = *v;
        }
    }
    rank_kernel_real(&stack, crate::EPS_RANK).0
}

/// Flat trivial bundles: the twistor fibers have the advertised dimensions,
/// both induced structures are integrable, the standard volume form of the
/// complex 3-space model is pure `(3,0) + (0,3)`, and twisting the flat
/// connection by that pure-type torsion flips which of `±I` is a
/// pseudoholomorphic section.
fn flat_cn() -> Result<Case> {
    let h = 1e-3;
    let space1 = general_space(
        ChartDomain::cube(2, 0.8, h)?,
        Connection::flat(2, 2),
        standard_structure_field(1),
        1,
    )?;
    let space2 = general_space(
        ChartDomain::cube(4, 0.8, h)?,
        Connection::flat(4, 4),
        standard_structure_field(2),
        2,
    )?;
    let space2m = metric_space(
        ChartDomain::cube(4, 0.8, h)?,
        Connection::flat(4, 4),
        standard_structure_field(2),
        2,
    )?;

    // Re(dz1 ∧ dz2 ∧ dz3) on R^6 = C^3 as a constant torsion form.
    let volume3 = FormValue::from_increasing(6, 3, |idx| match idx {
        [0, 2, 4] => 1.0,
        [0, 3, 5] => -1.0,
        [1, 2, 5] => -1.0,
        [1, 3, 4] => -1.0,
        _ => 0.0,
    });
    let volume_field = {
        let v = volume3.clone();
        FormField::new(6, 3, move |_| v.clone())
    };
    let six_chart = ChartDomain::cube(6, 0.8, h)?;
    let twist6 = flux_twist(
        &Connection::flat(6, 6),
        identity_metric_field(6),
        standard_structure_field(3),
        volume_field,
        1.0,
    );
    let i3 = standard_acs(3);

    let mut checks = Vec::new();

    checks.push(Check::bound(
        "fiber_dimension_general",
        "twistor-fiber-dimensions",
        1e-9,
        |_, _| {
            let mut gap = 0.0;
            for n in 1..=3usize {
                let basis = anticommutator_basis(&standard_center(n))?;
                let expected = 2 * n * n;
                gap += (basis.len() as f64 - expected as f64).abs();
                gap += (span_rank(&basis) as f64 - expected as f64).abs();
            }
            Ok(gap)
        },
    ));

    checks.push(Check::bound(
        "fiber_dimension_metric",
        "twistor-fiber-dimensions",
        1e-9,
        |_, _| {
            let mut gap = 0.0;
            for n in 1..=3usize {
                let j0 = standard_center(n);
                let g = RMat::identity(2 * n, 2 * n);
                let basis = skew_anticommutator_basis(&j0, &g)?;
                let expected = n * (n - 1);
                gap += (basis.len() as f64 - expected as f64).abs();
                gap += (span_rank(&basis) as f64 - expected as f64).abs();
            }
            Ok(gap)
        },
    ));

    {
        let (s1, s2) = (space1.clone(), space2.clone());
        checks.push(Check::bound(
            "nijenhuis_oracle_agreement",
            "fibered-structure-nijenhuis-closed-form",
            1e-4,
            move |p, rng| {
                Ok(worst_oracle_deviation(&s1, p, rng)?.max(worst_oracle_deviation(&s2, p, rng)?))
            },
        ));
    }

    {
        let (s1, s2) = (space1.clone(), space2.clone());
        checks.push(Check::bound(
            "twistor_nijenhuis_vanishes",
            "flat-connection-integrability",
            1e-7,
            move |p, rng| {
                Ok(worst_fd_nijenhuis(&s1, StructureKind::Fibered, p, rng)?
                    .max(worst_fd_nijenhuis(&s2, StructureKind::Fibered, p, rng)?))
            },
        ));
    }

    {
        let sm = space2m.clone();
        checks.push(Check::bound(
            "metric_twistor_nijenhuis_vanishes",
            "flat-connection-integrability",
            1e-7,
            move |p, rng| worst_fd_nijenhuis(&sm, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let v = volume3.clone();
        let i3c = i3.clone();
        checks.push(Check::bound(
            "volume_form_is_pure_type",
            "pseudoholomorphic-structure-torsion-type",
            1e-10,
            move |_, _| {
                let m30 = form_type_component_max(&v, &i3c, 3, 0);
                let m03 = form_type_component_max(&v, &i3c, 0, 3);
                let m21 = form_type_component_max(&v, &i3c, 2, 1);
                let m12 = form_type_component_max(&v, &i3c, 1, 2);
                Ok((m30 - 0.5).abs() + (m03 - 0.5).abs() + m21 + m12)
            },
        ));
    }

    {
        let conn = twist6.clone();
        let chart = six_chart.clone();
        let i_field = standard_structure_field(3);
        let phi = MatrixField::constant(-&i3);
        checks.push(Check::bound(
            "pure_torsion_admits_reversed_structure",
            "pseudoholomorphic-structure-torsion-type",
            1e-6,
            move |p, rng| worst_section_holomorphy(&conn, &i_field, &phi, &chart, p, rng),
        ));
    }

    {
        let conn = twist6.clone();
        let chart = six_chart.clone();
        let i_field = standard_structure_field(3);
        let phi = MatrixField::constant(i3.clone());
        checks.push(Check::margin(
            "pure_torsion_rejects_structure",
            "pseudoholomorphic-structure-torsion-type",
            1e-3,
            move |p, rng| worst_section_holomorphy(&conn, &i_field, &phi, &chart, p, rng),
        ));
    }

    {
        let (s1, s2, sm) = (space1, space2, space2m);
        checks.push(Check::bound(
            "structure_involution",
            "twistor-structure-involution",
            1e-9,
            move |p, rng| {
                Ok(worst_involution(&s1, p, rng)?
                    .max(worst_involution(&s2, p, rng)?)
                    .max(worst_involution(&sm, p, rng)?))
            },
        ));
    }

    Ok(Case {
        key: "flat_cn",
        summary: "flat bundles over C^n charts: fiber dimensions, integrability, pure-type torsion twists",
        checks,
    })
}

/// Any connection over a one-complex-dimensional base has vanishing `(0,2)`
/// curvature, so the fibered twistor structure is integrable and the
/// associated section/embedding statements all hold.
fn complex_curve_any_connection() -> Result<Case> {
    let h = 1e-3;
    let base = ChartDomain::cube(2, 0.7, h)?;
    let conn4 = frozen_random_connection(2, 4, 0xC01, 0.6);
    let conn2 = frozen_random_connection(2, 2, 0xC02, 0.6);
    let space4 = general_space(base.clone(), conn4.clone(), standard_structure_field(1), 2)?;
    let space2 = general_space(base.clone(), conn2.clone(), standard_structure_field(1), 1)?;

    let mut checks = Vec::new();

    {
        let (s4, s2) = (space4.clone(), space2.clone());
        checks.push(Check::bound(
            "nijenhuis_oracle_agreement",
            "fibered-structure-nijenhuis-closed-form",
            1e-4,
            move |p, rng| {
                Ok(worst_oracle_deviation(&s4, p, rng)?.max(worst_oracle_deviation(&s2, p, rng)?))
            },
        ));
    }

    {
        let (s4, s2) = (space4.clone(), space2.clone());
        checks.push(Check::bound(
            "twistor_nijenhuis_vanishes",
            "curve-base-integrability",
            1e-5,
            move |p, rng| {
                Ok(worst_fd_nijenhuis(&s4, StructureKind::Fibered, p, rng)?
                    .max(worst_fd_nijenhuis(&s2, StructureKind::Fibered, p, rng)?))
            },
        ));
    }

    {
        let conn = conn4.clone();
        let base_c = base.clone();
        let i_field = standard_structure_field(1);
        checks.push(Check::bound(
            "curvature_02_part_vanishes",
            "curve-base-integrability",
            1e-9,
            move |p, rng| worst_zero_two_norm(&conn, &i_field, &base_c, p, rng),
        ));
    }

    {
        let (s4, s2) = (space4.clone(), space2.clone());
        checks.push(Check::bound(
            "phi_section_holomorphy",
            "tautological-endomorphism-section",
            1e-5,
            move |p, rng| {
                Ok(worst_phi_section(&s4, StructureKind::Fibered, p, rng)?
                    .max(worst_phi_section(&s2, StructureKind::Fibered, p, rng)?))
            },
        ));
    }

    {
        let s2 = space2.clone();
        checks.push(Check::bound(
            "taut_section_holomorphy",
            "tautological-section-always-pseudoholomorphic",
            1e-5,
            move |p, rng| worst_taut_section(&s2, p, rng),
        ));
    }

    {
        let s4 = space4.clone();
        checks.push(Check::bound(
            "embedding_holomorphy",
            "grassmann-embedding-holomorphic",
            1e-5,
            move |p, rng| worst_embedding_holomorphy(&s4, p, rng),
        ));
    }

    {
        let s4 = space4.clone();
        checks.push(Check::bound(
            "pushforward_half_law",
            "halfplane-pushforward-law",
            1e-6,
            move |p, rng| worst_pushforward_law(&s4, p, rng),
        ));
    }

    {
        let s4 = space4.clone();
        checks.push(Check::bound(
            "plane_round_trip",
            "grassmann-embedding-holomorphic",
            1e-9,
            move |p, rng| worst_round_trip(&s4, p, rng),
        ));
    }

    {
        let conn = conn4.clone();
        let base_c = base.clone();
        checks.push(Check::bound(
            "transport_commutes_with_embedding",
            "transport-commutes-with-embedding",
            1e-7,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(6) {
                    let from = base_c.sample(rng, 0.1);
                    let to = base_c.sample(rng, 0.1);
                    let j0 = crate::linalg::random_acs(rng, 4)?;
                    worst =
                        worst.max(transport_commutation_residual(&conn, &from, &to, &j0, 400)?);
                }
                Ok(worst)
            },
        ));
    }

    {
        let (s4, s2) = (space4, space2);
        checks.push(Check::bound(
            "structure_involution",
            "twistor-structure-involution",
            1e-9,
            move |p, rng| Ok(worst_involution(&s4, p, rng)?.max(worst_involution(&s2, p, rng)?)),
        ));
    }

    Ok(Case {
        key: "complex_curve_any_connection",
        summary: "random polynomial connections over a complex curve: automatic integrability and holomorphic embeddings",
        checks,
    })
}

fn control_block() -> RMat {
    // skew matrix anticommuting with the standard structure, so its
    // commutator with nearby fiber structures stays bounded away from zero
    let mut k = RMat::zeros(4, 4);
    k[(0, 3)] = -1.0;
    k[(3, 0)] = 1.0;
    k[(1, 2)] = -1.0;
    k[(2, 1)] = 1.0;
    k
}

fn control_connection() -> Connection {
    let e4 = control_block();
    Connection::new(4, 4, move |x| {
        vec![
            &e4 * (2.0 * x[2]),
            &e4 * (-2.0 * x[3]),
            RMat::zeros(4, 4),
            RMat::zeros(4, 4),
        ]
    })
}

/// Negative control: a metric connection over the 4-torus chart whose
/// curvature is pure `(2,0) + (0,2)` and does not commute with generic fiber
/// structures, so both twistor structures are visibly non-integrable away
/// from the chart center.
fn torus_02_control() -> Result<Case> {
    let h = 1e-3;
    let base = ChartDomain::cube(4, 0.75, h)?;
    let conn = control_connection();
    let i_field = standard_structure_field(2);
    let metric = metric_space(base.clone(), conn.clone(), i_field.clone(), 2)?;
    let general = general_space(base.clone(), conn.clone(), i_field.clone(), 2)?;

    // frozen witness away from the center, where the fiber structure no
    // longer commutes with the curvature
    let x_w = RVec::from_vec(vec![0.2, -0.3, 0.4, 0.1]);
    let s_w = vec![0.3, -0.25];
    let u_w = metric.join_coords(&x_w, &s_w);

    let mut checks = Vec::new();

    {
        let sm = metric.clone();
        let u = u_w.clone();
        checks.push(Check::margin(
            "metric_nijenhuis_witness",
            "metric-twistor-integrability-iff-one-one",
            1e-3,
            move |p, _| {
                let m = sm.dim();
                let mut e0 = RVec::zeros(m);
                e0[0] = 1.0;
                let mut e2 = RVec::zeros(m);
                e2[2] = 1.0;
                Ok(sm
                    .nijenhuis_fd_total(StructureKind::Fibered, &u, &e0, &e2, p.fd_step)
                    .norm())
            },
        ));
    }

    {
        let sm = metric.clone();
        let u = u_w.clone();
        checks.push(Check::margin(
            "obstruction_witness",
            "integrability-commutator-criterion",
            1e-3,
            move |p, _| Ok(sm.integrability_residual(&u, p.fd_step)),
        ));
    }

    {
        let sg = general.clone();
        checks.push(Check::margin(
            "general_twistor_also_obstructed",
            "integrability-commutator-criterion",
            1e-3,
            move |p, rng| worst_fd_nijenhuis(&sg, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let (sm, sg) = (metric.clone(), general.clone());
        checks.push(Check::bound(
            "nijenhuis_oracle_agreement",
            "fibered-structure-nijenhuis-closed-form",
            1e-4,
            move |p, rng| {
                Ok(worst_oracle_deviation(&sm, p, rng)?.max(worst_oracle_deviation(&sg, p, rng)?))
            },
        ));
    }

    {
        let conn_c = conn.clone();
        let base_c = base.clone();
        let i_c = i_field.clone();
        checks.push(Check::margin(
            "curvature_02_part_nonzero",
            "integrability-commutator-criterion",
            1e-2,
            move |p, rng| worst_zero_two_norm(&conn_c, &i_c, &base_c, p, rng),
        ));
    }

    {
        let conn_c = conn.clone();
        let base_c = base.clone();
        let g = identity_metric_field(4);
        checks.push(Check::bound(
            "metric_compatible_connection",
            "metric-twistor-integrability-iff-one-one",
            1e-10,
            move |p, rng| worst_metric_parallel(&conn_c, &g, &base_c, p, rng),
        ));
    }

    {
        let (sm, sg) = (metric, general);
        checks.push(Check::bound(
            "structure_involution",
            "twistor-structure-involution",
            1e-9,
            move |p, rng| Ok(worst_involution(&sm, p, rng)?.max(worst_involution(&sg, p, rng)?)),
        ));
    }

    Ok(Case {
        key: "torus_02_control",
        summary: "curvature with a pure (2,0)+(0,2) part: the expected failure of twistor integrability",
        checks,
    })
}

/// The loophole to the negative control: scalar-valued `(0,2)` curvature
/// commutes with every fiber structure, so the twistor space is integrable
/// even though the `(0,2)` part of the curvature is nonzero.
fn scalar_02_loophole() -> Result<Case> {
    let h = 1e-3;
    let base = ChartDomain::cube(4, 0.75, h)?;
    let conn = Connection::new(4, 2, |x: &RVec| {
        vec![
            RMat::identity(2, 2) * (2.0 * x[2]),
            RMat::identity(2, 2) * (-2.0 * x[3]),
            RMat::zeros(2, 2),
            RMat::zeros(2, 2),
        ]
    });
    let i_field = standard_structure_field(2);
    let space = general_space(base.clone(), conn.clone(), i_field.clone(), 1)?;
    let flat_space = Arc::new(space.with_connection(Connection::flat(4, 2))?);

    let mut checks = Vec::new();

    {
        let s = space.clone();
        checks.push(Check::bound(
            "twistor_nijenhuis_vanishes",
            "scalar-zero-two-loophole",
            1e-5,
            move |p, rng| worst_fd_nijenhuis(&s, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let conn_c = conn.clone();
        let base_c = base.clone();
        let i_c = i_field.clone();
        checks.push(Check::margin(
            "curvature_02_part_nonzero",
            "scalar-zero-two-loophole",
            1e-2,
            move |p, rng| worst_zero_two_norm(&conn_c, &i_c, &base_c, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "obstruction_commutator_vanishes",
            "integrability-commutator-criterion",
            1e-10,
            move |p, rng| worst_obstruction(&s, p, rng),
        ));
    }

    {
        let (s, f) = (space.clone(), flat_space);
        checks.push(Check::bound(
            "scalar_shift_invariance",
            "scalar-zero-two-loophole",
            1e-10,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(12) {
                    let u = s.sample(rng, 0.15, 0.4);
                    let a = s.structure_matrix(StructureKind::Fibered, &u)?;
                    let b = f.structure_matrix(StructureKind::Fibered, &u)?;
                    worst = worst.max((a - b).norm());
                }
                Ok(worst)
            },
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "nijenhuis_oracle_agreement",
            "fibered-structure-nijenhuis-closed-form",
            1e-4,
            move |p, rng| worst_oracle_deviation(&s, p, rng),
        ));
    }

    {
        let s = space;
        checks.push(Check::bound(
            "structure_involution",
            "twistor-structure-involution",
            1e-9,
            move |p, rng| worst_involution(&s, p, rng),
        ));
    }

    Ok(Case {
        key: "scalar_02_loophole",
        summary: "nonzero (0,2) curvature that commutes with everything: integrability survives",
        checks,
    })
}

/// Fubini–Study metric on an affine chart of the projective line: Chern and
/// Levi-Civita connections agree, the scalar curvature is 8, and the twistor
/// space of the tangent bundle is integrable.
fn cp1_fubini_study() -> Result<Case> {
    let h = 1e-3;
    let base = ChartDomain::cube(2, 0.7, h)?;
    let phi = |x: &RVec| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        1.0 / ((1.0 + r2) * (1.0 + r2))
    };
    let dphi = |x: &RVec, k: usize| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        -4.0 * x[k] / (1.0 + r2).powi(3)
    };
    let gfield = conformal_metric_field(2, phi, dphi);
    let i_field = standard_structure_field(1);
    let lc = levi_civita(2, gfield.clone(), h);
    let chern = hermitian_holomorphic_connection(
        1,
        move |x: &RVec| CMat::from_element(1, 1, C64::new(phi(x), 0.0)),
        h,
    );
    let space = general_space(base.clone(), lc.clone(), i_field.clone(), 1)?;

    let mut checks = Vec::new();

    {
        let (a, b, chart) = (chern.clone(), lc.clone(), base.clone());
        checks.push(Check::bound(
            "chern_equals_levi_civita",
            "kahler-chern-is-levi-civita",
            1e-6,
            move |p, rng| worst_coefficient_gap(&a, &b, &chart, p, rng),
        ));
    }

    {
        let (conn, g, chart) = (lc.clone(), gfield.clone(), base.clone());
        checks.push(Check::bound(
            "scalar_curvature_oracle",
            "fubini-study-curvature",
            1e-6,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(12) {
                    let x = chart.sample(rng, 0.15);
                    let r = conn.curvature(&x, 0, 1, p.fd_step);
                    let gm = g.eval(&x);
                    let re1 = r.column(1).into_owned();
                    let inner = (gm.row(0) * &re1)[(0, 0)];
                    let det = gm[(0, 0)] * gm[(1, 1)] - gm[(0, 1)] * gm[(1, 0)];
                    worst = worst.max((2.0 * inner / det - 8.0).abs());
                }
                Ok(worst)
            },
        ));
    }

    {
        let (conn, g, chart) = (lc.clone(), gfield.clone(), base.clone());
        checks.push(Check::bound(
            "levi_civita_metric_parallel",
            "kahler-chern-is-levi-civita",
            1e-8,
            move |p, rng| worst_metric_parallel(&conn, &g, &chart, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "twistor_nijenhuis_vanishes",
            "metric-twistor-integrability-iff-one-one",
            1e-5,
            move |p, rng| worst_fd_nijenhuis(&s, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "nijenhuis_oracle_agreement",
            "fibered-structure-nijenhuis-closed-form",
            1e-4,
            move |p, rng| worst_oracle_deviation(&s, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "embedding_holomorphy",
            "grassmann-embedding-holomorphic",
            1e-5,
            move |p, rng| worst_embedding_holomorphy(&s, p, rng),
        ));
    }

    {
        let s = space;
        checks.push(Check::bound(
            "structure_involution",
            "twistor-structure-involution",
            1e-9,
            move |p, rng| worst_involution(&s, p, rng),
        ));
    }

    Ok(Case {
        key: "cp1_fubini_study",
        summary: "Fubini-Study on the projective line: Kahler control with curvature oracle",
        checks,
    })
}

/// Conformally flat metric on an annular chart of `C^2 \ {0}`: the standard
/// compact SKT example. The torsion flux matches a closed-form model, is
/// closed and of mixed type, the Bismut pair behaves as expected, the flux
/// twist of the Chern connection reproduces the minus connection, and all
/// section/embedding statements hold on the metric twistor space.
fn hopf_skt() -> Result<Case> {
    let h = 1e-3;
    let base = ChartDomain::new(RVec::from_element(4, 0.5), RVec::from_element(4, 1.3), h)?;
    let phi = |x: &RVec| 1.0 / x.norm_squared();
    let dphi = |x: &RVec, k: usize| {
        let r2 = x.norm_squared();
        -2.0 * x[k] / (r2 * r2)
    };
    let gfield = conformal_metric_field(4, phi, dphi);
    let i2 = standard_acs(2);
    let i_field = standard_structure_field(2);
    let flux = torsion_flux(&gfield, &i_field, 4, h);
    let lc = levi_civita(4, gfield.clone(), h);
    let plus = torsion_shifted(&lc, gfield.clone(), flux.clone(), 1.0);
    let minus = torsion_shifted(&lc, gfield.clone(), flux.clone(), -1.0);
    let chern = hermitian_holomorphic_connection(
        2,
        move |x: &RVec| CMat::identity(2, 2) * C64::new(phi(x), 0.0),
        h,
    );
    let twist_minus = flux_twist(&chern, gfield.clone(), i_field.clone(), flux.clone(), -1.0);
    let tspace = Arc::new(TotalSpace::new(
        base.clone(),
        minus.clone(),
        i_field.clone(),
        FiberChart::metric(&standard_center(2), &RMat::identity(4, 4))?,
    )?);

    // Closed-form model of the torsion: with s = |x|^2,
    // H = (2/s^2)(-x_3 dx_012 + x_2 dx_013 - x_1 dx_023 + x_0 dx_123).
    let h_analytic = FormField::new(4, 3, |x: &RVec| {
        let s = x.norm_squared();
        let c = 2.0 / (s * s);
        let (x0, x1, x2, x3) = (x[0], x[1], x[2], x[3]);
        FormValue::from_increasing(4, 3, move |idx| match idx {
            [0, 1, 2] => -x3 * c,
            [0, 1, 3] => x2 * c,
            [0, 2, 3] => -x1 * c,
            [1, 2, 3] => x0 * c,
            _ => 0.0,
        })
    });

    // metric rescaled by a non-constant conformal factor
    let gp_field = MatrixField::with_derivative(
        move |x: &RVec| RMat::identity(4, 4) * (x[0].exp() * phi(x)),
        move |x: &RVec, k: usize| {
            let f = x[0].exp();
            let d = f * dphi(x, k) + if k == 0 { f * phi(x) } else { 0.0 };
            RMat::identity(4, 4) * d
        },
    );
    let chern_p = hermitian_holomorphic_connection(
        2,
        move |x: &RVec| CMat::identity(2, 2) * C64::new(x[0].exp() * phi(x), 0.0),
        h,
    );

    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];

    let mut checks = Vec::new();

    {
        let (f, fa, chart) = (flux.clone(), h_analytic.clone(), base.clone());
        checks.push(Check::bound(
            "flux_matches_analytic_model",
            "skt-bismut-torsion",
            1e-6,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(20) {
                    let x = chart.sample(rng, 0.15);
                    let (vf, va) = (f.eval(&x), fa.eval(&x));
                    for t in TRIPLES.iter() {
                        worst = worst.max((vf.get(t) - va.get(t)).abs());
                    }
                }
                Ok(worst)
            },
        ));
    }

    {
        let (f, chart) = (flux.clone(), base.clone());
        checks.push(Check::bound(
            "flux_is_closed",
            "skt-bismut-torsion",
            1e-6,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(10) {
                    let x = chart.sample(rng, 0.15);
                    worst = worst.max(f.exterior_derivative(&x, p.fd_step).max_abs());
                }
                Ok(worst)
            },
        ));
    }

    {
        let (f, chart) = (flux.clone(), base.clone());
        let i2c = i2.clone();
        checks.push(Check::bound(
            "flux_type_is_mixed",
            "pseudoholomorphic-structure-torsion-type",
            1e-8,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(10) {
                    let x = chart.sample(rng, 0.15);
                    let v = f.eval(&x);
                    worst = worst
                        .max(form_type_component_max(&v, &i2c, 3, 0))
                        .max(form_type_component_max(&v, &i2c, 0, 3));
                }
                Ok(worst)
            },
        ));
    }

    {
        let (conn, chart) = (plus.clone(), base.clone());
        let phi_i = standard_structure_field(2);
        checks.push(Check::bound(
            "bismut_plus_preserves_structure",
            "skt-bismut-torsion",
            1e-6,
            move |p, rng| worst_end_parallel(&conn, &phi_i, &chart, p, rng),
        ));
    }

    {
        let (cp, cm, g, chart) = (plus.clone(), minus.clone(), gfield.clone(), base.clone());
        checks.push(Check::bound(
            "bismut_pair_metric_parallel",
            "skt-bismut-torsion",
            1e-7,
            move |p, rng| {
                Ok(worst_metric_parallel(&cp, &g, &chart, p, rng)?
                    .max(worst_metric_parallel(&cm, &g, &chart, p, rng)?))
            },
        ));
    }

    {
        let (conn, g, chart) = (chern.clone(), gfield.clone(), base.clone());
        let phi_i = standard_structure_field(2);
        checks.push(Check::bound(
            "chern_parallel",
            "kahler-chern-is-levi-civita",
            1e-7,
            move |p, rng| {
                Ok(worst_end_parallel(&conn, &phi_i, &chart, p, rng)?
                    .max(worst_metric_parallel(&conn, &g, &chart, p, rng)?))
            },
        ));
    }

    {
        let (a, b, chart) = (twist_minus.clone(), minus.clone(), base.clone());
        checks.push(Check::bound(
            "twist_minus_matches_bismut_minus",
            "chern-flux-twist-is-minus-connection",
            1e-6,
            move |p, rng| worst_coefficient_gap(&a, &b, &chart, p, rng),
        ));
    }

    {
        let (conn, chart, i_c) = (minus.clone(), base.clone(), i_field.clone());
        checks.push(Check::bound(
            "minus_curvature_one_one",
            "skt-minus-curvature-one-one",
            1e-5,
            move |p, rng| worst_one_one_curvature(&conn, &i_c, &chart, p, rng),
        ));
    }

    {
        let (conn, chart, i_c) = (plus.clone(), base.clone(), i_field.clone());
        checks.push(Check::bound(
            "plus_curvature_one_one",
            "skt-bismut-torsion",
            1e-5,
            move |p, rng| worst_one_one_curvature(&conn, &i_c, &chart, p, rng),
        ));
    }

    {
        let s = tspace.clone();
        checks.push(Check::bound(
            "twistor_nijenhuis_vanishes",
            "metric-twistor-integrability-iff-one-one",
            1e-5,
            move |p, rng| worst_fd_nijenhuis(&s, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let s = tspace.clone();
        checks.push(Check::bound(
            "nijenhuis_oracle_agreement",
            "fibered-structure-nijenhuis-closed-form",
            1e-4,
            move |p, rng| worst_oracle_deviation(&s, p, rng),
        ));
    }

    {
        let (conn, chart) = (minus.clone(), base.clone());
        let i_c = i_field.clone();
        let phi_sec = standard_structure_field(2);
        checks.push(Check::bound(
            "section_structure_holomorphic",
            "skt-structure-section-holomorphic",
            1e-5,
            move |p, rng| worst_section_holomorphy(&conn, &i_c, &phi_sec, &chart, p, rng),
        ));
    }

    {
        let (conn, chart) = (minus.clone(), base.clone());
        let i_c = i_field.clone();
        let phi_sec = standard_structure_field(2);
        checks.push(Check::bound(
            "section_subbundle_route_agrees",
            "holomorphic-subbundle-route",
            1e-5,
            move |p, rng| worst_subbundle_holomorphy(&conn, &i_c, &phi_sec, &chart, p, rng),
        ));
    }

    {
        let (conn, chart) = (minus.clone(), base.clone());
        let i_c = i_field.clone();
        let phi_sec = MatrixField::constant(-standard_acs(2));
        checks.push(Check::margin(
            "section_reversed_structure_rejected",
            "skt-structure-section-holomorphic",
            1e-3,
            move |p, rng| worst_section_holomorphy(&conn, &i_c, &phi_sec, &chart, p, rng),
        ));
    }

    {
        let s = tspace.clone();
        checks.push(Check::bound(
            "phi_section_holomorphy",
            "tautological-endomorphism-section",
            1e-5,
            move |p, rng| worst_phi_section(&s, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let s = tspace.clone();
        checks.push(Check::bound(
            "taut_section_holomorphy",
            "tautological-section-always-pseudoholomorphic",
            1e-5,
            move |p, rng| worst_taut_section(&s, p, rng),
        ));
    }

    {
        let s = tspace.clone();
        checks.push(Check::bound(
            "embedding_holomorphy",
            "grassmann-embedding-holomorphic",
            1e-5,
            move |p, rng| worst_embedding_holomorphy(&s, p, rng),
        ));
    }

    {
        let s = tspace.clone();
        checks.push(Check::bound(
            "pushforward_half_law",
            "halfplane-pushforward-law",
            1e-6,
            move |p, rng| worst_pushforward_law(&s, p, rng),
        ));
    }

    {
        let (s, g) = (tspace.clone(), gfield.clone());
        checks.push(Check::bound(
            "plane_isotropy",
            "metric-twistor-isotropic-planes",
            1e-9,
            move |p, rng| worst_isotropy(&s, &g, p, rng),
        ));
    }

    {
        let s = tspace.clone();
        checks.push(Check::bound(
            "plane_round_trip",
            "grassmann-embedding-holomorphic",
            1e-9,
            move |p, rng| worst_round_trip(&s, p, rng),
        ));
    }

    let modified = structure_parallel_modification(&minus, i_field.clone(), h);

    {
        let (conn, chart) = (modified.clone(), base.clone());
        let phi_i = standard_structure_field(2);
        checks.push(Check::bound(
            "parallel_modification_fixes_structure",
            "parallel-modification-equals-chern",
            1e-6,
            move |p, rng| worst_end_parallel(&conn, &phi_i, &chart, p, rng),
        ));
    }

    {
        let (a, b, chart) = (modified, chern.clone(), base.clone());
        checks.push(Check::bound(
            "parallel_modification_equals_chern",
            "parallel-modification-equals-chern",
            1e-6,
            move |p, rng| worst_coefficient_gap(&a, &b, &chart, p, rng),
        ));
    }

    {
        let (g, gp, chart) = (gfield.clone(), gp_field.clone(), base.clone());
        let (d_src, d_dst) = (
            AntiholomorphicDerivative::new(chern.clone(), i_field.clone()),
            AntiholomorphicDerivative::new(chern_p.clone(), i_field.clone()),
        );
        let i2c = i2.clone();
        checks.push(Check::bound(
            "rescaled_metric_intertwines",
            "metric-rescaling-biholomorphism",
            1e-7,
            move |p, rng| {
                let t = |x: &RVec| {
                    metric_change_map(&i2c, &g.eval(x), &gp.eval(x))
                        .expect("rescaled metric is invertible")
                };
                let sections: [&(dyn Fn(&RVec) -> CMat + Sync); 2] = [
                    &|x: &RVec| {
                        CMat::from_fn(4, 1, |r, _| match r {
                            0 => C64::new(x[0], x[1]) * C64::new(x[0], x[1]),
                            1 => C64::new(x[2], -x[3]),
                            2 => C64::new(1.0, 0.0) + C64::new(x[0], x[1]) * C64::new(x[2], x[3]),
                            _ => C64::new(x[2], x[3]),
                        })
                    },
                    &|_: &RVec| {
                        CMat::from_fn(4, 1, |r, _| match r {
                            0 => C64::new(1.0, 0.0),
                            1 => C64::new(0.0, 1.0),
                            2 => C64::new(0.0, 0.0),
                            _ => C64::new(0.0, 2.0),
                        })
                    },
                ];
                let dirs = coordinate_dirs(4);
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(8) {
                    let x = chart.sample(rng, 0.15);
                    for f in sections.iter() {
                        for v in &dirs {
                            worst = worst.max(intertwining_residual(
                                &d_src, &d_dst, &t, *f, &x, v, p.fd_step,
                            ));
                        }
                    }
                }
                Ok(worst)
            },
        ));
    }

    {
        let (g, gp, chart) = (gfield.clone(), gp_field.clone(), base.clone());
        let i2c = i2.clone();
        checks.push(Check::bound(
            "rescaled_metric_map_orthogonal",
            "metric-rescaling-biholomorphism",
            1e-10,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p) {
                    let x = chart.sample(rng, 0.15);
                    let t = metric_change_map(&i2c, &g.eval(&x), &gp.eval(&x))?;
                    worst = worst.max(pairing_change_residual(&t, &g.eval(&x), &gp.eval(&x)));
                }
                Ok(worst)
            },
        ));
    }

    {
        let (s, g, gp) = (tspace.clone(), gfield.clone(), gp_field.clone());
        let i2c = i2.clone();
        checks.push(Check::bound(
            "rescaled_metric_preserves_isotropy",
            "metric-rescaling-biholomorphism",
            1e-9,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(20) {
                    let u = s.sample(rng, 0.15, 0.45);
                    let (x, _) = s.split_coords(&u);
                    let t = metric_change_map(&i2c, &g.eval(&x), &gp.eval(&x))?;
                    let plane = fiber_embed(&s.structure_at(&u))?;
                    let mapped = crate::fiber::Plane::from_span(&(t * plane.basis()))?;
                    worst = worst.max(isotropy_residual(&mapped, &gp.eval(&x)));
                }
                Ok(worst)
            },
        ));
    }

    {
        let s = tspace;
        checks.push(Check::bound(
            "structure_involution",
            "twistor-structure-involution",
            1e-9,
            move |p, rng| worst_involution(&s, p, rng),
        ));
    }

    Ok(Case {
        key: "hopf_skt",
        summary: "conformally flat annulus in C^2: the SKT example with Bismut/Chern connections and metric rescaling",
        checks,
    })
}

/// Flat metric with two anticommuting parallel structures: the degenerate
/// (torsion-free) bihermitian situation. Everything vanishes identically and
/// both twistor spaces are integrable.
fn flat_hyperkahler_bihermitian() -> Result<Case> {
    let h = 1e-3;
    let base = ChartDomain::cube(4, 0.8, h)?;
    let conn = Connection::flat(4, 4);
    let j_plus = standard_acs(2);
    let j_minus = RMat::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, -1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, -1.0, 0.0, 0.0,
        ],
    );
    let delta = RMat::identity(4, 4);
    let plus_space = Arc::new(TotalSpace::new(
        base.clone(),
        conn.clone(),
        MatrixField::constant(j_plus.clone()),
        FiberChart::metric(&j_plus, &delta)?,
    )?);
    let minus_space = Arc::new(TotalSpace::new(
        base.clone(),
        conn.clone(),
        MatrixField::constant(j_minus.clone()),
        FiberChart::metric(&j_minus, &delta)?,
    )?);

    let mut checks = Vec::new();

    {
        let (conn_c, chart) = (conn.clone(), base.clone());
        let (fp, fm) = (
            MatrixField::constant(j_plus.clone()),
            MatrixField::constant(j_minus.clone()),
        );
        checks.push(Check::bound(
            "bismut_pair_parallel_structures",
            "bihermitian-parallel-pair",
            1e-12,
            move |p, rng| {
                Ok(worst_end_parallel(&conn_c, &fp, &chart, p, rng)?
                    .max(worst_end_parallel(&conn_c, &fm, &chart, p, rng)?))
            },
        ));
    }

    {
        let chart = base.clone();
        let (fp, fm) = (
            MatrixField::constant(j_plus.clone()),
            MatrixField::constant(j_minus.clone()),
        );
        let g = identity_metric_field(4);
        checks.push(Check::bound(
            "torsion_flux_vanishes",
            "bihermitian-parallel-pair",
            1e-10,
            move |p, rng| {
                let hp = torsion_flux(&g, &fp, 4, p.fd_step);
                let hm = torsion_flux(&g, &fm, 4, p.fd_step);
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(10) {
                    let x = chart.sample(rng, 0.15);
                    worst = worst.max(hp.eval(&x).max_abs()).max(hm.eval(&x).max_abs());
                }
                Ok(worst)
            },
        ));
    }

    {
        let s = plus_space.clone();
        checks.push(Check::bound(
            "plus_space_nijenhuis_vanishes",
            "flat-connection-integrability",
            1e-7,
            move |p, rng| worst_fd_nijenhuis(&s, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let s = minus_space.clone();
        checks.push(Check::bound(
            "minus_space_nijenhuis_vanishes",
            "flat-connection-integrability",
            1e-7,
            move |p, rng| worst_fd_nijenhuis(&s, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let (conn_c, chart) = (conn.clone(), base.clone());
        let f = MatrixField::constant(j_plus.clone());
        checks.push(Check::bound(
            "section_plus_holomorphic",
            "skt-structure-section-holomorphic",
            1e-12,
            move |p, rng| worst_section_holomorphy(&conn_c, &f, &f, &chart, p, rng),
        ));
    }

    {
        let (conn_c, chart) = (conn.clone(), base.clone());
        let f = MatrixField::constant(j_minus.clone());
        checks.push(Check::bound(
            "section_minus_holomorphic",
            "skt-structure-section-holomorphic",
            1e-12,
            move |p, rng| worst_section_holomorphy(&conn_c, &f, &f, &chart, p, rng),
        ));
    }

    {
        let s = plus_space.clone();
        checks.push(Check::bound(
            "nijenhuis_oracle_agreement",
            "fibered-structure-nijenhuis-closed-form",
            1e-4,
            move |p, rng| worst_oracle_deviation(&s, p, rng),
        ));
    }

    {
        let (sp, sm) = (plus_space, minus_space);
        checks.push(Check::bound(
            "structure_involution",
            "twistor-structure-involution",
            1e-9,
            move |p, rng| Ok(worst_involution(&sp, p, rng)?.max(worst_involution(&sm, p, rng)?)),
        ));
    }

    Ok(Case {
        key: "flat_hyperkahler_bihermitian",
        summary: "flat metric with two anticommuting parallel structures: degenerate bihermitian control",
        checks,
    })
}

/// Flat 4-space as the simplest anti-self-dual geometry: the anti-self-dual
/// forms are exactly the traceless `(1,1)` forms, both twistor structures on
/// the metric twistor space are integrable, the tautological endomorphism is
/// holomorphic for both, and the lifted modified connection is `(1,1)` with
/// a parallel tautological structure.
fn flat_r4_asd() -> Result<Case> {
    let h = 1e-3;
    let base = ChartDomain::cube(4, 0.8, h)?;
    let conn = Connection::flat(4, 4);
    let i_field = standard_structure_field(2);
    let space = metric_space(base.clone(), conn.clone(), i_field.clone(), 2)?;
    let i2 = standard_acs(2);

    // pulled-back connection on the rank-4 bundle over the 6-dimensional
    // total space, shifted to make the tautological endomorphism parallel
    let lifted = {
        let sp = space.clone();
        Connection::new(6, 4, move |u: &RVec| {
            let p = sp.point(u);
            (0..6)
                .map(|d| {
                    let mut e = RVec::zeros(6);
                    e[d] = 1.0;
                    let v = p.base_part(&e);
                    let a = p.a_along(&v);
                    let px = p.vertical_part(&e);
                    a + (&px * &p.j) * 0.5
                })
                .collect()
        })
    };

    let mut checks = Vec::new();

    {
        let i2c = i2.clone();
        checks.push(Check::bound(
            "antiselfdual_forms_are_traceless_one_one",
            "antiselfdual-forms-traceless-one-one",
            1e-10,
            move |_, _| {
                let omega = kahler_form(&RMat::identity(4, 4), &i2c);
                let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
                let mut l = RMat::zeros(33, 6);
                for (c, (a, b)) in pairs.iter().enumerate() {
                    let mut w = RMat::zeros(4, 4);
                    w[(*a, *b)] = 1.0;
                    w[(*b, *a)] = -1.0;
                    let (w20, _, _) = two_form_pq_parts(&w, &i2c);
                    for (r, val) in w20.iter().enumerate() {
                        l[(r, c)] = val.re;
                        l[(16 + r, c)] = val.im;
                    }
                    let mut tr = 0.0;
                    for p in 0..4 {
                        for q in 0..4 {
                            tr += w[(p, q)] * omega[(p, q)];
                        }
                    }
                    l[(32, c)] = tr;
                }
                let (_, kernel) = rank_kernel_real(&l, crate::EPS_RANK);
                let gap = (kernel.len() as f64 - 3.0).abs();
                if kernel.is_empty() {
                    return Ok(gap);
                }
                let dist = real_subspace_distance(&kernel, &self_dual_split().1);
                Ok(gap + dist)
            },
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "fibered_nijenhuis_vanishes",
            "flat-connection-integrability",
            1e-7,
            move |p, rng| worst_fd_nijenhuis(&s, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "taut_nijenhuis_vanishes",
            "antiselfdual-tautological-integrability",
            1e-6,
            move |p, rng| worst_fd_nijenhuis(&s, StructureKind::Tautological, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "phi_section_holomorphic_for_fibered",
            "tautological-endomorphism-section",
            1e-5,
            move |p, rng| worst_phi_section(&s, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "phi_section_holomorphic_for_tautological",
            "antiselfdual-tautological-integrability",
            1e-5,
            move |p, rng| worst_phi_section(&s, StructureKind::Tautological, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "taut_section_holomorphy",
            "tautological-section-always-pseudoholomorphic",
            1e-5,
            move |p, rng| worst_taut_section(&s, p, rng),
        ));
    }

    {
        let (s, lc) = (space.clone(), lifted.clone());
        checks.push(Check::bound(
            "lifted_prime_parallel_phi",
            "lifted-prime-connection",
            1e-7,
            move |p, rng| {
                let sp = s.clone();
                let f = move |u: &RVec| sp.structure_at(u);
                let dirs = coordinate_dirs(6);
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(10) {
                    let u = s.sample(rng, 0.15, 0.4);
                    for v in &dirs {
                        worst = worst.max(lc.covariant_end(&f, &u, v, p.fd_step).norm());
                    }
                }
                Ok(worst)
            },
        ));
    }

    {
        let (s, lc) = (space.clone(), lifted.clone());
        checks.push(Check::bound(
            "lifted_prime_one_one_fibered",
            "lifted-prime-connection",
            1e-5,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(6) {
                    let u = s.sample(rng, 0.15, 0.4);
                    let grid = lc.curvature_grid(&u, p.fd_step);
                    let m = s.structure_matrix(StructureKind::Fibered, &u)?;
                    worst = worst.max(end_two_form_02_residual(&grid, &m));
                }
                Ok(worst)
            },
        ));
    }

    {
        let (s, lc) = (space.clone(), lifted.clone());
        checks.push(Check::bound(
            "lifted_prime_one_one_tautological",
            "antiselfdual-tautological-integrability",
            1e-5,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(6) {
                    let u = s.sample(rng, 0.15, 0.4);
                    let grid = lc.curvature_grid(&u, p.fd_step);
                    let m = s.structure_matrix(StructureKind::Tautological, &u)?;
                    worst = worst.max(end_two_form_02_residual(&grid, &m));
                }
                Ok(worst)
            },
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "nijenhuis_oracle_agreement",
            "fibered-structure-nijenhuis-closed-form",
            1e-4,
            move |p, rng| worst_oracle_deviation(&s, p, rng),
        ));
    }

    {
        let s = space.clone();
        let g = identity_metric_field(4);
        checks.push(Check::bound(
            "plane_isotropy",
            "metric-twistor-isotropic-planes",
            1e-9,
            move |p, rng| worst_isotropy(&s, &g, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "plane_round_trip",
            "grassmann-embedding-holomorphic",
            1e-9,
            move |p, rng| worst_round_trip(&s, p, rng),
        ));
    }

    {
        let s = space;
        checks.push(Check::bound(
            "structure_involution",
            "twistor-structure-involution",
            1e-9,
            move |p, rng| worst_involution(&s, p, rng),
        ));
    }

    Ok(Case {
        key: "flat_r4_asd",
        summary: "flat 4-space as anti-self-dual control: form algebra, double integrability, lifted connections",
        checks,
    })
}

/// The space of structures on a fixed 4-dimensional vector space, treated as
/// a base manifold: the modified flat connection has `(1,1)` curvature given
/// by an exact commutator model, the twistor space over it is integrable,
/// and with the unmodified flat connection the twistor space splits as a
/// product.
fn twistor_over_vectorspace() -> Result<Case> {
    let h = 1e-3;
    let fc = FiberChart::general(&standard_center(2))?;
    let base = ChartDomain::cube(8, 0.5, h)?;

    let chart_acs = |fc: &FiberChart, s: &[f64]| -> RMat {
        let j = fc.eval(s);
        let solver = fc.velocity_solver(s);
        let diff = fc.differential(s);
        let d = diff.len();
        let mut out = RMat::zeros(d, d);
        for (k, dk) in diff.iter().enumerate() {
            let col = solver
                .to_coords(&(&j * dk))
                .expect("left multiplication is tangent");
            out.set_column(k, &col);
        }
        out
    };

    let i_field = {
        let fcc = fc.clone();
        let ca = chart_acs;
        MatrixField::new(move |x: &RVec| {
            let s: Vec<f64> = x.iter().cloned().collect();
            ca(&fcc, &s)
        })
    };

    let phi_field = {
        let fcc = fc.clone();
        MatrixField::new(move |x: &RVec| {
            let s: Vec<f64> = x.iter().cloned().collect();
            fcc.eval(&s)
        })
    };

    let prime = {
        let fcc = fc.clone();
        Connection::new(8, 4, move |x: &RVec| {
            let s: Vec<f64> = x.iter().cloned().collect();
            let phi = fcc.eval(&s);
            fcc.differential(&s)
                .into_iter()
                .map(|d| d * &phi * 0.5)
                .collect()
        })
    };

    let space = Arc::new(TotalSpace::new(
        base.clone(),
        prime.clone(),
        i_field.clone(),
        fc.clone(),
    )?);
    let flat_space = Arc::new(space.with_connection(Connection::flat(8, 4))?);

    let mut checks = Vec::new();

    {
        let (conn, chart, f) = (prime.clone(), base.clone(), phi_field.clone());
        checks.push(Check::bound(
            "prime_connection_fixes_tautological_field",
            "curvature-commutator-model",
            1e-8,
            move |p, rng| worst_end_parallel(&conn, &f, &chart, p, rng),
        ));
    }

    {
        let (conn, chart, fcc) = (prime.clone(), base.clone(), fc.clone());
        checks.push(Check::bound(
            "prime_curvature_matches_commutator_model",
            "curvature-commutator-model",
            1e-6,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(6) {
                    let x = chart.sample(rng, 0.1);
                    let s: Vec<f64> = x.iter().cloned().collect();
                    let grid = conn.curvature_grid(&x, p.fd_step);
                    let diff = fcc.differential(&s);
                    for a in 0..8 {
                        for b in (a + 1)..8 {
                            let model = (&diff[a] * &diff[b] - &diff[b] * &diff[a]) * 0.25;
                            worst = worst.max((&grid[a][b] + model).norm());
                        }
                    }
                }
                Ok(worst)
            },
        ));
    }

    {
        let (conn, chart, i_c) = (prime.clone(), base.clone(), i_field.clone());
        checks.push(Check::bound(
            "prime_curvature_one_one",
            "curvature-commutator-model",
            1e-6,
            move |p, rng| worst_one_one_curvature(&conn, &i_c, &chart, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "twistor_nijenhuis_vanishes",
            "twistor-over-vectorspace-product-model",
            1e-5,
            move |p, rng| worst_fd_nijenhuis(&s, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "nijenhuis_oracle_agreement",
            "fibered-structure-nijenhuis-closed-form",
            1e-4,
            move |p, rng| worst_oracle_deviation(&s, p, rng),
        ));
    }

    {
        let (s, fcc) = (flat_space.clone(), fc.clone());
        let ca = chart_acs;
        checks.push(Check::bound(
            "product_model_splits",
            "twistor-over-vectorspace-product-model",
            1e-9,
            move |p, rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(8) {
                    let u = s.sample(rng, 0.1, 0.35);
                    let (x, sv) = s.split_coords(&u);
                    let m = s.structure_matrix(StructureKind::Fibered, &u)?;
                    let xs: Vec<f64> = x.iter().cloned().collect();
                    let top = ca(&fcc, &xs);
                    let bottom = ca(&fcc, &sv);
                    let mut expected = RMat::zeros(16, 16);
                    expected.view_mut((0, 0), (8, 8)).copy_from(&top);
                    expected.view_mut((8, 8), (8, 8)).copy_from(&bottom);
                    worst = worst.max((m - expected).norm());
                }
                Ok(worst)
            },
        ));
    }

    checks.push(Check::bound(
        "diagonal_stratum_dimensions",
        "structure-pair-strata",
        1e-9,
        |_, _| {
            let k = standard_acs(2);
            let mut j = k.clone();
            j[(2, 3)] = 1.0;
            j[(3, 2)] = -1.0;
            let mut gap = 0.0;
            let d_same = pair_kernel_dims(&k, &k);
            let d_opp = pair_kernel_dims(&k, &(-&k));
            let d_mix = pair_kernel_dims(&k, &j);
            gap += (d_same.0 as f64 - 4.0).abs() + d_same.1 as f64;
            gap += d_opp.0 as f64 + (d_opp.1 as f64 - 4.0).abs();
            gap += (d_mix.0 as f64 - 2.0).abs() + (d_mix.1 as f64 - 2.0).abs();
            Ok(gap)
        },
    ));

    {
        let s = space;
        checks.push(Check::bound(
            "structure_involution",
            "twistor-structure-involution",
            1e-9,
            move |p, rng| worst_involution(&s, p, rng),
        ));
    }

    Ok(Case {
        key: "twistor_over_vectorspace",
        summary: "structures on a fixed vector space as a base manifold: commutator curvature model and product splitting",
        checks,
    })
}

/// Antiholomorphic twists of the trivial holomorphic bundle over flat `C^2`:
/// a closed twisting form defines an integrable twistor structure, and
/// shifting the twist by an exact form conjugates the twisted derivative by
/// the unipotent orthogonal map `1 - g^{-1}B`.
fn d_twist_family() -> Result<Case> {
    let h = 1e-3;
    let base = ChartDomain::cube(4, 0.7, h)?;
    let i2 = standard_acs(2);
    let i_field = standard_structure_field(2);
    let (p10, _) = projectors(&i2);
    let mut s0 = CMat::zeros(4, 4);
    s0[(0, 2)] = C64::new(1.0, 0.0);
    s0[(2, 0)] = C64::new(-1.0, 0.0);
    // 2-form supported on the (1,0) subspace; with the flat metric its
    // raised endomorphism maps (1,0) into (0,1) and kills (0,1), so it
    // squares to zero.
    let k_mat = p10.transpose() * &s0 * &p10;

    let z1 = |x: &RVec| C64::new(x[0], x[1]);
    let z2 = |x: &RVec| C64::new(x[2], x[3]);
    let dzbar1 = |v: &RVec| C64::new(v[0], -v[1]);
    let dzbar2 = |v: &RVec| C64::new(v[2], -v[3]);
    let b_fun = move |x: &RVec| z1(x).conj() * z2(x) + C64::new(0.0, 0.3) * z2(x).conj();

    // real connection whose antiholomorphic part is the twisted derivative
    // with twist z1 dzbar1 ⊗ K
    let conn_real = {
        let k = k_mat.clone();
        Connection::new(4, 4, move |x: &RVec| {
            (0..4)
                .map(|d| {
                    let mut e = RVec::zeros(4);
                    e[d] = 1.0;
                    let m = &k * (z1(x) * dzbar1(&e));
                    RMat::from_fn(4, 4, |r, c| 2.0 * m[(r, c)].re)
                })
                .collect()
        })
    };
    let space = general_space(base.clone(), conn_real.clone(), i_field.clone(), 2)?;

    let mut checks = Vec::new();

    {
        let k = k_mat.clone();
        checks.push(Check::bound(
            "twist_form_square_zero",
            "dbar-twist-cohomology-intertwiner",
            1e-12,
            move |_, _| {
                if k.norm() < 1e-3 {
                    return Err(Error::InvalidParameter(
                        "degenerate twist form".into(),
                    ));
                }
                Ok((&k * &k).norm())
            },
        ));
    }

    {
        let (k, chart) = (k_mat.clone(), base.clone());
        checks.push(Check::bound(
            "twist_map_orthogonal",
            "dbar-twist-cohomology-intertwiner",
            1e-10,
            move |p, rng| {
                let delta = RMat::identity(4, 4);
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p) {
                    let x = chart.sample(rng, 0.15);
                    let t = CMat::identity(4, 4) - &k * b_fun(&x);
                    worst = worst.max(pairing_change_residual(&t, &delta, &delta));
                }
                Ok(worst)
            },
        ));
    }

    {
        let (chart, i2c) = (base.clone(), i2.clone());
        checks.push(Check::bound(
            "base_twist_dbar_closed",
            "dbar-twist-cohomology-intertwiner",
            1e-10,
            move |p, rng| {
                // coefficients of the twisting 1-form z1 dzbar1
                let coeff = |y: &RVec| {
                    CMat::from_fn(4, 1, |r, _| match r {
                        0 => z1(y),
                        1 => z1(y) * C64::new(0.0, -1.0),
                        _ => C64::new(0.0, 0.0),
                    })
                };
                let dirs = coordinate_dirs(4);
                let mut worst: f64 = 0.0;
                for _ in 0..sample_count(p).min(8) {
                    let x = chart.sample(rng, 0.15);
                    let partials: Vec<CMat> = dirs
                        .iter()
                        .map(|e| central_diff(&coeff, &x, e, p.fd_step))
                        .collect();
                    let mut w_re = RMat::zeros(4, 4);
                    let mut w_im = RMat::zeros(4, 4);
                    for a in 0..4 {
                        for b in 0..4 {
                            let val = partials[a][(b, 0)] - partials[b][(a, 0)];
                            w_re[(a, b)] = val.re;
                            w_im[(a, b)] = val.im;
                        }
                    }
                    let (_, _, re02) = two_form_pq_parts(&w_re, &i2c);
                    let (_, _, im02) = two_form_pq_parts(&w_im, &i2c);
                    worst = worst.max((re02 + im02 * C64::new(0.0, 1.0)).norm());
                }
                Ok(worst)
            },
        ));
    }

    {
        let (k, chart, i_c) = (k_mat.clone(), base.clone(), i_field.clone());
        checks.push(Check::bound(
            "intertwiner_conjugates_derivatives",
            "dbar-twist-cohomology-intertwiner",
            1e-7,
            move |p, rng| {
                let dirs = coordinate_dirs(4);
                let mut worst: f64 = 0.0;
                for tau in [0.0, 0.7, -1.3, 2.1] {
                    let ks = k.clone();
                    let kd = k.clone();
                    let d_src = AntiholomorphicDerivative::new(Connection::flat(4, 4), i_c.clone())
                        .with_extra(move |x: &RVec, v: &RVec| &ks * (z1(x) * dzbar1(v) * tau));
                    let d_dst = AntiholomorphicDerivative::new(Connection::flat(4, 4), i_c.clone())
                        .with_extra(move |x: &RVec, v: &RVec| {
                            &kd * (z1(x) * dzbar1(v) * tau
                                + z2(x) * dzbar1(v)
                                + C64::new(0.0, 0.3) * dzbar2(v))
                        });
                    let kt = k.clone();
                    let t = move |x: &RVec| CMat::identity(4, 4) - &kt * b_fun(x);
                    let sections: [&(dyn Fn(&RVec) -> CMat + Sync); 2] = [
                        &|x: &RVec| {
                            CMat::from_fn(4, 1, |r, _| match r {
                                0 => z1(x) * z1(x),
                                1 => z2(x).conj(),
                                2 => C64::new(1.0, 0.0) + z1(x) * z2(x),
                                _ => z1(x).conj() * z2(x),
                            })
                        },
                        &|_: &RVec| {
                            CMat::from_fn(4, 1, |r, _| match r {
                                0 => C64::new(1.0, 0.0),
                                1 => C64::new(0.0, -1.0),
                                2 => C64::new(2.0, 0.0),
                                _ => C64::new(0.0, 1.0),
                            })
                        },
                    ];
                    for _ in 0..sample_count(p).min(6) {
                        let x = chart.sample(rng, 0.15);
                        for f in sections.iter() {
                            for v in &dirs {
                                worst = worst.max(intertwining_residual(
                                    &d_src, &d_dst, &t, *f, &x, v, p.fd_step,
                                ));
                            }
                        }
                    }
                }
                Ok(worst)
            },
        ));
    }

    {
        let (conn, chart, i_c) = (conn_real.clone(), base.clone(), i_field.clone());
        checks.push(Check::bound(
            "twisted_connection_one_one",
            "dbar-twist-cohomology-intertwiner",
            1e-6,
            move |p, rng| worst_one_one_curvature(&conn, &i_c, &chart, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "twistor_nijenhuis_vanishes",
            "dbar-twist-cohomology-intertwiner",
            1e-5,
            move |p, rng| worst_fd_nijenhuis(&s, StructureKind::Fibered, p, rng),
        ));
    }

    {
        let s = space.clone();
        checks.push(Check::bound(
            "nijenhuis_oracle_agreement",
            "fibered-structure-nijenhuis-closed-form",
            1e-4,
            move |p, rng| worst_oracle_deviation(&s, p, rng),
        ));
    }

    {
        let s = space;
        checks.push(Check::bound(
            "structure_involution",
            "twistor-structure-involution",
            1e-9,
            move |p, rng| worst_involution(&s, p, rng),
        ));
    }

    Ok(Case {
        key: "d_twist_family",
        summary: "antiholomorphic twists over flat C^2: closed twists, exact shifts, and the unipotent intertwiner",
        checks,
    })
}
