//! Coordinate charts, finite differences, and differential forms.
//!
//! Every geometric object lives on a box chart in `R^m`. Fields are closures
//! of the coordinates; derivatives are fourth-order central differences, so
//! independent checks never share machinery with the closed-form expressions
//! they are compared against.
//!
//! Conventions fixed here:
//!
//! * the Nijenhuis tensor of a structure field `I` on constant vectors is
//!   `N(v, w) = (∂_{Iv}I)w - (∂_{Iw}I)v + I(∂_w I)v - I(∂_v I)w`;
//! * the `(0,2)` part of a 2-form is
//!   `ω^{0,2}(v, w) = (ω(v,w) - ω(Iv,Iw) + i·ω(Iv,w) + i·ω(v,Iw)) / 4`,
//!   so it pairs with two `-i` eigenvectors and vanishes on `(1,0)` slots;
//! * `k`-forms store the full `m^k` component tensor, antisymmetrized.

use crate::{C64, CMat, CVec, Error, RMat, RVec, Result};
use rand::Rng;
use std::sync::Arc;

/// A box `[lo, hi] ⊂ R^m` with a finite-difference step adapted to it.
#[derive(Clone, Debug)]
pub struct ChartDomain {
    lo: RVec,
    hi: RVec,
    pub fd_step: f64,
}

impl ChartDomain {
    pub fn new(lo: RVec, hi: RVec, fd_step: f64) -> Result<ChartDomain> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(format!(
                "box bounds of length {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if fd_step.is_nan() || fd_step <= 0.0 {
            return Err(Error::InvalidParameter("fd_step must be positive".into()));
        }
        for k in 0..lo.len() {
            let extent = hi[k] - lo[k];
            if extent.is_nan() || extent <= 8.0 * fd_step {
                return Err(Error::InvalidParameter(format!(
                    "box extent {} on axis {k} too small for step {fd_step}",
                    hi[k] - lo[k]
                )));
            }
        }
        Ok(ChartDomain { lo, hi, fd_step })
    }

    /// Centered cube `[-r, r]^m`.
    pub fn cube(m: usize, r: f64, fd_step: f64) -> Result<ChartDomain> {
        ChartDomain::new(
            RVec::from_element(m, -r),
            RVec::from_element(m, r),
            fd_step,
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> RVec {
        (&self.lo + &self.hi) * 0.5
    }

    /// Uniform sample, `margin` away from each face so that all difference
    /// stencils stay inside the box.
    pub fn sample<R: Rng>(&self, rng: &mut R, margin: f64) -> RVec {
        RVec::from_fn(self.dim(), |k, _| {
            let (a, b) = (self.lo[k] + margin, self.hi[k] - margin);
            a + (b - a) * rng.random::<f64>()
        })
    }
}

/// Values that can be combined linearly, for difference quotients.
pub trait LinComb: Sized {
    fn lincomb(terms: &[(f64, &Self)]) -> Self;
}

impl LinComb for f64 {
    fn lincomb(terms: &[(f64, &Self)]) -> f64 {
        terms.iter().map(|(c, v)| c * **v).sum()
    }
}

impl LinComb for RVec {
    fn lincomb(terms: &[(f64, &Self)]) -> RVec {
        let mut out = terms[0].1 * terms[0].0;
        for (c, v) in &terms[1..] {
            out += *v * *c;
        }
        out
    }
}

impl LinComb for RMat {
    fn lincomb(terms: &[(f64, &Self)]) -> RMat {
        let mut out = terms[0].1 * terms[0].0;
        for (c, v) in &terms[1..] {
            out += *v * *c;
        }
        out
    }
}

impl LinComb for CMat {
    fn lincomb(terms: &[(f64, &Self)]) -> CMat {
        let mut out = terms[0].1 * C64::new(terms[0].0, 0.0);
        for (c, v) in &terms[1..] {
            out += *v * C64::new(*c, 0.0);
        }
        out
    }
}

/// Fourth-order central difference of `f` at `x` along the vector `v`.
pub fn central_diff<T: LinComb>(f: &dyn Fn(&RVec) -> T, x: &RVec, v: &RVec, h: f64) -> T {
    let at = |t: f64| f(&(x + v * t));
    let (p1, m1) = (at(h), at(-h));
    let (p2, m2) = (at(2.0 * h), at(-2.0 * h));
    let c = 1.0 / (12.0 * h);
    T::lincomb(&[(8.0 * c, &p1), (-8.0 * c, &m1), (-c, &p2), (c, &m2)])
}

type MatFn = Arc<dyn Fn(&RVec) -> RMat + Send + Sync>;
type MatDerivFn = Arc<dyn Fn(&RVec, usize) -> RMat + Send + Sync>;

/// A matrix-valued field on a chart, with an optional analytic derivative
/// (by coordinate index). Without one, directional derivatives fall back to
/// central differences.
#[derive(Clone)]
pub struct MatrixField {
    f: MatFn,
    deriv: Option<MatDerivFn>,
}

impl MatrixField {
    pub fn new(f: impl Fn(&RVec) -> RMat + Send + Sync + 'static) -> MatrixField {
        MatrixField {
            f: Arc::new(f),
            deriv: None,
        }
    }

    pub fn with_derivative(
        f: impl Fn(&RVec) -> RMat + Send + Sync + 'static,
        d: impl Fn(&RVec, usize) -> RMat + Send + Sync + 'static,
    ) -> MatrixField {
        MatrixField {
            f: Arc::new(f),
            deriv: Some(Arc::new(d)),
        }
    }

    pub fn constant(m: RMat) -> MatrixField {
        let rows = m.nrows();
        let cols = m.ncols();
        MatrixField {
            f: Arc::new(move |_| m.clone()),
            deriv: Some(Arc::new(move |_, _| RMat::zeros(rows, cols))),
        }
    }

    pub fn eval(&self, x: &RVec) -> RMat {
        (self.f)(x)
    }

    pub fn has_derivative(&self) -> bool {
        self.deriv.is_some()
    }

    /// Derivative along the constant vector `v`, analytic when available.
    pub fn directional(&self, x: &RVec, v: &RVec, h: f64) -> RMat {
        match &self.deriv {
            Some(d) => {
                let mut out = d(x, 0) * v[0];
                for k in 1..v.len() {
                    out += d(x, k) * v[k];
                }
                out
            }
            None => central_diff(&|y: &RVec| (self.f)(y), x, v, h),
        }
    }

    /// Derivative by coordinate index.
    pub fn partial(&self, x: &RVec, k: usize, h: f64) -> RMat {
        match &self.deriv {
            Some(d) => d(x, k),
            None => {
                let dim = x.len();
                let mut e = RVec::zeros(dim);
                e[k] = 1.0;
                central_diff(&|y: &RVec| (self.f)(y), x, &e, h)
            }
        }
    }
}

/// Nijenhuis tensor of the structure field `field` at `x`, evaluated on the
/// constant vector fields `v`, `w` by finite differences:
/// `N(v, w) = (∂_{Iv}I)w - (∂_{Iw}I)v + I(∂_w I)v - I(∂_v I)w`.
pub fn nijenhuis_fd(
    field: &dyn Fn(&RVec) -> RMat,
    x: &RVec,
    v: &RVec,
    w: &RVec,
    h: f64,
) -> RVec {
    let i0 = field(x);
    let iv = &i0 * v;
    let iw = &i0 * w;
    let d_iv = central_diff(field, x, &iv, h);
    let d_iw = central_diff(field, x, &iw, h);
    let d_v = central_diff(field, x, v, h);
    let d_w = central_diff(field, x, w, h);
    d_iv * w - d_iw * v + &i0 * (d_w * v) - &i0 * (d_v * w)
}

/// Nijenhuis tensor on general vector fields, straight from its definition
/// `N(X, Y) = [IX, IY] - I[IX, Y] - I[X, IY] - [X, Y]` with all brackets
/// taken by finite differences. Agreement with [`nijenhuis_fd`] on constant
/// extensions of the same pointwise values is the tensoriality check.
pub fn nijenhuis_fields(
    field: &dyn Fn(&RVec) -> RMat,
    x: &RVec,
    xf: &dyn Fn(&RVec) -> RVec,
    yf: &dyn Fn(&RVec) -> RVec,
    h: f64,
) -> RVec {
    let ix = |y: &RVec| field(y) * xf(y);
    let iy = |y: &RVec| field(y) * yf(y);
    let bracket = |f: &dyn Fn(&RVec) -> RVec, g: &dyn Fn(&RVec) -> RVec| -> RVec {
        central_diff(&|z: &RVec| g(z), x, &f(x), h) - central_diff(&|z: &RVec| f(z), x, &g(x), h)
    };
    let i0 = field(x);
    bracket(&ix, &iy) - &i0 * bracket(&ix, &|y| yf(y)) - &i0 * bracket(&|y| xf(y), &iy)
        - bracket(&|y| xf(y), &|y| yf(y))
}

/// A `k`-form value on `R^m`, stored as the full antisymmetric component
/// tensor `comp[i_1, ..., i_k]` in row-major order.
#[derive(Clone, Debug)]
pub struct FormValue {
    m: usize,
    k: usize,
    comp: Vec<f64>,
}

fn tensor_len(m: usize, k: usize) -> usize {
    m.pow(k as u32)
}

impl FormValue {
    pub fn zero(m: usize, k: usize) -> FormValue {
        FormValue {
            m,
            k,
            comp: vec![0.0; tensor_len(m, k)],
        }
    }

    /// Builds from a component function, antisymmetrizing over all index
    /// permutations. The function is read on strictly increasing indices only.
    pub fn from_increasing(m: usize, k: usize, f: impl Fn(&[usize]) -> f64) -> FormValue {
        let mut out = FormValue::zero(m, k);
        let mut idx = vec![0usize; k];
        loop {
            if idx.windows(2).all(|p| p[0] < p[1]) {
                let val = f(&idx);
                if val != 0.0 {
                    out.add_antisymmetrized(&idx, val);
                }
            }
            // advance odometer
            let mut c = k;
            loop {
                if c == 0 {
                    return out;
                }
                c -= 1;
                idx[c] += 1;
                if idx[c] < m {
                    break;
                }
                idx[c] = 0;
            }
        }
    }

    fn add_antisymmetrized(&mut self, idx: &[usize], val: f64) {
        let k = self.k;
        let mut perm: Vec<usize> = (0..k).collect();
        permute_all(&mut perm, 0, &mut |p, sign| {
            let flat = p.iter().fold(0usize, |acc, &q| acc * self.m + idx[q]);
            self.comp[flat] += sign * val;
        });
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn ambient_dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.k);
        let flat = idx.iter().fold(0usize, |acc, &q| acc * self.m + q);
        self.comp[flat]
    }

    /// Complex-multilinear contraction with `k` complex vectors.
    pub fn eval_complex(&self, vectors: &[&CVec]) -> C64 {
        assert_eq!(vectors.len(), self.k);
        let mut total = C64::new(0.0, 0.0);
        let mut idx = vec![0usize; self.k];
        for (flat, &c) in self.comp.iter().enumerate() {
            if c != 0.0 {
                let mut rem = flat;
                for q in (0..self.k).rev() {
                    idx[q] = rem % self.m;
                    rem /= self.m;
                }
                let mut term = C64::new(c, 0.0);
                for (q, v) in vectors.iter().enumerate() {
                    term *= v[idx[q]];
                }
                total += term;
            }
        }
        total
    }

    /// Contraction with `k` vectors.
    pub fn eval(&self, vectors: &[&RVec]) -> f64 {
        assert_eq!(vectors.len(), self.k);
        let mut total = 0.0;
        let mut idx = vec![0usize; self.k];
        for (flat, &c) in self.comp.iter().enumerate() {
            if c != 0.0 {
                let mut rem = flat;
                for q in (0..self.k).rev() {
                    idx[q] = rem % self.m;
                    rem /= self.m;
                }
                let mut term = c;
                for (q, v) in vectors.iter().enumerate() {
                    term *= v[idx[q]];
                }
                total += term;
            }
        }
        total
    }

    /// Wedge product, with the convention `(α∧β)(v, w) = α(v)β(w) - α(w)β(v)`
    /// for 1-forms.
    pub fn wedge(&self, other: &FormValue) -> FormValue {
        assert_eq!(self.m, other.m);
        let k = self.k;
        let l = other.k;
        let mut out = FormValue::zero(self.m, k + l);
        let norm = 1.0 / (factorial(k) * factorial(l)) as f64;
        let mut idx = vec![0usize; k + l];
        let total = tensor_len(self.m, k + l);
        for flat in 0..total {
            let mut rem = flat;
            for q in (0..k + l).rev() {
                idx[q] = rem % self.m;
                rem /= self.m;
            }
            if idx.windows(2).any(|p| p[0] >= p[1]) {
                continue; // fill strictly increasing slots, antisymmetrize after
            }
            let mut perm: Vec<usize> = (0..k + l).collect();
            let mut val = 0.0;
            permute_all(&mut perm, 0, &mut |p, sign| {
                let a: Vec<usize> = p[..k].iter().map(|&q| idx[q]).collect();
                let b: Vec<usize> = p[k..].iter().map(|&q| idx[q]).collect();
                val += sign * self.get(&a) * other.get(&b);
            });
            val *= norm;
            if val != 0.0 {
                out.add_antisymmetrized(&idx, val);
            }
        }
        out
    }

    /// Pullback through the linear map `a`: `(a*ω)(v, ...) = ω(av, ...)`.
    pub fn pullback(&self, a: &RMat) -> FormValue {
        let mut out = FormValue::zero(self.m, self.k);
        let total = tensor_len(self.m, self.k);
        let mut idx = vec![0usize; self.k];
        let mut src = vec![0usize; self.k];
        for flat in 0..total {
            let mut rem = flat;
            for q in (0..self.k).rev() {
                idx[q] = rem % self.m;
                rem /= self.m;
            }
            if idx.windows(2).any(|p| p[0] >= p[1]) {
                continue;
            }
            // sum over all source indices of prod a[src_q, idx_q] * comp[src]
            let mut val = 0.0;
            let src_total = tensor_len(self.m, self.k);
            for sflat in 0..src_total {
                let mut rem = sflat;
                for q in (0..self.k).rev() {
                    src[q] = rem % self.m;
                    rem /= self.m;
                }
                let c = self.comp[sflat];
                if c == 0.0 {
                    continue;
                }
                let mut w = c;
                for q in 0..self.k {
                    w *= a[(src[q], idx[q])];
                }
                val += w;
            }
            if val != 0.0 {
                out.add_antisymmetrized(&idx, val);
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.comp.iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    pub fn scaled(&self, c: f64) -> FormValue {
        FormValue {
            m: self.m,
            k: self.k,
            comp: self.comp.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &FormValue) -> FormValue {
        assert_eq!(self.m, other.m);
        assert_eq!(self.k, other.k);
        FormValue {
            m: self.m,
            k: self.k,
            comp: self
                .comp
                .iter()
                .zip(&other.comp)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl LinComb for FormValue {
    fn lincomb(terms: &[(f64, &Self)]) -> FormValue {
        let mut out = terms[0].1.scaled(terms[0].0);
        for (c, v) in &terms[1..] {
            for (o, s) in out.comp.iter_mut().zip(&v.comp) {
                *o += c * s;
            }
        }
        out
    }
}

fn factorial(k: usize) -> usize {
    (1..=k).product::<usize>().max(1)
}

/// Visits all permutations of `perm[at..]`, reporting each with its sign
/// relative to the initial arrangement.
fn permute_all(perm: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize], f64)) {
    fn rec(perm: &mut Vec<usize>, at: usize, sign: f64, visit: &mut impl FnMut(&[usize], f64)) {
        if at + 1 >= perm.len() {
            visit(perm, sign);
            return;
        }
        rec(perm, at + 1, sign, visit);
        for k in at + 1..perm.len() {
            perm.swap(at, k);
            rec(perm, at + 1, -sign, visit);
            perm.swap(at, k);
        }
    }
    rec(perm, at, 1.0, visit);
}

type FormFn = Arc<dyn Fn(&RVec) -> FormValue + Send + Sync>;

/// A form-valued field on a chart.
#[derive(Clone)]
pub struct FormField {
    m: usize,
    k: usize,
    f: FormFn,
}

impl FormField {
    pub fn new(
        m: usize,
        k: usize,
        f: impl Fn(&RVec) -> FormValue + Send + Sync + 'static,
    ) -> FormField {
        FormField {
            m,
            k,
            f: Arc::new(f),
        }
    }

    /// 2-form field from an antisymmetric matrix field, `ω(v, w) = v^T W w`.
    pub fn from_matrix_field(m: usize, w: MatrixField) -> FormField {
        FormField::new(m, 2, move |x| {
            let mat = w.eval(x);
            FormValue::from_increasing(m, 2, |idx| mat[(idx[0], idx[1])])
        })
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn eval(&self, x: &RVec) -> FormValue {
        (self.f)(x)
    }

    /// Exterior derivative at `x` by finite differences:
    /// `(dω)_{i_0...i_k} = Σ_j (-1)^j ∂_{i_j} ω_{i_0...ī_j...i_k}`.
    pub fn exterior_derivative(&self, x: &RVec, h: f64) -> FormValue {
        let m = self.m;
        let k = self.k;
        // derivative of the whole component tensor along each coordinate
        let partials: Vec<FormValue> = (0..m)
            .map(|c| {
                let mut e = RVec::zeros(x.len());
                e[c] = 1.0;
                central_diff(&|y: &RVec| (self.f)(y), x, &e, h)
            })
            .collect();
        let mut out = FormValue::zero(m, k + 1);
        let mut idx = vec![0usize; k + 1];
        let total = tensor_len(m, k + 1);
        for flat in 0..total {
            let mut rem = flat;
            for q in (0..k + 1).rev() {
                idx[q] = rem % m;
                rem /= m;
            }
            if idx.windows(2).any(|p| p[0] >= p[1]) {
                continue;
            }
            let mut val = 0.0;
            let mut sign = 1.0;
            for j in 0..k + 1 {
                let rest: Vec<usize> = (0..k + 1).filter(|&q| q != j).map(|q| idx[q]).collect();
                val += sign * partials[idx[j]].get(&rest);
                sign = -sign;
            }
            if val != 0.0 {
                out.add_antisymmetrized(&idx, val);
            }
        }
        out
    }
}

/// `(2,0)`, `(1,1)`, `(0,2)` parts of a scalar 2-form `W` relative to the
/// structure `I`, as complex antisymmetric matrices summing to `W`.
pub fn two_form_pq_parts(w: &RMat, i: &RMat) -> (CMat, CMat, CMat) {
    let wc = crate::linalg::complexify(w);
    let ic = crate::linalg::complexify(i);
    let pulled = ic.transpose() * &wc * &ic; // ω(I·, I·)
    let mixed = ic.transpose() * &wc + &wc * &ic; // ω(I·, ·) + ω(·, I·)
    let eye = C64::new(0.0, 1.0);
    let w02 = (&wc - &pulled + &mixed * eye) * C64::new(0.25, 0.0);
    let w20 = crate::linalg::conj_mat(&w02);
    let w11 = &wc - &w20 - &w02;
    (w20, w11, w02)
}

/// Spanning vectors `e_a^{1,0} = (e_a - i I e_a)/2` of the `+i` eigenspace
/// of `I` (or, with `eigen = -1`, the `e_a^{0,1} = (e_a + i I e_a)/2` spanning
/// the `-i` eigenspace).
pub fn eigen_spanning_set(i: &RMat, eigen: f64) -> Vec<CVec> {
    let m = i.nrows();
    (0..m)
        .map(|a| {
            CVec::from_fn(m, |j, _| {
                let re = if j == a { 0.5 } else { 0.0 };
                C64::new(re, -0.5 * eigen * i[(j, a)])
            })
        })
        .collect()
}

/// Largest `|T(w_1, ..., w_k)|` over spanning tuples with `p` slots drawn from
/// the `+i` eigenspace of `I` and `q = k - p` slots from the `-i` eigenspace.
/// By multilinearity and antisymmetry this is zero exactly when the `(p, q)`
/// type component of the complex-multilinear extension of `T` vanishes.
pub fn form_type_component_max(t: &FormValue, i: &RMat, p: usize, q: usize) -> f64 {
    let k = t.degree();
    assert_eq!(p + q, k, "slot counts must fill the degree");
    let m = t.ambient_dim();
    let holo = eigen_spanning_set(i, 1.0);
    let anti = eigen_spanning_set(i, -1.0);
    let mut idx = vec![0usize; k];
    let mut worst: f64 = 0.0;
    loop {
        {
            let slots: Vec<&CVec> = (0..k)
                .map(|s| {
                    if s < p {
                        &holo[idx[s]]
                    } else {
                        &anti[idx[s]]
                    }
                })
                .collect();
            worst = worst.max(t.eval_complex(&slots).norm());
        }
        let mut c = k;
        loop {
            if c == 0 {
                return worst;
            }
            c -= 1;
            idx[c] += 1;
            if idx[c] < m {
                break;
            }
            idx[c] = 0;
        }
    }
}

/// All type-component maxima `(p, q, max)` of a form with respect to `I`.
pub fn form_type_profile(t: &FormValue, i: &RMat) -> Vec<(usize, usize, f64)> {
    let k = t.degree();
    (0..=k)
        .map(|p| (p, k - p, form_type_component_max(t, i, p, k - p)))
        .collect()
}

/// Torsion 3-form of a Hermitian pair: `H(u, v, w) = dω(Iu, Iv, Iw)` where
/// `ω(v, w) = g(Iv, w)`. For an integrable `I` this equals
/// `i(T^{2,1} - T^{1,2})` with `T = dω`, the flux form whose `g^{-1}`
/// contractions shift the Levi-Civita connection to the metric torsion
/// connections.
pub fn torsion_flux(g: &MatrixField, i: &MatrixField, m: usize, h: f64) -> FormField {
    let gg = g.clone();
    let ii = i.clone();
    let omega = FormField::new(m, 2, move |x: &RVec| {
        let w = kahler_form(&gg.eval(x), &ii.eval(x));
        FormValue::from_increasing(m, 2, |idx| w[(idx[0], idx[1])])
    });
    let ii = i.clone();
    FormField::new(m, 3, move |x: &RVec| {
        omega.exterior_derivative(x, h).pullback(&ii.eval(x))
    })
}

/// `(0,2)` part of an endomorphism-valued 2-form given by its component grid
/// `f[i][j] = F(e_i, e_j)`, evaluated on the pair `(e_a, e_b)`.
pub fn end_two_form_02(f: &[Vec<RMat>], i: &RMat, a: usize, b: usize) -> CMat {
    let m = f.len();
    let n = f[0][0].nrows();
    let mut f_ia_ib = RMat::zeros(n, n); // F(Ie_a, Ie_b)
    let mut f_ia_b = RMat::zeros(n, n); // F(Ie_a, e_b)
    let mut f_a_ib = RMat::zeros(n, n); // F(e_a, Ie_b)
    for k in 0..m {
        if i[(k, a)] != 0.0 {
            f_ia_b += &f[k][b] * i[(k, a)];
            for l in 0..m {
                if i[(l, b)] != 0.0 {
                    f_ia_ib += &f[k][l] * (i[(k, a)] * i[(l, b)]);
                }
            }
        }
        if i[(k, b)] != 0.0 {
            f_a_ib += &f[a][k] * i[(k, b)];
        }
    }
    let re = (&f[a][b] - &f_ia_ib) * 0.25;
    let im = (&f_ia_b + &f_a_ib) * 0.25;
    crate::linalg::complexify(&re) + crate::linalg::complexify(&im) * C64::new(0.0, 1.0)
}

/// Largest residual of the `(0,2)` part of an endomorphism-valued 2-form over
/// all coordinate pairs, relative to the largest component norm.
pub fn end_two_form_02_residual(f: &[Vec<RMat>], i: &RMat) -> f64 {
    let m = f.len();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for a in 0..m {
        for b in (a + 1)..m {
            scale = scale.max(f[a][b].norm());
            worst = worst.max(end_two_form_02(f, i, a, b).norm());
        }
    }
    worst / scale
}

/// Fundamental 2-form `ω(v, w) = g(Iv, w)` as an antisymmetric matrix.
pub fn kahler_form(g: &RMat, i: &RMat) -> RMat {
    i.transpose() * g
}

/// Coordinates of a 2-form on `R^4` in the ordered basis
/// `e12, e13, e14, e23, e24, e34` of increasing pairs.
pub fn two_form_six_coords(w: &RMat) -> RVec {
    RVec::from_vec(vec![
        w[(0, 1)],
        w[(0, 2)],
        w[(0, 3)],
        w[(1, 2)],
        w[(1, 3)],
        w[(2, 3)],
    ])
}

/// Orthonormal bases of the self-dual and anti-self-dual 2-forms on flat
/// oriented `R^4`, in the six-coordinate convention above.
pub fn self_dual_split() -> (Vec<RVec>, Vec<RVec>) {
    let s = 1.0 / 2.0_f64.sqrt();
    let plus = vec![
        RVec::from_vec(vec![s, 0.0, 0.0, 0.0, 0.0, s]), // e12 + e34
        RVec::from_vec(vec![0.0, s, 0.0, 0.0, -s, 0.0]), // e13 - e24
        RVec::from_vec(vec![0.0, 0.0, s, s, 0.0, 0.0]), // e14 + e23
    ];
    let minus = vec![
        RVec::from_vec(vec![s, 0.0, 0.0, 0.0, 0.0, -s]), // e12 - e34
        RVec::from_vec(vec![0.0, s, 0.0, 0.0, s, 0.0]),  // e13 + e24
        RVec::from_vec(vec![0.0, 0.0, s, -s, 0.0, 0.0]), // e14 - e23
    ];
    (plus, minus)
}

/// Largest principal angle between two real subspaces given by spanning
/// columns, through its sine.
pub fn real_subspace_distance(a: &[RVec], b: &[RVec]) -> f64 {
    let pack = |cols: &[RVec]| {
        let rows = cols[0].len();
        RMat::from_fn(rows, cols.len(), |r, c| cols[c][r])
    };
    let qa = orthonormal_columns(&pack(a));
    let qb = orthonormal_columns(&pack(b));
    let residual = &qa - &qb * (qb.transpose() * &qa);
    let sine = residual
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    sine.clamp(-1.0, 1.0).asin()
}

fn orthonormal_columns(m: &RMat) -> RMat {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > crate::EPS_RANK * smax)
        .count();
    u.columns(0, rank).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_acs;
    use rand::SeedableRng;

    #[test]
    fn central_difference_is_exact_on_quartics() {
        let f = |x: &RVec| x[0].powi(4) + 3.0 * x[0].powi(2) * x[1] - x[1].powi(3);
        let x = RVec::from_vec(vec![0.7, -0.3]);
        let v = RVec::from_vec(vec![1.0, 2.0]);
        // d/dt f(x + tv) at 0: (4x0^3 + 6 x0 x1) v0 + (3x0^2 - 3x1^2) v1
        let expect = (4.0 * 0.7f64.powi(3) + 6.0 * 0.7 * -0.3) * 1.0
            + (3.0 * 0.49 - 3.0 * 0.09) * 2.0;
        let got = central_diff(&f, &x, &v, 0.05);
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn exterior_derivative_of_x_dy_is_dx_wedge_dy() {
        let omega = FormField::new(2, 1, |x: &RVec| {
            FormValue::from_increasing(2, 1, |idx| if idx[0] == 1 { x[0] } else { 0.0 })
        });
        let d = omega.exterior_derivative(&RVec::from_vec(vec![0.4, 0.9]), 1e-3);
        assert!((d.get(&[0, 1]) - 1.0).abs() < 1e-10);
        assert!((d.get(&[1, 0]) + 1.0).abs() < 1e-10);
    }

    #[test]
    fn exterior_derivative_squares_to_zero() {
        let omega = FormField::new(3, 1, |x: &RVec| {
            FormValue::from_increasing(3, 1, |idx| match idx[0] {
                0 => (x[1] * x[2]).sin(),
                1 => x[0].exp() * x[2],
                _ => x[0] * x[1] * x[1],
            })
        });
        let x = RVec::from_vec(vec![0.3, -0.2, 0.5]);
        let domega = FormField::new(3, 2, {
            let omega = omega.clone();
            move |y: &RVec| omega.exterior_derivative(y, 1e-3)
        });
        let dd = domega.exterior_derivative(&x, 1e-3);
        assert!(dd.max_abs() < 1e-8);
    }

    #[test]
    fn wedge_of_coordinate_forms_is_the_determinant() {
        let e = |k: usize| FormValue::from_increasing(3, 1, move |idx| (idx[0] == k) as u8 as f64);
        let vol = e(0).wedge(&e(1)).wedge(&e(2));
        let v1 = RVec::from_vec(vec![1.0, 2.0, 0.0]);
        let v2 = RVec::from_vec(vec![0.0, 1.0, 3.0]);
        let v3 = RVec::from_vec(vec![2.0, 0.0, 1.0]);
        let det = RMat::from_columns(&[v1.clone(), v2.clone(), v3.clone()]).determinant();
        assert!((vol.eval(&[&v1, &v2, &v3]) - det).abs() < 1e-13);
    }

    #[test]
    fn kahler_form_of_the_standard_pair_is_one_one() {
        let i = standard_acs(2);
        let g = RMat::identity(4, 4);
        let w = kahler_form(&g, &i);
        assert!((&w + w.transpose()).norm() < 1e-14);
        let (w20, _w11, w02) = two_form_pq_parts(&w, &i);
        assert!(w20.norm() < 1e-14);
        assert!(w02.norm() < 1e-14);
    }

    #[test]
    fn pq_parts_follow_the_plus_i_convention() {
        // W = Re(dz̄1 ∧ dz̄2) = e13 - e24 on interleaved coordinates. Its (0,2)
        // part must be half of dz̄1∧dz̄2: entries (1,3) -> 1/2, (2,4) -> -1/2,
        // (1,4) -> -i/2, (2,3) -> -i/2 in 1-based labels.
        let i = standard_acs(2);
        let mut w = RMat::zeros(4, 4);
        w[(0, 2)] = 1.0;
        w[(2, 0)] = -1.0;
        w[(1, 3)] = -1.0;
        w[(3, 1)] = 1.0;
        let (w20, w11, w02) = two_form_pq_parts(&w, &i);
        assert!(w11.norm() < 1e-14);
        assert!((w02[(0, 2)] - C64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((w02[(1, 3)] - C64::new(-0.5, 0.0)).norm() < 1e-14);
        assert!((w02[(0, 3)] - C64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((w02[(1, 2)] - C64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((w20.clone() - crate::linalg::conj_mat(&w02)).norm() < 1e-14);
        // and it annihilates (1,0) slots: contract with v^{1,0} = (1, -i, 0, 0)
        let v10 = crate::CVec::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        assert!((w02.transpose() * &v10).norm() < 1e-14);
        assert!((&w02 * &v10).norm() < 1e-14);
    }

    #[test]
    fn shear_structure_has_the_frozen_nijenhuis_value() {
        // I(x) = I0 + x2 B with B = -E14 - E23 anticommutes with I0 and
        // squares B to zero, so I(x)^2 = -1 on the whole chart. At the origin
        // N(e1, e3) = B e3 = -e2.
        let i0 = standard_acs(2);
        let mut b = RMat::zeros(4, 4);
        b[(0, 3)] = -1.0;
        b[(1, 2)] = -1.0;
        let field = move |x: &RVec| &i0 + &b * x[1];
        let x = RVec::zeros(4);
        let probe = field(&RVec::from_vec(vec![0.2, 0.7, -0.1, 0.4]));
        assert!((&probe * &probe + RMat::identity(4, 4)).norm() < 1e-14);
        let mut e1 = RVec::zeros(4);
        e1[0] = 1.0;
        let mut e3 = RVec::zeros(4);
        e3[2] = 1.0;
        let n = nijenhuis_fd(&field, &x, &e1, &e3, 1e-3);
        let mut expect = RVec::zeros(4);
        expect[1] = -1.0;
        assert!((n - expect).norm() < 1e-10);
    }

    #[test]
    fn anti_self_dual_forms_are_the_primitive_one_one_forms() {
        // For the standard structure and orientation on R^4 the bundle of
        // anti-self-dual 2-forms coincides with primitive (1,1) forms.
        let i = standard_acs(2);
        let g = RMat::identity(4, 4);
        let omega = kahler_form(&g, &i);
        let omega6 = two_form_six_coords(&omega);
        let (_plus, minus) = self_dual_split();
        // primitive (1,1): project the six basis 2-forms onto the (1,1) part
        // and the orthogonal complement of omega, then span.
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let mut prim = Vec::new();
        for &(a, b) in &pairs {
            let mut w = RMat::zeros(4, 4);
            w[(a, b)] = 1.0;
            w[(b, a)] = -1.0;
            let pulled = i.transpose() * &w * &i;
            let w11 = (&w + &pulled) * 0.5;
            let c6 = two_form_six_coords(&w11);
            let proj = &c6 - &omega6 * (omega6.dot(&c6) / omega6.dot(&omega6));
            if proj.norm() > 1e-12 {
                prim.push(proj);
            }
        }
        assert!(real_subspace_distance(&prim, &minus) < 1e-12);
    }

    #[test]
    fn complex_evaluation_extends_real_evaluation() {
        let alpha = FormValue::from_increasing(4, 2, |idx| (1 + idx[0] * idx[1]) as f64);
        let v = RVec::from_vec(vec![0.3, -0.7, 0.2, 1.1]);
        let w = RVec::from_vec(vec![1.0, 0.4, -0.5, 0.6]);
        let vc = crate::CVec::from_fn(4, |j, _| C64::new(v[j], 0.0));
        let wc = crate::CVec::from_fn(4, |j, _| C64::new(w[j], 0.0));
        let real = alpha.eval(&[&v, &w]);
        let comp = alpha.eval_complex(&[&vc, &wc]);
        assert!((comp - C64::new(real, 0.0)).norm() < 1e-13);
        // scaling a slot by i scales the value by i
        let scaled = alpha.eval_complex(&[&(vc * C64::new(0.0, 1.0)), &wc]);
        assert!((scaled - C64::new(0.0, real)).norm() < 1e-13);
    }

    #[test]
    fn spanning_sets_are_eigenvectors() {
        let i = standard_acs(3);
        let ic = crate::linalg::complexify(&i);
        for (eigen, set) in [(1.0, eigen_spanning_set(&i, 1.0)), (-1.0, eigen_spanning_set(&i, -1.0))] {
            for v in &set {
                assert!((&ic * v - v * C64::new(0.0, eigen)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn holomorphic_volume_form_is_pure_type() {
        // Re(dz1 ∧ dz2 ∧ dz3) on interleaved R^6 is (3,0) + (0,3) with both
        // maxima 1/2, since dz_a(e_b^{1,0}) ∈ {0, 1, i}.
        let t = FormValue::from_increasing(6, 3, |idx| match idx {
            [0, 2, 4] => 1.0,
            [0, 3, 5] => -1.0,
            [1, 2, 5] => -1.0,
            [1, 3, 4] => -1.0,
            _ => 0.0,
        });
        let i = standard_acs(3);
        let profile = form_type_profile(&t, &i);
        for (p, q, max) in profile {
            if p == 3 || q == 3 {
                assert!((max - 0.5).abs() < 1e-13, "pure part ({p},{q}) = {max}");
            } else {
                assert!(max < 1e-13, "mixed part ({p},{q}) = {max}");
            }
        }
    }

    #[test]
    fn conformal_torsion_flux_matches_hand_computation() {
        // g = e^{2 x1} δ, I standard on R^4: ω = e^{2 x1}(e12 + e34),
        // dω = 2 e^{2 x1} e134, and H = dω(I·,I·,I·) = -2 e^{2 x1} e234.
        let g = MatrixField::new(|x: &RVec| RMat::identity(4, 4) * (2.0 * x[0]).exp());
        let i = MatrixField::constant(standard_acs(2));
        let flux = torsion_flux(&g, &i, 4, 1e-3);
        let x = RVec::from_vec(vec![0.3, -0.1, 0.4, 0.2]);
        let h = flux.eval(&x);
        let expect = -2.0 * (2.0 * x[0]).exp();
        assert!((h.get(&[1, 2, 3]) - expect).abs() < 1e-9);
        assert!(h.get(&[0, 1, 2]).abs() < 1e-9);
        assert!(h.get(&[0, 1, 3]).abs() < 1e-9);
        assert!(h.get(&[0, 2, 3]).abs() < 1e-9);

        // Independent route: H = i(T^{2,1} - T^{1,2}) with T = dω, the type
        // parts taken by slotwise projections onto the ±i eigenspaces.
        let im = i.eval(&x);
        let omega = FormField::from_matrix_field(4, MatrixField::new(move |y: &RVec| {
            kahler_form(&(RMat::identity(4, 4) * (2.0 * y[0]).exp()), &standard_acs(2))
        }));
        let t = omega.exterior_derivative(&x, 1e-3);
        let ic = crate::linalg::complexify(&im);
        let eye = CMat::identity(4, 4);
        let p10 = (&eye - &ic * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0);
        let p01 = (&eye + &ic * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let mut vs = Vec::new();
            for _ in 0..3 {
                vs.push(crate::CVec::from_fn(4, |_, _| {
                    C64::new(rng.random::<f64>() - 0.5, 0.0)
                }));
            }
            let part = |pattern: [bool; 3]| -> C64 {
                let slots: Vec<crate::CVec> = (0..3)
                    .map(|s| if pattern[s] { &p01 * &vs[s] } else { &p10 * &vs[s] })
                    .collect();
                t.eval_complex(&[&slots[0], &slots[1], &slots[2]])
            };
            // (2,1): one antiholomorphic slot; (1,2): two.
            let t21 = part([true, false, false]) + part([false, true, false])
                + part([false, false, true]);
            let t12 = part([false, true, true]) + part([true, false, true])
                + part([true, true, false]);
            let combo = (t21 - t12) * C64::new(0.0, 1.0);
            let vr: Vec<RVec> = vs.iter().map(|v| v.map(|z| z.re)).collect();
            let direct = h.eval(&[&vr[0], &vr[1], &vr[2]]);
            assert!((combo - C64::new(direct, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn field_nijenhuis_is_tensorial() {
        // Shear structure: constant and linearly varying extensions of the
        // same pointwise vectors give the same Nijenhuis value.
        let i0 = standard_acs(2);
        let mut b = RMat::zeros(4, 4);
        b[(0, 3)] = -1.0;
        b[(1, 2)] = -1.0;
        let field = move |x: &RVec| &i0 + &b * x[1];
        let x = RVec::from_vec(vec![0.1, -0.2, 0.3, 0.05]);
        let v = RVec::from_vec(vec![1.0, 0.5, -0.3, 0.2]);
        let w = RVec::from_vec(vec![-0.4, 1.0, 0.7, -0.6]);
        let direct = nijenhuis_fd(&field, &x, &v, &w, 1e-3);
        let vc = v.clone();
        let wc = w.clone();
        let constant = nijenhuis_fields(&field, &x, &|_| vc.clone(), &|_| wc.clone(), 1e-3);
        assert!((&constant - &direct).norm() < 1e-8);
        let l = RMat::from_fn(4, 4, |r, c| 0.3 * (r as f64 + 1.0) - 0.2 * (c as f64));
        let (xv, vv) = (x.clone(), v.clone());
        let lv = l.clone();
        let lin_v = move |y: &RVec| &vv + &lv * (y - &xv);
        let (xw, ww) = (x.clone(), w.clone());
        let lin_w = move |y: &RVec| &ww - &l * (y - &xw) * 1.1;
        let varying = nijenhuis_fields(&field, &x, &lin_v, &lin_w, 1e-3);
        assert!(
            (&varying - &direct).norm() < 1e-6 * (1.0 + direct.norm()),
            "tensoriality violated: {}",
            (&varying - &direct).norm()
        );
    }

    #[test]
    fn pullback_matches_composition() {
        let alpha = FormValue::from_increasing(3, 2, |idx| (idx[0] + 2 * idx[1]) as f64);
        let a = RMat::from_row_slice(3, 3, &[1.0, 0.5, 0.0, -0.3, 1.0, 0.2, 0.0, 0.1, 0.9]);
        let pulled = alpha.pullback(&a);
        let v = RVec::from_vec(vec![0.3, -0.7, 0.2]);
        let w = RVec::from_vec(vec![1.1, 0.4, -0.5]);
        let lhs = pulled.eval(&[&v, &w]);
        let rhs = alpha.eval(&[&(&a * &v), &(&a * &w)]);
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
