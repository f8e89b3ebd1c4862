//! Structure checks for left-invariant metrics on SO(4), where
//! `g = g₁ ⊕ g₂` with both factors copies of so(3).
//!
//! All vectors and operators are in working coordinates. Adapted frames are
//! stored as 6×6 orthogonal matrices whose columns are the frame vectors.
//! Within each factor a frame `(E₁,E₂,E₃)` is always bracket-compatible:
//! `[E₁,E₂] = E₃` cyclically.

use std::ops::Range;

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::algebra::{LieAlgebra, Subalgebra, Vector};
use crate::curvature::{puttmann_curvature, LeftInvariantMetric};
use crate::error::{Error, Result};
use crate::numerics::SymmetricEndomorphism;
use crate::sampling::{self, BestK};

/// Entries that must vanish in a [`BlockForm`] are checked against this.
pub const BLOCK_PATTERN_TOL: f64 = 1e-10;
/// Slack for the positive-semidefinite test of `(4/3)diag(c,d) − τ`.
pub const BOUND_SLACK: f64 = 1e-12;
const PLANE_REFINE: usize = 5;
const PLANE_ITERATIONS: usize = 100;

/// The two factor ranges, after checking that `algebra` is so(3) ⊕ so(3)
/// with unit-normalized brackets on orthonormal pairs.
fn so4_factors(algebra: &LieAlgebra) -> Result<(Range<usize>, Range<usize>)> {
    let factors = algebra.factors();
    if factors.is_empty() {
        return Err(Error::FactorsMissing);
    }
    if algebra.dim() != 6 || factors.len() != 2 || factors.iter().any(|f| f.len() != 3) {
        return Err(Error::NotSo4(format!(
            "expected two 3-dimensional factors in dimension 6, got dimension {} with {} factors",
            algebra.dim(),
            factors.len()
        )));
    }
    for f in factors {
        for i in f.clone() {
            for j in (i + 1)..f.end {
                let w = algebra.bracket(&algebra.basis_vector(i), &algebra.basis_vector(j));
                if (w.norm() - 1.0).abs() > 1e-10 {
                    return Err(Error::NotSo4(format!(
                        "|[e{i},e{j}]| = {} but unit-normalized factors are required",
                        w.norm()
                    )));
                }
            }
        }
    }
    Ok((factors[0].clone(), factors[1].clone()))
}

fn block(m: &DMatrix<f64>, r: &Range<usize>, c: &Range<usize>) -> DMatrix<f64> {
    m.view((r.start, c.start), (r.len(), c.len())).into_owned()
}

fn embed(r: &Range<usize>, v: &DMatrix<f64>, col: usize, n: usize) -> Vector {
    let mut out = Vector::zeros(n);
    out.rows_mut(r.start, r.len()).copy_from(&v.column(col));
    out
}

/// A unit vector of the factor orthogonal to the unit vector `w` (assumed to
/// lie in the factor), built from the factor axis least aligned with `w`.
fn perp_in_factor(r: &Range<usize>, w: &Vector) -> Vector {
    let k = r
        .clone()
        .min_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()))
        .expect("non-empty factor");
    let mut e = Vector::zeros(w.len());
    e[k] = 1.0;
    let v = &e - w * w.dot(&e);
    v.normalize()
}

/// Completes a unit `first` in a factor to a compatible frame `(first, E₂, E₃)`.
fn frame_from_first(algebra: &LieAlgebra, r: &Range<usize>, first: &Vector) -> [Vector; 3] {
    let second = perp_in_factor(r, first);
    let third = algebra.bracket(first, &second);
    [first.clone(), second, third]
}

/// `A₁,…,B₃` as columns in the given order.
fn columns(vs: &[&Vector]) -> DMatrix<f64> {
    DMatrix::from_columns(&vs.iter().map(|v| (*v).clone()).collect::<Vec<_>>())
}

/// Unit eigenvectors of `Φ` lying in a factor up to `tol`.
///
/// Whole eigenspaces are intersected with each factor, so repeated
/// eigenvalues are handled. Returns the first hit, ordered by eigenvalue and
/// then by factor.
pub fn singular_eigenvector(algebra: &LieAlgebra, phi: &SymmetricEndomorphism, tol: f64) -> Result<Option<Vector>> {
    so4_factors(algebra)?;
    let spec = phi.eigen()?;
    for space in spec.eigenspaces() {
        for f in 0..2 {
            let p = algebra.factor_projector(f);
            let n = p.nrows();
            let gram = space.basis.transpose() * (DMatrix::identity(n, n) - &p) * &space.basis;
            let inner = SymmetricEndomorphism::symmetrized(gram).eigen()?;
            if inner.eigenvalues[0].max(0.0).sqrt() <= tol {
                let v = &space.basis * inner.eigenvector(0);
                return Ok(sampling::normalized(&v));
            }
        }
    }
    Ok(None)
}

/// The two diagonal factor blocks of a product endomorphism.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductBlocks {
    #[serde(with = "crate::serde_vec::matrix")]
    pub phi1: DMatrix<f64>,
    #[serde(with = "crate::serde_vec::matrix")]
    pub phi2: DMatrix<f64>,
}

/// `Some` iff the off-diagonal factor block has Frobenius norm `≤ tol`.
pub fn detect_product(algebra: &LieAlgebra, phi: &SymmetricEndomorphism, tol: f64) -> Result<Option<ProductBlocks>> {
    let (g1, g2) = so4_factors(algebra)?;
    let m = phi.matrix();
    if block(m, &g1, &g2).norm() > tol {
        return Ok(None);
    }
    Ok(Some(ProductBlocks {
        phi1: block(m, &g1, &g1),
        phi2: block(m, &g2, &g2),
    }))
}

/// `Φ` in the adapted basis `{A₁,A₂,A₃,B₁,B₂,B₃}`: `c` on `A₁, A₂`, the
/// symmetric block `[[a₁,a₃],[a₃,a₂]]` on `τ = span{A₃,B₁}`, `d` on `B₂, B₃`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusForm {
    pub c: f64,
    pub d: f64,
    pub tau_block: [[f64; 2]; 2],
    /// Columns `A₁,A₂,A₃,B₁,B₂,B₃` in working coordinates.
    #[serde(with = "crate::serde_vec::matrix")]
    pub basis: DMatrix<f64>,
    /// Largest deviation of `basisᵀΦ basis` from the pattern.
    pub residual: f64,
}

impl TorusForm {
    /// The form in the frame `A₁ = e₁, A₂ = e₂, A₃ = [A₁,A₂]`,
    /// `B₁ = e₄, B₂ = e₅, B₃ = [B₁,B₂]`.
    pub fn standard(algebra: &LieAlgebra, c: f64, d: f64, tau_block: [[f64; 2]; 2]) -> Result<Self> {
        let (g1, g2) = so4_factors(algebra)?;
        let a1 = algebra.basis_vector(g1.start);
        let a2 = algebra.basis_vector(g1.start + 1);
        let a3 = algebra.bracket(&a1, &a2);
        let b1 = algebra.basis_vector(g2.start);
        let b2 = algebra.basis_vector(g2.start + 1);
        let b3 = algebra.bracket(&b1, &b2);
        if (tau_block[0][1] - tau_block[1][0]).abs() > 0.0 {
            return Err(Error::NotSymmetric {
                residual: (tau_block[0][1] - tau_block[1][0]).abs(),
            });
        }
        Ok(Self {
            c,
            d,
            tau_block,
            basis: columns(&[&a1, &a2, &a3, &b1, &b2, &b3]),
            residual: 0.0,
        })
    }

    /// The 6×6 pattern in the adapted basis.
    pub fn pattern(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(6, 6);
        m[(0, 0)] = self.c;
        m[(1, 1)] = self.c;
        m[(2, 2)] = self.tau_block[0][0];
        m[(2, 3)] = self.tau_block[0][1];
        m[(3, 2)] = self.tau_block[1][0];
        m[(3, 3)] = self.tau_block[1][1];
        m[(4, 4)] = self.d;
        m[(5, 5)] = self.d;
        m
    }

    /// `Φ` in working coordinates.
    pub fn phi(&self) -> SymmetricEndomorphism {
        SymmetricEndomorphism::symmetrized(&self.basis * self.pattern() * self.basis.transpose())
    }

    /// `(4/3)diag(c,d) − τ`.
    pub fn bound_gap(&self) -> Matrix2<f64> {
        let t = &self.tau_block;
        Matrix2::new(
            4.0 / 3.0 * self.c - t[0][0],
            -t[0][1],
            -t[1][0],
            4.0 / 3.0 * self.d - t[1][1],
        )
    }

    /// Smallest eigenvalue of [`Self::bound_gap`].
    pub fn bound_min_eigenvalue(&self) -> f64 {
        self.bound_gap().symmetric_eigenvalues().min()
    }

    pub fn bound_satisfied(&self) -> bool {
        self.bound_min_eigenvalue() >= -BOUND_SLACK
    }

    /// `A₁,…,B₃` by index `0..6`.
    pub fn frame_vector(&self, i: usize) -> Vector {
        self.basis.column(i).into_owned()
    }
}

/// Eigenvector of a 3×3 block whose eigenvalue is the odd one out; `None`
/// unless the other two agree to `tol`. For a scalar block the factor axis
/// `axis` is returned.
fn distinct_eigenvector(m: &DMatrix<f64>, tol: f64, axis: usize) -> Result<Option<DMatrix<f64>>> {
    let spec = SymmetricEndomorphism::symmetrized(m.clone()).eigen()?;
    let l = &spec.eigenvalues;
    let col = if l[2] - l[0] <= tol {
        let mut e = DMatrix::zeros(3, 1);
        e[axis] = 1.0;
        return Ok(Some(e));
    } else if l[1] - l[0] <= tol {
        2
    } else if l[2] - l[1] <= tol {
        0
    } else {
        return Ok(None);
    };
    Ok(Some(DMatrix::from_column_slice(3, 1, spec.eigenvector(col).as_slice())))
}

/// Looks for a compatible adapted basis putting `Φ` in torus form.
///
/// `A₃` and `B₁` come from the rank-one coupling `g₁ → g₂` when it is nonzero,
/// and otherwise from the odd eigenvalue of each factor block. The remaining
/// frame vectors are completed by brackets. The second component reports
/// whether `(4/3)diag(c,d) − τ` is positive semidefinite.
pub fn detect_torus_form(
    algebra: &LieAlgebra,
    phi: &SymmetricEndomorphism,
    tol: f64,
) -> Result<Option<(TorusForm, bool)>> {
    let (g1, g2) = so4_factors(algebra)?;
    let n = algebra.dim();
    let m = phi.matrix();
    let coupling = block(m, &g1, &g2);
    let svd = coupling.clone().svd(true, true);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let (a3_dir, b1_dir) = if svd.singular_values[order[0]] > tol {
        if svd.singular_values[order[1]] > tol {
            return Ok(None);
        }
        let u = svd.u.as_ref().expect("requested").column(order[0]).into_owned();
        let v = svd.v_t.as_ref().expect("requested").row(order[0]).transpose();
        (DMatrix::from_column_slice(3, 1, u.as_slice()), DMatrix::from_column_slice(3, 1, v.as_slice()))
    } else {
        let Some(a) = distinct_eigenvector(&block(m, &g1, &g1), tol, 2)? else {
            return Ok(None);
        };
        let Some(b) = distinct_eigenvector(&block(m, &g2, &g2), tol, 0)? else {
            return Ok(None);
        };
        (a, b)
    };

    let a3 = embed(&g1, &a3_dir, 0, n);
    let a1 = perp_in_factor(&g1, &a3);
    let a2 = algebra.bracket(&a3, &a1);
    let mut b1 = embed(&g2, &b1_dir, 0, n);
    if phi.form(&a3, &b1) < 0.0 {
        b1 = -b1;
    }
    let [b1, b2, b3] = frame_from_first(algebra, &g2, &b1);
    let basis = columns(&[&a1, &a2, &a3, &b1, &b2, &b3]);
    let local = basis.transpose() * m * &basis;

    let mut form = TorusForm {
        c: 0.5 * (local[(0, 0)] + local[(1, 1)]),
        d: 0.5 * (local[(4, 4)] + local[(5, 5)]),
        tau_block: [[local[(2, 2)], local[(2, 3)]], [local[(2, 3)], local[(3, 3)]]],
        basis,
        residual: 0.0,
    };
    form.residual = (&local - form.pattern()).amax();
    if form.residual > tol {
        return Ok(None);
    }
    let bound = form.bound_satisfied();
    Ok(Some((form, bound)))
}

/// `k_h(αA₁ + βB₂, A₂ + B₃)` and `¾(|αA₃+βB₁|²_{h̃} − |αA₃+βB₁|²_h)` with
/// `h̃ = (4/3)diag(c,d)` on `τ`.
pub fn torus_curvature_identity(algebra: &LieAlgebra, form: &TorusForm, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let metric = LeftInvariantMetric::new(form.phi())?;
    let e = |i| form.frame_vector(i);
    let z1 = e(0) * alpha + e(4) * beta;
    let z2 = e(1) + e(5);
    let k = puttmann_curvature(algebra, &metric, &z1, &z2);
    let t = &form.tau_block;
    let h_tilde = 4.0 / 3.0 * (form.c * alpha * alpha + form.d * beta * beta);
    let h = t[0][0] * alpha * alpha + 2.0 * t[0][1] * alpha * beta + t[1][1] * beta * beta;
    Ok((k, 0.75 * (h_tilde - h)))
}

/// A `Φ`-invariant plane `span{u, v}` with `u ∈ g₁`, `v ∈ g₂`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantPlane {
    #[serde(with = "crate::serde_vec")]
    pub u: Vector,
    #[serde(with = "crate::serde_vec")]
    pub v: Vector,
    /// Frobenius norm of `(I − P)ΦQ` for the orthonormal frame `Q = [u v]`.
    pub residual: f64,
}

impl InvariantPlane {
    pub fn subalgebra(&self, algebra: &LieAlgebra) -> Result<Subalgebra> {
        Subalgebra::new(algebra, &[self.u.clone(), self.v.clone()])
    }
}

fn plane_residual(phi: &DMatrix<f64>, u: &Vector, v: &Vector) -> DMatrix<f64> {
    let q = DMatrix::from_columns(&[u.clone(), v.clone()]);
    let pq = phi * &q;
    &pq - &q * (q.transpose() * &pq)
}

/// Searches the 2-dimensional abelian subalgebras `span{(u,0),(0,v)}` for
/// one that `Φ` leaves invariant up to `tol`.
///
/// Candidates are built from the factor components of `Φ`'s eigenvectors and
/// from the eigenvectors of the factor blocks, then from `budget` random
/// planes; the best few are polished by least squares. `None` means the
/// search failed, not that no such plane exists.
pub fn invariant_abelian_plane(
    algebra: &LieAlgebra,
    phi: &SymmetricEndomorphism,
    tol: f64,
    budget: usize,
    seed: u64,
) -> Result<Option<InvariantPlane>> {
    let (g1, g2) = so4_factors(algebra)?;
    let n = algebra.dim();
    let m = phi.matrix();
    let build = |p: &[f64]| -> Option<(Vector, Vector)> {
        let u = sampling::normalized(&Vector::from_column_slice(&p[..3]))?;
        let v = sampling::normalized(&Vector::from_column_slice(&p[3..]))?;
        let mut uu = Vector::zeros(n);
        uu.rows_mut(g1.start, 3).copy_from(&u);
        let mut vv = Vector::zeros(n);
        vv.rows_mut(g2.start, 3).copy_from(&v);
        Some((uu, vv))
    };
    let residual_vec = |p: &[f64]| match build(p) {
        Some((u, v)) => {
            let r = plane_residual(m, &u, &v);
            Vector::from_column_slice(r.as_slice())
        }
        None => Vector::from_element(2 * n, 1.0),
    };
    let score = |p: &[f64]| residual_vec(p).norm();

    let spec = phi.eigen()?;
    let mut u_dirs: Vec<Vec<f64>> = Vec::new();
    let mut v_dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let w = spec.eigenvector(i);
        u_dirs.push(w.rows(g1.start, 3).iter().copied().collect());
        v_dirs.push(w.rows(g2.start, 3).iter().copied().collect());
    }
    for (dirs, r) in [(&mut u_dirs, &g1), (&mut v_dirs, &g2)] {
        let s = SymmetricEndomorphism::symmetrized(block(m, r, r)).eigen()?;
        for i in 0..3 {
            dirs.push(s.eigenvector(i).iter().copied().collect());
        }
    }

    let mut best = BestK::new(PLANE_REFINE);
    for u in &u_dirs {
        for v in &v_dirs {
            let p: Vec<f64> = u.iter().chain(v.iter()).copied().collect();
            if build(&p).is_some() {
                best.offer(score(&p), p);
            }
        }
    }
    let mut rng = sampling::rng(seed);
    for _ in 0..budget {
        let p: Vec<f64> = sampling::gaussian(&mut rng, 6).data.into();
        best.offer(score(&p), p);
    }

    let mut found: Option<(f64, Vec<f64>)> = None;
    for (s0, start) in best.into_vec() {
        let (p, s) = if s0 <= tol * 1e-3 {
            (start, s0)
        } else {
            sampling::levenberg_marquardt(residual_vec, start, PLANE_ITERATIONS)
        };
        if found.as_ref().is_none_or(|(b, _)| s < *b) {
            found = Some((s, p));
        }
    }
    let Some((residual, p)) = found else { return Ok(None) };
    if residual > tol {
        return Ok(None);
    }
    let (u, v) = build(&p).expect("scored candidates are non-degenerate");
    Ok(Some(InvariantPlane { u, v, residual }))
}

/// `Φ` in an adapted basis `{A₁,B₁,A₂,B₂,A₃,B₃}` with the invariant plane on
/// `A₁, B₁`:
///
/// ```text
/// a1 a3  0  0  0  0
/// a3 a2  0  0  0  0
///  0  0 b1 b3  λ  0
///  0  0 b3 b2  0  μ
///  0  0  λ  0 c1 c3
///  0  0  0  μ c3 c2
/// ```
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockForm {
    /// Columns `A₁,B₁,A₂,B₂,A₃,B₃` in working coordinates.
    #[serde(with = "crate::serde_vec::matrix")]
    pub basis: DMatrix<f64>,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub lambda_c: f64,
    pub mu_c: f64,
    /// Largest entry that should vanish.
    pub residual: f64,
}

impl BlockForm {
    pub fn matrix(&self) -> DMatrix<f64> {
        let [a1, a2, a3] = self.a;
        let [b1, b2, b3] = self.b;
        let [c1, c2, c3] = self.c;
        let (l, mu) = (self.lambda_c, self.mu_c);
        #[rustfmt::skip]
        let rows = [
            a1, a3, 0.0, 0.0, 0.0, 0.0,
            a3, a2, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, b1, b3, l, 0.0,
            0.0, 0.0, b3, b2, 0.0, mu,
            0.0, 0.0, l, 0.0, c1, c3,
            0.0, 0.0, 0.0, mu, c3, c2,
        ];
        DMatrix::from_row_slice(6, 6, &rows)
    }
}

const BLOCK_ZEROS: [(usize, usize); 10] = [
    (0, 2),
    (0, 3),
    (0, 4),
    (0, 5),
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (2, 5),
    (3, 4),
];

/// Builds the [`BlockForm`] from an invariant plane with one direction per
/// factor.
///
/// The plane directions become `A₁, B₁`. In the complements, `A₂` and `B₂`
/// are the leading singular directions of the coupling block, which makes
/// `⟨ΦA₂,B₃⟩ = ⟨ΦA₃,B₂⟩ = 0`; then `A₃ = [A₁,A₂]` and `B₃ = [B₁,B₂]`.
pub fn block_form_basis(algebra: &LieAlgebra, phi: &SymmetricEndomorphism, plane: &Subalgebra) -> Result<BlockForm> {
    let (g1, g2) = so4_factors(algebra)?;
    if plane.dim() != 2 {
        return Err(Error::PlaneNotSplit);
    }
    let m = phi.matrix();
    let q = plane.basis();
    let scale = phi.eigen()?.operator_norm.max(1.0);
    let invariance = (m * q - q * (q.transpose() * m * q)).norm();
    if invariance > BLOCK_PATTERN_TOL * scale {
        return Err(Error::PlaneNotInvariant { residual: invariance });
    }

    let mut dirs = Vec::new();
    for f in 0..2 {
        let p = algebra.factor_projector(f);
        let gram = q.transpose() * (DMatrix::identity(6, 6) - &p) * q;
        let s = SymmetricEndomorphism::symmetrized(gram).eigen()?;
        if s.eigenvalues[0].max(0.0).sqrt() > 1e-8 {
            return Err(Error::PlaneNotSplit);
        }
        let w = &p * (q * s.eigenvector(0));
        dirs.push(sampling::normalized(&w).ok_or(Error::PlaneNotSplit)?);
    }
    let (a1, b1) = (dirs[0].clone(), dirs[1].clone());

    let [_, p1, q1] = frame_from_first(algebra, &g1, &a1);
    let [_, p2, q2] = frame_from_first(algebra, &g2, &b1);
    let u = columns(&[&p1, &q1]);
    let v = columns(&[&p2, &q2]);
    let coupling = u.transpose() * m * &v;
    let svd = coupling.svd(true, true);
    let k = if svd.singular_values[0] >= svd.singular_values[1] { 0 } else { 1 };
    let a2 = &u * svd.u.expect("requested").column(k);
    let b2 = &v * svd.v_t.expect("requested").row(k).transpose();
    let a3 = algebra.bracket(&a1, &a2);
    let b3 = algebra.bracket(&b1, &b2);

    let basis = columns(&[&a1, &b1, &a2, &b2, &a3, &b3]);
    let local = basis.transpose() * m * &basis;
    let residual = BLOCK_ZEROS
        .iter()
        .map(|&(i, j)| local[(i, j)].abs().max(local[(j, i)].abs()))
        .fold(0.0, f64::max);
    if residual > BLOCK_PATTERN_TOL * scale {
        return Err(Error::PlaneNotInvariant { residual });
    }
    let _ = (g1, g2);
    Ok(BlockForm {
        a: [local[(0, 0)], local[(1, 1)], local[(0, 1)]],
        b: [local[(2, 2)], local[(3, 3)], local[(2, 3)]],
        c: [local[(4, 4)], local[(5, 5)], local[(4, 5)]],
        lambda_c: local[(2, 4)],
        mu_c: local[(3, 5)],
        basis,
        residual,
    })
}

/// Everything the checks above can say about one `Φ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct So4Report {
    #[serde(with = "crate::serde_vec::option")]
    pub singular: Option<Vector>,
    pub product: Option<ProductBlocks>,
    pub torus_form: Option<TorusReport>,
    pub invariant_plane: Option<InvariantPlane>,
    pub block_form: Option<BlockForm>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusReport {
    #[serde(flatten)]
    pub form: TorusForm,
    pub bound: bool,
}

impl So4Report {
    /// True iff a torus form was found and its `4/3` bound fails.
    pub fn torus_bound_violated(&self) -> bool {
        self.torus_form.as_ref().is_some_and(|t| !t.bound)
    }
}

pub fn classify(
    algebra: &LieAlgebra,
    phi: &SymmetricEndomorphism,
    tol: f64,
    budget: usize,
    seed: u64,
) -> Result<So4Report> {
    let singular = singular_eigenvector(algebra, phi, tol)?;
    let product = detect_product(algebra, phi, tol)?;
    let torus_form = detect_torus_form(algebra, phi, tol)?.map(|(form, bound)| TorusReport { form, bound });
    let invariant_plane = invariant_abelian_plane(algebra, phi, tol, budget, seed)?;
    let block_form = match &invariant_plane {
        Some(p) => p
            .subalgebra(algebra)
            .and_then(|sub| block_form_basis(algebra, phi, &sub))
            .ok(),
        None => None,
    };
    Ok(So4Report {
        singular,
        product,
        torus_form,
        invariant_plane,
        block_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::min_curvature_search;

    fn g() -> LieAlgebra {
        LieAlgebra::so4()
    }

    fn diag(d: &[f64]) -> SymmetricEndomorphism {
        SymmetricEndomorphism::diagonal(d)
    }

    fn torus(c: f64, d: f64, t: [[f64; 2]; 2]) -> TorusForm {
        TorusForm::standard(&g(), c, d, t).unwrap()
    }

    /// A matrix in block form with respect to the standard frame
    /// `A₁=e₁, B₁=e₄, A₂=e₂, B₂=e₅, A₃=e₃, B₃=e₆`.
    fn block_phi(bf: &BlockForm) -> SymmetricEndomorphism {
        let perm = [0usize, 3, 1, 4, 2, 5];
        let f = DMatrix::from_fn(6, 6, |i, j| if perm[j] == i { 1.0 } else { 0.0 });
        SymmetricEndomorphism::symmetrized(&f * bf.matrix() * f.transpose())
    }

    fn generic_block() -> BlockForm {
        BlockForm {
            basis: DMatrix::identity(6, 6),
            a: [2.0, 3.0, 0.4],
            b: [2.5, 1.7, 0.3],
            c: [1.9, 2.8, -0.35],
            lambda_c: 0.45,
            mu_c: 0.25,
            residual: 0.0,
        }
    }

    #[test]
    fn rejects_non_so4() {
        let so3 = LieAlgebra::so3();
        assert!(matches!(detect_product(&so3, &diag(&[1.0; 3]), 1e-9), Err(Error::FactorsMissing)));
    }

    #[test]
    fn singular_of_diagonal() {
        let v = singular_eigenvector(&g(), &diag(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), 1e-9)
            .unwrap()
            .unwrap();
        assert_eq!(v, g().basis_vector(0));
    }

    #[test]
    fn singular_of_torus_form() {
        let phi = torus(1.0, 2.0, [[1.2, 0.3], [0.3, 2.4]]).phi();
        let v = singular_eigenvector(&g(), &phi, 1e-9).unwrap().unwrap();
        let p1 = g().factor_projector(0);
        assert!((&p1 * &v - &v).norm() < 1e-9 || (g().factor_projector(1) * &v - &v).norm() < 1e-9);
        let pv = phi.apply(&v);
        assert!((&pv - &v * v.dot(&pv)).norm() < 1e-9);
    }

    #[test]
    fn generic_block_form_has_no_singular_eigenvector() {
        let phi = block_phi(&generic_block());
        let spec = phi.eigen().unwrap();
        for i in 0..6 {
            let w = spec.eigenvector(i);
            assert!(w.rows(0, 3).norm() > 1e-3 && w.rows(3, 3).norm() > 1e-3);
        }
        assert_eq!(singular_eigenvector(&g(), &phi, 1e-9).unwrap(), None);
    }

    #[test]
    fn product_detection() {
        let phi = diag(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let p = detect_product(&g(), &phi, 1e-12).unwrap().unwrap();
        assert_eq!(p.phi1, DMatrix::from_diagonal(&Vector::from_column_slice(&[1.0, 2.0, 3.0])));
        assert_eq!(p.phi2, DMatrix::from_diagonal(&Vector::from_column_slice(&[4.0, 5.0, 6.0])));
        let p = detect_product(&g(), &SymmetricEndomorphism::identity(6), 1e-12).unwrap().unwrap();
        assert_eq!(p.phi1, DMatrix::identity(3, 3));
        let coupled = torus(1.0, 1.0, [[1.0, 0.2], [0.2, 1.0]]).phi();
        assert!(detect_product(&g(), &coupled, 1e-9).unwrap().is_none());
    }

    #[test]
    fn torus_boundary_example() {
        let phi = torus(1.0, 1.0, [[4.0 / 3.0, 0.0], [0.0, 4.0 / 3.0]]).phi();
        let (form, bound) = detect_torus_form(&g(), &phi, 1e-9).unwrap().unwrap();
        assert!(bound);
        assert!((form.phi().matrix() - phi.matrix()).amax() < 1e-10);
        assert!((form.c - 1.0).abs() < 1e-12 && (form.d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torus_violating_example() {
        let phi = torus(1.0, 1.0, [[1.0, 0.5], [0.5, 1.0]]).phi();
        let (form, bound) = detect_torus_form(&g(), &phi, 1e-9).unwrap().unwrap();
        assert!(!bound);
        assert!((form.tau_block[0][1] - 0.5).abs() < 1e-12);
        assert!((form.phi().matrix() - phi.matrix()).amax() < 1e-10);
        // the identity plane exhibits the negative curvature
        let (k, rhs) = torus_curvature_identity(&g(), &form, 1.0, 1.0).unwrap();
        assert!((k + 0.25).abs() < 1e-12 && k < -1e-8 && (k - rhs).abs() < 1e-12);
    }

    #[test]
    fn identity_is_a_torus_form() {
        let (form, bound) = detect_torus_form(&g(), &SymmetricEndomorphism::identity(6), 1e-9)
            .unwrap()
            .unwrap();
        assert!(bound);
        assert_eq!(form.tau_block, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn rotated_torus_form_is_found() {
        let base = torus(1.5, 1.2, [[1.7, -0.4], [-0.4, 1.0]]);
        // rotate each factor by a proper rotation that respects brackets
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 0.7);
        let rot2 = nalgebra::Rotation3::from_euler_angles(-0.5, 0.2, 2.1);
        let mut r = DMatrix::zeros(6, 6);
        r.view_mut((0, 0), (3, 3)).copy_from(rot.matrix());
        r.view_mut((3, 3), (3, 3)).copy_from(rot2.matrix());
        let phi = SymmetricEndomorphism::symmetrized(&r * base.phi().matrix() * r.transpose());
        let (form, bound) = detect_torus_form(&g(), &phi, 1e-9).unwrap().unwrap();
        assert!(bound);
        assert!((form.phi().matrix() - phi.matrix()).amax() < 1e-10);
        assert!((form.tau_block[0][1] - 0.4).abs() < 1e-12);
        let b = &form.basis;
        let e = |i| b.column(i).into_owned();
        assert!((g().bracket(&e(0), &e(1)) - e(2)).norm() < 1e-12);
        assert!((g().bracket(&e(4), &e(5)) - e(3)).norm() < 1e-12);
    }

    #[test]
    fn non_torus_product() {
        assert!(detect_torus_form(&g(), &diag(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), 1e-9)
            .unwrap()
            .is_none());
    }

    #[test]
    fn curvature_identity_examples() {
        let f = torus(1.0, 1.0, [[4.0 / 3.0, 0.0], [0.0, 4.0 / 3.0]]);
        let (k, rhs) = torus_curvature_identity(&g(), &f, 1.0, 1.0).unwrap();
        assert!(k.abs() < 1e-14 && rhs.abs() < 1e-14, "{k} {rhs}");
        let f = torus(1.0, 1.0, [[1.0, 0.0], [0.0, 1.0]]);
        let (k, rhs) = torus_curvature_identity(&g(), &f, 1.0, 1.0).unwrap();
        assert!((k - 0.5).abs() < 1e-14 && (rhs - 0.5).abs() < 1e-14, "{k} {rhs}");
        let (k, rhs) = torus_curvature_identity(&g(), &f, 0.0, 0.0).unwrap();
        assert!(k.abs() < 1e-15 && rhs.abs() < 1e-15);
    }

    #[test]
    fn violated_bound_gives_negative_curvature() {
        let f = torus(1.0, 1.0, [[1.0, 0.5], [0.5, 1.0]]);
        let m = LeftInvariantMetric::new(f.phi()).unwrap();
        assert!(min_curvature_search(&g(), &m, 2000, 42).min_value <= -1e-8);
    }

    fn assert_plane_invariant(phi: &SymmetricEndomorphism, p: &InvariantPlane) {
        let r = plane_residual(phi.matrix(), &p.u, &p.v).norm();
        assert!(r <= 1e-9, "{r}");
        assert!(g().bracket(&p.u, &p.v).norm() < 1e-14);
    }

    #[test]
    fn invariant_plane_identity() {
        let phi = SymmetricEndomorphism::identity(6);
        let p = invariant_abelian_plane(&g(), &phi, 1e-9, 100, 1).unwrap().unwrap();
        assert_plane_invariant(&phi, &p);
    }

    #[test]
    fn invariant_plane_torus() {
        let f = torus(1.0, 2.0, [[1.2, 0.3], [0.3, 2.4]]);
        let phi = f.phi();
        let p = invariant_abelian_plane(&g(), &phi, 1e-9, 100, 1).unwrap().unwrap();
        assert_plane_invariant(&phi, &p);
        // τ itself is invariant, but so is span{A₁, B₂}; either may be returned
        let tau = InvariantPlane {
            u: f.frame_vector(2),
            v: f.frame_vector(3),
            residual: 0.0,
        };
        assert_plane_invariant(&phi, &tau);
    }

    #[test]
    fn invariant_plane_product() {
        let phi = diag(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let p = invariant_abelian_plane(&g(), &phi, 1e-9, 100, 1).unwrap().unwrap();
        assert_plane_invariant(&phi, &p);
        assert!(p.u.iter().filter(|x| x.abs() > 1e-9).count() == 1);
        assert!(p.v.iter().filter(|x| x.abs() > 1e-9).count() == 1);
    }

    #[test]
    fn invariant_plane_hidden_in_block_form() {
        let phi = block_phi(&generic_block());
        // hide the frame behind factor rotations
        let rot = nalgebra::Rotation3::from_euler_angles(0.9, 0.1, -0.4);
        let mut r = DMatrix::zeros(6, 6);
        r.view_mut((0, 0), (3, 3)).copy_from(rot.matrix());
        r.view_mut((3, 3), (3, 3)).copy_from(&rot.matrix().transpose());
        let phi = SymmetricEndomorphism::symmetrized(&r * phi.matrix() * r.transpose());
        let p = invariant_abelian_plane(&g(), &phi, 1e-9, 2000, 4).unwrap().unwrap();
        assert_plane_invariant(&phi, &p);
        let bf = block_form_basis(&g(), &phi, &p.subalgebra(&g()).unwrap()).unwrap();
        let local = bf.basis.transpose() * phi.matrix() * &bf.basis;
        assert!((local - bf.matrix()).amax() < 1e-9);
    }

    #[test]
    fn block_form_of_identity() {
        let phi = SymmetricEndomorphism::identity(6);
        let plane = Subalgebra::from_basis_indices(&g(), &[2, 3]).unwrap();
        let bf = block_form_basis(&g(), &phi, &plane).unwrap();
        assert_eq!((bf.a, bf.lambda_c, bf.mu_c), ([1.0, 1.0, 0.0], 0.0, 0.0));
        assert!((bf.b[0] - 1.0).abs() < 1e-15 && bf.b[2].abs() < 1e-15 && bf.c[2].abs() < 1e-15);
    }

    #[test]
    fn block_form_of_torus() {
        let f = torus(1.5, 0.7, [[1.9, 0.2], [0.2, 0.8]]);
        let phi = f.phi();
        let plane = Subalgebra::new(&g(), &[f.frame_vector(2), f.frame_vector(3)]).unwrap();
        let bf = block_form_basis(&g(), &phi, &plane).unwrap();
        assert!((bf.a[0] - 1.9).abs() < 1e-12 && (bf.a[1] - 0.8).abs() < 1e-12 && (bf.a[2].abs() - 0.2).abs() < 1e-12);
        for v in [bf.b[0], bf.c[0]] {
            assert!((v - 1.5).abs() < 1e-12);
        }
        for v in [bf.b[1], bf.c[1]] {
            assert!((v - 0.7).abs() < 1e-12);
        }
        assert!(bf.lambda_c.abs() < 1e-12 && bf.mu_c.abs() < 1e-12);
        assert!(bf.b[2].abs() < 1e-12 && bf.c[2].abs() < 1e-12);
    }

    #[test]
    fn block_form_of_product() {
        let phi = diag(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let plane = Subalgebra::from_basis_indices(&g(), &[0, 3]).unwrap();
        let bf = block_form_basis(&g(), &phi, &plane).unwrap();
        assert!(bf.lambda_c.abs() < 1e-12 && bf.mu_c.abs() < 1e-12);
        let e = |i| bf.basis.column(i).into_owned();
        assert!((g().bracket(&e(0), &e(2)) - e(4)).norm() < 1e-12);
        assert!((g().bracket(&e(1), &e(3)) - e(5)).norm() < 1e-12);
    }

    #[test]
    fn block_form_errors() {
        let phi = diag(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let not_invariant = Subalgebra::new(&g(), &[g().basis_vector(0) + g().basis_vector(1), g().basis_vector(3)]).unwrap();
        assert!(matches!(
            block_form_basis(&g(), &phi, &not_invariant),
            Err(Error::PlaneNotInvariant { .. })
        ));
        let in_one_factor = Subalgebra::from_basis_indices(&g(), &[0]).unwrap();
        assert!(matches!(block_form_basis(&g(), &phi, &in_one_factor), Err(Error::PlaneNotSplit)));
    }

    #[test]
    fn classify_report() {
        let f = torus(1.0, 1.0, [[1.0, 0.5], [0.5, 1.0]]);
        let r = classify(&g(), &f.phi(), 1e-9, 200, 1).unwrap();
        assert!(r.torus_bound_violated());
        assert!(r.singular.is_some() && r.product.is_none() && r.block_form.is_some());
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["torus_form"]["bound"], false);
        assert!(v["torus_form"]["tau_block"].is_array());
    }
}
