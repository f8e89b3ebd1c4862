//! Metric Lie algebras given by structure constants.
//!
//! Everything downstream works in an h₀-orthonormal *working basis*. When the
//! input metric is the identity the working basis is the input basis; otherwise
//! the constructor switches to the basis `f_a = Σ_i S_ia e_i` with
//! `S = M^{-1/2}` and records `S` so callers can convert coordinates.
//!
//! Basis convention for so(3): `[e₁,e₂] = e₃`, `[e₂,e₃] = e₁`, `[e₃,e₁] = e₂`
//! (cross product), so the standard basis is orthonormal for `½·trace(Z₁Z₂ᵀ)`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, SymmetricEndomorphism};

pub type Vector = DVector<f64>;

/// Absolute tolerance for antisymmetry, Jacobi and ad-invariance checks on basis triples.
pub const VALIDATION_TOL: f64 = 1e-12;
/// Closure / abelian tolerance for subalgebras.
pub const SUBALGEBRA_TOL: f64 = 1e-10;
/// Singular-value threshold used for spans and kernels.
pub const RANK_TOL: f64 = 1e-10;

/// `"identity"` or an explicit symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

impl Default for MetricSpec {
    fn default() -> Self {
        MetricSpec::Named("identity".into())
    }
}

/// On-disk form of an algebra: `{"dim": n, "structure": [[i,j,k,c],...],
/// "metric": "identity" | [[...]], "factors": [[first,last],...]}`.
///
/// Structure entries are taken literally: `[e_i,e_j]` gets `c·e_k` and nothing
/// is filled in for `[e_j,e_i]`. Factor ranges are inclusive and 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDocument {
    pub dim: usize,
    pub structure: Vec<(usize, usize, usize, f64)>,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    /// c[(i*dim + j)*dim + k] in the working basis.
    structure: Vec<f64>,
    factors: Vec<Range<usize>>,
    /// Input coordinates = `basis_change · working coordinates`.
    basis_change: DMatrix<f64>,
}

impl LieAlgebra {
    /// so(3) with the cyclic convention and identity metric.
    pub fn so3() -> Self {
        Self::from_structure_constants(3, &so3_entries(0), None, None)
            .expect("so(3) table is valid")
    }

    /// so(4) = so(3) ⊕ so(3), basis order A₁,A₂,A₃,B₁,B₂,B₃.
    pub fn so4() -> Self {
        let mut entries = so3_entries(0);
        entries.extend(so3_entries(3));
        Self::from_structure_constants(6, &entries, None, Some(&[(0, 2), (3, 5)]))
            .expect("so(4) table is valid")
    }

    /// Validates a structure table and metric and builds the algebra.
    ///
    /// `factors` are inclusive index ranges of ideals; `metric = None` means identity.
    pub fn from_structure_constants(
        dim: usize,
        entries: &[(usize, usize, usize, f64)],
        metric: Option<&DMatrix<f64>>,
        factors: Option<&[(usize, usize)]>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidStructure("dimension must be positive".into()));
        }
        let mut table = vec![0.0; dim * dim * dim];
        let mut seen = std::collections::HashSet::new();
        for &(i, j, k, c) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::InvalidStructure(format!(
                    "entry [{i},{j},{k}] out of range for dim {dim}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidStructure(format!("entry [{i},{j},{k}] is not finite")));
            }
            if !seen.insert((i, j, k)) {
                return Err(Error::InvalidStructure(format!("duplicate entry [{i},{j},{k}]")));
            }
            table[(i * dim + j) * dim + k] = c;
        }
        let at = |i: usize, j: usize, k: usize| table[(i * dim + j) * dim + k];

        let metric = match metric {
            Some(m) => {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: m.nrows(),
                    });
                }
                Some(SymmetricEndomorphism::new(m.clone())?)
            }
            None => None,
        };

        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let residual = at(i, j, k) + at(j, i, k);
                    if residual.abs() > VALIDATION_TOL {
                        return Err(Error::AntisymmetryViolation { i, j, k, residual });
                    }
                }
            }
        }

        let bracket_in = |x: &Vector, y: &Vector| -> Vector { bracket_with(dim, &table, x, y) };
        let e = |i: usize| -> Vector {
            let mut v = Vector::zeros(dim);
            v[i] = 1.0;
            v
        };
        for i in 0..dim {
            for j in (i + 1)..dim {
                for k in (j + 1)..dim {
                    let (ei, ej, ek) = (e(i), e(j), e(k));
                    let jac = bracket_in(&ei, &bracket_in(&ej, &ek))
                        + bracket_in(&ej, &bracket_in(&ek, &ei))
                        + bracket_in(&ek, &bracket_in(&ei, &ej));
                    let residual = jac.amax();
                    if residual > VALIDATION_TOL {
                        return Err(Error::JacobiViolation { i, j, k, residual });
                    }
                }
            }
        }

        let gram = metric
            .as_ref()
            .map(|m| m.matrix().clone())
            .unwrap_or_else(|| DMatrix::identity(dim, dim));
        if let Some(m) = &metric {
            let spec = m.eigen()?;
            if spec.min_eigenvalue() <= 0.0 {
                return Err(Error::MetricNotPositiveDefinite {
                    min_eigenvalue: spec.min_eigenvalue(),
                });
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    // <[e_i,e_j], e_k> + <e_j, [e_i,e_k]>
                    let mut residual = 0.0;
                    for l in 0..dim {
                        residual += at(i, j, l) * gram[(l, k)] + at(i, k, l) * gram[(j, l)];
                    }
                    if residual.abs() > VALIDATION_TOL {
                        return Err(Error::MetricNotAdInvariant { i, j, k, residual });
                    }
                }
            }
        }

        let factors = match factors {
            Some(f) => validate_factors(dim, f, &table, &gram)?,
            None => Vec::new(),
        };

        let (basis_change, structure) = match &metric {
            None => (DMatrix::identity(dim, dim), table),
            Some(m) => {
                let (_, s_inv_sqrt) = numerics::sqrt_and_inv_sqrt(m)?;
                let s = s_inv_sqrt;
                let s_inv = s.clone().try_inverse().ok_or_else(|| {
                    Error::InvalidStructure("metric square root is singular".into())
                })?;
                let mut working = vec![0.0; dim * dim * dim];
                for a in 0..dim {
                    for b in 0..dim {
                        let br = bracket_with(dim, &table, &s.column(a).into_owned(), &s.column(b).into_owned());
                        let w = &s_inv * br;
                        for c in 0..dim {
                            working[(a * dim + b) * dim + c] = w[c];
                        }
                    }
                }
                (s, working)
            }
        };

        Ok(Self {
            dim,
            structure,
            factors,
            basis_change,
        })
    }

    pub fn from_document(doc: &AlgebraDocument) -> Result<Self> {
        let metric = match &doc.metric {
            MetricSpec::Named(name) if name == "identity" => None,
            MetricSpec::Named(name) => {
                return Err(Error::InvalidStructure(format!("unknown metric name {name:?}")))
            }
            MetricSpec::Matrix(rows) => {
                if rows.len() != doc.dim || rows.iter().any(|r| r.len() != doc.dim) {
                    return Err(Error::DimensionMismatch {
                        expected: doc.dim,
                        got: rows.len(),
                    });
                }
                Some(DMatrix::from_fn(doc.dim, doc.dim, |i, j| rows[i][j]))
            }
        };
        let factors: Option<Vec<(usize, usize)>> = doc
            .factors
            .as_ref()
            .map(|f| f.iter().map(|r| (r[0], r[1])).collect());
        Self::from_structure_constants(doc.dim, &doc.structure, metric.as_ref(), factors.as_deref())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    pub fn basis_vector(&self, i: usize) -> Vector {
        let mut v = Vector::zeros(self.dim);
        v[i] = 1.0;
        v
    }

    pub fn bracket(&self, x: &Vector, y: &Vector) -> Vector {
        bracket_with(self.dim, &self.structure, x, y)
    }

    /// Matrix of `ad_x = [x, ·]`.
    pub fn ad(&self, x: &Vector) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                for k in 0..n {
                    m[(k, j)] += x[i] * self.structure_constant(i, j, k);
                }
            }
        }
        m
    }

    pub fn factors(&self) -> &[Range<usize>] {
        &self.factors
    }

    /// Orthogonal projector onto factor `f`.
    pub fn factor_projector(&self, f: usize) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.dim, self.dim);
        for i in self.factors[f].clone() {
            p[(i, i)] = 1.0;
        }
        p
    }

    /// Input coordinates of a working-basis vector.
    pub fn to_input_coords(&self, working: &Vector) -> Vector {
        &self.basis_change * working
    }

    pub fn to_working_coords(&self, input: &Vector) -> Result<Vector> {
        self.basis_change
            .clone()
            .lu()
            .solve(input)
            .ok_or_else(|| Error::InvalidStructure("singular change of basis".into()))
    }

    pub fn basis_change(&self) -> &DMatrix<f64> {
        &self.basis_change
    }

    /// Max over basis triples of `|[e_i,[e_j,e_k]] + cyclic|`.
    pub fn jacobi_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    let (ei, ej, ek) = (self.basis_vector(i), self.basis_vector(j), self.basis_vector(k));
                    let jac = self.bracket(&ei, &self.bracket(&ej, &ek))
                        + self.bracket(&ej, &self.bracket(&ek, &ei))
                        + self.bracket(&ek, &self.bracket(&ei, &ej));
                    worst = worst.max(jac.amax());
                }
            }
        }
        worst
    }

    /// `⟨[z1,z2],z3⟩ + ⟨z2,[z1,z3]⟩`.
    pub fn ad_invariance_defect(&self, z1: &Vector, z2: &Vector, z3: &Vector) -> f64 {
        self.bracket(z1, z2).dot(z3) + z2.dot(&self.bracket(z1, z3))
    }

    /// Kernel of `ad_x` (the centralizer of `x`) as orthonormal columns.
    pub fn centralizer_basis(&self, x: &Vector) -> DMatrix<f64> {
        let ad = self.ad(x);
        let gram = SymmetricEndomorphism::symmetrized(ad.transpose() * &ad);
        let spec = gram.eigen().expect("Jacobi converges on small Gram matrices");
        let keep: Vec<usize> = (0..self.dim)
            .filter(|&i| spec.eigenvalues[i].max(0.0).sqrt() <= RANK_TOL)
            .collect();
        let mut out = DMatrix::zeros(self.dim, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            out.set_column(c, &spec.eigenvector(i));
        }
        out
    }

    /// `[g,g]`: span of all basis brackets, rank threshold [`RANK_TOL`].
    pub fn derived_algebra(&self) -> Subalgebra {
        let n = self.dim;
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.bracket(&self.basis_vector(i), &self.basis_vector(j));
                gram += &w * w.transpose();
            }
        }
        let spec = SymmetricEndomorphism::symmetrized(gram)
            .eigen()
            .expect("Jacobi converges on small Gram matrices");
        let keep: Vec<usize> = (0..n)
            .filter(|&i| spec.eigenvalues[i].max(0.0).sqrt() > RANK_TOL)
            .collect();
        let mut basis = DMatrix::zeros(n, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            basis.set_column(c, &spec.eigenvector(i));
        }
        Subalgebra { basis }
    }
}

fn so3_entries(offset: usize) -> Vec<(usize, usize, usize, f64)> {
    let (a, b, c) = (offset, offset + 1, offset + 2);
    vec![
        (a, b, c, 1.0),
        (b, a, c, -1.0),
        (b, c, a, 1.0),
        (c, b, a, -1.0),
        (c, a, b, 1.0),
        (a, c, b, -1.0),
    ]
}

fn bracket_with(dim: usize, table: &[f64], x: &Vector, y: &Vector) -> Vector {
    let mut out = Vector::zeros(dim);
    for i in 0..dim {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        for j in 0..dim {
            let w = xi * y[j];
            if w == 0.0 {
                continue;
            }
            let base = (i * dim + j) * dim;
            for k in 0..dim {
                out[k] += w * table[base + k];
            }
        }
    }
    out
}

fn validate_factors(
    dim: usize,
    ranges: &[(usize, usize)],
    table: &[f64],
    gram: &DMatrix<f64>,
) -> Result<Vec<Range<usize>>> {
    let mut owner = vec![None; dim];
    let mut out = Vec::with_capacity(ranges.len());
    for (f, &(first, last)) in ranges.iter().enumerate() {
        if first > last || last >= dim {
            return Err(Error::FactorViolation(format!(
                "range [{first},{last}] invalid for dim {dim}"
            )));
        }
        for slot in owner.iter_mut().take(last + 1).skip(first) {
            if slot.is_some() {
                return Err(Error::FactorViolation("factor ranges overlap".into()));
            }
            *slot = Some(f);
        }
        out.push(first..last + 1);
    }
    let at = |i: usize, j: usize, k: usize| table[(i * dim + j) * dim + k];
    for i in 0..dim {
        let Some(fi) = owner[i] else { continue };
        for j in 0..dim {
            if owner[j] != Some(fi) && gram[(i, j)].abs() > VALIDATION_TOL {
                return Err(Error::FactorViolation(format!(
                    "factor {fi} is not orthogonal to basis vector {j}"
                )));
            }
            for k in 0..dim {
                let c = at(i, j, k);
                if owner[k] != Some(fi) && c.abs() > VALIDATION_TOL {
                    return Err(Error::FactorViolation(format!(
                        "[e_{i}, e_{j}] has a component along e_{k} outside factor {fi}"
                    )));
                }
            }
        }
    }
    Ok(out)
}

/// A subalgebra, stored as an h₀-orthonormal basis (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Subalgebra {
    basis: DMatrix<f64>,
}

impl Subalgebra {
    /// Orthonormalizes `vectors` (dropping dependent ones) and checks bracket closure.
    pub fn new(algebra: &LieAlgebra, vectors: &[Vector]) -> Result<Self> {
        let n = algebra.dim();
        let mut cols: Vec<Vector> = Vec::new();
        for v in vectors {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            let scale = v.norm();
            let mut w = v.clone();
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for c in &cols {
                    let p = c.dot(&w);
                    w -= c * p;
                }
            }
            let r = w.norm();
            if r > RANK_TOL * scale.max(1.0) {
                cols.push(w / r);
            }
        }
        if cols.is_empty() {
            return Err(Error::EmptySubalgebra);
        }
        let sub = Self {
            basis: DMatrix::from_columns(&cols),
        };
        let residual = sub.closure_residual(algebra);
        if residual > SUBALGEBRA_TOL {
            return Err(Error::SubalgebraNotClosed { residual });
        }
        Ok(sub)
    }

    /// Span of the given working-basis coordinate axes.
    pub fn from_basis_indices(algebra: &LieAlgebra, indices: &[usize]) -> Result<Self> {
        let vectors: Vec<Vector> = indices
            .iter()
            .map(|&i| {
                if i < algebra.dim() {
                    Ok(algebra.basis_vector(i))
                } else {
                    Err(Error::DimensionMismatch {
                        expected: algebra.dim(),
                        got: i + 1,
                    })
                }
            })
            .collect::<Result<_>>()?;
        Self::new(algebra, &vectors)
    }

    /// The whole algebra.
    pub fn full(algebra: &LieAlgebra) -> Self {
        Self {
            basis: DMatrix::identity(algebra.dim(), algebra.dim()),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vector(&self, i: usize) -> Vector {
        self.basis.column(i).into_owned()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// `(Z^h, Z^p)`: components in the subalgebra and in its orthogonal complement.
    pub fn project(&self, z: &Vector) -> (Vector, Vector) {
        let coeffs = self.basis.transpose() * z;
        let zh = &self.basis * coeffs;
        let zp = z - &zh;
        (zh, zp)
    }

    /// Largest component of a basis bracket outside the span.
    pub fn closure_residual(&self, algebra: &LieAlgebra) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in (i + 1)..self.dim() {
                let w = algebra.bracket(&self.basis_vector(i), &self.basis_vector(j));
                worst = worst.max(self.project(&w).1.norm());
            }
        }
        worst
    }

    /// Largest `|[b_i, b_j]|` over basis pairs.
    pub fn abelian_residual(&self, algebra: &LieAlgebra) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in (i + 1)..self.dim() {
                worst = worst.max(algebra.bracket(&self.basis_vector(i), &self.basis_vector(j)).norm());
            }
        }
        worst
    }

    pub fn is_abelian(&self, algebra: &LieAlgebra) -> bool {
        self.abelian_residual(algebra) <= SUBALGEBRA_TOL
    }

    pub fn contains(&self, z: &Vector, tol: f64) -> bool {
        self.project(z).1.norm() <= tol
    }
}

/// `(Z^h, Z^p)` for `Z` with respect to `sub`.
pub fn project(sub: &Subalgebra, z: &Vector) -> (Vector, Vector) {
    sub.project(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn so3_brackets() {
        let g = LieAlgebra::so3();
        let e = |i| g.basis_vector(i);
        assert_eq!(g.bracket(&e(0), &e(1)), e(2));
        assert_eq!(g.bracket(&e(1), &e(2)), e(0));
        assert_eq!(g.bracket(&e(2), &e(0)), e(1));
        assert_eq!(g.jacobi_residual(), 0.0);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(g.ad_invariance_defect(&e(i), &e(j), &e(k)), 0.0);
                }
            }
        }
    }

    #[test]
    fn so4_brackets_and_factors() {
        let g = LieAlgebra::so4();
        let e = |i| g.basis_vector(i);
        assert_eq!(g.bracket(&e(0), &e(1)), e(2));
        assert_eq!(g.bracket(&e(0), &e(4)), Vector::zeros(6));
        assert_eq!(g.factors(), &[0..3, 3..6]);
        let p1 = g.factor_projector(0);
        let p2 = g.factor_projector(1);
        assert_eq!((p1.transpose() * p2).amax(), 0.0);
    }

    #[test]
    fn flipped_entry_is_antisymmetry_violation() {
        let mut entries = so3_entries(0);
        entries[0].3 = -1.0;
        let err = LieAlgebra::from_structure_constants(3, &entries, None, None).unwrap_err();
        assert!(matches!(err, Error::AntisymmetryViolation { i: 0, j: 1, k: 2, .. }), "{err:?}");
    }

    #[test]
    fn broken_jacobi_is_reported() {
        // [e1,e2] = e3 + e1: the cyclic sum on (e1,e2,e3) picks up [e3,e1] = e2.
        let mut entries = so3_entries(0);
        entries.push((0, 1, 0, 1.0));
        entries.push((1, 0, 0, -1.0));
        let err = LieAlgebra::from_structure_constants(3, &entries, None, None).unwrap_err();
        assert!(matches!(err, Error::JacobiViolation { .. }), "{err:?}");
    }

    #[test]
    fn non_invariant_metric() {
        // <[e1,e2],e3> + <e2,[e1,e3]> = 3 - 2 = 1 under diag(1,2,3)
        let m = DMatrix::from_diagonal(&v(&[1.0, 2.0, 3.0]));
        let err = LieAlgebra::from_structure_constants(3, &so3_entries(0), Some(&m), None).unwrap_err();
        match err {
            Error::MetricNotAdInvariant { residual, .. } => assert!(residual.abs() >= 1.0 - 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn indefinite_metric() {
        let m = DMatrix::from_diagonal(&v(&[-1.0, -1.0, -1.0]));
        let err = LieAlgebra::from_structure_constants(3, &so3_entries(0), Some(&m), None).unwrap_err();
        assert!(matches!(err, Error::MetricNotPositiveDefinite { .. }));
    }

    #[test]
    fn scaled_metric_is_orthonormalized() {
        let m = DMatrix::from_diagonal(&v(&[4.0, 4.0, 4.0]));
        let g = LieAlgebra::from_structure_constants(3, &so3_entries(0), Some(&m), None).unwrap();
        // f_a = e_a / 2, so [f1,f2] = e3/4 = f3/2
        let br = g.bracket(&g.basis_vector(0), &g.basis_vector(1));
        assert!((br - g.basis_vector(2) * 0.5).amax() < 1e-15);
        let back = g.to_input_coords(&g.basis_vector(0));
        assert!((back - v(&[0.5, 0.0, 0.0])).amax() < 1e-15);
        let w = g.to_working_coords(&v(&[0.5, 0.0, 0.0])).unwrap();
        assert!((w - g.basis_vector(0)).amax() < 1e-15);
    }

    #[test]
    fn bad_factors() {
        let mut entries = so3_entries(0);
        entries.extend(so3_entries(3));
        let err = LieAlgebra::from_structure_constants(6, &entries, None, Some(&[(0, 3), (4, 5)]))
            .unwrap_err();
        assert!(matches!(err, Error::FactorViolation(_)));
        let err = LieAlgebra::from_structure_constants(6, &entries, None, Some(&[(0, 2), (2, 5)]))
            .unwrap_err();
        assert!(matches!(err, Error::FactorViolation(_)));
    }

    #[test]
    fn out_of_range_entry() {
        let err = LieAlgebra::from_structure_constants(2, &[(0, 1, 2, 1.0)], None, None).unwrap_err();
        assert!(matches!(err, Error::InvalidStructure(_)));
    }

    #[test]
    fn document_round_trip() {
        let json = r#"{"dim": 3, "structure": [[0,1,2,1],[1,0,2,-1],[1,2,0,1],[2,1,0,-1],[2,0,1,1],[0,2,1,-1]], "metric": "identity"}"#;
        let doc: AlgebraDocument = serde_json::from_str(json).unwrap();
        assert_eq!(LieAlgebra::from_document(&doc).unwrap(), LieAlgebra::so3());
        let json = r#"{"dim": 1, "structure": [], "metric": [[2.0]]}"#;
        let doc: AlgebraDocument = serde_json::from_str(json).unwrap();
        assert!(LieAlgebra::from_document(&doc).is_ok());
    }

    #[test]
    fn projections() {
        let g = LieAlgebra::so3();
        let sub = Subalgebra::from_basis_indices(&g, &[2]).unwrap();
        let (zh, zp) = sub.project(&v(&[1.0, 0.0, 1.0]));
        assert_eq!(zh, v(&[0.0, 0.0, 1.0]));
        assert_eq!(zp, v(&[1.0, 0.0, 0.0]));
        let (zh, zp) = sub.project(&v(&[0.0, 0.0, 2.0]));
        assert_eq!(zh, v(&[0.0, 0.0, 2.0]));
        assert_eq!(zp.norm(), 0.0);

        let g4 = LieAlgebra::so4();
        let diag: Vec<Vector> = (0..3)
            .map(|i| g4.basis_vector(i) + g4.basis_vector(i + 3))
            .collect();
        let sub = Subalgebra::new(&g4, &diag).unwrap();
        let (zh, zp) = sub.project(&g4.basis_vector(0));
        assert!((zh - v(&[0.5, 0.0, 0.0, 0.5, 0.0, 0.0])).amax() < 1e-15);
        assert!((zp - v(&[0.5, 0.0, 0.0, -0.5, 0.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn non_closed_span_rejected() {
        let g = LieAlgebra::so3();
        let err = Subalgebra::from_basis_indices(&g, &[0, 1]).unwrap_err();
        assert!(matches!(err, Error::SubalgebraNotClosed { .. }));
    }

    #[test]
    fn derived_algebra_and_centralizer() {
        let g = LieAlgebra::so4();
        assert_eq!(g.derived_algebra().dim(), 6);
        let x = g.basis_vector(0) + g.basis_vector(3);
        let c = g.centralizer_basis(&x);
        assert_eq!(c.ncols(), 2);
        let x = g.basis_vector(0);
        assert_eq!(g.centralizer_basis(&x).ncols(), 4);
    }

    #[test]
    fn random_ad_invariance_and_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = LieAlgebra::so4();
        let sub = Subalgebra::new(&g, &[g.basis_vector(0) + g.basis_vector(4)]).unwrap();
        for _ in 0..1000 {
            let z: Vec<Vector> = (0..3)
                .map(|_| Vector::from_fn(6, |_, _| rng.random_range(-1.0..1.0)))
                .collect();
            let scale = z[0].norm() * z[1].norm() * z[2].norm();
            assert!(g.ad_invariance_defect(&z[0], &z[1], &z[2]).abs() <= 1e-10 * scale);
            let (zh, zp) = sub.project(&z[0]);
            assert!(zh.dot(&zp).abs() <= 1e-12 * z[0].norm_squared());
            let (zhh, _) = sub.project(&zh);
            assert!((zhh - &zh).amax() <= 1e-15);
        }
    }
}
