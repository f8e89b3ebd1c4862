//! Dense kernel for the small symmetric matrices that appear everywhere else:
//! a cyclic Jacobi eigensolver, positive-definiteness tests, SPD inversion and a
//! Richardson-extrapolated finite-difference oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetry tolerance, relative to `max(1, max |m_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Jacobi stops once the off-diagonal Frobenius norm drops below this fraction of `‖M‖_F`.
pub const JACOBI_TOL: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Eigenvalues closer than this fraction of the operator norm share an eigenspace.
pub const EIGEN_GROUP_REL_GAP: f64 = 1e-8;
/// Step ladder for [`fd_derivatives`].
pub const FD_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// A self-adjoint operator on the algebra, stored in the h₀-orthonormal working basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEndomorphism {
    matrix: DMatrix<f64>,
}

impl SymmetricEndomorphism {
    /// Validates squareness and symmetry, then stores the exact symmetric part.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let scale = matrix.amax().max(1.0);
        let residual = (&matrix - matrix.transpose()).amax();
        if residual > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { residual });
        }
        Ok(Self::symmetrized(matrix))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Forces exact symmetry on a matrix that is symmetric up to rounding.
    pub(crate) fn symmetrized(matrix: DMatrix<f64>) -> Self {
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Self { matrix }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(n, n),
        }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self {
            matrix: DMatrix::identity(n, n) * c,
        }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self {
            matrix: DMatrix::from_diagonal(&DVector::from_column_slice(entries)),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self::symmetrized(&self.matrix * a + &other.matrix * b)
    }

    /// `⟨self·x, y⟩`.
    pub fn form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (&self.matrix * x).dot(y)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }

    pub fn eigen(&self) -> Result<SpectralData> {
        sym_eigen(self)
    }

    pub fn is_positive_definite(&self, tol: f64) -> bool {
        is_positive_definite(self, tol)
    }

    /// Inverse of a positive-definite operator.
    pub fn inverse(&self) -> Result<Self> {
        inverse_spd(self)
    }
}

/// Ascending eigenvalues with orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub operator_norm: f64,
}

/// One group of (numerically) equal eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenspace {
    /// Mean of the grouped eigenvalues.
    pub value: f64,
    /// Orthonormal basis as columns.
    pub basis: DMatrix<f64>,
}

impl SpectralData {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    /// Groups consecutive eigenvalues whose gap is at most
    /// `EIGEN_GROUP_REL_GAP · operator_norm`.
    pub fn eigenspaces(&self) -> Vec<Eigenspace> {
        self.eigenspaces_with_gap(EIGEN_GROUP_REL_GAP)
    }

    pub fn eigenspaces_with_gap(&self, rel_gap: f64) -> Vec<Eigenspace> {
        let n = self.eigenvalues.len();
        let threshold = rel_gap * self.operator_norm;
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            if i == n || self.eigenvalues[i] - self.eigenvalues[i - 1] > threshold {
                let cols = self.eigenvectors.columns(start, i - start).into_owned();
                let value = self.eigenvalues[start..i].iter().sum::<f64>() / (i - start) as f64;
                out.push(Eigenspace { value, basis: cols });
                start = i;
            }
        }
        out
    }

    /// Eigenspace belonging to the smallest eigenvalue.
    pub fn bottom_eigenspace(&self) -> Eigenspace {
        self.eigenspaces().into_iter().next().expect("non-empty spectrum")
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.eigenvectors * lambda * self.eigenvectors.transpose()
    }
}

/// Cyclic Jacobi eigensolver.
///
/// Eigenvalues come back ascending; each eigenvector is sign-normalized so that
/// its largest-magnitude entry (first one on ties) is positive, which makes the
/// output a deterministic function of the input.
pub fn sym_eigen(m: &SymmetricEndomorphism) -> Result<SpectralData> {
    let n = m.dim();
    let mut a = m.matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = a.norm();
    let mut converged = false;

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_TOL * norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > JACOBI_TOL * norm {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).into_owned();
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, x)| {
                if x.abs() > best.1.abs() + 1e-14 {
                    (i, *x)
                } else {
                    best
                }
            })
            .1;
        if pivot < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }
    let operator_norm = eigenvalues
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
        operator_norm,
    })
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// True iff the smallest eigenvalue exceeds `tol`.
pub fn is_positive_definite(m: &SymmetricEndomorphism, tol: f64) -> bool {
    match sym_eigen(m) {
        Ok(s) => s.min_eigenvalue() > tol,
        Err(_) => false,
    }
}

pub fn inverse_spd(m: &SymmetricEndomorphism) -> Result<SymmetricEndomorphism> {
    match m.matrix().clone().cholesky() {
        Some(ch) => Ok(SymmetricEndomorphism::symmetrized(ch.inverse())),
        None => Err(Error::NotPositiveDefinite {
            min_eigenvalue: sym_eigen(m).map(|s| s.min_eigenvalue()).unwrap_or(f64::NAN),
        }),
    }
}

/// Solves `m x = b` for positive-definite `m`.
pub fn solve_spd(m: &SymmetricEndomorphism, b: &DVector<f64>) -> Result<DVector<f64>> {
    match m.matrix().clone().cholesky() {
        Some(ch) => Ok(ch.solve(b)),
        None => Err(Error::NotPositiveDefinite {
            min_eigenvalue: sym_eigen(m).map(|s| s.min_eigenvalue()).unwrap_or(f64::NAN),
        }),
    }
}

/// Symmetric square root and inverse square root of a positive-definite matrix.
pub(crate) fn sqrt_and_inv_sqrt(
    m: &SymmetricEndomorphism,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let spec = sym_eigen(m)?;
    if spec.min_eigenvalue() <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: spec.min_eigenvalue(),
        });
    }
    let v = &spec.eigenvectors;
    let root = DVector::from_iterator(spec.eigenvalues.len(), spec.eigenvalues.iter().map(|x| x.sqrt()));
    let inv_root = root.map(|x| 1.0 / x);
    let s = v * DMatrix::from_diagonal(&root) * v.transpose();
    let s_inv = v * DMatrix::from_diagonal(&inv_root) * v.transpose();
    Ok((s, s_inv))
}

/// A derivative estimate together with its Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub error: f64,
}

/// Estimates `f⁽¹⁾(t0) … f⁽ᵐᵃˣ⁾(t0)` (`max_order ≤ 4`) with five-point central
/// differences on the [`FD_STEPS`] ladder, extrapolated twice in `h²`.
///
/// `f` returns `None` outside its domain; if any stencil point is rejected the
/// call fails with [`Error::DomainTooSmall`].
pub fn fd_derivatives<F>(f: F, t0: f64, max_order: usize) -> Result<Vec<DerivativeEstimate>>
where
    F: Fn(f64) -> Option<f64>,
{
    assert!((1..=4).contains(&max_order), "max_order must be in 1..=4");
    // samples[level][k + 2] = f(t0 + k h_level), k = -2..=2
    let mut samples = [[0.0f64; 5]; 3];
    for (level, &h) in FD_STEPS.iter().enumerate() {
        for k in -2i32..=2 {
            let t = t0 + f64::from(k) * h;
            samples[level][(k + 2) as usize] = f(t).ok_or(Error::DomainTooSmall { t })?;
        }
    }

    let raw = |order: usize, level: usize| -> f64 {
        let [m2, m1, z, p1, p2] = samples[level];
        let h = FD_STEPS[level];
        match order {
            1 => (p1 - m1) / (2.0 * h),
            2 => (p1 - 2.0 * z + m1) / (h * h),
            3 => (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h),
            4 => (p2 - 4.0 * p1 + 6.0 * z - 4.0 * m1 + m2) / (h * h * h * h),
            _ => unreachable!(),
        }
    };

    Ok((1..=max_order)
        .map(|order| {
            let d: Vec<f64> = (0..3).map(|l| raw(order, l)).collect();
            let r1a = (4.0 * d[1] - d[0]) / 3.0;
            let r1b = (4.0 * d[2] - d[1]) / 3.0;
            let r2 = (16.0 * r1b - r1a) / 15.0;
            DerivativeEstimate {
                value: r2,
                error: (r2 - r1b).abs(),
            }
        })
        .collect())
}
