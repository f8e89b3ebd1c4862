//! Inverse-linear paths `Φ_t = (I − tΨ)⁻¹` and the curvature function
//! `κ(t) = k_{h_t}(Φ_t⁻¹X, Φ_t⁻¹Y)` along them.
//!
//! `κ` is available two ways: [`kappa_direct`] evaluates the four-term
//! curvature formula at `Φ_t`, and [`kappa_closed_form`] uses the cubic
//! polynomial in the [`TaylorCoefficients`] plus the tail `−¾t⁴|D|²_{h_t}`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{LieAlgebra, Vector};
use crate::curvature::{puttmann_curvature, LeftInvariantMetric};
use crate::error::{Error, Result};
use crate::numerics::{self, SymmetricEndomorphism};

#[derive(Debug, Clone, PartialEq)]
pub struct InverseLinearPath {
    psi: SymmetricEndomorphism,
    t_min: f64,
    t_max: f64,
    operator_norm: f64,
}

impl InverseLinearPath {
    /// The path with derivative `psi` at `t = 0`. Its domain is the open
    /// interval on which `I − tΨ` stays positive definite.
    pub fn new(psi: SymmetricEndomorphism) -> Result<Self> {
        let spec = psi.eigen()?;
        let a_max = spec.max_eigenvalue();
        let a_min = spec.min_eigenvalue();
        let t_max = if a_max > 0.0 { 1.0 / a_max } else { f64::INFINITY };
        let t_min = if a_min < 0.0 { 1.0 / a_min } else { f64::NEG_INFINITY };
        Ok(Self {
            psi,
            t_min,
            t_max,
            operator_norm: spec.operator_norm,
        })
    }

    /// The unique path with `Φ₁ = phi`, i.e. `Ψ = I − Φ⁻¹`.
    pub fn from_metric(phi: &SymmetricEndomorphism) -> Result<Self> {
        let phi_inv = phi.inverse()?;
        let psi = SymmetricEndomorphism::identity(phi.dim()).combine(1.0, &phi_inv, -1.0);
        Self::new(psi)
    }

    pub fn psi(&self) -> &SymmetricEndomorphism {
        &self.psi
    }

    pub fn dim(&self) -> usize {
        self.psi.dim()
    }

    /// `(t_min, t_max)`, either end possibly infinite.
    pub fn domain(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    /// `‖Ψ‖`, the operator norm.
    pub fn psi_norm(&self) -> f64 {
        self.operator_norm
    }

    pub fn contains(&self, t: f64) -> bool {
        t.is_finite() && t > self.t_min && t < self.t_max
    }

    fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(self.out_of_domain(t))
        }
    }

    fn out_of_domain(&self, t: f64) -> Error {
        Error::OutOfDomain {
            t,
            lo: self.t_min,
            hi: self.t_max,
        }
    }

    /// `Φ_t⁻¹ = I − tΨ`.
    pub fn phi_inv_at(&self, t: f64) -> Result<SymmetricEndomorphism> {
        self.check(t)?;
        Ok(SymmetricEndomorphism::identity(self.dim()).combine(1.0, &self.psi, -t))
    }

    /// `Φ_t = (I − tΨ)⁻¹`, obtained by a Cholesky solve.
    pub fn phi_at(&self, t: f64) -> Result<SymmetricEndomorphism> {
        let inv = self.phi_inv_at(t)?;
        numerics::inverse_spd(&inv).map_err(|_| self.out_of_domain(t))
    }

    /// The metric `h_t` with both `Φ_t` and `Φ_t⁻¹` cached.
    pub fn metric_at(&self, t: f64) -> Result<LeftInvariantMetric> {
        let inv = self.phi_inv_at(t)?;
        let phi = numerics::inverse_spd(&inv).map_err(|_| self.out_of_domain(t))?;
        Ok(LeftInvariantMetric::from_parts(phi, inv))
    }

    /// `count` evenly spaced points covering `fraction` of the domain on each
    /// side of 0. Infinite ends are replaced by `±cap`.
    pub fn grid(&self, fraction: f64, count: usize, cap: f64) -> Vec<f64> {
        let lo = if self.t_min.is_finite() { fraction * self.t_min } else { -cap };
        let hi = if self.t_max.is_finite() { fraction * self.t_max } else { cap };
        linspace(lo, hi, count)
    }
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

pub fn path_from_metric(phi: &SymmetricEndomorphism) -> Result<InverseLinearPath> {
    InverseLinearPath::from_metric(phi)
}

pub fn phi_at(path: &InverseLinearPath, t: f64) -> Result<SymmetricEndomorphism> {
    path.phi_at(t)
}

/// The vectors `A, B, C, D` built from `Ψ`, `X`, `Y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketQuantities {
    /// `[ΨX,Y] + [X,ΨY]`
    #[serde(with = "crate::serde_vec")]
    pub a: Vector,
    /// `[ΨX,ΨY]`
    #[serde(with = "crate::serde_vec")]
    pub b: Vector,
    /// `[ΨX,Y] + [ΨY,X]`
    #[serde(with = "crate::serde_vec")]
    pub c: Vector,
    /// `Ψ²[X,Y] − ΨA + B`
    #[serde(with = "crate::serde_vec")]
    pub d: Vector,
}

pub fn bracket_quantities(
    algebra: &LieAlgebra,
    psi: &SymmetricEndomorphism,
    x: &Vector,
    y: &Vector,
) -> BracketQuantities {
    Intermediates::new(algebra, psi, x, y).quantities
}

/// The coefficients of `κ(t) = α + βt + γt² + δt³ − ¾t⁴|D|²_{h_t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl TaylorCoefficients {
    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    /// The cubic part `α + βt + γt² + δt³`.
    pub fn cubic(&self, t: f64) -> f64 {
        ((self.delta * t + self.gamma) * t + self.beta) * t + self.alpha
    }
}

struct Intermediates {
    w: Vector,
    psi_x: Vector,
    psi_y: Vector,
    quantities: BracketQuantities,
}

impl Intermediates {
    fn new(algebra: &LieAlgebra, psi: &SymmetricEndomorphism, x: &Vector, y: &Vector) -> Self {
        let psi_x = psi.apply(x);
        let psi_y = psi.apply(y);
        let w = algebra.bracket(x, y);
        let psix_y = algebra.bracket(&psi_x, y);
        let a = &psix_y + algebra.bracket(x, &psi_y);
        let b = algebra.bracket(&psi_x, &psi_y);
        let c = &psix_y + algebra.bracket(&psi_y, x);
        let d = psi.apply(&psi.apply(&w)) - psi.apply(&a) + &b;
        Self {
            w,
            psi_x,
            psi_y,
            quantities: BracketQuantities { a, b, c, d },
        }
    }
}

pub fn taylor_coefficients(
    algebra: &LieAlgebra,
    psi: &SymmetricEndomorphism,
    x: &Vector,
    y: &Vector,
) -> TaylorCoefficients {
    let im = Intermediates::new(algebra, psi, x, y);
    let BracketQuantities { a, b, c, .. } = &im.quantities;
    let w = &im.w;
    let psi_w = psi.apply(w);
    let psi2_w = psi.apply(&psi_w);
    let psi3_w = psi.apply(&psi2_w);
    let rx = algebra.bracket(&im.psi_x, x);
    let ry = algebra.bracket(&im.psi_y, y);

    let alpha = 0.25 * w.norm_squared();
    let beta = -0.75 * psi_w.dot(w);
    let gamma = -0.75 * psi_w.norm_squared() + 1.5 * psi_w.dot(a) - 0.5 * w.dot(b) - 0.25 * a.norm_squared()
        + 0.25 * c.norm_squared()
        - rx.dot(&ry);
    let delta = -0.75 * psi3_w.dot(w) + 1.5 * psi2_w.dot(a) - 1.5 * psi_w.dot(b) - 0.75 * psi.form(a, a)
        - 0.25 * psi.form(c, c)
        + psi.apply(&rx).dot(&ry)
        + a.dot(b);
    TaylorCoefficients {
        alpha,
        beta,
        gamma,
        delta,
    }
}

/// `α + βt + γt² + δt³ − ¾t⁴⟨Φ_t D, D⟩`.
pub fn kappa_closed_form(
    algebra: &LieAlgebra,
    path: &InverseLinearPath,
    x: &Vector,
    y: &Vector,
    t: f64,
) -> Result<f64> {
    let inv = path.phi_inv_at(t)?;
    let coeffs = taylor_coefficients(algebra, path.psi(), x, y);
    let d = bracket_quantities(algebra, path.psi(), x, y).d;
    let phi_d = numerics::solve_spd(&inv, &d).map_err(|_| path.out_of_domain(t))?;
    let t2 = t * t;
    Ok(coeffs.cubic(t) - 0.75 * t2 * t2 * phi_d.dot(&d))
}

/// `k_{h_t}(Φ_t⁻¹X, Φ_t⁻¹Y)` straight from the four-term formula.
pub fn kappa_direct(
    algebra: &LieAlgebra,
    path: &InverseLinearPath,
    x: &Vector,
    y: &Vector,
    t: f64,
) -> Result<f64> {
    let metric = path.metric_at(t)?;
    let zx = metric.phi_inv().apply(x);
    let zy = metric.phi_inv().apply(y);
    Ok(puttmann_curvature(algebra, &metric, &zx, &zy))
}

/// Operator from a row-major nested array, for tests and the CLI.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: n });
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}
