//! Replacing the base metric `h₀` by `λh₀`. The path from `λh₀` to the same
//! `h` has derivative `Υ = (1−λ)I + λΨ`, and its curvature function is a
//! reparameterization of the one for `Ψ`.
//!
//! Curvature and Taylor coefficients for `Υ` are taken with respect to the
//! base `λh₀`. Since the unnormalized curvature is linear in the metric, they
//! are `λ` times the values computed with `Υ` against `h₀`. `D` involves no
//! inner products and needs no such factor.

use serde::Serialize;

use crate::algebra::{LieAlgebra, Vector};
use crate::error::{Error, Result};
use crate::numerics::SymmetricEndomorphism;
use crate::paths::{bracket_quantities, kappa_direct, taylor_coefficients, InverseLinearPath, TaylorCoefficients};

/// `Υ = (1−λ)I + λΨ`.
pub fn rescaled_deformation(psi: &SymmetricEndomorphism, lambda: f64) -> Result<SymmetricEndomorphism> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveLambda(lambda));
    }
    Ok(SymmetricEndomorphism::identity(psi.dim()).combine(1.0 - lambda, psi, lambda))
}

/// `s(t) = λt / (1 − (1−λ)t)`; fixes 0 and 1.
pub fn reparameterize(lambda: f64, t: f64) -> f64 {
    lambda * t / (1.0 - (1.0 - lambda) * t)
}

/// Coefficients of `κ^Υ` relative to `λh₀`.
pub fn upsilon_coefficients(
    algebra: &LieAlgebra,
    psi: &SymmetricEndomorphism,
    lambda: f64,
    x: &Vector,
    y: &Vector,
) -> Result<TaylorCoefficients> {
    let upsilon = rescaled_deformation(psi, lambda)?;
    let c = taylor_coefficients(algebra, &upsilon, x, y);
    Ok(TaylorCoefficients {
        alpha: lambda * c.alpha,
        beta: lambda * c.beta,
        gamma: lambda * c.gamma,
        delta: lambda * c.delta,
    })
}

/// The coefficients on both sides and the residuals of the four linear
/// relations between them, plus `‖D^Υ − λ²D^Ψ‖`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRelations {
    pub psi: TaylorCoefficients,
    pub upsilon: TaylorCoefficients,
    pub residuals: [f64; 4],
    pub d_residual: f64,
}

impl CoefficientRelations {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn coefficient_relations(
    algebra: &LieAlgebra,
    psi: &SymmetricEndomorphism,
    lambda: f64,
    x: &Vector,
    y: &Vector,
) -> Result<CoefficientRelations> {
    let p = taylor_coefficients(algebra, psi, x, y);
    let u = upsilon_coefficients(algebra, psi, lambda, x, y)?;
    let l = lambda;
    let m = 1.0 - lambda;
    let predicted = [
        l * p.alpha,
        -3.0 * m * l * p.alpha + l * l * p.beta,
        3.0 * m * m * l * p.alpha - 2.0 * m * l * l * p.beta + l.powi(3) * p.gamma,
        -m.powi(3) * l * p.alpha + m * m * l * l * p.beta - m * l.powi(3) * p.gamma + l.powi(4) * p.delta,
    ];
    let actual = u.as_array();
    let residuals = std::array::from_fn(|i| (actual[i] - predicted[i]).abs());
    let upsilon = rescaled_deformation(psi, lambda)?;
    let d_psi = bracket_quantities(algebra, psi, x, y).d;
    let d_up = bracket_quantities(algebra, &upsilon, x, y).d;
    let d_residual = (d_up - d_psi * (l * l)).norm();
    Ok(CoefficientRelations {
        psi: p,
        upsilon: u,
        residuals,
        d_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRelation {
    pub max_residual: f64,
    /// Whether `s(0) = 0` and `s(1) = 1` hold exactly.
    pub endpoints_fixed: bool,
    pub points: usize,
}

/// `max_t |κ^Υ(t) − λ(1−(1−λ)t)³ κ^Ψ(s(t))|` over `t_grid`, both sides by
/// direct evaluation of the curvature formula.
pub fn verify_curve_relation(
    algebra: &LieAlgebra,
    psi: &SymmetricEndomorphism,
    lambda: f64,
    x: &Vector,
    y: &Vector,
    t_grid: &[f64],
) -> Result<CurveRelation> {
    let upsilon = rescaled_deformation(psi, lambda)?;
    let up_path = InverseLinearPath::new(upsilon)?;
    let psi_path = InverseLinearPath::new(psi.clone())?;
    let side_err = |side: &'static str, path: &InverseLinearPath, t: f64| {
        let (lo, hi) = path.domain();
        Error::RelationOutOfDomain { side, t, lo, hi }
    };
    let mut max_residual: f64 = 0.0;
    for &t in t_grid {
        let s = reparameterize(lambda, t);
        let lhs = lambda
            * kappa_direct(algebra, &up_path, x, y, t).map_err(|_| side_err("rescaled", &up_path, t))?;
        let k = kappa_direct(algebra, &psi_path, x, y, s).map_err(|_| side_err("original", &psi_path, s))?;
        let rhs = lambda * (1.0 - (1.0 - lambda) * t).powi(3) * k;
        max_residual = max_residual.max((lhs - rhs).abs());
    }
    Ok(CurveRelation {
        max_residual,
        endpoints_fixed: reparameterize(lambda, 0.0) == 0.0 && reparameterize(lambda, 1.0) == 1.0,
        points: t_grid.len(),
    })
}
