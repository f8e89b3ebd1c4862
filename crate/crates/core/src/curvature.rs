//! Unnormalized sectional curvature of left-invariant metrics and a seeded
//! search for negatively curved planes.

use serde::Serialize;

use crate::algebra::{LieAlgebra, Vector};
use crate::error::Result;
use crate::numerics::SymmetricEndomorphism;
use crate::sampling::{self, BestK};

/// Number of best samples that get polished.
pub const REFINE_CANDIDATES: usize = 5;
/// Quasi-Newton iterations and coordinate-descent sweeps per polished candidate.
pub const REFINE_SWEEPS: usize = 200;
const REFINE_STEP: f64 = 0.1;

/// A left-invariant metric `h(X,Y) = h₀(ΦX,Y)` with `Φ⁻¹` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftInvariantMetric {
    phi: SymmetricEndomorphism,
    phi_inv: SymmetricEndomorphism,
}

impl LeftInvariantMetric {
    pub fn new(phi: SymmetricEndomorphism) -> Result<Self> {
        let phi_inv = phi.inverse()?;
        Ok(Self { phi, phi_inv })
    }

    pub(crate) fn from_parts(phi: SymmetricEndomorphism, phi_inv: SymmetricEndomorphism) -> Self {
        Self { phi, phi_inv }
    }

    pub fn bi_invariant(dim: usize) -> Self {
        Self {
            phi: SymmetricEndomorphism::identity(dim),
            phi_inv: SymmetricEndomorphism::identity(dim),
        }
    }

    pub fn phi(&self) -> &SymmetricEndomorphism {
        &self.phi
    }

    pub fn phi_inv(&self) -> &SymmetricEndomorphism {
        &self.phi_inv
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    /// `|z|²_h = ⟨Φz, z⟩`.
    pub fn norm_sq(&self, z: &Vector) -> f64 {
        self.phi.form(z, z)
    }
}

/// `k_h(Z₁,Z₂)`:
///
/// ```text
///   ½⟨[ΦZ₁,Z₂]+[Z₁,ΦZ₂], [Z₁,Z₂]⟩ − ¾|[Z₁,Z₂]|²_h
/// + ¼⟨[Z₁,ΦZ₂]+[Z₂,ΦZ₁], Φ⁻¹([Z₁,ΦZ₂]+[Z₂,ΦZ₁])⟩
/// − ⟨[Z₁,ΦZ₁], Φ⁻¹[Z₂,ΦZ₂]⟩
/// ```
pub fn puttmann_curvature(algebra: &LieAlgebra, metric: &LeftInvariantMetric, z1: &Vector, z2: &Vector) -> f64 {
    let phi_z1 = metric.phi.apply(z1);
    let phi_z2 = metric.phi.apply(z2);
    let w = algebra.bracket(z1, z2);
    let a = algebra.bracket(&phi_z1, z2) + algebra.bracket(z1, &phi_z2);
    let s = algebra.bracket(z1, &phi_z2) + algebra.bracket(z2, &phi_z1);
    let r1 = algebra.bracket(z1, &phi_z1);
    let r2 = algebra.bracket(z2, &phi_z2);
    0.5 * a.dot(&w) - 0.75 * metric.norm_sq(&w) + 0.25 * metric.phi_inv.form(&s, &s)
        - metric.phi_inv.form(&r1, &r2)
}

/// Convenience form taking `Φ` directly; fails if `Φ` is not positive definite.
pub fn puttmann_curvature_phi(
    algebra: &LieAlgebra,
    phi: &SymmetricEndomorphism,
    z1: &Vector,
    z2: &Vector,
) -> Result<f64> {
    let metric = LeftInvariantMetric::new(phi.clone())?;
    Ok(puttmann_curvature(algebra, &metric, z1, z2))
}

/// A concrete plane (and optionally a path parameter) with its curvature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    #[serde(with = "crate::serde_vec")]
    pub x: Vector,
    #[serde(with = "crate::serde_vec")]
    pub y: Vector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub min_value: f64,
    pub witness: Witness,
}

/// Orthonormal pair from raw parameters `[x; y]`; `None` if degenerate.
fn plane_from_params(p: &[f64], n: usize) -> Option<(Vector, Vector)> {
    let x = sampling::normalized(&Vector::from_column_slice(&p[..n]))?;
    let y = Vector::from_column_slice(&p[n..]);
    let y = sampling::normalized(&(&y - &x * x.dot(&y)))?;
    Some((x, y))
}

/// Seeded minimization of `k_h` over orthonormal pairs.
///
/// `budget` uniform samples are drawn; the best [`REFINE_CANDIDATES`] are
/// polished by quasi-Newton descent followed by coordinate descent. Since
/// `k(X, Y + cX) = k(X, Y)` and `k` is quadratic in each argument, the minimum
/// over orthonormal pairs is the minimum over unit pairs whenever it is
/// negative.
pub fn min_curvature_search(
    algebra: &LieAlgebra,
    metric: &LeftInvariantMetric,
    budget: usize,
    seed: u64,
) -> SearchOutcome {
    let n = algebra.dim();
    let mut rng = sampling::rng(seed);
    let objective = |p: &[f64]| match plane_from_params(p, n) {
        Some((x, y)) => puttmann_curvature(algebra, metric, &x, &y),
        None => 0.0,
    };
    let mut best = BestK::new(REFINE_CANDIDATES);
    for _ in 0..budget.max(1) {
        let x = sampling::unit_vector(&mut rng, n);
        let y = sampling::unit_vector(&mut rng, n);
        let params: Vec<f64> = x.iter().chain(y.iter()).copied().collect();
        best.offer(objective(&params), params);
    }

    let mut result: Option<(f64, Vec<f64>)> = None;
    for (_, start) in best.into_vec() {
        let (params, _) = sampling::bfgs_minimize(objective, start, REFINE_SWEEPS);
        let (params, value) = sampling::coordinate_descent(objective, params, REFINE_SWEEPS, REFINE_STEP);
        if result.as_ref().is_none_or(|(v, _)| value < *v) {
            result = Some((value, params));
        }
    }
    let (_, params) = result.expect("budget >= 1 yields a candidate");
    let (x, y) = plane_from_params(&params, n).unwrap_or_else(|| (algebra.basis_vector(0), algebra.basis_vector(0)));
    let value = puttmann_curvature(algebra, metric, &x, &y);
    SearchOutcome {
        min_value: value,
        witness: Witness { x, y, t: None, value },
    }
}

/// Outcome of a nonnegativity check. `NoWitnessFound` is evidence, not proof.
#[derive(Debug, Clone, PartialEq)]
pub enum NonnegVerdict {
    Refuted(Witness),
    NoWitnessFound { min_value: f64, best: Witness },
}

impl NonnegVerdict {
    pub fn is_refuted(&self) -> bool {
        matches!(self, NonnegVerdict::Refuted(_))
    }
}

/// Refuted iff the search finds a plane with `k < −tol`.
pub fn assert_nonneg(
    algebra: &LieAlgebra,
    metric: &LeftInvariantMetric,
    tol: f64,
    budget: usize,
    seed: u64,
) -> NonnegVerdict {
    let outcome = min_curvature_search(algebra, metric, budget, seed);
    if outcome.min_value < -tol {
        NonnegVerdict::Refuted(outcome.witness)
    } else {
        NonnegVerdict::NoWitnessFound {
            min_value: outcome.min_value,
            best: outcome.witness,
        }
    }
}
