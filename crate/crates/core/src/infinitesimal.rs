//! Infinitesimal nonnegativity along `Φ_t = (I − tΨ)⁻¹` and the rigidity
//! conditions on the bottom eigenspace.
//!
//! For commuting `X, Y` the first three Taylor coefficients of `κ` vanish, so
//! nonnegativity for small `t` is decided by `δ = κ'''(0)/6` and, when `δ = 0`,
//! by the vector `D`. Both checks here are searches: a refutation comes with a
//! witness, a pass is only evidence.

use std::ops::Range;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{LieAlgebra, Vector};
use crate::numerics::SymmetricEndomorphism;
use crate::paths::{bracket_quantities, taylor_coefficients};
use crate::sampling::{self, BestK, SearchRng};

/// Number of lowest-`δ` pairs that are refined by local descent.
pub const REFINE_CANDIDATES: usize = 5;
pub const REFINE_ITERATIONS: usize = 200;
const REFINE_STEP: f64 = 0.1;
/// `‖[X,Y]‖` bound for a pair to count as commuting.
pub const COMMUTING_TOL: f64 = 1e-12;

/// Unit `X, Y` with `[X,Y] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutingPair {
    #[serde(with = "crate::serde_vec")]
    pub x: Vector,
    #[serde(with = "crate::serde_vec")]
    pub y: Vector,
}

/// How commuting pairs are parameterized.
#[derive(Debug, Clone, PartialEq)]
enum PairModel {
    /// Every factor is 1-dimensional or a 3-dimensional simple ideal, so
    /// commuting pairs are `X = Σ s_f u_f`, `Y = Σ r_f u_f` with unit `u_f`.
    Factorwise(Vec<Range<usize>>),
    /// `X` free, `Y` projected onto the numerical kernel of `ad_X`.
    Kernel,
}

fn pair_model(algebra: &LieAlgebra) -> PairModel {
    let n = algebra.dim();
    let factors: Vec<Range<usize>> = if algebra.factors().is_empty() {
        std::iter::once(0..n).collect()
    } else {
        algebra.factors().to_vec()
    };
    let covered: usize = factors.iter().map(|f| f.len()).sum();
    if covered != n {
        return PairModel::Kernel;
    }
    let ok = factors.iter().all(|f| match f.len() {
        1 => true,
        3 => {
            let e = |i| algebra.basis_vector(i);
            let (a, b, c) = (f.start, f.start + 1, f.start + 2);
            [(a, b), (b, c), (a, c)]
                .iter()
                .all(|&(i, j)| algebra.bracket(&e(i), &e(j)).norm() > 1e-8)
        }
        _ => false,
    });
    if ok {
        PairModel::Factorwise(factors)
    } else {
        PairModel::Kernel
    }
}

impl PairModel {
    fn param_len(&self, n: usize) -> usize {
        match self {
            PairModel::Factorwise(fs) => n + 2 * fs.len(),
            PairModel::Kernel => 2 * n,
        }
    }

    fn random_params(&self, rng: &mut SearchRng, n: usize) -> Vec<f64> {
        sampling::gaussian(rng, self.param_len(n)).data.into()
    }

    /// Builds a unit pair with `Y ⟂ X`; `None` when the pair is degenerate.
    fn pair(&self, algebra: &LieAlgebra, p: &[f64]) -> Option<CommutingPair> {
        let n = algebra.dim();
        let (x, y) = match self {
            PairModel::Factorwise(fs) => {
                // Orthonormalize the coefficients rather than the vectors, so
                // X and Y stay combinations of the same u_f however close to
                // parallel the raw parameters get.
                let nf = fs.len();
                let units: Vec<Option<Vector>> = fs
                    .iter()
                    .map(|f| sampling::normalized(&Vector::from_column_slice(&p[f.clone()])))
                    .collect();
                let mask = |c: &[f64]| Vector::from_fn(nf, |k, _| if units[k].is_some() { c[k] } else { 0.0 });
                let s = sampling::normalized(&mask(&p[n..n + nf]))?;
                let r = mask(&p[n + nf..]);
                let r = &r - &s * s.dot(&r);
                if r.norm() < 1e-8 * p.iter().map(|v| v.abs()).fold(1.0, f64::max) {
                    return None;
                }
                let r = sampling::normalized(&r)?;
                let mut x = Vector::zeros(n);
                let mut y = Vector::zeros(n);
                for (k, f) in fs.iter().enumerate() {
                    if let Some(u) = &units[k] {
                        x.rows_mut(f.start, f.len()).axpy(s[k], u, 1.0);
                        y.rows_mut(f.start, f.len()).axpy(r[k], u, 1.0);
                    }
                }
                return Some(CommutingPair { x, y });
            }
            PairModel::Kernel => {
                let x = Vector::from_column_slice(&p[..n]);
                let kernel = algebra.centralizer_basis(&x);
                let y = &kernel * (kernel.transpose() * Vector::from_column_slice(&p[n..]));
                (x, y)
            }
        };
        let x = sampling::normalized(&x)?;
        let y = &y - &x * x.dot(&y);
        if y.norm() < 1e-8 * p.iter().map(|v| v.abs()).fold(1.0, f64::max) {
            return None;
        }
        let y = sampling::normalized(&y)?;
        Some(CommutingPair { x, y })
    }
}

/// `n` seeded commuting pairs.
///
/// Degenerate draws (parallel `X, Y`) are kept as `(X, X)` for algebras whose
/// centralizers are lines, since that is the only commuting plane there.
pub fn sample_commuting_pairs(algebra: &LieAlgebra, n: usize, seed: u64) -> Vec<CommutingPair> {
    let model = pair_model(algebra);
    let dim = algebra.dim();
    let mut rng = sampling::rng(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        let p = model.random_params(&mut rng, dim);
        attempts += 1;
        match model.pair(algebra, &p) {
            Some(pair) => out.push(pair),
            None if attempts > 4 * n + 16 => {
                let x = sampling::normalized(&Vector::from_column_slice(&p[..dim]))
                    .unwrap_or_else(|| algebra.basis_vector(0));
                out.push(CommutingPair { y: x.clone(), x });
            }
            None => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairWitness {
    #[serde(with = "crate::serde_vec")]
    pub x: Vector,
    #[serde(with = "crate::serde_vec")]
    pub y: Vector,
    pub delta: f64,
    pub d_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InfVerdict {
    Refuted,
    /// No witness found; evidence, not proof.
    Passed,
}

/// Result of [`check_inf_nonneg`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfNonnegReport {
    pub verdict: InfVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<PairWitness>,
    /// Smallest `δ` seen over unit commuting pairs.
    pub min_delta: f64,
    /// Largest `‖D‖` among pairs with `|δ| ≤ tol`.
    #[serde(rename = "max_D_norm")]
    pub max_d_norm: f64,
    pub budget: usize,
    pub seed: u64,
}

impl InfNonnegReport {
    pub fn is_refuted(&self) -> bool {
        self.verdict == InfVerdict::Refuted
    }
}

fn evaluate(algebra: &LieAlgebra, psi: &SymmetricEndomorphism, pair: &CommutingPair) -> PairWitness {
    let delta = taylor_coefficients(algebra, psi, &pair.x, &pair.y).delta;
    let d_norm = bracket_quantities(algebra, psi, &pair.x, &pair.y).d.norm();
    PairWitness {
        x: pair.x.clone(),
        y: pair.y.clone(),
        delta,
        d_norm,
    }
}

/// Searches unit commuting pairs for `δ < −tol`, or `|δ| ≤ tol` with
/// `‖D‖ > √tol`.
pub fn check_inf_nonneg(
    algebra: &LieAlgebra,
    psi: &SymmetricEndomorphism,
    tol: f64,
    budget: usize,
    seed: u64,
) -> InfNonnegReport {
    let model = pair_model(algebra);
    let n = algebra.dim();
    let d_tol = tol.sqrt();
    let mut rng = sampling::rng(seed);

    let mut min_delta = f64::INFINITY;
    let mut max_d_norm: f64 = 0.0;
    let mut min_witness: Option<PairWitness> = None;
    let mut d_witness: Option<PairWitness> = None;
    let mut consider = |w: PairWitness| {
        if w.delta.abs() <= tol && w.d_norm > max_d_norm {
            max_d_norm = w.d_norm;
            d_witness = Some(w.clone());
        }
        if w.delta < min_delta {
            min_delta = w.delta;
            min_witness = Some(w);
        }
    };

    let mut best = BestK::new(REFINE_CANDIDATES);
    for _ in 0..budget.max(1) {
        let p = model.random_params(&mut rng, n);
        if let Some(pair) = model.pair(algebra, &p) {
            let w = evaluate(algebra, psi, &pair);
            best.offer(w.delta, p);
            consider(w);
        }
    }

    let objective = |p: &[f64]| match model.pair(algebra, p) {
        Some(pair) => taylor_coefficients(algebra, psi, &pair.x, &pair.y).delta,
        None => 0.0,
    };
    for (_, start) in best.into_vec() {
        let (p, _) = sampling::bfgs_minimize(objective, start, REFINE_ITERATIONS);
        let (p, _) = sampling::coordinate_descent(objective, p, REFINE_ITERATIONS, REFINE_STEP);
        if let Some(pair) = model.pair(algebra, &p) {
            consider(evaluate(algebra, psi, &pair));
        }
    }

    if !min_delta.is_finite() {
        min_delta = 0.0;
    }
    let witness = match (&min_witness, &d_witness) {
        (Some(w), _) if w.delta < -tol => Some(w.clone()),
        (_, Some(w)) if w.d_norm > d_tol => Some(w.clone()),
        _ => None,
    };
    InfNonnegReport {
        verdict: if witness.is_some() {
            InfVerdict::Refuted
        } else {
            InfVerdict::Passed
        },
        witness,
        min_delta,
        max_d_norm,
        budget,
        seed,
    }
}

/// Which operator the rigidity condition is stated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RigidityMode {
    /// `M = Ψ`; test `[X, ΨY] ∈ p₀`.
    Psi,
    /// `M = Φ`; test `[X, Φ⁻¹Y] ∈ p₀`.
    Phi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityWitness {
    #[serde(with = "crate::serde_vec")]
    pub x: Vector,
    #[serde(with = "crate::serde_vec")]
    pub y: Vector,
    /// Norm of the part of the bracket orthogonal to `p₀`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RigidityVerdict {
    Violated(RigidityWitness),
    NoViolationFound { max_residual: f64, p0_dim: usize },
}

impl RigidityVerdict {
    pub fn is_violated(&self) -> bool {
        matches!(self, RigidityVerdict::Violated(_))
    }
}

/// Unit vectors of `span(v)` lying in the range of the projector `p`.
fn intersect(v: &DMatrix<f64>, p: &DMatrix<f64>) -> Vec<Vector> {
    let n = p.nrows();
    let gram = v.transpose() * (DMatrix::identity(n, n) - p) * v;
    let Ok(spec) = SymmetricEndomorphism::symmetrized(gram).eigen() else {
        return Vec::new();
    };
    (0..v.ncols())
        .filter(|&i| spec.eigenvalues[i].max(0.0).sqrt() <= 1e-8)
        .filter_map(|i| sampling::normalized(&(v * spec.eigenvector(i))))
        .collect()
}

/// Checks `[X, TY] ∈ p₀` for commuting `X ∈ p₀`, `Y`, where `p₀` is the
/// bottom eigenspace of `M` and `T = M` (psi mode) or `M⁻¹` (phi mode).
///
/// For each candidate `X` the worst `Y` in the centralizer is found exactly as
/// the top singular vector of `Y ↦ (I − P₀)[X, TY]`. Candidates are random
/// unit vectors of `p₀` plus the intersections of `p₀` with each factor,
/// where centralizers jump in dimension.
pub fn check_rigidity(
    algebra: &LieAlgebra,
    m: &SymmetricEndomorphism,
    mode: RigidityMode,
    tol: f64,
    budget: usize,
    seed: u64,
) -> crate::Result<RigidityVerdict> {
    let n = algebra.dim();
    let t = match mode {
        RigidityMode::Psi => m.clone(),
        RigidityMode::Phi => m.inverse()?,
    };
    let p0 = m.eigen()?.bottom_eigenspace().basis;
    let proj = &p0 * p0.transpose();
    let perp = DMatrix::identity(n, n) - &proj;

    let mut candidates: Vec<Vector> = Vec::new();
    for f in 0..algebra.factors().len() {
        candidates.extend(intersect(&p0, &algebra.factor_projector(f)));
    }
    for i in 0..p0.ncols() {
        candidates.push(p0.column(i).into_owned());
    }
    let mut rng = sampling::rng(seed);
    for _ in 0..budget {
        candidates.push(sampling::unit_in_span(&mut rng, &p0));
    }

    let mut worst = RigidityWitness {
        x: algebra.basis_vector(0),
        y: algebra.basis_vector(0),
        residual: 0.0,
    };
    for x in candidates {
        let cz = algebra.centralizer_basis(&x);
        if cz.ncols() == 0 {
            continue;
        }
        let op = &perp * algebra.ad(&x) * t.matrix() * &cz;
        let svd = op.clone().svd(false, true);
        let Some((k, &sigma)) = svd
            .singular_values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
        else {
            continue;
        };
        if sigma > worst.residual {
            let v_t = svd.v_t.expect("requested");
            let y = &cz * v_t.row(k).transpose();
            let residual = (&op * v_t.row(k).transpose()).norm();
            worst = RigidityWitness { x, y, residual };
        }
    }
    Ok(if worst.residual > tol {
        RigidityVerdict::Violated(worst)
    } else {
        RigidityVerdict::NoViolationFound {
            max_residual: worst.residual,
            p0_dim: p0.ncols(),
        }
    })
}
