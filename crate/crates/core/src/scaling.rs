//! Scaling a subalgebra `h` by a factor `λ`, i.e. the path with `Ψ` the
//! orthogonal projection onto `h`. Then `Φ_t = I + t/(1−t)·P_h`, so `λ`
//! corresponds to `t = 1 − 1/λ`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{LieAlgebra, Subalgebra, Vector, SUBALGEBRA_TOL};
use crate::error::{Error, Result};
use crate::infinitesimal::sample_commuting_pairs;
use crate::numerics::SymmetricEndomorphism;
use crate::paths::InverseLinearPath;
use crate::sampling::{self, BestK};

/// Slack allowed above `4/3` in [`max_stretch_check`].
pub const STRETCH_SLACK: f64 = 1e-12;
pub const FOUR_THIRDS: f64 = 4.0 / 3.0;
/// `‖[X,Y]‖` below which a pair counts as commuting in [`bracket_ratio_sup`].
pub const RATIO_COMMUTING_TOL: f64 = 1e-12;
/// `‖[X^h,Y^h]‖` above which a commuting pair proves the ratio unbounded.
pub const RATIO_WITNESS_TOL: f64 = 1e-6;
const RATIO_REFINE: usize = 5;
const RATIO_ITERATIONS: usize = 200;

/// `Ψ = P_h`.
pub fn scaling_deformation(_algebra: &LieAlgebra, sub: &Subalgebra) -> SymmetricEndomorphism {
    SymmetricEndomorphism::symmetrized(sub.projector())
}

/// `t = 1 − 1/λ`.
pub fn lambda_to_t(lambda: f64) -> f64 {
    1.0 - 1.0 / lambda
}

/// `λ = 1/(1 − t)`.
pub fn t_to_lambda(t: f64) -> f64 {
    1.0 / (1.0 - t)
}

fn require_abelian(algebra: &LieAlgebra, sub: &Subalgebra) -> Result<()> {
    let residual = sub.abelian_residual(algebra);
    if residual > SUBALGEBRA_TOL {
        return Err(Error::SubalgebraNotAbelian { residual });
    }
    Ok(())
}

fn require_below_one(t: f64) -> Result<()> {
    if t.is_finite() && t < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            t,
            lo: f64::NEG_INFINITY,
            hi: 1.0,
        })
    }
}

/// `¼|[X,Y]|² − ¾|[X,Y]^h|²·t/(1−t)` for abelian `h`.
pub fn abelian_kappa(algebra: &LieAlgebra, sub: &Subalgebra, x: &Vector, y: &Vector, t: f64) -> Result<f64> {
    require_abelian(algebra, sub)?;
    require_below_one(t)?;
    let w = algebra.bracket(x, y);
    let wh = sub.project(&w).0;
    Ok(0.25 * w.norm_squared() - 0.75 * wh.norm_squared() * t / (1.0 - t))
}

/// Outcome of [`max_stretch_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StretchVerdict {
    /// `|Z|²_{h_t} ≤ 4/3` on unit `Z ∈ [g,g]`; `max_stretch` is the largest value.
    Preserves { max_stretch: f64 },
    /// `z` is a unit vector of `[g,g]` stretched by `max_stretch > 4/3`.
    Fails {
        #[serde(with = "crate::serde_vec")]
        z: Vector,
        max_stretch: f64,
    },
}

impl StretchVerdict {
    pub fn preserves(&self) -> bool {
        matches!(self, StretchVerdict::Preserves { .. })
    }

    pub fn max_stretch(&self) -> f64 {
        match self {
            StretchVerdict::Preserves { max_stretch } | StretchVerdict::Fails { max_stretch, .. } => *max_stretch,
        }
    }
}

/// Largest `|Z|²_{h_t}` over unit `Z ∈ [g,g]` against `4/3`.
pub fn max_stretch_check(algebra: &LieAlgebra, sub: &Subalgebra, t: f64) -> Result<StretchVerdict> {
    require_abelian(algebra, sub)?;
    require_below_one(t)?;
    let derived = algebra.derived_algebra();
    if derived.dim() == 0 {
        return Ok(StretchVerdict::Preserves { max_stretch: 0.0 });
    }
    let path = InverseLinearPath::new(scaling_deformation(algebra, sub))?;
    let phi = path.phi_at(t)?;
    let b = derived.basis();
    let restricted = SymmetricEndomorphism::symmetrized(b.transpose() * phi.matrix() * b);
    let spec = restricted.eigen()?;
    let max_stretch = spec.max_eigenvalue();
    if max_stretch <= FOUR_THIRDS + STRETCH_SLACK {
        Ok(StretchVerdict::Preserves { max_stretch })
    } else {
        let z = b * spec.eigenvector(spec.eigenvalues.len() - 1);
        Ok(StretchVerdict::Fails { z, max_stretch })
    }
}

/// `κ(t)` for an arbitrary subalgebra:
/// `¼|W|² − ¾|W^h|²t + ¾|B|²t² − ¼|B|²t³ − ¾|[X^p,Y^p]^h|²·t²/(1−t)`
/// with `W = [X,Y]` and `B = [X^h,Y^h]`.
pub fn nonabelian_kappa(algebra: &LieAlgebra, sub: &Subalgebra, x: &Vector, y: &Vector, t: f64) -> Result<f64> {
    require_below_one(t)?;
    let (xh, xp) = sub.project(x);
    let (yh, yp) = sub.project(y);
    let w = algebra.bracket(x, y);
    let wh2 = sub.project(&w).0.norm_squared();
    let b2 = algebra.bracket(&xh, &yh).norm_squared();
    let php2 = sub.project(&algebra.bracket(&xp, &yp)).0.norm_squared();
    let t2 = t * t;
    Ok(0.25 * w.norm_squared() - 0.75 * wh2 * t + 0.75 * b2 * t2 - 0.25 * b2 * t2 * t - 0.75 * php2 * t2 / (1.0 - t))
}

/// Outcome of [`bracket_ratio_sup`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RatioVerdict {
    /// Largest observed `|[X^h,Y^h]| / |[X,Y]|`, a lower estimate of the best `c`.
    BoundedBy(f64),
    /// `[X,Y] = 0` while `[X^h,Y^h] ≠ 0`, so no `c` exists.
    UnboundedWitness {
        #[serde(with = "crate::serde_vec")]
        x: Vector,
        #[serde(with = "crate::serde_vec")]
        y: Vector,
    },
}

fn ratio(algebra: &LieAlgebra, sub: &Subalgebra, x: &Vector, y: &Vector) -> Option<f64> {
    let den = algebra.bracket(x, y).norm();
    if den < 1e-8 * x.norm() * y.norm() {
        return None;
    }
    let num = algebra.bracket(&sub.project(x).0, &sub.project(y).0).norm();
    Some(num / den)
}

/// Looks for the smallest `c` with `|[X^h,Y^h]| ≤ c·|[X,Y]|`.
///
/// Commuting pairs are scanned first for an unbounded witness; otherwise the
/// ratio is maximized over unit pairs by sampling plus quasi-Newton ascent.
pub fn bracket_ratio_sup(algebra: &LieAlgebra, sub: &Subalgebra, budget: usize, seed: u64) -> RatioVerdict {
    if sub.is_abelian(algebra) {
        return RatioVerdict::BoundedBy(0.0);
    }
    let budget = budget.max(1);
    for pair in sample_commuting_pairs(algebra, budget, seed) {
        if algebra.bracket(&pair.x, &pair.y).norm() > RATIO_COMMUTING_TOL {
            continue;
        }
        let num = algebra.bracket(&sub.project(&pair.x).0, &sub.project(&pair.y).0).norm();
        if num >= RATIO_WITNESS_TOL {
            return RatioVerdict::UnboundedWitness { x: pair.x, y: pair.y };
        }
    }

    let n = algebra.dim();
    let split = |p: &[f64]| {
        (
            Vector::from_column_slice(&p[..n]),
            Vector::from_column_slice(&p[n..]),
        )
    };
    let objective = |p: &[f64]| {
        let (x, y) = split(p);
        ratio(algebra, sub, &x, &y).map_or(0.0, |r| -r)
    };
    let mut rng = sampling::rng(seed.wrapping_add(1));
    let mut best = BestK::new(RATIO_REFINE);
    let mut sup: f64 = 0.0;
    for _ in 0..budget {
        let p: Vec<f64> = sampling::gaussian(&mut rng, 2 * n).data.into();
        let v = objective(&p);
        sup = sup.max(-v);
        best.offer(v, p);
    }
    for (_, start) in best.into_vec() {
        let (_, v) = sampling::bfgs_minimize(objective, start, RATIO_ITERATIONS);
        sup = sup.max(-v);
    }
    RatioVerdict::BoundedBy(sup)
}

/// `Φ` in the working basis for scaling `sub` by `λ`.
pub fn scaled_metric(algebra: &LieAlgebra, sub: &Subalgebra, lambda: f64) -> Result<SymmetricEndomorphism> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveLambda(lambda));
    }
    let n = algebra.dim();
    let p = sub.projector();
    Ok(SymmetricEndomorphism::symmetrized(DMatrix::identity(n, n) + p * (lambda - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{min_curvature_search, LeftInvariantMetric};
    use crate::paths::{kappa_closed_form, kappa_direct};

    fn e3_line(g: &LieAlgebra) -> Subalgebra {
        Subalgebra::from_basis_indices(g, &[2]).unwrap()
    }

    #[test]
    fn deformation_is_projection() {
        let g = LieAlgebra::so3();
        assert_eq!(scaling_deformation(&g, &Subalgebra::full(&g)), SymmetricEndomorphism::identity(3));
        assert_eq!(
            scaling_deformation(&g, &e3_line(&g)),
            SymmetricEndomorphism::diagonal(&[0.0, 0.0, 1.0])
        );
        assert_eq!(lambda_to_t(FOUR_THIRDS), 0.25);
        assert!((t_to_lambda(0.25) - FOUR_THIRDS).abs() < 1e-15);
    }

    #[test]
    fn path_scales_subalgebra() {
        let g = LieAlgebra::so3();
        let path = InverseLinearPath::new(scaling_deformation(&g, &e3_line(&g))).unwrap();
        let phi = path.phi_at(lambda_to_t(1.5)).unwrap();
        assert!((phi.matrix() - SymmetricEndomorphism::diagonal(&[1.0, 1.0, 1.5]).matrix()).amax() < 1e-14);
    }

    #[test]
    fn abelian_kappa_so3() {
        let g = LieAlgebra::so3();
        let h = e3_line(&g);
        let (x, y) = (g.basis_vector(0), g.basis_vector(1));
        assert!((abelian_kappa(&g, &h, &x, &y, 0.0).unwrap() - 0.25).abs() < 1e-16);
        assert!(abelian_kappa(&g, &h, &x, &y, 0.25).unwrap().abs() < 1e-16);
        assert!((abelian_kappa(&g, &h, &x, &y, 0.5).unwrap() + 0.5).abs() < 1e-15);
        // [e1, e3] = -e2 ⟂ h
        let z = g.basis_vector(2);
        assert!((abelian_kappa(&g, &h, &x, &z, 0.9).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(abelian_kappa(&g, &h, &x, &y, 1.0), Err(Error::OutOfDomain { .. })));
        let full = Subalgebra::full(&g);
        assert!(matches!(
            abelian_kappa(&g, &full, &x, &y, 0.1),
            Err(Error::SubalgebraNotAbelian { .. })
        ));
    }

    #[test]
    fn abelian_kappa_matches_general_machinery() {
        let g = LieAlgebra::so4();
        let h = Subalgebra::from_basis_indices(&g, &[2, 3]).unwrap();
        let path = InverseLinearPath::new(scaling_deformation(&g, &h)).unwrap();
        let mut rng = sampling::rng(11);
        for _ in 0..200 {
            let x = sampling::gaussian(&mut rng, 6);
            let y = sampling::gaussian(&mut rng, 6);
            for t in [-2.0, 0.1, 0.25, 0.7] {
                let a = abelian_kappa(&g, &h, &x, &y, t).unwrap();
                let c = kappa_closed_form(&g, &path, &x, &y, t).unwrap();
                let d = kappa_direct(&g, &path, &x, &y, t).unwrap();
                let scale = a.abs().max(1.0);
                assert!((a - c).abs() <= 1e-9 * scale && (a - d).abs() <= 1e-9 * scale, "{a} {c} {d}");
            }
        }
    }

    #[test]
    fn stretch_boundary() {
        let g = LieAlgebra::so3();
        let h = e3_line(&g);
        assert!(max_stretch_check(&g, &h, 0.25).unwrap().preserves());
        match max_stretch_check(&g, &h, 1.0 / 3.0).unwrap() {
            StretchVerdict::Fails { z, max_stretch } => {
                assert!((max_stretch - 1.5).abs() < 1e-14);
                assert!((z.dot(&g.basis_vector(2)).abs() - 1.0).abs() < 1e-14);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn central_factor_stretches_freely() {
        // u(1) ⊕ so(3), scale the center
        let mut entries = Vec::new();
        for (i, j, k) in [(1, 2, 3), (2, 3, 1), (3, 1, 2)] {
            entries.push((i, j, k, 1.0));
            entries.push((j, i, k, -1.0));
        }
        let g = LieAlgebra::from_structure_constants(4, &entries, None, None).unwrap();
        let h = Subalgebra::from_basis_indices(&g, &[0]).unwrap();
        for t in [0.5, 0.9, 0.999] {
            assert!(max_stretch_check(&g, &h, t).unwrap().preserves());
        }
    }

    #[test]
    fn stretch_check_agrees_with_curvature() {
        let g = LieAlgebra::so3();
        let h = e3_line(&g);
        let path = InverseLinearPath::new(scaling_deformation(&g, &h)).unwrap();
        for t in [0.2, 0.25, 0.3] {
            let preserves = max_stretch_check(&g, &h, t).unwrap().preserves();
            let metric = path.metric_at(t).unwrap();
            let min = min_curvature_search(&g, &metric, 1000, 42).min_value;
            assert_eq!(preserves, min >= -1e-9, "t={t} min={min}");
        }
    }

    #[test]
    fn nonabelian_on_ideal() {
        let g = LieAlgebra::so4();
        let h = Subalgebra::from_basis_indices(&g, &[0, 1, 2]).unwrap();
        let (x, y) = (g.basis_vector(0), g.basis_vector(1));
        for t in [-1.0, 0.0, 0.3, 0.9] {
            let k = nonabelian_kappa(&g, &h, &x, &y, t).unwrap();
            assert!((k - 0.25 * (1.0 - t).powi(3)).abs() < 1e-15, "{t} {k}");
        }
    }

    #[test]
    fn nonabelian_matches_direct() {
        let g = LieAlgebra::so4();
        let diag = Subalgebra::new(
            &g,
            &(0..3)
                .map(|i| g.basis_vector(i) + g.basis_vector(i + 3))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let path = InverseLinearPath::new(scaling_deformation(&g, &diag)).unwrap();
        let mut rng = sampling::rng(5);
        for _ in 0..200 {
            let x = sampling::gaussian(&mut rng, 6);
            let y = sampling::gaussian(&mut rng, 6);
            for t in [-1.5, 0.2, 0.6] {
                let a = nonabelian_kappa(&g, &diag, &x, &y, t).unwrap();
                let d = kappa_direct(&g, &path, &x, &y, t).unwrap();
                assert!((a - d).abs() <= 1e-9 * a.abs().max(1.0), "{a} {d}");
            }
        }
    }

    #[test]
    fn nonabelian_agrees_with_abelian() {
        let g = LieAlgebra::so4();
        let h = Subalgebra::from_basis_indices(&g, &[0, 5]).unwrap();
        let mut rng = sampling::rng(8);
        for _ in 0..1000 {
            let x = sampling::gaussian(&mut rng, 6);
            let y = sampling::gaussian(&mut rng, 6);
            let a = abelian_kappa(&g, &h, &x, &y, 0.4).unwrap();
            let b = nonabelian_kappa(&g, &h, &x, &y, 0.4).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn ratio_verdicts() {
        let g = LieAlgebra::so4();
        let abelian = Subalgebra::from_basis_indices(&g, &[0, 3]).unwrap();
        assert_eq!(bracket_ratio_sup(&g, &abelian, 10, 1), RatioVerdict::BoundedBy(0.0));
        match bracket_ratio_sup(&g, &Subalgebra::full(&g), 200, 1) {
            RatioVerdict::BoundedBy(c) => assert!((c - 1.0).abs() < 1e-9, "{c}"),
            v => panic!("{v:?}"),
        }
        let diag = Subalgebra::new(
            &g,
            &(0..3)
                .map(|i| g.basis_vector(i) + g.basis_vector(i + 3))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let RatioVerdict::UnboundedWitness { x, y } = bracket_ratio_sup(&g, &diag, 100, 1) else {
            panic!("expected witness")
        };
        assert!(g.bracket(&x, &y).norm() <= RATIO_COMMUTING_TOL);
    }

    #[test]
    fn diagonal_hand_witness() {
        let g = LieAlgebra::so4();
        let diag = Subalgebra::new(
            &g,
            &(0..3)
                .map(|i| g.basis_vector(i) + g.basis_vector(i + 3))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let (x, y) = (g.basis_vector(0), g.basis_vector(4));
        assert_eq!(g.bracket(&x, &y).norm(), 0.0);
        let b = g.bracket(&diag.project(&x).0, &diag.project(&y).0);
        let expected = (g.basis_vector(2) + g.basis_vector(5)) * 0.25;
        assert!((b - expected).norm() < 1e-15);
    }

    #[test]
    fn scaled_metric_is_nonneg_at_four_thirds() {
        let g = LieAlgebra::so3();
        let phi = scaled_metric(&g, &e3_line(&g), FOUR_THIRDS).unwrap();
        let m = LeftInvariantMetric::new(phi).unwrap();
        assert!(min_curvature_search(&g, &m, 1000, 3).min_value >= -1e-9);
        assert!(scaled_metric(&g, &e3_line(&g), 0.0).is_err());
    }
}
