//! Seeded sampling on spheres and a derivative-free coordinate descent shared by
//! the witness searches.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::Vector;

pub type SearchRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SearchRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut SearchRng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Uniform on the unit sphere of `Rⁿ`.
pub fn unit_vector(rng: &mut SearchRng, n: usize) -> Vector {
    loop {
        let v = gaussian(rng, n);
        let r = v.norm();
        if r > 1e-12 {
            return v / r;
        }
    }
}

/// Uniform unit vector in the span of the orthonormal columns of `basis`.
pub fn unit_in_span(rng: &mut SearchRng, basis: &DMatrix<f64>) -> Vector {
    let c = unit_vector(rng, basis.ncols());
    basis * c
}

pub fn normalized(v: &Vector) -> Option<Vector> {
    let r = v.norm();
    (r > 1e-300 && r.is_finite()).then(|| v / r)
}

/// Coordinate descent with a shrinking step.
///
/// Each sweep probes `x_i ± step` for every coordinate and keeps the best
/// improvement; a sweep without improvement halves the step. `objective`
/// receives raw parameters and is expected to normalize them itself.
pub fn coordinate_descent<F>(objective: F, start: Vec<f64>, sweeps: usize, initial_step: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = start;
    let mut best = objective(&x);
    let mut step = initial_step;
    for _ in 0..sweeps {
        let mut improved = false;
        for i in 0..x.len() {
            let orig = x[i];
            let mut local_best = best;
            let mut local_x = orig;
            for cand in [orig + step, orig - step] {
                x[i] = cand;
                let val = objective(&x);
                if val < local_best {
                    local_best = val;
                    local_x = cand;
                }
            }
            x[i] = local_x;
            if local_best < best {
                best = local_best;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
    }
    (x, best)
}

fn fd_gradient<F: Fn(&[f64]) -> f64>(objective: &F, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = objective(&probe);
            probe[i] = x[i] - h;
            let down = objective(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Quasi-Newton (BFGS) descent with central-difference gradients and a
/// backtracking line search. Stops after `iterations` steps or when no
/// decrease can be found along the search direction.
pub fn bfgs_minimize<F>(objective: F, start: Vec<f64>, iterations: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let mut x = DVector::from_vec(start);
    let mut fx = objective(x.as_slice());
    let mut g = DVector::from_vec(fd_gradient(&objective, x.as_slice()));
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    for _ in 0..iterations {
        if g.norm() < 1e-13 {
            break;
        }
        let mut dir = -(&h_inv * &g);
        if dir.dot(&g) >= 0.0 {
            h_inv = DMatrix::identity(n, n);
            dir = -g.clone();
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-16 {
            let cand = &x + &dir * step;
            let fc = objective(cand.as_slice());
            if fc.is_finite() && fc <= fx + 1e-4 * step * slope {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else { break };
        let g_new = DVector::from_vec(fd_gradient(&objective, x_new.as_slice()));
        let s = &x_new - &x;
        let yv = &g_new - &g;
        let sy = s.dot(&yv);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let left = &i - &s * yv.transpose() * rho;
            let right = &i - &yv * s.transpose() * rho;
            h_inv = &left * &h_inv * &right + &s * s.transpose() * rho;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    (x.data.into(), fx)
}

/// Levenberg-Marquardt on `‖r(p)‖²` with a forward-difference Jacobian.
/// Returns the final parameters and residual norm.
pub fn levenberg_marquardt<F>(residual: F, start: Vec<f64>, iterations: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    let n = start.len();
    let mut p = start;
    let mut r = residual(&p);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..iterations {
        if cost < 1e-30 {
            break;
        }
        let mut jac = DMatrix::zeros(r.len(), n);
        let mut probe = p.clone();
        for j in 0..n {
            let h = 1e-7 * p[j].abs().max(1.0);
            probe[j] = p[j] + h;
            jac.set_column(j, &((residual(&probe) - &r) / h));
            probe[j] = p[j];
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut stepped = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += mu * (1.0 + jtj[(i, i)]);
            }
            let Some(delta) = a.lu().solve(&jtr) else {
                mu *= 10.0;
                continue;
            };
            let cand: Vec<f64> = p.iter().zip(delta.iter()).map(|(x, d)| x - d).collect();
            let rc = residual(&cand);
            let cc = rc.norm_squared();
            if cc.is_finite() && cc < cost {
                p = cand;
                r = rc;
                cost = cc;
                mu = (mu * 0.3).max(1e-15);
                stepped = true;
                break;
            }
            mu *= 10.0;
        }
        if !stepped {
            break;
        }
    }
    (p, cost.sqrt())
}

/// Keeps the `k` smallest `(score, item)` pairs, ties broken by insertion order.
pub struct BestK<T> {
    k: usize,
    items: Vec<(f64, T)>,
}

impl<T> BestK<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    pub fn offer(&mut self, score: f64, item: T) {
        if !score.is_finite() {
            return;
        }
        if self.items.len() == self.k && score >= self.items[self.k - 1].0 {
            return;
        }
        let pos = self.items.partition_point(|(s, _)| *s <= score);
        self.items.insert(pos, (score, item));
        self.items.truncate(self.k);
    }

    pub fn into_vec(self) -> Vec<(f64, T)> {
        self.items
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_vectors_are_unit_and_seeded() {
        let mut a = rng(3);
        let mut b = rng(3);
        for _ in 0..10 {
            let x = unit_vector(&mut a, 5);
            assert!((x.norm() - 1.0).abs() < 1e-15);
            assert_eq!(x, unit_vector(&mut b, 5));
        }
    }

    #[test]
    fn descent_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 1.2).powi(2);
        let (x, v) = coordinate_descent(f, vec![0.0, 0.0], 200, 0.5);
        assert!(v < 1e-20);
        assert!((x[0] - 0.3).abs() < 1e-10 && (x[1] + 1.2).abs() < 1e-10);
    }

    #[test]
    fn bfgs_follows_curved_valley() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let (x, v) = bfgs_minimize(f, vec![-1.2, 1.0], 500);
        assert!(v < 1e-10, "{v}");
        assert!((x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn lm_solves_nonlinear_system() {
        let r = |p: &[f64]| DVector::from_vec(vec![p[0] * p[0] + p[1] * p[1] - 1.0, p[0] - p[1]]);
        let (p, res) = levenberg_marquardt(r, vec![2.0, 0.5], 100);
        assert!(res < 1e-14, "{res}");
        assert!((p[0] - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn best_k_keeps_smallest() {
        let mut b = BestK::new(2);
        for (s, i) in [(3.0, 0), (1.0, 1), (2.0, 2), (1.0, 3), (f64::NAN, 4)] {
            b.offer(s, i);
        }
        let v: Vec<_> = b.into_vec().into_iter().map(|(_, i)| i).collect();
        assert_eq!(v, vec![1, 3]);
    }
}
