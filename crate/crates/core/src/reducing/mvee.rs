//! Minimum-volume enclosing ellipsoids for phase-symmetric point sets.
//!
//! Every complex point `z` stands for its whole circle `{e^{it} z}`, so the
//! fitted ellipsoid is `{w : |A w| <= 1}` with `A` Hermitian positive. The
//! weight vector `u` solves the D-optimal design problem
//! `max log det sum_i u_i z_i z_i^*` by Khachiyan steps with Todd-Yildirim
//! away steps; the ellipsoid is `A = (m X)^{-1/2}`.

use crate::error::{Error, Result};
use crate::linalg::{matrix_power, HermitianMatrix, Matrix, PositiveMatrix, Vector, C64};
use std::f64::consts::PI;

/// Stopping rule for [`mvee`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MveeOptions {
    /// Stop once `max_i z_i^* X^{-1} z_i / m - 1` drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MveeOptions {
    fn default() -> Self {
        MveeOptions { tol: 1e-8, max_iter: 10_000 }
    }
}

/// Fitted ellipsoid and solver statistics.
#[derive(Clone, Debug)]
pub struct MveeFit {
    pub a: PositiveMatrix,
    pub iterations: usize,
    pub violation: f64,
}

fn scatter(points: &[Vector], u: &[f64]) -> Matrix {
    let m = points[0].dim();
    let mut x = Matrix::zeros(m);
    for (z, &ui) in points.iter().zip(u) {
        if ui > 0.0 {
            x = x + Matrix::outer(z).scale(ui);
        }
    }
    x
}

fn leverages(points: &[Vector], x: &Matrix) -> Result<Vec<f64>> {
    let xinv = PositiveMatrix::new(HermitianMatrix::hermitize(x))?.inverse();
    Ok(points.iter().map(|z| z.dot(&xinv.apply(z)).re).collect())
}

/// Minimum-volume phase-symmetric ellipsoid containing `points`.
///
/// Khachiyan steps run for at most `max_iter / 10` iterations; if the
/// violation is still above `tol`, the remaining budget goes to Newton steps
/// on the log-barrier form of the same problem, warm-started from the current
/// ellipsoid. Either way convergence is judged on the design weights `u`.
pub fn mvee(points: &[Vector], opts: MveeOptions) -> Result<MveeFit> {
    if points.is_empty() {
        return Err(Error::Precondition("no points to enclose".into()));
    }
    let m = points[0].dim();
    let k = points.len();
    let mf = m as f64;
    let mut u = vec![1.0 / k as f64; k];
    let mut x = scatter(points, &u);
    let mut violation = f64::INFINITY;
    let budget = opts.max_iter / 10;
    for it in 0..budget {
        // Refresh from scratch now and then to shed rank-one drift.
        if it % 64 == 63 {
            x = scatter(points, &u);
        }
        let lev = leverages(points, &x)?;
        let (jmax, mmax) = lev.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
        let (jmin, mmin) = lev.iter().enumerate().filter(|(i, _)| u[*i] > 0.0).fold(
            (0, f64::INFINITY),
            |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
        );
        violation = mmax / mf - 1.0;
        if violation < opts.tol {
            return finish(x, m, it, violation);
        }
        let (j, beta) = if mf - mmin > mmax - mf && u[jmin] < 1.0 {
            let floor = -u[jmin] / (1.0 - u[jmin]);
            let beta = if mmin <= 1.0 { floor } else { ((mmin - mf) / (mf * (mmin - 1.0))).max(floor) };
            (jmin, beta)
        } else {
            (jmax, (mmax - mf) / (mf * (mmax - 1.0)))
        };
        for ui in u.iter_mut() {
            *ui *= 1.0 - beta;
        }
        u[j] += beta;
        if u[j] < 1e-300 {
            u[j] = 0.0;
        }
        x = x.scale(1.0 - beta) + Matrix::outer(&points[j]).scale(beta);
    }
    x = scatter(points, &u);
    let lev = leverages(points, &x)?;
    let mmax = lev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    violation = violation.min(mmax / mf - 1.0);
    if mmax / mf - 1.0 < opts.tol {
        return finish(x, m, budget, mmax / mf - 1.0);
    }
    // Whiten with the current ellipsoid so the barrier works near P = I;
    // design weights and leverages do not change under this map.
    let a0 = matrix_power(&PositiveMatrix::new(HermitianMatrix::hermitize(&x.scale(mf)))?, -0.5)?;
    let white: Vec<Vector> = points.iter().map(|z| a0.matrix().apply(z)).collect();
    let mut barrier = Barrier::new(&white, Matrix::identity(m).scale(0.99 * mf / mmax));
    let mut t = k as f64 / mf;
    let mut used = budget;
    while used < opts.max_iter {
        let decrement = barrier.newton_step(t)?;
        used += 1;
        if decrement < 1e-9 {
            let u = barrier.design();
            let xu = scatter(points, &u);
            let lev = leverages(points, &xu)?;
            let v = lev.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / mf - 1.0;
            violation = violation.min(v);
            if v < opts.tol {
                return finish(xu, m, used, v);
            }
            t *= 8.0;
        }
    }
    Err(Error::Fit { iterations: opts.max_iter, violation })
}

/// Hermitian basis orthonormal for the Frobenius product, and its coordinates.
fn hermitian_basis(m: usize) -> Vec<Matrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        let mut e = Matrix::zeros(m);
        e.set(i, i, C64::new(1.0, 0.0));
        out.push(e);
        for j in i + 1..m {
            let mut a = Matrix::zeros(m);
            a.set(i, j, C64::new(s, 0.0));
            a.set(j, i, C64::new(s, 0.0));
            out.push(a);
            let mut b = Matrix::zeros(m);
            b.set(i, j, C64::new(0.0, s));
            b.set(j, i, C64::new(0.0, -s));
            out.push(b);
        }
    }
    out
}

/// `-t log det P - sum log(1 - z_i^* P z_i)` over Hermitian `P`.
///
/// The slacks are carried along and updated by increments, so their rounding
/// behaves like a fixed perturbation of the points instead of fresh noise at
/// every evaluation; near the optimum they are far smaller than one.
struct Barrier {
    p: Matrix,
    s: Vec<f64>,
    basis: Vec<Matrix>,
    /// `g[i][k] = z_i^* B_k z_i`.
    g: Vec<Vec<f64>>,
}

impl Barrier {
    fn new(points: &[Vector], p0: Matrix) -> Self {
        let basis = hermitian_basis(p0.dim());
        let g: Vec<Vec<f64>> =
            points.iter().map(|z| basis.iter().map(|b| z.dot(&b.apply(z)).re).collect()).collect();
        let s = points.iter().map(|z| 1.0 - z.dot(&p0.apply(z)).re).collect();
        Barrier { p: p0, s, basis, g }
    }

    /// Derivative of the barrier at `p` with slacks `s` along `dir`
    /// (coordinates `dirc`, per-point rates `rate`), or `None` outside the domain.
    fn slope(&self, p: &Matrix, s: &[f64], dir: &Matrix, rate: &[f64], t: f64) -> Option<f64> {
        let h = HermitianMatrix::hermitize(p);
        if h.min_eigenvalue() <= 0.0 || s.iter().any(|&v| v <= 0.0) {
            return None;
        }
        let q = PositiveMatrix::new(h).ok()?.inverse();
        let mut d = -t * (q * *dir).trace().re;
        for (ri, si) in rate.iter().zip(s) {
            d += ri / si;
        }
        Some(d)
    }

    /// One damped Newton step; returns half the squared Newton decrement.
    fn newton_step(&mut self, t: f64) -> Result<f64> {
        let d = self.basis.len();
        let q = PositiveMatrix::new(HermitianMatrix::hermitize(&self.p))?.inverse();
        let qb: Vec<Matrix> = self.basis.iter().map(|b| q * *b).collect();
        let mut grad = vec![0.0; d];
        let mut hess = vec![0.0; d * d];
        for a in 0..d {
            grad[a] = -t * qb[a].trace().re;
            for b in 0..=a {
                hess[a * d + b] = t * (qb[a] * qb[b]).trace().re;
            }
        }
        for (gi, si) in self.g.iter().zip(&self.s) {
            for a in 0..d {
                grad[a] += gi[a] / si;
                let ga = gi[a] / (si * si);
                for b in 0..=a {
                    hess[a * d + b] += ga * gi[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                hess[b * d + a] = hess[a * d + b];
            }
        }
        let step = solve_spd(&hess, &grad, d)
            .ok_or_else(|| Error::Fit { iterations: 0, violation: f64::INFINITY })?;
        let dec: f64 = step.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>() / 2.0;
        let mut dir = Matrix::zeros(self.p.dim());
        for (c, b) in step.iter().zip(&self.basis) {
            dir = dir + b.scale(-c);
        }
        // Rate of change of each z_i^* P z_i along the direction.
        let rate: Vec<f64> = self.g.iter().map(|gi| -gi.iter().zip(&step).map(|(a, c)| a * c).sum::<f64>()).collect();
        // Backtrack on feasibility and the sign of the directional
        // derivative; barrier values themselves are too large to compare.
        let mut alpha = 1.0;
        for _ in 0..60 {
            let trial = self.p + dir.scale(alpha);
            let s: Vec<f64> = self.s.iter().zip(&rate).map(|(si, ri)| si - alpha * ri).collect();
            if let Some(slope) = self.slope(&trial, &s, &dir, &rate, t) {
                if slope <= 0.0 {
                    self.p = trial;
                    self.s = s;
                    break;
                }
            }
            alpha *= 0.5;
        }
        Ok(dec)
    }

    /// Design weights `u_i` proportional to `1 / s_i`.
    fn design(&self) -> Vec<f64> {
        let total: f64 = self.s.iter().map(|v| 1.0 / v).sum();
        self.s.iter().map(|v| 1.0 / (v * total)).collect()
    }
}

fn finish(x: Matrix, m: usize, iterations: usize, violation: f64) -> Result<MveeFit> {
    let mx = PositiveMatrix::new(HermitianMatrix::hermitize(&x.scale(m as f64)))?;
    Ok(MveeFit { a: matrix_power(&mx, -0.5)?, iterations, violation })
}

/// Cholesky solve of a small dense symmetric positive system.
fn solve_spd(a: &[f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..d {
        for k in 0..i {
            y[i] -= l[i * d + k] * y[k];
        }
        y[i] /= l[i * d + i];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            y[i] -= l[k * d + i] * y[k];
        }
        y[i] /= l[i * d + i];
    }
    Some(y)
}

/// `k` quasi-uniform unit vectors in `C^m` (a low-discrepancy sequence in
/// `[0,1)^{2m}` pushed through complex Box-Muller and normalized).
pub fn directions(m: usize, k: usize) -> Vec<Vector> {
    let d = 2 * m;
    // Generalized golden ratio: the positive root of x^{d+1} = x + 1.
    let mut g = 2.0f64;
    for _ in 0..64 {
        g = (1.0 + g).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|i| g.powi(-(i as i32))).collect();
    (1..=k)
        .map(|idx| {
            let mut v = Vector::zeros(m);
            for c in 0..m {
                let s = (0.5 + idx as f64 * alpha[2 * c]).fract().clamp(1e-12, 1.0 - 1e-12);
                let t = (0.5 + idx as f64 * alpha[2 * c + 1]).fract();
                let r = (-s.ln()).sqrt();
                v.as_mut_slice()[c] = C64::from_polar(r, 2.0 * PI * t);
            }
            let n = v.norm();
            v.scale(C64::new(1.0 / n, 0.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_points_give_the_unit_ball() {
        let pts = directions(2, 256);
        let fit = mvee(&pts, MveeOptions::default()).unwrap();
        // Quasi-uniform points on the sphere: the fit is close to the ball.
        let dev = (*fit.a.matrix() - Matrix::identity(2)).frobenius();
        assert!(dev < 0.05, "{dev}");
        assert!(pts.iter().all(|z| fit.a.matrix().apply(z).norm() <= 1.0 + 1e-7));
    }

    #[test]
    fn recovers_an_ellipsoid_from_its_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in 1..=3 {
            let target = PositiveMatrix::random(&mut rng, m, 20.0);
            let pts: Vec<Vector> = directions(m, 256)
                .iter()
                .map(|e| {
                    let r = target.matrix().apply(e).norm();
                    e.scale(C64::new(1.0 / r, 0.0))
                })
                .collect();
            let fit = mvee(&pts, MveeOptions::default()).unwrap();
            let err = (*fit.a.matrix() - *target.matrix()).op_norm() / target.op_norm();
            assert!(err < 1e-3, "m={m} err={err}");
        }
    }

    #[test]
    fn directions_are_unit_and_distinct() {
        let d = directions(3, 64);
        assert!(d.iter().all(|v| (v.norm() - 1.0).abs() < 1e-14));
        assert!(d[0] != d[1]);
    }

    #[test]
    fn non_convergence_is_reported() {
        let pts = directions(2, 64);
        let r = mvee(&pts, MveeOptions { tol: 0.0, max_iter: 3 });
        assert!(matches!(r, Err(Error::Fit { iterations: 3, .. })));
    }
}
