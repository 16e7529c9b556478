//! Matrix weights, cube averages and A_p characteristics.

pub mod container;
pub mod quadrature;

use crate::dyadic::{CubeWindow, DyadicCube, Region};
use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, Matrix, PositiveMatrix, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use container::SampledWeight;
pub use quadrature::{QuadSpec, QuadratureRule};

/// One factor `|x - center|^a [log(2 + |x - center|)]^b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerFactor {
    pub center: Vec<f64>,
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

/// Scalar weight `scale * prod_k |x - c_k|^{a_k} [log(2 + |x - c_k|)]^{b_k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarProfile {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub factors: Vec<PowerFactor>,
}

fn one() -> f64 {
    1.0
}

fn distance(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

impl ScalarProfile {
    pub fn constant(c: f64) -> Self {
        ScalarProfile { scale: c, factors: Vec::new() }
    }

    /// `|x - center|^a [log(2 + |x - center|)]^b`.
    pub fn power_log(center: Vec<f64>, a: f64, b: f64) -> Self {
        ScalarProfile { scale: 1.0, factors: vec![PowerFactor { center, a, b }] }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.scale;
        for f in &self.factors {
            let r = distance(x, &f.center);
            if f.a != 0.0 {
                v *= r.powf(f.a);
            }
            if f.b != 0.0 {
                v *= (2.0 + r).ln().powf(f.b);
            }
        }
        v
    }

    /// `profile^alpha`, exponent by exponent.
    pub fn pow(&self, alpha: f64) -> Self {
        ScalarProfile {
            scale: self.scale.powf(alpha),
            factors: self
                .factors
                .iter()
                .map(|f| PowerFactor { center: f.center.clone(), a: f.a * alpha, b: f.b * alpha })
                .collect(),
        }
    }

    pub fn singular_points(&self) -> Vec<Vec<f64>> {
        self.factors.iter().filter(|f| f.a != 0.0).map(|f| f.center.clone()).collect()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::Precondition(format!("weight scale must be positive, got {}", self.scale)));
        }
        for f in &self.factors {
            if f.center.len() != n {
                return Err(Error::Precondition(format!("factor center {:?} is not in R^{n}", f.center)));
            }
            if f.a <= -(n as f64) {
                return Err(Error::Divergence(format!(
                    "|x|^a with a = {} <= -n = -{n} is not locally integrable",
                    f.a
                )));
            }
            if !f.a.is_finite() || !f.b.is_finite() {
                return Err(Error::Precondition("non-finite exponent".into()));
            }
        }
        Ok(())
    }
}

/// The supported weight families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightKind {
    /// `|x|^a [log(2 + |x|)]^b I_m`.
    PowerLog { a: f64, b: f64 },
    /// `|x|^{-d} |x - x0|^{(p-1) dtilde} I_m`.
    TwoSingularity { d: f64, dtilde: f64, p: f64, x0: Vec<f64> },
    /// General scalar profile times `I_m`.
    Profile { profile: ScalarProfile },
    /// `U(x) diag(w1, w2) U(x)^*` with `U` the rotation by `2 pi turns x_1` (m = 2).
    ConjugatedBlock { first: ScalarProfile, second: ScalarProfile, turns: f64 },
    /// Piecewise constant on a uniform grid.
    GridSampled { samples: SampledWeight },
}

/// An evaluable map `x -> W(x)`, positive definite off `singular_points`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixWeight {
    pub n: usize,
    pub m: usize,
    pub kind: WeightKind,
}

impl MatrixWeight {
    pub fn new(n: usize, m: usize, kind: WeightKind) -> Result<Self> {
        let w = MatrixWeight { n, m, kind };
        w.validate()?;
        Ok(w)
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self::scalar(n, m, ScalarProfile::constant(1.0)).unwrap()
    }

    pub fn constant(n: usize, m: usize, c: f64) -> Result<Self> {
        Self::scalar(n, m, ScalarProfile::constant(c))
    }

    pub fn power_log(n: usize, m: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(n, m, WeightKind::PowerLog { a, b })
    }

    pub fn two_singularity(n: usize, m: usize, d: f64, dtilde: f64, p: f64, x0: Vec<f64>) -> Result<Self> {
        Self::new(n, m, WeightKind::TwoSingularity { d, dtilde, p, x0 })
    }

    pub fn scalar(n: usize, m: usize, profile: ScalarProfile) -> Result<Self> {
        Self::new(n, m, WeightKind::Profile { profile })
    }

    pub fn conjugated_block(n: usize, first: ScalarProfile, second: ScalarProfile, turns: f64) -> Result<Self> {
        Self::new(n, 2, WeightKind::ConjugatedBlock { first, second, turns })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 3 {
            return Err(Error::Precondition(format!("space dimension n = {} outside 1..=3", self.n)));
        }
        if self.m == 0 || self.m > crate::linalg::MAX_DIM {
            return Err(Error::Dimension(self.m));
        }
        match &self.kind {
            WeightKind::PowerLog { a, b } => self.power_log_profile(*a, *b).validate(self.n),
            WeightKind::TwoSingularity { p, x0, .. } => {
                if x0.len() != self.n {
                    return Err(Error::Precondition(format!("x0 {x0:?} is not in R^{}", self.n)));
                }
                if !(*p > 0.0) {
                    return Err(Error::InvalidExponent { p: *p, requirement: "p > 0" });
                }
                self.scalar_profile().unwrap().validate(self.n)
            }
            WeightKind::Profile { profile } => profile.validate(self.n),
            WeightKind::ConjugatedBlock { first, second, turns } => {
                if self.m != 2 {
                    return Err(Error::Precondition("conjugated block weights have m = 2".into()));
                }
                if !turns.is_finite() {
                    return Err(Error::Precondition("non-finite rotation rate".into()));
                }
                first.validate(self.n)?;
                second.validate(self.n)
            }
            WeightKind::GridSampled { samples } => {
                if samples.n() != self.n || samples.m() != self.m {
                    return Err(Error::Precondition("sampled weight dimensions disagree".into()));
                }
                Ok(())
            }
        }
    }

    fn power_log_profile(&self, a: f64, b: f64) -> ScalarProfile {
        ScalarProfile::power_log(vec![0.0; self.n], a, b)
    }

    /// `Some(w)` when `W = w I_m`.
    pub fn scalar_profile(&self) -> Option<ScalarProfile> {
        match &self.kind {
            WeightKind::PowerLog { a, b } => Some(self.power_log_profile(*a, *b)),
            WeightKind::TwoSingularity { d, dtilde, p, x0 } => Some(ScalarProfile {
                scale: 1.0,
                factors: vec![
                    PowerFactor { center: vec![0.0; self.n], a: -d, b: 0.0 },
                    PowerFactor { center: x0.clone(), a: (p - 1.0) * dtilde, b: 0.0 },
                ],
            }),
            WeightKind::Profile { profile } => Some(profile.clone()),
            _ => None,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.scalar_profile().is_some()
    }

    pub fn singular_points(&self) -> Vec<Vec<f64>> {
        let mut pts = match &self.kind {
            WeightKind::ConjugatedBlock { first, second, .. } => {
                let mut v = first.singular_points();
                v.extend(second.singular_points());
                v
            }
            WeightKind::GridSampled { .. } => Vec::new(),
            _ => self.scalar_profile().unwrap().singular_points(),
        };
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Precondition(format!("point {x:?} is not in R^{}", self.n)));
        }
        if self.singular_points().iter().any(|s| s.as_slice() == x) {
            return Err(Error::Singularity(x.to_vec()));
        }
        Ok(())
    }

    fn rotation(turns: f64, x: &[f64]) -> Matrix {
        let t = 2.0 * PI * turns * x[0];
        let (s, c) = t.sin_cos();
        Matrix::from_rows(&[
            vec![C64::new(c, 0.0), C64::new(-s, 0.0)],
            vec![C64::new(s, 0.0), C64::new(c, 0.0)],
        ])
        .unwrap()
    }

    /// `W(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<PositiveMatrix> {
        self.check_point(x)?;
        match &self.kind {
            WeightKind::ConjugatedBlock { first, second, turns } => {
                PositiveMatrix::from_spectrum(Self::rotation(*turns, x), &[first.eval(x), second.eval(x)])
            }
            WeightKind::GridSampled { samples } => Ok(*samples.at(x)),
            _ => {
                let w = self.scalar_profile().unwrap().eval(x);
                if !(w > 0.0) || !w.is_finite() {
                    return Err(Error::Singularity(x.to_vec()));
                }
                Ok(PositiveMatrix::scalar(self.m, w))
            }
        }
    }

    /// `W(x)^alpha` as a plain matrix; no singular-point check.
    pub fn power_at(&self, x: &[f64], alpha: f64) -> Matrix {
        match &self.kind {
            WeightKind::ConjugatedBlock { first, second, turns } => {
                let u = Self::rotation(*turns, x);
                let d = Matrix::from_real_diag(&[first.eval(x).powf(alpha), second.eval(x).powf(alpha)]);
                u * d * u.adjoint()
            }
            WeightKind::GridSampled { samples } => samples.at(x).power_matrix(alpha),
            _ => {
                let w = self.scalar_profile().unwrap().eval(x).powf(alpha);
                Matrix::from_real_diag(&vec![w; self.m])
            }
        }
    }

    /// `W(x)^alpha` for scalar weights, as a number.
    pub fn scalar_power_at(&self, x: &[f64], alpha: f64) -> Option<f64> {
        self.scalar_profile().map(|p| p.eval(x).powf(alpha))
    }

    /// `c W`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Precondition("scaling factor must be positive".into()));
        }
        let kind = match &self.kind {
            WeightKind::ConjugatedBlock { first, second, turns } => {
                let mut f = first.clone();
                let mut s = second.clone();
                f.scale *= c;
                s.scale *= c;
                WeightKind::ConjugatedBlock { first: f, second: s, turns: *turns }
            }
            WeightKind::GridSampled { samples } => WeightKind::GridSampled { samples: samples.map(|p| Ok(p.scaled(c)))? },
            _ => {
                let mut p = self.scalar_profile().unwrap();
                p.scale *= c;
                WeightKind::Profile { profile: p }
            }
        };
        MatrixWeight::new(self.n, self.m, kind)
    }

    /// Checks that `||W||` is integrable over every cube of the window.
    pub fn check_integrable(&self, window: &CubeWindow, quad: &QuadSpec) -> Result<()> {
        let sing = self.singular_points();
        for q in window.cubes() {
            let rule = QuadratureRule::build(&q.to_cube().region(), &sing, quad);
            let vals: Vec<f64> = rule.points().map(|x| self.power_at(x, 1.0).op_norm()).collect();
            rule.check_integrable(&vals)?;
        }
        Ok(())
    }
}

/// `W~ = W^{-1/(p-1)}`.
pub fn dual_weight(w: &MatrixWeight, p: f64) -> Result<MatrixWeight> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent { p, requirement: "dual weights need p > 1" });
    }
    let e = -1.0 / (p - 1.0);
    let kind = match &w.kind {
        WeightKind::PowerLog { a, b } => WeightKind::PowerLog { a: a * e, b: b * e },
        WeightKind::ConjugatedBlock { first, second, turns } => {
            WeightKind::ConjugatedBlock { first: first.pow(e), second: second.pow(e), turns: *turns }
        }
        WeightKind::GridSampled { samples } => {
            WeightKind::GridSampled { samples: samples.map(|m| crate::linalg::matrix_power(m, e))? }
        }
        _ => WeightKind::Profile { profile: w.scalar_profile().unwrap().pow(e) },
    };
    MatrixWeight::new(w.n, w.m, kind)
}

/// `(avg_Q ||W^{1/p}(x) M||^p dx)^{1/p}` over any region.
pub fn cube_average_matrix_norm(
    w: &MatrixWeight,
    p: f64,
    region: &Region,
    m: &Matrix,
    quad: &QuadSpec,
) -> Result<f64> {
    check_p(p)?;
    let rule = QuadratureRule::build(region, &w.singular_points(), quad);
    let vals: Vec<f64> = rule.points().map(|x| (w.power_at(x, 1.0 / p) * *m).op_norm().powf(p)).collect();
    Ok(rule.average(&vals)?.powf(1.0 / p))
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidExponent { p, requirement: "p must be a positive real" });
    }
    Ok(())
}

/// Which form of the A_p characteristic to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApVariant {
    Standard,
    Star,
}

/// Windowed A_p characteristic with the cube where the sup is attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApCharacteristic {
    pub p: f64,
    pub value: f64,
    pub variant: ApVariant,
    pub cubes: usize,
    pub argmax: DyadicCube,
}

/// Per-cube defining quantity of `[W]_{A_p}`.
pub fn ap_cube_value(w: &MatrixWeight, p: f64, region: &Region, variant: ApVariant, quad: &QuadSpec) -> Result<f64> {
    check_p(p)?;
    if variant == ApVariant::Star && p > 1.0 {
        return Err(Error::InvalidVariant("the star characteristic is defined for p <= 1 only".into()));
    }
    let rule = QuadratureRule::build(region, &w.singular_points(), quad);
    if let Some(profile) = w.scalar_profile() {
        let vals: Vec<f64> = rule.points().map(|x| profile.eval(x)).collect();
        let avg_w = rule.average(&vals)?;
        if p > 1.0 {
            let e = -1.0 / (p - 1.0);
            let dual: Vec<f64> = vals.iter().map(|v| v.powf(e)).collect();
            let avg_d = rule.average(&dual)?;
            return Ok(avg_w * avg_d.powf(p - 1.0));
        }
        // ||w(x)^{1/p} w(y)^{-1/p}||^p = w(x)/w(y): both variants agree.
        let inv_max = vals.iter().map(|v| 1.0 / v).fold(0.0, f64::max);
        return Ok(avg_w * inv_max);
    }
    let xs: Vec<Matrix> = rule.points().map(|x| w.power_at(x, 1.0 / p)).collect();
    let ys: Vec<Matrix> = rule.points().map(|x| w.power_at(x, -1.0 / p)).collect();
    let weights = rule.weights();
    if p > 1.0 {
        let pp = p / (p - 1.0);
        rule.check_integrable(&ys.iter().map(|m| m.op_norm().powf(pp)).collect::<Vec<_>>())?;
        rule.check_integrable(&xs.iter().map(|m| m.op_norm().powf(p)).collect::<Vec<_>>())?;
        let mut total = 0.0;
        for (a, wx) in xs.iter().zip(weights) {
            let inner: f64 = ys.iter().zip(weights).map(|(b, wy)| wy * (*a * *b).op_norm().powf(pp)).sum();
            total += wx * inner.powf(p / pp);
        }
        Ok(total)
    } else {
        rule.check_integrable(&xs.iter().map(|m| m.op_norm().powf(p)).collect::<Vec<_>>())?;
        // table[i][k] = ||W^{1/p}(x_i) W^{-1/p}(y_k)||^p
        let table: Vec<Vec<f64>> =
            xs.iter().map(|a| ys.iter().map(|b| (*a * *b).op_norm().powf(p)).collect()).collect();
        Ok(match variant {
            ApVariant::Standard => (0..ys.len())
                .map(|k| table.iter().zip(weights).map(|(row, wx)| wx * row[k]).sum::<f64>())
                .fold(0.0, f64::max),
            ApVariant::Star => {
                table.iter().zip(weights).map(|(row, wx)| wx * row.iter().cloned().fold(0.0, f64::max)).sum()
            }
        })
    }
}

/// Supremum over the window cubes of the A_p quantity.
pub fn ap_constant(
    w: &MatrixWeight,
    p: f64,
    window: &CubeWindow,
    variant: ApVariant,
    quad: &QuadSpec,
) -> Result<ApCharacteristic> {
    let cubes = window.cubes();
    let values: Vec<Result<f64>> =
        cubes.par_iter().map(|q| ap_cube_value(w, p, &q.to_cube().region(), variant, quad)).collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok(ApCharacteristic { p, value: best.0, variant, cubes: cubes.len(), argmax: cubes[best.1].clone() })
}

/// Numerical ball average of `w_{a,b}` and the comparison value
/// `(|x0| + r)^a [log(2 + |x0| + r)]^b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallAverage {
    pub value: f64,
    pub envelope: f64,
    pub ratio: f64,
}

/// Average of `|x|^a [log(2+|x|)]^b` over `B(x0, r)`. Balls are intervals
/// for `n = 1`; for `n > 1` only centered balls are supported.
pub fn analytic_ball_average(a: f64, b: f64, x0: &[f64], r: f64, quad: &QuadSpec) -> Result<BallAverage> {
    let n = x0.len();
    if a <= -(n as f64) {
        return Err(Error::Divergence(format!("|x|^a with a = {a} <= -n is not integrable at 0")));
    }
    if !(r > 0.0) {
        return Err(Error::Precondition("ball radius must be positive".into()));
    }
    let profile = ScalarProfile::power_log(vec![0.0; n], a, b);
    let value = if n == 1 {
        let region = Region { lower: vec![x0[0] - r], upper: vec![x0[0] + r] };
        let rule = QuadratureRule::build(&region, &[vec![0.0]], quad);
        rule.average(&rule.points().map(|x| profile.eval(x)).collect::<Vec<_>>())?
    } else {
        if x0.iter().any(|c| *c != 0.0) {
            return Err(Error::Precondition("off-center balls are only supported for n = 1".into()));
        }
        // Radial formula: n r^{-n} int_0^r s^{n-1} w(s) ds.
        let region = Region { lower: vec![0.0], upper: vec![r] };
        let rule = QuadratureRule::build(&region, &[vec![0.0]], quad);
        let radial = ScalarProfile::power_log(vec![0.0], a, b);
        let vals: Vec<f64> =
            rule.points().map(|s| n as f64 * (s[0] / r).powi(n as i32 - 1) * radial.eval(s)).collect();
        rule.average(&vals)?
    };
    let rho = x0.iter().map(|c| c * c).sum::<f64>().sqrt() + r;
    let envelope = rho.powf(a) * (2.0 + rho).ln().powf(b);
    Ok(BallAverage { value, envelope, ratio: value / envelope })
}

/// Hermitian average `avg_Q W`.
pub fn average_matrix(w: &MatrixWeight, region: &Region, quad: &QuadSpec) -> Result<PositiveMatrix> {
    let rule = QuadratureRule::build(region, &w.singular_points(), quad);
    let mats: Vec<Matrix> = rule.points().map(|x| w.power_at(x, 1.0)).collect();
    rule.check_integrable(&mats.iter().map(|m| m.op_norm()).collect::<Vec<_>>())?;
    let mut acc = Matrix::zeros(w.m);
    for (m, wt) in mats.iter().zip(rule.weights()) {
        acc = acc + m.scale(*wt);
    }
    PositiveMatrix::new(HermitianMatrix::hermitize(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Domain;

    fn q() -> QuadSpec {
        QuadSpec::default()
    }

    fn unit_interval() -> Region {
        Region { lower: vec![0.0], upper: vec![1.0] }
    }

    #[test]
    fn power_log_evaluation() {
        let w = MatrixWeight::power_log(1, 2, 0.0, 0.0).unwrap();
        assert_eq!(w.evaluate(&[0.3]).unwrap().matrix(), &Matrix::identity(2));
        let w = MatrixWeight::power_log(1, 2, -0.5, 0.0).unwrap();
        let v = w.evaluate(&[4.0]).unwrap();
        assert!((v.matrix().get(0, 0).re - 0.5).abs() < 1e-15 && v.matrix().get(0, 1).norm() == 0.0);
        assert!(matches!(w.evaluate(&[0.0]), Err(Error::Singularity(_))));
    }

    #[test]
    fn two_singularity_formula() {
        let w = MatrixWeight::two_singularity(1, 1, 0.4, 0.3, 2.0, vec![0.25]).unwrap();
        let x = 0.7f64;
        let expect = x.powf(-0.4) * (x - 0.25f64).abs().powf(0.3);
        assert!((w.evaluate(&[x]).unwrap().matrix().get(0, 0).re - expect).abs() < 1e-15);
        assert!(w.evaluate(&[0.25]).is_err());
    }

    #[test]
    fn divergent_exponent_rejected() {
        assert!(matches!(MatrixWeight::power_log(1, 1, -1.0, 0.0), Err(Error::Divergence(_))));
        assert!(matches!(MatrixWeight::power_log(2, 1, -2.5, 0.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn conjugated_block_is_genuinely_matrix_valued() {
        let w = MatrixWeight::conjugated_block(
            1,
            ScalarProfile::power_log(vec![0.0], -0.3, 0.0),
            ScalarProfile::constant(2.0),
            1.0,
        )
        .unwrap();
        let a = *w.evaluate(&[0.1]).unwrap().matrix();
        let b = *w.evaluate(&[0.2]).unwrap().matrix();
        assert!((a * b - b * a).frobenius() > 1e-3);
        let sq = w.power_at(&[0.1], 0.5);
        assert!((sq * sq - a).frobenius() < 1e-13);
    }

    #[test]
    fn cube_norm_examples() {
        let i = Matrix::identity(2);
        let id = MatrixWeight::identity(1, 2);
        for p in [0.5, 1.0, 3.0] {
            let v = cube_average_matrix_norm(&id, p, &unit_interval(), &i, &q()).unwrap();
            assert!((v - 1.0).abs() < 1e-13);
        }
        let two = MatrixWeight::constant(1, 2, 2.0).unwrap();
        let v = cube_average_matrix_norm(&two, 2.0, &unit_interval(), &i, &q()).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn cube_norm_scales_like_closed_form_near_origin() {
        let a = -0.5;
        let w = MatrixWeight::power_log(1, 1, a, 0.0).unwrap();
        let i = Matrix::identity(1);
        for p in [1.0, 2.0] {
            for j in 0..12 {
                let l = (0.5f64).powi(j);
                let r = Region { lower: vec![0.0], upper: vec![l] };
                let v = cube_average_matrix_norm(&w, p, &r, &i, &q()).unwrap();
                let ratio = v / l.powf(a / p);
                assert!(ratio > 0.5 && ratio < 2.0, "ratio {ratio}");
            }
        }
    }

    #[test]
    fn ap_constant_identity_and_variants() {
        let window = CubeWindow::new(Domain::centered(1), 1, 4).unwrap();
        let id = MatrixWeight::identity(1, 2);
        let c = ap_constant(&id, 2.0, &window, ApVariant::Standard, &q()).unwrap();
        assert!((c.value - 1.0).abs() < 1e-12);
        let s = ap_constant(&id, 0.5, &window, ApVariant::Standard, &q()).unwrap();
        let t = ap_constant(&id, 0.5, &window, ApVariant::Star, &q()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12 && (t.value - 1.0).abs() < 1e-12);
        assert!(matches!(
            ap_constant(&id, 2.0, &window, ApVariant::Star, &q()),
            Err(Error::InvalidVariant(_))
        ));
    }

    #[test]
    fn ap_constant_is_stable_under_refinement() {
        let window = CubeWindow::new(Domain::centered(1), 1, 8).unwrap();
        let w = MatrixWeight::power_log(1, 1, 0.5, 0.0).unwrap();
        let c1 = ap_constant(&w, 2.0, &window, ApVariant::Standard, &q()).unwrap();
        let c2 = ap_constant(&w, 2.0, &window, ApVariant::Standard, &q().refined()).unwrap();
        assert!(c1.value.is_finite() && c1.value > 1.0);
        assert!((c1.value - c2.value).abs() < 1e-6 * c1.value);
        // Closed form on a cube with corner at 0: (2/3)(2) = 4/3.
        assert!((c1.value - 4.0 / 3.0).abs() < 1e-4, "{}", c1.value);
    }

    #[test]
    fn non_ap_weight_is_detected_as_divergent() {
        // w = |x|^{1.2} with p = 2: w^{-1} = |x|^{-1.2} is not integrable.
        let window = CubeWindow::new(Domain::centered(1), 1, 3).unwrap();
        let w = MatrixWeight::power_log(1, 1, 1.2, 0.0).unwrap();
        assert!(matches!(
            ap_constant(&w, 2.0, &window, ApVariant::Standard, &q()),
            Err(Error::Integrability(_))
        ));
    }

    #[test]
    fn dual_weight_examples() {
        let id = MatrixWeight::identity(1, 2);
        let d = dual_weight(&id, 2.0).unwrap();
        assert_eq!(d.evaluate(&[0.2]).unwrap().matrix(), &Matrix::identity(2));
        let w = MatrixWeight::power_log(1, 1, 0.6, 0.0).unwrap();
        assert_eq!(dual_weight(&w, 3.0).unwrap().kind, WeightKind::PowerLog { a: -0.3, b: -0.0 });
        let ts = MatrixWeight::two_singularity(1, 1, 0.4, 0.3, 2.0, vec![0.25]).unwrap();
        let dt = dual_weight(&ts, 2.0).unwrap();
        let x = 0.61f64;
        let expect = x.powf(0.4) * (x - 0.25).powf(-0.3);
        assert!((dt.evaluate(&[x]).unwrap().matrix().get(0, 0).re - expect).abs() < 1e-14);
        assert!(matches!(dual_weight(&w, 1.0), Err(Error::InvalidExponent { .. })));
    }

    #[test]
    fn ball_average_examples() {
        let z = analytic_ball_average(0.0, 0.0, &[0.3], 0.7, &q()).unwrap();
        assert!((z.value - 1.0).abs() < 1e-14 && z.envelope == 1.0);
        let s = analytic_ball_average(-0.5, 0.0, &[0.0], 1.0, &q()).unwrap();
        assert!((s.value - 2.0).abs() < 1e-5 && s.envelope == 1.0);
        assert!(matches!(analytic_ball_average(-1.0, 0.0, &[0.0], 1.0, &q()), Err(Error::Divergence(_))));
    }
}
