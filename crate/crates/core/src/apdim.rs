//! A_p-dimensions: growth of `W^{1/p}(x) W^{-1/p}(y)` between a cube and its
//! dilations, read off as slopes of `log2 a_i`.
//!
//! The supremum over all cubes is replaced by a sup over a [`BaseFamily`];
//! every value here is a lower bound for the quantity over all of `R^n`.

use crate::dyadic::{CubeWindow, Domain, DyadicCube, Region};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::reducing::{directions, reduce, Method, ReducingFamily};
use crate::weights::{check_p, dual_weight, MatrixWeight, QuadSpec, QuadratureRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Conjugate exponent, with `p' = inf` for `p <= 1`.
pub fn conjugate(p: f64) -> f64 {
    if p > 1.0 {
        p / (p - 1.0)
    } else {
        f64::INFINITY
    }
}

/// `(d, dtilde, Delta)` at order `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApDimensions {
    pub n: usize,
    pub p: f64,
    pub d: f64,
    pub dtilde: f64,
    pub delta: f64,
}

impl ApDimensions {
    /// Checked constructor: `0 <= d, dtilde < n`, `dtilde = 0` when `p <= 1`.
    pub fn new(n: usize, p: f64, d: f64, dtilde: f64) -> Result<Self> {
        check_p(p)?;
        let nf = n as f64;
        if !(0.0..nf).contains(&d) || !(0.0..nf).contains(&dtilde) {
            return Err(Error::Range(format!("dimensions ({d}, {dtilde}) outside [0, {n})")));
        }
        if p <= 1.0 && dtilde != 0.0 {
            return Err(Error::Range("dtilde must vanish for p <= 1".into()));
        }
        Ok(Self::raw(n, p, d, dtilde))
    }

    /// No range checks; used for envelope experiments with shifted exponents.
    pub fn raw(n: usize, p: f64, d: f64, dtilde: f64) -> Self {
        let dtilde = if p > 1.0 { dtilde } else { 0.0 };
        let delta = d / p + if p > 1.0 { dtilde / conjugate(p) } else { 0.0 };
        ApDimensions { n, p, d, dtilde, delta }
    }

    /// Same exponents with `Delta` replaced.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

/// Base cubes `Q` over which `a_i` takes its supremum; every `2^{i_max} Q`
/// lies in `domain`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseFamily {
    pub domain: Domain,
    pub i_max: u32,
    pub cubes: Vec<DyadicCube>,
}

/// Settings for [`estimate_dimensions`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimConfig {
    pub domain: Domain,
    pub j_min: i32,
    pub j_max: i32,
    pub i_max: u32,
    /// Stride-sampled cubes per level and axis (singular neighbourhoods are
    /// always added in full).
    pub per_axis: usize,
    #[serde(default)]
    pub quad: QuadSpec,
}

impl DimConfig {
    /// `[-512, 512)^n`, levels `0..=12`, `i_max = 8`.
    pub fn standard(n: usize) -> Self {
        DimConfig {
            domain: Domain::centered_box(n, 9),
            j_min: 0,
            j_max: 12,
            i_max: 8,
            per_axis: if n == 1 { 128 } else { 12 },
            quad: QuadSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        if self.j_min > self.j_max || self.j_min < self.domain.level {
            return Err(Error::Precondition(format!("levels {}..={} invalid", self.j_min, self.j_max)));
        }
        if self.i_max < 2 || self.per_axis == 0 {
            return Err(Error::Precondition("i_max must be at least 2 and per_axis positive".into()));
        }
        Ok(())
    }

    pub fn family(&self, singular: &[Vec<f64>]) -> Result<BaseFamily> {
        self.validate()?;
        base_family(&self.domain, self.j_min..=self.j_max, self.i_max, singular, self.per_axis)
    }
}

/// Window cubes whose `2^{i_max}` dilation stays in `domain`: a stride sample
/// of each level plus, around every singular point, the abutting cubes and
/// those at distances `2^t` cells along each axis.
pub fn base_family(
    domain: &Domain,
    levels: std::ops::RangeInclusive<i32>,
    i_max: u32,
    singular: &[Vec<f64>],
    per_axis: usize,
) -> Result<BaseFamily> {
    let n = domain.n();
    let region = domain.region();
    let half = 2f64.powi(i_max as i32 - 1);
    let mut set = BTreeSet::new();
    for j in levels {
        let side = 2f64.powi(-j);
        // Admissible k on each axis: (k + 1/2 -+ half) side within [lo, hi].
        let ranges: Vec<(i64, i64)> = (0..n)
            .map(|a| {
                let k0 = (region.lower[a] / side + half - 0.5).ceil() as i64;
                let k1 = (region.upper[a] / side - half - 0.5).floor() as i64;
                (k0, k1)
            })
            .collect();
        if ranges.iter().any(|(a, b)| a > b) {
            continue;
        }
        let mut axes: Vec<BTreeSet<i64>> = ranges
            .iter()
            .map(|&(k0, k1)| {
                let count = (k1 - k0 + 1) as usize;
                let stride = count.div_ceil(per_axis).max(1) as i64;
                let mut s: BTreeSet<i64> = (0..).map(|t| k0 + t * stride).take_while(|k| *k <= k1).collect();
                s.insert(k1);
                s
            })
            .collect();
        push_product(&axes, &mut vec![], j, &mut set);
        for x in singular {
            axes = ranges
                .iter()
                .enumerate()
                .map(|(a, &(k0, k1))| {
                    let ks = (x[a] / side).floor() as i64;
                    let mut s = BTreeSet::from([ks, ks - 1]);
                    let mut step = 1i64;
                    while step <= k1 - k0 {
                        s.insert(ks + step);
                        s.insert(ks - 1 - step);
                        step *= 2;
                    }
                    s.into_iter().filter(|k| (k0..=k1).contains(k)).collect()
                })
                .collect();
            push_product(&axes, &mut vec![], j, &mut set);
        }
    }
    if set.is_empty() {
        return Err(Error::Precondition(format!("no base cube fits 2^{i_max} dilations into the domain")));
    }
    Ok(BaseFamily { domain: domain.clone(), i_max, cubes: set.into_iter().collect() })
}

fn push_product(axes: &[BTreeSet<i64>], prefix: &mut Vec<i64>, j: i32, out: &mut BTreeSet<DyadicCube>) {
    if prefix.len() == axes.len() {
        out.insert(DyadicCube::new(j, prefix.clone()));
        return;
    }
    for &k in &axes[prefix.len()] {
        prefix.push(k);
        push_product(axes, prefix, j, out);
        prefix.pop();
    }
}

/// Which region is averaged in `x` and which in `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// `x` over `Q`, `y` over `2^i Q`: the sequence `a_i`.
    Lower,
    /// `x` over `2^i Q`, `y` over `Q` (`p > 1` only).
    Upper,
}

/// For `p <= 1`: `max_{y in Y} avg_X ||W^{1/p}(x) W^{-1/p}(y)||^p` (node max);
/// for `p > 1`: `avg_X [avg_Y ||W^{1/p}(x) W^{-1/p}(y)||^{p'}]^{p/p'}`.
pub fn cross_average(w: &MatrixWeight, p: f64, x_region: &Region, y_region: &Region, quad: &QuadSpec) -> Result<f64> {
    check_p(p)?;
    let sing = w.singular_points();
    let rx = QuadratureRule::build(x_region, &sing, quad);
    let ry = QuadratureRule::build(y_region, &sing, quad);
    if let Some(profile) = w.scalar_profile() {
        let wx: Vec<f64> = rx.points().map(|x| profile.eval(x)).collect();
        let avg = rx.average(&wx)?;
        let wy: Vec<f64> = ry.points().map(|y| profile.eval(y)).collect();
        if p > 1.0 {
            let dual: Vec<f64> = wy.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
            return Ok(avg * ry.average(&dual)?.powf(p - 1.0));
        }
        return Ok(avg * wy.iter().map(|v| 1.0 / v).fold(0.0, f64::max));
    }
    let xs: Vec<Matrix> = rx.points().map(|x| w.power_at(x, 1.0 / p)).collect();
    let ys: Vec<Matrix> = ry.points().map(|y| w.power_at(y, -1.0 / p)).collect();
    rx.check_integrable(&xs.iter().map(|a| a.op_norm().powf(p)).collect::<Vec<_>>())?;
    if p > 1.0 {
        let pp = conjugate(p);
        ry.check_integrable(&ys.iter().map(|b| b.op_norm().powf(pp)).collect::<Vec<_>>())?;
        let mut total = 0.0;
        for (a, wx) in xs.iter().zip(rx.weights()) {
            let inner: f64 = ys.iter().zip(ry.weights()).map(|(b, wy)| wy * (*a * *b).op_norm().powf(pp)).sum();
            total += wx * inner.powf(p / pp);
        }
        Ok(total)
    } else {
        Ok(ys
            .iter()
            .map(|b| xs.iter().zip(rx.weights()).map(|(a, wx)| wx * (*a * *b).op_norm().powf(p)).sum::<f64>())
            .fold(0.0, f64::max))
    }
}

/// `a_0, ..., a_{i_max}` with the cube attaining each supremum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ASequence {
    pub p: f64,
    pub kind: SequenceKind,
    pub values: Vec<f64>,
    pub argmax: Vec<DyadicCube>,
    pub cubes: usize,
    pub warning: Option<String>,
}

/// Largest `i <= i_max` with `2^i Q` inside the domain for every family cube.
fn usable_i_max(family: &BaseFamily) -> u32 {
    let region = family.domain.region();
    let mut i = family.i_max;
    while i > 0 {
        let fits = family.cubes.iter().all(|q| {
            let r = q.double(i).region();
            region.contains_region(&r)
        });
        if fits {
            break;
        }
        i -= 1;
    }
    i
}

/// `a_i = sup_Q cross_average(Q, 2^i Q)` (or the upper form with the regions
/// swapped) over the family.
pub fn a_sequence(w: &MatrixWeight, p: f64, family: &BaseFamily, kind: SequenceKind, quad: &QuadSpec) -> Result<ASequence> {
    check_p(p)?;
    if kind == SequenceKind::Upper && p <= 1.0 {
        return Err(Error::InvalidExponent { p, requirement: "the upper sequence needs p > 1" });
    }
    let i_max = usable_i_max(family);
    let warning = (i_max < family.i_max)
        .then(|| format!("i_max reduced from {} to {i_max} to stay inside the domain", family.i_max));
    let rows: Vec<Result<Vec<f64>>> = family
        .cubes
        .par_iter()
        .map(|q| {
            let base = q.to_cube().region();
            (0..=i_max)
                .map(|i| {
                    let big = q.double(i).region();
                    match kind {
                        SequenceKind::Lower => cross_average(w, p, &base, &big, quad),
                        SequenceKind::Upper => cross_average(w, p, &big, &base, quad),
                    }
                })
                .collect()
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut values = vec![f64::NEG_INFINITY; i_max as usize + 1];
    let mut argmax = vec![family.cubes[0].clone(); i_max as usize + 1];
    for (q, row) in family.cubes.iter().zip(&rows) {
        for (i, &v) in row.iter().enumerate() {
            if v > values[i] {
                values[i] = v;
                argmax[i] = q.clone();
            }
        }
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v <= 0.0) {
        return Err(Error::Integrability(vec![*bad]));
    }
    Ok(ASequence { p, kind, values, argmax, cubes: family.cubes.len(), warning })
}

/// Least-squares slope of `log2 a_i` over the tail `i in [ceil(I/2), I]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub a: Vec<f64>,
    pub window: (usize, usize),
    /// Raw tail slope.
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// Slope clamped to `[0, n)`.
    pub estimate: f64,
    /// Raw slope outside `[0, n)` by more than 0.05.
    pub flagged: bool,
}

pub fn tail_fit(a: &[f64], n: usize) -> DimensionEstimate {
    let i_max = a.len() - 1;
    let lo = i_max.div_ceil(2);
    let pts: Vec<(f64, f64)> = (lo..=i_max).map(|i| (i as f64, a[i].log2())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual_rms = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / k).sqrt();
    let nf = n as f64;
    let top = nf - 1e-9;
    DimensionEstimate {
        a: a.to_vec(),
        window: (lo, i_max),
        slope,
        intercept,
        residual_rms,
        estimate: slope.clamp(0.0, top),
        flagged: slope < -0.05 || slope > nf + 0.05,
    }
}

/// Everything [`estimate_dimensions`] measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub dims: ApDimensions,
    pub primary: DimensionEstimate,
    /// Estimate for the dual weight at order `p'` (`p > 1`).
    pub dual: Option<DimensionEstimate>,
    /// Slope of the upper sequence (`p > 1`), comparable with `(p - 1) dtilde`.
    pub upper: Option<DimensionEstimate>,
    pub warnings: Vec<String>,
}

/// `d` from the tail slope of `a_i`; for `p > 1` also `dtilde` from the dual
/// weight at order `p'` and the upper-sequence slope.
pub fn estimate_dimensions(w: &MatrixWeight, p: f64, config: &DimConfig) -> Result<DimensionReport> {
    check_p(p)?;
    let family = config.family(&w.singular_points())?;
    let mut warnings = Vec::new();
    let lower = a_sequence(w, p, &family, SequenceKind::Lower, &config.quad)?;
    warnings.extend(lower.warning.clone());
    let primary = tail_fit(&lower.values, w.n);
    let (dual, upper) = if p > 1.0 {
        let dw = dual_weight(w, p)?;
        let dfam = config.family(&dw.singular_points())?;
        let ds = a_sequence(&dw, conjugate(p), &dfam, SequenceKind::Lower, &config.quad)?;
        warnings.extend(ds.warning.clone());
        let us = a_sequence(w, p, &family, SequenceKind::Upper, &config.quad)?;
        (Some(tail_fit(&ds.values, w.n)), Some(tail_fit(&us.values, w.n)))
    } else {
        (None, None)
    };
    for (name, e) in [("d", Some(&primary)), ("dtilde", dual.as_ref())] {
        if let Some(e) = e {
            if e.flagged {
                warnings.push(format!("{name} slope {:.4} clamped to [0, {})", e.slope, w.n));
            }
        }
    }
    let dims = ApDimensions::raw(w.n, p, primary.estimate, dual.as_ref().map_or(0.0, |e| e.estimate));
    Ok(DimensionReport { dims, primary, dual, upper, warnings })
}

/// `sup_Q ||A_Q A_{2^i Q}^{-1}||^p` over the family, for comparison with `a_i`.
pub fn reducing_route(w: &MatrixWeight, p: f64, family: &BaseFamily, method: Method, quad: &QuadSpec) -> Result<Vec<f64>> {
    let i_max = usable_i_max(family);
    let rows: Vec<Result<Vec<f64>>> = family
        .cubes
        .par_iter()
        .map(|q| {
            let aq = reduce(w, p, &q.to_cube().region(), method, quad)?.matrix;
            (0..=i_max)
                .map(|i| {
                    let big = reduce(w, p, &q.double(i).region(), method, quad)?.matrix;
                    Ok((*aq.matrix() * big.inverse()).op_norm().powf(p))
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0f64; i_max as usize + 1];
    for row in rows {
        for (o, v) in out.iter_mut().zip(row?) {
            *o = o.max(v);
        }
    }
    Ok(out)
}

/// `max{(l_R/l_Q)^{d/p}, (l_Q/l_R)^{dtilde/p'}} (1 + |x_Q - x_R| / max(l_Q, l_R))^Delta`.
pub fn envelope(dims: &ApDimensions, q: &DyadicCube, r: &DyadicCube) -> f64 {
    let (lq, lr) = (q.side(), r.side());
    let scale = (lr / lq).powf(dims.d / dims.p).max(if dims.p > 1.0 {
        (lq / lr).powf(dims.dtilde / conjugate(dims.p))
    } else {
        0.0
    });
    let dist = q.corner().iter().zip(r.corner()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    scale * (1.0 + dist / lq.max(lr)).powf(dims.delta)
}

/// Largest `||A_Q A_R^{-1}|| / envelope(Q, R)` over all ordered pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub max_ratio: f64,
    pub witness: (DyadicCube, DyadicCube),
    pub pairs: usize,
}

pub fn growth_envelope_check(family: &ReducingFamily, dims: &ApDimensions) -> EnvelopeCheck {
    let cubes: Vec<(&DyadicCube, Matrix, Matrix)> =
        family.cubes.iter().map(|(q, r)| (q, *r.matrix.matrix(), r.matrix.inverse())).collect();
    let best: Vec<(f64, usize)> = cubes
        .par_iter()
        .map(|(q, a, _)| {
            cubes.iter().enumerate().fold((f64::NEG_INFINITY, 0), |acc, (k, (r, _, rinv))| {
                let v = (*a * *rinv).op_norm() / envelope(dims, q, r);
                if v > acc.0 {
                    (v, k)
                } else {
                    acc
                }
            })
        })
        .collect();
    let (mut max_ratio, mut witness) = (f64::NEG_INFINITY, (0, 0));
    for (i, (v, k)) in best.into_iter().enumerate() {
        if v > max_ratio {
            max_ratio = v;
            witness = (i, k);
        }
    }
    EnvelopeCheck {
        max_ratio,
        witness: (cubes[witness.0].0.clone(), cubes[witness.1].0.clone()),
        pairs: cubes.len() * cubes.len(),
    }
}

/// `beta = max log2(int_{2Q} |W^{1/p} z|^p / int_Q |W^{1/p} z|^p)` with the
/// cube attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub beta: f64,
    pub witness: DyadicCube,
    pub cubes: usize,
}

/// Doubling exponent over the window cubes whose double stays in the domain,
/// sampling `k` directions when `m > 1`.
pub fn doubling_exponent(w: &MatrixWeight, p: f64, window: &CubeWindow, k: usize, quad: &QuadSpec) -> Result<DoublingReport> {
    check_p(p)?;
    let region = window.domain.region();
    let cubes: Vec<DyadicCube> =
        window.cubes().into_iter().filter(|q| region.contains_region(&q.double(1).region())).collect();
    if cubes.is_empty() {
        return Err(Error::Precondition("no window cube has its double inside the domain".into()));
    }
    let dirs = if w.is_scalar() { directions(w.m, 1) } else { directions(w.m, k.max(1)) };
    let sing = w.singular_points();
    let scale = 2f64.powi(w.n as i32);
    let vals: Vec<Result<f64>> = cubes
        .par_iter()
        .map(|q| {
            let small = QuadratureRule::build(&q.to_cube().region(), &sing, quad);
            let big = QuadratureRule::build(&q.double(1).region(), &sing, quad);
            let ps: Vec<Matrix> = small.points().map(|x| w.power_at(x, 1.0 / p)).collect();
            let pb: Vec<Matrix> = big.points().map(|x| w.power_at(x, 1.0 / p)).collect();
            let mut worst = 0.0f64;
            for z in &dirs {
                let fs: Vec<f64> = ps.iter().map(|a| a.apply(z).norm().powf(p)).collect();
                let fb: Vec<f64> = pb.iter().map(|a| a.apply(z).norm().powf(p)).collect();
                worst = worst.max(scale * big.average(&fb)? / small.average(&fs)?);
            }
            Ok(worst.log2())
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, v) in vals.into_iter().enumerate() {
        let v = v?;
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok(DoublingReport { beta: best.0, witness: cubes[best.1].clone(), cubes: cubes.len() })
}

/// Per-exponent worst reverse Hölder ratio (`None` when divergent) and the
/// largest stable exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReverseHolder {
    pub ratios: Vec<(f64, Option<f64>)>,
    pub r_hat: Option<f64>,
    pub bound: f64,
}

/// `sup_{Q, M} (avg_Q ||W^{1/p} M||^{pr})^{1/r} / avg_Q ||W^{1/p} M||^p` for
/// `M` in `{I} + {z z^*}`; `r_hat` is the largest grid `r` such that it and
/// every smaller grid exponent stay below `bound`.
pub fn reverse_holder_probe(
    w: &MatrixWeight,
    p: f64,
    window: &CubeWindow,
    rs: &[f64],
    bound: f64,
    k: usize,
    quad: &QuadSpec,
) -> Result<ReverseHolder> {
    check_p(p)?;
    let mut tests = vec![Matrix::identity(w.m)];
    if w.m > 1 {
        tests.extend(directions(w.m, k.max(1)).iter().map(Matrix::outer));
    }
    let sing = w.singular_points();
    let cubes = window.cubes();
    let per_cube: Vec<Result<Vec<Option<f64>>>> = cubes
        .par_iter()
        .map(|q| {
            let rule = QuadratureRule::build(&q.to_cube().region(), &sing, quad);
            let roots: Vec<Matrix> = rule.points().map(|x| w.power_at(x, 1.0 / p)).collect();
            let mut worst = vec![Some(0.0f64); rs.len()];
            for m in &tests {
                let base: Vec<f64> = roots.iter().map(|a| (*a * *m).op_norm().powf(p)).collect();
                let denom = rule.average(&base)?;
                for (slot, &r) in worst.iter_mut().zip(rs) {
                    let powered: Vec<f64> = base.iter().map(|v| v.powf(r)).collect();
                    match rule.average(&powered) {
                        Ok(num) => {
                            if let Some(s) = slot.as_mut() {
                                *s = s.max(num.powf(1.0 / r) / denom);
                            }
                        }
                        Err(Error::Integrability(_)) => *slot = None,
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok(worst)
        })
        .collect();
    let mut ratios: Vec<(f64, Option<f64>)> = rs.iter().map(|&r| (r, Some(0.0))).collect();
    for row in per_cube {
        for (acc, v) in ratios.iter_mut().zip(row?) {
            acc.1 = match (acc.1, v) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
    }
    let r_hat = ratios.iter().take_while(|(_, v)| v.is_some_and(|x| x <= bound)).last().map(|(r, _)| *r);
    Ok(ReverseHolder { ratios, r_hat, bound })
}

/// Which convergence condition on the smoothness `M` of synthesis functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MCondition {
    /// Coefficients in the weighted `a^{s,tau}_{p,q}` scale:
    /// `M > max{n/p + dtilde/p' - (s + n tau), s + n tau - (n - d)/p, Delta}`.
    Weighted,
    /// Coefficients in the `p = inf` Triebel-Lizorkin scale:
    /// `M > max{d/p + s, dtilde/p' - s, Delta}`.
    Endpoint,
}

/// Least integer strictly above the applicable maximum.
pub fn admissible_m(s: f64, tau: f64, dims: &ApDimensions, condition: MCondition) -> i64 {
    let n = dims.n as f64;
    let p = dims.p;
    let dual = if p > 1.0 { dims.dtilde / conjugate(p) } else { 0.0 };
    let bound = match condition {
        MCondition::Weighted => (n / p + dual - (s + n * tau)).max(s + n * tau - (n - dims.d) / p).max(dims.delta),
        MCondition::Endpoint => (dims.d / p + s).max(dual - s).max(dims.delta),
    };
    bound.floor() as i64 + 1
}
