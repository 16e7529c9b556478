//! Averaging rules over boxes for integrands with point singularities.
//!
//! A box is cut along every coordinate of the nearby singular points, each
//! piece is split into `cells` Gauss cells per axis, and every cell that has a
//! singular point at a corner is refined geometrically toward it. The rule is
//! a positive linear functional: averages of pointwise ordered integrands are
//! ordered exactly as computed.

use crate::dyadic::Region;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Quadrature knobs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSpec {
    /// Gauss-Legendre points per axis in every cell.
    pub order: usize,
    /// Uniform cells per axis before grading.
    pub cells: usize,
    /// Levels of geometric refinement toward each singular point.
    pub depth: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { order: 6, cells: 4, depth: 36 }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.order) || self.cells == 0 || self.cells > 64 || self.depth > 60 {
            return Err(Error::Precondition(format!(
                "quadrature needs order in 1..=16, cells in 1..=64, depth <= 60; got {self:?}"
            )));
        }
        Ok(())
    }

    /// One notch finer in every knob, for refinement-stability checks.
    pub fn refined(&self) -> Self {
        QuadSpec { order: self.order + 2, cells: self.cells * 2, depth: self.depth + 8 }
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let table = CACHE.get_or_init(|| (0..=16).map(compute_gauss).collect());
    table[order].clone()
}

fn compute_gauss(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

const REGULAR: u32 = u32::MAX;

/// Nodes and normalized weights (summing to 1) for averages over a region.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    n: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    shell: Vec<u32>,
    anchors: Vec<Vec<f64>>,
    depth: usize,
}

impl QuadratureRule {
    /// Rule for averages over `region`, graded toward every point of
    /// `singular` that lies within one box-width of it.
    pub fn build(region: &Region, singular: &[Vec<f64>], spec: &QuadSpec) -> Self {
        let n = region.n();
        let widths: Vec<f64> = (0..n).map(|i| region.upper[i] - region.lower[i]).collect();
        let reach = widths.iter().cloned().fold(0.0, f64::max);
        let mut anchors: Vec<Vec<f64>> = Vec::new();
        for s in singular {
            let dist2: f64 = (0..n)
                .map(|i| {
                    let d = (region.lower[i] - s[i]).max(s[i] - region.upper[i]).max(0.0);
                    d * d
                })
                .sum();
            if dist2.sqrt() <= reach {
                let a: Vec<f64> = (0..n).map(|i| s[i].clamp(region.lower[i], region.upper[i])).collect();
                if !anchors.contains(&a) {
                    anchors.push(a);
                }
            }
        }
        // Breakpoints per axis: uniform cells plus anchor coordinates.
        let breaks: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut b: Vec<f64> = (0..=spec.cells)
                    .map(|k| region.lower[i] + widths[i] * k as f64 / spec.cells as f64)
                    .collect();
                *b.last_mut().unwrap() = region.upper[i];
                for a in &anchors {
                    if a[i] > region.lower[i] && a[i] < region.upper[i] {
                        b.push(a[i]);
                    }
                }
                b.sort_by(f64::total_cmp);
                b.dedup();
                // Drop slivers created next to anchor coordinates.
                let tiny = 1e-12 * widths[i];
                let mut kept: Vec<f64> = Vec::with_capacity(b.len());
                for x in b {
                    let is_anchor = anchors.iter().any(|a| a[i] == x);
                    match kept.last() {
                        Some(&last) if x - last < tiny => {
                            if is_anchor {
                                *kept.last_mut().unwrap() = x;
                            }
                        }
                        _ => kept.push(x),
                    }
                }
                *kept.first_mut().unwrap() = region.lower[i];
                *kept.last_mut().unwrap() = region.upper[i];
                kept
            })
            .collect();
        let mut rule = QuadratureRule {
            n,
            points: Vec::new(),
            weights: Vec::new(),
            shell: Vec::new(),
            anchors,
            depth: spec.depth,
        };
        let (gx, gw) = gauss_legendre(spec.order);
        let counts: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
        let total: usize = counts.iter().product();
        for flat in 0..total {
            let mut rem = flat;
            let mut lo = vec![0.0; n];
            let mut hi = vec![0.0; n];
            for d in (0..n).rev() {
                let k = rem % counts[d];
                rem /= counts[d];
                lo[d] = breaks[d][k];
                hi[d] = breaks[d][k + 1];
            }
            rule.add_piece(&lo, &hi, &gx, &gw, spec.depth);
        }
        let vol = region.volume();
        rule.weights.iter_mut().for_each(|w| *w /= vol);
        rule
    }

    fn corner_anchor(&self, lo: &[f64], hi: &[f64]) -> Option<(usize, Vec<bool>)> {
        for (ai, a) in self.anchors.iter().enumerate() {
            let mut at_hi = vec![false; self.n];
            let ok = (0..self.n).all(|d| {
                if a[d] == lo[d] {
                    true
                } else if a[d] == hi[d] {
                    at_hi[d] = true;
                    true
                } else {
                    false
                }
            });
            if ok {
                return Some((ai, at_hi));
            }
        }
        None
    }

    fn add_piece(&mut self, lo: &[f64], hi: &[f64], gx: &[f64], gw: &[f64], depth: usize) {
        match self.corner_anchor(lo, hi) {
            None => self.add_cell(lo, hi, gx, gw, REGULAR),
            Some((ai, at_hi)) => {
                let (mut clo, mut chi) = (lo.to_vec(), hi.to_vec());
                for level in 1..=depth {
                    // Split the cell touching the anchor into 2^n children.
                    let mid: Vec<f64> = (0..self.n).map(|d| 0.5 * (clo[d] + chi[d])).collect();
                    let mut next = None;
                    for bits in 0..(1usize << self.n) {
                        let mut l = vec![0.0; self.n];
                        let mut h = vec![0.0; self.n];
                        let mut touches = true;
                        for d in 0..self.n {
                            let upper_half = (bits >> d) & 1 == 1;
                            if upper_half {
                                l[d] = mid[d];
                                h[d] = chi[d];
                            } else {
                                l[d] = clo[d];
                                h[d] = mid[d];
                            }
                            touches &= upper_half == at_hi[d];
                        }
                        if touches {
                            next = Some((l, h));
                        } else {
                            let tag = (ai * (depth + 1) + level) as u32;
                            self.add_cell(&l, &h, gx, gw, tag);
                        }
                    }
                    let (l, h) = next.expect("one child touches the anchor");
                    clo = l;
                    chi = h;
                }
                let tag = (ai * (depth + 1)) as u32;
                self.add_cell(&clo, &chi, gx, gw, tag);
            }
        }
    }

    fn add_cell(&mut self, lo: &[f64], hi: &[f64], gx: &[f64], gw: &[f64], tag: u32) {
        let q = gx.len();
        let vol: f64 = (0..self.n).map(|d| hi[d] - lo[d]).product();
        let total = q.pow(self.n as u32);
        for flat in 0..total {
            let mut rem = flat;
            let mut w = vol;
            let start = self.points.len();
            self.points.resize(start + self.n, 0.0);
            for d in (0..self.n).rev() {
                let k = rem % q;
                rem /= q;
                self.points[start + d] = lo[d] + (hi[d] - lo[d]) * gx[k];
                w *= gw[k];
            }
            self.weights.push(w);
            self.shell.push(tag);
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.n)
    }

    /// Normalized weights; they sum to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Plain weighted sum, no divergence check.
    pub fn average_unchecked(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Weighted average of nonnegative node values, refusing integrands
    /// whose contributions fail to shrink toward a singular point.
    pub fn average(&self, values: &[f64]) -> Result<f64> {
        self.check_integrable(values)?;
        Ok(self.average_unchecked(values))
    }

    /// Compares the two innermost refinement shells around each anchor; a
    /// shell ratio near or above 1 means the integral diverges there.
    pub fn check_integrable(&self, values: &[f64]) -> Result<()> {
        if values.iter().any(|v| !v.is_finite()) {
            let at = values.iter().position(|v| !v.is_finite()).unwrap();
            return Err(Error::Integrability(self.point(at).to_vec()));
        }
        if self.anchors.is_empty() || self.depth < 4 {
            return Ok(());
        }
        let stride = self.depth + 1;
        let mut shells = vec![0.0; self.anchors.len() * stride];
        for ((&tag, w), v) in self.shell.iter().zip(&self.weights).zip(values) {
            if tag != REGULAR {
                shells[tag as usize] += w * v.abs();
            }
        }
        let total: f64 = self.weights.iter().zip(values).map(|(w, v)| w * v.abs()).sum();
        for (ai, a) in self.anchors.iter().enumerate() {
            let last = shells[ai * stride + self.depth];
            let prev = shells[ai * stride + self.depth - 1];
            if last > 1e-300 && prev > 0.0 && last / prev >= 0.999 && last > 1e-12 * total {
                return Err(Error::Integrability(a.clone()));
            }
        }
        Ok(())
    }

    /// Largest node value (an under-estimate of the essential supremum).
    pub fn node_max(&self, values: &[f64]) -> (f64, usize) {
        values
            .iter()
            .enumerate()
            .fold((f64::NEG_INFINITY, 0), |(m, at), (i, &v)| if v > m { (v, i) } else { (m, at) })
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(a: f64, b: f64) -> Region {
        Region { lower: vec![a], upper: vec![b] }
    }

    #[test]
    fn gauss_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        for k in 0..12 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((s - 1.0 / (k + 1) as f64).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let r = Region { lower: vec![-0.5, 0.0], upper: vec![0.5, 0.25] };
        let rule = QuadratureRule::build(&r, &[vec![0.0, 0.0]], &QuadSpec::default());
        let s: f64 = rule.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-13);
        assert!(rule.points().all(|p| p != [0.0, 0.0]));
    }

    #[test]
    fn inverse_square_root_at_corner() {
        let rule = QuadratureRule::build(&interval(0.0, 1.0), &[vec![0.0]], &QuadSpec::default());
        let vals: Vec<f64> = rule.points().map(|x| x[0].powf(-0.5)).collect();
        let avg = rule.average(&vals).unwrap();
        assert!((avg - 2.0).abs() < 1e-5, "{avg}");
    }

    #[test]
    fn interior_singularity_in_two_dimensions() {
        // avg over [-1,1]^2 of |x|^{-1}: 4 * int_0^1 int_0^1 (x^2+y^2)^{-1/2} / 4
        let r = Region { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] };
        let rule = QuadratureRule::build(&r, &[vec![0.0, 0.0]], &QuadSpec::default());
        let vals: Vec<f64> = rule.points().map(|x| (x[0] * x[0] + x[1] * x[1]).powf(-0.5)).collect();
        let exact = 2.0 * (1.0 + 2f64.sqrt()).ln();
        let avg = rule.average(&vals).unwrap();
        assert!((avg - exact).abs() < 1e-5 * exact, "{avg} vs {exact}");
    }

    #[test]
    fn divergent_integrand_is_flagged() {
        let rule = QuadratureRule::build(&interval(-0.5, 0.5), &[vec![0.0]], &QuadSpec::default());
        let vals: Vec<f64> = rule.points().map(|x| x[0].abs().powf(-1.0)).collect();
        assert!(matches!(rule.average(&vals), Err(Error::Integrability(_))));
        let ok: Vec<f64> = rule.points().map(|x| x[0].abs().powf(-0.9)).collect();
        assert!(rule.average(&ok).is_ok());
    }

    #[test]
    fn nearby_outside_point_is_graded() {
        // Singularity just left of the box.
        let rule = QuadratureRule::build(&interval(1e-6, 1.0), &[vec![0.0]], &QuadSpec::default());
        let vals: Vec<f64> = rule.points().map(|x| x[0].powf(-0.5)).collect();
        let exact = 2.0 * (1.0 - 1e-3) / (1.0 - 1e-6);
        assert!((rule.average(&vals).unwrap() - exact).abs() < 1e-6);
    }
}
