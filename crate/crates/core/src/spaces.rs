//! Besov-type and Triebel-Lizorkin-type norms on finite windows.
//!
//! Everything reduces to one engine, [`la_tau_norm`], acting on per-level
//! nonnegative fields sampled on a common grid: for a cube `P` of the window
//! the B-kind takes `l^q` over `j >= j_P` of `L^p(P)` norms, the F-kind takes
//! the `L^p(P)` norm of the pointwise `l^q` sum, and the result is the
//! supremum of `|P|^{-tau}` times that.

use crate::dyadic::{CubeWindow, DyadicCube, Grid};
use crate::error::{Error, Result};
use crate::linalg::{gaussian, Matrix, Vector, C64};
use crate::reducing::ReducingFamily;
use crate::weights::MatrixWeight;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

/// Serde for exponents that may be infinite (written as `"inf"`).
pub mod exponent {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_infinite() && *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("not an exponent: {t}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    B,
    F,
}

/// The mixed-norm part of a space: everything except the smoothness `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mixed {
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    pub tau: f64,
    pub kind: Kind,
}

/// `(s, tau, p, q)` and the kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceParams {
    pub s: f64,
    pub tau: f64,
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    pub kind: Kind,
}

impl SpaceParams {
    pub fn new(s: f64, tau: f64, p: f64, q: f64, kind: Kind) -> Result<Self> {
        let sp = SpaceParams { s, tau, p, q, kind };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(Error::Range("s must be finite".into()));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::Range(format!("tau = {} must be a finite nonnegative number", self.tau)));
        }
        if !(self.p > 0.0) {
            return Err(Error::InvalidExponent { p: self.p, requirement: "p must be positive" });
        }
        if !(self.q > 0.0) {
            return Err(Error::InvalidExponent { p: self.q, requirement: "q must be positive" });
        }
        if self.kind == Kind::F && self.p.is_infinite() {
            return Err(Error::InvalidVariant("F-kind with p = inf goes through finfty_norm".into()));
        }
        Ok(())
    }

    pub fn mixed(&self) -> Mixed {
        Mixed { p: self.p, q: self.q, tau: self.tau, kind: self.kind }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_kind(mut self, kind: Kind) -> Self {
        self.kind = kind;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

pub fn classify(params: &SpaceParams) -> Criticality {
    let inv = 1.0 / params.p;
    if params.tau > inv || (params.tau == inv && params.q.is_infinite()) {
        Criticality::Supercritical
    } else if params.tau == inv && params.kind == Kind::F {
        Criticality::Critical
    } else {
        Criticality::Subcritical
    }
}

/// Nonnegative per-level fields on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFields {
    pub grid: Grid,
    pub levels: BTreeMap<i32, Vec<f64>>,
}

impl LevelFields {
    pub fn new(grid: Grid) -> Self {
        LevelFields { grid, levels: BTreeMap::new() }
    }

    pub fn insert(&mut self, j: i32, values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.len() {
            return Err(Error::Precondition(format!("level {j}: {} values for {} nodes", values.len(), self.grid.len())));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Precondition(format!("level {j}: fields must be finite and nonnegative")));
        }
        self.levels.insert(j, values);
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        LevelFields {
            grid: self.grid.clone(),
            levels: self.levels.iter().map(|(j, v)| (*j, v.iter().map(|x| x * c.abs()).collect())).collect(),
        }
    }
}

/// A windowed supremum and the cube attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub argmax: Option<DyadicCube>,
}

/// `x^e` for `x >= 0` with `0^e = 0` and `x^1 = x` exactly.
fn pw(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if x == 0.0 {
        0.0
    } else {
        x.powf(e)
    }
}

/// Per-`P` values of one window level, before the `|P|^{-tau}` factor.
fn level_values(fields: &LevelFields, mix: &Mixed, jp: i32) -> Result<(Vec<DyadicCube>, Vec<f64>)> {
    let grid = &fields.grid;
    let owner = grid.cube_of_nodes(jp)?;
    let cubes = grid.domain.cubes_at(jp)?;
    let vol = grid.spacing().powi(grid.n() as i32);
    let js: Vec<&Vec<f64>> = fields.levels.range(jp..).map(|(_, v)| v).collect();
    let np = cubes.len();
    let (p, q) = (mix.p, mix.q);
    let out = match mix.kind {
        Kind::B => {
            let mut acc = vec![0.0f64; np];
            for f in &js {
                let mut s = vec![0.0f64; np];
                for (node, &v) in f.iter().enumerate() {
                    let o = owner[node];
                    if p.is_infinite() {
                        s[o] = s[o].max(v);
                    } else {
                        s[o] += pw(v, p);
                    }
                }
                for (a, sj) in acc.iter_mut().zip(s) {
                    let nj = if p.is_infinite() { sj } else { pw(vol * sj, 1.0 / p) };
                    if q.is_infinite() {
                        *a = a.max(nj);
                    } else {
                        *a += pw(nj, q);
                    }
                }
            }
            if q.is_finite() {
                acc.iter_mut().for_each(|a| *a = pw(*a, 1.0 / q));
            }
            acc
        }
        Kind::F => {
            if p.is_infinite() {
                return Err(Error::InvalidVariant("F-kind with p = inf goes through finfty_norm".into()));
            }
            let mut s = vec![0.0f64; np];
            for node in 0..grid.len() {
                let g = pointwise(&js, node, q);
                // For q = inf the l^q "sum" is the max, raised to p below.
                let e = if q.is_infinite() { p } else { p / q };
                s[owner[node]] += pw(g, e);
            }
            s.into_iter().map(|x| pw(vol * x, 1.0 / p)).collect()
        }
    };
    Ok((cubes, out))
}

/// `sum_j f_j(x)^q` (or `max_j f_j(x)` when `q = inf`).
fn pointwise(js: &[&Vec<f64>], node: usize, q: f64) -> f64 {
    if q.is_infinite() {
        js.iter().map(|f| f[node]).fold(0.0, f64::max)
    } else {
        js.iter().map(|f| pw(f[node], q)).sum()
    }
}

fn check_window(fields: &LevelFields, window: &CubeWindow) -> Result<()> {
    if fields.grid.domain != window.domain {
        return Err(Error::Precondition("fields and window live on different domains".into()));
    }
    if window.j_max > fields.grid.level {
        return Err(Error::Resolution(format!("window level {} finer than the grid", window.j_max)));
    }
    Ok(())
}

fn sup_over_levels(
    window: &CubeWindow,
    per_level: impl Fn(i32) -> Result<(Vec<DyadicCube>, Vec<f64>)> + Sync,
) -> Result<NormValue> {
    let levels: Vec<i32> = window.levels().collect();
    let rows: Vec<Result<(Vec<DyadicCube>, Vec<f64>)>> = levels.par_iter().map(|&j| per_level(j)).collect();
    let mut best = NormValue { value: 0.0, argmax: None };
    for row in rows {
        let (cubes, vals) = row?;
        for (c, v) in cubes.into_iter().zip(vals) {
            if v > best.value {
                best = NormValue { value: v, argmax: Some(c) };
            }
        }
    }
    Ok(best)
}

/// `sup_P |P|^{-tau} ||{f_j}_{j >= j_P}||_{LA_{pq}(P)}` over the window cubes.
pub fn la_tau_norm(fields: &LevelFields, mix: &Mixed, window: &CubeWindow) -> Result<NormValue> {
    check_window(fields, window)?;
    let n = fields.grid.n() as f64;
    sup_over_levels(window, |jp| {
        let (cubes, vals) = level_values(fields, mix, jp)?;
        let scale = (jp as f64 * n * mix.tau).exp2();
        Ok((cubes, vals.into_iter().map(|v| scale * v).collect()))
    })
}

/// `sup_P [avg_P sum_{j >= j_P} f_j^q]^{1/q}`, and `sup_P sup_{j >= j_P} sup_P f_j`
/// for `q = inf`.
pub fn finfty_norm(fields: &LevelFields, q: f64, window: &CubeWindow) -> Result<NormValue> {
    check_window(fields, window)?;
    if !(q > 0.0) {
        return Err(Error::InvalidExponent { p: q, requirement: "q must be positive" });
    }
    let grid = &fields.grid;
    let n = grid.n() as f64;
    let vol = grid.spacing().powi(grid.n() as i32);
    sup_over_levels(window, |jp| {
        let owner = grid.cube_of_nodes(jp)?;
        let cubes = grid.domain.cubes_at(jp)?;
        let js: Vec<&Vec<f64>> = fields.levels.range(jp..).map(|(_, v)| v).collect();
        let mut s = vec![0.0f64; cubes.len()];
        for node in 0..grid.len() {
            let g = pointwise(&js, node, q);
            if q.is_infinite() {
                s[owner[node]] = s[owner[node]].max(g);
            } else {
                s[owner[node]] += g;
            }
        }
        if q.is_infinite() {
            return Ok((cubes, s));
        }
        // |P|^{-1/q} (int_P g)^{1/q}, the average written with the volume
        // factor outside the root.
        let scale = (jp as f64 * n * (1.0 / q)).exp2();
        Ok((cubes, s.into_iter().map(|x| scale * pw(vol * x, 1.0 / q)).collect()))
    })
}

/// Finitely supported `C^m`-valued coefficients on window cubes.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    pub window: CubeWindow,
    pub m: usize,
    pub values: BTreeMap<DyadicCube, Vec<C64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldRecord {
    window: CubeWindow,
    m: usize,
    values: BTreeMap<String, Vec<[f64; 2]>>,
}

impl CoefficientField {
    pub fn zeros(window: CubeWindow, m: usize) -> Self {
        CoefficientField { window, m, values: BTreeMap::new() }
    }

    pub fn set(&mut self, q: DyadicCube, v: Vec<C64>) -> Result<()> {
        if !self.window.contains(&q) {
            return Err(Error::Coverage(q.to_string()));
        }
        if v.len() != self.m {
            return Err(Error::Dimension(v.len()));
        }
        self.values.insert(q, v);
        Ok(())
    }

    pub fn get(&self, q: &DyadicCube) -> Option<&[C64]> {
        self.values.get(q).map(|v| v.as_slice())
    }

    /// Independent complex Gaussian entries on every window cube.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, window: &CubeWindow, m: usize) -> Self {
        let values = window
            .cubes()
            .into_iter()
            .map(|q| (q, (0..m).map(|_| C64::new(gaussian(rng), gaussian(rng))).collect()))
            .collect();
        CoefficientField { window: window.clone(), m, values }
    }

    pub fn from_scalars(window: &CubeWindow, t: &BTreeMap<DyadicCube, f64>) -> Self {
        let values = t.iter().map(|(q, v)| (q.clone(), vec![C64::new(*v, 0.0)])).collect();
        CoefficientField { window: window.clone(), m: 1, values }
    }

    /// `|t_Q|` per cube.
    pub fn magnitudes(&self) -> BTreeMap<DyadicCube, f64> {
        self.values.iter().map(|(q, v)| (q.clone(), Vector::from_slice(v).norm())).collect()
    }

    pub fn map(&self, f: impl Fn(&DyadicCube, &[C64]) -> Vec<C64>) -> Self {
        CoefficientField {
            window: self.window.clone(),
            m: self.m,
            values: self.values.iter().map(|(q, v)| (q.clone(), f(q, v))).collect(),
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        self.map(|_, v| v.iter().map(|z| z * c).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.m != other.m || self.window != other.window {
            return Err(Error::Precondition("fields differ in window or dimension".into()));
        }
        let mut out = self.clone();
        for (q, v) in &other.values {
            let e = out.values.entry(q.clone()).or_insert_with(|| vec![C64::new(0.0, 0.0); self.m]);
            e.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let rec = FieldRecord {
            window: self.window.clone(),
            m: self.m,
            values: self.values.iter().map(|(q, v)| (q.to_string(), v.iter().map(|z| [z.re, z.im]).collect())).collect(),
        };
        Ok(serde_json::to_string(&rec)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: FieldRecord = serde_json::from_str(s)?;
        let mut out = CoefficientField::zeros(rec.window, rec.m);
        for (k, v) in rec.values {
            out.set(k.parse()?, v.into_iter().map(|[a, b]| C64::new(a, b)).collect())?;
        }
        Ok(out)
    }
}

/// How `t_j` is measured pointwise.
#[derive(Clone, Copy, Debug)]
pub enum Weighting<'a> {
    /// `|t_j(x)|`.
    Unweighted,
    /// `|W^{1/p}(x) t_j(x)|` with the space's `p`.
    Weight(&'a MatrixWeight),
    /// `|A_j t_j(x)|`.
    Family(&'a ReducingFamily),
}

/// Which part of each cube carries `t_Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// `1_Q`.
    Full,
    /// `1_{E_Q}` with `E_Q` the half of `Q` below its center in the first axis.
    LeftHalf,
}

/// `f_j(x) = 2^{js} |B(x) t_j(x)|` with `t_j = sum_Q t_Q |Q|^{-1/2} 1_Q`,
/// sampled at the cell midpoints of a level-`grid_level` grid.
pub fn seq_fields(
    t: &CoefficientField,
    s: f64,
    p: f64,
    weighting: Weighting,
    grid_level: i32,
    selection: Selection,
) -> Result<LevelFields> {
    let window = &t.window;
    let min_level = window.j_max + i32::from(selection == Selection::LeftHalf);
    if grid_level < min_level {
        return Err(Error::Resolution(format!("grid level {grid_level} below {min_level}")));
    }
    let grid = Grid::new(window.domain.clone(), grid_level, 0.5)?;
    let points = grid.points();
    let roots: Option<Vec<Matrix>> = match weighting {
        Weighting::Weight(w) => {
            if w.m != t.m || w.n != window.n() {
                return Err(Error::Dimension(w.m));
            }
            Some(points.par_iter().map(|x| w.power_at(x, 1.0 / p)).collect())
        }
        _ => None,
    };
    if let Weighting::Family(f) = weighting {
        if f.m != t.m {
            return Err(Error::Dimension(f.m));
        }
    }
    let mut fields = LevelFields::new(grid.clone());
    for j in window.levels() {
        let cubes = window.domain.cubes_at(j)?;
        let owner = grid.cube_of_nodes(j)?;
        let side = (-(j as f64)).exp2();
        let amp = (j as f64 * s).exp2() * (j as f64 * window.n() as f64 / 2.0).exp2();
        let zero = vec![C64::new(0.0, 0.0); t.m];
        let vecs: Vec<Vector> = cubes
            .iter()
            .map(|q| {
                let v = Vector::from_slice(t.get(q).unwrap_or(&zero));
                Ok(match weighting {
                    Weighting::Family(f) => f.get(q)?.matrix().apply(&v),
                    _ => v,
                })
            })
            .collect::<Result<_>>()?;
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|node| {
                let q = owner[node];
                if selection == Selection::LeftHalf {
                    let c = cubes[q].corner()[0] + 0.5 * side;
                    if points[node][0] >= c {
                        return 0.0;
                    }
                }
                let v = &vecs[q];
                let len = match &roots {
                    Some(r) => r[node].apply(v).norm(),
                    None => v.norm(),
                };
                amp * len
            })
            .collect();
        fields.insert(j, values)?;
    }
    Ok(fields)
}

/// Grid level used for sequence norms when the caller does not choose one.
pub fn default_grid_level(window: &CubeWindow) -> i32 {
    window.j_max + 2
}

/// Sequence norm of `t` in the `a^{s,tau}_{p,q}` scale under a weighting.
pub fn seq_norm(t: &CoefficientField, params: &SpaceParams, weighting: Weighting, grid_level: i32) -> Result<NormValue> {
    params.validate()?;
    let f = seq_fields(t, params.s, params.p, weighting, grid_level, Selection::Full)?;
    la_tau_norm(&f, &params.mixed(), &t.window)
}

/// `f^s_{inf,q}` norm of `t` under a weighting.
pub fn finfty_seq(t: &CoefficientField, s: f64, q: f64, weighting: Weighting, grid_level: i32) -> Result<NormValue> {
    if let Weighting::Weight(_) = weighting {
        return Err(Error::InvalidVariant("the p = inf scale is defined with reducing operators".into()));
    }
    let f = seq_fields(t, s, 1.0, weighting, grid_level, Selection::Full)?;
    finfty_norm(&f, q, &t.window)
}

/// `(t*_{r,lambda})_Q = [sum_{l(R) = l(Q)} |t_R|^r / (1 + |x_R - x_Q| / l)^lambda]^{1/r}`
/// over the cubes present in `t`; also returns a warning when `lambda <= n`.
pub fn maximal_sequence(
    t: &BTreeMap<DyadicCube, f64>,
    r: f64,
    lambda: f64,
) -> Result<(BTreeMap<DyadicCube, f64>, Option<String>)> {
    if !(r > 0.0) {
        return Err(Error::InvalidExponent { p: r, requirement: "r must be positive" });
    }
    let n = t.keys().next().map_or(1, |q| q.n());
    let warning = (lambda <= n as f64).then(|| format!("lambda = {lambda} does not exceed n = {n}"));
    let mut by_level: BTreeMap<i32, Vec<(&DyadicCube, f64)>> = BTreeMap::new();
    for (q, v) in t {
        by_level.entry(q.level).or_default().push((q, v.abs()));
    }
    let mut out = BTreeMap::new();
    for cubes in by_level.values() {
        let vals: Vec<f64> = cubes
            .par_iter()
            .map(|(q, _)| {
                let side = q.side();
                let xq = q.corner();
                let mut acc = 0.0f64;
                for (rr, v) in cubes {
                    let d = rr.corner().iter().zip(&xq).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    let decay = (1.0 + d / side).powf(-lambda);
                    if r.is_infinite() {
                        acc = acc.max(v * decay);
                    } else {
                        acc += pw(*v, r) * decay;
                    }
                }
                if r.is_infinite() {
                    acc
                } else {
                    pw(acc, 1.0 / r)
                }
            })
            .collect();
        for ((q, _), v) in cubes.iter().zip(vals) {
            out.insert((*q).clone(), v);
        }
    }
    Ok((out, warning))
}

/// Outcome of one identity or inequality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: Option<bool>,
    pub lhs: f64,
    pub rhs: f64,
    pub detail: String,
}

impl Check {
    fn skipped(name: &str, reason: &str) -> Self {
        Check { name: name.into(), passed: None, lhs: f64::NAN, rhs: f64::NAN, detail: reason.into() }
    }
}

/// Relative slack allowed for rounding in inequality checks.
pub const ROUNDING: f64 = 1e-12;

/// The exact relations between the norms of `t` that hold for the given
/// parameters (checks outside their regime are reported as skipped).
pub fn identity_checks(t: &CoefficientField, params: &SpaceParams, family: &ReducingFamily, grid_level: i32) -> Result<Vec<Check>> {
    params.validate()?;
    let wt = Weighting::Family(family);
    let fields = seq_fields(t, params.s, params.p, wt, grid_level, Selection::Full)?;
    let win = &t.window;
    let at = |q: f64, kind: Kind| la_tau_norm(&fields, &Mixed { q, kind, ..params.mixed() }, win).map(|v| v.value);
    let mut out = Vec::new();
    // Embedding chain b_{p, p v q} <= f_{p,q} <= b_{p, p ^ q}.
    if params.p.is_finite() {
        let f = at(params.q, Kind::F)?;
        let lo = at(params.p.max(params.q), Kind::B)?;
        let hi = at(params.p.min(params.q), Kind::B)?;
        out.push(Check {
            name: "embedding chain".into(),
            passed: Some(lo <= f * (1.0 + ROUNDING) && f <= hi * (1.0 + ROUNDING)),
            lhs: lo,
            rhs: hi,
            detail: format!("B(p v q) = {lo:e} <= F = {f:e} <= B(p ^ q) = {hi:e}"),
        });
    } else {
        out.push(Check::skipped("embedding chain", "p = inf"));
    }
    let inv = 1.0 / params.p;
    let shifted = params.s + win.n() as f64 * (params.tau - inv);
    let sup_fields = seq_fields(t, shifted, params.p, wt, grid_level, Selection::Full)?;
    let top = finfty_norm(&sup_fields, f64::INFINITY, win)?.value;
    let value = la_tau_norm(&fields, &params.mixed(), win)?.value;
    if params.tau == inv && params.q.is_infinite() {
        let err = (value - top).abs() / top.max(f64::MIN_POSITIVE);
        out.push(Check {
            name: "supercritical equality".into(),
            passed: Some(err <= ROUNDING),
            lhs: value,
            rhs: top,
            detail: format!("relative difference {err:e}"),
        });
    } else {
        out.push(Check::skipped("supercritical equality", "needs (tau, q) = (1/p, inf)"));
    }
    if params.tau > inv && params.p.is_finite() {
        let c = if params.q.is_infinite() {
            1.0
        } else {
            let ratio = (-(win.n() as f64) * params.q * (params.tau - inv)).exp2();
            (1.0 / (1.0 - ratio)).powf(1.0 / params.q)
        };
        out.push(Check {
            name: "supercritical two-sided bound".into(),
            passed: Some(top <= value * (1.0 + ROUNDING) && value <= c * top * (1.0 + ROUNDING)),
            lhs: value / top,
            rhs: c,
            detail: format!("1 <= {:.6} <= {c:.6}", value / top),
        });
    } else {
        out.push(Check::skipped("supercritical two-sided bound", "needs tau > 1/p"));
    }
    let b_inf = la_tau_norm(&fields, &Mixed { p: f64::INFINITY, q: f64::INFINITY, tau: 0.0, kind: Kind::B }, win)?.value;
    let f_inf = finfty_norm(&fields, f64::INFINITY, win)?.value;
    out.push(Check {
        name: "p = q = inf coincidence".into(),
        passed: Some(b_inf == f_inf),
        lhs: b_inf,
        rhs: f_inf,
        detail: String::new(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Domain;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn window() -> CubeWindow {
        CubeWindow::new(Domain::unit(1), 0, 4).unwrap()
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn classification() {
        let c = |p, tau, q, kind| classify(&SpaceParams::new(0.0, tau, p, q, kind).unwrap());
        assert_eq!(c(2.0, 1.0, 2.0, Kind::F), Criticality::Supercritical);
        assert_eq!(c(2.0, 0.5, 3.0, Kind::F), Criticality::Critical);
        assert_eq!(c(2.0, 0.5, 3.0, Kind::B), Criticality::Subcritical);
        assert_eq!(c(2.0, 0.0, 2.0, Kind::B), Criticality::Subcritical);
        assert_eq!(c(2.0, 0.5, f64::INFINITY, Kind::B), Criticality::Supercritical);
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(SpaceParams::new(0.0, -0.1, 2.0, 2.0, Kind::B).is_err());
        assert!(SpaceParams::new(0.0, 0.0, -1.0, 2.0, Kind::B).is_err());
        assert!(SpaceParams::new(0.0, 0.0, f64::INFINITY, 2.0, Kind::F).is_err());
        let sp = SpaceParams::new(0.5, 0.0, f64::INFINITY, f64::INFINITY, Kind::B).unwrap();
        let json = serde_json::to_string(&sp).unwrap();
        assert!(json.contains("\"inf\""));
        assert_eq!(serde_json::from_str::<SpaceParams>(&json).unwrap(), sp);
    }

    #[test]
    fn zero_and_unit_fields() {
        let win = window();
        let grid = Grid::new(Domain::unit(1), 6, 0.5).unwrap();
        let mut f = LevelFields::new(grid.clone());
        f.insert(0, vec![0.0; grid.len()]).unwrap();
        let mix = Mixed { p: 2.0, q: 3.0, tau: 0.0, kind: Kind::F };
        assert_eq!(la_tau_norm(&f, &mix, &win).unwrap().value, 0.0);
        f.insert(0, vec![1.0; grid.len()]).unwrap();
        for kind in [Kind::B, Kind::F] {
            for (p, q) in [(0.5, 3.0), (2.0, 1.0), (4.0, f64::INFINITY)] {
                let v = la_tau_norm(&f, &Mixed { p, q, tau: 0.0, kind }, &win).unwrap();
                assert!((v.value - 1.0).abs() < 1e-14, "{kind:?} {p} {q}");
            }
        }
    }

    #[test]
    fn single_atom_closed_form() {
        let win = window();
        let q0 = DyadicCube::new(3, vec![5]);
        let mut t = CoefficientField::zeros(win.clone(), 1);
        t.set(q0.clone(), vec![one()]).unwrap();
        for kind in [Kind::B, Kind::F] {
            for (s, tau, p, q) in [(0.5, 0.3, 2.0, 2.0), (-1.0, 0.7, 1.0, 0.5), (0.0, 0.2, 3.0, f64::INFINITY)] {
                let sp = SpaceParams::new(s, tau, p, q, kind).unwrap();
                let v = seq_norm(&t, &sp, Weighting::Unweighted, 6).unwrap();
                let expect = (3.0 * s).exp2() * q0.volume().powf(1.0 / p - 0.5 - tau);
                assert!((v.value - expect).abs() < 1e-12 * expect, "{kind:?}: {} vs {expect}", v.value);
                assert_eq!(v.argmax, Some(q0.clone()));
            }
        }
    }

    #[test]
    fn finfty_single_atom() {
        let win = window();
        let q0 = DyadicCube::new(2, vec![1]);
        let mut t = CoefficientField::zeros(win.clone(), 1);
        t.set(q0.clone(), vec![C64::new(0.0, -3.0)]).unwrap();
        let v = finfty_seq(&t, 0.25, f64::INFINITY, Weighting::Unweighted, 6).unwrap();
        let expect = (2.0 * (0.25 + 0.5f64)).exp2() * 3.0;
        assert!((v.value - expect).abs() < 1e-13 * expect);
    }

    #[test]
    fn finfty_is_the_critical_f_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let win = window();
        for q in [0.5, 1.0, 2.0, 3.0, 4.0] {
            let t = CoefficientField::random(&mut rng, &win, 1);
            let fields = seq_fields(&t, 0.3, 1.0, Weighting::Unweighted, 6, Selection::Full).unwrap();
            let a = finfty_norm(&fields, q, &win).unwrap().value;
            let b = la_tau_norm(&fields, &Mixed { p: q, q, tau: 1.0 / q, kind: Kind::F }, &win).unwrap().value;
            assert_eq!(a, b, "q={q}");
        }
    }

    #[test]
    fn b_equals_f_when_p_equals_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let win = window();
        let t = CoefficientField::random(&mut rng, &win, 2);
        for p in [0.7, 2.0] {
            let b = seq_norm(&t, &SpaceParams::new(0.2, 0.1, p, p, Kind::B).unwrap(), Weighting::Unweighted, 6).unwrap();
            let f = seq_norm(&t, &SpaceParams::new(0.2, 0.1, p, p, Kind::F).unwrap(), Weighting::Unweighted, 6).unwrap();
            assert!((b.value - f.value).abs() <= 1e-12 * b.value);
        }
    }

    #[test]
    fn identity_family_matches_unweighted() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let win = window();
        let t = CoefficientField::random(&mut rng, &win, 2);
        let fam = ReducingFamily::identity(&win, 2, 2.0);
        let id = MatrixWeight::identity(1, 2);
        let sp = SpaceParams::new(0.0, 0.2, 2.0, 1.0, Kind::F).unwrap();
        let a = seq_norm(&t, &sp, Weighting::Family(&fam), 6).unwrap().value;
        let b = seq_norm(&t, &sp, Weighting::Weight(&id), 6).unwrap().value;
        let c = seq_norm(&t, &sp, Weighting::Unweighted, 6).unwrap().value;
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn missing_family_cube_is_a_coverage_error() {
        let win = window();
        let small = CubeWindow::new(Domain::unit(1), 0, 2).unwrap();
        let fam = ReducingFamily::identity(&small, 1, 2.0);
        let t = CoefficientField::zeros(win, 1);
        let sp = SpaceParams::new(0.0, 0.0, 2.0, 2.0, Kind::B).unwrap();
        assert!(matches!(seq_norm(&t, &sp, Weighting::Family(&fam), 6), Err(Error::Coverage(_))));
    }

    #[test]
    fn maximal_sequence_examples() {
        let mut t = BTreeMap::new();
        for k in 0..8 {
            t.insert(DyadicCube::new(3, vec![k]), 0.0);
        }
        t.insert(DyadicCube::new(3, vec![2]), 2.0);
        let (s, warn) = maximal_sequence(&t, 1.0, 3.0).unwrap();
        assert!(warn.is_none());
        for (q, v) in &s {
            let d = (q.index[0] - 2).abs() as f64;
            assert!((v - 2.0 / (1.0 + d).powi(3)).abs() < 1e-14);
        }
        let (s, _) = maximal_sequence(&t, 2.0, 400.0).unwrap();
        assert!(s.iter().all(|(q, v)| (v - t[q]).abs() < 1e-12));
        assert!(maximal_sequence(&t, 1.0, 0.5).unwrap().1.is_some());
    }

    #[test]
    fn identity_checks_pass_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let win = window();
        let fam = ReducingFamily::identity(&win, 1, 1.0);
        for (tau, p, q) in [(1.0, 1.0, f64::INFINITY), (0.5, 2.0, f64::INFINITY), (1.5, 1.0, 2.0), (0.0, 2.0, 0.5)] {
            let t = CoefficientField::random(&mut rng, &win, 1);
            let sp = SpaceParams::new(0.4, tau, p, q, Kind::F).unwrap();
            for c in identity_checks(&t, &sp, &fam, 6).unwrap() {
                assert_ne!(c.passed, Some(false), "{c:?}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = CoefficientField::random(&mut rng, &window(), 2);
        let back = CoefficientField::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        let text = t.to_json().unwrap();
        assert!(text.contains("\"(0,0)\""));
    }
}
