//! Littlewood-Paley filters and the phi-transform on the periodic unit torus.
//!
//! Functions live on `[0,1)^n` sampled at `2^L` nodes per axis; their Fourier
//! coefficients sit at `xi = 2 pi k`. Convolutions with `phi_j` are exact
//! multiplications of those coefficients, so every identity that holds for
//! band-limited data holds here up to rounding.

use crate::dyadic::{CubeWindow, DyadicCube, Domain, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::linalg::{gaussian, Matrix, Vector, C64};
use crate::spaces::{self, CoefficientField, Kind, LevelFields, NormValue, SpaceParams, Weighting};
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

fn fft_axis(data: &mut [C64], shape: &[usize], axis: usize, planner: &mut FftPlanner<f64>, inverse: bool) {
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
    let total = data.len();
    let mut line = vec![C64::new(0.0, 0.0); len];
    for outer in 0..total / (len * stride) {
        for inner in 0..stride {
            let base = outer * len * stride + inner;
            for (i, z) in line.iter_mut().enumerate() {
                *z = data[base + i * stride];
            }
            fft.process(&mut line);
            for (i, z) in line.iter().enumerate() {
                data[base + i * stride] = *z;
            }
        }
    }
}

/// Unnormalized n-dimensional DFT in place (row-major).
pub(crate) fn fft_nd(data: &mut [C64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    for axis in 0..shape.len() {
        fft_axis(data, shape, axis, &mut planner, inverse);
    }
}

/// Signed frequency of DFT index `i` on an axis of length `len`.
fn signed(i: usize, len: usize) -> i64 {
    if i < len / 2 {
        i as i64
    } else {
        i as i64 - len as i64
    }
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = flat % shape[d];
        flat /= shape[d];
    }
    idx
}

/// Integer frequency vectors of a cube grid, row-major.
fn frequencies(shape: &[usize]) -> Vec<Vec<i64>> {
    let total: usize = shape.iter().product();
    (0..total)
        .map(|f| unflatten(f, shape).iter().zip(shape).map(|(&i, &s)| signed(i, s)).collect())
        .collect()
}

fn radius(k: &[i64]) -> f64 {
    2.0 * PI * k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt()
}

/// The radial bump `(1 - u^2)^order` in `u = log2 |xi|`, supported on
/// `1/2 <= |xi| <= 2`.
pub fn phi_hat(order: u32, r: f64) -> f64 {
    if !(r > 0.0) {
        return 0.0;
    }
    let u = r.log2();
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - u * u).powi(order as i32)
    }
}

/// `phi_hat / sum_j |phi_hat(2^j .)|^2`.
pub fn psi_hat(order: u32, r: f64) -> f64 {
    let num = phi_hat(order, r);
    if num == 0.0 {
        return 0.0;
    }
    let u = r.log2();
    let lo = (-u - 1.0).floor() as i32;
    let hi = (-u + 1.0).ceil() as i32;
    let den: f64 = (lo..=hi).map(|j| phi_hat(order, r * (j as f64).exp2()).powi(2)).sum();
    num / den
}

/// Frequency samples of `phi_hat(2^{-j} .)` and `psi_hat(2^{-j} .)` on the
/// DFT grid for every resolvable `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterPair {
    pub n: usize,
    pub level: i32,
    pub order: u32,
    pub j_min: i32,
    pub j_max: i32,
    pub phi: BTreeMap<i32, Vec<f64>>,
    pub psi: BTreeMap<i32, Vec<f64>>,
}

/// Smallest scale whose annulus reaches the lowest torus frequency `2 pi`.
pub const FIRST_SCALE: i32 = 2;

pub fn build_filters(n: usize, level: i32, order: u32) -> Result<FilterPair> {
    if n == 0 {
        return Err(Error::Dimension(n));
    }
    if order == 0 {
        return Err(Error::Precondition("smoothness order must be at least 1".into()));
    }
    // Scales up to level-1 keep every annulus inside the Nyquist box and
    // leave at least 2^n nodes in each finest cube.
    let j_max = level - 1;
    if j_max < FIRST_SCALE {
        return Err(Error::Resolution(format!("a level-{level} grid resolves no full annulus")));
    }
    if (n as i32) * level > 26 {
        return Err(Error::Resolution(format!("grid 2^{level} in {n} dimensions is too large")));
    }
    let shape = vec![1usize << level; n];
    let radii: Vec<f64> = frequencies(&shape).iter().map(|k| radius(k)).collect();
    let mut phi = BTreeMap::new();
    let mut psi = BTreeMap::new();
    for j in FIRST_SCALE..=j_max {
        let s = (-(j as f64)).exp2();
        phi.insert(j, radii.par_iter().map(|r| phi_hat(order, r * s)).collect());
        psi.insert(j, radii.par_iter().map(|r| psi_hat(order, r * s)).collect());
    }
    Ok(FilterPair { n, level, order, j_min: FIRST_SCALE, j_max, phi, psi })
}

impl FilterPair {
    pub fn shape(&self) -> Vec<usize> {
        vec![1usize << self.level; self.n]
    }

    /// Corner-node grid the functions are sampled on.
    pub fn grid(&self) -> Grid {
        Grid::new(Domain::unit(self.n), self.level, 0.0).unwrap()
    }

    /// Cell-midpoint grid the norm fields are sampled on.
    pub fn midpoint_grid(&self) -> Grid {
        Grid::new(Domain::unit(self.n), self.level, 0.5).unwrap()
    }

    pub fn window(&self) -> CubeWindow {
        CubeWindow::new(Domain::unit(self.n), self.j_min, self.j_max).unwrap()
    }

    /// `|xi|` range on which the discrete Calderon sum is complete.
    pub fn resolvable_band(&self) -> (f64, f64) {
        (2.0 * PI, (self.j_max as f64).exp2())
    }

    fn check_level(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::Range(format!("scale {j} outside {}..={}", self.j_min, self.j_max)));
        }
        Ok(())
    }

    /// `max |sum_j conj(phi_hat) psi_hat (2^{-j} xi) - 1|` over resolvable frequencies.
    pub fn partition_error(&self) -> f64 {
        let (lo, hi) = self.resolvable_band();
        let radii: Vec<f64> = frequencies(&self.shape()).iter().map(|k| radius(k)).collect();
        radii
            .par_iter()
            .enumerate()
            .filter(|(_, r)| **r >= lo * (1.0 - 1e-12) && **r <= hi)
            .map(|(i, _)| {
                let s: f64 = self.phi.keys().map(|j| self.phi[j][i] * self.psi[j][i]).sum();
                (s - 1.0).abs()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Number of nonzero samples outside the scaled annuli.
    pub fn support_violations(&self) -> usize {
        let radii: Vec<f64> = frequencies(&self.shape()).iter().map(|k| radius(k)).collect();
        let mut bad = 0;
        for ((j, ph), ps) in self.phi.iter().zip(self.psi.values()) {
            let s = (-(*j as f64)).exp2();
            for (i, r) in radii.iter().enumerate() {
                let x = r * s;
                if !(0.5..=2.0).contains(&x) && (ph[i] != 0.0 || ps[i] != 0.0) {
                    bad += 1;
                }
            }
        }
        bad
    }

    /// `min |phi_hat|, |psi_hat|` over `3/5 <= |xi| <= 5/3` on a fine radial grid.
    pub fn lower_bound(&self) -> f64 {
        let (a, b) = (0.6f64, 5.0 / 3.0);
        (0..=4000)
            .map(|i| a + (b - a) * i as f64 / 4000.0)
            .map(|r| phi_hat(self.order, r).min(psi_hat(self.order, r)))
            .fold(f64::INFINITY, f64::min)
    }

    /// `(|xi|, phi_hat, psi_hat)` on `points` radii spanning the unit annulus.
    pub fn radial_table(&self, points: usize) -> Vec<[f64; 3]> {
        (0..points)
            .map(|i| {
                let r = 0.4 + 1.7 * i as f64 / (points.max(2) - 1) as f64;
                [r, phi_hat(self.order, r), psi_hat(self.order, r)]
            })
            .collect()
    }
}

/// A periodic `C^m`-valued trigonometric polynomial with a declared radial
/// band `band.0 <= |xi| <= band.1` and no mean.
#[derive(Clone, Debug, PartialEq)]
pub struct BandLimited {
    pub f: GridFunction,
    pub band: (f64, f64),
}

/// Relative size tolerated outside the declared band.
pub const LEAK: f64 = 1e-12;

impl BandLimited {
    pub fn new(f: GridFunction, band: (f64, f64)) -> Result<Self> {
        if !f.periodic || f.grid.offset != 0.0 || f.grid.domain != Domain::unit(f.grid.n()) {
            return Err(Error::Precondition("band-limited data lives on the corner grid of the unit torus".into()));
        }
        let out = BandLimited { f, band };
        let leak = out.leak();
        if leak > LEAK {
            return Err(Error::Precondition(format!("spectrum leaks {leak:e} outside the declared band")));
        }
        Ok(out)
    }

    fn from_spectrum(grid: Grid, spectra: Vec<Vec<C64>>, band: (f64, f64)) -> Self {
        let m = spectra.len();
        let len = grid.len();
        let shape = grid.shape();
        let cols: Vec<Vec<C64>> = spectra
            .into_par_iter()
            .map(|mut s| {
                fft_nd(&mut s, &shape, true);
                s
            })
            .collect();
        let mut values = vec![C64::new(0.0, 0.0); len * m];
        for (c, col) in cols.iter().enumerate() {
            for (i, z) in col.iter().enumerate() {
                values[i * m + c] = *z;
            }
        }
        BandLimited { f: GridFunction { grid, m, periodic: true, values }, band }
    }

    /// Fourier coefficients per component.
    pub fn spectrum(&self) -> Vec<Vec<C64>> {
        let shape = self.f.grid.shape();
        let norm = 1.0 / self.f.grid.len() as f64;
        (0..self.f.m)
            .into_par_iter()
            .map(|c| {
                let mut s: Vec<C64> = self.f.values.iter().skip(c).step_by(self.f.m).copied().collect();
                fft_nd(&mut s, &shape, false);
                s.iter_mut().for_each(|z| *z *= norm);
                s
            })
            .collect()
    }

    /// Largest coefficient outside the band relative to the largest inside it.
    pub fn leak(&self) -> f64 {
        let spec = self.spectrum();
        let radii: Vec<f64> = frequencies(&self.f.grid.shape()).iter().map(|k| radius(k)).collect();
        let (mut inside, mut outside) = (0.0f64, 0.0f64);
        for s in &spec {
            for (z, r) in s.iter().zip(&radii) {
                let inband = *r > 0.0 && *r >= self.band.0 * (1.0 - 1e-12) && *r <= self.band.1 * (1.0 + 1e-12);
                if inband {
                    inside = inside.max(z.norm());
                } else {
                    outside = outside.max(z.norm());
                }
            }
        }
        if outside == 0.0 {
            0.0
        } else {
            outside / inside.max(f64::MIN_POSITIVE)
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.f.magnitudes().into_iter().fold(0.0, f64::max)
    }

    pub fn zeros(filters: &FilterPair, m: usize) -> Self {
        BandLimited { f: GridFunction::zeros(filters.grid(), m, true), band: filters.resolvable_band() }
    }

    /// Places Fourier modes `(k, c)` (one coefficient per component) on the
    /// filters' grid.
    pub fn from_modes(filters: &FilterPair, m: usize, modes: &[(Vec<i64>, Vec<C64>)], band: (f64, f64)) -> Result<Self> {
        let shape = filters.shape();
        let len: usize = shape.iter().product();
        let mut spectra = vec![vec![C64::new(0.0, 0.0); len]; m];
        for (k, c) in modes {
            if k.len() != filters.n || c.len() != m {
                return Err(Error::Dimension(c.len()));
            }
            let mut flat = 0usize;
            for (&ki, &s) in k.iter().zip(&shape) {
                if 2 * ki.unsigned_abs() as usize >= s {
                    return Err(Error::Resolution(format!("mode {k:?} beyond the Nyquist frequency")));
                }
                flat = flat * s + ki.rem_euclid(s as i64) as usize;
            }
            for (spec, z) in spectra.iter_mut().zip(c) {
                spec[flat] += z;
            }
        }
        let out = Self::from_spectrum(filters.grid(), spectra, band);
        let leak = out.leak();
        if leak > LEAK {
            return Err(Error::Precondition(format!("modes leak {leak:e} outside the declared band")));
        }
        Ok(out)
    }

    /// Independent complex Gaussian coefficients on every frequency with
    /// `band.0 <= |xi| <= band.1`, drawn in a grid-independent order.
    pub fn random_modes<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, band: (f64, f64)) -> Vec<(Vec<i64>, Vec<C64>)> {
        let kmax = (band.1 / (2.0 * PI)).floor() as i64;
        let side = (2 * kmax + 1) as usize;
        let mut out = Vec::new();
        for flat in 0..side.pow(n as u32) {
            let k: Vec<i64> = unflatten(flat, &vec![side; n]).iter().map(|&i| i as i64 - kmax).collect();
            let r = radius(&k);
            if r > 0.0 && r >= band.0 && r <= band.1 {
                out.push((k, (0..m).map(|_| C64::new(gaussian(rng), gaussian(rng))).collect()));
            }
        }
        out
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, filters: &FilterPair, m: usize, band: (f64, f64)) -> Self {
        let modes = Self::random_modes(rng, filters.n, m, band);
        Self::from_modes(filters, m, &modes, band).expect("band inside the grid")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.f.grid != other.f.grid || self.f.m != other.f.m {
            return Err(Error::Precondition("functions live on different grids".into()));
        }
        let values = self.f.values.iter().zip(&other.f.values).map(|(a, b)| a + b).collect();
        let band = (self.band.0.min(other.band.0), self.band.1.max(other.band.1));
        Ok(BandLimited { f: GridFunction { values, ..self.f.clone() }, band })
    }

    pub fn scaled(&self, c: C64) -> Self {
        let values = self.f.values.iter().map(|z| z * c).collect();
        BandLimited { f: GridFunction { values, ..self.f.clone() }, band: self.band }
    }

    /// Largest sample difference.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.f.values.iter().zip(&other.f.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

fn check_compatible(f: &BandLimited, filters: &FilterPair) -> Result<()> {
    if f.f.grid.level != filters.level || f.f.grid.n() != filters.n {
        return Err(Error::Precondition(format!(
            "function on a level-{} grid in {} dimensions, filters built for level {} in {}",
            f.f.grid.level,
            f.f.grid.n(),
            filters.level,
            filters.n
        )));
    }
    Ok(())
}

/// Inverse transform of `mult * spectrum`, sampled at the grid nodes shifted
/// by `shift` cells along every axis; node-major.
fn samples(spec: &[Vec<C64>], shape: &[usize], mult: &[f64], shift: f64) -> Vec<C64> {
    let m = spec.len();
    let len = mult.len();
    let phase: Option<Vec<C64>> = (shift != 0.0).then(|| {
        frequencies(shape)
            .iter()
            .map(|k| {
                let a: f64 = k.iter().zip(shape).map(|(&ki, &s)| 2.0 * PI * ki as f64 * shift / s as f64).sum();
                C64::from_polar(1.0, a)
            })
            .collect()
    });
    let cols: Vec<Vec<C64>> = spec
        .par_iter()
        .map(|s| {
            let mut buf: Vec<C64> = s.iter().zip(mult).map(|(z, w)| z * *w).collect();
            if let Some(ph) = &phase {
                buf.iter_mut().zip(ph).for_each(|(z, p)| *z *= p);
            }
            fft_nd(&mut buf, shape, true);
            buf
        })
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); len * m];
    for (c, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            out[i * m + c] = *z;
        }
    }
    out
}

/// `phi_j * f`.
pub fn convolve_scale(f: &BandLimited, filters: &FilterPair, j: i32) -> Result<BandLimited> {
    check_compatible(f, filters)?;
    filters.check_level(j)?;
    let sj = (j as f64).exp2();
    let band = (f.band.0.max(sj / 2.0), f.band.1.min(2.0 * sj));
    let spec = f.spectrum();
    let values = samples(&spec, &filters.shape(), &filters.phi[&j], 0.0);
    Ok(BandLimited { f: GridFunction { values, ..f.f.clone() }, band })
}

/// Corner node of a cube on a level-`level` corner grid.
fn corner_node(q: &DyadicCube, level: i32, shape: &[usize]) -> usize {
    let shift = (level - q.level) as u32;
    q.index.iter().zip(shape).fold(0usize, |acc, (&k, &s)| acc * s + ((k as usize) << shift))
}

/// `t_Q = <f, phi_Q> = |Q|^{1/2} (phi~_{j_Q} * f)(x_Q)` on the filter window.
pub fn analyze(f: &BandLimited, filters: &FilterPair) -> Result<CoefficientField> {
    check_compatible(f, filters)?;
    let window = filters.window();
    let spec = f.spectrum();
    let shape = filters.shape();
    let m = f.f.m;
    let mut out = CoefficientField::zeros(window.clone(), m);
    for j in window.levels() {
        // phi_hat is real, so the reflected conjugate filter has the same samples.
        let g = samples(&spec, &shape, &filters.phi[&j], 0.0);
        let root = (-(j as f64) * filters.n as f64 / 2.0).exp2();
        for q in window.domain.cubes_at(j)? {
            let node = corner_node(&q, filters.level, &shape);
            out.set(q, g[node * m..(node + 1) * m].iter().map(|z| z * root).collect())?;
        }
    }
    Ok(out)
}

/// `T_psi t = sum_Q t_Q psi_Q`.
pub fn synthesize(t: &CoefficientField, filters: &FilterPair) -> Result<BandLimited> {
    let window = &t.window;
    if window.domain != Domain::unit(filters.n) || window.j_min < filters.j_min || window.j_max > filters.j_max {
        return Err(Error::Range(format!(
            "coefficient window {}..={} outside the filter scales {}..={}",
            window.j_min, window.j_max, filters.j_min, filters.j_max
        )));
    }
    let shape = filters.shape();
    let freqs = frequencies(&shape);
    let m = t.m;
    let len: usize = shape.iter().product();
    let mut spectra = vec![vec![C64::new(0.0, 0.0); len]; m];
    for j in window.levels() {
        let cubes = window.domain.cubes_at(j)?;
        let side = 1usize << j;
        let small = vec![side; filters.n];
        let root = (-(j as f64) * filters.n as f64 / 2.0).exp2();
        let psi = &filters.psi[&j];
        for (c, spec) in spectra.iter_mut().enumerate() {
            // Fourier coefficients of sum_Q t_Q |Q|^{1/2} delta_{x_Q}, periodic mod 2^j.
            let mut train: Vec<C64> = cubes
                .iter()
                .map(|q| t.get(q).map_or(C64::new(0.0, 0.0), |v| v[c] * root))
                .collect();
            fft_nd(&mut train, &small, false);
            for (i, k) in freqs.iter().enumerate() {
                if psi[i] == 0.0 {
                    continue;
                }
                let folded = k.iter().fold(0usize, |acc, &ki| acc * side + ki.rem_euclid(side as i64) as usize);
                spec[i] += train[folded] * psi[i];
            }
        }
    }
    let band = ((filters.j_min as f64).exp2() / 2.0, (filters.j_max as f64).exp2() * 2.0);
    Ok(BandLimited::from_spectrum(filters.grid(), spectra, band))
}

/// `f_j(x) = 2^{js} |B(x) (phi_j * f)(x)|` at the cell midpoints.
pub fn function_fields(f: &BandLimited, filters: &FilterPair, s: f64, p: f64, weighting: Weighting) -> Result<LevelFields> {
    check_compatible(f, filters)?;
    let grid = filters.midpoint_grid();
    let m = f.f.m;
    let roots: Option<Vec<Matrix>> = match weighting {
        Weighting::Weight(w) => {
            if w.m != m || w.n != filters.n {
                return Err(Error::Dimension(w.m));
            }
            if p.is_infinite() {
                return Err(Error::InvalidVariant("the p = inf scale is defined with reducing operators".into()));
            }
            Some(grid.points().par_iter().map(|x| w.power_at(x, 1.0 / p)).collect())
        }
        _ => None,
    };
    if let Weighting::Family(fam) = weighting {
        if fam.m != m {
            return Err(Error::Dimension(fam.m));
        }
    }
    let spec = f.spectrum();
    let shape = filters.shape();
    let mut fields = LevelFields::new(grid.clone());
    for j in filters.window().levels() {
        let g = samples(&spec, &shape, &filters.phi[&j], 0.5);
        let amp = (j as f64 * s).exp2();
        let values: Vec<f64> = match weighting {
            Weighting::Family(fam) => {
                let owner = grid.cube_of_nodes(j)?;
                let mats: Vec<Matrix> = grid
                    .domain
                    .cubes_at(j)?
                    .iter()
                    .map(|q| fam.get(q).map(|a| *a.matrix()))
                    .collect::<Result<_>>()?;
                (0..grid.len())
                    .into_par_iter()
                    .map(|i| amp * mats[owner[i]].apply(&Vector::from_slice(&g[i * m..(i + 1) * m])).norm())
                    .collect()
            }
            _ => (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let v = Vector::from_slice(&g[i * m..(i + 1) * m]);
                    amp * roots.as_ref().map_or(v.norm(), |r| r[i].apply(&v).norm())
                })
                .collect(),
        };
        fields.insert(j, values)?;
    }
    Ok(fields)
}

/// `||f||` in the function space of `params` under a weighting; `p = inf`
/// with the F-kind goes through the averaged supremum norm.
pub fn function_norm(f: &BandLimited, filters: &FilterPair, params: &SpaceParams, weighting: Weighting) -> Result<NormValue> {
    let window = filters.window();
    if params.p.is_infinite() && params.kind == Kind::F {
        if let Weighting::Weight(_) = weighting {
            return Err(Error::InvalidVariant("the p = inf scale is defined with reducing operators".into()));
        }
        let fields = function_fields(f, filters, params.s, 1.0, weighting)?;
        return spaces::finfty_norm(&fields, params.q, &window);
    }
    params.validate()?;
    let fields = function_fields(f, filters, params.s, params.p, weighting)?;
    spaces::la_tau_norm(&fields, &params.mixed(), &window)
}

/// `|Q|^{1/2} sup_{y in Q} |A_Q (phi_{j_Q} * f)(y)|` on the filter window, the
/// supremum taken over corner and midpoint nodes in `Q`; returned as a
/// scalar coefficient field.
pub fn peetre_sup(f: &BandLimited, filters: &FilterPair, family: &crate::reducing::ReducingFamily) -> Result<CoefficientField> {
    check_compatible(f, filters)?;
    if family.m != f.f.m {
        return Err(Error::Dimension(family.m));
    }
    let window = filters.window();
    let spec = f.spectrum();
    let shape = filters.shape();
    let m = f.f.m;
    let mut out = CoefficientField::zeros(window.clone(), 1);
    for j in window.levels() {
        let cubes = window.domain.cubes_at(j)?;
        let mats: Vec<Matrix> = cubes.iter().map(|q| family.get(q).map(|a| *a.matrix())).collect::<Result<_>>()?;
        let mut best = vec![0.0f64; cubes.len()];
        for (shift, grid) in [(0.0, filters.grid()), (0.5, filters.midpoint_grid())] {
            let g = samples(&spec, &shape, &filters.phi[&j], shift);
            let owner = grid.cube_of_nodes(j)?;
            for i in 0..grid.len() {
                let v = mats[owner[i]].apply(&Vector::from_slice(&g[i * m..(i + 1) * m])).norm();
                best[owner[i]] = best[owner[i]].max(v);
            }
        }
        let root = (-(j as f64) * filters.n as f64 / 2.0).exp2();
        for (q, b) in cubes.into_iter().zip(best) {
            out.set(q, vec![C64::new(root * b, 0.0)])?;
        }
    }
    Ok(out)
}

/// `(|xi|^sigma f_hat)^vee`.
pub fn lifting(f: &BandLimited, sigma: f64) -> Result<BandLimited> {
    let spec = f.spectrum();
    let peak = spec.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if spec.iter().any(|s| s[0].norm() > LEAK * peak.max(f64::MIN_POSITIVE)) {
        return Err(Error::Precondition("lifting needs a function without mean".into()));
    }
    let shape = f.f.grid.shape();
    let mult: Vec<f64> = frequencies(&shape)
        .iter()
        .map(|k| {
            let r = radius(k);
            if r == 0.0 {
                0.0
            } else {
                r.powf(sigma)
            }
        })
        .collect();
    let values = samples(&spec, &shape, &mult, 0.0);
    Ok(BandLimited { f: GridFunction { values, ..f.f.clone() }, band: f.band })
}

/// Samples of a function on the periodic box `[-R, R)^n` with `2^level`
/// points per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSamples {
    pub n: usize,
    pub half_width: f64,
    pub level: i32,
    pub values: Vec<C64>,
}

impl TimeSamples {
    fn shape(&self) -> Vec<usize> {
        vec![1usize << self.level; self.n]
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let h = 2.0 * self.half_width / (1usize << self.level) as f64;
        unflatten(flat, &self.shape()).iter().map(|&i| -self.half_width + i as f64 * h).collect()
    }

    pub fn from_fn(n: usize, half_width: f64, level: i32, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut out = TimeSamples { n, half_width, level, values: Vec::new() };
        let len: usize = out.shape().iter().product();
        out.values = (0..len).map(|i| C64::new(f(&out.point(i)), 0.0)).collect();
        out
    }

    /// The periodization of `(hat)^vee` computed from its Fourier series.
    pub fn from_transform(n: usize, half_width: f64, level: i32, hat: impl Fn(f64) -> f64) -> Self {
        let mut out = TimeSamples { n, half_width, level, values: Vec::new() };
        let shape = out.shape();
        let step = PI / half_width;
        let vol = (2.0 * half_width).powi(n as i32);
        let mut spec: Vec<C64> = frequencies(&shape)
            .iter()
            .map(|k| {
                let r = step * k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
                let sign = if k.iter().sum::<i64>() % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(sign * hat(r) / vol, 0.0)
            })
            .collect();
        fft_nd(&mut spec, &shape, true);
        out.values = spec;
        out
    }

    /// `d^gamma` by spectral differentiation.
    pub fn derivative(&self, gamma: &[u32]) -> Vec<C64> {
        let shape = self.shape();
        let len = self.values.len();
        let mut spec = self.values.clone();
        fft_nd(&mut spec, &shape, false);
        let step = PI / self.half_width;
        for (i, z) in spec.iter_mut().enumerate() {
            let idx = unflatten(i, &shape);
            let mut factor = C64::new(1.0 / len as f64, 0.0);
            for (d, (&ii, &g)) in idx.iter().zip(gamma).enumerate() {
                if g == 0 {
                    continue;
                }
                if ii == shape[d] / 2 {
                    factor = C64::new(0.0, 0.0);
                    break;
                }
                factor *= C64::new(0.0, step * signed(ii, shape[d]) as f64).powu(g);
            }
            *z *= factor;
        }
        fft_nd(&mut spec, &shape, true);
        spec
    }
}

fn multi_indices(n: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|g: Vec<u32>| {
                let used: u32 = g.iter().sum();
                (0..=max - used).map(move |k| {
                    let mut h = g.clone();
                    h.push(k);
                    h
                })
            })
            .collect();
    }
    out
}

/// `sup_{|gamma| <= M} sup_x |d^gamma phi(x)| (1 + |x|)^{n + M + |gamma|}`.
pub fn schwartz_seminorm(samples: &TimeSamples, order: u32) -> f64 {
    let pts: Vec<f64> = (0..samples.values.len())
        .map(|i| samples.point(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    multi_indices(samples.n, order)
        .par_iter()
        .map(|g| {
            let total: u32 = g.iter().sum();
            let vals = if total == 0 { samples.values.clone() } else { samples.derivative(g) };
            let e = (samples.n as u32 + order + total) as i32;
            vals.iter().zip(&pts).map(|(z, r)| z.norm() * (1.0 + r).powi(e)).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
