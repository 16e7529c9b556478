//! Dyadic cubes, finite windows of them, and sampled fields on uniform grids.

pub use crate::reducing::{gamma_field, MatrixField};
use crate::error::{Error, Result};
use crate::linalg::C64;
use serde::{Deserialize, Serialize};
use std::fmt;

/// `Q_{j,k} = prod_i 2^{-j}[k_i, k_i + 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub index: Vec<i64>,
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},", self.level)?;
        for (i, k) in self.index.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

impl std::str::FromStr for DyadicCube {
    type Err = Error;
    /// Parses the `(j,k1;k2;...)` key format used by the JSON containers.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("bad cube key {s:?}"));
        let body = s.trim().strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let (j, ks) = body.split_once(',').ok_or_else(bad)?;
        let level = j.trim().parse().map_err(|_| bad())?;
        let index = ks
            .split(';')
            .map(|k| k.trim().parse::<i64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Ok(DyadicCube { level, index })
    }
}

pub(crate) fn pow2(j: i32) -> f64 {
    (2.0f64).powi(j)
}

impl DyadicCube {
    pub fn new(level: i32, index: Vec<i64>) -> Self {
        DyadicCube { level, index }
    }

    pub fn n(&self) -> usize {
        self.index.len()
    }

    /// Edge length `2^{-j}`.
    pub fn side(&self) -> f64 {
        pow2(-self.level)
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.n() as i32)
    }

    /// Lower corner `x_Q = 2^{-j} k`.
    pub fn corner(&self) -> Vec<f64> {
        let l = self.side();
        self.index.iter().map(|&k| k as f64 * l).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let l = self.side();
        self.index.iter().map(|&k| (k as f64 + 0.5) * l).collect()
    }

    pub fn to_cube(&self) -> Cube {
        Cube { lower: self.corner(), side: self.side() }
    }

    pub fn parent(&self) -> DyadicCube {
        self.ancestor(self.level - 1)
    }

    /// The unique level-`j` cube containing this one (`j <= level`).
    pub fn ancestor(&self, j: i32) -> DyadicCube {
        assert!(j <= self.level, "ancestor level {j} finer than {}", self.level);
        let shift = (self.level - j) as u32;
        DyadicCube { level: j, index: self.index.iter().map(|&k| k >> shift).collect() }
    }

    /// The `2^n` children, in lexicographic order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let n = self.n();
        (0..(1usize << n))
            .map(|bits| DyadicCube {
                level: self.level + 1,
                index: (0..n).map(|i| 2 * self.index[i] + ((bits >> (n - 1 - i)) & 1) as i64).collect(),
            })
            .collect()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.to_cube().contains(x)
    }

    /// True if `other` is this cube or one of its dyadic descendants.
    pub fn contains_cube(&self, other: &DyadicCube) -> bool {
        other.level >= self.level && other.ancestor(self.level) == *self
    }

    /// `lambda Q`: same center, edge `lambda * l(Q)`.
    pub fn dilate(&self, lambda: f64) -> Cube {
        self.to_cube().dilate(lambda)
    }

    /// `2^i Q`.
    pub fn double(&self, i: u32) -> Cube {
        self.dilate(pow2(i as i32))
    }
}

/// Axis-parallel cube with arbitrary corner and edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub lower: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn n(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().map(|a| a + 0.5 * self.side).collect()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.n() as i32)
    }

    pub fn dilate(&self, lambda: f64) -> Cube {
        let side = self.side * lambda;
        Cube { lower: self.center().iter().map(|c| c - 0.5 * side).collect(), side }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lower).all(|(xi, a)| *xi >= *a && *xi < a + self.side)
    }

    pub fn region(&self) -> Region {
        Region { lower: self.lower.clone(), upper: self.lower.iter().map(|a| a + self.side).collect() }
    }

    /// Intersects with the domain. Returns the region and whether anything
    /// was cut off; with `allow_clip = false` a cut is an error.
    pub fn clip(&self, domain: &Domain, allow_clip: bool) -> Result<(Region, bool)> {
        let d = domain.region();
        let r = self.region();
        let lower: Vec<f64> = r.lower.iter().zip(&d.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = r.upper.iter().zip(&d.upper).map(|(a, b)| a.min(*b)).collect();
        let clipped = lower != r.lower || upper != r.upper;
        if clipped && !allow_clip {
            return Err(Error::OutOfDomain(format!("cube at {:?} with edge {} leaves {:?}", self.lower, self.side, d)));
        }
        if lower.iter().zip(&upper).any(|(a, b)| a >= b) {
            return Err(Error::OutOfDomain("cube does not meet the domain".into()));
        }
        Ok((Region { lower, upper }, clipped))
    }
}

/// Half-open box `prod [lower_i, upper_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn n(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        (0..self.n()).all(|i| other.lower[i] >= self.lower[i] && other.upper[i] <= self.upper[i])
    }
}

/// Working domain `prod_i 2^{-level}[lo_i, hi_i)`; every level `j >= level`
/// of dyadic cubes tiles it exactly.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domain {
    pub level: i32,
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl Domain {
    pub fn new(level: i32, lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::Precondition(format!("empty or ragged domain {lo:?}..{hi:?}")));
        }
        Ok(Domain { level, lo, hi })
    }

    /// `[0,1)^n`.
    pub fn unit(n: usize) -> Self {
        Domain { level: 0, lo: vec![0; n], hi: vec![1; n] }
    }

    /// `[-1/2, 1/2)^n`, the default domain for weights.
    pub fn centered(n: usize) -> Self {
        Self::centered_box(n, -1)
    }

    /// `[-2^e, 2^e)^n`.
    pub fn centered_box(n: usize, e: i32) -> Self {
        Domain { level: -e, lo: vec![-1; n], hi: vec![1; n] }
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }

    pub fn region(&self) -> Region {
        let l = pow2(-self.level);
        Region {
            lower: self.lo.iter().map(|&k| k as f64 * l).collect(),
            upper: self.hi.iter().map(|&k| k as f64 * l).collect(),
        }
    }

    /// Cubes per axis at level `j`.
    pub fn counts_at(&self, j: i32) -> Result<Vec<i64>> {
        if j < self.level {
            return Err(Error::Resolution(format!("level {j} is coarser than the domain level {}", self.level)));
        }
        let f = 1i64 << (j - self.level);
        Ok(self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * f).collect())
    }

    /// All level-`j` cubes, lexicographic in the index.
    pub fn cubes_at(&self, j: i32) -> Result<Vec<DyadicCube>> {
        let counts = self.counts_at(j)?;
        let f = 1i64 << (j - self.level);
        let base: Vec<i64> = self.lo.iter().map(|a| a * f).collect();
        let total: i64 = counts.iter().product();
        let mut out = Vec::with_capacity(total as usize);
        for flat in 0..total {
            let mut rem = flat;
            let mut idx = vec![0i64; self.n()];
            for d in (0..self.n()).rev() {
                idx[d] = base[d] + rem % counts[d];
                rem /= counts[d];
            }
            out.push(DyadicCube { level: j, index: idx });
        }
        Ok(out)
    }

    /// Position of `q` in [`Domain::cubes_at`] order, if it lies inside.
    pub fn cube_position(&self, q: &DyadicCube) -> Option<usize> {
        let counts = self.counts_at(q.level).ok()?;
        let f = 1i64 << (q.level - self.level);
        let mut flat = 0i64;
        for d in 0..self.n() {
            let off = q.index[d] - self.lo[d] * f;
            if off < 0 || off >= counts[d] {
                return None;
            }
            flat = flat * counts[d] + off;
        }
        Some(flat as usize)
    }

    pub fn contains_cube(&self, c: &Cube) -> bool {
        self.region().contains_region(&c.region())
    }
}

/// Cubes of `domain` at levels `j_min..=j_max`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeWindow {
    pub domain: Domain,
    pub j_min: i32,
    pub j_max: i32,
}

impl CubeWindow {
    pub fn new(domain: Domain, j_min: i32, j_max: i32) -> Result<Self> {
        if j_min < domain.level || j_max < j_min {
            return Err(Error::Precondition(format!(
                "window levels {j_min}..={j_max} invalid for domain level {}",
                domain.level
            )));
        }
        Ok(CubeWindow { domain, j_min, j_max })
    }

    pub fn n(&self) -> usize {
        self.domain.n()
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    pub fn cubes(&self) -> Vec<DyadicCube> {
        self.levels().flat_map(|j| self.domain.cubes_at(j).expect("window level valid")).collect()
    }

    pub fn contains(&self, q: &DyadicCube) -> bool {
        q.level >= self.j_min && q.level <= self.j_max && self.domain.cube_position(q).is_some()
    }
}

/// Uniform grid of level-`level` cells over a domain. Samples sit at
/// `lower + (i + offset) h`; offset 0 gives cell corners, 0.5 midpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: Domain,
    pub level: i32,
    pub offset: f64,
}

impl Grid {
    pub fn new(domain: Domain, level: i32, offset: f64) -> Result<Self> {
        if level < domain.level {
            return Err(Error::Resolution(format!("grid level {level} below domain level {}", domain.level)));
        }
        if level - domain.level > 24 {
            return Err(Error::Resolution(format!("grid level {level} too fine")));
        }
        Ok(Grid { domain, level, offset })
    }

    pub fn n(&self) -> usize {
        self.domain.n()
    }

    pub fn spacing(&self) -> f64 {
        pow2(-self.level)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.domain.counts_at(self.level).unwrap().iter().map(|&c| c as usize).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major multi-index of a flat node number (last axis fastest).
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for d in (0..shape.len()).rev() {
            idx[d] = flat % shape[d];
            flat /= shape[d];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let shape = self.shape();
        idx.iter().zip(&shape).fold(0, |acc, (i, s)| acc * s + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        let lower = self.domain.region().lower;
        self.unflatten(flat).iter().zip(&lower).map(|(&i, a)| a + (i as f64 + self.offset) * h).collect()
    }

    /// All sample points, row-major.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// For every node, the position (in [`Domain::cubes_at`] order) of the
    /// level-`j` cube containing the node's cell.
    pub fn cube_of_nodes(&self, j: i32) -> Result<Vec<usize>> {
        if j > self.level || j < self.domain.level {
            return Err(Error::Resolution(format!("level {j} not resolvable on a level-{} grid", self.level)));
        }
        let shift = (self.level - j) as u32;
        let counts = self.domain.counts_at(j)?;
        Ok((0..self.len())
            .map(|flat| {
                self.unflatten(flat)
                    .iter()
                    .zip(&counts)
                    .fold(0usize, |acc, (&i, &c)| acc * c as usize + (i >> shift))
            })
            .collect())
    }
}

/// Samples of a `C^m`-valued function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub m: usize,
    pub periodic: bool,
    /// Node-major: `values[node * m + component]`.
    pub values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: Grid, m: usize, periodic: bool, values: Vec<C64>) -> Result<Self> {
        if m == 0 || values.len() != grid.len() * m {
            return Err(Error::Precondition(format!(
                "{} samples for a grid of {} nodes and m = {m}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Precondition("non-finite sample".into()));
        }
        Ok(GridFunction { grid, m, periodic, values })
    }

    pub fn from_real(grid: Grid, periodic: bool, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, 1, periodic, values.into_iter().map(|x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(grid: Grid, periodic: bool, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.points().iter().map(|x| C64::new(f(x), 0.0)).collect();
        GridFunction { grid, m: 1, periodic, values }
    }

    pub fn zeros(grid: Grid, m: usize, periodic: bool) -> Self {
        let len = grid.len() * m;
        GridFunction { grid, m, periodic, values: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn node(&self, i: usize) -> &[C64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    /// Euclidean length of the sample at every node.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.chunks(self.m).map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect()
    }

    /// Real parts of a scalar field.
    pub fn real(&self) -> Vec<f64> {
        self.values.iter().step_by(self.m).map(|z| z.re).collect()
    }

    /// Grid integral `sum h^n f`.
    pub fn integral(&self) -> Vec<C64> {
        let w = self.grid.spacing().powi(self.grid.n() as i32);
        (0..self.m)
            .map(|c| self.values.iter().skip(c).step_by(self.m).sum::<C64>() * w)
            .collect()
    }
}

/// `E_j f`: replace each level-`j` cube by its average.
pub fn expectation_field(f: &GridFunction, j: i32) -> Result<GridFunction> {
    let owner = f.grid.cube_of_nodes(j)?;
    let cubes = f.grid.domain.counts_at(j)?.iter().product::<i64>() as usize;
    let m = f.m;
    let mut sums = vec![C64::new(0.0, 0.0); cubes * m];
    let mut counts = vec![0usize; cubes];
    for (node, &q) in owner.iter().enumerate() {
        counts[q] += 1;
        for c in 0..m {
            sums[q * m + c] += f.values[node * m + c];
        }
    }
    let mut out = f.clone();
    for (node, &q) in owner.iter().enumerate() {
        for c in 0..m {
            out.values[node * m + c] = sums[q * m + c] / counts[q] as f64;
        }
    }
    Ok(out)
}

/// Grid Hardy-Littlewood maximal function of `|f|`: at every node the
/// largest average over centered boxes of half-width `0, 1, 2, 4, ...`
/// cells. Boxes wrap for periodic data (never exceeding one period) and are
/// cut at the boundary otherwise.
pub fn hl_maximal(f: &GridFunction) -> GridFunction {
    let shape = f.grid.shape();
    let base = f.magnitudes();
    let max_extent = *shape.iter().max().unwrap();
    let mut best = base.clone();
    let mut r = 1usize;
    while r <= max_extent {
        let mut avg = base.clone();
        for axis in 0..shape.len() {
            avg = box_average_axis(&avg, &shape, axis, r, f.periodic);
        }
        best.iter_mut().zip(&avg).for_each(|(b, a)| *b = b.max(*a));
        r *= 2;
    }
    GridFunction {
        grid: f.grid.clone(),
        m: 1,
        periodic: f.periodic,
        values: best.into_iter().map(|x| C64::new(x, 0.0)).collect(),
    }
}

fn box_average_axis(data: &[f64], shape: &[usize], axis: usize, r: usize, periodic: bool) -> Vec<f64> {
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![0.0; data.len()];
    let mut prefix = vec![0.0; len + 1];
    for o in 0..outer {
        for s in 0..stride {
            let at = |i: usize| o * len * stride + i * stride + s;
            for i in 0..len {
                prefix[i + 1] = prefix[i] + data[at(i)];
            }
            let total = prefix[len];
            for i in 0..len {
                let (sum, count) = if periodic {
                    let width = 2 * r + 1;
                    if width >= len {
                        // A box wider than the period is the whole circle.
                        (total, len)
                    } else {
                        let start = (i as i64 - r as i64).rem_euclid(len as i64) as usize;
                        let end = start + width;
                        let partial = if end <= len {
                            prefix[end] - prefix[start]
                        } else {
                            total - prefix[start] + prefix[end - len]
                        };
                        (partial, width)
                    }
                } else {
                    let lo = i.saturating_sub(r);
                    let hi = (i + r + 1).min(len);
                    (prefix[hi] - prefix[lo], hi - lo)
                };
                out[at(i)] = sum / count as f64;
            }
        }
    }
    out
}
