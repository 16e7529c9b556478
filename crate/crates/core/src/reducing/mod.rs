//! Reducing operators: one positive matrix per cube whose ellipsoid norm is
//! equivalent to the cube-average norm `rho_Q(z) = (avg_Q |W^{1/p} z|^p)^{1/p}`.

pub mod mvee;

use crate::dyadic::{CubeWindow, Domain, DyadicCube, Grid, GridFunction, Region};
use crate::error::{Error, Result};
use crate::linalg::{matrix_power, HermitianMatrix, Matrix, MatrixRecord, PositiveMatrix, Vector, C64};
use crate::weights::{check_p, dual_weight, MatrixWeight, QuadSpec, QuadratureRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

pub use mvee::{directions, mvee, MveeFit, MveeOptions};

/// Precomputed `W^{1/p}` at the quadrature nodes of one region.
pub struct CubeNorm {
    p: f64,
    rule: QuadratureRule,
    roots: Vec<Matrix>,
}

impl CubeNorm {
    pub fn new(w: &MatrixWeight, p: f64, region: &Region, quad: &QuadSpec) -> Result<Self> {
        check_p(p)?;
        let rule = QuadratureRule::build(region, &w.singular_points(), quad);
        let roots: Vec<Matrix> = rule.points().map(|x| w.power_at(x, 1.0 / p)).collect();
        let norms: Vec<f64> = roots.iter().map(|r| r.op_norm().powf(p)).collect();
        rule.check_integrable(&norms)?;
        Ok(CubeNorm { p, rule, roots })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `rho_Q(z)`.
    pub fn eval(&self, z: &Vector) -> f64 {
        let vals: Vec<f64> = self.roots.iter().map(|r| r.apply(z).norm().powf(self.p)).collect();
        self.rule.average_unchecked(&vals).powf(1.0 / self.p)
    }

    /// `(avg_Q ||W^{1/p} M||^p)^{1/p}`.
    pub fn eval_matrix(&self, m: &Matrix) -> f64 {
        let vals: Vec<f64> = self.roots.iter().map(|r| (*r * *m).op_norm().powf(self.p)).collect();
        self.rule.average_unchecked(&vals).powf(1.0 / self.p)
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }
}

/// `rho_Q(z)` for a single vector.
pub fn cube_norm(w: &MatrixWeight, p: f64, region: &Region, z: &[C64], quad: &QuadSpec) -> Result<f64> {
    if z.len() != w.m {
        return Err(Error::Dimension(z.len()));
    }
    Ok(CubeNorm::new(w, p, region, quad)?.eval(&Vector::from_slice(z)))
}

/// How a reducing operator is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Method {
    /// `exact_p2` when `p = 2`, otherwise `mvee` with 256 directions.
    Auto,
    /// `(avg_Q W)^{1/2}`; requires `p = 2`.
    ExactP2,
    /// Ellipsoid fit through `directions` boundary points.
    Mvee { directions: usize },
}

/// Construction tag stored in a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    ExactP2,
    Mvee,
    Identity,
}

/// Ratio ranges of `|A z| / rho(z)` over sampled directions and of
/// `||A M|| / (avg ||W^{1/p} M||^p)^{1/p}` over test matrices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub matrix_lo: f64,
    pub matrix_hi: f64,
}

impl Bracket {
    /// Widest of the two ranges.
    pub fn overall(&self) -> (f64, f64) {
        (self.lo.min(self.matrix_lo), self.hi.max(self.matrix_hi))
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        let (a, b) = self.overall();
        a >= lo && b <= hi
    }
}

/// `I` and the elementary matrices `E_ij`.
pub fn test_matrices(m: usize) -> Vec<Matrix> {
    let mut out = vec![Matrix::identity(m)];
    for i in 0..m {
        for j in 0..m {
            let mut e = Matrix::zeros(m);
            e.set(i, j, C64::new(1.0, 0.0));
            out.push(e);
        }
    }
    out
}

/// Ratio bracket of `A` against the cube norm on `k` directions.
pub fn verify_reducing(a: &PositiveMatrix, norm: &CubeNorm, k: usize) -> Bracket {
    let m = a.dim();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for z in directions(m, k.max(1)) {
        let r = a.matrix().apply(&z).norm() / norm.eval(&z);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let (mut mlo, mut mhi) = (f64::INFINITY, 0.0f64);
    for mat in test_matrices(m) {
        let r = (*a.matrix() * mat).op_norm() / norm.eval_matrix(&mat);
        mlo = mlo.min(r);
        mhi = mhi.max(r);
    }
    Bracket { lo, hi, matrix_lo: mlo, matrix_hi: mhi }
}

/// One reducing operator with its diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduced {
    pub matrix: PositiveMatrix,
    pub bracket: Bracket,
    pub construction: Construction,
    pub iterations: usize,
}

/// Directions used for brackets.
pub const CHECK_DIRECTIONS: usize = 64;

/// Reducing operator of order `p` for `W` on `region`.
pub fn reduce(w: &MatrixWeight, p: f64, region: &Region, method: Method, quad: &QuadSpec) -> Result<Reduced> {
    let norm = CubeNorm::new(w, p, region, quad)?;
    let method = match method {
        Method::Auto if p == 2.0 => Method::ExactP2,
        Method::Auto => Method::Mvee { directions: 256 },
        other => other,
    };
    let (matrix, construction, iterations) = match method {
        Method::ExactP2 => {
            if p != 2.0 {
                return Err(Error::InvalidExponent { p, requirement: "the exact construction needs p = 2" });
            }
            let mut acc = Matrix::zeros(w.m);
            for (r, wt) in norm.roots.iter().zip(norm.rule.weights()) {
                acc = acc + (*r * *r).scale(*wt);
            }
            let avg = PositiveMatrix::new(HermitianMatrix::hermitize(&acc))?;
            (matrix_power(&avg, 0.5)?, Construction::ExactP2, 0)
        }
        Method::Mvee { directions: k } => {
            if k < 2 {
                return Err(Error::Precondition("the ellipsoid fit needs at least 2 directions".into()));
            }
            let pts: Vec<Vector> = directions(w.m, k)
                .into_iter()
                .map(|z| {
                    let r = norm.eval(&z);
                    z.scale(C64::new(1.0 / r, 0.0))
                })
                .collect();
            let fit = mvee(&pts, MveeOptions::default())?;
            (fit.a, Construction::Mvee, fit.iterations)
        }
        Method::Auto => unreachable!(),
    };
    let bracket = verify_reducing(&matrix, &norm, CHECK_DIRECTIONS);
    Ok(Reduced { matrix, bracket, construction, iterations })
}

/// Reducing operator of order `p'` for the dual weight `W^{-1/(p-1)}`.
pub fn dual_reduce(w: &MatrixWeight, p: f64, region: &Region, method: Method, quad: &QuadSpec) -> Result<Reduced> {
    let dual = dual_weight(w, p)?;
    reduce(&dual, p / (p - 1.0), region, method, quad)
}

/// Reducing operators for every cube of a window.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducingFamily {
    pub p: f64,
    pub m: usize,
    pub construction: Construction,
    pub window: CubeWindow,
    pub cubes: BTreeMap<DyadicCube, Reduced>,
}

impl ReducingFamily {
    /// Builds `A_Q` for every window cube, in parallel; the result does not
    /// depend on scheduling.
    pub fn build(w: &MatrixWeight, p: f64, window: &CubeWindow, method: Method, quad: &QuadSpec) -> Result<Self> {
        let cubes = window.cubes();
        let built: Vec<Result<Reduced>> =
            cubes.par_iter().map(|q| reduce(w, p, &q.to_cube().region(), method, quad)).collect();
        let mut map = BTreeMap::new();
        let mut construction = Construction::ExactP2;
        for (q, r) in cubes.into_iter().zip(built) {
            let r = r?;
            construction = r.construction;
            map.insert(q, r);
        }
        Ok(ReducingFamily { p, m: w.m, construction, window: window.clone(), cubes: map })
    }

    /// `A_Q = I` on every cube.
    pub fn identity(window: &CubeWindow, m: usize, p: f64) -> Self {
        let one = Bracket { lo: 1.0, hi: 1.0, matrix_lo: 1.0, matrix_hi: 1.0 };
        let cubes = window
            .cubes()
            .into_iter()
            .map(|q| {
                (
                    q,
                    Reduced {
                        matrix: PositiveMatrix::identity(m),
                        bracket: one,
                        construction: Construction::Identity,
                        iterations: 0,
                    },
                )
            })
            .collect();
        ReducingFamily { p, m, construction: Construction::Identity, window: window.clone(), cubes }
    }

    pub fn get(&self, q: &DyadicCube) -> Result<&PositiveMatrix> {
        self.cubes.get(q).map(|r| &r.matrix).ok_or_else(|| Error::Coverage(q.to_string()))
    }

    pub fn covers_level(&self, j: i32) -> bool {
        j >= self.window.j_min && j <= self.window.j_max
    }

    /// Widest bracket over the family.
    pub fn bracket(&self) -> (f64, f64) {
        self.cubes.values().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
            let (a, b) = r.bracket.overall();
            (lo.min(a), hi.max(b))
        })
    }

    /// Level-`j` slice `A_j`, in [`Domain::cubes_at`] order.
    pub fn matrix_field(&self, j: i32) -> Result<MatrixField> {
        let domain = &self.window.domain;
        let cubes = domain.cubes_at(j)?;
        let matrices = cubes.iter().map(|q| self.get(q).map(|a| *a.matrix())).collect::<Result<Vec<_>>>()?;
        Ok(MatrixField { level: j, domain: domain.clone(), matrices })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FamilyRecord::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: FamilyRecord = serde_json::from_str(s)?;
        r.try_into()
    }
}

/// Piecewise-constant matrix field `A_j = sum_Q A_Q 1_Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    pub level: i32,
    pub domain: Domain,
    pub matrices: Vec<Matrix>,
}

/// `gamma_j(x) = ||W^{1/p}(x) A_Q^{-1}||` for the level-`j` cube `Q` holding
/// each node of `grid`. Nodes sitting on a singular point are moved to their
/// cell midpoint.
pub fn gamma_field(w: &MatrixWeight, family: &ReducingFamily, p: f64, j: i32, grid: &Grid) -> Result<GridFunction> {
    check_p(p)?;
    if !family.covers_level(j) {
        return Err(Error::Coverage(format!("level {j}")));
    }
    let owner = grid.cube_of_nodes(j)?;
    let cubes = grid.domain.cubes_at(j)?;
    let inverses: Vec<Matrix> = cubes.iter().map(|q| family.get(q).map(|a| a.inverse())).collect::<Result<_>>()?;
    let h = grid.spacing();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|node| {
            let mut x = grid.point(node);
            if w.evaluate(&x).is_err() {
                let shift = (0.5 - grid.offset) * h;
                x.iter_mut().for_each(|c| *c += shift);
            }
            C64::new((w.power_at(&x, 1.0 / p) * inverses[owner[node]]).op_norm(), 0.0)
        })
        .collect();
    GridFunction::new(grid.clone(), 1, false, values)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyRecord {
    p: f64,
    m: usize,
    construction: Construction,
    window: CubeWindow,
    cubes: BTreeMap<String, CubeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CubeRecord {
    matrix: MatrixRecord,
    bracket: Bracket,
    construction: Construction,
    iterations: usize,
}

impl From<&ReducingFamily> for FamilyRecord {
    fn from(f: &ReducingFamily) -> Self {
        FamilyRecord {
            p: f.p,
            m: f.m,
            construction: f.construction,
            window: f.window.clone(),
            cubes: f
                .cubes
                .iter()
                .map(|(q, r)| {
                    (
                        q.to_string(),
                        CubeRecord {
                            matrix: MatrixRecord::from(r.matrix.matrix()),
                            bracket: r.bracket,
                            construction: r.construction,
                            iterations: r.iterations,
                        },
                    )
                })
                .collect(),
        }
    }
}

impl TryFrom<FamilyRecord> for ReducingFamily {
    type Error = Error;
    fn try_from(r: FamilyRecord) -> Result<Self> {
        let mut cubes = BTreeMap::new();
        for (k, c) in r.cubes {
            let q: DyadicCube = k.parse()?;
            let a = Matrix::try_from(&c.matrix)?;
            let matrix = PositiveMatrix::new(HermitianMatrix::new(a)?)?;
            cubes.insert(q, Reduced { matrix, bracket: c.bracket, construction: c.construction, iterations: c.iterations });
        }
        Ok(ReducingFamily { p: r.p, m: r.m, construction: r.construction, window: r.window, cubes })
    }
}

/// Content hash of everything that determines a family.
pub fn family_key(w: &MatrixWeight, p: f64, window: &CubeWindow, method: Method, quad: &QuadSpec) -> String {
    let json = serde_json::to_string(&(w, p, window, method, quad)).expect("serializable key");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// In-memory (and optionally on-disk) store of built families.
#[derive(Default)]
pub struct FamilyCache {
    dir: Option<PathBuf>,
    mem: Mutex<HashMap<String, Arc<ReducingFamily>>>,
}

impl FamilyCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        FamilyCache { dir, mem: Mutex::new(HashMap::new()) }
    }

    pub fn get_or_build(
        &self,
        w: &MatrixWeight,
        p: f64,
        window: &CubeWindow,
        method: Method,
        quad: &QuadSpec,
    ) -> Result<Arc<ReducingFamily>> {
        let key = family_key(w, p, window, method, quad);
        if let Some(f) = self.mem.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let path = self.dir.as_ref().map(|d| d.join(format!("family-{key}.json")));
        let family = match &path {
            Some(pth) if pth.exists() => ReducingFamily::from_json(&std::fs::read_to_string(pth)?)?,
            _ => {
                let f = ReducingFamily::build(w, p, window, method, quad)?;
                if let Some(pth) = &path {
                    std::fs::create_dir_all(pth.parent().unwrap())?;
                    std::fs::write(pth, f.to_json()?)?;
                }
                f
            }
        };
        let family = Arc::new(family);
        self.mem.lock().unwrap().insert(key, family.clone());
        Ok(family)
    }

    pub fn len(&self) -> usize {
        self.mem.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One row of [`integrability_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub r: f64,
    /// `sup_Q (avg_Q ||A_Q W^{-1/p}||^r)^{1/r}`, `None` when divergent.
    pub inverse_side: Option<f64>,
    /// `sup_Q (avg_Q ||W^{1/p} A_Q^{-1}||^r)^{1/r}`, `None` when divergent.
    pub direct_side: Option<f64>,
}

/// Integrability table with the largest stable exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    /// `sup_Q max_x ||A_Q W^{-1/p}(x)||` (the sup-form used when `p <= 1`).
    pub sup_form: f64,
    /// Largest `r` whose row is finite and within a factor 10 of the first row.
    pub stable_r: Option<f64>,
}

/// Suprema over the window of `L^r` averages of `||A_Q W^{-1/p}||` and
/// `||W^{1/p} A_Q^{-1}||`.
pub fn integrability_probe(
    w: &MatrixWeight,
    p: f64,
    family: &ReducingFamily,
    rs: &[f64],
    quad: &QuadSpec,
) -> Result<ProbeTable> {
    check_p(p)?;
    let sing = w.singular_points();
    let mut inv = vec![Some(0.0f64); rs.len()];
    let mut dir = vec![Some(0.0f64); rs.len()];
    let mut sup_form = 0.0f64;
    for (q, red) in &family.cubes {
        let rule = QuadratureRule::build(&q.to_cube().region(), &sing, quad);
        let a = *red.matrix.matrix();
        let ainv = red.matrix.inverse();
        let left: Vec<f64> = rule.points().map(|x| (a * w.power_at(x, -1.0 / p)).op_norm()).collect();
        let right: Vec<f64> = rule.points().map(|x| (w.power_at(x, 1.0 / p) * ainv).op_norm()).collect();
        sup_form = sup_form.max(rule.node_max(&left).0);
        for (i, &r) in rs.iter().enumerate() {
            for (vals, slot) in [(&left, &mut inv[i]), (&right, &mut dir[i])] {
                let powered: Vec<f64> = vals.iter().map(|v| v.powf(r)).collect();
                match rule.average(&powered) {
                    Ok(avg) => {
                        if let Some(s) = slot.as_mut() {
                            *s = s.max(avg.powf(1.0 / r));
                        }
                    }
                    Err(Error::Integrability(_)) => *slot = None,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let rows: Vec<ProbeRow> = rs
        .iter()
        .enumerate()
        .map(|(i, &r)| ProbeRow { r, inverse_side: inv[i], direct_side: dir[i] })
        .collect();
    let first = rows.first().and_then(|row| Some(row.inverse_side?.max(row.direct_side?)));
    let stable_r = first.and_then(|f0| {
        rows.iter()
            .take_while(|row| match (row.inverse_side, row.direct_side) {
                (Some(a), Some(b)) => a.max(b) <= 10.0 * f0,
                _ => false,
            })
            .last()
            .map(|row| row.r)
    });
    Ok(ProbeTable { rows, sup_form, stable_r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::ScalarProfile;

    fn q() -> QuadSpec {
        QuadSpec::default()
    }

    fn unit() -> Region {
        Region { lower: vec![0.0], upper: vec![1.0] }
    }

    fn block() -> MatrixWeight {
        MatrixWeight::conjugated_block(
            1,
            ScalarProfile::power_log(vec![0.0], -0.3, 0.0),
            ScalarProfile::power_log(vec![0.0], 0.4, 0.0),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn cube_norm_examples() {
        let z = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let id = MatrixWeight::identity(1, 2);
        assert!((cube_norm(&id, 0.7, &unit(), &z, &q()).unwrap() - 1.0).abs() < 1e-13);
        let four = MatrixWeight::constant(1, 2, 4.0).unwrap();
        let e1 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert!((cube_norm(&four, 2.0, &unit(), &e1, &q()).unwrap() - 2.0).abs() < 1e-13);
        let pl = MatrixWeight::power_log(1, 1, -0.5, 0.0).unwrap();
        assert!((cube_norm(&pl, 1.0, &unit(), &[C64::new(1.0, 0.0)], &q()).unwrap() - 2.0).abs() < 1e-5);
    }

    #[test]
    fn cube_norm_is_homogeneous() {
        let w = block();
        let n = CubeNorm::new(&w, 1.5, &unit(), &q()).unwrap();
        let z = directions(2, 3)[2];
        let c = C64::new(-1.3, 2.2);
        assert!((n.eval(&z.scale(c)) - c.norm() * n.eval(&z)).abs() < 1e-12 * n.eval(&z) * c.norm());
    }

    #[test]
    fn constant_weight_reduces_to_root() {
        let c = 3.0f64;
        let w = MatrixWeight::constant(1, 2, c).unwrap();
        for (p, method) in [(2.0, Method::ExactP2), (0.5, Method::Auto), (3.0, Method::Mvee { directions: 128 })] {
            let r = reduce(&w, p, &unit(), method, &q()).unwrap();
            let target = Matrix::identity(2).scale(c.powf(1.0 / p));
            assert!((*r.matrix.matrix() - target).op_norm() < 1e-6 * c.powf(1.0 / p), "p={p}");
        }
    }

    #[test]
    fn mvee_matches_exact_at_p2() {
        let w = block();
        for region in [unit(), Region { lower: vec![-0.25], upper: vec![0.0] }] {
            let exact = reduce(&w, 2.0, &region, Method::ExactP2, &q()).unwrap();
            let fit = reduce(&w, 2.0, &region, Method::Mvee { directions: 256 }, &q()).unwrap();
            let err = (*exact.matrix.matrix() - *fit.matrix.matrix()).op_norm() / exact.matrix.op_norm();
            assert!(err < 0.05, "{err}");
            assert!(exact.bracket.lo > 1.0 - 1e-9 && exact.bracket.hi < 1.0 + 1e-9);
        }
    }

    #[test]
    fn exact_requires_p2() {
        let w = MatrixWeight::identity(1, 1);
        assert!(matches!(
            reduce(&w, 3.0, &unit(), Method::ExactP2, &q()),
            Err(Error::InvalidExponent { .. })
        ));
    }

    #[test]
    fn mvee_bracket_respects_john_bound() {
        let w = block();
        let r = reduce(&w, 1.0, &unit(), Method::Mvee { directions: 256 }, &q()).unwrap();
        assert!(r.bracket.hi <= 1.0 + 1e-6);
        assert!(r.bracket.lo >= 0.5 - 1e-6);
        assert!(r.bracket.within(0.2, 5.0));
    }

    #[test]
    fn dual_reduce_examples() {
        let id = MatrixWeight::identity(1, 2);
        let d = dual_reduce(&id, 2.0, &unit(), Method::Auto, &q()).unwrap();
        assert!((*d.matrix.matrix() - Matrix::identity(2)).op_norm() < 1e-12);
        let c = MatrixWeight::constant(1, 2, 4.0).unwrap();
        let a = reduce(&c, 2.0, &unit(), Method::Auto, &q()).unwrap();
        let at = dual_reduce(&c, 2.0, &unit(), Method::Auto, &q()).unwrap();
        assert!((at.matrix.op_norm() - 0.5).abs() < 1e-12);
        assert!(((*a.matrix.matrix() * *at.matrix.matrix()).op_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_operator_inverts_primal() {
        let w = block();
        let region = Region { lower: vec![0.0], upper: vec![0.25] };
        let a = reduce(&w, 2.0, &region, Method::Auto, &q()).unwrap();
        let at = dual_reduce(&w, 2.0, &region, Method::Auto, &q()).unwrap();
        let ainv = a.matrix.inverse();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for z in directions(2, 64) {
            let r = ainv.apply(&z).norm() / at.matrix.matrix().apply(&z).norm();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        assert!(hi <= 3.0 && 1.0 / lo <= 3.0, "[{lo}, {hi}]");
    }

    #[test]
    fn family_round_trip_and_cache() {
        let window = CubeWindow::new(Domain::centered(1), 1, 3).unwrap();
        let w = block();
        let cache = FamilyCache::new(None);
        let f = cache.get_or_build(&w, 2.0, &window, Method::Auto, &q()).unwrap();
        let g = cache.get_or_build(&w, 2.0, &window, Method::Auto, &q()).unwrap();
        assert!(Arc::ptr_eq(&f, &g));
        assert_eq!(f.cubes.len(), 2 + 4 + 8);
        let back = ReducingFamily::from_json(&f.to_json().unwrap()).unwrap();
        for (qq, r) in &f.cubes {
            let b = back.get(qq).unwrap();
            assert!((*b.matrix() - *r.matrix.matrix()).frobenius() < 1e-12);
        }
        assert!(matches!(f.get(&DyadicCube::new(5, vec![0])), Err(Error::Coverage(_))));
        let field = f.matrix_field(2).unwrap();
        assert_eq!(field.matrices.len(), 4);
    }

    #[test]
    fn gamma_field_is_one_for_matched_pairs() {
        let window = CubeWindow::new(Domain::centered(1), 1, 3).unwrap();
        let grid = Grid::new(Domain::centered(1), 6, 0.0).unwrap();
        let id = MatrixWeight::identity(1, 2);
        let fam = ReducingFamily::identity(&window, 2, 2.0);
        let g = gamma_field(&id, &fam, 2.0, 2, &grid).unwrap();
        assert!(g.real().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let c = MatrixWeight::constant(1, 2, 9.0).unwrap();
        let fam = ReducingFamily::build(&c, 2.0, &window, Method::Auto, &q()).unwrap();
        let g = gamma_field(&c, &fam, 2.0, 3, &grid).unwrap();
        assert!(g.real().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(matches!(gamma_field(&c, &fam, 2.0, 4, &grid), Err(Error::Coverage(_))));
    }

    #[test]
    fn gamma_field_averages_stay_bounded() {
        // |x|^{-1/2}, p = 2, exact operators: the cube average of gamma_j is
        // at most 1 by Cauchy-Schwarz against the defining average.
        let window = CubeWindow::new(Domain::centered(1), 1, 4).unwrap();
        let grid = Grid::new(Domain::centered(1), 12, 0.0).unwrap();
        let w = MatrixWeight::power_log(1, 1, -0.5, 0.0).unwrap();
        let fam = ReducingFamily::build(&w, 2.0, &window, Method::Auto, &q()).unwrap();
        for j in 1..=4 {
            let g = gamma_field(&w, &fam, 2.0, j, &grid).unwrap();
            let e = crate::dyadic::expectation_field(&g, j).unwrap();
            let worst = e.real().iter().cloned().fold(0.0, f64::max);
            assert!(worst <= 1.05, "j={j} {worst}");
        }
    }

    #[test]
    fn probe_identity_is_flat() {
        let window = CubeWindow::new(Domain::centered(1), 1, 2).unwrap();
        let id = MatrixWeight::identity(1, 2);
        let fam = ReducingFamily::identity(&window, 2, 2.0);
        let t = integrability_probe(&id, 2.0, &fam, &[1.0, 2.0, 3.0], &q()).unwrap();
        for row in &t.rows {
            assert!((row.inverse_side.unwrap() - 1.0).abs() < 1e-13);
            assert!((row.direct_side.unwrap() - 1.0).abs() < 1e-13);
        }
        assert_eq!(t.stable_r, Some(3.0));
    }

    #[test]
    fn probe_marks_divergence() {
        // p = 2, w = |x|^{-1/2}: ||W^{1/2} A^{-1}||^r ~ |x|^{-r/4}, divergent for r >= 4.
        let window = CubeWindow::new(Domain::centered(1), 1, 3).unwrap();
        let w = MatrixWeight::power_log(1, 1, -0.5, 0.0).unwrap();
        let fam = ReducingFamily::build(&w, 2.0, &window, Method::Auto, &q()).unwrap();
        let t = integrability_probe(&w, 2.0, &fam, &[2.0, 3.0, 4.5], &q()).unwrap();
        assert!(t.rows[0].direct_side.is_some() && t.rows[2].direct_side.is_none());
        assert_eq!(t.stable_r, Some(3.0));
    }
}
