//! Subcommand bodies. Each writes its reports under the output directory and
//! returns the paths plus a few lines for the terminal.

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::{envelope, write_csv, write_json, ReportError};
use crate::suite::{Suite, Tier};
use matweight::apdim::estimate_dimensions;
use matweight::reducing::ReducingFamily;
use matweight::spaces::{seq_norm, Weighting};
use matweight::transform::{analyze, function_norm, peetre_sup, BandLimited};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0} criteria failed")]
    Verification(usize),
    #[error("numerical failure: {0}")]
    Numerical(#[from] matweight::Error),
    #[error("report: {0}")]
    Report(#[from] ReportError),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Verification(_) => 3,
            Failure::Numerical(_) | Failure::Report(_) => 4,
        }
    }

    /// One-line JSON diagnostic for stderr.
    pub fn diagnostic(&self) -> Value {
        let kind = match self {
            Failure::Config(e) => format!("config_{}", e.kind()),
            Failure::Verification(_) => "verification".into(),
            Failure::Numerical(_) => "numerical".into(),
            Failure::Report(_) => "report".into(),
        };
        json!({ "error": kind, "exit_code": self.exit_code(), "message": self.to_string() })
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Report(e.into())
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

#[derive(Serialize)]
struct SequenceRow {
    i: usize,
    a: f64,
    log2_a: f64,
    dual_a: Option<f64>,
    log2_dual_a: Option<f64>,
    upper_a: Option<f64>,
}

pub fn apdim(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Outcome, Failure> {
    let w = cfg.weight()?;
    let report = estimate_dimensions(&w, cfg.p, &cfg.dim_config())?;
    let rows: Vec<SequenceRow> = report
        .primary
        .a
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let dual = report.dual.as_ref().map(|e| e.a[i]);
            SequenceRow {
                i,
                a,
                log2_a: a.log2(),
                dual_a: dual,
                log2_dual_a: dual.map(f64::log2),
                upper_a: report.upper.as_ref().map(|e| e.a[i]),
            }
        })
        .collect();
    let mut o = Outcome::default();
    o.files.push(write_json(out, "apdim.json", &envelope("apdim", cfg, seed, &report)?)?);
    o.files.push(write_csv(out, "apdim.csv", &rows)?);
    o.lines.push(format!("d = {:.4} (slope {:.4}, rms {:.2e})", report.primary.estimate, report.primary.slope, report.primary.residual_rms));
    if let Some(d) = &report.dual {
        o.lines.push(format!("dtilde = {:.4} (slope {:.4})", d.estimate, d.slope));
    }
    o.lines.extend(report.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(o)
}

#[derive(Serialize)]
struct RadialRow {
    r: f64,
    phi: f64,
    psi: f64,
}

pub fn filters(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Outcome, Failure> {
    let fp = cfg.filter_pair()?;
    let summary = json!({
        "n": fp.n, "level": fp.level, "order": fp.order, "j_min": fp.j_min, "j_max": fp.j_max,
        "resolvable_band": fp.resolvable_band(),
        "partition_error": fp.partition_error(),
        "support_violations": fp.support_violations(),
        "lower_bound": fp.lower_bound(),
    });
    let rows: Vec<RadialRow> = fp.radial_table(512).into_iter().map(|[r, phi, psi]| RadialRow { r, phi, psi }).collect();
    let mut o = Outcome::default();
    o.files.push(write_json(out, "filters.json", &envelope("filters", cfg, seed, &summary)?)?);
    o.files.push(write_csv(out, "filters.csv", &rows)?);
    o.lines.push(format!(
        "scales {}..={}, partition error {:.2e}, lower bound {:.3e}",
        fp.j_min,
        fp.j_max,
        fp.partition_error(),
        fp.lower_bound()
    ));
    Ok(o)
}

#[derive(Serialize)]
struct CubeRow {
    cube: String,
    level: i32,
    norm: f64,
    inverse_norm: f64,
    bracket_lo: f64,
    bracket_hi: f64,
    iterations: usize,
}

fn family(cfg: &ExperimentConfig, p: f64, window: &matweight::dyadic::CubeWindow) -> Result<ReducingFamily, Failure> {
    Ok(ReducingFamily::build(&cfg.weight()?, p, window, cfg.method, &cfg.quadrature)?)
}

pub fn reduce(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Outcome, Failure> {
    let fam = family(cfg, cfg.p, &cfg.window()?)?;
    let rows: Vec<CubeRow> = fam
        .cubes
        .iter()
        .map(|(q, r)| {
            let (lo, hi) = r.bracket.overall();
            CubeRow {
                cube: q.to_string(),
                level: q.level,
                norm: r.matrix.op_norm(),
                inverse_norm: r.matrix.inverse().op_norm(),
                bracket_lo: lo,
                bracket_hi: hi,
                iterations: r.iterations,
            }
        })
        .collect();
    let body: Value = serde_json::from_str(&fam.to_json()?)?;
    let mut o = Outcome::default();
    o.files.push(write_json(out, "reduce.json", &envelope("reduce", cfg, seed, &body)?)?);
    o.files.push(write_csv(out, "reduce.csv", &rows)?);
    let (lo, hi) = fam.bracket();
    o.lines.push(format!("{} cubes, {:?}, bracket [{lo:.4}, {hi:.4}]", fam.cubes.len(), fam.construction));
    Ok(o)
}

#[derive(Serialize)]
struct NormRow {
    space: usize,
    draw: usize,
    weighted: f64,
    reduced: f64,
    peetre: f64,
    coefficients: f64,
}

pub fn norms(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Outcome, Failure> {
    let w = cfg.weight()?;
    let fp = cfg.filter_pair()?;
    let win = fp.window();
    let band = fp.resolvable_band();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<BandLimited> = (0..cfg.draws).map(|_| BandLimited::random(&mut rng, &fp, w.m, band)).collect();
    let mut rows = Vec::new();
    for (si, sp) in cfg.spaces.iter().enumerate() {
        let fam = family(cfg, sp.p, &win)?;
        for (k, f) in draws.iter().enumerate() {
            let t = analyze(f, &fp)?;
            rows.push(NormRow {
                space: si,
                draw: k,
                weighted: function_norm(f, &fp, sp, Weighting::Weight(&w))?.value,
                reduced: function_norm(f, &fp, sp, Weighting::Family(&fam))?.value,
                peetre: seq_norm(&peetre_sup(f, &fp, &fam)?, sp, Weighting::Unweighted, fp.level)?.value,
                coefficients: seq_norm(&t, sp, Weighting::Family(&fam), fp.level)?.value,
            });
        }
    }
    let mut o = Outcome::default();
    let summary: Vec<Value> = cfg
        .spaces
        .iter()
        .enumerate()
        .map(|(si, sp)| {
            let r: Vec<f64> = rows.iter().filter(|r| r.space == si).map(|r| r.weighted / r.reduced).collect();
            let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = r.iter().copied().fold(0.0, f64::max);
            o.lines.push(format!("space {si}: weighted/reduced in [{lo:.4}, {hi:.4}]"));
            json!({ "space": sp, "weighted_over_reduced": [lo, hi] })
        })
        .collect();
    o.files.push(write_json(out, "norms.json", &envelope("norms", cfg, seed, json!({ "spaces": summary, "rows": rows }))?)?);
    o.files.push(write_csv(out, "norms.csv", &rows)?);
    Ok(o)
}

pub fn verify(cfg: &ExperimentConfig, seed: u64, tier: Tier, out: &Path) -> Result<Outcome, Failure> {
    let suite = Suite::new(cfg.clone(), seed);
    let criteria = suite.run_tier(tier);
    let failed = criteria.iter().filter(|c| !c.passed).count();
    let mut o = Outcome::default();
    o.lines.extend(criteria.iter().map(|c| c.line()));
    o.files.push(write_json(
        out,
        "verify.json",
        &envelope("verify", cfg, seed, json!({ "tier": tier, "failed": failed, "criteria": criteria }))?,
    )?);
    if failed > 0 {
        for l in &o.lines {
            println!("{l}");
        }
        return Err(Failure::Verification(failed));
    }
    Ok(o)
}
