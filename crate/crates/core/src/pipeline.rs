//! End-to-end one-grid and two-grid certification runs.

use crate::bounds::{
    aggregate_bounds, apriori_norm_bounds, best_error_bound, coarse_to_fine, extend_submultiplicative,
    CertifiedError, ErrorInputs,
};
use crate::discretization::{
    assemble, scheme_constants, IntervalSparseMatrix, MatrixSidecar, Partition, SchemeConstants, SchemeKind,
};
use crate::dynamics::{build_map, dfly_coefficients, strong_norm_bound, LyCoefficients, LyVariant, MapDescriptor, PiecewiseMap};
use crate::eigen::{approximate_fixed_point, weak_norm_up, write_density_csv, ApproxFixedPoint, EigenOptions};
use crate::error::{Error, Result};
use crate::norms::{norms_of_powers, operator_norm_bound, BoundSource, ComputedNorms, NormBounds};
use crate::observables::{lyapunov_enclosure, LyapunovEnclosure};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Grid {
    OneGrid { n: usize },
    TwoGrid { coarse_n: usize, fine_n: usize },
}

impl Grid {
    /// The grid the density lives on.
    pub fn fine_n(&self) -> usize {
        match *self {
            Grid::OneGrid { n } => n,
            Grid::TwoGrid { fine_n, .. } => fine_n,
        }
    }
}

fn default_k_max() -> usize {
    10
}
fn default_budget() -> usize {
    80
}
fn default_horizon() -> usize {
    128
}

/// Everything that determines a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub map: MapDescriptor,
    pub scheme: SchemeKind,
    pub grid: Grid,
    /// First number of powers to compute; doubled on failure.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Largest `k_max` tried before giving up.
    #[serde(default = "default_budget")]
    pub k_max_budget: usize,
    /// Number of fine-grid powers bounded in the two-grid transfer.
    #[serde(default = "default_horizon")]
    pub fine_horizon: usize,
    /// `None` picks a variant from the map and scheme.
    #[serde(default)]
    pub variant: Option<LyVariant>,
    #[serde(default)]
    pub lyapunov: bool,
    #[serde(default)]
    pub eigen: EigenOptions,
}

impl RunConfig {
    pub fn new(map: MapDescriptor, scheme: SchemeKind, grid: Grid) -> Self {
        RunConfig {
            map,
            scheme,
            grid,
            k_max: default_k_max(),
            k_max_budget: default_budget(),
            fine_horizon: default_horizon(),
            variant: None,
            lyapunov: false,
            eigen: EigenOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Status {
    Certified,
    Failed {
        stage: Stage,
        reason: String,
        recommendation: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Map,
    Dfly,
    Assembly,
    Eigen,
    Norms,
    CoarseFine,
    Estimate,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub dfly: f64,
    pub assembly: f64,
    pub eigen: f64,
    pub norms: f64,
    pub estimate: f64,
    pub total: f64,
}

/// Facts about the discrete operators and the fixed point.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub u_strong: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub eigen_float_residual: Option<f64>,
    pub norm_q: Option<f64>,
    pub coarse_norm_q: Option<f64>,
    pub matrix: Option<MatrixSidecar>,
    pub coarse_matrix: Option<MatrixSidecar>,
    /// Bounds computed directly on the grid carrying the norms.
    pub computed_norms: Option<Vec<f64>>,
    /// First `k` whose computed bound is dominated by rounding error terms.
    pub error_dominated_from: Option<usize>,
    /// Coarse bounds used by the two-grid transfer, after aggregation.
    pub coarse_bounds: Option<NormBounds>,
    pub lyapunov_failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub map: MapDescriptor,
    pub scheme: SchemeKind,
    pub grid: Grid,
    pub k_max: usize,
    #[serde(flatten)]
    pub status: Status,
    pub ly: Option<LyCoefficients>,
    pub norm_bounds: Option<NormBounds>,
    pub error: Option<CertifiedError>,
    pub lyapunov: Option<LyapunovEnclosure>,
    pub diagnostics: Diagnostics,
    pub timings: Timings,
}

impl RunReport {
    pub fn is_certified(&self) -> bool {
        self.status == Status::Certified
    }

    /// The certified bound, if any.
    pub fn bound(&self) -> Option<f64> {
        self.error.as_ref().map(|e| e.bound)
    }
}

/// A report together with the large artifacts that do not go into JSON.
#[derive(Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub density: Option<Vec<f64>>,
    pub matrix: Option<IntervalSparseMatrix>,
}

impl RunOutput {
    /// Writes `report.json`, `density.csv`, `norms.csv` and, when asked,
    /// `matrix.coo` with `matrix.json` into `dir`.
    pub fn write_to(&self, dir: &Path, dump_matrix: bool) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let report = dir.join("report.json");
        std::fs::write(&report, serde_json::to_string_pretty(&self.report)?).map_err(|e| Error::io(&report, e))?;
        if let Some(u) = &self.density {
            write_density_csv(&dir.join("density.csv"), u, self.report.scheme)?;
        }
        if let Some(nb) = &self.report.norm_bounds {
            nb.write_csv(&dir.join("norms.csv"))?;
        }
        if dump_matrix {
            if let Some(m) = &self.matrix {
                m.export(&dir.join("matrix.coo"), &dir.join("matrix.json"))?;
            }
        }
        Ok(())
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    report: RunReport,
    density: Option<Vec<f64>>,
    matrix: Option<IntervalSparseMatrix>,
    started: Instant,
}

/// Early exit from a stage, carrying the recorded failure.
struct Stop;

impl<'a> Run<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        Run {
            cfg,
            report: RunReport {
                map: cfg.map.clone(),
                scheme: cfg.scheme,
                grid: cfg.grid,
                k_max: cfg.k_max,
                status: Status::Certified,
                ly: None,
                norm_bounds: None,
                error: None,
                lyapunov: None,
                diagnostics: Diagnostics::default(),
                timings: Timings::default(),
            },
            density: None,
            matrix: None,
            started: Instant::now(),
        }
    }

    fn fail(&mut self, stage: Stage, reason: String, recommendation: Option<String>) -> Stop {
        self.report.status = Status::Failed {
            stage,
            reason,
            recommendation,
        };
        Stop
    }

    fn check<T>(&mut self, stage: Stage, r: Result<T>) -> std::result::Result<T, Stop> {
        r.map_err(|e| {
            let hint = match &e {
                Error::ContractionNotCertified { .. } => Some("try an iterate of the map".to_string()),
                _ => None,
            };
            self.fail(stage, e.to_string(), hint)
        })
    }

    fn finish(mut self) -> RunOutput {
        self.report.timings.total = self.started.elapsed().as_secs_f64();
        RunOutput {
            report: self.report,
            density: self.density,
            matrix: self.matrix,
        }
    }
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot += t.elapsed().as_secs_f64();
    out
}

/// Builds the map from the config and runs the requested pipeline.
pub fn run(cfg: &RunConfig) -> RunOutput {
    let mut r = Run::new(cfg);
    match build_map(&cfg.map) {
        Ok(map) => {
            let _ = execute(&mut r, &map);
        }
        Err(e) => {
            r.fail(Stage::Map, e.to_string(), None);
        }
    }
    r.finish()
}

/// Runs on a dedicated pool of `threads` workers. Results do not depend on
/// the number.
pub fn run_with_threads(cfg: &RunConfig, threads: usize) -> Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::BadParameter {
            name: "threads".into(),
            detail: e.to_string(),
        })?;
    Ok(pool.install(|| run(cfg)))
}

/// Runs the pipeline on an already built map.
pub fn run_on_map(cfg: &RunConfig, map: &PiecewiseMap) -> RunOutput {
    let mut r = Run::new(cfg);
    let _ = execute(&mut r, map);
    r.finish()
}

pub fn one_grid(map: &PiecewiseMap, scheme: SchemeKind, n: usize, k_max: usize) -> RunOutput {
    let mut cfg = RunConfig::new(MapDescriptor::named(map.name()), scheme, Grid::OneGrid { n });
    cfg.k_max = k_max;
    run_on_map(&cfg, map)
}

pub fn two_grid(map: &PiecewiseMap, scheme: SchemeKind, coarse_n: usize, fine_n: usize, k_max: usize) -> RunOutput {
    let mut cfg = RunConfig::new(MapDescriptor::named(map.name()), scheme, Grid::TwoGrid { coarse_n, fine_n });
    cfg.k_max = k_max;
    run_on_map(&cfg, map)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if cfg.k_max == 0 || cfg.k_max_budget < cfg.k_max {
        return Err(Error::BadParameter {
            name: "k_max".into(),
            detail: format!("need 1 <= k_max <= budget, got {} and {}", cfg.k_max, cfg.k_max_budget),
        });
    }
    if let Grid::TwoGrid { coarse_n, fine_n } = cfg.grid {
        if coarse_n < 2 || fine_n < coarse_n || fine_n % coarse_n != 0 {
            return Err(Error::Precondition(format!(
                "the fine grid ({fine_n}) must be a multiple of the coarse grid ({coarse_n})"
            )));
        }
    }
    Ok(())
}

/// Relative gain needed to keep doubling `k_max` after a first certificate.
const REFINE_GAIN: f64 = 0.95;

/// Why one attempt at a given `k_max` did not certify.
struct Miss {
    stage: Stage,
    reason: String,
    hint: Option<String>,
    bounds: Option<NormBounds>,
}

struct Attempt {
    bounds: NormBounds,
    error: CertifiedError,
    /// Lower bound on the error any larger `k_max` can certify.
    floor: f64,
    computed: ComputedNorms,
    coarse: Option<NormBounds>,
}

fn first_dominated(c: &ComputedNorms) -> Option<usize> {
    c.error_dominated.iter().skip(1).position(|&d| d).map(|k| k + 1)
}

/// Everything an attempt needs besides `k_max`.
struct Ingredients<'a> {
    ly: &'a LyCoefficients,
    sc: SchemeConstants,
    fine: &'a IntervalSparseMatrix,
    coarse: Option<&'a IntervalSparseMatrix>,
    inputs: ErrorInputs,
    horizon: usize,
}

fn attempt(ing: &Ingredients, k: usize, timings: &mut Timings) -> std::result::Result<Attempt, Miss> {
    let miss = |stage, e: Error| Miss {
        stage,
        reason: e.to_string(),
        hint: None,
        bounds: None,
    };
    let target = ing.coarse.unwrap_or(ing.fine);
    let computed = timed(&mut timings.norms, || norms_of_powers(target, k)).map_err(|e| miss(Stage::Norms, e))?;
    let (ap, src) = apriori_norm_bounds(ing.ly, &ing.sc, operator_norm_bound(target), target.n(), k);
    let direct = aggregate_bounds(Some(&computed.c), None, (&ap, &src));
    if direct.m_star.is_none() {
        let (what, hint) = match (ing.coarse.is_some(), first_dominated(&computed)) {
            (true, _) => ("coarse ", "increase the coarse n or the k_max budget".to_string()),
            (false, Some(d)) => ("", format!("rounding errors dominate from k = {d}; use the two-grid strategy")),
            (false, None) => ("", "increase the k_max budget or n".to_string()),
        };
        return Err(Miss {
            stage: Stage::Norms,
            reason: format!("no {what}norm bound below one up to k = {k}"),
            hint: Some(hint),
            bounds: Some(direct),
        });
    }
    let (bounds, error) = estimate(ing, &direct, k, false, timings)?;
    // What any larger k_max could give at best: later powers bounded by zero.
    let floor = match estimate(ing, &direct, k, true, timings) {
        Ok((_, e)) => e.bound,
        Err(_) => 0.0,
    };
    Ok(Attempt {
        bounds,
        error,
        floor,
        computed,
        coarse: ing.coarse.map(|_| direct),
    })
}

/// Bounds on the fine grid and the error estimate from the direct bounds up
/// to `k`, extended by submultiplicativity or, with `zero_tail`, by zeros.
fn estimate(
    ing: &Ingredients,
    direct: &NormBounds,
    k: usize,
    zero_tail: bool,
    timings: &mut Timings,
) -> std::result::Result<(NormBounds, CertifiedError), Miss> {
    let miss = |stage, e: Error| Miss {
        stage,
        reason: e.to_string(),
        hint: None,
        bounds: None,
    };
    let extend = |len: usize| {
        if zero_tail {
            let mut c = direct.c.clone();
            c.resize(len.max(c.len()), 0.0);
            c
        } else {
            extend_submultiplicative(&direct.c, len)
        }
    };
    let bounds = match ing.coarse {
        None => {
            // Longer tails through submultiplicativity can only help the estimate.
            let ext = extend(4 * k + 1);
            let mut src = direct.source.clone();
            src.resize(ext.len(), BoundSource::Submult);
            NormBounds::new(ext, src)
        }
        Some(coarse) => {
            let h = ing.horizon.max(k);
            let fine_bounds = timed(&mut timings.estimate, || -> Result<NormBounds> {
                let c = extend(h + 1);
                let norm_q = operator_norm_bound(ing.fine);
                let cf = coarse_to_fine(&c, ing.ly, &ing.sc, coarse.n(), ing.fine.n(), norm_q, h)?;
                let (ap, src) = apriori_norm_bounds(ing.ly, &ing.sc, norm_q, ing.fine.n(), h);
                Ok(aggregate_bounds(None, Some(&cf), (&ap, &src)))
            })
            .map_err(|e| miss(Stage::CoarseFine, e))?;
            if fine_bounds.m_star.is_none() {
                return Err(Miss {
                    stage: Stage::CoarseFine,
                    reason: format!("all fine-grid bounds C^F_k are >= 1 for k <= {h}"),
                    hint: Some(format!("increase the coarse n above {}", coarse.n())),
                    bounds: Some(fine_bounds),
                });
            }
            fine_bounds
        }
    };
    let error = timed(&mut timings.estimate, || best_error_bound(&bounds.c, &ing.sc, &ing.inputs))
        .map_err(|e| miss(Stage::Estimate, e))?;
    Ok((bounds, error))
}

fn execute(r: &mut Run, map: &PiecewiseMap) -> std::result::Result<(), Stop> {
    let cfg = r.cfg;
    let scheme = cfg.scheme;
    let sc = scheme_constants(scheme);
    let v = validate(cfg);
    r.check(Stage::Map, v)?;

    // Lasota-Yorke coefficients and the a-priori strong norm of the density.
    let variant = cfg.variant.unwrap_or_else(|| LyVariant::auto(map, scheme));
    let ly = timed(&mut r.report.timings.dfly, || dfly_coefficients(map, scheme, variant));
    let ly = r.check(Stage::Dfly, ly)?;
    let u_strong = r.check(Stage::Dfly, strong_norm_bound(&ly))?.hi();
    r.report.ly = Some(ly.clone());
    r.report.diagnostics.u_strong = Some(u_strong);

    let n_fine = cfg.grid.fine_n();
    let fine_part = r.check(Stage::Assembly, Partition::new(n_fine))?;
    let fine = timed(&mut r.report.timings.assembly, || assemble(map, &fine_part, scheme));
    let fine = r.check(Stage::Assembly, fine)?;
    r.report.diagnostics.norm_q = Some(operator_norm_bound(&fine));
    r.report.diagnostics.matrix = Some(fine.sidecar());
    let coarse = match cfg.grid {
        Grid::OneGrid { .. } => None,
        Grid::TwoGrid { coarse_n, .. } => {
            let part = r.check(Stage::Assembly, Partition::new(coarse_n))?;
            let m = timed(&mut r.report.timings.assembly, || assemble(map, &part, scheme));
            let m = r.check(Stage::Assembly, m)?;
            r.report.diagnostics.coarse_norm_q = Some(operator_norm_bound(&m));
            r.report.diagnostics.coarse_matrix = Some(m.sidecar());
            Some(m)
        }
    };

    let fp = timed(&mut r.report.timings.eigen, || approximate_fixed_point(&fine, &cfg.eigen));
    let fp: ApproxFixedPoint = r.check(Stage::Eigen, fp)?;
    r.report.diagnostics.eps1 = Some(fp.eps1);
    r.report.diagnostics.eps2 = Some(fp.eps2);
    r.report.diagnostics.eigen_float_residual = Some(fp.float_residual);

    let ing = Ingredients {
        ly: &ly,
        sc,
        fine: &fine,
        coarse: coarse.as_ref(),
        inputs: ErrorInputs {
            n: n_fine,
            norm_l: ly.norm_l.hi(),
            u_strong,
            eps1: fp.eps1,
            eps2: fp.eps2,
            norm_u_tilde: weak_norm_up(&fp.u_tilde, scheme),
        },
        horizon: cfg.fine_horizon,
    };
    // Double k_max until a certificate appears, then keep doubling while the
    // bound still improves noticeably.
    let mut k = cfg.k_max;
    let mut best: Option<(usize, Attempt)> = None;
    loop {
        match attempt(&ing, k, &mut r.report.timings) {
            Ok(a) => {
                let better = best
                    .as_ref()
                    .is_none_or(|(_, b)| a.error.bound < REFINE_GAIN * b.error.bound);
                if !better {
                    break;
                }
                let done = a.floor >= REFINE_GAIN * a.error.bound;
                best = Some((k, a));
                if done {
                    break;
                }
            }
            Err(miss) => {
                if best.is_some() {
                    break;
                }
                if 2 * k > cfg.k_max_budget {
                    r.report.k_max = k;
                    r.report.norm_bounds = miss.bounds;
                    return Err(r.fail(miss.stage, miss.reason, miss.hint));
                }
            }
        }
        if 2 * k > cfg.k_max_budget {
            break;
        }
        k *= 2;
    }
    let (k, a) = best.expect("loop exits with a certificate or returns");
    r.report.k_max = k;
    r.report.diagnostics.computed_norms = Some(a.computed.c.clone());
    r.report.diagnostics.error_dominated_from = first_dominated(&a.computed);
    r.report.diagnostics.coarse_bounds = a.coarse;
    r.report.norm_bounds = Some(a.bounds);

    if cfg.lyapunov {
        match lyapunov_enclosure(map, &fp.u_tilde, a.error.bound, scheme) {
            Ok(l) => r.report.lyapunov = Some(l),
            Err(e) => r.report.diagnostics.lyapunov_failure = Some(e.to_string()),
        }
    }
    r.report.error = Some(a.error);
    r.density = Some(fp.u_tilde);
    r.matrix = Some(fine);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_one_grid_certifies_tightly() {
        let mut cfg = RunConfig::new(MapDescriptor::named("doubling"), SchemeKind::Ulam, Grid::OneGrid { n: 16 });
        cfg.lyapunov = true;
        let out = run(&cfg);
        assert!(out.report.is_certified(), "{:?}", out.report.status);
        assert!(out.report.bound().unwrap() <= 1e-10);
        assert!(out.report.lyapunov.unwrap().value.contains(std::f64::consts::LN_2));
    }

    #[test]
    fn degenerate_lanford_grid_is_weak_or_fails() {
        let map = build_map(&MapDescriptor::named("lanford")).unwrap();
        let out = one_grid(&map, SchemeKind::Ulam, 2, 10);
        assert!(!out.report.is_certified() || out.report.bound().unwrap() > 0.1);
    }

    #[test]
    fn bad_grids_are_rejected() {
        let cfg = RunConfig::new(
            MapDescriptor::named("doubling"),
            SchemeKind::Ulam,
            Grid::TwoGrid { coarse_n: 16, fine_n: 24 },
        );
        let out = run(&cfg);
        assert!(matches!(out.report.status, Status::Failed { stage: Stage::Map, .. }));
    }
}
