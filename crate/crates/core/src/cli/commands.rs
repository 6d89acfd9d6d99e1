use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Format, RunConfig};
use super::output::Outputs;
use crate::convergence::{
    convergence_sweep, derive_seed, manufactured_forcing, manufactured_solution, oracle_resolvent_convergence,
    random_datum, Check, Excitation, OracleInstance, SchemeSymbol, SweepOptions,
};
use crate::error::{Error, Result};
use crate::linalg::{op_norm, BlockStructure, C64};
use crate::material::{
    coercivity_lower_bound, line_samples, CoercivityStatus, CoercivitySummary, MaterialLaw, ProjectedLaw,
};
use crate::solver::{project_signal, solve, EvolutionaryProblem, SolveSidecar, BLOCK_TOLERANCE};
use crate::spaces::{write_csv, WeightedSignal};
use crate::spatial::verify::{verify_catalog, CatalogReport};
use crate::spatial::{GalerkinScheme, SpatialOperator};

/// Result of one command: pass/fail, a one-line summary, the names of failing
/// checks and the files to write.
#[derive(Debug, Default)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
    pub failures: Vec<String>,
    pub outputs: Outputs,
}

const STABILITY_VECTORS: usize = 100;
const CATALOG_MODES: usize = 64;
const DEFAULT_LEVELS: [usize; 3] = [4, 16, 64];

fn levels(cfg: &RunConfig, op: &SpatialOperator) -> Vec<usize> {
    let mut ns: Vec<usize> = match &cfg.scheme {
        Some(s) if !s.n_pairs.is_empty() => s.n_pairs.clone(),
        _ => DEFAULT_LEVELS.to_vec(),
    };
    for n in &mut ns {
        *n = (*n).min(op.pair_count());
    }
    ns.sort_unstable();
    ns.dedup();
    ns
}

fn kernel_for(cfg: &RunConfig, op: &SpatialOperator, n: usize) -> usize {
    cfg.scheme
        .as_ref()
        .and_then(|s| s.n_kernel)
        .unwrap_or(n)
        .min(op.kernel_count())
}

/// `‖z M_n(z)‖`, evaluated block-wise.
fn projected_law_norm(law: &ProjectedLaw, blocks: &BlockStructure, z: C64) -> f64 {
    let zm = law.z_m(z);
    blocks
        .blocks
        .iter()
        .map(|idx| op_norm(&zm.select_rows(idx).select_columns(idx)))
        .fold(0.0, f64::max)
}

#[derive(Serialize)]
struct ProjectedCoercivity {
    n_pairs: usize,
    n_kernel: usize,
    c_estimate: f64,
    pass: bool,
}

#[derive(Serialize)]
struct StabilityReport {
    vectors: usize,
    schemes: Vec<usize>,
    max_ratio: f64,
    violations: usize,
    law_bound_samples: usize,
    max_law_excess: f64,
    law_bound_violations: usize,
}

#[derive(Serialize)]
struct VerifyReport {
    operator: String,
    law: String,
    seed: u64,
    coercivity: CoercivitySummary,
    analytic_c: Option<f64>,
    projected: Vec<ProjectedCoercivity>,
    stability: StabilityReport,
    catalog: CatalogReport,
    checks: Vec<Check>,
    pass: bool,
}

pub fn cmd_verify(cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    let op = cfg.operator()?;
    let law = cfg.law(op.n_components())?;
    let nu = cfg.problem()?.nu;
    let grid = if cfg.grid.is_some() { Some(cfg.grid()?) } else { None };
    let samples = line_samples(nu, grid.as_ref());
    let coercivity = coercivity_lower_bound(&law, nu, &samples)?;
    let c = coercivity.analytic_c.unwrap_or(coercivity.c_estimate);

    let ns = levels(cfg, &op);
    let schemes: Vec<GalerkinScheme> = ns
        .iter()
        .map(|&n| GalerkinScheme::build(op.clone(), n, kernel_for(cfg, &op, n)))
        .collect::<Result<_>>()?;

    let projected_samples = line_samples(nu, None);
    let projected: Vec<ProjectedCoercivity> = schemes
        .par_iter()
        .map(|s| -> Result<ProjectedCoercivity> {
            let pl = ProjectedLaw::new(&law, s)?.to_law();
            let r = coercivity_lower_bound(&pl, nu, &projected_samples)?;
            let cn = r.analytic_c.unwrap_or(r.c_estimate);
            Ok(ProjectedCoercivity {
                n_pairs: s.n_pairs(),
                n_kernel: s.n_kernel(),
                c_estimate: cn,
                pass: cn >= c - 1e-9,
            })
        })
        .collect::<Result<_>>()?;

    // ‖A_n P_n v‖ ≤ ‖A v‖ on random full-resolution vectors
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let vectors: Vec<Vec<C64>> = (0..STABILITY_VECTORS)
        .map(|_| {
            (0..op.resolution())
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(re, im)
                })
                .collect()
        })
        .collect();
    let (mut max_ratio, mut violations) = (0.0f64, 0usize);
    for s in &schemes {
        let a = s.project_a();
        for v in &vectors {
            let full = op.apply(v).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let part = (&a * s.apply_p(v)?).norm();
            max_ratio = max_ratio.max(part / full);
            if part > full * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }

    // ‖z M_n(z)‖ ≤ ‖z M(z)‖ on the frequency samples
    let law_checks: Vec<(usize, f64)> = schemes
        .par_iter()
        .map(|s| -> Result<(usize, f64)> {
            let pl = ProjectedLaw::new(&law, s)?;
            let blocks = match pl.rational_parts() {
                Some((m0, m1)) => BlockStructure::detect(s.n_total(), &[m0, m1], BLOCK_TOLERANCE),
                None => BlockStructure::dense(s.n_total()),
            };
            let mut bad = 0;
            let mut excess = f64::NEG_INFINITY;
            for z in &samples {
                let lhs = projected_law_norm(&pl, &blocks, *z);
                let rhs = op_norm(&law.z_m(*z));
                excess = excess.max(lhs - rhs);
                if lhs > rhs * (1.0 + 1e-12) + 1e-14 {
                    bad += 1;
                }
            }
            Ok((bad, excess))
        })
        .collect::<Result<_>>()?;
    let law_bound_violations = law_checks.iter().map(|x| x.0).sum();
    let max_law_excess = law_checks.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);

    let catalog = verify_catalog(&op, CATALOG_MODES);

    let coercive = coercivity.status == CoercivityStatus::Coercive;
    let checks = vec![
        Check::new("coercivity", if coercive { -c } else { f64::INFINITY }),
        Check::new(
            "projected_coercivity",
            if projected.iter().all(|p| p.pass) {
                0.0
            } else {
                f64::INFINITY
            },
        ),
        Check::new(
            "stability",
            if violations == 0 {
                max_ratio - 1.0
            } else {
                f64::INFINITY
            },
        ),
        Check::new(
            "law_bound",
            if law_bound_violations == 0 {
                max_law_excess.min(0.0)
            } else {
                max_law_excess
            },
        ),
        Check::new("catalog", if catalog.pass() { 0.0 } else { f64::INFINITY }),
    ];
    let mut failures: Vec<String> = Vec::new();
    for ch in checks.iter().filter(|c| !c.pass) {
        if ch.name == "coercivity" {
            failures.push("coercivity: not_coercive".into());
        } else if ch.name == "catalog" {
            for cc in catalog.checks.iter().filter(|c| !c.pass) {
                failures.push(format!("catalog: {}", cc.name));
            }
        } else {
            failures.push(ch.name.clone());
        }
    }
    let pass = failures.is_empty();
    let report = VerifyReport {
        operator: op.name().to_string(),
        law: law.name().to_string(),
        seed,
        coercivity: coercivity.summary(),
        analytic_c: coercivity.analytic_c,
        projected,
        stability: StabilityReport {
            vectors: STABILITY_VECTORS,
            schemes: ns,
            max_ratio,
            violations,
            law_bound_samples: samples.len(),
            max_law_excess,
            law_bound_violations,
        },
        catalog,
        checks,
        pass,
    };
    let mut outputs = Outputs::default();
    outputs.add_json("verify_report.json", &report)?;
    Ok(Outcome {
        pass,
        summary: format!(
            "verify {}: c = {:.12} ({})",
            op.name(),
            c,
            if pass { "pass" } else { "fail" }
        ),
        failures,
        outputs,
    })
}

fn build_problem(cfg: &RunConfig) -> Result<(EvolutionaryProblem, Arc<SpatialOperator>, MaterialLaw)> {
    let op = cfg.operator()?;
    let law = cfg.law(op.n_components())?;
    let grid = cfg.grid()?;
    let problem = EvolutionaryProblem::new(law.clone(), op.clone(), grid)?;
    Ok((problem, op, law))
}

/// Full-resolution forcing and, for manufactured forcing, the full symbol.
fn forcing(
    cfg: &RunConfig,
    problem: &EvolutionaryProblem,
) -> Result<(WeightedSignal, Option<Excitation>, Option<SchemeSymbol>)> {
    let op = problem.operator();
    match cfg.excitation()? {
        None => Ok((WeightedSignal::zeros(*problem.grid(), op.resolution()), None, None)),
        Some(exc) => {
            let u = manufactured_solution(problem.grid(), op, &exc).map_err(|e| match e {
                Error::InsufficientResolution { .. } => Error::Config {
                    key: "forcing.n_pairs".into(),
                    message: e.to_string(),
                },
                Error::InvalidSignal(m) => Error::Config {
                    key: "forcing.profile".into(),
                    message: m,
                },
                other => other,
            })?;
            let full = SchemeSymbol::full(problem)?;
            let f = manufactured_forcing(problem, &full, &u)?;
            Ok((f, Some(exc), Some(full)))
        }
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    seed: u64,
    n_pairs: usize,
    n_kernel: usize,
    forcing: Option<&'a Excitation>,
    #[serde(flatten)]
    result: SolveSidecar,
}

pub fn cmd_solve(cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    let (problem, op, _) = build_problem(cfg)?;
    let ns = levels(cfg, &op);
    let (f, exc, _) = forcing(cfg, &problem)?;
    let mut outputs = Outputs::default();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for &n in &ns {
        let n_kernel = kernel_for(cfg, &op, n);
        let scheme = GalerkinScheme::build(op.clone(), n, n_kernel)?;
        let fn_ = project_signal(&scheme, &f)?;
        let report = solve(&problem, &scheme, &fn_)?;
        let sidecar = report.sidecar(&fn_);
        if !sidecar.bound_satisfied {
            failures.push(format!("solution_bound (n_pairs = {n})"));
        }
        if sidecar.bound > 0.0 {
            worst = worst.max(sidecar.norm_u / sidecar.bound);
        }
        if cfg.output.wants(Format::Csv) {
            let mut buf = Vec::new();
            write_csv(&report.u, &mut buf)?;
            outputs.add(format!("solution_n{n}.csv"), buf);
        }
        if cfg.output.wants(Format::Json) {
            let out = SolveOutput {
                seed,
                n_pairs: n,
                n_kernel,
                forcing: exc.as_ref(),
                result: sidecar,
            };
            outputs.add_json(format!("solution_n{n}.json"), &out)?;
        }
    }
    let pass = failures.is_empty();
    Ok(Outcome {
        pass,
        summary: format!(
            "solve {}: {} scheme(s), max ‖u‖·c/‖f‖ = {:.6} ({})",
            op.name(),
            ns.len(),
            worst,
            if pass { "pass" } else { "fail" }
        ),
        failures,
        outputs,
    })
}

pub fn cmd_converge(cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    let ns = cfg.scheme()?.n_pairs.clone();
    if ns.is_empty() {
        return Err(Error::Config {
            key: "scheme.n_pairs".into(),
            message: "list must not be empty".into(),
        });
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config {
            key: "scheme.n_pairs".into(),
            message: "list must be strictly ascending".into(),
        });
    }
    let (problem, op, _) = build_problem(cfg)?;
    if let Some(&last) = ns.last() {
        if last > op.pair_count() {
            return Err(Error::Config {
                key: "scheme.n_pairs".into(),
                message: format!("{last} pairs requested, resolution provides {}", op.pair_count()),
            });
        }
    }
    let (f, exc, full) = forcing(cfg, &problem)?;
    let full = match full {
        Some(full) => full,
        None => SchemeSymbol::full(&problem)?,
    };
    let opts = SweepOptions {
        excited_pairs: exc.map(|e| e.n_pairs.max(e.n_kernel)),
        seed: Some(seed),
        n_kernel: cfg.scheme.as_ref().and_then(|s| s.n_kernel),
        ..Default::default()
    };
    let table = convergence_sweep(&problem, &full, &f, &ns, &opts)?;
    let mut failures: Vec<String> = table.failing_checks().into_iter().map(String::from).collect();
    for r in table.rows.iter().filter(|r| !r.pass) {
        failures.push(format!("row n = {}", r.n));
    }
    let mut outputs = Outputs::default();
    if cfg.output.wants(Format::Csv) {
        outputs.add("convergence.csv", table.to_csv_string().into_bytes());
    }
    if cfg.output.wants(Format::Json) {
        outputs.add_json("convergence.json", &table)?;
    }
    let pass = table.pass();
    let last = table.rows.last().expect("nonempty");
    Ok(Outcome {
        pass,
        summary: format!(
            "converge {}: n = {:?}, err_H(n = {}) = {:.3e} ({})",
            op.name(),
            ns,
            last.n,
            last.err_h,
            if pass { "pass" } else { "fail" }
        ),
        failures,
        outputs,
    })
}

#[derive(Serialize)]
struct InstanceSummary {
    index: usize,
    seed: u64,
    m: usize,
    pass: bool,
    max_margin: f64,
    uniform_bound: f64,
    sup_embedding_norm: f64,
    table: String,
}

#[derive(Serialize)]
struct Failure {
    index: usize,
    seed: u64,
    m: usize,
    n: Option<usize>,
    checks: Vec<String>,
}

#[derive(Serialize)]
struct OracleSummary {
    seed: u64,
    count: usize,
    m_min: usize,
    m_max: usize,
    c: f64,
    d: f64,
    passed: usize,
    failed: usize,
    max_margin: f64,
    failures: Vec<Failure>,
    instances: Vec<InstanceSummary>,
}

/// Dimension of an oracle instance, a deterministic function of its seed.
pub fn oracle_dimension(instance_seed: u64, m_min: usize, m_max: usize) -> usize {
    m_min + (derive_seed(instance_seed, 7) % (m_max - m_min + 1) as u64) as usize
}

pub fn cmd_oracle(cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    let o = cfg.oracle()?;
    let seeds: Vec<u64> = match &o.replay {
        Some(r) if !r.is_empty() => r.clone(),
        _ => (0..o.count as u64).map(|i| derive_seed(seed, i)).collect(),
    };
    let reports = seeds
        .par_iter()
        .map(|&s| {
            let m = oracle_dimension(s, o.m_min, o.m_max);
            let inst = OracleInstance::generate(m, o.c, o.d, s)?;
            oracle_resolvent_convergence(&inst, &random_datum(m, derive_seed(s, 1)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut outputs = Outputs::default();
    let mut instances = Vec::with_capacity(reports.len());
    let mut failures = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let table = format!("oracle_tables/instance_{i:03}.csv");
        if cfg.output.wants(Format::Csv) {
            outputs.add(&table, r.table.to_csv_string().into_bytes());
        }
        if !r.pass() {
            failures.push(Failure {
                index: i,
                seed: r.seed,
                m: r.m,
                n: r.first_failing_n(),
                checks: r.table.failing_checks().into_iter().map(String::from).collect(),
            });
        }
        instances.push(InstanceSummary {
            index: i,
            seed: r.seed,
            m: r.m,
            pass: r.pass(),
            max_margin: r.max_margin(),
            uniform_bound: r.uniform_bound,
            sup_embedding_norm: r.sup_embedding_norm,
            table,
        });
    }
    let max_margin = reports.iter().map(|r| r.max_margin()).fold(f64::NEG_INFINITY, f64::max);
    let failed = failures.len();
    let messages: Vec<String> = failures
        .iter()
        .map(|f| {
            format!(
                "instance {} (seed {}, m = {}, n = {:?}): {}",
                f.index,
                f.seed,
                f.m,
                f.n,
                f.checks.join(", ")
            )
        })
        .collect();
    let summary = OracleSummary {
        seed,
        count: reports.len(),
        m_min: o.m_min,
        m_max: o.m_max,
        c: o.c,
        d: o.d,
        passed: reports.len() - failed,
        failed,
        max_margin,
        failures,
        instances,
    };
    if cfg.output.wants(Format::Json) {
        outputs.add_json("oracle_report.json", &summary)?;
    }
    Ok(Outcome {
        pass: failed == 0,
        summary: format!(
            "oracle: {}/{} instances pass, max margin {:.3e}",
            reports.len() - failed,
            reports.len(),
            max_margin
        ),
        failures: messages,
        outputs,
    })
}
