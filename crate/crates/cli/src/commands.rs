//! The four subcommands. Each returns its artifacts and a pass flag; nothing
//! touches the filesystem until the caller writes the artifacts.

use std::path::Path;

use anyhow::{Context, Result};
use cgft::cgf::BaseWire;
use cgft::ctransform::{transform_bwd, transform_fwd, Transform, DEFAULT_LIPSCHITZ};
use cgft::embedding::{
    exp_concavity_check, theorem5_forward_residual, verify_theorem7, Embedding, ExpConcavityReport,
    Theorem7Case, Tolerances,
};
use cgft::transport::{certify, monge_extract, solve_entropic, solve_exact, Certificate, MongeOutcome, SUPPORT_THRESHOLD};
use cgft::{BaseMeasure, DiscreteMeasure, DualPotentials, Error, GridFn, Point, TransportProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::io::{csv_table, fmt_f64, fmt_point, read_json, to_json, Artifacts};
use crate::suites::{run_all, SuiteResult, SuiteSizes};

/// Result of a subcommand: files to write, the main report, and whether every
/// requested check passed.
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub report: String,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

/// Marginal tolerance for entropic plans.
const ENTROPIC_MARGINAL_TOL: f64 = 1e-9;

#[derive(Serialize)]
struct SolveReport {
    seed: u64,
    base: BaseWire,
    method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    objective: f64,
    marginal_violation: f64,
    duals: DualPotentials,
    certificate: Option<Certificate>,
    monge: MongeOutcome,
    pass: bool,
}

pub fn solve(base: BaseMeasure, source: &Path, target: &Path, entropic: Option<f64>, seed: u64) -> Result<Outcome> {
    let p: DiscreteMeasure = read_json(source)?;
    let q: DiscreteMeasure = read_json(target)?;
    let prob = TransportProblem::new(p, q, base.clone()).context("invalid transport problem")?;
    let (plan, duals, certificate) = match entropic {
        None => {
            let (plan, duals) = solve_exact(&prob)?;
            let cert = certify(&plan, &duals, &prob)?;
            (plan, duals, Some(cert))
        }
        Some(eps) => {
            let (plan, duals) = solve_entropic(&prob, eps)?;
            (plan, duals, None)
        }
    };
    let marginal_violation = plan.marginal_violation(&prob);
    let pass = match &certificate {
        Some(c) => c.pass,
        None => marginal_violation <= ENTROPIC_MARGINAL_TOL,
    };
    let cost = prob.cost_matrix();
    let (_, m) = prob.shape();
    let rows = plan
        .support(SUPPORT_THRESHOLD)
        .into_iter()
        .map(|(i, j, mass)| vec![i.to_string(), j.to_string(), fmt_f64(mass), fmt_f64(cost[i * m + j])]);
    let mut artifacts = Artifacts::default();
    artifacts.add("plan.csv", csv_table(&["i", "j", "mass", "cost"], rows));

    let mut summary = vec![format!("objective {}", fmt_f64(plan.objective))];
    match &certificate {
        Some(c) => summary.push(format!(
            "certificate {} (max slack {:e}, tolerance {:e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.max_slack,
            c.tolerance
        )),
        None => summary.push(format!("marginal violation {marginal_violation:e}")),
    }
    let report = to_json(&SolveReport {
        seed,
        base: base.to_wire(),
        method: if entropic.is_some() { "entropic" } else { "exact" },
        epsilon: entropic,
        objective: plan.objective,
        marginal_violation,
        monge: monge_extract(&plan),
        duals,
        certificate,
        pass,
    });
    artifacts.add("solve_report.json", report.clone());
    Ok(Outcome { artifacts, report, summary, warnings: vec![], pass })
}

#[derive(Serialize)]
struct TransformReport<'a> {
    seed: u64,
    base: BaseWire,
    direction: &'static str,
    #[serde(flatten)]
    function: &'a GridFn,
    argmin: &'a [usize],
    boundary_warnings: &'a [usize],
}

pub fn transform(base: BaseMeasure, input: &Path, out_grid: Option<&Path>, backward: bool, seed: u64) -> Result<Outcome> {
    let f: GridFn = read_json(input)?;
    let grid: Vec<Point> = match out_grid {
        Some(p) => read_json(p)?,
        None => f.grid().to_vec(),
    };
    let t: Transform = if backward { transform_bwd(&f, &grid, &base)? } else { transform_fwd(&f, &grid, &base)? };
    let direction = if backward { "backward" } else { "forward" };
    let report = to_json(&TransformReport {
        seed,
        base: base.to_wire(),
        direction,
        function: &t.function,
        argmin: &t.argmin,
        boundary_warnings: &t.boundary_hits,
    });
    let rows = t
        .function
        .grid()
        .iter()
        .zip(t.function.values())
        .zip(&t.argmin)
        .map(|((p, v), a)| vec![fmt_point(p), fmt_f64(*v), a.to_string()]);
    let mut artifacts = Artifacts::default();
    artifacts.add("conjugate.json", report.clone());
    artifacts.add("conjugate.csv", csv_table(&["point", "value", "argmin"], rows));
    let warnings = t
        .boundary_hits
        .iter()
        .map(|&k| {
            format!(
                "argmin for output point [{}] lies on the input grid boundary; the infimum may be truncated",
                fmt_point(&t.function.grid()[k])
            )
        })
        .collect();
    let summary = vec![format!("{direction} transform on {} points, {} boundary warnings", grid.len(), t.boundary_hits.len())];
    Ok(Outcome { artifacts, report, summary, warnings, pass: true })
}

#[derive(Serialize)]
struct Theorem5Report {
    concavity_residual: f64,
    max_residual: f64,
    /// Concavity residual of `α ↦ φ(μ_α) + Λ₀(α)` rebuilt from φ.
    reconstruction_residual: f64,
    tolerance: f64,
    residuals: Vec<(Point, f64)>,
    pass: bool,
}

#[derive(Serialize)]
struct Theorem7Report {
    tolerances: Tolerances,
    cases: Vec<Theorem7Case>,
    pass: bool,
}

#[derive(Serialize)]
struct EmbedReport {
    seed: u64,
    base: BaseWire,
    pair_tolerance: f64,
    theorem5: Theorem5Report,
    theorem7: Theorem7Report,
    exp_concavity: ExpConcavityCheck,
    pass: bool,
}

#[derive(Serialize)]
struct ExpConcavityCheck {
    #[serde(flatten)]
    report: ExpConcavityReport,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct EmbedOptions {
    pub pair_tol: f64,
    pub lipschitz: f64,
    pub nu_count: usize,
    pub trials: usize,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self { pair_tol: cgft::ctransform::DEFAULT_CHECK_TOL, lipschitz: DEFAULT_LIPSCHITZ, nu_count: 20, trials: 200 }
    }
}

#[derive(Serialize)]
struct RejectedReport {
    seed: u64,
    base: BaseWire,
    error: String,
    concavity_residual: f64,
    pass: bool,
}

pub fn embed(
    base: BaseMeasure,
    psi_path: &Path,
    alpha_path: Option<&Path>,
    theta_path: Option<&Path>,
    opts: EmbedOptions,
    seed: u64,
) -> Result<Outcome> {
    let psi: GridFn = read_json(psi_path)?;
    let alphas: Vec<Point> = match alpha_path {
        Some(p) => read_json(p)?,
        None => psi.grid().to_vec(),
    };
    let theta_grid: Option<Vec<Point>> = theta_path.map(read_json).transpose()?;
    for a in &alphas {
        psi.lookup(a).with_context(|| format!("alpha grid point {a:?} is not on the psi grid"))?;
    }

    let emb = match Embedding::new(base.clone(), psi, theta_grid.as_deref(), opts.lipschitz) {
        Ok(e) => e,
        Err(Error::Precondition { what, residual }) => {
            // a non-concave ψ is a failed check, not bad input
            let report = to_json(&RejectedReport {
                seed,
                base: base.to_wire(),
                error: what.clone(),
                concavity_residual: residual,
                pass: false,
            });
            let mut artifacts = Artifacts::default();
            artifacts.add("embed_report.json", report.clone());
            return Ok(Outcome {
                artifacts,
                report,
                summary: vec![format!("psi rejected: {what} (residual {residual:e})")],
                warnings: vec![],
                pass: false,
            });
        }
        Err(e) => return Err(e.into()),
    };

    let residuals: Vec<(Point, f64)> =
        alphas.iter().map(|a| Ok((a.clone(), emb.theorem5_residual(a)?))).collect::<cgft::Result<_>>()?;
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    let (_, reconstruction_residual, _) = theorem5_forward_residual(emb.phi(), emb.psi().grid(), opts.lipschitz)?;
    let tolerance = emb.grid_tolerance();
    let theorem5 = Theorem5Report {
        concavity_residual: emb.concavity_residual(),
        max_residual,
        reconstruction_residual,
        tolerance,
        pass: max_residual <= tolerance && reconstruction_residual <= tolerance,
        residuals,
    };

    let cases = verify_theorem7(&emb, &alphas, opts.pair_tol, opts.nu_count, seed)?;
    let tolerances = Tolerances::for_base(emb.base());
    let theorem7 = Theorem7Report { pass: !cases.is_empty() && cases.iter().all(|c| c.pass), cases, tolerances };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ec = exp_concavity_check(emb.phi(), opts.trials, &mut rng)?;
    let exp_concavity = ExpConcavityCheck {
        pass: ec.worst_violation >= -tolerances.exp_concavity,
        tolerance: tolerances.exp_concavity,
        report: ec,
    };

    let pass = theorem5.pass && theorem7.pass && exp_concavity.pass;
    let summary = vec![
        format!("theorem5 {} (max residual {:e}, tolerance {:e})", verdict(theorem5.pass), max_residual, tolerance),
        format!("theorem7 {} ({} pairs)", verdict(theorem7.pass), theorem7.cases.len()),
        format!("exp_concavity {} (worst {:e})", verdict(exp_concavity.pass), exp_concavity.report.worst_violation),
    ];
    let t5_rows: Vec<Vec<String>> =
        theorem5.residuals.iter().map(|(a, r)| vec![fmt_point(a), fmt_f64(*r)]).collect();
    let t7_rows: Vec<Vec<String>> = theorem7
        .cases
        .iter()
        .map(|c| {
            vec![
                fmt_point(&c.alpha),
                fmt_point(&c.theta),
                fmt_f64(c.tv),
                fmt_f64(c.normalization),
                fmt_f64(c.supergrad_min),
                fmt_f64(c.fd_error),
                c.pass.to_string(),
            ]
        })
        .collect();
    let report = to_json(&EmbedReport {
        seed,
        base: emb.base().to_wire(),
        pair_tolerance: opts.pair_tol,
        theorem5,
        theorem7,
        exp_concavity,
        pass,
    });
    let mut artifacts = Artifacts::default();
    artifacts.add("embed_report.json", report.clone());
    artifacts.add("theorem5.csv", csv_table(&["alpha", "residual"], t5_rows));
    artifacts.add(
        "theorem7.csv",
        csv_table(&["alpha", "theta", "tv", "normalization", "supergrad_min", "fd_error", "pass"], t7_rows),
    );
    Ok(Outcome { artifacts, report, summary, warnings: vec![], pass })
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    base: BaseWire,
    pair_tolerance: f64,
    suites: Vec<SuiteResult>,
    pass: bool,
}

pub fn verify(base: BaseMeasure, pair_tol: f64, seed: u64, sizes: SuiteSizes) -> Result<Outcome> {
    let suites = run_all(&base, seed, pair_tol, sizes)?;
    let pass = suites.iter().all(|s| s.pass);
    let summary = suites
        .iter()
        .map(|s| format!("{} {} (cases {}, worst {:e}, tolerance {:e})", verdict(s.pass), s.suite, s.cases, s.worst_violation, s.tolerance))
        .collect();
    let rows: Vec<Vec<String>> = suites
        .iter()
        .map(|s| vec![s.suite.clone(), s.cases.to_string(), fmt_f64(s.worst_violation), fmt_f64(s.tolerance), s.pass.to_string()])
        .collect();
    let report = to_json(&VerifyReport { seed, base: base.to_wire(), pair_tolerance: pair_tol, suites, pass });
    let mut artifacts = Artifacts::default();
    artifacts.add("verify_report.json", report.clone());
    artifacts.add("verify_suites.csv", csv_table(&["suite", "cases", "worst_violation", "tolerance", "pass"], rows));
    Ok(Outcome { artifacts, report, summary, warnings: vec![], pass })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
