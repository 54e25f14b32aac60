//! Acceptance criteria 1-10. Runs as a plain binary so that every criterion
//! prints its PASS/FAIL line; exits non-zero if any criterion fails.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::path::Path;
use std::process::Command;

use cgft::ctransform::{
    concavity_residual, grid_tolerance, transform_bwd, transform_fwd, uniform_grid_1d, GridFn, DEFAULT_CHECK_TOL,
    DEFAULT_LIPSCHITZ,
};
use cgft::embedding::{
    exp_concavity_check, gateaux_fd, portfolio_map, verify_theorem7, Embedding, Tolerances, DEFAULT_FD_STEPS,
};
use cgft::point::add;
use cgft::transport::{certify, solve_entropic, solve_exact, CERTIFICATE_TOL};
use cgft::{tv_distance, BaseMeasure, DiscreteMeasure, FiniteMeasure, MeasureRep, NodeSet, TransportProblem};
use cgft_cli::suites::{default_grid, random_concave, random_problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn gaussian40() -> BaseMeasure {
    BaseMeasure::gaussian_with_nodes(1, 40).unwrap()
}

fn quadrature_base() -> BaseMeasure {
    let ns = NodeSet::new(
        "three-point",
        vec![vec![-1.0, 0.5], vec![0.25, -2.0], vec![2.0, 1.0]],
        vec![0.2, 0.5, 0.3],
    )
    .unwrap();
    BaseMeasure::quadrature(ns).unwrap()
}

fn rational_problem(base: &BaseMeasure, p: &oracle::RationalProblem) -> TransportProblem {
    let src = DiscreteMeasure::new(p.source.iter().map(|x| vec![*x]).collect(), p.source_weights()).unwrap();
    let tgt = DiscreteMeasure::new(p.target.iter().map(|x| vec![*x]).collect(), p.target_weights()).unwrap();
    TransportProblem::new(src, tgt, base.clone()).unwrap()
}

/// The 50 problems shared by criteria 1 and 9.
fn criterion1_problems() -> Vec<oracle::RationalProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..50).map(|_| oracle::random_problem(&mut rng, 7)).collect()
}

fn c1_gaussian_w2() -> Outcome {
    let base = BaseMeasure::gaussian(1).map_err(e)?;
    let mut worst = 0.0f64;
    for p in criterion1_problems() {
        let prob = rational_problem(&base, &p);
        let cost = prob.cost_matrix();
        let m = p.target.len();
        let brute = oracle::brute_force(&|i, j| cost[i * m + j], &p.source_counts, &p.target_counts);
        let (plan, _) = solve_exact(&prob).map_err(e)?;
        worst = worst.max((plan.objective - brute).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut monotone = true;
    for _ in 0..20 {
        let n = rng.gen_range(2..=7);
        let sorted = |rng: &mut ChaCha8Rng| {
            let mut xs: Vec<f64> = (0..n).map(|k| k as f64 + rng.gen_range(0.0..0.9) - 3.0).collect();
            xs.sort_by(f64::total_cmp);
            DiscreteMeasure::uniform(xs.into_iter().map(|x| vec![x]).collect()).unwrap()
        };
        let prob = TransportProblem::new(sorted(&mut rng), sorted(&mut rng), base.clone()).map_err(e)?;
        let (plan, _) = solve_exact(&prob).map_err(e)?;
        monotone &= (0..n).all(|i| (plan.get(i, i) - 1.0 / n as f64).abs() <= 1e-12);
    }
    check(worst <= 1e-9 && monotone, format!("max |objective - brute force| = {worst:e} over 50 problems, monotone plans: {monotone}"))
}

fn c2_simplex_tilt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for d in [1usize, 2, 5] {
        let base = BaseMeasure::simplex(d).map_err(e)?;
        let nodes = base.node_set().map_err(e)?.clone();
        for _ in 0..1000 {
            let th: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let z = 1.0 + th.iter().map(|t| t.exp()).sum::<f64>();
            let tilt = base.tilt(&th).map_err(e)?;
            for (k, x) in nodes.nodes().iter().enumerate() {
                let want = match x.iter().position(|v| *v == 1.0) {
                    Some(i) => th[i].exp() / z,
                    None => 1.0 / z,
                };
                worst = worst.max((tilt.mass(k) - want).abs());
            }
        }
    }
    check(worst <= 1e-12, format!("max mass error {worst:e} over 3000 draws"))
}

fn c3_change_of_measure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let atoms = vec![vec![-1.0], vec![0.5], vec![2.0]];
    let cases = [
        (BaseMeasure::simplex(1).unwrap(), 1e-10),
        (BaseMeasure::simplex(2).unwrap(), 1e-10),
        (BaseMeasure::simplex(5).unwrap(), 1e-10),
        (BaseMeasure::discrete(DiscreteMeasure::new(atoms, vec![0.3, 0.5, 0.2]).unwrap()).unwrap(), 1e-10),
        (gaussian40(), 1e-7),
    ];
    let mut lines = vec![];
    let mut ok = true;
    for (base, tol) in cases {
        let d = base.dim();
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let th: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let ga: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lhs = base.tilt_logmoment(&th, &ga).map_err(e)?;
            worst = worst.max((lhs - (base.cgf(&add(&th, &ga)) - base.cgf(&th))).abs());
        }
        ok &= worst <= tol;
        lines.push(format!("{worst:.1e}/{tol:.0e}"));
    }
    check(ok, format!("worst/tolerance per base: {}", lines.join(", ")))
}

fn c4_transform_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut dominance, mut idem, mut order_ok) = (f64::INFINITY, 0.0f64, true);
    let mut idem_tol = f64::INFINITY;
    for base in [BaseMeasure::gaussian(1).unwrap(), BaseMeasure::simplex(2).unwrap()] {
        let grid = default_grid(base.dim());
        idem_tol = idem_tol.min(grid_tolerance(&grid, DEFAULT_LIPSCHITZ));
        for _ in 0..100 {
            let psi = GridFn::from_fn(grid.clone(), |_| rng.gen_range(-5.0..5.0)).map_err(e)?;
            let conj = transform_fwd(&psi, &grid, &base).map_err(e)?.function;
            let back = transform_bwd(&conj, &grid, &base).map_err(e)?.function;
            for (dd, p) in back.values().iter().zip(psi.values()) {
                dominance = dominance.min(dd - p);
            }
            idem = idem.max(concavity_residual(&back, &base).map_err(e)?);

            let hi = GridFn::new(grid.clone(), psi.values().iter().map(|v| v + rng.gen_range(0.0..1.0)).collect())
                .map_err(e)?;
            let conj_hi = transform_fwd(&hi, &grid, &base).map_err(e)?.function;
            order_ok &= conj.values().iter().zip(conj_hi.values()).all(|(lo, hi)| lo >= hi);
        }
    }
    check(
        dominance >= -1e-12 && idem <= idem_tol && order_ok,
        format!("min(psi00 - psi) = {dominance:e}, idempotence residual {idem:e} (tolerance {idem_tol:e}), order reversal exact: {order_ok}"),
    )
}

fn c5_certificates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bases = [
        ("gaussian:1", BaseMeasure::gaussian(1).unwrap()),
        ("gaussian:2", BaseMeasure::gaussian(2).unwrap()),
        ("simplex:2", BaseMeasure::simplex(2).unwrap()),
        ("quadrature", quadrature_base()),
    ];
    let mut worst = 0.0f64;
    let mut all = true;
    for (_, base) in &bases {
        for _ in 0..50 {
            let prob = random_problem(base, &mut rng).map_err(e)?;
            let (plan, duals) = solve_exact(&prob).map_err(e)?;
            let cert = certify(&plan, &duals, &prob).map_err(e)?;
            worst = worst.max(cert.max_slack);
            all &= cert.pass;
        }
    }
    check(all && worst <= CERTIFICATE_TOL, format!("max slack {worst:e} over 200 problems on 4 bases"))
}

fn quarter_square() -> GridFn {
    GridFn::from_fn(uniform_grid_1d(-6.0, 6.0, 241), |x| x[0] * x[0] / 4.0).unwrap()
}

fn c6_theorem5() -> Outcome {
    let emb = Embedding::new(gaussian40(), quarter_square(), None, DEFAULT_LIPSCHITZ).map_err(e)?;
    let tol = emb.grid_tolerance();
    let mut worst_a = 0.0f64;
    for alpha in emb.psi().grid() {
        worst_a = worst_a.max(emb.theorem5_residual(alpha).map_err(e)?);
    }
    let phi1 = emb.phi().phi_eval(&emb.base().tilt(&[1.0]).map_err(e)?).map_err(e)?.value;
    let closed = (phi1 + 0.25).abs() <= tol;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_b = 0.0f64;
    let mut within = true;
    for base in [gaussian40(), BaseMeasure::simplex(1).unwrap(), BaseMeasure::simplex(2).unwrap(), quadrature_base()] {
        let grid = default_grid(base.dim());
        for _ in 0..20 {
            let psi = random_concave(&base, &grid, &mut rng).map_err(e)?;
            let emb = Embedding::new(base.clone(), psi, None, DEFAULT_LIPSCHITZ).map_err(e)?;
            for alpha in &grid {
                let r = emb.theorem5_residual(alpha).map_err(e)?;
                worst_b = worst_b.max(r);
                within &= r <= emb.grid_tolerance();
            }
        }
    }
    check(
        worst_a <= tol && closed && within,
        format!("(a) max residual {worst_a:e}, phi(mu_1) = {phi1:.6} vs -0.25 (tolerance {tol:e}); (b) max residual {worst_b:e} over 80 random psi"),
    )
}

fn c7_theorem7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut embeddings = vec![Embedding::new(gaussian40(), quarter_square(), None, DEFAULT_LIPSCHITZ).map_err(e)?];
    for base in [gaussian40(), BaseMeasure::simplex(1).unwrap(), BaseMeasure::simplex(2).unwrap(), quadrature_base()] {
        let grid = default_grid(base.dim());
        let psi = random_concave(&base, &grid, &mut rng).map_err(e)?;
        embeddings.push(Embedding::new(base, psi, None, DEFAULT_LIPSCHITZ).map_err(e)?);
    }
    let (mut pairs, mut failed) = (0usize, 0usize);
    let (mut norm, mut tv, mut sup, mut fd) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for (k, emb) in embeddings.iter().enumerate() {
        for c in verify_theorem7(emb, emb.psi().grid(), DEFAULT_CHECK_TOL, 100, 700 + k as u64).map_err(e)? {
            pairs += 1;
            failed += usize::from(!c.pass);
            norm = norm.max(c.normalization);
            tv = tv.max(c.tv);
            sup = sup.min(c.supergrad_min);
            fd = fd.max(c.fd_error);
        }
    }

    // closed-form spot check: Gaussian, ψ(x) = x²/4, α = 1, θ = 1/2
    let emb = &embeddings[0];
    let sg = emb.supergradient(&[1.0], &[0.5], DEFAULT_CHECK_TOL).map_err(e)?;
    let nodes = emb.base().node_set().map_err(e)?.clone();
    let h_err = nodes
        .nodes()
        .iter()
        .zip(sg.values())
        .map(|(x, h)| (h - (-x[0] / 2.0 + 0.375).exp()).abs() / h)
        .fold(0.0f64, f64::max);
    let pi = portfolio_map(&sg);
    let pi_tv = tv_distance(&pi, &emb.base().tilt(&[0.5]).map_err(e)?).map_err(e)?;
    let n01 = MeasureRep::base_measure(nodes);
    let limit = gateaux_fd(&sg, &n01, &DEFAULT_FD_STEPS).map_err(e)?.extrapolated;
    let limit_err = (limit - (0.5f64.exp() - 1.0)).abs();
    let spot = h_err <= 1e-12 && pi_tv <= 1e-8 && limit_err <= 1e-6;

    check(
        pairs > 0 && failed == 0 && spot,
        format!(
            "{pairs} pairs, {failed} failing; max normalization {norm:.1e}, max tv {tv:.1e}, min supergradient gap {sup:.1e}, max fd error {fd:.1e}; spot check h rel err {h_err:.1e}, TV(pi_1, N(0.5,1)) {pi_tv:.1e}, Gateaux limit err {limit_err:.1e}"
        ),
    )
}

fn c8_exp_concavity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::INFINITY;
    let mut ok = true;
    let mut bases = vec![Embedding::new(gaussian40(), quarter_square(), None, DEFAULT_LIPSCHITZ).map_err(e)?];
    for base in [BaseMeasure::simplex(1).unwrap(), BaseMeasure::simplex(2).unwrap(), quadrature_base()] {
        let grid = default_grid(base.dim());
        let psi = random_concave(&base, &grid, &mut rng).map_err(e)?;
        bases.push(Embedding::new(base, psi, None, DEFAULT_LIPSCHITZ).map_err(e)?);
    }
    for emb in &bases {
        let rep = exp_concavity_check(emb.phi(), 200, &mut rng).map_err(e)?;
        worst = worst.min(rep.worst_violation);
        ok &= rep.worst_violation >= -Tolerances::for_base(emb.base()).exp_concavity;
    }
    check(ok, format!("min midpoint gap {worst:e} over 200 pairs on each of 4 bases"))
}

fn c9_sinkhorn() -> Outcome {
    let base = BaseMeasure::gaussian(1).map_err(e)?;
    let problems = criterion1_problems();
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_ratio = 0.0f64;
    for eps in [1e-1, 1e-2, 1e-3] {
        for p in &problems {
            let prob = rational_problem(&base, p);
            let (exact, _) = solve_exact(&prob).map_err(e)?;
            let (ent, _) = solve_entropic(&prob, eps).map_err(|err| format!("eps {eps}: {err}"))?;
            let (n, m) = prob.shape();
            let bound = eps * ((n * m) as f64).ln() + 1e-6;
            let gap = ent.objective - exact.objective;
            worst_margin = worst_margin.max(gap - bound);
            worst_ratio = worst_ratio.max(gap / bound);
        }
    }
    check(worst_margin <= 0.0, format!("max gap/bound = {worst_ratio:.3}, max (gap - bound) = {worst_margin:e} over 150 solves"))
}

fn cgft(args: &[&str], dir: &Path) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_cgft")).args(args).current_dir(dir).output().expect("run cgft");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn c10_cli() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e)?;
    let dir = tmp.path();
    let (c1, s1) = cgft(&["--base", "simplex:2", "--seed", "7", "--json", "--out", "r1", "verify"], dir);
    let (c2, s2) = cgft(&["--base", "simplex:2", "--seed", "7", "--json", "--out", "r2", "verify"], dir);
    let r1 = std::fs::read(dir.join("r1/verify_report.json")).map_err(e)?;
    let r2 = std::fs::read(dir.join("r2/verify_report.json")).map_err(e)?;
    let identical = r1 == r2 && s1 == s2;

    std::fs::write(dir.join("p.json"), r#"{"atoms": [[0.0], [1.0]], "weights": [0.5, 0.5]}"#).map_err(e)?;
    std::fs::write(dir.join("q.json"), r#"{"atoms": [[2.0], [3.0]], "weights": [0.5, 0.5]}"#).map_err(e)?;
    let (c_solve, _) = cgft(&["--base", "gaussian:1", "--out", "s", "solve", "--source", "p.json", "--target", "q.json"], dir);
    let plan = std::fs::read_to_string(dir.join("s/plan.csv")).unwrap_or_default();
    let plan_ok = plan == "i,j,mass,cost\n0,0,0.5,2.0\n1,1,0.5,2.0\n";

    let (c_missing, _) =
        cgft(&["--base", "gaussian:1", "--out", "m", "solve", "--source", "none.json", "--target", "q.json"], dir);
    let no_artifacts = !dir.join("m").exists();

    check(
        identical && c1 == 0 && c2 == 0 && c_solve == 0 && plan_ok && c_missing == 1 && no_artifacts,
        format!(
            "reports identical: {identical}; exit codes verify {c1}/{c2}, solve {c_solve} (plan rows ok: {plan_ok}), missing file {c_missing} (no artifacts: {no_artifacts})"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Gaussian cost recovers W2", c1_gaussian_w2),
        ("simplex tilt closed form", c2_simplex_tilt),
        ("change-of-measure identity", c3_change_of_measure),
        ("transform laws", c4_transform_laws),
        ("optimality certificates", c5_certificates),
        ("phi/psi correspondence", c6_theorem5),
        ("supergradients and portfolio maps", c7_theorem7),
        ("exponential concavity", c8_exp_concavity),
        ("Sinkhorn vs exact", c9_sinkhorn),
        ("CLI determinism and exit codes", c10_cli),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let (verdict, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{verdict} criterion {} ({name}): {detail} [{:.1}s]", k + 1, start.elapsed().as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
