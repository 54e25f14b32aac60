//! Randomized invariant suites behind `cgft verify`.
//!
//! Each suite draws from its own ChaCha stream of the run seed, so suites are
//! reproducible individually and the report is byte-identical across runs.

use anyhow::Result;
use cgft::ctransform::{
    concavity_residual, grid_tolerance, tensor_grid, transform_bwd, transform_fwd, uniform_grid_1d, GridFn,
};
use cgft::embedding::{
    exp_concavity_check, random_measure, verify_theorem7, Embedding, Tolerances,
};
use cgft::point::{add, l1_norm};
use cgft::transport::{certify, solve_exact, CERTIFICATE_TOL};
use cgft::{mixture, tv_distance, BaseMeasure, DiscreteMeasure, FiniteMeasure, Point, TransportProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub cases: usize,
    /// Largest violation found; zero when every case holds exactly.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SuiteResult {
    fn from_violations(suite: &str, tolerance: f64, violations: &[f64]) -> Self {
        let worst = violations
            .iter()
            .map(|v| if v.is_nan() { f64::INFINITY } else { *v })
            .fold(0.0, f64::max);
        Self { suite: suite.into(), cases: violations.len(), worst_violation: worst, tolerance, pass: worst <= tolerance }
    }

    /// As `from_violations`, but an empty case list fails.
    fn nonempty(suite: &str, tolerance: f64, violations: &[f64]) -> Self {
        let mut r = Self::from_violations(suite, tolerance, violations);
        r.pass &= r.cases > 0;
        r
    }
}

/// Case counts for each suite.
#[derive(Debug, Clone, Copy)]
pub struct SuiteSizes {
    pub measures: usize,
    pub cgf_draws: usize,
    pub grid_fns: usize,
    pub problems: usize,
    pub generators: usize,
    pub nu_per_pair: usize,
    pub exp_concavity_trials: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self {
            measures: 200,
            cgf_draws: 1000,
            grid_fns: 100,
            problems: 50,
            generators: 4,
            nu_per_pair: 20,
            exp_concavity_trials: 200,
        }
    }
}

/// Grid used for transforms and embeddings in dimension `d`.
pub fn default_grid(d: usize) -> Vec<Point> {
    match d {
        1 => uniform_grid_1d(-2.0, 2.0, 41),
        2 => tensor_grid(&axis(-2.0, 0.5, 9), 2),
        3 => tensor_grid(&axis(-2.0, 1.0, 5), 3),
        _ => tensor_grid(&axis(-1.0, 1.0, 3), d),
    }
}

fn axis(lo: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + step * k as f64).collect()
}

fn stream(seed: u64, suite: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite);
    rng
}

fn draw(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Point {
    (0..d).map(|_| rng.gen_range(-r..r)).collect()
}

/// A random Λ₀-concave function: the backward transform of a random ρ.
pub fn random_concave(base: &BaseMeasure, grid: &[Point], rng: &mut ChaCha8Rng) -> Result<GridFn> {
    let rho = GridFn::from_fn(grid.to_vec(), |_| rng.gen_range(-0.5..0.5))?;
    Ok(transform_bwd(&rho, grid, base)?.function)
}

/// A random problem with 1..=6 atoms per side in [-2, 2]^d.
pub fn random_problem(base: &BaseMeasure, rng: &mut ChaCha8Rng) -> Result<TransportProblem> {
    let d = base.dim();
    let side = |rng: &mut ChaCha8Rng| -> Result<DiscreteMeasure> {
        loop {
            let n = rng.gen_range(1..=6);
            let atoms: Vec<Point> = (0..n).map(|_| draw(rng, d, 2.0)).collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            if let Ok(m) = DiscreteMeasure::normalized(atoms, weights) {
                return Ok(m);
            }
        }
    };
    let p = side(rng)?;
    let q = side(rng)?;
    Ok(TransportProblem::new(p, q, base.clone())?)
}

/// Run every suite on `base`. Gaussian bases should already carry enough
/// nodes for the embedding (see [`crate::base_spec::for_embedding`]).
pub fn run_all(base: &BaseMeasure, seed: u64, pair_tol: f64, sizes: SuiteSizes) -> Result<Vec<SuiteResult>> {
    let mut out = Vec::new();
    out.extend(measures(base, seed, sizes)?);
    out.extend(cgf(base, seed, sizes)?);
    out.extend(ctransform(base, seed, sizes)?);
    out.extend(transport(base, seed, sizes)?);
    out.extend(embedding(base, seed, pair_tol, sizes)?);
    Ok(out)
}

fn measures(base: &BaseMeasure, seed: u64, sizes: SuiteSizes) -> Result<Vec<SuiteResult>> {
    let mut rng = stream(seed, 1);
    let nodes = base.node_set()?.clone();
    let d = base.dim();
    let (mut unit, mut bound, mut affine, mut triangle) = (vec![], vec![], vec![], vec![]);
    for _ in 0..sizes.measures {
        let a = random_measure(&nodes, &mut rng);
        let b = random_measure(&nodes, &mut rng);
        let c = random_measure(&nodes, &mut rng);
        unit.push((a.exp_moment(&vec![0.0; d])? - 1.0).abs());

        let th = draw(&mut rng, d, 2.0);
        let j = l1_norm(&th).ceil() as u32;
        let sn: f64 = (0..d).map(|i| a.seminorm(i, j)).sum::<cgft::Result<f64>>()?;
        bound.push(((a.exp_moment(&th)? - sn) / sn.max(1.0)).max(0.0));

        let t: f64 = rng.gen();
        let mix = mixture(&a, &b, t)?;
        let dev = (0..nodes.len())
            .map(|k| (mix.mass(k) - ((1.0 - t) * a.mass(k) + t * b.mass(k))).abs())
            .fold(0.0, f64::max);
        affine.push(dev);

        let (ab, bc, ac) = (tv_distance(&a, &b)?, tv_distance(&b, &c)?, tv_distance(&a, &c)?);
        triangle.push((ac - ab - bc).max(0.0));
    }
    Ok(vec![
        SuiteResult::from_violations("measures.exp_moment_at_zero", 1e-12, &unit),
        SuiteResult::from_violations("measures.seminorm_bound", 1e-12, &bound),
        SuiteResult::from_violations("measures.mixture_affine", 1e-14, &affine),
        SuiteResult::from_violations("measures.tv_triangle", 1e-14, &triangle),
    ])
}

fn cgf(base: &BaseMeasure, seed: u64, sizes: SuiteSizes) -> Result<Vec<SuiteResult>> {
    let mut rng = stream(seed, 2);
    let d = base.dim();
    let identity_tol = if base.is_quadrature_backed() { 1e-7 } else { 1e-10 };
    let (mut identity, mut convex, mut grad, mut tilt_mean) = (vec![], vec![], vec![], vec![]);
    for k in 0..sizes.cgf_draws {
        let th = draw(&mut rng, d, 2.0);
        let ga = draw(&mut rng, d, 2.0);
        let lhs = base.tilt_logmoment(&th, &ga)?;
        identity.push((lhs - (base.cgf(&add(&th, &ga)) - base.cgf(&th))).abs());

        let mid: Point = th.iter().zip(&ga).map(|(a, b)| 0.5 * (a + b)).collect();
        convex.push((base.cgf(&mid) - 0.5 * (base.cgf(&th) + base.cgf(&ga))).max(0.0));

        if k % 10 == 0 {
            let g = base.cgf_grad(&th)?;
            let h = 1e-5;
            for i in 0..d {
                let (mut p, mut m) = (th.clone(), th.clone());
                p[i] += h;
                m[i] -= h;
                let fd = (base.cgf(&p) - base.cgf(&m)) / (2.0 * h);
                grad.push((fd - g[i]).abs() / g[i].abs().max(1e-3));
            }
            let mean = base.tilt(&th)?.mean();
            tilt_mean.push(mean.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    Ok(vec![
        SuiteResult::from_violations("cgf.change_of_measure", identity_tol, &identity),
        SuiteResult::from_violations("cgf.convexity", 1e-12, &convex),
        SuiteResult::from_violations("cgf.gradient", 1e-6, &grad),
        SuiteResult::from_violations("cgf.tilt_mean", identity_tol, &tilt_mean),
    ])
}

fn ctransform(base: &BaseMeasure, seed: u64, sizes: SuiteSizes) -> Result<Vec<SuiteResult>> {
    let mut rng = stream(seed, 3);
    let grid = default_grid(base.dim());
    let gtol = grid_tolerance(&grid, cgft::ctransform::DEFAULT_LIPSCHITZ);
    let (mut dominance, mut order, mut shift, mut idem) = (vec![], vec![], vec![], vec![]);
    for _ in 0..sizes.grid_fns {
        let psi = GridFn::from_fn(grid.clone(), |_| rng.gen_range(-5.0..5.0))?;
        let conj = transform_fwd(&psi, &grid, base)?.function;
        let back = transform_bwd(&conj, &grid, base)?.function;
        dominance.push(back.values().iter().zip(psi.values()).map(|(dd, p)| p - dd).fold(0.0, f64::max));

        let hi = GridFn::new(grid.clone(), psi.values().iter().map(|v| v + rng.gen_range(0.0..2.0)).collect())?;
        let conj_hi = transform_fwd(&hi, &grid, base)?.function;
        order.push(conj_hi.values().iter().zip(conj.values()).map(|(h, l)| h - l).fold(0.0, f64::max));

        let c: f64 = rng.gen_range(-10.0..10.0);
        let shifted = transform_fwd(&psi.shifted(c), &grid, base)?.function;
        shift.push(
            shifted
                .values()
                .iter()
                .zip(conj.values())
                .map(|(s, v)| (s - (v - c)).abs() / (1.0 + v.abs() + c.abs()))
                .fold(0.0, f64::max),
        );

        let concave = random_concave(base, &grid, &mut rng)?;
        idem.push(concavity_residual(&concave, base)?);
    }
    Ok(vec![
        SuiteResult::from_violations("ctransform.dominance", 1e-12, &dominance),
        SuiteResult::from_violations("ctransform.order_reversal", 0.0, &order),
        SuiteResult::from_violations("ctransform.shift_equivariance", 1e-12, &shift),
        SuiteResult::from_violations("ctransform.idempotence", gtol, &idem),
    ])
}

fn transport(base: &BaseMeasure, seed: u64, sizes: SuiteSizes) -> Result<Vec<SuiteResult>> {
    let mut rng = stream(seed, 4);
    let (mut cert, mut duality, mut marg, mut feas) = (vec![], vec![], vec![], vec![]);
    for _ in 0..sizes.problems {
        let prob = random_problem(base, &mut rng)?;
        let (plan, duals) = solve_exact(&prob)?;
        cert.push(certify(&plan, &duals, &prob)?.max_slack);
        duality.push((duals.dual_objective(&prob) - plan.objective).abs());
        marg.push(plan.marginal_violation(&prob));
        feas.push(duals.feasibility_violation(&prob));
    }
    Ok(vec![
        SuiteResult::from_violations("transport.certificate", CERTIFICATE_TOL, &cert),
        SuiteResult::from_violations("transport.strong_duality", 1e-8, &duality),
        SuiteResult::from_violations("transport.marginals", 1e-9, &marg),
        SuiteResult::from_violations("transport.dual_feasibility", 1e-8, &feas),
    ])
}

fn embedding(base: &BaseMeasure, seed: u64, pair_tol: f64, sizes: SuiteSizes) -> Result<Vec<SuiteResult>> {
    let mut rng = stream(seed, 5);
    let grid = default_grid(base.dim());
    let tol = Tolerances::for_base(base);
    let mut thm5 = vec![];
    let mut thm5_tol = 0.0;
    let (mut norm, mut tv, mut sup, mut fd) = (vec![], vec![], vec![], vec![]);
    let mut expc = vec![];
    for g in 0..sizes.generators {
        let psi = random_concave(base, &grid, &mut rng)?;
        let emb = Embedding::new(base.clone(), psi, None, cgft::ctransform::DEFAULT_LIPSCHITZ)?;
        thm5_tol = emb.grid_tolerance();
        for alpha in &grid {
            thm5.push(emb.theorem5_residual(alpha)?);
        }
        // a spread of interior and boundary α keeps the pair count modest
        let alphas: Vec<Point> = grid.iter().step_by(grid.len() / 8 + 1).cloned().collect();
        let cases = verify_theorem7(&emb, &alphas, pair_tol, sizes.nu_per_pair, rng.gen())?;
        for c in cases {
            norm.push(c.normalization);
            tv.push(c.tv);
            sup.push((-c.supergrad_min).max(0.0));
            fd.push(c.fd_error);
        }
        if g == 0 {
            let rep = exp_concavity_check(emb.phi(), sizes.exp_concavity_trials, &mut rng)?;
            expc = vec![0.0; rep.trials];
            if let Some(first) = expc.first_mut() {
                *first = (-rep.worst_violation).max(0.0);
            }
        }
    }
    Ok(vec![
        SuiteResult::nonempty("embedding.theorem5", thm5_tol, &thm5),
        SuiteResult::nonempty("embedding.normalization", tol.normalization, &norm),
        SuiteResult::nonempty("embedding.portfolio_map", tol.portfolio_tv, &tv),
        SuiteResult::nonempty("embedding.supergradient", tol.supergradient, &sup),
        SuiteResult::nonempty("embedding.gateaux", tol.gateaux, &fd),
        SuiteResult::nonempty("embedding.exp_concavity", tol.exp_concavity, &expc),
    ])
}
