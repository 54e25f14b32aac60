mod common;

use cgft::measures::FiniteMeasure;
use cgft::point::add;
use cgft::BaseMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-r..r)).collect()
}

#[test]
fn change_of_measure_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, base) in common::bases() {
        let tol = if base.is_quadrature_backed() { 1e-7 } else { 1e-10 };
        for _ in 0..1000 {
            let th = draw(&mut rng, base.dim(), 2.0);
            let ga = draw(&mut rng, base.dim(), 2.0);
            let lhs = base.tilt_logmoment(&th, &ga).unwrap();
            let rhs = base.cgf(&add(&th, &ga)) - base.cgf(&th);
            assert!((lhs - rhs).abs() <= tol, "{name}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn cgf_is_strictly_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (name, base) in common::bases() {
        for _ in 0..500 {
            let a = draw(&mut rng, base.dim(), 3.0);
            let b = draw(&mut rng, base.dim(), 3.0);
            let t: f64 = rng.gen_range(0.05..0.95);
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            let chord = t * base.cgf(&a) + (1.0 - t) * base.cgf(&b);
            assert!(base.cgf(&mid) <= chord + 1e-12, "{name}");
            // strict once the endpoints are well separated
            let dist: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            if dist > 0.5 {
                assert!(base.cgf(&mid) < chord, "{name}: not strict");
            }
        }
    }
}

#[test]
fn centered_bases_have_nonnegative_cgf() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, base) in common::bases() {
        let centered = base.recentered().unwrap();
        for _ in 0..500 {
            let th = draw(&mut rng, base.dim(), 5.0);
            assert!(centered.cgf(&th) >= -1e-15, "{name}");
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-5;
    for (name, base) in common::bases() {
        for _ in 0..100 {
            let th = draw(&mut rng, base.dim(), 2.0);
            let g = base.cgf_grad(&th).unwrap();
            for i in 0..base.dim() {
                let mut p = th.clone();
                let mut m = th.clone();
                p[i] += h;
                m[i] -= h;
                let fd = (base.cgf(&p) - base.cgf(&m)) / (2.0 * h);
                let rel = (fd - g[i]).abs() / g[i].abs().max(1e-3);
                assert!(rel <= 1e-6, "{name} axis {i}: fd {fd} grad {}", g[i]);
            }
        }
    }
}

#[test]
fn tilted_mean_is_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, base) in common::bases() {
        let tol = if base.is_quadrature_backed() { 1e-7 } else { 1e-10 };
        for _ in 0..200 {
            let th = draw(&mut rng, base.dim(), 2.0);
            let mean = base.tilt(&th).unwrap().mean();
            let grad = base.cgf_grad(&th).unwrap();
            for (a, b) in mean.iter().zip(&grad) {
                assert!((a - b).abs() <= tol, "{name}");
            }
        }
    }
}

#[test]
fn gaussian_tilt_mean_with_default_nodes() {
    let g = BaseMeasure::gaussian(1).unwrap();
    assert!((g.tilt(&[2.0]).unwrap().mean()[0] - 2.0).abs() < 1e-8);
}
