mod common;

use common::{fd_jacobian, naive_vector, random_gte, random_tensor, rng, uniform};
use gte_core::{DenseTensor, GteProblem};
use proptest::prelude::*;

#[test]
fn jacobian_matches_central_differences() {
    let mut r = rng(5);
    for trial in 0..20 {
        let dim = 2 + trial % 9;
        let p = random_gte(&mut r, &[4, 3, 2], dim);
        for _ in 0..30 {
            let x = uniform(&mut r, dim, -1.0, 1.0);
            let jac = p.jacobian(&x).unwrap();
            let fd = fd_jacobian(&p, &x, 1e-5);
            let err = (&jac - &fd).norm() / jac.norm();
            assert!(err <= 1e-5, "dim {dim}: relative Frobenius error {err:e}");
        }
    }
}

#[test]
fn residual_is_sum_of_contractions_minus_b() {
    let mut r = rng(8);
    let coeffs: Vec<DenseTensor> = [5, 3, 2].iter().map(|&o| random_tensor(&mut r, o, 3)).collect();
    let b = uniform(&mut r, 3, -1.0, 1.0);
    let p = GteProblem::new(coeffs.clone(), b.clone()).unwrap();
    let x = uniform(&mut r, 3, -1.0, 1.0);
    let mut want = vec![0.0; 3];
    for a in &coeffs {
        for (w, v) in want.iter_mut().zip(naive_vector(a, &x)) {
            *w += v;
        }
    }
    for (w, bi) in want.iter_mut().zip(&b) {
        *w -= bi;
    }
    let got = p.residual(&x).unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn coefficients_are_semi_symmetrized_on_construction() {
    let mut r = rng(2);
    let a = random_tensor(&mut r, 4, 3);
    assert!(!a.is_semi_symmetric());
    let p = GteProblem::new(vec![a], vec![0.0; 3]).unwrap();
    assert!(p.coeffs()[0].is_semi_symmetric());
}

#[test]
fn orders_must_strictly_decrease() {
    let mut r = rng(1);
    let a = random_tensor(&mut r, 3, 2);
    let b = random_tensor(&mut r, 3, 2);
    assert!(GteProblem::new(vec![a.clone(), b], vec![0.0; 2]).is_err());
    assert!(GteProblem::new(vec![a.clone()], vec![0.0; 3]).is_err());
    assert!(GteProblem::new(vec![], vec![0.0; 2]).is_err());
    let c = random_tensor(&mut r, 2, 3);
    assert!(GteProblem::new(vec![a, c], vec![0.0; 2]).is_err());
}

#[test]
fn scaling_all_zero_is_degenerate() {
    let z = DenseTensor::zeros(3, 2).unwrap();
    assert!(GteProblem::new(vec![z], vec![0.0; 2]).unwrap().scale().is_err());
}

fn problem_and_point() -> impl Strategy<Value = (GteProblem, Vec<f64>)> {
    (1usize..=4, any::<u64>()).prop_map(|(dim, seed)| {
        let mut r = rng(seed);
        let p = random_gte(&mut r, &[4, 3, 2], dim);
        let x = uniform(&mut r, dim, -2.0, 2.0);
        (p, x)
    })
}

proptest! {
    #[test]
    fn scaled_residual_is_residual_over_omega((p, x) in problem_and_point()) {
        let (s, omega) = p.scale().unwrap();
        prop_assert_eq!(omega, p.max_abs_entry());
        prop_assert!((s.max_abs_entry() - 1.0).abs() < 1e-15);
        let f = p.residual(&x).unwrap();
        let g = s.residual(&x).unwrap();
        for (a, b) in f.iter().zip(g.iter()) {
            prop_assert!((a / omega - b).abs() <= 1e-12 * (1.0 + a.abs() / omega));
        }
    }

    #[test]
    fn scaling_is_invariant_to_uniform_multiples((p, _x) in problem_and_point(), k in 0.01f64..100.0) {
        let coeffs = p.coeffs().iter().map(|a| a.scaled(k).unwrap()).collect();
        let rhs = p.rhs().iter().map(|v| v * k).collect();
        let q = GteProblem::new(coeffs, rhs).unwrap();
        let (sp, _) = p.scale().unwrap();
        let (sq, _) = q.scale().unwrap();
        for (a, b) in sp.coeffs().iter().zip(sq.coeffs()) {
            for (u, v) in a.entries().iter().zip(b.entries()) {
                prop_assert!((u - v).abs() <= 4.0 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn jacobian_is_linear_in_direction((p, x) in problem_and_point()) {
        let dim = p.dim();
        let d: Vec<f64> = (0..dim).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let h = 1e-6;
        let xp: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - h * b).collect();
        let fd = (p.residual(&xp).unwrap() - p.residual(&xm).unwrap()) / (2.0 * h);
        let jd = p.jacobian(&x).unwrap() * nalgebra::DVector::from_column_slice(&d);
        prop_assert!((fd - &jd).norm() <= 1e-5 * (1.0 + jd.norm()));
    }
}
