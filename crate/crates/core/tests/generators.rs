use gte_core::generators::{gen_general_planted, gen_gte_instance, gen_m_tensor, gen_te_instance, generate, GenKind, GenSpec};
use gte_core::DenseTensor;
use proptest::prelude::*;

/// Collatz-Wielandt bounds on the spectral radius of a nonnegative tensor
/// after `iters` steps of the normalized power iteration
/// `x <- (B x^{m-1})^{1/(m-1)}`.
fn spectral_radius_bounds(b: &DenseTensor, iters: usize) -> (f64, f64) {
    let m1 = (b.order() - 1) as i32;
    let mut x = vec![1.0; b.dim()];
    let mut bounds = (0.0f64, f64::INFINITY);
    for _ in 0..iters {
        let y = b.contract_to_vector(&x).unwrap();
        let ratios: Vec<f64> = y.iter().zip(&x).map(|(yi, xi)| yi / xi.powi(m1)).collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        bounds = (bounds.0.max(lo), bounds.1.min(hi));
        x = y.iter().map(|v| v.powf(1.0 / f64::from(m1))).collect();
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
    }
    bounds
}

#[test]
fn m_tensor_diagonal_dominates_spectral_radius() {
    for (order, dim) in [(3, 5), (4, 4), (5, 3)] {
        for seed in 0..10 {
            let a = gen_m_tensor(order, dim, 0.1, seed).unwrap();
            let stride = (0..order).fold(0, |acc, _| acc * dim + 1);
            // any s >= max diagonal writes A = sI - B with B >= 0
            let s = (0..dim).map(|i| a.entries()[i * stride]).fold(f64::NEG_INFINITY, f64::max);
            let mut b = a.scaled(-1.0).unwrap().into_entries();
            for i in 0..dim {
                b[i * stride] += s;
            }
            assert!(b.iter().all(|&v| v >= -1e-12));
            let b = DenseTensor::new(order, dim, b.iter().map(|v| v.max(0.0)).collect()).unwrap();
            let (lo, hi) = spectral_radius_bounds(&b, 50);
            assert!(lo <= hi * (1.0 + 1e-9));
            assert!(hi < s, "rho(B) <= {hi} but s = {s}");
        }
    }
}

#[test]
fn planted_instances_solve_exactly() {
    for seed in 0..10 {
        let inst = gen_general_planted(&[4, 3, 2], 6, (-5.0, 5.0), seed).unwrap();
        let x = inst.x_star.as_ref().unwrap();
        assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
        assert!(inst.problem.residual_norm(x).unwrap() < 1e-14);
        assert!((inst.problem.max_abs_entry() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn te_instances_are_scaled_with_positive_rhs() {
    let inst = gen_te_instance(3, 10, 4).unwrap();
    assert!(inst.x_star.is_none());
    assert!(inst.problem.rhs().iter().all(|&v| v > 0.0));
    assert_eq!(inst.problem.max_abs_entry(), 1.0);
    assert!(inst.omega > 1.0);
}

#[test]
fn gte_kinds_dispatch() {
    let m = gen_gte_instance(&[4, 3, 2], 5, GenKind::MTensor, 1).unwrap();
    assert_eq!(m.problem.orders(), vec![4, 3, 2]);
    assert!(m.x_star.is_none());
    let g = gen_gte_instance(&[4, 3, 2], 5, GenKind::GeneralRandom, 1).unwrap();
    let p = gen_gte_instance(&[4, 3, 2], 5, GenKind::PlantedGeneral, 1).unwrap();
    assert_eq!(g, p);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_seed_same_instance(seed in any::<u64>(), dim in 1usize..6, planted in any::<bool>()) {
        let kind = if planted { GenKind::PlantedGeneral } else { GenKind::MTensor };
        let spec = GenSpec::new(kind, vec![3, 2], dim, seed);
        prop_assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = GenSpec { seed: seed.wrapping_add(1), ..spec.clone() };
        prop_assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }
}
